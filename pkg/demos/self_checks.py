"""Built-in numerical self-checks.

Every identity the package relies on has a randomized check that
compares the closed-form implementation against an independent oracle
(dense linear algebra, quadrature, or Monte Carlo).  `gpexpect
validate` runs all six from the command line; here we call two of them
directly and look at what a result carries.
"""

from gpexpect.validation import check_four_term_collapse, check_rank1_updates

res = check_four_term_collapse(seed=7)
print(f"{res.name}: {'PASS' if res.passed else 'FAIL'}")
print(f"  max deviation {res.max_deviation:.3e} vs tolerance {res.tolerance:.1e}")
print(f"  {res.detail}")

res = check_rank1_updates(seed=7)
print(f"\n{res.name}: {'PASS' if res.passed else 'FAIL'}")
print(f"  max deviation {res.max_deviation:.3e} vs tolerance {res.tolerance:.1e}")
print(f"  {res.detail}")
