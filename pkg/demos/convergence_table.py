"""
Convergence in two and three dimensions
=======================================

Refine the mesh with tau = h and print the six error measures with their
observed orders.  The 3D table stays small so it runs in well under a minute.
"""

from kgzfem import catalog, convergence_study
from kgzfem.analysis import MEASURES


def show(rows):
    print("   M  " + "  ".join(f"{m:>14s}" for m in MEASURES))
    for r in rows:
        errs = "  ".join(f"{r.errors[m]:9.3e}" + (f"({r.orders[m]:.2f})" if r.orders else "      ")
                         for m in MEASURES)
        print(f"{r.M:4d}  {errs}")


show(convergence_study(catalog("mms2d"), [8, 16, 32, 64]))
print()
show(convergence_study(catalog("mms3d"), [4, 8, 16]))
