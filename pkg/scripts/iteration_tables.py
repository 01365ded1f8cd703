"""Iteration counts for the 1D preconditioner comparison at moderate k.

Prints D, D_eps and C_ex counts side by side with the reference values.
"""
from igahelm.harness import PreconditionerConfig, load_reference, run_single

ref = {(c.table, c.label, c.k, c.p): c.value for c in load_reference("reference/iterations.csv")}
cases = [("table2", PreconditionerConfig("D")), ("table3", PreconditionerConfig("D_eps")),
         ("table3", PreconditionerConfig("C_ex"))]
for k in (1e2, 1e3, 1e4):
    print(f"k = {k:g}")
    for table, pc in cases:
        got = [run_single("MP1B", k, p, pc, compute_error=False).cell for p in range(1, 6)]
        pub = [ref[(table, pc.label(), k, p)] for p in range(1, 6)]
        print(f"  {pc.label():6s} ours {' '.join(f'{g:>3s}' for g in got)}   "
              f"reference {' '.join(f'{v:>3s}' for v in pub)}")
