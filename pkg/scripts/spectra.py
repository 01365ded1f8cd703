"""Spectrum of the deflated operator with and without the eps weight.

Half of the eigenvalues are moved to zero. With the tuned eps the rest sit
in the right half plane; a badly detuned eps pushes some to the left.
"""
import numpy as np

from igahelm.analysis import spectrum_study
from igahelm.assembly import build_system
from igahelm.precond.deflation import DEFAULT_EPSILON
from igahelm.problems import mp1b, resolution_for

for k in (50, 250):
    for p in (2, 5):
        system = build_system(mp1b(k), resolution_for(k, 0.625), p)
        scale = abs(system.A).sum(axis=0).max()
        for eps in (0.0, DEFAULT_EPSILON, 5.0):
            lam = spectrum_study(system, "PA", epsilon=eps).eigenvalues
            zero = np.abs(lam) < 1e-6 * scale
            print(f"k={k:3d} p={p} eps={eps:5.2f} n={system.n:4d} zeros={zero.sum():4d} "
                  f"min Re/|A|={lam[~zero].real.min() / scale:+.3e}")
