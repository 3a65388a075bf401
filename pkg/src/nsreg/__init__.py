"""Numerical diagnostics for partial regularity of Navier-Stokes flows.

Modules:

- ``exponents``: admissibility of pressure exponents, θ selection, Hoelder chain.
- ``lorentz``: distribution functions, Lorentz quasinorms, weak-norm interpolation.
- ``grid``: space-time grids, synthetic fields, parabolic rescaling, NSFD files.
- ``localq``: scale-invariant local quantities over parabolic cylinders.
- ``regularity``: regularity scans, decay recursion, local-inequality ratio harness.
- ``hausdorff``: Vitali selection, premeasure estimates, covering bound.
- ``energy``: δ-energy ledger and the pressure-term majorant.
"""

__version__ = "0.1.0"
