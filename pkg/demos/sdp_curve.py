"""Minimum SWAP fidelity versus observed violation from the moment-matrix SDP.

Run: python demos/sdp_curve.py
"""

import numpy as np

from steercert import certify_analytic as ca
from steercert import certify_sdp as cs
from steercert.model import Family, SteeringInequality, lhs_bound, quantum_bound, target_theta

ineq = SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0)
grid = np.linspace(lhs_bound(ineq), quantum_bound(ineq), 8)
# The SDP bounds the fidelity reached by the fixed SWAP extraction; the
# analytic line is the three-setting channel certificate, whose PSD
# conditions fail on part of the grid (see the verify report).
print("   S      SDP f_min   analytic s S + tau")
for obs, f_min, status, _ in cs.sweep_curve(ineq, target_theta(ineq), grid):
    analytic = ca.THREE_SETTING_S * obs + 1 - 3 * ca.THREE_SETTING_S
    print(f"{obs:7.4f}  {f_min:9.5f}   {analytic:9.5f}   {status}")
