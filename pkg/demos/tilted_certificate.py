"""Build the tilted-family certificate and compare it with the other scenarios.

Run: python demos/tilted_certificate.py
"""

import numpy as np

from steercert import certify_analytic as ca
from steercert.model import Family, SteeringInequality, lhs_bound, quantum_bound

for alpha in (0.0, 0.5, 1.0):
    ineq = SteeringInequality(Family.TILTED_ANALOG, alpha)
    cert = ca.certify_tilted_analog(alpha)
    print(f"alpha={alpha}: LHS {lhs_bound(ineq):.4f}, quantum {quantum_bound(ineq):.4f}, "
          f"F >= {cert.s:.6f} S {cert.tau:+.6f}, worst G margin {cert.worst_margin:.1e}")
    grid = np.linspace(lhs_bound(ineq), quantum_bound(ineq), 5)
    for obs, dd, one, di in ca.comparison_table(alpha, grid):
        print(f"   S={obs:.4f}  DD {dd:.4f}  1SDI {one:.4f}  DI {di:.4f}")
