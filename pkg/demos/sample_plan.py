"""Copies needed to certify fidelity, and a simulated run of the testing game.

Run: python demos/sample_plan.py
"""

import numpy as np

from steercert import model, sampling
from steercert.model import Family, SteeringInequality

ineq = SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0)
for eps in (0.1, 0.05, 0.01):
    plan = sampling.sample_count(ineq, eps, 0.01)
    print(f"eps={eps:<5} delta=0.01  N={plan.n_required} ({plan.label})")

rng = np.random.default_rng(0)
for v in (1.0, 0.95, 0.85):
    rho = model.noisy_state(np.pi / 4, v)
    p = sampling.expected_from_violation(ineq, rho)
    emp = sampling.simulate_game(ineq, rho, 20_000, rng)
    print(f"visibility {v}: expected win rate {p:.4f}, simulated {emp:.4f}")
