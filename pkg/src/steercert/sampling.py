"""Testing games built from steering inequalities and sample-size planning.

For the trusted-marginal families the inequality can be read as a game in
which Bob guesses Alice's outcome. In a Pauli round Bob announces the
outcome b of B_k and Alice measures

    A_b = cos(2 theta) Z + (-1)^b sin(2 theta) P_k,

winning when she obtains +1. In the Z round Alice and Bob win when their
outcomes agree. With rounds weighted by the inequality's coefficients the
winning probability is p = 1/2 + S/(2 S_Q).
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .certify_analytic import THREE_SETTING_S, RobustnessCertificate, tilted_s_tau
from .model import (Family, SteeringInequality, bob_matrices, ideal_bob_settings, quantum_bound,
                    target_theta, violation)
from .qmat import I2, X, Y, Z


class Regime(enum.Enum):
    COINCIDING = "COINCIDING"
    QUADRATIC = "QUADRATIC"


class InfeasiblePlan(ValueError):
    """Raised when c * epsilon >= 1 or the inputs are out of range."""


def guessing_probability(ineq: SteeringInequality, observed: float) -> float:
    """Winning probability of the game associated with the inequality.

    Marginal families: 1/2 + S/(2 S_Q). Tilted family: the XOR-game average
    1/2 + S/8 over its four correlators.
    """
    sq = quantum_bound(ineq)
    if observed > sq + 1e-12:
        raise ValueError(f"observed value {observed:g} exceeds the quantum bound {sq:g}")
    if ineq.family is Family.TILTED_ANALOG:
        return 0.5 + observed / 8
    return 0.5 + observed / (2 * sq)


def _game_angle_matrices(ineq: SteeringInequality, pauli: np.ndarray):
    """Alice's pair A_0, A_1 for the round that uses Alice's ``pauli``."""
    t = target_theta(ineq)
    return (np.cos(2 * t) * Z + np.sin(2 * t) * pauli, np.cos(2 * t) * Z - np.sin(2 * t) * pauli)


def game_identity_residual(alpha: float, theta: Optional[float] = None, bob: Optional[np.ndarray] = None) -> float:
    """Residual of (a/2) Z + X B = (r/2)(A_0 B^0 + A_1 B^1) = (r/2)(2 A_0^0 B^0 + 2 A_1^0 B^1 - I).

    Here r = sqrt(4 + a^2), B^0, B^1 are the projectors of Bob's observable B
    (default X) and A_i^0 = (I + A_i)/2. ``theta`` defaults to the value with
    sin(2 theta) = 2/r; any other theta generally breaks the identity.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    r = np.sqrt(4 + alpha * alpha)
    t = 0.5 * np.arcsin(2 / r) if theta is None else theta
    b = X if bob is None else np.asarray(bob, dtype=complex)
    d = b.shape[0]
    b0, b1 = (np.eye(d) + b) / 2, (np.eye(d) - b) / 2
    a0 = np.cos(2 * t) * Z + np.sin(2 * t) * X
    a1 = np.cos(2 * t) * Z - np.sin(2 * t) * X
    lhs = alpha / 2 * np.kron(Z, np.eye(d)) + np.kron(X, b)
    mid = r / 2 * (np.kron(a0, b0) + np.kron(a1, b1))
    rhs = r / 2 * (2 * np.kron((I2 + a0) / 2, b0) + 2 * np.kron((I2 + a1) / 2, b1) - np.eye(2 * d))
    return float(max(np.linalg.norm(lhs - mid), np.linalg.norm(mid - rhs)))


@dataclass(frozen=True)
class SamplePlan:
    epsilon: float
    delta: float
    c: float
    n_required: int
    regime: Regime

    @property
    def label(self) -> str:
        return "order-of-magnitude" if self.regime is Regime.QUADRATIC else "exact"


def default_slope(ineq: SteeringInequality) -> float:
    """Slope s of the analytic certificate available for this inequality."""
    if ineq.family is Family.TILTED_ANALOG:
        return tilted_s_tau(ineq.alpha)[0]
    if ineq.alpha == 0 and ineq.beta == 1:
        if ineq.family is Family.TWO_TRUSTED:
            return 1 / (4 - 2 * np.sqrt(2))
        if ineq.family is Family.THREE_TRUSTED:
            return THREE_SETTING_S
    raise ValueError(f"no analytic certificate for {ineq.family.value} at alpha={ineq.alpha:g}, "
                     f"beta={ineq.beta:g}; pass the slope explicitly")


def sample_count(ineq: SteeringInequality, epsilon: float, delta: float,
                 certificate: Union[RobustnessCertificate, float, None] = None) -> SamplePlan:
    """Number of copies that certify average infidelity below epsilon at significance delta.

    Args:
        ineq: Inequality; trusted-marginal families give games whose quantum
            and algebraic values coincide, the tilted family does not.
        epsilon, delta: Targets in (0, 1).
        certificate: Certificate or slope s; defaults to ``default_slope``.

    Raises:
        InfeasiblePlan: for out-of-range targets, c * epsilon >= 1, or a
            family without a known testing game.
    """
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise InfeasiblePlan("epsilon and delta must lie in (0, 1)")
    if ineq.family.marginal_on_bob:
        raise InfeasiblePlan(f"no testing game is known for {ineq.family.value}")
    if isinstance(certificate, RobustnessCertificate):
        s = certificate.s
    elif certificate is None:
        s = default_slope(ineq)
    else:
        s = float(certificate)
    c = float(1 / (2 * s * quantum_bound(ineq)))
    if c * epsilon >= 1:
        raise InfeasiblePlan(f"c * epsilon = {c * epsilon:.4g} >= 1")
    if ineq.family is Family.TILTED_ANALOG:
        n = math.ceil(math.log(1 / delta) / (c * epsilon) ** 2)
        return SamplePlan(epsilon, delta, c, max(n, 1), Regime.QUADRATIC)
    n = math.ceil(math.log(1 / delta) / -math.log1p(-c * epsilon))
    return SamplePlan(epsilon, delta, c, max(n, 1), Regime.COINCIDING)


# ---------------------------------------------------------------------------
# Monte-Carlo simulation of the game


def _round_tables(ineq: SteeringInequality, rho: np.ndarray, bob):
    """Per round type: weight and the winning probability on ``rho``."""
    bs = bob_matrices(bob)
    d = bs[0].shape[0]
    n_pauli = ineq.n_settings - 1
    r = np.sqrt(n_pauli ** 2 + ineq.alpha ** 2)
    rounds = []
    # Z round: outcomes agree
    agree = (np.eye(2 * d) + np.kron(Z, bs[0])) / 2
    rounds.append((ineq.beta, float(np.real(np.trace(rho @ agree)))))
    for k, pauli in ((1, X), (2, Y))[:n_pauli]:
        a0, a1 = _game_angle_matrices(ineq, pauli)
        p0, p1 = (np.eye(d) + bs[k]) / 2, (np.eye(d) - bs[k]) / 2
        win = np.kron((I2 + a0) / 2, p0) + np.kron((I2 + a1) / 2, p1)
        rounds.append((r / n_pauli, float(np.real(np.trace(rho @ win)))))
    w = np.array([x[0] for x in rounds])
    return w / w.sum(), np.clip([x[1] for x in rounds], 0.0, 1.0)


def simulate_game(ineq: SteeringInequality, rho: np.ndarray, trials: int, rng: np.random.Generator,
                  bob=None) -> float:
    """Empirical winning frequency of the game over ``trials`` rounds.

    Round types are drawn with the game's weights; each round's outcome is a
    Bernoulli draw with the Born-rule winning probability.
    """
    if ineq.family is Family.TILTED_ANALOG or ineq.family.marginal_on_bob:
        raise ValueError("the game is defined for the trusted-marginal families")
    bob = ideal_bob_settings(ineq) if bob is None else bob
    weights, wins = _round_tables(ineq, rho, bob)
    counts = rng.multinomial(trials, weights)
    return float(sum(rng.binomial(n, p) for n, p in zip(counts, wins)) / trials)


def game_value(ineq: SteeringInequality, rho: np.ndarray, bob=None) -> float:
    """Exact winning probability of the game on rho."""
    bob = ideal_bob_settings(ineq) if bob is None else bob
    weights, wins = _round_tables(ineq, rho, bob)
    return float(weights @ wins)


def expected_from_violation(ineq: SteeringInequality, rho: np.ndarray, bob=None) -> float:
    bob = ideal_bob_settings(ineq) if bob is None else bob
    return guessing_probability(ineq, violation(ineq, rho, bob))
