"""Steering inequalities, target states and ideal measurements.

Five families are supported. In all of them Alice (first tensor factor) is
the trusted party measuring Pauli operators, and Bob (second factor) holds
the untrusted dichotomic observables B_0, B_1 and possibly B_2:

===================  ============================================
family               operator
===================  ============================================
TILTED_ANALOG        a Z + Z(B0 + B1) + X(B0 - B1)
TWO_TRUSTED          a Z + b Z B0 + X B1
TWO_UNTRUSTED        a B0 + b Z B0 + X B1
THREE_TRUSTED        a Z + b Z B0 + X B1 + Y B2
THREE_UNTRUSTED      a B0 + b Z B0 + X B1 + Y B2
===================  ============================================

"Trusted"/"untrusted" refers to which party carries the marginal term.
"""

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from . import qmat
from .qmat import I2, X, Y, Z

REGION_TOL = 1e-12


class Family(enum.Enum):
    TILTED_ANALOG = "tilted-analog"
    TWO_TRUSTED = "two-trusted"
    TWO_UNTRUSTED = "two-untrusted"
    THREE_TRUSTED = "three-trusted"
    THREE_UNTRUSTED = "three-untrusted"

    @property
    def n_settings(self) -> int:
        return 3 if self in (Family.THREE_TRUSTED, Family.THREE_UNTRUSTED) else 2

    @property
    def marginal_on_bob(self) -> bool:
        return self in (Family.TWO_UNTRUSTED, Family.THREE_UNTRUSTED)

    @classmethod
    def parse(cls, name: str) -> "Family":
        key = name.strip().lower().replace("_", "-")
        for fam in cls:
            if fam.value == key or fam.name.lower().replace("_", "-") == key:
                return fam
        raise ValueError(f"unknown family {name!r}; choose from {[f.value for f in cls]}")


class InvalidParameters(ValueError):
    """Raised when (alpha, beta) lie outside a family's valid region."""


def region_violations(family: Family, alpha: float, beta: float) -> list:
    """List the violated parameter constraints (empty when valid)."""
    bad = []
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        return ["alpha and beta must be finite"]
    if alpha < 0:
        bad.append("alpha >= 0")
    if family is Family.TILTED_ANALOG:
        if alpha >= 2:
            bad.append("alpha < 2")
        if abs(beta - 1) > REGION_TOL:
            bad.append("beta = 1")
    elif beta <= 0:
        bad.append("beta > 0")
    if family is Family.TWO_UNTRUSTED and beta * beta < alpha * alpha + 1 - REGION_TOL:
        bad.append("beta^2 >= alpha^2 + 1")
    if family is Family.THREE_UNTRUSTED and beta < np.sqrt(4 + alpha * alpha) - REGION_TOL:
        bad.append("beta >= sqrt(4 + alpha^2)")
    return bad


@dataclass(frozen=True)
class SteeringInequality:
    family: Family
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        bad = region_violations(self.family, self.alpha, self.beta)
        if bad:
            raise InvalidParameters(
                f"{self.family.value} with alpha={self.alpha:g}, beta={self.beta:g} "
                f"violates: {', '.join(bad)}")

    @property
    def n_settings(self) -> int:
        return self.family.n_settings


@dataclass(frozen=True)
class BobSettings:
    """Qubit observables for Bob, stored as unit Bloch vectors."""

    blochs: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        vecs = []
        for n in self.blochs:
            n = np.asarray(n, dtype=float)
            if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > 1e-12:
                raise ValueError("each Bloch vector must be a unit 3-vector")
            vecs.append(tuple(float(v) for v in n))
        object.__setattr__(self, "blochs", tuple(vecs))

    @property
    def observables(self) -> list:
        return [qmat.bloch_observable(n) for n in self.blochs]

    def __len__(self):
        return len(self.blochs)

    @classmethod
    def from_angles(cls, *pairs) -> "BobSettings":
        """Build from (polar, azimuth) pairs with polar measured from +z."""
        return cls(tuple((np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)) for t, p in pairs))


BobLike = Union[BobSettings, Sequence[np.ndarray]]


def bob_matrices(bob: BobLike) -> list:
    """Return Bob's observables as matrices (any dimension is accepted)."""
    if isinstance(bob, BobSettings):
        return bob.observables
    return [np.asarray(b, dtype=complex) for b in bob]


def target_theta(ineq: SteeringInequality) -> float:
    """Schmidt angle of the state that maximally violates the inequality."""
    a = ineq.alpha
    if ineq.family is Family.TILTED_ANALOG:
        s2t = np.sqrt((4 - a * a) / (4 + a * a))
    elif ineq.n_settings == 2:
        s2t = 1 / np.sqrt(1 + a * a)
    else:
        s2t = 2 / np.sqrt(4 + a * a)
    return 0.5 * float(np.arcsin(min(1.0, s2t)))


def target_state(theta: float) -> np.ndarray:
    """cos(theta)|00> + sin(theta)|11>."""
    return np.array([np.cos(theta), 0, 0, np.sin(theta)], dtype=complex)


def tilted_mu(ineq: SteeringInequality) -> float:
    """Angle mu of the ideal tilted settings, tan(mu) = sin(2 theta) / beta."""
    return float(np.arctan(np.sin(2 * target_theta(ineq)) / ineq.beta))


def tilted_settings(mu: float) -> BobSettings:
    """B_r = cos(mu) Z + (-1)^r sin(mu) X."""
    return BobSettings(((np.sin(mu), 0.0, np.cos(mu)), (-np.sin(mu), 0.0, np.cos(mu))))


def ideal_bob_settings(ineq: SteeringInequality) -> BobSettings:
    if ineq.family is Family.TILTED_ANALOG:
        return tilted_settings(tilted_mu(ineq))
    z, x, my = (0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, -1.0, 0.0)
    return BobSettings((z, x) if ineq.n_settings == 2 else (z, x, my))


def family_operator(family: Family, alpha: float, beta: float, bob: BobLike) -> np.ndarray:
    """Steering operator for raw parameters, without the region check.

    Used where operators are needed on both sides of a region boundary.
    """
    bs = bob_matrices(bob)
    if len(bs) != family.n_settings:
        raise ValueError(f"{family.value} needs {family.n_settings} Bob settings, got {len(bs)}")
    d = bs[0].shape[0]
    idb = np.eye(d)
    a, b = alpha, beta
    if family is Family.TILTED_ANALOG:
        return (a * np.kron(Z, idb) + np.kron(Z, bs[0] + bs[1]) + np.kron(X, bs[0] - bs[1]))
    op = b * np.kron(Z, bs[0]) + np.kron(X, bs[1])
    if family.n_settings == 3:
        op = op + np.kron(Y, bs[2])
    if family.marginal_on_bob:
        op = op + a * np.kron(I2, bs[0])
    else:
        op = op + a * np.kron(Z, idb)
    return op


def family_quantum_bound(family: Family, alpha: float, beta: float) -> float:
    if family is Family.TILTED_ANALOG:
        return float(np.sqrt(8 + 2 * alpha * alpha))
    if family.n_settings == 2:
        return float(beta + np.sqrt(1 + alpha * alpha))
    return float(beta + np.sqrt(4 + alpha * alpha))


def steering_operator(ineq: SteeringInequality, bob: BobLike) -> np.ndarray:
    """Operator whose expectation on rho_AB is the inequality's left side.

    ``bob`` may hold qubit settings or Bob matrices of any common dimension d;
    the result then acts on C^2 (x) C^d.
    """
    return family_operator(ineq.family, ineq.alpha, ineq.beta, bob)


def lhs_bound(ineq: SteeringInequality) -> float:
    """Local-hidden-state bound by brute force over Bob's sign assignments.

    For each deterministic assignment b_k in {-1, +1} Bob's observables are
    replaced by the scalars b_k and the largest eigenvalue of the remaining
    2x2 Alice operator is taken; the bound is the maximum over assignments.
    """
    best = -np.inf
    for signs in itertools.product((-1.0, 1.0), repeat=ineq.n_settings):
        op = steering_operator(ineq, [np.array([[s]]) for s in signs])
        best = max(best, float(np.linalg.eigvalsh(op)[-1]))
    return best


def lhs_bound_closed_form(ineq: SteeringInequality) -> float:
    a, b = ineq.alpha, ineq.beta
    return {
        Family.TILTED_ANALOG: a + 2,
        Family.TWO_TRUSTED: np.sqrt(1 + (a + b) ** 2),
        Family.TWO_UNTRUSTED: a + np.sqrt(1 + b * b),
        Family.THREE_TRUSTED: np.sqrt(2 + (a + b) ** 2),
        Family.THREE_UNTRUSTED: a + np.sqrt(2 + b * b),
    }[ineq.family]


def quantum_bound(ineq: SteeringInequality) -> float:
    return family_quantum_bound(ineq.family, ineq.alpha, ineq.beta)


def violation(ineq: SteeringInequality, rho: np.ndarray, bob: BobLike) -> float:
    """Tr(rho S) for the inequality's operator S."""
    val = np.trace(np.asarray(rho) @ steering_operator(ineq, bob))
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"steering value has imaginary part {val.imag:.3g}")
    return float(val.real)


def noisy_state(theta: float, v: float) -> np.ndarray:
    """v |Phi(theta)><Phi(theta)| + (1 - v) I/4."""
    if not 0 <= v <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    return v * qmat.projector(target_state(theta)) + (1 - v) * np.eye(4) / 4
