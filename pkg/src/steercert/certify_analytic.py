"""Robustness certificates from local extraction channels.

A certificate is an affine fidelity bound F >= s * S + tau valid for every
state and every choice of Bob's measurements. It is proved by exhibiting,
for each of Bob's measurement choices, a channel Lambda on Bob's qubit
(a mixture of unitaries) such that

    G = K - s * S_op - tau * I  >= 0,      K = Lambda^dagger(|Phi><Phi|),

where S_op is the steering operator and |Phi> the target state. The
certifiers below check G numerically on a grid of Bob's measurement angles.
"""

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import qmat
from .model import (Family, SteeringInequality, bob_matrices, quantum_bound, steering_operator,
                    target_state, target_theta, tilted_settings, BobSettings)
from .qmat import I2, X, Y, Z

MARGIN_TOL = 1e-9
DEFAULT_MU_GRID = 512


class CertificateInvalid(RuntimeError):
    """Raised when G fails to be PSD at some grid point.

    Attributes:
        point: The offending grid point (a mu value or a tuple of angles).
        certificate: The partially filled certificate, for inspection.
    """

    def __init__(self, message, point=None, certificate=None):
        super().__init__(message)
        self.point = point
        self.certificate = certificate


@dataclass(frozen=True)
class ExtractionChannel:
    """Mixture of unitaries on Bob's qubit: rho -> sum_i p_i U_i rho U_i^dagger."""

    branches: Tuple[Tuple[float, np.ndarray], ...]

    def __post_init__(self):
        probs = np.array([p for p, _ in self.branches], dtype=float)
        if np.any(probs < -1e-12) or abs(probs.sum() - 1) > 1e-12:
            raise ValueError(f"branch probabilities {probs} must be nonnegative and sum to 1")
        for _, u in self.branches:
            u = np.asarray(u)
            if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - I2)) > 1e-12:
                raise ValueError("every branch must be a 2x2 unitary")

    @classmethod
    def mixture(cls, probs: Sequence[float], unitaries: Sequence[np.ndarray]) -> "ExtractionChannel":
        probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        probs = probs / probs.sum()
        return cls(tuple((float(p), np.asarray(u, dtype=complex)) for p, u in zip(probs, unitaries)))


def dual_channel_state(channel: ExtractionChannel, psi: np.ndarray) -> np.ndarray:
    """K = sum_i q_i (I x U_i)|psi><psi|(I x U_i)^dagger.

    For a mixture of unitaries the adjoint channel is again a mixture of
    unitaries, so applying the channel or its adjoint to a target built from
    real Schmidt coefficients gives the same operator whenever the branches
    are self-inverse up to phase (I, X, Z). General branches are applied as
    given.
    """
    k = np.zeros((4, 4), dtype=complex)
    for q, u in channel.branches:
        v = np.kron(I2, u) @ psi
        k += q * np.outer(v, v.conj())
    return k


def g_matrix(ineq: SteeringInequality, bob, channel: ExtractionChannel, s: float,
             tau: float, psi: Optional[np.ndarray] = None) -> np.ndarray:
    psi = target_state(target_theta(ineq)) if psi is None else psi
    k = dual_channel_state(channel, psi)
    return k - s * steering_operator(ineq, bob) - tau * np.eye(4)


def g_margin(ineq: SteeringInequality, bob, channel: ExtractionChannel, s: float,
             tau: float, psi: Optional[np.ndarray] = None) -> float:
    """Smallest eigenvalue of G = K - s S_op - tau I (valid iff >= -1e-9)."""
    return qmat.min_eigenvalue(g_matrix(ineq, bob, channel, s, tau, psi))


# ---------------------------------------------------------------------------
# tilted family: spectral data and q windows


class Case(enum.Enum):
    CASE1 = 1
    CASE2 = 2


@dataclass(frozen=True)
class SpectralData:
    case_tag: Case
    lambdas: Tuple[float, float, float, float]
    gamma: float
    mu: float
    alpha: float

    def eigenvectors(self) -> np.ndarray:
        """Columns are the eigenvectors matching ``lambdas`` (basis 00,01,10,11)."""
        cg, sg = np.cos(self.gamma), np.sin(self.gamma)
        e00, e01, e10, e11 = np.eye(4)
        p00 = cg * e00 + sg * e11      # top of the {00,11} block
        m00 = sg * e00 - cg * e11      # bottom of the {00,11} block
        p01 = cg * e01 + sg * e10      # top of the {01,10} block
        m01 = -sg * e01 + cg * e10     # bottom of the {01,10} block
        if self.case_tag is Case.CASE1:
            cols = (p00, m00, p01, m01)
        else:
            cols = (p00, p01, m00, m01)
        return np.stack(cols, axis=1).astype(complex)


def case_boundary(alpha: float) -> float:
    """mu at which cos(2 mu) = alpha^2 / 4."""
    return float(np.arcsin(np.sqrt((4 - alpha ** 2) / 8)))


def spectral_tilted(alpha: float, mu: float) -> SpectralData:
    """Closed-form spectrum of the tilted operator with B_r = cos mu Z +- sin mu X.

    The {00,11} block has eigenvalues 2cos(mu) +- r and the {01,10} block
    -2cos(mu) +- r, with r = sqrt(alpha^2 + 4 sin^2 mu). Which of them is
    called lambda_2 depends on the sign of 2cos(mu) - r, hence the two cases.
    """
    if not 0 < mu <= np.pi / 4 + 1e-15:
        raise ValueError("mu must lie in (0, pi/4]")
    if not 0 <= alpha < 2:
        raise ValueError("alpha must lie in [0, 2)")
    c = np.cos(mu)
    r = np.sqrt(alpha ** 2 + 4 * np.sin(mu) ** 2)
    # the {00,11} block is [[a + 2c, 2 sin mu], [2 sin mu, -a + 2c]] with
    # a >= 0, so 2 gamma lies in (0, pi/2] and arcsin recovers it
    gamma = 0.5 * np.arcsin(min(1.0, 2 * np.sin(mu) / r))
    if np.cos(2 * mu) >= alpha ** 2 / 4:
        tag = Case.CASE1
        lams = (r + 2 * c, 2 * c - r, r - 2 * c, -r - 2 * c)
    else:
        tag = Case.CASE2
        lams = (r + 2 * c, r - 2 * c, 2 * c - r, -r - 2 * c)
    return SpectralData(tag, tuple(float(v) for v in lams), float(gamma), float(mu), float(alpha))


def tilted_s_tau(alpha: float) -> Tuple[float, float]:
    """Optimal slope and offset for the tilted family."""
    theta = target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    sq = np.sqrt(8 + 2 * alpha ** 2)
    s = np.sin(theta) ** 2 / (sq - 2 - alpha)
    return float(s), float(1 - sq * s)


def case1_window(alpha: float, mu: float, s: float, tau: Optional[float] = None):
    """Interval of q_1 keeping G PSD with the channel {I, Z} (case 1).

    Returns ``(lo, hi)`` or ``None`` when the square roots in the window are
    of negative numbers (no q_1 works).
    """
    theta = target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    sq = np.sqrt(8 + 2 * alpha ** 2)
    tau = 1 - sq * s if tau is None else tau
    ct, st = np.cos(theta), np.sin(theta)
    d1 = ct ** 2 - s * (alpha + 2 * np.cos(mu)) - tau
    d2 = st ** 2 - s * (-alpha + 2 * np.cos(mu)) - tau
    if d1 < -1e-15 or d2 < -1e-15:
        return None
    cc = np.sqrt(max(d1, 0.0) * max(d2, 0.0))
    mid = 2 * np.sin(mu) * s
    return 0.5 + (mid - cc) / (2 * ct * st), 0.5 + (mid + cc) / (2 * ct * st)


def case2_lower_bounds(alpha: float, mu: float, s: float, tau: Optional[float] = None):
    """Saturating values of q_1 and q_2 for the channel {I, X} (case 2).

    These are the determinant conditions of the two 2x2 blocks of G, each of
    which is linear in its q because the X-flipped target contributes a
    rank-one term.
    """
    theta = target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    sq = np.sqrt(8 + 2 * alpha ** 2)
    tau = 1 - sq * s if tau is None else tau
    c1 = alpha + 2 * np.cos(mu)
    c2 = alpha - 2 * np.cos(mu)
    ct2, st2, s2t = np.cos(theta) ** 2, np.sin(theta) ** 2, np.sin(2 * theta)
    num = 4 * np.sin(mu) ** 2 * s ** 2
    den1 = (sq + 2 * s2t * np.sin(mu) + ct2 * c2 - st2 * c1) * s - 1
    den2 = (sq + 2 * s2t * np.sin(mu) + ct2 * c1 - st2 * c2) * s - 1
    l1 = (num + (c1 * s + tau) * (c2 * s - tau)) / den1
    l2 = (num + (c2 * s + tau) * (c1 * s - tau)) / den2
    return float(l1), float(l2)


def pencil_window(a: np.ndarray, r: np.ndarray) -> Optional[Tuple[float, float]]:
    """Interval of q with a + q r PSD, for 2x2 Hermitian a and rank-one PSD r.

    Because det(r) = 0 every condition (both diagonals and the determinant)
    is affine in q, so the feasible set is an interval computed exactly.
    """
    conds = [(a[0, 0].real, r[0, 0].real), (a[1, 1].real, r[1, 1].real)]
    det_a = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
    lin = (a[0, 0] * r[1, 1] + a[1, 1] * r[0, 0] - a[0, 1] * r[1, 0] - a[1, 0] * r[0, 1]).real
    conds.append((det_a, lin))
    lo, hi = -np.inf, np.inf
    for c0, c1 in conds:
        if abs(c1) < 1e-15:
            if c0 < -1e-12:
                return None
        elif c1 > 0:
            lo = max(lo, -c0 / c1)
        else:
            hi = min(hi, -c0 / c1)
    return (lo, hi) if lo <= hi else None


def tilted_channel(alpha: float, mu: float, s: float, tau: float):
    """Channel for one mu following the case split.

    Returns ``(channel, q1, window)`` where ``window`` are the recomputed
    endpoints for q_1 (None when empty).
    """
    sd = spectral_tilted(alpha, mu)
    if sd.case_tag is Case.CASE1:
        win = case1_window(alpha, mu, s, tau)
        if win is None:
            return None, np.nan, None
        q1 = float(np.clip(win[1], 0.0, 1.0))
        if q1 < win[0] - 1e-12:
            return None, q1, win
        return ExtractionChannel.mixture([q1, 1 - q1], [I2, Z]), q1, win
    l1, l2 = case2_lower_bounds(alpha, mu, s, tau)
    q1 = float(np.clip(max(0.0, l1), 0.0, 1.0))
    win = (max(0.0, l1), 1 - max(0.0, l2))
    if q1 > win[1] + 1e-12:
        return None, q1, win
    return ExtractionChannel.mixture([q1, 1 - q1], [I2, X]), q1, win


@dataclass
class RobustnessCertificate:
    """Affine bound F >= s * S + tau with its witness data."""

    s: float
    tau: float
    ineq: SteeringInequality
    witness: np.ndarray = field(repr=False)
    channel_params: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    extra: Dict[str, object] = field(default_factory=dict, repr=False)

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.witness)) if np.size(self.witness) else np.nan

    @property
    def valid(self) -> bool:
        return bool(np.all(np.asarray(self.witness) >= -MARGIN_TOL))

    def fidelity(self, observed, clamp: bool = False):
        f = self.s * np.asarray(observed, dtype=float) + self.tau
        return np.clip(f, 0.0, 1.0) if clamp else f

    def threshold(self, fidelity: float) -> float:
        """Observed value at which the bound reaches ``fidelity``."""
        return (fidelity - self.tau) / self.s


def mu_grid(n: int, upper: float = np.pi / 4) -> np.ndarray:
    """Uniform grid of n points over (0, upper]."""
    return upper * np.arange(1, n + 1) / n


def certify_tilted_analog(alpha: float, mu_grid_size: int = DEFAULT_MU_GRID,
                          strict: bool = True) -> RobustnessCertificate:
    """Certificate for the tilted family.

    Case 1 points use the channel {I, Z}, case 2 points the channel {I, X}.
    The case boundary itself is always added to the grid.

    Raises:
        CertificateInvalid: if some grid point has no valid q_1 or a G margin
            below -1e-9 (only when ``strict``).
    """
    ineq = SteeringInequality(Family.TILTED_ANALOG, alpha)
    s, tau = tilted_s_tau(alpha)
    mus = np.union1d(mu_grid(mu_grid_size), [case_boundary(alpha)])
    mus = mus[(mus > 0) & (mus <= np.pi / 4)]
    margins = np.empty(len(mus))
    qs = np.empty(len(mus))
    cases = np.empty(len(mus), dtype=int)
    for i, mu in enumerate(mus):
        ch, q1, _ = tilted_channel(alpha, mu, s, tau)
        cases[i] = spectral_tilted(alpha, mu).case_tag.value
        qs[i] = q1
        margins[i] = -np.inf if ch is None else g_margin(ineq, tilted_settings(mu), ch, s, tau)
    cert = RobustnessCertificate(s, tau, ineq, margins, qs, mus, {"case": cases})
    if strict and not cert.valid:
        bad = float(mus[int(np.argmin(margins))])
        raise CertificateInvalid(f"tilted certificate fails at mu={bad:.6g}", bad, cert)
    return cert


# ---------------------------------------------------------------------------
# CHSH-type steering operator Z B0 + X B1


_H = (Z + X) / np.sqrt(2)
_HP = (Z - X) / np.sqrt(2)


def chsh_eigenbasis() -> np.ndarray:
    """Joint eigenbasis of H x Z and H' x X, H = (Z+X)/sqrt2, H' = (Z-X)/sqrt2.

    Since Z B0 + X B1 = sqrt2 (cos mu H x Z + sin mu H' x X), these vectors
    diagonalize the operator for every mu. Columns are ordered by the sign
    pairs (+,+), (+,-), (-,+), (-,-), i.e. eigenvalues sqrt2 (c+s),
    sqrt2 (c-s), -sqrt2 (c-s), -sqrt2 (c+s).
    """
    # eigenvalues of A + 2B are 3, -1, 1, -3 for the four sign pairs
    w, v = np.linalg.eigh(np.kron(_H, Z) + 2 * np.kron(_HP, X))
    order = [int(np.argmin(np.abs(w - t))) for t in (3, -1, 1, -3)]
    v = v[:, order]
    for k in range(4):
        j = int(np.argmax(np.abs(v[:, k]) > 1e-9))
        v[:, k] *= np.abs(v[j, k]) / v[j, k]
    return v


def unitary_to(psi: np.ndarray) -> np.ndarray:
    """Unitary U on Bob with (I x U)|Phi+> = psi, for maximally entangled psi."""
    m = np.asarray(psi, dtype=complex).reshape(2, 2)
    u = np.sqrt(2) * m.T
    if np.max(np.abs(u.conj().T @ u - I2)) > 1e-10:
        raise ValueError("state is not maximally entangled")
    return u


def chsh_lambdas(mu: float) -> Tuple[float, float]:
    return float(np.sqrt(2) * (np.cos(mu) + np.sin(mu))), float(np.sqrt(2) * (np.cos(mu) - np.sin(mu)))


def chsh_window(mu: float, s: float, tau: float) -> Tuple[float, float]:
    """q_1 interval for the two-branch channel onto the positive eigenvectors."""
    lam = np.sort(np.abs(chsh_lambdas(mu)))[::-1]
    return float(s * lam[0] + tau), float(1 - s * lam[1] - tau)


def certify_chsh_steering(mu_grid_size: int = DEFAULT_MU_GRID, strict: bool = True) -> RobustnessCertificate:
    """Certificate for Z B0 + X B1 with s = 1/(4 - 2 sqrt2).

    For mu in (0, pi/4] the channel maps the target to a mixture of the
    eigenvectors with eigenvalues sqrt2 (c +- s); for mu in (pi/4, pi/2) it
    uses the two eigenvectors whose eigenvalues are positive there.
    """
    ineq = SteeringInequality(Family.TWO_TRUSTED, 0.0, 1.0)
    s = 1 / (4 - 2 * np.sqrt(2))
    tau = 1 - 2 * s
    basis = chsh_eigenbasis()
    u = [unitary_to(basis[:, k]) for k in range(4)]
    mus = np.pi / 2 * np.arange(1, 2 * mu_grid_size) / (2 * mu_grid_size)
    margins = np.empty(len(mus))
    qs = np.empty(len(mus))
    for i, mu in enumerate(mus):
        lo, hi = chsh_window(mu, s, tau)
        q1 = float(np.clip(hi, 0.0, 1.0))
        qs[i] = q1
        if q1 < lo - 1e-12:
            margins[i] = -np.inf
            continue
        pair = (u[0], u[1]) if mu <= np.pi / 4 else (u[0], u[2])
        ch = ExtractionChannel.mixture([q1, 1 - q1], pair)
        margins[i] = g_margin(ineq, tilted_settings(mu), ch, s, tau, psi=target_state(np.pi / 4))
    cert = RobustnessCertificate(s, tau, ineq, margins, qs, mus)
    if strict and not cert.valid:
        bad = float(mus[int(np.argmin(margins))])
        raise CertificateInvalid(f"CHSH steering certificate fails at mu={bad:.6g}", bad, cert)
    return cert


def prior_chsh_bound(observed):
    """Earlier operator-inequality bound F >= 1 - 24 sqrt(2 - S) - (2 - S)."""
    eps = 2 - np.asarray(observed, dtype=float)
    return 1 - 24 * np.sqrt(eps) - eps


# ---------------------------------------------------------------------------
# three-setting certificate


THREE_SETTING_S = 3 / (12 - 4 * np.sqrt(2))


def b2_bloch(mu1, mu2):
    """Bloch vector cos mu1 cos mu2 z + cos mu1 sin mu2 x + sin mu1 y as (x, y, z)."""
    mu1, mu2 = np.broadcast_arrays(np.asarray(mu1, float), np.asarray(mu2, float))
    return np.stack([np.cos(mu1) * np.sin(mu2), np.sin(mu1), np.cos(mu1) * np.cos(mu2)], axis=-1)


def _rotation_from_minus_y(n: np.ndarray) -> np.ndarray:
    """Unitaries W (batched over n) with W (-Y) W^dagger = n . sigma.

    W rotates the -y axis onto n along the great circle.
    """
    n = np.atleast_2d(n)
    a = np.array([0.0, -1.0, 0.0])
    axis = np.cross(a, n)
    sn = np.linalg.norm(axis, axis=-1)
    cs = n @ a
    ang = np.arctan2(sn, cs)
    safe = sn > 1e-12
    axis = np.where(safe[:, None], axis / np.where(safe, sn, 1.0)[:, None], np.array([0.0, 0.0, 1.0]))
    gen = (axis[:, 0, None, None] * X + axis[:, 1, None, None] * Y + axis[:, 2, None, None] * Z)
    c = np.cos(ang / 2)[:, None, None]
    s = np.sin(ang / 2)[:, None, None]
    return c * I2 - 1j * s * gen


def third_branch_states(n: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """States (I x W)|Phi+> lying in the +1 eigenspace of Y x (n . sigma).

    W^dagger B2 W = -Y makes (Y x B2)(I x W)|Phi+> = (I x W)|Phi+>. The
    remaining freedom is a rotation of W about n, sampled by ``phases``.
    Returns an array of shape (len(n), len(phases), 4).
    """
    n = np.atleast_2d(n)
    w0 = _rotation_from_minus_y(n)
    b2 = (n[:, 0, None, None] * X + n[:, 1, None, None] * Y + n[:, 2, None, None] * Z)
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    out = np.empty((len(n), len(phases), 4), dtype=complex)
    for k, ph in enumerate(phases):
        rot = np.cos(ph / 2) * I2 - 1j * np.sin(ph / 2) * b2
        w = rot @ w0
        # (I x W)|Phi+> has amplitude W[b, a]/sqrt2 on |a b>
        out[:, k, :] = np.swapaxes(w, -1, -2).reshape(len(n), 4) / np.sqrt(2)
    return out


def three_setting_g1(mu: float, s: float = THREE_SETTING_S, q3: float = 0.5):
    """G_1 part at one mu: returns (G1, q1, q2)."""
    tau = 1 - 3 * s
    l1, l2 = chsh_lambdas(mu)
    # q1 + q2 = 1 - q3 with q1 >= s l1 + tau and q2 >= s l2 + tau. Equalize
    # the two slacks, then clip so both stay valid probabilities; near
    # mu = pi/4 the first bound exceeds 1 - q3 and G_1 cannot be PSD.
    q1 = float(np.clip(((1 - q3) + s * (l1 - l2)) / 2, 0.0, 1 - q3))
    q2 = (1 - q3) - q1
    v = chsh_eigenbasis()
    g1 = ((q1 - s * l1 - tau) * qmat.projector(v[:, 0])
          + (q2 - s * l2 - tau) * qmat.projector(v[:, 1]))
    return g1, q1, q2


def three_setting_g2_margins(mu: float, n: np.ndarray, s: float = THREE_SETTING_S, q3: float = 0.5,
                             gamma: float = 3.0, n_phases: int = 8) -> np.ndarray:
    """Minimum eigenvalue of G_2 for each Bloch vector in ``n`` at fixed mu.

    G_2 = q3 |chi><chi| + (s l2 - tau1)|psi3><psi3| + (s l1 - tau1)|psi4><psi4|
          - s Y x B2 - (gamma - 3) s I,   tau1 = 1 - gamma s,

    with chi the image of |Phi+> under the third branch. For each B2 the
    best of ``n_phases`` third-branch rotations about B2 is reported.
    """
    tau1 = 1 - gamma * s
    l1, l2 = chsh_lambdas(mu)
    v = chsh_eigenbasis()
    base = ((s * l2 - tau1) * qmat.projector(v[:, 2]) + (s * l1 - tau1) * qmat.projector(v[:, 3])
            - (gamma - 3) * s * np.eye(4))
    n = np.atleast_2d(n)
    b2 = (n[:, 0, None, None] * X + n[:, 1, None, None] * Y + n[:, 2, None, None] * Z)
    yb2 = np.einsum("ij,nkl->nikjl", Y, b2).reshape(len(n), 4, 4)
    phases = 2 * np.pi * np.arange(n_phases) / n_phases
    chis = third_branch_states(n, phases)
    mats = (base[None, None] - s * yb2[:, None]
            + q3 * chis[..., :, None] * chis[..., None, :].conj())
    eig = np.linalg.eigvalsh(mats)[..., 0]
    return eig.max(axis=1)


def certify_three_setting(grid: int = 64, n_phases: int = 8, refine: bool = True,
                          strict: bool = True) -> RobustnessCertificate:
    """Three-setting certificate with s = 3/(12 - 4 sqrt2), q3 = 1/2, gamma = 3.

    Checks G_1 >= 0 and G_2 >= 0 on a grid over mu in (0, pi/4] and
    mu1, mu2 in [-pi/2, pi/2], then refines the worst G_2 points with a local
    search. ``extra`` records the worst margins and where they occur.
    """
    ineq = SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0)
    s = THREE_SETTING_S
    tau = 1 - 3 * s
    mus = mu_grid(grid)
    angles = np.linspace(-np.pi / 2, np.pi / 2, grid)
    m1, m2 = np.meshgrid(angles, angles, indexing="ij")
    n = b2_bloch(m1.ravel(), m2.ravel())
    g1_margins = np.empty(len(mus))
    g2_margins = np.empty(len(mus))
    g2_arg = []
    qs = np.empty((len(mus), 3))
    for i, mu in enumerate(mus):
        g1, q1, q2 = three_setting_g1(mu, s)
        qs[i] = (q1, q2, 0.5)
        g1_margins[i] = qmat.min_eigenvalue(g1)
        marg = three_setting_g2_margins(mu, n, s, n_phases=n_phases)
        j = int(np.argmin(marg))
        g2_margins[i] = marg[j]
        g2_arg.append((float(mu), float(m1.ravel()[j]), float(m2.ravel()[j])))
    worst = g2_arg[int(np.argmin(g2_margins))]
    worst_val = float(np.min(g2_margins))
    if refine:
        worst, worst_val = _refine_g2(worst, worst_val, s, n_phases)
    witness = np.concatenate([g1_margins, g2_margins, [worst_val]])
    cert = RobustnessCertificate(
        s, tau, ineq, witness, qs, mus,
        {"g1_margin": float(g1_margins.min()), "g2_margin": worst_val, "g2_worst_point": worst,
         "g2_margins_per_mu": g2_margins})
    if strict and not cert.valid:
        raise CertificateInvalid(
            f"three-setting certificate fails: G_1 margin {g1_margins.min():.4g} at mu = "
            f"{mus[int(np.argmin(g1_margins))]:.4f}, G_2 margin {worst_val:.4g} at (mu, mu1, mu2) = "
            f"({worst[0]:.4f}, {worst[1]:.4f}, {worst[2]:.4f})", worst, cert)
    return cert


def _refine_g2(start, start_val, s, n_phases):
    from scipy.optimize import minimize

    def fun(p):
        mu = float(np.clip(p[0], 1e-9, np.pi / 4))
        return float(three_setting_g2_margins(mu, b2_bloch(p[1], p[2])[None], s, n_phases=n_phases)[0])

    res = minimize(fun, np.array(start), method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 400})
    if res.fun < start_val:
        p = res.x
        return (float(np.clip(p[0], 1e-9, np.pi / 4)), float(p[1]), float(p[2])), float(res.fun)
    return tuple(start), float(start_val)


# ---------------------------------------------------------------------------
# scenario comparison for the tilted family


class Scenario(enum.Enum):
    DD = "DD"
    ONE_SDI = "1SDI"
    DI = "DI"


def di_slope(alpha: float) -> float:
    """Slope of the conjectured device-independent bound."""
    sq = np.sqrt(8 + 2 * alpha ** 2)
    return float((sq + 2 + alpha) * (3 * sq - np.sqrt(4 - alpha ** 2) - alpha * np.sqrt(2))
                 / (4 * (2 - alpha) ** 2 * sq))


def fidelity_lower(scenario, alpha: float, observed, clamp: bool = True):
    """Fidelity lower bound for the tilted family in the given scenario.

    Args:
        scenario: ``Scenario`` member or its string value.
        alpha: Tilt parameter in [0, 2).
        observed: Observed steering value(s), at most sqrt(8 + 2 alpha^2).
        clamp: Clip the affine value to [0, 1].
    """
    scenario = Scenario(scenario) if not isinstance(scenario, Scenario) else scenario
    obs = np.asarray(observed, dtype=float)
    sq = np.sqrt(8 + 2 * alpha ** 2)
    if np.any(obs > sq + 1e-9):
        raise ValueError(f"observed value exceeds the quantum bound {sq:.6g}")
    if scenario is Scenario.DD:
        f = obs / sq
    elif scenario is Scenario.ONE_SDI:
        s, tau = tilted_s_tau(alpha)
        f = s * obs + tau
    else:
        sa = di_slope(alpha)
        f = sa * obs + (1 - sa * sq)
    f = np.clip(f, 0.0, 1.0) if clamp else f
    return float(f) if np.ndim(f) == 0 else f


def comparison_table(alpha: float, grid, clamp: bool = True) -> List[Tuple[float, float, float, float]]:
    """Rows (observed, F_DD, F_1SDI, F_DI) for the tilted family."""
    grid = np.asarray(grid, dtype=float)
    dd = fidelity_lower(Scenario.DD, alpha, grid, clamp)
    one = fidelity_lower(Scenario.ONE_SDI, alpha, grid, clamp)
    di = fidelity_lower(Scenario.DI, alpha, grid, clamp)
    return [tuple(float(v) for v in row) for row in zip(grid, np.atleast_1d(dd), np.atleast_1d(one),
                                                        np.atleast_1d(di))]


def dd_operator(alpha: float) -> np.ndarray:
    """Tilted-CHSH Bell operator with ideal measurements on both sides."""
    theta = target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    mu = np.arctan(np.sin(2 * theta))
    return (alpha * np.kron(Z, I2) + 2 * np.cos(mu) * np.kron(Z, Z) + 2 * np.sin(mu) * np.kron(X, X))


def dd_operator_check(alpha: float, scale: float = 1.0) -> float:
    """Minimum eigenvalue of |Phi><Phi| - scale * I_alpha / sqrt(8 + 2 alpha^2)."""
    theta = target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    phi = target_state(theta)
    return qmat.min_eigenvalue(qmat.projector(phi) - scale * dd_operator(alpha) / np.sqrt(8 + 2 * alpha ** 2))
