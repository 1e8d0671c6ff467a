"""Moment-matrix lower bounds on the one-sided SWAP fidelity.

Bob's untrusted measurement is described only through projectors
E_k = E_{0|k}. For a list of words w_i in those projectors the moment matrix

    Gamma[(i, a), (j, b)] = Tr[rho (|a><b| (x) w_i^dagger w_j)]

is positive semidefinite for every quantum strategy. Blocks depend only on
the reduced word w_i^dagger w_j (adjacent equal letters collapse because
E_k^2 = E_k), and blocks whose labels are reverses of each other are
adjoints. Minimizing the SWAP fidelity, a linear function of Gamma, subject
to the observed steering value gives a lower bound valid for any strategy.

The SDP is solved by a small dense primal-dual interior-point method written
for this problem (HKM search direction, Mehrotra step heuristic), on the
real symmetric embedding of the Hermitian moment matrix.
"""

import csv
import enum
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import qmat
from .model import Family, SteeringInequality, lhs_bound, quantum_bound, target_state
from .qmat import I2, X, Y, Z

WORDS_3 = ((), (0,), (1,), (2,), (1, 0), (2, 0), (2, 1))
WORDS_2 = tuple(w for w in WORDS_3 if 2 not in w)
SOLVER_TOL = 1e-6

Word = Tuple[int, ...]


def reduce_word(word: Sequence[int]) -> Word:
    """Collapse adjacent repeated letters (projector idempotence)."""
    out: List[int] = []
    for letter in word:
        if not out or out[-1] != letter:
            out.append(letter)
    return tuple(out)


def canonical_label(label: Word) -> Tuple[Word, bool]:
    """Representative of {label, reversed label} and whether it was flipped.

    A flipped label means the block is the adjoint of the representative's.
    """
    rev = tuple(reversed(label))
    return (label, False) if label <= rev else (rev, True)


def is_palindrome(label: Word) -> bool:
    return label == tuple(reversed(label))


@dataclass(frozen=True)
class GammaPattern:
    """Block labels of the moment matrix for a fixed word list.

    Attributes:
        words: Row/column words, block i is indexed by ``words[i]``.
        labels: Canonical labels in a fixed order.
        position: ``position[i][j] = (label, flipped)`` for block (i, j).
    """

    words: Tuple[Word, ...]
    labels: Tuple[Word, ...]
    position: Tuple[Tuple[Tuple[Word, bool], ...], ...]

    @property
    def size(self) -> int:
        return 2 * len(self.words)

    def classes(self) -> Dict[Word, List[Tuple[int, int, bool]]]:
        """Equality classes: canonical label -> block positions (i, j, flipped)."""
        out: Dict[Word, List[Tuple[int, int, bool]]] = {lab: [] for lab in self.labels}
        for i, row in enumerate(self.position):
            for j, (lab, flip) in enumerate(row):
                out[lab].append((i, j, flip))
        return out


def build_gamma_pattern(n_settings: int) -> GammaPattern:
    if n_settings not in (2, 3):
        raise ValueError("n_settings must be 2 or 3")
    words = WORDS_3 if n_settings == 3 else WORDS_2
    pos = []
    labels: List[Word] = []
    for wi in words:
        row = []
        for wj in words:
            lab, flip = canonical_label(reduce_word(tuple(reversed(wi)) + wj))
            if lab not in labels:
                labels.append(lab)
            row.append((lab, flip))
        pos.append(tuple(row))
    return GammaPattern(words, tuple(labels), tuple(pos))


def assemble(pattern: GammaPattern, blocks: Dict[Word, np.ndarray]) -> np.ndarray:
    """Moment matrix from 2x2 blocks keyed by canonical label."""
    n = len(pattern.words)
    g = np.zeros((2 * n, 2 * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            lab, flip = pattern.position[i][j]
            blk = blocks[lab]
            g[2 * i:2 * i + 2, 2 * j:2 * j + 2] = blk.conj().T if flip else blk
    return g


def gamma_from_strategy(pattern: GammaPattern, rho: np.ndarray, projectors: Sequence[np.ndarray]) -> np.ndarray:
    """Moment matrix of a concrete strategy, rho on C^2 (x) C^d.

    Entries are computed position by position from the unreduced words, so
    comparing with ``assemble`` checks the label pattern itself.
    """
    d = projectors[0].shape[0]
    n = len(pattern.words)
    g = np.zeros((2 * n, 2 * n), dtype=complex)
    basis = np.eye(2)
    for i, wi in enumerate(pattern.words):
        for j, wj in enumerate(pattern.words):
            w = np.eye(d, dtype=complex)
            for letter in tuple(reversed(wi)) + wj:
                w = w @ projectors[letter]
            for a in range(2):
                for b in range(2):
                    g[2 * i + a, 2 * j + b] = np.trace(rho @ np.kron(np.outer(basis[a], basis[b]), w))
    return g


def pattern_violation(pattern: GammaPattern, g: np.ndarray) -> float:
    """Largest deviation of ``g`` from its label pattern."""
    worst = 0.0
    for lab, members in pattern.classes().items():
        ref = None
        for i, j, flip in members:
            blk = g[2 * i:2 * i + 2, 2 * j:2 * j + 2]
            blk = blk.conj().T if flip else blk
            if ref is None:
                ref = blk
            worst = max(worst, float(np.max(np.abs(blk - ref))))
    return worst


# ---------------------------------------------------------------------------
# objective and constraint


def objective_m(theta: float, n_settings: int = 3) -> np.ndarray:
    """Matrix M with Tr(M Gamma) equal to the one-sided SWAP fidelity.

    The SWAP map sends Bob's system to E_0 psi |0> + X~ (I - E_0) psi |1>
    with X~ = 2 E_1 - I; the fidelity of Alice's qubit and the new register
    with cos(theta)|00> + sin(theta)|11> expands to

        cos^2 m(0)[0,0] + sin^2 (m()[1,1] - m(0)[1,1])
        + sin(2 theta) Re 2 (m(10)[1,0] - m(010)[1,0]),

    with m(W)[a, b] = Tr[rho (|a><b| (x) W)].
    """
    pattern = build_gamma_pattern(n_settings)
    idx = {w: 2 * k for k, w in enumerate(pattern.words)}
    m = np.zeros((pattern.size, pattern.size))
    c2, s2, sn2 = np.cos(theta) ** 2, np.sin(theta) ** 2, np.sin(2 * theta)
    e, f, fe = idx[()], idx[(0,)], idx[(1, 0)]
    m[e + 1, e + 1] = s2
    m[f, f] = c2
    m[f + 1, f + 1] = -s2
    m[e + 1, fe] = m[fe, e + 1] = sn2
    m[fe, fe + 1] = m[fe + 1, fe] = -sn2
    return m


def functional_blocks(ineq: SteeringInequality) -> Dict[Word, np.ndarray]:
    """Coefficients P_W with steering value = sum_W Re sum(P_W * m(W)).

    Bob's observables are B_k = 2 E_k - I, so each correlator <A B_k>
    becomes 2 Tr[A sigma_k] - Tr[A rho_C].
    """
    a, b = ineq.alpha, ineq.beta
    three = ineq.n_settings == 3
    if ineq.family is Family.TILTED_ANALOG:
        raise ValueError("the moment-matrix certifier covers the marginal families only")
    base = -b * Z - X - (Y if three else 0)
    out = {(): base.astype(complex), (0,): 2 * b * Z, (1,): 2 * X}
    if three:
        out[(2,)] = 2 * Y
    if ineq.family.marginal_on_bob:
        out[()] = out[()] - a * I2
        out[(0,)] = out[(0,)] + 2 * a * I2
    else:
        out[()] = out[()] + a * Z
    return out


def steering_functional(ineq: SteeringInequality) -> np.ndarray:
    """Hermitian matrix F with Tr(F Gamma) equal to the steering value."""
    pattern = build_gamma_pattern(ineq.n_settings)
    out = np.zeros((pattern.size, pattern.size), dtype=complex)
    for w, p in functional_blocks(ineq).items():
        k = 2 * pattern.words.index(w)
        # diagonal block (w, w) carries label w for single letters and ()
        out[k:k + 2, k:k + 2] = np.asarray(p).T
    return out


def one_sided_swap_fidelity(rho: np.ndarray, projectors: Sequence[np.ndarray], theta: float) -> float:
    """SWAP fidelity of a concrete strategy computed from the extracted state.

    Independent of the moment matrix: applies the Bob-side map explicitly
    and traces out Bob's original system.
    """
    e0 = projectors[0]
    d = e0.shape[0]
    xt = 2 * projectors[1] - np.eye(d)
    k0 = np.kron(np.eye(2), np.kron(e0, np.array([[1], [0]])))
    k1 = np.kron(np.eye(2), np.kron(xt @ (np.eye(d) - e0), np.array([[0], [1]])))
    out = k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T + k0 @ rho @ k1.conj().T + k1 @ rho @ k0.conj().T
    # out acts on A (x) B (x) B'; move B to the end and trace it out
    t = out.reshape(2, d, 2, 2, d, 2).transpose(0, 2, 1, 3, 5, 4).reshape(4 * d, 4 * d)
    red = qmat.partial_trace(t, keep="A", dims=(4, d))
    phi = target_state(theta)
    return float(np.real(phi.conj() @ red @ phi))


# ---------------------------------------------------------------------------
# parametrization by real variables


def _hermitian_basis(pattern: GammaPattern) -> List[np.ndarray]:
    """Basis of Hermitian moment matrices obeying the pattern (real coefficients)."""
    basis = []
    for lab in pattern.labels:
        units = []
        if is_palindrome(lab):
            units += [np.array([[1, 0], [0, 0]]), np.array([[0, 0], [0, 1]]),
                      np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]])]
        else:
            for a in range(2):
                for b in range(2):
                    e = np.zeros((2, 2), dtype=complex)
                    e[a, b] = 1
                    units += [e, 1j * e]
        for u in units:
            blocks = {other: np.zeros((2, 2), dtype=complex) for other in pattern.labels}
            blocks[lab] = np.asarray(u, dtype=complex)
            basis.append(assemble(pattern, blocks))
    return basis


def real_embedding(h: np.ndarray) -> np.ndarray:
    """[[Re, -Im], [Im, Re]], PSD exactly when h is."""
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


# ---------------------------------------------------------------------------
# interior-point solver


@dataclass
class IpmResult:
    primal: float        # objective of the best LMI point (upper side)
    dual: float          # certified lower side
    status: str
    iterations: int
    y: np.ndarray


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    l = np.linalg.cholesky(x)
    li = np.linalg.inv(l)
    lam = np.linalg.eigvalsh(-li @ dx @ li.T)[-1]
    return np.inf if lam <= 0 else 1.0 / lam


def solve_lmi(c_mat: np.ndarray, a_mats: Sequence[np.ndarray], b: np.ndarray, tol: float = 1e-8,
              max_iter: int = 100) -> IpmResult:
    """Primal-dual pair
        (P) min Tr(C X) s.t. Tr(A_i X) = b_i, X >= 0
        (D) max b.y    s.t. C - sum_i y_i A_i = S >= 0
    by an infeasible-start path-following method with the HKM direction.

    ``dual`` is b.y at the returned point and ``primal`` Tr(C X).
    """
    n = c_mat.shape[0]
    m = len(a_mats)
    a_flat = np.stack([a.ravel() for a in a_mats])
    x = np.eye(n)
    s = np.eye(n) * max(1.0, np.linalg.norm(c_mat))
    y = np.zeros(m)
    status = "max_iter"
    scale_b = 1 + np.linalg.norm(b)
    scale_c = 1 + np.linalg.norm(c_mat)
    for it in range(1, max_iter + 1):
        rp = b - a_flat @ x.ravel()
        rd = c_mat - s - (y @ a_flat).reshape(n, n)
        pobj, dobj = float(np.sum(c_mat * x)), float(b @ y)
        mu = float(np.sum(x * s)) / n
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if np.linalg.norm(rp) / scale_b < tol and np.linalg.norm(rd) / scale_c < tol and gap < tol:
            status = "optimal"
            break
        if np.linalg.norm(y) > 1e8 or np.linalg.norm(x) > 1e8:
            status = "infeasible"
            break
        s_inv = np.linalg.inv(s)
        # Schur complement M_ij = Tr(A_i X A_j S^-1)
        ax = np.einsum("kij,jl->kil", np.asarray(a_mats), x)
        as_ = np.einsum("kij,jl->kil", np.asarray(a_mats), s_inv)
        schur = np.einsum("kil,mli->km", ax, as_)

        def full(sigma_mu, corr=None):
            # Newton system for A(dX) = rp, A^T dy + dS = rd and the
            # linearized complementarity dX + X dS S^-1 = sigma mu S^-1 - X
            k = sigma_mu * s_inv - x - x @ rd @ s_inv
            if corr is not None:
                k = k - corr @ s_inv
            dy = np.linalg.solve(schur, rp - a_flat @ k.ravel())
            ds = rd - (dy @ a_flat).reshape(n, n)
            dx = sigma_mu * s_inv - x - x @ ds @ s_inv
            if corr is not None:
                dx = dx - corr @ s_inv
            return 0.5 * (dx + dx.T), dy, ds

        try:
            dx, dy, ds = full(0.0)
            ap = min(1.0, _max_step(x, dx))
            ad = min(1.0, _max_step(s, ds))
            mu_aff = float(np.sum((x + ap * dx) * (s + ad * ds))) / n
            sigma = min(1.0, (mu_aff / mu) ** 3)
            dx, dy, ds = full(sigma * mu, dx @ ds)
            ap = min(1.0, 0.95 * _max_step(x, dx))
            ad = min(1.0, 0.95 * _max_step(s, ds))
        except np.linalg.LinAlgError:
            # iterates have reached the edge of the cone at working precision
            status = "stalled"
            break
        x = x + ap * dx
        x = 0.5 * (x + x.T)
        y = y + ad * dy
        s = s + ad * ds
        s = 0.5 * (s + s.T)
    return IpmResult(float(np.sum(c_mat * x)), float(b @ y), status, it, y)


# ---------------------------------------------------------------------------
# the fidelity SDP


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INACCURATE = "inaccurate"
    INFEASIBLE = "infeasible"


@dataclass
class SdpResult:
    f_min: float          # certified lower bound on the SWAP fidelity
    f_upper: float        # objective at the near-feasible moment matrix
    status: SdpStatus
    dual_gap: float
    gamma: Optional[np.ndarray] = None


@dataclass
class SdpProblem:
    """Minimize Tr(M Gamma) over pattern-respecting Gamma >= 0 with linear equalities."""

    pattern: GammaPattern
    objective: np.ndarray
    constraints: List[Tuple[np.ndarray, float]]

    def _reduced(self):
        basis = _hermitian_basis(self.pattern)
        cvec = np.array([np.real(np.trace(self.objective @ bk)) for bk in basis])
        amat = np.array([[np.real(np.trace(f @ bk)) for bk in basis] for f, _ in self.constraints])
        bvec = np.array([v for _, v in self.constraints])
        y0 = np.linalg.lstsq(amat, bvec, rcond=None)[0]
        _, sv, vt = np.linalg.svd(amat)
        rank = int(np.sum(sv > 1e-12 * sv[0]))
        null = vt[rank:].T
        return basis, cvec, y0, null

    def solve(self, tol: float = SOLVER_TOL) -> SdpResult:
        basis, cvec, y0, null = self._reduced()
        g0 = sum(w * bk for w, bk in zip(y0, basis))
        gk = [sum(w * bk for w, bk in zip(col, basis)) for col in null.T]
        # min c.(y0 + N z) s.t. G0 + sum z_k G_k >= 0, as the (D) form with y = -z
        c_mat = real_embedding(g0)
        a_mats = [real_embedding(g) for g in gk]
        d = null.T @ cvec
        res = solve_lmi(c_mat, a_mats, d, tol=tol * 1e-2)
        offset = float(cvec @ y0)
        # weak duality: a primal X bounds the LMI minimum from below, a dual y
        # is a feasible moment matrix and bounds it from above
        f_lower = offset - res.primal
        f_upper = offset - res.dual
        gamma = g0 - sum(yk * g for yk, g in zip(res.y, gk))
        if res.status == "infeasible":
            return SdpResult(np.nan, np.nan, SdpStatus.INFEASIBLE, np.nan)
        status = SdpStatus.OPTIMAL if res.status == "optimal" else SdpStatus.INACCURATE
        return SdpResult(f_lower, f_upper, status, f_upper - f_lower, gamma)


def build_problem(ineq: SteeringInequality, theta: float, observed: float) -> SdpProblem:
    pattern = build_gamma_pattern(ineq.n_settings)
    trace_one = np.zeros((pattern.size, pattern.size), dtype=complex)
    trace_one[0:2, 0:2] = np.eye(2)
    return SdpProblem(pattern, objective_m(theta, ineq.n_settings).astype(complex),
                      [(trace_one, 1.0), (steering_functional(ineq), float(observed))])


def solve_min_fidelity(ineq: SteeringInequality, theta: float, observed: float,
                       solver_tol: float = SOLVER_TOL) -> SdpResult:
    """Smallest SWAP fidelity compatible with the observed steering value.

    Values above the quantum bound (beyond ``solver_tol``) are reported as
    infeasible without calling the solver.
    """
    if ineq.family is Family.TILTED_ANALOG:
        raise ValueError("the moment-matrix certifier covers the marginal families only")
    if observed > quantum_bound(ineq) + solver_tol:
        return SdpResult(np.nan, np.nan, SdpStatus.INFEASIBLE, np.nan)
    observed = min(observed, quantum_bound(ineq))
    return build_problem(ineq, theta, observed).solve(solver_tol)


def _sweep_row(args):
    ineq, theta, obs, tol = args
    try:
        res = solve_min_fidelity(ineq, theta, obs, tol)
        return obs, res.f_min, res.status.value, res.dual_gap
    except (np.linalg.LinAlgError, ValueError) as exc:
        return obs, np.nan, f"error: {exc}", np.nan


def sweep_curve(ineq: SteeringInequality, theta: float, grid: Sequence[float],
                solver_tol: float = SOLVER_TOL, workers: int = 1) -> List[Tuple[float, float, str, float]]:
    """Rows (observed, f_min, status, dual_gap) in grid order."""
    lo, hi = lhs_bound(ineq), quantum_bound(ineq)
    for g in grid:
        if g < lo - 1e-12 or g > hi + 1e-12:
            raise ValueError(f"grid value {g} outside [{lo}, {hi}]")
    jobs = [(ineq, theta, float(g), solver_tol) for g in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_row, jobs))
    return [_sweep_row(j) for j in jobs]


def rows_to_csv(rows, header=("observed", "f_min", "status", "dual_gap")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()
