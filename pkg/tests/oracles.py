"""Independent reference computations used to freeze expected values.

Nothing here imports the package's solvers. Closed forms are evaluated in
50-digit arithmetic with mpmath, sample counts by direct search, and the
moment-matrix SDP by cvxpy as a separate modelling route.
"""

import itertools

import mpmath as mp
import numpy as np

mp.mp.dps = 50


def tilted_theta(alpha):
    return mp.asin(mp.sqrt((4 - alpha ** 2) / (4 + alpha ** 2))) / 2


def tilted_slope_offset(alpha):
    """s = sin^2(theta)/(S_Q - 2 - alpha), tau = 1 - s S_Q."""
    alpha = mp.mpf(alpha)
    sq = mp.sqrt(8 + 2 * alpha ** 2)
    s = mp.sin(tilted_theta(alpha)) ** 2 / (sq - 2 - alpha)
    return s, 1 - s * sq


def tilted_fidelity_at_lhs(alpha):
    s, tau = tilted_slope_offset(alpha)
    return s * (alpha + 2) + tau


def di_crossing(alpha):
    """Observed value at which the DI bound equals cos^2(theta)."""
    alpha = mp.mpf(alpha)
    sq = mp.sqrt(8 + 2 * alpha ** 2)
    sa = ((sq + 2 + alpha) * (3 * sq - mp.sqrt(4 - alpha ** 2) - alpha * mp.sqrt(2))
          / (4 * (2 - alpha) ** 2 * sq))
    f = mp.cos(tilted_theta(alpha)) ** 2
    return (f - (1 - sa * sq)) / sa


def prior_chsh(observed):
    eps = 2 - mp.mpf(observed)
    return 1 - 24 * mp.sqrt(eps) - eps


def three_setting_slope():
    return mp.mpf(3) / (12 - 4 * mp.sqrt(2))


def guessing_threshold(s, sq):
    """Guessing probability at which s S + 1 - s S_Q reaches 1/2."""
    obs = sq - mp.mpf(1) / (2 * s)
    return mp.mpf(1) / 2 + obs / (2 * sq)


def copies_coinciding(c, eps, delta):
    """Smallest N with (1 - c eps)^N <= delta, by direct search."""
    q = 1 - mp.mpf(c) * mp.mpf(eps)
    n, val = 0, mp.mpf(1)
    while val > delta:
        n += 1
        val *= q
    return n


def lhs_by_enumeration(op_builder, n_settings):
    """Max over deterministic Bob outputs of the top eigenvalue of Alice's 2x2 operator.

    ``op_builder(signs)`` returns that 2x2 matrix; eigenvalues are taken in
    closed form for Hermitian 2x2 matrices.
    """
    best = -np.inf
    for signs in itertools.product((-1, 1), repeat=n_settings):
        m = op_builder(signs)
        a, d, b = m[0, 0].real, m[1, 1].real, m[0, 1]
        best = max(best, (a + d) / 2 + np.sqrt(((a - d) / 2) ** 2 + abs(b) ** 2))
    return best


# ---------------------------------------------------------------------------
# cvxpy model of the moment-matrix SDP


def cvxpy_min_fidelity(n_settings, theta, alpha, beta, untrusted, observed):
    import cvxpy as cp

    words = [(), (0,), (1,), (2,), (1, 0), (2, 0), (2, 1)]
    if n_settings == 2:
        words = [w for w in words if 2 not in w]

    def red(w):
        out = []
        for letter in w:
            if not out or out[-1] != letter:
                out.append(letter)
        return tuple(out)

    def canon(lab):
        rev = tuple(reversed(lab))
        return (lab, False) if lab <= rev else (rev, True)

    var = {}
    blocks = []
    for wi in words:
        row = []
        for wj in words:
            lab, flip = canon(red(tuple(reversed(wi)) + wj))
            if lab not in var:
                var[lab] = cp.Variable((2, 2), complex=True)
            row.append(var[lab].H if flip else var[lab])
        blocks.append(row)
    gam = cp.bmat(blocks)
    cons = [gam == gam.H, gam >> 0, cp.real(cp.trace(var[()])) == 1]
    cons += [v == v.H for lab, v in var.items() if lab == tuple(reversed(lab))]
    Z = np.diag([1.0, -1.0])
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]])
    coef = {(): -beta * Z - X - (Y if n_settings == 3 else 0), (0,): 2 * beta * Z, (1,): 2 * X}
    if n_settings == 3:
        coef[(2,)] = 2 * Y
    if untrusted:
        coef[()] = coef[()] - alpha * np.eye(2)
        coef[(0,)] = coef[(0,)] + 2 * alpha * np.eye(2)
    else:
        coef[()] = coef[()] + alpha * Z
    value = sum(cp.real(cp.sum(cp.multiply(p, var[w]))) for w, p in coef.items())

    def m(w, a, b):
        lab, flip = canon(w)
        return cp.conj(var[lab][b, a]) if flip else var[lab][a, b]

    c2, s2, sn2 = np.cos(theta) ** 2, np.sin(theta) ** 2, np.sin(2 * theta)
    f = (c2 * m((0,), 0, 0) + s2 * (m((), 1, 1) - m((0,), 1, 1))
         + sn2 * (m((0, 1), 0, 1) + m((1, 0), 1, 0) - m((0, 1, 0), 0, 1) - m((0, 1, 0), 1, 0)))
    prob = cp.Problem(cp.Minimize(cp.real(f)), cons + [value == observed])
    prob.solve(solver="CLARABEL")
    return prob.value
