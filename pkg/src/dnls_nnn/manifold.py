"""Power-series parametrization of the origin's stable/unstable manifolds.

Each 2-d manifold of the 4-d map f is computed as the image of a polynomial
P(u, v) = sum_{1 <= n+m <= N} a^{nm} u^n v^m (one coefficient quadruple
a^{nm} = (a_1, .., a_4) per block) satisfying the conjugacy

    f(P(u, v)) = P(L1 u, L2 v),

where (L1, L2) are the eigenvalue pair of the linearization: the stable pair
(|L| < 1) for the stable branch, their reciprocals for the unstable one.
Because f is a shift in its first three components, rows 1-3 of the
order-(n, m) coefficient system are pure chain relations

    a_2 = Lam a_1,   a_3 = Lam a_2,   a_4 = Lam a_3,      Lam = L1^n L2^m,

and the last row closes the block against the cubic convolution of the
third-component series:

    a_1 = R / D(Lam),  R = [a_3^3]_{nm} / (eps A),  D(Lam) = -k0(Lam),

with k0 the characteristic polynomial at the origin.  The recursion is
triangular in total degree n+m; order 1 is seeded with the scaled Vandermonde
eigenvectors g_i (1, L_i, L_i^2, L_i^3).  The map is odd, so every block of
even total degree vanishes identically.

The scales (g1, g2) are a pure gauge: (u, v) -> (g1 u, g2 v) rescales block
(n, m) by g1^n g2^m without moving the manifold.  The default gauge is chosen
so that the truncation is trustworthy on the whole unit box [-1, 1]^2 --
largest box with conjugacy residual below a target -- subject to maximizing
the covered parameter area; see _default_gauge.  The unstable series is
gauged so that P_u = sigma5 o P_s, which the reversor structure makes exact:
reversing a Vandermonde vector for L gives L^3 times the one for 1/L.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .maps import ModelParams, map4_apply, map4_inverse
from .spectral import (
    ALL_REAL,
    NonHyperbolicError,
    characteristic_poly,
    solve_reciprocal_quartic,
)

__all__ = [
    "ManifoldSeries",
    "ResonanceError",
    "SeriesOverflowError",
    "GaugeError",
    "cubic_convolution",
    "solve_order_block",
    "compute_manifold",
    "compute_manifold_pair",
    "rescale_series",
    "evaluate_series",
    "series_jacobian",
    "conjugacy_residual",
    "pointwise_conjugacy_residual",
    "series_to_dict",
    "series_from_dict",
    "save_series",
    "load_series",
]

DEFAULT_ORDER = 80
GAUGE_RESIDUAL = 1e-10
RESONANCE_TOL = 1e-8
OVERFLOW_LIMIT = 1e280


class ResonanceError(RuntimeError):
    """A denominator k0(L1^n L2^m) fell under the resonance tolerance."""

    def __init__(self, order, value):
        self.order = order
        self.value = value
        super().__init__(f"resonant order {order}: |k0(Lam)| = {value:.3e}")


class SeriesOverflowError(RuntimeError):
    """The series left double-precision range (building or evaluating it)."""

    def __init__(self, order, message=None):
        self.order = order
        super().__init__(message or
                         f"coefficient overflow at total degree {order}")


class GaugeError(RuntimeError):
    """The automatic scaling policy found no usable evaluation box."""


@dataclass
class ManifoldSeries:
    """Truncated parametrization of one manifold branch.

    coeffs[i, n, m] is the i-th component of block a^{nm} (zero for
    n + m > order).  rates are the conjugacy rates (L1, L2): the stable
    eigenvalues for branch 'stable', their reciprocals for 'unstable'.
    scale is the gauge (g1, g2) already baked into the coefficients.
    """

    branch: str
    order: int
    rates: tuple
    scale: tuple
    coeffs: np.ndarray
    params: ModelParams


def _k0_at(A, x):
    a, b = 1.0 / A, -2.0 / A
    return ((x + a) * x + b) * x * x + a * x + 1.0


def cubic_convolution(coeffs3, n, m):
    """Coefficient of u^n v^m in (sum a3^{nm} u^n v^m)^3.

    Reference implementation by direct double convolution; the series builder
    computes the same numbers diagonal-at-a-time.
    """
    a3 = np.asarray(coeffs3, dtype=float)
    n, m = int(n), int(m)
    sq = np.zeros((n + 1, m + 1))
    for i in range(n + 1):
        for j in range(m + 1):
            block = a3[: i + 1, : j + 1]
            sq[i, j] = np.sum(block * block[::-1, ::-1])
    out = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            out += sq[i, j] * a3[n - i, m - j]
    return float(out)


def solve_order_block(ms: ManifoldSeries, n, m):
    """One coefficient quadruple a^{nm} from the already-filled lower orders.

    Reference path for tests and inspection; compute_manifold fills whole
    anti-diagonals at once with the same arithmetic.
    """
    n, m = int(n), int(m)
    k = n + m
    if k == 0:
        return np.zeros(4)
    L1, L2 = ms.rates
    g1, g2 = ms.scale
    if k == 1:
        L = L1 if n == 1 else L2
        g = g1 if n == 1 else g2
        return g * np.array([1.0, L, L * L, L**3])
    p = ms.params
    R = cubic_convolution(ms.coeffs[2], n, m) / (p.epsilon * p.A)
    Lam = L1**n * L2**m
    if R == 0.0:
        return np.zeros(4)
    D = -_k0_at(p.A, Lam)
    if abs(D) <= RESONANCE_TOL * max(1.0, abs(Lam) ** 4):
        raise ResonanceError((n, m), abs(D))
    a1 = R / D
    return a1 * np.array([1.0, Lam, Lam * Lam, Lam**3])


def _build_coeffs(p: ModelParams, L1, L2, N, g1, g2):
    """Dense (4, N+1, N+1) coefficient table by anti-diagonal recursion."""
    A, eps = p.A, p.epsilon
    a, b = 1.0 / A, -2.0 / A
    C = np.zeros((4, N + 1, N + 1))
    if N >= 1:
        C[:, 1, 0] = g1 * np.array([1.0, L1, L1**2, L1**3])
        C[:, 0, 1] = g2 * np.array([1.0, L2, L2**2, L2**3])
    pw1 = L1 ** np.arange(N + 1)
    pw2 = L2 ** np.arange(N + 1)
    # anti-diagonal views of the third component: d3[k][j] = C[2, j, k-j]
    d3 = [np.zeros(k + 1) for k in range(N + 1)]
    if N >= 1:
        d3[1] = np.array([C[2, 0, 1], C[2, 1, 0]])
    sq = [None] * (N + 1)  # sq[j] = anti-diagonals of the squared series
    for k in range(2, N + 1):
        j = k - 1
        if j >= 2:
            s = np.zeros(j + 1)
            for j1 in range(1, j):
                s += np.convolve(d3[j1], d3[j - j1])
            sq[j] = s
        cube = np.zeros(k + 1)
        for j2 in range(2, k):
            if sq[j2] is not None:
                cube += np.convolve(sq[j2], d3[k - j2])
        idx = np.arange(k + 1)
        Lam = pw1[idx] * pw2[k - idx]
        R = cube / (eps * A)
        D = -(((Lam + a) * Lam + b) * Lam * Lam + a * Lam + 1.0)
        bad = (R != 0.0) & (np.abs(D) <= RESONANCE_TOL * np.maximum(1.0, np.abs(Lam) ** 4))
        if np.any(bad):
            nn = int(idx[bad][0])
            raise ResonanceError((nn, k - nn), float(np.abs(D[bad][0])))
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            a1 = np.where(R == 0.0, 0.0, R / D)
            a4 = Lam**3 * a1
        if (not np.all(np.isfinite(a1)) or not np.all(np.isfinite(a4))
                or max(np.max(np.abs(a1)), np.max(np.abs(a4))) > OVERFLOW_LIMIT):
            raise SeriesOverflowError(k)
        C[0, idx, k - idx] = a1
        C[1, idx, k - idx] = Lam * a1
        C[2, idx, k - idx] = Lam * Lam * a1
        C[3, idx, k - idx] = a4
        d3[k] = C[2, idx, k - idx]
    return C


def _power_table(x, N):
    # cumulative products, not x**k: the vectorized pow ufunc rounds positive
    # and negative bases through different kernels, which would break the
    # exact odd symmetry P(-u, -v) == -P(u, v)
    T = np.ones((N + 1, x.size))
    np.multiply.accumulate(np.broadcast_to(x, (N, x.size)), axis=0, out=T[1:])
    return T


def _eval_raw(C, u, v):
    """Evaluate a dense coefficient table at flat parameter arrays -> (4, P).

    Terms are accumulated in fixed total-degree-descending order so results
    are bit-reproducible.
    """
    N = C.shape[1] - 1
    U = _power_table(u, N)
    V = _power_table(v, N)
    out = np.zeros((4, u.size))
    for k in range(N, -1, -1):
        j = np.arange(k + 1)
        out += C[:, j, k - j] @ (U[j, :] * V[k - j, :])
    return out


def _jac_raw(C, u, v):
    N = C.shape[1] - 1
    U = _power_table(u, N)
    V = _power_table(v, N)
    out = np.zeros((4, 2, u.size))
    for k in range(N, 0, -1):
        j = np.arange(k + 1)
        Cd = C[:, j, k - j]
        ju = j[1:]
        out[:, 0, :] += (Cd[:, 1:] * ju[None, :]) @ (U[ju - 1, :] * V[k - ju, :])
        jv = j[:-1]
        out[:, 1, :] += (Cd[:, :-1] * (k - jv)[None, :]) @ (U[jv, :] * V[k - jv - 1, :])
    return out


def _broadcast_uv(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    return u, v


def evaluate_series(ms: ManifoldSeries, u, v):
    """P(u, v); u, v broadcast together, components land on the last axis."""
    u, v = _broadcast_uv(u, v)
    flat = _eval_raw(ms.coeffs, u.ravel(), v.ravel())
    return np.moveaxis(flat.reshape((4,) + u.shape), 0, -1)


def series_jacobian(ms: ManifoldSeries, u, v):
    """Term-wise derivative: dP/d(u, v), shape (..., 4, 2)."""
    u, v = _broadcast_uv(u, v)
    flat = _jac_raw(ms.coeffs, u.ravel(), v.ravel())
    return np.moveaxis(flat.reshape((4, 2) + u.shape), (0, 1), (-2, -1))


def pointwise_conjugacy_residual(ms: ManifoldSeries, u, v):
    """Euclidean defect of the conjugacy at each (u, v), in contraction form.

    Stable branch:   || f(P(u, v))      - P(L1 u, L2 v)   ||
    Unstable branch: || f^{-1}(P(u, v)) - P(u / L1, v / L2) ||

    Both express the same functional equation; each is written in the
    direction in which the parameter arguments shrink, the only form a
    truncated series can be held to on its own domain.
    """
    u, v = _broadcast_uv(u, v)
    P = evaluate_series(ms, u, v)
    L1, L2 = ms.rates
    if ms.branch == "stable":
        F = map4_apply(P, ms.params)
        Q = evaluate_series(ms, L1 * u, L2 * v)
    else:
        F = map4_inverse(P, ms.params)
        Q = evaluate_series(ms, u / L1, v / L2)
    return np.linalg.norm(F - Q, axis=-1)


def conjugacy_residual(ms: ManifoldSeries, grid=(41, 41)):
    """Max pointwise conjugacy residual over a grid of the unit box."""
    gu = np.linspace(-1.0, 1.0, int(grid[0]))
    gv = np.linspace(-1.0, 1.0, int(grid[1]))
    uu, vv = np.meshgrid(gu, gv, indexing="ij")
    return float(np.max(pointwise_conjugacy_residual(ms, uu, vv)))


def _stable_eigensystem(p: ModelParams):
    es = solve_reciprocal_quartic(characteristic_poly(p, "origin"))
    if not es.hyperbolic or es.classification != ALL_REAL:
        raise NonHyperbolicError(
            "manifold construction needs four real hyperbolic eigenvalues; "
            f"at A={p.A} the origin's spectrum is {es.classification}"
            + ("" if es.hyperbolic else " (non-hyperbolic)")
        )
    return es


def _unit_residual_fn(p, C_unit, l1, l2):
    """Residual of the unit-gauge stable series probed at scaled parameters."""

    def resid(u, v):
        P = _eval_raw(C_unit, u, v)
        F = np.stack(
            [
                P[1],
                P[2],
                P[3],
                -P[0] - P[1] / p.A + 2.0 * P[2] / p.A
                - P[2] * P[2] * P[2] / (p.epsilon * p.A) - P[3] / p.A,
            ]
        )
        Q = _eval_raw(C_unit, l1 * u, l2 * v)
        return np.linalg.norm(F - Q, axis=0)

    return resid


def _log_bisect(f, cap, tau, refine=25):
    """Largest t <= cap with f(t) <= tau, by bisection in log t; None if none."""
    t = cap
    if f(t) <= tau:
        return t
    lo, hi = None, t
    while t > 1e-14 * cap:
        t /= 4.0
        if f(t) <= tau:
            lo = t
            break
        hi = t
    if lo is None:
        return None
    for _ in range(refine):
        mid = np.sqrt(lo * hi)
        if f(mid) <= tau:
            lo = mid
        else:
            hi = mid
    return lo


def _default_gauge(p, C_unit, l1, l2, tau):
    """Scales (g1, g2) so the unit box carries residual <= tau.

    Two-stage log-bisection: the v-extent is first pushed to its residual
    cliff along the v-edge, then for a descending ladder of v-extents the
    u-extent is bisected against the full-box residual; the pair maximizing
    covered area wins (largest v among near-ties).  Residual level sets in
    the two parameters are strongly anisotropic and the trade-off between
    them is not monotone, so neither single-edge criterion alone is safe.
    """
    resid = _unit_residual_fn(p, C_unit, l1, l2)
    cap = 256.0 * np.sqrt(abs(p.epsilon))
    e41 = np.linspace(-1.0, 1.0, 41)
    z41 = np.zeros(41)
    g2max = _log_bisect(lambda t: np.max(resid(z41, e41 * t)), cap, tau)
    if g2max is None:
        raise GaugeError("no v-extent meets the residual target")
    eu = np.linspace(-1.0, 1.0, 17)
    ev = np.linspace(-1.0, 1.0, 33)
    uu, vv = [x.ravel() for x in np.meshgrid(eu, ev)]
    ladder = np.geomspace(g2max / 30.0, g2max, 12)[::-1]
    table = []
    for g2 in ladder:
        g1 = _log_bisect(lambda t: np.max(resid(uu * t, vv * g2)), cap, tau)
        if g1 is not None:
            table.append((g1 * g2, g1, g2))
    if not table:
        raise GaugeError("no u-extent meets the residual target")
    amax = max(row[0] for row in table)
    for area, g1, g2 in table:  # ladder is v-descending: first near-tie = largest v
        if area >= 0.9 * amax:
            return float(g1), float(g2)
    raise GaugeError("gauge selection failed")  # pragma: no cover


def _rescale_table(C, f1, f2):
    N = C.shape[1] - 1
    w = (f1 ** np.arange(N + 1))[:, None] * (f2 ** np.arange(N + 1))[None, :]
    out = C * w[None, :, :]
    if not np.all(np.isfinite(out)):
        k_bad = min(
            n + m
            for n in range(N + 1)
            for m in range(N + 1)
            if not np.all(np.isfinite(out[:, n, m]))
        )
        raise SeriesOverflowError(k_bad)
    return out


def rescale_series(ms: ManifoldSeries, scale):
    """Re-gauge to new scales; the manifold (as a set) is unchanged."""
    g1, g2 = float(scale[0]), float(scale[1])
    f1, f2 = g1 / ms.scale[0], g2 / ms.scale[1]
    return ManifoldSeries(
        branch=ms.branch,
        order=ms.order,
        rates=ms.rates,
        scale=(g1, g2),
        coeffs=_rescale_table(ms.coeffs, f1, f2),
        params=ms.params,
    )


def compute_manifold(p: ModelParams, branch="stable", order=DEFAULT_ORDER,
                     scale=None, gauge_residual=GAUGE_RESIDUAL):
    """Build one branch up to total degree `order`.

    scale=None runs the automatic gauge policy (resolved on the stable
    series; the unstable branch inherits the reversor-adapted scale
    (g1 l1^3, g2 l2^3), making P_u = sigma5 o P_s).  Pass an explicit
    (g1, g2) to fix the gauge directly.
    """
    if branch not in ("stable", "unstable"):
        raise ValueError("branch must be 'stable' or 'unstable'")
    order = int(order)
    if order < 1:
        raise ValueError("order must be >= 1")
    es = _stable_eigensystem(p)
    l1, l2 = es.stable_pair()
    if scale is None:
        C_unit = _build_coeffs(p, l1, l2, order, 1.0, 1.0)
        g1, g2 = _default_gauge(p, C_unit, l1, l2, gauge_residual)
        if branch == "stable":
            return ManifoldSeries("stable", order, (l1, l2), (g1, g2),
                                  _rescale_table(C_unit, g1, g2), p)
        scale = (g1 * l1**3, g2 * l2**3)
    g1, g2 = float(scale[0]), float(scale[1])
    if branch == "stable":
        rates = (l1, l2)
    else:
        rates = (1.0 / l1, 1.0 / l2)
    C = _build_coeffs(p, rates[0], rates[1], order, g1, g2)
    return ManifoldSeries(branch, order, rates, (g1, g2), C, p)


def compute_manifold_pair(p: ModelParams, order=DEFAULT_ORDER, scale=None,
                          gauge_residual=GAUGE_RESIDUAL):
    """Both branches in matched gauges (one policy run, shared by both)."""
    stable = compute_manifold(p, "stable", order, scale, gauge_residual)
    l1, l2 = stable.rates
    g1, g2 = stable.scale
    unstable = compute_manifold(p, "unstable", order,
                                scale=(g1 * l1**3, g2 * l2**3))
    return stable, unstable


def series_to_dict(ms: ManifoldSeries):
    N = ms.order
    table = {}
    for i in range(4):
        for n in range(N + 1):
            for m in range(N + 1 - n):
                c = ms.coeffs[i, n, m]
                if c != 0.0:
                    table[f"{i + 1},{n},{m}"] = c
    return {
        "branch": ms.branch,
        "order": ms.order,
        "rates": list(ms.rates),
        "scale": list(ms.scale),
        "params": {"epsilon": ms.params.epsilon, "A": ms.params.A},
        "coeffs": table,
    }


def series_from_dict(d):
    N = int(d["order"])
    C = np.zeros((4, N + 1, N + 1))
    for key, val in d["coeffs"].items():
        i, n, m = (int(t) for t in key.split(","))
        C[i - 1, n, m] = val
    return ManifoldSeries(
        branch=d["branch"],
        order=N,
        rates=tuple(float(r) for r in d["rates"]),
        scale=tuple(float(g) for g in d["scale"]),
        coeffs=C,
        params=ModelParams(d["params"]["epsilon"], d["params"]["A"]),
    )


def save_series(ms: ManifoldSeries, path):
    with open(path, "w") as fh:
        json.dump(series_to_dict(ms), fh, sort_keys=True)
        fh.write("\n")


def load_series(path):
    with open(path) as fh:
        return series_from_dict(json.load(fh))
