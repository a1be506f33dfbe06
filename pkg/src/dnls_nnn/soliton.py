"""Soliton profiles from homoclinic orbits, and 2-d phase portraits.

A homoclinic point q = (u_{-1}, u_0, u_1, u_2) of the 4-d map encodes a
bi-infinite lattice profile {u_n} through the sliding window
f^n(q) = (u_{n-1}, u_n, u_{n+1}, u_{n+2}).  The profile solves the
stationary lattice equation

    u_n^3 + eps (u_{n+1} - 2 u_n + u_{n-1} + A (u_{n+2} + u_{n-2})) = 0

and decays to zero in both directions.  Tails are NOT generated by
iterating the map itself: backward iteration of a stable-manifold point
(or forward of an unstable one) amplifies floating-point error by the
reciprocal eigenvalues each step, which destroys the profile near the
floor.  Instead the conjugacy is used in its contracting direction: the
tail sample n steps out is the series evaluated at geometrically shrunk
parameters, which is uniformly accurate all the way down to underflow.

For reversor-symmetric homoclinic points the profile obeys the mirror
symmetry u_n = u_{1-n} (centered between sites 0 and 1), and both tails
decay at the rate of the largest stable eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .homoclinic import HomoclinicSolution
from .manifold import ManifoldSeries, evaluate_series
from .maps import ModelParams, map2_apply, nonwandering_bound

__all__ = [
    "SolitonProfile",
    "ProfileError",
    "Orbit2D",
    "build_profile",
    "stationary_residual",
    "mirror_defect",
    "portrait_2d",
]

FLOOR = 1e-14


class ProfileError(RuntimeError):
    """The tail failed to decay to the floor within the step budget."""


@dataclass(frozen=True)
class SolitonProfile:
    """Finite window of a decaying lattice profile.

    indices are contiguous site numbers n, values the amplitudes u_n.
    residual_max is the sup of the stationary-equation defect over the
    window (zero-padded outside); tail_decay holds the fitted per-site
    decay ratios of the (left, right) tails.
    """

    params: ModelParams
    indices: np.ndarray
    values: np.ndarray
    residual_max: float
    tail_decay: tuple


def _tail_ratio(n, vals, floor, peak):
    """Per-site decay ratio of one tail by a log-linear fit.

    The fit window excludes the near-floor samples (dominated by the
    truncation) and the near-peak samples (not yet asymptotic).
    """
    mag = np.abs(vals)
    keep = (mag > 1e3 * floor) & (mag < 1e-2 * peak)
    if np.count_nonzero(keep) < 2:
        return float("nan")
    slope = np.polyfit(n[keep], np.log(mag[keep]), 1)[0]
    return float(np.exp(slope))


def build_profile(sol: HomoclinicSolution, Pu: ManifoldSeries,
                  Ps: ManifoldSeries, floor=FLOOR, max_steps=500):
    """Materialize the lattice profile of a homoclinic orbit.

    Core sites come from the matched point itself; the right tail is the
    stable series at parameters shrunk k times, the left tail the unstable
    series likewise (its conjugacy contracts under the inverse map).  Each
    tail extends until the whole window state drops below the floor in
    sup-norm; a tail that cannot reach the floor within max_steps raises
    ProfileError.
    """
    l1s, l2s = Ps.rates
    l1u, l2u = 1.0 / Pu.rates[0], 1.0 / Pu.rates[1]
    ks = np.arange(1, int(max_steps) + 1)
    fw_states = evaluate_series(Ps, sol.u2 * l1s**ks, sol.v2 * l2s**ks)
    bw_states = evaluate_series(Pu, sol.u1 * l1u**ks, sol.v1 * l2u**ks)
    fw_sup = np.max(np.abs(fw_states), axis=-1)
    bw_sup = np.max(np.abs(bw_states), axis=-1)
    fw_stop = np.nonzero(fw_sup < floor)[0]
    bw_stop = np.nonzero(bw_sup < floor)[0]
    if fw_stop.size == 0 or bw_stop.size == 0:
        raise ProfileError(
            f"tail above floor {floor:g} after {max_steps} steps; "
            "the matched point does not decay (or max_steps is too small)"
        )
    kf = int(fw_stop[0])  # number of right-tail samples kept
    kb = int(bw_stop[0])
    # window at step k: f^k(q) = (u_{k-1}, u_k, u_{k+1}, u_{k+2})
    right = fw_states[:kf, 3]            # u_3 .. u_{kf+2}
    left = bw_states[:kb, 0][::-1]       # u_{-kb-1} .. u_{-2}
    core = np.asarray(sol.point, dtype=float)  # u_{-1} .. u_2
    values = np.concatenate([left, core, right])
    indices = np.arange(-kb - 1, kf + 3)
    peak = float(np.max(np.abs(values)))
    # decay ratios vs distance from the center on each side
    decay = (_tail_ratio(-indices[:kb], values[:kb], floor, peak),
             _tail_ratio(indices[kb + 4:], values[kb + 4:], floor, peak))
    return SolitonProfile(
        params=sol.params,
        indices=indices,
        values=values,
        residual_max=_residual_of_values(values, sol.params),
        tail_decay=decay,
    )


def _residual_of_values(values, p: ModelParams):
    u = np.concatenate([np.zeros(4), np.asarray(values, dtype=float),
                        np.zeros(4)])
    c = u[2:-2]
    r = (c * c * c + p.epsilon * (u[3:-1] - 2.0 * c + u[1:-3]
                             + p.A * (u[4:] + u[:-4])))
    return float(np.max(np.abs(r)))


def stationary_residual(profile: SolitonProfile, p: ModelParams = None):
    """Sup-norm defect of the stationary lattice equation over the window.

    The profile is zero outside its window, so the defect is evaluated on
    the window extended by two sites each way; beyond that every term is
    identically zero.
    """
    return _residual_of_values(profile.values,
                               profile.params if p is None else p)


def mirror_defect(profile: SolitonProfile):
    """Sup of |u_n - u_{1-n}| over all mirror pairs inside the window."""
    idx = {int(n): i for i, n in enumerate(profile.indices)}
    worst = 0.0
    for n, i in idx.items():
        j = idx.get(1 - n)
        if j is not None:
            worst = max(worst, abs(profile.values[i] - profile.values[j]))
    return float(worst)


@dataclass(frozen=True)
class Orbit2D:
    """One seed's forward orbit under the 2-d map."""

    seed: np.ndarray
    points: np.ndarray  # (k+1, 2) including the seed
    escaped: bool


def portrait_2d(p: ModelParams, seeds, steps=10000):
    """Iterate the 2-d map from many seeds at once.

    A seed escapes when its orbit leaves ten times the non-wandering ball
    (such orbits blow up in a handful of further steps) or goes non-finite;
    its stored orbit stops at the escape step.  Returns one Orbit2D per
    seed, in seed order.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if seeds.shape[-1] != 2:
        raise ValueError("seeds must have two components")
    steps = int(steps)
    limit = 10.0 * nonwandering_bound(p, dim=2)
    nseed = seeds.shape[0]
    alive = np.ones(nseed, dtype=bool)
    esc = np.zeros(nseed, dtype=bool)
    cut = np.full(nseed, steps)  # index of each seed's last stored point
    trail = np.empty((steps + 1, nseed, 2))
    trail[0] = seeds
    x = seeds.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps + 1):
            x[alive] = map2_apply(x[alive], p)
            trail[k] = x  # rows of dead seeds are stale but never read
            sup = np.max(np.abs(x), axis=-1)
            bad = alive & (~np.isfinite(sup) | (sup > limit))
            cut[bad] = k
            esc |= bad
            alive &= ~bad
            if not alive.any():
                break
    out = []
    for i in range(nseed):
        pts = trail[: cut[i] + 1, i].copy()
        if esc[i] and not np.all(np.isfinite(pts[-1])):
            pts = pts[:-1]  # keep only finite states in the stored orbit
        out.append(Orbit2D(seed=seeds[i].copy(), points=pts,
                           escaped=bool(esc[i])))
    return out
