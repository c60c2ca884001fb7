"""Warped-product Lorentzian cones on a grid, with certified bracket tables.

The signed time separation of a cone built from an interval, a warping f
and a fiber metric space depends on fiber points only through their
distance, so the whole causal structure is stored as a pair of 3-argument
tables tau2d(s_idx, t_idx, r_idx) over a uniform distance grid.

The lower table is a longest-path value over a layered DAG: states are
(time index, fiber distance travelled), edges span at most `window` time
steps and any number of distance cells, weighted sqrt(dt^2 - (C dr)^2)
with C the interval max of f.  Each DP path is a genuine causal curve of
the cone whose true length dominates the path value (the interval max
shrinks the causal cone), so lo <= tau everywhere; the path family is
closed under concatenation, so the reverse triangle inequality is exact on
the grid.  The upper table is the Lagrange-dual envelope for the step-min
warping g <= f (whose separation dominates tau by warping monotonicity):
tau_g(i,j,r) = inf_mu [Phi_ij(mu) - mu r] with Phi prefix-summable over
time steps, evaluated on a finite mu-grid; the reverse triangle follows
exactly from additivity of Phi under interval concatenation, and a
negative envelope value certifies non-causality.

Real fiber distances are rounded up (lo) / down (hi) onto the distance
grid; since tau is nonincreasing in the distance argument this preserves
the one-sided guarantees at point pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotCausallyRelated, ResourceLimit
from .metricspace import FiniteMetricSpace, ball_indices
from .warp import WarpingFunction

NEG_INF = -math.inf
MAX_TABLE_ENTRIES = 2.0e8


def _running_extrema(vals: np.ndarray, window: int):
    """Interval max and min of the sampled warping over [i, j] for j-i <= window.

    Returns dict keyed by span s=j-i with arrays over i."""
    n = vals.size
    cmax = {1: np.maximum(vals[:-1], vals[1:])}
    cmin = {1: np.minimum(vals[:-1], vals[1:])}
    for s in range(2, window + 1):
        if n - s < 1:
            break
        cmax[s] = np.maximum(cmax[s - 1][:-1], vals[s:])
        cmin[s] = np.minimum(cmin[s - 1][:-1], vals[s:])
    return cmax, cmin


class GeneralizedCone:
    """Discrete cone: time grid of the warping x finite fiber, N-cone measure.

    Tables are built lazily on first causal query and cached.
    """

    def __init__(self, f: WarpingFunction, X: FiniteMetricSpace, N: float = 1.0,
                 dist_steps: int | None = None, window: int = 8,
                 dist_refine: int = 1, fiber_weights=None,
                 max_entries: float = MAX_TABLE_ENTRIES):
        if N < 1.0:
            raise ValueError("measure exponent N must be >= 1")
        self.f = f
        self.X = X
        self.N = float(N)
        self.time_grid = f.ts
        diam = X.diam
        nt = f.n
        if dist_steps is None:
            mean_dt = float(np.mean(np.diff(f.ts)))
            dist_steps = max(1, int(round(diam / mean_dt))) if diam > 0 else 0
        # allocation quantization (integer cells per DP edge) limits accuracy
        # near the null boundary; dist_refine subdivides cells to push it down
        self.dist_refine = max(1, int(dist_refine))
        self.dist_steps = int(dist_steps) * self.dist_refine
        if self.dist_steps == 0 and diam > 0:
            raise ValueError("dist_steps must be positive for a spread fiber")
        self.m = self.dist_steps + 1
        self.dr = diam / self.dist_steps if self.dist_steps > 0 else 0.0
        self.dist_grid = (np.arange(self.m) * self.dr if self.dr > 0
                          else np.zeros(1))
        if window is None or window >= nt:
            window = nt - 1
        self.window = max(1, int(window))
        if nt * nt * self.m > max_entries:
            raise ResourceLimit(
                f"table would hold {nt * nt * self.m:.3g} entries "
                f"(budget {max_entries:.3g})")
        if fiber_weights is None:
            fiber_weights = np.ones(X.n)
        self.fiber_weights = np.asarray(fiber_weights, dtype=float)
        self._lo = None
        self._hi = None
        self._measure = None

    # -- table construction -------------------------------------------------

    def _build_lower(self) -> np.ndarray:
        """Longest-path DP over (time, distance-cell) states.

        Edge (u -> t, k cells), t - u <= window, weighted by
        sqrt(dt^2 - (max_[u,t] f * k dr)^2): every DP path is a causal curve
        of the cone whose true length dominates the path value."""
        ts, vals = self.f.ts, self.f.vals
        n, m, dr, W = self.f.n, self.m, self.dr, self.window
        if self.f.is_zero:
            dt = ts[None, :] - ts[:, None]
            T = np.where(dt >= 0, dt, NEG_INF)[:, :, None]
            return np.broadcast_to(T, (n, n, m)).copy()
        cmax, _ = _running_extrema(vals, W)
        T = np.full((n, n, m), NEG_INF)
        T[np.arange(n), np.arange(n), 0] = 0.0
        deltas = np.arange(m) * dr
        for t in range(1, n):
            for u in range(max(0, t - W), t):
                c = cmax[t - u][u]
                dt = ts[t] - ts[u]
                feas = dt >= c * deltas
                w = np.sqrt(np.maximum(dt * dt - (c * deltas) ** 2, 0.0))
                src = T[:, u, :]
                dst = T[:, t, :]
                for k in range(m):
                    if not feas[k]:
                        break
                    if k == 0:
                        np.maximum(dst, src + w[0], out=dst)
                    else:
                        np.maximum(dst[:, k:], src[:, :m - k] + w[k],
                                   out=dst[:, k:])
        return T

    def _build_upper(self, n_mu: int = 48) -> np.ndarray:
        """Certified upper table via Lagrange duality for the step-min cone.

        With g = step-wise min of f (so tau_f <= tau_g by warping
        monotonicity), tau_g(i,j,r) = inf_mu [Phi_ij(mu) - mu r] where
        Phi_ij(mu) = sum_k dt_k sqrt(c_k^2 + mu^2)/c_k over the steps in
        [i, j).  A finite mu-grid gives the upper envelope of tangent
        lines; Phi is prefix-summable, so the reverse triangle inequality
        is exact by min-splitting.  Negative envelope values certify
        non-causality (tau >= 0 would force the dual >= 0)."""
        ts, vals = self.f.ts, self.f.vals
        n, m = self.f.n, self.m
        dt = np.diff(ts)
        if self.f.is_zero:
            d = ts[None, :] - ts[:, None]
            T = np.where(d >= 0, d, NEG_INF)[:, :, None]
            return np.broadcast_to(T, (n, n, m)).copy()
        c = np.minimum(vals[:-1], vals[1:])
        zero = c <= 0.0
        zcount = np.concatenate([[0], np.cumsum(zero)])
        cpos = np.where(zero, 1.0, c)
        pos = cpos[~zero] if (~zero).any() else np.array([1.0])
        mus = np.concatenate([
            [0.0],
            np.geomspace(max(pos.min() * 1e-3, 1e-9), pos.max() * 2e3, n_mu)])
        tgrid = ts[None, :] - ts[:, None]          # Phi at mu = 0
        crossing = (zcount[None, :] - zcount[:, None]) > 0
        hi = np.where(tgrid >= 0, tgrid, NEG_INF)
        hi = np.repeat(hi[:, :, None], m, axis=2)
        rvals = self.dist_grid
        # lines through zero-min steps are +inf: those pairs keep mu = 0
        oki, okj = np.nonzero((tgrid >= 0) & ~crossing)
        sub = hi[oki, okj, :]
        buf = np.empty_like(sub)
        for mu in mus[1:]:
            phi = dt * np.sqrt(cpos * cpos + mu * mu) / cpos
            phi = np.where(zero, 0.0, phi)
            B = np.concatenate([[0.0], np.cumsum(phi)])
            np.subtract(np.take(B, okj)[:, None] - np.take(B, oki)[:, None],
                        mu * rvals[None, :], out=buf)
            np.minimum(sub, buf, out=sub)
        hi[oki, okj, :] = sub
        hi[hi < 0.0] = NEG_INF
        return hi

    def tables(self):
        """(lo, hi) tables of shape (n_time, n_time, n_dist)."""
        if self._lo is None:
            self._lo = self._build_lower()
            self._hi = self._build_upper()
        return self._lo, self._hi

    # -- lookups -------------------------------------------------------------

    def _rcell(self, d: float, upper: bool) -> int:
        if self.dr == 0.0:
            return 0
        x = d / self.dr
        return int(math.floor(x + 1e-9)) if upper else int(math.ceil(x - 1e-9))

    def tau2d(self, si: int, ti: int, ri: int, upper: bool = False) -> float:
        lo, hi = self.tables()
        return float((hi if upper else lo)[si, ti, ri])

    def signed_separation(self, p, q) -> float:
        """Canonical signed separation (lower table); -inf when not causal."""
        (si, xi), (ti, yi) = p, q
        if ti < si:
            return NEG_INF
        lo, _ = self.tables()
        return float(lo[si, ti, self._rcell(self.X.dist[xi, yi], upper=False)])

    def signed_separation_upper(self, p, q) -> float:
        (si, xi), (ti, yi) = p, q
        if ti < si:
            return NEG_INF
        _, hi = self.tables()
        return float(hi[si, ti, self._rcell(self.X.dist[xi, yi], upper=True)])

    def causally_related(self, p, q) -> bool:
        return self.signed_separation(p, q) >= 0.0

    def chronological(self, p, q) -> bool:
        return self.signed_separation(p, q) > 0.0

    def bracket_width(self) -> float:
        """Max over grid entries of hi - lo on the causally related set."""
        lo, hi = self.tables()
        mask = lo >= 0.0
        if not mask.any():
            return 0.0
        return float((hi[mask] - lo[mask]).max())

    # -- geodesics -----------------------------------------------------------

    def maximizer(self, p, q) -> "GridGeodesic":
        """DP-optimal causal grid path realizing the lower-table value."""
        (si, xi), (ti, yi) = p, q
        val = self.signed_separation(p, q)
        if val == NEG_INF:
            raise NotCausallyRelated(f"{p} !<= {q}")
        lo, _ = self.tables()
        ts, vals = self.f.ts, self.f.vals
        cmax, _ = _running_extrema(vals, self.window) if not self.f.is_zero else (None, None)
        r = self._rcell(self.X.dist[xi, yi], upper=False)
        states = [(ti, r)]
        weights = []
        t, rr = ti, r
        while (t, rr) != (si, 0):
            found = False
            for u in range(max(si, t - self.window), t):
                dt = ts[t] - ts[u]
                c = cmax[t - u][u] if cmax is not None else 0.0
                for k in range(rr + 1):
                    d_eff = k * self.dr
                    if c * d_eff > dt + 1e-12:
                        break
                    w = math.sqrt(max(dt * dt - (c * d_eff) ** 2, 0.0))
                    prev = lo[si, u, rr - k]
                    if prev > NEG_INF and abs(prev + w - lo[si, t, rr]) <= 1e-9 * (1 + abs(val)):
                        states.append((u, rr - k))
                        weights.append(w)
                        t, rr = u, rr - k
                        found = True
                        break
                if found:
                    break
            if not found:
                raise NotCausallyRelated("backtrace failed; table inconsistent")
        states.reverse()
        weights.reverse()
        return GridGeodesic(cone=self,
                            states=tuple((int(a), float(b * self.dr)) for a, b in states),
                            weights=tuple(float(w) for w in weights),
                            tau_length=float(val))

    def causal_diamond(self, p, q):
        """Grid states u with p <= u <= q under the canonical relation."""
        out = []
        for a in range(p[0], q[0] + 1):
            for x in range(self.X.n):
                u = (a, x)
                if self.causally_related(p, u) and self.causally_related(u, q):
                    out.append(u)
        return out

    def imprisonment_bound(self, time_len: float, fiber_diam: float) -> float:
        """Metric arclength bound for causal curves in a cover set.

        Causal curves satisfy f|beta'| <= alpha', so the product-metric speed
        is at most sqrt(2) alpha'; fiber travel is further capped by the ball
        diameter at max f."""
        fmax = self.f.max()
        fmin = float(self.f.vals.min())
        fiber_travel = fiber_diam if fmin <= 0 else min(time_len / fmin, fiber_diam)
        return min(math.sqrt(2.0) * time_len, time_len + fmax * fiber_travel)

    # -- measure ---------------------------------------------------------------

    def time_cell_widths(self) -> np.ndarray:
        ts = self.f.ts
        mids = 0.5 * (ts[1:] + ts[:-1])
        edges = np.concatenate([[ts[0]], mids, [ts[-1]]])
        return np.diff(edges)

    def reference_measure(self) -> np.ndarray:
        """Cell weights f(t_i)^N * dt_i * w_x, shape (n_time, n_fiber)."""
        if self._measure is None:
            wt = self.f.vals ** self.N * self.time_cell_widths()
            self._measure = wt[:, None] * self.fiber_weights[None, :]
        return self._measure

    # -- rescaling ---------------------------------------------------------------

    def rescale(self, eps: float) -> "GeneralizedCone":
        """The 1/eps-rescaled cone: times and fiber distances divided by eps;
        signed separations scale by 1/eps on corresponding grid pairs."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        f2 = WarpingFunction(self.f.ts / eps, self.f.vals)
        X2 = FiniteMetricSpace(self.X.dist / eps, self.X.base)
        return GeneralizedCone(f2, X2, N=self.N, dist_steps=self.dist_steps,
                               window=self.window, fiber_weights=self.fiber_weights)

    def with_scaled_warp_fiber(self, lam: float) -> "GeneralizedCone":
        f2 = WarpingFunction(self.f.ts, self.f.vals * lam)
        X2 = FiniteMetricSpace(self.X.dist / lam, self.X.base)
        return GeneralizedCone(f2, X2, N=self.N, dist_steps=self.dist_steps,
                               window=self.window, fiber_weights=self.fiber_weights)

    def scaling_isomorphism_check(self, lam: float) -> float:
        """Max |l - l'| over grid pairs for the (lam f, X/lam) cone."""
        if lam <= 0:
            raise ValueError("lambda must be positive")
        other = self.with_scaled_warp_fiber(lam)
        lo, _ = self.tables()
        lo2, _ = other.tables()
        both = (lo > NEG_INF) & (lo2 > NEG_INF)
        dev = float(np.abs(lo[both] - lo2[both]).max()) if both.any() else 0.0
        if (lo > NEG_INF).sum() != (lo2 > NEG_INF).sum():
            dev = math.inf
        return dev

    # -- io ---------------------------------------------------------------------

    def to_json(self) -> dict:
        return {"warp": self.f.to_json(), "fiber": self.X.to_json(),
                "N": self.N, "timeSteps": self.f.n - 1,
                "distSteps": self.dist_steps, "window": self.window}

    @classmethod
    def from_json(cls, obj) -> "GeneralizedCone":
        if isinstance(obj, str):
            obj = json.loads(obj)
        f = WarpingFunction.from_json(obj["warp"])
        steps = obj.get("timeSteps")
        if steps is not None and int(steps) + 1 != f.n:
            ts = np.linspace(f.a, f.b, int(steps) + 1)
            f = WarpingFunction(ts, f(ts))
        X = FiniteMetricSpace.from_json(obj["fiber"])
        return cls(f, X, N=float(obj.get("N", 1.0)),
                   dist_steps=obj.get("distSteps"),
                   window=int(obj.get("window", 8)),
                   dist_refine=int(obj.get("distRefine", 1)))

    def export_rows(self):
        """CSV rows (s, t, r, lo, hi) over the grid."""
        lo, hi = self.tables()
        ts, rs = self.f.ts, self.dist_grid
        for i in range(self.f.n):
            for j in range(i, self.f.n):
                for k in range(self.m):
                    yield (ts[i], ts[j], rs[k], lo[i, j, k], hi[i, j, k])


@dataclass(frozen=True)
class GridGeodesic:
    """Causal grid path: (time index, fiber distance travelled) states."""

    cone: GeneralizedCone
    states: tuple
    weights: tuple
    tau_length: float

    def __post_init__(self):
        tidx = [s[0] for s in self.states]
        if any(b <= a for a, b in zip(tidx, tidx[1:])):
            raise ValueError("states must be strictly increasing in time")

    @property
    def cumulative(self):
        out = [0.0]
        for w in self.weights:
            out.append(out[-1] + w)
        return out

    def character(self, null_tol: float = 1e-9):
        """'timelike' | 'null' | 'mixed', judged step-wise."""
        kinds = set()
        ts = self.cone.f.ts
        for (a, _), (b, _), w in zip(self.states, self.states[1:], self.weights):
            dt = ts[b] - ts[a]
            kinds.add("null" if w <= null_tol + 1e-6 * dt else "timelike")
        if len(kinds) > 1:
            return "mixed"
        return kinds.pop() if kinds else "timelike"

    def energy_diagnostic(self):
        """Per-edge Clairaut values fbar^2 * (fiber speed in tau-arclength).

        Along a timelike maximizer the fiber speed is proportional to
        1/f^2, so these values should agree across edges up to grid error;
        kept as a diagnostic only (the tables never use it)."""
        ts, vals = self.cone.f.ts, self.cone.f.vals
        out = []
        for (a, ra), (b, rb), w in zip(self.states, self.states[1:],
                                       self.weights):
            if rb - ra <= 0 or w <= 1e-12:
                continue
            fbar = float(vals[a:b + 1].max())
            out.append(fbar * fbar * (rb - ra) / w)
        return out

    def state_at(self, t: float):
        """State at normalized parameter t in [0, 1] (tau-arclength when
        timelike, time fraction when null); edges are subdivided linearly
        and the result snapped to the nearest grid state."""
        if t <= 0.0:
            return self.states[0]
        if t >= 1.0:
            return self.states[-1]
        if self.tau_length > 1e-12:
            target = t * self.tau_length
            cum = self.cumulative
            for k in range(len(self.weights)):
                if cum[k + 1] >= target - 1e-12:
                    w = self.weights[k]
                    frac = 0.0 if w <= 1e-15 else (target - cum[k]) / w
                    (a, ra), (b, rb) = self.states[k], self.states[k + 1]
                    tidx = int(round(a + frac * (b - a)))
                    return (tidx, ra + frac * (rb - ra))
            return self.states[-1]
        ts = self.cone.f.ts
        t0, t1 = ts[self.states[0][0]], ts[self.states[-1][0]]
        target = t0 + t * (t1 - t0)
        return min(self.states, key=lambda s: abs(ts[s[0]] - target))


def minkowski_strip(t0=0.0, t1=2.0, time_steps=200, fiber=None,
                    fiber_len=1.0, fiber_points=101, window=8, N=1.0):
    """Flat strip -[t0,t1] x segment: the standard closed-form test cone."""
    from .metricspace import segment
    ts = np.linspace(t0, t1, time_steps + 1)
    f = WarpingFunction(ts, np.ones_like(ts))
    if fiber is None:
        fiber = segment(fiber_len, fiber_points)
    return GeneralizedCone(f, fiber, N=N, window=window)
