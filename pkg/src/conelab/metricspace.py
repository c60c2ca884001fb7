"""Finite metric spaces, correspondences, and Gromov-Hausdorff brackets.

A fiber space is handled as an explicit distance table with a distinguished
base point.  Exact GH distance is a branch-and-bound search over
correspondences generated by map pairs (phi: A->B, psi: B->A); every
correspondence contains such a sub-correspondence of no larger distortion,
so the restricted minimum equals the true minimum.

Everything here treats finite samples; where the source theory asks for a
geodesic metric space the finite-sample stand-in is the artifact's own
discretization choice.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeLimit

METRIC_TOL = 1e-9


@dataclass(frozen=True)
class FiniteMetricSpace:
    dist: np.ndarray
    base: int = 0

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "dist", d)
        n = d.shape[0]
        if d.shape != (n, n):
            raise ValueError("distance table must be square")
        if not (0 <= self.base < n):
            raise ValueError("base index out of range")
        if np.abs(d - d.T).max(initial=0.0) > METRIC_TOL:
            raise ValueError("distance table not symmetric")
        if np.abs(np.diag(d)).max(initial=0.0) > METRIC_TOL:
            raise ValueError("nonzero diagonal")
        off = d + np.eye(n) * (1.0 + d.max(initial=0.0))
        if n > 1 and off.min() <= 0.0:
            raise ValueError("distinct points at distance <= 0")
        # triangle inequality, checked in full for moderate sizes
        if n <= 400:
            via = (d[:, :, None] + d[None, :, :]).min(axis=1)
            if (d - via).max() > METRIC_TOL:
                raise ValueError("triangle inequality violated")
        d.setflags(write=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diam(self) -> float:
        return float(self.dist.max(initial=0.0))

    def separation(self) -> float:
        """Smallest positive distance (inf for a single point)."""
        if self.n < 2:
            return math.inf
        d = np.where(np.eye(self.n, dtype=bool), math.inf, self.dist)
        return float(d.min())

    def to_json(self) -> dict:
        return {"n": self.n, "base": self.base,
                "dist": [float(v) for v in self.dist.ravel()]}

    @classmethod
    def from_json(cls, obj) -> "FiniteMetricSpace":
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        d = np.asarray(obj["dist"], dtype=float).reshape(n, n)
        return cls(d, int(obj.get("base", 0)))


def segment(length: float, n: int, base: int = 0) -> FiniteMetricSpace:
    """n evenly spaced points on a segment of the given length."""
    ts = np.linspace(0.0, length, n)
    return FiniteMetricSpace(np.abs(ts[:, None] - ts[None, :]), base)


def circle_arc(radius: float, angle: float, n: int, base: int = 0) -> FiniteMetricSpace:
    """n points on a circular arc with the intrinsic (arc-length) metric."""
    phis = np.linspace(0.0, angle, n)
    d = radius * np.abs(phis[:, None] - phis[None, :])
    return FiniteMetricSpace(d, base)


def single_point() -> FiniteMetricSpace:
    return FiniteMetricSpace(np.zeros((1, 1)), 0)


@dataclass(frozen=True)
class Correspondence:
    """Relation between the index sets of two spaces, surjective both ways."""

    pairs: tuple
    distortion: float = field(default=math.nan)

    @staticmethod
    def build(A: FiniteMetricSpace, B: FiniteMetricSpace, pairs) -> "Correspondence":
        pairs = tuple(sorted(set((int(i), int(j)) for i, j in pairs)))
        ia = {i for i, _ in pairs}
        ib = {j for _, j in pairs}
        if ia != set(range(A.n)) or ib != set(range(B.n)):
            raise ValueError("correspondence not surjective both ways")
        idx = np.array(pairs)
        da = A.dist[idx[:, 0][:, None], idx[:, 0][None, :]]
        db = B.dist[idx[:, 1][:, None], idx[:, 1][None, :]]
        return Correspondence(pairs, float(np.abs(da - db).max()))

    @staticmethod
    def identity(A: FiniteMetricSpace) -> "Correspondence":
        return Correspondence.build(A, A, [(i, i) for i in range(A.n)])


def ball_subspace(X: FiniteMetricSpace, radius: float) -> FiniteMetricSpace:
    """Restriction to the closed ball of the given radius around the base."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    keep = np.flatnonzero(X.dist[X.base] <= radius + METRIC_TOL)
    sub = X.dist[np.ix_(keep, keep)]
    new_base = int(np.flatnonzero(keep == X.base)[0])
    return FiniteMetricSpace(sub, new_base)


def ball_indices(X: FiniteMetricSpace, radius: float) -> np.ndarray:
    return np.flatnonzero(X.dist[X.base] <= radius + METRIC_TOL)


def _greedy_witness(A: FiniteMetricSpace, B: FiniteMetricSpace):
    """Best of two cheap witnesses: base-anchored distance matching and
    (for order-isomorphic samples like segments) affine index matching."""
    ra, rb = A.dist[A.base], B.dist[B.base]
    phi = [int(np.argmin(np.abs(rb - ra[i]))) for i in range(A.n)]
    psi = [int(np.argmin(np.abs(ra - rb[j]))) for j in range(B.n)]
    phi[A.base], psi[B.base] = B.base, A.base
    pairs = [(i, phi[i]) for i in range(A.n)] + [(psi[j], j) for j in range(B.n)]
    best = Correspondence.build(A, B, pairs)
    ia = np.argsort(ra, kind="stable")
    ib = np.argsort(rb, kind="stable")
    afn = [(int(ia[i]), int(ib[round(i * (B.n - 1) / max(A.n - 1, 1))]))
           for i in range(A.n)]
    afn += [(int(ia[round(j * (A.n - 1) / max(B.n - 1, 1))]), int(ib[j]))
            for j in range(B.n)]
    cand = Correspondence.build(A, B, afn)
    return cand if cand.distortion < best.distortion else best


def _greedy_completion(da, db):
    """Cheapest-increment greedy correspondence; a strong initial bound."""
    na, nb = da.shape[0], db.shape[0]
    phi, psi = [], []
    cur = 0.0
    for k in range(na):
        inc = (np.abs(da[k, :k][None, :] - db[:, phi]).max(axis=1)
               if k else np.zeros(nb))
        b = int(np.argmin(inc))
        cur = max(cur, float(inc[b]))
        phi.append(b)
    phi_arr = np.asarray(phi)
    for k in range(nb):
        inc = np.abs(da.T - db[phi_arr, k][None, :]).max(axis=1)
        if k:
            inc = np.maximum(inc, np.abs(db[k, :k][None, :]
                                         - da[:, psi]).max(axis=1))
        a = int(np.argmin(inc))
        cur = max(cur, float(inc[a]))
        psi.append(a)
    return cur, phi, psi


def _feasible_assignment(diff_pp, diff_cross, diff_ss, v: float):
    """Forward-checking search for map pairs (phi, psi) with distortion <= v.

    Variables are the phi rows (domains over B) followed by the psi rows
    (domains over A); domains are bitmasks, most-constrained-first order.
    Returns (phi, psi) or None."""
    na, nb = diff_cross.shape[0], diff_cross.shape[2]
    nv = na + nb
    # pairwise compatibility masks: allowed[u][val][w] = bitmask for w
    ok_pp = diff_pp <= v
    ok_cc = diff_ss <= v
    ok_cr = diff_cross <= v

    def pack(bools):
        out = 0
        for i, t in enumerate(bools):
            if t:
                out |= 1 << i
        return out

    allowed = [[[0] * nv for _ in range(max(na, nb))] for _ in range(nv)]
    for i in range(na):
        for b in range(nb):
            for j in range(na):
                allowed[i][b][j] = pack(ok_pp[i, j, b, :])
            for l in range(nb):
                allowed[i][b][na + l] = pack(ok_cr[i, :, b, l])
    for k in range(nb):
        for a in range(na):
            for l in range(nb):
                allowed[na + k][a][na + l] = pack(ok_cc[k, l, a, :])
            for j in range(na):
                allowed[na + k][a][j] = pack(ok_cr[j, a, :, k])

    full = [(1 << nb) - 1] * na + [(1 << na) - 1] * nb
    assign = [-1] * nv

    def search(domains, todo):
        if not todo:
            return True
        u = min(todo, key=lambda w: bin(domains[w]).count("1"))
        dom = domains[u]
        rest = [w for w in todo if w != u]
        while dom:
            val = (dom & -dom).bit_length() - 1
            dom &= dom - 1
            nd = list(domains)
            nd[u] = 1 << val
            dead = False
            for w in rest:
                nd[w] &= allowed[u][val][w]
                if nd[w] == 0:
                    dead = True
                    break
            if not dead:
                assign[u] = val
                if search(nd, rest):
                    return True
        return False

    if search(full, list(range(nv))):
        return assign[:na], assign[na:]
    return None


def _exact_search(A: FiniteMetricSpace, B: FiniteMetricSpace, upper0: float):
    """Exact minimal correspondence distortion via binary search over the
    finite candidate set {|d_A - d_B|} with a feasibility CSP per value."""
    da, db = A.dist, B.dist
    na, nb = A.n, B.n
    # diff_pp[i,j,b,b'] = |da[i,j] - db[b,b']|; the same tensor indexed as
    # [i,a,b,k] covers the cross constraints between phi and psi rows
    diff_pp = np.abs(da[:, :, None, None] - db[None, None, :, :])
    diff_cr = diff_pp
    diff_ss = np.abs(db[:, :, None, None] - da[None, None, :, :])
    g_dis, g_phi, g_psi = _greedy_completion(da, db)
    upper = min(upper0, g_dis)
    values = np.unique(diff_pp)
    values = values[values <= upper + 1e-15]
    lo_i, hi_i = 0, len(values) - 1
    best = None
    while lo_i <= hi_i:
        mid = (lo_i + hi_i) // 2
        got = _feasible_assignment(diff_pp, diff_cr, diff_ss, float(values[mid]))
        if got is not None:
            best = (float(values[mid]), got)
            hi_i = mid - 1
        else:
            lo_i = mid + 1
    if best is None:
        best = (g_dis, (g_phi, g_psi))
    dis, (phi, psi) = best
    pairs = [(i, int(phi[i])) for i in range(na)]
    pairs += [(int(psi[j]), j) for j in range(nb)]
    return dis, pairs


def _heuristic_lower(A: FiniteMetricSpace, B: FiniteMetricSpace) -> float:
    """Certified lower bounds: diameter gap, and pigeonhole separation when
    the larger space cannot inject into the smaller one."""
    lb = 0.5 * abs(A.diam - B.diam)
    if A.n > B.n:
        lb = max(lb, 0.5 * A.separation())
    if B.n > A.n:
        lb = max(lb, 0.5 * B.separation())
    return lb


def gh_distance(A: FiniteMetricSpace, B: FiniteMetricSpace, mode: str = "heuristic"):
    """Bracket (lower, upper, witness) for the Gromov-Hausdorff distance.

    mode="exact" returns lower == upper == half the minimal correspondence
    distortion; the search is exponential, hence the n <= 8 cap.
    """
    if mode not in ("exact", "heuristic"):
        raise ValueError("mode must be 'exact' or 'heuristic'")
    witness = _greedy_witness(A, B)
    upper = 0.5 * witness.distortion
    if mode == "heuristic":
        lower = min(_heuristic_lower(A, B), upper)
        return lower, upper, witness
    if max(A.n, B.n) > 8:
        raise SizeLimit(f"exact GH search capped at 8 points, got {max(A.n, B.n)}")
    dis, pairs = _exact_search(A, B, witness.distortion)
    witness = Correspondence.build(A, B, pairs)
    val = 0.5 * witness.distortion
    return val, val, witness


def relabel(X: FiniteMetricSpace, perm) -> FiniteMetricSpace:
    perm = np.asarray(perm, dtype=int)
    inv = np.argsort(perm)
    return FiniteMetricSpace(X.dist[np.ix_(perm, perm)], int(inv[X.base]))
