"""Exhaustive negative-dependence checks on finite joint laws.

Non-decreasing test functions on a finite poset decompose as a constant plus
a non-negative combination of up-set indicators, and covariance is bilinear
and constant-blind, so verifying

    Cov(f(X_A), g(X_{A^c})) <= 0   for all non-decreasing f, g

reduces to checking all pairs of up-set indicators.  Two exact strategies are
used: when both sides have few up-sets, the full pair matrix is evaluated;
otherwise the smaller side is enumerated and, for each of its up-sets, the
worst partner on the other side is found exactly as a maximum-weight closed
set (min-cut), which covers every up-set without listing them.

Either way a "holds" verdict means the quantified statement was verified
exhaustively; enumeration that would exceed the configured caps refuses
rather than sampling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import EnumerationTooLargeError, MarginalMismatchError
from .pmf import JointPmf

UPSET_CAP = 10**6
POINT_CAP = 24
PAIR_WORK_CAP = 5 * 10**6
COV_TOL = 1e-10

_FLOW_SCALE = 10**14  # weight quantization for the integer min-cut


@dataclass(frozen=True)
class UpSet:
    """An upward-closed subset of a finite componentwise-ordered support."""

    poset: tuple
    members: frozenset

    def __post_init__(self):
        pts = set(self.poset)
        for v in self.members:
            if v not in pts:
                raise ValueError("member outside poset")
        for v in self.members:
            for w in self.poset:
                if w not in self.members and _ge(w, v):
                    raise ValueError("set is not upward closed")


def _ge(a: tuple, b: tuple) -> bool:
    return all(x >= y for x, y in zip(a, b))


def _dominance(points: Sequence[tuple]) -> np.ndarray:
    """ge[i, j] = points[i] >= points[j] componentwise."""
    arr = np.asarray(points, dtype=float)
    return np.all(arr[:, None, :] >= arr[None, :, :], axis=2)


def chain_bound(points: Sequence[tuple]) -> int:
    """Upper bound on the up-set count from a greedy chain partition."""
    order = sorted(range(len(points)), key=lambda i: (sum(points[i]), points[i]))
    chains: list[list[int]] = []
    for i in order:
        for ch in chains:
            if _ge(points[i], points[ch[-1]]):
                ch.append(i)
                break
        else:
            chains.append([i])
    bound = 1
    for ch in chains:
        bound *= len(ch) + 1
        if bound > 10**18:
            return 10**18
    return bound


def _enumerable(points: Sequence[tuple], point_cap: int, upset_cap: int) -> bool:
    return len(points) <= point_cap or chain_bound(points) <= upset_cap


def _upset_masks(points: Sequence[tuple], cap: int) -> list[int]:
    """All up-sets as bitmasks over point indices, excluding empty and full.

    Deterministic order: points are processed in a descending linear
    extension; at each point the exclude branch is explored first.
    """
    p = len(points)
    order = sorted(range(p), key=lambda i: (-sum(points[i]),
                                            tuple(-c for c in points[i])))
    ge = _dominance(points)
    parents = []
    for pos, i in enumerate(order):
        mask = 0
        for prev in range(pos):
            j = order[prev]
            if i != j and ge[j, i]:
                mask |= 1 << prev
        parents.append(mask)
    full = (1 << p) - 1
    out: list[int] = []
    stack = [(0, 0)]
    while stack:
        pos, cur = stack.pop()
        if pos == p:
            if cur != 0 and cur != full:
                orig = 0
                for b in range(p):
                    if cur >> b & 1:
                        orig |= 1 << order[b]
                out.append(orig)
                if len(out) > cap:
                    raise EnumerationTooLargeError(
                        f"up-set count exceeds cap {cap}")
            continue
        # LIFO stack: push include first so exclude is explored first
        if parents[pos] & cur == parents[pos]:
            stack.append((pos + 1, cur | (1 << pos)))
        stack.append((pos + 1, cur))
    return out


def enumerate_up_sets(support: Sequence[tuple],
                      point_cap: int = POINT_CAP,
                      upset_cap: int = UPSET_CAP) -> Iterator[UpSet]:
    """Yield every non-trivial up-set of the support exactly once."""
    points = tuple(tuple(float(c) for c in v) for v in support)
    if len(set(points)) != len(points):
        raise ValueError("support points must be distinct")
    if not _enumerable(points, point_cap, upset_cap):
        raise EnumerationTooLargeError(
            f"support of {len(points)} points with chain bound "
            f"{chain_bound(points)} exceeds caps ({point_cap} points, "
            f"{upset_cap} up-sets)")
    for mask in _upset_masks(points, upset_cap):
        yield UpSet(points, frozenset(points[i] for i in range(len(points))
                                      if mask >> i & 1))


# ---------------------------------------------------------------------------
# Maximum-weight closed set via Dinic min-cut (integer capacities)


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.to: list[int] = []
        self.cap: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add(self, u: int, v: int, c: int):
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        while True:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for e in self.adj[u]:
                    if self.cap[e] > 0 and level[self.to[e]] < 0:
                        level[self.to[e]] = level[u] + 1
                        queue.append(self.to[e])
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def dfs(u: int, pushed: int) -> int:
                if u == t:
                    return pushed
                while it[u] < len(self.adj[u]):
                    e = self.adj[u][it[u]]
                    v = self.to[e]
                    if self.cap[e] > 0 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[e]))
                        if got:
                            self.cap[e] -= got
                            self.cap[e ^ 1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                pushed = dfs(s, 1 << 62)
                if not pushed:
                    break
                flow += pushed

    def source_side(self, s: int) -> set[int]:
        seen = {s}
        queue = [s]
        for u in queue:
            for e in self.adj[u]:
                if self.cap[e] > 0 and self.to[e] not in seen:
                    seen.add(self.to[e])
                    queue.append(self.to[e])
        return seen


def _covering_edges(points: Sequence[tuple]) -> list[tuple[int, int]]:
    ge = _dominance(points)
    strict = ge & ~ge.T
    via = (strict.astype(np.uint8) @ strict.astype(np.uint8)) > 0
    cover = strict & ~via
    return [(i, j) for i, j in zip(*np.nonzero(cover.T))]  # j covers... edge i -> j with points[j] > points[i]


def max_weight_upset(points: Sequence[tuple],
                     weights: np.ndarray) -> tuple[float, int]:
    """Exact maximizer of sum(weights over U) over all up-sets U.

    Returns (max value, bitmask of the argmax).  The empty set (value 0) is a
    feasible candidate, so the result is never negative.
    """
    p = len(points)
    w = np.round(np.asarray(weights, dtype=float) * _FLOW_SCALE).astype(object)
    src, snk = p, p + 1
    net = _Dinic(p + 2)
    total = 0
    for i in range(p):
        wi = int(w[i])
        if wi > 0:
            net.add(src, i, wi)
            total += wi
        elif wi < 0:
            net.add(i, snk, -wi)
    for i, j in _covering_edges(points):
        # membership of the lower point forces the upper one
        net.add(i, j, 1 << 62)
    cut = net.max_flow(src, snk)
    side = net.source_side(src)
    mask = 0
    for i in range(p):
        if i in side:
            mask |= 1 << i
    value = float(sum(float(weights[i]) for i in range(p) if mask >> i & 1))
    return value, mask


# ---------------------------------------------------------------------------
# Covariance maximization over up-set pairs


@dataclass(frozen=True)
class DependenceVerdict:
    status: str                    # "holds" | "violated"
    witness: dict | None
    pairs_checked: int
    max_covariance: float
    margin_warning: bool = False

    def to_json_dict(self) -> dict:
        return {"status": self.status, "witness": self.witness,
                "pairs_checked": self.pairs_checked,
                "max_covariance": self.max_covariance,
                "margin_warning": self.margin_warning}


def _block_data(law: JointPmf, coords_a: Sequence[int], coords_c: Sequence[int]):
    pa = law.project(list(coords_a))
    pc = law.project(list(coords_c))
    ia = {v: k for k, v in enumerate(pa.support)}
    ic = {v: k for k, v in enumerate(pc.support)}
    joint = np.zeros((len(pa.support), len(pc.support)))
    for v, pr in zip(law.support, law.probs):
        joint[ia[tuple(v[c] for c in coords_a)],
              ic[tuple(v[c] for c in coords_c)]] += float(pr)
    return pa.support, np.asarray(pa.probs), pc.support, np.asarray(pc.probs), joint


def _mask_points(points, mask: int):
    return [list(points[i]) for i in range(len(points)) if mask >> i & 1]


def _max_cov_block(sa, ra, sc, rc, joint, tol,
                   point_cap=POINT_CAP, upset_cap=UPSET_CAP,
                   pair_work_cap=PAIR_WORK_CAP):
    """Exact max of Cov(1_U(X_A), 1_V(X_C)) over up-set pairs.

    Returns (max_cov, witness_masks_or_None_at_max, pairs_checked).  Chooses
    between full pair enumeration and per-U closure maximization based on the
    chain bounds of the two sides.
    """
    ba, bc = chain_bound(sa), chain_bound(sc)
    enum_a = _enumerable(sa, point_cap, upset_cap)
    enum_c = _enumerable(sc, point_cap, upset_cap)
    if enum_a and enum_c and ba * bc <= pair_work_cap:
        masks_a = _upset_masks(sa, upset_cap)
        masks_c = _upset_masks(sc, upset_cap)
        ua = np.array([[m >> i & 1 for i in range(len(sa))] for m in masks_a],
                      dtype=float)
        uc = np.array([[m >> i & 1 for i in range(len(sc))] for m in masks_c],
                      dtype=float)
        covs = ua @ joint @ uc.T - np.outer(ua @ ra, uc @ rc)
        k = int(np.argmax(covs))
        i, j = divmod(k, covs.shape[1])
        best = float(covs[i, j])
        return best, (masks_a[i], masks_c[j]), covs.size
    # closure path: enumerate the side with the smaller chain bound
    flip = not (enum_a and (ba <= bc or not enum_c))
    if flip:
        sa, ra, sc, rc, joint = sc, rc, sa, ra, joint.T
        if not _enumerable(sa, point_cap, upset_cap):
            raise EnumerationTooLargeError(
                "neither block admits up-set enumeration within caps "
                f"({point_cap} points, {upset_cap} up-sets)")
    masks_a = _upset_masks(sa, upset_cap)
    best, best_masks, solves = -np.inf, None, 0
    for ma in masks_a:
        sel = np.array([ma >> i & 1 for i in range(len(sa))], dtype=bool)
        pu = float(ra[sel].sum())
        weights = joint[sel].sum(axis=0) - pu * rc
        val, mc = max_weight_upset(sc, weights)
        solves += 1
        if val > best:
            best, best_masks = val, (ma, mc)
    if flip and best_masks is not None:
        best_masks = (best_masks[1], best_masks[0])
    return best, best_masks, solves


def is_na(law: JointPmf, tol: float = COV_TOL,
          point_cap: int = POINT_CAP, upset_cap: int = UPSET_CAP) -> DependenceVerdict:
    """Negative association: Cov over up-set pairs <= tol for every
    bipartition of the coordinates."""
    m = law.dim
    if m < 2:
        raise ValueError("negative association needs at least two coordinates")
    best, witness, pairs = -np.inf, None, 0
    for r in range(0, m - 1):
        for rest in itertools.combinations(range(1, m), r):
            coords_a = (0,) + rest
            coords_c = tuple(sorted(set(range(m)) - set(coords_a)))
            sa, ra, sc, rc, joint = _block_data(law, coords_a, coords_c)
            got, masks, n = _max_cov_block(sa, ra, sc, rc, joint, tol,
                                           point_cap, upset_cap)
            pairs += n
            if got > best:
                best = got
                if masks is not None:
                    witness = {"split": list(coords_a),
                               "upset_a": _mask_points(sa, masks[0]),
                               "upset_b": _mask_points(sc, masks[1]),
                               "covariance": float(got)}
    if best > tol:
        return DependenceVerdict("violated", witness, pairs, float(best))
    return DependenceVerdict("holds", None, pairs, float(best),
                             margin_warning=bool(best > -tol))


def is_sna(law: JointPmf, tol: float = COV_TOL,
           point_cap: int = POINT_CAP, upset_cap: int = UPSET_CAP) -> DependenceVerdict:
    """Sequential negative association: threshold indicators of X_i against
    up-sets of the suffix (X_{i+1}, ..., X_m)."""
    m = law.dim
    if m < 2:
        raise ValueError("sequential check needs at least two coordinates")
    best, witness, pairs = -np.inf, None, 0
    for i in range(m - 1):
        coords_a = (i,)
        coords_c = tuple(range(i + 1, m))
        sa, ra, sc, rc, joint = _block_data(law, coords_a, coords_c)
        got, masks, n = _max_cov_block(sa, ra, sc, rc, joint, tol,
                                       point_cap, upset_cap)
        pairs += n
        if got > best:
            best = got
            if masks is not None:
                # 1-D up-sets are exactly the thresholds {x > t}
                kept = [sa[k][0] for k in range(len(sa)) if masks[0] >> k & 1]
                threshold = max(v[0] for k, v in enumerate(sa)
                                if not masks[0] >> k & 1) if len(kept) < len(sa) else None
                witness = {"i": i, "t": threshold,
                           "upset": _mask_points(sc, masks[1]),
                           "covariance": float(got)}
    if best > tol:
        return DependenceVerdict("violated", witness, pairs, float(best))
    return DependenceVerdict("holds", None, pairs, float(best),
                             margin_warning=bool(best > -tol))


def is_nqd(law: JointPmf, tol: float = COV_TOL) -> bool:
    """Negative quadrant dependence of a bivariate law."""
    if law.dim != 2:
        raise ValueError("quadrant dependence is a bivariate notion")
    xs, px = law.marginal(0)
    ys, py = law.marginal(1)
    fx = np.cumsum(px)
    fy = np.cumsum(py)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            joint = sum(float(pr) for v, pr in zip(law.support, law.probs)
                        if v[0] <= x and v[1] <= y)
            if joint > fx[i] * fy[j] + tol:
                return False
    return True


def recompute_witness_covariance(law: JointPmf, witness: dict) -> float:
    """Recompute a reported covariance directly from the joint law."""
    if "split" in witness:
        coords_a = witness["split"]
        coords_c = sorted(set(range(law.dim)) - set(coords_a))
        ua = {tuple(v) for v in witness["upset_a"]}
        ub = {tuple(v) for v in witness["upset_b"]}
        pa = pb = pab = 0.0
        for v, pr in zip(law.support, law.probs):
            ina = tuple(v[c] for c in coords_a) in ua
            inb = tuple(v[c] for c in coords_c) in ub
            pa += float(pr) * ina
            pb += float(pr) * inb
            pab += float(pr) * (ina and inb)
        return pab - pa * pb
    i = witness["i"]
    t = witness["t"]
    coords_c = range(i + 1, law.dim)
    ub = {tuple(v) for v in witness["upset"]}
    pa = pb = pab = 0.0
    for v, pr in zip(law.support, law.probs):
        ina = (t is None) or (v[i] > t)
        inb = tuple(v[c] for c in coords_c) in ub
        pa += float(pr) * ina
        pb += float(pr) * inb
        pab += float(pr) * (ina and inb)
    return pab - pa * pb


def wcs_dominates(law_x: JointPmf, law_y: JointPmf, tol: float = COV_TOL,
                  point_cap: int = POINT_CAP,
                  upset_cap: int = UPSET_CAP) -> DependenceVerdict:
    """Weak conditional-increasing-in-sequence dominance of law_x by law_y.

    For every coordinate i, threshold t, and up-set V of the union of the two
    suffix supports, the threshold-suffix covariance under X must not exceed
    the one under Y by more than tol.
    """
    if law_x.dim != law_y.dim:
        raise ValueError("laws must share a dimension")
    m = law_x.dim
    best, witness, pairs = -np.inf, None, 0
    for i in range(m - 1):
        suffix = list(range(i + 1, m))
        vx, _ = law_x.marginal(i)
        vy, _ = law_y.marginal(i)
        thresholds = sorted(set(vx.tolist()) | set(vy.tolist()))[:-1]
        sux = law_x.project(suffix).support
        suy = law_y.project(suffix).support
        union = sorted(set(sux) | set(suy))
        idx = {v: k for k, v in enumerate(union)}
        for t in thresholds:
            dw = np.zeros(len(union))
            for law, sign in ((law_x, 1.0), (law_y, -1.0)):
                pt = sum(float(pr) for v, pr in zip(law.support, law.probs)
                         if v[i] > t)
                for v, pr in zip(law.support, law.probs):
                    key = tuple(v[c] for c in suffix)
                    w = float(pr) * ((v[i] > t) - pt)
                    dw[idx[key]] += sign * w
            val, mask = max_weight_upset(union, dw)
            pairs += 1
            if val > best:
                best = val
                witness = {"i": i, "t": float(t),
                           "upset": _mask_points(union, mask),
                           "covariance_gap": float(val)}
    if best > tol:
        return DependenceVerdict("violated", witness, pairs, float(best))
    return DependenceVerdict("holds", None, pairs, float(best),
                             margin_warning=bool(best > -tol))


def sm_dominates_bivariate(law_x: JointPmf, law_y: JointPmf,
                           tol: float = COV_TOL,
                           marginal_tol: float = 1e-10) -> DependenceVerdict:
    """Supermodular dominance for bivariate laws with identical marginals,
    decided by pointwise comparison of the joint cdfs."""
    if law_x.dim != 2 or law_y.dim != 2:
        raise ValueError("supermodular comparison implemented for dimension 2")
    for i in range(2):
        vx, px = law_x.marginal(i)
        vy, py = law_y.marginal(i)
        union = sorted(set(vx.tolist()) | set(vy.tolist()))
        mx = {v: p for v, p in zip(vx.tolist(), px)}
        my = {v: p for v, p in zip(vy.tolist(), py)}
        for v in union:
            if abs(mx.get(v, 0.0) - my.get(v, 0.0)) > marginal_tol:
                raise MarginalMismatchError(
                    f"coordinate {i} marginals differ at {v}")

    def cdf(law, s, t):
        return sum(float(pr) for v, pr in zip(law.support, law.probs)
                   if v[0] <= s and v[1] <= t)

    grid_s = sorted({v[0] for v in law_x.support} | {v[0] for v in law_y.support})
    grid_t = sorted({v[1] for v in law_x.support} | {v[1] for v in law_y.support})
    best, witness, pairs = -np.inf, None, 0
    for s in grid_s:
        for t in grid_t:
            gap = cdf(law_x, s, t) - cdf(law_y, s, t)
            pairs += 1
            if gap > best:
                best = gap
                witness = {"point": [float(s), float(t)], "cdf_gap": float(gap)}
    if best > tol:
        return DependenceVerdict("violated", witness, pairs, float(best))
    return DependenceVerdict("holds", None, pairs, float(best),
                             margin_warning=bool(best > -tol))
