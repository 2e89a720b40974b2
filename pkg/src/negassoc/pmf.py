"""Finite laws of point counts and their log-concavity / convex-order machinery.

A ``Pmf`` is the law of a count variable on {0, ..., n}; a ``JointPmf`` is an
exact joint law on an explicit finite support.  Laws with infinite support
(Poisson, geometric) are truncated at a retained-mass floor and renormalized;
the pre-normalization mass is kept on the object so downstream inequality
checks can budget for it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateSupportError, EmptyEventError

PROB_ATOL = 1e-12          # mass-balance tolerance
DEFAULT_MASS_FLOOR = 1.0 - 1e-12


def _as_prob_array(probs) -> np.ndarray:
    a = np.asarray(probs, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("probabilities must be a non-empty 1-D sequence")
    if np.any(a < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(float(a.sum()) - 1.0) > PROB_ATOL:
        raise ValueError(f"probabilities sum to {a.sum()!r}, not 1")
    return a


@dataclass(frozen=True, eq=False)
class Pmf:
    """Law of a count on {0, ..., n}.

    ``retained_mass`` records the probability kept before renormalization when
    the law was obtained by truncating an infinite-support one (1.0 means no
    truncation).  Trailing exact zeros are rejected unless ``padded`` is set,
    so ``n`` genuinely is the support bound in the unpadded case.
    """

    probs: np.ndarray
    padded: bool = False
    retained_mass: float = 1.0

    def __post_init__(self):
        a = _as_prob_array(self.probs)
        if not self.padded and a[-1] == 0.0 and a.size > 1:
            raise ValueError("trailing zero entries require padded=True")
        a.flags.writeable = False
        object.__setattr__(self, "probs", a)

    @property
    def n(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def variance(self) -> float:
        k = np.arange(self.probs.size)
        m = self.mean()
        return float(((k - m) ** 2) @ self.probs)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def to_json_dict(self) -> dict:
        return {"probs": [float(p) for p in self.probs], "n": self.n}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Pmf":
        p = cls(np.asarray(d["probs"], dtype=float), padded=True)
        if p.n != int(d["n"]):
            raise ValueError("declared n does not match probability list")
        return p


def delta(k: int, n: int | None = None) -> Pmf:
    """Point mass at k, optionally padded out to support bound n."""
    size = (k if n is None else n) + 1
    if k >= size:
        raise ValueError("point mass outside declared support")
    a = np.zeros(size)
    a[k] = 1.0
    return Pmf(a, padded=(n is not None and n > k))


class SequenceCheck(NamedTuple):
    ok: bool
    violation_index: int | None


def _log_concave_check(values: np.ndarray, rel_tol: float) -> SequenceCheck:
    """No internal zeros and v_k^2 >= v_{k-1} v_{k+1} up to relative slack."""
    nz = np.nonzero(values)[0]
    if nz.size == 0:
        raise DegenerateSupportError("all-zero sequence")
    for k in range(nz[0] + 1, nz[-1]):
        if values[k] == 0.0:
            return SequenceCheck(False, k)
    for k in range(1, values.size - 1):
        lhs = values[k] ** 2
        rhs = values[k - 1] * values[k + 1]
        if lhs < rhs - rel_tol * max(lhs, rhs):
            return SequenceCheck(False, k)
    return SequenceCheck(True, None)


def is_pf2(p: Pmf, rel_tol: float = 1e-12) -> SequenceCheck:
    """Discrete log-concavity (PF2) of the probability sequence."""
    return _log_concave_check(p.probs, rel_tol)


def is_ulc(p: Pmf, rel_tol: float = 1e-12) -> SequenceCheck:
    """Ultra log-concavity: log-concavity of p_k / C(n, k), no internal zeros."""
    n = p.n
    if n < 1:
        raise DegenerateSupportError("ultra log-concavity needs support bound >= 1")
    weights = np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)
    scaled = p.probs / weights
    nz = np.nonzero(p.probs)[0]
    for k in range(nz[0] + 1, nz[-1]):
        if p.probs[k] == 0.0:
            return SequenceCheck(False, k)
    for k in range(1, n):
        lhs = scaled[k] ** 2
        rhs = scaled[k - 1] * scaled[k + 1]
        if lhs < rhs - rel_tol * max(lhs, rhs):
            return SequenceCheck(False, k)
    return SequenceCheck(True, None)


def poisson_binomial(ps: Sequence[float]) -> Pmf:
    """Exact law of a sum of independent Bernoulli(p_i) variables."""
    ps = [float(p) for p in ps]
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"success probability {p} outside [0, 1]")
    out = np.array([1.0])
    for p in ps:
        nxt = np.zeros(out.size + 1)
        nxt[: out.size] += out * (1.0 - p)
        nxt[1:] += out * p
        out = nxt
    return Pmf(out, padded=True)


def binomial_pmf(n: int, p: float) -> Pmf:
    """Binomial(n, p) via the closed form C(n,k) p^k (1-p)^(n-k)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p outside [0, 1]")
    pk = np.array([p**k for k in range(n + 1)])
    qk = np.array([(1.0 - p) ** k for k in range(n + 1)])
    probs = np.array([math.comb(n, k) * pk[k] * qk[n - k] for k in range(n + 1)])
    return Pmf(probs / probs.sum(), padded=True)


def truncated_poisson(lam: float, mass_floor: float = DEFAULT_MASS_FLOOR) -> Pmf:
    """Poisson(lam) cut at the smallest n with cdf >= mass_floor, renormalized."""
    if lam < 0:
        raise ValueError("Poisson rate must be non-negative")
    if not 0.0 < mass_floor < 1.0:
        raise ValueError("mass_floor must lie in (0, 1)")
    if lam == 0.0:
        return Pmf(np.array([1.0]))
    terms = [math.exp(-lam)]
    total = terms[0]
    while total < mass_floor:
        terms.append(terms[-1] * lam / len(terms))
        total += terms[-1]
    a = np.asarray(terms)
    return Pmf(a / a.sum(), retained_mass=float(total))


def truncated_geometric(p: float, n: int) -> Pmf:
    """Geometric(p) on {0, 1, ...} cut at n and renormalized."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p outside (0, 1]")
    a = np.array([p * (1.0 - p) ** k for k in range(n + 1)])
    return Pmf(a / a.sum(), retained_mass=float(a.sum()))


def convolve(p: Pmf, q: Pmf) -> Pmf:
    """Exact convolution; support bound m + n."""
    out = np.convolve(p.probs, q.probs)
    out = out / out.sum()
    return Pmf(out, padded=True,
               retained_mass=float(p.retained_mass * q.retained_mass))


def class_q_pmf(lam: float, ps: Sequence[float],
                mass_floor: float = DEFAULT_MASS_FLOOR) -> Pmf:
    """Poisson(lam) convolved with an independent Bernoulli series, truncated.

    The result is cut at the smallest support bound capturing at least
    ``mass_floor`` of the full convolution and renormalized; the retained mass
    is reported on the returned Pmf.
    """
    if lam < 0:
        raise ValueError("Poisson rate must be non-negative")
    pb = poisson_binomial(ps)
    if lam == 0.0:
        return pb
    # inner truncation two orders tighter so the outer cut dominates
    inner_floor = 1.0 - (1.0 - mass_floor) * 1e-3
    pois = truncated_poisson(lam, inner_floor)
    full = np.convolve(pois.probs * pois.retained_mass, pb.probs)
    cum = np.cumsum(full)
    cut = int(np.searchsorted(cum, mass_floor, side="left"))
    cut = min(cut, full.size - 1)
    kept = full[: cut + 1]
    return Pmf(kept / kept.sum(), retained_mass=float(cum[cut]))


def stop_loss(p: Pmf, k: float) -> float:
    """E(X - k)_+ computed exactly over the support."""
    xs = np.arange(p.probs.size, dtype=float)
    return float(np.maximum(xs - k, 0.0) @ p.probs)


class CxVerdict(NamedTuple):
    dominated: bool
    witness_k: int | None


def cx_dominates(p: Pmf, q: Pmf, mean_tol: float = 1e-9,
                 loss_tol: float = 1e-10) -> CxVerdict:
    """Convex-order dominance p <=_cx q via stop-loss transforms.

    Requires the (post-truncation) means to agree within ``mean_tol`` and
    E(p - k)_+ <= E(q - k)_+ + loss_tol at every integer k of the union of
    supports.  On failure returns the smallest witnessing k (-1 marks a mean
    mismatch).
    """
    if abs(p.mean() - q.mean()) > mean_tol:
        return CxVerdict(False, -1)
    for k in range(max(p.n, q.n) + 1):
        if stop_loss(p, k) > stop_loss(q, k) + loss_tol:
            return CxVerdict(False, k)
    return CxVerdict(True, None)


# ---------------------------------------------------------------------------
# Joint laws on explicit finite supports


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Exact joint law of a vector on an explicit finite support.

    Support vectors are stored sorted lexicographically, which makes the
    representation canonical and report output deterministic.
    """

    support: tuple
    probs: np.ndarray

    def __post_init__(self):
        a = _as_prob_array(self.probs)
        pts = tuple(tuple(float(c) for c in v) for v in self.support)
        if len(pts) != a.size:
            raise ValueError("support and probability lengths differ")
        if len(set(pts)) != len(pts):
            raise ValueError("support vectors must be pairwise distinct")
        dims = {len(v) for v in pts}
        if len(dims) != 1:
            raise ValueError("support vectors must share a dimension")
        order = sorted(range(len(pts)), key=lambda i: pts[i])
        pts = tuple(pts[i] for i in order)
        a = a[order]
        a.flags.writeable = False
        object.__setattr__(self, "support", pts)
        object.__setattr__(self, "probs", a)

    @property
    def dim(self) -> int:
        return len(self.support[0])

    @classmethod
    def from_atoms(cls, atoms: dict) -> "JointPmf":
        items = [(k, v) for k, v in atoms.items() if v != 0.0]
        return cls(tuple(k for k, _ in items),
                   np.array([v for _, v in items]))

    def project(self, coords: Sequence[int]) -> "JointPmf":
        """Marginal law of the listed coordinates (aggregating atoms)."""
        acc: dict = {}
        for v, pr in zip(self.support, self.probs):
            key = tuple(v[c] for c in coords)
            acc[key] = acc.get(key, 0.0) + float(pr)
        return JointPmf.from_atoms(acc)

    def marginal(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Sorted values and probabilities of the i-th coordinate."""
        m = self.project([i])
        vals = np.array([v[0] for v in m.support])
        return vals, np.asarray(m.probs)

    def marginal_pmf(self, i: int) -> Pmf:
        """Coordinate marginal as a Pmf; requires non-negative integer values."""
        vals, pr = self.marginal(i)
        if np.any(vals < 0) or np.any(vals != np.round(vals)):
            raise ValueError("marginal support is not a non-negative integer grid")
        out = np.zeros(int(vals[-1]) + 1)
        out[vals.astype(int)] = pr
        return Pmf(out / out.sum(), padded=True)

    def mean(self, i: int) -> float:
        vals, pr = self.marginal(i)
        return float(vals @ pr)

    def expectation(self, f: Callable[[tuple], float]) -> float:
        return float(sum(f(v) * float(pr) for v, pr in zip(self.support, self.probs)))

    def product_of_marginals(self) -> "JointPmf":
        """The independent coupling with the same coordinate marginals."""
        margs = [self.marginal(i) for i in range(self.dim)]
        atoms = {}
        for combo in itertools.product(*[zip(v, p) for v, p in margs]):
            vec = tuple(float(c[0]) for c in combo)
            pr = math.prod(float(c[1]) for c in combo)
            if pr > 0.0:
                atoms[vec] = pr
        return JointPmf.from_atoms(atoms)

    def to_json_dict(self) -> dict:
        return {"support": [list(v) for v in self.support],
                "probs": [float(p) for p in self.probs]}


def product_joint(p: JointPmf, q: JointPmf) -> JointPmf:
    """Joint law of independent blocks (X, Y); concatenates coordinates."""
    atoms = {}
    for v, pv in zip(p.support, p.probs):
        for w, pw in zip(q.support, q.probs):
            atoms[v + w] = float(pv) * float(pw)
    return JointPmf.from_atoms(atoms)


def condition_n_joint(laws: Sequence[Pmf], s: int) -> JointPmf:
    """Joint law of (S_1, ..., S_n) given S_0 + S_1 + ... + S_n = s.

    ``laws`` lists the laws of S_0 through S_n; probabilities on the slice are
    proportional to P(S_0 = s - sum) * prod_i P(S_i = s_i).
    """
    if len(laws) < 2:
        raise ValueError("need the law of S_0 plus at least one coordinate")
    s = int(s)
    if s < 0:
        raise EmptyEventError("negative target sum is unreachable")
    s0, rest = laws[0], laws[1:]
    atoms: dict = {}

    def rec(i: int, prefix: tuple, remaining: int, weight: float):
        if weight == 0.0:
            return
        if i == len(rest):
            if remaining <= s0.n and s0.probs[remaining] > 0.0:
                atoms[prefix] = atoms.get(prefix, 0.0) + weight * float(s0.probs[remaining])
            return
        law = rest[i]
        for k in range(min(law.n, remaining) + 1):
            pk = float(law.probs[k])
            if pk > 0.0:
                rec(i + 1, prefix + (k,), remaining - k, weight * pk)

    rec(0, (), s, 1.0)
    total = sum(atoms.values())
    if total <= 0.0:
        raise EmptyEventError(f"target sum {s} has zero probability")
    return JointPmf.from_atoms({k: v / total for k, v in atoms.items()})


class MonotoneCheck(NamedTuple):
    ok: bool
    violating_pair: tuple | None


def efron_monotone_check(laws: Sequence[Pmf],
                         phi: Callable[[tuple], float],
                         tol: float = 1e-10,
                         max_grid: int = 10**6) -> MonotoneCheck:
    """Is s -> E(phi(X) | sum X_i = s) non-decreasing over reachable s?

    ``phi`` must be coordinatewise non-decreasing (caller-asserted).  The
    conditional expectations are computed exactly on the product grid.
    """
    sizes = math.prod(law.probs.size for law in laws)
    if sizes > max_grid:
        raise EmptyEventError(f"product grid of size {sizes} exceeds {max_grid}")
    num: dict = {}
    den: dict = {}
    for combo in itertools.product(*[range(law.probs.size) for law in laws]):
        w = math.prod(float(law.probs[k]) for law, k in zip(laws, combo))
        if w == 0.0:
            continue
        s = sum(combo)
        den[s] = den.get(s, 0.0) + w
        num[s] = num.get(s, 0.0) + w * float(phi(combo))
    if not den:
        raise EmptyEventError("no reachable total sum")
    ss = sorted(den)
    cond = [num[s] / den[s] for s in ss]
    for a, b in zip(range(len(ss) - 1), range(1, len(ss))):
        if cond[b] < cond[a] - tol:
            return MonotoneCheck(False, (ss[a], ss[b]))
    return MonotoneCheck(True, None)
