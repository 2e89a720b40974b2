"""Finite point-process models and their exact / sampled count laws.

Geometry is reduced to a finite partition of the state space: every negative
dependence or ordering statement checked downstream quantifies over disjoint
regions, so the vector of cell counts is a sufficient statistic.  Two model
families are supported: mixed sampled processes (an independent count tau of
iid locations, tracked through cell probabilities) and finite determinantal
processes given by a symmetric contraction kernel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GuardError
from .pmf import DEFAULT_MASS_FLOOR, JointPmf, Pmf

MAX_CELLS = 6
MAX_TAU_BOUND = 30
MAX_DPP_EXACT = 12
DET_CLIP = 1e-12


@dataclass(frozen=True, eq=False)
class PartitionModel:
    """Tracked-cell probabilities q_i = F(B_i); the remainder cell carries
    1 - sum(q)."""

    q: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.q, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("cell probabilities must be a non-empty vector")
        if np.any(a < 0):
            raise ValueError("cell probabilities must be non-negative")
        if float(a.sum()) > 1.0 + 1e-12:
            raise ValueError("cell probabilities exceed total mass 1")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "q", a)

    @property
    def m(self) -> int:
        return self.q.size

    @property
    def remainder(self) -> float:
        return max(0.0, 1.0 - float(self.q.sum()))


@dataclass(frozen=True)
class MixedSampledProcess:
    tau: Pmf
    partition: PartitionModel

    def to_json_dict(self) -> dict:
        return {"type": "mixed",
                "tau": {"kind": "pmf", "probs": [float(p) for p in self.tau.probs]},
                "partition": [float(v) for v in self.partition.q]}


@dataclass(frozen=True, eq=False)
class DppModel:
    """Symmetric contraction kernel plus a cell label for each ground point."""

    kernel: np.ndarray
    cell_of: tuple

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("kernel must be square")
        labels = tuple(int(c) for c in self.cell_of)
        if len(labels) != k.shape[0]:
            raise ValueError("one cell label per ground point required")
        if labels and (min(labels) < 0 or set(labels) != set(range(max(labels) + 1))):
            raise ValueError("cell labels must cover 0..m-1")
        k = k.copy()
        k.flags.writeable = False
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "cell_of", labels)

    @property
    def n_points(self) -> int:
        return self.kernel.shape[0]

    @property
    def m(self) -> int:
        return max(self.cell_of) + 1

    def to_json_dict(self) -> dict:
        return {"type": "dpp",
                "kernel": [[float(v) for v in row] for row in self.kernel],
                "cells": list(self.cell_of)}


@dataclass(frozen=True)
class DppDiagnostics:
    symmetry_defect: float
    eig_min: float
    eig_max: float
    ok: bool

    def to_json_dict(self) -> dict:
        return {"symmetry_defect": self.symmetry_defect,
                "eig_min": self.eig_min, "eig_max": self.eig_max,
                "ok": self.ok}


def dpp_validate(d: DppModel, tol: float = 1e-10) -> DppDiagnostics:
    """Symmetry defect and eigenvalue range against the contraction invariants."""
    k = d.kernel
    defect = float(np.max(np.abs(k - k.T))) if k.size else 0.0
    eigs = np.linalg.eigvalsh((k + k.T) / 2.0)
    lo, hi = float(eigs.min()), float(eigs.max())
    ok = defect <= tol and lo >= -tol and hi <= 1.0 + tol
    return DppDiagnostics(defect, lo, hi, ok)


@dataclass(frozen=True)
class CountVectorLaw:
    """Exact joint law of the tracked cell counts."""

    joint: JointPmf
    truncation_mass: float = 1.0
    det_clip: float = 0.0

    def intensity(self) -> np.ndarray:
        support = np.asarray(self.joint.support)
        return support.T @ np.asarray(self.joint.probs)

    def to_json_dict(self) -> dict:
        d = self.joint.to_json_dict()
        d["truncation_mass"] = self.truncation_mass
        if self.det_clip:
            d["det_clip"] = self.det_clip
        return d


def exact_count_law(p: MixedSampledProcess) -> CountVectorLaw:
    """P(counts = n) = sum_N P(tau = N) * multinomial(N; n, remainder)."""
    m = p.partition.m
    if m > MAX_CELLS:
        raise GuardError(f"{m} cells exceed the cap of {MAX_CELLS}")
    if p.tau.n > MAX_TAU_BOUND:
        raise GuardError(f"count bound {p.tau.n} exceeds the cap of {MAX_TAU_BOUND}")
    q = p.partition.q
    rem = p.partition.remainder
    atoms: dict = {}
    for big_n, pn in enumerate(p.tau.probs):
        if pn == 0.0:
            continue
        for counts in _compositions_at_most(big_n, m):
            used = sum(counts)
            rest = big_n - used
            if rem == 0.0 and rest > 0:
                continue
            coef = math.factorial(big_n)
            for c in counts:
                coef //= math.factorial(c)
            coef //= math.factorial(rest)
            w = float(pn) * coef * math.prod(
                qi**c for qi, c in zip(q, counts)) * (rem**rest if rest else 1.0)
            if w > 0.0:
                key = tuple(float(c) for c in counts)
                atoms[key] = atoms.get(key, 0.0) + w
    total = sum(atoms.values())
    joint = JointPmf.from_atoms({k: v / total for k, v in atoms.items()})
    return CountVectorLaw(joint, truncation_mass=float(p.tau.retained_mass))


def _compositions_at_most(total: int, parts: int):
    """All tuples of `parts` non-negative ints with sum <= total."""
    if parts == 1:
        for k in range(total + 1):
            yield (k,)
        return
    for k in range(total + 1):
        for rest in _compositions_at_most(total - k, parts - 1):
            yield (k,) + rest


def intensity(law: CountVectorLaw) -> np.ndarray:
    """Exact per-cell means."""
    return law.intensity()


def sample_mixed(p: MixedSampledProcess, rng: np.random.Generator) -> tuple:
    """One draw of the tracked cell counts."""
    return tuple(sample_mixed_counts(p, 1, rng=rng)[0].tolist())


def sample_mixed_counts(p: MixedSampledProcess, n: int,
                        seed: int | None = None,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Vectorized count-vector draws: inverse-cdf for tau, then one
    multinomial split per draw."""
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=seed))
    cdf = np.cumsum(p.tau.probs)
    ns = np.searchsorted(cdf, rng.random(n), side="left")
    ns = np.minimum(ns, p.tau.n)
    pvals = np.append(p.partition.q, p.partition.remainder)
    pvals = pvals / pvals.sum()
    counts = rng.multinomial(ns, pvals)
    return counts[:, : p.partition.m].astype(np.int64)


def marked_sum_law(tau: Pmf, mark_law: JointPmf,
                   max_atoms: int = 100_000) -> JointPmf:
    """Law of the tau-fold iid sum of mark vectors.

    Each mark support vector must have at most one strictly positive
    coordinate (and none negative); this is what makes the summed vector
    negatively associated for ultra-log-concave tau.
    """
    for v in mark_law.support:
        if any(c < 0 for c in v):
            raise ValueError("mark coordinates must be non-negative")
        if sum(1 for c in v if c > 0) > 1:
            raise ValueError(
                f"mark vector {v} has more than one positive coordinate")
    dim = mark_law.dim
    origin = tuple(0.0 for _ in range(dim))
    acc: dict = {}
    conv: dict = {origin: 1.0}
    for big_n, pn in enumerate(tau.probs):
        if pn > 0.0:
            for v, w in conv.items():
                acc[v] = acc.get(v, 0.0) + float(pn) * w
        if big_n == tau.n:
            break
        nxt: dict = {}
        for v, w in conv.items():
            for u, pu in zip(mark_law.support, mark_law.probs):
                key = tuple(a + b for a, b in zip(v, u))
                nxt[key] = nxt.get(key, 0.0) + w * float(pu)
        if len(nxt) > max_atoms:
            raise GuardError(f"mark-sum support exceeds {max_atoms} atoms")
        conv = nxt
    total = sum(acc.values())
    return JointPmf.from_atoms({k: v / total for k, v in acc.items()})


# ---------------------------------------------------------------------------
# Determinantal processes on finite ground sets


def _dpp_subset_probs(d: DppModel) -> tuple[np.ndarray, float]:
    n = d.n_points
    if n > MAX_DPP_EXACT:
        raise GuardError(f"{n} ground points exceed the exact-law cap of "
                         f"{MAX_DPP_EXACT}")
    k = d.kernel
    size = 1 << n
    mats = np.broadcast_to(k, (size, n, n)).copy()
    masks = np.arange(size)
    for i in range(n):
        off = (masks >> i) & 1 == 0
        mats[off, i, i] -= 1.0
    dets = np.linalg.det(mats)
    signs = np.array([(-1.0) ** (n - int(bin(s).count("1"))) for s in range(size)])
    probs = signs * dets
    clip = float(-probs[probs < 0].sum()) if np.any(probs < 0) else 0.0
    if np.any(probs < -DET_CLIP):
        raise ValueError("subset probabilities negative beyond round-off; "
                         "kernel is not a valid contraction")
    probs = np.maximum(probs, 0.0)
    probs = probs / probs.sum()
    return probs, clip


def dpp_exact_law(d: DppModel) -> JointPmf:
    """Exact law of the sampled subset, as a joint law of the indicator
    vector of the ground points."""
    probs, _ = _dpp_subset_probs(d)
    n = d.n_points
    atoms = {}
    for s, w in enumerate(probs):
        if w > 0.0:
            atoms[tuple(float((s >> i) & 1) for i in range(n))] = float(w)
    return JointPmf.from_atoms(atoms)


def dpp_count_law(d: DppModel) -> CountVectorLaw:
    """Cell counts of the determinantal subset."""
    probs, clip = _dpp_subset_probs(d)
    m = d.m
    atoms: dict = {}
    for s, w in enumerate(probs):
        if w == 0.0:
            continue
        counts = [0] * m
        for i in range(d.n_points):
            if s >> i & 1:
                counts[d.cell_of[i]] += 1
        key = tuple(float(c) for c in counts)
        atoms[key] = atoms.get(key, 0.0) + float(w)
    return CountVectorLaw(JointPmf.from_atoms(atoms), det_clip=clip)


def inclusion_probability(d: DppModel, subset: Sequence[int]) -> float:
    """P(subset contained in the draw) = det of the principal submatrix."""
    idx = list(subset)
    if not idx:
        return 1.0
    return float(np.linalg.det(d.kernel[np.ix_(idx, idx)]))


def dpp_sample(d: DppModel, rng: np.random.Generator) -> tuple[int, ...]:
    """One subset draw via the spectral two-phase sampler."""
    sel = dpp_sample_many(d, 1, rng=rng)[0]
    return tuple(int(i) for i in np.nonzero(sel)[0])


def dpp_sample_many(d: DppModel, n_draws: int, seed: int | None = None,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Vectorized spectral sampling; returns an (n_draws, N) 0/1 array.

    Phase 1 keeps each eigenvector independently with probability equal to
    its eigenvalue.  Phase 2 samples the projection process: repeatedly pick
    a point with probability proportional to the squared row norm of the
    basis, then restrict the basis to the orthocomplement of that row via a
    Householder reflection.  All uniforms are pre-drawn per replication, so
    the output is independent of how draws are grouped.
    """
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=seed))
    n = d.n_points
    eigvals, eigvecs = np.linalg.eigh((d.kernel + d.kernel.T) / 2.0)
    eigvals = np.clip(eigvals, 0.0, 1.0)
    u_phase1 = rng.random((n_draws, n))
    u_phase2 = rng.random((n_draws, n))
    selected = u_phase1 < eigvals[None, :]
    out = np.zeros((n_draws, n), dtype=np.int64)
    # group draws by their phase-1 eigenvector subset
    keys = selected @ (1 << np.arange(n))
    for key in np.unique(keys):
        idx = np.nonzero(keys == key)[0]
        cols = [i for i in range(n) if key >> i & 1]
        k = len(cols)
        if k == 0:
            continue
        v = np.broadcast_to(eigvecs[:, cols], (idx.size, n, k)).copy()
        for step in range(k):
            kr = k - step
            weights = np.einsum("dij,dij->di", v, v)
            weights = np.maximum(weights, 0.0)
            cum = np.cumsum(weights, axis=1)
            u = u_phase2[idx, step] * cum[:, -1]
            pick = (cum < u[:, None]).sum(axis=1)
            pick = np.minimum(pick, n - 1)
            out[idx, pick] = 1
            if kr == 1:
                break
            w = v[np.arange(idx.size), pick, :]           # (D, kr)
            norm = np.linalg.norm(w, axis=1, keepdims=True)
            sign = np.where(w[:, :1] >= 0.0, 1.0, -1.0)
            u_h = w.copy()
            u_h[:, :1] += sign * norm
            u_h = u_h / np.linalg.norm(u_h, axis=1, keepdims=True)
            house = np.eye(kr)[None, :, :] - 2.0 * np.einsum(
                "di,dj->dij", u_h, u_h)
            v = np.matmul(v, house[:, :, 1:])             # basis of w-perp
    return out


def dpp_sample_counts(d: DppModel, n_draws: int, seed: int | None = None,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Cell-count vectors of vectorized determinantal draws."""
    sel = dpp_sample_many(d, n_draws, seed=seed, rng=rng)
    m = d.m
    counts = np.zeros((n_draws, m), dtype=np.int64)
    for i, c in enumerate(d.cell_of):
        counts[:, c] += sel[:, i]
    return counts


def count_law(process) -> CountVectorLaw:
    """Exact count law for either process family."""
    if isinstance(process, MixedSampledProcess):
        return exact_count_law(process)
    if isinstance(process, DppModel):
        return dpp_count_law(process)
    raise TypeError(f"unsupported process type {type(process)!r}")


def sample_counts(process, n_draws: int, seed: int | None = None) -> np.ndarray:
    """Vectorized count-vector draws for either process family."""
    if isinstance(process, MixedSampledProcess):
        return sample_mixed_counts(process, n_draws, seed=seed)
    if isinstance(process, DppModel):
        return dpp_sample_counts(process, n_draws, seed=seed)
    raise TypeError(f"unsupported process type {type(process)!r}")
