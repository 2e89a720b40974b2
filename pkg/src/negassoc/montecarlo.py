"""Seeded Monte Carlo engine and concentration-bound validation.

Replications run on counter-based (Philox) streams keyed by the experiment
seed and a replication-block index, so estimates are bit-identical for a
fixed (seed, n) regardless of how blocks would be scheduled.  Tail bounds are
evaluated against exact count laws whenever the guards allow; the Kolmogorov
maximal inequality, whose left side has no closed form, is the one check that
pairs a Monte Carlo estimate (with a Wilson interval) against an exact right
side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundReport
from .processes import CountVectorLaw, count_law, sample_counts

BLOCK = 4096          # replications per stream block
DEFAULT_Z = 4.0       # half-width multiplier for reported intervals


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, block indices)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def sample_counts_blocked(process, n: int, seed: int) -> np.ndarray:
    """Count-vector draws in independent per-block streams."""
    out = []
    for start in range(0, n, BLOCK):
        size = min(BLOCK, n - start)
        rng = make_rng(seed, start // BLOCK)
        out.append(_draw(process, size, rng))
    return np.concatenate(out, axis=0)


def _draw(process, size: int, rng: np.random.Generator) -> np.ndarray:
    from .processes import DppModel, MixedSampledProcess, dpp_sample_counts, \
        sample_mixed_counts
    if isinstance(process, MixedSampledProcess):
        return sample_mixed_counts(process, size, rng=rng)
    if isinstance(process, DppModel):
        return dpp_sample_counts(process, size, rng=rng)
    raise TypeError(f"unsupported process type {type(process)!r}")


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float
    ci_normal: tuple
    ci_wilson: tuple | None    # proportions only
    n: int
    seed: int
    z: float = DEFAULT_Z

    def __post_init__(self):
        lo, hi = self.ci_normal
        if not lo <= self.estimate <= hi:
            raise ValueError("normal interval must contain the estimate")

    def to_json_dict(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error,
                "ci_normal": list(self.ci_normal),
                "ci_wilson": list(self.ci_wilson) if self.ci_wilson else None,
                "n": self.n, "seed": self.seed, "z": self.z}


def wilson_interval(successes: int, n: int, z: float = DEFAULT_Z) -> tuple:
    """Score interval for a binomial proportion; stays inside [0, 1]."""
    if n <= 0:
        raise ValueError("need at least one replication")
    phat = successes / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return (max(0.0, centre - half), min(1.0, centre + half))


def _proportion_estimate(hits: np.ndarray, n: int, seed: int,
                         z: float = DEFAULT_Z) -> McEstimate:
    k = int(hits.sum())
    phat = k / n
    se = math.sqrt(max(phat * (1 - phat), 0.0) / n)
    return McEstimate(phat, se, (phat - z * se, phat + z * se),
                      wilson_interval(k, n, z), n, seed, z)


def mc_estimate(process, functional, n: int, seed: int,
                z: float = DEFAULT_Z) -> McEstimate:
    """Monte Carlo estimate of a count-law functional.

    ``functional`` is one of
      ("void", cell_indices)          P(all listed cells empty)
      ("count_mean", cell)            E count of one cell
      ("max_partial_sum", b, eps)     P(max_k |sum_{i<=k} centred / b_k| >= eps)
    """
    if n < 100:
        raise ValueError("need at least 100 replications")
    counts = sample_counts_blocked(process, n, seed)
    kind = functional[0]
    if kind == "void":
        cells = sorted(set(int(c) for c in functional[1]))
        hits = np.all(counts[:, cells] == 0, axis=1)
        return _proportion_estimate(hits, n, seed, z)
    if kind == "count_mean":
        cell = int(functional[1])
        xs = counts[:, cell].astype(float)
        est = float(xs.mean())
        se = float(xs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return McEstimate(est, se, (est - z * se, est + z * se), None, n, seed, z)
    if kind == "max_partial_sum":
        b = np.asarray(functional[1], dtype=float)
        eps = float(functional[2])
        means = count_law(process).intensity()
        hits = _max_partial_sum_hits(counts, means, b, eps)
        return _proportion_estimate(hits, n, seed, z)
    raise ValueError(f"unknown functional {functional!r}")


def _max_partial_sum_hits(counts: np.ndarray, means: np.ndarray,
                          b: np.ndarray, eps: float,
                          start: int = 0) -> np.ndarray:
    centred = counts.astype(float) - means[None, :]
    partial = np.cumsum(centred, axis=1) / b[None, :]
    return np.max(np.abs(partial[:, start:]), axis=1) >= eps


def chebyshev_bound(law: CountVectorLaw, cell: int, eps: float) -> BoundReport:
    """P(|N - EN| >= eps) <= Var(N) / eps^2, both sides exact."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    marg = law.joint.marginal_pmf(int(cell))
    mean, var = marg.mean(), marg.variance()
    ks = np.arange(marg.probs.size)
    lhs = float(marg.probs[np.abs(ks - mean) >= eps].sum())
    rhs = var / eps**2
    return BoundReport("chebyshev", lhs, rhs,
                       {"cell": int(cell), "eps": eps, "mean": mean, "var": var})


def chernoff_bound(law: CountVectorLaw, cell: int, eps: float,
                   t: float) -> tuple[BoundReport, BoundReport]:
    """Exponential tail bounds from the exact moment generating function.

    upper: P(N - EN >= eps) <= e^{-t(EN + eps)} E e^{tN}
    lower: P(EN - N >= eps) <= e^{ t(EN - eps)} E e^{-tN}
    """
    if eps <= 0 or t <= 0:
        raise ValueError("eps and t must be positive")
    marg = law.joint.marginal_pmf(int(cell))
    mean = marg.mean()
    ks = np.arange(marg.probs.size, dtype=float)
    mgf_pos = float(np.exp(t * ks) @ marg.probs)
    mgf_neg = float(np.exp(-t * ks) @ marg.probs)
    lhs_up = float(marg.probs[ks - mean >= eps].sum())
    rhs_up = math.exp(-t * (mean + eps)) * mgf_pos
    lhs_lo = float(marg.probs[mean - ks >= eps].sum())
    rhs_lo = math.exp(t * (mean - eps)) * mgf_neg
    ctx = {"cell": int(cell), "eps": eps, "t": t, "mean": mean}
    return (BoundReport("chernoff-upper", lhs_up, rhs_up, ctx),
            BoundReport("chernoff-lower", lhs_lo, rhs_lo, ctx))


def kolmogorov_bound_check(process, b, eps: float, n_mc: int, seed: int,
                           m_start: int | None = None,
                           z: float = DEFAULT_Z) -> BoundReport:
    """Maximal inequality for the normalized partial sums of cell counts.

    lhs: Wilson upper confidence limit (half-width multiplier z) of the
    Monte Carlo estimate of
        P(max_k |b_k^{-1} sum_{i<=k} (N_i - EN_i)| >= eps)
    with the max over all k (or k >= m_start in the indexed variant);
    rhs: 8 eps^-2 sum_i Var(N_i)/b_i^2, or with m_start the constant-32
    variant that freezes the first m_start variances at b_{m_start}.
    """
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0) or np.any(np.diff(b) <= 0):
        raise ValueError("b must be strictly increasing and positive")
    if eps <= 0:
        raise ValueError("eps must be positive")
    law = count_law(process)
    m = law.joint.dim
    if b.shape != (m,):
        raise ValueError("b must list one weight per tracked cell")
    means = law.intensity()
    variances = np.array([law.joint.marginal_pmf(i).variance() for i in range(m)])
    if m_start is None:
        rhs = 8.0 / eps**2 * float(np.sum(variances / b**2))
        start = 0
    else:
        ms = int(m_start)
        if not 1 <= ms < m:
            raise ValueError("m_start must lie in [1, m)")
        rhs = 32.0 / eps**2 * (float(np.sum(variances[ms:] / b[ms:]**2))
                               + float(np.sum(variances[:ms])) / b[ms - 1]**2)
        start = ms - 1
    counts = sample_counts_blocked(process, n_mc, seed)
    hits = _max_partial_sum_hits(counts, means, b, eps, start=start)
    est = _proportion_estimate(hits, n_mc, seed, z)
    lhs = est.ci_wilson[1]
    return BoundReport("kolmogorov-32" if m_start is not None else "kolmogorov-8",
                       lhs, rhs,
                       {"eps": eps, "b": [float(x) for x in b],
                        "m_start": m_start, "estimate": est.to_json_dict()})
