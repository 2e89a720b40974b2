"""Multi-affine generating polynomials of measures on subsets of {0,...,n-1}.

A measure mu on the subset lattice is stored as a coefficient array indexed by
bitmask; its generating polynomial is P(z) = sum_S mu(S) prod_{i in S} z_i.
This module evaluates P and its partial derivatives, screens the pairwise
derivative inequality

    dP/dz_i * dP/dz_j >= P * d2P/dz_i dz_j

on the non-negative orthant (Rayleigh) or all of R^n plus real-rootedness
along positive directions (strongly Rayleigh), and lifts count laws to
exchangeable binary vectors through normalized elementary symmetric
polynomials.

The stability checks are randomized semi-decisions: a reported violation is
always re-verified in exact rational arithmetic before being returned, and
the absence of a violation after the configured budget is reported as
``no-violation-found``, never as a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import sturm
from .pmf import Pmf

MAX_GROUND_SET = 20  # 2**20 coefficients; exhaustive subset indexing cap

# relative imaginary-part margin below which a non-real-rooted line is treated
# as rounding noise rather than certified as a stability violation
LINE_IMAG_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class SubsetMeasure:
    """Coefficients of a multi-affine polynomial, indexed by subset bitmask.

    In probability mode the coefficients are a probability measure on the
    subset lattice; polynomial mode (used for derivatives) relaxes only the
    sum-to-one constraint.
    """

    n: int
    coeffs: np.ndarray
    probability: bool = True

    def __post_init__(self):
        if not 1 <= self.n <= MAX_GROUND_SET:
            raise ValueError(f"ground-set size must be in [1, {MAX_GROUND_SET}]")
        a = np.asarray(self.coeffs, dtype=float)
        if a.shape != (1 << self.n,):
            raise ValueError("coefficient array must have length 2**n")
        if self.probability:
            if np.any(a < 0):
                raise ValueError("probability mode requires non-negative weights")
            if abs(float(a.sum()) - 1.0) > 1e-12:
                raise ValueError("probability mode requires total mass 1")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)

    def to_json_dict(self) -> dict:
        entries = [[int(s), float(w)] for s, w in enumerate(self.coeffs) if w != 0.0]
        return {"n": self.n, "entries": entries}

    @classmethod
    def from_json_dict(cls, d: dict) -> "SubsetMeasure":
        n = int(d["n"])
        a = np.zeros(1 << n)
        for s, w in d["entries"]:
            a[int(s)] = float(w)
        return cls(n, a)


@dataclass(frozen=True)
class StabilityVerdict:
    status: str                     # "violated" | "no-violation-found"
    witness: dict | None
    trials: dict

    def __post_init__(self):
        if (self.status == "violated") != (self.witness is not None):
            raise ValueError("witness present iff status is violated")

    def to_json_dict(self) -> dict:
        return {"status": self.status, "witness": self.witness,
                "trials": dict(self.trials)}


def evaluate(m: SubsetMeasure, x: Sequence[float]) -> float:
    """P(x) = sum_S mu(S) prod_{i in S} x_i, with compensated summation."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n,):
        raise ValueError(f"point must have dimension {m.n}")
    terms = m.coeffs.copy()
    idx = np.arange(terms.size)
    for i in range(m.n):
        terms[(idx >> i) & 1 == 1] *= x[i]
    return math.fsum(terms.tolist())


def partial_derivative(m: SubsetMeasure, i: int) -> SubsetMeasure:
    """dP/dz_i as a subset measure in polynomial mode."""
    if not 0 <= i < m.n:
        raise IndexError(f"coordinate {i} out of range for n={m.n}")
    bit = 1 << i
    idx = np.arange(m.coeffs.size)
    out = np.zeros_like(m.coeffs)
    lower = idx[(idx & bit) == 0]
    out[lower] = m.coeffs[lower | bit]
    return SubsetMeasure(m.n, out, probability=False)


def contract(m: SubsetMeasure, i: int) -> SubsetMeasure:
    """Set z_i = 1: merge each subset with its i-augmented partner."""
    if not 0 <= i < m.n:
        raise IndexError(f"coordinate {i} out of range for n={m.n}")
    if m.n == 1:
        raise ValueError("cannot contract the last coordinate")
    bit = 1 << i
    low = bit - 1
    out = np.zeros(1 << (m.n - 1))
    for s, w in enumerate(m.coeffs):
        if w == 0.0:
            continue
        t = (s & low) | ((s >> 1) & ~low)
        out[t] += w
    return SubsetMeasure(m.n - 1, out, probability=m.probability)


def _subset_products(x: np.ndarray, n: int) -> np.ndarray:
    """Matrix of prod_{i in S} x[., i] for every subset column S."""
    mat = np.ones((x.shape[0], 1))
    for i in range(n):
        mat = np.concatenate([mat, mat * x[:, i: i + 1]], axis=1)
    return mat


def _derivative_coeffs(m: SubsetMeasure, i: int) -> np.ndarray:
    bit = 1 << i
    idx = np.arange(m.coeffs.size)
    out = np.zeros_like(m.coeffs)
    lower = idx[(idx & bit) == 0]
    out[lower] = m.coeffs[lower | bit]
    return out


def _second_derivative_coeffs(m: SubsetMeasure, i: int, j: int) -> np.ndarray:
    bi, bj = 1 << i, 1 << j
    idx = np.arange(m.coeffs.size)
    out = np.zeros_like(m.coeffs)
    lower = idx[(idx & (bi | bj)) == 0]
    out[lower] = m.coeffs[lower | bi | bj]
    return out


def rayleigh_at(m: SubsetMeasure, x: Sequence[float], i: int, j: int) -> float:
    """Signed slack dP_i(x) dP_j(x) - P(x) dP_ij(x); >= 0 means the
    inequality holds at x."""
    if i == j:
        raise IndexError("the derivative inequality is for index pairs i != j")
    di = evaluate(partial_derivative(m, i), _with_dim(x, m.n))
    dj = evaluate(partial_derivative(m, j), _with_dim(x, m.n))
    p = evaluate(m, x)
    dij = evaluate(partial_derivative(partial_derivative(m, i), j), _with_dim(x, m.n))
    return di * dj - p * dij


def _with_dim(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"point must have dimension {n}")
    return x


def rayleigh_slack_exact(m: SubsetMeasure, x: Sequence[float],
                         i: int, j: int) -> Fraction:
    """Exact rational slack at a (dyadic-exact) point; used to confirm
    floating-point violations."""
    xf = [Fraction(float(c)) for c in x]
    cf = [Fraction(float(c)) for c in m.coeffs]

    def ev(coeffs):
        total = Fraction(0)
        for s, w in enumerate(coeffs):
            if w == 0:
                continue
            t = w
            for b in range(m.n):
                if s >> b & 1:
                    t *= xf[b]
            total += t
        return total

    bi, bj = 1 << i, 1 << j
    size = len(cf)
    ci = [cf[s | bi] if not s & bi else Fraction(0) for s in range(size)]
    cj = [cf[s | bj] if not s & bj else Fraction(0) for s in range(size)]
    cij = [cf[s | bi | bj] if not s & (bi | bj) else Fraction(0) for s in range(size)]
    return ev(ci) * ev(cj) - ev(cf) * ev(cij)


def _pair_slacks(m: SubsetMeasure, points: np.ndarray, i: int, j: int) -> np.ndarray:
    mat = _subset_products(points, m.n)
    p = mat @ m.coeffs
    di = mat @ _derivative_coeffs(m, i)
    dj = mat @ _derivative_coeffs(m, j)
    dij = mat @ _second_derivative_coeffs(m, i, j)
    return di * dj - p * dij, np.maximum(1.0, np.maximum(np.abs(di * dj), np.abs(p * dij)))


def _grid_points(n: int, lo: float, hi: float, budget: int, seed: int,
                 signed: bool) -> np.ndarray:
    per_axis = max(2, int(budget ** (1.0 / n)))
    per_axis = min(per_axis, 9)
    axis = np.linspace(lo, hi, per_axis)
    if signed and 0.0 not in axis:
        axis = np.sort(np.append(axis, 0.0))
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    lattice = np.stack([g.ravel() for g in mesh], axis=1)
    rng = np.random.Generator(np.random.Philox(seed))
    extra = budget - lattice.shape[0]
    if extra > 0:
        if signed:
            rnd = rng.normal(0.0, 2.0, size=(extra, n))
        else:
            rnd = np.abs(rng.normal(0.0, 2.0, size=(extra, n)))
        lattice = np.concatenate([lattice, rnd], axis=0)
    return lattice[:budget]


def _scan_pairs(m: SubsetMeasure, points: np.ndarray, tol: float):
    """First confirmed violation in (pair, point) order, or None."""
    tested = 0
    for i in range(m.n):
        for j in range(i + 1, m.n):
            slacks, scales = _pair_slacks(m, points, i, j)
            tested += slacks.size
            bad = np.nonzero(slacks < -tol * scales)[0]
            for k in bad:
                x = points[k]
                exact = rayleigh_slack_exact(m, x, i, j)
                if exact < -Fraction(tol) * Fraction(float(scales[k])):
                    return {"kind": "point", "x": [float(v) for v in x],
                            "pair": [i, j], "slack": float(exact)}, tested
    return None, tested


def is_rayleigh(m: SubsetMeasure, grid_budget: int = 10**4, tol: float = 1e-10,
                seed: int = 0, hi: float = 5.0) -> StabilityVerdict:
    """Screen the derivative inequality over the non-negative orthant.

    Deterministic lattice on [0, hi]^n plus seeded random points, all pairs
    i < j.  Violations are certified by exact re-evaluation; their absence is
    reported as no-violation-found.
    """
    if m.n == 1:
        return StabilityVerdict("no-violation-found", None,
                                {"points": 0, "pairs": 0})
    points = _grid_points(m.n, 0.0, hi, grid_budget, seed, signed=False)
    witness, tested = _scan_pairs(m, points, tol)
    trials = {"points": int(points.shape[0]),
              "pairs": m.n * (m.n - 1) // 2, "slacks_tested": tested}
    if witness is not None:
        return StabilityVerdict("violated", witness, trials)
    return StabilityVerdict("no-violation-found", None, trials)


def line_coefficients(m: SubsetMeasure, a: Sequence[float],
                      b: Sequence[float]) -> np.ndarray:
    """Coefficients (low first) of t -> P(a + t b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def fold(c: np.ndarray, k: int) -> np.ndarray:
        if k == 0:
            return np.array([c[0]])
        half = 1 << (k - 1)
        lo = fold(c[:half], k - 1)
        hi = fold(c[half:], k - 1)
        out = np.zeros(max(lo.size, hi.size + 1))
        out[: lo.size] += lo
        out[: hi.size] += a[k - 1] * hi
        out[1: hi.size + 1] += b[k - 1] * hi
        return out

    return fold(m.coeffs, m.n)


def line_coefficients_exact(m: SubsetMeasure, a: Sequence[float],
                            b: Sequence[float]) -> list[Fraction]:
    af = [Fraction(float(v)) for v in a]
    bf = [Fraction(float(v)) for v in b]
    cf = [Fraction(float(v)) for v in m.coeffs]

    def fold(c, k):
        if k == 0:
            return [c[0]]
        half = 1 << (k - 1)
        lo = fold(c[:half], k - 1)
        hi = fold(c[half:], k - 1)
        out = [Fraction(0)] * max(len(lo), len(hi) + 1)
        for idx, v in enumerate(lo):
            out[idx] += v
        for idx, v in enumerate(hi):
            out[idx] += af[k - 1] * v
            out[idx + 1] += bf[k - 1] * v
        return out

    return fold(cf, m.n)


def is_strongly_rayleigh(m: SubsetMeasure, grid_budget: int = 10**4,
                         n_lines: int = 10**3, tol: float = 1e-10,
                         seed: int = 0, hi: float = 5.0) -> StabilityVerdict:
    """Screen for real stability of the generating polynomial.

    Layer (a): the derivative inequality on lattices spanning negative and
    positive coordinates plus Gaussian scatter.  Layer (b): real-rootedness of
    the restriction t -> P(a + t b) along seeded random lines with direction
    b > 0, decided by Sturm sign-change counting (with an exact rational
    fallback) and certified only when the offending root pair is robustly
    complex.
    """
    trials = {"points": 0, "pairs": m.n * (m.n - 1) // 2,
              "slacks_tested": 0, "lines": 0}
    if m.n >= 2:
        points = _grid_points(m.n, -hi, hi, grid_budget, seed, signed=True)
        witness, tested = _scan_pairs(m, points, tol)
        trials["points"] = int(points.shape[0])
        trials["slacks_tested"] = tested
        if witness is not None:
            return StabilityVerdict("violated", witness, trials)
    rng = np.random.Generator(np.random.Philox(key=seed + 0x5EED))
    for k in range(n_lines):
        a = rng.normal(0.0, 2.0, size=m.n)
        b = rng.uniform(0.1, 2.0, size=m.n)
        trials["lines"] = k + 1
        coeffs = line_coefficients(m, a, b)
        if sturm.real_rooted(coeffs):
            continue
        exact = line_coefficients_exact(m, a, b)
        if sturm.real_rooted(exact, exact=True):
            continue
        if sturm.max_imag_part(coeffs) <= LINE_IMAG_MARGIN:
            continue  # not robustly complex; treat as rounding noise
        return StabilityVerdict(
            "violated",
            {"kind": "line", "a": [float(v) for v in a],
             "b": [float(v) for v in b],
             "coefficients": [float(c) for c in coeffs]},
            trials)
    return StabilityVerdict("no-violation-found", None, trials)


def reverify_witness(m: SubsetMeasure, verdict: StabilityVerdict) -> bool:
    """Exact-arithmetic reproduction of a violation witness."""
    if verdict.status != "violated":
        raise ValueError("verdict carries no witness")
    w = verdict.witness
    if w["kind"] == "point":
        i, j = w["pair"]
        return rayleigh_slack_exact(m, w["x"], i, j) < 0
    exact = line_coefficients_exact(m, w["a"], w["b"])
    return not sturm.real_rooted(exact, exact=True)


def elementary_symmetric(values: Sequence[float], k: int) -> float:
    """e_k(values) via the triangular recurrence with compensated updates."""
    vals = [float(v) for v in values]
    if not 0 <= k <= len(vals):
        raise ValueError(f"order {k} out of range for {len(vals)} values")
    e = [0.0] * (k + 1)
    comp = [0.0] * (k + 1)
    e[0] = 1.0
    for i, v in enumerate(vals):
        for j in range(min(i + 1, k), 0, -1):
            term = v * e[j - 1] - comp[j]
            t = e[j] + term
            comp[j] = (t - e[j]) - term
            e[j] = t
    return e[k]


def product_measure(ps: Sequence[float]) -> SubsetMeasure:
    """mu(S) = prod_{i in S} p_i * prod_{i not in S} (1 - p_i)."""
    ps = [float(p) for p in ps]
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    out = np.array([1.0])
    for p in ps:
        out = np.concatenate([out * (1.0 - p), out * p])
    return SubsetMeasure(len(ps), out)


def polarize(tau: Pmf) -> SubsetMeasure:
    """Exchangeable binary lift of a count law: mu(S) = P(tau=|S|) / C(n,|S|).

    The coordinate sum of the lifted vector has law tau, and the lift of a
    binomial law is the corresponding product measure.
    """
    n = tau.n
    if n < 1:
        raise ValueError("polarization needs support bound >= 1")
    if n > MAX_GROUND_SET:
        raise ValueError(f"support bound {n} exceeds ground-set cap {MAX_GROUND_SET}")
    sizes = _popcounts(n)
    level = np.array([float(tau.probs[k]) / math.comb(n, k) for k in range(n + 1)])
    return SubsetMeasure(n, level[sizes])


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint32)
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts += (idx >> i) & 1
    return counts


def diagonal_coefficients(m: SubsetMeasure) -> np.ndarray:
    """Coefficients of the univariate polynomial P(z, z, ..., z)."""
    sizes = _popcounts(m.n)
    out = np.zeros(m.n + 1)
    np.add.at(out, sizes, m.coeffs)
    return out


def to_joint_pmf(m: SubsetMeasure):
    """The subset measure as a joint law of its binary coordinate vector."""
    from .pmf import JointPmf

    atoms = {}
    for s, w in enumerate(m.coeffs):
        if w > 0.0:
            atoms[tuple(float((s >> i) & 1) for i in range(m.n))] = float(w)
    return JointPmf.from_atoms(atoms)
