"""Real-rootedness of univariate real polynomials via Sturm chains.

Coefficient vectors are low-degree-first.  The fast path runs in double
precision with a guard band around zero; whenever a sign or a leading
coefficient falls inside the band the computation is redone exactly over the
rationals (the input doubles convert to Fractions without loss), so a verdict
is never produced from an ambiguous cancellation.

With the chain taken all the way down to gcd(p, p'), the sign-change count
V(-inf) - V(+inf) equals the number of distinct real roots, and the degree of
the gcd gives the number of repeated ones; p is real-rooted iff
distinct-real-roots == deg p - deg gcd.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

# relative magnitudes: below DROP a coefficient is treated as zero, above KEEP
# its sign is trusted; in between the double path refuses and we go exact
_DROP = 1e-13
_KEEP = 1e-9


class _Ambiguous(Exception):
    pass


def _trim(c: np.ndarray, scale: float) -> np.ndarray:
    k = c.size
    while k > 0 and abs(c[k - 1]) <= _DROP * scale:
        k -= 1
    out = c[:k].copy()
    if out.size and abs(out[-1]) < _KEEP * scale:
        raise _Ambiguous("leading coefficient inside guard band")
    return out


def _rem(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Polynomial remainder of a modulo b (double precision)."""
    r = a.copy()
    db, lb = b.size - 1, b[-1]
    while r.size - 1 >= db and r.size > 0:
        k = r.size - 1 - db
        f = r[-1] / lb
        r = r[:-1]
        if f != 0.0:
            r[k:k + db] -= f * b[:-1]
    return r


def _sign(x: float, scale: float) -> int:
    if abs(x) <= _DROP * scale:
        return 0
    if abs(x) < _KEEP * scale:
        raise _Ambiguous("sign inside guard band")
    return 1 if x > 0 else -1


def _sign_changes(signs: Sequence[int]) -> int:
    nz = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(nz, nz[1:]) if a * b < 0)


def _real_rooted_double(coeffs: np.ndarray) -> bool:
    scale = float(np.max(np.abs(coeffs)))
    p = _trim(coeffs / scale, 1.0)
    deg = p.size - 1
    if deg <= 1:
        return True
    chain = [p, np.polynomial.polynomial.polyder(p)]
    while chain[-1].size > 1:
        r = _rem(chain[-2], chain[-1])
        sc = max(float(np.max(np.abs(chain[-2]))), float(np.max(np.abs(chain[-1]))))
        r = _trim(r, sc)
        if r.size == 0:
            break
        chain.append(-r / float(np.max(np.abs(r))))
    gcd_deg = chain[-1].size - 1 if chain[-1].size > 1 else 0
    at_pinf, at_minf = [], []
    for q in chain:
        d = q.size - 1
        s = _sign(float(q[-1]), 1.0)
        at_pinf.append(s)
        at_minf.append(s if d % 2 == 0 else -s)
    distinct_real = _sign_changes(at_minf) - _sign_changes(at_pinf)
    return distinct_real == deg - gcd_deg


def _real_rooted_exact(coeffs: Sequence) -> bool:
    p = [Fraction(c) for c in coeffs]
    while p and p[-1] == 0:
        p.pop()
    if len(p) <= 2:
        return True
    deg = len(p) - 1
    dp = [k * c for k, c in enumerate(p)][1:]
    chain = [p, dp]
    while len(chain[-1]) > 1:
        a, b = chain[-2], chain[-1]
        r = list(a)
        db, lb = len(b) - 1, b[-1]
        while len(r) - 1 >= db and r:
            k = len(r) - 1 - db
            f = r[-1] / lb
            r.pop()
            if f != 0:
                for j in range(db):
                    r[k + j] -= f * b[j]
        while r and r[-1] == 0:
            r.pop()
        if not r:
            break
        m = max(abs(c) for c in r)
        chain.append([-c / m for c in r])
    gcd_deg = len(chain[-1]) - 1 if len(chain[-1]) > 1 else 0
    at_pinf, at_minf = [], []
    for q in chain:
        d = len(q) - 1
        s = 1 if q[-1] > 0 else -1
        at_pinf.append(s)
        at_minf.append(s if d % 2 == 0 else -s)
    distinct_real = _sign_changes(at_minf) - _sign_changes(at_pinf)
    return distinct_real == deg - gcd_deg


def real_rooted(coeffs, exact: bool = False) -> bool:
    """True iff every complex root of the polynomial is real.

    Constants and (after trimming) degree <= 1 polynomials count as
    real-rooted.  ``exact=True`` forces the rational-arithmetic path.
    """
    a = np.asarray(coeffs, dtype=float)
    if np.all(a == 0.0):
        return True
    if exact:
        return _real_rooted_exact([float(c) for c in coeffs])
    try:
        return _real_rooted_double(a)
    except _Ambiguous:
        return _real_rooted_exact([float(c) for c in coeffs])


def max_imag_part(coeffs) -> float:
    """Largest |Im root| relative to (1 + |Re root|); 0 for degree <= 1."""
    a = np.asarray(coeffs, dtype=float)
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    a = a / scale
    k = a.size
    while k > 0 and abs(a[k - 1]) <= 1e-14:
        k -= 1
    if k <= 2:
        return 0.0
    roots = np.roots(a[:k][::-1])
    return float(np.max(np.abs(roots.imag) / (1.0 + np.abs(roots.real))))
