"""Independent oracle implementations used to cross-check production code.

Everything here is deliberately written with different machinery than the
package: exact rational arithmetic for posteriors, int-bitset linear
algebra for GF(2) rank questions, brute-force codebook consistency for
erasure determinacy, and adaptive quadrature for Gaussian-channel curves.
"""

from fractions import Fraction

import numpy as np
from scipy.integrate import quad


def bsc_fraction_matrix(p: Fraction):
    """3x2-free exact BSC transition matrix as nested Fractions [y][x]."""
    return [[1 - p, p], [p, 1 - p]]


def bec_fraction_matrix(eps: Fraction):
    return [[1 - eps, Fraction(0)], [Fraction(0), 1 - eps], [eps, eps]]


def posterior_fractions(codewords, trans, y, exclude=None):
    """P(x_i = 1 | y) per position with exact fractions.

    codewords: iterable of bit tuples; trans: [y][x] Fractions; exclude:
    position whose likelihood factor is replaced by 1 (extrinsic scope).
    """
    n = len(y)
    weights = []
    for cw in codewords:
        w = Fraction(1)
        for j in range(n):
            if j == exclude:
                continue
            w *= trans[y[j]][cw[j]]
        weights.append(w)
    total = sum(weights)
    out = []
    for i in range(n):
        num = sum(w for w, cw in zip(weights, codewords) if cw[i] == 1)
        out.append(num / total if total else None)
    return out


def int_rank(rows, ncols):
    """GF(2) rank of rows given as python ints (bit j = column j)."""
    work = list(rows)
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(work)):
            if (work[i] >> c) & 1:
                piv = i
                break
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        for i in range(len(work)):
            if i != r and ((work[i] >> c) & 1):
                work[i] ^= work[r]
        r += 1
    return r


def int_in_span(vec, rows, ncols):
    return int_rank(list(rows) + [vec], ncols) == int_rank(rows, ncols)


def rows_to_ints(mat):
    out = []
    for row in np.atleast_2d(mat):
        v = 0
        for j, b in enumerate(row):
            if b:
                v |= 1 << j
        out.append(v)
    return out


def bec_determined_bruteforce(generator, erased):
    """Determinacy of each x_i from unerased positions != i, by scanning all
    codewords for consistency (exponential; small codes only)."""
    g = np.asarray(generator)
    k, n = g.shape
    msgs = ((np.arange(2**k)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    cb = (msgs @ g) % 2
    det = np.zeros(n, dtype=bool)
    for i in range(n):
        keep = [j for j in range(n) if j != i and not erased[j]]
        seen = {}
        ok = True
        for cw in cb:
            key = tuple(cw[keep])
            if key in seen and seen[key] != cw[i]:
                ok = False
                break
            seen[key] = cw[i]
        det[i] = ok
    return det


def bec_rowspace_determined(generator, erased, i):
    """Row-space membership route: x_i determined iff e_i lies in the span of
    the generator columns at unerased positions != i (seen as k-vectors)."""
    g = np.asarray(generator)
    k, n = g.shape
    cols = [g[:, j] for j in range(n) if j != i and not erased[j]]
    rows = rows_to_ints(cols)
    target = rows_to_ints(g[:, i])[0]
    return int_in_span(target, rows, k)


def biawgn_mi_bits(s: float) -> float:
    """Continuous BI-AWGN mutual information in bits, adaptive quadrature."""
    if s == 0:
        return 0.0
    rs = np.sqrt(s)

    def f(t):
        p1 = 1.0 / (1.0 + np.exp(-2.0 * rs * (t - rs)))
        if p1 <= 0 or p1 >= 1:
            return 0.0
        return (
            np.exp(-0.5 * t * t)
            / np.sqrt(2 * np.pi)
            * -(p1 * np.log2(p1) + (1 - p1) * np.log2(1 - p1))
        )

    val, _ = quad(f, -12, 12, limit=400)
    return 1.0 - val


def gaussian_bin_mass(lo, hi, mu, npts=20001):
    """High-resolution numerical integration of the N(mu,1) density over a bin."""
    lo = max(lo, mu - 12.0)
    hi = min(hi, mu + 12.0)
    if hi <= lo:
        return 0.0
    x = np.linspace(lo, hi, npts)
    return float(np.trapezoid(np.exp(-0.5 * (x - mu) ** 2) / np.sqrt(2 * np.pi), x))
