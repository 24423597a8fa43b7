"""Continuous binary-input AWGN functionals by numerical quadrature.

The channel is y = sqrt(s)(2x-1) + n with unit-variance noise.  Marginal
quantities use adaptive 1-d quadrature.  Joint quantities for a small
codebook integrate over R^n with a tensor-product trapezoid rule in the
standardized noise coordinates; the rule converges geometrically for
these analytic integrands, and the sum over codewords is carried by
matrix products over a split of the axes so that memory stays bounded.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.integrate import quad

from .codes import Codebook
from .errors import DomainError, EnumerationLimitError

LN2 = float(np.log(2.0))

MAX_JOINT_N = 8
MAX_JOINT_CODEWORDS = 4096


def _gauss_pdf(t):
    return np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)


def mi_uncoded_nats(s: float) -> float:
    """I(x;y) in nats for a single uniform bit over the continuous channel."""
    if s < 0:
        raise DomainError("snr must be nonnegative")
    if s == 0:
        return 0.0
    rs = np.sqrt(s)

    def integrand(t):
        # conditioned on x=0 (signal -rs); p1 = P(x=1|y)
        p1 = 1.0 / (1.0 + np.exp(-2.0 * rs * (t - rs)))
        if p1 <= 0.0 or p1 >= 1.0:
            return 0.0
        return _gauss_pdf(t) * (-p1 * np.log(p1) - (1 - p1) * np.log(1 - p1))

    val, _ = quad(integrand, -14, 14, limit=400, epsabs=1e-13, epsrel=1e-13)
    return LN2 - val


def mmse_uncoded(s: float) -> float:
    """E[(x - P(x=1|y))^2] for a single uniform bit, x valued 0/1."""
    if s < 0:
        raise DomainError("snr must be nonnegative")
    if s == 0:
        return 0.25
    rs = np.sqrt(s)

    def integrand(t):
        p1 = 1.0 / (1.0 + np.exp(-2.0 * rs * (t - rs)))
        return _gauss_pdf(t) * p1 * (1.0 - p1)

    val, _ = quad(integrand, -14, 14, limit=400, epsabs=1e-14, epsrel=1e-13)
    return val


def mi_uncoded_bits(s: float) -> float:
    return mi_uncoded_nats(s) / LN2


def trapezoid_rule(npts: int = 25, halfwidth: float = 7.5):
    """Uniform nodes with Gaussian-weighted trapezoid weights on [-L, L]."""
    t = np.linspace(-halfwidth, halfwidth, npts)
    w = np.full(npts, t[1] - t[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return t, w * _gauss_pdf(t)


def coded_joint_functionals(
    codebook: Codebook,
    s: float,
    npts: int = 25,
    halfwidth: float = 7.5,
    want_mmse: bool = False,
    max_rest_axes: int = 5,
):
    """Joint MI (nats) and optionally per-bit MMSE of a codebook over BI-AWGN.

    Works conditioned on the all-zero codeword; linearity plus output
    symmetry make that average exact.  Returns (mi_nats, mmse_per_bit or
    None).
    """
    cb = codebook.codewords
    ncw, n = cb.shape
    if n > MAX_JOINT_N:
        raise EnumerationLimitError(f"joint quadrature limited to n <= {MAX_JOINT_N}")
    if ncw > MAX_JOINT_CODEWORDS:
        raise EnumerationLimitError("codebook too large for joint quadrature")
    if s < 0:
        raise DomainError("snr must be nonnegative")
    k = int(round(np.log2(ncw)))
    t, w = trapezoid_rule(npts, halfwidth)
    rs = np.sqrt(s)
    llr = 2.0 * rs * (t - rs)  # log P(y|1)/P(y|0) at nodes, x=0 sent
    g1 = np.exp(llr)

    rest = min(n, max_rest_axes)
    nslab = n - rest
    m_a = rest // 2
    axes_a = list(range(nslab, nslab + m_a))
    axes_b = list(range(nslab + m_a, n))

    def build(axes):
        u = np.ones((ncw, 1))
        lsum = np.zeros((ncw, 1))
        for j in axes:
            sel = cb[:, j : j + 1] == 1
            fj = np.where(sel, g1[None, :], 1.0)
            lj = np.where(sel, llr[None, :], 0.0)
            u = (u[:, :, None] * fj[:, None, :]).reshape(ncw, -1)
            lsum = (lsum[:, :, None] + lj[:, None, :]).reshape(ncw, -1)
        return u, lsum

    ua, la = build(axes_a)
    ub, lb = build(axes_b)
    ubl = ub * lb
    wa = np.ones(1)
    for _ in axes_a:
        wa = np.outer(wa, w).ravel()
    wb = np.ones(1)
    for _ in axes_b:
        wb = np.outer(wb, w).ravel()

    cbf = (cb == 1).astype(float)
    ub_ubl = np.vstack([ub, ubl])  # stacked right factor computes S1 in one product
    h_sum = 0.0
    mmse = np.zeros(n) if want_mmse else None
    for idx in itertools.product(range(npts), repeat=nslab):
        fs = np.ones(ncw)
        ls = np.zeros(ncw)
        ws = 1.0
        for ax, ii in enumerate(idx):
            on = cbf[:, ax]
            fs *= np.where(on == 1.0, g1[ii], 1.0)
            ls += np.where(on == 1.0, llr[ii], 0.0)
            ws *= w[ii]
        u = ua * fs[:, None]
        s0 = u.T @ ub
        s1 = np.vstack([u * (la + ls[:, None]), u]).T @ ub_ubl
        h_post = np.log(s0) - s1 / s0
        h_sum += ws * float(wa @ h_post @ wb)
        if want_mmse:
            for i in range(n):
                bi = (u * cbf[:, i][:, None]).T @ ub
                p1 = bi / s0
                mmse[i] += ws * float(wa @ (p1 * (1.0 - p1)) @ wb)
    mi_nats = k * LN2 - h_sum
    return mi_nats, mmse
