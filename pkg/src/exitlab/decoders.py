"""Exact a-posteriori / extrinsic decoding, BEC rank decoding, and BP.

Exact decoders enumerate a small codebook in the log domain.  The BEC
decoder answers determinacy questions with two forward GF(2)
eliminations per erasure pattern (generator side for erased positions,
dual side for unerased ones).  bp_decode is a plain flooding sum-product
pass over a Tanner graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .channels import DiscreteChannel, intrinsic_posterior
from .codes import Codebook, LinearCode, TannerGraph
from .errors import DomainError, EvidenceContradictionError

LLR_CLAMP = 30.0

SCOPE_FULL = "full_y"
SCOPE_EXTRINSIC = "extrinsic_excluding_i"
SCOPE_INTRINSIC = "intrinsic_only"


@dataclass
class PosteriorVector:
    """Per-bit P(x_i = 1 | evidence) with the evidence scope recorded."""

    values: np.ndarray
    scope: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if ((v < 0) | (v > 1)).any():
            raise DomainError("posterior probabilities must lie in [0, 1]")
        self.values = v


@dataclass
class ExtrinsicRecords:
    """Column-wise Monte Carlo records: true bit, intrinsic output symbol,
    extrinsic posterior, and optionally the full posterior, at one channel
    parameter."""

    x: np.ndarray
    y: np.ndarray
    p_ext: np.ndarray
    p_full: np.ndarray | None
    param: float

    def __len__(self):
        return self.x.size


def _loglik_parts(codebook: Codebook, channel: DiscreteChannel, y: np.ndarray):
    """Finite part and -inf count of per-codeword log likelihoods, per position."""
    y = np.asarray(y)
    n = codebook.codewords.shape[1]
    if y.shape != (n,):
        raise DomainError(f"output vector must have length {n}")
    if y.min() < 0 or y.max() >= channel.output_size:
        raise DomainError("output symbol out of range")
    probs = channel.transition[y, :]  # (n, 2)
    cw = codebook.codewords
    pmat = np.where(cw == 1, probs[:, 1], probs[:, 0])  # (ncw, n)
    neg = pmat <= 0.0
    with np.errstate(divide="ignore"):
        lmat = np.where(neg, 0.0, np.log(np.where(neg, 1.0, pmat)))
    return lmat, neg


def _posterior_from_loglik(codebook: Codebook, loglik: np.ndarray) -> np.ndarray:
    m = loglik.max()
    if not np.isfinite(m):
        raise EvidenceContradictionError("received vector impossible for every codeword")
    w = np.exp(loglik - m)
    z = w.sum()
    return (w @ codebook.codewords) / z


def exact_app(codebook: Codebook, channel: DiscreteChannel, y: np.ndarray) -> PosteriorVector:
    """P(x_i = 1 | full y) by codebook enumeration in the log domain."""
    lmat, neg = _loglik_parts(codebook, channel, y)
    loglik = np.where(neg.any(axis=1), -np.inf, lmat.sum(axis=1))
    return PosteriorVector(_posterior_from_loglik(codebook, loglik), SCOPE_FULL)


def exact_extrinsic_all(codebook: Codebook, channel: DiscreteChannel, y: np.ndarray) -> PosteriorVector:
    """P(x_i = 1 | y with position i erased), for every i."""
    lmat, neg = _loglik_parts(codebook, channel, y)
    fsum = lmat.sum(axis=1)
    cnt = neg.sum(axis=1)
    n = lmat.shape[1]
    out = np.empty(n)
    for i in range(n):
        cnt_i = cnt - neg[:, i]
        loglik = np.where(cnt_i > 0, -np.inf, fsum - lmat[:, i])
        out[i] = _posterior_from_loglik(codebook, loglik)[i]
    return PosteriorVector(out, SCOPE_EXTRINSIC)


def exact_extrinsic(codebook: Codebook, channel: DiscreteChannel, y: np.ndarray, i: int) -> float:
    return float(exact_extrinsic_all(codebook, channel, y).values[i])


def intrinsic_posteriors(channel: DiscreteChannel, ys: np.ndarray) -> np.ndarray:
    """Vectorized P(x=1 | y_i) under the uniform prior."""
    ys = np.asarray(ys)
    t = channel.transition
    p0, p1 = t[ys, 0], t[ys, 1]
    tot = p0 + p1
    if (tot <= 0).any():
        raise EvidenceContradictionError("output symbol impossible under both inputs")
    return p1 / tot


def intrinsic_llrs(channel: DiscreteChannel, ys: np.ndarray, clamp: float = LLR_CLAMP) -> np.ndarray:
    """ln P(y|x=1)/P(y|x=0) per received symbol, clamped to +-clamp.

    Erasure-like symbols (equal likelihoods) give exactly 0.
    """
    ys = np.asarray(ys)
    t = channel.transition
    p0, p1 = t[ys, 0], t[ys, 1]
    if ((p0 <= 0) & (p1 <= 0)).any():
        raise EvidenceContradictionError("output symbol impossible under both inputs")
    with np.errstate(divide="ignore"):
        llr = np.log(p1) - np.log(p0)
    return np.clip(llr, -clamp, clamp)


# ---------------------------------------------------------------------------
# BEC rank decoding


def bec_extrinsic_determined_all(code: LinearCode, erased: np.ndarray) -> np.ndarray:
    """For every position i: is x_i pinned by the unerased positions != i?

    Erased i: x_i is determined iff its generator column lies in the span
    of the unerased columns.  Unerased i: x_i is determined iff some dual
    codeword supported on the unerased set covers i.  Both reduce to one
    forward elimination each.
    """
    erased = np.asarray(erased, dtype=bool)
    n = code.n
    if erased.shape != (n,):
        raise DomainError(f"erasure mask must have length {n}")
    det = np.zeros(n, dtype=bool)
    unerased_idx = np.flatnonzero(~erased).astype(np.int64)
    erased_idx = np.flatnonzero(erased).astype(np.int64)

    work = code.packed_generator().copy()
    rest_or, _ = gf2.forward_eliminate_rest_or2(work, unerased_idx, unerased_idx.size)
    rest = gf2.unpack_bits(rest_or, n)
    det[erased] = ~rest[erased]

    dual = code.packed_dual()
    if dual.shape[0]:
        work = dual.copy()
        supp_or, _ = gf2.forward_eliminate_rest_or2(work, erased_idx, erased_idx.size)
        supp = gf2.unpack_bits(supp_or, n)
        det[~erased] = supp[~erased]
    return det


def bec_extrinsic_determined(code: LinearCode, erased: np.ndarray, i: int) -> bool:
    if not (0 <= i < code.n):
        raise DomainError("position out of range")
    return bool(bec_extrinsic_determined_all(code, erased)[i])


def bec_extrinsic_posteriors(code: LinearCode, codeword: np.ndarray, erased: np.ndarray) -> np.ndarray:
    """Ternary extrinsic posteriors over the BEC: exact bit where determined,
    the prior 1/2 elsewhere."""
    det = bec_extrinsic_determined_all(code, erased)
    cw = np.asarray(codeword, dtype=float)
    return np.where(det, cw, 0.5)


# ---------------------------------------------------------------------------
# Belief propagation


def bp_decode(tanner: TannerGraph, intrinsic: np.ndarray, iterations: int) -> np.ndarray:
    """Flooding sum-product; returns per-bit extrinsic LLRs (intrinsic excluded).

    Inputs must be finite (encode erasures as 0); values are clamped to
    +-LLR_CLAMP.  Sign convention: positive means x = 1 more likely.
    """
    intrinsic = np.asarray(intrinsic, dtype=float)
    if intrinsic.shape != (tanner.n_vars,):
        raise DomainError(f"LLR vector must have length {tanner.n_vars}")
    if not np.isfinite(intrinsic).all():
        raise DomainError("intrinsic LLRs must be finite; encode erasures as 0")
    if iterations < 1:
        raise DomainError("need at least one iteration")
    llr = np.clip(intrinsic, -LLR_CLAMP, LLR_CLAMP)
    tmax = np.tanh(0.5 * LLR_CLAMP)
    m_vc = llr[tanner.edge_var]
    ext = np.zeros(tanner.n_vars)
    for _ in range(iterations):
        t = np.tanh(0.5 * np.clip(m_vc, -LLR_CLAMP, LLR_CLAMP))
        zero = t == 0.0
        safe = np.where(zero, 1.0, t)
        prod = np.multiply.reduceat(safe, tanner.chk_ptr[:-1])
        zcnt = np.add.reduceat(zero.astype(np.int64), tanner.chk_ptr[:-1])
        prod_e = prod[tanner.edge_chk]
        zc_e = zcnt[tanner.edge_chk]
        out = np.where(
            zc_e == 0, prod_e / safe, np.where((zc_e == 1) & zero, prod_e, 0.0)
        )
        m_cv = 2.0 * np.arctanh(np.clip(out, -tmax, tmax))
        ext = np.bincount(tanner.edge_var, weights=m_cv, minlength=tanner.n_vars)
        m_vc = llr[tanner.edge_var] + ext[tanner.edge_var] - m_cv
    return np.clip(ext, -LLR_CLAMP, LLR_CLAMP)


def posterior_from_llr(llr: np.ndarray) -> np.ndarray:
    """P(x=1) from an LLR in the positive-means-one convention."""
    return 1.0 / (1.0 + np.exp(-np.asarray(llr, dtype=float)))
