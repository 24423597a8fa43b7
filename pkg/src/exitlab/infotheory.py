"""Information functionals: entropies, exact and Monte Carlo mutual
information, extrinsic information, MMSE and the I-MMSE check, GEXIT,
extrinsic-KL scans, posterior combining, and information-combining bounds.

Everything is reported in bits except the I-MMSE residuals, whose natural
units are nats (the identity carries no log-base factor there).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import biawgn
from .channels import ChannelFamily, DiscreteChannel, transition_matrix, uniform_input_mi
from .codes import Codebook, LinearCode, enumerate_codebook, symbol_marginals
from .decoders import (
    ExtrinsicRecords,
    bec_extrinsic_determined_all,
    bp_decode,
    exact_app,
    exact_extrinsic_all,
    intrinsic_posteriors,
    intrinsic_llrs,
    posterior_from_llr,
)
from .errors import (
    DomainError,
    EnumerationLimitError,
    EvidenceContradictionError,
    InsufficientDataError,
    InvariantViolation,
    UnsupportedError,
)
from .channels import sample_sequence

ENUM_GUARD_VECTORS = 1 << 24
ENUM_GUARD_WORK = 1 << 28
Z_ROUND_DECIMALS = 12


# ---------------------------------------------------------------------------
# elementary quantities


def binary_entropy(p):
    """h2(p) in bits; 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if ((p < 0) | (p > 1)).any():
        raise DomainError("probability outside [0, 1]")
    out = np.zeros_like(p)
    m = (p > 0) & (p < 1)
    pm = p[m]
    out[m] = -pm * np.log2(pm) - (1 - pm) * np.log2(1 - pm)
    return out if out.ndim else float(out)


def binary_entropy_inv(h: float, tol: float = 1e-12) -> float:
    """Inverse of h2 on [0, 1/2], by bisection to the requested tolerance."""
    if not 0 <= h <= 1:
        raise DomainError("entropy outside [0, 1]")
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def entropy(dist) -> float:
    """Shannon entropy in bits of a probability vector."""
    d = np.asarray(dist, dtype=float)
    _check_distribution(d)
    m = d > 0
    return float(-(d[m] * np.log2(d[m])).sum())


def _check_distribution(d: np.ndarray):
    if (d < 0).any():
        raise DomainError("negative probability")
    if abs(d.sum() - 1.0) > 1e-9:
        raise DomainError(f"distribution sums to {d.sum()}, not 1")


def kl_divergence(p, q) -> float:
    """D(p || q) in bits; +inf when absolute continuity fails."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_distribution(p)
    _check_distribution(q)
    if ((q <= 0) & (p > 0)).any():
        return float("inf")
    m = p > 0
    return float((p[m] * (np.log2(p[m]) - np.log2(q[m]))).sum())


@dataclass
class MiEstimate:
    """A mutual-information value with its provenance."""

    value: float
    standard_error: float
    method: str  # 'exact' | 'mc_soft_bit' | 'mc_binned'
    trials: int = 0
    decoder: str = ""

    def check(self):
        if self.method == "exact" and self.standard_error != 0.0:
            raise InvariantViolation("exact estimates carry zero standard error")
        if self.value < -3.0 * self.standard_error - 1e-12:
            raise InvariantViolation(
                f"MI estimate {self.value} below -3 standard errors"
            )
        return self


@dataclass
class GexitPoint:
    """(1/n) dH(x|y)/dparam in bits per parameter unit, by central FD."""

    param: float
    value: float
    delta: float


@dataclass
class MiGap:
    """Per-symbol MI gap between independent-input and coded-input use."""

    param: float
    i_independent: float
    i_coded: float

    @property
    def gap(self) -> float:
        return self.i_independent - self.i_coded

    def check(self):
        if self.gap < -1e-10:
            raise InvariantViolation(f"MI gap {self.gap} negative beyond tolerance")
        return self


# ---------------------------------------------------------------------------
# exact enumeration over output vectors


def _output_chunks(out_sizes, chunk=1 << 16):
    """Yield (block of output vectors) as int matrices, mixed-radix order."""
    total = 1
    for s in out_sizes:
        total *= s
    radix = np.array(out_sizes, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, len(out_sizes)), dtype=np.int64)
        rem = idx
        for j in range(len(out_sizes) - 1, -1, -1):
            digits[:, j] = rem % radix[j]
            rem = rem // radix[j]
        yield digits


def _guard_enumeration(out_sizes, ncw):
    total = 1
    for s in out_sizes:
        total *= s
        if total > ENUM_GUARD_VECTORS:
            raise EnumerationLimitError(
                f"output space {out_sizes} exceeds {ENUM_GUARD_VECTORS} vectors"
            )
    if total * ncw > ENUM_GUARD_WORK:
        raise EnumerationLimitError("enumeration work limit exceeded")
    return total


def _likelihood_products(digits: np.ndarray, codewords: np.ndarray, channels) -> np.ndarray:
    """P(y | c) for a block of output vectors; shape (nvec, ncw)."""
    nvec, n = digits.shape
    ncw = codewords.shape[0]
    out = np.ones((nvec, ncw))
    for j in range(n):
        t = channels[j].transition
        out *= np.where(codewords[None, :, j] == 1, t[digits[:, j], 1][:, None], t[digits[:, j], 0][:, None])
    return out


def joint_entropies_exact(codebook: Codebook, channels) -> dict:
    """H(y), H(y|x), H(x|y) and I(x;y) (total bits) for per-position channels."""
    cw = codebook.codewords
    ncw, n = cw.shape
    if len(channels) != n:
        raise DomainError("need one channel per position")
    out_sizes = [c.output_size for c in channels]
    _guard_enumeration(out_sizes, ncw)
    hy = 0.0
    marg = symbol_marginals(codebook)
    for digits in _output_chunks(out_sizes):
        lik = _likelihood_products(digits, cw, channels)
        py = lik.mean(axis=1)
        m = py > 0
        hy += float(-(py[m] * np.log2(py[m])).sum())
    hyx = 0.0
    for j, ch in enumerate(channels):
        t = ch.transition
        for b, pb in ((0, 1 - marg[j]), (1, marg[j])):
            col = t[:, b]
            mm = col > 0
            hyx += pb * float(-(col[mm] * np.log2(col[mm])).sum())
    k = np.log2(ncw)
    mi = hy - hyx
    return {"H_y": hy, "H_y_given_x": hyx, "H_x_given_y": k - mi, "I_xy": mi}


def mi_exact_joint(codebook: Codebook, channel: DiscreteChannel) -> float:
    """(1/n) I(x;y) in bits per symbol, exact, equiprobable codewords."""
    n = codebook.codewords.shape[1]
    ent = joint_entropies_exact(codebook, [channel] * n)
    return ent["I_xy"] / n


def exact_average_ei(codebook: Codebook, channel: DiscreteChannel) -> float:
    """(1/n) sum_i I(x_i; y'_i) in bits, exact enumeration of y'_i."""
    cw = codebook.codewords
    ncw, n = cw.shape
    out_sizes = [channel.output_size] * (n - 1)
    _guard_enumeration(out_sizes, ncw * n)
    total = 0.0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        pb1 = cw[:, i].mean()
        hxi = binary_entropy(pb1)
        cond = 0.0
        for digits in _output_chunks(out_sizes):
            lik = _likelihood_products(digits, cw[:, others], [channel] * (n - 1))
            p_y_b1 = lik @ (cw[:, i] == 1) / ncw
            p_y = lik.mean(axis=1)
            m = p_y > 0
            with np.errstate(divide="ignore", invalid="ignore"):
                cond_p1 = np.where(m, p_y_b1 / np.where(m, p_y, 1.0), 0.0)
            cond += float((p_y[m] * binary_entropy(cond_p1[m])).sum())
        total += hxi - cond
    return total / n


# ---------------------------------------------------------------------------
# Monte Carlo estimators


def mi_bit_mc(records: ExtrinsicRecords, scope: str = "extrinsic") -> MiEstimate:
    """Soft-bit MI estimate 1 - E[-log2 P(x_true | evidence)], calibrated
    posteriors assumed; exact in expectation for the BEC rank decoder."""
    if len(records) == 0:
        raise DomainError("no records")
    p = records.p_ext if scope == "extrinsic" else records.p_full
    if p is None:
        raise DomainError(f"records carry no {scope} posteriors")
    x = records.x
    nrec = x.size
    balance = abs(x.mean() - 0.5)
    if balance > 3.0 * 0.5 / np.sqrt(nrec) + 1e-12:
        raise DomainError("records are not bit-balanced; estimator assumes H(x)=1")
    p_true = np.where(x == 1, p, 1.0 - p)
    if (p_true <= 0).any():
        raise EvidenceContradictionError("posterior zero at the true bit")
    surprisal = -np.log2(p_true)
    value = 1.0 - surprisal.mean()
    se = surprisal.std(ddof=1) / np.sqrt(nrec) if nrec > 1 else 0.0
    return MiEstimate(float(value), float(se), "mc_soft_bit", trials=nrec)


def mi_bit_binned(records: ExtrinsicRecords, bins: int = 64) -> MiEstimate:
    """Histogram MI between the true bit and the binned extrinsic posterior."""
    if len(records) == 0:
        raise DomainError("no records")
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.searchsorted(edges, records.p_ext, side="right") - 1, 0, bins - 1)
    joint = np.zeros((2, bins))
    for b in (0, 1):
        joint[b] = np.bincount(idx[records.x == b], minlength=bins)
    joint += 1.0  # add-one smoothing
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    pz = joint.sum(axis=0, keepdims=True)
    mi = float((joint * np.log2(joint / (px * pz))).sum())
    return MiEstimate(mi, 0.0, "mc_binned", trials=len(records))


def collect_exact_records(
    codebook: Codebook,
    channel: DiscreteChannel,
    trials: int,
    rng: np.random.Generator,
    param: float = float("nan"),
    chunk: int = 4096,
) -> ExtrinsicRecords:
    """Simulate transmissions and score exact extrinsic and full posteriors.

    Returns one record per (trial, position); vectorized across trials.
    """
    cw = codebook.codewords
    ncw, n = cw.shape
    xs, ys, pe, pf = [], [], [], []
    left = trials
    while left > 0:
        b = min(chunk, left)
        left -= b
        msg = rng.integers(0, ncw, size=b)
        sent = cw[msg]  # (b, n)
        y = sample_sequence(channel, sent, rng)
        t = channel.transition
        p0 = t[y, 0]
        p1 = t[y, 1]
        pmat = np.where(cw[None, :, :] == 1, p1[:, None, :], p0[:, None, :])  # (b, ncw, n)
        neg = pmat <= 0
        with np.errstate(divide="ignore"):
            lmat = np.where(neg, 0.0, np.log(np.where(neg, 1.0, pmat)))
        fsum = lmat.sum(axis=2)
        cnt = neg.sum(axis=2)
        full_ll = np.where(cnt > 0, -np.inf, fsum)
        pfull = _chunk_posteriors(full_ll, cw)
        pext = np.empty((b, n))
        for i in range(n):
            ll = np.where(cnt - neg[:, :, i] > 0, -np.inf, fsum - lmat[:, :, i])
            pext[:, i] = _chunk_posteriors(ll, cw)[:, i]
        xs.append(sent.ravel())
        ys.append(y.ravel())
        pe.append(pext.ravel())
        pf.append(pfull.ravel())
    return ExtrinsicRecords(
        x=np.concatenate(xs),
        y=np.concatenate(ys),
        p_ext=np.concatenate(pe),
        p_full=np.concatenate(pf),
        param=param,
    )


def _chunk_posteriors(loglik: np.ndarray, cw: np.ndarray) -> np.ndarray:
    m = loglik.max(axis=1, keepdims=True)
    if not np.isfinite(m).all():
        raise EvidenceContradictionError("received vector impossible for every codeword")
    w = np.exp(loglik - m)
    return (w @ cw) / w.sum(axis=1, keepdims=True)


def average_ei(
    code: LinearCode,
    family: ChannelFamily,
    param: float,
    *,
    trials: int = 0,
    seed: int = 0,
    method: str = "auto",
    tanner=None,
    bp_iterations: int = 50,
) -> MiEstimate:
    """Average extrinsic information of the code at one channel parameter.

    method 'exact' enumerates; 'bec_rank' Monte-Carlos erasure patterns with
    the exact rank decoder; 'bp' uses belief propagation and is a
    lower-bound estimate on loopy graphs.
    """
    if method == "auto":
        if _exact_ei_feasible(code, family):
            method = "exact"
        elif family.kind == "bec":
            method = "bec_rank"
        elif tanner is not None:
            method = "bp"
        else:
            raise UnsupportedError("no applicable extrinsic decoder for this code size")
    if method == "exact":
        channel = transition_matrix(family, param)
        value = exact_average_ei(enumerate_codebook(code), channel)
        return MiEstimate(value, 0.0, "exact", decoder="enumeration")
    if trials < 1:
        raise DomainError("Monte Carlo estimation needs trials >= 1")
    rng = np.random.default_rng([seed, 0xE1])
    if method == "bec_rank":
        if family.kind != "bec":
            raise UnsupportedError("rank decoder applies to the BEC only")
        eps = family.validate_param(param)
        per_trial = np.empty(trials)
        for t in range(trials):
            erased = rng.random(code.n) < eps
            per_trial[t] = bec_extrinsic_determined_all(code, erased).mean()
        se = per_trial.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
        return MiEstimate(float(per_trial.mean()), float(se), "mc_soft_bit", trials, "bec_rank")
    if method == "bp":
        if tanner is None:
            raise UnsupportedError("bp estimation needs the Tanner graph")
        channel = transition_matrix(family, param)
        per_trial = np.empty(trials)
        for t in range(trials):
            msg = rng.integers(0, 2, size=code.k)
            sent = (msg @ code.generator) % 2
            y = sample_sequence(channel, sent, rng)
            ext = bp_decode(tanner, intrinsic_llrs(channel, y), bp_iterations)
            p = posterior_from_llr(ext)
            p_true = np.where(sent == 1, p, 1.0 - p)
            per_trial[t] = 1.0 - (-np.log2(np.maximum(p_true, 1e-300))).mean()
        se = per_trial.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
        return MiEstimate(float(per_trial.mean()), float(se), "mc_soft_bit", trials, "bp")
    raise UnsupportedError(f"unknown method {method!r}")


def _exact_ei_feasible(code: LinearCode, family: ChannelFamily) -> bool:
    if code.k > 16:
        return False
    out = {"bec": 3, "bsc": 2}.get(family.kind)
    if out is None:
        out = family.quantizer.noutputs if family.quantizer else None
    if out is None:
        return False
    work = code.n * (2**code.k) * out ** (code.n - 1)
    return work <= ENUM_GUARD_WORK


# ---------------------------------------------------------------------------
# MMSE and the I-MMSE identity


def mmse_bits(records: ExtrinsicRecords, scope: str = "full") -> float:
    """Sample mean of (x - P(x=1|evidence))^2."""
    if len(records) == 0:
        raise DomainError("no records")
    p = {"full": records.p_full, "extrinsic": records.p_ext}.get(scope)
    if p is None:
        raise DomainError(f"records carry no {scope} posteriors")
    return float(((records.x - p) ** 2).mean())


def mmse_exact(codebook: Codebook, channel: DiscreteChannel) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-bit MMSE for the full-y and the intrinsic-only estimators."""
    cw = codebook.codewords
    ncw, n = cw.shape
    out_sizes = [channel.output_size] * n
    _guard_enumeration(out_sizes, ncw)
    full = np.zeros(n)
    for digits in _output_chunks(out_sizes):
        lik = _likelihood_products(digits, cw, [channel] * n)
        py = lik.mean(axis=1)
        m = py > 0
        p1 = (lik @ cw) / ncw
        with np.errstate(invalid="ignore", divide="ignore"):
            bhat = np.where(m[:, None], p1 / py[:, None], 0.0)
        full += (py[:, None] * bhat * (1 - bhat)).sum(axis=0)
    marg = symbol_marginals(codebook)
    t = channel.transition
    intr = np.zeros(n)
    for i in range(n):
        pyi = (1 - marg[i]) * t[:, 0] + marg[i] * t[:, 1]
        mm = pyi > 0
        a = np.where(mm, marg[i] * t[:, 1] / np.where(mm, pyi, 1.0), 0.0)
        intr[i] = float((pyi * a * (1 - a)).sum())
    return full, intr


def immse_residual(
    code: LinearCode,
    s: float,
    delta: float,
    npts: int = 25,
) -> tuple[float, float]:
    """Residuals of the I-MMSE identity on the continuous BI-AWGN channel.

    residual_joint  = | FD_delta[ 0.5 (1/n) I(x;y(s)) ] - (1/n) sum_i MMSE(x_i|y) |
    residual_marginal = same with single-symbol quantities.
    Mutual informations are in nats (the identity's natural units); the
    finite difference is central, or forward when s < delta.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    cbook = enumerate_codebook(code)
    n = code.n

    def joint_mi(sv):
        return biawgn.coded_joint_functionals(cbook, sv, npts=npts)[0] / n

    _, mmse_vec = biawgn.coded_joint_functionals(cbook, s, npts=npts, want_mmse=True)
    fd_joint = _fd(joint_mi, s, delta)
    residual_joint = abs(0.5 * fd_joint - mmse_vec.mean())

    fd_marg = _fd(biawgn.mi_uncoded_nats, s, delta)
    residual_marginal = abs(0.5 * fd_marg - biawgn.mmse_uncoded(s))
    return float(residual_joint), float(residual_marginal)


def _fd(f, x: float, delta: float) -> float:
    if x - delta >= 0:
        return (f(x + delta) - f(x - delta)) / (2 * delta)
    return (f(x + delta) - f(x)) / delta


def mmse_orthogonality_residual_exact(codebook: Codebook, channel: DiscreteChannel) -> float:
    """| E[(x-A)^2] - E[(x-B)^2] - E[(A-B)^2] | by exact enumeration,
    A = intrinsic posterior, B = full posterior, averaged over positions."""
    cw = codebook.codewords
    ncw, n = cw.shape
    out_sizes = [channel.output_size] * n
    _guard_enumeration(out_sizes, ncw)
    marg = symbol_marginals(codebook)
    t = channel.transition
    acc = 0.0
    for digits in _output_chunks(out_sizes):
        lik = _likelihood_products(digits, cw, [channel] * n)
        py = lik.mean(axis=1)
        m = py > 0
        p1 = (lik @ cw) / ncw
        with np.errstate(invalid="ignore", divide="ignore"):
            bfull = np.where(m[:, None], p1 / np.where(m, py, 1.0)[:, None], 0.0)
        for i in range(n):
            pyi = (1 - marg[i]) * t[:, 0] + marg[i] * t[:, 1]
            with np.errstate(invalid="ignore", divide="ignore"):
                ai = np.where(pyi > 0, marg[i] * t[:, 1] / np.where(pyi > 0, pyi, 1.0), 0.0)
            a = ai[digits[:, i]]
            b = bfull[:, i]
            # E[(x-A)^2 - (x-B)^2 - (A-B)^2 | y] with P(x=1|y) = b
            term = b * (1 - a) ** 2 + (1 - b) * a**2
            term -= b * (1 - b) ** 2 + (1 - b) * b**2
            term -= (a - b) ** 2
            acc += float((py[m] * term[m]).sum())
    return abs(acc / n)


def mmse_orthogonality_residual_mc(records: ExtrinsicRecords, channel: DiscreteChannel) -> tuple[float, float]:
    """Monte Carlo version; returns (|mean|, standard error) of the
    per-record orthogonality combination."""
    if records.p_full is None:
        raise DomainError("records lack full-scope posteriors")
    a = intrinsic_posteriors(channel, records.y)
    b = records.p_full
    x = records.x.astype(float)
    g = (x - a) ** 2 - (x - b) ** 2 - (a - b) ** 2
    se = g.std(ddof=1) / np.sqrt(g.size) if g.size > 1 else 0.0
    return float(abs(g.mean())), float(se)


# ---------------------------------------------------------------------------
# GEXIT


def conditional_entropy_exact(codebook: Codebook, channels) -> float:
    """H(x|y) in bits for per-position channels."""
    return joint_entropies_exact(codebook, channels)["H_x_given_y"]


def gexit_numeric(
    codebook: Codebook,
    family: ChannelFamily,
    w: float,
    delta: float,
    per_symbol: bool = False,
):
    """(1/n) dH(x|y)/dw by central finite differences (bits per unit).

    With per_symbol=True, returns the vector of per-position derivatives
    where only position i's channel parameter moves.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    n = codebook.codewords.shape[1]
    base = transition_matrix(family, w)
    if not per_symbol:
        hp = conditional_entropy_exact(codebook, [transition_matrix(family, w + delta)] * n)
        hm = conditional_entropy_exact(codebook, [transition_matrix(family, w - delta)] * n)
        return GexitPoint(w, (hp - hm) / (2 * delta) / n, delta)
    chp = transition_matrix(family, w + delta)
    chm = transition_matrix(family, w - delta)
    out = np.empty(n)
    for i in range(n):
        chans = [base] * n
        chans[i] = chp
        hp = conditional_entropy_exact(codebook, chans)
        chans[i] = chm
        hm = conditional_entropy_exact(codebook, chans)
        out[i] = (hp - hm) / (2 * delta)
    return out


def gexit0_numeric(codebook: Codebook, family: ChannelFamily, w: float, delta: float) -> float:
    """GEXIT of the independent-symbol input with the code's marginals."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    marg = symbol_marginals(codebook)

    def h0(wv):
        t = transition_matrix(family, wv).transition
        tot = 0.0
        for m in marg:
            pyi = (1 - m) * t[:, 0] + m * t[:, 1]
            mm = pyi > 0
            a = np.where(mm, m * t[:, 1] / np.where(mm, pyi, 1.0), 0.0)
            tot += float((pyi[mm] * binary_entropy(a[mm])).sum())
        return tot

    n = marg.size
    return (h0(w + delta) - h0(w - delta)) / (2 * delta) / n


def _extrinsic_joint_tables(codebook: Codebook, base: DiscreteChannel, i: int):
    """Exact distributions of (x_i, z_i) where z_i = P(x_i=1 | y'_i).

    Returns (z values, P(z, x_i=0), P(z, x_i=1)); y'_i enumerated under the
    base channel.
    """
    cw = codebook.codewords
    ncw, n = cw.shape
    others = [j for j in range(n) if j != i]
    out_sizes = [base.output_size] * (n - 1)
    _guard_enumeration(out_sizes, ncw)
    table = {}
    for digits in _output_chunks(out_sizes):
        lik = _likelihood_products(digits, cw[:, others], [base] * (n - 1))
        pj1 = lik @ (cw[:, i] == 1) / ncw  # P(y', x_i = 1)
        pj0 = lik @ (cw[:, i] == 0) / ncw
        tot = pj0 + pj1
        m = tot > 0
        z = np.where(m, pj1 / np.where(m, tot, 1.0), 0.5)
        zr = np.round(z, Z_ROUND_DECIMALS)
        for zv, p0, p1 in zip(zr[m], pj0[m], pj1[m]):
            e = table.setdefault(float(zv), [0.0, 0.0])
            e[0] += p0
            e[1] += p1
    zs = np.array(sorted(table))
    p0 = np.array([table[z][0] for z in zs])
    p1 = np.array([table[z][1] for z in zs])
    return zs, p0, p1


def mi_z_y_exact(codebook: Codebook, base: DiscreteChannel, chan_i: DiscreteChannel, i: int) -> float:
    """I(z_i ; y_i) in bits; position i's own channel may differ from base."""
    _, p0, p1 = _extrinsic_joint_tables(codebook, base, i)
    t = chan_i.transition
    joint = p0[:, None] * t[None, :, 0] + p1[:, None] * t[None, :, 1]
    pz = joint.sum(axis=1)
    py = joint.sum(axis=0)
    m = joint > 0
    mi = float(
        (joint[m] * (np.log2(joint[m]) - np.log2((pz[:, None] * py[None, :])[m]))).sum()
    )
    return mi


def cond_entropy_xi_given_zy(codebook: Codebook, base: DiscreteChannel, chan_i: DiscreteChannel, i: int) -> float:
    """H(x_i | z_i, y_i) in bits."""
    _, p0, p1 = _extrinsic_joint_tables(codebook, base, i)
    t = chan_i.transition
    j0 = p0[:, None] * t[None, :, 0]
    j1 = p1[:, None] * t[None, :, 1]
    tot = j0 + j1
    m = tot > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(m, j1 / np.where(m, tot, 1.0), 0.0)
    return float((tot[m] * binary_entropy(cond[m])).sum())


def dg_gap(codebook: Codebook, family: ChannelFamily, w: float, delta: float) -> dict:
    """GEXIT0 - GEXIT and the per-symbol identity routes at one parameter.

    Returns per-symbol arrays for both sides of the derivative identity
    (left: GEXIT0_i - GEXIT_i; right: -d/dw_i I(z_i; y_i)), the per-symbol
    GEXIT recomputed through H(x_i | z_i, y_i), and the averages.
    """
    n = codebook.codewords.shape[1]
    base = transition_matrix(family, w)
    chp = transition_matrix(family, w + delta)
    chm = transition_matrix(family, w - delta)
    gexit_i = gexit_numeric(codebook, family, w, delta, per_symbol=True)
    marg = symbol_marginals(codebook)
    t = {"+": chp.transition, "-": chm.transition}
    gexit0_i = np.empty(n)
    for i in range(n):
        vals = {}
        for key, tt in t.items():
            pyi = (1 - marg[i]) * tt[:, 0] + marg[i] * tt[:, 1]
            mm = pyi > 0
            a = np.where(mm, marg[i] * tt[:, 1] / np.where(mm, pyi, 1.0), 0.0)
            vals[key] = float((pyi[mm] * binary_entropy(a[mm])).sum())
        gexit0_i[i] = (vals["+"] - vals["-"]) / (2 * delta)
    lhs = gexit0_i - gexit_i
    rhs = np.empty(n)
    gexit_i_via_zy = np.empty(n)
    for i in range(n):
        mip = mi_z_y_exact(codebook, base, chp, i)
        mim = mi_z_y_exact(codebook, base, chm, i)
        rhs[i] = -(mip - mim) / (2 * delta)
        hp = cond_entropy_xi_given_zy(codebook, base, chp, i)
        hm = cond_entropy_xi_given_zy(codebook, base, chm, i)
        gexit_i_via_zy[i] = (hp - hm) / (2 * delta)
    return {
        "param": w,
        "delta": delta,
        "gexit_i": gexit_i,
        "gexit0_i": gexit0_i,
        "gexit_i_via_zy": gexit_i_via_zy,
        "gexit": float(gexit_i.mean()),
        "gexit0": float(gexit0_i.mean()),
        "dg": float((gexit0_i - gexit_i).mean()),
        "eq13_lhs": lhs,
        "eq13_rhs": rhs,
    }


# ---------------------------------------------------------------------------
# extrinsic KL


def extrinsic_kl_exact(codebook: Codebook, channel: DiscreteChannel, i: int) -> dict:
    """Exact KL divergences D[p(z_i|y_i=l) || p(z_i|y_i=k)] for symbol pairs.

    Uses z ⟂ y_i given x_i: p(z|y) mixes the per-input z distributions
    with the intrinsic posterior weights.  Returns {(l, k): bits}.
    """
    zs, p0, p1 = _extrinsic_joint_tables(codebook, channel, i)
    t = channel.transition
    pb0, pb1 = p0.sum(), p1.sum()
    z_given_x = np.stack([p0 / pb0 if pb0 > 0 else p0, p1 / pb1 if pb1 > 0 else p1])
    py = pb0 * t[:, 0] + pb1 * t[:, 1]
    out = {}
    conds = {}
    for y in range(channel.output_size):
        if py[y] <= 0:
            continue
        w1 = pb1 * t[y, 1] / py[y]
        conds[y] = (1 - w1) * z_given_x[0] + w1 * z_given_x[1]
    for yl in conds:
        for yk in conds:
            if yl == yk:
                continue
            p, q = conds[yl], conds[yk]
            mask = p > 0
            if (q[mask] <= 0).any():
                out[(yl, yk)] = float("inf")
            else:
                out[(yl, yk)] = float(
                    (p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))).sum()
                )
    return out


def kl_extrinsic(
    records: ExtrinsicRecords,
    y_l: int,
    y_k: int,
    bins: int = 32,
    min_count: int = 100,
) -> float:
    """Histogram KL between extrinsic-posterior distributions conditioned on
    two intrinsic output symbols, with add-one smoothing (bits)."""
    sel_l = records.y == y_l
    sel_k = records.y == y_k
    if sel_l.sum() < min_count or sel_k.sum() < min_count:
        raise InsufficientDataError(
            f"need at least {min_count} records for each conditioning symbol"
        )
    edges = np.linspace(0.0, 1.0, bins + 1)

    def hist(p):
        idx = np.clip(np.searchsorted(edges, p, side="right") - 1, 0, bins - 1)
        h = np.bincount(idx, minlength=bins).astype(float) + 1.0
        return h / h.sum()

    return float(kl_divergence(hist(records.p_ext[sel_l]), hist(records.p_ext[sel_k])))


# ---------------------------------------------------------------------------
# posterior combining (two independent observations of one bit)


def combine_posteriors(a, b, prior):
    """Fuse two conditionally independent posteriors of a binary symbol.

    a and b are P(x=1 | first evidence) and P(x=1 | second evidence); the
    result is P(x=1 | both).  Contradictory certainties raise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    prior = np.asarray(prior, dtype=float)
    if ((prior <= 0) | (prior >= 1)).any():
        raise DomainError("prior must lie strictly inside (0, 1)")
    if ((a < 0) | (a > 1) | (b < 0) | (b > 1)).any():
        raise DomainError("posteriors must lie in [0, 1]")
    num = a * b * (1 - prior)
    den = num + (1 - a) * (1 - b) * prior
    if (den == 0).any():
        raise EvidenceContradictionError("contradictory certain posteriors")
    out = num / den
    return float(out) if out.ndim == 0 else out


def posterior_shift_sq(a, b, prior):
    """Squared shift (F - b)^2 of the intrinsic posterior when the extrinsic
    one is fused in, evaluated in product form."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    prior = np.asarray(prior, dtype=float)
    if ((prior <= 0) | (prior >= 1)).any():
        raise DomainError("prior must lie strictly inside (0, 1)")
    kk = (1 - prior) / prior
    den = (1 + kk) * a * b + 1 - a - b
    factor = np.where(den != 0, (1 + kk) / np.where(den != 0, den, 1.0), np.inf)
    out = (a - prior) ** 2 * factor**2 * (b * (1 - b)) ** 2
    return float(out) if out.ndim == 0 else out


def shift_lower_bound_constant(
    b_lo: float = 0.1,
    b_hi: float = 0.9,
    prior_lo: float = 0.4,
    prior_hi: float = 0.6,
    step: float = 0.01,
) -> float:
    """Certified c3 > 0 with (F-b)^2 >= c3 (a - prior)^2 on the given box.

    The non-(a-prior)^2 factor is monotone in a through a linear
    denominator, so its minimum over a is attained at a in {0, 1}; the
    constant is the minimum of that bound over a (b, prior) grid.
    """
    bs = np.arange(b_lo, b_hi + step / 2, step)
    ps = np.arange(prior_lo, prior_hi + step / 2, step)
    c3 = np.inf
    for p in ps:
        kk = (1 - p) / p
        den_max = np.maximum(kk * bs, 1 - bs)  # endpoints a=1, a=0
        h = ((1 + kk) * bs * (1 - bs) / den_max) ** 2
        c3 = min(c3, float(h.min()))
    if c3 <= 0:
        raise InvariantViolation("lower-bound constant must be positive")
    return c3


# ---------------------------------------------------------------------------
# information combining


def info_combining(i1: float, i2: float) -> tuple[float, float]:
    """Bounds on I(x; two independent observations with marginal MIs i1, i2).

    Lower bound replaces both observations by BSCs of matching MI; upper
    bound replaces them by erasure channels: i1 + i2 - i1*i2.
    """
    for v in (i1, i2):
        if not 0 <= v <= 1:
            raise DomainError("per-observation MI must lie in [0, 1]")
    p1 = binary_entropy_inv(1 - i1)
    p2 = binary_entropy_inv(1 - i2)
    joint = 0.0
    hy = 0.0
    probs = []
    for e1 in (0, 1):
        for e2 in (0, 1):
            w = (p1 if e1 else 1 - p1) * (p2 if e2 else 1 - p2)
            wf = (p1 if not e1 else 1 - p1) * (p2 if not e2 else 1 - p2)
            probs.append(0.5 * (w + wf))
    hy = entropy(np.array(probs))
    hyx = binary_entropy(p1) + binary_entropy(p2)
    lower = hy - hyx
    upper = i1 + i2 - i1 * i2
    return float(lower), float(upper)


def combined_mi_bsc_gauss(p: float, s: float, family: ChannelFamily | None = None) -> dict:
    """Exact MI of a bit observed through both a BSC(p) and a quantized
    Gaussian channel at SNR s; reports the combining surplus ratio alpha.
    """
    if not 0 <= p <= 0.5:
        raise DomainError("BSC crossover must lie in [0, 1/2]")
    from .channels import qbiawgn_family

    fam = family if family is not None else qbiawgn_family()
    chan = transition_matrix(fam, s)
    t = chan.transition
    nout = chan.output_size
    # joint outcome (b, y); x uniform
    joint_given = np.empty((2, 2 * nout))
    for x in (0, 1):
        flip = p if x == 1 else 1 - p  # P(b=0|x)
        pb = np.array([flip, 1 - flip])
        joint_given[x] = np.outer(pb, t[:, x]).ravel()
    pj = 0.5 * (joint_given[0] + joint_given[1])
    i_joint = entropy(pj) - 0.5 * (entropy(joint_given[0]) + entropy(joint_given[1]))
    i_y = uniform_input_mi(chan)
    i_b = 1.0 - float(binary_entropy(p))
    alpha = (i_joint - i_y) / i_b if i_b > 0 else float("nan")
    return {"i_joint": float(i_joint), "i_y": i_y, "i_b": i_b, "alpha": float(alpha)}


# ---------------------------------------------------------------------------
# independent-vs-coded MI gap


def di_gap(codebook: Codebook, channel: DiscreteChannel, param: float = float("nan")) -> MiGap:
    """Per-symbol gap between independent-symbol MI and the coded joint MI."""
    marg = symbol_marginals(codebook)
    t = channel.transition
    n = marg.size
    i_ind = 0.0
    for m in marg:
        pyi = (1 - m) * t[:, 0] + m * t[:, 1]
        mm = pyi > 0
        hy = float(-(pyi[mm] * np.log2(pyi[mm])).sum())
        hyx = 0.0
        for b, pb in ((0, 1 - m), (1, m)):
            col = t[:, b]
            cm = col > 0
            hyx += pb * float(-(col[cm] * np.log2(col[cm])).sum())
        i_ind += hy - hyx
    i_ind /= n
    i_coded = mi_exact_joint(codebook, channel)
    return MiGap(param, float(i_ind), float(i_coded)).check()
