"""One-parameter memoryless channel families.

Supported families: binary erasure (BEC), binary symmetric (BSC), the
quantized binary-input AWGN channel (QBIAWGN, output bins over the real
line) and a quantized QPSK-AWGN channel (output cells over the complex
plane).  Each family exposes its transition matrix, capacity, degrading
increments between parameter values and, where defined, the transition
rate matrix of its noisiness reparameterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, DomainError, EvidenceContradictionError, UnsupportedError

COLUMN_SUM_TOL = 1e-12
RANK_PIVOT_TOL = 1e-10

BEC_ERASURE = 2  # output index of the erasure symbol

QPSK_INPUTS = np.array([1 + 0j, 0 + 1j, -1 + 0j, 0 - 1j])


def _gauss_mass(lo: float, hi: float, mu: float) -> float:
    """Gaussian N(mu,1) measure of [lo, hi], canonicalized so that mirror
    intervals produce bit-identical floats (reflection symmetry is exact)."""
    if mu < 0.0 or (mu == 0.0 and lo + hi < 0.0):
        return _gauss_mass(-hi, -lo, -mu)
    return float(ndtr(hi - mu) - ndtr(lo - mu))


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform bins on [-span, span] plus two unbounded tail bins."""

    nbins: int = 64
    span: float = 6.0

    def __post_init__(self):
        if self.nbins < 2:
            raise ConfigError("quantizer needs at least 2 interior bins")
        if self.span <= 0:
            raise ConfigError("quantizer span must be positive")

    def edges(self) -> np.ndarray:
        inner = np.linspace(-self.span, self.span, self.nbins + 1)
        inner = 0.5 * (inner - inner[::-1])  # exactly antisymmetric
        return np.concatenate(([-np.inf], inner, [np.inf]))

    @property
    def noutputs(self) -> int:
        return self.nbins + 2


@dataclass(frozen=True)
class QpskQuantizerSpec:
    """ncells x ncells square cells on [-span, span]^2, outer cells unbounded.

    ncells must be odd so the axes and both diagonals are cell-symmetry
    axes of the grid; the sign-pattern equalities of the transparency
    check then hold exactly.
    """

    ncells: int = 9
    span: float = 3.0

    def __post_init__(self):
        if self.ncells < 3 or self.ncells % 2 == 0:
            raise ConfigError("ncells must be odd and >= 3")
        if self.span <= 0:
            raise ConfigError("quantizer span must be positive")

    def edges(self) -> np.ndarray:
        inner = np.linspace(-self.span, self.span, self.ncells + 1)
        inner = 0.5 * (inner - inner[::-1])
        e = np.concatenate(([-np.inf], inner[1:-1], [np.inf]))
        return e

    @property
    def noutputs(self) -> int:
        return self.ncells * self.ncells

    def cell_index(self, re: float, im: float) -> int:
        e = self.edges()
        i = int(np.searchsorted(e, re, side="right")) - 1
        j = int(np.searchsorted(e, im, side="right")) - 1
        return i * self.ncells + j


@dataclass
class DiscreteChannel:
    """Discrete memoryless channel; transition[y, x] = P(y | x)."""

    transition: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        if t.ndim != 2:
            raise ConfigError("transition must be a 2-d matrix")
        if (t < -COLUMN_SUM_TOL).any() or (t > 1 + COLUMN_SUM_TOL).any():
            raise ConfigError("transition entries must lie in [0, 1]")
        colsums = t.sum(axis=0)
        if not np.allclose(colsums, 1.0, atol=COLUMN_SUM_TOL, rtol=0):
            raise ConfigError(f"columns must sum to 1, got {colsums}")
        self.transition = t
        self._cumulative = None

    @property
    def input_size(self) -> int:
        return self.transition.shape[1]

    @property
    def output_size(self) -> int:
        return self.transition.shape[0]

    def output_marginal(self, input_dist=None) -> np.ndarray:
        if input_dist is None:
            return self.transition.mean(axis=1)
        return self.transition @ np.asarray(input_dist, dtype=float)

    def compose(self, inner: "DiscreteChannel") -> "DiscreteChannel":
        """Channel applying inner first, then self to inner's output."""
        if self.input_size != inner.output_size:
            raise DomainError("composition size mismatch")
        return DiscreteChannel(self.transition @ inner.transition)

    def likelihood_columns(self, y: int) -> np.ndarray:
        return self.transition[y, :]


def uniform_input_mi(channel: DiscreteChannel) -> float:
    """I(x;y) in bits under the uniform input distribution."""
    t = channel.transition
    m = channel.input_size
    py = t.mean(axis=1)
    hy = -np.sum(np.where(py > 0, py * np.log2(np.where(py > 0, py, 1.0)), 0.0))
    hyx = 0.0
    for x in range(m):
        col = t[:, x]
        hyx += -np.sum(np.where(col > 0, col * np.log2(np.where(col > 0, col, 1.0)), 0.0)) / m
    return float(hy - hyx)


@dataclass(frozen=True)
class ChannelFamily:
    """A one-parameter family of channels along a quality or noisiness axis."""

    kind: str  # 'bec' | 'bsc' | 'qbiawgn' | 'qpsk_awgn'
    orientation: str  # 'noisiness_increasing' | 'quality_increasing'
    quantizer: QuantizerSpec | QpskQuantizerSpec | None = None

    def param_range(self) -> tuple[float, float]:
        return {
            "bec": (0.0, 1.0),
            "bsc": (0.0, 0.5),
            "qbiawgn": (0.0, np.inf),
            "qpsk_awgn": (0.0, np.inf),
        }[self.kind]

    def validate_param(self, param: float) -> float:
        lo, hi = self.param_range()
        if not (lo <= param <= hi) or not np.isfinite(param):
            raise DomainError(f"{self.kind} parameter {param} outside [{lo}, {hi}]")
        return float(param)

    def noisier(self, a: float, b: float) -> bool:
        """True if parameter a is strictly noisier than b."""
        if self.orientation == "noisiness_increasing":
            return a > b
        return a < b

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "orientation": self.orientation}
        if isinstance(self.quantizer, QuantizerSpec):
            cfg["quantizer"] = {"nbins": self.quantizer.nbins, "span": self.quantizer.span}
        elif isinstance(self.quantizer, QpskQuantizerSpec):
            cfg["quantizer"] = {"ncells": self.quantizer.ncells, "span": self.quantizer.span}
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "ChannelFamily":
        kind = cfg["kind"]
        quant = cfg.get("quantizer")
        if kind == "qbiawgn":
            q = QuantizerSpec(**quant) if quant else QuantizerSpec()
        elif kind == "qpsk_awgn":
            q = QpskQuantizerSpec(**quant) if quant else QpskQuantizerSpec()
        else:
            q = None
        return ChannelFamily(kind=kind, orientation=cfg["orientation"], quantizer=q)


def bec_family() -> ChannelFamily:
    return ChannelFamily("bec", "noisiness_increasing")


def bsc_family() -> ChannelFamily:
    return ChannelFamily("bsc", "noisiness_increasing")


def qbiawgn_family(nbins: int = 64, span: float = 6.0) -> ChannelFamily:
    return ChannelFamily("qbiawgn", "quality_increasing", QuantizerSpec(nbins, span))


def qpsk_awgn_family(ncells: int = 9, span: float = 3.0) -> ChannelFamily:
    return ChannelFamily("qpsk_awgn", "quality_increasing", QpskQuantizerSpec(ncells, span))


def transition_matrix(family: ChannelFamily, param: float) -> DiscreteChannel:
    """Exact transition matrix of the family member at the given parameter."""
    p = family.validate_param(param)
    if family.kind == "bec":
        t = np.array([[1 - p, 0.0], [0.0, 1 - p], [p, p]])
        return DiscreteChannel(t)
    if family.kind == "bsc":
        t = np.array([[1 - p, p], [p, 1 - p]])
        return DiscreteChannel(t)
    if family.kind == "qbiawgn":
        spec = family.quantizer
        edges = spec.edges()
        mu0 = -np.sqrt(p)
        col0 = np.array(
            [_gauss_mass(edges[i], edges[i + 1], mu0) for i in range(spec.noutputs)]
        )
        col1 = col0[::-1].copy()  # output symmetry exact by construction
        return DiscreteChannel(np.stack([col0, col1], axis=1))
    if family.kind == "qpsk_awgn":
        spec = family.quantizer
        edges = spec.edges()
        nc = spec.ncells
        amp = np.sqrt(p)
        cols = []
        for x in QPSK_INPUTS:
            mu_re, mu_im = amp * x.real, amp * x.imag
            mre = np.array([_gauss_mass(edges[i], edges[i + 1], mu_re) for i in range(nc)])
            mim = np.array([_gauss_mass(edges[i], edges[i + 1], mu_im) for i in range(nc)])
            cols.append(np.outer(mre, mim).ravel())
        return DiscreteChannel(np.stack(cols, axis=1))
    raise UnsupportedError(f"unknown family kind {family.kind!r}")


def _h2(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def capacity(family: ChannelFamily, param: float) -> float:
    """Channel capacity in bits per use (uniform input; all families symmetric)."""
    p = family.validate_param(param)
    if family.kind == "bec":
        return 1.0 - p
    if family.kind == "bsc":
        return 1.0 - _h2(p)
    return uniform_input_mi(transition_matrix(family, p))


def mirror_output(family: ChannelFamily, y: int) -> int:
    """Output index paired with y under the 0<->1 input swap (QBIAWGN)."""
    if family.kind != "qbiawgn":
        raise UnsupportedError("mirror indexing is defined for QBIAWGN only")
    return family.quantizer.noutputs - 1 - y


def degrade(family: ChannelFamily, param_better: float, param_worse: float) -> DiscreteChannel:
    """Incremental channel T with W(worse) = T o W(better).

    param_better must be strictly better (lower noisiness / higher SNR)
    than param_worse.  For BEC/BSC the increment is in closed form; for
    the Gaussian families it is built by scaling plus independent noise
    at the unquantized level, re-quantized from bin midpoints.
    """
    b = family.validate_param(param_better)
    w = family.validate_param(param_worse)
    if not family.noisier(w, b):
        raise DomainError("param_better must be strictly better than param_worse")
    if family.kind == "bsc":
        if b >= 0.5:
            raise DomainError("cannot degrade from a useless BSC")
        q = (w - b) / (1 - 2 * b)
        return DiscreteChannel(np.array([[1 - q, q], [q, 1 - q]]))
    if family.kind == "bec":
        if b >= 1.0:
            raise DomainError("cannot degrade from a fully erased BEC")
        q = (w - b) / (1 - b)
        t = np.array([[1 - q, 0, 0], [0, 1 - q, 0], [q, q, 1.0]])
        return DiscreteChannel(t)
    if family.kind == "qbiawgn":
        return _degrade_quantized_gauss(family.quantizer, b, w)
    if family.kind == "qpsk_awgn":
        return _degrade_quantized_qpsk(family.quantizer, b, w)
    raise UnsupportedError(f"unknown family kind {family.kind!r}")


def _bin_midpoints(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges[np.isfinite(edges)])
    step = widths[0] if widths.size else 1.0
    if np.isinf(edges[0]):
        mids[0] = edges[1] - 0.5 * step
    if np.isinf(edges[-1]):
        mids[-1] = edges[-2] + 0.5 * step
    return mids


def _degrade_quantized_gauss(spec: QuantizerSpec, s_high: float, s_low: float) -> DiscreteChannel:
    if s_high <= 0:
        raise DomainError("cannot degrade from zero SNR")
    a = np.sqrt(s_low / s_high)
    sigma = np.sqrt(1.0 - s_low / s_high)
    edges = spec.edges()
    mids = _bin_midpoints(edges)
    nb = spec.noutputs
    t = np.zeros((nb, nb))
    for j in range(nb):
        mu = a * mids[j]
        if sigma < 1e-12:
            i = int(np.searchsorted(edges, mu, side="right")) - 1
            t[i, j] = 1.0
            continue
        z = (edges - mu) / sigma
        cdf = np.concatenate(([0.0], ndtr(z[1:-1]), [1.0]))
        t[:, j] = np.diff(cdf)
    return DiscreteChannel(t)


def _degrade_quantized_qpsk(spec: QpskQuantizerSpec, s_high: float, s_low: float) -> DiscreteChannel:
    if s_high <= 0:
        raise DomainError("cannot degrade from zero SNR")
    a = np.sqrt(s_low / s_high)
    sigma = np.sqrt(1.0 - s_low / s_high)
    if sigma < 1e-12:
        raise DomainError("degradation step too small for re-quantization")
    edges = spec.edges()
    full = np.concatenate(([-np.inf], np.linspace(-spec.span, spec.span, spec.ncells + 1)[1:-1], [np.inf]))
    mids = _bin_midpoints(full)
    nc = spec.ncells
    t = np.zeros((nc * nc, nc * nc))
    for jr in range(nc):
        for ji in range(nc):
            mu_r, mu_i = a * mids[jr], a * mids[ji]
            cr = np.diff(np.concatenate(([0.0], ndtr((edges[1:-1] - mu_r) / sigma), [1.0])))
            ci = np.diff(np.concatenate(([0.0], ndtr((edges[1:-1] - mu_i) / sigma), [1.0])))
            t[:, jr * nc + ji] = np.outer(cr, ci).ravel()
    return DiscreteChannel(t)


@dataclass
class RateMatrix:
    """Transition rate matrix A of an incremental-noisiness family.

    d/dw P(y_k) = sum_l A[k, l] P(y_l) along the family's canonical
    noisiness coordinate w.  `condition` records whether the family meets
    the strict all-positive-rates requirement or only the relaxed
    connectivity-path condition.
    """

    entries: np.ndarray
    param_of_noisiness: callable
    noisiness_of_param: callable
    condition: str = "relaxed"

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        off = a - np.diag(np.diag(a))
        if (off < 0).any():
            raise ConfigError("off-diagonal rates must be nonnegative")
        if not np.allclose(a.sum(axis=0), 0.0, atol=COLUMN_SUM_TOL, rtol=0):
            raise ConfigError("rate-matrix columns must sum to zero")
        self.entries = a

    def connects_support(self, marginal: np.ndarray, tol: float = 1e-15) -> bool:
        """Do positive rates connect all positive-probability outputs
        (undirected reachability through positive-probability nodes)?"""
        a = self.entries
        n = a.shape[0]
        alive = np.flatnonzero(np.asarray(marginal) > tol)
        if alive.size <= 1:
            return True
        adj = (a > 0) | (a.T > 0)
        seen = {alive[0]}
        stack = [alive[0]]
        aliveset = set(alive.tolist())
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(adj[u]):
                if v in aliveset and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return aliveset <= seen


def rate_matrix(family: ChannelFamily) -> RateMatrix:
    """Canonical rate matrix; BSC uses p(w) = (1-e^{-2w})/2, BEC e(w) = 1-e^{-w}."""
    if family.kind == "bsc":
        a = np.array([[-1.0, 1.0], [1.0, -1.0]])
        return RateMatrix(
            entries=a,
            param_of_noisiness=lambda w: 0.5 * (1.0 - np.exp(-2.0 * w)),
            noisiness_of_param=lambda p: -0.5 * np.log1p(-2.0 * p),
            condition="strict",
        )
    if family.kind == "bec":
        a = np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [1.0, 1.0, 0.0]])
        return RateMatrix(
            entries=a,
            param_of_noisiness=lambda w: -np.expm1(-w),
            noisiness_of_param=lambda e: -np.log1p(-e),
            condition="relaxed",
        )
    raise UnsupportedError(f"no finite-alphabet rate matrix for {family.kind}")


def sufficient_transparency(channel: DiscreteChannel, tol: float = RANK_PIVOT_TOL):
    """Witness set of M outputs with linearly independent likelihood vectors.

    Only outputs with positive probability under the uniform input are
    eligible.  Returns a list of output indices of size input_size, or
    None when no such set exists.  Independence is decided greedily with
    pivot tolerance tol.
    """
    t = channel.transition
    m = channel.input_size
    marg = channel.output_marginal()
    basis = []
    witness = []
    for y in np.argsort(-marg):
        if marg[y] <= 0:
            continue
        v = t[y, :].astype(float)
        r = v.copy()
        for b in basis:
            r -= (r @ b) * b
        norm = np.linalg.norm(r)
        if norm > tol * max(1.0, np.linalg.norm(v)):
            basis.append(r / norm)
            witness.append(int(y))
            if len(witness) == m:
                return sorted(witness)
    return None


def qpsk_reference_outputs(family: ChannelFamily) -> list[int]:
    """Cell indices of the four reference points 0, 1, j, (-1+j)/sqrt(2)."""
    if family.kind != "qpsk_awgn":
        raise UnsupportedError("reference outputs are defined for QPSK only")
    spec = family.quantizer
    pts = [0 + 0j, 1 + 0j, 0 + 1j, (-1 + 1j) / np.sqrt(2)]
    return [spec.cell_index(z.real, z.imag) for z in pts]


def sample(channel: DiscreteChannel, x: int, rng: np.random.Generator) -> int:
    """Draw one output symbol for input x."""
    if not (0 <= x < channel.input_size):
        raise DomainError(f"input symbol {x} out of range")
    if channel._cumulative is None:
        channel._cumulative = np.cumsum(channel.transition, axis=0)
    u = rng.random()
    return int(np.searchsorted(channel._cumulative[:, x], u, side="right"))


def sample_sequence(channel: DiscreteChannel, xs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one output per input symbol in xs (vectorized)."""
    xs = np.asarray(xs)
    if xs.size and (xs.min() < 0 or xs.max() >= channel.input_size):
        raise DomainError("input symbol out of range")
    if channel._cumulative is None:
        channel._cumulative = np.cumsum(channel.transition, axis=0)
    cum = channel._cumulative
    u = rng.random(xs.shape)
    out = np.empty(xs.shape, dtype=np.int64)
    for x in np.unique(xs):
        m = xs == x
        out[m] = np.searchsorted(cum[:, x], u[m], side="right")
    return out


def intrinsic_posterior(channel: DiscreteChannel, y: int) -> float:
    """P(x=1 | y) for a binary-input channel under the uniform prior."""
    if channel.input_size != 2:
        raise UnsupportedError("intrinsic posterior defined for binary-input channels")
    if not (0 <= y < channel.output_size):
        raise DomainError(f"output symbol {y} out of range")
    p0, p1 = channel.transition[y, 0], channel.transition[y, 1]
    if p0 + p1 <= 0:
        raise EvidenceContradictionError(f"output {y} impossible under both inputs")
    return float(p1 / (p0 + p1))
