"""Binary linear codes: small named codes, seeded random codes, regular LDPC."""

from __future__ import annotations

import numpy as np

from . import gf2
from .errors import ConfigError, DomainError, EnumerationLimitError

MAX_ENUMERABLE_K = 20
_RETRY_LIMIT = 1000


class LinearCode:
    """Binary linear code given by a full-row-rank k x n generator matrix."""

    def __init__(self, generator: np.ndarray, parity: np.ndarray | None = None, name: str = ""):
        g = (np.asarray(generator) & 1).astype(np.uint8)
        if g.ndim != 2:
            raise ConfigError("generator must be a 2-d bit matrix")
        k, n = g.shape
        if not (0 < k <= n):
            raise ConfigError(f"need 0 < k <= n, got k={k}, n={n}")
        if gf2.rank(g) != k:
            raise ConfigError("generator must have full row rank over GF(2)")
        if parity is not None:
            parity = (np.asarray(parity) & 1).astype(np.uint8)
            if parity.shape[1] != n:
                raise ConfigError("parity matrix width must equal n")
            if ((g @ parity.T) % 2).any():
                raise ConfigError("generator and parity matrices are not orthogonal")
        self.generator = g
        self.parity = parity
        self.name = name or f"linear[{n},{k}]"
        self._packed = None
        self._packed_dual = None

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    def dual_parity(self) -> np.ndarray:
        """(n-k) x n matrix whose rows span the dual code."""
        if self.parity is not None and self.parity.shape[0] == self.n - self.k:
            if gf2.rank(self.parity) == self.n - self.k:
                return self.parity
        return gf2.nullspace(self.generator)

    def packed_generator(self) -> np.ndarray:
        if self._packed is None:
            self._packed = gf2.pack_rows(self.generator)
        return self._packed

    def packed_dual(self) -> np.ndarray:
        if self._packed_dual is None:
            h = self.dual_parity()
            nwords = (self.n + 63) // 64
            self._packed_dual = (
                gf2.pack_rows(h) if h.shape[0] else np.zeros((0, nwords), dtype=np.uint64)
            )
        return self._packed_dual

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "k": self.k,
            "generator": [_row_to_hex(r) for r in self.generator],
            "name": self.name,
        }
        if self.parity is not None:
            d["parity"] = [_row_to_hex(r) for r in self.parity]
        return d

    @staticmethod
    def from_dict(d: dict) -> "LinearCode":
        n = d["n"]
        gen = np.array([_hex_to_row(h, n) for h in d["generator"]], dtype=np.uint8)
        par = None
        if "parity" in d:
            par = np.array([_hex_to_row(h, n) for h in d["parity"]], dtype=np.uint8)
        return LinearCode(gen, par, name=d.get("name", ""))

    def __repr__(self):
        return f"LinearCode(n={self.n}, k={self.k}, name={self.name!r})"


def _row_to_hex(row: np.ndarray) -> str:
    val = 0
    for j, b in enumerate(row):
        if b:
            val |= 1 << j
    width = (len(row) + 3) // 4
    return f"{val:0{width}x}"


def _hex_to_row(h: str, n: int) -> np.ndarray:
    val = int(h, 16)
    return np.array([(val >> j) & 1 for j in range(n)], dtype=np.uint8)


class Codebook:
    """All 2^k codewords of a small code, indexed by message integer."""

    def __init__(self, code: LinearCode, codewords: np.ndarray):
        self.code = code
        self.codewords = codewords

    def __len__(self):
        return self.codewords.shape[0]


class TannerGraph:
    """Bipartite variable/check adjacency of a parity matrix."""

    def __init__(self, parity: np.ndarray):
        h = (np.asarray(parity) & 1).astype(np.uint8)
        self.n_checks, self.n_vars = h.shape
        chk_idx, var_idx = np.nonzero(h)
        # edge arrays sorted by check, with a variable-sorted view
        order = np.lexsort((var_idx, chk_idx))
        self.edge_chk = chk_idx[order].astype(np.int64)
        self.edge_var = var_idx[order].astype(np.int64)
        self.n_edges = self.edge_chk.size
        counts = np.bincount(self.edge_chk, minlength=self.n_checks)
        self.chk_ptr = np.concatenate(([0], np.cumsum(counts)))
        self.by_var_order = np.argsort(self.edge_var, kind="stable")
        vcounts = np.bincount(self.edge_var, minlength=self.n_vars)
        self.var_ptr = np.concatenate(([0], np.cumsum(vcounts)))
        self.var_degree = vcounts
        self.chk_degree = counts

    def is_regular(self, d_v: int, d_c: int) -> bool:
        return (self.var_degree == d_v).all() and (self.chk_degree == d_c).all()


def make_repetition(n: int) -> LinearCode:
    if n < 2:
        raise DomainError("repetition code needs n >= 2")
    return LinearCode(np.ones((1, n), dtype=np.uint8), name=f"repetition[{n}]")


def make_spc(n: int) -> LinearCode:
    """Single parity check code [n, n-1, 2]."""
    if n < 2:
        raise DomainError("single parity check code needs n >= 2")
    g = np.hstack([np.eye(n - 1, dtype=np.uint8), np.ones((n - 1, 1), dtype=np.uint8)])
    h = np.ones((1, n), dtype=np.uint8)
    return LinearCode(g, h, name=f"spc[{n}]")


def make_hamming74() -> LinearCode:
    """The [7,4,3] Hamming code in systematic form."""
    p = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=np.uint8)
    g = np.hstack([np.eye(4, dtype=np.uint8), p])
    h = np.hstack([p.T, np.eye(3, dtype=np.uint8)])
    return LinearCode(g, h, name="hamming74")


def make_uncoded(n: int) -> LinearCode:
    """Rate-1 identity code (k = n); useful as the no-code baseline."""
    if n < 1:
        raise DomainError("need n >= 1")
    return LinearCode(np.eye(n, dtype=np.uint8), name=f"uncoded[{n}]")


def make_random_linear(n: int, k: int, seed: int) -> LinearCode:
    """Uniform full-rank k x n generator, deterministic in the seed."""
    if k > n:
        raise DomainError("need k <= n")
    rng = np.random.default_rng(seed)
    for _ in range(_RETRY_LIMIT):
        g = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if gf2.rank(g) == k:
            return LinearCode(g, name=f"random[{n},{k}]s{seed}")
    raise RuntimeError("failed to sample a full-rank generator")  # pragma: no cover


def make_regular_ldpc(n: int, d_v: int, d_c: int, seed: int) -> tuple[LinearCode, TannerGraph]:
    """Regular (d_v, d_c) LDPC code from a seeded socket permutation.

    Duplicate edges are repaired by re-swapping sockets.  The dimension is
    n - rank(H); rank deficiencies only raise the rate.
    """
    if (n * d_v) % d_c != 0:
        raise ConfigError("n * d_v must be divisible by d_c")
    if d_v < 1 or d_c < 2:
        raise ConfigError("need d_v >= 1 and d_c >= 2")
    m = (n * d_v) // d_c
    rng = np.random.default_rng(seed)
    nsock = n * d_v
    var_of_socket = np.repeat(np.arange(n), d_v)
    for _ in range(_RETRY_LIMIT):
        chk_of_socket = rng.permutation(nsock) // d_c
        for _pass in range(_RETRY_LIMIT):
            seen = {}
            dup = []
            for s in range(nsock):
                e = (var_of_socket[s], chk_of_socket[s])
                if e in seen:
                    dup.append(s)
                seen[e] = s
            if not dup:
                break
            for s in dup:
                t = int(rng.integers(nsock))
                chk_of_socket[s], chk_of_socket[t] = chk_of_socket[t], chk_of_socket[s]
        else:  # pragma: no cover
            continue
        h = np.zeros((m, n), dtype=np.uint8)
        h[chk_of_socket, var_of_socket] = 1
        if not ((h.sum(axis=1) == d_c).all() and (h.sum(axis=0) == d_v).all()):
            continue  # pragma: no cover
        g = gf2.nullspace(h)
        if g.shape[0] == 0:
            continue  # pragma: no cover
        code = LinearCode(g, parity=h, name=f"ldpc[{n},dv{d_v},dc{d_c}]s{seed}")
        return code, TannerGraph(h)
    raise RuntimeError("failed to build a duplicate-free socket permutation")  # pragma: no cover


def encode(code: LinearCode, message: np.ndarray) -> np.ndarray:
    if len(message) != code.k:
        raise DomainError(f"message length {len(message)} != k={code.k}")
    msg = (np.asarray(message) & 1).astype(np.uint8)
    return (msg @ code.generator) % 2


def enumerate_codebook(code: LinearCode) -> Codebook:
    """All 2^k codewords in message-index order; guarded against blowup."""
    if code.k > MAX_ENUMERABLE_K:
        raise EnumerationLimitError(f"k={code.k} exceeds enumeration guard {MAX_ENUMERABLE_K}")
    msgs = ((np.arange(2**code.k)[:, None] >> np.arange(code.k)) & 1).astype(np.uint8)
    return Codebook(code, (msgs @ code.generator) % 2)


def symbol_marginals(codebook: Codebook) -> np.ndarray:
    """Per-position P(x_i = 1) under the equiprobable codeword prior."""
    return codebook.codewords.mean(axis=0)
