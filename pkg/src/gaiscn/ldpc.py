"""Regular LDPC codes over GF(2) with systematic encoding and hard-decision bit flipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def gf2_rank(mat: np.ndarray) -> int:
    a = np.array(mat, dtype=np.uint8) % 2
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        pivot = np.flatnonzero(a[rank:, c])
        if pivot.size == 0:
            continue
        p = rank + pivot[0]
        a[[rank, p]] = a[[p, rank]]
        others = np.flatnonzero(a[:, c])
        others = others[others != rank]
        a[others] ^= a[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def gf2_rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    a = np.array(mat, dtype=np.uint8) % 2
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def gf2_inv(mat: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    aug = np.concatenate([np.array(mat, dtype=np.uint8) % 2, np.eye(n, dtype=np.uint8)], axis=1)
    red, pivots = gf2_rref(aug)
    if pivots[:n] != list(range(n)):
        raise np.linalg.LinAlgError("matrix is singular over GF(2)")
    return red[:, n:]


def count_four_cycles(H: np.ndarray) -> int:
    overlap = H.astype(np.int64) @ H.T.astype(np.int64)
    np.fill_diagonal(overlap, 0)
    return int((overlap * (overlap - 1) // 2).sum() // 2)


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """Systematic LDPC code: the first ``k`` codeword bits are the message."""

    n: int
    k: int
    parity_matrix: np.ndarray  # (n-k, n)
    max_iterations: int = 50
    _parity_gen: np.ndarray = field(init=False, repr=False)  # (n-k, k)
    _check_vars: np.ndarray = field(init=False, repr=False)  # (n-k, row weight)
    _var_checks: np.ndarray = field(init=False, repr=False)  # (n, col weight)

    def __post_init__(self):
        H = np.asarray(self.parity_matrix, dtype=np.uint8)
        m = self.n - self.k
        if not self.n > self.k > 0 or H.shape != (m, self.n):
            raise ConfigurationError(f"parity matrix shape {H.shape} inconsistent with n={self.n}, k={self.k}")
        row_w = H.sum(axis=1)
        col_w = H.sum(axis=0)
        if len(set(row_w)) != 1 or len(set(col_w)) != 1:
            raise ConfigurationError("parity matrix must be regular")
        A, B = H[:, : self.k], H[:, self.k :]
        object.__setattr__(self, "parity_matrix", H)
        object.__setattr__(self, "_parity_gen", (gf2_inv(B).astype(np.int64) @ A % 2).astype(np.uint8))
        object.__setattr__(self, "_check_vars", np.array([np.flatnonzero(r) for r in H]))
        object.__setattr__(self, "_var_checks", np.array([np.flatnonzero(c) for c in H.T]))

    @property
    def rate(self) -> float:
        return self.k / self.n

    def syndrome(self, words: np.ndarray) -> np.ndarray:
        w = np.asarray(words, dtype=np.uint8)
        return np.bitwise_xor.reduce(w[..., self._check_vars], axis=-1)


def make_ldpc_code(
    n: int = 96,
    k: int = 48,
    col_weight: int = 3,
    row_weight: int = 6,
    seed: int = 1,
    max_iterations: int = 50,
    max_tries: int = 200,
) -> LdpcCode:
    """Pseudo-random regular code from a fixed seed.

    Edges are placed by a random socket permutation, 4-cycles are removed by
    degree-preserving edge swaps, and the columns are reordered so that the
    last ``n-k`` columns are invertible (systematic form).
    """
    m = n - k
    if n * col_weight != m * row_weight:
        raise ConfigurationError("n*col_weight must equal (n-k)*row_weight")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        H = _socket_matrix(n, m, col_weight, rng)
        if H is None:
            continue
        H = _remove_four_cycles(H, rng)
        if gf2_rank(H) < m or len({c.tobytes() for c in H.T}) < n:
            continue
        _, pivots = gf2_rref(H)
        info = [c for c in range(n) if c not in set(pivots)]
        H = H[:, info + pivots]
        return LdpcCode(n, k, H, max_iterations)
    raise ConfigurationError(f"no full-rank ({col_weight},{row_weight}) code found for n={n}")


def _socket_matrix(n, m, col_weight, rng) -> np.ndarray | None:
    var_sockets = np.repeat(np.arange(n), col_weight)
    check_sockets = rng.permutation(np.repeat(np.arange(m), n * col_weight // m))
    H = np.zeros((m, n), dtype=np.uint8)
    for v, c in zip(var_sockets, check_sockets):
        if H[c, v]:
            return None
        H[c, v] = 1
    return H


def _remove_four_cycles(H: np.ndarray, rng, max_rounds: int = 20000) -> np.ndarray:
    H = H.copy()
    cycles = count_four_cycles(H)
    rounds = 0
    while cycles and rounds < max_rounds:
        rounds += 1
        overlap = H.astype(np.int64) @ H.T
        np.fill_diagonal(overlap, 0)
        c1, c2 = np.argwhere(overlap >= 2)[0]
        shared = np.flatnonzero(H[c1] & H[c2])
        v = shared[rng.integers(shared.size)]
        # swap edge (c1, v) with a random edge (c3, u) keeping degrees
        edges = np.argwhere(H)
        c3, u = edges[rng.integers(len(edges))]
        if c3 == c1 or u == v or H[c1, u] or H[c3, v]:
            continue
        H[c1, v] = H[c3, u] = 0
        H[c1, u] = H[c3, v] = 1
        new = count_four_cycles(H)
        if new < cycles:
            cycles = new
        else:
            H[c1, u] = H[c3, v] = 0
            H[c1, v] = H[c3, u] = 1
    return H


def ldpc_encode(message: np.ndarray, code: LdpcCode) -> np.ndarray:
    """Systematic encoding of one message (k,) or a batch (B, k)."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape[-1] != code.k:
        raise ValueError(f"message length {msg.shape[-1]} != k={code.k}")
    parity = (msg.astype(np.int64) @ code._parity_gen.T.astype(np.int64)) % 2
    return np.concatenate([msg, parity.astype(np.uint8)], axis=-1)


def bit_flip_decode(received: np.ndarray, code: LdpcCode) -> tuple[np.ndarray, np.ndarray]:
    """Parallel bit flipping on a batch (B, n).

    Each iteration flips every bit attaining the largest number of
    unsatisfied checks.  Returns the corrected words and per-word convergence.
    """
    words = np.array(received, dtype=np.uint8, ndmin=2)
    if words.shape[-1] != code.n:
        raise ValueError(f"received length {words.shape[-1]} != n={code.n}")
    active = np.arange(words.shape[0])
    for _ in range(code.max_iterations):
        syn = code.syndrome(words[active])
        bad = syn.any(axis=1)
        active = active[bad]
        if active.size == 0:
            break
        syn = syn[bad]
        unsat = syn[:, code._var_checks].sum(axis=2)
        flip = unsat == unsat.max(axis=1, keepdims=True)
        words[active] ^= flip.astype(np.uint8)
    converged = ~code.syndrome(words).any(axis=1)
    return words, converged


def ldpc_decode(received: np.ndarray, code: LdpcCode) -> tuple[np.ndarray, bool]:
    words, converged = bit_flip_decode(np.asarray(received)[None, :], code)
    return words[0, : code.k].copy(), bool(converged[0])


def pad_to_blocks(bits: np.ndarray, k: int) -> np.ndarray:
    """Zero-pad a bit stream to whole messages, shaped (blocks, k)."""
    bits = np.asarray(bits, dtype=np.uint8)
    blocks = max(1, -(-bits.size // k))
    out = np.zeros(blocks * k, dtype=np.uint8)
    out[: bits.size] = bits
    return out.reshape(blocks, k)


def coded_length(n_bits: int, code: LdpcCode) -> int:
    return max(1, -(-n_bits // code.k)) * code.n


__all__ = [
    "LdpcCode",
    "make_ldpc_code",
    "ldpc_encode",
    "ldpc_decode",
    "bit_flip_decode",
    "pad_to_blocks",
    "coded_length",
    "gf2_rank",
    "count_four_cycles",
]
