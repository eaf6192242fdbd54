"""Permutations, the DFT coordinate change and block determinants.

Every vector handled here is a flat complex array laid out time-major with
the antenna index running fastest, i.e. ``y = [u[0]^T, u[1]^T, ...]^T``.
Permutations are stored as index maps with ``out[k] = in[forward[k]]`` and
never materialized as matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NotPositiveDefinite",
    "PermutationMap",
    "DimSpec",
    "BlockDiagEstimate",
    "commutation_permutation",
    "expand_kron_identity",
    "interleave_map",
    "dft_reorder_transform",
    "block_diag_extract",
    "hermitian_logdet",
    "build_block_circulant",
]


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a Cholesky factorization fails.

    ``block_index`` is set when the failing matrix is one block of a batch.
    """

    def __init__(self, message, block_index=None):
        super().__init__(message)
        self.block_index = block_index


@dataclass(frozen=True, eq=False)
class PermutationMap:
    """Bijective index map of length ``size`` with ``out[k] = in[forward[k]]``."""

    forward: np.ndarray

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=np.intp)
        if fwd.ndim != 1:
            raise ValueError("forward must be one-dimensional")
        seen = np.zeros(fwd.size, dtype=bool)
        if fwd.size and (fwd.min() < 0 or fwd.max() >= fwd.size):
            raise ValueError("forward is not a permutation")
        seen[fwd] = True
        if not seen.all():
            raise ValueError("forward is not a permutation")
        fwd.setflags(write=False)
        object.__setattr__(self, "forward", fwd)

    @property
    def size(self) -> int:
        return int(self.forward.size)

    @classmethod
    def identity(cls, size: int) -> "PermutationMap":
        return cls(np.arange(size))

    def inverse(self) -> "PermutationMap":
        inv = np.empty_like(self.forward)
        inv[self.forward] = np.arange(self.size)
        return PermutationMap(inv)

    # The inverse of a permutation matrix is its transpose.
    transpose = inverse

    def compose(self, other: "PermutationMap") -> "PermutationMap":
        """Map equivalent to applying ``other`` first, then ``self``."""
        if other.size != self.size:
            raise ValueError("size mismatch")
        return PermutationMap(other.forward[self.forward])

    def apply(self, x, axis: int = -1) -> np.ndarray:
        """Permute ``x`` along ``axis``."""
        x = np.asarray(x)
        if x.shape[axis] != self.size:
            raise ValueError(
                f"axis length {x.shape[axis]} does not match permutation size {self.size}"
            )
        return np.take(x, self.forward, axis=axis)

    def conjugate(self, A) -> np.ndarray:
        """Return ``P A P^T`` for a square (or batched square) ``A``."""
        A = np.asarray(A)
        return A[..., self.forward[:, None], self.forward[None, :]]

    def to_dense(self) -> np.ndarray:
        mat = np.zeros((self.size, self.size))
        mat[np.arange(self.size), self.forward] = 1.0
        return mat

    def __eq__(self, other):
        if not isinstance(other, PermutationMap):
            return NotImplemented
        return np.array_equal(self.forward, other.forward)

    def __hash__(self):
        return hash(self.forward.tobytes())

    def __repr__(self):
        return f"PermutationMap(size={self.size}, forward={self.forward.tolist()})"


@dataclass(frozen=True)
class DimSpec:
    """Problem dimensions.

    L antennas per array, cycle period P, N Gladyshev snapshots per window
    and M windows. ``M >= 2*L*P`` is needed for the GLR blocks to be
    positive definite; see :attr:`pd_regime`.
    """

    L: int
    P: int
    N: int
    M: int

    def __post_init__(self):
        for name in ("L", "P", "N", "M"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")

    @property
    def NP(self) -> int:
        return self.N * self.P

    @property
    def half_len(self) -> int:
        """Length ``L*N*P`` of one channel's stacked window."""
        return self.L * self.N * self.P

    @property
    def vec_len(self) -> int:
        return 2 * self.half_len

    @property
    def pd_regime(self) -> bool:
        return self.M >= 2 * self.L * self.P


@dataclass(frozen=True)
class BlockDiagEstimate:
    """Ordered diagonal blocks of a block-diagonal matrix."""

    block_size: int
    blocks: np.ndarray = field(repr=False)

    def __post_init__(self):
        blocks = np.asarray(self.blocks)
        if blocks.ndim != 3 or blocks.shape[1:] != (self.block_size, self.block_size):
            raise ValueError(
                f"blocks must have shape (count, {self.block_size}, {self.block_size})"
            )
        object.__setattr__(self, "blocks", blocks)

    @property
    def count(self) -> int:
        return self.blocks.shape[0]

    @property
    def total_dim(self) -> int:
        return self.block_size * self.count

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.total_dim, self.total_dim), dtype=self.blocks.dtype)
        b = self.block_size
        for k, block in enumerate(self.blocks):
            out[k * b:(k + 1) * b, k * b:(k + 1) * b] = block
        return out

    def logdet(self, loading: float = 0.0) -> float:
        """Sum of the block log-determinants."""
        return float(np.sum(hermitian_logdet(self.blocks, loading=loading)))


def commutation_permutation(rows: int, cols: int) -> PermutationMap:
    """Commutation permutation ``L_{rows*cols, cols}``.

    Satisfies ``vec(A) = L vec(A^T)`` for every ``rows x cols`` matrix A under
    column-major ``vec``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    i, j = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    forward = np.empty(rows * cols, dtype=np.intp)
    forward[(i + j * rows).ravel()] = (j + i * cols).ravel()
    return PermutationMap(forward)


def expand_kron_identity(p: PermutationMap, block_size: int) -> PermutationMap:
    """Index map of ``p ⊗ I_block_size`` (moves contiguous chunks)."""
    if block_size < 1:
        raise ValueError("block_size must be positive")
    fwd = (p.forward[:, None] * block_size + np.arange(block_size)[None, :]).ravel()
    return PermutationMap(fwd)


def interleave_map(dims: DimSpec) -> PermutationMap:
    """Map ``w = [y_s; y_r]`` to the sample-interleaved ``w~``.

    This is ``L_{2NP,NP} ⊗ I_L``; its transpose is the permutation T that
    takes interleaved coordinates back to ``[z_s; z_r]`` ordering.
    """
    return expand_kron_identity(commutation_permutation(2, dims.NP), dims.L)


def dft_reorder_transform(v, L: int, N: int, P: int) -> np.ndarray:
    """Apply ``(L_{NP,N} ⊗ I_L)(F_{NP} ⊗ I_L)^H`` along the last axis.

    F is the unitary DFT matrix, so the conjugate transpose is an inverse
    DFT with ``1/sqrt(NP)`` scaling, taken over time for each antenna. Bins
    are then regrouped so that output group l holds bins
    ``l, l+N, ..., l+(P-1)N``. Leading axes are treated as a batch.
    """
    v = np.asarray(v)
    NP = N * P
    if v.shape[-1] != L * NP:
        raise ValueError(f"last axis has length {v.shape[-1]}, expected L*N*P = {L * NP}")
    lead = v.shape[:-1]
    X = np.fft.ifft(v.reshape(*lead, NP, L), axis=-2, norm="ortho")
    # bin index = i*N + j  ->  output position j*P + i
    X = X.reshape(*lead, P, N, L).swapaxes(-3, -2)
    return X.reshape(*lead, L * NP)


def block_diag_extract(A, block_size: int) -> BlockDiagEstimate:
    """The ``diag_b(A)`` operator: diagonal blocks of size ``block_size``."""
    A = np.asarray(A)
    n = A.shape[-1]
    if A.ndim != 2 or A.shape[0] != n:
        raise ValueError("A must be a square matrix")
    if block_size < 1 or n % block_size:
        raise ValueError(f"dimension {n} is not divisible by block size {block_size}")
    count = n // block_size
    blocks = A.reshape(count, block_size, count, block_size)
    idx = np.arange(count)
    return BlockDiagEstimate(block_size, blocks[idx, :, idx, :].copy())


def hermitian_logdet(B, loading: float = 0.0):
    """Log-determinant of Hermitian positive-definite matrices via Cholesky.

    Works on a single matrix or a stack ``(..., n, n)``; returns a float or an
    array of floats. ``loading`` adds ``loading * I`` before factorizing.

    Raises
    ------
    NotPositiveDefinite
        If any matrix fails to factorize. For stacks, ``block_index`` is the
        flat index of the first offending matrix.
    """
    B = np.asarray(B)
    if B.ndim < 2 or B.shape[-1] != B.shape[-2]:
        raise ValueError("expected square matrices")
    if loading < 0:
        raise ValueError("loading must be non-negative")
    if loading:
        B = B + loading * np.eye(B.shape[-1])
    try:
        C = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        index = None
        if B.ndim > 2:
            flat = B.reshape(-1, *B.shape[-2:])
            for k, mat in enumerate(flat):
                try:
                    np.linalg.cholesky(mat)
                except np.linalg.LinAlgError:
                    index = k
                    break
        where = "" if index is None else f" (block {index})"
        raise NotPositiveDefinite(f"matrix is not positive definite{where}", index) from None
    diag = np.diagonal(C, axis1=-2, axis2=-1).real
    out = 2.0 * np.sum(np.log(diag), axis=-1)
    return float(out) if out.ndim == 0 else out


def build_block_circulant(first_block_row) -> np.ndarray:
    """Block-circulant matrix with the given first block row.

    Block (b, c) equals ``first_block_row[(c - b) mod K]``.
    """
    blocks = [np.atleast_2d(np.asarray(b)) for b in first_block_row]
    if not blocks:
        raise ValueError("need at least one block")
    shape = blocks[0].shape
    if shape[0] != shape[1] or any(b.shape != shape for b in blocks):
        raise ValueError("all blocks must be square and of the same size")
    K = len(blocks)
    stack = np.stack(blocks)
    idx = (np.arange(K)[None, :] - np.arange(K)[:, None]) % K
    # (K, K, b, b) -> (K*b, K*b)
    return stack[idx].transpose(0, 2, 1, 3).reshape(K * shape[0], K * shape[0])
