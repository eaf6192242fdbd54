"""Sample covariance, ML covariance estimates and detection statistics.

The GLR statistic is ``log Lambda^{1/M}``:

    sum_k logdet([Q_s]^k_L) + sum_l logdet([Q_r]^l_LP) - sum_l logdet([Q~]^l_2LP)

where ``Q~ = T^T Q T`` interleaves surveillance and reference coordinates.
Besides the dense route through :class:`SampleCovariance`, the statistics
can be computed straight from stacks of snapshots, which is what the Monte
Carlo harness uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .scenario import SnapshotBatch
from .transforms import (
    BlockDiagEstimate,
    DimSpec,
    NotPositiveDefinite,
    block_diag_extract,
    hermitian_logdet,
    interleave_map,
)

__all__ = [
    "DetectorId",
    "DetectorOutput",
    "SampleCovariance",
    "sample_covariance",
    "mle_h0",
    "mle_h1",
    "glrt_cyclo",
    "cross_correlation_stat",
    "glrt_from_snapshots",
    "cross_correlation_from_snapshots",
    "compute_statistics",
]


class DetectorId(str, Enum):
    GLRT = "glrt"
    CROSS_CORRELATION = "xcorr"


@dataclass(frozen=True)
class DetectorOutput:
    statistic: float
    detector: DetectorId


@dataclass(frozen=True)
class SampleCovariance:
    """``Q = (1/M) sum_m z_m z_m^H`` with views on its structured parts."""

    Q: np.ndarray
    dims: DimSpec

    def __post_init__(self):
        n = self.dims.vec_len
        if self.Q.shape != (n, n):
            raise ValueError(f"Q must be {n} x {n}, got {self.Q.shape}")

    @property
    def Q_s(self) -> np.ndarray:
        h = self.dims.half_len
        return self.Q[:h, :h]

    @property
    def Q_r(self) -> np.ndarray:
        h = self.dims.half_len
        return self.Q[h:, h:]

    @property
    def Q_sr(self) -> np.ndarray:
        h = self.dims.half_len
        return self.Q[:h, h:]

    @property
    def Q_tilde(self) -> np.ndarray:
        return interleave_map(self.dims).conjugate(self.Q)


def sample_covariance(batch: SnapshotBatch) -> SampleCovariance:
    z = batch.z
    Q = z.T @ z.conj() / z.shape[0]
    Q = 0.5 * (Q + Q.conj().T)
    return SampleCovariance(Q, batch.dims)


def mle_h0(S: SampleCovariance) -> tuple[BlockDiagEstimate, BlockDiagEstimate]:
    """Null-hypothesis estimate: ``diag_L(Q_s)`` and ``diag_LP(Q_r)``."""
    d = S.dims
    return block_diag_extract(S.Q_s, d.L), block_diag_extract(S.Q_r, d.L * d.P)


def mle_h1(S: SampleCovariance) -> BlockDiagEstimate:
    """Alternative estimate in interleaved coordinates: ``diag_2LP(Q~)``."""
    d = S.dims
    return block_diag_extract(S.Q_tilde, 2 * d.L * d.P)


def _logdet_or_raise(blocks, loading, part):
    try:
        return hermitian_logdet(blocks, loading=loading)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(
            f"{part} block {exc.block_index} is not positive definite", exc.block_index
        ) from None


def glrt_cyclo(S: SampleCovariance, loading: float = 0.0) -> DetectorOutput:
    """GLR statistic ``log det(S0_hat) - log det(S1_hat)`` from a dense Q."""
    est_s, est_r = mle_h0(S)
    est_1 = mle_h1(S)
    stat = (
        np.sum(_logdet_or_raise(est_s.blocks, loading, "Q_s"))
        + np.sum(_logdet_or_raise(est_r.blocks, loading, "Q_r"))
        - np.sum(_logdet_or_raise(est_1.blocks, loading, "Q~"))
    )
    return DetectorOutput(float(stat), DetectorId.GLRT)


def cross_correlation_stat(batch: SnapshotBatch) -> DetectorOutput:
    """``||Q_sr||_F^2 / ((tr Q_s / LNP) (tr Q_r / LNP))``."""
    stat = cross_correlation_from_snapshots(batch.z[None], batch.dims)[0]
    return DetectorOutput(float(stat), DetectorId.CROSS_CORRELATION)


def _gram(x: np.ndarray) -> np.ndarray:
    """Per-block sample covariance of x with shape (..., M, K, b) -> (..., K, b, b)."""
    M = x.shape[-3]
    xt = np.moveaxis(x, -3, -1)
    return xt @ xt.conj().swapaxes(-1, -2) / M


def glrt_from_snapshots(z, dims: DimSpec, loading: float = 0.0) -> np.ndarray:
    """GLR statistics for a stack of batches ``z`` of shape (B, M, 2LNP).

    Only the diagonal blocks of Q are formed. Returns an array of length B.
    """
    z = np.asarray(z)
    B, M = z.shape[0], z.shape[1]
    L, P, N, NP = dims.L, dims.P, dims.N, dims.NP
    h = dims.half_len
    zs = z[:, :, :h].reshape(B, M, NP, L)
    zr = z[:, :, h:].reshape(B, M, NP, L)
    # interleave bin by bin: [s_bin, r_bin] chunks, grouped into N blocks of 2LP
    zt = np.stack((zs, zr), axis=3).reshape(B, M, N, 2 * L * P)
    ld_s = _logdet_or_raise(_gram(zs), loading, "Q_s")
    ld_r = _logdet_or_raise(_gram(zr.reshape(B, M, N, L * P)), loading, "Q_r")
    ld_t = _logdet_or_raise(_gram(zt), loading, "Q~")
    return ld_s.sum(axis=-1) + ld_r.sum(axis=-1) - ld_t.sum(axis=-1)


def cross_correlation_from_snapshots(z, dims: DimSpec) -> np.ndarray:
    """Cross-correlation statistics for a stack (B, M, 2LNP)."""
    z = np.asarray(z)
    M = z.shape[1]
    h = dims.half_len
    zs, zr = z[:, :, :h], z[:, :, h:]
    # ||Q_sr||_F^2 through the M x M Gram matrices of each half
    G_s = zs @ zs.conj().swapaxes(1, 2)
    G_r = zr @ zr.conj().swapaxes(1, 2)
    cross = np.sum((G_s * G_r.conj()).real, axis=(1, 2)) / M**2
    p_s = np.trace(G_s, axis1=1, axis2=2).real / (M * h)
    p_r = np.trace(G_r, axis1=1, axis2=2).real / (M * h)
    if np.any(p_s <= np.finfo(float).tiny) or np.any(p_r <= np.finfo(float).tiny):
        raise ValueError("zero-power input: channel trace underflows")
    return cross / (p_s * p_r)


_FAST = {
    DetectorId.GLRT: glrt_from_snapshots,
    DetectorId.CROSS_CORRELATION: cross_correlation_from_snapshots,
}


def compute_statistics(z, dims: DimSpec, detectors) -> dict[DetectorId, np.ndarray]:
    """Evaluate several detectors on a stack of batches (B, M, 2LNP)."""
    return {DetectorId(d): _FAST[DetectorId(d)](z, dims) for d in detectors}
