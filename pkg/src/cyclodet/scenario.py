"""Synthetic two-channel passive radar observations.

A rho-antenna QPSK illuminator with raised-cosine pulses (cyclostationary
with period ``sps``) is seen through independent frequency-selective
Rayleigh channels at the reference and surveillance arrays, each corrupted
by its own temporally colored, spatially correlated Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import ScenarioConfig
from .transforms import DimSpec, dft_reorder_transform

__all__ = [
    "Hypothesis",
    "TrialRngs",
    "ChannelRealization",
    "ObservationPair",
    "SnapshotBatch",
    "raised_cosine_taps",
    "complex_normal",
    "gen_cs_source",
    "gen_channel",
    "gen_colored_noise",
    "synth_observation",
    "stack_snapshots",
]


class Hypothesis(str, Enum):
    H0 = "H0"
    H1 = "H1"


_COMPONENTS = ("source", "channel_s", "channel_r", "noise_s", "noise_r")


@dataclass(frozen=True)
class TrialRngs:
    """Independent generators for the random parts of one trial."""

    source: np.random.Generator
    channel_s: np.random.Generator
    channel_r: np.random.Generator
    noise_s: np.random.Generator
    noise_r: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, *key: int, **overrides: int) -> "TrialRngs":
        """Streams keyed by ``(seed, *key, component)``.

        ``overrides`` maps a component name to an alternative seed, which
        regenerates that component alone.
        """
        unknown = set(overrides) - set(_COMPONENTS)
        if unknown:
            raise ValueError(f"unknown components: {sorted(unknown)}")
        gens = {}
        for c, name in enumerate(_COMPONENTS):
            entropy = overrides.get(name, seed)
            ss = np.random.SeedSequence(entropy, spawn_key=(*key, c))
            gens[name] = np.random.default_rng(ss)
        return cls(**gens)

    @classmethod
    def spawn(cls, rng: np.random.Generator) -> "TrialRngs":
        return cls(*rng.spawn(len(_COMPONENTS)))


def _as_trial_rngs(rng) -> TrialRngs:
    if isinstance(rng, TrialRngs):
        return rng
    if isinstance(rng, np.random.Generator):
        return TrialRngs.spawn(rng)
    return TrialRngs.from_seed(int(rng))


@dataclass(frozen=True)
class ChannelRealization:
    """MIMO FIR channel; ``taps[k]`` is the L x rho matrix at delay k."""

    taps: np.ndarray

    @property
    def n_taps(self) -> int:
        return self.taps.shape[0]

    def apply(self, s: np.ndarray) -> np.ndarray:
        """Steady-state output ``sum_k H[k] s[n-k]``; drops ``n_taps-1`` samples."""
        K = self.n_taps
        n_out = s.shape[1] - K + 1
        if n_out < 1:
            raise ValueError("input shorter than the channel")
        out = np.zeros((self.taps.shape[1], n_out), dtype=complex)
        for k in range(K):
            out += self.taps[k] @ s[:, K - 1 - k:K - 1 - k + n_out]
        return out


@dataclass
class ObservationPair:
    """Surveillance and reference samples, each L x (M*N*P).

    ``components`` optionally keeps the unsummed signal and noise parts
    (keys ``signal_s``, ``signal_r``, ``noise_s``, ``noise_r``).
    """

    u_s: np.ndarray
    u_r: np.ndarray
    hypothesis: Hypothesis
    components: dict | None = None

    def __post_init__(self):
        if self.u_s.shape != self.u_r.shape:
            raise ValueError("surveillance and reference streams differ in shape")


@dataclass(frozen=True)
class SnapshotBatch:
    """M transformed snapshots ``z_m`` as rows of an (M, 2LNP) array."""

    dims: DimSpec
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z)
        if z.ndim != 2 or z.shape[1] != self.dims.vec_len:
            raise ValueError(
                f"z must have shape (M, {self.dims.vec_len}), got {z.shape}"
            )
        if z.shape[0] < 1:
            raise ValueError("empty batch")
        object.__setattr__(self, "z", z)

    @property
    def M(self) -> int:
        return self.z.shape[0]

    @property
    def z_s(self) -> np.ndarray:
        return self.z[:, :self.dims.half_len]

    @property
    def z_r(self) -> np.ndarray:
        return self.z[:, self.dims.half_len:]


def complex_normal(rng: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|x|^2 = scale**2``."""
    shape = tuple(np.atleast_1d(shape))
    x = rng.standard_normal((*shape[:-1], 2 * shape[-1]))
    x *= scale / np.sqrt(2.0)
    return x.view(np.complex128)


def raised_cosine_taps(sps: int, rolloff: float, span_symbols: int) -> np.ndarray:
    """Unit-energy raised-cosine FIR with ``span_symbols*sps + 1`` taps."""
    half = span_symbols * sps // 2
    t = np.arange(-half, span_symbols * sps - half + 1) / sps
    h = np.sinc(t)
    if rolloff > 0:
        denom = 1.0 - (2.0 * rolloff * t) ** 2
        singular = np.isclose(denom, 0.0)
        h = np.where(
            singular,
            np.pi / 4 * np.sinc(1.0 / (2.0 * rolloff)),
            h * np.cos(np.pi * rolloff * t) / np.where(singular, 1.0, denom),
        )
    return h / np.linalg.norm(h)


_QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)


def gen_cs_source(cfg: ScenarioConfig, length: int, rng: np.random.Generator) -> np.ndarray:
    """Pulse-shaped QPSK streams, one per transmit antenna (rho x length).

    Only steady-state samples are returned, so every sample is a full
    filter response. The output is cyclostationary with period ``cfg.sps``.
    """
    sps = cfg.sps
    h = raised_cosine_taps(sps, cfg.rc_rolloff, cfg.rc_span_symbols)
    n_up = length + h.size - 1
    n_sym = -(-n_up // sps)
    symbols = _QPSK[rng.integers(0, 4, size=(cfg.rho, n_sym))]
    up = np.zeros((cfg.rho, n_sym * sps), dtype=complex)
    up[:, ::sps] = symbols
    up = up[:, :n_up]
    out = np.empty((cfg.rho, length), dtype=complex)
    for a in range(cfg.rho):
        out[a] = np.convolve(up[a], h, mode="valid")
    return out


def gen_channel(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelRealization:
    """Rayleigh MIMO channel with a flat power-delay profile.

    ``channel_span_symbols * sps`` taps, each entry CN(0, 1/n_taps), so the
    expected energy summed over taps is 1 for every (receive, transmit) pair.
    """
    n_taps = cfg.channel_span_symbols * cfg.sps
    taps = complex_normal(rng, (n_taps, cfg.L, cfg.rho), scale=1.0 / np.sqrt(n_taps))
    return ChannelRealization(taps)


def spatial_sqrt(L: int, corr: float) -> np.ndarray:
    """Symmetric square root of ``[corr**|i-j|]``."""
    idx = np.arange(L)
    sigma = corr ** np.abs(idx[:, None] - idx[None, :])
    w, V = np.linalg.eigh(sigma)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def gen_colored_noise(cfg: ScenarioConfig, length: int, rng: np.random.Generator) -> np.ndarray:
    """L x length MA(ma_order) Gaussian noise, correlated across antennas.

    One random unit-energy MA filter is drawn per call and shared by all
    antennas; spatial correlation is applied afterwards. Expected power per
    antenna is 1.
    """
    q = cfg.ma_order
    taps = complex_normal(rng, q + 1)
    taps /= np.linalg.norm(taps)
    innov = complex_normal(rng, (cfg.L, length + q))
    colored = np.empty((cfg.L, length), dtype=complex)
    for a in range(cfg.L):
        colored[a] = np.convolve(innov[a], taps, mode="valid")
    if cfg.spatial_corr:
        colored = spatial_sqrt(cfg.L, cfg.spatial_corr) @ colored
    return colored


def _mean_power(x: np.ndarray) -> float:
    return float(np.mean(x.real ** 2 + x.imag ** 2))


def synth_observation(
    cfg: ScenarioConfig,
    hypothesis: Hypothesis | str,
    rng,
    return_components: bool = False,
) -> ObservationPair:
    """One observation of ``M*N*P`` steady-state samples per array.

    Signals are normalized to unit average power per antenna and the noise
    is scaled so that signal power over noise power equals the configured
    SNR at each array. Under H0 the surveillance stream is noise only.

    ``rng`` may be a :class:`TrialRngs`, a ``Generator`` (split into
    per-component streams) or an integer seed.
    """
    hypothesis = Hypothesis(hypothesis)
    rngs = _as_trial_rngs(rng)
    n = cfg.n_samples
    n_taps = cfg.channel_span_symbols * cfg.sps

    source = gen_cs_source(cfg, n + n_taps - 1, rngs.source)
    signal_r = gen_channel(cfg, rngs.channel_r).apply(source)
    signal_r /= np.sqrt(_mean_power(signal_r))
    noise_r = gen_colored_noise(cfg, n, rngs.noise_r)
    noise_r *= np.sqrt(10.0 ** (-cfg.snr_r_db / 10.0) / _mean_power(noise_r))

    channel_s = gen_channel(cfg, rngs.channel_s)
    noise_s = gen_colored_noise(cfg, n, rngs.noise_s)
    noise_s *= np.sqrt(10.0 ** (-cfg.snr_s_db / 10.0) / _mean_power(noise_s))
    if hypothesis is Hypothesis.H1:
        signal_s = channel_s.apply(source)
        signal_s /= np.sqrt(_mean_power(signal_s))
    else:
        signal_s = np.zeros_like(noise_s)

    components = None
    if return_components:
        components = dict(signal_s=signal_s, signal_r=signal_r, noise_s=noise_s, noise_r=noise_r)
    return ObservationPair(signal_s + noise_s, signal_r + noise_r, hypothesis, components)


def stack_snapshots(obs: ObservationPair, dims: DimSpec) -> SnapshotBatch:
    """Cut both streams into M windows of NP samples and transform each.

    Window m gives ``w_m = [y_s; y_r]`` (time-stacked L-vectors) and
    ``z_m`` is the DFT-reorder transform applied to each half.
    """
    L, NP, M = dims.L, dims.NP, dims.M
    for u in (obs.u_s, obs.u_r):
        if u.shape != (L, M * NP):
            raise ValueError(f"stream has shape {u.shape}, expected ({L}, {M * NP})")
    # (L, M*NP) -> (M, NP*L), antenna index fastest
    y_s = obs.u_s.T.reshape(M, NP * L)
    y_r = obs.u_r.T.reshape(M, NP * L)
    z = np.concatenate(
        [dft_reorder_transform(y, L, dims.N, dims.P) for y in (y_s, y_r)], axis=1
    )
    return SnapshotBatch(dims, z)
