"""Monte Carlo threshold calibration, ROC curves and Pd-vs-SNR sweeps.

Every trial draws from random streams keyed by ``(master seed, stream,
trial index)`` and trials are evaluated in fixed-size chunks, so results do
not depend on how many worker processes run the chunks.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .config import ScenarioConfig
from .detectors import DetectorId, compute_statistics
from .scenario import Hypothesis, TrialRngs, complex_normal, stack_snapshots, synth_observation
from .transforms import DimSpec

__all__ = [
    "InsufficientTrials",
    "ThresholdTable",
    "RateEstimate",
    "SweepPoint",
    "ExperimentResult",
    "white_null_statistics",
    "pipeline_statistics",
    "calibrate_threshold",
    "estimate_rates",
    "empirical_roc",
    "roc_curve",
    "pd_vs_snr",
]

CHUNK = 128

# stream identifiers used in the seed key
WHITE_NULL, PIPELINE_H0, PIPELINE_H1 = 0, 1, 2
_PIPELINE_STREAM = {Hypothesis.H0: PIPELINE_H0, Hypothesis.H1: PIPELINE_H1}

ALL_DETECTORS = (DetectorId.GLRT, DetectorId.CROSS_CORRELATION)


class InsufficientTrials(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdTable:
    detector: DetectorId
    dims: DimSpec
    pfa_targets: tuple[float, ...]
    thresholds: tuple[float, ...]
    trials: int
    seed: int

    def threshold(self, pfa: float) -> float:
        return self.thresholds[self.pfa_targets.index(pfa)]


@dataclass(frozen=True)
class RateEstimate:
    pfa: float
    pd: float
    pfa_stderr: float
    pd_stderr: float
    trials: int


@dataclass(frozen=True)
class SweepPoint:
    detector: DetectorId
    snr_db: float
    threshold: float
    pd: float
    pd_stderr: float
    trials: int


@dataclass
class ExperimentResult:
    """Outcome of an ROC run or an SNR sweep.

    ``per_trial_stats`` maps a label (``"H0"``, ``"H1"`` or ``"H1@<snr>"``)
    to per-detector statistic arrays. ``roc_points`` holds (pfa, pd) rows
    sorted by pfa. ``pd_at_pfa`` maps detector -> pfa -> (pd, stderr).
    """

    scenario: ScenarioConfig
    trials: int
    seed: int
    per_trial_stats: dict = field(default_factory=dict)
    roc_points: dict = field(default_factory=dict)
    pd_at_pfa: dict = field(default_factory=dict)
    curve: list = field(default_factory=list)
    thresholds: dict = field(default_factory=dict)
    wall_clock: float = 0.0


def binomial_stderr(p, n):
    return np.sqrt(p * (1.0 - p) / n)


def _chunks(trials: int):
    return [(start, min(start + CHUNK, trials)) for start in range(0, trials, CHUNK)]


def _run(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _concat(parts, detectors):
    return {d: np.concatenate([p[d] for p in parts]) for d in detectors}


def _white_chunk(bounds, dims, seed, detectors):
    start, stop = bounds
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(WHITE_NULL, start // CHUNK)))
    z = complex_normal(rng, (stop - start, dims.M, dims.vec_len))
    return compute_statistics(z, dims, detectors)


def white_null_statistics(dims: DimSpec, trials: int, seed: int = 0,
                          detectors=ALL_DETECTORS, workers: int = 1):
    """Statistics of batches of i.i.d. standard circular Gaussian snapshots."""
    detectors = tuple(DetectorId(d) for d in detectors)
    fn = partial(_white_chunk, dims=dims, seed=seed, detectors=detectors)
    return _concat(_run(fn, _chunks(trials), workers), detectors)


def _pipeline_chunk(bounds, cfg, hypothesis, seed, detectors):
    start, stop = bounds
    stream = _PIPELINE_STREAM[hypothesis]
    dims = cfg.dims
    z = np.empty((stop - start, dims.M, dims.vec_len), dtype=complex)
    for k, trial in enumerate(range(start, stop)):
        obs = synth_observation(cfg, hypothesis, TrialRngs.from_seed(seed, stream, trial))
        z[k] = stack_snapshots(obs, dims).z
    return compute_statistics(z, dims, detectors)


def pipeline_statistics(cfg: ScenarioConfig, hypothesis, trials: int, seed: int = 0,
                        detectors=ALL_DETECTORS, workers: int = 1):
    """Statistics of full synthetic observations under one hypothesis.

    Trial ``i`` uses the same random streams for every ``cfg`` sharing the
    seed, so sweeps over SNR reuse sources, channels and noise.
    """
    hypothesis = Hypothesis(hypothesis)
    detectors = tuple(DetectorId(d) for d in detectors)
    fn = partial(_pipeline_chunk, cfg=cfg, hypothesis=hypothesis, seed=seed, detectors=detectors)
    return _concat(_run(fn, _chunks(trials), workers), detectors)


def _check_trials(trials, pfa_targets):
    need = 10.0 / min(pfa_targets)
    if trials < need:
        raise InsufficientTrials(
            f"{trials} trials cannot resolve pfa={min(pfa_targets)}; need at least {int(np.ceil(need))}"
        )


def calibrate_threshold(detector, dims: DimSpec, pfa_targets, trials: int, seed: int = 0,
                        workers: int = 1, null_model: ScenarioConfig | None = None) -> ThresholdTable:
    """Empirical (1 - pfa)-quantiles of the null statistic.

    By default the null data are white Gaussian snapshots, which is enough
    for the GLRT because its statistic is invariant to S0-structured
    filtering. Passing ``null_model`` calibrates on full synthetic H0
    observations instead (``null_model.dims`` must equal ``dims``).
    """
    detector = DetectorId(detector)
    pfa_targets = tuple(float(p) for p in pfa_targets)
    if not pfa_targets or any(not 0.0 < p < 1.0 for p in pfa_targets):
        raise ValueError("pfa targets must lie in (0, 1)")
    _check_trials(trials, pfa_targets)
    if not dims.pd_regime:
        raise ValueError(f"M={dims.M} < 2LP={2 * dims.L * dims.P}: GLR blocks would be singular")
    if null_model is None:
        stats = white_null_statistics(dims, trials, seed, [detector], workers)[detector]
    else:
        if null_model.dims != dims:
            raise ValueError("null_model dimensions do not match dims")
        stats = pipeline_statistics(null_model, Hypothesis.H0, trials, seed, [detector], workers)[detector]
    thresholds = np.quantile(stats, 1.0 - np.asarray(pfa_targets), method="linear")
    return ThresholdTable(detector, dims, pfa_targets, tuple(float(t) for t in thresholds), trials, seed)


def estimate_rates(cfg: ScenarioConfig, detector, threshold: float, trials: int,
                   seed: int = 0, workers: int = 1) -> RateEstimate:
    """Exceedance fractions of ``threshold`` under H0 and H1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    detector = DetectorId(detector)
    h0 = pipeline_statistics(cfg, Hypothesis.H0, trials, seed, [detector], workers)[detector]
    h1 = pipeline_statistics(cfg, Hypothesis.H1, trials, seed, [detector], workers)[detector]
    pfa = float(np.mean(h0 > threshold))
    pd = float(np.mean(h1 > threshold))
    return RateEstimate(pfa, pd, float(binomial_stderr(pfa, trials)),
                        float(binomial_stderr(pd, trials)), trials)


def empirical_roc(h0, h1) -> np.ndarray:
    """(pfa, pd) pairs for every threshold in the pooled statistics.

    Rows are sorted by pfa and run from (0, 0) to (1, 1).
    """
    h0 = np.sort(np.asarray(h0, dtype=float))
    h1 = np.sort(np.asarray(h1, dtype=float))
    thresholds = np.unique(np.concatenate([h0, h1]))[::-1]
    pfa = (h0.size - np.searchsorted(h0, thresholds, side="left")) / h0.size
    pd = (h1.size - np.searchsorted(h1, thresholds, side="left")) / h1.size
    return np.vstack([[0.0, 0.0], np.column_stack([pfa, pd])])


def pd_at_pfa(h0, h1, pfa: float) -> tuple[float, float, float]:
    """Threshold at the empirical (1 - pfa)-quantile of h0, and the resulting pd."""
    eta = float(np.quantile(h0, 1.0 - pfa, method="linear"))
    pd = float(np.mean(np.asarray(h1) > eta))
    return eta, pd, float(binomial_stderr(pd, len(h1)))


def roc_curve(cfg: ScenarioConfig, detectors=ALL_DETECTORS, trials: int = 2000, seed: int = 0,
              workers: int = 1, pfa_points=(0.01, 0.05, 0.1, 0.2)) -> ExperimentResult:
    """ROC per detector from one set of H0 and H1 trials (threshold sweep)."""
    if trials < 100:
        raise ValueError("roc_curve needs at least 100 trials")
    t0 = time.perf_counter()
    detectors = tuple(DetectorId(d) for d in detectors)
    h0 = pipeline_statistics(cfg, Hypothesis.H0, trials, seed, detectors, workers)
    h1 = pipeline_statistics(cfg, Hypothesis.H1, trials, seed, detectors, workers)
    result = ExperimentResult(cfg, trials, seed, per_trial_stats={"H0": h0, "H1": h1})
    for d in detectors:
        result.roc_points[d] = empirical_roc(h0[d], h1[d])
        result.pd_at_pfa[d] = {}
        for p in pfa_points:
            eta, pd, se = pd_at_pfa(h0[d], h1[d], p)
            result.pd_at_pfa[d][p] = (pd, se)
            result.thresholds[(d, p)] = eta
    result.wall_clock = time.perf_counter() - t0
    return result


# detectors whose null distribution does not depend on the noise spectrum
WHITE_CALIBRATED = frozenset({DetectorId.GLRT})


def pd_vs_snr(cfg: ScenarioConfig, snr_grid_db, pfa: float = 0.01, trials_per_point: int = 1000,
              seed: int = 0, detectors=ALL_DETECTORS, workers: int = 1,
              calibration: str = "auto", calibration_trials: int = 10_000) -> ExperimentResult:
    """Detection probability over a grid of equal SNRs at both arrays.

    Thresholds come from one of two null models. ``"white"`` calibrates once
    per detector on white snapshots and reuses the threshold on the whole
    grid. ``"pipeline"`` calibrates at each grid point on
    ``calibration_trials`` synthetic H0 observations at that SNR. ``"auto"``
    uses white calibration for the GLRT, which is invariant to the noise
    color, and pipeline calibration for the other detectors.
    """
    grid = [float(v) for v in snr_grid_db]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("snr grid must be sorted ascending")
    if calibration not in ("auto", "white", "pipeline"):
        raise ValueError(f"unknown calibration mode {calibration!r}")
    _check_trials(calibration_trials, [pfa])
    t0 = time.perf_counter()
    detectors = tuple(DetectorId(d) for d in detectors)
    if calibration == "auto":
        white = tuple(d for d in detectors if d in WHITE_CALIBRATED)
    else:
        white = detectors if calibration == "white" else ()
    per_point = tuple(d for d in detectors if d not in white)
    result = ExperimentResult(cfg, trials_per_point, seed)

    for d in white:
        table = calibrate_threshold(d, cfg.dims, [pfa], calibration_trials, seed, workers)
        result.thresholds[d] = table.thresholds[0]

    for snr in grid:
        point_cfg = cfg.replace(snr_s_db=snr, snr_r_db=snr)
        h1 = pipeline_statistics(point_cfg, Hypothesis.H1, trials_per_point, seed, detectors, workers)
        result.per_trial_stats[f"H1@{snr!r}"] = h1
        if per_point:
            h0 = pipeline_statistics(point_cfg, Hypothesis.H0, calibration_trials, seed, per_point, workers)
            result.per_trial_stats[f"H0@{snr!r}"] = h0
        for d in detectors:
            if d in white:
                eta = result.thresholds[d]
            else:
                eta = float(np.quantile(h0[d], 1.0 - pfa, method="linear"))
                result.thresholds[(d, snr)] = eta
            pd = float(np.mean(h1[d] > eta))
            result.curve.append(SweepPoint(d, snr, eta, pd, float(binomial_stderr(pd, trials_per_point)),
                                           trials_per_point))
    result.wall_clock = time.perf_counter() - t0
    return result
