"""``cyclodet`` command line: calibrate, roc, sweep and single-trial."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, ScenarioConfig, parse_config
from .detectors import DetectorId, compute_statistics
from .experiments import calibrate_threshold, pd_vs_snr, roc_curve
from .scenario import Hypothesis, TrialRngs, stack_snapshots, synth_observation

SCHEMA_VERSION = 1
COMMANDS = ("calibrate", "roc", "sweep", "single-trial")
DEFAULT_TRIALS = {"calibrate": 10_000, "roc": 2000, "sweep": 1000, "single-trial": 1}
DEFAULT_SNR_GRID = (-25.0, -20.0, -15.0, -10.0, -5.0, 0.0)

CSV_COLUMNS = {
    "calibrate": ("detector", "pfa_target", "threshold", "trials"),
    "roc": ("detector", "pfa", "pd", "pd_stderr"),
    "sweep": ("detector", "snr_db", "pd", "pd_stderr"),
    "single-trial": ("detector", "hypothesis", "statistic"),
}


@dataclass
class RunManifest:
    command: str
    out_path: Path
    config_path: Path | None = None
    format: str = "csv"
    master_seed: int = 0
    workers: int = 1
    trials: int | None = None
    pfa: tuple[float, ...] = (0.01,)
    snr_grid: tuple[float, ...] = DEFAULT_SNR_GRID
    detectors: tuple[DetectorId, ...] = (DetectorId.GLRT, DetectorId.CROSS_CORRELATION)
    calibration: str = "auto"
    calibration_trials: int = 10_000
    null_model: str = "white"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.trials is None:
            self.trials = DEFAULT_TRIALS[self.command]


def _num(x) -> str:
    """Shortest round-trip decimal for floats."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render_csv(command: str, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# cyclodet schema_version={SCHEMA_VERSION} command={command}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS[command])
    for row in rows:
        writer.writerow([_num(v) for v in row])
    return buf.getvalue()


def render_json(doc: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **doc}, indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(path: Path | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _calibrate(m: RunManifest, cfg: ScenarioConfig):
    null_model = cfg if m.null_model == "pipeline" else None
    tables = [calibrate_threshold(d, cfg.dims, m.pfa, m.trials, m.master_seed, m.workers, null_model)
              for d in m.detectors]
    rows = sorted(
        (t.detector.value, p, eta, t.trials)
        for t in tables for p, eta in zip(t.pfa_targets, t.thresholds)
    )
    doc = {
        "command": "calibrate",
        "seed": m.master_seed,
        "trials": m.trials,
        "null_model": m.null_model,
        "dims": dataclasses.asdict(cfg.dims),
        "thresholds": [dict(zip(CSV_COLUMNS["calibrate"], r)) for r in rows],
    }
    summary = " ".join(f"{r[0]}:eta@{r[1]!r}={r[2]:.6g}" for r in rows)
    return rows, doc, summary


def _roc(m: RunManifest, cfg: ScenarioConfig):
    res = roc_curve(cfg, m.detectors, m.trials, m.master_seed, m.workers,
                    pfa_points=tuple(sorted(set(m.pfa) | {0.05, 0.1, 0.2})))
    rows = []
    for d, pts in res.roc_points.items():
        se = np.sqrt(pts[:, 1] * (1 - pts[:, 1]) / m.trials)
        rows.extend((d.value, float(p), float(q), float(s)) for (p, q), s in zip(pts, se))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    doc = {
        "command": "roc",
        "seed": m.master_seed,
        "trials": m.trials,
        "config": dataclasses.asdict(cfg),
        "roc": [dict(zip(CSV_COLUMNS["roc"], r)) for r in rows],
        "pd_at_pfa": [
            {"detector": d.value, "pfa": p, "pd": pd, "pd_stderr": se}
            for d, table in sorted(res.pd_at_pfa.items()) for p, (pd, se) in sorted(table.items())
        ],
    }
    summary = " ".join(
        f"{d.value}:pd@{p!r}={res.pd_at_pfa[d][p][0]:.4g}" for d in m.detectors for p in m.pfa
    )
    return rows, doc, summary


def _sweep(m: RunManifest, cfg: ScenarioConfig):
    pfa = m.pfa[0]
    res = pd_vs_snr(cfg, m.snr_grid, pfa, m.trials, m.master_seed, m.detectors, m.workers,
                    m.calibration, m.calibration_trials)
    rows = sorted((p.detector.value, p.snr_db, p.pd, p.pd_stderr) for p in res.curve)
    doc = {
        "command": "sweep",
        "seed": m.master_seed,
        "trials": m.trials,
        "pfa": pfa,
        "calibration": m.calibration,
        "calibration_trials": m.calibration_trials,
        "config": dataclasses.asdict(cfg),
        "curve": [
            {"detector": p.detector.value, "snr_db": p.snr_db, "pd": p.pd,
             "pd_stderr": p.pd_stderr, "threshold": p.threshold}
            for p in sorted(res.curve, key=lambda p: (p.detector.value, p.snr_db))
        ],
    }
    top = max(m.snr_grid)
    summary = " ".join(
        f"{p.detector.value}:pd@{p.snr_db!r}dB={p.pd:.4g}" for p in res.curve if p.snr_db == top
    )
    return rows, doc, summary


def _single_trial(m: RunManifest, cfg: ScenarioConfig):
    rows = []
    for stream, hyp in enumerate((Hypothesis.H0, Hypothesis.H1), start=1):
        obs = synth_observation(cfg, hyp, TrialRngs.from_seed(m.master_seed, stream, 0))
        z = stack_snapshots(obs, cfg.dims).z[None]
        for d, v in compute_statistics(z, cfg.dims, m.detectors).items():
            rows.append((d.value, hyp.value, float(v[0])))
    rows.sort()
    doc = {
        "command": "single-trial",
        "seed": m.master_seed,
        "config": dataclasses.asdict(cfg),
        "statistics": [dict(zip(CSV_COLUMNS["single-trial"], r)) for r in rows],
    }
    summary = " ".join(f"{r[0]}:{r[1]}={r[2]:.6g}" for r in rows)
    return rows, doc, summary


_RUNNERS = {"calibrate": _calibrate, "roc": _roc, "sweep": _sweep, "single-trial": _single_trial}


def run(m: RunManifest) -> int:
    """Execute a manifest, write its artifact and print a summary line.

    Returns the process exit status: 0 iff the artifact was written.
    """
    t0 = time.perf_counter()
    try:
        cfg = load_config(m.config_path)
        rows, doc, summary = _RUNNERS[m.command](m, cfg)
        text = render_csv(m.command, rows) if m.format == "csv" else render_json(doc)
        write_atomic(m.out_path, text)
    except Exception as exc:  # reported, not swallowed: exit status is nonzero
        click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc),
                               "command": m.command}), err=True)
        return 1
    wall = time.perf_counter() - t0
    click.echo(f"{m.command} {summary} trials={m.trials} seed={m.master_seed} "
               f"workers={m.workers} wall={wall:.2f}s out={m.out_path}")
    return 0


def _parse_grid(text: str) -> tuple[float, ...]:
    """``"-25:0:5"`` (inclusive range) or ``"-20,-10,0"``."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise click.BadParameter("grid step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + k * step) for k in range(count))
    return tuple(float(v) for v in text.split(","))


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(COMMANDS))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="JSON scenario config (defaults used when omitted).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None,
              help="Master seed; falls back to $CYCLODET_SEED, then the config seed.")
@click.option("--trials", type=click.IntRange(min=1), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--pfa", type=click.FloatRange(0, 1, min_open=True, max_open=True), multiple=True,
              help="False-alarm target(s); repeatable. Default 0.01.")
@click.option("--snr-grid", default="-25:0:5", show_default=True,
              help="SNR grid in dB for sweep: start:stop:step or comma list.")
@click.option("--detector", "detectors", type=click.Choice([d.value for d in DetectorId]),
              multiple=True, help="Detector(s); repeatable. Default all.")
@click.option("--calibration", type=click.Choice(["auto", "white", "pipeline"]), default="auto",
              show_default=True, help="Threshold calibration for sweep.")
@click.option("--calibration-trials", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--null", "null_model", type=click.Choice(["white", "pipeline"]), default="white",
              show_default=True, help="Null data for calibrate.")
def main(command, config_path, out_path, fmt, seed, trials, workers, pfa, snr_grid, detectors,
         calibration, calibration_trials, null_model):
    """Two-channel cyclostationary detection experiments."""
    if seed is None:
        env = os.environ.get("CYCLODET_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise click.BadParameter(f"CYCLODET_SEED={env!r} is not an integer") from None
        else:
            try:
                seed = load_config(config_path).seed
            except ConfigError:
                seed = 0  # run() reports the config error
    manifest = RunManifest(
        command=command,
        out_path=out_path,
        config_path=config_path,
        format=fmt,
        master_seed=seed,
        workers=workers,
        trials=trials,
        pfa=tuple(pfa) or (0.01,),
        snr_grid=_parse_grid(snr_grid),
        detectors=tuple(DetectorId(d) for d in detectors) or tuple(DetectorId),
        calibration=calibration,
        calibration_trials=calibration_trials,
        null_model=null_model,
    )
    sys.exit(run(manifest))


if __name__ == "__main__":
    main()
