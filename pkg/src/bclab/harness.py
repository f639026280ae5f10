"""Experiment orchestration: configure, run, persist, and judge runs.

A run is fully described by an :class:`ExperimentConfig`; everything else
(hit records, checkpoint statistics, criterion reports, verdicts) is a
deterministic function of it.  Statistics are recomputable bit-exactly
from the persisted records, and the run digest covers exactly the
reproducible payload (timestamps and wall-clock are excluded).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .criteria import CriterionReport, PathEnsemble, check_f_criteria
from .intervals import (
    IntervalFamily,
    LebesgueMeasure,
    MeasureOracle,
    PowerMeasure,
    family_from_json,
    family_to_json,
    measure_from_json,
    measure_to_json,
)
from .processes import (
    CircleRWProcess,
    DMRProcess,
    HitRecord,
    IIDProcess,
    LSVProcess,
    ProcessSpec,
    calibration_path,
    default_checkpoints,
    lsv_calibration,
    process_from_json,
    process_to_json,
    simulate_ensemble,
)
from .seqcore import TabulatedSeq

__all__ = [
    "CRITERIA_TOKENS",
    "CalibrationMissingError",
    "ExperimentConfig",
    "ExperimentReport",
    "Verdict",
    "aggregate_verdict",
    "config_from_json",
    "config_to_json",
    "emit_report",
    "load_run",
    "marginal_measure",
    "report_from_records",
    "run_digest",
    "run_experiment",
]

# Criteria that can be evaluated from a run's own trajectories.
CRITERIA_TOKENS = ("f-i", "f-ii", "f-iii", "f-variance")

# Verdict thresholds (shared with the acceptance suite).
LATE_HIT_MAX = 0.10
BC_MIN_GROWTH = 1.0
L1_DECAY_FACTOR = 0.9
SBC_MEAN_BAND = (0.8, 1.2)
SBC_QUANTILE_BAND = (0.5, 1.5)


class CalibrationMissingError(RuntimeError):
    """An LSV run needs an occupation-measure table that is not on disk."""


@dataclass
class ExperimentConfig:
    """Complete description of one Monte Carlo experiment.

    ``checkpoints`` defaults to a geometric grid ending at ``n``;
    ``criteria`` lists tokens from :data:`CRITERIA_TOKENS` to evaluate on
    the simulated ensemble; ``measure`` overrides the stationary marginal
    used for expected hit counts (required for processes without a
    closed form).
    """

    process: ProcessSpec
    family: IntervalFamily
    n: int
    n_traj: int
    seed: int = 0
    checkpoints: tuple = None
    criteria: tuple = ()
    measure: MeasureOracle = None
    out_dir: str = None
    calibration_steps: int = 10_000_000
    calibration_seed: int = 0

    def __post_init__(self):
        if self.checkpoints is None:
            self.checkpoints = tuple(default_checkpoints(int(self.n)))
        else:
            self.checkpoints = tuple(int(c) for c in self.checkpoints)
        self.criteria = tuple(self.criteria)

    def validate(self):
        self.process.validate()
        if self.n < 100:
            raise ValueError("n must be >= 100")
        if self.n_traj < 1:
            raise ValueError("need at least one trajectory")
        fh = self.family.horizon
        if fh is not None and fh < self.n:
            raise ValueError(f"family defined only up to {fh} < n = {self.n}")
        cps = np.asarray(self.checkpoints, dtype=np.int64)
        if cps.size == 0:
            raise ValueError("need at least one checkpoint")
        if cps[0] < 1 or cps[-1] > self.n or np.any(np.diff(cps) <= 0):
            raise ValueError(
                "checkpoints must be strictly increasing within [1, n]")
        bad = [t for t in self.criteria if t not in CRITERIA_TOKENS]
        if bad:
            raise ValueError(
                f"unknown criteria tokens {bad}; supported: {list(CRITERIA_TOKENS)}")
        if self.criteria and self.n_traj < 100:
            raise ValueError("criteria evaluation needs n_traj >= 100")
        if self.calibration_steps < 1:
            raise ValueError("calibration_steps must be positive")

    def digest(self) -> str:
        """Hash of the experiment content; where it is written never enters."""
        return hashlib.sha256(_config_payload(self)).hexdigest()[:16]


def config_to_json(cfg: ExperimentConfig) -> dict:
    d = {
        "process": process_to_json(cfg.process),
        "family": family_to_json(cfg.family),
        "n": int(cfg.n),
        "n_traj": int(cfg.n_traj),
        "seed": int(cfg.seed),
        "checkpoints": [int(c) for c in cfg.checkpoints],
        "criteria": list(cfg.criteria),
        "measure": None if cfg.measure is None else measure_to_json(cfg.measure),
        "out_dir": cfg.out_dir,
        "calibration_steps": int(cfg.calibration_steps),
        "calibration_seed": int(cfg.calibration_seed),
    }
    return d


def _config_payload(cfg: ExperimentConfig) -> bytes:
    """Canonical config bytes for digests: out_dir is presentation, not
    content, so it is stripped before hashing."""
    d = config_to_json(cfg)
    d.pop("out_dir", None)
    return json.dumps(d, sort_keys=True, separators=(",", ":")).encode()


def config_from_json(d: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig(
            process=process_from_json(d["process"]),
            family=family_from_json(d["family"]),
            n=int(d["n"]),
            n_traj=int(d["n_traj"]),
            seed=int(d.get("seed", 0)),
            checkpoints=d.get("checkpoints"),
            criteria=tuple(d.get("criteria", ())),
            measure=(measure_from_json(d["measure"])
                     if d.get("measure") is not None else None),
            out_dir=d.get("out_dir"),
            calibration_steps=int(d.get("calibration_steps", 10_000_000)),
            calibration_seed=int(d.get("calibration_seed", 0)),
        )
    except KeyError as e:
        raise ValueError(f"config missing required field {e.args[0]!r}") from e
    cfg.validate()
    return cfg


def marginal_measure(cfg: ExperimentConfig) -> MeasureOracle:
    """Stationary marginal for expected hit counts.

    Explicit ``cfg.measure`` wins; otherwise iid, circle-walk, and the
    sticky polynomial chain have closed forms, and the interval map loads
    its cached occupation table (raising CalibrationMissingError when the
    table has not been built).
    """
    if cfg.measure is not None:
        return cfg.measure
    p = cfg.process
    if isinstance(p, IIDProcess):
        if p.marginal == "uniform":
            return LebesgueMeasure()
        return PowerMeasure(p.power)
    if isinstance(p, CircleRWProcess):
        return LebesgueMeasure()
    if isinstance(p, DMRProcess):
        return PowerMeasure(p.a)
    if isinstance(p, LSVProcess):
        path = calibration_path(p.gamma, cfg.calibration_steps,
                                cfg.calibration_seed)
        if not path.exists():
            raise CalibrationMissingError(
                f"no occupation table for gamma={p.gamma} "
                f"(steps={cfg.calibration_steps}, seed={cfg.calibration_seed}); "
                f"build it with scripts/build_lsv_calibration.py or pass an "
                f"explicit measure")
        cal = lsv_calibration(p.gamma, cfg.calibration_steps,
                              cfg.calibration_seed)
        return cal.as_measure()
    raise ValueError(
        f"no closed-form stationary marginal for variant {p.variant!r}; "
        f"set cfg.measure explicitly")


@dataclass
class ExperimentReport:
    """Run outputs: records, checkpoint statistics, criterion reports.

    All statistics are pure functions of (config, records); ``s_values``
    is the trajectory-by-checkpoint hit-count matrix.
    """

    config: ExperimentConfig
    records: list
    checkpoints: np.ndarray
    e_checkpoints: np.ndarray
    s_values: np.ndarray
    mean_ratio: np.ndarray
    median_s: np.ndarray
    q10: np.ndarray
    q90: np.ndarray
    hit_frac_late: np.ndarray
    record_digests: list
    criteria: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    timestamp: str = ""

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.e_checkpoints > 0,
                            self.s_values / self.e_checkpoints, np.nan)


def _record_digest(rec: HitRecord) -> str:
    payload = json.dumps(rec.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def report_from_records(cfg: ExperimentConfig, records: list,
                        wall_clock_s: float = 0.0,
                        timestamp: str = "") -> ExperimentReport:
    """Deterministic statistics pass over persisted records."""
    cfg.validate()
    measure = marginal_measure(cfg)
    masses = cfg.family.measures(measure, cfg.n)
    e_dense = np.cumsum(masses)
    cps = np.asarray(cfg.checkpoints, dtype=np.int64)
    e_cp = e_dense[cps - 1]

    s = np.array([[rec.s_at(int(c)) for c in cps] for rec in records],
                 dtype=float).reshape(len(records), len(cps))
    if len(records):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(e_cp > 0, s / e_cp, np.nan)
        mean_ratio = ratios.mean(axis=0)
        median_s = np.median(s, axis=0)
        q10 = np.quantile(ratios, 0.1, axis=0)
        q90 = np.quantile(ratios, 0.9, axis=0)
        late = np.array([
            [rec.s_at(int(c)) - rec.s_at(int(c) // 10) > 0 for c in cps]
            for rec in records
        ])
        hit_frac_late = late.mean(axis=0)
    else:
        empty = np.zeros(0)
        mean_ratio = median_s = q10 = q90 = hit_frac_late = empty

    criteria = {}
    if cfg.criteria and len(records):
        ens = PathEnsemble(cps, s)
        e_seq = TabulatedSeq(e_dense)
        mu_seq = TabulatedSeq(masses)
        for token in cfg.criteria:
            mode = token[len("f-"):]
            criteria[token] = check_f_criteria(ens, e_seq, mode, mu_A=mu_seq)

    return ExperimentReport(
        config=cfg, records=records, checkpoints=cps, e_checkpoints=e_cp,
        s_values=s, mean_ratio=mean_ratio, median_s=median_s, q10=q10,
        q90=q90, hit_frac_late=hit_frac_late,
        record_digests=[_record_digest(r) for r in records],
        criteria=criteria, wall_clock_s=wall_clock_s, timestamp=timestamp,
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Simulate the configured ensemble and compute every statistic."""
    cfg.validate()
    marginal_measure(cfg)  # fail before simulating if E_n is unavailable
    t0 = time.perf_counter()
    records = simulate_ensemble(cfg.process, cfg.family, cfg.n, cfg.seed,
                                cfg.n_traj)
    wall = time.perf_counter() - t0
    stamp = datetime.now(timezone.utc).isoformat()
    return report_from_records(cfg, records, wall_clock_s=wall,
                               timestamp=stamp)


# ---------------------------------------------------------------------------
# Verdict aggregation


@dataclass
class Verdict:
    prediction: str
    passed: bool
    margins: dict
    reason: str


def _decade_ago_index(cps: np.ndarray):
    idx = np.nonzero(cps <= cps[-1] // 10)[0]
    return int(idx[-1]) if idx.size else None


def aggregate_verdict(report: ExperimentReport, prediction: str) -> Verdict:
    """Judge a finished run against a predicted limit behaviour.

    BC: the median hit count must grow monotonically and gain at least
    one hit over the last decade.  not-BC: the late-window hit fraction
    must stay at or below 0.10.  L1BC: the mean absolute ratio deviation
    must shrink by a decade factor of 0.9.  SBC: final per-trajectory
    ratios must concentrate (mean in [0.8, 1.2], 10-90 quantiles in
    [0.5, 1.5]).  Missing statistics fail with a reason; they never pass
    silently.
    """
    if prediction not in ("BC", "not-BC", "L1BC", "SBC"):
        raise ValueError(f"unknown prediction {prediction!r}")
    cps = report.checkpoints
    if len(report.records) == 0:
        return Verdict(prediction, False, {}, "no trajectories to judge")

    if prediction == "not-BC":
        frac = float(report.hit_frac_late[-1])
        return Verdict(prediction, frac <= LATE_HIT_MAX,
                       {"late_hit_fraction": frac, "threshold": LATE_HIT_MAX},
                       f"late-window hit fraction {frac:.4f}")

    i10 = _decade_ago_index(cps)
    if prediction == "BC":
        if i10 is None:
            return Verdict(prediction, False, {},
                           "checkpoints span less than one decade")
        med = report.median_s
        growth = float(med[-1] - med[i10])
        min_step = float(np.min(np.diff(med))) if len(med) > 1 else 0.0
        ok = min_step >= 0 and growth >= BC_MIN_GROWTH
        return Verdict(prediction, ok,
                       {"median_growth_last_decade": growth,
                        "min_median_step": min_step,
                        "threshold": BC_MIN_GROWTH},
                       f"median hit count grew by {growth:.1f} over the last decade")

    if not np.all(report.e_checkpoints > 0):
        return Verdict(prediction, False, {},
                       "expected hit count vanishes at some checkpoint")
    ratios = report.ratios

    if prediction == "L1BC":
        if i10 is None:
            return Verdict(prediction, False, {},
                           "checkpoints span less than one decade")
        dev = np.abs(ratios - 1.0).mean(axis=0)
        final, ago = float(dev[-1]), float(dev[i10])
        ok = np.isfinite(final) and np.isfinite(ago) and final <= L1_DECAY_FACTOR * ago
        return Verdict(prediction, ok,
                       {"final_mean_deviation": final,
                        "decade_ago_mean_deviation": ago,
                        "decay_factor": L1_DECAY_FACTOR},
                       f"mean |ratio - 1| went {ago:.4f} -> {final:.4f}")

    r = ratios[:, -1]
    mean = float(r.mean())
    lo, hi = float(np.quantile(r, 0.1)), float(np.quantile(r, 0.9))
    ok = (SBC_MEAN_BAND[0] <= mean <= SBC_MEAN_BAND[1]
          and lo >= SBC_QUANTILE_BAND[0] and hi <= SBC_QUANTILE_BAND[1])
    return Verdict(prediction, ok,
                   {"final_mean_ratio": mean, "final_q10": lo, "final_q90": hi,
                    "mean_band": list(SBC_MEAN_BAND),
                    "quantile_band": list(SBC_QUANTILE_BAND)},
                   f"final ratios: mean {mean:.4f}, q10 {lo:.4f}, q90 {hi:.4f}")


# ---------------------------------------------------------------------------
# Persistence


def _hits_payload(report: ExperimentReport) -> bytes:
    lines = [json.dumps(rec.to_json(), sort_keys=True, separators=(",", ":"))
             for rec in report.records]
    return ("\n".join(lines) + ("\n" if lines else "")).encode()


def _summary_rows(report: ExperimentReport):
    rows = []
    if len(report.records):
        for j, c in enumerate(report.checkpoints):
            rows.append([
                int(c),
                float(report.mean_ratio[j]),
                float(report.median_s[j]),
                float(report.q10[j]),
                float(report.q90[j]),
                float(report.hit_frac_late[j]),
            ])
    return rows


def _csv_payload(report: ExperimentReport) -> bytes:
    out = ["checkpoint,mean_ratio,median_S,q10,q90,hit_frac_late"]
    for row in _summary_rows(report):
        out.append(",".join([str(row[0])] + [repr(v) for v in row[1:]]))
    return ("\n".join(out) + "\n").encode()


def _criteria_payload(report: ExperimentReport, digest: str = None) -> bytes:
    doc = {
        "config_digest": report.config.digest(),
        "record_digests": report.record_digests,
        "criteria": {tok: json.loads(rep.to_json())
                     for tok, rep in sorted(report.criteria.items())},
        "verdicts": {tok: rep.verdict
                     for tok, rep in sorted(report.criteria.items())},
    }
    if digest is not None:
        doc["run_digest"] = digest
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def run_digest(report: ExperimentReport) -> str:
    """Digest of the reproducible payload (records, stats, criteria).

    Timestamps, wall-clock, and the output location never enter, so
    re-running an identical config or recomputing from persisted records
    reproduces it exactly.
    """
    h = hashlib.sha256()
    h.update(_config_payload(report.config))
    h.update(_hits_payload(report))
    h.update(_csv_payload(report))
    h.update(_criteria_payload(report))
    return h.hexdigest()


def _md_payload(report: ExperimentReport, digest: str) -> bytes:
    cfg = report.config
    lines = [
        "# Run summary",
        "",
        f"- process: `{process_to_json(cfg.process)}`",
        f"- family: `{family_to_json(cfg.family)}`",
        f"- horizon n = {cfg.n}, trajectories N = {cfg.n_traj}, seed = {cfg.seed}",
        f"- run digest: `{digest}`",
        f"- wall clock: {report.wall_clock_s:.2f} s",
        f"- timestamp: {report.timestamp}",
        "",
        "## Checkpoint statistics",
        "",
        "| checkpoint | mean ratio | median S | q10 | q90 | late hit frac |",
        "|---|---|---|---|---|---|",
    ]
    for row in _summary_rows(report):
        lines.append("| " + " | ".join(
            [str(row[0])] + [f"{v:.6g}" for v in row[1:]]) + " |")
    lines += ["", "## Criterion verdicts", ""]
    if report.criteria:
        lines += ["| criterion | verdict | first failure |", "|---|---|---|"]
        for tok, rep in sorted(report.criteria.items()):
            first = rep.diagnostics.get("first_failure") or "-"
            lines.append(f"| {rep.criterion} | {rep.verdict} | {first} |")
    else:
        lines.append("(no criteria requested)")
    return ("\n".join(lines) + "\n").encode()


def emit_report(report: ExperimentReport, out_dir=None,
                formats=("csv", "jsonl", "md")) -> dict:
    """Write run artifacts; returns {name: path} plus the run digest.

    ``config.json`` and ``criteria.json`` are always written; formats
    select ``hits.jsonl``, ``summary.csv``, ``summary.md`` ("md-summary"
    is accepted as an alias).  A failed write leaves ``manifest.json``
    describing the partial results.
    """
    out = out_dir or report.config.out_dir
    if not out:
        raise ValueError("no output directory configured")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    formats = [("md" if f == "md-summary" else f) for f in formats]
    unknown = [f for f in formats if f not in ("csv", "jsonl", "md")]
    if unknown:
        raise ValueError(f"unknown report formats {unknown}")

    digest = run_digest(report)
    payloads = {"config.json": (json.dumps(config_to_json(report.config),
                                           sort_keys=True, indent=2) + "\n").encode(),
                "criteria.json": _criteria_payload(report, digest)}
    if "jsonl" in formats:
        payloads["hits.jsonl"] = _hits_payload(report)
    if "csv" in formats:
        payloads["summary.csv"] = _csv_payload(report)
    if "md" in formats:
        payloads["summary.md"] = _md_payload(report, digest)

    written = {}
    try:
        for name, payload in payloads.items():
            (out / name).write_bytes(payload)
            written[name] = hashlib.sha256(payload).hexdigest()
    except OSError as e:
        manifest = {"complete": written, "failed": name, "error": str(e),
                    "run_digest": digest}
        try:
            (out / "manifest.json").write_text(
                json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        except OSError:
            pass
        raise RuntimeError(
            f"partial results in {out}: failed writing {name}") from e
    (out / "manifest.json").write_text(json.dumps(
        {"complete": written, "run_digest": digest}, sort_keys=True,
        indent=2) + "\n")
    paths = {name: str(out / name) for name in payloads}
    paths["digest"] = digest
    return paths


def load_run(run_dir) -> tuple:
    """(config, records) back from a persisted run directory."""
    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.json"
    hits_path = run_dir / "hits.jsonl"
    if not cfg_path.exists():
        raise ValueError(f"{run_dir} has no config.json")
    cfg = config_from_json(json.loads(cfg_path.read_text()))
    records = []
    if hits_path.exists():
        for line in hits_path.read_text().splitlines():
            if line.strip():
                records.append(HitRecord.from_json(json.loads(line)))
    return cfg, records
