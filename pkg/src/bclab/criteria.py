"""Finite-horizon evaluators for Borel–Cantelli hypothesis sets.

Each ``check_*`` function inspects the hypotheses of one sufficient
condition for a hitting-count conclusion (BC: infinitely many hits a.s.;
L1BC: S_n / E_n -> 1 in L^1; SBC: S_n / E_n -> 1 a.s.) and returns a
:class:`CriterionReport`.  Verdicts always speak about the *hypotheses*
on the evidence available up to a finite horizon, never about the
almost-sure conclusion itself:

* ``satisfied``    — every hypothesis clause holds (exactly, for
  closed-form inputs; under the trend/tail rules below, for tabulated
  or Monte Carlo inputs);
* ``violated``     — at least one clause provably fails on the evidence
  (an exact counterexample, a divergent minorant, or a trace that has
  committed to a flat nonzero level / the wrong direction);
* ``inconclusive`` — the evidence does not commit either way.

Decision rules (fixed constants, shared by every evaluator)
-----------------------------------------------------------
Limit clauses ("x_n -> 0" or "x_n -> infinity") on tabulated traces are
decided on the last two decades of the checkpoint grid: a least-squares
slope of log(value) against log(n) at most -0.05 together with an
endpoint below half the value one decade earlier commits to 0 (mirrored
for infinity); a slope above -0.03 with the endpoint at least 0.7x the
decade-ago value, and — when Monte Carlo error bars are available —
an endpoint more than three standard errors above zero, commits to a
flat nonzero level, which refutes both "-> 0" and "-> infinity".
Anything else is undecided.  Closed-form inputs bypass the fit with an
exact limit computation.

Series clauses ("sum t_n < infinity" or "= infinity") use the exact
integral-test classification when the term sequence is closed-form;
tabulated terms are classified by the slope of log(t_n) over the last
decade: below -1.1 is convergent, above -0.9 is divergent, in between
is undecided.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .mixing import (
    ALPHA_INF1,
    BETA_INF1,
    TILDE_BETA11,
    TILDE_BETA_REV,
    TILDE_PHI11,
    MixingProfile,
)
from .seqcore import (
    INF_INDEX,
    GeometricSeq,
    PowerLogSeq,
    RealSeq,
    TabulatedSeq,
    huber,
    partial_sums,
)

SATISFIED = "satisfied"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

HOLDS = "holds"
FAILS = "fails"
UNDECIDED = "undecided"

DEFAULT_HORIZON = 10**6

# Trend-rule constants (limit clauses, tabulated traces).
SLOPE_COMMIT = 0.05       # |slope| needed to commit to a direction
SLOPE_FLAT = 0.03         # slope magnitude below which "flat" is possible
RATIO_COMMIT = 0.5        # endpoint vs decade-ago factor for a direction
RATIO_FLAT = 0.7          # endpoint vs decade-ago factor for "flat"
FLAT_FLOOR = 1e-12        # flat levels at or below this count as zero

# Tail-rule constants (series clauses, tabulated terms).
TERM_SLOPE_CONV = -1.1
TERM_SLOPE_DIV = -0.9

_THETA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


# --------------------------------------------------------------------------
# report containers
# --------------------------------------------------------------------------


@dataclass
class ClauseResult:
    """Outcome of a single hypothesis clause."""

    name: str
    outcome: str                      # holds / fails / undecided
    method: str                      # how it was decided
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "outcome": self.outcome,
            "method": self.method,
            "detail": _plain(self.detail),
        }


@dataclass
class CriterionReport:
    """Evaluation record for one criterion.

    ``ns``/``trace`` hold the primary diagnostic curve (which curve that
    is depends on the criterion and is named in ``diagnostics['trace_name']``);
    ``diagnostics['clauses']`` lists every clause with its decision method.
    """

    criterion: str
    inputs_digest: str
    horizon: int
    ns: np.ndarray
    trace: np.ndarray
    verdict: str
    diagnostics: dict = field(default_factory=dict)

    def clause(self, name: str) -> dict:
        for c in self.diagnostics.get("clauses", ()):
            if c["name"] == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        payload = {
            "criterion": self.criterion,
            "inputs_digest": self.inputs_digest,
            "horizon": int(self.horizon),
            "ns": [int(n) for n in np.asarray(self.ns).ravel()],
            "trace": [float(v) for v in np.asarray(self.trace).ravel()],
            "verdict": self.verdict,
            "diagnostics": _plain(self.diagnostics),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CriterionReport":
        d = json.loads(text)
        return cls(
            criterion=d["criterion"],
            inputs_digest=d["inputs_digest"],
            horizon=int(d["horizon"]),
            ns=np.asarray(d["ns"], dtype=np.int64),
            trace=np.asarray(d["trace"], dtype=float),
            verdict=d["verdict"],
            diagnostics=d["diagnostics"],
        )


def _plain(obj):
    """Recursively convert numpy scalars/arrays into JSON-safe values."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, ClauseResult):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


# --------------------------------------------------------------------------
# digests and grids
# --------------------------------------------------------------------------


def _seq_fingerprint(seq) -> dict:
    if seq is None:
        return {"kind": "none"}
    if isinstance(seq, MixingProfile):
        return {
            "kind": "profile",
            "mixing": seq.kind,
            "n": len(seq.ns),
            "sha": hashlib.sha256(
                np.asarray(seq.values, dtype=float).tobytes()
            ).hexdigest()[:16],
        }
    if isinstance(seq, TabulatedSeq):
        return {
            "kind": "tabulated",
            "start": int(seq.start),
            "n": len(seq.values),
            "sha": hashlib.sha256(
                np.asarray(seq.values, dtype=float).tobytes()
            ).hexdigest()[:16],
        }
    if isinstance(seq, PowerLogSeq):
        return {
            "kind": "powerlog",
            "c": float(seq.c),
            "p": float(seq.p),
            "q": float(seq.q),
            "shift": float(seq.shift),
            "start": int(seq.start),
        }
    if isinstance(seq, GeometricSeq):
        return {"kind": "geometric", "c": float(seq.c), "r": float(seq.r)}
    if isinstance(seq, (int, float)):
        return {"kind": "scalar", "value": float(seq)}
    return {"kind": type(seq).__name__}


def _digest(**parts) -> str:
    text = json.dumps(_plain(parts), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _log_grid(lo: int, hi: int, per_decade: int = 8) -> np.ndarray:
    """Roughly geometric integer grid from lo to hi inclusive, deduplicated."""
    lo = int(max(lo, 1))
    hi = int(hi)
    if hi < lo:
        raise ValueError("empty grid: horizon below sequence start")
    j_hi = int(math.ceil(per_decade * math.log10(hi))) if hi > 1 else 0
    raw = np.round(10 ** (np.arange(j_hi + 1) / per_decade)).astype(np.int64)
    raw = raw[(raw >= lo) & (raw <= hi)]
    grid = np.unique(np.concatenate([raw, [lo, hi]]))
    return grid


def _resolve_horizon(requested, *seqs, default: int = DEFAULT_HORIZON) -> int:
    """Largest index usable by every input, capped by the request/default."""
    h = default if requested is None else int(requested)
    if requested is not None and requested < 1:
        raise ValueError("horizon must be >= 1")
    for seq in seqs:
        if seq is None:
            continue
        sh = getattr(seq, "horizon", None)
        if sh is not None:
            h = min(h, int(sh))
    if h < 1:
        raise ValueError("no usable horizon: inputs have empty overlap")
    return h


# --------------------------------------------------------------------------
# closed-form algebra on power-log shapes
# --------------------------------------------------------------------------


def _as_pl(seq):
    return seq if isinstance(seq, PowerLogSeq) else None


def _pl_make(c, p, q, shift, start):
    if c != 0 and q != 0:
        start = max(start, int(math.ceil(2 - shift)))
    if c != 0 and p != 0:
        start = max(start, 1)
    start = max(start, 0 if (p == 0 or c == 0) else 1)
    try:
        if c == 0:
            return PowerLogSeq(0.0, 0.0, 0.0, 0.0, max(start, 0))
        return PowerLogSeq(c, p, q, shift, start)
    except Exception:
        return None


def _pl_combine(a: PowerLogSeq, b: PowerLogSeq, sign: int):
    """a * b  (sign=+1)  or  a / b  (sign=-1), when shapes are compatible."""
    if a is None or b is None:
        return None
    if a.c == 0:
        return a if sign == +1 or b.c != 0 else None
    if b.c == 0:
        if sign == +1:
            return _pl_make(0.0, 0.0, 0.0, 0.0, max(a.start, b.start))
        return None
    if a.q != 0 and b.q != 0 and a.shift != b.shift:
        return None
    shift = a.shift if a.q != 0 else b.shift
    return _pl_make(
        a.c * (b.c if sign == +1 else 1.0 / b.c),
        a.p + sign * b.p,
        a.q + sign * b.q,
        shift,
        max(a.start, b.start),
    )


def _pl_partial_sum_asym(seq: PowerLogSeq):
    """Closed-form shape asymptotically equivalent to the partial sums.

    Exact for verdict purposes: asymptotic equivalence of positive
    sequences preserves limit kind and series convergence (limit
    comparison).  When the series converges the returned shape is the
    constant 1 — only the shape, not the value, feeds any decision.
    Returns None when the partial sums are not a power-log shape
    (e.g. iterated-logarithm growth).
    """
    if seq is None or seq.c < 0:
        return None
    if seq.c == 0:
        return _pl_make(0.0, 0.0, 0.0, 0.0, seq.start)
    if seq.p < 1:
        return _pl_make(seq.c / (1 - seq.p), seq.p - 1, seq.q, seq.shift, seq.start)
    if seq.p > 1 or (seq.p == 1 and seq.q > 1):
        return _pl_make(1.0, 0.0, 0.0, 0.0, seq.start)
    if seq.p == 1 and seq.q == 0:
        return _pl_make(seq.c, 0.0, -1.0, seq.shift, max(seq.start, 1))
    return None


def _pl_power(seq: PowerLogSeq, e: float):
    if seq is None:
        return None
    try:
        return seq.powered(e)
    except Exception:
        return None


# --------------------------------------------------------------------------
# trend rule (limit clauses) and tail rule (series clauses)
# --------------------------------------------------------------------------


def _window_stats(ns: np.ndarray, vals: np.ndarray):
    """Fit data for the last two decades; None when the window is too thin."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    hi = ns[-1]
    mask = ns >= hi / 100.0
    w_ns, w_vals = ns[mask], vals[mask]
    if len(w_ns) < 4 or w_ns[-1] < 10 * w_ns[0]:
        return None
    pos = w_vals > 0
    if pos.sum() < 4:
        return None
    slope = float(np.polyfit(np.log(w_ns[pos]), np.log(w_vals[pos]), 1)[0])
    endpoint = float(w_vals[-1])
    i_ago = int(np.argmin(np.abs(w_ns - hi / 10.0)))
    decade_ago = float(w_vals[i_ago])
    return {
        "slope": slope,
        "endpoint": endpoint,
        "decade_ago": decade_ago,
        "window": (float(w_ns[0]), float(w_ns[-1])),
        "points": int(len(w_ns)),
    }


def _classify_trend(ns, vals, sigma_endpoint=None):
    """Return (label, detail): label in {to-zero, to-inf, flat, unclear, all-zero}."""
    vals = np.asarray(vals, dtype=float)
    hi = float(np.asarray(ns, dtype=float)[-1])
    tail_mask = np.asarray(ns, dtype=float) >= hi / 100.0
    if np.all(np.abs(vals[tail_mask]) <= FLAT_FLOOR):
        return "all-zero", {"endpoint": float(vals[-1])}
    stats = _window_stats(ns, vals)
    if stats is None:
        return "unclear", {"reason": "window too thin for a two-decade fit"}
    slope, endpoint, ago = stats["slope"], stats["endpoint"], stats["decade_ago"]
    if slope <= -SLOPE_COMMIT and ago > 0 and endpoint < RATIO_COMMIT * ago:
        return "to-zero", stats
    if slope >= SLOPE_COMMIT and ago > 0 and endpoint > ago / RATIO_COMMIT:
        return "to-inf", stats
    flat_shape = (
        abs(slope) < SLOPE_FLAT
        and ago > 0
        and RATIO_FLAT * ago <= endpoint <= ago / RATIO_FLAT
    )
    if flat_shape and endpoint > FLAT_FLOOR:
        if sigma_endpoint is not None and not endpoint - 3.0 * sigma_endpoint > 0:
            return "unclear", {**stats, "reason": "flat level within noise of zero"}
        return "flat", stats
    return "unclear", stats


def _limit_clause(name, ns, vals, direction, symbolic=None, sigma_endpoint=None):
    """Decide "trace -> 0" (direction='zero') or "trace -> inf" ('inf')."""
    if symbolic is not None:
        kind = symbolic.limit_kind()
        if kind is not None:
            if kind == direction:
                out = HOLDS
            elif kind in ("zero", "inf"):
                out = FAILS
            else:  # positive constant: refutes both directions
                out = FAILS
            return ClauseResult(name, out, "closed-form", {"limit_kind": kind})
    label, detail = _classify_trend(ns, vals, sigma_endpoint=sigma_endpoint)
    if label == "all-zero":
        out = HOLDS if direction == "zero" else FAILS
        return ClauseResult(name, out, "exact-zero", detail)
    if label == "unclear":
        return ClauseResult(name, UNDECIDED, "trend", detail)
    if label == "flat":
        return ClauseResult(name, FAILS, "trend", detail)
    if (label == "to-zero") == (direction == "zero"):
        return ClauseResult(name, HOLDS, "trend", detail)
    return ClauseResult(name, FAILS, "trend", detail)


def _term_slope(ns, terms):
    ns = np.asarray(ns, dtype=float)
    terms = np.asarray(terms, dtype=float)
    hi = ns[-1]
    mask = (ns >= hi / 10.0) & (terms > 0)
    if mask.sum() < 4 or ns[mask][-1] < 3 * ns[mask][0]:
        return None
    return float(np.polyfit(np.log(ns[mask]), np.log(terms[mask]), 1)[0])


def _series_clause(name, ns, terms, want, symbolic=None):
    """Decide "sum over all n of t_n" convergent/divergent; want in {'conv','div'}."""
    if symbolic is not None:
        conv = symbolic.series_converges()
        if conv is not None:
            out = HOLDS if (conv == (want == "conv")) else FAILS
            return ClauseResult(
                name, out, "closed-form", {"series_convergent": bool(conv)}
            )
    terms = np.asarray(terms, dtype=float)
    if np.all(terms <= 0):
        # identically-zero tail: the series is a finite sum
        out = HOLDS if want == "conv" else FAILS
        return ClauseResult(name, out, "exact-zero", {"max_term": float(terms.max(initial=0.0))})
    slope = _term_slope(ns, terms)
    detail = {"term_slope": slope}
    if slope is None:
        return ClauseResult(
            name, UNDECIDED, "tail-slope", {"reason": "too few positive terms in last decade"}
        )
    if slope < TERM_SLOPE_CONV:
        out = HOLDS if want == "conv" else FAILS
    elif slope > TERM_SLOPE_DIV:
        out = HOLDS if want == "div" else FAILS
    else:
        out = UNDECIDED
    return ClauseResult(name, out, "tail-slope", detail)


def _combine(clauses) -> str:
    outcomes = [c.outcome for c in clauses]
    if any(o == FAILS for o in outcomes):
        return VIOLATED
    if all(o == HOLDS for o in outcomes):
        return SATISFIED
    return INCONCLUSIVE


def _report(criterion, digest, horizon, ns, trace, clauses, trace_name, extra=None):
    diagnostics = {
        "trace_name": trace_name,
        "clauses": [c.to_dict() for c in clauses],
    }
    fitted = [
        c.detail.get("slope")
        for c in clauses
        if c.method == "trend" and c.detail.get("slope") is not None
    ]
    if fitted:
        diagnostics["fitted_slope"] = fitted[0]
    tails = [
        c.detail.get("term_slope")
        for c in clauses
        if c.method == "tail-slope" and c.detail.get("term_slope") is not None
    ]
    if tails:
        diagnostics["tail_estimate"] = tails[0]
    failures = [c.name for c in clauses if c.outcome == FAILS]
    if failures:
        diagnostics["first_failure"] = failures[0]
    if extra:
        diagnostics.update(extra)
    return CriterionReport(
        criterion=criterion,
        inputs_digest=digest,
        horizon=int(horizon),
        ns=np.asarray(ns, dtype=np.int64),
        trace=np.asarray(trace, dtype=float),
        verdict=_combine(clauses),
        diagnostics=diagnostics,
    )


def _precondition_report(criterion, digest, horizon, reason):
    clause = ClauseResult("precondition", FAILS, "precondition", {"reason": reason})
    return _report(
        criterion,
        digest,
        horizon,
        np.asarray([1], dtype=np.int64),
        np.asarray([0.0]),
        [clause],
        trace_name="empty",
        extra={"precondition_failure": reason},
    )


def _eval_at(seq, ns):
    return np.asarray([seq.eval(int(n)) for n in np.asarray(ns).ravel()], dtype=float)


def _is_nonincreasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= 1e-12 * np.maximum(np.abs(v[:-1]), 1.0)))


def _is_nondecreasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) >= -1e-12 * np.maximum(np.abs(v[:-1]), 1.0)))


def _mass_divergence_clause(mu_A, horizon, name="mass-diverges"):
    """Common preamble: the event masses sum to infinity."""
    sym = _as_pl(mu_A)
    start = max(int(getattr(mu_A, "start", 1)), 1)
    grid = _log_grid(start, horizon)
    terms = _eval_at(mu_A, grid)
    return _series_clause(name, grid, terms, want="div", symbolic=sym)


def _profile_to_pairs(profile_or_seq, horizon, kinds=None, label="mixing input"):
    """Extract (lags, values, seq_or_none) from a MixingProfile or RealSeq."""
    if isinstance(profile_or_seq, MixingProfile):
        if kinds is not None and profile_or_seq.kind not in kinds:
            raise ValueError(
                f"{label}: expected a profile of kind in {sorted(kinds)}, "
                f"got {profile_or_seq.kind!r}"
            )
        ns = np.asarray(profile_or_seq.ns, dtype=np.int64)
        vals = np.asarray(profile_or_seq.values, dtype=float)
        keep = ns <= horizon
        seq = None
        if len(ns) and ns[-1] - ns[0] == len(ns) - 1:
            seq = profile_or_seq.as_seq()
        return ns[keep], vals[keep], seq
    seq = profile_or_seq
    start = max(int(getattr(seq, "start", 1)), 1)
    grid = _log_grid(start, horizon)
    return grid, _eval_at(seq, grid), seq


def _require_dense(profile_or_seq, horizon, label):
    """A RealSeq evaluable at every lag 1..horizon (closed form or consecutive)."""
    if isinstance(profile_or_seq, MixingProfile):
        ns = np.asarray(profile_or_seq.ns, dtype=np.int64)
        if len(ns) == 0 or ns[-1] - ns[0] != len(ns) - 1 or ns[0] > 1:
            raise ValueError(
                f"{label}: cumulative sums need the rate at every lag from 1; "
                "supply a closed-form sequence or a profile with consecutive "
                "lags starting at 1"
            )
        return profile_or_seq.as_seq()
    if getattr(profile_or_seq, "start", 1) > 1:
        raise ValueError(f"{label}: sequence must start at lag 1")
    return profile_or_seq


# --------------------------------------------------------------------------
# path ensembles (Monte Carlo S_k samples)
# --------------------------------------------------------------------------


@dataclass
class PathEnsemble:
    """Hit counts of many independent trajectories at shared checkpoints.

    ``s_values[i, j]`` is the number of hits of trajectory ``i`` among the
    first ``ns[j]`` events.
    """

    ns: np.ndarray
    s_values: np.ndarray

    def __post_init__(self):
        self.ns = np.asarray(self.ns, dtype=np.int64).ravel()
        self.s_values = np.asarray(self.s_values, dtype=float)
        if self.s_values.ndim != 2:
            raise ValueError("s_values must be a 2-d array (paths x checkpoints)")
        if self.s_values.shape[1] != len(self.ns):
            raise ValueError("length mismatch: s_values columns vs checkpoints")
        if len(self.ns) == 0:
            raise ValueError("at least one checkpoint is required")
        if np.any(np.diff(self.ns) <= 0):
            raise ValueError("checkpoints must be strictly increasing")
        if np.any(self.ns < 1):
            raise ValueError("checkpoints must be >= 1")
        if np.any(self.s_values < 0):
            raise ValueError("hit counts must be nonnegative")
        if np.any(np.diff(self.s_values, axis=1) < 0):
            raise ValueError("hit counts must be nondecreasing along each path")

    @property
    def n_paths(self) -> int:
        return int(self.s_values.shape[0])

    def fingerprint(self) -> dict:
        return {
            "kind": "paths",
            "paths": self.n_paths,
            "checkpoints": [int(n) for n in self.ns],
            "sha": hashlib.sha256(self.s_values.tobytes()).hexdigest()[:16],
        }

    def restricted(self, subsequence) -> "PathEnsemble":
        """The ensemble at a subset of its checkpoints (values, not indices)."""
        want = np.asarray(subsequence, dtype=np.int64).ravel()
        pos = np.searchsorted(self.ns, want)
        bad = (pos >= len(self.ns)) | (self.ns[np.minimum(pos, len(self.ns) - 1)] != want)
        if np.any(bad):
            missing = want[bad][:4].tolist()
            raise ValueError(f"subsequence entries not among checkpoints: {missing}")
        return PathEnsemble(ns=want, s_values=self.s_values[:, pos])


def _require_paths(paths: PathEnsemble, minimum: int = 100):
    if not isinstance(paths, PathEnsemble):
        raise TypeError("paths must be a PathEnsemble")
    if paths.n_paths < minimum:
        raise ValueError(
            f"too few paths: {paths.n_paths} < {minimum} required for stable traces"
        )


# --------------------------------------------------------------------------
# second-moment ratio criterion
# --------------------------------------------------------------------------


def check_l2(e_seq: RealSeq, var_model: RealSeq, horizon=None) -> CriterionReport:
    """Hypotheses: E_n -> infinity and Var(S_n) / E_n^2 -> 0 (conclusion: L1BC).

    ``e_seq`` must be nondecreasing (it is a sum of probabilities);
    tabulated inputs of different lengths raise ``ValueError``.
    """
    var_seq = var_model
    e_h = getattr(e_seq, "horizon", None)
    v_h = getattr(var_seq, "horizon", None)
    if e_h is not None and v_h is not None and e_h != v_h:
        raise ValueError("length mismatch: E and Var tables cover different horizons")
    horizon = _resolve_horizon(horizon, e_seq, var_seq)
    digest = _digest(op="l2", e=_seq_fingerprint(e_seq), var=_seq_fingerprint(var_seq))
    start = max(int(getattr(e_seq, "start", 1)), int(getattr(var_seq, "start", 1)), 1)
    grid = _log_grid(start, horizon)
    e_vals = _eval_at(e_seq, grid)
    if not _is_nondecreasing(e_vals):
        return _precondition_report(
            "l2-variance-ratio", digest, horizon, "E_n is not nondecreasing"
        )
    v_vals = _eval_at(var_seq, grid)
    if np.any(v_vals < 0):
        return _precondition_report(
            "l2-variance-ratio", digest, horizon, "variance trace has negative entries"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(e_vals > 0, v_vals / np.maximum(e_vals, 1e-300) ** 2, np.inf)
    sym_ratio = _pl_combine(_as_pl(var_seq), _pl_power(_as_pl(e_seq), 2.0), -1)
    clauses = [
        _limit_clause("E-diverges", grid, e_vals, "inf", symbolic=_as_pl(e_seq)),
        _limit_clause("var-ratio-vanishes", grid, ratio, "zero", symbolic=sym_ratio),
    ]
    return _report(
        "l2-variance-ratio", digest, horizon, grid, ratio, clauses,
        trace_name="Var(S_n)/E_n^2",
    )


# --------------------------------------------------------------------------
# comparison-function criteria on Monte Carlo paths
# --------------------------------------------------------------------------


def _f_trace(paths: PathEnsemble, e_vals: np.ndarray):
    """Mean and SE across paths of f((S_n - E_n)/E_n) at each checkpoint."""
    dev = huber((paths.s_values - e_vals[None, :]) / e_vals[None, :])
    mean = dev.mean(axis=0)
    se = dev.std(axis=0, ddof=1) / math.sqrt(paths.n_paths) if paths.n_paths > 1 else np.zeros_like(mean)
    return mean, se


def check_f_criteria(
    samples: PathEnsemble,
    e_seq: RealSeq,
    mode: str,
    subsequence=None,
    mu_A: RealSeq | None = None,
    horizon=None,
) -> CriterionReport:
    """Comparison-function criteria on sampled hit-count paths.

    f is the clipped square x^2/2 on [-1, 1], |x| - 1/2 outside.

    * ``mode='i'``: a subsequence n_k with E_{n_k} -> infinity and
      mean f((S - E)/E) -> 0 along it (conclusion: BC).  ``subsequence``
      selects checkpoint values; default is every checkpoint.  The
      ensemble may come from a thinned (triangular) sub-family.
    * ``mode='ii'``: E_n -> infinity and mean f((S_n - E_n)/E_n) -> 0
      (conclusion: L1BC).
    * ``mode='iii'``: sum over n of (p_n / E_n) * sup_{k <= n}
      mean f((S_k - E_k)/E_n) converges (conclusion: SBC).  Note the inner
      deviations are rescaled by E_n, not E_k.
    * ``mode='variance'``: sum over n of p_n E_n^{-3} sup_{k <= n}
      Var(S_k) converges (conclusion: SBC).

    ``p_n`` (the single-event mass) is taken from ``mu_A`` when given and
    otherwise from increments of ``e_seq``.
    """
    paths = samples
    _require_paths(paths)
    if mode not in ("i", "ii", "iii", "variance"):
        raise ValueError(f"unknown mode: {mode!r}")
    horizon = _resolve_horizon(horizon, e_seq, default=int(paths.ns[-1]))
    if mode == "i" and subsequence is not None:
        paths = paths.restricted(subsequence)
    keep = paths.ns <= horizon
    if not np.any(keep):
        raise ValueError("no checkpoints at or below the horizon")
    paths = PathEnsemble(paths.ns[keep], paths.s_values[:, keep])
    grid = paths.ns
    e_vals = _eval_at(e_seq, grid)
    if np.any(e_vals <= 0):
        raise ValueError("E must be positive at every checkpoint")
    digest = _digest(
        op="f-criteria", mode=mode, paths=paths.fingerprint(),
        e=_seq_fingerprint(e_seq), mu=_seq_fingerprint(mu_A),
    )
    criterion = {
        "i": "f-subsequence",
        "ii": "f-l1",
        "iii": "f-series",
        "variance": "f-variance-series",
    }[mode]
    # E-divergence is decidable exactly when either E itself or the event
    # masses have closed form (partial sums preserve the limit kind).
    e_sym = _as_pl(e_seq)
    if e_sym is None:
        e_sym = _pl_partial_sum_asym(_as_pl(mu_A))

    if mode in ("i", "ii"):
        trace, se = _f_trace(paths, e_vals)
        e_name = "E-diverges-along-subsequence" if mode == "i" else "E-diverges"
        clauses = [
            _limit_clause(e_name, grid, e_vals, "inf", symbolic=e_sym),
            _limit_clause(
                "f-deviation-vanishes", grid, trace, "zero",
                sigma_endpoint=float(se[-1]),
            ),
        ]
        return _report(
            criterion, digest, horizon, grid, trace, clauses,
            trace_name="mean f((S_n-E_n)/E_n)",
            extra={"trace_se": se, "n_paths": paths.n_paths},
        )

    # series modes: one term per checkpoint n
    if mu_A is not None:
        p_vals = _eval_at(mu_A, grid)
    else:
        prev = _eval_at(e_seq, np.maximum(grid - 1, 1))
        p_vals = np.where(grid > 1, e_vals - prev, e_vals)
    p_vals = np.maximum(p_vals, 0.0)
    n_ck = len(grid)
    terms = np.zeros(n_ck)
    if mode == "iii":
        centered = paths.s_values - e_vals[None, :]
        for j in range(n_ck):
            scaled = huber(centered[:, : j + 1] / e_vals[j])
            sup_f = float(scaled.mean(axis=0).max())
            terms[j] = p_vals[j] / e_vals[j] * sup_f
    else:
        variances = paths.s_values.var(axis=0, ddof=1)
        running_sup = np.maximum.accumulate(variances)
        terms = p_vals * running_sup / e_vals**3
    clauses = [
        _limit_clause("E-diverges", grid, e_vals, "inf", symbolic=e_sym),
        _series_clause("series-converges", grid, terms, want="conv"),
    ]
    return _report(
        criterion, digest, horizon, grid, terms, clauses,
        trace_name="series terms at checkpoints",
        extra={"n_paths": paths.n_paths},
    )


# --------------------------------------------------------------------------
# pairwise-decoupling criteria
# --------------------------------------------------------------------------


def _pairwise_inner_sums(alpha_vals: np.ndarray, p_vals: np.ndarray) -> np.ndarray:
    """inner[k-1] = sum_{j<=k} min(alpha_j, p_k) for k = 1..H.

    Requires alpha nonincreasing; O(H log H) via the crossover index
    m_k = #{j : alpha_j > p_k}.
    """
    h = len(p_vals)
    prefix = np.concatenate([[0.0], np.cumsum(alpha_vals)])
    m = np.searchsorted(-alpha_vals, -p_vals, side="left")
    k_idx = np.arange(1, h + 1)
    cross = np.minimum(m, k_idx)
    return p_vals * cross + (prefix[k_idx] - prefix[cross])


def check_pairwise(
    gamma: RealSeq,
    phi: RealSeq,
    alpha: RealSeq,
    p: RealSeq,
    mode: str,
    horizon=None,
) -> CriterionReport:
    """Pairwise-correlation criteria from three decay legs.

    gamma bounds the relative pair excess, phi and alpha bound absolute
    pair correlations; ``p`` gives the event probabilities P(B_k).  All
    legs live in [0, 1] and gamma must be nonincreasing.

    * ``mode='i'``: gamma_n -> 0, E_n^{-1} sum_{k<=n} phi_k -> 0, and
      E_n^{-2} sum_{k<=n} sum_{j<=k} min(alpha_j, P(B_k)) -> 0
      (conclusion: L1BC).
    * ``mode='ii'``: sum gamma_k / k, sum phi_k / E_k, and
      sum_k E_k^{-2} sum_{j<=k} min(alpha_j, P(B_k)) all converge
      (conclusion: SBC).
    """
    mu_B = p
    if mode not in ("i", "ii"):
        raise ValueError(f"unknown mode: {mode!r}")
    horizon = _resolve_horizon(horizon, gamma, phi, alpha, mu_B)
    digest = _digest(
        op="pairwise", mode=mode, gamma=_seq_fingerprint(gamma),
        phi=_seq_fingerprint(phi), alpha=_seq_fingerprint(alpha),
        mu=_seq_fingerprint(mu_B),
    )
    for leg, label in ((gamma, "gamma"), (phi, "phi"), (alpha, "alpha"), (mu_B, "p")):
        if getattr(leg, "start", 1) > 1:
            raise ValueError(f"{label} must start at index 1")
    idx = np.arange(1, horizon + 1)
    gamma_vals = gamma.array(1, horizon)
    phi_vals = phi.array(1, horizon)
    alpha_vals = alpha.array(1, horizon)
    p_vals = mu_B.array(1, horizon)
    for vals, label in (
        (gamma_vals, "gamma"), (phi_vals, "phi"),
        (alpha_vals, "alpha"), (p_vals, "p"),
    ):
        if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
            raise ValueError(f"{label} values must lie in [0, 1]")
    if not _is_nonincreasing(gamma_vals):
        raise ValueError("gamma must be nonincreasing")
    if not _is_nonincreasing(alpha_vals):
        raise ValueError(
            "alpha must be nonincreasing (the crossover evaluation relies on it)"
        )
    e_vals = np.cumsum(p_vals)
    if e_vals[-1] <= 0:
        raise ValueError("p carries no mass")
    inner = _pairwise_inner_sums(alpha_vals, p_vals)
    grid = _log_grid(1, horizon)
    gi = grid - 1  # positions into the dense arrays

    mu_pl = _as_pl(mu_B)
    e_pl = _pl_partial_sum_asym(mu_pl)

    if mode == "i":
        with np.errstate(divide="ignore", invalid="ignore"):
            phi_trace = np.cumsum(phi_vals)[gi] / e_vals[gi]
            min_trace = np.cumsum(inner)[gi] / e_vals[gi] ** 2
        phi_sym = None
        phi_pl = _as_pl(phi)
        if phi_pl is not None and e_pl is not None:
            phi_sym = _pl_combine(_pl_partial_sum_asym(phi_pl), e_pl, -1)
        clauses = [
            _limit_clause("gamma-vanishes", grid, gamma_vals[gi], "zero",
                          symbolic=_as_pl(gamma)),
            _limit_clause("phi-average-vanishes", grid, phi_trace, "zero",
                          symbolic=phi_sym),
            _limit_clause("min-sum-vanishes", grid, min_trace, "zero"),
        ]
        return _report(
            "pairwise-l1", digest, horizon, grid, min_trace, clauses,
            trace_name="E_n^{-2} sum_{k<=n} sum_{j<=k} min(alpha_j, P(B_k))",
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        gamma_terms = gamma_vals / idx
        phi_terms = np.where(e_vals > 0, phi_vals / np.maximum(e_vals, 1e-300), np.inf)
        min_terms = np.where(e_vals > 0, inner / np.maximum(e_vals, 1e-300) ** 2, np.inf)
    gamma_sym = None
    g_pl = _as_pl(gamma)
    if g_pl is not None:
        gamma_sym = g_pl.scaled_by_power(-1.0)
    phi_term_sym = None
    phi_pl = _as_pl(phi)
    if phi_pl is not None and e_pl is not None:
        phi_term_sym = _pl_combine(phi_pl, e_pl, -1)
    clauses = [
        _series_clause("gamma-series", grid, gamma_terms[gi], want="conv",
                       symbolic=gamma_sym),
        _series_clause("phi-series", grid, phi_terms[gi], want="conv",
                       symbolic=phi_term_sym),
        _series_clause("min-series", grid, min_terms[gi], want="conv"),
    ]
    return _report(
        "pairwise-strong", digest, horizon, grid, min_terms[gi], clauses,
        trace_name="E_k^{-2} sum_{j<=k} min(alpha_j, P(B_k))",
    )


# --------------------------------------------------------------------------
# strong-mixing (alpha) criteria
# --------------------------------------------------------------------------


def _alpha_inverse_indices(alpha_vals: np.ndarray, us: np.ndarray):
    """Vectorized inf{ n : alpha_n <= u } over a nonincreasing table.

    Returns 1-based indices; entries equal to len+1 mean "beyond horizon".
    """
    return np.searchsorted(-alpha_vals, -np.asarray(us, dtype=float), side="left") + 1


def _eta_inverse(alpha_vals: np.ndarray, u: float):
    """inf{ x >= 1 real : alpha([x]) / x <= u }, with piecewise refinement.

    Returns None when the infimum lies beyond the tabulated horizon.
    """
    h = len(alpha_vals)
    eta = alpha_vals / np.arange(1, h + 1)
    pos = np.searchsorted(-eta, -u, side="left")  # first integer m with eta(m) <= u
    if pos >= h:
        return None
    m_star = pos + 1
    if m_star > 1:
        cand = alpha_vals[m_star - 2] / u if u > 0 else math.inf
        if m_star - 1 <= cand < m_star:
            return float(cand)
    return float(m_star)


def check_alpha(
    alpha,
    mu_A: RealSeq,
    mode: str,
    params: dict | None = None,
    horizon=None,
) -> CriterionReport:
    """Criteria driven by the alpha(infinity, 1) dependence rate.

    ``alpha`` is a MixingProfile (kind alpha_inf1) or a RealSeq; ``mu_A``
    gives the event masses mu(A_n).  ``params`` options:

    * ``a``, ``C`` — polynomial-rate constants (required by poly modes);
    * ``theta_grid`` — witness exponents for ``mode='strong'``;
    * ``doubling_window`` — (lo_fraction, hi_fraction) of the horizon over
      which the halving ratio of alpha is probed in ``mode='nested-BC'``.

    Modes and their hypothesis sets:

    * ``'nested-BC'``: mu(A_n) nonincreasing, alpha nonincreasing with a
      geometric-type halving bound, mu(A_n)/alpha(n) -> infinity, and
      sum mu(A_n) / alpha^{-1}(mu(A_n)) = infinity (conclusion: BC).
    * ``'L1'``: with eta(x) = alpha([x])/x, E_n^{-1} eta^{-1}(1/n) -> 0
      (conclusion: L1BC).
    * ``'strong'``: some witness u_n = n^{-theta} makes both
      sum mu(A_n) u_n / E_n and sum mu(A_n) E_n^{-2} alpha^{-1}(E_n u_n / n)
      converge (conclusion: SBC).  No witness on the grid is reported as
      inconclusive, not violated.
    * ``'poly-1'``/``'poly-2'``/``'poly-3'``: specializations for
      alpha(n) <= C n^{-a}: divergence of sum mu(A_n)^{(a+1)/a} together
      with n^a mu(A_n) -> infinity (BC); n^{-1/(a+1)} E_n -> infinity
      (L1BC); convergence of sum n^{1/(a+1)} mu(A_n) / E_n^2 (SBC).

    Precondition failures (masses or alpha not monotone where required)
    yield a ``violated`` report with the reason, not an exception.
    """
    params = dict(params or {})
    modes = ("nested-BC", "L1", "strong", "poly-1", "poly-2", "poly-3")
    if mode not in modes:
        raise ValueError(f"unknown mode: {mode!r}; expected one of {modes}")
    horizon = _resolve_horizon(
        horizon,
        alpha if not isinstance(alpha, MixingProfile) else None,
        mu_A,
    )
    if isinstance(alpha, MixingProfile):
        horizon = min(horizon, int(np.asarray(alpha.ns)[-1]))
    digest = _digest(
        op="alpha", mode=mode, alpha=_seq_fingerprint(alpha),
        mu=_seq_fingerprint(mu_A),
        params={k: params[k] for k in sorted(params)},
    )
    criterion = "alpha-" + mode.lower()
    mu_pl = _as_pl(mu_A)
    mu_start = max(int(getattr(mu_A, "start", 1)), 1)
    grid = _log_grid(mu_start, horizon)
    mu_grid = _eval_at(mu_A, grid)
    mass_clause = _mass_divergence_clause(mu_A, horizon)

    if mode.startswith("poly-"):
        if "a" not in params:
            raise ValueError("poly modes require params['a'] (the decay exponent)")
        a = float(params["a"])
        if a <= 0:
            raise ValueError("params['a'] must be positive")
        e_pl = _pl_partial_sum_asym(mu_pl)
        if mode == "poly-1":
            if not _is_nonincreasing(mu_grid):
                return _precondition_report(
                    criterion, digest, horizon, "mu(A_n) is not nonincreasing"
                )
            powered_sym = _pl_power(mu_pl, (a + 1) / a)
            powered_terms = mu_grid ** ((a + 1) / a)
            growth_sym = mu_pl.scaled_by_power(a) if mu_pl is not None else None
            growth_trace = grid.astype(float) ** a * mu_grid
            clauses = [
                mass_clause,
                _series_clause("powered-mass-diverges", grid, powered_terms,
                               want="div", symbolic=powered_sym),
                _limit_clause("scaled-mass-diverges", grid, growth_trace, "inf",
                              symbolic=growth_sym),
            ]
            return _report(
                criterion, digest, horizon, grid, growth_trace, clauses,
                trace_name="n^a mu(A_n)", extra={"a": a},
            )
        e_grid = _eval_at(partial_sums(mu_A, horizon), grid)
        if mode == "poly-2":
            scaled = e_grid * grid.astype(float) ** (-1.0 / (a + 1))
            sym = e_pl.scaled_by_power(-1.0 / (a + 1)) if e_pl is not None else None
            clauses = [
                mass_clause,
                _limit_clause("scaled-count-diverges", grid, scaled, "inf",
                              symbolic=sym),
            ]
            return _report(
                criterion, digest, horizon, grid, scaled, clauses,
                trace_name="n^{-1/(a+1)} E_n", extra={"a": a},
            )
        # poly-3
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(
                e_grid > 0,
                grid.astype(float) ** (1.0 / (a + 1)) * mu_grid
                / np.maximum(e_grid, 1e-300) ** 2,
                np.inf,
            )
        sym = None
        if mu_pl is not None and e_pl is not None:
            num = mu_pl.scaled_by_power(1.0 / (a + 1))
            sym = _pl_combine(num, _pl_power(e_pl, 2.0), -1)
        clauses = [
            mass_clause,
            _series_clause("weighted-series-converges", grid, terms,
                           want="conv", symbolic=sym),
        ]
        return _report(
            criterion, digest, horizon, grid, terms, clauses,
            trace_name="n^{1/(a+1)} mu(A_n) / E_n^2", extra={"a": a},
        )

    # general modes need alpha values
    a_ns, a_vals, a_seq = _profile_to_pairs(
        alpha, horizon, kinds={ALPHA_INF1}, label="alpha"
    )
    if len(a_vals) == 0:
        raise ValueError("alpha has no entries at or below the horizon")
    if not _is_nonincreasing(a_vals):
        return _precondition_report(
            criterion, digest, horizon, "alpha is not nonincreasing"
        )
    a_pl = _as_pl(alpha) if not isinstance(alpha, MixingProfile) else None
    dense_alpha = None
    if a_seq is not None:
        lo = int(getattr(a_seq, "start", 1))
        hi = min(horizon, int(getattr(a_seq, "horizon", horizon) or horizon))
        if lo <= 1 and hi >= 1:
            dense_alpha = a_seq.array(1, hi)

    if mode == "nested-BC":
        if not _is_nonincreasing(mu_grid):
            return _precondition_report(
                criterion, digest, horizon, "mu(A_n) is not nonincreasing"
            )
        # halving bound alpha(2n) <= (1 - delta) alpha(n) eventually
        if a_pl is not None:
            if isinstance(a_pl, PowerLogSeq) and a_pl.p > 0:
                doubling = ClauseResult(
                    "alpha-halving", HOLDS, "closed-form",
                    {"limit_ratio": 2.0 ** (-a_pl.p)},
                )
            else:
                doubling = ClauseResult(
                    "alpha-halving", FAILS, "closed-form",
                    {"limit_ratio": 1.0,
                     "reason": "alpha(2n)/alpha(n) -> 1 for sub-polynomial decay"},
                )
        elif isinstance(alpha, GeometricSeq):
            doubling = ClauseResult(
                "alpha-halving", HOLDS, "closed-form", {"limit_ratio": 0.0}
            )
        else:
            lo_f, hi_f = params.get("doubling_window", (0.01, 0.5))
            lo_n = max(int(a_ns[0]), int(lo_f * horizon), 1)
            hi_n = int(hi_f * horizon)
            probe = a_ns[(a_ns >= lo_n) & (2 * a_ns <= min(horizon, 2 * hi_n))]
            if len(probe) < 4 or dense_alpha is None:
                doubling = ClauseResult(
                    "alpha-halving", UNDECIDED, "trend",
                    {"reason": "too few lags to probe alpha(2n)/alpha(n)"},
                )
            else:
                num = dense_alpha[2 * probe - 1]
                den = dense_alpha[probe - 1]
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratios = np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)
                worst = float(ratios.max(initial=0.0))
                if worst <= 0.995:
                    doubling = ClauseResult(
                        "alpha-halving", HOLDS, "trend",
                        {"max_ratio": worst, "delta": 1.0 - worst},
                    )
                elif worst >= 1.0:
                    doubling = ClauseResult(
                        "alpha-halving", FAILS, "trend", {"max_ratio": worst}
                    )
                else:
                    doubling = ClauseResult(
                        "alpha-halving", UNDECIDED, "trend", {"max_ratio": worst}
                    )
        # mu(A_n) / alpha(n) -> infinity
        ratio_sym = _pl_combine(mu_pl, a_pl, -1)
        ratio_grid = grid[grid <= (a_ns[-1] if len(a_ns) else horizon)]
        if dense_alpha is not None:
            a_on_grid = dense_alpha[ratio_grid - 1]
        else:
            a_on_grid = np.interp(ratio_grid, a_ns, a_vals)
        mu_on_grid = _eval_at(mu_A, ratio_grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_vals = np.where(
                a_on_grid > 0, mu_on_grid / np.maximum(a_on_grid, 1e-300), np.inf
            )
        finite = np.isfinite(ratio_vals)
        if np.all(finite):
            ratio_clause = _limit_clause(
                "mass-dominates-alpha", ratio_grid, ratio_vals, "inf",
                symbolic=ratio_sym,
            )
        else:
            ratio_clause = ClauseResult(
                "mass-dominates-alpha", HOLDS, "exact-zero",
                {"reason": "alpha vanishes while masses stay positive"},
            ) if np.all(mu_on_grid[~finite] > 0) else ClauseResult(
                "mass-dominates-alpha", UNDECIDED, "trend",
                {"reason": "alpha and mass both vanish on part of the grid"},
            )
        # sum mu(A_n) / alpha^{-1}(mu(A_n)) diverges
        inv_clause, inv_terms = _nested_inverse_series(
            grid, mu_grid, mu_pl, a_pl, dense_alpha
        )
        clauses = [mass_clause, doubling, ratio_clause, inv_clause]
        return _report(
            criterion, digest, horizon, grid, inv_terms, clauses,
            trace_name="mu(A_n) / alpha^{-1}(mu(A_n))",
        )

    e_tab = partial_sums(mu_A, horizon)
    e_grid = _eval_at(e_tab, grid)

    if mode == "L1":
        sym = None
        if a_pl is not None and a_pl.q == 0 and a_pl.p > 0 and mu_pl is not None:
            # eta(x) ~ c x^{-(a+1)}; eta^{-1}(1/n) ~ (c n)^{1/(a+1)}
            a_exp = a_pl.p
            e_pl = _pl_partial_sum_asym(mu_pl)
            if e_pl is not None:
                num = _pl_make(
                    a_pl.c ** (1.0 / (a_exp + 1)), -1.0 / (a_exp + 1), 0.0, 0.0, 1
                )
                sym = _pl_combine(num, e_pl, -1)
        if dense_alpha is None and sym is None:
            raise ValueError(
                "mode 'L1' needs alpha at every lag (closed form or a profile "
                "with consecutive lags from 1)"
            )
        trace = np.full(len(grid), np.nan)
        if dense_alpha is not None:
            for j, n in enumerate(grid):
                x = _eta_inverse(dense_alpha, 1.0 / float(n))
                if x is not None and e_grid[j] > 0:
                    trace[j] = x / e_grid[j]
        known = np.isfinite(trace)
        if sym is not None:
            clause = _limit_clause("eta-inverse-vanishes", grid, trace, "zero",
                                   symbolic=sym)
        elif known.sum() >= 4:
            clause = _limit_clause(
                "eta-inverse-vanishes", grid[known], trace[known], "zero"
            )
        else:
            clause = ClauseResult(
                "eta-inverse-vanishes", UNDECIDED, "trend",
                {"reason": "eta-inverse exceeds the tabulated alpha horizon"},
            )
        clauses = [mass_clause, clause]
        return _report(
            criterion, digest, horizon, grid, trace, clauses,
            trace_name="eta^{-1}(1/n) / E_n",
        )

    # mode == "strong": witness search over u_n = n^{-theta}
    theta_grid = tuple(params.get("theta_grid", _THETA_GRID))
    attempts = []
    witness = None
    for theta in theta_grid:
        u_grid = grid.astype(float) ** (-theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            s1 = np.where(e_grid > 0, mu_grid * u_grid / np.maximum(e_grid, 1e-300),
                          np.inf)
        s1_sym = None
        if mu_pl is not None:
            e_pl = _pl_partial_sum_asym(mu_pl)
            s1_sym = _pl_combine(mu_pl.scaled_by_power(-theta), e_pl, -1)
        c1 = _series_clause(f"mass-series(theta={theta})", grid, s1, want="conv",
                            symbolic=s1_sym)
        args = np.where(grid > 0, e_grid * u_grid / grid.astype(float), np.inf)
        if a_pl is not None and a_pl.q == 0 and a_pl.p > 0:
            with np.errstate(divide="ignore"):
                inv_vals = np.ceil((a_pl.c / np.maximum(args, 1e-300)) ** (1.0 / a_pl.p))
            inv_vals = np.maximum(inv_vals, 1.0)
            beyond = np.zeros(len(grid), dtype=bool)
        elif dense_alpha is not None:
            raw = _alpha_inverse_indices(dense_alpha, args)
            beyond = raw > len(dense_alpha)
            inv_vals = raw.astype(float)
        else:
            attempts.append({"theta": theta, "status": "alpha not dense enough"})
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            s2 = np.where(e_grid > 0, mu_grid * inv_vals / np.maximum(e_grid, 1e-300) ** 2,
                          np.inf)
        if np.any(beyond[grid >= grid[-1] / 10]):
            c2 = ClauseResult(
                f"inverse-series(theta={theta})", UNDECIDED, "tail-slope",
                {"reason": "alpha inverse beyond tabulated horizon in last decade"},
            )
        else:
            c2 = _series_clause(f"inverse-series(theta={theta})", grid, s2,
                                want="conv")
        attempts.append({
            "theta": theta,
            "mass_series": c1.outcome,
            "inverse_series": c2.outcome,
        })
        if c1.outcome == HOLDS and c2.outcome == HOLDS:
            witness = (theta, c1, c2, s2)
            break
    if witness is not None:
        theta, c1, c2, s2 = witness
        clauses = [mass_clause, c1, c2]
        return _report(
            criterion, digest, horizon, grid, s2, clauses,
            trace_name="mu(A_n) alpha^{-1}(E_n u_n / n) / E_n^2",
            extra={"witness_theta": theta, "attempts": attempts},
        )
    no_witness = ClauseResult(
        "witness-search", UNDECIDED, "witness-grid",
        {"reason": "no witness found on the theta grid", "attempts": attempts},
    )
    clauses = [mass_clause, no_witness]
    return _report(
        criterion, digest, horizon, grid, np.full(len(grid), np.nan), clauses,
        trace_name="no witness", extra={"attempts": attempts},
    )


def _nested_inverse_series(grid, mu_grid, mu_pl, a_pl, dense_alpha):
    """Clause: sum mu(A_n) / alpha^{-1}(mu(A_n)) diverges."""
    name = "inverse-weighted-mass-diverges"
    if a_pl is not None and a_pl.q == 0 and a_pl.p > 0:
        with np.errstate(divide="ignore"):
            inv = np.ceil((a_pl.c / np.maximum(mu_grid, 1e-300)) ** (1.0 / a_pl.p))
        inv = np.maximum(inv, 1.0)
        terms = np.where(mu_grid > 0, mu_grid / inv, 0.0)
        sym = _nested_symbolic_inverse_terms(mu_pl, a_pl)
        return _series_clause(name, grid, terms, want="div", symbolic=sym), terms
    if dense_alpha is None:
        return (
            ClauseResult(
                name, UNDECIDED, "tail-slope",
                {"reason": "alpha not dense enough to invert"},
            ),
            np.full(len(grid), np.nan),
        )
    raw = _alpha_inverse_indices(dense_alpha, mu_grid)
    beyond = raw > len(dense_alpha)
    terms = np.where(mu_grid > 0, mu_grid / np.maximum(raw.astype(float), 1.0), 0.0)
    if np.any(beyond[grid >= grid[-1] / 10]):
        return (
            ClauseResult(
                name, UNDECIDED, "tail-slope",
                {"reason": "alpha inverse beyond tabulated horizon in last decade"},
            ),
            terms,
        )
    return _series_clause(name, grid, terms, want="div"), terms


def _nested_symbolic_inverse_terms(mu_pl, a_pl):
    """Symbolic term shape mu * (mu/c)^{1/a} for pure-power alpha, or None."""
    if mu_pl is None or a_pl is None or a_pl.q != 0 or a_pl.p <= 0:
        return None
    a = a_pl.p
    scaled = _pl_power(mu_pl, 1.0 + 1.0 / a)
    if scaled is None:
        return None
    return _pl_make(scaled.c * a_pl.c ** (-1.0 / a), scaled.p, scaled.q,
                    scaled.shift, scaled.start)


# --------------------------------------------------------------------------
# beta / quantile-envelope criterion
# --------------------------------------------------------------------------


def check_beta_strong(
    beta,
    qstar,
    qstar_bound: float | None = None,
    horizon=None,
) -> CriterionReport:
    """Hypothesis: sum over j of beta(j) Q*(beta(j)) / j converges (SBC).

    ``beta`` is a MixingProfile (kind beta_inf1) or a nonincreasing RealSeq;
    ``qstar`` is a callable u -> Q*(u) with Q*(0) = 0 and Q*(u) >= 1 for
    u > 0.  ``qstar_bound``, when given, certifies sup_u Q*(u) <= bound and
    enables an exact convergent majorant for closed-form beta; the exact
    divergent minorant sum beta(j)/j needs no bound (Q* >= 1).
    """
    if not callable(qstar):
        raise TypeError("qstar must be callable")
    if qstar_bound is not None and qstar_bound < 1:
        raise ValueError("qstar_bound must be >= 1 (Q* is at least 1 where positive)")
    horizon = _resolve_horizon(
        horizon, beta if not isinstance(beta, MixingProfile) else None
    )
    if isinstance(beta, MixingProfile):
        horizon = min(horizon, int(np.asarray(beta.ns)[-1]))
    digest = _digest(
        op="beta-strong", beta=_seq_fingerprint(beta),
        bound=qstar_bound if qstar_bound is not None else "none",
    )
    b_ns, b_vals, _ = _profile_to_pairs(beta, horizon, kinds={BETA_INF1}, label="beta")
    if len(b_vals) == 0:
        raise ValueError("beta has no entries at or below the horizon")
    if not _is_nonincreasing(b_vals):
        raise ValueError("beta must be nonincreasing")
    if np.any(b_vals < 0) or np.any(b_vals > 1 + 1e-12):
        raise ValueError("beta values must lie in [0, 1]")
    b_pl = _as_pl(beta) if not isinstance(beta, MixingProfile) else None

    terms = np.zeros(len(b_ns))
    q_vals = np.zeros(len(b_ns))
    for i, (n, b) in enumerate(zip(b_ns, b_vals)):
        if b <= 0:
            continue
        q_raw = qstar(float(b))
        q = float(getattr(q_raw, "value", q_raw))
        if q < 1 - 1e-12:
            raise ValueError("qstar returned a value below 1 at a positive argument")
        q_vals[i] = q
        terms[i] = b * q / float(n)

    minorant = b_pl.scaled_by_power(-1.0) if b_pl is not None else None
    clause = None
    if minorant is not None:
        conv = minorant.series_converges()
        if conv is False:
            # Q* >= 1, so the full series dominates a divergent one
            clause = ClauseResult(
                "envelope-series-converges", FAILS, "closed-form",
                {"reason": "sum beta(j)/j diverges and Q* >= 1"},
            )
        elif conv is True and qstar_bound is not None:
            clause = ClauseResult(
                "envelope-series-converges", HOLDS, "closed-form",
                {"reason": f"sum beta(j)/j converges and Q* <= {qstar_bound}"},
            )
    if clause is None:
        clause = _series_clause("envelope-series-converges", b_ns, terms, want="conv")
    return _report(
        "beta-qstar-series", digest, horizon, b_ns, terms, [clause],
        trace_name="beta(j) Q*(beta(j)) / j",
        extra={"qstar_values": q_vals, "qstar_bound": qstar_bound},
    )


# --------------------------------------------------------------------------
# tilde-coefficient (conditional half-line) criteria
# --------------------------------------------------------------------------


def check_tilde(
    tb,
    mu_I: RealSeq,
    lq_bound: float | None = None,
    p: float = 1.0,
    mode: str = "i",
    limsup_floor=None,
    horizon=None,
) -> CriterionReport:
    """Criteria driven by conditional half-line dependence rates.

    ``tb`` is the tilde coefficient: a MixingProfile of kind
    tilde_beta11 or tilde_beta_rev (modes i-iii; the reversed-time
    variant is interchangeable here) or tilde_phi11 (modes iv-v), or a
    plain RealSeq.  ``mu_I`` gives the event masses.  Modes:

    * ``'i'``   - positive limsup mass and sum of the rate converges (BC).
      Requires ``limsup_floor``: a float or an object with a ``floor``
      attribute (a union-mass lower estimate for the limsup set).
    * ``'ii'``  - E_n^{-p} sum_{k<n} k^{p-1} rate(k) -> 0 and the
      L^q-ratio bound is finite, q conjugate to p (L1BC).
      Requires ``lq_bound``.
    * ``'iii'`` - sum_n mu(I_n) E_n^{-2} (sum_{k<n} k^{p-1} rate(k))^{1/p}
      converges, plus the same L^q bound (SBC).
    * ``'iv'``  - E_n^{-1} sum_{k<n} rate(k) -> 0 (L1BC).
    * ``'v'``   - sum_n rate(n) / E_n converges (SBC).
    """
    rate = tb
    if mode not in ("i", "ii", "iii", "iv", "v"):
        raise ValueError(f"unknown mode: {mode!r}")
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    beta_kinds = {TILDE_BETA11, TILDE_BETA_REV}
    phi_kinds = {TILDE_PHI11}
    kinds = beta_kinds if mode in ("i", "ii", "iii") else phi_kinds
    horizon = _resolve_horizon(
        horizon, rate if not isinstance(rate, MixingProfile) else None, mu_I
    )
    if isinstance(rate, MixingProfile):
        if rate.kind not in kinds:
            raise ValueError(
                f"mode {mode!r} expects a rate of kind in {sorted(kinds)}, "
                f"got {rate.kind!r}"
            )
        horizon = min(horizon, int(np.asarray(rate.ns)[-1]))
    digest = _digest(
        op="tilde", mode=mode, p=p, rate=_seq_fingerprint(rate),
        mu=_seq_fingerprint(mu_I),
        lq=lq_bound if lq_bound is not None else "none",
    )
    criterion = f"tilde-{mode}"
    mu_start = max(int(getattr(mu_I, "start", 1)), 1)
    grid = _log_grid(mu_start, horizon)
    mass_clause = _mass_divergence_clause(mu_I, horizon, name="mass-diverges")
    first_mass = float(mu_I.eval(mu_start))
    if first_mass <= 0:
        return _precondition_report(
            criterion, digest, horizon, "the first event carries no mass"
        )

    def lq_clause():
        if lq_bound is None:
            raise ValueError(
                f"mode {mode!r} requires lq_bound (sup_n E_n^-1 ||sum of "
                "indicators||_q, q conjugate to p); missing lq_bound"
            )
        if not math.isfinite(lq_bound) or lq_bound <= 0:
            return ClauseResult(
                "lq-ratio-bounded", FAILS, "given-bound", {"bound": lq_bound}
            )
        return ClauseResult(
            "lq-ratio-bounded", HOLDS, "given-bound", {"bound": float(lq_bound)}
        )

    if mode == "i":
        if limsup_floor is None:
            raise ValueError(
                "mode 'i' requires limsup_floor (a float or an object with a "
                "'floor' attribute, e.g. a limsup probe report)"
            )
        floor = getattr(limsup_floor, "floor", limsup_floor)
        floor = float(floor)
        if floor > FLAT_FLOOR:
            floor_clause = ClauseResult(
                "limsup-mass-positive", HOLDS, "probe-floor", {"floor": floor}
            )
        else:
            floor_clause = ClauseResult(
                "limsup-mass-positive", FAILS, "probe-floor",
                {"floor": floor, "reason": "no evidence of positive limsup mass"},
            )
        r_ns, r_vals, _ = _profile_to_pairs(rate, horizon, kinds=kinds, label="rate")
        r_pl = _as_pl(rate) if not isinstance(rate, MixingProfile) else None
        series = _series_clause("rate-series-converges", r_ns, r_vals,
                                want="conv", symbolic=r_pl)
        clauses = [mass_clause, floor_clause, series]
        return _report(
            criterion, digest, horizon, r_ns, r_vals, clauses,
            trace_name="rate(k)",
        )

    e_tab = partial_sums(mu_I, horizon)
    e_grid = _eval_at(e_tab, grid)
    mu_pl = _as_pl(mu_I)
    e_pl = _pl_partial_sum_asym(mu_pl)
    r_pl = _as_pl(rate) if not isinstance(rate, MixingProfile) else None

    if mode in ("iv", "v"):
        r_ns, r_vals, r_seq = _profile_to_pairs(rate, horizon, kinds=kinds,
                                                label="rate")
        if mode == "v":
            probe = r_ns[r_ns >= mu_start]
            e_at = _eval_at(e_tab, probe)
            vals_at = r_vals[r_ns >= mu_start]
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(e_at > 0, vals_at / np.maximum(e_at, 1e-300), np.inf)
            sym = _pl_combine(r_pl, e_pl, -1)
            clause = _series_clause("phi-series-converges", probe, terms,
                                    want="conv", symbolic=sym)
            clauses = [mass_clause, clause]
            return _report(
                criterion, digest, horizon, probe, terms, clauses,
                trace_name="rate(n) / E_n",
            )
        dense = _require_dense(rate, horizon, "rate") if r_seq is None else r_seq
        r_dense = dense.array(1, horizon)
        cum = np.concatenate([[0.0], np.cumsum(r_dense)])
        sums_before = cum[np.maximum(grid - 1, 0)]
        with np.errstate(divide="ignore", invalid="ignore"):
            trace = np.where(e_grid > 0, sums_before / np.maximum(e_grid, 1e-300),
                             np.inf)
        sym = None
        if r_pl is not None and e_pl is not None:
            sym = _pl_combine(_pl_partial_sum_asym(r_pl), e_pl, -1)
        clause = _limit_clause("phi-average-vanishes", grid, trace, "zero",
                               symbolic=sym)
        clauses = [mass_clause, clause]
        return _report(
            criterion, digest, horizon, grid, trace, clauses,
            trace_name="E_n^{-1} sum_{k<n} rate(k)",
        )

    # modes ii / iii: weighted cumulative sums of the rate
    bound_clause = lq_clause()
    dense = _require_dense(rate, horizon, "rate")
    r_dense = dense.array(1, horizon)
    weights = np.arange(1, horizon + 1, dtype=float) ** (p - 1.0)
    cum = np.concatenate([[0.0], np.cumsum(weights * r_dense)])
    sums_before = cum[np.maximum(grid - 1, 0)]
    inner_sym = None
    if r_pl is not None:
        inner_sym = _pl_partial_sum_asym(
            r_pl.scaled_by_power(p - 1.0) if p != 1.0 else r_pl
        )
    if mode == "ii":
        with np.errstate(divide="ignore", invalid="ignore"):
            trace = np.where(
                e_grid > 0, sums_before / np.maximum(e_grid, 1e-300) ** p, np.inf
            )
        sym = None
        if inner_sym is not None and e_pl is not None:
            sym = _pl_combine(inner_sym, _pl_power(e_pl, p), -1)
        clauses = [
            mass_clause,
            _limit_clause("weighted-average-vanishes", grid, trace, "zero",
                          symbolic=sym),
            bound_clause,
        ]
        return _report(
            criterion, digest, horizon, grid, trace, clauses,
            trace_name="E_n^{-p} sum_{k<n} k^{p-1} rate(k)",
        )
    # mode iii
    mu_grid = _eval_at(mu_I, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            e_grid > 0,
            mu_grid * sums_before ** (1.0 / p) / np.maximum(e_grid, 1e-300) ** 2,
            np.inf,
        )
    sym = None
    if inner_sym is not None and e_pl is not None and mu_pl is not None:
        inner_rooted = _pl_power(inner_sym, 1.0 / p)
        num = _pl_combine(mu_pl, inner_rooted, +1)
        sym = _pl_combine(num, _pl_power(e_pl, 2.0), -1)
    clauses = [
        mass_clause,
        _series_clause("weighted-series-converges", grid, terms, want="conv",
                       symbolic=sym),
        bound_clause,
    ]
    return _report(
        criterion, digest, horizon, grid, terms, clauses,
        trace_name="mu(I_n) E_n^{-2} (sum_{k<n} k^{p-1} rate(k))^{1/p}",
    )


# --------------------------------------------------------------------------
# renewal-divergence criterion for nested families
# --------------------------------------------------------------------------


def check_renewal_nested(
    nu_A: RealSeq,
    nested: bool = True,
    horizon=None,
) -> CriterionReport:
    """Hypothesis: the family is nested and its renewal-measure masses
    nu(A_k) sum to infinity (conclusion: BC for regenerating chains whose
    excursion-entry law is nu).

    ``nu_A`` gives nu(A_k); ``nested`` asserts A_1 ⊇ A_2 ⊇ ... (the caller
    certifies the geometry; a non-nested family yields ``violated``).
    """
    horizon = _resolve_horizon(horizon, nu_A)
    digest = _digest(op="renewal-nested", nu=_seq_fingerprint(nu_A),
                     nested=bool(nested))
    if not nested:
        return _precondition_report(
            "renewal-nested", digest, horizon, "family is not nested"
        )
    start = max(int(getattr(nu_A, "start", 1)), 1)
    grid = _log_grid(start, horizon)
    terms = _eval_at(nu_A, grid)
    if np.any(terms < 0):
        return _precondition_report(
            "renewal-nested", digest, horizon, "nu(A_k) has negative entries"
        )
    if not _is_nonincreasing(terms):
        return _precondition_report(
            "renewal-nested", digest, horizon,
            "nu(A_k) is not nonincreasing (family cannot be nested)",
        )
    clause = _series_clause("renewal-mass-diverges", grid, terms, want="div",
                            symbolic=_as_pl(nu_A))
    return _report(
        "renewal-nested", digest, horizon, grid, terms, [clause],
        trace_name="nu(A_k)",
    )


# --------------------------------------------------------------------------
# sparsification schedule
# --------------------------------------------------------------------------


@dataclass
class SparsePlan:
    """Dyadic thinning schedule for a nested family.

    Level L occupies plan positions ``j[L] .. j[L+1]-1`` and keeps every
    2^{k[L]}-th index starting at 2^L; ``psi[i]`` is the original index
    kept at plan position i.  The retained mass up to level N is bounded
    below by sum over L <= N of 2^{L-k[L]} mu(A_{2^L}), which
    :meth:`lower_bound_trace` tabulates.
    """

    ks: np.ndarray
    js: np.ndarray
    psi: np.ndarray
    products: np.ndarray  # eps_{2^L} * mu(A_{2^L}) per level

    @property
    def levels(self) -> int:
        return len(self.ks)

    def block(self, level: int) -> np.ndarray:
        return self.psi[self.js[level]: self.js[level + 1]]

    def lower_bound_trace(self, mu_pow2) -> np.ndarray:
        """Cumulative sum over levels of block-length x mu(A_{2^L})."""
        mu = np.asarray(
            [mu_pow2.eval(L) if hasattr(mu_pow2, "eval") else mu_pow2[L]
             for L in range(self.levels)],
            dtype=float,
        )
        lengths = np.diff(self.js).astype(float)
        return np.cumsum(lengths * mu)


def sparsify_psi(eps, mu_A_pow2, alpha_star_inv, l_max: int) -> SparsePlan:
    """Build the thinning schedule psi for levels 0..l_max.

    ``eps`` is the slack sequence in its natural index (a RealSeq
    evaluated at n = 2^L, or an indexable of per-level values);
    ``mu_A_pow2`` is level-indexed (entry L holds mu(A_{2^L}); a RealSeq
    here must start at 0).  ``alpha_star_inv`` maps u -> inf{ n :
    alpha*(n) <= u } (an integer, or INF_INDEX when alpha* never dips
    that low; e.g. ``functools.partial(inverse_sequence, alpha)``).

    Level L keeps indices 2^L, 2^L + 2^{k_L}, 2^L + 2*2^{k_L}, ... where
    k_L = min(L, ceil(log2 of the inverse at eps*mu)), clamped so the
    retained indices stay inside [2^L, 2^{L+1}).
    """
    if l_max < 0:
        raise ValueError("l_max must be >= 0")

    def _eps_value(seq, level):
        if hasattr(seq, "eval"):
            return float(seq.eval(1 << level))
        return float(seq[level])

    def _mu_value(seq, level):
        if hasattr(seq, "eval"):
            return float(seq.eval(level))
        return float(seq[level])

    ks = np.zeros(l_max + 1, dtype=np.int64)
    js = np.zeros(l_max + 2, dtype=np.int64)
    products = np.zeros(l_max + 1)
    psi_parts = []
    for level in range(l_max + 1):
        eps_l = _eps_value(eps, level)
        mu_l = _mu_value(mu_A_pow2, level)
        if eps_l < 0 or mu_l < 0:
            raise ValueError("eps and mu values must be nonnegative")
        products[level] = eps_l * mu_l
        inv = alpha_star_inv(products[level])
        if inv == INF_INDEX:
            k_l = level
        else:
            # ceil(log2(max(inv, 1))) computed exactly on integers
            k_l = min(level, (max(int(inv), 1) - 1).bit_length())
        ks[level] = k_l
        length = 1 << (level - k_l)
        js[level + 1] = js[level] + length
        base = 1 << level
        step = 1 << k_l
        psi_parts.append(base + step * np.arange(length, dtype=np.int64))
    return SparsePlan(
        ks=ks, js=js, psi=np.concatenate(psi_parts), products=products
    )
