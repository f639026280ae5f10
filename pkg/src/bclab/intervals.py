"""Interval algebra on the line and the torus, with measure oracles.

Intervals are stored half-open [lo, hi) internally; closure flags are kept
as metadata only and ignored by the Lebesgue-type oracles, which removes
any ambiguity at shared endpoints.  Torus intervals may wrap (lo > hi) and
are split lazily into at most two line pieces inside algorithms.  All piece
manipulation below only ever copies existing endpoints, never invents new
floats, so set identities hold exactly on point grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .seqcore import RealSeq, seq_from_json, seq_to_json

LINE = "line"
TORUS = "torus"


@dataclass(frozen=True)
class Interval:
    space: str = LINE
    lo: float = 0.0
    hi: float = 0.0
    closed_lo: bool = True
    closed_hi: bool = False
    full: bool = False  # torus only: the whole circle

    def __post_init__(self):
        if self.space not in (LINE, TORUS):
            raise ValueError(f"unknown space {self.space!r}")
        if self.space == LINE:
            if self.full:
                raise ValueError("full flag is torus-only")
            if self.lo > self.hi:
                raise ValueError("line interval needs lo <= hi")
        else:
            if not (0 <= self.lo < 1 and 0 <= self.hi < 1):
                raise ValueError("torus endpoints must lie in [0, 1)")

    @staticmethod
    def line(lo: float, hi: float) -> "Interval":
        return Interval(LINE, lo, hi)

    @staticmethod
    def torus(lo: float, hi: float) -> "Interval":
        return Interval(TORUS, lo, hi)

    @staticmethod
    def full_torus() -> "Interval":
        return Interval(TORUS, 0.0, 0.0, full=True)

    @property
    def wraps(self) -> bool:
        return self.space == TORUS and not self.full and self.lo > self.hi

    @property
    def is_empty(self) -> bool:
        if self.full:
            return False
        return self.lo == self.hi if self.space == TORUS else self.hi <= self.lo

    @property
    def length(self) -> float:
        if self.space == LINE:
            return max(0.0, self.hi - self.lo)
        if self.full:
            return 1.0
        if self.wraps:
            return (1.0 - self.lo) + self.hi
        return self.hi - self.lo

    def pieces(self):
        """Split into nonempty half-open line pieces (on [0,1) for the torus)."""
        if self.is_empty:
            return []
        if self.space == LINE:
            return [(self.lo, self.hi)]
        if self.full:
            return [(0.0, 1.0)]
        if self.wraps:
            out = []
            if self.lo < 1.0:
                out.append((self.lo, 1.0))
            if self.hi > 0.0:
                out.append((0.0, self.hi))
            return out
        return [(self.lo, self.hi)]

    def contains(self, x):
        """Membership test, vectorized; uses the half-open convention."""
        x = np.asarray(x)
        if self.full:
            return np.ones(x.shape, dtype=bool)
        if self.wraps:
            return (x >= self.lo) | (x < self.hi)
        return (x >= self.lo) & (x < self.hi)


# ---------------------------------------------------------------------------
# Piece-list helpers.  A piece list is a list of (lo, hi) half-open pairs,
# kept sorted and disjoint.  Only existing endpoints are ever emitted.


def normalize_pieces(raw):
    """Sort, drop empties, and merge overlapping or touching pieces."""
    ps = [(lo, hi) for lo, hi in raw if hi > lo]
    ps.sort()
    out = []
    for lo, hi in ps:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def subtract_pieces(a, b):
    """Set difference of piece lists, exact at endpoints."""
    b = normalize_pieces(b)
    out = []
    for lo, hi in a:
        cur = lo
        for blo, bhi in b:
            if bhi <= cur:
                continue
            if blo >= hi:
                break
            if blo > cur:
                out.append((cur, blo))
            cur = max(cur, bhi)
            if cur >= hi:
                break
        if cur < hi:
            out.append((cur, hi))
    return out


def pieces_covered_by(a, b) -> bool:
    return not subtract_pieces(a, b)


# ---------------------------------------------------------------------------
# Measure oracles: probability measures on the carrier, evaluated through a
# cdf so that finite unions are exact sums over merged pieces.


class MeasureOracle:
    """cdf-backed probability measure; subclasses provide cdf on the carrier."""

    def cdf(self, x):
        raise NotImplementedError

    def measure(self, iv: Interval) -> float:
        return self.measure_pieces(iv.pieces())

    def measure_pieces(self, pieces) -> float:
        if not pieces:
            return 0.0
        lo = np.array([p[0] for p in pieces])
        hi = np.array([p[1] for p in pieces])
        return float(np.sum(self.cdf(hi) - self.cdf(lo)))

    def measure_union(self, intervals) -> float:
        raw = []
        for iv in intervals:
            raw.extend(iv.pieces())
        return self.measure_pieces(normalize_pieces(raw))


class LebesgueMeasure(MeasureOracle):
    """Length restricted to a support window, default the unit interval.

    With the default support this is a probability measure: Lebesgue on
    [0,1] and Haar on the torus (applied to pieces) coincide.
    """

    def __init__(self, support=(0.0, 1.0)):
        self.a, self.b = float(support[0]), float(support[1])
        if not self.b > self.a:
            raise ValueError("empty support")

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), self.a, self.b) - self.a


class PowerMeasure(MeasureOracle):
    """Measure on [0,1] with cdf x**a; a x**(a-1) density for a > 0."""

    def __init__(self, a: float):
        if a <= 0:
            raise ValueError("power measure needs a > 0")
        self.a = float(a)

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0) ** self.a


class TabulatedCdfMeasure(MeasureOracle):
    """Piecewise-linear cdf through (xs, Fs); used by empirical estimates."""

    def __init__(self, xs, Fs):
        xs = np.asarray(xs, dtype=float)
        Fs = np.asarray(Fs, dtype=float)
        if xs.ndim != 1 or xs.shape != Fs.shape or xs.size < 2:
            raise ValueError("need matching 1-d arrays with >= 2 nodes")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(Fs) < 0):
            raise ValueError("xs strictly increasing, Fs nondecreasing")
        self.xs, self.Fs = xs, Fs

    def cdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.Fs,
                         left=self.Fs[0], right=self.Fs[-1])


# ---------------------------------------------------------------------------
# Interval families


class IntervalFamily:
    """Indexed family A_k, k >= 1.  Subclasses define interval(k)."""

    space: str = LINE

    @property
    def horizon(self):
        return None

    def interval(self, k: int) -> Interval:
        raise NotImplementedError

    def intervals(self, lo: int, hi: int):
        return [self.interval(k) for k in range(lo, hi + 1)]

    def bounds(self, upto: int):
        """Vector form for hit tests: arrays (lo, hi, wraps, full) for k=1..upto."""
        lo = np.empty(upto)
        hi = np.empty(upto)
        wraps = np.zeros(upto, dtype=bool)
        full = np.zeros(upto, dtype=bool)
        for k in range(1, upto + 1):
            iv = self.interval(k)
            lo[k - 1], hi[k - 1] = iv.lo, iv.hi
            wraps[k - 1] = iv.wraps
            full[k - 1] = iv.full
        return lo, hi, wraps, full

    def measures(self, oracle: MeasureOracle, upto: int) -> np.ndarray:
        """mu(A_k) for k = 1..upto, exact through the oracle cdf."""
        lo, hi, wraps, full = self.bounds(upto)
        flat = oracle.cdf(hi) - oracle.cdf(lo)
        wrapped = (oracle.cdf(1.0) - oracle.cdf(lo)) + (oracle.cdf(hi) - oracle.cdf(0.0))
        out = np.where(wraps, wrapped, flat)
        out[full] = oracle.cdf(1.0) - oracle.cdf(0.0)
        return np.maximum(out, 0.0)


@dataclass(frozen=True)
class NestedLeftFamily(IntervalFamily):
    """A_k = [0, r_k) with nonincreasing radii."""

    radius: RealSeq = None
    space: str = LINE

    @property
    def horizon(self):
        return self.radius.horizon

    def interval(self, k: int) -> Interval:
        r = self.radius.eval(k)
        if self.space == TORUS:
            return Interval.full_torus() if r >= 1 else Interval.torus(0.0, r)
        return Interval.line(0.0, r)

    def bounds(self, upto: int):
        r = self.radius.array(1, upto)
        lo = np.zeros(upto)
        wraps = np.zeros(upto, dtype=bool)
        if self.space == TORUS:
            full = r >= 1.0
            return lo, np.where(full, 0.0, r), wraps, full
        return lo, r, wraps, np.zeros(upto, dtype=bool)

    def check_nested(self, upto: int) -> bool:
        return self.radius.check_nonincreasing(upto)


@dataclass(frozen=True)
class NestedWindowFamily(IntervalFamily):
    """A_k = [l_k, r_k) with l nondecreasing and r nonincreasing."""

    left: RealSeq = None
    right: RealSeq = None
    space: str = LINE

    @property
    def horizon(self):
        hs = [h for h in (self.left.horizon, self.right.horizon) if h is not None]
        return min(hs) if hs else None

    def interval(self, k: int) -> Interval:
        lo, hi = self.left.eval(k), self.right.eval(k)
        return Interval.line(lo, max(lo, hi))

    def bounds(self, upto: int):
        lo = self.left.array(1, upto).astype(float)
        hi = np.maximum(lo, self.right.array(1, upto))
        flags = np.zeros(upto, dtype=bool)
        return lo, hi, flags, flags.copy()

    def check_nested(self, upto: int) -> bool:
        l = self.left.array(1, upto)
        r = self.right.array(1, upto)
        return bool(np.all(np.diff(l) >= -1e-15) and np.all(np.diff(r) <= 1e-15))


@dataclass(frozen=True)
class TorusConsecutiveFamily(IntervalFamily):
    """Consecutive windows on the torus: each starts where the last ended.

    I_k is the arc from b_{k-1} to b_k with b_k = b_{k-1} + a_k mod 1; a
    step of length >= 1 makes the window the whole circle.
    """

    b0: float = 0.0
    steps: RealSeq = None
    space: str = field(default=TORUS, init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def horizon(self):
        return self.steps.horizon

    def _endpoints(self, upto: int):
        # b[k] = b_k, window k runs from b[k-1] to b[k]
        if self._cache.get("upto", 0) < upto:
            a = self.steps.array(1, upto)
            b = (self.b0 + np.concatenate(([0.0], np.cumsum(a)))) % 1.0
            self._cache.update(upto=upto, a=a, b=b)
        a, b = self._cache["a"], self._cache["b"]
        return a[:upto], b[: upto + 1]

    def interval(self, k: int) -> Interval:
        a, b = self._endpoints(k)
        if a[k - 1] >= 1.0:
            return Interval.full_torus()
        lo, hi = float(b[k - 1]), float(b[k])
        if lo == hi:  # zero-length step
            return Interval(TORUS, lo, hi)
        return Interval.torus(lo, hi)

    def bounds(self, upto: int):
        a, b = self._endpoints(upto)
        lo, hi = b[:-1], b[1:]
        full = a >= 1.0
        wraps = (lo > hi) & ~full
        return lo, hi, wraps, full


@dataclass(frozen=True)
class CustomFamily(IntervalFamily):
    table: tuple = ()
    space: str = LINE

    def __post_init__(self):
        for iv in self.table:
            if iv.space != self.space:
                raise ValueError("mixed spaces in custom family")

    @property
    def horizon(self):
        return len(self.table)

    def interval(self, k: int) -> Interval:
        if not 1 <= k <= len(self.table):
            raise IndexError(f"family defined for k = 1..{len(self.table)}")
        return self.table[k - 1]


# ---------------------------------------------------------------------------
# Greedy disjointification


@dataclass
class DisjointCover:
    """Disjoint pieces with provenance: gammas[i] is contained in the source
    interval at index provenance[i] (1-based) of the input family."""

    gammas: list
    provenance: list

    def nonempty(self):
        return [(g, s) for g, s in zip(self.gammas, self.provenance) if not g.is_empty]


def disjointify(family, m: int = None) -> DisjointCover:
    """Greedy disjoint cover of a finite interval list, preserving the union.

    Follows an emptying induction: when a previously kept piece set turns
    out to be contained in the next interval, it is dropped and the next
    interval absorbs its share; otherwise the next interval keeps only what
    the survivors leave.  On the line every output slot is a single
    interval; wrapped torus inputs are handled on their pieces, so a source
    index may own up to two output arcs.
    """
    ivs = list(family)
    if m is None:
        m = len(ivs)
    if m < 1 or m != len(ivs):
        raise ValueError("m must equal the family length and be >= 1")
    spaces = {iv.space for iv in ivs}
    if len(spaces) > 1:
        raise ValueError("mixed spaces")
    space = spaces.pop()

    slots = [ivs[0].pieces()]
    for i in range(1, m):
        new = ivs[i].pieces()
        for k in range(i):
            if slots[k] and pieces_covered_by(slots[k], new):
                slots[k] = []
        kept = []
        for k in range(i):
            kept.extend(slots[k])
        slots.append(subtract_pieces(new, kept))

    gammas, provenance = [], []
    for k, pieces in enumerate(slots):
        if not pieces:
            gammas.append(Interval(space, 0.0, 0.0))
            provenance.append(k + 1)
            continue
        if space == LINE and len(pieces) != 1:
            raise AssertionError("line disjointification produced a split slot")
        for lo, hi in pieces:
            if space == TORUS and hi == 1.0:
                gammas.append(Interval(TORUS, lo, 0.0) if lo > 0.0
                              else Interval.full_torus())
            else:
                gammas.append(Interval(space, lo, hi))
            provenance.append(k + 1)
    return DisjointCover(gammas, provenance)


# ---------------------------------------------------------------------------
# Block construction


class BlockUnreachable(Exception):
    """No prefix within the horizon reaches the k-th coverage threshold."""

    def __init__(self, k, threshold, boundaries, covers, gamma_measures):
        super().__init__(
            f"block {k} threshold {threshold:.6g} unreachable within horizon"
        )
        self.k = k
        self.threshold = threshold
        self.boundaries = boundaries
        self.covers = covers
        self.gamma_measures = gamma_measures


@dataclass
class GammaBlocks:
    boundaries: list  # n_0 = 1 < n_1 < ... block k covers [n_{k-1}, n_k)
    covers: list  # one DisjointCover per completed block
    gamma_measures: list  # mu(Gamma_j) flattened in block order
    thresholds: list

    @property
    def completed(self):
        return len(self.boundaries) - 1


def gamma_blocks(family, delta: float, measure: MeasureOracle, horizon: int,
                 max_blocks: int = None) -> GammaBlocks:
    """Split indices into blocks whose unions almost reach coverage delta.

    Block k is the shortest prefix [n_{k-1}, n_k) whose union has measure at
    least delta * (1 - 2**-k); within each block the members are
    disjointified so the block indicator sum never exceeds 1.  Raises
    BlockUnreachable (with partial results attached) when the horizon runs
    out, which is evidence that the family's limsup has measure below delta.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")

    def union_measure(a, b):  # indices a..b inclusive
        return measure.measure_union(family.intervals(a, b))

    boundaries = [1]
    covers = []
    gamma_measures = []
    thresholds = []
    k = 0
    while boundaries[-1] <= horizon:
        k += 1
        if max_blocks is not None and k > max_blocks:
            break
        thr = delta * (1.0 - 2.0**-k)
        lo = boundaries[-1]
        # doubling on the exclusive end, then bisection for the minimal one
        hi_cap = horizon + 1
        step = 1
        n = lo + step
        while union_measure(lo, n - 1) < thr:
            if n >= hi_cap:
                raise BlockUnreachable(k, thr, boundaries, covers, gamma_measures)
            step *= 2
            n = min(lo + step, hi_cap)
        lo_fail = lo + step // 2 if step > 1 else lo
        hi_ok = n
        while hi_ok - lo_fail > 1:
            mid = (lo_fail + hi_ok) // 2
            if union_measure(lo, mid - 1) >= thr:
                hi_ok = mid
            else:
                lo_fail = mid
        n_k = hi_ok
        cover = disjointify(family.intervals(lo, n_k - 1))
        covers.append(cover)
        gamma_measures.extend(measure.measure(g) for g in cover.gammas)
        thresholds.append(thr)
        boundaries.append(n_k)
    return GammaBlocks(boundaries, covers, gamma_measures, thresholds)


# ---------------------------------------------------------------------------
# Equirepartition norm and limsup probe


def equirep_norm(family, measure: MeasureOracle, n: int) -> float:
    """Essential sup of (sum of the first n indicators) / E_n, exact.

    The indicator sum is constant on the cells of the endpoint arrangement;
    cells of measure zero are ignored (essential sup), and E_n is the sum
    of the member measures under the oracle.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ivs = family.intervals(1, n)
    e_n = float(sum(measure.measure(iv) for iv in ivs))
    if e_n <= 0:
        raise ValueError("E_n = 0: the family carries no mass")

    events = []
    for iv in ivs:
        for lo, hi in iv.pieces():
            events.append((lo, +1))
            events.append((hi, -1))
    if not events:
        raise ValueError("all intervals empty")
    xs = np.array([e[0] for e in events])
    deltas = np.array([e[1] for e in events])
    cuts, inv = np.unique(xs, return_inverse=True)
    agg = np.zeros(len(cuts), dtype=int)
    np.add.at(agg, inv, deltas)
    coverage = np.cumsum(agg)[:-1]  # count on each cell [cuts[i], cuts[i+1])
    cell_mass = measure.cdf(cuts[1:]) - measure.cdf(cuts[:-1])
    live = cell_mass > 0
    top = int(coverage[live].max()) if np.any(live) else 0
    return top / e_n


@dataclass
class LimsupReport:
    horizons: list
    trace: np.ndarray  # trace[i] = mu(union of A_k, horizons[i] <= k <= tail)
    floor: float
    tail: int = 0


def limsup_probe(family, measure: MeasureOracle, horizons,
                 tail: int = None) -> LimsupReport:
    """Tail-union measures at increasing cutoffs, plus an extrapolated floor.

    Each probe m looks at the union over m <= k <= tail; the default tail is
    four times the last probe (clamped to the family horizon) so that every
    probe sees a substantial stretch of sets beyond it.  The floor estimate
    applies one step of Aitken extrapolation to the last three trace values
    and clamps the result into [0, last value].
    """
    ms = list(horizons)
    if not ms or any(b <= a for a, b in zip(ms, ms[1:])):
        raise ValueError("horizons must be strictly increasing")
    if tail is None:
        tail = 4 * ms[-1]
        if family.horizon is not None:
            tail = min(tail, family.horizon)
    if tail < ms[-1]:
        raise ValueError("tail cutoff below the last probe")
    trace = np.array(
        [measure.measure_union(family.intervals(m, tail)) for m in ms]
    )
    if len(trace) >= 3:
        ta, tb, tc = trace[-3:]
        denom = (tc - tb) - (tb - ta)
        if abs(denom) > 1e-15:
            floor = tc - (tc - tb) ** 2 / denom
        else:
            floor = tc
    else:
        floor = trace[-1]
    floor = float(min(max(floor, 0.0), trace[-1]))
    return LimsupReport(ms, trace, floor, tail)


# ---------------------------------------------------------------------------
# JSON templates (config mirror)


def interval_to_json(iv: Interval) -> dict:
    d = {"space": iv.space, "lo": iv.lo, "hi": iv.hi}
    if iv.full:
        d["full"] = True
    return d


def interval_from_json(d: dict) -> Interval:
    return Interval(d.get("space", LINE), float(d.get("lo", 0.0)),
                    float(d.get("hi", 0.0)), full=bool(d.get("full", False)))


def family_to_json(fam: IntervalFamily) -> dict:
    if isinstance(fam, NestedLeftFamily):
        return {"template": "nested-left", "space": fam.space,
                "radius": seq_to_json(fam.radius)}
    if isinstance(fam, NestedWindowFamily):
        return {"template": "nested-window", "left": seq_to_json(fam.left),
                "right": seq_to_json(fam.right)}
    if isinstance(fam, TorusConsecutiveFamily):
        return {"template": "torus-consecutive", "b0": fam.b0,
                "steps": seq_to_json(fam.steps)}
    if isinstance(fam, CustomFamily):
        return {"template": "custom", "space": fam.space,
                "intervals": [interval_to_json(iv) for iv in fam.table]}
    raise TypeError(f"unknown family type {type(fam).__name__}")


def family_from_json(d: dict) -> IntervalFamily:
    t = d.get("template")
    if t == "nested-left":
        return NestedLeftFamily(radius=seq_from_json(d["radius"]),
                                space=d.get("space", LINE))
    if t == "nested-window":
        return NestedWindowFamily(left=seq_from_json(d["left"]),
                                  right=seq_from_json(d["right"]))
    if t == "torus-consecutive":
        return TorusConsecutiveFamily(b0=float(d.get("b0", 0.0)),
                                      steps=seq_from_json(d["steps"]))
    if t == "custom":
        return CustomFamily(
            table=tuple(interval_from_json(x) for x in d["intervals"]),
            space=d.get("space", LINE))
    raise ValueError(f"unknown family template {t!r}")


def measure_to_json(m: MeasureOracle) -> dict:
    if isinstance(m, PowerMeasure):
        return {"kind": "power", "a": m.a}
    if isinstance(m, TabulatedCdfMeasure):
        return {"kind": "tabulated", "xs": m.xs.tolist(), "Fs": m.Fs.tolist()}
    if isinstance(m, LebesgueMeasure):
        return {"kind": "lebesgue", "support": [m.a, m.b]}
    raise TypeError(f"unknown measure type {type(m).__name__}")


def measure_from_json(d: dict) -> MeasureOracle:
    k = d.get("kind", "lebesgue")
    if k == "lebesgue":
        return LebesgueMeasure(tuple(d.get("support", (0.0, 1.0))))
    if k == "power":
        return PowerMeasure(float(d["a"]))
    if k == "tabulated":
        return TabulatedCdfMeasure(d["xs"], d["Fs"])
    raise ValueError(f"unknown measure kind {k!r}")
