"""Stationary process samplers, hit recording, and renewal extraction.

Every trajectory owns a counter-based random stream derived from
(seed, trajectory id), and every step of a given process variant consumes
a fixed number of uniforms from that stream, so results are reproducible
no matter how trajectories are scheduled or batched.  The vectorized
ensemble driver and the scalar process_step walk identical trajectories.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .intervals import IntervalFamily, TabulatedCdfMeasure

GOLDEN_CONJUGATE = (math.sqrt(5.0) - 1.0) / 2.0

# largest double below 1: keeps rounding from reaching absorbing endpoints
_BELOW_ONE = 1.0 - 2.0**-53
_DEGENERATE = 1e-300


def array_pow(u, e: float):
    """u**e routed through numpy's 1-d loop for scalars and arrays alike.

    numpy evaluates 0-d and 1-d powers with different code paths whose
    results can differ in the last ulp; forcing one path keeps scalar
    process_step and the vectorized driver on identical trajectories.
    """
    out = np.atleast_1d(np.asarray(u, dtype=float)) ** e
    return float(out[0]) if np.ndim(u) == 0 else out


def stream_key(seed: int, trajectory: int, restart: int = 0) -> int:
    return (int(seed) << 64) + (restart << 32) + trajectory


def make_generator(seed: int, trajectory: int, restart: int = 0):
    return np.random.Generator(
        np.random.Philox(key=stream_key(seed, trajectory, restart))
    )


# ---------------------------------------------------------------------------
# Process specifications


class ProcessSpec:
    """Base class; subclasses are frozen dataclasses with a `variant` tag."""

    variant = "abstract"
    uniforms_per_step = 2

    def validate(self):
        pass


@dataclass(frozen=True)
class IIDProcess(ProcessSpec):
    """Independent draws from a marginal on [0,1]; power=a gives cdf x**a."""

    marginal: str = "uniform"
    power: float = 1.0

    variant = "iid"

    def validate(self):
        if self.marginal not in ("uniform", "power"):
            raise ValueError(f"unknown marginal {self.marginal!r}")
        if self.marginal == "power" and self.power <= 0:
            raise ValueError("power marginal needs a > 0")

    def _inverse(self, u):
        if self.marginal == "uniform":
            return u
        return array_pow(u, 1.0 / self.power)


@dataclass(frozen=True)
class LSVProcess(ProcessSpec):
    """Interval map with a neutral fixed point at 0.

    theta(x) = x(1 + (2x)**gamma) on [0, 1/2), 2x - 1 on [1/2, 1]; slower
    mixing as gamma grows.  Deterministic once started, so steps consume
    no randomness; the start is one uniform followed by burn-in.
    """

    gamma: float = 0.5
    burn_in: int = 10_000

    variant = "lsv"
    uniforms_per_step = 0

    def validate(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("lsv needs gamma in (0,1)")
        if self.burn_in < 0:
            raise ValueError("negative burn-in")


@dataclass(frozen=True)
class ARHalfProcess(ProcessSpec):
    """X' = X/2 + e with Bernoulli(1/2) innovations; state space [0,2].

    innovation="heavy" adds a symmetric scaled Pareto-tail term with tail
    exponent tail_p, putting the state on the whole line.
    """

    innovation: str = "bernoulli"
    tail_p: float = 4.0
    tail_scale: float = 0.1

    variant = "ar-half"

    def validate(self):
        if self.innovation not in ("bernoulli", "heavy"):
            raise ValueError(f"unknown innovation {self.innovation!r}")
        if self.innovation == "heavy" and self.tail_p <= 1:
            raise ValueError("heavy innovation needs tail_p > 1")


@dataclass(frozen=True)
class CircleRWProcess(ProcessSpec):
    """Random walk on the torus: x +- a with a fair coin; Haar invariant.

    drift t shifts the hit test frame: step k tests x_k - k t mod 1.
    """

    a: float = GOLDEN_CONJUGATE
    drift: float = 0.0

    variant = "circle-rw"

    def validate(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError("rotation a must lie in (0,1)")
        if not 0.0 <= self.drift < 1.0:
            raise ValueError("drift must lie in [0,1)")


@dataclass(frozen=True)
class SplitChainProcess(ProcessSpec):
    """Minorized chain: with prob s(x) regenerate from nu, else follow Q1.

    s is either the identity on [0,1] ("linear", scaled by s_scale) or a
    constant; nu has cdf x**nu_power on [0,1].  Built-in residual kernels:
    "delta" stays put, "nu" redraws from nu.
    """

    s_kind: str = "linear"
    s_scale: float = 1.0
    nu_power: float = 2.0
    q1: str = "delta"

    variant = "split-chain"

    def validate(self):
        if self.s_kind not in ("linear", "const"):
            raise ValueError(f"unknown s kind {self.s_kind!r}")
        if not 0.0 <= self.s_scale <= 1.0:
            raise ValueError("s must map into [0,1]")
        if self.nu_power <= 0:
            raise ValueError("nu needs a positive power")
        if self.q1 not in ("delta", "nu"):
            raise ValueError(f"unknown residual kernel {self.q1!r}")
        if self.s_kind == "const" and self.s_scale == 0.0:
            raise ValueError("nu(s) = 0: the chain never regenerates")

    def s_of(self, x):
        if self.s_kind == "const":
            return np.full_like(np.asarray(x, dtype=float), self.s_scale)
        return self.s_scale * np.asarray(x, dtype=float)

    def nu_inverse(self, u):
        return array_pow(u, 1.0 / self.nu_power)


@dataclass(frozen=True)
class DMRProcess(ProcessSpec):
    """P(x,.) = x nu + (1-x) delta_x on [0,1] with nu = (a+1) x**a lambda.

    Invariant law mu = a x**(a-1) lambda; regeneration prob s(x) = x.
    """

    a: float = 1.0

    variant = "dmr"

    def validate(self):
        if self.a <= 0:
            raise ValueError("dmr needs a > 0")

    def as_split_chain(self) -> SplitChainProcess:
        return SplitChainProcess(s_kind="linear", s_scale=1.0,
                                 nu_power=self.a + 1.0, q1="delta")


def process_to_json(spec: ProcessSpec) -> dict:
    d = {"variant": spec.variant}
    if isinstance(spec, IIDProcess):
        d.update(marginal=spec.marginal, power=spec.power)
    elif isinstance(spec, LSVProcess):
        d.update(gamma=spec.gamma, burn_in=spec.burn_in)
    elif isinstance(spec, ARHalfProcess):
        d.update(innovation=spec.innovation, tail_p=spec.tail_p,
                 tail_scale=spec.tail_scale)
    elif isinstance(spec, CircleRWProcess):
        d.update(a=spec.a, drift=spec.drift)
    elif isinstance(spec, DMRProcess):
        d.update(a=spec.a)
    elif isinstance(spec, SplitChainProcess):
        d.update(s_kind=spec.s_kind, s_scale=spec.s_scale,
                 nu_power=spec.nu_power, q1=spec.q1)
    else:
        raise TypeError(f"unknown spec type {type(spec).__name__}")
    return d


def process_from_json(d: dict) -> ProcessSpec:
    v = d.get("variant")
    if v == "iid":
        spec = IIDProcess(marginal=d.get("marginal", "uniform"),
                          power=float(d.get("power", 1.0)))
    elif v == "lsv":
        spec = LSVProcess(gamma=float(d["gamma"]),
                          burn_in=int(d.get("burn_in", 10_000)))
    elif v == "ar-half":
        spec = ARHalfProcess(innovation=d.get("innovation", "bernoulli"),
                             tail_p=float(d.get("tail_p", 4.0)),
                             tail_scale=float(d.get("tail_scale", 0.1)))
    elif v == "circle-rw":
        spec = CircleRWProcess(a=float(d.get("a", GOLDEN_CONJUGATE)),
                               drift=float(d.get("drift", 0.0)))
    elif v == "dmr":
        spec = DMRProcess(a=float(d.get("a", 1.0)))
    elif v == "split-chain":
        spec = SplitChainProcess(s_kind=d.get("s_kind", "linear"),
                                 s_scale=float(d.get("s_scale", 1.0)),
                                 nu_power=float(d.get("nu_power", 2.0)),
                                 q1=d.get("q1", "delta"))
    else:
        raise ValueError(f"unknown process variant {v!r}")
    spec.validate()
    return spec


# ---------------------------------------------------------------------------
# Scalar stepping (the reference semantics)


def lsv_map(x, gamma: float):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    low = arr < 0.5
    out = np.where(low, arr * (1.0 + (2.0 * arr) ** gamma), 2.0 * arr - 1.0)
    out = np.minimum(out, _BELOW_ONE)
    return float(out[0]) if np.ndim(x) == 0 else out


def process_step(spec: ProcessSpec, state: float, uniforms) -> tuple:
    """Advance one step using two uniforms; returns (next state, regen flag).

    The flag is 1 only when a split chain regenerates this step; variants
    that need fewer than two uniforms ignore the rest.
    """
    u1, u2 = float(uniforms[0]), float(uniforms[1])
    if isinstance(spec, IIDProcess):
        return float(spec._inverse(u1)), 0
    if isinstance(spec, LSVProcess):
        if not 0.0 <= state <= 1.0:
            raise ValueError("lsv state outside [0,1]")
        return float(lsv_map(state, spec.gamma)), 0
    if isinstance(spec, ARHalfProcess):
        eps = 1.0 if u1 < 0.5 else 0.0
        if spec.innovation == "heavy":
            v = max(2.0 * abs(u2 - 0.5), 1e-12)
            mag = spec.tail_scale * (array_pow(v, -1.0 / spec.tail_p) - 1.0)
            eps += math.copysign(mag, u2 - 0.5)
        return 0.5 * state + eps, 0
    if isinstance(spec, CircleRWProcess):
        step = spec.a if u1 < 0.5 else -spec.a
        return (state + step) % 1.0, 0
    if isinstance(spec, DMRProcess):
        spec = spec.as_split_chain()
    if isinstance(spec, SplitChainProcess):
        if not 0.0 <= state <= 1.0:
            raise ValueError("split-chain state outside [0,1]")
        s = float(spec.s_of(state))
        if not 0.0 <= s <= 1.0:
            raise ValueError("s(x) outside [0,1]")
        if u1 <= s:
            return float(spec.nu_inverse(u2)), 1
        if spec.q1 == "delta":
            return state, 0
        return float(spec.nu_inverse(u2)), 0
    raise TypeError(f"unknown spec type {type(spec).__name__}")


def init_uniform_count(spec: ProcessSpec) -> int:
    """Uniforms the stationary initializer consumes from the stream."""
    if isinstance(spec, ARHalfProcess):
        return 54  # dyadic series truncated at 2**-53 resolution
    if isinstance(spec, SplitChainProcess) and not isinstance(spec, DMRProcess):
        return 1 + 2 * 200  # nu start plus stochastic burn-in
    return 1


def init_from_uniforms(spec: ProcessSpec, us) -> float:
    """Deterministic map from the consumed uniforms to the starting state."""
    us = np.atleast_1d(np.asarray(us, dtype=float))
    if isinstance(spec, IIDProcess):
        return float(spec._inverse(us[0]))
    if isinstance(spec, CircleRWProcess):
        return float(us[0])
    if isinstance(spec, DMRProcess):
        return float(us[0] ** (1.0 / spec.a))
    if isinstance(spec, LSVProcess):
        x = float(us[0])
        for _ in range(spec.burn_in):
            x = float(lsv_map(x, spec.gamma))
        return x
    if isinstance(spec, ARHalfProcess):
        bits = (us < 0.5).astype(float)
        weights = 2.0 ** -np.arange(len(us))
        return float(np.dot(bits, weights))
    if isinstance(spec, SplitChainProcess):
        x = float(spec.nu_inverse(us[0]))
        for j in range((len(us) - 1) // 2):
            x, _ = process_step(spec, x, us[1 + 2 * j : 3 + 2 * j])
        return x
    raise TypeError(f"unknown spec type {type(spec).__name__}")


def stationary_init(spec: ProcessSpec, seed: int, trajectory: int = 0,
                    restart: int = 0) -> float:
    """Draw the starting state from (approximately) the invariant law.

    Exact for IID, CircleRW (Haar), DMR (inverse cdf of a x**(a-1)), and
    the dyadic ARHalF series; burn-in iteration for LSV and generic split
    chains.  Consumes init_uniform_count(spec) values from the trajectory
    stream, which the stepping loop then continues.
    """
    gen = make_generator(seed, trajectory, restart)
    return init_from_uniforms(spec, gen.random(init_uniform_count(spec)))


def renewal_times(etas) -> list:
    """T_k = 1 + (index of the (k+1)-th one in the flag sequence)."""
    etas = np.asarray(etas)
    return (np.nonzero(etas)[0] + 1).tolist()


# ---------------------------------------------------------------------------
# Hit records


def default_checkpoints(n: int) -> list:
    """Geometric grid of about 8 points per decade, always ending at n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    js = np.arange(0, int(np.ceil(8 * np.log10(max(n, 1)))) + 1)
    grid = np.unique(np.round(10 ** (js / 8.0)).astype(int))
    grid = grid[(grid >= 1) & (grid <= n)]
    out = grid.tolist()
    if not out or out[-1] != n:
        out.append(n)
    return out


@dataclass
class HitRecord:
    trajectory: int
    seed: int
    n: int
    hit_times: np.ndarray  # strictly increasing step indices in 1..n
    s_checkpoints: list  # (checkpoint, S_checkpoint) pairs
    renewal_times: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    renewal_count: int = 0
    drift: float = 0.0
    restarts: int = 0

    def s_at(self, k: int) -> int:
        return int(np.searchsorted(self.hit_times, k, side="right"))

    def to_json(self) -> dict:
        return {
            "trajectory": self.trajectory,
            "seed": self.seed,
            "n": self.n,
            "hit_times": np.asarray(self.hit_times).tolist(),
            "s_checkpoints": [[int(a), int(b)] for a, b in self.s_checkpoints],
            "renewal_times": np.asarray(self.renewal_times).tolist(),
            "renewal_count": self.renewal_count,
            "drift": self.drift,
            "restarts": self.restarts,
        }

    @staticmethod
    def from_json(d: dict) -> "HitRecord":
        return HitRecord(
            trajectory=int(d["trajectory"]),
            seed=int(d["seed"]),
            n=int(d["n"]),
            hit_times=np.asarray(d["hit_times"], dtype=int),
            s_checkpoints=[(int(a), int(b)) for a, b in d["s_checkpoints"]],
            renewal_times=np.asarray(d.get("renewal_times", []), dtype=int),
            renewal_count=int(d.get("renewal_count", 0)),
            drift=float(d.get("drift", 0.0)),
            restarts=int(d.get("restarts", 0)),
        )


# ---------------------------------------------------------------------------
# Vectorized ensemble driver

_CHUNK = 1 << 15


def _init_vector(spec, gens):
    return np.array([init_from_uniforms(spec, g.random(init_uniform_count(spec)))
                     for g in gens])


def _advance_chunk(spec, x, U, xs_buf, flags_buf):
    """Fill xs_buf[i] with the state after step i of this chunk."""
    m = xs_buf.shape[0]
    if isinstance(spec, IIDProcess):
        xs_buf[:] = spec._inverse(U[:, :, 0])
        return xs_buf[-1].copy()
    if isinstance(spec, CircleRWProcess):
        # same per-element arithmetic as process_step, so paths agree exactly
        a = spec.a
        for i in range(m):
            x = (x + np.where(U[i, :, 0] < 0.5, a, -a)) % 1.0
            xs_buf[i] = x
        return x
    if isinstance(spec, LSVProcess):
        g = spec.gamma
        for i in range(m):
            low = x < 0.5
            x = np.where(low, x * (1.0 + (2.0 * x) ** g), 2.0 * x - 1.0)
            np.minimum(x, _BELOW_ONE, out=x)
            xs_buf[i] = x
        return x
    if isinstance(spec, ARHalfProcess):
        for i in range(m):
            eps = (U[i, :, 0] < 0.5).astype(float)
            if spec.innovation == "heavy":
                v = np.maximum(2.0 * np.abs(U[i, :, 1] - 0.5), 1e-12)
                mag = spec.tail_scale * (array_pow(v, -1.0 / spec.tail_p) - 1.0)
                eps = eps + np.copysign(mag, U[i, :, 1] - 0.5)
            x = 0.5 * x + eps
            xs_buf[i] = x
        return x
    if isinstance(spec, DMRProcess):
        a = spec.a
        inv = 1.0 / (a + 1.0)
        for i in range(m):
            regen = U[i, :, 0] <= x
            x = np.where(regen, U[i, :, 1] ** inv, x)
            xs_buf[i] = x
            flags_buf[i] = regen
        return x
    if isinstance(spec, SplitChainProcess):
        for i in range(m):
            s = spec.s_of(x)
            regen = U[i, :, 0] <= s
            drawn = spec.nu_inverse(U[i, :, 1])
            if spec.q1 == "delta":
                x = np.where(regen, drawn, x)
            else:
                x = drawn
            xs_buf[i] = x
            flags_buf[i] = regen
        return x
    raise TypeError(f"unknown spec type {type(spec).__name__}")


def _run_block(spec, family, n, seed, traj_ids, renewal_cap, bounds):
    """Lockstep simulation of the given trajectory ids; one HitRecord each."""
    spec.validate()
    is_split = isinstance(spec, (DMRProcess, SplitChainProcess))
    drift = spec.drift if isinstance(spec, CircleRWProcess) else 0.0
    lo, hi, wraps, full = bounds
    width = len(traj_ids)
    restarts = np.zeros(width, dtype=int)
    gens = [make_generator(seed, t) for t in traj_ids]
    x = _init_vector(spec, gens)
    per_step = spec.uniforms_per_step

    hits = [[] for _ in range(width)]
    rts = [[] for _ in range(width)]
    rcount = np.zeros(width, dtype=int)
    degenerate = np.zeros(width, dtype=bool)

    for c0 in range(0, n, _CHUNK):
        m = min(_CHUNK, n - c0)
        if per_step:
            U = np.stack([g.random((m, 2)) for g in gens], axis=1)
        else:
            U = np.zeros((1, 1, 2))  # variant consumes no randomness
        xs = np.empty((m, width))
        flags = np.zeros((m, width), dtype=bool) if is_split else None
        x = _advance_chunk(spec, x, U, xs, flags)

        if isinstance(spec, LSVProcess):
            degenerate |= (xs < _DEGENERATE).any(axis=0)

        ks = np.arange(c0 + 1, c0 + m + 1)
        pts = xs if drift == 0.0 else (xs - drift * ks[:, None]) % 1.0
        blo = lo[c0 : c0 + m, None]
        bhi = hi[c0 : c0 + m, None]
        bw = wraps[c0 : c0 + m, None]
        bf = full[c0 : c0 + m, None]
        hit = np.where(bw, (pts >= blo) | (pts < bhi), (pts >= blo) & (pts < bhi))
        hit |= bf
        rows, cols = np.nonzero(hit)
        times = rows + c0 + 1
        for j in range(width):
            sel = cols == j
            if sel.any():
                hits[j].append(times[sel])
        if is_split:
            rrows, rcols = np.nonzero(flags)
            rtimes = rrows + c0 + 1
            for j in range(width):
                sel = rcols == j
                cnt = int(sel.sum())
                if cnt:
                    have = rcount[j]
                    rcount[j] += cnt
                    room = renewal_cap - have if renewal_cap is not None else cnt
                    if room > 0:
                        rts[j].append(rtimes[sel][:room])

    cps = default_checkpoints(n)
    out = []
    for j, t in enumerate(traj_ids):
        if degenerate[j]:
            out.append(_rerun_degenerate(spec, family, n, seed, t, renewal_cap,
                                         bounds))
            continue
        ht = (np.concatenate(hits[j]) if hits[j] else np.zeros(0, dtype=int))
        rt = (np.concatenate(rts[j]) if rts[j] else np.zeros(0, dtype=int))
        scp = [(c, int(np.searchsorted(ht, c, side="right"))) for c in cps]
        out.append(HitRecord(trajectory=t, seed=seed, n=n, hit_times=ht,
                             s_checkpoints=scp, renewal_times=rt,
                             renewal_count=int(rcount[j]), drift=drift,
                             restarts=int(restarts[j])))
    return out


def _rerun_degenerate(spec, family, n, seed, traj, renewal_cap, bounds):
    """Restart a trajectory whose orbit underflowed, with a shifted stream."""
    for restart in range(1, 9):
        gen = make_generator(seed, traj, restart)
        x = init_from_uniforms(spec, gen.random(init_uniform_count(spec)))
        rec = _run_single(spec, family, n, gen, x, renewal_cap, bounds)
        if rec is not None:
            rec.trajectory = traj
            rec.seed = seed
            rec.restarts = restart
            return rec
    raise RuntimeError(f"trajectory {traj}: orbit degenerate after 8 restarts")


def _run_single(spec, family, n, gen, x0, renewal_cap, bounds):
    """Scalar-width fallback used only for degenerate restarts."""
    lo, hi, wraps, full = bounds
    drift = spec.drift if isinstance(spec, CircleRWProcess) else 0.0
    x = np.array([x0])
    hits, rts, rcount = [], [], 0
    per_step = spec.uniforms_per_step
    is_split = isinstance(spec, (DMRProcess, SplitChainProcess))
    for c0 in range(0, n, _CHUNK):
        m = min(_CHUNK, n - c0)
        U = gen.random((m, 1, 2)) if per_step else np.zeros((1, 1, 2))
        xs = np.empty((m, 1))
        flags = np.zeros((m, 1), dtype=bool) if is_split else None
        x = _advance_chunk(spec, x, U, xs, flags)
        if isinstance(spec, LSVProcess) and (xs < _DEGENERATE).any():
            return None
        ks = np.arange(c0 + 1, c0 + m + 1)
        pts = xs[:, 0] if drift == 0.0 else (xs[:, 0] - drift * ks) % 1.0
        seg = slice(c0, c0 + m)
        hit = np.where(wraps[seg], (pts >= lo[seg]) | (pts < hi[seg]),
                       (pts >= lo[seg]) & (pts < hi[seg])) | full[seg]
        hits.append(np.nonzero(hit)[0] + c0 + 1)
        if is_split:
            rr = np.nonzero(flags[:, 0])[0] + c0 + 1
            rcount += len(rr)
            if renewal_cap is not None:
                have = sum(len(r) for r in rts)
                rr = rr[: max(renewal_cap - have, 0)]
            rts.append(rr)
    ht = np.concatenate(hits) if hits else np.zeros(0, dtype=int)
    rt = np.concatenate(rts) if rts else np.zeros(0, dtype=int)
    cps = default_checkpoints(n)
    scp = [(c, int(np.searchsorted(ht, c, side="right"))) for c in cps]
    return HitRecord(trajectory=0, seed=0, n=n, hit_times=ht,
                     s_checkpoints=scp, renewal_times=rt, renewal_count=rcount,
                     drift=drift, restarts=0)


def simulate_hits(spec: ProcessSpec, family: IntervalFamily, n: int, seed: int,
                  trajectory: int = 0, renewal_cap: int = 10_000) -> HitRecord:
    """One trajectory: step from stationary_init, record k with X_k in A_k.

    For CircleRW with drift t the test point is X_k - k t mod 1.  Fully
    reproducible from (spec, family, n, seed, trajectory).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fh = family.horizon
    if fh is not None and fh < n:
        raise ValueError(f"family defined only up to {fh} < n = {n}")
    bounds = family.bounds(n)
    return _run_block(spec, family, n, seed, [trajectory], renewal_cap, bounds)[0]


def simulate_ensemble(spec: ProcessSpec, family: IntervalFamily, n: int,
                      seed: int, n_traj: int, workers: int = None,
                      renewal_cap: int = 10_000) -> list:
    """HitRecords for trajectories 0..n_traj-1, merged in trajectory order.

    Worker count comes from BCLAB_THREADS when not given; the partition has
    no effect on the results because every trajectory owns its own stream.
    """
    if n < 1 or n_traj < 1:
        raise ValueError("need n >= 1 and n_traj >= 1")
    fh = family.horizon
    if fh is not None and fh < n:
        raise ValueError(f"family defined only up to {fh} < n = {n}")
    if workers is None:
        workers = int(os.environ.get("BCLAB_THREADS", "1"))
    workers = max(1, min(workers, n_traj))
    bounds = family.bounds(n)
    ids = list(range(n_traj))
    if workers == 1:
        return _run_block(spec, family, n, seed, ids, renewal_cap, bounds)
    from concurrent.futures import ThreadPoolExecutor

    blocks = [ids[i::workers] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(
            lambda b: _run_block(spec, family, n, seed, b, renewal_cap, bounds),
            blocks,
        )
        records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.trajectory)
    return records


def paired_sample(spec: ProcessSpec, n: int, seed: int, n_traj: int):
    """(X_0, X_n) across trajectories 0..n_traj-1, one stream each.

    The marginal at any fixed time and the joint law at lag n are what the
    empirical mixing estimators consume.
    """
    if n < 1 or n_traj < 1:
        raise ValueError("need n >= 1 and n_traj >= 1")
    spec.validate()
    is_split = isinstance(spec, (DMRProcess, SplitChainProcess))
    gens = [make_generator(seed, t) for t in range(n_traj)]
    x0 = _init_vector(spec, gens)
    x = x0.copy()
    per_step = spec.uniforms_per_step
    for c0 in range(0, n, _CHUNK):
        m = min(_CHUNK, n - c0)
        if per_step:
            U = np.stack([g.random((m, 2)) for g in gens], axis=1)
        else:
            U = np.zeros((1, 1, 2))
        xs = np.empty((m, n_traj))
        flags = np.zeros((m, n_traj), dtype=bool) if is_split else None
        x = _advance_chunk(spec, x, U, xs, flags)
    return x0, x


# ---------------------------------------------------------------------------
# LSV occupation-measure calibration

CALIBRATION_VERSION = 1


@dataclass
class LSVCalibration:
    gamma: float
    edges: np.ndarray  # increasing, edges[0] = 0, edges[-1] = 1
    counts: np.ndarray  # occupation counts per cell
    steps: int
    seed: int

    def cdf_values(self) -> np.ndarray:
        c = np.concatenate(([0.0], np.cumsum(self.counts)))
        return c / c[-1]

    def as_measure(self) -> TabulatedCdfMeasure:
        return TabulatedCdfMeasure(self.edges, self.cdf_values())

    def mass_below(self, eps) -> np.ndarray:
        return self.as_measure().cdf(eps)


def _calibration_edges() -> np.ndarray:
    # geometric cells from 1e-30 up to 1, plus an exact zero edge: resolves
    # the polynomial density blowup at 0 across many decades
    geo = np.geomspace(1e-30, 1.0, 1801)
    return np.concatenate(([0.0], geo))


def calibration_path(gamma: float, steps: int, seed: int,
                     cache_dir=None) -> Path:
    if cache_dir is None:
        cache_dir = os.environ.get(
            "BCLAB_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "bclab")
        )
    return Path(cache_dir) / f"lsv-cal-g{gamma:.6f}-s{steps}-r{seed}.npz"


def lsv_calibration(gamma: float, steps: int = 10_000_000, seed: int = 0,
                    cache_dir=None, refresh: bool = False) -> LSVCalibration:
    """Occupation-measure table from one long orbit, cached to disk.

    The invariant density has no closed form; a single calibrated orbit
    (burn-in discarded) supplies mu-estimates for interval masses.  The
    cache file carries a version header and the build parameters.
    """
    spec = LSVProcess(gamma=gamma)
    spec.validate()
    path = calibration_path(gamma, steps, seed, cache_dir)
    if path.exists() and not refresh:
        with np.load(path) as z:
            if int(z["version"]) == CALIBRATION_VERSION:
                return LSVCalibration(gamma=float(z["gamma"]),
                                      edges=z["edges"], counts=z["counts"],
                                      steps=int(z["steps"]), seed=int(z["seed"]))
    edges = _calibration_edges()
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    gen = make_generator(seed, 0)
    x = float(gen.random(1)[0])
    g = gamma
    for _ in range(spec.burn_in):
        x = x * (1.0 + (2.0 * x) ** g) if x < 0.5 else 2.0 * x - 1.0
        x = min(x, _BELOW_ONE)
    buf = np.empty(1 << 20)
    done = 0
    restart = 0
    while done < steps:
        m = min(len(buf), steps - done)
        for i in range(m):
            x = x * (1.0 + (2.0 * x) ** g) if x < 0.5 else 2.0 * x - 1.0
            if x > _BELOW_ONE:
                x = _BELOW_ONE
            buf[i] = x
        if buf[:m].min() < _DEGENERATE:
            restart += 1
            if restart > 8:
                raise RuntimeError("calibration orbit degenerate repeatedly")
            gen = make_generator(seed, 0, restart)
            x = float(gen.random(1)[0])
            for _ in range(spec.burn_in):
                x = x * (1.0 + (2.0 * x) ** g) if x < 0.5 else 2.0 * x - 1.0
                x = min(x, _BELOW_ONE)
            continue
        counts += np.histogram(buf[:m], bins=edges)[0]
        done += m
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, version=CALIBRATION_VERSION, gamma=gamma, edges=edges,
             counts=counts, steps=steps, seed=seed)
    return LSVCalibration(gamma=gamma, edges=edges, counts=counts,
                          steps=steps, seed=seed)
