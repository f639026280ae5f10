"""Mixing-coefficient computations feeding the criteria evaluators.

Four routes to a coefficient profile: exact Fourier quadrature for the
circle walk, transition-matrix powers for finite-grid kernels, the
closed-form polynomial sandwich for the sticky regeneration chain, and a
binned plug-in estimator from paired trajectory samples.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .seqcore import NONINCREASING, RealSeq, TabulatedSeq

ALPHA_INF1 = "alpha_inf1"
BETA_INF1 = "beta_inf1"
TILDE_BETA11 = "tilde_beta11"
TILDE_BETA_REV = "tilde_beta_rev"
TILDE_PHI11 = "tilde_phi11"
PAIRWISE_GAMMA = "pairwise_gamma"
PAIRWISE_PHI = "pairwise_phi"
PAIRWISE_ALPHA = "pairwise_alpha"

_KINDS = (ALPHA_INF1, BETA_INF1, TILDE_BETA11, TILDE_BETA_REV, TILDE_PHI11,
          PAIRWISE_GAMMA, PAIRWISE_PHI, PAIRWISE_ALPHA)
_MONOTONE_KINDS = (ALPHA_INF1, BETA_INF1, PAIRWISE_GAMMA)

PROVENANCE = ("analytic-bound", "computed", "empirical")


@dataclass
class MixingProfile:
    """Coefficient values sampled at lags ns, tagged with their origin."""

    kind: str
    ns: np.ndarray
    values: np.ndarray
    provenance: str = "computed"
    error_bars: np.ndarray = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        self.ns = np.asarray(self.ns, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.ns.shape != self.values.shape or self.ns.ndim != 1:
            raise ValueError("ns and values must be matching 1-d arrays")
        if np.any(np.diff(self.ns) <= 0):
            raise ValueError("lags must be strictly increasing")
        if np.any((self.values < -1e-12) | (self.values > 1 + 1e-9)):
            raise ValueError("coefficient values must lie in [0,1]")
        if self.kind in _MONOTONE_KINDS and np.any(np.diff(self.values) > 1e-12):
            raise ValueError(f"{self.kind} must be nonincreasing in the lag")
        if self.error_bars is not None:
            self.error_bars = np.asarray(self.error_bars, dtype=float)
            if self.error_bars.shape != self.values.shape:
                raise ValueError("error bars must match values")

    def as_seq(self) -> TabulatedSeq:
        """Dense RealSeq view; requires consecutive lags."""
        if len(self.ns) > 1 and np.any(np.diff(self.ns) != 1):
            raise ValueError("profile lags are not consecutive")
        return TabulatedSeq(values=self.values, start=int(self.ns[0]),
                            monotone=NONINCREASING
                            if self.kind in _MONOTONE_KINDS else "none")

    def fitted_exponent(self) -> float:
        """Slope of -log(value) against log(n), ignoring zero entries."""
        keep = self.values > 0
        if keep.sum() < 2:
            return 0.0
        return float(-np.polyfit(np.log(self.ns[keep]),
                                 np.log(self.values[keep]), 1)[0])


def profile_to_csv(profile: MixingProfile, stream=None) -> str:
    out = stream or io.StringIO()
    w = csv.writer(out)
    w.writerow(["n", "value", "provenance", "error_bar"])
    err = profile.error_bars
    for i, (n, v) in enumerate(zip(profile.ns, profile.values)):
        w.writerow([int(n), repr(float(v)), profile.provenance,
                    "" if err is None else repr(float(err[i]))])
    return out.getvalue() if stream is None else ""


@dataclass
class PairwiseTriple:
    """The (gamma, phi, alpha) bundle consumed by pairwise-sum criteria."""

    gamma: MixingProfile
    phi: MixingProfile
    alpha: MixingProfile

    def __post_init__(self):
        expected = {"gamma": PAIRWISE_GAMMA, "phi": PAIRWISE_PHI,
                    "alpha": PAIRWISE_ALPHA}
        for leg, kind in expected.items():
            prof = getattr(self, leg)
            if prof.kind != kind:
                raise ValueError(f"{leg} leg must have kind {kind!r}")

    def as_seqs(self):
        return self.gamma.as_seq(), self.phi.as_seq(), self.alpha.as_seq()


def triple_to_csv(triple: PairwiseTriple) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["leg", "n", "value", "provenance", "error_bar"])
    for leg in ("gamma", "phi", "alpha"):
        prof = getattr(triple, leg)
        err = prof.error_bars
        for i, (n, v) in enumerate(zip(prof.ns, prof.values)):
            w.writerow([leg, int(n), repr(float(v)), prof.provenance,
                        "" if err is None else repr(float(err[i]))])
    return out.getvalue()


def triple_from_csv(text: str) -> PairwiseTriple:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:3] != ["leg", "n", "value"]:
        raise ValueError("missing triple header")
    cols = {"gamma": [], "phi": [], "alpha": []}
    for row in rows[1:]:
        if row:
            cols[row[0]].append(row[1:])
    kinds = {"gamma": PAIRWISE_GAMMA, "phi": PAIRWISE_PHI,
             "alpha": PAIRWISE_ALPHA}
    profs = {}
    for leg, data in cols.items():
        ns = np.array([int(r[0]) for r in data])
        vals = np.array([float(r[1]) for r in data])
        errs = np.array([float(r[3]) if r[3] else np.nan for r in data])
        profs[leg] = MixingProfile(
            kind=kinds[leg], ns=ns, values=vals, provenance=data[0][2],
            error_bars=None if np.isnan(errs).all() else errs)
    return PairwiseTriple(**profs)


def profile_from_csv(text: str, kind: str) -> MixingProfile:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["n", "value"]:
        raise ValueError("missing profile header")
    ns, vals, errs, prov = [], [], [], "computed"
    for row in rows[1:]:
        if not row:
            continue
        ns.append(int(row[0]))
        vals.append(float(row[1]))
        prov = row[2]
        errs.append(float(row[3]) if row[3] else np.nan)
    err = np.array(errs)
    return MixingProfile(kind=kind, ns=np.array(ns), values=np.array(vals),
                         provenance=prov,
                         error_bars=None if np.isnan(err).all() else err)


# ---------------------------------------------------------------------------
# Circle random walk: exact Fourier quadrature


@dataclass(frozen=True)
class CircleTildeBeta:
    value: float
    tail_bound: float
    n: int
    a: float
    k_max: int
    grid: int

    def __float__(self):
        return self.value


def circle_tilde_beta(n: int, a: float, k_max: int = 100_000,
                      x_grid: int = 4096, tol: float = None) -> CircleTildeBeta:
    """E_x sup_t |P(X_n <= t | X_0 = x) - t| for the +-a walk on the circle.

    The conditional cdf deviation factors as phi(x) - phi(x - t) with
    phi(y) = sum_k cos(2 pi k a)^n sin(2 pi k y) / (pi k), evaluated by one
    inverse FFT on a grid large enough to hold all k_max modes.  Since the
    t-shift sweeps the same grid, the sup over t is exact on the grid:
    max(phi(x) - min phi, max phi - phi(x)).  The neglected modes
    contribute at most 1/(pi k_max), reported alongside the value.
    """
    if n < 1 or k_max < 1:
        raise ValueError("need n >= 1 and k_max >= 1")
    tail = 1.0 / (math.pi * k_max)
    if tol is not None and tail > tol:
        raise ValueError(
            f"k_max={k_max} leaves tail bound {tail:.3g} above tolerance {tol:.3g}"
        )
    M = 1 << max(int(np.ceil(np.log2(2 * k_max + 2))), int(np.ceil(np.log2(max(x_grid, 2)))))
    k = np.arange(1, k_max + 1)
    rho = np.cos(2.0 * np.pi * k * a) ** n
    coef = rho / (np.pi * k)  # sine-series coefficients of phi
    spec = np.zeros(M, dtype=complex)
    # sin(2 pi k y) = (e^{iky} - e^{-iky}) / 2i: fill conjugate pairs
    half = coef / 2j
    spec[1 : k_max + 1] = half
    spec[M - k_max :] = -half[::-1]
    phi = np.fft.ifft(spec).real * M
    lo, hi = phi.min(), phi.max()
    value = float(np.mean(np.maximum(phi - lo, hi - phi)))
    return CircleTildeBeta(value=value, tail_bound=tail, n=n, a=a,
                           k_max=k_max, grid=M)


def circle_profile(ns, a: float, k_max: int = 100_000,
                   x_grid: int = 4096) -> MixingProfile:
    vals = [circle_tilde_beta(int(n), a, k_max, x_grid) for n in ns]
    # the truncated series can overshoot the true deviation, which is <= 1
    return MixingProfile(kind=TILDE_BETA11, ns=np.asarray(ns, dtype=int),
                         values=np.minimum([v.value for v in vals], 1.0),
                         provenance="computed",
                         error_bars=np.array([v.tail_bound for v in vals]))


# ---------------------------------------------------------------------------
# Finite-grid kernels


def kernel_tilde_beta(kernel: np.ndarray, marginal: np.ndarray, n: int) -> float:
    """E_x sup_t |P(X_n <= t | X_0 = x) - F(t)| for a finite-state kernel.

    Exact for the discrete chain: thresholds between atoms change nothing,
    so the sup is a max over the state grid.
    """
    P = np.asarray(kernel, dtype=float)
    w = np.asarray(marginal, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or w.shape != (P.shape[0],):
        raise ValueError("kernel must be square with a matching marginal")
    if n < 1:
        raise ValueError("lag must be >= 1")
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-10:
        raise ValueError("kernel rows must sum to 1 (tolerance 1e-10)")
    if abs(w.sum() - 1.0) > 1e-10 or np.any(w < 0):
        raise ValueError("marginal must be a probability vector")
    if np.max(np.abs(w @ P - w)) > 1e-8:
        raise ValueError("marginal is not invariant under the kernel (1e-8)")
    Pn = np.linalg.matrix_power(P, n)
    cum = np.cumsum(Pn, axis=1)
    F = np.cumsum(w)
    dev = np.max(np.abs(cum - F[None, :]), axis=1)
    return float(w @ dev)


def dmr_kernel_grid(a: float, m: int):
    """Exact-invariance discretization of the sticky chain on m cells.

    Cell j carries the invariant mass mu_j of [(j-1)/m, j/m) under
    cdf x**a; the regeneration probability s_j is the cell's mu-barycenter,
    which makes mu invariant under s_j nu + (1 - s_j) delta_j exactly (the
    diagonal atom is kept as a point mass, never smeared).
    """
    if a <= 0 or m < 2:
        raise ValueError("need a > 0 and m >= 2")
    edges = np.linspace(0.0, 1.0, m + 1)
    mu = np.diff(edges**a)
    nu = np.diff(edges ** (a + 1.0))
    s = (a / (a + 1.0)) * nu / mu
    kernel = s[:, None] * nu[None, :]
    kernel[np.diag_indices(m)] += 1.0 - s
    return kernel, mu, s


def dmr_beta_profile(a: float, ns, m: int = 200) -> MixingProfile:
    kernel, mu, _ = dmr_kernel_grid(a, m)
    vals = [kernel_tilde_beta(kernel, mu, int(n)) for n in ns]
    return MixingProfile(kind=TILDE_BETA11, ns=np.asarray(ns, dtype=int),
                         values=np.array(vals), provenance="computed")


# ---------------------------------------------------------------------------
# Closed-form sandwich


@dataclass(frozen=True)
class BetaSandwich:
    lower: float
    upper: float


def dmr_beta_bounds(a: float, n: int) -> BetaSandwich:
    """Asymptotic envelope for the sticky chain's beta coefficient.

    a Gamma(a) n^-a below, 3 a Gamma(a) 2^a n^-a above; both valid up to
    o(1) corrections, so they are reference curves rather than bounds at
    any fixed n.
    """
    if a <= 0 or n < 1:
        raise ValueError("need a > 0 and n >= 1")
    base = a * math.gamma(a) * float(n) ** (-a)
    return BetaSandwich(lower=base, upper=3.0 * 2.0**a * base)


def dmr_bounds_profile(a: float, ns, which: str = "upper") -> MixingProfile:
    vals = np.array(
        [getattr(dmr_beta_bounds(a, int(n)), which) for n in ns], dtype=float
    )
    return MixingProfile(kind=BETA_INF1, ns=np.asarray(ns, dtype=int),
                         values=np.minimum(vals, 1.0),
                         provenance="analytic-bound")


# ---------------------------------------------------------------------------
# Empirical estimator from paired samples


@dataclass(frozen=True)
class EmpiricalAlpha:
    value: float
    se: float
    bins: int
    samples: int
    raw: float = None
    null_floor: float = None

    def __float__(self):
        return self.value


def empirical_tilde_alpha(x0, xn, t_grid=None, n_bins: int = None,
                          bootstrap: int = 100, permutations: int = 5,
                          seed: int = 0) -> EmpiricalAlpha:
    """Binned plug-in estimate of sup_t E|P(X_n <= t | X_0) - F(t)|.

    X_0 is split into about sqrt(N) equal-count bins; within each bin the
    conditional cdf is the empirical cdf of the paired X_n values.  The
    raw binned statistic never reaches zero even for independent pairs --
    each bin's cdf fluctuates around F by ~1/sqrt(bin size) and the
    absolute value keeps every fluctuation positive -- so that floor is
    measured explicitly by rerunning the statistic on pairings broken by
    permutation, and subtracted.  The standard error comes from a pair
    bootstrap; it applies to the debiased value since the subtracted floor
    shifts every replicate alike.
    """
    x0 = np.asarray(x0, dtype=float)
    xn = np.asarray(xn, dtype=float)
    if x0.shape != xn.shape or x0.ndim != 1:
        raise ValueError("need matching 1-d sample arrays")
    N = len(x0)
    if N < 1000:
        raise ValueError("need at least 1000 paired samples")
    if n_bins is None:
        n_bins = int(np.sqrt(N))
    if n_bins < 2 or N // n_bins < 20:
        raise ValueError("fewer than 20 samples per bin")
    if t_grid is None:
        lo, hi = float(xn.min()), float(xn.max())
        t_grid = np.linspace(lo, hi, 2048)
    t_grid = np.asarray(t_grid, dtype=float)

    def statistic(x0s, xns):
        xs = xns[np.argsort(x0s, kind="stable")]
        F = np.searchsorted(np.sort(xns), t_grid, side="right") / len(xns)
        acc = np.zeros(len(t_grid))
        for chunk in np.array_split(xs, n_bins):
            cdf = np.searchsorted(np.sort(chunk), t_grid, side="right") / len(chunk)
            acc += (len(chunk) / len(xns)) * np.abs(cdf - F)
        return float(acc.max())

    raw = statistic(x0, xn)
    rng = np.random.default_rng(seed)
    null = float(np.mean([statistic(x0, rng.permutation(xn))
                          for _ in range(permutations)]))
    reps = np.empty(bootstrap)
    for b in range(bootstrap):
        idx = rng.integers(0, N, size=N)
        reps[b] = statistic(x0[idx], xn[idx])
    return EmpiricalAlpha(value=max(raw - null, 0.0),
                          se=float(reps.std(ddof=1)), bins=n_bins,
                          samples=N, raw=raw, null_floor=null)
