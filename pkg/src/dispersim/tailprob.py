"""Monte Carlo tail-probability experiments for randomized free flows.

The pointwise deviation |S(t)f^omega(x) - f^omega(x)| of a randomized
field is a linear series sum_k g_k a_k(t, x) in the Gaussian coefficients,
so ensembles are evaluated by precomputing the per-lattice-point series
coefficients once per (t, x) and reducing coefficient blocks against
them.  Exceedance counting is integer based and sample streams are
counter keyed, so results are reproducible bit for bit regardless of
chunking or thread count.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats

from .decompose import (
    SchwartzSplit,
    decay_seminorm,
    multi_index,
    schwartz_split,
    spectral_derivative,
)
from .errors import ConfigurationError, FitError
from .grid import Field, GridSpec, forward_transform
from .propagators import FlowKind, evolve, symbol
from .randomize import (
    coefficient_block,
    gaussian_matrix,
    randomize_field,
    randomized_weights,
    RandomDraw,
)
from .wiener import projection_blocks, unit_lattice

_TWO_PI = 2.0 * np.pi
_E = math.e
_CHUNK = 2048


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    ci = stats.binomtest(successes, trials).proportion_ci(
        confidence_level=0.95, method="wilson"
    )
    return float(ci.low), float(ci.high)


# ---------------------------------------------------------------------------
# Experiment configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TailExperimentConfig:
    flow: FlowKind
    data: Field
    times: tuple
    thresholds: tuple
    observation_points: tuple
    ensemble_size: int
    seed: int
    max_ci_width: float | None = None

    def __post_init__(self):
        spec = self.data.spec
        self.flow.validate_for(spec)
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(
            self, "thresholds", tuple(float(a) for a in self.thresholds)
        )
        pts = tuple(tuple(int(i) for i in p) for p in self.observation_points)
        n = spec.samples_per_axis
        for p in pts:
            if len(p) != spec.dim or any(not (0 <= i < n) for i in p):
                raise ConfigurationError(f"observation point {p} outside the grid")
        object.__setattr__(self, "observation_points", pts)
        if self.ensemble_size < 100:
            raise ConfigurationError("ensemble_size must be at least 100")
        if not self.times or not self.thresholds or not pts:
            raise ConfigurationError("times, thresholds and observation points "
                                     "must be nonempty")

    def time_limit_warnings(self) -> list[str]:
        """Diagnostic only: times past the grid's dispersive resolution."""
        limit = dispersive_time_limit(self.data.spec, self.flow)
        return [
            f"|t| = {abs(t)} exceeds the dispersive resolution limit {limit:.4g}"
            for t in self.times
            if abs(t) > limit
        ]


@dataclass(frozen=True)
class TailEstimate:
    flow_label: str
    t: float
    alpha: float
    x_index: tuple
    exceed_count: int
    ensemble_size: int
    probability: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class BoundParams:
    """Constants of the Gaussian tail bound C1 * exp(-(alpha/(C e scale))^2)."""

    C: float
    C1: float
    regime: str  # 'flow-deviation' (scale = |t|) or 'data-size' (scale = ||h||)

    def __post_init__(self):
        if self.C <= 0 or self.C1 <= 0:
            raise ValueError("bound constants must be positive")
        if self.regime not in ("flow-deviation", "data-size"):
            raise ValueError(f"unknown regime {self.regime!r}")


@dataclass(frozen=True)
class FitResult:
    params: BoundParams
    r_squared: float
    n_points: int


def dispersive_time_limit(spec: GridSpec, flow: FlowKind) -> float:
    """Heuristic largest |t| before the symbol phase wraps across one
    frequency cell: pi / (dxi * max |grad phase|)."""
    xi_max = float(np.max(np.abs(spec.axis_frequencies())))
    if flow.family == "kdv":
        grad = 3.0 * xi_max**2
    elif flow.family.startswith("wave"):
        grad = 1.0
    else:
        grad = 2.0 * math.sqrt(spec.dim) * xi_max
    return math.pi / (spec.dxi * grad)


# ---------------------------------------------------------------------------
# Series coefficients of pointwise observables
# ---------------------------------------------------------------------------


def _point_phase(spec: GridSpec, x_index) -> list[np.ndarray]:
    """Per-axis arrays exp(i x_j xi_j) for the grid point at x_index."""
    coords = spec.axis_coordinates()
    freqs = spec.axis_frequencies()
    return [np.exp(1j * coords[i] * freqs) for i in x_index]


def _windowed_series(spec: GridSpec, weighted: np.ndarray) -> np.ndarray:
    """Per-lattice-point sums a[idx] = scale * sum(block * weighted[window])."""
    lattice = unit_lattice(spec)
    out = np.zeros(len(lattice), dtype=np.complex128)
    for _, idx, windows, block in projection_blocks(spec):
        out[idx] = np.sum(block * weighted[windows])
    scale = spec.frequency_cell_volume * _TWO_PI ** (-spec.dim / 2.0)
    return scale * out


def _mesh_from_axes(axes_arrays) -> np.ndarray:
    out = axes_arrays[0]
    for arr in axes_arrays[1:]:
        out = out[..., None] * arr
    return out


def deviation_coefficients(
    flow: FlowKind, f: Field, t: float, x_index
) -> np.ndarray:
    """Series coefficients a_k(t, x) of S(t)f^omega(x) - f^omega(x):
    the deviation of a draw with coefficients g is |sum_k g_k a_k|."""
    spec = f.spec
    F = forward_transform(f).coeffs
    phase = _mesh_from_axes(_point_phase(spec, x_index))
    weighted = phase * (symbol(flow, spec, t) - 1.0) * F
    return _windowed_series(spec, weighted)


def point_coefficients(f: Field, x_index, beta_idx=None) -> np.ndarray:
    """Series coefficients b_k of (d^beta f^omega)(x) = sum_k g_k b_k."""
    spec = f.spec
    F = forward_transform(f).coeffs
    weighted = _mesh_from_axes(_point_phase(spec, x_index)) * F
    if beta_idx is not None:
        beta_idx = multi_index(beta_idx)
        for j, b in enumerate(beta_idx):
            if b:
                weighted = weighted * (1j * spec.frequency_grids()[j]) ** b
    return _windowed_series(spec, weighted)


def pointwise_deviation(
    flow: FlowKind, f: Field, d: RandomDraw, t: float, x_index
) -> float:
    """|S(t)f^omega(x) - f^omega(x)| for one draw, computed through the
    full randomize/evolve pipeline (the randomization is applied once and
    shared by both terms)."""
    fo = randomize_field(f, d)
    evolved = evolve(fo, flow, t)
    idx = tuple(int(i) for i in x_index)
    return float(np.abs(evolved.values[idx] - fo.values[idx]))


def _chunk_starts(total: int, chunk: int = _CHUNK):
    return list(range(0, total, chunk))


def deviation_samples(
    flow: FlowKind,
    f: Field,
    t: float,
    x_index,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> np.ndarray:
    """Ensemble of pointwise deviations |sum_k g_k a_k| for n_samples draws."""
    a = deviation_coefficients(flow, f, t, x_index)
    out = np.empty(n_samples)

    def work(start: int) -> np.ndarray:
        count = min(_CHUNK, n_samples - start)
        g = gaussian_matrix(seed, count, a.size, sample_offset=start)
        return np.abs(g @ a)

    starts = _chunk_starts(n_samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, starts))
    else:
        blocks = [work(s) for s in starts]
    for start, block in zip(starts, blocks):
        out[start : start + block.size] = block
    return out


def estimate_tail(config: TailExperimentConfig, threads: int = 1) -> list[TailEstimate]:
    """Exceedance frequencies with Wilson intervals for every
    (t, alpha, x) cell, all cells sharing one ensemble of draws.

    Deterministic for a given seed: coefficients are counter keyed per
    sample and exceedances are integer counts, so chunking and thread
    count cannot change the result.
    """
    spec = config.data.spec
    cells = [(t, x) for t in config.times for x in config.observation_points]
    avecs = [
        deviation_coefficients(config.flow, config.data, t, x) for t, x in cells
    ]
    nk = avecs[0].size
    alphas = np.asarray(config.thresholds)
    m_total = config.ensemble_size

    def work(start: int) -> np.ndarray:
        count = min(_CHUNK, m_total - start)
        g = gaussian_matrix(config.seed, count, nk, sample_offset=start)
        local = np.zeros((len(cells), alphas.size), dtype=np.int64)
        for ci, a in enumerate(avecs):
            dev = np.abs(g @ a)
            local[ci] = np.sum(dev[:, None] > alphas[None, :], axis=0)
        return local

    starts = _chunk_starts(m_total)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, starts))
    else:
        partials = [work(s) for s in starts]
    counts = np.zeros((len(cells), alphas.size), dtype=np.int64)
    for p in partials:
        counts += p

    label = config.flow.label()
    estimates = []
    for ci, (t, x) in enumerate(cells):
        for ai, alpha in enumerate(config.thresholds):
            k = int(counts[ci, ai])
            lo, hi = wilson_interval(k, m_total)
            estimates.append(
                TailEstimate(
                    flow_label=label,
                    t=t,
                    alpha=alpha,
                    x_index=x,
                    exceed_count=k,
                    ensemble_size=m_total,
                    probability=k / m_total,
                    ci_low=lo,
                    ci_high=hi,
                )
            )
    return estimates


# ---------------------------------------------------------------------------
# Theoretical bounds and constant fitting
# ---------------------------------------------------------------------------


def theoretical_bound(params: BoundParams, alpha: float, scale: float) -> float:
    """C1 * exp(-(alpha / (C e scale))^2), clamped to [0, 1] so it can be
    compared against probabilities."""
    if scale <= 0:
        return 1.0
    exponent = (alpha / (params.C * _E * scale)) ** 2
    return float(min(1.0, params.C1 * math.exp(-min(exponent, 700.0))))


def _estimate_scale(est: TailEstimate, regime: str, scale):
    if regime == "flow-deviation":
        return abs(est.t)
    if scale is None:
        raise ValueError("data-size regime requires an explicit scale")
    return float(scale)


def fit_constants(
    estimates, regime: str, scale: float | None = None
) -> FitResult:
    """Least-squares fit of -log(probability) against (alpha/scale)^2.

    The slope is 1/(C e)^2 and the intercept -log C1.  Only cells with
    probability strictly inside (0, 1) participate; fewer than 6 such
    cells, or all-0/all-1 probabilities, raise :class:`FitError`.
    """
    xs, ys = [], []
    for est in estimates:
        if 0.0 < est.probability < 1.0:
            s = _estimate_scale(est, regime, scale)
            if s <= 0:
                continue
            xs.append((est.alpha / s) ** 2)
            ys.append(-math.log(est.probability))
    if len(xs) < 6:
        raise FitError(
            f"need at least 6 estimates with probability in (0,1), got {len(xs)}"
        )
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    if slope <= 0:
        raise FitError("fitted slope is not positive; tails are not Gaussian-shaped")
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    params = BoundParams(
        C=1.0 / (_E * math.sqrt(slope)), C1=math.exp(-intercept), regime=regime
    )
    return FitResult(params=params, r_squared=r2, n_points=len(xs))


def dominate_constants(
    estimates, params: BoundParams, scale: float | None = None
) -> BoundParams:
    """Minimal inflation of C1 so the bound sits above every cell's
    Wilson upper limit (the clamp at 1 makes saturated cells trivial)."""
    c1 = max(params.C1, 1.0)
    for est in estimates:
        s = _estimate_scale(est, params.regime, scale)
        if s <= 0 or est.ci_high <= 0:
            continue
        # Same exponent cap as theoretical_bound so domination is consistent.
        exponent = min((est.alpha / (params.C * _E * s)) ** 2, 700.0)
        c1 = max(c1, est.ci_high * math.exp(exponent))
    # Nudge above rounding of the exp round trip so the bound check is safe.
    return BoundParams(C=params.C, C1=c1 * (1.0 + 1e-9), regime=params.regime)


# ---------------------------------------------------------------------------
# Convergence-in-probability curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergencePoint:
    epsilon: float
    t: float
    alpha: float
    exceed_count: int
    ensemble_size: int
    probability: float
    ci_low: float
    ci_high: float
    h_norm: float
    h_sobolev_diagnostic: float
    split_sigma: float
    split_radius: float


def threshold_schedule(params: BoundParams, eps: float) -> float:
    """alpha(eps) = C e eps sqrt(ln(3 C1 / eps))."""
    return params.C * _E * eps * math.sqrt(math.log(3.0 * params.C1 / eps))


def convergence_curve(
    flow: FlowKind,
    f: Field,
    eps_schedule,
    params: BoundParams,
    ensemble_size: int,
    seed: int,
    observation_point=None,
    threads: int = 1,
) -> list[ConvergencePoint]:
    """For each eps: split the data, set t = eps/2 and
    alpha = C e eps sqrt(ln(3 C1/eps)) from previously fitted constants,
    and measure P(|S(t)f^omega - f^omega| > alpha) empirically."""
    spec = f.spec
    x = tuple(observation_point) if observation_point else spec.origin_index()
    rows = []
    for eps in eps_schedule:
        split = schwartz_split(f, eps)
        t = eps / 2.0
        alpha = threshold_schedule(params, eps)
        devs = deviation_samples(flow, f, t, x, ensemble_size, seed, threads=threads)
        k = int(np.sum(devs > alpha))
        lo, hi = wilson_interval(k, ensemble_size)
        rows.append(
            ConvergencePoint(
                epsilon=float(eps),
                t=t,
                alpha=alpha,
                exceed_count=k,
                ensemble_size=ensemble_size,
                probability=k / ensemble_size,
                ci_low=lo,
                ci_high=hi,
                h_norm=split.achieved_h_norm,
                h_sobolev_diagnostic=split.h_sobolev_diagnostic,
                split_sigma=split.sigma,
                split_radius=split.radius,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Joint smallness/decay event of the randomized split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityResult:
    epsilon: float
    lam: float
    m_threshold: float
    hit_count: int
    ensemble_size: int
    probability: float
    ci_low: float
    ci_high: float
    target: float
    h_norm: float
    split_sigma: float
    split_radius: float


def _split_draw_statistics(split: SchwartzSplit, pairs, n_samples, seed, sample_offset=0):
    """Per-draw (||h^omega||_L2, max pair ratio) for the randomized split.

    The pair ratio is decay_seminorm(g^omega)/decay_seminorm(g) maximized
    over the requested (alpha, beta) pairs.
    """
    spec = split.g.spec
    lattice = unit_lattice(spec)
    Fg = forward_transform(split.g).coeffs
    Fh = forward_transform(split.h).coeffs
    betas = sorted({b for _, b in pairs})
    beta_weights = {}
    for b in betas:
        w = np.ones(spec.shape, dtype=np.complex128)
        for j, bj in enumerate(b):
            if bj:
                w = w * (1j * spec.frequency_grids()[j]) ** bj
        beta_weights[b] = w * Fg
    alpha_weights = {}
    for a, _ in pairs:
        if a not in alpha_weights:
            w = np.ones(spec.shape)
            for j, aj in enumerate(a):
                if aj:
                    w = w * spec.coordinate_grids()[j] ** aj
            alpha_weights[a] = w
    base = {pair: decay_seminorm(split.g, pair[0], pair[1]) for pair in pairs}
    if not np.any(split.g.values != 0):
        # Degenerate split (g = 0): every randomized piece vanishes too, so
        # the decay event holds trivially and only the h-norm event remains.
        hnorms = np.empty(n_samples)
        for m in range(n_samples):
            coeffs = coefficient_block(seed, len(lattice), sample_offset + m)
            W = randomized_weights(spec, lattice, coeffs)
            hnorms[m] = math.sqrt(
                spec.frequency_cell_volume * float(np.sum(np.abs(W * Fh) ** 2))
            )
        return hnorms, np.zeros(n_samples)
    for pair, val in base.items():
        if val <= 0:
            raise ConfigurationError(
                f"decay seminorm of the smooth part vanishes for indices {pair}"
            )
    inv_scale = _TWO_PI ** (spec.dim / 2.0) / spec.cell_volume
    axes = tuple(range(spec.dim))
    hnorms = np.empty(n_samples)
    ratios = np.empty(n_samples)
    dxi_vol = spec.frequency_cell_volume
    for m in range(n_samples):
        coeffs = coefficient_block(seed, len(lattice), sample_offset + m)
        W = randomized_weights(spec, lattice, coeffs)
        hnorms[m] = math.sqrt(dxi_vol * float(np.sum(np.abs(W * Fh) ** 2)))
        worst = 0.0
        for b in betas:
            spec_side = np.fft.ifftshift(W * beta_weights[b])
            fld = inv_scale * np.fft.fftshift(np.fft.ifftn(spec_side, axes=axes))
            mag = np.abs(fld)
            for a, bb in pairs:
                if bb != b:
                    continue
                val = float(np.max(alpha_weights[a] * mag))
                worst = max(worst, val / base[(a, bb)])
        ratios[m] = worst
    return hnorms, ratios


def calibrate_density_constants(
    f: Field, eps: float, pairs, n_samples: int, seed: int
) -> BoundParams:
    """Fit dominating constants for the joint smallness/decay event from
    pilot ensembles of ||h^omega|| and of the worst decay ratio."""
    split = schwartz_split(f, eps)
    pairs = tuple((multi_index(a), multi_index(b)) for a, b in pairs)
    hnorms, ratios = _split_draw_statistics(split, pairs, n_samples, seed)

    def fitted(samples: np.ndarray, scale: float) -> BoundParams:
        qs = np.quantile(samples, [0.55, 0.7, 0.8, 0.88, 0.94, 0.975, 0.99])
        ests = []
        for q in qs:
            k = int(np.sum(samples > q))
            lo, hi = wilson_interval(k, samples.size)
            ests.append(
                TailEstimate(
                    flow_label="pilot",
                    t=0.0,
                    alpha=float(q),
                    x_index=(),
                    exceed_count=k,
                    ensemble_size=samples.size,
                    probability=k / samples.size,
                    ci_low=lo,
                    ci_high=hi,
                )
            )
        fit = fit_constants(ests, "data-size", scale=scale)
        return dominate_constants(ests, fit.params, scale=scale)

    h_params = fitted(hnorms, split.achieved_h_norm)
    if not np.any(ratios > 0):
        return BoundParams(C=h_params.C, C1=max(h_params.C1, 1.0), regime="data-size")
    g_params = fitted(ratios, 1.0)
    return BoundParams(
        C=max(h_params.C, g_params.C),
        C1=max(h_params.C1, g_params.C1, 1.0),
        regime="data-size",
    )


def density_event_probability(
    f: Field,
    eps: float,
    pairs,
    n_samples: int,
    seed: int,
    params: BoundParams,
) -> DensityResult:
    """Empirical probability of the joint event
    ||h^omega|| <= lambda and, for every listed index pair,
    decay_seminorm(g^omega) <= M * decay_seminorm(g),
    with lambda = C e eps sqrt(ln(C1/eps)) and M = C e sqrt(ln(C1/eps));
    compare against the 1 - 2 eps target."""
    split = schwartz_split(f, eps)
    pairs = tuple((multi_index(a), multi_index(b)) for a, b in pairs)
    log_term = math.log(params.C1 / eps)
    if log_term <= 0:
        raise ConfigurationError("C1 must exceed eps for the threshold schedule")
    lam = params.C * _E * eps * math.sqrt(log_term)
    m_threshold = params.C * _E * math.sqrt(log_term)
    hnorms, ratios = _split_draw_statistics(split, pairs, n_samples, seed)
    hits = int(np.sum((hnorms <= lam) & (ratios <= m_threshold)))
    lo, hi = wilson_interval(hits, n_samples)
    return DensityResult(
        epsilon=float(eps),
        lam=lam,
        m_threshold=m_threshold,
        hit_count=hits,
        ensemble_size=n_samples,
        probability=hits / n_samples,
        ci_low=lo,
        ci_high=hi,
        target=1.0 - 2.0 * eps,
        h_norm=split.achieved_h_norm,
        split_sigma=split.sigma,
        split_radius=split.radius,
    )


def moment_growth_check(
    g: Field, alpha_idx, beta_idx, p_list, n_samples: int, seed: int
) -> list[tuple[float, float]]:
    """Empirical L^p norms over draws of x^alpha d^beta g^omega at the
    grid point maximizing the deterministic |x^alpha d^beta g|."""
    alpha_idx = multi_index(alpha_idx)
    beta_idx = multi_index(beta_idx)
    spec = g.spec
    der = spectral_derivative(g, beta_idx)
    weight = np.ones(spec.shape)
    for j, aj in enumerate(alpha_idx):
        if aj:
            weight = weight * spec.coordinate_grids()[j] ** aj
    field_abs = np.abs(weight * der.values)
    flat = int(np.argmax(field_abs))
    x_star = np.unravel_index(flat, spec.shape)
    coords = spec.axis_coordinates()
    x_weight = 1.0
    for j, aj in enumerate(alpha_idx):
        if aj:
            x_weight *= coords[x_star[j]] ** aj
    b = x_weight * point_coefficients(g, x_star, beta_idx)
    rows = []
    if not np.any(b != 0):
        return [(float(p), 0.0) for p in p_list]
    total = {float(p): 0.0 for p in p_list}
    for start in _chunk_starts(n_samples):
        count = min(_CHUNK, n_samples - start)
        gmat = gaussian_matrix(seed, count, b.size, sample_offset=start)
        vals = np.abs(gmat @ b)
        for p in total:
            total[p] += float(np.sum(vals**p))
    for p in p_list:
        rows.append((float(p), (total[float(p)] / n_samples) ** (1.0 / float(p))))
    return rows


def series_norm(coefficients: np.ndarray) -> float:
    """l2 norm of series coefficients; the exact second moment of the
    corresponding randomized observable."""
    return float(np.sqrt(np.sum(np.abs(coefficients) ** 2)))


# ---------------------------------------------------------------------------
# Result persistence
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "flow",
    "t",
    "alpha",
    "x_index",
    "exceed_count",
    "M",
    "prob",
    "ci_low",
    "ci_high",
    "bound",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def format_x_index(x_index) -> str:
    return ":".join(str(int(i)) for i in x_index)


def write_results_csv(path, estimates, bounds=None, config_hash: str = "") -> None:
    """Write tail estimates in the fixed column layout; ``bounds`` maps
    row position to the theoretical bound value (blank when absent)."""
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i, est in enumerate(estimates):
            bound = "" if bounds is None or bounds[i] is None else _fmt(bounds[i])
            writer.writerow(
                [
                    est.flow_label,
                    _fmt(est.t),
                    _fmt(est.alpha),
                    format_x_index(est.x_index),
                    est.exceed_count,
                    est.ensemble_size,
                    _fmt(est.probability),
                    _fmt(est.ci_low),
                    _fmt(est.ci_high),
                    bound,
                ]
            )


def write_manifest(path, payload: dict) -> None:
    """JSON manifest next to a result file; the created_at stamp is
    excluded from any byte-identity guarantees."""
    body = dict(payload)
    body.setdefault("created_at", time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def bound_params_dict(params: BoundParams) -> dict:
    return asdict(params)
