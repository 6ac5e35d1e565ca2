"""Batch front end: config parsing, experiment orchestration, persistence.

Configuration is a single JSON object validated against the subcommand's
key set (unknown keys are rejected).  Results go to the output directory
as CSV tables plus a JSON manifest; CSV bodies are byte identical across
reruns with the same config and seed, whatever the thread count.

Exit codes: 0 success, 1 configuration error, 2 a check-* subcommand
found failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .checks import CheckResult
from .errors import ConfigurationError, FitError
from .grid import Field, GridSpec, read_binary
from .propagators import FlowKind
from .propagators import invariant_report as propagator_checks
from .randomize import khintchine_moment
from .wiener import invariant_report as wiener_checks
from .wiener import unit_lattice
from . import tailprob

_ENV_PREFIX = "DISPERSIM_"


def _fail(message: str) -> int:
    print(f"config error: {message}", file=sys.stderr)
    return 1


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigurationError(f"unknown {where} field(s): {', '.join(unknown)}")


def _require(obj: dict, keys, where: str) -> None:
    missing = sorted(k for k in keys if k not in obj)
    if missing:
        raise ConfigurationError(f"missing {where} field(s): {', '.join(missing)}")


def parse_seed(value) -> int:
    if isinstance(value, bool):
        raise ConfigurationError("seed must be an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 0)  # accepts decimal and 0x-prefixed hex
        except ValueError:
            raise ConfigurationError(f"seed {value!r} is not a valid integer") from None
    raise ConfigurationError(f"seed must be an integer, got {type(value).__name__}")


def parse_grid(obj) -> GridSpec:
    if not isinstance(obj, dict):
        raise ConfigurationError("grid must be an object")
    _require(obj, ("dim", "samples_per_axis", "extent"), "grid")
    _reject_unknown(obj, ("dim", "samples_per_axis", "extent"), "grid")
    return GridSpec(
        dim=int(obj["dim"]),
        samples_per_axis=int(obj["samples_per_axis"]),
        extent=float(obj["extent"]),
    )


def parse_data(obj, spec: GridSpec) -> Field:
    if not isinstance(obj, dict) or "recipe" not in obj:
        raise ConfigurationError("data must be an object with a 'recipe' field")
    recipe = obj["recipe"]
    if recipe == "gaussian":
        _reject_unknown(obj, ("recipe", "width", "amplitude"), "data")
        width = float(obj.get("width", 1.0))
        amplitude = float(obj.get("amplitude", 1.0))
        if width <= 0:
            raise ConfigurationError("gaussian width must be positive")
        r2 = np.zeros(spec.shape)
        for g in spec.coordinate_grids():
            r2 = r2 + g**2
        return Field(spec, amplitude * np.exp(-r2 / (2.0 * width**2)))
    if recipe == "mode":
        _reject_unknown(obj, ("recipe", "frequency"), "data")
        _require(obj, ("frequency",), "data")
        xi0 = np.asarray(obj["frequency"], dtype=float).reshape(-1)
        if xi0.size != spec.dim:
            raise ConfigurationError("mode frequency must have one entry per axis")
        steps = xi0 / spec.dxi
        if np.max(np.abs(steps - np.round(steps))) > 1e-9:
            raise ConfigurationError(
                "mode frequency must sit on the grid's frequency lattice"
            )
        phase = np.zeros(spec.shape)
        for v, g in zip(xi0, spec.coordinate_grids()):
            phase = phase + v * g
        return Field(spec, np.exp(1j * phase))
    if recipe == "indicator":
        _reject_unknown(obj, ("recipe", "radius"), "data")
        _require(obj, ("radius",), "data")
        radius = float(obj["radius"])
        if radius <= 0:
            raise ConfigurationError("indicator radius must be positive")
        inside = np.ones(spec.shape, dtype=bool)
        for g in spec.coordinate_grids():
            inside &= np.abs(g) <= radius
        return Field(spec, inside.astype(np.complex128))
    if recipe == "custom-file":
        _reject_unknown(obj, ("recipe", "path"), "data")
        _require(obj, ("path",), "data")
        loaded = read_binary(obj["path"])
        if not isinstance(loaded, Field):
            raise ConfigurationError("custom-file must hold a physical-space field")
        if loaded.spec != spec:
            raise ConfigurationError(
                "custom-file grid does not match the configured grid"
            )
        return loaded
    raise ConfigurationError(
        f"unknown data recipe {recipe!r}; expected gaussian, mode, indicator"
        " or custom-file"
    )


def parse_flows(config) -> list[FlowKind]:
    if ("flow" in config) == ("flows" in config):
        raise ConfigurationError("exactly one of 'flow' or 'flows' is required")
    names = [config["flow"]] if "flow" in config else list(config["flows"])
    return [FlowKind.parse(str(n)) for n in names]


def observation_points(config, spec: GridSpec, seed: int):
    """Configured points, or the origin plus 4 seeded random grid points."""
    if "observation_points" in config:
        return tuple(tuple(int(i) for i in p) for p in config["observation_points"])
    rng = np.random.default_rng(seed)
    pts = [spec.origin_index()]
    for _ in range(4):
        pts.append(tuple(int(i) for i in rng.integers(0, spec.samples_per_axis, spec.dim)))
    return tuple(pts)


def config_hash(config: dict) -> str:
    """Hash of the scientific configuration; execution-only knobs
    (threads, output_dir) are excluded so they cannot change result bytes."""
    body = {k: v for k, v in config.items() if k not in ("threads", "output_dir")}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

_COMMON_KEYS = ("seed", "threads", "output_dir")


def _print_checks(results: list[CheckResult]) -> int:
    for res in results:
        print(res.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 2 if failed else 0


def _grids_from_config(config) -> dict[int, GridSpec]:
    if "grids" in config:
        specs = [parse_grid(g) for g in config["grids"]]
        by_dim = {}
        for s in specs:
            if s.dim in by_dim:
                raise ConfigurationError(f"duplicate grid for dim {s.dim}")
            by_dim[s.dim] = s
        return by_dim
    return {1: GridSpec(1, 64, 16.0), 2: GridSpec(2, 32, 16.0)}


def run_check_wiener(config, seed, threads, out_dir) -> int:
    _reject_unknown(config, _COMMON_KEYS + ("grids",), "check-wiener")
    return _print_checks(wiener_checks(_grids_from_config(config), seed=seed))


def run_check_propagators(config, seed, threads, out_dir) -> int:
    _reject_unknown(config, _COMMON_KEYS + ("grids",), "check-propagators")
    return _print_checks(propagator_checks(_grids_from_config(config), seed=seed))


def run_khintchine(config, seed, threads, out_dir) -> int:
    allowed = _COMMON_KEYS + ("p_values", "vector_length", "n_vectors", "samples")
    _reject_unknown(config, allowed, "khintchine")
    p_values = [float(p) for p in config.get("p_values", (2, 4, 8, 16))]
    length = int(config.get("vector_length", 32))
    n_vectors = int(config.get("n_vectors", 20))
    samples = int(config.get("samples", 10_000))
    rng = np.random.default_rng(seed)
    vectors = []
    for i in range(n_vectors):
        if i % 2 == 0:
            c = np.zeros(length, dtype=np.complex128)
            c[(i // 2) % length] = 1.0
        else:
            c = rng.standard_normal(length) + 1j * rng.standard_normal(length)
            c /= np.linalg.norm(c)
        vectors.append(c)
    rows = []
    worst = 0.0
    for vid, c in enumerate(vectors):
        norm_c = float(np.linalg.norm(c))
        for p in p_values:
            moment = khintchine_moment(c, p, samples, seed + vid)
            ratio = moment / (math.sqrt(p) * norm_c)
            worst = max(worst, ratio)
            rows.append((vid, p, moment, ratio))
    os.makedirs(out_dir, exist_ok=True)
    chash = config_hash(config)
    path = os.path.join(out_dir, "khintchine_results.csv")
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        fh.write("vector_id,p,moment,ratio\n")
        for vid, p, moment, ratio in rows:
            fh.write(f"{vid},{repr(float(p))},{repr(float(moment))},{repr(float(ratio))}\n")
    tailprob.write_manifest(
        os.path.join(out_dir, "khintchine_manifest.json"),
        {
            "config": config,
            "config_hash": chash,
            "seed": seed,
            "software_version": __version__,
            "worst_ratio": worst,
            "normalization": "E|g_k|^2 = 1 (complex standard Gaussian)",
        },
    )
    print(f"worst ratio moment / (sqrt(p) ||c||): {worst:.4f} -> {path}")
    return 0


def _calibration(flow, data, times, targets, ensemble, seed, x_index, threads):
    """Fit tail constants at the largest |t| and inflate them to dominate
    every (t, alpha) calibration cell."""
    all_cells = []
    fit_cells = []
    t_fit = max(times, key=abs)
    for t in times:
        norm_a = tailprob.series_norm(
            tailprob.deviation_coefficients(flow, data, t, x_index)
        )
        if norm_a == 0:
            continue
        alphas = tuple(sorted(norm_a * math.sqrt(-math.log(p)) for p in targets))
        cfg = tailprob.TailExperimentConfig(
            flow, data, (t,), alphas, (x_index,), ensemble, seed
        )
        cells = tailprob.estimate_tail(cfg, threads=threads)
        all_cells.extend(cells)
        if t == t_fit:
            fit_cells.extend(cells)
    fit = tailprob.fit_constants(fit_cells, "flow-deviation")
    dom = tailprob.dominate_constants(all_cells, fit.params)
    return fit, dom, all_cells


_CAL_TARGETS = (0.4, 0.3, 0.2, 0.12, 0.06, 0.03, 0.012)


def run_tails(config, seed, threads, out_dir) -> int:
    allowed = _COMMON_KEYS + (
        "grid",
        "flow",
        "flows",
        "data",
        "times",
        "thresholds",
        "observation_points",
        "ensemble_size",
        "max_ci_width",
    )
    _reject_unknown(config, allowed, "tails")
    _require(config, ("grid", "data", "times", "thresholds", "ensemble_size"), "tails")
    spec = parse_grid(config["grid"])
    data = parse_data(config["data"], spec)
    flows = parse_flows(config)
    points = observation_points(config, spec, seed)
    chash = config_hash(config)
    os.makedirs(out_dir, exist_ok=True)

    estimates = []
    bounds = []
    manifest_fits = {}
    warnings = []
    for flow in flows:
        cfg = tailprob.TailExperimentConfig(
            flow=flow,
            data=data,
            times=tuple(config["times"]),
            thresholds=tuple(config["thresholds"]),
            observation_points=points,
            ensemble_size=int(config["ensemble_size"]),
            seed=seed,
            max_ci_width=config.get("max_ci_width"),
        )
        warnings.extend(f"{flow.label()}: {w}" for w in cfg.time_limit_warnings())
        cells = tailprob.estimate_tail(cfg, threads=threads)
        params = None
        try:
            fit = tailprob.fit_constants(cells, "flow-deviation")
            params = tailprob.dominate_constants(cells, fit.params)
            manifest_fits[flow.label()] = {
                "C": params.C,
                "C1": params.C1,
                "regime": params.regime,
                "r_squared": fit.r_squared,
            }
        except FitError as exc:
            manifest_fits[flow.label()] = {"unfittable": str(exc)}
        for est in cells:
            estimates.append(est)
            bounds.append(
                None
                if params is None
                else tailprob.theoretical_bound(params, est.alpha, abs(est.t))
            )
        if cfg.max_ci_width is not None:
            wide = [
                e for e in cells if (e.ci_high - e.ci_low) > cfg.max_ci_width
            ]
            if wide:
                warnings.append(
                    f"{flow.label()}: {len(wide)} cell(s) wider than the requested"
                    f" CI width {cfg.max_ci_width}"
                )

    path = os.path.join(out_dir, "tails_results.csv")
    tailprob.write_results_csv(path, estimates, bounds, config_hash=chash)
    tailprob.write_manifest(
        os.path.join(out_dir, "tails_manifest.json"),
        {
            "config": config,
            "config_hash": chash,
            "seed": seed,
            "software_version": __version__,
            "fitted_constants": manifest_fits,
            "lattice_hash": unit_lattice(spec).digest(),
            "ensemble_size": int(config["ensemble_size"]),
            "warnings": warnings,
            "normalization": "E|g_k|^2 = 1 (complex standard Gaussian)",
        },
    )
    print(f"wrote {len(estimates)} rows -> {path}")
    return 0


def run_convergence(config, seed, threads, out_dir) -> int:
    allowed = _COMMON_KEYS + (
        "grid",
        "flow",
        "flows",
        "data",
        "epsilon_schedule",
        "ensemble_size",
        "calibration_ensemble",
        "observation_points",
    )
    _reject_unknown(config, allowed, "convergence")
    _require(config, ("grid", "data", "epsilon_schedule", "ensemble_size"), "convergence")
    spec = parse_grid(config["grid"])
    data = parse_data(config["data"], spec)
    flows = parse_flows(config)
    schedule = [float(e) for e in config["epsilon_schedule"]]
    if any(e <= 0 for e in schedule):
        raise ConfigurationError("epsilon_schedule entries must be positive")
    ensemble = int(config["ensemble_size"])
    cal_ensemble = int(config.get("calibration_ensemble", max(2000, ensemble // 2)))
    x_index = observation_points(config, spec, seed)[0]
    chash = config_hash(config)
    os.makedirs(out_dir, exist_ok=True)

    path = os.path.join(out_dir, "convergence_results.csv")
    manifest_fits = {}
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        fh.write(
            "flow,epsilon,t,alpha,exceed_count,M,prob,ci_low,ci_high,h_norm,bound\n"
        )
        for flow in flows:
            times = tuple(e / 2.0 for e in schedule)
            fit, params, _ = _calibration(
                flow, data, times, _CAL_TARGETS, cal_ensemble, seed + 1, x_index, threads
            )
            rows = tailprob.convergence_curve(
                flow, data, schedule, params, ensemble, seed, x_index, threads=threads
            )
            manifest_fits[flow.label()] = {
                "C": params.C,
                "C1": params.C1,
                "r_squared": fit.r_squared,
                "splits": [
                    {
                        "epsilon": r.epsilon,
                        "sigma": r.split_sigma,
                        "radius": r.split_radius,
                        "achieved_h_norm": r.h_norm,
                    }
                    for r in rows
                ],
            }
            for r in rows:
                bound = min(
                    1.0,
                    3.0
                    * params.C1
                    * math.exp(-((r.alpha / (params.C * math.e * r.epsilon)) ** 2)),
                )
                fh.write(
                    ",".join(
                        [
                            flow.label(),
                            repr(float(r.epsilon)),
                            repr(float(r.t)),
                            repr(float(r.alpha)),
                            str(r.exceed_count),
                            str(r.ensemble_size),
                            repr(float(r.probability)),
                            repr(float(r.ci_low)),
                            repr(float(r.ci_high)),
                            repr(float(r.h_norm)),
                            repr(float(bound)),
                        ]
                    )
                    + "\n"
                )
    tailprob.write_manifest(
        os.path.join(out_dir, "convergence_manifest.json"),
        {
            "config": config,
            "config_hash": chash,
            "seed": seed,
            "software_version": __version__,
            "fitted_constants": manifest_fits,
            "lattice_hash": unit_lattice(spec).digest(),
            "normalization": "E|g_k|^2 = 1 (complex standard Gaussian)",
        },
    )
    print(f"wrote convergence curves for {len(flows)} flow(s) -> {path}")
    return 0


def run_density(config, seed, threads, out_dir) -> int:
    allowed = _COMMON_KEYS + (
        "grid",
        "data",
        "epsilon_schedule",
        "multi_indices",
        "ensemble_size",
        "calibration_ensemble",
    )
    _reject_unknown(config, allowed, "density")
    _require(
        config, ("grid", "data", "epsilon_schedule", "ensemble_size"), "density"
    )
    spec = parse_grid(config["grid"])
    data = parse_data(config["data"], spec)
    schedule = [float(e) for e in config["epsilon_schedule"]]
    pairs = [
        (tuple(int(i) for i in a), tuple(int(i) for i in b))
        for a, b in config.get(
            "multi_indices",
            [[[0] * spec.dim, [0] * spec.dim], [[1] * spec.dim, [1] * spec.dim]],
        )
    ]
    ensemble = int(config["ensemble_size"])
    cal_ensemble = int(config.get("calibration_ensemble", ensemble))
    chash = config_hash(config)
    os.makedirs(out_dir, exist_ok=True)

    path = os.path.join(out_dir, "density_results.csv")
    results = []
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={chash}\n")
        fh.write("epsilon,lambda,m_threshold,hit_count,M,prob,ci_low,ci_high,target\n")
        for eps in schedule:
            params = tailprob.calibrate_density_constants(
                data, eps, pairs, cal_ensemble, seed + 1
            )
            res = tailprob.density_event_probability(
                data, eps, pairs, ensemble, seed, params
            )
            results.append((eps, params, res))
            fh.write(
                ",".join(
                    [
                        repr(float(res.epsilon)),
                        repr(float(res.lam)),
                        repr(float(res.m_threshold)),
                        str(res.hit_count),
                        str(res.ensemble_size),
                        repr(float(res.probability)),
                        repr(float(res.ci_low)),
                        repr(float(res.ci_high)),
                        repr(float(res.target)),
                    ]
                )
                + "\n"
            )
    tailprob.write_manifest(
        os.path.join(out_dir, "density_manifest.json"),
        {
            "config": config,
            "config_hash": chash,
            "seed": seed,
            "software_version": __version__,
            "fitted_constants": {
                repr(eps): {"C": p.C, "C1": p.C1} for eps, p, _ in results
            },
            "splits": [
                {
                    "epsilon": eps,
                    "sigma": r.split_sigma,
                    "radius": r.split_radius,
                    "achieved_h_norm": r.h_norm,
                }
                for eps, _, r in results
            ],
            "multi_indices": [[list(a), list(b)] for a, b in pairs],
            "lattice_hash": unit_lattice(spec).digest(),
            "normalization": "E|g_k|^2 = 1 (complex standard Gaussian)",
        },
    )
    print(f"wrote {len(results)} density rows -> {path}")
    return 0


def run_report(config, seed, threads, out_dir) -> int:
    _reject_unknown(config, _COMMON_KEYS, "report")
    rows = []
    for name in sorted(os.listdir(out_dir) if os.path.isdir(out_dir) else []):
        if not name.endswith("_results.csv"):
            continue
        with open(os.path.join(out_dir, name)) as fh:
            lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
        if not lines:
            continue
        header = lines[0].split(",")
        for ln in lines[1:]:
            rows.append((name, dict(zip(header, ln.split(",")))))
    if not rows:
        print(f"no result files under {out_dir}")
        return 0
    print(f"{'file':<28} {'flow':<16} {'prob':>10} {'ci_high':>10} {'bound':>10} ok")
    n_ok = 0
    comparable = 0
    for name, row in rows:
        prob = row.get("prob", "")
        ci_high = row.get("ci_high", "")
        bound = row.get("bound", "")
        verdict = ""
        if bound not in ("", None) and ci_high:
            comparable += 1
            ok = float(ci_high) <= float(bound)
            n_ok += ok
            verdict = "yes" if ok else "NO"
        print(
            f"{name:<28} {row.get('flow', '-'):<16} {prob:>10.10s}"
            f" {ci_high:>10.10s} {str(bound):>10.10s} {verdict}"
        )
    if comparable:
        print(f"{n_ok}/{comparable} rows with bounds are dominated")
    return 0


_SUBCOMMANDS = {
    "check-wiener": run_check_wiener,
    "check-propagators": run_check_propagators,
    "khintchine": run_khintchine,
    "tails": run_tails,
    "convergence": run_convergence,
    "density": run_density,
    "report": run_report,
}


def _env(name: str):
    return os.environ.get(_ENV_PREFIX + name)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dispersim",
        description="Randomized dispersive-flow experiments on periodic grids",
    )
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--seed", help="overrides the config seed (decimal or hex)")
    parser.add_argument("--threads", type=int, help="worker threads for ensembles")
    parser.add_argument("--out", help="output directory for result files")
    args = parser.parse_args(argv)

    config_path = args.config or _env("CONFIG")
    config = {}
    if config_path:
        try:
            with open(config_path) as fh:
                config = json.load(fh)
        except OSError as exc:
            return _fail(f"cannot read config: {exc}")
        except json.JSONDecodeError as exc:
            return _fail(f"config is not valid JSON: {exc}")
        if not isinstance(config, dict):
            return _fail("config must be a JSON object")

    try:
        seed_raw = args.seed or _env("SEED") or config.get("seed", 0)
        seed = parse_seed(seed_raw)
        threads_raw = (
            args.threads
            if args.threads is not None
            else _env("THREADS") or config.get("threads", 1)
        )
        threads = int(threads_raw)
        if threads < 1:
            raise ConfigurationError("threads must be >= 1")
        out_dir = args.out or _env("OUT") or config.get("output_dir", "results")
        return _SUBCOMMANDS[args.subcommand](config, seed, threads, out_dir)
    except ConfigurationError as exc:
        return _fail(str(exc))
    except (FitError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
