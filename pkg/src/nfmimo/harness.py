"""Experiment orchestration: sweeps, CSV emission, manifests, config loading.

Each experiment kind produces one plot-ready sweep: it runs
the relevant statistic over an axis, writes one CSV per curve plus a JSON
manifest (config snapshot, seed, wall clock, sha256 digest per output), and
is deterministic for a fixed seed and config.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import WavefrontModel
from .geometry import (
    ScenarioConfig,
    config_from_dict,
    rayleigh_distance,
    rayleigh_distance_aperture,
)
from .scattering import field_for_realization
from .stats import (
    CorrelationSeries,
    frequency_cf_series,
    mean_capacity,
    model_error_delta,
    ro_complexity,
    spatial_ccf_series,
    temporal_acf_series,
)

EXPERIMENT_KINDS = (
    "error_vs_array",
    "error_vs_subarray",
    "complexity_sweep",
    "spatial_ccf",
    "temporal_acf",
    "frequency_cf",
    "capacity_sweep",
    "rayleigh_table",
)


@dataclass(frozen=True)
class Experiment:
    """One sweep request: what to run, its axis, the seed, and where to write."""

    kind: str
    sweep: dict = field(default_factory=dict)
    seed: int = 0
    output: Path = Path(".")

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(
                f"unknown experiment kind {self.kind!r}; expected one of {', '.join(EXPERIMENT_KINDS)}"
            )
        object.__setattr__(self, "output", Path(self.output))


@dataclass(frozen=True)
class RunManifest:
    """Record of one run: inputs, code version, timing, output digests."""

    experiment: str
    config: dict
    sweep: dict
    code_version: str
    seed: int
    wall_clock_s: float
    outputs: dict[str, str]

    def to_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def validate_config(raw: str) -> ScenarioConfig:
    """Parse a JSON config text into a ScenarioConfig.

    Empty or whitespace-only text yields the full default profile. Unknown
    keys, malformed JSON, and invariant violations raise ValueError naming
    the offending field.
    """
    text = raw.strip()
    if not text:
        return ScenarioConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from None
    if data is None:
        return ScenarioConfig()
    if not isinstance(data, dict):
        raise ValueError(f"config must be a JSON object, got {type(data).__name__}")
    return config_from_dict(data)


def load_config(path: str | Path | None) -> ScenarioConfig:
    """validate_config over a file path; None means the default profile."""
    if path is None:
        return ScenarioConfig()
    return validate_config(Path(path).read_text(encoding="utf-8"))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _model_from_sweep(sweep: dict, default: str = "spherical") -> WavefrontModel:
    return WavefrontModel.parse(str(sweep.get("model", default)))


def _int_list(sweep: dict, key: str, default: list[int]) -> list[int]:
    values = sweep.get(key, default)
    try:
        out = [int(v) for v in values]
    except (TypeError, ValueError):
        raise ValueError(f"sweep key {key!r} must be a list of integers, got {values!r}") from None
    if not out:
        raise ValueError(f"sweep key {key!r} must be a nonempty list")
    return out


def _float_list(sweep: dict, key: str, default: list[float]) -> list[float]:
    values = sweep.get(key, default)
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ValueError(f"sweep key {key!r} must be a list of numbers, got {values!r}") from None
    if not out:
        raise ValueError(f"sweep key {key!r} must be a nonempty list")
    return out


def _series_to_file(series: CorrelationSeries, out_dir: Path, stem: str, outputs: dict) -> None:
    path = out_dir / f"{stem}.csv"
    series.to_csv(path)
    outputs[path.name] = _sha256(path)


def _safe_label(model: WavefrontModel) -> str:
    return model.label.replace(":", "_")


def _run_rayleigh_table(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    """Near/far boundary for the standard frequency x aperture grid.

    Also appends the configured scenario's own array as a final row so the
    table always reports the active geometry.
    """
    frequencies = _float_list(exp.sweep, "frequencies_hz", [2.4e9, 5e9])
    apertures = exp.sweep.get("apertures_m", [[1.0, 0.1], [1.0, 2.0], [2.0, 2.0]])
    path = exp.output / "rayleigh_table.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("frequency_hz,width_m,height_m,rayleigh_m\n")
        for f_c in frequencies:
            lam = cfg.c / f_c
            for pair in apertures:
                w, h = float(pair[0]), float(pair[1])
                d = math.hypot(w, h)
                fh.write(f"{f_c!r},{w!r},{h!r},{rayleigh_distance_aperture(d, lam)!r}\n")
        fh.write(f"{cfg.f_c!r},configured,configured,{rayleigh_distance(cfg)!r}\n")
    outputs[path.name] = _sha256(path)


def _run_error_vs_array(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    """Model error against the per-element reference as the array side grows.

    Subarray tile sizes are clamped to the current side so one sweep can
    cross sides smaller than the requested tile.
    """
    sides = _int_list(exp.sweep, "sides", [8, 16, 32, 64])
    model = _model_from_sweep(exp.sweep, default="planar")
    if model.variant == "spherical":
        raise ValueError("error sweeps compare against the spherical reference; pick another model")
    t = float(exp.sweep.get("t", 0.0))
    deltas = []
    for side in sides:
        if side < 1:
            raise ValueError(f"array sides must be >= 1, got {side}")
        cfg_side = replace(cfg, P_h=side, P_v=side)
        if model.variant == "subarray":
            side_model = WavefrontModel.subarray(
                min(model.p_max_h, side), min(model.p_max_v, side)
            )
        else:
            side_model = model
        fld = field_for_realization(cfg_side, exp.seed, 0)
        deltas.append(model_error_delta(side_model, t, cfg_side, fld))
    series = CorrelationSeries(
        axis_name="array_side",
        lag_axis=np.asarray(sides, dtype=float),
        values=np.asarray(deltas, dtype=complex),
        t=t,
        model_label=model.label,
        n_realizations=1,
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, f"error_vs_array__{_safe_label(model)}", outputs)


def _run_error_vs_subarray(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    """Model error of square tilings as the tile size grows, one fixed field."""
    p_max_list = _int_list(exp.sweep, "p_max_list", [1, 2, 4, 8, 16, 30, 32, 64])
    t = float(exp.sweep.get("t", 0.0))
    limit = min(cfg.P_h, cfg.P_v)
    for p_max in p_max_list:
        if not 1 <= p_max <= limit:
            raise ValueError(
                f"p_max = {p_max} outside [1, {limit}]; tile sizes cannot exceed the array side"
            )
    fld = field_for_realization(cfg, exp.seed, 0)
    deltas = [
        model_error_delta(WavefrontModel.subarray(p, p), t, cfg, fld) for p in p_max_list
    ]
    series = CorrelationSeries(
        axis_name="p_max",
        lag_axis=np.asarray(p_max_list, dtype=float),
        values=np.asarray(deltas, dtype=complex),
        t=t,
        model_label="subarray",
        n_realizations=1,
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, "error_vs_subarray", outputs)


def _run_complexity_sweep(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    """Operation counts of square tilings over tile size."""
    p_max_list = _int_list(exp.sweep, "p_max_list", [1, 2, 4, 8, 16, 30])
    limit = min(cfg.P_h, cfg.P_v)
    for p_max in p_max_list:
        if not 1 <= p_max <= limit:
            raise ValueError(
                f"p_max = {p_max} outside [1, {limit}]; tile sizes cannot exceed the array side"
            )
    totals = [
        ro_complexity(WavefrontModel.subarray(p, p), cfg).ro_total for p in p_max_list
    ]
    series = CorrelationSeries(
        axis_name="p_max",
        lag_axis=np.asarray(p_max_list, dtype=float),
        values=np.asarray(totals, dtype=complex),
        t=0.0,
        model_label="subarray",
        n_realizations=0,
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, "complexity_sweep", outputs)


def _run_spatial_ccf(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    model = _model_from_sweep(exp.sweep)
    max_offset = int(exp.sweep.get("max_offset", min(32, cfg.P_h - 1)))
    if not 0 <= max_offset <= cfg.P_h - 1:
        raise ValueError(f"max_offset must be within [0, {cfg.P_h - 1}], got {max_offset}")
    offsets = [(dh, 0) for dh in range(max_offset + 1)]
    series = spatial_ccf_series(
        offsets,
        int(exp.sweep.get("dq", 0)),
        float(exp.sweep.get("dt", 0.0)),
        float(exp.sweep.get("t", 0.0)),
        cfg,
        model,
        int(exp.sweep.get("n_realizations", 500)),
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, f"spatial_ccf__{_safe_label(model)}", outputs)


def _run_temporal_acf(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    model = _model_from_sweep(exp.sweep)
    dt_max = float(exp.sweep.get("dt_max", 0.05))
    points = int(exp.sweep.get("points", 101))
    if dt_max < 0 or points < 1:
        raise ValueError("dt_max must be >= 0 and points >= 1")
    dts = list(np.linspace(0.0, dt_max, points))
    series = temporal_acf_series(
        dts,
        float(exp.sweep.get("t", 0.0)),
        cfg,
        model,
        int(exp.sweep.get("n_realizations", 500)),
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, f"temporal_acf__{_safe_label(model)}", outputs)


def _run_frequency_cf(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    model = _model_from_sweep(exp.sweep)
    df_max = float(exp.sweep.get("df_max", 1e7))
    points = int(exp.sweep.get("points", 101))
    if df_max < 0 or points < 1:
        raise ValueError("df_max must be >= 0 and points >= 1")
    dfs = list(np.linspace(0.0, df_max, points))
    series = frequency_cf_series(
        dfs,
        float(exp.sweep.get("t", 0.0)),
        cfg,
        model,
        int(exp.sweep.get("n_realizations", 500)),
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, f"frequency_cf__{_safe_label(model)}", outputs)


def _run_capacity_sweep(exp: Experiment, cfg: ScenarioConfig, outputs: dict) -> None:
    model = _model_from_sweep(exp.sweep)
    snr_db = _float_list(exp.sweep, "snr_db_list", [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    n_realizations = int(exp.sweep.get("n_realizations", 500))
    normalize_each = bool(exp.sweep.get("normalize_each", False))
    phase_draws = int(exp.sweep.get("phase_draws", 1))
    t = float(exp.sweep.get("t", 0.0))
    values = [
        mean_capacity(
            cfg,
            model,
            10.0 ** (db / 10.0),
            n_realizations,
            seed=exp.seed,
            t=t,
            normalize_each=normalize_each,
            phase_draws=phase_draws,
        )
        for db in snr_db
    ]
    series = CorrelationSeries(
        axis_name="snr_db",
        lag_axis=np.asarray(snr_db, dtype=float),
        values=np.asarray(values, dtype=complex),
        t=t,
        model_label=model.label,
        n_realizations=n_realizations,
        seed=exp.seed,
    )
    _series_to_file(series, exp.output, f"capacity_sweep__{_safe_label(model)}", outputs)


_RUNNERS = {
    "rayleigh_table": _run_rayleigh_table,
    "error_vs_array": _run_error_vs_array,
    "error_vs_subarray": _run_error_vs_subarray,
    "complexity_sweep": _run_complexity_sweep,
    "spatial_ccf": _run_spatial_ccf,
    "temporal_acf": _run_temporal_acf,
    "frequency_cf": _run_frequency_cf,
    "capacity_sweep": _run_capacity_sweep,
}


def run_experiment(exp: Experiment, cfg: ScenarioConfig) -> RunManifest:
    """Execute one experiment: write its CSV curve(s) and a manifest.

    Deterministic for fixed (seed, config, sweep): output CSV bytes are
    identical across runs; only the manifest's wall-clock field varies.
    """
    exp.output.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}
    start = time.perf_counter()
    _RUNNERS[exp.kind](exp, cfg, outputs)
    elapsed = time.perf_counter() - start
    manifest = RunManifest(
        experiment=exp.kind,
        config=asdict(cfg),
        sweep={k: v for k, v in sorted(exp.sweep.items())},
        code_version=__version__,
        seed=exp.seed,
        wall_clock_s=elapsed,
        outputs=outputs,
    )
    manifest.to_json(exp.output / "manifest.json")
    return manifest
