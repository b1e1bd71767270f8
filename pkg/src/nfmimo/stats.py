"""Correlation statistics, capacity, model error, and operation-count model.

Correlation estimators take the expectation over the i.i.d. uniform ray
phases analytically: in the conjugate product of two coefficients every
cross-ray term has a surviving uniform phase and vanishes in expectation,
while same-ray terms cancel their random phase exactly. What remains is the
per-field normalized sum of deterministic per-ray phasor products, averaged
by Monte Carlo over scatterer fields only. This keeps the zero-lag value
exactly 1 and |rho| <= 1 for every sample count.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import (
    ChannelRealization,
    WavefrontModel,
    channel_matrix,
    combine_parts,
    los_phase,
    matrix_parts,
    nlos_delays,
    nlos_ray_phases,
    rician_weights,
    tau_los,
)
from .geometry import ScenarioConfig
from .scattering import ScattererField, field_for_realization

THREADS_ENV_VAR = "NFMIMO_THREADS"

# Seeds feed numpy SeedSequence entry lists; the mask keeps arbitrary Python
# ints in 64-bit range and the stream tag separates phase redraws from the
# field-generation stream keyed on (seed, index).
_SEED_MASK = 0xFFFFFFFFFFFFFFFF
_PHASE_STREAM = 1

# Operation tally for evaluating one angle set (one tile midpoint toward one
# receive element). Direct path: 6 additions, 2 divisions, 2 squarings,
# 1 square root, 32 arctangent table steps, 4 assignments. Scattered path:
# 10 additions, 4 divisions, 4 squarings, 2 square roots, 64 arctangent
# table steps, 4 assignments.
RO_LOS_PER_ANGLE_SET = 6 + 2 + 2 + 1 + 32 + 4
RO_NLOS_PER_ANGLE_SET = 10 + 4 + 4 + 2 + 64 + 4
RO_PER_ANGLE_SET = RO_LOS_PER_ANGLE_SET + RO_NLOS_PER_ANGLE_SET


def worker_count() -> int:
    """Thread count for realization-level parallelism, from the environment."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV_VAR} must be >= 1, got {n}")
    return n


def _map_realizations(fn, n: int) -> list:
    """Evaluate fn(0..n-1), in index order regardless of scheduling.

    Each realization derives its own RNG stream from (seed, index), and the
    reduction below walks results in index order, so any thread count
    produces identical output.
    """
    workers = worker_count()
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n)))


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    """A labeled statistic series: one complex value per axis point.

    Used for every emitted statistic (correlations, capacity, model error,
    operation counts); purely real statistics carry a zero imaginary part.
    n_excluded counts realizations dropped for zero-magnitude samples; the
    phase-expectation estimator never produces any, so it stays 0 and is
    kept for interface completeness.
    """

    axis_name: str
    lag_axis: np.ndarray
    values: np.ndarray
    t: float
    model_label: str
    n_realizations: int
    seed: int
    n_excluded: int = 0

    def __post_init__(self) -> None:
        if len(self.lag_axis) != len(self.values):
            raise ValueError("lag_axis and values must have equal length")
        if len(self.lag_axis) == 0:
            raise ValueError("a series needs at least one axis point")

    def to_csv(self, path: str | Path) -> None:
        """One row per axis point: axis value, Re, Im, magnitude, count, seed."""

        def fmt(x: float) -> str:
            if math.isinf(x):
                return "-inf" if x < 0 else "inf"
            return repr(float(x))

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([self.axis_name, "re", "im", "magnitude", "n_realizations", "seed"])
            for lag, value in zip(self.lag_axis, self.values):
                v = complex(value)
                writer.writerow(
                    [
                        fmt(float(lag)),
                        fmt(v.real),
                        fmt(v.imag),
                        fmt(abs(v)),
                        self.n_realizations,
                        self.seed,
                    ]
                )


@dataclass(frozen=True)
class ComplexityReport:
    """Operation-count summary for one wavefront model."""

    ro_total: int
    ro_los_per_pair: int
    ro_nlos_per_pair: int
    model: WavefrontModel


def ro_complexity(model: WavefrontModel, cfg: ScenarioConfig) -> ComplexityReport:
    """Angle-set operation count for synthesizing one full matrix.

    Each (tile, receive element) pair evaluates one direct and one
    scattered angle set; a tiling with one element per tile prices the
    per-element evaluation and the single full-array tile prices the
    far-field baseline.
    """
    partition = model.partition_for(cfg)
    n_sets = partition.counts_h * partition.counts_v * cfg.Q
    return ComplexityReport(
        ro_total=n_sets * RO_PER_ANGLE_SET,
        ro_los_per_pair=RO_LOS_PER_ANGLE_SET,
        ro_nlos_per_pair=RO_NLOS_PER_ANGLE_SET,
        model=model,
    )


def _validate_pair(base_p, dp, base_q, dq, cfg: ScenarioConfig):
    p1 = (int(base_p[0]), int(base_p[1]))
    p2 = (base_p[0] + dp[0], base_p[1] + dp[1])
    q2 = base_q + dq
    for name, (ph, pv) in (("base antenna", p1), ("offset antenna", p2)):
        if not (1 <= ph <= cfg.P_h and 1 <= pv <= cfg.P_v):
            raise ValueError(
                f"{name} ({ph},{pv}) out of range for a {cfg.P_h}x{cfg.P_v} array"
            )
    if not 1 <= base_q <= cfg.Q:
        raise ValueError(f"base receive element {base_q} out of range [1, {cfg.Q}]")
    if not 1 <= q2 <= cfg.Q:
        raise ValueError(f"offset receive element {q2} out of range [1, {cfg.Q}]")
    return p1, (int(p2[0]), int(p2[1])), int(q2)


def st_ccf_parts(
    dp: tuple[int, int],
    dq: int,
    dt: float,
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
    base_p: tuple[int, int] = (1, 1),
    base_q: int = 1,
) -> tuple[complex, complex, int]:
    """Direct and scattered correlation parts, unweighted, plus exclusion count.

    The direct part is the deterministic conjugate phasor product; the
    scattered part averages, over n_realizations independent fields, the
    per-field mean of deterministic per-ray conjugate phasors (random
    phases cancel ray-by-ray; cross-ray terms average to zero and are
    dropped analytically).
    """
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    p1, p2, q2 = _validate_pair(base_p, dp, base_q, dq, cfg)
    rho_los = complex(
        np.exp(1j * (los_phase(p1, base_q, t, cfg, model) - los_phase(p2, q2, t + dt, cfg, model)))
    )

    def one(i: int) -> complex:
        fld = field_for_realization(cfg, seed, i)
        ph1 = nlos_ray_phases(p1, base_q, t, cfg, model, fld)
        ph2 = nlos_ray_phases(p2, q2, t + dt, cfg, model, fld)
        return complex(np.exp(1j * (ph1 - ph2)).mean())

    samples = _map_realizations(one, n_realizations)
    rho_nlos = complex(sum(samples) / n_realizations)
    return rho_los, rho_nlos, 0


def st_ccf(
    dp: tuple[int, int],
    dq: int,
    dt: float,
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
    base_p: tuple[int, int] = (1, 1),
    base_q: int = 1,
) -> complex:
    """Space-time cross-correlation between antenna pairs offset by (dp, dq, dt).

    Equals K/(K+1) times the direct part plus 1/(K+1) times the scattered
    part of st_ccf_parts.
    """
    rho_los, rho_nlos, _ = st_ccf_parts(
        dp, dq, dt, t, cfg, model, n_realizations, seed=seed, base_p=base_p, base_q=base_q
    )
    w_los, w_nlos = rician_weights(cfg.K)
    return (w_los * w_los) * rho_los + (w_nlos * w_nlos) * rho_nlos


def temporal_acf(
    dt: float,
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
) -> complex:
    """Temporal autocorrelation: st_ccf at zero antenna offsets."""
    return st_ccf((0, 0), 0, dt, t, cfg, model, n_realizations, seed=seed)


def frequency_cf(
    df: float,
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
) -> complex:
    """Frequency correlation at offset df for one antenna pair.

    In the conjugate product of the frequency response at f_c and f_c + df
    all steering terms cancel (same pair, same time), leaving per-path
    phasors exp(j 2 pi df tau); the direct part uses the midpoint delay and
    the scattered part the per-field normalized per-ray sum.
    """
    if df < 0:
        raise ValueError(f"df must be >= 0, got {df}")
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    rho_los = complex(np.exp(1j * 2.0 * math.pi * df * tau_los(t, cfg)))

    def one(i: int) -> complex:
        fld = field_for_realization(cfg, seed, i)
        return complex(np.exp(1j * 2.0 * math.pi * df * nlos_delays(t, cfg, fld)).mean())

    samples = _map_realizations(one, n_realizations)
    rho_nlos = complex(sum(samples) / n_realizations)
    w_los, w_nlos = rician_weights(cfg.K)
    return (w_los * w_los) * rho_los + (w_nlos * w_nlos) * rho_nlos


def spatial_ccf_series(
    offsets: list[tuple[int, int]],
    dq: int,
    dt: float,
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
    base_p: tuple[int, int] = (1, 1),
    base_q: int = 1,
) -> CorrelationSeries:
    """st_ccf over a list of antenna offsets, sharing fields across offsets.

    The axis reports the offset magnitude in wavelengths. Sharing the same
    realizations across every offset keeps the curve smooth (common random
    numbers), and each offset's value equals the scalar st_ccf one.
    """
    if not offsets:
        raise ValueError("at least one antenna offset is required")
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    pairs = [_validate_pair(base_p, dp, base_q, dq, cfg) for dp in offsets]
    w_los, w_nlos = rician_weights(cfg.K)
    los_vals = np.array(
        [
            np.exp(
                1j
                * (
                    los_phase(p1, base_q, t, cfg, model)
                    - los_phase(p2, q2, t + dt, cfg, model)
                )
            )
            for p1, p2, q2 in pairs
        ]
    )

    def one(i: int) -> np.ndarray:
        fld = field_for_realization(cfg, seed, i)
        ph1 = nlos_ray_phases(pairs[0][0], base_q, t, cfg, model, fld)
        out = np.empty(len(pairs), dtype=complex)
        for j, (_, p2, q2) in enumerate(pairs):
            ph2 = nlos_ray_phases(p2, q2, t + dt, cfg, model, fld)
            out[j] = np.exp(1j * (ph1 - ph2)).mean()
        return out

    acc = np.zeros(len(pairs), dtype=complex)
    for sample in _map_realizations(one, n_realizations):
        acc += sample
    values = (w_los * w_los) * los_vals + (w_nlos * w_nlos) * (acc / n_realizations)
    axis = np.array(
        [math.hypot(dp[0] * cfg.delta_T, dp[1] * cfg.delta_T) / cfg.wavelength for dp in offsets]
    )
    return CorrelationSeries(
        axis_name="spacing_wavelengths",
        lag_axis=axis,
        values=values,
        t=t,
        model_label=model.label,
        n_realizations=n_realizations,
        seed=seed,
    )


def temporal_acf_series(
    dts: list[float],
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
) -> CorrelationSeries:
    """temporal_acf over a list of time lags, sharing fields across lags."""
    if not dts:
        raise ValueError("at least one time lag is required")
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    for dt in dts:
        if dt < 0:
            raise ValueError(f"time lags must be >= 0, got {dt}")
    w_los, w_nlos = rician_weights(cfg.K)
    base = (1, 1)
    los_vals = np.array(
        [
            np.exp(
                1j * (los_phase(base, 1, t, cfg, model) - los_phase(base, 1, t + dt, cfg, model))
            )
            for dt in dts
        ]
    )

    def one(i: int) -> np.ndarray:
        fld = field_for_realization(cfg, seed, i)
        ph1 = nlos_ray_phases(base, 1, t, cfg, model, fld)
        out = np.empty(len(dts), dtype=complex)
        for j, dt in enumerate(dts):
            ph2 = nlos_ray_phases(base, 1, t + dt, cfg, model, fld)
            out[j] = np.exp(1j * (ph1 - ph2)).mean()
        return out

    acc = np.zeros(len(dts), dtype=complex)
    for sample in _map_realizations(one, n_realizations):
        acc += sample
    values = (w_los * w_los) * los_vals + (w_nlos * w_nlos) * (acc / n_realizations)
    return CorrelationSeries(
        axis_name="dt_s",
        lag_axis=np.asarray(dts, dtype=float),
        values=values,
        t=t,
        model_label=model.label,
        n_realizations=n_realizations,
        seed=seed,
    )


def frequency_cf_series(
    dfs: list[float],
    t: float,
    cfg: ScenarioConfig,
    model: WavefrontModel,
    n_realizations: int = 500,
    *,
    seed: int = 0,
) -> CorrelationSeries:
    """frequency_cf over a list of frequency offsets, sharing fields."""
    if not dfs:
        raise ValueError("at least one frequency offset is required")
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    for df in dfs:
        if df < 0:
            raise ValueError(f"frequency offsets must be >= 0, got {df}")
    w_los, w_nlos = rician_weights(cfg.K)
    dfs_arr = np.asarray(dfs, dtype=float)
    los_vals = np.exp(1j * 2.0 * math.pi * dfs_arr * tau_los(t, cfg))

    def one(i: int) -> np.ndarray:
        fld = field_for_realization(cfg, seed, i)
        delays = nlos_delays(t, cfg, fld)
        return np.exp(1j * 2.0 * math.pi * dfs_arr[:, None] * delays[None, :]).mean(axis=1)

    acc = np.zeros(len(dfs), dtype=complex)
    for sample in _map_realizations(one, n_realizations):
        acc += sample
    values = (w_los * w_los) * los_vals + (w_nlos * w_nlos) * (acc / n_realizations)
    return CorrelationSeries(
        axis_name="df_hz",
        lag_axis=dfs_arr,
        values=values,
        t=t,
        model_label=model.label,
        n_realizations=n_realizations,
        seed=seed,
    )


def capacity(realization: ChannelRealization | np.ndarray, rho_snr: float) -> float:
    """Shannon capacity of one matrix, Frobenius-normalized, bits/s/Hz.

    The matrix is scaled so its squared Frobenius norm equals P*Q (P =
    transmit element count = column count); the result is
    log2 det(I + (rho/P) Hbar Hbar^H). Any nonzero complex scaling of H
    leaves the value unchanged.
    """
    H = realization.H if isinstance(realization, ChannelRealization) else np.asarray(realization)
    if H.ndim != 2:
        raise ValueError(f"H must be 2-D, got shape {H.shape}")
    if not (math.isfinite(rho_snr) and rho_snr >= 0):
        raise ValueError(f"rho_snr must be finite and >= 0, got {rho_snr!r}")
    n_q, n_p = H.shape
    fro2 = float(np.sum(H.real**2 + H.imag**2))
    if fro2 == 0.0:
        raise ValueError("all-zero matrix cannot be normalized for capacity")
    h_bar = H * math.sqrt(n_p * n_q / fro2)
    gram = np.eye(n_q, dtype=complex) + (rho_snr / n_p) * (h_bar @ h_bar.conj().T)
    _, logdet = np.linalg.slogdet(gram)
    return float(logdet / math.log(2.0))


def _capacity_unnormalized(H: np.ndarray, rho_snr: float) -> float:
    n_q, n_p = H.shape
    gram = np.eye(n_q, dtype=complex) + (rho_snr / n_p) * (H @ H.conj().T)
    _, logdet = np.linalg.slogdet(gram)
    return float(logdet / math.log(2.0))


def mean_capacity(
    cfg: ScenarioConfig,
    model: WavefrontModel,
    rho_snr: float,
    n_realizations: int = 500,
    *,
    seed: int = 0,
    t: float = 0.0,
    normalize_each: bool = False,
    phase_draws: int = 1,
) -> float:
    """Ensemble-average capacity over independent scatterer fields.

    By default each matrix enters as generated: its entries already have
    unit mean-square by construction, so the ensemble realizes the
    Frobenius normalization in expectation while keeping per-field power
    fluctuations (these shrink as the array grows, which is what capacity
    sweeps across array sizes measure). normalize_each=True instead forces
    the exact per-matrix normalization of capacity().

    phase_draws > 1 averages each field over that many fresh draws of the
    per-ray random phases (geometry fixed, phases redrawn). The expected
    value is unchanged; the estimator variance drops because the
    phase-average of every element's power is exactly one for any field,
    so the phase noise dominating a single draw is integrated out. Draws
    come from a dedicated stream keyed on (seed, field index), keeping
    results deterministic and independent of thread count.
    """
    if not (math.isfinite(rho_snr) and rho_snr >= 0):
        raise ValueError(f"rho_snr must be finite and >= 0, got {rho_snr!r}")
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    if phase_draws < 1:
        raise ValueError(f"phase_draws must be >= 1, got {phase_draws}")

    def one(i: int) -> float:
        fld = field_for_realization(cfg, seed, i)
        if phase_draws == 1:
            real = channel_matrix(t, cfg, model, fld)
            if normalize_each:
                return capacity(real, rho_snr)
            return _capacity_unnormalized(real.H, rho_snr)
        parts = matrix_parts(t, cfg, model, fld)
        rng = np.random.default_rng([seed & _SEED_MASK, i, _PHASE_STREAM])
        total = 0.0
        for _ in range(phase_draws):
            phases = rng.uniform(-math.pi, math.pi, fld.n_rays)
            H = combine_parts(parts, phases, cfg.K)
            if normalize_each:
                total += capacity(H, rho_snr)
            else:
                total += _capacity_unnormalized(H, rho_snr)
        return total / phase_draws

    values = _map_realizations(one, n_realizations)
    return float(sum(values) / n_realizations)


def model_error_delta(
    model: WavefrontModel, t: float, cfg: ScenarioConfig, field: ScattererField
) -> float:
    """Aggregate dB error of a model's matrix against the per-element reference.

    Sums |h - h_ref| / |h_ref| over all antenna pairs with the identical
    scatterer field and phases for both models, then takes 10*log10. A
    model that matches the reference exactly (e.g. a 1x1 tiling) yields
    -inf, returned as a sentinel rather than raised.
    """
    if model.variant == "spherical":
        raise ValueError("the per-element (spherical) model is the error reference itself")
    reference = WavefrontModel.spherical()
    h_model = channel_matrix(t, cfg, model, field).H
    h_ref = channel_matrix(t, cfg, reference, field).H
    total = float(np.sum(np.abs(h_model - h_ref) / np.abs(h_ref)))
    if total == 0.0:
        return float("-inf")
    return 10.0 * math.log10(total)
