"""Scenario geometry for a downlink with a large uniform planar array.

Coordinates, antenna indexing, the near/far-field boundary distance, and the
subarray partition used by the mixed spherical/planar wavefront model. The
frame is right-handed: the origin sits on the ground directly below the
midpoint of the transmit array, x points toward the receiver, z points up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum
from functools import lru_cache

SPEED_OF_LIGHT = 299792458.0


class GeometryError(ValueError):
    """Raised when a geometric configuration is degenerate (coincident points)."""


@dataclass(frozen=True, slots=True)
class Vec3:
    """Point or displacement in the global frame, metres."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"Vec3.{name} must be finite, got {v!r}")

    def distance_to(self, other: "Vec3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )

    def horizontal_distance_to(self, other: "Vec3") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class ScenarioConfig:
    """Immutable scenario description shared by every module.

    Angles are radians, distances metres, frequencies Hz, speeds m/s. Element
    spacings default to half a wavelength when left as None; the scatterer
    radial range defaults to [r_min, D_0].
    """

    f_c: float = 5e9
    c: float = SPEED_OF_LIGHT
    H_0: float = 20.0
    D_0: float = 50.0
    P_h: int = 64
    P_v: int = 64
    Q: int = 4
    delta_T: float | None = None
    delta_R: float | None = None
    psi_T: float = math.pi / 2
    psi_R: float = math.pi / 2
    theta_R: float = math.pi / 3
    v_R: float = 5.0
    eta_R: float = math.pi / 2
    K: float = 1.0
    kappa: float = 3.0
    mu_alpha: float = 0.0
    mu_beta: float = 0.0
    L_clusters: int = 5
    N_rays: int = 20
    rho_snr: float = 10.0
    r_min: float = 5.0
    r_max: float | None = None
    cluster_level_angles: bool = True

    def __post_init__(self) -> None:
        if self.f_c <= 0:
            raise ValueError(f"f_c must be positive, got {self.f_c}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")
        lam = self.c / self.f_c
        if self.delta_T is None:
            object.__setattr__(self, "delta_T", lam / 2)
        if self.delta_R is None:
            object.__setattr__(self, "delta_R", lam / 2)
        if self.r_max is None:
            object.__setattr__(self, "r_max", self.D_0)
        for name in ("H_0", "D_0", "delta_T", "delta_R"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("P_h", "P_v", "Q", "L_clusters", "N_rays"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        for name in ("psi_T", "psi_R", "theta_R", "eta_R", "mu_alpha", "mu_beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite angle in radians, got {v!r}")
        for name in ("v_R", "K", "kappa", "rho_snr"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if not (math.isfinite(self.r_min) and self.r_min > 0):
            raise ValueError(f"r_min must be positive and finite, got {self.r_min!r}")
        if not (math.isfinite(self.r_max) and self.r_max >= self.r_min):
            raise ValueError(
                f"r_max must be finite and >= r_min ({self.r_min}), got {self.r_max!r}"
            )
        if not isinstance(self.cluster_level_angles, bool):
            raise ValueError(
                f"cluster_level_angles must be a bool, got {self.cluster_level_angles!r}"
            )

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c

    @property
    def n_bs_elements(self) -> int:
        return self.P_h * self.P_v

    def bs_midpoint(self) -> Vec3:
        """Midpoint of the transmit array; its ground projection is the origin."""
        return Vec3(0.0, 0.0, self.H_0 + 0.5 * self.P_v * self.delta_T)

    def mr_midpoint(self, t: float = 0.0) -> Vec3:
        """Midpoint of the receive array after travelling for t seconds."""
        return Vec3(
            self.D_0 + self.v_R * t * math.cos(self.eta_R),
            self.v_R * t * math.sin(self.eta_R),
            0.0,
        )


def k_index(i: int, n: int) -> float:
    """Signed half-integer offset of element i in a centred n-element line.

    i runs 1..n; the offsets are symmetric about zero and step by one.
    """
    if not 1 <= i <= n:
        raise ValueError(f"element index must be in [1, {n}], got {i}")
    return (n - 2 * i + 1) / 2.0


def element_index(p_h: int, p_v: int, P_h: int, P_v: int) -> int:
    """Row-major linear index p in 1..P_h*P_v for a (p_h, p_v) grid position."""
    if not 1 <= p_h <= P_h:
        raise ValueError(f"p_h must be in [1, {P_h}], got {p_h}")
    if not 1 <= p_v <= P_v:
        raise ValueError(f"p_v must be in [1, {P_v}], got {p_v}")
    return (p_v - 1) * P_h + p_h


def element_rowcol(p: int, P_h: int, P_v: int) -> tuple[int, int]:
    """Inverse of element_index: linear index p back to (p_h, p_v)."""
    if not 1 <= p <= P_h * P_v:
        raise ValueError(f"p must be in [1, {P_h * P_v}], got {p}")
    return ((p - 1) % P_h + 1, (p - 1) // P_h + 1)


def bs_element_position(p_h: int, p_v: int, cfg: ScenarioConfig) -> Vec3:
    """Global position of transmit element (p_h, p_v).

    Defined as the center of the (p_h, p_v) unit subarray, so the
    per-element wavefront model evaluates its angles exactly here and the
    1x1 tiling is the per-element model by construction. Index 1 sits at
    the negative horizontal offset and the bottom row.
    """
    if not 1 <= p_h <= cfg.P_h:
        raise ValueError(f"p_h must be in [1, {cfg.P_h}], got {p_h}")
    if not 1 <= p_v <= cfg.P_v:
        raise ValueError(f"p_v must be in [1, {cfg.P_v}], got {p_v}")
    return _center_at(p_h, p_v, cfg, 1, 1)


def mr_element_position(q: int, t: float, cfg: ScenarioConfig) -> Vec3:
    """Global position of receive element q at time t.

    The receive array is a tilted line through the moving midpoint: within
    the horizontal plane it points along (cos psi_R, sin psi_R), and the
    whole line is raised by the tilt theta_R out of that plane.
    """
    if not 1 <= q <= cfg.Q:
        raise ValueError(f"q must be in [1, {cfg.Q}], got {q}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    kq = k_index(q, cfg.Q)
    mid = cfg.mr_midpoint(t)
    r = kq * cfg.delta_R
    return Vec3(
        mid.x + r * math.cos(cfg.psi_R) * math.cos(cfg.theta_R),
        mid.y + r * math.sin(cfg.psi_R) * math.cos(cfg.theta_R),
        mid.z + r * math.sin(cfg.theta_R),
    )


def rayleigh_distance_aperture(diagonal: float, wavelength: float) -> float:
    """Near/far boundary 2 d^2 / lambda for an aperture with the given diagonal."""
    if diagonal <= 0 or wavelength <= 0:
        raise ValueError("diagonal and wavelength must be positive")
    return 2.0 * diagonal * diagonal / wavelength


def rayleigh_distance(cfg: ScenarioConfig) -> float:
    """Near/far boundary of the full transmit array in the configured scenario."""
    d2 = (cfg.delta_T**2) * ((cfg.P_h - 1) ** 2 + (cfg.P_v - 1) ** 2)
    return 2.0 * d2 / cfg.wavelength


def partition_counts(P: int, p_max: int) -> int:
    """Number of subarrays a P-element axis splits into at target size p_max.

    All subarrays take p_max elements except a possibly smaller trailing one.
    """
    if not isinstance(P, int) or P < 1:
        raise ValueError(f"P must be an integer >= 1, got {P!r}")
    if not isinstance(p_max, int) or not 1 <= p_max <= P:
        raise ValueError(f"p_max must be an integer in [1, {P}], got {p_max!r}")
    rem = P % p_max
    if rem != 0:
        return (P - rem) // p_max + 1
    return P // p_max


def subarray_size(index: int, P: int, p_max: int) -> int:
    """Element count of the index-th subarray (1-based) along a P-element axis."""
    counts = partition_counts(P, p_max)
    if not 1 <= index <= counts:
        raise ValueError(f"subarray index must be in [1, {counts}], got {index}")
    if index < counts:
        return p_max
    return P - (counts - 1) * p_max


def element_to_subarray(p: int, p_max: int) -> int:
    """Subarray index (1-based) that element p of an axis falls into."""
    if not isinstance(p, int) or p < 1:
        raise ValueError(f"p must be an integer >= 1, got {p!r}")
    if not isinstance(p_max, int) or p_max < 1:
        raise ValueError(f"p_max must be an integer >= 1, got {p_max!r}")
    rem = p % p_max
    if rem != 0:
        return (p - rem) // p_max + 1
    return p // p_max


@dataclass(frozen=True)
class SubarrayPartition:
    """Partition of the transmit grid into near-square tiles of target size.

    counts_* and sizes_* follow the trailing-remainder rule: every tile spans
    p_max elements on an axis except possibly the last. centers[sh-1][sv-1]
    is the global midpoint of tile (sh, sv); the per-tile planar-wavefront
    approximation is anchored there.
    """

    p_max_h: int
    p_max_v: int
    counts_h: int
    counts_v: int
    sizes_h: tuple[int, ...]
    sizes_v: tuple[int, ...]
    centers: tuple[tuple[Vec3, ...], ...]

    @property
    def n_subarrays(self) -> int:
        return self.counts_h * self.counts_v

    def subarray_of_element(self, p_h: int, p_v: int) -> tuple[int, int]:
        return (
            element_to_subarray(p_h, self.p_max_h),
            element_to_subarray(p_v, self.p_max_v),
        )


def _center_at(sh: int, sv: int, cfg: ScenarioConfig, p_max_h: int, p_max_v: int) -> Vec3:
    size_h = subarray_size(sh, cfg.P_h, p_max_h)
    size_v = subarray_size(sv, cfg.P_v, p_max_v)
    off_h = ((sh - 1) * p_max_h + 0.5 * size_h - 0.5 * cfg.P_h) * cfg.delta_T
    return Vec3(
        off_h * math.cos(cfg.psi_T),
        off_h * math.sin(cfg.psi_T),
        cfg.H_0 + ((sv - 1) * p_max_v + 0.5 * size_v) * cfg.delta_T,
    )


def subarray_center(sh: int, sv: int, cfg: ScenarioConfig, partition: "SubarrayPartition") -> Vec3:
    """Global midpoint of transmit subarray (sh, sv), 1-based indices.

    The horizontal offset of the tile midpoint from the array midpoint is
    ((sh-1) p_max_h + size_h/2 - P_h/2) delta_T along (cos psi_T, sin psi_T);
    the z coordinate is H_0 + ((sv-1) p_max_v + size_v/2) delta_T.
    """
    if not 1 <= sh <= partition.counts_h:
        raise ValueError(f"sh must be in [1, {partition.counts_h}], got {sh}")
    if not 1 <= sv <= partition.counts_v:
        raise ValueError(f"sv must be in [1, {partition.counts_v}], got {sv}")
    return _center_at(sh, sv, cfg, partition.p_max_h, partition.p_max_v)


@lru_cache(maxsize=128)
def make_partition(cfg: ScenarioConfig, p_max_h: int, p_max_v: int) -> SubarrayPartition:
    """Build the full partition description for target tile size (p_max_h, p_max_v)."""
    counts_h = partition_counts(cfg.P_h, p_max_h)
    counts_v = partition_counts(cfg.P_v, p_max_v)
    sizes_h = tuple(subarray_size(i, cfg.P_h, p_max_h) for i in range(1, counts_h + 1))
    sizes_v = tuple(subarray_size(i, cfg.P_v, p_max_v) for i in range(1, counts_v + 1))
    centers = tuple(
        tuple(_center_at(sh, sv, cfg, p_max_h, p_max_v) for sv in range(1, counts_v + 1))
        for sh in range(1, counts_h + 1)
    )
    return SubarrayPartition(
        p_max_h=p_max_h,
        p_max_v=p_max_v,
        counts_h=counts_h,
        counts_v=counts_v,
        sizes_h=sizes_h,
        sizes_v=sizes_v,
        centers=centers,
    )


class AngleConvention(Enum):
    """Which link endpoint owns the ray and the sign of its elevation.

    LOS_DEPARTURE: transmit side of the direct ray; elevation positive when
        the ray points downward (source above destination).
    NLOS_DEPARTURE: transmit side of a scattered ray; elevation positive
        when the ray points upward (destination above source).
    NLOS_ARRIVAL: receive side of a scattered ray; same upward-positive
        elevation sign as NLOS_DEPARTURE.
    """

    LOS_DEPARTURE = "los_departure"
    NLOS_DEPARTURE = "nlos_departure"
    NLOS_ARRIVAL = "nlos_arrival"


def wrap_angle(a: float) -> float:
    """Wrap a radian angle into (-pi, pi]."""
    w = math.fmod(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    elif w > math.pi:
        w -= 2.0 * math.pi
    return w


def ray_angles(src: Vec3, dst: Vec3, convention: AngleConvention) -> tuple[float, float]:
    """Azimuth and elevation of the ray src -> dst under the given convention.

    Azimuth is atan2 of the horizontal displacement (destination minus
    source), in (-pi, pi]. Elevation measures the vertical drop or rise
    against the horizontal range; its sign convention is set by the
    convention flag (see AngleConvention). Zero horizontal range with zero
    vertical offset is a degenerate ray and raises GeometryError.
    """
    dx = dst.x - src.x
    dy = dst.y - src.y
    horiz = math.hypot(dx, dy)
    if horiz == 0.0 and dst.z == src.z:
        raise GeometryError("ray endpoints coincide; angles are undefined")
    az = wrap_angle(math.atan2(dy, dx))
    if convention is AngleConvention.LOS_DEPARTURE:
        el = math.atan2(src.z - dst.z, horiz)
    elif convention in (AngleConvention.NLOS_DEPARTURE, AngleConvention.NLOS_ARRIVAL):
        el = math.atan2(dst.z - src.z, horiz)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown angle convention {convention!r}")
    return az, el


def los_arrival_angles(az_dep: float, el_dep: float) -> tuple[float, float]:
    """Receive-side azimuth/elevation of the direct ray from its departure pair.

    The arrival azimuth is the reverse bearing wrapped into (-pi, pi]; the
    arrival elevation equals the departure elevation (the receive convention
    measures the same drop from the other end).
    """
    return wrap_angle(math.pi - az_dep), el_dep


def optimal_subarray_size(cfg: ScenarioConfig, t: float = 0.0) -> int:
    """Largest square tile side whose near/far boundary stays at or inside the link range.

    Uses the midpoint-to-midpoint distance at time t; a tile of side p has
    boundary 2 (p-1)^2 delta_T^2 * 2 / lambda (square tile diagonal). Always
    at least 1; capped at min(P_h, P_v).
    """
    dist = cfg.bs_midpoint().distance_to(cfg.mr_midpoint(t))
    best = 1
    for p in range(1, min(cfg.P_h, cfg.P_v) + 1):
        d2 = (cfg.delta_T**2) * 2.0 * (p - 1) ** 2
        if 2.0 * d2 / cfg.wavelength <= dist:
            best = p
        else:
            break
    return best


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a plain dict, rejecting unknown keys by name."""
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config field(s): {', '.join(unknown)}")
    cleaned = {}
    for key, value in data.items():
        f_int = {"P_h", "P_v", "Q", "L_clusters", "N_rays"}
        if key in f_int:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"config field {key} must be an integer, got {value!r}")
            if isinstance(value, float):
                if not value.is_integer():
                    raise ValueError(f"config field {key} must be an integer, got {value!r}")
                value = int(value)
        cleaned[key] = value
    return ScenarioConfig(**cleaned)
