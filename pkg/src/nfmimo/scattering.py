"""Random scatterer fields: circular angle statistics, ray placement, random phases.

Ray directions leave the transmit-array midpoint with von Mises distributed
azimuth and elevation; radial distances are uniform over a configured range.
Rays keep a cluster structure: each cluster draws its own mean direction and
its rays scatter around it. A field is a pure function of (config, seed).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ScenarioConfig, Vec3

_MAX_PLACEMENT_ATTEMPTS = 100
# Rays exactly on top of an array have undefined azimuth; quantities this
# close to zero horizontal range are rejected alongside below-ground draws.
_MIN_HORIZONTAL_CLEARANCE = 1e-9


def von_mises_pdf(alpha, mu: float, kappa: float):
    """Circular density exp(kappa cos(alpha - mu)) / (2 pi I0(kappa)).

    alpha may be a scalar or array; kappa = 0 gives the uniform density
    1/(2 pi). Integrates to 1 over any interval of length 2 pi.
    """
    if not (isinstance(kappa, (int, float)) and math.isfinite(kappa)):
        raise ValueError(f"kappa must be a finite number, got {kappa!r}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    alpha = np.asarray(alpha, dtype=float)
    out = np.exp(kappa * np.cos(alpha - mu)) / (2.0 * np.pi * np.i0(kappa))
    if out.ndim == 0:
        return float(out)
    return out


def sample_von_mises(mu: float, kappa: float, rng: np.random.Generator, size=None):
    """Draw angles in [-pi, pi) from the von Mises law centred at mu.

    Uses the generator's wrapped-Cauchy rejection sampler (exact, no
    truncation bias); kappa = 0 degenerates to the uniform circle law.
    Deterministic for a seeded generator.
    """
    if not (isinstance(kappa, (int, float)) and math.isfinite(kappa)):
        raise ValueError(f"kappa must be a finite number, got {kappa!r}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    raw = rng.vonmises(mu, kappa, size=size)
    # numpy wraps into [-pi, pi]; fold the closed upper endpoint back.
    if size is None:
        w = float(raw)
        return w - 2.0 * math.pi if w >= math.pi else w
    raw = np.asarray(raw)
    return np.where(raw >= np.pi, raw - 2.0 * np.pi, raw)


@dataclass(frozen=True, slots=True)
class Ray:
    """One scattered path: a scatterer position and its random phase."""

    position: Vec3
    phase: float

    def __post_init__(self) -> None:
        if not -math.pi <= self.phase < math.pi:
            raise ValueError(f"phase must lie in [-pi, pi), got {self.phase}")


@dataclass(frozen=True)
class ScattererField:
    """L clusters of N rays each, immutable once generated.

    seed records the integer seed when the field came from one; fields
    rebuilt from external data carry seed = None.
    """

    clusters: tuple[tuple[Ray, ...], ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        if len(self.clusters) == 0 or any(len(c) == 0 for c in self.clusters):
            raise ValueError("a scatterer field needs at least one ray in every cluster")

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def n_rays(self) -> int:
        return sum(len(c) for c in self.clusters)

    def rays(self) -> tuple[Ray, ...]:
        return tuple(r for cluster in self.clusters for r in cluster)

    def positions(self) -> np.ndarray:
        """All ray positions as an (n_rays, 3) array, cluster-major order."""
        return np.array(
            [[r.position.x, r.position.y, r.position.z] for c in self.clusters for r in c],
            dtype=float,
        )

    def phases(self) -> np.ndarray:
        return np.array([r.phase for c in self.clusters for r in c], dtype=float)

    def to_csv(self, path: str | Path) -> None:
        """Write rows (cluster, ray, x, y, z, phase) with 1-based indices."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cluster", "ray", "x_m", "y_m", "z_m", "phase_rad"])
            for li, cluster in enumerate(self.clusters, start=1):
                for ni, ray in enumerate(cluster, start=1):
                    writer.writerow(
                        [li, ni, repr(ray.position.x), repr(ray.position.y), repr(ray.position.z), repr(ray.phase)]
                    )

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScattererField":
        groups: dict[int, list[tuple[int, Ray]]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                ray = Ray(
                    position=Vec3(float(row["x_m"]), float(row["y_m"]), float(row["z_m"])),
                    phase=float(row["phase_rad"]),
                )
                groups.setdefault(int(row["cluster"]), []).append((int(row["ray"]), ray))
        clusters = []
        for li in sorted(groups):
            members = sorted(groups[li], key=lambda item: item[0])
            clusters.append(tuple(ray for _, ray in members))
        return cls(clusters=tuple(clusters), seed=None)


def _place_ray(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    mean_az: float,
    mean_el: float,
    origin: Vec3,
    mr0: Vec3,
) -> Vec3:
    """Draw one scatterer position; resample below-ground or degenerate draws.

    Draw order per attempt: azimuth, elevation, radius. The position must
    sit at or above ground with nonzero horizontal range to both array
    midpoints so every angle it induces is well defined.
    """
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        az = sample_von_mises(mean_az, cfg.kappa, rng)
        el = sample_von_mises(mean_el, cfg.kappa, rng)
        r = rng.uniform(cfg.r_min, cfg.r_max)
        pos = Vec3(
            origin.x + r * math.cos(el) * math.cos(az),
            origin.y + r * math.cos(el) * math.sin(az),
            origin.z + r * math.sin(el),
        )
        if pos.z < 0.0:
            continue
        if pos.horizontal_distance_to(origin) <= _MIN_HORIZONTAL_CLEARANCE:
            continue
        if pos.horizontal_distance_to(mr0) <= _MIN_HORIZONTAL_CLEARANCE:
            continue
        return pos
    raise ValueError(
        "could not place a scatterer above ground after "
        f"{_MAX_PLACEMENT_ATTEMPTS} attempts; the angle configuration "
        "(mu_beta, kappa) pushes rays below ground"
    )


def generate_scatterers(cfg: ScenarioConfig, rng: int | np.random.Generator) -> ScattererField:
    """Generate the full scatterer field for a scenario.

    Per cluster: when cfg.cluster_level_angles is set, a cluster mean
    direction is drawn first (azimuth then elevation, von Mises around
    mu_alpha / mu_beta); rays then scatter around that mean with the same
    concentration. Otherwise every ray draws around the global means. Each
    ray draws azimuth, elevation, radius (resampling on rejection), then its
    phase uniform on [-pi, pi). Passing an integer seeds a fresh generator
    and records the seed on the field.
    """
    seed: int | None = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    origin = cfg.bs_midpoint()
    mr0 = cfg.mr_midpoint(0.0)
    clusters = []
    for _ in range(cfg.L_clusters):
        if cfg.cluster_level_angles:
            mean_az = sample_von_mises(cfg.mu_alpha, cfg.kappa, rng)
            mean_el = sample_von_mises(cfg.mu_beta, cfg.kappa, rng)
        else:
            mean_az = cfg.mu_alpha
            mean_el = cfg.mu_beta
        rays = []
        for _ in range(cfg.N_rays):
            pos = _place_ray(cfg, rng, mean_az, mean_el, origin, mr0)
            # numpy's uniform is half-open, so the draw already sits in [-pi, pi)
            phase = float(rng.uniform(-math.pi, math.pi))
            rays.append(Ray(position=pos, phase=phase))
        clusters.append(tuple(rays))
    return ScattererField(clusters=tuple(clusters), seed=seed)


def field_for_realization(cfg: ScenarioConfig, master_seed: int, index: int) -> ScattererField:
    """Field for one Monte Carlo realization.

    Each realization owns a private stream derived from (master seed,
    index), so ensembles reproduce identically regardless of evaluation
    order or thread scheduling.
    """
    if index < 0:
        raise ValueError(f"realization index must be >= 0, got {index}")
    rng = np.random.default_rng([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    field = generate_scatterers(cfg, rng)
    return ScattererField(clusters=field.clusters, seed=int(master_seed))
