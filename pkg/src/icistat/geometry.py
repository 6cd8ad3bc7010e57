"""Cell geometry: network constants, ring discretization, angular and segment grids.

The cell of interest is a disc of radius ``R`` partitioned into concentric
annular regions whose outer radii follow a constant per-region path-loss
decay of ``kappa`` dB, so the region boundaries satisfy

    r_k = r_{k-1} * 10^(kappa / (10 beta)).

Regions are generated inward from the cell edge (the outermost boundary is
physically fixed at ``R``) and generation stops at the first region whose
expected user count rounds to zero; the residual central disc is treated as
holding no schedulable users.  Interfering users are located by the cosine
law relative to the base station of interest and their distances are grouped
into ``M`` uniform segments spanning ``[D - R, D + R]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NetworkConfig",
    "RingGrid",
    "AngularGrid",
    "SegmentGrid",
    "build_ring_grid",
    "build_segment_grid",
    "interferer_distance",
    "db_to_linear",
    "dbm_to_watt",
]


def db_to_linear(value_db: float) -> float:
    """Convert a power ratio in dB to linear scale."""
    return 10.0 ** (value_db / 10.0)


def dbm_to_watt(value_dbm: float) -> float:
    """Convert a power level in dBm to Watts."""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Physical constants of the uplink network.

    Parameters
    ----------
    p_max : float
        Maximum user transmit power in Watts.
    c_pl : float
        Path-loss constant, linear scale.
    sigma2 : float
        Noise power in Watts.
    beta : float
        Path-loss exponent.
    radius : float
        Cell radius ``R`` in metres.
    num_users : int
        Users per cell ``U``.
    num_interferers : int
        Number of interfering cells ``L``.
    bs_distance : float
        Distance ``D`` between neighbouring base stations in metres.

    The derived link constant ``k_bar = p_max * c_pl / sigma2`` scales every
    received power: a user at distance ``r`` with composite gain ``zeta``
    contributes ``k_bar * r**-beta * zeta``.
    """

    p_max: float = 1.0
    c_pl: float = db_to_linear(60.0)
    sigma2: float = dbm_to_watt(-174.0)
    beta: float = 2.6
    radius: float = 500.0
    num_users: int = 50
    num_interferers: int = 6
    bs_distance: float = 1000.0

    def __post_init__(self):
        if self.p_max <= 0 or self.c_pl <= 0 or self.sigma2 <= 0:
            raise ValueError("p_max, c_pl and sigma2 must be positive")
        if self.beta <= 0:
            raise ValueError("path-loss exponent beta must be positive")
        if self.radius <= 0:
            raise ValueError("cell radius must be positive")
        if self.num_users < 1:
            raise ValueError("need at least one user per cell")
        if self.num_interferers < 0:
            raise ValueError("number of interfering cells cannot be negative")
        if self.bs_distance <= self.radius:
            raise ValueError("bs_distance must exceed the cell radius")

    @property
    def k_bar(self) -> float:
        """Link constant p_max * c_pl / sigma2."""
        return self.p_max * self.c_pl / self.sigma2


@dataclass(frozen=True)
class RingGrid:
    """Concentric-region discretization of one cell.

    ``radii`` are the outer boundaries ``r_1 < ... < r_K = R`` and
    ``widths[k] = r_k - r_{k-1}`` with ``r_0`` the inner edge of the first
    retained region.  ``users`` holds the rounded per-region counts used by
    the ring-model formulas, while ``occupancy`` keeps the expected
    (fractional) counts ``U * (r_k^2 - r_{k-1}^2) / R^2`` that drive the
    region-exact laws.  ``atomic`` grids collapse every region onto its
    outer radius with deterministic integer occupancy; they reproduce the
    ring model exactly and are the natural construction for hand-built
    test grids.
    """

    kappa: float
    radii: np.ndarray
    widths: np.ndarray
    users: np.ndarray
    occupancy: np.ndarray
    cell_radius: float
    atomic: bool = False

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        users = np.asarray(self.users)
        occupancy = np.asarray(self.occupancy, dtype=float)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "occupancy", occupancy)
        if radii.ndim != 1 or len(radii) == 0:
            raise ValueError("radii must be a non-empty 1-d sequence")
        if not (len(radii) == len(widths) == len(users) == len(occupancy)):
            raise ValueError("radii, widths, users and occupancy must align")
        if np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if np.any(widths < 0):
            raise ValueError("widths cannot be negative")
        if np.any(users < 1):
            raise ValueError("every retained region needs at least one rounded user")
        if np.any(occupancy <= 0):
            raise ValueError("expected occupancies must be positive")

    @property
    def num_rings(self) -> int:
        return len(self.radii)

    @property
    def inner_edge(self) -> float:
        """Inner boundary of the first retained region (edge of the excluded disc)."""
        return float(self.radii[0] - self.widths[0])

    @property
    def edges(self) -> np.ndarray:
        """Region boundaries, ``inner_edge`` first, then the K outer radii."""
        return np.concatenate(([self.inner_edge], self.radii))

    @property
    def u_total(self) -> float:
        """Sum of the rounded per-region counts."""
        return float(np.sum(self.users))

    @property
    def occupancy_total(self) -> float:
        return float(np.sum(self.occupancy))

    @property
    def area_shares(self) -> np.ndarray:
        """Per-region fractions of the full cell area (atomic grids fall back
        to normalized occupancies)."""
        if self.atomic:
            occ = self.occupancy
            return occ / occ.sum()
        e = self.edges
        return (e[1:] ** 2 - e[:-1] ** 2) / self.cell_radius**2

    @property
    def excluded_share(self) -> float:
        """Area fraction of the central disc with no schedulable users."""
        if self.atomic:
            return 0.0
        return self.inner_edge**2 / self.cell_radius**2

    def position_nodes(self, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes for the user position within each region.

        Returns ``(nodes, weights)`` of shape ``(K, order)``; for a user
        uniform over the region the squared radius is uniform between the
        squared boundaries, so the nodes are Gauss-Legendre points in
        ``r^2``.  Atomic grids return a single node at the region radius.
        """
        if self.atomic:
            return self.radii[:, None], np.ones((self.num_rings, 1))
        x, w = np.polynomial.legendre.leggauss(order)
        e2 = self.edges**2
        lo, hi = e2[:-1][:, None], e2[1:][:, None]
        v = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
        weights = np.broadcast_to(0.5 * w[None, :], v.shape).copy()
        return np.sqrt(v), weights

    def ring_index(self, r) -> np.ndarray:
        """Map radii to region indices; -1 marks the excluded central disc."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.edges, r, side="right") - 1
        return np.clip(idx, -1, self.num_rings - 1)

    @classmethod
    def from_rings(cls, radii, users, kappa: float = float("nan")) -> "RingGrid":
        """Build an atomic grid with users pinned at the given radii.

        This is the ring model of the analytical derivations: ``users[k]``
        deterministic users all located exactly at ``radii[k]``.
        """
        radii = np.asarray(radii, dtype=float)
        users = np.asarray(users)
        widths = np.concatenate(([0.0], np.diff(radii)))
        return cls(
            kappa=kappa,
            radii=radii,
            widths=widths,
            users=users,
            occupancy=users.astype(float),
            cell_radius=float(radii[-1]),
            atomic=True,
        )


def build_ring_grid(config: NetworkConfig, kappa: float) -> RingGrid:
    """Discretize the cell into regions of constant path-loss decay.

    Boundaries are generated inward from ``r_K = R`` through
    ``r_{k-1} = r_k * 10^(-kappa / (10 beta))``; per-region expected counts
    are ``U (r_k^2 - r_{k-1}^2) / R^2`` and generation stops at the first
    region whose count rounds (half up) to zero.

    Raises
    ------
    ValueError
        If ``kappa <= 0`` or even the outermost region rounds to zero users.
    """
    if kappa <= 0:
        raise ValueError("per-region decay kappa must be positive (dB)")
    shrink = 10.0 ** (-kappa / (10.0 * config.beta))
    R = config.radius
    U = config.num_users

    radii = []
    occupancy = []
    r_outer = R
    while True:
        r_inner = r_outer * shrink
        u = U * (r_outer**2 - r_inner**2) / R**2
        if np.floor(u + 0.5) < 1:
            break
        radii.append(r_outer)
        occupancy.append(u)
        r_outer = r_inner
    if not radii:
        raise ValueError(
            "outermost region rounds to zero users; increase kappa or num_users"
        )
    radii = np.array(radii[::-1])
    occupancy = np.array(occupancy[::-1])
    inner_edge = radii[0] * shrink
    widths = np.diff(np.concatenate(([inner_edge], radii)))
    users = np.floor(occupancy + 0.5).astype(int)
    return RingGrid(
        kappa=kappa,
        radii=radii,
        widths=widths,
        users=users,
        occupancy=occupancy,
        cell_radius=R,
    )


@dataclass(frozen=True)
class AngularGrid:
    """Uniform discretization of the user angle into ``count`` bins.

    Bin centres are ``theta_i = 2 pi (i - 1/2) / I`` so every bin carries
    probability ``1 / I`` and the endpoints 0 and 2 pi are never duplicated.
    """

    count: int
    angles: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("need at least one angular bin")
        i = np.arange(1, self.count + 1)
        object.__setattr__(self, "angles", 2.0 * np.pi * (i - 0.5) / self.count)


@dataclass(frozen=True)
class SegmentGrid:
    """Uniform segments covering the interferer-distance range [D-R, D+R]."""

    count: int
    width: float
    centers: np.ndarray

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(
            ([self.centers[0] - self.width / 2], self.centers + self.width / 2)
        )

    def segment_index(self, distances) -> np.ndarray:
        idx = np.searchsorted(self.edges, np.asarray(distances), side="right") - 1
        return np.clip(idx, 0, self.count - 1)


def build_segment_grid(config: NetworkConfig, m_segments: int) -> SegmentGrid:
    """Split ``[D - R, D + R]`` into ``m_segments`` segments of width 2R/M."""
    if m_segments < 1:
        raise ValueError("need at least one segment")
    width = 2.0 * config.radius / m_segments
    m = np.arange(1, m_segments + 1)
    centers = (config.bs_distance - config.radius) + (m - 0.5) * width
    return SegmentGrid(count=m_segments, width=width, centers=centers)


def interferer_distance(r, theta, d):
    """Distance from a point at polar ``(r, theta)`` in the interfering cell
    to the base station of interest at distance ``d``, by the cosine law:

        r_tilde = sqrt(r^2 + d^2 - 2 r d cos(theta)).

    Accepts scalars or broadcastable arrays.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    if np.any(np.asarray(d) <= r):
        raise ValueError("interferer distance requires d > r")
    return np.sqrt(r**2 + d**2 - 2.0 * r * d * np.cos(theta))
