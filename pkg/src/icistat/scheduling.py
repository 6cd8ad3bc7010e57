"""Location statistics of the scheduled user for five scheduling schemes.

The analytic object behind every scheme is a single-cell contest between the
users' received SNRs gamma = k_bar * r^-beta * zeta.  Two occupancy models
are supported through :class:`RingGrid`:

* atomic grids (``RingGrid.from_rings``) place deterministic integer user
  counts exactly at the ring radii; the contest then reduces to the classic
  product-of-ring-laws integrals of the ring model.
* built grids (``build_ring_grid``) describe users dropped uniformly on the
  cell, so a region's occupancy is multinomial with expectation
  ``U * area_share`` and each user's position is spread over the annulus.
  The contest is evaluated exactly for the finite user count, which is what
  the Monte-Carlo engine reproduces trial by trial.

Passing ``mode="ring"`` to a PMF routine collapses a built grid onto its
ring radii with the rounded counts, recovering the ring-model
approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .fading import ChannelModel
from .geometry import NetworkConfig, AngularGrid, RingGrid

__all__ = [
    "LocationPmf",
    "JointLocationAngle",
    "RingSnrLaw",
    "CellContest",
    "GreedyRoundRobinSweep",
    "ComplexityBudgetError",
    "ring_max_snr_law",
    "greedy_pmf",
    "proportional_fair_pmf",
    "round_robin_pmf",
    "location_rr_pmf",
    "greedy_rr_pmf",
    "joint_pmf_with_angle",
]

GREEDY = "greedy"
PROPORTIONAL_FAIR = "proportional_fair"
ROUND_ROBIN = "round_robin"
LOCATION_ROUND_ROBIN = "location_round_robin"
GREEDY_ROUND_ROBIN = "greedy_round_robin"

SCHEMES = (GREEDY, PROPORTIONAL_FAIR, ROUND_ROBIN, LOCATION_ROUND_ROBIN, GREEDY_ROUND_ROBIN)

_MASS_TOL = 1e-6


class ComplexityBudgetError(RuntimeError):
    """Exact greedy round robin evaluation would exceed the integral budget."""


@dataclass(frozen=True)
class LocationPmf:
    """Discrete law of the scheduled user's region, aligned with the grid radii."""

    probabilities: np.ndarray
    scheme: str
    slot: int | None = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if np.any(p < -1e-12):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > _MASS_TOL:
            raise ValueError(f"probabilities sum to {p.sum():.8f}, not 1")

    def mean_radius(self, grid: RingGrid) -> float:
        return float(np.sum(self.probabilities * grid.radii))


@dataclass(frozen=True)
class JointLocationAngle:
    """Joint masses P(region k, angle bin i) = P(region k) / I."""

    grid: RingGrid
    angular: AngularGrid
    location: LocationPmf
    masses: np.ndarray


def joint_pmf_with_angle(pmf: LocationPmf, grid: RingGrid, angular: AngularGrid) -> JointLocationAngle:
    """Combine a location PMF with the independent uniform angle."""
    masses = np.outer(pmf.probabilities, np.full(angular.count, 1.0 / angular.count))
    return JointLocationAngle(grid=grid, angular=angular, location=pmf, masses=masses)


@dataclass(frozen=True)
class RingSnrLaw:
    """Selected-SNR law of one ring under the ring model.

    The best of ``users`` i.i.d. channel gains, all at distance ``radius``:
    F(g) = F_zeta(g / scale)^users with scale = k_bar * radius^-beta.
    """

    ring: int
    radius: float
    users: float
    scale: float
    model: ChannelModel

    def cdf(self, gamma):
        gamma = np.maximum(np.asarray(gamma, dtype=float), 0.0)
        out = self.model.cdf(gamma / self.scale) ** self.users
        return out if np.ndim(out) else float(out)

    def pdf(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        z = gamma / self.scale
        base = np.asarray(self.model.cdf(z), dtype=float)
        out = np.where(
            gamma > 0,
            self.users / self.scale * self.model.pdf(np.maximum(z, 1e-300))
            * np.maximum(base, 1e-300) ** (self.users - 1.0),
            0.0,
        )
        return out if out.ndim else float(out)

    def mean(self, rel_tol: float = 1e-9) -> float:
        from .numerics import integrate_semi_infinite

        # integrate the survival function in units of the ring scale
        return self.scale * integrate_semi_infinite(
            lambda z: 1.0 - self.model.cdf(z) ** self.users, rel_tol
        )


def ring_max_snr_law(grid: RingGrid, k: int, model: ChannelModel, config: NetworkConfig) -> RingSnrLaw:
    """Ring-model law of the strongest user in ring ``k`` (1-based)."""
    if not 1 <= k <= grid.num_rings:
        raise ValueError("ring index out of range")
    radius = float(grid.radii[k - 1])
    return RingSnrLaw(
        ring=k,
        radius=radius,
        users=float(grid.users[k - 1]),
        scale=config.k_bar * radius ** -config.beta,
        model=model,
    )


class CellContest:
    """Exact single-cell scheduling contest on a ring grid.

    Precomputes the per-region compound user law (position mixed over the
    region, gain from ``model``) on a shared panelized log-SNR grid, then
    evaluates every scheme's contest integrals as weighted sums.
    """

    def __init__(
        self,
        grid: RingGrid,
        model: ChannelModel,
        config: NetworkConfig,
        position_order: int = 24,
        panel_width: float = 0.5,
        panel_order: int = 16,
    ):
        self.grid = grid
        self.model = model
        self.config = config
        self.K = grid.num_rings

        nodes, wts = grid.position_nodes(position_order)
        # gamma = k_bar r^-beta zeta  <=>  zeta = gamma * c with c = r^beta / k_bar
        self._c = nodes**config.beta / config.k_bar
        self._cw = wts

        z_lo = self._channel_quantile(1e-12)
        z_hi = self._channel_quantile(1e-13, upper=True)
        self._z_bounds = (z_lo, z_hi)
        g_lo = z_lo / self._c.max()
        g_hi = z_hi / self._c.min()
        self._gamma, self._gw = _log_panels(g_lo, g_hi, panel_width, panel_order)
        self._F, self._f = self._region_tables(self._gamma)
        with np.errstate(divide="ignore"):
            self._logF = np.log(np.clip(self._F, 1e-300, 1.0))

        if grid.atomic:
            self._counts = grid.users.astype(float)
        else:
            self._U = config.num_users
            self._areas = grid.area_shares
            self._excluded = grid.excluded_share

        self._pf_tables = None
        self._pf_means = None

    # -- channel helpers ---------------------------------------------------

    def _channel_quantile(self, tail: float, upper: bool = False) -> float:
        target = 1.0 - tail if upper else tail
        lo, hi = 1e-300, self.model.mean
        while self.model.cdf(hi) < target:
            lo, hi = hi, hi * 4.0
            if hi > 1e12 * self.model.mean:
                break
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            if self.model.cdf(mid) < target:
                lo = mid
            else:
                hi = mid
        return hi if upper else lo

    def _region_tables(self, gamma: np.ndarray):
        """Compound per-user CDF/PDF of each region on the gamma grid."""
        F = np.empty((self.K, gamma.size))
        f = np.empty((self.K, gamma.size))
        for k in range(self.K):
            z = np.outer(gamma, self._c[k])
            F[k] = np.sum(self._cw[k][None, :] * self.model.cdf(z), axis=1)
            f[k] = np.sum(
                self._cw[k][None, :] * self.model.pdf(np.maximum(z, 1e-300)) * self._c[k][None, :],
                axis=1,
            )
        return F, f

    def region_cdf(self, k: int, x) -> np.ndarray:
        """Compound CDF of one user of region ``k`` at arbitrary powers."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        pos = x > 0
        if np.any(pos):
            z = np.outer(x[pos], self._c[k])
            out[pos] = np.sum(self._cw[k][None, :] * self.model.cdf(z), axis=1)
        return out

    def cell_cdf(self, x) -> np.ndarray:
        """Per-user CDF over the whole cell (excluded disc counts as never
        transmitting), used by the finite-U contest: G(x)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.grid.atomic:
            raise RuntimeError("cell_cdf is only defined for built grids")
        out = np.full_like(x, self._excluded)
        for k in range(self.K):
            out += self._areas[k] * self.region_cdf(k, x)
        return out

    # -- greedy ------------------------------------------------------------

    def greedy(self) -> LocationPmf:
        return LocationPmf(self._greedy_masses(), scheme=GREEDY)

    def _greedy_masses(self) -> np.ndarray:
        if self.grid.atomic:
            n = self._counts
            T = np.sum(n[:, None] * self._logF, axis=0)
            # n_k f_k F_k^{n_k-1} prod_{i!=k} F_i^{n_i} = n_k f_k exp(T - log F_k)
            P = np.array(
                [
                    np.sum(self._gw * n[k] * self._f[k] * np.exp(T - self._logF[k]))
                    for k in range(self.K)
                ]
            )
        else:
            G = self._excluded + np.sum(self._areas[:, None] * self._F, axis=0)
            Gp = np.exp((self._U - 1) * np.log(np.clip(G, 1e-300, 1.0)))
            P = np.array(
                [
                    self._U * self._areas[k] * np.sum(self._gw * self._f[k] * Gp)
                    for k in range(self.K)
                ]
            )
            P = P / P.sum()  # condition on some user being schedulable
        return P

    # -- proportional fair ---------------------------------------------------

    def pf_normalizers(self) -> np.ndarray:
        """Short-term mean of each region's selected SNR, gamma_bar_k.

        The mean of the region max law with the grid's expected occupancy;
        both the analytic contest and the simulation engine normalise a
        user's SNR by the same per-region constant.
        """
        if self._pf_means is None:
            nu = self._counts if self.grid.atomic else self._U * self._areas
            surv = 1.0 - np.exp(nu[:, None] * self._logF)
            head = self._gamma[0]  # survival ~ 1 below the grid
            self._pf_means = head + np.sum(self._gw[None, :] * surv, axis=1)
        return self._pf_means

    def _pf_setup(self):
        if self._pf_tables is None:
            gbar = self.pf_normalizers()
            z_lo, z_hi = self._z_bounds
            cx = self._c * gbar[:, None]  # xi -> channel argument multipliers
            x_lo = z_lo / cx.max()
            x_hi = z_hi / cx.min()
            xi, xw = _log_panels(x_lo, x_hi, 0.5, 16)
            F = np.empty((self.K, xi.size))
            f = np.empty((self.K, xi.size))
            for k in range(self.K):
                z = np.outer(xi, cx[k])
                F[k] = np.sum(self._cw[k][None, :] * self.model.cdf(z), axis=1)
                f[k] = np.sum(
                    self._cw[k][None, :] * self.model.pdf(np.maximum(z, 1e-300)) * cx[k][None, :],
                    axis=1,
                )
            with np.errstate(divide="ignore"):
                logF = np.log(np.clip(F, 1e-300, 1.0))
            self._pf_tables = (xi, xw, F, f, logF)
        return self._pf_tables

    def proportional_fair(self) -> LocationPmf:
        xi, xw, F, f, logF = self._pf_setup()
        if self.grid.atomic:
            n = self._counts
            T = np.sum(n[:, None] * logF, axis=0)
            P = np.array(
                [
                    np.sum(xw * n[k] * f[k] * np.exp(T - logF[k]))
                    for k in range(self.K)
                ]
            )
        else:
            G = self._excluded + np.sum(self._areas[:, None] * F, axis=0)
            Gp = np.exp((self._U - 1) * np.log(np.clip(G, 1e-300, 1.0)))
            P = np.array(
                [
                    self._U * self._areas[k] * np.sum(xw * f[k] * Gp)
                    for k in range(self.K)
                ]
            )
            P = P / P.sum()
        return LocationPmf(P, scheme=PROPORTIONAL_FAIR)

    def pf_winner_cdf(self, x) -> np.ndarray:
        """CDF of the PF winner's received power X0."""
        xi, xw, F, f, logF = self._pf_setup()
        gbar = self.pf_normalizers()
        if self.grid.atomic:
            n = self._counts
            T = np.sum(n[:, None] * logF, axis=0)
            dens = [xw * n[k] * f[k] * np.exp(T - logF[k]) for k in range(self.K)]
        else:
            G = self._excluded + np.sum(self._areas[:, None] * F, axis=0)
            Gp = np.exp((self._U - 1) * np.log(np.clip(G, 1e-300, 1.0)))
            dens = [self._U * self._areas[k] * xw * f[k] * Gp for k in range(self.K)]
        cums = [np.concatenate(([0.0], np.cumsum(d))) for d in dens]
        grid_pts = np.concatenate(([0.0], xi))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for k in range(self.K):
            out += np.interp(x / gbar[k], grid_pts, cums[k], left=0.0, right=cums[k][-1])
        total = sum(c[-1] for c in cums)
        return np.clip(out / total, 0.0, 1.0)

    # -- greedy round robin ---------------------------------------------------

    def conditional_greedy(self, served: frozenset) -> tuple[np.ndarray, float]:
        """Slot PMF over regions given the set of already served regions.

        Returns ``(masses, p_skip)`` where ``masses[k]`` is the probability
        region ``k`` is served now and ``p_skip`` the probability no
        schedulable user remains outside ``served``.
        """
        alive = [k for k in range(self.K) if k not in served]
        P = np.zeros(self.K)
        if not alive:
            return P, 1.0
        if self.grid.atomic:
            n = self._counts
            T = np.sum(n[list(alive), None] * self._logF[list(alive)], axis=0)
            for k in alive:
                P[k] = np.sum(self._gw * n[k] * self._f[k] * np.exp(T - self._logF[k]))
            return P, 0.0
        blocked = self._excluded + sum(self._areas[j] for j in served)
        m = self._U - len(served)  # users not yet consumed by earlier slots
        if m <= 0:
            return P, 1.0
        Gs = blocked + np.sum(self._areas[list(alive), None] * self._F[list(alive)], axis=0)
        Gp = np.exp((m - 1) * np.log(np.clip(Gs, 1e-300, 1.0)))
        for k in alive:
            P[k] = m * self._areas[k] * np.sum(self._gw * self._f[k] * Gp)
        return P, blocked**m

    def region_cdf_table(self, x) -> np.ndarray:
        """Per-region compound CDFs stacked as a (K, len(x)) table."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([self.region_cdf(k, x) for k in range(self.K)])

    def conditional_winner_cdf(self, served: frozenset, x, table: np.ndarray | None = None) -> np.ndarray:
        """CDF of the slot winner's power given served regions, conditioned
        on the slot actually being served."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if table is None:
            table = self.region_cdf_table(x)
        alive = [k for k in range(self.K) if k not in served]
        if self.grid.atomic:
            n = self._counts
            out = np.ones_like(x)
            for k in alive:
                out *= np.clip(table[k], 1e-300, 1.0) ** n[k]
            return out
        blocked = self._excluded + sum(self._areas[j] for j in served)
        m = self._U - len(served)
        Gs = blocked + np.sum(self._areas[alive, None] * table[alive], axis=0)
        atom = blocked**m
        return np.clip((Gs**m - atom) / (1.0 - atom), 0.0, 1.0)


def _log_panels(lo: float, hi: float, panel_width: float, order: int):
    """Composite Gauss-Legendre nodes/weights for integrals over (lo, hi)
    evaluated in log space; weights include the d(gamma) Jacobian."""
    n_panels = max(4, int(np.ceil(np.log(hi / lo) / panel_width)))
    bounds = np.linspace(np.log(lo), np.log(hi), n_panels + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    centers = 0.5 * (bounds[1:] + bounds[:-1])
    halves = 0.5 * np.diff(bounds)
    y = (centers[:, None] + halves[:, None] * x[None, :]).ravel()
    wy = (halves[:, None] * w[None, :]).ravel()
    gamma = np.exp(y)
    return gamma, wy * gamma


def _resolved_grid(grid: RingGrid, mode: str) -> RingGrid:
    if mode == "region":
        return grid
    if mode == "ring":
        if grid.atomic:
            return grid
        return RingGrid.from_rings(grid.radii, grid.users, grid.kappa)
    raise ValueError(f"unknown mode {mode!r}; expected 'region' or 'ring'")


def greedy_pmf(
    grid: RingGrid, model: ChannelModel, config: NetworkConfig, mode: str = "region"
) -> LocationPmf:
    """PMF of the served region under greedy (max-SNR) scheduling.

    The region winning is the one holding the cell-wide best user, so the
    mass of region k is the integral of its winner density against the
    others' CDFs.
    """
    return CellContest(_resolved_grid(grid, mode), model, config).greedy()


def proportional_fair_pmf(
    grid: RingGrid, model: ChannelModel, config: NetworkConfig, mode: str = "region"
) -> LocationPmf:
    """PMF of the served region under proportional fair scheduling.

    Every user's SNR is normalised by its region's short-term selected mean
    (``CellContest.pf_normalizers``) before the max-SNR contest.
    """
    return CellContest(_resolved_grid(grid, mode), model, config).proportional_fair()


def round_robin_pmf(grid: RingGrid, mode: str = "region") -> LocationPmf:
    """PMF of the served region under round robin (uniform user choice).

    Access probability is proportional to the expected region occupancy;
    in ring mode the rounded counts are used instead.
    """
    if mode == "ring" or grid.atomic:
        masses = grid.users / grid.u_total
    else:
        masses = grid.occupancy / grid.occupancy_total
    return LocationPmf(np.asarray(masses, dtype=float), scheme=ROUND_ROBIN)


def location_rr_pmf(grid: RingGrid, slot: int) -> LocationPmf:
    """Point mass on the region served in the given slot (1-based)."""
    if not 1 <= slot <= grid.num_rings:
        raise ValueError("slot must lie in 1..K")
    masses = np.zeros(grid.num_rings)
    masses[slot - 1] = 1.0
    return LocationPmf(masses, scheme=LOCATION_ROUND_ROBIN, slot=slot)


class GreedyRoundRobinSweep:
    """Exact multi-slot greedy round robin recursion with memoization.

    The slot-w PMF sums over every unordered history of served regions; the
    conditional of a history depends only on the surviving set, so
    conditionals are memoized per set.  The planned number of conditional
    integrals is sum_{w<W} C(K, w) (K - w); evaluation is rejected when it
    exceeds ``budget`` (the Monte-Carlo engine is the fallback at that
    scale).
    """

    def __init__(
        self,
        grid: RingGrid,
        model: ChannelModel,
        config: NetworkConfig,
        max_slot: int,
        mode: str = "region",
        budget: float = 1e5,
    ):
        grid = _resolved_grid(grid, mode)
        if not 1 <= max_slot <= grid.num_rings:
            raise ValueError("slot range must lie in 1..K")
        K = grid.num_rings
        planned = sum(math.comb(K, w) * (K - w) for w in range(max_slot))
        if planned > budget:
            raise ComplexityBudgetError(
                f"exact evaluation needs {planned} conditional integrals "
                f"(budget {budget:g}); use the Monte-Carlo engine instead"
            )
        self.grid = grid
        self.contest = CellContest(grid, model, config)
        self.max_slot = max_slot
        self._cond: dict[frozenset, tuple[np.ndarray, float]] = {}
        # state weights entering each slot: list of dict {served set: prob}
        self._entering: list[dict[frozenset, float]] = [{frozenset(): 1.0}]
        for w in range(1, max_slot):
            nxt: dict[frozenset, float] = {}
            for served, prob in self._entering[w - 1].items():
                masses, p_skip = self._conditional(served)
                if p_skip > 0:
                    nxt[served] = nxt.get(served, 0.0) + prob * p_skip
                for k in np.nonzero(masses)[0]:
                    key = served | {int(k)}
                    nxt[key] = nxt.get(key, 0.0) + prob * masses[k]
            self._entering.append(nxt)

    def _conditional(self, served: frozenset):
        if served not in self._cond:
            self._cond[served] = self.contest.conditional_greedy(served)
        return self._cond[served]

    def slot_pmf(self, slot: int) -> LocationPmf:
        """Region PMF at the given slot, conditioned on the slot being served."""
        if not 1 <= slot <= self.max_slot:
            raise ValueError("slot outside the prepared range")
        masses = np.zeros(self.grid.num_rings)
        for served, prob in self._entering[slot - 1].items():
            cond, _ = self._conditional(served)
            masses += prob * cond
        total = masses.sum()
        if total <= 0:
            raise RuntimeError("slot is never served under this configuration")
        return LocationPmf(masses / total, scheme=GREEDY_ROUND_ROBIN, slot=slot)

    def slot_winner_cdf(self, slot: int, x) -> np.ndarray:
        """CDF of the slot winner's received power (served slots only)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        table = self.contest.region_cdf_table(x)
        num = np.zeros_like(x)
        norm = 0.0
        for served, prob in self._entering[slot - 1].items():
            cond, p_skip = self._conditional(served)
            weight = prob * (1.0 - p_skip)
            if weight <= 0:
                continue
            num += weight * self.contest.conditional_winner_cdf(served, x, table)
            norm += weight
        return num / norm

    def slot_service_probability(self, slot: int) -> float:
        return float(
            sum(
                prob * (1.0 - self._conditional(served)[1])
                for served, prob in self._entering[slot - 1].items()
            )
        )

    def slot_fairness_population(self, slot: int) -> float:
        """Expected eligible-user total of the slot, for the fairness normaliser:
        the occupancy of surviving regions averaged over histories."""
        occ = self.grid.occupancy
        total = 0.0
        for served, prob in self._entering[slot - 1].items():
            alive = [k for k in range(self.grid.num_rings) if k not in served]
            total += prob * float(np.sum(occ[alive]))
        return total


def greedy_rr_pmf(
    grid: RingGrid,
    model: ChannelModel,
    config: NetworkConfig,
    slot: int,
    mode: str = "region",
    budget: float = 1e5,
) -> LocationPmf:
    """Slot PMF of greedy round robin; slot 1 coincides with plain greedy."""
    sweep = GreedyRoundRobinSweep(grid, model, config, max_slot=slot, mode=mode, budget=budget)
    return sweep.slot_pmf(slot)
