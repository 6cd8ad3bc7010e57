"""Seeded per-user Monte-Carlo engine, the independent oracle for the analytics.

Each trial drops ``U`` users uniformly on every cell's disc (continuous
radii and angles, no ring quantization), draws composite gains, applies the
schedulers at the user level and accumulates the empirical counterparts of
every analytic quantity: location and interferer-distance histograms,
cumulative interference samples, SINR-based capacity, outage rates and
access fairness.  Users falling inside the excluded central disc are present
but never scheduled.

Determinism: trials are partitioned into fixed-size batches and each batch
draws from a counter-based Philox stream keyed by the master seed with the
batch index in the counter block, so identical (config, seed, batch size)
reproduce the report bit for bit under any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fading import ChannelModel
from .geometry import NetworkConfig, RingGrid, SegmentGrid, build_segment_grid
from .scheduling import (
    GREEDY,
    GREEDY_ROUND_ROBIN,
    LOCATION_ROUND_ROBIN,
    PROPORTIONAL_FAIR,
    ROUND_ROBIN,
    SCHEMES,
    CellContest,
)

__all__ = ["SimulationReport", "TrialOutcome", "run_trials", "empirical_cdf"]

_SINGLE_SLOT = (GREEDY, PROPORTIONAL_FAIR, ROUND_ROBIN)


@dataclass(frozen=True)
class TrialOutcome:
    """Per-trial record for one scheme: serving power, interference, SINR."""

    scheme: str
    x0: float
    y: float
    sinr: float
    ring_index: int
    x_cells: np.ndarray | None = None


def _entropy_fairness(p: np.ndarray, populations: np.ndarray, u_total: float) -> float:
    mask = p > 0
    if u_total <= 1.0:
        return 1.0
    val = -np.sum(p[mask] * (np.log10(p[mask]) - np.log10(populations[mask]))) / np.log10(u_total)
    return float(min(max(val, 0.0), 1.0))


@dataclass
class SimulationReport:
    """Aggregated Monte-Carlo outcomes; reproducible from (config, seed)."""

    config: NetworkConfig
    grid: RingGrid
    segments: SegmentGrid
    schemes: tuple
    n_trials: int
    seed: int
    batch_size: int
    x0: dict = field(default_factory=dict)          # scheme -> (n,) or (n, W)
    y: dict = field(default_factory=dict)           # scheme -> (n,) or (n, W)
    x_cells: dict = field(default_factory=dict)     # greedy -> (n, L)
    valid: dict = field(default_factory=dict)       # greedy_rr -> (n, W) bool
    win_region: dict = field(default_factory=dict)
    loc_counts: dict = field(default_factory=dict)  # scheme -> (K,) or (W, K)
    seg_counts: dict = field(default_factory=dict)  # scheme -> (M,) or (W, M)
    surviving_occupancy: dict = field(default_factory=dict)  # greedy_rr -> (W,)

    # -- empirical laws -----------------------------------------------------

    def location_pmf(self, scheme: str, slot: int | None = None) -> np.ndarray:
        counts = self.loc_counts[scheme]
        if slot is not None:
            counts = counts[slot - 1]
        return counts / counts.sum()

    def interferer_pmf(self, scheme: str, slot: int | None = None) -> np.ndarray:
        counts = self.seg_counts[scheme]
        if slot is not None:
            counts = counts[slot - 1]
        return counts / counts.sum()

    def ici_samples(self, scheme: str, num_cells: int | None = None, slot: int | None = None):
        if scheme == GREEDY and num_cells is not None:
            return self.x_cells[GREEDY][:, :num_cells].sum(axis=1)
        samples = self.y[scheme]
        if slot is not None:
            samples = samples[:, slot - 1]
        return samples

    # -- metrics --------------------------------------------------------------

    def _masked_mean(self, values, mask):
        if mask is None:
            return float(np.mean(values))
        return float(np.sum(values[mask]) / np.count_nonzero(mask))

    def capacity(self, scheme: str, slots: int | None = None) -> float:
        """Mean log2(1 + X0 / (Y + sigma2)); slot-based schemes average the
        per-slot means over the first ``slots`` slots (served trials only)."""
        s2 = self.config.sigma2
        x0, y = self.x0[scheme], self.y[scheme]
        if x0.ndim == 1:
            return float(np.mean(np.log2(1.0 + x0 / (y + s2))))
        slots = slots or x0.shape[1]
        per_slot = []
        for w in range(slots):
            mask = self.valid[scheme][:, w] if scheme in self.valid else None
            with np.errstate(invalid="ignore"):
                vals = np.log2(1.0 + x0[:, w] / (y[:, w] + s2))
            per_slot.append(self._masked_mean(vals, mask))
        return float(np.mean(per_slot))

    def outage_rate(self, scheme: str, q: float, slots: int | None = None) -> float:
        """Empirical P(q Y - X0 >= 0) at the linear threshold q."""
        x0, y = self.x0[scheme], self.y[scheme]
        if x0.ndim == 1:
            return float(np.mean(q * y - x0 >= 0.0))
        slots = slots or x0.shape[1]
        per_slot = []
        for w in range(slots):
            mask = self.valid[scheme][:, w] if scheme in self.valid else None
            vals = (q * y[:, w] - x0[:, w] >= 0.0).astype(float)
            per_slot.append(self._masked_mean(vals, mask))
        return float(np.mean(per_slot))

    def fairness(self, scheme: str, slots: int | None = None) -> float:
        """Access fairness from the empirical histograms.  Slot-based schemes
        score each slot against that slot's eligible population and average;
        location round robin is uniform within its slot's region, hence 1."""
        occ = self.grid.occupancy
        if scheme == LOCATION_ROUND_ROBIN:
            return 1.0
        counts = self.loc_counts[scheme]
        if counts.ndim == 1:
            return _entropy_fairness(counts / counts.sum(), occ, occ.sum())
        slots = slots or counts.shape[0]
        per_slot = []
        for w in range(slots):
            p = counts[w] / counts[w].sum()
            pop = self.surviving_occupancy[scheme][w]
            per_slot.append(_entropy_fairness(p, occ, pop))
        return float(np.mean(per_slot))

    def trial(self, scheme: str, i: int) -> TrialOutcome:
        x0 = self.x0[scheme][i]
        y = self.y[scheme][i]
        x0 = float(x0 if np.ndim(x0) == 0 else x0[0])
        y = float(y if np.ndim(y) == 0 else y[0])
        ring = int(self.win_region[scheme][i]) if scheme in self.win_region else -1
        cells = self.x_cells.get(scheme)
        return TrialOutcome(
            scheme=scheme,
            x0=x0,
            y=y,
            sinr=x0 / (y + self.config.sigma2),
            ring_index=ring,
            x_cells=None if cells is None else cells[i],
        )


def empirical_cdf(samples, xs) -> np.ndarray:
    """Right-continuous empirical CDF of ``samples`` at the points ``xs``."""
    samples = np.sort(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ValueError("empirical_cdf needs at least one sample")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    return np.searchsorted(samples, xs, side="right") / samples.size


def _pick_uniform_eligible(elig: np.ndarray, u: np.ndarray):
    """Index of the floor(u * n)-th eligible entry along the last axis."""
    n = elig.sum(axis=-1)
    k = np.minimum((u * n).astype(np.int64), np.maximum(n - 1, 0))
    cum = np.cumsum(elig, axis=-1)
    win = np.sum(cum <= k[..., None], axis=-1)
    return np.where(n > 0, win, 0), n > 0


class _BatchSimulator:
    """Simulates one batch of trials; all draws come from the batch stream."""

    def __init__(self, config, grid, schemes, chi, zeta, gbar, grr_slots, segments):
        self.config = config
        self.grid = grid
        self.schemes = schemes
        self.chi = chi
        self.zeta = zeta
        self.gbar = gbar
        self.grr_slots = grr_slots
        self.segments = segments

    def __call__(self, batch_idx: int, n_batch: int, seed: int) -> dict:
        cfg, grid = self.config, self.grid
        L = cfg.num_interferers
        C = 1 + L
        U = cfg.num_users
        K = grid.num_rings
        kbar, beta, D = cfg.k_bar, cfg.beta, cfg.bs_distance
        rng = np.random.Generator(
            np.random.Philox(key=seed, counter=batch_idx * (1 << 128))
        )
        out = {}

        r = cfg.radius * np.sqrt(rng.random((n_batch, C, U)))
        ang = 2.0 * np.pi * rng.random((n_batch, C, U))
        region = grid.ring_index(r)
        elig = region >= 0
        region_c = np.clip(region, 0, K - 1)
        rows = np.arange(n_batch)

        def interferer_powers(r_sel, ang_sel, chi_draw, silent=None):
            # r_sel, ang_sel: (n, C); use cells 1..L
            rt = np.sqrt(r_sel[:, 1:] ** 2 + D**2 - 2.0 * r_sel[:, 1:] * D * np.cos(ang_sel[:, 1:]))
            x = kbar * rt ** -beta * chi_draw
            if silent is not None:
                x = np.where(silent[:, 1:], 0.0, x)
                rt = np.where(silent[:, 1:], np.nan, rt)
            return x, rt

        def seg_hist(rt):
            finite = rt[np.isfinite(rt)]
            idx = self.segments.segment_index(finite)
            return np.bincount(idx, minlength=self.segments.count)

        need_single = [s for s in self.schemes if s in _SINGLE_SLOT]
        if need_single:
            gains = self.zeta.sample(rng, (n_batch, C, U))
            gamma = kbar * r**-beta * gains
            masked = np.where(elig, gamma, -np.inf)

        for scheme in (GREEDY, PROPORTIONAL_FAIR, ROUND_ROBIN):
            if scheme not in self.schemes:
                continue
            if scheme == GREEDY:
                win = np.argmax(masked, axis=2)
            elif scheme == PROPORTIONAL_FAIR:
                norm = np.where(elig, gamma / self.gbar[region_c], -np.inf)
                win = np.argmax(norm, axis=2)
            else:
                win, _ = _pick_uniform_eligible(elig, rng.random((n_batch, C)))
            chi_draw = self.chi.sample(rng, (n_batch, L)) if L else np.zeros((n_batch, 0))
            take = lambda a: np.take_along_axis(a, win[..., None], axis=2)[..., 0]
            x0 = take(gamma)[:, 0]
            r_sel, ang_sel = take(r), take(ang)
            win_reg = take(region_c)
            x_cells, rt = interferer_powers(r_sel, ang_sel, chi_draw)
            rec = {
                "x0": x0,
                "y": x_cells.sum(axis=1),
                "win_region": win_reg[:, 0],
                "loc_counts": np.bincount(win_reg[:, 0], minlength=K),
                "seg_counts": seg_hist(rt),
            }
            if scheme == GREEDY:
                rec["x_cells"] = x_cells
            out[scheme] = rec

        if LOCATION_ROUND_ROBIN in self.schemes:
            e2 = self.grid.edges**2
            x0 = np.empty((n_batch, K))
            yv = np.empty((n_batch, K))
            segs = np.zeros((K, self.segments.count), dtype=np.int64)
            for w in range(K):
                # the selected user's position is uniform within region w,
                # which is the conditional law of a uniform pick from the
                # region's occupants; competition never enters
                u_pos = rng.random((n_batch, C))
                r_sel = np.sqrt(e2[w] + u_pos * (e2[w + 1] - e2[w]))
                ang_sel = 2.0 * np.pi * rng.random((n_batch, C))
                z_sel = self.zeta.sample(rng, (n_batch, C))
                chi_draw = self.chi.sample(rng, (n_batch, L)) if L else np.zeros((n_batch, 0))
                x0[:, w] = kbar * r_sel[:, 0] ** -beta * z_sel[:, 0]
                x_cells, rt = interferer_powers(r_sel, ang_sel, chi_draw)
                yv[:, w] = x_cells.sum(axis=1)
                segs[w] = seg_hist(rt)
            loc = np.eye(K, dtype=np.int64) * n_batch
            out[LOCATION_ROUND_ROBIN] = {
                "x0": x0,
                "y": yv,
                "loc_counts": loc,
                "seg_counts": segs,
            }

        if GREEDY_ROUND_ROBIN in self.schemes:
            W = self.grr_slots
            x0 = np.full((n_batch, W), np.nan)
            yv = np.zeros((n_batch, W))
            valid = np.zeros((n_batch, W), dtype=bool)
            loc = np.zeros((W, K), dtype=np.int64)
            segs = np.zeros((W, self.segments.count), dtype=np.int64)
            surv = np.zeros(W)
            excluded = np.zeros((n_batch, C, K), dtype=bool)
            for w in range(W):
                surv[w] = np.mean(
                    np.where(~excluded[:, 0, :], self.grid.occupancy[None, :], 0.0).sum(axis=1)
                )
                z_w = self.zeta.sample(rng, (n_batch, C, U))
                chi_draw = self.chi.sample(rng, (n_batch, L)) if L else np.zeros((n_batch, 0))
                gam_w = kbar * r**-beta * z_w
                user_excl = np.take_along_axis(excluded, region_c, axis=2)
                ok = elig & ~user_excl
                masked_w = np.where(ok, gam_w, -np.inf)
                win = np.argmax(masked_w, axis=2)
                has = ok.any(axis=2)
                take = lambda a: np.take_along_axis(a, win[..., None], axis=2)[..., 0]
                win_reg = take(region_c)
                np.put_along_axis(
                    excluded,
                    win_reg[..., None],
                    np.take_along_axis(excluded, win_reg[..., None], axis=2) | has[..., None],
                    axis=2,
                )
                x0_w = take(gam_w)[:, 0]
                served = has[:, 0]
                x0[:, w] = np.where(served, x0_w, np.nan)
                valid[:, w] = served
                x_cells, rt = interferer_powers(take(r), take(ang), chi_draw, silent=~has)
                yv[:, w] = x_cells.sum(axis=1)
                loc[w] = np.bincount(win_reg[:, 0][served], minlength=K)
                segs[w] = seg_hist(rt)
            out[GREEDY_ROUND_ROBIN] = {
                "x0": x0,
                "y": yv,
                "valid": valid,
                "loc_counts": loc,
                "seg_counts": segs,
                "surviving_occupancy": surv * n_batch,  # weighted for reduce
            }
        return out


def run_trials(
    config: NetworkConfig,
    grid: RingGrid,
    schemes,
    chi: ChannelModel,
    zeta: ChannelModel,
    n_trials: int,
    seed: int,
    segments: SegmentGrid | None = None,
    grr_slots: int | None = None,
    workers: int = 1,
    batch_size: int = 4096,
) -> SimulationReport:
    """Run the per-user simulation for the requested schemes.

    ``zeta`` is the composite gain of the in-cell links driving scheduling
    and the serving power; ``chi`` is the independent gain of the
    interfering links.  Greedy round robin sweeps ``grr_slots`` slots
    (default min(K, 6)); location round robin always sweeps all K rings.
    """
    schemes = tuple(schemes)
    if not schemes:
        raise ValueError("scheme list cannot be empty")
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    if n_trials < 1:
        raise ValueError("need at least one trial")
    if segments is None:
        segments = build_segment_grid(config, 20)
    if grr_slots is None:
        grr_slots = min(grid.num_rings, 6)

    gbar = None
    if PROPORTIONAL_FAIR in schemes:
        gbar = CellContest(grid, zeta, config).pf_normalizers()

    sim = _BatchSimulator(config, grid, schemes, chi, zeta, gbar, grr_slots, segments)
    n_batches = (n_trials + batch_size - 1) // batch_size
    sizes = [min(batch_size, n_trials - i * batch_size) for i in range(n_batches)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: sim(i, sizes[i], seed), range(n_batches)))
    else:
        results = [sim(i, sizes[i], seed) for i in range(n_batches)]

    report = SimulationReport(
        config=config,
        grid=grid,
        segments=segments,
        schemes=schemes,
        n_trials=n_trials,
        seed=seed,
        batch_size=batch_size,
    )
    for scheme in schemes:
        recs = [res[scheme] for res in results]
        report.x0[scheme] = np.concatenate([r["x0"] for r in recs])
        report.y[scheme] = np.concatenate([r["y"] for r in recs])
        report.loc_counts[scheme] = np.sum([r["loc_counts"] for r in recs], axis=0)
        report.seg_counts[scheme] = np.sum([r["seg_counts"] for r in recs], axis=0)
        if "win_region" in recs[0]:
            report.win_region[scheme] = np.concatenate([r["win_region"] for r in recs])
        if "x_cells" in recs[0]:
            report.x_cells[scheme] = np.concatenate([r["x_cells"] for r in recs])
        if "valid" in recs[0]:
            report.valid[scheme] = np.concatenate([r["valid"] for r in recs])
        if "surviving_occupancy" in recs[0]:
            total = np.sum([r["surviving_occupancy"] for r in recs], axis=0)
            report.surviving_occupancy[scheme] = total / n_trials
    return report
