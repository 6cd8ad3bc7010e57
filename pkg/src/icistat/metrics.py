"""Network performance metrics from the derived transforms.

Outage probability inverts the characteristic function of Z = q Y - X0,
ergodic capacity evaluates the single-integral moment-generating-function
lemma with a Gauss-Laguerre rule, and average fairness is the entropy-style
measure of the per-user access proportions implied by a location PMF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .fading import ChannelModel
from .geometry import NetworkConfig, RingGrid
from .interference import InterferenceTransform
from .numerics import IntegrationError, QuadratureRule, gauss_laguerre
from .scheduling import (
    GREEDY,
    GREEDY_ROUND_ROBIN,
    LOCATION_ROUND_ROBIN,
    PROPORTIONAL_FAIR,
    ROUND_ROBIN,
    CellContest,
    GreedyRoundRobinSweep,
    LocationPmf,
)

__all__ = [
    "SignalLaw",
    "OutageProblem",
    "FairnessResult",
    "CapacityResult",
    "signal_law",
    "outage_probability",
    "ergodic_capacity",
    "average_fairness",
    "slot_averaged_metric",
]


class SignalLaw:
    """Law of the scheduled user's received power X0 in the cell of interest.

    Wraps a vectorized CDF; the Laplace transform and characteristic
    function are obtained from the survival function by parts:

        E[e^{-t X0}]   = 1 - t int_0^inf e^{-t x} S(x) dx,
        E[e^{i w X0}]  = 1 + i w int_0^inf e^{i w x} S(x) dx.
    """

    def __init__(self, scheme: str, cdf, slot: int | None = None):
        self.scheme = scheme
        self.slot = slot
        self._cdf = cdf
        self._scale = None
        self._mean = None
        self._cutoff = None
        self._table = None

    def cdf(self, x):
        return self._cdf(np.atleast_1d(np.asarray(x, dtype=float)))

    def survival(self, x):
        return 1.0 - self.cdf(x)

    @property
    def scale(self) -> float:
        """Median-scale of the law, used to normalise integrals."""
        if self._scale is None:
            lo, hi = 1e-300, 1.0
            while float(self.cdf(hi)[0]) < 0.5:
                hi *= 8.0
                if hi > 1e300:
                    raise IntegrationError("signal law has no finite median scale")
            lo = hi / 8.0
            for _ in range(80):
                mid = np.sqrt(lo * hi)
                if float(self.cdf(mid)[0]) < 0.5:
                    lo = mid
                else:
                    hi = mid
            self._scale = hi
        return self._scale

    @property
    def mean(self) -> float:
        if self._mean is None:
            x, w, surv, head = self._survival_table()
            self._mean = head + float(np.sum(w * surv))
        return self._mean

    def tail_cutoff(self, eps: float = 1e-11) -> float:
        """Power beyond which the survival function drops below ``eps``."""
        if self._cutoff is None:
            lo = hi = self.scale
            while float(self.survival(hi)[0]) > eps:
                lo, hi = hi, hi * 4.0
                if hi > 1e280:
                    raise IntegrationError("signal law tail does not decay")
            for _ in range(60):
                mid = np.sqrt(lo * hi)
                if float(self.survival(mid)[0]) > eps:
                    lo = mid
                else:
                    hi = mid
            self._cutoff = hi
        return self._cutoff

    def _survival_table(self):
        """Cached log-panel nodes, weights and survival values spanning the
        whole law; makes every Laplace evaluation a single weighted sum."""
        if self._table is None:
            lo = self.scale * 1e-9
            hi = self.tail_cutoff(1e-13)
            n_panels = max(24, int(np.ceil(np.log(hi / lo) / 0.2)))
            bounds = np.linspace(np.log(lo), np.log(hi), n_panels + 1)
            gx, gw = np.polynomial.legendre.leggauss(12)
            half = 0.5 * np.diff(bounds)
            mid = 0.5 * (bounds[1:] + bounds[:-1])
            y = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
            wy = (half[:, None] * gw[None, :]).ravel()
            x = np.exp(y)
            self._table = (x, wy * x, self.survival(x), lo)
        return self._table

    def laplace(self, t: float) -> float:
        if t == 0:
            return 1.0
        x, w, surv, head = self._survival_table()
        val = head + float(np.sum(w * np.exp(-t * x) * surv))
        return 1.0 - t * val

    def cf_survival_integral(self, omegas: np.ndarray) -> np.ndarray:
        """int_0^inf e^{i w x} S(x) dx for an array of positive frequencies.

        Composite Gauss-Legendre panels on [0, tail cutoff], at least four
        panels per oscillation period of the fastest frequency; the panel
        nodes are shared by the whole batch.
        """
        omegas = np.asarray(omegas, dtype=float)
        x_max = self.tail_cutoff()
        periods = omegas.max() * x_max / (2.0 * np.pi)
        n_panels = int(min(max(32, np.ceil(4.0 * periods)), 60000))
        bounds = np.linspace(0.0, x_max, n_panels + 1)
        gx, gw = np.polynomial.legendre.leggauss(8)
        half = 0.5 * np.diff(bounds)
        mid = 0.5 * (bounds[1:] + bounds[:-1])
        nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        ws = wts * self.survival(nodes)
        out = np.empty(omegas.shape, dtype=complex)
        chunk = max(1, int(2_000_000 // max(nodes.size, 1)))
        for i in range(0, omegas.size, chunk):
            sl = slice(i, min(i + chunk, omegas.size))
            out[sl] = np.exp(1j * np.outer(omegas[sl], nodes)) @ ws
        return out

    def char_fun_batch(self, omegas: np.ndarray) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=float)
        return 1.0 + 1j * omegas * self.cf_survival_integral(omegas)

    def char_fun(self, omega: float) -> complex:
        if omega == 0:
            return 1.0 + 0.0j
        if omega < 0:
            return np.conj(self.char_fun(-omega))
        return complex(self.char_fun_batch(np.array([omega]))[0])


def signal_law(
    pmf: LocationPmf,
    grid: RingGrid,
    model: ChannelModel,
    config: NetworkConfig,
    sweep: GreedyRoundRobinSweep | None = None,
    contest: CellContest | None = None,
) -> SignalLaw:
    """Received-power law of the scheduled user for the PMF's scheme.

    Greedy and proportional fair use the exact winner-value laws of the
    scheduling contest; round robin and location round robin mix the
    per-region user law with the PMF masses; greedy round robin requires
    the prepared ``sweep`` for its slot.
    """
    scheme = pmf.scheme
    if contest is None:
        contest = sweep.contest if sweep is not None else CellContest(grid, model, config)

    if scheme == GREEDY:
        if grid.atomic:
            def cdf(x):
                out = np.ones_like(np.atleast_1d(x), dtype=float)
                for k in range(grid.num_rings):
                    out *= np.clip(contest.region_cdf(k, x), 1e-300, 1.0) ** grid.users[k]
                return out
        else:
            U = config.num_users
            def cdf(x):
                return contest.cell_cdf(x) ** U
        return SignalLaw(scheme, cdf)

    if scheme == PROPORTIONAL_FAIR:
        return SignalLaw(scheme, lambda x: contest.pf_winner_cdf(x))

    if scheme in (ROUND_ROBIN, LOCATION_ROUND_ROBIN):
        weights = pmf.probabilities

        def cdf(x):
            out = np.zeros_like(np.atleast_1d(x), dtype=float)
            for k in np.nonzero(weights)[0]:
                out += weights[k] * contest.region_cdf(int(k), x)
            return out

        return SignalLaw(scheme, cdf, slot=pmf.slot)

    if scheme == GREEDY_ROUND_ROBIN:
        if sweep is None:
            raise ValueError("greedy round robin needs the prepared sweep")
        slot = pmf.slot
        return SignalLaw(scheme, lambda x: sweep.slot_winner_cdf(slot, x), slot=slot)

    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class OutageProblem:
    """Outage event q Y - X0 >= 0 at a linear interference-to-signal threshold."""

    threshold: float

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("outage threshold must be positive")

    @classmethod
    def from_db(cls, q_db: float) -> "OutageProblem":
        return cls(threshold=10.0 ** (q_db / 10.0))


def _interference_cdf_grid(tr: InterferenceTransform, n: int = 360):
    """Inverted CDF of the cumulative interference on a cached log grid."""
    cache = getattr(tr, "_cdf_grid_cache", None)
    if cache is not None and cache[0] == n:
        return cache[1], cache[2]
    from .numerics import cf_to_cdf_grid

    lo, hi = tr.mean * 1e-3, tr.mean * 50.0
    ys = np.exp(np.linspace(np.log(lo), np.log(hi), n))
    F = np.maximum.accumulate(cf_to_cdf_grid(tr.char_fun, ys, rel_tol=1e-6))
    object.__setattr__(tr, "_cdf_grid_cache", (n, ys, F))
    return ys, F


def outage_probability(
    problem: OutageProblem,
    signal: SignalLaw,
    tr: InterferenceTransform,
    rel_tol: float = 1e-5,
    method: str = "conditional",
) -> float:
    """Outage probability P(Z >= 0) for Z = q Y - X0.

    The default path factorizes the inversion of the characteristic function
    of Z over the independent pair: the interference CDF is recovered from
    its characteristic function (Gil-Pelaez, cached on a log grid per
    transform) and integrated against the signal law,

        P_out = 1 - E_X0[F_Y(X0 / q)].

    ``method="cf_z"`` evaluates the joint inversion
    1/2 + (1/pi) int Im(phi_Y(q w) phi_X0(-w)) / w dw directly by
    octave-doubled quadrature; it is exact but expensive when the signal and
    interference scales are far apart, and serves as a cross-check.
    """
    q = problem.threshold
    if method == "conditional":
        if tr.num_cells == 0:
            return 0.0  # Z = -X0 < 0 almost surely
        ys, F_Y = _interference_cdf_grid(tr)
        x_knots = q * ys
        F_X = np.clip(signal.cdf(x_knots), 0.0, 1.0)
        F_X = np.maximum.accumulate(F_X)
        mid_FY = 0.5 * (F_Y[1:] + F_Y[:-1])
        expect = float(np.sum(mid_FY * np.diff(F_X)))
        # below the grid F_Y ~ 0; above it F_Y ~ 1
        expect += 1.0 - F_X[-1]
        return float(min(1.0, max(0.0, 1.0 - expect)))
    if method != "cf_z":
        raise ValueError(f"unknown outage method {method!r}")

    def octave(lo: float, hi: float) -> float:
        # panel density follows the integrand's oscillation, whose period in
        # omega is set by the bulk extents of X0 and of qY
        x_osc = signal.tail_cutoff() + 30.0 * q * tr.mean
        n_panels = int(min(max(12, np.ceil(0.8 * hi * x_osc)), 30000))
        bounds = np.linspace(lo, hi, n_panels + 1)
        gx, gw = np.polynomial.legendre.leggauss(10)
        half = 0.5 * np.diff(bounds)
        mid = 0.5 * (bounds[1:] + bounds[:-1])
        ws = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        vals = (tr.char_fun(q * ws) * np.conj(signal.char_fun_batch(ws))).imag / ws
        return float(np.sum(wts * vals))

    w_char = 1.0 / max(signal.scale, q * tr.mean if tr.num_cells else 0.0, 1e-300)
    w_hi = w_char / 256.0
    total = octave(w_hi * 1e-9, w_hi)
    quiet = 0
    for _ in range(90):
        piece = octave(w_hi, 2 * w_hi)
        total += piece
        w_hi *= 2.0
        if abs(piece) / np.pi < rel_tol:
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        raise IntegrationError("outage inversion did not settle within the octave budget")
    return float(min(1.0, max(0.0, 0.5 + total / np.pi)))


@dataclass(frozen=True)
class CapacityResult:
    """Ergodic capacity with the convergence diagnostics of its evaluation."""

    bits_per_hz: float
    order: int
    check_order: int
    rel_difference: float
    method: str

    def __float__(self):
        return self.bits_per_hz


def _capacity_integrand(signal: SignalLaw, tr: InterferenceTransform, sigma2: float):
    def h(t):
        ly = tr.laplace(t).real if tr.num_cells else 1.0
        return ly * (1.0 - signal.laplace(t)) * np.exp(-sigma2 * t) / t

    return h


def _capacity_laguerre(h, s0: float, rule: QuadratureRule) -> float:
    t = rule.nodes / s0
    vals = np.array([h(ti) for ti in t])
    return float(np.sum(rule.weights * np.exp(rule.nodes) * vals) / s0)


def ergodic_capacity(
    signal: SignalLaw,
    tr: InterferenceTransform,
    config: NetworkConfig,
    rule: QuadratureRule | None = None,
    check_tol: float = 1e-3,
) -> CapacityResult:
    """Ergodic capacity E[log2(1 + X0 / (Y + sigma2))] in bits/s/Hz.

    Evaluates the moment-generating-function lemma

        ln(2) C = int_0^inf L_Y(t) (1 - L_X0(t)) e^{-sigma2 t} / t dt

    with a Gauss-Laguerre rule rescaled to the geometric mean of the signal
    and interference-plus-noise scales, checked by re-evaluating eight
    orders higher.  When the two orders disagree beyond ``check_tol`` the
    integral is recomputed by adaptive quadrature on the log axis, which
    handles arbitrarily wide scale separations.
    """
    if rule is None:
        rule = gauss_laguerre(24)
    check_rule = gauss_laguerre(min(rule.order + 8, 64))
    sigma2 = config.sigma2
    h = _capacity_integrand(signal, tr, sigma2)

    ex = signal.mean
    ey = tr.mean + sigma2
    s0 = float(np.sqrt(ex * ey))
    v1 = _capacity_laguerre(h, s0, rule)
    v2 = _capacity_laguerre(h, s0, check_rule)
    denom = max(abs(v2), 1e-300)
    rel = abs(v1 - v2) / denom
    if rel <= check_tol:
        return CapacityResult(
            bits_per_hz=float(v2 / np.log(2.0)),
            order=rule.order,
            check_order=check_rule.order,
            rel_difference=rel,
            method="laguerre",
        )

    # wide-scale fallback: integrate on the log axis
    t_lo = 1e-8 / max(ex, ey)
    t_hi = 1e8 / min(ex, ey)
    val, err = integrate.quad(
        lambda y: h(np.exp(y)) * np.exp(y),
        np.log(t_lo),
        np.log(t_hi),
        epsrel=1e-9,
        limit=800,
    )
    if err > 1e-6 * abs(val) + 1e-300:
        raise IntegrationError(
            f"capacity integral did not converge (laguerre rel diff {rel:.2e}, "
            f"adaptive err {err:.2e})"
        )
    return CapacityResult(
        bits_per_hz=float(val / np.log(2.0)),
        order=rule.order,
        check_order=check_rule.order,
        rel_difference=rel,
        method="adaptive",
    )


@dataclass(frozen=True)
class FairnessResult:
    """Average fairness and the per-user access proportions behind it."""

    value: float
    access_proportions: np.ndarray
    populations: np.ndarray

    def __post_init__(self):
        if not -1e-9 <= self.value <= 1.0 + 1e-9:
            raise ValueError("fairness must lie in [0, 1]")


def average_fairness(
    pmf: LocationPmf,
    grid: RingGrid,
    u_total: float | None = None,
    populations: np.ndarray | None = None,
) -> FairnessResult:
    """Entropy-style fairness of the access proportions implied by the PMF:

        F = - sum_k P_k (log10 P_k - log10 u_k) / log10(U),

    with zero-mass regions contributing nothing.  ``populations`` defaults
    to the grid occupancies and ``u_total`` to their sum; a single-user
    system is fair by convention.
    """
    if populations is None:
        populations = grid.users.astype(float) if grid.atomic else grid.occupancy
    populations = np.asarray(populations, dtype=float)
    if u_total is None:
        u_total = float(populations.sum())
    p = pmf.probabilities
    if u_total <= 1.0:
        value = 1.0
    else:
        mask = p > 0
        terms = p[mask] * (np.log10(p[mask]) - np.log10(populations[mask]))
        value = float(-terms.sum() / np.log10(u_total))
    value = min(max(value, 0.0), 1.0 + 1e-12)
    per_user = np.where(populations > 0, p / populations, 0.0)
    return FairnessResult(value=value, access_proportions=per_user, populations=populations)


def slot_averaged_metric(metric, slots: int) -> float:
    """Arithmetic mean of a per-slot metric over slots 1..W."""
    if slots < 1:
        raise ValueError("need at least one slot")
    return float(np.mean([float(metric(w)) for w in range(1, slots + 1)]))
