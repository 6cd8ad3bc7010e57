"""Experiment presets: load a configuration, run the analytic and simulated
pipelines for one study, and emit delimited results with a run manifest.

Each preset reproduces one study at desk scale: location PMFs (fig2),
interferer-distance PMFs (fig3), interference CDFs across cell counts and
path-loss exponents (fig4), ergodic capacity versus user count (fig5),
outage and fairness (fig6) and capacity versus the interference channel
power (fig7).  Every output CSV embeds the resolved configuration through
the JSON manifest written next to it; reruns with the same spec produce
byte-identical CSV payloads (wall-clock metadata goes to a separate
sidecar).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .fading import ChannelModel, Exponential, Gamma, GeneralizedK
from .geometry import (
    AngularGrid,
    NetworkConfig,
    RingGrid,
    build_ring_grid,
    build_segment_grid,
    db_to_linear,
    dbm_to_watt,
)
from .interference import cumulative_transform, interferer_pmf, transform_to_cdf
from .metrics import (
    OutageProblem,
    average_fairness,
    ergodic_capacity,
    outage_probability,
    signal_law,
)
from .montecarlo import empirical_cdf, run_trials
from .scheduling import (
    GREEDY,
    GREEDY_ROUND_ROBIN,
    LOCATION_ROUND_ROBIN,
    PROPORTIONAL_FAIR,
    ROUND_ROBIN,
    SCHEMES,
    GreedyRoundRobinSweep,
    greedy_pmf,
    joint_pmf_with_angle,
    location_rr_pmf,
    proportional_fair_pmf,
    round_robin_pmf,
)

__all__ = ["ExperimentSpec", "RunSettings", "load_config", "run_experiment", "PRESETS"]

PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "custom")

# flat configuration document; dB-valued keys are converted on load
_DEFAULTS = {
    "radius_m": 500.0,
    "beta": 2.6,
    "kappa_db": 2.0,
    "num_users": 50,
    "num_interferers": 6,
    "bs_distance_m": 1000.0,
    "p_max_w": 1.0,
    "c_db": 60.0,
    "sigma2_dbm": -174.0,
    "bandwidth_hz": None,
    "angular_bins": 180,
    "num_segments": 20,
    "signal_fading": "gamma(1.5,0.6666666666666666)",
    "interference_fading": "gamma(1.5,0.6666666666666666)",
}

_MODEL_RE = re.compile(r"^\s*(exp|gamma|gk)\s*\(([^)]*)\)\s*$", re.IGNORECASE)


def parse_channel(spec: str) -> ChannelModel:
    """Parse a channel string: exp(rate), gamma(shape,scale), gk(m_c,m_s,omega)."""
    m = _MODEL_RE.match(spec)
    if not m:
        raise ValueError(f"cannot parse channel model {spec!r}")
    kind = m.group(1).lower()
    args = [float(a) for a in m.group(2).split(",") if a.strip()]
    if kind == "exp" and len(args) == 1:
        return Exponential(args[0])
    if kind == "gamma" and len(args) == 2:
        return Gamma(args[0], args[1])
    if kind == "gk" and len(args) == 3:
        return GeneralizedK(args[0], args[1], args[2])
    raise ValueError(f"wrong argument count in channel model {spec!r}")


@dataclass
class RunSettings:
    """Resolved physical and discretization settings of one run."""

    values: dict

    @property
    def config(self) -> NetworkConfig:
        v = self.values
        sigma2 = dbm_to_watt(v["sigma2_dbm"])
        if v.get("bandwidth_hz"):
            sigma2 *= v["bandwidth_hz"]
        return NetworkConfig(
            p_max=v["p_max_w"],
            c_pl=db_to_linear(v["c_db"]),
            sigma2=sigma2,
            beta=v["beta"],
            radius=v["radius_m"],
            num_users=int(v["num_users"]),
            num_interferers=int(v["num_interferers"]),
            bs_distance=v["bs_distance_m"],
        )

    @property
    def kappa(self) -> float:
        return self.values["kappa_db"]

    @property
    def zeta(self) -> ChannelModel:
        return parse_channel(self.values["signal_fading"])

    @property
    def chi(self) -> ChannelModel:
        return parse_channel(self.values["interference_fading"])

    def grid(self) -> RingGrid:
        return build_ring_grid(self.config, self.kappa)

    def replaced(self, **overrides) -> "RunSettings":
        vals = dict(self.values)
        vals.update(overrides)
        return RunSettings(vals)


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunSettings:
    """Load the flat JSON configuration, apply overrides, validate keys."""
    values = dict(_DEFAULTS)
    if path is not None:
        text = Path(path).read_text().strip()
        doc = json.loads(text) if text else {}
        if not isinstance(doc, dict):
            raise ValueError("configuration must be a flat JSON object")
        _apply(values, doc)
    if overrides:
        _apply(values, overrides)
    settings = RunSettings(values)
    settings.config  # construct once to validate positivity
    settings.zeta
    settings.chi
    return settings


def _apply(values: dict, updates: dict) -> None:
    for key, val in updates.items():
        if key not in values:
            raise ValueError(f"unknown configuration key {key!r}")
        if key in ("signal_fading", "interference_fading"):
            if not isinstance(val, str):
                raise ValueError(f"{key} must be a channel string")
        elif key == "bandwidth_hz":
            if val is not None and (not isinstance(val, (int, float)) or val <= 0):
                raise ValueError("bandwidth_hz must be positive")
        elif key in ("num_users", "num_interferers", "angular_bins", "num_segments"):
            if not isinstance(val, (int, float)) or int(val) != val:
                raise ValueError(f"{key} must be an integer, got {val!r}")
            if key != "num_interferers" and int(val) < 1:
                raise ValueError(f"{key} must be at least 1")
            if key == "num_interferers" and int(val) < 0:
                raise ValueError("num_interferers cannot be negative")
            val = int(val)
        else:
            if not isinstance(val, (int, float)):
                raise ValueError(f"configuration key {key!r} needs a number, got {val!r}")
            if key not in ("sigma2_dbm", "c_db") and val <= 0:
                raise ValueError(f"configuration key {key!r} must be positive")
        values[key] = val


@dataclass
class ExperimentSpec:
    """A named preset plus run controls."""

    preset: str
    config_path: str | None = None
    overrides: dict = field(default_factory=dict)
    trials: int = 100_000
    seed: int = 1
    out_dir: str = "results"
    schemes: tuple = (GREEDY, PROPORTIONAL_FAIR, ROUND_ROBIN)
    run_simulation: bool = True
    run_analytic: bool = True
    workers: int = 1
    figures: bool = True

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        if not (self.run_simulation or self.run_analytic):
            raise ValueError("nothing to do: both simulation and analytics disabled")


class _Emitter:
    """Writes CSV tables/curves and collects the manifest."""

    def __init__(self, out_dir: Path, spec: ExperimentSpec, settings: RunSettings):
        self.out = out_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.summary: dict = {}
        self.spec = spec
        self.settings = settings

    def curve(self, name: str, xs, analytic, empirical) -> Path:
        path = self.out / f"{name}.csv"
        ana = [None] * len(xs) if analytic is None else list(analytic)
        emp = [None] * len(xs) if empirical is None else list(empirical)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("x,analytic,empirical,abs_err\n")
            for x, a, e in zip(xs, ana, emp):
                err = "" if (a is None or e is None) else repr(abs(a - e))
                fh.write(
                    f"{repr(float(x))},{'' if a is None else repr(float(a))},"
                    f"{'' if e is None else repr(float(e))},{err}\n"
                )
        self.files.append(path.name)
        return path

    def table(self, name: str, rows) -> Path:
        path = self.out / f"{name}.csv"
        with path.open("w", encoding="utf-8") as fh:
            fh.write("param,scheme,value\n")
            for param, scheme, value in rows:
                fh.write(f"{param},{scheme},{repr(float(value))}\n")
        self.files.append(path.name)
        return path

    def finish(self) -> None:
        manifest = {
            "preset": self.spec.preset,
            "seed": self.spec.seed,
            "trials": self.spec.trials,
            "schemes": list(self.spec.schemes),
            "config": self.settings.values,
            "files": self.files,
            "summary": self.summary,
        }
        (self.out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
            encoding="utf-8",
        )
        if self.spec.figures:
            from .plots import render_preset

            render_preset(self.spec.preset, self.out)


def _analytic_pmf(scheme: str, grid, zeta, config, slot=None, sweep=None):
    if scheme == GREEDY:
        return greedy_pmf(grid, zeta, config)
    if scheme == PROPORTIONAL_FAIR:
        return proportional_fair_pmf(grid, zeta, config)
    if scheme == ROUND_ROBIN:
        return round_robin_pmf(grid)
    if scheme == LOCATION_ROUND_ROBIN:
        return location_rr_pmf(grid, slot)
    if scheme == GREEDY_ROUND_ROBIN:
        return sweep.slot_pmf(slot)
    raise ValueError(scheme)


def _transform_for(pmf, grid, settings, config=None, chi=None, segments=None):
    config = config or settings.config
    chi = chi or settings.chi
    angular = AngularGrid(int(settings.values["angular_bins"]))
    segments = segments or build_segment_grid(config, int(settings.values["num_segments"]))
    joint = joint_pmf_with_angle(pmf, grid, angular)
    ipmf = interferer_pmf(joint, segments, config.bs_distance)
    return ipmf, cumulative_transform(ipmf, chi, config)


def _tv(p, q) -> float:
    return float(0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum())


def run_experiment(spec: ExperimentSpec) -> Path:
    """Run one preset and write its result files; returns the output directory."""
    settings = load_config(spec.config_path, spec.overrides)
    out = Path(spec.out_dir) / spec.preset
    emit = _Emitter(out, spec, settings)
    runner = _PRESET_RUNNERS[spec.preset]
    runner(spec, settings, emit)
    emit.finish()
    return out


def _preset_fig2(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """Location PMFs of the scheduled user, analytic vs empirical."""
    config = settings.config
    grid = settings.grid()
    zeta, chi = settings.zeta, settings.chi
    report = None
    if spec.run_simulation:
        report = run_trials(
            config, grid, spec.schemes, chi, zeta, spec.trials, spec.seed,
            workers=spec.workers,
        )
    for scheme in spec.schemes:
        ana = emp = None
        if spec.run_analytic:
            ana = _analytic_pmf(scheme, grid, zeta, config).probabilities
        if report is not None:
            emp = report.location_pmf(scheme)
        emit.curve(f"location_pmf_{scheme}", grid.radii, ana, emp)
        if ana is not None and emp is not None:
            emit.summary[f"tv_{scheme}"] = _tv(ana, emp)


def _preset_fig3(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """Interferer-distance PMFs on the segment grid."""
    config = settings.config
    grid = settings.grid()
    zeta, chi = settings.zeta, settings.chi
    segments = build_segment_grid(config, int(settings.values["num_segments"]))
    report = None
    if spec.run_simulation:
        report = run_trials(
            config, grid, spec.schemes, chi, zeta, spec.trials, spec.seed,
            segments=segments, workers=spec.workers,
        )
    for scheme in spec.schemes:
        ana = emp = None
        if spec.run_analytic:
            pmf = _analytic_pmf(scheme, grid, zeta, config)
            ipmf, _ = _transform_for(pmf, grid, settings, segments=segments)
            ana = ipmf.masses
        if report is not None:
            emp = report.interferer_pmf(scheme)
        emit.curve(f"interferer_pmf_{scheme}", segments.centers, ana, emp)
        if ana is not None and emp is not None:
            emit.summary[f"tv_{scheme}"] = _tv(ana, emp)


def _preset_fig4(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """CDF of the cumulative interference for L in {1,3,6}, beta in {2.2,2.6,3.0}."""
    zeta, chi = settings.zeta, settings.chi
    cells = (1, 3, 6)
    betas = (2.2, 2.6, 3.0)
    for beta in betas:
        sub = settings.replaced(beta=beta)
        config = sub.config
        grid = sub.grid()
        report = None
        if spec.run_simulation:
            report = run_trials(
                config, grid, (GREEDY,), chi, zeta, spec.trials, spec.seed,
                workers=spec.workers,
            )
        pmf = greedy_pmf(grid, zeta, config) if spec.run_analytic else None
        for L in cells:
            cfg_l = NetworkConfig(
                p_max=config.p_max, c_pl=config.c_pl, sigma2=config.sigma2,
                beta=config.beta, radius=config.radius, num_users=config.num_users,
                num_interferers=L, bs_distance=config.bs_distance,
            )
            samples = report.ici_samples(GREEDY, num_cells=L) if report is not None else None
            if samples is not None:
                qs = np.linspace(0.005, 0.995, 120)
                xs = np.quantile(samples, qs)
                xs = np.unique(xs)
            else:
                scale = config.k_bar * config.bs_distance ** -config.beta * chi.mean
                xs = np.exp(np.linspace(np.log(scale * 0.01), np.log(scale * 30 * L), 120))
            ana = emp = None
            if pmf is not None:
                _, tr = _transform_for(pmf, grid, sub, config=cfg_l)
                ana = transform_to_cdf(tr, xs)
            if samples is not None:
                emp = empirical_cdf(samples, xs)
            emit.curve(f"ici_cdf_beta{beta}_L{L}", xs, ana, emp)
            if ana is not None and emp is not None:
                emit.summary[f"ks_beta{beta}_L{L}"] = float(np.abs(ana - emp).max())


def _capacity_all_schemes(spec, settings, report=None, grr_slots=(3, 6)):
    """Analytic (and empirical) capacities per scheme for one configuration."""
    config = settings.config
    grid = settings.grid()
    zeta, chi = settings.zeta, settings.chi
    rows = {}
    K = grid.num_rings
    for scheme in spec.schemes:
        if scheme == LOCATION_ROUND_ROBIN:
            caps = []
            for w in range(1, K + 1):
                pmf = location_rr_pmf(grid, w)
                _, tr = _transform_for(pmf, grid, settings)
                law = signal_law(pmf, grid, zeta, config)
                caps.append(float(ergodic_capacity(law, tr, config)))
            rows[scheme] = float(np.mean(caps))
        elif scheme == GREEDY_ROUND_ROBIN:
            max_w = min(max(grr_slots), K)
            sweep = GreedyRoundRobinSweep(grid, zeta, config, max_slot=max_w)
            caps = []
            for w in range(1, max_w + 1):
                pmf = sweep.slot_pmf(w)
                _, tr = _transform_for(pmf, grid, settings)
                law = signal_law(pmf, grid, zeta, config, sweep=sweep)
                caps.append(float(ergodic_capacity(law, tr, config)))
            for W in grr_slots:
                W = min(W, max_w)
                rows[f"{scheme}_w{W}"] = float(np.mean(caps[:W]))
        else:
            pmf = _analytic_pmf(scheme, grid, zeta, config)
            _, tr = _transform_for(pmf, grid, settings)
            law = signal_law(pmf, grid, zeta, config)
            rows[scheme] = float(ergodic_capacity(law, tr, config))
    emp = {}
    if report is not None:
        for scheme in spec.schemes:
            if scheme == GREEDY_ROUND_ROBIN:
                for W in grr_slots:
                    emp[f"{scheme}_w{W}"] = report.capacity(scheme, slots=min(W, K))
            else:
                emp[scheme] = report.capacity(scheme)
    return rows, emp


def _preset_fig5(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """Ergodic capacity versus the number of users per cell."""
    users = spec.overrides.get("_user_sweep", (10, 50, 100))
    ana_rows, emp_rows = [], []
    for U in users:
        sub = settings.replaced(num_users=int(U))
        report = None
        if spec.run_simulation:
            grid = sub.grid()
            report = run_trials(
                sub.config, grid, spec.schemes, sub.chi, sub.zeta, spec.trials,
                spec.seed, grr_slots=min(6, grid.num_rings), workers=spec.workers,
            )
        ana, emp = _capacity_all_schemes(spec, sub, report) if spec.run_analytic else ({}, {})
        if not spec.run_analytic and report is not None:
            _, emp = {}, _capacity_all_schemes(spec, sub, report)[1]
        for scheme, val in ana.items():
            ana_rows.append((U, scheme, val))
        for scheme, val in emp.items():
            emp_rows.append((U, scheme, val))
            if scheme in ana:
                emit.summary[f"relerr_U{U}_{scheme}"] = abs(ana[scheme] - val) / val
    if ana_rows:
        emit.table("capacity_analytic", ana_rows)
    if emp_rows:
        emit.table("capacity_empirical", emp_rows)


def _preset_fig6(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """Outage probability over a threshold sweep plus the fairness table."""
    q_db = np.linspace(-10.0, 10.0, 5)
    users = spec.overrides.get("_user_sweep", (50, 100))
    ana_rows, emp_rows = [], []
    for U in users:
        sub = settings.replaced(num_users=int(U))
        config = sub.config
        grid = sub.grid()
        report = None
        if spec.run_simulation:
            report = run_trials(
                config, grid, spec.schemes, sub.chi, sub.zeta, spec.trials,
                spec.seed, workers=spec.workers,
            )
        for scheme in spec.schemes:
            if scheme in (LOCATION_ROUND_ROBIN, GREEDY_ROUND_ROBIN):
                continue  # slot-based outage is served by the fig5/fairness paths
            law = tr = None
            if spec.run_analytic:
                pmf = _analytic_pmf(scheme, grid, sub.zeta, config)
                _, tr = _transform_for(pmf, grid, sub)
                law = signal_law(pmf, grid, sub.zeta, config)
            for qd in q_db:
                tag = f"U{U}_q{qd:+.1f}dB"
                if law is not None:
                    po = outage_probability(OutageProblem.from_db(qd), law, tr)
                    ana_rows.append((tag, scheme, po))
                if report is not None:
                    pe = report.outage_rate(scheme, 10 ** (qd / 10.0))
                    emp_rows.append((tag, scheme, pe))
                    if law is not None:
                        emit.summary[f"outage_absdiff_{tag}_{scheme}"] = abs(po - pe)
    if ana_rows:
        emit.table("outage_analytic", ana_rows)
    if emp_rows:
        emit.table("outage_empirical", emp_rows)
    if spec.run_analytic:
        _fairness_table(spec, settings, emit)


def _fairness_table(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    config = settings.config
    grid = settings.grid()
    zeta = settings.zeta
    K = grid.num_rings
    rows = []
    for scheme in spec.schemes:
        if scheme == LOCATION_ROUND_ROBIN:
            vals = []
            for w in range(1, K + 1):
                pmf = location_rr_pmf(grid, w)
                vals.append(average_fairness(pmf, grid, u_total=grid.occupancy[w - 1]).value)
            rows.append(("fairness", scheme, float(np.mean(vals))))
        elif scheme == GREEDY_ROUND_ROBIN:
            for W in (3, 6):
                W_eff = min(W, K)
                sweep = GreedyRoundRobinSweep(grid, zeta, config, max_slot=W_eff)
                vals = []
                for w in range(1, W_eff + 1):
                    pmf = sweep.slot_pmf(w)
                    pop = sweep.slot_fairness_population(w)
                    vals.append(average_fairness(pmf, grid, u_total=pop).value)
                rows.append(("fairness", f"{scheme}_w{W}", float(np.mean(vals))))
        else:
            pmf = _analytic_pmf(scheme, grid, zeta, config)
            rows.append(("fairness", scheme, average_fairness(pmf, grid).value))
    emit.table("fairness_analytic", rows)
    for _, scheme, val in rows:
        emit.summary[f"fairness_{scheme}"] = val


def _preset_fig7(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """Capacity versus the interference channel's average power and shape."""
    variants = (
        ("omega1_ms1.5", "gamma(1.5,0.6666666666666666)"),
        ("omega3_ms1.5", "gamma(1.5,2.0)"),
        ("omega3_ms3.0", "gamma(3.0,1.0)"),
    )
    ana_rows, emp_rows = [], []
    for tag, chi_spec in variants:
        sub = settings.replaced(interference_fading=chi_spec)
        report = None
        if spec.run_simulation:
            grid = sub.grid()
            report = run_trials(
                sub.config, grid, spec.schemes, sub.chi, sub.zeta, spec.trials,
                spec.seed, grr_slots=min(6, grid.num_rings), workers=spec.workers,
            )
        ana, emp = _capacity_all_schemes(spec, sub, report) if spec.run_analytic else ({}, {})
        for scheme, val in ana.items():
            ana_rows.append((tag, scheme, val))
        for scheme, val in emp.items():
            emp_rows.append((tag, scheme, val))
    if ana_rows:
        emit.table("capacity_vs_interference_analytic", ana_rows)
    if emp_rows:
        emit.table("capacity_vs_interference_empirical", emp_rows)


def _preset_custom(spec: ExperimentSpec, settings: RunSettings, emit: _Emitter):
    """One configuration end to end: PMFs, capacity and outage at q = 0 dB."""
    config = settings.config
    grid = settings.grid()
    zeta, chi = settings.zeta, settings.chi
    report = None
    if spec.run_simulation:
        report = run_trials(
            config, grid, spec.schemes, chi, zeta, spec.trials, spec.seed,
            workers=spec.workers,
        )
    rows = []
    for scheme in spec.schemes:
        if scheme in (LOCATION_ROUND_ROBIN, GREEDY_ROUND_ROBIN):
            continue
        ana = emp = None
        if spec.run_analytic:
            pmf = _analytic_pmf(scheme, grid, zeta, config)
            ana = pmf.probabilities
            _, tr = _transform_for(pmf, grid, settings)
            law = signal_law(pmf, grid, zeta, config)
            rows.append(("capacity", scheme, float(ergodic_capacity(law, tr, config))))
            if config.num_interferers > 0:
                rows.append(
                    ("outage_q0dB", scheme,
                     outage_probability(OutageProblem(1.0), law, tr))
                )
        if report is not None:
            emp = report.location_pmf(scheme)
            rows.append(("capacity_empirical", scheme, report.capacity(scheme)))
        emit.curve(f"location_pmf_{scheme}", grid.radii, ana, emp)
    if rows:
        emit.table("metrics", rows)


_PRESET_RUNNERS = {
    "fig2": _preset_fig2,
    "fig3": _preset_fig3,
    "fig4": _preset_fig4,
    "fig5": _preset_fig5,
    "fig6": _preset_fig6,
    "fig7": _preset_fig7,
    "custom": _preset_custom,
}
