"""Configuration-driven runs: engines, inter-engine comparisons, CSV output.

Three engines produce the two-qubit Bloch vector on a common time grid:

* ``analytic``: closed-form Bloch vector and concurrence;
* ``quasi_hamiltonian``: ``T(t) n(0)`` with the exact noise-averaged transfer matrix;
* ``monte_carlo``: trajectory average.

Every pair of engines is compared on the quantities both describe exactly.
The closed forms keep the bare precession phase, so when any qubit sits at
``theta > 0`` the analytic engine is compared only on rotation-invariant
quantities (concurrence, ``|n|``, lambda spectrum).
"""
from __future__ import annotations

import configparser
import csv
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .bloch import from_bloch, purity_norm
from .entanglement import (
    Family,
    InitialState,
    Model,
    analytic_bloch_two_one,
    analytic_bloch_two_two,
    concurrence_analytic,
    concurrence_wootters,
    esd_times,
)
from .montecarlo import DEFAULT_CHUNK, DEFAULT_RUNS, ensemble_average
from .noise import QubitSpec, RtnSource, two_qubit_transfer

__all__ = [
    "ENGINES",
    "ConfigError",
    "ExperimentConfig",
    "EngineResult",
    "Comparison",
    "ExperimentResult",
    "PRESETS",
    "preset",
    "load_config",
    "parse_config",
    "run_engine",
    "compare",
    "run_experiment",
    "write_engine_csv",
    "write_comparison_csv",
    "monte_carlo_tolerance",
    "esd_summary",
    "ScanConfig",
    "parse_scan_config",
    "run_phase_scan",
    "PRESET_INFO",
]

ENGINES = ("analytic", "quasi_hamiltonian", "monte_carlo")
SMOKE_RUNS = 4_000
SMOKE_TOLERANCE = 0.07

# Error budgets per engine, added pairwise to form comparison tolerances.
EXACT_TOL = 1e-9
# Closed forms at theta > 0 drop the noise-induced frequency shift and the
# small anisotropy of the transverse block.
ANALYTIC_TOL = {"exact": 0.02, "closed_form": 0.05}
PHI_TOL = 1e-9

COLUMNS = (
    ["t"]
    + [f"n{i}" for i in range(1, 16)]
    + ["n_norm", "lambda1", "lambda2", "lambda3", "lambda4", "concurrence", "xi", "zeta_ab"]
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: Model
    qubit_a: QubitSpec
    qubit_b: QubitSpec
    state: InitialState
    t_max: float
    n_points: int
    engines: tuple = ("analytic", "quasi_hamiltonian")
    mc_runs: int = DEFAULT_RUNS
    seed: int = 12345
    chunk_size: int = DEFAULT_CHUNK
    zeta_source: str = "exact"
    out_dir: str = "results"

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)

    @property
    def pure_dephasing(self) -> bool:
        return all(q.source is None or q.source.theta == 0 for q in (self.qubit_a, self.qubit_b))

    def max_frequency(self) -> float:
        """Fastest oscillation in the Bloch components: precession or coupling."""
        w = self.qubit_a.b0 + self.qubit_b.b0
        for q in (self.qubit_a, self.qubit_b):
            if q.source is not None:
                w = max(w, q.source.longitudinal)
        return w

    def validate(self) -> "ExperimentConfig":
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        if self.n_points < 2:
            raise ConfigError("n_points must be at least 2")
        bad = set(self.engines) - set(ENGINES)
        if bad or not self.engines:
            raise ConfigError(f"engines must be a non-empty subset of {ENGINES}, got {self.engines}")
        if self.mc_runs < 1:
            raise ConfigError("monte carlo runs must be >= 1")
        if self.zeta_source not in ANALYTIC_TOL:
            raise ConfigError(f"zeta_source must be one of {sorted(ANALYTIC_TOL)}")
        if self.qubit_a.source is None:
            raise ConfigError("qubit A must carry a noise source")
        if self.model is Model.TWO_ONE and self.qubit_b.source is not None:
            raise ConfigError("the two-one model has a noise-free qubit B")
        if self.model is Model.TWO_TWO and self.qubit_b.source is None:
            raise ConfigError("the two-two model needs a noise source on qubit B")
        dt = self.t_max / (self.n_points - 1)
        limit = np.pi / self.max_frequency()
        if dt >= limit:
            raise ConfigError(
                f"grid too coarse: spacing {dt:.4g} must stay below pi/w = {limit:.4g} "
                f"for w = {self.max_frequency():.4g}"
            )
        return self

    def specs(self):
        return self.qubit_a, self.qubit_b


@dataclass
class EngineResult:
    engine: str
    times: np.ndarray
    bloch: np.ndarray  # (M, 16)
    n_norm: np.ndarray
    lambdas: np.ndarray  # (M, 4)
    concurrence: np.ndarray
    xi: np.ndarray
    zeta_ab: np.ndarray
    stderr: Optional[np.ndarray] = None

    def table(self) -> np.ndarray:
        return np.column_stack(
            [self.times, self.bloch[:, 1:], self.n_norm, self.lambdas, self.concurrence,
             self.xi, self.zeta_ab]
        )


@dataclass
class Comparison:
    first: str
    second: str
    quantity: str
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    engines: Dict[str, EngineResult]
    comparisons: List[Comparison]
    esd: list = field(default_factory=list)
    files: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)


def monte_carlo_tolerance(runs: int, tier: str = "full") -> float:
    """4 sigma bound ``4/sqrt(N)`` (0.02 at 40,000 runs); the smoke tier is fixed."""
    if tier == "smoke":
        return SMOKE_TOLERANCE
    if tier != "full":
        raise ConfigError(f"unknown tolerance tier {tier!r}")
    return 4 / np.sqrt(runs)


def _numeric_observables(engine, state, t, bloch, stderr=None):
    c, spec = concurrence_wootters(from_bloch(bloch), tol=1e-8)
    w = state.weight
    with np.errstate(divide="ignore", invalid="ignore"):
        zeta = np.hypot(bloch[:, 5], bloch[:, 6]) / (2 * w) if w > 0 else np.full_like(t, np.nan)
        xi = (spec.lambdas[:, 2] + spec.lambdas[:, 3]) / (2 * w) if w > 0 else np.full_like(t, np.nan)
    return EngineResult(engine, t, bloch, purity_norm(bloch), spec.lambdas, c, xi, zeta, stderr)


def run_engine(cfg: ExperimentConfig, engine: str, workers: Optional[int] = None) -> EngineResult:
    t = cfg.grid
    if engine == "analytic":
        if cfg.model is Model.TWO_ONE:
            n = analytic_bloch_two_one(cfg.state, cfg.qubit_a, cfg.qubit_b.b0, t, cfg.zeta_source)
        else:
            n = analytic_bloch_two_two(cfg.state, cfg.qubit_a, cfg.qubit_b, t, cfg.zeta_source)
        curve = concurrence_analytic(cfg.state, cfg.model, cfg.qubit_a, cfg.qubit_b, t, cfg.zeta_source)
        return EngineResult(engine, t, n, curve.n_norm, curve.lambdas, curve.c, curve.xi,
                            np.abs(curve.zeta_ab))
    if engine == "quasi_hamiltonian":
        n = two_qubit_transfer(cfg.qubit_a, cfg.qubit_b, t) @ cfg.state.bloch()
        return _numeric_observables(engine, cfg.state, t, n)
    if engine == "monte_carlo":
        res = ensemble_average(cfg.specs(), cfg.state, t, n_runs=cfg.mc_runs, seed=cfg.seed,
                               chunk_size=cfg.chunk_size, workers=workers)
        stderr = np.column_stack([np.zeros(len(t)), res.stderr])
        return _numeric_observables(engine, cfg.state, t, res.bloch, stderr)
    raise ConfigError(f"unknown engine {engine!r}")


def _budget(engine, cfg, mc_tol):
    if engine == "monte_carlo":
        return mc_tol
    if engine == "analytic" and not cfg.pure_dephasing:
        return ANALYTIC_TOL[cfg.zeta_source]
    return EXACT_TOL


def compare(cfg: ExperimentConfig, results: Dict[str, EngineResult], mc_tol: float) -> List[Comparison]:
    out = []
    names = [e for e in ENGINES if e in results]
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = results[a], results[b]
            tol = _budget(a, cfg, mc_tol) + _budget(b, cfg, mc_tol)
            invariant_only = "analytic" in (a, b) and not cfg.pure_dephasing
            if not invariant_only:
                dev = np.abs(ra.bloch[:, 1:] - rb.bloch[:, 1:]).max()
                out.append(Comparison(a, b, "bloch", float(dev), tol))
            else:
                out.append(Comparison(a, b, "n_norm", float(np.abs(ra.n_norm - rb.n_norm).max()), tol))
                if "monte_carlo" not in (a, b):
                    out.append(Comparison(a, b, "lambdas",
                                          float(np.abs(ra.lambdas - rb.lambdas).max()), tol))
            out.append(Comparison(a, b, "concurrence",
                                  float(np.abs(ra.concurrence - rb.concurrence).max()), tol))
    return out


def _phi_check(cfg: ExperimentConfig) -> List[Comparison]:
    """Rotation-invariant curves must not depend on the coupling azimuth.

    Holds exactly when a single qubit is noisy: its azimuth can be moved onto
    the Bell-state phase and from there onto the noise-free partner.
    """
    src = cfg.qubit_a.source
    if cfg.model is not Model.TWO_ONE or src.theta == 0:
        return []
    other = replace(src, phi=0.0 if src.phi != 0 else np.pi / 2)
    alt = replace(cfg, qubit_a=replace(cfg.qubit_a, source=other))
    r1 = run_engine(cfg, "quasi_hamiltonian")
    r2 = run_engine(alt, "quasi_hamiltonian")
    label = f"quasi_hamiltonian[phi={other.phi:.6g}]"
    return [
        Comparison("quasi_hamiltonian", label, "concurrence",
                   float(np.abs(r1.concurrence - r2.concurrence).max()), PHI_TOL),
        Comparison("quasi_hamiltonian", label, "n_norm",
                   float(np.abs(r1.n_norm - r2.n_norm).max()), PHI_TOL),
    ]


def esd_grid(cfg: ExperimentConfig) -> np.ndarray:
    """Grid fine enough for death/revival detection on ``[0, t_max]``."""
    curve = concurrence_analytic(cfg.state, cfg.model, cfg.qubit_a, cfg.qubit_b, np.zeros(1))
    w = curve.frequency
    n = cfg.n_points
    if w > 0:
        n = max(n, int(np.ceil(cfg.t_max * 12 * w / np.pi)) + 1)
    return np.linspace(0.0, cfg.t_max, n)


def esd_summary(cfg: ExperimentConfig):
    curve = concurrence_analytic(cfg.state, cfg.model, cfg.qubit_a, cfg.qubit_b, esd_grid(cfg),
                                 cfg.zeta_source)
    return esd_times(curve)


def _fmt(x) -> str:
    return f"{x:.12g}"


def write_engine_csv(res: EngineResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in res.table():
            w.writerow([_fmt(x) for x in row])


def write_comparison_csv(comps: Sequence[Comparison], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["engine_a", "engine_b", "quantity", "max_abs_deviation", "tolerance", "passed"])
        for c in comps:
            w.writerow([c.first, c.second, c.quantity, _fmt(c.max_deviation), _fmt(c.tolerance),
                        int(c.passed)])


def write_esd_csv(intervals, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["death", "revival", "point"])
        for iv in intervals:
            w.writerow([_fmt(iv.death), "" if iv.revival is None else _fmt(iv.revival), int(iv.point)])


def run_experiment(cfg: ExperimentConfig, tier: str = "full", write: bool = True,
                   workers: Optional[int] = None) -> ExperimentResult:
    """Run the configured engines, compare them and (optionally) write CSV files."""
    cfg.validate()
    mc_tol = monte_carlo_tolerance(cfg.mc_runs, tier)
    results = {e: run_engine(cfg, e, workers) for e in ENGINES if e in cfg.engines}
    comps = compare(cfg, results, mc_tol)
    if "quasi_hamiltonian" in results:
        comps += _phi_check(cfg)
    esd = esd_summary(cfg) if "analytic" in results else []
    out = ExperimentResult(cfg, results, comps, esd)
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        for name, res in results.items():
            path = os.path.join(cfg.out_dir, f"{cfg.name}_{name}.csv")
            write_engine_csv(res, path)
            out.files.append(path)
        path = os.path.join(cfg.out_dir, f"{cfg.name}_comparison.csv")
        write_comparison_csv(comps, path)
        out.files.append(path)
        if "analytic" in results:
            path = os.path.join(cfg.out_dir, f"{cfg.name}_esd.csv")
            write_esd_csv(esd, path)
            out.files.append(path)
    return out


# ---------------------------------------------------------------- presets

STRONG, WEAK = 0.005, 0.5


def _panel(name, gamma, theta, r=1.0, model=Model.TWO_ONE, t_max=600.0):
    phi = np.pi / 2 if theta > 0 else 0.0
    src = RtnSource(0.1, theta, gamma, phi)
    qb = QubitSpec(1.0, src if model is Model.TWO_TWO else None)
    return ExperimentConfig(
        name=name,
        model=model,
        qubit_a=QubitSpec(1.0, src),
        qubit_b=qb,
        state=InitialState(Family.PHI, r=r),
        t_max=t_max,
        n_points=int(t_max) + 1,
        engines=ENGINES,
    )


def _pair(tag, theta, r=1.0, model=Model.TWO_ONE, t_max=600.0):
    return [
        _panel(f"{tag}_strong", STRONG, theta, r, model, t_max),
        _panel(f"{tag}_weak", WEAK, theta, r, model, t_max),
    ]


PRESET_INFO = {
    "fig1": "Bell state, pure dephasing point, noise on A; gamma = 0.005 and 0.5",
    "fig1a": "fig1 slow-noise panel (gamma = 0.005): lambda spectrum",
    "fig1b": "fig1 slow-noise panel (gamma = 0.005): |n| and concurrence",
    "fig1c": "fig1 fast-noise panel (gamma = 0.5): lambda spectrum",
    "fig1d": "fig1 fast-noise panel (gamma = 0.5): |n| and concurrence",
    "fig2": "Bell state, theta = pi/3, phi = pi/2, noise on A",
    "fig3": "Werner state r = 0.5, pure dephasing point, noise on A",
    "fig4": "Werner state r = 0.5, theta = pi/3, phi = pi/2, noise on A",
    "fig5": "Bell state, pure dephasing point, independent noise on both qubits",
}


def _presets():
    third = np.pi / 3
    return {
        "fig1": _pair("fig1", 0.0),
        "fig1a": [_panel("fig1a", STRONG, 0.0)],
        "fig1b": [_panel("fig1b", STRONG, 0.0)],
        "fig1c": [_panel("fig1c", WEAK, 0.0)],
        "fig1d": [_panel("fig1d", WEAK, 0.0)],
        # the slow-noise death at theta > 0 comes late; extend the horizon
        "fig2": _pair("fig2", third, t_max=1000.0),
        "fig3": _pair("fig3", 0.0, r=0.5),
        "fig4": _pair("fig4", third, r=0.5, t_max=1000.0),
        "fig5": _pair("fig5", 0.0, model=Model.TWO_TWO),
    }


PRESETS = _presets()


def preset(name: str) -> List[ExperimentConfig]:
    try:
        return list(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# ---------------------------------------------------------------- config files

def _get(sec, key, conv=float, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key '{key}' in section [{sec.name}]")
        return default
    try:
        return conv(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from None


def _qubit(cp, name, required):
    if name not in cp:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return QubitSpec(1.0)
    sec = cp[name]
    b0 = _get(sec, "b0", default=1.0)
    g = _get(sec, "g", default=0.0)
    try:
        if g == 0 and "gamma" not in sec:
            return QubitSpec(b0)
        src = RtnSource(g, _get(sec, "theta", default=0.0), _get(sec, "gamma"),
                        _get(sec, "phi", default=0.0))
        return QubitSpec(b0, src)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{name}] {exc}") from None


def _state(cp):
    sec = cp["state"] if "state" in cp else None
    if sec is None:
        return InitialState(Family.PHI)
    try:
        fam = Family(sec.get("family", "Phi"))
        return InitialState.from_angles(fam, _get(sec, "alpha", default=1 / np.sqrt(2)),
                                        _get(sec, "delta", default=0.0),
                                        _get(sec, "r", default=1.0))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[state] {exc}") from None


def parse_engines(text: str) -> tuple:
    names = tuple(e.strip() for e in text.replace(";", ",").split(",") if e.strip())
    bad = [e for e in names if e not in ENGINES]
    if bad or not names:
        raise ConfigError(f"unknown engines {bad}; choose from {ENGINES}")
    return names


def parse_config(text: str, default_name: str = "experiment") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    exp = cp["experiment"] if "experiment" in cp else {}
    try:
        model = Model(exp.get("model", "TwoOne"))
    except ValueError:
        raise ConfigError("model must be TwoOne or TwoTwo") from None
    if "grid" not in cp:
        raise ConfigError("missing section [grid]")
    grid = cp["grid"]
    mc = cp["monte_carlo"] if "monte_carlo" in cp else None
    out = cp["output"] if "output" in cp else None
    cfg = ExperimentConfig(
        name=exp.get("name", default_name),
        model=model,
        qubit_a=_qubit(cp, "qubit_a", True),
        qubit_b=_qubit(cp, "qubit_b", model is Model.TWO_TWO),
        state=_state(cp),
        t_max=_get(grid, "t_max"),
        n_points=_get(grid, "n_points", int),
        engines=parse_engines(exp.get("engines", "analytic, quasi_hamiltonian")),
        mc_runs=_get(mc, "runs", int, DEFAULT_RUNS) if mc is not None else DEFAULT_RUNS,
        seed=_get(mc, "seed", int, 12345) if mc is not None else 12345,
        chunk_size=_get(mc, "chunk_size", int, DEFAULT_CHUNK) if mc is not None else DEFAULT_CHUNK,
        zeta_source=exp.get("zeta_source", "exact"),
        out_dir=out.get("dir", "results") if out is not None else "results",
    )
    return cfg.validate()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, os.path.splitext(os.path.basename(path))[0])


@dataclass(frozen=True)
class ScanConfig:
    g: float = 0.1
    b0: float = 1.0
    phi: float = 0.0
    theta_min: float = 0.0
    theta_max: float = 1.4
    n_theta: int = 20
    ratio_min: float = 0.2
    ratio_max: float = 20.0
    n_ratio: int = 20
    state: InitialState = field(default_factory=lambda: InitialState(Family.PHI, r=0.5))
    out_dir: str = "results"
    name: str = "phase_scan"

    def thetas(self):
        return np.linspace(self.theta_min, self.theta_max, self.n_theta)

    def ratios(self):
        return np.geomspace(self.ratio_min, self.ratio_max, self.n_ratio)


def parse_scan_config(text: str, default_name: str = "phase_scan") -> ScanConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if "scan" not in cp:
        raise ConfigError("missing section [scan]")
    sec = cp["scan"]
    state = _state(cp) if "state" in cp else InitialState(Family.PHI, r=0.5)
    out = cp["output"] if "output" in cp else None
    cfg = ScanConfig(
        g=_get(sec, "g", default=0.1),
        b0=_get(sec, "b0", default=1.0),
        phi=_get(sec, "phi", default=0.0),
        theta_min=_get(sec, "theta_min", default=0.0),
        theta_max=_get(sec, "theta_max", default=1.4),
        n_theta=_get(sec, "n_theta", int, 20),
        ratio_min=_get(sec, "ratio_min", default=0.2),
        ratio_max=_get(sec, "ratio_max", default=20.0),
        n_ratio=_get(sec, "n_ratio", int, 20),
        state=state,
        out_dir=out.get("dir", "results") if out is not None else "results",
        name=sec.get("name", default_name),
    )
    if not 0 <= cfg.theta_min <= cfg.theta_max < np.pi / 2:
        raise ConfigError("theta range must lie in [0, pi/2)")
    if not 0 < cfg.ratio_min <= cfg.ratio_max:
        raise ConfigError("ratio range must be positive")
    if cfg.g <= 0 or cfg.n_theta < 1 or cfg.n_ratio < 1:
        raise ConfigError("g and grid sizes must be positive")
    return cfg


def run_phase_scan(cfg: ScanConfig, write: bool = True):
    from .phase import phase_scan, write_scan_csv

    rows = phase_scan(cfg.thetas(), cfg.ratios(), g=cfg.g, b0=cfg.b0, state=cfg.state, phi=cfg.phi)
    path = None
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, f"{cfg.name}.csv")
        write_scan_csv(rows, path)
    return rows, path
