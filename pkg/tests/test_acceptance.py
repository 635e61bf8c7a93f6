"""Exit criteria, each checked at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (collected again in the
pytest terminal summary). Run just this module with

    pytest -v -m acceptance tests/test_acceptance.py

or as a script: ``python3 tests/test_acceptance.py``.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from rtnsim import single_qubit as sq
from rtnsim.bloch import from_bloch, purity_norm
from rtnsim.entanglement import (
    Family,
    InitialState,
    Model,
    analytic_bloch,
    analytic_bloch_two_one,
    analytic_bloch_two_two,
    concurrence_analytic,
    concurrence_wootters,
    dephasing_factors,
    purity_curve,
    relaxation_functions,
    xi_limit,
)
from rtnsim.experiments import PRESETS, esd_summary
from rtnsim.montecarlo import ensemble_average
from rtnsim.noise import QubitSpec, RtnSource, coherence, single_transfer, two_qubit_transfer
from rtnsim.phase import phase_scan

try:
    from conftest import record
except ImportError:  # imported as tests.test_acceptance
    from tests.conftest import record

pytestmark = pytest.mark.acceptance


# ---------------------------------------------------------------- 1

def test_c1_exact_pure_dephasing_forms():
    start = time.perf_counter()
    t = np.linspace(0, 300, 3001)
    worst = 0.0
    for g, gamma in [(0.1, 0.005), (0.1, 0.5), (0.05, 0.05 + 1e-7), (0.05, 0.05 + 1e-11)]:
        spec = QubitSpec(1.0, RtnSource(g, 0.0, gamma))
        oracle = coherence(spec, t)
        closed = sq.zeta_pure_dephasing_exact(g, gamma, t)
        worst = max(worst, np.abs(closed - oracle.real).max(), np.abs(oracle.imag).max())
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 5
    record(1, ok, f"max |zeta_closed - zeta_qh| = {worst:.2e} (tol 1e-10), {elapsed:.2f}s (< 5s)")
    assert ok


# ---------------------------------------------------------------- 2

def _fitted_gamma1(spec, g1):
    t = np.linspace(0.2 / g1, 2.0 / g1, 400)
    decay = single_transfer(spec, t)[:, 3, 3]
    slope = np.polyfit(t, np.log(decay), 1)[0]
    return -slope


def _perturbative_sets(regime, n=20, seed=2024):
    rng = np.random.default_rng(seed + (0 if regime is sq.Regime.WEAK else 1))
    out = []
    for _ in range(n):
        g = rng.uniform(0.02, 0.1)
        theta = rng.uniform(0.1, 1.2)
        ratio = rng.uniform(5, 20)
        gc = g * np.cos(theta)
        gamma = gc * ratio if regime is sq.Regime.WEAK else gc / ratio
        out.append(RtnSource(g, theta, gamma, rng.uniform(0, 2 * np.pi)))
    return out


def test_c2_perturbative_forms():
    start = time.perf_counter()
    worst = {}
    for regime in (sq.Regime.WEAK, sq.Regime.STRONG):
        zmax, gmax = 0.0, 0.0
        for src in _perturbative_sets(regime):
            spec = QubitSpec(1.0, src)
            assert sq.regime(src) is regime
            rate = sq.gamma2(src, 1.0) if regime is sq.Regime.WEAK else src.gamma
            t = np.linspace(0, 6 / rate, 1500)
            oracle = np.abs(coherence(spec, t))
            closed = np.abs(sq.zeta_closed_form(src, 1.0, t))
            zmax = max(zmax, np.abs(closed - oracle).max())
            g1 = sq.gamma1(src, 1.0)
            gmax = max(gmax, abs(_fitted_gamma1(spec, g1) / g1 - 1))
        worst[regime] = (zmax, gmax)
    elapsed = time.perf_counter() - start
    ok = all(z <= 0.02 and g <= 0.05 for z, g in worst.values()) and elapsed < 10
    detail = "; ".join(f"{r.value}: max zeta err {z:.4f} (tol 0.02), max Gamma1 rel err {g:.2%} (tol 5%)"
                       for r, (z, g) in worst.items())
    record(2, ok, f"{detail}; {elapsed:.1f}s (< 10s)")
    assert ok


# ---------------------------------------------------------------- 3

def _random_case(rng):
    model = Model.TWO_ONE if rng.random() < 0.5 else Model.TWO_TWO
    family = Family.PHI if rng.random() < 0.5 else Family.PSI
    state = InitialState.from_angles(family, rng.uniform(0.05, 0.95), rng.uniform(0, 2 * np.pi),
                                     rng.uniform(0.05, 1.0))

    def qubit():
        theta = 0.0 if rng.random() < 0.4 else rng.uniform(0.05, 1.5)
        src = RtnSource(rng.uniform(0.02, 0.2), theta, 10 ** rng.uniform(-3, 0), rng.uniform(0, 2 * np.pi))
        return QubitSpec(rng.uniform(0.5, 2.0), src)

    spec_a = qubit()
    spec_b = qubit() if model is Model.TWO_TWO else QubitSpec(rng.uniform(0.5, 2.0))
    return model, state, spec_a, spec_b, rng.uniform(0, 300)


def test_c3_closed_form_concurrence_equals_wootters():
    rng = np.random.default_rng(77)
    worst_c, worst_l = 0.0, 0.0
    for _ in range(100):
        model, state, sa, sb, t = _random_case(rng)
        curve = concurrence_analytic(state, model, sa, sb, [t])
        if model is Model.TWO_ONE:
            n = analytic_bloch_two_one(state, sa, sb.b0, [t])
        else:
            n = analytic_bloch_two_two(state, sa, sb, [t])
        c, spec = concurrence_wootters(from_bloch(n))
        worst_c = max(worst_c, np.abs(curve.c - c).max())
        worst_l = max(worst_l, np.abs(curve.lambdas - spec.lambdas).max())
    ok = worst_c <= 1e-10
    record(3, ok, f"100 samples: max |C_closed - C_wootters| = {worst_c:.2e} (tol 1e-10); "
                  f"max lambda dev {worst_l:.2e}")
    assert ok


# ---------------------------------------------------------------- 4

FIGURE_PRESETS = ["fig1a", "fig1b", "fig1c", "fig1d", "fig2", "fig3", "fig4", "fig5"]


def _physics_key(cfg):
    return (cfg.model, cfg.qubit_a, cfg.qubit_b, cfg.state, cfg.t_max, cfg.n_points)


def _mc_deviation(cfg, runs, cache):
    key = (_physics_key(cfg), runs)
    if key not in cache:
        t = cfg.grid
        exact = two_qubit_transfer(cfg.qubit_a, cfg.qubit_b, t) @ cfg.state.bloch()
        res = ensemble_average(cfg.specs(), cfg.state, t, n_runs=runs, seed=cfg.seed)
        dev = np.abs(res.bloch[:, 1:] - exact[:, 1:]).max()
        if cfg.pure_dephasing:
            # closed forms coincide with the exact average here; check them directly too
            closed = (analytic_bloch_two_one(cfg.state, cfg.qubit_a, cfg.qubit_b.b0, t)
                      if cfg.model is Model.TWO_ONE
                      else analytic_bloch_two_two(cfg.state, cfg.qubit_a, cfg.qubit_b, t))
            dev = max(dev, np.abs(res.bloch[:, 1:] - closed[:, 1:]).max())
        cache[key] = dev
    return cache[key]


@pytest.mark.parametrize("tier,runs,tol", [("smoke", 4_000, 0.07), ("full", 40_000, 0.02)])
def test_c4_monte_carlo_reproduces_average(tier, runs, tol):
    cache = {}
    lines, ok = [], True
    start = time.perf_counter()
    for name in FIGURE_PRESETS:
        t0 = time.perf_counter()
        devs = [_mc_deviation(cfg, runs, cache) for cfg in PRESETS[name]]
        worst = max(devs)
        ok &= worst <= tol
        lines.append(f"{name} {worst:.4f} ({time.perf_counter() - t0:.0f}s)")
    record(4, ok, f"[{tier}, {runs} runs, tol {tol}] max |n_mc - n_exact| per preset: "
                  + ", ".join(lines) + f"; total {time.perf_counter() - start:.0f}s")
    assert ok


# ---------------------------------------------------------------- 5

def test_c5_sudden_death_phenomenology():
    checks = {}
    strong, weak = PRESETS["fig1"]
    ev = esd_summary(strong)
    zeros = sq.zeta_zeros(strong.qubit_a.source, 200)
    expected = int(np.sum(zeros < strong.t_max))
    checks["fig1 slow: point deaths, every one revives"] = (
        len(ev) == expected and all(e.point and not e.terminal for e in ev)
    )
    checks["fig1 slow: t1 = 16.23 +- 0.01"] = bool(ev) and abs(ev[0].death - 16.23) <= 0.01
    checks["fig1 fast: no ESD"] = esd_summary(weak) == []
    for cfg in PRESETS["fig3"]:
        ev = esd_summary(cfg)
        checks[f"{cfg.name}: permanent ESD"] = bool(ev) and ev[-1].terminal
    for name in ("fig2", "fig4"):
        strong, weak = PRESETS[name]
        ev = esd_summary(strong)
        checks[f"{name} slow: finite revivals then terminal death"] = (
            len(ev) >= 2 and ev[-1].terminal and not any(e.terminal for e in ev[:-1])
        )
        ev = esd_summary(weak)
        checks[f"{name} fast: single terminal death"] = len(ev) == 1 and ev[0].terminal
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    t1 = esd_summary(PRESETS["fig1"][0])[0].death
    record(5, ok, f"{len(checks) - len(failed)}/{len(checks)} checks; fig1 t1 = {t1:.4f}"
                  + (f"; failed: {failed}" if failed else ""))
    assert ok


# ---------------------------------------------------------------- 6

def test_c6_purity_anchors():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        fam = Family.PHI if rng.random() < 0.5 else Family.PSI
        a, d, r = rng.uniform(0, 1), rng.uniform(0, 2 * np.pi), rng.uniform(0, 1)
        pure = InitialState.from_angles(fam, a, d)
        mixed = InitialState.from_angles(fam, a, d, r)
        worst = max(worst, abs(purity_norm(pure.bloch()) - np.sqrt(3)),
                    abs(purity_norm(mixed.bloch()) - np.sqrt(3) * r))
    t = np.linspace(0, 400, 401)
    sa = QubitSpec(1.0, RtnSource(0.1, 0.9, 0.02, 0.4))
    sb = QubitSpec(1.2, RtnSource(0.07, 0.3, 0.4))
    worst22 = 0.0
    for fam in Family:
        st_ = InitialState.from_angles(fam, 0.35, 1.1, 0.8)
        closed = purity_curve(st_, Model.TWO_TWO, sa, sb, t)
        direct = purity_norm(analytic_bloch_two_two(st_, sa, sb, t))
        worst22 = max(worst22, np.abs(closed - direct).max())
    ok = worst <= 1e-12 and worst22 <= 1e-12
    record(6, ok, f"t=0 anchors max err {worst:.1e}; two-two |n| closed vs norm {worst22:.1e} (tol 1e-12)")
    assert ok


# ---------------------------------------------------------------- 7

def test_c7_phase_diagram_boundary():
    start = time.perf_counter()
    rows = phase_scan()  # 20 x 20, Werner r = 0.5, alpha = 1/sqrt(2)
    outside = [r for r in rows if not r["result"].in_band]
    bad = [r for r in outside if not r["result"].agrees]
    inconclusive = [r for r in rows if not r["result"].conclusive]
    ok = not bad and not inconclusive
    sample = ", ".join(f"(theta={r['theta']:.2f}, g/gamma={r['ratio']:.2f}: {r['result'].label.value})"
                       for r in bad[:3])
    record(7, ok, f"{len(outside) - len(bad)}/{len(outside)} grid points outside the band agree with "
                  f"g/gamma = sec(theta); {time.perf_counter() - start:.0f}s"
                  + (f"; e.g. {sample}" if bad else ""))
    assert ok


# ---------------------------------------------------------------- 8

def test_c8_werner_scaling_and_structure():
    rng = np.random.default_rng(8)
    t = np.linspace(0, 300, 61)
    scale_err, l34_err, q_err = 0.0, 0.0, 0.0
    for _ in range(10):
        fam = Family.PHI if rng.random() < 0.5 else Family.PSI
        a, d, r = rng.uniform(0.1, 0.9), rng.uniform(0, 2 * np.pi), rng.uniform(0.1, 1.0)
        sa = QubitSpec(1.0, RtnSource(0.1, rng.choice([0.0, rng.uniform(0.1, 1.4)]), 10 ** rng.uniform(-2.5, 0)))
        sb = QubitSpec(1.0, RtnSource(0.1, rng.choice([0.0, rng.uniform(0.1, 1.4)]), 10 ** rng.uniform(-2.5, 0)))
        one = InitialState.from_angles(fam, a, d, 1.0)
        mix = InitialState.from_angles(fam, a, d, r)
        for model, spec_b in ((Model.TWO_ONE, QubitSpec(1.0)), (Model.TWO_TWO, sb)):
            za, ea = dephasing_factors(sa, t)
            zb, eb = dephasing_factors(spec_b, t)
            ph = 2.0 * t if fam is Family.PHI else 0.0 * t
            n1 = analytic_bloch(one, za, ea, zb, eb, ph)
            nr = analytic_bloch(mix, za, ea, zb, eb, ph)
            scale_err = max(scale_err, np.abs(nr[:, 1:] - r * n1[:, 1:]).max())
            _, spec = concurrence_wootters(from_bloch(nr))
            l34_err = max(l34_err, np.abs(spec.lambdas[:, 2] - spec.lambdas[:, 3]).max())
            xi, _ = relaxation_functions(mix, ea, eb)
            q_closed = 2 * mix.weight * (np.abs(za * zb) - xi)
            q_err = max(q_err, np.abs(spec.q - q_closed).max())
    # long-time limits at t = 20 / Gamma_1
    lim_err = 0.0
    for fam in Family:
        st_ = InitialState.from_angles(fam, 0.6, 0.3, 0.7)
        src = RtnSource(0.1, np.pi / 3, 0.5)
        spec = QubitSpec(1.0, src)
        t_end = 20 / sq.gamma1(src, 1.0)
        _, ea = dephasing_factors(spec, t_end)
        xi1, _ = relaxation_functions(st_, ea)
        xi2, _ = relaxation_functions(st_, ea, ea)
        lim_err = max(lim_err, abs(xi1 - xi_limit(st_, Model.TWO_ONE)),
                      abs(xi2 - xi_limit(st_, Model.TWO_TWO)))
    ok = scale_err <= 1e-15 and l34_err <= 1e-10 and q_err <= 1e-10 and lim_err <= 1e-6
    record(8, ok, f"n(r) - r n(1): {scale_err:.1e}; |l3 - l4|: {l34_err:.1e}; q decomposition: "
                  f"{q_err:.1e}; xi(inf) at 20/Gamma1: {lim_err:.1e}")
    assert ok


if __name__ == "__main__":
    import sys

    failures = 0
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    for fn in tests:
        params = [("smoke", 4_000, 0.07), ("full", 40_000, 0.02)] if fn is test_c4_monte_carlo_reproduces_average else [()]
        for p in params:
            try:
                fn(*p)
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
