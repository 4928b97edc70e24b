"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL ...`` line (also repeated in
the pytest terminal summary). Run on its own with
``python3 -m pytest tests/test_acceptance.py -v``.
"""
import itertools
import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from nprgflow.flow import STOP_CONVERGED, FlowSettings, run_flow, shell_step, step
from nprgflow.model import (
    DimensionlessParams, ModelParams, bare_potential, harmonic_potential, r_ratio, reduce,
)
from nprgflow.observables import effective_couplings, susceptibility
from nprgflow.oracle import diagonalize
from nprgflow.scan import (
    LOW_CONFIDENCE_LAMBDA, WindowPolicy, critical_surface, instanton_baseline, power_law_fit,
    synthetic_table,
)

COUPLINGS = (0.3, 0.5, 1.0)
SURFACE_COUPLINGS = (0.1,) + COUPLINGS


def report(number, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def flow(lam, eta, settings=None, qmax=3.0, n=301):
    out = run_flow(DimensionlessParams(lam, eta, 1e4), settings, bare_potential(lam, qmax, n))
    return out, effective_couplings(out)


@pytest.fixture(scope="module")
def surface():
    rows, tables = critical_surface(SURFACE_COUPLINGS)
    return {row.lam: (row, table) for row, table in zip(rows, tables)}


def test_criterion_01_symmetric_phase():
    run_flow(DimensionlessParams(1.0, 0.0, 1e4), FlowSettings(t_max=1.0))  # load compiled kernels
    parts, ok = [], True
    for lam in COUPLINGS:
        start = time.perf_counter()
        out, obs = flow(lam, 0.0)
        elapsed = time.perf_counter() - start
        ok &= out.stop_reason == STOP_CONVERGED and obs.omega_eff_sq > 0 and elapsed < 5.0
        parts.append(f"lam={lam}: omega_eff_sq={obs.omega_eff_sq:.6f} ({elapsed:.2f}s)")
    report(1, ok, "; ".join(parts))


def test_criterion_02_oracle_agreement():
    start = time.perf_counter()
    parts, ok = [], True
    for lam in COUPLINGS:
        _, obs = flow(lam, 0.0)
        gap = diagonalize(lam).gap
        dev = (obs.omega_eff - gap) / gap
        ok &= abs(dev) < 0.15
        parts.append(f"lam={lam}: omega_eff={obs.omega_eff:.5f} gap={gap:.5f} dev={dev:+.2%}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    report(2, ok, "; ".join(parts) + f" ({elapsed:.1f}s total)")


def test_criterion_03_monotone_suppression():
    omegas = [flow(1.0, eta)[1].omega_eff for eta in (0.0, 1.0, 2.0, 4.0)]
    ok = all(b < a for a, b in zip(omegas, omegas[1:]))
    report(3, ok, "omega_eff(eta=0,1,2,4) = " + ", ".join(f"{w:.5f}" for w in omegas))


def test_criterion_04_scaling_fit(surface):
    row, table = surface[1.0]
    policy = WindowPolicy()
    fit = power_law_fit(table, policy)
    ok = fit.n_points >= 8 and fit.residual < 0.05
    try:
        uncapped = power_law_fit(table, WindowPolicy(max_chi=None)).residual
        note = f"{uncapped:.3f}"
    except Exception as exc:  # reported only
        note = type(exc).__name__
    report(4, ok, f"lam=1: {fit.n_points} points in window, RMS={fit.residual:.4f}, "
                  f"eta_c={fit.eta_c:.4f}, gamma={fit.gamma:.4f} "
                  f"(window without the near-critical cap: RMS={note})")


def test_criterion_05_baseline_ordering(surface):
    parts, ok = [], True
    for lam in COUPLINGS:
        row = surface[lam][0]
        good = row.eta_c is not None and row.eta_c > instanton_baseline(lam)
        ok &= good
        parts.append(f"lam={lam}: eta_c={row.eta_c if row.eta_c is None else round(row.eta_c, 4)}"
                     f" > 2*pi*lam={instanton_baseline(lam):.4f}")
    report(5, ok, "; ".join(parts))


def test_criterion_06_gamma_universality(surface):
    gammas = {lam: surface[lam][0].gamma for lam in COUPLINGS}
    low = surface[0.1][0]
    ok = None not in gammas.values() and low.low_confidence and 0.1 <= LOW_CONFIDENCE_LAMBDA
    spread = float("nan")
    if None not in gammas.values():
        spread = max(abs(a - b) / min(a, b) for a, b in itertools.combinations(gammas.values(), 2))
        ok &= spread < 0.15
    low_note = f"gamma={low.gamma:.4f}" if low.gamma is not None else f"fit failed ({low.error})"
    report(6, ok, ", ".join(f"gamma(lam={k})={v:.4f}" for k, v in gammas.items() if v is not None)
           + f"; max pairwise spread={spread:.2%}; lam=0.1 flagged low-confidence, {low_note}")


def test_criterion_07_r_parameter():
    r = r_ratio(0.1)
    report(7, 1.12 <= r <= 1.14, f"r(0.1)={r:.6f}")


def test_criterion_08_fixed_point():
    devs = []
    for eta in (0.0, 1.0, 10.0):
        out = run_flow(DimensionlessParams(1.0, eta, 1e4), None, harmonic_potential(1.0))
        devs.append(abs(out.curvature_at_origin - 1.0))
    report(8, max(devs) < 1e-8, "max |V''(0) - 1| = " + f"{max(devs):.2e} over eta in (0, 1, 10)")


def test_criterion_09_scheme_consistency():
    grid = bare_potential(1.0)
    scale, eta, dts, diffs = 5.0, 1.0, (1e-2, 1e-3, 1e-4), []
    for dt in dts:
        a = step(grid, scale, dt, eta).values
        b = shell_step(grid, scale, scale * (1.0 - math.exp(-dt)), eta).values
        diffs.append(np.max(np.abs(a - b)))
    order = np.polyfit(np.log(dts), np.log(diffs), 1)[0]
    report(9, order >= 1.9, f"measured order {order:.3f} (max diffs {', '.join(f'{d:.2e}' for d in diffs)})")


def test_criterion_10_numerical_convergence():
    base = flow(1.0, 1.0)[1].omega_eff_sq
    half_dt = flow(1.0, 1.0, FlowSettings(dt=5e-4))[1].omega_eff_sq
    fine = flow(1.0, 1.0, n=601)[1].omega_eff_sq
    wide = flow(1.0, 1.0, qmax=4.0, n=401)[1].omega_eff_sq
    d_dt, d_n, d_q = (abs(x - base) / base for x in (half_dt, fine, wide))
    ok = d_dt < 1e-6 and d_n < 1e-3 and d_q < 1e-3
    report(10, ok, f"dt/2: {d_dt:.2e}, 2n: {d_n:.2e}, qmax 3->4: {d_q:.2e}")


def test_criterion_11_fit_oracle():
    fit = power_law_fit(synthetic_table(2.0, 7.0, 1.5, np.linspace(0.0, 6.5, 20)),
                        WindowPolicy(chi_ratio=None, max_chi=None))
    errs = [abs(fit.amplitude - 2.0) / 2.0, abs(fit.eta_c - 7.0) / 7.0, abs(fit.gamma - 1.5) / 1.5]
    report(11, max(errs) < 1e-6, f"max relative error {max(errs):.2e}")


def test_criterion_12_scaling_invariance():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        first = ModelParams(mass=1.0, hbar=1.0, omega0=1.0, lambda0=1.0, eta=1.0, cutoff=1e4)
        second = ModelParams(mass=2.0, hbar=1.0, omega0=2.0, lambda0=32.0, eta=4.0, cutoff=2e4)
    assert reduce(first) == reduce(second)
    chis = []
    for p in (first, second):
        obs = effective_couplings(run_flow(reduce(p)))
        chis.append(susceptibility(obs, p))
    expected = (second.mass * second.omega0**2) / (first.mass * first.omega0**2)
    dev = abs(chis[0] / chis[1] - expected) / expected
    report(12, dev < 1e-10, f"chi ratio {chis[0] / chis[1]:.12g} vs M omega0^2 ratio {expected:g}, dev {dev:.1e}")
