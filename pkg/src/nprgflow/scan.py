"""Dissipation sweeps, the critical power-law fit and the instanton comparison."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from .errors import DegenerateFitError, InsufficientDataError, InvalidParameterError, NPRGError
from .flow import STOP_CONVERGED, STOP_SPINODAL, FlowSettings, run_flow
from .model import DEFAULT_CUTOFF, DEFAULT_N, DEFAULT_QMAX, DimensionlessParams, bare_potential
from .observables import NEAR_CRITICAL_CURVATURE, NearCriticalWarning, effective_couplings

# Fits are flagged when removing the point farthest from criticality moves eta_c by more.
WINDOW_STABILITY_RTOL = 0.01
# Couplings at or below this lie in the deep-well region where the flow is least reliable.
LOW_CONFIDENCE_LAMBDA = 0.1
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class ScanRecord:
    eta: float
    omega_eff_sq: float
    chi: float | None
    stop_reason: str
    message: str | None = None

    @property
    def converged(self):
        return self.chi is not None

    @property
    def status(self):
        return self.stop_reason


@dataclass(frozen=True)
class ScanTable:
    lam: float
    records: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        etas = [r.eta for r in self.records]
        if any(b <= a for a, b in zip(etas, etas[1:])):
            raise InvalidParameterError("eta", "scan records must be strictly increasing in eta")

    @property
    def etas(self):
        return np.array([r.eta for r in self.records])

    def converged(self):
        return [r for r in self.records if r.converged]

    def censored(self):
        return [r for r in self.records if not r.converged]

    def censoring_boundary(self):
        """(last converged eta, first censored eta) around the first censored record, or None."""
        recs = self.records
        first_bad = next((i for i, r in enumerate(recs) if not r.converged), None)
        if not first_bad:
            return None
        return recs[first_bad - 1].eta, recs[first_bad].eta

    def merged(self, other: "ScanTable") -> "ScanTable":
        by_eta = {r.eta: r for r in self.records}
        by_eta.update({r.eta: r for r in other.records})
        return ScanTable(self.lam, tuple(by_eta[e] for e in sorted(by_eta)), self.provenance)


@dataclass(frozen=True)
class WindowPolicy:
    """Which converged records enter the critical fit.

    Records with chi >= ``chi_ratio`` * chi(eta=0) form the scaling window
    (``chi_ratio=None`` keeps every record). ``max_chi`` drops the records
    closest to the singular region, by default those with V''(0) inside the
    near-critical band where the flow saturates instead of diverging.
    """

    chi_ratio: float | None = 5.0
    max_chi: float | None = 1.0 / NEAR_CRITICAL_CURVATURE
    min_points: int = 6

    def select(self, etas, chis, reference_chi=None):
        etas = np.asarray(etas, dtype=float)
        chis = np.asarray(chis, dtype=float)
        keep = np.isfinite(chis) & (chis > 0)
        if self.chi_ratio is not None:
            if reference_chi is None:
                raise InsufficientDataError("window policy needs chi at eta = 0")
            keep &= chis >= self.chi_ratio * reference_chi
        if self.max_chi is not None:
            keep &= chis <= self.max_chi
        return etas[keep], chis[keep]


@dataclass(frozen=True)
class FitResult:
    """chi = amplitude * (eta_c - eta)^(-gamma) over the fitted window."""

    eta_c: float
    gamma: float
    amplitude: float
    residual: float
    eta_min: float
    eta_max: float
    n_points: int
    stable: bool = True
    eta_c_drop_one: float | None = None

    def predict(self, eta):
        return self.amplitude * np.abs(np.asarray(eta, dtype=float) - self.eta_c) ** (-self.gamma)

    def to_dict(self):
        return asdict(self)


def instanton_baseline(lam):
    """Dilute-instanton critical dissipation, 2 pi lam (dimensionless)."""
    return 2.0 * math.pi * lam


def _flow_record(lam, eta, settings, qmax, n, cutbar):
    params = DimensionlessParams(lam=lam, etabar=float(eta), cutbar=cutbar)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearCriticalWarning)
            outcome = run_flow(params, settings, bare_potential(lam, qmax, n))
            obs = effective_couplings(outcome)
    except NPRGError as exc:
        return ScanRecord(float(eta), float("nan"), None, STATUS_FAILED, f"{type(exc).__name__}: {exc}")
    return ScanRecord(float(eta), obs.omega_eff_sq, obs.chi, outcome.stop_reason)


def eta_sweep(lam, etas, settings=None, *, qmax=DEFAULT_QMAX, n=DEFAULT_N,
              cutbar=DEFAULT_CUTOFF, n_jobs=1) -> ScanTable:
    """Run the flow at every eta in ``etas``; censored (non-converged) points keep chi=None.

    A flow or observable error at one point is recorded on that record
    (status ``failed``) instead of aborting the sweep.

    Independent flows may run in parallel; the table is ordered by eta regardless.
    """
    etas = [float(e) for e in etas]
    if any(e < 0 for e in etas):
        raise InvalidParameterError("eta", "all eta values must be >= 0")
    if any(b <= a for a, b in zip(etas, etas[1:])):
        raise InvalidParameterError("eta", "eta grid must be strictly increasing")
    settings = settings or FlowSettings()
    if n_jobs == 1 or len(etas) < 2:
        records = [_flow_record(lam, e, settings, qmax, n, cutbar) for e in etas]
    else:
        records = Parallel(n_jobs=n_jobs)(
            delayed(_flow_record)(lam, e, settings, qmax, n, cutbar) for e in etas)
    provenance = {"settings": asdict(settings), "qmax": qmax, "n": n, "cutoff": cutbar}
    return ScanTable(float(lam), tuple(records), provenance)


def refined_sweep(lam, settings=None, *, coarse_points=12, bisections=8, window_points=10,
                  policy=None, eta_start=None, qmax=DEFAULT_QMAX, n=DEFAULT_N,
                  cutbar=DEFAULT_CUTOFF, n_jobs=1) -> ScanTable:
    """Sweep that homes in on the censoring boundary and fills the fit window.

    The upper end of the coarse grid is found by doubling from ``eta_start``
    (default: twice the instanton value) until a flow is censored. A uniform
    coarse grid on [0, upper] is then run and the gap between the last
    converged and the first censored point is bisected ``bisections`` times.
    Finally ``window_points`` evenly spaced flows are added between the last
    record below the fit window of ``policy`` and the first record above it.
    """
    settings = settings or FlowSettings()
    policy = policy or WindowPolicy()
    kw = dict(qmax=qmax, n=n, cutbar=cutbar)

    def run(points):
        return eta_sweep(lam, points, settings, n_jobs=n_jobs, **kw)

    upper = eta_start if eta_start is not None else 2.0 * instanton_baseline(lam)
    probes = []
    for _ in range(12):
        rec = _flow_record(lam, upper, settings, qmax, n, cutbar)
        probes.append(rec)
        if not rec.converged:
            break
        upper *= 2.0
    else:
        raise DegenerateFitError(f"no censored point found up to eta = {upper:g}")

    table = run(np.linspace(0.0, upper, coarse_points + 1))
    table = table.merged(ScanTable(float(lam), tuple(sorted(probes, key=lambda r: r.eta))))

    for _ in range(bisections):
        recs = table.records
        first_bad = next((i for i, r in enumerate(recs) if not r.converged), 0)
        if first_bad == 0:
            break
        table = table.merged(run([0.5 * (recs[first_bad - 1].eta + recs[first_bad].eta)]))

    if window_points > 0:
        lo, hi = _window_bracket(table, policy)
        known = set(table.etas.tolist())
        points = [e for e in np.linspace(lo, hi, window_points + 2)[1:-1].tolist() if e not in known]
        table = table.merged(run(points))
    provenance = {"settings": asdict(settings), "qmax": qmax, "n": n, "cutoff": cutbar,
                  "coarse_points": coarse_points, "bisections": bisections,
                  "window_points": window_points, "window": asdict(policy)}
    return ScanTable(table.lam, table.records, provenance)


def _window_bracket(table, policy):
    """(last eta below the fit window, first eta above it or censored)."""
    recs = table.records
    reference = next((r.chi for r in recs if r.eta == 0.0 and r.converged), None)
    low_chi = policy.chi_ratio * reference if policy.chi_ratio and reference else 0.0
    high_chi = policy.max_chi if policy.max_chi is not None else math.inf
    above = [r.eta for r in recs if not r.converged or r.chi > high_chi]
    hi = above[0] if above else recs[-1].eta
    below = [r.eta for r in recs if r.converged and r.chi < low_chi and r.eta < hi]
    lo = below[-1] if below else recs[0].eta
    return lo, hi


def _regress(x, y):
    """Least-squares line y = a + b x; returns (a, b, rms residual)."""
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    b = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    a = float(ym - b * xm)
    res = y - (a + b * x)
    return a, b, float(np.sqrt(np.mean(res * res)))


def _profile(etas, log_chi, eta_c):
    return _regress(np.log(eta_c - etas), log_chi)


def fit_power_law(etas, chis, span=None, xtol=1e-13):
    """Profiled fit of log chi = log C - gamma log(eta_c - eta).

    For fixed eta_c the problem is a linear regression; the outer search over
    eta_c in (max eta, max eta + span] minimizes the RMS log residual. A coarse
    geometric scan of eta_c - max eta brackets the minimum, golden-section
    search refines it.
    """
    etas = np.asarray(etas, dtype=float)
    chis = np.asarray(chis, dtype=float)
    if etas.size < 3:
        raise InsufficientDataError(f"need at least 3 points, got {etas.size}")
    order = np.argsort(etas)
    etas, log_chi = etas[order], np.log(chis[order])
    top = etas[-1]
    if span is None:
        span = max(etas[-1] - etas[0], 1e-12)

    def rms(eta_c):
        return _profile(etas, log_chi, eta_c)[2]

    offsets = span * np.geomspace(1e-9, 1.0, 361)
    values = np.array([rms(top + d) for d in offsets])
    best = int(np.argmin(values))
    if best == 0 or best == offsets.size - 1:
        raise DegenerateFitError(
            f"RMS residual has no interior minimum for eta_c in ({top:g}, {top + span:g}]")
    bracket = (top + offsets[best - 1], top + offsets[best], top + offsets[best + 1])
    res = optimize.minimize_scalar(rms, bracket=bracket, method="golden",
                                   options={"xtol": xtol})
    eta_c = float(res.x)
    log_c, slope, residual = _profile(etas, log_chi, eta_c)
    return FitResult(eta_c=eta_c, gamma=-slope, amplitude=math.exp(log_c), residual=residual,
                     eta_min=float(etas[0]), eta_max=float(top), n_points=int(etas.size))


def power_law_fit(table: ScanTable, policy: WindowPolicy | None = None, span=None) -> FitResult:
    """Fit the critical form to the converged records of ``table`` inside the window."""
    policy = policy or WindowPolicy()
    conv = table.converged()
    reference = next((r.chi for r in conv if r.eta == 0.0), None)
    etas, chis = policy.select([r.eta for r in conv], [r.chi for r in conv], reference)
    if etas.size < policy.min_points:
        raise InsufficientDataError(
            f"{etas.size} converged records in the fit window, need {policy.min_points}")
    fit = fit_power_law(etas, chis, span)
    if fit.gamma <= 0:
        raise DegenerateFitError(f"fitted gamma = {fit.gamma:.4g} is not positive")
    # window robustness: drop the point farthest from criticality
    drop = None
    if etas.size - 1 >= 3:
        try:
            drop = fit_power_law(etas[1:], chis[1:], span).eta_c
        except DegenerateFitError:
            drop = None
    stable = drop is not None and abs(drop - fit.eta_c) <= WINDOW_STABILITY_RTOL * abs(fit.eta_c)
    return FitResult(**{**fit.to_dict(), "stable": stable, "eta_c_drop_one": drop})


def synthetic_table(amplitude, eta_c, gamma, etas, lam=1.0) -> ScanTable:
    """Noiseless records following chi = amplitude (eta_c - eta)^-gamma."""
    etas = np.asarray(etas, dtype=float)
    chis = amplitude * (eta_c - etas) ** (-gamma)
    records = tuple(ScanRecord(float(e), float(1.0 / c), float(c), STOP_CONVERGED)
                    for e, c in zip(etas, chis))
    return ScanTable(float(lam), records, {"synthetic": [amplitude, eta_c, gamma]})


@dataclass(frozen=True)
class SurfaceRow:
    lam: float
    eta_c: float | None
    gamma: float | None
    residual: float | None
    baseline: float
    n_points: int = 0
    low_confidence: bool = False
    stable: bool | None = None
    boundary: float | None = None
    error: str | None = None


def critical_surface(lams, settings=None, policy=None, *, sweep_kwargs=None):
    """Refined sweep plus critical fit for every coupling in ``lams``.

    Failures are recorded on the row rather than raised.
    """
    sweep_kwargs = sweep_kwargs or {}
    rows, tables = [], []
    for lam in lams:
        lam = float(lam)
        low = lam <= LOW_CONFIDENCE_LAMBDA
        try:
            table = refined_sweep(lam, settings, policy=policy, **sweep_kwargs)
        except Exception as exc:  # recorded per coupling
            rows.append(SurfaceRow(lam, None, None, None, instanton_baseline(lam),
                                   low_confidence=low, error=str(exc)))
            tables.append(None)
            continue
        tables.append(table)
        gap = table.censoring_boundary()
        boundary = 0.5 * (gap[0] + gap[1]) if gap else None
        try:
            fit = power_law_fit(table, policy)
        except Exception as exc:
            rows.append(SurfaceRow(lam, None, None, None, instanton_baseline(lam),
                                   low_confidence=low, boundary=boundary, error=str(exc)))
            continue
        rows.append(SurfaceRow(lam, fit.eta_c, fit.gamma, fit.residual, instanton_baseline(lam),
                               n_points=fit.n_points, low_confidence=low, stable=fit.stable,
                               boundary=boundary))
    return rows, tables


__all__ = [
    "FitResult", "ScanRecord", "ScanTable", "SurfaceRow", "WindowPolicy",
    "critical_surface", "eta_sweep", "fit_power_law", "instanton_baseline",
    "power_law_fit", "refined_sweep", "synthetic_table", "STOP_SPINODAL",
]
