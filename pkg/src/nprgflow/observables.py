"""Physical quantities read off the infrared effective potential."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidObservablesError
from .flow import STOP_CONVERGED, FlowOutcome, origin_curvature
from .model import ModelParams, PotentialGrid

DEFAULT_FIT_WINDOW = 9
# below this |V''(0)| the polynomial fit and the stencil are no longer compared
NEAR_CRITICAL_CURVATURE = 1.0e-3
FIT_STENCIL_RTOL = 1.0e-4
# truncation bias of the quartic fit on the default grid (scales as h^4), about 4e-6 at most
FIT_STENCIL_ATOL = 1.0e-5


class NearCriticalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Observables:
    """Couplings of V_eff(q) = omega_eff_sq q^2 / 2 + lambda_eff q^4 + ... (dimensionless).

    ``chi`` is ``None`` unless ``valid``.
    """

    omega_eff_sq: float
    lambda_eff: float
    chi: float | None
    valid: bool
    stencil_curvature: float
    stop_reason: str = STOP_CONVERGED
    near_critical: bool = False

    @property
    def omega_eff(self):
        """sqrt(omega_eff_sq), or nan when the curvature is not positive."""
        return float(np.sqrt(self.omega_eff_sq)) if self.omega_eff_sq > 0 else float("nan")


def effective_couplings(outcome, fit_window=DEFAULT_FIT_WINDOW) -> Observables:
    """Fit a + b q^2 + c q^4 to the innermost ``fit_window`` points of the even grid.

    ``outcome`` is a :class:`FlowOutcome` or a bare :class:`PotentialGrid` (taken
    as converged). omega_eff_sq = 2 b, lambda_eff = c. Observables are flagged
    invalid when the flow did not converge or the curvature is not positive.
    """
    if isinstance(outcome, FlowOutcome):
        grid, stop = outcome.final, outcome.stop_reason
    elif isinstance(outcome, PotentialGrid):
        grid, stop = outcome, STOP_CONVERGED
    else:
        raise TypeError(f"expected FlowOutcome or PotentialGrid, got {type(outcome).__name__}")
    if fit_window < 5 or fit_window % 2 == 0:
        raise ValueError(f"fit_window must be odd and >= 5, got {fit_window}")
    half = fit_window // 2
    if half >= grid.n:
        raise ValueError("fit_window exceeds the grid")

    q = grid.q[: half + 1]
    q = np.concatenate([-q[:0:-1], q])
    v = np.concatenate([grid.values[half:0:-1], grid.values[: half + 1]])
    # scale q to O(1) so the normal equations stay well conditioned
    x = q / q[-1]
    design = np.column_stack([np.ones_like(x), x**2, x**4])
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    b = coef[1] / q[-1] ** 2
    c = coef[2] / q[-1] ** 4
    omega_sq = float(2.0 * b)

    stencil = float(origin_curvature(grid.values, grid.spacing))
    near_critical = abs(stencil) <= NEAR_CRITICAL_CURVATURE
    valid = stop == STOP_CONVERGED and omega_sq > 0
    if valid and near_critical:
        warnings.warn(
            f"V''(0) = {stencil:.3e} is near critical; fit/stencil agreement not checked",
            NearCriticalWarning,
            stacklevel=2,
        )
    elif valid and abs(omega_sq - stencil) > FIT_STENCIL_RTOL * abs(stencil) + FIT_STENCIL_ATOL:
        raise InvalidObservablesError(
            f"quadratic fit {omega_sq:.10g} disagrees with stencil curvature {stencil:.10g}"
        )
    return Observables(
        omega_eff_sq=omega_sq,
        lambda_eff=float(c),
        chi=1.0 / omega_sq if valid else None,
        valid=valid,
        stencil_curvature=stencil,
        stop_reason=stop,
        near_critical=near_critical,
    )


def susceptibility(obs: Observables, params: ModelParams | None = None) -> float:
    """Localization susceptibility 1 / V_eff''(0).

    Dimensionless when ``params`` is None, otherwise restored to physical units
    chi = chi_bar / (M omega0^2).
    """
    if not obs.omega_eff_sq > 0:
        raise InvalidObservablesError(f"omega_eff_sq = {obs.omega_eff_sq:.3e} is not positive")
    if not obs.valid:
        raise InvalidObservablesError(f"flow did not converge (stop reason {obs.stop_reason!r})")
    chibar = 1.0 / obs.omega_eff_sq
    if params is None:
        return chibar
    return chibar / (params.mass * params.omega0**2)
