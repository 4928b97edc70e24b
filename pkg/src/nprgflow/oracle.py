"""Exact diagonalization of the undamped double well.

Independent check of the flow at etabar = 0: nothing here touches the flow
code. The Hamiltonian -1/2 d^2/dq^2 + V(q) + J q is discretized with a
4th-order kinetic stencil on a uniform grid inside hard walls at q = +-L.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import BoxTooSmallError, InvalidParameterError, OracleError, UnstableDifferenceError
from .model import classical_minimum

WALL_DENSITY_LIMIT = 1.0e-10
RICHARDSON_RTOL = 1.0e-4


@dataclass(frozen=True)
class SpectralSettings:
    box: float = 8.0
    points: int = 2048
    tilt: float = 1.0e-3
    eigencount: int = 4

    def __post_init__(self):
        if not self.box > 0:
            raise InvalidParameterError("box", f"must be > 0, got {self.box!r}")
        if self.points < 256:
            raise InvalidParameterError("points", f"need at least 256 points, got {self.points!r}")
        if not self.tilt > 0:
            raise InvalidParameterError("tilt", f"must be > 0, got {self.tilt!r}")
        if self.eigencount < 2:
            raise InvalidParameterError("eigencount", "need at least two levels for the gap")


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    chi_exact: float | None = None

    @property
    def ground(self):
        return float(self.eigenvalues[0])

    @property
    def gap(self):
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def double_well(lam):
    return lambda q: -0.5 * q**2 + lam * q**4


def _hamiltonian(potential, tilt, settings):
    n = settings.points
    h = 2.0 * settings.box / (n + 1)
    q = -settings.box + h * np.arange(1, n + 1)
    # -1/2 d^2/dq^2 with (-1, 16, -30, 16, -1)/(12 h^2); psi = 0 beyond the walls
    kin = -0.5 / (12.0 * h * h)
    diagonals = [
        np.full(n - 2, -kin),
        np.full(n - 1, 16.0 * kin),
        -30.0 * kin + potential(q) + tilt * q,
        np.full(n - 1, 16.0 * kin),
        np.full(n - 2, -kin),
    ]
    ham = sp.diags(diagonals, [-2, -1, 0, 1, 2], format="csc")
    # the discrete kinetic operator is positive, so min(V + J q) bounds E0 from below
    floor = float(np.min(diagonals[2] + 30.0 * kin))
    return q, h, ham, floor


def _lowest(potential, tilt, settings, k, position=False):
    q, h, ham, floor = _hamiltonian(potential, tilt, settings)
    shift = floor - 1.0
    # fixed start vector keeps ARPACK deterministic
    v0 = np.exp(-0.5 * q**2)
    try:
        vals, vecs = eigsh(ham, k=k, sigma=shift, which="LM", v0=v0, tol=0.0)
    except ArpackNoConvergence as exc:
        raise OracleError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    ground = vecs[:, 0] / math.sqrt(h * np.sum(vecs[:, 0] ** 2))
    wall = max(ground[0] ** 2, ground[-1] ** 2)
    if wall > WALL_DENSITY_LIMIT:
        raise BoxTooSmallError(
            f"ground-state density {wall:.2e} at the walls exceeds {WALL_DENSITY_LIMIT:g}; enlarge the box"
        )
    if position:
        return vals, float(h * np.sum(q * ground**2))
    return vals


def diagonalize(lam, tilt=0.0, settings=None, potential=None) -> SpectralResult:
    """Lowest ``settings.eigencount`` levels of the tilted double well (units hbar omega0).

    ``potential`` replaces the double well by any callable V(q) (used for the
    harmonic checks).
    """
    settings = settings or SpectralSettings()
    if potential is None:
        if not lam > 0:
            raise InvalidParameterError("lambda0", f"must be > 0, got {lam!r}")
        if settings.box <= 2.0 * classical_minimum(lam):
            raise InvalidParameterError("box", "must exceed twice the classical minimum position")
        potential = double_well(lam)
    vals = _lowest(potential, tilt, settings, settings.eigencount)
    return SpectralResult(eigenvalues=vals)


def _ground(potential, tilt, settings):
    return float(_lowest(potential, tilt, settings, 1)[0])


def ground_position(potential, tilt, settings):
    """<q> in the ground state of the tilted Hamiltonian."""
    return _lowest(potential, tilt, settings, 1, position=True)[1]


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(6)


def _second_difference(potential, settings, d):
    """-(E0(d) - 2 E0(0) + E0(-d)) / d^2.

    By Hellmann-Feynman dE0/dJ = <q>_J, so the numerator equals
    integral_0^d (<q>_s - <q>_-s) ds. Evaluating that integral by Gauss-Legendre
    avoids subtracting three nearly equal energies.
    """
    nodes = 0.5 * d * (_GAUSS_NODES + 1.0)
    weights = 0.5 * d * _GAUSS_WEIGHTS
    odd = [ground_position(potential, s, settings) - ground_position(potential, -s, settings)
           for s in nodes]
    return -float(np.dot(weights, odd)) / (d * d)


def exact_susceptibility(lam, settings=None, potential=None):
    """chi = -d^2 E0 / dJ^2 at J = 0, by central differences in the tilt.

    The estimate at ``tilt`` is checked against the one at ``tilt/2``.
    """
    settings = settings or SpectralSettings()
    if potential is None:
        if settings.box <= 2.0 * classical_minimum(lam):
            raise InvalidParameterError("box", "must exceed twice the classical minimum position")
        potential = double_well(lam)
    coarse = _second_difference(potential, settings, settings.tilt)
    fine = _second_difference(potential, settings, 0.5 * settings.tilt)
    if abs(coarse - fine) > RICHARDSON_RTOL * abs(fine):
        raise UnstableDifferenceError(
            f"tilt estimates {coarse:.8g} and {fine:.8g} differ by more than {RICHARDSON_RTOL:g}"
        )
    # Richardson extrapolation of the O(d^2) difference quotient
    return (4.0 * fine - coarse) / 3.0


def spectral_result(lam, settings=None) -> SpectralResult:
    """Levels plus the exact susceptibility for the double well."""
    settings = settings or SpectralSettings()
    levels = diagonalize(lam, 0.0, settings)
    return SpectralResult(eigenvalues=levels.eigenvalues,
                          chi_exact=exact_susceptibility(lam, settings))
