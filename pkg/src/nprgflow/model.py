"""Physical parameters, the dimensionless reduction and the bare double well.

All internal work is done in units where M = hbar = omega0 = 1:

    q_bar = q * sqrt(M omega0 / hbar)
    V_bar = V / (hbar omega0)
    Lambda_bar = Lambda / omega0

With these the flow equation only depends on lam = hbar lambda0 / (M^2 omega0^3),
etabar = eta / (M omega0) and the starting cutoff Lambda_bar_0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGridError, InvalidParameterError

DEFAULT_QMAX = 3.0
DEFAULT_N = 301
DEFAULT_CUTOFF = 1.0e4
MIN_GRID_POINTS = 32
# Lambda0/omega0 below this only warns; physical runs need a wide UV window.
CUTOFF_RATIO_WARNING = 1.0e2


def _require_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameterError(name, f"must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of the dissipative double well."""

    mass: float = 1.0
    hbar: float = 1.0
    omega0: float = 1.0
    lambda0: float = 1.0
    eta: float = 0.0
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        for name in ("mass", "hbar", "omega0", "lambda0", "cutoff"):
            _require_positive(name, getattr(self, name))
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise InvalidParameterError("eta", f"must be finite and >= 0, got {self.eta!r}")
        if self.cutoff / self.omega0 < CUTOFF_RATIO_WARNING:
            warnings.warn(
                f"cutoff/omega0 = {self.cutoff / self.omega0:.3g} is below "
                f"{CUTOFF_RATIO_WARNING:g}; the UV window may be too narrow",
                stacklevel=3,
            )

    @property
    def length_unit(self):
        """Physical length corresponding to q_bar = 1."""
        return math.sqrt(self.hbar / (self.mass * self.omega0))

    @property
    def energy_unit(self):
        return self.hbar * self.omega0


@dataclass(frozen=True)
class DimensionlessParams:
    lam: float = 1.0
    etabar: float = 0.0
    cutbar: float = DEFAULT_CUTOFF

    def __post_init__(self):
        _require_positive("lambda0", self.lam)
        _require_positive("cutoff", self.cutbar)
        if not (math.isfinite(self.etabar) and self.etabar >= 0):
            raise InvalidParameterError("eta", f"must be finite and >= 0, got {self.etabar!r}")


def reduce(params: ModelParams) -> DimensionlessParams:
    """Map physical parameters onto the dimensionless set (lam, etabar, cutbar)."""
    m, hb, w0 = params.mass, params.hbar, params.omega0
    return DimensionlessParams(
        lam=hb * params.lambda0 / (m * m * w0**3),
        etabar=params.eta / (m * w0),
        cutbar=params.cutoff / w0,
    )


def expand(dims: DimensionlessParams, mass=1.0, hbar=1.0, omega0=1.0) -> ModelParams:
    """Inverse of :func:`reduce` for a chosen set of units."""
    return ModelParams(
        mass=mass,
        hbar=hbar,
        omega0=omega0,
        lambda0=dims.lam * mass * mass * omega0**3 / hbar,
        eta=dims.etabar * mass * omega0,
        cutoff=dims.cutbar * omega0,
    )


@dataclass(frozen=True, eq=False)
class PotentialGrid:
    """Even potential V_bar(q_bar) stored on the half line [0, qmax].

    The value at q_bar < 0 is defined by V_bar(-q_bar) = V_bar(q_bar); only the
    non-negative half is stored.
    """

    qmax: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.qmax) and self.qmax > 0):
            raise InvalidGridError("qmax", f"must be > 0, got {self.qmax!r}")
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < MIN_GRID_POINTS:
            raise InvalidGridError("n", f"need at least {MIN_GRID_POINTS} points, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InvalidGridError("values", "potential contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.size

    @property
    def spacing(self):
        return self.qmax / (self.n - 1)

    @property
    def q(self):
        return np.linspace(0.0, self.qmax, self.n)

    def with_values(self, values):
        return PotentialGrid(self.qmax, values)

    def even_extension(self):
        """Return (q, V) on the full symmetric grid [-qmax, qmax]."""
        q = self.q
        return (np.concatenate([-q[:0:-1], q]),
                np.concatenate([self.values[:0:-1], self.values]))

    def __eq__(self, other):
        if not isinstance(other, PotentialGrid):
            return NotImplemented
        return self.qmax == other.qmax and np.array_equal(self.values, other.values)

    __hash__ = None


def sample(func, qmax=DEFAULT_QMAX, n=DEFAULT_N) -> PotentialGrid:
    """Sample an even function of q_bar on the half grid."""
    _check_grid(qmax, n)
    q = np.linspace(0.0, qmax, n)
    return PotentialGrid(qmax, func(q))


def _check_grid(qmax, n):
    if not (math.isfinite(qmax) and qmax > 0):
        raise InvalidGridError("qmax", f"must be > 0, got {qmax!r}")
    if int(n) != n or n < MIN_GRID_POINTS:
        raise InvalidGridError("n", f"need an integer >= {MIN_GRID_POINTS}, got {n!r}")


def bare_potential(lam, qmax=DEFAULT_QMAX, n=DEFAULT_N) -> PotentialGrid:
    """Dimensionless double well -q^2/2 + lam q^4 on the half grid."""
    _require_positive("lambda0", lam)
    return sample(lambda q: -0.5 * q**2 + lam * q**4, qmax, int(n))


def harmonic_potential(omega_sq=1.0, qmax=DEFAULT_QMAX, n=DEFAULT_N) -> PotentialGrid:
    return sample(lambda q: 0.5 * omega_sq * q**2, qmax, int(n))


def classical_minimum(lam):
    """Position of the right-hand classical minimum, q_bar^2 = 1/(4 lam)."""
    return 1.0 / (2.0 * math.sqrt(lam))


def r_ratio(lam):
    """Zero-point energy over barrier height, r = 8 sqrt(2) lam."""
    return 8.0 * math.sqrt(2.0) * lam
