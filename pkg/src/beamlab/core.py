"""Beam parameters, dimensional analysis and the shared time-series container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "BASE_DIMENSIONS",
    "BeamModel",
    "DimensionMatrix",
    "Quantity",
    "ReferenceScales",
    "SOURCES",
    "TimeSeries",
    "loglog_fit",
    "LogLogFit",
    "nondimensionalize",
    "reference_scales",
    "solve_dimensional_exponents",
    "uniform_grid",
]

BASE_DIMENSIONS = ("mass", "length", "time")
SOURCES = ("series", "asymptotic", "fem", "convolution")

# grid spacing tolerance, relative to the largest |tau| on the grid
_UNIFORM_RTOL = 1e-12


@dataclass(frozen=True)
class BeamModel:
    """Simply supported beam with optional rotary inertia.

    In nondimensional form ``rho_A = rho_I = EI = 1`` and only ``length``
    matters. ``rho_I = 0`` selects the Euler-Bernoulli model.

    Attributes
    ----------
    rho_A : float
        Mass per unit length.
    rho_I : float
        Rotary inertia per unit length.
    EI : float
        Flexural rigidity.
    length : float
        Beam length ``L``.
    a : float
        Wavenumber scale ``pi / L``, fixed at construction.
    """

    rho_A: float = 1.0
    rho_I: float = 1.0
    EI: float = 1.0
    length: float = math.pi
    a: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("rho_A", "EI", "length"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"invalid beam: {name} must be positive, got {value}")
        if not (np.isfinite(self.rho_I) and self.rho_I >= 0):
            raise ValueError(f"invalid beam: rho_I must be non-negative, got {self.rho_I}")
        object.__setattr__(self, "a", math.pi / self.length)

    @property
    def is_euler_bernoulli(self) -> bool:
        return self.rho_I == 0

    @property
    def is_unit(self) -> bool:
        """True when the beam is already in nondimensional form."""
        return self.rho_A == 1 and self.rho_I == 1 and self.EI == 1

    @classmethod
    def from_mapping(cls, cfg: Mapping) -> "BeamModel":
        """Build from a ``beam { rho_A, rho_I, EI, length }`` config block."""
        known = {"rho_A", "rho_I", "EI", "length"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown beam keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in cfg.items()})

    def to_dict(self) -> dict:
        return {"rho_A": self.rho_A, "rho_I": self.rho_I, "EI": self.EI, "length": self.length}


@dataclass(frozen=True)
class Quantity:
    """A named physical quantity with integer exponents over (mass, length, time)."""

    name: str
    exponents: tuple[int, int, int]

    def __post_init__(self):
        if len(self.exponents) != len(BASE_DIMENSIONS):
            raise ValueError(
                f"quantity {self.name!r} needs {len(BASE_DIMENSIONS)} base-dimension exponents"
            )
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))


@dataclass(frozen=True)
class DimensionMatrix:
    """Quantities entering a dimensionless product, one of them pinned to exponent 1."""

    quantities: tuple[Quantity, ...]
    target: str

    def __post_init__(self):
        object.__setattr__(self, "quantities", tuple(self.quantities))
        names = [q.name for q in self.quantities]
        if len(set(names)) != len(names):
            raise ValueError("duplicate quantity names")
        if self.target not in names:
            raise ValueError(f"target {self.target!r} is not one of the quantities")
        if len(names) < 2:
            raise ValueError("at least one free quantity must remain after pinning the target")

    @classmethod
    def from_dict(cls, quantities: Mapping[str, Sequence[int]], target: str) -> "DimensionMatrix":
        return cls(tuple(Quantity(k, tuple(v)) for k, v in quantities.items()), target)

    def matrix(self) -> np.ndarray:
        """Base dimensions as rows, quantities as columns."""
        return np.array([q.exponents for q in self.quantities], dtype=int).T


def solve_dimensional_exponents(dm: DimensionMatrix) -> dict[str, Fraction]:
    """Exponents that make the product of the quantities dimensionless.

    The target's exponent is pinned to 1 and the remaining exponents are
    solved for exactly, in rational arithmetic.

    Raises
    ------
    ValueError
        ``"underdetermined"`` if more than one free direction remains,
        ``"inconsistent dimensions"`` if no exponent choice works.
    """
    import sympy

    free = [q for q in dm.quantities if q.name != dm.target]
    target = next(q for q in dm.quantities if q.name == dm.target)
    A = sympy.Matrix([list(q.exponents) for q in free]).T
    b = -sympy.Matrix(list(target.exponents))
    try:
        sol, params = A.gauss_jordan_solve(b)
    except ValueError:
        raise ValueError("inconsistent dimensions") from None
    if params.shape[0] > 0:
        raise ValueError("underdetermined")
    out = {dm.target: Fraction(1)}
    for q, v in zip(free, sol):
        v = sympy.Rational(v)
        out[q.name] = Fraction(int(v.p), int(v.q))
    return {q.name: out[q.name] for q in dm.quantities}


@dataclass(frozen=True)
class ReferenceScales:
    """Units of mass, length and time that make ``rho_A = rho_I = EI = 1``.

    ``rotation`` converts a nondimensional slope response to a physical
    one for a unit angular impulse: ``theta_phys = M0 * rotation * theta``.
    """

    mass: float
    length: float
    time: float
    rotation: float

    def to_tau(self, t):
        return np.asarray(t, dtype=float) / self.time

    def to_time(self, tau):
        return np.asarray(tau, dtype=float) * self.time

    def physical_beam(self, beam: BeamModel) -> BeamModel:
        """Undo the scaling of a nondimensional beam."""
        m, ell, T = self.mass, self.length, self.time
        return BeamModel(
            rho_A=beam.rho_A * m / ell,
            rho_I=beam.rho_I * m * ell,
            EI=beam.EI * m * ell**3 / T**2,
            length=beam.length * ell,
        )


def reference_scales(beam: BeamModel) -> ReferenceScales:
    if beam.rho_I <= 0:
        raise ValueError("invalid beam: rho_I must be positive to define a rotary time scale")
    ell = math.sqrt(beam.rho_I / beam.rho_A)
    mass = beam.rho_A * ell
    time = beam.rho_I / math.sqrt(beam.rho_A * beam.EI)
    return ReferenceScales(mass=mass, length=ell, time=time, rotation=1.0 / math.sqrt(beam.EI * beam.rho_I))


def nondimensionalize(beam: BeamModel, t) -> tuple[BeamModel, np.ndarray]:
    """Rescale a physical beam and time grid to unit ``rho_A``, ``rho_I``, ``EI``.

    Returns the unit beam (length measured in radii of gyration) and
    ``tau = t * sqrt(rho_A * EI) / rho_I``, which equals ``t * sqrt(E A / (rho I))``.
    """
    scales = reference_scales(beam)
    unit = BeamModel(1.0, 1.0, 1.0, beam.length / scales.length)
    return unit, scales.to_tau(t)


def uniform_grid(t_max: float, dt: float, t0: float = 0.0) -> np.ndarray:
    """``t0, t0 + dt, ...`` up to ``t_max`` (inclusive, to rounding)."""
    if dt <= 0:
        raise ValueError("grid step must be positive")
    if t_max < t0 + dt:
        raise ValueError("grid must contain at least two points")
    n = int(math.floor((t_max - t0) / dt + 1e-9)) + 1
    return t0 + dt * np.arange(n)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Response samples on a uniform, non-negative time grid."""

    tau: np.ndarray
    values: np.ndarray
    source: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if tau.ndim != 1 or values.shape != tau.shape:
            raise ValueError("tau and values must be 1-D arrays of equal length")
        if tau.size < 2:
            raise ValueError("a time series needs at least two samples")
        if tau[0] < 0:
            raise ValueError("tau must be non-negative")
        steps = np.diff(tau)
        h = (tau[-1] - tau[0]) / (tau.size - 1)
        if h <= 0 or np.max(np.abs(steps - h)) > _UNIFORM_RTOL * max(h, np.max(np.abs(tau))):
            raise ValueError("tau grid must be strictly increasing and uniform")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float((self.tau[-1] - self.tau[0]) / (self.tau.size - 1))

    def __len__(self):
        return self.tau.size

    def window(self, lo: float, hi: float) -> "TimeSeries":
        mask = (self.tau >= lo) & (self.tau <= hi)
        return TimeSeries(self.tau[mask], self.values[mask], self.source, dict(self.metadata))

    def at(self, tau: float) -> float:
        """Linear interpolation at a single time."""
        return float(np.interp(tau, self.tau, self.values))


@dataclass(frozen=True)
class LogLogFit:
    exponent: float
    coefficient: float
    r_squared: float
    n_points: int


def loglog_fit(t, y, min_points: int = 8) -> LogLogFit:
    """Least-squares line through ``log|y|`` against ``log t``."""
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if t.size < min_points:
        raise ValueError(f"insufficient data: {t.size} points, need {min_points}")
    if np.any(t <= 0):
        raise ValueError("log-log fit needs strictly positive abscissae")
    if np.any(y == 0) or not np.all(np.isfinite(y)):
        raise ValueError("log-log fit undefined: zero or non-finite residual")
    lx, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LogLogFit(float(slope), float(math.exp(intercept)), r2, int(t.size))
