"""Short-time asymptotics of the central slope response.

Contents:

* ``tail_sum``: Euler-Maclaurin style approximation of ``sum_{k>N} g(k)``
  by an integral plus derivative corrections at ``N`` (through ``g^(7)``).
* ``closed_sum_1/2/3``: closed forms of ``sum_k (1 + 4 k^2 a^2)^-m``.
* ``asymptotic_coefficients`` / ``evaluate_polynomial``: the cubic
  ``1/2 - coth(pi/2a)/2 tau + 3/8 tau^2 + c3 tau^3``.
* ``convolve_moment``: response to a non-impulsive moment history.
* ``residual_order_fit``: order of the series-minus-polynomial residual.
* ``split_sum_replay``: numerical replay of the head/tail split used to
  derive the polynomial, with the head summed exactly and the tail
  approximated by ``tail_sum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .core import BeamModel, LogLogFit, TimeSeries, loglog_fit
from .modal import DEFAULT_TERMS, ModalSeries, slope_values

__all__ = [
    "AsymptoticPolynomial",
    "LEMMA_WEIGHTS",
    "MomentProfile",
    "SplitSum",
    "TailFunction",
    "asymptotic_coefficients",
    "closed_sum",
    "closed_sum_1",
    "closed_sum_2",
    "closed_sum_3",
    "convolve_moment",
    "evaluate_polynomial",
    "power_tail_function",
    "residual_order_fit",
    "split_sum_replay",
    "tail_sum",
]

# (derivative order, weight) of the boundary corrections, in order
LEMMA_WEIGHTS = ((1, -1 / 12), (3, 1 / 720), (5, -1 / 30240), (7, 1 / 1209600))

DEFAULT_FIT_WINDOW = (0.02, 0.2)

# above this scale the closed forms cancel badly; use the zeta expansion
_ZETA_SWITCH = 4.0


# ---------------------------------------------------------------------------
# hyperbolic helpers that stay finite for huge arguments
# ---------------------------------------------------------------------------

def _coth(x: float) -> float:
    if 2 * x > 700:
        return 1.0
    return 1.0 + 2.0 / math.expm1(2 * x)


def _csch2(x: float) -> float:
    e = math.exp(-2 * x)
    return 4 * e / math.expm1(-2 * x) ** 2


def _check_scale(a: float) -> float:
    a = float(a)
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"invalid scale: a must be positive, got {a}")
    return a


# ---------------------------------------------------------------------------
# tail sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailFunction:
    """A decaying summand ``g`` with what the tail formula needs.

    Attributes
    ----------
    value : callable
        ``g(y)``.
    integral_tail : callable
        ``N -> integral of g over [N, inf)``, in closed form.
    derivatives : sequence of four callables, optional
        ``g'``, ``g'''``, ``g^(5)``, ``g^(7)``. When omitted they are taken
        by central differences of ``value`` evaluated in 40-digit mpmath
        arithmetic, so ``value`` must accept mpmath numbers.
    check_from : float
        The decay check in :func:`tail_sum` is applied for ``N >= check_from``.
    fd_step : float, optional
        Difference step; default ``max(1e-4 N, 1e-3)``. Error is ``O(step^2)``.
    """

    value: Callable
    integral_tail: Callable
    derivatives: Sequence[Callable] | None = None
    check_from: float = 0.0
    fd_step: float | None = None

    def __post_init__(self):
        if self.derivatives is not None:
            d = tuple(self.derivatives)
            if len(d) != len(LEMMA_WEIGHTS):
                raise ValueError("derivatives must be (g', g''', g^(5), g^(7))")
            object.__setattr__(self, "derivatives", d)

    def boundary_derivatives(self, N: float) -> list[float]:
        if self.derivatives is not None:
            return [float(d(N)) for d in self.derivatives]
        import mpmath as mp

        h = self.fd_step if self.fd_step is not None else max(1e-4 * N, 1e-3)
        with mp.workdps(40):
            return [float(mp.diff(self.value, mp.mpf(N), n, h=mp.mpf(h)))
                    for n, _ in LEMMA_WEIGHTS]


def tail_sum(tf: TailFunction, N: float) -> float:
    """Approximate ``sum_{k=N+1}^inf g(k)``.

    ``int_N^inf g - g(N)/2 - g'(N)/12 + g'''(N)/720 - g5(N)/30240 + g7(N)/1209600``

    Raises ``ValueError`` when the boundary corrections do not decay
    (each must be no larger in magnitude than the one before), since the
    expansion is then being used outside its asymptotic regime.
    """
    g = float(tf.value(N))
    corrections = [w * d for (_, w), d in zip(LEMMA_WEIGHTS, tf.boundary_derivatives(N))]
    if not all(math.isfinite(c) for c in corrections + [g]):
        raise ValueError(f"lemma hypotheses violated at N={N}: non-finite derivative")
    if N >= tf.check_from:
        mags = [abs(c) for c in corrections]
        if any(later > earlier for earlier, later in zip(mags, mags[1:])):
            raise ValueError(f"lemma hypotheses violated at N={N}: derivative corrections grow")
    return float(tf.integral_tail(N)) - g / 2 + math.fsum(corrections)


def _power_taylor(y0: float, b: float, m: int, order: int) -> list[float]:
    """Taylor coefficients of (1 + b y^2)^-m about y0, by the power recurrence."""
    w = (1.0 + b * y0 * y0, 2.0 * b * y0, b)
    alpha = -m
    g = [w[0] ** alpha]
    for n in range(1, order + 1):
        acc = 0.0
        for j in (1, 2):
            if j <= n:
                acc += ((alpha + 1) * j - n) * w[j] * g[n - j]
        g.append(acc / (n * w[0]))
    return g


def _power_integral_tail(m: int, s: float, N: float) -> float:
    """int_N^inf (1 + s^2 y^2)^-m dy for m >= 1."""
    z = s * N
    if z >= 1.0:
        u = 1.0 / z
        return u ** (2 * m - 1) / ((2 * m - 1) * s) * special.hyp2f1(m, m - 0.5, m + 0.5, -u * u)
    full = math.sqrt(math.pi) * math.gamma(m - 0.5) / (2 * math.gamma(m) * s)
    return full - N * special.hyp2f1(m, 0.5, 1.5, -z * z)


def power_tail_function(m: int, a: float) -> TailFunction:
    """``g(y) = (1 + 4 a^2 y^2)^-m`` with exact derivatives and integral tail."""
    if m not in (1, 2, 3):
        raise ValueError("power must be 1, 2 or 3")
    a = _check_scale(a)
    b = 4 * a * a

    def deriv(n):
        return lambda y: math.factorial(n) * _power_taylor(float(y), b, m, n)[n]

    return TailFunction(
        value=lambda y: (1 + b * y * y) ** -m,
        integral_tail=lambda N: _power_integral_tail(m, 2 * a, float(N)),
        derivatives=tuple(deriv(n) for n, _ in LEMMA_WEIGHTS),
    )


# ---------------------------------------------------------------------------
# closed-form sums
# ---------------------------------------------------------------------------

def _zeta_sum(m: int, a: float) -> float:
    # sum_j (-1)^j C(m+j-1, j) zeta(2(m+j)) u^(m+j), u = 1/(4 a^2)
    u = 1.0 / (4 * a * a)
    total = 0.0
    for j in range(200):
        term = (-1) ** j * math.comb(m + j - 1, j) * special.zeta(2 * (m + j)) * u ** (m + j)
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def closed_sum_1(a: float) -> float:
    """``sum_{k>=1} 1 / (1 + 4 k^2 a^2)``."""
    a = _check_scale(a)
    if a > _ZETA_SWITCH:
        return _zeta_sum(1, a)
    c = _coth(math.pi / (2 * a))
    return (math.pi * c - 2 * a) / (4 * a)


def closed_sum_2(a: float) -> float:
    """``sum_{k>=1} 1 / (1 + 4 k^2 a^2)^2``."""
    a = _check_scale(a)
    if a > _ZETA_SWITCH:
        return _zeta_sum(2, a)
    x = math.pi / (2 * a)
    c, q = _coth(x), _csch2(x)  # pi^2 c^2 - pi^2 == pi^2 csch^2
    return (math.pi**2 * q + 2 * math.pi * c * a - 8 * a * a) / (16 * a * a)


def closed_sum_3(a: float) -> float:
    """``sum_{k>=1} 1 / (1 + 4 k^2 a^2)^3``."""
    a = _check_scale(a)
    if a > _ZETA_SWITCH:
        return _zeta_sum(3, a)
    x = math.pi / (2 * a)
    c, q = _coth(x), _csch2(x)
    num = (math.pi**3 * c * q + 3 * math.pi**2 * a * q
           + 6 * math.pi * c * a * a - 32 * a**3)
    return num / (64 * a**3)


def closed_sum(m: int, a: float) -> float:
    return {1: closed_sum_1, 2: closed_sum_2, 3: closed_sum_3}[m](a)


# ---------------------------------------------------------------------------
# the cubic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticPolynomial:
    """``c0 + c1 tau + c2 tau^2 + c3 tau^3`` for the central slope.

    The coefficients already include the ``2/L`` prefactor stored in
    ``scale``; divide by it to recover the coefficients of the bare sum.
    """

    a: float
    c0: float
    c1: float
    c2: float
    c3: float
    scale: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.coefficients):
            raise ValueError("non-finite asymptotic coefficient")

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.c0, self.c1, self.c2, self.c3)

    def unscaled(self) -> tuple[float, ...]:
        return tuple(c / self.scale for c in self.coefficients)

    def truncated(self, order: int) -> "AsymptoticPolynomial":
        """Drop the terms above ``tau**order``."""
        names = ("c0", "c1", "c2", "c3")
        return replace(self, **{n: 0.0 for n in names[order + 1:]})

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return ((self.c3 * tau + self.c2) * tau + self.c1) * tau + self.c0


def asymptotic_coefficients(beam: BeamModel) -> AsymptoticPolynomial:
    """Short-time cubic for a unit angular impulse at midspan.

    Raises for Euler-Bernoulli input: without rotary inertia the slope
    grows like ``1/sqrt(t)`` and has no finite limit.
    """
    if beam.is_euler_bernoulli:
        raise ValueError("no bounded asymptote: Euler-Bernoulli slope response diverges like 1/sqrt(t)")
    if not beam.is_unit:
        raise ValueError("asymptotic coefficients need a nondimensional beam; use nondimensionalize()")
    a = beam.a
    x = math.pi / (2 * a)
    c = _coth(x)
    # pi/(cosh(pi/a) - 1) == (pi/2) csch^2(pi/2a); underflows to 0 for long beams
    c3 = (math.pi / 2) * _csch2(x) / (24 * a) - 5 * c / 24
    return AsymptoticPolynomial(a=a, c0=0.5, c1=-c / 2, c2=0.375, c3=c3, scale=2 / beam.length)


def evaluate_polynomial(ap: AsymptoticPolynomial, tau_grid) -> TimeSeries:
    tau = np.asarray(tau_grid, dtype=float)
    return TimeSeries(tau, ap(tau), "asymptotic", {"a": ap.a, "coefficients": list(ap.coefficients)})


# ---------------------------------------------------------------------------
# convolution with a moment history
# ---------------------------------------------------------------------------

PROFILE_KINDS = ("impulse", "constant", "sampled")


@dataclass(frozen=True)
class MomentProfile:
    """Moment history ``M(tau)``; ``sampled`` profiles are scaled by ``amplitude``."""

    kind: str
    amplitude: float = 1.0
    samples: TimeSeries | None = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if (self.kind == "sampled") != (self.samples is not None):
            raise ValueError("samples are required for, and only for, sampled profiles")

    def values_on(self, tau: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(tau.size, float(self.amplitude))
        if self.kind == "sampled":
            s = self.samples
            if s.tau.size != tau.size or not np.allclose(s.tau, tau, rtol=1e-12, atol=1e-12):
                raise ValueError("incompatible grids: moment samples and kernel differ")
            return self.amplitude * s.values
        raise ValueError("an impulse has no samples")


def _kernel(beam: BeamModel, tau: np.ndarray, kernel: str, n_terms: int, method: str) -> np.ndarray:
    if kernel == "asymptotic":
        return asymptotic_coefficients(beam)(tau)
    if kernel == "series":
        ms = ModalSeries(beam, n_terms)
        k = slope_values(ms, ms.load_pos, tau, method)
        # right limit at the jump instead of the series' midpoint value
        k[tau == 0] = 0.5
        return k
    raise ValueError(f"unknown kernel {kernel!r}; expected 'asymptotic' or 'series'")


def convolve_moment(beam: BeamModel, profile: MomentProfile, tau_grid,
                    kernel: str = "asymptotic", n_terms: int = DEFAULT_TERMS,
                    method: str = "truncated") -> TimeSeries:
    """Central slope under ``M(tau)``: trapezoidal ``int_0^tau M(tau - xi) K(xi) dxi``.

    ``K`` is the unit impulse response (the ``2/L`` factor included),
    from the cubic or from the modal series. The grid must start at 0.
    """
    tau = np.asarray(tau_grid, dtype=float)
    grid = TimeSeries(tau, np.zeros_like(tau), "convolution")
    if tau[0] != 0:
        raise ValueError("incompatible grids: convolution grid must start at tau = 0")
    K = _kernel(beam, tau, kernel, n_terms, method)
    meta = {"kernel": kernel, "profile": profile.kind, "amplitude": profile.amplitude}
    if profile.kind == "impulse":
        return TimeSeries(tau, profile.amplitude * K, "convolution", meta)
    M = profile.values_on(tau)
    full = np.convolve(M, K)[: tau.size]
    out = grid.step * (full - 0.5 * (M * K[0] + M[0] * K))
    return TimeSeries(tau, out, "convolution", meta)


# ---------------------------------------------------------------------------
# residual order
# ---------------------------------------------------------------------------

def residual_order_fit(series: TimeSeries, poly: TimeSeries,
                       fit_window: tuple[float, float] = DEFAULT_FIT_WINDOW) -> LogLogFit:
    """Fit ``|series - poly| ~ C tau^p`` over ``fit_window``.

    The default window skips the truncation oscillations right after
    ``tau = 0`` and stops before higher powers take over.
    """
    if series.tau.size != poly.tau.size or not np.allclose(series.tau, poly.tau, rtol=0, atol=1e-12):
        raise ValueError("incompatible grids: series and polynomial differ")
    lo, hi = fit_window
    mask = (series.tau >= lo) & (series.tau <= hi)
    return loglog_fit(series.tau[mask], series.values[mask] - poly.values[mask])


# ---------------------------------------------------------------------------
# replay of the head/tail split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSum:
    tau: float
    split: int
    head: float
    tail: float
    scale: float
    extra: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.head + self.tail

    @property
    def slope(self) -> float:
        return self.scale * self.total


def _frequency_tail_integral(a: float, tau: float, N: float) -> float:
    """int_N^inf sin(w(y) tau) / sqrt(1 + 4 a^2 y^2) dy, in the frequency variable."""
    p_n = 2 * a * N
    w_n = p_n * p_n / math.sqrt(1 + p_n * p_n)

    def amplitude(w):
        p2 = 0.5 * (w * w + w * math.sqrt(w * w + 4))
        return (1 + p2) / (math.sqrt(p2) * (2 + p2))

    val, _ = integrate.quad(amplitude, w_n, np.inf, weight="sin", wvar=tau, limlst=200)
    return val / (2 * a)


def split_sum_replay(beam: BeamModel, tau: float, split: int | None = None) -> SplitSum:
    """Evaluate the central-slope sum as head (k <= N, exact) plus tail (``tail_sum``).

    ``N`` defaults to ``floor(1/sqrt(tau))``.
    """
    import mpmath as mp

    if not beam.is_unit:
        raise ValueError("replay needs a nondimensional beam")
    tau = float(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    a = beam.a
    N = int(math.floor(1 / math.sqrt(tau))) if split is None else int(split)
    if N < 1:
        raise ValueError("split index must be at least 1")

    def f(y):
        q = 4 * a * a * y * y
        return mp.sin(q / mp.sqrt(1 + q) * tau) / mp.sqrt(1 + q)

    head = math.fsum(float(f(k)) for k in range(1, N + 1))
    tf = TailFunction(value=f, integral_tail=lambda n: _frequency_tail_integral(a, tau, n))
    tail = tail_sum(tf, N)
    return SplitSum(tau=tau, split=N, head=head, tail=tail, scale=2 / beam.length)
