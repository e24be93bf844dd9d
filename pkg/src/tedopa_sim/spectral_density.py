"""Bath spectral densities J(omega), their thermal extension and integrals.

All frequencies are in cm^-1. Every density carries hard cutoffs
``omega_min``/``omega_max``; outside them it evaluates to zero.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from tedopa_sim.errors import InvalidInputError, NumericalError
from tedopa_sim.units import K_B_CM1_PER_K, beta_from_temperature


def _as_output(values, scalar):
    return float(values) if scalar else values


@dataclass(frozen=True, kw_only=True)
class SpectralDensity:
    """Base class; subclasses implement ``_raw`` on the open support."""

    omega_min: float
    omega_max: float

    def __post_init__(self):
        if not self.omega_min < self.omega_max:
            raise InvalidInputError(
                f"omega_min ({self.omega_min}) must be below omega_max ({self.omega_max})"
            )

    kind = "abstract"

    def __call__(self, omega):
        scalar = np.ndim(omega) == 0
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.zeros_like(w)
        inside = (w >= self.omega_min) & (w <= self.omega_max)
        if inside.any():
            out[inside] = self._raw(w[inside])
        return _as_output(out[0] if scalar else out, scalar)

    def _raw(self, w):
        raise NotImplementedError

    def over_omega(self, omega):
        """J(omega)/omega with the removable point omega=0 filled by its limit."""
        scalar = np.ndim(omega) == 0
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.empty_like(w)
        zero = w == 0.0
        nz = ~zero
        out[nz] = self(w[nz]) / w[nz]
        if zero.any():
            inside = self.omega_min <= 0.0 <= self.omega_max
            out[zero] = self.slope_at_zero() if inside else 0.0
        return _as_output(out[0] if scalar else out, scalar)

    def slope_at_zero(self):
        """lim J(omega)/omega for omega -> 0+."""
        raise NotImplementedError

    def with_cutoffs(self, omega_min=None, omega_max=None):
        return dataclasses.replace(
            self,
            omega_min=self.omega_min if omega_min is None else omega_min,
            omega_max=self.omega_max if omega_max is None else omega_max,
        )

    def without_cutoffs(self):
        """The same functional form on the whole real line."""
        return self.with_cutoffs(-math.inf, math.inf)


@dataclass(frozen=True, kw_only=True)
class OhmicExponential(SpectralDensity):
    """J(omega) = 2 pi alpha omega exp(-omega/omega_c) for omega >= 0.

    Default hard cutoffs are [0, 10 omega_c].
    """

    alpha: float = 0.25
    omega_c: float = 100.0
    omega_min: float = 0.0
    omega_max: float = field(default=None)

    kind = "ohmic_exponential"

    def __post_init__(self):
        if self.omega_max is None:
            object.__setattr__(self, "omega_max", 10.0 * self.omega_c)
        if self.alpha < 0 or self.omega_c <= 0:
            raise InvalidInputError("alpha must be >= 0 and omega_c > 0")
        super().__post_init__()

    def _raw(self, w):
        wp = np.maximum(w, 0.0)
        return 2.0 * math.pi * self.alpha * wp * np.exp(-wp / self.omega_c)

    def slope_at_zero(self):
        return 2.0 * math.pi * self.alpha


@dataclass(frozen=True, kw_only=True)
class Tabulated(SpectralDensity):
    """Linearly interpolated samples; cutoffs default to the sample range."""

    omega: tuple = ()
    values: tuple = ()
    omega_min: float = field(default=None)
    omega_max: float = field(default=None)

    kind = "tabulated"

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        j = np.asarray(self.values, dtype=float)
        if w.size == 0 or w.size != j.size:
            raise InvalidInputError("tabulated density needs equally many, non-empty samples")
        if np.any(np.diff(w) <= 0):
            raise InvalidInputError("tabulated frequencies must be strictly increasing")
        object.__setattr__(self, "omega", tuple(w.tolist()))
        object.__setattr__(self, "values", tuple(j.tolist()))
        if self.omega_min is None:
            object.__setattr__(self, "omega_min", float(w[0]))
        if self.omega_max is None:
            object.__setattr__(self, "omega_max", float(w[-1]))
        super().__post_init__()

    def _raw(self, w):
        return np.interp(w, self.omega, self.values, left=0.0, right=0.0)

    def slope_at_zero(self):
        h = 1e-9 * max(1.0, abs(self.omega[-1] - self.omega[0]))
        j0 = float(np.interp(0.0, self.omega, self.values, left=0.0, right=0.0))
        if j0 != 0.0:
            return math.inf
        return float(np.interp(h, self.omega, self.values, left=0.0, right=0.0)) / h


@dataclass(frozen=True, kw_only=True)
class Thermalized(SpectralDensity):
    """Temperature-dependent density on positive and negative frequencies.

    J_beta(w) = sign(w) J(|w|) (1 + coth(beta w / 2)) / 2, evaluated in the
    cancellation-free form J(|w|) / (1 - exp(-beta w)) for w > 0 and
    J(|w|) / (exp(beta |w|) - 1) for w < 0.
    """

    base: SpectralDensity = None
    beta: float = 1.0

    kind = "thermalized"

    def __post_init__(self):
        super().__post_init__()
        if isinstance(self.base, Thermalized) or self.base is None:
            raise InvalidInputError("thermalized density needs a zero-temperature base")
        if not self.beta > 0:
            raise InvalidInputError("beta must be positive")
        if not self.omega_min < 0.0 < self.omega_max:
            raise InvalidInputError("thermalized support must straddle omega = 0")

    @property
    def temperature(self):
        return 1.0 / (K_B_CM1_PER_K * self.beta)

    def _raw(self, w):
        out = np.empty_like(w)
        j_abs = self.base(np.abs(w))
        slope = self.base.slope_at_zero()
        # near zero use J'(0)/beta + J'(0) w/2; avoids 0/0 for denormal w
        small = np.abs(self.beta * w) < 1e-8 if math.isfinite(slope) else w == 0.0
        pos = (w > 0.0) & ~small
        neg = (w < 0.0) & ~small
        out[pos] = j_abs[pos] / -np.expm1(-self.beta * w[pos])
        with np.errstate(over="ignore"):
            out[neg] = j_abs[neg] / np.expm1(self.beta * np.abs(w[neg]))
        out[small] = slope / self.beta + 0.5 * slope * w[small]
        return out

    def slope_at_zero(self):
        if self.base.slope_at_zero() != 0.0:
            # J_beta(0) > 0: J_beta/omega has a simple pole, handled as a principal value
            return math.inf
        return 0.0

    def without_cutoffs(self):
        return dataclasses.replace(
            self, base=self.base.without_cutoffs(), omega_min=-math.inf, omega_max=math.inf
        )


def evaluate(sd, omega):
    """J(omega); zero outside the hard cutoffs."""
    return sd(omega)


def thermalize(sd, temperature, omega_min=None, omega_max=None):
    """Thermal spectral density at ``temperature`` kelvin.

    The support defaults to [-omega_max, omega_max] of ``sd``.
    """
    if isinstance(sd, Thermalized):
        raise InvalidInputError("density is already thermalized")
    if not temperature > 0:
        raise InvalidInputError(f"temperature must be positive, got {temperature}")
    upper = sd.omega_max if omega_max is None else omega_max
    lower = -upper if omega_min is None else omega_min
    return Thermalized(
        omega_min=lower,
        omega_max=upper,
        base=sd,
        beta=beta_from_temperature(temperature),
    )


_QUAD_LIMIT = 400


def _quad(f, a, b, scale):
    value, abserr, info = integrate.quad(
        f, a, b, epsabs=1e-10 * scale, epsrel=1e-12, limit=_QUAD_LIMIT, full_output=True
    )[:3]
    if abserr > 1e-8 * max(abs(value), scale):
        raise NumericalError(
            f"quadrature over [{a}, {b}] did not converge after "
            f"{info['last']} subdivisions (error estimate {abserr:.3e})",
            residual=abserr,
        )
    return value


def _scale(sd):
    # magnitude of J/omega used for the absolute tolerance
    if isinstance(sd, OhmicExponential):
        return max(2.0 * math.pi * sd.alpha * sd.omega_c, 1e-300)
    if isinstance(sd, Thermalized):
        return _scale(sd.base)
    if isinstance(sd, Tabulated):
        return max(float(np.max(np.abs(sd.values))), 1e-300)
    return 1.0


def reorganization_energy(sd, lower, upper):
    """Integral of J(omega)/omega over [lower, upper] (bounds may be infinite).

    For thermal densities J(0) > 0, so an interval containing zero is taken
    as a principal value.
    """
    if lower == upper:
        return 0.0
    if lower > upper:
        raise InvalidInputError(f"lower bound {lower} exceeds upper bound {upper}")
    lower = max(lower, sd.omega_min)
    upper = min(upper, sd.omega_max)
    if lower >= upper:
        return 0.0
    scale = _scale(sd)

    def g(w):
        return sd.over_omega(w)

    if not lower < 0.0 < upper:
        return _quad(g, lower, upper, scale)

    a = min(-lower, upper)

    def folded(w):
        return (sd(w) - sd(-w)) / w if w > 0.0 else 0.0

    total = _quad(folded, 0.0, a, scale)
    if upper > a:
        total += _quad(g, a, upper, scale)
    if -lower > a:
        total += _quad(g, lower, -a, scale)
    return total


def missing_reorganization_ratio(sd):
    """Share of the reorganization energy lost to the hard cutoffs of ``sd``."""
    full = sd.without_cutoffs()
    total = reorganization_energy(full, -math.inf, math.inf)
    missing = 0.0
    if math.isfinite(sd.omega_max):
        missing += reorganization_energy(full, sd.omega_max, math.inf)
    if math.isfinite(sd.omega_min):
        missing += reorganization_energy(full, -math.inf, sd.omega_min)
    return missing / total
