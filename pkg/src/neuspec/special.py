"""Bessel evaluation, radial eigenprofiles, and derivative-zero tables.

The radial building block used throughout the package is

    g(r) = 2^((n-2)/2) * Gamma(n/2) * (s*r)^(-(n-2)/2) * J_{n/2}(s*r),

the regular radial factor of the lowest nonconstant Neumann modes on a
ball in R^n.  The normalization makes g(r) = J_1(s*r) for n = 2 and the
spherical profile sin(sr)/(sr)^2 - cos(sr)/(sr) for n = 3, with
g'(0) = s/n in every dimension.  Eigenvalues come from zeros of the
radial derivative: mu = (nu/R)^2 with nu a zero of d/dr[r^(-(n-2)/2)
J_{j+(n-2)/2}(r)] for harmonic degree j.

Raw Bessel values are delegated to scipy.special; zero isolation and the
profile algebra are implemented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from scipy.special import gamma as _gamma
from scipy.special import iv as _iv
from scipy.special import ive as _ive
from scipy.special import jv as _jv

__all__ = [
    "bessel_j",
    "bessel_j_prime",
    "bessel_j_second",
    "bessel_i",
    "bessel_i_scaled",
    "RadialProfile",
    "radial_profile_eval",
    "radial_profile_second",
    "first_radial_deriv_zero",
    "deriv_zero_table",
    "DerivZeroTable",
    "BracketError",
]

# Modified-Bessel arguments above this overflow double precision.
_I_OVERFLOW_LIMIT = 500.0

# Arguments s*r below this are evaluated by power series to avoid the
# 0/0 form in the derivative of the profile.
_SERIES_SWITCH = 0.5


class BracketError(RuntimeError):
    """A zero scan failed to isolate the requested root."""


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0.0:
        raise ValueError(f"Bessel order must be finite and >= 0, got {nu}")
    return nu


def _check_argument(x) -> npt.NDArray[np.float64]:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("Bessel argument must be finite")
    if np.any(x < 0.0):
        raise ValueError("Bessel argument must be >= 0")
    return x


def _scalar_or_array(x, values):
    return float(values) if np.isscalar(x) or np.ndim(x) == 0 else values


def bessel_j(nu: float, x) -> float | npt.NDArray:
    """Bessel function of the first kind J_nu(x) for real order nu >= 0."""
    nu = _check_order(nu)
    xa = _check_argument(x)
    return _scalar_or_array(x, _jv(nu, xa))


def bessel_j_prime(nu: float, x) -> float | npt.NDArray:
    """First derivative dJ_nu/dx via J_nu' = (J_{nu-1} - J_{nu+1})/2.

    The order-zero case reduces to J_0' = -J_1.
    """
    nu = _check_order(nu)
    xa = _check_argument(x)
    if nu == 0.0:
        out = -_jv(1.0, xa)
    else:
        out = 0.5 * (_jv(nu - 1.0, xa) - _jv(nu + 1.0, xa))
    return _scalar_or_array(x, out)


def bessel_j_second(nu: float, x) -> float | npt.NDArray:
    """Second derivative via the doubled recurrence (J_{nu-2} - 2J_nu + J_{nu+2})/4.

    Deliberately does not use the Bessel differential equation, so it can
    serve as one side of residual checks against it.
    """
    nu = _check_order(nu)
    xa = _check_argument(x)
    out = 0.25 * (_jv(nu - 2.0, xa) - 2.0 * _jv(nu, xa) + _jv(nu + 2.0, xa))
    return _scalar_or_array(x, out)


def bessel_i(nu: float, x) -> float | npt.NDArray:
    """Modified Bessel function I_nu(x); raises OverflowError for x > 500.

    Use :func:`bessel_i_scaled` for larger arguments.
    """
    nu = _check_order(nu)
    xa = _check_argument(x)
    if np.any(xa > _I_OVERFLOW_LIMIT):
        raise OverflowError(
            f"I_nu overflows double precision for x > {_I_OVERFLOW_LIMIT:g}; "
            "use bessel_i_scaled"
        )
    return _scalar_or_array(x, _iv(nu, xa))


def bessel_i_scaled(nu: float, x) -> float | npt.NDArray:
    """Exponentially scaled modified Bessel function e^(-x) I_nu(x)."""
    nu = _check_order(nu)
    xa = _check_argument(x)
    return _scalar_or_array(x, _ive(nu, xa))


# ---------------------------------------------------------------------------
# Radial profile
# ---------------------------------------------------------------------------

def _profile_constant(n: int) -> float:
    # 2^((n-2)/2) * Gamma(n/2); equals 1 for n = 2.
    return 2.0 ** ((n - 2) / 2.0) * _gamma(n / 2.0)


def _profile_series(n: int, x: npt.NDArray) -> tuple[npt.NDArray, npt.NDArray]:
    """Power-series evaluation of (g, dg/dx) in the variable x = s*r.

    g(x) = sum_k A_k x^(2k+1) with A_0 = 1/n and ratio
    A_{k+1}/A_k = -1/(4 (k+1) (n/2 + k + 1)); 14 terms reach machine
    precision on the switch interval.
    """
    nu = n / 2.0
    x2 = x * x
    g = np.zeros_like(x)
    dg = np.zeros_like(x)
    ak = 0.5 / nu
    xpow = np.ones_like(x)
    for k in range(14):
        g += ak * xpow * x
        dg += ak * (2 * k + 1) * xpow
        ak *= -0.25 / ((k + 1) * (nu + k + 1))
        xpow = xpow * x2
    return g, dg


@dataclass(frozen=True)
class RadialProfile:
    """Radial factor of the first nonconstant Neumann modes on a ball.

    Parameters
    ----------
    n : int
        Ambient dimension, n >= 2.
    scale : float
        Frequency s = sqrt(mu1) multiplying the radius inside the Bessel
        argument (units 1/length).
    radius : float
        Ball radius R at which the Neumann condition g'(R) = 0 holds.

    The pairing is validated at construction: scale * radius must sit on
    a zero of the radial derivative.
    """

    n: int
    scale: float
    radius: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive and finite")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")
        _, gp = radial_profile_eval(self, self.radius, validate=False)
        ref = abs(self.scale) / self.n  # magnitude of g'(0)
        if abs(gp) > 1e-8 * ref:
            raise ValueError(
                "scale*radius does not sit on a radial derivative zero "
                f"(g'(R) = {gp:.3e})"
            )

    @classmethod
    def for_ball(cls, n: int, radius: float) -> "RadialProfile":
        """Profile of the lowest nonconstant Neumann mode on a ball of given radius."""
        p = first_radial_deriv_zero(n)
        return cls(n=n, scale=p / radius, radius=radius)

    @property
    def mu1(self) -> float:
        """First nonzero Neumann eigenvalue of the Laplacian on the ball."""
        return self.scale * self.scale


def radial_profile_eval(p: RadialProfile, r, validate: bool = True):
    """Evaluate the profile and its derivative, ``(g(r), g'(r))``.

    Accepts scalars or arrays; r = 0 returns the analytic limits
    (0, scale/n) taken from the leading series coefficient.
    """
    if validate and not isinstance(p, RadialProfile):
        raise TypeError("expected a RadialProfile")
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)):
        raise ValueError("radius must be finite")
    if np.any(r_arr < 0.0):
        raise ValueError("radius must be >= 0")

    n, s = p.n, p.scale
    a = (n - 2) / 2.0
    nu = n / 2.0
    c = _profile_constant(n)
    x = s * np.atleast_1d(r_arr)
    g = np.empty_like(x)
    gp = np.empty_like(x)

    small = x < _SERIES_SWITCH
    if np.any(small):
        gs, dgs = _profile_series(n, x[small])
        g[small] = gs
        gp[small] = s * dgs
    big = ~small
    if np.any(big):
        xb = x[big]
        jb = _jv(nu, xb)
        jpb = 0.5 * (_jv(nu - 1.0, xb) - _jv(nu + 1.0, xb))
        w = xb ** (-a)
        g[big] = c * w * jb
        gp[big] = c * s * w * (jpb - a * jb / xb)

    if np.ndim(r) == 0:
        return float(g[0]), float(gp[0])
    return g.reshape(r_arr.shape), gp.reshape(r_arr.shape)


def radial_profile_second(p: RadialProfile, r):
    """Second derivative g''(r), assembled from shifted-order Bessel values.

    Avoids the governing ODE so the result can be used to test it.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0.0):
        raise ValueError("second derivative evaluated for r > 0 only")
    n, s = p.n, p.scale
    a = (n - 2) / 2.0
    nu = n / 2.0
    c = _profile_constant(n)
    x = s * r_arr
    j0 = _jv(nu, x)
    j1 = 0.5 * (_jv(nu - 1.0, x) - _jv(nu + 1.0, x))
    j2 = 0.25 * (_jv(nu - 2.0, x) - 2.0 * j0 + _jv(nu + 2.0, x))
    w = x ** (-a)
    gpp = c * s * s * w * (j2 - 2.0 * a * j1 / x + a * (a + 1.0) * j0 / (x * x))
    if np.ndim(r) == 0:
        return float(gpp[0])
    return gpp.reshape(np.shape(r))


# ---------------------------------------------------------------------------
# Zeros of the radial derivative
# ---------------------------------------------------------------------------

def _deriv_indicator(n: int, j: int, r: npt.NDArray) -> npt.NDArray:
    """r^(a+1) * d/dr[r^(-a) J_{j+a}(r)] with a = (n-2)/2.

    Shares its positive zeros with the radial derivative but is smooth
    through r = 0, which keeps the sign scan honest near the origin.
    """
    a = (n - 2) / 2.0
    nu = j + a
    jp = 0.5 * (_jv(nu - 1.0, r) - _jv(nu + 1.0, r)) if nu > 0 else -_jv(1.0, r)
    return r * jp - a * _jv(nu, r)


def _deriv_indicator_prime(n: int, j: int, r: npt.NDArray) -> npt.NDArray:
    a = (n - 2) / 2.0
    nu = j + a
    jp = 0.5 * (_jv(nu - 1.0, r) - _jv(nu + 1.0, r)) if nu > 0 else -_jv(1.0, r)
    jpp = 0.25 * (_jv(nu - 2.0, r) - 2.0 * _jv(nu, r) + _jv(nu + 2.0, r))
    return (1.0 - a) * jp + r * jpp


def _polish_zero(n: int, j: int, lo: float, hi: float) -> float:
    """Bisection to width 1e-13 followed by one Newton step."""
    flo = float(_deriv_indicator(n, j, np.array([lo]))[0])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-13:
            break
        fmid = float(_deriv_indicator(n, j, np.array([mid]))[0])
        if fmid == 0.0:
            lo = hi = mid
            break
        if (flo < 0.0) == (fmid < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    f = float(_deriv_indicator(n, j, np.array([z]))[0])
    fp = float(_deriv_indicator_prime(n, j, np.array([z]))[0])
    if fp != 0.0:
        step = f / fp
        if abs(step) < 1e-6:
            z -= step
    return z


def _scan_zeros(n: int, j: int, count: int, step: float = 0.1) -> list[float]:
    """First `count` positive zeros of the radial derivative for degree j."""
    a = (n - 2) / 2.0
    nu = j + a
    upper = nu + (count + 2) * math.pi + 10.0
    grid = np.arange(step, upper, step)
    vals = _deriv_indicator(n, j, grid)
    signs = np.sign(vals)
    # Treat exact zeros on grid points as negligible-probability; a zero
    # value still flips the product test below.
    flips = np.nonzero(signs[:-1] * signs[1:] <= 0.0)[0]
    zeros = []
    for k in flips:
        if vals[k] == 0.0 and vals[k + 1] == 0.0:
            continue
        zeros.append(_polish_zero(n, j, float(grid[k]), float(grid[k + 1])))
        if len(zeros) >= count:
            break
    if len(zeros) < count:
        raise BracketError(
            f"zero scan found only {len(zeros)} of {count} radial derivative "
            f"zeros for degree j={j} in dimension n={n} below r={upper:.1f}"
        )
    return zeros


@lru_cache(maxsize=64)
def first_radial_deriv_zero(n: int) -> float:
    """First positive zero p_n of the radial profile derivative (unit scale).

    The first nonzero Neumann eigenvalue of the Laplacian on a ball of
    radius R is (p_n / R)^2.
    """
    if not (2 <= n <= 16):
        raise ValueError("dimension must satisfy 2 <= n <= 16")
    return _scan_zeros(n, 1, 1)[0]


@dataclass(frozen=True)
class DerivZeroTable:
    """Zeros nu_{j,l} of the degree-j radial derivative on the unit ball.

    entries maps (degree j, radial index l) to the l-th positive zero.
    Immutable after construction; rows are gap-free in l and strictly
    increasing.
    """

    n: int
    j_max: int
    l_max: int
    entries: dict = field(repr=False)

    def value(self, j: int, l: int) -> float:
        if not (0 <= j <= self.j_max and 1 <= l <= self.l_max):
            raise KeyError(
                f"(j={j}, l={l}) outside table bounds "
                f"(j_max={self.j_max}, l_max={self.l_max})"
            )
        return self.entries[(j, l)]

    def save_text(self, path) -> None:
        """Write the versioned plain-text snapshot format."""
        lines = ["nu-table v1"]
        for j in range(self.j_max + 1):
            for l in range(1, self.l_max + 1):
                lines.append(f"{self.n} {j} {l} {self.entries[(j, l)]:.17g}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @staticmethod
    def load_text(path) -> "DerivZeroTable":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "nu-table v1":
                raise ValueError(f"unrecognized zero-table header: {header!r}")
            entries = {}
            n = None
            for line in fh:
                if not line.strip():
                    continue
                sn, sj, sl, sv = line.split()
                if n is None:
                    n = int(sn)
                elif int(sn) != n:
                    raise ValueError("mixed dimensions in zero table")
                entries[(int(sj), int(sl))] = float(sv)
        if n is None:
            raise ValueError("empty zero table")
        j_max = max(j for j, _ in entries)
        l_max = max(l for _, l in entries)
        return DerivZeroTable(n=n, j_max=j_max, l_max=l_max, entries=entries)


@lru_cache(maxsize=32)
def _cached_table(n: int, j_max: int, l_max: int) -> DerivZeroTable:
    entries = {}
    for j in range(j_max + 1):
        zeros = _scan_zeros(n, j, l_max)
        for l, z in enumerate(zeros, start=1):
            entries[(j, l)] = z
    return DerivZeroTable(n=n, j_max=j_max, l_max=l_max, entries=entries)


def deriv_zero_table(n: int, j_max: int, l_max: int) -> DerivZeroTable:
    """All radial derivative zeros nu_{j,l}, 0 <= j <= j_max, 1 <= l <= l_max.

    For j = 0 the constant mode at r = 0 is excluded; indices start at the
    first strictly positive zero.
    """
    if j_max < 0 or l_max < 1:
        raise ValueError("need j_max >= 0 and l_max >= 1")
    if n < 2:
        raise ValueError("dimension must be >= 2")
    return _cached_table(n, j_max, l_max)
