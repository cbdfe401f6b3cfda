"""Exact Neumann spectra of Delta^p on balls, and radial-mode projections.

Eigenvalues on a ball of radius R are (nu_{j,l}/R)^(2p) for the operator
Delta^p, where nu_{j,l} is the l-th positive zero of the degree-j radial
derivative (see :mod:`neuspec.special`).  The lowest nonzero level of the
even-order operator Delta^(2m) is mu1^(2m) with mu1 the Laplacian value,
and its eigenfunctions are the n coordinate modes g(r) x_i / r.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln as _gammaln
from scipy.special import jv as _jv

from .special import (
    RadialProfile,
    deriv_zero_table,
    first_radial_deriv_zero,
    radial_profile_eval,
)

__all__ = [
    "Ball",
    "SpectrumEntry",
    "BesselFourierCoeffs",
    "mu1_ball",
    "upsilon1_ball",
    "upsilon1_poly_ball",
    "neumann_spectrum_ball",
    "ball_eigenfunction",
    "angular_multiplicity",
    "radial_mode_fn",
    "bessel_fourier_project",
    "bessel_fourier_reconstruct",
    "spectrum_to_csv",
]


@dataclass(frozen=True)
class Ball:
    """Ball of radius `radius` centered at the origin of R^n."""

    n: int
    radius: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")


@dataclass(frozen=True)
class SpectrumEntry:
    """One Neumann level: eigenvalue, harmonic degree, radial index, multiplicity."""

    value: float
    degree: int
    radial_index: int
    multiplicity: int


@dataclass(frozen=True)
class BesselFourierCoeffs:
    """Coefficients of a fixed-degree radial expansion on [0, R]."""

    n: int
    degree: int
    radius: float
    coeffs: tuple


def mu1_ball(b: Ball) -> float:
    """First nonzero Neumann eigenvalue of the Laplacian on the ball."""
    p = first_radial_deriv_zero(b.n)
    return (p / b.radius) ** 2


def upsilon1_ball(b: Ball) -> float:
    """First nonzero Neumann eigenvalue of the bi-Laplacian: mu1 squared.

    Algebraic squaring of :func:`mu1_ball`; no separate derivation.
    """
    return mu1_ball(b) ** 2


def upsilon1_poly_ball(b: Ball, m: int) -> float:
    """First nonzero Neumann eigenvalue of Delta^(2m): mu1^(2m)."""
    if not (1 <= m <= 8):
        raise ValueError("power must satisfy 1 <= m <= 8")
    return mu1_ball(b) ** (2 * m)


def angular_multiplicity(n: int, j: int) -> int:
    """Dimension of the degree-j spherical harmonics on S^(n-1)."""
    if j == 0:
        return 1
    if n == 2:
        return 2
    lower = math.comb(n + j - 3, j - 2) if j >= 2 else 0
    return math.comb(n + j - 1, j) - lower


_TABLE_J_CAP = 80
_TABLE_L_CAP = 60


def neumann_spectrum_ball(b: Ball, count: int, power: int = 1) -> list[SpectrumEntry]:
    """The `count` smallest nonzero Neumann eigenvalues of Delta^power.

    Entries are sorted ascending and carry (degree, radial index,
    multiplicity) labels; each value is (nu_{j,l}/R)^(2*power).  The zero
    eigenvalue of the constant mode is not included and is reported by
    callers separately.  The internal zero table grows on demand; running
    into its hard caps raises with the (j_max, l_max) that would be needed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if power < 1:
        raise ValueError("power must be >= 1")

    j_max, l_max = 8, max(4, count // 2 + 2)
    while True:
        if j_max > _TABLE_J_CAP or l_max > _TABLE_L_CAP:
            raise RuntimeError(
                f"zero table exhausted: spectrum request needs roughly "
                f"(j_max={j_max}, l_max={l_max}) which exceeds caps "
                f"({_TABLE_J_CAP}, {_TABLE_L_CAP})"
            )
        table = deriv_zero_table(b.n, j_max, l_max)
        nus = sorted(
            (table.value(j, l), j, l)
            for j in range(j_max + 1)
            for l in range(1, l_max + 1)
        )
        if len(nus) < count:
            l_max += 2
            continue
        nu_star = nus[count - 1][0]
        # The table is complete up to nu_star when the first zero of the
        # next degree and the last tabulated index of every degree both
        # exceed it; zeros increase in j (for j >= 1) and in l.
        next_degree_first = deriv_zero_table(b.n, j_max + 1, 1).value(j_max + 1, 1)
        need_more_j = next_degree_first <= nu_star
        need_more_l = any(table.value(j, l_max) <= nu_star for j in range(j_max + 1))
        if not need_more_j and not need_more_l:
            break
        if need_more_j:
            j_max += 4
        if need_more_l:
            l_max += 4

    entries = []
    for nu, j, l in nus[:count]:
        mu = (nu / b.radius) ** 2
        entries.append(
            SpectrumEntry(
                value=mu**power,
                degree=j,
                radial_index=l,
                multiplicity=angular_multiplicity(b.n, j),
            )
        )
    return entries


def ball_eigenfunction(b: Ball, i: int, x) -> float | np.ndarray:
    """Evaluate the i-th first Neumann eigenfunction g(r) x_i / r.

    `x` is a point of R^n (shape (n,)) or a stack of points (..., n);
    the value at the origin is 0.
    """
    if not (1 <= i <= b.n):
        raise ValueError(f"component index must be in 1..{b.n}")
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != b.n:
        raise ValueError(f"points must have {b.n} coordinates")
    r = np.sqrt(np.sum(pts * pts, axis=-1))
    prof = RadialProfile.for_ball(b.n, b.radius)
    g, _ = radial_profile_eval(prof, r)
    out = np.zeros_like(r)
    pos = r > 0.0
    out[pos] = g[pos] * pts[pos, i - 1] / r[pos]
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Fixed-degree radial expansions
# ---------------------------------------------------------------------------

def _mode_values(n: int, j: int, x: np.ndarray) -> np.ndarray:
    """Regular radial solution x^(-a) J_(j+a)(x), a = (n-2)/2, series near 0."""
    a = (n - 2) / 2.0
    nu = j + a
    out = np.empty_like(x)
    small = x < 0.5
    if np.any(small):
        xs = x[small]
        # x^(-a) J_nu(x) = 2^(-nu) x^j sum_k (-1)^k (x^2/4)^k / (k! Gamma(nu+k+1))
        acc = np.zeros_like(xs)
        term = math.exp(-nu * math.log(2.0) - _gammaln(nu + 1.0)) * np.ones_like(xs)
        x2 = xs * xs
        for k in range(14):
            acc += term
            term = term * (-0.25 * x2) / ((k + 1) * (nu + k + 1))
        out[small] = acc * xs**j
    big = ~small
    if np.any(big):
        out[big] = x[big] ** (-a) * _jv(nu, x[big])
    return out


def radial_mode_fn(b: Ball, degree: int, l: int):
    """Callable r -> radial mode of given degree and radial index on [0, R]."""
    table = deriv_zero_table(b.n, degree, l)
    nu = table.value(degree, l)

    def mode(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        vals = _mode_values(b.n, degree, nu * r_arr / b.radius)
        return float(vals[0]) if np.ndim(r) == 0 else vals.reshape(np.shape(r))

    return mode


@lru_cache(maxsize=8)
def _gauss_panels(n_panels: int = 4, n_nodes: int = 64):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return x, w


def _radial_quadrature(radius: float, n_panels: int = 4, n_nodes: int = 64):
    """Composite Gauss nodes/weights on [0, radius]."""
    x, w = _gauss_panels(n_panels, n_nodes)
    nodes = []
    weights = []
    width = radius / n_panels
    for k in range(n_panels):
        lo = k * width
        nodes.append(lo + 0.5 * width * (x + 1.0))
        weights.append(0.5 * width * w)
    return np.concatenate(nodes), np.concatenate(weights)


def bessel_fourier_project(samples, b: Ball, degree: int, L: int) -> BesselFourierCoeffs:
    """Project a radial sample function onto the first L modes of a degree.

    Inner products carry the r^(n-1) weight in which the fixed-degree
    radial modes are orthogonal:

        c_l = int_0^R psi(r) phi_l(r) r^(n-1) dr / int_0^R phi_l(r)^2 r^(n-1) dr.
    """
    if L < 1:
        raise ValueError("need at least one mode")
    r, w = _radial_quadrature(b.radius)
    psi = np.asarray(samples(r), dtype=float)
    if psi.shape != r.shape:
        raise ValueError("sample function must return one value per radius")
    if not np.all(np.isfinite(psi)):
        raise ValueError("sample function returned non-finite values")
    weight = w * r ** (b.n - 1)
    table = deriv_zero_table(b.n, degree, L)
    coeffs = []
    for l in range(1, L + 1):
        phi = _mode_values(b.n, degree, table.value(degree, l) * r / b.radius)
        coeffs.append(float(np.sum(psi * phi * weight) / np.sum(phi * phi * weight)))
    return BesselFourierCoeffs(
        n=b.n, degree=degree, radius=b.radius, coeffs=tuple(coeffs)
    )


def bessel_fourier_reconstruct(c: BesselFourierCoeffs, r) -> np.ndarray:
    """Evaluate the finite mode sum with coefficients `c` at radii `r`."""
    b = Ball(c.n, c.radius)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    table = deriv_zero_table(c.n, c.degree, len(c.coeffs))
    out = np.zeros_like(r_arr)
    for l, cl in enumerate(c.coeffs, start=1):
        out += cl * _mode_values(c.n, c.degree, table.value(c.degree, l) * r_arr / c.radius)
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))


def spectrum_to_csv(b: Ball, entries, power: int, stream=None) -> str:
    """Serialize spectrum entries as CSV with 17 significant digits."""
    buf = stream if stream is not None else io.StringIO()
    buf.write("power,n,R,j,l,multiplicity,value\n")
    for e in entries:
        buf.write(
            f"{power},{b.n},{b.radius:.17g},{e.degree},{e.radial_index},"
            f"{e.multiplicity},{e.value:.17g}\n"
        )
    return buf.getvalue() if stream is None else ""
