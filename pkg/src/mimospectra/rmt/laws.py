"""Asymptotic spectral laws in the Stieltjes domain.

Convention: G(s) = integral f(x)/(x - s) dx with Im s != 0, so Im s > 0
implies Im G > 0 and s*G(s) -> -1 as |s| -> infinity.  Every implicit law is
evaluated by polynomial root finding plus continuation: the physical branch
is anchored at G = -1/s for Im s = 1e6 and tracked by nearest-root matching
along a vertical path down to the requested point.

Laws implemented:

* ``mp_stieltjes``            -- sample-covariance (Wishart) quadratic.
* ``stieltjes_onesided``      -- quartic for the single-power product law of
                                 scale * (A B C)^H (A B C) / (m p n); the
                                 n x n spectrum including its zero atom.
* ``stieltjes_iid_limit``     -- its rich-scattering (p -> infinity) cubic.
* ``stieltjes_double_sided``  -- joint signal+interference law of the scaled
                                 two-power product, via the radical-free
                                 degree-8 polynomial.
* ``mixture_stieltjes``       -- weighted sum of Wishart-type block laws.
* ``two_mass_stieltjes`` / ``s_transform_two_mass`` -- the two-point power
  mass distribution and its multiplicative transform.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npp

from ..errors import BranchTrackingError, ConfigError

ANCHOR_IM = 1.0e6
_STEPS_PER_DECADE = 32


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OneSidedParams:
    """Dimensions of the one-power product law.

    ``scale`` is the power multiplier, ``inner_dim`` the rank of the product
    (users contributing), and m, n, p the outer/sample/path dimensions.
    Derived ratios: alpha = inner_dim/m, beta = p/m, gamma = inner_dim/n,
    alpha_prime = inner_dim/p.
    """

    scale: float
    inner_dim: int
    m: int
    n: int
    p: int

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigError("scale must be positive")
        for name in ("inner_dim", "m", "n", "p"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def alpha(self) -> float:
        return self.inner_dim / self.m

    @property
    def beta(self) -> float:
        return self.p / self.m

    @property
    def gamma(self) -> float:
        return self.inner_dim / self.n

    @property
    def alpha_prime(self) -> float:
        return self.inner_dim / self.p

    @classmethod
    def signal(cls, sys_params) -> "OneSidedParams":
        return cls(scale=sys_params.signal_power, inner_dim=sys_params.users_per_cell,
                   m=sys_params.num_antennas, n=sys_params.block_length,
                   p=sys_params.aoa_counts[0])

    @classmethod
    def interference(cls, sys_params) -> "OneSidedParams":
        l = sys_params.num_cells
        return cls(scale=sys_params.interference_power,
                   inner_dim=sys_params.users_per_cell * (l - 1),
                   m=sys_params.num_antennas, n=sys_params.block_length,
                   p=sys_params.aoa_counts[0])


@dataclass(frozen=True)
class DoubleSidedParams:
    """Dimensions and powers of the joint two-power law."""

    num_users: int
    num_cells: int
    num_antennas: int
    block_length: int
    num_aoas: int
    p_signal: float
    p_interference: float

    def __post_init__(self):
        for name in ("num_users", "num_cells", "num_antennas", "block_length", "num_aoas"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.p_signal <= 0 or self.p_interference <= 0:
            raise ConfigError("powers must be positive")
        if self.p_signal < self.p_interference:
            warnings.warn("p_signal < p_interference: outside the intended "
                          "separation regime", stacklevel=2)

    @property
    def alpha(self) -> float:
        return self.num_users * self.num_cells / self.num_antennas

    @property
    def eta(self) -> float:
        return self.num_users * self.num_cells / self.num_aoas

    @property
    def gamma(self) -> float:
        return self.num_users * self.num_cells / self.block_length

    @classmethod
    def from_system(cls, sys_params) -> "DoubleSidedParams":
        return cls(num_users=sys_params.users_per_cell, num_cells=sys_params.num_cells,
                   num_antennas=sys_params.num_antennas, block_length=sys_params.block_length,
                   num_aoas=sys_params.aoa_counts[0], p_signal=sys_params.signal_power,
                   p_interference=sys_params.interference_power)


@dataclass(frozen=True)
class MixtureComponent:
    """One Wishart-type block: weight = P_i/n, ratio = K/P_i."""

    weight: float
    ratio: float

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ConfigError("weight must be in (0, 1]")
        if self.ratio <= 0:
            raise ConfigError("ratio must be positive")


@dataclass(frozen=True)
class StieltjesEval:
    """One evaluated point with its law tag."""

    argument: complex
    value: complex
    law: str


# ---------------------------------------------------------------------------
# Marchenko-Pastur quadratic
# ---------------------------------------------------------------------------

def mp_stieltjes(s, ratio: float):
    """Stieltjes transform of the sample-covariance law with aspect ``ratio``.

    Solves ratio*s*G^2 - (1 - ratio - s)*G + 1 = 0 on the branch with
    Im G * sign(Im s) > 0.  For ratio > 1 the zero atom of mass 1 - 1/ratio
    is part of the law.
    """
    if ratio <= 0:
        raise ConfigError("ratio must be positive")
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr.imag == 0):
        raise ConfigError("mp_stieltjes requires Im s != 0")
    b = 1.0 - ratio - s_arr
    disc = np.sqrt(b * b - 4.0 * ratio * s_arr)
    r1 = (b + disc) / (2.0 * ratio * s_arr)
    r2 = (b - disc) / (2.0 * ratio * s_arr)
    pick1 = r1.imag * np.sign(s_arr.imag) > 0
    out = np.where(pick1, r1, r2)
    return out if s_arr.ndim else complex(out)


def mp_density(x, ratio: float):
    """Closed-form bulk density of the sample-covariance law (atom excluded)."""
    x = np.asarray(x, dtype=float)
    a = (1.0 - math.sqrt(ratio)) ** 2
    b = (1.0 + math.sqrt(ratio)) ** 2
    out = np.zeros_like(x)
    inside = (x > a) & (x < b)
    xi = x[inside]
    out[inside] = np.sqrt((b - xi) * (xi - a)) / (2.0 * np.pi * ratio * xi)
    return out if x.ndim else float(out)


def mp_s_transform(z, ratio: float):
    """Multiplicative transform of the sample-covariance law: 1/(1 + ratio*z)."""
    return 1.0 / (1.0 + ratio * np.asarray(z, dtype=complex))


# ---------------------------------------------------------------------------
# root continuation shared by the implicit laws
# ---------------------------------------------------------------------------

def _roots_ascending(coeffs: np.ndarray) -> np.ndarray:
    return np.roots(coeffs[::-1])


def _nearest(roots: np.ndarray, g: complex):
    d = np.abs(roots - g)
    order = np.argsort(d)
    best = roots[order[0]]
    margin = d[order[1]] / max(d[order[0]], 1e-300) if len(order) > 1 else np.inf
    return best, margin


def _track_to(coeff_fn, s_from: complex, g_from: complex, s_to: complex,
              depth: int = 0) -> complex:
    """Continue the tracked root from (s_from, g_from) to s_to, refining the
    step whenever the nearest-root choice is ambiguous."""
    roots = _roots_ascending(coeff_fn(s_to))
    g, margin = _nearest(roots, g_from)
    step = abs(s_to - s_from)
    moved = abs(g - g_from)
    if margin > 3.0 or moved < 0.25 * (1.0 + abs(g_from)):
        return g
    if depth >= 24:
        raise BranchTrackingError(
            f"ambiguous branch near s={s_to:.6g} (margin {margin:.3f}); "
            f"candidate roots: {roots}", roots=roots)
    mid = 0.5 * (s_from + s_to)
    g_mid = _track_to(coeff_fn, s_from, g_from, mid, depth + 1)
    return _track_to(coeff_fn, mid, g_mid, s_to, depth + 1)


def _trace_from_anchor(coeff_fn, s: complex) -> complex:
    """Anchor at Im = 1e6 (where G = -1/s) and descend vertically to s."""
    s = complex(s)
    if s.imag <= 0:
        raise ConfigError("law evaluation requires Im s > 0")
    top = max(ANCHOR_IM, 2.0 * s.imag)
    n_dec = max(1.0, math.log10(top / s.imag))
    n_steps = max(48, int(_STEPS_PER_DECADE * n_dec))
    path = s.real + 1j * np.geomspace(top, s.imag, n_steps)
    g = -1.0 / path[0]
    s_prev = path[0]
    for sk in path:
        g = _track_to(coeff_fn, s_prev, g, complex(sk))
        s_prev = complex(sk)
    if g.imag < -1e-10:
        raise BranchTrackingError(
            f"tracked root lost Herglotz property at s={s:.6g}: G={g:.6g}",
            roots=_roots_ascending(coeff_fn(s)))
    return g


def _eval_implicit(coeff_fn, s, g0=None):
    """Evaluate a polynomial-implicit law at scalar or array s.

    Array inputs are evaluated in order with warm starts between nearby
    points; a fresh anchor descent is used whenever the previous point is
    too far away or tracking degrades.
    """
    s_arr = np.asarray(s, dtype=complex)
    if s_arr.ndim == 0:
        sc = complex(s_arr)
        if g0 is not None:
            try:
                return _track_to(coeff_fn, sc, complex(g0), sc)
            except BranchTrackingError:
                pass
        return _trace_from_anchor(coeff_fn, sc)
    flat = s_arr.ravel()
    out = np.empty(flat.shape, dtype=complex)
    g_prev = None
    s_prev = None
    for i, sc in enumerate(flat):
        sc = complex(sc)
        fresh = (g_prev is None or abs(sc - s_prev) > 0.5 * (1.0 + abs(s_prev)))
        if fresh:
            g = _trace_from_anchor(coeff_fn, sc)
        else:
            try:
                g = _track_to(coeff_fn, s_prev, g_prev, sc)
                if g.imag < -1e-10:
                    g = _trace_from_anchor(coeff_fn, sc)
            except BranchTrackingError:
                g = _trace_from_anchor(coeff_fn, sc)
        out[i] = g
        g_prev, s_prev = g, sc
    return out.reshape(s_arr.shape)


def _normalized_residual(coeffs: np.ndarray, g: complex) -> float:
    powers = g ** np.arange(len(coeffs))
    num = abs(np.sum(coeffs * powers))
    den = np.sum(np.abs(coeffs * powers))
    return num / max(den, 1e-300)


# ---------------------------------------------------------------------------
# one-sided laws
# ---------------------------------------------------------------------------

def _onesided_coeffs(s: complex, p: OneSidedParams) -> np.ndarray:
    """Ascending-in-G coefficients of the one-power quartic for the n x n law."""
    a, a1, a2, a3 = p.scale, p.alpha, p.beta, p.gamma
    f1 = np.array([1.0 - a3, s])
    f2 = np.array([a1 - a3, a1 * s])
    f3 = np.array([a1 - a2 * a3, a1 * s])
    prod = npp.polymul(npp.polymul(f1, f2), f3)
    poly = np.concatenate([[0.0], a * prod])  # multiply by G
    poly[0] += a2 * a3 ** 2
    poly[1] += a2 * a3 ** 2 * s
    return poly


def stieltjes_onesided(s, params: OneSidedParams, g0=None):
    """Law of the n x n single-power product matrix (zero atom included)."""
    return _eval_implicit(lambda sk: _onesided_coeffs(sk, params), s, g0=g0)


def onesided_residual(s: complex, g: complex, params: OneSidedParams) -> float:
    return _normalized_residual(_onesided_coeffs(complex(s), params), complex(g))


def _iid_coeffs(s: complex, p_s: float, alpha: float, gamma: float) -> np.ndarray:
    """gamma(1+sG) - p_s G (1 + sG - gamma)(alpha + alpha sG - gamma) = 0."""
    f1 = np.array([1.0 - gamma, s])
    f2 = np.array([alpha - gamma, alpha * s])
    prod = npp.polymul(f1, f2)
    poly = np.concatenate([[0.0], -p_s * prod])
    poly[0] += gamma
    poly[1] += gamma * s
    return poly


def stieltjes_iid_limit(s, p_s: float, alpha: float, gamma: float, g0=None):
    """Rich-scattering limit of the one-sided law (cubic in G)."""
    if p_s <= 0 or alpha <= 0 or gamma <= 0:
        raise ConfigError("p_s, alpha, gamma must be positive")
    return _eval_implicit(lambda sk: _iid_coeffs(sk, p_s, alpha, gamma), s, g0=g0)


def iid_limit_residual(s: complex, g: complex, p_s: float, alpha: float,
                       gamma: float) -> float:
    return _normalized_residual(_iid_coeffs(complex(s), p_s, alpha, gamma), complex(g))


# ---------------------------------------------------------------------------
# two-mass power distribution
# ---------------------------------------------------------------------------

def two_mass_stieltjes(s, p_s: float, p_i: float, num_cells: int):
    """Exact transform of the power mass function: one mass at p_s with
    weight 1/L and one at p_i with weight (L-1)/L."""
    l = num_cells
    s_arr = np.asarray(s, dtype=complex)
    out = (l * p_s - l * s_arr + p_i - p_s) / (l * (p_s - s_arr) * (p_i - s_arr))
    return out if s_arr.ndim else complex(out)


def s_transform_two_mass(z, p_s: float, p_i: float, num_cells: int):
    """Minus-branch root of the two-mass transform quadratic.

    L*p_i*p_s*z*S^2 - b(z)*S + L(1+z) = 0 with
    b(z) = p_s - p_i + L*p_i + L*(p_i + p_s)*z; the z -> 0 limit is the
    reciprocal mean L/(p_s + (L-1)*p_i).
    """
    if num_cells < 1:
        raise ConfigError("num_cells must be >= 1")
    if p_s <= 0 or p_i <= 0:
        raise ConfigError("powers must be positive")
    l = num_cells
    z_arr = np.asarray(z, dtype=complex)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    b = p_s - p_i + l * p_i + l * (p_i + p_s) * z_arr
    disc = np.sqrt(b * b - 4.0 * l * l * p_i * p_s * (z_arr + 1.0) * z_arr)
    small = np.abs(z_arr) < 1e-12
    denom = np.where(small, 1.0, 2.0 * l * p_i * p_s * z_arr)
    out = (b - disc) / denom
    out[small] = l / (p_s + (l - 1) * p_i)
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# double-sided law
# ---------------------------------------------------------------------------

def _double_sided_coeffs(s: complex, p: DoubleSidedParams) -> np.ndarray:
    """Ascending-in-G coefficients of the radical-free double-sided polynomial.

    The defining relation is T(G) + R(G) = 0 where R^2 = Q(1 + sG) is the
    two-mass discriminant; squaring gives the degree-8 polynomial T^2 - Q
    whose physical root is selected by continuation.
    """
    k, l = p.num_users, p.num_cells
    m, n, pa = p.num_antennas, p.block_length, p.num_aoas
    ps, pi = p.p_signal, p.p_interference
    ups = np.array([1.0, s])
    ups2 = npp.polymul(ups, ups)
    ups3 = npp.polymul(ups2, ups)
    gpoly = np.array([0.0, 1.0])
    c3 = 2.0 * k ** 3 * l ** 4 * pi * ps / (m * n * pa)
    c2 = -2.0 * k ** 2 * l ** 3 * pi * ps * (1 / (m * n) + 1 / (m * pa) + 1 / (n * pa))
    c1 = 2.0 * k * l ** 2 * pi * ps * (1 / m + 1 / n + 1 / pa)
    t = npp.polymul(gpoly, npp.polyadd(npp.polyadd(c3 * ups3, c2 * ups2), c1 * ups))
    t = npp.polyadd(t, l * (pi + ps) * ups)
    t = npp.polyadd(t, np.array([pi - ps - l * pi]))
    t = npp.polyadd(t, -2.0 * l * pi * ps * gpoly)
    q2 = l ** 2 * (ps - pi) ** 2
    q1 = 2.0 * l * (pi ** 2 * (1 - l) - ps ** 2 + l * pi * ps)
    q0 = (ps + (l - 1) * pi) ** 2
    q = npp.polyadd(npp.polyadd(q2 * ups2, q1 * ups), np.array([q0]))
    return npp.polysub(npp.polymul(t, t), q)


def stieltjes_double_sided(s, params: DoubleSidedParams, g0=None):
    """Joint signal-plus-interference spectrum of the two-power product law;
    the K*L x K*L matrix has no zero atom."""
    return _eval_implicit(lambda sk: _double_sided_coeffs(sk, params), s, g0=g0)


def double_sided_residual(s: complex, g: complex, params: DoubleSidedParams) -> float:
    """Normalized residual of the unsquared defining relation T(G) = -R with
    the radical branch chosen to minimize it."""
    s, g = complex(s), complex(g)
    k, l = params.num_users, params.num_cells
    m, n, pa = params.num_antennas, params.block_length, params.num_aoas
    ps, pi = params.p_signal, params.p_interference
    u = 1.0 + s * g
    c3 = 2.0 * k ** 3 * l ** 4 * pi * ps / (m * n * pa)
    c2 = -2.0 * k ** 2 * l ** 3 * pi * ps * (1 / (m * n) + 1 / (m * pa) + 1 / (n * pa))
    c1 = 2.0 * k * l ** 2 * pi * ps * (1 / m + 1 / n + 1 / pa)
    t = g * (c3 * u ** 3 + c2 * u ** 2 + c1 * u) + l * (pi + ps) * u \
        + (pi - ps - l * pi) - 2.0 * l * pi * ps * g
    q = pi ** 2 * (1 + l * (u - 1)) ** 2 + ps ** 2 * (l * u - 1) ** 2 \
        + 2.0 * pi * ps * (l - l ** 2 * (u - 1) * u - 1)
    r = np.sqrt(complex(q))
    scale = abs(t) + abs(r) + 1e-300
    return min(abs(t + r), abs(t - r)) / scale


# ---------------------------------------------------------------------------
# mixtures (distinct AoA counts)
# ---------------------------------------------------------------------------

def mixture_stieltjes(s, components: list[MixtureComponent]):
    """Weighted sum of Wishart-type block laws.

    Each component is the spectrum of a P_i x K Gaussian block's outer Gram
    matrix normalized by P_i.  For ratio = K/P_i < 1 that is a zero atom of
    mass 1 - ratio plus ratio times the aspect-``ratio`` sample-covariance
    bulk; weights must sum to one.
    """
    if not components:
        raise ConfigError("mixture needs at least one component")
    total = sum(c.weight for c in components)
    if abs(total - 1.0) > 1e-12:
        raise ConfigError(f"component weights sum to {total}, expected 1")
    s_arr = np.asarray(s, dtype=complex)
    out = np.zeros(np.shape(s_arr), dtype=complex)
    for c in components:
        if c.ratio < 1.0:
            comp = (1.0 - c.ratio) * (-1.0 / s_arr) + c.ratio * mp_stieltjes(s_arr, c.ratio)
        else:
            comp = mp_stieltjes(s_arr, c.ratio)
        out = out + c.weight * comp
    return out if np.ndim(s) else complex(out)


def equal_aoa_mixture(num_users: int, aoa_counts: list[int]) -> list[MixtureComponent]:
    """Components for interfering cells with the given AoA counts."""
    n = sum(aoa_counts)
    return [MixtureComponent(weight=p / n, ratio=num_users / p) for p in aoa_counts]


# ---------------------------------------------------------------------------
# density recovery and transform identities
# ---------------------------------------------------------------------------

def density_from_stieltjes(evaluator, x_grid, eps: float = 1e-3) -> np.ndarray:
    """Sampled density f(x) ~ Im evaluator(x + i*eps) / pi, clipped at zero.

    ``evaluator`` maps a complex array (or scalar) to G values; failures are
    re-raised with the offending grid location attached.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    x_grid = np.asarray(x_grid, dtype=float)
    s = x_grid + 1j * eps
    try:
        g = evaluator(s)
    except Exception as exc:  # fall back to per-point evaluation to locate it
        g = np.empty(x_grid.shape, dtype=complex)
        for i, sc in enumerate(np.atleast_1d(s)):
            try:
                g_val = evaluator(complex(sc))
            except Exception:
                raise type(exc)(
                    f"density evaluation failed at x={complex(sc).real:.6g}: {exc}"
                ) from exc
            g.flat[i] = g_val
    return np.clip(np.asarray(g).imag / np.pi, 0.0, None)


def s_stieltjes_link_check(s_transform, stieltjes, s_grid) -> float:
    """Max residual of S(-sG - 1) = G / (sG + 1) over the grid.

    Both callables must describe the same law for the residual to vanish.
    """
    worst = 0.0
    for s in np.asarray(s_grid, dtype=complex).ravel():
        g = stieltjes(complex(s))
        z = -s * g - 1.0
        lhs = s_transform(z)
        rhs = g / (s * g + 1.0)
        worst = max(worst, abs(lhs - rhs))
    return worst
