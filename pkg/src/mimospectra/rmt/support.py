"""Support-boundary solvers for the spectral laws.

Each law's Stieltjes transform G(s) is increasing on real intervals outside
the spectrum support, so its inverse s(x) is increasing exactly on the images
of those intervals.  The scan solves the law's inverse-function polynomial in
s on a signed log grid of real x, tracks the real solution branches by
nearest-neighbour continuation, marks maximal increasing runs via central
finite differences (extrema refined by a 3-point parabolic fit), and takes
the support as the complement of the union of run images on [0, inf).

Branch poles occur where the leading s-coefficient vanishes; the grid is
split at those x before tracking so a pole crossing is never mistaken for an
increasing run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .laws import DoubleSidedParams, OneSidedParams


@dataclass(frozen=True)
class SupportGrid:
    """Signed log grid: x in [-x_max, -x_min] union [x_min, x_max]."""

    x_min: float = 1e-6
    x_max: float = 1e3
    points: int = 10_000

    def __post_init__(self):
        if not 0 < self.x_min < self.x_max:
            raise ConfigError("need 0 < x_min < x_max")
        if self.points < 16:
            raise ConfigError("grid too coarse")

    def positive_side(self) -> np.ndarray:
        return np.geomspace(self.x_min, self.x_max, self.points // 2)


@dataclass
class SpectralSupport:
    """Ordered disjoint intervals approximating the positive bulk support."""

    intervals: list[tuple[float, float]]
    grid: SupportGrid = field(default_factory=SupportGrid)

    def __post_init__(self):
        for lo, hi in self.intervals:
            if not lo < hi:
                raise ConfigError(f"degenerate interval ({lo}, {hi})")
        for (a0, a1), (b0, b1) in zip(self.intervals[:-1], self.intervals[1:]):
            if b0 <= a1:
                raise ConfigError("intervals must be disjoint and sorted")

    def scaled(self, factor: float) -> "SpectralSupport":
        return SpectralSupport([(lo * factor, hi * factor) for lo, hi in self.intervals],
                               grid=self.grid)

    def contains(self, x, slack: float = 0.0) -> np.ndarray:
        """Membership mask with endpoint-relative dilation ``slack``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mask = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            mask |= (x >= lo * (1.0 - slack)) & (x <= hi * (1.0 + slack))
        return mask

    @property
    def gap_widths(self) -> list[float]:
        return [b0 - a1 for (a0, a1), (b0, b1) in zip(self.intervals[:-1],
                                                      self.intervals[1:])]


@dataclass(frozen=True)
class TruncationReport:
    """Validity diagnostics for the truncated double-sided inverse function.

    The cubic and quadratic terms in upsilon were dropped assuming both
    ratios are >> 1; either below 10 flags the approximation as suspect.
    """

    ratio_triple: float      # (alpha+eta+gamma) / (alpha*eta*gamma)
    ratio_pairwise: float    # (alpha+eta+gamma) / (alpha*gamma+alpha*eta+eta*gamma)
    threshold: float = 10.0

    @property
    def flags(self) -> list[str]:
        out = []
        if self.ratio_triple < self.threshold:
            out.append(f"triple-product ratio {self.ratio_triple:.3g} < {self.threshold}")
        if self.ratio_pairwise < self.threshold:
            out.append(f"pairwise ratio {self.ratio_pairwise:.3g} < {self.threshold}")
        return out

    @property
    def suspect(self) -> bool:
        return bool(self.flags)


# ---------------------------------------------------------------------------
# scan internals
# ---------------------------------------------------------------------------

def _real_roots(coeffs, rtol: float = 1e-7) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    nz = np.flatnonzero(np.abs(coeffs) > 1e-300)
    if nz.size == 0:
        return np.array([])
    coeffs = coeffs[nz[0]:]
    if coeffs.size < 2:
        return np.array([])
    r = np.roots(coeffs)
    if r.size == 0:
        return np.array([])
    scale = max(1.0, np.max(np.abs(r)))
    return np.sort(r[np.abs(r.imag) <= rtol * scale].real)


def _split_at(xs: np.ndarray, cut_points) -> list[np.ndarray]:
    """Split an ordered grid wherever it straddles a cut point."""
    cuts = [0, len(xs)]
    for c in cut_points:
        k = int(np.searchsorted(xs, c))
        if 0 < k < len(xs):
            cuts.append(k)
    cuts = sorted(set(cuts))
    return [xs[a:b] for a, b in zip(cuts[:-1], cuts[1:]) if b - a >= 3]


def _track_branches(coeff_fn, xs: np.ndarray, max_branches: int = 10) -> np.ndarray:
    rows = np.full((max_branches, len(xs)), np.nan)
    for j, xv in enumerate(xs):
        roots = _real_roots(coeff_fn(xv))
        if j == 0:
            rows[:min(len(roots), max_branches), 0] = roots[:max_branches]
            continue
        prev = rows[:, j - 1]
        cand = sorted(
            (abs(rv - pv), i, k)
            for i, pv in enumerate(prev) if not np.isnan(pv)
            for k, rv in enumerate(roots)
        )
        used_i, used_k = set(), set()
        for _, i, k in cand:
            if i in used_i or k in used_k:
                continue
            used_i.add(i)
            used_k.add(k)
            rows[i, j] = roots[k]
        for k, rv in enumerate(roots):
            if k in used_k:
                continue
            fresh = [i for i in range(max_branches)
                     if np.isnan(rows[i, j]) and np.isnan(prev[i])]
            if fresh:
                rows[fresh[0], j] = rv
    return rows


def _parabolic_value(x3, s3) -> float:
    c = np.polyfit(x3, s3, 2)
    if abs(c[0]) < 1e-300:
        return float(s3[1])
    xe = -c[1] / (2.0 * c[0])
    if not min(x3) <= xe <= max(x3):
        return float(s3[1])
    return float(np.polyval(c, xe))


def _runs_of_branch(xs: np.ndarray, sv: np.ndarray):
    """Yield (lo, hi, cut_xs, cut_values) per maximal increasing run.

    ``cut_xs``/``cut_values`` report run ends truncated by the segment
    boundary rather than by a genuine extremum.
    """
    valid = np.flatnonzero(~np.isnan(sv))
    if valid.size < 3:
        return
    for seg in np.split(valid, np.flatnonzero(np.diff(valid) > 1) + 1):
        if seg.size < 3:
            continue
        x, s = xs[seg], sv[seg]
        inc = np.gradient(s, x) > 0
        j = 0
        while j < len(inc):
            if not inc[j]:
                j += 1
                continue
            k = j
            while k < len(inc) and inc[k]:
                k += 1
            if k - j >= 2:
                lo, hi = float(s[j]), float(s[k - 1])
                if j > 0:
                    lo = _parabolic_value(x[j - 1:j + 2], s[j - 1:j + 2])
                if k < len(s):
                    hi = _parabolic_value(x[k - 2:k + 1], s[k - 2:k + 1])
                lo = min(lo, float(np.min(s[j:k])))
                hi = max(hi, float(np.max(s[j:k])))
                cut_xs, cut_values = [], []
                if j == 0:
                    cut_xs.append(float(x[0]))
                    cut_values.append(float(s[0]))
                if k == len(s):
                    cut_xs.append(float(x[-1]))
                    cut_values.append(float(s[-1]))
                yield lo, hi, cut_xs, cut_values
            j = k


def _merge_gaps(gaps: list[tuple[float, float]], tol: float) -> list[list[float]]:
    gaps = sorted(gaps)
    merged = [list(gaps[0])]
    for lo, hi in gaps[1:]:
        if lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def scan_support(coeff_fn, grid: SupportGrid, pole_xs=(),
                 drop_near_zero: bool = True, label: str = "law") -> SpectralSupport:
    """Run the inverse-function scan and assemble support intervals.

    ``coeff_fn(x)`` returns descending polynomial coefficients in s for real
    dummy x; ``pole_xs`` lists real x where the leading coefficient vanishes.
    """
    xs_pos = grid.positive_side()
    gaps: list[tuple[float, float]] = []
    outer_cut_values: list[float] = []
    for side in (xs_pos, -xs_pos[::-1]):
        for seg in _split_at(side, pole_xs):
            for branch in _track_branches(coeff_fn, seg):
                for lo, hi, cut_xs, cut_values in _runs_of_branch(seg, branch):
                    gaps.append((lo, hi))
                    for cx, cv in zip(cut_xs, cut_values):
                        # cuts at |x| = x_max mean an extremum may lie beyond
                        # the grid; cuts at x_min / pole splits are the
                        # expected asymptotes
                        if abs(abs(cx) - grid.x_max) <= 1e-9 * grid.x_max:
                            outer_cut_values.append(cv)
    if not gaps:
        raise ConfigError(f"{label}: no real increasing branch found on the grid; "
                          "support cannot be identified")
    # s-range the grid can resolve: beyond ~1/x_min the branches are pure
    # -1/x asymptotes (or parasite algebraic components), not bulk structure
    s_cap = 0.5 / grid.x_min
    resolvable = [abs(v) for g in gaps for v in g if 0 < abs(v) < s_cap]
    scale = max(resolvable) if resolvable else max(abs(hi) for _, hi in gaps)
    merged = _merge_gaps(gaps, tol=1e-6 * scale)
    # gaps narrower than the scan's image-space resolution are tracking
    # noise at branch crossings, not spectral gaps
    merged = [g for g in merged if g[1] - g[0] >= 1e-5 * scale]
    support = []
    for (a0, a1), (b0, b1) in zip(merged[:-1], merged[1:]):
        if b0 - a1 > 1e-3 * scale:
            support.append((a1, b0))
    support = [(lo, hi) for lo, hi in support if hi > 0 and lo < s_cap]
    if drop_near_zero:
        support = [(lo, hi) for lo, hi in support if hi > 0.02 * scale]
    # the zero-atom asymptote legitimately reaches |x| = x_max at
    # |s| ~ mass/x_max << scale; only order-scale cut values are suspicious
    unresolved = [v for v in outer_cut_values if abs(v) > 0.1 * scale]
    if unresolved:
        warnings.warn(
            f"{label}: x-grid too narrow, {len(unresolved)} increasing run(s) cut "
            f"at |x| = x_max (|s| up to {max(abs(v) for v in unresolved):.3g}); "
            "support may be incomplete", stacklevel=2)
    if not support:
        raise ConfigError(f"{label}: scan produced no positive support interval")
    return SpectralSupport(intervals=support, grid=grid)


# ---------------------------------------------------------------------------
# per-law inverse-function polynomials (descending coefficients in s)
# ---------------------------------------------------------------------------

def onesided_inverse_coeffs(x: float, p: OneSidedParams) -> list[float]:
    """Cubic in s for the rank-l one-power product law (no zero atom)."""
    a, l = p.scale, p.inner_dim
    m, n, pa = p.m, p.n, p.p
    return [
        a * l ** 3 * x ** 4,
        -a * l ** 2 * x ** 3 * (-3 * l + m + n + pa),
        x * (m * n * pa + a * l * x * (3 * l ** 2 + m * n + (m + n) * pa
                                       - 2 * l * (m + n + pa))),
        m * n * pa - a * x * (-l + m) * (l - n) * (l - pa),
    ]


def support_onesided(params: OneSidedParams,
                     grid: SupportGrid = SupportGrid()) -> SpectralSupport:
    """Support of the nonzero one-power bulk via the cubic inverse function."""
    if params.scale <= 0:
        raise ConfigError("scale must be positive")
    return scan_support(lambda x: onesided_inverse_coeffs(x, params), grid,
                        pole_xs=(0.0,), label="one-sided")


def double_inverse_coeffs(x: float, p: DoubleSidedParams) -> list[float]:
    """Quadratic in s for the truncated double-sided inverse function.

    The radical is removed by squaring; both quadratic roots are genuine
    inverse branches (they match the two preimages of the exact two-mass
    transform in the small-ratio limit), so no sign filtering applies.
    """
    k, l = p.num_users, p.num_cells
    m, n, pa = p.num_antennas, p.block_length, p.num_aoas
    ps, pi = p.p_signal, p.p_interference
    a_lin = 2.0 * k * l ** 2 * pi * ps * (1 / m + 1 / n + 1 / pa)
    av = a_lin * x + l * (pi + ps)
    cv = -l * pi + pi - ps - 2.0 * l * pi * ps * x
    q2 = l ** 2 * (ps - pi) ** 2 - av * av
    q1 = 2.0 * l * (pi ** 2 * (1 - l) - ps ** 2 + l * pi * ps) - 2.0 * av * cv
    q0 = (ps + (l - 1) * pi) ** 2 - cv * cv
    # upsilon = s*x + 1
    return [q2 * x * x, 2.0 * q2 * x + q1 * x, q2 + q1 + q0]


def _double_pole_xs(p: DoubleSidedParams) -> list[float]:
    k, l = p.num_users, p.num_cells
    ps, pi = p.p_signal, p.p_interference
    a_lin = 2.0 * k * l ** 2 * pi * ps * (1 / p.num_antennas + 1 / p.block_length
                                          + 1 / p.num_aoas)
    c0 = l * (pi + ps)
    out = [0.0]
    for target in (l * (ps - pi), -l * (ps - pi)):
        out.append((target - c0) / a_lin)
    return out


def support_double_sided(params: DoubleSidedParams,
                         grid: SupportGrid = SupportGrid()
                         ) -> tuple[SpectralSupport, TruncationReport]:
    """Support of the joint two-power law plus truncation diagnostics."""
    al, et, ga = params.alpha, params.eta, params.gamma
    report = TruncationReport(
        ratio_triple=(al + et + ga) / (al * et * ga),
        ratio_pairwise=(al + et + ga) / (al * ga + al * et + et * ga),
    )
    support = scan_support(lambda x: double_inverse_coeffs(x, params), grid,
                           pole_xs=_double_pole_xs(params), label="double-sided")
    return support, report


def distinct_inverse_coeffs(x: float, num_users: int, num_cells: int,
                            num_antennas: int, block_length: int,
                            num_aoas: int, p_interference: float) -> list[float]:
    """Cubic in s for the interference law with equal per-cell AoA counts.

    This is the block-diagonal-fading analogue of the one-power law; the
    spectrum carries the zero atom of the full block_length-sized matrix.
    """
    k, l, m, n, pa = num_users, num_cells, num_antennas, block_length, num_aoas
    pi = p_interference
    e0 = n - k * (l - 1)
    f0 = n + pa - l * pa
    # first term: -n*pi*x*(1+sx)*(e0 + n*s*x)*(f0 + n*s*x), in powers of t = s*x
    t3 = -n * pi * x * n * n
    t2 = -n * pi * x * (e0 * n + n * f0 + n * n)
    t1 = -n * pi * x * (e0 * f0 + e0 * n + n * f0)
    t0 = -n * pi * x * e0 * f0
    # second term: m*(k*pa*pi*x*(l-1)^2 - n*(l-1)*(pa + pi*x*(k+pa))*(1+sx)
    #              + pi*x*n^2*(1+sx)^2)
    lin = -n * (l - 1) * (pa + pi * x * (k + pa))
    t2 += m * pi * x * n * n
    t1 += m * (lin + 2.0 * pi * x * n * n)
    t0 += m * (k * pa * pi * x * (l - 1) ** 2 + lin + pi * x * n * n)
    # convert powers of t to powers of s (t = s*x)
    return [t3 * x ** 3, t2 * x ** 2, t1 * x, t0]


def support_distinct(num_users: int, num_cells: int, num_antennas: int,
                     block_length: int, num_aoas: int, p_interference: float,
                     grid: SupportGrid = SupportGrid()) -> SpectralSupport:
    """Interference-bulk support for equal per-cell AoA counts."""
    if p_interference <= 0:
        raise ConfigError("p_interference must be positive")
    if num_cells < 2:
        raise ConfigError("distinct interference law needs at least 2 cells")
    return scan_support(
        lambda x: distinct_inverse_coeffs(x, num_users, num_cells, num_antennas,
                                          block_length, num_aoas, p_interference),
        grid, pole_xs=(0.0,), label="distinct-AoA")


def iid_inverse_coeffs(x: float, p_s: float, alpha: float, gamma: float) -> list[float]:
    """Quadratic in s for the rich-scattering one-power law (zero atom kept)."""
    c2 = -p_s * alpha * x ** 3
    c1 = (gamma - p_s * x * (2 * alpha - gamma - alpha * gamma)) * x
    c0 = gamma - p_s * x * (1 - gamma) * (alpha - gamma)
    return [c2, c1, c0]


def support_iid(p_s: float, alpha: float, gamma: float,
                grid: SupportGrid = SupportGrid()) -> SpectralSupport:
    """Bulk support of the rich-scattering one-power law."""
    if p_s <= 0 or alpha <= 0 or gamma <= 0:
        raise ConfigError("p_s, alpha, gamma must be positive")
    return scan_support(lambda x: iid_inverse_coeffs(x, p_s, alpha, gamma),
                        grid, pole_xs=(0.0,), label="iid")
