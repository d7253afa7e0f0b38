"""The sequence-valued convolution kernel behind the variation operator.

Component n of the kernel is
``K_n(u) = 2^{-n} chi_(-2^n, 0)(u) - 2^{-(n-1)} chi_(-2^{n-1}, 0)(u)``
(open intervals), so that ``Tf(x) = int K(x - y) f(y) dy`` has entries
``A_n f(x) - A_{n-1} f(x)``. This module evaluates ell^s norms of kernel
differences both by direct summation and by the closed form valid in the
separated configuration, integrates them over dyadic annuli, and evaluates
the Fourier multiplier of the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, PreconditionError
from .functions import MAX_AVERAGE_EXPONENT

GUARD_BAND = 5
QUADRATURE_CELLS = 2**16


@dataclass(frozen=True)
class KernelParams:
    """ell^s exponent and an optional fixed index range for direct sums."""

    s: float = 2.0
    n_range: tuple[int, int] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 2):
            raise ArgumentError(f"s must satisfy 2 <= s < inf, got {self.s}")
        if self.n_range is not None and self.n_range[0] > self.n_range[1]:
            raise ArgumentError(f"empty index range {self.n_range}")


@dataclass(frozen=True)
class AnnulusSpec:
    """The annulus ``S_l(x) = (2^l x, 2^{l+1} x)``."""

    x: float
    l: int

    def __post_init__(self):
        if not (self.x > 0 and math.isfinite(self.x)):
            raise ArgumentError(f"annulus centre scale x must be positive, got {self.x}")
        if int(self.l) != self.l or self.l < 2:
            raise ArgumentError(f"annulus index l must be an integer >= 2, got {self.l}")

    @property
    def bounds(self) -> tuple[float, float]:
        return math.ldexp(self.x, self.l), math.ldexp(self.x, self.l + 1)

    @property
    def measure(self) -> float:
        return math.ldexp(self.x, self.l)


@dataclass(frozen=True)
class DrParams:
    r: float = 1.0

    def __post_init__(self):
        if not (self.r >= 1 and math.isfinite(self.r)):
            raise ArgumentError(f"r must satisfy 1 <= r < inf, got {self.r}")

    @property
    def r_conj(self) -> float:
        return math.inf if self.r == 1 else self.r / (self.r - 1)

    @property
    def inv_r_conj(self) -> float:
        return 1.0 - 1.0 / self.r


# components ----------------------------------------------------------------


def _in_window(n, u):
    """chi_(-2^n, 0)(u), broadcasting n against u."""
    return ((u > -np.ldexp(1.0, n)) & (u < 0)).astype(float)


def kernel_components(ns: np.ndarray, u: np.ndarray) -> np.ndarray:
    ns = np.asarray(ns)
    u = np.asarray(u, dtype=float)
    return np.ldexp(_in_window(ns, u), -ns) - np.ldexp(_in_window(ns - 1, u), -(ns - 1))


def kernel_component(n: int, x: float) -> float:
    if int(n) != n or abs(n) > MAX_AVERAGE_EXPONENT:
        raise ArgumentError(f"component index {n} outside [-60, 60]")
    return float(kernel_components(np.array(int(n)), np.array(float(x))))


def indicator_differences(ns: np.ndarray, x: float, x0: float, y: float) -> np.ndarray:
    """``chi_(-2^n,0)(x - y) - chi_(-2^n,0)(x0 - y)`` for each n."""
    ns = np.asarray(ns)
    return _in_window(ns, np.float64(x - y)) - _in_window(ns, np.float64(x0 - y))


# difference norms ----------------------------------------------------------


def auto_range(*us: float) -> tuple[int, int] | None:
    """Index range outside which the components of K(u) are 0 (below) or -2^{-n} (above)."""
    mags = [abs(u) for u in us if u != 0.0]
    if not mags:
        return None
    lo = math.frexp(min(mags))[1] - 1 - GUARD_BAND
    hi = math.frexp(max(mags))[1] + GUARD_BAND
    return lo, hi


def kernel_diff_components(x: float, x0: float, y: float, n_range: tuple[int, int]) -> np.ndarray:
    ns = np.arange(n_range[0], n_range[1] + 1)
    return kernel_components(ns, np.float64(x - y)) - kernel_components(ns, np.float64(x0 - y))


def kernel_diff_norm_brute(
    x: float, x0: float, y: float, kp: KernelParams | None = None
) -> float:
    """``||K(x - y) - K(x0 - y)||_{ell^s}`` by summing the components one by one.

    Beyond the top of the index range every component of K(u) is ``-2^{-n}``
    for u < 0 and 0 otherwise, which is added as a geometric series.
    """
    kp = kp or KernelParams()
    u1, u2 = float(x - y), float(x0 - y)
    rng = kp.n_range or auto_range(u1, u2)
    if rng is None:
        return 0.0
    comps = kernel_diff_components(x, x0, y, rng)
    total = math.fsum(np.abs(comps) ** kp.s)
    sign_gap = float(u1 < 0) - float(u2 < 0)
    if sign_gap:
        total += math.ldexp(1.0, -(rng[1] + 1)) ** kp.s / (1.0 - 2.0 ** (-kp.s))
    return total ** (1.0 / kp.s)


def kernel_diff_norm_many(x: float, x0: float, ys: np.ndarray, s: float) -> np.ndarray:
    """Vectorised brute-force norms for many y with x, x0 fixed."""
    ys = np.asarray(ys, dtype=float)
    u1 = x - ys
    u2 = x0 - ys
    mags = np.abs(np.concatenate((u1, u2)))
    mags = mags[mags > 0]
    if mags.size == 0:
        return np.zeros_like(ys)
    lo = int(np.frexp(mags.min())[1]) - 1 - GUARD_BAND
    hi = int(np.frexp(mags.max())[1]) + GUARD_BAND
    ns = np.arange(lo, hi + 1)[:, None]
    diff = kernel_components(ns, u1[None, :]) - kernel_components(ns, u2[None, :])
    total = (np.abs(diff) ** s).sum(axis=0)
    sign_gap = (u1 < 0).astype(float) - (u2 < 0).astype(float)
    total += np.abs(sign_gap) * math.ldexp(1.0, -(hi + 1)) ** s / (1.0 - 2.0 ** (-s))
    return total ** (1.0 / s)


def kernel_configuration_holds(x: float, x0: float, y: float, i: int, j: int) -> bool:
    return (
        j > i
        and x0 < x <= x0 + math.ldexp(1.0, i)
        and x0 + math.ldexp(1.0, j) < y <= x0 + math.ldexp(1.0, j + 1)
    )


def kernel_diff_norm_closed(x: float, x0: float, y: float, i: int, j: int, s: float) -> float:
    """Closed form ``2^{1/s} 2^{-j} chi_(x0 + 2^j, x + 2^j)(y)`` in the separated configuration.

    Requires ``x0 < x <= x0 + 2^i`` and ``x0 + 2^j < y <= x0 + 2^{j+1}`` with j > i.
    """
    if not kernel_configuration_holds(x, x0, y, i, j):
        raise PreconditionError(
            f"(x={x}, x0={x0}, y={y}, i={i}, j={j}) is not a separated configuration"
        )
    if not s >= 2:
        raise ArgumentError(f"s must be >= 2, got {s}")
    inside = x0 + math.ldexp(1.0, j) < y < x + math.ldexp(1.0, j)
    return 2.0 ** (1.0 / s) * math.ldexp(1.0, -j) if inside else 0.0


# D_r integrals ------------------------------------------------------------


def _integrand_breakpoints(x: float, a: float, b: float) -> np.ndarray:
    """Points in (a, b) where ``y -> ||K(x - y) - K(-y)||`` can jump, plus a and b."""
    lo = math.frexp(max(a - x, a / 2))[1] - 2
    hi = math.frexp(b)[1] + 1
    ns = np.arange(lo, hi + 1)
    powers = np.ldexp(1.0, ns)
    cand = np.concatenate((powers, x + powers))
    cand = cand[(cand > a) & (cand < b)]
    return np.unique(np.concatenate(([a], cand, [b])))


def _piecewise_integral(x: float, a: float, b: float, r: float, s: float) -> float:
    pts = _integrand_breakpoints(x, a, b)
    mids = 0.5 * (pts[:-1] + pts[1:])
    vals = kernel_diff_norm_many(x, 0.0, mids, s)
    return math.fsum(vals**r * np.diff(pts))


def _annulus_pieces_integral(x: float, a: float, b: float, r: float, s: float) -> float:
    """``int_a^b ||K(x - y) - K(-y)||^r dy`` for ``a >= 4x``.

    There the integrand is ``2^{1/s} 2^{-j}`` on each ``(2^j, 2^j + x)`` and zero
    elsewhere. Overlaps are measured from ``2^j`` so that pieces of width ``x``
    far out on the axis are not lost to rounding.
    """
    c = 2.0 ** (1.0 / s)
    terms = []
    for j in range(math.frexp(a)[1] - 2, math.frexp(b)[1] + 1):
        base = math.ldexp(1.0, j)
        lo, hi = max(a - base, 0.0), min(b - base, x)
        if hi > lo:
            terms.append((c * math.ldexp(1.0, -j)) ** r * (hi - lo))
    return math.fsum(terms)


def dr_integral(spec: AnnulusSpec, dr: DrParams, kp: KernelParams | None = None) -> float:
    """``(int_{S_l(x)} ||K(x - y) - K(-y)||^r dy)^{1/r}``, exact for every l >= 2."""
    kp = kp or KernelParams()
    a, b = spec.bounds
    return _annulus_pieces_integral(spec.x, a, b, dr.r, kp.s) ** (1.0 / dr.r)


def dr_integral_quadrature(
    spec: AnnulusSpec, dr: DrParams, kp: KernelParams | None = None, cells: int = QUADRATURE_CELLS
) -> float:
    """Midpoint-rule cross-check of :func:`dr_integral`."""
    kp = kp or KernelParams()
    a, b = spec.bounds
    step = (b - a) / cells
    mids = a + (np.arange(cells) + 0.5) * step
    vals = kernel_diff_norm_many(spec.x, 0.0, mids, kp.s)
    return (float(np.sum(vals**dr.r)) * step) ** (1.0 / dr.r)


def dr_constant_profile(
    x: float, l_max: int, dr: DrParams, kp: KernelParams | None = None
) -> list[tuple[int, float]]:
    """``c_l = dr_integral(x, l) * |S_l(x)|^{1/r'}`` for l = 2, ..., l_max."""
    if l_max < 2:
        raise ArgumentError(f"l_max must be >= 2, got {l_max}")
    out = []
    for l in range(2, l_max + 1):
        spec = AnnulusSpec(x, l)
        out.append((l, dr_integral(spec, dr, kp) * spec.measure**dr.inv_r_conj))
    return out


# Hormander integral ---------------------------------------------------------

HORMANDER_DIRECT_OCTAVES = 30


def _far_pieces_integral(x: float, cut: float, s: float) -> float:
    """``int_{cut}^inf ||K(x - y) - K(-y)|| dy`` for cut >= 8x.

    Past 4x the integrand is ``2^{1/s} 2^{-j}`` on each ``(2^j, 2^j + x)`` and
    zero elsewhere; the pieces starting at or after ``cut`` sum to a geometric
    series and at most one piece straddles ``cut``.
    """
    j0 = math.frexp(cut)[1] - (1 if math.frexp(cut)[0] == 0.5 else 0)  # smallest 2^j0 >= cut
    c = 2.0 ** (1.0 / s)
    total = c * x * math.ldexp(1.0, 1 - j0)
    start = math.ldexp(1.0, j0 - 1)
    if start + x > cut:
        total += c * math.ldexp(1.0, -(j0 - 1)) * (start + x - cut)
    return total


def _check_far_pattern(x: float, j: int, s: float) -> None:
    start = math.ldexp(1.0, j)
    probe = np.array([start + 0.5 * x, start + x + 0.5 * (start - x)])
    got = kernel_diff_norm_many(x, 0.0, probe, s)
    want = np.array([2.0 ** (1.0 / s) * math.ldexp(1.0, -j), 0.0])
    if not np.allclose(got, want, rtol=1e-12, atol=0.0):
        raise AssertionError(f"far-field pattern broken at j={j}: {got} != {want}")


def hormander_cutoff(x: float) -> int:
    """Exponent J of the point 2^J past which the integral is summed in closed form."""
    return math.frexp(x)[1] + HORMANDER_DIRECT_OCTAVES


def hormander_integral(x: float, kp: KernelParams | None = None) -> float:
    """``int_{y > 4x} ||K(x - y) - K(-y)||_{ell^s} dy``.

    Exact piecewise summation on ``(4x, 2^J)`` and the geometric closed form
    beyond ``2^J``; the closed form's pattern is checked against the direct
    integrand on the first pieces past the cut.
    """
    if not (x > 0 and math.isfinite(x)):
        raise ArgumentError(f"x must be positive, got {x}")
    kp = kp or KernelParams()
    J = hormander_cutoff(x)
    cut = math.ldexp(1.0, J)
    for j in (J, J + 1):
        _check_far_pattern(x, j, kp.s)
    return _piecewise_integral(x, 4 * x, cut, 1.0, kp.s) + _far_pieces_integral(x, cut, kp.s)


def hormander_by_annuli(x: float, kp: KernelParams | None = None) -> float:
    """The same integral assembled as a sum of r = 1 annulus integrals."""
    if not (x > 0 and math.isfinite(x)):
        raise ArgumentError(f"x must be positive, got {x}")
    kp = kp or KernelParams()
    l_last = HORMANDER_DIRECT_OCTAVES - 2
    pieces = [dr_integral(AnnulusSpec(x, l), DrParams(1.0), kp) for l in range(2, l_last + 1)]
    return math.fsum(pieces) + _far_pieces_integral(x, math.ldexp(x, l_last + 1), kp.s)


# Fourier multiplier ---------------------------------------------------------

_MULTIPLIER_BELOW = 60
_MULTIPLIER_ABOVE = 62


def _phi(t: np.ndarray) -> np.ndarray:
    """Fourier transform of ``2^{-n} chi_(-2^n, 0)`` at ``t = 2^n xi``: (e^{it} - 1)/(it)."""
    half = 0.5 * t
    return np.exp(1j * half) * np.sinc(half / np.pi)


def multiplier_components(xi: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices n and values ``m_n(xi) = phi(2^n xi) - phi(2^{n-1} xi)``.

    The index window is anchored to the binary exponent of xi, so doubling
    xi shifts the window by one index and leaves the multiset of values intact.
    Outside the window ``|m_n| < 1e-16``.
    """
    e = math.frexp(abs(xi))[1]
    ns = np.arange(-e - _MULTIPLIER_BELOW, -e + _MULTIPLIER_ABOVE + 1)
    t = np.ldexp(xi, ns)
    return ns, _phi(t) - _phi(0.5 * t)


def fourier_multiplier_norm(xi: float, kp: KernelParams | None = None) -> float:
    """``||{m_n(xi)}_n||_{ell^s}`` with the convention ``g^(xi) = int g(x) e^{-i xi x} dx``."""
    kp = kp or KernelParams()
    if not math.isfinite(xi):
        raise ArgumentError(f"xi must be finite, got {xi}")
    if xi == 0.0:
        return 0.0
    _, m = multiplier_components(xi)
    return math.fsum(np.abs(m) ** kp.s) ** (1.0 / kp.s)


def multiplier_grids(count: int = 1000, octaves: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """A log grid on one dyadic period [1, 2] and a log grid on [2^-octaves, 2^octaves].

    With equal point counts each global point is a dyadic shift of a period point.
    """
    period = np.exp2(np.linspace(0.0, 1.0, count))
    full = np.exp2(np.linspace(-octaves, octaves, count))
    return period, full
