"""The ell^s variation of the dyadic averages, summed exactly.

For a step function f and a point x the differences
``d_n = A_n f(x) - A_{n-1} f(x)`` vanish once ``2^n`` is at most the distance
from x to the next breakpoint, and once ``[x, x + 2^n]`` reaches past the
support they equal ``-I_x 2^{-n}`` with ``I_x = int_x^inf f``. The finite band
in between is summed directly; the geometric part above it is added in closed
form, so the infinite sum is evaluated without truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, TruncationError
from .functions import (
    PiecewiseConstantFn,
    SampleGrid,
    dyadic_average,
)

TAIL_POLICIES = ("none", "analytic_geometric")
_CHUNK = 8192


@dataclass(frozen=True)
class TruncationWindow:
    n_min: int
    n_max: int
    tail_policy: str = "analytic_geometric"

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ArgumentError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        if self.tail_policy not in TAIL_POLICIES:
            raise ArgumentError(f"unknown tail policy {self.tail_policy!r}")

    def widened(self, below: int, above: int) -> "TruncationWindow":
        return TruncationWindow(self.n_min - below, self.n_max + above, self.tail_policy)


@dataclass(frozen=True)
class VariationParams:
    """Exponent s of the ell^s sum and an optional fixed index window.

    With ``window=None`` every evaluation point gets its own exact window.
    """

    s: float = 2.0
    window: TruncationWindow | None = None

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 2):
            raise ArgumentError(f"s must satisfy 2 <= s < inf, got {self.s}")


@dataclass(frozen=True)
class DifferenceSequence:
    n_min: int
    n_max: int
    values: tuple[float, ...]
    tail_integral: float  # int_x^inf f; drives d_n = -tail_integral * 2^-n above n_max

    def as_dict(self) -> dict[int, float]:
        return {n: v for n, v in zip(range(self.n_min, self.n_max + 1), self.values)}

    def norm(self, s: float, with_tail: bool = True) -> float:
        total = math.fsum(abs(v) ** s for v in self.values)
        if with_tail:
            total += geometric_tail(self.tail_integral, self.n_max, s)
        return total ** (1.0 / s)


def geometric_tail(integral: float, n_max: int, s: float) -> float:
    """``sum_{n > n_max} |integral * 2^-n|^s`` in closed form."""
    if integral == 0.0:
        return 0.0
    first = abs(math.ldexp(integral, -(n_max + 1))) ** s
    return first / (1.0 - 2.0 ** (-s))


def _floor_log2(y: np.ndarray) -> np.ndarray:
    m, e = np.frexp(y)
    return (e - 1).astype(np.int64)


def _ceil_log2(y: np.ndarray) -> np.ndarray:
    m, e = np.frexp(y)
    return np.where(m == 0.5, e - 1, e).astype(np.int64)


def exact_window(f: PiecewiseConstantFn, x: float) -> TruncationWindow | None:
    """Smallest window on which the tail formula is exact at x, or None if Vf(x) = 0 trivially."""
    if f.is_zero or x >= f.breakpoints[-1]:
        return None
    gap = f.next_breakpoint_gap(np.array([x]))
    lo = int(_floor_log2(gap)[0])
    hi = int(_ceil_log2(np.array([f.breakpoints[-1] - x]))[0])
    return TruncationWindow(min(lo, hi), hi)


def _check_window(f: PiecewiseConstantFn, x: float, window: TruncationWindow) -> None:
    if f.is_zero or x >= f.breakpoints[-1]:
        return
    gap = float(f.next_breakpoint_gap(np.array([x]))[0])
    if math.ldexp(1.0, window.n_min) > gap:
        raise TruncationError(
            f"2^{window.n_min} exceeds the distance {gap!r} from x={x!r} to the next breakpoint"
        )
    if x + math.ldexp(1.0, window.n_max) < f.breakpoints[-1]:
        raise TruncationError(
            f"[x, x + 2^{window.n_max}] does not reach the end of the support at "
            f"{f.breakpoints[-1]!r}"
        )


def difference_sequence(
    f: PiecewiseConstantFn, x: float, window: TruncationWindow
) -> DifferenceSequence:
    """The consecutive differences ``A_n f(x) - A_{n-1} f(x)`` for n in the window."""
    averages = [dyadic_average(f, n, x) for n in range(window.n_min - 1, window.n_max + 1)]
    diffs = tuple(b - a for a, b in zip(averages[:-1], averages[1:]))
    tail = float(f.integral_to_infinity(np.array([x]))[0]) if not f.is_zero else 0.0
    return DifferenceSequence(window.n_min, window.n_max, diffs, tail)


def variation(f: PiecewiseConstantFn, x: float, params: VariationParams | None = None) -> float:
    """``Vf(x) = (sum_n |A_n f(x) - A_{n-1} f(x)|^s)^{1/s}``.

    With an explicit ``analytic_geometric`` window the exactness preconditions
    are checked and :class:`TruncationError` is raised if the window is too
    narrow. With ``tail_policy="none"`` the plain finite sum is returned.
    """
    params = params or VariationParams()
    if not math.isfinite(x):
        raise ArgumentError(f"x must be finite, got {x}")
    window = params.window
    if window is None:
        return float(variation_at(f, np.array([x], dtype=float), params.s)[0])
    if window.tail_policy == "analytic_geometric":
        _check_window(f, x, window)
    seq = difference_sequence(f, x, window)
    return seq.norm(params.s, with_tail=window.tail_policy == "analytic_geometric")


def variation_at(f: PiecewiseConstantFn, xs: np.ndarray, s: float = 2.0) -> np.ndarray:
    """Vectorised ``Vf`` at many points, each summed over its own exact window."""
    xs = np.asarray(xs, dtype=float)
    out = np.zeros(xs.shape)
    if f.is_zero:
        return out
    flat = xs.ravel()
    res = out.ravel()
    for lo in range(0, flat.size, _CHUNK):
        res[lo : lo + _CHUNK] = _variation_chunk(f, flat[lo : lo + _CHUNK], s)
    return res.reshape(xs.shape)


def _variation_chunk(f: PiecewiseConstantFn, x: np.ndarray, s: float) -> np.ndarray:
    end = f.breakpoints[-1]
    result = np.zeros(x.shape)
    active = x < end
    if not np.any(active):
        return result
    xa = x[active]
    lo = _floor_log2(f.next_breakpoint_gap(xa))
    hi = _ceil_log2(end - xa)
    lo = np.minimum(lo, hi)
    ns = np.arange(lo.min() - 1, hi.max() + 1)
    if ns[0] < -1000 or ns[-1] > 1000:
        raise ArgumentError("scale range exceeds floating-point exponent range")
    h = np.ldexp(1.0, ns)[:, None]
    averages = f.window_integrals(xa[None, :], h) / h
    d = np.diff(averages, axis=0)  # rows are n = ns[1], ..., ns[-1]
    n_rows = ns[1:, None]
    in_band = (n_rows >= lo[None, :]) & (n_rows <= hi[None, :])
    band = np.where(in_band, np.abs(d) ** s, 0.0).sum(axis=0)
    integral = f.integral_to_infinity(xa)
    tail = np.abs(np.ldexp(integral, -(hi + 1))) ** s / (1.0 - 2.0 ** (-s))
    result[active] = (band + tail) ** (1.0 / s)
    return result


def variation_on_grid(
    f: PiecewiseConstantFn, grid: SampleGrid, params: VariationParams | None = None
) -> np.ndarray:
    """Vf at every grid midpoint.

    A fixed window in ``params`` has its upper end widened to cover the support
    from the leftmost grid point; its lower end must already be fine enough.
    """
    params = params or VariationParams()
    xs = grid.points()
    if params.window is not None and not f.is_zero:
        reach = f.breakpoints[-1] - xs[0]
        n_max = params.window.n_max
        if reach > 0:
            n_max = max(n_max, int(_ceil_log2(np.array([reach]))[0]))
        window = TruncationWindow(params.window.n_min, n_max, params.window.tail_policy)
        if window.tail_policy == "analytic_geometric":
            for x in xs:
                _check_window(f, float(x), window)
        else:
            p = VariationParams(params.s, window)
            return np.array([variation(f, float(x), p) for x in xs])
    return variation_at(f, xs, params.s)


def lp_norm(values: Sequence[float] | np.ndarray, grid: SampleGrid, p: float) -> float:
    """Midpoint-rule ``L^p`` norm of sampled values over the grid's span."""
    if not p >= 1:
        raise ArgumentError(f"p must be >= 1, got {p}")
    v = np.abs(np.asarray(values, dtype=float))
    if v.shape != (grid.count,):
        raise ArgumentError(f"expected {grid.count} values, got shape {v.shape}")
    if math.isinf(p):
        return float(v.max())
    return float(np.sum(v**p) * grid.step) ** (1.0 / p)


def vector_variation(
    fs: Sequence[PiecewiseConstantFn],
    x: float,
    rho: float,
    params: VariationParams | None = None,
) -> float:
    """``(sum_j (V f_j(x))^rho)^{1/rho}``."""
    if len(fs) == 0:
        raise ArgumentError("need at least one function")
    if not (1 < rho < math.inf):
        raise ArgumentError(f"rho must satisfy 1 < rho < inf, got {rho}")
    vals = [variation(f, x, params) for f in fs]
    return math.fsum(v**rho for v in vals) ** (1.0 / rho)


def vector_variation_at(
    fs: Sequence[PiecewiseConstantFn], xs: np.ndarray, rho: float, s: float = 2.0
) -> np.ndarray:
    if len(fs) == 0:
        raise ArgumentError("need at least one function")
    if not (1 < rho < math.inf):
        raise ArgumentError(f"rho must satisfy 1 < rho < inf, got {rho}")
    acc = np.zeros(np.shape(xs))
    for f in fs:
        acc += variation_at(f, xs, s) ** rho
    return acc ** (1.0 / rho)
