"""Compactly supported step functions and the right-sided dyadic averages A_n.

A :class:`PiecewiseConstantFn` stores strictly increasing breakpoints and one
value per interval ``[b_k, b_{k+1})``; outside ``[b_0, b_K)`` the function is
zero. Every integral over an interval is a finite sum of ``value * overlap``,
so the averages ``A_n f(x) = 2^{-n} * int_x^{x+2^n} f`` are exact up to the
rounding of that sum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError

MAX_AVERAGE_EXPONENT = 60
MAX_DILATION_EXPONENT = 40


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class PiecewiseConstantFn:
    """Right-continuous step function with compact support, kept in canonical form.

    Adjacent pieces carrying the same value are merged and zero pieces at
    either end are trimmed, so two functions are equal exactly when their
    representations are. The zero function has no breakpoints at all.
    """

    __slots__ = ("breakpoints", "values", "_masses", "_cum")

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float]):
        b = np.asarray(breakpoints, dtype=float).ravel()
        v = np.asarray(values, dtype=float).ravel()
        if b.size == 0 and v.size == 0:
            pass
        elif b.size < 2:
            raise ArgumentError("need at least two breakpoints")
        elif v.size != b.size - 1:
            raise ArgumentError(
                f"expected {b.size - 1} values for {b.size} breakpoints, got {v.size}"
            )
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise ArgumentError("breakpoints and values must be finite")
        if b.size and np.any(np.diff(b) <= 0):
            raise ArgumentError("breakpoints must be strictly increasing")
        b, v = _canonicalize(b, v)
        self.breakpoints = _frozen(b)
        self.values = _frozen(v)
        self._masses = _frozen(v * np.diff(b)) if v.size else _frozen([])
        # _cum[m] = integral of f over [b_0, b_m]
        self._cum = _frozen(np.concatenate(([0.0], np.cumsum(self._masses))))

    # construction helpers ------------------------------------------------

    @classmethod
    def zero(cls) -> "PiecewiseConstantFn":
        return cls([], [])

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0) -> "PiecewiseConstantFn":
        return cls([a, b], [value])

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewiseConstantFn":
        try:
            return cls(data["breakpoints"], data["values"])
        except KeyError as exc:
            raise ArgumentError(f"function literal is missing {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseConstantFn":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    # basic queries ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    @property
    def num_pieces(self) -> int:
        return int(self.values.size)

    @property
    def support(self) -> tuple[float, float] | None:
        """Closed hull ``[b_0, b_K]`` of the support, or None for the zero function."""
        if self.is_zero:
            return None
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def total_integral(self) -> float:
        return float(self._cum[-1]) if not self.is_zero else 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x) if x.ndim else 0.0
        k = np.searchsorted(self.breakpoints, x, side="right") - 1
        ext = np.concatenate(([0.0], self.values, [0.0]))
        out = ext[np.clip(k, -1, self.num_pieces) + 1]
        return out if x.ndim else float(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseConstantFn):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        if self.is_zero:
            return "PiecewiseConstantFn.zero()"
        return f"PiecewiseConstantFn({self.breakpoints.tolist()}, {self.values.tolist()})"

    # arithmetic ----------------------------------------------------------

    def __mul__(self, c: float) -> "PiecewiseConstantFn":
        c = float(c)
        if self.is_zero or c == 0.0:
            return PiecewiseConstantFn.zero()
        return PiecewiseConstantFn(self.breakpoints, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "PiecewiseConstantFn":
        return self * -1.0

    def __add__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        return combine([self, other], lambda vals: vals[0] + vals[1])

    def __sub__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        return combine([self, other], lambda vals: vals[0] - vals[1])

    def abs(self) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(self.breakpoints, np.abs(self.values))

    def lp_norm(self, p: float) -> float:
        """Exact ``||f||_p``; ``p = inf`` gives the sup norm."""
        if self.is_zero:
            return 0.0
        if math.isinf(p):
            return float(np.max(np.abs(self.values)))
        if p < 1:
            raise ArgumentError(f"p must be >= 1, got {p}")
        lengths = np.diff(self.breakpoints)
        return math.fsum(np.abs(self.values) ** p * lengths) ** (1.0 / p)

    # vectorised integration ------------------------------------------------

    def _piece_index(self, x: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.breakpoints, x, side="right") - 1

    def window_integrals(self, a: np.ndarray, h: np.ndarray | float) -> np.ndarray:
        """``int_a^{a+h} f`` for arrays ``a`` and nonnegative ``h`` (broadcast).

        The piece containing each endpoint is looked up once and the integral
        is assembled as head overlap + whole pieces + tail overlap. Windows
        that stay inside one piece return ``value * h`` exactly.
        """
        a = np.asarray(a, dtype=float)
        b = a + h
        if self.is_zero:
            return np.zeros(np.broadcast(a, b).shape)
        a, b, h = np.broadcast_arrays(a, b, h)
        return self._integral_between(a, b, h)

    def _integral_between(self, a: np.ndarray, b: np.ndarray, h=None) -> np.ndarray:
        K = self.num_pieces
        bp = self.breakpoints
        ext = np.concatenate(([0.0], self.values, [0.0]))
        k1 = self._piece_index(a)
        k2 = self._piece_index(b)
        same = k1 == k2
        v1 = ext[k1 + 1]
        v2 = ext[k2 + 1]
        right_of_a = bp[np.clip(k1 + 1, 0, K)]
        left_of_b = bp[np.clip(k2, 0, K)]
        head = v1 * (right_of_a - a)
        middle = self._cum[np.clip(k2, 0, K)] - self._cum[np.clip(k1 + 1, 0, K)]
        tail = v2 * (b - left_of_b)
        width = (b - a) if h is None else h
        return np.where(same, v1 * width, head + middle + tail)

    def integral_to_infinity(self, x: np.ndarray) -> np.ndarray:
        """``int_x^inf f`` evaluated with the same head/whole-piece split."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        K = self.num_pieces
        k = self._piece_index(x)
        inside = k < K
        ext = np.concatenate(([0.0], self.values, [0.0]))
        head = ext[k + 1] * (self.breakpoints[np.clip(k + 1, 0, K)] - x)
        rest = self._cum[-1] - self._cum[np.clip(k + 1, 0, K)]
        return np.where(inside, head + rest, 0.0)

    def next_breakpoint_gap(self, x: np.ndarray) -> np.ndarray:
        """Distance from x to the nearest breakpoint strictly greater than x (inf past the end)."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.full_like(x, np.inf)
        K = self.num_pieces
        k = self._piece_index(x)
        nxt = self.breakpoints[np.clip(k + 1, 0, K)]
        return np.where(k < K, nxt - x, np.inf)


def _canonicalize(b: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if v.size == 0:
        return np.empty(0), np.empty(0)
    keep = np.concatenate(([True], v[1:] != v[:-1]))
    starts = b[:-1][keep]
    vals = v[keep]
    b = np.concatenate((starts, [b[-1]]))
    nz = np.flatnonzero(vals != 0.0)
    if nz.size == 0:
        return np.empty(0), np.empty(0)
    lo, hi = nz[0], nz[-1]
    return b[lo : hi + 2].copy(), vals[lo : hi + 1].copy()


def combine(fns: Sequence[PiecewiseConstantFn], op) -> PiecewiseConstantFn:
    """Pointwise ``op`` over the common refinement of several step functions.

    ``op`` receives a list of value arrays (one per function, each evaluated on
    the refined pieces) and must map zeros to zero.
    """
    live = [f for f in fns if not f.is_zero]
    if not live:
        return PiecewiseConstantFn.zero()
    b = np.unique(np.concatenate([f.breakpoints for f in live]))
    mids = 0.5 * (b[:-1] + b[1:])
    vals = op([f(mids) if not f.is_zero else np.zeros_like(mids) for f in fns])
    return PiecewiseConstantFn(b, vals)


def linear_combination(coeffs: Iterable[float], fns: Sequence[PiecewiseConstantFn]):
    coeffs = [float(c) for c in coeffs]
    return combine(fns, lambda vals: sum(c * v for c, v in zip(coeffs, vals)))


# public operations -------------------------------------------------------


def _check_finite(*xs: float) -> None:
    for x in xs:
        if not math.isfinite(x):
            raise ArgumentError(f"expected a finite number, got {x}")


def integrate(f: PiecewiseConstantFn, a: float, b: float) -> float:
    """Exact integral of f over [a, b]."""
    _check_finite(a, b)
    if a > b:
        raise ArgumentError(f"lower bound {a} exceeds upper bound {b}")
    if f.is_zero:
        return 0.0
    return float(f._integral_between(np.array([a]), np.array([b]))[0])


def _check_exponent(n: int, limit: int, what: str) -> int:
    if int(n) != n:
        raise ArgumentError(f"{what} must be an integer, got {n}")
    if abs(n) > limit:
        raise ArgumentError(f"{what} {n} outside [-{limit}, {limit}]")
    return int(n)


def dyadic_average(f: PiecewiseConstantFn, n: int, x: float) -> float:
    """A_n f(x): mean of f over the right-sided window [x, x + 2^n]."""
    n = _check_exponent(n, MAX_AVERAGE_EXPONENT, "scale exponent")
    _check_finite(x)
    h = math.ldexp(1.0, n)
    return math.ldexp(integrate(f, x, x + h), -n)


def dilate_dyadic(f: PiecewiseConstantFn, k: int) -> PiecewiseConstantFn:
    """g(x) = f(2^k x)."""
    k = _check_exponent(k, MAX_DILATION_EXPONENT, "dilation exponent")
    if f.is_zero:
        return f
    return PiecewiseConstantFn(np.ldexp(f.breakpoints, -k), f.values)


def translate(f: PiecewiseConstantFn, t: float) -> PiecewiseConstantFn:
    """g(x) = f(x - t)."""
    _check_finite(t)
    if f.is_zero or t == 0.0:
        return f
    return PiecewiseConstantFn(f.breakpoints + t, f.values)


@dataclass(frozen=True)
class SampleGrid:
    """Cell-midpoint sample points ``start + (k + 1/2) * step`` for k < count."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise ArgumentError("grid start and step must be finite")
        if self.step <= 0:
            raise ArgumentError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 1:
            raise ArgumentError(f"grid count must be a positive integer, got {self.count}")

    @classmethod
    def covering(cls, a: float, b: float, step: float) -> "SampleGrid":
        count = int(math.ceil((b - a) / step - 1e-12))
        return cls(a, step, max(count, 1))

    @property
    def stop(self) -> float:
        return self.start + self.count * self.step

    @property
    def length(self) -> float:
        return self.count * self.step

    def points(self) -> np.ndarray:
        return self.start + (np.arange(self.count) + 0.5) * self.step

    def edges(self) -> np.ndarray:
        return self.start + np.arange(self.count + 1) * self.step

    def halved(self) -> "SampleGrid":
        return SampleGrid(self.start, self.step / 2, self.count * 2)

    def dilated(self, k: int) -> "SampleGrid":
        """The grid that matches ``dilate_dyadic(f, k)``: everything scaled by 2^{-k}."""
        return SampleGrid(math.ldexp(self.start, -k), math.ldexp(self.step, -k), self.count)

    def to_dict(self) -> dict:
        return {"start": self.start, "step": self.step, "count": self.count}
