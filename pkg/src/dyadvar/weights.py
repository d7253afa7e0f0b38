"""Weights with closed-form antiderivatives and Muckenhoupt characteristics.

Supported descriptors (JSON ``kind``):

* ``constant``  -- ``c > 0``
* ``power``     -- ``c * |x|^a`` with ``a > -1``
* ``two_sided`` -- ``c * |x|^a_neg`` for x < 0 and ``c * |x|^a_pos`` for x > 0
* ``piecewise`` -- positive step weight with a positive constant ``outside``

Powers of weights stay in the same family, so dual weights
``w^{-1/(p-1)}`` are exact too. A dual power exponent ``<= -1`` is allowed
internally; its integral over an interval touching 0 is ``inf``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError
from .functions import SampleGrid


def _power_mass(e: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``int_lo^hi t^e dt`` for 0 <= lo <= hi, inf when not integrable at 0."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.zeros(np.broadcast(lo, hi).shape)
    lo, hi = np.broadcast_arrays(lo, hi)
    nonempty = hi > lo
    at_zero = nonempty & (lo == 0.0)
    away = nonempty & (lo > 0.0)
    if e <= -1:
        out[at_zero] = np.inf
    else:
        out[at_zero] = hi[at_zero] ** (e + 1) / (e + 1)
    if np.any(away):
        l, h = lo[away], hi[away]
        rel = np.log1p((h - l) / l)
        if e == -1:
            out[away] = rel
        else:
            # l^{e+1} * expm1((e+1) log(h/l)) / (e+1) avoids cancellation on narrow cells
            out[away] = l ** (e + 1) * np.expm1((e + 1) * rel) / (e + 1)
    return out


def _split_mass(e_neg: float, e_pos: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    neg_lo = np.maximum(-np.minimum(b, 0.0), 0.0)
    neg_hi = np.maximum(-a, 0.0)
    pos_lo = np.maximum(a, 0.0)
    pos_hi = np.maximum(b, 0.0)
    return _power_mass(e_neg, neg_lo, neg_hi) + _power_mass(e_pos, pos_lo, pos_hi)


def _power_essinf(e: float, lo: float, hi: float) -> float:
    """essinf of t^e over [lo, hi] with 0 <= lo < hi."""
    if e > 0:
        return lo**e
    if e < 0:
        return hi**e
    return 1.0


class Weight:
    kind: str

    def integral(self, a, b):
        raise NotImplementedError

    def essinf(self, a: float, b: float) -> float:
        raise NotImplementedError

    def power(self, q: float) -> "Weight":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def average(self, a: float, b: float) -> float:
        return float(self.integral(a, b)) / (b - a)

    def __call__(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWeight(Weight):
    c: float = 1.0
    kind: str = field(default="constant", init=False)

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ArgumentError(f"constant weight must be positive, got {self.c}")

    def integral(self, a, b):
        return self.c * (np.asarray(b, dtype=float) - np.asarray(a, dtype=float))

    def essinf(self, a, b):
        return self.c

    def power(self, q):
        return ConstantWeight(self.c**q)

    def to_dict(self):
        return {"kind": "constant", "c": self.c}

    def __call__(self, x):
        return np.full(np.shape(x), self.c) if np.ndim(x) else self.c


@dataclass(frozen=True)
class TwoSidedPowerWeight(Weight):
    """``c |x|^a_neg`` on x < 0 and ``c |x|^a_pos`` on x > 0."""

    a_neg: float
    a_pos: float
    c: float = 1.0
    kind: str = field(default="two_sided", init=False)

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ArgumentError(f"weight coefficient must be positive, got {self.c}")
        if not (math.isfinite(self.a_neg) and math.isfinite(self.a_pos)):
            raise ArgumentError("power exponents must be finite")

    @property
    def locally_integrable(self) -> bool:
        return self.a_neg > -1 and self.a_pos > -1

    def integral(self, a, b):
        return self.c * _split_mass(self.a_neg, self.a_pos, a, b)

    def essinf(self, a, b):
        vals = []
        if a < 0:
            vals.append(_power_essinf(self.a_neg, max(-b, 0.0), -a))
        if b > 0:
            vals.append(_power_essinf(self.a_pos, max(a, 0.0), b))
        return self.c * min(vals)

    def power(self, q):
        return TwoSidedPowerWeight(self.a_neg * q, self.a_pos * q, self.c**q)

    def to_dict(self):
        return {"kind": "two_sided", "a_neg": self.a_neg, "a_pos": self.a_pos, "c": self.c}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            out = self.c * np.where(x < 0, ax**self.a_neg, ax**self.a_pos)
        return out if out.ndim else float(out)


class PowerWeight(TwoSidedPowerWeight):
    """``c |x|^a``."""

    def __init__(self, a: float, c: float = 1.0):
        super().__init__(a, a, c)
        object.__setattr__(self, "kind", "power")

    @property
    def a(self) -> float:
        return self.a_pos

    def power(self, q):
        return PowerWeight(self.a * q, self.c**q)

    def to_dict(self):
        return {"kind": "power", "a": self.a, "c": self.c}

    def __repr__(self):
        return f"PowerWeight(a={self.a!r}, c={self.c!r})"


@dataclass(frozen=True)
class PiecewiseWeight(Weight):
    """Positive step weight: ``values[k]`` on ``[b_k, b_{k+1})``, ``outside`` elsewhere."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    outside: float = 1.0
    kind: str = field(default="piecewise", init=False)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.size < 2 or v.size != b.size - 1 or np.any(np.diff(b) <= 0):
            raise ArgumentError("piecewise weight needs increasing breakpoints and one value per piece")
        if np.any(v <= 0) or not self.outside > 0:
            raise ArgumentError("piecewise weight values must be positive")
        object.__setattr__(self, "breakpoints", tuple(float(t) for t in b))
        object.__setattr__(self, "values", tuple(float(t) for t in v))

    def _cumulative(self, x):
        """``int_{b_0}^x w`` (negative to the left of b_0)."""
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        cum = np.concatenate(([0.0], np.cumsum(v * np.diff(b))))
        x = np.asarray(x, dtype=float)
        inner = np.clip(x, b[0], b[-1])
        k = np.clip(np.searchsorted(b, inner, side="right") - 1, 0, v.size - 1)
        val = cum[k] + v[k] * (inner - b[k])
        val = val + self.outside * (np.maximum(x - b[-1], 0.0) - np.maximum(b[0] - x, 0.0))
        return val

    def integral(self, a, b):
        return self._cumulative(b) - self._cumulative(a)

    def essinf(self, a, b):
        bp = np.asarray(self.breakpoints)
        vals = [v for lo, hi, v in zip(bp[:-1], bp[1:], self.values) if lo < b and hi > a]
        if a < bp[0] or b > bp[-1]:
            vals.append(self.outside)
        return float(min(vals))

    def power(self, q):
        return PiecewiseWeight(
            self.breakpoints, tuple(v**q for v in self.values), self.outside**q
        )

    def to_dict(self):
        return {
            "kind": "piecewise",
            "breakpoints": list(self.breakpoints),
            "values": list(self.values),
            "outside": self.outside,
        }

    def __call__(self, x):
        b = np.asarray(self.breakpoints)
        ext = np.concatenate(([self.outside], self.values, [self.outside]))
        x = np.asarray(x, dtype=float)
        out = ext[np.searchsorted(b, x, side="right")]
        return out if out.ndim else float(out)


def weight_from_dict(data: dict) -> Weight:
    kind = data.get("kind")
    try:
        if kind == "constant":
            return ConstantWeight(float(data.get("c", 1.0)))
        if kind == "power":
            a = float(data["a"])
            if not a > -1:
                raise ArgumentError(f"power weight exponent must exceed -1, got {a}")
            return PowerWeight(a, float(data.get("c", 1.0)))
        if kind == "two_sided":
            w = TwoSidedPowerWeight(float(data["a_neg"]), float(data["a_pos"]), float(data.get("c", 1.0)))
            if not w.locally_integrable:
                raise ArgumentError("two-sided power exponents must exceed -1")
            return w
        if kind == "piecewise":
            return PiecewiseWeight(
                tuple(data["breakpoints"]), tuple(data["values"]), float(data.get("outside", 1.0))
            )
    except KeyError as exc:
        raise ArgumentError(f"weight descriptor is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ArgumentError):
            raise
        raise ArgumentError(f"malformed weight descriptor: {exc}") from None
    raise ArgumentError(f"unknown weight kind {kind!r}")


def weight_from_json(text: str) -> Weight:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"weight is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ArgumentError("weight descriptor must be a JSON object")
    return weight_from_dict(data)


def weight_integral(w: Weight, a: float, b: float) -> float:
    """Exact ``int_a^b w``."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ArgumentError("integration bounds must be finite")
    if a > b:
        raise ArgumentError(f"lower bound {a} exceeds upper bound {b}")
    return float(w.integral(a, b))


# interval families ---------------------------------------------------------


@dataclass(frozen=True)
class IntervalFamily:
    """Dyadic intervals ``[k 2^m, (k+1) 2^m]`` for m_min <= m <= m_max meeting a root interval,
    together with the same intervals shifted right by ``2^m / 3``.

    Depth ``d`` keeps the levels ``m_max, m_max - 1, ..., m_max - d + 1``.
    """

    root: tuple[float, float] = (0.0, 1.0)
    m_min: int = -8
    m_max: int = 0
    shifted: bool = True

    def __post_init__(self):
        if not self.root[0] < self.root[1]:
            raise ArgumentError(f"root interval {self.root} is empty")
        if self.m_min > self.m_max:
            raise ArgumentError(f"m_min={self.m_min} exceeds m_max={self.m_max}")

    @property
    def depth(self) -> int:
        return self.m_max - self.m_min + 1

    def at_depth(self, d: int) -> "IntervalFamily":
        if not 1 <= d <= self.depth:
            raise ArgumentError(f"depth {d} outside 1..{self.depth}")
        return IntervalFamily(self.root, self.m_max - d + 1, self.m_max, self.shifted)

    def level(self, m: int) -> np.ndarray:
        """Intervals of length 2^m as an (N, 2) array, unshifted ones first."""
        size = math.ldexp(1.0, m)
        r0, r1 = self.root
        out = []
        offsets = (0.0, size / 3.0) if self.shifted else (0.0,)
        for off in offsets:
            k_lo = math.floor((r0 - off) / size) - 1
            k_hi = math.ceil((r1 - off) / size) + 1
            k = np.arange(k_lo, k_hi + 1)
            left = k * size + off
            right = left + size
            keep = (right > r0) & (left < r1)
            out.append(np.stack((left[keep], right[keep]), axis=1))
        return np.concatenate(out)

    def levels(self) -> list[tuple[int, np.ndarray]]:
        return [(m, self.level(m)) for m in range(self.m_max, self.m_min - 1, -1)]

    def intervals(self) -> np.ndarray:
        return np.concatenate([iv for _, iv in self.levels()])

    def __len__(self) -> int:
        return sum(len(iv) for _, iv in self.levels())

    def to_dict(self) -> dict:
        return {"root": list(self.root), "m_min": self.m_min, "m_max": self.m_max, "shifted": self.shifted}


# characteristics -----------------------------------------------------------


@dataclass(frozen=True)
class ApReport:
    p: float
    characteristic: float
    argmax: tuple[float, float]
    depth: int
    family_size: int
    trace: tuple[float, ...]  # running maximum after each added level

    @property
    def verdict(self) -> str:
        return depth_trace_verdict(self.trace)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "characteristic": self.characteristic,
            "argmax": list(self.argmax),
            "depth": self.depth,
            "family_size": self.family_size,
            "trace": list(self.trace),
            "verdict": self.verdict,
        }


STABLE_REL_INCREASE = 1e-3
DIVERGENT_GROWTH = 1.5


def trace_growth(trace: Sequence[float]) -> list[float]:
    """Ratios of consecutive trace entries; an infinite entry counts as infinite growth."""
    out = []
    for a, b in zip(trace[:-1], trace[1:]):
        if math.isinf(b):
            out.append(math.inf)
        else:
            out.append(b / a if a > 0 else math.inf)
    return out


def depth_trace_verdict(trace: Sequence[float], window: int = 3) -> str:
    """``stabilizes``, ``diverges`` or ``undecided`` from a depth trace.

    Stabilizes: finite and every relative increase over the last ``window``
    depths is below 1e-3. Diverges: the trace reaches inf, or every one of the
    last ``window`` steps grows by more than 50%.
    """
    if any(math.isinf(t) for t in trace):
        return "diverges"
    growth = trace_growth(trace)[-window:]
    if len(growth) < window:
        return "undecided"
    if all(g - 1.0 < STABLE_REL_INCREASE for g in growth):
        return "stabilizes"
    if all(g > DIVERGENT_GROWTH for g in growth):
        return "diverges"
    return "undecided"


def _level_products(w: Weight, p: float, ivs: np.ndarray) -> np.ndarray:
    a, b = ivs[:, 0], ivs[:, 1]
    length = b - a
    avg_w = w.integral(a, b) / length
    dual = w.power(-1.0 / (p - 1.0))
    avg_dual = dual.integral(a, b) / length
    with np.errstate(over="ignore", invalid="ignore"):
        return avg_w * avg_dual ** (p - 1.0)


def _report_from_levels(p, levels, values_per_level) -> ApReport:
    best, best_iv, trace, size = -math.inf, (math.nan, math.nan), [], 0
    for (m, ivs), vals in zip(levels, values_per_level):
        size += len(ivs)
        if len(vals):
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, best_iv = float(vals[i]), (float(ivs[i, 0]), float(ivs[i, 1]))
        trace.append(best)
    return ApReport(p, best, best_iv, len(levels), size, tuple(trace))


def ap_characteristic(w: Weight, p: float, family: IntervalFamily) -> ApReport:
    """``max_I avg_I(w) * avg_I(w^{-1/(p-1)})^{p-1}`` over the family, with a depth trace."""
    if not (1 < p < math.inf):
        raise ArgumentError(f"p must satisfy 1 < p < inf, got {p}")
    levels = family.levels()
    vals = [_level_products(w, p, ivs) for _, ivs in levels]
    return _report_from_levels(p, levels, vals)


def a1_report(w: Weight, family: IntervalFamily) -> ApReport:
    levels = family.levels()
    vals = []
    for _, ivs in levels:
        out = []
        for a, b in ivs:
            inf_ = w.essinf(float(a), float(b))
            avg = w.average(float(a), float(b))
            out.append(math.inf if inf_ == 0 else avg / inf_)
        vals.append(np.array(out))
    return _report_from_levels(1.0, levels, vals)


def a1_characteristic(w: Weight, family: IntervalFamily) -> float:
    """``max_I avg_I(w) / essinf_I(w)``; inf when w vanishes somewhere in an interval."""
    return a1_report(w, family).characteristic


def ainfty_witness(
    w: Weight,
    Q: tuple[float, float],
    E: Sequence[tuple[float, float]],
    delta: float,
    eps: float,
) -> bool:
    """Whether ``|E| < delta |Q|  =>  w(E) < (1 - eps) w(Q)`` holds for this (Q, E).

    E is a finite union of intervals inside Q; overlaps are merged first.
    """
    if not (0 < delta < 1 and 0 < eps < 1):
        raise ArgumentError("delta and eps must lie in (0, 1)")
    q0, q1 = Q
    if not q0 < q1:
        raise ArgumentError(f"Q={Q} is empty")
    merged: list[list[float]] = []
    for a, b in sorted((float(a), float(b)) for a, b in E):
        if a > b:
            raise ArgumentError(f"interval ({a}, {b}) is reversed")
        if a < q0 or b > q1:
            raise ArgumentError(f"E is not contained in Q={Q}")
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    measure_e = math.fsum(b - a for a, b in merged)
    if not measure_e < delta * (q1 - q0):
        return True
    w_e = math.fsum(float(w.integral(a, b)) for a, b in merged)
    return w_e < (1.0 - eps) * float(w.integral(q0, q1))


# weighted norms on grids ---------------------------------------------------


def cell_masses(w: Weight, grid: SampleGrid) -> np.ndarray:
    edges = grid.edges()
    return np.asarray(w.integral(edges[:-1], edges[1:]), dtype=float)


def weighted_lp_norm(values, grid: SampleGrid, w: Weight, p: float) -> float:
    """``(sum_k |v_k|^p w(cell_k))^{1/p}`` with exact cell masses."""
    if not p >= 1:
        raise ArgumentError(f"p must be >= 1, got {p}")
    v = np.abs(np.asarray(values, dtype=float))
    if v.shape != (grid.count,):
        raise ArgumentError(f"expected {grid.count} values, got shape {v.shape}")
    return float(np.sum(v**p * cell_masses(w, grid))) ** (1.0 / p)


def weighted_distribution(values, grid: SampleGrid, w: Weight, lam: float) -> float:
    """w-measure of the union of grid cells whose sampled value exceeds lam."""
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.count,):
        raise ArgumentError(f"expected {grid.count} values, got shape {v.shape}")
    return float(np.sum(cell_masses(w, grid)[v > lam]))


def weighted_distribution_curve(values, grid: SampleGrid, w: Weight, lambdas) -> np.ndarray:
    """:func:`weighted_distribution` for many levels at once."""
    v = np.asarray(values, dtype=float)
    masses = cell_masses(w, grid)
    order = np.argsort(v)
    sv = v[order]
    tail = np.concatenate((np.cumsum(masses[order][::-1])[::-1], [0.0]))
    idx = np.searchsorted(sv, np.asarray(lambdas, dtype=float), side="right")
    return tail[idx]
