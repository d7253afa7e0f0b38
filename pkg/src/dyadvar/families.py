"""Seeded test families: random step functions, H^1 atoms and function bundles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .functions import PiecewiseConstantFn, dilate_dyadic, integrate

MAX_LATTICE_EXPONENT = 30


@dataclass(frozen=True)
class FamilySpec:
    """Recipe for a deterministic family of step functions.

    Breakpoints lie on the lattice ``2^{-M} Z`` inside ``[-2^N, 2^N]``;
    values are uniform in ``value_range``. Generation is sequential from one
    PCG64 stream, so a larger ``count`` extends a smaller family.
    """

    seed: int = 42
    count: int = 200
    pieces: tuple[int, int] = (1, 8)
    lattice_M: int = 8
    support_N: int = 3
    value_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ArgumentError(f"count must be a positive integer, got {self.count}")
        lo, hi = self.pieces
        if not (1 <= lo <= hi):
            raise ArgumentError(f"piece-count range {self.pieces} is invalid")
        if abs(self.lattice_M) > MAX_LATTICE_EXPONENT or abs(self.support_N) > MAX_LATTICE_EXPONENT:
            raise ArgumentError("lattice exponents out of range")
        if self.lattice_M + self.support_N < 0:
            raise ArgumentError("lattice is coarser than the support")
        slots = 2 ** (self.lattice_M + self.support_N + 1)
        if hi + 1 > slots + 1:
            raise ArgumentError(f"{hi} pieces do not fit on {slots + 1} lattice points")
        if not self.value_range[0] < self.value_range[1]:
            raise ArgumentError(f"value range {self.value_range} is empty")
        if not (0 <= self.seed < 2**64):
            raise ArgumentError("seed must be a 64-bit unsigned integer")

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64([self.seed, stream]))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "pieces": list(self.pieces),
            "lattice_M": self.lattice_M,
            "support_N": self.support_N,
            "value_range": list(self.value_range),
        }


def _random_function(rng: np.random.Generator, spec: FamilySpec) -> PiecewiseConstantFn:
    half = 2 ** (spec.lattice_M + spec.support_N)
    k = int(rng.integers(spec.pieces[0], spec.pieces[1] + 1))
    ticks = np.sort(rng.choice(2 * half + 1, size=k + 1, replace=False)) - half
    b = np.ldexp(ticks.astype(float), -spec.lattice_M)
    v = rng.uniform(spec.value_range[0], spec.value_range[1], size=k)
    return PiecewiseConstantFn(b, v)


def gen_functions(spec: FamilySpec) -> list[PiecewiseConstantFn]:
    rng = spec.rng(0)
    return [_random_function(rng, spec) for _ in range(spec.count)]


def gen_bundles(spec: FamilySpec, J: int) -> list[list[PiecewiseConstantFn]]:
    """``spec.count`` bundles of J functions each, drawn from their own stream."""
    if J < 1:
        raise ArgumentError(f"J must be >= 1, got {J}")
    rng = spec.rng(2)
    return [[_random_function(rng, spec) for _ in range(J)] for _ in range(spec.count)]


def check_function(f: PiecewiseConstantFn, spec: FamilySpec) -> list[str]:
    """Invariant violations of a generated function (empty list if none)."""
    problems = []
    if f.is_zero:
        return problems
    b = f.breakpoints
    if b.size < 2 or b.size != f.values.size + 1:
        problems.append("shape")
    if np.any(np.diff(b) <= 0):
        problems.append("breakpoints not increasing")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(f.values))):
        problems.append("non-finite entries")
    if np.any(f.values[1:] == f.values[:-1]) or f.values[0] == 0 or f.values[-1] == 0:
        problems.append("not canonical")
    bound = math.ldexp(1.0, spec.support_N)
    if b[0] < -bound or b[-1] > bound:
        problems.append("support outside [-2^N, 2^N]")
    scaled = np.ldexp(b, spec.lattice_M)
    if np.any(scaled != np.round(scaled)):
        problems.append("breakpoint off the lattice")
    return problems


# H^1 atoms -----------------------------------------------------------------

ATOM_MEAN_TOL = 1e-14


@dataclass(frozen=True)
class H1Atom:
    """A step function supported in ``interval`` with zero mean and sup norm <= 1/|interval|."""

    interval: tuple[float, float]
    fn: PiecewiseConstantFn = field(compare=True)

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    def violations(self, mean_tol: float = ATOM_MEAN_TOL) -> list[str]:
        out = []
        a, b = self.interval
        if not b > a:
            out.append("empty interval")
            return out
        if self.fn.is_zero:
            return out
        lo, hi = self.fn.support
        if lo < a or hi > b:
            out.append("support leaves the interval")
        if abs(integrate(self.fn, a, b)) > mean_tol:
            out.append("nonzero integral")
        if self.fn.lp_norm(math.inf) > (1.0 / self.length) * (1 + 1e-15):
            out.append("sup norm exceeds 1/|I|")
        return out

    def dilated(self, k: int) -> "H1Atom":
        """``x -> 2^k a(2^k x)``, an atom on the interval scaled by 2^{-k}."""
        a, b = self.interval
        return H1Atom(
            (math.ldexp(a, -k), math.ldexp(b, -k)),
            math.ldexp(1.0, k) * dilate_dyadic(self.fn, k),
        )


def haar_atom(start: float = 0.0, k: int = 0) -> H1Atom:
    """``+2^{-k}`` on the left half of ``[start, start + 2^k]``, ``-2^{-k}`` on the right half."""
    length = math.ldexp(1.0, k)
    h = math.ldexp(1.0, -k)
    fn = PiecewiseConstantFn([start, start + length / 2, start + length], [h, -h])
    return H1Atom((start, start + length), fn)


def _random_atom(rng: np.random.Generator, spec: FamilySpec, k: int) -> H1Atom:
    length = math.ldexp(1.0, k)
    half = 2 ** (spec.lattice_M + spec.support_N)
    c = math.ldexp(float(rng.integers(-half, half + 1)), -spec.lattice_M)
    while True:
        q = int(rng.integers(1, 5))
        parts = 2**q
        v = rng.uniform(-1.0, 1.0, size=parts)
        v[-1] = -math.fsum(v[:-1])
        peak = float(np.max(np.abs(v)))
        if peak > 0:
            break
    v = v * ((1.0 / length) / peak)
    b = c + np.arange(parts + 1) * math.ldexp(length, -q)
    return H1Atom((c, c + length), PiecewiseConstantFn(b, v))


def gen_atoms(spec: FamilySpec, scales) -> list[H1Atom]:
    """``spec.count`` random atoms on ``[c, c + 2^k]``, cycling k through ``scales``.

    Values on 2..16 equal sub-intervals are random, the last one is solved for
    zero mean, and everything is rescaled so the sup norm is exactly 1/|I|.
    """
    scales = [int(k) for k in scales]
    if not scales:
        raise ArgumentError("need at least one scale")
    for k in scales:
        if abs(k) > 40:
            raise ArgumentError(f"atom scale exponent {k} out of range")
    rng = spec.rng(1)
    return [_random_atom(rng, spec, scales[i % len(scales)]) for i in range(spec.count)]
