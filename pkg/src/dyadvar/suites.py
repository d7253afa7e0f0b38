"""Verification suites: measured ratio constants with stability-based verdicts.

Every suite is a pure function of its arguments. Instances may be evaluated
in worker processes, but results are always assembled in instance order, so
reports do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .errors import ArgumentError
from .families import FamilySpec, H1Atom, gen_atoms, gen_bundles, gen_functions, haar_atom
from .functions import PiecewiseConstantFn, SampleGrid, combine, dilate_dyadic
from .variation import lp_norm, variation_at, vector_variation_at
from .weights import (
    ApReport,
    ConstantWeight,
    IntervalFamily,
    Weight,
    a1_report,
    ap_characteristic,
    cell_masses,
    weighted_distribution_curve,
)

PASS, FAIL, HYPOTHESIS_NOT_MET = "PASS", "FAIL", "HYPOTHESIS_NOT_MET"

GRID_STABILITY_TOL = 1e-2
STRONG_DILATION_TOL = 1e-6
WEAK_DILATION_TOL = 1e-3
H1_WIDENING_TOL = 1e-3
H1_FLATNESS_TOL = 1e-3
BMO_GROWTH_TOL = 0.05
DEFAULT_DILATIONS = tuple(range(-3, 4))


def default_grid() -> SampleGrid:
    return SampleGrid(-16.0, 2.0**-10, 32 * 2**10)


def geometric_lambdas(lo: float = 1e-3, hi: float = 2.0, count: int = 50) -> np.ndarray:
    return np.geomspace(lo, hi, count)


def jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating,)):
        return jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


@dataclass
class RatioReport:
    suite: str
    params: dict
    instances: list[dict]
    sup_ratio: float
    argmax: int | None
    verdict: str
    metrics: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    plot: tuple[str, list[tuple[float, float]]] | None = None

    def to_dict(self) -> dict:
        return jsonable(
            {
                "suite": self.suite,
                "version": __version__,
                "params": self.params,
                "sup_ratio": self.sup_ratio,
                "argmax_instance": self.argmax,
                "verdict": self.verdict,
                "metrics": self.metrics,
                "notes": self.notes,
                "instances": self.instances,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def csv_rows(self) -> list[dict]:
        scalar_params = {
            k: v for k, v in sorted(self.params.items()) if isinstance(v, (int, float, str))
        }
        rows = []
        for inst in self.instances:
            row = {"suite": self.suite, "seed": self.params.get("seed", "")}
            row["instance_id"] = inst.get("instance_id")
            row.update(scalar_params)
            for k, v in sorted(inst.items()):
                if k not in ("instance_id", "ratio") and isinstance(v, (int, float, str)):
                    row[k] = v
            row["ratio"] = inst.get("ratio")
            rows.append(jsonable(row))
        return rows

    def to_csv(self) -> str:
        rows = self.csv_rows()
        buf = io.StringIO()
        header: list[str] = []
        for row in rows:
            for k in row:
                if k not in header:
                    header.append(k)
        if not header:
            header = ["suite", "seed", "instance_id", "ratio"]
        writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        return buf.getvalue()

    def plot_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        name, points = self.plot or ("x", [])
        writer.writerow([name, "value"])
        for x, v in points:
            writer.writerow([repr(float(x)), repr(float(v))])
        return buf.getvalue()


def _pmap(fn: Callable, items: Sequence, workers: int = 1) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def _sup(instances: list[dict], key: str = "ratio") -> tuple[float, int | None]:
    best, arg = 0.0, None
    for inst in instances:
        if inst.get("degenerate"):
            continue
        r = inst[key]
        if arg is None or r > best:
            best, arg = r, inst["instance_id"]
    return best, arg


def _family_params(spec: FamilySpec) -> dict:
    return {"family": spec.to_dict(), "seed": spec.seed}


# strong type --------------------------------------------------------------


def _strong_ratios(f: PiecewiseConstantFn, ps, s: float, grid: SampleGrid) -> list[float]:
    v = variation_at(f, grid.points(), s)
    return [lp_norm(v, grid, p) / f.lp_norm(p) for p in ps]


def _strong_instance(f: PiecewiseConstantFn, ps, s, grid, ks) -> list[dict]:
    if f.is_zero:
        return [{"degenerate": True} for _ in ps]
    base = _strong_ratios(f, ps, s, grid)
    halved = _strong_ratios(f, ps, s, grid.halved())
    dev = [0.0 for _ in ps]
    for k in ks:
        if k == 0:
            continue
        dk = _strong_ratios(dilate_dyadic(f, k), ps, s, grid.dilated(k))
        dev = [max(d, _rel(a, b)) for d, a, b in zip(dev, base, dk)]
    return [
        {"ratio": r, "ratio_halved": h, "dilation_dev": d}
        for r, h, d in zip(base, halved, dev)
    ]


def strong_type_reports(
    spec: FamilySpec,
    ps: Sequence[float],
    s: float,
    grid: SampleGrid,
    dilations: Sequence[int] = DEFAULT_DILATIONS,
    workers: int = 1,
    functions: Sequence[PiecewiseConstantFn] | None = None,
) -> list[RatioReport]:
    """Strong-type reports for several p sharing one set of variation evaluations."""
    for p in ps:
        if not (1 < p < math.inf):
            raise ArgumentError(f"strong type needs 1 < p < inf, got {p}; use the weak-type suite")
    fns = list(functions) if functions is not None else gen_functions(spec)
    per_instance = _pmap(
        partial(_strong_instance, ps=tuple(ps), s=s, grid=grid, ks=tuple(dilations)), fns, workers
    )
    reports = []
    for j, p in enumerate(ps):
        instances = []
        for i, res in enumerate(per_instance):
            inst = {"instance_id": i, **res[j]}
            if inst.get("degenerate"):
                inst["ratio"] = 0.0
            instances.append(inst)
        live = [x for x in instances if not x.get("degenerate")]
        sup, arg = _sup(instances)
        sup_h, _ = _sup(instances, "ratio_halved") if live else (0.0, None)
        grid_change = _rel(sup, sup_h)
        max_dev = max((x["dilation_dev"] for x in live), default=0.0)
        finite = math.isfinite(sup)
        ok = finite and grid_change < GRID_STABILITY_TOL and max_dev < STRONG_DILATION_TOL
        notes = []
        degenerate = len(instances) - len(live)
        if degenerate:
            notes.append(f"{degenerate} zero function(s) excluded from the sup")
        plot_pts: list[tuple[float, float]] = []
        if arg is not None:
            xs = grid.points()
            vals = variation_at(fns[arg], xs, s)
            stride = max(1, grid.count // 2048)
            plot_pts = list(zip(xs[::stride].tolist(), vals[::stride].tolist()))
        reports.append(
            RatioReport(
                suite="strongtype",
                params={**_family_params(spec), "p": p, "s": s, "grid": grid.to_dict(),
                        "dilations": list(dilations)},
                instances=instances,
                sup_ratio=sup,
                argmax=arg,
                verdict=PASS if ok else FAIL,
                metrics={
                    "sup_ratio_halved_grid": sup_h,
                    "grid_halving_rel_change": grid_change,
                    "max_dilation_rel_dev": max_dev,
                    "degenerate_instances": degenerate,
                },
                notes=notes,
                plot=("x", plot_pts),
            )
        )
    return reports


def strong_type_suite(spec, p, s, grid, **kw) -> RatioReport:
    """``sup_f ||Vf||_p / ||f||_p`` over the family, with grid-halving and dilation checks."""
    return strong_type_reports(spec, [p], s, grid, **kw)[0]


# weak type ----------------------------------------------------------------


def _weak_curve(f, s, grid, lambdas, w: Weight | None = None) -> np.ndarray:
    w = w or ConstantWeight(1.0)
    v = variation_at(f, grid.points(), s)
    dist = weighted_distribution_curve(v, grid, w, lambdas)
    return np.asarray(lambdas) * dist


def _weak_instance(f, s, grid, lambdas, ks) -> dict:
    if f.is_zero:
        return {"degenerate": True}
    norm1 = f.lp_norm(1)
    curve = _weak_curve(f, s, grid, lambdas) / norm1
    halved = _weak_curve(f, s, grid.halved(), lambdas) / norm1
    dev = 0.0
    for k in ks:
        if k == 0:
            continue
        fk = dilate_dyadic(f, k)
        ck = _weak_curve(fk, s, grid.dilated(k), lambdas) / fk.lp_norm(1)
        dev = max(dev, _rel(float(curve.max()), float(ck.max())))
    jumps = np.abs(np.diff(curve))
    return {
        "ratio": float(curve.max()),
        "argmax_lambda": float(lambdas[int(np.argmax(curve))]),
        "ratio_halved": float(halved.max()),
        "dilation_dev": dev,
        "max_adjacent_lambda_jump": float(jumps.max()) if jumps.size else 0.0,
        "curve": curve.tolist(),
    }


def weak_type_suite(
    spec: FamilySpec,
    s: float,
    grid: SampleGrid,
    lambdas: Sequence[float],
    dilations: Sequence[int] = DEFAULT_DILATIONS,
    workers: int = 1,
    functions: Sequence[PiecewiseConstantFn] | None = None,
) -> RatioReport:
    """``sup_{f, lambda} lambda |{Vf > lambda}| / ||f||_1``."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0 or np.any(lambdas <= 0):
        raise ArgumentError("lambda values must be positive")
    fns = list(functions) if functions is not None else gen_functions(spec)
    results = _pmap(
        partial(_weak_instance, s=s, grid=grid, lambdas=lambdas, ks=tuple(dilations)), fns, workers
    )
    instances = []
    curves = []
    for i, res in enumerate(results):
        inst = {"instance_id": i, **res}
        if inst.get("degenerate"):
            inst["ratio"] = 0.0
        else:
            curves.append(np.asarray(inst.pop("curve")))
        instances.append(inst)
    live = [x for x in instances if not x.get("degenerate")]
    sup, arg = _sup(instances)
    sup_h, _ = _sup(instances, "ratio_halved") if live else (0.0, None)
    grid_change = _rel(sup, sup_h)
    max_dev = max((x["dilation_dev"] for x in live), default=0.0)
    ok = math.isfinite(sup) and grid_change < GRID_STABILITY_TOL and max_dev < WEAK_DILATION_TOL
    envelope = np.max(np.stack(curves), axis=0) if curves else np.zeros_like(lambdas)
    return RatioReport(
        suite="weaktype",
        params={**_family_params(spec), "s": s, "grid": grid.to_dict(),
                "lambdas": lambdas.tolist(), "dilations": list(dilations)},
        instances=instances,
        sup_ratio=sup,
        argmax=arg,
        verdict=PASS if ok else FAIL,
        metrics={
            "sup_ratio_halved_grid": sup_h,
            "grid_halving_rel_change": grid_change,
            "max_dilation_rel_dev": max_dev,
            "max_adjacent_lambda_jump": max((x["max_adjacent_lambda_jump"] for x in live), default=0.0),
            "degenerate_instances": len(instances) - len(live),
        },
        plot=("lambda", list(zip(lambdas.tolist(), envelope.tolist()))),
    )


# H^1 -> L^1 ---------------------------------------------------------------


def _abs_primitive_integral(fn: PiecewiseConstantFn, a: float, b: float) -> float:
    """``int_0^{b-a} |P(t)| dt`` with ``P(t) = int_a^{a+t} fn``, exactly."""
    pts = [a] + [t for t in fn.breakpoints.tolist() if a < t < b] + [b]
    total = []
    P0 = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val = float(fn(0.5 * (lo + hi)))
        length = hi - lo
        P1 = P0 + val * length
        if P0 * P1 >= 0:
            total.append(0.5 * length * (abs(P0) + abs(P1)))
        else:
            total.append(0.5 * length * (P0 * P0 + P1 * P1) / (abs(P0) + abs(P1)))
        P0 = P1
    return math.fsum(total)


def _near_exponent(length: float) -> int:
    """Smallest N with 2^N >= 8 |I|."""
    m, e = math.frexp(8 * length)
    return e - 1 if m == 0.5 else e


def atom_variation_l1(
    atom: H1Atom, s: float, cells_per_length: int = 1024, extra_octaves: int = 0
) -> dict:
    """``||V a||_1`` for a mean-zero atom on I = [c, c + L].

    Left of ``c - 2^N`` (2^N >= 8L) only two consecutive differences are
    nonzero at each point and ``V a`` integrates to
    ``2^{1/s} 2^{-N} int_0^L |P|``; that far field is added in closed form.
    The window ``[c - 2^N, c + L]`` is integrated on a grid with
    ``cells_per_length`` cells per L; right of c + L, ``V a`` vanishes.
    """
    c, end = atom.interval
    length = atom.length
    N = _near_exponent(length) + extra_octaves
    left = c - math.ldexp(1.0, N)
    step = length / cells_per_length
    grid = SampleGrid.covering(left, end, step)
    near = lp_norm(variation_at(atom.fn, grid.points(), s), grid, 1.0)
    far = 2.0 ** (1.0 / s) * math.ldexp(1.0, -N) * _abs_primitive_integral(atom.fn, c, end)
    return {"near": near, "far": far, "total": near + far, "near_octave": N}


def far_field_strip_masses(
    fn: PiecewiseConstantFn,
    interval: tuple[float, float],
    s: float,
    octaves: int = 4,
    cells_per_length: int = 256,
) -> list[float]:
    """L^1 mass of ``V fn`` on the strips ``[c - 2^{N+o+1}, c - 2^{N+o}]``, o = 0..octaves-1.

    For a mean-zero atom the masses halve from strip to strip; a bump with
    nonzero integral leaves a mass that does not decay (a non-integrable tail).
    """
    c, end = interval
    length = end - c
    N = _near_exponent(length)
    step = length / cells_per_length
    out = []
    for o in range(octaves):
        a = c - math.ldexp(1.0, N + o + 1)
        b = c - math.ldexp(1.0, N + o)
        grid = SampleGrid.covering(a, b, step)
        out.append(lp_norm(variation_at(fn, grid.points(), s), grid, 1.0))
    return out


def _h1_instance(atom: H1Atom, s: float, cells: int) -> dict:
    problems = atom.violations()
    if problems:
        return {"fixture_error": "; ".join(problems), "ratio": math.nan, "scale": math.log2(atom.length)}
    base = atom_variation_l1(atom, s, cells)
    wide = atom_variation_l1(atom, s, cells, extra_octaves=1)
    return {
        "ratio": base["total"],
        "ratio_widened": wide["total"],
        "widening_rel_change": _rel(base["total"], wide["total"]),
        "far_field": base["far"],
        "scale": math.log2(atom.length),
    }


def h1_suite(
    spec: FamilySpec,
    scales: Sequence[int],
    s: float,
    grid: SampleGrid | None = None,
    workers: int = 1,
    atoms: Sequence[H1Atom] | None = None,
    haar_scales: Sequence[int] | None = None,
) -> RatioReport:
    """``sup_a ||V a||_1`` over atoms, plus flatness of rescaled Haar atoms.

    The grid's step sets the resolution: ``1 / step`` cells per atom length.
    """
    grid = grid or default_grid()
    cells = max(16, int(round(1.0 / grid.step)))
    atom_list = list(atoms) if atoms is not None else gen_atoms(spec, scales)
    results = _pmap(partial(_h1_instance, s=s, cells=cells), atom_list, workers)
    instances = [{"instance_id": i, **r} for i, r in enumerate(results)]
    errors = [x for x in instances if "fixture_error" in x]
    valid = [x for x in instances if "fixture_error" not in x]
    sup, arg = _sup(valid) if valid else (math.nan, None)
    haar_scales = list(haar_scales if haar_scales is not None else scales)
    haar = _pmap(partial(_h1_instance, s=s, cells=cells), [haar_atom(0.0, k) for k in haar_scales], workers)
    haar_vals = [h["ratio"] for h in haar]
    flatness = max(haar_vals) / min(haar_vals) - 1.0 if haar_vals else 0.0
    max_widen = max((x["widening_rel_change"] for x in valid), default=0.0)
    ok = (
        not errors
        and math.isfinite(sup)
        and all(math.isfinite(x["ratio"]) for x in valid)
        and max_widen < H1_WIDENING_TOL
        and flatness <= H1_FLATNESS_TOL
    )
    notes = [f"instance {x['instance_id']}: fixture error ({x['fixture_error']})" for x in errors]
    return RatioReport(
        suite="h1",
        params={**_family_params(spec), "s": s, "scales": list(scales),
                "cells_per_length": cells, "haar_scales": haar_scales},
        instances=instances,
        sup_ratio=sup,
        argmax=arg,
        verdict=PASS if ok else FAIL,
        metrics={
            "max_widening_rel_change": max_widen,
            "haar_values": haar_vals,
            "haar_flatness": flatness,
            "fixture_errors": len(errors),
        },
        notes=notes,
        plot=("scale", list(zip(haar_scales, haar_vals))),
    )


# BMO ----------------------------------------------------------------------


def default_bmo_family(grid: SampleGrid, min_cells: int = 32, levels: int | None = None) -> IntervalFamily:
    m_max = math.frexp(grid.length)[1] - 2  # two intervals across the grid span
    m_min = math.frexp(grid.step * min_cells)[1] - 1
    if levels is not None:
        m_min = max(m_min, m_max - levels + 1)
    return IntervalFamily((grid.start, grid.stop), m_min, m_max)


def bmo_trace(values: np.ndarray, grid: SampleGrid, family: IntervalFamily) -> list[float]:
    """Running max of mean oscillation ``(1/|I|) int_I |g - g_I|`` after each family level.

    Only intervals inside the grid span count; each uses the cells whose
    midpoints fall in it.
    """
    g = np.asarray(values, dtype=float)
    trace, best = [], 0.0
    for _, ivs in family.levels():
        for a, b in ivs:
            if a < grid.start or b > grid.stop:
                continue
            i0 = int(math.ceil((a - grid.start) / grid.step - 0.5))
            i1 = int(math.ceil((b - grid.start) / grid.step - 0.5))
            if i1 <= i0:
                continue
            seg = g[i0:i1]
            osc = float(np.mean(np.abs(seg - seg.mean())))
            best = max(best, osc)
        trace.append(best)
    return trace


def bmo_norm(values, grid: SampleGrid, family: IntervalFamily) -> float:
    trace = bmo_trace(values, grid, family)
    return trace[-1] if trace else 0.0


def _bmo_instance(f, s, grid, family) -> dict:
    if f.is_zero:
        return {"degenerate": True, "ratio": 0.0}
    v = variation_at(f, grid.points(), s)
    sup_f = f.lp_norm(math.inf)
    trace = [t / sup_f for t in bmo_trace(v, grid, family)]
    growth = trace[-1] / trace[-3] - 1.0 if len(trace) >= 3 and trace[-3] > 0 else 0.0
    return {"ratio": trace[-1], "trace": trace, "last_two_depth_growth": growth}


def bmo_suite(
    spec: FamilySpec,
    s: float,
    grid: SampleGrid,
    family: IntervalFamily | None = None,
    workers: int = 1,
    functions: Sequence[PiecewiseConstantFn] | None = None,
) -> RatioReport:
    """``sup_f ||Vf||_BMO / ||f||_inf`` with a family-deepening stability check."""
    family = family or default_bmo_family(grid)
    fns = list(functions) if functions is not None else gen_functions(spec)
    results = _pmap(partial(_bmo_instance, s=s, grid=grid, family=family), fns, workers)
    instances = [{"instance_id": i, **r} for i, r in enumerate(results)]
    live = [x for x in instances if not x.get("degenerate")]
    sup, arg = _sup(instances)
    depth = family.depth
    sup_trace = [max((x["trace"][d] for x in live), default=0.0) for d in range(depth)]
    growth = sup_trace[-1] / sup_trace[-3] - 1.0 if depth >= 3 and sup_trace[-3] > 0 else 0.0
    ok = math.isfinite(sup) and growth < BMO_GROWTH_TOL
    return RatioReport(
        suite="bmo",
        params={**_family_params(spec), "s": s, "grid": grid.to_dict(), "interval_family": family.to_dict()},
        instances=instances,
        sup_ratio=sup,
        argmax=arg,
        verdict=PASS if ok else FAIL,
        metrics={
            "sup_trace": sup_trace,
            "last_two_depth_growth": growth,
            "degenerate_instances": len(instances) - len(live),
        },
        plot=("depth", list(enumerate(sup_trace, start=1))),
    )


# weighted -----------------------------------------------------------------


def certification_family(grid: SampleGrid, depth: int = 8) -> IntervalFamily:
    m_max = math.frexp(grid.length)[1] - 2
    return IntervalFamily((grid.start, grid.stop), m_max - depth + 1, m_max)


def default_rprime(p: float) -> float:
    return min(p, 2.0)


def certify_hypotheses(w: Weight, p: float, rprime: float, family: IntervalFamily) -> dict:
    """Check the two groundable hypothesis branches for the weighted inequalities.

    strong: ``w in A_{p/r'}`` with ``r' <= p`` (A_1 when p = r').
    weak:   ``w^{r'} in A_1``.
    A branch is certified when the family depth trace of its characteristic
    stabilizes.
    """
    if not rprime > 1:
        raise ArgumentError(f"r' must exceed 1, got {rprime}")
    out: dict[str, Any] = {"rprime": rprime}
    if rprime <= p:
        q = p / rprime
        rep: ApReport = a1_report(w, family) if math.isclose(q, 1.0, rel_tol=0, abs_tol=1e-15) or q <= 1 else ap_characteristic(w, q, family)
        out["strong"] = {
            "hypothesis": "A_1" if q <= 1 + 1e-15 else f"A_{q:g}",
            "characteristic": rep.characteristic,
            "trace": list(rep.trace),
            "verdict": rep.verdict,
            "certified": rep.verdict == "stabilizes",
        }
    else:
        out["strong"] = {
            "hypothesis": "undefined class for 1 < p <= r'",
            "certified": False,
        }
    rep = a1_report(w.power(rprime), family)
    out["weak"] = {
        "hypothesis": f"w^{rprime:g} in A_1",
        "characteristic": rep.characteristic,
        "trace": list(rep.trace),
        "verdict": rep.verdict,
        "certified": rep.verdict == "stabilizes",
    }
    return out


def weighted_norm_exact(f: PiecewiseConstantFn, w: Weight, p: float) -> float:
    """``(int |f|^p w)^{1/p}`` for a step function, with exact weight masses."""
    if f.is_zero:
        return 0.0
    b = f.breakpoints
    masses = np.asarray(w.integral(b[:-1], b[1:]), dtype=float)
    return math.fsum(np.abs(f.values) ** p * masses) ** (1.0 / p)


def _weighted_ratios(g: np.ndarray, F: PiecewiseConstantFn, p, w, grid, lambdas) -> tuple[float, float]:
    masses = cell_masses(w, grid)
    num = float(np.sum(np.abs(g) ** p * masses)) ** (1.0 / p)
    strong = num / weighted_norm_exact(F, w, p)
    curve = np.asarray(lambdas) * weighted_distribution_curve(g, grid, w, lambdas)
    weak = float(curve.max()) / weighted_norm_exact(F, w, 1.0)
    return strong, weak


def _weighted_instance(fs, p, s, rho, w, grid, lambdas) -> dict:
    """Ratios for a bundle ``fs`` (a single function is a bundle of one)."""
    if all(f.is_zero for f in fs):
        return {"degenerate": True, "ratio": 0.0, "ratio_weak": 0.0}
    F = fs[0].abs() if len(fs) == 1 else combine(
        fs, lambda vals: sum(np.abs(v) ** rho for v in vals) ** (1.0 / rho)
    )
    out = {}
    for tag, gr in (("", grid), ("_halved", grid.halved())):
        xs = gr.points()
        g = variation_at(fs[0], xs, s) if len(fs) == 1 else vector_variation_at(fs, xs, rho, s)
        strong, weak = _weighted_ratios(g, F, p, w, gr, lambdas)
        out["ratio" + tag] = strong
        out["ratio_weak" + tag] = weak
    return out


def _weighted_report(name, params, bundles, p, s, rho, w, grid, lambdas, rprime, family, workers):
    lambdas = np.asarray(lambdas, dtype=float)
    if not (1 < p < math.inf):
        raise ArgumentError(f"p must satisfy 1 < p < inf, got {p}")
    if lambdas.size == 0 or np.any(lambdas <= 0):
        raise ArgumentError("lambda values must be positive")
    rprime = default_rprime(p) if rprime is None else rprime
    family = family or certification_family(grid)
    cert = certify_hypotheses(w, p, rprime, family)
    results = _pmap(
        partial(_weighted_instance, p=p, s=s, rho=rho, w=w, grid=grid, lambdas=lambdas), bundles, workers
    )
    instances = [{"instance_id": i, **r} for i, r in enumerate(results)]
    live = [x for x in instances if not x.get("degenerate")]
    sup, arg = _sup(instances)
    sup_h, _ = _sup(instances, "ratio_halved") if live else (0.0, None)
    sup_w, arg_w = _sup(instances, "ratio_weak")
    sup_wh, _ = _sup(instances, "ratio_weak_halved") if live else (0.0, None)
    strong_change, weak_change = _rel(sup, sup_h), _rel(sup_w, sup_wh)
    strong_ok = math.isfinite(sup) and strong_change < GRID_STABILITY_TOL
    weak_ok = math.isfinite(sup_w) and weak_change < GRID_STABILITY_TOL
    certified = [b for b in ("strong", "weak") if cert[b]["certified"]]
    notes = []
    if not certified:
        verdict = HYPOTHESIS_NOT_MET
        notes.append("no hypothesis branch certified; ratios are reported as diagnostics only")
    else:
        checks = {"strong": strong_ok, "weak": weak_ok}
        verdict = PASS if all(checks[b] for b in certified) else FAIL
    return RatioReport(
        suite=name,
        params={**params, "p": p, "s": s, "rprime": rprime, "weight": w.to_dict(),
                "grid": grid.to_dict(), "lambdas": lambdas.tolist(),
                "certification_family": family.to_dict()},
        instances=instances,
        sup_ratio=sup,
        argmax=arg,
        verdict=verdict,
        metrics={
            "certification": cert,
            "certified_branches": certified,
            "sup_ratio_halved_grid": sup_h,
            "strong_grid_halving_rel_change": strong_change,
            "sup_weak_ratio": sup_w,
            "argmax_weak_instance": arg_w,
            "sup_weak_ratio_halved_grid": sup_wh,
            "weak_grid_halving_rel_change": weak_change,
            "degenerate_instances": len(instances) - len(live),
        },
        notes=notes,
        plot=("instance", [(x["instance_id"], x["ratio"]) for x in instances]),
    )


def weighted_suite(
    spec: FamilySpec,
    p: float,
    s: float,
    w: Weight,
    grid: SampleGrid,
    lambdas: Sequence[float],
    rprime: float | None = None,
    family: IntervalFamily | None = None,
    workers: int = 1,
    functions: Sequence[PiecewiseConstantFn] | None = None,
) -> RatioReport:
    """Weighted strong ``||Vf||_{L^p(w)} / ||f||_{L^p(w)}`` and weak ``lambda w({Vf > lambda}) / int |f| w``."""
    fns = list(functions) if functions is not None else gen_functions(spec)
    return _weighted_report(
        "weighted", _family_params(spec), [[f] for f in fns], p, s, 2.0, w, grid, lambdas,
        rprime, family, workers,
    )


def vector_valued_suite(
    spec: FamilySpec,
    J: int,
    rho: float,
    p: float,
    s: float,
    w: Weight,
    grid: SampleGrid,
    lambdas: Sequence[float] | None = None,
    rprime: float | None = None,
    family: IntervalFamily | None = None,
    workers: int = 1,
    bundles: Sequence[Sequence[PiecewiseConstantFn]] | None = None,
) -> RatioReport:
    """ell^rho-valued version over ``spec.count`` bundles of J functions."""
    if not (1 < rho < math.inf):
        raise ArgumentError(f"rho must satisfy 1 < rho < inf, got {rho}")
    if J < 1:
        raise ArgumentError(f"J must be >= 1, got {J}")
    lambdas = geometric_lambdas() if lambdas is None else lambdas
    bl = [list(b) for b in bundles] if bundles is not None else gen_bundles(spec, J)
    return _weighted_report(
        "vector", {**_family_params(spec), "J": J, "rho": rho}, bl, p, s, rho, w, grid, lambdas,
        rprime, family, workers,
    )
