"""Command-line front end: one subcommand per check, deterministic reports.

Exit codes: 0 PASS, 1 FAIL, 2 usage error, 3 HYPOTHESIS_NOT_MET, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .errors import ArgumentError
from .families import FamilySpec
from .functions import PiecewiseConstantFn, SampleGrid
from .kernel import (
    AnnulusSpec,
    DrParams,
    KernelParams,
    dr_constant_profile,
    dr_integral,
    dr_integral_quadrature,
    fourier_multiplier_norm,
    hormander_by_annuli,
    hormander_integral,
    indicator_differences,
    kernel_diff_norm_brute,
    kernel_diff_norm_closed,
    multiplier_grids,
)
from .suites import (
    FAIL,
    HYPOTHESIS_NOT_MET,
    PASS,
    RatioReport,
    bmo_suite,
    default_bmo_family,
    h1_suite,
    jsonable,
    strong_type_suite,
    vector_valued_suite,
    weak_type_suite,
    weighted_suite,
)
from .weights import ConstantWeight, IntervalFamily, ap_characteristic, weight_from_json

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_IO = 0, 1, 2, 3, 4
VERDICT_EXIT = {PASS: EXIT_PASS, FAIL: EXIT_FAIL, HYPOTHESIS_NOT_MET: EXIT_HYPOTHESIS}

SUBCOMMANDS = (
    "kernel-check",
    "drcond",
    "hormander",
    "multiplier",
    "strongtype",
    "weaktype",
    "h1",
    "bmo",
    "apweight",
    "weighted",
    "vector",
    "all",
)

DEFAULT_COUNTS = {
    "kernel-check": 10_000,
    "strongtype": 200,
    "weaktype": 200,
    "h1": 100,
    "bmo": 100,
    "weighted": 200,
    "vector": 50,
}
DEFAULT_LAMBDAS = "g:0.001:2:50"
KERNEL_TOL = 1e-12
DR_DECAY_SLACK = 1.05
DR_SUM_TOL = 1e-6
DR_QUADRATURE_TOL = 1e-6
HORMANDER_X = (0.3, 1.0, 1.7, 4.0)
HORMANDER_CROSS_TOL = 1e-10
HORMANDER_ANNULI_TOL = 1e-8
MULTIPLIER_TOL = 1e-6
DR_X = (0.3, 1.0, 2.5)
H1_SCALES = tuple(range(-6, 7))


class UsageError(ArgumentError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    p: float = 2.0
    s: float = 2.0
    rho: float = 2.0
    J: int = 8
    r: float = 1.0
    rprime: float | None = None
    seed: int = 42
    count: int | None = None
    grid_start: float = -16.0
    grid_step: float = 2.0**-10
    grid_count: int = 32 * 2**10
    lattice_M: int = 8
    support_N: int = 3
    weight: str | None = None
    lambdas: str = DEFAULT_LAMBDAS
    depth: int | None = None
    out: str = "out"
    format: str = "both"
    function_file: str | None = None
    workers: int = 1

    def grid(self) -> SampleGrid:
        return SampleGrid(self.grid_start, self.grid_step, self.grid_count)

    def family(self, default_count: int) -> FamilySpec:
        count = self.count if self.count is not None else default_count
        return FamilySpec(seed=self.seed, count=count, lattice_M=self.lattice_M, support_N=self.support_N)

    def weight_obj(self):
        return ConstantWeight(1.0) if self.weight is None else weight_from_json(self.weight)

    def lambda_values(self) -> np.ndarray:
        return parse_lambdas(self.lambdas)

    def to_dict(self) -> dict:
        """Provenance record; the output location and worker count do not affect results."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        d.pop("format")
        return d


def parse_lambdas(text: str) -> np.ndarray:
    """``"0.1,0.5,1"`` or the geometric spec ``"g:min:max:count"``."""
    text = text.strip()
    try:
        if text.startswith("g:"):
            parts = text.split(":")
            if len(parts) != 4:
                raise ValueError
            lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
            if not (0 < lo <= hi and n >= 1):
                raise ValueError
            vals = np.geomspace(lo, hi, n)
        else:
            vals = np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError:
        raise UsageError(f"cannot parse lambda grid {text!r}") from None
    if vals.size == 0 or np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise UsageError("lambda values must be positive and finite")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyadvar", description="Numerical checks for the dyadic variation operator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--p", type=float, default=2.0)
    parser.add_argument("--s", type=float, default=2.0)
    parser.add_argument("--rho", type=float, default=2.0)
    parser.add_argument("--J", type=int, default=8)
    parser.add_argument("--r", type=float, default=1.0, help="D_r exponent for drcond")
    parser.add_argument("--rprime", type=float, default=None)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--count", type=int, default=None)
    parser.add_argument("--grid-start", type=float, default=-16.0)
    parser.add_argument("--grid-step", type=float, default=2.0**-10)
    parser.add_argument("--grid-count", type=int, default=32 * 2**10)
    parser.add_argument("--lattice-M", type=int, default=8)
    parser.add_argument("--support-N", type=int, default=3)
    parser.add_argument("--weight", default=None, help="weight descriptor as JSON")
    parser.add_argument("--lambdas", default=DEFAULT_LAMBDAS)
    parser.add_argument("--depth", type=int, default=None)
    parser.add_argument("--out", default="out")
    parser.add_argument("--format", choices=("json", "csv", "both"), default="both")
    parser.add_argument("--function-file", default=None)
    parser.add_argument("--workers", type=int, default=1)
    return parser


def parse_args(argv: list[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(
        subcommand=ns.subcommand,
        p=ns.p,
        s=ns.s,
        rho=ns.rho,
        J=ns.J,
        r=ns.r,
        rprime=ns.rprime,
        seed=ns.seed,
        count=ns.count,
        grid_start=ns.grid_start,
        grid_step=ns.grid_step,
        grid_count=ns.grid_count,
        lattice_M=ns.lattice_M,
        support_N=ns.support_N,
        weight=ns.weight,
        lambdas=ns.lambdas,
        depth=ns.depth,
        out=ns.out,
        format=ns.format,
        function_file=ns.function_file,
        workers=ns.workers,
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def need(cond: bool, msg: str):
        if not cond:
            raise UsageError(msg)

    need(1 < cfg.p < math.inf, f"--p must satisfy 1 < p < inf, got {cfg.p}")
    need(2 <= cfg.s < math.inf, f"--s must satisfy 2 <= s < inf, got {cfg.s}")
    need(1 < cfg.rho < math.inf, f"--rho must satisfy 1 < rho < inf, got {cfg.rho}")
    need(cfg.J >= 1, f"--J must be >= 1, got {cfg.J}")
    need(1 <= cfg.r < math.inf, f"--r must satisfy 1 <= r < inf, got {cfg.r}")
    need(cfg.rprime is None or 1 < cfg.rprime < math.inf, f"--rprime must exceed 1, got {cfg.rprime}")
    need(0 <= cfg.seed < 2**64, "--seed must be a 64-bit unsigned integer")
    need(cfg.count is None or cfg.count >= 1, f"--count must be >= 1, got {cfg.count}")
    need(cfg.depth is None or cfg.depth >= 1, f"--depth must be >= 1, got {cfg.depth}")
    need(cfg.workers >= 1, f"--workers must be >= 1, got {cfg.workers}")
    try:
        cfg.grid()
        cfg.family(1)
        cfg.weight_obj()
    except (ArgumentError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    cfg.lambda_values()


# subcommands ----------------------------------------------------------------


def _load_functions(path: str) -> list[PiecewiseConstantFn]:
    """A function file holds one function object, a list of them, or ``{"functions": [...]}``."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
        if isinstance(data, dict) and "functions" in data:
            data = data["functions"]
        items = data if isinstance(data, list) else [data]
        fns = [PiecewiseConstantFn.from_dict(d) for d in items]
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad function file {path}: {exc}") from None
    if not fns:
        raise UsageError(f"function file {path} holds no functions")
    return fns


def _functions(cfg: RunConfig):
    return _load_functions(cfg.function_file) if cfg.function_file else None


def random_kernel_configurations(rng: np.random.Generator, count: int) -> list[tuple]:
    """Draws ``(x, x0, y, i, j)`` with ``x0 < x <= x0 + 2^i`` and ``x0 + 2^j < y <= x0 + 2^{j+1}``."""
    out = []
    for _ in range(count):
        x0 = float(rng.uniform(-4.0, 4.0))
        i = int(rng.integers(-8, 9))
        j = i + int(rng.integers(1, 9))
        x = x0 + math.ldexp(1.0, i) * float(1.0 - rng.random())
        y = x0 + math.ldexp(1.0, j) * (1.0 + float(1.0 - rng.random()))
        if not (x0 < x <= x0 + math.ldexp(1.0, i) and x0 + math.ldexp(1.0, j) < y <= x0 + math.ldexp(1.0, j + 1)):
            continue  # rounding pushed a draw onto an endpoint
        out.append((x, x0, y, i, j))
    return out


def run_kernel_check(cfg: RunConfig) -> RatioReport:
    count = cfg.count or DEFAULT_COUNTS["kernel-check"]
    rng = np.random.Generator(np.random.PCG64([cfg.seed, 10]))
    kp = KernelParams(cfg.s)
    instances = []
    worst, worst_id, stray = 0.0, None, 0
    for k, (x, x0, y, i, j) in enumerate(random_kernel_configurations(rng, count)):
        closed = kernel_diff_norm_closed(x, x0, y, i, j, cfg.s)
        brute = kernel_diff_norm_brute(x, x0, y, kp)
        ns = np.arange(j - 50, j + 51)
        phi = indicator_differences(ns, x, x0, y)
        off = int(np.count_nonzero(phi[ns != j]))
        stray += off
        err = abs(closed - brute)
        if worst_id is None or err > worst:
            worst, worst_id = err, k
        instances.append(
            {"instance_id": k, "x": x, "x0": x0, "y": y, "i": i, "j": j,
             "closed": closed, "brute": brute, "ratio": err, "nonzero_off_j": off}
        )
    ok = worst <= KERNEL_TOL and stray == 0
    return RatioReport(
        suite="kernel-check",
        params={"seed": cfg.seed, "s": cfg.s, "count": count},
        instances=instances,
        sup_ratio=worst,
        argmax=worst_id,
        verdict=PASS if ok else FAIL,
        metrics={"max_abs_error": worst, "tolerance": KERNEL_TOL, "nonzero_off_j_components": stray},
        plot=("x", [(d["y"] - d["x0"], d["closed"]) for d in instances[:2000]]),
    )


def dr_checks(xs, r: float, s: float, l_max: int = 40, decay_to: int = 20) -> dict:
    dr, kp = DrParams(r), KernelParams(s)
    out = {"profiles": [], "decay_ok": True, "sum_ok": True, "quadrature_ok": True}
    for x in xs:
        prof = [c for _, c in dr_constant_profile(x, l_max, dr, kp)]
        c2 = prof[0]
        worst = max(c / (c2 * 2.0 ** (-(l - 2) / r)) for l, c in zip(range(2, decay_to + 1), prof))
        sums = np.cumsum(prof)
        growth = float(sums[-1] - sums[-11])
        spec = AnnulusSpec(x, 2)
        exact = dr_integral(spec, dr, kp)
        quad = dr_integral_quadrature(spec, dr, kp)
        qerr = _rel_err(exact, quad)
        dyadic = math.frexp(x)[0] == 0.5
        q_ok = qerr <= DR_QUADRATURE_TOL if dyadic else True
        out["profiles"].append(
            {"x": x, "c": prof, "max_normalized_decay": worst, "last_ten_sum_increase": growth,
             "quadrature_rel_error_l2": qerr, "quadrature_checked": dyadic}
        )
        out["decay_ok"] &= worst <= DR_DECAY_SLACK
        out["sum_ok"] &= growth < DR_SUM_TOL
        out["quadrature_ok"] &= q_ok
    return out


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def run_drcond(cfg: RunConfig) -> RatioReport:
    l_max = cfg.depth or 40
    res = dr_checks(DR_X, cfg.r, cfg.s, l_max=l_max, decay_to=min(20, l_max))
    instances = []
    k = 0
    for prof in res["profiles"]:
        for l, c in enumerate(prof["c"], start=2):
            instances.append({"instance_id": k, "x": prof["x"], "l": l, "ratio": c})
            k += 1
    ok = res["decay_ok"] and res["sum_ok"] and res["quadrature_ok"]
    worst = max(p["max_normalized_decay"] for p in res["profiles"])
    return RatioReport(
        suite="drcond",
        params={"r": cfg.r, "s": cfg.s, "xs": list(DR_X), "l_max": l_max},
        instances=instances,
        sup_ratio=worst,
        argmax=None,
        verdict=PASS if ok else FAIL,
        metrics={k: v for k, v in res.items()},
        plot=("l", [(d["l"], d["ratio"]) for d in instances if d["x"] == 1.0]),
    )


def run_hormander(cfg: RunConfig) -> RatioReport:
    kp = KernelParams(cfg.s)
    instances = []
    for k, x in enumerate(HORMANDER_X):
        direct = hormander_integral(x, kp)
        annuli = hormander_by_annuli(x, kp)
        doubled = hormander_integral(2 * x, kp)
        instances.append(
            {"instance_id": k, "x": x, "ratio": direct, "by_annuli": annuli,
             "annuli_rel_error": _rel_err(direct, annuli), "doubling_rel_error": _rel_err(direct, doubled)}
        )
    vals = [d["ratio"] for d in instances]
    spread = (max(vals) - min(vals)) / max(vals)
    annuli_err = max(d["annuli_rel_error"] for d in instances)
    doubling_err = max(d["doubling_rel_error"] for d in instances)
    ok = spread <= HORMANDER_CROSS_TOL and annuli_err <= HORMANDER_ANNULI_TOL
    notes = []
    if spread > HORMANDER_CROSS_TOL:
        notes.append("values differ across x; the integral is invariant only under x -> 2x")
    return RatioReport(
        suite="hormander",
        params={"s": cfg.s, "xs": list(HORMANDER_X)},
        instances=instances,
        sup_ratio=max(vals),
        argmax=int(np.argmax(vals)),
        verdict=PASS if ok else FAIL,
        metrics={"cross_x_rel_spread": spread, "max_annuli_rel_error": annuli_err,
                 "max_doubling_rel_error": doubling_err},
        notes=notes,
        plot=("x", [(d["x"], d["ratio"]) for d in instances]),
    )


def multiplier_check(s: float, count: int = 1000) -> dict:
    kp = KernelParams(s)
    period, full = multiplier_grids(count)
    pv = np.array([fourier_multiplier_norm(float(t), kp) for t in period])
    fv = np.array([fourier_multiplier_norm(float(t), kp) for t in full])
    sup_p, sup_f = float(pv.max()), float(fv.max())
    return {
        "period": period, "period_values": pv, "full": full, "full_values": fv,
        "sup_period": sup_p, "sup_full": sup_f, "rel_gap": _rel_err(sup_p, sup_f),
        "at_zero": fourier_multiplier_norm(0.0, kp),
        "symmetry_gap": max(abs(fourier_multiplier_norm(-float(t), kp) - v) for t, v in zip(period[::50], pv[::50])),
    }


def run_multiplier(cfg: RunConfig) -> RatioReport:
    res = multiplier_check(cfg.s)
    instances = [
        {"instance_id": k, "xi": float(x), "ratio": float(v)}
        for k, (x, v) in enumerate(zip(res["full"], res["full_values"]))
    ]
    ok = math.isfinite(res["sup_full"]) and res["rel_gap"] <= MULTIPLIER_TOL and res["at_zero"] == 0.0
    return RatioReport(
        suite="multiplier",
        params={"s": cfg.s, "points": len(res["full"])},
        instances=instances,
        sup_ratio=res["sup_full"],
        argmax=int(np.argmax(res["full_values"])),
        verdict=PASS if ok else FAIL,
        metrics={k: res[k] for k in ("sup_period", "sup_full", "rel_gap", "at_zero", "symmetry_gap")},
        plot=("x", list(zip(res["full"].tolist(), res["full_values"].tolist()))),
    )


def run_strongtype(cfg):
    return strong_type_suite(cfg.family(DEFAULT_COUNTS["strongtype"]), cfg.p, cfg.s, cfg.grid(),
                             workers=cfg.workers, functions=_functions(cfg))


def run_weaktype(cfg):
    return weak_type_suite(cfg.family(DEFAULT_COUNTS["weaktype"]), cfg.s, cfg.grid(), cfg.lambda_values(),
                           workers=cfg.workers, functions=_functions(cfg))


def run_h1(cfg):
    return h1_suite(cfg.family(DEFAULT_COUNTS["h1"]), H1_SCALES, cfg.s, cfg.grid(), workers=cfg.workers)


def run_bmo(cfg):
    grid = cfg.grid()
    return bmo_suite(cfg.family(DEFAULT_COUNTS["bmo"]), cfg.s, grid, default_bmo_family(grid, levels=cfg.depth),
                     workers=cfg.workers, functions=_functions(cfg))


def run_apweight(cfg: RunConfig) -> RatioReport:
    w = cfg.weight_obj()
    depth = cfg.depth or 12
    family = IntervalFamily((0.0, 1.0), 1 - depth, 0)
    rep = ap_characteristic(w, cfg.p, family)
    verdict = {"stabilizes": PASS, "diverges": HYPOTHESIS_NOT_MET}.get(rep.verdict, FAIL)
    instances = [{"instance_id": d, "depth": d + 1, "ratio": t} for d, t in enumerate(rep.trace)]
    return RatioReport(
        suite="apweight",
        params={"p": cfg.p, "weight": w.to_dict(), "interval_family": family.to_dict()},
        instances=instances,
        sup_ratio=rep.characteristic,
        argmax=None,
        verdict=verdict,
        metrics={"ap": rep.to_dict()},
        plot=("l", [(d + 1, t) for d, t in enumerate(rep.trace)]),
    )


def run_weighted(cfg):
    return weighted_suite(cfg.family(DEFAULT_COUNTS["weighted"]), cfg.p, cfg.s, cfg.weight_obj(), cfg.grid(),
                          cfg.lambda_values(), rprime=cfg.rprime, workers=cfg.workers, functions=_functions(cfg))


def run_vector(cfg):
    return vector_valued_suite(cfg.family(DEFAULT_COUNTS["vector"]), cfg.J, cfg.rho, cfg.p, cfg.s,
                               cfg.weight_obj(), cfg.grid(), cfg.lambda_values(), rprime=cfg.rprime,
                               workers=cfg.workers)


RUNNERS: dict[str, Callable[[RunConfig], RatioReport]] = {
    "kernel-check": run_kernel_check,
    "drcond": run_drcond,
    "hormander": run_hormander,
    "multiplier": run_multiplier,
    "strongtype": run_strongtype,
    "weaktype": run_weaktype,
    "h1": run_h1,
    "bmo": run_bmo,
    "apweight": run_apweight,
    "weighted": run_weighted,
    "vector": run_vector,
}


# output ---------------------------------------------------------------------


def render(cfg: RunConfig, report: RatioReport) -> dict[str, str]:
    payload = {"artifact_version": __version__, "config": cfg.to_dict(), "report": report.to_dict()}
    files = {}
    if cfg.format in ("json", "both"):
        files["report.json"] = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if cfg.format in ("csv", "both"):
        files["report.csv"] = report.to_csv()
    files["plotdata.csv"] = report.plot_csv()
    return files


def write_files(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def _worst_exit(codes) -> int:
    codes = list(codes)
    if EXIT_FAIL in codes:
        return EXIT_FAIL
    if EXIT_HYPOTHESIS in codes:
        return EXIT_HYPOTHESIS
    return EXIT_PASS


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    out = Path(cfg.out)
    if cfg.subcommand == "all":
        codes, summary = [], {}
        for name in RUNNERS:
            sub = RunConfig(**{**asdict(cfg), "subcommand": name, "out": str(out / name)})
            report = RUNNERS[name](sub)
            write_files(Path(sub.out), render(sub, report))
            codes.append(VERDICT_EXIT[report.verdict])
            summary[name] = {"verdict": report.verdict, "sup_ratio": report.sup_ratio}
            print(f"{name}: {report.verdict}", file=stdout)
        payload = {"artifact_version": __version__, "config": cfg.to_dict(), "report": summary}
        write_files(out, {"report.json": json.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n"})
        return _worst_exit(codes)
    report = RUNNERS[cfg.subcommand](cfg)
    write_files(out, render(cfg, report))
    print(f"{cfg.subcommand}: {report.verdict} (sup ratio {report.sup_ratio!r})", file=stdout)
    return VERDICT_EXIT[report.verdict]


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
