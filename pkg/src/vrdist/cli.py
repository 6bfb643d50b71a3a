"""Command-line front end: figure sweeps, the teleportation demo and the self-test."""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__, qmath, resources, sampler, vrd
from .qmath import PreconditionError
from .sdp import SolverError

log = logging.getLogger("vrdist")

SCHEMA_VERSION = 1
CSV_HEADER = "theory,p,eps,m,C_lower,C_upper,C_exact,V,D"
DEFAULT_EPS = (0.0, 0.02, 0.04, 0.08)
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def default_p_grid() -> list[float]:
    return [round(0.02 * i, 10) for i in range(51)]


@dataclass
class SweepConfig:
    theory: str
    p_grid: list[float] = field(default_factory=default_p_grid)
    eps_list: list[float] = field(default_factory=lambda: list(DEFAULT_EPS))
    m_max: int | None = None
    output_path: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.theory not in resources.THEORIES:
            raise UsageError(f"unknown theory {self.theory!r}; choose from {sorted(resources.THEORIES)}")
        if not self.p_grid:
            raise UsageError("p grid is empty")
        if any(not 0 <= p <= 1 for p in self.p_grid):
            raise UsageError("p values must lie in [0, 1]")
        if list(self.p_grid) != sorted(self.p_grid):
            raise UsageError("p grid must be sorted ascending")
        if any(not 0 <= e < 1 for e in self.eps_list) or not self.eps_list:
            raise UsageError("eps values must lie in [0, 1)")
        if len(set(self.eps_list)) != len(self.eps_list):
            raise UsageError("eps values must be distinct")
        if self.m_max is None:
            self.m_max = resources.get_theory(self.theory).default_m_max
        if self.m_max < 1:
            raise UsageError("m_max must be >= 1")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")


# --- sweeps ----------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _theory(name: str) -> resources.Theory:
    return resources.get_theory(name)


def sweep_point(theory: str, p: float, eps: float, m_max: int) -> dict:
    """Overheads for ``m = 1..m_max``, the virtual rate and the conventional rate at one grid point."""
    th = _theory(theory)
    rho = th.family(p)
    point = {"theory": theory, "p": p, "eps": eps, "ok": True, "error": ""}
    try:
        rate = vrd.virtual_rate(rho, eps, th, m_max)
        point["D"] = vrd.conventional_rate(rho, eps, th, m_max)
        point["V"] = rate.rate
        point["m_star"] = rate.m_star
        point["per_m"] = [
            {
                "m": r.m,
                "C_lower": r.lower,
                "C_upper": r.upper,
                "C_exact": r.exact,
                "C_closed_form": r.closed_form,
                "C": r.value,
                "method": r.method,
                "note": r.note,
            }
            for r in rate.overheads
        ]
    except (SolverError, resources.UnsupportedError) as exc:
        log.warning("%s p=%g eps=%g: %s", theory, p, eps, exc)
        point.update(ok=False, error=str(exc), D=math.nan, V=math.nan, m_star=0, per_m=[])
    return point


def _star(args):
    return sweep_point(*args)


def run_figure2(cfg: SweepConfig, workers: int | None = None) -> list[dict]:
    """All grid points, ordered by ascending ``(eps, p)``."""
    tasks = [(cfg.theory, p, e, cfg.m_max) for e in sorted(cfg.eps_list) for p in cfg.p_grid]
    workers = workers or os.cpu_count() or 1
    t0 = time.monotonic()
    if workers == 1 or len(tasks) == 1:
        points = []
        for i, t in enumerate(tasks):
            points.append(_star(t))
            log.info("point %d/%d done", i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_star, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    log.info("%s sweep: %d points in %.1f s", cfg.theory, len(points), time.monotonic() - t0)
    return points


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".12g")


def to_csv(points: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for pt in points:
        rows = pt["per_m"] or [{"m": 0, "C_lower": math.nan, "C_upper": math.nan, "C_exact": None}]
        for r in rows:
            fields = [pt["theory"], _num(pt["p"]), _num(pt["eps"]), str(r["m"]), _num(r["C_lower"]),
                      _num(r["C_upper"]), _num(r["C_exact"]), _num(pt["V"]), str(pt["D"]) if pt["ok"] else "nan"]
            buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float):
        return None if not math.isfinite(v) else float(format(v, ".12g"))
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def to_json(payload: dict) -> str:
    """Deterministic JSON; non-finite numbers become ``null``."""
    return json.dumps({"schema_version": SCHEMA_VERSION, **_jsonable(payload)}, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None, stdout: bool) -> None:
    if stdout or not out:
        sys.stdout.write(text)
        sys.stdout.flush()
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        log.info("wrote %s", out)


# --- teleportation demo ---------------------------------------------------------------


def run_teleport_demo(p: float, n_samples: int = 100_000, seed: int = 0, delta: float = 0.05) -> dict:
    if not 1 / 3 - 1e-12 <= p <= 1:
        raise UsageError(f"teleport demo needs p in [1/3, 1] (the construction is valid only there), got {p}")
    vop = vrd.build_virtual_operation_teleport(p)
    psi = qmath.bell_state()
    rho = qmath.isotropic_state(psi, p)
    M = qmath.Observable(psi)
    rep = sampler.estimate(vop, rho, M, sampler.SamplerConfig(n_samples, seed, delta=delta))
    return {
        "p": p,
        "C": vop.C,
        "C_formula": vrd.teleport_overhead(p),
        "lambda_plus": vop.lambda_plus,
        "lambda_minus": vop.lambda_minus,
        "exact": rep.exact,
        "mean": rep.mean,
        "std_error": rep.std_error,
        "n_samples": n_samples,
        "seed": seed,
        "hoeffding_bound": rep.hoeffding_bound,
        "within_bound": rep.within_bound,
        "rng": sampler.RNG_NAME,
    }


# --- argument handling ----------------------------------------------------------------


def _parse_floats(text: str) -> list[float]:
    """``a,b,c`` or ``start:step:stop`` (inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0:
                raise UsageError("grid step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vrd", description="Virtual resource distillation overheads and rates.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sweep=True):
        p.add_argument("--config", help="JSON file with option values; flags take precedence")
        p.add_argument("--theory", choices=sorted(resources.THEORIES))
        p.add_argument("--eps", help="comma list of smoothing values")
        p.add_argument("--m-max", type=int, dest="m_max")
        p.add_argument("--out")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--stdout", action="store_true", default=None, help="write data to standard output")
        if sweep:
            p.add_argument("--p-grid", dest="p_grid", help="comma list or start:step:stop")
            p.add_argument("--workers", type=int)
        p.add_argument("--p", type=float)

    common(sub.add_parser("figure2", help="sweep p and eps for one theory"))
    common(sub.add_parser("overhead", help="overhead bounds for one state"), sweep=False)
    common(sub.add_parser("rate", help="virtual and conventional rates for one state"), sweep=False)
    tp = sub.add_parser("teleport", help="quasi-probability sampling of the teleportation example")
    tp.add_argument("--config")
    tp.add_argument("--p", type=float)
    tp.add_argument("--samples", type=int)
    tp.add_argument("--seed", type=int)
    tp.add_argument("--out")
    tp.add_argument("--stdout", action="store_true", default=None)
    tp.add_argument("--format", choices=["json"])
    st = sub.add_parser("selftest", help="run the acceptance checks at reduced sample counts")
    st.add_argument("--samples", type=int, help="shots per sampler replication")
    st.add_argument("--seed", type=int)
    return ap


def _merge_config(args: argparse.Namespace) -> dict:
    opts = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command"):
            opts[k] = v
    for key in ("eps", "p_grid"):
        if isinstance(opts.get(key), str):
            opts[key] = _parse_floats(opts[key])
        elif isinstance(opts.get(key), (int, float)):
            opts[key] = [float(opts[key])]
    return opts


def _setup_logging() -> None:
    level = os.environ.get("VRD_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _single_state(opts: dict) -> tuple[resources.Theory, float, list[float], int]:
    if "theory" not in opts or "p" not in opts:
        raise UsageError("--theory and --p are required")
    th = _theory(opts["theory"])
    p = float(opts["p"])
    if not 0 <= p <= 1:
        raise UsageError("p must lie in [0, 1]")
    eps = opts.get("eps", [0.0])
    if any(not 0 <= e < 1 for e in eps):
        raise UsageError("eps values must lie in [0, 1)")
    m_max = int(opts.get("m_max", th.default_m_max))
    if m_max < 1:
        raise UsageError("m_max must be >= 1")
    return th, p, eps, m_max


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        opts = _merge_config(args)
        if args.command == "figure2":
            if "theory" not in opts:
                raise UsageError("--theory is required")
            grid = opts.get("p_grid") or ([float(opts["p"])] if "p" in opts else default_p_grid())
            cfg = SweepConfig(opts["theory"], grid, opts.get("eps", list(DEFAULT_EPS)), opts.get("m_max"),
                              opts.get("out"), opts.get("format", "csv"))
            points = run_figure2(cfg, opts.get("workers"))
            text = to_csv(points) if cfg.format == "csv" else to_json({"config": asdict(cfg), "points": points})
            _emit(text, cfg.output_path, bool(opts.get("stdout")))
            return EXIT_OK if all(pt["ok"] for pt in points) else EXIT_FAIL
        if args.command in ("overhead", "rate"):
            th, p, eps_list, m_max = _single_state(opts)
            points = [sweep_point(th.name, p, e, m_max) for e in eps_list]
            fmt = opts.get("format", "json")
            if fmt == "csv":
                text = to_csv(points)
            elif args.command == "overhead":
                text = to_json({"theory": th.name, "p": p, "results": [
                    {"eps": pt["eps"], "per_m": pt["per_m"]} for pt in points]})
            else:
                text = to_json({"theory": th.name, "p": p, "results": [
                    {k: pt[k] for k in ("eps", "V", "D", "m_star", "per_m")} for pt in points]})
            _emit(text, opts.get("out"), bool(opts.get("stdout")))
            return EXIT_OK if all(pt["ok"] for pt in points) else EXIT_FAIL
        if args.command == "teleport":
            if "p" not in opts:
                raise UsageError("--p is required")
            n = int(opts.get("samples", 100_000))
            if n < 1:
                raise UsageError("--samples must be positive")
            rep = run_teleport_demo(float(opts["p"]), n, int(opts.get("seed", 0)))
            _emit(to_json(rep), opts.get("out"), bool(opts.get("stdout")))
            return EXIT_OK if rep["within_bound"] and abs(rep["exact"] - 1) <= 1e-10 else EXIT_FAIL
        if args.command == "selftest":
            from . import acceptance

            shots = opts.get("samples")
            if shots is not None and int(shots) < 2:
                raise UsageError("--samples must be at least 2")
            ok = acceptance.run_all(reduced=True, seed=int(opts.get("seed", 0)), stream=sys.stdout,
                                    rep_shots=None if shots is None else int(shots))
            return EXIT_OK if ok else EXIT_FAIL
    except (UsageError, PreconditionError, resources.UnsupportedError) as exc:
        print(f"vrd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
