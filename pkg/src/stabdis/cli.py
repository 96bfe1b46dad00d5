"""Command-line experiment runner.

Exit codes: 0 success, 2 invalid input, 3 resource budget exceeded,
4 non-convergence or a failed replay check.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import platform
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from . import __version__, analysis, disentangler, dmrg, io, magic
from .models import FAMILIES, ModelSpec
from .mps import MPS, MemoryBudgetExceeded, canonicalize, entropy_profile
from .oracle import OracleSizeError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_NONCONVERGENCE = 4

SCHEMA_VERSION = 1
THREADS_ENV = "STABDIS_THREADS"
REPLAY_TOL = 1e-8


class ConfigError(ValueError):
    pass


class ResourceError(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    pass


# ---------------------------------------------------------------- configuration

DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "recipe": None,
    "models": [],
    "sizes": [],
    "scan": None,
    "seed": 0,
    "threads": 1,
    "budget_mem": 2 << 30,
    "require_convergence": True,
    "save_states": False,
    "dmrg": {"chi_max": 64, "n_sweeps": 20, "energy_tol": 1e-10, "svd_cutoff": 1e-12},
    "disentangle": {"enabled": True, "gates": "coset", "max_sweeps": 10, "sweep_tol": 1e-8, "schedule": "alternate"},
    "magic": {
        "m2": False,
        "n_samples": 1000,
        "chi2": False,
        "mutual": {"enabled": False, "method": "chain", "N_S": 10000, "n_chains": 8, "block_fraction": 0.25},
    },
    "analysis": {"margin": analysis.DEFAULT_MARGIN},
}

RECIPES: dict[str, dict[str, Any]] = {
    # entropy gain and magic across the XXZ critical phase
    "fig2": {
        "models": [{"family": "XXZ"}],
        "sizes": [16],
        "scan": {"param": "Jz", "start": -0.9, "stop": 0.9, "num": 7},
        "magic": {"m2": True, "chi2": True, "mutual": {"enabled": True, "N_S": 2000}},
    },
    # XXZ size scaling of EE, SMEE and gain
    "fig3": {"models": [{"family": "XXZ", "params": {"Jz": 0.5}}], "sizes": [16, 32, 64]},
    # entropy gain and magic across the TCI line
    "fig4": {
        "models": [{"family": "TCI"}],
        "sizes": [32],
        "scan": {"param": "lam", "start": 0.0, "stop": 0.428, "num": 5},
        "magic": {"m2": True, "chi2": True},
    },
    # TCI size scaling
    "fig5": {"models": [{"family": "TCI", "params": {"lam": 0.428}}], "sizes": [32, 64, 128]},
    # critical Cluster1: zero SMEE at the half cut
    "fig6": {
        "models": [{"family": "Cluster1", "params": {"h": 1.0}}],
        "sizes": [32],
        "disentangle": {"max_sweeps": 30, "sweep_tol": 1e-10},
    },
    # Cluster2 at its critical point: no full disentangling
    "fig7": {
        "models": [{"family": "Cluster2", "params": {"h": 0.9, "D": 0.1}}],
        "sizes": [64],
        "disentangle": {"max_sweeps": 30, "sweep_tol": 1e-10},
    },
    # critical Cluster3
    "fig8": {
        "models": [{"family": "Cluster3", "params": {"V": 1.0}}],
        "sizes": [24],
        "disentangle": {"max_sweeps": 30, "sweep_tol": 1e-10},
    },
    # entanglement peaks of Cluster2 for the critical-point extrapolation
    "figB": {
        "models": [{"family": "Cluster2", "params": {"D": 0.1}}],
        "sizes": [16, 24, 32, 48],
        "scan": {"param": "h", "start": 0.8, "stop": 1.0, "num": 11},
        "disentangle": {"enabled": False},
    },
}


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_keys(section: Mapping, allowed: Mapping, where: str) -> None:
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in {where}")
    for k, v in section.items():
        if isinstance(allowed[k], dict) and allowed[k] and not isinstance(v, Mapping):
            raise ConfigError(f"{where}.{k} must be a mapping")
        if isinstance(allowed[k], dict) and isinstance(v, Mapping) and allowed[k]:
            _check_keys(v, allowed[k], f"{where}.{k}")


def scan_values(scan: Mapping[str, Any]) -> list[float]:
    if "values" in scan:
        vals = [float(v) for v in scan["values"]]
    elif {"start", "stop", "num"} <= set(scan):
        vals = np.linspace(float(scan["start"]), float(scan["stop"]), int(scan["num"])).tolist()
    else:
        raise ConfigError("scan needs 'values' or 'start'/'stop'/'num'")
    if not vals:
        raise ConfigError("scan grid is empty")
    return sorted(vals)


def load_config(data: Mapping[str, Any] | str | Path) -> dict:
    """Validate a config mapping (or YAML file) and fill in defaults."""
    if isinstance(data, (str, Path)):
        try:
            raw = yaml.safe_load(Path(data).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        raw = dict(data)
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw.get('schema_version')!r}")
    _check_keys(raw, DEFAULTS, "config")
    cfg = copy.deepcopy(DEFAULTS)
    recipe = raw.get("recipe")
    if recipe is not None:
        if recipe not in RECIPES:
            raise ConfigError(f"unknown recipe {recipe!r}; available: {sorted(RECIPES)}")
        cfg = _merge(cfg, RECIPES[recipe])
    cfg = _merge(cfg, raw)
    if not cfg["models"]:
        raise ConfigError("model list is empty")
    for m in cfg["models"]:
        if not isinstance(m, Mapping) or m.get("family") not in FAMILIES:
            raise ConfigError(f"bad model entry {m!r}; family must be one of {FAMILIES}")
        if set(m) - {"family", "params"}:
            raise ConfigError(f"unknown key(s) in model entry {m!r}")
    sizes = cfg["sizes"]
    if not sizes or not all(isinstance(L, int) and L >= 4 for L in sizes):
        raise ConfigError("sizes must be a non-empty list of integers >= 4")
    if cfg["scan"] is not None:
        if "param" not in cfg["scan"]:
            raise ConfigError("scan needs a 'param'")
        scan_values(cfg["scan"])
    if cfg["dmrg"]["chi_max"] < 1 or cfg["disentangle"]["max_sweeps"] < 1:
        raise ConfigError("chi_max and max_sweeps must be positive")
    if cfg["disentangle"]["gates"] not in ("coset", "full"):
        raise ConfigError("disentangle.gates must be 'coset' or 'full'")
    if cfg["disentangle"]["schedule"] not in disentangler.SCHEDULES:
        raise ConfigError(f"disentangle.schedule must be one of {disentangler.SCHEDULES}")
    if int(cfg["threads"]) < 1:
        raise ConfigError("threads must be positive")
    return cfg


# ---------------------------------------------------------------- pipeline


def point_seed(master: int, index: int) -> int:
    """Deterministic per-point seed derived from ``(master, index)``."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class Point:
    index: int
    spec: ModelSpec
    seed: int


def expand_points(cfg: Mapping[str, Any]) -> list[Point]:
    """Models x sizes x scan grid, in that nesting order."""
    pts: list[Point] = []
    grid = scan_values(cfg["scan"]) if cfg["scan"] else [None]
    for m in cfg["models"]:
        for L in cfg["sizes"]:
            for v in grid:
                params = dict(m.get("params") or {})
                if v is not None:
                    params[cfg["scan"]["param"]] = v
                try:
                    spec = ModelSpec(m["family"], int(L), params)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
                idx = len(pts)
                pts.append(Point(idx, spec, point_seed(cfg["seed"], idx)))
    return pts


def estimate_memory(spec: ModelSpec, chi: int) -> int:
    """Rough peak bytes: MPS, environments and the two-site eigensolver."""
    L = spec.L
    d_mpo = 6
    mps_b = 16 * L * 2 * chi * chi
    env_b = 16 * L * d_mpo * chi * chi
    two_site = 16 * 4 * chi * chi * 20
    return mps_b + env_b + two_site


def quarter_blocks(L: int, fraction: float) -> tuple[list[int], list[int]]:
    n = max(1, int(round(L * fraction)))
    return list(range(n)), list(range(L - n, L))


def run_point(point: Point, cfg: Mapping[str, Any], out: Path | None = None) -> dict[str, Any]:
    """dmrg -> disentangle -> magic for one model instance."""
    t0 = time.perf_counter()
    spec = point.spec
    dc = cfg["dmrg"]
    res = dmrg.solve(
        spec, chi_max=int(dc["chi_max"]), n_sweeps=int(dc["n_sweeps"]),
        energy_tol=float(dc["energy_tol"]), svd_cutoff=float(dc["svd_cutoff"]), seed=point.seed,
    )
    state = canonicalize(res.state, "right")
    L = spec.L
    S = entropy_profile(state)
    row: dict[str, Any] = {
        "index": point.index,
        "family": spec.family,
        "L": L,
        "params": json.dumps({k: v for k, v in sorted(spec.params.items())}, sort_keys=True),
        "seed": point.seed,
        "energy": res.energy,
        "dmrg_converged": bool(res.converged),
        "max_bond": max(t.shape[2] for t in state.tensors),
        "truncation": float(res.state.truncation_error),
        "S_half": S[L // 2 - 1],
    }
    if cfg["scan"]:
        row["scan_value"] = spec.params[cfg["scan"]["param"]]
    timings = {"dmrg": time.perf_counter() - t0}
    profile = [{"index": point.index, "ell": l + 1, "S": S[l]} for l in range(L - 1)]
    record = None
    dis = cfg["disentangle"]
    if dis["enabled"]:
        t1 = time.perf_counter()
        record = disentangler.disentangle(
            state, dis["gates"], int(dis["max_sweeps"]), float(dis["sweep_tol"]), schedule=dis["schedule"]
        )
        sm = dict(disentangler.smee_profile(record))
        for p in profile:
            p["SMEE"] = sm[p["ell"]]
            p["delta"] = p["S"] - p["SMEE"]
        row.update(
            SMEE_half=sm[L // 2],
            delta=row["S_half"] - sm[L // 2],
            sweeps=record.n_sweeps,
            record_converged=bool(record.converged),
        )
        timings["disentangle"] = time.perf_counter() - t1
    mc = cfg["magic"]
    if mc["m2"] or mc["chi2"]:
        t1 = time.perf_counter()
        if mc["m2"]:
            rep = magic.sre_sample(state, 2, int(mc["n_samples"]), point.seed)
            row.update(m2=rep.density, m2_err=rep.density_error)
        if mc["chi2"]:
            rep = magic.local_magic_chi2(state, int(mc["n_samples"]), point.seed + 1)
            row.update(m2_chi2=rep.density, m2_chi2_err=rep.density_error)
        timings["sre"] = time.perf_counter() - t1
    mu = mc["mutual"]
    if mu["enabled"]:
        t1 = time.perf_counter()
        A, B = quarter_blocks(L, float(mu["block_fraction"]))
        if mu["method"] == "exact":
            mr = magic.mutual_sre_exact(state, A, B)
        else:
            mr = magic.mutual_sre(state, A, B, int(mu["N_S"]), int(mu["n_chains"]), point.seed + 2)
        row.update(L_AB=mr.L_AB, L_AB_err=mr.L_err, I_AB=mr.I_AB, W_AB=mr.W_AB)
        timings["mutual"] = time.perf_counter() - t1
    if out is not None and cfg["save_states"]:
        io.save_mps(out / "states" / f"point_{point.index:04d}.npz", state, {"spec": spec.to_dict()})
        if record is not None:
            disentangler.save_record(out / "records" / f"point_{point.index:04d}.npz", record)
    timings["total"] = time.perf_counter() - t0
    return {"row": row, "profile": profile, "timings": timings}


def _rows_to_csv(path: Path, rows: Sequence[Mapping[str, Any]]) -> Path:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return io.write_csv(path, cols, ([r.get(c, "") for c in cols] for r in rows))


def summarize(cfg: Mapping[str, Any], rows: Sequence[Mapping[str, Any]], profiles: Sequence[Mapping[str, Any]]) -> dict:
    """Cut-scan fits per point, half-chain fits per model, and the Delta-m2 correlation."""
    margin = int(cfg["analysis"]["margin"])
    fits: dict[str, Any] = {"cut_scan": {}, "half_chain": {}, "correlation": {}}
    by_idx: dict[int, list[Mapping[str, Any]]] = {}
    for p in profiles:
        by_idx.setdefault(p["index"], []).append(p)
    for r in rows:
        prof = by_idx.get(r["index"], [])
        entry = {}
        for key in ("S", "SMEE", "delta"):
            pairs = [(p["ell"], p[key]) for p in prof if key in p]
            try:
                entry[key] = analysis.fit_cut_scan(pairs, r["L"], margin).to_dict()
            except analysis.FitError:
                continue
        if entry:
            fits["cut_scan"][str(r["index"])] = entry
    groups: dict[tuple[str, str], list[Mapping[str, Any]]] = {}
    for r in rows:
        groups.setdefault((r["family"], _strip_size_params(r)), []).append(r)
    for (fam, params), grp in sorted(groups.items()):
        if len({g["L"] for g in grp}) < 2:
            continue
        entry = {}
        for key in ("S_half", "SMEE_half", "delta"):
            pairs = [(g["L"], g[key]) for g in grp if key in g]
            if len(pairs) >= 2:
                entry[key] = analysis.fit_half_chain(pairs).to_dict()
        fits["half_chain"][f"{fam} {params}"] = entry
    if cfg["scan"]:
        for L in sorted({r["L"] for r in rows}):
            pts = [(r["scan_value"], r["delta"], r["m2"]) for r in rows if r["L"] == L and "delta" in r and "m2" in r]
            try:
                fits["correlation"][str(L)] = analysis.delta_m2_correlation(pts).to_dict()
            except analysis.FitError:
                pass
    return fits


def _strip_size_params(row: Mapping[str, Any]) -> str:
    return row["params"]


def _git_describe() -> str:
    try:
        here = Path(__file__).resolve().parent
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"], cwd=here, capture_output=True, text=True, timeout=10
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _threads(cfg_threads: int, cli_threads: int | None) -> int:
    if cli_threads is not None:
        return cli_threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
    return int(cfg_threads)


def run(cfg: Mapping[str, Any], out: str | Path, threads: int | None = None) -> dict:
    """Execute a validated config; writes ``points.csv``, ``profiles.csv``, ``fits.json``, ``manifest.json``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    pts = expand_points(cfg)
    budget = int(cfg["budget_mem"])
    for p in pts:
        need = estimate_memory(p.spec, int(cfg["dmrg"]["chi_max"]))
        if need > budget:
            raise ResourceError(f"point {p.index} ({p.spec.family}, L={p.spec.L}) needs ~{need} bytes > budget {budget}")
    n_workers = _threads(cfg["threads"], threads)
    t0 = time.perf_counter()
    if n_workers > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(run_point, pts, [cfg] * len(pts), [out] * len(pts)))
    else:
        results = [run_point(p, cfg, out) for p in pts]
    rows = [r["row"] for r in results]
    profiles = [p for r in results for p in r["profile"]]
    _rows_to_csv(out / "points.csv", rows)
    _rows_to_csv(out / "profiles.csv", profiles)
    fits = summarize(cfg, rows, profiles)
    io.write_json(out / "fits.json", fits)
    unconverged = [r["index"] for r in rows if not r["dmrg_converged"]]
    manifest = {
        "version": __version__,
        "git": _git_describe(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg,
        "master_seed": cfg["seed"],
        "points": [
            {"index": p.index, "spec": p.spec.to_dict(), "seed": p.seed, "timings": r["timings"]}
            for p, r in zip(pts, results)
        ],
        "wall_time": time.perf_counter() - t0,
        "unconverged": unconverged,
    }
    io.write_json(out / "manifest.json", manifest)
    if unconverged and cfg["require_convergence"]:
        raise NonConvergence(f"DMRG did not converge for points {unconverged}")
    return {"rows": rows, "profiles": profiles, "fits": fits, "manifest": manifest}


# ---------------------------------------------------------------- subcommands


def _parse_params(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for it in items or ():
        if "=" not in it:
            raise ConfigError(f"parameter {it!r} must look like name=value")
        k, v = it.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError as exc:
            raise ConfigError(f"parameter {k} is not a number") from exc
    return out


def _load_state(path: str) -> MPS:
    if not Path(path).exists():
        raise ConfigError(f"missing input artifact {path}")
    try:
        return io.load_container(path)[0]
    except io.FormatError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.budget_mem is not None:
        cfg["budget_mem"] = args.budget_mem
    run(cfg, args.out, args.threads)
    print(f"results written to {args.out}")
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    lo, hi, num = args.grid
    raw = {
        "models": [{"family": args.model, "params": _parse_params(args.param)}],
        "sizes": [args.L],
        "scan": {"param": args.scan_param, "start": float(lo), "stop": float(hi), "num": int(num)},
        "seed": args.seed or 0,
        "dmrg": {"chi_max": args.chi},
        "disentangle": {"enabled": not args.no_disentangle},
        "magic": {"m2": args.m2, "n_samples": args.samples},
    }
    if args.budget_mem is not None:
        raw["budget_mem"] = args.budget_mem
    run(load_config(raw), args.out, args.threads)
    print(f"results written to {args.out}")
    return EXIT_OK


def cmd_dmrg(args: argparse.Namespace) -> int:
    try:
        spec = ModelSpec(args.model, args.L, _parse_params(args.param))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = dmrg.solve(spec, chi_max=args.chi, n_sweeps=args.sweeps, seed=args.seed or 0)
    io.save_mps(args.out, res.state, {"spec": spec.to_dict(), "energy": res.energy, "converged": res.converged})
    print(json.dumps({"energy": res.energy, "converged": res.converged, "sweeps": len(res.sweep_energies)}))
    if not res.converged and not args.allow_unconverged:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_disentangle(args: argparse.Namespace) -> int:
    state = _load_state(args.state)
    rec = disentangler.disentangle(state, args.gates, args.max_sweeps, args.sweep_tol, schedule=args.schedule)
    disentangler.save_record(args.out, rec)
    prof = disentangler.smee_profile(rec)
    if args.csv:
        S = entropy_profile(canonicalize(state, "right"))
        io.write_csv(args.csv, ["ell", "S", "SMEE", "delta"], ((l, S[l - 1], s, S[l - 1] - s) for l, s in prof))
    print(json.dumps({"sweeps": rec.n_sweeps, "converged": rec.converged, "trace": rec.trace}))
    return EXIT_OK


def cmd_magic(args: argparse.Namespace) -> int:
    state = _load_state(args.state)
    out: dict[str, Any] = {}
    if args.exact:
        out["m2"] = magic.sre_exact(state, 2).to_dict()
    else:
        out["m2"] = magic.sre_sample(state, 2, args.samples, args.seed or 0).to_dict()
    if args.chi2:
        out["m2_chi2"] = magic.local_magic_chi2(state, args.samples, (args.seed or 0) + 1).to_dict()
    if args.mutual:
        A, B = quarter_blocks(state.length, args.block_fraction)
        if args.exact:
            r = magic.mutual_sre_exact(state, A, B)
        else:
            r = magic.mutual_sre(state, A, B, args.samples, args.chains, (args.seed or 0) + 2)
        out["mutual"] = {"A": A, "B": B, "L_AB": r.L_AB, "L_err": r.L_err, "I_AB": r.I_AB, "W_AB": r.W_AB}
    text = json.dumps(io._jsonable(out), indent=2, sort_keys=True)
    if args.out:
        io.write_json(args.out, out)
    print(text)
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    if not Path(args.csv).exists():
        raise ConfigError(f"missing input artifact {args.csv}")
    cols, rows = io.read_csv(args.csv)
    for c in (args.x, args.y):
        if c not in cols:
            raise ConfigError(f"column {c!r} not in {args.csv}")
    sel = rows
    for f in args.where or ():
        k, v = f.split("=", 1)
        if k not in cols:
            raise ConfigError(f"column {k!r} not in {args.csv}")
        sel = [r for r in sel if r[cols.index(k)] == v]
    ix, iy = cols.index(args.x), cols.index(args.y)
    pairs = [(float(r[ix]), float(r[iy])) for r in sel if r[iy] != ""]
    try:
        if args.form == "cut-scan":
            if args.L is None:
                raise ConfigError("cut-scan fits need --L")
            fit = analysis.fit_cut_scan(pairs, args.L, args.margin)
        else:
            fit = analysis.fit_half_chain(pairs)
    except analysis.FitError as exc:
        raise ConfigError(str(exc)) from exc
    if args.out:
        analysis.write_fit_json(args.out, fit)
    if args.plot_csv:
        analysis.write_plot_csv(args.plot_csv, fit.x, fit.y, None, fit)
    if args.svg:
        analysis.write_svg(args.svg, {"data": (fit.x, fit.y), "fit": (fit.x, fit.predict(fit.x).tolist())}, "x", args.y)
    print(json.dumps({"slope": fit.slope, "slope_err": fit.slope_err, "c": fit.central_charge}))
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    if not Path(args.record).exists():
        raise ConfigError(f"missing input artifact {args.record}")
    rec = disentangler.load_record(args.record)
    original = _load_state(args.original) if args.original else None
    if original is None and rec.initial is None:
        raise ConfigError("record has no stored input state; pass --original")
    ov = disentangler.replay_overlap(rec, original)
    ok = ov >= 1.0 - REPLAY_TOL
    print(json.dumps({"overlap": ov, "ok": ok}))
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabdis", description="Stabilizer disentangling of MPS ground states.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--budget-mem", type=int, default=None, help="memory budget in bytes")

    r = sub.add_parser("run", help="run a YAML experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("scan", help="parameter scan of one model")
    s.add_argument("--model", required=True, choices=FAMILIES)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--scan-param", required=True)
    s.add_argument("--grid", nargs=3, metavar=("START", "STOP", "NUM"), required=True)
    s.add_argument("--param", action="append", help="fixed parameter name=value")
    s.add_argument("--chi", type=int, default=64)
    s.add_argument("--m2", action="store_true")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--no-disentangle", action="store_true")
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_scan)

    d = sub.add_parser("dmrg", help="ground state to an MPS file")
    d.add_argument("--model", required=True, choices=FAMILIES)
    d.add_argument("--L", type=int, required=True)
    d.add_argument("--param", action="append")
    d.add_argument("--chi", type=int, default=64)
    d.add_argument("--sweeps", type=int, default=20)
    d.add_argument("--allow-unconverged", action="store_true")
    d.add_argument("--out", required=True)
    common(d)
    d.set_defaults(func=cmd_dmrg)

    g = sub.add_parser("disentangle", help="Clifford-disentangle an MPS file")
    g.add_argument("--state", required=True)
    g.add_argument("--gates", choices=("coset", "full"), default="coset")
    g.add_argument("--max-sweeps", type=int, default=10)
    g.add_argument("--schedule", choices=disentangler.SCHEDULES, default="alternate")
    g.add_argument("--sweep-tol", type=float, default=1e-8)
    g.add_argument("--csv", help="write the EE/SMEE profile here")
    g.add_argument("--out", required=True)
    common(g)
    g.set_defaults(func=cmd_disentangle)

    m = sub.add_parser("magic", help="SRE estimates of an MPS file")
    m.add_argument("--state", required=True)
    m.add_argument("--samples", type=int, default=1000)
    m.add_argument("--chains", type=int, default=8)
    m.add_argument("--exact", action="store_true")
    m.add_argument("--chi2", action="store_true")
    m.add_argument("--mutual", action="store_true")
    m.add_argument("--block-fraction", type=float, default=0.25)
    m.add_argument("--out")
    common(m)
    m.set_defaults(func=cmd_magic)

    f = sub.add_parser("fit", help="CFT scaling fit of a CSV column")
    f.add_argument("--csv", required=True)
    f.add_argument("--x", default="ell")
    f.add_argument("--y", default="S")
    f.add_argument("--form", choices=("cut-scan", "half-chain"), default="cut-scan")
    f.add_argument("--L", type=float)
    f.add_argument("--margin", type=int, default=analysis.DEFAULT_MARGIN)
    f.add_argument("--where", action="append", help="row filter column=value")
    f.add_argument("--out")
    f.add_argument("--plot-csv")
    f.add_argument("--svg")
    f.set_defaults(func=cmd_fit)

    rp = sub.add_parser("replay", help="verify a CAMPS record against its input state")
    rp.add_argument("--record", required=True)
    rp.add_argument("--original")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return int(args.func(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ResourceError, MemoryBudgetExceeded, OracleSizeError, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
