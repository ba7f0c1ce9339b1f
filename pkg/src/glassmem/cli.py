"""Command-line entry points: reproducible experiment runs from configs.

Every subcommand reads a JSON config (bundled name or path), runs the
computation, and writes its artifacts atomically at the end of the run:
a summary JSON plus CSV tables (UTF-8, header row, '.' decimal). All
artifacts embed the config hash, the seed, and the package version; in
deterministic mode re-running a config byte-reproduces the outputs.

Environment variables with the GLASSMEM_ prefix (GLASSMEM_SEED,
GLASSMEM_OUT, GLASSMEM_THREADS, GLASSMEM_DETERMINISTIC) override config
values when the matching flag is not given explicitly.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import dynamics as dyn
from . import hopfield, pipeline, sk
from .cavity import CavityParams, SitePlan, coupling, coupling_matrix, coupling_mode_sum, j1_plan
from .rng import as_rng, spawn_rngs
from .semiclassical import (
    IntegrationError,
    NoiseModel,
    SimParams,
    run_recall_trial,
)
from .spins import flip_sites

BUNDLED_CONFIGS = (
    "fig2_basins",
    "fig3_capacity",
    "figS5_trial",
    "figS6_hopfield",
    "figS7_fraction",
    "tableS1_polaronic",
)

_KINDS = {"mh": dyn.MH, "sd": dyn.SD, "sd_rate": dyn.SD_RATE}
_NOISES = {
    "none": NoiseModel.none,
    "trap": NoiseModel.trap_only,
    "stimulus": NoiseModel.stimulus_only,
    "both": NoiseModel.full,
}


class ConfigError(Exception):
    """Invalid experiment configuration."""


# ---------------------------------------------------------------------------
# config handling


def load_config(name_or_path: str) -> dict:
    """Load a config by bundled name or filesystem path."""
    if name_or_path in BUNDLED_CONFIGS:
        ref = resources.files("glassmem").joinpath(
            f"configs/{name_or_path}.json")
        with resources.as_file(ref) as path:
            return json.loads(Path(path).read_text(encoding="utf-8"))
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigError(f"config not found: {name_or_path} "
                          f"(bundled names: {', '.join(BUNDLED_CONFIGS)})")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def check_keys(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _resolve_plan(name_or_path) -> SitePlan:
    if name_or_path in (None, "j1"):
        return j1_plan()
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigError(f"plan file not found: {name_or_path}")
    return SitePlan.from_json(path)


def _noise_model(label: str) -> NoiseModel:
    if label not in _NOISES:
        raise ConfigError(f"unknown noise model {label!r} "
                          f"(choose from {sorted(_NOISES)})")
    return _NOISES[label]()


def _kind(label: str) -> dyn.DynamicsKind:
    if label not in _KINDS:
        raise ConfigError(f"unknown dynamics kind {label!r}")
    return _KINDS[label]


# ---------------------------------------------------------------------------
# artifact collection (atomic flush at end of run)


class Artifacts:
    """In-memory artifact store flushed atomically once a run completes."""

    def __init__(self, meta: dict):
        self.meta = meta
        self._files: Dict[str, bytes] = {}

    def add_json(self, name: str, payload: dict) -> None:
        doc = {"meta": self.meta, **payload}
        body = json.dumps(doc, indent=1, sort_keys=True) + "\n"
        self._files[name] = body.encode("utf-8")

    def add_csv(self, name: str, header: Sequence[str],
                rows: Sequence[Sequence]) -> None:
        buf = io.StringIO()
        for key in ("config_hash", "seed", "version"):
            buf.write(f"# {key}={self.meta[key]}\n")
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(_csv_cell(v) for v in row) + "\n")
        self._files[name] = buf.getvalue().encode("utf-8")

    def flush(self, outdir: Path) -> List[Path]:
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, body in sorted(self._files.items()):
            final = outdir / name
            tmp = outdir / (name + ".tmp")
            tmp.write_bytes(body)
            os.replace(tmp, final)
            written.append(final)
        return written


def _csv_cell(v) -> str:
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# worker pool


def worker_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Index-ordered map over independent tasks; pool size = threads."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands


def cmd_hopfield(params: dict, seed: int, threads: int,
                 art: Artifacts) -> None:
    """Stored-memory counts vs embedded pattern number, with linear fit."""
    check_keys(params, {"curves", "trials", "threshold", "kind"}, "params")
    curves = params.get("curves")
    if not curves:
        raise ConfigError("hopfield config needs a nonempty 'curves' list")
    trials = int(params.get("trials", 100))
    threshold = float(params.get("threshold", 0.5))
    kind = _kind(params.get("kind", "mh"))

    for i, cur in enumerate(curves):
        check_keys(cur, {"n", "p_list", "realizations"}, f"curves[{i}]")
        if not cur.get("p_list"):
            raise ConfigError(f"curves[{i}] has an empty p_list")

    streams = spawn_rngs(np.random.default_rng(seed), len(curves))

    def run_curve(task):
        cur, stream = task
        return hopfield.capacity_sweep(int(cur["n"]), cur["p_list"],
                                       realizations=int(cur["realizations"]),
                                       trials=trials, threshold=threshold,
                                       kind=kind, rng=stream)

    results = worker_map(run_curve, list(zip(curves, streams)), threads)

    rows = []
    maxima = []
    for cur, recs in zip(curves, results):
        for rec in recs:
            rows.append([rec["n"], rec["p"], rec["mean"], rec["std"],
                         rec["realizations"], seed])
        best = max(recs, key=lambda r: r["mean"])
        maxima.append({"n": int(cur["n"]), "p_at_max": best["p"],
                       "max_mean": best["mean"], "max_std": best["std"],
                       "realizations": best["realizations"]})
    art.add_csv("hopfield_capacity.csv",
                ["n", "p", "mean", "std", "realizations", "seed"], rows)

    summary: dict = {"maxima": maxima}
    ns = np.array([m["n"] for m in maxima], dtype=float)
    if np.unique(ns).size >= 3:
        ys = np.array([m["max_mean"] for m in maxima])
        slope, intercept = np.polyfit(ns, ys, 1)
        summary["fit"] = {"slope": float(slope),
                          "intercept": float(intercept)}
    art.add_json("hopfield_summary.json", summary)


def cmd_sk(params: dict, seed: int, threads: int, art: Artifacts) -> None:
    """SK capacity and memory-fraction tables over n, kind, threshold."""
    check_keys(params, {"n_list", "kinds", "thresholds", "realizations",
                        "trials", "starts", "mode"}, "params")
    n_list = params.get("n_list")
    if not n_list:
        raise ConfigError("sk config needs a nonempty 'n_list'")
    kinds = params.get("kinds", ["sd", "mh"])
    thresholds = params.get("thresholds", [0.5])
    reals = params.get("realizations", 200)
    if isinstance(reals, int):
        reals = [reals] * len(n_list)
    if len(reals) != len(n_list):
        raise ConfigError("realizations list must match n_list length")
    trials = int(params.get("trials", 100))
    starts = int(params.get("starts", 54_000))
    mode = params.get("mode", "both")
    if mode not in ("capacity", "fraction", "both"):
        raise ConfigError("sk mode must be capacity, fraction, or both")

    tasks = []
    for n, real in zip(n_list, reals):
        for kind_label in kinds:
            for thr in thresholds:
                tasks.append((int(n), int(real), kind_label, float(thr)))
    streams = spawn_rngs(np.random.default_rng(seed), len(tasks))

    def run_task(task_stream):
        (n, real, kind_label, thr), stream = task_stream
        kind = _kind(kind_label)
        row = {"n": n, "kind": kind_label, "threshold": thr,
               "realizations": real}
        if mode in ("capacity", "both"):
            mean, std = sk.sk_capacity(n, kind, thr, realizations=real,
                                       trials=trials, rng=stream,
                                       starts=starts)
            row["capacity_mean"], row["capacity_std"] = mean, std
        if mode in ("fraction", "both"):
            mean, err = sk.memory_fraction(n, kind, thr, realizations=real,
                                           trials=trials, rng=stream,
                                           starts=starts)
            row["fraction_mean"], row["fraction_stderr"] = mean, err
        return row

    results = worker_map(run_task, list(zip(tasks, streams)), threads)

    header = ["n", "kind", "threshold", "realizations"]
    if mode in ("capacity", "both"):
        header += ["capacity_mean", "capacity_std"]
    if mode in ("fraction", "both"):
        header += ["fraction_mean", "fraction_stderr"]
    header.append("seed")
    rows = [[r.get(k, "") for k in header[:-1]] + [seed] for r in results]
    art.add_csv("sk_table.csv", header, rows)
    art.add_json("sk_summary.json", {"rows": results})


def cmd_cavity(params: dict, seed: int, threads: int,
               art: Artifacts) -> None:
    """Coupling matrix of a site plan, kernel scans, mode-sum check."""
    check_keys(params, {"plan", "scan", "mode_sum_check", "detuning_weight"},
               "params")
    plan = _resolve_plan(params.get("plan", "j1"))
    cav = CavityParams()
    J = coupling_matrix(plan, cav)
    n = len(plan)
    rows = [[i, j, J[i, j]] for i in range(n) for j in range(n)]
    art.add_csv("j_matrix.csv", ["i", "j", "J"], rows)

    summary: dict = {
        "n_sites": n,
        "diag_mean": float(np.diag(J).mean()),
        "lambda_max": float(np.linalg.eigvalsh(J).max()),
    }

    scan = params.get("scan")
    if scan:
        check_keys(scan, {"start", "stop", "points", "fixed"}, "scan")
        start = np.asarray(scan.get("start", [0.0, 0.0]), dtype=float)
        stop = np.asarray(scan.get("stop", [50.0, 0.0]), dtype=float)
        pts = int(scan.get("points", 200))
        fixed = np.asarray(scan.get("fixed", [0.0, 0.0]), dtype=float)
        fr = np.linspace(0.0, 1.0, pts)[:, None]
        line = start[None, :] * (1 - fr) + stop[None, :] * fr
        vals = coupling(line, np.broadcast_to(fixed, line.shape), cav)
        scan_rows = [[line[i, 0], line[i, 1], float(vals[i])]
                     for i in range(pts)]
        art.add_csv("kernel_scan.csv", ["x", "y", "J"], scan_rows)

    check = params.get("mode_sum_check")
    if check:
        check_keys(check, {"pairs", "max_order", "box"}, "mode_sum_check")
        pairs = int(check.get("pairs", 20))
        max_order = int(check.get("max_order", 70))
        box = float(check.get("box", 100.0))
        gen = np.random.default_rng(seed)
        # deviations are measured against the kernel peak J(0,0): the
        # sign-changing coupling crosses zero, where a pointwise ratio
        # is meaningless
        scale = abs(float(coupling([0.0, 0.0], [0.0, 0.0], cav)))
        worst = 0.0
        check_rows = []
        for _ in range(pairs):
            r = gen.uniform(-box / np.sqrt(2), box / np.sqrt(2), size=2)
            rp = gen.uniform(-box / np.sqrt(2), box / np.sqrt(2), size=2)
            closed = float(coupling(r, rp, cav))
            summed = float(coupling_mode_sum(r, rp, cav,
                                             max_order=max_order))
            rel = abs(closed - summed) / scale
            worst = max(worst, rel)
            check_rows.append([r[0], r[1], rp[0], rp[1], closed, summed,
                               rel])
        art.add_csv("mode_sum_check.csv",
                    ["x", "y", "xp", "yp", "closed", "mode_sum", "rel_err"],
                    check_rows)
        summary["mode_sum_max_rel_err"] = worst
    art.add_json("cavity_summary.json", summary)


def _sim_params_from(params: dict) -> SimParams:
    scale = float(params.get("trap_energy_scale", 1.0))
    base = SimParams()
    return SimParams(
        rtol=float(params.get("rtol", base.rtol)),
        atol=float(params.get("atol", base.atol)),
        e_trap=base.e_trap * scale,
        elastic=bool(params.get("elastic", True)),
        lazy=bool(params.get("lazy", False)),
    )


def cmd_recall(params: dict, seed: int, threads: int, art: Artifacts,
               emit_trajectory: bool = False) -> None:
    """One semiclassical recall trial; optionally the full trajectory."""
    check_keys(params, {"plan", "memory", "corrupt_sites", "stimulus",
                        "noise", "trap_energy_scale", "rtol", "atol",
                        "elastic", "lazy"}, "params")
    plan = _resolve_plan(params.get("plan", "j1"))
    n = len(plan)

    if "stimulus" in params:
        stimulus = np.asarray(params["stimulus"], dtype=float)
    elif "memory" in params:
        memory = np.asarray(params["memory"], dtype=float)
        stimulus = flip_sites(memory, params.get("corrupt_sites", []))
    else:
        raise ConfigError("recall config needs 'stimulus' or 'memory'")
    if stimulus.size != n:
        raise ConfigError(f"stimulus length {stimulus.size} != plan size {n}")

    sim = _sim_params_from(params)
    noise = _noise_model(params.get("noise", "none"))
    rng = np.random.default_rng(seed)
    result = run_recall_trial(plan, stimulus, params=sim, noise=noise,
                              rng=rng, record=emit_trajectory)

    outcome = {
        "signs": [int(s) for s in result.signs],
        "stimulus": [int(s) for s in stimulus],
        "seed_signs": [int(s) for s in result.seed_signs],
        "flipped_sites": [int(i) for i in
                          np.flatnonzero(result.signs != stimulus)],
        "n_steps": int(result.n_steps),
        "energy": {
            "transverse": result.energy.transverse,
            "ising": result.energy.ising,
            "stimulus": result.energy.stimulus,
            "trap": result.energy.trap,
            "total": result.energy.total,
        },
        "mean_deviation_um": float(result.deviations.mean()),
        "spin_length_drift": float(
            np.abs(result.state.spin_lengths() - sim.spin).max()),
    }
    if "memory" in params:
        memory = np.asarray(params["memory"], dtype=float)
        outcome["recovered_memory"] = bool(
            np.array_equal(result.signs.astype(float), memory))
    art.add_json("recall_outcome.json", outcome)

    if emit_trajectory and result.trajectory is not None:
        tr = result.trajectory
        header = (["t"]
                  + [f"sx_{i}" for i in range(n)]
                  + [f"sy_{i}" for i in range(n)]
                  + [f"sz_{i}" for i in range(n)]
                  + [f"x_{i}" for i in range(n)]
                  + [f"y_{i}" for i in range(n)]
                  + ["e_transverse", "e_ising", "e_stimulus", "e_trap"])
        rows = []
        for k in range(tr.t.size):
            rows.append([tr.t[k], *tr.sx[k], *tr.sy[k], *tr.sz[k],
                         *tr.pos[k, :, 0], *tr.pos[k, :, 1], *tr.energy[k]])
        art.add_csv("trajectory.csv", header, rows)


_PIPELINE_KEYS = {"samples", "cut", "noise_floor", "screen_trials",
                  "pass_threshold", "adaptive_trials", "threshold",
                  "strict", "exact_single_flip", "bootstrap_draws"}


def _pipeline_kwargs(block: dict) -> dict:
    check_keys(block, _PIPELINE_KEYS, "pipeline")
    kw = {}
    if "samples" in block:
        kw["n_samples"] = int(block["samples"])
    for key in ("cut", "noise_floor", "pass_threshold", "threshold"):
        if key in block:
            kw[key] = float(block[key])
    for key in ("screen_trials", "adaptive_trials", "bootstrap_draws"):
        if key in block:
            kw[key] = int(block[key])
    for key in ("strict", "exact_single_flip"):
        if key in block:
            kw[key] = bool(block[key])
    return kw


def _build_oracle(spec: dict, rng) -> "pipeline.NetworkOracle":
    kind = spec.get("type")
    if kind == "sk":
        check_keys(spec, {"type", "n", "j_seed", "kind"}, "oracle")
        J = sk.sample_sk(int(spec.get("n", 12)),
                         np.random.default_rng(int(spec.get("j_seed", 0))))
        return pipeline.RelaxOracle(J, _kind(spec.get("kind", "sd")))
    if kind == "hopfield":
        check_keys(spec, {"type", "n", "p", "pattern_seed", "kind"},
                   "oracle")
        from .spins import random_spins

        pats = random_spins(int(spec.get("n", 16)),
                            np.random.default_rng(
                                int(spec.get("pattern_seed", 0))),
                            trials=int(spec.get("p", 4)))
        return pipeline.RelaxOracle(hopfield.hebbian(pats),
                                    _kind(spec.get("kind", "mh")))
    if kind == "semiclassical":
        check_keys(spec, {"type", "plan", "noise", "trap_energy_scale",
                          "rtol", "atol", "elastic", "lazy"}, "oracle")
        plan = _resolve_plan(spec.get("plan", "j1"))
        return pipeline.SemiclassicalOracle(
            plan, params=_sim_params_from(spec),
            noise=_noise_model(spec.get("noise", "none")))
    if kind == "identity":
        # degenerate plumbing case: every stimulus is its own attractor,
        # so capacity is bounded by the distinct-stimulus count
        check_keys(spec, {"type", "n"}, "oracle")
        return pipeline.IdentityOracle(int(spec.get("n", 12)))
    raise ConfigError(f"unknown oracle type {kind!r}")


def _capacity_report(res: "pipeline.CapacityResult", label: str,
                     art: Artifacts, extrapolation=None) -> dict:
    prefix = f"{label}_" if label else ""
    report = {
        "label": label,
        "capacity": {"count": res.count, "mean": res.mean, "err": res.err},
        "n_samples": res.n_samples,
        "threshold": res.threshold,
        "memories": [
            {
                "signs": [int(v) for v in r.reference],
                "sampled_count": r.count,
                "p0": r.p0,
                "screened": r.screened,
                "basin": r.basin,
                "basin_err": r.basin_err,
                "volume": r.volume,
                "volume_err": r.volume_err,
                "exact_p1": r.exact_p1,
                "is_memory": r.is_memory,
            }
            for r in res.records
        ],
    }
    if extrapolation is not None:
        report["capacity_vs_samples"] = {
            "sizes": extrapolation.sizes.tolist(),
            "means": extrapolation.means.tolist(),
            "stds": extrapolation.stds.tolist(),
            "slope": extrapolation.slope,
            "intercept": extrapolation.intercept,
            "fraction_found": extrapolation.fraction_found,
        }
    trial_rows = []
    for cid, rec in enumerate(res.records):
        if rec.curve is None:
            continue
        for e, hit in rec.curve.raw_trials:
            trial_rows.append([cid, e, int(hit)])
    art.add_csv(f"{prefix}trials.csv", ["candidate", "e", "success"],
                trial_rows)
    return report


def cmd_discover(params: dict, seed: int, threads: int,
                 art: Artifacts) -> None:
    """Memory pipeline over a configured oracle; reports and trial logs."""
    check_keys(params, {"oracle", "pipeline", "conditions", "extrapolate",
                        "emit_tree"}, "params")
    oracle_spec = params.get("oracle")
    if not oracle_spec:
        raise ConfigError("discover config needs an 'oracle' block")
    pipe_kw = _pipeline_kwargs(params.get("pipeline", {}))
    extrapolate = bool(params.get("extrapolate", False))
    emit_tree = bool(params.get("emit_tree", False))
    conditions = params.get("conditions")

    def run_one(spec: dict, label: str, stream) -> dict:
        oracle = _build_oracle(spec, stream)
        configs = pipeline.sample_attractors(
            oracle, samples=pipe_kw.get("n_samples"), rng=stream)
        kw = {k: v for k, v in pipe_kw.items() if k != "n_samples"}
        res = pipeline.capacity(oracle, rng=stream, configs=configs, **kw)
        extra = None
        if extrapolate:
            extra = pipeline.capacity_vs_samples(configs, rng=stream)
        if emit_tree:
            _, tree = pipeline.cluster_candidates(
                configs, cut=kw.get("cut", pipeline.DEFAULT_CUT),
                noise_floor=kw.get("noise_floor",
                                   pipeline.DEFAULT_NOISE_FLOOR))
            name = f"{label}_tree.json" if label else "tree.json"
            doc = {"n_leaves": tree.n_leaves,
                   "merges": [[int(a), int(b), float(h), int(c)]
                              for a, b, h, c in tree.merges]}
            art.add_json(name, doc)
        return _capacity_report(res, label, art, extra)

    if conditions:
        streams = spawn_rngs(np.random.default_rng(seed), len(conditions))
        reports = []
        table_rows = []
        for cond, stream in zip(conditions, streams):
            check_keys(cond, {"label", "noise", "trap_energy_scale"},
                       "condition")
            label = cond.get("label") or (
                f"{cond.get('noise', 'none')}"
                f"_x{cond.get('trap_energy_scale', 1.0)}")
            spec = dict(oracle_spec)
            spec.update({k: v for k, v in cond.items() if k != "label"})
            rep = run_one(spec, label, stream)
            reports.append(rep)
            table_rows.append([label, cond.get("trap_energy_scale", 1.0),
                               cond.get("noise", "none"),
                               rep["capacity"]["count"],
                               rep["capacity"]["mean"],
                               rep["capacity"]["err"]])
        art.add_csv("capacity_table.csv",
                    ["label", "trap_energy_scale", "noise", "count", "mean",
                     "err"], table_rows)
        art.add_json("pipeline_report.json", {"conditions": reports,
                                              "seed": seed})
    else:
        stream = np.random.default_rng(seed)
        rep = run_one(dict(oracle_spec), "", stream)
        art.add_json("pipeline_report.json", {**rep, "seed": seed})


# ---------------------------------------------------------------------------
# driver


_COMMANDS: Dict[str, Callable] = {
    "hopfield": cmd_hopfield,
    "sk": cmd_sk,
    "cavity": cmd_cavity,
    "recall": cmd_recall,
    "discover": cmd_discover,
}


def _env_default(name: str, fallback=None, cast=str):
    raw = os.environ.get(f"GLASSMEM_{name}")
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        return fallback


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glassmem",
        description="Spin-network associative memory experiments.")
    parser.add_argument("--version", action="version",
                        version=f"glassmem {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None,
                       help="bundled config name or JSON path")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (overrides config)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker pool size for independent tasks")
        p.add_argument("--deterministic", action="store_true",
                       default=None,
                       help="byte-reproducible outputs (no timestamps)")
        if name == "recall":
            p.add_argument("--emit-trajectory", action="store_true",
                           help="write the accepted-step trajectory CSV")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config) if args.config else {}
        if config.get("subcommand") not in (None, args.subcommand):
            raise ConfigError(
                f"config is for subcommand {config['subcommand']!r}, "
                f"invoked as {args.subcommand!r}")
        check_keys(config, {"subcommand", "seed", "params", "out",
                            "deterministic"}, "config")

        seed = args.seed
        if seed is None:
            seed = _env_default("SEED", config.get("seed", 0), int)
        out = args.out or _env_default("OUT", config.get("out")) or "."
        threads = args.threads
        if threads is None:
            threads = _env_default("THREADS", 1, int)
        deterministic = args.deterministic
        if deterministic is None:
            deterministic = bool(_env_default(
                "DETERMINISTIC", config.get("deterministic", False),
                lambda s: s not in ("0", "false", "")))
        params = config.get("params", {})

        meta = {
            "subcommand": args.subcommand,
            "config_hash": config_hash(config),
            "seed": int(seed),
            "version": __version__,
            "deterministic": bool(deterministic),
        }
        if not deterministic:
            meta["created_unix"] = int(time.time())
        art = Artifacts(meta)

        kwargs = {}
        if args.subcommand == "recall":
            kwargs["emit_trajectory"] = bool(
                getattr(args, "emit_trajectory", False))
        _COMMANDS[args.subcommand](params, int(seed), int(threads), art,
                                   **kwargs)
        written = art.flush(Path(out))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
