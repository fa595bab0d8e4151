"""Execute configured runs and persist their output."""
from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bridges import bridge_from_name
from .config import RunConfig
from .diagnostics import ChainSummary, summarize, tv_distance
from .gibbs import ChainOutput, ChainRecord, MHConfig, MoveLaw, run_chain
from .rjmcmc import RJConfig, run_rj_chain
from .rng import RNG_ALGORITHM
from .testbeds import grid_toy_make, polyreg_exact_posterior, polyreg_make

OUTPUT_DIR_ENV = "TDGIBBS_OUTPUT_DIR"
CSV_HEADER = ("iter", "k", "log_joint", "jumped", "theta")
COMPARE_HEADER = ("algorithm", "tv_to_exact", "switch_rate", "ess_k", "wall_seconds")


@dataclass
class BuiltModel:
    y: object
    spec: object
    oracle: np.ndarray | None  # exact pi(k | y) over spec.indices, if known


def _polyreg(params):
    data, spec = polyreg_make(**params)
    return BuiltModel(data, spec, polyreg_exact_posterior(data, spec))


def _grid(params):
    toy = grid_toy_make(params["preset"])
    return BuiltModel(toy.y, toy.spec, toy.target_k())


MODELS = {"polyreg": _polyreg, "grid": _grid}


def build_model(cfg: RunConfig) -> BuiltModel:
    return MODELS[cfg.model](cfg.model_params)


def execute(cfg: RunConfig, algorithm: str | None = None, chain: int = 0,
            model: BuiltModel | None = None) -> ChainOutput:
    algorithm = algorithm or cfg.algorithm
    model = model or build_model(cfg)
    bridge = bridge_from_name(model.spec, cfg.bridge)
    law = MoveLaw(cfg.q)
    mh = MHConfig(cfg.mh_steps, cfg.mh_step_size)
    if algorithm == "gibbs":
        out = run_chain(model.spec, model.y, bridge, law, cfg.n_sweeps, cfg.burn_in,
                        seed=cfg.seed, mh_config=mh, chain=chain)
    elif algorithm == "rj":
        out = run_rj_chain(model.spec, model.y, bridge, RJConfig.from_move_law(law),
                           cfg.n_sweeps, cfg.burn_in, seed=cfg.seed, mh_config=mh, chain=chain)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    out.config_hash = cfg.hash()
    return out


def resolve_output(path) -> Path:
    """Place the file under ``$TDGIBBS_OUTPUT_DIR`` when that is set."""
    path = Path(path)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        path = Path(override) / path.name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def header_lines(cfg: RunConfig, kind: str, **extra) -> list[str]:
    lines = [
        f"tdgibbs {kind} (version {__version__})",
        f"config_hash: {cfg.hash()}",
        f"seed: {cfg.seed}",
        f"rng: {RNG_ALGORITHM}",
        "reproducible: rerunning the config below with this seed on the same build "
        "gives a byte-identical file",
    ]
    lines += [f"{k}: {v}" for k, v in extra.items()]
    lines += ["config:"] + ["  " + line for line in cfg.to_text().splitlines()]
    return ["# " + line for line in lines]


def format_theta(theta) -> str:
    return ";".join(f"{x:.17g}" for x in theta)


def write_chain_csv(path, chain: ChainOutput, cfg: RunConfig) -> Path:
    path = resolve_output(path)
    with open(path, "w", newline="") as fh:
        for line in header_lines(cfg, "chain", algorithm=chain.algorithm, chain=chain.chain):
            fh.write(line + "\n")
        fh.write(",".join(CSV_HEADER) + "\n")
        for r in chain.records:
            fh.write(f'{r.iteration},{r.k},{r.log_joint:.17g},{int(r.jumped)},"{format_theta(r.theta)}"\n')
    return path


def read_chain_csv(path) -> list[ChainRecord]:
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected chain header {header}")
        return [
            ChainRecord(int(it), int(k), np.array([float(x) for x in theta.split(";") if x]),
                        float(lj), bool(int(jumped)))
            for it, k, lj, jumped, theta in rows
        ]


def write_summary(path, summary: ChainSummary, cfg: RunConfig, tv: float | None) -> Path:
    path = resolve_output(path)
    with open(path, "w") as fh:
        for line in header_lines(cfg, "summary"):
            fh.write(line + "\n")
        fh.write(f"n_sweeps={summary.n_sweeps}\n")
        fh.write(f"switch_rate={summary.switch_rate!r}\n")
        fh.write(f"ess_k={summary.ess_k!r}\n")
        for k, p in sorted(summary.posterior_k.items()):
            fh.write(f"posterior_k.{k}={p!r}\n")
        if tv is not None:
            fh.write(f"tv_to_exact={tv!r}\n")
    return path


def summary_path(output_path) -> Path:
    p = Path(output_path)
    return p.with_name(p.stem + ".summary.txt")


def tv_to_oracle(summary: ChainSummary, model: BuiltModel) -> float | None:
    if model.oracle is None:
        return None
    return tv_distance(summary.posterior_vector(model.spec.indices), model.oracle)


def compare_one(cfg: RunConfig, algorithm: str, chain: int) -> dict:
    """Run one sampler for the comparison table (top level so it pickles)."""
    model = build_model(cfg)
    start = time.perf_counter()
    out = execute(cfg, algorithm, chain, model)
    wall = time.perf_counter() - start
    summary = summarize(out)
    return {
        "algorithm": algorithm,
        "tv_to_exact": tv_to_oracle(summary, model),
        "switch_rate": summary.switch_rate,
        "ess_k": summary.ess_k,
        "wall_seconds": wall,
        "posterior_k": summary.posterior_k,
    }


def write_compare_table(path, rows: list[dict], cfg: RunConfig) -> Path:
    path = resolve_output(path)
    with open(path, "w") as fh:
        for line in header_lines(cfg, "comparison", threshold=cfg.threshold):
            fh.write(line + "\n")
        fh.write(",".join(COMPARE_HEADER) + "\n")
        for row in rows:
            fh.write(",".join(_cell(row[c]) for c in COMPARE_HEADER) + "\n")
    return path


def _cell(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)
