"""Monte-Carlo sweeps: generate, observe, estimate, score.

A sweep runs every ``(size, p, mode, seed)`` cell and writes three files:

* ``<out>``: one CSV row per cell ``m,n,p,mode,seed,mse,error``. It is a pure
  function of the config, so reruns are byte-identical.
* ``<out stem>.timing.csv``: wall time per cell, kept apart so the result
  file stays reproducible.
* ``<out stem>.summary.json``: per-mode median MSE per size and the
  least-squares slope of ``log(median MSE)`` against ``log(n*p)``.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .deconv import DEFAULT_GRID_SIZE, DEFAULT_NODES, KernelSpec
from .errors import ConfigError, MonoDeconvError, ShapeError
from .estimator import EstimatorConfig, canonical_mode, estimate
from .model import (
    LatentModel,
    NoiseSpec,
    generate_truth,
    observe,
    parse_model,
    parse_noise,
    sample_features,
)

log = logging.getLogger(__name__)

RESULT_FIELDS = ("m", "n", "p", "mode", "seed", "mse", "error")


def mse(est, truth):
    """Mean squared entrywise error of ``est`` (array or EstimatedMatrix) against ``truth``."""
    est = np.asarray(getattr(est, "values", est), dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ShapeError(f"estimate {est.shape} and truth {truth.shape} differ")
    return float(np.mean((est - truth) ** 2))


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple
    ps: tuple
    modes: tuple
    noise: NoiseSpec
    model: LatentModel
    seeds: tuple
    output_path: str = "sweep.csv"
    d1: float | None = None
    d2: float | None = None
    grid_size: int = DEFAULT_GRID_SIZE
    nodes: int = DEFAULT_NODES
    workers: int = 1

    def __post_init__(self):
        for name in ("sizes", "ps", "modes", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"sweep needs a nonempty {name!r} list")
        if any(not 0.0 < p <= 1.0 for p in self.ps):
            raise ConfigError("every p must lie in (0, 1]")
        object.__setattr__(self, "sizes", tuple((int(m), int(n)) for m, n in self.sizes))
        object.__setattr__(self, "modes", tuple(canonical_mode(md) for md in self.modes))

    @classmethod
    def from_dict(cls, d, output_path=None):
        d = dict(d)
        seeds = d.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = list(range(seeds))
        try:
            return cls(
                sizes=tuple(tuple(s) for s in d["sizes"]),
                ps=tuple(float(p) for p in d["ps"]),
                modes=tuple(d["modes"]),
                noise=parse_noise(d.get("noise", "none")),
                model=parse_model(d.get("model", "curved")),
                seeds=tuple(int(s) for s in seeds),
                output_path=output_path or d.get("output_path", "sweep.csv"),
                d1=d.get("d1"),
                d2=d.get("d2"),
                grid_size=int(d.get("grid", DEFAULT_GRID_SIZE)),
                nodes=int(d.get("nodes", DEFAULT_NODES)),
                workers=int(d.get("workers", 1)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad sweep config: {exc}") from exc

    @classmethod
    def from_json(cls, path, output_path=None):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(d, output_path)

    def cells(self):
        for m, n in self.sizes:
            for p in self.ps:
                for mode in self.modes:
                    for seed in self.seeds:
                        yield m, n, p, mode, seed


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)

    def medians(self, mode):
        """``{(m, n, p): median mse}`` over seeds, ignoring failed cells."""
        groups = {}
        for r in self.rows:
            if r["mode"] == mode and np.isfinite(r["mse"]):
                groups.setdefault((r["m"], r["n"], r["p"]), []).append(r["mse"])
        return {k: float(np.median(v)) for k, v in groups.items()}


def data_seeds(seed):
    """Independent (features, observation) seeds derived from one sweep seed."""
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def simulate(model, noise, m, n, p, seed):
    """Ground truth, features and observations for one sweep cell."""
    f_seed, o_seed = data_seeds(seed)
    features = sample_features(m, n, f_seed)
    truth = generate_truth(model, features)
    return truth, features, observe(truth, noise, p, o_seed)


def estimator_config(cfg, mode, seed):
    d1 = cfg.model.d1 if cfg.d1 is None else cfg.d1
    d2 = cfg.model.d2 if cfg.d2 is None else cfg.d2
    noise = None if mode == "noiseless" else cfg.noise
    return EstimatorConfig(mode=mode, noise=noise, d1=d1, d2=d2,
                           kernel=KernelSpec(nodes=cfg.nodes),
                           grid_size=cfg.grid_size, seed=seed)


def run_cell(cfg, m, n, p, mode, seed):
    row = {"m": m, "n": n, "p": p, "mode": mode, "seed": seed,
           "mse": float("nan"), "error": "", "wall_time": 0.0}
    start = time.perf_counter()
    try:
        truth, _, obs = simulate(cfg.model, cfg.noise, m, n, p, seed)
        est = estimate(obs, estimator_config(cfg, mode, seed))
        row["mse"] = mse(est, truth)
    except MonoDeconvError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        log.warning("cell m=%d n=%d p=%g mode=%s seed=%d failed: %s", m, n, p, mode, seed, exc)
    row["wall_time"] = time.perf_counter() - start
    return row


def _run_cell_args(args):
    return run_cell(*args)


def fit_slope(medians):
    """Least-squares slope of ``log(median)`` on ``log(n*p)``."""
    pts = [(np.log(n * p), np.log(v)) for (m, n, p), v in medians.items() if v > 0]
    if len(pts) < 2:
        return float("nan")
    x, y = np.array(pts).T
    if np.ptp(x) == 0:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def run_sweep(cfg, write=True):
    cells = list(cfg.cells())
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_cell_args, [(cfg, *c) for c in cells]))
    else:
        rows = [run_cell(cfg, *c) for c in cells]
    result = SweepResult(rows)
    result.slopes = {mode: fit_slope(result.medians(mode)) for mode in cfg.modes}
    if write:
        write_results(result, cfg.output_path)
    return result


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


def _num(x):
    return format(x, ".17g")


def write_results(result, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for r in result.rows:
            w.writerow([r["m"], r["n"], _num(r["p"]), r["mode"], r["seed"],
                        _num(r["mse"]), r["error"]])
    with open(path.with_name(path.stem + ".timing.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("m", "n", "p", "mode", "seed", "wall_time"))
        for r in result.rows:
            w.writerow([r["m"], r["n"], _num(r["p"]), r["mode"], r["seed"],
                        f"{r['wall_time']:.6f}"])
    modes = sorted({r["mode"] for r in result.rows})
    summary = {
        "slopes": {md: _finite_or_none(result.slopes.get(md, float("nan"))) for md in modes},
        "medians": {md: [{"m": m, "n": n, "p": p, "median_mse": v}
                         for (m, n, p), v in sorted(result.medians(md).items())]
                    for md in modes},
    }
    with open(path.with_name(path.stem + ".summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
