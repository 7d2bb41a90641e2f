"""Experiment harness: single runs, the ansatz sweep grid, and reports.

Every run owns a directory under the results root (the ``QNLP_RESULTS_ROOT``
environment variable, else ``./results``) named by its full configuration
and seed.  A run directory holds ``config.json``, per-epoch ``metrics.csv``,
a final ``checkpoint.json``, and ``summary.json``.  The presence of
``summary.json`` is the completion ledger: sweeps and repeated invocations
skip any run that already has one, which makes long grids resumable.

A model with an empty symbol table cannot train; its summary records the
accuracy fields as literal ``NaN`` (the grid report keeps those cells as
``NaN`` text).  A run that exceeds the per-cell wall-clock budget is
recorded as aborted without failing the surrounding sweep.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from qnlp.circuit import CircuitAnsatz, CircuitAnsatzConfig, ZeroParameterModel
from qnlp.corpus import CorpusSplits, default_lexicon, generate_mc, load_tsv
from qnlp.errors import ConfigError, Error
from qnlp.pregroup import Lexicon
from qnlp.rewrite import RewriteScheme
from qnlp.tensornet import TensorAnsatz, TensorAnsatzConfig
from qnlp.training import (
    AdaptiveGDConfig,
    BudgetExceeded,
    CircuitModel,
    History,
    SPSAConfig,
    TensorModel,
    TrainConfig,
    fit,
    summarize,
)


class EmptyResults(Error):
    """The results root contains no completed runs."""


RESULTS_ENV = "QNLP_RESULTS_ROOT"

_CIRCUIT_ANSATZE = tuple(a.value for a in CircuitAnsatz)
_TENSOR_ANSATZE = tuple(a.value for a in TensorAnsatz)
_SCHEMES = tuple(s.value for s in RewriteScheme)


@dataclass(frozen=True)
class ExperimentConfig:
    backend: str  # "circuit" | "tensor"
    ansatz: str
    scheme: str = "re_norm_cur_norm"
    n_layers: int = 1
    n_single_qubit_params: int = 3
    d_n: int = 2
    d_s: int = 2
    bond_dim: int = 2
    max_legs: int = 2
    seeds: tuple[int, ...] = (0,)
    epochs: int = 120
    optimizer: str = "default"  # "default" | "spsa" | "adaptive_gd"
    dataset_dir: str | None = None
    dataset_seed: int = 0
    split_sizes: tuple[int, int, int] = (70, 30, 30)

    def __post_init__(self):
        if self.backend not in ("circuit", "tensor"):
            raise ConfigError(f"unknown backend: {self.backend!r}")
        allowed = _CIRCUIT_ANSATZE if self.backend == "circuit" else _TENSOR_ANSATZE
        if self.ansatz not in allowed:
            raise ConfigError(
                f"ansatz {self.ansatz!r} is not valid for backend "
                f"{self.backend!r}; choose from {sorted(allowed)}"
            )
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown rewrite scheme: {self.scheme!r}")
        if self.optimizer not in ("default", "spsa", "adaptive_gd"):
            raise ConfigError(f"unknown optimizer: {self.optimizer!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.n_layers < 0 or self.n_single_qubit_params < 0:
            raise ConfigError("layer and rotation counts must be non-negative")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["seeds"] = list(self.seeds)
        out["split_sizes"] = list(self.split_sizes)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "backend" not in obj or "ansatz" not in obj:
            raise ConfigError("config needs at least 'backend' and 'ansatz'")
        kwargs = dict(obj)
        if "seeds" in kwargs:
            kwargs["seeds"] = tuple(int(s) for s in kwargs["seeds"])
        if "split_sizes" in kwargs:
            kwargs["split_sizes"] = tuple(int(n) for n in kwargs["split_sizes"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def dataset_tag(self) -> str:
        if self.dataset_dir is not None:
            return Path(self.dataset_dir).name or "dataset"
        a, b, c = self.split_sizes
        return f"gen{self.dataset_seed}-{a}-{b}-{c}"

    def run_id(self, seed: int) -> str:
        return (
            f"{self.backend}_{self.ansatz}_{self.scheme}"
            f"_L{self.n_layers}_r{self.n_single_qubit_params}"
            f"_{self.dataset_tag()}_s{seed}"
        )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(obj)


def results_root(override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(RESULTS_ENV, "results"))


def load_splits(cfg: ExperimentConfig) -> tuple[CorpusSplits, Lexicon]:
    if cfg.dataset_dir is None:
        splits = generate_mc(cfg.dataset_seed, cfg.split_sizes)
        return splits, default_lexicon()
    root = Path(cfg.dataset_dir)
    parts = {}
    for name in ("train", "dev", "test"):
        path = root / f"{name}.tsv"
        if not path.exists():
            raise ConfigError(f"dataset directory is missing {path.name}")
        parts[name] = load_tsv(path, name)
    lex_path = root / "lexicon.tsv"
    lexicon = Lexicon.load(lex_path) if lex_path.exists() else default_lexicon()
    return CorpusSplits(parts["train"], parts["dev"], parts["test"]), lexicon


def _build_model(cfg: ExperimentConfig, splits: CorpusSplits, lexicon: Lexicon):
    scheme = RewriteScheme(cfg.scheme)
    if cfg.backend == "circuit":
        ansatz = CircuitAnsatzConfig(
            kind=CircuitAnsatz(cfg.ansatz),
            n_layers=cfg.n_layers,
            n_single_qubit_params=cfg.n_single_qubit_params,
        )
        return CircuitModel.build(splits, lexicon, scheme, ansatz)
    tensor_cfg = TensorAnsatzConfig(
        kind=TensorAnsatz(cfg.ansatz),
        d_n=cfg.d_n,
        d_s=cfg.d_s,
        bond_dim=cfg.bond_dim,
        max_legs=cfg.max_legs,
    )
    return TensorModel.build(splits, lexicon, scheme, tensor_cfg)


def _train_config(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    choice = cfg.optimizer
    if choice == "default":
        choice = "spsa" if cfg.backend == "circuit" else "adaptive_gd"
    optimizer = SPSAConfig() if choice == "spsa" else AdaptiveGDConfig()
    return TrainConfig(epochs=cfg.epochs, seed=seed, optimizer=optimizer)


def _write_metrics_csv(path: Path, history: History) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "train_acc", "val_acc"])
        for e in range(len(history)):
            writer.writerow(
                [
                    e + 1,
                    repr(history.train_loss[e]),
                    repr(history.val_loss[e]),
                    repr(history.train_acc[e]),
                    repr(history.val_acc[e]),
                ]
            )


def _nan_summary(cfg: ExperimentConfig, seed: int, status: str, note: str) -> dict:
    nan = float("nan")
    return {
        "run_id": cfg.run_id(seed),
        "seed": seed,
        "status": status,
        "note": note,
        "config": {**cfg.to_dict(), "seeds": [seed]},
        "mean_train_loss": nan,
        "mean_val_loss": nan,
        "mean_train_acc": nan,
        "mean_val_acc": nan,
        "test_acc": nan,
        "degenerate_evals": 0,
        "epochs": 0,
        "wall_seconds": 0.0,
    }


def run_one(
    cfg: ExperimentConfig,
    seed: int,
    root: str | Path | None = None,
    budget_seconds: float | None = None,
) -> dict:
    """Execute (or resume) one seed of a configuration; returns its summary.

    Pipeline errors carry a stage tag; a zero-parameter model or a blown
    budget is recorded in the summary instead of raised.
    """
    base = results_root(root)
    run_dir = base / cfg.run_id(seed)
    summary_path = run_dir / "summary.json"
    if summary_path.exists():
        return json.loads(summary_path.read_text(encoding="utf-8"))

    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    def fail(stage: str, exc: Exception) -> Error:
        return Error(f"stage {stage}: {exc}")

    try:
        splits, lexicon = load_splits(cfg)
    except Error:
        raise
    except Exception as exc:
        raise fail("data", exc) from exc

    try:
        model = _build_model(cfg, splits, lexicon)
    except ZeroParameterModel as exc:
        summary = _nan_summary(cfg, seed, "zero_params", str(exc))
        _finish_run(run_dir, cfg, seed, summary, history=None, model=None)
        return summary
    except Error as exc:
        raise fail("compile", exc) from exc

    try:
        history = fit(model, splits, _train_config(cfg, seed), budget_seconds)
    except BudgetExceeded as exc:
        summary = _nan_summary(cfg, seed, "aborted", str(exc))
        summary["wall_seconds"] = time.monotonic() - started
        _finish_run(run_dir, cfg, seed, summary, history=None, model=None)
        return summary
    except Error as exc:
        raise fail("train", exc) from exc

    stats = summarize(history, last_k=min(10, len(history)))
    summary = {
        "run_id": cfg.run_id(seed),
        "seed": seed,
        "status": "ok",
        "note": "",
        "config": {**cfg.to_dict(), "seeds": [seed]},
        **stats,
        "test_acc": history.test_acc,
        "degenerate_evals": history.degenerate_evals,
        "epochs": len(history),
        "wall_seconds": time.monotonic() - started,
    }
    _finish_run(run_dir, cfg, seed, summary, history, model)
    return summary


def _finish_run(
    run_dir: Path,
    cfg: ExperimentConfig,
    seed: int,
    summary: dict,
    history: History | None,
    model,
) -> None:
    (run_dir / "config.json").write_text(
        json.dumps({**cfg.to_dict(), "seeds": [seed]}, indent=2) + "\n",
        encoding="utf-8",
    )
    if history is not None:
        _write_metrics_csv(run_dir / "metrics.csv", history)
        if model is not None and history.final_params is not None:
            checkpoint = {
                "kind": cfg.backend,
                "epoch": len(history),
                "config": {**cfg.to_dict(), "seeds": [seed]},
                "params": model.params_to_named(history.final_params),
            }
            (run_dir / "checkpoint.json").write_text(
                json.dumps(checkpoint, indent=2) + "\n", encoding="utf-8"
            )
    # summary.json written last: its presence marks the run complete
    (run_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, allow_nan=True) + "\n", encoding="utf-8"
    )


def run_experiment(
    cfg: ExperimentConfig,
    root: str | Path | None = None,
    budget_seconds: float | None = None,
) -> list[dict]:
    """Run every seed of a configuration; returns the per-seed summaries."""
    return [run_one(cfg, seed, root, budget_seconds) for seed in cfg.seeds]


# -- sweep ----------------------------------------------------------------


def sweep_cells(
    scheme: str = "re_norm_cur_norm",
    ansatze: tuple[str, ...] = _CIRCUIT_ANSATZE,
    layer_range: tuple[int, ...] = (0, 1, 2, 3, 4),
    rotation_range: tuple[int, ...] = (0, 1, 2, 3, 4),
    seeds: tuple[int, ...] = (0,),
    epochs: int = 120,
    dataset_seed: int = 0,
) -> list[ExperimentConfig]:
    cells = []
    for ansatz in ansatze:
        for layers in layer_range:
            for rot in rotation_range:
                cells.append(
                    ExperimentConfig(
                        backend="circuit",
                        ansatz=ansatz,
                        scheme=scheme,
                        n_layers=layers,
                        n_single_qubit_params=rot,
                        seeds=tuple(seeds),
                        epochs=epochs,
                        dataset_seed=dataset_seed,
                    )
                )
    return cells


def _sweep_worker(args: tuple) -> dict:
    cfg_dict, seed, root, budget = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    try:
        return run_one(cfg, seed, root, budget)
    except Exception as exc:  # recorded, sweep continues
        summary = _nan_summary(cfg, seed, "error", str(exc))
        run_dir = results_root(root) / cfg.run_id(seed)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "summary.json").write_text(
            json.dumps(summary, indent=2, allow_nan=True) + "\n", encoding="utf-8"
        )
        return summary


def run_sweep(
    cells: list[ExperimentConfig],
    root: str | Path | None = None,
    workers: int | None = None,
    budget_per_cell: float | None = None,
) -> list[dict]:
    """Run all (cell, seed) pairs, in a process pool when workers > 1.

    Completed runs (summary.json on disk) are skipped, so an interrupted
    sweep picks up where it stopped.
    """
    base = results_root(root)
    base.mkdir(parents=True, exist_ok=True)
    jobs = [
        (cfg.to_dict(), seed, str(base), budget_per_cell)
        for cfg in cells
        for seed in cfg.seeds
    ]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1:
        return [_sweep_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_worker, jobs))


# -- reporting ------------------------------------------------------------


def _iter_run_dirs(base: Path):
    if not base.exists():
        return
    for child in sorted(base.iterdir()):
        summary = child / "summary.json"
        if summary.is_file():
            yield child


def _crossing_epoch(run_dir: Path) -> int | None:
    """First epoch whose validation accuracy reaches 1.0, from metrics.csv."""
    path = run_dir / "metrics.csv"
    if not path.exists():
        return None
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if float(row["val_acc"]) >= 1.0:
                return int(row["epoch"])
    return None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and not np.isfinite(value):
        return "NaN"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def report(root: str | Path | None = None, out_dir: str | Path | None = None) -> dict[str, Path]:
    """Scan completed runs and emit summary, grid, and curve CSV files."""
    base = results_root(root)
    out = Path(out_dir) if out_dir is not None else base
    runs = []
    for run_dir in _iter_run_dirs(base):
        summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
        summary["_dir"] = run_dir
        runs.append(summary)
    if not runs:
        raise EmptyResults(f"no completed runs under {base}")
    out.mkdir(parents=True, exist_ok=True)

    runs_path = out / "runs.csv"
    with runs_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "run_id", "backend", "ansatz", "scheme", "n_layers",
                "n_single_qubit_params", "seed", "status",
                "mean_train_loss", "mean_val_loss", "mean_train_acc",
                "mean_val_acc", "test_acc", "first_epoch_val_acc_1",
                "degenerate_evals", "wall_seconds",
            ]
        )
        for s in runs:
            cfg = s.get("config", {})
            writer.writerow(
                [
                    s["run_id"],
                    cfg.get("backend", ""),
                    cfg.get("ansatz", ""),
                    cfg.get("scheme", ""),
                    cfg.get("n_layers", ""),
                    cfg.get("n_single_qubit_params", ""),
                    s.get("seed", ""),
                    s.get("status", ""),
                    _fmt(s.get("mean_train_loss")),
                    _fmt(s.get("mean_val_loss")),
                    _fmt(s.get("mean_train_acc")),
                    _fmt(s.get("mean_val_acc")),
                    _fmt(s.get("test_acc")),
                    _fmt(_crossing_epoch(s["_dir"])),
                    s.get("degenerate_evals", ""),
                    _fmt(s.get("wall_seconds")),
                ]
            )

    # Accuracy grid: one row per (ansatz, layers), one column per rotation
    # count, mean test accuracy across seeds; NaN marks untrainable cells.
    grid_path = out / "grid.csv"
    circuit_runs = [
        s for s in runs if s.get("config", {}).get("backend") == "circuit"
    ]
    cells: dict[tuple[str, int, int], list[float]] = {}
    for s in circuit_runs:
        cfg = s.get("config", {})
        key = (cfg["ansatz"], int(cfg["n_layers"]), int(cfg["n_single_qubit_params"]))
        cells.setdefault(key, []).append(float(s.get("test_acc", float("nan"))))
    rotations = sorted({k[2] for k in cells}) if cells else []
    with grid_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ansatz", "n_layers"] + [f"rot{r}" for r in rotations])
        for ansatz in sorted({k[0] for k in cells}):
            for layers in sorted({k[1] for k in cells if k[0] == ansatz}):
                row = [ansatz, layers]
                for r in rotations:
                    values = cells.get((ansatz, layers, r))
                    if values is None:
                        row.append("")
                    else:
                        mean = float(np.mean(values))
                        row.append(_fmt(mean))
                writer.writerow(row)

    curves_path = out / "curves.csv"
    with curves_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "epoch", "metric", "value"])
        for s in runs:
            metrics = s["_dir"] / "metrics.csv"
            if not metrics.exists():
                continue
            with metrics.open(newline="", encoding="utf-8") as mf:
                for row in csv.DictReader(mf):
                    for metric in ("train_loss", "val_loss", "train_acc", "val_acc"):
                        writer.writerow(
                            [s["run_id"], row["epoch"], metric, row[metric]]
                        )

    return {"runs": runs_path, "grid": grid_path, "curves": curves_path}
