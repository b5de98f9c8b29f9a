"""Single-image inference latency benchmark for deployable artifacts.

Protocol: load the artifact, generate one synthetic input matching the model
input spec, run ``warmup`` untimed inferences, then time exactly ``n_runs``
single-image inferences with a monotonic clock. Mean and sample standard
deviation are reported together with every raw timing so the summary is
independently recomputable. A host-wide file lock keeps concurrent
benchmarks from interfering with each other's timings.

The intra-op thread count is process-global in TensorFlow and can only be
set before the runtime initializes; the report records both the requested
and the effective value (the ``bench`` CLI subcommand applies the setting
first thing in a fresh process).
"""

from __future__ import annotations

import json
import platform
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from filelock import FileLock

DEFAULT_RUNS = 50
DEFAULT_WARMUP = 5
DEFAULT_THREADS = 4


@dataclass(frozen=True)
class BenchmarkReport:
    model_id: str
    backbone: str
    task: str
    precision: str
    n_runs: int
    warmup_runs: int
    threads_requested: int
    threads_effective: int
    input_spec: dict
    timings: tuple[float, ...]
    mean: float
    std: float
    host: dict
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "backbone": self.backbone,
            "task": self.task,
            "precision": self.precision,
            "n_runs": self.n_runs,
            "warmup_runs": self.warmup_runs,
            "threads_requested": self.threads_requested,
            "threads_effective": self.threads_effective,
            "input_spec": self.input_spec,
            "timings": list(self.timings),
            "mean": self.mean,
            "std": self.std,
            "host": self.host,
            "degenerate": list(self.degenerate),
        }


def set_inference_threads(threads: int) -> bool:
    """Try to pin TF's intra-op thread pool; returns whether it took effect."""
    import tensorflow as tf

    try:
        tf.config.threading.set_intra_op_parallelism_threads(threads)
        return tf.config.threading.get_intra_op_parallelism_threads() == threads
    except RuntimeError:
        return False


def benchmark_inference(
    artifact_dir: str | Path,
    n_runs: int = DEFAULT_RUNS,
    threads: int = DEFAULT_THREADS,
    warmup: int = DEFAULT_WARMUP,
    seed: int = 0,
    lock_path: str | Path | None = None,
) -> BenchmarkReport:
    import tensorflow as tf
    from .artifacts import artifact_info, load_artifact

    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    applied = set_inference_threads(threads)
    effective = tf.config.threading.get_intra_op_parallelism_threads()

    info = artifact_info(artifact_dir)
    lock_file = Path(lock_path) if lock_path else Path(tempfile.gettempdir()) / "lesionscreen-bench.lock"
    with FileLock(str(lock_file)):
        model = load_artifact(artifact_dir)
        size = model.input_size
        rng = np.random.default_rng(seed)
        x = rng.random((1, size, size, 3), dtype=np.float32)

        for _ in range(warmup):
            model.keras_model(x, training=False)

        timings = []
        for _ in range(n_runs):
            start = time.perf_counter()
            model.keras_model(x, training=False)
            timings.append(time.perf_counter() - start)

    arr = np.asarray(timings, dtype=np.float64)
    degenerate: list[str] = []
    if n_runs == 1:
        std = 0.0
        degenerate.append("std")
    else:
        std = float(arr.std(ddof=1))
    if not applied:
        degenerate.append("threads_not_applied")

    return BenchmarkReport(
        model_id=info.model_id,
        backbone=info.meta["backbone"],
        task=info.meta["task"],
        precision=info.precision,
        n_runs=n_runs,
        warmup_runs=warmup,
        threads_requested=threads,
        threads_effective=effective,
        input_spec={"shape": [1, size, size, 3], "dtype": "float32", "seed": seed,
                    "kind": "synthetic-uniform"},
        timings=tuple(float(t) for t in timings),
        mean=float(arr.mean()),
        std=std,
        host={
            "platform": platform.platform(),
            "machine": platform.machine(),
            "python": platform.python_version(),
        },
        degenerate=tuple(degenerate),
    )


def save_benchmark_report(report: BenchmarkReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
