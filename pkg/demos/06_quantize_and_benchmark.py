"""Half-precision quantization and the 50-run latency benchmark.

Run:  python demos/06_quantize_and_benchmark.py
"""

from pathlib import Path

from lesionscreen import HeadConfig, Task
from lesionscreen.artifacts import quantize_fp16, save_artifact
from lesionscreen.benchmark import benchmark_inference, save_benchmark_report
from lesionscreen.models import build_model

OUT = Path(__file__).parent / "output" / "06_artifacts"


def main() -> None:
    model = build_model(
        "mobilenetv3small",
        HeadConfig(n_layers=1, dense=(256,), dropout=(0.2,), learning_rate=1e-4),
        Task.MULTICLASS,
        seed=0,
    )
    fp32 = save_artifact(model, OUT / "fp32")
    fp16 = quantize_fp16(fp32.directory, OUT / "fp16")
    print(f"fp32 artifact: {fp32.byte_size / 1e6:.2f} MB")
    print(f"fp16 artifact: {fp16.byte_size / 1e6:.2f} MB "
          f"(ratio {fp16.meta['size_ratio_fp32_over_fp16']:.2f}x)")

    report = benchmark_inference(fp16.directory, n_runs=50, threads=4, warmup=5)
    save_benchmark_report(report, OUT / "benchmark_report.json")
    print(f"single-image latency over {report.n_runs} runs "
          f"({report.threads_effective} threads): "
          f"{report.mean * 1000:.1f} ms (±{report.std * 1000:.1f} ms)")
    print(f"raw timings + summary at {OUT / 'benchmark_report.json'}")


if __name__ == "__main__":
    main()
