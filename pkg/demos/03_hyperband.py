"""Hyperband schedules and a toy search over the real hyperparameter space.

Run:  python demos/03_hyperband.py
"""

import math
from pathlib import Path

from lesionscreen import HyperbandConfig, SearchSpace, hyperband_schedule, run_hyperband
from lesionscreen.hpo import save_trial_log
from lesionscreen.reporting import save_exploration_plot_data

OUT = Path(__file__).parent / "output"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for r_max, eta in ((9, 3), (27, 3), (81, 3)):
        print(f"R={r_max}, eta={eta}:")
        for idx, bracket in enumerate(hyperband_schedule(r_max, eta)):
            rungs = " -> ".join(f"{r.n_configs}x{r.resource}ep" for r in bracket)
            print(f"  bracket {idx}: {rungs}")

    # toy objective: best accuracy at lr ~ 1e-4, two hidden layers
    def objective(config, resource):
        lr_term = math.exp(-((math.log10(config.head.learning_rate) + 4) ** 2))
        depth_term = 1.0 - 0.1 * abs(config.head.n_layers - 2)
        return 0.6 * lr_term + 0.3 * depth_term - 0.2 / resource

    result = run_hyperband(
        SearchSpace(augmentation=True), objective, HyperbandConfig(27, 3, seed=1)
    )
    best = result.best_config
    print(f"\nbest trial #{result.best_trial_id}: score {result.best_score:.4f}, "
          f"lr {best.head.learning_rate:.2e}, layers {best.head.n_layers}")
    print(f"trials logged: {len(result.records)}, epochs consumed: {result.total_resource}")

    log_path = OUT / "03_trials.jsonl"
    save_trial_log(result.records, log_path)
    plot_path = OUT / "03_exploration.json"
    save_exploration_plot_data([r.as_dict() for r in result.records], plot_path)
    print(f"trial log at {log_path}, per-parameter exploration data at {plot_path}")


if __name__ == "__main__":
    main()
