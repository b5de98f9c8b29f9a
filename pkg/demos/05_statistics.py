"""The statistical comparison procedure on synthetic per-fold accuracies.

Run:  python demos/05_statistics.py
"""

import numpy as np

from lesionscreen.reporting import comparison_table
from lesionscreen.stats import compare_augmentation, compare_score_sets


def main() -> None:
    rng = np.random.default_rng(42)
    folds = rng.normal(scale=0.02, size=10)  # shared fold difficulty

    scores = {
        "modelA": 0.93 + folds + rng.normal(scale=0.01, size=10),
        "modelB": 0.92 + folds + rng.normal(scale=0.01, size=10),
        "modelC": 0.76 + folds + rng.normal(scale=0.01, size=10),  # clearly worse
        "modelD": 0.91 + folds + rng.normal(scale=0.01, size=10),
    }
    report = compare_score_sets(list(scores), list(scores.values()))
    print(comparison_table(report))

    no_aug = 0.90 + folds + rng.normal(scale=0.01, size=10)
    with_aug = no_aug + rng.normal(loc=0.002, scale=0.01, size=10)
    decision = compare_augmentation(list(no_aug), list(with_aug))
    print(f"augmentation comparison branch: {decision.branch}")
    print(f"p = {decision.chosen.p_value:.4f} "
          f"({'significant' if decision.chosen.significant else 'not significant'})")


if __name__ == "__main__":
    main()
