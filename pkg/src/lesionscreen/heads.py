"""Classification-head configuration shared by the model builder and the
hyperparameter search. Kept free of framework imports."""

from __future__ import annotations

from dataclasses import dataclass

MAX_HEAD_LAYERS = 3
DENSE_CHOICES = (256, 512, 1024, 2048, 4096)
LEARNING_RATE_RANGE = (1e-6, 1e-3)
DROPOUT_RANGE = (0.0, 0.5)


@dataclass(frozen=True)
class HeadConfig:
    """1-3 dense+dropout layers trained on top of the frozen backbone.

    ``dense`` and ``dropout`` have exactly ``n_layers`` entries. When logged,
    inactive layer slots are written as 0.
    """

    n_layers: int
    dense: tuple[int, ...]
    dropout: tuple[float, ...]
    learning_rate: float

    def __post_init__(self):
        if not 1 <= self.n_layers <= MAX_HEAD_LAYERS:
            raise ValueError(f"n_layers must be in [1, {MAX_HEAD_LAYERS}], got {self.n_layers}")
        if len(self.dense) != self.n_layers or len(self.dropout) != self.n_layers:
            raise ValueError("dense/dropout must have exactly n_layers entries")
        if any(d <= 0 for d in self.dense):
            raise ValueError("dense units must be positive")
        if any(not 0.0 <= p <= 0.5 for p in self.dropout):
            raise ValueError("dropout rates must be in [0, 0.5]")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")

    def flat(self) -> dict[str, float]:
        """Fixed-width view with zeros in unused layer slots."""
        out: dict[str, float] = {
            "learning_rate": float(self.learning_rate),
            "n_layers": int(self.n_layers),
        }
        for i in range(MAX_HEAD_LAYERS):
            active = i < self.n_layers
            out[f"dense_{i + 1}"] = int(self.dense[i]) if active else 0
            out[f"dropout_{i + 1}"] = float(self.dropout[i]) if active else 0.0
        return out


def head_param_count(feature_dim: int, head: HeadConfig, n_classes: int) -> int:
    """Analytic count of trainable parameters in the head (weights + biases)."""
    total = 0
    prev = feature_dim
    for units in head.dense:
        total += (prev + 1) * units
        prev = units
    total += (prev + 1) * n_classes
    return total


def head_to_dict(head: HeadConfig) -> dict:
    return {
        "n_layers": head.n_layers,
        "dense": list(head.dense),
        "dropout": list(head.dropout),
        "learning_rate": head.learning_rate,
    }


def head_from_dict(data: dict) -> HeadConfig:
    return HeadConfig(
        n_layers=int(data["n_layers"]),
        dense=tuple(int(d) for d in data["dense"]),
        dropout=tuple(float(p) for p in data["dropout"]),
        learning_rate=float(data["learning_rate"]),
    )
