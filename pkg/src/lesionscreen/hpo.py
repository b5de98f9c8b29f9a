"""Hyperband search over the joint head + augmentation space.

Schedule construction follows the original successive-halving bracket
formulas: with downsampling rate eta and maximum per-trial resource R,
s_max = floor(log_eta R); bracket s (s_max..0) starts with
n = ceil((s_max+1)/(s+1) * eta^s) configurations at r = R * eta^-s resource,
and rung i keeps floor(n * eta^-i) configurations at r * eta^i resource.

Promoted configurations are re-trained from scratch at the larger budget
(no checkpoint reuse), so total consumed resource is sum(n_i * r_i) over all
rungs. Every rung evaluation appends one TrialRecord to the log; failures
score 0 and are flagged rather than aborting the bracket.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .augment import AugmentConfig
from .heads import DENSE_CHOICES, DROPOUT_RANGE, HeadConfig, LEARNING_RATE_RANGE, MAX_HEAD_LAYERS


class HpoError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    """Sampling domains. Augmentation dimensions exist only when
    ``augmentation`` is true; inactive head slots are logged as 0."""

    augmentation: bool = True
    learning_rate_range: tuple[float, float] = LEARNING_RATE_RANGE
    dense_choices: tuple[int, ...] = DENSE_CHOICES
    n_layers_choices: tuple[int, ...] = (1, 2, 3)
    dropout_range: tuple[float, float] = DROPOUT_RANGE
    factor_range: tuple[float, float] = (0.0, 0.5)
    flip_choices: tuple[int, ...] = (0, 1, 2)


@dataclass(frozen=True)
class TrialConfig:
    head: HeadConfig
    augment: AugmentConfig | None = None

    def flat(self) -> dict[str, float]:
        out = self.head.flat()
        if self.augment is not None:
            out.update(self.augment.flat())
        return out


def sample_config(space: SearchSpace, rng: np.random.Generator) -> TrialConfig:
    """Uniform draw per dimension; the learning rate is log-uniform."""
    lo, hi = space.learning_rate_range
    lr = float(10 ** rng.uniform(math.log10(lo), math.log10(hi)))
    n_layers = int(rng.choice(space.n_layers_choices))
    dense = tuple(int(rng.choice(space.dense_choices)) for _ in range(MAX_HEAD_LAYERS))
    dropout = tuple(float(rng.uniform(*space.dropout_range)) for _ in range(MAX_HEAD_LAYERS))
    head = HeadConfig(
        n_layers=n_layers,
        dense=dense[:n_layers],
        dropout=dropout[:n_layers],
        learning_rate=lr,
    )
    aug = None
    if space.augmentation:
        aug = AugmentConfig(
            rotation=float(rng.uniform(*space.factor_range)),
            zoom=float(rng.uniform(*space.factor_range)),
            contrast=float(rng.uniform(*space.factor_range)),
            brightness=float(rng.uniform(*space.factor_range)),
            tr_width=float(rng.uniform(*space.factor_range)),
            tr_height=float(rng.uniform(*space.factor_range)),
            flip_type=int(rng.choice(space.flip_choices)),
        )
    return TrialConfig(head=head, augment=aug)


@dataclass(frozen=True)
class Rung:
    n_configs: int
    resource: int


@dataclass(frozen=True)
class HyperbandConfig:
    max_resource: int = 27
    eta: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.max_resource < 1:
            raise HpoError(f"max resource must be >= 1, got {self.max_resource}")
        if self.eta < 2:
            raise HpoError(f"eta must be >= 2, got {self.eta}")


def hyperband_schedule(max_resource: int, eta: int) -> tuple[tuple[Rung, ...], ...]:
    """Bracket/rung table of (configurations, per-trial resource)."""
    HyperbandConfig(max_resource, eta)
    s_max = int(math.floor(math.log(max_resource) / math.log(eta) + 1e-12))
    brackets = []
    for s in range(s_max, -1, -1):
        n = math.ceil((s_max + 1) / (s + 1) * eta**s)
        r = max_resource * eta ** (-s)
        rungs = []
        for i in range(s + 1):
            n_i = math.floor(n * eta ** (-i))
            r_i = min(int(round(r * eta**i)), max_resource)
            if n_i < 1:
                break
            rungs.append(Rung(n_configs=n_i, resource=max(r_i, 1)))
        brackets.append(tuple(rungs))
    return tuple(brackets)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    bracket: int
    rung: int
    resource: int
    score: float
    config: TrialConfig
    failed: bool = False

    def as_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "bracket": self.bracket,
            "rung": self.rung,
            "resource": self.resource,
            "score": self.score,
            "failed": self.failed,
            **self.config.flat(),
        }


@dataclass(frozen=True)
class HyperbandResult:
    best_config: TrialConfig
    best_score: float
    best_trial_id: int
    records: tuple[TrialRecord, ...]
    total_resource: int

    @property
    def any_succeeded(self) -> bool:
        return any(not r.failed for r in self.records)


Objective = Callable[[TrialConfig, int], float]


def run_hyperband(
    space: SearchSpace,
    objective: Objective,
    hb: HyperbandConfig,
    rng: np.random.Generator | None = None,
) -> HyperbandResult:
    """Execute the full schedule, promoting the top floor(n/eta) configs per
    rung by score (ties broken toward the lower trial id). Returns the best
    configuration observed anywhere plus the complete trial log."""
    if rng is None:
        rng = np.random.default_rng(hb.seed)
    schedule = hyperband_schedule(hb.max_resource, hb.eta)

    records: list[TrialRecord] = []
    next_trial_id = 0
    total_resource = 0
    best: tuple[float, int, TrialConfig] | None = None  # (-score, trial_id) ordering

    for bracket_idx, rungs in enumerate(schedule):
        candidates: list[tuple[int, TrialConfig]] = []
        for _ in range(rungs[0].n_configs):
            candidates.append((next_trial_id, sample_config(space, rng)))
            next_trial_id += 1

        for rung_idx, rung in enumerate(rungs):
            candidates = candidates[: rung.n_configs]
            scored: list[tuple[float, int, TrialConfig]] = []
            for trial_id, config in candidates:
                failed = False
                try:
                    score = float(objective(config, rung.resource))
                    if not math.isfinite(score):
                        raise ValueError(f"objective returned non-finite score {score}")
                except Exception:
                    score, failed = 0.0, True
                total_resource += rung.resource
                records.append(
                    TrialRecord(trial_id, bracket_idx, rung_idx, rung.resource, score, config, failed)
                )
                scored.append((score, trial_id, config))
                if not failed and (best is None or (-score, trial_id) < (-best[0], best[1])):
                    best = (score, trial_id, config)
            scored.sort(key=lambda item: (-item[0], item[1]))
            candidates = [(tid, cfg) for _, tid, cfg in scored]

    if best is None:
        # Every single trial failed; surface the first failure context.
        raise HpoError(f"all {len(records)} trials failed; no usable configuration")
    return HyperbandResult(
        best_config=best[2],
        best_score=best[0],
        best_trial_id=best[1],
        records=tuple(records),
        total_resource=total_resource,
    )


# --------------------------------------------------------------------------
# Trial log serialization (one JSON record per line)
# --------------------------------------------------------------------------

def save_trial_log(records: Sequence[TrialRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.as_dict(), sort_keys=True) + "\n")


def load_trial_log(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
