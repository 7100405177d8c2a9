"""Synthetic scenario sampling for benchmarks and recovery experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import (
    D_MIN,
    AlgorithmProperties,
    Curriculum,
    PerformanceMatrix,
    ScenarioParams,
    TaskProperties,
    simulate_all,
)

# Substream tags, so parameters, curriculum, and noise come from
# independent generators even though they share one scenario seed.
_PARAMS_STREAM = 0
_CURRICULUM_STREAM = 1
_NOISE_STREAM = 2


@dataclass(frozen=True)
class ScenarioSpec:
    """Size, seed, and noise level of a synthetic scenario."""

    n_tasks: int = 5
    n_algos: int = 3
    curriculum_len: int = 9
    seed: int = 0
    noise_std: float = 0.0

    def __post_init__(self):
        if min(self.n_tasks, self.n_algos, self.curriculum_len) < 1:
            raise ValidationError("scenario dimensions must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        if not self.noise_std >= 0:
            raise ValidationError("noise_std must be nonnegative")


def _stream(spec: ScenarioSpec, tag: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, tag])


def sample_params(spec: ScenarioSpec) -> ScenarioParams:
    """Draw ground-truth parameters: transfer entries uniform on [-1, 1],
    difficulty uniform on [D_MIN, 1], algorithm properties uniform on [0, 1].
    Algorithms are named algo1, algo2, ..."""
    rng = _stream(spec, _PARAMS_STREAM)
    transfer = rng.uniform(-1.0, 1.0, size=(spec.n_tasks, spec.n_tasks))
    difficulty = rng.uniform(D_MIN, 1.0, size=spec.n_tasks)
    gamma = rng.uniform(0.0, 1.0, size=spec.n_algos)
    retention = rng.uniform(0.0, 1.0, size=spec.n_algos)
    translation = rng.uniform(0.0, 1.0, size=spec.n_algos)
    return ScenarioParams(
        tasks=TaskProperties(transfer=transfer, difficulty=difficulty),
        algorithms=tuple(
            AlgorithmProperties(
                name=f"algo{a + 1}",
                transfer_efficiency=float(gamma[a]),
                experience_retention=float(retention[a]),
                expertise_translation=float(translation[a]),
            )
            for a in range(spec.n_algos)
        ),
    )


def sample_curriculum(spec: ScenarioSpec) -> Curriculum:
    """Draw a uniform random task sequence of length curriculum_len."""
    rng = _stream(spec, _CURRICULUM_STREAM)
    entries = rng.integers(0, spec.n_tasks, size=spec.curriculum_len)
    return Curriculum(entries=entries, n_tasks=spec.n_tasks)


def generate(
    spec: ScenarioSpec,
) -> tuple[ScenarioParams, Curriculum, list[PerformanceMatrix]]:
    """Sample a full scenario and simulate its curves.

    With noise_std > 0, adds independent Gaussian noise to every curve
    entry and clips back to [-1, 1] so the values stay in the range the
    performance map can produce.
    """
    params = sample_params(spec)
    curriculum = sample_curriculum(spec)
    clean = simulate_all(params, curriculum)
    if spec.noise_std == 0:
        return params, curriculum, clean
    rng = _stream(spec, _NOISE_STREAM)
    noisy = [
        PerformanceMatrix(
            algorithm=mat.algorithm,
            values=np.clip(
                mat.values + rng.normal(0.0, spec.noise_std, size=mat.values.shape),
                -1.0,
                1.0,
            ),
        )
        for mat in clean
    ]
    return params, curriculum, noisy
