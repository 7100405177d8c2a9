"""Domain types and the deterministic forward model.

The model describes a lifelong learner working through a curriculum of
tasks.  Each task holds a hidden *experience* level that grows when related
tasks are trained and decays with forgetting; observed performance is a
shifted sigmoid of experience.  All functions here are pure: inputs are
never mutated and equal inputs give bitwise-equal outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Difficulties below this bound would make the experience-to-performance
# division ill-conditioned; sampling, parsing, and projection all respect it.
D_MIN = 1e-3


def _as_float_vector(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class TaskSet:
    """Ordered collection of distinct task names."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 1:
            raise ValidationError("a task set needs at least one task")
        if any(not isinstance(t, str) or not t for t in self.names):
            raise ValidationError("task names must be non-empty strings")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("task names must be unique")

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown task {name!r}") from None


@dataclass(frozen=True)
class Curriculum:
    """Sequence of task indices trained at each step (0-based, length m)."""

    entries: tuple[int, ...]
    n_tasks: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))
        if self.n_tasks < 1:
            raise ValidationError("n_tasks must be at least 1")
        if len(self.entries) < 1:
            raise ValidationError("a curriculum needs at least one entry")
        for e in self.entries:
            if not 0 <= e < self.n_tasks:
                raise ValidationError(
                    f"curriculum entry {e} out of range for {self.n_tasks} tasks"
                )

    @property
    def m(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class TaskProperties:
    """Shared task parameters: transfer matrix and per-task difficulty.

    ``transfer[i, j]`` scales how training task i changes experience on
    task j; entries lie in [-1, 1].  ``difficulty[j]`` divides experience
    inside the performance sigmoid and must be at least D_MIN.
    """

    transfer: np.ndarray
    difficulty: np.ndarray

    def __post_init__(self):
        a = np.array(self.transfer, dtype=np.float64)
        d = np.array(self.difficulty, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"transfer must be square, got shape {a.shape}")
        if d.ndim != 1 or d.shape[0] != a.shape[0]:
            raise ValidationError(
                f"difficulty shape {d.shape} does not match transfer {a.shape}"
            )
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(d)):
            raise ValidationError("task properties must be finite")
        if np.any(a < -1.0) or np.any(a > 1.0):
            raise ValidationError("transfer entries must lie in [-1, 1]")
        if np.any(d < D_MIN):
            raise ValidationError(f"difficulty entries must be at least {D_MIN}")
        a.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "transfer", a)
        object.__setattr__(self, "difficulty", d)

    @property
    def n(self) -> int:
        return self.difficulty.shape[0]


@dataclass(frozen=True)
class AlgorithmProperties:
    """Per-algorithm latent parameters.

    transfer_efficiency (>= 0): experience gained per training step.
    experience_retention (in [0, 1]): multiplicative per-step memory decay;
        1 retains everything, 0 forgets everything.
    expertise_translation (>= 0): converts current performance on the
        trained task into extra experience.
    """

    name: str
    transfer_efficiency: float
    experience_retention: float
    expertise_translation: float

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("algorithm name must be a non-empty string")
        g = float(self.transfer_efficiency)
        h = float(self.experience_retention)
        lam = float(self.expertise_translation)
        if not (math.isfinite(g) and math.isfinite(h) and math.isfinite(lam)):
            raise ValidationError("algorithm properties must be finite")
        if g < 0.0:
            raise ValidationError("transfer_efficiency must be nonnegative")
        if lam < 0.0:
            raise ValidationError("expertise_translation must be nonnegative")
        if not 0.0 <= h <= 1.0:
            raise ValidationError("experience_retention must lie in [0, 1]")
        object.__setattr__(self, "transfer_efficiency", g)
        object.__setattr__(self, "experience_retention", h)
        object.__setattr__(self, "expertise_translation", lam)


@dataclass(frozen=True, eq=False)
class ScenarioParams:
    """Full latent parameter set: shared task properties plus one
    AlgorithmProperties per algorithm."""

    tasks: TaskProperties
    algorithms: tuple[AlgorithmProperties, ...]

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if len(self.algorithms) < 1:
            raise ValidationError("at least one algorithm is required")
        for a in self.algorithms:
            if not isinstance(a, AlgorithmProperties):
                raise ValidationError("algorithms must be AlgorithmProperties")

    @property
    def n(self) -> int:
        return self.tasks.n

    @property
    def p(self) -> int:
        return len(self.algorithms)

    def algorithm_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.algorithms)


@dataclass(frozen=True, eq=False)
class ExperienceState:
    """Accumulated experience per task at a given curriculum position."""

    experience: np.ndarray
    step: int = 0

    def __post_init__(self):
        e = np.array(self.experience, dtype=np.float64)
        if e.ndim != 1:
            raise ValidationError("experience must be a vector")
        if not np.all(np.isfinite(e)):
            raise ValidationError("experience must be finite")
        if self.step < 0:
            raise ValidationError("step must be nonnegative")
        if self.step == 0 and np.any(e != 0.0):
            raise ValidationError("experience must be exactly zero before any step")
        e.setflags(write=False)
        object.__setattr__(self, "experience", e)

    @classmethod
    def initial(cls, n: int) -> "ExperienceState":
        return cls(experience=np.zeros(n), step=0)


@dataclass(frozen=True, eq=False)
class PerformanceMatrix:
    """Per-algorithm n-tasks x m-steps performance values.

    ``mask[j, l]`` is True where the entry is observed/defined; masked-out
    entries are ignored by all loss computations.  Observed data may span
    any real range; model output always lies in (-1, 1).
    """

    algorithm: str
    values: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError(f"values must be 2-d, got shape {v.shape}")
        if self.mask is None:
            m = np.ones(v.shape, dtype=bool)
        else:
            m = np.array(self.mask, dtype=bool)
        if m.shape != v.shape:
            raise ValidationError(
                f"mask shape {m.shape} does not match values {v.shape}"
            )
        if not isinstance(self.algorithm, str) or not self.algorithm:
            raise ValidationError("algorithm name must be a non-empty string")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)

    @property
    def n_tasks(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]


def _scaled_sigmoid(x):
    # 2/(1+e^-x) - 1 == tanh(x/2); the tanh form cannot overflow.
    return np.tanh(0.5 * x)


def performance_map(experience: float, difficulty: float) -> float:
    """Map accumulated experience to performance in (-1, 1).

    Strictly increasing and odd in ``experience``; zero at zero.
    """
    e = float(experience)
    d = float(difficulty)
    if not (math.isfinite(e) and math.isfinite(d)):
        raise ValidationError("experience and difficulty must be finite")
    if d < D_MIN:
        raise ValidationError(f"difficulty must be at least {D_MIN}")
    return float(_scaled_sigmoid(e / d))


def experience_step(
    state: ExperienceState,
    trained_task: int,
    prev_performance_of_trained: float,
    tasks: TaskProperties,
    algo: AlgorithmProperties,
) -> ExperienceState:
    """Advance the experience recurrence by one curriculum step.

    Every task's experience decays by the retention factor and gains
    transfer-weighted experience from the trained task:

        new[j] = old[j] * h + transfer[i, j] * (gamma + p_prev * lambda)

    where i is ``trained_task`` and p_prev the trained task's performance
    before this step.  The input state is not modified.
    """
    n = tasks.n
    if state.experience.shape[0] != n:
        raise ValidationError(
            f"state covers {state.experience.shape[0]} tasks, expected {n}"
        )
    i = int(trained_task)
    if not 0 <= i < n:
        raise ValidationError(f"trained task index {i} out of range for {n} tasks")
    p_prev = float(prev_performance_of_trained)
    if not math.isfinite(p_prev) or abs(p_prev) > 1.0:
        raise ValidationError("previous performance must be finite and within [-1, 1]")
    gain = algo.transfer_efficiency + p_prev * algo.expertise_translation
    new = state.experience * algo.experience_retention + tasks.transfer[i] * gain
    return ExperienceState(experience=new, step=state.step + 1)


def _forward_curves(
    transfer: np.ndarray,
    difficulty: np.ndarray,
    gamma: np.ndarray,
    retention: np.ndarray,
    translation: np.ndarray,
    entries,
    want_states: bool = False,
):
    """Vectorized rollout over all algorithms at once.

    Returns predictions of shape (p, n, m); with ``want_states`` also the
    experience trajectory of shape (m+1, p, n) (states[0] is all zeros,
    states[l+1] is experience after curriculum step l).  Used by both the
    public simulate functions and the estimator's adjoint pass.
    """
    p = gamma.shape[0]
    n = difficulty.shape[0]
    m = len(entries)
    exp_now = np.zeros((p, n))
    pred = np.empty((p, n, m))
    states = np.empty((m + 1, p, n)) if want_states else None
    if want_states:
        states[0] = 0.0
    for l, i in enumerate(entries):
        p_prev = _scaled_sigmoid(exp_now[:, i] / difficulty[i])
        gain = gamma + p_prev * translation
        exp_now = exp_now * retention[:, None] + gain[:, None] * transfer[i][None, :]
        if want_states:
            states[l + 1] = exp_now
        pred[:, :, l] = _scaled_sigmoid(exp_now / difficulty[None, :])
    if want_states:
        return pred, states
    return pred


def _param_arrays(params: ScenarioParams):
    gamma = np.array([a.transfer_efficiency for a in params.algorithms])
    retention = np.array([a.experience_retention for a in params.algorithms])
    translation = np.array([a.expertise_translation for a in params.algorithms])
    return params.tasks.transfer, params.tasks.difficulty, gamma, retention, translation


def simulate(
    params: ScenarioParams, curriculum: Curriculum, algo_index: int
) -> PerformanceMatrix:
    """Roll the forward model out for one algorithm.

    Column l of the result holds every task's performance after curriculum
    steps 0..l have been applied.  Deterministic; full mask.
    """
    if not 0 <= algo_index < params.p:
        raise ValidationError(
            f"algorithm index {algo_index} out of range for {params.p} algorithms"
        )
    if curriculum.n_tasks != params.n:
        raise ValidationError(
            f"curriculum is over {curriculum.n_tasks} tasks, params have {params.n}"
        )
    transfer, difficulty, gamma, retention, translation = _param_arrays(params)
    sl = slice(algo_index, algo_index + 1)
    pred = _forward_curves(
        transfer, difficulty, gamma[sl], retention[sl], translation[sl],
        curriculum.entries,
    )
    return PerformanceMatrix(
        algorithm=params.algorithms[algo_index].name, values=pred[0]
    )


def simulate_all(params: ScenarioParams, curriculum: Curriculum) -> list[PerformanceMatrix]:
    """Forward rollout for every algorithm, order preserved."""
    if curriculum.n_tasks != params.n:
        raise ValidationError(
            f"curriculum is over {curriculum.n_tasks} tasks, params have {params.n}"
        )
    transfer, difficulty, gamma, retention, translation = _param_arrays(params)
    pred = _forward_curves(
        transfer, difficulty, gamma, retention, translation, curriculum.entries
    )
    return [
        PerformanceMatrix(algorithm=a.name, values=pred[k])
        for k, a in enumerate(params.algorithms)
    ]
