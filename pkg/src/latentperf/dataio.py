"""File formats and raw-log preparation.

Three small formats, all human-auditable:

* curves CSV: long-form rows ``algorithm,step,task,performance``; a missing
  row means that cell is unobserved (mask false).
* curriculum JSON: ``{"tasks": [...], "curriculum": [...]}`` with task
  names in training order.
* params JSON: ``{"tasks": ..., "transfer_matrix": ..., "difficulty": ...,
  "algorithms": [{"name", "gamma", "h", "lambda"}, ...]}``.

Raw training logs arrive as ``algorithm,global_step,task,metric`` CSV plus
a boundaries JSON marking where each curriculum phase starts; they are
downsampled to one column per phase before fitting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import NormalizationError, ParseError, SchemaError, ValidationError
from .model import (
    D_MIN,
    AlgorithmProperties,
    Curriculum,
    PerformanceMatrix,
    ScenarioParams,
    TaskProperties,
    TaskSet,
)

CURVES_HEADER = ("algorithm", "step", "task", "performance")
RAW_HEADER = ("algorithm", "global_step", "task", "metric")


def _fmt(v: float) -> str:
    # repr of a Python float is the shortest string that parses back to
    # the same double, so round-trips are exact.
    return repr(float(v))


# ---------------------------------------------------------------------------
# curves CSV


def write_curves(path, taskset: TaskSet, matrices) -> None:
    """Write performance matrices as long-form CSV (masked cells omitted)."""
    for mat in matrices:
        if mat.n_tasks != taskset.n:
            raise ValidationError(
                f"matrix for {mat.algorithm!r} covers {mat.n_tasks} tasks, "
                f"task set has {taskset.n}"
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVES_HEADER)
        for mat in matrices:
            for l in range(mat.n_steps):
                for j in range(taskset.n):
                    if mat.mask[j, l]:
                        w.writerow(
                            (mat.algorithm, l, taskset.names[j], _fmt(mat.values[j, l]))
                        )


def parse_curves(path, taskset: TaskSet | None = None):
    """Read a curves CSV.

    Returns (TaskSet, list of PerformanceMatrix).  Task and algorithm order
    follow first appearance in the file unless a task set is supplied, in
    which case all task names must belong to it.
    """
    cells: dict[str, dict[tuple[int, str], float]] = {}
    algo_order: list[str] = []
    task_order: list[str] = []
    known = set(taskset.names) if taskset is not None else None
    seen_tasks = set()
    max_step = -1
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty curves file", line=1)
        if tuple(header) != CURVES_HEADER:
            raise ParseError(
                f"expected header {','.join(CURVES_HEADER)}, got {','.join(header)}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
            algo, step_s, task, perf_s = row
            if not algo:
                raise ParseError("empty algorithm name", line=lineno)
            try:
                step = int(step_s)
            except ValueError:
                raise ParseError(f"step {step_s!r} is not an integer", line=lineno)
            if step < 0:
                raise ParseError(f"step {step} is negative", line=lineno)
            try:
                perf = float(perf_s)
            except ValueError:
                raise ParseError(f"performance {perf_s!r} is not a number", line=lineno)
            if not np.isfinite(perf):
                raise ParseError(f"performance {perf_s!r} is not finite", line=lineno)
            if known is not None and task not in known:
                raise ParseError(f"unknown task {task!r}", line=lineno)
            if algo not in cells:
                cells[algo] = {}
                algo_order.append(algo)
            if task not in seen_tasks:
                seen_tasks.add(task)
                task_order.append(task)
            key = (step, task)
            if key in cells[algo]:
                raise ParseError(
                    f"duplicate cell for ({algo}, step {step}, {task})", line=lineno
                )
            cells[algo][key] = perf
            max_step = max(max_step, step)
    if not algo_order:
        raise ParseError("curves file has no data rows", line=1)
    out_tasks = taskset if taskset is not None else TaskSet(names=tuple(task_order))
    m = max_step + 1
    matrices = []
    for algo in algo_order:
        values = np.zeros((out_tasks.n, m))
        mask = np.zeros((out_tasks.n, m), dtype=bool)
        for (step, task), perf in cells[algo].items():
            j = out_tasks.index(task)
            values[j, step] = perf
            mask[j, step] = True
        matrices.append(PerformanceMatrix(algorithm=algo, values=values, mask=mask))
    return out_tasks, matrices


# ---------------------------------------------------------------------------
# JSON helpers


def _load_json_object(path, what: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {what}: {exc.msg}", line=exc.lineno)
    if not isinstance(doc, dict):
        raise SchemaError(f"{what} must be a JSON object")
    return doc


def _check_keys(doc: dict, required, what: str) -> None:
    for key in required:
        if key not in doc:
            raise SchemaError(f"missing in {what}", field=key)
    for key in doc:
        if key not in required:
            raise SchemaError(f"unknown in {what}", field=key)


def _string_list(value, field: str) -> list[str]:
    if not isinstance(value, list) or not all(
        isinstance(s, str) and s for s in value
    ):
        raise SchemaError("must be a list of non-empty strings", field=field)
    return value


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError("must be a number", field=field)
    return float(value)


# ---------------------------------------------------------------------------
# curriculum JSON


def write_curriculum(path, taskset: TaskSet, curriculum: Curriculum) -> None:
    if curriculum.n_tasks != taskset.n:
        raise ValidationError(
            f"curriculum is over {curriculum.n_tasks} tasks, task set has {taskset.n}"
        )
    doc = {
        "tasks": list(taskset.names),
        "curriculum": [taskset.names[i] for i in curriculum.entries],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def parse_curriculum(path) -> tuple[TaskSet, Curriculum]:
    doc = _load_json_object(path, "curriculum file")
    _check_keys(doc, ("tasks", "curriculum"), "curriculum file")
    taskset = TaskSet(names=tuple(_string_list(doc["tasks"], "tasks")))
    names = _string_list(doc["curriculum"], "curriculum")
    entries = tuple(taskset.index(name) for name in names)
    return taskset, Curriculum(entries=entries, n_tasks=taskset.n)


def load_dataset(curves_path, curriculum_path):
    """Read a curves CSV together with its curriculum JSON.

    Returns (TaskSet, Curriculum, list of PerformanceMatrix) with all
    shapes cross-validated: tasks must match and every matrix must span
    exactly the curriculum's length.
    """
    taskset, curriculum = parse_curriculum(curriculum_path)
    _, matrices = parse_curves(curves_path, taskset=taskset)
    for k, mat in enumerate(matrices):
        if mat.n_steps > curriculum.m:
            raise ValidationError(
                f"curves for {mat.algorithm!r} span {mat.n_steps} steps, "
                f"curriculum has {curriculum.m}"
            )
        if mat.n_steps < curriculum.m:
            # pad with unobserved columns so shapes line up
            pad = curriculum.m - mat.n_steps
            values = np.hstack([mat.values, np.zeros((mat.n_tasks, pad))])
            mask = np.hstack([mat.mask, np.zeros((mat.n_tasks, pad), dtype=bool)])
            matrices[k] = PerformanceMatrix(
                algorithm=mat.algorithm, values=values, mask=mask
            )
    return taskset, curriculum, matrices


# ---------------------------------------------------------------------------
# params JSON


def write_params(path, taskset: TaskSet, params: ScenarioParams) -> None:
    if params.n != taskset.n:
        raise ValidationError(
            f"params cover {params.n} tasks, task set has {taskset.n}"
        )
    doc = {
        "tasks": list(taskset.names),
        "transfer_matrix": [
            [float(v) for v in row] for row in params.tasks.transfer
        ],
        "difficulty": [float(v) for v in params.tasks.difficulty],
        "algorithms": [
            {
                "name": a.name,
                "gamma": a.transfer_efficiency,
                "h": a.experience_retention,
                "lambda": a.expertise_translation,
            }
            for a in params.algorithms
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def parse_params(path) -> tuple[TaskSet, ScenarioParams]:
    """Read a params JSON file.

    Difficulties below the representable minimum (e.g. a 0.0 left by a
    tool that rounds to two decimals) are lifted to D_MIN rather than
    rejected.
    """
    doc = _load_json_object(path, "params file")
    _check_keys(
        doc, ("tasks", "transfer_matrix", "difficulty", "algorithms"), "params file"
    )
    taskset = TaskSet(names=tuple(_string_list(doc["tasks"], "tasks")))
    n = taskset.n
    tm = doc["transfer_matrix"]
    if not isinstance(tm, list) or len(tm) != n or not all(
        isinstance(row, list) and len(row) == n for row in tm
    ):
        raise SchemaError(f"must be a {n}x{n} array", field="transfer_matrix")
    transfer = np.array(
        [[_number(v, "transfer_matrix") for v in row] for row in tm]
    )
    diff = doc["difficulty"]
    if not isinstance(diff, list) or len(diff) != n:
        raise SchemaError(f"must have {n} entries", field="difficulty")
    difficulty = np.array([_number(v, "difficulty") for v in diff])
    if np.any(difficulty < 0):
        raise SchemaError("entries must be nonnegative", field="difficulty")
    difficulty = np.maximum(difficulty, D_MIN)
    algos_doc = doc["algorithms"]
    if not isinstance(algos_doc, list) or not algos_doc:
        raise SchemaError("must be a non-empty list", field="algorithms")
    algos = []
    for entry in algos_doc:
        if not isinstance(entry, dict):
            raise SchemaError("each entry must be an object", field="algorithms")
        _check_keys(entry, ("name", "gamma", "h", "lambda"), "algorithm entry")
        if not isinstance(entry["name"], str) or not entry["name"]:
            raise SchemaError("must be a non-empty string", field="name")
        algos.append(
            AlgorithmProperties(
                name=entry["name"],
                transfer_efficiency=_number(entry["gamma"], "gamma"),
                experience_retention=_number(entry["h"], "h"),
                expertise_translation=_number(entry["lambda"], "lambda"),
            )
        )
    params = ScenarioParams(
        tasks=TaskProperties(transfer=transfer, difficulty=difficulty),
        algorithms=tuple(algos),
    )
    return taskset, params


# ---------------------------------------------------------------------------
# raw logs


@dataclass(frozen=True)
class RawLog:
    """One algorithm's raw training log.

    ``records`` holds (global_step, task, metric) tuples sorted by step;
    ``boundaries`` holds (global_step, trained_task) pairs marking where
    each curriculum phase starts, strictly increasing.
    """

    algorithm: str
    records: tuple[tuple[int, str, float], ...]
    boundaries: tuple[tuple[int, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        steps = [r[0] for r in self.records]
        if steps != sorted(steps):
            raise ValidationError("records must be sorted by global_step")
        bsteps = [b[0] for b in self.boundaries]
        if len(self.boundaries) < 1:
            raise ValidationError("at least one boundary is required")
        if any(b >= a for b, a in zip(bsteps, bsteps[1:])):
            raise ValidationError("boundaries must be strictly increasing")


def parse_boundaries(path) -> tuple[TaskSet, tuple[tuple[int, str], ...]]:
    """Read a boundaries JSON: {"tasks": [...], "boundaries": [[step, task], ...]}."""
    doc = _load_json_object(path, "boundaries file")
    _check_keys(doc, ("tasks", "boundaries"), "boundaries file")
    taskset = TaskSet(names=tuple(_string_list(doc["tasks"], "tasks")))
    bl = doc["boundaries"]
    if not isinstance(bl, list) or not bl:
        raise SchemaError("must be a non-empty list", field="boundaries")
    out = []
    for pair in bl:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or isinstance(pair[0], bool)
            or not isinstance(pair[0], int)
            or not isinstance(pair[1], str)
        ):
            raise SchemaError(
                "each entry must be [global_step, task_name]", field="boundaries"
            )
        taskset.index(pair[1])  # validates the name
        out.append((pair[0], pair[1]))
    steps = [s for s, _ in out]
    if any(b >= a for b, a in zip(steps, steps[1:])):
        raise SchemaError("steps must be strictly increasing", field="boundaries")
    return taskset, tuple(out)


def parse_raw_log(metrics_path, boundaries_path):
    """Read a raw metrics CSV plus its boundaries JSON.

    Returns (TaskSet, Curriculum, list of RawLog), one log per algorithm in
    first-appearance order.  Records are stably sorted by global_step, so
    later rows win ties at the same step.
    """
    taskset, boundaries = parse_boundaries(boundaries_path)
    curriculum = Curriculum(
        entries=tuple(taskset.index(t) for _, t in boundaries),
        n_tasks=taskset.n,
    )
    known = set(taskset.names)
    per_algo: dict[str, list[tuple[int, str, float]]] = {}
    order: list[str] = []
    with open(metrics_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty raw log", line=1)
        if tuple(header) != RAW_HEADER:
            raise ParseError(
                f"expected header {','.join(RAW_HEADER)}, got {','.join(header)}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
            algo, step_s, task, metric_s = row
            if not algo:
                raise ParseError("empty algorithm name", line=lineno)
            try:
                step = int(step_s)
            except ValueError:
                raise ParseError(f"global_step {step_s!r} is not an integer", line=lineno)
            try:
                metric = float(metric_s)
            except ValueError:
                raise ParseError(f"metric {metric_s!r} is not a number", line=lineno)
            if not np.isfinite(metric):
                raise ParseError(f"metric {metric_s!r} is not finite", line=lineno)
            if task not in known:
                raise ParseError(f"unknown task {task!r}", line=lineno)
            if algo not in per_algo:
                per_algo[algo] = []
                order.append(algo)
            per_algo[algo].append((step, task, metric))
    if not order:
        raise ParseError("raw log has no data rows", line=1)
    logs = [
        RawLog(
            algorithm=algo,
            records=tuple(sorted(per_algo[algo], key=lambda r: r[0])),
            boundaries=boundaries,
        )
        for algo in order
    ]
    return taskset, curriculum, logs


def downsample_to_boundaries(
    raw: RawLog, taskset: TaskSet, curriculum: Curriculum
) -> PerformanceMatrix:
    """Collapse a raw log to one column per curriculum phase.

    Entry (j, l) takes task j's metric from the latest record at or before
    the end of phase l; cells with no such record are masked out.
    """
    m = curriculum.m
    if len(raw.boundaries) != m:
        raise ValidationError(
            f"log has {len(raw.boundaries)} boundaries, curriculum has {m} phases"
        )
    for l, (_, trained) in enumerate(raw.boundaries):
        if taskset.index(trained) != curriculum.entries[l]:
            raise ValidationError(
                f"phase {l} trains {trained!r} in the log but "
                f"{taskset.names[curriculum.entries[l]]!r} in the curriculum"
            )
    if not raw.records:
        raise ValidationError(f"raw log for {raw.algorithm!r} has no records")
    # phase l ends right before the next phase starts
    ends = [raw.boundaries[l + 1][0] - 1 for l in range(m - 1)]
    by_task: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name in taskset.names:
        recs = [(s, v) for s, t, v in raw.records if t == name]
        steps = np.array([s for s, _ in recs], dtype=np.int64)
        vals = np.array([v for _, v in recs])
        by_task[name] = (steps, vals)
    values = np.zeros((taskset.n, m))
    mask = np.zeros((taskset.n, m), dtype=bool)
    for j, name in enumerate(taskset.names):
        steps, vals = by_task[name]
        if steps.size == 0:
            continue
        for l in range(m):
            if l < m - 1:
                idx = int(np.searchsorted(steps, ends[l], side="right")) - 1
            else:
                idx = steps.size - 1
            if idx >= 0:
                values[j, l] = vals[idx]
                mask[j, l] = True
    return PerformanceMatrix(algorithm=raw.algorithm, values=values, mask=mask)


def normalize_minmax(
    matrix: PerformanceMatrix, per_task: bool = True, task_names=None
) -> PerformanceMatrix:
    """Affinely map observed values onto [0, 1].

    With ``per_task`` each task row is scaled by its own min and max;
    otherwise one global min/max applies.  Masked entries are untouched and
    rows with no observations pass through.  Constant groups are an error
    (there is no scale to infer); ``task_names`` improves that message.
    """
    values = matrix.values.copy()
    mask = matrix.mask

    def scale(sel):
        vals = values[sel]
        if vals.size == 0:
            return
        vmin, vmax = float(vals.min()), float(vals.max())
        if vmax == vmin:
            raise NormalizationError("constant values, nothing to normalize")
        values[sel] = (vals - vmin) / (vmax - vmin)

    if per_task:
        for j in range(matrix.n_tasks):
            name = (
                task_names[j]
                if task_names is not None
                else f"task index {j}"
            )
            try:
                scale((j, mask[j]))
            except NormalizationError as exc:
                raise NormalizationError(
                    f"task {name}: {exc}", task=str(name)
                ) from None
    else:
        scale(mask)
    return PerformanceMatrix(algorithm=matrix.algorithm, values=values, mask=mask)
