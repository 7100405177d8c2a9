"""Tables and plots for fitted parameters.

Tables render two ways: ``markdown()`` for humans (values rounded to two
decimals) and ``to_json()`` for machines (full precision).  Plots are
SVG strings built by hand so equal inputs give byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import (
    AlgorithmProperties,
    Curriculum,
    PerformanceMatrix,
    ScenarioParams,
    TaskSet,
)

COMPARISON_PARAMETERS = ("gamma", "h", "lambda")

_PARAM_FIELD = {
    "gamma": "transfer_efficiency",
    "h": "experience_retention",
    "lambda": "expertise_translation",
}


@dataclass(frozen=True)
class Table:
    """A rendered table plus its full-precision machine form."""

    title: str
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    machine: dict

    def markdown(self) -> str:
        lines = [f"### {self.title}", ""]
        lines.append("| " + " | ".join(self.headers) + " |")
        lines.append("|" + "|".join(" --- " for _ in self.headers) + "|")
        for row in self.rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.machine, indent=2) + "\n"


def _fmt2(v: float) -> str:
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def _fmt_rank(r: float) -> str:
    return str(int(r)) if r == int(r) else f"{r:.1f}"


def _algorithms_of(item):
    """Accept a FitResult, ScenarioParams, or an iterable of
    AlgorithmProperties and return the algorithm list."""
    params = getattr(item, "params", item)
    if isinstance(params, ScenarioParams):
        return list(params.algorithms)
    if isinstance(params, AlgorithmProperties):
        return [params]
    return list(params)


def property_table(results) -> Table:
    """One row per algorithm with its gamma, h, and lambda estimates."""
    algos = []
    for item in results if isinstance(results, (list, tuple)) else [results]:
        algos.extend(_algorithms_of(item))
    if not algos:
        raise ValidationError("no algorithms to tabulate")
    names = [a.name for a in algos]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate algorithm names in property table")
    rows = tuple(
        (
            a.name,
            _fmt2(a.transfer_efficiency),
            _fmt2(a.experience_retention),
            _fmt2(a.expertise_translation),
        )
        for a in algos
    )
    machine = {
        "table": "algorithm_properties",
        "algorithms": [
            {
                "name": a.name,
                "gamma": a.transfer_efficiency,
                "h": a.experience_retention,
                "lambda": a.expertise_translation,
            }
            for a in algos
        ],
    }
    return Table(
        title="Estimated algorithm properties",
        headers=("algorithm", "gamma", "h", "lambda"),
        rows=rows,
        machine=machine,
    )


def transfer_table(params: ScenarioParams, taskset: TaskSet) -> Table:
    """Task-by-task transfer matrix; the self-transfer diagonal is bolded."""
    if params.n != taskset.n:
        raise ValidationError(
            f"params cover {params.n} tasks, task set has {taskset.n}"
        )
    a = params.tasks.transfer
    rows = []
    for i, name in enumerate(taskset.names):
        cells = [name]
        for j in range(taskset.n):
            text = _fmt2(a[i, j])
            cells.append(f"**{text}**" if i == j else text)
        rows.append(tuple(cells))
    machine = {
        "table": "task_transfer",
        "tasks": list(taskset.names),
        "transfer_matrix": [[float(v) for v in row] for row in a],
    }
    return Table(
        title="Estimated task transfer",
        headers=("trained task", *taskset.names),
        rows=tuple(rows),
        machine=machine,
    )


def difficulty_table(params: ScenarioParams, taskset: TaskSet) -> Table:
    if params.n != taskset.n:
        raise ValidationError(
            f"params cover {params.n} tasks, task set has {taskset.n}"
        )
    d = params.tasks.difficulty
    machine = {
        "table": "task_difficulty",
        "tasks": list(taskset.names),
        "difficulty": [float(v) for v in d],
    }
    return Table(
        title="Estimated task difficulty",
        headers=("", *taskset.names),
        rows=(("difficulty", *(_fmt2(v) for v in d)),),
        machine=machine,
    )


def _average_ranks(values) -> list[float]:
    """Rank 1 goes to the largest value; ties share the average position."""
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + 1 + j + 1) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _spearman(x_ranks, y_ranks) -> float:
    x = np.asarray(x_ranks)
    y = np.asarray(y_ranks)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = float(np.sqrt(np.sum(xd * xd) * np.sum(yd * yd)))
    if denom == 0.0:
        return 0.0
    return float(np.sum(xd * yd) / denom)


def comparison_table(estimates, parameter: str) -> Table:
    """Compare one algorithm property across datasets.

    ``estimates`` maps a dataset label to a FitResult or ScenarioParams.
    Rows are algorithms (first-appearance order), columns datasets; each
    cell shows the value with the within-column rank, e.g. ``0.96 (1)``.
    Algorithms missing from a dataset leave a blank cell.  The machine
    output carries full-precision values, ranks, and the Spearman rank
    correlation for every pair of datasets (over their shared algorithms;
    null when fewer than two are shared).
    """
    if parameter not in COMPARISON_PARAMETERS:
        raise ValidationError(
            f"parameter must be one of {COMPARISON_PARAMETERS}, got {parameter!r}"
        )
    if not estimates:
        raise ValidationError("no estimates to compare")
    field = _PARAM_FIELD[parameter]
    labels = list(estimates.keys())
    per_label: dict[str, dict[str, float]] = {}
    algo_order: list[str] = []
    for label in labels:
        values = {}
        for a in _algorithms_of(estimates[label]):
            if a.name in values:
                raise ValidationError(
                    f"duplicate algorithm {a.name!r} under {label!r}"
                )
            values[a.name] = float(getattr(a, field))
            if a.name not in algo_order:
                algo_order.append(a.name)
        per_label[label] = values

    ranks: dict[str, dict[str, float]] = {}
    for label in labels:
        names = [n for n in algo_order if n in per_label[label]]
        rs = _average_ranks([per_label[label][n] for n in names])
        ranks[label] = dict(zip(names, rs))

    rows = []
    for name in algo_order:
        cells = [name]
        for label in labels:
            if name in per_label[label]:
                cells.append(
                    f"{_fmt2(per_label[label][name])} ({_fmt_rank(ranks[label][name])})"
                )
            else:
                cells.append("")
        rows.append(tuple(cells))

    spearman = {}
    for i, la in enumerate(labels):
        for lb in labels[i + 1 :]:
            shared = [
                n for n in algo_order if n in per_label[la] and n in per_label[lb]
            ]
            key = f"{la}|{lb}"
            if len(shared) < 2:
                spearman[key] = None
            else:
                ra = _average_ranks([per_label[la][n] for n in shared])
                rb = _average_ranks([per_label[lb][n] for n in shared])
                spearman[key] = _spearman(ra, rb)

    machine = {
        "table": "comparison",
        "parameter": parameter,
        "datasets": labels,
        "algorithms": algo_order,
        "values": {l: per_label[l] for l in labels},
        "ranks": {l: ranks[l] for l in labels},
        "spearman": spearman,
    }
    return Table(
        title=f"Cross-dataset comparison of {parameter}",
        headers=("algorithm", *labels),
        rows=tuple(rows),
        machine=machine,
    )


# ---------------------------------------------------------------------------
# SVG curve plots

_PANEL_W = 150.0
_PANEL_H = 100.0
_GAP = 14.0
_LEFT = 80.0
_TOP = 34.0
_BOTTOM = 26.0

_OBSERVED_COLOR = "#1f77b4"
_PREDICTED_COLOR = "#d62728"
_BAND_COLOR = "#2ca02c"


def _coords(xs, ys) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def _series_fragments(values, mask, to_x, to_y, color, dashed) -> list[str]:
    """Polyline per contiguous observed run; lone points become dots."""
    out = []
    dash = ' stroke-dasharray="5 3"' if dashed else ""
    m = values.shape[0]
    l = 0
    while l < m:
        if not mask[l]:
            l += 1
            continue
        r = l
        while r + 1 < m and mask[r + 1]:
            r += 1
        xs = [to_x(k) for k in range(l, r + 1)]
        ys = [to_y(values[k]) for k in range(l, r + 1)]
        if len(xs) == 1:
            out.append(
                f'<circle cx="{xs[0]:.2f}" cy="{ys[0]:.2f}" r="2" fill="{color}"/>'
            )
        else:
            out.append(
                f'<polyline points="{_coords(xs, ys)}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"{dash}/>'
            )
        l = r + 1
    return out


def plot_curves(
    observed, predicted, curriculum: Curriculum, taskset: TaskSet | None = None
) -> str:
    """Render an algorithm-by-task grid of performance curves as SVG.

    Observed curves are solid, predicted curves dashed, and each phase
    where a task was trained is shaded behind its panel.  Predicted
    matrices are matched to observed ones by algorithm name; an empty
    ``predicted`` list draws observed curves only.  Output bytes are a
    pure function of the inputs.
    """
    observed = list(observed)
    if not observed:
        raise ValidationError("nothing to plot")
    n = observed[0].n_tasks
    if curriculum.n_tasks != n:
        raise ValidationError(
            f"curriculum is over {curriculum.n_tasks} tasks, curves have {n}"
        )
    if taskset is not None and taskset.n != n:
        raise ValidationError(f"task set has {taskset.n} names, curves have {n} tasks")
    m = curriculum.m
    for mat in observed:
        if mat.values.shape != (n, m):
            raise ValidationError(
                f"curves for {mat.algorithm!r} have shape {mat.values.shape}, "
                f"expected {(n, m)}"
            )
    pred_by_name = {}
    for mat in predicted or []:
        if mat.values.shape != (n, m):
            raise ValidationError(
                f"predicted curves for {mat.algorithm!r} have shape "
                f"{mat.values.shape}, expected {(n, m)}"
            )
        pred_by_name[mat.algorithm] = mat
    task_names = list(taskset.names) if taskset is not None else [
        f"task {j + 1}" for j in range(n)
    ]

    all_vals = [mat.values[mat.mask] for mat in observed if mat.mask.any()]
    all_vals += [mat.values[mat.mask] for mat in pred_by_name.values() if mat.mask.any()]
    lo = min([-1.0] + [float(v.min()) for v in all_vals if v.size])
    hi = max([1.0] + [float(v.max()) for v in all_vals if v.size])

    p = len(observed)
    width = _LEFT + n * _PANEL_W + (n - 1) * _GAP + 10
    height = _TOP + p * _PANEL_H + (p - 1) * _GAP + _BOTTOM
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        "<style>text{font-family:monospace;font-size:10px;fill:#444}</style>",
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]
    for j, name in enumerate(task_names):
        cx = _LEFT + j * (_PANEL_W + _GAP) + _PANEL_W / 2
        parts.append(
            f'<text x="{cx:.2f}" y="{_TOP - 8:.2f}" text-anchor="middle">{name}</text>'
        )
    for a, mat in enumerate(observed):
        y0 = _TOP + a * (_PANEL_H + _GAP)
        parts.append(
            f'<text x="{_LEFT - 8:.2f}" y="{y0 + _PANEL_H / 2:.2f}" '
            f'text-anchor="end">{mat.algorithm}</text>'
        )
        pred = pred_by_name.get(mat.algorithm)
        for j in range(n):
            x0 = _LEFT + j * (_PANEL_W + _GAP)

            def to_x(step, x0=x0):
                return x0 + (step + 0.5) / m * _PANEL_W

            def to_y(v, y0=y0):
                return y0 + (hi - v) / (hi - lo) * _PANEL_H

            parts.append(f'<g id="panel-{a}-{j}">')
            for l in range(m):
                if curriculum.entries[l] == j:
                    bx = x0 + l / m * _PANEL_W
                    parts.append(
                        f'<rect class="band" x="{bx:.2f}" y="{y0:.2f}" '
                        f'width="{_PANEL_W / m:.2f}" height="{_PANEL_H:.2f}" '
                        f'fill="{_BAND_COLOR}" opacity="0.15"/>'
                    )
            parts.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{_PANEL_W:.2f}" '
                f'height="{_PANEL_H:.2f}" fill="none" stroke="#999"/>'
            )
            zero_y = to_y(0.0)
            parts.append(
                f'<line x1="{x0:.2f}" y1="{zero_y:.2f}" x2="{x0 + _PANEL_W:.2f}" '
                f'y2="{zero_y:.2f}" stroke="#ddd"/>'
            )
            parts.extend(
                _series_fragments(
                    mat.values[j], mat.mask[j], to_x, to_y, _OBSERVED_COLOR, False
                )
            )
            if pred is not None:
                parts.extend(
                    _series_fragments(
                        pred.values[j], pred.mask[j], to_x, to_y,
                        _PREDICTED_COLOR, True,
                    )
                )
            parts.append("</g>")
        parts.append(
            f'<text x="{_LEFT - 8:.2f}" y="{y0 + 10:.2f}" text-anchor="end">'
            f"{_fmt2(hi)}</text>"
        )
        parts.append(
            f'<text x="{_LEFT - 8:.2f}" y="{y0 + _PANEL_H:.2f}" text-anchor="end">'
            f"{_fmt2(lo)}</text>"
        )
    legend_y = height - 8
    parts.append(
        f'<line x1="{_LEFT:.2f}" y1="{legend_y - 4:.2f}" x2="{_LEFT + 24:.2f}" '
        f'y2="{legend_y - 4:.2f}" stroke="{_OBSERVED_COLOR}" stroke-width="1.5"/>'
    )
    parts.append(f'<text x="{_LEFT + 30:.2f}" y="{legend_y:.2f}">observed</text>')
    if pred_by_name:
        lx = _LEFT + 110
        parts.append(
            f'<line x1="{lx:.2f}" y1="{legend_y - 4:.2f}" x2="{lx + 24:.2f}" '
            f'y2="{legend_y - 4:.2f}" stroke="{_PREDICTED_COLOR}" stroke-width="1.5" '
            f'stroke-dasharray="5 3"/>'
        )
        parts.append(f'<text x="{lx + 30:.2f}" y="{legend_y:.2f}">predicted</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
