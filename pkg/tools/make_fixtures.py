"""Regenerate the bundled test fixtures under tests/data.

Run from the repository root:

    python3 tools/make_fixtures.py

The six-game estimates double as a realistic params file; the
curves fixture is a forward simulation from those estimates rescaled to
[0, 1] the way normalized reward data looks.  The raw log is written by
hand: a dense 100-step metric stream plus one sparse learner that only
reports at phase starts.
"""

import csv
import numpy as np

from latentperf import (
    AlgorithmProperties,
    Curriculum,
    PerformanceMatrix,
    ScenarioParams,
    TaskProperties,
    TaskSet,
    simulate_all,
    write_curves,
    write_params,
)

DATA = __file__.rsplit("/", 2)[0] + "/tests/data"

TASKS = TaskSet(
    ["Space Invaders", "Krull", "Beam Rider", "Hero", "Star Gunner", "Ms. Pacman"]
)

TRANSFER = np.array(
    [
        [1.00, 0.15, -0.13, 0.01, -0.16, 0.03],
        [-0.09, 1.00, 0.21, -0.02, -0.05, 0.02],
        [0.04, -0.15, 1.00, 0.01, 0.04, 0.08],
        [0.13, 0.05, -0.33, 1.00, 0.10, 0.11],
        [0.01, 0.07, -0.16, -0.12, 1.00, -0.03],
        [-0.03, -0.16, -0.12, -0.01, -0.38, 1.00],
    ]
)

DIFFICULTY = np.array([0.09, 0.08, 0.15, 0.07, 0.10, 0.08])

ALGORITHMS = (
    AlgorithmProperties("Clear", 0.12, 0.90, 0.03),
    AlgorithmProperties("Progress & Compress", 0.06, 0.35, 1.16),
    AlgorithmProperties("EWC_online", 0.03, 0.60, 0.82),
    AlgorithmProperties("EWC", 0.01, 0.74, 0.72),
    AlgorithmProperties("Impala", 0.10, 0.33, 1.26),
)

PARAMS = ScenarioParams(
    tasks=TaskProperties(transfer=TRANSFER, difficulty=DIFFICULTY),
    algorithms=ALGORITHMS,
)


def make_params():
    write_params(f"{DATA}/atari_estimates.json", TASKS, PARAMS)


def make_curves():
    # each task trained once, in order, like the six-phase benchmark run
    cur = Curriculum(entries=range(6), n_tasks=6)
    mats = [
        PerformanceMatrix(algorithm=m.algorithm, values=(m.values + 1.0) / 2.0)
        for m in simulate_all(PARAMS, cur)
    ]
    write_curves(f"{DATA}/atari_curves.csv", TASKS, mats)


def make_raw_log():
    rows = []
    # learner1: all three tasks measured every 100 global steps
    for step in range(0, 801, 100):
        rows.append(("learner1", step, "alpha", step / 1000))
        rows.append(("learner1", step, "beta", step / 1000 + 1))
        rows.append(("learner1", step, "gamma", step / 1000 + 2))
    # a duplicate measurement at the same step: the later row should win
    rows.append(("learner1", 800, "alpha", 0.85))
    # learner2: beta only, reported exactly at the phase-start steps
    rows.append(("learner2", 0, "beta", 10.0))
    rows.append(("learner2", 300, "beta", 11.0))
    rows.append(("learner2", 600, "beta", 12.0))
    with open(f"{DATA}/raw_metrics.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "global_step", "task", "metric"))
        w.writerows(rows)
    with open(f"{DATA}/raw_boundaries.json", "w", encoding="utf-8") as fh:
        fh.write(
            '{\n  "tasks": ["alpha", "beta", "gamma"],\n'
            '  "boundaries": [[0, "alpha"], [300, "beta"], [600, "gamma"]]\n}\n'
        )


if __name__ == "__main__":
    make_params()
    make_curves()
    make_raw_log()
    print("fixtures written to", DATA)
