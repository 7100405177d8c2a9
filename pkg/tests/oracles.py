"""Slow reference implementations used to check the vectorized code.

Everything in here is deliberately written with plain Python loops and
the math module so that a bug in the numpy code cannot hide in a shared
helper.  Keep these dumb.
"""

import math


def scaled_sigmoid_ref(x):
    # 2 / (1 + e^-x) - 1, with the usual split to avoid overflow
    if x >= 0:
        return 2.0 / (1.0 + math.exp(-x)) - 1.0
    e = math.exp(x)
    return (e - 1.0) / (e + 1.0)


def forward_ref(transfer, difficulty, gamma, h, lam, entries, n):
    """Predicted performance curves for one algorithm, as nested lists.

    transfer is an n*n nested list indexed [trained][affected].  Returns
    curves[task][step] over len(entries) steps.
    """
    m = len(entries)
    exp = [0.0] * n
    curves = [[0.0] * m for _ in range(n)]
    for l in range(m):
        i = entries[l]
        perf_i = scaled_sigmoid_ref(exp[i] / difficulty[i])
        new = [0.0] * n
        for j in range(n):
            new[j] = exp[j] * h + transfer[i][j] * (gamma + perf_i * lam)
        exp = new
        for j in range(n):
            curves[j][l] = scaled_sigmoid_ref(exp[j] / difficulty[j])
    return curves


def loss_ref(transfer, difficulty, algos, entries, observed, masks, n):
    """Sum of squared residuals over all algorithms, tasks and steps.

    algos is a list of (gamma, h, lam) triples; observed[a][task][step]
    and masks[a][task][step] follow forward_ref's layout.
    """
    total = 0.0
    for a, (gamma, h, lam) in enumerate(algos):
        pred = forward_ref(transfer, difficulty, gamma, h, lam, entries, n)
        for j in range(n):
            for l in range(len(entries)):
                if masks[a][j][l]:
                    r = pred[j][l] - observed[a][j][l]
                    total += r * r
    return total


def fd_gradient(f, theta, eps=1e-6):
    """Central finite differences of a scalar function of a flat vector."""
    grad = [0.0] * len(theta)
    for k in range(len(theta)):
        up = list(theta)
        dn = list(theta)
        up[k] += eps
        dn[k] -= eps
        grad[k] = (f(up) - f(dn)) / (2.0 * eps)
    return grad


def relative_errors(approx, exact, floor=1e-3):
    return [
        abs(a - e) / max(abs(a), abs(e), floor)
        for a, e in zip(approx, exact)
    ]
