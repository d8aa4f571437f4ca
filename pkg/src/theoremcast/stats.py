"""Agreement statistics for the human-study analysis: Spearman's rho and
Krippendorff's alpha (ordinal)."""
from __future__ import annotations

import math
from collections.abc import Sequence


class LengthMismatch(ValueError):
    pass


class DegenerateInput(ValueError):
    """A constant vector has no rank ordering to correlate."""


class InsufficientData(ValueError):
    """Fewer than 2 raters, or no item carries 2+ ratings."""


def _average_ranks(xs: Sequence[float]) -> list[float]:
    # ties receive the mean of the rank positions they span
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of average-rank vectors."""
    if len(xs) != len(ys):
        raise LengthMismatch(f"lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise LengthMismatch("need at least 2 observations")
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise DegenerateInput("constant vector has undefined rank correlation")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def krippendorff_alpha(
    ratings: Sequence[Sequence[float | None]],
    level: str = "ordinal",
    domain: Sequence[float] | None = None,
) -> float:
    """Chance-corrected inter-rater agreement over a raters x items matrix.

    `None` marks a missing rating; items with fewer than two ratings are
    excluded. Uses the coincidence-matrix formulation with the ordinal
    difference function; alpha = 1 - D_o / D_e.
    """
    if level != "ordinal":
        raise ValueError(f"unsupported level {level!r}")
    if len(ratings) < 2:
        raise InsufficientData("need at least 2 raters")
    n_items = len(ratings[0])
    if any(len(row) != n_items for row in ratings):
        raise LengthMismatch("ragged ratings matrix")

    units: list[list[float]] = []
    for j in range(n_items):
        vals = [row[j] for row in ratings if row[j] is not None]
        if len(vals) >= 2:
            units.append(vals)
    if not units:
        raise InsufficientData("no item carries 2+ ratings")

    observed = sorted({v for unit in units for v in unit})
    if domain is None:
        values = observed
    else:
        values = sorted(domain)
        missing = [v for v in observed if v not in values]
        if missing:
            raise ValueError(f"ratings outside declared domain: {missing}")
    index = {v: i for i, v in enumerate(values)}
    size = len(values)

    coincidence = [[0.0] * size for _ in range(size)]
    for vals in units:
        m = len(vals)
        for a in range(m):
            for b in range(m):
                if a != b:
                    coincidence[index[vals[a]]][index[vals[b]]] += 1.0 / (m - 1)
    marginals = [sum(row) for row in coincidence]
    n = sum(marginals)

    def delta_sq(c: int, k: int) -> float:
        if c == k:
            return 0.0
        lo, hi = min(c, k), max(c, k)
        span = sum(marginals[g] for g in range(lo, hi + 1)) - (marginals[c] + marginals[k]) / 2.0
        return span * span

    d_obs = sum(
        coincidence[c][k] * delta_sq(c, k) for c in range(size) for k in range(size)
    ) / n
    if d_obs == 0.0:
        return 1.0
    d_exp = sum(
        marginals[c] * marginals[k] * delta_sq(c, k)
        for c in range(size)
        for k in range(size)
        if c != k
    ) / (n * (n - 1))
    return 1.0 - d_obs / d_exp
