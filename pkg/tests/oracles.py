"""Reference implementations used as independent test oracles.

These deliberately share no code with the package.  The cycle checker
walks every clause over explicit indices, octiles go through exact
Fraction ceilings, and the rank correlation is the average-rank formula
with a hand-rolled Pearson step.
"""

from __future__ import annotations

import math
from fractions import Fraction


def cycle_oracle(swaps) -> bool:
    """Brute-force check that a swap list is a closed, non-losing cycle."""
    n = len(swaps)
    if n < 2:
        return False
    for i in range(1, n):
        if swaps[i].token_in.id != swaps[i - 1].token_out.id:
            return False
    if swaps[0].token_in.id != swaps[n - 1].token_out.id:
        return False
    for i in range(1, n):
        if swaps[i].amount_in > swaps[i - 1].amount_out:
            return False
    if swaps[n - 1].amount_out < swaps[0].amount_in:
        return False
    return True


def octile_oracle(position: int, block_len: int) -> int:
    """Exact ceil(8 * position / block_len), clamped to 1..8."""
    value = math.ceil(Fraction(8 * position, block_len))
    return min(8, max(1, value))


def average_ranks(values) -> list[Fraction]:
    """Ranks 1..n where tied values share the mean of their rank span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = Fraction(i + 1 + j + 1, 2)
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman_oracle(xs, ys):
    """Pearson correlation of average ranks; None when a side is constant."""
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    n = len(xs)
    mx = sum(rx) / n
    my = sum(ry) / n
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return None
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    return float(sxy) / math.sqrt(float(sxx) * float(syy))


def components_oracle(nodes, edges) -> set[frozenset]:
    """Connected components by breadth-first search over undirected edges."""
    adjacency: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    seen: set[str] = set()
    components = set()
    for start in adjacency:
        if start in seen:
            continue
        queue = [start]
        seen.add(start)
        members = {start}
        while queue:
            node = queue.pop()
            for peer in adjacency[node]:
                if peer not in seen:
                    seen.add(peer)
                    members.add(peer)
                    queue.append(peer)
        components.add(frozenset(members))
    return components
