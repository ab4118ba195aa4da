"""Deterministic LP-based branch and bound on top of the native simplex.

Most-fractional branching (ties to the lowest variable index); depth-first
dive until the first incumbent, best-bound selection afterwards.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import (GAP_LIMIT, INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED,
                    MilpModel, Solution, SolverParams)
from .simplex import solve_dense


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


@dataclass
class _Node:
    bound: float
    depth: int
    lb: np.ndarray
    ub: np.ndarray


def solve_milp_native(model: MilpModel, params: SolverParams | None = None) -> Solution:
    params = params or SolverParams()
    c, c0, A, senses, b, lb0, ub0, integ = model.arrays()
    Ad = A.toarray()
    int_idx = np.flatnonzero(integ)
    lb0 = lb0.copy()
    ub0 = ub0.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - 1e-9)
    ub0[int_idx] = np.floor(ub0[int_idx] + 1e-9)
    int_tol = 1e-6
    start = time.monotonic()

    def lp(lb, ub):
        return solve_dense(c, Ad, senses, b, lb, ub, params)

    incumbent_x = None
    incumbent = math.inf
    nodes = 0
    root = lp(lb0, ub0)
    if root.status == UNBOUNDED:
        return Solution(UNBOUNDED, backend="native", senses=senses)
    if root.status != OPTIMAL:
        status = INFEASIBLE if root.status == INFEASIBLE else root.status
        return Solution(status, backend="native", senses=senses, nodes=1)

    counter = 0
    stack: list[tuple[_Node, Solution]] = [(_Node(root.objective, 0, lb0, ub0), root)]
    heap: list = []
    limit_hit = False

    def push(node, sol):
        nonlocal counter
        counter += 1
        if incumbent_x is None:
            stack.append((node, sol))
        else:
            heapq.heappush(heap, (node.bound, counter, node, sol))

    while stack or heap:
        if params.node_limit is not None and nodes >= params.node_limit:
            limit_hit = True
            break
        if params.time_limit is not None and time.monotonic() - start > params.time_limit:
            limit_hit = True
            break
        if stack:
            node, sol = stack.pop()
        else:
            _, _, node, sol = heapq.heappop(heap)
        nodes += 1
        if sol.objective >= incumbent - params.gap * max(1.0, abs(incumbent)) and incumbent_x is not None:
            continue
        xv = sol.x
        frac = np.abs(xv[int_idx] - np.round(xv[int_idx]))
        if frac.size == 0 or frac.max() <= int_tol:
            if sol.objective < incumbent:
                incumbent = sol.objective
                incumbent_x = xv.copy()
                incumbent_x[int_idx] = np.round(incumbent_x[int_idx])
                # move pending dive nodes onto the best-bound heap
                while stack:
                    n2, s2 = stack.pop(0)
                    counter += 1
                    heapq.heappush(heap, (n2.bound, counter, n2, s2))
            continue
        # most fractional, ties -> lowest index
        score = 0.5 - np.abs(frac - 0.5)
        k = int(int_idx[np.flatnonzero(score >= score.max() - 1e-12)[0]])
        v = xv[k]
        children = []
        down_ub = node.ub.copy()
        down_ub[k] = math.floor(v)
        up_lb = node.lb.copy()
        up_lb[k] = math.ceil(v)
        order = [(node.lb, down_ub), (up_lb, node.ub)]
        if v - math.floor(v) > 0.5:
            order.reverse()
        for clb, cub in order:
            csol = lp(clb, cub)
            if csol.status == OPTIMAL:
                children.append((_Node(csol.objective, node.depth + 1, clb, cub), csol))
        # dive into the preferred child last-in-first-out
        for child in reversed(children):
            push(*child)

    open_bounds = [n.bound for n, _ in stack] + [h[0] for h in heap]
    if incumbent_x is None:
        status = ITERATION_LIMIT if limit_hit else INFEASIBLE
        return Solution(status, backend="native", senses=senses, nodes=nodes,
                        info={"no_incumbent": limit_hit})
    best = min(open_bounds + [incumbent]) if limit_hit else min([incumbent] + open_bounds)
    gap = relative_gap(incumbent, best)
    if limit_hit and gap > params.gap:
        status = ITERATION_LIMIT
    else:
        status = OPTIMAL
    return Solution(status, x=incumbent_x, objective=incumbent + c0, senses=senses,
                    gap=gap, best_bound=best + c0, nodes=nodes, backend="native")


__all__ = ["solve_milp_native", "relative_gap", "GAP_LIMIT"]
