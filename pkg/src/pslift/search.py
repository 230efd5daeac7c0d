"""Greedy best-first search over the state space and over the partial space.

Partial-space nodes pair a state with a partial action; the state changes only
when a fully instantiated partial action is crossed. Single-successor chains
are collapsed: the hop creates the node (it counts as generated) but is neither
expanded nor evaluated, so the expansion/evaluation counters reflect real
decisions only. Goal states are recognised at generation time.
"""

from __future__ import annotations

import heapq
import itertools
import resource
import time
from dataclasses import dataclass

from .lifted import ROOT, GroundAction, _apply_effects, children, instantiations
from .pddl import Task

INF = float("inf")

SOLVED = "solved"
UNSOLVABLE = "unsolvable"
EXHAUSTED = "exhausted"

_LIMIT_CHECK_EVERY = 256


@dataclass
class Limits:
    time_s: float | None = None
    memory_mb: float | None = None
    max_expansions: int | None = None


@dataclass
class SearchStats:
    expansions: int = 0
    evaluations: int = 0
    generated: int = 0
    wall_time: float = 0.0

    @property
    def branching_factor(self) -> float:
        return self.generated / self.expansions if self.expansions else 0.0


@dataclass
class SearchResult:
    status: str
    plan: list[GroundAction] | None
    stats: SearchStats
    reason: str = ""

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


class SearchNode:
    __slots__ = ("state", "rho", "parent", "h", "generating_action")

    def __init__(self, state, rho, parent=None, generating_action=None, h=0.0):
        self.state = state
        self.rho = rho
        self.parent = parent
        self.generating_action = generating_action
        self.h = h


def extract_plan(goal_node: SearchNode) -> list[GroundAction]:
    """The generating actions along the root-to-goal chain, i.e. exactly the
    fully instantiated partial actions that were crossed."""
    plan: list[GroundAction] = []
    node = goal_node
    while node is not None:
        if node.generating_action is not None:
            plan.append(node.generating_action)
        node = node.parent
    plan.reverse()
    return plan


class _Deadline:
    def __init__(self, limits: Limits | None):
        self.limits = limits or Limits()
        self.start = time.monotonic()

    def exceeded(self) -> str | None:
        lim = self.limits
        if lim.time_s is not None and time.monotonic() - self.start > lim.time_s:
            return "time"
        if lim.memory_mb is not None:
            rss_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
            if rss_kb > lim.memory_mb * 1024:
                return "memory"
        return None

    def elapsed(self) -> float:
        return time.monotonic() - self.start


def gbfs_state(task: Task, heuristic, limits: Limits | None = None) -> SearchResult:
    """GBFS over states. `heuristic` maps a state to a float; inf prunes.

    Ties are broken FIFO, duplicates are pruned by a closed list, and the goal
    test runs when a node is generated.
    """
    stats = SearchStats()
    deadline = _Deadline(limits)
    lim = deadline.limits

    def finish(status, plan=None, reason=""):
        stats.wall_time = deadline.elapsed()
        return SearchResult(status, plan, stats, reason)

    s0 = task.initial_state
    root = SearchNode(s0, ROOT)
    stats.generated = 1
    if task.is_goal(s0):
        return finish(SOLVED, [])

    counter = itertools.count()
    h0 = heuristic(s0)
    stats.evaluations = 1
    open_heap: list = []
    if h0 < INF:
        heapq.heappush(open_heap, (h0, next(counter), root))
    closed = {s0}

    while open_heap:
        if lim.max_expansions is not None and stats.expansions >= lim.max_expansions:
            return finish(EXHAUSTED, reason="expansions")
        if stats.expansions % _LIMIT_CHECK_EVERY == 0:
            why = deadline.exceeded()
            if why:
                return finish(EXHAUSTED, reason=why)
        _, _, node = heapq.heappop(open_heap)
        stats.expansions += 1
        for action in instantiations(task, node.state, ROOT):
            succ = _apply_effects(task, node.state, action)
            stats.generated += 1
            if succ in closed:
                continue
            closed.add(succ)
            child = SearchNode(succ, ROOT, node, action)
            if task.is_goal(succ):
                return finish(SOLVED, extract_plan(child))
            hv = heuristic(succ)
            stats.evaluations += 1
            if hv < INF:
                child.h = hv
                heapq.heappush(open_heap, (hv, next(counter), child))
    return finish(UNSOLVABLE)


def gbfs_partial(task: Task, heuristic, limits: Limits | None = None) -> SearchResult:
    """GBFS over (state, partial action) nodes guided by an action-set
    heuristic `heuristic(state, rho) -> float` (inf prunes).

    Expanding a node with a non-full rho yields its applicable children in the
    partial action tree; a full rho yields the single node for the resulting
    state. The closed list applies to the resulting states only: partial nodes
    with equal states but different rho are distinct decisions.
    """
    stats = SearchStats()
    deadline = _Deadline(limits)
    lim = deadline.limits

    def finish(status, plan=None, reason=""):
        stats.wall_time = deadline.elapsed()
        return SearchResult(status, plan, stats, reason)

    s0 = task.initial_state
    root = SearchNode(s0, ROOT)
    stats.generated = 1
    if task.is_goal(s0):
        return finish(SOLVED, [])

    closed = {s0}
    goal_node: list[SearchNode] = []

    def successors(node: SearchNode) -> list[SearchNode]:
        if node.rho.is_full:
            action = node.rho.as_ground_action()
            succ = _apply_effects(task, node.state, action)
            stats.generated += 1
            if succ in closed:
                return []
            closed.add(succ)
            child = SearchNode(succ, ROOT, node, action)
            if task.is_goal(succ):
                goal_node.append(child)
            return [child]
        kids = children(task, node.state, node.rho)
        stats.generated += len(kids)
        return [SearchNode(node.state, k, node) for k in kids]

    counter = itertools.count()
    h0 = heuristic(s0, ROOT)
    stats.evaluations = 1
    open_heap: list = []
    if h0 < INF:
        heapq.heappush(open_heap, (h0, next(counter), root))

    while open_heap:
        if lim.max_expansions is not None and stats.expansions >= lim.max_expansions:
            return finish(EXHAUSTED, reason="expansions")
        if stats.expansions % _LIMIT_CHECK_EVERY == 0:
            why = deadline.exceeded()
            if why:
                return finish(EXHAUSTED, reason=why)
        _, _, node = heapq.heappop(open_heap)
        stats.expansions += 1
        succs = successors(node)
        if goal_node:
            return finish(SOLVED, extract_plan(goal_node[0]))
        # collapse single-successor chains without expanding or evaluating them
        while len(succs) == 1:
            succs = successors(succs[0])
            if goal_node:
                return finish(SOLVED, extract_plan(goal_node[0]))
        for child in succs:
            hv = heuristic(child.state, child.rho)
            stats.evaluations += 1
            if hv < INF:
                child.h = hv
                heapq.heappush(open_heap, (hv, next(counter), child))
    return finish(UNSOLVABLE)


# ---------------------------------------------------------------------------
# plan text format (IPC style)

def format_plan(plan: list[GroundAction]) -> str:
    lines = [f"({' '.join((a.schema.name,) + a.args)})" for a in plan]
    lines.append(f"; cost = {len(plan)} (unit cost)")
    return "\n".join(lines) + "\n"


def parse_plan(text: str, task: Task) -> list[GroundAction]:
    plan: list[GroundAction] = []
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if not (line.startswith("(") and line.endswith(")")):
            raise ValueError(f"malformed plan line: {raw!r}")
        parts = line[1:-1].split()
        if not parts:
            raise ValueError(f"malformed plan line: {raw!r}")
        schema = task.schema(parts[0])
        plan.append(GroundAction(schema, tuple(parts[1:])))
    return plan
