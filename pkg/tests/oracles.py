"""Brute-force oracles, independent of the lifted machinery under test.

Everything here grounds exhaustively (itertools.product over objects) and works
directly on atom (pred, args) tuples, so it shares no code path with the
package's matcher, Datalog engine, or search.
"""

from __future__ import annotations

import itertools
from collections import deque

from pslift.pddl import Task


def ground_atoms(task, schema, args, atoms):
    """Instantiate schema-local atoms with an argument tuple."""
    binding = dict(zip(schema.params, args))
    return [(a.pred, tuple(binding.get(x, x) for x in a.args)) for a in atoms]


def all_ground_actions(task: Task):
    """Every (schema, args) combination, applicability not checked."""
    out = []
    for schema in task.schemas:
        for args in itertools.product(task.objects, repeat=len(schema.params)):
            out.append((schema, args))
    return out


def state_to_keys(task: Task, state) -> frozenset:
    return frozenset((task.atom(i).pred, task.atom(i).args) for i in state)


def intern_keys(task: Task, keys) -> frozenset:
    """Map (pred, args) keys into a task's interned ids (e.g. to carry a state
    over to a transformed copy of the task)."""
    return frozenset(task.intern(p, a) for p, a in keys)


def static_keys(task: Task) -> frozenset:
    return frozenset((task.atom(i).pred, task.atom(i).args) for i in task.static_atoms)


def applicable_keys(task, schema, args, true_keys) -> bool:
    binding = dict(zip(schema.params, args))
    for pred, atom_args in ground_atoms(task, schema, args, schema.pre):
        if (pred, atom_args) not in true_keys:
            return False
    for x, y, want in schema.equalities:
        if (binding.get(x, x) == binding.get(y, y)) != want:
            return False
    return True


def oracle_applicable(task: Task, state, schema, args) -> bool:
    return applicable_keys(task, schema, args, state_to_keys(task, state) | static_keys(task))


def oracle_applicable_actions(task: Task, state):
    """All applicable (schema, args), by scanning every grounding."""
    true_keys = state_to_keys(task, state) | static_keys(task)
    return [
        (schema, args)
        for schema, args in all_ground_actions(task)
        if applicable_keys(task, schema, args, true_keys)
    ]


def oracle_apply(task: Task, state_keys, schema, args) -> frozenset:
    """Successor state on (pred, args) keys; assumes applicability."""
    dels = set(ground_atoms(task, schema, args, schema.delete))
    adds = set(ground_atoms(task, schema, args, schema.add))
    return frozenset((state_keys - dels) | adds)


def bfs_plan(task: Task, max_states: int = 200_000):
    """Blind breadth-first search; returns an optimal plan or None."""
    statics = static_keys(task)
    goal = frozenset((task.atom(g).pred, task.atom(g).args) for g in task.goal)
    # static goal atoms that hold are satisfied forever; ones that do not hold
    # stay in goal_fluent and make BFS exhaust, which is the right answer
    goal_fluent = goal - statics
    grounded = all_ground_actions(task)
    start = state_to_keys(task, task.initial_state)
    if goal_fluent <= start:
        return []
    seen = {start}
    queue = deque([(start, [])])
    while queue and len(seen) < max_states:
        state, path = queue.popleft()
        true_keys = state | statics
        for schema, args in grounded:
            if not applicable_keys(task, schema, args, true_keys):
                continue
            succ = oracle_apply(task, state, schema, args)
            if succ in seen:
                continue
            seen.add(succ)
            step = path + [(schema.name, args)]
            if goal_fluent <= succ:
                return step
            queue.append((succ, step))
    return None


def relaxed_reachable(task: Task, state, extra_atoms=()):
    """Grounded delete-relaxed fixpoint from state (plus extra atom keys).
    Returns (all reachable atom keys incl. statics, unit-cost layer per key)."""
    statics = static_keys(task)
    true_keys = set(state_to_keys(task, state)) | set(extra_atoms)
    layers = {k: 0 for k in true_keys | statics}
    grounded = all_ground_actions(task)
    layer = 0
    changed = True
    while changed:
        changed = False
        layer += 1
        new = set()
        known = set(layers)
        for schema, args in grounded:
            if not applicable_keys(task, schema, args, known):
                continue
            for key in ground_atoms(task, schema, args, schema.add):
                if key not in layers and key not in new:
                    new.add(key)
        for key in new:
            layers[key] = layer
            changed = True
    return frozenset(layers), layers


def h_add(task: Task, state):
    """Grounded additive heuristic: cost fixpoint over all ground actions,
    summed over the goal atoms. Returns math.inf on relaxed dead ends."""
    import math

    statics = static_keys(task)
    cost = {k: 0 for k in state_to_keys(task, state) | statics}
    grounded = all_ground_actions(task)
    changed = True
    while changed:
        changed = False
        for schema, args in grounded:
            body = ground_atoms(task, schema, args, schema.pre)
            binding = dict(zip(schema.params, args))
            if any((binding.get(x, x) == binding.get(y, y)) != want
                   for x, y, want in schema.equalities):
                continue
            if any(b not in cost for b in body):
                continue
            total = 1 + sum(cost[b] for b in body)
            for key in ground_atoms(task, schema, args, schema.add):
                if cost.get(key, math.inf) > total:
                    cost[key] = total
                    changed = True
    value = 0
    for g in task.goal:
        key = (task.atom(g).pred, task.atom(g).args)
        if key not in cost:
            return math.inf
        value += cost[key]
    return value


def relaxed_goal_reachable(task: Task, state) -> bool:
    reachable, _ = relaxed_reachable(task, state)
    statics = static_keys(task)
    for g in task.goal:
        key = (task.atom(g).pred, task.atom(g).args)
        if key not in reachable and key not in statics:
            return False
    return True


def optimal_relaxed_plan_length(task: Task, state, max_states: int = 500_000):
    """Length of a shortest delete-relaxed plan (h+), by BFS over growing atom
    sets. Exponential; only for very small tasks."""
    statics = static_keys(task)
    goal = frozenset(
        (task.atom(g).pred, task.atom(g).args) for g in task.goal
    ) - statics
    start = state_to_keys(task, state)
    if goal <= start:
        return 0
    grounded = all_ground_actions(task)
    seen = {start}
    queue = deque([(start, 0)])
    while queue and len(seen) < max_states:
        atoms, depth = queue.popleft()
        true_keys = atoms | statics
        for schema, args in grounded:
            if not applicable_keys(task, schema, args, true_keys):
                continue
            succ = frozenset(atoms | set(ground_atoms(task, schema, args, schema.add)))
            if succ in seen:
                continue
            seen.add(succ)
            if goal <= succ:
                return depth + 1
            queue.append((succ, depth + 1))
    return None
