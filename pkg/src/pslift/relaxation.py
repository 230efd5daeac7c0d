"""Delete relaxation via a lifted Datalog program, and the restriction
transform that turns the FF heuristic into an action-set heuristic.

Each action schema contributes one rule per add effect (head = add atom, body =
preconditions); static atoms are preloaded facts and the state supplies the
remaining facts per evaluation. Reachability runs as a semi-naive fixpoint in
unit-cost layers, recording one best (first, lowest-layer) achiever per derived
atom; the FF value is the number of distinct actions in the plan extracted by
chasing achievers back from the goal.

The action-set variant evaluates the transformed task in which a fresh 0-ary
predicate gates every original schema and each action of the given set B is a
temporary 0-ary schema that additionally adds the gate. The temporary rules
live only for the duration of one evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lifted import GroundAction, PartialAction, State, instantiations
from .pddl import ActionSchema, Atom, Predicate, Task

INF = float("inf")

EPSILON = "@epsilon"
GOAL = "@goal"
OBJ = "@object"
_INTERNAL = {EPSILON, GOAL, OBJ}


class EmptyActionSet(Exception):
    pass


class _Rule:
    __slots__ = ("head", "body", "eqs", "schema", "action_key")

    def __init__(self, head, body, eqs, schema, action_key):
        self.head = head          # (pred, args) with '?' vars or constants
        self.body = tuple(body)
        self.eqs = tuple(eqs)
        self.schema = schema      # ActionSchema for schema rules, else None
        self.action_key = action_key  # fixed identity for temporary rules

    def text(self) -> str:
        def fmt(a):
            pred, args = a
            return f"{pred}({','.join(args)})" if args else pred

        body = [fmt(b) for b in self.body]
        for x, y, want in self.eqs:
            body.append(f"{x}{'=' if want else '!='}{y}")
        rhs = ", ".join(body) if body else "true"
        return f"{fmt(self.head)} :- {rhs}."


@dataclass
class ReachResult:
    """Fixpoint output: fluent atoms reached (plus the gate when restricted),
    their unit-cost layers, and one achiever per derived atom."""

    atoms: frozenset
    layers: dict
    achievers: dict


def _ground(args, binding):
    return tuple(binding.get(a, a) for a in args)


class DatalogProgram:
    """Datalog view of a task, shared by h_ff and its restricted variant."""

    def __init__(self, task: Task, restricted: bool = False):
        self.task = task
        self.restricted = restricted
        self.rules: list[_Rule] = []
        for schema in task.schemas:
            body = [(a.pred, a.args) for a in schema.pre]
            seen = {v for a in schema.pre for v in a.args if v.startswith("?")}
            body.extend((OBJ, (p,)) for p in schema.params if p not in seen)
            if restricted:
                body.append((EPSILON, ()))
            for add in schema.add:
                self.rules.append(
                    _Rule((add.pred, add.args), body, schema.equalities, schema, None)
                )
        goal_body = [
            (task.atom(g).pred, task.atom(g).args) for g in sorted(task.goal)
        ]
        self.rules.append(_Rule((GOAL, ()), goal_body, (), None, None))

        self.base_facts: list[tuple] = [
            (task.atom(i).pred, task.atom(i).args) for i in sorted(task.static_atoms)
        ]
        self.base_facts.extend((OBJ, (o,)) for o in task.objects)

    def dump(self) -> str:
        return "\n".join(r.text() for r in self.rules) + "\n"

    # -- fixpoint -----------------------------------------------------------

    def _fixpoint(self, state: State, temp_rules: list[_Rule]) -> ReachResult:
        task = self.task
        layers: dict = {}
        achievers: dict = {}
        by_pred: dict[str, list] = {}
        index: dict = {}

        def commit(key, layer):
            layers[key] = layer
            pred, args = key
            by_pred.setdefault(pred, []).append(args)
            for pos, val in enumerate(args):
                index.setdefault((pred, pos, val), []).append(args)

        for key in self.base_facts:
            if key not in layers:
                commit(key, 0)
        for i in state:
            a = task.atom(i)
            key = (a.pred, a.args)
            if key not in layers:
                commit(key, 0)

        rules = self.rules + temp_rules
        delta: list[tuple] = list(layers)
        layer = 0
        while delta:
            layer += 1
            delta_by_pred: dict[str, list] = {}
            for pred, args in delta:
                delta_by_pred.setdefault(pred, []).append(args)
            new: dict = {}

            for rule in rules:
                if not rule.body:
                    if layer == 1:
                        self._emit(rule, {}, new, layers)
                    continue
                for seed_pos, (pred, _) in enumerate(rule.body):
                    for seed_args in delta_by_pred.get(pred, ()):
                        binding: dict = {}
                        if self._unify(rule.body[seed_pos][1], seed_args, binding):
                            self._join(
                                rule, seed_pos, binding, by_pred, index, new, layers
                            )

            for key, ach in new.items():
                commit(key, layer)
                achievers[key] = ach
            delta = list(new)

        atoms = frozenset(
            key for key in layers if key[0] == EPSILON or key[0] not in _INTERNAL
        )
        return ReachResult(atoms, layers, achievers)

    @staticmethod
    def _unify(pattern, args, binding) -> bool:
        for p, a in zip(pattern, args):
            if p.startswith("?"):
                bound = binding.get(p)
                if bound is None:
                    binding[p] = a
                elif bound != a:
                    return False
            elif p != a:
                return False
        return True

    def _eqs_ok(self, rule, binding) -> bool:
        for x, y, want in rule.eqs:
            xv = binding.get(x, x)
            yv = binding.get(y, y)
            if xv.startswith("?") or yv.startswith("?"):
                continue
            if (xv == yv) != want:
                return False
        return True

    def _join(self, rule, seed_pos, binding, by_pred, index, new, layers) -> None:
        """Backtracking join of the rule body against reached atoms, with the
        seed position already bound. Candidate atoms come from the smallest
        per-position index available."""
        if not self._eqs_ok(rule, binding):
            return
        remaining = [i for i in range(len(rule.body)) if i != seed_pos]

        def rec(todo, bind):
            if not todo:
                self._emit(rule, bind, new, layers)
                return
            # most-bound atom first
            def boundness(i):
                pred, args = rule.body[i]
                return sum(1 for a in args if not a.startswith("?") or a in bind)

            todo = sorted(todo, key=lambda i: (-boundness(i), i))
            i, rest = todo[0], todo[1:]
            pred, args = rule.body[i]
            candidates = None
            for pos, a in enumerate(args):
                val = bind.get(a, a)
                if not val.startswith("?"):
                    lst = index.get((pred, pos, val), [])
                    if candidates is None or len(lst) < len(candidates):
                        candidates = lst
            if candidates is None:
                candidates = by_pred.get(pred, [])
            for cand in candidates:
                b2 = dict(bind)
                if self._unify(args, cand, b2) and self._eqs_ok(rule, b2):
                    rec(rest, b2)

        rec(remaining, binding)

    def _emit(self, rule, binding, new, layers) -> None:
        if rule.schema is not None:
            # a parameter can be free when it appears only in the add effect
            for p in rule.schema.params:
                if p not in binding:
                    for obj in self.task.objects:
                        b2 = dict(binding)
                        b2[p] = obj
                        self._emit(rule, b2, new, layers)
                    return
        if not self._eqs_ok(rule, binding):
            return
        head = (rule.head[0], _ground(rule.head[1], binding))
        if head in layers or head in new:
            return
        if rule.action_key is not None:
            key = rule.action_key
        elif rule.schema is not None:
            key = (rule.schema.name, tuple(binding[p] for p in rule.schema.params))
        else:
            key = None
        body_keys = [(p, _ground(a, binding)) for p, a in rule.body]
        new[head] = (key, body_keys)

    # -- heuristic values -----------------------------------------------------

    def _extract(self, reach: ReachResult) -> float:
        goal_key = (GOAL, ())
        if goal_key not in reach.layers:
            return INF
        actions = set()
        seen = set()
        stack = [goal_key]
        while stack:
            key = stack.pop()
            if key in seen or reach.layers[key] == 0:
                continue
            seen.add(key)
            action_key, body_keys = reach.achievers[key]
            if action_key is not None:
                actions.add(action_key)
            stack.extend(body_keys)
        return len(actions)

    def relaxed_reach(self, state: State, actions=None) -> ReachResult:
        temp = self._temp_rules(actions) if actions is not None else []
        return self._fixpoint(state, temp)

    def h_ff(self, state: State) -> float:
        """Relaxed-plan size, 0 iff the goal already holds, inf on dead ends."""
        if self.restricted:
            raise ValueError("use h_ff_restricted on a restricted program")
        return self._extract(self._fixpoint(state, []))

    def _temp_rules(self, actions) -> list[_Rule]:
        if not self.restricted:
            raise ValueError("temporary action rules need a restricted program")
        temp: list[_Rule] = []
        for i, action in enumerate(actions):
            binding = dict(zip(action.schema.params, action.args))
            body = [(a.pred, _ground(a.args, binding)) for a in action.schema.pre]
            key = ("@temp", i)
            for add in action.schema.add:
                temp.append(
                    _Rule((add.pred, _ground(add.args, binding)), body, (), None, key)
                )
            temp.append(_Rule((EPSILON, ()), body, (), None, key))
        return temp

    def h_ff_restricted(self, state: State, actions) -> float:
        """FF value of the B-restricted task; the temporary rules exist only
        inside this call, so interleaved evaluations cannot interfere."""
        actions = list(actions)
        if not actions:
            if self.task.is_goal(state):
                return 0
            raise EmptyActionSet("no actions given and the goal does not hold")
        return self._extract(self._fixpoint(state, self._temp_rules(actions)))


def build_datalog(task: Task, restricted: bool = False) -> DatalogProgram:
    return DatalogProgram(task, restricted=restricted)


# ---------------------------------------------------------------------------
# explicit restricted task (used by oracles and for debugging dumps)

@dataclass
class RestrictedTask:
    """The task transform behind the restriction heuristic, materialised."""

    base: Task
    epsilon: Predicate
    action_set: list[GroundAction]

    def as_task(self) -> Task:
        base = self.base
        predicates = [(p.name, p.arity) for p in base.predicates]
        predicates.append((EPSILON, 0))
        eps_atom = Atom(EPSILON, ())
        schemas = [
            ActionSchema(
                s.name, s.params, s.pre + (eps_atom,), s.add, s.delete, s.equalities
            )
            for s in base.schemas
        ]
        for i, a in enumerate(self.action_set):
            binding = dict(zip(a.schema.params, a.args))
            schemas.append(
                ActionSchema(
                    f"@restricted-{i}",
                    (),
                    tuple(Atom(p.pred, _ground(p.args, binding)) for p in a.schema.pre),
                    tuple(Atom(p.pred, _ground(p.args, binding)) for p in a.schema.add)
                    + (eps_atom,),
                    tuple(Atom(p.pred, _ground(p.args, binding)) for p in a.schema.delete),
                    (),
                )
            )
        return Task(
            base.domain_name,
            base.problem_name,
            predicates,
            schemas,
            list(base.objects),
            [base.atom(i) for i in sorted(base.init)],
            [base.atom(i) for i in sorted(base.goal)],
        )


def restrict_task(task: Task, actions) -> RestrictedTask:
    return RestrictedTask(task, Predicate(EPSILON, 0), list(actions))


# ---------------------------------------------------------------------------
# heuristic callables for the search module

class FFHeuristic:
    """State-space FF heuristic: state -> float."""

    def __init__(self, task: Task):
        self.program = DatalogProgram(task)

    def __call__(self, state: State) -> float:
        return self.program.h_ff(state)


class RestrictedFFHeuristic:
    """Action-set FF heuristic: (state, rho or explicit action list) -> float."""

    def __init__(self, task: Task):
        self.task = task
        self.program = DatalogProgram(task, restricted=True)

    def __call__(self, state: State, rho_or_actions) -> float:
        if isinstance(rho_or_actions, PartialAction):
            actions = list(instantiations(self.task, state, rho_or_actions))
            if not actions:
                # a node without applicable instantiations is a dead end
                return 0 if self.task.is_goal(state) else INF
            return self.program.h_ff_restricted(state, actions)
        return self.program.h_ff_restricted(state, rho_or_actions)
