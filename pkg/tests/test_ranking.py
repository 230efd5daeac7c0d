import math
import random
from collections import deque

import numpy as np
import pytest

from pslift.generators import generate_task
from pslift.lifted import ROOT, GroundAction, PartialAction, _apply_effects, instantiations
from pslift.pddl import ActionSchema, Atom, Task
from pslift.ranking import (
    AOAG_IMPORTANCES,
    CorruptModel,
    FormatVersionMismatch,
    InvalidPlan,
    LinearModel,
    RankingTuple,
    TrainConfig,
    dataset_size_closed_form,
    evaluate,
    generate_dataset,
    hinge_slack,
    kind_histogram,
    load_model,
    order_instances,
    save_model,
    split_train_val,
    train_lp,
    train_model,
    tune_c,
)
from pslift.wl import ColorDictionary, phi

import oracles

IMPS = {"lp": 1.0, "ls": 1.0, "sp": 1.0, "ss": 1.0}


def stub_phi_factory():
    """Distinct vector per (state, rho) so no tuple degenerates."""
    seen = {}

    def fn(state, rho):
        key = (state, rho)
        if key not in seen:
            seen[key] = {len(seen): 1}
        return seen[key]

    return fn


def bw2_plan(task):
    return [GroundAction(task.schema("pickup"), ("a",)),
            GroundAction(task.schema("stack"), ("a", "b"))]


class TestGenerateDataset:
    def test_bw2_step_counts_by_hand(self, bw2):
        data = generate_dataset(bw2, bw2_plan(bw2), stub_phi_factory(), IMPS)
        hist = kind_histogram(data)
        # step 0: 2 lp, 1 ls (pickup b at level 2), 2 sp, 1 ss
        # step 1: 3+1 lp, 2 ls, 3 sp, 1 ss
        assert hist == {"lp": 6, "ls": 3, "sp": 5, "ss": 2}
        assert len(data) == 16

    def test_deltas_and_sigmas(self, bw2):
        imps = {"lp": 0.5, "ls": 2.0, "sp": 0.5, "ss": 1.0}
        data = generate_dataset(bw2, bw2_plan(bw2), stub_phi_factory(), imps)
        for t in data:
            assert t.delta == (1.0 if t.kind in ("lp", "sp") else 0.0)
            assert t.sigma == imps[t.kind]

    def test_empty_plan_empty_dataset(self, bw2):
        assert generate_dataset(bw2, [], stub_phi_factory(), IMPS) == []

    def test_invalid_plan_rejected(self, bw2):
        bad = [GroundAction(bw2.schema("stack"), ("a", "b"))]
        with pytest.raises(InvalidPlan):
            generate_dataset(bw2, bad, stub_phi_factory(), IMPS)

    def test_plan_not_reaching_goal_rejected(self, bw2):
        short = [GroundAction(bw2.schema("pickup"), ("a",))]
        with pytest.raises(InvalidPlan):
            generate_dataset(bw2, short, stub_phi_factory(), IMPS)

    def test_degenerate_single_schema_task(self):
        schema = ActionSchema("tick", (), (), (Atom("done", ()),), ())
        task = Task("d", "p", [("done", 0)], [schema], ["o"], [], [Atom("done", ())])
        plan = [GroundAction(schema, ())]
        data = generate_dataset(task, plan, stub_phi_factory(), IMPS)
        # one in-state pair, one state predecessor, no siblings, no cross-state
        assert kind_histogram(data) == {"lp": 1, "ls": 0, "sp": 1, "ss": 0}
        assert len(data) == dataset_size_closed_form(1, 1, 0, 1) == 2

    def test_sibling_relations_hold(self, bw3_stack):
        plan = oracles.bfs_plan(bw3_stack)
        actions = [GroundAction(bw3_stack.schema(n), a) for n, a in plan]
        feats = {}

        def fn(state, rho):
            key = (state, rho)
            feats.setdefault(key, {len(feats): 1})
            return feats[key]

        inverse = {}

        def tracking(state, rho):
            fv = fn(state, rho)
            inverse[tuple(fv)] = (state, rho)
            return fv

        data = generate_dataset(bw3_stack, actions, tracking, IMPS)
        for t in data:
            s1, r1 = inverse[tuple(t.x)]
            s2, r2 = inverse[tuple(t.x_prime)]
            if t.kind in ("ls", "ss"):
                assert s1 == s2
                assert r1.specificity() == r2.specificity() or t.kind == "ss"
                assert r1 != r2
                applicable = list(instantiations(bw3_stack, s1, r2))
                assert applicable, "sibling must be applicable"
            if t.kind == "ss":
                assert r1.is_full and r2.is_full
            if t.kind == "sp":
                assert s1 == s2 and r2 is ROOT and r1.specificity() >= 1

    def test_sibling_cap(self, bw2):
        capped = generate_dataset(bw2, bw2_plan(bw2), stub_phi_factory(), IMPS,
                                  sibling_cap=0)
        hist = kind_histogram(capped)
        assert hist["ls"] == 0 and hist["ss"] == 0 and hist["lp"] == 6


def synthetic_task(alpha: int, beta: int, k: int) -> Task:
    """alpha schemas with k parameters, beta objects, no preconditions."""
    predicates = [("mark", 1)]
    schemas = [
        ActionSchema(f"op{i}", tuple(f"?x{j}" for j in range(k)), (), (), ())
        for i in range(alpha)
    ]
    objects = [f"o{i}" for i in range(beta)]
    return Task("synthetic", "s", predicates, schemas, objects, [], [])


class TestClosedForm:
    def test_hand_computed_values(self):
        assert dataset_size_closed_form(1, 1, 1, 1) == 4
        assert dataset_size_closed_form(2, 2, 1, 1) == 11
        assert dataset_size_closed_form(3, 2, 0, 0) == 0

    @pytest.mark.parametrize("alpha", [1, 2])
    @pytest.mark.parametrize("beta", [1, 2, 3])
    @pytest.mark.parametrize("k", [0, 1, 2])
    @pytest.mark.parametrize("n", [1, 3])
    def test_matches_generation_on_synthetic_family(self, alpha, beta, k, n):
        task = synthetic_task(alpha, beta, k)
        rng = random.Random(alpha * 100 + beta * 10 + k + n)
        plan = []
        for _ in range(n):
            schema = task.schemas[rng.randrange(alpha)]
            args = tuple(task.objects[rng.randrange(beta)] for _ in range(k))
            plan.append(GroundAction(schema, args))
        data = generate_dataset(task, plan, stub_phi_factory(), IMPS)
        assert len(data) == dataset_size_closed_form(alpha, beta, k, n)


class TestTrainLp:
    def test_single_tuple_prefers_weight_over_slack(self):
        data = [RankingTuple({0: 1}, {}, 1.0, 1.0, "lp")]
        res = train_lp(data, C=10.0, dim=1)
        assert res.weights[0] == pytest.approx(1.0, abs=1e-9)
        assert res.slacks[0] == pytest.approx(0.0, abs=1e-9)

    def test_zero_c_gives_zero_weights(self):
        data = [RankingTuple({0: 1}, {}, 1.0, 1.0, "lp")]
        res = train_lp(data, C=0.0, dim=1)
        assert np.allclose(res.weights, 0.0)

    def test_contradictory_tuples_finite_with_slack(self):
        data = [
            RankingTuple({0: 1}, {}, 1.0, 1.0, "lp"),
            RankingTuple({}, {0: 1}, 1.0, 1.0, "lp"),
        ]
        res = train_lp(data, C=1.0, dim=1)
        assert res.weights[0] == pytest.approx(0.0, abs=1e-9)
        assert res.slacks.sum() == pytest.approx(2.0, abs=1e-9)

    def test_slack_reconstruction_matches_solver(self):
        rng = random.Random(2)
        dim = 12
        data = []
        for _ in range(60):
            x = {rng.randrange(dim): rng.randint(1, 3) for _ in range(3)}
            xp = {rng.randrange(dim): rng.randint(1, 3) for _ in range(3)}
            delta = float(rng.random() < 0.5)
            data.append(RankingTuple(x, xp, delta, rng.choice((0.5, 1.0, 2.0)), "lp"))
        res = train_lp(data, C=5.0, dim=dim)
        for t, z in zip(data, res.slacks):
            assert abs(hinge_slack(res.weights, t) - z) <= 1e-6


class TestTuneC:
    def test_single_value_grid(self):
        data = [RankingTuple({0: 1}, {}, 1.0, 1.0, "lp")]
        c, _, _ = tune_c(data, data, 1, grid=(0.25,))
        assert c == 0.25

    def test_ties_prefer_smallest(self):
        # trivially satisfiable: every C gives loss 0
        data = [RankingTuple({0: 2}, {0: 1}, 0.0, 1.0, "ls")]
        c, _, _ = tune_c(data, data, 1, grid=(10.0, 0.1, 1.0))
        assert c == 0.1

    def test_validation_drives_choice(self):
        train = [RankingTuple({0: 1}, {}, 1.0, 1.0, "lp")]
        val = [RankingTuple({0: 1}, {}, 1.0, 1.0, "lp")]
        c, res, loss = tune_c(train, val, 1, grid=(1e-3, 1e3))
        assert c == 1e3 and loss == pytest.approx(0.0, abs=1e-9)

    def test_split_80_20(self):
        items = [(f"i{n}", None, None) for n in range(10)]
        train, val = split_train_val(items, 0.8)
        assert len(train) == 8 and len(val) == 2

    def test_order_by_size_then_name(self, bw2, bw3_stack):
        ordered = order_instances([("bbb", bw3_stack, []), ("aaa", bw2, []),
                                   ("aab", bw2, [])])
        assert [n for n, _, _ in ordered] == ["aaa", "aab", "bbb"]


class TestEvaluate:
    def test_dot_product(self, bw2):
        model = LinearModel(np.array([2.0, -1.0]), ColorDictionary().freeze(), "aoag", 0)
        model.feature_vector = lambda task, state, rho: {0: 3, 1: 4}
        assert evaluate(model, bw2, bw2.initial_state, ROOT) == 2.0

    def test_zero_weights(self, bw2):
        d = ColorDictionary()
        phi(bw2, bw2.initial_state, ROOT, "aoag", 2, d)
        d.freeze()
        model = LinearModel(np.zeros(len(d)), d, "aoag", 2)
        assert evaluate(model, bw2, bw2.initial_state, ROOT) == 0.0

    def test_search_adapter_negates(self, bw2):
        d = ColorDictionary()
        fv = phi(bw2, bw2.initial_state, ROOT, "aoag", 2, d)
        d.freeze()
        w = np.zeros(len(d))
        for i in fv:
            w[i] = 1.0
        model = LinearModel(w, d, "aoag", 2)
        score = evaluate(model, bw2, bw2.initial_state, ROOT)
        assert model.state_heuristic(bw2)(bw2.initial_state) == -score
        assert model.heuristic(bw2)(bw2.initial_state, ROOT) == -score


def tiny_corpus(n=6, blocks=(3, 4)):
    corpus = []
    seed = 0
    while len(corpus) < n:
        task = generate_task("blocksworld", seed=seed, blocks=blocks[len(corpus) % len(blocks)])
        seed += 1
        plan_keys = oracles.bfs_plan(task)
        if not plan_keys:
            continue
        plan = [GroundAction(task.schema(name), args) for name, args in plan_keys]
        corpus.append((f"bw-{seed}", task, plan))
    return corpus


class TestTrainModel:
    def test_pipeline_and_report(self):
        corpus = tiny_corpus()
        model, report = train_model(corpus, TrainConfig(graph_kind="aoag"))
        assert report.dataset_size == sum(report.kind_counts.values())
        assert report.train_tuples + report.val_tuples + report.degenerate == report.dataset_size
        assert report.chosen_c in TrainConfig().c_grid
        assert len(model.weights) == len(model.dictionary)
        assert model.metadata["c"] == repr(report.chosen_c)

    def test_partial_dataset_larger_than_state_sibling_subset(self):
        corpus = tiny_corpus()
        _, report = train_model(corpus, TrainConfig(graph_kind="aoag"))
        assert report.ss_only_ratio > 1.0

    def test_needs_two_instances(self, bw2):
        with pytest.raises(ValueError):
            split_train_val([("one", bw2, [])], 0.8)


class TestArgmaxSanity:
    def test_plan_action_outranks_state_siblings(self):
        """On its own training steps, the trained model scores the plan's fully
        instantiated node strictly above every other applicable action for the
        vast majority of steps."""
        corpus = tiny_corpus(n=10, blocks=(5, 6))
        model, _ = train_model(corpus, TrainConfig(graph_kind="aoag"))
        steps = good = 0
        for _, task, plan in corpus:
            state = task.initial_state
            for action in plan:
                siblings = [a for a in instantiations(task, state, ROOT) if a != action]
                if siblings:
                    steps += 1
                    chosen = evaluate(model, task, state,
                                      PartialAction(action.schema, action.args))
                    if all(chosen > evaluate(model, task, state,
                                             PartialAction(a.schema, a.args))
                           for a in siblings):
                        good += 1
                state = _apply_effects(task, state, action)
        assert steps > 0
        assert good / steps >= 0.9, f"{good}/{steps}"


class TestModelIO:
    def test_roundtrip_preserves_evaluations(self, tmp_path):
        corpus = tiny_corpus()
        model, _ = train_model(corpus, TrainConfig(graph_kind="aoag"))
        path = tmp_path / "m.model"
        save_model(model, str(path))
        loaded = load_model(str(path))
        assert loaded.graph_kind == model.graph_kind
        assert loaded.iterations == model.iterations
        checked = 0
        for _, task, plan in corpus[:2]:
            state = task.initial_state
            for action in plan:
                nodes = [ROOT] + [
                    PartialAction(action.schema, action.args[:k])
                    for k in range(len(action.args) + 1)
                ]
                for rho in nodes:
                    a = evaluate(model, task, state, rho)
                    b = evaluate(loaded, task, state, rho)
                    assert a == b  # bit-identical
                    checked += 1
                state = _apply_effects(task, state, action)
        assert checked >= 20

    def test_truncated_file_rejected(self, tmp_path):
        corpus = tiny_corpus(n=2)
        model, _ = train_model(corpus, TrainConfig(graph_kind="aoag"))
        path = tmp_path / "m.model"
        save_model(model, str(path))
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(CorruptModel):
            load_model(str(path))

    def test_wrong_version_rejected(self, tmp_path):
        corpus = tiny_corpus(n=2)
        model, _ = train_model(corpus, TrainConfig(graph_kind="aoag"))
        path = tmp_path / "m.model"
        save_model(model, str(path))
        text = path.read_text().replace("LLMODEL v1", "LLMODEL v9", 1)
        path.write_text(text)
        with pytest.raises(FormatVersionMismatch):
            load_model(str(path))

    def test_checksum_mismatch_rejected(self, tmp_path):
        corpus = tiny_corpus(n=2)
        model, _ = train_model(corpus, TrainConfig(graph_kind="aoag"))
        path = tmp_path / "m.model"
        save_model(model, str(path))
        lines = path.read_text().splitlines()
        lines[2] = lines[2] + " "
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptModel):
            load_model(str(path))
