import math

import numpy as np
import pytest

from conftest import ORIGINAL_SCHEDULE, POSTPONED_SCHEDULE, make_instance
from models.cluster import ClusterPool, PenaltyParams
from models.errors import ConfigError, InadmissibleActionError
from services import mdp_solver
from services.cluster_generator import forced_clusters, parse_cluster_spec
from services.simulator import simulate
from services.stochastics import Gaussian, discretize
from solvers.base_solver import make_selection


def hand_model(**kw):
    args = dict(T=1, capacity=4500, step=5, omega2_min=-100, omega2_max=4600,
                K1=1000.0, K2=2500.0, b1=10.0, b2=2.0)
    args.update(kw)
    return mdp_solver.MdpModel(**args)


def outflow_of(laws, step=5):
    return mdp_solver.OutflowModel(tuple(laws), tuple(discretize(g, step) for g in laws))


def small_problem(T=3, fixed_period_cost=0.0):
    inst = make_instance([(50, 5)], T=T, capacity=500)
    outflow = outflow_of([Gaussian(50, 20)] * T)
    model = mdp_solver.build_model(inst, outflow, 5, fixed_period_cost=fixed_period_cost)
    return model, outflow


def forced_selection(inst, spec):
    clusters = forced_clusters(inst, parse_cluster_spec(spec, inst.T))
    pool = ClusterPool(inst.T, tuple(inst.customer_ids), clusters)
    return make_selection(pool, range(len(clusters)), PenaltyParams())


class TestActionCost:

    def test_examples(self):
        model = hand_model()
        assert mdp_solver.action_cost(model, -10, 60, 0) == 4100
        assert mdp_solver.action_cost(model, 50, 0, 0) == 0
        assert mdp_solver.action_cost(model, 50, 0, 30) == -60

    @pytest.mark.parametrize("omega2,q1,q2", [(50, 10, 10), (50, 0, 60), (4490, 20, 0), (0, -5, 0), (-10, 0, 0)])
    def test_inadmissible(self, omega2, q1, q2):
        with pytest.raises(InadmissibleActionError):
            mdp_solver.action_cost(hand_model(), omega2, q1, q2)

    def test_fixed_cost_every_period(self):
        assert mdp_solver.action_cost(hand_model(fixed_period_cost=7.5), 50, 0, 0) == 7.5


class TestBuildModel:

    def test_step_must_divide_capacity(self):
        inst = make_instance([(50, 5)])
        with pytest.raises(ConfigError):
            mdp_solver.build_model(inst, outflow_of([Gaussian(10, 5)] * 3, step=7), step=7)

    def test_grid_covers_reachable_states(self):
        model, outflow = small_problem()
        assert model.levels == 101
        assert model.omega2_min == -outflow.pmfs[0].max_support
        assert model.omega2_max == 500 - outflow.pmfs[0].min_support
        assert model.omega2[0] == model.omega2_min and model.omega2[-1] == model.omega2_max

    def test_outflow_from_selection(self, example):
        sel = forced_selection(example, ORIGINAL_SCHEDULE)
        outflow = mdp_solver.build_outflow(sel, example)
        assert outflow.T == 7
        assert outflow.mean_cycle_outflow() == pytest.approx(0.0, abs=1e-6)
        monday = outflow.laws[0]
        assert monday.mean == pytest.approx(sel.delta_profile[0] - 850)
        assert monday.variance == pytest.approx(sel.lambda_profile[0] + 120 ** 2)


@pytest.fixture(scope="module")
def zero_outflow():
    inst = make_instance([(50, 0)], T=3)
    outflow = outflow_of([Gaussian(0, 0)] * 3)
    model = mdp_solver.build_model(inst, outflow)
    return model, mdp_solver.solve(model, outflow)


@pytest.fixture(scope="module")
def solved():
    model, outflow = small_problem()
    return model, outflow, mdp_solver.solve(model, outflow)


def solve_example(example, spec, step=mdp_solver.DEFAULT_STEP):
    sel = forced_selection(example, spec)
    outflow = mdp_solver.build_outflow(sel, example, step)
    return sel, mdp_solver.solve(mdp_solver.build_model(example, outflow, step), outflow)


@pytest.fixture(scope="module")
def example_policies(example):
    return {name: solve_example(example, spec)
            for name, spec in (('original', ORIGINAL_SCHEDULE), ('postponed', POSTPONED_SCHEDULE))}


class TestZeroOutflow:

    def test_nothing_to_buy(self, zero_outflow):
        model, policy = zero_outflow
        assert policy.gain == 0
        assert policy.cycle_cost == 0
        assert (policy.q1 == 0).all() and (policy.q2 == 0).all()

    def test_sS_is_degenerate(self, zero_outflow):
        _, policy = zero_outflow
        rows = mdp_solver.extract_sS(policy)
        assert [r.status for r in rows] == ['degenerate'] * 3
        assert all(r.s == -math.inf and r.S is None for r in rows)


class TestValueIteration:

    def test_converges(self, solved):
        model, outflow, policy = solved
        assert policy.final_span < mdp_solver.DEFAULT_EPSILON
        assert mdp_solver.bellman_residual(model, outflow, policy) < mdp_solver.DEFAULT_EPSILON
        # 150 kg por ciclo custam pelo menos 1500 de compra
        assert policy.cycle_cost >= 1500
        assert policy.gain == pytest.approx(policy.cycle_cost / 3)

    def test_every_action_admissible(self, solved):
        model, _, policy = solved
        for t in range(model.T):
            for j, w in enumerate(model.omega2):
                q1, q2 = int(policy.q1[t, j]), int(policy.q2[t, j])
                assert q1 == 0 or q2 == 0
                assert 0 <= policy.target[t, j] <= model.capacity
                assert mdp_solver.action_cost(model, int(w), q1, q2) == pytest.approx(policy.costs[t, j])

    def test_excess_is_sold_and_shortage_bought(self, solved):
        model, _, policy = solved
        above = model.omega2 > model.capacity
        below = model.omega2 < 0
        assert above.any() and below.any()
        assert (policy.q2[:, above] > 0).all()
        assert (policy.q1[:, below] > 0).all()

    def test_chosen_action_is_greedy(self, solved):
        model, _, policy = solved
        t, w = 2, 120
        chosen = int(policy.target[t - 1, model.omega2_index(w)])
        best = min(policy.decision_cost(t, w, k) for k in model.omega1.tolist())
        assert policy.decision_cost(t, w, chosen) == pytest.approx(best)

    def test_sS_summary(self, solved):
        _, _, policy = solved
        rows = mdp_solver.extract_sS(policy)
        assert [r.t for r in rows] == [1, 2, 3]
        for r in rows:
            assert r.status in ('sS', 'non_sS', 'degenerate')
            if r.status != 'degenerate':
                assert 0 <= r.S <= policy.model.capacity
                assert r.s <= policy.model.omega2_max + policy.model.step

    def test_fixed_cost_shifts_cycle_cost(self, solved):
        _, _, policy = solved
        model, outflow = small_problem(fixed_period_cost=12.0)
        shifted = mdp_solver.solve(model, outflow)
        assert shifted.cycle_cost == pytest.approx(policy.cycle_cost + 12.0 * 3, abs=1e-6)

    def test_invalid_epsilon(self):
        model, outflow = small_problem()
        with pytest.raises(ConfigError):
            mdp_solver.solve(model, outflow, epsilon=0)

    def test_policy_table(self, solved):
        model, _, policy = solved
        rows = mdp_solver.policy_table(policy)
        assert len(rows) == model.T * len(model.omega2)
        assert rows[0] == {'t': 1, 'omega2': model.omega2_min, 'q1': int(policy.q1[0, 0]), 'q2': 0}


# (s, S) esperados no calendário original, de segunda a domingo
REFERENCE_SS = [(0, 385), (340, 795), (30, 605), (315, 805), (70, 670), (350, 820), (330, 640)]


@pytest.mark.slow
class TestExampleSchedules:

    def test_postponing_delivery_costs_more(self, example_policies):
        original, postponed = example_policies['original'], example_policies['postponed']
        assert postponed[1].cycle_cost > original[1].cycle_cost
        assert postponed[0].tactical_cost == pytest.approx(original[0].tactical_cost)

    def test_reported_magnitudes(self, example_policies):
        sel, policy = example_policies['original']
        assert sel.tactical_cost == pytest.approx(3797.6, abs=5)
        assert policy.cycle_cost == pytest.approx(782, rel=0.10)
        postponed_sel, postponed = example_policies['postponed']
        assert postponed.cycle_cost == pytest.approx(2025, rel=0.10)
        increase = (postponed_sel.tactical_cost + postponed.cycle_cost) / (sel.tactical_cost + policy.cycle_cost) - 1
        assert 100 * increase == pytest.approx(27, abs=3)

    def test_sS_table(self, example_policies):
        _, policy = example_policies['original']
        rows = mdp_solver.extract_sS(policy)
        assert [r.t for r in rows] == list(range(1, 8))
        close = 0
        for row, (s, S) in zip(rows, REFERENCE_SS):
            close += row.s is not None and abs(row.s - s) <= 10
            close += row.S is not None and abs(row.S - S) <= 10
        assert close >= 10

    def test_excess_above_capacity_is_sold_exactly(self, example_policies):
        _, policy = example_policies['original']
        model = policy.model
        above = model.omega2 > model.capacity
        assert above.any()
        np.testing.assert_array_equal(policy.q2[:, above], np.broadcast_to(model.omega2[above] - model.capacity,
                                                                           policy.q2[:, above].shape))
        assert (policy.q1[:, above] == 0).all()

    def test_finer_grid_barely_moves_the_gain(self, example, example_policies):
        _, coarse = example_policies['original']
        _, fine = solve_example(example, ORIGINAL_SCHEDULE, step=2)
        assert fine.gain == pytest.approx(coarse.gain, rel=0.02)

    def test_simulation_stays_on_the_grid(self, example, example_policies):
        sel, policy = example_policies['original']
        report = simulate(sel, example, policy, 7000, seed=1)
        assert report.clamp_count == 0
