from itertools import combinations

import numpy as np
import pytest

from conftest import make_instance
from models.cluster import Schedule
from models.errors import InfeasibleError
from models.instance import generate
from services.cluster_generator import (base_stock, check_cc2, cluster_loads, delivery_load, enumerate_clusters,
                                        forced_clusters, gap_screen, is_feasible, order_distribution,
                                        parse_cluster_spec, price_cluster, replenishment_limit, round_half_up,
                                        uncovered_customers)
from services.stochastics import Gaussian, partial_expectation_pos


class TestBaseStock:

    def test_example_levels(self, example):
        schedule = Schedule(7, (1, 4, 6))
        for cid, expected in ((1, [371, 258, 258]), (2, [892, 616, 616])):
            demand = example.customer(cid).demand
            levels = [base_stock(demand, n, example.alpha) for n, _ in schedule.gaps().values()]
            assert levels == expected

    def test_round_half_up(self):
        assert round_half_up(2.5) == 3
        assert round_half_up(2.4999) == 2
        assert round_half_up(-0.5) == 0

    def test_deterministic_demand(self):
        assert base_stock(Gaussian(40, 0), 3, 0.95) == 120

    def test_invalid_gap(self):
        with pytest.raises(ValueError):
            base_stock(Gaussian(1, 1), 0, 0.95)


class TestOrderDistribution:

    def test_example_monday(self, example):
        # segunda-feira: n = 3 até quinta, m = 2 desde sábado
        load = delivery_load([example.customer(i).demand for i in (1, 2)], 3, 2, example.alpha)
        assert load.mean - example.Q == pytest.approx(-110.79, abs=0.05)
        assert load.std == pytest.approx(79.06, abs=0.05)
        assert partial_expectation_pos(load.shift(-example.Q)) == pytest.approx(2.89, abs=0.05)

    def test_daily_order_is_demand(self):
        g = order_distribution(Gaussian(100, 20), 1, 1, 0.95)
        assert g == Gaussian(100, 20)

    def test_cc2(self):
        assert check_cc2(Gaussian(1089.21, 79.06), 1200, 0.9)
        assert not check_cc2(Gaussian(1150, 79.06), 1200, 0.9)
        assert check_cc2(Gaussian(1200, 0), 1200, 0.9)
        assert not check_cc2(Gaussian(1200.1, 0), 1200, 0.9)


class TestPricing:

    def test_example_cluster_costs(self, example_clusters):
        c12, c3 = example_clusters
        assert c12.customers == (1, 2) and c3.customers == (3,)
        assert c12.cT == 1020
        assert c3.cT == 880
        assert c12.cH == pytest.approx(863, abs=1.5)
        assert c3.cH == pytest.approx(885, abs=1.5)
        assert c12.cE == pytest.approx(72.2, abs=1.0)
        assert c3.cE == pytest.approx(77.4, abs=1.0)

    def test_base_stocks_recorded(self, example_clusters):
        c12 = example_clusters[0]
        assert c12.base_stocks[(1, 1)] == 371
        assert c12.base_stocks[(2, 4)] == 616

    def test_flow_conservation(self):
        inst = generate(5, 6, T=7)
        rng = np.random.default_rng(8)
        for _ in range(1000):
            size = int(rng.integers(1, 3))
            members = tuple(sorted(int(x) for x in rng.choice(inst.customer_ids, size=size, replace=False)))
            mask = int(rng.integers(1, 1 << inst.T))
            c = price_cluster(inst, members, Schedule.from_mask(mask, inst.T))
            expected = inst.T * sum(inst.customer(i).demand.mean for i in members)
            assert c.delta.sum() == pytest.approx(expected, abs=1e-6)
            assert (c.delta[[t - 1 for t in range(1, inst.T + 1) if t not in c.schedule.periods]] == 0).all()

    def test_loads_match_profiles(self, example, example_clusters):
        c12 = example_clusters[0]
        loads = cluster_loads(example, c12)
        assert sorted(loads) == [1, 4, 6]
        for t, g in loads.items():
            assert c12.delta[t - 1] == pytest.approx(g.mean)
            assert c12.lam[t - 1] == pytest.approx(g.variance)


class TestSchedule:

    def test_gaps(self):
        s = Schedule(7, (1, 4, 6))
        assert s.gaps() == {1: (3, 2), 4: (2, 3), 6: (2, 2)}
        assert s.max_gap == 3
        assert s.label() == "Mo/Th/Sa"

    def test_label_in_export(self, example_clusters):
        assert [c.to_dict()["schedule"] for c in example_clusters] == ["Mo/Th/Sa", "Tu/We/Fr/Su"]

    def test_single_delivery(self):
        assert Schedule(7, (3,)).gaps() == {3: (7, 7)}

    def test_mask_round_trip(self):
        assert Schedule.from_mask(0b0101001, 7).periods == (1, 4, 6)
        assert Schedule(7, (6, 1, 4)).mask == 0b0101001

    def test_invalid(self):
        with pytest.raises(ValueError):
            Schedule(7, ())
        with pytest.raises(ValueError):
            Schedule(7, (8,))


class TestScreens:

    def test_replenishment_limit(self, example):
        # customer 3: 500n + 123.4√n <= 1200 só para n = 1, 2
        assert replenishment_limit(example, example.customer(3)) == 2
        assert replenishment_limit(example, example.customer(1)) == 7

    def test_gap_screen_never_cuts_feasible_schedules(self):
        inst = generate(3, 5, T=7)
        for size in (1, 2, 3):
            for members in combinations(inst.customer_ids, size):
                demands = [inst.customer(i).demand for i in members]
                ub = gap_screen(inst, demands)
                for mask in range(1, 1 << inst.T):
                    s = Schedule.from_mask(mask, inst.T)
                    if is_feasible(inst, members, s):
                        assert s.max_gap <= ub


def oracle_keys(inst, max_size):
    keys = set()
    for size in range(1, max_size + 1):
        for members in combinations(sorted(inst.customer_ids), size):
            for mask in range(1, 1 << inst.T):
                s = Schedule.from_mask(mask, inst.T)
                if is_feasible(inst, members, s):
                    keys.add((members, s.periods))
    return keys


class TestEnumeration:

    @pytest.mark.parametrize("seed,n,T", [(1, 5, 5), (2, 4, 7), (3, 6, 4)])
    def test_matches_exhaustive_enumeration(self, seed, n, T):
        inst = generate(seed, n, T=T)
        pool = enumerate_clusters(inst, threads=2)
        assert {c.key for c in pool.clusters} == oracle_keys(inst, n)

    def test_pool_is_canonical(self):
        inst = generate(4, 5, T=5)
        a = enumerate_clusters(inst, threads=1)
        b = enumerate_clusters(inst, threads=4)
        assert [c.key for c in a.clusters] == [c.key for c in b.clusters]
        assert [c.id for c in a.clusters] == list(range(len(a)))
        assert [c.key for c in a.clusters] == sorted(c.key for c in a.clusters)

    def test_every_cluster_satisfies_constraints(self):
        inst = generate(9, 6, T=7)
        pool = enumerate_clusters(inst)
        for c in pool.clusters:
            for t, g in cluster_loads(inst, c).items():
                assert check_cc2(g, inst.Q, inst.gamma)
            assert all(s <= inst.customer(i).U for (i, _), s in c.base_stocks.items())

    def test_example_pool_contains_solution(self, example):
        pool = enumerate_clusters(example)
        keys = {c.key: c for c in pool.clusters}
        assert keys[((1, 2), (1, 4, 6))].cT == 1020
        assert ((3,), (2, 3, 5, 7)) in keys
        assert uncovered_customers(pool) == []

    def test_uncovered_customer(self):
        inst = make_instance([(100, 10), (1500, 10)], Q=1000.0, U=5000.0)
        pool = enumerate_clusters(inst)
        assert uncovered_customers(pool) == [2]


class TestForcedClusters:

    def test_parse(self):
        specs = parse_cluster_spec("2,1@1,4,6 3@2,3,5,7", 7)
        assert specs[0] == ((1, 2), Schedule(7, (1, 4, 6)))
        assert specs[1][0] == (3,)
        with pytest.raises(ValueError):
            parse_cluster_spec("1,2-1,4", 7)

    def test_rejects_non_partition(self, example):
        with pytest.raises(InfeasibleError):
            forced_clusters(example, parse_cluster_spec("1,2@1,4,6", 7))

    def test_rejects_infeasible_schedule(self, example):
        # cliente 3 não cabe em um intervalo de 7 dias
        with pytest.raises(InfeasibleError):
            forced_clusters(example, parse_cluster_spec("1,2@1,4,6 3@1", 7))
