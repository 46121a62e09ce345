import json
from dataclasses import FrozenInstanceError

import numpy as np
import pytest

from conftest import DATA_DIR, make_instance
from models.errors import InstanceError
from models.instance import (BASE_DEFAULTS, generate, instance_from_dict, instance_to_dict, load_instance,
                             save_instance, scale, validate)
from services.stochastics import Gaussian


class TestLoad:

    def test_example_fixture(self, example):
        assert example.T == 7
        assert example.customer_ids == [1, 2, 3]
        assert example.producer.capacity == 1500
        assert example.explicit_distances
        assert example.distance(0, 1) == 4
        assert example.distance(1, 2) == 3
        assert example.distance(2, 0) == 5
        assert validate(example) == []

    @pytest.mark.parametrize("name,n", [("case_emmen", 10), ("case_eemshaven1", 17), ("case_eemshaven2", 24)])
    def test_case_fixtures_need_distances(self, name, n):
        inst = load_instance(DATA_DIR / f"{name}.json")
        assert inst.n_customers == n
        # oferta média igual à demanda média total
        assert inst.producer.supply.mean == pytest.approx(sum(c.demand.mean for c in inst.customers))
        codes = [v.code for v in validate(inst)]
        assert codes == ['distances_missing']
        with pytest.raises(InstanceError):
            inst.distance(0, 1)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InstanceError):
            load_instance(tmp_path / "nao_existe.json")

    def test_malformed_document(self):
        with pytest.raises(InstanceError):
            instance_from_dict({'T': 7, 'customers': []})

    def test_matrix_wins_over_coordinates(self, example):
        doc = instance_to_dict(example)
        for k, c in enumerate(doc['customers']):
            c.update({'x': 100.0 * k, 'y': 0.0})
        doc['producer'].update({'x': 0.0, 'y': 0.0})
        inst = instance_from_dict(doc)
        assert inst.distance(0, 1) == 4

    def test_coordinates_give_euclidean(self):
        inst = make_instance([(100, 10), (100, 10)])
        assert inst.distance(0, 2) == pytest.approx(2.0)
        assert inst.distance(1, 2) == pytest.approx(1.0)

    def test_save_and_load(self, example, tmp_path):
        path = tmp_path / "copia.json"
        save_instance(example, path)
        again = load_instance(path)
        assert again.customers == example.customers
        assert again.producer == example.producer
        np.testing.assert_array_equal(again.distances, example.distances)


class TestValidate:

    def test_reports_every_violation(self, example):
        doc = instance_to_dict(example)
        doc['alpha'] = 1.5
        doc['producer']['b2'] = 50
        doc['distances'][0][1] = 9
        codes = {v.code for v in validate(instance_from_dict(doc))}
        assert {'alpha_range', 'sell_above_buy', 'distance_symmetry'} <= codes

    def test_singleton_infeasible(self):
        inst = make_instance([(900, 100)], Q=1000.0)
        codes = [v.code for v in validate(inst)]
        assert 'singleton_cc2_infeasible' in codes

    def test_base_stock_above_capacity(self):
        inst = make_instance([(300, 30)], U=200.0)
        codes = [v.code for v in validate(inst)]
        assert 'base_stock_exceeds_capacity' in codes

    def test_shape_mismatch(self):
        inst = make_instance([(100, 10)], distances=np.zeros((3, 3)))
        assert 'distance_shape' in [v.code for v in validate(inst)]


class TestGenerate:

    def test_defaults(self):
        inst = generate(7, 15)
        assert inst.n_customers == 15
        assert inst.T == 7
        assert inst.W == BASE_DEFAULTS['W'] and inst.Q == BASE_DEFAULTS['Q']
        assert inst.producer.capacity == 4500
        assert inst.producer.supply.mean == pytest.approx(sum(c.demand.mean for c in inst.customers))
        assert inst.name == "base_n15_t7_L_s7"
        for c in inst.customers:
            assert 100 <= c.demand.mean <= 400
            assert 0.025 * c.demand.mean - 1e-3 <= c.demand.std <= 0.05 * c.demand.mean + 1e-3

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_instance(generate(7, 15), a)
        save_instance(generate(7, 15), b)
        assert a.read_bytes() == b.read_bytes()

    def test_different_seeds_differ(self):
        assert generate(1, 5).customers != generate(2, 5).customers

    def test_param_override_and_unknown(self):
        assert generate(1, 3, params={'Q': 1500}).Q == 1500
        with pytest.raises(InstanceError):
            generate(1, 3, params={'nao_existe': 1})
        with pytest.raises(InstanceError):
            generate(1, 3, uncertainty='X')


class TestScale:

    def test_multipliers(self, example):
        s = scale(example, m_s=1.1, m_p=2.0, m_d=0.5)
        assert s.producer.supply.mean == pytest.approx(935.0)
        assert s.producer.supply.std == pytest.approx(120 * 1.1 * 2.0)
        assert [c.demand.std for c in s.customers] == pytest.approx([12.5, 25.0, 37.5])
        assert [c.demand.mean for c in s.customers] == [100, 250, 500]
        # original intacta
        assert example.producer.supply == Gaussian(850, 120)

    def test_negative_rejected(self, example):
        with pytest.raises(InstanceError):
            scale(example, m_p=-1)

    def test_composition_is_exact(self, example):
        once = scale(example, m_s=0.3, m_p=0.6, m_d=1.5)
        twice = scale(scale(example, m_s=0.1, m_p=0.2, m_d=0.5), m_s=3, m_p=3, m_d=3)
        assert twice.multipliers == once.multipliers == (0.3, 0.6, 1.5)
        assert twice.producer.supply == once.producer.supply
        assert twice.customers == once.customers
        assert twice.origin is example

    def test_back_to_one_restores_original(self, example):
        back = scale(scale(example, m_d=0.1), m_d=10)
        assert back.customers == example.customers


class TestImmutable:

    def test_fields_cannot_be_assigned(self, example):
        with pytest.raises(FrozenInstanceError):
            example.Q = 1.0
        with pytest.raises(FrozenInstanceError):
            example.distances = None

    def test_containers_are_read_only(self, example):
        assert isinstance(example.customers, tuple)
        with pytest.raises(ValueError):
            example.distances[0, 1] = 99.0


def test_base_defaults_fixture_matches_constants():
    doc = json.loads((DATA_DIR / "base_defaults.json").read_text(encoding='utf-8'))
    assert doc == pytest.approx(BASE_DEFAULTS)
