import json

import pytest

from models.db_handler import DatabaseHandler
from services.search import EvalRecord


@pytest.fixture
def db(tmp_path):
    handler = DatabaseHandler(str(tmp_path / "teste.db"))
    yield handler
    handler.close()


def record(eta1, eta2, total, ids=(0, 3)):
    return EvalRecord(eta1, eta2, total - 10.0, 10.0, total, ids, mip_seconds=0.5, mdp_seconds=1.5)


def test_logs(db):
    db.log_event("primeira")
    db.log_event("segunda")
    rows = db.conn.execute("SELECT message, created_at FROM system_logs ORDER BY id").fetchall()
    assert [m for m, _ in rows] == ["primeira", "segunda"]
    assert all(created for _, created in rows)


def test_log_never_raises(db):
    db.conn.execute("DROP TABLE system_logs")
    db.log_event("sem tabela")


def test_runs_and_records(db):
    run_id = db.start_run('search', 'base_n4_t3_L_s1', {'step': 5, 'zeta': '1.0,0.5'})
    db.insert_eval_records(run_id, 'history', [record(0, 0, 110), record(1, 0, 100)])
    db.insert_eval_records(run_id, 'line_search', [record(1, 0, 100)])

    (rid, command, name, config), = db.fetch_runs('search')
    assert (rid, command, name) == (run_id, 'search', 'base_n4_t3_L_s1')
    assert json.loads(config) == {'step': 5, 'zeta': '1.0,0.5'}
    assert db.fetch_runs('grid') == []

    history = db.fetch_eval_records(run_id, 'history')
    assert [r[5] for r in history] == [110, 100]
    kind, eta1, eta2, tactical, mdp, total, ids, mip_s, mdp_s = history[0]
    assert (kind, eta1, eta2, tactical, mdp) == ('history', 0, 0, 100, 10)
    assert json.loads(ids) == [0, 3]
    assert (mip_s, mdp_s) == (0.5, 1.5)
    assert len(db.fetch_eval_records(run_id)) == 3


def test_unknown_kind(db):
    run_id = db.start_run('grid', 'x', {})
    with pytest.raises(ValueError):
        db.insert_eval_records(run_id, 'outro', [record(0, 0, 1)])
