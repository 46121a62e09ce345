"""
Gravação dos artefatos: JSON com chaves ordenadas e CSV via pandas com formato fixo
de ponto flutuante, para que reexecuções gerem arquivos idênticos byte a byte.
"""
import json
import math
from pathlib import Path

import pandas as pd

from services.mdp_solver import extract_sS, policy_table

FLOAT_FORMAT = '%.6f'


def _clean(obj):
    # JSON não tem infinito; s = -inf vira null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, payload) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n", encoding='utf-8')
    return str(path)


def write_csv(path, rows, columns=None) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=columns)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return str(path)


def write_pool_jsonl(path, pool) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as fh:
        for c in pool.clusters:
            fh.write(json.dumps(_clean(c.to_dict()), sort_keys=True) + "\n")
    return str(path)


def selection_payload(sel) -> dict:
    payload = sel.to_dict()
    payload['objective'] = sel.objective
    return payload


def policy_payload(policy) -> dict:
    return {
        'T': policy.model.T,
        'capacity': policy.model.capacity,
        'step': policy.model.step,
        'gain': policy.gain,
        'cycle_cost': policy.cycle_cost,
        'iterations': policy.iterations,
        'final_span': policy.final_span,
        'actions': policy_table(policy),
    }


def sS_rows(policy) -> list[dict]:
    return [{'t': r.t, 's': r.s if math.isfinite(r.s) else None, 'S': r.S, 'status': r.status}
            for r in extract_sS(policy)]


def write_sS_csv(path, policy) -> str:
    return write_csv(path, sS_rows(policy), columns=['t', 's', 'S', 'status'])


def write_trace_csv(path, trace) -> str:
    return write_csv(path, trace, columns=['period', 't', 'omega1', 'outflow', 'omega2', 'q1', 'q2', 'cost'])


def write_records_csv(path, records, optimal=None) -> str:
    rows = [r.row() for r in records]
    columns = ['eta1', 'eta2', 'tactical', 'mdp', 'total']
    if optimal is not None:
        for row, flag in zip(rows, optimal):
            row['optimal'] = int(flag)
        columns.append('optimal')
    return write_csv(path, rows, columns=columns)


def record_payload(record) -> dict:
    return {
        'eta1': record.eta1, 'eta2': record.eta2,
        'tactical_cost': record.tactical_cost,
        'mdp_cycle_cost': record.mdp_cycle_cost,
        'total': record.total,
        'penalty_value': record.penalty_value,
        'cluster_ids': list(record.cluster_ids),
    }


# --- Relatório no formato da tabela de desempenho ---

TABLE_COLUMNS = ['scenario', 'n_rep', 'delta_avg_pct', 'delta_max_pct',
                 'sbs_obj_mip', 'sbs_obj_mdp', 'ls_obj_mip', 'ls_obj_mdp', 'avg_iter']


def performance_table(rows: list[dict]) -> pd.DataFrame:
    """
    Agrega por cenário as execuções de busca: Δ% médio e máximo, objetivos médios
    do passo a passo e da busca em linha e número médio de iterações.
    """
    if not rows:
        return pd.DataFrame(columns=TABLE_COLUMNS)
    df = pd.DataFrame(rows)
    grouped = df.groupby('scenario', sort=True)
    table = pd.DataFrame({
        'n_rep': grouped.size(),
        'delta_avg_pct': grouped['delta_pct'].mean(),
        'delta_max_pct': grouped['delta_pct'].max(),
        'sbs_obj_mip': grouped['sbs_tactical'].mean(),
        'sbs_obj_mdp': grouped['sbs_mdp'].mean(),
        'ls_obj_mip': grouped['ls_tactical'].mean(),
        'ls_obj_mdp': grouped['ls_mdp'].mean(),
        'avg_iter': grouped['iterations'].mean(),
    }).reset_index()
    return table[TABLE_COLUMNS]


def write_performance_table(path, table: pd.DataFrame) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return str(path)
