"""
Busca conjunta nos parâmetros de penalidade (η1, η2).

Cada avaliação resolve o particionamento com penalidades, monta a saída líquida da
seleção obtida, resolve o MDP de compras e registra custo tático + custo do ciclo.
"""
from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

from models.cluster import PenaltyParams
from services import mdp_solver
from services.cluster_generator import cluster_loads
from services.parallel import worker_count
from services.solver_factory import SolverFactory
from services.stochastics import partial_expectation_pos

EPS_INIT = 0.0001
ZETA1, ZETA2 = 1.0, 0.5
UB1, UB2 = 8.0, 4.0

FULL_GRID_ETA1 = [0, 0.0001, 1, 2, 3, 4, 5, 6, 7, 8]
FULL_GRID_ETA2 = [0, 0.0001, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4]
REDUCED_GRID_ETA1 = [0, 0.0001, 1, 2, 3, 4, 5, 6, 7]
REDUCED_GRID_ETA2 = [0, 0.0001, 0.5, 1.0, 1.5, 2.0, 2.5]

OPTIMUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EvalRecord:
    eta1: float
    eta2: float
    tactical_cost: float
    mdp_cycle_cost: float
    total: float
    cluster_ids: tuple[int, ...]
    penalty_value: float = 0.0
    mip_seconds: float = 0.0
    mdp_seconds: float = 0.0
    selection: object = field(default=None, repr=False)
    policy: object = field(default=None, repr=False)

    def row(self) -> dict:
        return {'eta1': self.eta1, 'eta2': self.eta2, 'tactical': self.tactical_cost,
                'mdp': self.mdp_cycle_cost, 'total': self.total}


@dataclass
class SearchState:
    psi: int = 1
    i: int = 0
    zeta: tuple[float, float] = (ZETA1, ZETA2)
    ub: tuple[float, float] = (UB1, UB2)
    best: EvalRecord | None = None
    history: list = field(default_factory=list)
    iterations: int = 0


class JointEvaluator:
    """
    Avalia pares (η1, η2). Seleções idênticas não são resolvidas de novo no MDP e
    pares já vistos devolvem o mesmo registro; pode ser usado por várias threads.
    """

    def __init__(self, pool, inst, step=mdp_solver.DEFAULT_STEP, tail_mass=mdp_solver.DEFAULT_TAIL_MASS,
                 epsilon=mdp_solver.DEFAULT_EPSILON, solver=None, max_cycles=mdp_solver.MAX_CYCLES,
                 on_progress=None):
        self.pool = pool
        self.inst = inst
        self.step = step
        self.tail_mass = tail_mass
        self.epsilon = epsilon
        self.solver_name = solver
        self.max_cycles = max_cycles
        self.on_progress = on_progress
        self.factory = SolverFactory()
        self._lock = threading.Lock()
        self._by_eta = {}
        self._by_selection = {}

    def __call__(self, eta1, eta2) -> EvalRecord:
        return self.evaluate(eta1, eta2)

    def solve_mdp(self, sel):
        """(política, saída líquida, segundos) da seleção, reaproveitando resultados anteriores."""
        with self._lock:
            hit = self._by_selection.get(sel.cluster_ids)
        if hit is not None:
            return hit
        started = time.perf_counter()
        outflow = mdp_solver.build_outflow(sel, self.inst, self.step, self.tail_mass)
        model = mdp_solver.build_model(self.inst, outflow, self.step)
        policy = mdp_solver.solve(model, outflow, self.epsilon, self.max_cycles)
        result = (policy, outflow, time.perf_counter() - started)
        with self._lock:
            return self._by_selection.setdefault(sel.cluster_ids, result)

    def evaluate(self, eta1, eta2) -> EvalRecord:
        key = (float(eta1), float(eta2))
        with self._lock:
            hit = self._by_eta.get(key)
        if hit is not None:
            return hit

        params = PenaltyParams(*key)
        started = time.perf_counter()
        sel = self.factory.get_solver(self.solver_name).solve(self.pool, params)
        mip_seconds = time.perf_counter() - started
        policy, _, mdp_seconds = self.solve_mdp(sel)

        record = EvalRecord(
            eta1=key[0], eta2=key[1],
            tactical_cost=sel.tactical_cost,
            mdp_cycle_cost=policy.cycle_cost,
            total=sel.tactical_cost + policy.cycle_cost,
            cluster_ids=sel.cluster_ids,
            penalty_value=sel.penalty_value,
            mip_seconds=mip_seconds, mdp_seconds=mdp_seconds,
            selection=sel, policy=policy,
        )
        if self.on_progress:
            self.on_progress(f"(η1={key[0]:g}, η2={key[1]:g}): tático {record.tactical_cost:.2f} "
                             f"+ compras {record.mdp_cycle_cost:.2f} = {record.total:.2f}")
        with self._lock:
            record = self._by_eta.setdefault(key, record)
        return record

    def evaluate_selection(self, sel, eta1=0.0, eta2=0.0) -> EvalRecord:
        """Avalia uma seleção fixa (por exemplo, clusters informados explicitamente)."""
        policy, _, mdp_seconds = self.solve_mdp(sel)
        return EvalRecord(
            eta1=eta1, eta2=eta2, tactical_cost=sel.tactical_cost,
            mdp_cycle_cost=policy.cycle_cost, total=sel.tactical_cost + policy.cycle_cost,
            cluster_ids=sel.cluster_ids, mdp_seconds=mdp_seconds, selection=sel, policy=policy,
        )


def step_by_step(evaluate) -> EvalRecord:
    """Calendário escolhido só pelo custo tático; as compras são avaliadas depois."""
    return evaluate(0.0, 0.0)


def line_search(evaluate, zeta=(ZETA1, ZETA2), ub=(UB1, UB2), eps_init=EPS_INIT,
                on_progress=None) -> tuple[EvalRecord, SearchState]:
    """
    Aumenta η1 enquanto o custo total não piora, depois η2, a partir de (ε, ε).
    O par (0, 0) é avaliado antes, de modo que o resultado nunca é pior que o
    passo a passo. Empates mantêm o registro mais antigo.
    """
    if min(zeta) <= 0 or min(ub) <= 0:
        raise ValueError("Incrementos e limites da busca devem ser positivos.")
    state = SearchState(zeta=tuple(zeta), ub=tuple(ub))
    first = evaluate(0.0, 0.0)
    state.history.append(first)
    state.best = first

    eta = [eps_init, eps_init]
    previous = list(eta)
    z = math.inf
    while state.i != 2 and tuple(eta) != tuple(state.ub):
        record = evaluate(eta[0], eta[1])
        state.history.append(record)
        state.iterations += 1
        if record.total < state.best.total:
            state.best = record

        active = 0 if state.psi == 1 else 1
        if record.total <= z:
            z = record.total
            if eta[active] < state.ub[active]:
                previous = list(eta)
                eta[active] = min(eta[active] + state.zeta[active], state.ub[active])
            else:
                state.psi = 1 - state.psi
                state.i += 1
        else:
            # volta ao último ponto aceito e troca de parâmetro
            eta = list(previous)
            state.psi = 1 - state.psi
            state.i += 1
        if on_progress: on_progress(f"Busca em linha: iteração {state.iterations}, melhor {state.best.total:.2f}")
    return state.best, state


def grid_search(evaluate, eta1_list, eta2_list, threads=None, on_progress=None):
    """Produto cartesiano das grades; retorna o melhor registro e todos os registros (linha a linha)."""
    if not eta1_list or not eta2_list:
        raise ValueError("As grades de η1 e η2 não podem ser vazias.")
    points = list(product(eta1_list, eta2_list))
    if on_progress: on_progress(f"Avaliando grade com {len(points)} pontos...")
    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        records = list(pool.map(lambda pt: evaluate(*pt), points))
    best = records[0]
    for r in records[1:]:
        if r.total < best.total:
            best = r
    return best, records


def grid_optima(records, best, tol=OPTIMUM_TOL) -> list[bool]:
    return [r.total <= best.total + tol for r in records]


def default_grids(inst):
    """Grades completas, ou reduzidas para incerteza alta (σ/μ > 0.05) ou N = 20."""
    high = any(c.demand.std > 0.05 * c.demand.mean for c in inst.customers)
    if high or inst.n_customers >= 20:
        return list(REDUCED_GRID_ETA1), list(REDUCED_GRID_ETA2)
    return list(FULL_GRID_ETA1), list(FULL_GRID_ETA2)


def cost_increase(step_record: EvalRecord, search_record: EvalRecord) -> float:
    """Δ% do passo a passo em relação à busca."""
    return 100.0 * (step_record.total - search_record.total) / search_record.total


def solution_summary(inst, record: EvalRecord) -> dict:
    """Indicadores por kg entregue no ciclo: transporte, compras e parcela em emergência."""
    sel = record.selection
    kg = inst.T * math.fsum(c.demand.mean for c in inst.customers)
    transport = math.fsum(c.cT for c in sel.clusters)
    emergency_kg = math.fsum(
        partial_expectation_pos(load.shift(-inst.Q))
        for c in sel.clusters for load in cluster_loads(inst, c).values()
    )
    return {
        'transport_cost': transport,
        'holding_cost': math.fsum(c.cH for c in sel.clusters),
        'emergency_cost': math.fsum(c.cE for c in sel.clusters),
        'purchasing_cost': record.mdp_cycle_cost,
        'total_cost': record.total,
        'transport_per_kg': transport / kg,
        'purchasing_per_kg': record.mdp_cycle_cost / kg,
        'emergency_share_pct': 100.0 * emergency_kg / kg,
    }
