"""
Simulação de Monte Carlo de um par (seleção, política).

- agregado: sorteia as entregas por cliente e a oferta, e aplica a política de compra;
- completo: acompanha o estoque de cada cliente, os pedidos reais S - IE, as cargas
  dos veículos e as remessas de emergência, com e sem truncamento dos pedidos em 0.

Cada cliente e a oferta têm seu próprio fluxo aleatório, derivado de (semente,
replicação, id), para que trocar o calendário de um cluster não altere os sorteios
dos demais.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from services.cluster_generator import order_distribution
from services.parallel import worker_count
from services.stochastics import snap_to_grid

WARMUP_CYCLES = 100
SUPPLY_STREAM = 0
COMPONENTS = ('transport', 'holding', 'emergency', 'purchasing', 'total')


@dataclass
class Estimate:
    """Média por ciclo com erro padrão; guarda n e M2 para combinar replicações."""
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "Estimate":
        x = np.asarray(x, dtype=float)
        if len(x) == 0:
            return cls()
        mean = float(x.mean())
        return cls(len(x), mean, float(((x - mean) ** 2).sum()))

    @property
    def se(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1)) / math.sqrt(self.n)

    def merge(self, other: "Estimate") -> "Estimate":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        d = other.mean - self.mean
        mean = self.mean + d * other.n / n
        m2 = self.m2 + other.m2 + d * d * self.n * other.n / n
        return Estimate(n, mean, m2)


@dataclass
class SimReport:
    mode: str
    periods: int
    cycles: int
    replications: int = 1
    components: dict = field(default_factory=dict)
    negative_order_frequency: float | None = None
    service_levels: dict = field(default_factory=dict)
    emergency_frequency: float | None = None
    clamp_count: int = 0
    divergence: float | None = None
    trace: list = field(default_factory=list, repr=False)
    # contadores para combinar replicações
    _counts: dict = field(default_factory=dict, repr=False)

    def cost(self, name: str) -> float:
        return self.components[name].mean

    def se(self, name: str) -> float:
        return self.components[name].se

    def to_dict(self) -> dict:
        return {
            'mode': self.mode,
            'periods': self.periods,
            'cycles': self.cycles,
            'replications': self.replications,
            'components': {k: {'mean': v.mean, 'se': v.se} for k, v in self.components.items()},
            'negative_order_frequency': self.negative_order_frequency,
            'service_levels': {str(k): v for k, v in sorted(self.service_levels.items())},
            'emergency_frequency': self.emergency_frequency,
            'clamp_count': self.clamp_count,
            'divergence': self.divergence,
        }


def _rng(seed: int, replication: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication, stream)))


def _horizon(periods: int, T: int) -> tuple[int, int]:
    cycles = max(1, -(-periods // T))
    return cycles, cycles + WARMUP_CYCLES


def _supply(inst, seed, replication, total_cycles, T) -> np.ndarray:
    sup = inst.producer.supply
    z = _rng(seed, replication, SUPPLY_STREAM).standard_normal((total_cycles, T))
    return sup.mean + sup.std * z


def _run_purchasing(policy, outflow: np.ndarray, trace_from: int = 0, trace_limit: int = 0):
    """Aplica a política período a período; saídas fora da grade são truncadas e contadas."""
    model = policy.model
    T = model.T
    step = model.step
    lo = model.omega2_min
    J = len(model.omega2)
    targets = policy.target.tolist()
    costs = policy.costs.tolist()
    q1s = policy.q1.tolist()
    q2s = policy.q2.tolist()

    out = np.empty(len(outflow))
    clamps = 0
    trace = []
    omega1 = 0
    for p, o in enumerate(outflow.tolist()):
        t = p % T
        omega2 = omega1 - int(o)
        j = (omega2 - lo) // step
        if j < 0 or j >= J:
            clamps += 1
            j = min(max(j, 0), J - 1)
        out[p] = costs[t][j]
        if trace_limit and trace_from <= p < trace_from + trace_limit:
            trace.append({'period': p - trace_from, 't': t + 1, 'omega1': omega1, 'outflow': int(o),
                          'omega2': omega2, 'q1': q1s[t][j], 'q2': q2s[t][j], 'cost': costs[t][j]})
        omega1 = targets[t][j]
    return out, clamps, trace


def _per_cycle(x: np.ndarray, T: int) -> np.ndarray:
    return x.reshape(-1, T).sum(axis=1)[WARMUP_CYCLES:]


# --- Modelo agregado ---

def simulate_aggregate(sel, inst, policy, periods: int, seed: int, replication: int = 0,
                       trace_limit: int = 0) -> SimReport:
    T = inst.T
    step = policy.model.step
    cycles, total_cycles = _horizon(periods, T)

    replenishment = np.zeros((total_cycles, T))
    for cluster in sel.clusters:
        gaps = cluster.schedule.gaps()
        cols = [t - 1 for t in gaps]
        for i in cluster.customers:
            demand = inst.customer(i).demand
            laws = [order_distribution(demand, n, m, inst.alpha) for n, m in gaps.values()]
            z = _rng(seed, replication, i).standard_normal((total_cycles, len(cols)))
            means = np.array([g.mean for g in laws])
            stds = np.array([g.std for g in laws])
            replenishment[:, cols] += means + stds * z

    outflow = snap_to_grid(replenishment - _supply(inst, seed, replication, total_cycles, T), step).ravel()
    cost, clamps, trace = _run_purchasing(policy, outflow, WARMUP_CYCLES * T, trace_limit)
    purchasing = _per_cycle(cost, T)

    transport = math.fsum(c.cT for c in sel.clusters)
    holding = math.fsum(c.cH for c in sel.clusters)
    emergency = math.fsum(c.cE for c in sel.clusters)
    flat = np.zeros(cycles)
    report = SimReport(mode='aggregate', periods=cycles * T, cycles=cycles, clamp_count=clamps, trace=trace)
    report.components = {
        'transport': Estimate.from_samples(flat + transport),
        'holding': Estimate.from_samples(flat + holding),
        'emergency': Estimate.from_samples(flat + emergency),
        'purchasing': Estimate.from_samples(purchasing),
        'total': Estimate.from_samples(purchasing + transport + holding + emergency),
    }
    return report


# --- Modelo completo ---

def _customer_path(demand: np.ndarray, stocks: dict, T: int, clamp: bool, warm_start: int):
    """Estoque de um cliente ao longo do horizonte; retorna pedidos, estoque médio e contadores."""
    orders = np.zeros(len(demand))
    holding = np.zeros(len(demand))
    inv = 0.0
    served = intervals = negative = placed = 0
    for p, d in enumerate(demand.tolist()):
        t = p % T + 1
        S = stocks.get(t)
        if S is not None:
            if p >= warm_start:
                # fim do intervalo de reposição anterior: houve falta?
                intervals += 1
                served += inv >= 0
            raw = S - inv
            if p >= warm_start:
                placed += 1
                negative += raw < 0
            q = max(raw, 0.0) if clamp else raw
            orders[p] = q
            inv += q
        end = inv - d
        holding[p] = 0.5 * (max(inv, 0.0) + max(end, 0.0))
        inv = end
    return orders, holding, (served, intervals, negative, placed)


def _full_trajectory(sel, inst, policy, demands, supply, clamp, warm_start):
    T = inst.T
    n_periods = supply.size
    transport = np.zeros(n_periods)
    holding = np.zeros(n_periods)
    emergency = np.zeros(n_periods)
    replenishment = np.zeros(n_periods)
    counts = {'served': {}, 'intervals': {}, 'negative': 0, 'placed': 0, 'emergencies': 0, 'deliveries': 0}

    delivery_cost = {}
    for cluster in sel.clusters:
        load = np.zeros(n_periods)
        for i in cluster.customers:
            stocks = {t: s for (c, t), s in cluster.base_stocks.items() if c == i}
            orders, hold, (served, intervals, neg, placed) = _customer_path(demands[i], stocks, T, clamp, warm_start)
            load += orders
            holding += hold
            counts['served'][i] = served
            counts['intervals'][i] = intervals
            counts['negative'] += neg
            counts['placed'] += placed
        replenishment += load
        periods = np.array(cluster.schedule.periods) - 1
        on_day = np.isin(np.arange(n_periods) % T, periods)
        excess = np.where(on_day, np.maximum(load - inst.Q, 0.0), 0.0)
        emergency += inst.e * excess
        counts['emergencies'] += int((excess[warm_start:] > 0).sum())
        counts['deliveries'] += int(on_day[warm_start:].sum())
        delivery_cost[cluster.id] = inst.W + inst.w * cluster.route.length
        transport += np.where(on_day, delivery_cost[cluster.id], 0.0)

    holding *= inst.h
    outflow = snap_to_grid(replenishment - supply, policy.model.step)
    purchasing, clamps, _ = _run_purchasing(policy, outflow)
    parts = {'transport': transport, 'holding': holding, 'emergency': emergency, 'purchasing': purchasing}
    return {k: _per_cycle(v, T) for k, v in parts.items()}, clamps, counts


def simulate_full(sel, inst, policy, periods: int, seed: int, clamp_orders: bool = True,
                  replication: int = 0) -> SimReport:
    """Simulação por cliente; roda as duas variantes com os mesmos sorteios e mede a diferença."""
    T = inst.T
    cycles, total_cycles = _horizon(periods, T)
    n_periods = total_cycles * T
    warm_start = WARMUP_CYCLES * T

    demands = {}
    for cluster in sel.clusters:
        for i in cluster.customers:
            d = inst.customer(i).demand
            demands[i] = d.mean + d.std * _rng(seed, replication, i).standard_normal(n_periods)
    supply = _supply(inst, seed, replication, total_cycles, T).ravel()

    runs = {}
    for clamp in (True, False):
        runs[clamp] = _full_trajectory(sel, inst, policy, demands, supply, clamp, warm_start)

    parts, clamps, counts = runs[clamp_orders]
    other, _, _ = runs[not clamp_orders]
    total = sum(parts.values())
    other_total = sum(other.values())

    report = SimReport(mode='full', periods=cycles * T, cycles=cycles, clamp_count=clamps)
    report.components = {k: Estimate.from_samples(v) for k, v in parts.items()}
    report.components['total'] = Estimate.from_samples(total)
    unclamped = other_total if clamp_orders else total
    clamped = total if clamp_orders else other_total
    report.divergence = float(unclamped.mean() - clamped.mean())
    report._counts = counts
    _fill_frequencies(report)
    return report


def _fill_frequencies(report: SimReport):
    c = report._counts
    if not c:
        return
    report.service_levels = {i: c['served'][i] / c['intervals'][i] if c['intervals'][i] else 1.0
                             for i in c['served']}
    report.negative_order_frequency = c['negative'] / c['placed'] if c['placed'] else 0.0
    report.emergency_frequency = c['emergencies'] / c['deliveries'] if c['deliveries'] else 0.0


# --- Replicações ---

def merge_reports(reports: list[SimReport]) -> SimReport:
    """Combina replicações pela média e variância agrupadas."""
    first = reports[0]
    merged = SimReport(mode=first.mode, periods=sum(r.periods for r in reports),
                       cycles=sum(r.cycles for r in reports), replications=len(reports),
                       trace=first.trace)
    for name in first.components:
        est = Estimate()
        for r in reports:
            est = est.merge(r.components[name])
        merged.components[name] = est
    merged.clamp_count = sum(r.clamp_count for r in reports)
    if first.divergence is not None:
        merged.divergence = sum(r.divergence * r.cycles for r in reports) / merged.cycles
    if first._counts:
        counts = {'served': {}, 'intervals': {}, 'negative': 0, 'placed': 0, 'emergencies': 0, 'deliveries': 0}
        for r in reports:
            for key in ('negative', 'placed', 'emergencies', 'deliveries'):
                counts[key] += r._counts[key]
            for key in ('served', 'intervals'):
                for i, v in r._counts[key].items():
                    counts[key][i] = counts[key].get(i, 0) + v
        merged._counts = counts
        _fill_frequencies(merged)
    return merged


def simulate(sel, inst, policy, periods: int, seed: int, mode: str = 'aggregate', replications: int = 1,
             clamp_orders: bool = True, trace_limit: int = 0, threads: int | None = None,
             on_progress=None) -> SimReport:
    if mode not in ('aggregate', 'full'):
        raise ValueError(f"Modo de simulação desconhecido: {mode}")
    if replications < 1:
        raise ValueError("replications deve ser >= 1")

    def run(r):
        if mode == 'aggregate':
            return simulate_aggregate(sel, inst, policy, periods, seed, r, trace_limit if r == 0 else 0)
        return simulate_full(sel, inst, policy, periods, seed, clamp_orders, r)

    if on_progress: on_progress(f"Simulando {replications} replicação(ões) de {periods} períodos ({mode})...")
    with ThreadPoolExecutor(max_workers=min(worker_count(threads), replications)) as pool:
        reports = list(pool.map(run, range(replications)))
    return merge_reports(reports) if len(reports) > 1 else reports[0]
