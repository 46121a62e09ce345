"""
Pré-cálculo do conjunto de clusters: subconjuntos de clientes, rota, calendário
cíclico, estoques base e custos de transporte, estoque e emergência.
"""
from __future__ import annotations

import math
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

from models.cluster import Cluster, ClusterPool, Schedule
from models.errors import InfeasibleError
from services.parallel import worker_count
from services.routing import MAX_ROUTE_SIZE, shortest_route
from services.stochastics import (Gaussian, normal_cdf, normal_quantile,
                                  partial_expectation_pos, sum_independent)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def base_stock(demand: Gaussian, n: int, alpha: float) -> int:
    """Nível de reposição que cobre n períodos de demanda com nível de serviço alpha."""
    if n < 1:
        raise ValueError(f"n deve ser >= 1 (recebido {n})")
    return round_half_up(n * demand.mean + normal_quantile(alpha) * demand.std * math.sqrt(n))


def order_distribution(demand: Gaussian, n: int, m: int, alpha: float) -> Gaussian:
    if n < 1 or m < 1:
        raise ValueError(f"n e m devem ser >= 1 (recebidos {n}, {m})")
    z = normal_quantile(alpha)
    mean = n * demand.mean + z * demand.std * (math.sqrt(n) - math.sqrt(m))
    return Gaussian(mean, demand.std * math.sqrt(m))


def delivery_load(demands: list[Gaussian], n: int, m: int, alpha: float) -> Gaussian:
    return sum_independent([order_distribution(d, n, m, alpha) for d in demands])


def check_cc2(load: Gaussian, Q: float, gamma: float) -> bool:
    if load.std == 0:
        return load.mean <= Q
    return normal_cdf((Q - load.mean) / load.std) >= gamma


@lru_cache(maxsize=65536)
def _expected_inventory(mu: float, sigma: float, S: int, n: int) -> float:
    # Σ_{l=0}^{n-1} ½(E[(S - D_l)^+] + E[(S - D_{l+1})^+]),  D_l ~ N(lμ, lσ²), D_0 = 0
    levels = [max(S, 0.0)]
    for l in range(1, n + 1):
        levels.append(partial_expectation_pos(Gaussian(S - l * mu, sigma * math.sqrt(l))))
    return math.fsum(0.5 * (levels[l] + levels[l + 1]) for l in range(n))


def holding_cost(inst, customers, schedule: Schedule, stocks: dict) -> float:
    total = []
    for t, (n, _) in schedule.gaps().items():
        for i in customers:
            d = inst.customer(i).demand
            total.append(_expected_inventory(d.mean, d.std, stocks[(i, t)], n))
    return inst.h * math.fsum(total)


def emergency_cost(inst, loads: dict[int, Gaussian]) -> float:
    return inst.e * math.fsum(partial_expectation_pos(g.shift(-inst.Q)) for g in loads.values())


def price_cluster(inst, customers, schedule: Schedule, route=None) -> Cluster:
    """Monta o cluster com todos os campos de custo e os perfis Δ e Λ."""
    members = tuple(sorted(customers))
    route = route or shortest_route(inst, members)
    demands = [inst.customer(i).demand for i in members]
    gaps = schedule.gaps()

    stocks = {}
    loads = {}
    delta = np.zeros(inst.T)
    lam = np.zeros(inst.T)
    for t, (n, m) in gaps.items():
        for i, d in zip(members, demands):
            stocks[(i, t)] = base_stock(d, n, inst.alpha)
        load = delivery_load(demands, n, m, inst.alpha)
        loads[t] = load
        delta[t - 1] = load.mean
        lam[t - 1] = load.variance

    return Cluster(
        customers=members,
        route=route,
        schedule=schedule,
        base_stocks=stocks,
        cT=len(schedule.periods) * (inst.W + inst.w * route.length),
        cH=holding_cost(inst, members, schedule, stocks),
        cE=emergency_cost(inst, loads),
        delta=delta,
        lam=lam,
    )


def cluster_loads(inst, cluster: Cluster) -> dict[int, Gaussian]:
    demands = [inst.customer(i).demand for i in cluster.customers]
    return {t: delivery_load(demands, n, m, inst.alpha) for t, (n, m) in cluster.schedule.gaps().items()}


def is_feasible(inst, customers, schedule: Schedule) -> bool:
    """Verificação direta: estoques base dentro de U e cc2 em todo período de entrega."""
    demands = [inst.customer(i) for i in customers]
    for t, (n, m) in schedule.gaps().items():
        if any(base_stock(c.demand, n, inst.alpha) > c.U for c in demands):
            return False
        if not check_cc2(delivery_load([c.demand for c in demands], n, m, inst.alpha), inst.Q, inst.gamma):
            return False
    return True


def replenishment_limit(inst, customer) -> int:
    """Θ_i: maior intervalo n cujo estoque base cabe em U (0 se nem n = 1 cabe)."""
    theta = 0
    for n in range(1, inst.T + 1):
        if base_stock(customer.demand, n, inst.alpha) <= customer.U:
            theta = n
        else:
            break
    return theta


def gap_screen(inst, demands: list[Gaussian]) -> int:
    """
    Maior intervalo g para o qual cc2 pode valer em uma entrega com n = g para
    algum m admissível (1..T-g, ou m = T quando g = T). Condição necessária:
    nenhum calendário viável tem intervalo máximo acima deste valor.
    """
    ub = 0
    for g in range(1, inst.T + 1):
        ms = [inst.T] if g == inst.T else range(1, inst.T - g + 1)
        if any(check_cc2(delivery_load(demands, g, m, inst.alpha), inst.Q, inst.gamma) for m in ms):
            ub = g
    return ub


def _grow(inst, root: int, candidates: list[int], theta: dict) -> list[tuple[int, ...]]:
    """Subconjuntos com menor elemento `root` cujo calendário diário satisfaz cc2."""
    kept = []
    # com alpha, gamma >= 0.5 alguma entrega tem carga >= à diária
    prune = inst.alpha >= 0.5 and inst.gamma >= 0.5

    def visit(subset, start):
        kept.append(subset)
        if len(subset) == MAX_ROUTE_SIZE:
            return
        for k in range(start, len(candidates)):
            j = candidates[k]
            grown = subset + (j,)
            load = sum_independent([inst.customer(i).demand for i in grown])
            # a carga cresce com o subconjunto; se falha aqui, falha em todos os superconjuntos
            if not prune or check_cc2(load, inst.Q, inst.gamma):
                visit(grown, k + 1)

    if theta[root] >= 1 and (not prune or check_cc2(inst.customer(root).demand, inst.Q, inst.gamma)):
        visit((root,), 0)
    return kept


def _clusters_for_subset(inst, subset, theta) -> list[Cluster]:
    demands = [inst.customer(i).demand for i in subset]
    limit = min(gap_screen(inst, demands), min(theta[i] for i in subset))
    if limit < 1:
        return []
    route = shortest_route(inst, subset)
    out = []
    for mask in range(1, 1 << inst.T):
        schedule = Schedule.from_mask(mask, inst.T)
        gaps = schedule.gaps()
        if max(n for n, _ in gaps.values()) > limit:
            continue
        if all(check_cc2(delivery_load(demands, n, m, inst.alpha), inst.Q, inst.gamma)
               for n, m in gaps.values()):
            out.append(price_cluster(inst, subset, schedule, route))
    return out


def enumerate_clusters(inst, threads: int | None = None, on_progress=None) -> ClusterPool:
    ids = sorted(inst.customer_ids)
    theta = {i: replenishment_limit(inst, inst.customer(i)) for i in ids}
    if on_progress: on_progress(f"Limites de reposição calculados para {len(ids)} clientes.")

    subsets = []
    for pos, root in enumerate(ids):
        candidates = [j for j in ids[pos + 1:] if theta[j] >= 1]
        subsets.extend(_grow(inst, root, candidates, theta))
    if on_progress: on_progress(f"{len(subsets)} subconjuntos passaram pela triagem de capacidade.")

    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        batches = list(pool.map(lambda s: _clusters_for_subset(inst, s, theta), subsets))

    clusters = [c for batch in batches for c in batch]
    clusters.sort(key=lambda c: c.key)
    clusters = [replace(c, id=k) for k, c in enumerate(clusters)]
    if on_progress: on_progress(f"Pool com {len(clusters)} clusters gerado.")
    return ClusterPool(inst.T, tuple(ids), clusters)


def uncovered_customers(pool: ClusterPool) -> list[int]:
    covered = {i for c in pool.clusters for i in c.customers}
    return [i for i in pool.customer_ids if i not in covered]


def parse_cluster_spec(text: str, T: int) -> list[tuple[tuple[int, ...], Schedule]]:
    """Converte '1,2@1,4,6 3@2,3,5,7' em (clientes, calendário)."""
    out = []
    for token in text.split():
        try:
            left, right = token.split('@')
            members = tuple(sorted(int(x) for x in left.split(',')))
            periods = tuple(int(x) for x in right.split(','))
        except ValueError as e:
            raise ValueError(f"Cluster mal especificado: '{token}' (use clientes@períodos)") from e
        out.append((members, Schedule(T, periods)))
    return out


def forced_clusters(inst, specs) -> list[Cluster]:
    """Precifica clusters informados explicitamente, sem passar pelo pool."""
    seen = []
    out = []
    for k, (members, schedule) in enumerate(specs):
        seen.extend(members)
        if not is_feasible(inst, members, schedule):
            raise InfeasibleError(f"Cluster {members}@{schedule.periods} viola cc2 ou a capacidade U.")
        c = price_cluster(inst, members, schedule)
        out.append(replace(c, id=k))
    if sorted(seen) != sorted(inst.customer_ids):
        raise InfeasibleError("Os clusters informados não particionam o conjunto de clientes.")
    return out
