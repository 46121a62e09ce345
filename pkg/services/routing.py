"""
Rota mais curta de um cluster: sai do produtor, visita todos os clientes e volta.

Programação dinâmica sobre subconjuntos (Held-Karp) com o caminho guardado junto
ao custo, para que empates saiam na ordem lexicográfica menor.
"""
from __future__ import annotations

from itertools import permutations

import numpy as np

from models.cluster import Route
from models.errors import SizingError

MAX_ROUTE_SIZE = 12


def held_karp(dist: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """
    Tour ótimo em uma matriz local onde o nó 0 é o depósito e 1..k os clientes.
    Retorna (comprimento, ordem dos nós 1..k).
    """
    k = len(dist) - 1
    if k == 0:
        return 0.0, ()
    d = np.asarray(dist, dtype=float).tolist()

    # estado: (máscara dos visitados, último nó) -> (custo, caminho)
    C = {}
    for u in range(1, k + 1):
        C[(1 << (u - 1), u)] = (d[0][u], (u,))

    full = (1 << k) - 1
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        for u in range(1, k + 1):
            bit = 1 << (u - 1)
            if not mask & bit:
                continue
            prev = mask ^ bit
            best = None
            for v in range(1, k + 1):
                if not prev & (1 << (v - 1)):
                    continue
                cost, path = C[(prev, v)]
                cand = (cost + d[v][u], path + (u,))
                if best is None or cand < best:
                    best = cand
            C[(mask, u)] = best

    best = None
    for u in range(1, k + 1):
        cost, path = C[(full, u)]
        cand = (cost + d[u][0], path)
        if best is None or cand < best:
            best = cand
    return best


def tour_length(dist: np.ndarray, order) -> float:
    nodes = [0, *order, 0]
    return float(sum(dist[a][b] for a, b in zip(nodes, nodes[1:])))


def brute_force_tour(dist: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Enumera todas as permutações; usado como oráculo nos testes."""
    k = len(dist) - 1
    best = None
    for perm in permutations(range(1, k + 1)):
        cand = (tour_length(dist, perm), perm)
        if best is None or cand < best:
            best = cand
    return best if best is not None else (0.0, ())


def shortest_route(inst, subset) -> Route:
    members = sorted(set(subset))
    if not members:
        raise SizingError("Um cluster precisa de pelo menos um cliente.")
    if len(members) > MAX_ROUTE_SIZE:
        raise SizingError(f"Cluster com {len(members)} clientes excede o limite de {MAX_ROUTE_SIZE}.")

    nodes = [0] + members
    local = np.array([[inst.distance(a, b) for b in nodes] for a in nodes])
    length, order = held_karp(local)
    return Route(tuple(members[j - 1] for j in order), length)
