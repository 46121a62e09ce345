"""
Modelo de dados da instância: produtor, clientes, custos e níveis de serviço.

Inclui leitura/gravação do documento JSON, validação (sem abortar), geração
aleatória do sistema base e escalonamento dos cenários de oferta e demanda.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from models.errors import InstanceError
from services.stochastics import Gaussian, normal_quantile

# Sistema base (parâmetros de referência dos experimentos)
BASE_DEFAULTS = {
    'W': 100.0, 'w': 20.0, 'e': 10.0, 'Q': 1000.0, 'h': 0.05,
    'alpha': 0.95, 'gamma': 0.9, 'U': 1000.0, 'C': 4500,
    'K1': 3000.0, 'K2': 15000.0, 'b1': 25.0, 'b2': 2.0,
}

# Faixas do desvio padrão relativo por nível de incerteza da demanda
UNCERTAINTY_LEVELS = {'L': (0.025, 0.05), 'H': (0.02, 0.1)}

REGION_SIZE = 10.0
PRODUCER_LOCATION = (5.0, 5.0)
SUPPLY_STD_RATIO = 0.15
MULTIPLIER_DIGITS = 12


@dataclass(frozen=True)
class Customer:
    id: int
    demand: Gaussian
    U: float
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class Producer:
    supply: Gaussian
    capacity: int
    K1: float
    K2: float
    b1: float
    b2: float
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True, eq=False)
class Instance:
    T: int
    customers: tuple[Customer, ...]
    producer: Producer
    W: float
    w: float
    h: float
    e: float
    Q: float
    alpha: float
    gamma: float
    distances: np.ndarray | None = field(default=None, repr=False)
    explicit_distances: bool = False
    name: str = "instancia"
    notes: str = ""
    # instância antes de qualquer escalonamento e multiplicadores acumulados (m_s, m_p, m_d)
    origin: Instance | None = field(default=None, repr=False)
    multipliers: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, 'customers', tuple(self.customers))
        if self.distances is not None:
            matrix = np.array(self.distances, dtype=float)
            matrix.flags.writeable = False
            object.__setattr__(self, 'distances', matrix)

    @property
    def customer_ids(self) -> list[int]:
        return [c.id for c in self.customers]

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    def customer(self, customer_id: int) -> Customer:
        return self._by_id()[customer_id]

    def node(self, customer_id: int) -> int:
        """Índice do cliente na matriz de distâncias (0 é o produtor)."""
        return self._nodes()[customer_id]

    def distance(self, a: int, b: int) -> float:
        """Distância entre dois ids de cliente; o id 0 representa o produtor."""
        if self.distances is None:
            raise InstanceError("A instância não possui distâncias (matriz ou coordenadas).")
        ia = 0 if a == 0 else self.node(a)
        ib = 0 if b == 0 else self.node(b)
        return float(self.distances[ia, ib])

    def _by_id(self):
        cache = self.__dict__.get('_id_cache')
        if cache is None:
            cache = {c.id: c for c in self.customers}
            self.__dict__['_id_cache'] = cache
        return cache

    def _nodes(self):
        cache = self.__dict__.get('_node_cache')
        if cache is None:
            cache = {c.id: k + 1 for k, c in enumerate(self.customers)}
            self.__dict__['_node_cache'] = cache
        return cache


# --- Leitura e gravação ---

def instance_from_dict(doc: dict, name: str = "instancia") -> Instance:
    try:
        prod = doc['producer']
        producer = Producer(
            supply=Gaussian(float(prod['mu']), float(prod['sigma'])),
            capacity=int(prod['capacity']),
            K1=float(prod['K1']), K2=float(prod['K2']),
            b1=float(prod['b1']), b2=float(prod['b2']),
            x=prod.get('x'), y=prod.get('y'),
        )
        customers = [
            Customer(
                id=int(c['id']),
                demand=Gaussian(float(c['mu']), float(c['sigma'])),
                U=float(c['U']),
                x=c.get('x'), y=c.get('y'),
            )
            for c in doc['customers']
        ]
        # A matriz explícita tem prioridade sobre as coordenadas
        matrix = doc.get('distances')
        return Instance(
            T=int(doc['T']), customers=customers, producer=producer,
            W=float(doc['W']), w=float(doc['w']), h=float(doc['h']),
            e=float(doc['e']), Q=float(doc['Q']),
            alpha=float(doc['alpha']), gamma=float(doc['gamma']),
            distances=matrix if matrix is not None else _euclidean_matrix(producer, customers),
            explicit_distances=matrix is not None,
            name=doc.get('name', name), notes=doc.get('notes', ""),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceError(f"Documento de instância malformado: {e}") from e


def _euclidean_matrix(producer: Producer, customers) -> np.ndarray | None:
    points = [(producer.x, producer.y)] + [(c.x, c.y) for c in customers]
    if any(p is None for xy in points for p in xy):
        return None
    xy = np.asarray(points, dtype=float)
    return np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=-1))


def instance_to_dict(inst: Instance) -> dict:
    prod = inst.producer
    producer = {
        'mu': prod.supply.mean, 'sigma': prod.supply.std, 'capacity': prod.capacity,
        'K1': prod.K1, 'K2': prod.K2, 'b1': prod.b1, 'b2': prod.b2,
    }
    if prod.x is not None:
        producer.update({'x': prod.x, 'y': prod.y})
    customers = []
    for c in inst.customers:
        row = {'id': c.id, 'mu': c.demand.mean, 'sigma': c.demand.std, 'U': c.U}
        if c.x is not None:
            row.update({'x': c.x, 'y': c.y})
        customers.append(row)
    doc = {
        'name': inst.name, 'T': inst.T, 'alpha': inst.alpha, 'gamma': inst.gamma,
        'W': inst.W, 'w': inst.w, 'h': inst.h, 'e': inst.e, 'Q': inst.Q,
        'producer': producer, 'customers': customers,
        'distances': inst.distances.tolist() if inst.explicit_distances else None,
    }
    if inst.notes:
        doc['notes'] = inst.notes
    return doc


def load_instance(path) -> Instance:
    path = Path(path)
    if not path.exists():
        raise InstanceError(f"Arquivo de instância não encontrado: {path}")
    try:
        doc = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise InstanceError(f"JSON inválido em {path}: {e}") from e
    return instance_from_dict(doc, name=path.stem)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n", encoding='utf-8')


# --- Validação ---

def validate(inst: Instance) -> list[Violation]:
    """Verifica todos os invariantes e a triagem de viabilidade; nunca aborta."""
    from services.cluster_generator import base_stock

    out = []

    def add(code, message):
        out.append(Violation(code, message))

    if inst.T < 1:
        add('cycle_length', f"T deve ser >= 1 (recebido {inst.T}).")
    for label, p in (('alpha', inst.alpha), ('gamma', inst.gamma)):
        if not (0 < p < 1):
            add(f'{label}_range', f"{label} deve estar em (0, 1) (recebido {p}).")
    for label in ('W', 'w', 'h', 'e'):
        if getattr(inst, label) < 0:
            add('negative_cost', f"{label} não pode ser negativo.")
    if inst.Q <= 0:
        add('vehicle_capacity', "Q deve ser positivo.")

    prod = inst.producer
    if prod.capacity <= 0:
        add('producer_capacity', "A capacidade do produtor deve ser positiva.")
    for label in ('K1', 'K2', 'b1', 'b2'):
        if getattr(prod, label) < 0:
            add('negative_cost', f"{label} não pode ser negativo.")
    if prod.b2 > prod.b1:
        add('sell_above_buy', f"Preço de venda b2={prod.b2} acima do preço de compra b1={prod.b1}.")

    ids = inst.customer_ids
    if len(set(ids)) != len(ids) or any(i < 1 for i in ids):
        add('customer_ids', "Os ids de cliente devem ser únicos e >= 1.")

    n = len(inst.customers) + 1
    if inst.distances is None:
        add('distances_missing', "Sem matriz de distâncias nem coordenadas completas.")
    else:
        d = inst.distances
        if d.shape != (n, n):
            add('distance_shape', f"Matriz de distâncias deve ser {n}x{n} (recebida {d.shape}).")
        else:
            if not np.allclose(d, d.T):
                add('distance_symmetry', "Matriz de distâncias não é simétrica.")
            if np.any(np.diag(d) != 0):
                add('distance_diagonal', "A diagonal da matriz de distâncias deve ser zero.")
            if np.any(d < 0):
                add('distance_negative', "Distâncias negativas.")

    gamma_ok = 0 < inst.gamma < 1
    alpha_ok = 0 < inst.alpha < 1
    for c in inst.customers:
        if c.demand.mean <= 0:
            add('demand_mean', f"Cliente {c.id}: demanda média deve ser positiva.")
        if c.U <= 0:
            add('customer_capacity', f"Cliente {c.id}: capacidade U deve ser positiva.")
        if gamma_ok and c.demand.mean + normal_quantile(inst.gamma) * c.demand.std > inst.Q:
            add('singleton_cc2_infeasible',
                f"Cliente {c.id}: entrega diária isolada viola a restrição de capacidade do veículo.")
        if alpha_ok and base_stock(c.demand, 1, inst.alpha) > c.U:
            add('base_stock_exceeds_capacity',
                f"Cliente {c.id}: estoque base de um período excede U={c.U}.")
    return out


# --- Geração e cenários ---

def generate(seed: int, n_customers: int, T: int = 7, params: dict | None = None,
             uncertainty: str = 'L') -> Instance:
    """Gera uma instância do sistema base; função pura de (seed, n, T, params)."""
    if n_customers < 1:
        raise InstanceError("n_customers deve ser >= 1.")
    if uncertainty not in UNCERTAINTY_LEVELS:
        raise InstanceError(f"Nível de incerteza desconhecido: {uncertainty}")
    cfg = dict(BASE_DEFAULTS)
    for key, value in (params or {}).items():
        if key not in cfg:
            raise InstanceError(f"Parâmetro desconhecido do sistema base: {key}")
        cfg[key] = value

    rng = np.random.default_rng(seed)
    xy = np.round(rng.uniform(0.0, REGION_SIZE, size=(n_customers, 2)), 4)
    mu = np.round(rng.uniform(100.0, 400.0, size=n_customers), 4)
    lo, hi = UNCERTAINTY_LEVELS[uncertainty]
    sigma = np.round(rng.uniform(lo, hi, size=n_customers) * mu, 4)

    customers = [
        Customer(id=k + 1, demand=Gaussian(float(mu[k]), float(sigma[k])), U=float(cfg['U']),
                 x=float(xy[k, 0]), y=float(xy[k, 1]))
        for k in range(n_customers)
    ]
    mu_p = math.fsum(c.demand.mean for c in customers)
    producer = Producer(
        supply=Gaussian(mu_p, SUPPLY_STD_RATIO * mu_p), capacity=int(cfg['C']),
        K1=float(cfg['K1']), K2=float(cfg['K2']), b1=float(cfg['b1']), b2=float(cfg['b2']),
        x=PRODUCER_LOCATION[0], y=PRODUCER_LOCATION[1],
    )
    return Instance(
        T=T, customers=customers, producer=producer,
        W=float(cfg['W']), w=float(cfg['w']), h=float(cfg['h']), e=float(cfg['e']),
        Q=float(cfg['Q']), alpha=float(cfg['alpha']), gamma=float(cfg['gamma']),
        distances=_euclidean_matrix(producer, customers),
        name=f"base_n{n_customers}_t{T}_{uncertainty}_s{seed}",
    )


def scale(inst: Instance, m_s: float = 1.0, m_p: float = 1.0, m_d: float = 1.0) -> Instance:
    """
    Aplica os multiplicadores de oferta (m_s), incerteza da oferta (m_p) e incerteza da demanda (m_d).

    Os multiplicadores se acumulam e os valores são sempre recalculados a partir da
    instância original, de modo que scale(scale(x, a), b) == scale(x, a·b).
    """
    if min(m_s, m_p, m_d) < 0:
        raise InstanceError("Multiplicadores devem ser não negativos.")
    origin = inst.origin or inst
    ms, mp, md = (round(a * b, MULTIPLIER_DIGITS) for a, b in zip(inst.multipliers, (m_s, m_p, m_d)))
    supply = origin.producer.supply
    supply = Gaussian(supply.mean * ms, supply.std * ms * mp)
    customers = tuple(replace(c, demand=Gaussian(c.demand.mean, c.demand.std * md)) for c in origin.customers)
    return replace(inst, producer=replace(inst.producer, supply=supply), customers=customers,
                   origin=origin, multipliers=(ms, mp, md))
