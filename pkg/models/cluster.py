"""
Tipos do nível tático: rota, calendário cíclico, cluster precificado, pool e seleção.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEEKDAYS = ('Mo', 'Tu', 'We', 'Th', 'Fr', 'Sa', 'Su')


@dataclass(frozen=True)
class Route:
    order: tuple[int, ...]
    length: float


@dataclass(frozen=True)
class Schedule:
    """Períodos de entrega (1..T) de um cluster, repetidos a cada ciclo."""
    T: int
    periods: tuple[int, ...]

    def __post_init__(self):
        if not self.periods:
            raise ValueError("Um calendário precisa de pelo menos um período de entrega.")
        if any(t < 1 or t > self.T for t in self.periods):
            raise ValueError(f"Períodos fora de 1..{self.T}: {self.periods}")
        object.__setattr__(self, 'periods', tuple(sorted(set(self.periods))))

    @classmethod
    def from_mask(cls, mask: int, T: int) -> "Schedule":
        return cls(T, tuple(t + 1 for t in range(T) if mask >> t & 1))

    @property
    def mask(self) -> int:
        return sum(1 << (t - 1) for t in self.periods)

    def gaps(self) -> dict[int, tuple[int, int]]:
        """(n_t, m_t) por período de entrega: períodos até a próxima e desde a anterior."""
        ps = self.periods
        k = len(ps)
        out = {}
        for j, t in enumerate(ps):
            nxt = ps[(j + 1) % k]
            prv = ps[(j - 1) % k]
            n = (nxt - t) % self.T or self.T
            m = (t - prv) % self.T or self.T
            out[t] = (n, m)
        return out

    @property
    def max_gap(self) -> int:
        return max(n for n, _ in self.gaps().values())

    def label(self) -> str:
        if self.T == len(WEEKDAYS):
            return "/".join(WEEKDAYS[t - 1] for t in self.periods)
        return ",".join(str(t) for t in self.periods)


@dataclass(frozen=True, eq=False)
class Cluster:
    customers: tuple[int, ...]
    route: Route
    schedule: Schedule
    base_stocks: dict = field(repr=False)      # (id do cliente, período) -> kg
    cT: float
    cH: float
    cE: float
    delta: np.ndarray = field(repr=False)      # Δ_r^t, t = 1..T (índice t-1)
    lam: np.ndarray = field(repr=False)        # Λ_r^t
    id: int = -1

    @property
    def cost(self) -> float:
        return self.cT + self.cH + self.cE

    @property
    def key(self):
        return (self.customers, self.schedule.periods)

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'customers': list(self.customers),
            'route': list(self.route.order),
            'route_length': self.route.length,
            'periods': list(self.schedule.periods),
            'schedule': self.schedule.label(),
            'base_stocks': {f"{i}@{t}": s for (i, t), s in sorted(self.base_stocks.items())},
            'cT': self.cT, 'cH': self.cH, 'cE': self.cE, 'cost': self.cost,
            'delta': self.delta.tolist(),
            'lambda': self.lam.tolist(),
        }


@dataclass
class ClusterPool:
    T: int
    customer_ids: tuple[int, ...]
    clusters: list[Cluster]

    def __len__(self):
        return len(self.clusters)

    def __getitem__(self, idx: int) -> Cluster:
        return self.clusters[idx]

    def containing(self, customer_id: int) -> list[int]:
        return [c.id for c in self.clusters if customer_id in c.customers]


@dataclass(frozen=True)
class PenaltyParams:
    eta1: float = 0.0
    eta2: float = 0.0

    def __post_init__(self):
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError(f"Penalidades devem ser não negativas: ({self.eta1}, {self.eta2})")


@dataclass(frozen=True, eq=False)
class Selection:
    cluster_ids: tuple[int, ...]
    clusters: tuple[Cluster, ...] = field(repr=False)
    tactical_cost: float
    penalty_value: float
    delta_profile: np.ndarray = field(repr=False)
    lambda_profile: np.ndarray = field(repr=False)

    @property
    def objective(self) -> float:
        return self.tactical_cost + self.penalty_value

    @property
    def T(self) -> int:
        return len(self.delta_profile)

    def to_dict(self) -> dict:
        return {
            'cluster_ids': list(self.cluster_ids),
            'clusters': [c.to_dict() for c in self.clusters],
            'tactical_cost': self.tactical_cost,
            'penalty_value': self.penalty_value,
            'delta_profile': self.delta_profile.tolist(),
            'lambda_profile': self.lambda_profile.tolist(),
        }
