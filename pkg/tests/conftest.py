from pathlib import Path

import numpy as np
import pytest

from models.cluster import Cluster, ClusterPool, Route, Schedule
from models.instance import Customer, Instance, Producer, load_instance
from services.cluster_generator import forced_clusters, parse_cluster_spec
from services.stochastics import Gaussian

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

ORIGINAL_SCHEDULE = "1,2@1,4,6 3@2,3,5,7"
POSTPONED_SCHEDULE = "1,2@1,4,6 3@1,3,5,7"


@pytest.fixture(scope="session")
def example():
    return load_instance(DATA_DIR / "appendix_a.json")


@pytest.fixture(scope="session")
def example_clusters(example):
    return forced_clusters(example, parse_cluster_spec(ORIGINAL_SCHEDULE, example.T))


def make_instance(demands, T=3, supply=None, Q=1000.0, U=1000.0, capacity=4500, alpha=0.95, gamma=0.9,
                  distances=None, K1=1000.0, K2=2500.0, b1=10.0, b2=2.0, h=0.2, e=25.0):
    """Instância pequena com clientes em linha reta a partir do produtor."""
    customers = [Customer(id=k + 1, demand=Gaussian(mu, sigma), U=U, x=float(k + 1), y=0.0)
                 for k, (mu, sigma) in enumerate(demands)]
    if supply is None:
        supply = Gaussian(sum(mu for mu, _ in demands), 0.0)
    producer = Producer(supply=supply, capacity=capacity, K1=K1, K2=K2, b1=b1, b2=b2, x=0.0, y=0.0)
    if distances is None:
        xy = np.array([[0.0, 0.0]] + [[c.x, c.y] for c in customers])
        distances = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=-1))
    return Instance(T=T, customers=customers, producer=producer, W=100.0, w=20.0, h=h, e=e, Q=Q,
                    alpha=alpha, gamma=gamma, distances=distances, name="teste")


def synthetic_pool(seed, n_customers=8, T=7, n_clusters=40):
    """Pool aleatório (sem rotas reais) para comparar os resolvedores do particionamento."""
    rng = np.random.default_rng(seed)
    ids = tuple(range(1, n_customers + 1))
    members = [(i,) for i in ids]
    while len(members) < n_clusters:
        size = int(rng.integers(2, 4))
        members.append(tuple(sorted(int(x) for x in rng.choice(ids, size=size, replace=False))))
    mu = rng.uniform(100, 300, size=n_customers + 1)
    var = rng.uniform(100, 900, size=n_customers + 1)

    def profile(cs, totals):
        # cada cliente contribui com um perfil que soma T·total, como nos clusters reais
        out = np.zeros(T)
        for i in cs:
            w = rng.uniform(0, 1, size=T) * (rng.uniform(size=T) < 0.6)
            w = w if w.sum() > 0 else np.ones(T)
            out += T * totals[i] * w / w.sum()
        return out

    clusters = []
    for k, cs in enumerate(members):
        clusters.append(Cluster(
            customers=cs, route=Route(cs, 0.0), schedule=Schedule(T, (1,)), base_stocks={},
            cT=float(rng.uniform(50, 150) * len(cs) ** 0.8), cH=float(rng.uniform(0, 20)), cE=0.0,
            delta=profile(cs, mu), lam=profile(cs, var), id=k,
        ))
    return ClusterPool(T, ids, clusters)
