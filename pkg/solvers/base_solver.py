import math

import numpy as np

from models.cluster import ClusterPool, PenaltyParams, Selection
from models.errors import InfeasibleError


def penalty_value(delta_profile, lambda_profile, p: PenaltyParams) -> float:
    """(η1/T)·Σ|média Δ - Δ_t| + (η2/T)·Σ|média Λ - Λ_t|."""
    T = len(delta_profile)
    if T == 0:
        return 0.0
    avg_d = math.fsum(delta_profile) / T
    avg_l = math.fsum(lambda_profile) / T
    dev_d = math.fsum(abs(avg_d - x) for x in delta_profile)
    dev_l = math.fsum(abs(avg_l - x) for x in lambda_profile)
    return p.eta1 / T * dev_d + p.eta2 / T * dev_l


def make_selection(pool: ClusterPool, cluster_ids, p: PenaltyParams) -> Selection:
    """Avalia uma partição de forma canônica (independente da ordem dos ids)."""
    ids = tuple(sorted(cluster_ids))
    clusters = tuple(pool[k] for k in ids)
    delta = np.array([math.fsum(c.delta[t] for c in clusters) for t in range(pool.T)])
    lam = np.array([math.fsum(c.lam[t] for c in clusters) for t in range(pool.T)])
    return Selection(
        cluster_ids=ids,
        clusters=clusters,
        tactical_cost=math.fsum(c.cost for c in clusters),
        penalty_value=penalty_value(delta, lam, p),
        delta_profile=delta,
        lambda_profile=lam,
    )


def objective(sel: Selection, p: PenaltyParams) -> float:
    return sel.tactical_cost + penalty_value(sel.delta_profile, sel.lambda_profile, p)


def is_partition(pool: ClusterPool, cluster_ids) -> bool:
    seen = [i for k in cluster_ids for i in pool[k].customers]
    return len(seen) == len(set(seen)) and set(seen) == set(pool.customer_ids)


class BaseSolver:
    """
    Classe base dos resolvedores do particionamento de conjuntos.
    Cuida da indexação por bits, da checagem de cobertura e da comparação canônica
    de soluções; as subclasses implementam apenas a busca.
    """

    name = "base"

    def solve(self, pool: ClusterPool, p: PenaltyParams | None = None, on_progress=None) -> Selection:
        p = p or PenaltyParams()
        if not pool.customer_ids:
            return make_selection(pool, (), p)

        self._prepare(pool, p)
        if on_progress: on_progress(f"[{self.name}] {len(pool)} clusters, {len(pool.customer_ids)} clientes.")

        self.best = (math.inf, ())
        best_ids = self.search(on_progress)
        if best_ids is None:
            raise InfeasibleError("Nenhuma partição completa existe no conjunto de clusters.")
        return make_selection(pool, best_ids, p)

    def search(self, on_progress=None):
        """Deve ser sobrescrito: retorna os ids da melhor partição ou None."""
        raise NotImplementedError("Os resolvedores filhos devem implementar o método search")

    # --- Subfunções comuns a todos os resolvedores ---

    def _prepare(self, pool: ClusterPool, p: PenaltyParams):
        self.pool = pool
        self.params = p
        self.order = sorted(pool.customer_ids)
        self.bit = {i: 1 << k for k, i in enumerate(self.order)}
        self.full = (1 << len(self.order)) - 1

        missing = [i for i in self.order if not pool.containing(i)]
        if missing:
            raise InfeasibleError(f"Clientes sem nenhum cluster no conjunto: {missing}")

        self.masks = [sum(self.bit[i] for i in c.customers) for c in pool.clusters]
        # filhos de cada cliente: clusters cujo menor membro é ele
        self.candidate_ids = sorted(c.id for c in self.candidates(pool, p))
        self.children = {i: [] for i in self.order}
        for cid in self.candidate_ids:
            self.children[min(pool[cid].customers)].append(cid)

    def candidates(self, pool: ClusterPool, p: PenaltyParams):
        return pool.clusters

    def _lowest_uncovered(self, covered: int) -> int:
        free = ~covered & self.full
        return self.order[(free & -free).bit_length() - 1]

    def _offer(self, ids):
        """Candidata completa: compara (objetivo canônico, ids ordenados)."""
        sel = make_selection(self.pool, ids, self.params)
        cand = (sel.objective, sel.cluster_ids)
        if cand < self.best:
            self.best = cand
