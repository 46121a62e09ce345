"""
Branch-and-bound em profundidade para o particionamento de conjuntos com penalidades.

Cada nó guarda os clusters ainda compatíveis com a cobertura parcial e ramifica no
cliente descoberto com menos opções. O limitante soma o custo já escolhido, a divisão
de custos min c_r/|N_r| dos clientes descobertos (calculada sobre as opções vivas) e
um limitante das penalidades a partir dos perfis parciais de Δ e Λ. Com penalidades,
a busca parte da solução sem penalidades como incumbente.
"""
import math

import numpy as np

from models.cluster import PenaltyParams
from solvers.base_solver import BaseSolver

REL_TOL = 1e-9


def dominated_schedules(clusters, p: PenaltyParams) -> set[int]:
    """
    Ids de clusters que nunca entram numa solução ótima: para o mesmo subconjunto de
    clientes existe outro calendário mais barato cuja troca muda as penalidades menos
    do que a diferença de custo.
    """
    groups = {}
    for c in clusters:
        groups.setdefault(c.customers, []).append(c)

    out = set()
    for group in groups.values():
        if len(group) < 2:
            continue
        T = len(group[0].delta)
        cost = np.array([c.cost for c in group])
        delta = np.array([c.delta for c in group])
        lam = np.array([c.lam for c in group])
        # reach[a, b]: quanto a penalidade pode cair ao trocar b por a
        reach = (p.eta1 / T * np.abs(delta[:, None, :] - delta[None, :, :]).sum(axis=2)
                 + p.eta2 / T * np.abs(lam[:, None, :] - lam[None, :, :]).sum(axis=2))
        gap = cost[None, :] - cost[:, None]
        tol = REL_TOL * max(1.0, float(np.abs(cost).max()))
        beaten = (gap > reach + tol).any(axis=0)
        out.update(c.id for c, b in zip(group, beaten) if b)
    return out


class BranchAndBoundSolver(BaseSolver):

    name = "bnb"

    def candidates(self, pool, p):
        if p.eta1 or p.eta2:
            drop = dominated_schedules(pool.clusters, p)
            return [c for c in pool.clusters if c.id not in drop]
        # sem penalidades só o calendário mais barato de cada subconjunto importa
        cheapest = {}
        for c in pool.clusters:
            cur = cheapest.get(c.customers)
            if cur is None or (c.cost, c.id) < (cur.cost, cur.id):
                cheapest[c.customers] = c
        return sorted(cheapest.values(), key=lambda c: c.id)

    def search(self, on_progress=None):
        pool, p = self.pool, self.params
        T = pool.T
        col = {i: k for k, i in enumerate(self.order)}

        self.rows = np.array(self.candidate_ids, dtype=int)
        self.cost = np.array([pool[k].cost for k in self.rows])
        self.incidence = np.zeros((len(self.rows), len(self.order)), dtype=bool)
        for r, k in enumerate(self.rows):
            self.incidence[r, [col[i] for i in pool[k].customers]] = True
        size = self.incidence.sum(axis=1)
        self.ratio = np.where(self.incidence, (self.cost / size)[:, None], np.inf)
        self.delta = np.array([pool[k].delta for k in self.rows]).reshape(len(self.rows), T)
        self.lam = np.array([pool[k].lam for k in self.rows]).reshape(len(self.rows), T)

        self.use_delta_bound = bool(p.eta1) and bool((self.delta >= 0).all())
        self.use_lambda_bound = bool(p.eta2)
        self.avg_delta = self.avg_lambda = None

        self.nodes = 0
        if p.eta1 or p.eta2:
            self._seed()
        else:
            self._greedy()
        self._visit(np.arange(len(self.rows)), np.ones(len(self.order), dtype=bool), [], 0.0,
                    np.zeros(T), np.zeros(T))
        if on_progress: on_progress(f"[{self.name}] {self.nodes} nós explorados.")
        return self.best[1] if self.best[0] < math.inf else None

    def _seed(self):
        """Incumbente e médias do ciclo a partir do ótimo sem penalidades."""
        plain = BranchAndBoundSolver().solve(self.pool, PenaltyParams())
        self._offer(plain.cluster_ids)
        # Σ μ_i e Σ σ_i² por período: iguais para toda partição completa
        self.avg_delta = math.fsum(plain.delta_profile) / self.pool.T
        self.avg_lambda = math.fsum(plain.lambda_profile) / self.pool.T

    def _greedy(self):
        """Incumbente inicial: o cluster mais barato disponível para cada cliente descoberto."""
        covered, chosen = 0, []
        while covered != self.full:
            customer = self._lowest_uncovered(covered)
            options = [cid for cid in self.children[customer] if not self.masks[cid] & covered]
            if not options:
                return
            cid = min(options, key=lambda k: (self.pool[k].cost, k))
            chosen.append(cid)
            covered |= self.masks[cid]
        self._offer(chosen)

    def _penalty_bound(self, delta, lam):
        if self.avg_delta is None:
            return 0.0
        T = self.pool.T
        bound = 0.0
        if self.use_delta_bound:
            bound += 2 * self.params.eta1 / T * float(np.clip(delta - self.avg_delta, 0, None).sum())
        if self.use_lambda_bound:
            bound += 2 * self.params.eta2 / T * float(np.clip(lam - self.avg_lambda, 0, None).sum())
        return bound

    def _tol(self):
        return REL_TOL * max(1.0, abs(self.best[0]))

    def _visit(self, live, free, chosen, g, delta, lam):
        """live: linhas ainda disjuntas da cobertura; free: colunas dos clientes descobertos."""
        self.nodes += 1
        if not free.any():
            self._offer([int(self.rows[r]) for r in chosen])
            return

        share = self.ratio[live][:, free].min(axis=0) if len(live) else np.full(int(free.sum()), np.inf)
        if np.isinf(share).any():
            return
        base = g + float(share.sum())
        penalty = self._penalty_bound(delta, lam)
        if base + penalty > self.best[0] + self._tol():
            return

        hits = self.incidence[live][:, free]
        pick = int(np.argmin(hits.sum(axis=0)))
        kids = live[hits[:, pick]]
        # limitante de cada filho: base + custo reduzido pela divisão de custos
        reduced = self.cost[kids] - np.where(self.incidence[kids][:, free], share, 0.0).sum(axis=1)
        for j in np.lexsort((kids, reduced)):
            if base + reduced[j] + penalty > self.best[0] + self._tol():
                break
            r = kids[j]
            rest = live[~self.incidence[live][:, self.incidence[r]].any(axis=1)]
            chosen.append(r)
            self._visit(rest, free & ~self.incidence[r], chosen, g + self.cost[r],
                        delta + self.delta[r], lam + self.lam[r])
            chosen.pop()
