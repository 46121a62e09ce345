"""
MDP cíclico de compra e venda do produtor.

Estados: (t, ω1) no início do período e (t, ω2) depois da saída líquida O_t.
Ações: comprar q1 ou vender q2 levando o estoque a ω1' ∈ [0, Ū] no período t+1.
Critério de custo médio resolvido por iteração de valor relativa sobre ciclos
completos (a cadeia de um período é periódica com período T).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve

from models.errors import ConfigError, ConvergenceError, InadmissibleActionError
from services.stochastics import DiscreteDistribution, Gaussian, discretize

DEFAULT_STEP = 5
DEFAULT_TAIL_MASS = 1e-6
DEFAULT_EPSILON = 0.1
MAX_CYCLES = 1_000_000


def span(x) -> float:
    return float(np.max(x) - np.min(x))


@dataclass(frozen=True)
class OutflowModel:
    laws: tuple[Gaussian, ...]
    pmfs: tuple[DiscreteDistribution, ...] = field(repr=False)

    @property
    def T(self) -> int:
        return len(self.laws)

    def mean_cycle_outflow(self) -> float:
        return math.fsum(g.mean for g in self.laws)


@dataclass(frozen=True)
class MdpModel:
    T: int
    capacity: int
    step: int
    omega2_min: int
    omega2_max: int
    K1: float
    K2: float
    b1: float
    b2: float
    fixed_period_cost: float = 0.0

    @property
    def levels(self) -> int:
        return self.capacity // self.step + 1

    @property
    def omega1(self) -> np.ndarray:
        return np.arange(self.levels, dtype=np.int64) * self.step

    @property
    def omega2(self) -> np.ndarray:
        return np.arange(self.omega2_min, self.omega2_max + self.step, self.step, dtype=np.int64)

    def omega2_index(self, omega2: int) -> int:
        return (int(omega2) - self.omega2_min) // self.step


@dataclass(frozen=True, eq=False)
class Policy:
    model: MdpModel
    target: np.ndarray = field(repr=False)         # (T, J) estoque ω1' escolhido
    q1: np.ndarray = field(repr=False)
    q2: np.ndarray = field(repr=False)
    costs: np.ndarray = field(repr=False)          # custo imediato da ação escolhida
    next_values: np.ndarray = field(repr=False)    # (T, K+1) v_{t+1} usado na extração
    relative_values: np.ndarray = field(repr=False)  # h de referência (t = 1)
    gain: float
    cycle_cost: float
    iterations: int
    final_span: float

    def action(self, t: int, omega2: int) -> tuple[int, int]:
        j = self.model.omega2_index(omega2)
        return int(self.q1[t - 1, j]), int(self.q2[t - 1, j])

    def decision_cost(self, t: int, omega2: int, target: int) -> float:
        """Custo da ação que leva ω2 a `target` mais o valor relativo do período seguinte."""
        q1 = max(target - omega2, 0)
        q2 = max(omega2 - target, 0)
        cost = action_cost(self.model, omega2, q1, q2)
        return cost + float(self.next_values[t - 1, target // self.model.step])


@dataclass(frozen=True)
class SSRow:
    t: int
    s: float
    S: int | None
    status: str          # 'sS', 'non_sS' ou 'degenerate'


# --- Construção ---

def build_outflow(sel, inst, step: int = DEFAULT_STEP, tail_mass: float = DEFAULT_TAIL_MASS) -> OutflowModel:
    """O_t ~ N(Σ_r Δ_r^t - μ_p, Σ_r Λ_r^t + σ_p²), discretizada na grade de estoque."""
    supply = inst.producer.supply
    laws = []
    for t in range(len(sel.delta_profile)):
        variance = float(sel.lambda_profile[t]) + supply.variance
        laws.append(Gaussian(float(sel.delta_profile[t]) - supply.mean, math.sqrt(variance)))
    pmfs = tuple(discretize(g, step, tail_mass) for g in laws)
    return OutflowModel(tuple(laws), pmfs)


def build_model(inst, outflow: OutflowModel, step: int = DEFAULT_STEP,
                fixed_period_cost: float = 0.0) -> MdpModel:
    prod = inst.producer
    if step < 1 or prod.capacity % step:
        raise ConfigError(f"O passo {step} precisa dividir a capacidade do produtor {prod.capacity}.")
    if any(p.step != step for p in outflow.pmfs):
        raise ConfigError("A saída líquida foi discretizada com outro passo.")
    lo = min(0 - p.max_support for p in outflow.pmfs)
    hi = max(prod.capacity - p.min_support for p in outflow.pmfs)
    return MdpModel(
        T=outflow.T, capacity=prod.capacity, step=step,
        omega2_min=int(lo), omega2_max=int(hi),
        K1=prod.K1, K2=prod.K2, b1=prod.b1, b2=prod.b2,
        fixed_period_cost=fixed_period_cost,
    )


def action_cost(model: MdpModel, omega2: int, q1: int, q2: int) -> float:
    if q1 < 0 or q2 < 0:
        raise InadmissibleActionError(f"Quantidades negativas: q1={q1}, q2={q2}")
    if q1 > 0 and q2 > 0:
        raise InadmissibleActionError("Compra e venda simultâneas não são admissíveis.")
    after = omega2 + q1 - q2
    if not 0 <= after <= model.capacity:
        raise InadmissibleActionError(
            f"Ação leva o estoque a {after}, fora de [0, {model.capacity}] (ω2={omega2}).")
    cost = model.fixed_period_cost + model.b1 * q1 - model.b2 * q2
    if q1 > 0:
        cost += model.K1
    if omega2 < 0:
        cost += model.K2
    return cost


# --- Recursão de Bellman ---

def _decision_values(model: MdpModel, v_next: np.ndarray):
    """
    Para cada ω2 da grade: melhor valor de manter, comprar e vender (ações sobre v_{t+1}).
    Retorna também as somas de prefixo/sufixo necessárias para recuperar os alvos.
    """
    s = model.step
    K = model.levels - 1
    w1 = model.omega1.astype(float)
    w2 = model.omega2
    kk = w2 // s

    A = v_next + model.b1 * w1
    suf = np.append(np.minimum.accumulate(A[::-1])[::-1], np.inf)
    B = v_next + model.b2 * w1
    pre = np.minimum.accumulate(B)

    inside = (kk >= 0) & (kk <= K)
    keep = np.where(inside, v_next[np.clip(kk, 0, K)], np.inf)

    lo = np.clip(kk + 1, 0, K + 1)
    buy = model.K1 + suf[lo] - model.b1 * w2
    buy = np.where(lo <= K, buy, np.inf)

    hi = np.minimum(kk - 1, K)
    sell = np.where(hi >= 0, pre[np.clip(hi, 0, K)] - model.b2 * w2, np.inf)

    base = model.fixed_period_cost + model.K2 * (w2 < 0)
    return base, keep, buy, sell, (A, suf, lo), (B, pre, hi)


def _expectation(model: MdpModel, y: np.ndarray, pmf: DiscreteDistribution) -> np.ndarray:
    # v_t(ω1) = Σ_o p(o) y(ω1 - o); índice de ω1 - o na grade de ω2 é k + off - i
    off = (-pmf.origin - model.omega2_min) // model.step
    full = convolve(y, pmf.masses, mode='full', method='auto')
    return full[off:off + model.levels]


def _sweep(model: MdpModel, outflow: OutflowModel, h: np.ndarray):
    """Um ciclo completo de trás para frente: t = T..1, começando de v_{T+1} = h."""
    values = [None] * model.T
    v_next = h
    for t in range(model.T - 1, -1, -1):
        base, keep, buy, sell, _, _ = _decision_values(model, v_next)
        y = base + np.minimum(np.minimum(keep, buy), sell)
        values[t] = _expectation(model, y, outflow.pmfs[t])
        v_next = values[t]
    return values


def solve(model: MdpModel, outflow: OutflowModel, epsilon: float = DEFAULT_EPSILON,
          max_cycles: int = MAX_CYCLES, on_progress=None) -> Policy:
    """Iteração de valor relativa com estado de referência (t = 1, ω1 = 0)."""
    if epsilon <= 0:
        raise ConfigError(f"epsilon deve ser positivo (recebido {epsilon})")
    h = np.zeros(model.levels)
    for it in range(1, max_cycles + 1):
        values = _sweep(model, outflow, h)
        diff = values[0] - h
        sp = span(diff)
        if sp < epsilon:
            break
        h = values[0] - values[0][0]
        if on_progress and it % 500 == 0:
            on_progress(f"Iteração de valor: ciclo {it}, span {sp:.4f}")
    else:
        raise ConvergenceError(f"Iteração de valor não convergiu em {max_cycles} ciclos (span {sp:.4g}).")

    cycle_cost = 0.5 * (float(diff.max()) + float(diff.min()))
    if on_progress: on_progress(f"MDP convergiu em {it} ciclos; custo do ciclo {cycle_cost:.2f}.")

    next_values = np.vstack([values[t + 1] if t + 1 < model.T else h for t in range(model.T)])
    target, q1, q2, costs = _extract_actions(model, next_values)
    return Policy(
        model=model, target=target, q1=q1, q2=q2, costs=costs,
        next_values=next_values, relative_values=h,
        gain=cycle_cost / model.T, cycle_cost=cycle_cost,
        iterations=it, final_span=sp,
    )


def _extract_actions(model: MdpModel, next_values: np.ndarray):
    """Ação gulosa com desempate: não agir, depois menor alvo de compra, depois maior alvo de venda."""
    w2 = model.omega2
    J = len(w2)
    target = np.zeros((model.T, J), dtype=np.int64)
    for t in range(model.T):
        base, keep, buy, sell, (A, suf, lo), (B, pre, hi) = _decision_values(model, next_values[t])
        best = np.minimum(np.minimum(keep, buy), sell)
        for j in range(J):
            if keep[j] <= best[j]:
                target[t, j] = w2[j]
            elif buy[j] <= best[j]:
                start = int(lo[j])
                k = start + int(np.argmax(A[start:] == suf[start]))
                target[t, j] = k * model.step
            else:
                stop = int(hi[j])
                k = stop - int(np.argmax(B[stop::-1] == pre[stop]))
                target[t, j] = k * model.step

    q1 = np.maximum(target - w2[None, :], 0)
    q2 = np.maximum(w2[None, :] - target, 0)
    costs = (model.fixed_period_cost + model.b1 * q1 - model.b2 * q2
             + model.K1 * (q1 > 0) + model.K2 * (w2[None, :] < 0))
    return target, q1, q2, costs.astype(float)


def bellman_residual(model: MdpModel, outflow: OutflowModel, policy: Policy) -> float:
    """max |T h - h - custo do ciclo| sobre os estados do início do ciclo."""
    values = _sweep(model, outflow, policy.relative_values)
    diff = values[0] - policy.relative_values
    return float(np.max(np.abs(diff - policy.cycle_cost)))


# --- Resumo (s, S) ---

def extract_sS(policy: Policy) -> list[SSRow]:
    """Resumo por período: compra exatamente quando ω2 < s e sempre até o mesmo S."""
    model = policy.model
    w2 = model.omega2
    rows = []
    for t in range(model.T):
        buys = policy.q1[t] > 0
        if not buys.any():
            rows.append(SSRow(t + 1, -math.inf, None, 'degenerate'))
            continue
        s = int(w2[buys].max()) + model.step
        targets = policy.target[t][buys]
        values, counts = np.unique(targets, return_counts=True)
        S = int(values[np.argmax(counts)])
        below = w2 < s
        shaped = bool(buys[below].all()) and len(values) == 1
        rows.append(SSRow(t + 1, s, S, 'sS' if shaped else 'non_sS'))
    return rows


def policy_table(policy: Policy) -> list[dict]:
    model = policy.model
    rows = []
    for t in range(model.T):
        for j, w in enumerate(model.omega2):
            rows.append({'t': t + 1, 'omega2': int(w), 'q1': int(policy.q1[t, j]), 'q2': int(policy.q2[t, j])})
    return rows
