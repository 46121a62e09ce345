"""
Primitivas da distribuição normal usadas por todos os outros módulos.

Todas as funções são puras; podem ser chamadas de várias threads ao mesmo tempo.
Desvio padrão zero é aceito em toda parte (demanda determinística).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ValueError(f"Parâmetros não finitos: N({self.mean}, {self.std}²)")
        if self.std < 0:
            raise ValueError(f"Desvio padrão negativo: {self.std}")

    @property
    def variance(self) -> float:
        return self.std * self.std

    def shift(self, offset: float) -> "Gaussian":
        return Gaussian(self.mean + offset, self.std)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Distribuição com suporte origin + k·step (k = 0..len(masses)-1)."""
    origin: int
    step: int
    masses: np.ndarray = field(repr=False)

    @property
    def support(self) -> np.ndarray:
        return self.origin + self.step * np.arange(len(self.masses), dtype=np.int64)

    @property
    def min_support(self) -> int:
        return int(self.origin)

    @property
    def max_support(self) -> int:
        return int(self.origin + self.step * (len(self.masses) - 1))

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.masses))


def normal_cdf(x: float) -> float:
    return float(norm.cdf(x))


def normal_pdf(x: float) -> float:
    return float(norm.pdf(x))


def normal_quantile(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise ValueError(f"Probabilidade fora de (0, 1): {p}")
    return float(norm.ppf(p))


def partial_expectation_pos(g: Gaussian) -> float:
    """E[(X)^+] para X ~ g."""
    if g.std == 0:
        return max(g.mean, 0.0)
    z = g.mean / g.std
    return g.mean * normal_cdf(z) + g.std * normal_pdf(z)


def sum_independent(gs: list[Gaussian]) -> Gaussian:
    if not gs:
        raise ValueError("Lista de normais vazia.")
    mean = math.fsum(g.mean for g in gs)
    variance = math.fsum(g.variance for g in gs)
    return Gaussian(mean, math.sqrt(variance))


def snap_to_grid(x, step: int):
    """Ponto da grade mais próximo; a célula de k é [k - step/2, k + step/2)."""
    return np.floor(np.asarray(x, dtype=float) / step + 0.5).astype(np.int64) * step


def discretize(g: Gaussian, step: int, tail_mass: float = 1e-6) -> DiscreteDistribution:
    """
    Discretiza g na grade de passo `step`.

    O suporte cobre a massa central 1 - tail_mass arredondada para a grade; cada ponto
    recebe a diferença da CDF sobre sua célula [k - step/2, k + step/2) e as massas
    são renormalizadas.
    """
    if step < 1:
        raise ValueError(f"Passo de discretização inválido: {step}")
    if not (0.0 < tail_mass < 0.1):
        raise ValueError(f"Massa de cauda fora de (0, 0.1): {tail_mass}")

    if g.std == 0:
        return DiscreteDistribution(int(snap_to_grid(g.mean, step)), step, np.ones(1))

    lo = g.mean + g.std * normal_quantile(tail_mass / 2)
    hi = g.mean + g.std * normal_quantile(1 - tail_mass / 2)
    k_lo = int(snap_to_grid(lo, step)) // step
    k_hi = int(snap_to_grid(hi, step)) // step

    points = np.arange(k_lo, k_hi + 1, dtype=np.int64) * step
    edges = np.append(points - step / 2, points[-1] + step / 2)
    cdf = norm.cdf((edges - g.mean) / g.std)
    masses = np.clip(np.diff(cdf), 0.0, None)
    masses = masses / masses.sum()
    return DiscreteDistribution(int(points[0]), step, masses)
