"""Two-locus genetic model: marker SNP (alleles A/B) in LD with an unobserved
functional locus (alleles a/b).

Genotypes are indexed by the number of risk alleles: G0=AA, G1=AB, G2=BB at
the marker and G*0=aa, G*1=ab, G*2=bb at the functional locus.  Everything
here assumes Hardy-Weinberg proportions in the source population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Marker genotype probabilities below this make conditionals undefined.
MIN_GENOTYPE_PROB = 1e-12
# Tolerance for the prevalence identity k = sum(g_i f_i).
PREVALENCE_TOL = 1e-9


class GeneticModel(str, Enum):
    REC = "REC"
    ADD = "ADD"
    MUL = "MUL"
    DOM = "DOM"

    @classmethod
    def parse(cls, value: str | GeneticModel) -> GeneticModel:
        if isinstance(value, GeneticModel):
            return value
        try:
            return cls[value.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown genetic model {value!r}") from None


def _check_open_unit(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


@dataclass(frozen=True)
class AlleleFreqs:
    """Risk allele frequencies: ``p`` = Pr(B) at the marker, ``q`` = Pr(b) at
    the functional locus."""

    p: float
    q: float

    def __post_init__(self) -> None:
        _check_open_unit("p", self.p)
        _check_open_unit("q", self.q)


@dataclass(frozen=True)
class HaplotypeTable:
    p_Aa: float
    p_Ab: float
    p_Ba: float
    p_Bb: float
    d: float
    d_prime: float

    @property
    def p(self) -> float:
        return self.p_Ba + self.p_Bb

    @property
    def q(self) -> float:
        return self.p_Ab + self.p_Bb


@dataclass(frozen=True)
class TransitionMatrix:
    """``matrix[i, j] = Pr(G*_i | G_j)``: functional genotype given marker
    genotype.  Columns sum to one."""

    matrix: np.ndarray
    f1: float
    f2: float
    f3: float
    f4: float


@dataclass(frozen=True)
class GrrPair:
    lambda1: float
    lambda2: float

    def __post_init__(self) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("genotype relative risks must be nonnegative")

    def in_constrained_space(self) -> bool:
        """Risk increases with the number of B alleles: f2 >= f1 >= f0, f2 > f0."""
        return self.lambda2 >= self.lambda1 >= 1.0 and self.lambda2 > 1.0


@dataclass(frozen=True)
class PenetranceTriple:
    f0: float
    f1: float
    f2: float

    def __post_init__(self) -> None:
        for name, v in (("f0", self.f0), ("f1", self.f1), ("f2", self.f2)):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"penetrance {name}={v!r} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.f0, self.f1, self.f2])

    def grr(self) -> GrrPair:
        if self.f0 <= 0:
            raise ValueError("relative risks undefined for f0 = 0")
        return GrrPair(self.f1 / self.f0, self.f2 / self.f0)


@dataclass(frozen=True)
class HwdPair:
    delta_case: float
    delta_control: float


def hwe_genotype_probs(freq: float) -> np.ndarray:
    """(AA, AB, BB) probabilities under HWE for risk allele frequency ``freq``."""
    c = 1.0 - freq
    return np.array([c * c, 2.0 * freq * c, freq * freq])


def haplotype_table(freqs: AlleleFreqs, d_prime: float) -> HaplotypeTable:
    """Fill the marker/functional haplotype table from D' and the allele
    frequencies, using Lewontin's normalisation for the sign of D."""
    if not (-1.0 <= d_prime <= 1.0):
        raise ValueError(f"d_prime must lie in [-1, 1], got {d_prime!r}")
    p, q = freqs.p, freqs.q
    pc, qc = 1.0 - p, 1.0 - q
    if d_prime >= 0:
        d = d_prime * min(qc * p, pc * q)
    else:
        d = d_prime * min(qc * pc, p * q)
    # exact zeros at the D' = +/-1 boundary instead of -1e-17 residue
    cells = [max(v, 0.0) for v in (pc * qc + d, pc * q - d, p * qc - d, p * q + d)]
    return HaplotypeTable(*cells, d=d, d_prime=d_prime)


def allele_correlation(h: HaplotypeTable) -> float:
    p, q = h.p, h.q
    num = h.p_Aa * h.p_Bb - h.p_Ab * h.p_Ba
    return num / math.sqrt(p * (1 - p) * q * (1 - q))


def _f_coefficients(h: HaplotypeTable) -> tuple[float, float, float, float]:
    p = h.p
    pc = 1.0 - p
    if min(pc * pc, 2 * p * pc, p * p) < MIN_GENOTYPE_PROB:
        raise ValueError("a marker genotype has (near) zero probability")
    # F1=Pr(a|A), F2=Pr(a|B), F3=Pr(b|A), F4=Pr(b|B)
    return h.p_Aa / pc, h.p_Ba / p, h.p_Ab / pc, h.p_Bb / p


def transition_matrix(h: HaplotypeTable) -> TransitionMatrix:
    f1, f2, f3, f4 = _f_coefficients(h)
    m = np.array(
        [
            [f1 * f1, f1 * f2, f2 * f2],
            [2 * f1 * f3, f1 * f4 + f2 * f3, 2 * f2 * f4],
            [f3 * f3, f3 * f4, f4 * f4],
        ]
    )
    return TransitionMatrix(matrix=m, f1=f1, f2=f2, f3=f3, f4=f4)


def marker_penetrances(f_star: PenetranceTriple, h: HaplotypeTable) -> PenetranceTriple:
    """Marker penetrances induced by functional-locus penetrances ``f_star``.

    Each marker penetrance is the average of the functional penetrances
    weighted by Pr(G*_j | G_i); equivalent to ``P*^T @ f_star``.
    """
    f1, f2, f3, f4 = _f_coefficients(h)
    a, b, c = f_star.f0, f_star.f1, f_star.f2
    return PenetranceTriple(
        f1 * f1 * a + 2 * f1 * f3 * b + f3 * f3 * c,
        f1 * f2 * a + (f1 * f4 + f2 * f3) * b + f3 * f4 * c,
        f2 * f2 * a + 2 * f2 * f4 * b + f4 * f4 * c,
    )


def grr_from_model(model: GeneticModel | str, lambda2: float) -> GrrPair:
    model = GeneticModel.parse(model)
    if lambda2 < 1.0:
        raise ValueError(f"lambda2 must be >= 1, got {lambda2!r}")
    if model is GeneticModel.REC:
        lambda1 = 1.0
    elif model is GeneticModel.ADD:
        lambda1 = (1.0 + lambda2) / 2.0
    elif model is GeneticModel.MUL:
        lambda1 = math.sqrt(lambda2)
    else:
        lambda1 = lambda2
    return GrrPair(lambda1, lambda2)


def baseline_penetrance(k: float, q: float, grr_star: GrrPair) -> float:
    """Penetrance of the aa genotype that makes the HWE prevalence equal ``k``."""
    _check_open_unit("k", k)
    _check_open_unit("q", q)
    g = hwe_genotype_probs(q)
    f0 = k / (g[0] + g[1] * grr_star.lambda1 + g[2] * grr_star.lambda2)
    if f0 * max(1.0, grr_star.lambda1, grr_star.lambda2) > 1.0:
        raise ValueError(
            f"prevalence {k} with GRRs ({grr_star.lambda1}, {grr_star.lambda2}) "
            "forces a penetrance above 1"
        )
    return f0


def functional_penetrances(k: float, q: float, grr_star: GrrPair) -> PenetranceTriple:
    f0 = baseline_penetrance(k, q, grr_star)
    return PenetranceTriple(f0, f0 * grr_star.lambda1, f0 * grr_star.lambda2)


def marker_model(
    model: GeneticModel | str,
    lambda2_star: float,
    freqs: AlleleFreqs,
    d_prime: float,
    k: float,
) -> PenetranceTriple:
    """Marker penetrances for a genetic model defined at the functional locus."""
    grr_star = grr_from_model(model, lambda2_star)
    f_star = functional_penetrances(k, freqs.q, grr_star)
    return marker_penetrances(f_star, haplotype_table(freqs, d_prime))


def marker_grr(
    model: GeneticModel | str,
    lambda2_star: float,
    freqs: AlleleFreqs,
    d_prime: float,
    k: float,
) -> GrrPair:
    return marker_model(model, lambda2_star, freqs, d_prime, k).grr()


def case_control_dists(
    f: PenetranceTriple, p: float, k: float
) -> tuple[np.ndarray, np.ndarray]:
    """Genotype distributions among cases and among controls at the marker."""
    _check_open_unit("p", p)
    _check_open_unit("k", k)
    g = hwe_genotype_probs(p)
    fv = f.as_array()
    implied = float(g @ fv)
    if abs(implied - k) > PREVALENCE_TOL:
        raise ValueError(
            f"penetrances imply prevalence {implied:.12g}, inconsistent with k={k}"
        )
    # normalise by the implied prevalence so both triples sum to 1 exactly
    return g * fv / implied, g * (1.0 - fv) / (1.0 - implied)


def hwd_coefficient(dist) -> float:
    """Hardy-Weinberg disequilibrium of a genotype distribution (g0, g1, g2)."""
    g1, g2 = dist[1], dist[2]
    return g2 - (g2 + g1 / 2.0) ** 2


def hwd_coefficients(case_dist, control_dist) -> HwdPair:
    return HwdPair(hwd_coefficient(case_dist), hwd_coefficient(control_dist))
