"""Independent reference computations used by the tests.

Nothing here imports the package's numerical routines; each oracle evaluates
the defining formula by a different route (exact fractions, haplotype
enumeration, a bivariate-normal integral, plain Monte Carlo).
"""

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy import integrate, stats


def catt_displayed(r, s):
    """Z_{1/2} from the displayed 0/1/2-score form, in exact arithmetic."""
    r = [Fraction(v) for v in r]
    s = [Fraction(v) for v in s]
    n_j = [a + b for a, b in zip(r, s)]
    R, S = sum(r), sum(s)
    n = R + S
    w = (0, 1, 2)
    num = n * sum(x * v for x, v in zip(w, r)) - R * sum(x * v for x, v in zip(w, n_j))
    var = n * (n_j[1] + 4 * n_j[2]) - (n_j[1] + 2 * n_j[2]) ** 2
    return math.sqrt(n) * float(num) / math.sqrt(float(R * S * var))


def catt_generic(r, s, x):
    """Z_x from the hypergeometric variance of sum(x_j r_j), n-1 replaced by n."""
    w = (Fraction(0), Fraction(x), Fraction(1))
    r = [Fraction(v) for v in r]
    s = [Fraction(v) for v in s]
    n_j = [a + b for a, b in zip(r, s)]
    R, S = sum(r), sum(s)
    n = R + S
    mean_score = sum(a * b for a, b in zip(w, n_j)) / n
    score_var = sum(a * a * b for a, b in zip(w, n_j)) / n - mean_score**2
    u = sum(a * b for a, b in zip(w, r)) - R * mean_score
    var_u = R * S / n * score_var
    return float(u) / math.sqrt(float(var_u))


def pearson_by_cells(r, s):
    n_j = [a + b for a, b in zip(r, s)]
    R, S = sum(r), sum(s)
    n = R + S
    t = 0.0
    for j in range(3):
        if n_j[j] == 0:
            continue
        er, es = n_j[j] * R / n, n_j[j] * S / n
        t += (r[j] - er) ** 2 / er + (s[j] - es) ** 2 / es
    return t


def hwdtt_by_hand(r, s):
    R, S = sum(r), sum(s)
    n = R + S
    n1, n2 = r[1] + s[1], r[2] + s[2]
    d1 = r[2] / R - (r[2] / R + r[1] / (2 * R)) ** 2
    d0 = s[2] / S - (s[2] / S + s[1] / (2 * S)) ** 2
    denom = (1 - n2 / n - n1 / (2 * n)) * (n2 / n + n1 / (2 * n))
    return math.sqrt(R * S / n) * (d1 - d0) / denom


def transition_by_enumeration(p_Aa, p_Ab, p_Ba, p_Bb):
    """Pr(functional genotype | marker genotype) by enumerating ordered
    haplotype pairs drawn independently (HWE at both loci)."""
    haps = {("A", "a"): p_Aa, ("A", "b"): p_Ab, ("B", "a"): p_Ba, ("B", "b"): p_Bb}
    joint = np.zeros((3, 3))  # [functional, marker]
    for h1, h2 in itertools.product(haps, repeat=2):
        g_marker = (h1[0] == "B") + (h2[0] == "B")
        g_func = (h1[1] == "b") + (h2[1] == "b")
        joint[g_func, g_marker] += haps[h1] * haps[h2]
    return joint / joint.sum(axis=0, keepdims=True)


def min2_joint_cdf_normal(t1, t2):
    """Pr(U^2 < t1, U^2 + W^2 < t2) for independent standard normals U, W:
    Z_{1/2} is the trend component of Pearson's two degrees of freedom."""
    a = math.sqrt(min(t1, t2))

    def f(u):
        return stats.norm.pdf(u) * (2 * stats.norm.cdf(math.sqrt(max(t2 - u * u, 0.0))) - 1)

    return integrate.quad(f, -a, a, epsabs=1e-13, epsrel=1e-13)[0]


def null_tables(rng, n_tables, r, s, maf):
    c = 1 - maf
    g = [c * c, 2 * maf * c, maf * maf]
    return rng.multinomial(r, g, size=n_tables), rng.multinomial(s, g, size=n_tables)


def zhalf_and_pearson_mc(cases, controls):
    """Vectorised Z_{1/2}^2 and Pearson on integer tables, written from the
    textbook definitions (no package code)."""
    cases = cases.astype(float)
    controls = controls.astype(float)
    R = cases.sum(1)
    S = controls.sum(1)
    nj = cases + controls
    n = R + S
    w = np.array([0.0, 1.0, 2.0])
    num = n * (cases @ w) - R * (nj @ w)
    var = n * (nj @ (w * w)) - (nj @ w) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        z2 = n * num**2 / (R * S * var)
        er = nj * (R / n)[:, None]
        es = nj * (S / n)[:, None]
        cells = np.where(nj > 0, (cases - er) ** 2 / er + (controls - es) ** 2 / es, 0.0)
    return z2, cells.sum(1)
