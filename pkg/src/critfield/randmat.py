"""Gaussian symmetric-matrix ensembles and determinant expectations.

The two-parameter ensemble S(m; u, v) is the set of real symmetric m x m
matrices with centered Gaussian entries satisfying

    E[a_ij a_kl] = u d_ij d_kl + v (d_ik d_jl + d_il d_jk),

equivalently a GOE matrix with off-diagonal variance v plus an independent
N(0, u) multiple of the identity.  This module provides sampling, eigenvalue
(Weyl) quadrature, one-point densities, the shifted-determinant identity that
turns E|det(lam + B)| into a density evaluation, and the large-m predictions
for the |det|-weighted functionals used by the chaos expansion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

__all__ = [
    "EnsembleParams",
    "sample_matrix",
    "sample_matrices",
    "expect_functional_mc",
    "homogeneous_rescale",
    "weyl_joint_density",
    "weyl_log_norm",
    "rho_one_point",
    "eigenvalue_histogram_density",
    "semicircle_density",
    "fyodorov_absdet",
    "expect_absdet_S",
    "asymptotic_targets",
    "asymptotic_targets_semicircle",
    "det_weight_constant",
]

FUNCTIONALS = ("absdet", "p_absdet", "q_absdet", "p", "q", "p2", "pq", "q2", "absdet2")


@dataclass(frozen=True)
class EnsembleParams:
    """(m, u, v): dimension, identity-shift variance, GOE off-diag variance."""

    m: int
    u: float
    v: float

    def __post_init__(self):
        if self.m < 1 or self.u < 0 or self.v <= 0:
            raise ValueError("need m >= 1, u >= 0, v > 0")


def sample_matrices(params: EnsembleParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws, shape (n, m, m): GOE(v) plus an independent N(0, u) * identity."""
    m = params.m
    g = rng.standard_normal((n, m, m))
    b = (g + np.swapaxes(g, 1, 2)) * math.sqrt(params.v / 2.0)
    if params.u > 0:
        shift = rng.standard_normal(n) * math.sqrt(params.u)
        b += shift[:, None, None] * np.eye(m)
    return b


def sample_matrix(params: EnsembleParams, rng: np.random.Generator) -> np.ndarray:
    return sample_matrices(params, 1, rng)[0]


def _functional_values(a: np.ndarray, functional: str) -> np.ndarray:
    tr = np.trace(a, axis1=1, axis2=2)
    if functional in ("p", "p2", "p_absdet", "pq"):
        p = tr**2
    if functional in ("q", "q2", "q_absdet", "pq"):
        q = np.einsum("nij,nij->n", a, a)
    if functional in ("absdet", "p_absdet", "q_absdet", "absdet2"):
        f = np.abs(np.linalg.det(a))
    return {
        "absdet": lambda: f,
        "p_absdet": lambda: p * f,
        "q_absdet": lambda: q * f,
        "p": lambda: p,
        "q": lambda: q,
        "p2": lambda: p**2,
        "pq": lambda: p * q,
        "q2": lambda: q**2,
        "absdet2": lambda: f**2,
    }[functional]()


def expect_functional_mc(
    params: EnsembleParams,
    functional: str,
    n_samples: int,
    seed: int = 0,
    antithetic: bool = True,
    batch: int = 200_000,
) -> dict:
    """Plain Monte Carlo mean of an invariant functional, jackknife stderr.

    Antithetic pairing (A, -A) is exact for the even functionals used here
    and halves the sampling work.
    """
    if functional not in FUNCTIONALS:
        raise ValueError(f"unknown functional {functional!r}")
    if n_samples < 10_000:
        raise ValueError("n_samples must be >= 1e4")
    rng = np.random.default_rng(seed)
    n_draw = n_samples // 2 if antithetic else n_samples
    sums, sqs, count = 0.0, 0.0, 0
    block_means = []
    for start in range(0, n_draw, batch):
        k = min(batch, n_draw - start)
        a = sample_matrices(params, k, rng)
        vals = _functional_values(a, functional)
        if antithetic:
            vals = 0.5 * (vals + _functional_values(-a, functional))
        block_means.append((vals.mean(), len(vals)))
        sums += vals.sum()
        sqs += np.sum(vals**2)
        count += len(vals)
    mean = sums / count
    # jackknife over blocks
    if len(block_means) > 1:
        bm = np.array([b[0] for b in block_means])
        bw = np.array([b[1] for b in block_means], dtype=float)
        jk = (sums - bm * bw) / (count - bw)
        stderr = math.sqrt(
            (len(bm) - 1) / len(bm) * np.sum((jk - jk.mean()) ** 2)
        )
    else:
        var = sqs / count - mean**2
        stderr = math.sqrt(max(var, 0.0) / count)
    return {"mean": float(mean), "stderr": float(stderr), "n": count, "seed": seed}


def homogeneous_rescale(value_at_half: float, degree: int, v: float) -> float:
    """E over S(m; v, v) of a degree-k homogeneous functional from its value
    at v = 1/2: multiply by (2 v)^(k/2)."""
    return (2.0 * v) ** (degree / 2.0) * value_at_half


# --- eigenvalue measure ----------------------------------------------------


def weyl_log_norm(m: int, v: float) -> float:
    """log of the eigenvalue-measure normalization Z_m(v) =
    (2 v)^(m (m+1) / 4) 2^(m/2) m! prod_j Gamma(j/2)."""
    out = m * (m + 1) / 4.0 * math.log(2.0 * v) + m / 2.0 * math.log(2.0)
    out += special.gammaln(m + 1)
    out += sum(special.gammaln(j / 2.0) for j in range(1, m + 1))
    return out


def weyl_joint_density(m: int, v: float, lam) -> float:
    """Joint eigenvalue density of GOE(v): |Vandermonde| * Gaussian / Z_m(v)."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (m,):
        raise ValueError(f"lam must have shape ({m},)")
    if m > 6:
        raise ValueError("Weyl quadrature density limited to m <= 6")
    logq = -np.sum(lam**2) / (4.0 * v)
    vand = 1.0
    for i in range(m):
        for j in range(i + 1, m):
            vand *= abs(lam[i] - lam[j])
    return vand * math.exp(logq - weyl_log_norm(m, v))


def _gl_panels(a, b, x: float, k: int):
    """Gauss-Legendre nodes/weights on [a, b], split at x when x lies inside.

    a, b broadcast to any shape; the result appends a node axis of size 2k.
    Empty sub-panels (x outside [a, b]) get zero-length spans, hence zero
    weights, so shapes stay fixed.
    """
    t, u = np.polynomial.legendre.leggauss(k)
    t = 0.5 * (t + 1.0)  # to [0, 1]
    u = 0.5 * u
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    c = np.clip(x, a, b)
    nodes = np.concatenate([a + (c - a) * t, c + (b - c) * t], axis=-1)
    weights = np.concatenate([(c - a) * u, (b - c) * u], axis=-1)
    return nodes, weights


def _rho_quadrature(n: int, v: float, x: float, k: int = 32) -> float:
    """Marginal of the Weyl density by (n-1)-dimensional quadrature, n <= 4.

    The n - 1 free eigenvalues are integrated over the descending-ordered
    region (times (n-1)!), where the Vandermonde factor has a fixed sign,
    and every 1-D panel is split at the kink lam = x; the integrand is then
    analytic on each panel and tensor Gauss-Legendre converges spectrally.
    """
    if n > 4:
        raise ValueError("quadrature path requires n <= 4")
    lim = 2.0 * math.sqrt(v * n) + 6.0 * math.sqrt(2.0 * v)
    log_z = weyl_log_norm(n, v)
    gauss = lambda y: np.exp(-y * y / (4.0 * v))
    if n == 1:
        return math.exp(-x * x / (4.0 * v) - log_z)

    # y1 > y2 > y3 nested from the top
    y1, w1 = _gl_panels(-lim, lim, x, k)  # (2k,)
    vals = np.abs(x - y1) * gauss(y1)
    weight = w1
    if n >= 3:
        y2, w2 = _gl_panels(np.full_like(y1, -lim), y1, x, k)  # (2k, 2k)
        vals = vals[..., None] * np.abs(x - y2) * gauss(y2) * (y1[..., None] - y2)
        weight = weight[..., None] * w2
    if n == 4:
        y3, w3 = _gl_panels(np.full_like(y2, -lim), y2, x, k)  # (2k, 2k, 2k)
        vals = (
            vals[..., None]
            * np.abs(x - y3)
            * gauss(y3)
            * (y1[..., None, None] - y3)
            * (y2[..., None] - y3)
        )
        weight = weight[..., None] * w3
    total = float(np.sum(vals * weight)) * math.factorial(n - 1)
    return total * math.exp(-x * x / (4.0 * v) - log_z)


_rho_cache: dict[tuple, float] = {}


def eigenvalue_histogram_density(
    n: int, v: float, x, n_samples: int = 200, seed: int = 7
):
    """Kernel-smoothed eigenvalue density of GOE(n, v) from sampled spectra.

    n_samples counts matrices; bandwidth follows the n^(-1/5) Silverman-type
    rule on the pooled eigenvalues.
    """
    rng = np.random.default_rng(seed)
    params = EnsembleParams(m=n, u=0.0, v=v)
    eigs = np.concatenate(
        [np.linalg.eigvalsh(sample_matrices(params, 1, rng)[0]) for _ in range(n_samples)]
    )
    kde = stats.gaussian_kde(eigs, bw_method=len(eigs) ** (-1.0 / 5.0))
    return kde(np.atleast_1d(x))


def rho_one_point(n: int, v: float, x: float, mc_samples: int = 400, seed: int = 7) -> float:
    """Normalized one-point eigenvalue density rho_(n, v)(x).

    Exact (n-1)-dimensional quadrature of the Weyl measure for n <= 4;
    kernel-smoothed eigenvalue histogram beyond.
    """
    if n <= 4:
        key = (n, round(v, 14), round(float(x), 14))
        if key not in _rho_cache:
            _rho_cache[key] = _rho_quadrature(n, v, float(x))
        return _rho_cache[key]
    return float(eigenvalue_histogram_density(n, v, x, n_samples=mc_samples, seed=seed)[0])


def semicircle_density(v: float, lam) -> np.ndarray:
    """Limiting bulk density (1 / (2 pi v)) sqrt(4 v - lam^2) on |lam| <= 2 sqrt(v)."""
    if v <= 0:
        raise ValueError("v must be positive")
    lam = np.asarray(lam, dtype=float)
    inside = np.clip(4.0 * v - lam**2, 0.0, None)
    return np.sqrt(inside) / (2.0 * np.pi * v)


def det_weight_constant(m: int) -> float:
    """C_m = 2^(3/2) Gamma((m+3)/2), evaluated in log space."""
    return math.exp(1.5 * math.log(2.0) + special.gammaln((m + 3) / 2.0))


def fyodorov_absdet(m: int, v: float, lam: float, **rho_kwargs) -> float:
    """E over GOE(m, v) of |det(lam + B)| via the one-point density:

        (2 v)^((m+1)/2) C_m exp(lam^2 / (4 v)) rho_(m+1, v)(lam).
    """
    rho = rho_one_point(m + 1, v, lam, **rho_kwargs)
    log_val = (
        (m + 1) / 2.0 * math.log(2.0 * v)
        + 1.5 * math.log(2.0)
        + special.gammaln((m + 3) / 2.0)
        + lam * lam / (4.0 * v)
    )
    return math.exp(log_val) * rho


def expect_absdet_S(m: int, v: float, quad_points: int = 201) -> float:
    """E over S(m; v, v) of |det A|: Gaussian average over the identity shift,

        (2 v)^((m+1)/2) C_m / sqrt(2 pi v) * integral rho_(m+1,v)(lam)
            exp(-lam^2 / (4 v)) dlam.

    The density is splined on a symmetric grid before the 1-D quadrature (it
    is smooth and even), keeping the number of (n-1)-dim quadratures small.
    """
    lim = 2.0 * math.sqrt(v) * (math.sqrt(m + 1) + 4.0)
    xs = np.linspace(0.0, lim, quad_points)
    rho = np.array([rho_one_point(m + 1, v, x) for x in xs])
    integrand = rho * np.exp(-(xs**2) / (4.0 * v))
    half = integrate.simpson(integrand, x=xs)
    log_pref = (
        (m + 1) / 2.0 * math.log(2.0 * v)
        + 1.5 * math.log(2.0)
        + special.gammaln((m + 3) / 2.0)
        - 0.5 * math.log(2.0 * math.pi * v)
    )
    return math.exp(log_pref) * 2.0 * half


def _log_cm(m: int) -> float:
    return 1.5 * math.log(2.0) + special.gammaln((m + 3) / 2.0)


def asymptotic_targets(m: int) -> dict:
    """Large-m predictions at v = 1/2 for E[f], E[p f], E[q f], f = |det|.

    These are the printed leading-order constants:
        E[f]   ~ C_m sqrt(2/pi) m^(-1/2),
        E[p f] ~ 2 C_m / sqrt(pi) m^(3/2),
        E[q f] ~ C_m / sqrt(2 pi) m^(7/2),
    evaluated in log space (C_20 overflows naive products).
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    lc = _log_cm(m)
    return {
        "E_f": math.exp(lc + 0.5 * math.log(2.0 / math.pi) - 0.5 * math.log(m)),
        "E_pf": math.exp(lc + math.log(2.0) - 0.5 * math.log(math.pi) + 1.5 * math.log(m)),
        "E_qf": math.exp(lc - 0.5 * math.log(2.0 * math.pi) + 3.5 * math.log(m)),
        "log_Cm": lc,
    }


def asymptotic_targets_semicircle(m: int) -> dict:
    """Same targets with the constants rederived from the semicircle density.

    The printed constants implicitly use a bulk-center density value of
    sqrt(2/pi); the semicircle density itself gives rho(0) = sqrt(2)/pi at
    v = 1/2, and carrying that value through the derivation (together with
    the first-order tilt derivative for the q-weighted case) yields

        E[f]   ~ C_m (2/pi) m^(-1/2),
        E[p f] ~ (2/pi) C_m m^(3/2),
        E[q f] ~ (1/pi) C_m m^(3/2) (m + 3) / m.

    These are the variants our Monte Carlo sweeps actually converge to.
    """
    lc = _log_cm(m)
    return {
        "E_f": math.exp(lc + math.log(2.0 / math.pi) - 0.5 * math.log(m)),
        "E_pf": math.exp(lc + math.log(2.0 / math.pi) + 1.5 * math.log(m)),
        "E_qf": math.exp(lc - math.log(math.pi) + 0.5 * math.log(m) + math.log(m + 3)),
        "log_Cm": lc,
    }
