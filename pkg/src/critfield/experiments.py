"""End-to-end Monte Carlo experiments on the critical-point count.

A run synthesizes R independent field realizations on growing cubes
[-N, N]^m, counts critical points, and checks the three limit statements:
the mean E[Z_N] = C_m(w) (2N)^m, the variance plateau V_N = var(Z_N)/(2N)^m,
and asymptotic normality of the rescaled fluctuation

    zeta_N = (2N)^(-m/2) (Z_N - E[Z_N]).

Records are persisted as JSON plus companion CSVs so every statistic can be
recomputed from the stored raw counts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .critpoints import count_kacrice_smoothed, count_newton, expected_count
from .field import GridSpec, synthesize
from .spectrum import SpectralDensity, spectral_moments

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "run_clt",
    "variance_scaling",
    "normality_test",
    "estimator_crosscheck",
    "save_record",
    "load_record",
]

_DEFAULT_N_CAP = {2: 20.0, 3: 7.0}


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs for one CLT sweep; hashable to a hex digest for provenance."""

    density_family: str
    density_params: tuple[float, ...]
    m: int
    n_list: tuple[float, ...]
    realizations: int
    points_per_unit: int = 8
    padding_factor: float = 2.0
    master_seed: int = 0
    eps_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025, 0.0125)
    e_absdet_s1: float | None = None
    mc_budget: int = 1_000_000

    def __post_init__(self):
        if list(self.n_list) != sorted(self.n_list) or len(self.n_list) == 0:
            raise ValueError("n_list must be nonempty and increasing")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        cap = _DEFAULT_N_CAP.get(self.m, 0.0)
        if max(self.n_list) > cap:
            raise ValueError(
                f"largest half-width {max(self.n_list)} exceeds the m={self.m} "
                f"grid budget cap {cap}"
            )

    def density(self) -> SpectralDensity:
        return SpectralDensity(family=self.density_family, params=self.density_params)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ExperimentRecord:
    """Raw counts plus derived statistics for one sweep."""

    config_digest: str
    m: int
    n_list: tuple[float, ...]
    z_samples: dict[float, np.ndarray]  # N -> raw counts, failures excluded
    failures: dict[float, int]
    expected_mean: dict[float, float]  # theoretical E[Z_N]
    zeta_theoretical: dict[float, np.ndarray]
    zeta_pooled: dict[float, np.ndarray]
    c_m: float
    wall_time: float
    flags: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        out = {}
        for n in self.n_list:
            z = self.z_samples[n]
            out[n] = {
                "R": len(z),
                "mean": float(z.mean()),
                "expected": self.expected_mean[n],
                "var": float(z.var(ddof=1)) if len(z) > 1 else float("nan"),
                "failures": self.failures[n],
            }
        return out


def _count_one(w, m, n_half, ppu, pad, seed):
    spec = GridSpec(m=m, half_width=n_half, points_per_unit=ppu, padding_factor=pad)
    fr = synthesize(w, spec, seed=seed)
    box = ((-n_half,) * m, (n_half,) * m)
    cps = count_newton(fr, box)
    if cps.failed_cells > 0.05 * max(cps.newton_count, 1):
        raise RuntimeError(f"{cps.failed_cells} unresolved cells")
    return cps.newton_count


def run_clt(config: ExperimentConfig) -> ExperimentRecord:
    """Synthesize, count, and center; deterministic given the master seed.

    Realizations draw from SeedSequence(master).spawn streams, one per
    (N index, replicate), so per-N results do not depend on sweep order.
    A level aborts if more than 5% of its realizations fail.
    """
    t0 = time.perf_counter()
    w = config.density()
    m = config.m
    moments = spectral_moments(w, m)
    if config.e_absdet_s1 is not None:
        e_absdet = config.e_absdet_s1
    else:
        from .randmat import EnsembleParams, expect_functional_mc

        e_absdet = expect_functional_mc(
            EnsembleParams(m=m, u=1.0, v=1.0),
            "absdet",
            max(config.mc_budget, 100_000),
            seed=config.master_seed,
        )["mean"]
    c_m = (moments.h / (2.0 * math.pi * moments.d)) ** (m / 2.0) * e_absdet

    flags = [] if config.realizations >= 30 else ["insufficient: R < 30"]
    z_samples, failures, expected, zt, zp = {}, {}, {}, {}, {}
    for i, n_half in enumerate(config.n_list):
        streams = np.random.SeedSequence((config.master_seed, i)).spawn(
            config.realizations
        )
        counts, n_fail = [], 0
        for ss in streams:
            seed = int(ss.generate_state(1)[0])
            try:
                counts.append(
                    _count_one(
                        w, m, n_half, config.points_per_unit,
                        config.padding_factor, seed,
                    )
                )
            except (RuntimeError, FloatingPointError) as exc:
                n_fail += 1
                flags.append(f"N={n_half}: realization failed ({exc})")
        if n_fail > 0.05 * config.realizations:
            raise RuntimeError(
                f"N={n_half}: {n_fail}/{config.realizations} realizations failed"
            )
        z = np.array(counts, dtype=float)
        ez = expected_count(moments, m, (2.0 * n_half) ** m, e_absdet)
        scale = (2.0 * n_half) ** (m / 2.0)
        z_samples[n_half] = z
        failures[n_half] = n_fail
        expected[n_half] = ez
        zt[n_half] = (z - ez) / scale
        zp[n_half] = (z - z.mean()) / scale
    return ExperimentRecord(
        config_digest=config.digest(),
        m=m,
        n_list=config.n_list,
        z_samples=z_samples,
        failures=failures,
        expected_mean=expected,
        zeta_theoretical=zt,
        zeta_pooled=zp,
        c_m=c_m,
        wall_time=time.perf_counter() - t0,
        flags=flags,
    )


def variance_scaling(record: ExperimentRecord, n_boot: int = 2000, seed: int = 1) -> dict:
    """V_N = var(Z_N) / (2N)^m with bootstrap CIs and a plateau diagnostic."""
    rng = np.random.default_rng(seed)
    table = {}
    for n in record.n_list:
        z = record.z_samples[n]
        if len(z) < 2:
            table[n] = {"V_N": float("nan"), "ci": (float("nan"), float("nan"))}
            continue
        scale = (2.0 * n) ** record.m
        vn = z.var(ddof=1) / scale
        idx = rng.integers(0, len(z), size=(n_boot, len(z)))
        boots = z[idx].var(axis=1, ddof=1) / scale
        lo, hi = np.percentile(boots, [2.5, 97.5])
        table[n] = {
            "V_N": float(vn),
            "ci": (float(lo), float(hi)),
            "bootstrap_se": float(boots.std(ddof=1)),
        }
    ns = [n for n in record.n_list if np.isfinite(table[n]["V_N"])]
    if len(ns) >= 2:
        table["plateau_ratio"] = table[ns[-1]]["V_N"] / table[ns[-2]]["V_N"]
    return table


def normality_test(zeta: np.ndarray, variance: float) -> dict:
    """One-sample Kolmogorov-Smirnov test of zeta against N(0, variance).

    scipy uses the exact KS null distribution for n <= 1000 in 'exact' mode.
    """
    zeta = np.asarray(zeta, dtype=float)
    if len(zeta) < 100:
        warnings.warn("fewer than 100 samples; KS p-value is unreliable", stacklevel=2)
    if variance <= 0:
        raise ValueError("variance must be positive")
    method = "exact" if len(zeta) <= 1000 else "asymp"
    res = stats.kstest(
        zeta, stats.norm(scale=math.sqrt(variance)).cdf, method=method
    )
    return {"statistic": float(res.statistic), "p_value": float(res.pvalue), "n": len(zeta)}


def estimator_crosscheck(config: ExperimentConfig) -> dict:
    """Per-realization Newton vs smoothed counting-measure agreement.

    Runs at the smallest N in the config with the configured eps ladder;
    reports relative disagreement quantiles per eps.
    """
    w = config.density()
    m = config.m
    n_half = config.n_list[0]
    if n_half > 5:
        raise ValueError("crosscheck is intended for N <= 5")
    spec = GridSpec(
        m=m, half_width=n_half, points_per_unit=config.points_per_unit,
        padding_factor=config.padding_factor,
    )
    box = ((-n_half,) * m, (n_half,) * m)
    rows = []
    streams = np.random.SeedSequence((config.master_seed, 0x9C)).spawn(
        config.realizations
    )
    for ss in streams:
        seed = int(ss.generate_state(1)[0])
        fr = synthesize(w, spec, seed=seed)
        newton = count_newton(fr, box).newton_count
        row = {"seed": seed, "newton": newton}
        for eps in config.eps_list:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row[f"kacrice_eps={eps}"] = count_kacrice_smoothed(fr, box, eps)
        rows.append(row)
    out = {"rows": rows}
    for eps in config.eps_list:
        rel = np.array(
            [
                abs(r[f"kacrice_eps={eps}"] - r["newton"]) / max(r["newton"], 1)
                for r in rows
            ]
        )
        out[f"median_rel_eps={eps}"] = float(np.median(rel))
    return out


# --- persistence ------------------------------------------------------------


def save_record(record: ExperimentRecord, out_dir) -> Path:
    """JSON summary plus per-N CSVs of raw and centered counts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "config_digest": record.config_digest,
        "m": record.m,
        "n_list": list(record.n_list),
        "c_m": record.c_m,
        "expected_mean": {str(k): v for k, v in record.expected_mean.items()},
        "failures": {str(k): v for k, v in record.failures.items()},
        "summary": {str(k): v for k, v in record.summary().items()},
        "wall_time": record.wall_time,
        "flags": record.flags,
    }
    (out / "record.json").write_text(json.dumps(doc, indent=2))
    for n in record.n_list:
        with open(out / f"samples_N{n:g}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["Z", "zeta_theoretical", "zeta_pooled"])
            for z, zt, zp in zip(
                record.z_samples[n],
                record.zeta_theoretical[n],
                record.zeta_pooled[n],
            ):
                wr.writerow([f"{z:.1f}", f"{zt:.10g}", f"{zp:.10g}"])
    vtab = variance_scaling(record)
    with open(out / "variance.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["N", "V_N", "ci_lo", "ci_hi"])
        for n in record.n_list:
            row = vtab[n]
            wr.writerow([n, row["V_N"], row["ci"][0], row["ci"][1]])
    return out / "record.json"


def load_record(path) -> dict:
    return json.loads(Path(path).read_text())
