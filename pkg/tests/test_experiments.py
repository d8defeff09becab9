import numpy as np
import pytest

from critfield.experiments import (
    ExperimentConfig,
    ExperimentRecord,
    estimator_crosscheck,
    load_record,
    normality_test,
    run_clt,
    save_record,
    variance_scaling,
)

# keeps the suite off the (slow) determinant Monte Carlo path
E_ABSDET = 2.3094

SMALL = ExperimentConfig(
    density_family="gaussian",
    density_params=(1.0,),
    m=2,
    n_list=(3.0, 4.0),
    realizations=8,
    points_per_unit=8,
    master_seed=42,
    e_absdet_s1=E_ABSDET,
)


@pytest.fixture(scope="module")
def small_record():
    return run_clt(SMALL)


class TestConfig:
    def test_digest_stable_and_sensitive(self):
        assert SMALL.digest() == ExperimentConfig(**{**_asdict(SMALL)}).digest()
        other = ExperimentConfig(**{**_asdict(SMALL), "master_seed": 43})
        assert other.digest() != SMALL.digest()

    def test_n_list_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(**{**_asdict(SMALL), "n_list": (4.0, 3.0)})
        with pytest.raises(ValueError):
            ExperimentConfig(**{**_asdict(SMALL), "n_list": ()})

    def test_grid_budget_cap(self):
        with pytest.raises(ValueError):
            ExperimentConfig(**{**_asdict(SMALL), "n_list": (25.0,)})
        with pytest.raises(ValueError):
            ExperimentConfig(**{**_asdict(SMALL), "m": 3, "n_list": (8.0,)})

    def test_realizations_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(**{**_asdict(SMALL), "realizations": 0})


def _asdict(cfg: ExperimentConfig) -> dict:
    return {
        "density_family": cfg.density_family,
        "density_params": cfg.density_params,
        "m": cfg.m,
        "n_list": cfg.n_list,
        "realizations": cfg.realizations,
        "points_per_unit": cfg.points_per_unit,
        "padding_factor": cfg.padding_factor,
        "master_seed": cfg.master_seed,
        "eps_list": cfg.eps_list,
        "e_absdet_s1": cfg.e_absdet_s1,
        "mc_budget": cfg.mc_budget,
    }


class TestRunClt:
    def test_counts_near_expectation(self, small_record):
        for n in SMALL.n_list:
            z = small_record.z_samples[n]
            assert len(z) == SMALL.realizations
            assert small_record.failures[n] == 0
            ez = small_record.expected_mean[n]
            # mean count within 5 standard errors of the Kac-Rice prediction
            se = z.std(ddof=1) / np.sqrt(len(z))
            assert abs(z.mean() - ez) < 5 * se

    def test_small_r_is_flagged(self, small_record):
        assert "insufficient: R < 30" in small_record.flags
        big_enough = run_clt(
            ExperimentConfig(**{
                **_asdict(SMALL), "n_list": (3.0,), "realizations": 30,
            })
        )
        assert "insufficient: R < 30" not in big_enough.flags

    def test_deterministic(self, small_record):
        again = run_clt(SMALL)
        for n in SMALL.n_list:
            np.testing.assert_array_equal(
                again.z_samples[n], small_record.z_samples[n]
            )
        assert again.config_digest == small_record.config_digest

    def test_seed_changes_counts(self, small_record):
        other = run_clt(ExperimentConfig(**{**_asdict(SMALL), "master_seed": 7}))
        assert any(
            not np.array_equal(other.z_samples[n], small_record.z_samples[n])
            for n in SMALL.n_list
        )

    def test_centering_conventions(self, small_record):
        for n in SMALL.n_list:
            scale = (2.0 * n) ** (SMALL.m / 2.0)
            z = small_record.z_samples[n]
            np.testing.assert_allclose(
                small_record.zeta_theoretical[n],
                (z - small_record.expected_mean[n]) / scale,
            )
            assert abs(small_record.zeta_pooled[n].mean()) < 1e-12
            # the two centerings differ by a constant offset only
            diff = small_record.zeta_theoretical[n] - small_record.zeta_pooled[n]
            assert np.ptp(diff) < 1e-10


class TestVarianceScaling:
    def test_table_structure(self, small_record):
        table = variance_scaling(small_record)
        for n in SMALL.n_list:
            row = table[n]
            assert row["ci"][0] <= row["V_N"] <= row["ci"][1]
            assert row["V_N"] > 0
        assert "plateau_ratio" in table

    def test_degenerate_sample(self):
        rec = _constant_record()
        table = variance_scaling(rec)
        assert table[2.0]["V_N"] == 0.0

    def test_single_sample_gives_nan(self):
        rec = _constant_record(r=1)
        table = variance_scaling(rec)
        assert np.isnan(table[2.0]["V_N"])


def _constant_record(r: int = 16) -> ExperimentRecord:
    z = np.full(r, 21.0)
    return ExperimentRecord(
        config_digest="0" * 16,
        m=2,
        n_list=(2.0,),
        z_samples={2.0: z},
        failures={2.0: 0},
        expected_mean={2.0: 21.0},
        zeta_theoretical={2.0: z - 21.0},
        zeta_pooled={2.0: z - z.mean()},
        c_m=21.0 / 16.0,
        wall_time=0.0,
    )


class TestNormality:
    def test_calibration_on_normal_sample(self):
        rng = np.random.default_rng(0)
        zeta = rng.normal(scale=np.sqrt(2.0), size=500)
        res = normality_test(zeta, variance=2.0)
        assert res["p_value"] > 0.01
        assert res["n"] == 500

    def test_power_against_uniform(self):
        rng = np.random.default_rng(1)
        zeta = rng.uniform(-1.0, 1.0, size=500)
        res = normality_test(zeta, variance=1.0)
        assert res["p_value"] < 1e-4

    def test_wrong_variance_detected(self):
        rng = np.random.default_rng(2)
        zeta = rng.normal(scale=3.0, size=500)
        res = normality_test(zeta, variance=1.0)
        assert res["p_value"] < 1e-6

    def test_small_sample_warns(self):
        rng = np.random.default_rng(3)
        with pytest.warns(UserWarning):
            normality_test(rng.normal(size=50), variance=1.0)

    def test_bad_variance_rejected(self):
        with pytest.raises(ValueError):
            normality_test(np.zeros(200), variance=0.0)


class TestCrosscheck:
    def test_agreement_at_small_box(self):
        cfg = ExperimentConfig(**{
            **_asdict(SMALL),
            "n_list": (3.0,),
            "realizations": 3,
            "points_per_unit": 16,
            "eps_list": (0.1, 0.05),
        })
        out = estimator_crosscheck(cfg)
        assert len(out["rows"]) == 3
        for row in out["rows"]:
            assert row["newton"] > 0
        assert out["median_rel_eps=0.05"] < 0.2

    def test_large_box_rejected(self):
        cfg = ExperimentConfig(**{**_asdict(SMALL), "n_list": (6.0, 7.0), "m": 3})
        with pytest.raises(ValueError):
            estimator_crosscheck(cfg)


class TestPersistence:
    def test_roundtrip(self, small_record, tmp_path):
        path = save_record(small_record, tmp_path / "run")
        doc = load_record(path)
        assert doc["config_digest"] == small_record.config_digest
        assert doc["m"] == 2
        assert doc["n_list"] == [3.0, 4.0]
        for n in SMALL.n_list:
            assert doc["failures"][str(n)] == 0
            csv_path = tmp_path / "run" / f"samples_N{n:g}.csv"
            assert csv_path.exists()
            lines = csv_path.read_text().strip().splitlines()
            assert len(lines) == 1 + SMALL.realizations
        assert (tmp_path / "run" / "variance.csv").exists()
