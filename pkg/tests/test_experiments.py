import numpy as np
import pytest

from conecount import experiments as ex
from conecount.experiments import (
    ExperimentConfig,
    ExperimentError,
    ExperimentRefused,
    fit_exponent,
    parse_config_text,
    rows_to_csv,
    run_experiment,
    trial_seed,
)


def test_fit_exponent_exact_square():
    fit = fit_exponent([(x, x * x) for x in (1.0, 2.0, 3.0, 7.0)])
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.residual_rms < 1e-12


def test_fit_exponent_constant():
    fit = fit_exponent([(x, 5.0) for x in (1.0, 2.0, 4.0, 8.0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_fit_exponent_noisy_power():
    rng = np.random.default_rng(123)
    xs = np.geomspace(1, 100, 40)
    ys = xs**1.5 * (1 + 0.01 * rng.standard_normal(xs.size))
    fit = fit_exponent(list(zip(xs, ys)))
    assert 1.45 <= fit.slope <= 1.55


def test_fit_exponent_validation():
    with pytest.raises(ExperimentError):
        fit_exponent([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(ExperimentError):
        fit_exponent([(1.0, -1.0), (2.0, 2.0), (3.0, 3.0)])


def test_trial_seed_deterministic():
    assert trial_seed(7, 0, 3) == trial_seed(7, 0, 3)
    assert trial_seed(7, 0, 3) != trial_seed(7, 0, 4)
    assert trial_seed(7, 1, 3) != trial_seed(7, 0, 3)


def test_config_parsing():
    cfg = parse_config_text(
        """
        kind=equidistribution   # a comment
        n=2
        T=100,200,400
        r=0.4
        trials=9
        seed=5
        threads=3
        psi=pow:c=0.5,lambda=1
        omega=-2:2
        gamma=0.25
        psi_families=pow:c=1,lambda=0.5;const:c=0.4
        """
    )
    assert cfg.kind == "equidistribution"
    assert cfg.T_grid == (100.0, 200.0, 400.0)
    assert cfg.trials == 9 and cfg.threads == 3
    assert cfg.extra["gamma"] == 0.25
    assert cfg.extra["psi_families"] == ("pow:c=1,lambda=0.5", "const:c=0.4")
    assert cfg.omega_box == ((-2.0, 2.0),)
    with pytest.raises(ExperimentError):
        parse_config_text("n=2\n")


def test_csv_format():
    rows = [
        {"kind": "k", "n": 2, "T": 10.0, "param": 0.5, "trial": 0, "seed": 1,
         "count": 3, "main": 2.5, "disc": 0.5, "relerr": 0.2}
    ]
    text = rows_to_csv(rows)
    lines = text.split("\n")
    assert lines[0] == "kind,n,T,param,trial,seed,count,main,disc,relerr"
    assert lines[1] == "k,2,10.0,0.5,0,1,3,2.5,0.5,0.2"
    assert text.endswith("\n") and "\r" not in text


def test_equidistribution_small(points_n2_small, form_n2):
    cfg = ExperimentConfig(kind="equidistribution", n=2, T_grid=(100.0, 200.0, 399.0),
                           r=0.4, trials=8, seed=3)
    res = run_experiment(cfg, points=points_n2_small)
    assert len(res.rows) == 24
    assert res.passed
    # main terms use the exact cap measure
    row = res.rows[0]
    assert row["main"] > 0 and row["relerr"] < 0.2


def test_equidistribution_threads_deterministic(points_n2_small):
    def run(threads):
        cfg = ExperimentConfig(kind="equidistribution", n=2, T_grid=(100.0, 200.0),
                               r=0.4, trials=8, seed=11, threads=threads)
        return rows_to_csv(run_experiment(cfg, points=points_n2_small).rows)

    assert run(1) == run(4)


def test_generic_caps_small(points_n2_small):
    cfg = ExperimentConfig(kind="generic-caps", n=2, T_grid=(100.0, 200.0, 399.0),
                           lam=0.4, trials=10, seed=3)
    res = run_experiment(cfg, points=points_n2_small)
    assert "C_envelope" in res.frozen
    assert all(name.startswith("generic-cap-envelope") for name, _, _ in res.verdicts)


def test_khintchine_refuses_convergent_psi(points_n2_small):
    cfg = ExperimentConfig(kind="khintchine", n=2, T_grid=(100.0, 200.0),
                           psi="pow:c=1,lambda=2", trials=4, seed=0)
    with pytest.raises(ExperimentRefused):
        run_experiment(cfg, points=points_n2_small)


def test_khintchine_refuses_secondary_term_dimension():
    cfg = ExperimentConfig(kind="khintchine", n=9, T_grid=(10.0, 20.0),
                           psi="pow:c=0.5,lambda=1", trials=2, seed=0)
    with pytest.raises(ExperimentRefused):
        ex.run_khintchine(cfg, points=np.zeros((0, 11), dtype=np.int64))


def test_saturation_refuses_divergent_psi(points_n2_small):
    cfg = ExperimentConfig(kind="khintchine-saturation", n=2, T_grid=(100.0, 200.0),
                           psi="pow:c=0.5,lambda=1", trials=4, seed=0)
    with pytest.raises(ExperimentRefused):
        run_experiment(cfg, points=points_n2_small)


def test_saturation_small(points_n2_small):
    cfg = ExperimentConfig(kind="khintchine-saturation", n=2, T_grid=(50.0, 200.0, 399.0),
                           psi="pow:c=1,lambda=2", trials=10, seed=6)
    res = run_experiment(cfg, points=points_n2_small)
    assert res.summary["saturated_fraction"] >= 0.9


def test_wellroundedness_small():
    cfg = ExperimentConfig(kind="wellroundedness", n=2, checks=500, seed=5)
    res = run_experiment(cfg)
    assert res.passed
    assert res.summary["sector_violations"] == 0
    assert res.summary["region_violations"] == 0


def test_sum_integral_small():
    cfg = ExperimentConfig(kind="sum-integral", n=2, T_grid=(100.0, 1000.0), seed=0)
    res = run_experiment(cfg)
    assert res.passed and len(res.frozen) == 3


def test_valdist_small(points_n3):
    cfg = ExperimentConfig(kind="valdist", n=3, m=1, T_grid=(60.0, 120.0),
                           trials=3, seed=2, omega_box=((-2.0, 2.0),),
                           extra={"vl_samples": 50_000})
    res = run_experiment(cfg, points=points_n3)
    assert res.summary["medians"]
    # counts positive and ratios sane at this scale
    assert all(row["count"] > 0 for row in res.rows)


def test_unknown_kind():
    with pytest.raises(ExperimentError):
        run_experiment(ExperimentConfig(kind="nope"))


def test_verdict_text_format():
    cfg = ExperimentConfig(kind="sum-integral", n=1, T_grid=(100.0, 1000.0), seed=0)
    res = run_experiment(cfg)
    text = ex.verdict_text(res)
    assert all(line.startswith(("PASS", "FAIL")) for line in text.strip().splitlines())
