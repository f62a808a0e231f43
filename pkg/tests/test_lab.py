import json
import math

import numpy as np
import pytest

from occwalk import lab
from occwalk.lab import ConfigError, ExperimentConfig as C, run_experiment
from occwalk.sequences import make_power_law

SMALL = {
    "laplace": C(horizons=[2000], replicates=1000, seed=1),
    "return_prob": C(horizons=[2000], replicates=5000, seed=1, options={"exact_n": [50, 100]}),
    "last_visit": C(horizons=[2000], replicates=5000, seed=1,
                    options={"ks_replicates": 1000, "joint_replicates": 500}),
    "maxima": C(horizons=[4000], replicates=1000, seed=1),
    "T_clt": C(horizons=[300], replicates=1000, seed=1),
    "eta_clt": C(horizons=[4000], replicates=1000, seed=1),
    "ldp": C(horizons=[10, 20], seed=1),
    "supercritical": C(horizons=[2000], replicates=1000, seed=1, options={"lt_n": 50}),
    "lil_smoke": C(horizons=[20000], replicates=2, seed=1),
    "kakutani": C(horizons=[10 ** 5], replicates=20000, seed=1),
}


@pytest.mark.parametrize("name", list(SMALL))
def test_runner_shape_and_controls(name):
    lab.clear_caches()
    rep = run_experiment(name, SMALL[name])
    d = json.loads(rep.to_json())
    assert d["schema"] == "occwalk/1" and d["experiment"] == name
    assert rep.verdict in ("pass", "fail", "informational")
    controls = [c for c in rep.checks if c.kind == "control"]
    assert controls, "every runner carries a negative control"
    assert all(c.passed for c in controls)
    assert d["config"]["seed"] == 1
    assert rep.wall_time >= 0


@pytest.mark.parametrize("name", ["laplace", "T_clt", "kakutani", "ldp", "last_visit"])
def test_rerun_is_bit_identical(name):
    lab.clear_caches()
    a = run_experiment(name, SMALL[name]).to_json(wall_time=False)
    lab.clear_caches()
    b = run_experiment(name, SMALL[name]).to_json(wall_time=False)
    assert a == b


def test_workers_do_not_change_report():
    lab.clear_caches()
    a = run_experiment("laplace", C(horizons=[2000], replicates=500, seed=3, workers=1))
    lab.clear_caches()
    b = run_experiment("laplace", C(horizons=[2000], replicates=500, seed=3, workers=None))
    assert a.stable_dict()["statistics"] == b.stable_dict()["statistics"]


def test_csv_export():
    rep = run_experiment("ldp", SMALL["ldp"])
    text = rep.to_csv()
    assert "\r" not in text
    header, first = text.splitlines()[:2]
    assert header.startswith("n,a_n")
    a_n = first.split(",")[1]
    assert float(a_n) == rep.table[0]["a_n"]
    assert len(a_n.replace(".", "").lstrip("0")) >= 15


def test_config_gating():
    with pytest.raises(ConfigError):
        run_experiment("laplace", C(eps="constant:0", horizons=[100], replicates=20))
    with pytest.raises(ConfigError):
        run_experiment("laplace", C(horizons=[101], replicates=20))
    with pytest.raises(ConfigError):
        run_experiment("supercritical", C(eps="power_law:0.5:1", horizons=[100]))
    with pytest.raises(ConfigError):
        run_experiment("ldp", C(horizons=[500]))
    with pytest.raises(KeyError):
        run_experiment("nope", C())


def test_shared_runs():
    lab.clear_caches()
    cfg = C(horizons=[1000], replicates=3000, seed=9, options={"exact_n": [], "ks_replicates": 500,
                                                              "joint_replicates": 0})
    run_experiment("return_prob", cfg)
    key = next(iter(lab._RETURN_CACHE))
    run_experiment("last_visit", cfg)
    assert next(iter(lab._RETURN_CACHE)) == key and len(lab._RETURN_CACHE) == 1


def test_derived_seeds_differ():
    assert lab.derive_seed(1, "summary") != lab.derive_seed(1, "returns")
    assert lab.derive_seed(1, "summary") == lab.derive_seed(1, "summary")


def test_tau_cumulants_match_exact_pmf():
    from occwalk import exact
    for d in (0.3, 0.7):
        pmf = exact.tau_pmf(d)
        m1, var, k3 = lab.tau_cumulants(np.array([d]))
        mu = pmf.mean()
        assert m1[0] == pytest.approx(mu, rel=1e-9)
        assert var[0] == pytest.approx(pmf.moment(2) - mu ** 2, rel=1e-8)
        c3 = math.fsum(pmf.weights * (pmf.values - mu) ** 3)
        assert k3[0] == pytest.approx(c3, rel=1e-7)


def test_exact_laplace_transform_matches_pmf():
    from occwalk import exact
    eps = make_power_law(2)
    n = 6
    pmf = exact.T_n_pmf(eps, n)
    direct = math.fsum(pmf.weights * np.exp(-0.5 * pmf.values / n ** 2))
    assert lab.exact_laplace_transform(eps, n, 0.5) == pytest.approx(direct, abs=1e-10)


def test_renewal_max_tail_single_excursion():
    from occwalk import exact
    from occwalk.sequences import make_constant
    eps = make_constant(0.2)   # c_n excursions of drift 0.2
    n = 12
    c = lab.scaling_for(eps).c(n)
    p = lab.renewal_max_tail(eps, n, 3.0)
    one = 0.5 * (1 - exact.ruin_prob(0.2, 4))
    assert p == pytest.approx(1 - (1 - one) ** c, rel=1e-12)


def test_renewal_eta_reference_is_cdf():
    cdf = lab.renewal_eta_cdf(make_power_law(0.5), 10 ** 4)
    z = np.linspace(-5, 5, 201)
    v = cdf(z)
    assert np.all(np.diff(v) >= -1e-12) and v[0] == 0.0 and v[-1] == pytest.approx(1.0, abs=1e-6)


def test_edgeworth_reduces_to_normal():
    from occwalk.limits import Phi
    z = np.linspace(-3, 3, 13)
    assert np.allclose(lab.edgeworth_cdf(0.0)(z), Phi(z))
