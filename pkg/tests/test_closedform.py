import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netemp import SignalConfig, build_branch, build_cycle, information_matrix
from netemp import closedform as cf
from netemp.emp import enumerate_branch_emps, enumerate_cycle_emps, find_emp
from netemp.netmodel import DegenerateParameterError, ValidationError


def series_gammas(z, terms=4000):
    # impulse response of 1 / (1 - z q^-2)^2 is (m + 1) z^m at lag 2m, zero at odd lags
    m = np.arange(terms)
    h = (m + 1) * z ** m
    return float(np.sum(h * h)), float(np.sum(h[:-1] * h[1:]))


@pytest.mark.parametrize("z", [-0.9, -0.5, 0.0, 0.1, 0.25, 0.5, 0.8])
def test_gamma_series_oracle(z):
    g0, g2 = cf.gamma_coeffs(z)
    s0, s2 = series_gammas(z)
    assert g0 == pytest.approx(s0, rel=1e-12)
    assert g2 == pytest.approx(s2, rel=1e-12, abs=1e-15)


@given(st.floats(-0.3, 0.3))
def test_published_gammas_agree_to_second_order(z):
    e0, e2 = cf.gamma_coeffs(z)
    p0, p2 = cf.gamma_coeffs(z, "published")
    assert abs(e0 - p0) <= 40 * z ** 4 + 1e-15
    assert abs(e2 - p2) <= 20 * abs(z) ** 3 + 1e-15


def test_gamma_domain():
    with pytest.raises(DegenerateParameterError):
        cf.gamma_coeffs(1.0)
    with pytest.raises(ValueError):
        cf.gamma_coeffs(0.1, "other")


def engine_variances(model, label, emps, config):
    r = information_matrix(model, find_emp(emps, label), config)
    return np.diag(r.P)


def twonode_draw(rng):
    while True:
        a12, a21 = rng.uniform(-1.5, 1.5, 2)
        if abs(a12 * a21) < 0.95 and min(abs(a12), abs(a21)) > 0.05:
            s1, s2, l1, l2 = rng.uniform(0.1, 5, 4)
            return cf.TwoNodeCycleParams(a12, a21, s1, s2, l1, l2)


@pytest.mark.parametrize("label", ["I", "II", "III", "IV"])
def test_twonode_matches_engine(rng, label):
    emps = enumerate_cycle_emps(2)
    for _ in range(100):
        p = twonode_draw(rng)
        model = build_cycle(2, (p.a21, p.a12))
        config = SignalConfig({1: p.sigma1, 2: p.sigma2}, {1: p.lambda1, 2: p.lambda2})
        P = information_matrix(model, find_emp(emps, label), config).P
        np.testing.assert_allclose(cf.twonode_covariance(label, p), P, rtol=1e-9)


def test_twonode_fully_symmetric():
    p = cf.TwoNodeCycleParams(0.5, 0.5)
    traces = [cf.trace(cf.twonode_variances(k, p)) for k in ("I", "II", "III", "IV")]
    assert max(traces) - min(traces) <= 1e-12 * max(traces)
    # both variances are tied in the ratio 4 for this case
    v12, v21 = cf.twonode_variances("I", p)
    assert v21 / v12 == pytest.approx(4.0)


def test_published_gammas_reproduce_unequal_cases():
    # only a printed-formula curiosity: the cases with unequal gains come out right
    p = cf.TwoNodeCycleParams(a12=0.5, a21=1.0)
    v = cf.twonode_variances("II", p, gammas="published")
    assert v == pytest.approx((0.41, 0.66), abs=0.01)


def test_twonode_validation():
    with pytest.raises(ValidationError):
        cf.TwoNodeCycleParams(1.0, 1.0)
    with pytest.raises(ValidationError):
        cf.TwoNodeCycleParams(0.5, 0.5, sigma1=0)
    with pytest.raises(DegenerateParameterError):
        cf.twonode_covariance("I", cf.TwoNodeCycleParams(0.0, 0.5))
    with pytest.raises(ValueError):
        cf.twonode_covariance("V", cf.TwoNodeCycleParams(0.5, 0.5))


def branch_draw(rng, n):
    g = rng.uniform(0.1, 5, n - 1) * rng.choice([-1, 1], n - 1)
    return cf.BranchParams(*g, *(() if n == 4 else (None,)),
                           sigma2=tuple(rng.uniform(0.1, 5, 4)),
                           lam=tuple(rng.uniform(0.1, 5, 4)))


def branch_model_config(p):
    n = p.n
    gains = (p.a21, p.a32) if n == 3 else (p.a21, p.a32, p.a43)
    cfg = SignalConfig({k: p.s(k) for k in range(1, n + 1)}, {k: p.l(k) for k in range(1, n + 1)})
    return build_branch(n, gains), cfg


@pytest.mark.parametrize("label", ["I", "II"])
def test_threenode_branch_matches_engine(rng, label):
    emps = enumerate_branch_emps(3)
    for _ in range(100):
        p = branch_draw(rng, 3)
        model, cfg = branch_model_config(p)
        np.testing.assert_allclose(cf.threenode_branch_variances(label, p),
                                   engine_variances(model, label, emps, cfg), rtol=1e-9)


@pytest.mark.parametrize("label", ["I", "II", "III", "IV"])
def test_fournode_branch_matches_engine(rng, label):
    emps = enumerate_branch_emps(4)
    for _ in range(100):
        p = branch_draw(rng, 4)
        model, cfg = branch_model_config(p)
        np.testing.assert_allclose(cf.fournode_branch_variances(label, p),
                                   engine_variances(model, label, emps, cfg), rtol=1e-9)


def test_sigma2_crossover(rng):
    for _ in range(50):
        p = branch_draw(rng, 3)
        try:
            s = cf.sigma2_crossover(p)
        except DegenerateParameterError:
            continue
        if s <= 0:
            continue
        sig = list(p.sigma2)
        sig[1] = s
        q = cf.BranchParams(p.a21, p.a32, sigma2=tuple(sig), lam=p.lam)
        tI = cf.trace(cf.threenode_branch_variances("I", q))
        tII = cf.trace(cf.threenode_branch_variances("II", q))
        assert tI == pytest.approx(tII, rel=1e-9)
        # larger input at node 2 favours exciting it
        sig[1] = 2 * s
        q = cf.BranchParams(p.a21, p.a32, sigma2=tuple(sig), lam=p.lam)
        assert (cf.trace(cf.threenode_branch_variances("I", q))
                < cf.trace(cf.threenode_branch_variances("II", q)))


def test_fournode_requires_a43():
    with pytest.raises(ValidationError):
        cf.fournode_branch_variances("I", cf.BranchParams(1.0, 1.0))


def test_fournode_table_row():
    p = cf.BranchParams(20.0, 1.0, 1.0, lam=(0.01,) * 4)
    traces = {k: cf.trace(cf.fournode_branch_variances(k, p)) for k in ("I", "II", "III", "IV")}
    assert min(traces, key=traces.get) == "IV"
    assert max(traces, key=traces.get) == "III"
    assert traces["III"] == pytest.approx(4.04, abs=1e-3)


def test_printed_crossover_only_for_equal_gains():
    equal = cf.BranchParams(0.7, -0.7, sigma2=(2.0, 1.0, 1.0, 1.0), lam=(1.0, 0.3, 0.6, 1.0))
    assert cf.sigma2_crossover(equal) == pytest.approx(0.6 / 0.3 * 2.0)
    assert cf.sigma2_crossover(equal, "published") == pytest.approx(cf.sigma2_crossover(equal))
    unequal = cf.BranchParams(0.5, 2.0)
    assert cf.sigma2_crossover(unequal, "published") != pytest.approx(cf.sigma2_crossover(unequal))
