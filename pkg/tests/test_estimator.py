import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from zfid import NotCombinatoriallySymmetricError, path_graph, penta_sun, power_moments, random_chain_with_graph
from zfid.estimator import ObservedMoments, ZeroForcingIdentifier


def test_get_params_and_clone(path3):
    est = ZeroForcingIdentifier(pattern=path3, observed=[1], kind="dtmc")
    params = est.get_params()
    assert params["observed"] == [1] and params["kind"] == "dtmc"
    assert clone(est).get_params()["pattern"] == path3


def test_fit_exact(p3, path3):
    est = ZeroForcingIdentifier(path3, [1]).fit(power_moments(p3, [1], 4))
    np.testing.assert_allclose(est.transition_matrix_, p3, atol=1e-10)
    assert est.uncertainty_ is None
    assert est.score(power_moments(p3, [1], 4)) > -1e-9
    np.testing.assert_allclose(est.predict(max_power=2).values[1], p3 @ p3, atol=1e-10)


def test_pattern_from_matrix(p3):
    est = ZeroForcingIdentifier(p3, [1]).fit(power_moments(p3, [1], 4))
    assert est.pattern_ == path_graph(3)


def test_asymmetric_pattern_refused():
    cyc = np.roll(np.eye(4), 1, axis=1)
    with pytest.raises(NotCombinatoriallySymmetricError):
        ZeroForcingIdentifier(cyc, [1]).fit(power_moments(cyc, [1], 4))


def test_not_fitted(path3):
    with pytest.raises(NotFittedError):
        ZeroForcingIdentifier(path3, [1]).predict()


def test_fit_requires_table(path3, p3):
    with pytest.raises(TypeError):
        ZeroForcingIdentifier(path3, [1]).fit(p3)


def test_pipeline_exact_and_sampled(p3, path3):
    pipe = make_pipeline(ObservedMoments([1]), ZeroForcingIdentifier(path3, [1]))
    pipe.fit(p3)
    np.testing.assert_allclose(pipe[-1].transition_matrix_, p3, atol=1e-10)

    pipe = make_pipeline(ObservedMoments([1], windows=50_000, random_state=0),
                         ZeroForcingIdentifier(path3, [1]))
    pipe.fit(p3)
    est = pipe[-1]
    assert est.uncertainty_.shape == (3, 3)
    assert np.all(np.abs(est.transition_matrix_ - p3) <= 5 * est.uncertainty_ + 1e-12)


def test_pipeline_ctmc():
    H = penta_sun()
    Q = random_chain_with_graph(H, "ctmc", seed=5).entries
    Z = [9, 10, 1]
    pipe = make_pipeline(ObservedMoments(Z, kind="ctmc"), ZeroForcingIdentifier(H, Z, kind="ctmc"))
    pipe.fit(Q)
    np.testing.assert_allclose(pipe[-1].transition_matrix_, Q, atol=1e-8)


def test_sampled_ctmc_refused():
    Q = random_chain_with_graph(path_graph(3), "ctmc", seed=0).entries
    with pytest.raises(ValueError):
        ObservedMoments([1], kind="ctmc", windows=10).fit_transform(Q)
