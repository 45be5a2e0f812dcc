import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gridintent import IntentionRecognizer
from gridintent.gridworld import Pose, parse_map

MAP_TEXT = "....\n.1.2\n....\n"


@pytest.fixture(scope="module")
def fitted():
    return IntentionRecognizer().fit(MAP_TEXT)


def test_get_set_params_round_trip():
    est = IntentionRecognizer(gamma=0.9, window=5)
    params = est.get_params()
    assert params["gamma"] == 0.9
    assert params["window"] == 5
    est.set_params(gamma=0.8)
    assert est.gamma == 0.8
    # unknown names are rejected by the sklearn machinery
    with pytest.raises(ValueError):
        est.set_params(not_a_param=1)


def test_clone_preserves_configuration():
    est = IntentionRecognizer(filter_kind="forward", alpha=0.3)
    dup = clone(est)
    assert dup.get_params() == est.get_params()
    assert dup is not est


def test_unfitted_predict_raises():
    est = IntentionRecognizer()
    with pytest.raises(NotFittedError):
        est.predict_proba(["Up"], Pose(0, 0, 0))
    with pytest.raises(NotFittedError):
        est.predict(["Up"], Pose(0, 0, 0))


def test_fit_validates_parameters_lazily():
    est = IntentionRecognizer(gamma=1.5)  # construction never validates
    with pytest.raises(ValueError):
        est.fit(MAP_TEXT)


def test_fit_accepts_text_or_grid():
    grid = parse_map(MAP_TEXT)
    a = IntentionRecognizer().fit(MAP_TEXT)
    b = IntentionRecognizer().fit(grid)
    assert a.grid_.content_hash() == b.grid_.content_hash()
    assert a.n_goals_ == 2
    assert a.state_names_ == ("G1", "G2", "G?", "Gx")


def test_predict_proba_shape_and_normalization(fitted):
    actions = ["Right", "Right", "Down", "Stay"]
    probs = fitted.predict_proba(actions, Pose(0, 0, 0))
    assert probs.shape == (len(actions) + 1, 4)
    assert np.array_equal(probs[0], [0, 0, 1, 0])  # prior: unknown goal
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_predict_returns_state_names(fitted):
    actions = ["Right", "Down", "Left", "Left"]
    labels = fitted.predict(actions, (0, 0, 0))
    assert labels.shape == (len(actions),)
    assert set(labels) <= set(fitted.state_names_)


def test_start_pose_accepts_dicts_and_tuples(fitted):
    by_pose = fitted.predict_proba(["Down"], Pose(0, 0, 0))
    by_dict = fitted.predict_proba(["Down"], {"x": 0, "y": 0, "heading": 0})
    by_tuple = fitted.predict_proba(["Down"], (0, 0, 0))
    assert np.array_equal(by_pose, by_dict)
    assert np.array_equal(by_pose, by_tuple)
    with pytest.raises(ValueError):
        fitted.predict_proba(["Down"], (9, 9, 0))


def test_repeated_predictions_are_independent(fitted):
    actions = ["Right"] * 5
    first = fitted.predict_proba(actions, Pose(0, 1, 0))
    second = fitted.predict_proba(actions, Pose(0, 1, 0))
    assert np.array_equal(first, second)


def test_walking_to_a_goal_raises_its_probability(fitted):
    # start west of goal 1 facing it, then walk straight onto it
    probs = fitted.predict_proba(["Right"] * 1, Pose(0, 1, 0))
    g1 = fitted.state_names_.index("G1")
    assert probs[-1][g1] > probs[0][g1]
    assert int(np.argmax(probs[-1][: fitted.n_goals_])) == g1
