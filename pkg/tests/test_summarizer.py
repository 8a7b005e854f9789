import json

import numpy as np
import pytest

from advprog import summarizer as sm
from advprog.oracles import fd_gradient

V, OUT = 12, ("<pad>", "get", "set", "sum")


@pytest.fixture
def model():
    m = sm.init_model(V, OUT, d=5, h=7, L=3, seed=4)
    rng = np.random.default_rng(0)
    for p in m.params().values():
        p[...] = rng.normal(0, 0.8, p.shape)
    m.E[0] = 0.0
    return m


def _rows(rng, n=6):
    R = rng.random((n, V))
    return R / R.sum(axis=1, keepdims=True)


def test_forward_shapes_and_checks(model, rng):
    assert sm.forward(model, _rows(rng)).shape == (3, len(OUT))
    with pytest.raises(sm.DimensionMismatch):
        sm.forward(model, np.ones((3, V + 1)) / (V + 1))
    with pytest.raises(sm.DimensionMismatch):
        sm.forward(model, np.zeros((0, V)))
    with pytest.raises(ValueError):
        sm.forward(model, np.ones((2, V)))


def test_ids_and_onehot_rows_agree(model):
    ids = np.array([3, 5, 5, 9])
    R = np.eye(V)[ids]
    np.testing.assert_allclose(sm.forward_ids(model, ids), sm.forward(model, R))


def test_nul_rows_are_invisible(model):
    ids = np.array([3, 5, 9])
    padded = np.array([3, 0, 5, 0, 9])
    np.testing.assert_allclose(sm.forward_ids(model, ids), sm.forward_ids(model, padded), atol=1e-12)


def test_input_gradient_matches_fd(model, rng):
    target = np.array([1, 3, 0])
    for _ in range(5):
        R = _rows(rng)
        g = sm.input_gradient(model, R, target)
        fd = fd_gradient(lambda x: sm.loss(sm.forward(model, x.reshape(R.shape), check=False), target),
                         R.ravel()).reshape(R.shape)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


def test_parameter_gradient_matches_fd(model, rng):
    programs = [rng.integers(0, V, size=rng.integers(3, 8)) for _ in range(4)]
    targets = np.array([[1, 2, 0], [3, 0, 0], [2, 2, 1], [1, 0, 0]])
    counts, n = sm.count_matrix(programs, V)
    _, grads = sm.batch_loss_and_grads(model, counts, n, targets)
    for name in ("E", "W1", "b1", "W2", "b2"):
        param = getattr(model, name)

        def f(x, name=name, param=param):
            saved = param.copy()
            param[...] = x.reshape(param.shape)
            try:
                return sm.batch_loss_and_grads(model, counts, n, targets)[0]
            finally:
                param[...] = saved

        fd = fd_gradient(f, param.ravel().copy()).reshape(param.shape)
        if name == "E":
            fd[0] = 0.0  # the NUL embedding is frozen
        np.testing.assert_allclose(grads[name], fd, rtol=1e-5, atol=1e-8)


def test_encode_target(model):
    assert list(model.encode_target(["get", "sum"])) == [1, 3, 0]
    with pytest.raises(ValueError):
        model.encode_target([])
    with pytest.raises(KeyError):
        model.encode_target(["nope"])


def test_training_learns_toy_task():
    rng = np.random.default_rng(0)
    programs, targets = [], []
    for _ in range(120):
        label = int(rng.integers(1, 4))
        ids = rng.integers(4, V, size=6)
        ids[0] = label  # token `label` determines the name
        programs.append(ids)
        targets.append([label, 0, 0])
    targets = np.array(targets)
    res = sm.train(programs, targets, V, OUT, sm.TrainConfig(epochs=60, d=8, h=16))
    assert res.loss_trace[-1] < res.loss_trace[0]
    assert sm.accuracy(res.model, programs, targets) >= 0.95
    again = sm.train(programs, targets, V, OUT, sm.TrainConfig(epochs=60, d=8, h=16))
    assert again.model == res.model


def test_train_init_mismatch(model):
    with pytest.raises(sm.DimensionMismatch):
        sm.train([np.array([1, 2])], np.array([[1, 0, 0]]), V + 1, OUT, init=model)


def test_checkpoint_roundtrip_and_tamper(model, tmp_path):
    path = tmp_path / "m.json"
    sm.save(model, path)
    assert sm.load(path) == model
    data = json.loads(path.read_text())
    data["params"]["b1"][0] += 1.0
    path.write_text(json.dumps(data))
    with pytest.raises(sm.ChecksumMismatch):
        sm.load(path)
    path.write_text("{not json")
    with pytest.raises(sm.ChecksumMismatch):
        sm.load(path)


def test_toy_pipeline_learns(small_pipeline):
    assert small_pipeline.train_accuracy >= 0.9
