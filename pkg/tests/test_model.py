import dataclasses

import numpy as np
import pytest

from oracles import central_difference, max_rel_error
from senn.dataio import SynthConfig, apply_standardizer, fit_standardizer, gen_synthetic
from senn.errors import ConfigError, ContractError, ShapeError
from senn.model import (
    AdamState,
    ModelSpec,
    Variant,
    adam_step,
    backward,
    build_model,
    cross_entropy,
    forward,
    grad_check,
    load_model,
    one_hot,
    save_model,
    train,
)
from senn.numkernel import SeededRng

DPNN = ModelSpec(variant=Variant.DPNN)
CONV = ModelSpec(variant=Variant.CONV1D)


def shapes(model):
    return [(l.weights.shape, l.bias.shape) for l in model.layers]


def random_batch(seed, b, width):
    rng = SeededRng(seed)
    x = rng.normal(b * width).reshape(b, width)
    y = (rng.uniform(b) < 0.5).astype(int)
    return x, one_hot(y)


# --- spec & construction -----------------------------------------------------

def test_spec_defaults():
    s = ModelSpec()
    assert (s.hidden_units, s.output_units, s.epochs, s.batch_size) == (16, 2, 20, 32)
    assert (s.learning_rate, s.adam_beta1, s.adam_beta2, s.adam_epsilon) == (0.001, 0.9, 0.999, 1e-7)


@pytest.mark.parametrize("field,value", [
    ("epochs", 0), ("hidden_units", -1), ("output_units", 3),
    ("adam_beta1", 1.0), ("learning_rate", 0.0), ("batch_size", 2.5),
])
def test_spec_rejects_bad_values(field, value):
    with pytest.raises(ConfigError):
        ModelSpec(**{field: value})


def test_dpnn_shapes():
    assert shapes(build_model(DPNN, 45, SeededRng(0))) == [((45, 16), (16,)), ((16, 2), (2,))]
    deep = build_model(dataclasses.replace(DPNN, hidden_layers=3), 10, SeededRng(0))
    assert shapes(deep) == [((10, 16), (16,)), ((16, 16), (16,)), ((16, 16), (16,)), ((16, 2), (2,))]


def test_conv_shapes():
    # 45 - 3 + 1 = 43 positions, times 16 filters = 688 flattened inputs
    assert shapes(build_model(CONV, 45, SeededRng(0))) == [((16, 3, 1), (16,)), ((688, 2), (2,))]


def test_conv_rejects_narrow_input():
    with pytest.raises(ConfigError):
        build_model(CONV, 2, SeededRng(0))


def test_build_is_deterministic_and_glorot_bounded():
    a = build_model(DPNN, 45, SeededRng(11))
    b = build_model(DPNN, 45, SeededRng(11))
    for p, q in zip(a.params, b.params):
        assert p.tobytes() == q.tobytes()
    w = a.layers[0].weights
    assert np.abs(w).max() <= np.sqrt(6.0 / (45 + 16))
    assert not a.layers[0].bias.any()


# --- forward & loss ----------------------------------------------------------

@pytest.mark.parametrize("spec", [DPNN, CONV])
def test_forward_rows_are_distributions(spec):
    model = build_model(spec, 12, SeededRng(1))
    x = 50.0 * SeededRng(2).normal(7 * 12).reshape(7, 12)
    p = forward(model, x)
    assert p.shape == (7, 2)
    assert ((p >= 0) & (p <= 1)).all()
    assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-12)
    assert forward(model, np.zeros((0, 12))).shape == (0, 2)


def test_forward_width_mismatch():
    with pytest.raises(ShapeError):
        forward(build_model(DPNN, 12, SeededRng(1)), np.zeros((3, 11)))


def test_zeroed_network_is_uniform():
    model = build_model(DPNN, 5, SeededRng(1))
    model = model.with_params([np.zeros_like(p) for p in model.params])
    assert np.array_equal(forward(model, np.ones((3, 5))), np.full((3, 2), 0.5))


def test_cross_entropy_values():
    assert cross_entropy([[0.0, 1.0], [1.0, 0.0]], [[0, 1], [1, 0]]) == 0.0
    assert cross_entropy([[0.5, 0.5]], [[1, 0]]) == pytest.approx(np.log(2), abs=1e-15)
    got = cross_entropy([[0.25, 0.75], [0.5, 0.5]], [[0, 1], [1, 0]])
    assert got == pytest.approx((-np.log(0.75) - np.log(0.5)) / 2, abs=1e-15)
    assert np.isfinite(cross_entropy([[1.0, 0.0]], [[0, 1]]))  # clamp keeps -ln 0 finite
    with pytest.raises(ContractError):
        cross_entropy(np.zeros((0, 2)), np.zeros((0, 2)))


# --- backward ----------------------------------------------------------------

def test_backward_stationary_point():
    model = build_model(DPNN, 6, SeededRng(3))
    x = SeededRng(4).normal(12).reshape(2, 6)
    for gw, gb in backward(model, x, forward(model, x)):
        assert not gw.any() and not gb.any()


def _fd_check(spec, width, batch, seed):
    model = build_model(spec, width, SeededRng(seed))
    x, t = random_batch(seed + 1000, batch, width)
    analytic = [g for pair in backward(model, x, t) for g in pair]
    params = [p.copy() for p in model.params]
    loss = lambda: cross_entropy(forward(model.with_params(params), x), t)
    numeric = central_difference(loss, params, eps=1e-5)
    return max(max_rel_error(a, n) for a, n in zip(analytic, numeric))


@pytest.mark.parametrize("seed", range(3))
def test_backward_dpnn_finite_differences(seed):
    assert _fd_check(DPNN, 10, 4, seed) < 1e-6


def test_backward_deep_dpnn_finite_differences():
    assert _fd_check(dataclasses.replace(DPNN, hidden_layers=2, hidden_units=5), 6, 4, 7) < 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_backward_conv_finite_differences(seed):
    assert _fd_check(CONV, 7, 2, seed) < 1e-6


# --- adam --------------------------------------------------------------------

def test_adam_zero_gradient_is_noop():
    params = [np.arange(3.0), np.ones((2, 2))]
    grads = [np.zeros(3), np.zeros((2, 2))]
    new, _ = adam_step(params, grads, AdamState.zeros_like(params), 1)
    for p, q in zip(params, new):
        assert np.array_equal(p, q)


def test_adam_first_step_is_lr_sized():
    g = np.array([1e-4, -3.0, 250.0, 1e6])
    params = [np.zeros(4)]
    new, state = adam_step(params, [g], AdamState.zeros_like(params), 1)
    step = new[0] - params[0]
    assert np.all(np.abs(step) <= 0.001 * (1 + 1e-9))
    np.testing.assert_allclose(step[1:], -0.001 * np.sign(g[1:]), rtol=1e-6)
    assert state.t == 1


def test_adam_is_pure():
    params = [np.ones(3)]
    grads = [np.array([0.1, -0.2, 0.3])]
    state = AdamState.zeros_like(params)
    a = adam_step(params, grads, state, 1)
    b = adam_step(params, grads, state, 1)
    assert a[0][0].tobytes() == b[0][0].tobytes()
    assert np.array_equal(params[0], np.ones(3))
    with pytest.raises(ContractError):
        adam_step(params, grads, state, 0)


# --- training ----------------------------------------------------------------

@pytest.fixture(scope="module")
def separable():
    ds = gen_synthetic(SynthConfig(n_per_class=200, separation=4.0, seed=3))
    return apply_standardizer(fit_standardizer(ds), ds.x), ds.y


@pytest.mark.parametrize("variant", list(Variant))
def test_train_learns_separable_data(separable, variant):
    x, y = separable
    spec = ModelSpec(variant=variant, seed=1)
    model, hist = train(spec, x, y)
    assert len(hist.per_epoch_loss) == len(hist.per_epoch_accuracy) == spec.epochs
    assert hist.per_epoch_accuracy[-1] >= 0.97
    assert np.mean(hist.per_epoch_loss[-3:]) < np.mean(hist.per_epoch_loss[:3])


def test_train_is_deterministic(separable):
    x, y = separable
    spec = ModelSpec(variant=Variant.CONV1D, epochs=2, seed=5)
    a, _ = train(spec, x, y)
    b, _ = train(spec, x, y)
    for p, q in zip(a.params, b.params):
        assert p.tobytes() == q.tobytes()
    assert not a.params[0].flags.writeable


def test_train_preconditions():
    with pytest.raises(ContractError):
        train(ModelSpec(), np.zeros((0, 4)), np.zeros(0, dtype=int))
    with pytest.raises(ContractError):
        train(ModelSpec(), np.zeros((2, 4)), np.array([0, 2]))


# --- grad_check --------------------------------------------------------------

def test_grad_check_defaults():
    x, t = random_batch(0, 4, 45)
    assert grad_check(DPNN, x, t, 1e-5) < 1e-6
    x, t = random_batch(1, 2, 9)
    assert grad_check(CONV, x, t, 1e-5) < 1e-6


def test_grad_check_stationary():
    x, _ = random_batch(2, 3, 8)
    model = build_model(DPNN, 8, SeededRng(0))
    assert grad_check(DPNN, x, forward(model, x), 1e-5, model=model) < 1e-9


def test_grad_check_catches_wrong_gradient():
    x, t = random_batch(3, 4, 10)

    def wrong(model, xb, tb):
        return [(2 * gw, gb) for gw, gb in backward(model, xb, tb)]

    assert grad_check(DPNN, x, t, 1e-5, backward_fn=wrong) > 1e-4


# --- persistence -------------------------------------------------------------

def test_save_load_round_trip(tmp_path, separable):
    x, y = separable
    model, _ = train(ModelSpec(variant=Variant.CONV1D, epochs=1), x, y)
    save_model(model, tmp_path / "m.json")
    loaded = load_model(tmp_path / "m.json")
    assert loaded.spec == model.spec and loaded.input_width == model.input_width
    for p, q in zip(model.params, loaded.params):
        assert p.tobytes() == q.tobytes()
