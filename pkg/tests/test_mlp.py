import math

import numpy as np
import pytest

from comfortloop.dataset import (
    DataSplit,
    NormalizationStats,
    generate_dataset,
    split_and_normalize,
)
from comfortloop.errors import DivergedTraining, ParseError, UndefinedR2
from comfortloop.mlp import (
    MlpModel,
    TrainConfig,
    evaluate,
    forward,
    init_model,
    load_model,
    loss_and_grads,
    predict_pmv,
    regression_metrics,
    save_model,
    train,
)

from oracles import finite_difference_grad, relative_error

STATS = NormalizationStats(0.0, 50.0, 0.0, 100.0)


@pytest.fixture(scope="module")
def toy():
    recs = generate_dataset(250, 11).records
    return split_and_normalize(recs, 0.8, 1)


def zero_model(widths=(3, 3, 3, 3)):
    m = init_model(widths, seed=0)
    for p in m.parameters:
        p[...] = 0.0
    return m


def test_init_is_deterministic():
    a, b = init_model(seed=5), init_model(seed=5)
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters, b.parameters))
    c = init_model(seed=6)
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_default_dims_and_parameter_count():
    m = init_model((16, 16, 16, 16), seed=0)
    assert m.layer_dims == [2, 16, 16, 16, 16, 1]
    # 2*16+16 + 3*(16*16+16) + 16+1, counted by hand
    assert m.n_parameters == 881
    assert m.activations == ["relu"] * 4 + ["sigmoid"]


def test_init_scale_is_bounded_by_fan_in():
    m = init_model((16, 16, 16, 16), seed=3)
    for w, b in zip(m.weights, m.biases):
        bound = 1 / math.sqrt(w.shape[1])
        assert np.abs(w).max() <= bound and np.abs(b).max() <= bound


@pytest.mark.parametrize("widths", [(16, 0, 16, 16), (16, 16, 16), (4, 4, 4, 4, 4)])
def test_init_rejects_bad_widths(widths):
    with pytest.raises(ValueError):
        init_model(widths)


def test_zero_network_outputs_half():
    m = zero_model()
    assert forward(m, [0.3, 0.9]) == 0.5
    assert np.all(forward(m, np.random.default_rng(0).random((7, 2))) == 0.5)


def test_output_inside_unit_interval():
    rng = np.random.default_rng(1)
    for seed in range(20):
        out = forward(init_model(seed=seed), rng.uniform(-3, 3, size=(50, 2)))
        assert np.all((out > 0) & (out < 1))


def test_hand_built_network():
    # chain of single units: h1 = relu(0.7 x0 - 0.2 x1 + 0.1), identities, y = sigmoid(-1.5 h + 0.3)
    dims = [2, 1, 1, 1, 1, 1]
    weights = [np.array([[0.7, -0.2]])] + [np.array([[1.0]])] * 3 + [np.array([[-1.5]])]
    biases = [np.array([0.1])] + [np.array([0.0])] * 3 + [np.array([0.3])]
    m = MlpModel(dims, weights, biases)
    x0, x1 = 0.8, 0.25
    h = max(0.0, 0.7 * x0 - 0.2 * x1 + 0.1)
    expected = 1.0 / (1.0 + math.exp(-(-1.5 * h + 0.3)))
    assert abs(forward(m, [x0, x1]) - expected) < 1e-12


def test_forward_is_pure():
    m = init_model(seed=2)
    before = [p.copy() for p in m.parameters]
    x = np.array([[0.1, 0.2], [0.5, 0.5]])
    assert np.array_equal(forward(m, x), forward(m, x))
    assert all(np.array_equal(p, q) for p, q in zip(before, m.parameters))


def test_backprop_matches_finite_differences():
    m = init_model((3, 3, 3, 3), seed=4)
    rng = np.random.default_rng(9)
    x, y = rng.random((5, 2)), rng.random(5)
    _, grads = loss_and_grads(m, x, y)
    fd = finite_difference_grad(lambda: loss_and_grads(m, x, y)[0], m.parameters, step=1e-5)
    worst = max(relative_error(g, f).max() for g, f in zip(grads, fd))
    assert worst < 1e-4


def test_training_reduces_loss(toy):
    train_split, _, stats = toy
    model = init_model(seed=1, norm_stats=stats)
    trained, hist = train(model, train_split, TrainConfig(epochs=50, batch_size=16, seed=2))
    assert len(hist.epoch_loss) == 50
    assert hist.epoch_loss[-1] < hist.epoch_loss[0]
    assert not hist.diverged
    # input model untouched
    assert np.array_equal(model.weights[0], init_model(seed=1).weights[0])


def test_training_is_deterministic(toy):
    train_split, _, stats = toy
    cfg = TrainConfig(epochs=5, batch_size=16, seed=3)
    a, ha = train(init_model(seed=1, norm_stats=stats), train_split, cfg)
    b, hb = train(init_model(seed=1, norm_stats=stats), train_split, cfg)
    assert ha.epoch_loss == hb.epoch_loss
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters, b.parameters))


def test_oversized_learning_rate_is_flagged(toy):
    train_split, _, stats = toy
    cfg = TrainConfig(learning_rate=1e3, epochs=50, batch_size=16, seed=2)
    try:
        _, hist = train(init_model(seed=1, norm_stats=stats), train_split, cfg)
    except DivergedTraining:
        return
    assert hist.diverged


def test_non_finite_loss_aborts():
    m = init_model(seed=0)
    data = DataSplit([None], np.array([[np.nan, 0.5]]), np.array([0.5]))
    with pytest.raises(DivergedTraining):
        train(m, data, TrainConfig(epochs=1))


@pytest.mark.parametrize(
    "kwargs",
    [dict(learning_rate=0), dict(adam_beta1=1.0), dict(adam_beta2=-0.1),
     dict(adam_epsilon=0), dict(batch_size=0), dict(epochs=0)],
)
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_metrics_perfect_and_mean_predictor():
    y = np.array([0.1, 0.4, 0.35, 0.9])
    perfect = regression_metrics(y, y)
    assert (perfect.mse, perfect.mae, perfect.r_squared) == (0.0, 0.0, 1.0)
    mean = regression_metrics(np.full_like(y, y.mean()), y)
    assert mean.r_squared == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(UndefinedR2):
        regression_metrics(np.zeros(3), np.ones(3))


def test_metrics_against_hand_values():
    pred = np.array([0.0, 1.0, 2.0])
    true = np.array([0.5, 1.0, 1.0])
    m = regression_metrics(pred, true)
    # residuals -0.5, 0, 1; mean(true) = 5/6; ss_tot = 1/9 + 1/36 + 1/36 = 1/6
    assert m.mse == pytest.approx(1.25 / 3)
    assert m.mae == pytest.approx(0.5)
    assert m.r_squared == pytest.approx(1 - 1.25 / (1 / 6))


def test_predict_flags_out_of_domain():
    m = init_model(seed=0, norm_stats=STATS)
    assert predict_pmv(m, 60.0, 50.0).out_of_domain
    assert predict_pmv(m, 20.0, -1.0).out_of_domain
    inside = predict_pmv(m, 23.45, 45.67)
    assert not inside.out_of_domain and -4.0 < inside.pmv < 4.0


def test_save_load_round_trip(tmp_path, toy):
    train_split, test_split, stats = toy
    model, _ = train(init_model((5, 4, 3, 2), seed=1, norm_stats=stats), train_split,
                     TrainConfig(epochs=3, batch_size=32))
    path = tmp_path / "model.txt"
    save_model(model, path)
    back = load_model(path)
    assert back.layer_dims == model.layer_dims
    assert back.norm_stats == model.norm_stats
    assert all(np.array_equal(p, q) for p, q in zip(back.parameters, model.parameters))
    assert evaluate(back, test_split) == evaluate(model, test_split)


def _saved(tmp_path):
    path = tmp_path / "model.txt"
    save_model(init_model((3, 3, 3, 3), seed=0, norm_stats=STATS), path)
    return path


def test_truncated_file_rejected(tmp_path):
    path = _saved(tmp_path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[: len(lines) // 2]) + "\n")
    with pytest.raises(ParseError, match="truncated"):
        load_model(path)


def test_row_length_mismatch_names_layer(tmp_path):
    path = _saved(tmp_path)
    lines = path.read_text().splitlines()
    i = lines.index("layer 2 3 3") + 1
    lines[i] = lines[i].rsplit(" ", 1)[0]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="layer 2") as info:
        load_model(path)
    assert info.value.line == i + 1


def test_header_mismatch_names_layer(tmp_path):
    path = _saved(tmp_path)
    path.write_text(path.read_text().replace("layer 3 3 3", "layer 3 4 3"))
    with pytest.raises(ParseError, match="layer 3"):
        load_model(path)


@pytest.mark.parametrize(
    "old,new",
    [("version 1", "version 2"), ("format comfortloop-mlp", "format other"),
     ("relu sigmoid", "relu tanh")],
)
def test_unknown_header_fields_rejected(tmp_path, old, new):
    path = _saved(tmp_path)
    path.write_text(path.read_text().replace(old, new))
    with pytest.raises(ParseError):
        load_model(path)


def test_non_numeric_weight_rejected(tmp_path):
    path = _saved(tmp_path)
    lines = path.read_text().splitlines()
    i = lines.index("layer 1 3 2") + 1
    lines[i] = "w 0.1 abc"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        load_model(path)
    assert info.value.line == i + 1 and info.value.field == "layer 1"


def test_weight_file_layout(tmp_path):
    path = _saved(tmp_path)
    lines = path.read_text().splitlines()
    assert lines[:4] == [
        "format comfortloop-mlp",
        "version 1",
        "layer_dims 2 3 3 3 3 1",
        "activations relu relu relu relu sigmoid",
    ]
    assert lines[-1] == "end"
    # one header + rows + bias per layer
    assert sum(l.startswith("w ") for l in lines) == 3 + 3 + 3 + 3 + 1
