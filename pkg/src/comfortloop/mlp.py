"""Dense 2 -> 4 hidden (ReLU) -> 1 (sigmoid) regressor for PMV.

Everything is plain numpy so the weight file is the only thing a
microcontroller port needs: see ``save_model`` for the layout.
"""
from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import DataSplit, NormalizationStats, TEMP_RANGE_C, RH_RANGE_PCT
from .errors import DivergedTraining, ParseError, UndefinedR2

log = logging.getLogger(__name__)

N_HIDDEN = 4
DEFAULT_WIDTHS = (16, 16, 16, 16)
WEIGHT_FORMAT = "comfortloop-mlp"
WEIGHT_VERSION = 1
HIDDEN_ACTIVATION = "relu"
OUTPUT_ACTIVATION = "sigmoid"
# Adam never moves a weight more than ~lr per step; anything this large has blown up.
PARAM_LIMIT = 1e6


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class MlpModel:
    layer_dims: list[int]
    weights: list[np.ndarray]  # (out, in) per layer
    biases: list[np.ndarray]
    norm_stats: NormalizationStats | None = None

    def __post_init__(self):
        dims = list(self.layer_dims)
        if len(dims) != N_HIDDEN + 2 or dims[0] != 2 or dims[-1] != 1:
            raise ValueError(f"layer_dims must be [2, h1..h4, 1], got {dims}")
        if any(d < 1 for d in dims):
            raise ValueError(f"layer widths must be positive, got {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("need one weight matrix and bias vector per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(
                    f"layer {i + 1}: expected {dims[i + 1]}x{dims[i]} weights, got {w.shape}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i + 1}: non-finite parameters")
        self.layer_dims = dims

    @property
    def activations(self) -> list[str]:
        return [HIDDEN_ACTIVATION] * N_HIDDEN + [OUTPUT_ACTIVATION]

    @property
    def parameters(self) -> list[np.ndarray]:
        """Weights and biases interleaved: w1, b1, w2, b2, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters)


def init_model(
    hidden_widths: Sequence[int] = DEFAULT_WIDTHS,
    seed: int = 0,
    norm_stats: NormalizationStats | None = None,
) -> MlpModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    widths = list(hidden_widths)
    if len(widths) != N_HIDDEN or any(int(w) != w or w < 1 for w in widths):
        raise ValueError(f"need {N_HIDDEN} positive hidden widths, got {widths}")
    dims = [2, *map(int, widths), 1]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(dims, weights, biases, norm_stats)


def _forward_cache(model: MlpModel, x: np.ndarray):
    pre, post = [], [x]
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        a = sigmoid(z) if i == last else relu(z)
        pre.append(z)
        post.append(a)
    return pre, post


def forward(model: MlpModel, x):
    """Normalized inputs -> normalized output in (0, 1).

    ``x`` is a pair (returns a float) or an (n, 2) array (returns shape (n,)).
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    _, post = _forward_cache(model, np.atleast_2d(arr))
    out = post[-1][:, 0]
    return float(out[0]) if single else out


def loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient, in ``model.parameters`` order."""
    pre, post = _forward_cache(model, x)
    yhat = post[-1][:, 0]
    resid = yhat - y
    loss = float(np.mean(resid**2))

    n = x.shape[0]
    delta = (2.0 / n) * resid[:, None] * yhat[:, None] * (1.0 - yhat[:, None])
    grads = [None] * (2 * len(model.weights))
    for i in range(len(model.weights) - 1, -1, -1):
        grads[2 * i] = delta.T @ post[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i]) * (pre[i - 1] > 0)
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.adam_epsilon > 0:
            raise ValueError("adam_epsilon must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainHistory:
    epoch_loss: list[float] = field(default_factory=list)

    @property
    def diverged(self) -> bool:
        """Final epoch no better than the first: the run made no progress,
        typically a saturated sigmoid after an oversized step."""
        return len(self.epoch_loss) > 1 and self.epoch_loss[-1] >= self.epoch_loss[0]


def train(model: MlpModel, data: DataSplit, config: TrainConfig = TrainConfig()):
    """Mini-batch Adam on MSE. Returns ``(trained_copy, history)``.

    The input model is left untouched. Raises DivergedTraining when the loss
    or any parameter stops being finite or parameters pass ``PARAM_LIMIT``.
    """
    if len(data) == 0:
        raise ValueError("training split is empty")
    model = copy.deepcopy(model)
    params = model.parameters
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_epsilon, config.learning_rate
    rng = np.random.default_rng(config.seed)
    x, y = data.x, data.y
    n = len(y)
    history = TrainHistory()
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_grads(model, x[idx], y[idx])
            if not math.isfinite(loss):
                raise DivergedTraining(f"loss became {loss} in epoch {epoch}", epoch)
            total += loss * len(idx)
            step += 1
            c1 = 1.0 - b1**step
            c2 = 1.0 - b2**step
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= b1
                mi += (1.0 - b1) * g
                vi *= b2
                vi += (1.0 - b2) * g * g
                p -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
        worst = max(float(np.max(np.abs(p))) for p in params)
        if not math.isfinite(worst) or worst > PARAM_LIMIT:
            raise DivergedTraining(f"parameters blew up (max |p| = {worst:.3g}) in epoch {epoch}", epoch)
        history.epoch_loss.append(total / n)
        log.debug("epoch %d loss %.6g", epoch, total / n)
    return model, history


@dataclass(frozen=True)
class Metrics:
    mse: float
    mae: float
    r_squared: float

    def __str__(self) -> str:
        return f"mse={self.mse:.6f} mae={self.mae:.6f} r2={self.r_squared:.6f}"


def regression_metrics(predictions, targets) -> Metrics:
    pred = np.asarray(predictions, dtype=float)
    true = np.asarray(targets, dtype=float)
    if pred.shape != true.shape or true.size == 0:
        raise ValueError("predictions and targets must be non-empty and the same shape")
    resid = pred - true
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((true - true.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedR2("targets are constant; R^2 is undefined")
    return Metrics(float(np.mean(resid**2)), float(np.mean(np.abs(resid))), 1.0 - ss_res / ss_tot)


def evaluate(model: MlpModel, data: DataSplit) -> Metrics:
    """MSE, MAE and R^2 in normalized target space."""
    if len(data) == 0:
        raise ValueError("evaluation split is empty")
    return regression_metrics(forward(model, data.x), data.y)


@dataclass(frozen=True)
class PmvPrediction:
    pmv: float
    normalized: float
    out_of_domain: bool


def in_training_box(temp_c: float, rh_pct: float) -> bool:
    return (
        TEMP_RANGE_C[0] <= temp_c <= TEMP_RANGE_C[1]
        and RH_RANGE_PCT[0] <= rh_pct <= RH_RANGE_PCT[1]
    )


def predict_pmv(model: MlpModel, temp_c: float, rh_pct: float) -> PmvPrediction:
    if model.norm_stats is None:
        raise ValueError("model has no normalization constants attached")
    stats = model.norm_stats
    z = forward(model, stats.normalize_inputs([temp_c, rh_pct]))
    pmv = float(stats.denormalize_target(z))
    return PmvPrediction(pmv, z, not in_training_box(temp_c, rh_pct))


def predict_pmv_grid(model: MlpModel, temps, rhs) -> np.ndarray:
    """Vectorized predictions; ``temps`` and ``rhs`` broadcast together."""
    stats = model.norm_stats
    t, h = np.broadcast_arrays(np.asarray(temps, float), np.asarray(rhs, float))
    x = np.stack([t.ravel(), h.ravel()], axis=1)
    return stats.denormalize_target(forward(model, stats.normalize_inputs(x))).reshape(t.shape)


# -- weight file ------------------------------------------------------------


def _fmt(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in np.ravel(values))


def save_model(model: MlpModel, path: str | Path) -> None:
    """Write the portable text weight file.

    Layout (one record per line, whitespace separated)::

        format comfortloop-mlp
        version 1
        layer_dims 2 16 16 16 16 1
        activations relu relu relu relu sigmoid
        input_min <temp_c> <rh_pct>
        input_max <temp_c> <rh_pct>
        target_min <pmv>
        target_max <pmv>
        layer <k> <out> <in>        # k = 1..5
        w <in values>               # repeated <out> times, row-major
        b <out values>
        ...
        end
    """
    stats = model.norm_stats
    if stats is None:
        raise ValueError("cannot save a model without normalization constants")
    lines = [
        f"format {WEIGHT_FORMAT}",
        f"version {WEIGHT_VERSION}",
        "layer_dims " + " ".join(map(str, model.layer_dims)),
        "activations " + " ".join(model.activations),
        "input_min " + _fmt(stats.input_min),
        "input_max " + _fmt(stats.input_max),
        "target_min " + _fmt([stats.target_min]),
        "target_max " + _fmt([stats.target_max]),
    ]
    for k, (w, b) in enumerate(zip(model.weights, model.biases), start=1):
        lines.append(f"layer {k} {w.shape[0]} {w.shape[1]}")
        lines += ["w " + _fmt(row) for row in w]
        lines.append("b " + _fmt(b))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


class _Lines:
    def __init__(self, text: str):
        self.rows = [
            (i, raw.split("#", 1)[0].split())
            for i, raw in enumerate(text.splitlines(), start=1)
        ]
        self.rows = [(i, toks) for i, toks in self.rows if toks]
        self.pos = 0

    def next(self, key: str):
        if self.pos >= len(self.rows):
            raise ParseError(f"file truncated: expected {key!r}", field=key)
        lineno, toks = self.rows[self.pos]
        self.pos += 1
        if toks[0] != key:
            raise ParseError(f"expected {key!r}, found {toks[0]!r}", line=lineno, field=key)
        return lineno, toks[1:]


def _numbers(lineno, tokens, key, cast=float):
    try:
        return [cast(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-numeric value in {key!r}", line=lineno, field=key) from None


def load_model(path: str | Path) -> MlpModel:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        raise ParseError("weight file is not text") from None
    src = _Lines(text)
    lineno, fmt = src.next("format")
    if fmt != [WEIGHT_FORMAT]:
        raise ParseError(f"unknown format {' '.join(fmt)!r}", line=lineno, field="format")
    lineno, ver = src.next("version")
    if ver != [str(WEIGHT_VERSION)]:
        raise ParseError(f"unsupported version {' '.join(ver)!r}", line=lineno, field="version")
    lineno, dims = src.next("layer_dims")
    dims = _numbers(lineno, dims, "layer_dims", int)
    if len(dims) != N_HIDDEN + 2 or dims[0] != 2 or dims[-1] != 1 or min(dims) < 1:
        raise ParseError(f"invalid layer_dims {dims}", line=lineno, field="layer_dims")
    lineno, acts = src.next("activations")
    expected = [HIDDEN_ACTIVATION] * N_HIDDEN + [OUTPUT_ACTIVATION]
    if acts != expected:
        raise ParseError(f"unsupported activations {acts}", line=lineno, field="activations")

    consts = {}
    for key, count in (("input_min", 2), ("input_max", 2), ("target_min", 1), ("target_max", 1)):
        lineno, toks = src.next(key)
        vals = _numbers(lineno, toks, key)
        if len(vals) != count:
            raise ParseError(f"expected {count} values, got {len(vals)}", line=lineno, field=key)
        consts[key] = vals
    try:
        stats = NormalizationStats(
            consts["input_min"][0], consts["input_max"][0],
            consts["input_min"][1], consts["input_max"][1],
            consts["target_min"][0], consts["target_max"][0],
        )
    except ValueError as exc:
        raise ParseError(str(exc), field="input_min") from None

    weights, biases = [], []
    for k in range(1, len(dims)):
        lineno, head = src.next("layer")
        head = _numbers(lineno, head, "layer", int)
        want = [k, dims[k], dims[k - 1]]
        if head != want:
            raise ParseError(
                f"layer {k}: header {head} does not match layer_dims (expected {want})",
                line=lineno, field=f"layer {k}",
            )
        rows = []
        for r in range(dims[k]):
            lineno, toks = src.next("w")
            row = _numbers(lineno, toks, f"layer {k}")
            if len(row) != dims[k - 1]:
                raise ParseError(
                    f"layer {k}: weight row {r + 1} has {len(row)} values, declared {dims[k - 1]}",
                    line=lineno, field=f"layer {k}",
                )
            rows.append(row)
        lineno, toks = src.next("b")
        bias = _numbers(lineno, toks, f"layer {k}")
        if len(bias) != dims[k]:
            raise ParseError(
                f"layer {k}: bias has {len(bias)} values, declared {dims[k]}",
                line=lineno, field=f"layer {k}",
            )
        w = np.array(rows, dtype=float)
        b = np.array(bias, dtype=float)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ParseError(f"layer {k}: non-finite parameter", line=lineno, field=f"layer {k}")
        weights.append(w)
        biases.append(b)
    src.next("end")
    if src.pos != len(src.rows):
        raise ParseError("trailing content after 'end'", line=src.rows[src.pos][0])
    return MlpModel(dims, weights, biases, stats)
