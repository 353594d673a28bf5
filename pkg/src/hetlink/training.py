"""Link losses, exact gradients, optimizers, corruption negatives and the
full-batch training loop."""
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InputError, NumericError, ResourceError
from .model import (check_pairs, decode_backward, decode_forward, encode_forward,
                    encode_backward)


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "logistic"
    epochs: int = 200
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    k_neg: int = 1
    l2_weight: float = 0.0
    seed: int = 0
    eval_every: int = 10
    val_n_neg: int = 100
    max_loss: float = 1e6

    def __post_init__(self):
        if self.epochs < 1:
            raise InputError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise InputError("learning_rate must be >= 0")
        if self.k_neg < 1:
            raise InputError("k_neg must be >= 1")
        if self.loss not in ("hinge", "logistic"):
            raise InputError(f"unknown loss {self.loss!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass
class TrainTrace:
    loss: list = field(default_factory=list)
    val_epochs: list = field(default_factory=list)
    val_mrr: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    best_epoch: int | None = None
    best_val_mrr: float | None = None
    params_checksum: str | None = None

    def to_dict(self, with_time=True):
        out = asdict(self)
        if not with_time:
            out.pop("wall_time")
        return out


# ---------------------------------------------------------------- losses

def hinge_loss(score, y):
    """y * relu(-s) + (1 - y) * relu(s); the subgradient at s = 0 is 0."""
    s = np.asarray(score, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    loss = y * np.maximum(-s, 0.0) + (1 - y) * np.maximum(s, 0.0)
    grad = np.where(y == 1, -(s < 0).astype(float), (s > 0).astype(float))
    return loss, grad


def logistic_loss(score, y):
    s = np.asarray(score, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    loss = np.logaddexp(0.0, s) - y * s
    sig = np.where(s >= 0, 1.0 / (1.0 + np.exp(-np.abs(s))),
                   np.exp(-np.abs(s)) / (1.0 + np.exp(-np.abs(s))))
    return loss, sig - y


LOSSES = {"hinge": hinge_loss, "logistic": logistic_loss}


def batch_loss(spec, params, g, X, pairs, labels, loss_kind, l2_weight=0.0):
    Z, _ = encode_forward(spec, params, g, X)
    s, _ = decode_forward(spec, params, Z, pairs[:, 0], pairs[:, 1])
    loss, _ = LOSSES[loss_kind](s, labels)
    return float(loss.mean() + l2_weight * np.dot(params.data, params.data))


def backward(spec, params, g, X, pairs, labels, loss_kind, l2_weight=0.0,
             accumulate=False, context=None):
    """Mean batch loss plus l2_weight * ||theta||^2; writes its gradient into params.grad."""
    pairs = check_pairs(pairs, g.n_nodes)
    labels = np.asarray(labels, dtype=np.float64)
    if len(labels) != len(pairs) or len(pairs) == 0:
        raise InputError("pairs and labels must be non-empty and of equal length")
    if not accumulate:
        params.zero_grad()
    Z, enc_cache = encode_forward(spec, params, g, X)
    i, j = pairs[:, 0], pairs[:, 1]
    s, dec_cache = decode_forward(spec, params, Z, i, j)
    loss, dloss = LOSSES[loss_kind](s, labels)
    value = float(loss.mean() + l2_weight * np.dot(params.data, params.data))
    if not np.isfinite(value):
        raise NumericError("non-finite loss", **(context or {}))
    gs = dloss / len(pairs)
    dZ = decode_backward(spec, params, Z, i, j, dec_cache, gs)
    encode_backward(spec, params, g, enc_cache, dZ)
    if l2_weight:
        params.grad += 2.0 * l2_weight * params.data
    return value


# ---------------------------------------------------------------- optimizers

class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params):
        params.data -= self.lr * params.grad


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params):
        if self.m is None:
            self.m = np.zeros_like(params.data)
            self.v = np.zeros_like(params.data)
        self.t += 1
        g = params.grad
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g * g
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        params.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg):
    if cfg.optimizer == "sgd":
        return SGD(cfg.learning_rate)
    return Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)


# ---------------------------------------------------------------- negatives

def corrupt_second(g_known, heads, n_per_head, rng, max_rounds=100):
    """For each head u, `n_per_head` tails v' uniform over nodes with v' != u
    and (u, v') not an edge of g_known. Returns an (len(heads), n_per_head) array."""
    n = g_known.n_nodes
    heads = np.asarray(heads, dtype=np.int64)
    out = rng.integers(0, n, (len(heads), n_per_head))
    uu = np.broadcast_to(heads[:, None], out.shape)
    bad = (out == uu) | g_known.has_edges(uu, out)
    for _ in range(max_rounds):
        if not bad.any():
            return out
        out[bad] = rng.integers(0, n, int(bad.sum()))
        bad = (out == uu) | g_known.has_edges(uu, out)
    raise ResourceError("negative sampling exceeded its retry cap; graph too dense")


def sample_negatives(g, positives, k_neg, seed):
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    tails = corrupt_second(g, positives[:, 0], k_neg, rng)
    heads = np.repeat(positives[:, 0], k_neg)
    return np.column_stack([heads, tails.ravel()])


# ---------------------------------------------------------------- loop

def train(spec, params, g_train, X, split, cfg, eval_fn=None, known=None):
    """Full-batch training; leaves the best-validation parameters in `params`.

    eval_fn(params) -> validation MRR. When it is None and split has
    validation edges, MRR against `cfg.val_n_neg` corruption negatives is used.
    """
    from .evaluation import RankingTask, model_scorer

    train_pos = np.asarray(split.train, dtype=np.int64)
    if eval_fn is None and len(split.valid):
        task = RankingTask(known if known is not None else g_train, split.valid,
                           cfg.val_n_neg, cfg.seed)

        def eval_fn(p):
            return task.mrr(model_scorer(spec, p, g_train, X))

    opt = make_optimizer(cfg)
    trace = TrainTrace()
    best = None
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        neg = sample_negatives(g_train, train_pos, cfg.k_neg, [cfg.seed, epoch])
        pairs = np.concatenate([train_pos, neg])
        labels = np.concatenate([np.ones(len(train_pos)), np.zeros(len(neg))])
        value = backward(spec, params, g_train, X, pairs, labels, cfg.loss, cfg.l2_weight,
                         context={"epoch": epoch})
        if value > cfg.max_loss:
            raise NumericError(f"training diverged: loss {value:.3g} > {cfg.max_loss:g}",
                               epoch=epoch)
        trace.loss.append(value)
        trace.wall_time.append(time.perf_counter() - t0)
        opt.step(params)
        last = epoch == cfg.epochs - 1
        if eval_fn is not None and ((epoch + 1) % cfg.eval_every == 0 or last):
            score = float(eval_fn(params))
            trace.val_epochs.append(epoch + 1)
            trace.val_mrr.append(score)
            if best is None or score > trace.best_val_mrr:
                best = params.data.copy()
                trace.best_epoch = epoch + 1
                trace.best_val_mrr = score
    if best is not None:
        params.data[:] = best
    trace.params_checksum = params.checksum()
    return trace


def train_on_pairs(spec, params, g, X, pairs, labels, cfg):
    """Fixed-batch training (no resampling, no validation); used by theory checks."""
    opt = make_optimizer(cfg)
    losses = []
    for epoch in range(cfg.epochs):
        value = backward(spec, params, g, X, pairs, labels, cfg.loss, cfg.l2_weight,
                         context={"epoch": epoch})
        losses.append(value)
        if value == 0.0:
            break
        opt.step(params)
    final = batch_loss(spec, params, g, X, pairs, labels, cfg.loss, cfg.l2_weight)
    losses.append(final)
    return losses


def gradient_check(spec, params, g, X, pairs, labels, loss_kind, step=1e-5,
                   l2_weight=0.0, floor=1e-10):
    """Max relative error between backward() and central differences.

    Per coordinate |a - n| / max(|a|, |n|); coordinates where both are
    below `floor` contribute their absolute difference instead.
    """
    backward(spec, params, g, X, pairs, labels, loss_kind, l2_weight)
    analytic = params.grad.copy()
    numeric = np.empty_like(analytic)
    for p in range(len(params.data)):
        keep = params.data[p]
        params.data[p] = keep + step
        up = batch_loss(spec, params, g, X, pairs, labels, loss_kind, l2_weight)
        params.data[p] = keep - step
        down = batch_loss(spec, params, g, X, pairs, labels, loss_kind, l2_weight)
        params.data[p] = keep
        numeric[p] = (up - down) / (2 * step)
    if len(analytic) == 0:
        return 0.0
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    diff = np.abs(analytic - numeric)
    err = np.where(scale < floor, diff, diff / np.where(scale < floor, 1.0, scale))
    return float(err.max())
