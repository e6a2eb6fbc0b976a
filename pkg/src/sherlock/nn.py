"""Multi-input feedforward classifier trained from scratch with numpy.

Three subnetworks (character distributions 960, word embeddings 200,
paragraph vectors 400) each compress their family through two ReLU hidden
layers into a linear 78-unit output. Those outputs are concatenated with the
27 global statistics (261 inputs) and fed to a primary network ending in a
78-way softmax. Training is joint, end to end: mini-batch cross-entropy plus
L2 weight decay, Adam step sizes, inverted dropout after every hidden layer,
early stopping on validation loss.

Isolated single-family training (softmax head directly on a subnetwork's
78-unit output, or a plain two-hidden-layer net for the stats family) is
provided for ablation runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .pipeline import (CHARS_SLICE, N_FEATURES, PARAGRAPH_SLICE, STATS_SLICE,
                       WORDS_FLAG_SLICE, WORDS_SLICE)
from .semtypes import N_TYPES

REJECTED = -1


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-4
    epochs: int = 100
    batch_size: int = 256
    dropout: float = 0.3
    weight_decay: float = 1e-4
    patience: int = 5
    seed: int = 0
    chars_hidden: int = 300
    words_hidden: int = 200
    paragraph_hidden: int = 400
    primary_hidden: tuple[int, int] = (500, 500)
    stats_hidden: tuple[int, int] = (100, 100)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError("dropout must be in [0, 1)")
        for name in ("learning_rate", "epochs", "batch_size", "patience"):
            if getattr(self, name) <= 0:
                raise ModelError(f"{name} must be positive")


def _init_dense(rng: np.random.Generator, n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    # fan-in scaled uniform init; small positive biases keep ReLU units off
    # the exact kink even when a whole previous layer is inactive
    limit = np.sqrt(1.0 / n_in)
    return rng.uniform(-limit, limit, size=(n_in, n_out)), np.full(n_out, 0.01)


class _MLP:
    """Dense stack: ReLU (+dropout) after every layer except the last, which
    stays linear."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            W, b = _init_dense(rng, n_in, n_out)
            self.weights.append(W)
            self.biases.append(b)

    def forward(self, X: np.ndarray, dropout: float = 0.0,
                rng: np.random.Generator | None = None):
        caches = []
        h = X
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            if i < len(self.weights) - 1:
                a = np.maximum(z, 0.0)
                mask = None
                if dropout > 0.0 and rng is not None:
                    mask = (rng.random(a.shape) >= dropout) / (1.0 - dropout)
                    a = a * mask
                caches.append((h, z, mask))
                h = a
            else:
                caches.append((h, z, None))
                h = z
        return h, caches

    def backward(self, caches, dout: np.ndarray,
                 grad_w: list[np.ndarray], grad_b: list[np.ndarray]) -> np.ndarray:
        """Accumulate gradients; dout is dL/d(final linear output). Returns
        dL/d(input)."""
        for i in reversed(range(len(self.weights))):
            h, _z, _mask = caches[i]
            grad_w[i] += h.T @ dout
            grad_b[i] += dout.sum(axis=0)
            dh = dout @ self.weights[i].T
            if i > 0:
                _hp, zp, maskp = caches[i - 1]
                if maskp is not None:
                    dh = dh * maskp
                dh = dh * (zp > 0.0)
            dout = dh
        return dout


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class _BaseNet:
    """Parameter bookkeeping and loss shared by the joint and isolated nets."""

    config: TrainingConfig
    epoch_log: list[dict]

    def _mlps(self) -> list[_MLP]:
        raise NotImplementedError

    def _forward_logits(self, X, dropout=0.0, rng=None):
        raise NotImplementedError

    def _backward(self, caches, dlogits, grads):
        raise NotImplementedError

    def parameters(self) -> list[np.ndarray]:
        params = []
        for mlp in self._mlps():
            params.extend(mlp.weights)
            params.extend(mlp.biases)
        return params

    def _is_weight(self) -> list[bool]:
        flags = []
        for mlp in self._mlps():
            flags.extend([True] * len(mlp.weights))
            flags.extend([False] * len(mlp.biases))
        return flags

    def set_parameters(self, params: list[np.ndarray]) -> None:
        for own, new in zip(self.parameters(), params):
            own[...] = new

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray,
                       dropout: float = 0.0,
                       rng: np.random.Generator | None = None):
        """Mean cross-entropy plus L2 weight decay, with gradients in
        parameter order."""
        n = X.shape[0]
        logits, caches = self._forward_logits(X, dropout=dropout, rng=rng)
        probs = _softmax(logits)
        eps = 1e-12
        ce = -np.mean(np.log(probs[np.arange(n), y] + eps))
        wd = self.config.weight_decay
        params = self.parameters()
        weight_flags = self._is_weight()
        reg = 0.5 * wd * sum(
            float(np.sum(p * p)) for p, w in zip(params, weight_flags) if w)
        loss = ce + reg

        dlogits = probs.copy()
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n
        grads = [np.zeros_like(p) for p in params]
        self._backward(caches, dlogits, grads)
        for g, p, w in zip(grads, params, weight_flags):
            if w:
                g += wd * p
        return loss, grads

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Softmax class probabilities; dropout disabled, deterministic."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.input_width:
            raise ModelError(
                f"expected input width {self.input_width}, got {X.shape[1]}")
        logits, _ = self._forward_logits(X)
        probs = _softmax(logits)
        return probs[0] if single else probs

    def predict(self, X: np.ndarray, reject_below: float | None = None) -> np.ndarray:
        """Argmax class (smallest index on ties); REJECTED when the top
        probability falls below ``reject_below``."""
        probs = np.atleast_2d(self.predict_proba(X))
        pred = probs.argmax(axis=1)
        if reject_below is not None:
            pred = np.where(probs.max(axis=1) < reject_below, REJECTED, pred)
        return pred


class SherlockNet(_BaseNet):
    """The joint multi-input network over the full 1,588-slot vector."""

    input_width = N_FEATURES

    def __init__(self, config: TrainingConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.chars_net = _MLP(
            [960, config.chars_hidden, config.chars_hidden, N_TYPES], rng)
        self.words_net = _MLP(
            [200, config.words_hidden, config.words_hidden, N_TYPES], rng)
        self.paragraph_net = _MLP(
            [400, config.paragraph_hidden, config.paragraph_hidden, N_TYPES], rng)
        h1, h2 = config.primary_hidden
        self.primary_net = _MLP([3 * N_TYPES + 27, h1, h2, N_TYPES], rng)
        self.epoch_log: list[dict] = []

    def _mlps(self) -> list[_MLP]:
        return [self.chars_net, self.words_net, self.paragraph_net, self.primary_net]

    def _forward_logits(self, X, dropout=0.0, rng=None):
        oc, cc = self.chars_net.forward(X[:, CHARS_SLICE], dropout, rng)
        ow, cw = self.words_net.forward(X[:, WORDS_SLICE], dropout, rng)
        op, cp = self.paragraph_net.forward(X[:, PARAGRAPH_SLICE], dropout, rng)
        z = np.concatenate([oc, ow, op, X[:, STATS_SLICE]], axis=1)
        logits, cprim = self.primary_net.forward(z, dropout, rng)
        return logits, (cc, cw, cp, cprim)

    def _backward(self, caches, dlogits, grads):
        cc, cw, cp, cprim = caches
        nc = len(self.chars_net.weights)
        nw = len(self.words_net.weights)
        npar = len(self.paragraph_net.weights)
        # grads layout mirrors parameters(): per MLP, weights then biases
        off_c, off_w = 0, 2 * nc
        off_p, off_prim = off_w + 2 * nw, off_w + 2 * nw + 2 * npar
        gprim_w = grads[off_prim:off_prim + len(self.primary_net.weights)]
        gprim_b = grads[off_prim + len(self.primary_net.weights):]
        dz = self.primary_net.backward(cprim, dlogits, gprim_w, gprim_b)
        doc = dz[:, 0:N_TYPES]
        dow = dz[:, N_TYPES:2 * N_TYPES]
        dop = dz[:, 2 * N_TYPES:3 * N_TYPES]
        self.chars_net.backward(cc, doc, grads[off_c:off_c + nc], grads[off_c + nc:off_c + 2 * nc])
        self.words_net.backward(cw, dow, grads[off_w:off_w + nw], grads[off_w + nw:off_w + 2 * nw])
        self.paragraph_net.backward(cp, dop, grads[off_p:off_p + npar],
                                    grads[off_p + npar:off_p + 2 * npar])


class IsolatedNet(_BaseNet):
    """Single feature family with a softmax head on the subnet output."""

    FAMILY_SLICES = {
        "chars": CHARS_SLICE,
        "words": WORDS_FLAG_SLICE,   # 201 inputs: aggregates plus flag
        "paragraph": PARAGRAPH_SLICE,
        "stats": STATS_SLICE,
    }

    def __init__(self, family: str, config: TrainingConfig):
        if family not in self.FAMILY_SLICES:
            raise ModelError(f"unknown feature family {family!r}")
        self.family = family
        self.config = config
        self.slice = self.FAMILY_SLICES[family]
        n_in = self.slice.stop - self.slice.start
        rng = np.random.default_rng(config.seed)
        if family == "stats":
            h1, h2 = config.stats_hidden
        else:
            h1 = h2 = {"chars": config.chars_hidden,
                       "words": config.words_hidden,
                       "paragraph": config.paragraph_hidden}[family]
        self.net = _MLP([n_in, h1, h2, N_TYPES], rng)
        self.epoch_log: list[dict] = []

    input_width = N_FEATURES

    def _mlps(self) -> list[_MLP]:
        return [self.net]

    def _forward_logits(self, X, dropout=0.0, rng=None):
        return self.net.forward(X[:, self.slice], dropout, rng)

    def _backward(self, caches, dlogits, grads):
        k = len(self.net.weights)
        self.net.backward(caches, dlogits, grads[:k], grads[k:])


class _Adam:
    def __init__(self, params: list[np.ndarray], config: TrainingConfig):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.config = config

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        c = self.config
        self.t += 1
        b1t = 1.0 - c.adam_beta1 ** self.t
        b2t = 1.0 - c.adam_beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.adam_beta1
            m += (1.0 - c.adam_beta1) * g
            v *= c.adam_beta2
            v += (1.0 - c.adam_beta2) * g * g
            p -= c.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + c.adam_eps)


def _train(net: _BaseNet, train_X, train_y, val_X, val_y,
           config: TrainingConfig, log_file=None) -> None:
    train_X = np.asarray(train_X, dtype=np.float64)
    val_X = np.asarray(val_X, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    val_y = np.asarray(val_y, dtype=np.int64)
    if np.isnan(train_X).any() or np.isnan(val_X).any():
        raise ModelError("training matrices must be imputed (found NaN)")

    params = net.parameters()
    adam = _Adam(params, config)
    rng = np.random.default_rng(config.seed + 1)
    n = train_X.shape[0]

    best_val = np.inf
    best_params: list[np.ndarray] | None = None
    stale = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = net.loss_and_grads(
                train_X[idx], train_y[idx], dropout=config.dropout, rng=rng)
            if not np.isfinite(loss):
                raise ModelError(
                    f"non-finite loss at epoch {epoch} batch {n_batches}")
            adam.step(params, grads)
            epoch_loss += loss
            n_batches += 1

        val_loss, _ = net.loss_and_grads(val_X, val_y)
        val_acc = float(np.mean(net.predict(val_X) == val_y))
        entry = {"epoch": epoch, "train_loss": epoch_loss / max(1, n_batches),
                 "val_loss": float(val_loss), "val_accuracy": val_acc}
        net.epoch_log.append(entry)
        if log_file is not None:
            log_file.write(json.dumps(entry) + "\n")

        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_params = [p.copy() for p in params]
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    if best_params is not None:
        net.set_parameters(best_params)


def train_sherlock(train_X, train_y, val_X, val_y,
                   config: TrainingConfig = TrainingConfig(),
                   log_file=None) -> SherlockNet:
    """Jointly train the full multi-input network; deterministic per seed."""
    net = SherlockNet(config)
    _train(net, train_X, train_y, val_X, val_y, config, log_file)
    return net


def train_isolated(family: str, train_X, train_y, val_X, val_y,
                   config: TrainingConfig = TrainingConfig(),
                   test_X=None, test_y=None,
                   log_file=None) -> tuple[IsolatedNet, float | None]:
    """Train one feature family in isolation; optionally report its
    support-weighted F1 on a held-out test matrix."""
    net = IsolatedNet(family, config)
    _train(net, train_X, train_y, val_X, val_y, config, log_file)
    f1 = None
    if test_X is not None and test_y is not None:
        from .evaluation import evaluate
        f1 = evaluate(net.predict(test_X), test_y).weighted_f1
    return net, f1
