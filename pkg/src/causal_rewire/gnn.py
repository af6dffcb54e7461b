"""Graph convolutional classifier in plain numpy with hand-written backprop.

Per layer: ``U = A_norm @ dropout(H) @ W``, ``S = act(U)``, per-head
projection ``M = S @ blockdiag(theta_1..theta_k)``, then the skip
``H' = relu(M) + H @ P`` (``P`` only when widths differ). The final node
embeddings are concatenated node by node and fed through
``fc1 -> relu -> fc2 -> relu -> out`` to a single logit.

All functions accept a leading batch axis.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    AsymmetricInput,
    DivergedToNaN,
    EmptySplit,
    IndivisibleWidth,
    SchemaMismatch,
    ShapeMismatch,
    SingleClassSplit,
    ValidationError,
    WidthMismatchWithoutProjection,
)
from .graph import CausalGraph, symmetrized_view

CHECKPOINT_SCHEMA = "gcn-checkpoint/1"


@dataclass
class ModelConfig:
    layer_sizes: tuple[int, ...] = (32, 16)
    heads: int = 2
    dropout_rate: float = 0.5
    fc_hidden_1: int = 64
    fc_hidden_2: int = 32
    layer_activation: str = "sigmoid"
    use_gconv: bool = True
    seed: int = 0

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if self.use_gconv and not self.layer_sizes:
            raise ValidationError("layer_sizes may not be empty")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValidationError("layer widths must be positive")
        if any(b > a for a, b in zip(self.layer_sizes, self.layer_sizes[1:])):
            raise ValidationError(f"layer_sizes must be non-increasing, got {self.layer_sizes}")
        if self.heads < 1:
            raise ValidationError("heads must be >= 1")
        for s in self.layer_sizes:
            if s % self.heads:
                raise IndivisibleWidth(f"layer width {s} is not divisible by {self.heads} heads")
        if not 0 <= self.dropout_rate < 1:
            raise ValidationError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.layer_activation not in ACTIVATIONS:
            raise ValidationError(f"layer_activation must be one of {sorted(ACTIVATIONS)}")


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 16
    max_epochs: int = 200
    patience: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr < 0:
            raise ValidationError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1 or self.max_epochs < 0 or self.patience < 1:
            raise ValidationError("batch_size and patience must be >= 1, max_epochs >= 0")


@dataclass
class ModelState:
    config: ModelConfig
    params: dict[str, np.ndarray]
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    n_nodes: int = 0
    n_features: int = 0

    def copy(self) -> "ModelState":
        cp = lambda d: {k: a.copy() for k, a in d.items()}
        return ModelState(self.config, cp(self.params), cp(self.m), cp(self.v), self.step,
                          self.n_nodes, self.n_features)


@dataclass
class EvalMetrics:
    f1: float
    sensitivity: float
    specificity: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    auc_error: str | None = None

    @property
    def confusion(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    def to_dict(self) -> dict:
        return asdict(self)


# -------------------------------------------------------------------- building blocks


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def relu(x):
    return np.maximum(x, 0.0)


ACTIVATIONS = {
    "sigmoid": (sigmoid, lambda u, s: s * (1.0 - s)),
    "relu": (relu, lambda u, s: (u > 0).astype(float)),
    "linear": (lambda x: x, lambda u, s: np.ones_like(u)),
}


def normalize_adjacency(S) -> np.ndarray:
    """Symmetric normalisation of ``S + I``."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeMismatch("adjacency must be square")
    if not np.array_equal(S, S.T):
        raise AsymmetricInput("adjacency must be symmetric")
    if np.any(np.diag(S)):
        raise ValidationError("adjacency must have a zero diagonal")
    a_hat = S + np.eye(len(S))
    d = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d[:, None] * d[None, :]


def gcn_layer(H, A_norm, theta, activation: str = "sigmoid"):
    H, A_norm, theta = np.asarray(H), np.asarray(A_norm), np.asarray(theta)
    if A_norm.shape[-1] != H.shape[-2] or H.shape[-1] != theta.shape[0]:
        raise ShapeMismatch(f"A {A_norm.shape}, H {H.shape}, theta {theta.shape}")
    return ACTIVATIONS[activation][0](A_norm @ H @ theta)


def multi_head_transform(h, heads):
    h = np.asarray(h)
    k = len(heads)
    f = h.shape[-1]
    if k == 0 or f % k:
        raise IndivisibleWidth(f"width {f} is not divisible by {k} heads")
    w = f // k
    if any(np.shape(t) != (w, w) for t in heads):
        raise ShapeMismatch(f"each head must be {w}x{w}")
    return np.concatenate([h[..., j * w:(j + 1) * w] @ heads[j] for j in range(k)], axis=-1)


def skip_connect(h_new, h_prev, projection=None):
    h_new, h_prev = np.asarray(h_new), np.asarray(h_prev)
    if projection is not None:
        h_prev = h_prev @ projection
    elif h_prev.shape[-1] != h_new.shape[-1]:
        raise WidthMismatchWithoutProjection(f"{h_prev.shape[-1]} -> {h_new.shape[-1]} needs a projection")
    return relu(h_new) + h_prev


def concat_pool(Z):
    """Concatenate node embeddings in node order: (..., n, f) -> (..., n*f)."""
    Z = np.asarray(Z)
    return Z.reshape(*Z.shape[:-2], -1)


def _head_logit(z, p):
    a1 = z @ p["fc1.weight"] + p["fc1.bias"]
    h1 = relu(a1)
    a2 = h1 @ p["fc2.weight"] + p["fc2.bias"]
    h2 = relu(a2)
    return h2 @ p["out.weight"] + p["out.bias"], (a1, h1, a2, h2)


def classify(z_pooled, params) -> np.ndarray:
    """Probability of label 1 from a pooled embedding."""
    z = np.asarray(z_pooled, dtype=float)
    if z.shape[-1] != params["fc1.weight"].shape[0]:
        raise ShapeMismatch(f"pooled width {z.shape[-1]} != {params['fc1.weight'].shape[0]}")
    return sigmoid(_head_logit(z, params)[0])


# ---------------------------------------------------------------------- parameters


def _glorot(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def init_model(cfg: ModelConfig, n_nodes: int, n_features: int | None = None) -> ModelState:
    n_features = n_nodes if n_features is None else n_features
    rng = np.random.default_rng(cfg.seed)
    p = {}
    f_in = n_features
    if cfg.use_gconv:
        for ell, f_out in enumerate(cfg.layer_sizes):
            p[f"gcn{ell}.weight"] = _glorot(rng, f_in, f_out)
            w = f_out // cfg.heads
            for h in range(cfg.heads):
                p[f"gcn{ell}.head{h}"] = _glorot(rng, w, w)
            if f_in != f_out:
                p[f"gcn{ell}.proj"] = _glorot(rng, f_in, f_out)
            f_in = f_out
    m = n_nodes * f_in
    p["fc1.weight"] = _glorot(rng, m, cfg.fc_hidden_1)
    p["fc1.bias"] = np.zeros(cfg.fc_hidden_1)
    p["fc2.weight"] = _glorot(rng, cfg.fc_hidden_1, cfg.fc_hidden_2)
    p["fc2.bias"] = np.zeros(cfg.fc_hidden_2)
    p["out.weight"] = _glorot(rng, cfg.fc_hidden_2, 1, shape=(cfg.fc_hidden_2,))
    p["out.bias"] = np.zeros(())
    zeros = {k: np.zeros_like(a) for k, a in p.items()}
    return ModelState(cfg, p, zeros, {k: a.copy() for k, a in zeros.items()}, 0, n_nodes, n_features)


# ------------------------------------------------------------------ forward/backward


def forward(state: ModelState, A, X, train: bool = False, rng: np.random.Generator | None = None):
    """Logits for a batch ``A`` (B, n, n), ``X`` (B, n, f). Returns ``(logits, cache)``."""
    cfg, p = state.config, state.params
    act, _ = ACTIVATIONS[cfg.layer_activation]
    H = X
    layers = []
    if cfg.use_gconv:
        for ell in range(len(cfg.layer_sizes)):
            if train and cfg.dropout_rate > 0:
                keep = 1.0 - cfg.dropout_rate
                mask = (rng.random(H.shape) < keep) / keep
            else:
                mask = None
            Hd = H * mask if mask is not None else H
            AH = A @ Hd
            U = AH @ p[f"gcn{ell}.weight"]
            S = act(U)
            M = multi_head_transform(S, [p[f"gcn{ell}.head{h}"] for h in range(cfg.heads)])
            proj = p.get(f"gcn{ell}.proj")
            H_next = skip_connect(M, H, proj)
            layers.append((H, mask, AH, U, S, M))
            H = H_next
    z = concat_pool(H)
    logits, fc_cache = _head_logit(z, p)
    return logits, (A, layers, H, z, fc_cache)


def bce_with_logits(logits, y) -> float:
    logits = np.asarray(logits, dtype=float)
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def backward(state: ModelState, cache, dlogits) -> dict[str, np.ndarray]:
    cfg, p = state.config, state.params
    _, dact = ACTIVATIONS[cfg.layer_activation]
    A, layers, H_last, z, (a1, h1, a2, h2) = cache
    g = {}
    g["out.bias"] = np.asarray(dlogits.sum())
    g["out.weight"] = h2.T @ dlogits
    da2 = np.outer(dlogits, p["out.weight"]) * (a2 > 0)
    g["fc2.weight"] = h1.T @ da2
    g["fc2.bias"] = da2.sum(axis=0)
    da1 = (da2 @ p["fc2.weight"].T) * (a1 > 0)
    g["fc1.weight"] = z.T @ da1
    g["fc1.bias"] = da1.sum(axis=0)
    dH = (da1 @ p["fc1.weight"].T).reshape(H_last.shape)
    k = cfg.heads
    for ell in reversed(range(len(layers))):
        H, mask, AH, U, S, M = layers[ell]
        dM = dH * (M > 0)
        proj = p.get(f"gcn{ell}.proj")
        if proj is not None:
            g[f"gcn{ell}.proj"] = np.einsum("bni,bno->io", H, dH)
            dH_prev = dH @ proj.T
        else:
            dH_prev = dH.copy()
        w = S.shape[-1] // k
        dS = np.empty_like(S)
        for h in range(k):
            blk = slice(h * w, (h + 1) * w)
            theta = p[f"gcn{ell}.head{h}"]
            g[f"gcn{ell}.head{h}"] = np.einsum("bni,bno->io", S[..., blk], dM[..., blk])
            dS[..., blk] = dM[..., blk] @ theta.T
        dU = dS * dact(U, S)
        W = p[f"gcn{ell}.weight"]
        g[f"gcn{ell}.weight"] = np.einsum("bni,bno->io", AH, dU)
        dHd = np.swapaxes(A, -1, -2) @ (dU @ W.T)
        if mask is not None:
            dHd = dHd * mask
        dH = dH_prev + dHd
    return g


def loss_and_grads(state: ModelState, A, X, y, train=False, rng=None):
    logits, cache = forward(state, A, X, train, rng)
    y = np.asarray(y, dtype=float)
    dlogits = (sigmoid(logits) - y) / len(y)
    return bce_with_logits(logits, y), backward(state, cache, dlogits)


def adam_step(state: ModelState, grads, opt: TrainConfig) -> None:
    state.step += 1
    b1, b2 = opt.beta1, opt.beta2
    for k, grad in grads.items():
        state.m[k] = b1 * state.m[k] + (1 - b1) * grad
        state.v[k] = b2 * state.v[k] + (1 - b2) * grad * grad
        m_hat = state.m[k] / (1 - b1**state.step)
        v_hat = state.v[k] / (1 - b2**state.step)
        state.params[k] = state.params[k] - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)


# ------------------------------------------------------------------------ data prep


def graph_tensors(item) -> tuple[np.ndarray, np.ndarray]:
    """``(A_norm, X)`` from a ``CausalGraph`` or an ``(adjacency, features)`` pair."""
    if isinstance(item, CausalGraph):
        return normalize_adjacency(symmetrized_view(item)), np.asarray(item.features, dtype=float)
    adj, feats = item
    return normalize_adjacency(symmetrized_view(np.asarray(adj))), np.asarray(feats, dtype=float)


def stack_inputs(items) -> tuple[np.ndarray, np.ndarray]:
    pairs = [graph_tensors(it) for it in items]
    shapes = {(a.shape, x.shape) for a, x in pairs}
    if len(shapes) > 1:
        raise ShapeMismatch(f"all graphs in a batch must share node count, got {sorted(shapes)}")
    return np.stack([a for a, _ in pairs]), np.stack([x for _, x in pairs])


def predict_proba(state: ModelState, A, X) -> np.ndarray:
    logits, _ = forward(state, A, X, train=False)
    return sigmoid(logits)


# ------------------------------------------------------------------------ metrics


def metrics_from_confusion(tp: int, fp: int, tn: int, fn: int) -> tuple[float, float, float]:
    """``(f1, sensitivity, specificity)``; undefined ratios are reported as 0."""
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    sens = tp / (tp + fn) if (tp + fn) else 0.0
    spec = tn / (tn + fp) if (tn + fp) else 0.0
    return f1, sens, spec


def auc_score(y_true, scores) -> float:
    """Mann-Whitney AUC with mid-ranks for tied scores."""
    y = np.asarray(y_true, dtype=int)
    s = np.asarray(scores, dtype=float)
    n_pos, n_neg = int(y.sum()), int(len(y) - y.sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassSplit("AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    start = 0
    while start < len(s):
        stop = start
        while stop + 1 < len(s) and sorted_s[stop + 1] == sorted_s[start]:
            stop += 1
        ranks[order[start:stop + 1]] = 0.5 * (start + stop) + 1.0
        start = stop + 1
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def binary_metrics(y_true, probs, threshold: float = 0.5) -> EvalMetrics:
    y = np.asarray(y_true, dtype=int)
    if len(y) == 0:
        raise EmptySplit("cannot evaluate an empty split")
    pred = (np.asarray(probs) >= threshold).astype(int)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    f1, sens, spec = metrics_from_confusion(tp, fp, tn, fn)
    try:
        auc, err = auc_score(y, probs), None
    except SingleClassSplit as exc:
        auc, err = None, f"SingleClassSplit: {exc}"
    return EvalMetrics(f1, sens, spec, auc, tp, fp, tn, fn, err)


def evaluate(state: ModelState, split) -> EvalMetrics:
    """Metrics on ``split``: a list of ``(graph, label)`` pairs, dropout off."""
    if not split:
        raise EmptySplit("cannot evaluate an empty split")
    A, X = stack_inputs([g for g, _ in split])
    return binary_metrics([y for _, y in split], predict_proba(state, A, X))


# ------------------------------------------------------------------------ training


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_f1: float


def _check_finite(state: ModelState, step: int):
    for k, a in state.params.items():
        if not np.all(np.isfinite(a)):
            raise DivergedToNaN(step, k)


def train(train_split, val_split, cfg: ModelConfig, opt: TrainConfig | None = None):
    """Fit on ``train_split``; keep the snapshot with the best validation F1.

    Ties on F1 are broken by lower validation loss. Training stops after
    ``opt.patience`` epochs without improvement. Returns ``(state, curve)``.
    """
    opt = opt or TrainConfig()
    if not train_split or not val_split:
        raise EmptySplit("train and validation splits must be non-empty")
    A_tr, X_tr = stack_inputs([g for g, _ in train_split])
    A_va, X_va = stack_inputs([g for g, _ in val_split])
    if A_tr.shape[1:] != A_va.shape[1:] or X_tr.shape[1:] != X_va.shape[1:]:
        raise ShapeMismatch("train and validation graphs differ in size")
    y_tr = np.array([y for _, y in train_split], dtype=float)
    y_va = np.array([y for _, y in val_split], dtype=float)

    state = init_model(cfg, A_tr.shape[1], X_tr.shape[2])
    rng = np.random.default_rng([cfg.seed, 1])
    curve: list[EpochRecord] = []
    best, best_key, stale = state.copy(), None, 0
    for epoch in range(opt.max_epochs):
        order = rng.permutation(len(y_tr))
        losses = []
        for start in range(0, len(order), opt.batch_size):
            idx = np.sort(order[start:start + opt.batch_size])
            loss, grads = loss_and_grads(state, A_tr[idx], X_tr[idx], y_tr[idx], train=True, rng=rng)
            adam_step(state, grads, opt)
            _check_finite(state, state.step)
            losses.append(loss * len(idx))
        logits_va, _ = forward(state, A_va, X_va)
        val_loss = bce_with_logits(logits_va, y_va)
        val_f1 = binary_metrics(y_va, sigmoid(logits_va)).f1
        curve.append(EpochRecord(epoch, float(sum(losses) / len(y_tr)), val_loss, val_f1))
        key = (val_f1, -val_loss)
        if best_key is None or key > best_key:
            best, best_key, stale = state.copy(), key, 0
        else:
            stale += 1
            if stale >= opt.patience:
                break
    return best, curve


def save_curve_csv(curve, path) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,train_loss,val_loss,val_f1\n")
        for r in curve:
            fh.write(f"{r.epoch},{r.train_loss:.12g},{r.val_loss:.12g},{r.val_f1:.12g}\n")


# ---------------------------------------------------------------------- checkpoints


def save_checkpoint(state: ModelState, path) -> None:
    doc = {
        "schema_version": CHECKPOINT_SCHEMA,
        "config": asdict(state.config),
        "n_nodes": state.n_nodes,
        "n_features": state.n_features,
        "step": state.step,
        "params": {k: {"shape": list(a.shape), "data": a.ravel().tolist()} for k, a in state.params.items()},
        "adam_m": {k: a.ravel().tolist() for k, a in state.m.items()},
        "adam_v": {k: a.ravel().tolist() for k, a in state.v.items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> ModelState:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != CHECKPOINT_SCHEMA:
        raise SchemaMismatch(f"checkpoint schema {doc.get('schema_version')!r}, expected {CHECKPOINT_SCHEMA!r}")
    cfg = ModelConfig(**doc["config"])
    params, m, v = {}, {}, {}
    for k, rec in doc["params"].items():
        shape = tuple(rec["shape"])
        params[k] = np.array(rec["data"], dtype=float).reshape(shape)
        m[k] = np.array(doc["adam_m"][k], dtype=float).reshape(shape)
        v[k] = np.array(doc["adam_v"][k], dtype=float).reshape(shape)
    return ModelState(cfg, params, m, v, doc["step"], doc["n_nodes"], doc["n_features"])
