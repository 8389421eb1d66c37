"""Trainable token-weighting head.

A small pre-norm transformer (self-attention + feed-forward blocks) runs over
the document matrix; its output at the prepended global slot is dotted with
the raw token rows to produce softmax weights over document tokens.  Forward
and backward passes are written out explicitly so gradients are exact,
deterministic, and directly checkable against finite differences.

Parameters live in a flat name-to-array dict so the optimizer, checkpoints,
and gradient checks can treat them uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN_EPS = 1e-5

_BLOCK_FIELDS = (
    "ln1_gamma", "ln1_beta",
    "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
    "ln2_gamma", "ln2_beta",
    "w1", "b1", "w2", "b2",
)


@dataclass
class ScorerParams:
    """All trainable tensors of the scorer, keyed by name."""

    dim: int
    heads: int
    n_blocks: int
    tensors: dict[str, np.ndarray]
    version: int = 1

    @property
    def projection(self) -> np.ndarray | None:
        return self.tensors.get("projection")

    @property
    def global_slot(self) -> np.ndarray:
        return self.tensors["global_slot"]

    def copy(self) -> "ScorerParams":
        return ScorerParams(
            dim=self.dim,
            heads=self.heads,
            n_blocks=self.n_blocks,
            tensors={k: v.copy() for k, v in self.tensors.items()},
            version=self.version,
        )

    def validate(self):
        d = self.dim
        if d % self.heads != 0:
            raise ValueError("dim must be divisible by the head count")
        for name, t in self.tensors.items():
            if not np.all(np.isfinite(t)):
                raise ValueError(f"non-finite values in parameter {name!r}")
        expected = expected_shapes(d, self.n_blocks, "projection" in self.tensors)
        if set(self.tensors) != set(expected):
            raise ValueError("parameter names do not match the architecture")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ValueError(
                    f"parameter {name!r} has shape {self.tensors[name].shape}, expected {shape}"
                )


def expected_shapes(dim: int, n_blocks: int, use_projection: bool) -> dict[str, tuple]:
    shapes: dict[str, tuple] = {"global_slot": (dim,)}
    if use_projection:
        shapes["projection"] = (dim, dim)
    hidden = 4 * dim
    for b in range(n_blocks):
        p = f"block{b}."
        shapes[p + "ln1_gamma"] = (dim,)
        shapes[p + "ln1_beta"] = (dim,)
        for w in ("wq", "wk", "wv", "wo"):
            shapes[p + w] = (dim, dim)
        for bias in ("bq", "bk", "bv", "bo"):
            shapes[p + bias] = (dim,)
        shapes[p + "ln2_gamma"] = (dim,)
        shapes[p + "ln2_beta"] = (dim,)
        shapes[p + "w1"] = (dim, hidden)
        shapes[p + "b1"] = (hidden,)
        shapes[p + "w2"] = (hidden, dim)
        shapes[p + "b2"] = (dim,)
    return shapes


def init_scorer_params(
    dim: int = 64,
    heads: int = 4,
    n_blocks: int = 2,
    use_projection: bool = True,
    seed: int = 0,
    init_scale: float = 0.02,
) -> ScorerParams:
    """Seeded initialization: identity-ish blocks plus a random global slot."""
    if dim % heads != 0:
        raise ValueError("dim must be divisible by the head count")
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    slot = rng.normal(size=dim)
    tensors["global_slot"] = slot / np.linalg.norm(slot)
    if use_projection:
        tensors["projection"] = np.eye(dim)
    for name, shape in expected_shapes(dim, n_blocks, use_projection).items():
        if name in tensors:
            continue
        base = name.split(".")[-1]
        if base.startswith("ln") and base.endswith("gamma"):
            tensors[name] = np.ones(shape)
        elif base.startswith(("w",)):
            tensors[name] = rng.normal(scale=init_scale, size=shape)
        else:
            tensors[name] = np.zeros(shape)
    params = ScorerParams(dim=dim, heads=heads, n_blocks=n_blocks, tensors=tensors)
    params.validate()
    return params


def zero_grads(params: ScorerParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.tensors.items()}


# ---------------------------------------------------------------------------
# primitive forward/backward pairs
# ---------------------------------------------------------------------------


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(p: np.ndarray, dp: np.ndarray, axis: int = -1) -> np.ndarray:
    return p * (dp - (dp * p).sum(axis=axis, keepdims=True))


def _layer_norm_forward(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return gamma * xhat + beta, (xhat, inv, gamma)


def _layer_norm_backward(dy, cache):
    xhat, inv, gamma = cache
    dxhat = dy * gamma
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


def _split_heads(x, heads):
    m, d = x.shape
    return x.reshape(m, heads, d // heads).transpose(1, 0, 2)


def _merge_heads(x):
    heads, m, dh = x.shape
    return x.transpose(1, 0, 2).reshape(m, heads * dh)


def _attention_forward(h, t, prefix, heads):
    q = h @ t[prefix + "wq"] + t[prefix + "bq"]
    k = h @ t[prefix + "wk"] + t[prefix + "bk"]
    v = h @ t[prefix + "wv"] + t[prefix + "bv"]
    qh, kh, vh = (_split_heads(a, heads) for a in (q, k, v))
    scale = 1.0 / math.sqrt(qh.shape[-1])
    att = softmax(qh @ kh.transpose(0, 2, 1) * scale, axis=-1)
    o = _merge_heads(att @ vh)
    out = o @ t[prefix + "wo"] + t[prefix + "bo"]
    return out, (h, qh, kh, vh, att, o, scale)


def _attention_backward(dout, cache, t, prefix, grads):
    h, qh, kh, vh, att, o, scale = cache
    heads = qh.shape[0]
    grads[prefix + "wo"] += o.T @ dout
    grads[prefix + "bo"] += dout.sum(axis=0)
    do = _split_heads(dout @ t[prefix + "wo"].T, heads)
    datt = do @ vh.transpose(0, 2, 1)
    dvh = att.transpose(0, 2, 1) @ do
    ds = softmax_backward(att, datt, axis=-1) * scale
    dqh = ds @ kh
    dkh = ds.transpose(0, 2, 1) @ qh
    dq, dk, dv = (_merge_heads(a) for a in (dqh, dkh, dvh))
    grads[prefix + "wq"] += h.T @ dq
    grads[prefix + "bq"] += dq.sum(axis=0)
    grads[prefix + "wk"] += h.T @ dk
    grads[prefix + "bk"] += dk.sum(axis=0)
    grads[prefix + "wv"] += h.T @ dv
    grads[prefix + "bv"] += dv.sum(axis=0)
    dh = dq @ t[prefix + "wq"].T + dk @ t[prefix + "wk"].T + dv @ t[prefix + "wv"].T
    return dh


def _block_forward(x, t, prefix, heads):
    h1, ln1_cache = _layer_norm_forward(x, t[prefix + "ln1_gamma"], t[prefix + "ln1_beta"])
    att, att_cache = _attention_forward(h1, t, prefix, heads)
    x2 = x + att
    h2, ln2_cache = _layer_norm_forward(x2, t[prefix + "ln2_gamma"], t[prefix + "ln2_beta"])
    z1 = h2 @ t[prefix + "w1"] + t[prefix + "b1"]
    r = np.maximum(z1, 0.0)
    y = x2 + r @ t[prefix + "w2"] + t[prefix + "b2"]
    return y, (ln1_cache, att_cache, ln2_cache, h2, z1, r)


def _block_backward(dy, cache, t, prefix, grads):
    ln1_cache, att_cache, ln2_cache, h2, z1, r = cache
    grads[prefix + "w2"] += r.T @ dy
    grads[prefix + "b2"] += dy.sum(axis=0)
    dz1 = (dy @ t[prefix + "w2"].T) * (z1 > 0)
    grads[prefix + "w1"] += h2.T @ dz1
    grads[prefix + "b1"] += dz1.sum(axis=0)
    dh2 = dz1 @ t[prefix + "w1"].T
    dx2_ln, dg2, db2 = _layer_norm_backward(dh2, ln2_cache)
    grads[prefix + "ln2_gamma"] += dg2
    grads[prefix + "ln2_beta"] += db2
    dx2 = dy + dx2_ln
    dh1 = _attention_backward(dx2, att_cache, t, prefix, grads)
    dx_ln, dg1, db1 = _layer_norm_backward(dh1, ln1_cache)
    grads[prefix + "ln1_gamma"] += dg1
    grads[prefix + "ln1_beta"] += db1
    return dx2 + dx_ln


def transformer_forward(x: np.ndarray, params: ScorerParams):
    """Run the stacked blocks over a (rows, dim) matrix."""
    caches = []
    y = x
    for b in range(params.n_blocks):
        y, cache = _block_forward(y, params.tensors, f"block{b}.", params.heads)
        caches.append(cache)
    return y, caches


def transformer_backward(dy: np.ndarray, caches, params: ScorerParams, grads) -> np.ndarray:
    dx = dy
    for b in range(params.n_blocks - 1, -1, -1):
        dx = _block_backward(dx, caches[b], params.tensors, f"block{b}.", grads)
    return dx


# ---------------------------------------------------------------------------
# token weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightVector:
    """Softmax weights over document tokens (the global slot is excluded)."""

    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to one")
        object.__setattr__(self, "weights", w)


@dataclass
class WeightCache:
    doc_matrix: np.ndarray          # projected rows, global slot at row 0
    transformer_caches: list
    d0_hat: np.ndarray
    logits: np.ndarray
    weights: np.ndarray


def weights_forward(doc_matrix: np.ndarray, params: ScorerParams) -> WeightCache:
    """Token weights for a document matrix whose row 0 is the global slot.

    The transformed global row is dotted against the raw token rows, scaled by
    1/sqrt(dim), and softmaxed over the tokens.
    """
    if doc_matrix.ndim != 2 or doc_matrix.shape[1] != params.dim:
        raise ValueError("document matrix shape does not match the scorer dimension")
    if doc_matrix.shape[0] < 2:
        raise ValueError("document matrix needs the global slot plus at least one token")
    y, caches = transformer_forward(doc_matrix, params)
    d0_hat = y[0]
    logits = (doc_matrix[1:] @ d0_hat) / math.sqrt(params.dim)
    weights = softmax(logits)
    return WeightCache(
        doc_matrix=doc_matrix,
        transformer_caches=caches,
        d0_hat=d0_hat,
        logits=logits,
        weights=weights,
    )


def weights_backward(cache: WeightCache, dweights: np.ndarray, params: ScorerParams, grads) -> np.ndarray:
    """Backpropagate a gradient on the weights to the document matrix rows."""
    scale = 1.0 / math.sqrt(params.dim)
    dlogits = softmax_backward(cache.weights, dweights)
    ddoc = np.zeros_like(cache.doc_matrix)
    ddoc[1:] = np.outer(dlogits, cache.d0_hat) * scale
    dd0_hat = (dlogits[:, None] * cache.doc_matrix[1:]).sum(axis=0) * scale
    dy = np.zeros_like(cache.doc_matrix)
    dy[0] = dd0_hat
    ddoc += transformer_backward(dy, cache.transformer_caches, params, grads)
    return ddoc


def token_weights(doc_matrix: np.ndarray, params: ScorerParams) -> WeightVector:
    """Public entry point: weights over the token rows of a document matrix."""
    return WeightVector(weights=weights_forward(doc_matrix, params).weights)
