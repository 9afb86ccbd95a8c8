"""K-layer sigmoid auto-encoder with hand-rolled backpropagation.

Row-major convention throughout: activations are (n, dim) matrices, layer k
maps dimension ``sizes[k-1] -> sizes[k]`` in the encoder and back out in the
decoder.  Pre-activations are clamped to [-30, 30] before the sigmoid; the
gradient is that of the exact sigmoid at the clamped value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AutoEncoderParams",
    "ParamGrads",
    "sigmoid",
    "default_layer_sizes",
    "init_params",
    "encode",
    "decode",
    "encode_rows",
    "reconstruct_rows",
    "recon_loss",
    "recon_loss_grad_w",
    "encoder_param_grads",
    "recon_param_grads",
    "autoenc_grads",
]

CLAMP = 30.0


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x)), overflow-safe via clamping."""
    return 1.0 / (1.0 + np.exp(-np.clip(x, -CLAMP, CLAMP)))


@dataclass(frozen=True)
class AutoEncoderParams:
    """Encoder/decoder weight matrices and biases.

    ``encoder_weights[k]`` has shape (sizes[k+1], sizes[k]); the decoder
    mirrors the encoder in reverse so ``decoder_weights[k]`` has shape
    (sizes[K-1-k], sizes[K-k]).  K = 0 (no layers) makes both maps the
    identity.
    """

    encoder_weights: tuple[np.ndarray, ...]
    encoder_biases: tuple[np.ndarray, ...]
    decoder_weights: tuple[np.ndarray, ...]
    decoder_biases: tuple[np.ndarray, ...]
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        K = len(sizes) - 1
        if K < 0:
            raise ValueError("layer_sizes must contain at least the input size")
        for seq, name in (
            (self.encoder_weights, "encoder_weights"),
            (self.encoder_biases, "encoder_biases"),
            (self.decoder_weights, "decoder_weights"),
            (self.decoder_biases, "decoder_biases"),
        ):
            if len(seq) != K:
                raise ValueError(f"{name} must have K = {K} entries")
        for k in range(K):
            if self.encoder_weights[k].shape != (sizes[k + 1], sizes[k]):
                raise ValueError(f"encoder weight {k} has wrong shape")
            if self.decoder_weights[k].shape != (sizes[K - 1 - k], sizes[K - k]):
                raise ValueError(f"decoder weight {k} has wrong shape")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "encoder_weights", tuple(self.encoder_weights))
        object.__setattr__(self, "encoder_biases", tuple(self.encoder_biases))
        object.__setattr__(self, "decoder_weights", tuple(self.decoder_weights))
        object.__setattr__(self, "decoder_biases", tuple(self.decoder_biases))

    @property
    def K(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def code_dim(self) -> int:
        return self.layer_sizes[-1]

    def weight_frobenius_sq(self) -> float:
        return float(
            sum(np.sum(A**2) for A in self.encoder_weights)
            + sum(np.sum(A**2) for A in self.decoder_weights)
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "layer_sizes": list(self.layer_sizes),
                "encoder_weights": [A.tolist() for A in self.encoder_weights],
                "encoder_biases": [b.tolist() for b in self.encoder_biases],
                "decoder_weights": [A.tolist() for A in self.decoder_weights],
                "decoder_biases": [b.tolist() for b in self.decoder_biases],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "AutoEncoderParams":
        d = json.loads(text)
        return cls(
            encoder_weights=tuple(np.array(A, dtype=float) for A in d["encoder_weights"]),
            encoder_biases=tuple(np.array(b, dtype=float) for b in d["encoder_biases"]),
            decoder_weights=tuple(np.array(A, dtype=float) for A in d["decoder_weights"]),
            decoder_biases=tuple(np.array(b, dtype=float) for b in d["decoder_biases"]),
            layer_sizes=tuple(d["layer_sizes"]),
        )


@dataclass
class ParamGrads:
    """Gradient bundle shaped like :class:`AutoEncoderParams`."""

    encoder_weights: list
    encoder_biases: list
    decoder_weights: list
    decoder_biases: list

    @classmethod
    def zeros_like(cls, params: AutoEncoderParams) -> "ParamGrads":
        return cls(
            [np.zeros_like(A) for A in params.encoder_weights],
            [np.zeros_like(b) for b in params.encoder_biases],
            [np.zeros_like(A) for A in params.decoder_weights],
            [np.zeros_like(b) for b in params.decoder_biases],
        )

    def add_scaled(self, other: "ParamGrads", scale: float = 1.0) -> "ParamGrads":
        for mine, theirs in (
            (self.encoder_weights, other.encoder_weights),
            (self.encoder_biases, other.encoder_biases),
            (self.decoder_weights, other.decoder_weights),
            (self.decoder_biases, other.decoder_biases),
        ):
            for g, h in zip(mine, theirs):
                g += scale * h
        return self

    def max_abs(self) -> float:
        blocks = (
            self.encoder_weights
            + self.encoder_biases
            + self.decoder_weights
            + self.decoder_biases
        )
        return max((float(np.max(np.abs(g))) for g in blocks if g.size), default=0.0)


def default_layer_sizes(p: int, K: int = 2) -> tuple[int, ...]:
    """(p, max(p/2, 2), max(p/4, 2), ...) with ceiling division."""
    sizes = [p]
    for k in range(K):
        sizes.append(max(-(-sizes[-1] // 2), 2))
    return tuple(sizes)


def init_params(layer_sizes, rng) -> AutoEncoderParams:
    """Uniform [-r, r] init with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    K = len(sizes) - 1
    enc_w, enc_b, dec_w, dec_b = [], [], [], []
    for k in range(K):
        fan_in, fan_out = sizes[k], sizes[k + 1]
        r = np.sqrt(6.0 / (fan_in + fan_out))
        enc_w.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        enc_b.append(np.zeros(fan_out))
    for k in range(K):
        fan_in, fan_out = sizes[K - k], sizes[K - 1 - k]
        r = np.sqrt(6.0 / (fan_in + fan_out))
        dec_w.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        dec_b.append(np.zeros(fan_out))
    return AutoEncoderParams(tuple(enc_w), tuple(enc_b), tuple(dec_w), tuple(dec_b), sizes)


def _forward(H, weights, biases):
    """Run H (n, d) through sigmoid layers; returns list of activations incl. input."""
    acts = [H]
    for A, b in zip(weights, biases):
        Z = np.clip(acts[-1] @ A.T + b, -CLAMP, CLAMP)
        acts.append(sigmoid(Z))
    return acts


def encode_rows(params: AutoEncoderParams, X) -> np.ndarray:
    """Encode an (n, p) matrix to (n, code_dim)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.input_dim:
        raise ValueError(
            f"expected input dimension {params.input_dim}, got {X.shape[1]}"
        )
    return _forward(X, params.encoder_weights, params.encoder_biases)[-1]


def encode(params: AutoEncoderParams, x) -> np.ndarray:
    """Encode a single length-p vector."""
    return encode_rows(params, np.asarray(x, dtype=float)[None, :])[0]


def decode_rows(params: AutoEncoderParams, H) -> np.ndarray:
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[1] != params.code_dim:
        raise ValueError(
            f"expected code dimension {params.code_dim}, got {H.shape[1]}"
        )
    return _forward(H, params.decoder_weights, params.decoder_biases)[-1]


def decode(params: AutoEncoderParams, h) -> np.ndarray:
    """Decode a single code vector back to input space."""
    return decode_rows(params, np.asarray(h, dtype=float)[None, :])[0]


def reconstruct_rows(params: AutoEncoderParams, X) -> np.ndarray:
    return decode_rows(params, encode_rows(params, X))


def recon_loss(params: AutoEncoderParams, X, w) -> float:
    """Weighted reconstruction error: each row's residual is scaled by W_i
    inside the squared Frobenius norm, so rows contribute W_i**2 * ||X_i - Xhat_i||^2."""
    X = np.asarray(X, dtype=float)
    W = _weights(w, X.shape[0])
    R = X - reconstruct_rows(params, X)
    return float(np.sum(W**2 * np.sum(R**2, axis=1)))


def recon_loss_grad_w(params: AutoEncoderParams, X, w) -> np.ndarray:
    """d recon_loss / dW (raw weights, not omega)."""
    X = np.asarray(X, dtype=float)
    W = _weights(w, X.shape[0])
    R = X - reconstruct_rows(params, X)
    return 2.0 * W * np.sum(R**2, axis=1)


def _weights(w, n):
    from .balancing import SampleWeights

    if isinstance(w, SampleWeights):
        w = w.w
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected weight vector of length {n}")
    return w


def _backprop(acts, weights, upstream):
    """Backprop an upstream gradient at the stack output; returns
    (weight grads, bias grads, gradient at the stack input)."""
    gw = [None] * len(weights)
    gb = [None] * len(weights)
    delta = upstream
    for k in range(len(weights) - 1, -1, -1):
        H_out = acts[k + 1]
        delta = delta * H_out * (1.0 - H_out)
        gw[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        delta = delta @ weights[k]
    return gw, gb, delta


def encoder_param_grads(params: AutoEncoderParams, X, upstream) -> ParamGrads:
    """Gradients of a loss whose upstream gradient at the code layer is given.

    ``upstream`` must be an (n, code_dim) array of d loss / d phi(X).
    Decoder blocks come back zero: the code-layer losses never touch them.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (X.shape[0], params.code_dim):
        raise ValueError("upstream gradient must have shape (n, code_dim)")
    acts = _forward(X, params.encoder_weights, params.encoder_biases)
    gw, gb, _ = _backprop(acts, params.encoder_weights, upstream)
    out = ParamGrads.zeros_like(params)
    out.encoder_weights = gw
    out.encoder_biases = gb
    return out


def recon_param_grads(params: AutoEncoderParams, X, w) -> ParamGrads:
    """Gradients of :func:`recon_loss` for every encoder and decoder block."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = _weights(w, X.shape[0])
    enc_acts = _forward(X, params.encoder_weights, params.encoder_biases)
    dec_acts = _forward(enc_acts[-1], params.decoder_weights, params.decoder_biases)
    R = X - dec_acts[-1]
    upstream_out = -2.0 * (W**2)[:, None] * R
    dec_gw, dec_gb, at_code = _backprop(dec_acts, params.decoder_weights, upstream_out)
    enc_gw, enc_gb, _ = _backprop(enc_acts, params.encoder_weights, at_code)
    return ParamGrads(enc_gw, enc_gb, dec_gw, dec_gb)


def autoenc_grads(
    params: AutoEncoderParams,
    X,
    w,
    upstream,
    lam2: float = 1.0,
    lam7: float = 0.0,
) -> ParamGrads:
    """Combined parameter gradients: code-layer upstream (prediction and
    balancing contributions), lam2 * reconstruction, and lam7 ridge.

    Decoder blocks receive only the reconstruction and ridge terms.
    """
    grads = encoder_param_grads(params, X, upstream)
    if lam2 != 0.0:
        grads.add_scaled(recon_param_grads(params, X, w), lam2)
    if lam7 != 0.0:
        for g, A in zip(grads.encoder_weights, params.encoder_weights):
            g += 2.0 * lam7 * A
        for g, A in zip(grads.decoder_weights, params.decoder_weights):
            g += 2.0 * lam7 * A
    return grads
