"""Joint weight / coefficient / encoder optimization for balanced regression.

The mixed objective combines a weighted logistic loss, the global balancing
regularizer evaluated on encoded covariates, a weighted reconstruction term,
and ridge / lasso / weight-variance / sum-to-one penalties.  One outer
iteration takes a backtracked gradient step on the weight parameters omega,
an inner proximal-gradient solve for beta, and a backtracked gradient step
on all encoder/decoder parameters, in that order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import autoencoder as ae
from .balancing import (
    SampleWeights,
    balancing_arm_terms,
    balancing_loss,
    balancing_loss_grad_w,
)
from .dataset import BinaryDataset

__all__ = [
    "HyperParams",
    "DgbrModel",
    "FitTrace",
    "TrainingDataError",
    "loss_pre",
    "loss_pre_grad_beta",
    "loss_pre_grad_w",
    "update_beta",
    "fit_dgbr",
    "fit_gbr",
    "fit_lr",
    "fit_dlr",
    "predict_proba",
]

MAX_BACKTRACKS = 30
BETA_MAX_ITERS = 10_000
BETA_REL_TOL = 1e-8


class TrainingDataError(ValueError):
    """Raised when the training data cannot support a fit."""


@dataclass(frozen=True)
class HyperParams:
    """Penalty multipliers and optimizer knobs.

    lambda1: balancing, lambda2: reconstruction, lambda3: ||W||^2,
    lambda4/lambda5: elastic net on beta, lambda6: (sum W - 1)^2,
    lambda7: encoder/decoder ridge.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 0.0
    lambda4: float = 0.01
    lambda5: float = 0.001
    lambda6: float = 0.0
    lambda7: float = 0.001
    max_outer_iters: int = 200
    tol: float = 1e-6
    step_w: float = 0.05
    step_theta: float = 0.05
    freeze_w_after: int | None = None
    layer_sizes: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6", "lambda7"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.tol <= 0 or self.step_w < 0 or self.step_theta < 0:
            raise ValueError("tol must be positive and step sizes non-negative")

    def to_dict(self) -> dict:
        d = {
            k: getattr(self, k)
            for k in (
                "lambda1", "lambda2", "lambda3", "lambda4", "lambda5",
                "lambda6", "lambda7", "max_outer_iters", "tol", "step_w",
                "step_theta", "freeze_w_after", "seed",
            )
        }
        d["layer_sizes"] = list(self.layer_sizes) if self.layer_sizes else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        d = dict(d)
        if d.get("layer_sizes"):
            d["layer_sizes"] = tuple(d["layer_sizes"])
        return cls(**d)


@dataclass
class FitTrace:
    """Per-outer-iteration objective decomposition and step bookkeeping."""

    records: list = field(default_factory=list)

    COLUMNS = (
        "iter", "l_mix", "l_pre", "l_bal", "l_ae", "l_reg",
        "step_w", "step_theta", "w_stalled", "theta_stalled",
    )

    def append(self, **kwargs):
        self.records.append({c: kwargs.get(c) for c in self.COLUMNS})

    @property
    def l_mix(self) -> list[float]:
        return [r["l_mix"] for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.COLUMNS)
        writer.writeheader()
        writer.writerows(self.records)
        return buf.getvalue()


@dataclass(frozen=True)
class DgbrModel:
    """A fitted balanced regression model: optional encoder plus coefficients."""

    autoenc: ae.AutoEncoderParams | None
    beta: np.ndarray
    weights: SampleWeights
    hyper: HyperParams

    def embed(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.autoenc is None:
            return X
        return ae.encode_rows(self.autoenc, X)

    @property
    def input_dim(self) -> int:
        if self.autoenc is not None:
            return self.autoenc.input_dim
        return self.beta.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "autoenc": None if self.autoenc is None else json.loads(self.autoenc.to_json()),
                "beta": self.beta.tolist(),
                "omega": self.weights.omega.tolist(),
                "hyper": self.hyper.to_dict(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DgbrModel":
        d = json.loads(text)
        params = None
        if d["autoenc"] is not None:
            params = ae.AutoEncoderParams.from_json(json.dumps(d["autoenc"]))
        return cls(
            autoenc=params,
            beta=np.array(d["beta"], dtype=float),
            weights=SampleWeights(np.array(d["omega"], dtype=float)),
            hyper=HyperParams.from_dict(d["hyper"]),
        )


def _margin(Phi, beta, y):
    return (1.0 - 2.0 * y) * (Phi @ beta)


def loss_pre(Phi, y, beta, w) -> float:
    """Weighted logistic negative log-likelihood sum_i W_i log(1 + exp(m_i))."""
    W = w.w if isinstance(w, SampleWeights) else np.asarray(w, dtype=float)
    return float(W @ np.logaddexp(0.0, _margin(Phi, beta, y)))


def loss_pre_grad_beta(Phi, y, beta, w) -> np.ndarray:
    W = w.w if isinstance(w, SampleWeights) else np.asarray(w, dtype=float)
    m = _margin(Phi, beta, y)
    g = W * (1.0 - 2.0 * y) * ae.sigmoid(m)
    return Phi.T @ g


def loss_pre_grad_phi(Phi, y, beta, w) -> np.ndarray:
    """d loss_pre / d Phi, shape (n, code_dim)."""
    W = w.w if isinstance(w, SampleWeights) else np.asarray(w, dtype=float)
    m = _margin(Phi, beta, y)
    g = W * (1.0 - 2.0 * y) * ae.sigmoid(m)
    return np.outer(g, beta)


def loss_pre_grad_w(Phi, y, beta) -> np.ndarray:
    """d loss_pre / dW: the per-sample logistic losses themselves."""
    return np.logaddexp(0.0, _margin(Phi, beta, y))


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def update_beta(Phi, y, w, lam4, lam5, beta0=None,
                max_iters: int = BETA_MAX_ITERS, rel_tol: float = BETA_REL_TOL):
    """Proximal-gradient (ISTA) solve of the weighted elastic-net logistic
    subproblem; the returned objective never exceeds the entry objective."""
    Phi = np.asarray(Phi, dtype=float)
    q = Phi.shape[1]
    beta = np.zeros(q) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    W = w.w if isinstance(w, SampleWeights) else np.asarray(w, dtype=float)

    def smooth(b):
        return loss_pre(Phi, y, b, W) + lam4 * float(b @ b)

    def smooth_grad(b):
        return loss_pre_grad_beta(Phi, y, b, W) + 2.0 * lam4 * b

    def full(b):
        return smooth(b) + lam5 * float(np.sum(np.abs(b)))

    # Lipschitz bound for the logistic part: 0.25 * ||sqrt(W) Phi||_2^2
    L = 0.25 * float(np.linalg.norm(np.sqrt(W)[:, None] * Phi, 2)) ** 2 + 2.0 * lam4
    step = 1.0 / max(L, 1e-12)
    obj = full(beta)
    for _ in range(max_iters):
        g = smooth_grad(beta)
        t = step
        f_beta = smooth(beta)
        for _ in range(MAX_BACKTRACKS):
            cand = _soft_threshold(beta - t * g, t * lam5)
            diff = cand - beta
            if smooth(cand) <= f_beta + g @ diff + (diff @ diff) / (2.0 * t) + 1e-15:
                break
            t *= 0.5
        new_obj = full(cand)
        if new_obj > obj:
            break
        beta = cand
        if obj - new_obj <= rel_tol * max(abs(obj), 1.0):
            obj = new_obj
            break
        obj = new_obj
    return beta


class _FitState:
    """Mutable optimizer state shared by the three update steps."""

    def __init__(self, X, y, hyper, use_encoder, rng):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.hyper = hyper
        self.n, self.p = self.X.shape
        self.omega = np.ones(self.n)
        self.use_encoder = use_encoder
        if use_encoder:
            sizes = hyper.layer_sizes or ae.default_layer_sizes(self.p)
            if sizes[0] != self.p:
                raise ValueError("layer_sizes[0] must equal the input dimension p")
            self.params = ae.init_params(sizes, rng)
            self.code_dim = self.params.code_dim
        else:
            self.params = None
            self.code_dim = self.p
        self.beta = np.zeros(self.code_dim)
        self._phi_cache = None

    @property
    def w(self) -> SampleWeights:
        return SampleWeights(self.omega)

    @property
    def W(self) -> np.ndarray:
        return self.omega**2

    def embed_fn(self):
        if not self.use_encoder:
            return None
        params = self.params
        return lambda M: ae.encode_rows(params, M)

    def phi(self) -> np.ndarray:
        if not self.use_encoder:
            return self.X
        if self._phi_cache is None:
            self._phi_cache = ae.encode_rows(self.params, self.X)
        return self._phi_cache

    def invalidate_phi(self):
        self._phi_cache = None

    # ---- objective decomposition ----

    def components(self) -> dict:
        h = self.hyper
        W = self.W
        l_pre = loss_pre(self.phi(), self.y, self.beta, W)
        l_bal = balancing_loss(self.X, W, self.embed_fn())
        l_ae = ae.recon_loss(self.params, self.X, W) if self.use_encoder else 0.0
        l_reg = (
            h.lambda3 * float(W @ W)
            + h.lambda4 * float(self.beta @ self.beta)
            + h.lambda5 * float(np.sum(np.abs(self.beta)))
            + h.lambda6 * float(W.sum() - 1.0) ** 2
        )
        if self.use_encoder:
            l_reg += h.lambda7 * self.params.weight_frobenius_sq()
        l_mix = l_pre + h.lambda1 * l_bal + h.lambda2 * l_ae + l_reg
        return {"l_mix": l_mix, "l_pre": l_pre, "l_bal": l_bal, "l_ae": l_ae, "l_reg": l_reg}

    def l_mix(self) -> float:
        return self.components()["l_mix"]

    # ---- gradients ----

    def grad_omega(self) -> np.ndarray:
        h = self.hyper
        W = self.W
        grad_w = loss_pre_grad_w(self.phi(), self.y, self.beta)
        grad_w = grad_w + h.lambda1 * balancing_loss_grad_w(self.X, W, self.embed_fn())
        if self.use_encoder:
            grad_w = grad_w + h.lambda2 * ae.recon_loss_grad_w(self.params, self.X, W)
        grad_w = grad_w + 2.0 * h.lambda3 * W
        grad_w = grad_w + 2.0 * h.lambda6 * (W.sum() - 1.0)
        return grad_w * 2.0 * self.omega

    def grad_theta(self) -> ae.ParamGrads:
        h = self.hyper
        W = self.W
        upstream = loss_pre_grad_phi(self.phi(), self.y, self.beta, W)
        grads = ae.encoder_param_grads(self.params, self.X, upstream)
        if h.lambda1 != 0.0:
            grads.add_scaled(self._balancing_theta_grads(), h.lambda1)
        if h.lambda2 != 0.0:
            grads.add_scaled(ae.recon_param_grads(self.params, self.X, W), h.lambda2)
        if h.lambda7 != 0.0:
            for g, A in zip(grads.encoder_weights, self.params.encoder_weights):
                g += 2.0 * h.lambda7 * A
            for g, A in zip(grads.decoder_weights, self.params.decoder_weights):
                g += 2.0 * h.lambda7 * A
        return grads

    def _balancing_theta_grads(self) -> ae.ParamGrads:
        # Each treatment column j contributes through the encoder applied to
        # X with column j zeroed; backpropagate 2 (u - v) d^T per column.
        total = ae.ParamGrads.zeros_like(self.params)
        for j, M, u, v, d, _, _ in balancing_arm_terms(
            self.X, self.W, self.embed_fn(), warn=False
        ):
            upstream = 2.0 * np.outer(u - v, d)
            Xz = self.X.copy()
            Xz[:, j] = 0.0
            total.add_scaled(ae.encoder_param_grads(self.params, Xz, upstream))
        return total

    # ---- update steps ----

    def step_w(self) -> tuple[float, bool]:
        """One backtracked, mass-preserving gradient step on omega.

        Candidates are rescaled so the weights keep total mass n.  The
        balancing term is invariant under positive weight rescaling, while the
        prediction and reconstruction terms both shrink with the total mass,
        so an unconstrained step would drift toward all-zero weights; the
        projection removes that degenerate direction.  Returns
        (step used, stalled).
        """
        base = self.l_mix()
        g = self.grad_omega()
        gnorm = float(np.max(np.abs(g)))
        if gnorm == 0.0:
            return 0.0, False
        step = self.hyper.step_w
        old = self.omega
        n = old.shape[0]
        for _ in range(MAX_BACKTRACKS):
            cand = old - step * g
            mass = float(cand @ cand)
            if mass > 0.0:
                self.omega = cand * math.sqrt(n / mass)
                if self.l_mix() < base:
                    return step, False
            step *= 0.5
        self.omega = old
        return 0.0, True

    def step_beta(self):
        self.beta = update_beta(
            self.phi(), self.y, self.W, self.hyper.lambda4, self.hyper.lambda5,
            beta0=self.beta,
        )

    def step_theta(self) -> tuple[float, bool]:
        base = self.l_mix()
        grads = self.grad_theta()
        if grads.max_abs() == 0.0:
            return 0.0, False
        step = self.hyper.step_theta
        old = self.params
        for _ in range(MAX_BACKTRACKS):
            self.params = _apply_step(old, grads, step)
            self.invalidate_phi()
            if self.l_mix() < base:
                return step, False
            step *= 0.5
        self.params = old
        self.invalidate_phi()
        return 0.0, True


def _apply_step(params: ae.AutoEncoderParams, grads: ae.ParamGrads, step: float):
    return ae.AutoEncoderParams(
        tuple(A - step * g for A, g in zip(params.encoder_weights, grads.encoder_weights)),
        tuple(b - step * g for b, g in zip(params.encoder_biases, grads.encoder_biases)),
        tuple(A - step * g for A, g in zip(params.decoder_weights, grads.decoder_weights)),
        tuple(b - step * g for b, g in zip(params.decoder_biases, grads.decoder_biases)),
        params.layer_sizes,
    )


def _check_dataset(d: BinaryDataset):
    classes = np.unique(d.outcome)
    if classes.size < 2:
        raise TrainingDataError("training outcome must contain both classes")


def _fit(d: BinaryDataset, hyper: HyperParams, use_encoder: bool, update_w: bool,
         update_theta: bool):
    _check_dataset(d)
    rng = np.random.default_rng(hyper.seed)
    state = _FitState(d.features, d.outcome, hyper, use_encoder, rng)
    trace = FitTrace()
    prev = state.l_mix()
    for t in range(1, hyper.max_outer_iters + 1):
        frozen = hyper.freeze_w_after is not None and t > hyper.freeze_w_after
        w_step, w_stalled = (0.0, False)
        if update_w and not frozen and hyper.step_w > 0:
            w_step, w_stalled = state.step_w()
        state.step_beta()
        th_step, th_stalled = (0.0, False)
        if update_theta and use_encoder and hyper.step_theta > 0:
            th_step, th_stalled = state.step_theta()
        comps = state.components()
        trace.append(
            iter=t, step_w=w_step, step_theta=th_step,
            w_stalled=w_stalled, theta_stalled=th_stalled, **comps,
        )
        cur = comps["l_mix"]
        if abs(prev - cur) <= hyper.tol * max(abs(prev), 1.0):
            break
        prev = cur
    model = DgbrModel(
        autoenc=state.params if use_encoder else None,
        beta=state.beta,
        weights=state.w,
        hyper=hyper,
    )
    return model, trace


def fit_dgbr(d: BinaryDataset, hyper: HyperParams):
    """Alternating W -> beta -> theta optimization of the full deep objective.

    With ``hyper.freeze_w_after`` set, the weights stop updating after that
    outer iteration (the fixed-weight variant).
    """
    return _fit(d, hyper, use_encoder=True, update_w=True, update_theta=True)


def fit_gbr(d: BinaryDataset, hyper: HyperParams):
    """Identity-embedding special case: joint weights + logistic coefficients."""
    hyper = replace(hyper, lambda2=0.0, lambda7=0.0)
    return _fit(d, hyper, use_encoder=False, update_w=True, update_theta=False)


def fit_lr(d: BinaryDataset, lam4: float = 0.0, lam5: float = 0.0, hyper: HyperParams | None = None):
    """Plain elastic-net logistic regression (uniform, frozen weights)."""
    hyper = hyper or HyperParams(
        lambda1=0.0, lambda2=0.0, lambda3=0.0, lambda4=lam4, lambda5=lam5,
        lambda6=0.0, lambda7=0.0, max_outer_iters=1, step_w=0.0,
    )
    return _fit(d, hyper, use_encoder=False, update_w=False, update_theta=False)


def fit_dlr(d: BinaryDataset, hyper: HyperParams):
    """Deep logistic regression: encoder plus regression, uniform frozen weights."""
    hyper = replace(hyper, lambda1=0.0, lambda3=0.0, lambda6=0.0, step_w=0.0)
    return _fit(d, hyper, use_encoder=True, update_w=False, update_theta=True)


def predict_proba(model: DgbrModel, X) -> np.ndarray:
    """Per-row outcome probabilities sigma(phi(X) beta), strictly inside (0,1)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.input_dim:
        raise ValueError(
            f"expected {model.input_dim} features, got {X.shape[1]}"
        )
    return ae.sigmoid(model.embed(X) @ model.beta)
