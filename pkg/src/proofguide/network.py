"""Attention policy over proof-search actions, with exact reverse-mode
gradients implemented by hand.

Pipeline: sparse clause features -> shared MLP embedder -> conjecture mean
pooling -> processed-clause combination with skip connections ->
multiplicative attention against action embeddings -> column max pooling
-> softmax over actions.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp


@dataclass
class NetworkConfig:
    input_dim: int
    embed_width: int = 161
    embed_layers: int = 2
    dropout: float = 0.57
    num_rules: int = 2

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "embed_width": self.embed_width,
            "embed_layers": self.embed_layers,
            "dropout": self.dropout,
            "num_rules": self.num_rules,
        }


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class PolicyParameters:
    """All trainable arrays, keyed by name (float64 throughout)."""

    def __init__(self, config: NetworkConfig, arrays: dict[str, np.ndarray]) -> None:
        self.config = config
        self.arrays = arrays

    @classmethod
    def initialize(cls, config: NetworkConfig, seed: int) -> "PolicyParameters":
        rng = np.random.default_rng(seed)
        e = config.embed_width
        arrays: dict[str, np.ndarray] = {}
        width_in = config.input_dim
        for i in range(config.embed_layers):
            arrays[f"embed_W{i}"] = _glorot(rng, width_in, e)
            arrays[f"embed_b{i}"] = np.zeros(e)
            width_in = e
        arrays["comb_W1"] = _glorot(rng, 2 * e, e)
        arrays["comb_b1"] = np.zeros(e)
        arrays["comb_W2"] = _glorot(rng, e, e)
        arrays["comb_b2"] = np.zeros(e)
        arrays["attn_W"] = _glorot(rng, e + config.num_rules, e)
        return cls(config, arrays)

    def zero_gradients(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(a) for name, a in self.arrays.items()}

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(self.config, {k: v.copy() for k, v in self.arrays.items()})

    # -- checkpoint io: deterministic bytes so identical runs match exactly --

    def save(self, path) -> None:
        payload = {
            "version": 1,
            "config": self.config.to_dict(),
            "arrays": {
                name: {
                    "shape": list(a.shape),
                    "data": base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode(),
                }
                for name, a in sorted(self.arrays.items())
            },
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "PolicyParameters":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("version") != 1:
            raise ValueError(f"unsupported checkpoint version: {payload.get('version')}")
        config = NetworkConfig(**payload["config"])
        arrays = {}
        for name, rec in payload["arrays"].items():
            buf = base64.b64decode(rec["data"])
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(rec["shape"]).copy()
        return cls(config, arrays)


@dataclass
class StateFeatures:
    """Sparse snapshot of one proof state, ready for the network.

    Row matrices over the vectorizer dimension: conjecture clauses (K),
    processed clauses (N, possibly 0) and action clauses (M), plus the
    per-action inference-rule one-hots (M x num_rules).
    """

    conjecture: sp.csr_matrix
    processed: sp.csr_matrix
    actions: sp.csr_matrix
    rule_onehots: np.ndarray

    @property
    def num_actions(self) -> int:
        return self.actions.shape[0]


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores)
    exps = np.exp(shifted)
    return exps / exps.sum()


def pool_conjecture(embeddings: np.ndarray) -> np.ndarray:
    """Element-wise mean of the conjecture clause embeddings (rows)."""
    if embeddings.shape[0] == 0:
        raise ValueError("no conjecture embeddings to pool")
    return embeddings.mean(axis=0)


class Forward:
    """One forward pass with cached intermediates for the backward pass."""

    def __init__(
        self,
        feats: StateFeatures,
        params: PolicyParameters,
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        cfg = params.config
        if feats.num_actions < 1:
            raise ValueError("at least one action required")
        if train and cfg.dropout > 0 and rng is None:
            raise ValueError("train mode with dropout needs an rng")
        self.feats = feats
        self.params = params
        self.train = train

        K = feats.conjecture.shape[0]
        N = feats.processed.shape[0]
        M = feats.actions.shape[0]
        self.K, self.N, self.M = K, N, M
        stacked = sp.vstack([feats.conjecture, feats.processed, feats.actions], format="csr")

        # embedder: k fully-connected ReLU layers, inverted dropout in train mode
        self.layer_inputs: list[np.ndarray] = []
        self.pre_acts: list[np.ndarray] = []
        self.masks: list[Optional[np.ndarray]] = []
        x: np.ndarray | sp.csr_matrix = stacked
        for i in range(cfg.embed_layers):
            W = params.arrays[f"embed_W{i}"]
            b = params.arrays[f"embed_b{i}"]
            z = np.asarray(x @ W + b)
            a = np.maximum(z, 0.0)
            if train and cfg.dropout > 0:
                mask = (rng.random(a.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
                a = a * mask
            else:
                mask = None
            self.layer_inputs.append(x)
            self.pre_acts.append(z)
            self.masks.append(mask)
            x = a
        self.embedded = np.asarray(x)

        Hc = self.embedded[:K]
        Hp = self.embedded[K : K + N]
        Ha = self.embedded[K + N :]
        self.Hp = Hp
        self.h_c = pool_conjecture(Hc)

        if N > 0:
            self.U = np.hstack([Hp, np.tile(self.h_c, (N, 1))])
            z1 = self.U @ params.arrays["comb_W1"] + params.arrays["comb_b1"]
            self.Zf = np.maximum(z1, 0.0)
            Fout = self.Zf @ params.arrays["comb_W2"] + params.arrays["comb_b2"]
            self.C = Hp + self.h_c + Fout
        else:
            # cold start: the pooled conjecture stands in as the only column
            self.U = None
            self.Zf = None
            self.C = self.h_c[None, :]

        self.A_rows = np.hstack([Ha, feats.rule_onehots])
        self.G = self.A_rows @ params.arrays["attn_W"]   # M x e
        self.H = self.G @ self.C.T                       # M x (N or 1)
        self.col_argmax = np.argmax(self.H, axis=1)
        self.scores = self.H[np.arange(M), self.col_argmax]
        self.probs = softmax(self.scores)
        if not np.all(np.isfinite(self.probs)):
            raise FloatingPointError("non-finite action probabilities")

    def backward(self, dscores: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given its gradient w.r.t. the pooled
        pre-softmax scores."""
        params = self.params
        cfg = params.config
        K, N, M = self.K, self.N, self.M
        e = cfg.embed_width
        grads = params.zero_gradients()

        dH = np.zeros_like(self.H)
        dH[np.arange(M), self.col_argmax] = dscores
        dG = dH @ self.C
        dC = dH.T @ self.G
        grads["attn_W"] += self.A_rows.T @ dG
        dA_rows = dG @ params.arrays["attn_W"].T
        dHa = dA_rows[:, :e]

        dHp = np.zeros((N, e))
        if N > 0:
            dChat = dC
            dHp += dChat
            dh_c = dChat.sum(axis=0)
            dFout = dChat
            grads["comb_W2"] += self.Zf.T @ dFout
            grads["comb_b2"] += dFout.sum(axis=0)
            dZf = dFout @ params.arrays["comb_W2"].T
            dZpre = dZf * (self.Zf > 0)
            grads["comb_W1"] += self.U.T @ dZpre
            grads["comb_b1"] += dZpre.sum(axis=0)
            dU = dZpre @ params.arrays["comb_W1"].T
            dHp += dU[:, :e]
            dh_c = dh_c + dU[:, e:].sum(axis=0)
        else:
            dh_c = dC[0]

        dHc = np.tile(dh_c / K, (K, 1))
        dX = np.vstack([dHc, dHp, dHa])

        for i in reversed(range(cfg.embed_layers)):
            mask = self.masks[i]
            if mask is not None:
                dX = dX * mask
            dZ = dX * (self.pre_acts[i] > 0)
            x_in = self.layer_inputs[i]
            if sp.issparse(x_in):
                grads[f"embed_W{i}"] += np.asarray(x_in.T @ dZ)
            else:
                grads[f"embed_W{i}"] += x_in.T @ dZ
            grads[f"embed_b{i}"] += dZ.sum(axis=0)
            if i > 0:
                dX = dZ @ params.arrays[f"embed_W{i}"].T
        return grads


def embed(
    rows: sp.csr_matrix,
    params: PolicyParameters,
    train: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Embed sparse feature rows through the MLP (standalone helper)."""
    cfg = params.config
    x: np.ndarray | sp.csr_matrix = rows
    for i in range(cfg.embed_layers):
        z = np.asarray(x @ params.arrays[f"embed_W{i}"] + params.arrays[f"embed_b{i}"])
        a = np.maximum(z, 0.0)
        if train and cfg.dropout > 0:
            mask = (rng.random(a.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
            a = a * mask
        x = a
    return np.asarray(x)


def combine(h_p: np.ndarray, h_c: np.ndarray, params: PolicyParameters) -> np.ndarray:
    """Skip-connected merge of a processed-clause embedding with the pooled
    conjecture: h_p + h_c + F([h_p, h_c])."""
    u = np.concatenate([h_p, h_c])
    z = np.maximum(u @ params.arrays["comb_W1"] + params.arrays["comb_b1"], 0.0)
    f = z @ params.arrays["comb_W2"] + params.arrays["comb_b2"]
    return h_p + h_c + f


def attention(A_rows: np.ndarray, C_rows: np.ndarray, W_a: np.ndarray) -> np.ndarray:
    """Interaction scores H[i, j] = a_i^T W_a c_j (rows are items)."""
    return (A_rows @ W_a) @ C_rows.T


def action_distribution(H: np.ndarray) -> np.ndarray:
    """Max-pool over processed-clause columns, then softmax over actions."""
    scores = H.max(axis=1)
    if not np.all(np.isfinite(scores)):
        raise FloatingPointError("non-finite attention scores")
    return softmax(scores)


def forward(
    feats: StateFeatures,
    params: PolicyParameters,
    train: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> tuple[np.ndarray, Forward]:
    fw = Forward(feats, params, train=train, rng=rng)
    return fw.probs, fw
