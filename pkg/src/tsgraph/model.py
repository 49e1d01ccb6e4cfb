"""Multi-head graph-attention + LSTM classifier over similarity graphs.

The forward pass is recorded on the autodiff tape; the plain-numpy
``attention_scores`` / ``attention_normalize`` functions below are the
tape-free reference used for inspection and as the independent check of
the layer arithmetic.

Checkpoint layout (little-endian): magic b"ATM1", u32 version, u32 JSON
length, config JSON (architecture + parameter manifest), then every
parameter buffer as binary64 in manifest order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, FormatError, ShapeError
from .graph import SimilarityGraph

CHECKPOINT_MAGIC = b"ATM1"
CHECKPOINT_VERSION = 1
_NEG_FILL = -1e30  # masked logits; exp underflows to exactly 0


@dataclass
class ModelConfig:
    feature_dim: int
    classes: int
    heads: int = 4
    hidden_per_head: int = 16
    out_dim: int = 64  # pooled graph-vector width D
    leaky_slope: float = 0.2
    seq_len: int = 4
    lstm_hidden: int = 32
    lstm_input: str = "reshape"  # "reshape" | "node_sequence"
    final_heads_average: bool = True
    dropout: float = 0.0

    def validate(self):
        if self.feature_dim < 1 or self.classes < 2:
            raise ConfigError(f"bad dimensions: feature_dim={self.feature_dim}, classes={self.classes}")
        if self.heads < 1 or self.hidden_per_head < 1 or self.out_dim < 1 or self.lstm_hidden < 1:
            raise ConfigError("all layer widths must be >= 1")
        if self.lstm_input not in ("reshape", "node_sequence"):
            raise ConfigError(f"unknown lstm_input {self.lstm_input!r}")
        if self.lstm_input == "reshape":
            if self.seq_len < 1 or self.out_dim % self.seq_len != 0:
                raise ConfigError(
                    f"seq_len {self.seq_len} must divide the pooled width {self.out_dim}"
                )
        if not self.final_heads_average and self.out_dim % self.heads != 0:
            raise ConfigError("with concatenating output heads, heads must divide out_dim")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def lstm_in_dim(self) -> int:
        return self.out_dim // self.seq_len if self.lstm_input == "reshape" else self.out_dim


@dataclass
class GatLayerParams:
    W: list[Tensor]  # per head, (F_in, F_out)
    a: list[Tensor]  # per head, (2*F_out, 1)
    leaky_slope: float
    average_heads: bool

    @property
    def heads(self) -> int:
        return len(self.W)


@dataclass
class LstmParams:
    w_i: Tensor
    w_f: Tensor
    w_c: Tensor
    w_o: Tensor
    b_i: Tensor
    b_f: Tensor
    b_c: Tensor
    b_o: Tensor


@dataclass
class HeadParams:
    W: Tensor
    b: Tensor


def _glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


# -- plain-numpy reference pieces -----------------------------------------


def attention_scores(h: np.ndarray, adj: np.ndarray, params: GatLayerParams, head: int) -> np.ndarray:
    """Raw scores e_ij = LeakyReLU(a^T [W h_i || W h_j]) on the neighborhoods;
    entries outside the adjacency are NaN."""
    W = params.W[head].data
    a = params.a[head].data.reshape(-1)
    if h.shape[1] != W.shape[0]:
        raise ShapeError(f"features {h.shape} do not match W {W.shape}")
    wh = h @ W
    f_out = W.shape[1]
    src = wh @ a[:f_out]
    dst = wh @ a[f_out:]
    e = src[:, None] + dst[None, :]
    e = np.where(e >= 0, e, params.leaky_slope * e)
    return np.where(adj, e, np.nan)


def attention_normalize(e: np.ndarray, adj: np.ndarray) -> np.ndarray:
    """Per-row softmax over the neighborhood (max-subtracted); zeros elsewhere."""
    if not adj.any(axis=1).all():
        raise ShapeError("every node needs at least one neighbor (add self-loops)")
    masked = np.where(adj, e, -np.inf)
    m = masked.max(axis=1, keepdims=True)
    z = np.where(adj, np.exp(masked - m), 0.0)
    return z / z.sum(axis=1, keepdims=True)


# -- autodiff layers -------------------------------------------------------


def gat_layer_forward(h: Tensor, mask: np.ndarray, params: GatLayerParams, collect=None):
    """One multi-head attention layer; heads are concatenated or averaged."""
    head_outputs = []
    for k in range(params.heads):
        wh = h @ params.W[k]
        f_out = params.W[k].data.shape[1]
        src = wh @ params.a[k][: f_out]
        dst = wh @ params.a[k][f_out:]
        e = ad.leaky_relu(src + dst.T, slope=params.leaky_slope)
        e_masked = e * mask + (1.0 - mask) * _NEG_FILL
        row_max = e_masked.data.max(axis=1, keepdims=True)  # constant shift
        z = ad.exp(e_masked - row_max) * mask
        alpha = z / z.sum(axis=1, keepdims=True)
        if collect is not None:
            collect.append(alpha.data.copy())
        head_outputs.append(ad.elu(alpha @ wh))
    if params.average_heads:
        acc = head_outputs[0]
        for t in head_outputs[1:]:
            acc = acc + t
        return acc * (1.0 / params.heads)
    return ad.concat(head_outputs, axis=1)


def global_mean_pool(h: Tensor) -> Tensor:
    if h.data.shape[0] < 1:
        raise ValueError("cannot pool an empty node set")
    return h.mean(axis=0, keepdims=True)


def reshape_to_sequence(pooled: Tensor, seq_len: int) -> Tensor:
    d = pooled.data.shape[1]
    if d % seq_len != 0:
        raise ConfigError(f"sequence length {seq_len} does not divide width {d}")
    return pooled.reshape(seq_len, d // seq_len)


def lstm_forward(seq: Tensor, params: LstmParams) -> Tensor:
    """Gated recurrence over the rows of ``seq``; returns the final hidden state."""
    steps = seq.data.shape[0]
    hidden = params.b_i.data.shape[1]
    h = Tensor(np.zeros((1, hidden)))
    c = Tensor(np.zeros((1, hidden)))
    for t in range(steps):
        x_t = seq[t : t + 1]
        zcat = ad.concat([h, x_t], axis=1)
        i_t = ad.sigmoid(zcat @ params.w_i + params.b_i)
        f_t = ad.sigmoid(zcat @ params.w_f + params.b_f)
        c_hat = ad.tanh(zcat @ params.w_c + params.b_c)
        o_t = ad.sigmoid(zcat @ params.w_o + params.b_o)
        c = f_t * c + i_t * c_hat
        h = o_t * ad.tanh(c)
    return h


def classify_forward(hidden: Tensor, head: HeadParams) -> Tensor:
    return ad.log_softmax_rows(hidden @ head.W + head.b)


def nll_loss(logp: Tensor, labels) -> Tensor:
    labels = np.asarray(labels, dtype=np.int64)
    b, c = logp.data.shape
    if labels.shape != (b,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {b}")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"label outside [0, {c - 1}]")
    picked = logp[np.arange(b), labels]
    return -picked.sum() * (1.0 / b)


class Model:
    """Two attention layers, mean pooling, LSTM, log-probability head."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        config.validate()
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        layer2_per_head = c.out_dim if c.final_heads_average else c.out_dim // c.heads
        self.gat_layers = [
            self._init_gat(rng, c.feature_dim, c.hidden_per_head, c.heads, c.leaky_slope, False),
            self._init_gat(
                rng,
                c.hidden_per_head * c.heads,
                layer2_per_head,
                c.heads,
                c.leaky_slope,
                c.final_heads_average,
            ),
        ]
        d_in, hid = c.lstm_in_dim, c.lstm_hidden
        self.lstm = LstmParams(
            w_i=_glorot(rng, d_in + hid, hid, (d_in + hid, hid)),
            w_f=_glorot(rng, d_in + hid, hid, (d_in + hid, hid)),
            w_c=_glorot(rng, d_in + hid, hid, (d_in + hid, hid)),
            w_o=_glorot(rng, d_in + hid, hid, (d_in + hid, hid)),
            b_i=Tensor(np.zeros((1, hid)), requires_grad=True),
            b_f=Tensor(np.zeros((1, hid)), requires_grad=True),
            b_c=Tensor(np.zeros((1, hid)), requires_grad=True),
            b_o=Tensor(np.zeros((1, hid)), requires_grad=True),
        )
        self.head = HeadParams(
            W=_glorot(rng, hid, c.classes, (hid, c.classes)),
            b=Tensor(np.zeros((1, c.classes)), requires_grad=True),
        )
        self._dropout_rng = np.random.default_rng(seed + 1)

    @staticmethod
    def _init_gat(rng, f_in, f_out, heads, slope, average):
        return GatLayerParams(
            W=[_glorot(rng, f_in, f_out, (f_in, f_out)) for _ in range(heads)],
            a=[_glorot(rng, 2 * f_out, 1, (2 * f_out, 1)) for _ in range(heads)],
            leaky_slope=slope,
            average_heads=average,
        )

    def named_parameters(self):
        out = []
        for li, layer in enumerate(self.gat_layers):
            for k in range(layer.heads):
                out.append((f"gat{li}.W{k}", layer.W[k]))
                out.append((f"gat{li}.a{k}", layer.a[k]))
        for gate in ("w_i", "w_f", "w_c", "w_o", "b_i", "b_f", "b_c", "b_o"):
            out.append((f"lstm.{gate}", getattr(self.lstm, gate)))
        out.append(("head.W", self.head.W))
        out.append(("head.b", self.head.b))
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def forward(self, graph: SimilarityGraph, collect_attention=None, training=False) -> Tensor:
        """Log-probabilities (1 x classes) for one graph."""
        if graph.feature_dim != self.config.feature_dim:
            raise ShapeError(
                f"graph feature dim {graph.feature_dim} != model {self.config.feature_dim}"
            )
        h = Tensor(graph.node_features.astype(np.float64))
        mask = graph.adjacency(self_loops=True).astype(np.float64)
        for layer in self.gat_layers:
            bucket = None
            if collect_attention is not None:
                bucket = []
                collect_attention.append(bucket)
            h = gat_layer_forward(h, mask, layer, collect=bucket)
            if training and self.config.dropout > 0.0:
                keep = 1.0 - self.config.dropout
                drop = self._dropout_rng.random(h.data.shape) < keep
                h = h * (drop.astype(np.float64) / keep)
        if self.config.lstm_input == "reshape":
            pooled = global_mean_pool(h)
            seq = reshape_to_sequence(pooled, self.config.seq_len)
        else:
            seq = h  # node embeddings in segment-time order
        hidden = lstm_forward(seq, self.lstm)
        logp = classify_forward(hidden, self.head)
        if not np.isfinite(logp.data).all():
            raise FloatingPointError("non-finite log-probabilities; diverged forward pass")
        return logp

    def predict(self, graph: SimilarityGraph):
        with ad.no_grad():
            logp = self.forward(graph)
        return int(np.argmax(logp.data[0])), logp.data[0].copy()


# -- checkpointing ---------------------------------------------------------


def save_checkpoint(model: Model, path, extra: dict | None = None):
    manifest = [{"name": n, "shape": list(p.data.shape)} for n, p in model.named_parameters()]
    doc = {"config": asdict(model.config), "params": manifest}
    if extra:
        doc["extra"] = extra
    blob = json.dumps(doc, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for _, p in model.named_parameters():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(path, expected_config: ModelConfig | None = None) -> tuple[Model, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r}")
        version, blob_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        doc = json.loads(fh.read(blob_len).decode("utf-8"))
        config = ModelConfig(**doc["config"])
        if expected_config is not None and asdict(expected_config) != asdict(config):
            raise ConfigError("checkpoint configuration does not match the requested one")
        model = Model(config, seed=0)
        named = dict(model.named_parameters())
        if [m["name"] for m in doc["params"]] != [n for n, _ in model.named_parameters()]:
            raise FormatError("checkpoint parameter manifest does not match the architecture")
        for m in doc["params"]:
            p = named[m["name"]]
            if list(p.data.shape) != m["shape"]:
                raise FormatError(f"parameter {m['name']} has shape {m['shape']}, expected {list(p.data.shape)}")
            raw = fh.read(p.data.size * 8)
            if len(raw) != p.data.size * 8:
                raise FormatError("checkpoint truncated in parameter payload")
            p.data = np.frombuffer(raw, dtype="<f8").reshape(p.data.shape).copy()
    return model, doc.get("extra", {})


# -- gradient verification -------------------------------------------------


def finite_difference_check(model: Model, graph: SimilarityGraph, label: int, eps: float = 1e-4):
    """Central-difference check of every parameter against the tape.

    Returns (max relative error, per-parameter dict). Relative error uses a
    1e-6 floor so exactly-zero gradients compare cleanly.
    """

    def loss_value() -> float:
        logp = model.forward(graph)
        return float(nll_loss(logp, [label]).data)

    for p in model.parameters():
        p.zero_grad()
    loss = nll_loss(model.forward(graph), [label])
    loss.backward()
    analytic = {n: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for n, p in model.named_parameters()}

    worst = 0.0
    report = {}
    with ad.no_grad():
        for name, p in model.named_parameters():
            flat = p.data.reshape(-1)
            fd = np.empty_like(flat)
            for idx in range(flat.size):
                saved = flat[idx]
                flat[idx] = saved + eps
                up = loss_value()
                flat[idx] = saved - eps
                down = loss_value()
                flat[idx] = saved
                fd[idx] = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)
            denom = np.maximum(1e-6, np.maximum(np.abs(a), np.abs(fd)))
            err = float(np.max(np.abs(a - fd) / denom))
            report[name] = err
            worst = max(worst, err)
    return worst, report
