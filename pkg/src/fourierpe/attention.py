"""Single-head attention and a synthetic position-retrieval benchmark.

The benchmark generates instances of K content-carrying items scattered on a
grid plus a query position; the label is the item nearest to the query, so
the task is solvable only through positional information. Encoders are
compared end to end by training positional encoding + attention + a linear
head, evaluating separately on positions seen in training and on a held-out
coordinate band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import Encoder, EncoderSpec, FourierParams, UnseenPositionError, encode_with_cache
from .numerics import SeededRng, as_f64, softmax
from .training import Adam, TrainingDiverged, backward_encode

__all__ = [
    "AttentionParams",
    "init_attention_params",
    "qkv_project",
    "attention",
    "RetrievalTask",
    "RetrievalSplit",
    "RetrievalDataset",
    "generate_retrieval_task",
    "write_split_csv",
    "TrainEvalResult",
    "train_and_eval",
]


@dataclass
class AttentionParams:
    """Projections from the combined content+position embedding to Q/K/V."""

    m_q: np.ndarray
    m_k: np.ndarray
    m_v: np.ndarray


def init_attention_params(embed_dim: int, d_k: int, d_v: int, rng: SeededRng) -> AttentionParams:
    scale = 1.0 / np.sqrt(embed_dim)
    return AttentionParams(
        m_q=rng.normal(0.0, scale, (embed_dim, d_k)),
        m_k=rng.normal(0.0, scale, (embed_dim, d_k)),
        m_v=rng.normal(0.0, scale, (embed_dim, d_v)),
    )


def qkv_project(e, params: AttentionParams):
    """Linear projections Q = E M_Q, K = E M_K, V = E M_V."""
    e = as_f64(e, "embeddings")
    if e.shape[-1] != params.m_q.shape[0]:
        raise ValueError(f"embedding width {e.shape[-1]} != projection rows {params.m_q.shape[0]}")
    return e @ params.m_q, e @ params.m_k, e @ params.m_v


def attention(q, k, v) -> np.ndarray:
    """Scaled dot-product attention: softmax(Q K^T / sqrt(d_k)) V.

    Supports leading batch axes; the key/value item counts must match and
    every output row is a convex combination of value rows.
    """
    q = as_f64(q, "q")
    k = as_f64(k, "k")
    v = as_f64(v, "v")
    if q.shape[-1] != k.shape[-1]:
        raise ValueError(f"query/key depth mismatch: {q.shape[-1]} != {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError(f"key/value counts mismatch: {k.shape[-2]} != {v.shape[-2]}")
    scores = q @ np.swapaxes(k, -1, -2) / np.sqrt(q.shape[-1])
    return softmax(scores, axis=-1) @ v


# ---------------------------------------------------------------------------
# Retrieval task
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RetrievalTask:
    """Geometry and sizes of the synthetic nearest-item retrieval task.

    Grid rows in [holdout_rows[0], holdout_rows[1]) never appear in the
    training split; the unseen evaluation split places the query there.
    ``margin`` forces the nearest item to be closer than the runner-up by at
    least that much, keeping labels unambiguous.
    """

    height: int = 16
    width: int = 16
    holdout_rows: tuple[int, int] = (12, 16)
    n_items: int = 4
    n_train: int = 2048
    n_eval: int = 256
    content_dim: int = 32
    margin: float = 1.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.holdout_rows
        if not (0 < lo < hi <= self.height):
            raise ValueError(f"holdout rows {self.holdout_rows} must be a non-empty band inside the grid")
        if self.n_items < 1 or self.n_train < 1 or self.n_eval < 1:
            raise ValueError("n_items, n_train, and n_eval must be >= 1")
        train_cells = lo * self.width
        if train_cells < self.n_items:
            raise ValueError(
                f"training region has {train_cells} distinct positions < {self.n_items} items"
            )

    @property
    def train_rows(self) -> tuple[int, int]:
        return (0, self.holdout_rows[0])


@dataclass
class RetrievalSplit:
    item_pos: np.ndarray   # [B, K, 2]
    query_pos: np.ndarray  # [B, 2]
    labels: np.ndarray     # [B]


@dataclass
class RetrievalDataset:
    contents: np.ndarray   # [K, C], fixed per-slot content vectors
    train: RetrievalSplit
    eval_seen: RetrievalSplit
    eval_unseen: RetrievalSplit


def _sample_instance(rng: SeededRng, task: RetrievalTask,
                     item_rows: tuple[int, int], query_rows: tuple[int, int]):
    k = task.n_items
    while True:
        rows = rng.integers(item_rows[0], item_rows[1], k)
        cols = rng.integers(0, task.width, k)
        pos = np.stack([rows, cols], axis=1).astype(np.float64)
        if len({(r, c) for r, c in zip(rows, cols)}) < k:
            continue
        q = np.array([
            float(rng.integers(query_rows[0], query_rows[1])),
            float(rng.integers(0, task.width)),
        ])
        dists = np.sqrt(np.sum((pos - q) ** 2, axis=1))
        order = np.sort(dists)
        if k > 1 and order[1] - order[0] < task.margin:
            continue
        return pos, q, int(np.argmin(dists))


def _sample_split(rng: SeededRng, task: RetrievalTask, count: int,
                  item_rows: tuple[int, int], query_rows: tuple[int, int]) -> RetrievalSplit:
    items = np.zeros((count, task.n_items, 2))
    queries = np.zeros((count, 2))
    labels = np.zeros(count, dtype=np.int64)
    for b in range(count):
        items[b], queries[b], labels[b] = _sample_instance(rng, task, item_rows, query_rows)
    return RetrievalSplit(items, queries, labels)


def generate_retrieval_task(task: RetrievalTask, rng: SeededRng) -> RetrievalDataset:
    """Sample the train / seen-eval / unseen-eval splits.

    Items carry one of K fixed random content vectors by slot; the label is
    the slot of the item nearest to the query (ties break to the lowest
    index). Training and seen-eval instances stay inside the training rows;
    unseen-eval instances draw items from the whole grid and the query from
    the held-out band.
    """
    contents = rng.normal(0.0, 1.0, (task.n_items, task.content_dim))
    train_rows = task.train_rows
    full_rows = (0, task.height)
    return RetrievalDataset(
        contents=contents,
        train=_sample_split(rng, task, task.n_train, train_rows, train_rows),
        eval_seen=_sample_split(rng, task, task.n_eval, train_rows, train_rows),
        eval_unseen=_sample_split(rng, task, task.n_eval, full_rows, task.holdout_rows),
    )


def write_split_csv(path, split: RetrievalSplit) -> None:
    """Dump one split's instances for inspection: item positions, query
    position, and the nearest-item label, one instance per row."""
    k = split.item_pos.shape[1]
    header = [f"item{i}_{ax}" for i in range(k) for ax in ("row", "col")]
    header += ["query_row", "query_col", "label"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for b in range(split.labels.size):
            cells = [f"{v:g}" for v in split.item_pos[b].ravel()]
            cells += [f"{split.query_pos[b, 0]:g}", f"{split.query_pos[b, 1]:g}"]
            cells.append(str(int(split.labels[b])))
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# End-to-end training
# ---------------------------------------------------------------------------


@dataclass
class TrainEvalResult:
    seen_accuracy: float
    unseen_accuracy: float
    loss_trace: np.ndarray


class _ToyModel:
    """PE encoder + single-head attention + linear head over the query token."""

    def __init__(self, spec: EncoderSpec, contents: np.ndarray, d_k: int, d_v: int, rng: SeededRng):
        if spec.position_width() != 2:
            raise ValueError("the retrieval task uses 2-D grid positions")
        if spec.output_dim != contents.shape[1]:
            raise ValueError(
                f"encoder width {spec.output_dim} must equal content width {contents.shape[1]}"
            )
        self.spec = spec
        self.contents = contents
        self.encoder = Encoder(spec, rng=rng) if spec.has_params else Encoder(spec)
        self.attn = init_attention_params(spec.output_dim, d_k, d_v, rng)
        self.d_k = d_k
        n_items = contents.shape[0]
        self.head_w = rng.normal(0.0, 1.0 / np.sqrt(d_v), (d_v, n_items))
        self.head_b = np.zeros(n_items)
        self.trainable = {
            "attn.m_q": self.attn.m_q,
            "attn.m_k": self.attn.m_k,
            "attn.m_v": self.attn.m_v,
            "head.w": self.head_w,
            "head.b": self.head_b,
        }
        self._enc_kind = None
        if spec.variant in ("learnable_fourier", "fixed_fourier", "mlp_only"):
            self._enc_kind = "fourier"
            cfg = spec.fourier_config()
            for name in self.encoder.params.trainable_names(cfg):
                self.trainable[f"enc.{name}"] = getattr(self.encoder.params, name)
        elif spec.variant == "embed_nd":
            self._enc_kind = "embed"
            for i, table in enumerate(self.encoder.params):
                self.trainable[f"enc.table{i}"] = table

    def _pe(self, positions_flat: np.ndarray, for_training: bool):
        """Positional encodings plus whatever the backward pass needs."""
        if self._enc_kind == "fourier":
            cfg = self.spec.fourier_config()
            x = positions_flat.reshape(-1, cfg.n_groups, cfg.coords_per_group)
            pe, cache = encode_with_cache(x, self.encoder.params, cfg, mode="eval")
            return pe, (x, cache)
        return self.encoder.encode(positions_flat), None

    def _pe_backward(self, aux, upstream: np.ndarray, grads: dict, positions_flat: np.ndarray):
        if self._enc_kind == "fourier":
            cfg = self.spec.fourier_config()
            x, cache = aux
            enc_grads = backward_encode(x, self.encoder.params, cfg, upstream, cache)
            for name, g in enc_grads.items():
                key = f"enc.{name}"
                if key in grads:
                    grads[key] += g
                else:
                    grads[key] = g
        elif self._enc_kind == "embed":
            idx = positions_flat.astype(np.int64)
            offset = 0
            for i, table in enumerate(self.encoder.params):
                width = table.shape[1]
                key = f"enc.table{i}"
                if key not in grads:
                    grads[key] = np.zeros_like(table)
                col = np.clip(idx[:, i], 0, table.shape[0] - 1)
                np.add.at(grads[key], col, upstream[:, offset:offset + width])
                offset += width

    def forward(self, split: RetrievalSplit, batch_idx: np.ndarray, want_grads: bool):
        items = split.item_pos[batch_idx]       # [B, K, 2]
        queries = split.query_pos[batch_idx]    # [B, 2]
        labels = split.labels[batch_idx]
        b, k, _ = items.shape
        d = self.spec.output_dim

        pos_flat = np.concatenate([items.reshape(b * k, 2), queries], axis=0)
        pe_all, aux = self._pe(pos_flat, want_grads)
        pe_items = pe_all[: b * k].reshape(b, k, d)
        pe_query = pe_all[b * k:]

        e_items = self.contents[None, :, :] + pe_items   # content joins PE by addition
        e_query = pe_query[:, None, :]
        q = e_query @ self.attn.m_q
        kk = e_items @ self.attn.m_k
        v = e_items @ self.attn.m_v
        scores = (q @ np.swapaxes(kk, -1, -2)) / np.sqrt(self.d_k)  # [B, 1, K]
        alpha = softmax(scores, axis=-1)
        o = (alpha @ v)[:, 0, :]                                    # [B, d_v]
        logits = o @ self.head_w + self.head_b                      # [B, K]

        probs = softmax(logits, axis=-1)
        nll = -np.log(np.maximum(probs[np.arange(b), labels], 1e-300))
        loss = float(np.mean(nll))
        acc = float(np.mean(np.argmax(logits, axis=1) == labels))
        if not want_grads:
            return loss, acc, None

        dlogits = probs.copy()
        dlogits[np.arange(b), labels] -= 1.0
        dlogits /= b
        grads: dict[str, np.ndarray] = {
            "head.w": o.T @ dlogits,
            "head.b": dlogits.sum(axis=0),
        }
        do = dlogits @ self.head_w.T
        dalpha = do[:, None, :] @ np.swapaxes(v, -1, -2)            # [B, 1, K]
        dv = np.swapaxes(alpha, -1, -2) @ do[:, None, :]            # [B, K, d_v]
        dscores = alpha * (dalpha - np.sum(dalpha * alpha, axis=-1, keepdims=True))
        dscores /= np.sqrt(self.d_k)
        dq = dscores @ kk                                           # [B, 1, d_k]
        dkk = np.swapaxes(dscores, -1, -2) @ q                      # [B, K, d_k]
        grads["attn.m_q"] = np.einsum("bie,bik->ek", e_query, dq)
        grads["attn.m_k"] = np.einsum("bie,bik->ek", e_items, dkk)
        grads["attn.m_v"] = np.einsum("bie,bik->ek", e_items, dv)
        de_items = dkk @ self.attn.m_k.T + dv @ self.attn.m_v.T
        de_query = (dq @ self.attn.m_q.T)[:, 0, :]
        d_pe = np.concatenate([de_items.reshape(b * k, d), de_query], axis=0)
        self._pe_backward(aux, d_pe, grads, pos_flat)
        return loss, acc, grads

    def evaluate(self, split: RetrievalSplit) -> float:
        _, acc, _ = self.forward(split, np.arange(split.labels.size), want_grads=False)
        return acc


def train_and_eval(spec: EncoderSpec, task: RetrievalTask, steps: int, rng: SeededRng,
                   lr: float = 5e-3, batch_size: int = 64,
                   d_k: int = 16, d_v: int = 16) -> TrainEvalResult:
    """Train the toy model with Adam and report seen/unseen accuracies.

    Fully deterministic given the rng: the same seed yields the same
    dataset, initialization, batch order, and accuracies.
    """
    data = generate_retrieval_task(task, rng)
    model = _ToyModel(spec, data.contents, d_k, d_v, rng)
    adam = Adam(lr=lr)
    trace = np.zeros(steps)
    n_train = data.train.labels.size
    for step in range(steps):
        batch = rng.integers(0, n_train, min(batch_size, n_train))
        loss, _, grads = model.forward(data.train, batch, want_grads=True)
        if not np.isfinite(loss):
            raise TrainingDiverged(step, f"loss={loss}")
        adam.step(model.trainable, grads)
        trace[step] = loss
    return TrainEvalResult(
        seen_accuracy=model.evaluate(data.eval_seen),
        unseen_accuracy=model.evaluate(data.eval_unseen),
        loss_trace=trace,
    )
