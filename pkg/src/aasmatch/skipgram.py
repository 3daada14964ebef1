"""Skip-gram with negative sampling, trained by plain SGD.

For a (center, context) pair with sampled negatives the minimized loss is::

    L = -log sigmoid(u_ctx . v_c) - sum_k log sigmoid(-u_k . v_c)

where ``v`` are input vectors and ``u`` output vectors. Updates run
single-threaded over sentences shuffled by a seeded generator, so a fixed
seed gives bit-identical tables.
The inner loop is compiled with numba; :func:`pair_grads` is the same kernel
the trainer calls, which keeps :func:`gradient_check` honest.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from .errors import (
    CorruptFileError,
    EmptyCorpusError,
    EmptyVocabError,
    NonFiniteLossError,
    VersionMismatchError,
)
from .walks import WalkCorpus, decode_token, encode_token

logger = logging.getLogger(__name__)

FILE_MAGIC = "aasmatch-emb"
FILE_VERSION = "v1"
NOISE_POWER = 0.75


@dataclass(frozen=True)
class Hyperparams:
    dim: int = 64
    window: int = 5
    epochs: int = 5
    negatives: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    min_count: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "window", "negatives"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.min_count < 0:
            raise ValueError("min_count must be non-negative")
        if not (0 < self.min_learning_rate < self.learning_rate):
            raise ValueError("need 0 < min_learning_rate < learning_rate")


@dataclass
class Vocab:
    tokens: list[str]
    counts: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok):
        return tok in self.index


def build_vocab(corpus: WalkCorpus, min_count: int = 1) -> Vocab:
    """Count tokens and build the unigram^0.75 noise distribution.

    Tokens are ordered by descending count, ties by token string.
    """
    counts = corpus.token_counts()
    if not counts:
        raise EmptyCorpusError("corpus has no tokens")
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    freq = np.array([counts[t] for t in kept], dtype=np.int64)
    if len(kept):
        weights = freq.astype(np.float64) ** NOISE_POWER
        noise = weights / weights.sum()
    else:
        noise = np.zeros(0)
    return Vocab(kept, freq, noise)


# --------------------------------------------------------------- numeric core


@numba.njit(cache=True)
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@numba.njit(cache=True)
def pair_loss(v, u_ctx, u_neg):
    """Negative-sampling loss of one (center, context) pair."""
    loss = -_log_sigmoid(_dot(u_ctx, v))
    for k in range(u_neg.shape[0]):
        loss -= _log_sigmoid(-_dot(u_neg[k], v))
    return loss


@numba.njit(cache=True)
def pair_grads(v, u_ctx, u_neg, dv, du_ctx, du_neg):
    """Gradients of :func:`pair_loss`, written into ``dv``, ``du_ctx``, ``du_neg``.

    Returns the loss at the given point.
    """
    n = v.shape[0]
    s = _dot(u_ctx, v)
    loss = -_log_sigmoid(s)
    g = _sigmoid(s) - 1.0
    for i in range(n):
        dv[i] = g * u_ctx[i]
        du_ctx[i] = g * v[i]
    for k in range(u_neg.shape[0]):
        s = _dot(u_neg[k], v)
        loss -= _log_sigmoid(-s)
        g = _sigmoid(s)
        for i in range(n):
            dv[i] += g * u_neg[k, i]
            du_neg[k, i] = g * v[i]
    return loss


@numba.njit(cache=True)
def _next_u64(state):
    # splitmix64
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _uniform(state):
    return float(_next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _sample(cdf, state):
    idx = np.searchsorted(cdf, _uniform(state), side="right")
    if idx >= cdf.shape[0]:
        idx = cdf.shape[0] - 1
    return idx


@numba.njit(cache=True)
def _train_epochs(
    w_in, w_out, ids, starts, ends, cdf, window, negatives, lr0, lr_min, epochs, rng_state, epoch_loss
):
    n = w_in.shape[1]
    total = epochs * ids.shape[0]
    processed = 0
    u_neg = np.empty((negatives, n))
    du_neg = np.empty((negatives, n))
    neg_idx = np.empty(negatives, dtype=np.int64)
    dv = np.empty(n)
    du_ctx = np.empty(n)
    v = np.empty(n)
    u_ctx = np.empty(n)
    order = np.arange(starts.shape[0])
    for epoch in range(epochs):
        loss_sum = 0.0
        pairs = 0
        # walks arrive grouped by start entity; visit them in a seeded random order
        for s in range(order.shape[0] - 1, 0, -1):
            r = int(_next_u64(rng_state) % np.uint64(s + 1))
            tmp = order[s]
            order[s] = order[r]
            order[r] = tmp
        for s_pos in range(order.shape[0]):
            s = order[s_pos]
            lo = starts[s]
            hi = ends[s]
            for i in range(lo, hi):
                lr = lr0 - (lr0 - lr_min) * processed / total
                processed += 1
                c = ids[i]
                a = max(lo, i - window)
                b = min(hi, i + window + 1)
                for j in range(a, b):
                    if j == i:
                        continue
                    t = ids[j]
                    for k in range(negatives):
                        neg = _sample(cdf, rng_state)
                        tries = 0
                        while neg == t and tries < 10:
                            neg = _sample(cdf, rng_state)
                            tries += 1
                        neg_idx[k] = neg
                        u_neg[k, :] = w_out[neg]
                    v[:] = w_in[c]
                    u_ctx[:] = w_out[t]
                    loss = pair_grads(v, u_ctx, u_neg, dv, du_ctx, du_neg)
                    if not math.isfinite(loss):
                        epoch_loss[epoch] = loss
                        return False
                    loss_sum += loss
                    pairs += 1
                    for d in range(n):
                        w_in[c, d] -= lr * dv[d]
                        w_out[t, d] -= lr * du_ctx[d]
                    for k in range(negatives):
                        r = neg_idx[k]
                        for d in range(n):
                            w_out[r, d] -= lr * du_neg[k, d]
        epoch_loss[epoch] = loss_sum / pairs if pairs > 0 else 0.0
    return True


# ------------------------------------------------------------------- training


@dataclass
class EmbeddingTable:
    """Token vectors of a fixed dimension.

    Vectors are stored as float32 so a save/load round trip at nine
    significant digits is exact.
    """

    tokens: list[str]
    vectors: np.ndarray
    output_vectors: Optional[np.ndarray] = None
    counts: Optional[dict[str, int]] = None
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError("vectors must be a (tokens x dim) matrix")
        if self.output_vectors is not None:
            self.output_vectors = np.asarray(self.output_vectors, dtype=np.float32)
        self.index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok) -> bool:
        return tok in self.index

    def get(self, tok: str) -> Optional[np.ndarray]:
        i = self.index.get(tok)
        return None if i is None else self.vectors[i]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        # token -> vector mapping equality; row order is irrelevant
        if set(self.tokens) != set(other.tokens) or self.vectors.shape != other.vectors.shape:
            return False
        rows = [other.index[t] for t in self.tokens]
        return np.array_equal(self.vectors, other.vectors[rows])

    def save(self, path, output_path=None) -> None:
        Path(path).write_bytes(_dump(self.tokens, self.vectors))
        if output_path is not None:
            if self.output_vectors is None:
                raise ValueError("table has no output vectors")
            Path(output_path).write_bytes(_dump(self.tokens, self.output_vectors))

    def to_bytes(self) -> bytes:
        return _dump(self.tokens, self.vectors)


def _dump(tokens: Sequence[str], vectors: np.ndarray) -> bytes:
    order = sorted(range(len(tokens)), key=lambda i: tokens[i])
    lines = [f"{FILE_MAGIC} {FILE_VERSION} {vectors.shape[1]} {len(tokens)}"]
    for i in order:
        nums = " ".join("%.9g" % float(x) for x in vectors[i])
        lines.append(f"{encode_token(tokens[i])}\t{nums}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_embeddings(table: EmbeddingTable, path) -> None:
    table.save(path)


def load_embeddings(path) -> EmbeddingTable:
    """Read an embedding file written by :meth:`EmbeddingTable.save`.

    Raises:
        VersionMismatchError: the header is not ``aasmatch-emb v1``.
        CorruptFileError: anything else malformed.
    """
    try:
        text = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        raise CorruptFileError(f"{path}: not UTF-8") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptFileError(f"{path}: empty file")
    header = lines[0].split(" ")
    if len(header) != 4 or header[0] != FILE_MAGIC:
        raise CorruptFileError(f"{path}: bad header {lines[0]!r}")
    if header[1] != FILE_VERSION:
        raise VersionMismatchError(f"{path}: version {header[1]!r}, expected {FILE_VERSION!r}")
    try:
        dim, count = int(header[2]), int(header[3])
    except ValueError:
        raise CorruptFileError(f"{path}: bad header {lines[0]!r}") from None
    if len(lines) - 1 != count:
        raise CorruptFileError(f"{path}: header says {count} tokens, found {len(lines) - 1}")
    tokens = []
    vectors = np.empty((count, dim), dtype=np.float32)
    for i, line in enumerate(lines[1:]):
        tok, sep, rest = line.partition("\t")
        if not sep:
            raise CorruptFileError(f"{path}:{i + 2}: missing tab")
        try:
            values = [float(x) for x in rest.split(" ")]
        except ValueError:
            raise CorruptFileError(f"{path}:{i + 2}: bad number") from None
        if len(values) != dim or not all(math.isfinite(x) for x in values):
            raise CorruptFileError(f"{path}:{i + 2}: expected {dim} finite values")
        tokens.append(decode_token(tok))
        vectors[i] = values
    return EmbeddingTable(tokens, vectors)


def _init_vectors(vocab_size: int, dim: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    w_in = (rng.random((vocab_size, dim)) - 0.5) / dim
    w_out = np.zeros((vocab_size, dim))
    return w_in, w_out


def _encode_corpus(corpus: WalkCorpus, vocab: Vocab):
    ids, starts, ends = [], [], []
    index = vocab.index
    for sent in corpus:
        s = [index[t] for t in sent if t in index]
        if len(s) < 2:
            continue
        starts.append(len(ids))
        ids.extend(s)
        ends.append(len(ids))
    return (
        np.asarray(ids, dtype=np.int64),
        np.asarray(starts, dtype=np.int64),
        np.asarray(ends, dtype=np.int64),
    )


def train(corpus: WalkCorpus, vocab: Vocab, hp: Hyperparams = Hyperparams(), keep_output: bool = False) -> EmbeddingTable:
    """Fit input/output vectors for every vocabulary token.

    Raises:
        EmptyVocabError: ``vocab`` has no tokens (e.g. ``min_count`` too high).
        NonFiniteLossError: the loss overflowed; lower the learning rate.
    """
    if len(vocab) == 0:
        raise EmptyVocabError("vocabulary is empty; lower min_count")
    w_in, w_out = _init_vectors(len(vocab), hp.dim, hp.seed)
    losses = np.zeros(hp.epochs)
    if hp.epochs > 0:
        ids, starts, ends = _encode_corpus(corpus, vocab)
        if len(ids):
            cdf = np.cumsum(vocab.noise)
            cdf[-1] = 1.0
            state = np.array([hp.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
            ok = _train_epochs(
                w_in, w_out, ids, starts, ends, cdf, hp.window, hp.negatives,
                hp.learning_rate, hp.min_learning_rate, hp.epochs, state, losses,
            )
            if not ok or not (np.isfinite(w_in).all() and np.isfinite(w_out).all()):
                raise NonFiniteLossError(
                    f"loss became non-finite at learning_rate={hp.learning_rate}"
                )
    for e, loss in enumerate(losses):
        logger.debug("epoch %d mean loss %.6f", e + 1, loss)
    table = EmbeddingTable(
        list(vocab.tokens),
        w_in,
        output_vectors=w_out if keep_output else None,
        counts={t: int(c) for t, c in zip(vocab.tokens, vocab.counts)},
        epoch_losses=[float(x) for x in losses],
    )
    if not np.isfinite(table.vectors).all():
        raise NonFiniteLossError("vectors overflowed float32")
    return table


# ---------------------------------------------------------- gradient checking


@dataclass
class GradientCheckReport:
    max_relative_error: float
    trials: int
    errors: list[float] = field(default_factory=list)


GradFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray], float]


def numerical_grads(v, u_ctx, u_neg, h: float = 1e-5):
    """Central-difference gradients of :func:`pair_loss` for every parameter."""
    grads = []
    for arr in (v, u_ctx, u_neg):
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = pair_loss(v, u_ctx, u_neg)
            flat[i] = orig - h
            minus = pair_loss(v, u_ctx, u_neg)
            flat[i] = orig
            gflat[i] = (plus - minus) / (2 * h)
        grads.append(g)
    return tuple(grads)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
    return float(diff / scale)


def gradient_check(
    hp: Hyperparams = Hyperparams(dim=8),
    trials: int = 100,
    seed: int = 0,
    h: float = 1e-5,
    grad_fn: Optional[GradFn] = None,
    scale: float = 0.5,
) -> GradientCheckReport:
    """Compare analytic pair gradients with central differences.

    ``grad_fn`` defaults to :func:`pair_grads`; pass a mutated version to
    confirm the harness notices broken gradients.
    """
    fn = pair_grads if grad_fn is None else grad_fn
    rng = np.random.default_rng(seed)
    n, k = hp.dim, hp.negatives
    errors = []
    for _ in range(trials):
        v = rng.normal(0.0, scale, n)
        u_ctx = rng.normal(0.0, scale, n)
        u_neg = rng.normal(0.0, scale, (k, n))
        dv, du_ctx, du_neg = np.empty(n), np.empty(n), np.empty((k, n))
        fn(v, u_ctx, u_neg, dv, du_ctx, du_neg)
        analytic = np.concatenate([dv, du_ctx, du_neg.ravel()])
        numeric = np.concatenate([g.ravel() for g in numerical_grads(v, u_ctx, u_neg, h)])
        errors.append(relative_error(analytic, numeric))
    return GradientCheckReport(max(errors) if errors else 0.0, trials, errors)
