"""Directional character-level LSTM language models.

A model reads a character stream and predicts the next character at every
position; backward models are forward models trained on the reversed
stream.  Training uses truncated backpropagation through time: the stream
is cut into fixed-length windows and the recurrent state is carried across
window boundaries within an epoch.

Perplexity here is the natural exponent of the mean natural-log negative
log-likelihood.  Scoring always starts from a zero state, and characters
outside the model vocabulary map to a reserved UNK index.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .corpus import CharVocabulary, PlainCorpus, TaggedCorpus, extract_char_vocab, sentence_text
from .errors import ConfigError, EmptyCorpusError, ModelFormatError
from .nn import Dropout, Embedding, Linear, Lstm, clip_grad_norm, cross_entropy, sgd_step
from .serialization import load_tensors, save_tensors

logger = logging.getLogger(__name__)

DIRECTIONS = ("forward", "backward")
GRAD_CLIP = 5.0
HOLDOUT_FRACTION = 500  # dev and test each take 1/500 of the stream
EVAL_CHUNK = 4096


@dataclass(frozen=True)
class CharLmConfig:
    direction: str
    char_embed_dim: int = 64
    hidden_size: int = 128
    num_layers: int = 1
    dropout: float = 0.1
    sequence_length: int = 250
    mini_batch: int = 1
    epochs: int = 1
    learning_rate: float = 20.0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        for name in ("char_embed_dim", "hidden_size", "sequence_length",
                     "mini_batch", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.num_layers != 1:
            raise ConfigError("only single-layer recurrence is supported")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        # zero is allowed: it freezes parameters, useful for measuring baselines
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must not be negative, got {self.learning_rate}")


@dataclass
class LmState:
    """Recurrent carry: hidden and cell vectors."""

    hidden: np.ndarray
    cell: np.ndarray


class CharLm:
    """Character LM: embedding → LSTM → vocabulary projection.

    The output layer covers every vocabulary character plus one reserved
    UNK index at position ``len(vocab)``.
    """

    def __init__(self, vocab: CharVocabulary, config: CharLmConfig,
                 embedding: Embedding, lstm: Lstm, projection: Linear):
        self.vocab = vocab
        self.config = config
        self.embedding = embedding
        self.lstm = lstm
        self.projection = projection

    @classmethod
    def initialize(cls, vocab: CharVocabulary, config: CharLmConfig,
                   rng: np.random.Generator) -> "CharLm":
        n_out = len(vocab) + 1
        embedding = Embedding(n_out, config.char_embed_dim, rng)
        lstm = Lstm(config.char_embed_dim, config.hidden_size, rng)
        projection = Linear(config.hidden_size, n_out, rng)
        return cls(vocab, config, embedding, lstm, projection)

    @property
    def direction(self) -> str:
        return self.config.direction

    @property
    def unk_index(self) -> int:
        return len(self.vocab)

    @property
    def output_size(self) -> int:
        return len(self.vocab) + 1

    @property
    def layers(self):
        return (self.embedding, self.lstm, self.projection)

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def encode(self, text: str) -> np.ndarray:
        unk = self.unk_index
        index = self.vocab.index
        return np.fromiter((index.get(c, unk) for c in text),
                           dtype=np.int64, count=len(text))

    def named_tensors(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("embedding.weight", self.embedding.params["weight"]),
            ("lstm.Wx", self.lstm.params["Wx"]),
            ("lstm.Wh", self.lstm.params["Wh"]),
            ("lstm.bias", self.lstm.params["bias"]),
            ("projection.weight", self.projection.params["weight"]),
            ("projection.bias", self.projection.params["bias"]),
        ]


def lm_forward(model: CharLm, chars: np.ndarray,
               state: Optional[LmState] = None):
    """Score a chunk of already-encoded characters in eval mode.

    Returns (logits T × output_size, final LmState, hidden states T × H).
    ``logits[t]`` is the prediction for the character after position t.
    """
    chars = np.asarray(chars, dtype=np.int64)
    if chars.ndim != 1 or chars.shape[0] < 1:
        raise ValueError("chars must be a non-empty 1-d index sequence")
    if chars.min() < 0 or chars.max() >= model.output_size:
        raise ValueError(
            f"character index out of range [0, {model.output_size})")
    emb, _ = model.embedding.forward(chars)
    lstm_state = None if state is None else (state.hidden, state.cell)
    hs, (h, c), _ = model.lstm.forward(emb, lstm_state)
    logits, _ = model.projection.forward(hs)
    return logits, LmState(h, c), hs


@dataclass
class LmEpochRecord:
    epoch: int
    train_loss: float
    dev_loss: float
    test_perplexity: float
    learning_rate: float


@dataclass
class LmTrainLog:
    initial_test_perplexity: float
    epochs: list[LmEpochRecord] = field(default_factory=list)


def _render_stream(corpus: PlainCorpus) -> str:
    return " ".join(corpus)


def _stream_nll(model: CharLm, indices: np.ndarray) -> float:
    """Mean next-character NLL over a stream, chunked to bound memory."""
    total, count = 0.0, 0
    state = None
    for start in range(0, len(indices) - 1, EVAL_CHUNK):
        end = min(start + EVAL_CHUNK, len(indices) - 1)
        logits, state, _ = lm_forward(model, indices[start:end], state)
        nll, _ = cross_entropy(logits, indices[start + 1:end + 1])
        total += float(nll.sum())
        count += nll.shape[0]
    return total / count


def _train_window(model: CharLm, x: np.ndarray, y: np.ndarray, state,
                  dropout: Dropout, rng: np.random.Generator, scale: float):
    """One TBPTT window: forward, loss, backward. Returns (nll sum, state)."""
    emb, emb_cache = model.embedding.forward(x)
    hs, new_state, lstm_cache = model.lstm.forward(emb, state)
    dropped, drop_cache = dropout.forward(hs, rng, train=True)
    logits, lin_cache = model.projection.forward(dropped)
    nll, dlogits = cross_entropy(logits, y)
    dlogits *= scale
    dh = model.projection.backward(lin_cache, dlogits)
    dh = dropout.backward(drop_cache, dh)
    dx, _ = model.lstm.backward(lstm_cache, dh)
    model.embedding.backward(emb_cache, dx)
    return float(nll.sum()), new_state


def train_lm(corpus: PlainCorpus, config: CharLmConfig, seed: int,
             vocab: Optional[CharVocabulary] = None) -> tuple[CharLm, LmTrainLog]:
    """Train a directional character LM on a plain-text corpus.

    The corpus lines are joined into one space-separated stream (reversed
    first for backward models).  The final 2/500 of the stream are held out,
    the earlier slice as the dev set and the trailing slice as the test set.
    Optimization is plain SGD over truncated-backprop windows with the
    gradient norm clipped at 5.0; when mini_batch exceeds 1, the stream is
    split into that many contiguous strands walked in parallel with averaged
    gradients.  The learning rate halves after any epoch whose dev loss
    fails to improve.
    """
    stream = _render_stream(corpus)
    if config.direction == "backward":
        stream = stream[::-1]
    n = len(stream)
    holdout = max(2, n // HOLDOUT_FRACTION)
    strand_len = (n - 2 * holdout) // config.mini_batch
    if strand_len < config.sequence_length + 1:
        raise EmptyCorpusError(
            f"training stream provides {max(0, strand_len)} characters per "
            f"strand after holdouts; one window needs {config.sequence_length + 1}")
    train_text = stream[:n - 2 * holdout]
    dev_text = stream[n - 2 * holdout:n - holdout]
    test_text = stream[n - holdout:]
    if vocab is None:
        vocab = extract_char_vocab(PlainCorpus.from_lines([train_text]))

    rng = np.random.default_rng(seed)
    model = CharLm.initialize(vocab, config, rng)
    encoded = model.encode(train_text)
    strands = [encoded[b * strand_len:(b + 1) * strand_len]
               for b in range(config.mini_batch)]
    dev_idx = model.encode(dev_text)
    test_idx = model.encode(test_text)

    log = LmTrainLog(initial_test_perplexity=float(np.exp(_stream_nll(model, test_idx))))
    dropout = Dropout(config.dropout)
    lr = config.learning_rate
    best_dev = np.inf
    L = config.sequence_length
    for epoch in range(1, config.epochs + 1):
        states = [None] * config.mini_batch
        pos = 0
        loss_sum, position_count = 0.0, 0
        while pos + 1 < strand_len:
            end = min(pos + L, strand_len - 1)
            window = end - pos
            model.zero_grads()
            scale = 1.0 / (window * config.mini_batch)
            for b, strand in enumerate(strands):
                nll_sum, states[b] = _train_window(
                    model, strand[pos:end], strand[pos + 1:end + 1],
                    states[b], dropout, rng, scale)
                loss_sum += nll_sum
                position_count += window
            clip_grad_norm(model.layers, GRAD_CLIP)
            sgd_step(model.layers, lr)
            pos = end
        dev_loss = _stream_nll(model, dev_idx)
        test_ppl = float(np.exp(_stream_nll(model, test_idx)))
        log.epochs.append(LmEpochRecord(
            epoch=epoch, train_loss=loss_sum / position_count,
            dev_loss=dev_loss, test_perplexity=test_ppl, learning_rate=lr))
        if dev_loss < best_dev:
            best_dev = dev_loss
        else:
            lr *= 0.5
        logger.info("lm epoch %d: train %.4f dev %.4f test ppl %.4f lr %g",
                    epoch, loss_sum / position_count, dev_loss, test_ppl, lr)
    return model, log


def sentence_perplexity(model: CharLm, text: str) -> float:
    """Perplexity of one sentence string, from a zero initial state.

    Backward models score the reversed text.  Characters outside the model
    vocabulary map to UNK.
    """
    if len(text) < 2:
        raise ValueError(
            f"need at least 2 characters to score, got {len(text)}")
    if model.direction == "backward":
        text = text[::-1]
    return float(np.exp(_stream_nll(model, model.encode(text))))


def corpus_perplexity(model: CharLm,
                      corpus: Union[TaggedCorpus, PlainCorpus]) -> float:
    """Arithmetic mean of sentence perplexities over a corpus.

    Sentences too short to score (fewer than 2 characters) are skipped;
    the skip count goes to the module logger.
    """
    if isinstance(corpus, TaggedCorpus):
        texts = (sentence_text(s) for s in corpus)
    else:
        texts = iter(corpus)
    values = []
    skipped = 0
    for text in texts:
        if len(text) < 2:
            skipped += 1
            continue
        values.append(sentence_perplexity(model, text))
    if skipped:
        logger.info("corpus perplexity: skipped %d sentence(s) shorter than 2 chars",
                    skipped)
    if not values:
        raise EmptyCorpusError("no sentence long enough to score")
    return float(np.mean(values))


def save_lm(model: CharLm, path) -> None:
    meta = {
        "kind": "charlm",
        "direction": model.direction,
        "char_embed_dim": model.config.char_embed_dim,
        "hidden_size": model.config.hidden_size,
        "dropout": model.config.dropout,
        "vocab": model.vocab.codepoints(),
    }
    save_tensors(path, meta, model.named_tensors())


def load_lm(path) -> CharLm:
    meta, tensors = load_tensors(path)
    if meta.get("kind") != "charlm":
        raise ModelFormatError(f"{path}: not a character LM file")
    try:
        vocab = CharVocabulary.from_codepoints(meta["vocab"])
        config = CharLmConfig(
            direction=meta["direction"],
            char_embed_dim=int(meta["char_embed_dim"]),
            hidden_size=int(meta["hidden_size"]),
            dropout=float(meta["dropout"]),
        )
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise ModelFormatError(f"{path}: invalid model metadata: {exc}") from exc

    n_out = len(vocab) + 1
    expected = {
        "embedding.weight": (n_out, config.char_embed_dim),
        "lstm.Wx": (config.char_embed_dim, 4 * config.hidden_size),
        "lstm.Wh": (config.hidden_size, 4 * config.hidden_size),
        "lstm.bias": (4 * config.hidden_size,),
        "projection.weight": (config.hidden_size, n_out),
        "projection.bias": (n_out,),
    }
    for name, shape in expected.items():
        if name not in tensors:
            raise ModelFormatError(f"{path}: missing tensor {name!r}")
        if tensors[name].shape != shape:
            raise ModelFormatError(
                f"{path}: tensor {name!r} has shape {tensors[name].shape}, "
                f"expected {shape}")

    rng = np.random.default_rng(0)
    model = CharLm.initialize(vocab, config, rng)
    for name, value in model.named_tensors():
        value[...] = tensors[name]
    return model
