"""Per-token embeddings: static word vectors, trainable character
features, and contextual extractions from pre-trained character LMs.

Components share one small interface: ``dim``, ``forward(sentence)``
returning a (tokens × dim) block plus a backward cache, ``backward(cache,
grad)``, and ``layers`` listing trainable tensors (empty for frozen
components).  A StackedEmbedder concatenates component blocks in a fixed
order, so gradients route column-wise back to whichever component owns
them.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from .charlm import CharLm, lm_forward
from .corpus import CharVocabulary, Sentence, Token, sentence_text, token_char_ranges
from .errors import ConfigError, ParseError
from .nn import Embedding, Lstm
from .serialization import load_tensors, save_tensors

logger = logging.getLogger(__name__)

CHAR_EMBED_DIM = 25
CHAR_HIDDEN = 25


class WordEmbeddingTable:
    """Static word → vector map with a zero-vector OOV policy.

    Lookup tries the exact word, then its lowercase form; anything else
    gets the zero vector.  Vectors are never trained here.
    """

    def __init__(self, dim: int, entries: dict[str, np.ndarray]):
        if dim < 1:
            raise ConfigError(f"vector dim must be positive, got {dim}")
        for word, vec in entries.items():
            if vec.shape != (dim,):
                raise ConfigError(
                    f"vector for {word!r} has shape {vec.shape}, expected ({dim},)")
        self.dim = dim
        self.entries = entries
        self._zero = np.zeros(dim)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def lookup(self, word: str) -> np.ndarray:
        vec = self.entries.get(word)
        if vec is None:
            vec = self.entries.get(word.lower())
        return self._zero if vec is None else vec


def load_vectors(path) -> WordEmbeddingTable:
    """Parse a text vector file: optional "count dim" header, then one
    ``word v1 … vdim`` line per entry.  Duplicate words keep the last
    occurrence (warned); dimension mismatches are parse errors.
    """
    entries: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            fields = raw.split()
            if not fields:
                continue
            if lineno == 1 and len(fields) == 2:
                try:
                    int(fields[0]), int(fields[1])
                except ValueError:
                    pass
                else:
                    dim = int(fields[1])
                    continue
            word, values = fields[0], fields[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ParseError("entry has no vector values",
                                     path=str(path), line=lineno)
            if len(values) != dim:
                raise ParseError(
                    f"expected {dim} vector values, found {len(values)}",
                    path=str(path), line=lineno)
            try:
                vec = np.array([float(v) for v in values])
            except ValueError as exc:
                raise ParseError(f"bad vector value: {exc}",
                                 path=str(path), line=lineno) from exc
            if word in entries:
                logger.warning("%s:%d: duplicate vector for %r, keeping the later one",
                               path, lineno, word)
            entries[word] = vec
    if dim is None:
        raise ParseError("vector file contains no entries", path=str(path))
    return WordEmbeddingTable(dim, entries)


class WordTableEmbedder:
    """Frozen component: one table row (or zero vector) per token.

    ``source_path`` records where the table came from so tagger model files
    can reference it instead of embedding megabytes of static vectors.
    """

    def __init__(self, table: WordEmbeddingTable, source_path=None):
        self.table = table
        self.dim = table.dim
        self.layers = ()
        self.source_path = source_path

    def forward(self, sentence: Sentence):
        out = np.stack([self.table.lookup(tok.text) for tok in sentence])
        return out, None

    def backward(self, cache, grad: np.ndarray) -> None:
        pass


class CharFeatureEncoder:
    """Trainable character features: a small bidirectional recurrence over
    each token's characters; output is the two final states concatenated.
    """

    def __init__(self, vocab: CharVocabulary, rng: np.random.Generator,
                 embed_dim: int = CHAR_EMBED_DIM, hidden: int = CHAR_HIDDEN):
        self.vocab = vocab
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.dim = 2 * hidden
        self.embedding = Embedding(len(vocab) + 1, embed_dim, rng)
        self.fwd = Lstm(embed_dim, hidden, rng)
        self.bwd = Lstm(embed_dim, hidden, rng)
        self.layers = (self.embedding, self.fwd, self.bwd)

    @property
    def unk_index(self) -> int:
        return len(self.vocab)

    def encode(self, text: str) -> np.ndarray:
        unk = self.unk_index
        index = self.vocab.index
        return np.fromiter((index.get(c, unk) for c in text),
                           dtype=np.int64, count=len(text))

    def embed_token(self, token: Token):
        idx = self.encode(token.text)
        emb, emb_cache = self.embedding.forward(idx)
        hs_f, (hf, _), f_cache = self.fwd.forward(emb)
        hs_b, (hb, _), b_cache = self.bwd.forward(emb[::-1])
        vec = np.concatenate([hf, hb])
        return vec, (emb_cache, f_cache, b_cache, len(idx))

    def backward_token(self, cache, grad: np.ndarray) -> None:
        emb_cache, f_cache, b_cache, length = cache
        H = self.hidden
        zeros = np.zeros((length, H))
        zero_h = np.zeros(H)
        demb_f, _ = self.fwd.backward(f_cache, zeros, (grad[:H], zero_h))
        demb_b, _ = self.bwd.backward(b_cache, zeros, (grad[H:], zero_h))
        self.embedding.backward(emb_cache, demb_f + demb_b[::-1])

    def forward(self, sentence: Sentence):
        vecs, caches = [], []
        for token in sentence:
            vec, cache = self.embed_token(token)
            vecs.append(vec)
            caches.append(cache)
        return np.stack(vecs), caches

    def backward(self, caches, grad: np.ndarray) -> None:
        for cache, row in zip(caches, grad):
            self.backward_token(cache, row)


def char_feature_embed(encoder: CharFeatureEncoder, token: Token) -> np.ndarray:
    vec, _ = encoder.embed_token(token)
    return vec


class ContextualEmbedder:
    """Frozen component extracting hidden states from two directional LMs.

    The sentence is rendered as its space-joined text.  A token's forward
    part is the forward LM's hidden state at the token's last character;
    its backward part is the backward LM's state (computed over the
    reversed text) at the token's first character.
    """

    def __init__(self, fwd: CharLm, bwd: CharLm,
                 forward_path=None, backward_path=None):
        if fwd.direction != "forward" or bwd.direction != "backward":
            raise ConfigError(
                f"need one forward and one backward model, got "
                f"{fwd.direction!r} and {bwd.direction!r}")
        self.fwd = fwd
        self.bwd = bwd
        self.dim = fwd.config.hidden_size + bwd.config.hidden_size
        self.layers = ()
        self.forward_path = forward_path
        self.backward_path = backward_path

    def forward(self, sentence: Sentence):
        return contextual_embed(self.fwd, self.bwd, sentence), None

    def backward(self, cache, grad: np.ndarray) -> None:
        pass


def contextual_embed(fwd: CharLm, bwd: CharLm, sentence: Sentence) -> np.ndarray:
    """Per-token contextual vectors, (forward part, backward part)."""
    text = sentence_text(sentence)
    ranges = token_char_ranges(sentence)
    L = len(text)
    _, _, hs_f = lm_forward(fwd, fwd.encode(text))
    _, _, hs_b = lm_forward(bwd, bwd.encode(text[::-1]))
    rows = [np.concatenate([hs_f[end], hs_b[L - 1 - start]])
            for start, end in ranges]
    return np.stack(rows)


class StackedEmbedder:
    """Fixed-order concatenation of embedding components."""

    def __init__(self, components: Sequence):
        if not components:
            raise ConfigError("need at least one embedding component")
        self.components = tuple(components)
        self.dim = sum(c.dim for c in self.components)

    @property
    def layers(self):
        out = []
        for c in self.components:
            out.extend(c.layers)
        return tuple(out)

    def forward(self, sentence: Sentence):
        blocks, caches = [], []
        for c in self.components:
            block, cache = c.forward(sentence)
            blocks.append(block)
            caches.append(cache)
        return np.concatenate(blocks, axis=1), caches

    def backward(self, caches, grad: np.ndarray) -> None:
        offset = 0
        for c, cache in zip(self.components, caches):
            c.backward(cache, grad[:, offset:offset + c.dim])
            offset += c.dim


def stack_embed(embedder: StackedEmbedder, sentence: Sentence) -> np.ndarray:
    vectors, _ = embedder.forward(sentence)
    return vectors
