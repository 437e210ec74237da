"""Synthetic character-noise corruption for clean text corpora.

Turns a clean contemporary corpus into a noisy one that mimics OCR damage:
each character is independently kept, masked with a symbol outside the
target vocabulary, or replaced by a uniform sample from the target
vocabulary.  The corrupted corpus is used to pre-train character language
models that should transfer to genuinely noisy material.

Randomness comes from numpy's ``default_rng`` (PCG64), which guarantees a
stable cross-platform stream for a given seed, so the same input, config
and seed always produce byte-identical output.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import CharVocabulary, PlainCorpus
from .errors import ConfigError, EmptyCorpusError

# First candidate is the pilcrow; the rest are fallbacks for vocabularies
# that already contain it.  All are printable so corrupted text stays
# inspectable.
DEFAULT_MASK_CANDIDATES = ("¶", "§", "¤", "¦", "¿", "ð")


def select_mask_char(vocab: CharVocabulary,
                     candidates: Sequence[str] = DEFAULT_MASK_CANDIDATES) -> str:
    """Pick the first candidate symbol that is absent from ``vocab``.

    The mask must not collide with any real vocabulary character, otherwise
    the model could not distinguish "unknown here" from actual text.
    """
    if not candidates:
        raise ConfigError("mask candidate list is empty")
    for ch in candidates:
        if len(ch) != 1:
            raise ConfigError(f"mask candidate {ch!r} is not a single character")
        if ch not in vocab:
            return ch
    raise ConfigError(
        "every mask candidate occurs in the vocabulary; "
        "pass explicit candidates outside it")


@dataclass(frozen=True)
class SmlmConfig:
    """Parameters of the corruption process.

    ``p_keep`` is the probability of leaving a character unchanged.  The
    remaining probability mass splits into masking (``p_mask_given_change``)
    and uniform replacement (``p_replace_given_change``).
    """

    mask_char: str
    seed: int
    p_keep: float = 0.90
    p_mask_given_change: float = 0.20
    p_replace_given_change: float = 0.80

    def __post_init__(self):
        if not 0.0 <= self.p_keep <= 1.0:
            raise ConfigError(f"p_keep must lie in [0, 1], got {self.p_keep}")
        if self.p_mask_given_change < 0 or self.p_replace_given_change < 0:
            raise ConfigError("change-split probabilities must be non-negative")
        total = self.p_mask_given_change + self.p_replace_given_change
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(
                f"p_mask_given_change + p_replace_given_change must equal 1, got {total}")
        if len(self.mask_char) != 1:
            raise ConfigError(f"mask_char must be a single character, got {self.mask_char!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True)
class CorruptionStats:
    """Per-action counts over every transformed character position."""

    total_chars: int
    kept: int
    masked: int
    replaced: int

    def __post_init__(self):
        if self.kept + self.masked + self.replaced != self.total_chars:
            raise ValueError(
                "action counts do not sum to total_chars: "
                f"{self.kept} + {self.masked} + {self.replaced} != {self.total_chars}")


@dataclass(frozen=True)
class CorruptionReport:
    """Stats plus empirical action rates, ready for a text report."""

    total_chars: int
    kept: int
    masked: int
    replaced: int
    kept_rate: float
    masked_rate: float
    replaced_rate: float

    def to_text(self) -> str:
        lines = [
            "corruption report",
            f"total_chars {self.total_chars}",
            f"kept {self.kept} rate {self.kept_rate:.6f}",
            f"masked {self.masked} rate {self.masked_rate:.6f}",
            f"replaced {self.replaced} rate {self.replaced_rate:.6f}",
        ]
        return "\n".join(lines) + "\n"


def corruption_stats(stats: CorruptionStats) -> CorruptionReport:
    """Derive empirical rates from raw counts."""
    if stats.total_chars == 0:
        raise EmptyCorpusError("cannot compute rates over zero characters")
    n = stats.total_chars
    return CorruptionReport(
        total_chars=n,
        kept=stats.kept,
        masked=stats.masked,
        replaced=stats.replaced,
        kept_rate=stats.kept / n,
        masked_rate=stats.masked / n,
        replaced_rate=stats.replaced / n,
    )


def smlm_transform(corpus: PlainCorpus, vocab: CharVocabulary,
                   config: SmlmConfig) -> tuple[PlainCorpus, CorruptionStats]:
    """Corrupt ``corpus`` character by character.

    Each position independently keeps its character with ``p_keep``,
    becomes ``mask_char`` with ``(1 - p_keep) * p_mask_given_change``, and
    otherwise is replaced by a uniform draw from ``vocab``.  Replacement may
    coincidentally re-emit the original character; the stats count the
    action taken, not the textual difference.  Line separators never enter
    the transform, so line structure survives untouched.
    """
    if len(vocab) == 0:
        raise ConfigError("target vocabulary is empty")
    if config.mask_char in vocab:
        raise ConfigError(
            f"mask_char {config.mask_char!r} occurs in the target vocabulary")

    rng = np.random.default_rng(config.seed)
    vocab_codes = np.asarray(vocab.codepoints(), dtype=np.uint32)
    mask_code = np.uint32(ord(config.mask_char))
    # One uniform draw decides the action: [0, t_keep) keeps, [t_keep,
    # t_mask) masks, [t_mask, 1) replaces.  The bands have exactly the
    # configured marginal probabilities.
    t_keep = config.p_keep
    t_mask = config.p_keep + (1.0 - config.p_keep) * config.p_mask_given_change

    out_lines = []
    total = kept = masked = replaced = 0
    for line in corpus:
        n = len(line)
        if n == 0:
            out_lines.append(line)
            continue
        # utf-32-le gives a 1:1 uint32 view of the code points
        codes = np.frombuffer(line.encode("utf-32-le"), dtype="<u4").copy()
        u = rng.random(n)
        mask_here = u >= t_keep
        replace_here = u >= t_mask
        mask_here &= ~replace_here
        n_replace = int(replace_here.sum())
        if n_replace:
            picks = rng.integers(0, len(vocab_codes), size=n_replace)
            codes[replace_here] = vocab_codes[picks]
        codes[mask_here] = mask_code
        out_lines.append(codes.astype("<u4").tobytes().decode("utf-32-le"))
        total += n
        masked += int(mask_here.sum())
        replaced += n_replace
    kept = total - masked - replaced
    stats = CorruptionStats(total_chars=total, kept=kept,
                            masked=masked, replaced=replaced)
    return PlainCorpus.from_lines(out_lines), stats
