"""Character-level language models, forward and backward.

Trains a pair of small LMs on generated text and uses perplexity to show
what they learned: text resembling the training distribution scores far
better than scrambled text.
"""

import numpy as np

from histtag import CharLmConfig, corpus_perplexity, sentence_perplexity, train_lm
from histtag.toydata import build_plain_corpus

corpus = build_plain_corpus(seed=0, lines=400)
print(f"training corpus: {sum(len(l) for l in corpus)} characters")

config = dict(char_embed_dim=16, hidden_size=32, sequence_length=60,
              dropout=0.0, epochs=3, learning_rate=5.0)
forward, flog = train_lm(corpus, CharLmConfig(direction="forward", **config),
                         seed=1)
backward, blog = train_lm(corpus, CharLmConfig(direction="backward", **config),
                          seed=1)

print("\nforward LM test perplexity by epoch:")
print(f"  before training: {flog.initial_test_perplexity:8.2f}")
for record in flog.epochs:
    print(f"  epoch {record.epoch}:          {record.test_perplexity:8.2f}")

in_domain = "Anna besucht Wien ."
scrambled = "nxq zkj wpv yhg bf"
print(f"\nsentence perplexities (forward model):")
print(f"  {in_domain!r}: {sentence_perplexity(forward, in_domain):8.2f}")
print(f"  {scrambled!r}: {sentence_perplexity(forward, scrambled):8.2f}")

# the backward model reads right to left; it scores the same text through
# its own recurrence, and averaging over a corpus smooths sentence noise
held_out = build_plain_corpus(seed=99, lines=40)
print(f"\nheld-out corpus perplexity: forward "
      f"{corpus_perplexity(forward, held_out):.2f}, backward "
      f"{corpus_perplexity(backward, held_out):.2f}")
