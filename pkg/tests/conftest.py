import pytest

from histtag.corpus import Sentence, TaggedCorpus, TagScheme, Token


def make_sentence(pairs):
    """Build a Sentence from (text, gold_tag) pairs."""
    return Sentence(tuple(Token(t, gold_tag=g) for t, g in pairs))


def make_corpus(sentence_pairs, scheme=TagScheme.IOBES, split="train"):
    return TaggedCorpus(
        tuple(make_sentence(p) for p in sentence_pairs), scheme=scheme, split=split)


@pytest.fixture
def tiny_iobes_corpus():
    return make_corpus([
        [("Anna", "S-PER"), ("besucht", "O"), ("Wien", "S-LOC"), (".", "O")],
        [("Der", "O"), ("Verein", "B-ORG"), ("Concordia", "E-ORG"),
         ("tagt", "O"), (".", "O")],
    ])


@pytest.fixture
def write_text(tmp_path):
    def _write(name, content, encoding="utf-8", binary=False):
        p = tmp_path / name
        if binary:
            p.write_bytes(content)
        else:
            p.write_text(content, encoding=encoding, newline="")
        return p
    return _write
