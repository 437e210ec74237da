import numpy as np
import pytest

from histtag.charlm import CharLm, CharLmConfig, save_lm
from histtag.corpus import CharVocabulary, TaggedCorpus, TagScheme, extract_char_vocab, extract_spans
from histtag.embed import (
    CharFeatureEncoder,
    ContextualEmbedder,
    StackedEmbedder,
    WordEmbeddingTable,
    WordTableEmbedder,
    load_vectors,
)
from histtag.errors import ConfigError, EmptyCorpusError, ModelFormatError
from histtag.evaluation import evaluate
from histtag.tagger import (
    NerModel,
    TaggerConfig,
    emission_scores,
    load_ner,
    predict,
    save_ner,
    train_ner,
)

from conftest import make_corpus
from oracles import gradient_relative_error, numeric_gradient

TRAIN_SENTENCES = [
    [("Anna", "S-PER"), ("besucht", "O"), ("Wien", "S-LOC")],
    [("Karl", "S-PER"), ("wohnt", "O"), ("in", "O"), ("Graz", "S-LOC")],
    [("die", "O"), ("Stadt", "O"), ("Linz", "S-LOC")],
    [("Maria", "B-PER"), ("Theresia", "E-PER"), ("regierte", "O")],
    [("der", "O"), ("Kaiser", "O"), ("von", "O"), ("Wien", "S-LOC")],
    [("Anna", "S-PER"), ("und", "O"), ("Karl", "S-PER")],
    [("Graz", "S-LOC"), ("liegt", "O"), ("im", "O"), ("Süden", "O")],
    [("Herr", "O"), ("Huber", "S-PER"), ("lacht", "O")],
]


def toy_corpus(rows=None, split="train"):
    return make_corpus(rows or TRAIN_SENTENCES, scheme=TagScheme.IOBES, split=split)


def char_only_embedder(corpus, seed=0, hidden=6):
    vocab = extract_char_vocab(corpus)
    enc = CharFeatureEncoder(vocab, np.random.default_rng(seed),
                             embed_dim=8, hidden=hidden)
    return StackedEmbedder([enc])


def small_config(**kwargs):
    base = dict(lstm_hidden=8, learning_rate=0.1, mini_batch=4,
                max_epochs=5, seed=1)
    base.update(kwargs)
    return TaggerConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"lstm_hidden": 0},
        {"mini_batch": 0},
        {"max_epochs": 0},
        {"anneal_factor": 0.0},
        {"anneal_factor": 1.0},
        {"patience": -1},
        {"learning_rate": 0.0},
        {"min_learning_rate": 0.0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            TaggerConfig(**kwargs)

    def test_defaults(self):
        cfg = TaggerConfig()
        assert cfg.lstm_hidden == 512
        assert cfg.learning_rate == 0.1
        assert cfg.mini_batch == 8
        assert cfg.max_epochs == 500
        assert cfg.anneal_factor == 0.5
        assert cfg.patience == 3


def fresh_model(corpus, seed=2, **cfg):
    embedder = char_only_embedder(corpus, seed=seed)
    config = small_config(**cfg)
    tags = tuple(sorted({t for s in corpus for t in s.gold_tags()} | {"O"}))
    return NerModel.initialize(embedder, tags, config,
                               np.random.default_rng(seed))


class TestEmissions:
    def test_shape(self):
        corpus = toy_corpus()
        model = fresh_model(corpus)
        out = emission_scores(model, corpus.sentences[0])
        assert out.shape == (3, len(model.tags))

    def test_zero_weights_zero_emissions(self):
        corpus = toy_corpus()
        model = fresh_model(corpus)
        for layer in model.layers:
            for p in layer.params.values():
                p[...] = 0.0
        out = emission_scores(model, corpus.sentences[1])
        np.testing.assert_array_equal(out, 0.0)

    def test_gradient_through_encoder_and_projection(self):
        corpus = toy_corpus()
        model = fresh_model(corpus)
        sentence = corpus.sentences[0]
        rng = np.random.default_rng(3)
        R = rng.standard_normal((len(sentence), len(model.tags)))

        def loss():
            return float(np.sum(emission_scores(model, sentence) * R))

        model.zero_grads()
        emissions, cache = model._emissions(sentence)
        model._backward(cache, R)
        for layer in (model.fwd, model.bwd, model.projection,
                      *model.embedder.layers):
            for name, param in layer.params.items():
                err = gradient_relative_error(
                    layer.grads[name], numeric_gradient(loss, param))
                assert err < 1e-4, f"{name}: {err:.2e}"


class TestPredict:
    def test_fills_every_token_deterministically(self):
        corpus = toy_corpus()
        model = fresh_model(corpus)
        out1 = predict(model, corpus)
        out2 = predict(model, corpus)
        assert out1.scheme is TagScheme.IOBES
        for s1, s2 in zip(out1, out2):
            assert s1.predicted_tags() == s2.predicted_tags()
            assert all(t is not None for t in s1.predicted_tags())

    def test_gold_tags_preserved(self):
        corpus = toy_corpus()
        model = fresh_model(corpus)
        out = predict(model, corpus)
        for orig, tagged in zip(corpus, out):
            assert orig.gold_tags() == tagged.gold_tags()

    def test_predictions_well_formed_across_random_models(self):
        corpus = toy_corpus()
        for seed in range(5):
            model = fresh_model(corpus, seed=seed)
            for sentence in predict(model, corpus):
                extract_spans(sentence.predicted_tags(), TagScheme.IOBES)


class TestTraining:
    def test_overfits_toy_corpus(self):
        corpus = toy_corpus()
        embedder = char_only_embedder(corpus, hidden=12)
        # lr 1.0 suits the tiny encoder; patience is generous so transient
        # F1 plateaus during the loss descent don't floor the rate early
        config = small_config(lstm_hidden=16, max_epochs=120, mini_batch=4,
                              learning_rate=1.0, patience=25, seed=4)
        model, log = train_ner(corpus, corpus, config, embedder)
        report = evaluate(corpus, predict(model, corpus))
        assert report.f1 == 1.0
        assert log.best_dev_f1 == 1.0

    def test_annealing_schedule_with_flat_scores(self):
        corpus = toy_corpus()
        embedder = char_only_embedder(corpus)
        config = small_config(max_epochs=4, learning_rate=0.1,
                              anneal_factor=0.5, patience=3)
        _, log = train_ner(corpus, corpus, config, embedder,
                           dev_scorer=lambda m: 0.0)
        rates = [r.learning_rate for r in log.records]
        assert rates == [0.1, 0.1, 0.1, 0.05]
        assert [r.annealed for r in log.records] == [False, False, True, False]

    def test_counter_resets_after_anneal(self):
        corpus = toy_corpus()
        embedder = char_only_embedder(corpus)
        config = small_config(max_epochs=7, learning_rate=0.1,
                              anneal_factor=0.5, patience=3,
                              min_learning_rate=1e-4)
        _, log = train_ner(corpus, corpus, config, embedder,
                           dev_scorer=lambda m: 0.0)
        rates = [r.learning_rate for r in log.records]
        assert rates == [0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.025]

    def test_converged_status(self):
        corpus = toy_corpus()
        embedder = char_only_embedder(corpus)
        config = small_config(max_epochs=50, learning_rate=0.1,
                              anneal_factor=0.5, patience=1,
                              min_learning_rate=0.04)
        _, log = train_ner(corpus, corpus, config, embedder,
                           dev_scorer=lambda m: 0.0)
        assert log.status == "converged"
        assert len(log.records) == 2
        assert [r.learning_rate for r in log.records] == [0.1, 0.05]

    def test_best_epoch_parameters_returned(self):
        corpus = toy_corpus()
        embedder = char_only_embedder(corpus)
        scores = iter([0.3, 0.9, 0.2, 0.1])
        seen = []

        def scorer(model):
            seen.append([p.copy() for layer in model.layers
                         for p in layer.params.values()])
            return next(scores)

        config = small_config(max_epochs=4)
        model, log = train_ner(corpus, corpus, config, embedder,
                               dev_scorer=scorer)
        assert log.best_epoch == 2
        assert log.best_dev_f1 == 0.9
        final = [p for layer in model.layers for p in layer.params.values()]
        for param, saved in zip(final, seen[1]):
            np.testing.assert_array_equal(param, saved)

    def test_deterministic_given_seed(self):
        corpus = toy_corpus()
        cfg = small_config(max_epochs=3, seed=7)
        m1, log1 = train_ner(corpus, corpus, cfg, char_only_embedder(corpus, seed=7))
        m2, log2 = train_ner(corpus, corpus, cfg, char_only_embedder(corpus, seed=7))
        assert [r.dev_f1 for r in log1.records] == [r.dev_f1 for r in log2.records]
        for l1, l2 in zip(m1.layers, m2.layers):
            for name in l1.params:
                np.testing.assert_array_equal(l1.params[name], l2.params[name])

    def test_empty_train_rejected(self):
        corpus = toy_corpus()
        empty = TaggedCorpus((), scheme=TagScheme.IOBES)
        with pytest.raises(EmptyCorpusError):
            train_ner(empty, corpus, small_config(), char_only_embedder(corpus))
        with pytest.raises(EmptyCorpusError):
            train_ner(corpus, empty, small_config(), char_only_embedder(corpus))

    def test_iob2_corpus_rejected(self):
        iob2 = make_corpus([[("a", "B-PER")]], scheme=TagScheme.IOB2)
        with pytest.raises(ConfigError):
            train_ner(iob2, iob2, small_config(), char_only_embedder(iob2))


def full_embedder(tmp_path, corpus):
    """All three component kinds, with on-disk artifacts for by-reference
    serialization."""
    rng = np.random.default_rng(11)
    vec_path = tmp_path / "vectors.txt"
    words = sorted({t.text for s in corpus for t in s})
    lines = [f"{w} " + " ".join(f"{v:.3f}" for v in rng.standard_normal(4))
             for w in words[:5]]
    vec_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    table = WordTableEmbedder(load_vectors(vec_path), source_path=vec_path)

    vocab = extract_char_vocab(corpus)
    chars = CharFeatureEncoder(vocab, rng, embed_dim=6, hidden=5)

    lm_cfg = dict(char_embed_dim=4, hidden_size=6, dropout=0.0)
    fwd = CharLm.initialize(vocab, CharLmConfig(direction="forward", **lm_cfg), rng)
    bwd = CharLm.initialize(vocab, CharLmConfig(direction="backward", **lm_cfg), rng)
    fwd_path, bwd_path = tmp_path / "fwd.lm", tmp_path / "bwd.lm"
    save_lm(fwd, fwd_path)
    save_lm(bwd, bwd_path)
    ctx = ContextualEmbedder(fwd, bwd, forward_path=fwd_path, backward_path=bwd_path)
    return StackedEmbedder([table, chars, ctx])


class TestSaveLoad:
    def test_round_trip_predictions_identical(self, tmp_path):
        corpus = toy_corpus()
        embedder = full_embedder(tmp_path, corpus)
        config = small_config(max_epochs=2)
        model, _ = train_ner(corpus, corpus, config, embedder)
        path = tmp_path / "ner.bin"
        save_ner(model, path)
        loaded = load_ner(path)
        assert loaded.tags == model.tags
        before = predict(model, corpus)
        after = predict(loaded, corpus)
        for s1, s2 in zip(before, after):
            assert s1.predicted_tags() == s2.predicted_tags()

    def test_hash_mismatch_detected(self, tmp_path):
        corpus = toy_corpus()
        embedder = full_embedder(tmp_path, corpus)
        model, _ = train_ner(corpus, corpus, small_config(max_epochs=1), embedder)
        path = tmp_path / "ner.bin"
        save_ner(model, path)
        vec_path = tmp_path / "vectors.txt"
        vec_path.write_text("tampered 1 2 3 4\n", encoding="utf-8")
        with pytest.raises(ModelFormatError, match="sha256"):
            load_ner(path)

    def test_unsaved_reference_rejected(self, tmp_path):
        corpus = toy_corpus()
        table = WordTableEmbedder(WordEmbeddingTable(3, {"a": np.ones(3)}))
        model = NerModel.initialize(
            StackedEmbedder([table]), ("O", "S-PER"), small_config(),
            np.random.default_rng(0))
        with pytest.raises(ConfigError, match="source path"):
            save_ner(model, tmp_path / "x.bin")

    def test_wrong_kind_rejected(self, tmp_path):
        from histtag.serialization import save_tensors
        path = tmp_path / "other.bin"
        save_tensors(path, {"kind": "charlm"}, [])
        with pytest.raises(ModelFormatError):
            load_ner(path)
