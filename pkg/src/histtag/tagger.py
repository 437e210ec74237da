"""Bi-LSTM-CRF sequence labeler and its training loop.

Token embeddings from a StackedEmbedder feed a bidirectional LSTM; a
linear layer projects the concatenated directional states to per-tag
emission scores, and a linear-chain CRF scores complete tag sequences.
Training is SGD over shuffled mini-batches minimizing the mean sentence
NLL, with the gradient norm clipped at 5.0, dev-F1 model selection, and
learning-rate halving after `patience` consecutive epochs without a dev
improvement.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .charlm import load_lm, save_lm
from .corpus import CharVocabulary, Sentence, TaggedCorpus, TagScheme, Token
from .crf import CrfLayer, crf_nll_with_grads, viterbi_decode
from .embed import (
    CharFeatureEncoder,
    ContextualEmbedder,
    StackedEmbedder,
    WordTableEmbedder,
    load_vectors,
)
from .errors import ConfigError, EmptyCorpusError, ModelFormatError
from .evaluation import evaluate
from .nn import Linear, Lstm, clip_grad_norm, sgd_step
from .serialization import file_sha256, load_tensors, save_tensors

logger = logging.getLogger(__name__)

GRAD_CLIP = 5.0


@dataclass(frozen=True)
class TaggerConfig:
    lstm_hidden: int = 512
    learning_rate: float = 0.1
    mini_batch: int = 8
    max_epochs: int = 500
    anneal_factor: float = 0.5
    patience: int = 3
    min_learning_rate: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.lstm_hidden < 1 or self.mini_batch < 1 or self.max_epochs < 1:
            raise ConfigError("lstm_hidden, mini_batch and max_epochs must be positive")
        if not 0.0 < self.anneal_factor < 1.0:
            raise ConfigError(f"anneal_factor must lie in (0, 1), got {self.anneal_factor}")
        if self.patience < 0:
            raise ConfigError(f"patience must be non-negative, got {self.patience}")
        if self.learning_rate <= 0 or self.min_learning_rate <= 0:
            raise ConfigError("learning rates must be positive")


class NerModel:
    """Embedder → Bi-LSTM → emission projection → CRF."""

    def __init__(self, embedder: StackedEmbedder, tags, config: TaggerConfig,
                 fwd: Lstm, bwd: Lstm, projection: Linear, crf: CrfLayer):
        self.embedder = embedder
        self.tags = tuple(tags)
        self.tag_index = {t: i for i, t in enumerate(self.tags)}
        self.config = config
        self.fwd = fwd
        self.bwd = bwd
        self.projection = projection
        self.crf = crf

    @classmethod
    def initialize(cls, embedder: StackedEmbedder, tags, config: TaggerConfig,
                   rng: np.random.Generator, constrained: bool = True) -> "NerModel":
        H = config.lstm_hidden
        fwd = Lstm(embedder.dim, H, rng)
        bwd = Lstm(embedder.dim, H, rng)
        projection = Linear(2 * H, len(tags), rng)
        crf = CrfLayer(tags, rng, constrained=constrained)
        return cls(embedder, tags, config, fwd, bwd, projection, crf)

    @property
    def layers(self):
        return self.embedder.layers + (self.fwd, self.bwd, self.projection, self.crf)

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def _emissions(self, sentence: Sentence):
        vecs, emb_cache = self.embedder.forward(sentence)
        hs_f, _, f_cache = self.fwd.forward(vecs)
        hs_b, _, b_cache = self.bwd.forward(vecs[::-1])
        concat = np.concatenate([hs_f, hs_b[::-1]], axis=1)
        emissions, lin_cache = self.projection.forward(concat)
        return emissions, (emb_cache, f_cache, b_cache, lin_cache)

    def _backward(self, cache, d_emissions: np.ndarray) -> None:
        emb_cache, f_cache, b_cache, lin_cache = cache
        H = self.config.lstm_hidden
        d_concat = self.projection.backward(lin_cache, d_emissions)
        dx_f, _ = self.fwd.backward(f_cache, d_concat[:, :H])
        dx_b, _ = self.bwd.backward(b_cache, d_concat[:, H:][::-1])
        self.embedder.backward(emb_cache, dx_f + dx_b[::-1])


def emission_scores(model: NerModel, sentence: Sentence) -> np.ndarray:
    """Per-token scores against all tags, deterministic."""
    emissions, _ = model._emissions(sentence)
    return emissions


def predict(model: NerModel, corpus: TaggedCorpus) -> TaggedCorpus:
    """Viterbi-decode every sentence; fills predicted_tag, keeps gold."""
    sentences = []
    for sentence in corpus:
        emissions, _ = model._emissions(sentence)
        path, _ = viterbi_decode(emissions, model.crf)
        tokens = tuple(
            Token(tok.text, gold_tag=tok.gold_tag, predicted_tag=model.tags[i])
            for tok, i in zip(sentence, path))
        sentences.append(Sentence(tokens))
    return TaggedCorpus(tuple(sentences), scheme=TagScheme.IOBES,
                        split=corpus.split)


@dataclass
class NerEpochRecord:
    epoch: int
    train_loss: float
    dev_f1: float
    learning_rate: float
    annealed: bool


@dataclass
class NerTrainLog:
    records: list[NerEpochRecord] = field(default_factory=list)
    status: str = "max_epochs"
    best_epoch: int = 0
    best_dev_f1: float = 0.0


def _tagset_from(corpus: TaggedCorpus) -> tuple[str, ...]:
    tags = {t for sentence in corpus for t in sentence.gold_tags()}
    tags.add("O")
    return tuple(sorted(tags))


def _snapshot(model: NerModel):
    return [(layer, name, layer.params[name].copy())
            for layer in model.layers for name in layer.params]


def _restore(snapshot) -> None:
    for layer, name, saved in snapshot:
        layer.params[name][...] = saved


def train_ner(train: TaggedCorpus, dev: TaggedCorpus, config: TaggerConfig,
              embedder: StackedEmbedder,
              dev_scorer: Optional[Callable[[NerModel], float]] = None,
              constrained: bool = True) -> tuple[NerModel, NerTrainLog]:
    """Train a tagger; returns the parameters from the best-dev epoch.

    ``dev_scorer`` defaults to micro span F1 of the model's predictions on
    the dev corpus.  A non-improving streak of `patience` epochs multiplies
    the learning rate by `anneal_factor` (streak counter resets after each
    cut); training stops at max_epochs, or earlier with status "converged"
    once the rate falls below min_learning_rate.
    """
    if len(train) == 0:
        raise EmptyCorpusError("training corpus is empty")
    if len(dev) == 0:
        raise EmptyCorpusError("dev corpus is empty")
    for name, corpus in (("train", train), ("dev", dev)):
        if corpus.scheme is not TagScheme.IOBES:
            raise ConfigError(f"{name} corpus must use the IOBES scheme")

    tags = _tagset_from(train)
    rng = np.random.default_rng(config.seed)
    model = NerModel.initialize(embedder, tags, config, rng,
                                constrained=constrained)
    if dev_scorer is None:
        def dev_scorer(m: NerModel) -> float:
            return evaluate(dev, predict(m, dev)).f1

    gold_paths = [
        np.array([model.tag_index[t] for t in sentence.gold_tags()])
        for sentence in train
    ]

    log = NerTrainLog()
    best_params = _snapshot(model)
    best_f1 = 0.0
    stagnant = 0
    lr = config.learning_rate
    n = len(train)
    sentences = list(train)
    for epoch in range(1, config.max_epochs + 1):
        if lr < config.min_learning_rate:
            log.status = "converged"
            logger.info("ner epoch %d: learning rate %g below %g, stopping",
                        epoch, lr, config.min_learning_rate)
            break
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.mini_batch):
            batch = order[start:start + config.mini_batch]
            model.zero_grads()
            scale = 1.0 / len(batch)
            for i in batch:
                emissions, cache = model._emissions(sentences[i])
                nll, d_emissions = crf_nll_with_grads(
                    emissions, model.crf, gold_paths[i], scale=scale)
                model._backward(cache, d_emissions)
                loss_sum += nll
            clip_grad_norm(model.layers, GRAD_CLIP)
            sgd_step(model.layers, lr)

        dev_f1 = float(dev_scorer(model))
        annealed = False
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            log.best_epoch = epoch
            best_params = _snapshot(model)
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= config.patience:
                lr *= config.anneal_factor
                stagnant = 0
                annealed = True
        log.records.append(NerEpochRecord(
            epoch=epoch, train_loss=loss_sum / n, dev_f1=dev_f1,
            learning_rate=lr if not annealed else lr / config.anneal_factor,
            annealed=annealed))
        logger.info("ner epoch %d: loss %.4f dev f1 %.4f lr %g%s",
                    epoch, loss_sum / n, dev_f1,
                    log.records[-1].learning_rate,
                    " (annealed)" if annealed else "")

    log.best_dev_f1 = best_f1
    _restore(best_params)
    return model, log


# --- model files -----------------------------------------------------------

def _component_spec(i: int, component) -> tuple[dict, list]:
    """Meta entry plus payload tensors for one embedder component."""
    prefix = f"component{i}"
    if isinstance(component, WordTableEmbedder):
        if component.source_path is None:
            raise ConfigError(
                "word-table component has no source path; load it via "
                "load_vectors(path) before saving the model")
        return ({"kind": "word_table", "path": str(component.source_path),
                 "sha256": file_sha256(component.source_path)}, [])
    if isinstance(component, CharFeatureEncoder):
        meta = {"kind": "char_features",
                "vocab": component.vocab.codepoints(),
                "embed_dim": component.embed_dim,
                "hidden": component.hidden}
        tensors = [(f"{prefix}.embedding.weight", component.embedding.params["weight"])]
        for tag, lstm in (("fwd", component.fwd), ("bwd", component.bwd)):
            for name in ("Wx", "Wh", "bias"):
                tensors.append((f"{prefix}.{tag}.{name}", lstm.params[name]))
        return meta, tensors
    if isinstance(component, ContextualEmbedder):
        if component.forward_path is None or component.backward_path is None:
            raise ConfigError(
                "contextual component has no LM file paths; attach them at "
                "construction before saving the model")
        return ({"kind": "contextual",
                 "forward_path": str(component.forward_path),
                 "forward_sha256": file_sha256(component.forward_path),
                 "backward_path": str(component.backward_path),
                 "backward_sha256": file_sha256(component.backward_path)}, [])
    raise ConfigError(f"cannot serialize component of type {type(component).__name__}")


def save_ner(model: NerModel, path) -> None:
    """Write the model: own tensors inline, LM/vector files by path+hash."""
    components = []
    tensors = []
    for i, component in enumerate(model.embedder.components):
        meta, extra = _component_spec(i, component)
        components.append(meta)
        tensors.extend(extra)
    for tag, lstm in (("fwd", model.fwd), ("bwd", model.bwd)):
        for name in ("Wx", "Wh", "bias"):
            tensors.append((f"encoder.{tag}.{name}", lstm.params[name]))
    tensors.append(("projection.weight", model.projection.params["weight"]))
    tensors.append(("projection.bias", model.projection.params["bias"]))
    tensors.append(("crf.transitions", model.crf.params["transitions"]))
    meta = {
        "kind": "ner",
        "tags": list(model.tags),
        "lstm_hidden": model.config.lstm_hidden,
        "constrained": model.crf.constrained,
        "components": components,
    }
    save_tensors(path, meta, tensors)


def _verify_hash(path, recorded: str, what: str) -> None:
    actual = file_sha256(path)
    if actual != recorded:
        raise ModelFormatError(
            f"{what} at {path} has sha256 {actual}, model records {recorded}")


def _fill(layer, tensors: dict, names: dict[str, str], context: str) -> None:
    for param_name, tensor_name in names.items():
        if tensor_name not in tensors:
            raise ModelFormatError(f"missing tensor {tensor_name!r}")
        value = tensors[tensor_name]
        target = layer.params[param_name]
        if value.shape != target.shape:
            raise ModelFormatError(
                f"{context}: tensor {tensor_name!r} has shape {value.shape}, "
                f"expected {target.shape}")
        target[...] = value


def load_ner(path) -> NerModel:
    """Rebuild a saved model, reloading referenced files and checking their
    recorded hashes."""
    meta, tensors = load_tensors(path)
    if meta.get("kind") != "ner":
        raise ModelFormatError(f"{path}: not a tagger model file")
    rng = np.random.default_rng(0)
    try:
        tags = list(meta["tags"])
        lstm_hidden = int(meta["lstm_hidden"])
        constrained = bool(meta["constrained"])
        component_meta = meta["components"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: invalid model metadata: {exc}") from exc

    components = []
    for i, spec in enumerate(component_meta):
        kind = spec.get("kind")
        if kind == "word_table":
            _verify_hash(spec["path"], spec["sha256"], "word-vector file")
            components.append(WordTableEmbedder(load_vectors(spec["path"]),
                                                source_path=spec["path"]))
        elif kind == "char_features":
            encoder = CharFeatureEncoder(
                CharVocabulary.from_codepoints(spec["vocab"]), rng,
                embed_dim=int(spec["embed_dim"]), hidden=int(spec["hidden"]))
            prefix = f"component{i}"
            _fill(encoder.embedding, tensors,
                  {"weight": f"{prefix}.embedding.weight"}, "char features")
            for tag, lstm in (("fwd", encoder.fwd), ("bwd", encoder.bwd)):
                _fill(lstm, tensors,
                      {n: f"{prefix}.{tag}.{n}" for n in ("Wx", "Wh", "bias")},
                      "char features")
            components.append(encoder)
        elif kind == "contextual":
            _verify_hash(spec["forward_path"], spec["forward_sha256"],
                         "forward LM file")
            _verify_hash(spec["backward_path"], spec["backward_sha256"],
                         "backward LM file")
            components.append(ContextualEmbedder(
                load_lm(spec["forward_path"]), load_lm(spec["backward_path"]),
                forward_path=spec["forward_path"],
                backward_path=spec["backward_path"]))
        else:
            raise ModelFormatError(f"{path}: unknown component kind {kind!r}")

    embedder = StackedEmbedder(components)
    config = TaggerConfig(lstm_hidden=lstm_hidden)
    model = NerModel.initialize(embedder, tags, config, rng,
                                constrained=constrained)
    for tag, lstm in (("fwd", model.fwd), ("bwd", model.bwd)):
        _fill(lstm, tensors,
              {n: f"encoder.{tag}.{n}" for n in ("Wx", "Wh", "bias")}, "encoder")
    _fill(model.projection, tensors,
          {"weight": "projection.weight", "bias": "projection.bias"}, "projection")
    _fill(model.crf, tensors, {"transitions": "crf.transitions"}, "crf")
    return model
