"""Command-line interface exposing the pipeline as subcommands.

One binary, subcommand style.  Orchestrated commands read a YAML run
config; individual flags override config values.  Every command that
produces file artifacts also writes a run manifest beside them: the fully
resolved config, its hash, the seeds used, library versions, and a sha256
per input and output file.  Manifests carry no timestamps, so a repeated
run over identical inputs reproduces them byte for byte, and the embedded
config is sufficient to re-execute the run.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
The only environment variable is HISTTAG_LOG, which sets the logging
level (default WARNING).
"""

import argparse
import json
import logging
import os
import platform
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .charlm import CharLmConfig, corpus_perplexity, load_lm, save_lm, train_lm
from .corpus import (
    CharVocabulary,
    TaggedCorpus,
    TagScheme,
    convert_scheme,
    extract_char_vocab,
    read_conll,
    read_plain,
)
from .embed import (
    CharFeatureEncoder,
    ContextualEmbedder,
    StackedEmbedder,
    WordTableEmbedder,
    load_vectors,
)
from .errors import ConfigError, HisttagError
from .evaluation import (
    average_runs,
    evaluate,
    format_report,
    read_conll_predictions,
    write_conll_predictions,
)
from .serialization import file_sha256
from .smlm import SmlmConfig, corruption_stats, select_mask_char, smlm_transform
from .tagger import TaggerConfig, load_ner, predict, save_ner, train_ner

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# run config


_LM_FIELDS = frozenset({
    "char_embed_dim", "hidden_size", "num_layers", "dropout",
    "sequence_length", "mini_batch", "epochs", "learning_rate",
})
_TAGGER_FIELDS = frozenset({
    "lstm_hidden", "learning_rate", "mini_batch", "max_epochs",
    "anneal_factor", "patience", "min_learning_rate", "seed",
})
_EMBEDDING_KINDS = {
    "word_table": frozenset({"kind", "path"}),
    "char_features": frozenset({"kind", "embed_dim", "hidden"}),
    "contextual": frozenset({"kind", "forward", "backward"}),
}
_SCHEMA = {
    "data": frozenset({"train", "dev", "test", "lm_corpus",
                       "token_column", "tag_column", "scheme"}),
    "vocab": frozenset({"path"}),
    "smlm": frozenset({"p_keep", "p_mask_given_change",
                       "p_replace_given_change", "seed", "mask_char",
                       "output", "stats"}),
    "lm": frozenset({"forward", "backward", "corpus", "vocab", "seed",
                     "output_dir"}),
    "embeddings": None,
    "tagger": _TAGGER_FIELDS,
    "eval": frozenset({"runs", "output_dir"}),
}


def _check_keys(mapping, allowed, where: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"config section {where!r} must be a mapping")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(unknown)}")


def validate_config(config: dict) -> dict:
    """Reject unknown sections and keys anywhere in the document."""
    _check_keys(config, _SCHEMA, "run config")
    for section in ("data", "vocab", "smlm", "tagger", "eval"):
        if section in config:
            _check_keys(config[section], _SCHEMA[section], section)
    if "lm" in config:
        _check_keys(config["lm"], _SCHEMA["lm"], "lm")
        for direction in ("forward", "backward"):
            if direction in config["lm"]:
                _check_keys(config["lm"][direction], _LM_FIELDS,
                            f"lm.{direction}")
    if "embeddings" in config:
        components = config["embeddings"]
        if not isinstance(components, list):
            raise ConfigError("embeddings must be a list of components")
        for i, comp in enumerate(components):
            where = f"embeddings[{i}]"
            if not isinstance(comp, dict) or "kind" not in comp:
                raise ConfigError(f"{where} needs a 'kind' key")
            kind = comp["kind"]
            if kind not in _EMBEDDING_KINDS:
                raise ConfigError(
                    f"{where}: unknown kind {kind!r}; expected one of "
                    f"{', '.join(sorted(_EMBEDDING_KINDS))}")
            _check_keys(comp, _EMBEDDING_KINDS[kind], where)
    return config


def load_run_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if loaded is None:
        loaded = {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"{path}: run config must be a mapping")
    return validate_config(loaded)


def _maybe_config(args) -> dict:
    return load_run_config(args.config) if getattr(args, "config", None) else {}


def _require(value, what: str):
    if value is None:
        raise ConfigError(f"{what} is required")
    return value


def _require_file(value, what: str) -> Path:
    path = Path(_require(value, what))
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _scheme_of(name: str) -> TagScheme:
    try:
        return TagScheme.from_string(name)
    except Exception:
        raise ConfigError(f"unknown tag scheme {name!r}") from None


def _pick(flag_value, section: dict, key: str, default=None):
    """Flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    return section.get(key, default)


# ---------------------------------------------------------------------------
# manifests


def _config_sha256(config: dict) -> str:
    import hashlib

    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _versions() -> dict:
    return {
        "histtag": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pyyaml": yaml.__version__,
    }


def _hash_entry(path) -> dict:
    path = Path(path)
    return {"path": str(path), "sha256": file_sha256(path)}


def write_manifest(path, command: str, config: dict, seeds: dict,
                   inputs: dict, artifacts: dict) -> None:
    """Deterministic run record: no timestamps, sorted keys."""
    body = {
        "command": command,
        "config": config,
        "config_sha256": _config_sha256(config),
        "seeds": seeds,
        "versions": _versions(),
        "inputs": {name: _hash_entry(p) for name, p in inputs.items()},
        "artifacts": {name: _hash_entry(p) for name, p in artifacts.items()},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(body, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


# ---------------------------------------------------------------------------
# shared loading helpers


def _load_vocab_source(path) -> CharVocabulary:
    """Accept either a vocab file or a plain-text dataset to extract from."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("# histtag vocab") or first.startswith("U+"):
        return CharVocabulary.from_path(path)
    return extract_char_vocab(read_plain(path))


def _read_tagged(path, token_column: int, tag_column: int,
                 scheme: TagScheme, split: str) -> TaggedCorpus:
    return read_conll(path, token_column, tag_column, scheme, split=split)


# ---------------------------------------------------------------------------
# vocab


def cmd_vocab(args) -> int:
    config = _maybe_config(args)
    data = config.get("data", {})
    token_column = _pick(args.token_column, data, "token_column", 0)
    tag_column = _pick(args.tag_column, data, "tag_column", 1)
    scheme = _scheme_of(_pick(args.scheme, data, "scheme", "iob2"))

    plain_paths = list(args.plain or [])
    conll_paths = list(args.conll or [])
    if not plain_paths and not conll_paths:
        if "lm_corpus" in data:
            plain_paths.append(data["lm_corpus"])
        conll_paths.extend(data[k] for k in ("train", "dev", "test")
                           if k in data)
    if not plain_paths and not conll_paths:
        raise ConfigError("no input files: pass --plain/--conll or a config "
                          "with a data section")
    output = Path(_require(
        args.output or config.get("vocab", {}).get("path"), "--output"))

    sources = []
    for p in plain_paths:
        sources.append(read_plain(_require_file(p, "input")))
    for p in conll_paths:
        sources.append(_read_tagged(_require_file(p, "input"), token_column,
                                    tag_column, scheme, "train"))
    vocab = extract_char_vocab(*sources)
    output.parent.mkdir(parents=True, exist_ok=True)
    vocab.to_path(output)
    print(f"{len(vocab)} characters from {len(sources)} source(s) -> {output}")
    return 0


# ---------------------------------------------------------------------------
# smlm


def cmd_smlm(args) -> int:
    config = _maybe_config(args)
    data = config.get("data", {})
    section = config.get("smlm", {})

    input_path = _require_file(
        args.input if args.input is not None else data.get("lm_corpus"),
        "--input")
    vocab_source = _require_file(
        args.vocab if args.vocab is not None else
        config.get("vocab", {}).get("path"), "--vocab")
    output = Path(_require(_pick(args.output, section, "output"), "--output"))
    stats_path = _pick(args.stats, section, "stats")
    p_keep = float(_pick(args.p_keep, section, "p_keep", 0.90))
    p_mask = float(section.get("p_mask_given_change", 0.20))
    p_replace = float(section.get("p_replace_given_change", 0.80))
    seed = int(_pick(args.seed, section, "seed", 0))

    vocab = _load_vocab_source(vocab_source)
    mask_char = _pick(args.mask_char, section, "mask_char")
    if mask_char is None:
        mask_char = select_mask_char(vocab)
    smlm_config = SmlmConfig(mask_char=mask_char, seed=seed, p_keep=p_keep,
                             p_mask_given_change=p_mask,
                             p_replace_given_change=p_replace)

    corrupted, stats = smlm_transform(read_plain(input_path), vocab,
                                      smlm_config)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8", newline="\n") as fh:
        for line in corrupted:
            fh.write(line + "\n")
    report = corruption_stats(stats)
    artifacts = {"output": output}
    if stats_path is not None:
        stats_path = Path(stats_path)
        stats_path.parent.mkdir(parents=True, exist_ok=True)
        with open(stats_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_text())
        artifacts["stats"] = stats_path

    resolved = {
        "data": {"lm_corpus": str(input_path)},
        "vocab": {"path": str(vocab_source)},
        "smlm": {
            "p_keep": p_keep,
            "p_mask_given_change": p_mask,
            "p_replace_given_change": p_replace,
            "seed": seed,
            "mask_char": mask_char,
            "output": str(output),
            **({"stats": str(stats_path)} if stats_path is not None else {}),
        },
    }
    write_manifest(Path(f"{output}.manifest.json"), "smlm", resolved,
                   {"smlm": seed},
                   {"input": input_path, "vocab": vocab_source}, artifacts)
    print(f"corrupted {report.total_chars} characters "
          f"(kept {report.kept_rate:.4f}, masked {report.masked_rate:.4f}, "
          f"replaced {report.replaced_rate:.4f}) -> {output}")
    return 0


# ---------------------------------------------------------------------------
# lm train / lm ppl


def _lm_config_fields(config: CharLmConfig) -> dict:
    fields = asdict(config)
    fields.pop("direction")
    return fields


def cmd_lm_train(args) -> int:
    config = _maybe_config(args)
    data = config.get("data", {})
    section = config.get("lm", {})

    corpus_path = _require_file(
        args.corpus if args.corpus is not None else
        section.get("corpus", data.get("lm_corpus")), "LM corpus")
    out_dir = Path(_require(_pick(args.output_dir, section, "output_dir"),
                            "--output-dir"))
    seed = int(_pick(args.seed, section, "seed", 0))
    directions = (("forward", "backward") if args.direction == "both"
                  else (args.direction,))

    vocab = None
    vocab_path = section.get("vocab")
    if vocab_path is not None:
        vocab = CharVocabulary.from_path(_require_file(vocab_path, "lm.vocab"))

    corpus = read_plain(corpus_path)
    out_dir.mkdir(parents=True, exist_ok=True)

    resolved_lm = {"corpus": str(corpus_path), "seed": seed,
                   "output_dir": str(out_dir)}
    if vocab_path is not None:
        resolved_lm["vocab"] = str(vocab_path)
    inputs = {"corpus": corpus_path}
    if vocab_path is not None:
        inputs["vocab"] = Path(vocab_path)
    artifacts = {}

    for direction in directions:
        overrides = dict(section.get(direction) or {})
        if args.epochs is not None:
            overrides["epochs"] = args.epochs
        if args.learning_rate is not None:
            overrides["learning_rate"] = args.learning_rate
        try:
            lm_config = CharLmConfig(direction=direction, **overrides)
        except TypeError as exc:
            raise ConfigError(f"lm.{direction}: {exc}") from None
        model, log = train_lm(corpus, lm_config, seed, vocab=vocab)
        model_path = out_dir / f"{direction}.bin"
        save_lm(model, model_path)
        log_path = out_dir / f"{direction}_log.json"
        with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(log), fh, sort_keys=True, indent=2)
            fh.write("\n")
        artifacts[f"{direction}.bin"] = model_path
        artifacts[f"{direction}_log.json"] = log_path
        resolved_lm[direction] = _lm_config_fields(lm_config)
        final = log.epochs[-1].test_perplexity if log.epochs else float("nan")
        print(f"{direction}: test perplexity "
              f"{log.initial_test_perplexity:.3f} -> {final:.3f} "
              f"over {len(log.epochs)} epoch(s), saved {model_path}")

    write_manifest(out_dir / "manifest.json", "lm train",
                   {"lm": resolved_lm}, {"lm": seed}, inputs, artifacts)
    return 0


def cmd_lm_ppl(args) -> int:
    model = load_lm(_require_file(args.model, "--model"))
    input_path = _require_file(args.input, "--input")
    if args.format == "conll":
        corpus = _read_tagged(
            input_path,
            args.token_column if args.token_column is not None else 0,
            args.tag_column if args.tag_column is not None else 1,
            _scheme_of(args.scheme or "iob2"), "test")
    else:
        corpus = read_plain(input_path)
    value = corpus_perplexity(model, corpus)
    line = f"perplexity {value:.6f}"
    print(line)
    if args.output is not None:
        output = Path(args.output)
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(line + "\n")
        write_manifest(
            Path(f"{output}.manifest.json"), "lm ppl",
            {"lm": {"model": str(args.model)},
             "data": {"input": str(input_path), "format": args.format}},
            {}, {"model": Path(args.model), "input": input_path},
            {"report": output})
    return 0


# ---------------------------------------------------------------------------
# ner train / ner predict


def _validate_components(components: list) -> None:
    for i, comp in enumerate(components):
        kind = comp["kind"]
        if kind == "word_table":
            _require_file(comp.get("path"), f"embeddings[{i}].path")
        elif kind == "contextual":
            _require_file(comp.get("forward"), f"embeddings[{i}].forward")
            _require_file(comp.get("backward"), f"embeddings[{i}].backward")


def _load_frozen_components(components: list) -> list:
    """Load static payloads (vector tables, LM weights) exactly once."""
    loaded = []
    for comp in components:
        kind = comp["kind"]
        if kind == "word_table":
            loaded.append((comp, load_vectors(comp["path"])))
        elif kind == "contextual":
            loaded.append((comp, (load_lm(comp["forward"]),
                                  load_lm(comp["backward"]))))
        else:
            loaded.append((comp, None))
    return loaded


def _instantiate_embedder(loaded: list, vocab: CharVocabulary,
                          rng: np.random.Generator) -> StackedEmbedder:
    blocks = []
    for comp, payload in loaded:
        kind = comp["kind"]
        if kind == "word_table":
            blocks.append(WordTableEmbedder(payload,
                                            source_path=comp["path"]))
        elif kind == "contextual":
            blocks.append(ContextualEmbedder(
                payload[0], payload[1],
                forward_path=comp["forward"],
                backward_path=comp["backward"]))
        else:
            blocks.append(CharFeatureEncoder(
                vocab, rng,
                embed_dim=int(comp.get("embed_dim", 25)),
                hidden=int(comp.get("hidden", 25))))
    return StackedEmbedder(blocks)


def _log_to_dict(log) -> dict:
    return {
        "status": log.status,
        "best_epoch": log.best_epoch,
        "best_dev_f1": log.best_dev_f1,
        "records": [asdict(r) for r in log.records],
    }


def cmd_ner_train(args) -> int:
    config = load_run_config(args.config)
    data = config.get("data", {})
    tagger_section = dict(config.get("tagger", {}))
    eval_section = config.get("eval", {})

    token_column = int(data.get("token_column", 0))
    tag_column = int(data.get("tag_column", 1))
    scheme = _scheme_of(data.get("scheme", "iob2"))
    train_path = _require_file(data.get("train"), "data.train")
    dev_path = _require_file(data.get("dev"), "data.dev")
    test_path = (_require_file(data.get("test"), "data.test")
                 if data.get("test") else None)

    components = config.get("embeddings") or [{"kind": "char_features"}]
    _validate_components(components)
    vocab_path = config.get("vocab", {}).get("path")
    if vocab_path is not None:
        vocab_path = _require_file(vocab_path, "vocab.path")

    runs = int(_pick(args.runs, eval_section, "runs", 3))
    if runs < 1:
        raise ConfigError(f"eval.runs must be at least 1, got {runs}")
    out_dir = Path(_require(_pick(args.output_dir, eval_section,
                                  "output_dir"), "eval.output_dir"))
    if args.seed is not None:
        tagger_section["seed"] = args.seed
    if args.max_epochs is not None:
        tagger_section["max_epochs"] = args.max_epochs
    if args.learning_rate is not None:
        tagger_section["learning_rate"] = args.learning_rate
    base_seed = int(tagger_section.get("seed", 0))
    tagger_section["seed"] = base_seed
    try:
        base_config = TaggerConfig(**tagger_section)
    except TypeError as exc:
        raise ConfigError(f"tagger: {exc}") from None

    train = convert_scheme(
        _read_tagged(train_path, token_column, tag_column, scheme, "train"),
        TagScheme.IOBES)
    dev = convert_scheme(
        _read_tagged(dev_path, token_column, tag_column, scheme, "dev"),
        TagScheme.IOBES)
    test = None
    if test_path is not None:
        test = convert_scheme(
            _read_tagged(test_path, token_column, tag_column, scheme, "test"),
            TagScheme.IOBES)

    if vocab_path is not None:
        vocab = CharVocabulary.from_path(vocab_path)
    else:
        vocab = extract_char_vocab(train, dev)
    loaded = _load_frozen_components(components)
    eval_corpus, eval_name = (test, "test") if test is not None else (dev, "dev")

    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = {"train": train_path, "dev": dev_path}
    if test_path is not None:
        inputs["test"] = test_path
    if vocab_path is not None:
        inputs["vocab"] = vocab_path
    for i, comp in enumerate(components):
        if comp["kind"] == "word_table":
            inputs[f"embeddings[{i}].path"] = Path(comp["path"])
        elif comp["kind"] == "contextual":
            inputs[f"embeddings[{i}].forward"] = Path(comp["forward"])
            inputs[f"embeddings[{i}].backward"] = Path(comp["backward"])

    artifacts = {}
    reports = []
    for run in range(runs):
        run_seed = base_seed + run
        run_config = TaggerConfig(**{**tagger_section, "seed": run_seed})
        # distinct seed material keeps encoder init clear of the training
        # stream, which also starts at run_seed
        embedder = _instantiate_embedder(
            loaded, vocab, np.random.default_rng([run_seed, 1]))
        model, log = train_ner(train, dev, run_config, embedder)

        run_dir = out_dir / f"run{run}"
        run_dir.mkdir(parents=True, exist_ok=True)
        model_path = run_dir / "model.bin"
        save_ner(model, model_path)
        predicted = predict(model, eval_corpus)
        predictions_path = run_dir / "predictions.conll"
        write_conll_predictions(eval_corpus, predicted, predictions_path)
        report = evaluate(eval_corpus, predicted)
        report_txt = run_dir / "report.txt"
        with open(report_txt, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_report(report) + "\n")
        report_json = run_dir / "report.json"
        with open(report_json, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"evaluated_on": eval_name, **report.to_dict()},
                      fh, sort_keys=True, indent=2)
            fh.write("\n")
        log_path = run_dir / "training_log.json"
        with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_log_to_dict(log), fh, sort_keys=True, indent=2)
            fh.write("\n")
        for name, p in (("model.bin", model_path),
                        ("predictions.conll", predictions_path),
                        ("report.txt", report_txt),
                        ("report.json", report_json),
                        ("training_log.json", log_path)):
            artifacts[f"run{run}/{name}"] = p
        reports.append(report)
        print(f"run {run}: seed {run_seed}, {eval_name} F1 {report.f1:.4f} "
              f"({log.status}, best epoch {log.best_epoch})")

    summary = average_runs(reports)
    summary_path = out_dir / "summary.json"
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"evaluated_on": eval_name, **summary.to_dict()},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    artifacts["summary.json"] = summary_path

    resolved = {
        "data": {"train": str(train_path), "dev": str(dev_path),
                 **({"test": str(test_path)} if test_path else {}),
                 "token_column": token_column, "tag_column": tag_column,
                 "scheme": scheme.value},
        **({"vocab": {"path": str(vocab_path)}} if vocab_path else {}),
        "embeddings": components,
        "tagger": {name: getattr(base_config, name)
                   for name in sorted(_TAGGER_FIELDS)},
        "eval": {"runs": runs, "output_dir": str(out_dir)},
    }
    write_manifest(out_dir / "manifest.json", "ner train", resolved,
                   {"base_seed": base_seed,
                    "runs": [base_seed + i for i in range(runs)]},
                   inputs, artifacts)
    print(f"mean {eval_name} F1 over {runs} run(s): {summary.mean_f1:.4f}")
    return 0


def cmd_ner_predict(args) -> int:
    model = load_ner(_require_file(args.model, "--model"))
    input_path = _require_file(args.input, "--input")
    output = Path(_require(args.output, "--output"))
    token_column = args.token_column if args.token_column is not None else 0
    tag_column = args.tag_column if args.tag_column is not None else 1
    scheme = _scheme_of(args.scheme or "iob2")

    corpus = convert_scheme(
        _read_tagged(input_path, token_column, tag_column, scheme, "test"),
        TagScheme.IOBES)
    predicted = predict(model, corpus)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_conll_predictions(corpus, predicted, output)
    write_manifest(
        Path(f"{output}.manifest.json"), "ner predict",
        {"data": {"input": str(input_path), "token_column": token_column,
                  "tag_column": tag_column, "scheme": scheme.value},
         "model": str(args.model), "output": str(output)},
        {}, {"model": Path(args.model), "input": input_path},
        {"predictions": output})
    print(f"wrote predictions for {len(corpus)} sentence(s) -> {output}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    scheme = _scheme_of(args.scheme or "iob2")
    if args.predictions is not None:
        if args.gold is not None or args.pred is not None:
            raise ConfigError(
                "--predictions cannot be combined with --gold/--pred")
        predictions_path = _require_file(args.predictions, "--predictions")
        gold, pred = read_conll_predictions(predictions_path, scheme)
        inputs = {"predictions": predictions_path}
        data_cfg = {"predictions": str(predictions_path)}
    else:
        gold_path = _require_file(args.gold, "--gold")
        pred_path = _require_file(args.pred, "--pred")
        token_column = args.token_column if args.token_column is not None else 0
        tag_column = args.tag_column if args.tag_column is not None else 1
        gold = _read_tagged(gold_path, token_column, tag_column, scheme, "test")
        # tags of the prediction file land in gold_tag; evaluate() treats
        # them as the predictions when no predicted_tag is set
        pred = _read_tagged(pred_path, token_column, tag_column, scheme, "test")
        inputs = {"gold": gold_path, "pred": pred_path}
        data_cfg = {"gold": str(gold_path), "pred": str(pred_path),
                    "token_column": token_column, "tag_column": tag_column}

    report = evaluate(gold, pred)
    print(format_report(report))
    if args.output is not None:
        output = Path(args.output)
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        write_manifest(
            Path(f"{output}.manifest.json"), "eval",
            {"data": {**data_cfg, "scheme": scheme.value}},
            {}, inputs, {"report": output})
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_config_flag(parser) -> None:
    parser.add_argument("--config", metavar="YAML",
                        help="run config file; explicit flags override it")


def _add_column_flags(parser) -> None:
    parser.add_argument("--token-column", type=int, default=None,
                        metavar="N", help="CoNLL column holding tokens")
    parser.add_argument("--tag-column", type=int, default=None,
                        metavar="N", help="CoNLL column holding tags")
    parser.add_argument("--scheme", choices=("iob2", "iobes"), default=None,
                        help="tag scheme of the input files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="histtag",
        description="corpus corruption, character LM pre-training, and "
                    "Bi-LSTM-CRF tagging for noisy historic text")
    parser.add_argument("--version", action="version",
                        version=f"histtag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="extract a character vocabulary")
    _add_config_flag(p)
    p.add_argument("--plain", action="append", metavar="FILE",
                   help="plain-text input (repeatable)")
    p.add_argument("--conll", action="append", metavar="FILE",
                   help="CoNLL input (repeatable)")
    _add_column_flags(p)
    p.add_argument("--output", metavar="FILE")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("smlm", help="corrupt a corpus into a synthetic "
                                    "noisy version")
    _add_config_flag(p)
    p.add_argument("--input", metavar="FILE")
    p.add_argument("--vocab", metavar="FILE",
                   help="vocab file, or a plain-text dataset to extract one from")
    p.add_argument("--output", metavar="FILE")
    p.add_argument("--stats", metavar="FILE")
    p.add_argument("--p-keep", type=float, default=None, metavar="P")
    p.add_argument("--seed", type=int, default=None, metavar="N")
    p.add_argument("--mask-char", default=None, metavar="C")
    p.set_defaults(func=cmd_smlm)

    lm = sub.add_parser("lm", help="character language models")
    lm_sub = lm.add_subparsers(dest="subcommand", required=True)

    p = lm_sub.add_parser("train", help="train forward/backward character LMs")
    _add_config_flag(p)
    p.add_argument("--corpus", metavar="FILE")
    p.add_argument("--direction", choices=("both", "forward", "backward"),
                   default="both")
    p.add_argument("--seed", type=int, default=None, metavar="N")
    p.add_argument("--epochs", type=int, default=None, metavar="N")
    p.add_argument("--learning-rate", type=float, default=None, metavar="X")
    p.add_argument("--output-dir", metavar="DIR")
    p.set_defaults(func=cmd_lm_train)

    p = lm_sub.add_parser("ppl", help="score a corpus with a trained LM")
    p.add_argument("--model", metavar="FILE", required=True)
    p.add_argument("--input", metavar="FILE", required=True)
    p.add_argument("--format", choices=("plain", "conll"), default="plain")
    _add_column_flags(p)
    p.add_argument("--output", metavar="FILE")
    p.set_defaults(func=cmd_lm_ppl)

    ner = sub.add_parser("ner", help="named-entity tagger")
    ner_sub = ner.add_subparsers(dest="subcommand", required=True)

    p = ner_sub.add_parser("train", help="train tagger(s) from a run config")
    p.add_argument("--config", metavar="YAML", required=True,
                   help="run config file; explicit flags override it")
    p.add_argument("--runs", type=int, default=None, metavar="N")
    p.add_argument("--seed", type=int, default=None, metavar="N")
    p.add_argument("--max-epochs", type=int, default=None, metavar="N")
    p.add_argument("--learning-rate", type=float, default=None, metavar="X")
    p.add_argument("--output-dir", metavar="DIR")
    p.set_defaults(func=cmd_ner_train)

    p = ner_sub.add_parser("predict", help="tag a CoNLL file with a trained model")
    p.add_argument("--model", metavar="FILE", required=True)
    p.add_argument("--input", metavar="FILE", required=True)
    p.add_argument("--output", metavar="FILE", required=True)
    _add_column_flags(p)
    p.set_defaults(func=cmd_ner_predict)

    p = sub.add_parser("eval", help="span F1 over gold/predicted tags")
    p.add_argument("--predictions", metavar="FILE",
                   help="three-column 'token gold pred' file")
    p.add_argument("--gold", metavar="FILE")
    p.add_argument("--pred", metavar="FILE")
    _add_column_flags(p)
    p.add_argument("--output", metavar="FILE",
                   help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("HISTTAG_LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HisttagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
