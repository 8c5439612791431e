"""Command-line surface: stats, train-embeddings, evaluate, softmatch,
paraphrase.

Configuration is a flat key = value text file ('#' starts a comment); every
key can also be set on the command line as --key-with-dashes, which wins
over the file. Exit codes: 0 success, 1 validation error (bad config, bad
paths, malformed inputs), 2 runtime or transport error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import corpus as corpus_mod
from . import embedding as embedding_mod
from . import evalrun
from . import metrics as metrics_mod
from . import paraphrase as paraphrase_mod
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DegenerateTableError,
    EmptyInputError,
    FormatError,
    WordevalError,
)
from .predictor import CachingPredictor, RemotePredictor, train_ngram
from .tokenizer import Scheme, load_vocab, segment_sentence

VALIDATION_EXIT = 1
RUNTIME_EXIT = 2


@dataclass
class RunConfig:
    run_name: str = "model"
    train_corpus: str = ""
    test_corpus: str = ""
    lowercase: bool = False
    vocab_scheme: str = "wordpiece"
    vocab_path: str = ""
    end_of_text: str = ""
    predictor: str = "ngram"
    ngram_order: int = 3
    ngram_discount: float = 0.75
    remote_spawn: str = ""
    remote_address: str = ""
    remote_timeout: float = 30.0
    topk: int = 10
    max_units: int = 16
    softmatch_depths: str = "1,3,10,25,50,100"
    embeddings: str = ""
    index_backend: str = "exact"
    index_trees: int = 16
    index_search_k: int = 0
    embedding_dim: int = 50
    embedding_window: int = 5
    embedding_negatives: int = 5
    embedding_epochs: int = 5
    embedding_min_count: int = 10
    triples: str = ""
    records: str = ""
    output_dir: str = "out"
    seed: int = 0
    workers: int = 1
    rolling_context: bool = False

    def depths(self) -> list[int]:
        try:
            parsed = [int(d) for d in self.softmatch_depths.split(",") if d.strip()]
        except ValueError:
            raise ConfigurationError(
                f"softmatch_depths must be comma-separated integers, got "
                f"{self.softmatch_depths!r}"
            ) from None
        if not parsed or parsed != sorted(parsed) or parsed[0] < 1:
            raise ConfigurationError(
                "softmatch_depths must be ascending positive integers"
            )
        return parsed


_BOOL_KEYS = {"lowercase", "rolling_context"}


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {value!r}")


def load_config(path: str | Path | None) -> RunConfig:
    config = RunConfig()
    if path is None:
        return config
    valid = {f.name: f.type for f in fields(RunConfig)}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = text.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep:
                raise ConfigurationError(
                    f"{path}: line {lineno}: expected 'key = value', got {text!r}"
                )
            if key not in valid:
                raise ConfigurationError(f"{path}: line {lineno}: unknown key {key!r}")
            _set_key(config, key, value)
    return config


def _set_key(config: RunConfig, key: str, value: str) -> None:
    current = getattr(config, key)
    try:
        if key in _BOOL_KEYS:
            setattr(config, key, _parse_bool(value))
        elif isinstance(current, int):
            setattr(config, key, int(value))
        elif isinstance(current, float):
            setattr(config, key, float(value))
        else:
            setattr(config, key, value)
    except ValueError:
        raise ConfigurationError(
            f"config key {key!r}: cannot parse {value!r}"
        ) from None


def _require_paths(config: RunConfig, keys: list[str]) -> None:
    for key in keys:
        value = getattr(config, key)
        if not value:
            raise ConfigurationError(f"config key {key!r} is required")
        if not Path(value).exists():
            raise ConfigurationError(f"config key {key!r}: no such path: {value}")


def _load_corpora(config: RunConfig):
    train = corpus_mod.ingest(config.train_corpus, lowercase=config.lowercase)
    test = corpus_mod.ingest(config.test_corpus, lowercase=config.lowercase)
    return train, test


def _load_vocab(config: RunConfig):
    try:
        scheme = Scheme(config.vocab_scheme)
    except ValueError:
        raise ConfigurationError(
            f"vocab_scheme must be 'bpe' or 'wordpiece', got {config.vocab_scheme!r}"
        ) from None
    return load_vocab(config.vocab_path, scheme,
                      end_of_text=config.end_of_text or None)


def _build_predictor(config: RunConfig, vocab, train):
    if config.predictor == "ngram":
        if config.remote_spawn or config.remote_address:
            raise ConfigurationError(
                "predictor=ngram conflicts with remote_spawn/remote_address"
            )
        unit_sequences = [
            segment_sentence(vocab, sentence) for sentence in train.sentences
        ]
        model = train_ngram(
            unit_sequences, config.ngram_order, config.ngram_discount,
            vocab_size=len(vocab),
        )
        return CachingPredictor(model)
    if config.predictor == "remote":
        if bool(config.remote_spawn) == bool(config.remote_address):
            raise ConfigurationError(
                "predictor=remote needs exactly one of remote_spawn or "
                "remote_address"
            )
        if config.workers > 1:
            raise ConfigurationError(
                "remote predictor supports a single connection; set workers = 1"
            )
        client = RemotePredictor(
            spawn=config.remote_spawn or None,
            address=config.remote_address or None,
            timeout=config.remote_timeout,
            expected_sha256=vocab.sha256(),
        )
        return CachingPredictor(client)
    raise ConfigurationError(
        f"predictor must be 'ngram' or 'remote', got {config.predictor!r}"
    )


def cmd_stats(config: RunConfig) -> int:
    _require_paths(config, ["train_corpus", "test_corpus"])
    train, test = _load_corpora(config)
    table = corpus_mod.count_frequencies(train)
    bins = corpus_mod.assign_bins(table, test.types())
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    corpus_mod.write_frequency_tsv(table, outdir / "frequency.tsv")
    corpus_mod.write_bins_tsv(bins, table, test.types(), outdir / "bins.tsv")
    corpus_mod.write_zipf_tsv(table, outdir / "zipf.tsv")
    print(f"{train.num_tokens()} train tokens, {len(table.counts)} types; "
          f"bin populations: " + ", ".join(
              f"{b.value}={bins.bin_populations[b]}"
              for b in corpus_mod.STRATIFIED_BINS))
    return 0


def cmd_train_embeddings(config: RunConfig) -> int:
    _require_paths(config, ["train_corpus"])
    train = corpus_mod.ingest(config.train_corpus, lowercase=config.lowercase)
    table = embedding_mod.train_sgns(
        train,
        dim=config.embedding_dim,
        window=config.embedding_window,
        negatives=config.embedding_negatives,
        epochs=config.embedding_epochs,
        min_count=config.embedding_min_count,
        seed=config.seed,
    )
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    out_path = outdir / "embeddings.txt"
    embedding_mod.save_embeddings(table, out_path)
    print(f"trained {len(table)} vectors of dim {table.dim} -> {out_path}")
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    _require_paths(config, ["train_corpus", "test_corpus", "vocab_path"])
    train, test = _load_corpora(config)
    vocab = _load_vocab(config)
    table = corpus_mod.count_frequencies(train)
    bins = corpus_mod.assign_bins(table, test.types())
    predictor = _build_predictor(config, vocab, train)
    rows, report = evalrun.evaluate_corpus(
        predictor, vocab, test, bins,
        k=config.topk,
        max_units=config.max_units,
        workers=config.workers,
        rolling_context=config.rolling_context,
    )
    evalrun.write_outputs(rows, report, config.run_name, config.output_dir)
    print(evalrun.format_report_text(report, config.run_name), end="")
    return 0


def _load_index(config: RunConfig):
    table = embedding_mod.load_embeddings(config.embeddings)
    if config.index_backend == "forest":
        return table, embedding_mod.RandomProjectionForest(
            table,
            num_trees=config.index_trees,
            seed=config.seed,
            search_k=config.index_search_k or None,
        )
    if config.index_backend == "exact":
        return table, embedding_mod.ExactIndex(table)
    raise ConfigurationError(
        f"index_backend must be 'exact' or 'forest', got {config.index_backend!r}"
    )


def cmd_softmatch(config: RunConfig) -> int:
    records_path = config.records or str(Path(config.output_dir) / "records.jsonl")
    for label, value in (("records", records_path), ("embeddings", config.embeddings)):
        if not value:
            raise ConfigurationError(f"config key {label!r} is required")
        if not Path(value).exists():
            raise ConfigurationError(f"config key {label!r}: no such path: {value}")
    rows = evalrun.load_event_rows(records_path)
    records = evalrun.rows_to_records(rows)
    if not records:
        raise EmptyInputError(f"{records_path} holds no usable events")
    _, index = _load_index(config)
    depths = config.depths()
    curve = metrics_mod.softmatch_rescore(records, index, depths)
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "softmatch.tsv", "w", encoding="utf-8") as fh:
        fh.write("depth\taccuracy_pct\tunique_types_pct\thits\thit_types\n")
        for depth in depths:
            point = curve[depth]
            fh.write(f"{depth}\t{point.accuracy_pct}\t{point.unique_types_pct}"
                     f"\t{point.hits}\t{point.hit_types}\n")
    with open(outdir / "softmatch.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "events": len(records),
                "type_count": len({r.target for r in records}),
                "depths": {str(d): {
                    "accuracy_pct": curve[d].accuracy_pct,
                    "unique_types_pct": curve[d].unique_types_pct,
                    "hits": curve[d].hits,
                    "hit_types": curve[d].hit_types,
                } for d in depths},
            },
            fh, sort_keys=True, indent=2)
        fh.write("\n")
    for depth in depths:
        print(f"@{depth}: accuracy {curve[depth].accuracy_pct:.2f}% "
              f"unique types {curve[depth].unique_types_pct:.2f}%")
    return 0


def cmd_paraphrase(config: RunConfig) -> int:
    _require_paths(config, ["triples", "embeddings"])
    triples = paraphrase_mod.load_triples(config.triples)
    table = embedding_mod.load_embeddings(config.embeddings)

    def scorer(a, b):
        return paraphrase_mod.sentence_similarity(a, b, table)

    tallies = paraphrase_mod.run_probes(triples, scorer)
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "contingency.tsv", "w", encoding="utf-8") as fh:
        fh.write("condition\thits\tmisses\ttotal\tskipped\n")
        for condition in paraphrase_mod.CONDITIONS:
            tally = tallies[condition]
            fh.write(f"{condition}\t{tally.hits}\t{tally.misses}\t{tally.total}"
                     f"\t{len(tally.skipped)}\n")
    result: dict = {
        "table": {c: [tallies[c].hits, tallies[c].misses]
                  for c in paraphrase_mod.CONDITIONS},
        "skipped": {c: tallies[c].skipped for c in paraphrase_mod.CONDITIONS},
    }
    try:
        statistic, p_value = paraphrase_mod.chi_square_independence(
            [[tallies["rare"].hits, tallies["rare"].misses],
             [tallies["common"].hits, tallies["common"].misses]]
        )
        result["chi_square"] = statistic
        result["p_value"] = p_value
    except DegenerateTableError as exc:
        result["chi_square"] = None
        result["p_value"] = None
        result["reason"] = str(exc)
    with open(outdir / "chi_square.json", "w", encoding="utf-8") as fh:
        json.dump(result, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for condition in paraphrase_mod.CONDITIONS:
        tally = tallies[condition]
        print(f"{condition}: hits {tally.hits} misses {tally.misses} "
              f"total {tally.total} skipped {len(tally.skipped)}")
    if result["chi_square"] is not None:
        print(f"chi-square {result['chi_square']:.4f}  p {result['p_value']:.3g}")
    else:
        print(f"chi-square not computed: {result['reason']}")
    return 0


COMMANDS = {
    "stats": cmd_stats,
    "train-embeddings": cmd_train_embeddings,
    "evaluate": cmd_evaluate,
    "softmatch": cmd_softmatch,
    "paraphrase": cmd_paraphrase,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordeval",
        description="Word-level evaluation of next-unit language models",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", default=None, help="flat key=value file")
        for f in fields(RunConfig):
            flag = "--" + f.name.replace("_", "-")
            sub.add_argument(flag, dest=f.name, default=None, metavar="VALUE")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        for f in fields(RunConfig):
            override = getattr(args, f.name)
            if override is not None:
                _set_key(config, f.name, override)
        return COMMANDS[args.command](config)
    except (ConfigurationError, FormatError, EmptyInputError,
            DegenerateInputError, DegenerateTableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except WordevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
