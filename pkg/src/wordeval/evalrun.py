"""Evaluation loop over a test corpus plus report and record-log writers.

For every test sentence of n words the predictor is queried from the second
word onward: n-1 events, each conditioned on the gold word history. Every
event yields a per-event log row; rows with status "ok" carry enough data to
recompute every headline metric without touching the predictor again (the
soft-match command relies on this). Events aborted by transport failures and
events with unsegmentable targets are excluded from metric denominators and
reported separately.

All outputs are deterministic: reruns with the same inputs are byte
identical. Fixed filenames under the output directory: report.json,
report.txt, coverage_tokens.tsv, coverage_types.tsv, records.jsonl.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .corpus import Bin, BinAssignment, Corpus, STRATIFIED_BINS
from .errors import CoverageError, SessionClosedError, TransportError
from .metrics import (
    CoverageCell,
    EvalReport,
    PredictionRecord,
    StratifiedCoverage,
    accuracy,
    stratified_coverage,
    type_diversity,
    word_perplexity,
)
from .predictor import Predictor
from .tokenizer import SubwordVocab, segment
from .worddecode import WordEvent, decode_word_event

STATUS_OK = "ok"
STATUS_ABORTED = "aborted"
STATUS_UNSEGMENTABLE = "unsegmentable"


@dataclass
class EventRow:
    """One line of the per-event record log."""

    sentence: int
    position: int
    target: str
    bin: Bin
    status: str
    greedy_hit: bool = False
    topk_hit: bool = False
    greedy_word: str = ""
    word_logprob: float = 0.0
    units: int = 0
    exhausted: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "sentence": self.sentence,
            "position": self.position,
            "target": self.target,
            "bin": self.bin.value,
            "status": self.status,
            "greedy_hit": self.greedy_hit,
            "topk_hit": self.topk_hit,
            "greedy_word": self.greedy_word,
            "word_logprob": self.word_logprob,
            "units": self.units,
            "exhausted": self.exhausted,
        }, sort_keys=True)

    def to_record(self) -> PredictionRecord:
        return PredictionRecord(
            target=self.target,
            target_bin=self.bin,
            greedy_hit=self.greedy_hit,
            topk_hit=self.topk_hit,
            greedy_word=self.greedy_word,
            word_logprob=self.word_logprob,
        )


def rows_to_records(rows: list[EventRow]) -> list[PredictionRecord]:
    return [row.to_record() for row in rows if row.status == STATUS_OK]


def load_event_rows(path: str | Path) -> list[EventRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            rows.append(EventRow(
                sentence=obj["sentence"],
                position=obj["position"],
                target=obj["target"],
                bin=Bin(obj["bin"]),
                status=obj["status"],
                greedy_hit=obj["greedy_hit"],
                topk_hit=obj["topk_hit"],
                greedy_word=obj["greedy_word"],
                word_logprob=obj["word_logprob"],
                units=obj["units"],
                exhausted=obj["exhausted"],
            ))
    return rows


def _evaluate_sentence(
    predictor: Predictor,
    vocab: SubwordVocab,
    bins: BinAssignment,
    sentence: list[str],
    sentence_index: int,
    k: int,
    max_units: int,
    initial_context: list[int] | None = None,
) -> tuple[list[EventRow], list[int], bool]:
    """Decode all events of one sentence; returns (rows, final context, closed)."""
    rows: list[EventRow] = []
    context: list[int] = list(initial_context) if initial_context else []
    context_broken = False
    closed = False
    for position in range(len(sentence)):
        word = sentence[position]
        if position >= 1 and not closed:
            target_bin = bins.bin_for(word)
            if context_broken:
                rows.append(EventRow(sentence_index, position, word, target_bin,
                                     STATUS_UNSEGMENTABLE))
            else:
                try:
                    event = WordEvent(
                        history=tuple(sentence[:position]),
                        target=word,
                        target_segmentation=segment(vocab, word),
                        context_units=tuple(context),
                    )
                except CoverageError:
                    rows.append(EventRow(sentence_index, position, word,
                                         target_bin, STATUS_UNSEGMENTABLE))
                else:
                    try:
                        outcome = decode_word_event(
                            predictor, vocab, event, k=k, max_units=max_units
                        )
                    except SessionClosedError:
                        rows.append(EventRow(sentence_index, position, word,
                                             target_bin, STATUS_ABORTED))
                        closed = True
                    except TransportError:
                        rows.append(EventRow(sentence_index, position, word,
                                             target_bin, STATUS_ABORTED))
                    else:
                        rows.append(EventRow(
                            sentence_index, position, word, target_bin, STATUS_OK,
                            greedy_hit=outcome.greedy_hit,
                            topk_hit=outcome.topk_hit,
                            greedy_word=outcome.greedy_word,
                            word_logprob=outcome.word_logprob,
                            units=outcome.units_consumed,
                            exhausted=outcome.exhausted,
                        ))
        try:
            context.extend(segment(vocab, word, allow_unknown=True).unit_ids)
        except CoverageError:
            # History can no longer be encoded; later events in this
            # sentence cannot be evaluated faithfully.
            context_broken = True
    return rows, context, closed


def evaluate_corpus(
    predictor: Predictor,
    vocab: SubwordVocab,
    test: Corpus,
    bins: BinAssignment,
    k: int = 10,
    max_units: int = 16,
    workers: int = 1,
    rolling_context: bool = False,
) -> tuple[list[EventRow], EvalReport]:
    """Decode every word event of the test corpus and aggregate the report."""
    rows: list[EventRow] = []
    if rolling_context or workers <= 1:
        context: list[int] = []
        for index, sentence in enumerate(test.sentences):
            sentence_rows, context, closed = _evaluate_sentence(
                predictor, vocab, bins, sentence, index, k, max_units,
                initial_context=context if rolling_context else None,
            )
            rows.extend(sentence_rows)
            if not rolling_context:
                context = []
            if closed:
                break
    else:
        # Sentences are independent without rolling context; merge in order.
        def run_one(indexed):
            index, sentence = indexed
            return _evaluate_sentence(
                predictor, vocab, bins, sentence, index, k, max_units
            )

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for sentence_rows, _, closed in pool.map(
                run_one, enumerate(test.sentences)
            ):
                rows.extend(sentence_rows)
                if closed:
                    break
    return rows, build_report(rows, bins, k)


def build_report(rows: list[EventRow], bins: BinAssignment, k: int) -> EvalReport:
    """Aggregate log rows (the replay path used by reruns and tests)."""
    records = rows_to_records(rows)
    aborted = sum(1 for r in rows if r.status == STATUS_ABORTED)
    unsegmentable = sum(1 for r in rows if r.status == STATUS_UNSEGMENTABLE)
    if not records:
        empty = StratifiedCoverage(
            token={b: CoverageCell(0, 0) for b in STRATIFIED_BINS},
            types={b: CoverageCell(0, 0) for b in STRATIFIED_BINS},
            unbinned_token=CoverageCell(0, 0),
            unbinned_types=0,
        )
        return EvalReport(0, k, 0.0, 0.0, 0.0, 0.0, 0, float("nan"), empty,
                          dict(bins.bin_populations), {}, aborted, unsegmentable)
    top1, topk = accuracy(records)
    type_count = len({r.target for r in records})
    t1, tk = type_diversity(records, type_count)
    ppx = word_perplexity(records)
    coverage = stratified_coverage(records, bins)
    return EvalReport(
        events=len(records),
        k=k,
        top1=top1,
        topk=topk,
        t1=t1,
        tk=tk,
        type_count=type_count,
        ppx=ppx,
        coverage=coverage,
        bin_populations=dict(bins.bin_populations),
        aborted=aborted,
        unsegmentable=unsegmentable,
    )


def report_to_dict(report: EvalReport, run_name: str) -> dict:
    records_n = report.events
    coverage = {}
    for b in STRATIFIED_BINS:
        token = report.coverage.token[b]
        types = report.coverage.types[b]
        coverage[b.value] = {
            "token_hits": token.hits,
            "token_events": token.total,
            "token_pct": token.pct,
            "type_hits": types.hits,
            "type_population": types.total,
            "type_pct": types.pct,
        }
    coverage["unbinned"] = {
        "token_hits": report.coverage.unbinned_token.hits,
        "token_events": report.coverage.unbinned_token.total,
        "token_pct": report.coverage.unbinned_token.pct,
        "type_hits": report.coverage.unbinned_types,
    }
    return {
        "run": run_name,
        "k": report.k,
        "events": records_n,
        "aborted": report.aborted,
        "unsegmentable": report.unsegmentable,
        "top1_pct": report.top1,
        "topk_pct": report.topk,
        "t1_pct": report.t1,
        "tk_pct": report.tk,
        "type_count": report.type_count,
        "ppx": report.ppx,
        "coverage": coverage,
    }


def format_report_text(report: EvalReport, run_name: str) -> str:
    """Human-readable table: run | top1 (topk) | T1 (Tk) | ppx, then bins."""
    lines = []
    header = f"{'run':<16} {'top1 (top' + str(report.k) + ')':>16} "
    header += f"{'T1 (T' + str(report.k) + ')':>16} {'ppx':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    lines.append(
        f"{run_name:<16} "
        f"{report.top1:>7.2f} ({report.topk:>5.2f}) "
        f"{report.t1:>7.2f} ({report.tk:>5.2f}) "
        f"{report.ppx:>10.2f}"
    )
    lines.append("")
    lines.append(f"events: {report.events}  aborted: {report.aborted}  "
                 f"unsegmentable: {report.unsegmentable}  "
                 f"type denominator: {report.type_count}")
    lines.append("")
    lines.append(f"{'bin':<10} {'token hits':>12} {'token %':>9} "
                 f"{'type hits':>11} {'n':>7} {'type %':>9}")
    for b in STRATIFIED_BINS:
        token = report.coverage.token[b]
        types = report.coverage.types[b]
        lines.append(
            f"{b.value:<10} {token.hits:>6}/{token.total:<5} {token.pct:>8.2f} "
            f"{types.hits:>6}/{types.total:<4} {types.total:>7} {types.pct:>8.2f}"
        )
    unb = report.coverage.unbinned_token
    lines.append(f"{'unbinned':<10} {unb.hits:>6}/{unb.total:<5} {unb.pct:>8.2f} "
                 f"{report.coverage.unbinned_types:>6} types hit")
    return "\n".join(lines) + "\n"


def write_outputs(
    rows: list[EventRow], report: EvalReport, run_name: str, outdir: str | Path
) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "records.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row.to_json() + "\n")
    with open(outdir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report, run_name), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(outdir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(format_report_text(report, run_name))
    with open(outdir / "coverage_tokens.tsv", "w", encoding="utf-8") as fh:
        fh.write("bin\thits\tevents\tpct\n")
        for b in STRATIFIED_BINS:
            cell = report.coverage.token[b]
            fh.write(f"{b.value}\t{cell.hits}\t{cell.total}\t{cell.pct}\n")
        unb = report.coverage.unbinned_token
        fh.write(f"unbinned\t{unb.hits}\t{unb.total}\t{unb.pct}\n")
    with open(outdir / "coverage_types.tsv", "w", encoding="utf-8") as fh:
        fh.write("bin\thit_types\tpopulation\tpct\n")
        for b in STRATIFIED_BINS:
            cell = report.coverage.types[b]
            fh.write(f"{b.value}\t{cell.hits}\t{cell.total}\t{cell.pct}\n")
        fh.write(f"unbinned\t{report.coverage.unbinned_types}\t\t\n")
