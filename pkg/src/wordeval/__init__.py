"""Word-level evaluation of next-unit language models.

Measures prediction quality at whole-word granularity regardless of the
model's subword scheme: greedy and top-k word accuracy, type diversity,
word-level perplexity, frequency-stratified coverage, embedding soft-match
rescoring, and a rare-word paraphrase probe.
"""

__version__ = "0.1.0"
