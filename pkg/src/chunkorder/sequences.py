"""Tag sequences, pattern and combination counts, FC transition matrices."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .corpus import FC_LABELS, Corpus, Sentence, TagLabel, pattern_string

FC_INDEX = {lab: i for i, lab in enumerate(FC_LABELS)}


@dataclass(frozen=True)
class TagSequence:
    sentence_id: str
    labels: tuple[TagLabel, ...]

    @property
    def fc_projection(self) -> tuple[TagLabel, ...]:
        return tuple(lab for lab in self.labels if lab.is_fc)


def tag_sequence(s: Sentence) -> TagSequence:
    return TagSequence(s.id, s.labels)


@dataclass(frozen=True)
class PatternTable:
    rows: tuple[tuple[tuple[TagLabel, ...], int], ...]
    total: int  # frequency mass before top-k truncation

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def as_strings(self):
        return [(pattern_string(p), f) for p, f in self.rows]


def _rank(counts: Counter, top_k: Optional[int]) -> PatternTable:
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], [lab.value for lab in kv[0]]))
    if top_k is not None:
        rows = rows[:top_k]
    return PatternTable(tuple(rows), sum(counts.values()))


def pattern_counts(c: Corpus, top_k: Optional[int] = None) -> PatternTable:
    """Count whole tag sequences (S/V/O included), one per non-empty sentence."""
    counts = Counter(s.labels for s in c.sentences if s.chunks)
    return _rank(counts, top_k)


def fc_combination_counts(c: Corpus, min_len: int = 2, top_k: Optional[int] = None) -> PatternTable:
    """Count each sentence's FC-only projection, repeats kept, when it has >= min_len chunks."""
    counts = Counter()
    for s in c.sentences:
        proj = tag_sequence(s).fc_projection
        if len(proj) >= min_len:
            counts[proj] += 1
    return _rank(counts, top_k)


@dataclass(frozen=True)
class TransitionMatrix:
    counts: tuple[tuple[int, ...], ...]

    @classmethod
    def zeros(cls):
        n = len(FC_LABELS)
        return cls(tuple((0,) * n for _ in range(n)))

    @property
    def row_totals(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @property
    def undefined_rows(self) -> tuple[TagLabel, ...]:
        return tuple(FC_LABELS[i] for i, t in enumerate(self.row_totals) if t == 0)

    def exact_probs(self) -> list[list[Fraction]]:
        """Row-normalized counts; undefined rows are all zero."""
        return [
            [Fraction(x, total) if total else Fraction(0) for x in row]
            for row, total in zip(self.counts, self.row_totals)
        ]

    @property
    def probs(self) -> list[list[float]]:
        return [[float(p) for p in row] for row in self.exact_probs()]

    def count(self, a, b) -> int:
        return self.counts[FC_INDEX[_lab(a)]][FC_INDEX[_lab(b)]]

    def prob(self, a, b) -> Optional[Fraction]:
        """P(next = b | current = a), or None if ``a`` never starts a transition."""
        i = FC_INDEX[_lab(a)]
        total = self.row_totals[i]
        return Fraction(self.counts[i][FC_INDEX[_lab(b)]], total) if total else None

    def top(self, k: int = 10):
        """Highest transition probabilities as ``(from, to, prob)``; ties by count then label order."""
        cells = []
        probs = self.exact_probs()
        for i, a in enumerate(FC_LABELS):
            for j, b in enumerate(FC_LABELS):
                if self.counts[i][j]:
                    cells.append((a, b, probs[i][j], self.counts[i][j]))
        cells.sort(key=lambda t: (-t[2], -t[3], FC_INDEX[t[0]], FC_INDEX[t[1]]))
        return [(a, b, p) for a, b, p, _ in cells[:k]]

    def __add__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        return TransitionMatrix(
            tuple(tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(self.counts, other.counts))
        )


def _lab(x) -> TagLabel:
    return x if isinstance(x, TagLabel) else TagLabel.parse(x)


def transition_matrix(c: Corpus) -> TransitionMatrix:
    n = len(FC_LABELS)
    counts = [[0] * n for _ in range(n)]
    for s in c.sentences:
        proj = tag_sequence(s).fc_projection
        for a, b in zip(proj, proj[1:]):
            counts[FC_INDEX[a]][FC_INDEX[b]] += 1
    return TransitionMatrix(tuple(tuple(row) for row in counts))
