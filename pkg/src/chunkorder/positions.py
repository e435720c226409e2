"""Relative positions of functional chunks and the tests run on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .corpus import ANCHORS, Corpus, TagLabel
from .errors import EmptySamples, NoEligibleSentences
from .special import chi2_sf, student_t_two_sided


@dataclass(frozen=True)
class PositionSample:
    label: TagLabel
    rel_pos: float
    sentence_id: str


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float
    p_value: float
    n: tuple
    flags: tuple = ()

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class AnchorProbability:
    fc: TagLabel
    anchor: TagLabel
    n_before: int
    n_pairs: int

    @property
    def p_before(self) -> Fraction:
        return Fraction(self.n_before, self.n_pairs)

    @property
    def p_after(self) -> Fraction:
        return 1 - self.p_before


def _fc(label) -> TagLabel:
    lab = label if isinstance(label, TagLabel) else TagLabel.parse(label)
    if not lab.is_fc:
        raise ValueError(f"{lab.value!r} is not a functional-chunk label")
    return lab


def _anchor(label) -> TagLabel:
    lab = label if isinstance(label, TagLabel) else TagLabel.parse(label)
    if lab not in ANCHORS:
        raise ValueError(f"{lab.value!r} is not one of S, V, O")
    return lab


def relative_positions(c: Corpus, label) -> list[PositionSample]:
    """Chunk-index position of every ``label`` chunk, scaled to [0, 1].

    The index counts all chunks (S/V/O included); a sentence with a single
    chunk puts it at 0.5.
    """
    label = _fc(label)
    out = []
    for s in c.sentences:
        n = len(s.chunks)
        for i, ch in enumerate(s.chunks):
            if ch.label is label:
                out.append(PositionSample(label, i / (n - 1) if n > 1 else 0.5, s.id))
    return out


def _values(samples: Iterable[Union[PositionSample, float]]) -> list[float]:
    return [s.rel_pos if isinstance(s, PositionSample) else float(s) for s in samples]


def chi_square_bins(front: int, back: int) -> TestResult:
    """Chi-square goodness of fit of two bins against an even split (df = 1)."""
    n = front + back
    if n < 1:
        raise EmptySamples("chi-square needs at least one observation")
    statistic = Fraction((front - back) ** 2, n)  # == sum((O - n/2)^2 / (n/2))
    return TestResult(float(statistic), 1.0, chi2_sf(float(statistic), 1), (front, back))


def chi_square_uniform(samples) -> TestResult:
    """Front (rel_pos < 0.5) vs back (rel_pos >= 0.5) test against uniformity.

    ``TestResult.n`` holds the two bin counts.
    """
    values = _values(samples)
    if not values:
        raise EmptySamples("chi-square needs at least one position sample")
    front = sum(1 for v in values if v < 0.5)
    return chi_square_bins(front, len(values) - front)


def _mean_var(xs: Sequence[float]):
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, var


def welch_t_test(a, b) -> TestResult:
    """Two-sided Welch (unequal variance) t-test.

    If both samples are constant the statistic is undefined; the result is
    flagged ``degenerate_variance`` with p = 1 for equal constants and p = 0
    otherwise.
    """
    a, b = _values(a), _values(b)
    if len(a) < 2 or len(b) < 2:
        raise EmptySamples(f"Welch t-test needs two observations per sample, got {len(a)} and {len(b)}")
    na, nb = len(a), len(b)
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0:
        df = float(na + nb - 2)
        if ma == mb:
            return TestResult(0.0, df, 1.0, (na, nb), ("degenerate_variance",))
        return TestResult(math.copysign(math.inf, ma - mb), df, 0.0, (na, nb), ("degenerate_variance",))
    t = (ma - mb) / math.sqrt(se2)
    # Welch-Satterthwaite on normalized weights; squaring tiny variances underflows
    wa, wb = sa / se2, sb / se2
    df = 1.0 / (wa * wa / (na - 1) + wb * wb / (nb - 1))
    return TestResult(t, df, student_t_two_sided(t, df), (na, nb))


def conditional_anchor_probability(c: Corpus, fc, anchor) -> AnchorProbability:
    """How often an ``fc`` chunk comes before the first ``anchor`` chunk.

    Only sentences with at least one of each take part; every ``fc``
    occurrence in them is one pair.
    """
    fc, anchor = _fc(fc), _anchor(anchor)
    before = pairs = 0
    for s in c.sentences:
        labels = s.labels
        if fc not in labels or anchor not in labels:
            continue
        first = labels.index(anchor)
        for i, lab in enumerate(labels):
            if lab is fc:
                pairs += 1
                before += i < first
    if not pairs:
        raise NoEligibleSentences(f"no sentence in {c.name!r} contains both <{fc.value}> and <{anchor.value}>")
    return AnchorProbability(fc, anchor, before, pairs)
