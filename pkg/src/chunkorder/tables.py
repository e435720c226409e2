"""Render analysis results as the CSV / JSON files of a report bundle.

Numbers are rounded half-up for display only; everything upstream stays exact.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Optional

from .corpus import ANCHORS, DEFAULT_TOKENIZER, FC_LABELS, Corpus, corpus_stats, fc_distribution
from .errors import EmptySamples, NoEligibleSentences
from .positions import chi_square_uniform, conditional_anchor_probability, relative_positions, welch_t_test
from .sequences import fc_combination_counts, pattern_counts, transition_matrix

DEFAULT_ROUNDING = {
    "ttr": 3,
    "per_line": 2,
    "proportion": 2,
    "chi2": 2,
    "p": 3,
    "t": 3,
    "df": 2,
    "condprob": 2,
    "transition": 2,
    "position": 4,
    "cosine_pct": 2,
    "projection": 6,
}


def round_half_up(value, ndigits: int) -> Decimal:
    """Half-up rounding; exact for Fractions and ints, via repr for floats."""
    if isinstance(value, Fraction):
        q = Decimal(1).scaleb(-ndigits)
        scaled = value * 10**ndigits
        whole, rem = divmod(abs(scaled.numerator), scaled.denominator)
        if 2 * rem >= scaled.denominator:
            whole += 1
        sign = -1 if scaled < 0 else 1
        return (Decimal(sign * whole) * q).quantize(q)
    return Decimal(repr(float(value)) if not isinstance(value, int) else value).quantize(
        Decimal(1).scaleb(-ndigits), rounding=ROUND_HALF_UP
    )


def fmt(value, ndigits: int) -> str:
    if value is None:
        return ""
    d = round_half_up(value, ndigits)
    return str(abs(d) if d == 0 else d)  # no "-0.00"


def fmt_p(p: Optional[float], ndigits: int) -> str:
    """p-values print like the tables: ``<0.001`` below the display resolution."""
    if p is None:
        return ""
    floor = Decimal(1).scaleb(-ndigits)
    if p < floor:
        return f"<{floor}"
    return fmt(p, ndigits)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _rounding(r):
    out = dict(DEFAULT_ROUNDING)
    out.update(r or {})
    return out


def stats_json(c: Corpus, rounding=None, tokenizer=None) -> str:
    r = _rounding(rounding)
    st = corpus_stats(c, tokenizer)
    return dump_json(
        {
            "corpus": c.name,
            "language": c.language,
            "texts": st.texts,
            "tokenizer": tokenizer or DEFAULT_TOKENIZER[c.language],
            "tokens": st.tokens,
            "types": st.types,
            "ttr": float(round_half_up(st.ttr, r["ttr"])) if st.ttr is not None else None,
            "lines": st.lines,
            "tags": st.tags,
            "tag_per_line": float(round_half_up(st.tag_per_line, r["per_line"])),
            "fcs": st.fcs,
            "fc_per_line": float(round_half_up(st.fc_per_line, r["per_line"])),
        }
    )


def fc_distribution_csv(c: Corpus, rounding=None) -> str:
    r = _rounding(rounding)
    rows = [(row.label.value, row.frequency, fmt(row.proportion, r["proportion"])) for row in fc_distribution(c)]
    return _csv(("label", "frequency", "proportion"), rows)


def positions_csv(c: Corpus, rounding=None) -> str:
    r = _rounding(rounding)
    rows = []
    for lab in FC_LABELS:
        for s in relative_positions(c, lab):
            rows.append((lab.value, s.sentence_id, fmt(s.rel_pos, r["position"])))
    return _csv(("label", "sentence_id", "rel_pos"), rows)


TESTS_HEADER = ("label", "chi2", "df", "p", "t", "t_df", "t_p")


def tests_csv(c: Corpus, rounding=None) -> str:
    """Per-label chi-square against an even front/back split; t columns stay empty."""
    r = _rounding(rounding)
    rows = []
    for lab in FC_LABELS:
        samples = relative_positions(c, lab)
        try:
            res = chi_square_uniform(samples)
        except EmptySamples:
            rows.append((lab.value, "", "", "", "", "", ""))
            continue
        rows.append((lab.value, fmt(res.statistic, r["chi2"]), int(res.df), fmt_p(res.p_value, r["p"]), "", "", ""))
    return _csv(TESTS_HEADER, rows)


def cross_tests_csv(a: Corpus, b: Corpus, rounding=None) -> str:
    """Per-label Welch t-test of relative positions, ``a`` minus ``b``."""
    r = _rounding(rounding)
    rows = []
    for lab in FC_LABELS:
        try:
            res = welch_t_test(relative_positions(a, lab), relative_positions(b, lab))
        except EmptySamples:
            rows.append((lab.value, "", "", "", "", "", ""))
            continue
        t = "" if abs(res.statistic) == float("inf") else fmt(res.statistic, r["t"])
        rows.append((lab.value, "", "", "", t, fmt(res.df, r["df"]), fmt_p(res.p_value, r["p"])))
    return _csv(TESTS_HEADER, rows)


def condprob_csv(c: Corpus, rounding=None) -> str:
    """Before/after shares of every FC around S, V, O.

    ``p_after`` is written as one minus the displayed ``p_before`` so each row
    sums to exactly 1 as printed.
    """
    r = _rounding(rounding)
    rows = []
    for fc in FC_LABELS:
        for anchor in ANCHORS:
            try:
                ap = conditional_anchor_probability(c, fc, anchor)
            except NoEligibleSentences:
                rows.append((fc.value, anchor.value, "", "", 0))
                continue
            before = round_half_up(ap.p_before, r["condprob"])
            rows.append((fc.value, anchor.value, str(before), str(Decimal(1) - before), ap.n_pairs))
    return _csv(("fc", "anchor", "p_before", "p_after", "n"), rows)


def patterns_csv(c: Corpus, top_k: Optional[int] = 20) -> str:
    return _csv(("pattern", "frequency"), pattern_counts(c, top_k).as_strings())


def combos_csv(c: Corpus, top_k: Optional[int] = 50, min_len: int = 2) -> str:
    return _csv(("combination", "frequency"), fc_combination_counts(c, min_len, top_k).as_strings())


def transitions_csv(c: Corpus, rounding=None) -> str:
    r = _rounding(rounding)
    tm = transition_matrix(c)
    rows = []
    for a in FC_LABELS:
        for b in FC_LABELS:
            rows.append((a.value, b.value, tm.count(a, b), fmt(tm.prob(a, b), r["transition"])))
    return _csv(("from", "to", "count", "prob"), rows)


def transitions_matrix_csv(c: Corpus, rounding=None) -> str:
    """Plain 8x8 probability grid; rows that never start a transition are blank."""
    r = _rounding(rounding)
    tm = transition_matrix(c)
    rows = [[a.value] + [fmt(tm.prob(a, b), r["transition"]) for b in FC_LABELS] for a in FC_LABELS]
    return _csv(["from"] + [lab.value for lab in FC_LABELS], rows)


def similarity_csv(rows, rounding=None) -> str:
    r = _rounding(rounding)
    return _csv(("subset_a", "subset_b", "cosine_pct"), [(a, b, fmt(pct, r["cosine_pct"])) for a, b, pct in rows])


def projection_csv(es, proj, rounding=None) -> str:
    r = _rounding(rounding)
    rows = []
    for eid in proj.ids:
        x, y = proj.coords[eid][:2]
        rows.append((eid, fmt(x, r["projection"]), fmt(y, r["projection"]), ";".join(sorted(es.entries[eid].tags))))
    return _csv(("id", "x", "y", "tags"), rows)
