from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chunkorder.corpus import (
    FC_LABELS,
    Corpus,
    CorpusStats,
    Sentence,
    TagLabel,
    corpus_stats,
    fc_distribution,
    load_corpus,
    normalize_whitespace,
    parse_corpus,
    parse_sentence,
    serialize_sentence,
    tokenize,
)
from chunkorder.errors import (
    CorpusLoadError,
    DuplicateId,
    EmptyChunk,
    EmptyCorpus,
    EncodingError,
    IoFailure,
    NestedTag,
    StrayClosingTag,
    UnclosedTag,
    UnknownLabel,
)
from chunkorder.tables import round_half_up

from conftest import fixture_path, read_json

NEAL = (
    "<S>Neal</S><V>will assume</V><O>the helm of the nation's immigration court system</O>"
    "<time>at a time when the Biden administration is wrestling with increasing arrivals</time>."
)


def test_tag_label_closed_set():
    assert len(TagLabel) == 11
    assert [lab.value for lab in FC_LABELS] == [
        "time", "place", "manner", "cause", "effect", "condition", "purpose", "concession"
    ]
    assert TagLabel.parse("TIME") is TagLabel.TIME
    assert TagLabel.parse("s") is TagLabel.S
    with pytest.raises(UnknownLabel):
        TagLabel.parse("location")


def test_parse_news_sentence():
    s = parse_sentence(NEAL)
    assert [c.label.value for c in s.chunks] == ["S", "V", "O", "time"]
    assert s.chunks[0].text == "Neal"
    assert [g.text for g in s.gaps] == ["."]
    for c in s.chunks:
        assert NEAL[c.char_start:c.char_end] == c.text


def test_parse_empty_line():
    s = parse_sentence("")
    assert s.chunks == () and s.gaps == ()


def test_parse_gap_kept():
    s = parse_sentence("<time>Friday</time> he <V>left</V>", "lenient")
    assert s.labels == (TagLabel.TIME, TagLabel.V)
    assert [g.text.strip() for g in s.gaps] == ["he"]


def test_label_case_insensitive_output_canonical():
    s = parse_sentence("<TIME>Friday</Time>, <s>he</S> <v>left</v>")
    assert s.labels == (TagLabel.TIME, TagLabel.S, TagLabel.V)
    assert serialize_sentence(s) == "<time>Friday</time>, <S>he</S> <V>left</V>"


@pytest.mark.parametrize(
    "raw, exc",
    [
        ("<S>he <V>left</V></S>", NestedTag),
        ("<S>he</S> <V>left", UnclosedTag),
        ("<where>here</where>", UnknownLabel),
        ("he</S> left", StrayClosingTag),
        ("<S>he</S></S>", StrayClosingTag),
        ("<S>he</V>", StrayClosingTag),
        ("<S></S>", EmptyChunk),
    ],
)
def test_strict_errors(raw, exc):
    with pytest.raises(exc):
        parse_sentence(raw, "strict")


def test_nested_is_error_even_when_lenient():
    with pytest.raises(NestedTag):
        parse_sentence("<time>when <S>he</S> came</time>", "lenient")


def test_lenient_unknown_label_becomes_gap():
    notes = []
    s = parse_sentence("<where>here</where> <S>we</S>", "lenient", diagnostics=notes)
    assert s.labels == (TagLabel.S,)
    assert s.gaps[0].text == "<where>here</where> "
    assert [k for k, _ in notes] == ["UnknownLabel", "UnknownLabel"]
    assert serialize_sentence(s) == "<where>here</where> <S>we</S>"


def test_lenient_stray_and_unclosed():
    notes = []
    s = parse_sentence("a</S> <V>went</V> <O>home", "lenient", diagnostics=notes)
    assert s.labels == (TagLabel.V,)
    assert {k for k, _ in notes} == {"StrayClosingTag", "UnclosedTag"}
    assert serialize_sentence(s) == "a</S> <V>went</V> <O>home"


def test_serialize_examples():
    s = Sentence.from_pieces("x", [("time", "Friday"), (None, ", "), ("S", "he")])
    assert serialize_sentence(s) == "<time>Friday</time>, <S>he</S>"
    assert serialize_sentence(parse_sentence("hello")) == "hello"


def test_parse_corpus_three_lines():
    lines = ["<S>a</S> <V>b</V>", "<S>c</S>", "<time>now</time> <V>go</V>"]
    corpus, diags = parse_corpus(lines, "english", "strict", "t")
    assert len(corpus) == 3 and diags == []
    assert [s.id for s in corpus] == ["t-L1", "t-L2", "t-L3"]


def test_parse_corpus_nested_lenient_and_strict():
    lines = ["<S>a</S>", "<S>b <V>c</V></S>", "<V>d</V>"]
    corpus, diags = parse_corpus(lines, "english", "lenient", "t")
    assert len(corpus) == 2
    assert len(diags) == 1 and diags[0].line == 2 and diags[0].kind == "NestedTag"
    with pytest.raises(CorpusLoadError) as info:
        parse_corpus(lines, "english", "strict", "t")
    assert info.value.diagnostics[0].line == 2


def test_parse_corpus_id_prefix_and_blank_lines():
    corpus, _ = parse_corpus(["doc-7\t<S>a</S>", "", "<V>b</V>\r\n"], "en", "strict", "t")
    assert [s.id for s in corpus] == ["doc-7", "t-L3"]
    assert corpus.language == "english"


def test_parse_corpus_rejects_bad_utf8():
    with pytest.raises(EncodingError):
        parse_corpus([b"<S>ok</S>\n", b"\xff\xfe bad\n"], "english")


def test_load_corpus_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_corpus(tmp_path / "nope.txt", "english")


def test_duplicate_ids_rejected():
    s = parse_sentence("<S>a</S>", sentence_id="x")
    with pytest.raises(DuplicateId):
        Corpus("english", "c", (s, s))


@pytest.mark.parametrize("name, hand_count", [("mini_zh", 121), ("mini_en", 144)])
def test_fixture_chunk_counts_and_round_trip(name, hand_count):
    path = fixture_path(f"{name}.txt")
    corpus, _ = load_corpus(path, "chinese" if name.endswith("zh") else "english")
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    assert len(corpus) == len(lines)
    assert sum(len(s.chunks) for s in corpus) == hand_count
    for s, line in zip(corpus, lines):
        body = line.split("\t", 1)[1] if "\t" in line else line
        assert normalize_whitespace(serialize_sentence(s)) == normalize_whitespace(body)
        assert parse_sentence(serialize_sentence(s), sentence_id=s.id) == s


# -- round-trip property -------------------------------------------------------

_text = st.text(st.characters(blacklist_characters="<>\t\r\n", blacklist_categories=("Cs",)), min_size=1, max_size=12)
_piece = st.tuples(st.one_of(st.none(), st.sampled_from([lab.value for lab in TagLabel])), _text)


@given(st.lists(_piece, max_size=8))
def test_round_trip_property(pieces):
    s = Sentence.from_pieces("p", pieces)
    text = serialize_sentence(s)
    back = parse_sentence(text, "strict", "p")
    assert back == s
    assert serialize_sentence(back) == text
    # flatness
    for a, b in zip(back.chunks, back.chunks[1:]):
        assert a.char_end < b.char_start
    assert all(c.label in TagLabel for c in back.chunks)


# -- statistics ----------------------------------------------------------------


def test_tokenizers():
    assert tokenize("The U.S.-led talks didn't stall, 3 times.") == ["The", "U", "S", "led", "talks", "didn't", "stall", "3", "times"]
    assert tokenize("李克强在2019年作GDP报告", "cjk_char") == ["李", "克", "强", "在", "2019", "年", "作", "GDP", "报", "告"]


def test_stats_one_line():
    corpus, _ = parse_corpus(["a a b"], "english")
    st_ = corpus_stats(corpus, "whitespace")
    assert (st_.tokens, st_.types) == (3, 2)
    assert st_.ttr == Fraction(2, 3)
    assert str(round_half_up(st_.ttr, 3)) == "0.667"


def test_stats_casefold_english_only():
    en, _ = parse_corpus(["The the THE"], "english")
    assert corpus_stats(en).types == 1
    zh, _ = parse_corpus(["GDP gdp"], "chinese")
    assert corpus_stats(zh).types == 2


def test_stats_reported_corpus_arithmetic():
    english_counts = CorpusStats(texts=220, tokens=90131, types=12502, lines=2649, tags=17865, fcs=5846)
    assert str(round_half_up(english_counts.ttr, 3)) == "0.139"
    assert str(round_half_up(english_counts.tag_per_line, 2)) == "6.74"
    assert str(round_half_up(english_counts.fc_per_line, 2)) == "2.21"
    chinese_counts = CorpusStats(texts=44, tokens=88539, types=12341, lines=1735, tags=26162, fcs=8389)
    assert str(round_half_up(chinese_counts.ttr, 3)) == "0.139"
    assert str(round_half_up(chinese_counts.tag_per_line, 2)) == "15.08"
    assert str(round_half_up(chinese_counts.fc_per_line, 2)) == "4.84"


def test_stats_identities_exact(mini_zh):
    s = corpus_stats(mini_zh)
    assert s.ttr * s.tokens == s.types
    assert s.tag_per_line * s.lines == s.tags
    assert s.fc_per_line * s.lines == s.fcs
    assert 0 <= s.fcs <= s.tags
    assert (s.lines, s.tags, s.fcs) == (30, 121, 47)


def test_stats_empty_corpus():
    with pytest.raises(EmptyCorpus):
        corpus_stats(Corpus("english", "empty"))


def test_fc_distribution_small():
    corpus, _ = parse_corpus(["<time>a</time> <time>b</time> <place>c</place>"], "english")
    rows = {r.label.value: r for r in fc_distribution(corpus)}
    assert rows["time"].frequency == 2 and rows["time"].proportion == Fraction(2, 3)
    assert rows["place"].frequency == 1 and rows["place"].proportion == Fraction(1, 3)
    assert str(round_half_up(rows["time"].proportion, 3)) == "0.667"


def test_fc_distribution_share_rounding():
    assert str(round_half_up(Fraction(3293, 8389), 2)) == "0.39"


def test_fc_distribution_all_zero():
    corpus, _ = parse_corpus(["<S>a</S> <V>b</V>"], "english")
    rows = fc_distribution(corpus)
    assert len(rows) == 8 and all(r.frequency == 0 and r.proportion == 0 for r in rows)


@pytest.mark.parametrize("name", ["mini_zh", "mini_en"])
def test_fc_distribution_matches_hand_count(name, request):
    corpus = request.getfixturevalue(name)
    expected = read_json(f"{name}.expected.json")
    rows = fc_distribution(corpus)
    for r in rows:
        assert r.frequency == expected[r.label.value]["frequency"]
        assert r.proportion == Fraction(expected[r.label.value]["proportion"])
    assert sum(r.proportion for r in rows) == 1
    freqs = [r.frequency for r in rows]
    assert freqs == sorted(freqs, reverse=True)
    st_ = corpus_stats(corpus)
    assert (st_.lines, st_.tags, st_.fcs) == (expected["lines"], expected["tags"], expected["fcs"])
