"""Tag scheme, inline-tag parser/serializer and descriptive corpus statistics.

An annotated line looks like::

    <time>On Tuesday</time>, <S>the Senate</S> <V>passed</V> <O>the bill</O>.

Tags are flat: a chunk never contains another chunk. Text outside any chunk is
kept as a gap so that a sentence always serializes back to its source line.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional

from .errors import (
    CorpusLoadError,
    DuplicateId,
    EmptyChunk,
    EmptyCorpus,
    EncodingError,
    IoFailure,
    NestedTag,
    ParseError,
    StrayClosingTag,
    UnclosedTag,
    UnknownLabel,
)


class TagLabel(str, Enum):
    TIME = "time"
    PLACE = "place"
    MANNER = "manner"
    CAUSE = "cause"
    EFFECT = "effect"
    CONDITION = "condition"
    PURPOSE = "purpose"
    CONCESSION = "concession"
    S = "S"
    V = "V"
    O = "O"

    def __str__(self):
        return self.value

    @property
    def is_fc(self):
        return self not in ANCHORS

    @property
    def tag(self):
        return f"<{self.value}>"

    @classmethod
    def parse(cls, name: str) -> "TagLabel":
        try:
            return _BY_LOWER[name.lower()]
        except KeyError:
            raise UnknownLabel(f"unknown label {name!r}") from None


_BY_LOWER = {lab.value.lower(): lab for lab in TagLabel}
ANCHORS = (TagLabel.S, TagLabel.V, TagLabel.O)
FC_LABELS = tuple(lab for lab in TagLabel if lab not in ANCHORS)

LANGUAGES = ("english", "chinese")
_LANGUAGE_ALIASES = {"en": "english", "eng": "english", "zh": "chinese", "cn": "chinese", "zho": "chinese"}


def normalize_language(language: str) -> str:
    lang = _LANGUAGE_ALIASES.get(language.lower(), language.lower())
    if lang not in LANGUAGES:
        raise ValueError(f"unsupported language {language!r}; expected one of {LANGUAGES}")
    return lang


def pattern_string(labels: Iterable[TagLabel]) -> str:
    """Render a label sequence the way the tables print it: ``<S><V><effect>``."""
    return "".join(f"<{lab.value}>" for lab in labels)


@dataclass(frozen=True)
class Chunk:
    label: TagLabel
    text: str
    char_start: int
    char_end: int

    def __post_init__(self):
        if not self.char_start < self.char_end:
            raise ValueError(f"empty chunk span [{self.char_start}, {self.char_end})")


@dataclass(frozen=True)
class Gap:
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Sentence:
    """One annotated line.

    ``raw`` is the line as read and is excluded from equality: two sentences
    that differ only in tag-name casing compare equal.
    """

    id: str
    raw: str = field(compare=False)
    chunks: tuple[Chunk, ...] = ()
    gaps: tuple[Gap, ...] = ()

    def __post_init__(self):
        starts = [c.char_start for c in self.chunks]
        if any(a >= b for a, b in zip(starts, starts[1:])):
            raise ValueError("chunks must be sorted strictly by char_start")
        for a, b in zip(self.chunks, self.chunks[1:]):
            if a.char_end > b.char_start:
                raise ValueError(f"chunks overlap at offset {b.char_start}")

    @property
    def labels(self) -> tuple[TagLabel, ...]:
        return tuple(c.label for c in self.chunks)

    @property
    def plain_text(self) -> str:
        """Surface text with tags removed."""
        pieces = sorted(
            [(c.char_start, c.text) for c in self.chunks] + [(g.char_start, g.text) for g in self.gaps]
        )
        return "".join(text for _, text in pieces)

    @classmethod
    def from_pieces(cls, sentence_id: str, pieces: Iterable[tuple[Optional[str], str]]) -> "Sentence":
        """Build a sentence from ``(label or None, text)`` pieces in surface order.

        Adjacent untagged pieces merge into one gap, as parsing would give.
        """
        raw = []
        chunks = []
        gaps = []
        pos = 0
        for label, text in pieces:
            if not text:
                continue
            if label is None:
                if gaps and gaps[-1].char_end == pos:
                    prev = gaps.pop()
                    gaps.append(Gap(prev.text + text, prev.char_start, pos + len(text)))
                else:
                    gaps.append(Gap(text, pos, pos + len(text)))
                raw.append(text)
                pos += len(text)
            else:
                lab = label if isinstance(label, TagLabel) else TagLabel.parse(label)
                open_tag = lab.tag
                start = pos + len(open_tag)
                chunks.append(Chunk(lab, text, start, start + len(text)))
                raw.append(f"{open_tag}{text}</{lab.value}>")
                pos = start + len(text) + len(open_tag) + 1
        return cls(sentence_id, "".join(raw), tuple(chunks), tuple(gaps))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    kind: str
    message: str
    rejected: bool = True

    def __str__(self):
        status = "rejected" if self.rejected else "warning"
        return f"line {self.line}: {self.kind} ({status}): {self.message}"


@dataclass(frozen=True)
class Corpus:
    language: str
    name: str
    sentences: tuple[Sentence, ...] = ()
    source_meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "language", normalize_language(self.language))
        object.__setattr__(self, "sentences", tuple(self.sentences))
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise DuplicateId(f"duplicate sentence id {s.id!r} in corpus {self.name!r}")
            seen.add(s.id)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


_TAG = re.compile(r"<(/?)([A-Za-z]+)>")


def parse_sentence(raw: str, mode: str = "strict", sentence_id: str = "", diagnostics: Optional[list] = None) -> Sentence:
    """Parse one annotated line.

    In lenient mode, unknown labels, stray or mismatched closing tags, empty
    chunks and unclosed openers are kept as literal gap text and reported as
    warnings through ``diagnostics`` (a list of ``(kind, message)`` pairs).
    Nested tags raise in both modes.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    strict = mode == "strict"

    def soften(exc: ParseError):
        if strict:
            raise exc
        if diagnostics is not None:
            diagnostics.append((exc.kind, str(exc)))

    chunks = []
    spans = []  # full tagged spans, used to derive gaps
    opened = None  # (label, tag_start, content_start)
    for m in _TAG.finditer(raw):
        closing, name = m.group(1) == "/", m.group(2)
        try:
            label = TagLabel.parse(name)
        except UnknownLabel as exc:
            exc.position = m.start()
            soften(exc)
            continue
        if not closing:
            if opened is not None:
                raise NestedTag(
                    f"<{name}> at offset {m.start()} opens inside <{opened[0].value}> opened at offset {opened[1]}",
                    m.start(),
                )
            opened = (label, m.start(), m.end())
            continue
        if opened is None:
            soften(StrayClosingTag(f"</{name}> at offset {m.start()} has no opening tag", m.start()))
            continue
        if label is not opened[0]:
            soften(StrayClosingTag(f"</{name}> at offset {m.start()} does not close <{opened[0].value}>", m.start()))
            continue
        olabel, tag_start, content_start = opened
        opened = None
        if m.start() == content_start:
            soften(EmptyChunk(f"<{name}> at offset {tag_start} is empty", tag_start))
            continue
        chunks.append(Chunk(olabel, raw[content_start:m.start()], content_start, m.start()))
        spans.append((tag_start, m.end()))
    if opened is not None:
        soften(UnclosedTag(f"<{opened[0].value}> at offset {opened[1]} is never closed", opened[1]))

    gaps = []
    pos = 0
    for start, end in spans + [(len(raw), len(raw))]:
        if start > pos:
            gaps.append(Gap(raw[pos:start], pos, start))
        pos = end
    return Sentence(sentence_id, raw, tuple(chunks), tuple(gaps))


def serialize_sentence(s: Sentence) -> str:
    pieces = [(c.char_start, f"<{c.label.value}>{c.text}</{c.label.value}>") for c in s.chunks]
    pieces += [(g.char_start, g.text) for g in s.gaps]
    pieces.sort(key=lambda p: p[0])
    return "".join(text for _, text in pieces)


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _split_id(line: str, default_id: str) -> tuple[str, str]:
    if "\t" in line:
        head, rest = line.split("\t", 1)
        if head and not _TAG.search(head):
            return head.strip(), rest
    return default_id, line


def parse_corpus(stream: Iterable, language: str, mode: str = "strict", name: str = "corpus", source_meta=None):
    """Parse a sequence of annotated lines into ``(Corpus, diagnostics)``.

    ``stream`` yields ``str`` or UTF-8 ``bytes`` lines. Blank lines are skipped
    but still advance the line counter, so ids stay tied to physical lines.
    In strict mode any rejected line raises ``CorpusLoadError``.
    """
    sentences = []
    diagnostics = []
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise EncodingError(f"{name}: line {lineno} is not valid UTF-8 ({exc.reason})") from None
        if lineno == 1:
            line = line.lstrip("\ufeff")
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        sid, body = _split_id(line, f"{name}-L{lineno}")
        notes = []
        try:
            sentences.append(parse_sentence(body, mode, sid, notes))
        except ParseError as exc:
            diagnostics.append(Diagnostic(lineno, exc.kind, str(exc)))
        else:
            diagnostics.extend(Diagnostic(lineno, kind, msg, rejected=False) for kind, msg in notes)
    if mode == "strict" and diagnostics:
        first = diagnostics[0]
        raise CorpusLoadError(f"{name}: {first}", diagnostics)
    meta = dict(source_meta or {})
    return Corpus(language, name, tuple(sentences), meta), diagnostics


def load_corpus(path, language: str, mode: str = "strict", name: Optional[str] = None, source_meta=None):
    """Read a corpus file. Returns ``(Corpus, diagnostics)``."""
    from pathlib import Path

    path = Path(path)
    meta = {"path": str(path)}
    meta.update(source_meta or {})
    try:
        with open(path, "rb") as f:
            return parse_corpus(f, language, mode, name or path.stem, meta)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


# -- descriptive statistics ----------------------------------------------------

_CJK = "\u3400-\u4dbf\u4e00-\u9fff\uf900-\ufaff"
_TOKENIZERS = {
    "whitespace": re.compile(r"\w+(?:['’-]\w+)*"),
    "cjk_char": re.compile(rf"[{_CJK}]|[^\W{_CJK}]+"),
}
DEFAULT_TOKENIZER = {"english": "whitespace", "chinese": "cjk_char"}


def tokenize(text: str, tokenizer: str = "whitespace") -> list[str]:
    try:
        pattern = _TOKENIZERS[tokenizer]
    except KeyError:
        raise ValueError(f"unknown tokenizer {tokenizer!r}") from None
    return pattern.findall(text)


@dataclass(frozen=True)
class CorpusStats:
    texts: int
    tokens: int
    types: int
    lines: int
    tags: int
    fcs: int

    @property
    def ttr(self) -> Optional[Fraction]:
        return Fraction(self.types, self.tokens) if self.tokens else None

    @property
    def tag_per_line(self) -> Fraction:
        return Fraction(self.tags, self.lines)

    @property
    def fc_per_line(self) -> Fraction:
        return Fraction(self.fcs, self.lines)


def corpus_stats(c: Corpus, tokenizer: Optional[str] = None) -> CorpusStats:
    if not c.sentences:
        raise EmptyCorpus(f"corpus {c.name!r} has no lines")
    tokenizer = tokenizer or DEFAULT_TOKENIZER[c.language]
    fold = c.language == "english"
    tokens = 0
    types = set()
    tags = fcs = 0
    for s in c.sentences:
        toks = tokenize(s.plain_text, tokenizer)
        tokens += len(toks)
        types.update(t.casefold() if fold else t for t in toks)
        tags += len(s.chunks)
        fcs += sum(1 for ch in s.chunks if ch.label.is_fc)
    texts = int(c.source_meta.get("texts", 1))
    return CorpusStats(texts, tokens, len(types), len(c.sentences), tags, fcs)


@dataclass(frozen=True)
class FcRow:
    label: TagLabel
    frequency: int
    proportion: Fraction


def fc_distribution(c: Corpus) -> list[FcRow]:
    """Frequency and share of each functional-chunk label, most frequent first.

    Ties keep the canonical label order. With no FCs at all every proportion is 0.
    """
    counts = Counter(ch.label for s in c.sentences for ch in s.chunks if ch.label.is_fc)
    total = sum(counts.values())
    rows = [FcRow(lab, counts[lab], Fraction(counts[lab], total) if total else Fraction(0)) for lab in FC_LABELS]
    return sorted(rows, key=lambda r: -r.frequency)
