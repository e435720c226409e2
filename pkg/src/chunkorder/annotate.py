"""Few-shot LLM annotation against a chat-completion endpoint, plus dual-run agreement."""

from __future__ import annotations

import json
import logging
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import httpx

from .corpus import Corpus, Sentence, TagLabel, normalize_whitespace, parse_sentence, serialize_sentence
from .errors import (
    AuthMissing,
    ConfigError,
    EmptyFewShot,
    FewShotError,
    IdMismatch,
    MalformedAnnotation,
    ParseError,
    ServiceError,
)

log = logging.getLogger(__name__)

API_KEY_ENV = "CHUNKORDER_API_KEY"


@dataclass(frozen=True)
class AnnotationConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    max_parallel: int = 4
    retry_limit: int = 2
    few_shot_path: Optional[str] = None
    timeout: float = 60.0

    def __post_init__(self):
        if not str(self.endpoint_url).startswith(("http://", "https://")):
            raise ConfigError(f"endpoint_url must be an http(s) URL, got {self.endpoint_url!r}")
        if not 0 <= self.temperature <= 2:
            raise ConfigError(f"temperature must lie in [0, 2], got {self.temperature}")
        if int(self.max_parallel) < 1:
            raise ConfigError("max_parallel must be >= 1")
        if not 0 <= int(self.retry_limit) <= 10:
            raise ConfigError("retry_limit must lie in [0, 10]")
        if not self.timeout > 0:
            raise ConfigError("timeout must be positive")

    @classmethod
    def from_mapping(cls, data: dict, base_dir=None) -> "AnnotationConfig":
        known = {"endpoint_url", "model_name", "temperature", "max_parallel", "retry_limit", "few_shot_path", "timeout"}
        extra = set(data) - known
        if extra:
            # keys such as api_key are refused on purpose: secrets come from the environment
            raise ConfigError(f"unknown annotation settings: {', '.join(sorted(extra))}")
        missing = {"endpoint_url", "model_name"} - set(data)
        if missing:
            raise ConfigError(f"annotation config is missing {', '.join(sorted(missing))}")
        kw = dict(data)
        if kw.get("few_shot_path") and base_dir is not None:
            kw["few_shot_path"] = str(Path(base_dir) / kw["few_shot_path"])
        return cls(**kw)


@dataclass(frozen=True)
class FewShotSet:
    instruction: str
    examples: tuple[tuple[str, str], ...]
    per_label_examples: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.examples or not self.instruction.strip():
            raise EmptyFewShot("few-shot set needs an instruction and example pairs")
        if len(self.examples) < 3:
            raise FewShotError(f"few-shot set needs at least 3 example pairs, got {len(self.examples)}")
        for i, (raw, annotated) in enumerate(self.examples, start=1):
            try:
                s = parse_sentence(annotated, "strict")
            except ParseError as exc:
                raise FewShotError(f"example {i} does not parse: {exc}") from None
            if normalize_whitespace(s.plain_text) != normalize_whitespace(raw):
                raise FewShotError(f"example {i}: annotated text differs from the original sentence")
        for key in self.per_label_examples:
            TagLabel.parse(key)

    @classmethod
    def from_mapping(cls, data: dict) -> "FewShotSet":
        try:
            examples = tuple((str(r), str(a)) for r, a in data.get("examples", []))
        except (TypeError, ValueError):
            raise FewShotError("examples must be [raw, annotated] pairs") from None
        labels = {TagLabel.parse(k).value: str(v) for k, v in data.get("per_label_examples", {}).items()}
        return cls(str(data.get("instruction", "")), examples, labels)


def load_few_shot(path) -> FewShotSet:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read few-shot file {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise FewShotError(f"few-shot file {path} is not valid JSON: {exc.msg}") from None
    return FewShotSet.from_mapping(data)


def build_prompt(raw: str, fs: FewShotSet) -> str:
    parts = [fs.instruction.strip(), "", "Labels:"]
    for lab in TagLabel:
        example = fs.per_label_examples.get(lab.value)
        parts.append(f"<{lab.value}>: {example}" if example else f"<{lab.value}>")
    parts += ["", "Examples:"]
    for ex_raw, ex_ann in fs.examples:
        parts += ["", f"Original: {ex_raw}", f"Annotated: {ex_ann}"]
    parts += [
        "",
        "Annotate the next sentence. Reply with the annotated sentence only.",
        f"Original: {raw}",
        "Annotated:",
    ]
    return "\n".join(parts)


def _api_key(api_key: Optional[str]) -> str:
    key = api_key or os.environ.get(API_KEY_ENV)
    if not key:
        raise AuthMissing(f"set {API_KEY_ENV} to call the annotation endpoint")
    return key


def _clean_reply(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = text.strip("`").strip()
        if "\n" in text and not text.split("\n", 1)[0].strip().startswith("<"):
            text = text.split("\n", 1)[1]  # drop a language hint after the fence
    if text.lower().startswith("annotated:"):
        text = text[len("annotated:"):]
    return " ".join(line.strip() for line in text.splitlines() if line.strip())


def _chat(client: httpx.Client, cfg: AnnotationConfig, key: str, messages: list) -> str:
    body = {"model": cfg.model_name, "messages": messages, "temperature": cfg.temperature}
    try:
        resp = client.post(cfg.endpoint_url, json=body, headers={"Authorization": f"Bearer {key}"}, timeout=cfg.timeout)
    except httpx.HTTPError as exc:
        raise ServiceError(f"request failed: {exc}") from exc
    if resp.status_code in (401, 403):
        raise AuthMissing(f"endpoint rejected the API key (HTTP {resp.status_code})")
    if resp.status_code >= 400:
        raise ServiceError(f"endpoint returned HTTP {resp.status_code}")
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        raise ServiceError("endpoint reply is not a chat-completion response") from None


def annotate_sentence(
    raw: str,
    cfg: AnnotationConfig,
    fs: FewShotSet,
    sentence_id: str = "",
    client: Optional[httpx.Client] = None,
    api_key: Optional[str] = None,
) -> Sentence:
    """Annotate one sentence, retrying up to ``cfg.retry_limit`` times.

    A reply that does not parse in strict mode is sent back with the parse
    error so the model can correct itself.
    """
    key = _api_key(api_key)
    own_client = client is None
    client = client or httpx.Client()
    messages = [{"role": "user", "content": build_prompt(raw, fs)}]
    attempts = cfg.retry_limit + 1
    last_reply = None
    last_service_error = None
    try:
        for attempt in range(1, attempts + 1):
            try:
                reply = _chat(client, cfg, key, messages)
            except AuthMissing:
                raise
            except ServiceError as exc:
                last_service_error = exc
                log.warning("attempt %d/%d for %r: %s", attempt, attempts, sentence_id or raw[:40], exc)
                continue
            last_reply = reply
            try:
                return parse_sentence(_clean_reply(reply), "strict", sentence_id)
            except ParseError as exc:
                log.info("attempt %d/%d for %r unparseable: %s", attempt, attempts, sentence_id or raw[:40], exc)
                messages = messages + [
                    {"role": "assistant", "content": reply},
                    {
                        "role": "user",
                        "content": f"That annotation is invalid ({exc.kind}: {exc}). "
                        "Tags must be flat and closed. Reply with the corrected annotated sentence only.",
                    },
                ]
    finally:
        if own_client:
            client.close()
    if last_reply is None and last_service_error is not None:
        raise ServiceError(f"gave up after {attempts} attempts: {last_service_error}")
    raise MalformedAnnotation(f"no valid annotation after {attempts} attempts", attempts, last_reply)


@dataclass(frozen=True)
class Failure:
    line: int
    kind: str
    message: str


def annotate_corpus(
    raw_lines,
    cfg: AnnotationConfig,
    fs: FewShotSet,
    name: str = "annotated",
    language: str = "english",
    api_key: Optional[str] = None,
):
    """Annotate lines with at most ``cfg.max_parallel`` requests in flight.

    Returns ``(Corpus, failures)``; sentences keep input order and failed
    lines are listed by 1-based line number. Only a missing key aborts.
    """
    key = _api_key(api_key)
    jobs = [(i, line.rstrip("\r\n")) for i, line in enumerate(raw_lines, start=1) if line.strip()]
    results = {}
    failures = []
    limits = httpx.Limits(max_connections=cfg.max_parallel, max_keepalive_connections=cfg.max_parallel)
    with httpx.Client(limits=limits) as client, ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
        futures = [
            (i, pool.submit(annotate_sentence, line, cfg, fs, f"{name}-L{i}", client, key)) for i, line in jobs
        ]
        for i, fut in futures:
            try:
                results[i] = fut.result()
            except AuthMissing:
                for _, f in futures:
                    f.cancel()
                raise
            except ServiceError as exc:
                failures.append(Failure(i, type(exc).__name__, str(exc)))
    sentences = tuple(results[i] for i, _ in jobs if i in results)
    return Corpus(language, name, sentences, {"annotated_by": cfg.model_name}), failures


def write_tagged(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in corpus.sentences:
            f.write(f"{s.id}\t{serialize_sentence(s)}\n")


# -- agreement -----------------------------------------------------------------


@dataclass(frozen=True)
class AgreementReport:
    n_sentences: int
    exact_match_rate: Fraction
    precision: Fraction
    recall: Fraction
    chunk_f1: Fraction
    per_label_f1: dict

    def as_dict(self) -> dict:
        return {
            "n_sentences": self.n_sentences,
            "exact_match_rate": float(self.exact_match_rate),
            "precision": float(self.precision),
            "recall": float(self.recall),
            "chunk_f1": float(self.chunk_f1),
            "per_label_f1": {k: float(v) for k, v in sorted(self.per_label_f1.items())},
        }


def _f1(tp, n_a, n_b):
    if n_a == 0 and n_b == 0:
        return Fraction(1), Fraction(1), Fraction(1)
    p = Fraction(tp, n_b) if n_b else Fraction(0)
    r = Fraction(tp, n_a) if n_a else Fraction(0)
    return p, r, (2 * p * r / (p + r) if p + r else Fraction(0))


def agreement(run_a: Corpus, run_b: Corpus) -> AgreementReport:
    """Compare two annotation runs of the same sentences.

    ``run_a`` is the reference for recall. A true positive is a
    ``(label, text)`` chunk found in both runs of the same sentence
    (multiset intersection).
    """
    a = {s.id: s for s in run_a.sentences}
    b = {s.id: s for s in run_b.sentences}
    if a.keys() != b.keys():
        only_a = sorted(a.keys() - b.keys())[:3]
        only_b = sorted(b.keys() - a.keys())[:3]
        raise IdMismatch(f"runs cover different sentences (only in a: {only_a}, only in b: {only_b})")
    exact = 0
    tp = n_a = n_b = 0
    per_label = Counter()  # (label, 'tp'|'a'|'b') -> count
    for sid, sa in a.items():
        sb = b[sid]
        ca = Counter((c.label, c.text) for c in sa.chunks)
        cb = Counter((c.label, c.text) for c in sb.chunks)
        if [(c.label, c.text) for c in sa.chunks] == [(c.label, c.text) for c in sb.chunks]:
            exact += 1
        common = ca & cb
        tp += sum(common.values())
        n_a += sum(ca.values())
        n_b += sum(cb.values())
        for (lab, _), n in common.items():
            per_label[lab, "tp"] += n
        for (lab, _), n in ca.items():
            per_label[lab, "a"] += n
        for (lab, _), n in cb.items():
            per_label[lab, "b"] += n
    p, r, f1 = _f1(tp, n_a, n_b)
    labels = {lab for lab, _ in per_label}
    per_label_f1 = {
        lab.value: _f1(per_label[lab, "tp"], per_label[lab, "a"], per_label[lab, "b"])[2]
        for lab in TagLabel
        if lab in labels
    }
    rate = Fraction(exact, len(a)) if a else Fraction(1)
    return AgreementReport(len(a), rate, p, r, f1, per_label_f1)
