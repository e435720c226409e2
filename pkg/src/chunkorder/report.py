"""TOML configuration and the end-to-end ``report`` bundle.

Example ``chunkorder.toml``::

    output_dir = "out"
    top_k_patterns = 20
    top_k_combos = 50

    [[corpora]]
    name = "news_en"
    path = "news_en_tagged.txt"
    language = "english"

    [rounding]      # optional, decimals per table family
    p = 3

    [semantics]     # optional
    embeddings = "emb.jsonl"
    subsets = ["en", "zh"]

    [annotation]    # only used by `chunkorder annotate`
    endpoint_url = "https://api.openai.com/v1/chat/completions"
    model_name = "gpt-4o-2024-08-06"
    few_shot_path = "fewshot.json"
"""

from __future__ import annotations

import hashlib
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .annotate import AnnotationConfig
from .corpus import Corpus, corpus_stats, load_corpus, normalize_language
from .errors import ConfigError, EmptyCorpus
from .semantics import load_embeddings, pca_project, similarity_table
from .sequences import transition_matrix
from .svg import heatmap_svg, scatter_svg
from . import tables

CORPUS_FILES = (
    "stats.json",
    "fc_distribution.csv",
    "positions.csv",
    "tests.csv",
    "condprob.csv",
    "patterns.csv",
    "combos.csv",
    "transitions.csv",
    "transitions_matrix.csv",
    "transitions.svg",
)
TIMESTAMP_KEY = "generated_at"


@dataclass(frozen=True)
class CorpusSpec:
    name: str
    path: Path
    language: str


@dataclass(frozen=True)
class SemanticsSpec:
    embeddings: Path
    subsets: tuple
    projection: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    corpora: tuple
    output_dir: Path
    top_k_patterns: int = 20
    top_k_combos: int = 50
    rounding: dict = field(default_factory=dict)
    annotation: Optional[AnnotationConfig] = None
    semantics: Optional[SemanticsSpec] = None

    @property
    def rounding_table(self) -> dict:
        r = dict(tables.DEFAULT_ROUNDING)
        r.update(self.rounding)
        return r


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(data, path.parent)


def config_from_mapping(data: dict, base_dir=".") -> PipelineConfig:
    base = Path(base_dir)
    corpora = []
    names = set()
    for i, entry in enumerate(data.get("corpora", []), start=1):
        try:
            name, cpath, lang = entry["name"], entry["path"], entry["language"]
        except (KeyError, TypeError):
            raise ConfigError(f"corpora entry {i} needs name, path and language") from None
        if name in names:
            raise ConfigError(f"corpus name {name!r} used twice")
        if not name or "/" in name or name.startswith("."):
            raise ConfigError(f"corpus name {name!r} is not usable as a directory name")
        names.add(name)
        try:
            lang = normalize_language(lang)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        corpora.append(CorpusSpec(name, _resolve(base, cpath), lang))
    rounding = data.get("rounding", {})
    unknown = set(rounding) - set(tables.DEFAULT_ROUNDING)
    if unknown:
        raise ConfigError(f"unknown rounding families: {', '.join(sorted(unknown))}")
    annotation = None
    if "annotation" in data:
        annotation = AnnotationConfig.from_mapping(data["annotation"], base)
    semantics = None
    if "semantics" in data:
        sem = data["semantics"]
        if "embeddings" not in sem:
            raise ConfigError("[semantics] needs an embeddings path")
        semantics = SemanticsSpec(
            _resolve(base, sem["embeddings"]), tuple(sem.get("subsets", ())), bool(sem.get("projection", True))
        )
    top_p = int(data.get("top_k_patterns", 20))
    top_c = int(data.get("top_k_combos", 50))
    if top_p < 1 or top_c < 1:
        raise ConfigError("top_k values must be positive")
    return PipelineConfig(
        corpora=tuple(corpora),
        output_dir=_resolve(base, data.get("output_dir", "chunkorder_report")),
        top_k_patterns=top_p,
        top_k_combos=top_c,
        rounding=dict(rounding),
        annotation=annotation,
        semantics=semantics,
    )


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def corpus_files(c: Corpus, cfg: PipelineConfig) -> dict:
    r = cfg.rounding_table
    return {
        "stats.json": tables.stats_json(c, r),
        "fc_distribution.csv": tables.fc_distribution_csv(c, r),
        "positions.csv": tables.positions_csv(c, r),
        "tests.csv": tables.tests_csv(c, r),
        "condprob.csv": tables.condprob_csv(c, r),
        "patterns.csv": tables.patterns_csv(c, cfg.top_k_patterns),
        "combos.csv": tables.combos_csv(c, cfg.top_k_combos),
        "transitions.csv": tables.transitions_csv(c, r),
        "transitions_matrix.csv": tables.transitions_matrix_csv(c, r),
        "transitions.svg": heatmap_svg(transition_matrix(c), f"FC transition probabilities: {c.name}"),
    }


def semantics_files(spec: SemanticsSpec, rounding: dict):
    es = load_embeddings(spec.embeddings)
    subsets = spec.subsets or tuple(es.tags())
    files = {"similarity.csv": tables.similarity_csv(similarity_table(es, subsets), rounding)}
    if spec.projection:
        proj = pca_project(es, 2)
        files["projection.csv"] = tables.projection_csv(es, proj, rounding)
        points = []
        for eid in proj.ids:
            x, y = (float(tables.fmt(v, rounding["projection"])) for v in proj.coords[eid][:2])
            tags = sorted(es.entries[eid].tags)
            group = next((t for t in subsets if t in tags), tags[0] if tags else "")
            points.append((eid, x, y, group))
        files["projection.svg"] = scatter_svg(points, "PCA projection of embeddings")
    return files, es.digest()


def build_bundle(cfg: PipelineConfig, timestamp: Optional[str] = None) -> dict:
    """Compute every bundle file in memory: ``{relative path: text}``.

    Corpora are parsed strictly; any failure raises before anything is written.
    """
    if not cfg.corpora:
        raise ConfigError("no corpora configured")
    corpora = []
    inputs = {}
    for spec in cfg.corpora:
        c, _ = load_corpus(spec.path, spec.language, "strict", spec.name)
        if not c.sentences:
            raise EmptyCorpus(f"corpus {spec.name!r} ({spec.path.name}) has no lines")
        corpus_stats(c)
        corpora.append(c)
        inputs[spec.name] = {"file": spec.path.name, "sha256": _sha256(spec.path.read_bytes()), "language": c.language}

    files = {}
    for c in corpora:
        for fname, text in corpus_files(c, cfg).items():
            files[f"{c.name}/{fname}"] = text
    for a, b in combinations(corpora, 2):
        files[f"cross/{a.name}_vs_{b.name}/tests.csv"] = tables.cross_tests_csv(a, b, cfg.rounding_table)
    if cfg.semantics is not None:
        sem_files, digest = semantics_files(cfg.semantics, cfg.rounding_table)
        files.update(sem_files)
        inputs["embeddings"] = {
            "file": cfg.semantics.embeddings.name,
            "sha256": _sha256(cfg.semantics.embeddings.read_bytes()),
            "content_digest": digest,
        }

    manifest = {
        "tool": "chunkorder",
        "version": __version__,
        TIMESTAMP_KEY: timestamp or datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        "inputs": inputs,
        "settings": {
            "top_k_patterns": cfg.top_k_patterns,
            "top_k_combos": cfg.top_k_combos,
            "rounding": cfg.rounding_table,
            "subsets": list(cfg.semantics.subsets) if cfg.semantics else None,
        },
        "files": {path: _sha256(text.encode("utf-8")) for path, text in sorted(files.items())},
    }
    files["manifest.json"] = tables.dump_json(manifest)
    return files


def _is_replaceable(path: Path) -> bool:
    return not path.exists() or (path.is_dir() and (not any(path.iterdir()) or (path / "manifest.json").exists()))


def write_bundle(files: dict, output_dir) -> Path:
    """Write atomically: stage in a sibling temp dir, then swap into place.

    An existing output directory is replaced only if it is empty or holds a
    previous bundle (has ``manifest.json``).
    """
    out = Path(output_dir)
    if not _is_replaceable(out):
        raise ConfigError(f"{out} exists and does not look like a previous report; refusing to overwrite")
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        for rel, text in files.items():
            target = staging / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        if out.exists():
            shutil.rmtree(out)
        os.replace(staging, out)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return out


def run_report(cfg: PipelineConfig, timestamp: Optional[str] = None) -> Path:
    return write_bundle(build_bundle(cfg, timestamp), cfg.output_dir)
