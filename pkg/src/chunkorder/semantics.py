"""Embedding centroids, cosine similarity and a deterministic 2-D PCA projection.

Vectors are produced elsewhere and read from JSON lines::

    {"id": "en-L1", "tags": ["en", "svo_time"], "vec": [0.12, -0.4, ...]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySelection,
    IoFailure,
    NonFiniteComponent,
    SchemaError,
    ZeroNorm,
)


@dataclass(frozen=True)
class Embedding:
    id: str
    vector: np.ndarray = field(compare=False)
    tags: frozenset = frozenset()


@dataclass(frozen=True)
class EmbeddingSet:
    dim: int
    entries: Mapping[str, Embedding]

    def __len__(self):
        return len(self.entries)

    def digest(self) -> str:
        """SHA-256 over ids, sorted tags and the repr of every component."""
        h = hashlib.sha256()
        for key in sorted(self.entries):
            e = self.entries[key]
            h.update(f"{key}\t{','.join(sorted(e.tags))}\t".encode())
            h.update(",".join(repr(float(x)) for x in e.vector).encode())
            h.update(b"\n")
        return h.hexdigest()

    def select(self, tag_filter=None) -> list[Embedding]:
        """Entries matching ``tag_filter``, sorted by id.

        The filter is ``None`` (everything), a tag, an iterable of tags that
        must all be present, a ``"a+b"`` string meaning the same, or a predicate.
        """
        pred = _predicate(tag_filter)
        return [self.entries[k] for k in sorted(self.entries) if pred(self.entries[k])]

    def tags(self) -> list[str]:
        return sorted({t for e in self.entries.values() for t in e.tags})


TagFilter = Union[None, str, Iterable[str], Callable[[Embedding], bool]]


def _predicate(tag_filter: TagFilter):
    if tag_filter is None:
        return lambda e: True
    if callable(tag_filter):
        return tag_filter
    if isinstance(tag_filter, str):
        wanted = frozenset(t for t in tag_filter.split("+") if t)
    else:
        wanted = frozenset(tag_filter)
    return lambda e: wanted <= e.tags


def embedding_set(records: Iterable[Mapping]) -> EmbeddingSet:
    """Validate ``{id, tags, vec}`` records into an EmbeddingSet."""
    entries = {}
    dim = None
    for n, rec in enumerate(records, start=1):
        if not isinstance(rec, Mapping) or "id" not in rec or "vec" not in rec:
            raise SchemaError(f"record {n}: expected an object with 'id' and 'vec'")
        eid, vec, tags = rec["id"], rec["vec"], rec.get("tags", [])
        if not isinstance(eid, str) or not eid:
            raise SchemaError(f"record {n}: 'id' must be a non-empty string")
        if eid in entries:
            raise SchemaError(f"record {n}: duplicate id {eid!r}")
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise SchemaError(f"record {n}: 'tags' must be a list of strings")
        if (
            not isinstance(vec, list)
            or not vec
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec)
        ):
            raise SchemaError(f"record {n}: 'vec' must be a non-empty list of numbers")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimensionMismatch(f"record {n} ({eid!r}) has dimension {len(vec)}, expected {dim}")
        arr = np.asarray(vec, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteComponent(f"record {n} ({eid!r}) has a NaN or infinite component")
        arr.setflags(write=False)
        entries[eid] = Embedding(eid, arr, frozenset(tags))
    if dim is None:
        raise SchemaError("no embedding records")
    return EmbeddingSet(dim, entries)


def load_embeddings(path) -> EmbeddingSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path} is not UTF-8") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    return embedding_set(records)


def centroid(es: EmbeddingSet, tag_filter: TagFilter = None) -> np.ndarray:
    selected = es.select(tag_filter)
    if not selected:
        raise EmptySelection(f"no embeddings match {tag_filter!r}")
    return np.mean(np.stack([e.vector for e in selected]), axis=0)


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroNorm("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


# -- PCA -----------------------------------------------------------------------


@dataclass
class Projection:
    ids: list
    coords: dict  # id -> tuple of k floats
    axes: np.ndarray  # (k, dim), unit rows
    variances: list  # eigenvalues of the sample covariance, per axis
    total_variance: float
    rank_deficient: bool = False
    converged: bool = True

    @property
    def explained_ratio(self) -> list:
        if self.total_variance == 0:
            return [0.0] * len(self.variances)
        return [v / self.total_variance for v in self.variances]


def _orient(v: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive; first index wins ties
    return -v if v[int(np.argmax(np.abs(v)))] < 0 else v


def top_eigenpairs(cov_apply, dim: int, k: int, tol: float = 1e-10, max_iter: int = 200_000, seed: int = 0):
    """Leading eigenpairs of a symmetric PSD operator by power iteration with deflation.

    ``cov_apply(v)`` returns the operator applied to ``v``. Iteration stops on
    the residual ``|Cv - lambda v| <= tol * max(lambda_1, 1)``. Returns
    ``(values, vectors, converged)``; stops early when the remaining spectrum
    is numerically zero.
    """
    rng = np.random.default_rng(seed)
    values, vectors = [], []
    converged = True

    def orthogonalize(v):
        for u in vectors:
            v = v - np.dot(u, v) * u
        return v

    def deflated(v):
        w = cov_apply(v)
        for lam, u in zip(values, vectors):
            w = w - lam * np.dot(u, v) * u
        return orthogonalize(w)

    for _ in range(k):
        v = orthogonalize(rng.standard_normal(dim))
        v /= np.linalg.norm(v)
        scale = max(values[0], 1.0) if values else max(np.linalg.norm(cov_apply(v)), 1.0)
        lam = 0.0
        ok = False
        for _ in range(max_iter):
            w = deflated(v)
            lam = float(np.dot(v, w))
            wn = np.linalg.norm(w)
            if wn <= 1e-12 * scale:
                lam, ok = 0.0, True
                break
            resid = np.linalg.norm(w - lam * v)
            v = w / wn
            if resid <= tol * scale:
                ok = True
                break
        if lam <= 1e-12 * scale:
            break
        converged &= ok
        values.append(lam)
        vectors.append(_orient(v))
    return values, vectors, converged


def pca_project(es: EmbeddingSet, k: int = 2, tol: float = 1e-10) -> Projection:
    """Project mean-centered vectors onto the top-``k`` covariance eigenvectors.

    Axes beyond the numerical rank get zero coordinates and ``rank_deficient``
    is set.
    """
    ids = sorted(es.entries)
    if len(ids) < k + 1:
        raise EmptySelection(f"PCA with k={k} needs at least {k + 1} vectors, got {len(ids)}")
    X = np.stack([es.entries[i].vector for i in ids])
    X = X - X.mean(axis=0)
    denom = len(ids) - 1

    def cov_apply(v):
        return X.T @ (X @ v) / denom

    values, vectors, converged = top_eigenpairs(cov_apply, es.dim, k, tol)
    axes = np.zeros((k, es.dim))
    for j, v in enumerate(vectors):
        axes[j] = v
    scores = X @ axes.T
    coords = {i: tuple(float(x) for x in row) for i, row in zip(ids, scores)}
    variances = list(values) + [0.0] * (k - len(values))
    total = float(np.sum(X * X) / denom)
    return Projection(ids, coords, axes, variances, total, rank_deficient=len(values) < k, converged=converged)


def similarity_table(es: EmbeddingSet, subsets: Iterable[str]) -> list[tuple[str, str, float]]:
    """Pairwise centroid cosine similarity as percentages, in the order given."""
    subsets = list(subsets)
    cents = {s: centroid(es, s) for s in subsets}
    rows = []
    for i, a in enumerate(subsets):
        for b in subsets[i + 1:]:
            rows.append((a, b, 100.0 * cosine_similarity(cents[a], cents[b])))
    return rows


def reconstruction_error(es: EmbeddingSet, proj: Projection, k: Optional[int] = None) -> float:
    """Squared Frobenius error of rebuilding the centered data from the first ``k`` axes."""
    ids = proj.ids
    X = np.stack([es.entries[i].vector for i in ids])
    X = X - X.mean(axis=0)
    axes = proj.axes[: (len(proj.axes) if k is None else k)]
    approx = (X @ axes.T) @ axes
    return float(np.sum((X - approx) ** 2))
