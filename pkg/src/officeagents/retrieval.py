"""Tool retrieval: deterministic hashing embedder, top-k recall, pair builders.

The reference embedder feature-hashes lowercase tokens into a fixed number of
buckets (stable blake2 digests, not Python ``hash``) and L2-normalizes, so the
same text always embeds to the same unit vector on every platform. Index
entries combine each tool's description, name tokens, and param names; that
composition is configurable. An endpoint-backed embedder can replace it behind
the same interface without touching the index or eval code.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .catalog import ToolSpec, catalog

DEFAULT_DIM = 256
DEFAULT_FIELDS = ("description", "name", "params", "grammar")


class EmbedderMismatch(Exception):
    pass


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Unit-norm hashed bag-of-tokens vector; raises on empty input."""
    toks = _tokens(text)
    if not toks:
        raise ValueError("cannot embed empty text")
    vec = np.zeros(dim, dtype=np.float64)
    for tok in toks:
        vec[_bucket(tok, dim)] += 1.0
    return vec / np.linalg.norm(vec)


def entry_text(spec: ToolSpec, fields: Sequence[str] = DEFAULT_FIELDS) -> str:
    from .grammar import API_CUES

    parts = []
    if "description" in fields:
        parts.append(spec.description)
    if "name" in fields:
        parts.append(spec.name.replace("_", " "))
    if "scenario" in fields:
        parts.append(spec.scenario)
    if "params" in fields:
        parts.extend(p.name.replace("_", " ") for p in spec.params)
    if "grammar" in fields:
        parts.append(API_CUES.get(spec.name, ""))
    return " ".join(parts)


@dataclass
class ToolIndex:
    embedder_id: str
    dim: int
    names: list[str]
    vectors: np.ndarray  # (n_tools, dim), rows unit-norm

    def to_dict(self) -> dict:
        return {
            "embedder_id": self.embedder_id,
            "dim": self.dim,
            "names": list(self.names),
            "vectors": self.vectors.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToolIndex":
        return cls(
            embedder_id=d["embedder_id"],
            dim=d["dim"],
            names=list(d["names"]),
            vectors=np.asarray(d["vectors"], dtype=np.float64),
        )


def embedder_id(dim: int = DEFAULT_DIM, fields: Sequence[str] = DEFAULT_FIELDS) -> str:
    return f"hash-blake2-d{dim}-" + "+".join(fields)


def build_index(
    specs: Iterable[ToolSpec] | None = None,
    dim: int = DEFAULT_DIM,
    fields: Sequence[str] = DEFAULT_FIELDS,
) -> ToolIndex:
    specs = list(specs) if specs is not None else list(catalog().values())
    names = [s.name for s in specs]
    vectors = np.stack([embed(entry_text(s, fields), dim) for s in specs])
    return ToolIndex(embedder_id=embedder_id(dim, fields), dim=dim, names=names, vectors=vectors)


def save_index(index: ToolIndex, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(index.to_dict(), fh)


def load_index(path: str) -> ToolIndex:
    with open(path) as fh:
        return ToolIndex.from_dict(json.load(fh))


def recall(
    index: ToolIndex,
    query: str,
    k: int,
    query_embedder_id: str | None = None,
) -> list[tuple[str, float]]:
    """Top-k tools by cosine score, name-ascending on ties."""
    if not 1 <= k <= len(index.names):
        raise ValueError(f"k must be in 1..{len(index.names)}")
    if query_embedder_id is not None and query_embedder_id != index.embedder_id:
        raise EmbedderMismatch(
            f"index built with {index.embedder_id}, query embedded with {query_embedder_id}"
        )
    q = embed(query, index.dim)
    scores = index.vectors @ q
    order = sorted(range(len(index.names)), key=lambda i: (-scores[i], index.names[i]))
    return [(index.names[i], float(scores[i])) for i in order[:k]]


@dataclass(frozen=True)
class RecallPair:
    query: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...] = ()

    def __post_init__(self):
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValueError(f"positives and negatives overlap: {overlap}")

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "positives": list(self.positives),
            "negatives": list(self.negatives),
        }


@dataclass
class PairBuildResult:
    pairs: list[RecallPair] = field(default_factory=list)
    skipped: int = 0  # clauses without a gold API


def _sample_clauses(sample) -> list[tuple[str, str]]:
    """(clause text, gold api) pairs across all turns of a dialogue sample."""
    out = []
    for turn in sample.turns:
        if turn.gold_plan is None:
            continue
        for st in turn.gold_plan.sub_tasks:
            out.append((st.text, st.api_name))
    return out


def build_pairs_v1(samples) -> PairBuildResult:
    """One single-positive pair per clause; clauses without a tool are skipped."""
    result = PairBuildResult()
    for sample in samples:
        for text, api in _sample_clauses(sample):
            if api == "none":
                result.skipped += 1
                continue
            result.pairs.append(RecallPair(query=text, positives=(api,)))
    return result


def build_pairs_v2(samples, seed: int) -> list[RecallPair]:
    """One pair per sample: all gold APIs positive plus 3 random negatives."""
    rng = random.Random(seed)
    all_names = list(catalog().keys())
    pairs = []
    for sample in samples:
        clauses = _sample_clauses(sample)
        positives = sorted({api for _, api in clauses if api != "none"})
        if not positives:
            continue
        remaining = [n for n in all_names if n not in positives]
        if len(remaining) < 3:
            raise ValueError("no negatives remain: sample covers the whole catalog")
        negatives = tuple(sorted(rng.sample(remaining, 3)))
        query = " ".join(text for text, _ in clauses)
        pairs.append(RecallPair(query=query, positives=tuple(positives), negatives=negatives))
    return pairs


def eval_recall(index: ToolIndex, testset: Iterable[RecallPair], k: int) -> float:
    """Micro-averaged top-k recall: each gold API counts once."""
    hits = 0
    total = 0
    for pair in testset:
        top = {name for name, _ in recall(index, pair.query, k)}
        for gold in pair.positives:
            total += 1
            if gold in top:
                hits += 1
    return hits / total if total else 0.0
