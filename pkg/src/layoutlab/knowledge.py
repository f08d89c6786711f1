"""Tagged text corpus with lexical tf-idf retrieval.

Chunks live as plain text files with a short comment header (id, tags,
source).  Retrieval is deterministic: scores are tf * smoothed idf summed
over query tokens, ties broken by chunk id, so the same query always
returns the same ranking.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

SOURCES = ("tool_manual", "command_list", "example_archive", "design_note")

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_HEADER_RE = re.compile(r"^#\s*(id|tags|source)\s*:\s*(.*)$")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class KnowledgeChunk:
    id: str
    tags: tuple[str, ...]
    text: str
    source: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"chunk {self.id} has no text")
        if self.source not in SOURCES:
            raise ValueError(f"chunk {self.id}: unknown source {self.source!r}")


def parse_chunk(raw: str, default_id: str) -> KnowledgeChunk:
    """Header lines are `# key: value`; the first non-header line starts the body."""
    chunk_id = default_id
    tags: tuple[str, ...] = ()
    source = "design_note"
    body_lines = []
    in_header = True
    for line in raw.splitlines():
        if in_header:
            m = _HEADER_RE.match(line.strip())
            if m:
                key, value = m.group(1), m.group(2).strip()
                if key == "id":
                    chunk_id = value
                elif key == "tags":
                    tags = tuple(t.strip() for t in value.split(",") if t.strip())
                else:
                    source = value
                continue
            if not line.strip():
                continue
            in_header = False
        body_lines.append(line)
    return KnowledgeChunk(chunk_id, tags, "\n".join(body_lines).strip(), source)


@dataclass
class KnowledgeStore:
    chunks: list[KnowledgeChunk] = field(default_factory=list)

    def add(self, chunk: KnowledgeChunk) -> None:
        if any(c.id == chunk.id for c in self.chunks):
            raise ValueError(f"duplicate chunk id {chunk.id}")
        self.chunks.append(chunk)

    def __len__(self) -> int:
        return len(self.chunks)

    def get(self, chunk_id: str) -> KnowledgeChunk:
        for c in self.chunks:
            if c.id == chunk_id:
                return c
        raise KeyError(chunk_id)


def load_corpus(directory: str | Path) -> KnowledgeStore:
    store = KnowledgeStore()
    for path in sorted(Path(directory).glob("*.txt")):
        store.add(parse_chunk(path.read_text(encoding="utf-8"), path.stem))
    return store


def _idf(term: str, chunks: list[KnowledgeChunk], freqs: list[Counter]) -> float:
    df = sum(1 for f in freqs if term in f)
    return math.log((1 + len(chunks)) / (1 + df)) + 1.0


def score(query: str, chunk_freq: Counter, idf: dict[str, float]) -> float:
    # tags were folded into the frequency table at index time
    return sum(chunk_freq[t] * idf[t] for t in set(tokenize(query)) if t in chunk_freq)


def retrieve(query: str, store: KnowledgeStore, k: int) -> list[KnowledgeChunk]:
    if k < 1:
        raise ValueError("k must be >= 1")
    chunks = store.chunks
    freqs = [Counter(tokenize(c.text) + tokenize(" ".join(c.tags))) for c in chunks]
    idf = {t: _idf(t, chunks, freqs) for t in set(tokenize(query))}
    ranked = sorted(
        zip(chunks, freqs),
        key=lambda pair: (-score(query, pair[1], idf), pair[0].id),
    )
    return [c for c, _ in ranked[:k]]
