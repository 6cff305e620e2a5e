"""Hierarchies of entities and the documents attached to their leaves."""

from __future__ import annotations

import json
import unicodedata
from collections import Counter, deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping


class HierarchyError(ValueError):
    """Base class for malformed hierarchy descriptions."""

    def __init__(self, message: str, entity_id: str | None = None):
        super().__init__(message)
        self.entity_id = entity_id


class DuplicateIdError(HierarchyError):
    pass


class MultipleRootsError(HierarchyError):
    pass


class CycleError(HierarchyError):
    pass


class DanglingParentError(HierarchyError):
    pass


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Entity:
    id: str
    parent: str | None
    children: tuple[str, ...]
    layer: int


class Hierarchy:
    """Immutable rooted tree of entities.

    Build it with :meth:`from_edges` or :func:`parse_hierarchy`; both validate
    the tree and compute depths and heights once.
    """

    def __init__(self, entities: Mapping[str, Entity], root: str):
        self._entities = MappingProxyType(dict(entities))
        self.root = root
        self._bfs = tuple(self._walk_bfs())
        heights: dict[str, int] = {}
        for eid in reversed(self._bfs):
            kids = self._entities[eid].children
            heights[eid] = 0 if not kids else 1 + max(heights[c] for c in kids)
        self._heights = MappingProxyType(heights)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str | None]]) -> "Hierarchy":
        """Build from ``(child, parent)`` pairs in declaration order.

        A ``None`` parent marks the root. Parents that never appear as a child
        are accepted as the root as well.
        """
        parent_of: dict[str, str | None] = {}
        order: list[str] = []
        for child, parent in edges:
            if child in parent_of:
                raise DuplicateIdError(f"duplicate entity id {child!r}", child)
            if parent == child:
                raise CycleError(f"entity {child!r} lists itself as parent", child)
            parent_of[child] = parent or None
            order.append(child)

        # a parent that is never declared itself is accepted as the implicit root
        missing = [p for p in dict.fromkeys(parent_of.values()) if p is not None and p not in parent_of]
        if len(missing) == 1 and None not in parent_of.values():
            parent_of = {missing[0]: None, **parent_of}
            order.insert(0, missing[0])
        elif missing:
            child = next(c for c in order if parent_of[c] == missing[-1])
            raise DanglingParentError(
                f"entity {child!r} references unknown parent {missing[-1]!r}", child)

        roots = [e for e in order if parent_of[e] is None]
        if not roots:
            # every node has a parent, so some path loops
            raise CycleError(f"no root: cycle through {order[0]!r}", order[0] if order else None)
        if len(roots) > 1:
            raise MultipleRootsError(f"multiple roots: {roots[0]!r} and {roots[1]!r}", roots[1])

        children: dict[str, list[str]] = {e: [] for e in order}
        for e in order:
            p = parent_of[e]
            if p is not None:
                children[p].append(e)

        root = roots[0]
        depth = {root: 0}
        queue = deque([root])
        while queue:
            e = queue.popleft()
            for c in children[e]:
                depth[c] = depth[e] + 1
                queue.append(c)
        unreachable = [e for e in order if e not in depth]
        if unreachable:
            raise CycleError(f"entity {unreachable[0]!r} is part of a cycle", unreachable[0])

        entities = {
            e: Entity(id=e, parent=parent_of[e], children=tuple(children[e]), layer=depth[e])
            for e in order
        }
        return cls(entities, root)

    def _walk_bfs(self) -> Iterator[str]:
        queue = deque([self.root])
        while queue:
            e = queue.popleft()
            yield e
            queue.extend(self._entities[e].children)

    # -- queries ---------------------------------------------------------

    def __contains__(self, entity_id: object) -> bool:
        return entity_id in self._entities

    def __len__(self) -> int:
        return len(self._entities)

    def __getitem__(self, entity_id: str) -> Entity:
        return self._entities[entity_id]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return self.root == other.root and dict(self._entities) == dict(other._entities)

    def __repr__(self) -> str:
        return f"Hierarchy(root={self.root!r}, entities={len(self)})"

    @property
    def entities(self) -> Mapping[str, Entity]:
        return self._entities

    def bfs_order(self) -> tuple[str, ...]:
        return self._bfs

    def depth(self, entity_id: str) -> int:
        return self._entities[entity_id].layer

    def height(self, entity_id: str) -> int:
        return self._heights[entity_id]

    def parent(self, entity_id: str) -> str | None:
        return self._entities[entity_id].parent

    def children(self, entity_id: str) -> tuple[str, ...]:
        return self._entities[entity_id].children

    def is_leaf(self, entity_id: str) -> bool:
        return not self._entities[entity_id].children

    def leaves(self) -> list[str]:
        return [e for e in self._bfs if self.is_leaf(e)]

    def leaves_under(self, entity_id: str) -> list[str]:
        out = []
        stack = [entity_id]
        while stack:
            e = stack.pop()
            kids = self._entities[e].children
            if kids:
                stack.extend(reversed(kids))
            else:
                out.append(e)
        return out

    def by_depth(self) -> list[list[str]]:
        levels: list[list[str]] = []
        for e in self._bfs:
            d = self.depth(e)
            if d == len(levels):
                levels.append([])
            levels[d].append(e)
        return levels

    def ancestor_at(self, entity_id: str, l: int) -> str:
        """Ancestor exactly ``l`` edges above ``entity_id``."""
        d = self.depth(entity_id)
        if not 1 <= l <= d:
            raise ValueError(f"distance {l} out of range 1..{d} for {entity_id!r}")
        e = entity_id
        for _ in range(l):
            e = self._entities[e].parent
        return e

    def descendants_at(self, entity_id: str, l: int) -> list[str]:
        """All descendants exactly ``l`` edges below, in declaration order."""
        h = self.height(entity_id)
        if not 1 <= l <= h:
            raise ValueError(f"distance {l} out of range 1..{h} for {entity_id!r}")
        frontier = [entity_id]
        for _ in range(l):
            frontier = [c for e in frontier for c in self._entities[e].children]
        return frontier

    def edges(self) -> list[tuple[str, str | None]]:
        return [(e, self._entities[e].parent) for e in self._bfs]

    def to_nested(self, entity_id: str | None = None) -> dict:
        eid = self.root if entity_id is None else entity_id
        node: dict = {"id": eid}
        kids = self._entities[eid].children
        if kids:
            node["children"] = [self.to_nested(c) for c in kids]
        return node

    def subtree(self, keep: Iterable[str]) -> "Hierarchy":
        """Restrict to ``keep`` (which must be closed under parent)."""
        keep = set(keep)
        return Hierarchy.from_edges(
            (e, self.parent(e)) for e in self._bfs if e in keep
        )


def _nested_edges(node, parent, out):
    if not isinstance(node, dict) or "id" not in node:
        raise HierarchyError(f"hierarchy node without an id: {node!r}")
    eid = str(node["id"])
    out.append((eid, parent))
    for child in node.get("children", ()) or ():
        _nested_edges(child, eid, out)


def parse_hierarchy(text: str) -> Hierarchy:
    """Parse a nested JSON object tree or a ``child<TAB>parent`` edge list."""
    stripped = text.strip()
    edges: list[tuple[str, str | None]] = []
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise HierarchyError(f"invalid hierarchy JSON: {exc}") from exc
        _nested_edges(doc, None, edges)
    else:
        for lineno, line in enumerate(stripped.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\r").split("\t")
            if len(parts) == 1:
                edges.append((parts[0].strip(), None))
            elif len(parts) == 2:
                child, parent = parts[0].strip(), parts[1].strip()
                edges.append((child, parent or None))
            else:
                raise HierarchyError(f"line {lineno}: expected child<TAB>parent")
    if not edges:
        raise HierarchyError("empty hierarchy")
    return Hierarchy.from_edges(edges)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith(("P", "S"))


def tokenize(text: str) -> list[str]:
    """Whitespace split, lowercase, strip punctuation at both token ends.

    Inner punctuation ("don't", "e-mail") is kept; tokens that are pure
    punctuation disappear. No stemming or stopword removal.
    """
    out = []
    for raw in text.split():
        lo, hi = 0, len(raw)
        while lo < hi and _is_punct(raw[lo]):
            lo += 1
        while hi > lo and _is_punct(raw[hi - 1]):
            hi -= 1
        if lo < hi:
            out.append(raw[lo:hi].lower())
    return out


@dataclass(frozen=True)
class Document:
    id: str
    owner: str
    tokens: tuple[str, ...]

    @property
    def token_count(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True, eq=False)
class Corpus:
    hierarchy: Hierarchy
    documents: Mapping[str, Document]
    vocabulary: frozenset = field(default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "documents", MappingProxyType(dict(self.documents)))
        vocab = frozenset(t for d in self.documents.values() for t in d.tokens)
        object.__setattr__(self, "vocabulary", vocab)
        by_leaf: dict[str, list[str]] = {}
        for d in self.documents.values():
            by_leaf.setdefault(d.owner, []).append(d.id)
        object.__setattr__(self, "_by_leaf", by_leaf)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (self.hierarchy == other.hierarchy
                and list(self.documents.items()) == list(other.documents.items()))

    def documents_of(self, leaf: str) -> list[Document]:
        return [self.documents[i] for i in self._by_leaf.get(leaf, ())]

    def leaf_counts(self, leaf: str) -> Counter:
        c: Counter = Counter()
        for d in self.documents_of(leaf):
            c.update(d.tokens)
        return c

    def counts(self, entity_id: str) -> Counter:
        """Pooled term frequencies over every document below ``entity_id``."""
        c: Counter = Counter()
        for leaf in self.hierarchy.leaves_under(entity_id):
            for d in self.documents_of(leaf):
                c.update(d.tokens)
        return c

    def token_total(self, entity_id: str) -> int:
        return sum(d.token_count for leaf in self.hierarchy.leaves_under(entity_id)
                   for d in self.documents_of(leaf))

    def restrict_leaves(self, leaves: Iterable[str]) -> "Corpus":
        """Keep only ``leaves`` (and their ancestors) plus their documents."""
        leaves = set(leaves)
        keep = set()
        for leaf in leaves:
            e = leaf
            while e is not None and e not in keep:
                keep.add(e)
                e = self.hierarchy.parent(e)
        hier = self.hierarchy.subtree(keep)
        docs = {k: d for k, d in self.documents.items() if d.owner in leaves}
        return Corpus(hier, docs)

    def as_document_leaves(self) -> "Corpus":
        """Give every document its own leaf entity beneath its owner."""
        edges = list(self.hierarchy.edges())
        docs = {}
        for d in self.documents.values():
            if d.id in self.hierarchy:
                raise CorpusError(f"document id {d.id!r} collides with an entity id")
            edges.append((d.id, d.owner))
            docs[d.id] = Document(d.id, d.id, d.tokens)
        return Corpus(Hierarchy.from_edges(edges), docs)


def ingest_documents(records: Iterable[tuple[str, str, str]], hierarchy: Hierarchy) -> Corpus:
    """Tokenize ``(doc_id, entity_id, text)`` records into a :class:`Corpus`."""
    docs: dict[str, Document] = {}
    for doc_id, entity_id, text in records:
        if entity_id not in hierarchy:
            raise CorpusError(f"document {doc_id!r} references unknown entity {entity_id!r}")
        if not hierarchy.is_leaf(entity_id):
            raise CorpusError(f"document {doc_id!r} bound to non-leaf entity {entity_id!r}")
        if doc_id in docs:
            raise CorpusError(f"duplicate document id {doc_id!r}")
        docs[doc_id] = Document(doc_id, entity_id, tuple(tokenize(text)))
    return Corpus(hierarchy, docs)


def read_documents(lines: Iterable[str]) -> Iterator[tuple[str, str, str]]:
    """Yield records from JSON-lines ``{"id", "entity", "text"}`` objects."""
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            yield str(obj["id"]), str(obj["entity"]), str(obj["text"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorpusError(f"documents line {lineno}: {exc}") from exc


def filter_short_leaves(corpus: Corpus, min_tokens: int = 100) -> Corpus:
    """Drop leaves with fewer than ``min_tokens`` pooled tokens.

    Internal nodes left without children are removed as well, except the root.
    """
    if min_tokens < 0:
        raise ValueError("min_tokens must be >= 0")
    if min_tokens == 0:
        return corpus
    hier = corpus.hierarchy
    short = {leaf for leaf in hier.leaves()
             if sum(d.token_count for d in corpus.documents_of(leaf)) < min_tokens}
    if not short:
        return corpus
    alive = set(hier.entities) - (short - {hier.root})
    # prune internal nodes emptied by the removal, bottom-up
    for e in reversed(hier.bfs_order()):
        if e == hier.root or e not in alive or hier.is_leaf(e):
            continue
        if not any(c in alive for c in hier.children(e)):
            alive.discard(e)
    new_hier = hier.subtree(alive)
    docs = {k: d for k, d in corpus.documents.items()
            if d.owner in alive and d.owner not in short}
    return Corpus(new_hier, docs)
