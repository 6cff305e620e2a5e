"""Reading and writing models, corpora and reports."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Corpus, Hierarchy, ingest_documents, parse_hierarchy, read_documents
from .langmodel import ModelSet, SparseLM, top_k


def fmt(x: float) -> str:
    """12 significant digits, locale independent."""
    return format(float(x), ".12g")


def model_line(entity: str, model: SparseLM) -> str:
    terms = ",".join(f"[{json.dumps(t, ensure_ascii=False)},{fmt(p)}]"
                     for t, p in top_k(model, len(model)))
    return f'{{"entity":{json.dumps(entity, ensure_ascii=False)},"terms":[{terms}]}}'


def dumps_models(models: ModelSet | Mapping[str, SparseLM], order: Iterable[str] | None = None) -> str:
    mapping = models.models if isinstance(models, ModelSet) else models
    keys = list(order) if order is not None else list(mapping)
    return "".join(model_line(e, mapping[e]) + "\n" for e in keys)


def loads_models(text: str) -> dict[str, SparseLM]:
    out: dict[str, SparseLM] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out[str(obj["entity"])] = SparseLM(((str(t), float(p)) for t, p in obj["terms"]), normalize=True)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"model file line {lineno}: {exc}") from exc
    return out


def read_hierarchy(path: str | Path) -> Hierarchy:
    return parse_hierarchy(Path(path).read_text(encoding="utf-8"))


def read_corpus(hierarchy_path: str | Path, docs_path: str | Path) -> Corpus:
    hier = read_hierarchy(hierarchy_path)
    with open(docs_path, encoding="utf-8") as fh:
        return ingest_documents(read_documents(fh), hier)


def write_corpus(corpus: Corpus, directory: str | Path) -> tuple[Path, Path]:
    """Write ``hierarchy.json`` and ``docs.jsonl`` (texts are space-joined tokens)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    hpath = directory / "hierarchy.json"
    dpath = directory / "docs.jsonl"
    hpath.write_text(json.dumps(corpus.hierarchy.to_nested(), indent=1) + "\n", encoding="utf-8")
    with dpath.open("w", encoding="utf-8") as fh:
        for d in corpus.documents.values():
            fh.write(json.dumps({"id": d.id, "entity": d.owner, "text": " ".join(d.tokens)},
                                ensure_ascii=False) + "\n")
    return hpath, dpath
