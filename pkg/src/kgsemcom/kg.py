"""Knowledge-graph data model, WebNLG ingestion and vocabularies."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

NONE_RELATION = "none"
FIELD_SEP = " | "
TRIPLE_END = "\n"

SPLITS = ("train", "dev", "test")
# WebNLG releases name the validation split "dev"
_SPLIT_ALIASES = {"validation": "dev", "val": "dev", "dev": "dev", "train": "train", "test": "test"}


class WebNLGParseError(ValueError):
    pass


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        if not (self.subject and self.relation and self.object):
            raise ValueError(f"triple fields must be non-empty: {self!r}")

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.subject, self.relation, self.object)


@dataclass(frozen=True)
class KnowledgeGraph:
    """Directed labelled multigraph.

    ``edges`` holds ``(source, target, relation)`` with node indices into
    ``nodes``. Node labels are not required to be unique: a decoded graph may
    assign the same entity to two positions.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...] = ()
    graph_id: str = ""
    category: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((int(i), int(j), r) for i, j, r in self.edges))
        if not self.nodes:
            raise ValueError("a knowledge graph needs at least one node")
        n = len(self.nodes)
        seen = set()
        for i, j, r in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}, {r!r}) out of range for {n} nodes")
            if (i, j, r) in seen:
                raise ValueError(f"duplicate edge ({i}, {j}, {r!r})")
            seen.add((i, j, r))

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def permute(self, perm: Sequence[int]) -> "KnowledgeGraph":
        """Return the graph whose node ``perm[k]`` becomes node ``k``."""
        inverse = {old: new for new, old in enumerate(perm)}
        return KnowledgeGraph(
            nodes=tuple(self.nodes[p] for p in perm),
            edges=tuple((inverse[i], inverse[j], r) for i, j, r in self.edges),
            graph_id=self.graph_id,
            category=self.category,
        )


@dataclass
class Vocabulary:
    entities: dict[str, int]
    relations: dict[str, int]

    def __post_init__(self):
        self._entity_names = _invert(self.entities)
        self._relation_names = _invert(self.relations)
        if self.relations.get(NONE_RELATION) != 0:
            raise ValueError('relation vocabulary must map "none" to id 0')

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    def entity_id(self, label: str) -> int:
        return self.entities[label]

    def relation_id(self, label: str) -> int:
        return self.relations[label]

    def entity_name(self, idx: int) -> str:
        return self._entity_names[idx]

    def relation_name(self, idx: int) -> str:
        return self._relation_names[idx]

    def manifest_lines(self) -> tuple[list[str], list[str]]:
        ents = [f"{i}\t{name}" for i, name in enumerate(self._entity_names)]
        rels = [f"{i}\t{name}" for i, name in enumerate(self._relation_names)]
        return ents, rels

    def digest(self) -> str:
        ents, rels = self.manifest_lines()
        h = hashlib.sha256()
        h.update("\n".join(ents).encode())
        h.update(b"\0")
        h.update("\n".join(rels).encode())
        return h.hexdigest()

    def write_manifest(self, directory: str | Path) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        ents, rels = self.manifest_lines()
        ent_path = directory / "entities.tsv"
        rel_path = directory / "relations.tsv"
        ent_path.write_text("".join(line + "\n" for line in ents), encoding="utf-8")
        rel_path.write_text("".join(line + "\n" for line in rels), encoding="utf-8")
        return ent_path, rel_path

    @classmethod
    def read_manifest(cls, directory: str | Path) -> "Vocabulary":
        directory = Path(directory)
        return cls(
            entities=_read_tsv(directory / "entities.tsv"),
            relations=_read_tsv(directory / "relations.tsv"),
        )


def _invert(mapping: dict[str, int]) -> list[str]:
    names = [""] * len(mapping)
    for name, idx in mapping.items():
        if not 0 <= idx < len(mapping) or names[idx]:
            raise ValueError("vocabulary ids must be dense and unique")
        names[idx] = name
    return names


def _read_tsv(path: Path) -> dict[str, int]:
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        idx, label = line.split("\t", 1)
        out[label] = int(idx)
    return out


@dataclass
class DatasetSplit:
    train: list[KnowledgeGraph] = field(default_factory=list)
    dev: list[KnowledgeGraph] = field(default_factory=list)
    test: list[KnowledgeGraph] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)
    skipped: int = 0

    def all_graphs(self) -> list[KnowledgeGraph]:
        return [*self.train, *self.dev, *self.test]

    def __len__(self):
        return len(self.train) + len(self.dev) + len(self.test)

    def merge(self, other: "DatasetSplit") -> "DatasetSplit":
        return DatasetSplit(
            train=self.train + other.train,
            dev=self.dev + other.dev,
            test=self.test + other.test,
            provenance=self.provenance + other.provenance,
            skipped=self.skipped + other.skipped,
        )


def triples_to_graph(triples: Iterable[Triple | tuple[str, str, str]], graph_id: str = "",
                     category: str = "") -> KnowledgeGraph:
    """Build a graph from triples, sharing one node per distinct entity string.

    Entities are trimmed of surrounding whitespace; nodes are ordered by first
    appearance. Repeated triples collapse to a single edge.
    """
    index: dict[str, int] = {}
    nodes: list[str] = []
    edges: list[tuple[int, int, str]] = []
    seen = set()

    def node(label: str) -> int:
        label = label.strip()
        if label not in index:
            index[label] = len(nodes)
            nodes.append(label)
        return index[label]

    for t in triples:
        s, r, o = t.as_tuple() if isinstance(t, Triple) else t
        i, j = node(s), node(o)
        key = (i, j, r.strip())
        if key not in seen:
            seen.add(key)
            edges.append(key)
    return KnowledgeGraph(tuple(nodes), tuple(edges), graph_id=graph_id, category=category)


def graph_to_triples(g: KnowledgeGraph) -> list[Triple]:
    return [Triple(g.nodes[i], r, g.nodes[j]) for i, j, r in g.edges]


def serialize_for_baseline(g: KnowledgeGraph) -> str:
    return "".join(FIELD_SEP.join(t.as_tuple()) + TRIPLE_END for t in graph_to_triples(g))


def parse_serialized(text: str) -> tuple[list[Triple], int]:
    """Parse canonical triple text, tolerating corruption.

    Returns the parsed triples and the number of non-empty lines that were
    discarded because they did not split into three non-empty fields.
    """
    triples = []
    dropped = 0
    for line in text.split(TRIPLE_END):
        if not line:
            continue
        parts = line.split(FIELD_SEP)
        if len(parts) != 3 or not all(parts):
            dropped += 1
            continue
        triples.append(Triple(*parts))
    return triples, dropped


def build_vocabulary(splits: DatasetSplit | Iterable[KnowledgeGraph]) -> Vocabulary:
    graphs = splits.all_graphs() if isinstance(splits, DatasetSplit) else list(splits)
    entity_labels = sorted({n for g in graphs for n in g.nodes})
    relation_labels = sorted({r for g in graphs for _, _, r in g.edges})
    if NONE_RELATION in relation_labels:
        raise ValueError('dataset relation label collides with the reserved "none" class')
    return Vocabulary(
        entities={label: i for i, label in enumerate(entity_labels)},
        relations={NONE_RELATION: 0, **{label: i + 1 for i, label in enumerate(relation_labels)}},
    )


# --- WebNLG ingestion -------------------------------------------------------

def _normalise_split(split: str) -> str:
    try:
        return _SPLIT_ALIASES[split]
    except KeyError:
        raise ValueError(f"unknown split {split!r}; expected one of {sorted(_SPLIT_ALIASES)}") from None


def _split_mtriple(text: str, entry_name: str) -> tuple[str, str, str]:
    parts = [p.strip() for p in text.split("|")]
    if len(parts) != 3 or not all(parts):
        raise WebNLGParseError(f"{entry_name}: malformed triple {text!r}")
    return parts[0], parts[1], parts[2]


def _parse_xml(path: Path, split: str) -> tuple[list[KnowledgeGraph], int]:
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise WebNLGParseError(f"{path}: {exc}") from exc
    graphs, skipped = [], 0
    for pos, entry in enumerate(root.iter("entry")):
        eid = entry.get("eid", str(pos + 1))
        name = f"{path.name}#{eid}"
        mts = entry.find("modifiedtripleset")
        triples = []
        if mts is not None:
            for mt in mts.findall("mtriple"):
                if mt.text is None:
                    raise WebNLGParseError(f"{name}: empty <mtriple>")
                triples.append(_split_mtriple(mt.text, name))
        if not triples:
            skipped += 1
            continue
        graphs.append(triples_to_graph(triples, graph_id=f"{split}/{path.stem}/{eid}",
                                       category=entry.get("category", "")))
    return graphs, skipped


def _parse_json(path: Path, split: str) -> tuple[list[KnowledgeGraph], int]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise WebNLGParseError(f"{path}: {exc}") from exc
    entries = data.get("entries", []) if isinstance(data, dict) else data
    graphs, skipped = [], 0
    for pos, wrapped in enumerate(entries):
        # release json wraps each entry as {"<eid>": {...}}
        if isinstance(wrapped, dict) and len(wrapped) == 1 and "modifiedtripleset" not in wrapped:
            eid, entry = next(iter(wrapped.items()))
        else:
            eid, entry = str(pos + 1), wrapped
        name = f"{path.name}#{eid}"
        if not isinstance(entry, dict):
            raise WebNLGParseError(f"{name}: entry is not an object")
        triples = []
        for t in entry.get("modifiedtripleset", []):
            try:
                triple = (t["subject"].strip(), t["property"].strip(), t["object"].strip())
            except (KeyError, TypeError, AttributeError) as exc:
                raise WebNLGParseError(f"{name}: malformed triple {t!r}") from exc
            if not all(triple):
                raise WebNLGParseError(f"{name}: malformed triple {t!r}")
            triples.append(triple)
        if not triples:
            skipped += 1
            continue
        graphs.append(triples_to_graph(triples, graph_id=f"{split}/{path.stem}/{eid}",
                                       category=entry.get("category", "")))
    return graphs, skipped


def parse_webnlg(path: str | Path, split: str) -> DatasetSplit:
    """Parse WebNLG release files (XML or JSON) into one split.

    ``path`` may be a single file or a directory searched recursively.
    Entries with no modified triples are skipped and counted in
    ``DatasetSplit.skipped``.
    """
    split = _normalise_split(split)
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.rglob("*") if p.suffix.lower() in (".xml", ".json"))
    elif path.exists():
        files = [path]
    else:
        raise FileNotFoundError(path)

    graphs: list[KnowledgeGraph] = []
    skipped = 0
    for f in files:
        if f.stat().st_size == 0:
            log.warning("%s is empty", f)
            continue
        parsed, sk = (_parse_json if f.suffix.lower() == ".json" else _parse_xml)(f, split)
        graphs.extend(parsed)
        skipped += sk
    if skipped:
        log.warning("skipped %d entries without triples", skipped)
    if not graphs:
        log.warning("no graphs parsed from %s", path)
    out = DatasetSplit(provenance=[str(f) for f in files], skipped=skipped)
    setattr(out, split, graphs)
    return out


def load_webnlg(root: str | Path) -> DatasetSplit:
    """Load ``train``/``dev``/``test`` subdirectories of a WebNLG release."""
    root = Path(root)
    out = DatasetSplit()
    for split in SPLITS:
        candidates = [root / split] + ([root / "validation"] if split == "dev" else [])
        for d in candidates:
            if d.exists():
                out = out.merge(parse_webnlg(d, split))
                break
        else:
            log.warning("no %s split under %s", split, root)
    check_disjoint(out)
    return out


def check_disjoint(ds: DatasetSplit) -> None:
    ids = [g.graph_id for g in ds.all_graphs()]
    if len(ids) != len(set(ids)):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValueError(f"graph id {dup!r} appears in more than one place")


_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def split_label(label: str) -> list[str]:
    """Word pieces of a WebNLG label: underscores and camelCase boundaries."""
    words = []
    for chunk in re.split(r"[_\s]+", label):
        words.extend(w for w in _CAMEL.split(chunk) if w)
    return words
