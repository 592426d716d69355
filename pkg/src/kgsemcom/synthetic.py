"""Seeded DBpedia-style corpus written in the WebNLG release XML layout.

Used for desk-scale runs when the WebNLG release is not on disk. A fixed
"world" of typed entities and facts is generated first; every entry is the
induced subgraph of a small connected set of world entities, so the relation
between two co-occurring entities is always the same across entries.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kg import DatasetSplit, KnowledgeGraph, triples_to_graph

_ONSETS = ["b", "br", "c", "d", "dr", "f", "g", "gr", "h", "k", "l", "m", "n", "p", "r",
           "s", "st", "t", "tr", "v", "w", "z", "al", "el", "or"]
_VOWELS = ["a", "e", "i", "o", "u", "ea", "ia", "ou"]
_CODAS = ["", "n", "r", "s", "l", "th", "nd", "rk", "m"]

# (relation, subject type, object type)
SCHEMA = [
    ("country", "City", "Country"),
    ("capital", "Country", "City"),
    ("leaderName", "Country", "Person"),
    ("language", "Country", "Language"),
    ("currency", "Country", "Currency"),
    ("cityServed", "Airport", "City"),
    ("elevationAboveTheSeaLevel", "Airport", "Number"),
    ("runwayLength", "Airport", "Number"),
    ("operatingOrganisation", "Airport", "Company"),
    ("birthPlace", "Person", "City"),
    ("birthDate", "Person", "Date"),
    ("almaMater", "Person", "University"),
    ("club", "Person", "Team"),
    ("ground", "Team", "City"),
    ("league", "Team", "League"),
    ("manager", "Team", "Person"),
    ("location", "University", "City"),
    ("numberOfStudents", "University", "Number"),
    ("location", "Building", "City"),
    ("architect", "Building", "Person"),
    ("floorCount", "Building", "Number"),
    ("completionDate", "Building", "Date"),
    ("region", "Food", "Country"),
    ("ingredient", "Food", "Food"),
    ("headquarter", "Company", "City"),
    ("keyPerson", "Company", "Person"),
]

_TYPE_COUNTS = {
    "Country": 14, "City": 40, "Person": 60, "Airport": 20, "University": 12,
    "Team": 14, "League": 5, "Building": 16, "Food": 18, "Company": 12,
    "Language": 6, "Currency": 6,
}


@dataclass
class World:
    entities: dict[str, str]                 # label -> type
    facts: list[tuple[str, str, str]]


def _name(rng: np.random.Generator, syllables: int) -> str:
    parts = []
    for _ in range(syllables):
        parts.append(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                     + _CODAS[rng.integers(len(_CODAS))])
    return "".join(parts).capitalize()


def _unique(rng, taken: set, make) -> str:
    for _ in range(1000):
        label = make()
        if label not in taken:
            taken.add(label)
            return label
    raise RuntimeError("could not draw a fresh entity label")


# Relations whose object is sometimes written as a quoted literal in WebNLG,
# e.g. ``"Atlanta"`` next to the resource ``Atlanta``: two distinct entities
# with near-identical text.
QUOTED_OBJECT_RELATIONS = ("birthPlace", "manager", "keyPerson")


def build_world(seed: int = 0, scale: float = 1.0, quoted_rate: float = 0.5) -> World:
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    by_type: dict[str, list[str]] = {t: [] for t in _TYPE_COUNTS}
    entities: dict[str, str] = {}

    def add(kind, label):
        by_type[kind].append(label)
        entities[label] = kind

    counts = {t: max(2, int(round(c * scale))) for t, c in _TYPE_COUNTS.items()}
    for _ in range(counts["Country"]):
        add("Country", _unique(rng, taken, lambda: _name(rng, 2)))
    for _ in range(counts["City"]):
        add("City", _unique(rng, taken, lambda: _name(rng, int(rng.integers(1, 4)))))
    for _ in range(counts["Person"]):
        add("Person", _unique(rng, taken, lambda: f"{_name(rng, 2)}_{_name(rng, int(rng.integers(2, 4)))}"))
    for _ in range(counts["Airport"]):
        suffix = ["Airport", "International_Airport", "Regional_Airport"][rng.integers(3)]
        add("Airport", _unique(rng, taken, lambda: f"{_name(rng, 2)}_{suffix}"))
    for _ in range(counts["University"]):
        add("University", _unique(rng, taken, lambda: f"University_of_{_name(rng, 2)}"))
    for _ in range(counts["Team"]):
        add("Team", _unique(rng, taken, lambda: f"{_name(rng, 2)}_{['F.C.', 'United', 'A.F.C.'][rng.integers(3)]}"))
    for _ in range(counts["League"]):
        add("League", _unique(rng, taken, lambda: f"{_name(rng, 2)}_Premier_League"))
    for _ in range(counts["Building"]):
        add("Building", _unique(rng, taken, lambda: f"{_name(rng, 2)}_{['Tower', 'Hall', 'Building'][rng.integers(3)]}"))
    for _ in range(counts["Food"]):
        add("Food", _unique(rng, taken, lambda: _name(rng, int(rng.integers(2, 4))).lower()))
    for _ in range(counts["Company"]):
        add("Company", _unique(rng, taken, lambda: f"{_name(rng, 2)}_{['Group', 'Airways', 'Holdings'][rng.integers(3)]}"))
    for _ in range(counts["Language"]):
        add("Language", _unique(rng, taken, lambda: f"{_name(rng, 2)}_language"))
    for _ in range(counts["Currency"]):
        add("Currency", _unique(rng, taken, lambda: f"{_name(rng, 2)}_{['euro', 'dollar', 'krone'][rng.integers(3)]}"))

    quoted = {e for t in ("City", "Person") for e in by_type[t] if rng.random() < quoted_rate}
    facts: list[tuple[str, str, str]] = []
    for rel, stype, otype in SCHEMA:
        for subj in by_type[stype]:
            if rel == "ingredient":
                picks = rng.choice([f for f in by_type["Food"] if f != subj], size=2, replace=False)
                facts.extend((subj, rel, str(o)) for o in picks)
                continue
            if otype == "Number":
                value = {"elevationAboveTheSeaLevel": lambda: f"{rng.integers(1, 900)}.0",
                         "runwayLength": lambda: f"{rng.integers(15, 40) * 100}.0",
                         "numberOfStudents": lambda: str(rng.integers(20, 400) * 100),
                         "floorCount": lambda: str(rng.integers(3, 90))}[rel]
                obj = _unique(rng, taken, value)
                entities[obj] = "Number"
            elif otype == "Date":
                obj = _unique(rng, taken, lambda: f'"{rng.integers(1900, 2015)}-{rng.integers(1, 13):02d}-{rng.integers(1, 29):02d}"')
                entities[obj] = "Date"
            else:
                pool = by_type[otype]
                obj = str(pool[rng.integers(len(pool))])
                if rel in QUOTED_OBJECT_RELATIONS and obj in quoted:
                    obj = f'"{obj}"'
                    entities[obj] = "Literal"
            facts.append((subj, rel, obj))
    return World(entities=entities, facts=facts)


def sample_entries(world: World, n: int, seed: int = 0, max_triples: int = 7) -> list[list[tuple[str, str, str]]]:
    """Draw ``n`` connected triple sets of 1..``max_triples`` triples."""
    rng = np.random.default_rng(seed)
    adjacency: dict[str, list[int]] = {}
    for idx, (s, _, o) in enumerate(world.facts):
        adjacency.setdefault(s, []).append(idx)
        adjacency.setdefault(o, []).append(idx)
    subjects = sorted({s for s, _, _ in world.facts})
    # WebNLG skews towards small triple sets
    size_probs = np.array([0.22, 0.2, 0.18, 0.15, 0.12, 0.08, 0.05])[:max_triples]
    size_probs /= size_probs.sum()

    entries = []
    while len(entries) < n:
        target = int(rng.choice(np.arange(1, len(size_probs) + 1), p=size_probs))
        start = subjects[rng.integers(len(subjects))]
        chosen_nodes = {start}
        chosen: list[int] = []
        frontier = list(adjacency[start])
        while frontier and len(chosen) < target:
            idx = frontier.pop(int(rng.integers(len(frontier))))
            if idx in chosen:
                continue
            s, _, o = world.facts[idx]
            new_nodes = {s, o} - chosen_nodes
            # induced subgraph: every world fact among the chosen nodes is kept
            induced = [k for node in new_nodes for k in adjacency[node]
                       if k not in chosen and {world.facts[k][0], world.facts[k][2]} <= chosen_nodes | new_nodes]
            if len(chosen) + len(set(induced)) > target:
                continue
            chosen.extend(sorted(set(induced)))
            chosen_nodes |= new_nodes
            for node in new_nodes:
                frontier.extend(adjacency[node])
        if chosen:
            entries.append([world.facts[k] for k in chosen])
    return entries


def write_webnlg_xml(entries: list[list[tuple[str, str, str]]], path: str | Path,
                     categories: list[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    root = ET.Element("benchmark")
    ents = ET.SubElement(root, "entries")
    for eid, triples in enumerate(entries, start=1):
        entry = ET.SubElement(ents, "entry", category=(categories[eid - 1] if categories else "Synthetic"),
                              eid=f"Id{eid}", size=str(len(triples)))
        ots = ET.SubElement(entry, "originaltripleset")
        ot = ET.SubElement(ots, "otriple")
        ot.text = " | ".join(triples[0])
        mts = ET.SubElement(entry, "modifiedtripleset")
        for t in triples:
            mt = ET.SubElement(mts, "mtriple")
            mt.text = " | ".join(t)
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)
    return path


def generate_corpus(out_dir: str | Path, n_graphs: int = 2000, seed: int = 0,
                    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1), scale: float = 1.0,
                    quoted_rate: float = 0.5) -> Path:
    """Write ``train/``, ``dev/`` and ``test/`` XML files under ``out_dir``."""
    out_dir = Path(out_dir)
    world = build_world(seed, scale, quoted_rate)
    entries = sample_entries(world, n_graphs, seed=seed + 1)
    n_train = int(round(fractions[0] * n_graphs))
    n_dev = int(round(fractions[1] * n_graphs))
    chunks = {"train": entries[:n_train], "dev": entries[n_train:n_train + n_dev],
              "test": entries[n_train + n_dev:]}
    for split, chunk in chunks.items():
        cats = [world.entities[t[0][0]] for t in chunk]
        write_webnlg_xml(chunk, out_dir / split / f"synthetic_{split}.xml", cats)
    return out_dir


def generate_split(n_graphs: int = 2000, seed: int = 0, fractions=(0.8, 0.1, 0.1),
                   scale: float = 1.0, quoted_rate: float = 0.5) -> DatasetSplit:
    """In-memory variant of :func:`generate_corpus`."""
    world = build_world(seed, scale, quoted_rate)
    entries = sample_entries(world, n_graphs, seed=seed + 1)
    n_train = int(round(fractions[0] * n_graphs))
    n_dev = int(round(fractions[1] * n_graphs))

    def graphs(chunk, split):
        return [triples_to_graph(t, graph_id=f"{split}/synthetic_{split}/Id{k + 1}",
                                 category=world.entities[t[0][0]]) for k, t in enumerate(chunk)]

    return DatasetSplit(
        train=graphs(entries[:n_train], "train"),
        dev=graphs(entries[n_train:n_train + n_dev], "dev"),
        test=graphs(entries[n_train + n_dev:], "test"),
        provenance=[f"synthetic(seed={seed}, n={n_graphs}, scale={scale}, quoted_rate={quoted_rate})"],
    )


def as_graphs(entries) -> list[KnowledgeGraph]:
    return [triples_to_graph(t) for t in entries]
