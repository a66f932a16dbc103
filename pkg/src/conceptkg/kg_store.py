"""Stores and indexes for the seed CKG and the IsA concept graph.

Two kinds of data live here. The concept graph is a large set of
weighted IsA edges (instance, concept, corpus frequency) indexed in
both directions for abstraction and instantiation queries. The triple
store holds the seed knowledge graph itself: deduplicated
(head, relation, tail) triples with role and per-relation indexes, plus
an explicit node set that may include isolated nodes (nodes with no
surviving triple), which matters when pruning.

Both structures are built once and are immutable afterwards, so they
can be shared freely across workers.
"""

from __future__ import annotations

import pickle
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

# Relation vocabularies of the two supported CKG releases.
ATOMIC_RELATIONS = (
    "oEffect", "oReact", "oWant",
    "xAttr", "xEffect", "xIntent", "xNeed", "xReact", "xWant",
)
ASER_RELATIONS = (
    "Precedence", "Succession", "Synchronous", "Reason", "Result",
    "Condition", "Contrast", "Concession", "Conjunction", "Instantiation",
    "Restatement", "ChosenAlternative", "Alternative", "Exception",
    "Co_Occurrence",
)

_FORMAT_RELATIONS = {
    "atomic-tsv": ATOMIC_RELATIONS,
    "aser-tsv": ASER_RELATIONS,
    "plain-tsv": None,  # vocabulary taken from the data
}

_INDEX_MAGIC = b"CGIDX"
_INDEX_VERSION = 1


class FormatError(ValueError):
    """Malformed input row; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def normalize_phrase(text: str) -> str:
    """Lowercase and collapse whitespace runs; concept-graph key form."""
    return " ".join(text.lower().split())


def normalize_text(text: str) -> str:
    """Collapse whitespace runs, preserving case; node-text form."""
    return " ".join(text.split())


@dataclass
class LoadReport:
    """Per-load diagnostics: row counts and the first few skip reasons."""

    rows: int = 0
    kept: int = 0
    skipped: int = 0
    messages: list = field(default_factory=list)

    _MESSAGE_CAP = 20

    def note(self, line_no: int, reason: str) -> None:
        self.skipped += 1
        if len(self.messages) < self._MESSAGE_CAP:
            self.messages.append(f"line {line_no}: {reason}")


class ConceptEdge(NamedTuple):
    hypo: str
    hyper: str
    frequency: int

    def validate(self) -> None:
        if not self.hypo or not self.hyper:
            raise ValueError("empty phrase in IsA edge")
        if self.hypo == self.hyper:
            raise ValueError(f"self-loop IsA edge on {self.hypo!r}")
        if self.frequency < 1:
            raise ValueError(f"non-positive frequency {self.frequency}")


class ConceptGraph:
    """Immutable two-way index over IsA edges.

    ``abstractions(p)`` lists concepts that ``p`` is an instance of;
    ``instantiations(p)`` lists instances of the concept ``p``. Both are
    sorted by frequency descending then phrase, so query results are
    deterministic. Duplicate (hypo, hyper) rows are merged by summing
    frequencies before the ``min_frequency`` filter applies.
    """

    def __init__(self, forward: dict, inverse: dict, num_edges: int):
        self._forward = forward
        self._inverse = inverse
        self.num_edges = num_edges
        self.num_phrases = len(forward.keys() | inverse.keys())
        self.load_report: LoadReport | None = None

    @classmethod
    def from_edges(cls, rows: Iterable[tuple[str, str, int]], min_frequency: int = 1) -> "ConceptGraph":
        if min_frequency < 1:
            raise ValueError("min_frequency must be >= 1")
        merged: dict[tuple[str, str], int] = defaultdict(int)
        for hypo, hyper, freq in rows:
            edge = ConceptEdge(normalize_phrase(hypo), normalize_phrase(hyper), int(freq))
            edge.validate()
            merged[(edge.hypo, edge.hyper)] += edge.frequency

        forward: dict[str, list] = defaultdict(list)
        inverse: dict[str, list] = defaultdict(list)
        kept = 0
        for (hypo, hyper), freq in merged.items():
            if freq < min_frequency:
                continue
            kept += 1
            hypo = sys.intern(hypo)
            hyper = sys.intern(hyper)
            forward[hypo].append((hyper, freq))
            inverse[hyper].append((hypo, freq))
        order = lambda item: (-item[1], item[0])
        fwd = {p: tuple(sorted(lst, key=order)) for p, lst in forward.items()}
        inv = {p: tuple(sorted(lst, key=order)) for p, lst in inverse.items()}
        return cls(fwd, inv, kept)

    def abstractions(self, phrase: str) -> tuple:
        """(concept, frequency) pairs the phrase can abstract to."""
        return self._forward.get(normalize_phrase(phrase), ())

    def instantiations(self, phrase: str) -> tuple:
        """(instance, frequency) pairs the phrase can instantiate to."""
        return self._inverse.get(normalize_phrase(phrase), ())

    def __contains__(self, phrase: str) -> bool:
        p = normalize_phrase(phrase)
        return p in self._forward or p in self._inverse

    def save(self, path) -> None:
        """Serialize the built index for fast reload; versioned header."""
        payload = (self._forward, self._inverse, self.num_edges)
        with open(path, "wb") as fh:
            fh.write(_INDEX_MAGIC)
            fh.write(bytes([_INDEX_VERSION]))
            pickle.dump(payload, fh, protocol=4)

    @classmethod
    def load(cls, path) -> "ConceptGraph":
        with open(path, "rb") as fh:
            magic = fh.read(len(_INDEX_MAGIC))
            if magic != _INDEX_MAGIC:
                raise FormatError(f"{path}: not a concept-graph index file")
            version = fh.read(1)
            if not version or version[0] != _INDEX_VERSION:
                raise FormatError(f"{path}: unsupported index version {version!r}")
            forward, inverse, num_edges = pickle.load(fh)
        return cls(forward, inverse, num_edges)


def is_index_file(path) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(len(_INDEX_MAGIC)) == _INDEX_MAGIC
    except OSError:
        return False


def load_concept_graph(path, min_frequency: int = 1, column_order: str = "hyper-hypo",
                       on_error: str = "abort") -> ConceptGraph:
    """Load a concept graph from a 3-column TSV of IsA rows.

    The public taxonomy dump orders columns (concept, instance, frequency);
    that is the default ``hyper-hypo`` order. Pass ``hypo-hyper`` for files
    with the instance first. Malformed rows (wrong column count,
    non-integer or non-positive frequency, empty phrase, self-loop) abort
    with the line number, or are skipped and counted when
    ``on_error="skip"``.
    """
    if column_order not in ("hyper-hypo", "hypo-hyper"):
        raise ValueError(f"unknown column_order {column_order!r}")
    if on_error not in ("abort", "skip"):
        raise ValueError(f"unknown on_error policy {on_error!r}")
    hyper_first = column_order == "hyper-hypo"
    report = LoadReport()

    def rows() -> Iterator[tuple[str, str, int]]:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n").rstrip("\r")
                if not line:
                    continue
                report.rows += 1
                cols = line.split("\t")
                if len(cols) != 3:
                    _row_problem(report, on_error, line_no, f"expected 3 columns, got {len(cols)}")
                    continue
                try:
                    freq = int(cols[2])
                except ValueError:
                    _row_problem(report, on_error, line_no, f"non-integer frequency {cols[2]!r}")
                    continue
                hyper, hypo = (cols[0], cols[1]) if hyper_first else (cols[1], cols[0])
                edge = ConceptEdge(normalize_phrase(hypo), normalize_phrase(hyper), freq)
                try:
                    edge.validate()
                except ValueError as err:
                    _row_problem(report, on_error, line_no, str(err))
                    continue
                report.kept += 1
                yield edge.hypo, edge.hyper, edge.frequency

    graph = ConceptGraph.from_edges(rows(), min_frequency=min_frequency)
    graph.load_report = report
    return graph


def _row_problem(report: LoadReport, on_error: str, line_no: int, reason: str) -> None:
    if on_error == "abort":
        raise FormatError(reason, line_no)
    report.note(line_no, reason)


def query_isa(graph: ConceptGraph, phrase: str, direction: str) -> list:
    """Query one direction of the IsA index; unknown phrases yield []."""
    if direction == "abstraction":
        return list(graph.abstractions(phrase))
    if direction == "instantiation":
        return list(graph.instantiations(phrase))
    raise ValueError(f"direction must be 'abstraction' or 'instantiation', got {direction!r}")


class Triple(NamedTuple):
    head: str
    relation: str
    tail: str


class TripleStore:
    """Deduplicated triple set with role and per-relation indexes.

    ``nodes`` may be a superset of the nodes observed in triples: a CKG
    release can declare nodes that no triple touches, and those isolated
    nodes are exactly what ``prune_ckg`` can drop. Candidate lists for
    sampling (heads, per-relation tails, all nodes) are sorted tuples, so
    index-based random draws are reproducible across processes.
    """

    def __init__(self, triples: Iterable[Triple], relations: Iterable[str],
                 nodes: Iterable[str] | None = None):
        self.triples = frozenset(Triple(*t) for t in triples)
        self.relations = tuple(sorted(set(relations)))
        rel_set = set(self.relations)
        for t in self.triples:
            if t.relation not in rel_set:
                raise ValueError(f"triple relation {t.relation!r} not in declared vocabulary")
        observed = {t.head for t in self.triples} | {t.tail for t in self.triples}
        self.nodes = frozenset(nodes) | observed if nodes is not None else frozenset(observed)

        self.head_list = tuple(sorted({t.head for t in self.triples}))
        tails: dict[str, set] = defaultdict(set)
        for t in self.triples:
            tails[t.relation].add(t.tail)
        self._tails_by_relation = {rel: tuple(sorted(ts)) for rel, ts in tails.items()}
        self.node_list = tuple(sorted(self.nodes))
        self.load_report: LoadReport | None = None

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self.triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.sorted())

    def sorted(self) -> list[Triple]:
        """Triples in lexicographic order; the deterministic iteration order."""
        return sorted(self.triples)

    def tails_for(self, relation: str) -> tuple:
        return self._tails_by_relation.get(relation, ())

    def num_nodes(self) -> int:
        return len(self.nodes)


def load_ckg(path, format: str = "atomic-tsv", nodes_path=None,
             on_error: str = "skip") -> TripleStore:
    """Load a seed CKG from a head/relation/tail TSV.

    Rows with an unknown relation label or empty node text are rejected
    with diagnostics (see ``store.load_report``); ``on_error="abort"``
    raises instead. ``nodes_path`` optionally supplies one node per line
    to declare nodes beyond those observed in triples.
    """
    if format not in _FORMAT_RELATIONS:
        raise ValueError(f"unknown CKG format {format!r}")
    if on_error not in ("abort", "skip"):
        raise ValueError(f"unknown on_error policy {on_error!r}")
    vocab = _FORMAT_RELATIONS[format]
    vocab_set = set(vocab) if vocab is not None else None
    report = LoadReport()

    triples = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            report.rows += 1
            cols = line.split("\t")
            if len(cols) != 3:
                _row_problem(report, on_error, line_no, f"expected 3 columns, got {len(cols)}")
                continue
            head, relation, tail = (normalize_text(c) for c in cols)
            if not head or not tail:
                _row_problem(report, on_error, line_no, "empty node text")
                continue
            if vocab_set is not None and relation not in vocab_set:
                _row_problem(report, on_error, line_no, f"unknown relation label {relation!r}")
                continue
            triples.add(Triple(head, relation, tail))
            report.kept += 1

    nodes = None
    if nodes_path is not None:
        with open(nodes_path, encoding="utf-8") as fh:
            nodes = {normalize_text(line) for line in fh if line.strip()}

    relations = vocab if vocab is not None else sorted({t.relation for t in triples})
    store = TripleStore(triples, relations, nodes=nodes)
    store.load_report = report
    return store


def write_ckg(store: TripleStore, path, nodes_path=None) -> None:
    """Write the store as canonical sorted TSV (atomic rename)."""
    from .runio import atomic_writer

    with atomic_writer(path) as fh:
        for t in store.sorted():
            fh.write(f"{t.head}\t{t.relation}\t{t.tail}\n")
    if nodes_path is not None:
        with atomic_writer(nodes_path) as fh:
            for node in store.node_list:
                fh.write(node + "\n")


def prune_ckg(store: TripleStore, excluded_relations: Iterable[str] = (),
              drop_isolated: bool = False) -> TripleStore:
    """Drop triples of excluded relations and, optionally, isolated nodes."""
    excluded = set(excluded_relations)
    unknown = excluded - set(store.relations)
    if unknown:
        raise ValueError(f"excluded relations not in vocabulary: {sorted(unknown)}")
    kept = {t for t in store.triples if t.relation not in excluded}
    relations = tuple(r for r in store.relations if r not in excluded)
    if drop_isolated:
        nodes = {t.head for t in kept} | {t.tail for t in kept}
    else:
        nodes = store.nodes
    return TripleStore(kept, relations, nodes=nodes)


def split_triples(store: TripleStore, ratios: tuple[float, float, float],
                  seed: int) -> tuple[TripleStore, TripleStore, TripleStore]:
    """Partition the store into train/dev/test by ratio, deterministically.

    Sizes follow the largest-remainder rule, so each part is within one
    triple of its exact proportion and the parts are disjoint and
    exhaustive. The shuffle is seeded over lexicographically sorted
    triples, so the same (store, ratios, seed) always yields the same
    partition.
    """
    import random as _random

    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios!r}")
    triples = store.sorted()
    _random.Random(seed).shuffle(triples)
    sizes = _largest_remainder(len(triples), ratios)
    parts = []
    start = 0
    for size in sizes:
        chunk = triples[start:start + size]
        start += size
        parts.append(TripleStore(chunk, store.relations))
    return tuple(parts)


def _largest_remainder(total: int, ratios) -> list[int]:
    denom = float(sum(ratios))
    exact = [total * r / denom for r in ratios]
    sizes = [int(x) for x in exact]
    leftovers = total - sum(sizes)
    by_fraction = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in by_fraction[:leftovers]:
        sizes[i] += 1
    return sizes
