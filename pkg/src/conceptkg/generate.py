"""Expand seed triples by conceptual substitution, score, and accept.

Construction enumerates deterministically rather than sampling: every
substitution candidate of either side (above a frequency floor, capped
per side by frequency) yields one candidate triple with the other side
unchanged. Candidates already present in the seed KG are kept but
marked non-novel. Scores come from any object with a
``score(triples) -> [floats]`` method (stub or HTTP client), and
acceptance keeps triples at or above a threshold, ordered by descending
score with input order breaking ties.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .conceptualize import SubstitutionCandidate, identify_conceptualizations
from .kg_store import ConceptGraph, Triple, TripleStore
from .parses import ParsedNodeIndex
from .runio import atomic_writer


@dataclass(frozen=True)
class ExpandLimits:
    per_side_cap: int = 10
    frequency_floor: int = 1

    def __post_init__(self):
        if self.per_side_cap < 1:
            raise ValueError("per_side_cap must be >= 1")
        if self.frequency_floor < 1:
            raise ValueError("frequency_floor must be >= 1")


@dataclass(frozen=True)
class ExpandedTriple:
    triple: Triple
    seed: Triple
    side: str
    candidate: SubstitutionCandidate
    novel: bool | None = None


@dataclass(frozen=True)
class ScoredTriple:
    triple: Triple
    score: float
    origin: ExpandedTriple | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


def expand_seed(seed: Triple, parsed, graph: ConceptGraph,
                limits: ExpandLimits = ExpandLimits(),
                known: TripleStore | None = None) -> list[ExpandedTriple]:
    """All capped candidate triples for one seed.

    ``parsed`` is the (head, tail) ParsedNode pair; a None side is
    skipped. Per side, candidates with frequency >= the floor are kept
    and the top ``per_side_cap`` by frequency (enumeration order breaking
    ties) survive. ``known`` marks candidate triples already in the KG
    as non-novel; without it novelty is left undetermined.
    """
    expanded: list[ExpandedTriple] = []
    for side, parse in zip(("head", "tail"), parsed):
        if parse is None:
            continue
        candidates = [c for c in identify_conceptualizations(parse, graph)
                      if c.frequency >= limits.frequency_floor]
        ranked = sorted(range(len(candidates)), key=lambda i: (-candidates[i].frequency, i))
        for i in sorted(ranked[:limits.per_side_cap]):
            candidate = candidates[i]
            triple = seed._replace(**{side: candidate.new_text})
            novel = (triple not in known) if known is not None else None
            expanded.append(ExpandedTriple(triple, seed, side, candidate, novel))
    return expanded


def accept_by_threshold(scored: Sequence[ScoredTriple], threshold: float) -> list[Triple]:
    """Triples scoring >= threshold, by descending score then input order."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    ranked = sorted(enumerate(scored), key=lambda pair: (-pair[1].score, pair[0]))
    return [s.triple for _, s in ranked if s.score >= threshold]


def generate_triples(seeds, parses: ParsedNodeIndex, graph: ConceptGraph, scorer,
                     threshold: float, limits: ExpandLimits = ExpandLimits(),
                     known: TripleStore | None = None) -> list[ScoredTriple]:
    """Expand every seed, score all candidates, and keep the accepted ones.

    Returns accepted ScoredTriples ordered by descending score then
    expansion order. With a deterministic scorer the result is a pure
    function of the inputs.
    """
    expanded: list[ExpandedTriple] = []
    for seed in sorted(Triple(*s) for s in seeds):
        parsed = (parses.get(seed.head), parses.get(seed.tail))
        expanded.extend(expand_seed(seed, parsed, graph, limits=limits, known=known))
    scores = scorer.score([e.triple for e in expanded])
    scored = [ScoredTriple(e.triple, s, origin=e) for e, s in zip(expanded, scores)]
    ranked = sorted(enumerate(scored), key=lambda pair: (-pair[1].score, pair[0]))
    return [s for _, s in ranked if s.score >= threshold]


def write_accepted(accepted: Sequence[ScoredTriple], triples_path, provenance_path=None) -> None:
    """Write accepted triples as CKG TSV (deduplicated) plus a provenance
    sidecar with one JSON record per accepted candidate."""
    seen = set()
    with atomic_writer(triples_path) as fh:
        for s in accepted:
            if s.triple in seen:
                continue
            seen.add(s.triple)
            fh.write(f"{s.triple.head}\t{s.triple.relation}\t{s.triple.tail}\n")
    if provenance_path is None:
        return
    with atomic_writer(provenance_path) as fh:
        for s in accepted:
            origin = s.origin
            record = {
                "head": s.triple.head,
                "relation": s.triple.relation,
                "tail": s.triple.tail,
                "score": s.score,
            }
            if origin is not None:
                record.update({
                    "seed_head": origin.seed.head,
                    "seed_relation": origin.seed.relation,
                    "seed_tail": origin.seed.tail,
                    "side": origin.side,
                    "original_phrase": origin.candidate.original_phrase,
                    "replacement": origin.candidate.replacement_phrase,
                    "direction": origin.candidate.direction,
                    "frequency": origin.candidate.frequency,
                    "novel": origin.novel,
                })
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False,
                                separators=(",", ":")) + "\n")
