"""Self-supervised dataset construction by triple corruption.

Negatives come from two corruption routes. Node substitution (NS) swaps
the head or tail, chosen 50/50, for a uniformly drawn different node;
in constrained mode replacement heads come from observed heads and
replacement tails from tails observed under the same relation. Entity
conceptualization (EC) rewrites one side through the concept graph,
drawing a candidate with probability proportional to its IsA frequency.

Emitted datasets pair every positive with one negative (EC with
probability ``ec_ratio``, else NS) under the filtered setting: any
fabricated negative that collides with a known positive is rejected and
redrawn. Each positive gets its own RNG stream derived from
(seed, position), so output is reproducible and independent of how work
is scheduled across workers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterator

from .conceptualize import identify_conceptualizations
from .kg_store import ConceptGraph, Triple, TripleStore
from .parses import ParsedNodeIndex
from .rng import derived_rng
from .runio import atomic_writer

log = logging.getLogger(__name__)

EC_RATIO_PRESETS = (0.5, 0.75, 0.875)


@dataclass(frozen=True)
class SamplerConfig:
    ec_ratio: float = 0.5
    head_prob: float = 0.5
    constrained_ns: bool = True
    seed: int = 0
    max_retries: int = 10
    on_ec_failure: str = "ns"  # ns | skip | drop-pair

    def __post_init__(self):
        if not 0.0 <= self.ec_ratio <= 1.0:
            raise ValueError(f"ec_ratio must be in [0, 1], got {self.ec_ratio}")
        if not 0.0 <= self.head_prob <= 1.0:
            raise ValueError(f"head_prob must be in [0, 1], got {self.head_prob}")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")
        if self.on_ec_failure not in ("ns", "skip", "drop-pair"):
            raise ValueError(f"unknown on_ec_failure policy {self.on_ec_failure!r}")


@dataclass(frozen=True)
class LabeledExample:
    triple: Triple
    label: int
    source: str  # positive | ns | ec
    provenance: dict | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.source not in ("positive", "ns", "ec"):
            raise ValueError(f"unknown source {self.source!r}")
        if (self.label == 1) != (self.source == "positive"):
            raise ValueError("label 1 iff source 'positive'")


@dataclass
class DatasetStats:
    """Counters reported alongside an emitted dataset."""

    positives: int = 0
    ns_negatives: int = 0
    ec_negatives: int = 0
    ec_fallbacks_to_ns: int = 0
    filtered_rejections: int = 0
    skipped_negatives: int = 0
    dropped_pairs: int = 0
    uncovered_nodes: int = 0

    def to_dict(self) -> dict:
        return dict(vars(self))


def _other(side: str) -> str:
    return "tail" if side == "head" else "head"


def corrupt_ns(triple: Triple, store: TripleStore, config: SamplerConfig, rng) -> Triple | None:
    """Swap one side for a uniformly drawn different node, or None.

    The side is chosen by ``head_prob``; if it has no alternative node
    the other side is tried before giving up.
    """
    first = "head" if rng.random() < config.head_prob else "tail"
    for side in (first, _other(first)):
        if config.constrained_ns:
            pool = store.head_list if side == "head" else store.tails_for(triple.relation)
        else:
            pool = store.node_list
        original = getattr(triple, side)
        distinct = len(pool) - (1 if original in pool else 0)
        if distinct < 1:
            continue
        for _ in range(config.max_retries):
            candidate = pool[rng.randrange(len(pool))]
            if candidate != original:
                return triple._replace(**{side: candidate})
    return None


def corrupt_ec(triple: Triple, parsed, graph: ConceptGraph, config: SamplerConfig,
               rng, cache: dict | None = None):
    """Conceptualize one side of the triple, or None if neither side can be.

    ``parsed`` is the (head, tail) pair of ParsedNodes (either may be
    None when no parse is available). The side is chosen by
    ``head_prob`` with fallback to the other side when the choice has no
    candidates. The candidate is drawn with probability proportional to
    its IsA frequency. Returns (corrupted triple, provenance dict).
    """
    head_parse, tail_parse = parsed
    first = "head" if rng.random() < config.head_prob else "tail"
    for side in (first, _other(first)):
        parse = head_parse if side == "head" else tail_parse
        if parse is None:
            continue
        candidates = _cached_candidates(parse, graph, cache)
        if not candidates:
            continue
        weights = [c.frequency for c in candidates]
        idx = rng.choices(range(len(candidates)), weights=weights, k=1)[0]
        chosen = candidates[idx]
        corrupted = triple._replace(**{side: chosen.new_text})
        provenance = {
            "side": side,
            "original": getattr(triple, side),
            "original_phrase": chosen.original_phrase,
            "replacement": chosen.replacement_phrase,
            "direction": chosen.direction,
            "frequency": chosen.frequency,
            "draw": idx,
        }
        return corrupted, provenance
    return None


def _cached_candidates(parse, graph, cache):
    if cache is None:
        return identify_conceptualizations(parse, graph)
    key = parse.text
    if key not in cache:
        cache[key] = identify_conceptualizations(parse, graph)
    return cache[key]


def build_dataset(store: TripleStore, graph: ConceptGraph, parses: ParsedNodeIndex,
                  config: SamplerConfig, filter_store: TripleStore | None = None,
                  stats: DatasetStats | None = None) -> Iterator[LabeledExample]:
    """Yield a balanced positive/negative example stream.

    Negatives are checked against ``filter_store`` (default: the input
    store; pass the full train+dev+test store when sampling on a split)
    and redrawn on collision up to ``max_retries``. When EC fails on a
    triple the config decides: fall back to NS, skip the negative, or
    drop the pair. Output is deterministic given the config seed.
    """
    if filter_store is None:
        filter_store = store
    if stats is None:
        stats = DatasetStats()
    cache: dict = {}

    for position, positive in enumerate(store.sorted()):
        rng = derived_rng(config.seed, position)
        use_ec = rng.random() < config.ec_ratio
        negative = None
        provenance = None
        source = None

        if use_ec:
            parsed = (parses.get(positive.head), parses.get(positive.tail))
            if parsed[0] is None and parsed[1] is None:
                stats.uncovered_nodes += 1
            for _ in range(config.max_retries):
                result = corrupt_ec(positive, parsed, graph, config, rng, cache)
                if result is None:
                    break  # not conceptualizable; retrying cannot help
                candidate, provenance = result
                if candidate in filter_store:
                    stats.filtered_rejections += 1
                    continue
                negative, source = candidate, "ec"
                break
            if negative is None:
                if config.on_ec_failure == "drop-pair":
                    stats.dropped_pairs += 1
                    continue
                if config.on_ec_failure == "ns":
                    stats.ec_fallbacks_to_ns += 1

        if negative is None and (not use_ec or config.on_ec_failure == "ns"):
            for _ in range(config.max_retries):
                candidate = corrupt_ns(positive, store, config, rng)
                if candidate is None:
                    break
                if candidate in filter_store:
                    stats.filtered_rejections += 1
                    continue
                negative, source = candidate, "ns"
                side = "head" if candidate.head != positive.head else "tail"
                provenance = {"side": side, "original": getattr(positive, side),
                              "replacement": getattr(candidate, side)}
                break

        stats.positives += 1
        yield LabeledExample(positive, 1, "positive")
        if negative is None:
            stats.skipped_negatives += 1
            continue
        if source == "ns":
            stats.ns_negatives += 1
        else:
            stats.ec_negatives += 1
        yield LabeledExample(negative, 0, source, provenance=provenance)


def measure_ec_coverage(store: TripleStore, graph: ConceptGraph,
                        parses: ParsedNodeIndex) -> float:
    """Fraction of triples with at least one conceptualizable side.

    An empty store yields 0.0.
    """
    if len(store) == 0:
        return 0.0
    cache: dict = {}
    covered = 0
    for triple in store.sorted():
        for text in (triple.head, triple.tail):
            parse = parses.get(text)
            if parse is not None and _cached_candidates(parse, graph, cache):
                covered += 1
                break
    return covered / len(store)


def example_to_json(example: LabeledExample) -> str:
    record = {
        "head": example.triple.head,
        "relation": example.triple.relation,
        "tail": example.triple.tail,
        "label": example.label,
        "source": example.source,
        "provenance": example.provenance,
    }
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_dataset(examples, path) -> int:
    """Write examples to a JSONL file atomically; returns the line count."""
    count = 0
    with atomic_writer(path) as fh:
        for example in examples:
            fh.write(example_to_json(example) + "\n")
            count += 1
    return count


def read_dataset(path) -> Iterator[LabeledExample]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            yield LabeledExample(
                Triple(record["head"], record["relation"], record["tail"]),
                record["label"], record["source"], provenance=record.get("provenance"))


def write_stats(stats: DatasetStats, config: SamplerConfig, path) -> None:
    payload = {"config": dict(vars(config)), "counters": stats.to_dict()}
    with atomic_writer(path) as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
