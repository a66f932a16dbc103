"""Diversity and novelty metrics over generated nodes.

All ratios are normalized by the number of produced nodes (not tokens):
Dist-1 and Dist-2 count distinct unigrams/bigrams per produced node,
Dist-N distinct node texts per produced node, and the novelty ratios
count produced nodes absent from the training node set, over all and
over distinct produced nodes. N/Seed is produced nodes per seed triple.

Node normalization strips structural words (determiners, auxiliaries,
pronouns, expletives; shipped as a versioned data file) so that
near-paraphrases differing only in such words merge before the
normalized variants of Dist-N and the novelty ratios are computed. A
node made only of structural words normalizes to the empty string,
which counts as one distinct node.

Note Dist-1/Dist-2 can exceed 1.0 on tiny pools (a single node with
many distinct words); Dist-N and the novelty ratios are always in
[0, 1]. Distinct counts are pooled across the whole set, and every
metric is invariant to record order.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, NamedTuple

from .kg_store import Triple, normalize_text

SIDES = ("head", "tail")

_structural_words_cache: frozenset | None = None


def load_structural_words(path=None) -> frozenset:
    """Load the structural-word list (the shipped file by default)."""
    if path is None:
        text = resources.files("conceptkg.data").joinpath("structural_words.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def _default_structural_words() -> frozenset:
    global _structural_words_cache
    if _structural_words_cache is None:
        _structural_words_cache = load_structural_words()
    return _structural_words_cache


def normalize_node(text: str, structural_words: frozenset | None = None) -> str:
    """Remove structural-word tokens and re-collapse whitespace."""
    words = structural_words if structural_words is not None else _default_structural_words()
    kept = [tok for tok in text.split() if tok.lower() not in words]
    return " ".join(kept)


@dataclass(frozen=True)
class GenerationRecord:
    seed: Triple
    side: str
    node: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be head or tail, got {self.side!r}")


class GenerationSet:
    """Generated nodes grouped by the seed triples that produced them."""

    def __init__(self, records: Iterable[GenerationRecord]):
        self.records = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def nodes(self) -> list[str]:
        return [r.node for r in self.records]

    def seed_count(self) -> int:
        return len({r.seed for r in self.records})

    @classmethod
    def from_tsv(cls, path, seed_store=None) -> "GenerationSet":
        """Read records from TSV: seed_head, relation, seed_tail, side, node.

        When ``seed_store`` is given, every record's seed must be a member.
        """
        records = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n").rstrip("\r")
                if not line:
                    continue
                cols = line.split("\t")
                if len(cols) != 5:
                    raise ValueError(f"line {line_no}: expected 5 columns, got {len(cols)}")
                seed = Triple(normalize_text(cols[0]), normalize_text(cols[1]), normalize_text(cols[2]))
                if seed_store is not None and seed not in seed_store:
                    raise ValueError(f"line {line_no}: seed {seed} not in the seed store")
                records.append(GenerationRecord(seed, cols[3].strip(), normalize_text(cols[4])))
        return cls(records)


class DiversityResult(NamedTuple):
    dist_1: float
    dist_2: float
    dist_n: float
    n_per_seed: float


class NoveltyResult(NamedTuple):
    novel_per_total: float
    novel_per_unique: float


def _token_stats(nodes: list[str]):
    unigrams, bigrams = set(), set()
    for node in nodes:
        toks = node.split()
        unigrams.update(toks)
        bigrams.update(zip(toks, toks[1:]))
    return unigrams, bigrams


def compute_diversity(gen: GenerationSet) -> DiversityResult:
    """Distinct unigram/bigram/node counts per produced node, plus N/Seed."""
    total = len(gen)
    if total == 0:
        raise ValueError("diversity is undefined on an empty generation set")
    nodes = gen.nodes()
    unigrams, bigrams = _token_stats(nodes)
    return DiversityResult(
        dist_1=len(unigrams) / total,
        dist_2=len(bigrams) / total,
        dist_n=len(set(nodes)) / total,
        n_per_seed=total / gen.seed_count(),
    )


def compute_novelty(gen: GenerationSet, train_nodes: Iterable[str]) -> NoveltyResult:
    """Fractions of produced nodes (all / distinct) absent from training."""
    total = len(gen)
    if total == 0:
        raise ValueError("novelty is undefined on an empty generation set")
    known = {normalize_text(n) for n in train_nodes}
    nodes = [normalize_text(n) for n in gen.nodes()]
    novel_total = sum(1 for n in nodes if n not in known)
    distinct = set(nodes)
    novel_distinct = sum(1 for n in distinct if n not in known)
    return NoveltyResult(novel_total / total, novel_distinct / len(distinct))


@dataclass(frozen=True)
class MetricsReport:
    n_per_seed: float
    dist_1: float
    dist_2: float
    dist_n: float
    novel_per_total: float
    novel_per_unique: float
    dist_n_norm: float
    novel_per_total_norm: float
    novel_per_unique_norm: float


def build_report(gen: GenerationSet, train_nodes: Iterable[str],
                 structural_words: frozenset | None = None) -> MetricsReport:
    """Raw metrics plus the normalized Dist-N and novelty variants."""
    train = list(train_nodes)
    diversity = compute_diversity(gen)
    novelty = compute_novelty(gen, train)

    norm = lambda text: normalize_node(text, structural_words)
    gen_norm = GenerationSet(
        GenerationRecord(r.seed, r.side, norm(r.node)) for r in gen.records)
    diversity_norm = compute_diversity(gen_norm)
    novelty_norm = compute_novelty(gen_norm, (norm(n) for n in train))

    return MetricsReport(
        n_per_seed=diversity.n_per_seed,
        dist_1=diversity.dist_1,
        dist_2=diversity.dist_2,
        dist_n=diversity.dist_n,
        novel_per_total=novelty.novel_per_total,
        novel_per_unique=novelty.novel_per_unique,
        dist_n_norm=diversity_norm.dist_n,
        novel_per_total_norm=novelty_norm.novel_per_total,
        novel_per_unique_norm=novelty_norm.novel_per_unique,
    )


_REPORT_ROWS = (
    ("N/Seed", "n_per_seed", False),
    ("Dist-N", "dist_n", True),
    ("Dist-1", "dist_1", True),
    ("Dist-2", "dist_2", True),
    ("N/T N", "novel_per_total", True),
    ("N/U N", "novel_per_unique", True),
    ("Dist-N-Norm", "dist_n_norm", True),
    ("N/T N-Norm", "novel_per_total_norm", True),
    ("N/U N-Norm", "novel_per_unique_norm", True),
)


def render_report(report: MetricsReport) -> str:
    """Plain-text table; percentage rows follow the usual presentation."""
    lines = []
    for name, attr, as_pct in _REPORT_ROWS:
        value = getattr(report, attr)
        rendered = f"{value * 100:.2f}%" if as_pct else f"{value:.2f}"
        lines.append(f"{name:<12} {rendered:>10}")
    return "\n".join(lines) + "\n"
