"""Entity-span enumeration against the IsA graph, with grammar repair.

For every noun or proper-noun token the enumerator probes every
contiguous span that contains the token and stays inside its dependency
subtree bounds, querying the concept graph in both directions. Each hit
becomes a rewritten node text: the span is replaced and the remainder of
the sentence is kept. Rewrites equal to the source text, and
substitutions of a phrase by itself, are dropped; rewrites that collide
on the same output text are merged keeping the highest frequency.

Surface-form nodes get lightweight grammar repair so substituted text
does not leak number or article mistakes: the replacement's head noun is
pluralized when the replaced head token was plural, and an immediately
preceding indefinite article is re-chosen by initial sound or dropped
for plural replacements. Lemmatized nodes take the replacement verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .kg_store import ConceptGraph, normalize_text
from .parses import ParsedNode, subtree_span

NOUN_TAGS = ("NOUN", "PROPN")
DIRECTIONS = ("abstraction", "instantiation")

IRREGULAR_PLURALS = {
    "child": "children", "person": "people", "man": "men", "woman": "women",
    "foot": "feet", "tooth": "teeth", "goose": "geese", "mouse": "mice",
    "ox": "oxen", "die": "dice", "leaf": "leaves", "loaf": "loaves",
    "knife": "knives", "life": "lives", "wife": "wives", "wolf": "wolves",
    "half": "halves", "shelf": "shelves", "thief": "thieves",
    "analysis": "analyses", "crisis": "crises", "thesis": "theses",
    "criterion": "criteria", "phenomenon": "phenomena",
    "sheep": "sheep", "fish": "fish", "deer": "deer", "species": "species",
    "series": "series",
}

# Words whose spelling defeats the vowel-letter heuristic for a/an.
_AN_PREFIXES = ("hour", "honest", "honor", "heir")
_A_PREFIXES = ("uni", "use", "usu", "one", "once", "euro", "ewe", "ufo")


@dataclass(frozen=True)
class SubstitutionCandidate:
    """One conceptualized rewrite of a node.

    ``span`` is the replaced 1-based token range (l, r) in the source;
    ``frequency`` is the IsA corpus count backing the substitution (the
    max over contributing edges when several rewrites collide).
    """

    new_text: str
    span: tuple[int, int]
    original_phrase: str
    replacement_phrase: str
    direction: str
    frequency: int

    def __post_init__(self):
        l, r = self.span
        if l > r:
            raise ValueError(f"bad span {self.span}")
        if self.frequency < 1:
            raise ValueError(f"non-positive frequency {self.frequency}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")


def pluralize(word: str) -> str:
    """Rule-table pluralization for a single (lowercase) noun."""
    if word in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[word]
    if word.endswith(("s", "x", "z", "ch", "sh")):
        return word + "es"
    if len(word) > 1 and word.endswith("y") and word[-2] not in "aeiou":
        return word[:-1] + "ies"
    if len(word) > 1 and word.endswith("o") and word[-2] not in "aeiou" \
            and word not in ("photo", "piano", "halo", "solo"):
        return word + "es"
    return word + "s"


def indefinite_article(phrase: str) -> str:
    """Choose a/an for the phrase by an initial-sound heuristic."""
    first = phrase.split()[0].lower()
    if first.startswith(_AN_PREFIXES):
        return "an"
    if first.startswith(_A_PREFIXES):
        return "a"
    return "an" if first[:1] in "aeiou" else "a"


def _is_plural(token) -> bool:
    form, lemma = token.form.lower(), token.lemma.lower()
    if form == lemma:
        return False
    if IRREGULAR_PLURALS.get(lemma) == form:
        return True
    return form == pluralize(lemma) or (form.endswith("s") and not lemma.endswith("s"))


def _span_head_token(node: ParsedNode, l: int, r: int):
    """Rightmost token in l..r governed from outside the span (noun phrases
    are head-final), falling back to the last span token."""
    for i in range(r, l - 1, -1):
        head = node.tokens[i - 1].head
        if head == 0 or head < l or head > r:
            return node.tokens[i - 1]
    return node.tokens[r - 1]


def repair_grammar(node: ParsedNode, span: tuple[int, int], replacement: str,
                   mode: str = "surface") -> str:
    """Substitute tokens l..r with the replacement phrase and repair.

    Lemmatized mode inserts the replacement verbatim. Surface mode
    pluralizes the replacement's last word when the replaced head token
    was plural, and fixes or drops an immediately preceding a/an.
    """
    l, r = span
    if not (1 <= l <= r <= len(node)):
        raise ValueError(f"span {span} out of range for node of length {len(node)}")
    if not replacement.strip():
        raise ValueError("empty replacement phrase")
    if mode not in ("surface", "lemmatized"):
        raise ValueError(f"unknown repair mode {mode!r}")
    forms = node.forms()
    rep_tokens = replacement.split()

    if mode == "surface":
        plural = _is_plural(_span_head_token(node, l, r))
        if plural:
            rep_tokens[-1] = pluralize(rep_tokens[-1])
        prefix = forms[:l - 1]
        if prefix and prefix[-1].lower() in ("a", "an"):
            if plural:
                prefix = prefix[:-1]
            else:
                article = indefinite_article(rep_tokens[0])
                prefix[-1] = article.capitalize() if prefix[-1][0].isupper() else article
        out = prefix + rep_tokens + forms[r:]
    else:
        out = forms[:l - 1] + rep_tokens + forms[r:]
    return normalize_text(" ".join(out))


def candidate_spans(node: ParsedNode, k: int) -> list[tuple[int, int]]:
    """All (l, r) with L <= l <= k <= r <= R for token k's subtree bounds."""
    lo, hi = subtree_span(node, k)
    return [(l, r) for l in range(lo, k + 1) for r in range(k, hi + 1)]


def identify_conceptualizations(node: ParsedNode, graph: ConceptGraph,
                                mode: str | None = None) -> list[SubstitutionCandidate]:
    """Enumerate all conceptualized rewrites of a node.

    Probes every candidate span of every noun/propn token against the
    graph in both directions. Candidates come back in deterministic
    order (token, span, direction, graph rank); rewrites with identical
    output text are merged keeping the maximum frequency. Nodes without
    eligible tokens yield an empty list.
    """
    if mode is None:
        mode = "lemmatized" if node.lemmatized else "surface"
    source_text = normalize_text(node.text)
    order: list[str] = []
    found: dict[str, SubstitutionCandidate] = {}
    for k in range(1, len(node) + 1):
        if node.tokens[k - 1].upos not in NOUN_TAGS:
            continue
        for l, r in candidate_spans(node, k):
            phrase = node.phrase(l, r)
            hits = (("abstraction", graph.abstractions(phrase)),
                    ("instantiation", graph.instantiations(phrase)))
            for direction, pairs in hits:
                for replacement, freq in pairs:
                    if replacement == phrase:
                        continue
                    new_text = repair_grammar(node, (l, r), replacement, mode=mode)
                    if new_text == source_text:
                        continue
                    prev = found.get(new_text)
                    if prev is None:
                        found[new_text] = SubstitutionCandidate(
                            new_text=new_text, span=(l, r), original_phrase=phrase,
                            replacement_phrase=replacement, direction=direction,
                            frequency=freq)
                        order.append(new_text)
                    elif freq > prev.frequency:
                        found[new_text] = replace(prev, frequency=freq)
    return [found[t] for t in order]


def write_candidates_tsv(fh, node_id: str, candidates) -> None:
    """Dump candidates as TSV rows: node_id, l, r, direction, original,
    replacement, frequency, new_text."""
    for c in candidates:
        fh.write(f"{node_id}\t{c.span[0]}\t{c.span[1]}\t{c.direction}\t"
                 f"{c.original_phrase}\t{c.replacement_phrase}\t{c.frequency}\t{c.new_text}\n")
