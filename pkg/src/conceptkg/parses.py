"""Dependency-parsed node ingestion and subtree-span geometry.

Nodes arrive as CoNLL-U style blocks produced by an external parser.
Only the ID, FORM, LEMMA, UPOS, HEAD and DEPREL columns are consumed;
anything else is ignored. Each block must form a single well-rooted
tree. ``subtree_span`` gives the leftmost/rightmost token position
reachable from a token through child edges, which is all the span
enumeration downstream needs (tokens inside the bounds that belong to
other subtrees are tolerated for non-projective parses).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .kg_store import normalize_text


class BlockError(ValueError):
    """Invalid CoNLL-U block; message names the 1-based block index."""


@dataclass(frozen=True)
class Token:
    index: int          # 1-based position
    form: str
    lemma: str
    upos: str
    head: int           # governor position, 0 = root
    deprel: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.head < 0:
            raise ValueError(f"token head must be >= 0, got {self.head}")
        if self.head == self.index:
            raise ValueError(f"token {self.index} is its own governor")


@dataclass
class ParsedNode:
    """One node's token sequence with its dependency tree.

    ``lemmatized`` records that the FORM column already holds lemmas
    (ASER-style nodes), which disables surface grammar repair downstream.
    """

    tokens: tuple[Token, ...]
    text: str = ""
    node_id: str | None = None
    lemmatized: bool = False
    _children: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.tokens = tuple(self.tokens)
        n = len(self.tokens)
        if n == 0:
            raise ValueError("node has no tokens")
        for pos, tok in enumerate(self.tokens, 1):
            if tok.index != pos:
                raise ValueError(f"token ids not contiguous: expected {pos}, got {tok.index}")
            if tok.head > n:
                raise ValueError(f"token {pos} head {tok.head} out of range (length {n})")
        roots = [t.index for t in self.tokens if t.head == 0]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        children: dict[int, list[int]] = {i: [] for i in range(0, n + 1)}
        for t in self.tokens:
            children[t.head].append(t.index)
        self._children = {k: tuple(v) for k, v in children.items()}
        # Reject cycles: every token must be reachable from the root.
        seen = set()
        stack = [roots[0]]
        while stack:
            i = stack.pop()
            seen.add(i)
            stack.extend(self._children[i])
        if len(seen) != n:
            raise ValueError("dependency arcs do not form a single tree (cycle or disconnected token)")
        joined = " ".join(t.form for t in self.tokens)
        if self.text:
            if "".join(self.text.split()) != "".join(joined.split()):
                raise ValueError("token forms do not reconstruct the node text")
            self.text = normalize_text(self.text)
        else:
            self.text = joined

    def __len__(self) -> int:
        return len(self.tokens)

    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def children_of(self, index: int) -> tuple:
        return self._children.get(index, ())

    def phrase(self, l: int, r: int, lower: bool = True) -> str:
        """Surface phrase of tokens l..r inclusive (1-based)."""
        text = " ".join(t.form for t in self.tokens[l - 1:r])
        return text.lower() if lower else text


def subtree_span(node: ParsedNode, k: int) -> tuple[int, int]:
    """(L, R) bounds of the positions reachable from token k via child edges."""
    if not 1 <= k <= len(node):
        raise ValueError(f"token index {k} out of range 1..{len(node)}")
    lo = hi = k
    stack = [k]
    while stack:
        i = stack.pop()
        lo = min(lo, i)
        hi = max(hi, i)
        stack.extend(node.children_of(i))
    return lo, hi


# Column positions in a CoNLL-U row.
_ID, _FORM, _LEMMA, _UPOS, _HEAD, _DEPREL = 0, 1, 2, 3, 6, 7


def read_parsed_nodes(path, lemmatized: bool = False) -> Iterator[ParsedNode]:
    """Stream ParsedNodes from a CoNLL-U file, one per block.

    Blocks are separated by blank lines; ``# text = ...`` comments carry
    the original node text and ``# node_id = ...`` an external id.
    Multiword-token and empty-node rows (ids like 1-2 or 1.1) are skipped.
    Invalid blocks raise BlockError naming the block.
    """
    with open(path, encoding="utf-8") as fh:
        block_no = 0
        in_block = False
        rows: list[Token] = []
        text = ""
        node_id = None

        def flush():
            nonlocal rows, text, node_id, in_block
            node = None
            if rows:
                try:
                    node = ParsedNode(tuple(rows), text=text, node_id=node_id, lemmatized=lemmatized)
                except ValueError as err:
                    raise BlockError(f"block {block_no}: {err}") from err
            rows, text, node_id, in_block = [], "", None, False
            return node

        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                node = flush()
                if node is not None:
                    yield node
                continue
            if not in_block:
                in_block = True
                block_no += 1
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("text ="):
                    text = body[len("text ="):].strip()
                elif body.startswith("node_id ="):
                    node_id = body[len("node_id ="):].strip()
                continue
            cols = line.split("\t")
            if len(cols) < 8:
                raise BlockError(f"block {block_no}: line {line_no}: expected >= 8 columns, got {len(cols)}")
            tok_id = cols[_ID]
            if "-" in tok_id or "." in tok_id:
                continue
            try:
                index = int(tok_id)
                head = int(cols[_HEAD])
            except ValueError as err:
                raise BlockError(f"block {block_no}: line {line_no}: {err}") from err
            try:
                rows.append(Token(index=index, form=cols[_FORM], lemma=cols[_LEMMA],
                                  upos=cols[_UPOS], head=head, deprel=cols[_DEPREL]))
            except ValueError as err:
                raise BlockError(f"block {block_no}: line {line_no}: {err}") from err
        node = flush()
        if node is not None:
            yield node


class ParsedNodeIndex:
    """Lookup from whitespace-normalized node text to its parse."""

    def __init__(self, nodes=()):
        self._by_text: dict[str, ParsedNode] = {}
        for node in nodes:
            self.add(node)

    def add(self, node: ParsedNode) -> None:
        self._by_text[normalize_text(node.text)] = node

    def get(self, text: str) -> ParsedNode | None:
        return self._by_text.get(normalize_text(text))

    def __contains__(self, text: str) -> bool:
        return normalize_text(text) in self._by_text

    def __len__(self) -> int:
        return len(self._by_text)

    @classmethod
    def from_file(cls, path, lemmatized: bool = False) -> "ParsedNodeIndex":
        return cls(read_parsed_nodes(path, lemmatized=lemmatized))
