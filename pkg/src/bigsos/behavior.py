"""Finite truncations of cofree-comonad elements.

A :class:`StreamPrefix` is ``t0 -a0-> t1 -a1-> ... -a(n-1)-> tn``: a stream of
labels whose nodes carry colors.  A :class:`TreePrefix` is a finitely
branching labelled tree with colored nodes, known down to ``depth`` levels.
Colors are usually terms but any hashable value works, which is what the
``decorate`` operations rely on (they color nodes with prefixes).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .terms import Signature, parse_term


class BehaviorError(ValueError):
    pass


@dataclass(frozen=True)
class StreamPrefix:
    steps: tuple[tuple[Any, str], ...]
    tail_node: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple((n, str(a)) for n, a in self.steps))

    @classmethod
    def from_nodes(cls, nodes: Iterable[Any], labels: Iterable[str]) -> StreamPrefix:
        nodes = list(nodes)
        labels = list(labels)
        if len(nodes) != len(labels) + 1:
            raise BehaviorError("a prefix needs exactly one more node than labels")
        return cls(tuple(zip(nodes, labels)), nodes[-1])

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def nodes(self) -> tuple[Any, ...]:
        return tuple(n for n, _ in self.steps) + (self.tail_node,)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(a for _, a in self.steps)

    def map_nodes(self, fn: Callable[[Any], Any]) -> StreamPrefix:
        return StreamPrefix(tuple((fn(n), a) for n, a in self.steps), fn(self.tail_node))

    def truncate(self, n: int) -> StreamPrefix:
        if n > len(self):
            raise BehaviorError(f"cannot truncate a length-{len(self)} prefix to {n}")
        return StreamPrefix.from_nodes(self.nodes[: n + 1], self.labels[:n])

    def __str__(self) -> str:
        parts = []
        for node, label in self.steps:
            parts.append(f"{node} -{label}->")
        parts.append(str(self.tail_node))
        return " ".join(parts)


def prefix_head(p: StreamPrefix) -> Any:
    return p.steps[0][0] if p.steps else p.tail_node


def prefix_step(p: StreamPrefix) -> tuple[str, Any]:
    if not p.steps:
        raise BehaviorError("empty prefix has no first transition")
    return p.steps[0][1], p.nodes[1]


def prefix_tail(p: StreamPrefix, k: int) -> StreamPrefix:
    if k < 0 or k > len(p):
        raise BehaviorError(f"tail {k} of a length-{len(p)} prefix")
    return StreamPrefix(p.steps[k:], p.tail_node)


def prefix_decorate(p: StreamPrefix) -> StreamPrefix:
    """Color every node with the sub-prefix starting at it."""
    n = len(p)
    return StreamPrefix(
        tuple((prefix_tail(p, i), a) for i, (_, a) in enumerate(p.steps)),
        prefix_tail(p, n),
    )


_ARROW = re.compile(r"\s+-(\S+?)->\s+")


def parse_prefix(text: str, sig: Signature | None = None) -> StreamPrefix:
    """Inverse of ``str`` for prefixes whose nodes are terms."""
    pieces = _ARROW.split(text.strip())
    nodes = [parse_term(s, sig) for s in pieces[0::2]]
    labels = pieces[1::2]
    return StreamPrefix.from_nodes(nodes, labels)


@dataclass(frozen=True)
class TreePrefix:
    """A node with labelled children, known for ``depth`` levels below it.

    ``depth == 0`` means the children are not known; a node with
    ``depth >= 1`` and no children is a genuine leaf.
    """

    node: Any
    children: tuple[tuple[str, TreePrefix], ...] = ()
    depth: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if self.depth == 0 and self.children:
            raise BehaviorError("a depth-0 tree cannot list children")
        for _, sub in self.children:
            if sub.depth < self.depth - 1:
                raise BehaviorError("subtree shallower than its parent's budget")

    def __str__(self) -> str:
        return render_tree(self)


def tree_children(t: TreePrefix) -> frozenset[tuple[str, TreePrefix]]:
    if t.depth < 1:
        raise BehaviorError("depth budget exhausted")
    return frozenset(t.children)


def tree_colors(t: TreePrefix) -> frozenset[tuple[str, Any]]:
    """The one-step behavior: child labels paired with child root colors."""
    return frozenset((a, sub.node) for a, sub in tree_children(t))


def tree_decorate(t: TreePrefix) -> TreePrefix:
    """Color every node with the subtree rooted in it."""
    return TreePrefix(t, tuple((a, tree_decorate(sub)) for a, sub in t.children), t.depth)


def tree_map(t: TreePrefix, fn: Callable[[Any], Any]) -> TreePrefix:
    return TreePrefix(fn(t.node), tuple((a, tree_map(s, fn)) for a, s in t.children), t.depth)


def tree_canon(t: TreePrefix, d: int) -> TreePrefix:
    """Canonical representative of the depth-``d`` bisimilarity class.

    Children are canonicalized recursively, deduplicated and sorted, so
    trees differing only in child order or bisimilar duplicates coincide.
    """
    d = min(d, t.depth)
    if d <= 0:
        return TreePrefix(t.node, (), 0)
    kids = {(a, tree_canon(sub, d - 1)) for a, sub in t.children}
    ordered = sorted(kids, key=lambda c: (c[0], _tree_key(c[1])))
    return TreePrefix(t.node, tuple(ordered), d)


def _tree_key(t: TreePrefix) -> tuple:
    return (str(t.node), t.depth, tuple((a, _tree_key(s)) for a, s in t.children))


def tree_branching(t: TreePrefix) -> int:
    """Largest number of children at any node."""
    return max([len(t.children)] + [tree_branching(s) for _, s in t.children])


def render_tree(t: TreePrefix, indent: int = 0) -> str:
    lines = ["  " * indent + str(t.node)]
    for a, sub in t.children:
        sub_text = render_tree(sub, indent + 2)
        lines.append("  " * (indent + 1) + f"-{a}->")
        lines.append(sub_text)
    return "\n".join(lines)


def tree_to_dot(t: TreePrefix, name: str = "tree") -> str:
    ids: dict[int, str] = {}
    lines = [f"digraph {name} {{"]

    def walk(node: TreePrefix) -> str:
        nid = f"n{len(ids)}"
        ids[id(node)] = nid
        label = str(node.node).replace('"', '\\"')
        lines.append(f'  {nid} [label="{label}"];')
        for a, sub in node.children:
            cid = walk(sub)
            lines.append(f'  {nid} -> {cid} [label="{a}"];')
        return nid

    walk(t)
    lines.append("}")
    return "\n".join(lines) + "\n"


def stream_as_tree(p: StreamPrefix) -> TreePrefix:
    """A stream prefix read as a degenerate (single-path) tree."""
    tree = TreePrefix(p.tail_node, (), 0)
    for node, label in reversed(p.steps):
        tree = TreePrefix(node, ((label, tree),), tree.depth + 1)
    return tree
