"""Depth-bounded binary trees over the covariate space.

:class:`SubgroupTree` leaves carry a group index; :class:`PolicyTree`
leaves carry a treat/don't-treat action. Both are immutable and share
the same split representation (axis threshold or category subset).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Split:
    column: int
    threshold: Optional[float] = None  # continuous: left is x <= threshold
    levels: Optional[frozenset] = None  # categorical: left is code in levels

    def __post_init__(self):
        if (self.threshold is None) == (self.levels is None):
            raise ValueError("split needs exactly one of threshold, levels")

    def goes_left(self, x: np.ndarray) -> np.ndarray:
        col = x[:, self.column]
        if self.threshold is not None:
            return col <= self.threshold
        return np.isin(col.astype(int), sorted(self.levels))

    def encode(self) -> tuple:
        if self.threshold is not None:
            return (0, self.column, (float(self.threshold),))
        return (1, self.column, tuple(sorted(self.levels)))

    def describe(self, names=None) -> str:
        name = names[self.column] if names else f"x{self.column + 1}"
        if self.threshold is not None:
            return f"{name} <= {self.threshold:g}"
        return f"{name} in {{{', '.join(str(l) for l in sorted(self.levels))}}}"


@dataclass(frozen=True)
class Node:
    split: Optional[Split] = None
    left: Optional["Node"] = None
    right: Optional["Node"] = None
    value: int = 0  # group index or policy action at a leaf

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def encode(self) -> tuple:
        if self.is_leaf:
            return ("L", self.value)
        return ("S",) + self.split.encode() + (self.left.encode(), self.right.encode())

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": int(self.value)}
        s = self.split
        d: dict = {"column": s.column}
        if s.threshold is not None:
            d["threshold"] = float(s.threshold)
        else:
            d["levels"] = sorted(int(l) for l in s.levels)
        d["left"] = self.left.to_dict()
        d["right"] = self.right.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        if "leaf" in d:
            return cls(value=int(d["leaf"]))
        split = Split(
            column=int(d["column"]),
            threshold=d.get("threshold"),
            levels=frozenset(d["levels"]) if "levels" in d else None,
        )
        return cls(split=split, left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))


def _render(node: Node, names, indent: int, leaf_fmt) -> list[str]:
    pad = "  " * indent
    if node.is_leaf:
        return [pad + leaf_fmt(node.value)]
    lines = [pad + f"if {node.split.describe(names)}:"]
    lines += _render(node.left, names, indent + 1, leaf_fmt)
    lines += [pad + "else:"]
    lines += _render(node.right, names, indent + 1, leaf_fmt)
    return lines


class _TreeBase:
    def __init__(self, root: Node):
        self.root = root
        self.depth = root.depth()

    def encode(self) -> tuple:
        return (self.depth, self.root.encode())

    def to_dict(self) -> dict:
        return self.root.to_dict()

    def __eq__(self, other):
        return type(self) is type(other) and self.encode() == other.encode()

    def __hash__(self):
        return hash(self.encode())


class SubgroupTree(_TreeBase):
    """Binary tree whose leaves index subgroups 0..K-1 left to right."""

    def __init__(self, root: Node):
        super().__init__(root)
        self.n_groups = sum(1 for _ in _leaves(root))

    def assign(self, x: np.ndarray) -> np.ndarray:
        """Map each row of x to its leaf's group index."""
        labels = np.empty(x.shape[0], dtype=int)
        _assign(self.root, x, np.arange(x.shape[0]), labels, iter(range(self.n_groups)))
        return labels

    def render(self, names=None) -> str:
        return "\n".join(_render(self.root, names, 0, lambda v: f"group {v + 1}"))

    @classmethod
    def from_dict(cls, d: dict) -> "SubgroupTree":
        return relabel(Node.from_dict(d))


class PolicyTree(_TreeBase):
    """Binary tree whose leaves carry an action in {0, 1}."""

    def assign(self, x: np.ndarray) -> np.ndarray:
        """Map each row of x to its leaf action (1 = treat)."""
        actions = np.empty(x.shape[0], dtype=int)
        _assign_values(self.root, x, np.arange(x.shape[0]), actions)
        return actions

    def render(self, names=None) -> str:
        return "\n".join(
            _render(self.root, names, 0, lambda v: "treat" if v else "no treatment")
        )

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyTree":
        return cls(Node.from_dict(d))


def _leaves(node: Node):
    if node.is_leaf:
        yield node
    else:
        yield from _leaves(node.left)
        yield from _leaves(node.right)


def _assign(node: Node, x, idx, labels, counter):
    if node.is_leaf:
        labels[idx] = next(counter)
        return
    left = node.split.goes_left(x[idx])
    _assign(node.left, x, idx[left], labels, counter)
    _assign(node.right, x, idx[~left], labels, counter)


def _assign_values(node: Node, x, idx, out):
    if node.is_leaf:
        out[idx] = node.value
        return
    left = node.split.goes_left(x[idx])
    _assign_values(node.left, x, idx[left], out)
    _assign_values(node.right, x, idx[~left], out)


def leaf(value: int = 0) -> Node:
    return Node(value=value)


def split_node(split: Split, left: Node, right: Node) -> Node:
    return Node(split=split, left=left, right=right)


def relabel(root: Node) -> SubgroupTree:
    """Renumber leaves 0..K-1 in left-to-right order."""
    counter = iter(range(10**9))

    def rebuild(node: Node) -> Node:
        if node.is_leaf:
            return Node(value=next(counter))
        return Node(split=node.split, left=rebuild(node.left), right=rebuild(node.right))

    return SubgroupTree(rebuild(root))
