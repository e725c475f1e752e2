"""Finite partially ordered sets of time labels with a distinguished chain."""

import numpy as np

from ..errors import StructureError, ValidationError


class TimePoset:
    """A finite poset of time labels containing a chain identified with ``0..T``.

    Parameters
    ----------
    elements : sequence of hashable
        Labels, in a fixed order used throughout (amplitude vectors, clock
        labels and state lists are indexed in this order).
    relations : iterable of (a, b)
        Pairs meaning ``a <= b``. Reflexive and transitive consequences are
        added automatically.
    chain : sequence
        The elements playing the role of times ``0, 1, ..., T``, in order.

    Notes
    -----
    The relation is stored as its transitive reduction (the Hasse diagram);
    the full closure is kept as a boolean matrix for queries.
    """

    def __init__(self, elements, relations, chain):
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise ValidationError("poset elements must be distinct")
        self.index = {p: i for i, p in enumerate(self.elements)}
        size = len(self.elements)
        leq = np.eye(size, dtype=bool)
        for a, b in relations:
            try:
                leq[self.index[a], self.index[b]] = True
            except KeyError as exc:
                raise ValidationError(f"relation mentions unknown element {exc.args[0]!r}") from None
        for k in range(size):
            leq |= leq[:, [k]] & leq[[k], :]
        both = leq & leq.T
        np.fill_diagonal(both, False)
        if both.any():
            i, j = map(int, np.argwhere(both)[0])
            raise StructureError(f"order is not antisymmetric: {self.elements[i]!r} and {self.elements[j]!r}")
        self._leq = leq
        self._leq.setflags(write=False)

        self.chain = tuple(chain)
        if not self.chain:
            raise ValidationError("the chain must contain at least the time-0 element")
        try:
            chain_idx = [self.index[c] for c in self.chain]
        except KeyError as exc:
            raise ValidationError(f"chain mentions unknown element {exc.args[0]!r}") from None
        if len(set(chain_idx)) != len(chain_idx):
            raise ValidationError("chain elements must be distinct")
        for a, b in zip(chain_idx, chain_idx[1:]):
            if not leq[a, b]:
                raise StructureError(f"chain is not increasing at {self.elements[a]!r} -> {self.elements[b]!r}")
        self._chain_idx = np.array(chain_idx)
        self._time_of = {c: t for t, c in enumerate(self.chain)}
        self._tp = tuple(self._latest_chain_time(i) for i in range(size))

    @classmethod
    def chain_only(cls, T):
        """The totally ordered poset ``0 < 1 < ... < T``."""
        T = int(T)
        elements = list(range(T + 1))
        return cls(elements, [(t, t + 1) for t in range(T)], elements)

    def __len__(self):
        return len(self.elements)

    def __repr__(self):
        return f"TimePoset(size={len(self)}, T={self.T})"

    @property
    def T(self):
        return len(self.chain) - 1

    def leq(self, a, b):
        return bool(self._leq[self.index[a], self.index[b]])

    def closure(self):
        """Boolean matrix ``M[i, j] = elements[i] <= elements[j]``."""
        return self._leq

    def hasse(self):
        """Covering pairs of the order (the transitive reduction)."""
        strict = self._leq.copy()
        np.fill_diagonal(strict, False)
        implied = (strict.astype(np.int64) @ strict.astype(np.int64)) > 0
        cover = strict & ~implied
        return [(self.elements[i], self.elements[j]) for i, j in zip(*np.nonzero(cover))]

    def in_chain(self, p):
        return p in self._time_of

    def time_of(self, p):
        """Chain time of ``p`` (``None`` when ``p`` is not a chain element)."""
        return self._time_of.get(p)

    def _latest_chain_time(self, i):
        below = self._leq[self._chain_idx, i]
        if not below.any():
            return None
        return int(np.nonzero(below)[0].max())

    def t_p(self, p):
        """Largest chain time ``t`` with ``t <= p``, or ``None`` if none exists."""
        return self._tp[self.index[p]]

    def t_p_array(self):
        """``t_p`` for every element, with -1 where it does not exist."""
        return np.array([-1 if t is None else t for t in self._tp], dtype=np.int64)

    def to_dict(self):
        return {
            "elements": [_jsonable(p) for p in self.elements],
            "relations": [[_jsonable(a), _jsonable(b)] for a, b in self.hasse()],
            "chain": [_jsonable(c) for c in self.chain],
        }

    @classmethod
    def from_dict(cls, data):
        conv = _from_jsonable
        return cls([conv(p) for p in data["elements"]],
                   [(conv(a), conv(b)) for a, b in data["relations"]],
                   [conv(c) for c in data["chain"]])


def _jsonable(p):
    if isinstance(p, tuple):
        return {"tuple": [_jsonable(x) for x in p]}
    if isinstance(p, (np.integer,)):
        return int(p)
    return p


def _from_jsonable(p):
    if isinstance(p, dict) and "tuple" in p:
        return tuple(_from_jsonable(x) for x in p["tuple"])
    return p
