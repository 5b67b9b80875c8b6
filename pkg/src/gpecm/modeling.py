"""A small affine-expression layer that compiles to :class:`ConicProgram`.

Cone statements take affine expressions; any entry that is not already a
bare variable gets an auxiliary variable tied to it by an equality row, so
the compiled cones index variables only.
"""

from __future__ import annotations

from collections import Counter

import numpy as np
import scipy.sparse as sp

from .conic import RSOC, SOC, Cone, ConicProgram


class Affine:
    """Vector-valued affine function ``M x + const`` stored as COO triplets."""

    __slots__ = ("rows", "cols", "vals", "const")

    def __init__(self, rows, cols, vals, const):
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=float)
        self.const = np.atleast_1d(np.asarray(const, dtype=float))

    @classmethod
    def constant(cls, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls([], [], [], value)

    @property
    def size(self):
        return self.const.size

    def __len__(self):
        return self.size

    def __getitem__(self, key):
        idx = np.arange(self.size)[key]
        idx = np.atleast_1d(idx)
        pos = np.full(self.size, -1)
        pos[idx] = np.arange(idx.size)
        keep = pos[self.rows] >= 0
        return Affine(pos[self.rows[keep]], self.cols[keep], self.vals[keep], self.const[idx])

    def _lift(self, other):
        if isinstance(other, Affine):
            return other
        return Affine.constant(np.broadcast_to(np.asarray(other, dtype=float), (self.size,)))

    def __add__(self, other):
        other = self._lift(other)
        if other.size != self.size:
            if other.size == 1 and not other.vals.size:
                other = Affine.constant(np.full(self.size, other.const[0]))
            elif self.size == 1 and not self.vals.size:
                return other + self.const[0]
            else:
                raise ValueError(f"size mismatch {self.size} vs {other.size}")
        return Affine(
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.vals, other.vals]),
            self.const + other.const,
        )

    __radd__ = __add__

    def __neg__(self):
        return Affine(self.rows, self.cols, -self.vals, -self.const)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        k = np.asarray(k, dtype=float)
        if k.ndim == 0:
            return Affine(self.rows, self.cols, self.vals * k, self.const * k)
        k = np.broadcast_to(k, (self.size,))
        return Affine(self.rows, self.cols, self.vals * k[self.rows], self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / np.asarray(k, dtype=float))

    def dot(self, w):
        """Scalar ``w' self``."""
        w = np.broadcast_to(np.asarray(w, dtype=float), (self.size,))
        return Affine(np.zeros(self.rows.size, dtype=np.int64), self.cols, self.vals * w[self.rows], [w @ self.const])

    def sum(self):
        return self.dot(np.ones(self.size))

    def evaluate(self, x):
        out = self.const.copy()
        np.add.at(out, self.rows, self.vals * x[self.cols])
        return out

    def single_variable(self):
        """Index of the variable if this 1-entry expression is exactly ``x[i]``."""
        if self.size == 1 and self.const[0] == 0.0 and self.vals.size == 1 and self.vals[0] == 1.0:
            return int(self.cols[0])
        return None


def vstack(parts):
    parts = [p if isinstance(p, Affine) else Affine.constant(p) for p in parts]
    rows, cols, vals, const = [], [], [], []
    off = 0
    for p in parts:
        rows.append(p.rows + off)
        cols.append(p.cols)
        vals.append(p.vals)
        const.append(p.const)
        off += p.size
    return Affine(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), np.concatenate(const))


class Model:
    """Accumulates variables, constraints and an objective.

    >>> m = Model()
    >>> x = m.variable(2, "x")
    >>> m.le(1.0 - x, "lower")
    >>> m.maximize(-x.sum())
    """

    def __init__(self):
        self.n = 0
        self.names = {}
        self._eq = []
        self._le = []
        self.cones = []
        self.counts = Counter()
        self.objective = Affine.constant(0.0)

    def variable(self, size, name=None):
        start = self.n
        self.n += size
        if name is not None:
            if name in self.names:
                raise ValueError(f"duplicate variable name {name!r}")
            self.names[name] = (start, size)
        return Affine(np.arange(size), np.arange(start, start + size), np.ones(size), np.zeros(size))

    def eq(self, expr, tag="eq"):
        """Constrain ``expr == 0``."""
        self._eq.append(expr)
        self.counts[tag] += 1

    def le(self, expr, tag="le"):
        """Constrain ``expr <= 0`` elementwise."""
        self._le.append(expr)
        self.counts[tag] += 1

    def _index(self, expr):
        out = []
        for i in range(expr.size):
            e = expr[i]
            j = e.single_variable()
            if j is None:
                aux = self.variable(1)
                self._eq.append(aux - e)
                j = int(aux.cols[0])
            out.append(j)
        return out

    def soc(self, t, x, tag="soc"):
        """Constrain ``||x|| <= t``."""
        t = t if isinstance(t, Affine) else Affine.constant(t)
        self.cones.append(Cone(SOC, tuple(self._index(vstack([t, x]))), tag))
        self.counts[tag] += 1

    def rsoc(self, u, v, w, tag="rsoc"):
        """Constrain ``2 u v >= ||w||^2`` with ``u, v >= 0``."""
        u = u if isinstance(u, Affine) else Affine.constant(u)
        v = v if isinstance(v, Affine) else Affine.constant(v)
        self.cones.append(Cone(RSOC, tuple(self._index(vstack([u, v, w]))), tag))
        self.counts[tag] += 1

    def maximize(self, expr):
        if expr.size != 1:
            raise ValueError("objective must be scalar")
        self.objective = expr

    def _block(self, exprs):
        if not exprs:
            return sp.csr_matrix((0, self.n)), np.zeros(0)
        stacked = vstack(exprs)
        mat = sp.csr_matrix((stacked.vals, (stacked.rows, stacked.cols)), shape=(stacked.size, self.n))
        mat.sum_duplicates()
        return mat, -stacked.const

    def build(self) -> ConicProgram:
        A_eq, b_eq = self._block(self._eq)
        A_in, b_in = self._block(self._le)
        c = np.zeros(self.n)
        np.add.at(c, self.objective.cols, self.objective.vals)
        return ConicProgram(self.n, c, A_eq, b_eq, A_in, b_in, self.cones, dict(self.names), dict(self.counts))

    def objective_vector(self, expr):
        c = np.zeros(self.n)
        np.add.at(c, expr.cols, expr.vals)
        return c
