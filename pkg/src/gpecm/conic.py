"""Canonical conic programs and their solver backends.

A :class:`ConicProgram` is a maximization over a flat variable vector with

* an affine equality block ``A_eq x = b_eq``,
* an affine inequality block ``A_ineq x <= b_ineq``,
* cone constraints placed directly on variable indices, either second-order
  (``x[i0] >= ||x[i1:]||``) or rotated second-order
  (``2 x[i0] x[i1] >= ||x[i2:]||^2``, ``x[i0], x[i1] >= 0``).

Backends receive the program lowered to the minimization standard form

    minimize c'x  s.t.  A x = b,  G x + s = h,  s in R+^l x Q^{q_1} x ... x Q^{q_m}

which is what both the embedded interior-point method and Clarabel consume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

SOC = "soc"
RSOC = "rsoc"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"
NUMERICAL_ERROR = "numerical_error"
STATUSES = (OPTIMAL, INFEASIBLE, UNBOUNDED, MAX_ITER, NUMERICAL_ERROR)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


class ConicStructureError(ValueError):
    """Raised for malformed programs, before any solve is attempted."""


class ConicSolveError(RuntimeError):
    """A backend returned a non-optimal status where one was required."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class Cone:
    kind: str
    indices: tuple[int, ...]
    tag: str = ""

    def __post_init__(self):
        if self.kind not in (SOC, RSOC):
            raise ConicStructureError(f"unknown cone kind {self.kind!r}")
        need = 1 if self.kind == SOC else 2
        if len(self.indices) < need:
            raise ConicStructureError(f"{self.kind} cone needs at least {need} indices")


def _as_csr(mat, ncols):
    if mat is None:
        return sp.csr_matrix((0, ncols))
    return sp.csr_matrix(mat, dtype=float)


@dataclass(frozen=True, eq=False)
class ConicProgram:
    """A conic program in maximization form.

    ``counts`` maps a constraint tag to the number of constraint statements that
    produced it; it is bookkeeping for inspection and has no effect on solving.
    """

    n: int
    objective: np.ndarray
    A_eq: sp.csr_matrix = None
    b_eq: np.ndarray = None
    A_ineq: sp.csr_matrix = None
    b_ineq: np.ndarray = None
    cones: tuple[Cone, ...] = ()
    names: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        obj = np.asarray(self.objective, dtype=float).ravel()
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "A_eq", _as_csr(self.A_eq, n))
        object.__setattr__(self, "A_ineq", _as_csr(self.A_ineq, n))
        b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        b_in = np.zeros(0) if self.b_ineq is None else np.asarray(self.b_ineq, dtype=float).ravel()
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "b_ineq", b_in)
        object.__setattr__(self, "cones", tuple(self.cones))
        self.check()

    def check(self):
        n = self.n
        if n <= 0:
            raise ConicStructureError("program has no variables")
        if self.objective.shape != (n,):
            raise ConicStructureError(f"objective has length {self.objective.size}, expected {n}")
        if not np.all(np.isfinite(self.objective)):
            raise ConicStructureError("objective is not finite")
        for name, mat, rhs in (("equality", self.A_eq, self.b_eq), ("inequality", self.A_ineq, self.b_ineq)):
            if mat.shape[1] != n:
                raise ConicStructureError(f"{name} block has {mat.shape[1]} columns, expected {n}")
            if mat.shape[0] != rhs.size:
                raise ConicStructureError(f"{name} block has {mat.shape[0]} rows but rhs of length {rhs.size}")
            if not (np.all(np.isfinite(mat.data)) and np.all(np.isfinite(rhs))):
                raise ConicStructureError(f"{name} block is not finite")
        for cone in self.cones:
            idx = np.asarray(cone.indices)
            if idx.min() < 0 or idx.max() >= n:
                raise ConicStructureError(f"cone {cone.tag or cone.kind} indexes outside 0..{n - 1}")

    def with_objective(self, objective):
        """Copy of this program with a different objective vector."""
        return ConicProgram(
            self.n, objective, self.A_eq, self.b_eq, self.A_ineq, self.b_ineq,
            self.cones, self.names, self.counts,
        )

    def value(self, x):
        return float(self.objective @ x)


@dataclass
class ConicSolution:
    """Primal/dual result of a solve.

    ``dual`` stacks the standard-form multipliers ``(y, z)``: ``y`` for the
    equality rows, ``z`` for the inequality rows followed by the cone rows.
    ``primal_objective`` and ``dual_objective`` are in the program's
    maximization sense, so weak duality reads ``primal <= dual``.
    """

    primal: np.ndarray
    dual: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    gap: float
    primal_objective: float = math.nan
    dual_objective: float = math.nan
    iterations: int = 0
    backend: str = ""

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass
class StandardForm:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    l: int
    q: list

    @property
    def n(self):
        return self.c.size


def to_standard_form(prog: ConicProgram) -> StandardForm:
    """Lower a program to ``min c'x, Ax = b, Gx + s = h, s in K``."""
    n = prog.n
    rows, cols, vals, q = [], [], [], []
    r = 0
    sqrt2 = math.sqrt(2.0)
    for cone in prog.cones:
        idx = cone.indices
        if cone.kind == SOC:
            for i in idx:
                rows.append(r)
                cols.append(i)
                vals.append(-1.0)
                r += 1
            q.append(len(idx))
        else:
            u, v, w = idx[0], idx[1], idx[2:]
            rows += [r, r, r + 1, r + 1]
            cols += [u, v, u, v]
            vals += [-1.0, -1.0, -1.0, 1.0]
            r += 2
            for i in w:
                rows.append(r)
                cols.append(i)
                vals.append(-sqrt2)
                r += 1
            q.append(len(idx))
    G_cone = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    G = sp.vstack([prog.A_ineq, G_cone], format="csr")
    h = np.concatenate([prog.b_ineq, np.zeros(r)])
    return StandardForm(-prog.objective, prog.A_eq, prog.b_eq, G, h, prog.A_ineq.shape[0], q)


def cone_violation(s, l, q):
    """Largest distance-like violation of ``s in R+^l x Q^q``."""
    worst = 0.0
    if l:
        worst = max(worst, float(np.max(-s[:l], initial=0.0)))
    off = l
    for m in q:
        blk = s[off:off + m]
        worst = max(worst, float(np.linalg.norm(blk[1:]) - blk[0]))
        off += m
    return max(worst, 0.0)


def cone_violation_program(prog: ConicProgram, x):
    """Largest cone violation of a program's cones at ``x``."""
    worst = 0.0
    for cone in prog.cones:
        v = x[list(cone.indices)]
        if cone.kind == SOC:
            worst = max(worst, np.linalg.norm(v[1:]) - v[0])
        else:
            u, w, rest = v[0], v[1], v[2:]
            worst = max(worst, -u, -w)
            # distance from the equivalent Lorentz-cone form
            worst = max(worst, (math.hypot(u - w, math.sqrt(2.0) * np.linalg.norm(rest)) - (u + w)) / math.sqrt(2.0))
    return max(float(worst), 0.0)


@dataclass
class ResidualReport:
    equality: float
    inequality: float
    cone: float
    dual: float
    dual_cone: float
    complementarity: float
    gap: float

    @property
    def primal(self):
        return max(self.equality, self.inequality, self.cone)


def validate_solution(prog: ConicProgram, sol: ConicSolution) -> ResidualReport:
    """Recompute residuals from the returned vectors, ignoring solver claims.

    Primal residuals are absolute violations (equality row error, inequality
    excess, cone violation). The dual side is checked against the
    standard-form dual ``A'y + G'z + c = 0, z in K``.
    """
    x = np.asarray(sol.primal, dtype=float)
    if x.shape != (prog.n,):
        raise ConicStructureError(f"primal has shape {x.shape}, expected ({prog.n},)")
    eq = float(np.max(np.abs(prog.A_eq @ x - prog.b_eq), initial=0.0))
    ineq = float(np.max(prog.A_ineq @ x - prog.b_ineq, initial=0.0))
    cone = cone_violation_program(prog, x)

    std = to_standard_form(prog)
    p = std.A.shape[0]
    dual = np.asarray(sol.dual, dtype=float)
    if dual.size != p + std.G.shape[0]:
        nan = math.nan
        return ResidualReport(eq, max(ineq, 0.0), cone, nan, nan, nan, nan)
    y, z = dual[:p], dual[p:]
    rx = std.A.T @ y + std.G.T @ z + std.c
    s = std.h - std.G @ x
    s_proj = s.copy()
    s_proj[: std.l] = np.maximum(s_proj[: std.l], 0.0)
    comp = abs(float(s_proj @ z))
    pobj = float(std.c @ x)
    dobj = float(-std.b @ y - std.h @ z)
    return ResidualReport(
        equality=eq,
        inequality=max(ineq, 0.0),
        cone=cone,
        dual=float(np.max(np.abs(rx), initial=0.0)),
        dual_cone=cone_violation(z, std.l, std.q),
        complementarity=comp,
        gap=abs(pobj - dobj),
    )


# -- backends ---------------------------------------------------------------

_BACKENDS: dict[str, Callable] = {}


def register_backend(name):
    def deco(fn):
        _BACKENDS[name] = fn
        return fn

    return deco


def available_backends():
    out = ["reference"]
    try:
        import clarabel  # noqa: F401

        out.append("clarabel")
    except ImportError:
        pass
    return out


def solve(prog: ConicProgram, tol=DEFAULT_TOL, backend="reference", max_iter=DEFAULT_MAX_ITER) -> ConicSolution:
    """Solve ``prog`` with the named backend.

    ``backend="auto"`` picks Clarabel when it is importable and the embedded
    interior-point method otherwise.
    """
    prog.check()
    if backend == "auto":
        backend = "clarabel" if "clarabel" in available_backends() else "reference"
    if backend not in _BACKENDS:
        if backend == "clarabel":
            from . import _clarabel  # noqa: F401  registers itself
        else:
            from . import ipm  # noqa: F401
    try:
        fn = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown conic backend {backend!r}") from None
    return fn(prog, tol=tol, max_iter=max_iter)


def dump_program(prog: ConicProgram, path=None):
    """Write a program as JSON (variables, objective, blocks, cones).

    Returns the JSON text; writes it to ``path`` when given.
    """

    def block(mat, rhs):
        coo = mat.tocoo()
        return {
            "rows": int(mat.shape[0]),
            "entries": [[int(i), int(j), float(v)] for i, j, v in zip(coo.row, coo.col, coo.data)],
            "rhs": [float(v) for v in rhs],
        }

    doc = {
        "sense": "maximize",
        "variables": int(prog.n),
        "names": {k: [int(v[0]), int(v[1])] for k, v in prog.names.items()},
        "objective": [float(v) for v in prog.objective],
        "equality": block(prog.A_eq, prog.b_eq),
        "inequality": block(prog.A_ineq, prog.b_ineq),
        "cones": [{"kind": c.kind, "indices": list(map(int, c.indices)), "tag": c.tag} for c in prog.cones],
        "counts": dict(prog.counts),
    }
    text = json.dumps(doc, indent=1, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_program(text):
    """Inverse of :func:`dump_program`."""
    doc = json.loads(text)
    n = doc["variables"]

    def block(d):
        e = np.array(d["entries"], dtype=float).reshape(-1, 3)
        mat = sp.csr_matrix((e[:, 2], (e[:, 0].astype(int), e[:, 1].astype(int))), shape=(d["rows"], n))
        return mat, np.array(d["rhs"], dtype=float)

    A_eq, b_eq = block(doc["equality"])
    A_in, b_in = block(doc["inequality"])
    cones = [Cone(c["kind"], tuple(c["indices"]), c["tag"]) for c in doc["cones"]]
    names = {k: tuple(v) for k, v in doc["names"].items()}
    return ConicProgram(n, doc["objective"], A_eq, b_eq, A_in, b_in, cones, names, doc["counts"])
