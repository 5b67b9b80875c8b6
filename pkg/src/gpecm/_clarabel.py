"""Adapter from :class:`ConicProgram` to the Clarabel interior-point solver."""

from __future__ import annotations

import math

import clarabel
import numpy as np
import scipy.sparse as sp

from .conic import (
    INFEASIBLE,
    MAX_ITER,
    NUMERICAL_ERROR,
    OPTIMAL,
    UNBOUNDED,
    ConicProgram,
    ConicSolution,
    register_backend,
    to_standard_form,
)

_STATUS = {
    "Solved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "DualInfeasible": UNBOUNDED,
    "MaxIterations": MAX_ITER,
    "MaxTime": MAX_ITER,
    "AlmostSolved": NUMERICAL_ERROR,
}


@register_backend("clarabel")
def solve_clarabel(prog: ConicProgram, tol=1e-8, max_iter=200) -> ConicSolution:
    std = to_standard_form(prog)
    n = std.n
    A = sp.vstack([std.A, std.G], format="csc")
    b = np.concatenate([std.b, std.h])
    cones = []
    if std.A.shape[0]:
        cones.append(clarabel.ZeroConeT(std.A.shape[0]))
    if std.l:
        cones.append(clarabel.NonnegativeConeT(std.l))
    cones += [clarabel.SecondOrderConeT(m) for m in std.q]

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_feas = tol
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_ktratio = 1e-6
    P = sp.csc_matrix((n, n))
    result = clarabel.DefaultSolver(P, std.c, A, b, cones, settings).solve()

    status = _STATUS.get(str(result.status), NUMERICAL_ERROR)
    x = np.asarray(result.x, dtype=float)
    z = np.asarray(result.z, dtype=float)
    s = np.asarray(result.s, dtype=float)
    pres = float(np.linalg.norm(A @ x + s - b)) / max(1.0, float(np.linalg.norm(b)))
    dres = float(np.linalg.norm(A.T @ z + std.c)) / max(1.0, float(np.linalg.norm(std.c)))
    return ConicSolution(
        primal=x,
        dual=z,
        status=status,
        primal_residual=pres,
        dual_residual=dres,
        gap=abs(float(s @ z)),
        primal_objective=-float(result.obj_val),
        dual_objective=-float(getattr(result, "obj_val_dual", math.nan)),
        iterations=int(result.iterations),
        backend="clarabel",
    )
