"""Max-min TDMA user scheduling for a fixed trajectory."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import conic
from .modeling import Model
from .radio import Schedule

BRUTE_FORCE_LIMIT = 10**6
FULL_SLOT_TOL = 1e-7


class SchedulingError(RuntimeError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True, eq=False)
class SchedulingInstance:
    """Spectral efficiencies ``log2(1 + gamma_k[n])``, shape ``(K, N)``."""

    rate_matrix: np.ndarray

    def __post_init__(self):
        r = np.array(self.rate_matrix, dtype=float)
        if r.ndim != 2 or r.size == 0:
            raise ValueError(f"rate matrix must be a non-empty K x N array, got shape {r.shape}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rates must be finite and nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, "rate_matrix", r)

    @property
    def shape(self):
        return self.rate_matrix.shape


def min_rate(alpha, inst: SchedulingInstance):
    """``min_k sum_n alpha[k, n] rate[k, n]``."""
    return float(np.min(np.sum(np.asarray(alpha) * inst.rate_matrix, axis=1)))


def solve_lp_relaxation(inst: SchedulingInstance, backend="auto", tol=1e-9):
    """Maximize the minimum per-user rate over relaxed ``0 <= alpha <= 1``.

    Returns the relaxed :class:`Schedule` and the optimal minimum rate
    (bits/s/Hz summed over slots).
    """
    K, N = inst.shape
    rates = inst.rate_matrix
    # normalize so the LP sees O(1) data; the optimum scales back linearly
    scale = float(rates.max()) or 1.0
    m = Model()
    alpha = m.variable(K * N, "alpha")
    r_min = m.variable(1, "r_min")
    m.le(-alpha, "alpha_nonneg")
    m.le(alpha - 1.0, "alpha_le_one")
    for n in range(N):
        m.le(alpha[n::N].sum() - 1.0, "one_user_per_slot")
    for k in range(K):
        m.le(r_min - alpha[k * N:(k + 1) * N].dot(rates[k] / scale), "min_rate")
    m.maximize(r_min)
    prog = m.build()
    sol = conic.solve(prog, tol=tol, backend=backend)
    if not sol.optimal:
        raise SchedulingError(f"scheduling LP ended with status {sol.status}", sol.status)
    a = np.clip(alpha.evaluate(sol.primal).reshape(K, N), 0.0, 1.0)
    # interior-point iterates stop just short of full slots; filling them
    # exactly can only raise every user's rate
    used = a.sum(axis=0)
    full = used > 1.0 - FULL_SLOT_TOL
    a[:, full] /= used[full]
    return Schedule(a), min_rate(a, inst)


def round_schedule(relaxed: Schedule, inst: SchedulingInstance = None, zero_tol=1e-9) -> Schedule:
    """Per-slot argmax of the relaxed weights, lowest user index on ties.

    Slots whose relaxed weights are all below ``zero_tol`` stay unserved.
    """
    a = relaxed.alpha
    K, N = a.shape
    out = np.zeros((K, N))
    best = np.argmax(a, axis=0)
    served = a.max(axis=0) > zero_tol
    out[best[served], np.nonzero(served)[0]] = 1.0
    return Schedule(out, binary=True)


def brute_force_schedule(inst: SchedulingInstance):
    """Exact binary optimum by enumerating all ``(K+1)^N`` slot assignments."""
    K, N = inst.shape
    if (K + 1) ** N > BRUTE_FORCE_LIMIT:
        raise ValueError(f"(K+1)^N = {(K + 1) ** N} exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    # choice K means the slot serves nobody
    choices = np.array(list(itertools.product(range(K + 1), repeat=N)), dtype=np.int64)
    padded = np.vstack([inst.rate_matrix, np.zeros((1, N))])
    gained = padded[choices, np.arange(N)]
    totals = np.zeros((choices.shape[0], K + 1))
    for n in range(N):
        np.add.at(totals, (np.arange(choices.shape[0]), choices[:, n]), gained[:, n])
    worst = totals[:, :K].min(axis=1)
    best = int(np.argmax(worst))
    alpha = np.zeros((K, N))
    for n, k in enumerate(choices[best]):
        if k < K:
            alpha[k, n] = 1.0
    return Schedule(alpha, binary=True), float(worst[best])
