"""Reference primal-dual interior-point method for small SOCPs.

Infeasible-start path following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step, in the style of CVXOPT's ``conelp``. Everything is
dense, so it is meant for programs with at most a few hundred variables.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la

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

STEP = 0.99


class _Cones:
    """Block bookkeeping for ``R+^l x Q^{q_1} x ...``."""

    def __init__(self, l, q):
        self.l = l
        self.q = list(q)
        self.slices = []
        off = l
        for m in self.q:
            self.slices.append(slice(off, off + m))
            off += m
        self.m = off
        self.degree = l + len(self.q)

    def identity(self):
        e = np.zeros(self.m)
        e[: self.l] = 1.0
        for s in self.slices:
            e[s.start] = 1.0
        return e

    def prod(self, x, y):
        out = np.empty(self.m)
        out[: self.l] = x[: self.l] * y[: self.l]
        for s in self.slices:
            a, b = x[s], y[s]
            out[s.start] = a @ b
            out[s.start + 1 : s.stop] = a[0] * b[1:] + b[0] * a[1:]
        return out

    def div(self, lam, r):
        """Solve ``lam o u = r`` for ``u``."""
        u = np.empty(self.m)
        u[: self.l] = r[: self.l] / lam[: self.l]
        for s in self.slices:
            l0, l1 = lam[s.start], lam[s.start + 1 : s.stop]
            r0, r1 = r[s.start], r[s.start + 1 : s.stop]
            det = l0 * l0 - l1 @ l1
            u0 = (l0 * r0 - l1 @ r1) / det
            u[s.start] = u0
            u[s.start + 1 : s.stop] = (r1 - u0 * l1) / l0
        return u

    def interior_shift(self, x):
        """Smallest ``t`` with ``x + t e`` on the cone boundary (negative if interior)."""
        t = -np.inf
        if self.l:
            t = max(t, float(np.max(-x[: self.l])))
        for s in self.slices:
            t = max(t, float(np.linalg.norm(x[s.start + 1 : s.stop]) - x[s.start]))
        return t

    def max_step(self, x, d):
        """Largest ``a`` in ``(0, inf]`` keeping ``x + a d`` in the cone, ``x`` interior."""
        amax = np.inf
        if self.l:
            neg = d[: self.l] < 0
            if np.any(neg):
                amax = min(amax, float(np.min(-x[: self.l][neg] / d[: self.l][neg])))
        for s in self.slices:
            x0, x1 = x[s.start], x[s.start + 1 : s.stop]
            d0, d1 = d[s.start], d[s.start + 1 : s.stop]
            a = d0 * d0 - d1 @ d1
            b = x0 * d0 - x1 @ d1
            c = x0 * x0 - x1 @ x1
            amax = min(amax, _first_root(a, b, c))
            if d0 < 0:
                amax = min(amax, -x0 / d0)
        return amax

    def scaling(self, s, z):
        """Nesterov-Todd scaling: returns dense ``W`` (symmetric) and ``W^{-1}``."""
        W = np.zeros((self.m, self.m))
        Winv = np.zeros((self.m, self.m))
        if self.l:
            w = np.sqrt(s[: self.l] / z[: self.l])
            idx = np.arange(self.l)
            W[idx, idx] = w
            Winv[idx, idx] = 1.0 / w
        for sl in self.slices:
            m = sl.stop - sl.start
            J = -np.eye(m)
            J[0, 0] = 1.0
            ss, zz = s[sl], z[sl]
            sn = math.sqrt(_jnorm2(ss))
            zn = math.sqrt(_jnorm2(zz))
            sb, zb = ss / sn, zz / zn
            gamma = math.sqrt(max((1.0 + sb @ zb) / 2.0, 1e-300))
            wb = (sb + J @ zb) / (2.0 * gamma)
            wb[0] += 1.0
            wb /= math.sqrt(2.0 * wb[0])
            eta = math.sqrt(sn / zn)
            W[sl, sl] = eta * (2.0 * np.outer(wb, wb) - J)
            Jw = J @ wb
            Winv[sl, sl] = (2.0 * np.outer(Jw, Jw) - J) / eta
        return W, Winv


def _jnorm2(x):
    """``x0^2 - ||x1||^2`` without cancellation."""
    r = np.linalg.norm(x[1:])
    return max((x[0] - r) * (x[0] + r), 1e-300)


def _first_root(a, b, c):
    """Smallest positive root of ``a t^2 + 2 b t + c`` with ``c > 0``; inf if none."""
    if c <= 0:
        return 0.0
    if abs(a) < 1e-300:
        return -c / (2.0 * b) if b < 0 else np.inf
    disc = b * b - a * c
    if disc < 0:
        return np.inf
    sq = math.sqrt(disc)
    qv = -(b + math.copysign(sq, b)) if b != 0 else -sq
    roots = []
    if qv != 0:
        roots += [qv / a, c / qv]
    else:
        roots += [math.sqrt(-c / a)] if a < 0 else []
    pos = [r for r in roots if r > 0]
    return min(pos) if pos else np.inf


class _KKT:
    """Factorized scaled KKT system for one scaling point.

    Solves ``[0 A' G'; A 0 0; G 0 -W^2] (dx, dy, dz) = (rx, ry, rz)`` through the
    better-conditioned form in ``W dz``.
    """

    def __init__(self, A, G, Winv, reg):
        n = G.shape[1]
        p = A.shape[0]
        m = G.shape[0]
        Gs = Winv @ G
        K = np.zeros((n + p + m, n + p + m))
        K[:n, n:n + p] = A.T
        K[n:n + p, :n] = A
        K[:n, n + p:] = Gs.T
        K[n + p:, :n] = Gs
        K[n + p:, n + p:] = -np.eye(m)
        self.Kexact = K.copy()
        K[:n, :n] += reg * np.eye(n)
        K[n:n + p, n:n + p] -= reg * np.eye(p)
        self.lu = la.lu_factor(K, check_finite=False)
        self.Winv = Winv
        self.n, self.p = n, p

    def solve(self, rx, ry, rz):
        n, p = self.n, self.p
        rhs = np.concatenate([rx, ry, self.Winv @ rz])
        sol = la.lu_solve(self.lu, rhs, check_finite=False)
        for _ in range(3):
            res = rhs - self.Kexact @ sol
            sol = sol + la.lu_solve(self.lu, res, check_finite=False)
        return sol[:n], sol[n:n + p], self.Winv @ sol[n + p:]


def conelp(c, A, b, G, h, l, q, tol=1e-8, max_iter=200):
    """Solve ``min c'x, Ax = b, Gx + s = h, s in K`` (dense).

    Returns ``(x, y, s, z, status, info)``.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float).reshape(-1, c.size)
    G = np.asarray(G, float).reshape(-1, c.size)
    b = np.asarray(b, float).ravel()
    h = np.asarray(h, float).ravel()
    n, p = c.size, A.shape[0]
    K = _Cones(l, q)
    if K.m != G.shape[0]:
        raise ValueError("cone dimensions do not match the rows of G")
    e = K.identity()

    scale = max(1.0, np.abs(G).max(initial=0.0), np.abs(A).max(initial=0.0))
    reg = 1e-13 * scale * scale

    kkt = _KKT(A, G, np.eye(K.m), reg)
    x, _, _ = kkt.solve(np.zeros(n), b, h)
    s = h - G @ x
    _, y, z = kkt.solve(-c, np.zeros(p), np.zeros(K.m))
    ts = K.interior_shift(s)
    if ts >= -1e-8 * max(1.0, np.linalg.norm(s)):
        s = s + (1.0 + max(ts, 0.0)) * e
    tz = K.interior_shift(z)
    if tz >= -1e-8 * max(1.0, np.linalg.norm(z)):
        z = z + (1.0 + max(tz, 0.0)) * e

    resx0 = max(1.0, np.linalg.norm(c))
    resp0 = max(1.0, np.linalg.norm(np.concatenate([b, h])))
    status = MAX_ITER
    info = {}
    best = None
    it = 0
    for it in range(max_iter + 1):
        rx = A.T @ y + G.T @ z + c
        ry = A @ x - b
        rz = G @ x + s - h
        gap = float(s @ z)
        mu = gap / K.degree
        pcost = float(c @ x)
        dcost = float(-b @ y - h @ z)
        pres = math.sqrt(ry @ ry + rz @ rz) / resp0
        dres = np.linalg.norm(rx) / resx0
        info = {"pres": pres, "dres": dres, "gap": gap, "pcost": pcost, "dcost": dcost}

        relgap = gap
        if pcost < 0:
            relgap = gap / -pcost
        elif dcost > 0:
            relgap = gap / dcost
        score = max(pres, dres, min(max(gap, 0.0), abs(relgap)))
        if best is None or score < best[0]:
            best = (score, x, y, s, z, dict(info))
        if score <= tol:
            status = OPTIMAL
            break

        # infeasibility certificates, normalized
        hz_by = float(h @ z + b @ y)
        if hz_by < 0:
            cert = np.linalg.norm(A.T @ y + G.T @ z) / -hz_by
            if cert <= tol and np.linalg.norm(z) > 1e8 and it > 5:
                status = INFEASIBLE
                break
        cx = float(c @ x)
        if cx < 0 and it > 5:
            cert = max(np.linalg.norm(A @ x), np.linalg.norm(G @ x + s)) / -cx
            if cert <= tol and np.linalg.norm(x) > 1e8:
                status = UNBOUNDED
                break
        if it == max_iter:
            break

        try:
            W, Winv = K.scaling(s, z)
            lam = W @ z
            kkt = _KKT(A, G, Winv, reg)
        except (la.LinAlgError, ValueError, FloatingPointError):
            status = NUMERICAL_ERROR
            break

        def newton(rc):
            u = K.div(lam, rc)
            dx, dy, dz = kkt.solve(-rx, -ry, -rz - W @ u)
            ds = -rz - G @ dx
            return dx, dy, dz, ds

        dx, dy, dz, ds = newton(-K.prod(lam, lam))
        a_aff = min(1.0, K.max_step(s, ds), K.max_step(z, dz))
        sigma = (1.0 - a_aff) ** 3
        corr = K.prod(Winv @ ds, W @ dz)
        dx, dy, dz, ds = newton(-K.prod(lam, lam) - corr + sigma * mu * e)
        alpha = min(1.0, STEP * K.max_step(s, ds), STEP * K.max_step(z, dz))
        if not np.isfinite(alpha) or alpha < 1e-12:
            status = NUMERICAL_ERROR
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            status = NUMERICAL_ERROR
            break
    if status in (MAX_ITER, NUMERICAL_ERROR) and best is not None:
        score, x, y, s, z, info = best
        if score <= tol:
            status = OPTIMAL
    info["iterations"] = it
    return x, y, s, z, status, info


@register_backend("reference")
def solve_reference(prog: ConicProgram, tol=1e-8, max_iter=200) -> ConicSolution:
    std = to_standard_form(prog)
    A = std.A.toarray()
    G = std.G.toarray()
    b, h = std.b, std.h
    keep_eq = np.any(A != 0, axis=1)
    if np.any(np.abs(b[~keep_eq]) > tol):
        return _failed(prog, INFEASIBLE)
    keep_in = np.ones(G.shape[0], bool)
    keep_in[: std.l] = np.any(G[: std.l] != 0, axis=1)
    if np.any(h[: std.l][~keep_in[: std.l]] < -tol):
        return _failed(prog, INFEASIBLE)
    l = int(keep_in[: std.l].sum())
    x, y, s, z, status, info = conelp(std.c, A[keep_eq], b[keep_eq], G[keep_in], h[keep_in], l, std.q, tol, max_iter)
    y_full = np.zeros(A.shape[0])
    y_full[keep_eq] = y
    z_full = np.zeros(G.shape[0])
    z_full[keep_in] = z
    return ConicSolution(
        primal=x,
        dual=np.concatenate([y_full, z_full]),
        status=status,
        primal_residual=info.get("pres", math.nan),
        dual_residual=info.get("dres", math.nan),
        gap=info.get("gap", math.nan),
        primal_objective=-info.get("pcost", math.nan),
        dual_objective=-info.get("dcost", math.nan),
        iterations=info.get("iterations", 0),
        backend="reference",
    )


def _failed(prog, status):
    nan = math.nan
    return ConicSolution(np.full(prog.n, nan), np.zeros(0), status, nan, nan, nan, backend="reference")
