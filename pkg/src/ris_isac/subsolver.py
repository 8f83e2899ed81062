"""Deterministic interior-point solver for the small convex subproblems.

Both inner updates of the alternating optimizer are instances of one shape:
maximize a real-linear objective over complex x, optionally with a proximal
pull toward a center, subject to concave quadratic constraints and norm
balls. This module solves that shape with a log-barrier Newton method on
the real embedding [Re x; Im x].

Instances arrive at wildly different scales (channel products ~1e-12 next
to O(1) consensus penalties), so every constraint and the objective are
normalized internally; results map back to original units. The multipliers
and the KKT residual are reported in the normalized units, which makes
their tolerances scale-free.

No randomness anywhere: same problem + same warm start = same bits out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import nnls

_FEAS_TRIGGER = 1e-12     # scaled margin below which phase I runs
_S_TARGET = 1e-5          # phase I early exit margin
_INFEAS_FLOOR = 1e-12     # scaled max-min margin at or below this = infeasible
_NEWTON_TOL = 1e-10       # squared Newton decrement at a "centered" point
_MU = 20.0                # barrier multiplier growth


@dataclass
class QuadConstraint:
    """value(x) = Re{lin^H x} - ||factor @ x||^2 - offset >= 0."""
    lin: np.ndarray
    factor: np.ndarray
    offset: float


@dataclass
class BallConstraint:
    """value(x) = radius^2 - ||x[idx]||^2 >= 0; idx None means all coords."""
    radius: float
    idx: np.ndarray | None = None


@dataclass
class ConvexSubproblem:
    n: int
    lin_obj: np.ndarray                    # maximize Re{lin_obj^H x}
    quads: list = field(default_factory=list)
    balls: list = field(default_factory=list)
    prox_center: np.ndarray | None = None
    prox_weight: float = 0.0               # subtracts w/2 * ||x - center||^2


@dataclass
class SubsolveResult:
    x: np.ndarray
    objective: float          # original units
    violation: float          # scaled units, 0 when strictly feasible
    kkt_stationarity: float   # scaled units
    iterations: int           # total Newton steps, both phases
    status: str               # optimal | max_iters | infeasible
    multipliers: np.ndarray   # scaled units, quads then balls


def _emb(z: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(z).real, np.asarray(z).imag])


def _lift(x: np.ndarray, n: int) -> np.ndarray:
    return x[:n] + 1j * x[n:]


def _emb_factor(A: np.ndarray) -> np.ndarray:
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


class _Cons:
    """Scaled real constraint value = l @ x - 0.5 x^T H x - d >= 0.

    H is either None (affine), a dense (m, m) array, or ("diag", dvec).
    """

    __slots__ = ("l", "H", "d")

    def __init__(self, l, H, d):
        self.l = l
        self.H = H
        self.d = d

    def value(self, x):
        v = self.l @ x - self.d
        if self.H is None:
            return v
        if isinstance(self.H, tuple):
            return v - 0.5 * np.sum(self.H[1] * x * x)
        return v - 0.5 * (x @ self.H @ x)

    def grad(self, x):
        if self.H is None:
            return self.l
        if isinstance(self.H, tuple):
            return self.l - self.H[1] * x
        return self.l - self.H @ x

    def add_curvature(self, H_out, w):
        """H_out += w * H (the negated constraint Hessian)."""
        if self.H is None:
            return
        if isinstance(self.H, tuple):
            H_out[np.diag_indices_from(H_out)] += w * self.H[1]
        else:
            H_out += w * self.H


class _RealProblem:
    """Real-embedded, per-constraint-normalized instance."""

    def __init__(self, m, g, w, c, cons, s_f):
        self.m = m
        self.g = g          # scaled linear objective coefficient
        self.w = w          # scaled prox weight
        self.c = c          # prox center (original units) or None
        self.cons = cons    # list[_Cons], all scaled
        self.s_f = s_f      # objective scale divisor

    def f(self, x):
        v = self.g @ x
        if self.w:
            dx = x - self.c
            v -= 0.5 * self.w * (dx @ dx)
        return v

    def fgrad(self, x):
        if self.w:
            return self.g - self.w * (x - self.c)
        return self.g

    def values(self, x):
        return np.array([con.value(x) for con in self.cons])


def _embed_problem(problem: ConvexSubproblem) -> _RealProblem:
    """Canonical scaling: depends only on the problem data, never on the
    warm start, so repeated calls normalize identically."""
    n = problem.n
    m = 2 * n
    tiny = 1e-300

    glob = [b.radius for b in problem.balls if b.idx is None]
    if glob:
        r_x = min(glob)
    elif problem.balls:
        r_x = np.sqrt(sum(b.radius ** 2 for b in problem.balls))
    else:
        r_x = 1.0
        if problem.prox_center is not None:
            r_x = max(r_x, float(np.linalg.norm(problem.prox_center)))

    g = _emb(problem.lin_obj)
    w = float(problem.prox_weight)
    s_f = max(np.linalg.norm(g) * r_x, w * r_x ** 2)
    if s_f <= tiny:
        s_f = 1.0
    c = _emb(problem.prox_center) if problem.prox_center is not None else None

    cons = []
    for q in problem.quads:
        l = _emb(q.lin)
        A = np.asarray(q.factor)
        At = _emb_factor(A) if A.size else np.zeros((0, m))
        s_i = abs(q.offset) + np.linalg.norm(l) * r_x \
            + np.linalg.norm(A) ** 2 * r_x ** 2
        if s_i <= tiny:
            cons.append(None)       # 0 >= 0, trivially slack, multiplier 0
            continue
        H = (2.0 / s_i) * (At.T @ At) if At.size else None
        cons.append(_Cons(l / s_i, H, q.offset / s_i))
    for b in problem.balls:
        r2 = b.radius ** 2
        if b.idx is None:
            dvec = np.full(m, 2.0 / r2)
        else:
            idx = np.asarray(b.idx, dtype=int)
            dvec = np.zeros(m)
            dvec[idx] = 2.0 / r2
            dvec[idx + n] = 2.0 / r2
        cons.append(_Cons(np.zeros(m), ("diag", dvec), -1.0))

    live = [cc for cc in cons if cc is not None]
    rp = _RealProblem(m, g / s_f, w / s_f, c, live, s_f)
    rp.slot_live = [cc is not None for cc in cons]
    return rp


def _assemble(rp: _RealProblem, x, t):
    """Gradient and negated Hessian of the barrier potential
    t*f(x) + sum log value_i(x)."""
    m = rp.m
    vals = rp.values(x)
    g = t * rp.fgrad(x).copy()
    H = np.zeros((m, m))
    if rp.w:
        H[np.diag_indices(m)] += t * rp.w
    if rp.cons:
        G = np.empty((len(rp.cons), m))
        for i, con in enumerate(rp.cons):
            G[i] = con.grad(x)
            con.add_curvature(H, 1.0 / vals[i])
        g += G.T @ (1.0 / vals)
        H += (G / vals[:, None] ** 2).T @ G
    return g, H, vals


def _potential(rp: _RealProblem, x, t, vals):
    return t * rp.f(x) + np.log(vals).sum() if len(vals) else t * rp.f(x)


def _center(rp: _RealProblem, x, t, max_newton=60, dec_tol=_NEWTON_TOL):
    """Damped Newton to the analytic center at barrier weight t."""
    m = rp.m
    n_steps = 0
    for _ in range(max_newton):
        g, H, vals = _assemble(rp, x, t)
        ridge = 1e-13 * (np.trace(H) / m + 1.0)
        for _ in range(6):
            try:
                cf = cho_factor(H + ridge * np.eye(m), lower=True)
                break
            except np.linalg.LinAlgError:
                ridge *= 1e3
        else:
            return x, n_steps, False
        d = cho_solve(cf, g)
        dec = float(g @ d)
        if dec <= dec_tol:
            return x, n_steps, True
        phi0 = _potential(rp, x, t, vals)
        skip_armijo = dec <= 1e-8 * max(1.0, abs(phi0))
        step = 1.0
        accepted = False
        for _ in range(60):
            xn = x + step * d
            vn = rp.values(xn)
            if len(vn) == 0 or vn.min() > 0:
                if skip_armijo or \
                        _potential(rp, xn, t, vn) >= phi0 + 0.25 * step * dec:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            return x, n_steps, False
        x = xn
        n_steps += 1
    return x, n_steps, False


def _recover(rp: _RealProblem, x0, max_rounds=60):
    """Phase I: maximize the worst scaled margin s over (x, s).

    Returns (x, s_reached, newton_steps). Strictly interior by construction
    at the start; stops early once s clears _S_TARGET.
    """
    m = rp.m
    vals0 = rp.values(x0)
    s0 = float(vals0.min()) - 1.0
    s_cap = abs(s0) + 10.0

    cons_aux = []
    for con in rp.cons:
        l = np.concatenate([con.l, [-1.0]])
        if con.H is None:
            H = None
        elif isinstance(con.H, tuple):
            H = ("diag", np.concatenate([con.H[1], [0.0]]))
        else:
            H = np.zeros((m + 1, m + 1))
            H[:m, :m] = con.H
        cons_aux.append(_Cons(l, H, con.d))
    lcap = np.zeros(m + 1)
    lcap[m] = -1.0
    cons_aux.append(_Cons(lcap, None, -s_cap))

    g = np.zeros(m + 1)
    g[m] = 1.0
    aux = _RealProblem(m + 1, g, 0.0, None, cons_aux, 1.0)

    xa = np.concatenate([x0, [s0]])
    t = 1.0
    total = 0
    for _ in range(max_rounds):
        xa, nit, _ = _center(aux, xa, t)
        total += nit
        if xa[m] >= _S_TARGET:
            break
        if len(cons_aux) / t <= 1e-11:
            break
        t *= _MU
    return xa[:m], float(xa[m]), total


def solve(problem: ConvexSubproblem, warm_start=None, tol_inner: float = 1e-7,
          max_rounds: int = 200) -> SubsolveResult:
    """Log-barrier solve. Monotone: with a feasible warm start, the returned
    objective is never more than ~1e-9 (original units) below it."""
    rp = _embed_problem(problem)
    n = problem.n
    n_con = len(rp.cons)

    if n_con == 0 and rp.w == 0:
        raise ValueError("unbounded subproblem: no constraints, no prox term")

    if warm_start is not None:
        x = _emb(np.asarray(warm_start, dtype=complex))
    elif rp.c is not None:
        x = rp.c.copy()
    else:
        x = np.zeros(rp.m)

    total_newton = 0
    status = "optimal"

    if n_con:
        vals = rp.values(x)
        if vals.min() <= _FEAS_TRIGGER:
            x, s_reached, nit = _recover(rp, x)
            total_newton += nit
            if s_reached <= _INFEAS_FLOOR:
                xc = _lift(x, n)
                return SubsolveResult(
                    x=xc, objective=_objective_original(problem, xc),
                    violation=max(0.0, -float(rp.values(x).min())),
                    kkt_stationarity=np.inf, iterations=total_newton,
                    status="infeasible",
                    multipliers=np.zeros(len(rp.slot_live)))

    # duality gap target in scaled units; the extra s_f clamp keeps the gap
    # below 1e-9 in original units even when the objective scale exceeds 1
    gap_tol = 0.5 * min(tol_inner, 1e-9, 1e-9 / max(rp.s_f, 1.0))
    # residual of the extracted multipliers scales like the root of the
    # Newton decrement, so center tighter than the advertised tolerance
    dec_tol = min(_NEWTON_TOL, 0.01 * tol_inner ** 2)
    t = 1.0
    rounds = 0
    while True:
        x, nit, _ = _center(rp, x, t, dec_tol=dec_tol)
        total_newton += nit
        rounds += 1
        if n_con == 0 or 2.0 * n_con / t <= gap_tol:
            break
        if rounds >= max_rounds:
            status = "max_iters"
            break
        t *= _MU

    vals = rp.values(x) if n_con else np.zeros(0)
    lam_live = 1.0 / (t * vals) if n_con else np.zeros(0)
    fg = rp.fgrad(x)
    if n_con:
        # barrier multipliers degrade when the last centering stalls against
        # the boundary; a nonnegative LS fit over the near-active gradients
        # gives a sharper certificate at the same iterate. Keep whichever
        # extraction leaves the smaller residual.
        G = np.stack([con.grad(x) for con in rp.cons])
        act = vals <= 0.1
        if act.any():
            fit, _ = nnls(G[act].T, -fg)
            lam_fit = np.zeros(n_con)
            lam_fit[act] = fit
            if np.linalg.norm(fg + G.T @ lam_fit) \
                    < np.linalg.norm(fg + G.T @ lam_live):
                lam_live = lam_fit
        kkt_stat = float(np.linalg.norm(fg + G.T @ lam_live))
    else:
        kkt_stat = float(np.linalg.norm(fg))

    lam = np.zeros(len(rp.slot_live))
    lam[np.asarray(rp.slot_live, dtype=bool)] = lam_live

    xc = _lift(x, n)
    return SubsolveResult(
        x=xc, objective=_objective_original(problem, xc),
        violation=max(0.0, -float(vals.min())) if n_con else 0.0,
        kkt_stationarity=kkt_stat, iterations=total_newton, status=status,
        multipliers=lam)


def _objective_original(problem: ConvexSubproblem, x: np.ndarray) -> float:
    v = np.vdot(problem.lin_obj, x).real
    if problem.prox_weight and problem.prox_center is not None:
        v -= 0.5 * problem.prox_weight * \
            np.linalg.norm(x - problem.prox_center) ** 2
    return float(v)


def constraint_values(problem: ConvexSubproblem, x: np.ndarray) -> np.ndarray:
    """Scaled constraint margins at x (quads then balls), >= 0 means feasible."""
    rp = _embed_problem(problem)
    xe = _emb(np.asarray(x, dtype=complex))
    out = np.full(len(rp.slot_live), np.inf)
    vals = rp.values(xe)
    out[np.asarray(rp.slot_live, dtype=bool)] = vals
    return out


def kkt_residual(problem: ConvexSubproblem, x: np.ndarray,
                 multipliers: np.ndarray) -> float:
    """Scaled stationarity norm plus complementarity slack at (x, lambda)."""
    rp = _embed_problem(problem)
    xe = _emb(np.asarray(x, dtype=complex))
    lam = np.asarray(multipliers, dtype=float)
    live = np.asarray(rp.slot_live, dtype=bool)
    lam_live = lam[live]
    g = rp.fgrad(xe).copy()
    comp = 0.0
    for lam_i, con in zip(lam_live, rp.cons):
        g += lam_i * con.grad(xe)
        comp += abs(lam_i * con.value(xe))
    return float(np.linalg.norm(g) + comp)
