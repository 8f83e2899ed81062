"""Interior-point subproblem solver against closed forms and a first-order
oracle. The oracle is an augmented-Lagrangian projected-gradient ascent that
shares no code with the solver."""

import numpy as np
import pytest

from ris_isac.subsolver import (BallConstraint, ConvexSubproblem,
                                QuadConstraint, constraint_values,
                                kkt_residual, solve)


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / np.sqrt(2)


def _objective(p: ConvexSubproblem, x: np.ndarray) -> float:
    val = float(np.real(np.vdot(p.lin_obj, x)))
    if p.prox_weight:
        val -= 0.5 * p.prox_weight * float(
            np.linalg.norm(x - p.prox_center) ** 2)
    return val


# --- closed-form cases --------------------------------------------------


def test_linear_over_ball():
    rng = np.random.default_rng(0)
    c = _cn(rng, 6)
    p = ConvexSubproblem(n=6, lin_obj=c, balls=[BallConstraint(radius=2.5)])
    res = solve(p)
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, 2.5 * c / np.linalg.norm(c), atol=1e-6)


def test_proximal_projection_onto_disk():
    # maximize -||x - 2||^2 / 2 inside |x| <= 1: lands on the real axis at 1
    p = ConvexSubproblem(n=1, lin_obj=np.zeros(1, complex),
                         prox_center=np.array([2.0 + 0j]), prox_weight=1.0,
                         balls=[BallConstraint(radius=1.0)])
    res = solve(p)
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [1.0 + 0j], atol=1e-6)


def test_unconstrained_prox_center():
    rng = np.random.default_rng(1)
    center = 0.4 * _cn(rng, 4)
    p = ConvexSubproblem(n=4, lin_obj=np.zeros(4, complex),
                         prox_center=center, prox_weight=2.0,
                         balls=[BallConstraint(radius=10.0)])
    res = solve(p)
    np.testing.assert_allclose(res.x, center, atol=1e-6)


def test_quadratic_constraint_boundary():
    """maximize Re{x} s.t. 1 - |x|^2 >= 0 (encoded as a quad constraint):
    optimum at x = 1."""
    p = ConvexSubproblem(
        n=1, lin_obj=np.array([1.0 + 0j]),
        quads=[QuadConstraint(lin=np.zeros(1, complex),
                              factor=np.eye(1, dtype=complex),
                              offset=-1.0)],
        balls=[BallConstraint(radius=5.0)])
    res = solve(p)
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [1.0 + 0j], atol=2e-5)


def test_infeasible_constraints_detected():
    # Re{lin^H x} - offset >= 0 with lin = 0 and offset = 1: impossible
    p = ConvexSubproblem(
        n=2, lin_obj=np.ones(2, complex),
        quads=[QuadConstraint(lin=np.zeros(2, complex),
                              factor=np.zeros((1, 2), complex),
                              offset=1.0)],
        balls=[BallConstraint(radius=1.0)])
    res = solve(p)
    assert res.status == "infeasible"


# --- contract properties ------------------------------------------------


def _random_instance(rng, n=None):
    """Feasible-by-construction mixed instance."""
    if n is None:
        n = int(rng.integers(2, 17))
    per_coord = bool(rng.integers(0, 2))
    if per_coord:
        balls = [BallConstraint(radius=1.0, idx=np.array([i]))
                 for i in range(n)]
        x_feas = 0.5 * np.exp(1j * rng.uniform(0, 2 * np.pi, n)) \
            * rng.uniform(0.2, 1.0, n)
        r_ref = np.sqrt(float(n))
    else:
        r = float(rng.uniform(0.5, 3.0))
        balls = [BallConstraint(radius=r)]
        x_feas = _cn(rng, n)
        x_feas *= rng.uniform(0.1, 0.9) * r / np.linalg.norm(x_feas)
        r_ref = r
    quads = []
    for _ in range(int(rng.integers(0, 4))):
        m = int(rng.integers(1, 4))
        lin = _cn(rng, n) * rng.uniform(0.5, 2.0)
        A = _cn(rng, m, n) / np.sqrt(n)
        slack = float(rng.uniform(0.0, 0.5))
        off = float(np.real(np.vdot(lin, x_feas))
                    - np.linalg.norm(A @ x_feas) ** 2 - slack)
        quads.append(QuadConstraint(lin=lin, factor=A, offset=off))
    if rng.integers(0, 2):
        prob = ConvexSubproblem(n=n, lin_obj=_cn(rng, n), quads=quads,
                                balls=balls)
    else:
        prob = ConvexSubproblem(n=n, lin_obj=0.3 * _cn(rng, n), quads=quads,
                                balls=balls,
                                prox_center=0.3 * r_ref * _cn(rng, n),
                                prox_weight=float(rng.uniform(0.5, 4.0)))
    return prob, x_feas


def test_deterministic_bit_identical():
    rng = np.random.default_rng(7)
    prob, x0 = _random_instance(rng, n=8)
    r1 = solve(prob, warm_start=x0)
    r2 = solve(prob, warm_start=x0)
    np.testing.assert_array_equal(r1.x, r2.x)
    assert r1.objective == r2.objective
    assert r1.iterations == r2.iterations


def test_warm_start_monotone_improvement():
    rng = np.random.default_rng(11)
    for _ in range(25):
        prob, x0 = _random_instance(rng)
        res = solve(prob, warm_start=x0)
        assert res.status == "optimal"
        assert res.objective >= _objective(prob, x0) - 1e-9


def test_objective_scaling_leaves_argmax():
    rng = np.random.default_rng(13)
    prob, x0 = _random_instance(rng, n=6)
    scaled = ConvexSubproblem(
        n=prob.n, lin_obj=10.0 * prob.lin_obj, quads=prob.quads,
        balls=prob.balls,
        prox_center=prob.prox_center,
        prox_weight=10.0 * prob.prox_weight if prob.prox_weight else 0.0)
    r1 = solve(prob, warm_start=x0)
    r2 = solve(scaled, warm_start=x0)
    np.testing.assert_allclose(r1.x, r2.x, atol=1e-6)


def test_solution_feasible_within_tolerance():
    rng = np.random.default_rng(17)
    for _ in range(15):
        prob, x0 = _random_instance(rng)
        res = solve(prob, warm_start=x0)
        vals = constraint_values(prob, res.x)
        assert vals.min() >= -1e-7


# --- KKT residual -------------------------------------------------------


def test_kkt_zero_at_unconstrained_minimizer():
    rng = np.random.default_rng(19)
    center = 0.2 * _cn(rng, 5)
    prob = ConvexSubproblem(n=5, lin_obj=np.zeros(5, complex),
                            prox_center=center, prox_weight=3.0,
                            balls=[BallConstraint(radius=50.0)])
    lam = np.zeros(1)
    assert kkt_residual(prob, center, lam) < 1e-12


def test_kkt_small_at_solver_output_and_grows_off_optimum():
    rng = np.random.default_rng(23)
    prob, x0 = _random_instance(rng, n=8)
    res = solve(prob, warm_start=x0, tol_inner=1e-7)
    at_sol = kkt_residual(prob, res.x, res.multipliers)
    assert at_sol <= 10 * 1e-7
    bumped = res.x.copy()
    bumped[0] += 0.1
    assert kkt_residual(prob, bumped, res.multipliers) > at_sol


# --- first-order oracle -------------------------------------------------


def _emb(z):
    return np.concatenate([np.asarray(z).real, np.asarray(z).imag])


def _lift(x):
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def pga_oracle(prob: ConvexSubproblem, x_init: np.ndarray,
               max_steps: int = 10 ** 6):
    """Augmented-Lagrangian projected gradient, real embedding throughout.

    Quadratic constraints are absorbed with multiplier estimates
    y_i = max(0, y_i - mu c_i(x)); ball constraints are handled by exact
    projection (they are either one global ball or disjoint single-coordinate
    disks). Step size adapts by halving on objective decrease.
    """
    n = prob.n
    g = _emb(prob.lin_obj)
    w = prob.prox_weight
    cen = _emb(prob.prox_center) if prob.prox_center is not None \
        else np.zeros(2 * n)

    quads = []
    for q in prob.quads:
        A = q.factor
        Ar = np.block([[A.real, -A.imag], [A.imag, A.real]]) \
            if A.size else np.zeros((0, 2 * n))
        quads.append((_emb(q.lin), Ar, float(q.offset)))

    def project(x):
        z = x.copy()
        for b in prob.balls:
            if b.idx is None:
                nz = np.linalg.norm(z)
                if nz > b.radius:
                    z *= b.radius / nz
            else:
                i = int(b.idx[0])
                c = z[i] + 1j * z[i + n]
                a = abs(c)
                if a > b.radius:
                    c *= b.radius / a
                    z[i], z[i + n] = c.real, c.imag
        return z

    def cons_vals(x):
        return np.array([l @ x - np.linalg.norm(A @ x) ** 2 - d
                         for l, A, d in quads])

    def al_grad(x, y, mu):
        grad = g - w * (x - cen)
        if quads:
            c = cons_vals(x)
            act = np.maximum(0.0, y - mu * c)
            for (l, A, d), a in zip(quads, act):
                if a > 0:
                    grad += a * (l - 2.0 * (A.T @ (A @ x)))
        return grad

    x = project(_emb(x_init))
    y = np.zeros(len(quads))
    mu = 4.0
    steps_left = max_steps
    for _ in range(40):
        if steps_left <= 0:
            break
        step = 0.25 / (w + mu * sum(
            np.linalg.norm(A, 2) ** 2 * 4 + np.linalg.norm(l)
            for l, A, d in quads) + 1.0)
        prev = -np.inf
        stall = 0
        inner = min(steps_left, 60_000)
        for _ in range(inner):
            steps_left -= 1
            xn = project(x + step * al_grad(x, y, mu))
            move = np.linalg.norm(xn - x)
            x = xn
            if move < 1e-14:
                stall += 1
                if stall > 20:
                    break
            else:
                stall = 0
        if quads:
            c = cons_vals(x)
            y = np.maximum(0.0, y - mu * c)
            mu = min(mu * 2.0, 1e8)
            if np.all(c > -1e-12) and np.linalg.norm(
                    x - project(x + step * al_grad(x, y, mu))) < 1e-12:
                break
        else:
            break
    return _lift(x)


def test_matches_projected_gradient_oracle():
    rng = np.random.default_rng(29)
    for _ in range(6):
        prob, x0 = _random_instance(rng, n=8)
        res = solve(prob, warm_start=x0)
        x_pga = pga_oracle(prob, x0, max_steps=200_000)
        f_ip = _objective(prob, res.x)
        f_pga = _objective(prob, x_pga)
        scale = max(abs(f_ip), abs(f_pga), 1e-12)
        assert f_ip >= f_pga - 1e-4 * scale
        assert abs(f_ip - f_pga) <= 1e-4 * scale
