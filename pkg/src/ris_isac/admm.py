"""Alternating optimizer for the joint beamformer / RIS phase design.

Outer loop: expand the concave bounds at the current iterate, solve the
beamformer subproblem exactly, take a proximal step in the relaxed phase
vector, project onto the unit-modulus set, update the scaled dual. The
relaxed phases and their projection are tied by a consensus penalty; on
exit the relaxed copy is snapped to the projection and feasibility is
repaired with one extra beamformer solve if the snap broke a constraint.

The linearized radar objective lives at physical scale (~1e-9 W at the
default geometry) while the consensus penalty is O(1), so the augmented
objective is normalized once per run by its initial value; rho then acts
on a dimensionless objective and the default 1.0 is meaningful.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orth

from .channels import ChannelSet
from .config import ScenarioConfig
from .signals import comm_sinr, effective_user_channel, radar_snr, user_mix_matrix
from .subsolver import (BallConstraint, ConvexSubproblem, QuadConstraint,
                        solve)
from .surrogate import SurrogatePoint, build_surrogate, f_surr, phi_linear_coeff


class InfeasibleStartError(RuntimeError):
    """No beamformer satisfying the SINR floors could be constructed."""


class SubproblemError(RuntimeError):
    """An inner solve failed in a way the outer loop cannot absorb."""


@dataclass
class BeamformerState:
    W: np.ndarray        # (M, K+M)
    phi: np.ndarray      # (N,) relaxed phases (unit modulus after snapping)
    psi: np.ndarray      # (N,) unit-modulus copy
    lam: np.ndarray      # (N,) scaled dual variable
    iteration: int


@dataclass
class IterationRecord:
    iteration: int
    snr_linear: float
    snr_db: float
    min_sinr_margin_db: float
    consensus_gap: float
    al_value: float


@dataclass
class SolveReport:
    records: list = field(default_factory=list)
    status: str = "max_iters"        # converged | max_iters
    wall_time_s: float = 0.0
    obj_scale: float = 1.0
    feasible: bool = False
    repair_used: bool = False
    restarts_used: int = 0


def _snr_db(x: float) -> float:
    return 10.0 * np.log10(max(x, 1e-300))


def min_sinr_margin_db(W, phi, cfg, channels) -> float:
    """Worst-user margin 10log10(SINR_k) - gamma_k_db; +inf when K = 0."""
    if cfg.K == 0:
        return np.inf
    m = np.inf
    for k in range(cfg.K):
        s = comm_sinr(k, W, phi, cfg, channels)
        m = min(m, _snr_db(s) - cfg.gamma_db[k])
    return m


def _is_feasible(W, phi, cfg, channels, slack=1e-6) -> bool:
    gl = cfg.gamma_lin
    return all(comm_sinr(k, W, phi, cfg, channels) >= gl[k] - slack
               for k in range(cfg.K))


def update_W(sp: SurrogatePoint, W_warm: np.ndarray,
             gamma_lin=None) -> np.ndarray:
    """Exact beamformer subproblem at the expansion point sp.

    The optimum lies in the span of the linearization rows and the
    conjugated user channels (any orthogonal component only burns power),
    so the solve runs in that subspace: identical objective and constraint
    values, a fraction of the dimension.
    """
    cfg = sp.cfg
    K, M = cfg.K, cfg.M
    J = K + M
    F = sp.F1 + sp.F2 @ sp.ops.H1(sp.phi_t)        # (J, M)

    blocks = [F.conj().T]
    if K:
        blocks.append(sp.h_t.T.conj())
    U = orth(np.concatenate(blocks, axis=1))
    d = U.shape[1]
    if d == 0:
        return W_warm.copy()
    n = d * J

    FU = F @ U
    h_red = sp.h_t @ U if K else np.zeros((0, d), dtype=complex)

    lin_obj = np.zeros(n, dtype=complex)
    for j in range(J):
        lin_obj[j * d:(j + 1) * d] = np.conj(FU[j])

    quads = []
    for k in range(K):
        linc = np.zeros(n, dtype=complex)
        linc[k * d:(k + 1) * d] = sp.c3[k] * np.conj(h_red[k])
        rows = np.zeros((J - 1, n), dtype=complex)
        r = 0
        for j in range(J):
            if j == k:
                continue
            # (factor @ x) block j = h_red[k] . y_j = h_k^T w_j, no conjugate
            rows[r, j * d:(j + 1) * d] = h_red[k]
            r += 1
        quads.append(QuadConstraint(lin=linc, factor=rows, offset=sp.c4[k]))

    prob = ConvexSubproblem(
        n=n, lin_obj=lin_obj, quads=quads,
        balls=[BallConstraint(radius=float(np.sqrt(cfg.P_watts)))])
    Yw = (U.conj().T @ W_warm).flatten(order="F")
    res = solve(prob, warm_start=Yw, tol_inner=cfg.tol_inner)
    if res.status == "infeasible":
        raise SubproblemError("beamformer subproblem infeasible")
    Y = res.x.reshape(d, J, order="F")
    return U @ Y


def update_phi(sp: SurrogatePoint, W: np.ndarray, psi: np.ndarray,
               lam: np.ndarray, rho: float, obj_scale: float) -> np.ndarray:
    """Proximal phase step: maximize the normalized linearized radar term
    minus (rho/2)||phi - (psi - lam/rho)||^2 inside the unit disks and the
    linearized SINR set."""
    cfg = sp.cfg
    K = cfg.K
    N = cfg.N
    J = K + cfg.M
    channels = sp.channels

    v, _ = phi_linear_coeff(sp, W)
    lin = v / obj_scale
    center = psi - lam / rho

    quads = []
    for k in range(K):
        B = user_mix_matrix(k, channels)       # (M, N)
        a = channels.h_dk[k] @ W               # (J,)
        Bt = B.T @ W                           # (N, J)
        linc = sp.c3[k] * np.conj(Bt[:, k])
        off = sp.c4[k] - sp.c3[k] * a[k].real
        rows = np.zeros((J - 1, N), dtype=complex)
        r = 0
        for j in range(J):
            if j == k:
                continue
            linc = linc - 2.0 * a[j] * np.conj(Bt[:, j])
            rows[r] = Bt[:, j]      # (factor @ phi) row = b_kj^T phi
            off += abs(a[j]) ** 2
            r += 1
        quads.append(QuadConstraint(lin=linc, factor=rows, offset=float(off)))

    balls = [BallConstraint(radius=1.0, idx=np.array([i])) for i in range(N)]
    prob = ConvexSubproblem(n=N, lin_obj=lin, quads=quads, balls=balls,
                            prox_center=center, prox_weight=rho)
    res = solve(prob, warm_start=sp.phi_t, tol_inner=cfg.tol_inner)
    if res.status == "infeasible":
        raise SubproblemError("phase subproblem infeasible")
    return res.x


def _ulp_steps(x0, k=4):
    out = [x0]
    lo = hi = x0
    for _ in range(k):
        hi = np.nextafter(hi, np.inf)
        lo = np.nextafter(lo, -np.inf)
        out.extend((hi, lo))
    return out


def _unit_exact(w: np.ndarray) -> np.ndarray:
    """Nudge already-normalized entries so abs() is 1.0 down to the last bit.

    Plain z/|z| leaves a third of the entries an ulp off the circle, which
    breaks downstream modulus checks. Stepping the real or imaginary part a
    few ulps moves hypot in sub-ulp increments near the circle, so an exact
    neighbor always exists within a 9x9 stencil; the phase moves by < 1e-15.
    """
    w = w.copy()
    for i in np.flatnonzero(np.abs(w) != 1.0):
        done = False
        for a in _ulp_steps(w[i].real):
            for b in _ulp_steps(w[i].imag):
                # numpy's cabs, not the builtin: their roundings differ
                if np.abs(np.complex128(complex(a, b))) == 1.0:
                    w[i] = complex(a, b)
                    done = True
                    break
            if done:
                break
        if not done:   # unreachable in practice; keep the nearest axis point
            if abs(w[i].real) >= abs(w[i].imag):
                w[i] = 1.0 if w[i].real >= 0 else -1.0
            else:
                w[i] = 1.0j if w[i].imag >= 0 else -1.0j
    return w


def update_psi(phi: np.ndarray, lam: np.ndarray, rho: float) -> np.ndarray:
    """Closest unit-modulus vector to the dual-shifted phases; ties -> 1."""
    z = rho * phi + lam
    psi = np.ones_like(phi)
    nz = np.abs(z) > 0
    psi[nz] = z[nz] / np.abs(z[nz])
    return _unit_exact(psi)


def update_lambda(lam: np.ndarray, phi: np.ndarray, psi: np.ndarray,
                  rho: float) -> np.ndarray:
    return lam + rho * (phi - psi)


def al_value(sp: SurrogatePoint, W, phi, psi, lam, rho, obj_scale) -> float:
    gap = phi - psi + lam / rho
    return f_surr(sp, W, phi) / obj_scale \
        - 0.5 * rho * float(np.linalg.norm(gap) ** 2)


def _heuristic_W(cfg: ScenarioConfig, channels: ChannelSet,
                 phi: np.ndarray) -> np.ndarray:
    """Half the power split across matched user beams, half across an
    isotropic radar block. Only an expansion point; the relaxed schedule
    makes it feasible."""
    M, K = cfg.M, cfg.K
    W = np.zeros((M, K + M), dtype=complex)
    P = cfg.P_watts
    if K:
        p_c = 0.5 * P / K
        for k in range(K):
            h = effective_user_channel(k, phi, channels)
            nh = np.linalg.norm(h)
            if nh > 0:
                W[:, k] = np.sqrt(p_c) * np.conj(h) / nh
        p_r = 0.5 * P / M
    else:
        p_r = P / M
    for i in range(M):
        W[i, K + i] = np.sqrt(p_r)
    return W


def _initial_feasible_W(cfg: ScenarioConfig, channels: ChannelSet,
                        phi: np.ndarray):
    """Beamformer meeting the SINR floors at the given phases.

    If the matched-beam start is infeasible, walk the floors up a geometric
    schedule (in dB) from the start's own SINR level to the target,
    re-expanding the bound at each accepted beamformer.
    """
    K = cfg.K
    gam = np.array(cfg.gamma_lin)
    W = _heuristic_W(cfg, channels, phi)
    if K == 0:
        sp = build_surrogate(W, phi, cfg, channels)
        return update_W(sp, sp.W_t), 0

    sinr0 = np.array([comm_sinr(k, W, phi, cfg, channels) for k in range(K)])
    ratio = float(np.min(sinr0 / gam))
    if ratio >= 1.0:
        factors = [1.0]
    else:
        r0 = max(ratio, 1e-6)
        steps = 5
        factors = [r0 ** (1.0 - j / steps) for j in range(steps + 1)]

    tried = 0
    for f in factors:
        tried += 1
        sp = build_surrogate(W, phi, cfg, channels, gamma_lin=gam * f)
        try:
            W = update_W(sp, sp.W_t)
        except SubproblemError as e:
            raise InfeasibleStartError(
                f"relaxed floor at factor {f:.3g} is already infeasible") from e

    if not _is_feasible(W, phi, cfg, channels):
        raise InfeasibleStartError("schedule ended below the SINR floors")
    return W, tried - 1


def initial_radar_snr(cfg: ScenarioConfig, channels: ChannelSet,
                      phi: np.ndarray) -> float:
    """Radar SNR at the first feasible beamformer for fixed phases.

    One subproblem solve; used to rank candidate phase initializations
    before committing to a full run.
    """
    W0, _ = _initial_feasible_W(cfg, channels, phi)
    return radar_snr(W0, phi, cfg, channels)


def _extrapolated_step(W, W_prev, count, phi, cfg, channels, snr_floor):
    """Try a beamformer update with the surrogate expanded at an extrapolated
    point W + theta (W - W_prev). Tangent minorants stay global minorants at
    any expansion point, so feasibility is untouched; the caller keeps the
    candidate only if it does not lose radar SNR, which preserves the
    monotone trace. Returns (surrogate, W_new) or (None, None)."""
    theta = (count - 1.0) / (count + 2.0)
    W_ex = W + theta * (W - W_prev)
    for k in range(cfg.K):
        h = effective_user_channel(k, phi, channels)
        if abs(h @ W_ex[:, k]) < 1e-30:
            return None, None
    try:
        sp = build_surrogate(W_ex, phi, cfg, channels)
        cand = update_W(sp, W)
    except SubproblemError:
        return None, None
    s = radar_snr(cand, phi, cfg, channels)
    if not np.isfinite(s) or s < snr_floor:
        return None, None
    return sp, cand


def optimize(cfg: ScenarioConfig, channels: ChannelSet,
             phi_init: np.ndarray | None = None,
             optimize_phi: bool = True):
    """Run the full alternating scheme. Returns (BeamformerState, SolveReport).

    optimize_phi=False freezes the phases at phi_init (baselines); the
    consensus machinery is skipped entirely in that mode.
    """
    t0 = time.perf_counter()
    N, K = cfg.N, cfg.K
    if phi_init is None:
        phi_init = np.ones(N, dtype=complex)
    phi = np.asarray(phi_init, dtype=complex).copy()
    do_phi = optimize_phi and N > 0

    W, restarts = _initial_feasible_W(cfg, channels, phi)
    sp0 = build_surrogate(W, phi, cfg, channels)
    obj_scale = max(sp0.c1, 1e-300)

    psi = phi.copy()
    lam = np.zeros(N, dtype=complex)
    rho = cfg.rho

    report = SolveReport(obj_scale=obj_scale, restarts_used=restarts)
    snapshots = []
    snr_prev = radar_snr(W, phi, cfg, channels)
    last_it = 0
    W_prev = None
    momentum = 1

    for it in range(1, cfg.max_outer_iters + 1):
        last_it = it
        sp = W_new = None
        if W_prev is not None:
            sp, W_new = _extrapolated_step(W, W_prev, momentum, phi, cfg,
                                           channels, snr_prev)
        W_prev = W
        if W_new is not None:
            W = W_new
            momentum += 1
        else:
            sp = build_surrogate(W, phi, cfg, channels)
            W = update_W(sp, sp.W_t)
            momentum = 1
        if do_phi:
            phi = update_phi(sp, W, psi, lam, rho, obj_scale)
            psi = update_psi(phi, lam, rho)
            lam = update_lambda(lam, phi, psi, rho)

        snr = radar_snr(W, phi, cfg, channels)
        gap = float(np.max(np.abs(phi - psi))) if do_phi else 0.0
        al = al_value(sp, W, phi, psi, lam, rho, obj_scale) if do_phi \
            else f_surr(sp, W, phi) / obj_scale
        report.records.append(IterationRecord(
            iteration=it, snr_linear=snr, snr_db=_snr_db(snr),
            min_sinr_margin_db=min_sinr_margin_db(W, phi, cfg, channels),
            consensus_gap=gap, al_value=al))

        if do_phi:
            snapshots.append((W.copy(), psi.copy(),
                              _is_feasible(W, psi, cfg, channels)))

        rel = abs(snr - snr_prev) / max(abs(snr_prev), 1e-300)
        if it > 1 and rel < cfg.tol_outer and (not do_phi or gap < 1e-3):
            report.status = "converged"
            break
        snr_prev = snr

    feasible = True
    if do_phi:
        phi_fin = psi.copy()
        if not _is_feasible(W, phi_fin, cfg, channels):
            repaired = False
            try:
                spr = build_surrogate(W, phi_fin, cfg, channels)
                Wr = update_W(spr, spr.W_t)
                if _is_feasible(Wr, phi_fin, cfg, channels):
                    W = Wr
                    repaired = True
                    report.repair_used = True
            except SubproblemError:
                pass
            if not repaired:
                fallback = [s for s in snapshots if s[2]]
                if fallback:
                    W, phi_fin, _ = fallback[-1]
                    report.repair_used = True
                else:
                    feasible = False
        phi = phi_fin
        psi = phi_fin.copy()
    else:
        feasible = _is_feasible(W, phi, cfg, channels)

    report.feasible = feasible if K else True
    report.wall_time_s = time.perf_counter() - t0
    state = BeamformerState(W=W, phi=phi, psi=psi, lam=lam, iteration=last_it)
    return state, report
