"""Phase-only initialization on the unit-modulus circle manifold.

Picks RIS phases that jointly light up the cascaded radar path and the
cascaded user channels before any beamforming is done. The objective

    J(phi) = ||H1(phi)||_F^2 + sum_k ||h_k(phi)||^2

is a quadratic phi^H M phi + 2 Re{m^H phi} + const with M PSD, maximized
by projected conjugate-gradient ascent on the product of unit circles.
Physical channel gains put M around 1e-12, so the quadratic is normalized
internally; the maximizer is unchanged.
"""

from __future__ import annotations

import numpy as np

from .channels import ChannelSet
from .config import ScenarioConfig
from .signals import EchoOperators, user_mix_matrix


def quadratic_model(channels: ChannelSet, cfg: ScenarioConfig):
    """(M_mat, m_vec, const) of the initialization objective.

    ||H1||^2 = 2||u||^2 ||v||^2 + 2|u^H v|^2 with u = h_dt, v = C phi gives
    the first two terms of M; each user adds B_k^H B_k and B_k^H h_dk.
    """
    ops = EchoOperators.from_channels(channels)
    N = cfg.N
    C = ops.C
    u = ops.h_dt
    Cu = C.conj().T @ u
    M_mat = 2.0 * np.linalg.norm(u) ** 2 * (C.conj().T @ C) \
        + 2.0 * np.outer(Cu, Cu.conj())
    m_vec = np.zeros(N, dtype=complex)
    const = 0.0
    for k in range(cfg.K):
        B = user_mix_matrix(k, channels)
        M_mat += B.conj().T @ B
        m_vec += B.conj().T @ channels.h_dk[k]
        const += float(np.linalg.norm(channels.h_dk[k]) ** 2)
    return M_mat, m_vec, const


def init_objective(phi: np.ndarray, channels: ChannelSet,
                   cfg: ScenarioConfig) -> float:
    M_mat, m_vec, const = quadratic_model(channels, cfg)
    return float((phi.conj() @ M_mat @ phi).real
                 + 2.0 * (m_vec.conj() @ phi).real + const)


def euclidean_gradient(phi: np.ndarray, M_mat: np.ndarray,
                       m_vec: np.ndarray) -> np.ndarray:
    """Wirtinger gradient of the quadratic, 2(M phi + m)."""
    return 2.0 * (M_mat @ phi + m_vec)


def tangent_project(phi: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Remove the radial component at each unit-circle coordinate."""
    return g - (g * phi.conj()).real * phi


def retract(phi: np.ndarray, step: np.ndarray) -> np.ndarray:
    """Entrywise renormalize phi + step back onto the circles."""
    z = phi + step
    mag = np.abs(z)
    out = phi.copy()
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def _ascend(M_hat, m_hat, phi, max_iters, grad_floor):
    """PR+ conjugate gradient ascent from phi; returns (phi, value)."""

    def value(p):
        return float((p.conj() @ M_hat @ p).real + 2.0 * (m_hat.conj() @ p).real)

    def rgrad(p):
        return tangent_project(p, euclidean_gradient(p, M_hat, m_hat))

    r = rgrad(phi)
    d = r.copy()
    alpha0 = 1.0
    f_cur = value(phi)
    for _ in range(max_iters):
        rn = np.linalg.norm(r)
        if rn < grad_floor:
            break
        slope = float((r.conj() @ d).real)
        if slope <= 0:
            d = r.copy()
            slope = rn ** 2
        alpha = alpha0
        accepted = False
        for _ in range(50):
            cand = retract(phi, alpha * d)
            f_new = value(cand)
            if f_new >= f_cur + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        alpha0 = min(alpha * 2.0, 1e6)
        r_old = r
        phi, f_cur = cand, f_new
        r = rgrad(phi)
        r_old_t = tangent_project(phi, r_old)
        denom = float((r_old.conj() @ r_old).real)
        beta = max(0.0, float((r.conj() @ (r - r_old_t)).real) / denom) \
            if denom > 0 else 0.0
        d = r + beta * tangent_project(phi, d)
        if float((d.conj() @ r).real) <= 0:
            d = r.copy()
    return phi, f_cur


def riemannian_ascent(channels: ChannelSet, cfg: ScenarioConfig,
                      rng: np.random.Generator, restarts: int = 3,
                      max_iters: int = 500) -> np.ndarray:
    """Best unit-modulus phi over a few random starts."""
    N = cfg.N
    if N == 0:
        return np.zeros(0, dtype=complex)
    M_mat, m_vec, _ = quadratic_model(channels, cfg)
    scale = float(np.trace(M_mat).real) / N + float(np.linalg.norm(m_vec)) / N
    if scale <= 0:
        scale = 1.0
    M_hat = M_mat / scale
    m_hat = m_vec / scale
    grad_floor = 1e-6 * N

    best_phi = None
    best_val = -np.inf
    for _ in range(restarts):
        phi0 = np.exp(2j * np.pi * rng.random(N))
        phi, val = _ascend(M_hat, m_hat, phi0, max_iters, grad_floor)
        if val > best_val:
            best_val = val
            best_phi = phi
    return best_phi
