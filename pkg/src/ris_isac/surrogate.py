"""Concave inner bounds used by the alternating solver.

Both the radar objective and the SINR constraints are quadratic-over-affine
in (W, phi); each is replaced by its supporting linearization at the current
iterate (W_t, phi_t). The bounds are tight at the expansion point and global
minorants elsewhere, which is what makes the outer loop monotone.

The per-user bound needs the expansion inner product z_k = h_k(phi_t)^T w_k
to be real and nonnegative; build_surrogate enforces that by rotating each
user column of W_t by a unit phasor first. The rotation changes no power,
no SINR and no radar term, so the stored W_t is an equivalent iterate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import ScenarioConfig
from .signals import EchoOperators, effective_user_channel


@dataclass
class SurrogatePoint:
    """Expansion data frozen at (W_t, phi_t)."""
    W_t: np.ndarray          # (M, K+M), user columns phase-aligned
    phi_t: np.ndarray        # (N,)
    F1: np.ndarray           # (K+M, M), direct-path linearization weight
    F2: np.ndarray           # (K+M, M), RIS-path linearization weight
    c1: float                # quadratic value at expansion (no L/sigma_z scaling)
    c3: np.ndarray           # (K,)
    c4: np.ndarray           # (K,)
    h_t: np.ndarray          # (K, M) effective user channels at phi_t
    gamma_lin: np.ndarray    # (K,) SINR floors used to build c3/c4
    cfg: ScenarioConfig
    channels: ChannelSet
    ops: EchoOperators


def align_user_phases(W: np.ndarray, h_t: np.ndarray, K: int) -> np.ndarray:
    """Rotate each user column so h_k(phi_t)^T w_k lands on the real axis."""
    W = W.copy()
    for k in range(K):
        z = h_t[k] @ W[:, k]
        if abs(z) > 0:
            W[:, k] *= np.conj(z) / abs(z)
    return W


def build_surrogate(W_t: np.ndarray, phi_t: np.ndarray, cfg: ScenarioConfig,
                    channels: ChannelSet,
                    gamma_lin=None) -> SurrogatePoint:
    """Expand both bounds at (W_t, phi_t).

    gamma_lin overrides the configured SINR floors (used by the relaxed
    warm-up schedule); default is cfg.gamma_lin.
    """
    K = cfg.K
    ops = EchoOperators.from_channels(channels)
    if gamma_lin is None:
        gamma_lin = np.array(cfg.gamma_lin)
    else:
        gamma_lin = np.asarray(gamma_lin, dtype=float)

    h_t = np.zeros((K, cfg.M), dtype=complex)
    for k in range(K):
        h_t[k] = effective_user_channel(k, phi_t, channels)
    W_rot = align_user_phases(W_t, h_t, K)

    H0 = ops.H0
    H1t = ops.H1(phi_t)
    H0W = H0 @ W_rot
    H1W = H1t @ W_rot
    F1 = cfg.sigma0_sq * (H0W.conj().T @ H0)
    F2 = cfg.sigma1_sq * H1W.conj().T
    c1 = float(cfg.sigma0_sq * np.linalg.norm(H0W) ** 2
               + cfg.sigma1_sq * np.linalg.norm(H1W) ** 2)

    c3 = np.zeros(K)
    c4 = np.zeros(K)
    for k in range(K):
        z = h_t[k] @ W_rot[:, k]        # real >= 0 after alignment
        c3[k] = 2.0 * z.real / gamma_lin[k]
        c4[k] = (abs(z) ** 2) / gamma_lin[k] + cfg.sigma_k_sq

    return SurrogatePoint(W_t=W_rot, phi_t=phi_t.copy(), F1=F1, F2=F2, c1=c1,
                          c3=c3, c4=c4, h_t=h_t, gamma_lin=gamma_lin,
                          cfg=cfg, channels=channels, ops=ops)


def f_surr(sp: SurrogatePoint, W: np.ndarray, phi: np.ndarray) -> float:
    """Linearized radar term Re tr{F1 W + F2 H1(phi) W}.

    2*f_surr - c1 lower-bounds the true quadratic, with equality at the
    expansion point.
    """
    t1 = np.sum(sp.F1 * W.T)
    t2 = np.sum((sp.F2 @ sp.ops.H1(phi)) * W.T)
    return float((t1 + t2).real)


def g_surr(sp: SurrogatePoint, k: int, W: np.ndarray, phi: np.ndarray) -> float:
    """Concave bound on the SINR-k constraint; >= 0 implies SINR_k >= gamma_k."""
    h = effective_user_channel(k, phi, sp.channels)
    t = h @ W
    p = np.abs(t) ** 2
    interf = float(p.sum() - p[k])
    return float(sp.c3[k] * t[k].real - interf - sp.c4[k])


def phi_linear_coeff(sp: SurrogatePoint, W: np.ndarray):
    """Write f_surr(W, .) as Re{v^H phi} + const for fixed W.

    Only the F2 trace depends on phi, and it does so linearly through
    H1(phi) = u v^T + v u^T with v = C phi.
    """
    ops = sp.ops
    h = ops.h_dt
    hr = ops.h_rt
    G = ops.G
    WF2 = W @ sp.F2                    # (M, M)
    u1 = hr * (G @ (WF2 @ h))
    u2 = hr * (((h @ W) @ sp.F2) @ G.T)
    v = np.conj(u1 + u2)
    const = float(np.sum(sp.F1 * W.T).real)
    return v, const
