"""Channel synthesis: path loss, ULA steering, Rician fading.

Distances feed path loss only; LoS departure/arrival angles are drawn
independently per link (the configured geometry is not embeddable in 2-D,
so no coordinate layout is attempted). The RIS is treated as a ULA for its
steering vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig

_ANGLE_LO = -math.pi / 3
_ANGLE_HI = math.pi / 3


@dataclass
class ChannelSet:
    h_dt: np.ndarray   # (M,)  BS -> target
    h_rt: np.ndarray   # (N,)  RIS -> target
    G: np.ndarray      # (N, M) BS -> RIS (RIS-row, BS-column)
    h_dk: np.ndarray   # (K, M) BS -> user k
    h_rk: np.ndarray   # (K, N) RIS -> user k


def path_loss_linear(d: float, alpha: float, pl0_db: float) -> float:
    """Amplitude (not power) gain of one link: sqrt(PL0 * (d/1m)^-alpha)."""
    if d < 1:
        raise ValueError("d must be >= 1 m (path-loss reference distance)")
    return math.sqrt(10.0 ** (pl0_db / 10.0) * d ** (-alpha))


def steering_vector(n_elems: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, entry i = exp(j*pi*i*sin(angle))."""
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")
    idx = np.arange(n_elems)
    return np.exp(1j * np.pi * idx * np.sin(angle))


def rician_channel(rng: np.random.Generator, dims, beta_linear: float,
                   los: np.ndarray, amp: float) -> np.ndarray:
    """amp * (sqrt(b/(1+b)) * los + sqrt(1/(1+b)) * diffuse).

    The diffuse part is i.i.d. circular complex Gaussian with unit variance
    per entry; beta_linear = inf gives exactly amp * los (no draw consumed).
    """
    dims = tuple(dims)
    los = np.asarray(los, dtype=complex)
    if los.shape != dims:
        raise ValueError(f"los shape {los.shape} != dims {dims}")
    if math.isinf(beta_linear):
        return amp * los
    diffuse = (rng.standard_normal(dims) + 1j * rng.standard_normal(dims)) / math.sqrt(2)
    b = beta_linear
    return amp * (math.sqrt(b / (1 + b)) * los + math.sqrt(1 / (1 + b)) * diffuse)


def _draw_angle(rng: np.random.Generator, size=None):
    return rng.uniform(_ANGLE_LO, _ANGLE_HI, size=size)


def synthesize_channels(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """One realization of all five channels.

    Each link consumes its own child stream (fixed spawn order), so e.g. the
    BS->target and BS->user draws do not change when N changes.
    """
    M, N, K = cfg.M, cfg.N, cfg.K
    pl0 = cfg.pl0_db_at_1m
    r_dt, r_rt, r_g, r_dk, r_rk = rng.spawn(5)

    amp_bt = path_loss_linear(cfg.d_Bt, cfg.alpha_Bt, pl0)
    h_dt = rician_channel(r_dt, (M,), cfg.beta_Bt,
                          steering_vector(M, _draw_angle(r_dt)), amp_bt)

    if N > 0:
        amp_rt = path_loss_linear(cfg.d_Rt, cfg.alpha_Rt, pl0)
        h_rt = rician_channel(r_rt, (N,), cfg.beta_other,
                              steering_vector(N, _draw_angle(r_rt)), amp_rt)
        amp_br = path_loss_linear(cfg.d_BR, cfg.alpha_BR, pl0)
        los_g = np.outer(steering_vector(N, _draw_angle(r_g)),
                         steering_vector(M, _draw_angle(r_g)))
        G = rician_channel(r_g, (N, M), cfg.beta_BR, los_g, amp_br)
    else:
        h_rt = np.zeros(0, dtype=complex)
        G = np.zeros((0, M), dtype=complex)

    amp_bu = path_loss_linear(cfg.d_BU, cfg.alpha_BU, pl0)
    h_dk = np.zeros((K, M), dtype=complex)
    for k in range(K):
        h_dk[k] = rician_channel(r_dk, (M,), cfg.beta_other,
                                 steering_vector(M, _draw_angle(r_dk)), amp_bu)

    amp_ru = path_loss_linear(cfg.d_RU, cfg.alpha_RU, pl0)
    h_rk = np.zeros((K, N), dtype=complex)
    for k in range(K):
        if N > 0:
            h_rk[k] = rician_channel(r_rk, (N,), cfg.beta_other,
                                     steering_vector(N, _draw_angle(r_rk)), amp_ru)

    return ChannelSet(h_dt=h_dt, h_rt=h_rt, G=G, h_dk=h_dk, h_rk=h_rk)


def zero_ris_channels(channels: ChannelSet) -> ChannelSet:
    """Copy with all RIS-side channels zeroed (no-RIS baseline, shapes kept)."""
    return ChannelSet(h_dt=channels.h_dt.copy(),
                      h_rt=np.zeros_like(channels.h_rt),
                      G=np.zeros_like(channels.G),
                      h_dk=channels.h_dk.copy(),
                      h_rk=np.zeros_like(channels.h_rk))


def zero_user_channels(channels: ChannelSet) -> ChannelSet:
    """Copy with the user links zeroed; the radar links are kept.

    Feeding this to the phase initializer gives phases aligned for the
    bounce path alone, with no pull from the user terms.
    """
    return ChannelSet(h_dt=channels.h_dt.copy(),
                      h_rt=channels.h_rt.copy(),
                      G=channels.G.copy(),
                      h_dk=np.zeros_like(channels.h_dk),
                      h_rk=np.zeros_like(channels.h_rk))
