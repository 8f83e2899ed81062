"""Two-path radar echo model, shift alignment, filters, SNR and SINR.

The direct echo and the RIS echo carry the same L-slot pulse but the RIS
copy arrives tau samples late, so both live in a Q = L + tau snapshot
window. Everything here works on M x Q matrices; the stacked vectorized
form (vec of the window, Kronecker shift operators) appears only in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channels import ChannelSet
from .config import ScenarioConfig


def make_shift_matrix(L: int, Q: int, offset: int) -> np.ndarray:
    """L x Q selection matrix J with J[m, n] = 1 iff n - m = offset."""
    if not (0 <= offset <= Q - L):
        raise ValueError("offset must satisfy 0 <= offset <= Q - L")
    J = np.zeros((L, Q))
    J[np.arange(L), np.arange(L) + offset] = 1.0
    return J


def place_pulse(X: np.ndarray, Q: int, offset: int) -> np.ndarray:
    """Embed the M x L block X into an M x Q window starting at `offset`.

    Equals X @ make_shift_matrix(L, Q, offset) without forming J.
    """
    M, L = X.shape
    out = np.zeros((M, Q), dtype=complex)
    out[:, offset:offset + L] = X
    return out


def build_H0(h_dt: np.ndarray) -> np.ndarray:
    """Direct two-way response h_dt h_dt^T (plain transpose, symmetric)."""
    return np.outer(h_dt, h_dt)


def build_H1(phi: np.ndarray, h_dt: np.ndarray, h_rt: np.ndarray,
             G: np.ndarray) -> np.ndarray:
    """One-bounce RIS response u v^T + v u^T with u = h_dt, v = G^T diag(h_rt) phi."""
    v = G.T @ (h_rt * phi)
    return np.outer(h_dt, v) + np.outer(v, h_dt)


@dataclass
class EchoOperators:
    """Caches the phi-independent pieces of the echo responses."""
    h_dt: np.ndarray
    h_rt: np.ndarray
    G: np.ndarray

    @classmethod
    def from_channels(cls, channels: ChannelSet) -> "EchoOperators":
        return cls(h_dt=channels.h_dt, h_rt=channels.h_rt, G=channels.G)

    @cached_property
    def H0(self) -> np.ndarray:
        return build_H0(self.h_dt)

    @cached_property
    def C(self) -> np.ndarray:
        """M x N map phi -> v = G^T diag(h_rt) phi."""
        return self.G.T * self.h_rt[None, :]

    def ris_combined(self, phi: np.ndarray) -> np.ndarray:
        return self.C @ phi

    def H1(self, phi: np.ndarray) -> np.ndarray:
        v = self.ris_combined(phi)
        return np.outer(self.h_dt, v) + np.outer(v, self.h_dt)


def user_mix_matrix(k: int, channels: ChannelSet) -> np.ndarray:
    """B_k = G^T diag(h_rk), so h_k(phi) = h_dk + B_k phi. Shape M x N."""
    return channels.G.T * channels.h_rk[k][None, :]


def effective_user_channel(k: int, phi: np.ndarray,
                           channels: ChannelSet) -> np.ndarray:
    """Downlink channel of user k (direct plus RIS bounce), shape (M,)."""
    return channels.h_dk[k] + user_mix_matrix(k, channels) @ phi


def draw_symbols(rng: np.random.Generator, K: int, M: int, L: int) -> np.ndarray:
    """(K + M) x L unit-power symbol block: K comm rows then M radar rows.

    All rows are i.i.d. circular complex Gaussian with unit variance; L is
    assumed large enough that sample correlations average out.
    """
    shape = (K + M, L)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def radar_snr(W: np.ndarray, phi: np.ndarray, cfg: ScenarioConfig,
              channels: ChannelSet) -> float:
    """Expected post-filter radar SNR over the target fluctuation.

    (L / sigma_z^2) * (sigma0^2 ||H0 W||_F^2 + sigma1^2 ||H1(phi) W||_F^2).
    """
    ops = EchoOperators.from_channels(channels)
    e0 = np.linalg.norm(ops.H0 @ W) ** 2
    e1 = np.linalg.norm(ops.H1(phi) @ W) ** 2
    return cfg.L / cfg.sigma_z_sq * (cfg.sigma0_sq * e0 + cfg.sigma1_sq * e1)


def comm_sinr(k: int, W: np.ndarray, phi: np.ndarray, cfg: ScenarioConfig,
              channels: ChannelSet) -> float:
    """SINR of user k; interference sums over all other K + M - 1 columns."""
    h = effective_user_channel(k, phi, channels)
    t = h @ W
    p = np.abs(t) ** 2
    num = p[k]
    den = p.sum() - p[k] + cfg.sigma_k_sq
    return float(num / den)


def echo_components(W: np.ndarray, phi: np.ndarray, S: np.ndarray,
                    cfg: ScenarioConfig, channels: ChannelSet):
    """Unweighted per-path echoes in the full window: (H0 W S aligned at 0,
    H1 W S aligned at tau), both M x Q."""
    ops = EchoOperators.from_channels(channels)
    P0 = place_pulse(ops.H0 @ W @ S, cfg.Q, 0)
    P1 = place_pulse(ops.H1(phi) @ W @ S, cfg.Q, cfg.tau)
    return P0, P1


def optimal_filter(W: np.ndarray, phi: np.ndarray, S: np.ndarray,
                   cfg: ScenarioConfig, channels: ChannelSet) -> np.ndarray:
    """Unit-norm M x Q filter matched to the variance-weighted two-path echo."""
    P0, P1 = echo_components(W, phi, S, cfg, channels)
    F = np.sqrt(cfg.sigma0_sq) * P0 + np.sqrt(cfg.sigma1_sq) * P1
    n = np.linalg.norm(F)
    if n == 0:
        raise ValueError("degenerate filter: echo is identically zero")
    return F / n


def path_orthogonality_check(W: np.ndarray, phi: np.ndarray,
                             cfg: ScenarioConfig, channels: ChannelSet,
                             n_trials: int,
                             rng: np.random.Generator) -> float:
    """Monte Carlo size of the cross term <H0 W S J0, H1 W S J1> relative to
    the mean per-path energy. Small for L >> 1; the tau-shifted windows only
    couple through sample correlations of the symbol block."""
    ops = EchoOperators.from_channels(channels)
    A = ops.H0 @ W
    B = ops.H1(phi) @ W
    L, tau = cfg.L, cfg.tau
    cross = 0.0 + 0.0j
    energy = 0.0
    done = 0
    while done < n_trials:
        b = min(512, n_trials - done)
        S = (rng.standard_normal((b, cfg.K + cfg.M, L))
             + 1j * rng.standard_normal((b, cfg.K + cfg.M, L))) / np.sqrt(2)
        P0 = np.einsum("mj,bjl->bml", A, S)
        P1 = np.einsum("mj,bjl->bml", B, S)
        # windows overlap on snapshots tau..L-1: P0 column l meets P1 column l-tau
        cross += np.einsum("bml,bml->", np.conj(P0[:, :, tau:]),
                           P1[:, :, :L - tau])
        energy += 0.5 * (np.sum(np.abs(P0) ** 2) + np.sum(np.abs(P1) ** 2))
        done += b
    if energy == 0:
        return 0.0
    return abs(cross) / energy
