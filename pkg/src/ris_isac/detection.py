"""Swerling-style detection over the two-path echo: thresholds, analytic
detection probability, and Monte Carlo verification.

The test statistic is the squared magnitude of the matched-filter output
|<F, Y>|^2 with a unit-norm space-time filter F. Under noise only it is
exponential with mean sigma_z^2, giving the closed-form threshold; under
target-present both path gains stay Gaussian, so the statistic is again
exponential and p_d has the closed p_fa^(1/(1+snr_eff)) form per symbol
block realization.

Draw order inside each chunk is fixed (symbols, direct gain, RIS gain,
noise), so results are bit-reproducible for a given generator and chunk
size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import ScenarioConfig
from .signals import EchoOperators, draw_symbols, optimal_filter

_CHUNK = 256


def default_pfa_grid() -> np.ndarray:
    return np.logspace(-4, -1, 13)


def np_threshold(p_fa: float, sigma_z_sq: float) -> float:
    """Detection threshold for a target false-alarm rate."""
    if not 0.0 < p_fa < 1.0:
        raise ValueError("p_fa must lie strictly inside (0, 1)")
    return -sigma_z_sq * float(np.log(p_fa))


def analytic_pd(p_fa, snr_eff):
    """p_fa ** (1 / (1 + snr_eff)), elementwise on either argument."""
    return np.asarray(p_fa) ** (1.0 / (1.0 + np.asarray(snr_eff)))


@dataclass
class RocCurve:
    p_fa: np.ndarray
    threshold: np.ndarray
    p_d_empirical: np.ndarray
    p_d_analytic: np.ndarray
    trials: int


def _complex_normal(rng, shape, var):
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _chunk_echo(H0W, H1W, S, cfg):
    """Per-trial unweighted path echoes, aligned in the Q window.

    S has shape (b, K+M, L); returns two (b, M, Q) arrays.
    """
    b = S.shape[0]
    M = H0W.shape[0]
    L, tau, Q = cfg.L, cfg.tau, cfg.Q
    P0 = np.zeros((b, M, Q), dtype=complex)
    P1 = np.zeros((b, M, Q), dtype=complex)
    P0[:, :, :L] = np.einsum("mj,bjl->bml", H0W, S)
    P1[:, :, tau:tau + L] = np.einsum("mj,bjl->bml", H1W, S)
    return P0, P1


def run_roc(W: np.ndarray, phi: np.ndarray, cfg: ScenarioConfig,
            channels: ChannelSet, p_fa_grid=None, n_trials: int = 10000,
            rng: np.random.Generator | None = None) -> RocCurve:
    """Empirical and per-realization analytic detection probability.

    Each trial draws a fresh symbol block, builds the realizable
    (variance-weighted) matched filter for it, then draws the fluctuating
    path gains and noise and thresholds the statistic.
    """
    if p_fa_grid is None:
        p_fa_grid = default_pfa_grid()
    p_fa_grid = np.asarray(p_fa_grid, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    sz = cfg.sigma_z_sq
    thr = np.array([np_threshold(p, sz) for p in p_fa_grid])

    ops = EchoOperators.from_channels(channels)
    H0W = ops.H0 @ W
    H1W = ops.H1(phi) @ W
    s0 = np.sqrt(cfg.sigma0_sq)
    s1 = np.sqrt(cfg.sigma1_sq)

    counts = np.zeros(len(p_fa_grid))
    pd_an_sum = np.zeros(len(p_fa_grid))
    done = 0
    while done < n_trials:
        b = min(_CHUNK, n_trials - done)
        S = _complex_normal(rng, (b, cfg.K + cfg.M, cfg.L), 1.0)
        a0 = _complex_normal(rng, b, cfg.sigma0_sq)
        a1 = _complex_normal(rng, b, cfg.sigma1_sq)
        Z = _complex_normal(rng, (b, cfg.M, cfg.Q), sz)

        P0, P1 = _chunk_echo(H0W, H1W, S, cfg)
        F = s0 * P0 + s1 * P1
        norms = np.sqrt(np.sum(np.abs(F) ** 2, axis=(1, 2)))
        norms[norms == 0] = 1.0
        F /= norms[:, None, None]

        Y = a0[:, None, None] * P0 + a1[:, None, None] * P1 + Z
        out = np.einsum("bmq,bmq->b", np.conj(F), Y)
        stat = np.abs(out) ** 2
        counts += (stat[:, None] > thr[None, :]).sum(axis=0)

        ca = np.einsum("bmq,bmq->b", np.conj(F), P0)
        cb = np.einsum("bmq,bmq->b", np.conj(F), P1)
        snr_eff = (cfg.sigma0_sq * np.abs(ca) ** 2
                   + cfg.sigma1_sq * np.abs(cb) ** 2) / sz
        pd_an_sum += (p_fa_grid[None, :]
                      ** (1.0 / (1.0 + snr_eff))[:, None]).sum(axis=0)
        done += b

    return RocCurve(p_fa=p_fa_grid, threshold=thr,
                    p_d_empirical=counts / n_trials,
                    p_d_analytic=pd_an_sum / n_trials, trials=n_trials)


def noise_only_far(W: np.ndarray, phi: np.ndarray, cfg: ScenarioConfig,
                   channels: ChannelSet, p_fa_grid=None,
                   n_trials: int = 1000000,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Empirical false-alarm rate of the thresholds under noise only,
    using one fixed filter realization. Returns rates aligned with the grid."""
    if p_fa_grid is None:
        p_fa_grid = default_pfa_grid()
    p_fa_grid = np.asarray(p_fa_grid, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    sz = cfg.sigma_z_sq
    thr = np.array([np_threshold(p, sz) for p in p_fa_grid])

    S = draw_symbols(rng, cfg.K, cfg.M, cfg.L)
    F = optimal_filter(W, phi, S, cfg, channels)

    counts = np.zeros(len(p_fa_grid))
    done = 0
    while done < n_trials:
        b = min(4096, n_trials - done)
        Z = _complex_normal(rng, (b, cfg.M, cfg.Q), sz)
        out = np.einsum("mq,bmq->b", np.conj(F), Z)
        stat = np.abs(out) ** 2
        counts += (stat[:, None] > thr[None, :]).sum(axis=0)
        done += b
    return counts / n_trials


def mc_snr_estimate(W: np.ndarray, phi: np.ndarray, cfg: ScenarioConfig,
                    channels: ChannelSet, n_trials: int = 10000,
                    rng: np.random.Generator | None = None):
    """Monte Carlo post-filter SNR with the filter matched to each realized
    echo (gains included). Unbiased for the expected-SNR objective: the
    cross-path term averages out because the two gains are independent.

    Returns (mean, stderr).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    sz = cfg.sigma_z_sq
    ops = EchoOperators.from_channels(channels)
    H0W = ops.H0 @ W
    H1W = ops.H1(phi) @ W

    vals = np.empty(n_trials)
    done = 0
    while done < n_trials:
        b = min(_CHUNK, n_trials - done)
        S = _complex_normal(rng, (b, cfg.K + cfg.M, cfg.L), 1.0)
        a0 = _complex_normal(rng, b, cfg.sigma0_sq)
        a1 = _complex_normal(rng, b, cfg.sigma1_sq)
        P0, P1 = _chunk_echo(H0W, H1W, S, cfg)
        Ysig = a0[:, None, None] * P0 + a1[:, None, None] * P1
        energy = np.sum(np.abs(Ysig) ** 2, axis=(1, 2))
        # |<y/||y||, y>|^2 / sigma_z^2 collapses to ||y||^2 / sigma_z^2
        vals[done:done + b] = energy / sz
        done += b

    mean = float(vals.mean()) if n_trials else 0.0
    stderr = float(vals.std(ddof=1) / np.sqrt(n_trials)) if n_trials > 1 else 0.0
    return mean, stderr
