"""Shared scenario builders for the test suite.

Two flavors of fixture: the physical default scenario (path losses around
-64 dB, noise at -80 dBm) shrunk to fast dimensions, and unit-scale channel
sets drawn directly from a Gaussian so algebraic identities can be checked
against O(1) magnitudes.
"""

from dataclasses import replace

import numpy as np
import pytest

from ris_isac.channels import ChannelSet
from ris_isac.config import DEFAULT_CONFIG_TEXT, parse_config


def default_cfg():
    return parse_config(DEFAULT_CONFIG_TEXT)


def small_cfg(**overrides):
    """Fast physical scenario: M=3, N=4, K=2, L=8."""
    base = dict(M=3, N=4, K=2, L=8, tau=2, P_watts=1.0,
                gamma_db=(6.0, 6.0), max_outer_iters=30)
    base.update(overrides)
    return replace(default_cfg(), **base)


def unit_channels(rng, M, N, K):
    """O(1) Gaussian channel set, no path loss. N=0 gives empty RIS parts."""
    cn = lambda *s: (rng.standard_normal(s) + 1j * rng.standard_normal(s)) \
        / np.sqrt(2)
    return ChannelSet(
        h_dt=cn(M), h_rt=cn(N), G=cn(N, M),
        h_dk=cn(K, M) if K else np.zeros((0, M), dtype=complex),
        h_rk=cn(K, N) if K else np.zeros((0, N), dtype=complex))


def unit_phases(rng, N):
    ang = rng.uniform(0, 2 * np.pi, N)
    return np.exp(1j * ang)


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
