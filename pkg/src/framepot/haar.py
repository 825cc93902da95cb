"""Samplers for Haar-random 4x4 unitaries.

Two modes are provided. The default draws a complex Ginibre matrix and
QR-factorizes it, multiplying Q columnwise by the phases of R's diagonal;
this is exactly Haar on U(4). The alternative builds a unitary from 16
phase parameters (a rectangular mesh of six two-mode rotations plus a
diagonal) and samples all 16 uniformly. Uniform phases are not guaranteed
to reproduce the Haar measure, so that mode is validated empirically by
the test suite and the ``validate`` CLI command rather than assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Rectangular mesh over 4 modes: columns alternate even pairs and the odd
# pair, 6 crossings total. Each crossing consumes (theta, phi); the final
# 4 parameters form a diagonal phase layer.
MESH_PLAN = ((0, 1), (2, 3), (1, 2), (0, 1), (2, 3), (1, 2))
PHASE_COUNT = 2 * len(MESH_PLAN) + 4


def _ginibre(rng: np.random.Generator, count: int) -> np.ndarray:
    # One (2,4,4) block per matrix: 16 reals then 16 imaginaries, so batched
    # and one-at-a-time sampling consume the stream identically.
    z = rng.standard_normal((count, 2, 4, 4))
    return z[:, 0] + 1j * z[:, 1]


def _phase_fix(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.diagonal(r, axis1=-2, axis2=-1).copy()
    d /= np.abs(d)
    return q * d[..., None, :]


def sample_haar_two_qubit(rng: np.random.Generator) -> np.ndarray:
    """One Haar-distributed element of U(4) via Ginibre + corrected QR."""
    while True:
        z = _ginibre(rng, 1)[0]
        q, r = np.linalg.qr(z)
        if np.all(np.abs(np.diagonal(r)) > 1e-12):  # singular draws: probability 0
            return _phase_fix(q, r)


def sample_haar_batch(rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, 4, 4) stack of Haar unitaries; same stream use as the scalar form."""
    z = _ginibre(rng, count)
    q, r = np.linalg.qr(z)
    return _phase_fix(q, r)


def unitary_from_phases(phases: np.ndarray) -> np.ndarray:
    """Unitary from 16 phases: six mesh rotations times a 4-phase diagonal.

    Crossing (p, q) with parameters (theta, phi) applies
    [[e^{i phi} cos(theta), -sin(theta)], [e^{i phi} sin(theta), cos(theta)]]
    to modes p and q. Any parameter values give a unitary.
    """
    phases = np.asarray(phases, dtype=float).reshape(-1)
    if phases.shape != (PHASE_COUNT,):
        raise ValueError(f"need exactly {PHASE_COUNT} phase parameters")
    u = np.eye(4, dtype=complex)
    for idx, (p, q) in enumerate(MESH_PLAN):
        theta, phi = phases[2 * idx], phases[2 * idx + 1]
        c, s, e = math.cos(theta), math.sin(theta), np.exp(1j * phi)
        t = np.eye(4, dtype=complex)
        t[p, p] = e * c
        t[p, q] = -s
        t[q, p] = e * s
        t[q, q] = c
        u = t @ u
    return np.exp(1j * phases[12:])[:, None] * u


def sample_phase_parameterized(rng: np.random.Generator) -> np.ndarray:
    """Unitary from 16 i.i.d. uniform [0, 2*pi) phases."""
    return unitary_from_phases(rng.uniform(0.0, TWO_PI, PHASE_COUNT))


def sample_phase_batch(rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, 4, 4) stack of phase-parameterized unitaries."""
    phases = rng.uniform(0.0, TWO_PI, (count, PHASE_COUNT))
    u = np.broadcast_to(np.eye(4, dtype=complex), (count, 4, 4)).copy()
    for idx, (p, q) in enumerate(MESH_PLAN):
        theta, phi = phases[:, 2 * idx], phases[:, 2 * idx + 1]
        c, s, e = np.cos(theta), np.sin(theta), np.exp(1j * phi)
        t = np.broadcast_to(np.eye(4, dtype=complex), (count, 4, 4)).copy()
        t[:, p, p] = e * c
        t[:, p, q] = -s
        t[:, q, p] = e * s
        t[:, q, q] = c
        u = t @ u
    return np.exp(1j * phases[:, 12:])[:, :, None] * u


def haar_abs2_entry_cdf(x: np.ndarray) -> np.ndarray:
    """CDF of |U_00|^2 for Haar U(4): density 3(1-x)^2 on [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 1.0 - (1.0 - x) ** 3


@dataclass(frozen=True)
class SamplerReport:
    """Empirical sampler diagnostics; interpretation is left to the reader."""

    mode: str
    draws: int
    entry_ks_statistic: float
    entry_ks_pvalue: float
    fp_k1_value: float
    fp_k1_std_error: float


def sampler_report(mode: str, rng: np.random.Generator, draws: int) -> SamplerReport:
    """KS check of |U_00|^2 against the Haar marginal, plus the single-gate
    k=1 frame potential with its standard error (Haar reference: 1! = 1)."""
    from scipy import stats as sps

    sample = sample_haar_batch if mode == "ginibre_qr" else sample_phase_batch
    u = sample(rng, draws)
    ks = sps.kstest(np.abs(u[:, 0, 0]) ** 2, haar_abs2_entry_cdf)
    v = sample(rng, draws)
    t2 = np.abs(np.einsum("bij,bij->b", u.conj(), v)) ** 2
    return SamplerReport(
        mode=mode,
        draws=draws,
        entry_ks_statistic=float(ks.statistic),
        entry_ks_pvalue=float(ks.pvalue),
        fp_k1_value=float(t2.mean()),
        fp_k1_std_error=float(t2.std(ddof=1) / math.sqrt(draws)),
    )
