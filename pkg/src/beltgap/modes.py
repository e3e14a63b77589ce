"""Harmonic eigenvectors and compound-wave mode shapes.

On the dispersion surface the coupling matrix A(omega, k) is singular; its
null vector alpha holds the harmonic amplitudes of the compound wave

    u(x, t) = sum_m alpha_m exp(i ((m - k) x + omega t)).

Inside a pass band one harmonic dominates alpha and the profile is a clean
plane wave; inside a gap the amplitudes spread over neighbouring harmonics
and the envelope decays spatially.  The spread is quantified by an inverse
participation score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BeltParams, OffSurfaceError, ParameterError
from .dispersion import dispersion_matrix

#: Residual ||A alpha|| accepted for an on-surface point, relative to the
#: Frobenius norm of A (floored at 1).
SURFACE_RTOL = 1e-8
#: Two smallest singular values closer than this (same relative scale) mark
#: a degenerate crossing; both null directions are then returned.
DEGENERATE_SVD_GAP = 1e-10


@dataclass(frozen=True, eq=False)
class ModeShape:
    """Harmonic amplitude vector of one compound wave.

    alpha is normalized to unit Euclidean length with its largest-magnitude
    entry rotated to the positive real axis, which pins the phase gauge and
    makes results reproducible bit-for-bit.  residual = ||A alpha||.
    """

    omega: float
    k: complex
    alpha: np.ndarray
    residual: float

    @property
    def harmonics(self) -> np.ndarray:
        m_max = (self.alpha.size - 1) // 2
        return np.arange(-m_max, m_max + 1)


@dataclass(frozen=True, eq=False)
class SpatialProfile:
    """Sampled compound-wave displacement at t = 0."""

    x: np.ndarray
    u: np.ndarray

    @property
    def envelope(self) -> np.ndarray:
        return np.abs(self.u)


def _gauge(vec: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec)
    j = int(np.argmax(np.abs(vec)))
    phase = vec[j] / abs(vec[j])
    return vec * phase.conjugate()


def eigenvector_at(bp: BeltParams, omega: float, k: complex) -> list[ModeShape]:
    """Null-space amplitude vector(s) of A(omega, k).

    Extracted from the singular direction of the smallest singular value,
    which doubles as a residual certificate.  Away from crossings the list
    holds a single mode; when the two smallest singular values coincide
    (a degenerate crossing) both directions are returned.

    Raises OffSurfaceError when (omega, k) does not satisfy the dispersion
    relation to within SURFACE_RTOL.
    """
    a = dispersion_matrix(bp, omega, k)
    scale = max(1.0, float(np.linalg.norm(a)))
    _, sv, vh = np.linalg.svd(a)
    if sv[-1] > SURFACE_RTOL * scale:
        raise OffSurfaceError(
            f"(omega = {omega}, k = {k}) is not on the dispersion surface: "
            f"smallest singular value {sv[-1]:.3e} exceeds "
            f"{SURFACE_RTOL * scale:.3e}")
    directions = [vh[-1].conj()]
    if sv.size > 1 and sv[-2] - sv[-1] <= DEGENERATE_SVD_GAP * scale:
        directions.append(vh[-2].conj())
    modes = []
    for vec in directions:
        alpha = _gauge(vec.astype(complex))
        modes.append(ModeShape(
            omega=float(omega),
            k=complex(k),
            alpha=alpha,
            residual=float(np.linalg.norm(a @ alpha)),
        ))
    return modes


def reconstruct(ms: ModeShape, periods: int, samples_per_period: int) -> SpatialProfile:
    """Spatial profile u(x) = sum_m alpha_m exp(i (m - k) x) at t = 0.

    The grid spans `periods` foundation periods (period 2 pi) inclusive of
    the right endpoint, so samples one period apart align exactly.  The
    time dependence is the global factor exp(i omega t) and is omitted.
    """
    if periods < 1:
        raise ParameterError(f"periods must be >= 1, got {periods}")
    if samples_per_period < 8:
        raise ParameterError(
            f"samples_per_period must be >= 8, got {samples_per_period}")
    x = np.linspace(0.0, 2.0 * np.pi * periods, periods * samples_per_period + 1)
    wavenumbers = ms.harmonics - ms.k  # compound wavenumbers m - k
    u = np.exp(1j * np.outer(x, wavenumbers)) @ ms.alpha
    return SpatialProfile(x=x, u=u)


def participation_ratio(ms: ModeShape) -> float:
    """Harmonic dominance score in [1/(2M+1), 1].

    sum |alpha_m|^4 for the unit-norm vector (the inverse participation
    ratio): 1 when a single harmonic carries the mode, 1/(2M+1) when the
    amplitudes spread uniformly.
    """
    w = np.abs(ms.alpha) ** 2
    return float(np.sum(w * w) / np.sum(w) ** 2)
