"""Multimode Gaussian states and the symplectic transformations acting on them.

States are pure values: every operation consumes a :class:`GaussianState`
and returns a new one, so instances can be shared freely across threads.
All matrices are dense; the schemes built on top of this module never use
more than a handful of modes.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .conventions import omega, rotation_block, xy_indices

_SYMMETRY_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class OpaParams:
    """Two-mode squeezer settings.

    ``gain`` is the amplitude gain G >= 1 of ``a' = G a + g e^{i phi} b*``;
    the conjugate gain ``g = sqrt(G^2 - 1)`` is always derived from it.
    """

    gain: float
    pump_phase: float = 0.0

    def __post_init__(self):
        if not (self.gain >= 1.0):
            raise ValueError(f"amplifier gain must be >= 1, got {self.gain}")

    @property
    def conjugate_gain(self) -> float:
        return math.sqrt(self.gain**2 - 1.0)


@dataclasses.dataclass(frozen=True)
class GaussianState:
    """Mean quadrature vector and covariance matrix over ``n_modes`` modes.

    ``mean`` has length ``2 n_modes`` ordered (X1, Y1, X2, Y2, ...);
    ``cov`` is the real symmetric positive-definite covariance matrix in
    the same ordering, with the vacuum normalised to the identity.
    """

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("a Gaussian state needs at least one mode")
        mean = np.asarray(self.mean, dtype=float).copy()
        cov = np.asarray(self.cov, dtype=float).copy()
        d = 2 * self.n_modes
        if mean.shape != (d,):
            raise ValueError(f"mean must have shape ({d},), got {mean.shape}")
        if cov.shape != (d, d):
            raise ValueError(f"cov must have shape ({d}, {d}), got {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("state moments must be finite")
        asym = np.max(np.abs(cov - cov.T))
        if asym > _SYMMETRY_TOL:
            raise ValueError(f"covariance matrix is not symmetric (defect {asym:.3e})")
        cov = 0.5 * (cov + cov.T)
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance matrix is not positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def _check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise ValueError(f"mode {mode} out of range for {self.n_modes} modes")


def vacuum_state(n_modes: int) -> GaussianState:
    """All-mode vacuum: zero means, identity covariance (the shot-noise unit)."""
    if n_modes < 1:
        raise ValueError("n_modes must be a positive integer")
    return GaussianState(n_modes, np.zeros(2 * n_modes), np.eye(2 * n_modes))


def displace(state: GaussianState, mode: int, dx: float, dy: float) -> GaussianState:
    """Shift the mean of one mode by (dx, dy); the covariance is untouched."""
    state._check_mode(mode)
    ix, iy = xy_indices(mode)
    mean = state.mean.copy()
    mean[ix] += dx
    mean[iy] += dy
    return GaussianState(state.n_modes, mean, state.cov)


def two_mode_squeezer_matrix(gain: float, pump_phase: float = 0.0) -> np.ndarray:
    """4x4 symplectic of ``a' = G a + g e^{i phi} b*`` on (Xa, Ya, Xb, Yb).

    The conjugate coupling block is a reflection: for pump phase 0 it sends
    ``Xa' = G Xa + g Xb`` and ``Ya' = G Ya - g Yb``, which is what makes
    X sums and Y differences of the two modes correlated.
    """
    g = math.sqrt(gain**2 - 1.0)
    c, s = math.cos(pump_phase), math.sin(pump_phase)
    a = gain * np.eye(2)
    b = g * np.array([[c, s], [s, -c]])
    return np.block([[a, b], [b, a]])


def beam_splitter_matrix(transmissivity: float, phase: float = 0.0) -> np.ndarray:
    """4x4 symplectic of a beam splitter with the given power transmissivity.

    Mode convention: ``a' = t a + r e^{i phase} b``,
    ``b' = -r e^{-i phase} a + t b`` with ``t = sqrt(T)``, ``r = sqrt(1-T)``.
    """
    t = math.sqrt(transmissivity)
    r = math.sqrt(1.0 - transmissivity)
    eye = np.eye(2)
    return np.block(
        [
            [t * eye, r * rotation_block(phase)],
            [-r * rotation_block(-phase), t * eye],
        ]
    )


def phase_shift_matrix(theta: float) -> np.ndarray:
    """2x2 symplectic of ``a -> a exp(i theta)``."""
    return rotation_block(theta)


def _embed_pair(s4: np.ndarray, mode_a: int, mode_b: int, n_modes: int) -> np.ndarray:
    full = np.eye(2 * n_modes)
    idx = np.array([2 * mode_a, 2 * mode_a + 1, 2 * mode_b, 2 * mode_b + 1])
    full[np.ix_(idx, idx)] = s4
    return full


def _apply_symplectic(state: GaussianState, s: np.ndarray) -> GaussianState:
    mean = s @ state.mean
    cov = s @ state.cov @ s.T
    cov = 0.5 * (cov + cov.T)
    return GaussianState(state.n_modes, mean, cov)


def apply_two_mode_squeezer(
    state: GaussianState, mode_a: int, mode_b: int, opa: OpaParams
) -> GaussianState:
    """Two-mode squeeze (parametric amplification) of a pair of distinct modes."""
    state._check_mode(mode_a)
    state._check_mode(mode_b)
    if mode_a == mode_b:
        raise ValueError("two-mode squeezer needs two distinct modes")
    s4 = two_mode_squeezer_matrix(opa.gain, opa.pump_phase)
    return _apply_symplectic(state, _embed_pair(s4, mode_a, mode_b, state.n_modes))


def apply_beam_splitter(
    state: GaussianState,
    mode_a: int,
    mode_b: int,
    transmissivity: float,
    phase: float = 0.0,
) -> GaussianState:
    """Mix two distinct modes on a beam splitter of the given transmissivity."""
    state._check_mode(mode_a)
    state._check_mode(mode_b)
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    s4 = beam_splitter_matrix(transmissivity, phase)
    return _apply_symplectic(state, _embed_pair(s4, mode_a, mode_b, state.n_modes))


def apply_phase_shift(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Rotate one mode's quadrature pair by ``theta``."""
    state._check_mode(mode)
    s = np.eye(2 * state.n_modes)
    ix, iy = xy_indices(mode)
    s[np.ix_([ix, iy], [ix, iy])] = phase_shift_matrix(theta)
    return _apply_symplectic(state, s)


def apply_loss(state: GaussianState, mode: int, eta: float) -> GaussianState:
    """Attenuate one mode by power transmission ``eta``, admixing vacuum.

    Means scale by sqrt(eta), the mode's variances map to
    ``eta V + (1 - eta)`` and covariances with other modes scale by
    sqrt(eta).
    """
    state._check_mode(mode)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission eta must lie in [0, 1], got {eta}")
    root = math.sqrt(eta)
    ix, iy = xy_indices(mode)
    mean = state.mean.copy()
    mean[[ix, iy]] *= root
    cov = state.cov.copy()
    cov[[ix, iy], :] *= root
    cov[:, [ix, iy]] *= root
    cov[ix, ix] += 1.0 - eta
    cov[iy, iy] += 1.0 - eta
    return GaussianState(state.n_modes, mean, cov)


def homodyne_stats(
    state: GaussianState, mode: int, lo_phase: float, eta_det: float = 1.0
) -> tuple[float, float]:
    """Mean and variance of X(lo_phase) on one mode, seen by a detector of
    efficiency ``eta_det``.

    The variance is in shot-noise units: the vacuum reads 1 for any LO
    phase and any detector efficiency.
    """
    state._check_mode(mode)
    if not 0.0 <= eta_det <= 1.0:
        raise ValueError(f"detection efficiency must lie in [0, 1], got {eta_det}")
    lossy = apply_loss(state, mode, eta_det) if eta_det != 1.0 else state
    c, s = math.cos(lo_phase), math.sin(lo_phase)
    ix, iy = xy_indices(mode)
    mean = c * lossy.mean[ix] + s * lossy.mean[iy]
    block = lossy.cov[np.ix_([ix, iy], [ix, iy])]
    var = float(np.array([c, s]) @ block @ np.array([c, s]))
    return float(mean), var


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    """Symplectic spectrum of the covariance matrix, nonincreasing.

    The eigenvalues of ``omega @ cov`` come in conjugate pairs ``+/- i nu``;
    physical states have every ``nu >= 1`` in this normalisation.  They are
    computed through the Hermitian matrix ``i sqrt(cov) omega sqrt(cov)``,
    whose well-conditioned eigenproblem keeps the spectrum accurate even
    for strongly squeezed states.
    """
    w, u = np.linalg.eigh(state.cov)
    root = (u * np.sqrt(np.clip(w, 0.0, None))) @ u.T
    herm = 1j * (root @ omega(state.n_modes) @ root)
    nus = np.linalg.eigvalsh(herm)
    return nus[::-1][: state.n_modes]


def mean_photon_number(state: GaussianState, mode: int) -> float:
    """Mean photon number of one mode (coherent part plus excess noise)."""
    state._check_mode(mode)
    ix, iy = xy_indices(mode)
    mx, my = state.mean[ix], state.mean[iy]
    vx, vy = state.cov[ix, ix], state.cov[iy, iy]
    return float((mx**2 + my**2) / 4.0 + (vx + vy - 2.0) / 4.0)
