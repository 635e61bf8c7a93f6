"""Telegraph-noise sources and noise-averaged transfer matrices.

A qubit with splitting ``b0`` is driven by ``H(t) = -1/2 [b0 sz + s(t) g.sigma]``
where ``s(t) = +-1`` switches at rate ``gamma``. Averaging over the switching
history gives a real, generally non-orthogonal transfer matrix acting on the
extended Bloch vector ``(1, nx, ny, nz)``. It is obtained here by exponentiating
the 6x6 quasi-Hamiltonian on (fluctuator x Bloch) space and contracting the
fluctuator factor with the stationary distribution.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

__all__ = [
    "RtnSource",
    "QubitSpec",
    "QuasiHamiltonian",
    "free_transfer",
    "build_quasi_hamiltonian",
    "rtn_transfer",
    "single_transfer",
    "two_qubit_transfer",
    "rotating_frame",
    "coherence",
    "L_GENERATORS",
]

TAU1 = np.array([[0.0, 1.0], [1.0, 0.0]])
TAU3 = np.array([[1.0, 0.0], [0.0, -1.0]])
# |i_f> = |x_f> for unbiased noise
BOUNDARY = np.array([1.0, 1.0]) / np.sqrt(2.0)


def _cross_matrix(w):
    """Matrix K with K @ v == np.cross(w, v)."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


# Sign fixed so that exp(-i b0 L_z t) is the free precession
# n1 -> cos(b0 t) n1 + sin(b0 t) n2 generated by H = -b0 sz / 2.
L_GENERATORS = np.array([-1j * _cross_matrix(e) for e in np.eye(3)])


@dataclass(frozen=True)
class RtnSource:
    """One unbiased telegraph fluctuator.

    ``theta`` is the polar angle of the coupling direction measured from the
    qubit energy axis, ``phi`` its azimuth.
    """

    g: float
    theta: float
    gamma: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.g >= 0:
            raise ValueError(f"coupling g must be non-negative, got {self.g}")
        if not self.gamma >= 0:
            raise ValueError(f"switching rate must be non-negative, got {self.gamma}")
        if not 0.0 <= self.theta <= np.pi / 2 + 1e-15:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")

    @property
    def vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return self.g * np.array(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)]
        )

    @property
    def longitudinal(self) -> float:
        """Projection of the coupling on the energy axis, ``g cos(theta)``."""
        return self.g * np.cos(self.theta)


@dataclass(frozen=True)
class QubitSpec:
    b0: float = 1.0
    source: Optional[RtnSource] = None

    def __post_init__(self):
        if not self.b0 > 0:
            raise ValueError(f"b0 must be positive, got {self.b0}")

    @property
    def noisy(self) -> bool:
        return self.source is not None


@dataclass(frozen=True)
class QuasiHamiltonian:
    """6x6 generator on (fluctuator x Bloch) space, fluctuator factor first."""

    matrix: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        """``|i_f> (x) I_3`` as a 6x3 matrix; ``<x_f|`` is its transpose."""
        return np.kron(BOUNDARY[:, None], np.eye(3))

    def propagator(self, t) -> np.ndarray:
        """``exp(-i H_q t)`` for scalar or array ``t`` (shape ``(..., 6, 6)``)."""
        t = np.asarray(t, dtype=float)
        # -i H_q is real for this model; exponentiate it in real arithmetic.
        gen = -1j * self.matrix
        if np.abs(gen.imag).max() > 1e-14:
            raise ValueError("quasi-Hamiltonian generator is not real")
        return expm(gen.real * t[..., None, None])

    def contracted(self, t) -> np.ndarray:
        """Bloch-block transfer ``<x_f| exp(-i H_q t) |i_f>``."""
        p = self.boundary
        return p.T @ self.propagator(t) @ p


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return t


def _pad(block):
    """Embed 3x3 Bloch blocks into extended 4x4 transfer matrices."""
    out = np.zeros(block.shape[:-2] + (4, 4))
    out[..., 0, 0] = 1.0
    out[..., 1:, 1:] = block
    return out


def free_transfer(spec: QubitSpec, t) -> np.ndarray:
    """Extended transfer matrix of a noise-free qubit: precession about z."""
    t = _check_times(t)
    c, s = np.cos(spec.b0 * t), np.sin(spec.b0 * t)
    out = np.zeros(t.shape + (4, 4))
    out[..., 0, 0] = 1.0
    out[..., 3, 3] = 1.0
    out[..., 1, 1] = c
    out[..., 1, 2] = s
    out[..., 2, 1] = -s
    out[..., 2, 2] = c
    return out


def build_quasi_hamiltonian(spec: QubitSpec) -> QuasiHamiltonian:
    """``H_q = -i gamma + i gamma tau1 + [b0 L_z + tau3 g.L]``."""
    if spec.source is None:
        raise ValueError("quasi-Hamiltonian needs a qubit with a noise source")
    src = spec.source
    gl = np.tensordot(src.vector, L_GENERATORS, axes=1)
    h = (
        -1j * src.gamma * np.eye(6)
        + 1j * src.gamma * np.kron(TAU1, np.eye(3))
        + np.kron(np.eye(2), spec.b0 * L_GENERATORS[2])
        + np.kron(TAU3, gl)
    )
    return QuasiHamiltonian(h)


def rtn_transfer(spec: QubitSpec, t) -> np.ndarray:
    """Noise-averaged extended 4x4 transfer matrix at time(s) ``t``."""
    t = _check_times(t)
    return _pad(build_quasi_hamiltonian(spec).contracted(t))


def single_transfer(spec: QubitSpec, t) -> np.ndarray:
    """Dispatch to :func:`rtn_transfer` or :func:`free_transfer`."""
    if spec.noisy:
        return rtn_transfer(spec, t)
    return free_transfer(spec, t)


def two_qubit_transfer(spec_a: QubitSpec, spec_b: QubitSpec, t) -> np.ndarray:
    """16x16 transfer ``R_A (x) R_B`` in base-4 order (index ``4a + b``)."""
    ra = single_transfer(spec_a, t)
    rb = single_transfer(spec_b, t)
    out = np.einsum("...ij,...kl->...ikjl", ra, rb)
    return out.reshape(out.shape[:-4] + (16, 16))


def rotating_frame(r: np.ndarray, b0: float, t) -> np.ndarray:
    """Remove the free precession: ``R(t) R0(t)^-1``."""
    r0 = free_transfer(QubitSpec(b0), t)
    return r @ np.swapaxes(r0, -1, -2)


def coherence(spec: QubitSpec, t) -> np.ndarray:
    """Complex rotating-frame coherence factor of the transverse block.

    For ``theta = 0`` it is real and equals the dephasing function. For
    ``theta > 0`` the noise also shifts the precession frequency, so the
    transverse block is ``|c| x rotation`` to leading order; ``abs`` of the
    returned value is the dephasing amplitude, invariant under ``phi``.
    """
    m = rotating_frame(single_transfer(spec, t), spec.b0, t)
    return 0.5 * ((m[..., 1, 1] + m[..., 2, 2]) + 1j * (m[..., 1, 2] - m[..., 2, 1]))
