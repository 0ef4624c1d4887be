"""Symmetric 3x3 tensor helpers, logarithmic strain and stress invariants.

Tensors are plain ``(3, 3)`` float arrays. Symmetric quantities are
symmetrized on entry (``sym``) and can be packed into six components
ordered ``11, 22, 33, 12, 13, 23`` with ``to_voigt``/``from_voigt``.
Stress is tension positive; pressure ``p`` is compression positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

I3 = np.eye(3)
_VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class InvalidDeformationError(ValueError):
    """Raised when a deformation gradient is not orientation preserving."""


def sym(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def trace(a) -> float:
    return float(a[0, 0] + a[1, 1] + a[2, 2])


def dev(a) -> np.ndarray:
    return a - trace(a) / 3.0 * I3


def ddot(a, b) -> float:
    return float(np.tensordot(a, b))


def norm(a) -> float:
    return float(np.sqrt(np.tensordot(a, a)))


def to_voigt(a) -> np.ndarray:
    """Pack a symmetric tensor into its six independent components."""
    return np.array([a[i, j] for i, j in _VOIGT])


def from_voigt(v) -> np.ndarray:
    a = np.empty((3, 3))
    for k, (i, j) in enumerate(_VOIGT):
        a[i, j] = a[j, i] = v[k]
    return a


def voigt_weights() -> np.ndarray:
    """Weights turning a Voigt component sum into a double contraction."""
    return np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


def sym_eig(a):
    """Eigenvalues (ascending) and eigenvectors of a symmetric tensor."""
    return np.linalg.eigh(sym(a))


def sym_fun(a, fun) -> np.ndarray:
    """Apply a scalar function to a symmetric tensor through its spectrum."""
    w, v = sym_eig(a)
    return (v * fun(w)) @ v.T


def log_strain_from_defgrad(F) -> np.ndarray:
    """Lagrangian logarithmic strain ``0.5 * log(F^T F)``.

    Raises
    ------
    InvalidDeformationError
        If ``det F <= 0`` or ``F^T F`` has an eigenvalue below 1e-14.
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 3):
        raise InvalidDeformationError(f"expected a 3x3 deformation gradient, got {F.shape}")
    J = np.linalg.det(F)
    if not np.isfinite(J) or J <= 0.0:
        raise InvalidDeformationError(f"det F = {J:g} must be positive")
    C = sym(F.T @ F)
    w, v = np.linalg.eigh(C)
    if w[0] < 1e-14:
        raise InvalidDeformationError(f"right Cauchy-Green tensor is degenerate (min eig {w[0]:g})")
    return (v * (0.5 * np.log(w))) @ v.T


@dataclass(frozen=True)
class StressInvariants:
    """Pressure, von Mises stress and Lode angle of a stress tensor."""

    p: float
    q: float
    theta_c: float
    lode_arg: float
    degenerate: bool


def lode_argument(s, q: float) -> float:
    """``9 tr(s^3) / (2 q^3)`` for a deviator ``s``, not clamped."""
    return 9.0 * trace(s @ s @ s) / (2.0 * q**3)


def stress_invariants(sigma, q_eps: float = 1.5e-8) -> StressInvariants:
    """Return ``p = -tr(sigma)/3``, ``q`` and the Lode angle in ``[0, pi/3]``.

    The Lode angle is evaluated from the sorted principal deviatoric
    stresses with ``atan2``, which stays accurate at the compression and
    extension meridians where ``arccos`` of the cubic invariant loses half
    of the significant digits. It satisfies ``cos(3 theta_c) = lode_arg``.
    Below ``q_eps`` the deviatoric direction is undefined: ``theta_c`` is
    reported as 0 and ``degenerate`` is set.
    """
    sigma = sym(sigma)
    p = -trace(sigma) / 3.0
    s = dev(sigma)
    q = float(np.sqrt(1.5 * np.tensordot(s, s)))
    if q <= q_eps:
        return StressInvariants(p, q, 0.0, 0.0, True)
    xi = lode_argument(s, q)
    s3, s2, s1 = np.linalg.eigvalsh(s)
    theta = float(np.arctan2(s2 - s3, np.sqrt(3.0) * s1))
    theta = min(max(theta, 0.0), np.pi / 3.0)
    return StressInvariants(p, q, theta, float(np.clip(xi, -1.0, 1.0)), False)


def isotropic_stiffness(lam: float, mu: float) -> np.ndarray:
    """6x6 matrix mapping Voigt strain components to Voigt stress components.

    Shear rows act on tensor (not engineering) shear strains, so
    ``sigma_v = D @ eps_v`` with both vectors from ``to_voigt``.
    """
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(6), np.arange(6)] += 2.0 * mu
    return D
