"""Density-driven hardening from a plane-strain unit-cell limit analysis.

The powder is idealized as equal circular cylinders (radius ``R0``) in a
square arrangement. Each particle flattens against its neighbours over a
contact half-length ``a`` and a deforming block of height ``h``; the upper
bound collapse pressure of that mechanism gives the hydrostatic
compressive strength ``p_c``. Contact area growth gives the cohesion ``c``
and the pressure-sensitivity ``M`` of the yield surface.

Functions here are pure and work on floats. Strengths are in MPa, lengths
in whatever unit ``R0`` carries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

PI = math.pi
SQRT3 = math.sqrt(3.0)


class DomainError(ValueError):
    """Relative density outside the range where a closed form applies."""


class GeometryBreakdownError(ValueError):
    """The unit-cell mechanism has negative contact length (``h > R``)."""

    def __init__(self, rho_hat: float, message: str | None = None):
        self.rho_hat = rho_hat
        super().__init__(message or f"unit-cell geometry invalid at rho_hat={rho_hat:.6g} (a < 0)")


class DegenerateSurfaceError(ValueError):
    """``p_c + c`` vanished, so the yield surface has no extent."""


@dataclass(frozen=True)
class CellGeometry:
    rho_hat: float
    R_cell: float
    h: float
    a: float
    R0: float
    zeta: float

    @property
    def valid(self) -> bool:
        return self.a >= 0.0 and self.h > 0.0


@dataclass(frozen=True)
class HardeningState:
    """Yield-surface size and shape at one density and temperature."""

    p_c: float
    c: float
    M: float
    A_c: float


def _check_open(rho_hat: float) -> None:
    if not 0.0 < rho_hat < 1.0:
        raise DomainError(f"rho_hat={rho_hat!r} must lie in (0, 1)")


def cell_side(rho_hat: float, R0: float) -> float:
    """Half-side of the square cell holding one particle of radius ``R0``."""
    if not 0.0 < rho_hat <= 1.0:
        raise DomainError(f"rho_hat={rho_hat!r} must lie in (0, 1]")
    return 0.5 * R0 * math.sqrt(PI / rho_hat)


def block_height(rho_hat: float, R0: float, zeta: float = 2.7) -> float:
    """Height of the deforming block; ``zeta = 1`` is the unmodified mechanism."""
    _check_open(rho_hat)
    if zeta <= 0.0:
        raise DomainError(f"zeta={zeta!r} must be positive")
    return zeta * R0 * math.sqrt(PI * (1.0 - rho_hat) / (rho_hat * (4.0 - PI)))


def cell_geometry(rho_hat: float, R0: float = 1.0, zeta: float = 2.7) -> CellGeometry:
    R = cell_side(rho_hat, R0)
    h = block_height(rho_hat, R0, zeta)
    return CellGeometry(rho_hat=rho_hat, R_cell=R, h=h, a=R - h, R0=R0, zeta=zeta)


def geometric_limit_pressure(geom: CellGeometry, k: float) -> float:
    """Collapse pressure ``P/R`` summed from the three dissipation sources.

    Diagnostic counterpart of the closed forms below; it does not reproduce
    their constants (0.5 k against k/sqrt(pi) at the close-packed
    state), so it is reported next to them rather than used for hardening.
    """
    if not geom.valid:
        raise GeometryBreakdownError(geom.rho_hat)
    a, h = geom.a, geom.h
    P = k * (3.0 * a + 0.5 * a * a / h + 0.5 * h)
    return P / geom.R_cell


def _s(rho_hat: float) -> float:
    return math.sqrt((rho_hat - 1.0) / (PI - 4.0))


def compaction_pressure_plane(rho_hat: float, sigma_m: float) -> float:
    """Plane-strain upper-bound compaction curve, shear strength ``sigma_m/sqrt(3)``."""
    _check_open(rho_hat)
    k = sigma_m / SQRT3
    s = _s(rho_hat)
    num = math.sqrt(PI) * (-8.0 + (12.0 + PI - 16.0 * rho_hat) * s + 8.0 * rho_hat)
    return k * num / (8.0 * rho_hat * (rho_hat - 1.0))


def compaction_pressure_mla(rho_hat: float, sigma_m: float) -> float:
    """Modified limit-analysis compaction curve (``zeta = 2.7`` calibration).

    Negative below ``RHO_STAR``; flooring happens in ``hardening_bundle``.
    """
    _check_open(rho_hat)
    s = _s(rho_hat)
    num = -530.0 + (619.0 + 25.0 * PI - 719.0 * rho_hat) * s + 530.0 * rho_hat
    return sigma_m * num / (210.0 * SQRT3 * (rho_hat - 1.0))


def compaction_pressure_mla_factored(rho_hat: float, sigma_m: float) -> float:
    """Same curve written in ``s = sqrt((rho-1)/(pi-4))``; used as a cross-check."""
    _check_open(rho_hat)
    s = _s(rho_hat)
    return (25.0 + 530.0 * s - 719.0 * s * s) * sigma_m / (210.0 * SQRT3 * s)


# zero of the MLA curve: positive root of 719 s^2 - 530 s - 25 = 0, rho = 1 + (pi - 4) s^2
_S_STAR = (530.0 + math.sqrt(530.0**2 + 4.0 * 719.0 * 25.0)) / (2.0 * 719.0)
RHO_STAR = 1.0 + (PI - 4.0) * _S_STAR**2


def contact_area(rho_hat: float, rho_hat0: float) -> float:
    """Normalized inter-particle contact area, zero at the loose state."""
    if not 0.0 < rho_hat0 < 1.0:
        raise DomainError(f"rho_hat0={rho_hat0!r} must lie in (0, 1)")
    A = (4.0 * PI / 12.0) * (rho_hat - rho_hat0) / (1.0 - rho_hat0)
    return max(A, 0.0)


def cohesion(rho_hat: float, rho_hat0: float, sigma_m: float) -> float:
    return sigma_m * contact_area(rho_hat, rho_hat0)


def friction_M(p_c: float, c: float, A_c: float, sigma_m: float, m: float,
               alpha: float, M_floor: float = 0.1) -> float:
    """BP pressure-sensitivity ``M`` fixing the pure-shear strength at ``sigma_m A_c``.

    The closed form is 0/0 at ``c = 0``; there and wherever it falls below
    ``M_floor`` the floor is returned.
    """
    if p_c + c <= 0.0:
        raise DegenerateSurfaceError(f"p_c + c = {p_c + c:g} <= 0")
    if c <= 0.0:
        return M_floor
    phi = c / (p_c + c)
    root = math.sqrt((phi - phi**m) * (2.0 * (1.0 - alpha) * phi + alpha))
    if root <= 0.0:
        return M_floor
    M = SQRT3 * sigma_m * A_c / (p_c * 2.0 * root)
    return max(M, M_floor)


def hardening_bundle(rho_hat: float, T: float, params, f_T: float | None = None) -> HardeningState:
    """Thermally softened ``p_c``, ``c`` and the temperature-free ``M`` at one state.

    ``params`` is a ``MaterialParams``; ``f_T`` defaults to its softening
    law at ``T`` (degrees C). ``M`` is built from the unsoftened strengths.
    """
    if f_T is None:
        from .matmodel import thermal_softening
        f_T = thermal_softening(T, params)
    sm = params.sigma_m
    pc_raw = max(compaction_pressure_mla(rho_hat, sm), params.p_c_floor)
    A_c = contact_area(rho_hat, params.rho_hat0)
    c_raw = sm * A_c
    M = friction_M(pc_raw, c_raw, A_c, sm, params.m_bp, params.alpha_bp, params.M_floor)
    p_c = max(f_T * compaction_pressure_mla(rho_hat, sm), params.p_c_floor)
    return HardeningState(p_c=p_c, c=f_T * c_raw, M=M, A_c=A_c)
