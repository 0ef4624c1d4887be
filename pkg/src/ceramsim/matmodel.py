"""Thermo-elastic-visco-plastic powder model: parameters, state and response functions.

Units: stress in MPa, temperature in degrees C (converted to kelvin only
inside Arrhenius factors), lengths in m, time in s.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import tensorlab as tl
from .micromech import HardeningState

KELVIN = 273.15
SINTER_PREFACTOR = (8.0 * math.pi / 3.0) * (3.0 / (4.0 * math.pi)) ** (2.0 / 3.0)
RHO_SATURATION = 1.0 - 1e-9


class ParameterError(ValueError):
    """A material parameter violates its admissible range."""


class DegenerateDirectionError(ArithmeticError):
    """The yield-function gradient vanished, so no flow direction exists."""


@dataclass(frozen=True)
class MaterialParams:
    """Material constants. Defaults are the calibrated stoneware powder values.

    ``nu``, ``alpha0``, ``c_h`` and ``k_th`` are not calibrated values; they
    are placeholders that can be overridden from a config file.
    """

    # elasticity and thermal expansion
    E: float = 5000.0
    nu: float = 0.3
    alpha0: float = 6e-6
    T0: float = 20.0
    # BP yield surface
    sigma_m: float = 150.0
    m_bp: float = 4.38
    alpha_bp: float = 1.0
    beta_bp: float = 0.0
    gamma_bp: float = 0.0
    # powder and sintering
    rho_hat0: float = 0.38
    rho_fd: float = 2.375
    R0: float = 11.24e-6
    gamma_s: float = 1.10
    gamma_b: float = 1.10
    M_gc0: float = 2.25
    Q_gc: float = 354e3
    Q_E: float = 354e3
    R_g: float = 8.314
    eta_v1: float = 1e-8
    w: float = 3.0
    # thermal softening
    T_C1: float = 800.0
    C_T: float = 1e-4
    b1: float = 0.9
    zeta: float = 2.7
    chi: float = 0.0
    # heat conduction
    c_h: float = 900.0
    k_th: float = 1.5
    # regularization
    p_c_floor: float = 1e-3
    M_floor: float = 0.1
    q_eps_rel: float = 1e-10
    yield_delta: float = 1e-6

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.E > 0.0:
            raise ParameterError(f"E={self.E!r} must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ParameterError(f"nu={self.nu!r} must lie in (-1, 0.5)")
        if not 0.0 < self.rho_hat0 < 1.0:
            raise ParameterError(f"rho_hat0={self.rho_hat0!r} must lie in (0, 1)")
        if self.chi != 0.0:
            raise ParameterError("chi must be 0: plastic heating is not modelled")
        if not 0.0 < self.yield_delta < 0.5:
            raise ParameterError(f"yield_delta={self.yield_delta!r} must lie in (0, 0.5)")
        if not -1.0 < self.gamma_bp < 1.0:
            raise ParameterError(f"gamma_bp={self.gamma_bp!r} must lie in (-1, 1)")
        if not 0.0 < self.alpha_bp <= 2.0:
            raise ParameterError(f"alpha_bp={self.alpha_bp!r} must lie in (0, 2]")
        if not self.m_bp > 1.0:
            raise ParameterError(f"m_bp={self.m_bp!r} must exceed 1")
        positive = ("sigma_m", "rho_fd", "R0", "gamma_s", "gamma_b", "M_gc0", "R_g",
                    "eta_v1", "T_C1", "c_h", "k_th", "p_c_floor", "M_floor", "zeta",
                    "q_eps_rel")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name}={getattr(self, name)!r} must be positive")
        nonneg = ("alpha0", "C_T", "b1", "Q_gc", "Q_E", "w")
        for name in nonneg:
            if not getattr(self, name) >= 0.0:
                raise ParameterError(f"{name}={getattr(self, name)!r} must be non-negative")

    @property
    def lambda_e(self) -> float:
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def mu_e(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def K_b(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def q_eps(self) -> float:
        return self.q_eps_rel * self.sigma_m

    def replace(self, **changes) -> "MaterialParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]


@dataclass
class MaterialState:
    """Evolving state of one material point."""

    eps_e: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    eps_p: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    rho_hat: float = 0.38
    R_grain: float = 11.24e-6
    T: float = 20.0
    # accumulated R^2 - R0^2 (m^2); stays resolvable while R itself rounds to R0
    R2_growth: float = 0.0

    @classmethod
    def initial(cls, params: MaterialParams, T: float | None = None) -> "MaterialState":
        return cls(rho_hat=params.rho_hat0, R_grain=params.R0,
                   T=params.T0 if T is None else T)

    @property
    def eps(self) -> np.ndarray:
        return self.eps_e + self.eps_p

    def copy(self) -> "MaterialState":
        return MaterialState(self.eps_e.copy(), self.eps_p.copy(), self.rho_hat,
                             self.R_grain, self.T, self.R2_growth)


def elastic_stress(eps_e, T: float, params: MaterialParams) -> np.ndarray:
    lam, mu = params.lambda_e, params.mu_e
    tr = tl.trace(eps_e)
    return (lam * tr - params.K_b * params.alpha0 * (T - params.T0)) * tl.I3 + 2.0 * mu * eps_e


def elastic_potential(eps_e, T: float, params: MaterialParams) -> float:
    """Stored elastic energy per unit volume (MPa); its strain gradient is the stress."""
    tr = tl.trace(eps_e)
    return (0.5 * params.lambda_e * tr**2 + params.mu_e * tl.ddot(eps_e, eps_e)
            - params.K_b * params.alpha0 * (T - params.T0) * tr)


def elastic_strain_from_stress(sigma, T: float, params: MaterialParams) -> np.ndarray:
    """Invert ``elastic_stress`` for the elastic strain."""
    mu, K = params.mu_e, params.K_b
    p_term = (tl.trace(sigma) / 3.0 + K * params.alpha0 * (T - params.T0)) / (3.0 * K)
    return p_term * tl.I3 + tl.dev(sigma) / (2.0 * mu)


@dataclass(frozen=True)
class PoreEnergy:
    psi_pore: float
    sigma_s: float
    saturated: bool = False


def pore_energy(rho_hat: float, params: MaterialParams, R_grain: float | None = None) -> PoreEnergy:
    """Pore surface energy (J/kg) and its conjugate sintering stress (MPa).

    The solid length scale is the current particle diameter ``2 R_grain``.
    Densities at or above ``1 - 1e-9`` are capped there and flagged.
    """
    R = params.R0 if R_grain is None else R_grain
    length = 2.0 * R
    saturated = rho_hat >= RHO_SATURATION
    rho = min(max(rho_hat, 0.0), RHO_SATURATION)
    x = rho / (1.0 - rho)
    sigma_s = SINTER_PREFACTOR * params.gamma_s / length * x ** (1.0 / 3.0) * 1e-6
    if rho > 0.0:
        psi = (params.gamma_s / (params.rho_fd * 1e3 * length) * 4.0 * math.pi
               * (3.0 / (4.0 * math.pi * x)) ** (2.0 / 3.0))
    else:
        psi = math.inf
    return PoreEnergy(psi_pore=psi, sigma_s=sigma_s, saturated=saturated)


def sintering_stress(rho_hat: float, params: MaterialParams, R_grain: float | None = None) -> float:
    return pore_energy(rho_hat, params, R_grain).sigma_s


def effective_stress(sigma, rho_hat: float, params: MaterialParams,
                     R_grain: float | None = None) -> np.ndarray:
    return sigma - sintering_stress(rho_hat, params, R_grain) * tl.I3


# -- BP yield function ------------------------------------------------------

def _meridian_G(phi: float, m: float, alpha: float) -> tuple[float, float, float]:
    a = phi - phi**m
    b = 2.0 * (1.0 - alpha) * phi + alpha
    da = 1.0 - m * phi ** (m - 1.0)
    d2a = -m * (m - 1.0) * phi ** (m - 2.0)
    db = 2.0 * (1.0 - alpha)
    return a * b, da * b + a * db, d2a * b + 2.0 * da * db


def meridian_F(phi: float, hard: HardeningState, params: MaterialParams) -> tuple[float, float, float]:
    """Pressure part ``F`` of the yield function with its first two ``phi`` derivatives.

    Exact on ``[delta, 1 - delta]``; outside, the tangent line at the nearest
    clamp point, so values and slopes stay finite beyond the cap and apex.
    """
    d = params.yield_delta
    phi_c = min(max(phi, d), 1.0 - d)
    G, dG, d2G = _meridian_G(phi_c, params.m_bp, params.alpha_bp)
    scale = -hard.M * hard.p_c
    root = math.sqrt(G)
    F = scale * root
    dF = scale * 0.5 * dG / root
    if phi_c != phi:
        return F + dF * (phi - phi_c), dF, 0.0
    d2F = scale * (0.5 * d2G / root - 0.25 * dG * dG / (G * root))
    return F, dF, d2F


def meridian_q(p: float, hard: HardeningState, params: MaterialParams, xi: float = -1.0) -> float:
    """Boundary ``q`` of the exact (unextended) surface at pressure ``p``.

    ``xi = cos(3 theta_c)`` selects the meridian (compression by default).
    Returns ``nan`` for ``p`` outside ``[-c, p_c]``.
    """
    phi = (p + hard.c) / (hard.p_c + hard.c)
    if phi < 0.0 or phi > 1.0:
        return math.nan
    G = _meridian_G(phi, params.m_bp, params.alpha_bp)[0]
    return hard.M * hard.p_c * math.sqrt(max(G, 0.0)) / deviatoric_shape(xi, params)


def deviatoric_shape(xi: float, params: MaterialParams) -> float:
    """``g`` as a function of ``xi = cos(3 theta_c)``."""
    return math.cos(params.beta_bp * math.pi / 6.0 - math.acos(params.gamma_bp * xi) / 3.0)


def _dshape_dxi(xi: float, params: MaterialParams) -> float:
    gam = params.gamma_bp
    if gam == 0.0:
        return 0.0
    arg = params.beta_bp * math.pi / 6.0 - math.acos(gam * xi) / 3.0
    return -math.sin(arg) * gam / (3.0 * math.sqrt(1.0 - (gam * xi) ** 2))


def bp_yield(sigma_hat, hard: HardeningState, params: MaterialParams) -> float:
    """BP yield value (MPa) of an effective stress; negative inside the surface."""
    inv = tl.stress_invariants(sigma_hat, params.q_eps)
    phi = (inv.p + hard.c) / (hard.p_c + hard.c)
    F = meridian_F(phi, hard, params)[0]
    return F + inv.q * deviatoric_shape(inv.lode_arg, params)


def bp_yield_raw_gradient(sigma_hat, hard: HardeningState, params: MaterialParams):
    """Yield value and ``d(yield)/d(sigma_hat)`` as a symmetric tensor.

    When ``q <= q_eps`` the deviatoric part is dropped.
    """
    sigma_hat = tl.sym(sigma_hat)
    p = -tl.trace(sigma_hat) / 3.0
    s = tl.dev(sigma_hat)
    q = math.sqrt(1.5 * float(np.tensordot(s, s)))
    width = hard.p_c + hard.c
    phi = (p + hard.c) / width
    F, dF, _ = meridian_F(phi, hard, params)
    grad = -(dF / width / 3.0) * tl.I3
    if q <= params.q_eps:
        return F + q * deviatoric_shape(0.0, params), grad
    s2 = s @ s
    t3 = float(np.trace(s2 @ s))
    xi = min(max(4.5 * t3 / q**3, -1.0), 1.0)
    g = deviatoric_shape(xi, params)
    grad = grad + g * 1.5 * s / q
    dg = _dshape_dxi(xi, params)
    if dg != 0.0:
        dxi = 13.5 * (tl.dev(s2) / q**3 - 1.5 * t3 * s / q**5)
        grad = grad + q * dg * dxi
    return F + q * g, grad


def bp_yield_gradient(sigma_hat, hard: HardeningState, params: MaterialParams) -> np.ndarray:
    """Unit (Frobenius) normal to the yield surface, the associative flow direction."""
    _, grad = bp_yield_raw_gradient(sigma_hat, hard, params)
    n = tl.norm(grad)
    if not n > 0.0 or not math.isfinite(n):
        raise DegenerateDirectionError("yield-function gradient vanished")
    return grad / n


# -- temperature-dependent laws --------------------------------------------

def thermal_softening(T: float, params: MaterialParams) -> float:
    base = max(1.0 - T / params.T_C1, 0.0)
    return base**params.b1 + params.C_T


def viscosity(T: float, R_grain: float, params: MaterialParams) -> float:
    """Perzyna viscosity (MPa s), Arrhenius in absolute temperature."""
    TK = T + KELVIN
    if TK <= 0.0:
        raise ParameterError(f"temperature {T} C is below absolute zero")
    return params.eta_v1 * (R_grain / params.R0) ** params.w * math.exp(params.Q_E / (params.R_g * TK))


def grain_mobility(T: float, params: MaterialParams) -> float:
    return params.M_gc0 * math.exp(-params.Q_gc / (params.R_g * (T + KELVIN)))


def grain_growth_rate(R_grain: float, T: float, params: MaterialParams) -> float:
    return params.gamma_b * grain_mobility(T, params) / (4.0 * R_grain)


def grain_growth_increment(T: float, dt: float, params: MaterialParams) -> float:
    """Increase of ``R^2`` over ``dt`` at constant ``T``."""
    if dt < 0.0:
        raise ValueError(f"dt={dt!r} must be non-negative")
    return 0.5 * params.gamma_b * grain_mobility(T, params) * dt


def grain_growth_step(R_grain: float, T: float, dt: float, params: MaterialParams) -> float:
    """Exact constant-temperature update of ``dR/dt = gamma_b M_gc / (4 R)``."""
    return math.sqrt(R_grain**2 + grain_growth_increment(T, dt, params))


def density_from_plastic_strain(eps_p, params: MaterialParams, eps_e=None) -> tuple[float, float]:
    """Relative density after unloading and the porosity.

    With ``eps_e`` the porosity refers to the current (loaded) volume,
    otherwise to the unloaded one.
    """
    rho_hat = params.rho_hat0 * math.exp(-tl.trace(eps_p))
    if eps_e is None:
        return rho_hat, 1.0 - rho_hat
    return rho_hat, 1.0 - rho_hat * math.exp(-tl.trace(eps_e))


def hardening(rho_hat: float, T: float, params: MaterialParams) -> HardeningState:
    from .micromech import hardening_bundle
    return hardening_bundle(rho_hat, T, params)
