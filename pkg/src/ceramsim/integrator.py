"""Perzyna return mapping and material-point drivers.

A step takes either a total strain increment (strain control) or a target
stress (stress control) plus the end-of-step temperature. The elastic
predictor is corrected by solving, fully implicitly,

    d_eps_p = d_lambda * Q(sigma_hat),   F(sigma_hat) = eta * d_lambda / dt

where ``F`` is the BP yield value at the updated density, ``Q`` its unit
normal and ``eta`` the viscosity at the end-of-step temperature and grain
size. ``eta -> 0`` recovers the rate-independent consistency condition.

With a Lode-independent deviatoric shape (``gamma_bp == 0``) the deviatoric
flow direction is fixed by the trial stress, and the tensor problem reduces
to three scalars (volumetric and deviatoric plastic strain and the
multiplier). Otherwise the full tensor residual is solved.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import matmodel as mm
from . import tensorlab as tl
from .micromech import HardeningState, hardening_bundle

log = logging.getLogger(__name__)

RHO_MAX = 1.0 - 1e-12
# dilation below this relative density is treated as a numerical failure
RHO_MIN = 1e-6
# trial yield values below this (times sigma_m) are round-off of a converged
# previous step and are treated as elastic
ELASTIC_TOL = 1e-12
# the consistency residual is normalized by |F_trial| but never by less than
# this (times sigma_m), since F itself carries ~1e-15 sigma_m of round-off
YIELD_SCALE_FLOOR = 1e-4
SQRT3 = math.sqrt(3.0)
SQRT6 = math.sqrt(6.0)
SQRT32 = math.sqrt(1.5)


class NonConvergenceError(RuntimeError):
    """Local or outer iterations failed even after substepping."""

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class IntegratorSettings:
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    substep_max_levels: int = 20
    dt_initial: float | None = None
    # constant viscosity replacing the Arrhenius law (rate-independent pressing)
    viscosity_override: float | None = None
    # pressing at room temperature runs without the pore-surface driving stress
    sintering_active: bool = True
    stress_tol_rel: float = 1e-8
    outer_max_iter: int = 30

    def __post_init__(self):
        if not self.newton_tol > 0.0:
            raise ValueError("newton_tol must be positive")
        if self.newton_max_iter < 1 or self.substep_max_levels < 0:
            raise ValueError("iteration limits must be positive")


@dataclass
class StepResult:
    state: mm.MaterialState
    sigma: np.ndarray
    yield_value: float
    dlambda: float
    dissipation: float
    converged: bool = True
    substeps_used: int = 1
    d_eps_p: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    sigma_hat: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    vertex: bool = False
    saturated: bool = False


@dataclass
class _Context:
    params: mm.MaterialParams
    settings: IntegratorSettings
    T: float
    R: float
    eta: float
    dt: float
    f_T: float
    dR2: float = 0.0

    def hardening(self, rho: float) -> HardeningState:
        return hardening_bundle(min(rho, RHO_MAX), self.T, self.params, f_T=self.f_T)

    def sigma_s(self, rho: float) -> tuple[float, float]:
        """Sintering stress and its density derivative."""
        if not self.settings.sintering_active:
            return 0.0, 0.0
        s = mm.sintering_stress(rho, self.params, self.R)
        if rho >= mm.RHO_SATURATION:
            return s, 0.0
        return s, s / (3.0 * rho * (1.0 - rho))


def _end_of_step_context(state: mm.MaterialState, T_new: float, dt: float,
                         params: mm.MaterialParams, settings: IntegratorSettings) -> _Context:
    dR2 = mm.grain_growth_increment(0.5 * (state.T + T_new), dt, params)
    R_new = math.sqrt(state.R_grain**2 + dR2)
    if settings.viscosity_override is not None:
        eta = settings.viscosity_override
    else:
        eta = mm.viscosity(T_new, R_new, params)
    return _Context(params, settings, T_new, R_new, eta, dt, mm.thermal_softening(T_new, params),
                    dR2)


# -- reduced (p, q) return -------------------------------------------------

class _PQProblem:
    """Scalar residual in (volumetric, deviatoric, multiplier) increments."""

    def __init__(self, ctx: _Context, rho_n: float, p0: float, q0: float,
                 strain_mode: bool, has_dev: bool):
        self.ctx = ctx
        self.rho_n = rho_n
        self.p0, self.q0 = p0, q0
        P = ctx.params
        self.K = P.K_b if strain_mode else 0.0
        self.G3 = SQRT6 * P.mu_e if strain_mode else 0.0
        self.g0 = mm.deviatoric_shape(0.0, P)
        self.b = self.g0 * SQRT32 if has_dev else 0.0

    def state(self, x):
        dv, dd, _ = x
        rho = self.rho_n * math.exp(-dv)
        s, ds = self.ctx.sigma_s(rho)
        return rho, self.p0 + self.K * dv + s, self.q0 - self.G3 * dd, ds

    def surface(self, p_hat: float, q: float, rho: float):
        """Yield value and volumetric gradient coefficient, with p_hat partials."""
        hard = self.ctx.hardening(rho)
        w = hard.p_c + hard.c
        F, dF, d2F = mm.meridian_F((p_hat + hard.c) / w, hard, self.ctx.params)
        return F + q * self.g0, -dF / (3.0 * w), dF / w, -d2F / (3.0 * w * w)

    def residual(self, x, scale: float):
        dv, dd, dl = x
        rho, p_hat, q, _ = self.state(x)
        yv, a, _, _ = self.surface(p_hat, q, rho)
        nrm = math.sqrt(3.0 * a * a + self.b * self.b)
        return np.array([dv - 3.0 * a * dl / nrm, dd - self.b * dl / nrm,
                         (yv - self.ctx.eta * dl / self.ctx.dt) / scale])

    def jacobian(self, x, scale: float):
        dv, dd, dl = x
        rho, p_hat, q, ds = self.state(x)
        yv, a, yv_p, a_p = self.surface(p_hat, q, rho)
        h = 1e-7 * rho
        lo, hi = rho - h, min(rho + h, RHO_MAX)
        y_hi, a_hi, _, _ = self.surface(p_hat, q, hi)
        y_lo, a_lo, _, _ = self.surface(p_hat, q, lo)
        yv_r = (y_hi - y_lo) / (hi - lo)
        a_r = (a_hi - a_lo) / (hi - lo)
        # d/d(dv) through p_hat (elastic relaxation and sintering stress) and rho
        dp_dv = self.K - ds * rho
        yv_v = yv_p * dp_dv - yv_r * rho
        a_v = a_p * dp_dv - a_r * rho
        b = self.b
        nrm = math.sqrt(3.0 * a * a + b * b)
        n3 = nrm**3
        J = np.zeros((3, 3))
        J[0, 0] = 1.0 - 3.0 * dl * b * b / n3 * a_v
        J[0, 2] = -3.0 * a / nrm
        J[1, 0] = 3.0 * a * b * dl / n3 * a_v
        J[1, 1] = 1.0
        J[1, 2] = -b / nrm
        J[2, 0] = yv_v / scale
        J[2, 1] = -self.g0 * self.G3 / scale
        J[2, 2] = -self.ctx.eta / self.ctx.dt / scale
        return J


def _newton(residual, jacobian, x0, tol: float, max_iter: int, conv):
    x = np.array(x0, dtype=float)
    r = residual(x)
    trace = []
    for it in range(max_iter):
        if not np.all(np.isfinite(r)):
            raise NonConvergenceError("non-finite residual", trace)
        if conv(x, r):
            return x, it, trace
        J = jacobian(x)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError(f"singular local Jacobian: {exc}", trace) from exc
        r0 = float(np.linalg.norm(r))
        step = 1.0
        for _ in range(30):
            x_try = x + step * dx
            try:
                r_try = residual(x_try)
            except (ArithmeticError, ValueError):
                r_try = None
            if r_try is not None and np.all(np.isfinite(r_try)) and \
                    np.linalg.norm(r_try) <= (1.0 - 1e-4 * step) * r0:
                break
            step *= 0.5
        else:
            if r_try is None or not np.all(np.isfinite(r_try)):
                raise NonConvergenceError("line search failed", trace)
        x, r = x_try, r_try
        trace.append((it, r0, step))
    if conv(x, r):
        return x, max_iter, trace
    raise NonConvergenceError(f"local Newton did not converge in {max_iter} iterations "
                              f"(|r|={np.linalg.norm(r):.3e})", trace)


def _multiplier_scale(ctx: _Context, scale: float) -> float:
    """Typical size of the plastic multiplier, between the viscous and elastic limits."""
    return 1.0 / (ctx.params.E / scale + ctx.eta / (ctx.dt * scale))


def _solve_pq(prob: _PQProblem, yv_trial: float, tol: float, max_iter: int):
    P = prob.ctx.params
    scale = min(P.sigma_m, max(abs(yv_trial), YIELD_SCALE_FLOOR * P.sigma_m))
    # unknowns are divided by L and kinematic residuals likewise, so that
    # the Jacobian stays O(1) from near rate-independent to very viscous flow
    L = _multiplier_scale(prob.ctx, scale)
    D = np.array([1.0 / L, 1.0 / L, 1.0])

    def conv(xs, r):
        size = max(abs(xs[0]), abs(xs[1]), abs(xs[2]), 1e-20)
        return abs(r[0]) <= tol * size and abs(r[1]) <= tol * size and abs(r[2]) <= tol

    xs, it, trace = _newton(lambda xs: D * prob.residual(xs * L, scale),
                            lambda xs: D[:, None] * prob.jacobian(xs * L, scale) * L,
                            [0.0, 0.0, 0.0], tol, max_iter, conv)
    x = xs * L
    if x[2] < -1e-14 * L:
        raise NonConvergenceError(f"negative plastic multiplier {x[2]:.3e}", trace)
    return x, it


def _march(fun, sign: float, start: float, end: float, ratio: float):
    """First ``s`` in ``start * ratio**k`` (clipped to ``end``) with ``fun(sign * s) < 0``.

    Returns ``(previous, s)`` or ``None`` if ``fun`` stays non-negative up to ``end``.
    """
    prev, step = 0.0, min(start, end)
    while True:
        if fun(sign * step) < 0.0:
            return prev, step
        if step >= end:
            return None
        prev, step = step, min(step * ratio, end)


def _solve_hydrostatic(prob: _PQProblem, yv_trial: float, max_iter: int, dd: float = 0.0):
    """Volumetric return: root of ``F(dv) - eta dl / dt`` nearest ``dv = 0``.

    ``dd`` is a fixed deviatoric increment (nonzero for the return to the
    meridian tip, where the deviatoric trial stress is removed entirely) and
    ``dl = sqrt(dv^2 / 3 + dd^2)``.

    The residual is positive at the trial state and is not monotone further
    out: it turns positive again past the tensile end of the meridian, and
    near full density where the pore stress diverges. The march is therefore
    bounded by the point where ``p_hat`` crosses the meridian end it moves
    towards (``p_c`` in compaction, ``-c`` in dilation), where ``F <= 0`` holds.
    If neither a root nor that crossing occurs before ``RHO_SATURATION``, the
    step ends at full density and is flagged as saturated.
    """
    from scipy.optimize import brentq

    ctx = prob.ctx

    def f(dv):
        rho, p_hat, _, _ = prob.state((dv, dd, 0.0))
        yv = prob.surface(p_hat, 0.0, rho)[0]
        return yv - ctx.eta * math.hypot(dv / SQRT3, dd) / ctx.dt

    def out(dv, saturated=False):
        return np.array([dv, dd, math.hypot(dv / SQRT3, dd)]), saturated

    def past_end(dv):
        # negative once p_hat has moved beyond the meridian end
        rho, p_hat, _, _ = prob.state((dv, 0.0, 0.0))
        hard = ctx.hardening(rho)
        return p_hat - hard.p_c if sign < 0.0 else -(p_hat + hard.c)

    rho0, p_hat0, _, _ = prob.state((0.0, 0.0, 0.0))
    a0 = prob.surface(p_hat0, 0.0, rho0)[1]
    if a0 == 0.0:
        raise mm.DegenerateDirectionError("volumetric flow direction vanished")
    sign = -1.0 if a0 < 0.0 else 1.0
    if sign < 0.0:
        if prob.rho_n >= mm.RHO_SATURATION:
            return out(0.0, True)
        limit = -math.log(prob.rho_n / mm.RHO_SATURATION)
    else:
        limit = math.log(prob.rho_n / RHO_MIN)

    if f(0.0) <= 0.0 or past_end(0.0) <= 0.0:
        # nothing left to flow volumetrically (for dd = 0: only the dropped
        # sub-threshold deviatoric part made the trial plastic)
        return out(0.0)
    start = 1e-3 * SQRT3 * _multiplier_scale(ctx, max(yv_trial, 1e-300))
    end = limit
    hit = _march(past_end, sign, start, limit, 2.0)
    if hit is not None:
        lo, hi = hit
        end = brentq(lambda s: past_end(sign * s), lo, hi, xtol=1e-300,
                     rtol=4 * np.finfo(float).eps, maxiter=max_iter * 4)
    hit = _march(f, sign, min(start, end), end, 2.0)
    if hit is None and end < limit:
        # round-off left F marginally positive at the crossing: take the crossing
        hit = (0.0, end) if f(sign * end) <= abs(yv_trial) * 1e-12 else None
        if hit is not None:
            return out(sign * end)
    if hit is None:
        if sign < 0.0:
            return out(-limit, True)
        raise NonConvergenceError("volumetric return: no root before the dilation bound")
    lo, hi = hit
    s_root = brentq(lambda s: f(sign * s), lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                    maxiter=max_iter * 4)
    return out(sign * s_root)


# -- general tensor return (Lode-dependent deviatoric shape) ----------------

def _solve_tensor(ctx: _Context, rho_n: float, sigma_of, yv_trial: float, tol: float,
                  max_iter: int):
    P = ctx.params
    scale = min(P.sigma_m, max(abs(yv_trial), YIELD_SCALE_FLOOR * P.sigma_m))

    def unpack(x):
        deps = tl.from_voigt(x[:6])
        rho = rho_n * math.exp(-tl.trace(deps))
        s, _ = ctx.sigma_s(rho)
        sig_hat = sigma_of(deps) - s * tl.I3
        return deps, rho, sig_hat

    def residual(x):
        deps, rho, sig_hat = unpack(x)
        hard = ctx.hardening(rho)
        yv, grad = mm.bp_yield_raw_gradient(sig_hat, hard, P)
        Q = grad / tl.norm(grad)
        r = x[:6] - x[6] * tl.to_voigt(Q)
        return np.append(r, (yv - ctx.eta * x[6] / ctx.dt) / scale)

    def jacobian(x):
        size = max(np.max(np.abs(x)), 1e-12 * _multiplier_scale(ctx, scale))
        J = np.empty((7, 7))
        for j in range(7):
            h = 1e-7 * max(abs(x[j]), size)
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (residual(xp) - residual(xm)) / (2.0 * h)
        return J

    def conv(xs, r):
        size = max(np.max(np.abs(xs)), 1e-20)
        return np.all(np.abs(r[:6]) <= tol * size) and abs(r[6]) <= tol

    L = _multiplier_scale(ctx, scale)
    D = np.append(np.full(6, 1.0 / L), 1.0)
    xs, it, trace = _newton(lambda xs: D * residual(xs * L),
                            lambda xs: D[:, None] * jacobian(xs * L) * L,
                            np.zeros(7), tol, max_iter, conv)
    x = xs * L
    if x[6] < -1e-14 * L:
        raise NonConvergenceError(f"negative plastic multiplier {x[6]:.3e}", trace)
    return tl.from_voigt(x[:6]), x[6], it


# -- single step -----------------------------------------------------------

def _local_step(state: mm.MaterialState, d_eps, sigma_target, T_new: float, dt: float,
                params: mm.MaterialParams, settings: IntegratorSettings) -> StepResult:
    """One implicit step without substepping; exactly one of d_eps/sigma_target is given."""
    ctx = _end_of_step_context(state, T_new, dt, params, settings)
    strain_mode = sigma_target is None
    if strain_mode:
        eps_e_tr = state.eps_e + tl.sym(d_eps)
        sigma_tr = mm.elastic_stress(eps_e_tr, T_new, params)
    else:
        sigma_tr = tl.sym(sigma_target)
        eps_e_tr = mm.elastic_strain_from_stress(sigma_tr, T_new, params)

    rho_n = state.rho_hat
    s_n, _ = ctx.sigma_s(rho_n)
    sig_hat_tr = sigma_tr - s_n * tl.I3
    hard_n = ctx.hardening(rho_n)
    yv_tr = mm.bp_yield(sig_hat_tr, hard_n, params)

    new = mm.MaterialState(eps_e_tr.copy(), state.eps_p.copy(), rho_n, ctx.R, T_new,
                           state.R2_growth + ctx.dR2)
    if yv_tr <= ELASTIC_TOL * params.sigma_m:
        return StepResult(new, sigma_tr, yv_tr, 0.0, 0.0, sigma_hat=sig_hat_tr)

    tol, maxit = settings.newton_tol, settings.newton_max_iter
    vertex = saturated = False
    if params.gamma_bp == 0.0:
        s_tr = tl.dev(sigma_tr)
        q_tr = SQRT32 * tl.norm(s_tr)
        has_dev = q_tr > params.q_eps
        n = s_tr / tl.norm(s_tr) if has_dev else np.zeros((3, 3))
        p_tr = -tl.trace(sigma_tr) / 3.0
        prob = _PQProblem(ctx, rho_n, p_tr, q_tr if has_dev else 0.0, strain_mode, has_dev)
        if has_dev:
            x, _ = _solve_pq(prob, yv_tr, tol, maxit)
        else:
            x, saturated = _solve_hydrostatic(prob, yv_tr, maxit)
        if strain_mode and has_dev and prob.q0 - prob.G3 * x[1] < -params.q_eps:
            x, saturated = _solve_hydrostatic(prob, yv_tr, maxit, dd=prob.q0 / prob.G3)
            vertex = True
        dv, dd, dl = x
        d_eps_p = dv / 3.0 * tl.I3 + dd * n
    else:
        if strain_mode:
            def sigma_of(deps):
                return mm.elastic_stress(eps_e_tr - deps, T_new, params)
        else:
            def sigma_of(deps):
                return sigma_tr
        d_eps_p, dl, _ = _solve_tensor(ctx, rho_n, sigma_of, yv_tr, tol, maxit)

    rho = rho_n * math.exp(-tl.trace(d_eps_p))
    eps_e = eps_e_tr - d_eps_p if strain_mode else eps_e_tr
    sigma = mm.elastic_stress(eps_e, T_new, params) if strain_mode else sigma_tr
    s_new, _ = ctx.sigma_s(rho)
    sig_hat = sigma - s_new * tl.I3
    hard = ctx.hardening(rho)
    yv = mm.bp_yield(sig_hat, hard, params)
    new = mm.MaterialState(eps_e, state.eps_p + d_eps_p, rho, ctx.R, T_new,
                           state.R2_growth + ctx.dR2)
    return StepResult(new, sigma, yv, float(dl), tl.ddot(sig_hat, d_eps_p),
                      d_eps_p=d_eps_p, sigma_hat=sig_hat, vertex=vertex, saturated=saturated)


def _merge(first: StepResult, second: StepResult) -> StepResult:
    return replace(second, dlambda=first.dlambda + second.dlambda,
                   dissipation=first.dissipation + second.dissipation,
                   substeps_used=first.substeps_used + second.substeps_used,
                   d_eps_p=first.d_eps_p + second.d_eps_p,
                   vertex=first.vertex or second.vertex,
                   saturated=first.saturated or second.saturated)


def _substepped(state, d_eps, sigma_target, T_new, dt, params, settings, level=0) -> StepResult:
    try:
        return _local_step(state, d_eps, sigma_target, T_new, dt, params, settings)
    except (NonConvergenceError, ArithmeticError, ValueError) as exc:
        if level >= settings.substep_max_levels:
            trace = getattr(exc, "trace", [])
            raise NonConvergenceError(
                f"step failed after {level} bisections at T={T_new:.6g} C, dt={dt:.3e} s: {exc}",
                trace) from exc
        log.debug("bisecting step (level %d): %s", level + 1, exc)
    T_mid = 0.5 * (state.T + T_new)
    if d_eps is not None:
        half = 0.5 * tl.sym(d_eps)
        a = _substepped(state, half, None, T_mid, 0.5 * dt, params, settings, level + 1)
        b = _substepped(a.state, half, None, T_new, 0.5 * dt, params, settings, level + 1)
    else:
        sigma_n = mm.elastic_stress(state.eps_e, state.T, params)
        mid = 0.5 * (sigma_n + tl.sym(sigma_target))
        a = _substepped(state, None, mid, T_mid, 0.5 * dt, params, settings, level + 1)
        b = _substepped(a.state, None, sigma_target, T_new, 0.5 * dt, params, settings, level + 1)
    return _merge(a, b)


def return_map_step(state: mm.MaterialState, strain_increment, T_new: float, dt: float,
                    params: mm.MaterialParams, settings: IntegratorSettings | None = None
                    ) -> StepResult:
    """Advance one material point by a total log-strain increment over ``dt`` seconds.

    Raises
    ------
    NonConvergenceError
        If the local Newton iterations fail even after recursive bisection of
        the step into up to ``2**substep_max_levels`` pieces.
    """
    if not dt > 0.0:
        raise ValueError(f"dt={dt!r} must be positive")
    settings = settings or IntegratorSettings()
    return _substepped(state, np.asarray(strain_increment, float), None, T_new, dt,
                       params, settings)


def stress_step(state: mm.MaterialState, sigma_target, T_new: float, dt: float,
                params: mm.MaterialParams, settings: IntegratorSettings | None = None
                ) -> StepResult:
    """Advance one material point to a prescribed end-of-step stress tensor."""
    if not dt > 0.0:
        raise ValueError(f"dt={dt!r} must be positive")
    settings = settings or IntegratorSettings()
    return _substepped(state, None, np.asarray(sigma_target, float), T_new, dt, params, settings)


def consistent_tangent(state: mm.MaterialState, strain_increment, T_new: float, dt: float,
                       params: mm.MaterialParams, settings: IntegratorSettings | None = None,
                       h: float = 1e-8) -> np.ndarray:
    """Algorithmic tangent ``d sigma / d eps`` (6x6, Voigt tensor components).

    Central differences of the converged step map.
    """
    settings = settings or IntegratorSettings()
    base = tl.to_voigt(tl.sym(strain_increment))
    D = np.empty((6, 6))
    for j in range(6):
        e = np.zeros(6)
        e[j] = h
        sp = return_map_step(state, tl.from_voigt(base + e), T_new, dt, params, settings).sigma
        sm = return_map_step(state, tl.from_voigt(base - e), T_new, dt, params, settings).sigma
        D[:, j] = (tl.to_voigt(sp) - tl.to_voigt(sm)) / (2.0 * h)
    return D


# -- load programs ---------------------------------------------------------

@dataclass(frozen=True)
class ConstantTemperature:
    T: float

    def __call__(self, t: float, T_start: float) -> float:
        return self.T


@dataclass(frozen=True)
class LinearRamp:
    """Heating (or cooling) at ``rate`` degrees C per minute from the segment start."""

    rate_C_per_min: float
    T_start: float | None = None

    def __call__(self, t: float, T_start: float) -> float:
        T0 = T_start if self.T_start is None else self.T_start
        return T0 + self.rate_C_per_min * t / 60.0


@dataclass(frozen=True)
class TableTemperature:
    """Piecewise-linear temperature against time since the segment start."""

    times: tuple
    temps: tuple

    def __post_init__(self):
        if len(self.times) != len(self.temps) or len(self.times) < 1:
            raise ValueError("times and temps must be non-empty and of equal length")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("schedule times must be strictly increasing")

    def __call__(self, t: float, T_start: float) -> float:
        return float(np.interp(t, self.times, self.temps))


@dataclass(frozen=True)
class LoadSegment:
    """One control segment.

    ``stress_mask[k]`` selects stress control for Voigt component ``k``
    (order 11, 22, 33, 12, 13, 23); the other components follow
    ``strain_rate``. Stress-controlled components move linearly from their
    value at the segment start to ``stress_target`` at its end.
    """

    duration: float
    stress_mask: tuple = (False,) * 6
    strain_rate: tuple = (0.0,) * 6
    stress_target: tuple = (0.0,) * 6
    temperature: object = None
    max_dt: float = math.inf

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ValueError(f"segment duration {self.duration!r} must be positive")
        if len(self.stress_mask) != 6 or len(self.strain_rate) != 6 or len(self.stress_target) != 6:
            raise ValueError("mixed control needs exactly one condition per component")
        if not self.max_dt > 0.0:
            raise ValueError("max_dt must be positive")

    @classmethod
    def strain_rate_control(cls, rate, duration, temperature=None, max_dt=math.inf):
        rate = np.asarray(rate, float)
        rv = tl.to_voigt(rate) if rate.shape == (3, 3) else rate
        return cls(duration, (False,) * 6, tuple(rv), (0.0,) * 6, temperature, max_dt)

    @classmethod
    def stress_control(cls, target, duration, temperature=None, max_dt=math.inf):
        target = np.asarray(target, float)
        tv = tl.to_voigt(target) if target.shape == (3, 3) else target
        return cls(duration, (True,) * 6, (0.0,) * 6, tuple(tv), temperature, max_dt)

    @property
    def fully_stress(self) -> bool:
        return all(self.stress_mask)

    @property
    def fully_strain(self) -> bool:
        return not any(self.stress_mask)


@dataclass
class TimeSeriesRecord:
    time_s: float
    T_C: float
    p_MPa: float
    q_MPa: float
    eps_axial: float
    eps_p_trace: float
    rho_hat: float
    R_grain_m: float
    yield_value_MPa: float
    dissipation_MPa: float
    substeps: int
    extra: dict = field(default_factory=dict)

    CORE = ("time_s", "T_C", "p_MPa", "q_MPa", "eps_axial", "eps_p_trace", "rho_hat",
            "R_grain_m", "yield_value_MPa", "dissipation_MPa", "substeps")

    def row(self) -> dict:
        out = {k: getattr(self, k) for k in self.CORE}
        out.update(self.extra)
        return out


def make_record(t: float, state: mm.MaterialState, sigma, yield_value: float,
                dissipation: float, substeps: int) -> TimeSeriesRecord:
    inv = tl.stress_invariants(sigma)
    eps = state.eps
    return TimeSeriesRecord(
        time_s=t, T_C=state.T, p_MPa=inv.p, q_MPa=inv.q, eps_axial=float(eps[0, 0]),
        eps_p_trace=tl.trace(state.eps_p), rho_hat=state.rho_hat, R_grain_m=state.R_grain,
        yield_value_MPa=yield_value, dissipation_MPa=dissipation, substeps=substeps,
        extra={"sigma_11_MPa": float(sigma[0, 0]), "sigma_22_MPa": float(sigma[1, 1]),
               "sigma_33_MPa": float(sigma[2, 2]), "eps_p_11": float(state.eps_p[0, 0]),
               "eps_p_dev_norm": tl.norm(tl.dev(state.eps_p)),
               "R2_growth_m2": state.R2_growth})


def current_yield(state: mm.MaterialState, sigma, params: mm.MaterialParams,
                  settings: IntegratorSettings | None = None) -> float:
    """Yield value of ``sigma`` at the state's density, grain size and temperature."""
    settings = settings or IntegratorSettings()
    s = mm.sintering_stress(state.rho_hat, params, state.R_grain) if settings.sintering_active else 0.0
    return mm.bp_yield(tl.sym(sigma) - s * tl.I3, hardening_bundle(state.rho_hat, state.T, params),
                       params)


def _mixed_step(state, seg: LoadSegment, sigma_start_v, t_end_rel, T_new, dt, params,
                settings, guess_v) -> tuple[StepResult, np.ndarray]:
    """Solve the unknown strain components so stress-controlled ones hit their targets."""
    mask = np.array(seg.stress_mask)
    frac = t_end_rel / seg.duration
    target = sigma_start_v + (np.array(seg.stress_target) - sigma_start_v) * frac
    d_eps = np.array(seg.strain_rate) * dt
    unknown = np.flatnonzero(mask)
    d_eps[unknown] = guess_v[unknown]
    tol = settings.stress_tol_rel * params.sigma_m

    def run(dv):
        return return_map_step(state, tl.from_voigt(dv), T_new, dt, params, settings)

    res = run(d_eps)
    J = None
    for it in range(settings.outer_max_iter):
        r = tl.to_voigt(res.sigma)[unknown] - target[unknown]
        if np.max(np.abs(r)) <= tol:
            return res, d_eps
        if J is None or it % 4 == 3:
            J = np.empty((len(unknown), len(unknown)))
            h = 1e-9 + 1e-7 * np.max(np.abs(d_eps))
            for j, k in enumerate(unknown):
                dp = d_eps.copy()
                dp[k] += h
                J[:, j] = (tl.to_voigt(run(dp).sigma)[unknown] - tl.to_voigt(res.sigma)[unknown]) / h
        # minimum-norm update: at a vertex the deviatoric columns can be degenerate
        step = np.linalg.lstsq(J, r, rcond=1e-6)[0]
        r0 = np.max(np.abs(r))
        for _ in range(30):
            trial = d_eps.copy()
            trial[unknown] -= step
            try:
                res_try = run(trial)
            except NonConvergenceError:
                res_try = None
            if res_try is not None and \
                    np.max(np.abs(tl.to_voigt(res_try.sigma)[unknown] - target[unknown])) < r0:
                break
            step = 0.5 * step
        else:
            raise NonConvergenceError("mixed-control line search failed "
                                      f"(max stress error {r0:.3e} MPa)")
        d_eps, res = trial, res_try
    raise NonConvergenceError(f"mixed-control iterations did not converge "
                              f"(max stress error {np.max(np.abs(r)):.3e} MPa)")


def drive_program(state0: mm.MaterialState, program, params: mm.MaterialParams,
                  settings: IntegratorSettings | None = None) -> list[TimeSeriesRecord]:
    """Run a list of ``LoadSegment`` on one material point and record every step.

    The step size starts at ``settings.dt_initial`` (or the segment
    ``max_dt``), is halved after a step that needed bisection and doubled
    after three clean steps, and never exceeds ``max_dt``.
    """
    return run_program(state0, program, params, settings)[0]


def run_program(state0: mm.MaterialState, program, params: mm.MaterialParams,
                settings: IntegratorSettings | None = None, t0: float = 0.0,
                record_initial: bool = True):
    """``drive_program`` returning ``(records, final_state)``."""
    if not program:
        raise ValueError("load program is empty")
    settings = settings or IntegratorSettings()
    state = state0.copy()
    sigma = mm.elastic_stress(state.eps_e, state.T, params)
    t = t0
    records = []
    if record_initial:
        records.append(make_record(t, state, sigma, current_yield(state, sigma, params, settings),
                                   0.0, 0))
    for k, seg in enumerate(program):
        temp = seg.temperature or ConstantTemperature(state.T)
        T_seg0 = state.T
        sigma_start_v = tl.to_voigt(sigma)
        dt = min(settings.dt_initial or seg.max_dt, seg.max_dt, seg.duration)
        tau = 0.0
        clean = 0
        guess = np.zeros(6)
        while tau < seg.duration * (1.0 - 1e-12):
            h = min(dt, seg.duration - tau)
            if seg.duration - (tau + h) < 1e-9 * seg.duration:
                h = seg.duration - tau
            T_new = temp(tau + h, T_seg0)
            try:
                if seg.fully_strain:
                    res = return_map_step(state, tl.from_voigt(np.array(seg.strain_rate) * h),
                                          T_new, h, params, settings)
                elif seg.fully_stress:
                    frac = (tau + h) / seg.duration
                    tgt = sigma_start_v + (np.array(seg.stress_target) - sigma_start_v) * frac
                    res = stress_step(state, tl.from_voigt(tgt), T_new, h, params, settings)
                else:
                    res, d_eps = _mixed_step(state, seg, sigma_start_v, tau + h, T_new, h,
                                             params, settings, guess)
                    guess = d_eps
            except NonConvergenceError as exc:
                raise NonConvergenceError(
                    f"segment {k} failed at t={t + h:.6g} s: {exc}", exc.trace) from exc
            state, sigma = res.state, res.sigma
            tau += h
            t += h
            records.append(make_record(t, state, sigma, res.yield_value, res.dissipation,
                                       res.substeps_used))
            if res.substeps_used > 1:
                dt = max(0.5 * h, 1e-12)
                clean = 0
            else:
                clean += 1
                if clean >= 3:
                    dt = min(2.0 * dt, seg.max_dt)
                    clean = 0
    return records, state
