"""Transient conduction through the thickness of a firing body.

Temperatures are prescribed on both faces from a time table and the
interior follows ``rho c_h dT/dt = k d2T/dx2`` (backward Euler, three
point Laplacian). A column of material points is driven through the
resulting local temperatures under zero applied stress.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from . import matmodel as mm
from .integrator import (IntegratorSettings, TimeSeriesRecord, current_yield, make_record,
                         stress_step)

SCHEDULE_HEADER = ("time_s", "temperature_C")


class HeatSolverError(ValueError):
    """Raised when the conduction system is singular or non-physical."""


@dataclass
class ThermalGrid:
    """Uniform 1D grid; node 0 and node n-1 sit on the heated faces."""

    length: float
    T: np.ndarray
    density: np.ndarray
    c_h: float
    k_th: float
    # heat that entered through both faces since the start, J/m^2
    boundary_heat: float = 0.0

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=float)
        self.density = np.broadcast_to(np.asarray(self.density, dtype=float), self.T.shape).copy()
        if self.T.ndim != 1 or self.T.size < 3:
            raise ValueError("a thermal grid needs at least 3 nodes")
        if not self.length > 0.0:
            raise ValueError(f"length={self.length!r} must be positive")
        if not np.all(np.isfinite(self.T)):
            raise ValueError("node temperatures must be finite")

    @classmethod
    def uniform(cls, length: float, n_nodes: int, T_init: float, params: mm.MaterialParams,
                rho_hat: float | None = None) -> "ThermalGrid":
        rho = params.rho_hat0 if rho_hat is None else rho_hat
        return cls(length, np.full(n_nodes, float(T_init)),
                   np.full(n_nodes, rho * params.rho_fd * 1e3), params.c_h, params.k_th)

    @property
    def n_nodes(self) -> int:
        return self.T.size

    @property
    def dx(self) -> float:
        return self.length / (self.n_nodes - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_nodes)

    def enthalpy(self) -> float:
        """Interior heat content relative to 0 C, J/m^2 (face nodes excluded)."""
        return float(np.sum(self.density[1:-1] * self.c_h * self.dx * self.T[1:-1]))

    def copy(self) -> "ThermalGrid":
        return replace(self, T=self.T.copy(), density=self.density.copy())


@dataclass(frozen=True)
class FiringSchedule:
    """Face temperature against time, linear between points and held beyond them."""

    times: tuple
    temps: tuple = field(default=())

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size < 1 or t.size != len(self.temps):
            raise ValueError("schedule needs matching, non-empty time and temperature lists")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("schedule times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(self.temps))):
            raise ValueError("schedule values must be finite")

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.temps))

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @classmethod
    def ramp(cls, rate_C_per_min: float, T_start: float, T_max: float, hold_s: float = 0.0):
        t_ramp = (T_max - T_start) / rate_C_per_min * 60.0
        times, temps = [0.0, t_ramp], [T_start, T_max]
        if hold_s > 0.0:
            times.append(t_ramp + hold_s)
            temps.append(T_max)
        return cls(tuple(times), tuple(temps))

    @classmethod
    def from_csv(cls, path) -> "FiringSchedule":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        if not rows or tuple(c.strip() for c in rows[0]) != SCHEDULE_HEADER:
            raise ValueError(f"{path}: first row must be the header 'time_s,temperature_C'")
        try:
            data = [(float(a), float(b)) for a, b in rows[1:]]
        except ValueError as exc:
            raise ValueError(f"{path}: malformed schedule row ({exc})") from exc
        if not data:
            raise ValueError(f"{path}: schedule has no data rows")
        return cls(tuple(d[0] for d in data), tuple(d[1] for d in data))


def conduction_step(grid: ThermalGrid, schedule, t: float, dt: float) -> ThermalGrid:
    """Advance the field from ``t`` to ``t + dt``; face values come from ``schedule(t + dt)``."""
    if not dt > 0.0:
        raise ValueError(f"dt={dt!r} must be positive")
    rc = grid.density * grid.c_h
    if not (np.all(np.isfinite(rc)) and np.all(rc > 0.0) and math.isfinite(grid.k_th)
            and grid.k_th > 0.0):
        raise HeatSolverError("heat capacity and conductivity must be finite and positive")
    Tb = schedule(t + dt)
    n = grid.n_nodes
    r = grid.k_th * dt / (grid.dx**2 * rc[1:-1])
    m = n - 2
    ab = np.zeros((3, m))
    ab[0, 1:] = -r[:-1]
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r[1:]
    rhs = grid.T[1:-1].copy()
    rhs[0] += r[0] * Tb
    rhs[-1] += r[-1] * Tb
    try:
        inner = solve_banded((1, 1), ab, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise HeatSolverError(f"tridiagonal solve failed: {exc}") from exc
    T = np.concatenate(([Tb], inner, [Tb]))
    # flux through each face evaluated with the same end-of-step differences
    q_in = grid.k_th / grid.dx * ((Tb - T[1]) + (Tb - T[-2]))
    out = grid.copy()
    out.T = T
    out.boundary_heat = grid.boundary_heat + dt * q_in
    return out


def coupled_column_run(params: mm.MaterialParams, length: float, n_nodes: int, schedule,
                       settings: IntegratorSettings | None = None, dt: float = 10.0,
                       t_end: float | None = None, T_init: float | None = None):
    """Staggered firing of a column: conduction, then a zero-stress step per node.

    Returns ``(node_records, grid)`` where ``node_records[i]`` is the time
    series of node ``i``. Node densities feed back into the heat capacity
    before the next conduction step; nothing flows back from mechanics to
    temperature otherwise.
    """
    settings = settings or IntegratorSettings()
    t_end = schedule.end_time if t_end is None else t_end
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    T0 = schedule(0.0) if T_init is None else T_init
    grid = ThermalGrid.uniform(length, n_nodes, T0, params)
    states = [mm.MaterialState.initial(params, T=float(T)) for T in grid.T]
    zero = np.zeros((3, 3))
    records: list[list[TimeSeriesRecord]] = []
    for i, st in enumerate(states):
        rec = make_record(0.0, st, zero, current_yield(st, zero, params, settings), 0.0, 0)
        rec.extra["x_m"] = float(grid.x[i])
        records.append([rec])
    n_steps = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / n_steps
    for k in range(n_steps):
        t = k * h
        grid = conduction_step(grid, schedule, t, h)
        for i in range(n_nodes):
            res = stress_step(states[i], zero, float(grid.T[i]), h, params, settings)
            states[i] = res.state
            rec = make_record(t + h, res.state, res.sigma, res.yield_value, res.dissipation,
                              res.substeps_used)
            rec.extra["x_m"] = float(grid.x[i])
            records[i].append(rec)
        grid.density = np.array([s.rho_hat for s in states]) * params.rho_fd * 1e3
    return records, grid


def slab_fourier_solution(x, t: float, length: float, diffusivity: float, T_init: float,
                          T_face: float, n_terms: int = 2000) -> np.ndarray:
    """Series solution for a slab at ``T_init`` whose faces jump to ``T_face`` at t = 0."""
    x = np.asarray(x, dtype=float)
    n = np.arange(1, 2 * n_terms, 2)[:, None]
    k = n * np.pi / length
    terms = 4.0 / (n * np.pi) * np.sin(k * x[None, :]) * np.exp(-diffusivity * k * k * t)
    return T_face + (T_init - T_face) * terms.sum(axis=0)
