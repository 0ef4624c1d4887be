"""Ready-made material-point experiments: dilatometer firing and die pressing."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from . import matmodel as mm
from .integrator import (IntegratorSettings, LinearRamp, LoadSegment, TimeSeriesRecord,
                         run_program)

DEFAULT_STROKE = 12.6 / 22.0


def thermal_strain(T: float, params: mm.MaterialParams) -> float:
    """Free linear thermal strain per axis.

    The stress law subtracts ``K_b alpha0 (T - T0)`` from the pressure, so
    ``alpha0`` acts as a volumetric coefficient and each axis expands by a
    third of it.
    """
    return params.alpha0 * (T - params.T0) / 3.0


def dilatometer_run(params: mm.MaterialParams, ramp_rate: float = 30.0, T_max: float = 1200.0,
                    settings: IntegratorSettings | None = None, T_start: float = 20.0,
                    max_dt: float = 2.0) -> list[TimeSeriesRecord]:
    """Stress-free heating at ``ramp_rate`` C/min from ``T_start`` to ``T_max``.

    Adds ``eps_raw`` (total axial log strain) and ``eps_corrected`` (raw
    minus the free thermal strain) to every record. The corrected value is
    assembled from the plastic and stress-induced elastic parts, which is the
    same quantity without the cancellation of two nearly equal numbers.
    """
    if not ramp_rate > 0.0:
        raise ValueError(f"ramp_rate={ramp_rate!r} must be positive")
    if not T_max > T_start:
        raise ValueError("T_max must exceed the start temperature")
    settings = settings or IntegratorSettings()
    duration = (T_max - T_start) / ramp_rate * 60.0
    seg = LoadSegment.stress_control(np.zeros(6), duration, LinearRamp(ramp_rate), max_dt)
    state = mm.MaterialState.initial(params, T=T_start)
    records, _ = run_program(state, [seg], params, settings)
    for rec in records:
        rec.extra["eps_raw"] = rec.eps_axial
        sig = np.diag([rec.extra["sigma_11_MPa"], rec.extra["sigma_22_MPa"],
                       rec.extra["sigma_33_MPa"]])
        mech = mm.elastic_strain_from_stress(sig, params.T0, params)[0, 0]
        rec.extra["eps_corrected"] = rec.extra["eps_p_11"] + mech
    return records


def oedometric_press_run(params: mm.MaterialParams, stroke_ratio: float = DEFAULT_STROKE,
                         settings: IntegratorSettings | None = None, *,
                         duration: float, unload_duration: float = 1.0,
                         press_viscosity: float = 1e-12, n_steps: int = 200,
                         T: float | None = None):
    """Die compaction of one point followed by release of the axial stress.

    The axial log strain is ramped to ``ln(1 - stroke_ratio)`` with zero
    lateral strain over ``duration`` seconds, then the axial stress is
    brought back to zero at fixed lateral strain. Pressing uses a constant
    ``press_viscosity`` and no sintering stress. Returns
    ``(records, final_state)``.
    """
    if not 0.0 <= stroke_ratio < 1.0:
        raise ValueError(f"stroke_ratio={stroke_ratio!r} must lie in [0, 1)")
    settings = replace(settings or IntegratorSettings(), viscosity_override=press_viscosity,
                       sintering_active=False)
    eps_final = math.log(1.0 - stroke_ratio)
    rate = np.zeros(6)
    rate[0] = eps_final / duration
    load = LoadSegment(duration, (False,) * 6, tuple(rate), (0.0,) * 6, None, duration / n_steps)
    mask = (True,) + (False,) * 5
    unload = LoadSegment(unload_duration, mask, (0.0,) * 6, (0.0,) * 6, None,
                         unload_duration / 20.0)
    state = mm.MaterialState.initial(params, T=params.T0 if T is None else T)
    records, final = run_program(state, [load, unload], params, settings)
    for rec in records:
        rec.extra["phase"] = "load" if rec.time_s <= duration * (1 + 1e-12) else "unload"
    return records, final
