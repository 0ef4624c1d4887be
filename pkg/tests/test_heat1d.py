"""Conduction solver against the slab series solution, and the coupled column."""
import numpy as np
import pytest

from ceramsim import heat1d as h1
from ceramsim import matmodel as mm


def slab_error(n_nodes, dt=0.05, t_end=20.0, length=0.02):
    P = mm.MaterialParams(c_h=900.0, k_th=1.5)
    grid = h1.ThermalGrid.uniform(length, n_nodes, 20.0, P)
    sched = h1.FiringSchedule((0.0,), (500.0,))
    steps = int(round(t_end / dt))
    for k in range(steps):
        grid = h1.conduction_step(grid, sched, k * dt, dt)
    alpha = P.k_th / (grid.density[0] * P.c_h)
    exact = h1.slab_fourier_solution(grid.x, t_end, length, alpha, 20.0, 500.0)
    err = np.linalg.norm(grid.T - exact) / np.linalg.norm(exact - 20.0)
    return err, grid


def test_fourier_series_initial_and_late_state():
    x = np.linspace(0, 1, 11)[1:-1]
    np.testing.assert_allclose(h1.slab_fourier_solution(x, 0.0, 1.0, 1.0, 10.0, 0.0), 10.0,
                               rtol=1e-3)
    np.testing.assert_allclose(h1.slab_fourier_solution(x, 10.0, 1.0, 1.0, 10.0, 3.0), 3.0)


def test_slab_matches_series():
    err, _ = slab_error(100, dt=0.01)
    assert err < 0.01


def test_energy_balance():
    err, grid = slab_error(41)
    P = mm.MaterialParams()
    start = np.sum(grid.density[1:-1] * P.c_h * grid.dx * 20.0)
    assert grid.enthalpy() - start == pytest.approx(grid.boundary_heat, rel=1e-10)


def test_schedule_interpolation_and_csv(tmp_path):
    s = h1.FiringSchedule.ramp(60.0, 20.0, 1020.0, hold_s=100.0)
    assert s(0.0) == 20.0 and s(500.0) == pytest.approx(520.0)
    assert s(1e6) == 1020.0 and s.end_time == pytest.approx(1100.0)
    f = tmp_path / "s.csv"
    f.write_text("time_s,temperature_C\n0,20\n60,80\n")
    assert h1.FiringSchedule.from_csv(f)(30.0) == pytest.approx(50.0)
    f.write_text("t,T\n0,20\n")
    with pytest.raises(ValueError):
        h1.FiringSchedule.from_csv(f)
    with pytest.raises(ValueError):
        h1.FiringSchedule((0.0, 0.0), (1.0, 2.0))


def test_bad_properties_raise():
    P = mm.MaterialParams()
    grid = h1.ThermalGrid.uniform(0.01, 5, 20.0, P)
    grid.k_th = -1.0
    with pytest.raises(h1.HeatSolverError):
        h1.conduction_step(grid, h1.FiringSchedule((0.0,), (100.0,)), 0.0, 1.0)
    with pytest.raises(ValueError):
        h1.ThermalGrid(0.01, np.zeros(2), 1.0, 1.0, 1.0)


def test_coupled_column_lags_at_centre():
    P = mm.MaterialParams()
    sched = h1.FiringSchedule.ramp(100.0, 20.0, 1200.0, hold_s=300.0)
    nodes, grid = h1.coupled_column_run(P, 0.05, 5, sched, dt=10.0)
    assert len(nodes) == 5 and len(nodes[0]) == len(nodes[2])
    face, centre = nodes[0][-1], nodes[2][-1]
    assert face.rho_hat > centre.rho_hat > P.rho_hat0
    assert all(n[-1].extra["x_m"] == pytest.approx(x) for n, x in zip(nodes, grid.x))
    for node in nodes:
        rho = [r.rho_hat for r in node]
        assert all(b >= a for a, b in zip(rho, rho[1:]))
        assert max(r.extra["eps_p_dev_norm"] for r in node) < 1e-10


def test_uniform_column_when_conduction_is_fast():
    P = mm.MaterialParams(k_th=1e6)
    sched = h1.FiringSchedule.ramp(30.0, 20.0, 1000.0)
    nodes, _ = h1.coupled_column_run(P, 0.02, 3, sched, dt=10.0)
    spread = max(n[-1].rho_hat for n in nodes) - min(n[-1].rho_hat for n in nodes)
    assert spread < 1e-6
