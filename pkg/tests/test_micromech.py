"""Closed-form compaction curves, unit-cell geometry and hardening.

Reference numbers were evaluated once with 50-digit mpmath arithmetic
directly from the closed forms and are frozen here.
"""
import math

import numpy as np
import pytest

from ceramsim import matmodel as mm
from ceramsim import micromech as mc

MLA_06_OVER_SIGMA = 0.20843616637169
PLANE_09_150 = 116.591986612675
MLA_09_150 = 147.571623072631
MLA_038_OVER_SIGMA = -0.14196026
RHO_STAR = 0.475573223499427
# M with rho0 = 0.38, sigma_m = 150, m = 4.38, alpha = 1 and the unfloored MLA p_c
M_TABLE = {0.5: 7.4515629180035, 0.6: 2.1868585108828, 0.7: 1.6598015814275,
           0.8: 1.3962436600982, 0.9: 1.1729510921518, 0.95: 1.0334847923415,
           0.99: 0.8096996819855}


def test_plane_strain_at_close_packing():
    assert mc.compaction_pressure_plane(math.pi / 4, math.sqrt(3)) == pytest.approx(
        1 / math.sqrt(math.pi), rel=1e-9)


def test_closed_form_values():
    assert mc.compaction_pressure_mla(0.6, 1.0) == pytest.approx(MLA_06_OVER_SIGMA, rel=1e-12)
    assert mc.compaction_pressure_mla(0.6, 150.0) / 150.0 == pytest.approx(0.20842, rel=1e-4)
    assert mc.compaction_pressure_plane(0.9, 150.0) == pytest.approx(PLANE_09_150, rel=1e-12)
    assert mc.compaction_pressure_mla(0.9, 150.0) == pytest.approx(MLA_09_150, rel=1e-12)
    assert mc.compaction_pressure_mla(0.38, 1.0) == pytest.approx(MLA_038_OVER_SIGMA, rel=1e-7)


def test_mla_pressure_at_0_6():
    assert mc.compaction_pressure_mla(0.6, 150.0) == pytest.approx(31.26, abs=0.01)


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.6, 0.8, 0.95, 0.999])
def test_factored_form_agrees(rho):
    a = mc.compaction_pressure_mla(rho, 150.0)
    b = mc.compaction_pressure_mla_factored(rho, 150.0)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_mla_zero_crossing():
    assert mc.RHO_STAR == pytest.approx(RHO_STAR, rel=1e-14)
    assert abs(mc.compaction_pressure_mla(mc.RHO_STAR, 150.0)) < 1e-10
    assert mc.compaction_pressure_mla(mc.RHO_STAR - 1e-3, 150.0) < 0.0
    assert mc.compaction_pressure_mla(mc.RHO_STAR + 1e-3, 150.0) > 0.0


@pytest.mark.parametrize("curve", [mc.compaction_pressure_plane, mc.compaction_pressure_mla])
def test_curves_increase_and_diverge(curve):
    rho = np.linspace(max(mc.RHO_STAR, math.pi / 4 * 0.5) + 1e-3, 1 - 1e-6, 400)
    vals = np.array([curve(r, 150.0) for r in rho])
    if curve is mc.compaction_pressure_mla:
        assert np.all(np.diff(vals) > 0)
    assert curve(1 - 1e-6, 150.0) / curve(0.9, 150.0) > 10


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_closed_forms_reject_out_of_range(bad):
    with pytest.raises(mc.DomainError):
        mc.compaction_pressure_mla(bad, 150.0)
    with pytest.raises(mc.DomainError):
        mc.compaction_pressure_plane(bad, 150.0)


def test_geometry_identity_zeta_one():
    rho = np.linspace(0.0, 1.0, 1002)[1:-1]
    for r in rho:
        g = mc.cell_geometry(float(r), 1.0, 1.0)
        lhs = r * g.R_cell**2
        rhs = g.R_cell**2 - g.h**2 * (4 - math.pi) / 4
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_geometry_limits():
    assert mc.block_height(1 - 1e-12, 1.0, 1.0) < 1e-5
    g = mc.cell_geometry(math.pi / 4, 1.0, 1.0)
    assert g.R_cell == pytest.approx(1.0)
    assert not mc.cell_geometry(0.4, 1.0, 2.7).valid
    with pytest.raises(mc.GeometryBreakdownError):
        mc.geometric_limit_pressure(mc.cell_geometry(0.4, 1.0, 2.7), 1.0)


def test_geometric_pressure_positive_where_valid():
    assert not mc.cell_geometry(0.9, 1.0, 2.7).valid
    g = mc.cell_geometry(0.99, 1.0, 2.7)
    assert g.valid
    assert mc.geometric_limit_pressure(g, 150 / math.sqrt(3)) > 0.0


@pytest.mark.parametrize("rho,expected", sorted(M_TABLE.items()))
def test_friction_parameter_table(rho, expected):
    pc = mc.compaction_pressure_mla(rho, 150.0)
    A = mc.contact_area(rho, 0.38)
    M = mc.friction_M(pc, 150.0 * A, A, 150.0, 4.38, 1.0)
    assert M == pytest.approx(expected, rel=1e-10)


def test_friction_parameter_floor_and_degenerate():
    assert mc.friction_M(1e-3, 0.0, 0.0, 150.0, 4.38, 1.0, M_floor=0.1) == 0.1
    with pytest.raises(mc.DegenerateSurfaceError):
        mc.friction_M(0.0, 0.0, 0.0, 150.0, 4.38, 1.0)


def test_contact_area_and_cohesion():
    assert mc.contact_area(0.38, 0.38) == 0.0
    assert mc.contact_area(0.30, 0.38) == 0.0
    assert mc.contact_area(1.0, 0.38) == pytest.approx(math.pi / 3)
    assert mc.cohesion(0.69, 0.38, 150.0) == pytest.approx(150.0 * math.pi / 3 * 0.5)


def test_hardening_bundle_floors_and_softening(params):
    low = mc.hardening_bundle(0.40, 20.0, params, f_T=1.0)
    assert low.p_c == params.p_c_floor
    at_rho0 = mc.hardening_bundle(params.rho_hat0, 20.0, params, f_T=1.0)
    assert at_rho0.c == 0.0 and at_rho0.M == params.M_floor
    hot = mc.hardening_bundle(0.8, 900.0, params)
    cold = mc.hardening_bundle(0.8, 20.0, params, f_T=1.0)
    fT = mm.thermal_softening(900.0, params)
    assert hot.p_c == pytest.approx(max(fT * cold.p_c, params.p_c_floor))
    assert hot.c == pytest.approx(fT * cold.c)
    assert hot.M == cold.M
