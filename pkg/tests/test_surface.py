"""Frame construction and pointwise invariants against closed-form surfaces.

Expected values are the classical closed forms of the model surfaces
(curvatures of the flat torus, the quadric sphere, the equator), computed
by hand and frozen here; they do not come from the code under test.
"""

import math

import numpy as np
import pytest

from s4min.catalog import clifford_torus, geodesic_sphere, perturb_immersion, veronese_sphere
from s4min.grid import GridError, GridPatch, diff, integrate
from s4min.surface import (
    ImmersionField,
    SurfaceError,
    flip_normal_orientation,
    frame_orthonormality_residual,
    gauge_invariance_check,
    gauss_equation_residual,
    minimality_residual,
    normal_frame,
    rotate_normal_frame,
    second_fundamental_form,
    shape_report,
    tangent_frame,
    verify_jets,
)

SQ3 = math.sqrt(3.0)


@pytest.fixture(scope="module")
def clifford():
    imm, e1, e2, metric, nf, rep = shape_report(clifford_torus(64).immersion)
    return imm, e1, e2, metric, nf, rep


@pytest.fixture(scope="module")
def veronese():
    imm, e1, e2, metric, nf, rep = shape_report(veronese_sphere(64).immersion)
    return imm, e1, e2, metric, nf, rep


@pytest.fixture(scope="module")
def geodesic():
    imm, e1, e2, metric, nf, rep = shape_report(geodesic_sphere(64).immersion)
    return imm, e1, e2, metric, nf, rep


# ---------------------------------------------------------------------------
# frames


def test_tangent_frame_is_orthonormal_and_tangent(clifford):
    imm, e1, e2, _, _, _ = clifford
    for a, b, want in [(e1, e1, 1.0), (e2, e2, 1.0), (e1, e2, 0.0)]:
        got = np.einsum("uvk,uvk->uv", a, b)
        assert np.abs(got - want).max() < 1e-13
    for e in (e1, e2):
        assert np.abs(np.einsum("uvk,uvk->uv", e, imm.position)).max() < 1e-13


def test_metric_closed_form_clifford(clifford):
    _, _, _, metric, _, _ = clifford
    assert np.abs(metric.E - 1.0).max() < 1e-14
    assert np.abs(metric.F).max() < 1e-14
    assert np.abs(metric.G - 1.0).max() < 1e-14


def test_metric_closed_form_veronese(veronese):
    # round metric of radius sqrt(3): I = 3 dt^2 + 3 sin^2(t) dphi^2
    imm, _, _, metric, _, _ = veronese
    t = imm.patch.u_coords()[:, None]
    assert np.abs(metric.E - 3.0).max() < 1e-12
    assert np.abs(metric.F).max() < 1e-12
    assert np.abs(metric.G - 3.0 * np.sin(t) ** 2).max() < 1e-12


@pytest.mark.parametrize("fix", ["clifford", "veronese", "geodesic"])
def test_full_frame_orthonormality(fix, request):
    imm, e1, e2, _, nf, _ = request.getfixturevalue(fix)
    assert frame_orthonormality_residual(imm, e1, e2, nf) < 1e-12


def test_normal_frame_periodic_after_correction(veronese):
    # after the seam correction, transporting the last column across the
    # seam must land on the stored first column
    imm, e1, e2, _, nf, _ = veronese
    from s4min.surface import _frame_angle, _normal_projector_apply

    t3 = _normal_projector_apply(imm.position[:, 0], e1[:, 0], e2[:, 0], nf.e3[:, -1])
    t3 = t3 / np.linalg.norm(t3, axis=-1)[:, None]
    ang = _frame_angle(t3, nf.e3[:, 0], nf.e4[:, 0])
    assert np.abs(ang).max() < 1e-10


def test_normal_frame_seam_diagnostic_sees_holonomy(veronese):
    # the quadric sphere has normal Euler number 4, so the relative gauge
    # winding across the chart is 8 pi; the flat torus has none
    _, _, _, _, nf, _ = veronese
    assert abs(nf.seam_v - 8.0 * math.pi) < 0.05
    _, _, _, _, nf_c, _ = shape_report(clifford_torus(32).immersion)
    assert nf_c.seam_u < 1e-10 and nf_c.seam_v < 1e-10


def test_normal_frame_is_smooth(veronese):
    # corrected gauge must not have hidden seam kinks: the discrete
    # derivative stays bounded by the true rotation rate, far below the
    # 1/h ~ 20 signature of a jump
    imm, _, _, _, nf, _ = veronese
    assert np.abs(diff(imm.patch, nf.e3, 1)).max() < 10.0
    assert np.abs(diff(imm.patch, nf.e4, 1)).max() < 10.0


# ---------------------------------------------------------------------------
# invariants against closed forms


def test_invariants_clifford(clifford):
    _, _, _, _, _, rep = clifford
    assert np.abs(rep.norm_B2 - 2.0).max() < 1e-12
    assert np.abs(rep.K).max() < 1e-12
    assert np.abs(rep.K_N).max() < 1e-12
    assert np.abs(rep.kappa - 1.0).max() < 1e-12
    assert np.abs(rep.mu).max() < 1e-12
    assert np.abs(rep.a_plus - 1.0).max() < 1e-12
    assert np.abs(rep.a_minus - 1.0).max() < 1e-12


def test_invariants_veronese(veronese):
    _, _, _, _, _, rep = veronese
    assert np.abs(rep.K - 1.0 / 3.0).max() < 1e-12
    assert np.abs(rep.K_N - 2.0 / 3.0).max() < 1e-12  # sign fixed by orientation
    assert np.abs(rep.kappa - 1.0 / SQ3).max() < 1e-8
    assert np.abs(rep.mu - 1.0 / SQ3).max() < 1e-8
    assert rep.a_minus.max() < 1e-12  # isotropic branch vanishes identically
    assert np.abs(rep.a_plus - 2.0 / SQ3).max() < 1e-12


def test_invariants_geodesic_sphere(geodesic):
    _, _, _, _, _, rep = geodesic
    assert rep.norm_B2.max() < 1e-25
    assert np.abs(rep.K - 1.0).max() < 1e-12
    assert rep.kappa.max() < 1e-12 and rep.mu.max() < 1e-12


def test_ellipse_identities(veronese, clifford):
    # |K_N| = 2 kappa mu and a_pm^2 = 1 - K +- K_N on both surfaces
    for pack in (veronese, clifford):
        rep = pack[5]
        assert np.abs(np.abs(rep.K_N) - 2.0 * rep.kappa * rep.mu).max() < 1e-12
        assert np.abs(rep.a_plus**2 - (1.0 - rep.K + rep.K_N)).max() < 1e-11
        assert np.abs(rep.a_minus**2 - (1.0 - rep.K - rep.K_N)).max() < 1e-11


def test_minimality_residual_small_on_catalog(clifford, veronese, geodesic):
    for pack in (clifford, veronese, geodesic):
        assert minimality_residual(pack[5]) < 1e-12


def test_minimality_detects_normal_perturbation():
    ent = clifford_torus(64)
    base = minimality_residual(shape_report(ent.immersion)[5])
    bent = perturb_immersion(ent.immersion, 1e-3, seed=7)
    res = minimality_residual(shape_report(bent)[5])
    assert res > 1e-4
    assert res > 100.0 * max(base, 1e-12)


# ---------------------------------------------------------------------------
# gauge behaviour


def test_invariants_are_gauge_independent(veronese):
    imm, e1, e2, metric, nf, _ = veronese
    U, V = imm.patch.mesh()
    field_angle = 0.3 * np.sin(U) * np.cos(V) + 0.37
    diffs = gauge_invariance_check(imm, e1, e2, metric, nf,
                                   rotate_normal_frame(nf, field_angle))
    for name, d in diffs.items():
        assert d < 1e-10, f"{name} moved by {d} under a gauge rotation"


def test_h_components_rotate_covariantly(clifford):
    imm, e1, e2, metric, nf, rep = clifford
    psi = 0.41
    rep2 = second_fundamental_form(imm, e1, e2, metric, rotate_normal_frame(nf, psi))
    H3_want = math.cos(psi) * rep.H3 + math.sin(psi) * rep.H4
    H4_want = -math.sin(psi) * rep.H3 + math.cos(psi) * rep.H4
    assert np.abs(rep2.H3 - H3_want).max() < 1e-12
    assert np.abs(rep2.H4 - H4_want).max() < 1e-12


def test_orientation_flip_negates_normal_curvature(veronese):
    imm, e1, e2, metric, nf, rep = veronese
    rep2 = second_fundamental_form(imm, e1, e2, metric, flip_normal_orientation(nf))
    assert np.abs(rep2.K_N + rep.K_N).max() < 1e-12
    assert np.abs(rep2.K - rep.K).max() < 1e-14
    assert np.abs(rep2.kappa - rep.kappa).max() < 1e-12


# ---------------------------------------------------------------------------
# consistency checks


def test_gauss_equation_cross_check(clifford, veronese):
    imm, e1, e2, metric, _, rep = clifford
    assert gauss_equation_residual(rep, imm.patch, metric, e1, e2) < 1e-10
    imm, e1, e2, metric, _, rep = veronese
    assert gauss_equation_residual(rep, imm.patch, metric, e1, e2) < 1e-3


def test_fd_jets_consistent_with_analytic():
    assert verify_jets(clifford_torus(64).immersion) < 5e-6
    assert verify_jets(veronese_sphere(64).immersion) < 0.05


def test_area_from_metric(clifford, veronese, geodesic):
    # torus chart: rectangle rule is exact; sphere charts: midpoint rule
    # over the capped axis carries an O(h^2) constant ~ area * h^2 / 24
    imm, _, _, metric, _, _ = clifford
    area = integrate(imm.patch, np.ones(imm.patch.shape), metric)
    assert abs(area - 2.0 * math.pi**2) < 1e-10
    for pack, want in [(veronese, 12.0 * math.pi), (geodesic, 4.0 * math.pi)]:
        imm, _, _, metric, _, _ = pack
        area = integrate(imm.patch, np.ones(imm.patch.shape), metric)
        h = imm.patch.hu
        assert abs(area - want) < 0.1 * want * h * h


# ---------------------------------------------------------------------------
# error paths


def test_off_sphere_position_rejected():
    patch = GridPatch(8, 8, (0.0, 1.0), (0.0, 1.0), True, True)
    pos = np.zeros((8, 8, 5))
    pos[..., 0] = 1.0 + 1e-6
    with pytest.raises(SurfaceError, match="unit sphere"):
        ImmersionField(patch, pos)


def test_degenerate_immersion_names_location():
    patch = GridPatch(8, 8, (0.0, 1.0), (0.0, 1.0), True, True)
    pos = np.zeros((8, 8, 5))
    pos[..., 0] = 1.0
    imm = ImmersionField(patch, pos, np.zeros((8, 8, 2, 5)), np.zeros((8, 8, 3, 5)))
    with pytest.raises(GridError, match=r"\(0, 0\)"):
        tangent_frame(imm)


def test_with_jets_marks_source():
    ent = clifford_torus(32)
    bare = ImmersionField(ent.immersion.patch, ent.immersion.position)
    filled = bare.with_jets()
    assert filled.jet_source == "fd"
    assert ent.immersion.jet_source == "analytic"
    with pytest.raises(SurfaceError, match="jets"):
        tangent_frame(bare)
