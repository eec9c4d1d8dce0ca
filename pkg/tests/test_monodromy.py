"""Deck monodromy, identity-distance profile, and the closing-set dichotomy.

Oracle: on the flat square-lattice torus the deformation shears the
lattice, so the deformed surface is doubly periodic exactly when the
shear preserves the lattice - at quarter-turn multiples.  The scan must
find those four angles and nothing else; the superminimal sphere must
classify as a circle with congruence evidence.
"""

import json
import math

import numpy as np
import pytest

from s4min.catalog import clifford_torus, perturb_immersion, veronese_sphere
from s4min.family import ConnectionData, IntegrabilityBroken, connection_data
from s4min.grid import GridPatch, concatenate_loops, rectangle_loop, u_generator, v_generator
from s4min.monodromy import (
    MonodromyError,
    dichotomy_report,
    generator_monodromy,
    scan_profile,
)
from s4min.surface import shape_report


@pytest.fixture(scope="module")
def clifford_conn():
    imm, e1, e2, metric, nf, rep = shape_report(clifford_torus(128).immersion)
    return imm, connection_data(imm, e1, e2, nf, rep)


@pytest.fixture(scope="module")
def clifford_profile(clifford_conn):
    return scan_profile(clifford_conn[1], n_theta=720)


@pytest.fixture(scope="module")
def veronese_profile():
    imm, e1, e2, metric, nf, rep = shape_report(veronese_sphere(128).immersion)
    return scan_profile(connection_data(imm, e1, e2, nf, rep), n_theta=128)


def circular_distance(a, b):
    d = abs(a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


# ---------------------------------------------------------------------------
# torus: finite closing set


def test_torus_verdict_finite(clifford_profile):
    assert clifford_profile.verdict == "FINITE"


def test_torus_roots_are_quarter_turns(clifford_profile):
    roots = clifford_profile.roots
    assert len(roots) == 4
    for expected in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
        assert min(circular_distance(r, expected) for r in roots) < 1e-6


def test_torus_zero_always_closes(clifford_profile):
    assert clifford_profile.d[0] < clifford_profile.tol_close


def test_torus_open_at_eighth_turn(clifford_profile):
    k = len(clifford_profile.thetas) // 8  # theta = pi/4
    assert clifford_profile.d[k] > 0.1


def test_monodromies_orthogonal(clifford_profile):
    for M in (clifford_profile.M1, clifford_profile.M2):
        gram = np.swapaxes(M, -1, -2) @ M - np.eye(5)
        assert np.abs(gram).max() < 1e-8


def test_deck_group_abelian(clifford_profile):
    assert clifford_profile.commutator_defect.max() < 1e-7


def test_basepoint_invariance(clifford_conn):
    _, conn = clifford_conn
    d_a = scan_profile(conn, n_theta=64).d
    d_b = scan_profile(conn, n_theta=64, base=(37, 19)).d
    assert np.abs(d_a - d_b).max() < 1e-8


def test_contractible_loop_is_trivial(clifford_conn):
    imm, conn = clifford_conn
    loop = rectangle_loop(imm.patch, 3, 5, 20, 14)
    M = generator_monodromy(conn, loop, 0.77)
    assert np.linalg.norm(M - np.eye(5)) < 1e-7


def test_homomorphism_property(clifford_conn):
    imm, conn = clifford_conn
    a = u_generator(imm.patch)
    b = v_generator(imm.patch)
    Ma = generator_monodromy(conn, a, 0.9)
    Mb = generator_monodromy(conn, b, 0.9)
    Mab = generator_monodromy(conn, concatenate_loops(a, b), 0.9)
    assert np.linalg.norm(Mab - Ma @ Mb) < 1e-10


def test_s3_surface_monodromy_fixes_fifth_axis(clifford_conn):
    # the torus lies in a totally geodesic 3-sphere; its deck isometries
    # must fix the orthogonal ambient direction
    imm, conn = clifford_conn
    n5 = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    for theta in (0.3, 0.9, 2.0):
        for path in (u_generator(imm.patch), v_generator(imm.patch)):
            M = generator_monodromy(conn, path, theta)
            assert np.linalg.norm(M @ n5 - n5) < 1e-10


def test_theta_zero_monodromy_identity(clifford_conn):
    imm, conn = clifford_conn
    M = generator_monodromy(conn, u_generator(imm.patch), 0.0)
    assert np.linalg.norm(M - np.eye(5)) < 1e-6


# ---------------------------------------------------------------------------
# sphere: circle verdict with congruence evidence


def test_sphere_verdict_circle(veronese_profile):
    assert veronese_profile.verdict == "CIRCLE"
    assert veronese_profile.roots == []


def test_sphere_distance_stays_below_tol(veronese_profile):
    frac = np.mean(veronese_profile.d < veronese_profile.tol_close)
    assert frac >= 0.9


def test_sphere_congruence_evidence(veronese_profile):
    assert veronese_profile.congruence_residuals is not None
    assert veronese_profile.congruence_residuals.max() < 1e-4


# ---------------------------------------------------------------------------
# report


def test_report_is_json_serializable(clifford_profile, veronese_profile):
    for prof in (clifford_profile, veronese_profile):
        rep = dichotomy_report(prof)
        text = json.dumps(rep, sort_keys=True)
        back = json.loads(text)
        assert back["verdict"] == prof.verdict


def test_report_fields(clifford_profile):
    rep = dichotomy_report(clifford_profile)
    assert rep["verdict"] == "FINITE"
    assert len(rep["roots"]) == 4
    assert rep["fraction_below_tol"] < 0.9
    assert rep["commutator_defect_max"] < 1e-7
    assert "basepoint_invariance" in rep


# ---------------------------------------------------------------------------
# error paths


def test_too_few_samples_rejected(clifford_conn):
    with pytest.raises(MonodromyError, match="64"):
        scan_profile(clifford_conn[1], n_theta=32)


def test_no_periodic_axis_rejected(clifford_conn):
    imm, conn = clifford_conn
    p = imm.patch
    open_patch = GridPatch(p.nu, p.nv, p.u_range, p.v_range,
                           periodic_u=False, periodic_v=False)
    open_conn = ConnectionData(open_patch, conn.frames, conn.C0, conn.C1,
                               conn.C2, conn.gauge)
    with pytest.raises(MonodromyError, match="periodic"):
        scan_profile(open_conn)


def test_non_minimal_input_refused():
    imm, e1, e2, metric, nf, rep = shape_report(
        perturb_immersion(clifford_torus(64).immersion, 1e-3, seed=7))
    conn = connection_data(imm, e1, e2, nf, rep)
    with pytest.raises(IntegrabilityBroken, match="not flat"):
        scan_profile(conn, n_theta=64)


def test_coarse_scan_reports_wrap_root_canonically(clifford_conn):
    # with few samples the minimum at theta=0 is refined from the wrapped
    # side of the circle; the root must still be reported as 0, not 2*pi
    profile = scan_profile(clifford_conn[1], n_theta=64)
    assert profile.verdict == "FINITE"
    assert len(profile.roots) == 4
    assert profile.roots[0] == pytest.approx(0.0, abs=1e-7)
    assert all(0.0 <= r < 2.0 * math.pi for r in profile.roots)
