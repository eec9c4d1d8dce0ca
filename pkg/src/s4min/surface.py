"""Surface kernel: frames along an immersed surface in the unit 4-sphere.

An immersion is a grid of unit vectors f in R^5 together with first and
second parameter jets.  The kernel builds the orthonormal tangent frame
(e1, e2), a smooth oriented normal frame (e3, e4) of the normal bundle
inside TS^4, and the second fundamental form taken with respect to the
sphere: since e3, e4 are orthogonal to both f and the tangent plane, the
normal components of the flat second jets already exclude the ambient
-<df(X),Y> f correction.

Complex shorthand from the classical structure equations is used for the
pointwise invariants: H_a = h^a_11 + i h^a_12 for a in {3, 4},

    |B|^2 = 2(|H3|^2 + |H4|^2),   K = 1 - |B|^2 / 2,
    K_N   = i(H3 conj(H4) - conj(H3) H4),
    a_pm  = sqrt(1 - K +- K_N) = |conj(H3) +- i conj(H4)|,

and the curvature-ellipse semi-axes are kappa = (a+ + a-)/2,
mu = |a+ - a-|/2.  K_N flips sign with the orientation of either the
tangent or the normal frame; all other invariants are gauge independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import GridPatch, MetricField, check_field, diff, frame_coefficients


class SurfaceError(ValueError):
    """Raised for inputs that are not usable immersions into S^4."""


UNIT_NORM_TOL = 1e-12


@dataclass
class ImmersionField:
    """Sampled immersion into S^4 with optional analytic jets.

    position: (nu, nv, 5) unit vectors.
    jet1: (nu, nv, 2, 5) holding (f_u, f_v), or None.
    jet2: (nu, nv, 3, 5) holding (f_uu, f_uv, f_vv), or None.
    jet_source: "analytic" or "fd".
    """

    patch: GridPatch
    position: np.ndarray
    jet1: Optional[np.ndarray] = None
    jet2: Optional[np.ndarray] = None
    jet_source: str = "analytic"

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        check_field(self.patch, self.position, "position")
        if self.position.shape[2:] != (5,):
            raise SurfaceError(f"position must be (nu, nv, 5), got {self.position.shape}")
        drift = np.abs(np.linalg.norm(self.position, axis=2) - 1.0).max()
        if drift > UNIT_NORM_TOL:
            raise SurfaceError(
                f"position not on the unit sphere: max | |f|-1 | = {drift:.3e} "
                f"(renormalize before constructing the field)"
            )
        if (self.jet1 is None) != (self.jet2 is None):
            raise SurfaceError("provide both jet orders or neither")
        if self.jet1 is not None:
            check_field(self.patch, self.jet1, "jet1")
            check_field(self.patch, self.jet2, "jet2")
            if self.jet1.shape[2:] != (2, 5) or self.jet2.shape[2:] != (3, 5):
                raise SurfaceError("jet shapes must be (nu, nv, 2, 5) and (nu, nv, 3, 5)")
        if self.jet_source not in ("analytic", "fd"):
            raise SurfaceError(f"unknown jet source {self.jet_source!r}")

    def with_jets(self) -> "ImmersionField":
        """Return self if jets are present, else fill them by finite differences."""
        if self.jet1 is not None:
            return self
        jet1, jet2 = fd_jets(self.patch, self.position)
        return ImmersionField(self.patch, self.position, jet1, jet2, jet_source="fd")


def fd_jets(patch: GridPatch, position: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second parameter jets of the position field by stencils."""
    fu = diff(patch, position, 0)
    fv = diff(patch, position, 1)
    fuu = diff(patch, position, 0, order=2)
    fvv = diff(patch, position, 1, order=2)
    fuv = diff(patch, fu, 1)
    jet1 = np.stack([fu, fv], axis=2)
    jet2 = np.stack([fuu, fuv, fvv], axis=2)
    return jet1, jet2


def verify_jets(imm: ImmersionField) -> float:
    """Max abs deviation between stored jets and a finite-difference pass."""
    if imm.jet1 is None:
        return 0.0
    jet1, jet2 = fd_jets(imm.patch, imm.position)
    return max(
        float(np.abs(jet1 - imm.jet1).max()),
        float(np.abs(jet2 - imm.jet2).max()),
    )


# ---------------------------------------------------------------------------
# frames


def tangent_frame(imm: ImmersionField) -> tuple[np.ndarray, np.ndarray, MetricField]:
    """Oriented orthonormal tangent frame by Gram-Schmidt on (f_u, f_v)."""
    if imm.jet1 is None:
        raise SurfaceError("immersion has no jets; call with_jets() first")
    fu = imm.jet1[:, :, 0, :]
    fv = imm.jet1[:, :, 1, :]
    E = np.einsum("uvk,uvk->uv", fu, fu)
    F = np.einsum("uvk,uvk->uv", fu, fv)
    G = np.einsum("uvk,uvk->uv", fv, fv)
    metric = MetricField(imm.patch, E, F, G)  # raises on degenerate rank
    e1 = fu / np.sqrt(E)[:, :, None]
    w = fv - (F / E)[:, :, None] * fu
    e2 = w / np.linalg.norm(w, axis=2)[:, :, None]
    return e1, e2, metric


@dataclass
class NormalFrameField:
    """Smooth oriented orthonormal frame (e3, e4) of the normal bundle.

    seam_u / seam_v record the largest gauge mismatch angle measured across
    each periodic seam before the periodicity correction; a large value on
    a non-torus chart signals genuine normal holonomy around that cycle
    (expected whenever the normal Euler number is nonzero).
    """

    patch: GridPatch
    e3: np.ndarray
    e4: np.ndarray
    orientation: int = 1
    seam_u: float = 0.0
    seam_v: float = 0.0


def _normal_projector_apply(f, e1, e2, vec):
    """Project ambient vectors onto the normal space at each point."""
    out = vec - np.einsum("...k,...k->...", vec, f)[..., None] * f
    out = out - np.einsum("...k,...k->...", out, e1)[..., None] * e1
    out = out - np.einsum("...k,...k->...", out, e2)[..., None] * e2
    return out


def _gram_schmidt_pair(q3, q4, where_msg="normal frame"):
    n3 = np.linalg.norm(q3, axis=-1)
    if np.any(n3 < 1e-8):
        raise SurfaceError(f"{where_msg}: transported frame degenerated")
    q3 = q3 / n3[..., None]
    q4 = q4 - np.einsum("...k,...k->...", q4, q3)[..., None] * q3
    n4 = np.linalg.norm(q4, axis=-1)
    if np.any(n4 < 1e-8):
        raise SurfaceError(f"{where_msg}: transported frame degenerated")
    return q3, q4 / n4[..., None]


def _seed_normal_basis(f, e1, e2):
    """Deterministic normal basis at one point from projected ambient axes."""
    best = []
    taken = []
    # preferred axes first (the last two coordinate directions), then the rest
    for k in (3, 4, 2, 1, 0):
        a = np.zeros(5)
        a[k] = 1.0
        q = _normal_projector_apply(f, e1, e2, a)
        for t in taken:
            q = q - np.dot(q, t) * t
        n = np.linalg.norm(q)
        if n > 0.3:
            t = q / n
            taken.append(t)
            best.append(t)
            if len(best) == 2:
                return best[0], best[1]
    raise SurfaceError("could not seed a normal frame from ambient axes")


def _frame_angle(t3, e3, e4):
    """Angle of a transported e3 against the stored (e3, e4) basis."""
    return np.arctan2(np.einsum("...k,...k->...", t3, e4),
                      np.einsum("...k,...k->...", t3, e3))


def _rotate_pair(e3, e4, angle):
    c = np.cos(angle)[..., None]
    s = np.sin(angle)[..., None]
    return c * e3 + s * e4, -s * e3 + c * e4


def normal_frame(imm: ImmersionField, e1: np.ndarray, e2: np.ndarray) -> NormalFrameField:
    """Smooth oriented completion of the tangent frame.

    Seeded at grid index (0, 0) by projecting fixed ambient axes, propagated
    along row 0 and then row by row (projection of the neighbour frame onto
    the new normal space + Gram-Schmidt), which approximates parallel
    transport in the normal bundle.  On periodic axes the gauge is then
    rotated by a linearly distributed angle so the stored field is exactly
    periodic; the pre-correction mismatch is reported.
    """
    patch = imm.patch
    f = imm.position
    nu, nv = patch.shape
    e3 = np.empty_like(f)
    e4 = np.empty_like(f)

    s3, s4 = _seed_normal_basis(f[0, 0], e1[0, 0], e2[0, 0])
    # ambient orientation convention: det[e1 e2 e3 e4 f] > 0
    M = np.stack([e1[0, 0], e2[0, 0], s3, s4, f[0, 0]], axis=1)
    orientation = 1
    if np.linalg.det(M) < 0:
        s4 = -s4
    e3[0, 0], e4[0, 0] = s3, s4

    for i in range(1, nu):  # row 0, sequential in u
        q3 = _normal_projector_apply(f[i, 0], e1[i, 0], e2[i, 0], e3[i - 1, 0])
        q4 = _normal_projector_apply(f[i, 0], e1[i, 0], e2[i, 0], e4[i - 1, 0])
        e3[i, 0], e4[i, 0] = _gram_schmidt_pair(q3, q4)
    for j in range(1, nv):  # remaining rows, vectorized across u
        q3 = _normal_projector_apply(f[:, j], e1[:, j], e2[:, j], e3[:, j - 1])
        q4 = _normal_projector_apply(f[:, j], e1[:, j], e2[:, j], e4[:, j - 1])
        e3[:, j], e4[:, j] = _gram_schmidt_pair(q3, q4)

    def seam_angle(axis):
        """Unwrapped mismatch angle profile across the seam of one axis."""
        if axis == 0:
            fw, e1w, e2w, e3w, e4w, last3 = f[0], e1[0], e2[0], e3[0], e4[0], e3[-1]
        else:
            fw, e1w, e2w = f[:, 0], e1[:, 0], e2[:, 0]
            e3w, e4w, last3 = e3[:, 0], e4[:, 0], e3[:, -1]
        t3 = _normal_projector_apply(fw, e1w, e2w, last3)
        t3 = t3 / np.linalg.norm(t3, axis=-1)[:, None]
        zeta = np.unwrap(_frame_angle(t3, e3w, e4w))
        cross_periodic = patch.periodic_v if axis == 0 else patch.periodic_u
        if cross_periodic and abs(zeta[-1] - zeta[0]) > np.pi:
            raise SurfaceError(
                "seam mismatch angle winds around the transverse cycle; "
                "no periodic normal gauge of this form exists"
            )
        return zeta

    seam_u = seam_v = 0.0
    # make the gauge exactly periodic; iterated because one correction pass
    # is only first order in the mismatch (transport does not commute with
    # the gauge rotation at second order), and on doubly periodic patches
    # the two axis corrections interact at O(h)
    for sweep in range(3):
        if patch.periodic_u:
            zeta = seam_angle(0)  # (nv,)
            if sweep == 0:
                seam_u = float(np.abs(zeta).max())
            ramp = np.arange(nu) / (nu - 1.0)
            e3, e4 = _rotate_pair(e3, e4, -zeta[None, :] * ramp[:, None])
        if patch.periodic_v:
            zeta = seam_angle(1)  # (nu,)
            if sweep == 0:
                seam_v = float(np.abs(zeta).max())
            ramp = np.arange(nv) / (nv - 1.0)
            e3, e4 = _rotate_pair(e3, e4, -zeta[:, None] * ramp[None, :])

    return NormalFrameField(patch, e3, e4, orientation, seam_u, seam_v)


def rotate_normal_frame(nf: NormalFrameField, angle) -> NormalFrameField:
    """Rotate (e3, e4) by a constant or per-point angle; orientation kept."""
    ang = np.broadcast_to(np.asarray(angle, dtype=float), nf.patch.shape)
    e3, e4 = _rotate_pair(nf.e3, nf.e4, ang)
    return NormalFrameField(nf.patch, e3, e4, nf.orientation, nf.seam_u, nf.seam_v)


def flip_normal_orientation(nf: NormalFrameField) -> NormalFrameField:
    return NormalFrameField(nf.patch, nf.e3.copy(), -nf.e4, -nf.orientation,
                            nf.seam_u, nf.seam_v)


def frame_orthonormality_residual(imm: ImmersionField, e1, e2, nf: NormalFrameField) -> float:
    """Max deviation of (f, e1, e2, e3, e4) from an orthonormal 5-frame."""
    cols = np.stack([imm.position, e1, e2, nf.e3, nf.e4], axis=2)  # (nu, nv, 5, 5)
    gram = np.einsum("uvik,uvjk->uvij", cols, cols)
    return float(np.abs(gram - np.eye(5)).max())


# ---------------------------------------------------------------------------
# second fundamental form


@dataclass
class ShapeReport:
    """Pointwise invariants of the second fundamental form.

    H3, H4 are complex fields tied to the frames the report was built
    with; everything from norm_B2 on is frame independent except for the
    sign of K_N (orientation).  minimality is the per-point |trace B|,
    maximized over the two normal directions.
    """

    patch: GridPatch
    H3: np.ndarray
    H4: np.ndarray
    norm_B2: np.ndarray
    K: np.ndarray
    K_N: np.ndarray
    kappa: np.ndarray
    mu: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    minimality: np.ndarray
    jet_source: str


RADICAND_TOL = -1e-8


def second_fundamental_form(imm: ImmersionField, e1, e2, metric: MetricField,
                            nf: NormalFrameField) -> ShapeReport:
    """Second fundamental form in the orthonormal frames and its invariants."""
    if imm.jet2 is None:
        raise SurfaceError("immersion has no jets; call with_jets() first")
    fuu = imm.jet2[:, :, 0, :]
    fuv = imm.jet2[:, :, 1, :]
    fvv = imm.jet2[:, :, 2, :]
    a, b, c = frame_coefficients(metric)

    # B(e1,e1), B(e1,e2), B(e2,e2) as ambient vectors before projection;
    # taking components against e3/e4 kills the f- and tangent parts.
    b11 = (a * a)[:, :, None] * fuu
    b12 = (a * b)[:, :, None] * fuu + (a * c)[:, :, None] * fuv
    b22 = (b * b)[:, :, None] * fuu + (2.0 * b * c)[:, :, None] * fuv + (c * c)[:, :, None] * fvv

    h = {}
    for name, ea in (("3", nf.e3), ("4", nf.e4)):
        h[("11", name)] = np.einsum("uvk,uvk->uv", b11, ea)
        h[("12", name)] = np.einsum("uvk,uvk->uv", b12, ea)
        h[("22", name)] = np.einsum("uvk,uvk->uv", b22, ea)

    H3 = h[("11", "3")] + 1j * h[("12", "3")]
    H4 = h[("11", "4")] + 1j * h[("12", "4")]
    minimality = np.maximum(np.abs(h[("11", "3")] + h[("22", "3")]),
                            np.abs(h[("11", "4")] + h[("22", "4")]))

    norm_B2 = 2.0 * (np.abs(H3) ** 2 + np.abs(H4) ** 2)
    K = 1.0 - norm_B2 / 2.0
    K_N = (1j * (H3 * np.conj(H4) - np.conj(H3) * H4)).real

    for name, rad in (("a_plus", 1.0 - K + K_N), ("a_minus", 1.0 - K - K_N)):
        worst = rad.min()
        if worst < RADICAND_TOL:
            iu, iv = np.unravel_index(np.argmin(rad), rad.shape)
            raise SurfaceError(
                f"{name}^2 = {worst:.3e} < 0 at grid index ({iu}, {iv}); "
                "input is not consistent with a minimal isometric immersion"
            )
    # |H3 -+ i H4| equals sqrt(1 - K +- K_N) exactly but avoids the
    # catastrophic cancellation of the radicand form near a_pm = 0
    a_plus = np.abs(H3 - 1j * H4)
    a_minus = np.abs(H3 + 1j * H4)
    kappa = 0.5 * (a_plus + a_minus)
    mu = 0.5 * np.abs(a_plus - a_minus)

    return ShapeReport(imm.patch, H3, H4, norm_B2, K, K_N, kappa, mu,
                       a_plus, a_minus, minimality, imm.jet_source)


def minimality_residual(report: ShapeReport) -> float:
    return float(report.minimality.max())


def shape_report(imm: ImmersionField):
    """Convenience: frames, metric, normal frame and report in one call."""
    imm = imm.with_jets()
    e1, e2, metric = tangent_frame(imm)
    nf = normal_frame(imm, e1, e2)
    rep = second_fundamental_form(imm, e1, e2, metric, nf)
    return imm, e1, e2, metric, nf, rep


_INVARIANT_FIELDS = ("norm_B2", "K", "K_N", "kappa", "mu", "a_plus", "a_minus")


def gauge_invariance_check(imm: ImmersionField, e1, e2, metric: MetricField,
                           nf_a: NormalFrameField, nf_b: NormalFrameField) -> dict:
    """Per-field max discrepancy of the invariants between two normal gauges."""
    rep_a = second_fundamental_form(imm, e1, e2, metric, nf_a)
    rep_b = second_fundamental_form(imm, e1, e2, metric, nf_b)
    return {
        name: float(np.abs(getattr(rep_a, name) - getattr(rep_b, name)).max())
        for name in _INVARIANT_FIELDS
    }


# ---------------------------------------------------------------------------
# intrinsic curvature (for the Gauss-equation cross check)


def intrinsic_gauss_curvature(patch: GridPatch, metric: MetricField,
                              e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """Gauss curvature from the Levi-Civita connection form of (e1, e2).

    omega_12(X) = <D_X e1, e2>; K = -d(omega_12) / (w1 ^ w2).  Independent
    of the second fundamental form, so comparing against the Gauss-equation
    value 1 - |B|^2/2 is a nontrivial consistency check.
    """
    w_u = np.einsum("uvk,uvk->uv", diff(patch, e1, 0), e2)
    w_v = np.einsum("uvk,uvk->uv", diff(patch, e1, 1), e2)
    d = diff(patch, w_v, 0) - diff(patch, w_u, 1)
    return -d / metric.dA


def gauss_equation_residual(report: ShapeReport, patch: GridPatch,
                            metric: MetricField, e1, e2,
                            mask_floor: float = 0.1) -> float:
    """Max |K_intrinsic - K| where the chart is not close to degenerate.

    Rows where the area element is below mask_floor * max(dA) (lat-long
    pole neighbourhoods) are excluded: chart degeneracy amplifies stencil
    error there without saying anything about the surface.
    """
    K_int = intrinsic_gauss_curvature(patch, metric, e1, e2)
    mask = metric.dA > mask_floor * metric.dA.max()
    return float(np.abs((K_int - report.K))[mask].max())
