"""Anti-self-duality as linear algebra on two-forms.

For a 4-form Q on R^N the curvature operator is

    B(F) = star(star(Q) ∧ F),      F in Lambda^2,

a symmetric matrix of size C(N,2) in the blade basis.  Anti-self-dual
(instanton) curvature means star F + star(Q) ∧ F = 0, equivalently
B(F) = -F since star star = +1 on 2-forms in the shipped dimensions
(the identity-metric sign is (-1)^(2(N-2)), positive for every N).

The shipped cylinder geometries have exactly two eigenvalues:
{2 x7, -1 x14} for the G2 cylinder over the nearly Kähler data and
{3 x7, -1 x21} for the Cayley cylinder over the nearly parallel G2 data
(built from the sign-calibrated instanton form, see structures), with the
-1 eigenspace the gauge-algebra subspace in both cases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exterior import Form, cylinder_lift, dt_form, hodge
from .fields import FormField, d_numeric
from .gauge import covariant_d_at, curvature_field

_INT = np.int64


class InstantonSubspaceError(ValueError):
    """Raised when an operator has no eigenvalue near -1."""


def lambda2_blades(dim):
    return list(itertools.combinations(range(dim), 2))


@dataclass(frozen=True)
class CurvatureOperator:
    """Matrix of F -> star(psi ∧ F) on Lambda^2, psi = star(Q)."""

    dim: int
    q4: Form
    psi: Form
    matrix: np.ndarray
    blades: list

    def apply(self, f_form):
        return hodge(self.psi.wedge(f_form))


def form_to_vector(f, blades):
    if f.is_matrix_valued:
        d = f.matrix_dim
        vec = np.zeros((len(blades), d, d), dtype=np.complex128)
    else:
        vec = np.zeros(len(blades))
    lookup = {(1 << a) | (1 << b): i for i, (a, b) in enumerate(blades)}
    for m, c in f.terms():
        vec[lookup[int(m)]] = c
    return vec


def vector_to_form(vec, dim, blades):
    masks = np.array([(1 << a) | (1 << b) for a, b in blades], dtype=_INT)
    return Form(dim, masks, np.asarray(vec))


def build_operator(q4, metric=None):
    """Assemble the curvature operator of a 4-form; symmetric to 1e-12."""
    if q4.grade != 4:
        raise ValueError("curvature operator needs a homogeneous 4-form")
    n = q4.dim
    if n < 5:
        raise ValueError("curvature operator needs dimension >= 5")
    psi = hodge(q4, metric)
    blades = lambda2_blades(n)
    mat = np.zeros((len(blades), len(blades)))
    for j, (a, b) in enumerate(blades):
        bf = hodge(psi.wedge(Form.basis(n, (a, b), one_based=False)), metric)
        col = form_to_vector(bf, blades)
        mat[:, j] = col
    asym = np.max(np.abs(mat - mat.T))
    if asym > 1e-12:
        raise ValueError(f"operator failed the symmetry contract ({asym:.2e})")
    mat = 0.5 * (mat + mat.T)
    return CurvatureOperator(n, q4, psi, mat, blades)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clusters: tuple  # ((value, multiplicity), ...) ascending

    def multiplicity(self, value, tol=1e-6):
        return sum(m for v, m in self.clusters if abs(v - value) <= tol)

    def max_eigen_residual(self, op):
        r = op.matrix @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.max(np.linalg.norm(r, axis=0)))


def spectrum(op, cluster_tol=1e-6):
    w, v = np.linalg.eigh(op.matrix)
    clusters = []
    for val in w:
        if clusters and abs(val - clusters[-1][0]) <= cluster_tol:
            prev_val, mult = clusters[-1]
            # running mean keeps the cluster centre stable
            clusters[-1] = ((prev_val * mult + val) / (mult + 1), mult + 1)
        else:
            clusters.append((float(val), 1))
    return Spectrum(w, v, tuple((round(v_, 12), m) for v_, m in clusters))


def instanton_projector(op, tol=1e-6):
    """Orthogonal projector onto the -1 eigenspace of the operator."""
    w, v = np.linalg.eigh(op.matrix)
    sel = np.abs(w + 1.0) <= tol
    if not np.any(sel):
        raise InstantonSubspaceError("operator has no instanton subspace (no eigenvalue near -1)")
    basis = v[:, sel]
    return basis @ basis.T


def project_instanton(op, f, tol=1e-6):
    """Project a 2-form onto the anti-self-dual subspace (idempotent)."""
    if f.dim != op.dim:
        raise ValueError("form dimension does not match the operator")
    proj = instanton_projector(op, tol=tol)
    vec = form_to_vector(f, op.blades)
    if vec.ndim == 3:
        out = np.einsum("ij,jab->iab", proj, vec)
    else:
        out = proj @ vec
    return vector_to_form(out, op.dim, op.blades)


def instanton_residual(f, q4, metric=None):
    """Norm of star F + star(Q) ∧ F."""
    return (hodge(f, metric) + hodge(q4, metric).wedge(f)).norm()


@dataclass(frozen=True)
class SplitResiduals:
    r1: float
    r2: float
    r_total: float


def cylinder_split_residual(f_m, adot, cyl):
    """Residuals of the two base equations and of the full cylinder equation.

    With s the calibration sign of the cylinder 4-form,

        r1 = ||star_M Adot + s star_M P ∧ F||
        r2 = ||star_M F + s (Adot ∧ star_M P + star_M Q ∧ F)||

    and r_total the residual of star F_A + s star(Q_Z) ∧ F_A = 0 for
    F_A = F + dt ∧ Adot.  The two descriptions are orthogonal components
    of the same form, so r_total^2 = r1^2 + r2^2 exactly.
    """
    from .exterior import cylinder_split
    from .structures import CylinderForms, build_cylinder  # local to avoid cycle

    if not isinstance(cyl, CylinderForms):
        cyl = build_cylinder(cyl)
    n = cyl.n
    if f_m.dim != n or adot.dim != n:
        raise ValueError(f"split residual expects base forms in dimension {n}")
    s = cyl.instanton_sign
    p_base, q_base = cylinder_split(cyl.q_z)  # q_z = dt ∧ P + Q
    star_p = hodge(p_base)
    star_q = hodge(q_base)
    r1 = (hodge(adot) + star_p.wedge(f_m) * s).norm()
    r2 = (hodge(f_m) + (adot.wedge(star_p) + star_q.wedge(f_m)) * s).norm()
    f_a = cylinder_lift(f_m) + dt_form(cyl.dim).wedge(cylinder_lift(adot))
    r_total = (hodge(f_a) + hodge(cyl.instanton_form).wedge(f_a)).norm()
    return SplitResiduals(r1, r2, r_total)


def random_split_pair(cyl, rng, matrix_dim=None):
    """Random (F_M, Adot) over the base, for split-equivalence sampling."""
    from .exterior import random_form

    return (
        random_form(cyl.n, 2, rng, matrix_dim=matrix_dim),
        random_form(cyl.n, 1, rng, matrix_dim=matrix_dim),
    )


def projected_split_pair(cyl, rng, tol=1e-6):
    """Split of a random 2-form projected onto the cylinder instanton space."""
    from .exterior import cylinder_split, random_form

    op = build_operator(cyl.instanton_form)
    f = project_instanton(op, random_form(cyl.dim, 2, rng), tol=tol)
    adot, f_m = cylinder_split(f)
    return f_m, adot


@dataclass
class YangMillsCheck:
    bianchi: float
    leibniz: float
    dstar_q: float


def ym_identity_check(a_field, q_field, points=None, count=20, seed=0, h=None):
    """Numeric ingredients of "instantons are Yang-Mills" on a chart.

    (i)  Bianchi: ||d_A F_A|| = O(h^2);
    (ii) graded Leibniz rule for the scalar (n-3)-form psi = star Q:
         ||d_A(psi ∧ F) - d(psi) ∧ F - (-1)^deg(psi) psi ∧ d_A F|| = O(h^2);
    (iii) closedness ||d(star Q)|| = O(h^2).

    Together with star F = -star(Q) ∧ F these force d_A star F = 0.
    """
    dom = a_field.domain
    step = dom.h if h is None else h
    if points is None:
        rng = np.random.default_rng(seed)
        points = dom.interior_samples(count, rng, margin=4 * step)
    f_field = curvature_field(a_field, h=step)
    psi_field = FormField(dom, lambda p: hodge(q_field(p)))

    def psi_wedge_f(p):
        return psi_field(p).wedge(f_field(p))

    pw_field = FormField(dom, psi_wedge_f)
    worst = YangMillsCheck(0.0, 0.0, 0.0)
    for p in points:
        bianchi = covariant_d_at(a_field, f_field, p, h=step).norm()
        psi = psi_field(p)
        sign = (-1.0) ** psi.grade
        lhs = covariant_d_at(a_field, pw_field, p, h=step)
        rhs = (
            d_numeric(psi_field, p, h=step).wedge(f_field(p))
            + psi.wedge(covariant_d_at(a_field, f_field, p, h=step)) * sign
        )
        leibniz = (lhs - rhs).norm()
        dpsi = d_numeric(psi_field, p, h=step).norm()
        worst = YangMillsCheck(
            max(worst.bianchi, bianchi),
            max(worst.leibniz, leibniz),
            max(worst.dstar_q, dpsi),
        )
    return worst
