"""Lie-algebra valued forms over matrix structure groups.

Coefficients are anti-Hermitian d x d complex matrices (u(1) and su(2)
generators ship here; any size is accepted).  The wedge multiplies matrix
coefficients in the order written, traces use the fundamental
representation, and the energy density convention is

    |F|^2 := -Tr(F ∧ *F) / vol,

which is nonnegative for anti-Hermitian F and equals the Frobenius norm
of the coefficients, so every downstream energy is a genuine norm.
"""

from __future__ import annotations

import numpy as np

from .exterior import Form
from .fields import FormField, d_numeric

SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


def su2_generators():
    """Anti-Hermitian su(2) basis tau_k = i sigma_k / 2."""
    return [0.5j * SIGMA_1, 0.5j * SIGMA_2, 0.5j * SIGMA_3]


def u1_generator():
    return np.array([[1.0j]], dtype=np.complex128)


def is_anti_hermitian(x, tol=1e-12):
    x = np.asarray(x)
    return bool(np.max(np.abs(x + x.conj().T)) <= tol)


def random_anti_hermitian(d, rng):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z - z.conj().T)


def lie_form(dim, terms):
    """Matrix-valued form from (indices, matrix) pairs (1-based indices)."""
    return Form.from_terms(dim, terms)


def gwedge(a, b):
    """Wedge of Lie-algebra valued forms; coefficients multiply in order."""
    if a.is_matrix_valued and b.is_matrix_valued and a.nterms and b.nterms:
        if a.matrix_dim != b.matrix_dim:
            raise ValueError("matrix size mismatch in gauge wedge")
    return a.wedge(b)


def trace_pair(a, b):
    """Scalar form Tr(a ∧ b); symmetric up to the graded sign (-1)^(jk)."""
    w = gwedge(a, b)
    if not w.is_matrix_valued:
        return w
    coeffs = np.trace(w.coeffs, axis1=1, axis2=2)
    if np.max(np.abs(coeffs.imag), initial=0.0) <= 1e-12 * (np.max(np.abs(coeffs), initial=0.0) + 1.0):
        coeffs = coeffs.real
    return Form(w.dim, w.masks, coeffs)


def curvature(a, da):
    """Curvature F = dA + A ∧ A from a potential and its exterior derivative."""
    if a.grade not in (1, None) or (da.grade not in (2, None)):
        raise ValueError("curvature expects a grade-1 potential and grade-2 dA")
    return da + gwedge(a, a)


def covariant_d(a, beta, dbeta):
    """Covariant derivative d_A beta = d beta + A ∧ beta - (-1)^grade beta ∧ A."""
    out = dbeta
    for k in beta.grades():
        part = beta.restrict_grade(k)
        out = out + gwedge(a, part) - gwedge(part, a) * ((-1.0) ** k)
    return out


def conjugate(form, g):
    """Coefficient-wise conjugation g X g^-1 (constant gauge rotation)."""
    ginv = np.linalg.inv(g)
    coeffs = np.einsum("ab,ibc,cd->iad", g, form.coeffs, ginv)
    return Form(form.dim, form.masks, coeffs)


def curvature_field(a_field, h=None):
    """Evaluator x -> F(x) with dA by central differences."""

    def func(p):
        a = a_field(p)
        da = d_numeric(a_field, p, h=h)
        return curvature(a, da)

    return FormField(a_field.domain, func)


def covariant_d_at(a_field, beta_field, p, h=None):
    """d_A beta at a point, with the exterior derivative taken numerically."""
    beta = beta_field(p)
    dbeta = d_numeric(beta_field, p, h=h)
    return covariant_d(a_field(p), beta, dbeta)


def bianchi_residual(a_field, points=None, count=20, seed=0, h=None):
    """Max of ||d_A F_A|| over sample points; O(h^2) for smooth potentials.

    The curvature itself uses a nested finite-difference stencil, so points
    must keep 2h of room inside the chart (d_numeric raises otherwise).
    """
    dom = a_field.domain
    step = dom.h if h is None else h
    if points is None:
        rng = np.random.default_rng(seed)
        points = dom.interior_samples(count, rng, margin=4 * step)
    f_field = curvature_field(a_field, h=step)
    worst = 0.0
    for p in points:
        residual = covariant_d_at(a_field, f_field, p, h=step)
        worst = max(worst, residual.norm())
    return worst
