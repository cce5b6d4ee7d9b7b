"""Exterior algebra over an oriented N-dimensional inner-product space.

A :class:`Form` is a sparse list of (blade, coefficient) terms.  Blades are
bit masks over axes 0..N-1; axis i prints with the 1-based label i+1, and
e1 ∧ ... ∧ eN is the positive orientation.  Coefficients are real or
complex scalars, or square complex matrices for Lie-algebra valued forms;
the same container serves both, and the wedge multiplies coefficients in
the order written, so matrix-valued products keep their ordering.

Cylinder convention: on R_t x M the t axis occupies slot 0, hence the
volume form is dt ∧ vol_M and star(dt ∧ phi) = star_M(phi) with no extra
sign.  :func:`cylinder_lift` and :func:`dt_form` implement the embedding.

With the identity metric, star(star(a)) = (-1)^(k(N-k)) a on grade k.
General SPD metrics are handled by an orthonormalising change of basis
(Cholesky factor of the metric), and a conformal rescaling g -> e^(2f) g
multiplies the dual of a grade-k form by e^((N-2k) f).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k

_INT = np.int64


def _mask_from_indices(indices, one_based=True):
    # insertion with transposition counting, so (1,6,4) yields -e146
    mask = 0
    off = 1 if one_based else 0
    sign = 1.0
    for i in indices:
        a = i - off
        if a < 0:
            raise ValueError(f"axis index out of range: {i}")
        bit = 1 << a
        if mask & bit:
            return 0, 0.0
        if (mask >> (a + 1)).bit_count() & 1:
            sign = -sign
        mask |= bit
    return mask, sign


def mask_indices(mask, one_based=True):
    """Ascending axis labels of a blade mask."""
    out = []
    off = 1 if one_based else 0
    m = int(mask)
    while m:
        low = m & -m
        out.append(low.bit_length() - 1 + off)
        m ^= low
    return tuple(out)


def blade_label(mask):
    idx = mask_indices(mask)
    if not idx:
        return "1"
    return "e" + "".join(str(i) for i in idx)


class Form:
    """Sparse exterior form with scalar or matrix coefficients."""

    __slots__ = ("dim", "masks", "coeffs")

    def __init__(self, dim, masks, coeffs, _canonical=False):
        if dim < 0 or dim > 16:
            raise ValueError("dimension must be between 0 and 16")
        self.dim = int(dim)
        masks = np.asarray(masks, dtype=_INT)
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 1 and coeffs.dtype not in (np.float64, np.complex128):
            coeffs = coeffs.astype(np.float64 if coeffs.dtype.kind != "c" else np.complex128)
        if coeffs.ndim == 3:
            coeffs = coeffs.astype(np.complex128)
        if not _canonical:
            if coeffs.ndim == 1:
                masks, coeffs = _k.canonicalize_scalar(masks, coeffs)
            else:
                masks, coeffs = _k.canonicalize_matrix(masks, coeffs)
        if len(masks) and int(masks[-1]) >= (1 << self.dim):
            raise ValueError("blade mask exceeds the space dimension")
        self.masks = masks
        self.coeffs = coeffs

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, dim, matrix_dim=None):
        if matrix_dim is None:
            return cls(dim, np.zeros(0, dtype=_INT), np.zeros(0), _canonical=True)
        return cls(
            dim,
            np.zeros(0, dtype=_INT),
            np.zeros((0, matrix_dim, matrix_dim), dtype=np.complex128),
            _canonical=True,
        )

    @classmethod
    def from_terms(cls, dim, terms, one_based=True):
        """Build from (indices, coefficient) pairs; indices need not be sorted."""
        masks, coeffs = [], []
        matrix = any(np.ndim(c) == 2 for _, c in terms)
        for indices, c in terms:
            mask, sign = _mask_from_indices(indices, one_based=one_based)
            if sign == 0.0:
                continue
            masks.append(mask)
            coeffs.append(sign * (np.asarray(c, dtype=np.complex128) if matrix else c))
        if not masks:
            return cls.zero(dim)
        if matrix:
            coeffs = np.asarray(coeffs, dtype=np.complex128)
        else:
            coeffs = np.asarray(coeffs)
            if coeffs.dtype.kind == "c" and not np.any(coeffs.imag):
                coeffs = coeffs.real
        return cls(dim, np.asarray(masks, dtype=_INT), coeffs)

    @classmethod
    def basis(cls, dim, indices, one_based=True):
        return cls.from_terms(dim, [(tuple(indices), 1.0)], one_based=one_based)

    @classmethod
    def scalar(cls, dim, value):
        return cls(dim, np.array([0], dtype=_INT), np.array([value]))

    @classmethod
    def volume(cls, dim):
        return cls(dim, np.array([(1 << dim) - 1], dtype=_INT), np.array([1.0]), _canonical=True)

    # -- structure ------------------------------------------------------

    @property
    def is_matrix_valued(self):
        return self.coeffs.ndim == 3

    @property
    def matrix_dim(self):
        return self.coeffs.shape[1] if self.is_matrix_valued else None

    @property
    def nterms(self):
        return len(self.masks)

    def grades(self):
        return sorted({int(m).bit_count() for m in self.masks})

    @property
    def grade(self):
        """Grade of a homogeneous form (None for zero or mixed forms)."""
        g = self.grades()
        return g[0] if len(g) == 1 else None

    def is_zero(self):
        return len(self.masks) == 0

    def coefficient(self, indices, one_based=True):
        mask, sign = _mask_from_indices(indices, one_based=one_based)
        hit = np.nonzero(self.masks == mask)[0]
        if len(hit) == 0:
            if self.is_matrix_valued:
                d = self.matrix_dim
                return np.zeros((d, d), dtype=np.complex128)
            return 0.0
        return sign * self.coeffs[int(hit[0])]

    def terms(self):
        for m, c in zip(self.masks, self.coeffs):
            yield int(m), c

    def to_dict(self):
        return {mask_indices(m): c for m, c in self.terms()}

    def restrict_grade(self, k):
        keep = np.array([int(m).bit_count() == k for m in self.masks], dtype=bool)
        return Form(self.dim, self.masks[keep], self.coeffs[keep], _canonical=True)

    # -- arithmetic -----------------------------------------------------

    def _check_compat(self, other):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if self.is_matrix_valued and other.is_matrix_valued:
            if self.matrix_dim != other.matrix_dim and self.nterms and other.nterms:
                raise ValueError("matrix size mismatch")

    def __add__(self, other):
        self._check_compat(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.is_matrix_valued != other.is_matrix_valued:
            raise ValueError("cannot add scalar-valued and matrix-valued forms")
        masks = np.concatenate([self.masks, other.masks])
        coeffs = np.concatenate(
            [self.coeffs.astype(np.result_type(self.coeffs, other.coeffs)), other.coeffs]
        )
        return Form(self.dim, masks, coeffs)

    def __neg__(self):
        return Form(self.dim, self.masks, -self.coeffs, _canonical=True)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if np.ndim(scalar) != 0:
            return NotImplemented
        return Form(self.dim, self.masks, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def wedge(self, other):
        self._check_compat(other)
        a, b = self, other
        if a.is_zero() or b.is_zero():
            md = a.matrix_dim or b.matrix_dim
            return Form.zero(a.dim, md)
        if not a.is_matrix_valued and not b.is_matrix_valued:
            masks, coeffs = _k.wedge_ss(a.masks, a.coeffs, b.masks, b.coeffs)
        elif a.is_matrix_valued and b.is_matrix_valued:
            masks, coeffs = _k.wedge_mm(a.masks, a.coeffs, b.masks, b.coeffs)
        elif b.is_matrix_valued:
            masks, coeffs = _k.wedge_sm(a.masks, a.coeffs, b.masks, b.coeffs)
        else:
            masks, coeffs = _k.wedge_ms(a.masks, a.coeffs, b.masks, b.coeffs)
        return Form(a.dim, masks, coeffs, _canonical=True)

    def __xor__(self, other):
        return self.wedge(other)

    def interior(self, v):
        """Contraction i_v with the vector v (components over axes 0..N-1)."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"vector has wrong dimension {v.shape} for N={self.dim}")
        if self.is_matrix_valued:
            masks, coeffs = _k.interior_matrix(self.masks, self.coeffs, v)
        else:
            masks, coeffs = _k.interior_scalar(self.masks, self.coeffs, v)
        return Form(self.dim, masks, coeffs, _canonical=True)

    # -- metric operations ----------------------------------------------

    def hodge(self, metric=None):
        return hodge(self, metric)

    def inner(self, other, metric=None):
        return inner(self, other, metric)

    def norm2(self, metric=None):
        return norm2(self, metric)

    def norm(self, metric=None):
        return math.sqrt(max(norm2(self, metric), 0.0))

    # -- comparison and display ------------------------------------------

    def approx_eq(self, other, tol=1e-12):
        return (self - other).norm() <= tol

    def max_abs(self):
        if self.is_zero():
            return 0.0
        return float(np.max(np.abs(self.coeffs)))

    def __repr__(self):
        if self.is_zero():
            return f"Form({self.dim}d: 0)"
        if self.is_matrix_valued:
            body = ", ".join(blade_label(m) for m in self.masks[:8])
            more = "..." if self.nterms > 8 else ""
            return f"Form({self.dim}d, {self.matrix_dim}x{self.matrix_dim}-valued: {body}{more})"
        parts = []
        for m, c in self.terms():
            if isinstance(c, complex) or (np.ndim(c) == 0 and np.iscomplexobj(c)):
                parts.append(f"({c})*{blade_label(m)}")
            else:
                s = "+" if c >= 0 else "-"
                cv = abs(float(c))
                cs = "" if cv == 1.0 and m else f"{cv:g}*" if m else f"{cv:g}"
                parts.append(f"{s}{cs}{blade_label(m)}" if m else f"{s}{cv:g}")
        return f"Form({self.dim}d: {' '.join(parts)})"


@dataclass(frozen=True)
class MetricFrame:
    """Inner product, orientation, and optional conformal log-factor.

    ``matrix`` is the metric on tangent vectors (identity when None);
    ``conformal`` is the scalar f of the rescaling g -> e^(2f) g.
    """

    dim: int
    matrix: np.ndarray | None = None
    orientation: int = 1
    conformal: float = 0.0

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.matrix is not None:
            g = np.asarray(self.matrix, dtype=np.float64)
            if g.shape != (self.dim, self.dim):
                raise ValueError("metric matrix has wrong shape")
            if not np.allclose(g, g.T, atol=1e-12):
                raise ValueError("metric matrix must be symmetric")
            if np.min(np.linalg.eigvalsh(g)) <= 0:
                raise ValueError("metric matrix must be positive definite")
            object.__setattr__(self, "matrix", g)

    @property
    def is_euclidean(self):
        return self.matrix is None

    def cholesky(self):
        return np.linalg.cholesky(self.matrix)

    def volume_form(self):
        scale = 1.0 if self.is_euclidean else math.sqrt(np.linalg.det(self.matrix))
        scale *= math.exp(self.dim * self.conformal)
        return Form.volume(self.dim) * (self.orientation * scale)

    def with_conformal(self, f):
        return MetricFrame(self.dim, self.matrix, self.orientation, f)


def wedge(a, b):
    return a.wedge(b)


def interior(v, a):
    return a.interior(v)


def _hodge_flat(a, orientation):
    if a.is_matrix_valued:
        masks, coeffs = _k.hodge_matrix(a.masks, a.coeffs, a.dim, orientation)
    else:
        masks, coeffs = _k.hodge_scalar(a.masks, a.coeffs, a.dim, orientation)
    return Form(a.dim, masks, coeffs, _canonical=True)


def _conformal_scale(form, dim, f):
    """Multiply each grade-k slice by e^((N-2k) f)."""
    if f == 0.0 or form.is_zero():
        return form
    ks = np.array([int(m).bit_count() for m in form.masks])
    scale = np.exp((dim - 2 * ks) * f)
    if form.is_matrix_valued:
        scale = scale[:, None, None]
    return Form(form.dim, form.masks, form.coeffs * scale, _canonical=True)


def hodge(a, metric=None):
    """Hodge dual.  Works grade by grade, so mixed-grade input is accepted."""
    if metric is None:
        return _hodge_flat(a, 1)
    if metric.dim != a.dim:
        raise ValueError("metric dimension mismatch")
    if metric.is_euclidean:
        out = _hodge_flat(a, metric.orientation)
    else:
        L = metric.cholesky()
        ortho = apply_linear(a, np.linalg.inv(L))
        out = apply_linear(_hodge_flat(ortho, metric.orientation), L)
    return _conformal_scale(out, a.dim, metric.conformal)


def conformal_hodge(a, metric, f=None):
    """Hodge dual for the conformally rescaled metric e^(2f) g."""
    if f is None:
        f = metric.conformal if metric is not None else 0.0
    base = MetricFrame(a.dim) if metric is None else metric
    return hodge(a, MetricFrame(base.dim, base.matrix, base.orientation, f))


def inner(a, b, metric=None):
    """Pointwise inner product; Hermitian in the first slot for complex input.

    For matrix-valued forms this is sum_I tr(a_I^dagger b_I), which for
    anti-Hermitian coefficients equals the -Tr(a ∧ *b)/vol pairing.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if metric is not None and not metric.is_euclidean:
        L = metric.cholesky()
        S = np.linalg.inv(L)
        return inner(
            apply_linear(a, S),
            apply_linear(b, S),
            MetricFrame(metric.dim, None, metric.orientation, metric.conformal),
        )
    total = 0.0
    ia = {int(m): i for i, m in enumerate(a.masks)}
    for j, m in enumerate(b.masks):
        i = ia.get(int(m))
        if i is None:
            continue
        ca, cb = a.coeffs[i], b.coeffs[j]
        if a.is_matrix_valued:
            term = np.trace(ca.conj().T @ cb)
        else:
            term = np.conj(ca) * cb
        if metric is not None and metric.conformal != 0.0:
            k = int(m).bit_count()
            term = term * math.exp(-2 * k * metric.conformal)
        total += term
    total = complex(total)
    if abs(total.imag) <= 1e-13 * (abs(total) + 1.0):
        return total.real
    return total


def norm2(a, metric=None):
    return float(np.real(inner(a, a, metric)))


def apply_linear(form, S):
    """Induced map on forms of the covector substitution e^i -> sum_a S[a,i] f^a.

    S may be rectangular (m x N); the result lives in dimension m.  Used for
    pullbacks along immersions and for orthonormalising changes of basis.
    """
    S = np.asarray(S, dtype=np.float64)
    m, n = S.shape
    if n != form.dim:
        raise ValueError("linear map has wrong input dimension")
    if form.is_zero():
        return Form.zero(m, form.matrix_dim)
    out_masks, out_coeffs = [], []
    for k in form.grades():
        part = form.restrict_grade(k)
        if k == 0:
            out_masks.extend(int(x) for x in part.masks)
            out_coeffs.extend(part.coeffs)
            continue
        if k > m:
            continue
        in_idx = [mask_indices(mm, one_based=False) for mm in part.masks]
        out_idx = list(itertools.combinations(range(m), k))
        minors = np.empty((len(out_idx), len(in_idx), k, k))
        for jj, J in enumerate(out_idx):
            SJ = S[list(J), :]
            for ii, I in enumerate(in_idx):
                minors[jj, ii] = SJ[:, list(I)]
        dets = np.linalg.det(minors)
        if part.is_matrix_valued:
            new_c = np.einsum("ji,iab->jab", dets, part.coeffs)
        else:
            new_c = dets @ part.coeffs
        for jj, J in enumerate(out_idx):
            mask = 0
            for ax in J:
                mask |= 1 << ax
            out_masks.append(mask)
            out_coeffs.append(new_c[jj])
    if not out_masks:
        return Form.zero(m, form.matrix_dim)
    return Form(m, np.asarray(out_masks, dtype=_INT), np.asarray(out_coeffs))


def to_dense(form, k=None):
    """Dense fully antisymmetric tensor of a homogeneous scalar form."""
    if form.is_matrix_valued:
        raise ValueError("dense tensors are supported for scalar forms only")
    if k is None:
        k = form.grade
        if k is None:
            raise ValueError("form must be homogeneous")
    n = form.dim
    if n**k > 20_000_000:
        raise ValueError("dense tensor would be too large")
    out = np.zeros((n,) * k) if k else np.zeros(())
    for m, c in form.terms():
        idx = mask_indices(m, one_based=False)
        for perm in itertools.permutations(range(k)):
            sign = _perm_sign(perm)
            out[tuple(idx[p] for p in perm)] = sign * c
    return out


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


# -- cylinder helpers ---------------------------------------------------


def cylinder_lift(form):
    """Embed a form on M into R_t x M (t becomes axis 0, M axes shift up)."""
    return Form(form.dim + 1, form.masks << 1, form.coeffs, _canonical=True)


def dt_form(total_dim):
    """The covector dt on a cylinder of the given total dimension."""
    return Form(total_dim, np.array([1], dtype=_INT), np.array([1.0]), _canonical=True)


def cylinder_split(form):
    """Inverse of the lift: write a cylinder form as dt ∧ alpha + beta.

    Returns (alpha, beta) as forms on M (dimension reduced by one).
    """
    has_dt = (form.masks & 1).astype(bool)
    beta = Form(form.dim - 1, form.masks[~has_dt] >> 1, form.coeffs[~has_dt], _canonical=True)
    alpha = Form(form.dim - 1, form.masks[has_dt] >> 1, form.coeffs[has_dt], _canonical=True)
    return alpha, beta


def random_form(dim, grade, rng, matrix_dim=None, density=1.0):
    """Random homogeneous form with standard-normal coefficients."""
    blades = list(itertools.combinations(range(dim), grade))
    if density < 1.0:
        keep = rng.random(len(blades)) < density
        blades = [b for b, kp in zip(blades, keep) if kp] or blades[:1]
    masks = []
    for b in blades:
        mask = 0
        for ax in b:
            mask |= 1 << ax
        masks.append(mask)
    if matrix_dim is None:
        coeffs = rng.standard_normal(len(masks))
    else:
        x = rng.standard_normal((len(masks), matrix_dim, matrix_dim))
        y = rng.standard_normal((len(masks), matrix_dim, matrix_dim))
        z = x + 1j * y
        coeffs = 0.5 * (z - np.conj(np.transpose(z, (0, 2, 1))))
    return Form(dim, np.asarray(masks, dtype=_INT), coeffs)
