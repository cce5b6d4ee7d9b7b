"""Differential forms as smooth coefficient fields on simple charts.

Charts are boxes in R^N, punctured R^N, flat tori, and the embedded unit
sphere S^(N-1).  Fields are evaluators point -> Form (scalar- or
matrix-valued); the exterior derivative is numeric (central differences,
order 2, with optional one-step Richardson extrapolation to order 4).

Sphere geometry is point-local: frames come from Gram-Schmidt over the
coordinate axes, seeded by the largest component of the point so the
construction never degenerates, and oriented so that
normal ∧ frame = ambient volume.  No globally smooth frame exists on S^6,
so every shipped check compares frame-invariant quantities only (norms,
residual norms, integrals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exterior import Form, apply_linear


@dataclass(frozen=True)
class ChartDomain:
    """Sample domain for form fields.

    kind is one of "box", "punctured", "torus", "sphere".  For boxes and
    tori, lo/hi bound the coordinates; punctured domains exclude the ball
    of radius r_min around the origin; the sphere is the unit sphere in
    the ambient dimension.  h is the default finite-difference step.
    """

    kind: str
    dim: int
    h: float = 1e-4
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    r_min: float = 0.0

    def __post_init__(self):
        if self.kind not in ("box", "punctured", "torus", "sphere"):
            raise ValueError(f"unknown chart kind: {self.kind}")
        if self.h <= 0:
            raise ValueError("finite-difference step must be positive")

    def contains(self, p, margin=0.0):
        p = np.asarray(p, dtype=np.float64)
        if self.kind == "box":
            return bool(np.all(p >= self.lo + margin) and np.all(p <= self.hi - margin))
        if self.kind == "punctured":
            return bool(np.linalg.norm(p) >= self.r_min + margin)
        if self.kind == "torus":
            return True
        return bool(abs(np.linalg.norm(p) - 1.0) < 1e-9)

    def interior_samples(self, count, rng, margin=None):
        """Uniform sample points keeping stencil room inside the chart."""
        m = 4 * self.h if margin is None else margin
        if self.kind == "box":
            return rng.uniform(self.lo + m, self.hi - m, size=(count, self.dim))
        if self.kind == "punctured":
            x = rng.standard_normal((count, self.dim))
            r = rng.uniform(self.r_min + m, self.r_min + 1.0 + m, size=count)
            return x / np.linalg.norm(x, axis=1, keepdims=True) * r[:, None]
        if self.kind == "torus":
            return rng.uniform(self.lo, self.hi, size=(count, self.dim))
        return sphere_samples(count, self.dim, rng)


def box_chart(lo, hi, h=1e-4):
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError("box bounds are inconsistent")
    return ChartDomain("box", len(lo), h, lo=lo, hi=hi)


def punctured_chart(dim, r_min=0.5, h=1e-4):
    if r_min <= 0:
        raise ValueError("punctured chart needs r_min > 0")
    return ChartDomain("punctured", dim, h, r_min=r_min)


def torus_chart(dim, period=2 * math.pi, h=1e-4):
    lo = np.zeros(dim)
    hi = np.full(dim, period)
    return ChartDomain("torus", dim, h, lo=lo, hi=hi)


def sphere_chart(ambient_dim, h=1e-4):
    return ChartDomain("sphere", ambient_dim, h)


class FormField:
    """A smooth assignment point -> Form over a chart domain."""

    def __init__(self, domain, func, batch_func=None):
        self.domain = domain
        self.func = func
        self.batch_func = batch_func

    def __call__(self, p):
        return self.func(np.asarray(p, dtype=np.float64))


def constant_field(domain, form):
    return FormField(domain, lambda p: form)


def d_numeric(field, p, h=None, richardson=False):
    """Central-difference exterior derivative of a form field at p.

    Error is O(h^2) for C^3 fields, O(h^4) with richardson=True.
    Raises ValueError when the stencil would leave the chart.
    """
    p = np.asarray(p, dtype=np.float64)
    dom = field.domain
    step = dom.h if h is None else h
    need = 2 * step if richardson else step
    if not dom.contains(p, margin=need):
        raise ValueError("stencil exits the chart domain")

    def central(hh):
        out = None
        for i in range(dom.dim):
            e = np.zeros(dom.dim)
            e[i] = hh
            diff = (field(p + e) - field(p - e)) * (1.0 / (2.0 * hh))
            term = Form.basis(dom.dim, (i,), one_based=False).wedge(diff)
            out = term if out is None else out + term
        return out

    if not richardson:
        return central(step)
    d1 = central(step)
    d2 = central(step / 2.0)
    return d2 * (4.0 / 3.0) - d1 * (1.0 / 3.0)


# -- sphere frames ---------------------------------------------------------


@dataclass(frozen=True)
class FramedPoint:
    """A point of S^(N-1) with outward normal and oriented orthonormal frame."""

    point: np.ndarray
    normal: np.ndarray
    frame: np.ndarray  # rows are the N-1 tangent vectors

    @property
    def ambient_dim(self):
        return len(self.point)


def sphere_frame(p):
    """Deterministic oriented orthonormal tangent frame at a unit vector p."""
    p = np.asarray(p, dtype=np.float64)
    n = len(p)
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise ValueError("point is not on the unit sphere")
    normals, frames = sphere_frames(p[None, :])
    return FramedPoint(point=p, normal=normals[0], frame=frames[0])


def sphere_frames(X):
    """Batched frames: X is (K, N) of unit vectors; returns (normals, frames).

    The N-1 candidate axes are the coordinate axes excluding the one where
    |p_i| is largest (that axis is never needed: the remaining ones together
    with the normal always span).  Gram-Schmidt runs against the normal and
    the previously accepted vectors; the last frame vector is flipped where
    needed so that det[normal; frame] = +1.
    """
    X = np.asarray(X, dtype=np.float64)
    K, n = X.shape
    normals = X / np.linalg.norm(X, axis=1, keepdims=True)
    istar = np.argmax(np.abs(normals), axis=1)
    cols = np.arange(n - 1)[None, :]
    axes = cols + (cols >= istar[:, None])  # ascending axes, skipping istar
    frames = np.zeros((K, n - 1, n))
    eye = np.eye(n)
    for j in range(n - 1):
        v = eye[axes[:, j]]
        v = v - normals * np.einsum("ki,ki->k", v, normals)[:, None]
        for l in range(j):
            v = v - frames[:, l] * np.einsum("ki,ki->k", v, frames[:, l])[:, None]
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        frames[:, j] = v
    stacked = np.concatenate([normals[:, None, :], frames], axis=1)
    flip = np.linalg.det(stacked) < 0
    frames[flip, -1] *= -1.0
    return normals, frames


def pullback_sphere(form_or_field, fp):
    """Tangential restriction of an ambient form at a framed sphere point.

    Coefficients are taken against the orthonormal frame; components along
    the normal are discarded.  Returns a form in dimension N-1.
    """
    form = form_or_field(fp.point) if isinstance(form_or_field, FormField) else form_or_field
    return apply_linear(form, fp.frame)


def push_ambient(form, fp):
    """Express a frame-coordinate form as an ambient form at fp."""
    return apply_linear(form, fp.frame.T)


@dataclass(frozen=True)
class EulerSplit:
    """Radial/tangential split of an ambient form against the Euler field."""

    radial: Form  # (w-1)-form on the sphere frame
    tangential: Form  # w-form on the sphere frame
    framed: FramedPoint
    radius: float
    weight: int

    def reconstruct(self):
        """Ambient form r^(w-1) dr ∧ radial + r^w tangential at the point."""
        n = self.framed.ambient_dim
        dr = Form.from_terms(n, [((i,), self.framed.normal[i]) for i in range(n)], one_based=False)
        amb_p = push_ambient(self.radial, self.framed)
        amb_q = push_ambient(self.tangential, self.framed)
        r = self.radius
        w = self.weight
        return dr.wedge(amb_p) * r ** (w - 1) + amb_q * r**w


def euler_split(form_or_field, p, weight):
    """Split an ambient form at p into sphere radial/tangential parts.

    radial = r^-w i*(i_E form), tangential = r^-w i*(form), with E the Euler
    vector field (E = p).  For a form field this evaluates at p; the frame
    sits at p/|p|.  reconstruct() inverts the split exactly.
    """
    p = np.asarray(p, dtype=np.float64)
    r = float(np.linalg.norm(p))
    if r < 1e-12:
        raise ValueError("euler split is undefined at the origin")
    fp = sphere_frame(p / r)
    form = form_or_field(p) if isinstance(form_or_field, FormField) else form_or_field
    scale = r ** (-weight)
    radial = pullback_sphere(form.interior(p), fp) * scale
    tangential = pullback_sphere(form, fp) * scale
    return EulerSplit(radial, tangential, fp, r, weight)


# -- quadrature ------------------------------------------------------------


def sphere_samples(count, ambient_dim, seed_or_rng=0):
    """Uniform points on S^(ambient_dim - 1), deterministic per seed."""
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else np.random.default_rng(seed_or_rng)
    x = rng.standard_normal((count, ambient_dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sphere_area(sphere_dim):
    """Surface area of the unit sphere S^d embedded in R^(d+1)."""
    d = sphere_dim
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


def quad_sphere(density, ambient_dim, samples=20000, seed=0, batch=False):
    """Monte Carlo integral of a scalar density over S^(ambient_dim-1).

    density maps a FramedPoint -> float (or a (K, N) batch -> (K,) when
    batch=True).  Returns (value, standard_error).
    """
    X = sphere_samples(samples, ambient_dim, seed)
    if batch:
        vals = np.asarray(density(X), dtype=np.float64)
    else:
        normals, frames = sphere_frames(X)
        vals = np.array(
            [density(FramedPoint(X[i], normals[i], frames[i])) for i in range(samples)]
        )
    area = sphere_area(ambient_dim - 1)
    mean = float(np.mean(vals))
    se = float(np.std(vals) / math.sqrt(samples))
    return mean * area, se * area


def gauss_legendre_grid(lo, hi, nodes):
    """Tensor Gauss-Legendre nodes and weights on a box."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    dim = len(lo)
    x1, w1 = np.polynomial.legendre.leggauss(nodes)
    axes_x, axes_w = [], []
    for i in range(dim):
        mid, half = 0.5 * (lo[i] + hi[i]), 0.5 * (hi[i] - lo[i])
        axes_x.append(mid + half * x1)
        axes_w.append(half * w1)
    mesh = np.meshgrid(*axes_x, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*axes_w, indexing="ij")
    wts = np.prod(np.stack([wm.ravel() for wm in wmesh], axis=1), axis=1)
    return pts, wts


def quad_box(density_batch, lo, hi, nodes=10):
    """Tensor Gauss-Legendre integral of a batch density over a box.

    Returns (value, error_estimate); the estimate compares against a
    coarser rule with half the nodes per axis.
    """
    pts, wts = gauss_legendre_grid(lo, hi, nodes)
    val = float(np.dot(wts, np.asarray(density_batch(pts), dtype=np.float64)))
    coarse_nodes = max(2, nodes // 2)
    pts_c, wts_c = gauss_legendre_grid(lo, hi, coarse_nodes)
    val_c = float(np.dot(wts_c, np.asarray(density_batch(pts_c), dtype=np.float64)))
    return val, abs(val - val_c)


def quad_torus(density_batch, dim, period=2 * math.pi, nodes=32):
    """Trapezoidal integral over a flat torus; spectrally exact for trig data."""
    grid = np.linspace(0.0, period, nodes, endpoint=False)
    mesh = np.meshgrid(*([grid] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(density_batch(pts), dtype=np.float64)
    return float(np.mean(vals) * period**dim)


def quad_integrate(field, samples=20000, seed=0, nodes=10):
    """Integral of a top-grade form field over its chart.

    Sphere charts use Monte Carlo over uniform samples (the field is then
    called with a FramedPoint and must return the top form in frame
    coordinates, or a plain float density).  Boxes use tensor
    Gauss-Legendre, tori the trapezoidal rule.  Returns (value, error).
    """
    dom = field.domain

    if dom.kind == "sphere":

        def density(fp):
            out = field.func(fp)
            if isinstance(out, Form):
                return float(np.real(out.coefficient(tuple(range(dom.dim - 1)), one_based=False)))
            return float(out)

        return quad_sphere(density, dom.dim, samples=samples, seed=seed)

    def density_batch(pts):
        vals = np.empty(len(pts))
        top = tuple(range(dom.dim))
        for i, p in enumerate(pts):
            out = field(p)
            vals[i] = float(np.real(out.coefficient(top, one_based=False))) if isinstance(out, Form) else float(out)
        return vals

    if dom.kind == "box":
        return quad_box(density_batch, dom.lo, dom.hi, nodes=nodes)
    if dom.kind == "torus":
        val = quad_torus(density_batch, dom.dim, period=float(dom.hi[0] - dom.lo[0]), nodes=nodes)
        val2 = quad_torus(density_batch, dom.dim, period=float(dom.hi[0] - dom.lo[0]), nodes=max(4, nodes // 2))
        return val, abs(val - val2)
    raise ValueError(f"no quadrature for chart kind {dom.kind}")
