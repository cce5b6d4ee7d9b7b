"""Conformal vector fields, the energy density, and the vanishing mechanism.

The density lambda = Tr(F ∧ *F) is a top form (for anti-Hermitian F it is
-|F|^2 vol), conformal of weight n-3 in dimension n+1:
lambda(A, e^(2f) g) = e^((n-3) f) lambda(A, g).  For a conformal field X
with L_X g = 2 f g the Lie derivative obeys

    L_X lambda = (n-3) f lambda + 2 Tr(d_A(i_X F_A) ∧ *F_A),

and integration by parts gives ∫ eta L_X lambda = -∫ d(eta) ∧ i_X lambda
for compactly supported eta.  L_X lambda is computed by Cartan's formula;
at top grade d(lambda) = 0, so L_X lambda = d(i_X lambda) with a numeric d.

The cutoff squeeze realises the end of the vanishing argument: with the
profile eta_T (1 on |t| <= T, 0 on |t| >= 2T, |eta'| <= 2/T) any
Yang-Mills connection satisfies

    ∫ eta_T (n-3) lambda  <=  (6/T) ∫_{T <= |t| <= 2T} lambda,

so for finite total mass the right side tends to 0 while the left
stabilises at (n-3) times the mass: only zero mass survives.  The module
measures both sides for supplied slice-mass profiles, including the
infinite-energy negative control where the bound does not shrink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exterior import Form, MetricFrame, conformal_hodge, hodge
from .fields import FormField, d_numeric
from .gauge import covariant_d_at, curvature_field, trace_pair
from .structures import build_cylinder


# -- conformal vector fields -------------------------------------------------


@dataclass
class ConformalField:
    """Vector field X with L_X g = 2 f g on a chart.

    x_func: point -> (N,) vector; f_func: point -> float; metric_func is
    point -> (N, N) or None for the flat metric.
    """

    dim: int
    x_func: object
    f_func: object
    metric_func: object = None

    def x(self, p):
        return np.asarray(self.x_func(np.asarray(p, dtype=np.float64)), dtype=np.float64)

    def f(self, p):
        return float(self.f_func(np.asarray(p, dtype=np.float64)))

    def metric(self, p):
        if self.metric_func is None:
            return np.eye(self.dim)
        return np.asarray(self.metric_func(np.asarray(p, dtype=np.float64)), dtype=np.float64)

    def conformality_residual(self, p, h=1e-5):
        """|| L_X g - 2 f g || at p with numeric derivatives."""
        p = np.asarray(p, dtype=np.float64)
        n = self.dim
        g = self.metric(p)
        x_p = self.x(p)
        lie = np.zeros((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            dg_k = (self.metric(p + e) - self.metric(p - e)) / (2 * h)
            lie += x_p[k] * dg_k
        dx = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            dx[i] = (self.x(p + e) - self.x(p - e)) / (2 * h)
        lie += g @ dx + dx.T @ g  # g_kj d_i X^k + g_ik d_j X^k
        return float(np.max(np.abs(lie - 2.0 * self.f(p) * g)))


def dilation_field(dim):
    """X = sum x^i d_i on flat space; L_X g = 2 g, so f = 1."""
    return ConformalField(dim, lambda p: p, lambda p: 1.0)


def cone_radial_field(dim):
    """X = d_t on the cylinder chart with cone metric e^(2t) delta; f = 1."""

    def x(p):
        e = np.zeros(dim)
        e[0] = 1.0
        return e

    return ConformalField(dim, x, lambda p: 1.0, lambda p: math.exp(2.0 * p[0]) * np.eye(dim))


# -- algebraic conformal checks ----------------------------------------------


def weight_check(f2, f_value, n):
    """Residual of lambda(A, e^(2f) g) = e^((n-3) f) lambda(A, g).

    f2 is a grade-2 form in dimension n+1 (matrix- or scalar-valued); the
    check is algebraic (no differentiation) and exact up to rounding.
    """
    if f2.dim != n + 1:
        raise ValueError("weight check expects a form in dimension n+1")
    lam0 = trace_pair(f2, hodge(f2))
    lam_f = trace_pair(f2, conformal_hodge(f2, MetricFrame(f2.dim), f_value))
    top = tuple(range(f2.dim))
    c0 = complex(np.asarray(lam0.coefficient(top, one_based=False)).item()) if lam0.nterms else 0.0
    cf = complex(np.asarray(lam_f.coefficient(top, one_based=False)).item()) if lam_f.nterms else 0.0
    expected = math.exp((n - 3) * f_value) * c0
    scale = max(1.0, abs(expected))
    return abs(cf - expected) / scale


def cone_equivalence_check(f2, t_value, cat_or_cyl, rng=None):
    """Residual of star_cone F + star_cone Q_cone ∧ F = e^((n-3)t) (star F + star Q_Z ∧ F).

    Q_cone = e^(4t) Q_Z and the cone metric is e^(2t) times the cylinder
    metric in the adapted frame, so both sides agree identically for every
    2-form F; residual is relative and should sit at machine precision.
    """
    cyl = cat_or_cyl if hasattr(cat_or_cyl, "q_z") else build_cylinder(cat_or_cyl)
    n = cyl.n
    if f2.dim != cyl.dim:
        raise ValueError(f"cone equivalence expects a 2-form in dimension {cyl.dim}")
    metric_cone = MetricFrame(cyl.dim, conformal=t_value)
    q_cone = cyl.q_z * math.exp(4.0 * t_value)
    lhs = hodge(f2, metric_cone) + hodge(q_cone, metric_cone).wedge(f2)
    rhs = (hodge(f2) + hodge(cyl.q_z).wedge(f2)) * math.exp((n - 3) * t_value)
    denom = max(1.0, rhs.norm())
    return (lhs - rhs).norm() / denom


# -- Lie derivative identity ---------------------------------------------


def lambda_field(a_field, h=None):
    """Evaluator x -> Tr(F ∧ *F) (flat metric) as a top-form field."""
    f_field = curvature_field(a_field, h=h)

    def func(p):
        f = f_field(p)
        return trace_pair(f, hodge(f))

    return FormField(a_field.domain, func)


def lemma41_check(a_field, conf, points=None, count=50, seed=0, h=None, n=None):
    """Max residual of L_X lambda = (n-3) f lambda + 2 Tr(d_A(i_X F) ∧ *F).

    L_X lambda is d(i_X lambda) by Cartan at top grade, with a numeric d;
    the right side uses the covariant derivative of the contracted
    curvature.  O(h^2) for smooth potentials and conformal fields.
    """
    dom = a_field.domain
    step = dom.h if h is None else h
    dim = dom.dim
    n_base = dim - 1 if n is None else n
    if points is None:
        rng = np.random.default_rng(seed)
        points = dom.interior_samples(count, rng, margin=5 * step)
    f_field = curvature_field(a_field, h=step)
    lam_field = lambda_field(a_field, h=step)

    def ix_lambda(p):
        return lam_field(p).interior(conf.x(p))

    def ix_f(p):
        return f_field(p).interior(conf.x(p))

    ixl_field = FormField(dom, ix_lambda)
    ixf_field = FormField(dom, ix_f)
    top = tuple(range(dim))
    worst = 0.0
    for p in points:
        lhs = d_numeric(ixl_field, p, h=step)
        rhs = lam_field(p) * (float(n_base - 3) * conf.f(p)) + trace_pair(
            covariant_d_at(a_field, ixf_field, p, h=step), hodge(f_field(p))
        ) * 2.0
        diff = lhs - rhs
        val = abs(complex(np.asarray(diff.coefficient(top, one_based=False)).item())) if diff.nterms else 0.0
        worst = max(worst, val)
    return worst


# -- integration by parts ------------------------------------------------


def ibp_check(lam_batch, x_batch, eta_batch, eta_grad_batch, kind, dim, h=1e-3, nodes=24, lo=None, hi=None, period=2 * math.pi):
    """Both sides of ∫ eta L_X lambda = -∫ d(eta) ∧ i_X lambda.

    All inputs are batch callables over (K, dim) points: lam_batch gives
    the top-form coefficient, x_batch the vector field, eta_batch the
    cutoff and eta_grad_batch its analytic gradient.  In components
    (derived from i_X vol and e^i ∧ e^(complement i)):

        L_X lambda = sum_i d_i(lambda X^i) vol,
        d(eta) ∧ i_X lambda = sum_i d_i(eta) X^i lambda vol,

    where d_i(lambda X^i) is a central difference with step h.  kind is
    "torus" (trapezoid rule, spectrally exact for smooth periodic data) or
    "box" (tensor Gauss-Legendre).  Returns (lhs, rhs, |lhs - rhs|).
    """

    def flux_div(pts):
        out = np.zeros(len(pts))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            up = lam_batch(pts + e) * x_batch(pts + e)[:, i]
            dn = lam_batch(pts - e) * x_batch(pts - e)[:, i]
            out += (up - dn) / (2.0 * h)
        return out

    def lhs_density(pts):
        return eta_batch(pts) * flux_div(pts)

    def rhs_density(pts):
        lam = lam_batch(pts)
        return -np.einsum("ki,ki->k", eta_grad_batch(pts), x_batch(pts)) * lam

    if kind == "torus":
        from .fields import quad_torus

        lhs = quad_torus(lhs_density, dim, period=period, nodes=nodes)
        rhs = quad_torus(rhs_density, dim, period=period, nodes=nodes)
    elif kind == "box":
        from .fields import quad_box

        lhs, _ = quad_box(lhs_density, lo, hi, nodes=nodes)
        rhs, _ = quad_box(rhs_density, lo, hi, nodes=nodes)
    else:
        raise ValueError("kind must be 'torus' or 'box'")
    return lhs, rhs, abs(lhs - rhs)


# -- cutoff squeeze ------------------------------------------------------


@dataclass(frozen=True)
class CutoffProfile:
    """C^1 piecewise-cubic cutoff: 1 on |t| <= T, 0 on |t| >= 2T.

    The ramp is the cubic smoothstep, so the slope bound is
    max |eta'| = 1.5/T, within the required |eta'| <= 2/T.
    """

    T: float

    def eta(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        s = np.clip((t - self.T) / self.T, 0.0, 1.0)
        return 1.0 - s * s * (3.0 - 2.0 * s)

    def deta(self, t):
        t = np.asarray(t, dtype=np.float64)
        a = np.abs(t)
        s = np.clip((a - self.T) / self.T, 0.0, 1.0)
        inside = (a > self.T) & (a < 2.0 * self.T)
        return np.where(inside, -6.0 * s * (1.0 - s) / self.T * np.sign(t), 0.0)

    @property
    def max_slope(self):
        return 1.5 / self.T


def _simpson(f, a, b, nodes=4097):
    t = np.linspace(a, b, nodes)
    y = f(t)
    return float(np.trapezoid(y, t)) if nodes < 5 else float(_simpson_arr(y, t[1] - t[0]))


def _simpson_arr(y, dt):
    m = len(y) - 1
    if m % 2 == 1:
        head = 3.0 * dt / 8.0 * (y[0] + 3 * y[1] + 3 * y[2] + y[3])
        return head + _simpson_arr(y[3:], dt)
    return dt / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2]))


@dataclass
class SqueezeRow:
    T: float
    lhs: float  # ∫ eta (n-3) lambda
    rhs: float  # (6/T) ∫_{T<=|t|<=2T} lambda
    ratio: float  # rhs / lhs


def cutoff_squeeze(mass, t_values, n):
    """Evaluate the squeeze inequality sides for a slice-mass profile.

    mass(t) is the lambda mass of the slice {t} x M.  For each cutoff
    scale T the row carries lhs = ∫ eta_T (n-3) mass, the Yang-Mills bound
    rhs = (6/T) ∫_{T<=|t|<=2T} mass, and rhs/lhs.  Finite total mass makes
    rhs -> 0 (squeezing the mass to zero under the Yang-Mills hypothesis);
    an infinite-energy profile keeps rhs bounded away from zero.
    """
    rows = []
    for T in t_values:
        prof = CutoffProfile(float(T))
        lhs = (n - 3) * _simpson(lambda t: prof.eta(t) * mass(t), -2 * T, 2 * T)
        band = _simpson(lambda t: mass(t), T, 2 * T) + _simpson(lambda t: mass(t), -2 * T, -T)
        rhs = 6.0 / T * band
        rows.append(SqueezeRow(float(T), lhs, rhs, rhs / lhs if lhs != 0 else float("inf")))
    return rows


def exponential_profile(rate=6.0):
    return lambda t: np.exp(-rate * np.abs(t))


def constant_profile(value=1.0):
    return lambda t: np.full_like(np.asarray(t, dtype=np.float64), value)


def compact_profile(width=1.0):
    def mass(t):
        t = np.asarray(t, dtype=np.float64)
        s = np.clip(np.abs(t) / width, 0.0, 1.0)
        return (1.0 - s * s) ** 2

    return mass


def trajectory_profile(traj):
    """Even slice-mass profile from an integrated flow trajectory.

    Uses the trajectory slice energy for |t| inside the grid and the
    fitted exponential tail beyond it.
    """
    from .csflow import _fit_tail_rate

    t_grid = traj.t
    y = traj.slice_energy
    rate = _fit_tail_rate(t_grid, y)
    t_end = t_grid[-1]
    y_end = max(y[-1], 0.0)

    def mass(t):
        a = np.abs(np.asarray(t, dtype=np.float64))
        inside = np.interp(a, t_grid, y)
        if rate is not None and rate < 0:
            outside = y_end * np.exp(rate * (a - t_end))
        else:
            outside = np.full_like(a, y_end)
        return np.where(a <= t_end, inside, outside)

    return mass
