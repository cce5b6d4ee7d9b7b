"""Chern-Simons functional, its one-form, and reduced gradient-flow models.

The functional on the nearly Kähler six-sphere is

    CS(A) = ∫ Tr(A ∧ dA + 2/3 A ∧ A ∧ A) ∧ star_M P
          = 1/(n-3) ∫ Tr(F_A ∧ F_A) ∧ star_M Q,

with the second expression following from d(star Q) = (n-3) star P and
Stokes.  Traces are in the fundamental representation.  Evaluation is
Monte Carlo over seeded uniform sphere samples; the sphere fields P and Q
come from the constant cone 4-form, the intrinsic exterior derivative of
the potential from the ambient one by central differences, and both
top-form pairings reduce to pointwise inner products (alpha ∧ star beta =
<alpha, beta> vol), which makes the whole integrand frame-invariant.

The one-form is Gamma(beta)_A = 2 ∫ Tr(F_A ∧ beta) ∧ star_M P, the first
variation of CS, and CS equals the path integral of Gamma from the zero
connection (closedness of Gamma makes it path independent; both facts are
desk-checked by the tests).

Reduced models replace CS by a polynomial W(phi) and the L^2 metric by a
positive matrix G.  The flow is phi' = -c G^-1 grad W with c calibrated by
the contract dCS/dt = -2 ||Adot||^2 (hence c = 1/2), and every decay
diagnostic of the energy ladder is measured on the integrated trajectory:
the J(T) identities, the two differential inequalities, exponential decay
of CS with rate at least 2n-6, and the weighted tails
L_delta(T) = ∫_T^inf e^(delta t) ||F||^2 dt with rate delta - 2n + 6.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import Form, to_dense
from .fields import FormField, sphere_area, sphere_frames, sphere_samples
from .gauge import SIGMA_1, SIGMA_2, SIGMA_3, su2_generators
from .structures import build_cone, catalog

_TRIPLES = list(itertools.combinations(range(6), 3))
_QUADS = list(itertools.combinations(range(6), 4))
_PAIR_SPLITS = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
_PAIR_SIGNS = [1.0, -1.0, 1.0]

_PSI0_DENSE = None


def _psi0_dense():
    global _PSI0_DENSE
    if _PSI0_DENSE is None:
        _PSI0_DENSE = to_dense(build_cone(catalog("nk6")).four_form)
    return _PSI0_DENSE


# -- ambient gauge fields ----------------------------------------------------


class AmbientGaugeField:
    """Batched su(d)-valued 1-form field on R^dim.

    eval_batch(X) maps (K, dim) points to (K, dim, d, d) coefficient
    arrays of sum_i A_i dx^i.  The per-point Form interface serves the
    slower exterior-algebra cross checks.
    """

    dim = 7
    matrix_dim = 2

    def eval_batch(self, X):  # pragma: no cover - interface
        raise NotImplementedError

    def form_at(self, p):
        coeffs = self.eval_batch(np.asarray(p, dtype=np.float64)[None, :])[0]
        masks = np.arange(self.dim, dtype=np.int64)
        return Form(self.dim, 1 << masks, coeffs)

    def as_form_field(self, domain):
        return FormField(domain, self.form_at)


class LinearCombinationField(AmbientGaugeField):
    def __init__(self, fields, weights):
        self.fields = list(fields)
        self.weights = list(weights)
        self.dim = self.fields[0].dim
        self.matrix_dim = self.fields[0].matrix_dim

    def eval_batch(self, X):
        out = self.weights[0] * self.fields[0].eval_batch(X)
        for f, w in zip(self.fields[1:], self.weights[1:]):
            out = out + w * f.eval_batch(X)
        return out


class PureGaugeSU2(AmbientGaugeField):
    """A = g^-1 dg for a smooth polynomial map g: R^7 -> SU(2).

    g is the unit quaternion u/|u| with polynomial components; u_0 >= 1
    everywhere, so the map is globally smooth and the field is flat.  The
    derivative of g is analytic, so only dA needs finite differences.
    """

    def __init__(self):
        self.dim = 7
        self.matrix_dim = 2

    @staticmethod
    def _u_du(X):
        x = X
        K = len(X)
        u = np.empty((K, 4))
        u[:, 0] = 1.0 + x[:, 0] ** 2
        u[:, 1] = x[:, 1] * x[:, 2] + 0.3 * x[:, 3]
        u[:, 2] = 0.5 * x[:, 4] - 0.2 * x[:, 5] * x[:, 6]
        u[:, 3] = 0.4 * x[:, 6] + x[:, 0] * x[:, 1]
        du = np.zeros((K, 7, 4))
        du[:, 0, 0] = 2.0 * x[:, 0]
        du[:, 1, 1] = x[:, 2]
        du[:, 2, 1] = x[:, 1]
        du[:, 3, 1] = 0.3
        du[:, 4, 2] = 0.5
        du[:, 5, 2] = -0.2 * x[:, 6]
        du[:, 6, 2] = -0.2 * x[:, 5]
        du[:, 6, 3] = 0.4
        du[:, 0, 3] = x[:, 1]
        du[:, 1, 3] = x[:, 0]
        return u, du

    @staticmethod
    def _quat_to_su2(q):
        g = np.zeros(q.shape[:-1] + (2, 2), dtype=np.complex128)
        g += q[..., 0, None, None] * np.eye(2)
        g += 1j * q[..., 1, None, None] * SIGMA_1
        g += 1j * q[..., 2, None, None] * SIGMA_2
        g += 1j * q[..., 3, None, None] * SIGMA_3
        return g

    def group_element(self, X):
        u, _ = self._u_du(np.asarray(X, dtype=np.float64))
        return self._quat_to_su2(u / np.linalg.norm(u, axis=-1, keepdims=True))

    def eval_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        u, du = self._u_du(X)
        norm = np.linalg.norm(u, axis=-1, keepdims=True)
        q = u / norm
        # d(u/|u|) = du/|u| - u (u . du)/|u|^3
        udu = np.einsum("kc,kic->ki", u, du)
        dq = du / norm[:, None, :] - u[:, None, :] * (udu / norm[:, None, 0] ** 3)[:, :, None]
        g = self._quat_to_su2(q)
        dg = self._quat_to_su2(dq)
        ginv = np.conj(np.swapaxes(g, -1, -2))  # unitary
        return np.einsum("kab,kibc->kiac", ginv, dg)


class PolynomialSU2(AmbientGaugeField):
    """Smooth non-flat su(2) field with affine coefficient polynomials."""

    def __init__(self, dim=7, scale=0.25, seed=11):
        self.dim = dim
        self.matrix_dim = 2
        rng = np.random.default_rng(seed)
        self.const = scale * rng.standard_normal((dim, 3))
        self.linear = scale * rng.standard_normal((dim, 3, dim))
        self.tau = np.stack(su2_generators())

    def eval_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        coeff = self.const[None, :, :] + np.einsum("icj,kj->kic", self.linear, X)
        return np.einsum("kic,cab->kiab", coeff, self.tau)


class AbelianLinearField(AmbientGaugeField):
    """u(1)-valued A = i x_a dx_b (so F = i e_ab); closed-form everything."""

    def __init__(self, dim=7, a=0, b=1):
        self.dim = dim
        self.matrix_dim = 1
        self.a, self.b = a, b

    def eval_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros((len(X), self.dim, 1, 1), dtype=np.complex128)
        out[:, self.b, 0, 0] = 1j * X[:, self.a]
        return out


# -- batched Chern-Simons evaluation ----------------------------------------


def _frame_data(field, X, fd_h):
    """Frame components of A and its intrinsic exterior derivative.

    Returns (a, da, frames, normals): a is (K, 6, d, d), da is
    (K, 6, 6, d, d) antisymmetric; da is the pullback of the ambient
    central-difference dA, which equals the intrinsic derivative of the
    pulled-back potential because pullback commutes with d.
    """
    K = len(X)
    d = field.matrix_dim
    normals, frames = sphere_frames(X)
    a_amb = field.eval_batch(X)
    partial = np.empty((7, K, 7, d, d), dtype=np.complex128)
    for i in range(7):
        e = np.zeros(7)
        e[i] = fd_h
        partial[i] = (field.eval_batch(X + e) - field.eval_batch(X - e)) / (2.0 * fd_h)
    da_amb = np.transpose(partial, (1, 0, 2, 3, 4)) - np.transpose(partial, (1, 2, 0, 3, 4))
    a = np.einsum("kai,kiuv->kauv", frames, a_amb)
    da = np.einsum("kai,kbj,kijuv->kabuv", frames, frames, da_amb, optimize=True)
    return a, da, frames, normals


def _sphere_structure_components(frames, normals):
    """Frame components of the sphere fields P (triples) and Q (quadruples)."""
    psi = _psi0_dense()
    K = len(frames)
    psi_n = np.einsum("pqrs,kp->kqrs", psi, normals)
    p_comp = np.empty((K, len(_TRIPLES)))
    for idx, (ia, ib, ic) in enumerate(_TRIPLES):
        p_comp[:, idx] = np.einsum(
            "kqrs,kq,kr,ks->k", psi_n, frames[:, ia], frames[:, ib], frames[:, ic], optimize=True
        )
    q_comp = np.empty((K, len(_QUADS)))
    for idx, (ia, ib, ic, id_) in enumerate(_QUADS):
        q_comp[:, idx] = np.einsum(
            "pqrs,kp,kq,kr,ks->k",
            psi,
            frames[:, ia],
            frames[:, ib],
            frames[:, ic],
            frames[:, id_],
            optimize=True,
        )
    return p_comp, q_comp


def _cs_densities(a, da, p_comp, q_comp, n=6):
    """Pointwise densities of the two CS expressions.

    density1 = <Tr(a ∧ da + 2/3 a^3), P>, density2 = <Tr(F ∧ F), Q>/(n-3);
    both are the coefficients of the top form against the oriented frame.
    """
    w1 = np.einsum("kauv,kbcvu->kabc", a, da, optimize=True)
    m2 = np.einsum("kauv,kbvw->kabuw", a, a, optimize=True)
    t3 = np.einsum("kabuv,kcvu->kabc", m2, a, optimize=True)
    c3 = np.empty((len(a), len(_TRIPLES)), dtype=np.complex128)
    for idx, (ia, ib, ic) in enumerate(_TRIPLES):
        lin = w1[:, ia, ib, ic] - w1[:, ib, ia, ic] + w1[:, ic, ia, ib]
        # trace of the antisymmetrised cube collapses to 3(Tr abc - Tr acb)
        cub = 3.0 * (t3[:, ia, ib, ic] - t3[:, ia, ic, ib])
        c3[:, idx] = lin + (2.0 / 3.0) * cub
    density1 = np.einsum("ki,ki->k", np.real(c3), p_comp)

    f = da + (m2 - np.swapaxes(m2, 1, 2))
    c4 = np.empty((len(a), len(_QUADS)), dtype=np.complex128)
    for idx, quad in enumerate(_QUADS):
        val = 0.0
        for (s1, s2), sgn in zip(_PAIR_SPLITS, _PAIR_SIGNS):
            fa = f[:, quad[s1[0]], quad[s1[1]]]
            fb = f[:, quad[s2[0]], quad[s2[1]]]
            val = val + 2.0 * sgn * np.einsum("kuv,kvu->k", fa, fb)
        c4[:, idx] = val
    density2 = np.einsum("ki,ki->k", np.real(c4), q_comp) / float(n - 3)
    return density1, density2


@dataclass(frozen=True)
class CsEstimate:
    value: float
    stderr: float
    second_value: float
    second_stderr: float
    samples: int
    seed: int

    @property
    def consistency_gap(self):
        return abs(self.value - self.second_value)

    @property
    def consistency_sigma(self):
        return math.sqrt(self.stderr**2 + self.second_stderr**2)


_CHUNK = 8192


def cs_evaluate(a_field, samples=100000, seed=0, fd_h=1e-4):
    """Monte Carlo Chern-Simons value on S^6, with both expressions.

    Returns a CsEstimate carrying the primary value, the curvature-based
    second expression, and their standard errors.  Deterministic per seed.
    """
    X = sphere_samples(samples, 7, seed)
    d1 = np.empty(samples)
    d2 = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        sl = slice(start, min(start + _CHUNK, samples))
        a, da, frames, normals = _frame_data(a_field, X[sl], fd_h)
        p_comp, q_comp = _sphere_structure_components(frames, normals)
        d1[sl], d2[sl] = _cs_densities(a, da, p_comp, q_comp)
    area = sphere_area(6)
    return CsEstimate(
        value=float(np.mean(d1) * area),
        stderr=float(np.std(d1) / math.sqrt(samples) * area),
        second_value=float(np.mean(d2) * area),
        second_stderr=float(np.std(d2) / math.sqrt(samples) * area),
        samples=samples,
        seed=seed,
    )


def cs_one_form(a_field, beta_field, samples=20000, seed=0, fd_h=1e-4):
    """Gamma(beta)_A = 2 ∫ Tr(F_A ∧ beta) ∧ star_M P, with standard error."""
    X = sphere_samples(samples, 7, seed)
    vals = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        sl = slice(start, min(start + _CHUNK, samples))
        a, da, frames, normals = _frame_data(a_field, X[sl], fd_h)
        p_comp, _ = _sphere_structure_components(frames, normals)
        b_amb = beta_field.eval_batch(X[sl])
        b = np.einsum("kai,kiuv->kauv", frames, b_amb)
        m2 = np.einsum("kauv,kbvw->kabuw", a, a, optimize=True)
        f = da + (m2 - np.swapaxes(m2, 1, 2))
        g3 = np.einsum("kabuv,kcvu->kabc", f, b, optimize=True)
        c3 = np.empty((len(a), len(_TRIPLES)), dtype=np.complex128)
        for idx, (ia, ib, ic) in enumerate(_TRIPLES):
            c3[:, idx] = g3[:, ia, ib, ic] - g3[:, ia, ic, ib] + g3[:, ib, ic, ia]
        vals[sl] = 2.0 * np.einsum("ki,ki->k", np.real(c3), p_comp)
    area = sphere_area(6)
    return float(np.mean(vals) * area), float(np.std(vals) / math.sqrt(samples) * area)


def cs_path_integral(a_field, path="linear", beta_field=None, nodes=16, samples=20000, seed=0, fd_h=1e-4):
    """∫_0^1 Gamma_{A(s)}(A'(s)) ds along a path from 0 to A.

    Paths: "linear" A(s) = sA; "quadratic" A(s) = s^2 A; "detour"
    A(s) = sA + s(1-s) beta (needs beta_field).  Gauss-Legendre in s; all
    nodes share the same sample set, so path differences are quadrature
    error, not Monte Carlo noise.
    """
    x1, w1 = np.polynomial.legendre.leggauss(nodes)
    s_nodes = 0.5 * (x1 + 1.0)
    s_weights = 0.5 * w1
    total = 0.0
    for s, w in zip(s_nodes, s_weights):
        if path == "linear":
            a_s = LinearCombinationField([a_field], [s])
            adot = LinearCombinationField([a_field], [1.0])
        elif path == "quadratic":
            a_s = LinearCombinationField([a_field], [s * s])
            adot = LinearCombinationField([a_field], [2.0 * s])
        elif path == "detour":
            if beta_field is None:
                raise ValueError("detour path needs beta_field")
            a_s = LinearCombinationField([a_field, beta_field], [s, s * (1.0 - s)])
            adot = LinearCombinationField([a_field, beta_field], [1.0, 1.0 - 2.0 * s])
        else:
            raise ValueError(f"unknown path {path!r}")
        gamma, _ = cs_one_form(a_s, adot, samples=samples, seed=seed, fd_h=fd_h)
        total += w * gamma
    return total


# -- reduced models ----------------------------------------------------------


class ModelError(ValueError):
    """Raised for malformed or inadmissible reduced-model files."""


@dataclass(frozen=True)
class ReducedModel:
    """Finite-dimensional stand-in for the Chern-Simons flow.

    W is a polynomial in k variables (list of (coefficient, exponent
    vector) monomials) standing for CS; gram is the positive-definite
    kinetic matrix standing for the L^2 metric; endpoints are the declared
    flat connections (critical points with W = 0).  c is the flow
    normalisation, calibrated to 1/2 by dCS/dt = -2 ||Adot||^2.
    """

    n: int
    k: int
    terms: tuple
    gram: np.ndarray
    endpoints: tuple
    c: float = 0.5
    name: str = ""

    def potential(self, phi):
        phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
        out = np.zeros(len(phi))
        for coeff, exps in self.terms:
            out += coeff * np.prod(phi ** np.asarray(exps), axis=1)
        return out if out.shape[0] > 1 else float(out[0])

    def gradient(self, phi):
        phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
        out = np.zeros_like(phi)
        for coeff, exps in self.terms:
            exps = np.asarray(exps)
            base = phi ** exps
            for j in range(self.k):
                if exps[j] == 0:
                    continue
                cols = base.copy()
                cols[:, j] = exps[j] * phi[:, j] ** (exps[j] - 1)
                out[:, j] += coeff * np.prod(cols, axis=1)
        return out if out.shape[0] > 1 else out[0]

    def validate(self):
        if self.n < 4:
            raise ModelError("base dimension n must be at least 4")
        if self.k < 1:
            raise ModelError("need at least one reduced coordinate")
        if not self.terms:
            raise ModelError("potential W is empty")
        for coeff, exps in self.terms:
            if len(exps) != self.k:
                raise ModelError("monomial exponent vector has wrong length")
        g = self.gram
        if g.shape != (self.k, self.k):
            raise ModelError("kinetic matrix has wrong shape")
        if not np.allclose(g, g.T, atol=1e-12):
            raise ModelError("kinetic matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise ModelError("kinetic matrix must be positive definite")
        for ep in self.endpoints:
            if abs(self.potential(ep)) > 1e-10:
                raise ModelError(f"declared endpoint {ep} has W != 0")
            if np.max(np.abs(self.gradient(ep))) > 1e-8:
                raise ModelError(f"declared endpoint {ep} is not critical")
        return self


def load_model(path):
    """Load and validate a reduced model from its JSON text format."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file is not valid JSON: {exc}") from exc
    missing = [key for key in ("n", "k", "W", "G", "endpoints") if key not in raw]
    if missing:
        raise ModelError(f"model file misses required keys: {missing}")
    terms = tuple((float(c), tuple(int(e) for e in exps)) for c, exps in raw["W"])
    model = ReducedModel(
        n=int(raw["n"]),
        k=int(raw["k"]),
        terms=terms,
        gram=np.asarray(raw["G"], dtype=np.float64),
        endpoints=tuple(np.asarray(ep, dtype=np.float64) for ep in raw["endpoints"]),
        c=float(raw.get("c", 0.5)),
        name=str(raw.get("name", "")),
    )
    return model.validate()


@dataclass
class Trajectory:
    """Integrated flow with per-step energy diagnostics (state functions)."""

    model: ReducedModel
    t: np.ndarray
    phi: np.ndarray
    cs: np.ndarray
    kinetic: np.ndarray
    curvature_energy: np.ndarray
    slice_energy: np.ndarray
    dt: float
    diverged: bool = False

    @property
    def converged(self):
        if self.diverged:
            return False
        end = self.phi[-1]
        dist = min(np.linalg.norm(end - ep) for ep in self.model.endpoints)
        return bool(dist < 1e-5)


def flow_integrate(model, phi0, t_end=2.5, dt=1e-3):
    """RK4 integration of phi' = -c G^-1 grad W with stored diagnostics."""
    ginv = np.linalg.inv(model.gram)
    c = model.c

    def rhs(phi):
        return -c * ginv @ model.gradient(phi)

    nsteps = int(round(t_end / dt))
    phi = np.empty((nsteps + 1, model.k))
    phi[0] = np.asarray(phi0, dtype=np.float64)
    diverged = False
    for i in range(nsteps):
        y = phi[i]
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        phi[i + 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(phi[i + 1])) or np.linalg.norm(phi[i + 1]) > 1e8:
            phi = phi[: i + 1]
            diverged = True
            break
    steps = len(phi)
    t = np.arange(steps) * dt
    cs = np.atleast_1d(model.potential(phi))
    grad = np.atleast_2d(model.gradient(phi))
    phidot = -c * grad @ ginv.T
    kinetic = np.einsum("ti,ij,tj->t", phidot, model.gram, phidot)
    curvature = kinetic - (model.n - 3) * cs
    return Trajectory(
        model=model,
        t=t,
        phi=phi,
        cs=cs,
        kinetic=kinetic,
        curvature_energy=curvature,
        slice_energy=kinetic + curvature,
        dt=dt,
        diverged=diverged,
    )


# -- decay diagnostics -------------------------------------------------------


def _integral_back(y, dt, tail=0.0):
    """Cumulative integral from each grid point to the end, O(dt^4).

    Simpson pairs walk backwards from both parities; the odd parity is
    seeded with a cubic Newton-Cotes rule on the last subinterval.
    """
    m = len(y) - 1
    if m < 3:
        raise ValueError("need at least four samples")
    out = np.empty_like(y)
    out[m] = tail
    last = dt * (y[m - 3] - 5.0 * y[m - 2] + 19.0 * y[m - 1] + 9.0 * y[m]) / 24.0
    out[m - 1] = tail + last
    for i in range(m - 2, -1, -1):
        out[i] = out[i + 2] + dt / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2])
    return out


def _fit_tail_rate(t, y, lo=1e-12):
    """Least-squares exponential rate of the positive tail of y."""
    good = y > lo
    if good.sum() < 8:
        return None
    idx = np.nonzero(good)[0]
    idx = idx[-min(len(idx), 200):]
    slope = np.polyfit(t[idx], np.log(y[idx]), 1)[0]
    return float(slope)


def _d4(y, dt):
    out = np.full_like(y, np.nan)
    out[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * dt)
    return out


@dataclass
class DecayReport:
    """Measured decay ladder of one trajectory.

    Residuals and margins come with the integrator step attached; rates
    are least-squares slopes of the log over the window where CS lies in
    [fit_lo, fit_hi]; constants C are sup-fits over the same window.
    """

    n: int
    dt: float
    converged: bool
    residual_dj_dcs: float  # dJ/dT = dCS/dT + (n-3) CS
    residual_dj_curv: float  # dJ/dT = -2 ||F||^2 - (n-3) CS
    residual_dj_kin: float  # dJ/dT = -2 ||Adot||^2 + (n-3) CS
    residual_telescope: float
    margin_decay_ineq: float  # dCS/dT + 2(n-3) CS <= 0, margin = -max(...)
    margin_monotone: float  # dCS/dT <= 0
    cs_min: float
    j_min: float
    j_increase: float  # max forward increment of J (should be <= 0)
    cs_rate: float | None
    cs_constant: float | None
    ldelta: dict = field(default_factory=dict)  # delta -> (rate, constant)
    admissibility_margin: float = 0.0  # min curvature energy
    j_tail: float = 0.0
    flags: list = field(default_factory=list)

    def decay_ok(self, rate_tol=0.05):
        target = -(2 * self.n - 6)
        return self.cs_rate is not None and self.cs_rate <= target + rate_tol

    def ldelta_ok(self, rate_tol=0.05):
        out = {}
        for delta, (rate, _c) in self.ldelta.items():
            target = delta - (2 * self.n - 6)
            out[delta] = rate is not None and rate <= target + rate_tol
        return out


def decay_diagnostics(traj, deltas=(1.0, 3.0, 5.0), fit_lo=1e-10, fit_hi=1e-3):
    """Measure every identity, inequality, and decay rate on a trajectory."""
    model = traj.model
    n = model.n
    nm3 = n - 3
    t, cs = traj.t, traj.cs
    kin, curv, sl = traj.kinetic, traj.curvature_energy, traj.slice_energy
    dt = traj.dt
    flags = []
    if not traj.converged:
        flags.append("inconclusive: trajectory did not converge to a declared endpoint")

    rate_sl = _fit_tail_rate(t, sl)
    tail = 0.0
    if rate_sl is not None and rate_sl < -1e-6 and sl[-1] > 0:
        tail = float(sl[-1] / (-rate_sl))
    j = _integral_back(sl, dt, tail=tail)

    dj = _d4(j, dt)
    dcs = _d4(cs, dt)
    win = slice(2, -2)
    residual_dj_dcs = float(np.max(np.abs(dj[win] - (dcs[win] + nm3 * cs[win]))))
    residual_dj_curv = float(np.max(np.abs(dj[win] + 2.0 * curv[win] + nm3 * cs[win])))
    residual_dj_kin = float(np.max(np.abs(dj[win] + 2.0 * kin[win] - nm3 * cs[win])))

    m = len(t) - 1
    i0, i1 = max(2, m // 10), max(3, (8 * m) // 10)
    int_sl = _integral_back(sl, dt, 0.0)
    int_cs = _integral_back(cs, dt, 0.0)
    lhs = cs[i1] - cs[i0]
    rhs = -(int_sl[i0] - int_sl[i1]) - nm3 * (int_cs[i0] - int_cs[i1])
    residual_telescope = float(abs(lhs - rhs))

    margin_decay = -float(np.nanmax(dcs[win] + 2.0 * nm3 * cs[win]))
    margin_mono = -float(np.nanmax(dcs[win]))

    window = np.nonzero((cs >= fit_lo) & (cs <= fit_hi))[0]
    cs_rate = cs_const = None
    ld = {}
    if len(window) >= 8:
        cs_rate = float(np.polyfit(t[window], np.log(cs[window]), 1)[0])
        cs_const = float(np.max(cs[window] * np.exp((2 * n - 6) * t[window])))
        for delta in deltas:
            y = np.exp(delta * t) * sl
            tail_d = 0.0
            if rate_sl is not None and rate_sl + delta < -1e-6 and sl[-1] > 0:
                tail_d = float(y[-1] / (-(rate_sl + delta)))
            ldelta_curve = _integral_back(y, dt, tail=tail_d)
            pos = ldelta_curve[window] > 0
            if pos.sum() >= 8:
                rate = float(np.polyfit(t[window][pos], np.log(ldelta_curve[window][pos]), 1)[0])
                cst = float(np.max(ldelta_curve[window] * np.exp(-(delta - 2 * n + 6) * t[window])))
            else:
                rate = cst = None
                flags.append(f"L_delta window too small for delta={delta}")
            ld[float(delta)] = (rate, cst)
    else:
        flags.append("CS fit window too small; rates unavailable")

    return DecayReport(
        n=n,
        dt=dt,
        converged=traj.converged,
        residual_dj_dcs=residual_dj_dcs,
        residual_dj_curv=residual_dj_curv,
        residual_dj_kin=residual_dj_kin,
        residual_telescope=residual_telescope,
        margin_decay_ineq=margin_decay,
        margin_monotone=margin_mono,
        cs_min=float(np.min(cs)),
        j_min=float(np.min(j)),
        j_increase=float(np.max(np.diff(j))),
        cs_rate=cs_rate,
        cs_constant=cs_const,
        ldelta=ld,
        admissibility_margin=float(np.min(curv)),
        j_tail=tail,
        flags=flags,
    )


def identity_residual_ratio(model, phi0, t_end=2.5, dt=4e-3, deltas=(3.0,)):
    """Ratio of the worst identity residual under dt -> dt/2 (~16 for RK4)."""

    def worst(step):
        rep = decay_diagnostics(flow_integrate(model, phi0, t_end=t_end, dt=step), deltas=deltas)
        return max(rep.residual_dj_dcs, rep.residual_dj_curv, rep.residual_dj_kin)

    coarse, fine = worst(dt), worst(dt / 2.0)
    return coarse / fine if fine > 0 else float("inf"), coarse, fine


def trajectory_table(traj, deltas=(1.0, 3.0, 5.0)):
    """Column table {t, CS, kinetic, curvature_energy, J, L_delta...} for CSV."""
    rate_sl = _fit_tail_rate(traj.t, traj.slice_energy)
    tail = 0.0
    if rate_sl is not None and rate_sl < -1e-6 and traj.slice_energy[-1] > 0:
        tail = float(traj.slice_energy[-1] / (-rate_sl))
    cols = {
        "t": traj.t,
        "CS": traj.cs,
        "kinetic": traj.kinetic,
        "curvature_energy": traj.curvature_energy,
        "J": _integral_back(traj.slice_energy, traj.dt, tail=tail),
    }
    for delta in deltas:
        y = np.exp(delta * traj.t) * traj.slice_energy
        tail_d = 0.0
        if rate_sl is not None and rate_sl + delta < -1e-6 and traj.slice_energy[-1] > 0:
            tail_d = float(y[-1] / (-(rate_sl + delta)))
        cols[f"L_{delta:g}"] = _integral_back(y, traj.dt, tail=tail_d)
    return cols
