"""Modulars, Luxemburg norms, and the norm-modular relation checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure
from .exponents import conjugate
from .fem import field_on_quadrature, gradient

_UNIT_BAND = 1e-12


@dataclass
class ModularResult:
    value: float
    quadrature_order: int


@dataclass
class ModularRelationsReport:
    """Norm-modular consistency for one field.

    relation is "zero", "unit", "above" (norm > 1) or "below"; the slacks
    are the sandwich inequalities' margins (nonnegative when they hold) and
    unit_gap is |modular(u / norm) - 1|.
    """

    norm: float
    modular_value: float
    p_minus: float
    p_plus: float
    relation: str
    lower_slack: float
    upper_slack: float
    unit_gap: float
    sign_consistent: bool
    passed: bool


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    constant: float
    norm_u: float
    norm_v: float
    slack: float
    passed: bool


def modular(u, p, degree=2):
    """rho_p(u) = integral of |u(x)|^p(x)."""
    w = u.mesh.quadrature(degree)[1]
    vals = np.abs(field_on_quadrature(u, degree))
    pq = p.eval_on_quadrature(u.mesh, degree)
    return ModularResult(float(np.sum(w * vals**pq)), degree)


def gradient_modular(u, p, degree=2):
    """rho_p(grad u) = integral of |grad u(x)|^p(x)."""
    w = u.mesh.quadrature(degree)[1]
    gmag = gradient(u).magnitude()[:, None]
    pq = p.eval_on_quadrature(u.mesh, degree)
    return ModularResult(float(np.sum(w * gmag**pq)), degree)


def _luxemburg_from_samples(vals, pq, w, tol):
    sup = float(vals.max(initial=0.0))
    if sup == 0.0:
        return 0.0
    volume = float(w.sum())

    def f(mu):
        with np.errstate(over="ignore"):
            return float(np.sum(w * (vals / mu) ** pq)) - 1.0

    lo = sup * 1e-6
    hi = sup * (1.0 + volume)
    for _ in range(200):
        if f(hi) <= 0:
            break
        hi *= 2.0
    else:
        raise BracketFailure("Luxemburg bracket: modular stays above 1")
    for _ in range(200):
        if f(lo) >= 0:
            break
        lo *= 0.5
    else:
        raise BracketFailure("Luxemburg bracket: modular stays below 1")

    mid = 0.5 * (lo + hi)
    for _ in range(500):
        fm = f(mid)
        if abs(fm) <= tol:
            break
        if fm > 0:
            lo = mid
        else:
            hi = mid
        new = 0.5 * (lo + hi)
        if new == mid:
            break
        mid = new
    return mid


def luxemburg_norm(u, p, tol=1e-10, degree=2):
    """inf { mu > 0 : rho_p(u / mu) <= 1 }, by monotone bisection."""
    w = u.mesh.quadrature(degree)[1]
    vals = np.abs(field_on_quadrature(u, degree))
    pq = p.eval_on_quadrature(u.mesh, degree)
    return _luxemburg_from_samples(vals, pq, w, tol)


def gradient_luxemburg_norm(u, p, tol=1e-10, degree=2):
    """Luxemburg norm of |grad u| (the zero-trace Sobolev norm)."""
    w = u.mesh.quadrature(degree)[1]
    gmag = np.broadcast_to(gradient(u).magnitude()[:, None], w.shape)
    pq = p.eval_on_quadrature(u.mesh, degree)
    return _luxemburg_from_samples(gmag, pq, w, tol)


def verify_modular_relations(u, p, degree=2, tol=1e-8, norm_tol=1e-10):
    """Check the sign trichotomy and the p-/p+ sandwich inequalities.

    Exponent bounds are taken from the quadrature samples, which is exactly
    the range governing the discrete modular.
    """
    w = u.mesh.quadrature(degree)[1]
    vals = np.abs(field_on_quadrature(u, degree))
    pq = p.eval_on_quadrature(u.mesh, degree)
    p_minus, p_plus = float(pq.min()), float(pq.max())

    rho = float(np.sum(w * vals**pq))
    norm = _luxemburg_from_samples(vals, pq, w, norm_tol)

    if norm == 0.0:
        return ModularRelationsReport(
            norm=0.0, modular_value=rho, p_minus=p_minus, p_plus=p_plus,
            relation="zero", lower_slack=0.0, upper_slack=0.0, unit_gap=0.0,
            sign_consistent=True, passed=rho == 0.0,
        )

    unit_gap = abs(float(np.sum(w * (vals / norm) ** pq)) - 1.0)
    if norm > 1.0 + _UNIT_BAND:
        relation = "above"
        lower_slack = rho - norm**p_minus
        upper_slack = norm**p_plus - rho
    elif norm < 1.0 - _UNIT_BAND:
        relation = "below"
        lower_slack = rho - norm**p_plus
        upper_slack = norm**p_minus - rho
    else:
        relation = "unit"
        lower_slack = upper_slack = tol - abs(rho - 1.0)

    sign_consistent = (
        (norm > 1 + _UNIT_BAND and rho > 1 - tol)
        or (norm < 1 - _UNIT_BAND and rho < 1 + tol)
        or (abs(norm - 1) <= _UNIT_BAND and abs(rho - 1) <= tol)
    )
    passed = bool(
        sign_consistent
        and lower_slack >= -tol
        and upper_slack >= -tol
        and unit_gap <= tol
    )
    return ModularRelationsReport(
        norm=float(norm), modular_value=rho, p_minus=p_minus, p_plus=p_plus,
        relation=relation, lower_slack=float(lower_slack),
        upper_slack=float(upper_slack), unit_gap=float(unit_gap),
        sign_consistent=bool(sign_consistent), passed=passed,
    )


def holder_check(u, v, p, degree=2, tol=1e-9):
    """Variable-exponent Holder inequality:

        |int u v| <= (1/p- + 1/p'-) ||u||_p(.) ||v||_p'(.)

    Returns lhs, rhs, and the slack rhs - lhs (nonnegative on pass).
    """
    mesh = u.mesh
    w = mesh.quadrature(degree)[1]
    uq = field_on_quadrature(u, degree)
    vq = field_on_quadrature(v, degree)
    lhs = abs(float(np.sum(w * uq * vq)))

    pq = p.eval_on_quadrature(mesh, degree)
    pc = conjugate(p)
    pcq = pc.eval_on_quadrature(mesh, degree)
    norm_u = _luxemburg_from_samples(np.abs(uq), pq, w, tol=1e-11)
    norm_v = _luxemburg_from_samples(np.abs(vq), pcq, w, tol=1e-11)

    constant = 1.0 / float(pq.min()) + 1.0 / float(pcq.min())
    rhs = constant * norm_u * norm_v
    slack = rhs - lhs
    return HolderReport(
        lhs=lhs, rhs=float(rhs), constant=float(constant),
        norm_u=float(norm_u), norm_v=float(norm_v), slack=float(slack),
        passed=bool(slack >= -tol * (1.0 + rhs)),
    )
