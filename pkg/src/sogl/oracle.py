"""Independent brute-force reference solvers for desk-scale certification.

Nothing here calls the solver or bounds code it certifies; the shrinkage
primitives are reimplemented locally on purpose. The main tool is exact
support enumeration: for every candidate support the remaining problem is
convex, and because its smooth part is exactly the prox quadratic, that
restricted problem is a single prox of a sum of norms, computed to high
accuracy by Dykstra's splitting (closed form when the restricted groups
do not overlap). The count term is charged at the actual nonzero count of
each restricted minimizer, so the minimum over supports is the exact
global optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import GroupStructure, ProxInstance

__all__ = [
    "OracleResult",
    "TooLargeError",
    "oracle_prox_l0_ogl",
    "oracle_variant",
    "oracle_grid_1d",
    "oracle_c_scan",
    "oracle_ub_l0_subsets",
    "stationarity_check",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class TooLargeError(ValueError):
    """Instance exceeds the enumeration size limit."""


@dataclass
class OracleResult:
    """Certified global minimum (to stated tolerance) and its minimizer."""

    value: float
    minimizer: np.ndarray
    method: str  # support_enum | grid_1d | c_scan | subset_full


def _shrink(u: np.ndarray, t: float) -> np.ndarray:
    return np.sign(u) * np.maximum(np.abs(u) - t, 0.0)


def _block_shrink(a: np.ndarray, t: float) -> np.ndarray:
    nrm = float(np.linalg.norm(a))
    if nrm <= t:
        return np.zeros_like(a)
    return (1.0 - t / nrm) * a


def _dykstra(center: np.ndarray, prox_ops, tol: float = 1e-13,
             max_passes: int = 4000) -> np.ndarray:
    """Prox of a sum of convex functions from their individual proxes."""
    x = center.copy()
    corrections = [np.zeros_like(center) for _ in prox_ops]
    scale = 1.0 + float(np.linalg.norm(center))
    for _ in range(max_passes):
        x_before = x.copy()
        for j, op in enumerate(prox_ops):
            y = op(x + corrections[j])
            corrections[j] = x + corrections[j] - y
            x = y
        if float(np.max(np.abs(x - x_before))) <= tol * scale:
            break
    return x


def _restricted_groups(gs: GroupStructure, idx: np.ndarray):
    """Positions of each group's surviving members within the support."""
    pos = np.full(gs.n, -1, dtype=np.intp)
    pos[idx] = np.arange(idx.size)
    out = []
    for g in gs.groups:
        p = pos[g]
        out.append(p[p >= 0])
    return out


def _convex_restricted_min(v: np.ndarray, s: float, coeffs: np.ndarray,
                           lam1: float, gs: GroupStructure,
                           idx: np.ndarray):
    """Minimize (1/2s)||x-v||^2 + sum_i coeffs[i]*||x_{G_i}||_2 + lam1*||x||_1
    over vectors supported on ``idx``. Returns (x, convex value)."""
    n = v.size
    x = np.zeros(n)
    off_value = 0.5 / s * float(np.sum(np.delete(v, idx) ** 2))
    if idx.size == 0:
        return x, off_value
    v_r = v[idx]
    rgroups = _restricted_groups(gs, idx)
    active = [
        (rg, c) for rg, c in zip(rgroups, coeffs) if rg.size > 0 and c > 0
    ]
    hits = np.zeros(idx.size, dtype=np.intp)
    for rg, _ in active:
        hits[rg] += 1
    if np.all(hits <= 1):
        # non-overlapping fast path: elementwise shrink, then per-block shrink
        y = _shrink(v_r, s * lam1) if lam1 > 0 else v_r.copy()
        for rg, c in active:
            y[rg] = _block_shrink(y[rg], s * c)
        x_r = y
    else:
        ops = []
        if lam1 > 0:
            ops.append(lambda u: _shrink(u, s * lam1))
        for rg, c in active:
            def op(u, rg=rg, t=s * c):
                out = u.copy()
                out[rg] = _block_shrink(out[rg], t)
                return out
            ops.append(op)
        x_r = _dykstra(v_r, ops)
    x[idx] = x_r
    value = (
        0.5 / s * float(np.sum((x_r - v_r) ** 2))
        + float(sum(c * np.linalg.norm(x_r[rg]) for rg, c in active))
        + lam1 * float(np.sum(np.abs(x_r)))
        + off_value
    )
    return x, value


def _support_enumerate(v: np.ndarray, s: float, coeffs: np.ndarray,
                       lam1: float, lam0: float, gs: GroupStructure,
                       n_limit: int) -> OracleResult:
    n = v.size
    if n > n_limit:
        raise TooLargeError(f"n={n} exceeds enumeration limit {n_limit}")
    if lam0 == 0.0:
        idx = np.arange(n)
        x, cv = _convex_restricted_min(v, s, coeffs, lam1, gs, idx)
        return OracleResult(value=cv, minimizer=x, method="support_enum")
    all_idx = np.arange(n)
    best_val, best_x = math.inf, np.zeros(n)
    for mask in range(1 << n):
        idx = all_idx[[(mask >> i) & 1 == 1 for i in range(n)]]
        x, cv = _convex_restricted_min(v, s, coeffs, lam1, gs, idx)
        val = cv + lam0 * int(np.count_nonzero(x))
        if val < best_val:
            best_val, best_x = val, x
    return OracleResult(value=best_val, minimizer=best_x, method="support_enum")


def oracle_prox_l0_ogl(inst: ProxInstance, gs: GroupStructure,
                       n_limit: int = 12) -> OracleResult:
    """Exact global minimum of the main composite objective.

    Enumerates every support (convex regime short-circuits to the full
    support) and solves each restricted convex problem to ~1e-12.

    Raises
    ------
    TooLargeError
        If ``gs.n > n_limit``.
    """
    coeffs = np.full(gs.m, inst.lam1)
    return _support_enumerate(inst.v, inst.s, coeffs, 0.0, inst.lam0, gs, n_limit)


def oracle_variant(inst: ProxInstance, gs: GroupStructure, variant: str,
                   n_limit: int = 12) -> OracleResult:
    """Exact optimum of one sandwich target problem.

    The objective is ``(1/2s)||x-v||^2 + lam*sum_i w_i*||x_{G_i}||_2`` plus
    ``lam1*||x||_1`` for the l1 variant or ``lam0*nnz(x)`` for the l0
    variant.
    """
    if variant not in ("plain", "l1", "l0"):
        raise ValueError(f"unknown variant {variant!r}")
    coeffs = inst.lam * gs.weights
    lam1 = inst.lam1 if variant == "l1" else 0.0
    lam0 = inst.lam0 if variant == "l0" else 0.0
    return _support_enumerate(inst.v, inst.s, coeffs, lam1, lam0, gs, n_limit)


def _golden_refine(objective, lo: float, hi: float, tol: float = 1e-9):
    """Golden-section minimization of a 1-D function on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(d)
    xm = 0.5 * (a + b)
    return xm, objective(xm)


def oracle_grid_1d(objective, lo: float, hi: float,
                   resolution: float = 1e-3) -> OracleResult:
    """Coarse scan plus golden-section refinement of a 1-D objective.

    Refines around the best grid cell and around zero (the count term is
    discontinuous there) and always evaluates 0 itself.
    """
    xs = np.arange(lo, hi + resolution, resolution)
    if not ((xs >= -resolution) & (xs <= resolution)).any():
        xs = np.append(xs, 0.0)
    vals = np.array([objective(float(x)) for x in xs])
    best = int(np.argmin(vals))
    cands = []
    x_lo = max(lo, float(xs[best]) - resolution)
    x_hi = min(hi, float(xs[best]) + resolution)
    cands.append(_golden_refine(objective, x_lo, x_hi))
    if lo <= 0.0 <= hi:
        cands.append(_golden_refine(objective, max(lo, -resolution),
                                    min(hi, resolution)))
        cands.append((0.0, objective(0.0)))
    xm, fm = min(cands, key=lambda t: t[1])
    return OracleResult(value=float(fm), minimizer=np.array([xm]),
                        method="grid_1d")


def oracle_c_scan(v: np.ndarray, lam: float, diag) -> OracleResult:
    """Scan the scaled-l2 prox along its one-parameter solution family.

    Every nonzero candidate has the form ``x(c) = (I + lam*U^2/c)^(-1) v``
    for some c > 0; the scan minimizes the true objective over a log-spaced
    c grid with golden refinement, then compares against the zero-block
    candidate.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(getattr(diag, "entries", diag), dtype=float)
    penalized = u > 0

    def objective_at(x):
        return 0.5 * float(np.sum((x - v) ** 2)) + lam * float(
            np.linalg.norm(u * x)
        )

    x_zero = v.copy()
    x_zero[penalized] = 0.0
    uv_norm = float(np.linalg.norm(u * v))
    if lam == 0.0 or uv_norm == 0.0:
        x = v.copy()
        return OracleResult(value=objective_at(x), minimizer=x, method="c_scan")

    def x_of(log_c):
        c = math.exp(log_c)
        return c * v / (c + lam * u**2)

    def f_of(log_c):
        return objective_at(x_of(log_c))

    lo, hi = math.log(1e-12), math.log(uv_norm * 10.0)
    grid = np.linspace(lo, hi, 400)
    vals = [f_of(g) for g in grid]
    k = int(np.argmin(vals))
    a = grid[max(0, k - 1)]
    b = grid[min(len(grid) - 1, k + 1)]
    log_c, f_best = _golden_refine(f_of, float(a), float(b), tol=1e-12)
    x_best = x_of(log_c)
    f_zero = objective_at(x_zero)
    if f_zero <= f_best:
        return OracleResult(value=f_zero, minimizer=x_zero, method="c_scan")
    return OracleResult(value=f_best, minimizer=x_best, method="c_scan")


def oracle_ub_l0_subsets(v: np.ndarray, lam: float, lam0: float, diag,
                         n_limit: int = 10) -> OracleResult:
    """Exhaustive reference for the relaxed count-penalized l2 prox.

    Minimizes ``0.5*||x-v||^2 + lam*sigma*||x||_2 + lam0*nnz(x)`` with
    ``sigma`` the largest diagonal entry, by trying every one of the 2^n
    supports with the closed-form block shrink on each. Certifies the
    top-k shortcut used by the bounds module.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(getattr(diag, "entries", diag), dtype=float)
    n = v.size
    if n > n_limit:
        raise TooLargeError(f"n={n} exceeds enumeration limit {n_limit}")
    sigma = float(u.max()) if n else 0.0
    t = lam * sigma
    best_val = 0.5 * float(np.sum(v**2))
    best_x = np.zeros(n)
    all_idx = np.arange(n)
    for mask in range(1, 1 << n):
        idx = all_idx[[(mask >> i) & 1 == 1 for i in range(n)]]
        x = np.zeros(n)
        x[idx] = _block_shrink(v[idx], t)
        val = (
            0.5 * float(np.sum((x - v) ** 2))
            + t * float(np.linalg.norm(x))
            + lam0 * int(np.count_nonzero(x))
        )
        if val < best_val:
            best_val, best_x = val, x
    return OracleResult(value=best_val, minimizer=best_x, method="subset_full")


def _min_norm_with_ball_multipliers(base: np.ndarray, zero_groups,
                                    radius: float,
                                    passes: int = 500) -> float:
    """min ||base + sum_i u_i||_2 over blocks u_i supported on each zero
    group with ||u_i|| <= radius, by cyclic block minimization."""
    if not zero_groups or radius == 0.0:
        return float(np.linalg.norm(base))
    total = base.copy()
    mults = [np.zeros(g.size) for g in zero_groups]
    prev = math.inf
    for _ in range(passes):
        for i, g in enumerate(zero_groups):
            w = total[g] - mults[i]
            nrm = float(np.linalg.norm(w))
            target = -w if nrm <= radius else -(radius / nrm) * w
            total[g] += target - mults[i]
            mults[i] = target
        cur = float(np.linalg.norm(total))
        if prev - cur <= 1e-14 * (1.0 + cur):
            break
        prev = cur
    return float(np.linalg.norm(total))


def stationarity_check(x: np.ndarray, inst: ProxInstance,
                       gs: GroupStructure, tol: float = 1e-6):
    """First-order check of the main objective at ``x``.

    The smooth-plus-group part must admit a vanishing subgradient: on the
    support every coordinate is differentiable; at zero coordinates the
    group subdifferentials contribute ball-constrained multipliers, except
    that a positive count penalty makes any zero coordinate locally optimal
    on its own. The count term on the support is checked by zeroing each
    nonzero coordinate in turn, which must not decrease the objective.

    Returns ``(ok, residual)`` where residual measures the subgradient
    inclusion.
    """
    x = np.asarray(x, dtype=float)
    r = (x - inst.v) / inst.s
    zero_groups = []
    for g in gs.groups:
        b = x[g]
        nrm = float(np.linalg.norm(b))
        if nrm > 0:
            r[g] += inst.lam1 * b / nrm
        elif inst.lam1 > 0:
            zero_groups.append(g)
    supp = x != 0
    if inst.lam0 > 0:
        residual = float(np.linalg.norm(r[supp])) if supp.any() else 0.0
    else:
        masked = r.copy()
        residual = _min_norm_with_ball_multipliers(masked, zero_groups,
                                                   inst.lam1)
    ok = residual <= tol
    if ok and inst.lam0 > 0:
        base = _objective_main(x, inst, gs)
        for g in np.flatnonzero(supp):
            x_try = x.copy()
            x_try[g] = 0.0
            if _objective_main(x_try, inst, gs) < base - 1e-9:
                ok = False
                break
    return ok, residual


def _objective_main(x: np.ndarray, inst: ProxInstance,
                    gs: GroupStructure) -> float:
    quad = 0.5 / inst.s * float(np.sum((x - inst.v) ** 2))
    grp = float(sum(np.linalg.norm(x[g]) for g in gs.groups))
    return quad + inst.lam0 * int(np.count_nonzero(x)) + inst.lam1 * grp
