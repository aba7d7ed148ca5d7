"""Dense convex QP with box constraints, solved by a primal-dual interior
point method with Mehrotra's predictor-corrector step.

Solves ``min 0.5 z'Hz + g'z  s.t.  lb <= z <= ub`` for symmetric positive
semidefinite ``H``.  Each iteration factorizes ``H + diag(lam/s_l + mu/s_u)``
(Cholesky; a scaled diagonal shift is added if the factorization fails), takes
an affine predictor step, picks the centering parameter from the predicted
complementarity decrease, then applies the combined corrector step with a
0.995 fraction-to-boundary rule.  After convergence the active set implied by
the duals is fixed and the free block is re-solved exactly ("polish"), which
brings the solution to near machine precision.

Variables with equal lower and upper bounds are eliminated up front.  The
solver is deterministic and allocation-light; one instance of scratch data per
call, so concurrent calls on different problems are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE_INPUT = "infeasible_input"

_FTB = 0.995  # fraction-to-boundary


@dataclass
class DenseQp:
    """Problem data; ``H`` must be symmetric within 1e-10 (it is symmetrized)."""

    H: np.ndarray
    g: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        n = self.g.shape[0]
        if self.H.shape != (n, n) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("inconsistent QP dimensions")
        asym = np.max(np.abs(self.H - self.H.T)) if n else 0.0
        if asym > 1e-10 * max(1.0, np.max(np.abs(self.H))):
            raise ValueError("Hessian is not symmetric")
        self.H = 0.5 * (self.H + self.H.T)

    @property
    def n(self) -> int:
        return self.g.shape[0]


@dataclass
class QpSolution:
    z: np.ndarray
    status: str
    kkt_residual: float
    iterations: int
    # KKT residual after each interior-point iteration, for diagnostics.
    history: list = field(default_factory=list)


def dump_qp(qp: DenseQp, path) -> None:
    """Write the QP in a plain-text matrix format for offline inspection."""
    with open(path, "w") as fh:
        fh.write(f"box_qp n={qp.n}\n")
        for name, arr in (("H", qp.H), ("g", qp.g), ("lb", qp.lb), ("ub", qp.ub)):
            fh.write(f"{name}\n")
            rows = arr if arr.ndim == 2 else [arr]
            for row in rows:
                fh.write(" ".join(f"{v:.17g}" for v in np.atleast_1d(row)) + "\n")


def _chol_factor_factory(H: np.ndarray):
    """Return a factorizer for ``H + diag(d)`` with regularization fallback.

    The factor is computed once per interior-point iteration and reused for
    the predictor and corrector solves.
    """
    n = H.shape[0]
    base_reg = 1e-8 * (1.0 + np.trace(H) / max(n, 1))
    eye = np.eye(n)

    def factorize(d: np.ndarray):
        M = H + np.diag(d)
        reg = 0.0
        for _ in range(6):
            try:
                factor = cho_factor(M + reg * eye, lower=True, check_finite=False)
                return lambda rhs: cho_solve(factor, rhs, check_finite=False)
            except np.linalg.LinAlgError:
                reg = base_reg if reg == 0.0 else 10.0 * reg
        raise np.linalg.LinAlgError("QP normal matrix not factorizable")

    return factorize


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha in (0, 1] with v + alpha*dv >= 0, given v > 0."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _kkt_residual(H, g, z, lam, mu, s_l, s_u) -> float:
    r_d = H @ z + g - lam + mu
    comp = 0.0
    if z.size:
        comp = max(float(np.max(np.abs(s_l * lam))), float(np.max(np.abs(s_u * mu))))
    return max(float(np.max(np.abs(r_d), initial=0.0)), comp)


def _polish(H, g, lb, ub, z, lam, mu, s_l, s_u):
    """Fix the active set implied by the duals and re-solve the free block."""
    low = lam >= s_l
    up = mu >= s_u
    free = ~(low | up)
    z_p = np.where(low, lb, np.where(up, ub, z))
    if np.any(free):
        Hff = H[np.ix_(free, free)]
        rhs = -(g[free] + H[np.ix_(free, ~free)] @ z_p[~free])
        try:
            L = np.linalg.cholesky(Hff)
            z_p[free] = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        except np.linalg.LinAlgError:
            return None
        if np.any(z_p[free] < lb[free]) or np.any(z_p[free] > ub[free]):
            return None
    r = H @ z_p + g
    lam_p = np.where(low, np.maximum(r, 0.0), 0.0)
    mu_p = np.where(up, np.maximum(-r, 0.0), 0.0)
    # Multiplier sign check: wrong-signed gradient at a fixed bound means the
    # active-set guess was bad.
    tol = 1e-9 * (1.0 + float(np.max(np.abs(g), initial=0.0)))
    if np.any(r[low] < -tol) or np.any(r[up] > tol):
        return None
    return z_p, lam_p, mu_p


def solve_box_qp(
    qp: DenseQp,
    warm_start: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    dump_path=None,
) -> QpSolution:
    """Minimize the box QP; returns the clamped primal point and KKT residual.

    ``warm_start`` seeds the primal iterate (pushed strictly inside the box)
    and the duals from its gradient, which typically saves a few iterations
    when re-solving a perturbed problem.
    """
    if dump_path is not None:
        dump_qp(qp, dump_path)
    n = qp.n
    if not (np.all(np.isfinite(qp.g)) and np.all(np.isfinite(qp.H))
            and np.all(np.isfinite(qp.lb)) and np.all(np.isfinite(qp.ub))):
        return QpSolution(np.zeros(n), INFEASIBLE_INPUT, np.inf, 0)
    if np.any(qp.lb > qp.ub):
        return QpSolution(np.minimum(qp.lb, qp.ub), INFEASIBLE_INPUT, np.inf, 0)

    # Eliminate pinned variables (lb == ub).
    fixed = qp.lb == qp.ub
    z_full = np.where(fixed, qp.lb, 0.0)
    free = ~fixed
    if not np.any(free):
        return QpSolution(z_full, OPTIMAL, 0.0, 0)
    H = qp.H[np.ix_(free, free)]
    g = qp.g[free] + qp.H[np.ix_(free, fixed)] @ z_full[fixed]
    lb, ub = qp.lb[free], qp.ub[free]
    m = g.shape[0]
    width = ub - lb

    factorize = _chol_factor_factory(H)

    if warm_start is not None:
        z0 = np.asarray(warm_start, dtype=float)[free]
        margin = 1e-4 * width
        z = np.clip(z0, lb + margin, ub - margin)
        r0 = H @ z + g
        eps = 1e-6 * (1.0 + float(np.max(np.abs(r0), initial=0.0)))
        lam = np.maximum(r0, eps)
        mu = np.maximum(-r0, eps)
    else:
        z = 0.5 * (lb + ub)
        lam = np.ones(m)
        mu = np.ones(m)
    s_l = z - lb
    s_u = ub - z

    def finish(z_loc, lam_loc, mu_loc, status, iters, history):
        sl = z_loc - lb
        su = ub - z_loc
        polished = _polish(H, g, lb, ub, z_loc, lam_loc, mu_loc, sl, su)
        if polished is not None:
            z_p, lam_p, mu_p = polished
            kkt_p = _kkt_residual(H, g, z_p, lam_p, mu_p, z_p - lb, ub - z_p)
            if kkt_p <= _kkt_residual(H, g, z_loc, lam_loc, mu_loc, sl, su):
                z_loc, lam_loc, mu_loc = z_p, lam_p, mu_p
        z_loc = np.clip(z_loc, lb, ub)
        kkt = _kkt_residual(H, g, z_loc, lam_loc, mu_loc, z_loc - lb, ub - z_loc)
        z_full[free] = z_loc
        return QpSolution(z_full, status, kkt, iters, history)

    history: list[float] = []
    best = (np.inf, z.copy(), lam.copy(), mu.copy())
    for it in range(max_iter):
        kkt = _kkt_residual(H, g, z, lam, mu, s_l, s_u)
        history.append(kkt)
        if kkt < best[0]:
            best = (kkt, z.copy(), lam.copy(), mu.copy())
        if kkt <= tol:
            return finish(z, lam, mu, OPTIMAL, it, history)

        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            d = lam / s_l + mu / s_u
        grad = H @ z + g
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(grad))):
            # Degenerate slacks (possible only on wildly scaled input data):
            # stop and hand back the best iterate seen.
            return finish(best[1], best[2], best[3], MAX_ITER, it, history)
        solve_normal = factorize(d)

        # Affine predictor.
        dz_aff = solve_normal(-grad)
        dlam_aff = -lam - (lam / s_l) * dz_aff
        dmu_aff = -mu + (mu / s_u) * dz_aff
        a_p = min(_max_step(s_l, dz_aff), _max_step(s_u, -dz_aff))
        a_d = min(_max_step(lam, dlam_aff), _max_step(mu, dmu_aff))

        mu_meas = (s_l @ lam + s_u @ mu) / (2 * m)
        mu_aff = (
            (s_l + a_p * dz_aff) @ (lam + a_d * dlam_aff)
            + (s_u - a_p * dz_aff) @ (mu + a_d * dmu_aff)
        ) / (2 * m)
        sigma = (max(mu_aff, 0.0) / mu_meas) ** 3 if mu_meas > 0 else 0.0

        # Combined corrector: centering plus second-order complementarity term.
        rc_l = sigma * mu_meas - dz_aff * dlam_aff
        rc_u = sigma * mu_meas + dz_aff * dmu_aff
        dz = solve_normal(-grad + rc_l / s_l - rc_u / s_u)
        dlam = -lam - (lam / s_l) * dz + rc_l / s_l
        dmu = -mu + (mu / s_u) * dz + rc_u / s_u

        a_p = _FTB * min(_max_step(s_l, dz), _max_step(s_u, -dz))
        a_d = _FTB * min(_max_step(lam, dlam), _max_step(mu, dmu))
        z = z + min(a_p, 1.0) * dz
        lam = lam + min(a_d, 1.0) * dlam
        mu = mu + min(a_d, 1.0) * dmu
        s_l = z - lb
        s_u = ub - z

    kkt = _kkt_residual(H, g, z, lam, mu, s_l, s_u)
    history.append(kkt)
    if kkt < best[0]:
        best = (kkt, z, lam, mu)
    return finish(best[1], best[2], best[3], MAX_ITER, max_iter, history)
