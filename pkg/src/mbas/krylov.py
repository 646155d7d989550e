"""Full (unrestarted) GMRES and the splitting-induced preconditioners.

By default the preconditioner is applied from the right, so the Arnoldi
residual estimate is the true relative residual ``||b - A x|| / ||b||``.
With ``side="left"`` the loop monitors the preconditioned residual; once
that drops below ``tol`` the true residual is checked as well and the
iteration continues while it exceeds ``10 * tol``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from mbas.errors import ConvergenceError, DimensionError, ParameterError
from mbas.inner import shifted_solver
from mbas.splittings import SolveReport
from mbas.systems import (
    SystemBundle,
    apply_A,
    apply_Areal_tilde,
    apply_Atilde,
    apply_G,
    apply_R,
    apply_Areal,
    rhs_b,
    rhs_btilde,
    rhs_c,
    rhs_ctilde,
)

__all__ = [
    "GmresConfig",
    "LinearOperator",
    "apply_Bmbas_inv",
    "apply_Passs_inv",
    "apply_Pbas_inv",
    "gmres_full",
    "passs_solve",
    "pbas_solve",
    "pmbas_solve",
]

REORTH_TRIGGER = 1e-8


@dataclass(frozen=True)
class LinearOperator:
    """A square linear map given by its action."""

    n: int
    apply: Callable[[np.ndarray], np.ndarray]
    dtype: type = np.complex128

    def __call__(self, x):
        return self.apply(x)


@dataclass(frozen=True)
class GmresConfig:
    """GMRES settings.

    ``side`` is where the preconditioner goes (``right`` solves
    ``A P^{-1} u = b``, ``x = P^{-1} u``). ``monitor`` selects the
    residual compared with ``tol``: ``preconditioned`` (the Arnoldi
    estimate, guarded by the true residual within ``true_residual_factor``)
    or ``true`` (``||b - A x|| / ||b|| <= tol`` checked every step).
    """

    tol: float = 1e-6
    maxit: int = 500
    true_residual_factor: float = 10.0
    side: str = "right"
    monitor: str = "preconditioned"

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.maxit < 1:
            raise ParameterError("maxit must be at least 1")
        if self.side not in ("left", "right"):
            raise ParameterError(f"side must be 'left' or 'right', got {self.side!r}")
        if self.monitor not in ("preconditioned", "true"):
            raise ParameterError(f"monitor must be 'preconditioned' or 'true', got {self.monitor!r}")


def _as_callable(op):
    if op is None:
        return None
    if isinstance(op, np.ndarray):
        return lambda v: op @ v
    return op


def gmres_full(A, b, Pinv=None, cfg: GmresConfig = GmresConfig()):
    """Preconditioned full GMRES from the zero vector.

    ``A`` and ``Pinv`` are callables (or dense arrays). The scalar field
    follows ``b``: real ``b`` with real operators runs in real arithmetic.
    Returns ``(x, SolveReport)``; the history holds the monitored relative
    residuals, ``true_residual`` the final unpreconditioned one.
    """
    start = time.perf_counter()
    A = _as_callable(A)
    Pinv = _as_callable(Pinv)
    b = np.asarray(b)
    n = b.shape[0]
    dtype = np.result_type(b.dtype, np.float64)
    prec = Pinv if Pinv is not None else (lambda v: v)
    if cfg.side == "left":
        op = lambda v: prec(A(v))  # noqa: E731
        r0 = np.asarray(prec(b), dtype=dtype)
        lift = lambda u: u  # noqa: E731
    else:
        op = lambda v: A(prec(v))  # noqa: E731
        r0 = b.astype(dtype)
        lift = prec

    bnorm = np.linalg.norm(b)
    x = np.zeros(n, dtype=dtype)
    if bnorm == 0.0:
        return x, SolveReport("gmres", float("nan"), 0, [0.0], True, 0.0, mode="gmres", true_residual=0.0)
    if r0.shape != (n,):
        raise DimensionError("preconditioner changed the vector length")
    beta = np.linalg.norm(r0)
    if beta == 0.0:
        raise ConvergenceError("preconditioner maps the right-hand side to zero")

    maxit = min(cfg.maxit, n)
    V = np.zeros((maxit + 1, n), dtype=dtype)
    H = np.zeros((maxit + 1, maxit), dtype=dtype)
    cs = np.zeros(maxit, dtype=dtype)
    sn = np.zeros(maxit, dtype=dtype)
    g = np.zeros(maxit + 1, dtype=dtype)
    g[0] = beta
    V[0] = r0 / beta
    history = [1.0]
    true_res = 1.0
    converged = False
    it = 0

    def solution(j):
        y = np.linalg.solve(np.triu(H[:j, :j]), g[:j])
        return np.asarray(lift(V[:j].T @ y), dtype=dtype)

    for j in range(maxit):
        w = np.asarray(op(V[j]), dtype=dtype)
        wnorm0 = np.linalg.norm(w)
        # modified Gram-Schmidt, then one more pass if orthogonality slipped
        for i in range(j + 1):
            h = np.vdot(V[i], w)
            H[i, j] = h
            w = w - h * V[i]
        wnorm = np.linalg.norm(w)
        if wnorm > 0 and j > 0:
            overlap = V[: j + 1].conj() @ w
            if np.max(np.abs(overlap)) > REORTH_TRIGGER * wnorm:
                w = w - V[: j + 1].T @ overlap
                H[: j + 1, j] += overlap
                wnorm = np.linalg.norm(w)
        H[j + 1, j] = wnorm
        breakdown = wnorm <= 1e-14 * max(wnorm0, 1.0)
        if not breakdown:
            V[j + 1] = w / wnorm

        for i in range(j):
            a, c = H[i, j], H[i + 1, j]
            H[i, j] = np.conj(cs[i]) * a + np.conj(sn[i]) * c
            H[i + 1, j] = -sn[i] * a + cs[i] * c
        a, c = H[j, j], H[j + 1, j]
        denom = math.hypot(abs(a), abs(c))
        if denom == 0.0:
            raise ConvergenceError("Arnoldi produced a singular Hessenberg column", residual=history[-1])
        cs[j] = a / denom
        sn[j] = c / denom
        H[j, j] = np.conj(cs[j]) * a + np.conj(sn[j]) * c
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = np.conj(cs[j]) * g[j]

        it = j + 1
        est = abs(g[j + 1]) / beta
        if cfg.monitor == "true":
            x = solution(it)
            true_res = np.linalg.norm(b - A(x)) / bnorm
            history.append(float(true_res))
            if true_res <= cfg.tol:
                converged = True
                break
        else:
            history.append(float(est))
            if est <= cfg.tol or breakdown:
                x = solution(it)
                true_res = np.linalg.norm(b - A(x)) / bnorm
                if true_res <= cfg.true_residual_factor * cfg.tol:
                    converged = True
                    break
        if breakdown:
            raise ConvergenceError("Arnoldi breakdown with nonzero residual", residual=true_res, iterations=it)
    else:
        if it:
            x = solution(it)
            true_res = np.linalg.norm(b - A(x)) / bnorm

    elapsed = time.perf_counter() - start
    rep = SolveReport("gmres", float("nan"), it, history, converged, elapsed, mode="gmres",
                      true_residual=float(true_res))
    return x, rep


# ---------------------------------------------------------------------------
# preconditioners


def _cols2(v, m):
    return np.asarray(v).reshape(2, m).T


def _cols4(v, m):
    return np.asarray(v).reshape(4, m).T


def apply_Bmbas_inv(s: SystemBundle, alpha: float, v, inner="direct"):
    """``B^{-1} v = -alpha (aI + sqrt(nu theta) H2)^{-1} R (aI + theta H1)^{-1} (I + R) v``."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    v = np.asarray(v)
    if v.shape != (2 * s.m,):
        raise DimensionError(f"block vector has shape {v.shape}, expected ({2 * s.m},)")
    snt = math.sqrt(s.nu * s.theta)
    first = shifted_solver(s, shift=alpha, mass=s.theta, inner=inner)
    second = shifted_solver(s, shift=alpha, stiff=snt, inner=inner)
    w = v + apply_R(s.params, v)
    w = first.solve(_cols2(w, s.m)).T.ravel()
    w = apply_R(s.params, w)
    w = second.solve(_cols2(w, s.m)).T.ravel()
    return -alpha * w


def apply_Pbas_inv(s: SystemBundle, alpha: float, v, inner="direct"):
    """Inverse of ``c0 W D`` with ``W = [[I, a I], [conj(a) I, -I]]``, ``a = theta - i w sqrt(nu)``."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    v = np.asarray(v)
    m = s.m
    if v.shape != (2 * m,):
        raise DimensionError(f"block vector has shape {v.shape}, expected ({2 * m},)")
    theta, sn = s.theta, math.sqrt(s.nu)
    c0 = (1.0 + alpha) / (alpha * (1.0 + theta))
    a = theta - 1j * s.omega * sn
    d = shifted_solver(s, mass=alpha, stiff=sn, inner=inner)
    w = d.solve(_cols2(v, m))
    # W^{-1} = W / (1 + |a|^2); W commutes with the block-diagonal D
    top = w[:, 0] + a * w[:, 1]
    bot = np.conj(a) * w[:, 0] - w[:, 1]
    return np.concatenate([top, bot]) / ((1.0 + abs(a) ** 2) * c0)


def apply_Passs_inv(s: SystemBundle, alpha: float, y, inner="direct"):
    """``P^{-1} y = -alpha (aI + Kr)^{-1} G (aI + Mr)^{-1} (I + G) y`` on real block vectors."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    y = np.asarray(y, dtype=np.float64)
    m = s.m
    if y.shape != (4 * m,):
        raise DimensionError(f"real block vector has shape {y.shape}, expected ({4 * m},)")
    first = shifted_solver(s, shift=alpha, mass=1.0, inner=inner)
    second = shifted_solver(s, shift=alpha, stiff=math.sqrt(s.nu / s.theta), inner=inner)
    w = y + apply_G(s.params, y)
    w = first.solve(_cols4(w, m)).T.ravel()
    w = apply_G(s.params, w)
    w = second.solve(_cols4(w, m)).T.ravel()
    return -alpha * w


# ---------------------------------------------------------------------------
# preconditioned drivers


def _finish(rep, method, alpha, s):
    rep.method = method
    rep.alpha = alpha
    rep.nu, rep.omega = s.nu, s.omega
    return rep


def pmbas_solve(s: SystemBundle, alpha: float, cfg: GmresConfig = GmresConfig(), inner="direct",
                system: str = "original"):
    """GMRES preconditioned by the MBAS splitting matrix ``B``.

    ``system="original"`` runs on ``A x = b``; ``"transformed"`` runs on
    ``At x = bt``, the system ``B`` splits. Both have the same solution.
    """
    pinv = lambda v: apply_Bmbas_inv(s, alpha, v, inner)  # noqa: E731
    if system == "original":
        x, rep = gmres_full(lambda v: apply_A(s, v), rhs_b(s), pinv, cfg)
    elif system == "transformed":
        x, rep = gmres_full(lambda v: apply_Atilde(s, v), rhs_btilde(s), pinv, cfg)
    else:
        raise ParameterError(f"system must be 'original' or 'transformed', got {system!r}")
    return x, _finish(rep, "p-mbas", alpha, s)


def pbas_solve(s: SystemBundle, alpha: float, cfg: GmresConfig = GmresConfig(), inner="direct"):
    """GMRES on ``A x = b`` preconditioned by ``P_BAS``."""
    x, rep = gmres_full(lambda v: apply_A(s, v), rhs_b(s), lambda v: apply_Pbas_inv(s, alpha, v, inner), cfg)
    return x, _finish(rep, "p-bas", alpha, s)


def passs_solve(s: SystemBundle, alpha: float, cfg: GmresConfig = GmresConfig(), inner="direct",
                system: str = "original"):
    """GMRES on the real form preconditioned by the ASSS matrix.

    ``system="original"`` runs on ``Ar y = c``; ``"transformed"`` on
    ``(Mr + G Kr) y = T c``, the system the ASSS matrix splits.
    """
    pinv = lambda v: apply_Passs_inv(s, alpha, v, inner)  # noqa: E731
    if system == "original":
        y, rep = gmres_full(lambda v: apply_Areal(s, v), rhs_c(s), pinv, cfg)
    elif system == "transformed":
        y, rep = gmres_full(lambda v: apply_Areal_tilde(s, v), rhs_ctilde(s), pinv, cfg)
    else:
        raise ParameterError(f"system must be 'original' or 'transformed', got {system!r}")
    return y, _finish(rep, "p-asss", alpha, s)
