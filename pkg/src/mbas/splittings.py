"""Stationary two-half-step iterations: MBAS, BAS (with V = H1) and ASSS.

Each method iterates on its own algebraic form of the control system:
MBAS on ``At x = bt``, BAS on ``A x = b`` and ASSS on the real form. The
stopping test uses the relative residual of that form; because the
transformations involved are unitary up to a scalar, the relative residual
is the same as that of ``A x = b``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from mbas.errors import ConvergenceError, DimensionError, ParameterError
from mbas.inner import InnerSpec, shifted_solver
from mbas.sparsekit import spmv_complex
from mbas.systems import (
    SystemBundle,
    apply_A,
    apply_Areal,
    apply_Atilde,
    apply_G,
    apply_H1,
    apply_H2,
    apply_R,
    from_real,
    rhs_b,
    rhs_btilde,
    rhs_c,
    rhs_ctilde,
)

__all__ = [
    "CSV_FIELDS",
    "IterConfig",
    "SolveReport",
    "asss_solve",
    "asss_step",
    "bas_solve",
    "bas_step",
    "build_splitting_dense",
    "dense_blocks",
    "iteration_matrices_dense",
    "mbas_solve",
    "mbas_step",
    "spectral_radius",
]

DENSE_LIMIT = 225

CSV_FIELDS = [
    "method", "mode", "k", "nu", "omega", "alpha_policy", "alpha",
    "iterations", "converged", "final_residual", "elapsed_s",
]


@dataclass(frozen=True)
class IterConfig:
    alpha: float
    tol: float = 1e-6
    maxit: int = 500
    inner: InnerSpec = InnerSpec()

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.maxit < 1:
            raise ParameterError("maxit must be at least 1")
        object.__setattr__(self, "inner", InnerSpec.parse(self.inner))


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``residual_history[0]`` is the initial relative residual (1.0 from the
    zero start), so the history has ``iterations + 1`` entries.
    """

    method: str
    alpha: float
    iterations: int
    residual_history: list[float]
    converged: bool
    elapsed: float = 0.0
    mode: str = "stationary"
    nu: float | None = None
    omega: float | None = None
    k: int | None = None
    alpha_policy: str = "custom"
    true_residual: float | None = None

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def cell(self) -> str:
        """Table cell text: ``iterations(seconds)`` or a dagger."""
        if not self.converged:
            return "†"
        return f"{self.iterations}({self.elapsed:.2f})"

    def to_row(self) -> dict:
        return {
            "method": self.method,
            "mode": self.mode,
            "k": self.k,
            "nu": self.nu,
            "omega": self.omega,
            "alpha_policy": self.alpha_policy,
            "alpha": self.alpha,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "elapsed_s": round(self.elapsed, 6),
        }

    def to_json(self, history: bool = False) -> str:
        data = self.to_row()
        if history:
            data["residual_history"] = list(self.residual_history)
        return json.dumps(data)

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n").writerow(self.to_row())
        return buf.getvalue()


def _run(method, step, residual, x0, cfg: IterConfig, bnorm: float):
    """Shared outer loop; residuals are recomputed from scratch every step."""
    start = time.perf_counter()
    x = x0
    if bnorm == 0.0:
        return x, SolveReport(method, cfg.alpha, 0, [0.0], True, time.perf_counter() - start)
    history = [residual(x) / bnorm]
    converged = history[0] <= cfg.tol
    it = 0
    while not converged and it < cfg.maxit:
        x = step(x)
        it += 1
        res = residual(x) / bnorm
        history.append(res)
        if not math.isfinite(res):
            break
        converged = res <= cfg.tol
    elapsed = time.perf_counter() - start
    return x, SolveReport(method, cfg.alpha, it, history, bool(converged), elapsed)


def _original_residual(s: SystemBundle, x) -> float:
    b = rhs_b(s)
    bnorm = np.linalg.norm(b)
    return float(np.linalg.norm(b - apply_A(s, x)) / bnorm) if bnorm else 0.0


def _blocks(v, m):
    return np.asarray(v).reshape(2, m).T


def _unblocks(cols):
    return cols.T.ravel()


def mbas_step(s: SystemBundle, cfg: IterConfig, bt=None):
    """Return one MBAS sweep ``x -> x_next`` as a closure."""
    alpha, theta, nu = cfg.alpha, s.theta, s.nu
    snt = math.sqrt(nu * theta)
    solve1 = shifted_solver(s, shift=alpha, mass=theta, inner=cfg.inner)
    solve2 = shifted_solver(s, shift=alpha, stiff=snt, inner=cfg.inner)
    if bt is None:
        bt = rhs_btilde(s)
    Rbt = apply_R(s.params, bt)
    m = s.m

    def step(x):
        r1 = alpha * x - snt * apply_R(s.params, apply_H2(s, x)) + bt
        half = _unblocks(solve1.solve(_blocks(r1, m)))
        r2 = alpha * half + theta * apply_R(s.params, apply_H1(s, half)) - Rbt
        return _unblocks(solve2.solve(_blocks(r2, m)))

    return step


def mbas_solve(s: SystemBundle, cfg: IterConfig, x0=None):
    """MBAS iteration on the transformed system from the zero vector."""
    bt = rhs_btilde(s)
    x0 = np.zeros(2 * s.m, dtype=np.complex128) if x0 is None else np.asarray(x0, dtype=np.complex128)
    step = mbas_step(s, cfg, bt)
    x, rep = _run(
        "mbas", step, lambda x: np.linalg.norm(bt - apply_Atilde(s, x)), x0, cfg, np.linalg.norm(bt)
    )
    rep.nu, rep.omega = s.nu, s.omega
    rep.true_residual = _original_residual(s, x)
    return x, rep


def bas_step(s: SystemBundle, cfg: IterConfig, b=None):
    """One BAS sweep with ``V = H1``."""
    alpha, theta, nu, w = cfg.alpha, s.theta, s.nu, s.omega
    sn = math.sqrt(nu)
    m = s.m
    solve1 = shifted_solver(s, mass=1.0, inner=cfg.inner)
    solve2 = shifted_solver(s, mass=alpha, stiff=sn, inner=cfg.inner)
    if b is None:
        b = rhs_b(s)
    b1, b2 = b[:m], b[m:]
    P1b = np.concatenate([b1 - 1j * w * sn * b2, 1j * w * sn * b1 - b2]) / theta
    P2b = np.concatenate([b2, b1])

    def step(x):
        y, q = x[:m], x[m:]
        Ky, Kq = spmv_complex(s.K, y), spmv_complex(s.K, q)
        My, Mq = spmv_complex(s.M, y), spmv_complex(s.M, q)
        S1x = np.concatenate([-1j * w * nu * Ky + sn * Kq, -sn * Ky + 1j * w * nu * Kq]) / theta
        r1 = alpha * np.concatenate([My, Mq]) - S1x + P1b
        half = _unblocks(solve1.solve(_blocks(r1, m))) / (1.0 + alpha)
        y, q = half[:m], half[m:]
        My, Mq = spmv_complex(s.M, y), spmv_complex(s.M, q)
        S2x = np.concatenate([1j * w * sn * My - Mq, My - 1j * w * sn * Mq])
        r2 = alpha * np.concatenate([My, Mq]) - S2x + P2b
        return _unblocks(solve2.solve(_blocks(r2, m)))

    return step


def bas_solve(s: SystemBundle, cfg: IterConfig, x0=None):
    """BAS iteration (``V = H1``) on ``A x = b`` from the zero vector."""
    b = rhs_b(s)
    x0 = np.zeros(2 * s.m, dtype=np.complex128) if x0 is None else np.asarray(x0, dtype=np.complex128)
    step = bas_step(s, cfg, b)
    x, rep = _run("bas", step, lambda x: np.linalg.norm(b - apply_A(s, x)), x0, cfg, np.linalg.norm(b))
    rep.nu, rep.omega = s.nu, s.omega
    rep.true_residual = rep.final_residual
    return x, rep


def asss_step(s: SystemBundle, cfg: IterConfig, ct=None):
    """One ASSS sweep on ``(Mr + G Kr) y = T c``."""
    alpha, theta, nu = cfg.alpha, s.theta, s.nu
    kscale = math.sqrt(nu / theta)
    m = s.m
    solve1 = shifted_solver(s, shift=alpha, mass=1.0, inner=cfg.inner)
    solve2 = shifted_solver(s, shift=alpha, stiff=kscale, inner=cfg.inner)
    if ct is None:
        ct = rhs_ctilde(s)
    Gct = apply_G(s.params, ct)

    def cols(v):
        return v.reshape(4, m).T

    def step(y):
        Ky = kscale * (s.K.scipy @ cols(y)).T.ravel()
        half = solve1.solve(cols(alpha * y - apply_G(s.params, Ky) + ct)).T.ravel()
        Mh = (s.M.scipy @ cols(half)).T.ravel()
        return solve2.solve(cols(alpha * half + apply_G(s.params, Mh) - Gct)).T.ravel()

    return step


def asss_solve(s: SystemBundle, cfg: IterConfig, y0=None):
    """ASSS iteration; the iterate is the real block vector ``(Re y, Im y, Re q, Im q)``."""
    c = rhs_c(s)
    y0 = np.zeros(4 * s.m) if y0 is None else np.asarray(y0, dtype=np.float64)
    step = asss_step(s, cfg)
    y, rep = _run("asss", step, lambda y: np.linalg.norm(c - apply_Areal(s, y)), y0, cfg, np.linalg.norm(c))
    rep.nu, rep.omega = s.nu, s.omega
    rep.true_residual = _original_residual(s, from_real(y))
    return y, rep


# ---------------------------------------------------------------------------
# dense oracles, small meshes only


def dense_blocks(s: SystemBundle):
    """Dense ``(I, R, H1, H2)`` of order ``2m``."""
    m = s.m
    if m > DENSE_LIMIT:
        raise DimensionError(f"dense construction limited to m <= {DENSE_LIMIT}, got m = {m}")
    nu, w, theta = s.nu, s.omega, s.theta
    I = np.eye(m)
    R = np.block([[-1j * w * nu * I, math.sqrt(nu) * I], [-math.sqrt(nu) * I, 1j * w * nu * I]])
    R /= math.sqrt(nu * theta)
    M, K = s.M.to_dense(), s.K.to_dense()
    Z = np.zeros((m, m))
    H1 = np.block([[M, Z], [Z, M]]).astype(np.complex128)
    H2 = np.block([[K, Z], [Z, K]]).astype(np.complex128)
    return np.eye(2 * m, dtype=np.complex128), R, H1, H2


def build_splitting_dense(s: SystemBundle, alpha: float):
    """Dense ``(B, C, At)`` with ``At = B - C`` (MBAS splitting)."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    I, R, H1, H2 = dense_blocks(s)
    theta, snt = s.theta, math.sqrt(s.nu * s.theta)
    inv_IR = (I - R) / 2.0
    B = inv_IR @ (alpha * I + theta * H1) @ R @ (alpha * I + snt * H2) / alpha
    C = inv_IR @ (alpha * R - theta * H1) @ (alpha * I - snt * R @ H2) / alpha
    At = theta * H1 + snt * R @ H2
    return B, C, At


def iteration_matrices_dense(s: SystemBundle, alpha: float):
    """Dense ``(P, Q)`` with ``x_next = P x + Q bt``."""
    I, R, H1, H2 = dense_blocks(s)
    theta, snt = s.theta, math.sqrt(s.nu * s.theta)
    first = np.linalg.inv(alpha * I + theta * H1)
    second = np.linalg.inv(alpha * I + snt * H2)
    P = second @ (alpha * I + theta * R @ H1) @ first @ (alpha * I - snt * R @ H2)
    Q = alpha * second @ (I - R) @ first
    return P, Q


def spectral_radius(op) -> float:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError("spectral radius needs a square matrix")
    if op.shape[0] > 2 * DENSE_LIMIT:
        raise DimensionError(f"dense eigensolve limited to order {2 * DENSE_LIMIT}")
    try:
        eig = np.linalg.eigvals(op)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue solver failed: {exc}") from exc
    return float(np.max(np.abs(eig)))
