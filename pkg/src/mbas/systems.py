"""Matrix-free forms of the control system.

Three equivalent algebraic forms are provided:

* the complex two-by-two block system ``A x = b`` with
  ``A = [[M, sqrt(nu)(K - i w M)], [sqrt(nu)(K + i w M), -M]]`` and
  ``b = (M yd; 0)``;
* the transformed system ``At x = bt`` obtained by premultiplying with
  ``R1^H``, ``At = theta H1 + sqrt(nu theta) R H2``;
* the real ``4m`` form ``Ar y = c`` acting on ``(Re y, Im y, Re q, Im q)``.

Complex block vectors are complex arrays of length ``2m`` (state block then
adjoint block); real block vectors are float arrays of length ``4m``.

The real form uses the sign pattern::

    [ M        0        sK     w sM ]
    [ 0        M      -w sM    sK   ]     s = sqrt(nu)
    [ sK     -w sM     -M      0    ]
    [ w sM     sK       0     -M    ]

which is the real/imaginary split of the complex system; the cross-form
tests check this against dense solves. The real splitting iterates on
``Ar_t = Mr + G Kr``, the real image of ``At / theta``; its right-hand side
is ``T c`` with ``T`` the real image of ``R1^H / theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from mbas.errors import DimensionError, ParameterError
from mbas.meshfem import Grid, assemble_mass, assemble_stiffness, assemble_target
from mbas.sparsekit import CsrMatrix, spmv, spmv_complex

__all__ = [
    "ProblemParams",
    "SystemBundle",
    "apply_A",
    "apply_Areal",
    "apply_Areal_tilde",
    "apply_Atilde",
    "apply_G",
    "apply_H1",
    "apply_H2",
    "apply_R",
    "apply_R1",
    "apply_R1H",
    "apply_R2",
    "apply_T",
    "build_system",
    "from_real",
    "recover_control",
    "rhs_b",
    "rhs_btilde",
    "rhs_c",
    "rhs_ctilde",
    "to_real",
]


@dataclass(frozen=True)
class ProblemParams:
    nu: float
    omega: float
    grid: Grid | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")
        if not self.omega >= 0:
            raise ParameterError(f"omega must be nonnegative, got {self.omega}")

    @property
    def theta(self) -> float:
        return 1.0 + self.nu * self.omega**2


@dataclass(frozen=True, eq=False)
class SystemBundle:
    """Assembled matrices plus the scalar parameters of one problem instance.

    ``cache`` holds inner-solver factorizations keyed by the shifted matrix
    they factor; bundles derived with :meth:`with_params` share it, so a
    sweep over ``(nu, omega)`` re-uses both the assembly and any factor whose
    shift and scale happen to coincide.
    """

    M: CsrMatrix
    K: CsrMatrix
    ybar_d: np.ndarray
    params: ProblemParams
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        m = self.M.nrows
        if self.M.shape != (m, m) or self.K.shape != (m, m):
            raise DimensionError("M and K must be square of equal order")
        if np.shape(self.ybar_d) != (m,):
            raise DimensionError("target vector length must equal the matrix order")
        if self.params.grid is not None and self.params.grid.m != m:
            raise DimensionError("grid size does not match the matrices")

    @property
    def m(self) -> int:
        return self.M.nrows

    @property
    def nu(self) -> float:
        return self.params.nu

    @property
    def omega(self) -> float:
        return self.params.omega

    @property
    def theta(self) -> float:
        return self.params.theta

    def with_params(self, nu: float, omega: float, share_cache: bool = True) -> "SystemBundle":
        """Same matrices, new ``(nu, omega)``.

        With ``share_cache=False`` the new bundle starts from a copy holding
        only the parameter-independent entries (eigenvalue extremes).
        """
        params = ProblemParams(nu, omega, self.params.grid)
        if share_cache:
            return replace(self, params=params)
        cache = {k: v for k, v in self.cache.items() if k[0] == "eig"}
        return replace(self, params=params, cache=cache)

    def clear_factors(self) -> None:
        for key in [k for k in self.cache if k[0] != "eig"]:
            del self.cache[key]


def build_system(level: int, nu: float, omega: float) -> SystemBundle:
    grid = Grid(level)
    return SystemBundle(
        assemble_mass(grid), assemble_stiffness(grid), assemble_target(grid),
        ProblemParams(nu, omega, grid),
    )


def _split2(v, m: int):
    v = np.asarray(v)
    if v.shape != (2 * m,):
        raise DimensionError(f"block vector has shape {v.shape}, expected ({2 * m},)")
    return v[:m], v[m:]


def _split4(v, m: int):
    v = np.asarray(v)
    if v.shape != (4 * m,):
        raise DimensionError(f"real block vector has shape {v.shape}, expected ({4 * m},)")
    return v[:m], v[m:2 * m], v[2 * m:3 * m], v[3 * m:]


def _params(p) -> ProblemParams:
    return p.params if isinstance(p, SystemBundle) else p


def apply_H1(s: SystemBundle, x) -> np.ndarray:
    y, q = _split2(x, s.m)
    return np.concatenate([spmv_complex(s.M, y), spmv_complex(s.M, q)])


def apply_H2(s: SystemBundle, x) -> np.ndarray:
    y, q = _split2(x, s.m)
    return np.concatenate([spmv_complex(s.K, y), spmv_complex(s.K, q)])


def apply_A(s: SystemBundle, x) -> np.ndarray:
    y, q = _split2(x, s.m)
    sn, w = math.sqrt(s.nu), s.omega
    My, Mq = spmv_complex(s.M, y), spmv_complex(s.M, q)
    Ky, Kq = spmv_complex(s.K, y), spmv_complex(s.K, q)
    return np.concatenate([My + sn * (Kq - 1j * w * Mq), sn * (Ky + 1j * w * My) - Mq])


def rhs_b(s: SystemBundle) -> np.ndarray:
    top = spmv(s.M, s.ybar_d).astype(np.complex128)
    return np.concatenate([top, np.zeros(s.m, dtype=np.complex128)])


def apply_R(p, v) -> np.ndarray:
    """``R = R1^H R2 / sqrt(nu theta)``: skew-Hermitian, unitary, ``R^2 = -I``."""
    p = _params(p)
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] % 2:
        raise DimensionError("block vector must have even length")
    m = v.shape[0] // 2
    y, q = v[:m], v[m:]
    nu, w = p.nu, p.omega
    c = 1.0 / math.sqrt(nu * p.theta)
    sn = math.sqrt(nu)
    return c * np.concatenate([-1j * w * nu * y + sn * q, -sn * y + 1j * w * nu * q])


def apply_R1(p, v) -> np.ndarray:
    p = _params(p)
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] % 2:
        raise DimensionError("block vector must have even length")
    m = v.shape[0] // 2
    y, q = v[:m], v[m:]
    a = p.omega * math.sqrt(p.nu)
    return np.concatenate([y - 1j * a * q, 1j * a * y - q])


# R1 is Hermitian
apply_R1H = apply_R1


def apply_R2(p, v) -> np.ndarray:
    p = _params(p)
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] % 2:
        raise DimensionError("block vector must have even length")
    m = v.shape[0] // 2
    sn = math.sqrt(p.nu)
    return np.concatenate([sn * v[m:], sn * v[:m]])


def apply_Atilde(s: SystemBundle, x) -> np.ndarray:
    return s.theta * apply_H1(s, x) + math.sqrt(s.nu * s.theta) * apply_R(s.params, apply_H2(s, x))


def rhs_btilde(s: SystemBundle) -> np.ndarray:
    return apply_R1H(s.params, rhs_b(s))


def to_real(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] % 2:
        raise DimensionError("block vector must have even length")
    m = x.shape[0] // 2
    return np.concatenate([x[:m].real, x[:m].imag, x[m:].real, x[m:].imag]).astype(np.float64)


def from_real(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] % 4:
        raise DimensionError("real block vector length must be a multiple of 4")
    m = y.shape[0] // 4
    return np.concatenate([y[:m] + 1j * y[m:2 * m], y[2 * m:3 * m] + 1j * y[3 * m:]])


def apply_Areal(s: SystemBundle, v) -> np.ndarray:
    a, b, c, d = _split4(v, s.m)
    sn, w = math.sqrt(s.nu), s.omega
    M, K = s.M, s.K
    Ma, Mb, Mc, Md = (spmv(M, t) for t in (a, b, c, d))
    Ka, Kb, Kc, Kd = (spmv(K, t) for t in (a, b, c, d))
    return np.concatenate([
        Ma + sn * Kc + w * sn * Md,
        Mb - w * sn * Mc + sn * Kd,
        sn * Ka - w * sn * Mb - Mc,
        w * sn * Ma + sn * Kb - Md,
    ])


def rhs_c(s: SystemBundle) -> np.ndarray:
    return to_real(rhs_b(s))


def apply_G(p, v) -> np.ndarray:
    """Real image of ``R``; orthogonal, skew-symmetric, ``G^2 = -I``."""
    p = _params(p)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] % 4:
        raise DimensionError("real block vector length must be a multiple of 4")
    m = v.shape[0] // 4
    a, b, c, d = v[:m], v[m:2 * m], v[2 * m:3 * m], v[3 * m:]
    wn, sn = p.omega * p.nu, math.sqrt(p.nu)
    scale = 1.0 / math.sqrt(p.nu * p.theta)
    return scale * np.concatenate([wn * b + sn * c, -wn * a + sn * d, -sn * a - wn * d, -sn * b + wn * c])


def apply_T(p, v) -> np.ndarray:
    """Real image of ``R1^H / theta``; maps the real system onto the one the real splitting uses."""
    p = _params(p)
    return to_real(apply_R1H(p, from_real(v))) / p.theta


def apply_Areal_tilde(s: SystemBundle, v) -> np.ndarray:
    """``Mr v + G Kr v`` with ``Mr = bldiag(M x4)``, ``Kr = sqrt(nu/theta) bldiag(K x4)``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (4 * s.m,):
        raise DimensionError(f"real block vector has shape {v.shape}, expected ({4 * s.m},)")
    cols = v.reshape(4, s.m).T
    Mv = spmv(s.M, cols).T.ravel()
    Kv = math.sqrt(s.nu / s.theta) * spmv(s.K, cols).T.ravel()
    return Mv + apply_G(s.params, Kv)


def rhs_ctilde(s: SystemBundle) -> np.ndarray:
    return apply_T(s.params, rhs_c(s))


def recover_control(q, nu: float) -> np.ndarray:
    """Control coefficients ``u = q / sqrt(nu)`` from the scaled adjoint block."""
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    return np.asarray(q) / math.sqrt(nu)
