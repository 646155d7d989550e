"""Inner solvers for the real SPD systems ``shift*I + a*M + b*K``.

Every half-step of the splitting methods solves with such a matrix; each is
built once per coefficient triple and strategy and cached on the bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mbas.errors import ParameterError
from mbas.sparsekit import CsrMatrix, cg_solve, spd_factorize

__all__ = ["InnerSpec", "ShiftedSolver", "shifted_solver"]


@dataclass(frozen=True)
class InnerSpec:
    """``direct`` (sparse factorization) or ``cg`` with a relative tolerance."""

    kind: str = "direct"
    tol: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("direct", "cg"):
            raise ParameterError(f"unknown inner solver {self.kind!r}")
        if not self.tol > 0:
            raise ParameterError("inner tolerance must be positive")

    @classmethod
    def parse(cls, text) -> "InnerSpec":
        if isinstance(text, InnerSpec):
            return text
        text = str(text).strip().lower()
        if text == "direct":
            return cls("direct")
        if text == "cg":
            return cls("cg")
        if text.startswith("cg:"):
            try:
                return cls("cg", float(text[3:]))
            except ValueError:
                raise ParameterError(f"bad CG tolerance in {text!r}") from None
        raise ParameterError(f"inner solver must be 'direct' or 'cg:<tol>', got {text!r}")

    def __str__(self):
        return "direct" if self.kind == "direct" else f"cg:{self.tol:g}"


class ShiftedSolver:
    """Solves with a fixed real SPD matrix; accepts complex and multi-column data."""

    def __init__(self, matrix: CsrMatrix, inner: InnerSpec):
        self.matrix = matrix
        self.inner = inner
        self._factor = spd_factorize(matrix) if inner.kind == "direct" else None

    def _solve_real(self, b: np.ndarray) -> np.ndarray:
        if self._factor is not None:
            return self._factor.solve(b)
        if b.ndim == 1:
            return cg_solve(self.matrix, b, tol=self.inner.tol)[0]
        return np.column_stack([cg_solve(self.matrix, col, tol=self.inner.tol)[0] for col in b.T])

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b)
        if not np.iscomplexobj(b):
            return self._solve_real(np.asarray(b, dtype=np.float64))
        # one call on stacked real/imaginary columns
        flat = b.reshape(b.shape[0], -1)
        k = flat.shape[1]
        out = self._solve_real(np.ascontiguousarray(np.hstack([flat.real, flat.imag])))
        out = out.reshape(b.shape[0], 2 * k)
        return (out[:, :k] + 1j * out[:, k:]).reshape(b.shape)


def shifted_solver(bundle, shift: float = 0.0, mass: float = 0.0, stiff: float = 0.0, inner="direct") -> ShiftedSolver:
    """Cached solver for ``shift*I + mass*M + stiff*K`` built from the bundle's matrices."""
    inner = InnerSpec.parse(inner)
    key = (float(shift), float(mass), float(stiff), inner)
    solver = bundle.cache.get(key)
    if solver is None:
        a = bundle.M.linear_combination(mass, bundle.K, stiff)
        if shift:
            a = a.shifted(shift)
        solver = ShiftedSolver(a, inner)
        bundle.cache[key] = solver
    return solver
