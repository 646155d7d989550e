"""Iteration-parameter formulas, the convergence bound and eigenvalue extremes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from mbas.errors import ConvergenceError, ParameterError
from mbas.sparsekit import CsrMatrix, frob_norm, spd_factorize

__all__ = [
    "AlphaPolicy",
    "SpectralExtremes",
    "alpha1",
    "alpha2",
    "alpha_est",
    "chi",
    "eig_extremes",
    "eta_bound",
    "phi",
    "resolve_alpha",
    "theta",
    "vartheta",
]

DENSE_EIG_LIMIT = 225


def theta(nu: float, omega: float) -> float:
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    if not omega >= 0:
        raise ParameterError(f"omega must be nonnegative, got {omega}")
    return 1.0 + nu * omega**2


def alpha_est(s) -> float:
    """Frobenius-norm estimate ``theta ||M||_F / sqrt(m)``."""
    return s.theta * frob_norm(s.M) / math.sqrt(s.m)


def phi(s, alpha: float) -> float:
    """Estimator function whose first linear factor vanishes at :func:`alpha_est`.

    Uses the closed forms ``||R||_F = ||I||_F = sqrt(2m)``,
    ``||(I+R)^{-1}||_F = ||(I-R)/2||_F = sqrt(m)``, ``||H1||_F = sqrt(2)||M||_F``
    and ``||R H2||_F = ||H2||_F = sqrt(2)||K||_F``.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    m = s.m
    norm_I = math.sqrt(2 * m)
    norm_H1 = math.sqrt(2.0) * frob_norm(s.M)
    norm_RH2 = math.sqrt(2.0) * frob_norm(s.K)
    first = alpha * norm_I - s.theta * norm_H1
    second = alpha * norm_I - math.sqrt(s.nu * s.theta) * norm_RH2
    return math.sqrt(m) * first * second / alpha


@dataclass(frozen=True)
class SpectralExtremes:
    min_eig: float
    max_eig: float
    method: str = "dense"
    tol: float = 0.0

    def __post_init__(self):
        if not (0 < self.min_eig <= self.max_eig):
            raise ParameterError(f"invalid extremes ({self.min_eig}, {self.max_eig})")


def _ratio(alpha, t):
    return math.sqrt(alpha**2 + t**2) / (alpha + t)


def chi(alpha: float, lam: SpectralExtremes, theta_: float) -> float:
    """Max over the spectrum of M of ``sqrt(a^2 + theta^2 l^2) / (a + theta l)``.

    The map is decreasing below ``t = a`` and increasing above it, so the
    maximum sits at an end of the spectrum.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    return max(_ratio(alpha, theta_ * lam.min_eig), _ratio(alpha, theta_ * lam.max_eig))


def vartheta(alpha: float, mu: SpectralExtremes, nu: float, theta_: float) -> float:
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    c = math.sqrt(nu * theta_)
    return max(_ratio(alpha, c * mu.min_eig), _ratio(alpha, c * mu.max_eig))


def eta_bound(alpha: float, lam: SpectralExtremes, mu: SpectralExtremes, nu: float, omega: float) -> float:
    """Upper bound on the spectral radius of the MBAS iteration matrix."""
    th = theta(nu, omega)
    return chi(alpha, lam, th) * vartheta(alpha, mu, nu, th)


def alpha1(lam: SpectralExtremes, theta_: float) -> float:
    """Minimizer of :func:`chi`."""
    return theta_ * math.sqrt(lam.min_eig * lam.max_eig)


def alpha2(mu: SpectralExtremes, nu: float, theta_: float) -> float:
    """Minimizer of :func:`vartheta`."""
    return math.sqrt(nu * theta_ * mu.min_eig * mu.max_eig)


def _rayleigh_iteration(apply, n, tol, maxit, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    rho = 0.0
    for it in range(1, maxit + 1):
        y = apply(x)
        rho_new = float(x @ y)
        ynorm = np.linalg.norm(y)
        resid = np.linalg.norm(y - rho_new * x)
        x = y / ynorm
        if resid <= tol * abs(rho_new) or (it > 1 and abs(rho_new - rho) <= 1e-3 * tol * abs(rho_new)):
            return rho_new, it
        rho = rho_new
    raise ConvergenceError(f"power iteration stalled after {maxit} steps", residual=float(resid), iterations=maxit)


def _lanczos_extremes(apply, n, tol, maxit, seed):
    """Extreme Ritz values with full reorthogonalization.

    Stops when the Ritz residual ``|beta_k s_k|`` of both end Ritz pairs is
    below ``tol`` times the Ritz value; that residual bounds the distance to
    an eigenvalue.
    """
    rng = np.random.default_rng(seed)
    maxit = min(maxit, n)
    Q = np.zeros((maxit + 1, n))
    q = rng.standard_normal(n)
    Q[0] = q / np.linalg.norm(q)
    alphas, betas = [], []
    for k in range(maxit):
        w = apply(Q[k])
        a = float(Q[k] @ w)
        w = w - a * Q[k] - (betas[-1] * Q[k - 1] if k else 0.0)
        w -= Q[: k + 1].T @ (Q[: k + 1] @ w)
        b = float(np.linalg.norm(w))
        alphas.append(a)
        last = b == 0.0 or k + 1 == maxit
        if k % 10 == 9 or last:
            vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas))
            res_lo = abs(b * vecs[-1, 0])
            res_hi = abs(b * vecs[-1, -1])
            if (res_lo <= tol * abs(vals[0]) and res_hi <= tol * abs(vals[-1])) or b == 0.0 or k + 1 == n:
                return float(vals[0]), float(vals[-1]), k + 1
        betas.append(b)
        Q[k + 1] = w / b
    raise ConvergenceError(f"Lanczos did not converge in {maxit} steps", residual=max(res_lo, res_hi),
                           iterations=maxit)


def eig_extremes(a: CsrMatrix, tol: float = 1e-6, method: str = "auto", maxit: int = 200_000,
                 seed: int = 0) -> SpectralExtremes:
    """Smallest and largest eigenvalue of an SPD matrix.

    ``method`` is ``dense`` (symmetric eigensolve), ``lanczos``, or
    ``power`` (power iteration for the top, inverse iteration with a sparse
    factorization for the bottom). ``auto`` picks dense up to order 225 and
    Lanczos above; power iteration is robust but slow on the clustered
    spectra of fine-mesh mass matrices.
    """
    if method == "auto":
        method = "dense" if a.nrows <= DENSE_EIG_LIMIT else "lanczos"
    if method == "dense":
        w = np.linalg.eigvalsh(a.to_dense())
        return SpectralExtremes(float(w[0]), float(w[-1]), "dense", 0.0)
    A = a.scipy
    if method == "lanczos":
        lo, hi, _ = _lanczos_extremes(lambda v: A @ v, a.nrows, tol, min(maxit, 2000), seed)
        return SpectralExtremes(lo, hi, "lanczos", tol)
    if method != "power":
        raise ParameterError(f"unknown eigenvalue method {method!r}")
    lmax, _ = _rayleigh_iteration(lambda v: A @ v, a.nrows, tol, maxit, seed)
    factor = spd_factorize(a)
    inv, _ = _rayleigh_iteration(factor.solve, a.nrows, tol, maxit, seed + 1)
    return SpectralExtremes(1.0 / inv, lmax, "power", tol)


@dataclass(frozen=True)
class AlphaPolicy:
    """How the iteration parameter is chosen.

    Kinds: ``estimated`` (Frobenius estimate), ``bas`` (``theta``),
    ``bas-prec`` (``theta / (1 + sqrt(nu) omega)``), ``asss``
    (``sqrt(l_min l_max)`` of M), ``alpha1``, ``alpha2`` and ``custom``.
    """

    kind: str
    value: float | None = None

    KINDS = ("estimated", "bas", "bas-prec", "asss", "alpha1", "alpha2", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown alpha policy {self.kind!r}")
        if self.kind == "custom" and not (self.value is not None and self.value > 0):
            raise ParameterError("custom alpha must be a positive number")

    @classmethod
    def parse(cls, text) -> "AlphaPolicy":
        if isinstance(text, AlphaPolicy):
            return text
        text = str(text).strip().lower()
        if text.startswith("custom:"):
            try:
                return cls("custom", float(text.split(":", 1)[1]))
            except ValueError:
                raise ParameterError(f"bad custom alpha {text!r}") from None
        return cls(text)

    def __str__(self):
        return f"custom:{self.value:g}" if self.kind == "custom" else self.kind


def _extremes(s, which):
    key = ("eig", which)
    ext = s.cache.get(key)
    if ext is None:
        ext = eig_extremes(s.M if which == "M" else s.K)
        s.cache[key] = ext
    return ext


def resolve_alpha(policy, s) -> float:
    policy = AlphaPolicy.parse(policy)
    nu, omega, th = s.nu, s.omega, s.theta
    kind = policy.kind
    if kind == "estimated":
        return alpha_est(s)
    if kind == "bas":
        return th
    if kind == "bas-prec":
        return th / (1.0 + math.sqrt(nu) * omega)
    if kind == "asss":
        lam = _extremes(s, "M")
        return math.sqrt(lam.min_eig * lam.max_eig)
    if kind == "alpha1":
        return alpha1(_extremes(s, "M"), th)
    if kind == "alpha2":
        return alpha2(_extremes(s, "K"), nu, th)
    return float(policy.value)
