"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The k=7 table sweeps take several minutes. Run on its own with
``python tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py -s``.
"""

import math
import sys
import time
from decimal import Decimal
from functools import lru_cache
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, crandn, dense_A, dense_Areal  # noqa: E402
from reference_tables import ALPHA_EST, NU, OMEGA, PRECONDITIONED, STATIONARY  # noqa: E402

from mbas.cli import RunSpec, run_sweep  # noqa: E402
from mbas.inner import InnerSpec  # noqa: E402
from mbas.krylov import GmresConfig, passs_solve, pbas_solve, pmbas_solve  # noqa: E402
from mbas.params import alpha1, alpha2, alpha_est, chi, eig_extremes, eta_bound, phi, resolve_alpha, vartheta  # noqa: E402
from mbas.splittings import (  # noqa: E402
    IterConfig, asss_solve, bas_solve, build_splitting_dense, iteration_matrices_dense, mbas_solve, mbas_step,
    spectral_radius,
)
from mbas.systems import (  # noqa: E402
    ProblemParams, apply_Atilde, apply_G, apply_H1, apply_H2, apply_R, apply_R1, apply_R1H,
    build_system, from_real, rhs_b, rhs_btilde, rhs_c,
)

K = 7
TOL = 1e-6


def report(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def base():
    return build_system(K, NU[0], OMEGA[0])


_SWEEPS = {}


def sweep(method, mode):
    """Reference-grid reports as rows per nu; computed once per session."""
    if (method, mode) not in _SWEEPS:
        spec = RunSpec(K, NU, OMEGA, method=method, mode=mode, tol=TOL, maxit=500)
        reps = run_sweep(spec, base())
        _SWEEPS[method, mode] = [reps[i * len(OMEGA):(i + 1) * len(OMEGA)] for i in range(len(NU))]
    return _SWEEPS[method, mode]


def counts(grid):
    return [[r.iterations if r.converged else None for r in row] for row in grid]


def max_offset(got, want):
    worst = 0
    for grow, wrow in zip(got, want):
        for g, w in zip(grow, wrow):
            if g is None or w is None:
                if g is not w:
                    return math.inf
                continue
            worst = max(worst, abs(g - w))
    return worst


def offenders(got, want, tol):
    cells = []
    for i, (grow, wrow) in enumerate(zip(got, want)):
        for j, (g, w) in enumerate(zip(grow, wrow)):
            if g is None or w is None or abs(g - w) > tol:
                cells.append(f"({NU[i]:g},{OMEGA[j]:g}) {g} vs {w}")
    return cells


def test_alpha_estimates():
    start = time.perf_counter()
    s = build_system(K, 1.0, 1.0)
    bad = []
    for i, nu in enumerate(NU):
        for j, omega in enumerate(OMEGA):
            value = alpha_est(s.with_params(nu, omega))
            printed = ALPHA_EST[i][j]
            decimals = -Decimal(printed).as_tuple().exponent
            rel = abs(value - float(printed)) / float(printed)
            if rel > 2e-3 and f"{value:.{decimals}f}" != printed:
                bad.append(f"({nu:g},{omega:g}) {value:.6g} vs {printed}")
    elapsed = time.perf_counter() - start
    report(1, not bad and elapsed < 10,
           f"36 alpha estimates, {36 - len(bad)} within 2e-3 or printed rounding, {elapsed:.1f} s"
           + (f"; off: {bad}" if bad else ""))


def test_stationary_counts():
    mbas = counts(sweep("mbas", "stationary"))
    bas = counts(sweep("bas", "stationary"))
    asss = counts(sweep("asss", "stationary"))
    d_mbas = max_offset(mbas, STATIONARY["mbas"])
    d_asss = max_offset(asss, STATIONARY["asss"])
    daggers = {(NU[i], OMEGA[j]) for i, row in enumerate(bas) for j, v in enumerate(row) if v is None}
    want = {(NU[i], OMEGA[j]) for i, row in enumerate(STATIONARY["bas"]) for j, v in enumerate(row) if v is None}
    ok = d_mbas <= 5 and d_asss <= 6 and daggers == want
    report(2, ok, f"MBAS max offset {d_mbas} (<=5), ASSS max offset {d_asss} (<=6), "
                  f"BAS non-convergence cells {'match' if daggers == want else f'{sorted(daggers)} vs {sorted(want)}'}")


def _ordering_mismatches(got):
    names = ("mbas", "bas", "asss")
    bad = []
    for i in range(len(NU)):
        for j in range(len(OMEGA)):
            mine = [got[n][i][j] for n in names]
            ref = [PRECONDITIONED[n][i][j] for n in names]
            for a in range(3):
                for b in range(a + 1, 3):
                    rs = np.sign(ref[a] - ref[b])
                    if rs != 0 and (mine[a] is None or mine[b] is None or np.sign(mine[a] - mine[b]) != rs):
                        bad.append(f"({NU[i]:g},{OMEGA[j]:g}) {mine} vs {ref}")
                        break
                else:
                    continue
                break
    return bad


def test_preconditioned_counts():
    got = {n: counts(sweep(n, "gmres")) for n in ("mbas", "bas", "asss")}
    offs = {n: max_offset(got[n], PRECONDITIONED[n]) for n in got}
    within = all(v <= 4 for v in offs.values())
    detail = ", ".join(f"P-{n.upper()} max offset {offs[n]}" for n in got)
    if within:
        report(3, True, detail + " (<=4)")
        return
    order_bad = _ordering_mismatches(got)
    far = {n: offenders(got[n], PRECONDITIONED[n], 4) for n in got if offs[n] > 4}
    report(3, not order_bad,
           detail + f"; beyond +-4: {far}; per-cell ordering fallback: "
           + ("all 36 cells match" if not order_bad else f"{len(order_bad)} cells differ {order_bad}"))


def test_contraction_bound():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    s0 = build_system(2, 1.0, 1.0)
    lam, mu = eig_extremes(s0.M), eig_extremes(s0.K)
    worst_rho, worst_gap, n = 0.0, -np.inf, 0
    for _ in range(20):
        nu = 10 ** rng.uniform(-8, -2)
        omega = 10 ** rng.uniform(-4, 4)
        s = s0.with_params(nu, omega)
        a0 = alpha_est(s)
        for alpha in (a0 / 10, a0, 10 * a0):
            rho = spectral_radius(iteration_matrices_dense(s, alpha)[0])
            eta = eta_bound(alpha, lam, mu, nu, omega)
            worst_rho = max(worst_rho, rho)
            worst_gap = max(worst_gap, rho - eta)
            n += 1
    elapsed = time.perf_counter() - start
    ok = worst_rho < 1 and worst_gap <= 1e-6 and elapsed < 30
    report(4, ok, f"{n} (nu, omega, alpha) cases: max rho {worst_rho:.4f}, max rho - eta {worst_gap:.2e}, "
                  f"{elapsed:.1f} s")


def test_algebraic_identities():
    rng = np.random.default_rng(11)
    errs = {}

    def rel(a, b):
        return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)

    for nu, omega in ((1e-2, 1e4), (1e-6, 1.0), (1e-8, 1e-4), (1e-4, 10.0)):
        p = ProblemParams(nu, omega)
        s = build_system(3, nu, omega)
        v, w = crandn(rng, 2 * s.m), crandn(rng, 2 * s.m)
        y, z = rng.standard_normal(4 * s.m), rng.standard_normal(4 * s.m)
        Rv = apply_R(p, v)
        checks = {
            "R^2=-I": rel(apply_R(p, Rv), -v),
            "R^H=-R": abs(np.vdot(w, Rv) + np.vdot(apply_R(p, w), v)) / (np.linalg.norm(v) * np.linalg.norm(w)),
            "|Rv|=|v|": abs(np.linalg.norm(Rv) - np.linalg.norm(v)) / np.linalg.norm(v),
            "R1^H R1=theta I": rel(apply_R1H(p, apply_R1(p, v)), p.theta * v),
            "R H1=H1 R": rel(apply_R(p, apply_H1(s, v)), apply_H1(s, Rv)),
            "R H2=H2 R": rel(apply_R(p, apply_H2(s, v)), apply_H2(s, Rv)),
            "G^2=-I": rel(apply_G(p, apply_G(p, y)), -y),
            "G^T=-G": abs(apply_G(p, y) @ z + y @ apply_G(p, z)) / (np.linalg.norm(y) * np.linalg.norm(z)),
        }
        for key, val in checks.items():
            errs[key] = max(errs.get(key, 0.0), val)
    ok = all(v <= 1e-12 for v in errs.values())

    split = 0.0
    for k in (2, 3, 4):
        s = build_system(k, 1e-4, 10.0)
        for alpha in (1e-4, 0.1, 10.0):
            B, C, At = build_splitting_dense(s, alpha)
            split = max(split, np.linalg.norm(At - (B - C)) / np.linalg.norm(At))
    ok &= split <= 1e-10

    s = build_system(2, 1e-4, 10.0)
    alpha = alpha_est(s)
    P, Q = iteration_matrices_dense(s, alpha)
    x = crandn(rng, 2 * s.m)
    bt = rhs_btilde(s)
    fix = rel(mbas_step(s, IterConfig(alpha), bt)(x), P @ x + Q @ bt)
    ok &= fix <= 1e-9

    phis = []
    for nu, omega in ((1e-2, 1e4), (1e-6, 1.0)):
        s = build_system(4, nu, omega)
        a = alpha_est(s)
        phis.append(abs(phi(s, a)) / abs(phi(s, 2 * a)))
    ok &= max(phis) <= 1e-12
    worst = max(errs, key=errs.get)
    report(5, ok, f"operator identities max {errs[worst]:.1e} ({worst}); B-C vs At {split:.1e}; "
                  f"one-step consistency {fix:.1e}; |phi(alpha_est)| relative {max(phis):.1e}")


def _iterative_runs(s):
    a_est = alpha_est(s)
    a_asss = resolve_alpha("asss", s)
    cfg = IterConfig(a_est, TOL, 2000)
    gcfg = GmresConfig(TOL, 500)
    return [
        mbas_solve(s, cfg),
        bas_solve(s, IterConfig(s.theta, TOL, 2000)),
        asss_solve(s, IterConfig(a_asss, TOL, 2000)),
        pmbas_solve(s, a_est, gcfg),
        pbas_solve(s, s.theta / (1 + math.sqrt(s.nu) * s.omega), gcfg),
        passs_solve(s, a_asss, gcfg),
    ]


def test_cross_form_agreement():
    worst_dense, worst_res, n_conv = 0.0, 0.0, 0
    for k, nu, omega in ((2, 1e-4, 10.0), (3, 1e-2, 1e-4), (3, 1e-6, 1e3), (3, 1e-8, 1e4)):
        s = build_system(k, nu, omega)
        x = np.linalg.solve(dense_A(s), rhs_b(s))
        n2 = 2 * s.m
        At = np.column_stack([apply_Atilde(s, np.eye(n2, dtype=complex)[:, j]) for j in range(n2)])
        xt = np.linalg.solve(At, rhs_btilde(s))
        y = from_real(np.linalg.solve(dense_Areal(s), rhs_c(s)))
        worst_dense = max(worst_dense, np.linalg.norm(xt - x) / np.linalg.norm(x),
                          np.linalg.norm(y - x) / np.linalg.norm(x))
        for sol, rep in _iterative_runs(s):
            if rep.converged:
                z = from_real(sol) if sol.dtype.kind == "f" else sol
                r = np.linalg.norm(rhs_b(s) - dense_A(s) @ z) / np.linalg.norm(rhs_b(s))
                worst_res = max(worst_res, r)
                n_conv += 1
    # table sweeps already run by earlier criteria carry their original-system residual
    for grid in _SWEEPS.values():
        for row in grid:
            for rep in row:
                if rep.converged:
                    worst_res = max(worst_res, rep.true_residual)
                    n_conv += 1
    ok = worst_dense <= 1e-8 and worst_res <= 10 * TOL
    report(6, ok, f"dense forms agree to {worst_dense:.1e}; {n_conv} converged solves, "
                  f"max original-system residual {worst_res:.2e} (<= {10 * TOL:g})")


def test_minimizers():
    s = base()
    lam, mu = eig_extremes(s.M), eig_extremes(s.K)
    grid = np.logspace(-8, 4, 100)
    worst = -np.inf
    for nu, omega in ((1e-2, 1e4), (1e-4, 10.0), (1e-8, 1e-4)):
        th = 1 + nu * omega**2
        a1, a2 = alpha1(lam, th), alpha2(mu, nu, th)
        c1, v2 = chi(a1, lam, th), vartheta(a2, mu, nu, th)
        worst = max(worst, max(c1 - chi(a, lam, th) for a in grid), max(v2 - vartheta(a, mu, nu, th) for a in grid))
    report(7, worst <= 1e-15, f"chi(alpha1) and vartheta(alpha2) never exceed the 100-point grid values "
                              f"(max excess {worst:.1e}) at 3 (nu, omega) pairs")


def test_inner_solver_equivalence():
    cells = [("mbas", 1e-6, 1.0), ("mbas", 1e-2, 1e4), ("bas", 1e-2, 1e-4), ("bas", 1e-6, 10.0),
             ("asss", 1e-2, 1e-4), ("asss", 1e-8, 1e4)]
    rows = []
    ok = True
    for method, nu, omega in cells:
        its = []
        for inner in ("direct", "cg:1e-12"):
            spec = RunSpec(K, (nu,), (omega,), method=method, inner=InnerSpec.parse(inner))
            its.append(run_sweep(spec, base())[0].iterations)
        ok &= its[0] == its[1]
        rows.append(f"{method}({nu:g},{omega:g}) {its[0]}/{its[1]}")
    report(8, ok, "direct/CG counts " + ", ".join(rows))


if __name__ == "__main__":
    failures = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
