"""Truncated main equation of the inverse problem and the
reconstruction of the coefficients from spectral data.

The pipeline is: build_model (model.py) -> assemble -> solve_phi ->
reconstruct -> verify_reconstruction.  The unknowns are the functions
phi_v(x) indexed by v = (n, k, eps) with n <= N, eps = 0 marking the
given data and eps = 1 the model data; for each grid node the system

    phi_{v0} - sum_v (-1)^eps(v) G_{v,v0} phi_v = tilde_phi_{v0}

is solved by one LU factorization, reused for the x-derivatives via the
differentiated system.  The kernels G are built from the two-point
kernels D (Lagrange bracket over lambda - mu, or its integral form near
coinciding arguments).

Conditioning note: phi_v and the kernel columns grow or decay like
exp(rate x) with rate the relevant real part of the cube roots of
lambda_v.  On the eigenvalue rays the growth of the unknown cancels the
decay of its kernel column exactly, so a diagonal similarity with
weights exp(rate_v x) makes the scaled matrix entries O(1); the LU and
the condition estimate run on the scaled matrix.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .errors import PoleHitError, SingularSystemError
from .forward import SpectralData, compute_spectral_data, weyl_solutions
from .grid import CoefficientPair, Grid, GridFunction, cumulative, l2_norm, \
    w2m1_distance
from .model import ModelCache, build_model, distance_d, xi_sequence
from .quasi import SystemVariant

__all__ = [
    "IndexV",
    "index_set",
    "kernel_D",
    "MainAssembly",
    "assemble",
    "solve_phi",
    "ReconstructionResult",
    "reconstruct",
    "run_inverse",
    "verify_reconstruction",
    "stability_experiment",
]

# Bracket -> integral kernel form switch when lambda and mu nearly agree.
_KERNEL_SWITCH = 1e-6

_RCOND_FLOOR = 1e-13

_VALID_KJ = {(2, 2), (2, 3), (3, 2), (3, 3)}


class IndexV(NamedTuple):
    n: int
    k: int
    eps: int


def index_set(N: int) -> list:
    """V^N in the fixed order: ascending n, then k, then eps."""
    return [IndexV(n, k, e)
            for n in range(1, N + 1) for k in (1, 2) for e in (0, 1)]


# ---------------------------------------------------------------------------
# Two-point kernels


def _kernel_values(cache: ModelCache, k: int, j: int, lam: complex,
                   mu: complex, regularized: bool = False) -> np.ndarray:
    """Nodal values of D_{k,j}(x, lambda, mu).

    Bracket form (z^[2]y - z'y' + z y^[2])/(mu - lambda) away from the
    diagonal; integral form cumulative(z y) near it, with the explicit
    pole 1/(lambda - mu) added for (k, j) = (2, 2) unless regularized
    at an exact coincidence.
    """
    zs = cache.phi_star_states(k, lam)
    ys = cache.phi_states(j, mu)
    gap = abs(lam - mu)
    if gap > _KERNEL_SWITCH * (1.0 + max(abs(lam), abs(mu))):
        bracket = (zs[:, 2] * ys[:, 0] - zs[:, 1] * ys[:, 1]
                   + zs[:, 0] * ys[:, 2])
        return bracket / (mu - lam)
    vals = cumulative(GridFunction(cache.grid, zs[:, 0] * ys[:, 0])).values
    if (k, j) == (2, 2):
        if lam == mu:
            if not regularized:
                raise PoleHitError(
                    "kernel (2,2) evaluated on its pole lambda = mu = %s"
                    % (lam,))
        else:
            vals = vals + 1.0 / (lam - mu)
    return vals


def kernel_D(cache: ModelCache, kj, grid: Grid, lam: complex, mu: complex,
             regularized: bool = False) -> GridFunction:
    """Public kernel accessor for (k, j) in {2,3} x {2,3}."""
    k, j = int(kj[0]), int(kj[1])
    if (k, j) not in _VALID_KJ:
        raise ValueError("kernel indices %r not supported" % (kj,))
    if grid.M != cache.grid.M:
        raise ValueError("grid does not match the model cache")
    return GridFunction(cache.grid,
                        _kernel_values(cache, k, j, complex(lam), complex(mu),
                                       regularized))


def _kernel_j1(cache: ModelCache, k: int, lam: complex, mu: complex,
               phi1_states: np.ndarray) -> np.ndarray:
    """D_{k,1}(x, lam, mu) with the first Weyl solution supplied by the
    caller (bracket form only; used by the Weyl-side verification)."""
    zs = cache.phi_star_states(k, lam)
    ys = phi1_states
    bracket = zs[:, 2] * ys[:, 0] - zs[:, 1] * ys[:, 1] + zs[:, 0] * ys[:, 2]
    return bracket / (mu - lam)


# ---------------------------------------------------------------------------
# Assembly of the truncated system


@dataclass
class MainAssembly:
    """Node-wise matrices and tables of the truncated main system."""

    grid: Grid
    N: int
    V: list
    data: SpectralData
    A: np.ndarray           # (M+1, 4N, 4N): A[m, v0, v]
    tilde_phi: np.ndarray   # (4N, M+1)
    tilde_dphi: np.ndarray  # (4N, M+1)
    eta: np.ndarray         # (4N, M+1)
    deta: np.ndarray        # (4N, M+1)
    lam: np.ndarray         # (4N,)
    beta: np.ndarray        # (4N,)
    signs: np.ndarray       # (4N,)  (-1)^eps
    rates: np.ndarray       # (4N,)  equilibration exponents

    def gprime(self, i_v: int, i_v0: int) -> np.ndarray:
        """G'_{v,v0} = eta_v * tilde_phi_{v0} (nodal values)."""
        return self.eta[i_v] * self.tilde_phi[i_v0]


def _rate(lam: complex, k: int) -> float:
    if lam == 0:
        return 0.0
    base = complex(lam) ** (1.0 / 3.0)
    roots = base * np.exp(2j * np.pi * np.arange(3) / 3.0)
    ordered = np.sort(roots.real)
    return float(ordered[1] if k == 1 else ordered[2])


def _ensure_for_data(cache: ModelCache, data: SpectralData, N: int) -> None:
    lam1 = ([data.lam(n, 1) for n in range(1, N + 1)]
            + [cache.model_data.lam(n, 1) for n in range(1, N + 1)])
    lam2 = ([data.lam(n, 2) for n in range(1, N + 1)]
            + [cache.model_data.lam(n, 2) for n in range(1, N + 1)])
    cache.ensure(lam1, 2)
    cache.ensure(lam2, 3)
    cache.ensure_star(lam2, 2)
    cache.ensure_star(lam1, 3)


def assemble(data: SpectralData, cache: ModelCache, N: int,
             grid: Grid | None = None) -> MainAssembly:
    """Build the node-wise matrices of the truncated main system."""
    if grid is None:
        grid = cache.grid
    if grid.M != cache.grid.M:
        raise ValueError("grid does not match the model cache")
    data_N = data if data.n_max == N else data.truncate(N)
    _ensure_for_data(cache, data_N, N)

    V = index_set(N)
    size = len(V)
    M = grid.M
    lam = np.array([cache.lam(v.n, v.k, v.eps) if v.eps else data_N.lam(v.n, v.k)
                    for v in V], dtype=complex)
    beta = np.array([cache.beta(v.n, v.k, v.eps) if v.eps else data_N.beta(v.n, v.k)
                     for v in V], dtype=complex)
    signs = np.array([1.0 if v.eps == 0 else -1.0 for v in V])
    rates = np.array([_rate(lam[i], V[i].k) for i in range(size)])

    tilde_phi = np.empty((size, M + 1), dtype=complex)
    tilde_dphi = np.empty_like(tilde_phi)
    eta = np.empty_like(tilde_phi)
    deta = np.empty_like(tilde_phi)
    for i, v in enumerate(V):
        states = cache.phi_states(v.k + 1, lam[i])
        tilde_phi[i] = states[:, 0]
        tilde_dphi[i] = states[:, 1]
        eta[i], deta[i] = cache.eta_values(v.n, v.k, v.eps, data_N)

    G = np.empty((size, size, M + 1), dtype=complex)
    for i, v in enumerate(V):
        on_K = v.eps == 0 and v.k == 2 and v.n in data_N.K
        for i0, v0 in enumerate(V):
            j = v0.k + 1
            mu = lam[i0]
            if on_K:
                G[i, i0] = (beta[i] * _kernel_values(cache, 2, j, lam[i], mu,
                                                     regularized=True)
                            - data_N.gamma[v.n]
                            * _kernel_values(cache, 3, j, lam[i], mu))
            else:
                coef = beta[i] if v.k == 2 else -beta[i]
                G[i, i0] = coef * _kernel_values(cache, 4 - v.k, j, lam[i], mu)

    A = np.broadcast_to(np.eye(size, dtype=complex),
                        (M + 1, size, size)).copy()
    A -= np.transpose(signs[:, None, None] * G, (2, 1, 0))
    return MainAssembly(grid=grid, N=N, V=V, data=data_N, A=A,
                        tilde_phi=tilde_phi, tilde_dphi=tilde_dphi,
                        eta=eta, deta=deta, lam=lam, beta=beta,
                        signs=signs, rates=rates)


# ---------------------------------------------------------------------------
# Node-wise solve


def solve_phi(assembly: MainAssembly):
    """Solve for phi and phi' at every node; returns (phi, dphi, diag).

    The derivative table solves A phi' = tilde_phi' + B phi with
    B[v0][v] = (-1)^eps(v) eta_v tilde_phi_{v0}, i.e. a rank-one
    correction, using the factorization of the same node matrix.
    """
    grid = assembly.grid
    M = grid.M
    size = len(assembly.V)
    phi = np.empty((size, M + 1), dtype=complex)
    dphi = np.empty_like(phi)
    gecon = get_lapack_funcs(("gecon",), (assembly.A,))[0]
    rcond_min = np.inf
    residual_max = 0.0
    for m in range(M + 1):
        x = grid.nodes[m]
        w = np.exp(assembly.rates * x)
        Ahat = assembly.A[m] * (w[None, :] / w[:, None])
        anorm = float(np.abs(Ahat).sum(axis=0).max())
        lu = lu_factor(Ahat, check_finite=False)
        rcond = float(gecon(lu[0], anorm)[0])
        if not np.isfinite(rcond) or rcond < _RCOND_FLOOR:
            raise SingularSystemError(m, rcond)
        rcond_min = min(rcond_min, rcond)

        b1 = assembly.tilde_phi[:, m] / w
        xhat = lu_solve(lu, b1, check_finite=False)
        phi[:, m] = w * xhat
        res = float(np.abs(Ahat @ xhat - b1).max() / (1.0 + np.abs(b1).max()))
        residual_max = max(residual_max, res)

        s = np.sum(assembly.signs * assembly.eta[:, m] * phi[:, m])
        b2 = (assembly.tilde_dphi[:, m] + assembly.tilde_phi[:, m] * s) / w
        dphi[:, m] = w * lu_solve(lu, b2, check_finite=False)
    diag = {"rcond_min": rcond_min, "cond_max": 1.0 / rcond_min,
            "residual_max": residual_max}
    return phi, dphi, diag


# ---------------------------------------------------------------------------
# Reconstruction


@dataclass
class ReconstructionResult:
    """Recovered coefficients and the solved phi tables.

    tau0N is carried distributionally through sigma0N (its derivative);
    consumers work with sigma0N directly.
    """

    tau1N: GridFunction
    sigma0N: GridFunction
    phi: np.ndarray
    dphi: np.ndarray
    V: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def coeffs(self) -> CoefficientPair:
        return CoefficientPair(self.tau1N, self.sigma0N)


def reconstruct(data: SpectralData, cache: ModelCache, phi: np.ndarray,
                dphi: np.ndarray, N: int, solve_diag: dict | None = None
                ) -> ReconstructionResult:
    """Recover (tau1, sigma0) from the solved phi tables.

    The three series are accumulated in the fixed IndexV order, which
    pins the floating-point result independently of any parallelism
    upstream.
    """
    data_N = data if data.n_max == N else data.truncate(N)
    V = index_set(N)
    grid = cache.grid
    M = grid.M
    sum_full = np.zeros(M + 1, dtype=complex)   # phi' eta + phi eta'
    sum_deriv = np.zeros(M + 1, dtype=complex)  # phi' eta
    sum_plain = np.zeros(M + 1, dtype=complex)  # phi  eta
    for i, v in enumerate(V):
        eta, deta = cache.eta_values(v.n, v.k, v.eps, data_N)
        sign = 1.0 if v.eps == 0 else -1.0
        sum_full += sign * (dphi[i] * eta + phi[i] * deta)
        sum_deriv += sign * (dphi[i] * eta)
        sum_plain += sign * (phi[i] * eta)

    tau1N = cache.coeffs.tau1.values - 1.5 * sum_full
    hat = -1.5 * sum_full
    sigma0N = (cache.coeffs.sigma0.values - hat - 3.0 * sum_deriv
               - 2.0 * cumulative(GridFunction(grid, hat * sum_plain)).values)

    xi = xi_sequence(data_N, cache.model_data, N)
    diag = {
        "xi": [float(t) for t in xi],
        "d": distance_d(data_N, cache.model_data, N),
        "xi_weighted": float(np.sum((np.arange(1, N + 1) * xi) ** 2)),
    }
    if solve_diag:
        diag.update(solve_diag)
    return ReconstructionResult(GridFunction(grid, tau1N),
                                GridFunction(grid, sigma0N),
                                phi, dphi, V, diag)


def run_inverse(data: SpectralData, grid: Grid, N: int,
                theta_shift: complex = 0.0,
                cache: ModelCache | None = None) -> ReconstructionResult:
    """Convenience driver: model -> assemble -> solve -> reconstruct."""
    if cache is None:
        cache = build_model(data, grid, N, theta_shift=theta_shift)
    assembly = assemble(data, cache, N)
    phi, dphi, diag = solve_phi(assembly)
    result = reconstruct(data, cache, phi, dphi, N, solve_diag=diag)
    result.diagnostics["cache"] = cache
    return result


# ---------------------------------------------------------------------------
# Verification


def _phiN_tables(result: ReconstructionResult, cache: ModelCache,
                 data: SpectralData, k0: int, lam: complex,
                 phi1_states: np.ndarray | None = None):
    """(Phi^N_{k0}, (Phi^N_{k0})') nodal values at one lambda."""
    N = cache.N
    data_N = data if data.n_max == N else data.truncate(N)
    V = result.V
    if k0 == 1:
        tilde = phi1_states
    else:
        tilde = cache.phi_states(k0, lam)
    vals = tilde[:, 0].copy()
    dvals = tilde[:, 1].copy()
    for i, v in enumerate(V):
        src = data_N if v.eps == 0 else cache.model_data
        lam_v = src.lam(v.n, v.k)
        beta_v = src.beta(v.n, v.k)
        sign = 1.0 if v.eps == 0 else -1.0
        if v.eps == 0 and v.k == 2 and v.n in data_N.K:
            if k0 == 1:
                P = (beta_v * _kernel_j1(cache, 2, lam_v, lam, tilde)
                     - data_N.gamma[v.n] * _kernel_j1(cache, 3, lam_v, lam, tilde))
            else:
                P = (beta_v * _kernel_values(cache, 2, k0, lam_v, lam,
                                             regularized=True)
                     - data_N.gamma[v.n] * _kernel_values(cache, 3, k0, lam_v, lam))
        else:
            coef = beta_v if v.k == 2 else -beta_v
            if k0 == 1:
                P = coef * _kernel_j1(cache, 4 - v.k, lam_v, lam, tilde)
            else:
                P = coef * _kernel_values(cache, 4 - v.k, k0, lam_v, lam)
        eta, _ = cache.eta_values(v.n, v.k, v.eps, data_N)
        vals += sign * result.phi[i] * P
        dvals += sign * (result.dphi[i] * P + result.phi[i] * eta * tilde[:, 0])
    return vals, dvals


def verify_reconstruction(result: ReconstructionResult, data: SpectralData,
                          N: int, mode: str = "spectral",
                          cache: ModelCache | None = None,
                          rtol: float = 1e-3,
                          lam_probe: complex | None = None,
                          wtol: float = 1e-6) -> dict:
    """Check a reconstruction against its input data.

    mode="spectral" reruns the forward map on the recovered pair and
    compares eigenvalues and weight numbers, n <= N against the data
    and the next few indices against the model.  mode="weyl" builds the
    functions Phi^N from the phi tables and checks their boundary,
    normalization, and interpolation properties (coinciding pairs are
    not supported there).
    """
    if cache is None:
        cache = (result.diagnostics.get("cache")
                 or build_model(data, result.tau1N.grid, N))
    data_N = data if data.n_max == N else data.truncate(N)
    if mode == "spectral":
        rec = compute_spectral_data(result.coeffs, N + 4)
        entries = []
        lam_max = beta_max = tail_max = 0.0
        for n in range(1, N + 5):
            for k in (1, 2):
                ref = data_N if n <= N else cache.model_data
                dl = (abs(rec.lam(n, k) - ref.lam(n, k))
                      / (1.0 + abs(ref.lam(n, k))))
                db = (abs(rec.beta(n, k) - ref.beta(n, k))
                      / (1.0 + abs(ref.beta(n, k))))
                entries.append({"n": n, "k": k, "lambda_rel": dl,
                                "beta_rel": db,
                                "reference": "data" if n <= N else "model"})
                if n <= N:
                    lam_max = max(lam_max, dl)
                    beta_max = max(beta_max, db)
                else:
                    tail_max = max(tail_max, dl)
        report = {
            "mode": "spectral",
            "lambda_rel_max": lam_max,
            "beta_rel_max": beta_max,
            "tail_lambda_rel_max": tail_max,
            "K_match": [n for n in rec.K if n <= N] == data_N.K,
            "entries": entries,
            "breaches": [e for e in entries
                         if e["reference"] == "data"
                         and max(e["lambda_rel"], e["beta_rel"]) > rtol],
        }
        report["pass"] = bool(lam_max <= rtol and beta_max <= rtol
                              and report["K_match"])
        return report

    if mode == "weyl":
        if data_N.K:
            raise ValueError("mode='weyl' requires data without coinciding "
                             "eigenvalue pairs")
        checks: dict = {"mode": "weyl"}
        breaches = []
        # Boundary conditions at x = 1 for the data eigenvalues.
        z2 = []
        for n in range(1, N + 1):
            lam = data_N.lam(n, 1)
            vals, _ = _phiN_tables(result, cache, data_N, 2, lam)
            rel = abs(vals[-1]) / (1.0 + np.abs(vals).max())
            z2.append(rel)
            if rel > wtol:
                breaches.append({"check": "phi2_terminal", "n": n, "value": rel})
        z3 = []
        for n in range(1, N + 1):
            lam = data_N.lam(n, 2)
            vals, _ = _phiN_tables(result, cache, data_N, 3, lam)
            rel = abs(vals[-1]) / (1.0 + np.abs(vals).max())
            z3.append(rel)
            if rel > wtol:
                breaches.append({"check": "phi3_terminal", "n": n, "value": rel})
        checks["phi2_terminal_max"] = max(z2)
        checks["phi3_terminal_max"] = max(z3)

        # Interpolation: Phi^N_{k+1}(x, lam_v) == phi_v(x).
        interp_max = 0.0
        for i, v in enumerate(result.V):
            src = data_N if v.eps == 0 else cache.model_data
            lam = src.lam(v.n, v.k)
            vals, _ = _phiN_tables(result, cache, data_N, v.k + 1, lam)
            rel = (np.abs(vals - result.phi[i]).max()
                   / (1.0 + np.abs(result.phi[i]).max()))
            interp_max = max(interp_max, rel)
            if rel > wtol:
                breaches.append({"check": "interpolation", "v": tuple(v),
                                 "value": rel})
        checks["interpolation_max"] = interp_max

        # Initial normalization and the first Weyl solution at a probe
        # lambda away from both spectra.
        if lam_probe is None:
            lam_probe = 0.7j * abs(cache.model_data.lam(1, 1))
        v2, d2 = _phiN_tables(result, cache, data_N, 2, lam_probe)
        v3, d3 = _phiN_tables(result, cache, data_N, 3, lam_probe)
        checks["phi2_origin"] = abs(v2[0])
        checks["phi2_origin_slope"] = abs(d2[0] - 1.0)
        checks["phi3_origin"] = abs(v3[0])
        checks["phi3_origin_slope"] = abs(d3[0])
        table1 = weyl_solutions(cache.coeffs, lam_probe, SystemVariant.DIRECT)
        v1, d1 = _phiN_tables(result, cache, data_N, 1, lam_probe,
                              phi1_states=table1.states[0])
        checks["phi1_terminal"] = abs(v1[-1]) / (1.0 + np.abs(v1).max())
        checks["phi1_terminal_slope"] = abs(d1[-1]) / (1.0 + np.abs(d1).max())
        for key in ("phi2_origin", "phi2_origin_slope", "phi3_origin",
                    "phi3_origin_slope", "phi1_terminal",
                    "phi1_terminal_slope"):
            if checks[key] > wtol:
                breaches.append({"check": key, "value": checks[key]})
        checks["breaches"] = breaches
        checks["pass"] = not breaches
        return checks

    raise ValueError("mode must be 'spectral' or 'weyl'")


# ---------------------------------------------------------------------------
# Stability experiment


def _perturb(data: SpectralData, entries, delta: float) -> SpectralData:
    out = data.copy()
    for n, k, which in entries:
        arr = {("lambda", 1): out.lam1, ("lambda", 2): out.lam2,
               ("beta", 1): out.beta1, ("beta", 2): out.beta2}[(which, k)]
        arr[n - 1] = arr[n - 1] + delta
    return out


def stability_experiment(data: SpectralData, grid: Grid, N: int,
                         entries=((1, 1, "beta"),), delta0: float = 1e-2,
                         levels: int = 4, threads: int = 1,
                         theta_shift: complex = 0.0, deltas=None) -> list:
    """Reconstruction error versus data perturbation size.

    Perturbs the chosen (lambda, beta) entries by delta for a halving
    ladder delta0, delta0/2, ... (or an explicit deltas list),
    reconstructs each, and tabulates the data distance d, the
    coefficient distances against the unperturbed reconstruction, and
    their ratios (empirical stability constants).
    """
    if data.K:
        raise ValueError("stability experiment requires data with no "
                         "coinciding eigenvalue pairs")
    for n, k, which in entries:
        if which not in ("lambda", "beta"):
            raise ValueError("perturbation field must be 'lambda' or 'beta'")
        data._check_index(n, k)
    cache = build_model(data, grid, N, theta_shift=theta_shift)
    if deltas is None:
        deltas = [delta0 / 2 ** j for j in range(levels)]
    else:
        deltas = [float(d) for d in deltas]

    # Everything the parallel jobs will read from the cache is computed
    # up front; afterwards the cache is only read.
    for d in deltas:
        pert = _perturb(data.truncate(N), entries, d)
        _ensure_for_data(cache, pert, N)

    base = run_inverse(data, grid, N, cache=cache)
    rows = [{"delta": 0.0, "d": 0.0, "tau1_l2": 0.0, "sigma0_w2m1": 0.0,
             "tau1_ratio": None, "sigma0_ratio": None, "status": "ok"}]

    def job(delta: float) -> dict:
        pert = _perturb(data.truncate(N), entries, delta)
        try:
            res = run_inverse(pert, grid, N, cache=cache)
        except SingularSystemError as exc:
            return {"delta": delta,
                    "d": distance_d(pert, data.truncate(N), N),
                    "tau1_l2": None, "sigma0_w2m1": None,
                    "tau1_ratio": None, "sigma0_ratio": None,
                    "status": "singular(node=%d, rcond=%.3g)"
                              % (exc.node, exc.rcond)}
        dd = distance_d(pert, data.truncate(N), N)
        t_err = l2_norm(res.tau1N - base.tau1N)
        s_err = w2m1_distance(res.sigma0N, base.sigma0N)
        return {"delta": delta, "d": dd, "tau1_l2": t_err,
                "sigma0_w2m1": s_err,
                "tau1_ratio": t_err / dd if dd else None,
                "sigma0_ratio": s_err / dd if dd else None,
                "status": "ok"}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows.extend(pool.map(job, deltas))
    else:
        rows.extend(job(d) for d in deltas)
    return rows
