"""Self-adjoint case utilities.

For real tau1 and purely imaginary sigma0 the two spectra pair up as
lambda_{n,1} = -conj(lambda_{n,2}) with beta_{n,1} = -conj(beta_{n,2}),
so half of the data determines the rest.  HalfData stores that half
(the first family), complete()/restrict() convert to and from full
SpectralData, and the check_* helpers report how well given data
satisfies the symmetry and the sufficiency preconditions.

Coinciding pairs in this class sit on the imaginary axis (lambda must
equal -conj(lambda)), carry beta = 0 on both sides, and a positive
gamma.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import asympt
from .forward import SpectralData
from .serialize import complex_pair, dumps17, pair_complex

__all__ = ["HalfData", "complete", "restrict", "check_suff_conditions",
           "check_symmetry", "save_half_data", "load_half_data"]

_SYM_TOL = 1e-8


@dataclass
class HalfData:
    """First-family spectral data of a self-adjoint-class problem."""

    theta: float
    lambdas: np.ndarray          # lambda_n = lambda_{n,1}, n = 1..n_max
    betas: np.ndarray            # zero on K
    K: list = field(default_factory=list)
    gammas: dict = field(default_factory=dict)   # n -> positive real

    def __post_init__(self):
        self.theta = float(np.real_if_close(self.theta))
        self.lambdas = np.asarray(self.lambdas, dtype=complex)
        self.betas = np.asarray(self.betas, dtype=complex)
        if self.betas.shape != self.lambdas.shape:
            raise ValueError("lambdas and betas must have equal length")
        self.K = sorted(int(n) for n in self.K)
        self.gammas = {int(n): float(g) for n, g in self.gammas.items()}
        if set(self.gammas) != set(self.K):
            raise ValueError("gamma must be given exactly on K")

    @property
    def n_max(self) -> int:
        return self.lambdas.shape[0]


def complete(half: HalfData) -> SpectralData:
    """Extend half data to the full two-family spectral data.

    lambda_{n,2} = -conj(lambda_n), beta_{n,2} = -conj(beta_n); on the
    coinciding set both weight numbers are zero and gamma is carried.
    """
    lam1 = half.lambdas.copy()
    beta1 = half.betas.copy()
    lam2 = -np.conj(lam1)
    beta2 = -np.conj(beta1)
    for n in half.K:
        if abs(lam1[n - 1].real) > 1e-6 * (1.0 + abs(lam1[n - 1])):
            raise ValueError(
                "coinciding index n=%d requires a purely imaginary "
                "eigenvalue, got %s" % (n, lam1[n - 1]))
        lam1[n - 1] = 1j * lam1[n - 1].imag
        lam2[n - 1] = lam1[n - 1]
        beta1[n - 1] = 0.0
        beta2[n - 1] = 0.0
    return SpectralData(theta=complex(half.theta), n_max=half.n_max,
                        lam1=lam1, lam2=lam2, beta1=beta1, beta2=beta2,
                        K=list(half.K),
                        gamma={n: complex(g) for n, g in half.gammas.items()})


def restrict(data: SpectralData) -> HalfData:
    """Keep the first-family entries (inverse of complete on symmetric
    data)."""
    if abs(data.theta.imag) > _SYM_TOL * (1.0 + abs(data.theta)):
        raise ValueError("theta must be real for self-adjoint data, got %s"
                         % (data.theta,))
    gammas = {}
    for n in data.K:
        g = data.gamma[n]
        if abs(g.imag) > _SYM_TOL * (1.0 + abs(g)):
            raise ValueError("gamma at n=%d is not real: %s" % (n, g))
        gammas[n] = g.real
    return HalfData(theta=data.theta.real, lambdas=data.lam1.copy(),
                    betas=data.beta1.copy(), K=list(data.K), gammas=gammas)


def check_symmetry(data: SpectralData, tol: float = _SYM_TOL) -> dict:
    """Measure the self-adjoint pairing of full spectral data."""
    lam_dev = beta_dev = 0.0
    for n in range(1, data.n_max + 1):
        l1, l2 = data.lam(n, 1), data.lam(n, 2)
        b1, b2 = data.beta(n, 1), data.beta(n, 2)
        lam_dev = max(lam_dev, abs(l1 + np.conj(l2)) / (1.0 + abs(l1)))
        beta_dev = max(beta_dev, abs(b1 + np.conj(b2)) / (1.0 + abs(b1)))
    gamma_dev = 0.0
    for n in data.K:
        g = data.gamma[n]
        gamma_dev = max(gamma_dev, abs(g.imag) / (1.0 + abs(g)))
    theta_dev = abs(data.theta.imag) / (1.0 + abs(data.theta))
    report = {
        "lambda_max": lam_dev,
        "beta_max": beta_dev,
        "gamma_imag_max": gamma_dev,
        "theta_imag": theta_dev,
        "tol": tol,
    }
    report["pass"] = all(v <= tol for v in
                         (lam_dev, beta_dev, gamma_dev, theta_dev))
    return report


def check_suff_conditions(half: HalfData, tol: float = _SYM_TOL) -> dict:
    """Report on the sufficiency preconditions for half data.

    Checked clause by clause: first-family asymptotics, pairwise
    distinctness within the family and against the mirrored family,
    nonvanishing weight numbers off K, Re lambda_n >= 0, and positive
    gamma on K.
    """
    clauses: dict = {}
    violations: list = []

    full = complete(half)
    try:
        frame = asympt.extract_remainders(full)
        ok = bool(frame.tail_max <= 0.5)
        clauses["asymptotics"] = ok
        if not ok:
            violations.append({"clause": "asymptotics",
                               "tail_max": frame.tail_max})
    except Exception as exc:  # noqa: BLE001 - report, never raise
        clauses["asymptotics"] = False
        violations.append({"clause": "asymptotics", "error": str(exc)})

    lam = half.lambdas
    ok = True
    for n in range(half.n_max):
        for p in range(n + 1, half.n_max):
            t = tol * (1.0 + abs(lam[n]))
            if abs(lam[n] - lam[p]) <= t:
                ok = False
                violations.append({"clause": "distinct", "n": n + 1, "p": p + 1})
            if abs(lam[n] + np.conj(lam[p])) <= t:
                ok = False
                violations.append({"clause": "cross_pairing",
                                   "n": n + 1, "p": p + 1})
    clauses["distinct"] = ok

    ok = True
    for n in range(1, half.n_max + 1):
        if n not in half.K and half.betas[n - 1] == 0:
            ok = False
            violations.append({"clause": "beta_nonzero", "n": n})
    clauses["beta_nonzero"] = ok

    ok = True
    for n in range(1, half.n_max + 1):
        if lam[n - 1].real < -tol * (1.0 + abs(lam[n - 1])):
            ok = False
            violations.append({"clause": "re_lambda_nonneg", "n": n,
                               "value": complex(lam[n - 1])})
    clauses["re_lambda_nonneg"] = ok

    ok = True
    for n in half.K:
        if not half.gammas[n] > 0:
            ok = False
            violations.append({"clause": "gamma_positive", "n": n,
                               "value": half.gammas[n]})
    clauses["gamma_positive"] = ok

    return {"clauses": clauses, "violations": violations,
            "pass": all(clauses.values())}


def save_half_data(path, half: HalfData) -> None:
    obj = {
        "theta": half.theta,
        "entries": [
            {"n": n, "lambda": complex_pair(half.lambdas[n - 1]),
             "beta": complex_pair(half.betas[n - 1])}
            for n in range(1, half.n_max + 1)
        ],
        "K": [{"n": n, "gamma": half.gammas[n]} for n in half.K],
    }
    with open(path, "w") as fh:
        fh.write(dumps17(obj))


def load_half_data(path) -> HalfData:
    with open(path) as fh:
        obj = json.load(fh)
    entries = sorted(obj["entries"], key=lambda e: int(e["n"]))
    ns = [int(e["n"]) for e in entries]
    if ns != list(range(1, len(ns) + 1)):
        raise ValueError("half-data entries must cover n = 1..n_max")
    lam = np.array([pair_complex(e["lambda"]) for e in entries])
    beta = np.array([pair_complex(e["beta"]) for e in entries])
    K = [int(e["n"]) for e in obj.get("K", [])]
    gammas = {int(e["n"]): float(e["gamma"]) for e in obj.get("K", [])}
    return HalfData(theta=float(obj["theta"]), lambdas=lam, betas=beta,
                    K=K, gammas=gammas)
