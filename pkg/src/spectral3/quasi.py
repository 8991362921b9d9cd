"""First-order systems realizing the third-order equation through
quasi-derivatives.

The equation y''' + (tau1 y)' + tau1 y' + tau0 y = lambda y with
tau0 = sigma0' is regularized by the quasi-derivatives

    y^[0] = y,
    y^[1] = y',
    y^[2] = y'' + (sigma0 + tau1) y,

under which the state v = (y, y', y^[2]) satisfies v' = A(x, lambda) v
with a matrix containing only the integrable functions sigma0, tau1:

    A = [[0, 1, 0], [p, 0, 1], [c lambda, q, 0]].

Three variants share this shape and differ only in (p, q, c):

    DIRECT   p = -(sigma0 + tau1), q = sigma0 - tau1,        c = +1
    STAR     p = sigma0 - tau1,    q = -(sigma0 + tau1),     c = -1
    DAGGER   p = conj(sigma0 - tau1), q = -conj(sigma0+tau1), c = +1

STAR realizes the adjoint-type equation whose solutions pair with the
direct ones in the Lagrange bracket; DAGGER is the direct system of the
conjugate-flipped coefficient pair.  A useful structural fact exploited
upstream: the 2x2 minors (wedge) of two DIRECT solutions evolve under
the STAR system and vice versa, which is how the characteristic
determinants are integrated without catastrophic cancellation.

The integrator is classical fixed-step RK4 with h = 1/M; coefficient
values at half-steps come from cubic interpolation of the grid samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import IntegrationOverflowError, ResolutionGuardError
from .grid import CoefficientPair, Grid, midpoint_values, _interp_cubic

__all__ = ["SystemVariant", "Trajectory", "system_matrix", "integrate_ivp",
           "fundamental_solutions"]

# Oscillation resolution guard: refuse |lambda|^(1/3) beyond this fraction
# of the number of grid cells.
_RESOLUTION_FACTOR = 0.6

_FINITE_CHECK_STRIDE = 32


class SystemVariant(Enum):
    DIRECT = "direct"
    STAR = "star"
    DAGGER = "dagger"


@dataclass
class Trajectory:
    """Quasi-derivative states (y, y', y^[2]) along the grid, and
    optionally their derivatives with respect to lambda."""

    grid: Grid
    variant: SystemVariant
    lam: complex
    states: np.ndarray            # (M+1, 3)
    dstates: np.ndarray | None = None

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y1(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def y2(self) -> np.ndarray:
        return self.states[:, 2]


def _pq_arrays(coeffs: CoefficientPair, variant: SystemVariant):
    """(p, q) sampled at nodes and midpoints, plus the lambda sign c."""
    s0n = coeffs.sigma0.values
    t1n = coeffs.tau1.values
    s0m = midpoint_values(coeffs.sigma0)
    t1m = midpoint_values(coeffs.tau1)
    if variant is SystemVariant.DIRECT:
        return -(s0n + t1n), -(s0m + t1m), s0n - t1n, s0m - t1m, 1.0
    if variant is SystemVariant.STAR:
        return s0n - t1n, s0m - t1m, -(s0n + t1n), -(s0m + t1m), -1.0
    if variant is SystemVariant.DAGGER:
        return (np.conj(s0n - t1n), np.conj(s0m - t1m),
                -np.conj(s0n + t1n), -np.conj(s0m + t1m), 1.0)
    raise ValueError("unknown variant %r" % (variant,))


def system_matrix(coeffs: CoefficientPair, variant: SystemVariant,
                  lam: complex, x: float) -> np.ndarray:
    """The 3x3 system matrix A(x, lambda) of the requested variant,
    with coefficients evaluated off-node by cubic interpolation."""
    s0 = _interp_cubic(coeffs.sigma0.values, x)
    t1 = _interp_cubic(coeffs.tau1.values, x)
    if variant is SystemVariant.DIRECT:
        p, q, c = -(s0 + t1), s0 - t1, 1.0
    elif variant is SystemVariant.STAR:
        p, q, c = s0 - t1, -(s0 + t1), -1.0
    elif variant is SystemVariant.DAGGER:
        p, q, c = np.conj(s0 - t1), -np.conj(s0 + t1), 1.0
    else:
        raise ValueError("unknown variant %r" % (variant,))
    return np.array([[0.0, 1.0, 0.0],
                     [p, 0.0, 1.0],
                     [c * lam, q, 0.0]], dtype=complex)


def _guard_resolution(lams: np.ndarray, M: int) -> None:
    rho = np.abs(lams) ** (1.0 / 3.0)
    if rho.size and float(rho.max()) > _RESOLUTION_FACTOR * M:
        raise ResolutionGuardError(
            "|lambda|^(1/3) = %.3g exceeds the resolution guard %.3g for M = %d"
            % (float(rho.max()), _RESOLUTION_FACTOR * M, M)
        )


def _sweep(coeffs: CoefficientPair, variant: SystemVariant, lams: np.ndarray,
           inits: np.ndarray, with_dlambda: bool = False, dinits=None,
           backward: bool = False, store: bool = False):
    """Batched RK4 sweep of v' = A(x, lambda) v.

    lams : (L,) complex; inits : (3, K) shared or (L, 3, K) per lambda.
    Returns the final states (L, 3, K) or, with store, the full
    trajectory (M+1, L, 3, K).  With with_dlambda the same shapes are
    returned additionally for d/dlambda of the states.
    """
    grid = coeffs.grid
    M = grid.M
    h = grid.h
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    L = lams.shape[0]
    _guard_resolution(lams, M)
    pn, pm, qn, qm, c = _pq_arrays(coeffs, variant)
    clam = (c * lams).reshape(L, 1)

    inits = np.asarray(inits, dtype=complex)
    if inits.ndim == 2:
        V = np.broadcast_to(inits, (L,) + inits.shape).copy()
    else:
        V = inits.copy()
    K = V.shape[2]

    U = None
    if with_dlambda:
        if dinits is None:
            U = np.zeros_like(V)
        else:
            dinits = np.asarray(dinits, dtype=complex)
            U = (np.broadcast_to(dinits, V.shape).copy()
                 if dinits.ndim == 2 else dinits.copy())

    def rhs(p, q, V, U):
        dV = np.empty_like(V)
        dV[:, 0] = V[:, 1]
        dV[:, 1] = p * V[:, 0] + V[:, 2]
        dV[:, 2] = clam * V[:, 0] + q * V[:, 1]
        if U is None:
            return dV, None
        dU = np.empty_like(U)
        dU[:, 0] = U[:, 1]
        dU[:, 1] = p * U[:, 0] + U[:, 2]
        dU[:, 2] = clam * U[:, 0] + q * U[:, 1] + c * V[:, 0]
        return dV, dU

    out = dout = None
    if store:
        out = np.empty((M + 1,) + V.shape, dtype=complex)
        if with_dlambda:
            dout = np.empty_like(out)

    steps = range(M) if not backward else range(M - 1, -1, -1)
    sgn = 1.0 if not backward else -1.0
    if store:
        idx0 = 0 if not backward else M
        out[idx0] = V
        if with_dlambda:
            dout[idx0] = U

    for count, m in enumerate(steps):
        if not backward:
            pa, qa, pb, qb = pn[m], qn[m], pn[m + 1], qn[m + 1]
        else:
            pa, qa, pb, qb = pn[m + 1], qn[m + 1], pn[m], qn[m]
        k1, l1 = rhs(pa, qa, V, U)
        k2, l2 = rhs(pm[m], qm[m], V + (sgn * h / 2) * k1,
                     None if U is None else U + (sgn * h / 2) * l1)
        k3, l3 = rhs(pm[m], qm[m], V + (sgn * h / 2) * k2,
                     None if U is None else U + (sgn * h / 2) * l2)
        k4, l4 = rhs(pb, qb, V + sgn * h * k3,
                     None if U is None else U + sgn * h * l3)
        V = V + (sgn * h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if U is not None:
            U = U + (sgn * h / 6) * (l1 + 2 * l2 + 2 * l3 + l4)
        if store:
            out[m + 1 if not backward else m] = V
            if with_dlambda:
                dout[m + 1 if not backward else m] = U
        if count % _FINITE_CHECK_STRIDE == _FINITE_CHECK_STRIDE - 1:
            if not np.isfinite(V).all():
                raise IntegrationOverflowError(m + 1 if not backward else m)

    if not np.isfinite(V).all():
        raise IntegrationOverflowError(M if not backward else 0)
    if store:
        return (out, dout) if with_dlambda else out
    return (V, U) if with_dlambda else V


def integrate_ivp(coeffs: CoefficientPair, variant: SystemVariant, lam: complex,
                  init, with_dlambda: bool = False) -> Trajectory:
    """Integrate one initial-value problem across [0, 1].

    init is the quasi-derivative state (y, y', y^[2]) at x = 0.  With
    with_dlambda the 6-dimensional augmented system is integrated and
    the trajectory carries d/dlambda of the state as well (zero initial
    conditions for the derivative block).
    """
    init = np.asarray(init, dtype=complex).reshape(3, 1)
    res = _sweep(coeffs, variant, np.array([lam]), init,
                 with_dlambda=with_dlambda, store=True)
    if with_dlambda:
        out, dout = res
        return Trajectory(coeffs.grid, variant, complex(lam),
                          out[:, 0, :, 0], dout[:, 0, :, 0])
    return Trajectory(coeffs.grid, variant, complex(lam), res[:, 0, :, 0])


def fundamental_solutions(coeffs: CoefficientPair, variant: SystemVariant,
                          lam: complex, with_dlambda: bool = False):
    """The three fundamental solutions C_1, C_2, C_3 of the variant,
    normalized by C_k^[j-1](0) = delta_{jk} in quasi-derivatives."""
    res = _sweep(coeffs, variant, np.array([lam]), np.eye(3, dtype=complex),
                 with_dlambda=with_dlambda, store=True)
    if with_dlambda:
        out, dout = res
        return tuple(
            Trajectory(coeffs.grid, variant, complex(lam),
                       out[:, 0, :, k], dout[:, 0, :, k])
            for k in range(3)
        )
    return tuple(
        Trajectory(coeffs.grid, variant, complex(lam), res[:, 0, :, k])
        for k in range(3)
    )
