"""Failure modes surfaced by the solver, one class per contract."""

from __future__ import annotations


class Spectral3Error(Exception):
    """Base class for all solver failures."""


class ResolutionGuardError(Spectral3Error):
    """|lambda|^(1/3) too large for the grid to resolve the oscillation."""


class IntegrationOverflowError(Spectral3Error):
    """State became non-finite during integration."""

    def __init__(self, node: int, message: str | None = None):
        self.node = node
        super().__init__(message or "non-finite state at node %d" % node)


class NoConvergenceError(Spectral3Error):
    """Newton iteration failed to converge within the iteration budget."""

    def __init__(self, n: int, k: int, last: complex, iterations: int):
        self.n, self.k, self.last, self.iterations = n, k, last, iterations
        super().__init__(
            "eigenvalue (n=%d, k=%d) did not converge after %d iterations; last iterate %s"
            % (n, k, iterations, last)
        )


class BasinEscapeError(Spectral3Error):
    """Newton converged to a root whose index differs from the requested one."""

    def __init__(self, n: int, k: int, lam: complex, n_found: int):
        self.n, self.k, self.lam, self.n_found = n, k, lam, n_found
        super().__init__(
            "search for (n=%d, k=%d) converged to %s, which numbers as n=%d"
            % (n, k, lam, n_found)
        )


class DerivativeVanishesError(Spectral3Error):
    """Characteristic-function derivative vanished during Newton."""

    def __init__(self, n: int, k: int, lam: complex):
        self.n, self.k, self.lam = n, k, lam
        super().__init__(
            "derivative of the characteristic function vanished at %s for (n=%d, k=%d)"
            % (lam, n, k)
        )


class BranchAmbiguityError(Spectral3Error):
    """Cube root of an eigenvalue fell between asymptotic sectors."""


class GammaZeroError(Spectral3Error):
    """Weight gamma_n vanished (or was requested off the coinciding set)."""


class NearPoleError(Spectral3Error):
    """Evaluation point is numerically at a pole of a Weyl function."""


class PoleHitError(Spectral3Error):
    """Kernel evaluation requested exactly at a pole."""


class SingularSystemError(Spectral3Error):
    """Main-equation system numerically singular at some node."""

    def __init__(self, node: int, rcond: float):
        self.node, self.rcond = node, rcond
        super().__init__(
            "main-equation matrix singular at node %d (reciprocal condition %.3e)"
            % (node, rcond)
        )


class AdmissibilityViolationError(Spectral3Error):
    """Model problem collides with the given data."""

    def __init__(self, condition: int, detail: str, pair=None, gap: float | None = None):
        self.condition = condition
        self.pair = pair
        self.gap = gap
        super().__init__("admissibility condition %d violated: %s" % (condition, detail))
