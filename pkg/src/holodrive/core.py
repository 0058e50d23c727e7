"""Finite-dimensional complex linear algebra and unitary time evolution.

Everything works on plain complex numpy arrays.  Conventions used throughout
the package: hbar = 1, energies in units of the relevant Rabi scale, time in
inverse energy units.  Evolution is performed with a fixed-step exponential
integrator sampled at interval midpoints, so every step is exactly unitary
up to floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class DimensionError(ValueError):
    """Operands have incompatible or non-square shapes."""


class HermiticityError(ValueError):
    """A matrix required to be Hermitian is not, within tolerance."""


def frobenius(m):
    """Frobenius norm of a matrix (or 2-norm of a vector)."""
    return float(np.linalg.norm(m))


def _as_square(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def check_hermitian(m, tol=1e-12):
    """True iff ||M - M^dag||_F <= tol."""
    m = _as_square(m)
    return frobenius(m - m.conj().T) <= tol


def require_hermitian(m, tol=1e-10):
    """Return M as a complex array, raising HermiticityError if it is not Hermitian.

    The tolerance is relative: ||M - M^dag||_F <= tol * max(1, ||M||_F).
    """
    m = _as_square(m)
    defect = frobenius(m - m.conj().T)
    if defect > tol * max(1.0, frobenius(m)):
        raise HermiticityError(f"matrix is not Hermitian (defect {defect:.3e})")
    return m


def normalized_state(amplitudes):
    """Return the amplitudes as a unit-norm complex vector."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def eig_hermitian(h, tol=1e-10):
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix."""
    h = require_hermitian(h, tol)
    energies, vectors = np.linalg.eigh(h)
    return energies, vectors


def step_propagator(h_mid, dt):
    """exp(-i * H * dt) via the eigendecomposition of H.

    Built as V exp(-i E dt) V^dag, which is unitary to rounding regardless
    of dt, unlike series-based matrix exponentials.
    """
    h_mid = _as_square(h_mid)
    energies, vectors = np.linalg.eigh(h_mid)
    phases = np.exp(-1j * energies * dt)
    return (vectors * phases) @ vectors.conj().T


@dataclass(frozen=True)
class TimeDependentGenerator:
    """A Hamiltonian-valued function of time on [0, horizon].

    The evaluator must return Hermitian matrices of a fixed dimension for
    every t in the domain.  Instances are immutable and safe to share.
    """

    evaluator: Callable[[float], np.ndarray]
    horizon: float
    dim: int

    def __call__(self, t):
        return self.evaluator(t)


def constant_generator(h, horizon):
    """Generator that returns the same Hamiltonian at every time."""
    h = _as_square(h)
    return TimeDependentGenerator(lambda t: h, float(horizon), h.shape[0])


def evolve(gen, psi0, steps):
    """Propagate a state over [0, horizon] in `steps` midpoint-sampled steps."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    psi = normalized_state(psi0)
    if psi.shape[0] != gen.dim:
        raise DimensionError(f"state dim {psi.shape[0]} != generator dim {gen.dim}")
    dt = gen.horizon / steps
    for j in range(steps):
        psi = step_propagator(gen((j + 0.5) * dt), dt) @ psi
    return psi


def propagator(gen, steps):
    """Full propagator over [0, horizon]; equals `evolve` applied column-wise."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = gen.horizon / steps
    u = np.eye(gen.dim, dtype=complex)
    for j in range(steps):
        u = step_propagator(gen((j + 0.5) * dt), dt) @ u
    return u


def converged_propagator(gen, tol=1e-8, start_steps=64, max_doublings=16):
    """Double the step count until successive propagators differ by < tol.

    Returns (U, steps) for the first step count meeting the tolerance.
    """
    steps = start_steps
    u = propagator(gen, steps)
    for _ in range(max_doublings):
        u2 = propagator(gen, 2 * steps)
        if frobenius(u2 - u) < tol:
            return u2, 2 * steps
        u, steps = u2, 2 * steps
    raise RuntimeError(f"propagator did not converge below {tol} within {steps} steps")


def gate_fidelity(u, v, projector):
    """|tr(P U^dag V P)| / d for a rank-d orthogonal projector P.

    Invariant under a global phase on either argument.  The result is
    clipped to [0, 1] against rounding overshoot.
    """
    u = _as_square(u)
    v = _as_square(v)
    p = _as_square(projector)
    if not (u.shape == v.shape == p.shape):
        raise DimensionError("gate_fidelity operands must share one dimension")
    d = int(round(np.trace(p).real))
    if d == 0:
        raise ValueError("projector has rank 0")
    f = abs(np.trace(p @ u.conj().T @ v @ p)) / d
    return min(float(f), 1.0)


def subspace_projector(dim, indices):
    """Orthogonal projector onto the span of the given basis indices."""
    p = np.zeros((dim, dim), dtype=complex)
    for i in indices:
        p[i, i] = 1.0
    return p
