"""Transport of degenerate eigensubspaces along parametrized Hamiltonian families.

Given a family H(lambda) and a schedule lambda(t), this module tracks the
instantaneous eigenframes, keeps the gauge smooth between neighboring times
by polar-aligning each degenerate block, and from the smoothed frames builds

- the intra-block connection  A_kl = <phi_k | d/dt phi_l>  (anti-Hermitian),
- the counterdiabatic term    H1 = i sum_n (1 - P_n) dV_n/dt V_n^dag,
- the block holonomy          C  = (frame closure) x  ordprod exp(-A dt),

together with an independent holonomy route built purely from unitarized
frame overlaps (`adiabatic_reference`), used as an oracle against the
connection-integral route.

Degeneracy bookkeeping: two eigenvalues share a block iff their spacing is
at most 1e-8 * max(1, ||H||_F).  A change of block sizes along a path is a
hard error; the machinery assumes a fixed degeneracy structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DimensionError, frobenius, require_hermitian, step_propagator, TimeDependentGenerator

DEGENERACY_RTOL = 1e-8


class DegeneracyError(RuntimeError):
    """The degenerate-block structure changed along the path."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class LoopError(ValueError):
    """A closed schedule was required but not supplied."""


@dataclass(frozen=True)
class ParameterSchedule:
    """A path lambda(t) in control-parameter space with its exact velocity.

    `velocity` must be the derivative of `path`; loop schedules must satisfy
    path(0) == path(horizon) exactly up to 1e-12.
    """

    path: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    horizon: float
    is_loop: bool = False

    def grid_times(self, grid):
        if grid < 2:
            raise ValueError("grid must be >= 2")
        return np.linspace(0.0, self.horizon, grid + 1)


def check_schedule(sched, samples=33, tol=1e-8):
    """Verify velocity against central differences and loop closure.

    The step is kept tiny (1e-6 of the horizon) so the O(h^2) truncation of
    the central difference sits below `tol` for any smooth schedule.  Raises
    ValueError on a velocity mismatch, LoopError on a bad closure.
    """
    h = 1e-6 * sched.horizon
    for t in np.linspace(h, sched.horizon - h, samples):
        fd = (np.asarray(sched.path(t + h)) - np.asarray(sched.path(t - h))) / (2 * h)
        if np.max(np.abs(fd - np.asarray(sched.velocity(t)))) > tol * max(1.0, np.max(np.abs(fd))):
            raise ValueError(f"schedule velocity disagrees with central differences at t={t:.6g}")
    if sched.is_loop:
        gap = np.max(np.abs(np.asarray(sched.path(0.0)) - np.asarray(sched.path(sched.horizon))))
        if gap > 1e-12:
            raise LoopError(f"loop schedule does not close (gap {gap:.3e})")


@dataclass(frozen=True)
class HamiltonianFamily:
    """H(lambda) with an optional analytic gradient dH/dlambda_j."""

    build: Callable[[np.ndarray], np.ndarray]
    dim: int
    analytic_gradient: Callable[[np.ndarray], Sequence[np.ndarray]] | None = None

    def __call__(self, point):
        return self.build(np.asarray(point, dtype=float))

    def time_derivative(self, point, velocity):
        """dH/dt = sum_j dH/dlambda_j * dlambda_j/dt (requires analytic_gradient)."""
        if self.analytic_gradient is None:
            raise ValueError("family has no analytic gradient")
        grads = self.analytic_gradient(np.asarray(point, dtype=float))
        velocity = np.asarray(velocity, dtype=float)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for g, v in zip(grads, velocity):
            out += v * g
        return out


@dataclass(frozen=True)
class SpectralFrame:
    """Eigen-decomposition of H(lambda(t)) at one schedule time.

    `blocks` partitions the ascending eigenvalue indices into contiguous
    [start, stop) ranges of (numerically) equal energy.
    """

    t: float
    energies: np.ndarray
    vectors: np.ndarray
    blocks: tuple[tuple[int, int], ...]

    @property
    def block_sizes(self):
        return tuple(stop - start for start, stop in self.blocks)

    def block_vectors(self, n):
        start, stop = self.blocks[n]
        return self.vectors[:, start:stop]

    def block_energy(self, n):
        start, stop = self.blocks[n]
        return float(np.mean(self.energies[start:stop]))


@dataclass(frozen=True)
class ConnectionBlock:
    """Sampled intra-block connection A(t_j) for one degenerate block."""

    block: int
    times: np.ndarray
    values: np.ndarray  # shape (len(times), m, m), anti-Hermitian

    def __call__(self, t):
        """Linear interpolation between grid samples."""
        times, values = self.times, self.values
        if t <= times[0]:
            return values[0]
        if t >= times[-1]:
            return values[-1]
        j = int(np.searchsorted(times, t) - 1)
        w = (t - times[j]) / (times[j + 1] - times[j])
        return (1.0 - w) * values[j] + w * values[j + 1]


@dataclass(frozen=True)
class HolonomyBlock:
    """Unitary carried by one degenerate block around a closed schedule."""

    block: int
    matrix: np.ndarray


def degenerate_blocks(energies, scale):
    """Partition ascending eigenvalues into blocks of numerically equal energy."""
    tol = DEGENERACY_RTOL * max(1.0, scale)
    blocks = []
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] > tol:
            blocks.append((start, i))
            start = i
    return tuple(blocks)


def polar_unitary(m):
    """Unitary factor of the polar decomposition (closest unitary to m)."""
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _align_blocks(prev, cur, blocks):
    """Rotate each block of `cur` to the block-gauge closest to `prev`."""
    out = cur.copy()
    for start, stop in blocks:
        overlap = prev[:, start:stop].conj().T @ cur[:, start:stop]
        out[:, start:stop] = cur[:, start:stop] @ polar_unitary(overlap).conj().T
    return out


def _project_initial_frame(vectors, blocks, initial_frame):
    """Express a caller-supplied t=0 eigenbasis in the computed eigenspaces.

    Each block of the supplied frame is projected onto the corresponding
    computed block span and re-unitarized, so small residuals are tolerated
    but a frame outside the eigenspaces is rejected.
    """
    initial_frame = np.asarray(initial_frame, dtype=complex)
    if initial_frame.shape != vectors.shape:
        raise DimensionError("initial frame must be a full square eigenbasis")
    out = vectors.copy()
    for start, stop in blocks:
        coeff = vectors[:, start:stop].conj().T @ initial_frame[:, start:stop]
        sv = np.linalg.svd(coeff, compute_uv=False)
        if sv.min() < 0.9:
            raise ValueError("initial frame does not span the computed eigenspaces")
        out[:, start:stop] = vectors[:, start:stop] @ polar_unitary(coeff)
    return out


def spectral_path(family, sched, grid, initial_frame=None, align=True):
    """Eigenframes of H(lambda(t)) on a uniform grid of `grid` intervals.

    With `align` (the default) each frame's degenerate blocks are rotated so
    the overlap with the previous frame is as close to the identity as a
    block-unitary allows (polar alignment); the first frame keeps the raw
    eigensolver gauge unless `initial_frame` supplies one.  Raises
    DegeneracyError if the block structure changes between neighboring times.
    """
    times = sched.grid_times(grid)
    frames = []
    prev = None
    for t in times:
        h = require_hermitian(family(sched.path(t)))
        energies, vectors = np.linalg.eigh(h)
        blocks = degenerate_blocks(energies, frobenius(h))
        if prev is not None:
            if tuple(stop - start for start, stop in blocks) != prev.block_sizes:
                raise DegeneracyError(
                    f"degenerate-block structure changed at t={t:.6g}: "
                    f"{prev.block_sizes} -> {tuple(s - a for a, s in blocks)}",
                    t=t,
                )
            if align:
                vectors = _align_blocks(prev.vectors, vectors, blocks)
        elif initial_frame is not None:
            vectors = _project_initial_frame(vectors, blocks, initial_frame)
        frame = SpectralFrame(t=float(t), energies=energies, vectors=vectors, blocks=blocks)
        frames.append(frame)
        prev = frame
    return frames


def _frame_derivatives(frames, dt):
    """d(vectors)/dt on the frame grid.

    Central differences in the interior; second-order one-sided stencils at
    the endpoints (exact for locally quadratic motion, so ramped schedules
    with zero endpoint velocity get a vanishing derivative there).
    """
    v = np.stack([f.vectors for f in frames])
    dv = np.empty_like(v)
    dv[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
    dv[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
    dv[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt)
    return dv


def connection(frames, sched, block, family=None):
    """Intra-block connection A(t_j) = V_n^dag dV_n/dt, anti-Hermitized.

    Computed by finite differences of the (gauge-smooth) frames.  When
    `family` with an analytic gradient is passed, the frames are assumed to
    be in the transported gauge produced by `spectral_path`, where first-order
    perturbation theory puts the whole frame derivative outside the block and
    the intra-block connection vanishes identically; the finite-difference
    values are then required to confirm this within 1e-5.
    """
    if len(frames) < 3:
        raise ValueError("need at least three frames to differentiate")
    dt = sched.horizon / (len(frames) - 1)
    start, stop = frames[0].blocks[block]
    dv = _frame_derivatives(frames, dt)
    values = []
    for frame, dvj in zip(frames, dv):
        vn = frame.vectors[:, start:stop]
        a = vn.conj().T @ dvj[:, start:stop]
        values.append(0.5 * (a - a.conj().T))
    values = np.stack(values)
    times = np.array([f.t for f in frames])
    if family is not None and family.analytic_gradient is not None:
        worst = float(np.max(np.abs(values)))
        if worst > 1e-5:
            raise ValueError(
                "frames are not in the transported gauge; finite-difference "
                f"connection reaches {worst:.3e} where perturbation theory gives 0"
            )
        values = np.zeros_like(values)
    return ConnectionBlock(block=block, times=times, values=values)


def _h1_from_derivative(frame, dvj):
    """H1 = i sum_n ( dV_n/dt V_n^dag - V_n A_n V_n^dag ) for one frame.

    The exact expression is Hermitian because the blocks exhaust the space;
    the finite-difference derivative breaks that at O(dt^2), so the result is
    projected back onto its Hermitian part.
    """
    dim = frame.vectors.shape[0]
    h1 = np.zeros((dim, dim), dtype=complex)
    for start, stop in frame.blocks:
        vn = frame.vectors[:, start:stop]
        dvn = dvj[:, start:stop]
        a_raw = vn.conj().T @ dvn
        h1 += 1j * (dvn @ vn.conj().T - vn @ a_raw @ vn.conj().T)
    return 0.5 * (h1 + h1.conj().T)


def _wants_gradient(family, use_gradient):
    if use_gradient is None:
        return family.analytic_gradient is not None
    if use_gradient and family.analytic_gradient is None:
        raise ValueError("family has no analytic gradient")
    return use_gradient


def counterdiabatic(family, sched, frames, t, use_gradient=None):
    """The transition-suppressing term H1(t) at a frame-grid time.

    H1 = i sum_n ( dV_n/dt V_n^dag - V_n A_n V_n^dag )
       = i sum_n (1 - P_n) dV_n/dt V_n^dag,

    which is gauge-invariant and Hermitian when the blocks exhaust the space.
    The frame derivative comes from first-order perturbation theory whenever
    the family carries an analytic gradient (exact off-block elements, exactly
    zero at zero velocity), else from finite differences of the smoothed
    frames; pass use_gradient=False to force the difference route.
    """
    dt = sched.horizon / (len(frames) - 1)
    j = int(round(t / dt))
    if not (0 <= j < len(frames)) or abs(t - j * dt) > 1e-9 * max(1.0, sched.horizon):
        raise ValueError(f"t={t!r} is not on the frame grid")
    frame = frames[j]
    if _wants_gradient(family, use_gradient):
        return _counterdiabatic_gradient(family, sched, frame)
    return _h1_from_derivative(frame, _frame_derivatives(frames, dt)[j])


def _counterdiabatic_gradient(family, sched, frame):
    """H1 from first-order perturbation theory: only off-block derivative terms."""
    hdot = family.time_derivative(sched.path(frame.t), sched.velocity(frame.t))
    h1 = np.zeros((family.dim, family.dim), dtype=complex)
    nblocks = len(frame.blocks)
    for n in range(nblocks):
        vn = frame.block_vectors(n)
        en = frame.block_energy(n)
        for m in range(nblocks):
            if m == n:
                continue
            vm = frame.block_vectors(m)
            em = frame.block_energy(m)
            coupling = vm.conj().T @ hdot @ vn / (en - em)
            h1 += 1j * (vm @ coupling @ vn.conj().T)
    return h1


def counterdiabatic_samples(family, sched, frames, use_gradient=None):
    """H1 at every frame-grid time, stacked (derivatives computed once)."""
    if _wants_gradient(family, use_gradient):
        return np.stack([_counterdiabatic_gradient(family, sched, f) for f in frames])
    dt = sched.horizon / (len(frames) - 1)
    dv = _frame_derivatives(frames, dt)
    return np.stack([_h1_from_derivative(f, dvj) for f, dvj in zip(frames, dv)])


def transitionless_generator(family, sched, grid, use_gradient=None):
    """Generator t -> H0(lambda(t)) + H1(t), H1 linearly interpolated on the grid."""
    frames = spectral_path(family, sched, grid)
    h1 = counterdiabatic_samples(family, sched, frames, use_gradient=use_gradient)
    dt = sched.horizon / grid

    def evaluate(t):
        tc = min(max(t, 0.0), sched.horizon)
        j = min(int(tc / dt), grid - 1)
        w = tc / dt - j
        return family(sched.path(tc)) + (1.0 - w) * h1[j] + w * h1[j + 1]

    return TimeDependentGenerator(evaluate, sched.horizon, family.dim)


def _require_loop(sched):
    if not sched.is_loop:
        raise LoopError("holonomy requires a loop schedule")
    gap = np.max(np.abs(np.asarray(sched.path(0.0)) - np.asarray(sched.path(sched.horizon))))
    if gap > 1e-12:
        raise LoopError(f"loop schedule does not close (gap {gap:.3e})")


def holonomy(family, loop, grid, block, initial_frame=None):
    """Block holonomy from the connection integral, in the t=0 frame basis.

    C = closure x ordprod_j exp(-A(t_j) dt), where the closure factor is the
    unitarized overlap of the initial frame with the transported final frame
    (the path closes, so both span the same subspace).  Purely geometric: the
    e^{-i int E_n dt} dynamical phase is never included, so callers needing it
    on a block with E_n != 0 must restore it themselves.
    """
    _require_loop(loop)
    frames = spectral_path(family, loop, grid, initial_frame=initial_frame)
    conn = connection(frames, loop, block)
    dt = loop.horizon / grid
    m = conn.values.shape[1]
    ordered = np.eye(m, dtype=complex)
    for j in range(grid):
        # exp(-A dt) with A anti-Hermitian: iA is Hermitian, exp(-A dt) = exp(-i (iA) (-dt))
        ordered = step_propagator(1j * conn.values[j], -dt) @ ordered
    closure = polar_unitary(frames[0].block_vectors(block).conj().T @ frames[-1].block_vectors(block))
    return HolonomyBlock(block=block, matrix=closure @ ordered)


def adiabatic_reference(family, loop, grid, block, initial_frame=None):
    """Oracle holonomy from unitarized frame overlaps only.

    Uses raw (unsmoothed) eigenframes; the final frame is identified with the
    initial one, so the accumulated product of polar(V_j^dag V_{j+1})^dag is
    already expressed in the t=0 frame basis.  Intermediate gauge choices
    cancel telescopically, which is what makes this an independent check of
    `holonomy`.
    """
    _require_loop(loop)
    frames = spectral_path(family, loop, grid, initial_frame=initial_frame, align=False)
    vs = [f.block_vectors(block) for f in frames]
    vs[-1] = vs[0]  # the path closes; identify the endpoint frame with the start
    m = vs[0].shape[1]
    acc = np.eye(m, dtype=complex)
    for j in range(grid):
        acc = polar_unitary(vs[j].conj().T @ vs[j + 1]).conj().T @ acc
    return HolonomyBlock(block=block, matrix=acc)
