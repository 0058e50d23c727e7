"""Concrete four-level families and the holonomic gates they carry.

Basis order everywhere: |0>, |1>, |a>, |e> (indices 0..3).  The qubit lives
in span{|0>, |1>}; |a> is auxiliary, |e> the common excited level.  All
couplings are resonant, so the zero-energy (dark) eigenspace carries the
computational content and picks up no dynamical phase.

The two-qubit family embeds the same Lambda structure into the 16-dimensional
tensor basis of two such systems (left-major index 4*i_left + i_right), with
the roles |1> -> |10>, |a> -> |ae>, |e> -> |ea|; the other 13 basis states
are exactly decoupled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import frobenius, step_propagator
from .paths import LoopSchedule, geodesic_triangle_schedule, orange_slice_schedule
from .transport import HamiltonianFamily, counterdiabatic_samples, spectral_path

B0, B1, BA, BE = 0, 1, 2, 3
LEVEL_LABELS = ("0", "1", "a", "e")

# Two-qubit tensor-basis indices of the embedded Lambda triple and the qubit plane.
TWO_QUBIT_DIM = 16
IDX_00, IDX_01, IDX_10, IDX_11 = 0, 1, 4, 5
IDX_AE, IDX_EA = 11, 14
COMPUTATIONAL_2Q = (IDX_00, IDX_01, IDX_10, IDX_11)
SPECTATORS_2Q = (IDX_00, IDX_01, IDX_11)


@dataclass(frozen=True)
class TripodParams:
    """Rabi scale and sphere angles controlling the resonant couplings."""

    omega: float
    theta: float
    phi: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("Rabi scale must be positive")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")


def lambda_hamiltonian(p):
    """Lambda coupling with |0> decoupled.

    H = omega * (-sin(theta/2) e^{i phi} |e><1| + cos(theta/2) |e><a|) + h.c.;
    the dark state cos(theta/2)|1> + sin(theta/2) e^{i phi}|a> and |0> span
    the zero-energy block, the bright pair sits at +-omega.
    """
    h = np.zeros((4, 4), dtype=complex)
    c1 = -p.omega * math.sin(p.theta / 2.0) * np.exp(1j * p.phi)
    ca = p.omega * math.cos(p.theta / 2.0)
    h[BE, B1] = c1
    h[BE, BA] = ca
    h[B1, BE] = np.conj(c1)
    h[BA, BE] = np.conj(ca)
    return h


def lambda_dark_state(p):
    """cos(theta/2)|1> + sin(theta/2) e^{i phi} |a>."""
    d = np.zeros(4, dtype=complex)
    d[B1] = math.cos(p.theta / 2.0)
    d[BA] = math.sin(p.theta / 2.0) * np.exp(1j * p.phi)
    return d


def tripod_hamiltonian(p):
    """Full tripod coupling: H = sum_k f_ek |e><k| + h.c.

    f_e0 = omega sin(theta) cos(phi), f_e1 = omega sin(theta) sin(phi),
    f_ea = omega cos(theta).  Two dark states at zero energy, bright pair
    at +-omega.
    """
    h = np.zeros((4, 4), dtype=complex)
    fe0 = p.omega * math.sin(p.theta) * math.cos(p.phi)
    fe1 = p.omega * math.sin(p.theta) * math.sin(p.phi)
    fea = p.omega * math.cos(p.theta)
    for idx, f in ((B0, fe0), (B1, fe1), (BA, fea)):
        h[BE, idx] = f
        h[idx, BE] = np.conj(f)
    return h


def dark_frame(p):
    """Columns (|D1>, |D2>) annihilated by the tripod Hamiltonian.

    |D1> = cos(theta)(cos(phi)|0> + sin(phi)|1>) - sin(theta)|a>,
    |D2> = cos(phi)|1> - sin(phi)|0>.
    """
    d1 = np.zeros(4, dtype=complex)
    d1[B0] = math.cos(p.theta) * math.cos(p.phi)
    d1[B1] = math.cos(p.theta) * math.sin(p.phi)
    d1[BA] = -math.sin(p.theta)
    d2 = np.zeros(4, dtype=complex)
    d2[B0] = -math.sin(p.phi)
    d2[B1] = math.cos(p.phi)
    return np.column_stack([d1, d2])


def _lambda_h_and_grads(omega, theta, phi):
    half = theta / 2.0
    e_iphi = np.exp(1j * phi)
    c1 = -omega * math.sin(half) * e_iphi
    ca = omega * math.cos(half)
    d_c1_theta = -0.5 * omega * math.cos(half) * e_iphi
    d_ca_theta = -0.5 * omega * math.sin(half)
    d_c1_phi = 1j * c1
    return (c1, ca), (d_c1_theta, d_ca_theta), (d_c1_phi, 0.0)


def lambda_family(omega=1.0):
    """The Lambda system as a (theta, phi)-parametrized family with gradients."""

    def build(point):
        return lambda_hamiltonian(TripodParams(omega, point[0], point[1]))

    def gradient(point):
        _, dth, dph = _lambda_h_and_grads(omega, point[0], point[1])
        return [_pair_coupling(4, ((BE, B1, dth[0]), (BE, BA, dth[1]))),
                _pair_coupling(4, ((BE, B1, dph[0]), (BE, BA, dph[1])))]

    return HamiltonianFamily(build=build, dim=4, analytic_gradient=gradient)


def _pair_coupling(dim, entries):
    h = np.zeros((dim, dim), dtype=complex)
    for row, col, value in entries:
        h[row, col] += value
        h[col, row] += np.conj(value)
    return h


def tripod_family(omega=1.0):
    """The tripod as a (theta, phi)-parametrized family with gradients."""

    def build(point):
        return tripod_hamiltonian(TripodParams(omega, point[0], point[1]))

    def gradient(point):
        theta, phi = point
        st, ct = math.sin(theta), math.cos(theta)
        sp, cp = math.sin(phi), math.cos(phi)
        d_theta = _pair_coupling(
            4, ((BE, B0, omega * ct * cp), (BE, B1, omega * ct * sp), (BE, BA, -omega * st))
        )
        d_phi = _pair_coupling(4, ((BE, B0, -omega * st * sp), (BE, B1, omega * st * cp)))
        return [d_theta, d_phi]

    return HamiltonianFamily(build=build, dim=4, analytic_gradient=gradient)


def two_qubit_family(omega=1.0):
    """Two-tripod tensor family: J1 |ea><10| + J2 |ea><ae| + h.c.

    J1 = -omega sin(theta/2) e^{i phi}, J2 = omega cos(theta/2): the Lambda
    parametrization transplanted onto {|10>, |ae>, |ea>}.  Every other tensor
    basis state has an identically zero row and column.
    """

    def build(point):
        (c1, ca), _, _ = _lambda_h_and_grads(omega, point[0], point[1])
        return _pair_coupling(TWO_QUBIT_DIM, ((IDX_EA, IDX_10, c1), (IDX_EA, IDX_AE, ca)))

    def gradient(point):
        _, dth, dph = _lambda_h_and_grads(omega, point[0], point[1])
        return [
            _pair_coupling(TWO_QUBIT_DIM, ((IDX_EA, IDX_10, dth[0]), (IDX_EA, IDX_AE, dth[1]))),
            _pair_coupling(TWO_QUBIT_DIM, ((IDX_EA, IDX_10, dph[0]), (IDX_EA, IDX_AE, dph[1]))),
        ]

    return HamiltonianFamily(build=build, dim=TWO_QUBIT_DIM, analytic_gradient=gradient)


@dataclass(frozen=True)
class GateReport:
    """Outcome of driving the computational basis around one loop.

    `leakage` is the largest population found outside the instantaneous
    zero-energy subspace anywhere along the run; at loop completion that
    subspace contains the computational basis again, so the final sample is
    the usual end-of-gate leakage.
    """

    qubit_unitary: np.ndarray
    gamma: float
    fidelity: float
    leakage: float
    spectator_deviation: float | None = None


def _zero_block(frame):
    for n in range(len(frame.blocks)):
        if abs(frame.block_energy(n)) <= 1e-8 * max(1.0, float(np.max(np.abs(frame.energies)))):
            return n
    raise ValueError("family has no zero-energy block")


def _interp(samples, dt, t, count):
    j = min(int(t / dt), count - 1)
    w = t / dt - j
    return (1.0 - w) * samples[j] + w * samples[j + 1]


def run_loop(family, loop, basis_indices, grid, mode="tqda", substeps=None, omega=1.0, observer=None):
    """Drive the given basis columns around the loop; track dark-space leakage.

    Returns (final columns (dim x len(basis_indices)), max leakage).  In
    `tqda` mode the generator is H0 + H1 with H1 interpolated linearly from
    the frame grid; in `bare` mode it is H0 alone.  `substeps` integration
    steps are taken per frame interval; by default enough to keep
    omega * dt below 0.05.  `observer(j, psi)` is called at every frame node.
    """
    if mode not in ("tqda", "bare"):
        raise ValueError(f"unknown mode {mode!r}")
    sched = loop.to_parameter_schedule()
    frames = spectral_path(family, sched, grid)
    h1 = counterdiabatic_samples(family, sched, frames) if mode == "tqda" else None
    if substeps is None:
        substeps = max(1, math.ceil(20.0 * omega * sched.horizon / grid))
    dark = _zero_block(frames[0])

    dt_frame = sched.horizon / grid
    dt = dt_frame / substeps
    psi = np.zeros((family.dim, len(basis_indices)), dtype=complex)
    for col, idx in enumerate(basis_indices):
        psi[idx, col] = 1.0

    def leakage_at(j):
        vd = frames[j].block_vectors(dark)
        inside = np.sum(np.abs(vd.conj().T @ psi) ** 2, axis=0)
        return float(np.max(1.0 - inside))

    leakage = leakage_at(0)
    if observer is not None:
        observer(0, psi)
    for j in range(grid):
        for k in range(substeps):
            t_mid = (j + (k + 0.5) / substeps) * dt_frame
            h = family(sched.path(t_mid))
            if h1 is not None:
                h = h + _interp(h1, dt_frame, t_mid, grid)
            psi = step_propagator(h, dt) @ psi
        leakage = max(leakage, leakage_at(j + 1))
        if observer is not None:
            observer(j + 1, psi)
    return psi, leakage


def gate_up(phi1, horizon, grid=2048, mode="tqda", omega=1.0, substeps=None):
    """Phase-shift gate from the orange-slice loop on the Lambda system.

    Target diag(1, e^{-i phi1}) on span{|0>, |1>}; the reported gamma is the
    relative phase arg<1|U|1> - arg<0|U|0>.
    """
    loop = orange_slice_schedule(phi1, horizon)
    psi, leakage = run_loop(lambda_family(omega), loop, (B0, B1), grid, mode=mode, substeps=substeps, omega=omega)
    u_q = psi[np.array((B0, B1)), :]
    gamma = float(np.angle(u_q[1, 1]) - np.angle(u_q[0, 0]))
    target = np.diag(np.array([1.0, np.exp(-1j * phi1)], dtype=complex))
    fidelity = min(float(abs(np.trace(target.conj().T @ u_q)) / 2.0), 1.0)
    return GateReport(qubit_unitary=u_q, gamma=gamma, fidelity=fidelity, leakage=leakage)


def gate_ub(phi2, horizon, grid=2048, mode="tqda", omega=1.0, substeps=None):
    """Rotation gate from the geodesic-triangle loop on the tripod.

    Target cos(phi2) I + sin(phi2) (|1><0| - |0><1|) on the qubit plane, i.e.
    |0> -> cos(phi2)|0> + sin(phi2)|1>; gamma is the extracted rotation angle.
    """
    loop = geodesic_triangle_schedule(phi2, horizon)
    psi, leakage = run_loop(tripod_family(omega), loop, (B0, B1), grid, mode=mode, substeps=substeps, omega=omega)
    u_q = psi[np.array((B0, B1)), :]
    target = np.array([[math.cos(phi2), -math.sin(phi2)], [math.sin(phi2), math.cos(phi2)]], dtype=complex)
    fidelity = min(float(abs(np.trace(target.conj().T @ u_q)) / 2.0), 1.0)
    gamma = _rotation_angle(u_q)
    return GateReport(qubit_unitary=u_q, gamma=gamma, fidelity=fidelity, leakage=leakage)


def _rotation_angle(u_q):
    """Rotation angle of a qubit unitary close to e^{i delta} R(gamma)."""
    det = u_q[0, 0] * u_q[1, 1] - u_q[0, 1] * u_q[1, 0]
    if abs(det) < 1e-12:
        return float("nan")
    u = u_q / np.sqrt(det)
    return float(math.atan2(u[1, 0].real, u[0, 0].real))


def gate_u2(phi1, horizon, grid=2048, mode="tqda", omega=1.0, substeps=None):
    """Entangling phase gate: the orange-slice loop on the two-tripod family.

    Target diag(1, 1, e^{-i phi1}, 1) on span{|00>, |01>, |10>, |11>}; the
    spectator deviation is the largest drift of the |00>, |01>, |11>
    amplitudes anywhere along the run (they are exactly decoupled).
    """
    loop = orange_slice_schedule(phi1, horizon)
    spectator_cols = [col for col, idx in enumerate(COMPUTATIONAL_2Q) if idx in SPECTATORS_2Q]
    worst = [0.0]

    def watch_spectators(_j, psi):
        for col in spectator_cols:
            worst[0] = max(worst[0], float(abs(psi[COMPUTATIONAL_2Q[col], col] - 1.0)))

    psi, leakage = run_loop(two_qubit_family(omega), loop, COMPUTATIONAL_2Q, grid,
                            mode=mode, substeps=substeps, omega=omega, observer=watch_spectators)
    u_q = psi[np.array(COMPUTATIONAL_2Q), :]
    gamma = float(np.angle(u_q[2, 2]) - np.angle(u_q[0, 0]))
    target = np.diag(np.array([1.0, 1.0, np.exp(-1j * phi1), 1.0], dtype=complex))
    fidelity = min(float(abs(np.trace(target.conj().T @ u_q)) / 4.0), 1.0)
    return GateReport(qubit_unitary=u_q, gamma=gamma, fidelity=fidelity, leakage=leakage,
                      spectator_deviation=worst[0])


# Transitions available to each stage of the two schemes (off-diagonal pairs
# of level labels); the pole-return stage reuses the descent row, where only
# the static e<->a coupling survives.
ORANGE_ALLOWED = (
    frozenset({("1", "e"), ("a", "e"), ("1", "a")}),
    frozenset({("1", "e")}),
    frozenset({("1", "e"), ("a", "e"), ("1", "a")}),
    frozenset({("1", "e"), ("a", "e"), ("1", "a")}),
)
TRIANGLE_ALLOWED = (
    frozenset({("0", "e"), ("a", "e"), ("0", "a")}),
    frozenset({("0", "e"), ("1", "e"), ("0", "1")}),
    frozenset({("0", "e"), ("1", "e"), ("a", "e"), ("0", "a"), ("1", "a")}),
    frozenset({("0", "e"), ("1", "e"), ("a", "e"), ("0", "a"), ("1", "a")}),
)


@dataclass(frozen=True)
class StructureReport:
    """Which basis pairs the driven Hamiltonian actually couples on one stage."""

    segment: int
    observed: frozenset
    allowed: frozenset
    passed: bool


def structure_check(loop, family, segment, allowed=None, grid=512, samples=32, labels=LEVEL_LABELS):
    """Sample H0 + H1 inside one loop segment and report coupled basis pairs.

    A pair (i, j), i < j, is observed when |<i|H|j>| exceeds 1e-8 * ||H||_F at
    any of `samples` interior times.  Passes iff observed is a subset of
    `allowed` (given as a set of label pairs).  H1 comes from perturbation
    theory when the family carries an analytic gradient: the threshold sits
    below the finite-difference noise floor, so elements that cancel
    algebraically must be computed algebraically.
    """
    if not 0 <= segment < len(loop.segments):
        raise ValueError(f"segment index {segment} out of range")
    sched = loop.to_parameter_schedule()
    frames = spectral_path(family, sched, grid)
    h1 = counterdiabatic_samples(family, sched, frames)
    dt_frame = sched.horizon / grid
    t0, t1 = loop.segment_window(segment)
    observed = set()
    for t in np.linspace(t0, t1, samples + 2)[1:-1]:
        h = family(sched.path(t)) + _interp(h1, dt_frame, t, grid)
        threshold = 1e-8 * frobenius(h)
        for i in range(family.dim):
            for j in range(i + 1, family.dim):
                if abs(h[i, j]) > threshold:
                    observed.add((labels[i], labels[j]))
    observed = frozenset(observed)
    allowed = frozenset(allowed) if allowed is not None else observed
    return StructureReport(segment=segment, observed=observed, allowed=allowed,
                           passed=observed <= allowed)
