import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_hermitian(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2.0


def random_unitary(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def transport_residual(phi2, grid=6144, horizon=5.0):
    """Worst-case || i dU/dt - H(t) U(t) ||_F along the geodesic-triangle loop.

    U(t) = sum_n e^{-i E_n t} V_n(t) C_n(t) V_n(0)^dag is assembled from the
    transported frames, the per-block ordered connection products, and the
    dynamical phases of the nonzero-energy blocks.  dU/dt is estimated with
    second-order stencils that never straddle a segment joint (the path is C^1
    there, so U'' jumps and a straddling stencil would measure its own
    truncation error instead of the residual).  `grid` must be divisible by 6
    so the joints land on grid nodes.
    """
    from holodrive.core import frobenius, step_propagator
    from holodrive.gates import tripod_family
    from holodrive.paths import geodesic_triangle_schedule
    from holodrive.transport import connection, counterdiabatic_samples, spectral_path

    if grid % 6:
        raise ValueError("grid must be divisible by 6")
    fam = tripod_family(1.0)
    sched = geodesic_triangle_schedule(phi2, horizon).to_parameter_schedule()
    frames = spectral_path(fam, sched, grid)
    h1 = counterdiabatic_samples(fam, sched, frames)
    dt = sched.horizon / grid
    nblocks = len(frames[0].blocks)
    conns = [connection(frames, sched, n) for n in range(nblocks)]
    energies = [frames[0].block_energy(n) for n in range(nblocks)]
    c = [np.eye(frames[0].block_sizes[n], dtype=complex) for n in range(nblocks)]
    u = []
    for j in range(grid + 1):
        acc = np.zeros((4, 4), dtype=complex)
        for n in range(nblocks):
            vn = frames[j].block_vectors(n)
            v0 = frames[0].block_vectors(n)
            acc += np.exp(-1j * energies[n] * frames[j].t) * vn @ c[n] @ v0.conj().T
        u.append(acc)
        if j < grid:
            for n in range(nblocks):
                c[n] = step_propagator(1j * conns[n].values[j], -dt) @ c[n]

    def residual_at(j, dudt):
        h = fam(sched.path(frames[j].t)) + h1[j]
        return frobenius(1j * dudt - h @ u[j])

    joints = [0, grid // 3, 2 * grid // 3, 5 * grid // 6, grid]
    worst = 0.0
    for a, b in zip(joints, joints[1:]):
        worst = max(worst, residual_at(a, (-3 * u[a] + 4 * u[a + 1] - u[a + 2]) / (2 * dt)))
        worst = max(worst, residual_at(b, (3 * u[b] - 4 * u[b - 1] + u[b - 2]) / (2 * dt)))
        for j in range(a + 1, b):
            worst = max(worst, residual_at(j, (u[j + 1] - u[j - 1]) / (2 * dt)))
    return worst
