"""Charge-basis model of a two-island tunable-coupling transmon.

Each island carries a Cooper-pair number operator truncated to n in
[-N, N]; the full Hilbert space is the (2N+1)^2 tensor product.  With
e = 1, hbar = 1 and the flux quantum folded into the drive prefactor,

    H = sum_a 4 E_Ca (n_a - n_ga)^2
        - E_J0a cos(pi f_a) * cos(gamma_a - 2 pi f_a)
        + 4 E_I n_+ n_-,

where e^{i gamma_a} acts as the unit charge-raising operator on island a
and f_a is the flux frustration threading that island's SQUID loop.  The
2 pi f_a offset inside the cosine is a diagonal gauge and leaves the
spectrum untouched; it is kept because the drive operator below inherits
its phases.

A weak flux drive on the lower island couples eigenstates through

    Gamma = E_J0- cos(pi f_-) sin(gamma_- - 2 pi f_-),

whose matrix elements between labeled eigenstates set the achievable Rabi
frequencies Omega_kl = amplitude * <k|Gamma|l> / 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import require_hermitian

LEVEL_ORDER = ("0", "1", "a", "e")
TRANSITION_PAIRS = (("e", "0"), ("e", "1"), ("e", "a"), ("0", "1"), ("0", "a"), ("1", "a"))


class LevelTrackingError(RuntimeError):
    """Eigenvector-overlap continuation became ambiguous during a sweep."""

    def __init__(self, message, sweep_index):
        super().__init__(message)
        self.sweep_index = sweep_index


class ForbiddenTransitionError(ValueError):
    """The requested drive matrix element vanishes."""


@dataclass(frozen=True)
class DeviceParams:
    """Circuit energies (units of the common charging scale), gate charges, fluxes."""

    e_c_plus: float = 1.0
    e_c_minus: float = 1.0
    e_j0_plus: float = 50.0
    e_j0_minus: float = 50.0
    e_i: float = 0.0
    n_g_plus: float = 0.0
    n_g_minus: float = 0.0
    f_plus: float = 0.0
    f_minus: float = 0.0

    def __post_init__(self):
        if self.e_c_plus <= 0 or self.e_c_minus <= 0:
            raise ValueError("charging energies must be positive")

    @property
    def charging_scale(self):
        """Reporting scale: E_C when the islands match, else the lower island's."""
        return self.e_c_plus if self.e_c_plus == self.e_c_minus else self.e_c_minus

    def reported_frustrations(self):
        """Frustrations folded into [0, 1)."""
        return self.f_plus % 1.0, self.f_minus % 1.0


@dataclass(frozen=True)
class ChargeBasisConfig:
    """Charge truncation per island; the joint space has (2N+1)^2 states."""

    n_max: int = 12

    def __post_init__(self):
        if self.n_max < 4:
            raise ValueError("charge truncation must be at least 4")

    @property
    def island_dim(self):
        return 2 * self.n_max + 1

    @property
    def dim(self):
        return self.island_dim**2


class ChargeOperators(NamedTuple):
    n_plus: np.ndarray
    n_minus: np.ndarray
    shift_plus: np.ndarray
    shift_minus: np.ndarray


def _island_ops(cfg):
    d = cfg.island_dim
    n = np.diag(np.arange(-cfg.n_max, cfg.n_max + 1).astype(float))
    shift = np.diag(np.ones(d - 1), k=-1)  # |n+1><n|
    return n, shift


def charge_ops(cfg):
    """Number and unit charge-raising operators on the joint island space."""
    n, shift = _island_ops(cfg)
    eye = np.eye(cfg.island_dim)
    return ChargeOperators(
        n_plus=np.kron(n, eye),
        n_minus=np.kron(eye, n),
        shift_plus=np.kron(shift, eye),
        shift_minus=np.kron(eye, shift),
    )


def _josephson_cos(shift, frustration):
    phase = np.exp(-2j * math.pi * frustration)
    return 0.5 * (phase * shift + np.conj(phase) * shift.conj().T)


def _josephson_sin(shift, frustration):
    phase = np.exp(-2j * math.pi * frustration)
    return (phase * shift - np.conj(phase) * shift.conj().T) / 2j


def island_hamiltonian(e_c, e_j0, n_g, frustration, cfg):
    """Single-island term: 4 E_C (n - n_g)^2 - E_J0 cos(pi f) cos(gamma - 2 pi f)."""
    n, shift = _island_ops(cfg)
    eye = np.eye(cfg.island_dim)
    return 4.0 * e_c * (n - n_g * eye) @ (n - n_g * eye) - e_j0 * math.cos(math.pi * frustration) * _josephson_cos(
        shift, frustration
    )


def tct_hamiltonian(p, cfg):
    """Full two-island Hamiltonian; a tensor sum of islands plus the charge coupling.

    The interaction is 4 E_I (n_+ - n_g+)(n_- - n_g-): the gate-charge offsets
    belong in the cross term as well (they come from the one inverse
    capacitance matrix), and keeping them preserves the integer gate-charge
    periodicity of the spectrum.  At n_g = 0 this is 4 E_I n_+ n_- exactly.
    """
    eye = np.eye(cfg.island_dim)
    h_plus = island_hamiltonian(p.e_c_plus, p.e_j0_plus, p.n_g_plus, p.f_plus, cfg)
    h_minus = island_hamiltonian(p.e_c_minus, p.e_j0_minus, p.n_g_minus, p.f_minus, cfg)
    n, _ = _island_ops(cfg)
    h = (
        np.kron(h_plus, eye)
        + np.kron(eye, h_minus)
        + 4.0 * p.e_i * np.kron(n - p.n_g_plus * eye, n - p.n_g_minus * eye)
    )
    return require_hermitian(h, tol=1e-12)


def drive_operator(p, cfg):
    """Gamma = E_J0- cos(pi f_-) sin(gamma_- - 2 pi f_-) on the lower island.

    The E_J-/Phi_0 dimensional prefactor enters as the single scalar E_J0-;
    drive amplitudes multiply it from outside.
    """
    _, shift = _island_ops(cfg)
    eye = np.eye(cfg.island_dim)
    gamma = p.e_j0_minus * math.cos(math.pi * p.f_minus) * _josephson_sin(shift, p.f_minus)
    return np.kron(eye, gamma)


def eigensystem(p, cfg, count=None):
    """Ascending eigenvalues (units of the charging scale) and eigenvectors."""
    h = tct_hamiltonian(p, cfg)
    energies, vectors = np.linalg.eigh(h)
    energies = energies / p.charging_scale
    if count is not None:
        energies, vectors = energies[:count], vectors[:, :count]
    return energies, vectors


def identify_levels(energies, vectors, order=LEVEL_ORDER):
    """Label the lowest four eigenstates, ascending, as |0>, |1>, |a>, |e>.

    `order` permutes the labels if a different assignment is wanted; the
    default is ascending energy.
    """
    if len(energies) < 4:
        raise ValueError("need at least four levels to label")
    if sorted(order) != sorted(LEVEL_ORDER):
        raise ValueError(f"order must permute {LEVEL_ORDER}")
    return {label: k for k, label in enumerate(order)}


def track_levels(frames, count=4, min_overlap=0.5):
    """Follow `count` labeled eigenvectors across a sweep by overlap continuation.

    `frames` is a sequence of (energies, vectors) pairs.  Returns an integer
    array of shape (len(frames), count): the eigenindex carrying each label at
    every sweep point.  Labels start as ascending order at the first point.
    Raises LevelTrackingError when the best available overlap drops below
    `min_overlap`.
    """
    assignments = [list(range(count))]
    _, prev_vectors = frames[0]
    prev = [prev_vectors[:, k] for k in range(count)]
    for s in range(1, len(frames)):
        _, vectors = frames[s]
        window = min(vectors.shape[1], count + 4)
        overlaps = np.abs(np.stack([vec.conj() @ vectors[:, :window] for vec in prev]))
        taken = set()
        slot = [None] * count
        for label in np.argsort(-overlaps.max(axis=1)):
            choices = np.argsort(-overlaps[label])
            pick = next((c for c in choices if c not in taken), None)
            if pick is None or overlaps[label, pick] < min_overlap:
                raise LevelTrackingError(
                    f"overlap continuation ambiguous at sweep index {s}", sweep_index=s
                )
            taken.add(pick)
            slot[label] = int(pick)
        assignments.append(slot)
        prev = [vectors[:, k] for k in slot]
    return np.array(assignments)


@dataclass(frozen=True)
class SpectrumTable:
    """Low-lying spectrum along a one-parameter sweep (energies over E_C)."""

    variable: str
    values: np.ndarray
    energies: np.ndarray  # shape (len(values), levels)


def spectrum_sweep(base, cfg, variable, values, levels=6):
    """Diagonalize along a sweep of one DeviceParams field."""
    rows = []
    for v in values:
        energies, _ = eigensystem(replace(base, **{variable: float(v)}), cfg, count=levels)
        rows.append(energies)
    return SpectrumTable(variable=variable, values=np.asarray(values, dtype=float), energies=np.stack(rows))


@dataclass(frozen=True)
class TransitionTable:
    """|<k|Gamma|l>| between labeled eigenstates along a sweep."""

    variable: str
    values: np.ndarray
    pairs: tuple
    moduli: np.ndarray  # shape (len(values), len(pairs))


def transition_elements(p, cfg, pairs=TRANSITION_PAIRS, labels=None):
    """|t_kl| = |<k|Gamma|l>| at one parameter point (ascending labels by default)."""
    energies, vectors = eigensystem(p, cfg)
    labels = labels or identify_levels(energies, vectors)
    gamma = drive_operator(p, cfg)
    out = {}
    for k, l in pairs:
        out[(k, l)] = float(abs(vectors[:, labels[k]].conj() @ gamma @ vectors[:, labels[l]]))
    return out


def transition_sweep(base, cfg, variable, values, pairs=TRANSITION_PAIRS):
    """Drive matrix elements along a sweep, with labels tracked by continuation."""
    frames = []
    gammas = []
    for v in values:
        p = replace(base, **{variable: float(v)})
        frames.append(eigensystem(p, cfg))
        gammas.append(drive_operator(p, cfg))
    tracked = track_levels(frames, count=4)
    moduli = np.zeros((len(values), len(pairs)))
    for s, ((_, vectors), gamma) in enumerate(zip(frames, gammas)):
        labels = {label: int(tracked[s, k]) for k, label in enumerate(LEVEL_ORDER)}
        for c, (k, l) in enumerate(pairs):
            moduli[s, c] = abs(vectors[:, labels[k]].conj() @ gamma @ vectors[:, labels[l]])
    return TransitionTable(
        variable=variable, values=np.asarray(values, dtype=float), pairs=tuple(pairs), moduli=moduli
    )


def effective_rabi(p, cfg, amplitude, pair):
    """Omega_kl = amplitude * <k|Gamma|l> / 2 between labeled eigenstates."""
    energies, vectors = eigensystem(p, cfg)
    labels = identify_levels(energies, vectors)
    gamma = drive_operator(p, cfg)
    k, l = pair
    element = vectors[:, labels[k]].conj() @ gamma @ vectors[:, labels[l]]
    if abs(element) < 1e-12:
        raise ForbiddenTransitionError(f"transition {k}<->{l} is forbidden (|<k|Gamma|l>| < 1e-12)")
    return complex(amplitude * element / 2.0)


def amplitude_for_coupling(p, cfg, coupling, pair):
    """Drive amplitude realizing |Omega_kl| = coupling (phase carried by the drive)."""
    omega_unit = effective_rabi(p, cfg, 1.0, pair)
    return float(coupling / abs(omega_unit))


def derived_capacitances(c_i, c_plus, c_minus, c_g_plus, c_g_minus, c_p=None):
    """(E_C+, E_C-, E_I) from raw circuit capacitances, e = 1.

    C_sig+- = C_I + C_+- + C_g+-;  C'_+- = (C_sig+ C_sig- - C_I^2) / C_sig-+;
    E_C+- = 1 / (2 C'_+-);  E_I = -1 / C' with C' = (C_sig+ C_sig- - C_I^2) / C_P.
    C_P defaults to C_I, which reproduces the coupling term of the inverse
    two-island capacitance matrix; C_I = 0 decouples the islands exactly.
    """
    if c_i < 0 or min(c_plus, c_minus, c_g_plus, c_g_minus) <= 0:
        raise ValueError("capacitances must be positive (C_I may be zero)")
    c_sig_plus = c_i + c_plus + c_g_plus
    c_sig_minus = c_i + c_minus + c_g_minus
    det = c_sig_plus * c_sig_minus - c_i**2
    if det <= 0:
        raise ValueError("capacitance matrix is not positive definite")
    c_prime_plus = det / c_sig_minus
    c_prime_minus = det / c_sig_plus
    if c_p is None:
        c_p = c_i
    e_i = 0.0 if c_p == 0 else -c_p / det
    return 1.0 / (2.0 * c_prime_plus), 1.0 / (2.0 * c_prime_minus), e_i


def truncation_gap(p, cfg, levels=6):
    """Largest relative change of the lowest eigenvalues between N and N+2."""
    coarse, _ = eigensystem(p, cfg, count=levels)
    fine, _ = eigensystem(p, ChargeBasisConfig(cfg.n_max + 2), count=levels)
    return float(np.max(np.abs(coarse - fine) / np.maximum(1.0, np.abs(fine))))


def converged_cutoff(p, levels=6, rel_tol=1e-8, start=4, stop=24):
    """Smallest N whose lowest `levels` eigenvalues are stable against N+2."""
    for n in range(start, stop + 1):
        if truncation_gap(p, ChargeBasisConfig(n), levels=levels) < rel_tol:
            return n
    raise RuntimeError(f"no converged truncation found below N = {stop}")


def decoupled_spectrum(p, cfg, count):
    """Lowest eigenvalues at E_I = 0 from pairwise sums of island spectra."""
    h_plus = island_hamiltonian(p.e_c_plus, p.e_j0_plus, p.n_g_plus, p.f_plus, cfg)
    h_minus = island_hamiltonian(p.e_c_minus, p.e_j0_minus, p.n_g_minus, p.f_minus, cfg)
    w_plus = np.linalg.eigvalsh(h_plus)
    w_minus = np.linalg.eigvalsh(h_minus)
    sums = sorted(a + b for a, b in itertools.product(w_plus[: count + 2], w_minus[: count + 2]))
    return np.array(sums[:count]) / p.charging_scale
