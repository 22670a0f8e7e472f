"""Gaussian-state diagnostics on interleaved phase-space moments.

Conventions: vacuum variance 1/2, [x, p] = i, layout [x1, p1, x2, p2, ...],
symplectic form Omega = blockdiag([[0, 1], [-1, 0]]).  All routines are pure
functions; inputs are never modified.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .bogoliubov import ModeBasis
from .optics import CouplingModel

VACUUM_NU = 0.5


def symplectic_form(n_modes: int) -> np.ndarray:
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        omega[2 * j, 2 * j + 1] = 1.0
        omega[2 * j + 1, 2 * j] = -1.0
    return omega


def symplectic_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Williamson spectrum of a covariance matrix, ascending, no basis.

    Cheap route for physicality monitoring: the eigenvalues of i Omega A
    come in pairs +/- i nu_k.
    """
    n = a.shape[0] // 2
    spectrum = np.linalg.eigvals(symplectic_form(n) @ a)
    nus = np.sort(np.abs(spectrum.imag))
    return nus[1::2]  # each value appears twice


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Normal-mode content of a covariance matrix.

    ``nus`` ascending, one entry per mode; ``basis`` S satisfies both
    S Omega S^T = Omega and A = S diag(nu1, nu1, ..., nun, nun) S^T.
    """

    nus: np.ndarray
    basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        d = np.repeat(self.nus, 2)
        return (self.basis * d) @ self.basis.T


def williamson(a: np.ndarray) -> SymplecticSpectrum:
    """Symplectic diagonalization by the square-root method."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise ValueError("covariance matrix must be square and even-sized")
    if np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("covariance matrix must be symmetric")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    if w.min() <= 0.0:
        raise ValueError("covariance matrix must be positive definite")
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T

    n = a.shape[0] // 2
    omega = symplectic_form(n)
    # antisymmetric kernel whose Schur blocks hold 1/nu_k
    kernel = inv_root @ omega @ inv_root
    kernel = 0.5 * (kernel - kernel.T)
    t, z = schur(kernel, output="real")

    nus = np.empty(n)
    for k in range(n):
        b = t[2 * k, 2 * k + 1]
        if b < 0.0:  # flip the block orientation, keep Z orthogonal
            z[:, [2 * k, 2 * k + 1]] = z[:, [2 * k + 1, 2 * k]]
            b = -b
        nus[k] = 1.0 / b
    order = np.argsort(nus)
    nus = nus[order]
    column_order = np.ravel(np.column_stack((2 * order, 2 * order + 1)))
    z = z[:, column_order]

    basis = root @ z / np.sqrt(np.repeat(nus, 2))
    return SymplecticSpectrum(nus=nus, basis=basis)


def _mode_slice(modes: tuple[int, ...]) -> np.ndarray:
    idx = []
    for m in modes:
        idx.extend((2 * m, 2 * m + 1))
    return np.array(idx, dtype=int)


def reduced_covariance(a: np.ndarray, modes: tuple[int, ...]) -> np.ndarray:
    idx = _mode_slice(modes)
    return np.asarray(a)[np.ix_(idx, idx)].copy()


def reduced_means(r: np.ndarray, modes: tuple[int, ...]) -> np.ndarray:
    return np.asarray(r)[_mode_slice(modes)].copy()


def log_negativity(a: np.ndarray, modes_a: tuple[int, ...],
                   modes_b: tuple[int, ...]) -> float:
    """Entanglement across the (modes_a | modes_b) split of the reduced state.

    The state is first reduced to modes_a + modes_b; the partial transpose
    flips the momentum rows and columns of modes_b.
    """
    modes_a = tuple(modes_a)
    modes_b = tuple(modes_b)
    if not modes_a or not modes_b or set(modes_a) & set(modes_b):
        raise ValueError("partition must be two disjoint nonempty subsets")
    sub = reduced_covariance(a, modes_a + modes_b)
    signs = np.ones(sub.shape[0])
    for pos in range(len(modes_a), len(modes_a) + len(modes_b)):
        signs[2 * pos + 1] = -1.0
    flipped = sub * np.outer(signs, signs)
    nus = symplectic_eigenvalues(flipped)
    negative = nus[nus < VACUUM_NU]
    return float(np.sum(-np.log2(2.0 * negative))) if negative.size else 0.0


def purity(a: np.ndarray, modes: tuple[int, ...] | None = None) -> float:
    """Tr rho^2 of the reduced Gaussian state, 1 / (2^n sqrt(det A_red))."""
    sub = np.asarray(a) if modes is None else reduced_covariance(a, tuple(modes))
    n = sub.shape[0] // 2
    det = np.linalg.det(2.0 * sub)  # det(2A) = 4^n det(A), so P = det^-1/2
    if det <= 0.0:
        raise ValueError("reduced covariance must be positive definite")
    return float(1.0 / np.sqrt(det))


def _sqrt_state_parameters(a: np.ndarray):
    """Effective covariance and normalization of the operator square root."""
    spectrum = williamson(a)
    nus = np.clip(spectrum.nus, VACUUM_NU, None)
    shifted = nus + np.sqrt(nus ** 2 - 0.25)
    d = np.repeat(shifted, 2)
    a_tilde = (spectrum.basis * d) @ spectrum.basis.T
    c = float(np.prod(np.sqrt(nus + 0.5) + np.sqrt(nus - 0.5)))
    return a_tilde, c


def hellinger_distance(r1: np.ndarray, a1: np.ndarray,
                       r2: np.ndarray, a2: np.ndarray) -> float:
    """1 - Tr(sqrt(rho1) sqrt(rho2)) for two Gaussian states."""
    at1, c1 = _sqrt_state_parameters(a1)
    at2, c2 = _sqrt_state_parameters(a2)
    total = at1 + at2
    sign, logdet = np.linalg.slogdet(total)
    if sign <= 0:
        raise ValueError("degenerate covariance sum")
    delta = np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)
    quad = float(delta @ np.linalg.solve(total, delta))
    affinity = c1 * c2 * np.exp(-0.5 * quad - 0.5 * logdet)
    return float(np.clip(1.0 - affinity, 0.0, 1.0))


def hellinger_target_state(r: np.ndarray, a: np.ndarray,
                           targeted: set[tuple[int, int]]):
    """Reference state keeping only the targeted 2x2 blocks of A.

    Every block (j, k) not in the targeted set reverts to vacuum: identity/2
    on the diagonal, zero off the diagonal.  Means are kept as they are.
    Raises if the requested block pattern is not a physical state.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0] // 2
    target = np.eye(2 * n) * VACUUM_NU
    for j, k in targeted:
        if not (0 <= j < n and 0 <= k < n):
            raise ValueError("targeted block out of range")
        rows = slice(2 * j, 2 * j + 2)
        cols = slice(2 * k, 2 * k + 2)
        target[rows, cols] = a[rows, cols]
        target[cols, rows] = a[cols, rows]
    target = 0.5 * (target + target.T)
    if symplectic_eigenvalues(target).min() < VACUUM_NU - 1e-9:
        raise ValueError("targeted block set yields an unphysical state")
    return np.asarray(r, dtype=float).copy(), target


# ------------------------------------------------------- QND references ---

def qnd_variance(nu: np.ndarray | float, tau_total: np.ndarray | float):
    """Comoving position variance under ideal accumulated probing."""
    return 0.5 / (1.0 + 2.0 * np.asarray(nu) * np.asarray(tau_total))


def beta_parameter(f_bar_sq: np.ndarray, j: int, k: int) -> float:
    """Normalized cross overlap |f2_jk| / sqrt(f2_jj f2_kk), in [0, 1)."""
    fs = np.asarray(f_bar_sq)
    beta = abs(fs[j, k]) / np.sqrt(fs[j, j] * fs[k, k])
    if beta >= 1.0:
        raise ValueError("cross overlap violates the Cauchy-Schwarz bound")
    return float(beta)


def qnd_entanglement_asymptote(beta: float) -> float:
    return float(0.5 * np.log2((1.0 + beta) / (1.0 - beta)))


def qnd_entanglement_curve(coupling: CouplingModel, j: int, k: int,
                           tau_total: np.ndarray) -> np.ndarray:
    """Rotation-free reference E_jk(tau_T) for an ideal accumulated probe.

    Restricts the backaction and drive to the (j, k) pair, zeroes the
    rotation, and evolves for accumulated probe time tau_T.  Both blocks
    then have closed forms: positions obey inverse-linear narrowing,
    momenta heat linearly.
    """
    pair = (j, k)
    idx = np.array(pair, dtype=int)
    m_xx = coupling.backaction_matrix[0::2, 0::2][np.ix_(idx, idx)]
    e_pp = coupling.drive_matrix[1::2, 1::2][np.ix_(idx, idx)]

    tau_total = np.atleast_1d(np.asarray(tau_total, dtype=float))
    out = np.empty(tau_total.shape)
    eye = np.eye(2)
    for i, tau in enumerate(tau_total):
        a_x = np.linalg.inv(2.0 * eye + tau * m_xx)
        a_p = 0.5 * eye + tau * e_pp
        a = np.zeros((4, 4))
        a[0::2, 0::2] = a_x
        a[1::2, 1::2] = a_p
        out[i] = log_negativity(a, (0,), (1,))
    return out


def noncondensate_population(r: np.ndarray, basis: ModeBasis) -> float:
    """Coherent-excitation estimate of the population outside the condensate.

    Sum over modes of |amplitude|^2 times the particle weight of the mode
    functions; the quantum-depletion contribution is not included.
    """
    r = np.asarray(r, dtype=float)
    amplitudes_sq = 0.5 * (r[0::2] ** 2 + r[1::2] ** 2)
    weights = basis.uv_weights()
    if amplitudes_sq.shape != weights.shape:
        raise ValueError("means vector does not match the basis size")
    return float(np.sum(amplitudes_sq * weights))
