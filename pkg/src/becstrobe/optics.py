"""Dispersive probe optics.

Light crossing the cloud picks up phase shifts from density fluctuations,
blurred by the optical response and binned onto detector pixels.  This module
builds the per-pixel mode overlaps and the coupling blocks that drive the
conditional dynamics:

* ``measurement_matrix`` m maps pixel shot noise into mode phase space,
* ``backaction_matrix`` M = m m^T (position-position block only),
* ``drive_matrix`` E (momentum-momentum block only) feeds measurement
  backaction into the covariances.

Phase-space layout is interleaved, ``[x_1, p_1, x_2, p_2, ...]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .bogoliubov import ModeBasis
from .meanfield import Grid

__all__ = [
    "MeasurementKernel",
    "DetectorArray",
    "CouplingModel",
    "pixel_overlaps",
    "mode_overlaps",
    "build_coupling",
]

#: optical resolution for a 780 nm probe across a cloud with transverse size
#: one tenth of the axial oscillator length (150 Hz trap, Rb-87):
#: sqrt(wavelength * l_perp) in axial oscillator units
DEFAULT_RESOLUTION = 0.2976


@dataclass(frozen=True)
class MeasurementKernel:
    """Quartic-exponential low-pass response of the probe optics.

    The Fourier response is exp(-(alpha * l_R * k)^4 / (64 pi^2)) with
    ``resolution_length`` l_R; alpha widens the kernel for composed filters
    (two identical passes equal one pass at alpha = 2**0.25).
    """

    resolution_length: float = DEFAULT_RESOLUTION

    def __post_init__(self):
        if self.resolution_length <= 0:
            raise ValueError("resolution_length must be positive")

    @staticmethod
    def from_physical(wavelength: float, perp_length: float) -> "MeasurementKernel":
        """Kernel from probe wavelength and transverse cloud size.

        Both lengths in axial oscillator units; the diffraction-limited
        resolution is the geometric mean of the two.
        """
        if wavelength <= 0 or perp_length <= 0:
            raise ValueError("lengths must be positive")
        return MeasurementKernel(np.sqrt(wavelength * perp_length))

    def fourier_response(self, k: np.ndarray, alpha: float = 1.0) -> np.ndarray:
        return np.exp(-((alpha * self.resolution_length * np.asarray(k)) ** 4)
                      / (64.0 * np.pi**2))

    def convolve(self, grid: Grid, rows: np.ndarray, alpha: float = 1.0) -> np.ndarray:
        """Apply the filter along the last axis of ``rows`` sampled on ``grid``.

        Periodic FFT with the analytic Fourier response sampled directly: a
        constant field and the Riemann integral are preserved exactly, and
        wraparound is negligible because physical fields decay well inside
        the box.  Errors if the grid cannot resolve the kernel cutoff.
        """
        rows = np.asarray(rows, dtype=float)
        n = grid.n_points
        if rows.shape[-1] != n:
            raise ValueError("rows must be sampled on the grid")
        # a kernel much narrower than dx degrades cleanly to the identity;
        # the bad regime is a cutoff that lands near the Nyquist frequency
        response_at_nyquist = float(
            self.fourier_response(np.pi / grid.dx, alpha)
        )
        if 1e-6 < response_at_nyquist < 0.9:
            raise ValueError("grid too coarse to resolve the kernel cutoff")
        k = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.dx)
        spectra = np.fft.rfft(rows, axis=-1)
        return np.fft.irfft(spectra * self.fourier_response(k, alpha),
                            n=n, axis=-1)


@dataclass(frozen=True)
class DetectorArray:
    """Uniform pixel row centered on the trap, covering [-length/2, length/2]."""

    length: float = 10.0
    pixel_size: float = 0.1

    def __post_init__(self):
        if self.length <= 0 or self.pixel_size <= 0:
            raise ValueError("detector dimensions must be positive")
        ratio = self.length / self.pixel_size
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("length must be an integer number of pixels")

    @property
    def n_pixels(self) -> int:
        return int(round(self.length / self.pixel_size))

    @cached_property
    def edges(self) -> np.ndarray:
        return np.linspace(-self.length / 2.0, self.length / 2.0,
                           self.n_pixels + 1)

    @cached_property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def pixel_overlaps(
    basis: ModeBasis,
    kernel: MeasurementKernel,
    detector: DetectorArray,
) -> np.ndarray:
    """Per-pixel integrals of the blurred density signatures, (n_modes, n_pixels).

    Row j holds int_pixel (K * f0 f-_j)(x) dx for each pixel.
    """
    grid = basis.grid
    if detector.length / 2.0 > grid.x_max:
        raise ValueError("detector extends beyond the simulation box")
    blurred = kernel.convolve(grid, basis.density_signatures())
    cumulative = cumulative_trapezoid(blurred, grid.x, axis=-1, initial=0.0)
    at_edges = np.array(
        [np.interp(detector.edges, grid.x, row) for row in cumulative]
    )
    return np.diff(at_edges, axis=-1)


def mode_overlaps(basis: ModeBasis, kernel: MeasurementKernel) -> np.ndarray:
    """Continuum overlap Gram matrix of the blurred signatures, (n_modes, n_modes).

    Entry (j, k) is int (K * g_j)(K * g_k) dx; symmetric positive
    semidefinite, and zero between opposite-parity modes.
    """
    grid = basis.grid
    blurred = kernel.convolve(grid, basis.density_signatures())
    gram = grid.dx * blurred @ blurred.T
    return 0.5 * (gram + gram.T)


@dataclass(frozen=True)
class CouplingModel:
    """Coupling blocks for a mode basis read out by a pixelated detector.

    ``kappa_sq`` is the per-length measurement rate in cycle units (value
    times omega_x / 2 pi); internally the angular rate kappa_sq / 2 pi is
    used.  All matrices follow the interleaved phase-space layout.
    """

    omegas: np.ndarray
    parities: np.ndarray
    f_bar: np.ndarray
    f_bar_sq: np.ndarray
    detector: DetectorArray
    kappa_sq: float

    def __post_init__(self):
        if self.kappa_sq < 0:
            raise ValueError("kappa_sq must be non-negative")

    @property
    def n_modes(self) -> int:
        return len(self.omegas)

    @property
    def kappa_sq_angular(self) -> float:
        return self.kappa_sq / (2.0 * np.pi)

    @property
    def kappa(self) -> float:
        # negative root: a positive detuning shifts phases down
        return -np.sqrt(self.kappa_sq_angular)

    @cached_property
    def measurement_matrix(self) -> np.ndarray:
        """m, (2 n_modes, n_pixels): pixel momentum noise -> mode phase space.

        Only position rows (even indices) are nonzero; column d acts with
        the pixel's Wiener increment in the mean-update A m dW.
        """
        scale = -2.0 * self.kappa * np.sqrt(
            self.detector.length / self.detector.pixel_size
        )
        m = np.zeros((2 * self.n_modes, self.detector.n_pixels))
        m[0::2, :] = scale * self.f_bar
        return m

    @cached_property
    def backaction_matrix(self) -> np.ndarray:
        """M = m m^T, (2n, 2n); position-position block only."""
        m = self.measurement_matrix
        return m @ m.T

    @cached_property
    def drive_matrix(self) -> np.ndarray:
        """E, (2n, 2n): momentum-momentum block kappa^2 l_L f_bar_sq."""
        e = np.zeros((2 * self.n_modes, 2 * self.n_modes))
        e[1::2, 1::2] = (
            self.kappa_sq_angular * self.detector.length * self.f_bar_sq
        )
        return e

    @cached_property
    def nu(self) -> np.ndarray:
        """Per-mode measurement rates, the diagonal of the E momentum block."""
        return (self.kappa_sq_angular * self.detector.length
                * np.diag(self.f_bar_sq))

    def with_kappa_sq(self, kappa_sq: float) -> "CouplingModel":
        """Same geometry at a different measurement strength."""
        return CouplingModel(
            omegas=self.omegas, parities=self.parities, f_bar=self.f_bar,
            f_bar_sq=self.f_bar_sq, detector=self.detector,
            kappa_sq=kappa_sq,
        )


def build_coupling(
    basis: ModeBasis,
    kernel: MeasurementKernel | None = None,
    detector: DetectorArray | None = None,
    kappa_sq: float = 100.0,
) -> CouplingModel:
    kernel = kernel if kernel is not None else MeasurementKernel()
    detector = detector if detector is not None else DetectorArray()
    return CouplingModel(
        omegas=basis.omegas.copy(),
        parities=basis.parities.copy(),
        f_bar=pixel_overlaps(basis, kernel, detector),
        f_bar_sq=mode_overlaps(basis, kernel),
        detector=detector,
        kappa_sq=kappa_sq,
    )
