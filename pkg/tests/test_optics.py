"""Tests for the measurement kernel, pixel overlaps, and coupling blocks.

Frozen reference values were produced by the measurement scripts in this
repository's development history; they pin the mu = 2, ten-mode, default
geometry contract.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from becstrobe.meanfield import Grid
from becstrobe.optics import (
    DEFAULT_RESOLUTION,
    CouplingModel,
    DetectorArray,
    MeasurementKernel,
    build_coupling,
    mode_overlaps,
    pixel_overlaps,
)

# Continuum Gram diagonal int (K*g_j)^2 dx at mu = 2, default kernel.
FBAR_SQ_DIAG = np.array([
    0.064334046929747798, 0.076003942850318446, 0.080293929149192797,
    0.080545641034940330, 0.078515912161246482, 0.075766620569731935,
    0.072840986477660380, 0.069956224893721247, 0.067222271351920132,
    0.064671189399560638,
])

# Per-mode measurement rates at kappa_sq = 100 (cycle units), default detector.
NU_KAPPA_SQ_100 = np.array([
    10.239081577975336, 12.096403199102099, 12.779175724364457,
    12.819236915216159, 12.496195531831438, 12.058632185040913,
    11.593003057609556, 11.133878991884037, 10.698756771522795,
    10.292739468572259,
])

BETA_13 = 0.56085194960061213
E_ASYMPTOTE_13 = 0.91477719841649019


@pytest.fixture(scope="module")
def coupling(basis_mu2):
    return build_coupling(basis_mu2, kappa_sq=100.0)


# ---------------------------------------------------------------- kernel ---

def test_default_resolution_matches_physical_parameters():
    # sqrt(wavelength * transverse length) in trap units
    kernel = MeasurementKernel.from_physical(0.295, 0.3002)
    assert kernel.resolution_length == pytest.approx(
        np.sqrt(0.295 * 0.3002))
    assert DEFAULT_RESOLUTION == pytest.approx(0.2976, abs=1e-4)


def test_fourier_response_reference_points():
    kernel = MeasurementKernel(0.5)
    assert kernel.fourier_response(np.array([0.0]))[0] == 1.0
    # quartic falloff hits 1/e at k = 2 sqrt(2 pi) / l_R
    k_star = 2.0 * np.sqrt(2.0 * np.pi) / 0.5
    assert kernel.fourier_response(np.array([k_star]))[0] == pytest.approx(
        np.exp(-1.0), rel=1e-12)
    # doubling alpha is sixteen-fold in the exponent
    r1 = kernel.fourier_response(np.array([3.0]), alpha=1.0)[0]
    r2 = kernel.fourier_response(np.array([3.0]), alpha=2.0)[0]
    assert np.log(r2) == pytest.approx(16.0 * np.log(r1), rel=1e-9)


def test_kernel_rejects_negative_resolution():
    with pytest.raises(ValueError):
        MeasurementKernel(-0.1)


def test_convolution_preserves_constants_exactly():
    grid = Grid(8.0, 512)
    out = MeasurementKernel().convolve(grid, np.ones(grid.n_points))
    np.testing.assert_allclose(out, 1.0, atol=1e-14)


def test_convolution_delta_limit_is_identity():
    grid = Grid(8.0, 512)
    field = np.exp(-grid.x ** 2)
    out = MeasurementKernel(1e-9).convolve(grid, field)
    np.testing.assert_allclose(out, field, atol=1e-12)


def test_convolution_scales_harmonics_by_fourier_response():
    grid = Grid(8.0, 1024)
    kernel = MeasurementKernel()
    # exact FFT bin of the periodic extension
    k = 2.0 * np.pi * 7 / (grid.n_points * grid.dx)
    field = np.cos(k * grid.x)
    out = kernel.convolve(grid, field)
    expected = kernel.fourier_response(np.array([k]))[0] * field
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_convolution_preserves_integral_and_parity(basis_mu2):
    grid = basis_mu2.grid
    rows = basis_mu2.density_signatures()
    blurred = MeasurementKernel().convolve(grid, rows)
    np.testing.assert_allclose(
        grid.integrate(blurred), grid.integrate(rows), atol=1e-12)
    for j, row in enumerate(blurred):
        np.testing.assert_allclose(
            row, basis_mu2.parities[j] * row[::-1], atol=1e-12)


def test_convolution_rejects_partially_resolved_cutoff():
    grid = Grid(8.0, 1024)
    # response at the Nyquist frequency is neither ~0 nor ~1
    with pytest.raises(ValueError, match="too coarse"):
        MeasurementKernel(0.03).convolve(grid, np.ones(grid.n_points))
    # fully resolved and fully unresolved are both fine
    MeasurementKernel(0.3).convolve(grid, np.ones(grid.n_points))
    MeasurementKernel(1e-6).convolve(grid, np.ones(grid.n_points))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4),
       st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
def test_two_filter_product_equals_single_sharper_filter(amps_a, amps_b):
    """Parseval route identity used by the Gram matrix.

    int (K*f)(K*g) dx must equal int f (K'*g) dx where K' carries
    alpha = 2^(1/4), for any band-limited periodic fields.
    """
    grid = Grid(8.0, 256)
    kernel = MeasurementKernel()
    dk = 2.0 * np.pi / (grid.n_points * grid.dx)
    f = sum(a * np.cos((i + 1) * dk * grid.x) for i, a in enumerate(amps_a))
    g = sum(b * np.cos((i + 1) * dk * grid.x) for i, b in enumerate(amps_b))
    two = grid.integrate(kernel.convolve(grid, f) * kernel.convolve(grid, g))
    one = grid.integrate(f * kernel.convolve(grid, g, alpha=2.0 ** 0.25))
    assert two == pytest.approx(one, abs=1e-12 * (1 + abs(two)))


# -------------------------------------------------------------- detector ---

def test_detector_geometry_defaults():
    det = DetectorArray()
    assert det.n_pixels == 100
    assert det.edges[0] == -5.0 and det.edges[-1] == 5.0
    assert len(det.centers) == 100
    np.testing.assert_allclose(det.centers, -det.centers[::-1], atol=1e-12)


def test_detector_rejects_bad_geometry():
    with pytest.raises(ValueError):
        DetectorArray(length=10.0, pixel_size=0.3)  # not an integer count
    with pytest.raises(ValueError):
        DetectorArray(length=-1.0, pixel_size=0.1)
    with pytest.raises(ValueError):
        DetectorArray(length=10.0, pixel_size=0.0)


def test_pixel_overlaps_reject_detector_beyond_box(basis_mu2):
    with pytest.raises(ValueError, match="beyond"):
        pixel_overlaps(basis_mu2, MeasurementKernel(),
                       DetectorArray(length=20.0, pixel_size=0.1))


# -------------------------------------------------------------- overlaps ---

def test_pixel_overlaps_mirror_rule(basis_mu2):
    # reflecting the pixel index flips the sign for odd modes
    fb = pixel_overlaps(basis_mu2, MeasurementKernel(), DetectorArray())
    mirrored = basis_mu2.parities[:, None] * fb[:, ::-1]
    np.testing.assert_allclose(fb, mirrored, atol=1e-12)


def test_pixel_sum_rule_when_detector_covers_signatures(basis_mu2):
    # wide detector: every blurred signature is fully inside the pixel row
    fb = pixel_overlaps(basis_mu2, MeasurementKernel(),
                        DetectorArray(length=14.0, pixel_size=0.1))
    targets = basis_mu2.grid.integrate(basis_mu2.density_signatures())
    np.testing.assert_allclose(fb.sum(axis=1), targets, atol=1e-8)


def test_pixel_sum_rule_default_detector_documents_tail_loss(basis_mu2):
    # at length 10 the high even modes leak past the last pixel; the defect
    # is tail truncation, not quadrature error
    fb = pixel_overlaps(basis_mu2, MeasurementKernel(), DetectorArray())
    targets = basis_mu2.grid.integrate(basis_mu2.density_signatures())
    dev = np.abs(fb.sum(axis=1) - targets)
    assert np.all(dev[:3] < 1e-8)
    assert np.all(dev < 2e-6)
    odd = np.nonzero(basis_mu2.parities < 0)[0]
    assert np.all(dev[odd] < 1e-12)


def test_mode_overlaps_diagonal_frozen(coupling):
    np.testing.assert_allclose(
        np.diag(coupling.f_bar_sq), FBAR_SQ_DIAG, rtol=1e-7)


def test_mode_overlaps_vanish_between_opposite_parities(coupling, basis_mu2):
    fs = coupling.f_bar_sq
    opposite = np.not_equal.outer(basis_mu2.parities, basis_mu2.parities)
    assert np.max(np.abs(fs[opposite])) < 1e-10


def test_mode_overlaps_positive_semidefinite(coupling):
    assert np.linalg.eigvalsh(coupling.f_bar_sq).min() > 0.0


def test_kernel_suppression_grows_with_mode_index(basis_mu2):
    # finer spatial structure loses more weight under the blur
    g = basis_mu2.density_signatures()
    raw = np.diag(basis_mu2.grid.dx * g @ g.T)
    ratios = FBAR_SQ_DIAG / raw
    assert np.all(np.diff(ratios) < 0.0)
    assert np.all(ratios < 1.0)
    assert np.all(ratios > 0.99)


def test_cross_overlap_asymmetry_parameters_frozen(coupling):
    fs = coupling.f_bar_sq
    beta = abs(fs[0, 2]) / np.sqrt(fs[0, 0] * fs[2, 2])
    assert beta == pytest.approx(BETA_13, rel=1e-7)
    asymptote = 0.5 * np.log2((1.0 + beta) / (1.0 - beta))
    assert asymptote == pytest.approx(E_ASYMPTOTE_13, rel=1e-7)


# -------------------------------------------------------------- coupling ---

def test_coupling_rates_frozen(coupling):
    np.testing.assert_allclose(coupling.nu, NU_KAPPA_SQ_100, rtol=1e-7)


def test_coupling_sign_and_units(coupling):
    assert coupling.kappa < 0
    assert coupling.kappa ** 2 == pytest.approx(100.0 / (2 * np.pi))
    assert coupling.kappa_sq_angular == pytest.approx(100.0 / (2 * np.pi))


def test_coupling_rejects_negative_strength(coupling):
    with pytest.raises(ValueError):
        coupling.with_kappa_sq(-1.0)


def test_measurement_matrix_block_structure(coupling):
    m = coupling.measurement_matrix
    assert m.shape == (20, coupling.detector.n_pixels)
    np.testing.assert_allclose(m[1::2, :], 0.0)  # momentum rows silent
    assert np.max(np.abs(m[0::2, :])) > 0.0


def test_backaction_and_drive_block_structure(coupling):
    big_m = coupling.backaction_matrix
    e = coupling.drive_matrix
    # backaction lives in position-position, drive in momentum-momentum
    np.testing.assert_allclose(big_m[1::2, :], 0.0)
    np.testing.assert_allclose(big_m[:, 1::2], 0.0)
    np.testing.assert_allclose(e[0::2, :], 0.0)
    np.testing.assert_allclose(e[:, 0::2], 0.0)
    np.testing.assert_allclose(big_m, big_m.T, atol=1e-12)
    assert np.linalg.eigvalsh(big_m[0::2, 0::2]).min() > -1e-12


def test_backaction_equals_four_drives_up_to_pixelization(coupling, basis_mu2):
    # midpoint-rule pixelization: the defect shrinks quadratically with
    # pixel size, so it is geometry error and not a structural mismatch
    def rel_defect(pixel_size):
        c = build_coupling(basis_mu2,
                           detector=DetectorArray(10.0, pixel_size),
                           kappa_sq=100.0)
        mxx = c.backaction_matrix[0::2, 0::2]
        epp = c.drive_matrix[1::2, 1::2]
        return np.max(np.abs(mxx - 4.0 * epp)) / np.max(np.abs(4.0 * epp))

    coarse = rel_defect(0.1)
    assert coarse < 0.013
    assert rel_defect(0.05) < 0.4 * coarse


def test_coupling_scales_with_measurement_strength(coupling):
    stronger = coupling.with_kappa_sq(400.0)
    np.testing.assert_allclose(
        stronger.measurement_matrix, 2.0 * coupling.measurement_matrix)
    np.testing.assert_allclose(
        stronger.drive_matrix, 4.0 * coupling.drive_matrix)
    np.testing.assert_allclose(stronger.nu, 4.0 * coupling.nu)


def test_zero_strength_silences_all_blocks(coupling):
    off = coupling.with_kappa_sq(0.0)
    assert np.all(off.measurement_matrix == 0.0)
    assert np.all(off.backaction_matrix == 0.0)
    assert np.all(off.drive_matrix == 0.0)
    assert np.all(off.nu == 0.0)
