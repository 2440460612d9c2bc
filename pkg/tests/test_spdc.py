import math

import numpy as np
import pytest

from pairtrace import ConvergenceError, ValidationError, get_material
from pairtrace.phasematch import CrystalSpec, delta_kz
from pairtrace.spdc import (
    GridSpec,
    PupilSpec,
    SpdcConfig,
    SpectralAmplitude,
    apply_spectral_phase,
    bandwidth_fwhm_nm,
    compute_spectral_amplitude,
    kernel_amplitude,
    quadrature_refine,
    write_spectrum_csv,
    _bare_amplitude,
)
from pairtrace.units import C_UM_FS

from conftest import PUMP_OMEGA, T_OP_C


def small_config(poling_period, radial=64, omega=256, half_span=0.25):
    ln = get_material("mgln_e")
    dc = CrystalSpec(ln, 5.0, poling_period, T_OP_C)
    uc = CrystalSpec(ln, 5.0, poling_period, T_OP_C)
    pupil = PupilSpec(0.75 / 75.0, np.deg2rad(2.0))
    return SpdcConfig(dc, uc, pupil, PUMP_OMEGA, GridSpec(omega, half_span, radial))


# ---------------------------------------------------------------- structure

def test_grid_is_centered_and_reflection_exact():
    grid = GridSpec(128, 0.4, 16).omega_grid(PUMP_OMEGA)
    assert grid.size == 128
    # index reversal realizes w -> w_p - w: pairs sum to the pump frequency
    np.testing.assert_allclose(grid + grid[::-1], PUMP_OMEGA, rtol=0, atol=1e-12)
    steps = np.diff(grid)
    np.testing.assert_allclose(steps, steps[0], rtol=1e-12)


def test_pupil_validation():
    with pytest.raises(ValidationError):
        PupilSpec(0.05, 0.02)
    with pytest.raises(ValidationError):
        PupilSpec(0.0, 0.2)  # beyond the small-angle regime cap


def test_amplitude_requires_centered_grid():
    grid = np.linspace(1.0, 2.0, 64)
    with pytest.raises(ValidationError):
        SpectralAmplitude(grid, np.zeros(64, complex), PUMP_OMEGA)


# ---------------------------------------------------------------- physics

def test_ring_oracle_thin_annulus(poling_period):
    # a thin annulus reduces the integral to one ring; compare the package
    # against a direct midpoint evaluation of the same integrand
    ln = get_material("mgln_e")
    dc = CrystalSpec(ln, 5.0, poling_period, T_OP_C)
    uc = CrystalSpec(ln, 5.0, poling_period, T_OP_C)
    theta0, dtheta = 0.025, 0.00025
    pupil = PupilSpec(theta0, theta0 + dtheta)
    cfg = SpdcConfig(dc, uc, pupil, PUMP_OMEGA, GridSpec(33, 0.004, 16))
    # the ring spectrum fills this narrow window, so use the raw integral
    # rather than kernel_amplitude's decayed-edges validation
    S = _bare_amplitude(cfg, 32)

    grid = S.omega_grid
    omega_i = PUMP_OMEGA - grid
    k_lo = np.sin(theta0) * np.maximum(grid, omega_i) / C_UM_FS
    k_hi = np.sin(theta0 + dtheta) * np.minimum(grid, omega_i) / C_UM_FS
    k_mid = 0.5 * (k_lo + k_hi)
    ref = np.empty(grid.size)
    for i, (w, k) in enumerate(zip(grid, k_mid)):
        b1 = delta_kz(float(w), float(k), dc, PUMP_OMEGA) * 2500.0
        b2 = delta_kz(float(w), float(k), uc, PUMP_OMEGA) * 2500.0
        ref[i] = (
            2.0 * np.pi * np.sinc(b1 / np.pi) * np.sinc(b2 / np.pi) * k * (k_hi[i] - k_lo[i])
        )
    scale = np.abs(ref).max()
    np.testing.assert_allclose(S.values.real / scale, ref / scale, rtol=0, atol=5e-3)
    assert np.max(np.abs(S.values.imag)) == 0.0


def test_phase_factors_out_of_k_integral(default_kernel):
    rng = np.random.default_rng(3)
    grid = default_kernel.omega_grid
    phi_s = np.cumsum(rng.normal(size=grid.size)) * 0.01
    phi_i = np.sin(3.0 * grid) * 2.0
    dressed = apply_spectral_phase(default_kernel, phi_s, phi_i)
    np.testing.assert_allclose(
        np.abs(dressed.values), np.abs(default_kernel.values), rtol=1e-12
    )


def test_idler_phase_uses_reflected_samples(default_kernel):
    grid = default_kernel.omega_grid
    phi = np.linspace(0.0, 1.0, grid.size) ** 2
    dressed = apply_spectral_phase(default_kernel, np.zeros_like(phi), phi)
    expected = default_kernel.values * np.exp(1j * phi[::-1])
    np.testing.assert_array_equal(dressed.values, expected)


def test_mirror_symmetry_of_magnitude(default_kernel):
    mag = np.abs(default_kernel.values)
    np.testing.assert_allclose(mag, mag[::-1], rtol=0, atol=1e-10 * mag.max())


def test_kernel_real_positive_envelope_peaks_off_center(default_kernel):
    # operating 1.5 C below the degenerate point opens the emission cone:
    # the spectrum is double-horned with a shallow dip at degeneracy
    vals = default_kernel.values.real
    center = PUMP_OMEGA / 2.0
    peak_offset = abs(default_kernel.omega_grid[int(np.argmax(vals))] - center)
    assert 0.03 < peak_offset < 0.10
    i_center = int(np.argmin(np.abs(default_kernel.omega_grid - center)))
    dip = vals[i_center] / vals.max()
    assert 0.3 < dip < 0.95


def test_bandwidth_reproduces_spdc_marginal(default_kernel):
    assert bandwidth_fwhm_nm(default_kernel) == pytest.approx(130.0, rel=0.10)


def test_edge_validation_fires_for_narrow_grid(poling_period):
    cfg = small_config(poling_period, radial=64, omega=256, half_span=0.12)
    with pytest.raises(ValidationError):
        kernel_amplitude(cfg)


# ---------------------------------------------------------------- quadrature

def test_determinism_bit_identical(poling_period):
    cfg = small_config(poling_period)
    a = kernel_amplitude(cfg)
    b = kernel_amplitude(cfg)
    np.testing.assert_array_equal(a.values, b.values)


def test_coarse_radial_grid_raises_convergence_error(poling_period):
    # the Gauss rule converges fast on this integrand, so it takes a
    # drastically coarse order before the refinement gate trips
    cfg = small_config(poling_period, radial=4, omega=512, half_span=0.55)
    with pytest.raises(ConvergenceError) as err:
        kernel_amplitude(cfg)
    assert err.value.estimate is not None
    assert isinstance(err.value.estimate, SpectralAmplitude)


def test_refinement_ladder_on_default_resolution(default_config):
    report = quadrature_refine(default_config, levels=2)
    assert report.passed
    assert report.radial_steps[-1][1] < 1e-3
    assert report.omega_steps[-1][1] < 1e-3


def test_refinement_rejects_single_level(default_config):
    with pytest.raises(ValidationError):
        quadrature_refine(default_config, levels=1)


def test_radial_rule_converges_on_gaussian_integrand():
    # the raw Gauss-Legendre machinery against a closed-form radial integral:
    # doubling the order must gain at least second-order accuracy
    a, b, s = 0.06, 0.21, 0.03

    def quad(n):
        nodes, weights = np.polynomial.legendre.leggauss(n)
        k = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        return 0.5 * (b - a) * np.sum(weights * k * np.exp(-(k / s) ** 2))

    exact = (s ** 2 / 2.0) * (math.exp(-(a / s) ** 2) - math.exp(-(b / s) ** 2))
    err8 = abs(quad(8) - exact)
    err16 = abs(quad(16) - exact)
    assert err8 > 0 and err16 > 0
    order = math.log2(err8 / err16)
    assert order >= 2.0


def test_compute_spectral_amplitude_with_and_without_phase(default_config, default_kernel):
    grid = default_kernel.omega_grid
    phi = 40.0 * (grid - PUMP_OMEGA / 2.0) ** 2
    full = compute_spectral_amplitude(default_config, phi, phi)
    np.testing.assert_allclose(np.abs(full.values), np.abs(default_kernel.values), rtol=1e-12)
    bare = compute_spectral_amplitude(default_config)
    np.testing.assert_array_equal(bare.values, default_kernel.values)


def test_spectrum_csv_roundtrip(tmp_path, poling_period):
    cfg = small_config(poling_period)
    S = kernel_amplitude(cfg)
    path = tmp_path / "spectrum.csv"
    write_spectrum_csv(S, path)
    body = np.loadtxt(path, delimiter=",", skiprows=1)
    assert body.shape == (S.omega_grid.size, 5)
    np.testing.assert_allclose(body[:, 0], S.omega_grid)
    np.testing.assert_allclose(body[:, 2] + 1j * body[:, 3], S.values)
    np.testing.assert_allclose(body[:, 4], np.abs(S.values) ** 2)
