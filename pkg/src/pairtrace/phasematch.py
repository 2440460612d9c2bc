"""Wavevector geometry and quasi-phasematching.

Longitudinal wavevectors inside the poled crystal, the axial mismatch
delta_kz = k_pz - k_sz - k_iz - k_g, the complex phasematching factor
sinc(beta) exp(-i beta), and bracketed solvers for the poling period and
the degenerate axial phasematching temperature. Transverse wavevector
components are conserved across the crystal face, so external angles map
to k_perp through the vacuum dispersion alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError
from .materials import MaterialModel, refractive_index
from .units import C_UM_FS, wavelength_nm_from_omega

POLING_BRACKET_UM = (3.0, 40.0)
TEMPERATURE_BRACKET_C = (20.0, 200.0)
SOLVER_TOL_RAD_UM = 1e-10


@dataclass(frozen=True)
class CrystalSpec:
    """A periodically poled crystal at a set temperature."""

    material: MaterialModel
    length_mm: float
    poling_period_um: float
    temperature_C: float

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ValidationError("crystal length_mm must be > 0")
        if self.poling_period_um <= 0:
            raise ValidationError("crystal poling_period_um must be > 0")

    @property
    def grating_k(self):
        """Poling grating wavenumber 2 pi / Lambda [rad/um]."""
        return 2.0 * np.pi / self.poling_period_um


@dataclass(frozen=True)
class TransverseMode:
    """A monochromatic plane-wave mode with transverse wavevector magnitude."""

    omega: float          # rad/fs
    k_perp: float         # rad/um
    azimuth: float = 0.0  # rad; carried but irrelevant under the isotropy assumption

    def __post_init__(self):
        if self.k_perp < 0:
            raise ValidationError("k_perp must be >= 0")


def _k_full(omega, crystal):
    n = refractive_index(
        crystal.material, wavelength_nm_from_omega(omega), crystal.temperature_C
    )
    return n * omega / C_UM_FS


def kz(mode, crystal):
    """Longitudinal wavevector component [rad/um] inside the crystal."""
    k = _k_full(mode.omega, crystal)
    if mode.k_perp >= k:
        raise ValidationError(
            f"evanescent mode: k_perp={mode.k_perp:.6f} >= n w/c={k:.6f} rad/um"
        )
    return float(np.sqrt(k * k - mode.k_perp ** 2))


def delta_kz(omega_s, k_perp, crystal, pump_omega):
    """Axial mismatch k_pz - k_sz - k_iz - k_g [rad/um].

    The idler is pinned by energy and transverse momentum conservation,
    w_i = w_p - w_s and k_i_perp = -k_s_perp; the pump is axial. Accepts
    scalars or broadcastable arrays.
    """
    omega_s = np.asarray(omega_s, dtype=float)
    k_perp = np.asarray(k_perp, dtype=float)
    omega_i = pump_omega - omega_s
    ks = _k_full(omega_s, crystal)
    ki = _k_full(omega_i, crystal)
    kp = _k_full(pump_omega, crystal)
    if np.any(k_perp >= ks) or np.any(k_perp >= ki):
        raise ValidationError("evanescent mode in delta_kz")
    out = (
        kp
        - np.sqrt(ks * ks - k_perp ** 2)
        - np.sqrt(ki * ki - k_perp ** 2)
        - crystal.grating_k
    )
    if out.ndim == 0:
        return float(out)
    return out


def phasematch_factor(delta_kz_value, length_mm):
    """Complex factor sinc(beta) exp(-i beta) with beta = delta_kz L / 2."""
    beta = np.asarray(delta_kz_value, dtype=float) * (length_mm * 1000.0) / 2.0
    out = np.sinc(beta / np.pi) * np.exp(-1j * beta)
    if out.ndim == 0:
        return complex(out)
    return out


def _bisect(f, lo, hi, what):
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise SolverError(
            f"no sign change bracketing {what}: f({lo:g}) = {flo:.6e}, "
            f"f({hi:g}) = {fhi:.6e}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or (hi - lo) < 1e-14 * max(1.0, abs(mid)):
            break
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_poling_period(material, pump_omega, temperature_C, bracket_um=POLING_BRACKET_UM):
    """Poling period [um] for degenerate axial phasematching at temperature."""

    def mismatch(period_um):
        spec = CrystalSpec(material, 1.0, period_um, temperature_C)
        return delta_kz(pump_omega / 2.0, 0.0, spec, pump_omega)

    period = _bisect(mismatch, bracket_um[0], bracket_um[1], "poling period")
    residual = mismatch(period)
    if abs(residual) > SOLVER_TOL_RAD_UM:
        raise SolverError(
            f"poling-period refinement stalled with residual {residual:.3e} rad/um"
        )
    return float(period)


def solve_phasematch_temperature(crystal, pump_omega, bracket_C=TEMPERATURE_BRACKET_C):
    """Temperature [deg C] where the axial degenerate mismatch vanishes."""

    def mismatch(temperature_C):
        spec = CrystalSpec(
            crystal.material, crystal.length_mm, crystal.poling_period_um, temperature_C
        )
        return delta_kz(pump_omega / 2.0, 0.0, spec, pump_omega)

    temperature = _bisect(mismatch, bracket_C[0], bracket_C[1], "phasematch temperature")
    residual = mismatch(temperature)
    if abs(residual) > SOLVER_TOL_RAD_UM:
        raise SolverError(
            f"temperature refinement stalled with residual {residual:.3e} rad/um"
        )
    return float(temperature)
