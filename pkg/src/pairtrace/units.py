"""Unit conventions shared across the package.

Internal unit system: angular frequency in rad/fs, vacuum wavelength in nm
at API boundaries (um inside dispersion formulas), wavevectors in rad/um,
element thicknesses in mm, delays in fs, spectral phase in rad. Dispersion
orders come out in fs^2, fs^3, ... without further conversion.
"""

import numpy as np

C_UM_FS = 0.299792458    # speed of light [um/fs]
C_NM_FS = 299.792458     # speed of light [nm/fs]

_TWO_PI_C = 2.0 * np.pi * C_NM_FS


def omega_from_wavelength_nm(wavelength_nm):
    """Angular frequency [rad/fs] for a vacuum wavelength [nm]."""
    return _TWO_PI_C / wavelength_nm


def wavelength_nm_from_omega(omega):
    """Vacuum wavelength [nm] for an angular frequency [rad/fs]."""
    return _TWO_PI_C / omega
