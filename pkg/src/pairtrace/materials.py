"""Refractive-index models and spectral-phase evaluation for the media in
the optical system: the poled crystal, the prism glasses and the window
glass. All dispersion formulas reduce to

    n^2(lam) = const + sum_k N_k / (lam^2 - C_k) + sum_j D_j lam^(2j)

so index derivatives in wavelength are available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ValidationError, WavelengthRangeError
from .units import C_UM_FS, wavelength_nm_from_omega

_FORMULAS = ("sellmeier", "sellmeier_power", "mgln_e")


@dataclass(frozen=True)
class MaterialModel:
    """A named medium with its dispersion formula and validity window."""

    name: str
    formula_id: str
    coefficients: tuple
    valid_range_nm: tuple
    temperature_terms: tuple | None = None

    def __post_init__(self):
        if self.formula_id not in _FORMULAS:
            raise ValidationError(
                f"material {self.name!r}: unknown formula_id {self.formula_id!r}"
            )
        lo, hi = self.valid_range_nm
        if not (0 < lo < hi):
            raise ValidationError(f"material {self.name!r}: bad valid_range_nm")
        if self.formula_id == "mgln_e" and self.temperature_terms is None:
            raise ValidationError(
                f"material {self.name!r}: mgln_e requires temperature_terms"
            )


@dataclass
class SpectralPhase:
    """Accumulated spectral phase [rad] on a uniform angular-frequency grid."""

    omega_grid: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        self.omega_grid = np.asarray(self.omega_grid, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.omega_grid.ndim != 1 or self.omega_grid.size < 2:
            raise ValidationError("spectral phase grid must be a 1-d array")
        if self.phase.shape != self.omega_grid.shape:
            raise ValidationError("phase array does not match its grid")
        steps = np.diff(self.omega_grid)
        if not np.all(steps > 0):
            raise ValidationError("omega grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValidationError("omega grid must be uniform")
        if not np.all(np.isfinite(self.phase)):
            raise ValidationError("spectral phase contains non-finite samples")

    def __add__(self, other):
        if not np.array_equal(self.omega_grid, other.omega_grid):
            raise ValidationError("cannot add spectral phases on different grids")
        return SpectralPhase(self.omega_grid, self.phase + other.phase)


def _rational_terms(material, temperature_C):
    """Reduce the material formula to (const, N[], C[], D[]) at temperature."""
    c = material.coefficients
    if material.formula_id == "mgln_e":
        a1, a2, a3, a4, a5, a6 = c
        b1, b2, b3, b4 = material.temperature_terms
        f = (temperature_C - 24.5) * (temperature_C + 570.82)
        const = a1 + b1 * f
        nums = (a2 + b2 * f, a4 + b4 * f)
        poles = ((a3 + b3 * f) ** 2, a5 ** 2)
        powers = (-a6,)
        return const, nums, poles, powers
    if material.formula_id == "sellmeier_power":
        pairs, powers = c[:-2], c[-2:]
    else:
        pairs, powers = c, ()
    B = pairs[0::2]
    C = pairs[1::2]
    # B lam^2 / (lam^2 - C) = B + B C / (lam^2 - C)
    const = 1.0 + sum(B)
    nums = tuple(b * cc for b, cc in zip(B, C))
    return const, nums, C, powers


def _n_and_derivatives(material, lam_um, temperature_C):
    """Index and its first two wavelength derivatives [um based]."""
    const, nums, poles, powers = _rational_terms(material, temperature_C)
    lam2 = lam_um ** 2
    y = np.full_like(np.asarray(lam_um, dtype=float), const)
    y1 = np.zeros_like(y)   # d(n^2)/dlam
    y2 = np.zeros_like(y)   # d2(n^2)/dlam2
    for num, pole in zip(nums, poles):
        u = lam2 - pole
        y += num / u
        y1 += -2.0 * lam_um * num / u ** 2
        y2 += -2.0 * num / u ** 2 + 8.0 * lam2 * num / u ** 3
    for j, d in enumerate(powers, start=1):
        p = 2 * j
        y += d * lam_um ** p
        y1 += d * p * lam_um ** (p - 1)
        y2 += d * p * (p - 1) * lam_um ** (p - 2)
    n = np.sqrt(y)
    dn = y1 / (2.0 * n)
    d2n = y2 / (2.0 * n) - y1 ** 2 / (4.0 * n ** 3)
    return n, dn, d2n


def _check_range(material, wavelength_nm):
    lo, hi = material.valid_range_nm
    wmin = np.min(wavelength_nm)
    wmax = np.max(wavelength_nm)
    if wmin < lo or wmax > hi:
        raise WavelengthRangeError(
            f"wavelength {wmin:.1f}-{wmax:.1f} nm outside validity range "
            f"[{lo:.0f}, {hi:.0f}] nm of material {material.name!r}"
        )


def refractive_index(material, wavelength_nm, temperature_C=20.0):
    """Phase index n(lam, T). Wavelength in nm, temperature in deg C.

    Temperature enters only through the crystal formula; the glass models
    are room-temperature fits and ignore it.
    """
    _check_range(material, wavelength_nm)
    lam_um = np.asarray(wavelength_nm, dtype=float) / 1000.0
    n, _, _ = _n_and_derivatives(material, lam_um, temperature_C)
    if n.ndim == 0:
        return float(n)
    return n


def spectral_phase_of_slab(material, thickness_mm, omega_grid, temperature_C=20.0):
    """Propagation phase n(w) w z / c through a plane slab, in rad.

    Additive under slab concatenation. thickness_mm >= 0.
    """
    if thickness_mm < 0:
        raise ValidationError("slab thickness must be >= 0")
    omega_grid = np.asarray(omega_grid, dtype=float)
    if thickness_mm == 0:
        return SpectralPhase(omega_grid, np.zeros_like(omega_grid))
    lam_nm = wavelength_nm_from_omega(omega_grid)
    _check_range(material, lam_nm)
    n, _, _ = _n_and_derivatives(material, lam_nm / 1000.0, temperature_C)
    z_um = thickness_mm * 1000.0
    return SpectralPhase(omega_grid, n * omega_grid * z_um / C_UM_FS)


def group_delay_dispersion(material, thickness_mm, wavelength_nm, temperature_C=20.0):
    """Slab phase curvature phi'' = d2 phi / dw2 at a wavelength, in fs^2.

    Evaluated from the closed-form index derivatives via
    phi'' = z lam^3 / (2 pi c^2) d2n/dlam2.
    """
    _check_range(material, wavelength_nm)
    lam_um = wavelength_nm / 1000.0
    _, _, d2n = _n_and_derivatives(material, np.asarray(lam_um, dtype=float), temperature_C)
    z_um = thickness_mm * 1000.0
    return float(z_um * lam_um ** 3 / (2.0 * np.pi * C_UM_FS ** 2) * d2n)


def taylor_dispersion(phase, center_omega, max_order):
    """Dispersion orders phi', phi'', ..., phi^(max_order) at center_omega.

    Local polynomial fit to the sampled phase; returns a list of length
    max_order with entries in fs, fs^2, ... Order 4 is the highest
    supported.
    """
    if not 1 <= max_order <= 4:
        raise ValidationError("max_order must be between 1 and 4")
    grid = phase.omega_grid
    n = grid.size
    i0 = int(np.argmin(np.abs(grid - center_omega)))
    half = max(12, n // 16)
    half = min(half, i0, n - 1 - i0)
    if half < max_order + 3:
        raise ValidationError(
            "center_omega too close to the grid edge for a dispersion fit"
        )
    sel = slice(i0 - half, i0 + half + 1)
    x = grid[sel] - center_omega
    scale = x[-1]
    deg = min(max_order + 2, 2 * half)
    coeffs = np.polynomial.polynomial.polyfit(x / scale, phase.phase[sel], deg)
    out = []
    fact = 1.0
    for k in range(1, max_order + 1):
        fact *= k
        out.append(float(coeffs[k] * fact / scale ** k))
    return out


def _parse_materials_text(text, source="materials data"):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ValidationError(f"{source}:{lineno}: empty section name")
            sections[current] = {}
            continue
        if "=" not in line or current is None:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        sections[current][key] = value
    materials = {}
    for name, body in sections.items():
        try:
            formula = body["formula_id"]
            coeffs = tuple(float(v) for v in body["coefficients"].split())
            lo, hi = (float(v) for v in body["valid_range_nm"].split())
        except KeyError as exc:
            raise ValidationError(f"{source}: material {name!r} missing {exc}") from None
        except ValueError as exc:
            raise ValidationError(f"{source}: material {name!r}: {exc}") from None
        temp = None
        if "temperature_terms" in body:
            temp = tuple(float(v) for v in body["temperature_terms"].split())
        materials[name] = MaterialModel(name, formula, coeffs, (lo, hi), temp)
    return materials


def load_materials(path=None):
    """Load the material registry from a data file (bundled file by default)."""
    if path is None:
        text = resources.files("pairtrace.data").joinpath("materials.txt").read_text()
        return _parse_materials_text(text)
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_materials_text(fh.read(), source=str(path))


_REGISTRY = None


def get_material(name):
    """Fetch a material from the bundled registry."""
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = load_materials()
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValidationError(
            f"unknown material {name!r}; available: {sorted(_REGISTRY)}"
        ) from None
