"""System spectral phase from configured elements, and the dispersion
optimizer that maximizes the zero-delay rate.

Elements: plane slabs (crystal halves, windows), a four-prism compressor
at Brewster incidence and minimum deviation (two tip-to-tip pairs), and an
abstract polynomial phase correction. The compressor's angular term gives
negative curvature growing with apex separation; its glass insertion adds
ordinary material phase.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .delayscan import rate_at_zero_delay
from .errors import ValidationError
from .materials import (
    MaterialModel,
    SpectralPhase,
    refractive_index,
    spectral_phase_of_slab,
    taylor_dispersion,
)
from .spdc import apply_spectral_phase
from .units import C_UM_FS, wavelength_nm_from_omega

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

KNOB_CORRECTION = "correction_gdd_fs2"
KNOB_INSERTION = "insertion_mm"
KNOB_TOLERANCES = {KNOB_CORRECTION: 0.5, KNOB_INSERTION: 0.01}


@dataclass(frozen=True)
class Slab:
    """Plane parallel plate crossed once at normal incidence."""

    material: MaterialModel
    thickness_mm: float
    temperature_C: float = 20.0

    def __post_init__(self):
        if self.thickness_mm < 0:
            raise ValidationError("slab thickness must be >= 0")

    def phase(self, omega_grid, center_omega):
        return spectral_phase_of_slab(
            self.material, self.thickness_mm, omega_grid, self.temperature_C
        ).phase


@dataclass(frozen=True)
class PrismCompressor:
    """Four Brewster prisms as two symmetric pairs.

    apex_separation_mm is the tip-to-tip distance within each pair;
    insertion_mm is the glass path per prism. The ray enters each prism at
    the Brewster angle of the design wavelength and at minimum deviation,
    so the angular dispersion of the deviation angle is exactly 2 dn/dlam.
    """

    glass: MaterialModel
    apex_separation_mm: float
    insertion_mm: float | None   # None = solve for curvature compensation later
    prism_count: int = 4
    design_wavelength_nm: float = 1064.0

    def __post_init__(self):
        if self.apex_separation_mm < 0:
            raise ValidationError("compressor apex separation must be >= 0")
        if self.insertion_mm is not None and self.insertion_mm < 0:
            raise ValidationError("compressor insertion must be >= 0")
        if self.prism_count != 4:
            raise ValidationError("only the four-prism arrangement is modeled")

    def phase(self, omega_grid, center_omega):
        if self.insertion_mm is None:
            raise ValidationError("compressor insertion is unresolved ('auto')")
        lam_nm = wavelength_nm_from_omega(omega_grid)
        n0 = refractive_index(self.glass, self.design_wavelength_nm)
        theta_b = np.arctan(n0)
        apex = 2.0 * np.arcsin(np.sin(theta_b) / n0)
        n = refractive_index(self.glass, lam_nm)
        t1 = np.arcsin(np.sin(theta_b) / n)     # internal angle, first face
        t2 = apex - t1                           # internal angle, second face
        exit_angle = np.arcsin(np.clip(n * np.sin(t2), -1.0, 1.0))
        deviation = theta_b + exit_angle - apex
        deviation0 = 2.0 * theta_b - apex
        beam_angle = deviation - deviation0      # zero at the design wavelength
        # two pairs, each contributing apex-to-apex path l cos(beam_angle)
        path_um = 2.0 * self.apex_separation_mm * 1000.0 * np.cos(beam_angle)
        angular = omega_grid * path_um / C_UM_FS
        glass_path_mm = self.prism_count * self.insertion_mm
        material = spectral_phase_of_slab(self.glass, glass_path_mm, omega_grid).phase
        return angular + material


@dataclass(frozen=True)
class PhaseCorrection:
    """Polynomial spectral phase about the degenerate frequency."""

    gdd_fs2: float = 0.0
    tod_fs3: float = 0.0
    quartic_fs4: float = 0.0

    def phase(self, omega_grid, center_omega):
        d = omega_grid - center_omega
        return (
            self.gdd_fs2 / 2.0 * d ** 2
            + self.tod_fs3 / 6.0 * d ** 3
            + self.quartic_fs4 / 24.0 * d ** 4
        )


@dataclass(frozen=True)
class ElementChain:
    """Ordered dispersive elements; the chain phase is their scalar sum."""

    elements: tuple = ()

    def phase(self, omega_grid, center_omega):
        omega_grid = np.asarray(omega_grid, dtype=float)
        total = np.zeros_like(omega_grid)
        for element in self.elements:
            total = total + element.phase(omega_grid, center_omega)
        return total

    def extended(self, *extra):
        return ElementChain(self.elements + tuple(extra))


def chain_phase(chain, omega_grid, center_omega):
    """Chain phase as a SpectralPhase on the given grid."""
    return SpectralPhase(omega_grid, chain.phase(omega_grid, center_omega))


def chain_gdd_fs2(chain, omega_grid, center_omega):
    """Curvature of the chain phase at the center frequency [fs^2]."""
    ph = chain_phase(chain, omega_grid, center_omega)
    return taylor_dispersion(ph, center_omega, 2)[1]


@dataclass
class OptimizationResult:
    knob: str
    optimal_value: float
    residual_gdd_fs2: float
    peak_rate: float
    scan_record: list
    edge_solution: bool
    tolerance: float


def with_knob(chain, knob, value):
    if knob == KNOB_CORRECTION:
        return chain.extended(PhaseCorrection(gdd_fs2=value))
    if knob == KNOB_INSERTION:
        compressors = [
            i for i, e in enumerate(chain.elements) if isinstance(e, PrismCompressor)
        ]
        if len(compressors) != 1:
            raise ValidationError(
                "insertion knob needs exactly one prism compressor in the chain"
            )
        if value < 0:
            raise ValidationError("insertion must be >= 0")
        elements = list(chain.elements)
        elements[compressors[0]] = replace(elements[compressors[0]], insertion_mm=value)
        return ElementChain(tuple(elements))
    raise ValidationError(f"unknown dispersion knob {knob!r}")


def knob_objective(amplitude, base_chain, knob):
    """R(0) as a function of the knob value, phases applied to a fixed kernel."""
    grid = amplitude.omega_grid
    center = amplitude.pump_omega / 2.0

    def objective(value):
        chain = with_knob(base_chain, knob, value)
        phi = chain.phase(grid, center)
        return rate_at_zero_delay(apply_spectral_phase(amplitude, phi, phi))

    return objective


def optimize_dispersion(amplitude, base_chain, knob, bracket, scan_points=41):
    """Scan then golden-section refine the knob that maximizes R(0).

    The scan is a fixed linspace over the bracket; if its maximum sits on
    a bracket edge the result is flagged and returned unrefined. Residual
    GDD is the curvature of the full chain (knob applied) at the
    degenerate frequency.
    """
    if scan_points < 5:
        raise ValidationError("scan_points must be >= 5")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValidationError("empty optimization bracket")
    objective = knob_objective(amplitude, base_chain, knob)
    tol = KNOB_TOLERANCES[knob] if knob in KNOB_TOLERANCES else (hi - lo) * 1e-4

    values = np.linspace(lo, hi, scan_points)
    rates = [objective(v) for v in values]
    record = list(zip(values.tolist(), rates))
    i_best = int(np.argmax(rates))

    grid = amplitude.omega_grid
    center = amplitude.pump_omega / 2.0
    if i_best in (0, scan_points - 1):
        best = float(values[i_best])
        chain = with_knob(base_chain, knob, best)
        return OptimizationResult(
            knob, best, chain_gdd_fs2(chain, grid, center), rates[i_best],
            record, True, tol,
        )

    a, b = float(values[i_best - 1]), float(values[i_best + 1])
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(d)
    best = 0.5 * (a + b)
    chain = with_knob(base_chain, knob, best)
    return OptimizationResult(
        knob, best, chain_gdd_fs2(chain, grid, center), objective(best),
        record, False, tol,
    )


def certify_local_maximum(amplitude, base_chain, result, factor=5.0):
    """True when stepping the knob +-factor tolerances off the optimum
    strictly decreases R(0)."""
    objective = knob_objective(amplitude, base_chain, result.knob)
    step = factor * result.tolerance
    center = objective(result.optimal_value)
    return (
        objective(result.optimal_value - step) < center
        and objective(result.optimal_value + step) < center
    )


def solve_compensating_insertion(amplitude_grid, center_omega, base_chain,
                                 bracket_mm=(0.0, 20.0)):
    """Insertion [mm per prism] that zeroes the chain curvature at center.

    Bisection on the monotone map insertion -> chain GDD; used to seed the
    default scenario with a roughly compensated compressor.
    """
    def gdd(value):
        chain = with_knob(base_chain, KNOB_INSERTION, value)
        return chain_gdd_fs2(chain, amplitude_grid, center_omega)

    lo, hi = bracket_mm
    glo, ghi = gdd(lo), gdd(hi)
    if glo * ghi > 0:
        raise ValidationError(
            f"insertion bracket does not straddle zero curvature: "
            f"gdd({lo}) = {glo:.1f}, gdd({hi}) = {ghi:.1f} fs^2"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        gm = gdd(mid)
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimization_report_lines(result):
    return [
        f"knob={result.knob}",
        f"optimal_value={result.optimal_value:.17g}",
        f"residual_gdd_fs2={result.residual_gdd_fs2:.17g}",
        f"peak_rate={result.peak_rate:.17g}",
        f"edge_solution={str(result.edge_solution).lower()}",
        f"tolerance={result.tolerance:.17g}",
    ]


def write_scan_csv(result, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("knob_value,rate_at_zero_delay\n")
        for v, r in result.scan_record:
            fh.write(f"{v:.17g},{r:.17g}\n")
