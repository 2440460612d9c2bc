"""Delay traces R(tau) from a spectral amplitude, and trace metrics.

The signal-delay kernel exp(-i w tau) turns the trace into the squared
magnitude of a zero-padded discrete Fourier transform of S. The v-mask
kernel exp(-i |w - w_p/2| tau) shifts lower- and higher-frequency pair
members oppositely in time; it is evaluated by direct summation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SamplingError, ValidationError

KERNEL_SIGNAL_DELAY = "signal-delay"
KERNEL_V_MASK = "v-mask"
KERNELS = (KERNEL_SIGNAL_DELAY, KERNEL_V_MASK)

MAX_TAU_STEP_FS = 0.5
MIN_ZERO_PAD = 8


@dataclass
class UpconversionTrace:
    """Upconversion rate versus signal/idler delay, arbitrary units.

    `energy` is the delay integral of the rate over the transform's full
    window, kept for energy-conservation checks independent of the crop.
    """

    tau_grid: np.ndarray
    rate: np.ndarray
    energy: float

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.rate = np.asarray(self.rate, dtype=float)
        if self.tau_grid.ndim != 1 or self.rate.shape != self.tau_grid.shape:
            raise ValidationError("tau grid and rate must be matching 1-d arrays")
        steps = np.diff(self.tau_grid)
        if not (np.all(steps > 0) and np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)):
            raise ValidationError("tau grid must be uniform and increasing")
        if steps[0] > MAX_TAU_STEP_FS * (1 + 1e-12):
            raise ValidationError("tau grid spacing must be <= 0.5 fs")
        if abs(self.tau_grid[0] + self.tau_grid[-1]) > 1e-9:
            raise ValidationError("tau grid must be symmetric about zero")
        if np.any(self.rate < 0) or not np.all(np.isfinite(self.rate)):
            raise ValidationError("rate must be finite and nonnegative")

    @property
    def dtau(self):
        return float(self.tau_grid[1] - self.tau_grid[0])


@dataclass
class TraceMetrics:
    """Peak, width and extrema read from a trace.

    fwhm_fs is None when the trace never crosses half of its maximum on
    both sides (flat or monotone traces); no width is fabricated.
    """

    peak_rate: float
    peak_tau_fs: float
    fwhm_fs: float | None
    secondary_maxima_fs: list
    minima_fs: list
    integral: float


def rate_at_zero_delay(amplitude):
    """R(0) = |sum S dw|^2 without building the full trace."""
    return float(np.abs(np.sum(amplitude.values) * amplitude.domega) ** 2)


def _check_step(amplitude, tau_step_fs):
    span = amplitude.omega_grid[-1] - amplitude.omega_grid[0]
    limit = min(MAX_TAU_STEP_FS, 2.0 * np.pi / (10.0 * span))
    if tau_step_fs > limit * (1 + 1e-12):
        raise SamplingError(
            f"tau step {tau_step_fs:g} fs undersamples the trace; "
            f"need <= {limit:.4f} fs for this spectrum"
        )


def trace(amplitude, kernel=KERNEL_SIGNAL_DELAY, tau_span_fs=150.0, tau_step_fs=0.35):
    """Delay trace R(tau) on a symmetric grid covering +-tau_span_fs.

    The signal-delay kernel uses a zero-padded FFT (padding at least 8x,
    grown until the natural step is <= tau_step_fs); the v-mask kernel is
    summed directly on the stated grid.
    """
    if kernel not in KERNELS:
        raise ValidationError(f"unknown delay kernel {kernel!r}; use one of {KERNELS}")
    if tau_span_fs <= 0 or tau_step_fs <= 0:
        raise ValidationError("tau span and step must be positive")
    _check_step(amplitude, tau_step_fs)

    dom = amplitude.domega
    if kernel == KERNEL_SIGNAL_DELAY:
        if tau_span_fs >= np.pi / dom:
            raise SamplingError(
                "tau span exceeds the transform window of this frequency grid; "
                "refine the grid spacing"
            )
        n = amplitude.omega_grid.size
        pad = MIN_ZERO_PAD
        while 2.0 * np.pi / (n * pad * dom) > tau_step_fs:
            pad *= 2
        m = n * pad
        spectrum = np.fft.fft(amplitude.values, n=m) * dom
        rate = np.abs(spectrum) ** 2
        tau = 2.0 * np.pi * np.fft.fftfreq(m, d=dom)
        dtau = 2.0 * np.pi / (m * dom)
        energy = float(rate.sum() * dtau)
        keep = np.abs(tau) <= tau_span_fs + dtau * 1e-9
        order = np.argsort(tau[keep])
        return UpconversionTrace(tau[keep][order], rate[keep][order], energy)

    # v-mask: fold about the degenerate frequency, direct summation
    steps = int(np.floor(tau_span_fs / tau_step_fs + 1e-9))
    tau = np.arange(-steps, steps + 1) * tau_step_fs
    mu = np.abs(amplitude.omega_grid - amplitude.pump_omega / 2.0)
    phases = np.exp(-1j * tau[:, None] * mu[None, :])
    amps = (phases * amplitude.values[None, :]).sum(axis=1) * dom
    rate = np.abs(amps) ** 2
    energy = float(np.trapezoid(rate, tau))
    return UpconversionTrace(tau, rate, energy)


def _half_crossing(tau, rate, start, step, half):
    i = start
    while 0 <= i + step < rate.size:
        j = i + step
        if (rate[i] - half) * (rate[j] - half) <= 0 and rate[i] != rate[j]:
            frac = (half - rate[i]) / (rate[j] - rate[i])
            return tau[i] + frac * (tau[j] - tau[i])
        i = j
    return None


def metrics(tr):
    """Read peak, FWHM, extrema and the delay integral off a trace.

    FWHM comes from linear interpolation between the samples bracketing
    half maximum; extrema from sign changes of the first difference of the
    raw samples (the theoretical traces are noise-free); the integral from
    the trapezoid rule over the trace's own window.
    """
    tau = tr.tau_grid
    rate = tr.rate
    i_pk = int(np.argmax(rate))
    peak = float(rate[i_pk])
    half = peak / 2.0

    left = _half_crossing(tau, rate, i_pk, -1, half)
    right = _half_crossing(tau, rate, i_pk, +1, half)
    fwhm = None if (left is None or right is None) else float(right - left)

    d = np.diff(rate)
    interior_max = np.where((d[:-1] > 0) & (d[1:] <= 0))[0] + 1
    interior_min = np.where((d[:-1] < 0) & (d[1:] >= 0))[0] + 1

    minima = []
    lower = [i for i in interior_min if i < i_pk]
    upper = [i for i in interior_min if i > i_pk]
    lobe_lo = max(lower) if lower else None
    lobe_hi = min(upper) if upper else None
    for idx in (lobe_lo, lobe_hi):
        if idx is not None:
            minima.append(float(tau[idx]))

    secondary = []
    if lobe_lo is not None:
        cands = [i for i in interior_max if i < lobe_lo]
        if cands:
            secondary.append(float(tau[max(cands, key=lambda i: rate[i])]))
    if lobe_hi is not None:
        cands = [i for i in interior_max if i > lobe_hi]
        if cands:
            secondary.append(float(tau[max(cands, key=lambda i: rate[i])]))
    secondary.sort()

    return TraceMetrics(
        peak_rate=peak,
        peak_tau_fs=float(tau[i_pk]),
        fwhm_fs=fwhm,
        secondary_maxima_fs=secondary,
        minima_fs=sorted(minima),
        integral=float(np.trapezoid(rate, tau)),
    )


def peak_to_mean_ratio(tr, window_fs=80.0):
    """Peak over mean rate within |tau| <= window; flatness figure."""
    sel = np.abs(tr.tau_grid) <= window_fs
    if not np.any(sel):
        raise ValidationError("window contains no trace samples")
    mean = float(np.mean(tr.rate[sel]))
    if mean == 0.0:
        return 0.0 if np.max(tr.rate[sel]) == 0.0 else np.inf
    return float(np.max(tr.rate[sel]) / mean)


def parseval_check(amplitude, tr):
    """Relative mismatch between the trace energy and 2 pi sum |S|^2 dw."""
    reference = 2.0 * np.pi * float(np.sum(np.abs(amplitude.values) ** 2)) * amplitude.domega
    if reference == 0.0:
        raise ValidationError("empty spectrum in parseval check")
    return abs(tr.energy - reference) / reference


def write_trace_csv(tr, path):
    """Dump the trace: delay [fs], rate [arbitrary units]."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tau_fs,rate_arb\n")
        for t, r in zip(tr.tau_grid, tr.rate):
            fh.write(f"{t:.17g},{r:.17g}\n")


def metrics_lines(m, extra=None):
    """Flat key=value lines for a metrics block."""
    out = [
        f"peak_rate={m.peak_rate:.17g}",
        f"peak_tau_fs={m.peak_tau_fs:.17g}",
        f"fwhm_fs={'undefined' if m.fwhm_fs is None else format(m.fwhm_fs, '.17g')}",
        "secondary_maxima_fs=" + " ".join(f"{v:.17g}" for v in m.secondary_maxima_fs),
        "minima_fs=" + " ".join(f"{v:.17g}" for v in m.minima_fs),
        f"integral={m.integral:.17g}",
    ]
    if extra:
        out.extend(f"{k}={v}" for k, v in extra.items())
    return out


def write_metrics_txt(m, path, extra=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(metrics_lines(m, extra)) + "\n")
