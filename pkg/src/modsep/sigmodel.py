"""Baseband signal synthesis and channel impairments.

Builds noiseless linearly modulated (QAM/PSK) and continuous-phase FSK
sample streams with root-raised-cosine or rectangular pulses, then applies
the impairment chain: carrier offset, random initial phase, flat Rayleigh
fast fading and complex circular AWGN.  All randomness flows through an
explicitly passed numpy Generator, so every operation here is a pure
function of its arguments.

Conventions:
  - sample period T_s (seconds, default 1), symbol period T = (N_s + eps)*T_s
  - time delay t0 = (k0 + eps0)*T_s, transmitted signal evaluated at k*T_s - t0
  - the RRC amplitude pulse is centered at T/2 and truncated to +/- L symbol
    periods around the center; the rectangular pulse has support [0, T)
  - the FSK instantaneous-frequency pulse reuses the same shape, rescaled so
    its total integral is pi*h (one symbol advances the phase by level*pi*h)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import lfilter


class Modulation(Enum):
    QAM16 = "qam16"
    BPSK = "bpsk"
    PSK4 = "psk4"
    PSK8 = "psk8"
    FSK2 = "fsk2"
    FSK4 = "fsk4"
    FSK8 = "fsk8"


LINEAR_KINDS = (Modulation.QAM16, Modulation.BPSK, Modulation.PSK4, Modulation.PSK8)
FSK_KINDS = (Modulation.FSK2, Modulation.FSK4, Modulation.FSK8)


def _qam16_points() -> np.ndarray:
    re, im = np.meshgrid([-3.0, -1.0, 1.0, 3.0], [-3.0, -1.0, 1.0, 3.0])
    return ((re + 1j * im) / np.sqrt(10.0)).ravel()


_CONSTELLATIONS = {
    Modulation.QAM16: _qam16_points(),
    Modulation.BPSK: np.array([1.0 + 0j, -1.0 + 0j]),
    Modulation.PSK4: np.exp(1j * (2 * np.arange(4) + 1) * np.pi / 4),
    Modulation.PSK8: np.exp(1j * (2 * np.arange(8) + 1) * np.pi / 8),
}

_FSK_LEVELS = {
    Modulation.FSK2: np.array([-1, 1]),
    Modulation.FSK4: np.array([-3, -1, 1, 3]),
    Modulation.FSK8: np.array([-7, -5, -3, -1, 1, 3, 5, 7]),
}


class InsufficientSymbolsError(ValueError):
    """Supplied symbol block does not cover the requested sample range."""


@dataclass(frozen=True)
class SamplingSpec:
    """Sampling grid: N_s whole sample periods per symbol plus a fraction."""

    samples_per_symbol: int
    symbol_fraction: float = 0.0
    sample_period: float = 1.0

    def __post_init__(self):
        if self.samples_per_symbol < 1:
            raise ValueError("samples_per_symbol must be a positive integer")
        if not 0.0 <= self.symbol_fraction < 1.0:
            raise ValueError("symbol_fraction must lie in [0, 1)")
        if self.sample_period <= 0.0:
            raise ValueError("sample_period must be positive")

    @property
    def symbol_period(self) -> float:
        return (self.samples_per_symbol + self.symbol_fraction) * self.sample_period


@dataclass(frozen=True)
class DelaySpec:
    """Time delay split into whole sample periods and a fraction of one."""

    integer_delay: int = 0
    fractional_delay: float = 0.0

    def __post_init__(self):
        if self.integer_delay < 0:
            raise ValueError("integer_delay must be non-negative")
        if not 0.0 <= self.fractional_delay < 1.0:
            raise ValueError("fractional_delay must lie in [0, 1)")

    def seconds(self, sample_period: float) -> float:
        return (self.integer_delay + self.fractional_delay) * sample_period


@dataclass(frozen=True)
class ModulationScheme:
    """One of the seven supported modulations, with index h for FSK kinds."""

    kind: Modulation
    modulation_index: float | None = None

    def __post_init__(self):
        if self.kind in FSK_KINDS:
            if self.modulation_index is None or self.modulation_index <= 0:
                raise ValueError(f"{self.kind.value} requires a positive modulation index")
        elif self.modulation_index is not None:
            raise ValueError(f"{self.kind.value} does not take a modulation index")

    @property
    def is_fsk(self) -> bool:
        return self.kind in FSK_KINDS

    @property
    def class_label(self) -> int:
        """+1 for the FSK class, -1 for the linear (QAM/PSK) class."""
        return 1 if self.is_fsk else -1

    def constellation(self) -> np.ndarray:
        if self.is_fsk:
            raise ValueError("FSK kinds have frequency levels, not a constellation")
        return _CONSTELLATIONS[self.kind]

    def levels(self) -> np.ndarray:
        if not self.is_fsk:
            raise ValueError("linear kinds have a constellation, not frequency levels")
        return _FSK_LEVELS[self.kind]

    @classmethod
    def from_string(cls, name: str, modulation_index: float | None = None) -> "ModulationScheme":
        kind = Modulation(name.lower())
        if kind in FSK_KINDS:
            return cls(kind, modulation_index)
        return cls(kind)


@dataclass(frozen=True)
class PulseSpec:
    """Pulse shape: 'rrc' (needs rolloff) or 'rect' (amplitude 1 on [0, T))."""

    shape: str
    rolloff: float | None = None
    truncation_half_width: int = 6

    def __post_init__(self):
        if self.shape not in ("rrc", "rect"):
            raise ValueError("shape must be 'rrc' or 'rect'")
        if self.shape == "rrc":
            if self.rolloff is None or not 0.0 < self.rolloff <= 1.0:
                raise ValueError("rrc rolloff must lie in (0, 1]")
        elif self.rolloff is not None:
            raise ValueError("rect pulse takes no rolloff")
        if self.truncation_half_width < 1:
            raise ValueError("truncation_half_width must be >= 1")


@dataclass(frozen=True)
class ChannelSpec:
    """Impairment parameters for one received realization."""

    snr_db: float
    carrier_offset_center: float = 0.0
    carrier_offset_halfwidth: float = 0.0
    fading_enabled: bool = False
    fading_half_power_lag: int = 9

    def __post_init__(self):
        if self.carrier_offset_halfwidth < 0:
            raise ValueError("carrier_offset_halfwidth must be non-negative")
        if self.fading_half_power_lag < 1:
            raise ValueError("fading_half_power_lag must be a positive integer")

    @property
    def noise_power(self) -> float:
        """Total complex noise variance for unit signal power."""
        return float(10.0 ** (-self.snr_db / 10.0))


@dataclass
class ComplexSeries:
    """Finite complex baseband sample sequence with its sample period."""

    samples: np.ndarray
    sample_period: float = 1.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


# ---------------------------------------------------------------------------
# pulse evaluation


def pulse_support(spec: PulseSpec, symbol_period: float) -> tuple[float, float]:
    """(lo, hi) of the pulse's nonzero support in seconds."""
    if spec.shape == "rect":
        return 0.0, symbol_period
    half = spec.truncation_half_width * symbol_period
    center = symbol_period / 2.0
    return center - half, center + half


def eval_pulse(spec: PulseSpec, t, symbol_period: float):
    """Evaluate the pulse at time(s) t.

    The rectangular pulse is 1 on [0, T) and 0 elsewhere.  The RRC pulse is
    the standard unit-energy root-raised-cosine impulse response centered at
    T/2, truncated beyond the configured half-width, with the removable
    singularities (center and t = center +/- T/(4*rolloff)) evaluated by
    their analytic limits.  Accepts scalars or arrays; returns the same shape.
    """
    if symbol_period <= 0:
        raise ValueError("symbol_period must be positive")
    t_arr = np.asarray(t, dtype=float)
    if spec.shape == "rect":
        out = np.where((t_arr >= 0.0) & (t_arr < symbol_period), 1.0, 0.0)
    else:
        out = _rrc(t_arr, symbol_period, spec.rolloff, spec.truncation_half_width)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def _rrc(t: np.ndarray, T: float, rho: float, half_width: int) -> np.ndarray:
    u = t / T - 0.5  # symbol periods from the pulse center
    out = np.zeros_like(u)
    inside = np.abs(u) <= half_width

    x = np.abs(4.0 * rho * u)
    at_center = inside & (np.abs(u) < 1e-10)
    at_pole = inside & (np.abs(x - 1.0) < 1e-10)
    regular = inside & ~at_center & ~at_pole

    out[at_center] = (1.0 - rho + 4.0 * rho / np.pi) / np.sqrt(T)
    if np.any(at_pole):
        a = np.pi / (4.0 * rho)
        out[at_pole] = (rho / np.sqrt(2.0 * T)) * (
            (1.0 + 2.0 / np.pi) * np.sin(a) + (1.0 - 2.0 / np.pi) * np.cos(a)
        )
    ur = u[regular]
    num = np.sin(np.pi * ur * (1.0 - rho)) + 4.0 * rho * ur * np.cos(np.pi * ur * (1.0 + rho))
    den = np.pi * ur * (1.0 - (4.0 * rho * ur) ** 2)
    out[regular] = num / den / np.sqrt(T)
    return out


def pulse_unit_power_scale(pulse: PulseSpec, sampling: SamplingSpec) -> float:
    """Amplitude factor making long unit-power-constellation streams unit power.

    The rectangular pulse already yields unit average power at amplitude 1.
    For RRC the synthesized power equals (sum_k p^2(k*T_s)) * T_s / T, so the
    pulse is divided by the square root of that sum.
    """
    if pulse.shape == "rect":
        return 1.0
    T = sampling.symbol_period
    Ts = sampling.sample_period
    lo, hi = pulse_support(pulse, T)
    k = np.arange(int(np.ceil(lo / Ts)), int(np.floor(hi / Ts)) + 1)
    energy = float(np.sum(eval_pulse(pulse, k * Ts, T) ** 2)) * Ts / T
    return 1.0 / np.sqrt(energy)


def freq_pulse_scale(pulse: PulseSpec, h: float, symbol_period: float) -> float:
    """Scale on the base shape making the frequency pulse integrate to pi*h."""
    if h <= 0:
        raise ValueError("modulation index must be positive")
    if pulse.shape == "rect":
        return np.pi * h / symbol_period
    lo, hi = pulse_support(pulse, symbol_period)
    grid = np.linspace(lo, hi, 4097)
    integral = float(np.trapz(eval_pulse(pulse, grid, symbol_period), grid))
    return np.pi * h / integral


# ---------------------------------------------------------------------------
# symbol sources and synthesis


def draw_symbols(scheme: ModulationScheme, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. equiprobable symbols: constellation points or FSK levels."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if scheme.is_fsk:
        return rng.choice(scheme.levels(), size=count)
    return rng.choice(scheme.constellation(), size=count)


def required_symbol_span(
    pulse: PulseSpec,
    sampling: SamplingSpec,
    delay: DelaySpec,
    num_samples: int,
    include_origin: bool = False,
) -> tuple[int, int]:
    """Inclusive symbol-index range whose pulses can touch the sample window.

    With include_origin=True the range also covers t=0, needed by the CPFSK
    phase integral which always starts there.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    Ts = sampling.sample_period
    T = sampling.symbol_period
    t0 = delay.seconds(Ts)
    t_min = -t0
    t_max = (num_samples - 1) * Ts - t0
    if include_origin:
        t_min = min(t_min, 0.0)
        t_max = max(t_max, 0.0)
    lo, hi = pulse_support(pulse, T)
    n_lo = int(np.floor((t_min - hi) / T))
    n_hi = int(np.ceil((t_max - lo) / T))
    return n_lo, n_hi


def _check_coverage(n_symbols, first_index, span, what):
    n_lo, n_hi = span
    have_lo = first_index
    have_hi = first_index + n_symbols - 1
    if have_lo > n_lo or have_hi < n_hi:
        raise InsufficientSymbolsError(
            f"need {what} for symbol indices [{n_lo}, {n_hi}], "
            f"got [{have_lo}, {have_hi}]"
        )


def _pulse_train(values, first_index, eval_fn, support, T, t_start, dt, n_points):
    """sum_n values[n] * pulse(t - n*T) evaluated on a uniform time grid."""
    lo, hi = support
    window = int(np.floor((hi - lo) / dt)) + 2
    n_index = np.arange(values.size) + first_index
    i0 = np.ceil((n_index * T + lo - t_start) / dt - 1e-9).astype(np.int64)
    offs = i0[:, None] + np.arange(window)[None, :]
    rel = t_start + offs * dt - n_index[:, None] * T
    pv = eval_fn(rel)
    valid = (offs >= 0) & (offs < n_points)
    idx = offs[valid]
    contrib = (values[:, None] * pv)[valid]
    if np.iscomplexobj(contrib):
        out = np.bincount(idx, weights=contrib.real, minlength=n_points).astype(complex)
        out += 1j * np.bincount(idx, weights=contrib.imag, minlength=n_points)
    else:
        out = np.bincount(idx, weights=contrib, minlength=n_points)
    return out


def synth_linear(
    symbols,
    pulse: PulseSpec,
    sampling: SamplingSpec,
    delay: DelaySpec,
    num_samples: int,
    first_symbol_index: int = 0,
    allow_partial: bool = False,
) -> ComplexSeries:
    """Pulse-shaped linear modulation sampled at k*T_s - t0, k = 0..num_samples-1.

    symbols[i] is the constellation point for symbol index first_symbol_index+i.
    Raises InsufficientSymbolsError unless the block covers every symbol whose
    pulse overlaps the sample window (allow_partial=True skips the check and
    treats missing symbols as zero).
    """
    symbols = np.asarray(symbols, dtype=complex)
    span = required_symbol_span(pulse, sampling, delay, num_samples)
    if not allow_partial:
        _check_coverage(symbols.size, first_symbol_index, span, "constellation symbols")
    Ts = sampling.sample_period
    T = sampling.symbol_period
    t0 = delay.seconds(Ts)
    scale = pulse_unit_power_scale(pulse, sampling)
    out = _pulse_train(
        symbols,
        first_symbol_index,
        lambda t: eval_pulse(pulse, t, T),
        pulse_support(pulse, T),
        T,
        -t0,
        Ts,
        num_samples,
    )
    return ComplexSeries(out * scale, Ts)


def synth_cpfsk(
    levels,
    pulse: PulseSpec,
    h: float,
    sampling: SamplingSpec,
    delay: DelaySpec,
    num_samples: int,
    first_symbol_index: int = 0,
    allow_partial: bool = False,
    oversample: int = 16,
) -> ComplexSeries:
    """Continuous-phase FSK: exp(j * integral of the instantaneous frequency).

    The frequency pulse is the configured shape scaled so one symbol advances
    the phase by level*pi*h.  The phase integral from t=0 to each sample time
    is accumulated by composite trapezoid quadrature on a uniform subgrid of
    `oversample` points per sample period (exact for rectangular pulses).
    """
    levels = np.asarray(levels, dtype=float)
    span = required_symbol_span(pulse, sampling, delay, num_samples, include_origin=True)
    if not allow_partial:
        _check_coverage(levels.size, first_symbol_index, span, "FSK levels")
    Ts = sampling.sample_period
    T = sampling.symbol_period
    t0 = delay.seconds(Ts)
    qscale = freq_pulse_scale(pulse, h, T)
    support = pulse_support(pulse, T)

    def eval_freq(t):
        return qscale * eval_pulse(pulse, t, T)

    dt = Ts / oversample
    n_fine = (num_samples - 1) * oversample + 1
    omega = _pulse_train(levels, first_symbol_index, eval_freq, support, T, -t0, dt, n_fine)
    phase_from_start = np.concatenate(
        ([0.0], np.cumsum(0.5 * (omega[1:] + omega[:-1]) * dt))
    )
    # subtract the integral over [-t0, 0) so phases are referenced to t = 0
    if t0 > 0.0:
        m = max(1, int(np.ceil(t0 / dt)))
        seg_dt = t0 / m
        omega0 = _pulse_train(levels, first_symbol_index, eval_freq, support, T, -t0, seg_dt, m + 1)
        phase_origin = float(np.trapz(omega0, dx=seg_dt))
    else:
        phase_origin = 0.0
    phases = phase_from_start[::oversample] - phase_origin
    return ComplexSeries(np.exp(1j * phases), Ts)


def synth_noiseless(
    scheme: ModulationScheme,
    pulse: PulseSpec,
    sampling: SamplingSpec,
    delay: DelaySpec,
    num_samples: int,
    rng: np.random.Generator,
) -> ComplexSeries:
    """Draw exactly the symbols the sample window needs and synthesize."""
    span = required_symbol_span(
        pulse, sampling, delay, num_samples, include_origin=scheme.is_fsk
    )
    count = span[1] - span[0] + 1
    symbols = draw_symbols(scheme, count, rng)
    if scheme.is_fsk:
        return synth_cpfsk(
            symbols, pulse, scheme.modulation_index, sampling, delay,
            num_samples, first_symbol_index=span[0],
        )
    return synth_linear(
        symbols, pulse, sampling, delay, num_samples, first_symbol_index=span[0]
    )


# ---------------------------------------------------------------------------
# channel


def gen_fading(length: int, half_power_lag: int, rng: np.random.Generator) -> np.ndarray:
    """Flat Rayleigh fast-fading gain sequence with unit mean-square amplitude.

    First-order autoregression g[k] = a*g[k-1] + innovation, a = 0.5**(1/lag),
    driven by white complex circular Gaussian noise and started from the
    stationary distribution, so E[|g|^2] = 1 and the autocorrelation magnitude
    at lag m is a**m (>= 1/2 up to m = half_power_lag).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if half_power_lag < 1:
        raise ValueError("half_power_lag must be >= 1")
    a = 0.5 ** (1.0 / half_power_lag)
    z = rng.standard_normal((2, length))
    v = z[0] + 1j * z[1]
    v[0] /= np.sqrt(2.0)
    if length > 1:
        v[1:] *= np.sqrt((1.0 - a * a) / 2.0)
    return lfilter([1.0], [1.0, -a], v)


def apply_channel(
    x: ComplexSeries,
    chan: ChannelSpec,
    rng: np.random.Generator,
    theta_c: float | None = None,
) -> tuple[ComplexSeries, float, float]:
    """Rotate by the drawn carrier offset and initial phase, fade, add noise.

    Returns (received series, drawn offset in rad/sample, noise power); the
    drawn values are for logging only.  theta_c overrides the random initial
    phase when given.
    """
    n = len(x)
    k = np.arange(n)
    offset = chan.carrier_offset_center + rng.uniform(
        -chan.carrier_offset_halfwidth, chan.carrier_offset_halfwidth
    )
    theta = rng.uniform(0.0, 2.0 * np.pi) if theta_c is None else theta_c
    out = x.samples * np.exp(1j * (offset * k + theta))
    if chan.fading_enabled:
        out = out * gen_fading(n, chan.fading_half_power_lag, rng)
    sigma2 = chan.noise_power
    noise_std = np.sqrt(sigma2 / 2.0)
    z = rng.standard_normal((2, n))
    out = out + noise_std * (z[0] + 1j * z[1])
    return ComplexSeries(out, x.sample_period), float(offset), sigma2


def normalize_received(s: ComplexSeries, noise_power: float) -> ComplexSeries:
    """Scale so the average power equals 1 + noise_power."""
    p_r = s.mean_power
    if p_r == 0.0:
        raise ValueError("cannot normalize a zero-power signal")
    return ComplexSeries(s.samples * np.sqrt((1.0 + noise_power) / p_r), s.sample_period)


def translate_spectrum(s: ComplexSeries, shift: float) -> ComplexSeries:
    """Shift the spectrum by `shift` radians/sample."""
    k = np.arange(len(s))
    return ComplexSeries(s.samples * np.exp(1j * shift * k), s.sample_period)
