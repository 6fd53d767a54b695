"""IIR/FIR building blocks: shelf and peaking biquads, Butterworth low-pass,
Chebyshev Type II band-pass, and FFT convolution.

Shelf and peaking coefficients follow the Bristow-Johnson audio-EQ cookbook
with shelf slope S=1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, cheby2, oaconvolve, sosfilt, sosfreqz

from .audio import AudioError, Waveform

FAMILIES = ("low_shelf", "high_shelf", "peaking", "butterworth_lowpass", "chebyshev2_bandpass")


class FilterDesignError(AudioError):
    """Invalid or unstable filter request."""


@dataclass(frozen=True)
class FilterSpec:
    family: str
    freq: float | tuple[float, float]  # corner/center Hz, or (low, high) for band-pass
    gain_db: float = 0.0
    order: int = 2
    q: float = 1.0 / math.sqrt(2.0)
    stopband_atten_db: float = 40.0


@dataclass(frozen=True)
class IirChain:
    """Cascade of second-order sections, scipy sos layout (k, 6)."""

    sos: np.ndarray

    def __post_init__(self):
        sos = np.atleast_2d(np.asarray(self.sos, dtype=np.float64))
        if sos.shape[1] != 6:
            raise FilterDesignError(f"sos must be (k, 6), got {sos.shape}")
        sos.setflags(write=False)
        object.__setattr__(self, "sos", sos)

    def is_stable(self) -> bool:
        for sec in self.sos:
            poles = np.roots(sec[3:])
            if np.any(np.abs(poles) >= 1.0):
                return False
        return True


def _rbj_shelf(kind: str, f0: float, gain_db: float, fs: float) -> np.ndarray:
    a_ = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * math.pi * f0 / fs
    cosw, sinw = math.cos(w0), math.sin(w0)
    alpha = sinw / 2.0 * math.sqrt(2.0)  # S = 1
    sq = 2.0 * math.sqrt(a_) * alpha
    if kind == "low_shelf":
        b0 = a_ * ((a_ + 1) - (a_ - 1) * cosw + sq)
        b1 = 2 * a_ * ((a_ - 1) - (a_ + 1) * cosw)
        b2 = a_ * ((a_ + 1) - (a_ - 1) * cosw - sq)
        a0 = (a_ + 1) + (a_ - 1) * cosw + sq
        a1 = -2 * ((a_ - 1) + (a_ + 1) * cosw)
        a2 = (a_ + 1) + (a_ - 1) * cosw - sq
    else:
        b0 = a_ * ((a_ + 1) + (a_ - 1) * cosw + sq)
        b1 = -2 * a_ * ((a_ - 1) + (a_ + 1) * cosw)
        b2 = a_ * ((a_ + 1) + (a_ - 1) * cosw - sq)
        a0 = (a_ + 1) - (a_ - 1) * cosw + sq
        a1 = 2 * ((a_ - 1) - (a_ + 1) * cosw)
        a2 = (a_ + 1) - (a_ - 1) * cosw - sq
    return np.array([b0, b1, b2, a0, a1, a2]) / a0


def _rbj_peaking(f0: float, gain_db: float, q: float, fs: float) -> np.ndarray:
    a_ = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * math.pi * f0 / fs
    cosw = math.cos(w0)
    alpha = math.sin(w0) / (2.0 * q)
    b0 = 1 + alpha * a_
    b1 = -2 * cosw
    b2 = 1 - alpha * a_
    a0 = 1 + alpha / a_
    a1 = -2 * cosw
    a2 = 1 - alpha / a_
    return np.array([b0, b1, b2, a0, a1, a2]) / a0


def design_filter(spec: FilterSpec, sample_rate: int) -> IirChain:
    """Build a stable second-order-section cascade for the given spec."""
    nyq = sample_rate / 2.0
    freqs = spec.freq if isinstance(spec.freq, tuple) else (spec.freq,)
    for f in freqs:
        if not 0 < f < nyq:
            raise FilterDesignError(f"frequency {f} Hz outside (0, {nyq})")

    if spec.family in ("low_shelf", "high_shelf"):
        sos = _rbj_shelf(spec.family, spec.freq, spec.gain_db, sample_rate)
    elif spec.family == "peaking":
        sos = _rbj_peaking(spec.freq, spec.gain_db, spec.q, sample_rate)
    elif spec.family == "butterworth_lowpass":
        sos = butter(spec.order, spec.freq, btype="lowpass", fs=sample_rate, output="sos")
    elif spec.family == "chebyshev2_bandpass":
        lo, hi = spec.freq
        if lo >= hi:
            raise FilterDesignError("band-pass needs low edge < high edge")
        sos = cheby2(spec.order, spec.stopband_atten_db, [lo, hi],
                     btype="bandpass", fs=sample_rate, output="sos")
    else:
        raise FilterDesignError(f"unknown family {spec.family!r}")

    chain = IirChain(sos)
    if not chain.is_stable():
        raise FilterDesignError(f"unstable design for {spec}")
    return chain


def chain_response_db(chain: IirChain, freqs_hz, sample_rate: int) -> np.ndarray:
    """Analytic magnitude response in dB at the given frequencies."""
    _, h = sosfreqz(chain.sos, worN=np.asarray(freqs_hz, dtype=np.float64), fs=sample_rate)
    return 20.0 * np.log10(np.maximum(np.abs(h), 1e-12))


def apply_iir(wf: Waveform, chain: IirChain) -> Waveform:
    """Filter each channel independently; output length equals input length."""
    if not np.isfinite(wf.data).all():
        raise AudioError("non-finite input samples")
    # sosfilt rejects read-only buffers for both coefficients and signal
    return wf.with_data(sosfilt(chain.sos.copy(), wf.data.copy(), axis=1))


def fft_convolve(wf: Waveform, ir: Waveform) -> Waveform:
    """Convolve each channel with the IR (overlap-add FFT), truncate to the
    input length, and rescale so the output peak matches the input peak.

    A mono IR is applied to both channels; a stereo IR is applied per channel.
    """
    if ir.n_samples < 1:
        raise AudioError("empty impulse response")
    if ir.channels == wf.channels:
        out = oaconvolve(wf.data, ir.data, mode="full", axes=1)[:, : wf.n_samples]
    else:  # mono IR applied to every channel, one shared FFT of the IR
        out = oaconvolve(wf.data, ir.data[:1], mode="full", axes=1)[:, : wf.n_samples]
    in_peak = wf.peak
    out_peak = np.abs(out).max()
    if in_peak > 0 and out_peak > 0:
        out = out * (in_peak / out_peak)
    return wf.with_data(out)


def direct_convolve(wf: Waveform, ir: Waveform) -> Waveform:
    """Time-domain reference convolution with the same truncate/re-peak
    post-processing as fft_convolve. O(n*m); for validation only."""
    if ir.n_samples < 1:
        raise AudioError("empty impulse response")
    ir_data = ir.data if ir.channels == wf.channels else np.broadcast_to(ir.data, (wf.channels, ir.n_samples))
    out = np.empty_like(wf.data)
    for ch in range(wf.channels):
        out[ch] = np.convolve(wf.data[ch], ir_data[ch], mode="full")[: wf.n_samples]
    in_peak = wf.peak
    out_peak = np.abs(out).max()
    if in_peak > 0 and out_peak > 0:
        out = out * (in_peak / out_peak)
    return wf.with_data(out)
