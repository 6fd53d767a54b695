"""Synthetic music-like test signals.

Cheap to render and deterministic by seed: harmonic chord tones with
per-bar level changes, a beat grid of kicks and hats, and a decorrelated
noise bed, so the result has music-shaped spectrum (little energy above
10 kHz), transients, level dynamics, and stereo width.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.signal import butter, lfilter, sosfilt

from .audio import DEFAULT_SAMPLE_RATE, Waveform

_PENTATONIC = np.array([0, 3, 5, 7, 10, 12, 15, 17, 19, 22])


@njit(cache=True)
def _additive(n, freqs, amps, phases_l, phases_r, pans, sample_rate):
    # digital resonators: s[i] = 2 cos(w) s[i-1] - s[i-2], no per-sample sin;
    # per-channel phases decorrelate the image
    left = np.zeros(n)
    right = np.zeros(n)
    for p in range(freqs.size):
        w = 2.0 * np.pi * freqs[p] / sample_rate
        c = 2.0 * np.cos(w)
        l0 = np.sin(phases_l[p])
        l1 = np.sin(phases_l[p] + w)
        r0 = np.sin(phases_r[p])
        r1 = np.sin(phases_r[p] + w)
        gl = (1.0 - pans[p]) * amps[p]
        gr = pans[p] * amps[p]
        left[0] += gl * l0
        right[0] += gr * r0
        if n > 1:
            left[1] += gl * l1
            right[1] += gr * r1
        for i in range(2, n):
            l2 = c * l1 - l0
            r2 = c * r1 - r0
            left[i] += gl * l2
            right[i] += gr * r2
            l0 = l1
            l1 = l2
            r0 = r1
            r1 = r2
    return left, right


def synthesize_music(duration_s: float, seed: int,
                     sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))

    bpm = rng.uniform(85.0, 135.0)
    beat_len = int(round(60.0 / bpm * sample_rate))
    bar_len = 4 * beat_len
    n_bars = n // bar_len + 1
    bar_gain = np.repeat(rng.uniform(0.4, 1.0, size=n_bars), bar_len)[:n]

    root = rng.uniform(82.0, 165.0)
    tones = rng.choice(_PENTATONIC, size=5, replace=False)
    freqs, amps, phases_l, phases_r, pans = [], [], [], [], []
    for semis in tones:
        f0 = root * 2.0 ** (semis / 12.0)
        pan = rng.uniform(0.1, 0.9)
        for h in range(1, 5):
            freqs.append(f0 * h)
            amps.append(rng.uniform(0.5, 1.0) / h ** 1.8)
            phase = rng.uniform(0, 2 * np.pi)
            phases_l.append(phase)
            phases_r.append(phase + rng.uniform(0.4, 1.6))
            pans.append(pan)
    left, right = _additive(n, np.array(freqs), np.array(amps), np.array(phases_l),
                            np.array(phases_r), np.array(pans), float(sample_rate))
    left *= bar_gain
    right *= bar_gain

    # percussion kernels placed on the beat grid
    tau = np.arange(int(0.25 * sample_rate)) / sample_rate
    kick = np.sin(2 * np.pi * 60.0 * tau) * np.exp(-tau / 0.06) * 1.5
    hat_noise = rng.normal(size=int(0.03 * sample_rate)) * np.exp(
        -np.arange(int(0.03 * sample_rate)) / (0.004 * sample_rate))
    hat = sosfilt(butter(2, 5000.0, "highpass", fs=sample_rate, output="sos"), hat_noise) * 0.5
    for start in range(0, n, beat_len):
        seg = min(len(kick), n - start)
        left[start:start + seg] += kick[:seg]
        right[start:start + seg] += kick[:seg]
        hseg = min(len(hat), n - start)
        hpan = 0.3 + 0.4 * ((start // beat_len) % 2)
        left[start:start + hseg] += (1.0 - hpan) * hat[:hseg]
        right[start:start + hseg] += hpan * hat[:hseg]

    # low-passed noise bed, decorrelated between channels
    bed_sos = butter(1, 1500.0, "lowpass", fs=sample_rate, output="sos")
    left += sosfilt(bed_sos, rng.normal(size=n)) * 0.15
    right += sosfilt(bed_sos, rng.normal(size=n)) * 0.15

    data = np.vstack([left, right])
    return Waveform(data * (0.9 / np.abs(data).max()), sample_rate)


def pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """Approximate 1/f noise: white noise through a -3 dB/oct pole-zero ladder."""
    x = rng.normal(size=n)
    b = [0.049922035, -0.095993537, 0.050612699, -0.004408786]
    a = [1.0, -2.494956002, 2.017265875, -0.522189400]
    return lfilter(b, a, x)


def pink_click_test_signal(duration_s: float = 30.0, seed: int = 0,
                           sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Pink noise with a 1 Hz click train: the standard probe for the
    degradation directionality checks.

    The channels are independent pink noise (real stereo width) and the
    clicks stand clearly above the bed so transient handling is visible in
    onset statistics.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    data = np.vstack([pink_noise(n, rng), pink_noise(n, rng)])
    data *= 0.30 / np.abs(data).max()
    click = np.exp(-np.arange(int(0.005 * sample_rate)) / (0.0005 * sample_rate))
    for start in range(0, n, sample_rate):
        seg = min(len(click), n - start)
        data[:, start:start + seg] += 0.65 * click[:seg]
    data *= 0.9 / np.abs(data).max()
    return Waveform(data, sample_rate)
