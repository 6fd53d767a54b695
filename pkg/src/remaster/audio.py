"""Waveform container, WAV file I/O, normalization, and spectral transforms.

Everything downstream works on stereo float signals at 44.1 kHz; mono files
are duplicated to two channels and other sample rates are resampled on load.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window, resample_poly

DEFAULT_SAMPLE_RATE = 44100


class AudioError(Exception):
    """Base error for audio handling."""


class UnsupportedWavError(AudioError):
    """WAV codec or layout we do not decode."""


class TruncatedWavError(AudioError):
    """File ends before the declared payload."""


@dataclass(frozen=True)
class Waveform:
    """Immutable multichannel audio buffer.

    data has shape (channels, n_samples), float64, nominal full scale +-1.
    """

    data: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2 or arr.shape[0] not in (1, 2):
            raise AudioError(f"expected (channels, n) with 1 or 2 channels, got {arr.shape}")
        if arr.shape[1] == 0:
            raise AudioError("zero-length audio")
        if self.sample_rate <= 0:
            raise AudioError(f"sample_rate must be positive, got {self.sample_rate}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.abs(self.data).max())

    def with_data(self, data: np.ndarray) -> "Waveform":
        return Waveform(data, self.sample_rate)

    def to_stereo(self) -> "Waveform":
        if self.channels == 2:
            return self
        return Waveform(np.vstack([self.data, self.data]), self.sample_rate)

    def slice_seconds(self, start: float, stop: float) -> "Waveform":
        a = int(round(start * self.sample_rate))
        b = int(round(stop * self.sample_rate))
        return Waveform(self.data[:, a:b], self.sample_rate)


# ---------------------------------------------------------------------------
# WAV (RIFF) I/O: read PCM16 / PCM24 / float32, write float32 only.

_FMT_PCM = 1
_FMT_FLOAT = 3


def read_wav(path) -> Waveform:
    """Decode a WAV file to float samples. Sample rate is preserved."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise TruncatedWavError(f"truncated file: {path}")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if size < 16:
                raise TruncatedWavError(f"truncated file: {path}")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if len(body) < size:
                raise TruncatedWavError(f"truncated file: {path}")
            data = body
        pos += 8 + size + (size & 1)

    if fmt is None or data is None:
        raise TruncatedWavError(f"truncated file: {path}")
    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedWavError(f"{channels}-channel WAV not supported")

    if audio_format == _FMT_PCM and bits == 16:
        x = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == _FMT_PCM and bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8)
        raw = raw[: (len(raw) // 3) * 3].reshape(-1, 3).astype(np.int32)
        val = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        val = np.where(val >= 1 << 23, val - (1 << 24), val)
        x = val.astype(np.float64) / float(1 << 23)
    elif audio_format == _FMT_FLOAT and bits == 32:
        x = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavError(f"unsupported codec: format={audio_format} bits={bits}")

    if x.size == 0:
        raise TruncatedWavError(f"zero-length audio: {path}")
    x = x[: (x.size // channels) * channels]
    return Waveform(x.reshape(-1, channels).T, rate)


def write_wav(wf: Waveform, path) -> None:
    """Write a float-32 WAV; read_wav round-trips float32 payloads bit-exactly."""
    if not np.isfinite(wf.data).all():
        raise AudioError("refusing to write non-finite samples")
    pcm = np.ascontiguousarray(wf.data.T, dtype="<f4")
    n = pcm.nbytes
    block = wf.channels * 4
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + n, b"WAVE",
        b"fmt ", 16, _FMT_FLOAT, wf.channels, wf.sample_rate,
        wf.sample_rate * block, block, 32,
        b"data", n,
    )
    with open(path, "wb") as f:
        f.write(header)
        pcm.tofile(f)


def resample(wf: Waveform, target_rate: int) -> Waveform:
    """Polyphase windowed-sinc resampling to target_rate."""
    if target_rate == wf.sample_rate:
        return wf
    g = math.gcd(wf.sample_rate, target_rate)
    out = resample_poly(wf.data, target_rate // g, wf.sample_rate // g, axis=1)
    return Waveform(out, target_rate)


def load_audio(path, sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Read a WAV and bring it to the internal layout: stereo at sample_rate."""
    return resample(read_wav(path).to_stereo(), sample_rate)


# ---------------------------------------------------------------------------
# Gain / stereo helpers.

def peak_normalize(wf: Waveform, target: float) -> Waveform:
    """Scale both channels by one gain so the global peak equals target."""
    if not 0 < target <= 1:
        raise AudioError(f"target peak must be in (0, 1], got {target}")
    peak = wf.peak
    if peak == 0:
        raise AudioError("cannot normalize all-zero audio")
    return wf.with_data(wf.data * (target / peak))


def mid_side(wf: Waveform) -> tuple[Waveform, Waveform]:
    """Split stereo into mid=(L+R)/2 and side=(L-R)/2 mono waveforms."""
    if wf.channels != 2:
        raise AudioError("mid/side requires a stereo waveform")
    left, right = wf.data
    mid = Waveform((left + right) * 0.5, wf.sample_rate)
    side = Waveform((left - right) * 0.5, wf.sample_rate)
    return mid, side


def mid_signal(wf: Waveform) -> np.ndarray:
    """Mono reduction used by the spectral analyses: mean of channels."""
    return wf.data.mean(axis=0)


# ---------------------------------------------------------------------------
# Spectral transforms.

@dataclass(frozen=True)
class SpectralConfig:
    fft_size: int = 2048
    hop: int = 512
    window: str = "hann"
    mel_bins: int = 128
    fmin: float = 20.0
    fmax: float = 16000.0

    def __post_init__(self):
        if self.hop > self.fft_size or self.hop <= 0:
            raise AudioError("need 0 < hop <= fft_size")
        if self.mel_bins < 1:
            raise AudioError("mel_bins must be >= 1")
        if not 0 <= self.fmin < self.fmax:
            raise AudioError("need 0 <= fmin < fmax")


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude matrix, frames x bins (rfft bins or mel bands)."""

    magnitude: np.ndarray
    config: SpectralConfig
    sample_rate: int
    phase: np.ndarray | None = None

    @property
    def n_frames(self) -> int:
        return self.magnitude.shape[0]


def _frame(x: np.ndarray, size: int, hop: int) -> np.ndarray:
    if x.size < size:
        raise AudioError(f"signal shorter than one frame ({x.size} < {size})")
    n_frames = 1 + (x.size - size) // hop
    idx = np.arange(size)[np.newaxis, :] + hop * np.arange(n_frames)[:, np.newaxis]
    return x[idx]


def stft(wf: Waveform, cfg: SpectralConfig, keep_phase: bool = False) -> Spectrogram:
    """Short-time Fourier magnitude of the mid signal."""
    if cfg.fmax > wf.sample_rate / 2:
        raise AudioError("fmax above Nyquist")
    win = get_window(cfg.window, cfg.fft_size, fftbins=True)
    frames = _frame(mid_signal(wf), cfg.fft_size, cfg.hop) * win
    spec = np.fft.rfft(frames, axis=1)
    mag = np.abs(spec)
    return Spectrogram(mag, cfg, wf.sample_rate, phase=np.angle(spec) if keep_phase else None)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, cfg: SpectralConfig) -> np.ndarray:
    """Triangular mel filters, each row normalized to sum to 1."""
    n_bins = cfg.fft_size // 2 + 1
    freqs = np.linspace(0, sample_rate / 2, n_bins)
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.mel_bins + 2))
    fb = np.zeros((cfg.mel_bins, n_bins))
    for i in range(cfg.mel_bins):
        lo, mid, hi = edges[i], edges[i + 1], edges[i + 2]
        up = (freqs - lo) / max(mid - lo, 1e-12)
        down = (hi - freqs) / max(hi - mid, 1e-12)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
        s = fb[i].sum()
        if s > 0:
            fb[i] /= s
        else:  # band narrower than one bin: collapse onto the nearest bin
            fb[i, np.argmin(np.abs(freqs - mid))] = 1.0
    return fb


def mel_spectrogram(wf: Waveform, cfg: SpectralConfig) -> Spectrogram:
    """Mel-band magnitude (sqrt of filtered power) of the mid signal."""
    lin = stft(wf, cfg)
    fb = mel_filterbank(wf.sample_rate, cfg)
    power = lin.magnitude ** 2 @ fb.T
    return Spectrogram(np.sqrt(power), cfg, wf.sample_rate)
