"""Degradation-specific objective metrics and the evaluation harness.

Each degradation kind has a designated measurement; restoration quality is
reported as the mean absolute difference between the metric on processed
audio and on the clean reference (distance metrics compare the two signals
directly). Spectral analyses run on the mid signal; only stereo width looks
at the channels individually.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.signal import welch

from .audio import (AudioError, SpectralConfig, Waveform, load_audio, mel_spectrogram,
                    mid_side, mid_signal, stft)
from .degrade import DegradationKind, K

_EPS = 1e-10

MEL_CFG = SpectralConfig(fft_size=2048, hop=512, mel_bins=128)
RMS_FRAME, RMS_HOP = 2048, 1024
MODULATION_BAND_HZ = (0.5, 20.0)


@dataclass(frozen=True)
class BandSpec:
    """Eight analysis bands given by nine ascending edge frequencies."""

    edges: tuple[float, ...] = tuple(np.geomspace(50.0, 16000.0, 9))

    def __post_init__(self):
        e = np.asarray(self.edges)
        if e.size != 9 or np.any(np.diff(e) <= 0) or e[0] <= 0:
            raise AudioError("BandSpec needs 9 strictly increasing positive edges")


# energy-ratio band per EQ kind: (low Hz, high Hz or None for Nyquist)
RATIO_BANDS = {
    K.BRIGHT: (6000.0, None),
    K.DARK: (6000.0, None),
    K.AIRY: (10000.0, None),
    K.BOOM: (0.0, 120.0),
    K.WARM: (0.0, 400.0),
    K.MUD: (200.0, 500.0),
    K.VOCAL: (350.0, 3500.0),
    K.CLARITY: (2000.0, None),
}


def _psd(wf: Waveform) -> tuple[np.ndarray, np.ndarray]:
    x = mid_signal(wf)
    nperseg = min(4096, x.size)
    return welch(x, fs=wf.sample_rate, nperseg=nperseg)


def band_energies(wf: Waveform, bands: BandSpec) -> np.ndarray:
    """Welch-spectrum energy integrated over each of the 8 bands."""
    freqs, psd = _psd(wf)
    edges = np.asarray(bands.edges)
    out = np.empty(8)
    for i in range(8):
        sel = (freqs >= edges[i]) & (freqs < edges[i + 1])
        out[i] = psd[sel].sum()
    return out


def spectral_balance_distance(a: Waveform, b: Waveform,
                              bands: BandSpec = BandSpec()) -> float:
    """Cosine distance between L2-normalized 8-band energy vectors."""
    va, vb = band_energies(a, bands), band_energies(b, bands)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise AudioError("silent signal has no spectral balance")
    return float(1.0 - np.dot(va / na, vb / nb))


def band_energy_ratio(wf: Waveform, band: tuple[float, float | None]) -> float:
    """Fraction of total spectral energy inside [f_lo, f_hi]."""
    freqs, psd = _psd(wf)
    total = psd.sum()
    if total <= 0:
        raise AudioError("silent signal has no band energy")
    lo, hi = band
    hi = wf.sample_rate / 2 if hi is None else hi
    sel = (freqs >= lo) & (freqs <= hi)
    return float(psd[sel].sum() / total)


def frame_rms_std(wf: Waveform) -> float:
    """Std of frame RMS (2048-sample frames, 1024 hop) on the mid signal."""
    x = mid_signal(wf)
    if x.size < RMS_FRAME:
        raise AudioError("signal shorter than one RMS frame")
    n_frames = 1 + (x.size - RMS_FRAME) // RMS_HOP
    idx = np.arange(RMS_FRAME)[np.newaxis, :] + RMS_HOP * np.arange(n_frames)[:, np.newaxis]
    rms = np.sqrt((x[idx] ** 2).mean(axis=1))
    return float(rms.std())


def _logmel_db(wf: Waveform) -> np.ndarray:
    """dB mel-spectrogram referenced to its own peak, floored 80 dB below.

    The reference makes every log-mel analysis invariant to global gain;
    the floor keeps near-silent bands from contributing epsilon noise.
    """
    mel = mel_spectrogram(wf, MEL_CFG)
    db = 20.0 * np.log10(mel.magnitude + _EPS)
    return np.maximum(db - db.max(), -80.0)


def onset_strength_mean(wf: Waveform) -> float:
    """Mean spectral flux: positive frame-to-frame log-mel differences."""
    logmel = _logmel_db(wf)
    if logmel.shape[0] < 2:
        raise AudioError("too short for onset analysis")
    flux = np.maximum(logmel[1:] - logmel[:-1], 0.0).sum(axis=1)
    return float(flux.mean())


def modulation_spectrum(wf: Waveform) -> np.ndarray:
    """L2-normalized envelope spectrum averaged over mel bands, 0.5-20 Hz."""
    logmel = _logmel_db(wf)
    frame_rate = wf.sample_rate / MEL_CFG.hop
    mod = np.abs(np.fft.rfft(logmel, axis=0))
    freqs = np.fft.rfftfreq(logmel.shape[0], d=1.0 / frame_rate)
    sel = (freqs >= MODULATION_BAND_HZ[0]) & (freqs <= MODULATION_BAND_HZ[1])
    if not np.any(sel):
        raise AudioError("too short to resolve modulation band")
    vec = mod[sel].mean(axis=1)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise AudioError("silent signal has no modulation spectrum")
    return vec / norm


def modulation_spectrum_distance(a: Waveform, b: Waveform) -> float:
    return float(np.linalg.norm(modulation_spectrum(a) - modulation_spectrum(b)))


def spectral_flatness_mean(wf: Waveform) -> float:
    """Mean over frames of geometric/arithmetic power-bin ratio, in [0, 1]."""
    power = stft(wf, MEL_CFG).magnitude ** 2 + _EPS
    flat = np.exp(np.log(power).mean(axis=1)) / power.mean(axis=1)
    return float(flat.mean())


def global_rms(wf: Waveform) -> float:
    return float(np.sqrt((wf.data ** 2).mean()))


def stereo_width(wf: Waveform) -> float:
    """RMS(side) / RMS(mid); zero for mono-folded material."""
    mid, side = mid_side(wf)
    denom = global_rms(mid)
    if denom < 1e-12:
        raise AudioError("mid channel is silent; width undefined")
    return global_rms(side) / denom


def mel_ssim(a: Waveform, b: Waveform) -> float:
    """Structural similarity of dB mel-spectrograms, 8x8 uniform windows."""
    xa, xb = _logmel_db(a), _logmel_db(b)
    if xa.shape != xb.shape:
        raise AudioError("mel-SSIM needs equal-length signals")
    if min(xa.shape) < 8:
        raise AudioError("too short for an 8x8 SSIM window")
    span = max(xa.max(), xb.max()) - min(xa.min(), xb.min())
    c1, c2 = (0.01 * span) ** 2 + _EPS, (0.03 * span) ** 2 + _EPS

    win = dict(size=8, mode="constant")
    mu_a = uniform_filter(xa, **win)
    mu_b = uniform_filter(xb, **win)
    var_a = uniform_filter(xa * xa, **win) - mu_a ** 2
    var_b = uniform_filter(xb * xb, **win) - mu_b ** 2
    cov = uniform_filter(xa * xb, **win) - mu_a * mu_b
    ssim = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    h = 4  # crop half-window margins so only fully covered windows count
    ssim = ssim[h:-h or None, h:-h or None]
    return float(ssim.mean())


# ---------------------------------------------------------------------------
# Per-kind metric dispatch: distance metrics take (processed, clean) pairs,
# scalar metrics are compared via |m(processed) - m(clean)|.

_DISTANCE_KINDS = {K.XBAND: spectral_balance_distance, K.MIC: spectral_balance_distance,
                   K.SMALL: modulation_spectrum_distance, K.BIG: modulation_spectrum_distance,
                   K.MIX: modulation_spectrum_distance, K.REAL: modulation_spectrum_distance}

_SCALAR_KINDS = {K.COMP: frame_rms_std, K.PUNCH: onset_strength_mean,
                 K.CLIP: spectral_flatness_mean, K.VOLUME: global_rms,
                 K.STEREO: stereo_width}


def metric_error(kind: DegradationKind, processed: Waveform, clean: Waveform) -> float:
    """The designated metric's error for one degradation kind."""
    if kind in _DISTANCE_KINDS:
        return _DISTANCE_KINDS[kind](processed, clean)
    if kind in RATIO_BANDS:
        band = RATIO_BANDS[kind]
        return abs(band_energy_ratio(processed, band) - band_energy_ratio(clean, band))
    if kind in _SCALAR_KINDS:
        m = _SCALAR_KINDS[kind]
        return abs(m(processed) - m(clean))
    raise ValueError(f"no metric for kind {kind!r}")


@dataclass
class MetricReport:
    """Mean |metric(processed) - metric(clean)| per degradation kind."""

    per_kind: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    mel_ssim_mean: float = float("nan")
    rows_evaluated: int = 0
    rows_skipped: int = 0

    def to_json(self) -> dict:
        return {
            "per_kind": self.per_kind,
            "counts": self.counts,
            "mel_ssim_mean": self.mel_ssim_mean,
            "rows_evaluated": self.rows_evaluated,
            "rows_skipped": self.rows_skipped,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=2)
            f.write("\n")


def evaluate_dataset(manifest_path, processed_dir, workers: int = 1) -> MetricReport:
    """Score processed audio against the manifest's clean references.

    Each manifest row contributes one error per applied effect (hidden ones
    included); files are matched by the degraded file's basename inside
    processed_dir. Missing processed files are skipped and counted.
    """
    manifest_path = Path(manifest_path)
    processed_dir = Path(processed_dir)
    rows = []
    with open(manifest_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))

    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    ssims: list[float] = []
    skipped = 0
    evaluated = 0

    tasks = []
    for row in rows:
        proc_path = processed_dir / os.path.basename(row["degraded_path"])
        if not proc_path.exists():
            skipped += 1
            continue
        tasks.append((str(manifest_path), row, str(proc_path)))

    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_row, tasks))
    else:
        results = [_eval_row(t) for t in tasks]

    for errors, ssim in results:
        evaluated += 1
        ssims.append(ssim)
        for kind, err in errors:
            sums[kind] = sums.get(kind, 0.0) + err
            counts[kind] = counts.get(kind, 0) + 1

    report = MetricReport(
        per_kind={k: sums[k] / counts[k] for k in sorted(sums)},
        counts={k: counts[k] for k in sorted(counts)},
        mel_ssim_mean=float(np.mean(ssims)) if ssims else float("nan"),
        rows_evaluated=evaluated,
        rows_skipped=skipped,
    )
    return report


def _resolve(manifest_path: Path, recorded: str) -> Path:
    p = Path(recorded)
    return p if p.is_absolute() else manifest_path.parent / p


def _eval_row(args):
    manifest_path, row, proc_path = args
    processed = load_audio(proc_path)
    clean = load_audio(_resolve(Path(manifest_path), row["clean_path"]))
    errors = [(eff["kind"], metric_error(DegradationKind(eff["kind"]), processed, clean))
              for eff in row["effects"]]
    return errors, mel_ssim(processed, clean)
