"""Impulse-response banks: loading from WAV directories and synthesizing
stand-in banks (phone-microphone transfer functions, room responses) so the
whole pipeline runs without external data.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rooms
from .audio import DEFAULT_SAMPLE_RATE, AudioError, Waveform, read_wav, write_wav
from .filters import FilterSpec, apply_iir, design_filter

MIN_IR_SAMPLES = 16


@dataclass(frozen=True)
class IrBank:
    """Named FIR impulse responses, ordered by name."""

    entries: tuple[tuple[str, Waveform], ...]

    def __post_init__(self):
        if not self.entries:
            raise AudioError("impulse-response bank is empty")
        for name, ir in self.entries:
            if ir.n_samples < MIN_IR_SAMPLES:
                raise AudioError(f"IR {name!r} has {ir.n_samples} samples, needs >= {MIN_IR_SAMPLES}")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> tuple[str, Waveform]:
        return self.entries[i]

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]


def load_ir_bank(directory) -> IrBank:
    directory = Path(directory)
    paths = sorted(directory.glob("*.wav"))
    if not paths:
        raise AudioError(f"no WAV impulse responses in {directory}")
    return IrBank(tuple((p.stem, read_wav(p)) for p in paths))


def write_ir_bank(bank: IrBank, directory) -> None:
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    for name, ir in bank.entries:
        write_wav(ir, directory / f"{name}.wav")


def generate_mic_tf_bank(n: int = 20, seed: int = 0,
                         sample_rate: int = DEFAULT_SAMPLE_RATE) -> IrBank:
    """Synthetic phone-like microphone transfer functions.

    Each IR is the truncated response of a telephone-band band-pass plus a
    few random peaking resonances, so convolution band-limits and colors the
    signal the way a cheap handset capsule would.
    """
    rng = np.random.default_rng(seed)
    length = 512
    entries = []
    for i in range(n):
        lo = rng.uniform(220.0, 420.0)
        hi = rng.uniform(2800.0, 4200.0)
        x = np.zeros(length)
        x[0] = 1.0
        wf = Waveform(x[np.newaxis, :], sample_rate)
        wf = apply_iir(wf, design_filter(
            FilterSpec("chebyshev2_bandpass", (lo, hi), order=2, stopband_atten_db=35.0),
            sample_rate))
        for _ in range(int(rng.integers(2, 5))):
            center = rng.uniform(lo * 1.5, hi * 0.8)
            gain = rng.uniform(-12.0, 12.0)
            wf = apply_iir(wf, design_filter(
                FilterSpec("peaking", center, gain_db=gain, q=rng.uniform(1.0, 4.0)),
                sample_rate))
        taper = np.ones(length)
        taper[length // 2:] = np.hanning(length)[length // 2:]
        ir = wf.data[0] * taper
        peak = np.abs(ir).max()
        entries.append((f"mic_{i:02d}", Waveform((ir / peak)[np.newaxis, :], sample_rate)))
    return IrBank(tuple(entries))


def generate_rir_bank(n: int = 12, seed: int = 1,
                      sample_rate: int = DEFAULT_SAMPLE_RATE) -> IrBank:
    """Simulated room responses standing in for measured ones."""
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(n):
        dims = np.array([rng.uniform(3.0, 14.0), rng.uniform(3.0, 16.0), rng.uniform(2.5, 10.0)])
        absorption = rng.uniform(0.05, 0.45)
        src = np.array([rng.uniform(0.5, d - 0.5) for d in dims])
        rcv = np.array([rng.uniform(0.5, d - 0.5) for d in dims])
        ir = rooms.shoebox_ir(dims, absorption, src, rcv, sample_rate)
        entries.append((f"rir_{i:02d}", ir))
    return IrBank(tuple(entries))


@dataclass(frozen=True)
class Banks:
    """Everything the degradation pipeline may draw from."""

    mic: IrBank
    rir: IrBank


def default_banks(sample_rate: int = DEFAULT_SAMPLE_RATE) -> Banks:
    return Banks(mic=generate_mic_tf_bank(sample_rate=sample_rate),
                 rir=generate_rir_bank(sample_rate=sample_rate))


def load_banks(directory) -> Banks:
    directory = Path(directory)
    return Banks(mic=load_ir_bank(directory / "mic_tfs"),
                 rir=load_ir_bank(directory / "rirs"))


def write_banks(directory, banks: Banks | None = None) -> None:
    directory = Path(directory)
    banks = banks if banks is not None else default_banks()
    write_ir_bank(banks.mic, directory / "mic_tfs")
    write_ir_bank(banks.rir, directory / "rirs")
