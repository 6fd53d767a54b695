"""The 19 degradation functions with their documented parameter ranges.

Every effect samples its parameters from an rng, returns the processed
waveform plus a DegradationRecord of what was applied, preserves length,
channel count, and sample rate, and is deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rooms
from .audio import AudioError, Waveform
from .banks import Banks, IrBank
from .dynamics import compress, shape_transients
from .filters import FilterSpec, IirChain, apply_iir, design_filter, fft_convolve


class Category(str, Enum):
    EQ = "eq"
    DYNAMICS = "dynamics"
    REVERB = "reverb"
    AMPLITUDE = "amplitude"
    STEREO = "stereo"


class DegradationKind(str, Enum):
    XBAND = "xband"
    MIC = "mic"
    BRIGHT = "bright"
    DARK = "dark"
    AIRY = "airy"
    BOOM = "boom"
    CLARITY = "clarity"
    MUD = "mud"
    WARM = "warm"
    VOCAL = "vocal"
    COMP = "comp"
    PUNCH = "punch"
    SMALL = "small"
    BIG = "big"
    MIX = "mix"
    REAL = "real"
    CLIP = "clip"
    VOLUME = "volume"
    STEREO = "stereo"


K = DegradationKind

CATEGORY: dict[DegradationKind, Category] = {
    K.XBAND: Category.EQ, K.MIC: Category.EQ, K.BRIGHT: Category.EQ, K.DARK: Category.EQ,
    K.AIRY: Category.EQ, K.BOOM: Category.EQ, K.CLARITY: Category.EQ, K.MUD: Category.EQ,
    K.WARM: Category.EQ, K.VOCAL: Category.EQ,
    K.COMP: Category.DYNAMICS, K.PUNCH: Category.DYNAMICS,
    K.SMALL: Category.REVERB, K.BIG: Category.REVERB, K.MIX: Category.REVERB, K.REAL: Category.REVERB,
    K.CLIP: Category.AMPLITUDE, K.VOLUME: Category.AMPLITUDE,
    K.STEREO: Category.STEREO,
}


@dataclass(frozen=True)
class DegradationRecord:
    """One applied effect: its kind, sampled parameters, and whether it was
    injected silently (hidden clipping has no matching instruction)."""

    kind: DegradationKind
    params: dict
    hidden: bool = False

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "params": self.params, "hidden": self.hidden}

    @staticmethod
    def from_json(obj: dict) -> "DegradationRecord":
        return DegradationRecord(DegradationKind(obj["kind"]), dict(obj["params"]),
                                 bool(obj.get("hidden", False)))


# shelf EQ settings: (family, corner Hz, gain lo dB, gain hi dB, sign of applied gain)
SHELF_SETTINGS = {
    K.BRIGHT: ("high_shelf", 6000.0, 6.0, 15.0, -1.0),
    K.DARK: ("high_shelf", 6000.0, 6.0, 15.0, +1.0),
    K.AIRY: ("high_shelf", 10000.0, 10.0, 20.0, -1.0),
    K.BOOM: ("low_shelf", 120.0, 10.0, 20.0, -1.0),
    K.WARM: ("low_shelf", 400.0, 6.0, 20.0, -1.0),
}

# band EQ settings: (f_lo, f_hi, gain lo, gain hi, +1 boost / -1 cut)
BAND_SETTINGS = {
    K.MUD: (200.0, 500.0, 6.0, 15.0, +1.0),
    K.VOCAL: (350.0, 3500.0, 6.0, 20.0, -1.0),
}

CLIP_LEVELS = (2.0, 3.0, 5.0)
VOLUME_LEVELS = (0.001, 0.003, 0.01, 0.05)
STEREO_STD_THRESHOLD = 0.08
XBAND_FMIN, XBAND_FMAX = 60.0, 14000.0
XBAND_Q = 1.2
CLARITY_CUTOFF_HZ = 2000.0

ROOM_DIM_RANGES = {
    K.SMALL: ((4.0, 8.0), (4.0, 7.0), (2.5, 3.5)),
    K.BIG: ((7.0, 15.0), (8.0, 18.0), (4.0, 14.0)),
    K.MIX: ((3.0, 7.0), (3.0, 9.0), (2.5, 4.0)),
}
ROOM_ABSORPTION_RANGE = (0.05, 0.30)
# "big" rooms get 1-2 walls with a distinct (more absorptive) material
BIG_WALL_ABSORPTION_RANGE = (0.30, 0.90)
WALL_MARGIN_M = 0.5


# ---------------------------------------------------------------------------
# Parameter sampling, separated from signal processing so the 10k-draw
# range checks do not have to run audio.

def sample_params(kind: DegradationKind, rng: np.random.Generator,
                  mic_bank_size: int = 20, rir_bank_size: int = 12) -> dict:
    """Draw one parameter set for the given degradation kind."""
    if kind in SHELF_SETTINGS:
        _, corner, lo, hi, _ = SHELF_SETTINGS[kind]
        return {"corner_hz": corner, "gain_db": float(rng.uniform(lo, hi))}
    if kind in BAND_SETTINGS:
        f_lo, f_hi, lo, hi, _ = BAND_SETTINGS[kind]
        return {"f_lo_hz": f_lo, "f_hi_hz": f_hi, "gain_db": float(rng.uniform(lo, hi))}
    if kind == K.CLARITY:
        return {"cutoff_hz": CLARITY_CUTOFF_HZ, "order": int(rng.integers(3, 6))}
    if kind == K.XBAND:
        n = int(rng.integers(8, 13))
        centers = np.geomspace(XBAND_FMIN, XBAND_FMAX, n)
        gains = rng.uniform(-6.0, 6.0, size=n)
        params = {"n_bands": n}
        for i, (c, g) in enumerate(zip(centers, gains)):
            params[f"center_hz_{i}"] = float(c)
            params[f"gain_db_{i}"] = float(g)
        return params
    if kind == K.MIC:
        return {"ir_index": int(rng.integers(mic_bank_size))}
    if kind == K.COMP:
        return {
            "attack_ms": float(rng.uniform(3.0, 80.0)),
            "release_ms": float(rng.uniform(80.0, 250.0)),
            "threshold_db": float(rng.uniform(-45.0, -38.0)),
            "ratio": float(rng.uniform(6.0, 45.0)),
            "makeup_db": float(rng.uniform(16.0, 25.0)),
        }
    if kind == K.PUNCH:
        return {"reduction_db": float(rng.uniform(8.0, 15.0))}
    if kind in ROOM_DIM_RANGES:
        return sample_room_params(kind, rng)
    if kind == K.REAL:
        return {"rir_index": int(rng.integers(rir_bank_size))}
    if kind == K.CLIP:
        return {"level": float(rng.choice(CLIP_LEVELS))}
    if kind == K.VOLUME:
        return {"level": float(rng.choice(VOLUME_LEVELS))}
    if kind == K.STEREO:
        return {}
    raise ValueError(f"unknown degradation kind {kind!r}")


def sample_room_params(kind: DegradationKind, rng: np.random.Generator) -> dict:
    ranges = ROOM_DIM_RANGES[kind]
    dims = [float(rng.uniform(lo, hi)) for lo, hi in ranges]
    params = {
        "dim_x_m": dims[0], "dim_y_m": dims[1], "dim_z_m": dims[2],
        "absorption": float(rng.uniform(*ROOM_ABSORPTION_RANGE)),
    }
    if kind == K.BIG:
        n_walls = int(rng.integers(1, 3))
        walls = rng.choice(6, size=n_walls, replace=False)
        for w in sorted(int(w) for w in walls):
            params[f"absorption_wall_{w}"] = float(rng.uniform(*BIG_WALL_ABSORPTION_RANGE))
    for key, prefix in (("src", "src"), ("rcv", "rcv")):
        for ax, d in zip("xyz", dims):
            params[f"{prefix}_{ax}_m"] = float(rng.uniform(WALL_MARGIN_M, d - WALL_MARGIN_M))
    return params


# ---------------------------------------------------------------------------
# EQ group

def _shelf_chain(kind: DegradationKind, gain_db: float, sample_rate: int) -> IirChain:
    family, corner, _, _, sign = SHELF_SETTINGS[kind]
    return design_filter(FilterSpec(family, corner, gain_db=sign * gain_db), sample_rate)


def apply_shelf_eq(wf: Waveform, kind: DegradationKind, rng: np.random.Generator):
    if kind not in SHELF_SETTINGS:
        raise ValueError(f"{kind} is not a shelf EQ degradation")
    params = sample_params(kind, rng)
    out = apply_iir(wf, _shelf_chain(kind, params["gain_db"], wf.sample_rate))
    return out, DegradationRecord(kind, params)


# Order-2 Chebyshev-II skirts: a lower stopband figure keeps the transition
# narrow, so the parallel gain stays confined near the nominal band.
BAND_EQ_STOPBAND_DB = 16.0


def bandpass_mix(wf: Waveform, f_lo: float, f_hi: float, gain_db: float, sign: float) -> Waveform:
    """Parallel band boost/cut: out = in + (10^(g/20)-1) * band for a boost,
    out = in - (1-10^(-g/20)) * band for a cut.

    The band signal is the complement of a zero-phase order-2 Chebyshev-II
    band-stop. At this order a direct band-pass has no flat passband over a
    wide band, while the complement is exact wherever the stop is deep, so
    the applied gain actually reaches its nominal dB value in-band. Causal
    filtering would also rotate the band's phase and break the parallel sum.
    """
    from scipy.signal import cheby2, sosfiltfilt
    sos = cheby2(2, BAND_EQ_STOPBAND_DB, [f_lo, f_hi], btype="bandstop",
                 fs=wf.sample_rate, output="sos")
    band = wf.data - sosfiltfilt(sos, wf.data, axis=1)
    if sign > 0:
        mix = 10.0 ** (gain_db / 20.0) - 1.0
    else:
        mix = -(1.0 - 10.0 ** (-gain_db / 20.0))
    return wf.with_data(wf.data + mix * band)


def apply_bandpass_eq(wf: Waveform, kind: DegradationKind, rng: np.random.Generator):
    if kind not in BAND_SETTINGS:
        raise ValueError(f"{kind} is not a band EQ degradation")
    f_lo, f_hi, _, _, sign = BAND_SETTINGS[kind]
    params = sample_params(kind, rng)
    out = bandpass_mix(wf, f_lo, f_hi, params["gain_db"], sign)
    return out, DegradationRecord(kind, params)


def apply_clarity(wf: Waveform, rng: np.random.Generator):
    params = sample_params(K.CLARITY, rng)
    chain = design_filter(FilterSpec("butterworth_lowpass", params["cutoff_hz"],
                                     order=params["order"]), wf.sample_rate)
    return apply_iir(wf, chain), DegradationRecord(K.CLARITY, params)


def apply_xband(wf: Waveform, rng: np.random.Generator):
    params = sample_params(K.XBAND, rng)
    sos = np.vstack([
        design_filter(FilterSpec("peaking", params[f"center_hz_{i}"],
                                 gain_db=params[f"gain_db_{i}"], q=XBAND_Q), wf.sample_rate).sos
        for i in range(params["n_bands"])
    ])
    return apply_iir(wf, IirChain(sos)), DegradationRecord(K.XBAND, params)


def apply_mic_tf(wf: Waveform, bank: IrBank, rng: np.random.Generator):
    params = sample_params(K.MIC, rng, mic_bank_size=len(bank))
    name, ir = bank[params["ir_index"]]
    params["ir_name"] = name
    return fft_convolve(wf, ir), DegradationRecord(K.MIC, params)


# ---------------------------------------------------------------------------
# Dynamics group

def apply_compressor(wf: Waveform, rng: np.random.Generator):
    params = sample_params(K.COMP, rng)
    out = compress(wf, params["attack_ms"], params["release_ms"],
                   params["threshold_db"], params["ratio"], params["makeup_db"])
    return out, DegradationRecord(K.COMP, params)


def apply_transient_shaper(wf: Waveform, rng: np.random.Generator):
    params = sample_params(K.PUNCH, rng)
    out, threshold = shape_transients(wf, params["reduction_db"])
    params["threshold"] = threshold
    return out, DegradationRecord(K.PUNCH, params)


# ---------------------------------------------------------------------------
# Reverb group

def simulate_shoebox_ir(kind: DegradationKind, rng: np.random.Generator | None,
                        sample_rate: int, params: dict | None = None) -> Waveform:
    """Room IR for the given reverb kind; samples the room unless params given."""
    if params is None:
        if rng is None:
            raise ValueError("need an rng when params are not supplied")
        params = sample_room_params(kind, rng)
    dims = (params["dim_x_m"], params["dim_y_m"], params["dim_z_m"])
    absorption = np.full(6, params["absorption"])
    for w in range(6):
        key = f"absorption_wall_{w}"
        if key in params:
            absorption[w] = params[key]
    src = (params["src_x_m"], params["src_y_m"], params["src_z_m"])
    rcv = (params["rcv_x_m"], params["rcv_y_m"], params["rcv_z_m"])
    return rooms.shoebox_ir(dims, absorption, src, rcv, sample_rate)


def apply_reverb(wf: Waveform, ir: Waveform, kind: DegradationKind = K.MIX,
                 params: dict | None = None):
    """Convolve with a (simulated) room IR; output re-peaked to the input peak."""
    out = fft_convolve(wf, ir)
    return out, DegradationRecord(kind, dict(params or {}))


def apply_room_reverb(wf: Waveform, kind: DegradationKind, rng: np.random.Generator):
    params = sample_room_params(kind, rng)
    ir = simulate_shoebox_ir(kind, None, wf.sample_rate, params=params)
    return apply_reverb(wf, ir, kind, params)


def apply_real_rir(wf: Waveform, bank: IrBank, rng: np.random.Generator):
    params = sample_params(K.REAL, rng, rir_bank_size=len(bank))
    name, ir = bank[params["rir_index"]]
    params["rir_name"] = name
    out = fft_convolve(wf, ir)
    return out, DegradationRecord(K.REAL, params)


# ---------------------------------------------------------------------------
# Amplitude group

def apply_clipping(wf: Waveform, rng: np.random.Generator, level: float | None = None,
                   hidden: bool = False):
    peak = wf.peak
    if peak == 0:
        raise AudioError("cannot clip silent audio")
    if level is None:
        level = sample_params(K.CLIP, rng)["level"]
    scaled = wf.data * (level / peak)
    clipped_fraction = float(np.mean(np.abs(scaled) > 1.0))
    out = np.clip(scaled, -1.0, 1.0)
    params = {"level": float(level), "clipped_fraction": clipped_fraction}
    return wf.with_data(out), DegradationRecord(K.CLIP, params, hidden=hidden)


def apply_volume(wf: Waveform, rng: np.random.Generator):
    peak = wf.peak
    if peak == 0:
        raise AudioError("cannot rescale silent audio")
    params = sample_params(K.VOLUME, rng)
    out = wf.data * (params["level"] / peak)
    return wf.with_data(out), DegradationRecord(K.VOLUME, params)


# ---------------------------------------------------------------------------
# Stereo group

def fold_stereo(wf: Waveform):
    """Collapse to mono if the channels differ enough; None when not eligible.

    Eligibility: population std of (L - R) strictly above STEREO_STD_THRESHOLD.
    The fold keeps two identical channels so downstream stereo layout holds.
    """
    if wf.channels != 2:
        raise AudioError("stereo fold requires two channels")
    lr_std = float(np.std(wf.data[0] - wf.data[1]))
    if not lr_std > STEREO_STD_THRESHOLD:
        return None
    mono = wf.data.mean(axis=0)
    out = wf.with_data(np.vstack([mono, mono]))
    return out, DegradationRecord(K.STEREO, {"lr_std": lr_std})


# ---------------------------------------------------------------------------
# Dispatcher

def apply_degradation(wf: Waveform, kind: DegradationKind, rng: np.random.Generator,
                      banks: Banks | None = None):
    """Apply one degradation by kind. Returns (waveform, record), or None when
    a stereo fold is not eligible."""
    if kind in SHELF_SETTINGS:
        return apply_shelf_eq(wf, kind, rng)
    if kind in BAND_SETTINGS:
        return apply_bandpass_eq(wf, kind, rng)
    if kind == K.CLARITY:
        return apply_clarity(wf, rng)
    if kind == K.XBAND:
        return apply_xband(wf, rng)
    if kind == K.MIC:
        if banks is None:
            raise AudioError("microphone degradation needs banks.mic")
        return apply_mic_tf(wf, banks.mic, rng)
    if kind == K.COMP:
        return apply_compressor(wf, rng)
    if kind == K.PUNCH:
        return apply_transient_shaper(wf, rng)
    if kind in ROOM_DIM_RANGES:
        return apply_room_reverb(wf, kind, rng)
    if kind == K.REAL:
        if banks is None:
            raise AudioError("real-RIR degradation needs banks.rir")
        return apply_real_rir(wf, banks.rir, rng)
    if kind == K.CLIP:
        return apply_clipping(wf, rng)
    if kind == K.VOLUME:
        return apply_volume(wf, rng)
    if kind == K.STEREO:
        return fold_stereo(wf)
    raise ValueError(f"unknown degradation kind {kind!r}")


# Documented parameter ranges, used by record validation and property tests.
PARAM_RANGES: dict[DegradationKind, dict[str, tuple[float, float]]] = {
    K.BRIGHT: {"gain_db": (6.0, 15.0)},
    K.DARK: {"gain_db": (6.0, 15.0)},
    K.AIRY: {"gain_db": (10.0, 20.0)},
    K.BOOM: {"gain_db": (10.0, 20.0)},
    K.WARM: {"gain_db": (6.0, 20.0)},
    K.MUD: {"gain_db": (6.0, 15.0)},
    K.VOCAL: {"gain_db": (6.0, 20.0)},
    K.CLARITY: {"order": (3, 5)},
    K.XBAND: {"n_bands": (8, 12), "gain_db_*": (-6.0, 6.0), "center_hz_*": (XBAND_FMIN, XBAND_FMAX)},
    K.COMP: {"attack_ms": (3.0, 80.0), "release_ms": (80.0, 250.0),
             "threshold_db": (-45.0, -38.0), "ratio": (6.0, 45.0), "makeup_db": (16.0, 25.0)},
    K.PUNCH: {"reduction_db": (8.0, 15.0)},
    K.SMALL: {"dim_x_m": (4.0, 8.0), "dim_y_m": (4.0, 7.0), "dim_z_m": (2.5, 3.5),
              "absorption": ROOM_ABSORPTION_RANGE},
    K.BIG: {"dim_x_m": (7.0, 15.0), "dim_y_m": (8.0, 18.0), "dim_z_m": (4.0, 14.0),
            "absorption": ROOM_ABSORPTION_RANGE, "absorption_wall_*": BIG_WALL_ABSORPTION_RANGE},
    K.MIX: {"dim_x_m": (3.0, 7.0), "dim_y_m": (3.0, 9.0), "dim_z_m": (2.5, 4.0),
            "absorption": ROOM_ABSORPTION_RANGE},
    K.MIC: {"ir_index": (0, 10**9)},
    K.REAL: {"rir_index": (0, 10**9)},
}
PARAM_CHOICES: dict[DegradationKind, dict[str, tuple]] = {
    K.CLIP: {"level": CLIP_LEVELS},
    K.VOLUME: {"level": VOLUME_LEVELS},
}


def validate_record(rec: DegradationRecord) -> None:
    """Raise if a sampled parameter falls outside its documented range."""
    ranges = PARAM_RANGES.get(rec.kind, {})
    wildcard = {key[:-1]: rng_ for key, rng_ in ranges.items() if key.endswith("*")}
    for name, value in rec.params.items():
        if isinstance(value, str):
            continue
        bound = ranges.get(name)
        if bound is None:
            for prefix, rng_ in wildcard.items():
                if name.startswith(prefix):
                    bound = rng_
                    break
        if bound is not None and not bound[0] <= value <= bound[1]:
            raise ValueError(f"{rec.kind.value}.{name}={value} outside {bound}")
    for name, choices in PARAM_CHOICES.get(rec.kind, {}).items():
        if rec.params.get(name) not in choices:
            raise ValueError(f"{rec.kind.value}.{name}={rec.params.get(name)} not in {choices}")
    if rec.hidden and rec.kind != K.CLIP:
        raise ValueError("only clipping records can be hidden")
