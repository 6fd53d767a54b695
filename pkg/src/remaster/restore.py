"""Inference: ODE integration of the learned velocity field and full-song
restoration with chunking, audio-cue chaining, and crossfaded stitching.

Integration runs in progress s from 0 to 1 starting at the degraded latent;
the model's time input is t = 1 - s, so t=1 marks the degraded end of the
path and t=0 the clean end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioError, Waveform
from .flow import (AudioCue, LatentSeq, PromptEmbedding, VelocityModel, decode_latent,
                   encode_latent)


@dataclass(frozen=True)
class SolverConfig:
    kind: str = "euler"  # "euler" | "rk4"
    steps: int = 10
    guidance: float = 1.0

    def __post_init__(self):
        if self.kind not in ("euler", "rk4"):
            raise ValueError(f"unknown solver {self.kind!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.guidance < 0:
            raise ValueError("guidance scale must be >= 0")


@dataclass(frozen=True)
class ChunkPlan:
    chunk_s: float = 30.0
    overlap_s: float = 10.0
    cue_s: float = 10.0

    def __post_init__(self):
        if not 0 < self.overlap_s < self.chunk_s:
            raise ValueError("need 0 < overlap < chunk length")
        if self.cue_s > self.overlap_s:
            raise ValueError("cue length cannot exceed the overlap")


def integrate(model: VelocityModel, x1: np.ndarray, prompt: PromptEmbedding,
              cue: AudioCue, cfg: SolverConfig) -> np.ndarray:
    """Integrate the velocity field from the degraded latent toward clean.

    Uniform steps h = 1/steps; with guidance w != 1 the field is
    v_uncond + w * (v_cond - v_uncond) using an empty-prompt pass.
    """
    empty = model.vocab.embed("") if cfg.guidance != 1.0 else None

    def fieldfn(x, s):
        t = 1.0 - s
        v = model.forward(x, t, prompt, cue)
        if empty is not None:
            v_u = model.forward(x, t, empty, cue)
            v = v_u + cfg.guidance * (v - v_u)
        return v

    h = 1.0 / cfg.steps
    x = np.array(x1, dtype=np.float64, copy=True)
    for i in range(cfg.steps):
        s = i * h
        if cfg.kind == "euler":
            x = x + h * fieldfn(x, s)
        else:
            k1 = fieldfn(x, s)
            k2 = fieldfn(x + 0.5 * h * k1, s + 0.5 * h)
            k3 = fieldfn(x + 0.5 * h * k2, s + 0.5 * h)
            k4 = fieldfn(x + h * k3, s + h)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x).all():
            raise FloatingPointError(f"integration diverged at step {i + 1}/{cfg.steps}")
    return x


def restore_segment(wf: Waveform, prompt_text: str, cue: Waveform | None,
                    model: VelocityModel, solver: SolverConfig,
                    chunk_s: float = 30.0) -> Waveform:
    """Restore one chunk; inputs shorter than the chunk are zero-padded and
    trimmed back. An empty prompt runs the model in auto-correction mode."""
    chunk_len = int(round(chunk_s * wf.sample_rate))
    n = wf.n_samples
    if n > chunk_len:
        raise AudioError(f"segment longer than {chunk_s}s chunk ({n} samples)")
    padded = wf.to_stereo()
    if n < chunk_len:
        padded = padded.with_data(np.pad(padded.data, ((0, 0), (0, chunk_len - n))))
    x1 = encode_latent(padded, model.config.frame_len)
    prompt = model.vocab.embed(prompt_text or "")
    if cue is not None:
        cue_latent = encode_latent(cue.to_stereo(), model.config.frame_len)
        cue_vec = AudioCue.from_latent(cue_latent, cue.duration)
    else:
        cue_vec = AudioCue.absent(model.config.latent_dim)
    x0 = integrate(model, x1.data, prompt, cue_vec, solver)
    out = decode_latent(LatentSeq(x0, x1.frame_len, x1.n_samples, x1.sample_rate))
    return out.with_data(out.data[:, :n])


def crossfade_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear ramps (earlier 1->0, later 0->1) that sum to 1 at every sample."""
    late = np.linspace(0.0, 1.0, n)
    return 1.0 - late, late


def restore_song(wf: Waveform, prompt_text: str, model: VelocityModel,
                 solver: SolverConfig, plan: ChunkPlan = ChunkPlan()) -> Waveform:
    """Chunked full-song restoration.

    Segments start every (chunk - overlap) seconds; each segment after the
    first is conditioned on the last cue_s seconds of the previous segment's
    restored output, and overlapping regions are linearly crossfaded.
    """
    wf = wf.to_stereo()
    sr = wf.sample_rate
    chunk = int(round(plan.chunk_s * sr))
    overlap = int(round(plan.overlap_s * sr))
    cue_len = int(round(plan.cue_s * sr))
    hop = chunk - overlap
    n = wf.n_samples

    offsets = [0]
    while offsets[-1] + chunk < n:
        offsets.append(offsets[-1] + hop)

    out = np.zeros_like(wf.data)
    prev_segment: Waveform | None = None
    for k, off in enumerate(offsets):
        seg_in = wf.with_data(wf.data[:, off:min(off + chunk, n)])
        cue = None
        if prev_segment is not None:
            cue = prev_segment.with_data(prev_segment.data[:, -cue_len:])
        restored = restore_segment(seg_in, prompt_text, cue, model, solver, plan.chunk_s)
        seg = restored.data
        if k == 0:
            out[:, off:off + seg.shape[1]] = seg
        else:
            w_early, w_late = crossfade_weights(overlap)
            region = slice(off, off + overlap)
            out[:, region] = out[:, region] * w_early + seg[:, :overlap] * w_late
            out[:, off + overlap:off + seg.shape[1]] = seg[:, overlap:]
        prev_segment = restored
    return wf.with_data(out)
