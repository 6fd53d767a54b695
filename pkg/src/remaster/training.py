"""Training orchestration: turn a dataset manifest into latent pairs and run
the optimizer loop. The model itself lives in flow.py.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .audio import load_audio
from .flow import (Adam, FlowConfig, LatentSeq, TemplateVocab, VelocityModel,
                   encode_latent, save_checkpoint, train_step)
from .prompts import default_prompt_bank

log = logging.getLogger("remaster.training")


@dataclass
class TrainSettings:
    steps: int = 500
    batch_size: int = 8
    crop_frames: int = 256
    limit_rows: int | None = None
    log_every: int = 50
    # model/optimizer fields mirror FlowConfig
    frame_len: int = 512
    hidden: int = 64
    blocks: int = 2
    text_dim: int = 64
    time_dim: int = 32
    lr: float = 1e-3
    seed: int = 0
    p_drop_prompt: float = 0.10
    p_generic_prompt: float = 0.10
    p_audio_cue: float = 0.25
    cue_min_s: float = 5.0
    cue_max_s: float = 15.0

    def flow_config(self) -> FlowConfig:
        keys = {f.name for f in fields(FlowConfig)}
        vals = {f.name: getattr(self, f.name) for f in fields(self) if f.name in keys}
        return FlowConfig(**vals)


def _crop(latent: LatentSeq, start: int, frames: int) -> LatentSeq:
    data = latent.data[start:start + frames]
    return LatentSeq(data, latent.frame_len, data.shape[0] * latent.frame_len,
                     latent.sample_rate)


def load_pairs(manifest_path, frame_len: int, limit_rows: int | None = None):
    """Latent (clean, degraded, prompts) triples from a manifest, float32 in
    memory to keep 30 s latents affordable."""
    manifest_path = Path(manifest_path)
    rows = []
    with open(manifest_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rows.append(json.loads(line))
    if limit_rows is not None:
        rows = rows[:limit_rows]
    clean_cache: dict[str, LatentSeq] = {}
    pairs = []
    for row in rows:
        clean_rel = row["clean_path"]
        if clean_rel not in clean_cache:
            wf = load_audio(manifest_path.parent / clean_rel)
            lat = encode_latent(wf, frame_len)
            clean_cache[clean_rel] = LatentSeq(lat.data.astype(np.float32), frame_len,
                                               lat.n_samples, lat.sample_rate)
        wf = load_audio(manifest_path.parent / row["degraded_path"])
        lat = encode_latent(wf, frame_len)
        degraded = LatentSeq(lat.data.astype(np.float32), frame_len, lat.n_samples, lat.sample_rate)
        pairs.append((clean_cache[clean_rel], degraded, tuple(row["prompts"])))
    if not pairs:
        raise ValueError(f"no usable rows in {manifest_path}")
    return pairs


def _as_f64(latent: LatentSeq) -> LatentSeq:
    return LatentSeq(latent.data.astype(np.float64), latent.frame_len,
                     latent.n_samples, latent.sample_rate)


def train_loop(model: VelocityModel, pairs, settings: TrainSettings,
               rng: np.random.Generator) -> list[float]:
    """Random-crop batches from the pair pool; returns the loss history."""
    optimizer = Adam(model.params, lr=settings.lr)
    losses = []
    for step in range(settings.steps):
        batch = []
        for _ in range(settings.batch_size):
            clean, degraded, prompts = pairs[int(rng.integers(len(pairs)))]
            frames = min(settings.crop_frames, clean.n_frames)
            start = int(rng.integers(0, clean.n_frames - frames + 1))
            x0 = _as_f64(_crop(clean, start, frames))
            x1 = _as_f64(_crop(degraded, start, frames))
            prompt = prompts[int(rng.integers(len(prompts)))]
            batch.append((x0, x1, prompt, _as_f64(clean)))
        loss = train_step(model, batch, rng, optimizer)
        losses.append(loss)
        if settings.log_every and (step % settings.log_every == 0 or step == settings.steps - 1):
            log.info("step %d/%d loss %.6f", step, settings.steps, loss)
            print(f"step {step}/{settings.steps} loss {loss:.6f}", file=sys.stderr)
    return losses


def train_from_manifest(manifest_path, checkpoint_path, overrides: dict | None = None) -> Path:
    settings = TrainSettings()
    for key, value in (overrides or {}).items():
        if not hasattr(settings, key):
            raise ValueError(f"unknown training setting {key!r}")
        setattr(settings, key, value)
    config = settings.flow_config()
    vocab = TemplateVocab(default_prompt_bank())
    rng = np.random.default_rng(settings.seed)
    model = VelocityModel(config, vocab, rng=rng)
    pairs = load_pairs(manifest_path, settings.frame_len, settings.limit_rows)
    train_loop(model, pairs, settings, rng)
    checkpoint_path = Path(checkpoint_path)
    save_checkpoint(model, checkpoint_path)
    return checkpoint_path
