"""Desk-scale rectified-flow restoration model.

The latent codec is an orthonormal per-frame DCT (exactly invertible), the
text embedder is a closed-vocabulary template lookup, and the velocity
network is a small conditioned residual stack in plain numpy with
hand-written gradients. Training regresses the straight-line velocity
between degraded (t=1) and clean (t=0) latents.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass

import numpy as np
from scipy.fft import dct, idct

from .audio import AudioError, Waveform

GENERIC_PROMPTS = (
    "Make it sound better!",
    "Master this track for me, please!",
    "Improve this!",
    "Can you improve the sound of this song?",
)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class FlowConfig:
    frame_len: int = 512
    hidden: int = 256
    blocks: int = 4
    text_dim: int = 64
    time_dim: int = 32
    fallback_rows: int = 256
    lr: float = 1e-3
    batch_size: int = 16
    seed: int = 0
    p_drop_prompt: float = 0.10
    p_generic_prompt: float = 0.10
    p_audio_cue: float = 0.25
    cue_min_s: float = 5.0
    cue_max_s: float = 15.0

    @property
    def latent_dim(self) -> int:
        return 2 * self.frame_len


# ---------------------------------------------------------------------------
# Latent codec: non-overlapping frames, orthonormal DCT-II per channel,
# channels stacked along the feature axis.

@dataclass(frozen=True)
class LatentSeq:
    data: np.ndarray  # (frames, 2 * frame_len)
    frame_len: int
    n_samples: int
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]


def encode_latent(wf: Waveform, frame_len: int = 512) -> LatentSeq:
    wf = wf.to_stereo()
    n = wf.n_samples
    pad = (-n) % frame_len
    x = np.pad(wf.data, ((0, 0), (0, pad)))
    frames = x.reshape(2, -1, frame_len)
    coef = dct(frames, type=2, norm="ortho", axis=2)
    data = np.concatenate([coef[0], coef[1]], axis=1)
    return LatentSeq(data, frame_len, n, wf.sample_rate)


def decode_latent(latent: LatentSeq) -> Waveform:
    f = latent.frame_len
    coef = np.stack([latent.data[:, :f], latent.data[:, f:]])
    frames = idct(coef, type=2, norm="ortho", axis=2)
    x = frames.reshape(2, -1)[:, : latent.n_samples]
    return Waveform(x, latent.sample_rate)


# ---------------------------------------------------------------------------
# Timestep distribution and flow algebra.

def sample_timestep(rng: np.random.Generator) -> float:
    """Half uniform, half linearly tilted toward t=1 (density 2t); the
    mixture emphasizes heavily degraded interpolants. Mean is 7/12."""
    if rng.random() < 0.5:
        return float(rng.random())
    return float(np.sqrt(rng.random()))


@dataclass(frozen=True)
class PromptEmbedding:
    """Resolved prompt: embedding-table rows plus how the text resolved."""

    ids: tuple[int, ...]
    source: str  # "templates" | "generic" | "empty"


@dataclass(frozen=True)
class AudioCue:
    vector: np.ndarray
    present: bool
    cue_len_s: float = 0.0

    @staticmethod
    def absent(dim: int) -> "AudioCue":
        return AudioCue(np.zeros(dim), False)

    @staticmethod
    def from_latent(latent: LatentSeq, cue_len_s: float) -> "AudioCue":
        n = int(round(cue_len_s * latent.sample_rate / latent.frame_len))
        n = max(1, min(n, latent.n_frames))
        return AudioCue(latent.data[:n].mean(axis=0), True, cue_len_s)


@dataclass(frozen=True)
class FlowBatch:
    x_t: np.ndarray
    t: float
    v_t: np.ndarray
    prompt: PromptEmbedding
    cue: AudioCue


def make_training_example(x0: LatentSeq, x1: LatentSeq, rng: np.random.Generator) -> FlowBatch:
    """Interpolate x_t = t*x1 + (1-t)*x0 and target velocity v = x0 - x1."""
    if x0.data.shape != x1.data.shape:
        raise AudioError(f"latent shapes differ: {x0.data.shape} vs {x1.data.shape}")
    t = sample_timestep(rng)
    x_t = t * x1.data + (1.0 - t) * x0.data
    v_t = x0.data - x1.data
    return FlowBatch(x_t, t, v_t, PromptEmbedding((), "empty"), AudioCue.absent(x0.dims))


# ---------------------------------------------------------------------------
# Closed-vocabulary text embedding.

_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


def _norm(s: str) -> str:
    return " ".join(s.split())


class TemplateVocab:
    """Maps instruction sentences to embedding-table rows.

    Rows: one per bank template, then one shared generic row, then
    fallback_rows hash buckets for unrecognized sentences.
    """

    def __init__(self, bank: dict[str, list[str]], fallback_rows: int = 256):
        self.bank = {k: list(v) for k, v in bank.items()}
        self.fallback_rows = fallback_rows
        self._row_of: dict[str, int] = {}
        row = 0
        for kind in self.bank:
            for sent in self.bank[kind]:
                key = _norm(sent)
                if key not in self._row_of:
                    self._row_of[key] = row
                row += 1
        self.generic_row = row
        self.first_fallback = row + 1
        self.n_rows = row + 1 + fallback_rows

    def embed(self, text: str) -> PromptEmbedding:
        text = _norm(text)
        if not text:
            return PromptEmbedding((), "empty")
        if text in map(_norm, GENERIC_PROMPTS):
            return PromptEmbedding((self.generic_row,), "generic")
        ids = []
        for sent in _SENT_SPLIT.split(text):
            key = _norm(sent)
            if not key:
                continue
            row = self._row_of.get(key)
            if row is None:
                digest = hashlib.sha256(key.encode("utf-8")).digest()
                row = self.first_fallback + int.from_bytes(digest[:4], "little") % self.fallback_rows
            ids.append(row)
        return PromptEmbedding(tuple(ids), "templates")


# ---------------------------------------------------------------------------
# Velocity network.

def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _shift(h: np.ndarray, o: int) -> np.ndarray:
    if o == 0:
        return h
    z = np.zeros_like(h)
    if o > 0:
        z[:-o] = h[o:]
    else:
        z[-o:] = h[:o]
    return z


_OFFSETS = (-2, -1, 0, 1, 2)


class VelocityModel:
    """Per-frame projection -> conditioned residual blocks -> zero-init output.

    Each block mixes a +-2-frame temporal window and applies a pointwise
    SiLU, modulated by scale/shift vectors computed from the concatenated
    [sinusoidal t-embedding | prompt embedding | pooled audio cue].
    """

    def __init__(self, config: FlowConfig, vocab: TemplateVocab,
                 rng: np.random.Generator | None = None,
                 params: dict[str, np.ndarray] | None = None):
        self.config = config
        self.vocab = vocab
        d, h = config.latent_dim, config.hidden
        self.cond_dim = config.time_dim + config.text_dim + d
        if params is not None:
            self.params = params
            return
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        p: dict[str, np.ndarray] = {
            "w_in": rng.normal(0.0, d ** -0.5, (d, h)),
            "b_in": np.zeros(h),
            "w_out": np.zeros((h, d)),
            "b_out": np.zeros(d),
            "text_emb": rng.normal(0.0, 0.02, (vocab.n_rows, config.text_dim)),
        }
        for k in range(config.blocks):
            p[f"tmix_{k}"] = rng.normal(0.0, (5 * h) ** -0.5, (5, h, h))
            p[f"b_tmix_{k}"] = np.zeros(h)
            p[f"w_mod_{k}"] = np.zeros((self.cond_dim, 2 * h))
            p[f"b_mod_{k}"] = np.zeros(2 * h)
        self.params = p

    # -- conditioning pieces ------------------------------------------------

    def time_embedding(self, t: float) -> np.ndarray:
        half = self.config.time_dim // 2
        freqs = np.exp(np.linspace(0.0, np.log(1000.0), half))
        return np.concatenate([np.sin(freqs * t), np.cos(freqs * t)])

    def prompt_vector(self, prompt: PromptEmbedding) -> np.ndarray:
        if not prompt.ids:
            return np.zeros(self.config.text_dim)
        return self.params["text_emb"][list(prompt.ids)].mean(axis=0)

    def _cond(self, t: float, prompt: PromptEmbedding, cue: AudioCue) -> np.ndarray:
        cue_vec = cue.vector if cue.present else np.zeros(self.config.latent_dim)
        return np.concatenate([self.time_embedding(t), self.prompt_vector(prompt), cue_vec])

    # -- forward / backward --------------------------------------------------

    def forward(self, x: np.ndarray, t: float, prompt: PromptEmbedding, cue: AudioCue) -> np.ndarray:
        v, _ = self._forward(x, t, prompt, cue)
        if not np.isfinite(v).all():
            raise FloatingPointError("velocity output is non-finite (bad parameters?)")
        return v

    def _forward(self, x, t, prompt, cue):
        p = self.params
        c = self._cond(t, prompt, cue)
        h = x @ p["w_in"] + p["b_in"]
        cache = {"x": x, "c": c, "hs": [h], "us": [], "ms": [], "sigs": [], "ss": []}
        for k in range(self.config.blocks):
            tm = p[f"tmix_{k}"]
            u = p[f"b_tmix_{k}"] + sum(_shift(h, o) @ tm[j] for j, o in enumerate(_OFFSETS))
            mod = c @ p[f"w_mod_{k}"] + p[f"b_mod_{k}"]
            hh = self.config.hidden
            s, sh = mod[:hh], mod[hh:]
            m = u * (1.0 + s) + sh
            sig = _sigmoid(m)
            h = h + m * sig
            cache["us"].append(u)
            cache["ms"].append(m)
            cache["sigs"].append(sig)
            cache["ss"].append(s)
            cache["hs"].append(h)
        v = h @ p["w_out"] + p["b_out"]
        cache["h_last"] = h
        return v, cache

    def backward(self, cache, dv: np.ndarray) -> dict[str, np.ndarray]:
        p = self.params
        g = {k: np.zeros_like(v) for k, v in p.items()}
        g["w_out"] = cache["h_last"].T @ dv
        g["b_out"] = dv.sum(axis=0)
        dh = dv @ p["w_out"].T
        dc = np.zeros_like(cache["c"])
        for k in range(self.config.blocks - 1, -1, -1):
            u, m, sig, s = cache["us"][k], cache["ms"][k], cache["sigs"][k], cache["ss"][k]
            h_in = cache["hs"][k]
            da = dh  # residual branch
            dm = da * (sig + m * sig * (1.0 - sig))
            du = dm * (1.0 + s)
            ds = (dm * u).sum(axis=0)
            dsh = dm.sum(axis=0)
            dmod = np.concatenate([ds, dsh])
            g[f"w_mod_{k}"] = np.outer(cache["c"], dmod)
            g[f"b_mod_{k}"] = dmod
            dc += p[f"w_mod_{k}"] @ dmod
            tm = p[f"tmix_{k}"]
            gt = g[f"tmix_{k}"]
            for j, o in enumerate(_OFFSETS):
                gt[j] = _shift(h_in, o).T @ du
                dh = dh + _shift(du, -o) @ tm[j].T
            g[f"b_tmix_{k}"] = du.sum(axis=0)
        g["w_in"] = cache["x"].T @ dh
        g["b_in"] = dh.sum(axis=0)
        td = self.config.time_dim
        dprompt = dc[td:td + self.config.text_dim]
        prompt = cache["prompt"]
        if prompt.ids:
            for row in prompt.ids:
                g["text_emb"][row] += dprompt / len(prompt.ids)
        return g

    def loss_and_grads(self, x_t, t, v_target, prompt: PromptEmbedding, cue: AudioCue):
        """Mean-squared velocity error over all latent entries, with grads."""
        v_hat, cache = self._forward(x_t, t, prompt, cue)
        cache["prompt"] = prompt
        diff = v_hat - v_target
        loss = float((diff ** 2).mean())
        dv = 2.0 * diff / diff.size
        return loss, self.backward(cache, dv)

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}


def velocity_forward(model: VelocityModel, x_t, t, prompt, cue) -> np.ndarray:
    return model.forward(np.asarray(x_t, dtype=np.float64), t, prompt, cue)


# ---------------------------------------------------------------------------
# Optimizer and training step.

class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.step_count = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.step_count
        corr2 = 1.0 - b2 ** self.step_count
        for k, gk in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * gk
            self.v[k] = b2 * self.v[k] + (1 - b2) * gk * gk
            params[k] -= self.lr * (self.m[k] / corr1) / (np.sqrt(self.v[k] / corr2) + self.eps)


def train_step(model: VelocityModel, pairs, rng: np.random.Generator, optimizer: Adam) -> float:
    """One optimizer update over a batch of (x0, x1, prompt_text, cue_latent).

    Per sample: the prompt is dropped or swapped for a generic phrase with
    the configured probabilities, the audio cue is pooled from a 5-15 s
    stretch of the cue latent and kept with probability p_audio_cue, the
    timestep comes from the skewed sampler, and the loss is the MSE between
    predicted and target velocity.
    """
    if not pairs:
        raise ValueError("empty training batch")
    cfg = model.config
    total = 0.0
    grad_sum: dict[str, np.ndarray] | None = None
    for x0, x1, prompt_text, cue_latent in pairs:
        u = rng.random()
        if u < cfg.p_drop_prompt:
            text = ""
        elif u < cfg.p_drop_prompt + cfg.p_generic_prompt:
            text = GENERIC_PROMPTS[int(rng.integers(len(GENERIC_PROMPTS)))]
        else:
            text = prompt_text
        prompt = model.vocab.embed(text)

        if cue_latent is not None and rng.random() < cfg.p_audio_cue:
            cue_len = float(rng.uniform(cfg.cue_min_s, cfg.cue_max_s))
            cue = AudioCue.from_latent(cue_latent, cue_len)
        else:
            cue = AudioCue.absent(cfg.latent_dim)

        t = sample_timestep(rng)
        x_t = t * x1.data + (1.0 - t) * x0.data
        v_t = x0.data - x1.data
        loss, grads = model.loss_and_grads(x_t, t, v_t, prompt, cue)
        total += loss
        if grad_sum is None:
            grad_sum = grads
        else:
            for k in grad_sum:
                grad_sum[k] += grads[k]

    n = len(pairs)
    mean_loss = total / n
    if not np.isfinite(mean_loss):
        raise FloatingPointError(f"non-finite training loss {mean_loss} over batch of {n}")
    for k in grad_sum:
        grad_sum[k] /= n
    optimizer.step(model.params, grad_sum)
    return mean_loss


# ---------------------------------------------------------------------------
# Checkpoints: npz blob of named tensors plus a JSON config header.

def save_checkpoint(model: VelocityModel, path) -> None:
    meta = json.dumps({
        "format_version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "prompt_bank": model.vocab.bank,
        "fallback_rows": model.vocab.fallback_rows,
    })
    with open(path, "wb") as f:
        np.savez(f, __meta__=np.array(meta), **model.params)


def load_checkpoint(path) -> VelocityModel:
    with np.load(path, allow_pickle=False) as blob:
        meta = json.loads(str(blob["__meta__"]))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise AudioError(f"unsupported checkpoint version {meta.get('format_version')}")
        params = {k: blob[k] for k in blob.files if k != "__meta__"}
    config = FlowConfig(**meta["config"])
    vocab = TemplateVocab(meta["prompt_bank"], meta["fallback_rows"])
    return VelocityModel(config, vocab, params=params)
