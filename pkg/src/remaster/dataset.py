"""Dataset construction: excerpting, variant-plan sampling, prompt
composition, hidden clipping, normalization, and manifest emission.

Every source clip yields one clean 30 s excerpt and seven degraded
variants (4 single, 2 double, 1 triple effect), each with two instruction
prompts and a JSONL manifest row. Per-clip RNG streams are derived from
(master seed, clip id), so results do not depend on corpus ordering.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import Waveform, load_audio, peak_normalize, read_wav, write_wav
from .banks import Banks, default_banks, load_banks
from .degrade import (CATEGORY, Category, DegradationKind, DegradationRecord, K,
                      apply_clipping, apply_degradation)
from .prompts import default_prompt_bank

log = logging.getLogger("remaster.dataset")

EXCERPT_S = 30.0
EXCERPT_SPAN = (0.15, 0.85)
MIN_TRACK_S = EXCERPT_S / (EXCERPT_SPAN[1] - EXCERPT_SPAN[0])
HIDDEN_CLIP_PROB = 0.15
NORMALIZATION_RANGE = (0.8, 1.0)
VARIANT_ARITIES = (1, 1, 1, 1, 2, 2, 3)
MAX_PLAN_RETRIES = 200

GROUP_PROBS: dict[Category, float] = {
    Category.EQ: 0.4,
    Category.DYNAMICS: 0.125,
    Category.REVERB: 0.225,
    Category.AMPLITUDE: 0.125,
    Category.STEREO: 0.125,
}

KIND_WEIGHTS: dict[Category, dict[DegradationKind, float]] = {
    Category.EQ: {K.XBAND: 7.0, K.MIC: 5.0, K.BRIGHT: 3.0, K.DARK: 3.0, K.AIRY: 2.0,
                  K.BOOM: 2.0, K.CLARITY: 3.0, K.MUD: 3.0, K.WARM: 3.0, K.VOCAL: 4.0},
    Category.DYNAMICS: {K.COMP: 2.5, K.PUNCH: 1.0},
    Category.REVERB: {K.SMALL: 0.15, K.BIG: 0.15, K.MIX: 0.30, K.REAL: 0.40},
    Category.AMPLITUDE: {K.CLIP: 3.0, K.VOLUME: 1.0},
    Category.STEREO: {K.STEREO: 1.0},
}

CATEGORY_ORDER = (Category.EQ, Category.DYNAMICS, Category.REVERB,
                  Category.AMPLITUDE, Category.STEREO)

# narrow-ranged, high-probability effects that may appear at most once
# across a clip's whole 7-variant set
ONCE_ONLY_KINDS = frozenset({K.STEREO, K.CLIP, K.PUNCH})

REVERB_KINDS = frozenset({K.SMALL, K.BIG, K.MIX, K.REAL})


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    path: Path
    duration: float
    genre_group: str | None = None


@dataclass(frozen=True)
class VariantPlan:
    effects: tuple[DegradationKind, ...]

    @property
    def arity(self) -> int:
        return len(self.effects)

    @property
    def categories(self) -> tuple[Category, ...]:
        return tuple(CATEGORY[k] for k in self.effects)


@dataclass(frozen=True)
class ManifestRow:
    clip_id: str
    variant_index: int
    offset_seconds: float
    effects: tuple[DegradationRecord, ...]
    prompts: tuple[str, str]
    hidden_clipping: bool
    normalization_peak: float | None
    degraded_path: str
    clean_path: str

    def to_json(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "variant_index": self.variant_index,
            "offset_seconds": self.offset_seconds,
            "effects": [e.to_json() for e in self.effects],
            "prompts": list(self.prompts),
            "hidden_clipping": self.hidden_clipping,
            "normalization_peak": self.normalization_peak,
            "degraded_path": self.degraded_path,
            "clean_path": self.clean_path,
        }


# ---------------------------------------------------------------------------
# Excerpting

def extract_excerpt(wf: Waveform, rng: np.random.Generator) -> tuple[Waveform, float]:
    """30 s window placed uniformly inside the central 15-85% span."""
    duration = wf.duration
    if duration < MIN_TRACK_S - 1e-9:
        raise DatasetError(f"track too short for excerpting: {duration:.2f}s < {MIN_TRACK_S:.2f}s")
    lo = EXCERPT_SPAN[0] * duration
    hi = EXCERPT_SPAN[1] * duration - EXCERPT_S
    offset = float(rng.uniform(lo, hi)) if hi > lo else lo
    n_ex = int(round(EXCERPT_S * wf.sample_rate))
    start = min(int(round(offset * wf.sample_rate)), wf.n_samples - n_ex)
    return wf.with_data(wf.data[:, start:start + n_ex]), start / wf.sample_rate


# ---------------------------------------------------------------------------
# Variant plan sampling

def _weighted_choice(rng: np.random.Generator, weights: dict):
    items = list(weights.items())
    total = sum(w for _, w in items)
    r = rng.random() * total
    acc = 0.0
    for item, w in items:
        acc += w
        if r < acc:
            return item
    return items[-1][0]


def _draw_plan(rng: np.random.Generator, arity: int) -> VariantPlan:
    cats: list[Category] = []
    remaining = dict(GROUP_PROBS)
    for _ in range(arity):
        cat = _weighted_choice(rng, remaining)
        cats.append(cat)
        del remaining[cat]
    kinds = tuple(_weighted_choice(rng, KIND_WEIGHTS[c]) for c in cats)
    return VariantPlan(kinds)


def _plan_ok(plan: VariantPlan, used_once: set, used_single: set) -> bool:
    seen = set()
    for kind in plan.effects:
        if kind in ONCE_ONLY_KINDS and (kind in used_once or kind in seen):
            return False
        seen.add(kind)
    if plan.arity == 1 and plan.effects[0] in used_single:
        return False
    return True


_ONCE_SUBSTITUTE = {K.CLIP: K.VOLUME, K.PUNCH: K.COMP}


def _fallback_plan(arity: int, used_once: set, used_single: set) -> VariantPlan:
    """Deterministic stand-in when rejection sampling keeps violating the
    once-only / no-repeat constraints: fill with top-weight unused EQ kinds."""
    eq_by_weight = sorted(KIND_WEIGHTS[Category.EQ], key=lambda k: (-KIND_WEIGHTS[Category.EQ][k], k.value))
    if arity == 1:
        for kind in eq_by_weight:
            if kind not in used_single:
                return VariantPlan((kind,))
        return VariantPlan((eq_by_weight[0],))
    kinds = [eq_by_weight[0], K.COMP, K.MIX][:arity]
    return VariantPlan(tuple(kinds))


def sample_variant_plans(rng: np.random.Generator) -> list[VariantPlan]:
    """Seven plans: 4 single, 2 double, 1 triple; at most one effect per
    category inside a plan, distinct single kinds, and the once-only kinds
    used at most once across the whole set."""
    plans: list[VariantPlan] = []
    used_once: set[DegradationKind] = set()
    used_single: set[DegradationKind] = set()
    for arity in VARIANT_ARITIES:
        plan = None
        for _ in range(MAX_PLAN_RETRIES):
            cand = _draw_plan(rng, arity)
            if _plan_ok(cand, used_once, used_single):
                plan = cand
                break
        if plan is None:
            plan = _fallback_plan(arity, used_once, used_single)
        used_once.update(k for k in plan.effects if k in ONCE_ONLY_KINDS)
        if plan.arity == 1:
            used_single.add(plan.effects[0])
        plans.append(plan)
    return plans


# ---------------------------------------------------------------------------
# Prompts

def compose_prompt(records, bank: dict[str, list[str]],
                   rng: np.random.Generator) -> tuple[str, str]:
    """Two independently sampled instruction strings, one sentence per
    non-hidden effect, joined in application order."""
    visible = [r for r in records if not r.hidden]
    for rec in visible:
        if rec.kind.value not in bank:
            raise DatasetError(f"prompt bank has no templates for {rec.kind.value!r}")
    out = []
    for _ in range(2):
        sentences = [bank[r.kind.value][int(rng.integers(len(bank[r.kind.value])))]
                     for r in visible]
        out.append(" ".join(sentences))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Variant rendering

def _order_kinds(plan: VariantPlan) -> list[DegradationKind]:
    return sorted(plan.effects, key=lambda k: CATEGORY_ORDER.index(CATEGORY[k]))


def _resample_category(rng: np.random.Generator, taken: set[Category]) -> DegradationKind:
    remaining = {c: p for c, p in GROUP_PROBS.items() if c not in taken and c != Category.STEREO}
    cat = _weighted_choice(rng, remaining)
    return _weighted_choice(rng, KIND_WEIGHTS[cat])


def render_variant(clean: Waveform, plan: VariantPlan, banks: Banks,
                   prompt_bank: dict[str, list[str]], rng: np.random.Generator):
    """Apply a plan to a clean excerpt.

    Effects run in category order EQ->Dynamics->Reverb->Amplitude->Stereo.
    Variants touching compression or reverb may pick up hidden clipping
    (never prompted); variants with neither an amplitude effect nor hidden
    clipping are peak-normalized to a random level in [0.8, 1.0].
    """
    wf = clean
    records: list[DegradationRecord] = []
    for kind in _order_kinds(plan):
        result = apply_degradation(wf, kind, rng, banks)
        if result is None:  # stereo fold not eligible: substitute a category
            replacement = _resample_category(rng, set(plan.categories))
            log.info("stereo fold not eligible; substituting %s", replacement.value)
            result = apply_degradation(wf, replacement, rng, banks)
        wf, rec = result
        records.append(rec)

    hidden = False
    if any(r.kind == K.COMP or r.kind in REVERB_KINDS for r in records):
        if rng.random() < HIDDEN_CLIP_PROB:
            wf, rec = apply_clipping(wf, rng, hidden=True)
            records.append(rec)
            hidden = True

    norm_peak = None
    has_amplitude = any(CATEGORY[r.kind] == Category.AMPLITUDE and not r.hidden for r in records)
    if not hidden and not has_amplitude:
        norm_peak = float(rng.uniform(*NORMALIZATION_RANGE))
        wf = peak_normalize(wf, norm_peak)

    prompts = compose_prompt(records, prompt_bank, rng)
    return wf, tuple(records), prompts, hidden, norm_peak


# ---------------------------------------------------------------------------
# Full build

def _clip_seed(master_seed: int, clip_id: str) -> np.random.SeedSequence:
    digest = hashlib.sha256(clip_id.encode("utf-8")).digest()
    return np.random.SeedSequence([master_seed, int.from_bytes(digest[:8], "little")])


def _file_sha(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


_WORKER_STATE: dict = {}


def _init_worker(banks: Banks, prompt_bank: dict) -> None:
    _WORKER_STATE["banks"] = banks
    _WORKER_STATE["prompt_bank"] = prompt_bank


def _build_clip(args):
    (clip_id, src_path, master_seed, out_dir) = args
    banks = _WORKER_STATE["banks"]
    prompt_bank = _WORKER_STATE["prompt_bank"]
    out_dir = Path(out_dir)
    rng = np.random.default_rng(_clip_seed(master_seed, clip_id))
    wf = load_audio(src_path)
    excerpt, offset = extract_excerpt(wf, rng)
    clean_rel = f"clean/{clip_id}.wav"
    write_wav(excerpt, out_dir / clean_rel)
    plans = sample_variant_plans(rng)
    rows = []
    for v, plan in enumerate(plans):
        degraded, records, prompts, hidden, norm_peak = render_variant(
            excerpt, plan, banks, prompt_bank, rng)
        degraded_rel = f"degraded/{clip_id}__v{v}.wav"
        write_wav(degraded, out_dir / degraded_rel)
        rows.append(ManifestRow(clip_id, v, offset, records, prompts, hidden,
                                norm_peak, degraded_rel, clean_rel).to_json())
    return clip_id, rows


def scan_corpus(corpus_dir) -> list[CorpusEntry]:
    corpus_dir = Path(corpus_dir)
    genre_map = {}
    genre_file = corpus_dir / "genres.json"
    if genre_file.exists():
        genre_map = json.loads(genre_file.read_text())
    entries = []
    for path in sorted(corpus_dir.glob("*.wav")):
        try:
            wf = read_wav(path)
        except Exception as exc:
            log.warning("skipping unreadable %s: %s", path.name, exc)
            continue
        entries.append(CorpusEntry(path.stem, path, wf.duration, genre_map.get(path.stem)))
    return entries


def build_dataset(corpus_dir, out_dir, seed: int = 1234, workers: int = 1,
                  banks_dir=None) -> Path:
    """Render the full corpus; returns the manifest path.

    Deterministic for a given seed; a rebuild into the same out_dir skips
    clips whose outputs already exist for the same seed and source content.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir / "clean", exist_ok=True)
    os.makedirs(out_dir / "degraded", exist_ok=True)
    banks = load_banks(banks_dir) if banks_dir else default_banks()
    prompt_bank = default_prompt_bank()
    if banks_dir and (Path(banks_dir) / "prompts.json").exists():
        from .prompts import load_prompt_bank
        prompt_bank = load_prompt_bank(Path(banks_dir) / "prompts.json")

    entries = scan_corpus(corpus_dir)
    manifest_path = out_dir / "manifest.jsonl"
    state_path = out_dir / "build_state.json"

    previous_rows: dict[str, list[dict]] = {}
    previous_state: dict = {}
    if manifest_path.exists() and state_path.exists():
        previous_state = json.loads(state_path.read_text())
        if previous_state.get("seed") == seed:
            with open(manifest_path, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        row = json.loads(line)
                        previous_rows.setdefault(row["clip_id"], []).append(row)

    tasks = []
    rows_by_clip: dict[str, list[dict]] = {}
    state = {"seed": seed, "clips": {}}
    for entry in entries:
        if entry.duration < MIN_TRACK_S - 1e-9:
            log.warning("skipping %s: %.1fs is too short", entry.id, entry.duration)
            continue
        sha = _file_sha(entry.path)
        state["clips"][entry.id] = sha
        cached = previous_rows.get(entry.id)
        if (cached is not None and len(cached) == len(VARIANT_ARITIES)
                and previous_state.get("clips", {}).get(entry.id) == sha
                and all((out_dir / r["degraded_path"]).exists() for r in cached)
                and (out_dir / cached[0]["clean_path"]).exists()):
            rows_by_clip[entry.id] = cached
            continue
        tasks.append((entry.id, str(entry.path), seed, str(out_dir)))

    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(banks, prompt_bank)) as pool:
            pending = {pool.submit(_build_clip, task): task[0] for task in tasks}
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    clip_id = pending.pop(fut)
                    try:
                        _, rows = fut.result()
                    except Exception as exc:
                        log.error("failed to build clip %s: %s", clip_id, exc)
                        state["clips"].pop(clip_id, None)
                        continue
                    rows_by_clip[clip_id] = rows
    else:
        _init_worker(banks, prompt_bank)
        for task in tasks:
            try:
                clip_id, rows = _build_clip(task)
            except Exception as exc:
                log.error("failed to build clip %s: %s", task[0], exc)
                state["clips"].pop(task[0], None)
                continue
            rows_by_clip[clip_id] = rows

    with open(manifest_path, "w", encoding="utf-8") as f:
        for clip_id in sorted(rows_by_clip):
            for row in rows_by_clip[clip_id]:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
    state_path.write_text(json.dumps(state, indent=2, sort_keys=True) + "\n")
    return manifest_path
