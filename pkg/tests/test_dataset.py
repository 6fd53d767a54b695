import json
from collections import Counter

import numpy as np
import pytest

from remaster.audio import Waveform, load_audio, write_wav
from remaster.banks import default_banks
from remaster.dataset import (CATEGORY_ORDER, GROUP_PROBS, KIND_WEIGHTS, ONCE_ONLY_KINDS,
                              DatasetError, ManifestRow, VariantPlan, build_dataset,
                              compose_prompt, extract_excerpt, render_variant,
                              sample_variant_plans)
from remaster.degrade import CATEGORY, Category, DegradationKind as K, DegradationRecord
from remaster.prompts import default_prompt_bank
from remaster.synth import synthesize_music

SR = 44100


@pytest.fixture(scope="module")
def banks():
    return default_banks()


@pytest.fixture(scope="module")
def prompt_bank():
    return default_prompt_bank()


@pytest.fixture(scope="module")
def excerpt_30s():
    return synthesize_music(30.0, seed=21)


class TestExtractExcerpt:
    def test_offset_within_central_span(self):
        wf = synthesize_music(100.0, seed=1)
        for seed in range(10):
            ex, offset = extract_excerpt(wf, np.random.default_rng(seed))
            assert ex.duration == pytest.approx(30.0, abs=1e-3)
            assert 15.0 <= offset <= 55.0 + 1e-9

    def test_minimum_duration_start_forced(self):
        wf = synthesize_music(30.0 / 0.70, seed=2)
        ex, offset = extract_excerpt(wf, np.random.default_rng(0))
        # degenerate window: [0.15 D, 0.85 D - 30] collapses to a point
        assert offset == pytest.approx(0.15 * wf.duration, abs=1e-3)

    def test_too_short_rejected(self):
        wf = synthesize_music(20.0, seed=3)
        with pytest.raises(DatasetError):
            extract_excerpt(wf, np.random.default_rng(0))


class TestVariantPlans:
    def test_arity_multiset(self):
        for seed in range(50):
            plans = sample_variant_plans(np.random.default_rng(seed))
            assert sorted(p.arity for p in plans) == [1, 1, 1, 1, 2, 2, 3]

    def test_no_category_repeats_within_plan(self):
        for seed in range(200):
            for plan in sample_variant_plans(np.random.default_rng(seed)):
                cats = plan.categories
                assert len(set(cats)) == len(cats)

    def test_singles_distinct(self):
        for seed in range(200):
            plans = sample_variant_plans(np.random.default_rng(seed))
            singles = [p.effects[0] for p in plans if p.arity == 1]
            assert len(set(singles)) == 4

    def test_once_only_kinds_at_most_once_overall(self):
        for seed in range(300):
            plans = sample_variant_plans(np.random.default_rng(seed))
            counts = Counter(k for p in plans for k in p.effects)
            for kind in ONCE_ONLY_KINDS:
                assert counts[kind] <= 1

    def test_first_single_slot_matches_nominal_category_probs(self):
        # the first draw is unconstrained, so its category frequencies are
        # the nominal group probabilities (Monte-Carlo, +-2% absolute)
        n = 10_000
        counts = Counter()
        for seed in range(n):
            plans = sample_variant_plans(np.random.default_rng(seed))
            counts[CATEGORY[plans[0].effects[0]]] += 1
        for cat, expected in GROUP_PROBS.items():
            assert abs(counts[cat] / n - expected) <= 0.02

    def test_kind_weights_within_eq(self):
        n = 10_000
        counts = Counter()
        for seed in range(n):
            plans = sample_variant_plans(np.random.default_rng(seed))
            kind = plans[0].effects[0]
            if CATEGORY[kind] == Category.EQ:
                counts[kind] += 1
        total = sum(counts.values())
        weights = KIND_WEIGHTS[Category.EQ]
        wsum = sum(weights.values())
        for kind, w in weights.items():
            assert abs(counts[kind] / total - w / wsum) <= 0.03

    def test_triple_has_three_distinct_categories(self):
        for seed in range(100):
            triple = [p for p in sample_variant_plans(np.random.default_rng(seed))
                      if p.arity == 3][0]
            assert len(set(triple.categories)) == 3


class TestComposePrompt:
    def test_sentences_come_from_bank(self, prompt_bank, rng):
        recs = [DegradationRecord(K.CLIP, {"level": 2.0})]
        p1, p2 = compose_prompt(recs, prompt_bank, rng)
        assert p1 in prompt_bank["clip"]
        assert p2 in prompt_bank["clip"]

    def test_hidden_effects_excluded(self, prompt_bank, rng):
        recs = [DegradationRecord(K.CLIP, {"level": 2.0}, hidden=True)]
        assert compose_prompt(recs, prompt_bank, rng) == ("", "")

    def test_two_sentences_for_two_effects(self, prompt_bank, rng):
        recs = [DegradationRecord(K.MUD, {"gain_db": 8.0}),
                DegradationRecord(K.SMALL, {})]
        p1, _ = compose_prompt(recs, prompt_bank, rng)
        first, second = p1.split(". ", 1) if ". " in p1 else p1.split("! ", 1)
        sentences = [s for s in prompt_bank["mud"] if p1.startswith(s)]
        assert sentences, "first sentence must come from the mud templates"
        rest = p1[len(sentences[0]) + 1:]
        assert rest in prompt_bank["small"]

    def test_missing_kind_rejected(self, rng):
        recs = [DegradationRecord(K.MUD, {"gain_db": 8.0})]
        with pytest.raises(DatasetError):
            compose_prompt(recs, {"clip": ["x."] * 8}, rng)


class TestRenderVariant:
    def test_category_application_order(self, excerpt_30s, banks, prompt_bank):
        rng = np.random.default_rng(8)
        plan = VariantPlan((K.CLIP, K.WARM, K.COMP))
        _, records, _, _, _ = render_variant(excerpt_30s, plan, banks, prompt_bank, rng)
        applied = [r.kind for r in records if not r.hidden]
        order = [CATEGORY_ORDER.index(CATEGORY[k]) for k in applied]
        assert order == sorted(order)
        assert applied[0] == K.WARM and applied[-1] == K.CLIP

    def test_volume_plan_has_no_normalization(self, excerpt_30s, banks, prompt_bank):
        rng = np.random.default_rng(9)
        _, _, _, _, norm = render_variant(excerpt_30s, VariantPlan((K.VOLUME,)),
                                          banks, prompt_bank, rng)
        assert norm is None

    def test_plain_eq_plan_normalized(self, excerpt_30s, banks, prompt_bank):
        rng = np.random.default_rng(10)
        out, records, _, hidden, norm = render_variant(
            excerpt_30s, VariantPlan((K.BRIGHT,)), banks, prompt_bank, rng)
        assert not hidden
        assert norm is not None and 0.8 <= norm <= 1.0
        assert abs(out.peak - norm) < 1e-7

    def test_hidden_clip_only_for_comp_or_reverb(self, excerpt_30s, banks, prompt_bank):
        hits = 0
        for seed in range(60):
            rng = np.random.default_rng(seed)
            _, records, prompts, hidden, norm = render_variant(
                excerpt_30s, VariantPlan((K.COMP,)), banks, prompt_bank, rng)
            if hidden:
                hits += 1
                assert records[-1].kind == K.CLIP and records[-1].hidden
                assert norm is None
                for sentence in prompts[0].split(". "):
                    assert not any(sentence.rstrip(".") == t.rstrip(".")
                                   for t in prompt_bank["clip"])
        assert hits > 0  # 15% of 60 should fire at least once

    def test_no_hidden_clip_for_pure_eq(self, excerpt_30s, banks, prompt_bank):
        for seed in range(40):
            rng = np.random.default_rng(seed)
            _, records, _, hidden, _ = render_variant(
                excerpt_30s, VariantPlan((K.WARM,)), banks, prompt_bank, rng)
            assert not hidden
            assert all(not r.hidden for r in records)

    def test_stereo_ineligible_replaced(self, banks, prompt_bank):
        # mono-ish content: stereo fold cannot trigger, another category lands
        t = np.arange(SR * 30) / SR
        x = 0.5 * np.sin(2 * np.pi * 220 * t)
        wf = Waveform(np.vstack([x, x]), SR)
        rng = np.random.default_rng(3)
        _, records, _, _, _ = render_variant(wf, VariantPlan((K.STEREO,)),
                                             banks, prompt_bank, rng)
        assert len(records) >= 1
        assert all(r.kind != K.STEREO for r in records)

    def test_duration_preserved(self, excerpt_30s, banks, prompt_bank):
        for plan in (VariantPlan((K.MIX,)), VariantPlan((K.XBAND, K.PUNCH))):
            out, _, _, _, _ = render_variant(excerpt_30s, plan, banks, prompt_bank,
                                             np.random.default_rng(4))
            assert out.n_samples == excerpt_30s.n_samples


class TestBuildDataset:
    @pytest.fixture(scope="class")
    def small_corpus(self, tmp_path_factory):
        corpus = tmp_path_factory.mktemp("corpus")
        for i in range(3):
            write_wav(synthesize_music(43.5, seed=400 + i), corpus / f"song{i}.wav")
        return corpus

    def test_counts_and_schema(self, small_corpus, tmp_path):
        manifest = build_dataset(small_corpus, tmp_path / "ds", seed=7)
        rows = [json.loads(l) for l in open(manifest) if l.strip()]
        assert len(rows) == 21
        clean = {r["clean_path"] for r in rows}
        assert len(clean) == 3
        for row in rows:
            assert set(row) == {"clip_id", "variant_index", "offset_seconds", "effects",
                                "prompts", "hidden_clipping", "normalization_peak",
                                "degraded_path", "clean_path"}
            assert len(row["prompts"]) == 2 and all(row["prompts"])
            assert (tmp_path / "ds" / row["degraded_path"]).exists()
            visible = [e for e in row["effects"] if not e["hidden"]]
            assert 1 <= len(visible) <= 3
            if row["hidden_clipping"]:
                assert any(e["hidden"] and e["kind"] == "clip" for e in row["effects"])
                assert row["normalization_peak"] is None
            has_amp = any(CATEGORY[K(e["kind"])] == Category.AMPLITUDE
                          for e in row["effects"])
            if row["normalization_peak"] is not None:
                assert not has_amp
                assert 0.8 <= row["normalization_peak"] <= 1.0

    def test_degraded_duration_matches_clean(self, small_corpus, tmp_path):
        manifest = build_dataset(small_corpus, tmp_path / "ds", seed=7)
        row = json.loads(open(manifest).readline())
        clean = load_audio(tmp_path / "ds" / row["clean_path"])
        degraded = load_audio(tmp_path / "ds" / row["degraded_path"])
        assert clean.n_samples == degraded.n_samples == int(30.0 * SR)

    def test_deterministic_and_order_independent(self, small_corpus, tmp_path):
        m1 = build_dataset(small_corpus, tmp_path / "a", seed=9)
        m2 = build_dataset(small_corpus, tmp_path / "b", seed=9)
        assert open(m1, "rb").read() == open(m2, "rb").read()

    def test_resume_skips_existing(self, small_corpus, tmp_path):
        out = tmp_path / "ds"
        m1 = build_dataset(small_corpus, out, seed=7)
        first = open(m1, "rb").read()
        clean_mtime = (out / "clean" / "song0.wav").stat().st_mtime_ns
        m2 = build_dataset(small_corpus, out, seed=7)
        assert open(m2, "rb").read() == first
        assert (out / "clean" / "song0.wav").stat().st_mtime_ns == clean_mtime

    def test_short_files_skipped(self, tmp_path):
        corpus = tmp_path / "c"
        corpus.mkdir()
        write_wav(synthesize_music(10.0, seed=1), corpus / "short.wav")
        write_wav(synthesize_music(43.5, seed=2), corpus / "ok.wav")
        manifest = build_dataset(corpus, tmp_path / "ds", seed=1)
        rows = [json.loads(l) for l in open(manifest) if l.strip()]
        assert {r["clip_id"] for r in rows} == {"ok"}

    def test_prompts_verbatim_from_bank(self, small_corpus, tmp_path, prompt_bank):
        manifest = build_dataset(small_corpus, tmp_path / "ds", seed=7)
        for line in open(manifest):
            row = json.loads(line)
            visible = [e["kind"] for e in row["effects"] if not e["hidden"]]
            for prompt in row["prompts"]:
                remaining = prompt
                for kind in visible:
                    match = [t for t in prompt_bank[kind] if remaining.startswith(t)]
                    assert match, f"prompt piece not in bank[{kind}]: {remaining[:50]}"
                    remaining = remaining[len(match[0]):].lstrip()
                assert remaining == ""
