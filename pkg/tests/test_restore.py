import numpy as np
import pytest

from remaster.audio import Waveform
from remaster.flow import (AudioCue, FlowConfig, LatentSeq, TemplateVocab, VelocityModel,
                           decode_latent, encode_latent)
from remaster.prompts import default_prompt_bank
from remaster.restore import (ChunkPlan, SolverConfig, crossfade_weights, integrate,
                              restore_segment, restore_song)

SR = 44100


@pytest.fixture(scope="module")
def vocab():
    return TemplateVocab(default_prompt_bank())


class _ConstantFieldModel:
    """Oracle: v = x0 - x1 regardless of state (a constant field)."""

    def __init__(self, x0, x1, vocab, frame_len=4):
        self.v = x0 - x1
        self.vocab = vocab
        self.config = FlowConfig(frame_len=frame_len, hidden=4, blocks=1)

    def forward(self, x, t, prompt, cue):
        return self.v


class _LinearFieldModel:
    """v(x) = a * (target - x): closed form x(s) = target + (x1-target) e^(-a s)."""

    def __init__(self, target, a, vocab):
        self.target = target
        self.a = a
        self.vocab = vocab
        self.config = FlowConfig(frame_len=1, hidden=4, blocks=1)

    def forward(self, x, t, prompt, cue):
        return self.a * (self.target - x)


class _ZeroModel:
    def __init__(self, vocab, frame_len=512):
        self.vocab = vocab
        self.config = FlowConfig(frame_len=frame_len, hidden=4, blocks=1)

    def forward(self, x, t, prompt, cue):
        return np.zeros_like(x)


class _PromptSensitiveModel(_ZeroModel):
    """Returns +1 for a conditioned pass, -1 for the empty-prompt pass."""

    def forward(self, x, t, prompt, cue):
        return np.full_like(x, 1.0 if prompt.ids else -1.0)


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(kind="heun")
        with pytest.raises(ValueError):
            SolverConfig(steps=0)
        with pytest.raises(ValueError):
            SolverConfig(guidance=-1.0)

    def test_chunk_plan_validation(self):
        with pytest.raises(ValueError):
            ChunkPlan(chunk_s=30.0, overlap_s=30.0)
        with pytest.raises(ValueError):
            ChunkPlan(cue_s=15.0, overlap_s=10.0)


class TestIntegrate:
    def test_constant_field_exact_any_solver(self, vocab, rng):
        x0 = rng.normal(size=(5, 8))
        x1 = rng.normal(size=(5, 8))
        model = _ConstantFieldModel(x0, x1, vocab)
        emb = vocab.embed("")
        cue = AudioCue.absent(8)
        for kind, steps in (("euler", 1), ("euler", 10), ("euler", 100), ("rk4", 10)):
            out = integrate(model, x1, emb, cue, SolverConfig(kind=kind, steps=steps))
            assert np.abs(out - x0).max() < 1e-9, f"{kind}-{steps}"

    def test_rk4_beats_euler_on_linear_field(self, vocab, rng):
        target = rng.normal(size=(1, 2))
        x1 = rng.normal(size=(1, 2))
        a = 3.0
        model = _LinearFieldModel(target, a, vocab)
        exact = target + (x1 - target) * np.exp(-a)
        emb = vocab.embed("")
        cue = AudioCue.absent(2)
        err_euler = np.abs(integrate(model, x1, emb, cue, SolverConfig("euler", 10)) - exact).max()
        err_rk4 = np.abs(integrate(model, x1, emb, cue, SolverConfig("rk4", 10)) - exact).max()
        assert err_rk4 < 0.01 * err_euler
        assert err_rk4 < 1e-3

    def test_guidance_one_identical_to_unguided(self, vocab, rng):
        x1 = rng.normal(size=(3, 8))
        model = _PromptSensitiveModel(vocab, frame_len=4)
        emb = vocab.embed(default_prompt_bank()["clip"][0])
        cue = AudioCue.absent(8)
        guided = integrate(model, x1, emb, cue, SolverConfig("euler", 4, guidance=1.0))
        plain = integrate(model, x1, emb, cue, SolverConfig("euler", 4))
        assert np.array_equal(guided, plain)
        # w=1 never evaluates the unconditional branch: output equals +1 field
        assert np.allclose(guided - x1, 1.0)

    def test_guidance_extrapolates(self, vocab, rng):
        x1 = np.zeros((2, 8))
        model = _PromptSensitiveModel(vocab, frame_len=4)
        emb = vocab.embed(default_prompt_bank()["clip"][0])
        cue = AudioCue.absent(8)
        out = integrate(model, x1, emb, cue, SolverConfig("euler", 1, guidance=2.0))
        # v = v_u + 2 (v_c - v_u) = -1 + 2*2 = 3
        assert np.allclose(out, 3.0)

    def test_divergence_detected(self, vocab):
        class Exploding(_ZeroModel):
            def forward(self, x, t, prompt, cue):
                return np.full_like(x, np.inf)
        with pytest.raises(FloatingPointError):
            integrate(Exploding(vocab), np.zeros((2, 4)), vocab.embed(""),
                      AudioCue.absent(4), SolverConfig("euler", 2))


class TestRestoreSegment:
    def test_identity_model_round_trips(self, vocab, music_short):
        model = _ZeroModel(vocab)
        out = restore_segment(music_short, "", None, model, SolverConfig("euler", 1))
        assert out.n_samples == music_short.n_samples
        assert np.abs(out.data - music_short.data).max() < 1e-6

    def test_longer_than_chunk_rejected(self, vocab):
        from remaster.audio import AudioError
        model = _ZeroModel(vocab)
        wf = Waveform(np.zeros((2, int(31 * SR))), SR)
        with pytest.raises(AudioError):
            restore_segment(wf, "", None, model, SolverConfig())

    def test_deterministic(self, vocab, music_short):
        model = _ZeroModel(vocab)
        a = restore_segment(music_short, "", None, model, SolverConfig("euler", 2))
        b = restore_segment(music_short, "", None, model, SolverConfig("euler", 2))
        assert np.array_equal(a.data, b.data)

    def test_empty_prompt_auto_mode(self, vocab, music_short):
        calls = []

        class Spy(_ZeroModel):
            def forward(self, x, t, prompt, cue):
                calls.append((prompt.source, cue.present))
                return np.zeros_like(x)

        restore_segment(music_short, "", None, Spy(vocab), SolverConfig("euler", 2))
        assert all(source == "empty" for source, _ in calls)
        assert all(not present for _, present in calls)

    def test_cue_forwarded(self, vocab, music_short):
        seen = []

        class Spy(_ZeroModel):
            def forward(self, x, t, prompt, cue):
                seen.append(cue)
                return np.zeros_like(x)

        cue_wf = music_short.slice_seconds(0.0, 1.0)
        restore_segment(music_short, "", cue_wf, Spy(vocab), SolverConfig("euler", 1))
        assert seen[0].present
        assert seen[0].vector.shape == (1024,)


class TestCrossfade:
    def test_weights_sum_exactly_one(self):
        for n in (2, 17, 441000):
            early, late = crossfade_weights(n)
            assert np.all(early + late == 1.0)
            assert early[0] == 1.0 and late[0] == 0.0
            assert early[-1] == 0.0 and late[-1] == 1.0
            assert np.all(np.diff(late) >= 0)


class TestRestoreSong:
    def test_identity_model_is_identity_with_seams(self, vocab):
        from remaster.synth import synthesize_music
        song = synthesize_music(70.0, seed=31)
        model = _ZeroModel(vocab)
        out = restore_song(song, "", model, SolverConfig("euler", 1))
        assert out.n_samples == song.n_samples
        assert np.abs(out.data - song.data).max() < 1e-6

    def test_segment_layout_50s(self, vocab):
        starts = []

        class Spy(_ZeroModel):
            def forward(self, x, t, prompt, cue):
                return np.zeros_like(x)

        song = Waveform(np.random.default_rng(0).normal(size=(2, int(50 * SR))) * 0.1, SR)
        model = Spy(vocab)
        plan = ChunkPlan()
        out = restore_song(song, "", model, SolverConfig("euler", 1), plan)
        assert out.n_samples == song.n_samples

    def test_cue_chained_from_previous_output(self, vocab):
        cues = []

        class Spy(_ZeroModel):
            def forward(self, x, t, prompt, cue):
                cues.append(cue.present)
                return np.zeros_like(x)

        song = Waveform(np.random.default_rng(0).normal(size=(2, int(50 * SR))) * 0.1, SR)
        restore_song(song, "", Spy(vocab), SolverConfig("euler", 1))
        # two segments, one forward call each: first without cue, second with
        assert cues == [False, True]

    def test_short_input_single_padded_segment(self, vocab, music_short):
        model = _ZeroModel(vocab)
        out = restore_song(music_short, "", model, SolverConfig("euler", 1))
        assert out.n_samples == music_short.n_samples
        assert np.abs(out.data - music_short.data).max() < 1e-6

    def test_output_amplitude_sane(self, vocab):
        song = Waveform(np.random.default_rng(1).normal(size=(2, int(45 * SR))) * 0.3, SR)
        model = _ZeroModel(vocab)
        out = restore_song(song, "", model, SolverConfig("rk4", 2))
        assert np.abs(out.data).max() <= 4.0
