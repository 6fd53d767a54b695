import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from remaster.audio import (AudioError, SpectralConfig, TruncatedWavError, UnsupportedWavError,
                            Waveform, load_audio, mel_filterbank, mel_spectrogram, mid_side,
                            peak_normalize, read_wav, resample, stft, write_wav)


def _pcm16_wav_bytes(samples, rate=44100, channels=1):
    data = struct.pack(f"<{len(samples)}h", *samples)
    return struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, channels, rate, rate * channels * 2, channels * 2, 16,
        b"data", len(data),
    ) + data


class TestWaveform:
    def test_channel_lengths_equal(self):
        with pytest.raises(AudioError):
            Waveform(np.zeros((3, 10)))

    def test_zero_length_rejected(self):
        with pytest.raises(AudioError):
            Waveform(np.zeros((2, 0)))

    def test_bad_rate_rejected(self):
        with pytest.raises(AudioError):
            Waveform(np.zeros((2, 10)), sample_rate=0)

    def test_immutable(self):
        wf = Waveform(np.zeros((2, 10)))
        with pytest.raises(ValueError):
            wf.data[0, 0] = 1.0


class TestWavIO:
    def test_float32_roundtrip_stereo(self, tmp_path, rng):
        data = (rng.normal(size=(2, 44100)) * 0.2).astype(np.float32).astype(np.float64)
        wf = Waveform(data, 44100)
        write_wav(wf, tmp_path / "x.wav")
        back = read_wav(tmp_path / "x.wav")
        assert back.channels == 2 and back.n_samples == 44100
        assert np.array_equal(back.data, wf.data)  # bit-exact for float32 payloads

    def test_pcm16_full_scale_scaling(self, tmp_path):
        # full-scale positive sample decodes to 32767/32768
        path = tmp_path / "p.wav"
        path.write_bytes(_pcm16_wav_bytes([32767, -32768, 0]))
        wf = read_wav(path)
        assert wf.channels == 1
        assert wf.data[0, 0] == pytest.approx(32767 / 32768, abs=0)
        assert wf.data[0, 1] == -1.0
        assert wf.data[0, 2] == 0.0

    def test_pcm24_scaling(self, tmp_path):
        full = (1 << 23) - 1
        payload = b"".join(
            int(v & 0xFFFFFF).to_bytes(3, "little") for v in (full, -(1 << 23), 0)
        )
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI",
            b"RIFF", 36 + len(payload), b"WAVE",
            b"fmt ", 16, 1, 1, 44100, 44100 * 3, 3, 24,
            b"data", len(payload),
        )
        path = tmp_path / "q.wav"
        path.write_bytes(header + payload)
        wf = read_wav(path)
        assert wf.data[0, 0] == pytest.approx(full / (1 << 23), abs=0)
        assert wf.data[0, 1] == -1.0

    def test_empty_file_truncated(self, tmp_path):
        path = tmp_path / "empty.wav"
        path.write_bytes(b"")
        with pytest.raises(TruncatedWavError):
            read_wav(path)

    def test_cut_payload_truncated(self, tmp_path):
        blob = _pcm16_wav_bytes(list(range(100)))
        path = tmp_path / "cut.wav"
        path.write_bytes(blob[:-50])
        with pytest.raises(TruncatedWavError):
            read_wav(path)

    def test_unsupported_codec(self, tmp_path):
        blob = bytearray(_pcm16_wav_bytes([0, 0]))
        blob[20:22] = struct.pack("<H", 7)  # mu-law
        path = tmp_path / "mu.wav"
        path.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedWavError):
            read_wav(path)

    def test_write_rejects_nan(self, tmp_path):
        wf = Waveform(np.array([[0.0, np.nan], [0.0, 0.0]]))
        with pytest.raises(AudioError):
            write_wav(wf, tmp_path / "bad.wav")

    def test_file_size_arithmetic(self, tmp_path):
        # 30 s stereo at 44.1 kHz: 44-byte header + n*2*4 payload bytes
        n = 44100 * 30
        wf = Waveform(np.zeros((2, n)), 44100)
        write_wav(wf, tmp_path / "s.wav")
        assert (tmp_path / "s.wav").stat().st_size == 44 + n * 2 * 4

    def test_load_audio_duplicates_mono_and_resamples(self, tmp_path):
        t = np.arange(22050) / 22050
        wf = Waveform(np.sin(2 * np.pi * 440 * t)[np.newaxis, :], 22050)
        write_wav(wf, tmp_path / "m.wav")
        out = load_audio(tmp_path / "m.wav")
        assert out.channels == 2
        assert out.sample_rate == 44100
        assert abs(out.duration - 1.0) < 1e-3
        assert np.allclose(out.data[0], out.data[1])


class TestPeakNormalize:
    def test_gain_applied_globally(self, sine):
        wf = sine(amp=0.5)
        out = peak_normalize(wf, 0.9)
        assert abs(out.peak - 0.9) < 1e-7
        assert np.allclose(out.data, wf.data * 1.8)

    def test_idempotent(self, sine):
        wf = peak_normalize(sine(amp=0.37), 0.9)
        again = peak_normalize(wf, 0.9)
        assert np.abs(again.data - wf.data).max() < 1e-7

    def test_silence_rejected(self):
        with pytest.raises(AudioError):
            peak_normalize(Waveform(np.zeros((2, 100))), 0.9)

    def test_bad_target_rejected(self, sine):
        with pytest.raises(AudioError):
            peak_normalize(sine(), 1.5)

    @given(st.floats(0.05, 1.0), st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_property_peak_matches_target(self, target, seed):
        r = np.random.default_rng(seed)
        data = r.normal(size=(2, 512))
        out = peak_normalize(Waveform(data), target)
        assert abs(out.peak - target) < 1e-7


class TestMidSide:
    def test_identical_channels_zero_side(self, sine):
        _, side = mid_side(sine())
        assert np.abs(side.data).max() == 0

    def test_inverted_channels_zero_mid(self):
        x = np.random.default_rng(0).normal(size=1000)
        mid, _ = mid_side(Waveform(np.vstack([x, -x])))
        assert np.abs(mid.data).max() < 1e-15

    def test_mono_rejected(self):
        with pytest.raises(AudioError):
            mid_side(Waveform(np.zeros((1, 10))))

    @given(st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_reconstruction_identity(self, seed):
        r = np.random.default_rng(seed)
        wf = Waveform(r.normal(size=(2, 256)))
        mid, side = mid_side(wf)
        left = mid.data[0] + side.data[0]
        right = mid.data[0] - side.data[0]
        assert np.abs(left - wf.data[0]).max() < 1e-12
        assert np.abs(right - wf.data[1]).max() < 1e-12


class TestSpectral:
    def test_tone_peak_bin(self, sine):
        cfg = SpectralConfig(fft_size=2048, hop=512)
        spec = stft(sine(freq=1000.0), cfg)
        peak_bin = spec.magnitude.mean(axis=0).argmax()
        expected = round(1000.0 * 2048 / 44100)
        assert abs(peak_bin - expected) <= 1

    def test_tone_energy_concentration(self, sine):
        cfg = SpectralConfig(fft_size=2048, hop=512)
        spec = stft(sine(freq=1000.0), cfg)
        power = (spec.magnitude ** 2).mean(axis=0)
        center = power.argmax()
        near = power[max(center - 2, 0):center + 3].sum()
        assert near >= 0.9 * power.sum()

    def test_parseval_consistency(self, white_noise):
        wf = white_noise(seconds=1.0)
        cfg = SpectralConfig(fft_size=2048, hop=512)
        spec = stft(wf, cfg)
        from scipy.signal import get_window
        win = get_window("hann", 2048, fftbins=True)
        x = wf.data.mean(axis=0)
        n_frames = spec.n_frames
        time_energy = sum(
            ((x[i * 512:i * 512 + 2048] * win) ** 2).sum() for i in range(n_frames))
        weights = np.full(2048 // 2 + 1, 2.0)
        weights[0] = weights[-1] = 1.0
        spec_energy = ((spec.magnitude ** 2) * weights).sum() / 2048
        assert abs(spec_energy - time_energy) < 0.01 * time_energy

    def test_dc_energy_in_bin_zero(self):
        wf = Waveform(np.full((2, 8192), 0.5))
        spec = stft(wf, SpectralConfig(fft_size=2048, hop=512))
        power = (spec.magnitude ** 2).mean(axis=0)
        assert power.argmax() == 0

    def test_white_noise_mel_bands_positive(self, white_noise):
        spec = mel_spectrogram(white_noise(), SpectralConfig())
        assert (spec.magnitude > 0).all()

    def test_mel_rows_normalized(self):
        fb = mel_filterbank(44100, SpectralConfig())
        assert fb.shape[0] == 128
        assert np.allclose(fb.sum(axis=1), 1.0, atol=1e-9)

    def test_too_short_rejected(self):
        with pytest.raises(AudioError):
            stft(Waveform(np.zeros((2, 100))), SpectralConfig(fft_size=2048, hop=512))

    def test_resample_preserves_tone(self, sine):
        wf = sine(freq=1000.0, seconds=1.0)
        down = resample(wf, 22050)
        assert down.sample_rate == 22050
        assert abs(down.n_samples - 22050) <= 2
