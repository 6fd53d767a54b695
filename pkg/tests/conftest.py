import numpy as np
import pytest

from remaster.audio import Waveform
from remaster.synth import pink_click_test_signal, synthesize_music


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def music_short():
    """Two seconds of synthetic music for quick directional checks."""
    full = synthesize_music(4.0, seed=11)
    return full.slice_seconds(1.0, 3.0)


@pytest.fixture(scope="session")
def probe_5s():
    """Pink noise + 1 Hz clicks, 5 s: fast stand-in for the 30 s probe."""
    return pink_click_test_signal(5.0, seed=3)


@pytest.fixture
def sine():
    def make(freq=997.0, amp=0.5, seconds=2.0, sample_rate=44100, stereo=True):
        t = np.arange(int(seconds * sample_rate)) / sample_rate
        x = amp * np.sin(2 * np.pi * freq * t)
        data = np.vstack([x, x]) if stereo else x[np.newaxis, :]
        return Waveform(data, sample_rate)
    return make


@pytest.fixture
def white_noise():
    def make(seconds=2.0, seed=0, sample_rate=44100):
        r = np.random.default_rng(seed)
        data = r.normal(size=(2, int(seconds * sample_rate)))
        data *= 0.5 / np.abs(data).max()
        return Waveform(data, sample_rate)
    return make
