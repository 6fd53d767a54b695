import numpy as np
import pytest

from remaster.rooms import decay_time_db, shoebox_ir

SR = 44100


class TestShoeboxIr:
    def test_direct_path_unit_amplitude_at_zero(self):
        ir = shoebox_ir((6, 5, 3), 0.2, (2, 2, 1.5), (4, 3, 1.6), SR)
        assert ir.data[0, 0] == pytest.approx(1.0)

    def test_full_absorption_leaves_only_direct(self):
        ir = shoebox_ir((6, 5, 3), 1.0, (2, 2, 1.5), (4, 3, 1.6), SR)
        assert np.count_nonzero(ir.data) == 1
        assert ir.data[0, 0] == pytest.approx(1.0)

    def test_lower_absorption_longer_decay(self):
        live = shoebox_ir((6, 5, 3), 0.05, (2, 2, 1.5), (4, 3, 1.6), SR)
        dead = shoebox_ir((6, 5, 3), 0.6, (2, 2, 1.5), (4, 3, 1.6), SR)
        assert decay_time_db(live) > decay_time_db(dead)

    def test_bigger_room_longer_decay_over_seeds(self):
        # Sabine-style: same absorption, larger volume -> slower decay
        wins = 0
        for seed in range(10):
            r = np.random.default_rng(seed)
            asmall = r.uniform(0.1, 0.3)
            small = shoebox_ir((4, 4, 2.5), asmall,
                               (1 + r.uniform(0, 2), 1 + r.uniform(0, 2), 1.2),
                               (1 + r.uniform(0, 2), 1 + r.uniform(0, 2), 1.8), SR)
            big = shoebox_ir((12, 14, 8), asmall,
                             (2 + r.uniform(0, 8), 2 + r.uniform(0, 10), 3.0),
                             (2 + r.uniform(0, 8), 2 + r.uniform(0, 10), 5.0), SR)
            if decay_time_db(big) > decay_time_db(small):
                wins += 1
        assert wins == 10

    def test_length_capped_at_two_seconds(self):
        ir = shoebox_ir((15, 18, 14), 0.05, (3, 3, 3), (10, 12, 9), SR)
        assert ir.n_samples <= 2 * SR

    def test_positions_must_be_inside(self):
        with pytest.raises(ValueError):
            shoebox_ir((4, 4, 3), 0.2, (5, 1, 1), (2, 2, 1), SR)

    def test_degenerate_room_rejected(self):
        with pytest.raises(ValueError):
            shoebox_ir((0, 4, 3), 0.2, (1, 1, 1), (2, 2, 1), SR)

    def test_deterministic(self):
        a = shoebox_ir((5, 6, 3), 0.15, (1.5, 2, 1.5), (3, 4, 1.7), SR)
        b = shoebox_ir((5, 6, 3), 0.15, (1.5, 2, 1.5), (3, 4, 1.7), SR)
        assert np.array_equal(a.data, b.data)

    def test_per_wall_absorption_accepted(self):
        alpha = np.array([0.1, 0.1, 0.9, 0.9, 0.2, 0.2])
        ir = shoebox_ir((6, 5, 3), alpha, (2, 2, 1.5), (4, 3, 1.6), SR)
        uniform = shoebox_ir((6, 5, 3), 0.1, (2, 2, 1.5), (4, 3, 1.6), SR)
        assert decay_time_db(ir) <= decay_time_db(uniform)
