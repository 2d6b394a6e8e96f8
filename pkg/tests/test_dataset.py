import numpy as np
import pytest

from commgrad.bench.dataset import (
    BAR,
    DOTS,
    BarsDotsDataset,
    bar_pattern,
    dots_pattern,
    generate_bars_dots,
    pattern_label,
)


def test_bar_has_half_consecutive_ones():
    v = bar_pattern(16, 11)
    assert np.sum(v == 1) == 8
    ones = np.flatnonzero(np.roll(v, -11) == 1)
    np.testing.assert_array_equal(ones, np.arange(8))


def test_dots_alternate():
    v = dots_pattern(16, 1)
    assert np.all(v[:-1] * v[1:] == -1)


@pytest.mark.parametrize("d", [4, 6, 8, 10, 12, 14, 16])
def test_labels_invariant_under_cyclic_shift(d):
    for k in range(d):
        for s in range(d):
            assert pattern_label(np.roll(bar_pattern(d, k), s)) == BAR
    for k in range(2):
        for s in range(d):
            assert pattern_label(np.roll(dots_pattern(d, k), s)) == DOTS


def test_pattern_label_rejects_other_vectors():
    with pytest.raises(ValueError):
        pattern_label(np.ones(4))


def test_generate_is_balanced_and_noisy():
    data = generate_bars_dots(8, 2000, np.random.default_rng(0))
    assert np.sum(data.labels == BAR) == 1000
    for p, y in zip(data.patterns, data.labels):
        assert pattern_label(p) == y
    noise = data.inputs - data.patterns
    assert abs(noise.std() - 1.0) < 0.03
    assert abs(noise.mean()) < 0.03


def test_offsets_cover_all_positions():
    data = generate_bars_dots(8, 800, np.random.default_rng(1))
    bars = data.patterns[data.labels == BAR]
    starts = {int(np.flatnonzero((b == 1) & (np.roll(b, 1) == -1))[0]) for b in bars}
    assert starts == set(range(8))


def test_csv_round_trip(tmp_path):
    data = generate_bars_dots(4, 10, np.random.default_rng(2))
    path = tmp_path / "data.csv"
    data.to_csv(path)
    back = BarsDotsDataset.from_csv(path)
    np.testing.assert_array_equal(back.inputs, data.inputs)
    np.testing.assert_array_equal(back.labels, data.labels)


def test_invalid_dimension():
    with pytest.raises(ValueError):
        generate_bars_dots(1, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        generate_bars_dots(5, 4, np.random.default_rng(0))
