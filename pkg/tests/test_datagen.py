import json
import math

import numpy as np
import pytest

from ncdm.datagen import (
    FEATURE_NAMES,
    CellModelParams,
    cell_radius,
    simulate_population,
    write_population,
)
from ncdm.datagen import _cell_rng
from ncdm.ingest import read_timeseries_csv


def params(upsilon=3.0, **kw) -> CellModelParams:
    return CellModelParams(upsilon=upsilon, **kw)


# -- radius model ---------------------------------------------------------


def test_radius_at_birth_is_r0():
    assert cell_radius(5.0, 5.0, 10.0, 500.0, 3.0) == 10.0


def test_radius_doubles_at_end_of_life():
    assert cell_radius(505.0, 5.0, 10.0, 500.0, 3.0) == pytest.approx(20.0)
    assert cell_radius(505.0, 5.0, 10.0, 500.0, 0.9) == pytest.approx(20.0)


def test_radius_linear_case_midlife():
    assert cell_radius(250.0, 0.0, 10.0, 500.0, 1.0) == pytest.approx(15.0)


def test_radius_outside_lifespan_rejected():
    with pytest.raises(ValueError):
        cell_radius(-1.0, 0.0, 10.0, 500.0, 3.0)
    with pytest.raises(ValueError):
        cell_radius(501.0, 0.0, 10.0, 500.0, 3.0)


# -- parameter draws -------------------------------------------------------


def test_gamma_lifespan_moments():
    p = params(seed=11)
    draws = np.array(
        [_cell_rng(p.seed, i).gamma(p.lifespan_shape, p.lifespan_scale) for i in range(100_000)]
    )
    mean, var = draws.mean(), draws.var()
    se_mean = math.sqrt(50 * 100) / math.sqrt(len(draws))
    assert abs(mean - 500.0) <= 3 * se_mean
    # variance must be shape*scale^2; a shape/scale swap would give 25000
    se_var = 5000.0 * math.sqrt((2.0 + 6.0 / 50) / len(draws))  # SE of gamma sample variance
    assert abs(var - 5000.0) <= 3 * se_var


def test_gamma_initial_radius_moments():
    p = params(seed=12)
    draws = np.array([_cell_rng(p.seed, i + 500_000).gamma(p.r0_shape, p.r0_scale) for i in range(100_000)])
    assert abs(draws.mean() - 10.0) <= 0.05
    assert abs(draws.var() - 200 * 0.05**2) <= 0.05


def test_population_lifespan_sample_mean():
    tracks = simulate_population(params(seed=3), 400)
    mean = np.mean([t.lifespan for t in tracks])
    assert abs(mean - 500.0) <= 3 * (500.0 / math.sqrt(50 * 400)) * math.sqrt(50)


# -- simulation -------------------------------------------------------------


def test_track_shapes_and_lengths():
    tracks = simulate_population(params(seed=0), 30)
    assert len(tracks) == 30
    for t in tracks:
        rows, cols = t.features.shape
        assert cols == 23 == len(FEATURE_NAMES)
        assert 228 <= rows <= 280
        assert np.isfinite(t.features).all()


def test_population_limit_respected_and_fates():
    n = 25
    tracks = simulate_population(params(seed=1), n)
    assert len(tracks) == n
    fates = {t.fate for t in tracks}
    assert fates <= {"divided", "apoptosis"}
    assert "apoptosis" in fates  # the limit always stops the lineage
    divided = sum(t.fate == "divided" for t in tracks)
    # each division creates two cells; total created stays within the limit
    assert 1 + 2 * divided <= n + 2


def test_children_born_at_parent_death():
    tracks = simulate_population(params(seed=2), 15)
    death_times = {round(t.birth_time + t.lifespan, 9) for t in tracks if t.fate == "divided"}
    child_births = sorted({round(t.birth_time, 9) for t in tracks if t.birth_time > 0})
    for b in child_births:
        assert b in death_times


def test_deterministic_under_seed():
    a = simulate_population(params(seed=9), 10)
    b = simulate_population(params(seed=9), 10)
    for x, y in zip(a, b):
        assert x.lifespan == y.lifespan
        assert np.array_equal(x.features, y.features)


def test_noise_and_motion_independent_of_upsilon():
    fast = simulate_population(params(upsilon=3.0, seed=4), 10)
    slow = simulate_population(params(upsilon=0.9, seed=4), 10)
    radius_col = FEATURE_NAMES.index("radius")
    rate_col = FEATURE_NAMES.index("radius_rate")
    growth_cols = {radius_col, rate_col}
    for f, s in zip(fast, slow):
        assert f.features.shape == s.features.shape
        for col in range(23):
            same = np.array_equal(f.features[:, col], s.features[:, col])
            if col in growth_cols:
                assert not same
            else:
                assert same  # motion and noise draws never touch upsilon


def test_radius_trajectory_convex_vs_concave():
    fast = simulate_population(params(upsilon=3.0, seed=5), 5)
    slow = simulate_population(params(upsilon=0.9, seed=5), 5)
    col = FEATURE_NAMES.index("radius")
    for t in fast:
        second_diff = np.diff(t.features[:, col], n=2)
        assert second_diff.mean() > 0  # accelerating growth
    for t in slow:
        second_diff = np.diff(t.features[:, col], n=2)
        assert second_diff.mean() < 0  # decelerating growth


def test_radius_column_matches_model():
    tracks = simulate_population(params(upsilon=2.0, seed=6), 3)
    col = FEATURE_NAMES.index("radius")
    for t in tracks:
        rows = t.features.shape[0]
        r0 = t.features[0, col]
        end = t.features[rows - 1, col]
        assert end == pytest.approx(2 * r0, rel=1e-9)
        mid = t.features[(rows - 1) // 2, col]
        assert r0 < mid < end


def test_params_validation():
    with pytest.raises(ValueError):
        CellModelParams(upsilon=0.0)
    with pytest.raises(ValueError):
        CellModelParams(upsilon=1.0, lifespan_shape=-1)
    with pytest.raises(ValueError):
        CellModelParams(upsilon=1.0, track_len_range=(10, 5))
    with pytest.raises(ValueError):
        simulate_population(params(), 0)


# -- output -----------------------------------------------------------------


def test_write_population_round_trip(tmp_path):
    p = params(seed=7)
    tracks = simulate_population(p, 5)
    manifest = write_population(tracks, tmp_path, p)
    assert (tmp_path / "manifest.json").is_file()
    loaded = json.loads((tmp_path / "manifest.json").read_text())
    assert loaded["n_cells"] == 5
    assert loaded["params"]["upsilon"] == 3.0
    assert loaded == manifest
    for entry in loaded["cells"]:
        ts = read_timeseries_csv(tmp_path / entry["file"])
        assert ts.values.shape == (entry["length"], 23)
        assert ts.feature_names == FEATURE_NAMES
        assert entry["fate"] in ("divided", "apoptosis")
