import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quditqpt import turbulence as tb
from quditqpt.errors import GeometryMismatch, OutOfRange

# frozen: plane-wave r0 for Cn2(174 m), L = 500 m, 405 nm
R0_STRONG = 0.04686889424022592


def hv_oracle(h, v=21.0, a=1.7e-14):
    return (
        0.00594 * (v / 27) ** 2 * (1e-5 * h) ** 10 * math.exp(-h / 1000)
        + 2.7e-16 * math.exp(-h / 1500)
        + a * math.exp(-h / 100)
    )


def test_cn2_ground_value():
    assert tb.cn2_profile(0.0) == pytest.approx(1.7e-14 + 2.7e-16, rel=1e-14)


@pytest.mark.parametrize("h", [0.0, 174.0, 647.0, 5000.0, 12000.0])
def test_cn2_matches_formula(h):
    assert tb.cn2_profile(h) == pytest.approx(hv_oracle(h), rel=1e-13)


def test_cn2_range():
    with pytest.raises(OutOfRange):
        tb.cn2_profile(-1.0)
    with pytest.raises(OutOfRange):
        tb.cn2_profile(20001.0)


@given(st.floats(0, 20000), st.floats(0, 20000))
def test_cn2_positive(h1, h2):
    assert tb.cn2_profile(h1) > 0 and tb.cn2_profile(h2) > 0


def test_fried_parameter_golden():
    k = 2 * math.pi / 405e-9
    oracle = (0.423 * k * k * hv_oracle(174.0) * 500.0) ** (-3 / 5)
    assert oracle == pytest.approx(R0_STRONG, rel=1e-12)
    assert tb.TurbulenceParams(174.0).r0 == pytest.approx(R0_STRONG, rel=1e-12)


def test_fried_parameter_scaling():
    r1 = tb.fried_parameter(1e-15, 500, 405e-9)
    assert tb.fried_parameter(2e-15, 500, 405e-9) == pytest.approx(r1 * 2 ** (-0.6))
    assert tb.fried_parameter(1e-15, 1000, 405e-9) == pytest.approx(r1 * 2 ** (-0.6))
    assert tb.fried_parameter(1e-15, 500, 810e-9) == pytest.approx(r1 * 2 ** 1.2)


def test_weak_regime_has_larger_r0():
    assert tb.TurbulenceParams(647.0).r0 > 5 * tb.TurbulenceParams(174.0).r0


def test_structure_coefficient():
    assert tb.STRUCTURE_COEFF == pytest.approx(2 * (24 / 5 * math.gamma(6 / 5)) ** (5 / 6), rel=1e-14)
    assert round(tb.STRUCTURE_COEFF, 2) == 6.88


def test_psd_values():
    f = np.array([0.0, 1.0, 2.0])
    psd = tb.kolmogorov_psd(f, 0.1)
    assert psd[0] == 0.0
    assert psd[1] == pytest.approx(0.023 * 0.1 ** (-5 / 3))
    assert psd[1] / psd[2] == pytest.approx(2 ** (11 / 3))


def test_params_validation():
    with pytest.raises(ValueError):
        tb.TurbulenceParams(174.0, n=300)
    with pytest.raises(ValueError):
        tb.TurbulenceParams(174.0, r0_override=-1.0)


def test_screen_determinism_and_shape():
    p = tb.TurbulenceParams(174.0, n=256)
    a, b = tb.phase_screen(p, 3), tb.phase_screen(p, 3)
    assert a.grid.shape == (256, 256)
    assert np.array_equal(a.grid, b.grid)
    assert not np.array_equal(a.grid, tb.phase_screen(p, 4).grid)


def test_infinite_r0_gives_flat_screen():
    p = tb.TurbulenceParams(174.0, n=256, r0_override=math.inf)
    assert not np.any(tb.phase_screen(p, 0).grid)


def test_structure_function_of_linear_ramp():
    n, dx, a = 64, 0.01, 3.0
    x = np.arange(n) * dx
    screen = tb.PhaseScreen(np.tile(a * x, (n, 1)), dx, 1.0)
    r = np.array([0.0, 0.02, 0.05])
    # x lag gives (a r)^2, y lag gives 0
    assert np.allclose(tb.structure_function([screen], r), 0.5 * (a * r) ** 2)


def test_structure_function_geometry_errors():
    s1 = tb.PhaseScreen(np.zeros((8, 8)), 0.1, 1.0)
    s2 = tb.PhaseScreen(np.zeros((16, 16)), 0.1, 1.0)
    with pytest.raises(GeometryMismatch):
        tb.structure_function([s1, s2], [0.1])
    with pytest.raises(GeometryMismatch):
        tb.structure_function([s1], [2.0])


def test_fit_power_law_exact():
    r = np.geomspace(1e-3, 1e-1, 9)
    slope, pref = tb.fit_power_law(r, 4.0 * r ** (5 / 3))
    assert slope == pytest.approx(5 / 3)
    assert pref == pytest.approx(4.0)


def test_small_ensemble_follows_kolmogorov():
    p = tb.TurbulenceParams(174.0, n=256)
    screens = [tb.phase_screen(p, tb.mask_seed(1, m)) for m in range(60)]
    lags = np.array([4, 8, 16, 32])
    ratio = tb.structure_function(screens, lags * p.dx) / tb.kolmogorov_structure(lags * p.dx, p.r0)
    assert np.all(np.abs(ratio - 1) < 0.2)


def test_subharmonics_add_low_frequency_power():
    p = tb.TurbulenceParams(174.0, n=256)
    lag = np.array([32 * p.dx])
    with_sh = [tb.phase_screen(p, m) for m in range(40)]
    without = [tb.phase_screen(p, m, levels=0) for m in range(40)]
    assert tb.structure_function(with_sh, lag)[0] > tb.structure_function(without, lag)[0]


def test_geometry_masks_disjoint():
    p = tb.TurbulenceParams(174.0)
    g = tb.default_geometry(p)
    masks = g.masks(p.n, p.dx)
    assert masks.shape == (4, p.n, p.n)
    assert masks.sum(axis=0).max() == 1
    counts = masks.sum(axis=(1, 2))
    assert np.all(counts == counts[0]) and counts[0] > 0
    assert np.allclose(g.centers(), [-1.5 * g.pitch, -0.5 * g.pitch, 0.5 * g.pitch, 1.5 * g.pitch])


def test_geometry_validation():
    with pytest.raises(GeometryMismatch):
        tb.SlitGeometry(d=4, pitch=0.01, width=0.02)
    with pytest.raises(GeometryMismatch):
        tb.SlitGeometry(d=4, pitch=0.05).masks(256, 1e-4)


def _geom_and_params():
    p = tb.TurbulenceParams(174.0, n=256)
    return p, tb.default_geometry(p)


@pytest.mark.parametrize("mode", tb.MODES)
def test_flat_screen_gives_identity(mode):
    p, g = _geom_and_params()
    flat = tb.PhaseScreen(np.zeros((p.n, p.n)), p.dx, p.r0)
    assert np.allclose(tb.slit_operator(flat, g, mode), np.eye(4))


def test_constant_phase_gives_global_phase():
    p, g = _geom_and_params()
    screen = tb.PhaseScreen(np.full((p.n, p.n), 0.7), p.dx, p.r0)
    assert np.allclose(tb.slit_operator(screen, g, "diagonal-phase"), np.exp(0.7j) * np.eye(4))


def test_tilt_by_one_pitch_shifts_slits():
    p, g = _geom_and_params()
    grad = 2 * np.pi * g.pitch / (tb.PATH_LENGTH * tb.WAVELENGTH)
    x = (np.arange(p.n) - p.n / 2) * p.dx
    screen = tb.PhaseScreen(np.tile(grad * x, (p.n, 1)), p.dx, p.r0)
    k = tb.slit_operator(screen, g, "tilt-shift")
    mag = np.abs(k)
    expect = np.zeros((4, 4))
    expect[1, 0] = expect[2, 1] = expect[3, 2] = 1.0  # slit 3 leaves the aperture
    # a strong linear ramp averages the slit phasor below one
    assert np.allclose(mag > 1e-12, expect > 0)
    assert np.all(mag[expect > 0] <= 1 + 1e-12)


def test_tilt_shift_operator_norm_bounded():
    p, g = _geom_and_params()
    for m in range(20):
        k = tb.slit_operator(tb.phase_screen(p, m), g, "tilt-shift")
        assert np.linalg.norm(k, 2) <= 1 + 1e-12


def test_turbulence_channel_small_ensemble():
    p, g = _geom_and_params()
    e = tb.turbulence_channel(p, g, "diagonal-phase", n_masks=10, seed=5)
    assert len(e) == 10
    assert e.metadata["n_masks"] == 10
    comp = e.completeness()
    assert np.allclose(comp, np.diag(np.diag(comp)))
    assert np.all(np.diag(comp).real <= 1 + 1e-12)
    again = tb.turbulence_channel(p, g, "diagonal-phase", n_masks=10, seed=5)
    assert np.array_equal(e.operators, again.operators)


def test_mask_seed_deterministic_and_distinct():
    assert tb.mask_seed(0, 1) == tb.mask_seed(0, 1)
    assert len({tb.mask_seed(s, m) for s in range(5) for m in range(50)}) == 250


def test_gray_mapping():
    s = tb.PhaseScreen(np.array([[0.0, np.pi], [2 * np.pi - 1e-9, 4 * np.pi]]), 1.0, 1.0)
    g = tb.screen_to_gray(s)
    assert g[0, 0] == 255 and g[1, 1] == 255
    assert g[0, 1] in (127, 128)
    assert g[1, 0] == 0


def test_pgm_and_raw_round_trip(tmp_path):
    p = tb.TurbulenceParams(174.0, n=256)
    s = tb.phase_screen(p, 11)
    tb.write_pgm(tmp_path / "s.pgm", s)
    assert np.array_equal(tb.read_pgm(tmp_path / "s.pgm"), tb.screen_to_gray(s))
    tb.write_raw(tmp_path / "s.raw", s)
    back = tb.read_raw(tmp_path / "s.raw")
    assert np.array_equal(back.grid, s.grid)
    assert (back.n, back.dx, back.r0, back.seed) == (s.n, s.dx, s.r0, 11)


def test_pgm_whitespace_valued_pixels(tmp_path):
    grid = 2 * np.pi * (1 - np.array([[9, 10], [32, 13]]) / 255)
    s = tb.PhaseScreen(grid, 1.0, 1.0)
    tb.write_pgm(tmp_path / "w.pgm", s)
    assert np.array_equal(tb.read_pgm(tmp_path / "w.pgm"), [[9, 10], [32, 13]])
