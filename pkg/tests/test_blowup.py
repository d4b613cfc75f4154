import numpy as np
import pytest

from vpcf import blowup as bl
from vpcf.errors import (EmptyWindow, NonNegativeTau, NormalizationFailed,
                         NoSingularity)
from vpcf.flow import FlowConfig, run
from vpcf.scenarios import circle, dumbbell


@pytest.fixture(scope="module")
def circle_run():
    return run(circle(1.0, 64),
               FlowConfig(mode="vpmcf", dt=1e-3, t_end=1.0, n_vertices=64,
                          resample_every=0),
               snapshot_every=50)


@pytest.fixture(scope="module")
def mcf_run():
    return run(circle(1.0, 128),
               FlowConfig(mode="mcf", dt=1e-4, t_end=0.6, n_vertices=128,
                          resample_every=0),
               snapshot_every=100)


@pytest.fixture(scope="module")
def dumbbell_rescaled():
    h = run(dumbbell(),
            FlowConfig(mode="vpmcf", dt=1e-3, t_end=1.0, n_vertices=256,
                       resample_every=0),
            snapshot_every=25)
    return bl.rescale(h, bl.RescalingFrame((0.0, 0.0), 1.0, 1.0))


def test_frame_needs_positive_scale():
    with pytest.raises(ValueError):
        bl.RescalingFrame((0.0, 0.0), 1.0, 0.0)
    with pytest.raises(ValueError):
        bl.RescalingFrame((0.0, 0.0), 1.0, -2.0)


def test_frame_time_must_lie_in_history(circle_run):
    with pytest.raises(ValueError):
        bl.rescale(circle_run, bl.RescalingFrame((0.0, 0.0), 2.5, 1.0))
    with pytest.raises(ValueError):
        bl.rescale(circle_run, bl.RescalingFrame((0.0, 0.0), -1.0, 1.0))


def test_identity_rescale_is_exact(circle_run):
    out = bl.rescale(circle_run, bl.RescalingFrame((0.0, 0.0), 0.0, 1.0))
    assert np.array_equal(out.step_times, circle_run.step_times)
    for a, b in zip(out.snapshots, circle_run.snapshots):
        assert np.array_equal(a.vertices, b.vertices)


def test_rescale_scaling_laws(circle_run):
    out = bl.rescale(circle_run, bl.RescalingFrame((0.0, 0.0), 1.0, 2.0))
    # multiplier scales like curvature, its squared time integral is invariant
    assert abs(out.kappa_bar_samples[-1] - 0.5) < 1e-12
    assert abs(out.i2[-1] - 1.0) < 1e-12
    assert out.step_times[0] == -4.0 and out.step_times[-1] == 0.0
    assert out.config.dt == 4.0 * circle_run.config.dt
    assert abs(out.initial_area - 4.0 * circle_run.initial_area) < 1e-10
    for a, b in zip(out.caches, circle_run.caches):
        assert abs(a.length - 2.0 * b.length) < 1e-10 * b.length
        assert abs(a.area - 4.0 * b.area) < 1e-10 * b.area


def test_rescale_composition(circle_run):
    two_step = bl.rescale(
        bl.rescale(circle_run, bl.RescalingFrame((0.0, 0.0), 1.0, 2.0)),
        bl.RescalingFrame((0.0, 0.0), 0.0, 3.0))
    direct = bl.rescale(circle_run, bl.RescalingFrame((0.0, 0.0), 1.0, 6.0))
    assert np.max(np.abs(two_step.step_times - direct.step_times)) < 1e-12
    for a, b in zip(two_step.snapshots, direct.snapshots):
        assert np.max(np.abs(a.vertices - b.vertices)) < 1e-12


def test_psi_invariance(circle_run, mcf_run):
    for lam in (1.0, 3.0):
        d = bl.psi_invariance_check(
            circle_run, bl.RescalingFrame((0.0, 0.0), 1.0, lam))
        assert d <= 1e-8
    d = bl.psi_invariance_check(
        mcf_run, bl.RescalingFrame((0.0, 0.0), mcf_run.singular_time, 1.0))
    assert d <= 1e-8


def test_psi_invariance_needs_window(circle_run):
    with pytest.raises(EmptyWindow):
        bl.psi_invariance_check(
            circle_run, bl.RescalingFrame((0.0, 0.0), 0.0, 1.0))


def test_classify_type_on_collapsing_circle(mcf_run):
    rep = bl.classify_type(mcf_run)
    assert rep.classification == "TypeI"
    assert abs(rep.constant - 0.5) / 0.5 < 0.05
    assert rep.sup_product == rep.constant


def test_hamilton_products_track_closed_form(mcf_run):
    rep = bl.classify_type(mcf_run)
    prods = [p for _, _, p in rep.hamilton]
    assert len(prods) == len(bl.HAMILTON_INDICES)
    assert np.all(np.diff(prods) > 0)
    for i, (pt, t, p) in zip(bl.HAMILTON_INDICES, rep.hamilton):
        assert t == 0.0                      # products decay along this flow
        assert abs(p - 0.5 * (1.0 - 2.0 / i)) < 1e-2


def test_hamilton_brute_force_agreement(mcf_run):
    # the stored maximizer must actually attain the stored product
    rep = bl.classify_type(mcf_run)
    times = mcf_run.snapshot_times
    T = mcf_run.singular_time
    floor = 2.0 * np.median(np.diff(times))
    usable = [j for j, t in enumerate(times) if T - t >= floor]
    for i, (pt, t, p) in zip(bl.HAMILTON_INDICES, rep.hamilton):
        best = max(mcf_run.caches[j].max_abs_kappa ** 2 * (T - 1.0 / i - times[j])
                   for j in usable)
        assert abs(p - best) < 1e-14 * max(1.0, abs(best))


def test_classify_type_needs_singularity(circle_run):
    with pytest.raises(NoSingularity):
        bl.classify_type(circle_run)
    with pytest.raises(NoSingularity):
        bl.extinction_fit(circle_run)


def test_shrinker_residual_circle_closed_form():
    poly = circle(1.0, 256)
    assert bl.shrinker_residual(poly, -0.5) < 1e-12
    assert abs(bl.shrinker_residual(poly, -1.0) - 0.5) < 1e-9


def test_shrinker_residual_rejects_forward_tau():
    with pytest.raises(NonNegativeTau):
        bl.shrinker_residual(circle(1.0, 64), 0.0)
    with pytest.raises(NonNegativeTau):
        bl.shrinker_residual(circle(1.0, 64), 1.0)


def test_extinction_fit_beats_edge_collapse(mcf_run):
    T_fit = bl.extinction_fit(mcf_run)
    assert abs(T_fit - 0.5) < 5e-4
    assert abs(T_fit - 0.5) < abs(mcf_run.singular_time - 0.5)


def test_shrinker_residual_battery_decreases(mcf_run):
    battery = bl.shrinker_residual_battery(mcf_run)
    assert np.allclose(battery, [0.00170774, 0.00156483, 0.00085554],
                       rtol=1e-4)
    assert np.all(np.diff(battery) < 0)
    assert battery[-1] < 1e-2
    with pytest.raises(EmptyWindow):
        bl.shrinker_residual_battery(mcf_run, n=100)


def test_rescaled_multiplier_decay(dumbbell_rescaled):
    assert bl.hbar_decay_check(dumbbell_rescaled) == []


def test_rescaled_multiplier_decay_window_guard(dumbbell_rescaled):
    # early on max kappa^2 |tau| > 1, so an explicit early window is refused
    with pytest.raises(NormalizationFailed):
        bl.hbar_decay_check(dumbbell_rescaled, tau_window=(-0.9, -0.5))
    with pytest.raises(EmptyWindow):
        bl.hbar_decay_check(dumbbell_rescaled, tau_window=(-0.026, -0.024))


def test_write_blowup_report(tmp_path, mcf_run):
    rep = bl.classify_type(mcf_run)
    path = tmp_path / "blowup.txt"
    bl.write_blowup_report(path, rep,
                           residuals=[(-0.5, 1e-3), (-0.25, 5e-4)])
    text = path.read_text()
    assert "classification: TypeI" in text
    assert text.count("\n  ") == len(bl.HAMILTON_INDICES) + 2
    assert "shrinker residuals" in text
