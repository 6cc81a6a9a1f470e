import math

import numpy as np
import pytest

lt = pytest.importorskip("lidartraj")


def small_suite():
    cfg = lt.SuiteConfig()
    cfg.n_vehicles = 3
    cfg.steps = 20
    return cfg


def test_distort_compensate_round_trip():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-40, 40, size=(500, 3))
    a = lt.Pose([0, 0, 0], stamp=0.0)
    b = lt.Pose([5, 0.3, 0], [math.cos(0.05), 0, 0, math.sin(0.05)], stamp=0.5)
    d = lt.distort(pts, a, b, 50)
    assert sum(d["packet_sizes"]) == 500
    back = lt.compensate(d["points"], d["packet_sizes"], a, b)
    # Packet order differs from the input order; compare as sets.
    key = lambda x: np.lexsort(x.T)
    assert np.allclose(back[key(back)], pts[key(pts)], atol=1e-9)


def test_translation_perturbation_shifts_points():
    a = lt.Pose([0, 0, 0], stamp=0.0)
    b = lt.Pose([5, 0, 0], stamp=0.5)
    pts = np.array([[10.0, 1.0, 0.0], [-10.0, 1.0, 0.0]])
    d = lt.distort(pts, a, b, 4)
    shift = np.tile([0.1, 0.0, 0.0], (4, 1))
    moved = lt.compensate(d["points"], d["packet_sizes"], a, b, shift)
    clean = lt.compensate(d["points"], d["packet_sizes"], a, b)
    assert np.allclose(moved - clean, [[0.1, 0, 0]] * 2)


def test_iou_and_ap():
    unit = lt.Box3D([0, 0, 0], [1, 1, 1])
    assert lt.iou3d(unit, unit) == pytest.approx(1.0)
    assert lt.iou3d(unit, lt.Box3D([0.5, 0, 0], [1, 1, 1])) == pytest.approx(1 / 3)
    dets = [lt.Detection(unit, 0.9), lt.Detection(lt.Box3D([5, 0, 0], [1, 1, 1]), 0.8)]
    assert lt.average_precision(dets, [unit], 0.7) == pytest.approx(1.0)


def test_scene_detect_and_attack():
    case = lt.make_case(small_suite(), 0)
    assert len(case.labels) == 3
    clean = case.compensated
    assert clean.shape[1] == 3
    dets = lt.detect(clean)
    assert len(dets) >= 1

    cfg = lt.AttackConfig()
    cfg.mode = "translation"
    cfg.iters = 3
    r = lt.attack(case, cfg)
    assert r["t_tilde"].shape == (20, 3)
    assert np.abs(r["t_tilde"]).max() <= cfg.eps_t + 1e-12
    assert len(r["loss_trace"]) == 4
    assert r["loss_trace"][-1] <= r["loss_trace"][0]
    assert lt.chamfer(clean, r["points"]) > 0.0


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        lt.Box3D([0, 0, 0], [-1, 1, 1])
    with pytest.raises(ValueError):
        lt.distort(np.zeros((4, 2)), lt.Pose([0, 0, 0]), lt.Pose([1, 0, 0]), 4)
    cfg = lt.AttackConfig()
    with pytest.raises(ValueError):
        cfg.mode = "sideways"
