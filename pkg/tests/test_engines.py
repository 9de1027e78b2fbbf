"""Index engines, reports, compatible structures, closure defects."""

import json

import numpy as np
import pytest

from maslov.ambient import omega_matrix
from maslov.catalog import circle, gradient_graph, line, plane, product_torus, su_plane
from maslov.engines import (
    closure_defect,
    compatible_from_metric,
    index_integral,
    index_winding,
    maslov_form_value,
    mean_curvature_for_metric,
    metric_sweep,
    period_vector,
    run_report,
    theorem_residual,
)
from maslov.errors import MetricError, NonConvergenceError
from maslov.grassmann import LagrangianFrame
from maslov.immersion import LoopPath, full_loop, generator_loop, mean_curvature
from maslov.metrics import diag_bump_metric, flat_metric


def small_box_loop(radius=0.4, loop_id="box-circle"):
    """A closed loop inside [-1, 1]^2 for shapes without periodic axes."""
    return LoopPath(
        point=lambda t: radius * np.array([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)]),
        velocity=lambda t: 2 * np.pi * radius * np.array([-np.sin(2 * np.pi * t),
                                                          np.cos(2 * np.pi * t)]),
        loop_id=loop_id,
    )


def catalog_loop_pairs():
    """Every analytic catalog shape with its natural closed loops."""
    torus = product_torus([1.0, 0.5])
    suplane = su_plane(42)
    return [
        (line(), full_loop(line().domain)),
        (circle(1.0), full_loop(circle(1.0).domain)),
        (plane(), small_box_loop()),
        (suplane, generator_loop(suplane.domain, 0)),
        (suplane, generator_loop(suplane.domain, 1)),
        (torus, generator_loop(torus.domain, 0)),
        (torus, generator_loop(torus.domain, 1)),
    ]


# --- index form ---------------------------------------------------------------


def test_form_vanishes_at_minimal_points():
    imm = su_plane(3)
    u = np.array([0.2, 0.7])
    x = imm.jet(u).first[0]
    assert maslov_form_value(imm, u, x) == 0.0


def test_form_on_circle_velocity_is_one_over_pi():
    imm = circle(1.0)
    for t in (0.0, 1.1, 4.0):
        x = np.array([-np.sin(t), np.cos(t)])
        assert maslov_form_value(imm, [t], x) == pytest.approx(1.0 / np.pi, abs=1e-12)


def test_form_is_linear_in_the_vector():
    imm = circle(1.0)
    t = 0.8
    x = np.array([-np.sin(t), np.cos(t)])
    one = maslov_form_value(imm, [t], x)
    two = maslov_form_value(imm, [t], 2.0 * x)
    assert two == pytest.approx(2.0 * one, abs=1e-12)


def test_form_rejects_non_tangent_vectors():
    imm = circle(1.0)
    t = 0.3
    normal = np.array([np.cos(t), np.sin(t)])
    with pytest.raises(ValueError):
        maslov_form_value(imm, [t], normal)


# --- the two engines ----------------------------------------------------------


def test_plane_loop_indices_vanish():
    imm = plane()
    loop = small_box_loop()
    assert index_integral(imm, loop, 64) == pytest.approx(0.0, abs=1e-12)
    assert index_winding(imm, loop, 64) == 0
    assert theorem_residual(imm, loop, 64) <= 1e-10


def test_circle_engines():
    imm = circle(1.0)
    loop = full_loop(imm.domain)
    assert index_winding(imm, loop, 512) == 2
    assert index_integral(imm, loop, 512) == pytest.approx(2.0, abs=1e-10)
    assert theorem_residual(imm, loop, 512) <= 1e-6


def test_torus_generator_engines():
    imm = product_torus([1.0, 0.5])
    loop = generator_loop(imm.domain, 0)
    assert index_winding(imm, loop, 512) == 2
    assert index_integral(imm, loop, 512) == pytest.approx(2.0, abs=1e-8)


def test_reversed_loop_negates_both_engines():
    imm = circle(1.0)
    loop = full_loop(imm.domain)
    back = loop.reversed()
    assert index_winding(imm, back, 256) == -index_winding(imm, loop, 256)
    assert index_integral(imm, back, 256) == pytest.approx(
        -index_integral(imm, loop, 256), abs=1e-10)


def test_winding_is_reference_independent():
    rng = np.random.default_rng(30)
    z = rng.normal(size=(1, 1)) + 1j * rng.normal(size=(1, 1))
    ref = LagrangianFrame.from_unitary(z / np.abs(z))
    imm = circle(1.0)
    loop = full_loop(imm.domain)
    assert index_winding(imm, loop, 256, reference=ref) == 2


def test_homotopic_generator_loops_agree():
    imm = product_torus([1.0, 0.5])
    straight = generator_loop(imm.domain, 0)

    def wavy_point(t):
        return np.array([2.0 * np.pi * t, np.pi + 0.4 * np.sin(2.0 * np.pi * t)])

    def wavy_velocity(t):
        return np.array([2.0 * np.pi, 0.8 * np.pi * np.cos(2.0 * np.pi * t)])

    wavy = LoopPath(point=wavy_point, velocity=wavy_velocity, loop_id="wavy-gen1")
    assert index_winding(imm, wavy, 512) == index_winding(imm, straight, 512)


def test_minimum_samples_enforced():
    imm = circle(1.0)
    with pytest.raises(ValueError):
        index_integral(imm, full_loop(imm.domain), 8)
    with pytest.raises(ValueError):
        index_winding(imm, full_loop(imm.domain), 8)


def spun_loop(turns: int) -> LoopPath:
    """Circle parameter loop traversing the circle ``turns`` times."""
    return LoopPath(
        point=lambda t: np.array([2.0 * np.pi * (turns * t - np.floor(turns * t))]),
        velocity=lambda t: np.array([2.0 * np.pi * turns]),
        loop_id=f"spun-{turns}",
    )


def test_winding_refinement_cap_raises():
    imm = circle(1.0)
    # 171 turns: 2*171 = 342 leaves a residue in the middle half of every
    # power-of-two modulus up to 1024, so the pi/2 guard fires at every
    # doubling below the cap and refinement must give up.
    with pytest.raises(NonConvergenceError):
        index_winding(imm, spun_loop(171), 16, max_samples=1024)


def test_winding_refinement_succeeds_when_cap_allows():
    imm = circle(1.0)
    # Three turns of the circle double the squared-determinant winding;
    # 16 samples see phase steps of 3 pi / 4 (guard fires), 32 samples see
    # 3 pi / 8 and resolve the track.
    assert index_winding(imm, spun_loop(3), 16) == 6


@pytest.mark.parametrize("imm,loop", catalog_loop_pairs(),
                         ids=lambda x: getattr(x, "name", None) or getattr(x, "loop_id", ""))
def test_pointwise_identity_across_catalog(imm, loop):
    assert theorem_residual(imm, loop, 256) <= 1e-6


@pytest.mark.parametrize("imm,loop", catalog_loop_pairs(),
                         ids=lambda x: getattr(x, "name", None) or getattr(x, "loop_id", ""))
def test_integral_engine_lands_on_integers(imm, loop):
    value = index_integral(imm, loop, 512)
    assert abs(value - round(value)) <= 1e-6


@pytest.mark.parametrize("imm,loop", catalog_loop_pairs(),
                         ids=lambda x: getattr(x, "name", None) or getattr(x, "loop_id", ""))
def test_engines_agree_on_every_catalog_pair(imm, loop):
    report = run_report(imm, loop, 512)
    assert report.status == "verified"
    assert report.agreement <= 1e-6


def test_period_vectors():
    assert period_vector(plane()) == []
    assert period_vector(product_torus([1.0, 0.5]), samples=256) == [2, 2]
    assert period_vector(su_plane(42), samples=64) == [0, 0]


def test_minimal_shapes_have_vanishing_indices():
    imm = su_plane(11)
    for axis in range(2):
        loop = generator_loop(imm.domain, axis)
        assert abs(index_integral(imm, loop, 64)) <= 1e-8
        assert index_winding(imm, loop, 64) == 0


# --- reports -------------------------------------------------------------------


def test_run_report_verified_circle():
    imm = circle(1.0)
    report = run_report(imm, full_loop(imm.domain), 512)
    assert report.status == "verified"
    assert report.index_winding == 2
    assert report.agreement <= 1e-6
    assert len(report.angle_track) == 512
    record = json.loads(report.to_jsonl())
    assert set(record) == {"shape", "loop", "N", "index_winding", "index_integral",
                           "theorem_residual", "agreement", "status"}
    assert record["status"] == "verified"
    assert record["index_winding"] == 2


def test_run_report_non_convergent_status():
    imm = circle(1.0)
    # 2 * 349525 = 0xAAAAA: alternating bits keep the per-step phase in the
    # guard zone at every power-of-two sample count up to the refinement
    # cap, so the winding engine must declare the loop non-resolvable.
    report = run_report(imm, spun_loop(349525), 64)
    assert report.status == "non-convergent"
    assert report.index_winding is None
    record = json.loads(report.to_jsonl())
    assert record["index_winding"] is None


def test_report_serialization_is_deterministic():
    imm = circle(1.0)
    loop = full_loop(imm.domain)
    a = run_report(imm, loop, 128).to_jsonl()
    b = run_report(imm, loop, 128).to_jsonl()
    assert a == b


def test_report_timestamp_toggle():
    imm = circle(1.0)
    report = run_report(imm, full_loop(imm.domain), 128)
    assert "timestamp" not in report.to_record()
    assert json.loads(report.to_jsonl("2026-01-01T00:00:00"))["timestamp"] == "2026-01-01T00:00:00"


# --- compatible structures ------------------------------------------------------


def test_flat_metric_returns_standard_structure():
    structure = compatible_from_metric(flat_metric(2), "flat")
    x = np.array([0.4, -0.3, 1.2, 0.1])
    expected = omega_matrix(2)  # the block matrix of J itself
    assert np.max(np.abs(structure.j_field(x) - expected)) <= 1e-12
    assert np.max(np.abs(structure.metric(x) - np.eye(4))) <= 1e-12


def test_scaled_flat_metric_returns_standard_structure():
    structure = compatible_from_metric(lambda x: 3.7 * np.eye(4), "scaled")
    x = np.zeros(4)
    assert np.max(np.abs(structure.j_field(x) - omega_matrix(2))) <= 1e-12


def test_bump_structure_invariants():
    rng = np.random.default_rng(31)
    structure = compatible_from_metric(diag_bump_metric(2, 0.1), "bump")
    omega = omega_matrix(2)
    for _ in range(25):
        x = rng.normal(size=4)
        j = structure.j_field(x)
        assert np.max(np.abs(j @ j + np.eye(4))) <= 1e-9
        assert np.max(np.abs(j.T @ omega @ j - omega)) <= 1e-9
        u = rng.normal(size=4)
        assert u @ omega @ (j @ u) < 0.0
        g = structure.metric(x)
        assert np.min(np.linalg.eigvalsh(g)) > 0.0


def test_non_positive_auxiliary_metric_rejected():
    structure = compatible_from_metric(lambda x: -np.eye(4), "bad")
    with pytest.raises(MetricError):
        structure.j_field(np.zeros(4))


def test_curved_mean_curvature_reduces_to_flat():
    imm = product_torus([1.0, 0.5])
    structure = compatible_from_metric(flat_metric(2), "flat")
    for u in imm.domain.grid(3):
        h_flat = mean_curvature(imm, u)
        h_curved = mean_curvature_for_metric(imm, u, structure)
        assert np.max(np.abs(h_flat - h_curved)) <= 1e-9


# --- closure defect and sweeps ---------------------------------------------------


def test_closure_defect_flat_structure_on_torus():
    imm = product_torus([1.0, 0.5])
    structure = compatible_from_metric(flat_metric(2), "flat")
    assert closure_defect(imm, structure, 5) <= 1e-6


def test_closure_defect_is_zero_for_curves():
    imm = circle(1.0)
    structure = compatible_from_metric(flat_metric(1), "flat")
    assert closure_defect(imm, structure, 8) == 0.0


def test_closure_defect_bump_structure_is_finite():
    imm = product_torus([1.0, 0.5])
    structure = compatible_from_metric(diag_bump_metric(2, 0.1), "bump")
    defect = closure_defect(imm, structure, 4)
    assert np.isfinite(defect)
    assert defect >= 0.0


def test_metric_sweep_flat_family():
    imm = product_torus([1.0, 0.5])
    table = metric_sweep(imm, [(0.0, flat_metric(2))], 4)
    assert table.best().parameter == 0.0
    assert table.best().closure_defect <= 1e-6


def test_metric_sweep_bump_family_minimum_at_flat():
    imm = product_torus([1.0, 0.5])
    family = [(eps, flat_metric(2) if eps == 0.0 else diag_bump_metric(2, eps))
              for eps in (0.0, 0.05, 0.1)]
    table = metric_sweep(imm, family, 4)
    assert [row.status for row in table.rows] == ["ok", "ok", "ok"]
    assert table.best().parameter == 0.0
    csv_text = table.to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "parameter,closure_defect,status"
    assert len(lines) == 4


def test_metric_sweep_rejects_empty_inputs():
    imm = product_torus([1.0, 0.5])
    with pytest.raises(ValueError):
        metric_sweep(imm, [], 4)
    with pytest.raises(ValueError):
        metric_sweep(imm, [(0.0, flat_metric(2))], np.empty((0, 2)))


def test_metric_sweep_records_row_errors_and_continues():
    imm = product_torus([1.0, 0.5])
    family = [(0.0, flat_metric(2)), (9.9, lambda x: -np.eye(4))]
    table = metric_sweep(imm, family, 4)
    assert table.rows[0].status == "ok"
    assert table.rows[1].status.startswith("error:")
    assert table.best().parameter == 0.0


# --- finite-difference tier ------------------------------------------------------


def test_gradient_graph_loop_indices():
    imm = gradient_graph("0.3*sin(u1)*cos(u2)")
    loop = small_box_loop()
    assert index_winding(imm, loop, 128) == 0
    assert abs(index_integral(imm, loop, 128)) <= 1e-6
    assert theorem_residual(imm, loop, 512) <= 1e-3
