"""Lagrangian frames, circle maps, plane paths, parallel transport."""

import numpy as np
import pytest

from maslov.ambient import block_omega
from maslov.errors import FrameValidationError, GaugeAlignmentError, MetricError
from maslov.grassmann import (
    LagrangianFrame,
    PlanePath,
    align_frame,
    det_squared,
    frame_to_unitary,
    angle_form_residual,
    maslov_map,
    parallel_transport_plane,
    tangent_form,
)
from maslov.metrics import flat_metric, kahler_bump_metric


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q @ np.diag(np.diag(r) / np.abs(np.diag(r)))


def random_special_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    k = 0.5 * (z - z.conj().T)
    k -= np.trace(k) / n * np.eye(n)
    herm = k / 1j
    evals, evecs = np.linalg.eigh(herm)
    return evecs @ np.diag(np.exp(1j * evals)) @ evecs.conj().T


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(np.sign(np.diag(r)))


def rotating_line(t: float) -> LagrangianFrame:
    return LagrangianFrame(np.array([[-np.sin(t), np.cos(t)]]))


def phase_rotated_plane(t: float, n: int = 2) -> LagrangianFrame:
    return LagrangianFrame.from_unitary(np.exp(1j * t) * np.eye(n))


# --- frames and circle maps -------------------------------------------------


def test_standard_frame_maps_to_identity():
    u = frame_to_unitary(LagrangianFrame.standard(3))
    assert np.allclose(u, np.eye(3))


def test_one_dimensional_frame_complexifies():
    u = frame_to_unitary(LagrangianFrame(np.array([[0.0, 1.0]])))
    assert u == pytest.approx(np.array([[1j]]))


def test_non_lagrangian_frame_rejected_with_named_invariant():
    # span{e_x1, e_y1} is a complex line, not a Lagrangian plane.
    vectors = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    with pytest.raises(FrameValidationError) as info:
        frame_to_unitary(LagrangianFrame(vectors))
    assert info.value.invariant == "lagrangian"
    assert info.value.residual == pytest.approx(1.0)


def test_non_orthonormal_frame_rejected():
    with pytest.raises(FrameValidationError) as info:
        det_squared(LagrangianFrame(np.array([[2.0, 0.0]])))
    assert info.value.invariant == "orthonormal"


def test_det_squared_standard_is_one():
    assert det_squared(LagrangianFrame.standard(2)) == pytest.approx(1.0)


def test_det_squared_phase_rotated_line_example():
    # Plane spanned by {e^{0.7 i} e1, e2}: det = e^{0.7 i}, det^2 = e^{1.4 i}.
    u = np.diag([np.exp(0.7j), 1.0])
    value = det_squared(LagrangianFrame.from_unitary(u))
    assert value == pytest.approx(np.exp(1.4j))


def test_det_squared_is_a_class_function_of_the_plane():
    rng = np.random.default_rng(10)
    for n in (1, 2, 3):
        for _ in range(100):
            u = random_unitary(rng, n)
            frame = LagrangianFrame.from_unitary(u)
            o = random_orthogonal(rng, n)
            remixed = LagrangianFrame.from_unitary(u @ o)
            assert abs(det_squared(frame) - det_squared(remixed)) < 1e-12


def test_maslov_map_of_frame_against_itself_is_one():
    rng = np.random.default_rng(11)
    frame = LagrangianFrame.from_unitary(random_unitary(rng, 2))
    assert maslov_map(frame, frame) == pytest.approx(1.0)


def test_maslov_map_reference_su_invariance():
    rng = np.random.default_rng(12)
    for n in (1, 2, 3):
        for _ in range(100):
            frame = LagrangianFrame.from_unitary(random_unitary(rng, n))
            ref = LagrangianFrame.from_unitary(random_unitary(rng, n))
            m = random_special_unitary(rng, n)
            moved = LagrangianFrame.from_unitary(ref.unitary() @ m)
            assert abs(maslov_map(frame, ref) - maslov_map(frame, moved)) < 1e-10


def test_maslov_map_quarter_turn_line_example():
    # A = (i): the unitary sending the x-axis to the y-axis; det^2 = -1.
    frame = LagrangianFrame(np.array([[0.0, 1.0]]))
    ref = LagrangianFrame(np.array([[1.0, 0.0]]))
    assert maslov_map(frame, ref) == pytest.approx(-1.0)


def test_maslov_map_dimension_mismatch():
    with pytest.raises(ValueError):
        maslov_map(LagrangianFrame.standard(1), LagrangianFrame.standard(2))


# --- plane paths ------------------------------------------------------------


def test_tangent_form_constant_path_is_zero():
    path = PlanePath(lambda t: LagrangianFrame.standard(2))
    form = tangent_form(path, 0.3, 1e-4)
    assert np.max(np.abs(form.matrix)) < 1e-12
    assert form.asymmetry < 1e-12


def test_tangent_form_rotating_line_oracle():
    # Analytic oracle: v(t) = (-sin t, cos t), dv/dt = (-cos t, -sin t),
    # s = omega(dv, v) = g(dv, Jv) = +1 at every t under the fixed
    # convention omega(u, v) = g(u, Jv).
    t = 0.7
    v = np.array([-np.sin(t), np.cos(t)])
    dv = np.array([-np.cos(t), -np.sin(t)])
    oracle = block_omega(dv, v)
    assert oracle == pytest.approx(1.0)

    path = PlanePath(rotating_line)
    form = tangent_form(path, t, 1e-4)
    assert form.matrix[0, 0] == pytest.approx(oracle, abs=1e-7)


def test_tangent_form_phase_rotated_plane_oracle():
    # Frame vectors v_k(t) = e^{it} e_k have dv_k = J v_k, so the form is
    # s_kl = omega(J v_k, v_l) = g(v_k, v_l) = identity.
    path = PlanePath(phase_rotated_plane)
    form = tangent_form(path, 0.2, 1e-4)
    assert np.allclose(form.matrix, np.eye(2), atol=1e-7)
    assert form.asymmetry < 1e-7


def test_tangent_form_symmetry_on_gauge_wiggled_path():
    # Same plane path as above but reported in a t-dependent orthogonal
    # gauge; alignment must remove the wiggle before differencing.
    def frame_at(t):
        u = np.exp(1j * t) * np.eye(2)
        c, s = np.cos(5 * t), np.sin(5 * t)
        gauge = np.array([[c, -s], [s, c]])
        return LagrangianFrame.from_unitary(u @ gauge)

    path = PlanePath(frame_at)
    for t in (0.0, 0.4, 1.1):
        form = tangent_form(path, t, 1e-4)
        assert form.asymmetry <= 1e-6
        assert np.allclose(form.matrix, np.eye(2), atol=1e-6)


def test_tangent_form_mixed_speed_path_symmetry():
    def frame_at(t):
        return LagrangianFrame.from_unitary(np.diag([np.exp(1j * t), np.exp(2j * t)]))

    path = PlanePath(frame_at)
    form = tangent_form(path, 0.5, 1e-4)
    assert form.asymmetry <= 1e-6
    assert np.allclose(form.matrix, np.diag([1.0, 2.0]), atol=1e-6)


def test_gauge_misalignment_raises_refinement_signal():
    fast = PlanePath(lambda t: rotating_line(1.5e4 * t))
    with pytest.raises(GaugeAlignmentError):
        tangent_form(fast, 0.5, 1e-4)


def test_align_frame_recovers_nearby_gauge():
    rng = np.random.default_rng(13)
    base = LagrangianFrame.from_unitary(random_unitary(rng, 2))
    o = random_orthogonal(rng, 2)
    shuffled = LagrangianFrame(o.T @ base.vectors)
    aligned = align_frame(base, shuffled)
    assert np.allclose(aligned.vectors, base.vectors, atol=1e-12)


def test_angle_form_residual_constant_path():
    path = PlanePath(lambda t: LagrangianFrame.standard(2))
    assert angle_form_residual(path, 0.1, 1e-4) < 1e-12


def test_angle_form_residual_rotating_line():
    # Both sides equal 1/pi analytically.
    path = PlanePath(rotating_line)
    assert angle_form_residual(path, 0.0, 1e-4) < 1e-6


def test_angle_form_residual_phase_rotated_plane():
    # Both sides equal 2/pi analytically.
    path = PlanePath(phase_rotated_plane)
    assert angle_form_residual(path, 0.3, 1e-4) < 1e-6


# --- parallel transport -----------------------------------------------------


def quarter_arc(radius: float, n: int):
    def path(t):
        angle = 0.5 * np.pi * t
        position = np.zeros(2 * n)
        position[0] = radius * np.cos(angle)
        position[n] = radius * np.sin(angle)
        velocity = np.zeros(2 * n)
        velocity[0] = -0.5 * np.pi * radius * np.sin(angle)
        velocity[n] = 0.5 * np.pi * radius * np.cos(angle)
        return position, velocity

    return path


def reverse_path(path):
    def reversed_path(t):
        position, velocity = path(1.0 - t)
        return position, -velocity

    return reversed_path


def test_flat_transport_is_exactly_identity():
    frame = LagrangianFrame.standard(2)
    arc = quarter_arc(2.0, 2)
    result = parallel_transport_plane(flat_metric(2), arc, frame, 50)
    assert np.array_equal(result.frame.vectors, frame.vectors)
    assert result.orthonormal_residual == 0.0
    assert not result.drift_warning
    back = parallel_transport_plane(flat_metric(2), reverse_path(arc),
                                    result.frame, 50)
    assert np.array_equal(back.frame.vectors, frame.vectors)


def test_flat_closed_loop_has_identity_holonomy():
    def loop(t):
        angle = 2.0 * np.pi * t
        return (np.array([np.cos(angle), np.sin(angle)]),
                2.0 * np.pi * np.array([-np.sin(angle), np.cos(angle)]))

    frame = LagrangianFrame(np.array([[np.cos(0.4), np.sin(0.4)]]))
    result = parallel_transport_plane(flat_metric(1), loop, frame, 64)
    assert np.array_equal(result.frame.vectors, frame.vectors)


def test_conformal_bump_transport_preserves_invariants():
    # Conformally flat Kaehler metric on a disc (n = 1 is automatically
    # Kaehler), quarter arc passing through the bump. The bump decays to
    # numerical zero at the endpoints, so the flat-frame invariants must
    # hold again at the end of the path.
    arc = quarter_arc(1.0, 1)
    midpoint, _ = arc(0.5)

    def conformal(x):
        factor = 1.0 + 0.3 * np.exp(-np.sum((x - midpoint) ** 2) / 0.02)
        return factor * np.eye(2)

    frame = LagrangianFrame.standard(1)
    result = parallel_transport_plane(conformal, arc, frame, 10_000)
    assert result.orthonormal_residual <= 1e-6
    assert result.lagrangian_residual <= 1e-6
    assert not result.drift_warning
    back = parallel_transport_plane(conformal, reverse_path(arc), result.frame, 10_000)
    assert np.max(np.abs(back.frame.vectors - frame.vectors)) <= 1e-6


def test_kahler_bump_transport_n2_preserves_invariants():
    arc = quarter_arc(2.0, 2)
    midpoint, _ = arc(0.5)
    metric = kahler_bump_metric(2, 0.3, center=midpoint, width=0.32)
    frame = LagrangianFrame.standard(2)
    result = parallel_transport_plane(metric, arc, frame, 1500)
    assert result.orthonormal_residual <= 1e-6
    assert result.lagrangian_residual <= 1e-6
    back = parallel_transport_plane(metric, reverse_path(arc), result.frame, 1500)
    assert np.max(np.abs(back.frame.vectors - frame.vectors)) <= 1e-6


def test_kahler_bump_transport_moves_the_frame():
    # The curved metric must actually act: transporting through the bump
    # should not be the identity, otherwise the tests above are vacuous.
    arc = quarter_arc(2.0, 2)
    midpoint, _ = arc(0.5)
    metric = kahler_bump_metric(2, 0.3, center=midpoint, width=0.32)
    frame = LagrangianFrame.standard(2)
    result = parallel_transport_plane(metric, arc, frame, 1500)
    assert np.max(np.abs(result.frame.vectors - frame.vectors)) > 1e-3


def test_transport_rejects_non_positive_metric():
    def bad_metric(x):
        return -np.eye(2)

    with pytest.raises(MetricError):
        parallel_transport_plane(bad_metric, quarter_arc(1.0, 1),
                                 LagrangianFrame.standard(1), 10)
