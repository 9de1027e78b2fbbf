"""Lagrangian Grassmannian computations.

A Lagrangian n-plane in R^(2n) is carried as an ordered g-orthonormal
basis whose complexification assembles into a unitary n x n matrix. The
squared determinant of that matrix depends only on the plane, because
reparametrizing the basis multiplies the determinant by the determinant
of a real orthogonal matrix, which squares to one. That makes
:func:`det_squared` a circle-valued coordinate on the space of Lagrangian
planes and :func:`maslov_map` its version relative to a reference plane;
the reference can absorb any special-unitary ambiguity without changing
the value.

Paths of planes are sampled in a smooth gauge before differentiating:
each queried frame is aligned to the previous one by projecting the old
basis onto the new plane and re-orthonormalizing. This removes the O(n)
basis ambiguity that would otherwise corrupt finite differences.

Parallel transport of a frame along an ambient curve integrates the
vanishing-covariant-derivative equation with a classical fourth-order
Runge-Kutta scheme, with Christoffel symbols recovered from central
differences of the supplied metric field. For any Kaehler metric field
(parallel complex structure) the transported plane stays Lagrangian; the
result carries a drift report so callers can see how well the invariants
survived the integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ambient import block_j, complexify, realify
from .errors import FrameValidationError, GaugeAlignmentError, MetricError
from .metrics import CHRISTOFFEL_STEP, christoffel_symbols

__all__ = [
    "FrameTolerances",
    "STRICT_TOL",
    "FD_TOL",
    "LagrangianFrame",
    "PlanePath",
    "GrassmannTangent",
    "TransportResult",
    "frame_to_unitary",
    "det_squared",
    "maslov_map",
    "frame_distance",
    "align_frame",
    "tangent_form",
    "angle_form_residual",
    "gram_orthonormalize",
    "parallel_transport_plane",
]


@dataclass(frozen=True)
class FrameTolerances:
    """Residual bounds a frame must satisfy to count as Lagrangian."""

    orthonormal: float = 1e-10
    lagrangian: float = 1e-10
    unitary: float = 1e-9


#: Default tolerances for exactly-known (analytic) geometry.
STRICT_TOL = FrameTolerances()

#: Looser tier for frames built from finite-difference jets.
FD_TOL = FrameTolerances(orthonormal=1e-8, lagrangian=1e-5, unitary=1e-5)


@dataclass(frozen=True)
class LagrangianFrame:
    """Ordered g-orthonormal basis of a Lagrangian n-plane in R^(2n).

    Rows of ``vectors`` are the basis vectors in block coordinates.
    Construction only checks the shape; call :meth:`validate` (or any of
    the operations, which validate on entry) to enforce the invariants.
    """

    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != 2 * vectors.shape[0]:
            raise ValueError(f"expected an (n, 2n) array of rows, got shape {vectors.shape}")
        object.__setattr__(self, "vectors", vectors)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @staticmethod
    def standard(n: int) -> "LagrangianFrame":
        """The real coordinate plane spanned by e_x1..e_xn."""
        vectors = np.zeros((n, 2 * n))
        vectors[:, :n] = np.eye(n)
        return LagrangianFrame(vectors)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "LagrangianFrame":
        """Frame whose k-th vector is the k-th column of a unitary matrix."""
        u = np.asarray(u, dtype=complex)
        return cls(realify(u.T))

    def unitary(self) -> np.ndarray:
        """Complex n x n matrix whose columns are the complexified rows."""
        return complexify(self.vectors).T

    def residuals(self) -> dict:
        """Measured deviations from the frame invariants."""
        v = self.vectors
        gram = v @ v.T
        pairings = v @ block_j(v).T  # pairings[i, j] = omega(v_j, v_i) transposed sign-free max
        u = self.unitary()
        return {
            "orthonormal": float(np.max(np.abs(gram - np.eye(self.n)))),
            "lagrangian": float(np.max(np.abs(pairings))),
            "unitary": float(np.max(np.abs(u.conj().T @ u - np.eye(self.n)))),
        }

    def validate(self, tol: FrameTolerances = STRICT_TOL) -> "LagrangianFrame":
        """Raise FrameValidationError naming the first violated invariant."""
        res = self.residuals()
        for invariant, bound in (
            ("orthonormal", tol.orthonormal),
            ("lagrangian", tol.lagrangian),
            ("unitary", tol.unitary),
        ):
            if res[invariant] > bound:
                raise FrameValidationError(invariant, res[invariant], bound)
        return self


def frame_to_unitary(frame: LagrangianFrame, tol: FrameTolerances = STRICT_TOL) -> np.ndarray:
    """Validated unitary matrix of a frame (columns are complexified vectors)."""
    frame.validate(tol)
    return frame.unitary()


def det_squared(frame: LagrangianFrame, tol: FrameTolerances = STRICT_TOL) -> complex:
    """Squared determinant of the frame's unitary matrix.

    A class function of the plane: reordering or re-orthonormalizing the
    same plane multiplies det by +-1 and leaves det^2 unchanged.
    """
    d = np.linalg.det(frame_to_unitary(frame, tol))
    return complex(d * d)


def maslov_map(
    frame: LagrangianFrame,
    reference: LagrangianFrame,
    tol: FrameTolerances = STRICT_TOL,
) -> complex:
    """det^2 of the unitary automorphism taking the reference plane to the frame's.

    Invariant under right multiplication of the reference by any
    special-unitary matrix, which is exactly the ambiguity left by
    transporting a reference plane along different paths in a
    holonomy-SU(n) ambient.
    """
    if frame.n != reference.n:
        raise ValueError(f"frame dimensions differ: {frame.n} vs {reference.n}")
    a = frame_to_unitary(frame, tol) @ frame_to_unitary(reference, tol).conj().T
    d = np.linalg.det(a)
    return complex(d * d)


def frame_distance(a: LagrangianFrame, b: LagrangianFrame) -> float:
    """Largest row-wise Euclidean distance between two frames."""
    return float(np.max(np.linalg.norm(a.vectors - b.vectors, axis=1)))


def gram_orthonormalize(rows: np.ndarray, inner: np.ndarray | None = None,
                        rank_tol: float = 1e-12) -> np.ndarray:
    """Modified Gram-Schmidt on the rows, optionally in a custom inner product.

    Runs the projection sweep twice for numerical orthogonality. Raises
    ValueError if a vector degenerates below ``rank_tol`` of its original
    norm (rank deficiency).
    """
    out = np.array(rows, dtype=float)
    scale = max(1.0, float(np.max(np.abs(out))))

    def dot(u, v):
        if inner is None:
            return float(np.dot(u, v))
        return float(u @ inner @ v)

    for i in range(out.shape[0]):
        for _ in range(2):
            for j in range(i):
                out[i] -= dot(out[i], out[j]) * out[j]
        norm = dot(out[i], out[i]) ** 0.5
        if norm < rank_tol * scale:
            raise ValueError(f"vector {i} degenerates under orthonormalization")
        out[i] /= norm
    return out


def align_frame(previous: LagrangianFrame, target: LagrangianFrame) -> LagrangianFrame:
    """Re-express ``previous`` in the plane of ``target``.

    Projects the old basis onto the new plane and re-orthonormalizes, the
    concrete form of moving a frame along a path of planes by a path of
    linear symplectic transformations. Requires the two planes to be
    close; raises GaugeAlignmentError when the projection degenerates.
    """
    t = target.vectors
    projected = (previous.vectors @ t.T) @ t
    try:
        rows = gram_orthonormalize(projected, rank_tol=1e-6)
    except ValueError as exc:
        raise GaugeAlignmentError(
            f"plane changed too much between samples to align gauges ({exc}); "
            "refine the sampling step"
        ) from None
    return LagrangianFrame(rows)


@dataclass
class PlanePath:
    """A path of Lagrangian planes, sampled through a smoothing gauge.

    ``frame_at`` may return frames in any basis of the plane at each t;
    :meth:`aligned` walks the requested sample times in order and aligns
    each frame to the previous one, guarding against plane jumps larger
    than ``max_jump`` (a refinement-required signal).
    """

    frame_at: Callable[[float], LagrangianFrame]
    max_jump: float = 0.5

    def aligned(self, ts) -> list[LagrangianFrame]:
        frames: list[LagrangianFrame] = []
        previous: LagrangianFrame | None = None
        for t in ts:
            raw = self.frame_at(float(t))
            if previous is None:
                current = raw
            else:
                current = align_frame(previous, raw)
                jump = frame_distance(current, previous)
                if jump > self.max_jump:
                    raise GaugeAlignmentError(
                        f"frame moved {jump:.3f} between consecutive samples "
                        f"(threshold {self.max_jump}); refine the sampling step"
                    )
            frames.append(current)
            previous = current
        return frames


@dataclass(frozen=True)
class GrassmannTangent:
    """Tangent vector to the Grassmannian at a plane, as a symmetric form.

    ``matrix`` holds s_ij = omega(d/dt v_i, v_j) symmetrized over (i, j);
    ``asymmetry`` records the pre-symmetrization defect max|s_ij - s_ji|,
    which should vanish to discretization order for genuine plane paths.
    """

    matrix: np.ndarray
    asymmetry: float


def tangent_form(path: PlanePath, t: float, h: float) -> GrassmannTangent:
    """Velocity of a plane path as a symmetric bilinear form on the plane.

    Central-differences the gauge-aligned frame and pairs against omega:
    s_ij = omega(D_h v_i(t), v_j(t)). Tangential components of the frame
    derivative drop out automatically because omega vanishes on the plane.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    before, center, after = path.aligned([t - h, t, t + h])
    dv = (after.vectors - before.vectors) / (2.0 * h)
    raw = dv @ block_j(center.vectors).T  # raw[i, j] = g(dv_i, J v_j) = omega(dv_i, v_j)
    asymmetry = float(np.max(np.abs(raw - raw.T))) if raw.size else 0.0
    return GrassmannTangent(0.5 * (raw + raw.T), asymmetry)


def angle_form_residual(path: PlanePath, t: float, h: float,
                           tol: FrameTolerances = STRICT_TOL) -> float:
    """Defect of the angle-form identity along a plane path.

    Compares the derivative of the squared-determinant phase, normalized
    by 1/(2 pi), against (1/pi) * sum_i g(psi(v_i), J v_i), where psi is
    the frame derivative projected to the plane's orthogonal complement.
    Near zero for smooth paths; both sides equal the pullback of the
    normalized circle form under the squared-determinant map.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    before, center, after = path.aligned([t - h, t, t + h])
    d2_before = det_squared(before, tol)
    d2_after = det_squared(after, tol)
    phase_rate = np.angle(d2_after * np.conj(d2_before)) / (2.0 * h)
    v = center.vectors
    dv = (after.vectors - before.vectors) / (2.0 * h)
    psi = dv - (dv @ v.T) @ v
    trace_term = float(np.sum(psi * block_j(v)))
    return abs(phase_rate / (2.0 * np.pi) - trace_term / np.pi)


@dataclass(frozen=True)
class TransportResult:
    """Transported frame plus how far it drifted from the invariants."""

    frame: LagrangianFrame
    orthonormal_residual: float
    lagrangian_residual: float
    drift_warning: bool


def parallel_transport_plane(
    metric_field,
    path: Callable[[float], tuple],
    frame: LagrangianFrame,
    steps: int,
    drift_tol: float = 1e-4,
) -> TransportResult:
    """Parallel transport a Lagrangian frame along an ambient curve.

    Parameters
    ----------
    metric_field : callable
        x -> (2n, 2n) symmetric positive matrix. A constant field gives
        identically zero Christoffel symbols, so transport is exactly the
        identity.
    path : callable
        t -> (position, velocity) for t in [0, 1].
    frame : LagrangianFrame
        Initial frame, valid at path(0).
    steps : int
        Number of fixed Runge-Kutta steps.

    Raises MetricError on a non-positive-definite metric sample. Drift
    beyond ``drift_tol`` sets the warning flag rather than raising.

    Entry validation runs at the drift tolerance, not the strict tier, so
    the output of one transport can be fed back for a reverse leg.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    frame.validate(FrameTolerances(orthonormal=drift_tol, lagrangian=drift_tol,
                                   unitary=10.0 * drift_tol))
    v = frame.vectors.copy()
    h = 1.0 / steps

    def derivative_matrix(t: float) -> np.ndarray:
        x, dx = path(t)
        gamma = christoffel_symbols(metric_field, np.asarray(x, dtype=float), CHRISTOFFEL_STEP)
        dx = np.asarray(dx, dtype=float)
        dim = dx.shape[0]
        # M[k, j] = -Gamma[k, i, j] dx[i]
        return -(dx @ gamma.transpose(1, 0, 2).reshape(dim, dim * dim)).reshape(dim, dim)

    m1 = derivative_matrix(0.0)
    for k in range(steps):
        t = k * h
        m2 = derivative_matrix(t + 0.5 * h)
        m3 = derivative_matrix(t + h)
        k1 = v @ m1.T
        k2 = (v + 0.5 * h * k1) @ m2.T
        k3 = (v + 0.5 * h * k2) @ m2.T
        k4 = (v + h * k3) @ m3.T
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        m1 = m3  # the endpoint of this step is the start of the next

    result = LagrangianFrame(v)
    res = result.residuals()
    drift = max(res["orthonormal"], res["lagrangian"])
    return TransportResult(
        frame=result,
        orthonormal_residual=res["orthonormal"],
        lagrangian_residual=res["lagrangian"],
        drift_warning=drift > drift_tol,
    )
