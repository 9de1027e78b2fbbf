"""The two index engines and the compatible-structure explorer.

Normalization table (fixed here; see also `maslov.ambient` for the sign
conventions):

* winding engine: the index of a closed loop is the total phase change of
  the squared determinant of its tangent frames divided by 2*pi;
* integral engine: the same integer is the loop integral of the 1-form
  (1/pi) * omega(H, .), with H the mean curvature vector;
* pointwise identity: d(phase)/dt / (2*pi) = (1/pi) * omega(H, d(f o c)/dt)
  along any loop, whose worst sampled defect is `theorem_residual`.

The equality of the two engines on every loop is the central cross-check
this package automates; `MaslovReport` packages one (shape, loop) run.

For exploring ambient metrics other than the flat one, an auxiliary
Riemannian metric h induces a compatible complex structure J by polar
retraction, the pair (omega, J) induces the metric g_J = omega(J., .),
and `closure_defect` measures how far the 1-form omega(H_{g_J}, .) is
from being closed on the submanifold. For the standard structure that
form is closed (it is pi times the index form), so the defect vanishes
up to discretization; for perturbed structures the defect is measured
and reported, never asserted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ambient import block_omega, omega_matrix
from .errors import MetricError, NonConvergenceError
from .grassmann import LagrangianFrame, gram_orthonormalize, maslov_map
from .immersion import (
    LoopPath,
    ParametricImmersion,
    _as_points,
    _frame_from_jet,
    _mean_curvature_from_jet,
    _require_rank,
    generator_loop,
)
from .metrics import christoffel_symbols

__all__ = [
    "MaslovReport",
    "CompatibleStructure",
    "maslov_form_value",
    "index_integral",
    "index_winding",
    "theorem_residual",
    "period_vector",
    "run_report",
    "compatible_from_metric",
    "mean_curvature_for_metric",
    "closure_defect",
    "SweepRow",
    "SweepTable",
    "metric_sweep",
    "MAX_WINDING_SAMPLES",
    "PHASE_STEP_GUARD",
]

#: Winding refinement cap: sample counts double until this bound.
MAX_WINDING_SAMPLES = 2**20

#: Largest admissible phase step between consecutive samples.
PHASE_STEP_GUARD = np.pi / 2


def maslov_form_value(imm: ParametricImmersion, u, x) -> float:
    """Index 1-form at u evaluated on a tangent vector: (1/pi) omega(H, x).

    ``x`` must lie in the tangent plane span(Df(u)); inputs whose normal
    component exceeds 1e-6 (relative to max(1, |x|)) are rejected.
    """
    jet = imm.jet(u)
    frame = _frame_from_jet(jet, imm.frame_tol).vectors
    x = np.asarray(x, dtype=float)
    normal = x - (x @ frame.T) @ frame
    residual = float(np.linalg.norm(normal))
    if residual > 1e-6 * max(1.0, float(np.linalg.norm(x))):
        raise ValueError(
            f"vector is not tangent at u={jet.u} (normal residual {residual:.3e})"
        )
    h = _mean_curvature_from_jet(jet, imm.frame_tol)
    return block_omega(h, x) / np.pi


def _check_loop(imm: ParametricImmersion, loop: LoopPath, samples: int) -> None:
    if samples < 16:
        raise ValueError(f"need at least 16 samples, got {samples}")
    loop.validate_closed(imm.domain)


def _index_form_samples(imm: ParametricImmersion, loop: LoopPath,
                        ts: np.ndarray) -> np.ndarray:
    """omega(H, d(f o c)/dt) at the given loop parameters."""
    values = np.empty(len(ts))
    for k, t in enumerate(ts):
        jet = imm.jet(loop.point(float(t)))
        h = _mean_curvature_from_jet(jet, imm.frame_tol)
        ambient_velocity = jet.first.T @ np.asarray(loop.velocity(float(t)), dtype=float)
        values[k] = block_omega(h, ambient_velocity)
    return values


def index_integral(imm: ParametricImmersion, loop: LoopPath, samples: int) -> float:
    """Loop integral of (1/pi) omega(H, .) by the composite trapezoid rule.

    On uniform samples of a closed loop the trapezoid rule reduces to the
    sample mean, and for smooth periodic integrands it converges
    spectrally fast.
    """
    _check_loop(imm, loop, samples)
    ts = np.arange(samples) / samples
    return float(np.mean(_index_form_samples(imm, loop, ts))) / np.pi


def _phase_steps(imm: ParametricImmersion, loop: LoopPath, samples: int,
                 reference: LagrangianFrame):
    """Unit-circle track and its phase steps, or None on a guard violation.

    Aborts early at the first step with |delta| >= PHASE_STEP_GUARD, so a
    failed resolution attempt costs only a few samples.
    """
    track = np.empty(samples + 1, dtype=complex)
    deltas = np.empty(samples)
    previous = None
    for k in range(samples + 1):
        u = loop.point(k / samples)
        frame = _frame_from_jet(imm.jet(u), imm.frame_tol)
        m = maslov_map(frame, reference, imm.frame_tol)
        track[k] = m
        if previous is not None:
            delta = float(np.angle(m * np.conj(previous)))
            if abs(delta) >= PHASE_STEP_GUARD:
                return None
            deltas[k - 1] = delta
        previous = m
    return track, deltas


def _resolved_track(imm: ParametricImmersion, loop: LoopPath, samples: int,
                    reference: LagrangianFrame | None,
                    max_samples: int = MAX_WINDING_SAMPLES):
    """Refine the sampling by doubling until all phase steps clear the guard."""
    if reference is None:
        reference = LagrangianFrame.standard(imm.n)
    n_try = samples
    while n_try <= max_samples:
        result = _phase_steps(imm, loop, n_try, reference)
        if result is not None:
            track, deltas = result
            return track, deltas, n_try
        n_try *= 2
    raise NonConvergenceError(
        f"phase steps of loop {loop.loop_id!r} still exceed pi/2 at "
        f"{max_samples} samples"
    )


def index_winding(imm: ParametricImmersion, loop: LoopPath, samples: int,
                  reference: LagrangianFrame | None = None,
                  max_samples: int = MAX_WINDING_SAMPLES) -> int:
    """Winding number of the squared-determinant track along a loop.

    Unwraps the phase of t -> maslov_map(tangent frame at c(t), reference)
    with a pi/2 step guard, doubling the sample count on violations. The
    reference only contributes a constant phase, so the result does not
    depend on it. Reversing the loop negates the result exactly.
    """
    _check_loop(imm, loop, samples)
    _, deltas, _ = _resolved_track(imm, loop, samples, reference, max_samples)
    total = float(np.sum(deltas))
    winding = total / (2.0 * np.pi)
    nearest = round(winding)
    if abs(winding - nearest) > 1e-3:
        raise NonConvergenceError(
            f"unwrapped phase change of loop {loop.loop_id!r} is "
            f"{winding:.6f} turns, not an integer"
        )
    return int(nearest)


def _pointwise_defect(imm: ParametricImmersion, loop: LoopPath,
                      deltas: np.ndarray) -> float:
    """Worst defect of phase-rate/(2 pi) against omega(H, .)/pi on the loop."""
    samples = len(deltas)
    dt = 1.0 / samples
    ts = np.arange(samples) / samples
    omega_terms = _index_form_samples(imm, loop, ts)
    # Central difference of the unwrapped phase telescopes to the sum of
    # adjacent steps; closure supplies the wrap-around step.
    centered = (deltas + np.roll(deltas, 1)) / (2.0 * dt)
    return float(np.max(np.abs(centered / (2.0 * np.pi) - omega_terms / np.pi)))


def theorem_residual(imm: ParametricImmersion, loop: LoopPath, samples: int,
                     reference: LagrangianFrame | None = None) -> float:
    """Max sampled defect of the pointwise identity between the two engines."""
    _check_loop(imm, loop, samples)
    _, deltas, _ = _resolved_track(imm, loop, samples, reference)
    return _pointwise_defect(imm, loop, deltas)


def period_vector(imm: ParametricImmersion, basis_loops=None,
                  samples: int = 512) -> list[int]:
    """Winding index of each first-homology generator of the parameter domain.

    Defaults to one generator loop per periodic axis; a shape with no
    periodic axes has an empty period vector.
    """
    if basis_loops is None:
        basis_loops = [generator_loop(imm.domain, axis)
                       for axis in range(imm.n) if imm.domain.periodic[axis]]
    return [index_winding(imm, loop, samples) for loop in basis_loops]


@dataclass
class MaslovReport:
    """Paired engine outputs and diagnostics for one (shape, loop) run.

    ``status`` is "verified" when both engines agree within the declared
    tolerance, "failed" when they disagree, and "non-convergent" when the
    winding engine could not resolve the track within its refinement cap
    (in which case the integer fields hold None).
    """

    shape: str
    loop: str
    samples: int
    index_winding: int | None
    index_integral: float
    theorem_residual: float | None
    agreement: float | None
    status: str
    angle_track: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))

    def to_record(self, timestamp: str | None = None) -> dict:
        record = {
            "shape": self.shape,
            "loop": self.loop,
            "N": self.samples,
            "index_winding": self.index_winding,
            "index_integral": self.index_integral,
            "theorem_residual": self.theorem_residual,
            "agreement": self.agreement,
            "status": self.status,
        }
        if timestamp is not None:
            record["timestamp"] = timestamp
        return record

    def to_jsonl(self, timestamp: str | None = None) -> str:
        return json.dumps(self.to_record(timestamp), sort_keys=True,
                          separators=(",", ":"))


def run_report(imm: ParametricImmersion, loop: LoopPath, samples: int,
               tolerance: float = 1e-6,
               reference: LagrangianFrame | None = None) -> MaslovReport:
    """Run both engines on one (shape, loop) pair and package the outcome."""
    _check_loop(imm, loop, samples)
    integral = index_integral(imm, loop, samples)
    try:
        track, deltas, used = _resolved_track(imm, loop, samples, reference)
    except NonConvergenceError:
        return MaslovReport(
            shape=imm.name, loop=loop.loop_id, samples=samples,
            index_winding=None, index_integral=integral,
            theorem_residual=None, agreement=None, status="non-convergent",
        )
    total = float(np.sum(deltas))
    winding_real = total / (2.0 * np.pi)
    winding = round(winding_real)
    residual = _pointwise_defect(imm, loop, deltas)
    agreement = abs(integral - winding)
    ok = abs(winding_real - winding) <= 1e-3 and agreement <= tolerance
    return MaslovReport(
        shape=imm.name, loop=loop.loop_id, samples=used,
        index_winding=int(winding), index_integral=integral,
        theorem_residual=residual, agreement=agreement,
        status="verified" if ok else "failed",
        angle_track=track[:-1],
    )


# ---------------------------------------------------------------------------
# Compatible almost-complex structures and the closure-defect explorer


@dataclass(frozen=True)
class CompatibleStructure:
    """A position-dependent complex structure compatible with omega.

    Satisfies J(x)^2 = -I, omega(Ju, Jv) = omega(u, v), and negativity
    omega(u, J u) < 0 (the sign the flat structure has under this
    package's conventions). ``metric`` returns the induced Riemannian
    metric g_J = omega(J., .), which recovers the flat metric when J is
    the standard structure.
    """

    j_field: Callable[[np.ndarray], np.ndarray]
    source_metric_id: str

    def metric(self, x) -> np.ndarray:
        j = self.j_field(np.asarray(x, dtype=float))
        n = j.shape[0] // 2
        g = j.T @ omega_matrix(n)
        return 0.5 * (g + g.T)


def compatible_from_metric(metric_field, metric_id: str = "aux") -> CompatibleStructure:
    """Compatible complex structure from an auxiliary metric, by polar retraction.

    With Omega the matrix of omega and H(x) the auxiliary metric, the
    operator A = H^{-1} Omega (i.e. omega(u, v) = h(u, Av)) is h-skew;
    its polar unitary part in the h-inner product squares to -I and is
    omega-compatible. Concretely B = H^{-1/2} Omega H^{-1/2} is real
    antisymmetric, J_B = B (B^T B)^{-1/2}, and J = H^{-1/2} J_B H^{1/2}.
    The flat metric returns the standard block J exactly (fixed point).
    """

    def j_at(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = np.asarray(metric_field(x), dtype=float)
        dim = h.shape[0]
        asym = float(np.max(np.abs(h - h.T)))
        if asym > 1e-12 * max(1.0, float(np.max(np.abs(h)))):
            raise MetricError(f"auxiliary metric not symmetric at x={x} "
                              f"(asymmetry {asym:.3e})")
        h = 0.5 * (h + h.T)
        evals, evecs = np.linalg.eigh(h)
        if evals[0] <= 0:
            raise MetricError(f"auxiliary metric not positive definite at x={x}")
        root = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
        inv_root = evecs @ np.diag(evals**-0.5) @ evecs.T
        b = inv_root @ omega_matrix(dim // 2) @ inv_root
        p = 0.5 * ((b.T @ b) + (b.T @ b).T)
        pv, pw = np.linalg.eigh(p)
        inv_sqrt_p = pw @ np.diag(pv**-0.5) @ pw.T
        j_b = b @ inv_sqrt_p
        return inv_root @ j_b @ root

    return CompatibleStructure(j_field=j_at, source_metric_id=metric_id)


def mean_curvature_for_metric(imm: ParametricImmersion, u,
                              structure: CompatibleStructure) -> np.ndarray:
    """Mean curvature of the immersion measured in the metric g_J.

    Recomputed from scratch: induced metric, orthonormal tangent frame and
    normal projection all use g_J, and the ambient connection enters
    through Christoffel symbols of the g_J field at the image point.
    """
    jet = imm.jet(u)
    _require_rank(jet)
    g_at = structure.metric
    g_here = g_at(jet.point)
    gamma = christoffel_symbols(g_at, jet.point)
    sigma = jet.second + np.einsum("kij,ai,bj->abk", gamma, jet.first, jet.first)
    n, dim = jet.first.shape
    frame = gram_orthonormalize(jet.first, inner=g_here, rank_tol=1e-10)
    flat = sigma.reshape(n * n, dim)
    coeffs = flat @ g_here @ frame.T
    normal = (flat - coeffs @ frame).reshape(n, n, dim)
    induced = jet.first @ g_here @ jet.first.T
    return np.einsum("ab,abk->k", np.linalg.inv(induced), normal)


# Central-difference step for derivatives of the index form on the
# parameter domain, scaled per axis by max(1, |u_a|).
CLOSURE_DIFF_STEP = 1e-4


def closure_defect(imm: ParametricImmersion, structure: CompatibleStructure,
                   grid) -> float:
    """Worst antisymmetrized derivative of beta_a = omega(H_{g_J}, d_a f).

    Central-differences the coefficients of the 1-form over the grid and
    returns max |d_a beta_b - d_b beta_a|. One-dimensional shapes carry no
    2-forms, so the defect is identically zero. For the standard flat
    structure the form is closed and the defect is discretization noise.
    """
    if imm.n == 1:
        return 0.0
    pts = _as_points(imm, grid)
    if pts.shape[0] == 0:
        raise ValueError("grid must contain at least one point")

    def beta(u: np.ndarray) -> np.ndarray:
        jet = imm.jet(u)
        h = mean_curvature_for_metric(imm, u, structure)
        return np.array([block_omega(h, jet.first[a]) for a in range(imm.n)])

    worst = 0.0
    for u in pts:
        for a in range(imm.n):
            for b in range(a + 1, imm.n):
                ha = CLOSURE_DIFF_STEP * max(1.0, abs(u[a]))
                hb = CLOSURE_DIFF_STEP * max(1.0, abs(u[b]))
                ea = np.zeros(imm.n)
                ea[a] = ha
                eb = np.zeros(imm.n)
                eb[b] = hb
                d_a_beta_b = (beta(u + ea)[b] - beta(u - ea)[b]) / (2.0 * ha)
                d_b_beta_a = (beta(u + eb)[a] - beta(u - eb)[a]) / (2.0 * hb)
                worst = max(worst, abs(d_a_beta_b - d_b_beta_a))
    return worst


@dataclass(frozen=True)
class SweepRow:
    parameter: float
    closure_defect: float | None
    status: str  # "ok" or an error message


@dataclass(frozen=True)
class SweepTable:
    """Closure defects across a family of auxiliary metrics."""

    rows: tuple

    def best(self) -> SweepRow:
        ok = [row for row in self.rows if row.status == "ok"]
        if not ok:
            raise ValueError("no sweep row succeeded")
        return min(ok, key=lambda row: row.closure_defect)

    def to_csv(self) -> str:
        lines = ["parameter,closure_defect,status"]
        for row in self.rows:
            defect = repr(row.closure_defect) if row.closure_defect is not None else ""
            lines.append(f"{row.parameter!r},{defect},{row.status}")
        return "\n".join(lines) + "\n"


def metric_sweep(imm: ParametricImmersion, family, grid) -> SweepTable:
    """Evaluate the closure defect for each (parameter, metric field) pair.

    Per-member failures are recorded in their row and the sweep continues.
    The table reports measurements only; no claim is attached to nonzero
    defects.
    """
    family = list(family)
    if not family:
        raise ValueError("metric family must not be empty")
    pts = _as_points(imm, grid)
    if pts.shape[0] == 0:
        raise ValueError("grid must contain at least one point")
    rows = []
    for parameter, metric_field in family:
        try:
            structure = compatible_from_metric(metric_field,
                                               metric_id=f"family:{parameter}")
            defect = closure_defect(imm, structure, pts)
            rows.append(SweepRow(float(parameter), float(defect), "ok"))
        except Exception as exc:  # noqa: BLE001 - per-row isolation is the contract
            rows.append(SweepRow(float(parameter), None, f"error: {exc}"))
    return SweepTable(rows=tuple(rows))
