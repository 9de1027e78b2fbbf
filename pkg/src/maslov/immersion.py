"""Parametric Lagrangian immersions with first and second order jets.

An immersion is a map from an n-dimensional parameter box (axes may be
periodic) into the flat ambient, carried together with its jets: the
point f(u), the n rows of Df(u), and the symmetric array D2f(u) of second
derivatives. Catalog shapes supply exact analytic jets; expression-defined
shapes fall back to central differences of the coordinate functions, a
strictly looser accuracy tier that every consumer of the jets inherits
through :attr:`ParametricImmersion.frame_tol`.

From the jets this module derives the induced metric, the tangent frame
(a deterministic Gram orthonormalization of the rows of Df), the second
fundamental form (second derivatives minus their tangential projection —
in a flat ambient the Levi-Civita term vanishes), the mean curvature
vector (the trace of the second fundamental form against the inverse
induced metric, so parametrization speed never biases it), and the
Lagrangian angle, i.e. the squared determinant of the tangent frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ambient import AmbientSpace, block_j
from .errors import ImmersionRankError
from .grassmann import (
    FD_TOL,
    STRICT_TOL,
    FrameTolerances,
    LagrangianFrame,
    det_squared,
    gram_orthonormalize,
)

__all__ = [
    "DomainBox",
    "Jet",
    "ParametricImmersion",
    "LoopPath",
    "SecondFundamental",
    "SpecialityReport",
    "generator_loop",
    "full_loop",
    "check_lagrangian",
    "tangent_frame",
    "induced_metric",
    "second_fundamental",
    "mean_curvature",
    "lagrangian_angle",
    "is_special",
    "RANK_TOLERANCE",
    "ANALYTIC_LAGRANGIAN_TOL",
    "FD_LAGRANGIAN_TOL",
]

#: Smallest admissible singular value of Df.
RANK_TOLERANCE = 1e-8

#: Lagrangian residual tiers by jet source.
ANALYTIC_LAGRANGIAN_TOL = 1e-9
FD_LAGRANGIAN_TOL = 1e-5

# Central-difference steps for expression-defined jets, scaled per axis by
# max(1, |u_a|); chosen to balance truncation against roundoff in doubles.
FIRST_DIFF_STEP = 1e-5
SECOND_DIFF_STEP = 1e-4


@dataclass(frozen=True)
class DomainBox:
    """An axis-aligned parameter box with per-axis periodicity flags."""

    lows: np.ndarray
    highs: np.ndarray
    periodic: tuple

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=float)
        highs = np.asarray(self.highs, dtype=float)
        if lows.shape != highs.shape or lows.ndim != 1:
            raise ValueError("domain bounds must be 1-d arrays of equal length")
        if len(self.periodic) != lows.shape[0]:
            raise ValueError("one periodicity flag per axis required")
        if np.any(highs <= lows):
            raise ValueError("each axis must have positive length")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))

    @property
    def n(self) -> int:
        return self.lows.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return self.highs - self.lows

    def grid(self, per_axis: int, inset: float = 0.02) -> np.ndarray:
        """Uniform sample grid, (per_axis**n, n).

        Periodic axes drop the duplicate endpoint; bounded axes are inset
        slightly so finite differences around grid points stay inside.
        """
        if per_axis < 1:
            raise ValueError("per_axis must be positive")
        axes = []
        for k in range(self.n):
            lo, hi = self.lows[k], self.highs[k]
            if self.periodic[k]:
                axes.append(lo + (hi - lo) * np.arange(per_axis) / per_axis)
            else:
                pad = inset * (hi - lo)
                axes.append(np.linspace(lo + pad, hi - pad, per_axis))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def wrap_difference(self, a, b) -> np.ndarray:
        """a - b reduced modulo the periodic axis lengths."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for k in range(self.n):
            if self.periodic[k]:
                length = self.lengths[k]
                d[k] -= length * np.round(d[k] / length)
        return d


@dataclass(frozen=True)
class Jet:
    """Second-order jet of an immersion at one parameter point."""

    u: np.ndarray
    point: np.ndarray      # (2n,)
    first: np.ndarray      # (n, 2n), rows are the partial derivatives
    second: np.ndarray     # (n, n, 2n), symmetric in the first two axes


@dataclass(frozen=True, eq=False)
class ParametricImmersion:
    """A parametric Lagrangian immersion with jets.

    ``jet_source`` is either "analytic-catalog" (exact jets) or
    "expression-with-finite-differences"; it decides the validation tier
    applied to tangent frames and Lagrangian residuals.
    """

    name: str
    ambient: AmbientSpace
    domain: DomainBox
    jet_fn: Callable[[np.ndarray], Jet]
    jet_source: str = "analytic-catalog"

    @property
    def n(self) -> int:
        return self.ambient.n

    @property
    def frame_tol(self) -> FrameTolerances:
        return FD_TOL if self.jet_source.startswith("expression") else STRICT_TOL

    @property
    def lagrangian_tol(self) -> float:
        return (FD_LAGRANGIAN_TOL if self.jet_source.startswith("expression")
                else ANALYTIC_LAGRANGIAN_TOL)

    def jet(self, u) -> Jet:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"parameter point must have length {self.n}, got shape {u.shape}")
        return self.jet_fn(u)

    @classmethod
    def analytic(cls, name, ambient, domain, point, first, second) -> "ParametricImmersion":
        """Build from exact jet callables u -> point / Df rows / D2f array."""

        def jet_fn(u: np.ndarray) -> Jet:
            return Jet(
                u=u.copy(),
                point=np.asarray(point(u), dtype=float),
                first=np.asarray(first(u), dtype=float),
                second=np.asarray(second(u), dtype=float),
            )

        return cls(name=name, ambient=ambient, domain=domain, jet_fn=jet_fn,
                   jet_source="analytic-catalog")

    @classmethod
    def from_point_function(cls, name, ambient, domain, point) -> "ParametricImmersion":
        """Build from a bare coordinate map; jets come from central differences."""
        n = ambient.n

        def first_at(v: np.ndarray) -> np.ndarray:
            rows = np.empty((n, ambient.dim))
            for a in range(n):
                h = FIRST_DIFF_STEP * max(1.0, abs(v[a]))
                offset = np.zeros(n)
                offset[a] = h
                rows[a] = (np.asarray(point(v + offset), dtype=float)
                           - np.asarray(point(v - offset), dtype=float)) / (2.0 * h)
            return rows

        def jet_fn(u: np.ndarray) -> Jet:
            second = np.empty((n, n, ambient.dim))
            for b in range(n):
                h = SECOND_DIFF_STEP * max(1.0, abs(u[b]))
                offset = np.zeros(n)
                offset[b] = h
                second[b] = (first_at(u + offset) - first_at(u - offset)) / (2.0 * h)
            second = 0.5 * (second + second.transpose(1, 0, 2))
            return Jet(
                u=u.copy(),
                point=np.asarray(point(u), dtype=float),
                first=first_at(u),
                second=second,
            )

        return cls(name=name, ambient=ambient, domain=domain, jet_fn=jet_fn,
                   jet_source="expression-with-finite-differences")


@dataclass(frozen=True, eq=False)
class LoopPath:
    """A closed curve in the parameter domain together with its derivative."""

    point: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    loop_id: str = "loop"

    def reversed(self) -> "LoopPath":
        return LoopPath(
            point=lambda t: self.point(1.0 - t),
            velocity=lambda t: -np.asarray(self.velocity(1.0 - t)),
            loop_id=f"{self.loop_id}-reversed",
        )

    def validate_closed(self, domain: DomainBox, tol: float = 1e-9) -> None:
        gap = domain.wrap_difference(self.point(1.0), self.point(0.0))
        worst = float(np.max(np.abs(gap))) if gap.size else 0.0
        if worst > tol:
            raise ValueError(
                f"loop {self.loop_id!r} is not closed modulo the domain periods "
                f"(gap {worst:.3e})"
            )


def generator_loop(domain: DomainBox, axis: int, loop_id: str | None = None) -> LoopPath:
    """Loop running once along a periodic axis, other axes held at midpoints."""
    if not domain.periodic[axis]:
        raise ValueError(f"axis {axis} is not periodic")
    base = 0.5 * (domain.lows + domain.highs)
    base[axis] = domain.lows[axis]
    length = domain.lengths[axis]
    direction = np.zeros(domain.n)
    direction[axis] = length

    def point(t: float) -> np.ndarray:
        u = base.copy()
        u[axis] = domain.lows[axis] + t * length
        return u

    return LoopPath(point=point, velocity=lambda t: direction.copy(),
                    loop_id=loop_id or f"gen:{axis + 1}")


def full_loop(domain: DomainBox) -> LoopPath:
    """The full loop of a one-dimensional periodic parameter domain."""
    if domain.n != 1:
        raise ValueError("full loop is defined for one-dimensional domains only")
    return generator_loop(domain, 0, loop_id="full")


def _require_rank(jet: Jet) -> None:
    smallest = float(np.linalg.svd(jet.first, compute_uv=False)[-1])
    if smallest <= RANK_TOLERANCE:
        raise ImmersionRankError(jet.u, smallest)


def _frame_from_jet(jet: Jet, tol: FrameTolerances) -> LagrangianFrame:
    _require_rank(jet)
    rows = gram_orthonormalize(jet.first, rank_tol=RANK_TOLERANCE)
    return LagrangianFrame(rows).validate(tol)


def _lagrangian_residual(jet: Jet) -> float:
    if jet.first.shape[0] < 2:
        return 0.0
    pairings = jet.first @ block_j(jet.first).T
    upper = np.triu_indices(jet.first.shape[0], k=1)
    return float(np.max(np.abs(pairings[upper])))


def _second_fundamental_from_jet(jet: Jet, tol: FrameTolerances) -> np.ndarray:
    n, dim = jet.first.shape
    frame = _frame_from_jet(jet, tol).vectors
    flat = jet.second.reshape(n * n, dim)
    normal = flat - (flat @ frame.T) @ frame
    return normal.reshape(n, n, dim)


def _mean_curvature_from_jet(jet: Jet, tol: FrameTolerances) -> np.ndarray:
    sigma = _second_fundamental_from_jet(jet, tol)
    g = jet.first @ jet.first.T
    return np.einsum("ab,abk->k", np.linalg.inv(g), sigma)


def _as_points(imm: ParametricImmersion, grid) -> np.ndarray:
    if isinstance(grid, (int, np.integer)):
        return imm.domain.grid(int(grid))
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if imm.n == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != imm.n:
        raise ValueError(f"grid must be (m, {imm.n}) points or a per-axis count")
    return pts


def check_lagrangian(imm: ParametricImmersion, grid) -> float:
    """Max over the grid of max_{a<b} |omega(d_a f, d_b f)|.

    Also verifies Df has full rank at every sample, reporting the failing
    location otherwise. Curves (n = 1) have no pairs and return 0.
    """
    worst = 0.0
    for u in _as_points(imm, grid):
        jet = imm.jet(u)
        _require_rank(jet)
        worst = max(worst, _lagrangian_residual(jet))
    return worst


def tangent_frame(imm: ParametricImmersion, u) -> LagrangianFrame:
    """Gram orthonormalization of the rows of Df(u), in fixed row order."""
    return _frame_from_jet(imm.jet(u), imm.frame_tol)


def induced_metric(imm: ParametricImmersion, u) -> np.ndarray:
    """Pulled-back metric (j*g)_ab = g(d_a f, d_b f)."""
    jet = imm.jet(u)
    _require_rank(jet)
    return jet.first @ jet.first.T


@dataclass(frozen=True)
class SecondFundamental:
    """Normal-valued symmetric array sigma[a, b] at one parameter point."""

    sigma: np.ndarray  # (n, n, 2n)


def second_fundamental(imm: ParametricImmersion, u) -> SecondFundamental:
    """Second derivatives minus their tangential projection.

    In the flat ambient this is the full second fundamental form; its
    values are g-orthogonal to the tangent plane.
    """
    return SecondFundamental(_second_fundamental_from_jet(imm.jet(u), imm.frame_tol))


def mean_curvature(imm: ParametricImmersion, u) -> np.ndarray:
    """Trace of the second fundamental form against the inverse induced metric."""
    return _mean_curvature_from_jet(imm.jet(u), imm.frame_tol)


def lagrangian_angle(imm: ParametricImmersion, u) -> complex:
    """Squared determinant of the tangent frame, a unit complex number.

    Independent of how the tangent basis is chosen (class function of the
    plane), hence a well-defined angle of the immersion at u.
    """
    return det_squared(tangent_frame(imm, u), imm.frame_tol)


@dataclass(frozen=True)
class SpecialityReport:
    """Outcome of the constant-angle test over a sample grid."""

    is_special: bool
    angle_spread: float
    mean_curvature_sup: float


def is_special(imm: ParametricImmersion, grid, tol: float) -> SpecialityReport:
    """Test whether the Lagrangian angle is constant over the grid.

    The spread is the largest angular distance (in radians, at most pi)
    from the circular mean of the sampled angles. The mean-curvature sup
    over the same grid is reported as a cross-check: a constant angle must
    come with vanishing mean curvature.
    """
    pts = _as_points(imm, grid)
    if pts.shape[0] == 0:
        raise ValueError("grid must contain at least one point")
    angles = np.array([lagrangian_angle(imm, u) for u in pts])
    h_sup = max(float(np.linalg.norm(mean_curvature(imm, u))) for u in pts)
    mean = complex(np.mean(angles))
    if abs(mean) < 1e-12:
        spread = float(np.pi)
    else:
        direction = mean / abs(mean)
        spread = float(np.max(np.abs(np.angle(angles / direction))))
    return SpecialityReport(is_special=spread <= tol, angle_spread=spread,
                            mean_curvature_sup=h_sup)
