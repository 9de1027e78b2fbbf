"""Position-dependent ambient metrics and their Levi-Civita data.

A metric field is any callable x -> (2n, 2n) symmetric positive matrix.
Christoffel symbols are recovered by central differences of the field,
so analytic fields and table-driven fields go through the same path.
"""

from __future__ import annotations

import numpy as np

from .ambient import complexify
from .errors import MetricError

__all__ = [
    "flat_metric",
    "diag_bump_metric",
    "kahler_bump_metric",
    "christoffel_symbols",
    "CHRISTOFFEL_STEP",
]

# Central-difference step for the metric derivatives entering the
# Christoffel symbols; balanced for double precision fields of order one.
CHRISTOFFEL_STEP = 1e-5


def flat_metric(n: int):
    """The standard flat metric on R^(2n)."""
    eye = np.eye(2 * n)

    def field(x):
        return eye.copy()

    return field


def diag_bump_metric(n: int, eps: float, center=None, width: float = 1.0, axes=(0,)):
    """Flat metric with a Gaussian bump added on selected diagonal entries.

    g(x) = I + eps * exp(-|x - c|^2 / width^2) on the listed axes. The
    default center is deliberately asymmetric so the perturbation does not
    accidentally respect a shape symmetry. With eps = 0 the field is the
    identity exactly.
    """
    dim = 2 * n
    if center is None:
        center = 0.35 * np.arange(1, dim + 1) / dim
    center = np.asarray(center, dtype=float)

    def field(x):
        x = np.asarray(x, dtype=float)
        g = np.eye(dim)
        bump = np.exp(-np.sum((x - center) ** 2) / width**2)
        for a in axes:
            g[a, a] += eps * bump
        return g

    return field


def kahler_bump_metric(n: int, eps: float, center=None, width: float = 0.45):
    """Curved Kaehler metric from the potential |z|^2 + eps*s*exp(-|z-z0|^2/s).

    With w = z - z0 and s = width^2, the Hermitian matrix of the metric is

        H(z) = I + eps * exp(-|w|^2/s) * (conj(w) w^T / s - I),

    returned in its real (2n, 2n) block form [[Re H, -Im H], [Im H, Re H]].
    Because it derives from a potential the associated two-form is closed,
    so the complex structure is parallel and parallel transport preserves
    Lagrangian planes. Positive definite for eps < 1.
    """
    dim = 2 * n
    if center is None:
        center = np.zeros(dim)
    center = np.asarray(center, dtype=float)
    z0 = complexify(center)
    s = width**2
    if not eps < 1.0:
        raise ValueError(f"need eps < 1 for positivity, got eps={eps}")

    def field(x):
        x = np.asarray(x, dtype=float)
        w = complexify(x) - z0
        phi = np.exp(-np.vdot(w, w).real / s)
        h = np.eye(n, dtype=complex) + eps * phi * (np.outer(np.conj(w), w) / s - np.eye(n))
        a, b = h.real, h.imag
        out = np.empty((dim, dim))
        out[:n, :n] = a
        out[:n, n:] = -b
        out[n:, :n] = b
        out[n:, n:] = a
        return out

    return field


def _spd_check(g: np.ndarray, x) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    asym = float(np.max(np.abs(g - g.T))) if g.size else 0.0
    if asym > 1e-9 * max(1.0, float(np.max(np.abs(g)))):
        raise MetricError(f"metric is not symmetric at x={x} (asymmetry {asym:.3e})")
    g = 0.5 * (g + g.T)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise MetricError(f"metric is not positive definite at x={x}") from None
    return g


def christoffel_symbols(metric_field, x, step: float = CHRISTOFFEL_STEP) -> np.ndarray:
    """Christoffel symbols of a metric field by central differences.

    Returns Gamma[k, i, j] = Gamma^k_{ij} at x. Raises MetricError if the
    sampled metric is not symmetric positive definite.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    g = _spd_check(metric_field(x), x)
    dg = np.empty((dim, dim, dim))
    for a in range(dim):
        offset = np.zeros(dim)
        offset[a] = step
        dg[a] = (np.asarray(metric_field(x + offset), dtype=float)
                 - np.asarray(metric_field(x - offset), dtype=float)) / (2.0 * step)
    # S[i, j, l] = d_i g_{jl} + d_j g_{il} - d_l g_{ij}
    s = dg + dg.transpose(1, 0, 2) - np.moveaxis(dg, 0, 2)
    # Gamma[k, i, j] = 1/2 ginv[k, l] S[i, j, l], contracted as one matmul.
    ginv = np.linalg.inv(g)
    return 0.5 * (s.reshape(dim * dim, dim) @ ginv.T).T.reshape(dim, dim, dim)
