"""Flat Kaehler linear algebra on C^n identified with R^(2n).

Coordinate conventions, fixed here once and used by every other module:

* real coordinates are blocked as (x_1..x_n, y_1..y_n);
* the complex structure J is multiplication by i, so J(x, y) = (-y, x);
* the metric g is the Euclidean dot product;
* the two-form is omega(u, v) = g(u, Jv), which equals -sum_k dx_k^dy_k
  in these coordinates (omega(e_x1, e_y1) = -1).

With these signs a counterclockwise turn of a line in C^1 advances the
phase of the squared determinant of its frames by +4*pi, and the unit
circle has index +2 under both engines in `maslov.engines`.

All tensors here are translation invariant, so flat torus quotients use
the same chart; lattice periods are carried as data only and never enter
the formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AmbientSpace",
    "block_j",
    "block_omega",
    "complexify",
    "realify",
    "omega_matrix",
]


def block_j(v: np.ndarray) -> np.ndarray:
    """Apply the standard complex structure to vectors in block coordinates.

    Works on a single vector of length 2n or on the rows of an (m, 2n) array.
    """
    v = np.asarray(v)
    n = v.shape[-1] // 2
    return np.concatenate([-v[..., n:], v[..., :n]], axis=-1)


def block_omega(u: np.ndarray, v: np.ndarray) -> float:
    """Evaluate omega(u, v) = g(u, Jv) for two block-coordinate vectors."""
    return float(np.dot(np.asarray(u), block_j(v)))


def complexify(v: np.ndarray) -> np.ndarray:
    """Map (x_1..x_n, y_1..y_n) to (x_1 + i y_1, ..., x_n + i y_n)."""
    v = np.asarray(v)
    n = v.shape[-1] // 2
    return v[..., :n] + 1j * v[..., n:]


def realify(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`complexify`."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def omega_matrix(n: int) -> np.ndarray:
    """Matrix of omega in block coordinates: omega(u, v) = u @ omega_matrix(n) @ v."""
    zero = np.zeros((n, n))
    eye = np.eye(n)
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True)
class AmbientSpace:
    """Flat Kaehler ambient: C^n, or a flat torus quotient of it.

    Parameters
    ----------
    n : int
        Complex dimension; the real dimension is 2n.
    periods : ndarray, optional
        (2n, 2n) array whose rows are lattice vectors of a flat torus
        quotient. Absent means the ambient is all of C^n. The rows must
        be linearly independent over the reals.
    """

    n: int
    periods: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"complex dimension must be a positive integer, got {self.n!r}")
        if self.periods is not None:
            periods = np.asarray(self.periods, dtype=float)
            if periods.shape != (self.dim, self.dim):
                raise ValueError(
                    f"expected {self.dim} lattice vectors of length {self.dim}, "
                    f"got shape {periods.shape}"
                )
            if np.linalg.matrix_rank(periods) < self.dim:
                raise ValueError("lattice periods are linearly dependent")
            object.__setattr__(self, "periods", periods)

    @property
    def dim(self) -> int:
        """Real dimension 2n."""
        return 2 * self.n

    def _check_vector(self, v, name: str = "vector") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"{name} must have length {self.dim}, got shape {v.shape}")
        return v

    def j_apply(self, v) -> np.ndarray:
        """Apply J, i.e. multiply by i under the block identification."""
        return block_j(self._check_vector(v))

    def g_inner(self, u, v) -> float:
        """Flat metric: the Euclidean dot product."""
        return float(np.dot(self._check_vector(u, "u"), self._check_vector(v, "v")))

    def omega(self, u, v) -> float:
        """Two-form omega(u, v) = g(u, Jv)."""
        return block_omega(self._check_vector(u, "u"), self._check_vector(v, "v"))

    def to_complex(self, v) -> np.ndarray:
        """Identify a real 2n-vector with a complex n-vector."""
        return complexify(self._check_vector(v))

    def from_complex(self, z) -> np.ndarray:
        """Inverse of :meth:`to_complex`."""
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.n,):
            raise ValueError(f"expected a complex {self.n}-vector, got shape {z.shape}")
        return realify(z)

    def holomorphic_volume(self, vectors) -> complex:
        """Pair n real vectors against the holomorphic volume form.

        Returns det of the complex n x n matrix whose columns are the
        complexified inputs; multilinear and alternating in the inputs.
        """
        vectors = list(vectors)
        if len(vectors) != self.n:
            raise ValueError(f"expected {self.n} vectors, got {len(vectors)}")
        rows = np.stack([self._check_vector(v) for v in vectors])
        return complex(np.linalg.det(complexify(rows).T))
