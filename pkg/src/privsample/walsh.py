"""Walsh-Fourier analysis on the Boolean cube {-1,+1}^p.

The Walsh function for an index set J is w_J(x) = prod_{j in J} x[j], with
w_{} = 1.  These functions form an orthogonal basis of real functions on the
cube, and the degree-<=d coefficients of a density determine every marginal
of dimension <= d.

Coefficients are density-weighted throughout: for points x_i carrying
probability weights w_i, coeff(J) = sum_i w_i * w_J(x_i).  The coefficient of
the empty index is therefore 1 for any probability weighting.

Index sets are enumerated in graded lexicographic order (by degree, then
lexicographically on the 0-based member tuples), empty set first, so that
matrices, coefficient vectors and serialized reports are byte-stable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WalshIndexSet",
    "enumerate_indices",
    "walsh_eval",
    "build_walsh_matrix",
    "low_freq_coeffs",
    "marginal_probability",
    "smallest_singular_value",
]


@dataclass(frozen=True)
class WalshIndexSet:
    """All index sets J with |J| <= d over p coordinates, in graded lex order."""

    p: int
    d: int
    indices: tuple[tuple[int, ...], ...]
    _position: dict[tuple[int, ...], int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.indices)

    def position(self, members: tuple[int, ...]) -> int:
        """Row/column position of an index set in the enumeration order."""
        try:
            return self._position[tuple(members)]
        except KeyError:
            raise KeyError(f"index set {tuple(members)} not enumerated (p={self.p}, d={self.d})")

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(j) for j in self.indices])


def enumerate_indices(p: int, d: int) -> WalshIndexSet:
    """Enumerate all subsets J of {0..p-1} with |J| <= d, empty set first.

    The count is sum_{i=0}^{d} C(p, i).  Members are 0-based coordinate
    positions, sorted within each tuple.
    """
    if p < 1:
        raise ValueError(f"dimension p must be >= 1, got {p}")
    if d < 1 or d > p:
        raise ValueError(f"degree d must satisfy 1 <= d <= p, got d={d}, p={p}")
    indices = tuple(
        tuple(combo)
        for degree in range(d + 1)
        for combo in itertools.combinations(range(p), degree)
    )
    assert len(indices) == sum(math.comb(p, i) for i in range(d + 1))
    position = {members: pos for pos, members in enumerate(indices)}
    return WalshIndexSet(p=p, d=d, indices=indices, _position=position)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points)
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-d array of cube points, got shape {pts.shape}")
    if pts.size and not np.all(np.abs(pts) == 1):
        raise ValueError("cube points must have entries in {-1, +1}")
    return pts


def walsh_eval(members: tuple[int, ...], x) -> int:
    """Evaluate w_J at a single cube point: the product of the J coordinates."""
    x = np.asarray(x)
    out = 1
    for j in members:
        if j < 0 or j >= x.shape[-1]:
            raise IndexError(f"coordinate {j} out of range for a point of dimension {x.shape[-1]}")
        out *= int(x[j])
    return out


def build_walsh_matrix(points, index_set: WalshIndexSet) -> np.ndarray:
    """Walsh matrix with one row per index set and one column per point.

    Entry (J, i) is w_J(points[i]).  Stored dense in float64; every entry is
    -1 or +1 and the empty-set row is all ones.
    """
    pts = _as_points(points)
    if pts.shape[1] != index_set.p:
        raise ValueError(
            f"points have dimension {pts.shape[1]} but the index set expects p={index_set.p}"
        )
    matrix = np.empty((len(index_set), pts.shape[0]))
    for row, members in enumerate(index_set.indices):
        if members:
            matrix[row] = np.prod(pts[:, members], axis=1)
        else:
            matrix[row] = 1.0
    return matrix


def low_freq_coeffs(points, weights, index_set: WalshIndexSet) -> np.ndarray:
    """Degree-<=d coefficients of the weighted empirical density on `points`.

    coeff(J) = sum_i weights[i] * w_J(points[i]); the weights must sum to 1.
    """
    pts = _as_points(points)
    w = np.asarray(weights, dtype=float)
    if w.shape != (pts.shape[0],):
        raise ValueError(f"weights shape {w.shape} does not match {pts.shape[0]} points")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1 (got {w.sum():.12g})")
    return build_walsh_matrix(pts, index_set) @ w


def marginal_probability(
    coeffs, index_set: WalshIndexSet, members: tuple[int, ...], signs: dict[int, int]
) -> float:
    """Probability that the coordinates in `members` equal the given signs.

    Expands the marginal indicator in the Walsh basis:
        P[x_i = signs[i] for i in members]
            = 2^{-|J|} * sum_{J' subset J} (prod_{i in J'} signs[i]) * coeff(J').
    Exact for any density whose degree-<=|J| coefficients are supplied.
    """
    members = tuple(members)
    if len(members) > index_set.d:
        raise ValueError(f"|J|={len(members)} exceeds the coefficient degree d={index_set.d}")
    if set(signs) != set(members):
        raise ValueError("signs must be given for exactly the members of J")
    if any(s not in (-1, 1) for s in signs.values()):
        raise ValueError("signs must be -1 or +1")
    coeffs = np.asarray(coeffs, dtype=float)
    total = 0.0
    for r in range(len(members) + 1):
        for sub in itertools.combinations(members, r):
            eps = 1
            for i in sub:
                eps *= signs[i]
            total += eps * coeffs[index_set.position(sub)]
    return total / 2 ** len(members)


def smallest_singular_value(matrix) -> float:
    """Smallest singular value of a dense matrix, via full SVD.

    Invariant under transposition; decomposition failures propagate as
    ``numpy.linalg.LinAlgError``.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        raise ValueError("cannot take singular values of an empty matrix")
    return float(np.linalg.svd(matrix, compute_uv=False)[-1])
