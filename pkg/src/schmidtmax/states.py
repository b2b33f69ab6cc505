"""Dense multipartite pure states, bipartite cuts and Schmidt decompositions.

A state lives on a tensor product of local factors with dimensions
``dims = (d_1, ..., d_n)``. Amplitudes are stored factor-major with the
last factor varying fastest (C order), and every module in this package
uses that single layout. Factor indices are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

NORM_TOL = 1e-9
ZERO_COEFF = 1e-12


class NormalizationError(ValueError):
    """Raised when a state that must be normalized is not."""


class CutShapeError(ValueError):
    """Raised for a bipartition that does not fit the state's factors."""


@dataclass(frozen=True)
class PureState:
    """Pure state: local dimensions plus a complex amplitude vector."""

    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive, got {dims}")
        amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if amps.shape != (math.prod(dims),):
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {math.prod(dims)}"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "PureState":
        n = self.norm
        if n == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return PureState(self.dims, self.amps / n)

    def require_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm - 1.0) > tol:
            raise NormalizationError(f"state norm {self.norm} is not 1 within {tol}")


class CutShape(NamedTuple):
    """Resolved geometry of a cut for concrete factor dimensions."""

    side_a: tuple[int, ...]
    side_b: tuple[int, ...]
    d_a: int
    d_b: int
    n_s: int
    perm: tuple[int, ...]       # factor permutation putting side A first
    inv_perm: tuple[int, ...]
    perm_dims: tuple[int, ...]  # dims reordered by perm


@dataclass(frozen=True)
class Cut:
    """Bipartition of the tensor factors; ``side_a`` holds 0-based indices."""

    side_a: tuple[int, ...]

    def __post_init__(self):
        side_a = tuple(int(i) for i in self.side_a)
        if not side_a:
            raise CutShapeError("side A must be nonempty")
        if any(b <= a for a, b in zip(side_a, side_a[1:])):
            raise CutShapeError(f"side A indices must be strictly increasing: {side_a}")
        object.__setattr__(self, "side_a", side_a)

    def split(self, dims: tuple[int, ...]) -> CutShape:
        n = len(dims)
        if self.side_a[0] < 0 or self.side_a[-1] >= n:
            raise CutShapeError(f"cut {self.side_a} out of range for {n} factors")
        if len(self.side_a) >= n:
            raise CutShapeError("side A must be a proper subset of the factors")
        side_b = tuple(i for i in range(n) if i not in self.side_a)
        perm = self.side_a + side_b
        inv_perm = tuple(int(i) for i in np.argsort(perm))
        d_a = math.prod(dims[i] for i in self.side_a)
        d_b = math.prod(dims[i] for i in side_b)
        perm_dims = tuple(dims[i] for i in perm)
        return CutShape(self.side_a, side_b, d_a, d_b, min(d_a, d_b), perm, inv_perm, perm_dims)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Descending Schmidt coefficients with orthonormal left/right vectors.

    ``left[i]`` is the i-th A-side vector (length d_A), ``right[i]`` the
    B-side one. Always full length n_s; trailing coefficients may be zero.
    """

    coeffs: np.ndarray
    left: np.ndarray   # (n_s, d_A)
    right: np.ndarray  # (n_s, d_B)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coeffs > ZERO_COEFF))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.shape != (self.dim, self.dim):
            raise ValueError(f"expected {self.dim}x{self.dim} matrix")
        object.__setattr__(self, "entries", entries)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending."""
        return np.linalg.eigvalsh(self.entries)[::-1]


def robust_svd(m: np.ndarray, compute_uv: bool = True):
    """SVD with a fallback to the QR-based LAPACK driver.

    The default divide-and-conquer driver occasionally fails to converge on
    ill-conditioned iterates; gesvd is slower but does not.
    """
    try:
        return np.linalg.svd(m, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, compute_uv=compute_uv,
                                lapack_driver="gesvd")


def cut_matrix(amps: np.ndarray, dims: tuple[int, ...], shape: CutShape) -> np.ndarray:
    """Reshape an amplitude vector into the d_A x d_B matrix of a cut."""
    return amps.reshape(dims).transpose(shape.perm).reshape(shape.d_a, shape.d_b)


def uncut_matrix(matrix: np.ndarray, dims: tuple[int, ...], shape: CutShape) -> np.ndarray:
    """Inverse of :func:`cut_matrix`: back to the flat amplitude vector."""
    return matrix.reshape(shape.perm_dims).transpose(shape.inv_perm).reshape(-1)


def reshape_for_cut(state: PureState, cut: Cut) -> np.ndarray:
    return cut_matrix(state.amps, state.dims, cut.split(state.dims))


def schmidt_decompose(state: PureState, cut: Cut) -> SchmidtDecomposition:
    """Full Schmidt decomposition of a normalized state across a cut."""
    state.require_normalized()
    m = reshape_for_cut(state, cut)
    u, s, vh = robust_svd(m)
    return SchmidtDecomposition(coeffs=s, left=np.ascontiguousarray(u.T), right=vh)


def schmidt_coefficients(state: PureState, cut: Cut) -> np.ndarray:
    """Just the descending Schmidt coefficients (no vectors)."""
    state.require_normalized()
    return robust_svd(reshape_for_cut(state, cut), compute_uv=False)


def reduced_density_matrix(state: PureState, cut: Cut) -> DensityMatrix:
    """Reduction of the state to side A of the cut."""
    state.require_normalized()
    m = reshape_for_cut(state, cut)
    return DensityMatrix(dim=m.shape[0], entries=m @ m.conj().T)


def random_state(dims, seed) -> PureState:
    """Normalized state with i.i.d. standard complex Gaussian amplitudes."""
    rng = np.random.default_rng(seed)
    n = math.prod(int(d) for d in dims)
    amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(tuple(dims), amps / np.linalg.norm(amps))
