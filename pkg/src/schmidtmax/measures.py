"""Schmidt norms, Renyi/von Neumann entropies and the variational bound.

All logarithms are natural.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .states import Cut, DensityMatrix, PureState, schmidt_coefficients, reshape_for_cut

EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class NormSpec:
    """Parameters of a (possibly weighted) Schmidt norm: p >= 1, top k terms."""

    p: float
    k: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.weights is not None:
            w = tuple(float(c) for c in self.weights)
            if len(w) != self.k:
                raise ValueError("weights must have length k")
            if any(c < 0 for c in w):
                raise ValueError("weights must be nonnegative")
            if any(a < b for a, b in zip(w, w[1:])):
                raise ValueError("weights must be nonincreasing")
            object.__setattr__(self, "weights", w)

    def weight_array(self, k_eff: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(k_eff)
        return np.asarray(self.weights[:k_eff])


def clamp_k(spec: NormSpec, n_s: int) -> int:
    """Effective k for a cut with maximal Schmidt rank n_s (warns on clamp)."""
    if spec.k > n_s:
        warnings.warn(f"k={spec.k} exceeds n_s={n_s}; clamping", stacklevel=2)
        return n_s
    return spec.k


def schmidt_norm_from_coeffs(coeffs: np.ndarray, spec: NormSpec) -> float:
    k = clamp_k(spec, coeffs.size)
    lam = coeffs[:k]
    return float(np.sum(spec.weight_array(k) * lam**spec.p) ** (1.0 / spec.p))


def schmidt_norm(state: PureState, cut: Cut, spec: NormSpec) -> float:
    """The Schmidt norm (sum_{i<=k} c_i lambda_i^p)^(1/p) across a cut."""
    return schmidt_norm_from_coeffs(schmidt_coefficients(state, cut), spec)


def renyi_entropy(rho: DensityMatrix, alpha: float) -> float:
    """alpha-Renyi entropy of a density matrix (alpha >= 0, alpha != 1)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha == 1:
        raise ValueError("alpha=1 is the von Neumann entropy; use von_neumann_entropy")
    eigs = np.clip(rho.eigenvalues(), 0.0, None)
    if alpha < 1:
        eigs = eigs[eigs > EIG_FLOOR]
    return float(np.log(np.sum(eigs**alpha)) / (1.0 - alpha))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr[rho log rho] with the 0 log 0 := 0 convention."""
    eigs = np.clip(rho.eigenvalues(), 0.0, None)
    eigs = eigs[eigs > EIG_FLOOR]
    return float(-np.sum(eigs * np.log(eigs)))


def entropy_from_state(state: PureState, cut: Cut, alpha: float) -> float:
    """Entanglement Renyi entropy via Schmidt coefficients.

    Uses the identity S_alpha = (2 alpha / (1 - alpha)) log ||psi||_{2alpha, n_s};
    alpha=1 falls back to the von Neumann formula on the squared coefficients.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    probs = schmidt_coefficients(state, cut) ** 2
    if alpha == 1:
        probs = probs[probs > EIG_FLOOR]
        return float(-np.sum(probs * np.log(probs)))
    if alpha < 1:
        probs = probs[probs > EIG_FLOOR]
    return float(np.log(np.sum(probs**alpha)) / (1.0 - alpha))


def variational_lower_bound(state: PureState, cut: Cut, weights,
                            frames_a, frames_b, ortho_tol: float = 1e-10) -> float:
    """sum_i c_i |<psi| u_i (x) v_i>| for orthonormal frames (u_i), (v_i).

    Never exceeds sum_i c_i lambda_i; equality for the Schmidt vectors.
    """
    ua = np.asarray(frames_a, dtype=np.complex128)
    vb = np.asarray(frames_b, dtype=np.complex128)
    w = np.asarray(weights, dtype=float)
    if ua.shape[0] != vb.shape[0] or ua.shape[0] != w.size:
        raise ValueError("weights and frames must have matching lengths")
    for f in (ua, vb):
        gram = f @ f.conj().T
        if not np.allclose(gram, np.eye(f.shape[0]), atol=ortho_tol):
            raise ValueError("frames are not orthonormal")
    m = reshape_for_cut(state, cut)
    overlaps = np.abs(np.einsum("ij,ri,rj->r", m.conj(), ua, vb))
    return float(np.sum(w * overlaps))
