"""Constraint-subspace projectors and special-state constructors.

All projectors are matrix-free: a projector is its ``apply`` callable plus
bookkeeping. Dense matrices are only materialized on request for small
ambient dimensions (``as_matrix``).

Fermionic spaces use intrinsic coordinates: a state of N fermions on C^d is
a vector of length C(d,N) over the lexicographically ordered N-subsets of
{0,...,d-1}. The split isometry embeds that space into
C^{C(d,K)} (x) C^{C(d,N-K)} with the standard shuffle signs, so fermionic
cuts can be optimized without ever forming d^N-dimensional tensors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, permutations
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse

from .states import PureState

DENSE_LIMIT = 4096
DROP_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceProjector:
    """Hermitian idempotent operator given by its action on vectors."""

    ambient_dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    rank: int | None = None
    label: str = ""

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.apply(v)


def identity_projector(ambient_dim: int) -> SubspaceProjector:
    return SubspaceProjector(ambient_dim, lambda v: v, rank=ambient_dim, label="identity")


def as_matrix(projector: SubspaceProjector) -> np.ndarray:
    """Materialize the dense matrix; guarded against large ambient spaces."""
    n = projector.ambient_dim
    if n > DENSE_LIMIT:
        raise ValueError(f"refusing to materialize a {n}x{n} projector")
    return projector.apply(np.eye(n, dtype=np.complex128))


def estimate_trace(projector: SubspaceProjector, probes: int = 64, seed: int = 0) -> float:
    """Trace of the projector: exact basis sum if small, else Hutchinson."""
    n = projector.ambient_dim
    if n <= DENSE_LIMIT:
        total = 0.0
        e = np.zeros(n, dtype=np.complex128)
        for i in range(n):
            e[i] = 1.0
            total += projector.apply(e)[i].real
            e[i] = 0.0
        return total
    rng = np.random.default_rng(seed)
    acc = 0.0
    for _ in range(probes):
        z = rng.choice([1.0, -1.0], size=n).astype(np.complex128)
        acc += np.vdot(z, projector.apply(z)).real
    return acc / probes


def orthonormalize(vectors, drop_tol: float = DROP_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Returns the retained orthonormal vectors as rows; inputs whose residual
    norm falls below ``drop_tol`` are dropped.
    """
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=np.complex128)
        for _ in range(2):
            for u in basis:
                w -= np.vdot(u, w) * u
        n = np.linalg.norm(w)
        if n >= drop_tol:
            basis.append(w / n)
    if not basis:
        return np.zeros((0, len(vectors[0])), dtype=np.complex128)
    return np.array(basis)


def span_projector(basis_vectors, label: str = "span") -> SubspaceProjector:
    """Projector onto the span of the given (not necessarily orthogonal) vectors."""
    vecs = [np.asarray(v, dtype=np.complex128) for v in basis_vectors]
    if not vecs:
        raise ValueError("span_projector needs at least one vector")
    b = orthonormalize(vecs)
    if b.shape[0] == 0:
        raise ValueError("all spanning vectors were (numerically) zero")
    bc = b.conj()

    def apply(v: np.ndarray) -> np.ndarray:
        return b.T @ (bc @ v)

    return SubspaceProjector(vecs[0].size, apply, rank=b.shape[0], label=label)


def random_subspace_projector(ambient_dim: int, subspace_dim: int, seed) -> SubspaceProjector:
    """Projector onto the span of ``subspace_dim`` i.i.d. Gaussian vectors."""
    if not 1 <= subspace_dim <= ambient_dim:
        raise ValueError(f"need 1 <= D <= {ambient_dim}, got {subspace_dim}")
    rng = np.random.default_rng(seed)
    for _ in range(10):
        g = rng.standard_normal((subspace_dim, ambient_dim)) \
            + 1j * rng.standard_normal((subspace_dim, ambient_dim))
        p = span_projector(g, label=f"random(D={subspace_dim})")
        if p.rank == subspace_dim:
            return p
    raise ValueError("random spanning set was persistently rank deficient")


# ---------------------------------------------------------------------------
# permutation combinatorics

def _parity(perm) -> int:
    """+1/-1 parity of a permutation given as a sequence."""
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def shuffle_sign(part_a, part_b) -> int:
    """Sign of the merge permutation taking (sorted A, sorted B) to sorted A|B."""
    inversions = sum(1 for a in part_a for b in part_b if a > b)
    return -1 if inversions % 2 else 1


def slater_basis(d: int, n_particles: int) -> scipy.sparse.csc_matrix:
    """Orthonormal Slater-determinant basis of the antisymmetric subspace.

    Columns are indexed by the lexicographically ordered N-subsets of
    {0,...,d-1}; rows by the d^N product basis (last factor fastest).
    """
    shape_dims = (d,) * n_particles
    rows, cols, vals = [], [], []
    scale = 1.0 / math.sqrt(math.factorial(n_particles))
    for j, subset in enumerate(combinations(range(d), n_particles)):
        for perm in permutations(range(n_particles)):
            idx = tuple(subset[p] for p in perm)
            rows.append(int(np.ravel_multi_index(idx, shape_dims)))
            cols.append(j)
            vals.append(_parity(perm) * scale)
    m = math.comb(d, n_particles)
    return scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(d**n_particles, m))


def symmetric_basis(d: int, n_particles: int) -> scipy.sparse.csc_matrix:
    """Orthonormal basis of the symmetric subspace of (C^d)^(x)N."""
    shape_dims = (d,) * n_particles
    rows, cols, vals = [], [], []
    for j, multiset in enumerate(combinations_with_replacement(range(d), n_particles)):
        arrangements = set(permutations(multiset))
        v = 1.0 / math.sqrt(len(arrangements))
        for idx in arrangements:
            rows.append(int(np.ravel_multi_index(idx, shape_dims)))
            cols.append(j)
            vals.append(v)
    m = math.comb(d + n_particles - 1, n_particles)
    return scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(d**n_particles, m))


def _basis_projector(b: scipy.sparse.csc_matrix, rank: int, label: str) -> SubspaceProjector:
    bh = b.getH().tocsr()
    bs = b.tocsr()

    def apply(v: np.ndarray) -> np.ndarray:
        return bs @ (bh @ v)

    return SubspaceProjector(b.shape[0], apply, rank=rank, label=label)


def antisymmetric_projector(d: int, n_particles: int) -> SubspaceProjector:
    """Projector onto the fully antisymmetric subspace of (C^d)^(x)N."""
    if n_particles > d:
        return SubspaceProjector(d**n_particles, lambda v: np.zeros_like(v), rank=0,
                                 label=f"antisym(d={d},N={n_particles})")
    b = slater_basis(d, n_particles)
    return _basis_projector(b, math.comb(d, n_particles), f"antisym(d={d},N={n_particles})")


def symmetric_projector(d: int, n_particles: int) -> SubspaceProjector:
    """Projector onto the fully symmetric subspace of (C^d)^(x)N."""
    b = symmetric_basis(d, n_particles)
    return _basis_projector(b, math.comb(d + n_particles - 1, n_particles),
                            f"sym(d={d},N={n_particles})")


# ---------------------------------------------------------------------------
# fermionic intrinsic representation

@dataclass(frozen=True)
class FermionSpace:
    """N fermions on C^d in intrinsic (subset-basis) coordinates."""

    d: int
    n_particles: int

    def __post_init__(self):
        if not 1 <= self.n_particles <= self.d:
            raise ValueError(f"need 1 <= N <= d, got N={self.n_particles}, d={self.d}")

    @property
    def basis(self) -> list[tuple[int, ...]]:
        return list(combinations(range(self.d), self.n_particles))

    @property
    def intrinsic_dim(self) -> int:
        return math.comb(self.d, self.n_particles)

    def subset_index(self, subset) -> int:
        """Lexicographic rank of an N-subset (combinatorial unranking inverse)."""
        subset = tuple(sorted(subset))
        if len(subset) != self.n_particles or len(set(subset)) != self.n_particles:
            raise ValueError(f"not an {self.n_particles}-subset: {subset}")
        if subset[0] < 0 or subset[-1] >= self.d:
            raise ValueError(f"subset {subset} out of range for d={self.d}")
        rank = 0
        prev = -1
        remaining = self.n_particles
        for pos, s in enumerate(subset):
            for x in range(prev + 1, s):
                rank += math.comb(self.d - x - 1, remaining - 1)
            prev = s
            remaining -= 1
        return rank


@dataclass(frozen=True)
class SplitIsometry:
    """Isometric embedding of wedge^N C^d into wedge^K (x) wedge^(N-K)."""

    space: FermionSpace
    k_split: int
    matrix: scipy.sparse.csr_matrix      # (dim_a * dim_b, C(d,N))
    adjoint: scipy.sparse.csr_matrix

    @property
    def dims(self) -> tuple[int, int]:
        d, n = self.space.d, self.space.n_particles
        return (math.comb(d, self.k_split), math.comb(d, n - self.k_split))

    def embed(self, intrinsic: np.ndarray) -> np.ndarray:
        return self.matrix @ intrinsic

    def restrict(self, ambient: np.ndarray) -> np.ndarray:
        return self.adjoint @ ambient


def split_isometry(space: FermionSpace, k_split: int) -> SplitIsometry:
    d, n = space.d, space.n_particles
    if not 1 <= k_split <= n - 1:
        raise ValueError(f"need 1 <= K <= N-1, got K={k_split}")
    space_a = FermionSpace(d, k_split)
    space_b = FermionSpace(d, n - k_split)
    dim_b = space_b.intrinsic_dim
    scale = 1.0 / math.sqrt(math.comb(n, k_split))
    rows, cols, vals = [], [], []
    for j, subset in enumerate(space.basis):
        for part_a in combinations(subset, k_split):
            part_b = tuple(x for x in subset if x not in part_a)
            row = space_a.subset_index(part_a) * dim_b + space_b.subset_index(part_b)
            rows.append(row)
            cols.append(j)
            vals.append(shuffle_sign(part_a, part_b) * scale)
    dim_a = space_a.intrinsic_dim
    m = scipy.sparse.csr_matrix((vals, (rows, cols)),
                                shape=(dim_a * dim_b, space.intrinsic_dim))
    return SplitIsometry(space, k_split, m, m.getH().tocsr())


def fermion_projector(space: FermionSpace, k_split: int,
                      isometry: SplitIsometry | None = None) -> SubspaceProjector:
    """Projector onto the embedded N-fermion space inside the K | N-K split."""
    iso = isometry if isometry is not None else split_isometry(space, k_split)
    dim_a, dim_b = iso.dims

    def apply(v: np.ndarray) -> np.ndarray:
        return iso.embed(iso.restrict(v))

    return SubspaceProjector(dim_a * dim_b, apply, rank=space.intrinsic_dim,
                             label=f"fermion(d={space.d},N={space.n_particles},K={k_split})")


def slater_state(space: FermionSpace, occupied) -> PureState:
    """Slater determinant in intrinsic coordinates: a subset basis vector."""
    idx = space.subset_index(occupied)
    amps = np.zeros(space.intrinsic_dim, dtype=np.complex128)
    amps[idx] = 1.0
    return PureState((space.intrinsic_dim,), amps)


def wedge(space_out: FermionSpace, psi: np.ndarray, k1: int,
          phi: np.ndarray, k2: int) -> np.ndarray:
    """Normalized antisymmetric product of two intrinsic fermionic states.

    ``psi`` has K1 particles, ``phi`` K2; the result lives in the
    (K1+K2)-particle intrinsic space of ``space_out``. Returns zero if the
    antisymmetrized product vanishes. Not linear: it renormalizes.
    """
    d = space_out.d
    if space_out.n_particles != k1 + k2:
        raise ValueError("output space has the wrong particle number")
    sa = FermionSpace(d, k1)
    sb = FermionSpace(d, k2)
    out = np.zeros(space_out.intrinsic_dim, dtype=np.complex128)
    for j, subset in enumerate(space_out.basis):
        acc = 0.0 + 0.0j
        for part_a in combinations(subset, k1):
            part_b = tuple(x for x in subset if x not in part_a)
            acc += (shuffle_sign(part_a, part_b)
                    * psi[sa.subset_index(part_a)] * phi[sb.subset_index(part_b)])
        out[j] = acc
    n = np.linalg.norm(out)
    return out / n if n > 0 else out


def yang_pair_state(d: int) -> np.ndarray:
    """The paired 2-fermion state: sum over sqrt(2/d) |2i wedge 2i+1>."""
    if d % 2:
        raise ValueError("d must be even")
    space2 = FermionSpace(d, 2)
    amps = np.zeros(space2.intrinsic_dim, dtype=np.complex128)
    for i in range(d // 2):
        amps[space2.subset_index((2 * i, 2 * i + 1))] = math.sqrt(2.0 / d)
    return amps


def yang_state(space: FermionSpace) -> PureState:
    """Antisymmetrized power of the paired 2-fermion state, intrinsic coords."""
    d, n = space.d, space.n_particles
    if d % 2 or n % 2:
        raise ValueError(f"Yang state needs d and N even, got d={d}, N={n}")
    pair = yang_pair_state(d)
    amps = pair
    particles = 2
    while particles < n:
        amps = wedge(FermionSpace(d, particles + 2), amps, particles, pair, 2)
        particles += 2
    return PureState((space.intrinsic_dim,), amps / np.linalg.norm(amps))


def yang_symmetry_unitary(d: int, seed) -> np.ndarray:
    """Random unitary in the symmetry group of the paired 2-fermion state.

    In the pairing basis these satisfy conj(U[2i,2j]) = U[2i+1,2j+1] and
    conj(U[2i,2j+1]) = -U[2i+1,2j]. Generated by projecting a random
    anti-Hermitian matrix onto the fixed subalgebra of the involution
    H -> J conj(H) J^T and exponentiating.
    """
    if d % 2:
        raise ValueError("d must be even")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (g - g.conj().T) / 2.0
    j2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    jmat = np.kron(np.eye(d // 2), j2)
    h = (h + jmat @ h.conj() @ jmat.T) / 2.0
    return scipy.linalg.expm(h)


def embed_fermion_state(state: PureState, space: FermionSpace) -> PureState:
    """Map intrinsic coordinates to the full (C^d)^(x)N tensor representation."""
    if state.amps.size != space.intrinsic_dim:
        raise ValueError("intrinsic length does not match the fermion space")
    b = slater_basis(space.d, space.n_particles)
    amb = b @ state.amps
    return PureState((space.d,) * space.n_particles, amb / np.linalg.norm(amb))


# ---------------------------------------------------------------------------
# quantum channels

@dataclass(frozen=True)
class ChannelSpec:
    """Trace-preserving channel given by Kraus operators (each d_A x d_S)."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus)
        if not ops:
            raise ValueError("need at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValueError("all Kraus operators must have the same shape")
        object.__setattr__(self, "kraus", ops)
        total = sum(k.conj().T @ k for k in ops)
        if not np.allclose(total, np.eye(self.d_s), atol=1e-10):
            raise ValueError("Kraus operators are not trace preserving")

    @property
    def d_a(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def d_s(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_b(self) -> int:
        return len(self.kraus)

    def output(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    @classmethod
    def from_json(cls, path) -> "ChannelSpec":
        with open(path) as fh:
            doc = json.load(fh)
        ops = []
        for mat in doc["kraus"]:
            ops.append(np.array([[complex(re, im) for re, im in row] for row in mat]))
        spec = cls(tuple(ops))
        if "d_s" in doc and spec.d_s != doc["d_s"]:
            raise ValueError("d_s in file does not match Kraus shapes")
        if "d_a" in doc and spec.d_a != doc["d_a"]:
            raise ValueError("d_a in file does not match Kraus shapes")
        return spec


def stinespring_isometry(channel: ChannelSpec) -> np.ndarray:
    """Isometry V: C^{d_S} -> C^{d_A} (x) C^{d_B}, ancilla index fastest."""
    m = channel.d_b
    v = np.zeros((channel.d_a * m, channel.d_s), dtype=np.complex128)
    for i, k in enumerate(channel.kraus):
        v[i::m, :] = k
    return v


def channel_image_projector(channel: ChannelSpec) -> SubspaceProjector:
    """Projector onto the image of the Stinespring isometry."""
    v = stinespring_isometry(channel)
    vh = v.conj().T

    def apply(x: np.ndarray) -> np.ndarray:
        return v @ (vh @ x)

    return SubspaceProjector(v.shape[0], apply, rank=channel.d_s,
                             label=f"channel(d_s={channel.d_s},d_a={channel.d_a})")
