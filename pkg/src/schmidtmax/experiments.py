"""Experiment drivers: fermionic extremal values, AME search, variety probing
and minimal output Renyi entropy of channels."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .measures import NormSpec
from .optimize import (
    IterationConfig,
    IterationReport,
    Objective,
    run_single,
    split_seed,
)
from .states import Cut, robust_svd
from .subspaces import (
    ChannelSpec,
    FermionSpace,
    SubspaceProjector,
    channel_image_projector,
    fermion_projector,
    identity_projector,
    slater_basis,
    span_projector,
    split_isometry,
    symmetric_basis,
    yang_state,
)

HIT_TOL = 1e-6


class InconsistencyError(RuntimeError):
    """A probe protocol produced a result that contradicts its own premise."""


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    params: dict
    best_value: float
    target: float | None
    target_provenance: str | None
    success_count: int
    restarts: int
    mean_iterations_success: float | None
    wall_time: float
    seed: int
    details: dict = field(default_factory=dict)
    report: IterationReport | None = None

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "best_value": self.best_value,
            "target": self.target,
            "target_provenance": self.target_provenance,
            "success_count": self.success_count,
            "restarts": self.restarts,
            "mean_iterations_success": self.mean_iterations_success,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "details": self.details,
        }


@dataclass(frozen=True)
class RankProfile:
    """Per-factor Schmidt rank caps for the subspace variety."""

    dims: tuple[int, ...]
    ranks: tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) != len(self.ranks):
            raise ValueError("dims and ranks must have equal length")
        for d, r in zip(self.dims, self.ranks):
            if not 1 <= r <= d:
                raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")

    def effective_ranks(self) -> tuple[int, ...]:
        total = math.prod(self.ranks)
        return tuple(min(r, total // r) for r in self.ranks)


def subspace_variety_dimension(profile: RankProfile) -> int:
    """Dimension of the variety of states with factor-wise Schmidt ranks <= r_i."""
    r = profile.ranks
    d = profile.dims
    total = math.prod(r)
    return total + sum(min(r[i], total // r[i]) * (d[i] - r[i]) for i in range(len(r)))


# ---------------------------------------------------------------------------
# fermionic extremal problems

def fermion_extremal_target(d: int, n_fermions: int, k_split: int,
                            spec: NormSpec) -> tuple[float, str] | None:
    """Known/conjectured squared optimum for unweighted p=2 problems."""
    if spec.weights is not None or spec.p != 2:
        return None
    keff = min(k_split, n_fermions - k_split)
    even = d % 2 == 0 and n_fermions % 2 == 0
    if spec.k == 1 and keff == 1:
        return 1.0 / n_fermions, "single-particle occupation bound"
    if spec.k == 1 and keff == 2 and even:
        return (d - n_fermions + 2) / ((n_fermions - 1) * d), "paired-state bound"
    if spec.k == 2 and keff == 2 and even:
        val = (1.0 + 0.5 * (n_fermions - 2) * (d - n_fermions + 2) / (d - 2)) \
            / math.comb(n_fermions, 2)
        return val, "two-coefficient pairing conjecture"
    return None


def fermion_objective(d: int, n_fermions: int, k_split: int, spec: NormSpec):
    """Intrinsic-representation objective for one fermionic cut."""
    space = FermionSpace(d, n_fermions)
    iso = split_isometry(space, k_split)
    proj = fermion_projector(space, k_split, isometry=iso)
    dims = iso.dims
    return Objective(dims, proj, ((Cut((0,)), spec),)), iso


def fermion_extremal(d: int, n_fermions: int, k_split: int, spec: NormSpec,
                     config: IterationConfig) -> ExperimentResult:
    """Maximize a Schmidt norm over N-fermion states across the K | N-K cut."""
    t0 = time.perf_counter()
    objective, iso = fermion_objective(d, n_fermions, k_split, spec)
    target = fermion_extremal_target(d, n_fermions, k_split, spec)
    targets = None
    if target is not None:
        targets = [math.sqrt(target[0])]
    report = run_single(objective, config, term_targets=targets)
    best = report.best
    details = {"best_value_squared": best.term_norms[0] ** 2}
    return ExperimentResult(
        experiment="fermion_extremal",
        params={"d": d, "N": n_fermions, "K": k_split, "p": spec.p, "k": spec.k},
        best_value=best.term_norms[0],
        target=None if target is None else math.sqrt(target[0]),
        target_provenance=None if target is None else target[1],
        success_count=report.success_count,
        restarts=config.restarts,
        mean_iterations_success=report.mean_iterations_success,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        details=details,
        report=report,
    )


def fermion_entropy_min(d: int, n_fermions: int, k_split: int, alpha: float,
                        config: IterationConfig) -> ExperimentResult:
    """Minimize the alpha-Renyi particle entanglement entropy over fermions.

    Maps to maximizing the (2 alpha, n_s) Schmidt norm; the conjectured
    minimum entropy is log C(N, K), attained on Slater determinants.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1 for entropy minimization")
    t0 = time.perf_counter()
    space = FermionSpace(d, n_fermions)
    iso = split_isometry(space, k_split)
    n_s = min(iso.dims)
    spec = NormSpec(p=2 * alpha, k=n_s)
    proj = fermion_projector(space, k_split, isometry=iso)
    objective = Objective(iso.dims, proj, ((Cut((0,)), spec),))
    # entropy target log C(N,K) <=> norm target C(N,K)^((1-alpha)/(2 alpha))
    binom = math.comb(n_fermions, k_split)
    target_norm = binom ** ((1.0 - alpha) / (2.0 * alpha))
    report = run_single(objective, config, term_targets=[target_norm])
    best = report.best
    best_entropy = (2.0 * alpha / (1.0 - alpha)) * math.log(best.term_norms[0])
    probs = robust_svd(best.amps.reshape(iso.dims), compute_uv=False) ** 2
    probs = probs[probs > 1e-14]
    von_neumann = float(-np.sum(probs * np.log(probs)))
    return ExperimentResult(
        experiment="fermion_entropy_min",
        params={"d": d, "N": n_fermions, "K": k_split, "alpha": alpha},
        best_value=best_entropy,
        target=math.log(binom),
        target_provenance="Slater-determinant entropy floor",
        success_count=report.success_count,
        restarts=config.restarts,
        mean_iterations_success=report.mean_iterations_success,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        details={"max_norm": best.term_norms[0], "von_neumann_entropy": von_neumann},
        report=report,
    )


def yang_state_value(d: int, n_fermions: int, k_split: int) -> float:
    """lambda_1^2 of the Yang state across the K | N-K cut (direct evaluation)."""
    space = FermionSpace(d, n_fermions)
    iso = split_isometry(space, k_split)
    amb = iso.embed(yang_state(space).amps)
    s = robust_svd(amb.reshape(iso.dims), compute_uv=False)
    return float(s[0] ** 2)


# ---------------------------------------------------------------------------
# absolutely maximally entangled states

def balanced_cuts(local_dims) -> list[Cut]:
    """All floor(n/2)-party cuts; complementary duplicates removed for even n."""
    n = len(local_dims)
    half = n // 2
    subsets = list(combinations(range(n), half))
    if n % 2 == 0:
        subsets = [s for s in subsets if 0 in s]
    return [Cut(s) for s in subsets]


def ame_search(local_dims, config: IterationConfig) -> ExperimentResult:
    """Search for a state whose balanced reductions are all maximally mixed."""
    dims = tuple(int(d) for d in local_dims)
    if len(dims) < 3:
        raise ValueError("need at least 3 parties")
    t0 = time.perf_counter()
    cuts = balanced_cuts(dims)
    terms = []
    targets = []
    for cut in cuts:
        n_s = cut.split(dims).n_s
        terms.append((cut, NormSpec(p=1, k=n_s)))
        targets.append(math.sqrt(n_s))
    objective = Objective(dims, identity_projector(math.prod(dims)), tuple(terms))
    report = run_single(objective, config, term_targets=targets)
    best = report.best
    deficits = [t - n for n, t in zip(best.term_norms, targets)]
    return ExperimentResult(
        experiment="ame_search",
        params={"dims": list(dims)},
        best_value=best.value,
        target=float(sum(targets)),
        target_provenance="all balanced cuts maximally mixed",
        success_count=report.success_count,
        restarts=config.restarts,
        mean_iterations_success=report.mean_iterations_success,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        details={
            "cuts": [list(c.side_a) for c in cuts],
            "per_cut_targets": targets,
            "best_per_cut_values": list(best.term_norms),
            "best_per_cut_deficits": deficits,
        },
        report=report,
    )


# ---------------------------------------------------------------------------
# variety probing

@dataclass(frozen=True)
class ProbeSetting:
    """Structured space plus detection objective for one variety-probe row."""

    ambient_dims: tuple[int, ...]
    basis: object | None          # intrinsic -> ambient, orthonormal columns
    intrinsic_dim: int
    cut: Cut
    spec: NormSpec
    target: float


def probe_setting(space: str, target_kind: str, *, dims=None, d=None,
                  n_parties=2, rank=1) -> ProbeSetting:
    """Configure a variety probe.

    space: "full" (dims=(d_A,d_B)), "symmetric" or "antisymmetric" (d, n_parties).
    target_kind: "rank" (with rank=r), "max_entangled", "condensate",
    "slater", "yang".
    """
    if space == "full":
        if dims is None or len(dims) != 2:
            raise ValueError("full space needs dims=(d_A, d_B)")
        ambient_dims = tuple(int(x) for x in dims)
        basis = None
        intrinsic = math.prod(ambient_dims)
    elif space == "symmetric":
        ambient_dims = (d,) * n_parties
        basis = symmetric_basis(d, n_parties)
        intrinsic = basis.shape[1]
    elif space == "antisymmetric":
        ambient_dims = (d,) * n_parties
        basis = slater_basis(d, n_parties)
        intrinsic = basis.shape[1]
    else:
        raise ValueError(f"unknown space {space!r}")

    cut = Cut((0,))
    if target_kind == "rank":
        spec = NormSpec(p=2, k=rank)
        target = 1.0
    elif target_kind == "max_entangled":
        n_s = cut.split(ambient_dims).n_s
        spec = NormSpec(p=1, k=n_s)
        target = math.sqrt(n_s)
    elif target_kind == "condensate":
        if space != "symmetric":
            raise ValueError("condensate targets live in the symmetric space")
        spec = NormSpec(p=2, k=1)
        target = 1.0
    elif target_kind == "slater":
        if space != "antisymmetric":
            raise ValueError("Slater targets live in the antisymmetric space")
        spec = NormSpec(p=2, k=1)
        target = 1.0 / math.sqrt(n_parties)
    elif target_kind == "yang":
        if space != "antisymmetric":
            raise ValueError("Yang targets live in the antisymmetric space")
        cut = Cut((0, 1))
        spec = NormSpec(p=2, k=1)
        target = math.sqrt((d - n_parties + 2) / ((n_parties - 1) * d))
    else:
        raise ValueError(f"unknown target kind {target_kind!r}")
    return ProbeSetting(ambient_dims, basis, intrinsic, cut, spec, target)


def _random_structured_projector(setting: ProbeSetting, subspace_dim: int,
                                 seed) -> SubspaceProjector:
    rng = np.random.default_rng(seed)
    for _ in range(10):
        g = rng.standard_normal((subspace_dim, setting.intrinsic_dim)) \
            + 1j * rng.standard_normal((subspace_dim, setting.intrinsic_dim))
        if setting.basis is not None:
            vecs = (setting.basis @ g.T).T
        else:
            vecs = g
        proj = span_projector(vecs, label=f"probe(D={subspace_dim})")
        if proj.rank == subspace_dim:
            return proj
    raise InconsistencyError("could not draw a full-rank random subspace")


def variety_probe(setting: ProbeSetting, config: IterationConfig,
                  trials: int = 5) -> ExperimentResult:
    """Largest random-subspace dimension that avoids the target states.

    Scans D = 1, 2, ... with ``trials`` random D-dimensional subspaces of
    the structured space each; a subspace contains the target when the
    optimizer gets within 1e-6 of the target value. Verifies that at the
    returned D + 1 every trial contains the target.
    """
    t0 = time.perf_counter()
    ambient = math.prod(setting.ambient_dims)
    hits_by_dim = {}
    answer = None
    for subspace_dim in range(1, setting.intrinsic_dim + 1):
        hits = 0
        for trial in range(trials):
            seed = split_seed(config.seed, subspace_dim * 10007 + trial)
            proj = _random_structured_projector(setting, subspace_dim, seed)
            objective = Objective(setting.ambient_dims, proj,
                                  ((setting.cut, setting.spec),))
            report = run_single(objective, replace(config, seed=seed))
            if abs(report.best.term_norms[0] - setting.target) < HIT_TOL:
                hits += 1
        hits_by_dim[subspace_dim] = hits
        if hits > 0:
            if hits != trials:
                raise InconsistencyError(
                    f"boundary dimension {subspace_dim}: only {hits}/{trials} "
                    "trials contain the target")
            answer = subspace_dim - 1
            break
    if answer is None:
        raise InconsistencyError("target never found, even at full dimension")
    return ExperimentResult(
        experiment="variety_probe",
        params={"ambient_dims": list(setting.ambient_dims),
                "intrinsic_dim": setting.intrinsic_dim,
                "cut": list(setting.cut.side_a),
                "p": setting.spec.p, "k": setting.spec.k,
                "target_value": setting.target, "trials": trials},
        best_value=float(answer),
        target=None,
        target_provenance=None,
        success_count=trials,
        restarts=config.restarts,
        mean_iterations_success=None,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        details={"max_avoiding_dim": answer, "hits_by_dim": hits_by_dim},
    )


# ---------------------------------------------------------------------------
# minimal output entropy of channels

def min_output_from_projector(proj: SubspaceProjector, dims: tuple[int, int],
                              alpha: float, config: IterationConfig,
                              target_entropy: float | None = None) -> ExperimentResult:
    """Minimal output alpha-Renyi entropy over a subspace given by its projector."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    t0 = time.perf_counter()
    n_s = min(dims)
    spec = NormSpec(p=2 * alpha, k=n_s)
    objective = Objective(dims, proj, ((Cut((0,)), spec),))
    targets = None
    if target_entropy is not None:
        targets = [math.exp(target_entropy * (1.0 - alpha) / (2.0 * alpha))]
    report = run_single(objective, config, term_targets=targets)
    best = report.best
    max_norm = best.term_norms[0]
    min_entropy = (2.0 * alpha / (1.0 - alpha)) * math.log(max_norm)
    return ExperimentResult(
        experiment="min_output_entropy",
        params={"dims": list(dims), "alpha": alpha, "projector": proj.label},
        best_value=min_entropy,
        target=target_entropy,
        target_provenance=None,
        success_count=report.success_count,
        restarts=config.restarts,
        mean_iterations_success=report.mean_iterations_success,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        details={"max_output_alpha_norm": max_norm ** 2, "max_schmidt_norm": max_norm},
        report=report,
    )


def channel_min_output(channel: ChannelSpec, alpha: float,
                       config: IterationConfig,
                       target_entropy: float | None = None) -> ExperimentResult:
    """Minimal output alpha-Renyi entropy of a channel via its Stinespring image."""
    proj = channel_image_projector(channel)
    return min_output_from_projector(proj, (channel.d_a, channel.d_b), alpha,
                                     config, target_entropy=target_entropy)


def channel_pair_multiplicativity(chan_e: ChannelSpec, chan_f: ChannelSpec,
                                  alpha: float, config: IterationConfig) -> ExperimentResult:
    """Joint vs product maximal output alpha-norms of two channels.

    A positive gap (joint exceeding the product) would witness a violation
    of maximal alpha-norm multiplicativity.
    """
    t0 = time.perf_counter()
    res_e = channel_min_output(chan_e, alpha, config)
    res_f = channel_min_output(chan_f, alpha, config)
    kraus_prod = tuple(np.kron(vi, wj) for vi in chan_e.kraus for wj in chan_f.kraus)
    res_ef = channel_min_output(ChannelSpec(kraus_prod), alpha, config)
    lhs = res_ef.details["max_output_alpha_norm"]
    rhs = res_e.details["max_output_alpha_norm"] * res_f.details["max_output_alpha_norm"]
    return ExperimentResult(
        experiment="channel_pair_multiplicativity",
        params={"alpha": alpha,
                "d_s": [chan_e.d_s, chan_f.d_s], "d_a": [chan_e.d_a, chan_f.d_a]},
        best_value=lhs,
        target=rhs,
        target_provenance="product of single-channel maxima",
        success_count=res_ef.success_count,
        restarts=config.restarts,
        mean_iterations_success=None,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        details={"joint_max_norm": lhs, "product_of_maxima": rhs,
                 "multiplicativity_gap": lhs - rhs},
    )


# ---------------------------------------------------------------------------
# success-rate table protocol

def table1_protocol(experiment_specs, seed: int = 0,
                    base_config: IterationConfig | None = None) -> list[dict]:
    """Run each experiment with exactly 10 restarts; tabulate successes.

    Each spec is a dict with a "kind" key ("fermion", "fermion_entropy",
    "ame"), a "label", and the experiment parameters.
    """
    if base_config is None:
        base_config = IterationConfig()
    rows = []
    for i, espec in enumerate(experiment_specs):
        config = replace(base_config, restarts=10, seed=split_seed(seed, i))
        kind = espec["kind"]
        if kind == "fermion":
            spec = NormSpec(p=espec.get("p", 2), k=espec.get("k", 1))
            result = fermion_extremal(espec["d"], espec["N"], espec["K"], spec, config)
        elif kind == "fermion_entropy":
            result = fermion_entropy_min(espec["d"], espec["N"], espec.get("K", 2),
                                         espec.get("alpha", 2), config)
        elif kind == "ame":
            result = ame_search(espec["dims"], config)
        else:
            raise ValueError(f"unknown experiment kind {kind!r}")
        rows.append({
            "label": espec.get("label", kind),
            "mean_iterations": result.mean_iterations_success,
            "successes": result.success_count,
            "best_value": result.best_value,
            "target": result.target,
        })
    return rows
