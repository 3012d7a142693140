"""Reproducible experiment campaigns: Monte-Carlo fidelity studies, loss
scaling in the sample size, the component-wise mixed-state workflow, and
retarder parameter extraction from reconstructed processes.

Determinism contract: a campaign is a pure function of its config (including
the seed).  Per-replication seeds are derived from the campaign seed with the
counter-based rule ``SeedSequence(seed, spawn_key=(index,))``, so replications
can run in any order or in parallel without changing results.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .ml_engine import ReconstructionConfig, reconstruct_state, solve_likelihood
from .process_algebra import kraus_from_chi, chi_from_kraus
from .protocols import (
    ExperimentPlan,
    auxiliary_rows,
    bn_state_protocol,
    generate_counts,
    process_protocol,
)
from .quantum_core import fidelity, hermitian_eig, von_neumann_entropy
from .waveplate import (
    SU2Retarder,
    SpectralProfile,
    WaveplateSpec,
    birefringence_from_delta,
    broadband_mixed_state,
    component_sum_state,
    fit_su2_retarder,
    plate_choi_state,
    sinc2_profile,
)

__all__ = [
    "TruthSpec",
    "CampaignConfig",
    "CampaignResult",
    "MixedWorkflowConfig",
    "EstimateTooMixedError",
    "derive_seed",
    "build_truth",
    "run_mc_campaign",
    "run_scaling_study",
    "run_mixed_state_workflow",
    "run_retarder_fit",
    "bootstrap_ratio_lower_bound",
]

HISTOGRAM_BINS = 30


class EstimateTooMixedError(ValueError):
    """A retarder fit was requested on an estimate that is not close enough
    to a unitary process."""


@dataclass(frozen=True)
class TruthSpec:
    """True process for data generation: a dispersive plate, the identity
    channel, or an explicit Choi matrix supplied by the caller."""

    kind: str = "plate"
    thickness_um: float = 5024.0
    alpha_deg: float = 45.0
    lam0_um: float = 1.1509
    fwhm_um: float = 0.008
    knots: int = 801
    span: float = 40.0
    rank: int | None = None  # optional truncation of the generated process


@dataclass(frozen=True)
class CampaignConfig:
    scenario: str = "plate-r4"
    protocol: str = "R4"
    truth: TruthSpec = field(default_factory=TruthSpec)
    n_events: int = 10_000
    replications: int = 50
    reconstruction_rank: int = 2
    seed: int = 0
    auxiliary_weight: float = 10.0
    damping: float = 0.5
    max_iterations: int = 20_000
    convergence_tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 1 <= self.reconstruction_rank <= 4:
            raise ValueError("reconstruction rank must be in [1, 4]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        data = dict(data)
        truth = data.pop("truth", {})
        return cls(truth=TruthSpec(**truth), **data)


@dataclass(frozen=True)
class CampaignResult:
    fidelities: np.ndarray  # NaN where the replication failed
    mean_loss: float
    failures: list[int]
    histogram: dict  # bin_left / bin_right / count arrays
    info_spectrum: np.ndarray
    info_modes_above_cut: int
    nu: int | None
    metadata: dict


def derive_seed(campaign_seed: int, index: int) -> int:
    """Counter-based per-replication seed (documented derivation rule)."""
    child = np.random.SeedSequence(campaign_seed, spawn_key=(index,))
    return int(child.generate_state(1, np.uint64)[0])


def _truncate_rank(choi: np.ndarray, rank: int) -> np.ndarray:
    ops = kraus_from_chi(2.0 * choi, tol=0.0)[:rank]
    chi = chi_from_kraus(ops)
    return chi / chi.trace().real


def build_truth(spec: TruthSpec) -> np.ndarray:
    """Trace-1 Choi state of the configured true process."""
    if spec.kind == "identity":
        phi = np.zeros(4, dtype=complex)
        phi[0] = phi[3] = 1.0 / np.sqrt(2)
        return np.outer(phi, phi.conj())
    if spec.kind == "plate":
        plate = WaveplateSpec(spec.thickness_um, np.deg2rad(spec.alpha_deg))
        profile = sinc2_profile(spec.lam0_um, spec.fwhm_um, spec.knots, spec.span)
        choi = plate_choi_state(plate, profile)
        if spec.rank is not None:
            choi = _truncate_rank(choi, spec.rank)
        return choi
    raise ValueError(f"unknown truth kind {spec.kind!r}")


def _solver_config(config: CampaignConfig) -> ReconstructionConfig:
    return ReconstructionConfig(
        rank=config.reconstruction_rank,
        damping=config.damping,
        max_iterations=config.max_iterations,
        convergence_tol=config.convergence_tol,
    )


def _run_replications(config: CampaignConfig, indices: list[int]) -> list[dict]:
    truth = build_truth(config.truth)
    proto = process_protocol(config.protocol, config.truth.lam0_um)
    solver = _solver_config(config)
    out = []
    for i in indices:
        plan = ExperimentPlan(
            n_total=config.n_events,
            seed=derive_seed(config.seed, i),
            auxiliary_weight=config.auxiliary_weight,
        )
        record: dict = {"index": i}
        try:
            data = generate_counts(proto.rows, truth, plan)
            total_t = sum(r.exposure for r in data)
            rows = data + auxiliary_rows(
                proto.input_states, total_t, config.auxiliary_weight
            )
            res = solve_likelihood(rows, solver)
            record["fidelity"] = fidelity(truth, res.estimate)
            record["converged"] = res.converged
            if i == 0:
                record["info_spectrum"] = res.info_spectrum.tolist()
                record["nu"] = res.nu
        except Exception as exc:  # failure is data, not a crash
            record["error"] = f"{type(exc).__name__}: {exc}"
        out.append(record)
    return out


def _chunks(n: int, parts: int) -> list[list[int]]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [list(range(bounds[p], bounds[p + 1])) for p in range(parts)]


def run_mc_campaign(config: CampaignConfig, threads: int = 1) -> CampaignResult:
    """Generate -> reconstruct -> fidelity for every replication.

    Failed replications (solver exceptions or non-convergence) are counted
    and reported; their fidelity slots hold NaN and they are excluded from
    the mean loss and the histogram.
    """
    n = config.replications
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            batches = pool.map(_run_replications, [config] * threads, _chunks(n, threads))
            records = [r for batch in batches for r in batch]
    else:
        records = _run_replications(config, list(range(n)))
    records.sort(key=lambda r: r["index"])

    fidelities = np.full(n, np.nan)
    failures = []
    info_spectrum = np.array([])
    nu = None
    for rec in records:
        i = rec["index"]
        if "error" in rec or not rec.get("converged", False):
            failures.append(i)
        if "fidelity" in rec:
            fidelities[i] = rec["fidelity"]
        if "info_spectrum" in rec:
            info_spectrum = np.asarray(rec["info_spectrum"])
            nu = rec["nu"]

    ok = ~np.isnan(fidelities)
    ok[failures] = False
    losses = 1.0 - fidelities[ok]
    mean_loss = float(losses.mean()) if losses.size else math.nan
    if losses.size:
        lo, hi = float(losses.min()), float(losses.max())
        hi = hi if hi > lo else lo + 1e-12
        counts, edges = np.histogram(losses, bins=HISTOGRAM_BINS, range=(lo, hi))
    else:
        counts, edges = np.zeros(HISTOGRAM_BINS, int), np.linspace(0, 1, HISTOGRAM_BINS + 1)
    modes_above = (
        int(np.sum(info_spectrum > 1e-8 * info_spectrum[0])) if info_spectrum.size else 0
    )
    from . import __version__

    return CampaignResult(
        fidelities=fidelities,
        mean_loss=mean_loss,
        failures=failures,
        histogram={
            "bin_left": edges[:-1].tolist(),
            "bin_right": edges[1:].tolist(),
            "count": counts.tolist(),
        },
        info_spectrum=info_spectrum,
        info_modes_above_cut=modes_above,
        nu=nu,
        metadata={
            "seed": config.seed,
            "config": config.to_dict(),
            "chitomo_version": __version__,
            "numpy_version": np.__version__,
        },
    )


def run_scaling_study(
    base: CampaignConfig,
    n_list: list[int],
    ranks: tuple[int, ...] = (2, 4),
    threads: int = 1,
) -> dict:
    """Mean loss vs n on a log-log grid with least-squares slopes per rank."""
    if len(n_list) < 3:
        raise ValueError("need at least 3 sample sizes")
    study: dict = {"n_list": list(n_list), "per_rank": {}}
    for rank_idx, rank in enumerate(ranks):
        means = []
        for n_idx, n in enumerate(n_list):
            cell_seed = int(
                np.random.SeedSequence(
                    base.seed, spawn_key=(rank_idx, n_idx)
                ).generate_state(1, np.uint64)[0]
            )
            config = CampaignConfig.from_dict(
                {
                    **base.to_dict(),
                    "scenario": f"{base.scenario}-rank{rank}-n{n}",
                    "n_events": int(n),
                    "reconstruction_rank": rank,
                    "seed": cell_seed,
                }
            )
            means.append(run_mc_campaign(config, threads=threads).mean_loss)
        slope, intercept = np.polyfit(np.log10(n_list), np.log10(means), 1)
        study["per_rank"][rank] = {
            "mean_loss": means,
            "slope": float(slope),
            "intercept": float(intercept),
        }
    return study


def bootstrap_ratio_lower_bound(
    numerator: np.ndarray,
    denominator: np.ndarray,
    alpha: float = 0.05,
    n_boot: int = 4000,
    seed: int = 0,
) -> float:
    """One-sided lower confidence bound of mean(numerator)/mean(denominator)
    by independent nonparametric bootstrap."""
    rng = np.random.default_rng(seed)
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    idx_n = rng.integers(0, num.size, (n_boot, num.size))
    idx_d = rng.integers(0, den.size, (n_boot, den.size))
    ratios = num[idx_n].mean(axis=1) / den[idx_d].mean(axis=1)
    return float(np.quantile(ratios, alpha))


@dataclass(frozen=True)
class MixedWorkflowConfig:
    """Component-wise reconstruction of broadband mixed polarization states."""

    plate_thickness_um: float = 5031.0
    plate_alpha_deg: float = 45.0
    lam0_um: float = 1.0
    fwhm_um: float = 0.008
    knots: int = 801
    span: float = 40.0
    component_lams_um: tuple[float, ...] = (
        0.994,
        0.996,
        0.998,
        1.000,
        1.002,
        1.004,
        1.006,
    )
    n_events: int = 100_000
    measurement_orientations: int = 36
    measurement_plate_um: float = 312.7
    component_rank: int = 1
    broadband_rank: int = 2
    seed: int = 0
    subsets: tuple[tuple[int, ...], ...] = (
        (1, 2, 3, 4, 5, 6, 7),
        (2, 3, 4, 5, 6),
        (3, 4, 5),
        (2, 4, 6),
        (1, 2, 3, 4),
        (2, 3, 7),
    )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MixedWorkflowConfig":
        data = dict(data)
        for key in ("component_lams_um",):
            if key in data:
                data[key] = tuple(data[key])
        if "subsets" in data:
            data["subsets"] = tuple(tuple(s) for s in data["subsets"])
        return cls(**data)


def _component_weights(config: MixedWorkflowConfig) -> np.ndarray:
    # sinc**2 sample of the spectral shape at each component wavelength,
    # normalized to 1 at the profile center.
    from .waveplate import SINC_HALF_POWER

    x = (
        2.0
        * SINC_HALF_POWER
        * (np.asarray(config.component_lams_um) - config.lam0_um)
        / config.fwhm_um
    )
    return np.sinc(x / np.pi) ** 2


def _reconstruct_from_b36(
    rho_truth: np.ndarray, config: MixedWorkflowConfig, rank: int, seed: int
) -> np.ndarray:
    proto = bn_state_protocol(
        config.measurement_orientations, config.measurement_plate_um, config.lam0_um
    )
    plan = ExperimentPlan(n_total=config.n_events, seed=seed)
    data = generate_counts(proto.rows, rho_truth, plan)
    res = reconstruct_state(data, ReconstructionConfig(rank=rank))
    return res.estimate


def run_mixed_state_workflow(config: MixedWorkflowConfig) -> dict:
    """Three-stage report: broadband truth + reconstruction, per-component
    reconstructions, and component-sum states for the configured subsets.

    Returned fidelities compare against the broadband truth of the matching
    plate count; entropies are in bits.
    """
    input_v = np.array([0.0, 1.0], dtype=complex)
    plate = WaveplateSpec(config.plate_thickness_um, np.deg2rad(config.plate_alpha_deg))
    profile = sinc2_profile(config.lam0_um, config.fwhm_um, config.knots, config.span)
    weights = _component_weights(config)

    report: dict = {"config": config.to_dict(), "per_plate_count": {}}
    for n_plates in (1, 2):
        plates = [plate] * n_plates
        truth = broadband_mixed_state(input_v, plates, profile)
        seed0 = derive_seed(config.seed, 1000 * n_plates)
        estimate = _reconstruct_from_b36(truth, config, config.broadband_rank, seed0)
        stage1 = {
            "truth_entropy_bits": von_neumann_entropy(truth),
            "reconstruction_fidelity": fidelity(truth, estimate),
        }

        components = []
        stage2 = []
        for idx, lam in enumerate(config.component_lams_um):
            mono = SpectralProfile(np.array([lam]), np.array([1.0]))
            comp_truth = broadband_mixed_state(input_v, plates, mono)
            comp_est = _reconstruct_from_b36(
                comp_truth,
                config,
                config.component_rank,
                derive_seed(config.seed, 1000 * n_plates + 1 + idx),
            )
            components.append(comp_est)
            stage2.append(
                {
                    "lam_um": lam,
                    "weight": float(weights[idx]),
                    "fidelity_vs_pure_truth": fidelity(comp_truth, comp_est),
                }
            )

        stage3 = []
        for subset in config.subsets:
            mix = component_sum_state(
                [(float(weights[i - 1]), components[i - 1]) for i in subset]
            )
            stage3.append(
                {
                    "subset": list(subset),
                    "fidelity_vs_broadband": fidelity(truth, mix),
                    "entropy_bits": von_neumann_entropy(mix),
                }
            )
        report["per_plate_count"][n_plates] = {
            "stage1": stage1,
            "stage2": stage2,
            "stage3": stage3,
        }
    return report


def run_retarder_fit(
    choi: np.ndarray,
    lam_um: float,
    thickness_um: float,
    min_dominant_share: float = 0.95,
) -> dict:
    """Extract retarder orientation and birefringence from a reconstructed
    process that is approximately unitary.

    The dominant Kraus operator is projected onto SU(2) (polar projection,
    determinant normalized); refuses with a diagnostic when the dominant
    Choi eigenvalue share is below ``min_dominant_share``.
    """
    choi = np.asarray(choi, dtype=complex)
    choi = choi / choi.trace().real
    w, _ = hermitian_eig(choi)
    share = float(w[0] / w.sum())
    mixedness = 1.0 - share
    if share < min_dominant_share:
        raise EstimateTooMixedError(
            f"dominant eigenvalue share {share:.4f} < {min_dominant_share}; "
            "the process is too mixed for a single-retarder fit"
        )
    s = math.isqrt(choi.shape[0])
    dominant = kraus_from_chi(s * choi, tol=1e-12)[0]
    u_left, _, v_right = np.linalg.svd(dominant)
    unitary = u_left @ v_right
    unitary = unitary / np.sqrt(np.linalg.det(unitary))
    # retarder_unitary matrices map to the (t, r) parameterization by
    # entrywise conjugation.
    g = SU2Retarder(complex(np.conj(unitary[0, 0])), complex(np.conj(unitary[0, 1])))
    delta, alpha, degenerate = fit_su2_retarder(g)
    return {
        "delta_rad": delta,
        "alpha_rad": alpha,
        "alpha_deg": float(np.rad2deg(alpha)),
        "birefringence": birefringence_from_delta(delta, lam_um, thickness_um),
        "degenerate": degenerate,
        "dominant_share": share,
        "mixedness": mixedness,
        "entropy_bits": von_neumann_entropy(choi),
    }
