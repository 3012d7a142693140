"""Tomographic protocol construction and Poisson count synthesis.

A protocol is a list of rows; each row carries a Hermitian PSD intensity
operator, an exposure, and (after data generation) an observed count.  For
process tomography the operators act on the composite (input (x) output)
space and have the effective-projector form ``|conj(c_in)><conj(c_in)| (x)
|c_m><c_m|``; expected rates are traces against the trace-1 Choi state, so a
probability-1 outcome corresponds to rate 1/s.  Auxiliary rows with the
operator ``|conj(c_in)><conj(c_in)| (x) I`` and virtual counts pin the
trace-preservation constraint softly.

Counts are Poisson draws with a sampler built directly on the generator's
uniform stream (inversion below mean 30, transformed rejection above), so a
fixed seed gives bit-identical counts across platforms and numpy versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .waveplate import WaveplateSpec, optical_thickness, plate_unitary

__all__ = [
    "ProtocolRow",
    "ProcessProtocol",
    "StateProtocol",
    "ExperimentPlan",
    "IncompleteProtocolError",
    "j4_states",
    "r4_states",
    "b4_states",
    "state_from_bloch",
    "bloch_vector",
    "bn_state_protocol",
    "process_protocol",
    "auxiliary_rows",
    "generate_counts",
    "sample_poisson",
]

# Central wavelength of the reference numerical experiments, micrometers.
LAMBDA_DEFAULT_UM = 1.1509

_V = np.array([0.0, 1.0], dtype=complex)


class IncompleteProtocolError(ValueError):
    """The measurement set cannot identify the model parameters."""


@dataclass(frozen=True)
class ProtocolRow:
    """Intensity operator, exposure and (optional) observed count."""

    operator: np.ndarray
    exposure: float
    count: int | None = None
    is_auxiliary: bool = False


@dataclass(frozen=True)
class ProcessProtocol:
    name: str
    input_states: list[np.ndarray]
    projectors: list[np.ndarray]
    rows: list[ProtocolRow]


@dataclass(frozen=True)
class StateProtocol:
    name: str
    rows: list[ProtocolRow]


@dataclass(frozen=True)
class ExperimentPlan:
    """Total expected number of events, RNG seed and auxiliary-row weight."""

    n_total: int
    seed: int
    auxiliary_weight: float = 10.0

    def __post_init__(self) -> None:
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        if self.auxiliary_weight <= 0:
            raise ValueError("auxiliary_weight must be positive")


def j4_states() -> list[np.ndarray]:
    """|H>, |V>, |-45deg> = (|H>-|V>)/sqrt2 and |L> = (|H>-i|V>)/sqrt2."""
    h = np.array([1.0, 0.0], dtype=complex)
    v = np.array([0.0, 1.0], dtype=complex)
    return [h, v, (h - v) / np.sqrt(2), (h - 1j * v) / np.sqrt(2)]


def state_from_bloch(a: np.ndarray) -> np.ndarray:
    """Pure qubit state with Bloch vector a (unit 3-vector)."""
    ax, ay, az = np.asarray(a, dtype=float)
    theta = np.arccos(np.clip(az, -1.0, 1.0))
    phi = np.arctan2(ay, ax)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def bloch_vector(psi: np.ndarray) -> np.ndarray:
    """Expectation values of (sigma_x, sigma_y, sigma_z)."""
    a, b = np.asarray(psi, dtype=complex).ravel()
    return np.array(
        [2 * np.real(np.conj(a) * b), 2 * np.imag(np.conj(a) * b), abs(a) ** 2 - abs(b) ** 2]
    )


def r4_states() -> list[np.ndarray]:
    """Tetrahedral state set: Bloch vectors (+-1, +-1, +-1)/sqrt3 with an even
    number of minus signs, pairwise dot products -1/3."""
    vertices = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    return [state_from_bloch(v) for v in vertices]


def b4_states(central_lam_um: float = LAMBDA_DEFAULT_UM) -> list[np.ndarray]:
    """States made by rotating a 214 um plate to 0, 15, 30, 45 degrees in
    front of vertical polarization."""
    plate = WaveplateSpec(214.0, 0.0)
    delta = optical_thickness(plate, central_lam_um)
    return [
        plate_unitary(delta, np.deg2rad(angle)) @ _V for angle in (0.0, 15.0, 30.0, 45.0)
    ]


def _protocol_states(name: str, central_lam_um: float) -> list[np.ndarray]:
    if name == "J4":
        return j4_states()
    if name == "R4":
        return r4_states()
    if name == "B4":
        return b4_states(central_lam_um)
    raise ValueError(f"unknown protocol {name!r}; expected J4, R4 or B4")


def _affine_bloch_rank(states: Sequence[np.ndarray]) -> int:
    rows = np.array([[1.0, *bloch_vector(s)] for s in states])
    return int(np.linalg.matrix_rank(rows, tol=1e-8))


def _hermitian_coords(m: np.ndarray) -> np.ndarray:
    return np.array([m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag])


def bn_state_protocol(
    n_orientations: int,
    plate_thickness_um: float = 312.7,
    lam_um: float = 1.0,
) -> StateProtocol:
    """State protocol from N orientations of one plate with step 180/N degrees.

    Row j projects onto the plate-rotated vertical polarizer,
    ``U(a_j)^+ |V><V| U(a_j)`` with a_j = j * 180/N degrees; exposures are
    uniform.  Degenerate plates (retardance a multiple of pi, which makes the
    plate act as the identity up to phase) are rejected.
    """
    if n_orientations < 4:
        raise IncompleteProtocolError("need at least 4 orientations")
    delta = optical_thickness(WaveplateSpec(plate_thickness_um, 0.0), lam_um)
    rows = []
    for j in range(n_orientations):
        alpha = j * np.pi / n_orientations
        u = plate_unitary(delta, alpha)
        proj = u.conj().T @ np.outer(_V, _V.conj()) @ u
        rows.append(ProtocolRow(operator=proj, exposure=1.0))
    stack = np.array([_hermitian_coords(r.operator) for r in rows])
    if np.linalg.matrix_rank(stack, tol=1e-8) < 4:
        raise IncompleteProtocolError(
            f"B{n_orientations} with plate retardance {delta:.4f} rad is "
            "tomographically incomplete (plate acts as identity up to phase)"
        )
    return StateProtocol(name=f"B{n_orientations}", rows=rows)


def process_protocol(
    name: str, central_lam_um: float = LAMBDA_DEFAULT_UM
) -> ProcessProtocol:
    """16-row process protocol: every input state of the family against every
    projector of the same family.

    Row operators are ``|conj(c_in)><conj(c_in)| (x) |c_m><c_m|``; exposures
    are uniform placeholders, rescaled at data-generation time.
    """
    states = _protocol_states(name, central_lam_um)
    rows = []
    for c_in in states:
        in_proj = np.outer(c_in.conj(), c_in)
        for c_m in states:
            out_proj = np.outer(c_m, c_m.conj())
            rows.append(ProtocolRow(operator=np.kron(in_proj, out_proj), exposure=1.0))
    return ProcessProtocol(name=name, input_states=states, projectors=states, rows=rows)


def auxiliary_rows(
    input_states: Sequence[np.ndarray], total_exposure: float, weight: float = 10.0
) -> list[ProtocolRow]:
    """Trace-preservation rows: operator ``|conj(c_in)><conj(c_in)| (x) I``
    with exposure weight*total_exposure and the virtual count round(t/s) that
    a trace-preserving process would produce exactly."""
    if _affine_bloch_rank(input_states) < 4:
        raise IncompleteProtocolError("input states are not tomographically complete")
    s = input_states[0].size
    t_aux = weight * total_exposure
    rows = []
    for c_in in input_states:
        op = np.kron(np.outer(c_in.conj(), c_in), np.eye(s))
        rows.append(
            ProtocolRow(
                operator=op,
                exposure=t_aux,
                count=int(round(t_aux / s)),
                is_auxiliary=True,
            )
        )
    return rows


def _poisson_inversion(mu: float, rng: np.random.Generator) -> int:
    p = math.exp(-mu)
    cum = p
    k = 0
    u = rng.random()
    k_max = int(mu + 60.0 * math.sqrt(mu) + 60.0)
    while u > cum and k < k_max:
        k += 1
        p *= mu / k
        cum += p
    return k


def _poisson_ptrs(mu: float, rng: np.random.Generator) -> int:
    # Transformed rejection with squeeze (Hormann 1993); exact for mu >= 10.
    log_mu = math.log(mu)
    b = 0.931 + 2.53 * math.sqrt(mu)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + mu + 0.43)
        if us >= 0.07 and v <= v_r:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if math.log(v * inv_alpha / (a / (us * us) + b)) <= k * log_mu - mu - math.lgamma(
            k + 1.0
        ):
            return int(k)


def sample_poisson(mu: float, rng: np.random.Generator) -> int:
    """One Poisson draw with mean mu, consuming only rng.random() uniforms."""
    if not np.isfinite(mu) or mu < 0:
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mu}")
    if mu == 0.0:
        return 0
    if mu < 30.0:
        return _poisson_inversion(mu, rng)
    return _poisson_ptrs(mu, rng)


def generate_counts(
    rows: Sequence[ProtocolRow], truth: np.ndarray, plan: ExperimentPlan
) -> list[ProtocolRow]:
    """Fill observed counts for the non-auxiliary rows of a protocol.

    Rates are ``tr(Lambda_j rho)`` against the trace-1 truth (state or Choi
    state); uniform exposures are rescaled so the total expected count equals
    plan.n_total exactly, then each count is an independent Poisson draw from
    the generator seeded with plan.seed.
    """
    truth = np.asarray(truth, dtype=complex)
    if any(r.is_auxiliary for r in rows):
        raise ValueError("generate_counts expects only non-auxiliary rows")
    rates = np.array(
        [float(np.real(np.trace(r.operator @ truth))) for r in rows]
    )
    rates = np.clip(rates, 0.0, None)
    base = float(np.dot(rates, [r.exposure for r in rows]))
    if not np.isfinite(base) or base <= 0:
        raise ValueError(f"total expected rate {base!r} is not usable")
    scale = plan.n_total / base
    rng = np.random.default_rng(plan.seed)
    out = []
    for row, lam in zip(rows, rates):
        t = row.exposure * scale
        out.append(replace(row, exposure=t, count=sample_poisson(lam * t, rng)))
    return out
