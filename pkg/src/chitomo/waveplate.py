"""Forward physics of dispersive quartz retarders.

A retardant plate of geometric thickness h acts on the polarization qubit as
the SU(2) rotation ``U = I cos(delta) - i (sigma . n) sin(delta)`` with axis
``n = (sin 2a, 0, cos 2a)`` (a = angle between the optical axis and vertical)
and optical thickness ``delta = pi dn h / lambda``.  Quartz birefringence
``dn = n_o - n_e`` is negative in the transparency window used here; the
signed value is what the Choi-state construction uses, while
:func:`optical_thickness` reports the magnitude, which is the quantity entering
protocol geometry and retarder fits.

Broadband light turns the per-wavelength pure transformations into incoherent
mixtures: the plate's Choi state is the spectral-weight average of the
vectorized unitaries, which is why a single plate always has process rank 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import vectorize

__all__ = [
    "WaveplateSpec",
    "SpectralProfile",
    "SU2Retarder",
    "quartz_indices",
    "optical_thickness",
    "axis_from_orientation",
    "retarder_unitary",
    "plate_unitary",
    "sinc2_profile",
    "plate_choi_state",
    "su2_from_retarder",
    "fit_su2_retarder",
    "birefringence_from_delta",
    "stress_birefringence",
    "broadband_mixed_state",
    "component_sum_state",
]

# Validity window of the quartz dispersion formulas, micrometers.
QUARTZ_LAMBDA_MIN = 0.2
QUARTZ_LAMBDA_MAX = 3.0

# sinc(x)**2 falls to 1/2 at x = a; maps the profile scale to its FWHM.
SINC_HALF_POWER = 1.391557

# Plates thinner than this are treated as non-dispersive: they transform the
# whole spectrum with the central-wavelength unitary.
THIN_PLATE_LIMIT_UM = 1000.0

_SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class WaveplateSpec:
    """Geometric thickness (micrometers), optical-axis orientation (radians
    from vertical) and material of one retardant plate."""

    thickness_um: float
    alpha_rad: float
    material: str = "quartz"

    def __post_init__(self) -> None:
        if not (np.isfinite(self.thickness_um) and self.thickness_um >= 0):
            raise ValueError(f"thickness must be finite and >= 0, got {self.thickness_um}")
        if self.material != "quartz":
            raise ValueError(f"unsupported material {self.material!r}")


@dataclass(frozen=True)
class SpectralProfile:
    """Wavelength knots (micrometers, strictly increasing) with nonnegative
    weights normalized to unit sum."""

    wavelengths: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.wavelengths, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "weights", w)
        if lam.ndim != 1 or lam.shape != w.shape:
            raise ValueError("wavelengths and weights must be 1-D and equally long")
        if lam.size > 1 and not np.all(np.diff(lam) > 0):
            raise ValueError("wavelengths must be strictly increasing")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")

    def __len__(self) -> int:
        return self.wavelengths.size


@dataclass(frozen=True)
class SU2Retarder:
    """Complex pair (t, r) of the unimodular retarder matrix
    [[t, r], [-conj(r), conj(t)]]."""

    t: complex
    r: complex

    def __post_init__(self) -> None:
        norm = abs(self.t) ** 2 + abs(self.r) ** 2
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"|t|^2 + |r|^2 = {norm!r} is not 1")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.t, self.r], [-np.conj(self.r), np.conj(self.t)]], dtype=complex
        )


def quartz_indices(lam_um: float) -> tuple[float, float]:
    """Ordinary and extraordinary refractive indices of crystalline quartz.

    Three-term dispersion formulas, wavelength in micrometers, valid for
    0.2 < lam < 3.  Quartz is positive uniaxial here: n_e > n_o.
    """
    if not QUARTZ_LAMBDA_MIN < lam_um < QUARTZ_LAMBDA_MAX:
        raise ValueError(
            f"wavelength {lam_um} um outside quartz dispersion window "
            f"({QUARTZ_LAMBDA_MIN}, {QUARTZ_LAMBDA_MAX})"
        )
    l2 = lam_um * lam_um
    n_o = np.sqrt(1.30979 + 1.04683 * l2 / (l2 - 0.01025) + 1.20328 * l2 / (l2 - 108.584))
    n_e = np.sqrt(1.32888 + 1.05487 * l2 / (l2 - 0.01053) + 0.97121 * l2 / (l2 - 84.261))
    return float(n_o), float(n_e)


def optical_thickness(spec: WaveplateSpec, lam_um: float) -> float:
    """Optical thickness delta = pi |dn| h / lambda, radians (magnitude)."""
    n_o, n_e = quartz_indices(lam_um)
    return np.pi * abs(n_e - n_o) * spec.thickness_um / lam_um


def _signed_thickness(spec: WaveplateSpec, lam_um: float) -> float:
    # dn = n_o - n_e as in the dispersive-plate convention; negative for quartz.
    n_o, n_e = quartz_indices(lam_um)
    return np.pi * (n_o - n_e) * spec.thickness_um / lam_um


def axis_from_orientation(alpha_rad: float) -> np.ndarray:
    """Rotation axis (sin 2a, 0, cos 2a) of a plate at orientation a."""
    return np.array([np.sin(2 * alpha_rad), 0.0, np.cos(2 * alpha_rad)])


def retarder_unitary(delta: float, axis: np.ndarray) -> np.ndarray:
    """SU(2) rotation ``I cos(delta) - i (sigma . n) sin(delta)``; unit axis."""
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
        raise ValueError(f"axis norm {np.linalg.norm(axis)!r} is not 1")
    sigma_n = np.tensordot(axis, _SIGMA, axes=1)
    return np.cos(delta) * np.eye(2, dtype=complex) - 1j * np.sin(delta) * sigma_n


def plate_unitary(delta: float, alpha_rad: float) -> np.ndarray:
    return retarder_unitary(delta, axis_from_orientation(alpha_rad))


def sinc2_profile(
    lam0_um: float, fwhm_um: float, knots: int = 801, span: float = 40.0
) -> SpectralProfile:
    """Uniform wavelength grid over lam0 +- span*fwhm weighted by sinc(x)**2
    with x = 2a (lam - lam0) / fwhm, a = SINC_HALF_POWER, so the weight profile
    has full width fwhm at half maximum.  knots must be odd (>= 3) so that the
    central wavelength is a knot.

    The slowly decaying sinc**2 tails carry real weight: a window of
    span*fwhm keeps all but roughly 1/(2 pi a span) of the total, so the
    default span of 40 truncates only ~0.3%.  Narrow windows (span <~ 10)
    visibly bias spectral averages of oscillatory quantities.
    """
    if knots < 3 or knots % 2 == 0:
        raise ValueError(f"knots must be odd and >= 3, got {knots}")
    if span <= 0 or fwhm_um <= 0:
        raise ValueError("span and fwhm must be positive")
    lam = lam0_um + np.linspace(-span * fwhm_um, span * fwhm_um, knots)
    x = 2.0 * SINC_HALF_POWER * (lam - lam0_um) / fwhm_um
    w = np.sinc(x / np.pi) ** 2  # np.sinc is sin(pi t)/(pi t)
    return SpectralProfile(lam, w / w.sum())


def plate_choi_state(spec: WaveplateSpec, profile: SpectralProfile) -> np.ndarray:
    """Choi state (4x4, trace 1) of one plate under a spectral mixture.

    Each knot contributes the normalized vectorized retarder unitary at that
    wavelength; the weighted sum of the pure projectors is rank <= 2 because
    all the vectors live in the fixed 2-dim subspace set by the plate axis.
    """
    axis = axis_from_orientation(spec.alpha_rad)
    psis = np.empty((len(profile), 4), dtype=complex)
    for j, lam in enumerate(profile.wavelengths):
        delta = _signed_thickness(spec, lam)
        psis[j] = vectorize(retarder_unitary(delta, axis)) / np.sqrt(2.0)
    weighted = psis * profile.weights[:, None]
    return weighted.T @ psis.conj()


def su2_from_retarder(delta: float, alpha_rad: float) -> SU2Retarder:
    """Coefficients t = cos(d) + i sin(d) cos(2a), r = i sin(d) sin(2a)."""
    t = np.cos(delta) + 1j * np.sin(delta) * np.cos(2 * alpha_rad)
    r = 1j * np.sin(delta) * np.sin(2 * alpha_rad)
    return SU2Retarder(complex(t), complex(r))


def fit_su2_retarder(g: SU2Retarder) -> tuple[float, float, bool]:
    """Invert :func:`su2_from_retarder` up to the inherent retarder symmetries.

    Returns (delta, alpha, degenerate) with delta folded to [0, pi/2] and
    alpha to [0, pi).  When |sin delta| < 1e-12 the orientation is undefined;
    alpha is reported as 0 with the degenerate flag set.
    """
    cos_d = float(np.real(g.t))
    sin_cos2a = float(np.imag(g.t))
    sin_sin2a = float(np.imag(g.r))
    sin_mag = float(np.hypot(sin_cos2a, sin_sin2a))
    if sin_mag < 1e-12:
        return 0.0, 0.0, True
    delta = float(np.arctan2(sin_mag, cos_d))  # in [0, pi]
    if delta > np.pi / 2:
        # U(pi - d, -n) = -U(d, n): fold via a global sign flip.
        delta = np.pi - delta
        sin_cos2a, sin_sin2a = -sin_cos2a, -sin_sin2a
    alpha = 0.5 * float(np.arctan2(sin_sin2a, sin_cos2a))
    if alpha < 0:
        alpha += np.pi
    return delta, alpha % np.pi, False


def birefringence_from_delta(delta: float, lam_um: float, thickness_um: float) -> float:
    """dn = delta * lambda / (pi h), the inverse of the optical-thickness law."""
    if thickness_um <= 0:
        raise ValueError("thickness must be positive")
    return delta * lam_um / (np.pi * thickness_um)


def stress_birefringence(brewster_k1: float, stress: float) -> float:
    """Linear photoelastic law dn = K1 * stress (K1 in m^2/N, stress in N/m^2)."""
    return brewster_k1 * stress


def broadband_mixed_state(
    input_state: np.ndarray,
    plates: list[WaveplateSpec],
    profile: SpectralProfile,
) -> np.ndarray:
    """Polarization state after passing broadband light through plates.

    Plates are applied in list order to the same input state at every knot;
    the output is the spectral-weight average of the per-knot pure states.
    Plates thinner than THIN_PLATE_LIMIT_UM use the central-wavelength unitary
    for all knots (they transform the state as a whole).
    """
    psi0 = np.asarray(input_state, dtype=complex).ravel()
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("input state must be normalized")
    lam_central = float(profile.wavelengths[len(profile) // 2])
    rho = np.zeros((2, 2), dtype=complex)
    for lam, weight in zip(profile.wavelengths, profile.weights):
        psi = psi0
        for spec in plates:
            lam_eff = lam if spec.thickness_um >= THIN_PLATE_LIMIT_UM else lam_central
            psi = plate_unitary(_signed_thickness(spec, lam_eff), spec.alpha_rad) @ psi
        rho += weight * np.outer(psi, psi.conj())
    return rho


def component_sum_state(components: list[tuple[float, np.ndarray]]) -> np.ndarray:
    """Weighted mixture of density matrices, renormalized to unit trace.

    Weights must be nonnegative with at least one positive; they are divided
    by their sum, so only relative weights matter.
    """
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        raise ValueError("at least one weight must be positive")
    rho = sum(w * np.asarray(r, dtype=complex) for w, r in components) / total
    return rho
