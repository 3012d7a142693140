import numpy as np
import pytest

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Reference Choi state of the 5024 um quartz plate at 45 degrees under the
# 1.1509 um / 8 nm sinc^2 spectrum, frozen to five figures.
REF_PLATE_CHOI = np.array(
    [
        [0.42099, -0.0047933j, -0.0047933j, 0.42099],
        [0.0047933j, 0.079005, 0.079005, 0.0047933j],
        [0.0047933j, 0.079005, 0.079005, 0.0047933j],
        [0.42099, -0.0047933j, -0.0047933j, 0.42099],
    ]
)
REF_PLATE_EIGENVALUES = (0.84212, 0.15788)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def plate_truth():
    from chitomo.waveplate import WaveplateSpec, plate_choi_state, sinc2_profile

    spec = WaveplateSpec(5024.0, np.pi / 4)
    return plate_choi_state(spec, sinc2_profile(1.1509, 0.008))
