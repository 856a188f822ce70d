import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from delayfield import normalform, spectrum  # noqa: E402
from delayfield.model import ModelParams  # noqa: E402

HOPF_LAMBDA = 1.644003102046893j
DH_FAST = 2.030930500644927j
DH_SLOW = 1.299147304907829j


@pytest.fixture(scope="session")
def hopf_params():
    return ModelParams(1.0, 1.0, 4.220214885988226, (3.0, -5.5), (0.5, 1.0))


@pytest.fixture(scope="session")
def dh_params():
    return ModelParams(1.0, 1.0, 4.828749714457348, (3.0, -5.5), (0.0, 0.999592391420082))


@pytest.fixture(scope="session")
def fig1_params():
    # r = 4 makes the linear amplitudes equal to the kernel amplitudes
    return ModelParams(1.0, 1.0, 4.0, (-5.0, 2.0), (2.0, 0.0))


@pytest.fixture(scope="session")
def hopf_eigen(hopf_params):
    lam = spectrum.newton_solve(1.6j, hopf_params)
    return spectrum.eigen_data(lam, hopf_params)


@pytest.fixture(scope="session")
def hopf_contour(hopf_eigen, hopf_params):
    return normalform.certify_contour(hopf_eigen, hopf_params)


@pytest.fixture(scope="session")
def dh_eigen(dh_params):
    return tuple(spectrum.eigen_data(spectrum.newton_solve(seed, dh_params), dh_params)
                 for seed in (2.03j, 1.30j))
