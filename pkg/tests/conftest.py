import warnings

import pytest

from psihilfer.grid import FractionalOrder, GradedMesh
from psihilfer.psi import make_preset

# frozen high-precision oracles (40-digit mpmath, rounded to double)
E_03_1 = 8.040675596967058
E_05_1 = 5.008980080762283
E_07_1 = 3.704146145437586
ML_AT_ONE = {0.3: E_03_1, 0.5: E_05_1, 0.7: E_07_1}
INV_GAMMA_MU1 = {0.3: 1.1142425085473018, 0.5: 1.1283791670955126, 0.7: 1.1005474055236657}
GAMMA_15 = 0.886226925452758
COSH_2 = 3.7621956910836314

PRESETS = [("identity", None), ("power", 2.0), ("shifted_log", None)]
PRESET_IDS = ["identity", "power2", "shifted_log"]


def preset(i: int):
    kind, rho = PRESETS[i]
    return make_preset(kind, rho)


@pytest.fixture(params=range(3), ids=PRESET_IDS)
def psi(request):
    return preset(request.param)


@pytest.fixture
def mesh():
    return GradedMesh(1.0, 512)


@pytest.fixture
def caputo():
    return FractionalOrder(0.5, 1.0)


@pytest.fixture(autouse=True)
def _quiet_existence_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="existence condition not met")
        yield
