import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stellarq import fockspace as fs


@pytest.fixture(scope="session")
def fig5_state():
    """Photon-subtracted 3 dB squeezed vacuum at preparation purity 0.95."""
    sq = fs.make_squeezed_thermal(fs.db_to_r(3.0), 0.0, 0.95, 32)
    return fs.photon_subtract(sq)


@pytest.fixture(scope="session")
def reference_states():
    """The recurring bench of simulated states."""
    return {
        "vacuum": fs.make_fock(0, 8),
        "one": fs.make_fock(1, 8),
        "two": fs.make_fock(2, 8),
        "lossy2_09": fs.make_lossy_fock(2, 0.9, 8),
        "lossy2_08": fs.make_lossy_fock(2, 0.8, 8),
        "lossy2_06": fs.make_lossy_fock(2, 0.6, 8),
        "squeezed_thermal": fs.make_squeezed_thermal(fs.db_to_r(3.0), 0.0, 0.95, 32),
    }
