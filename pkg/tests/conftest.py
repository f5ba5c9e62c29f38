import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rscdt import Axis


@pytest.fixture
def unit_axis():
    return Axis(0.0, 1.0, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
