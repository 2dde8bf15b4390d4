import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eisenlab import EisensteinSeries, MaassFormRecord  # noqa: E402
from oracles import hecke_from_primes  # noqa: E402

# spectral parameter of the first even Maass form for SL(2, Z); only used as
# a plausible t_phi, the coefficients below are synthetic
T_PHI = 13.779751351890738


@pytest.fixture(scope="session")
def e14():
    return EisensteinSeries(t=14).fit()


@pytest.fixture(scope="session")
def synthetic_record():
    rng = np.random.default_rng(20240611)
    primes = [p for p in range(2, 301) if all(p % q for q in range(2, int(p**0.5) + 1))]
    values = {p: float(rng.uniform(-2, 2)) for p in primes}
    lam = hecke_from_primes(values, 300)
    return MaassFormRecord(T_PHI, lam, coeff_tol=1e-12, source_id="synthetic-hecke")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
