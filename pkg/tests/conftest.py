import numpy as np
import pytest

from ostrovsky.spectral import FrequencyGrid, SpectralField


def random_field(grid: FrequencyGrid, seed: int, band: int | None = None, decay: float = 1.0) -> SpectralField:
    """Hermitian random field with mean zero, limited to |k| <= band."""
    rng = np.random.default_rng(seed)
    n, z = grid.modes_N, grid.zero_index
    band = n // 2 - 1 if band is None else band
    k = np.arange(1, band + 1)
    c = np.zeros(n, dtype=complex)
    c[z + k] = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) / (1.0 + k * grid.dxi) ** decay
    c[z - k] = np.conj(c[z + k])
    return SpectralField(grid, c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
