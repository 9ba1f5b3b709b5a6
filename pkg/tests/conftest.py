"""Shared fixtures: lazily computed sweep tables reused across the suite."""

import time

import numpy as np
import pytest

from trilab.kernel import KernelParams, SpectralParameter
from trilab.quadrature import QuadratureSettings
from trilab.testvectors import default_t_grid, sweep_both

# Sweep tables feed slope and ratio checks with generous margins; their
# relative quadrature error at this tolerance stays below 1e-6, which is
# invisible next to the windows being tested, while the cost drops a lot.
SWEEP_SETTINGS = QuadratureSettings(tol=4e-7)


def sweep_grid_for(T):
    """Shared acceptance grid: fine peak window, coarse geometric tail.

    T = 200 carries the extended tail down to t = 1 plus the range up to
    4T so that dyadic-coverage checks and the far-tail ratio both have
    their sample points; T = 400 only needs the extra far-tail point.
    """
    if T == 200.0:
        return default_t_grid(T, extended=True, ratio=1.1, hi_mult=4.0)
    grid = default_t_grid(T, ratio=1.1, hi_mult=2.0)
    if T == 400.0:
        grid = np.append(grid, 3.0 * T)
    return grid


class SweepTables:
    """Memoized per-height plain and tilde sweeps."""

    def __init__(self):
        self._cache = {}

    def get(self, T):
        T = float(T)
        if T not in self._cache:
            grid = sweep_grid_for(T)
            print(f"\n[sweep tables] computing T = {T:g} "
                  f"({grid.size} points)...", flush=True)
            start = time.monotonic()
            base = KernelParams(SpectralParameter(1j * T), 0.0)
            self._cache[T] = sweep_both(T, grid, base,
                                        settings=SWEEP_SETTINGS)
            print(f"[sweep tables] T = {T:g} done in "
                  f"{time.monotonic() - start:.0f} s", flush=True)
        return self._cache[T]


@pytest.fixture(scope="session")
def sweep_tables():
    return SweepTables()
