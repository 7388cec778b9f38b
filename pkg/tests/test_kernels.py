"""Cross-checks between the compiled kernels and the NumPy fallback."""

import numpy as np
import pytest

from spinramsey import kernels
from spinramsey.kernels import pure
from spinramsey.rotation import wigner_small_d

compiled = pytest.importorskip("spinramsey.kernels._fast") \
    if kernels.BACKEND == "compiled" else None


def random_grids(seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        f0 = rng.uniform(150.0, 250.0)
        delta = rng.uniform(10.0, 50.0)
        t = rng.uniform(50.0, 800.0)
        phi = rng.uniform(-np.pi, np.pi)
        f = np.sort(rng.uniform(f0 - 40.0, f0 + 40.0, 200))
        yield f, f0, t, delta, phi


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("compiled", "python")

    def test_active_functions_come_from_backend(self):
        source = compiled if kernels.BACKEND == "compiled" else pure
        assert kernels.fringe_components is source.fringe_components


@pytest.mark.skipif(compiled is None, reason="compiled extension not built")
class TestCompiledAgainstPure:
    def test_envelope(self):
        for f, f0, _, delta, _ in random_grids(1):
            assert np.max(np.abs(compiled.envelope(f, f0, delta)
                                 - pure.envelope(f, f0, delta))) < 1e-13

    def test_envelope_series_branch(self):
        f0, delta = 195.0, 25.0
        f = f0 + delta * np.array([-1e-9, -1e-12, 0.0, 1e-12, 1e-9])
        a = compiled.envelope(f, f0, delta)
        b = pure.envelope(f, f0, delta)
        assert np.max(np.abs(a - b)) < 1e-15
        assert np.max(np.abs(a - 1.0)) < 1e-12

    def test_rabi_components(self):
        beta = np.linspace(-10.0, 10.0, 2001)
        assert np.max(np.abs(compiled.rabi_components(beta)
                             - pure.rabi_components(beta))) < 1e-13

    def test_fringe_components(self):
        for args in random_grids(2):
            assert np.max(np.abs(compiled.fringe_components(*args)
                                 - pure.fringe_components(*args))) < 1e-13

    def test_fringe_components_difference_convention(self):
        f = np.linspace(180.0, 210.0, 200)
        a = compiled.fringe_components(f, 195.0, 290.0, 25.0, 0.14, -1.0)
        b = pure.fringe_components(f, 195.0, 290.0, 25.0, 0.14, -1.0)
        assert np.max(np.abs(a - b)) < 1e-13

    def test_phase_components(self):
        phases = np.linspace(-8.0, 8.0, 1001)
        for eta in (-0.4, 0.0, 0.31, 1.0):
            assert np.max(np.abs(compiled.phase_components(phases, eta)
                                 - pure.phase_components(phases, eta))) < 1e-13


class TestPureAgainstRotationAlgebra:
    def test_rabi_equals_rotation_column(self):
        betas = np.random.default_rng(3).uniform(0.0, 2.0 * np.pi, 50)
        table = pure.rabi_components(betas)
        for row, beta in zip(table, betas):
            assert np.max(np.abs(row - wigner_small_d(beta)[:, 0] ** 2)) < 1e-12

    def test_rows_normalized(self):
        for args in random_grids(4):
            table = pure.fringe_components(*args)
            assert np.max(np.abs(table.sum(axis=1) - 1.0)) < 1e-12

    def test_deterministic(self):
        f = np.linspace(180.0, 210.0, 100)
        a = kernels.fringe_components(f, 195.0, 290.0, 25.0, 0.14, 1.0)
        b = kernels.fringe_components(f, 195.0, 290.0, 25.0, 0.14, 1.0)
        assert np.array_equal(a, b)
