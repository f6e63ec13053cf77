import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gehole.errors import HermiticityError
from gehole.operators import (
    BasisSpec,
    BasisState,
    check_hermitian,
    ho_position_and_momentum,
    kron_slots,
    lift_orbital,
    lift_to_product,
    one_dimensional_blocks,
    spin_matrices,
    symmetrized_product,
    well_position_and_momentum,
    well_wavefunction,
)


@pytest.fixture
def basis():
    return BasisSpec(Nx=7, Ny=5, Nz=6, lx=40.0, ly=55.0, L=12.0)


class TestBasis:
    def test_dimensions(self, basis):
        assert basis.orbital_dim == 7 * 5 * 6
        assert basis.dim == 4 * basis.orbital_dim

    @pytest.mark.parametrize("kw", [{"Nx": 3}, {"Ny": 2}, {"Nz": 1}, {"L": 0.0}, {"lx": -1.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            BasisSpec(**kw)

    @given(st.integers(min_value=0, max_value=4 * 7 * 5 * 6 - 1))
    def test_flatten_bijection(self, index):
        basis = BasisSpec(Nx=7, Ny=5, Nz=6)
        assert BasisState.unflatten(index, basis).flatten(basis) == index

    def test_spin_fastest(self, basis):
        assert BasisState(0, 0, 1, 0.5).flatten(basis) == 1
        assert BasisState(0, 0, 2, 1.5).flatten(basis) == 4
        assert BasisState(0, 1, 1, 1.5).flatten(basis) == 4 * basis.Nz

    def test_out_of_range(self, basis):
        with pytest.raises(ValueError):
            BasisState(0, 0, 0, 1.5).flatten(basis)
        with pytest.raises(ValueError):
            BasisState.unflatten(basis.dim, basis)


class TestOscillator:
    def test_position_matrix_elements(self, basis):
        x, k = ho_position_and_momentum("x", basis)
        n = np.arange(1, basis.Nx)
        assert np.allclose(np.diag(x, 1), basis.lx * np.sqrt(n / 2))
        assert np.allclose(np.diag(k, 1), -1j * np.sqrt(n / 2) / basis.lx)

    def test_canonical_commutator_interior(self, basis):
        x, k = ho_position_and_momentum("y", basis)
        c = x @ k - k @ x
        # exact away from the truncation edge
        assert np.allclose(c[:-1, :-1], 1j * np.eye(basis.Ny - 1), atol=1e-12)

    def test_quadratic_blocks_exact(self, basis):
        b = one_dimensional_blocks("x", basis)
        n = np.arange(basis.Nx)
        assert np.allclose(np.diag(b["r2"]), basis.lx**2 * (n + 0.5))
        assert np.allclose(np.diag(b["k2"]), (n + 0.5) / basis.lx**2)
        # ground-state energy of x^2/l^4 + k^2 is 1/l^2 (oscillator with omega=2)
        h = b["k2"] + b["r2"] / basis.lx**4
        assert np.isclose(np.linalg.eigvalsh(h)[0], 1 / basis.lx**2)

    def test_invalid_axis(self, basis):
        with pytest.raises(ValueError):
            ho_position_and_momentum("z", basis)


class TestWell:
    @staticmethod
    def numeric(f, m, n, L):
        val, _ = quad(lambda z: well_wavefunction(m, z, L) * f(z) * well_wavefunction(n, z, L), -L / 2, L / 2,
                      epsabs=1e-12, epsrel=1e-10, limit=200)
        return val

    def test_position_against_quadrature(self, basis):
        z, _, z2 = well_position_and_momentum(basis)
        for m in range(1, basis.Nz + 1):
            for n in range(1, basis.Nz + 1):
                assert z[m - 1, n - 1] == pytest.approx(self.numeric(lambda s: s, m, n, basis.L), abs=1e-10)
                assert z2[m - 1, n - 1] == pytest.approx(self.numeric(lambda s: s * s, m, n, basis.L), abs=1e-10)

    def test_wavevector_against_quadrature(self, basis):
        _, kz, _ = well_position_and_momentum(basis)
        L = basis.L
        for m in range(1, basis.Nz + 1):
            for n in range(1, basis.Nz + 1):
                dphi = lambda s, n=n: np.sqrt(2 / L) * (n * np.pi / L) * np.cos(n * np.pi * (s / L + 0.5))
                val, _ = quad(lambda s: well_wavefunction(m, s, L) * dphi(s), -L / 2, L / 2, epsabs=1e-13)
                assert kz[m - 1, n - 1] == pytest.approx(-1j * val, abs=1e-10)

    def test_parity_selection(self, basis):
        z, kz, z2 = well_position_and_momentum(basis)
        n = np.arange(1, basis.Nz + 1)
        same = (n[:, None] + n[None, :]) % 2 == 0
        assert np.all(z[same] == 0) and np.all(kz[same] == 0)
        assert np.all(z2[~same] == 0)

    def test_symmetrized_rk_matches_product_limit(self):
        big = BasisSpec(Nx=4, Ny=4, Nz=80, L=10.0)
        small = BasisSpec(Nx=4, Ny=4, Nz=5, L=10.0)
        bb = one_dimensional_blocks("z", big)
        prod = symmetrized_product(bb["r"], bb["k"])[:5, :5]
        assert np.allclose(prod, one_dimensional_blocks("z", small)["rk"], atol=2e-3)

    def test_hermitian(self, basis):
        for m in well_position_and_momentum(basis):
            check_hermitian(m)


class TestSpin:
    def test_algebra(self):
        jx, jy, jz, *_ = spin_matrices()
        assert np.allclose(jx @ jy - jy @ jx, 1j * jz)
        assert np.allclose(jx @ jx + jy @ jy + jz @ jz, 15 / 4 * np.eye(4))
        assert np.allclose(np.diag(jz).real, [1.5, 0.5, -0.5, -1.5])

    def test_cubes(self):
        jx, jy, jz, jx3, jy3, jz3 = spin_matrices()
        assert np.allclose(jx3, jx @ jx @ jx)
        assert np.allclose(np.diag(jz3).real, [3.375, 0.125, -0.125, -3.375])


def _hermitian(data, n):
    a = np.array(data[: n * n]).reshape(n, n) + 1j * np.array(data[n * n : 2 * n * n]).reshape(n, n)
    return a + a.conj().T


class TestProducts:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=72, max_size=72))
    def test_symmetrized_product_hermitian(self, data):
        a = _hermitian(data[:36], 3)
        b = _hermitian(data[36:], 3)
        check_hermitian(symmetrized_product(a, b), rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            symmetrized_product(np.eye(2), np.eye(3))

    def test_lift_identity_elsewhere(self, basis):
        x, _ = ho_position_and_momentum("x", basis)
        X = lift_to_product(x, "x", basis)
        assert X.shape == (basis.dim,) * 2
        i = BasisState(2, 3, 4, -0.5).flatten(basis)
        j = BasisState(3, 3, 4, -0.5).flatten(basis)
        assert X[i, j] == pytest.approx(x[2, 3])
        assert X[i, BasisState(3, 2, 4, -0.5).flatten(basis)] == 0

    def test_lift_errors(self, basis):
        with pytest.raises(ValueError):
            lift_to_product(np.eye(3), "x", basis)
        with pytest.raises(ValueError):
            lift_to_product(np.eye(4), "w", basis)
        with pytest.raises(ValueError):
            lift_orbital(np.eye(3), basis)

    def test_kron_slot_order(self, basis):
        jz = spin_matrices()[2]
        M = kron_slots({"spin": jz}, basis)
        assert np.allclose(np.diag(M)[:4].real, [1.5, 0.5, -0.5, -1.5])


class TestHermiticityCheck:
    def test_reports_worst_element(self):
        m = np.eye(3, dtype=complex)
        m[0, 2] = 1e-3
        with pytest.raises(HermiticityError, match=r"\(0, 2\)|\(2, 0\)"):
            check_hermitian(m, "m")

    def test_passes_hermitian(self):
        m = np.array([[1, 1j], [-1j, 2]])
        assert check_hermitian(m) is m
