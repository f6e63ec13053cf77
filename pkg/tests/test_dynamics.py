import numpy as np
import pytest
import scipy.linalg
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from gehole.drive import mixed_channel_rabi, response_function
from gehole.dynamics import (
    SIGMA_X,
    X_PI,
    Drive,
    average_gate_fidelity,
    check_unitary,
    common_period,
    detuned_pi_pulse,
    evolve_driven_qubit,
    fit_exponent,
    floquet_splitting,
    magnus4,
    multilevel_quasi_energy_shift,
    qubit_hamiltonian,
    quasi_energy_shift,
    rationalize,
)
from gehole.errors import FMValidityViolated, UnitarityError

TWO_PI = 2 * np.pi
W0 = TWO_PI * 3e9


def analytic_shift(Omega, omega0, omega):
    """Second-order splitting shift of H = omega0/2 sz + Omega cos(omega t) sx."""
    return Omega**2 * omega0 / (omega0**2 - omega**2)


class TestPropagator:
    def test_free_precession(self):
        T = 1.37e-9
        U = evolve_driven_qubit(W0, [], T).U
        assert U == pytest.approx(np.diag(np.exp([0.5j * W0 * T, -0.5j * W0 * T])), abs=1e-9)

    def test_magnus_exact_for_constant_h(self):
        H = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, -0.4]])
        U = magnus4(lambda t: np.broadcast_to(H, (len(t), 2, 2)), 0.0, 2.0, 7).U
        assert U == pytest.approx(scipy.linalg.expm(-2j * H), abs=1e-12)

    def test_resonant_rabi_flip(self):
        Om = TWO_PI * 10e6
        U = evolve_driven_qubit(W0, [Drive(Om, W0)], np.pi / Om).U
        assert abs(U[1, 0]) ** 2 > 0.999

    def test_rabi_frequency(self):
        Om = TWO_PI * 10e6
        ts = np.linspace(0, 3 * TWO_PI / Om, 13)[1:]
        p = [abs(evolve_driven_qubit(W0, [Drive(Om, W0)], t).U[1, 0]) ** 2 for t in ts]
        fitted = scipy.optimize.curve_fit(lambda t, w: np.sin(0.5 * w * t) ** 2, ts, p, p0=[Om])[0][0]
        assert fitted == pytest.approx(Om, rel=0.01)

    def test_unitarity(self):
        U = evolve_driven_qubit(W0, [Drive(TWO_PI * 50e6, 0.4 * W0)], 20e-9).U
        assert np.abs(U.conj().T @ U - np.eye(2)).max() < 1e-8
        with pytest.raises(UnitarityError):
            check_unitary(np.diag([1.0, 1.0 + 1e-6]))

    def test_step_halving(self):
        """One drive period at the oracle resolution: halving the step moves eigenphases < 1e-6 rad."""
        h = qubit_hamiltonian(W0, [Drive(TWO_PI * 64e6, 0.5 * W0)])
        T = TWO_PI / (0.5 * W0)
        a = magnus4(h, 0.0, T, 2000).U
        b = magnus4(h, 0.0, T, 4000).U
        pa, pb = np.sort(np.angle(np.linalg.eigvals(a))), np.sort(np.angle(np.linalg.eigvals(b)))
        assert np.abs(pa - pb).max() < 1e-6

    def test_fourth_order_convergence(self):
        h = qubit_hamiltonian(W0, [Drive(TWO_PI * 200e6, 0.5 * W0)])
        T = TWO_PI / (0.5 * W0)
        ref = magnus4(h, 0.0, T, 4096).U
        ns = np.array([64, 128, 256])
        err = [np.abs(magnus4(h, 0.0, T, n).U - ref).max() for n in ns]
        assert -fit_exponent(ns, err) >= 3.9

    def test_step_limit(self):
        with pytest.raises(ValueError):
            evolve_driven_qubit(W0, [], 1e-9, step=TWO_PI / W0 / 10)


class TestQuasiEnergy:
    OMEGA = 0.5 * W0
    LADDER = TWO_PI * 1e6 * np.array([64.0, 32.0, 16.0, 8.0])

    @pytest.fixture(scope="class")
    @classmethod
    def exact(cls):
        return quasi_energy_shift(W0, cls.OMEGA, cls.LADDER)

    def test_sign_and_magnitude(self, exact):
        pert = analytic_shift(self.LADDER, W0, self.OMEGA)
        assert np.all(np.sign(exact) == np.sign(pert))
        assert exact[-1] / pert[-1] == pytest.approx(1.0, abs=0.01)

    def test_matches_response_function(self, exact):
        from gehole.spectrum import QubitSubspace

        d21 = 1e3 * 6.62607015e-34 * 3e9 / 1.602176634e-19
        qs = QubitSubspace(np.array([0.0, d21]), np.array([[0, 1e-3], [1e-3, 0]], dtype=complex))
        E = self.LADDER / (qs.const.e * 1e-12 / qs.const.hbar)
        C = response_function(qs, self.OMEGA * qs.omega0 / W0).total
        assert C * E[-1] ** 2 * W0 / qs.omega0 == pytest.approx(exact[-1], rel=0.01)

    def test_fourth_order_correction(self, exact):
        pert = analytic_shift(self.LADDER, W0, self.OMEGA)
        disc = exact - pert
        assert fit_exponent(self.LADDER, disc) == pytest.approx(4.0, abs=0.1)
        # quartering the amplitude: 256x within a factor 4
        assert 64 <= disc[0] / disc[2] <= 1024

    def test_quadratic_regime(self, exact):
        per_e2 = exact / self.LADDER**2
        assert np.ptp(per_e2) <= 0.02 * np.abs(per_e2).max()

    def test_theta_invariance(self, exact):
        other = quasi_energy_shift(W0, self.OMEGA, self.LADDER[:1], theta=0.7)
        assert other[0] == pytest.approx(exact[0], rel=1e-9)

    def test_rejects_near_resonance(self):
        with pytest.raises(FMValidityViolated):
            quasi_energy_shift(W0, 1.001 * W0, [TWO_PI * 1e6])

    def test_floquet_wrap(self):
        T = TWO_PI / (0.5 * W0)
        U = np.diag(np.exp([0.5j * (W0 + 1e6) * T, -0.5j * (W0 + 1e6) * T]))
        assert floquet_splitting(U, T, W0) == pytest.approx(1e6, rel=1e-6)


class TestMultilevel:
    @pytest.mark.parametrize("d", [4, 12])
    def test_weak_field_matches_truncated_response(self, medium_wp, d):
        qs = medium_wp.qubit
        omega = 0.5 * qs.omega0
        E = np.array([50.0, 100.0])
        exact = multilevel_quasi_energy_shift(medium_wp, omega, E, d=d)
        pert = response_function(qs, omega, n_max=d).total * E**2
        assert exact == pytest.approx(pert, rel=0.02)

    def test_d_bounds(self, medium_wp):
        with pytest.raises(ValueError):
            multilevel_quasi_energy_shift(medium_wp, 1e9, [1.0], d=13)


class TestFidelity:
    def test_identities(self):
        assert average_gate_fidelity(X_PI, X_PI) == pytest.approx(1.0)
        assert average_gate_fidelity(np.eye(2), X_PI) == pytest.approx(1 / 3)
        assert average_gate_fidelity(np.exp(0.3j) * X_PI) == pytest.approx(1.0)

    def test_resonant_pulse(self):
        U = detuned_pi_pulse(TWO_PI * 10e6, 0.0).U
        assert average_gate_fidelity(U) == pytest.approx(1.0, abs=1e-12)

    def test_detuned_anchor(self):
        U = detuned_pi_pulse(TWO_PI * 10e6, TWO_PI * 0.3e6).U
        assert average_gate_fidelity(U) == pytest.approx(0.9994, abs=1e-4)

    def test_quadratic_infidelity(self):
        deltas = TWO_PI * 1e6 * np.array([0.05, 0.1, 0.2, 0.4])
        inf = [1 - average_gate_fidelity(detuned_pi_pulse(TWO_PI * 10e6, d).U) for d in deltas]
        assert fit_exponent(deltas, inf) == pytest.approx(2.0, abs=0.1)

    def test_duration_policies(self):
        Om, dl = TWO_PI * 10e6, TWO_PI * 0.3e6
        ideal = detuned_pi_pulse(Om, dl, "ideal")
        gen = detuned_pi_pulse(Om, dl, "generalized")
        assert ideal.t_final == pytest.approx(np.pi / Om)
        assert gen.t_final == pytest.approx(np.pi / np.hypot(Om, dl))
        assert 0.999 < average_gate_fidelity(gen.U) < 1
        with pytest.raises(ValueError):
            detuned_pi_pulse(Om, dl, "other")

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0, 2 * np.pi))
    def test_bounds(self, coeffs, phase):
        a, b, c, d = coeffs
        H = np.array([[a, b + 1j * c], [b - 1j * c, d]])
        U = np.exp(1j * phase) * scipy.linalg.expm(-1j * H)
        F = average_gate_fidelity(U)
        assert 1 / 3 - 1e-12 <= F <= 1 + 1e-12


class TestCommensurability:
    def test_rationalize(self):
        assert rationalize(0.75) == 3 / 4
        with pytest.raises(ValueError):
            rationalize(np.pi, max_denominator=10)

    def test_common_period(self):
        T = common_period([2.0, 3.0])
        assert T == pytest.approx(2 * np.pi)
        for w in (2.0, 3.0):
            assert (w * T / TWO_PI) == pytest.approx(round(w * T / TWO_PI))


class TestMixedChannel:
    def test_parity_forbids_one_plus_one(self):
        """The (1,1) sum-frequency process needs an even photon number; the
        transverse coupling only connects odd ones, so no population moves."""
        w1, w2 = 0.3 * W0, 0.7 * W0
        Om = TWO_PI * 20e6
        T = 200e-9
        U = evolve_driven_qubit(W0, [Drive(Om, w1), Drive(Om, w2)], T).U
        assert abs(U[1, 0]) ** 2 < 1e-3
        # the rate formula is the generic estimate used when that symmetry is broken
        assert mixed_channel_rabi(Om, Om, W0, w1, w2) > 0


def test_sigma_algebra():
    assert X_PI @ X_PI == pytest.approx(-np.eye(2))
    assert qubit_hamiltonian(W0, [Drive(1.0, 1.0)], 0.0)(np.array([0.0]))[0][0, 1] == pytest.approx(1.0)
    assert SIGMA_X @ SIGMA_X == pytest.approx(np.eye(2))
