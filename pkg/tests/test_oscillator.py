import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edmlab import flows, oscillator as osc
from edmlab.mathcore import fd_gradient, fd_hessian, fd_jacobian, make_rng
from edmlab.oscillator import IsingInstance, OscillatorNet, Variant
from edmlab.plasticity import PatternSet, hebbian_weights

PI = math.pi


def _oim(W, kappa):
    return OscillatorNet(W, kappa, variant=Variant.OIM)


def test_oam_field_examples():
    rng = make_rng(0)
    W = rng.standard_normal((4, 4))
    net = OscillatorNet(W + W.T, 0.7, omega=2.5)
    np.testing.assert_allclose(osc.oam_field(net, np.full(4, 1.3), co_rotating=False), 2.5, atol=1e-12)
    np.testing.assert_allclose(osc.oam_field(OscillatorNet(np.zeros((2, 2)), 1.0), [0.0, PI]), [0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(osc.oam_field(OscillatorNet([[0, 1], [1, 0]], 0.0), [0.0, PI / 2]), [1.0, -1.0])


def test_oam_energy_examples():
    assert osc.oam_energy(OscillatorNet([[0, 1], [1, 0]], 1.0), [0.0, 0.0]) == pytest.approx(-1.5)
    assert osc.oam_energy(OscillatorNet(np.zeros((3, 3)), 0.0), [0.3, 2.0, -1.0]) == 0.0


def test_oam_energy_warns_on_asymmetric_w():
    with pytest.warns(osc.EnergyCertificateWarning):
        osc.oam_energy(OscillatorNet([[0, 1], [0, 0]], 0.0), [0.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), c=st.floats(-10, 10))
def test_oam_rotation_invariance(seed, c):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((5, 5))
    net = OscillatorNet(W + W.T, rng.uniform(0, 2))
    phi = rng.uniform(0, 2 * PI, 5)
    assert osc.oam_energy(net, phi + c) == pytest.approx(osc.oam_energy(net, phi), abs=1e-12)
    np.testing.assert_allclose(osc.oam_field(net, phi + c), osc.oam_field(net, phi), atol=1e-12)


def test_oim_is_not_rotation_invariant():
    W = -np.ones((3, 3)) + np.eye(3)
    phi = np.array([0.1, 2.0, 4.0])
    assert abs(osc.phase_energy(W, 1.0, phi + 0.7) - osc.phase_energy(W, 1.0, phi)) > 1e-3
    net = _oim(W, 1.0)
    assert np.max(np.abs(osc.oim_field(net, phi + 0.7) - osc.oim_field(net, phi))) > 1e-3


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_oam_field_is_negative_energy_gradient(seed):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((4, 4))
    net = OscillatorNet(W + W.T, rng.uniform(0, 2))
    phi = rng.uniform(0, 2 * PI, 4)
    np.testing.assert_allclose(osc.oam_field(net, phi), -fd_gradient(lambda p: osc.oam_energy(net, p), phi), atol=1e-6)


def test_oam_trajectory_energy_monotone():
    rng = make_rng(1)
    ps = PatternSet.random(12, 3, rng)
    net = OscillatorNet(hebbian_weights(ps), 0.3)
    for _ in range(10):
        rec = osc.oam_trajectory(net, rng.uniform(0, 2 * PI, 12), flows.IntegratorConfig(dt=0.01, t_max=20.0))
        assert flows.max_energy_increase(rec.energies) <= 1e-9


def test_phase_decode_examples():
    np.testing.assert_array_equal(osc.phase_decode([0.0, PI, 0.0]), [1, -1, 1])
    np.testing.assert_array_equal(osc.phase_decode([1.0, 1.0 + PI]), [1, -1])
    with pytest.raises(osc.NotPhaseLockedError) as exc:
        osc.phase_decode([0.0, PI / 2])
    assert exc.value.indices == [2]


def test_phase_decode_wraps():
    np.testing.assert_array_equal(osc.phase_decode([0.05, 2 * PI - 0.02, 3 * PI + 0.01]), [1, 1, -1])


def test_stability_rank_one_example():
    xi = np.array([1.0, 1.0, -1.0, -1.0])
    W = hebbian_weights(PatternSet([xi]))
    np.testing.assert_allclose(W @ np.ones(4), 0.0)
    R = osc.rescaled_stability_matrix(W, xi)
    np.testing.assert_allclose(R, np.ones((4, 4)) / 16)
    assert np.linalg.eigvalsh(R).max() == pytest.approx(0.25)
    # the corrected margin: a stored single pattern is stable for every kappa >= 0
    assert osc.oam_stability_margin(W, xi) == pytest.approx(-1.0)
    for kappa in (0.0, 0.05, 0.1):
        lam, _ = osc.numerical_stability(OscillatorNet(W, kappa), xi)
        assert lam == pytest.approx(-1.0 - 2 * kappa, abs=1e-6)


def test_stability_zero_coupling():
    xi = np.array([1.0, -1.0, 1.0])
    assert osc.oam_stability_margin(np.zeros((3, 3)), xi) == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), kappa=st.floats(0, 1))
def test_analytic_jacobian_matches_fd(seed, kappa):
    rng = np.random.default_rng(seed)
    ps = PatternSet.random(8, 2, rng)
    W = hebbian_weights(ps)
    xi = rng.choice([-1.0, 1.0], 8)
    J = fd_jacobian(lambda p: osc.oam_field(OscillatorNet(W, kappa), p), osc.coded_phases(xi))
    np.testing.assert_allclose(J, osc.oam_jacobian(W, xi, kappa), atol=1e-7)


def test_ising_energy_examples():
    tri = osc.bundled_instance("triangle")
    assert osc.ising_energy(tri, [1, 1, 1]) == 3.0
    assert osc.ising_energy(tri, [1, 1, -1]) == -1.0
    assert osc.cut_value(tri, [1, 1, -1]) == 2.0
    edge = IsingInstance(2, [(0, 1, -1.0)])
    assert osc.ising_energy(edge, [1, 1]) == 1.0
    assert osc.ising_energy(edge, [1, -1]) == -1.0


def test_brute_force_triangle():
    H, s = osc.brute_force_ising(osc.bundled_instance("triangle"))
    assert H == -1.0
    np.testing.assert_array_equal(s, [-1, -1, 1])
    energies = [osc.ising_energy(osc.bundled_instance(), s) for s in osc.all_spin_vectors(3)]
    assert min(energies) == -1.0 and sorted(energies).count(3.0) == 2


def test_signed_laplacian_examples():
    g = osc.signed_laplacian(osc.bundled_instance(), [1, 1, 1])
    assert np.trace(g.L) == -6.0
    assert -0.5 * np.trace(g.L) == 3.0
    np.testing.assert_array_equal(osc.signed_laplacian(IsingInstance(4, []), np.ones(4)).L, 0.0)
    np.testing.assert_allclose(g.L @ np.ones(3), 0.0)


def test_coded_state_energy_matches_ising():
    rng = make_rng(2)
    for _ in range(20):
        inst = IsingInstance.erdos_renyi(7, 0.5, rng)
        s = rng.choice([-1.0, 1.0], 7)
        assert osc.phase_energy(inst.W(), 0.8, osc.coded_phases(s)) == pytest.approx(osc.ising_energy(inst, s), abs=1e-10)


def test_oim_hessian_matches_fd():
    rng = make_rng(3)
    inst = IsingInstance.erdos_renyi(6, 0.6, rng)
    s = rng.choice([-1.0, 1.0], 6)
    H = fd_hessian(lambda p: osc.phase_energy(inst.W(), 0.4, p), osc.coded_phases(s))
    np.testing.assert_allclose(H, osc.oim_hessian(inst, s, 0.4), atol=1e-5)


def test_expected_hessian_eigen():
    assert osc.expected_hessian_eigen(0.0, 5, 1.0) == 2.0
    assert osc.expected_hessian_eigen(-5.0, 10, 0.0) == 1.0


def test_oim_field_examples():
    inst = IsingInstance.erdos_renyi(5, 0.7, make_rng(4))
    phi = osc.coded_phases([1, -1, -1, 1, -1])
    np.testing.assert_allclose(osc.oim_field(_oim(inst.W(), 1.0), phi), osc.oim_field(_oim(inst.W(), 0.0), phi), atol=1e-15)
    assert osc.oim_field(_oim(np.zeros((1, 1)), 1.0), [PI / 4])[0] == pytest.approx(-1.0)


def test_oim_field_is_negative_phase_energy_gradient():
    rng = make_rng(5)
    inst = IsingInstance.erdos_renyi(6, 0.5, rng)
    phi = rng.uniform(0, 2 * PI, 6)
    g = fd_gradient(lambda p: osc.phase_energy(inst.W(), 0.6, p), phi)
    np.testing.assert_allclose(osc.oim_field(_oim(inst.W(), 0.6), phi), -g, atol=1e-6)


def test_variant_guard():
    with pytest.raises(ValueError):
        osc.oim_field(OscillatorNet(np.zeros((2, 2))), [0.0, 0.0])
    with pytest.raises(ValueError):
        osc.oam_field(_oim(np.zeros((2, 2)), 0.0), [0.0, 0.0])


def test_oim_solve_examples():
    assert osc.oim_solve(osc.bundled_instance(), restarts=20, seed=1).H == -1.0
    assert osc.oim_solve(IsingInstance.complete(4), restarts=20, seed=2).H == -2.0
    res = osc.oim_solve(IsingInstance(1, []), restarts=3, seed=3)
    assert res.H == 0.0 and res.sigma.shape == (1,)
    assert len(res.log) == 3


def test_oim_solve_thread_invariance():
    inst = IsingInstance.erdos_renyi(10, 0.5, make_rng(6))
    a = osc.oim_solve(inst, restarts=8, seed=11, threads=1)
    b = osc.oim_solve(inst, restarts=8, seed=11, threads=4)
    assert a.H == b.H and np.array_equal(a.sigma, b.sigma) and a.log == b.log


def test_schedule_steps():
    np.testing.assert_allclose(osc.schedule_steps([(1.0, 0.0, 1.0)], 0.25), [0.0, 0.25, 0.5, 0.75])
    np.testing.assert_allclose(osc.schedule_steps([(0.5, 2.0), (0.5, 0.0, 1.0)], 0.25), [2.0, 2.0, 0.0, 0.5])
    with pytest.raises(ValueError):
        osc.schedule_steps([(1.0, -1.0)], 0.1)


def test_instance_text_round_trip(tmp_path):
    inst = IsingInstance(5, [(3, 1, -1.0), (0, 4, -1.0), (2, 3, 0.5)])
    text = inst.to_text()
    assert text == "5 3\n1 5 -1\n2 4 -1\n3 4 0.5\n"
    assert IsingInstance.load(inst.save(tmp_path / "g.txt")).to_text() == text
    assert not inst.is_maxcut_form()
    with pytest.raises(ValueError):
        inst.validate_maxcut_form()
    osc.bundled_instance().validate_maxcut_form()


@pytest.mark.parametrize(
    "text",
    ["3\n", "3 2\n1 2 -1\n", "3 1\n2 1 -1\n", "3 1\n1 4 -1\n", "3 1\n1 2\n", "3 2\n1 2 -1\n1 2 -1\n"],
)
def test_instance_parse_errors(text):
    with pytest.raises(ValueError):
        IsingInstance.from_text(text)


def test_instance_rejects_self_loops():
    with pytest.raises(ValueError):
        IsingInstance(3, [(1, 1, -1.0)])
