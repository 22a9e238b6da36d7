import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edmlab import flows, hopfield as hf, proximal as px
from edmlab.hopfield import Activation, HopfieldNet
from edmlab.mathcore import make_rng
from edmlab.proximal import EINetwork, LassoProblem, ProxSpec

SPECS = [
    ProxSpec.l1(0.5),
    ProxSpec.l1(0.0),
    ProxSpec.nonneg_l1(0.3),
    ProxSpec.box(0.0, 1.0),
    ProxSpec.box(-2.0, 0.5),
    ProxSpec.nonneg(),
    ProxSpec.neg_entropy_simplex(0.5),
    ProxSpec.neg_entropy_simplex(2.0),
]


def test_prox_examples():
    assert px.prox(ProxSpec.box(0, 1), 1.7) == 1.0
    assert px.prox(ProxSpec.l1(0.5), 1.2) == pytest.approx(0.7)
    assert px.prox(ProxSpec.l1(0.5), -0.3) == 0.0
    np.testing.assert_allclose(px.prox(ProxSpec.neg_entropy_simplex(), np.full(4, 3.3)), 0.25)


def test_l1_prox_is_argmin():
    # brute-force the defining minimisation on a fine grid
    z = np.linspace(-4, 4, 800_001)
    for x in (-2.3, -0.2, 0.0, 0.45, 3.1):
        ref = z[np.argmin(0.5 * np.abs(z) + 0.5 * (x - z) ** 2)]
        assert px.prox(ProxSpec.l1(0.5), x) == pytest.approx(ref, abs=1e-5)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31), spec=st.sampled_from(SPECS))
def test_prox_firmly_nonexpansive(seed, spec):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        x, y = rng.standard_normal((2, 6)) * rng.uniform(0.1, 5)
        px_, py_ = px.prox(spec, x), px.prox(spec, y)
        d = px_ - py_
        assert d @ d <= d @ (x - y) + 1e-12
        assert np.linalg.norm(d) <= np.linalg.norm(x - y) + 1e-12


def test_simplex_prox_stays_on_simplex():
    p = px.prox(ProxSpec.neg_entropy_simplex(0.1), [1000.0, -1000.0, 3.0])
    assert p.sum() == pytest.approx(1.0) and np.all(p >= 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ProxSpec.l1(-0.1)
    with pytest.raises(ValueError):
        ProxSpec.box(1.0, 1.0)
    with pytest.raises(ValueError):
        ProxSpec.neg_entropy_simplex(0.0)


def test_proxgrad_examples():
    grad = lambda x, u: x - u
    f = px.proxgrad_field(grad, ProxSpec.box(0, 1), [0.5], np.array([2.0]))
    assert f[0] == pytest.approx(0.5)
    rng = make_rng(0)
    g2 = lambda x, u: np.sin(x) + x**3
    for _ in range(20):
        x = rng.standard_normal(3)
        np.testing.assert_allclose(px.proxgrad_field(g2, ProxSpec.l1(0.0), x), -g2(x, None), atol=1e-12)


def test_proxgrad_zero_at_minimiser():
    prob = LassoProblem(np.eye(2), [1.0, 0.1], 0.3)
    x = px.lasso_oracle(prob)
    grad = lambda z, u: prob.Theta.T @ (prob.Theta @ z - prob.u)
    np.testing.assert_allclose(px.proxgrad_field(grad, ProxSpec.nonneg_l1(prob.lam), x), 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "act,spec", [(Activation.RELU, ProxSpec.nonneg()), (Activation.SAT01, ProxSpec.box()), (Activation.IDENTITY, ProxSpec.l1(0.0))]
)
def test_firing_rate_net_is_proxgrad_flow(act, spec):
    rng = make_rng(1)
    A = rng.standard_normal((5, 5))
    W = 0.5 * (A + A.T)
    B = rng.standard_normal((5, 2))
    net = HopfieldNet(1.0, np.ones(5), W, B, act)
    grad = px.quadratic_grad(W, B)
    for _ in range(50):
        z, u = rng.standard_normal(5) * 2, rng.standard_normal(2)
        np.testing.assert_allclose(hf.frn_field(net, z, u), px.proxgrad_field(grad, spec, z, u), atol=1e-12)


def test_lasso_identity_closed_form():
    prob = LassoProblem(np.eye(2), [1.0, 0.1], 0.3)
    np.testing.assert_allclose(px.lasso_network_solve(prob), [0.7, 0.0], atol=1e-8)
    np.testing.assert_allclose(px.lasso_oracle(prob), [0.7, 0.0], atol=1e-8)
    np.testing.assert_array_equal(px.lasso_network_field(LassoProblem(np.eye(2), [0.0, 0.0], 0.3), np.zeros(2)), 0.0)


def test_lasso_large_lambda_gives_zero():
    rng = make_rng(2)
    base = LassoProblem.random(5, 8, rng)
    lam = float(np.max(base.Theta.T @ base.u)) + 1e-3
    prob = LassoProblem(base.Theta, base.u, lam)
    np.testing.assert_array_equal(px.lasso_oracle(prob), 0.0)
    np.testing.assert_allclose(px.lasso_network_solve(prob), 0.0, atol=1e-10)


def test_lasso_objective_descends_along_flow():
    rng = make_rng(3)
    for _ in range(20):
        prob = LassoProblem.random(5, 8, rng, lam=rng.uniform(0.05, 0.5))
        rec = flows.integrate_ode(
            lambda x, t: px.lasso_network_field(prob, x), np.abs(rng.standard_normal(8)), flows.IntegratorConfig(dt=0.01, t_max=10.0), prob.objective
        )
        assert flows.max_energy_increase(rec.energies) <= 1e-9


def test_lasso_oracle_iteration_cap():
    prob = LassoProblem.random(5, 8, make_rng(4))
    with pytest.raises(flows.NonConvergenceError):
        px.lasso_oracle(prob, tol=0.0, max_iter=3)


def test_lasso_csv_round_trip(tmp_path):
    prob = LassoProblem.random(3, 4, make_rng(5), lam=0.25)
    path = prob.to_csv(tmp_path / "l.csv")
    assert path.read_text().splitlines()[0] == "3,4,0.25"
    back = LassoProblem.from_csv(path)
    np.testing.assert_array_equal(back.Theta, prob.Theta)
    np.testing.assert_array_equal(back.u, prob.u)
    assert back.lam == prob.lam
    path.write_text("3,4,0.25\n1,0,0,0\n")
    with pytest.raises(ValueError):
        LassoProblem.from_csv(path)


def test_lasso_requires_unit_columns():
    with pytest.raises(ValueError):
        LassoProblem(2 * np.eye(2), [1.0, 1.0], 0.1)


def test_softmax_play_examples():
    zero = lambda x, w: np.zeros(3)
    w = np.array([0.5, 0.3, 0.2])
    np.testing.assert_allclose(px.softmax_play_field(zero, 1.0, w), -w + 1 / 3)
    np.testing.assert_allclose(px.softmax_play_field(zero, 1.0, np.full(3, 1 / 3)), 0.0, atol=1e-15)
    g = np.array([0.3, 0.1, 0.5])
    w_eq = flows.find_equilibrium(lambda w, t: px.softmax_play_field(lambda x, ww: g, 1e-3, w), np.full(3, 1 / 3))
    np.testing.assert_allclose(w_eq, [0.0, 1.0, 0.0], atol=1e-8)
    with pytest.raises(ValueError):
        px.softmax_play_field(zero, 1.0, [0.5, 0.6, 0.1])


def _wta_net(k=2):
    return EINetwork.ek_i(k, 0.4, 0.5, 1.5, 0.2)


def test_ei_sign_structure():
    net = _wta_net(3)
    W = net.W
    assert np.all(W[:, :3] >= 0) and np.all(W[:, 3] <= 0)
    assert W[0, 0] == 0.4 and W[3, 0] == 1.5 and W[0, 3] == -0.5 and W[3, 3] == -0.2
    assert W[0, 1] == 0.0


def test_ei_field_examples():
    net = _wta_net()
    np.testing.assert_array_equal(px.ei_field(net, np.zeros(3), np.zeros(2)), 0.0)
    z = EINetwork.ek_i(2, 0.0, 0.0, 0.0, 0.0)
    np.testing.assert_allclose(px.ei_field(z, np.zeros(3), [0.3, 2.0]), [0.3, 1.0, 0.0])


def test_ei_equilibrium_is_nash():
    rng = make_rng(6)
    net = EINetwork.ek_i(5, 0.4, 0.5, 1.5, 0.2)
    for _ in range(10):
        u = rng.uniform(-2, 2, 5)
        x = px.ei_equilibrium(net, u)
        for i in range(net.N):
            assert x[i] == pytest.approx(np.clip(net.W[i] @ x + net.B[i] @ u, 0, 1), abs=1e-8)


def test_monostability_examples():
    r = px.monostability_conditions(2, 2, 0.4, 0.3)
    assert r.ok and r.slack_EE == pytest.approx(0.2) and r.slack_II == pytest.approx(1.0)
    assert not px.monostability_conditions(2, 2, 0.6, 0.3).ok
    for d in (1, 3, 10):
        assert px.monostability_conditions(d, d, 0.0, 0.0).ok


def test_monostability_degree_reading():
    assert _wta_net(5).degrees() == (1.0, 1.0)
    assert EINetwork.stacked_columns(3, 0.25, 0.05, 1.5, 0.2).degrees()[0] == 2.0
    assert px.monostability_check(_wta_net(5)).ok


def test_monostability_rejects_one_way_ei_edges():
    net = _wta_net(2)
    A = net.A.copy()
    A[2, 0] = False
    broken = EINetwork(net.exc, A, 0.4, 0.5, 1.5, 0.2)
    with pytest.raises(px.NotApplicableError):
        px.monostability_check(broken)


def test_wta_example():
    net = _wta_net()
    pred = px.wta_predict(net, [1.2, -1.2])
    assert pred.winner == 0 and pred.delta == pytest.approx(1.1)
    x = px.wta_simulate(net, [1.2, -1.2])
    assert x[0] >= 0.9 and x[1] <= 0.05
    assert px.wta_predict(net, [-1.2, 1.2]).winner == 1
    assert px.wta_predict(net, [0.5, -0.5]).winner is None


def test_wta_condition_violations():
    with pytest.raises(px.ConditionViolation, match="functionality"):
        px.wta_predict(EINetwork.ek_i(2, 0.4, 0.5, 1.0, 0.2), [2.0, -2.0])
    with pytest.raises(px.ConditionViolation, match="monostability"):
        px.wta_predict(EINetwork.ek_i(2, 1.2, 0.5, 1.5, 0.2), [2.0, -2.0])


def test_contrast_layers():
    formula, layers = px.contrast_layers_needed(0.25, 0.1, 1.0)
    assert layers == 4
    assert formula == pytest.approx(1 + np.log(0.1) / np.log(3.0))
    assert px.contrast_layers_needed(0.25, 1.0, 1.0)[1] == 1
    assert px.contrast_layers_needed(0.25, 2.0, 1.0)[1] == 1
    with pytest.raises(ValueError):
        px.contrast_layers_needed(0.6, 0.1, 1.0)


def test_contrast_cascade_gain_is_one_over_one_minus_w():
    # both E units active and unsaturated: the difference obeys d = w_EE d + du
    for w in (0.1, 0.25, 0.4):
        out = px.contrast_cascade(1, w, 0.05, 1.5, 0.2, [0.22, 0.18])
        assert (out[0, 0] - out[0, 1]) / 0.04 == pytest.approx(1.0 / (1.0 - w), rel=1e-6)


def test_contraction_regime():
    rng = make_rng(7)
    A = rng.standard_normal((6, 6))
    W = 0.5 * (A + A.T)
    W *= 0.8 / np.max(np.abs(np.linalg.eigvalsh(W)))
    assert px.contraction_rate(W) > 0
    field = lambda x, t: -x + np.clip(W @ x + 0.3, 0.0, 1.0)
    cfg = flows.IntegratorConfig(dt=0.01, t_max=10.0, equilibrium_tol=1e-300)
    a = flows.integrate_ode(field, rng.uniform(-2, 2, 6), cfg).states
    b = flows.integrate_ode(field, rng.uniform(-2, 2, 6), cfg).states
    dist = np.linalg.norm(a - b, axis=1)
    assert np.all(np.diff(dist) <= 1e-12)
    assert dist[-1] < dist[0] * np.exp(-0.2 * 10.0)
