import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from tdgibbs.bridges import BridgePair, gaussian_bridge, prior_birth_bridge
from tdgibbs.gibbs import (
    MHConfig,
    MoveLaw,
    SweepState,
    choose_j,
    jump_log_weights,
    jump_probabilities,
    run_chain,
    sample_u,
    sweep,
    within_model_update,
)
from tdgibbs.model import (
    ContractViolation,
    ImpossibleStateError,
    IndependentNormal,
    ModelSpec,
    model_prior_from_weights,
    sample_prior,
    uniform_model_prior,
)
from tdgibbs.testbeds import polyreg_make

NEG_INF = -math.inf


@pytest.fixture(scope="module")
def poly():
    return polyreg_make(seed=42, n=30, sigma=0.3, k_max=5, prior_sd=1.0)


def conjugate_posterior_mean(data, k, prior_sd):
    X = np.vander(data.x, k, increasing=True)
    A = X.T @ X / data.sigma**2 + np.eye(k) / prior_sd**2
    return np.linalg.solve(A, X.T @ data.y / data.sigma**2)


def gaussian_loglik(data, theta):
    X = np.vander(data.x, len(theta), increasing=True)
    return stats.norm.logpdf(data.y, X @ theta, data.sigma).sum()


class UnitBridge(BridgePair):
    """Bridge whose densities are all 1; only the shapes matter."""

    balanced = True
    name = "unit"

    def log_density_up(self, a, b, k):
        return 0.0

    def log_density_down(self, a, b, k):
        return 0.0


def unit_spec(k_max=4):
    return ModelSpec(1, k_max, lambda k: k, lambda y, t, k: 0.0, lambda t, k: 0.0, lambda k: 0.0)


# --- within-model update ----------------------------------------------------

def test_exact_update_at_zero_noise_is_the_posterior_mean(poly, scripted):
    data, spec = poly
    for k in spec.indices:
        theta = within_model_update(spec, data, SweepState(k, np.zeros(k)), MHConfig(),
                                    scripted(normals=[0.0] * k))
        np.testing.assert_allclose(theta, conjugate_posterior_mean(data, k, 1.0), rtol=0, atol=1e-12)


def test_exact_sampler_of_wrong_dimension_is_rejected(poly, rng):
    data, spec = poly
    bad = dataclasses.replace(spec, exact_conditional_sampler=lambda y, k, r: np.zeros(k + 1))
    with pytest.raises(ContractViolation):
        within_model_update(bad, data, SweepState(2, np.zeros(2)), MHConfig(), rng)


def test_mh_with_zero_step_returns_input(poly, rng):
    data, spec = poly
    spec = dataclasses.replace(spec, exact_conditional_sampler=None)
    theta = np.array([0.3, -0.2, 1.0])
    out = within_model_update(spec, data, SweepState(3, theta), MHConfig(steps=5, step_size=0.0), rng)
    np.testing.assert_array_equal(out, theta)


def test_mh_on_flat_box_accepts_every_inside_proposal(scripted):
    def box(t, k):
        return 0.0 if np.all(np.abs(t) <= 1.0) else NEG_INF

    spec = ModelSpec(1, 2, lambda k: k, lambda y, t, k: 0.0, box, uniform_model_prior(1, 2))
    # step 0.5; proposals +0.2, +0.2, +0.7 (leaves the box); every uniform close to 1
    rng = scripted(normals=[0.4, 0.4, 1.4], uniforms=[0.999999] * 3)
    out = within_model_update(spec, None, SweepState(1, np.array([0.0])), MHConfig(3, 0.5), rng)
    np.testing.assert_allclose(out, [0.4])
    assert rng.exhausted


# --- u and j ------------------------------------------------------------------

def test_sample_u_frequency(rng):
    law = MoveLaw(0.25)
    n = 100_000
    ups = sum(sample_u(3, law, rng) == 4 for _ in range(n))
    sd = math.sqrt(n * 0.25 * 0.75)
    assert abs(ups - 0.25 * n) <= 3 * sd


def test_sample_u_convention(scripted):
    assert sample_u(3, MoveLaw(0.25), scripted(uniforms=[0.1])) == 4
    assert sample_u(3, MoveLaw(0.25), scripted(uniforms=[0.3])) == 3


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5])
def test_move_law_rejects_boundary_q(q):
    with pytest.raises(ValueError):
        MoveLaw(q)


def test_unit_densities_leave_only_q():
    spec = unit_spec()
    w = jump_log_weights(spec, None, UnitBridge(), 2, 3, np.zeros(2), np.zeros(3), MoveLaw(0.3))
    np.testing.assert_allclose(jump_probabilities(w), [0.3, 0.7], rtol=1e-15)
    w = jump_log_weights(spec, None, UnitBridge(), 2, 2, np.zeros(2), np.zeros(1), MoveLaw(0.3))
    np.testing.assert_allclose(jump_probabilities(w), [0.3, 0.7], rtol=1e-15)


def test_balanced_symmetric_case():
    spec = ModelSpec(1, 3, lambda k: k, lambda y, t, k: -4.2, lambda t, k: -k * 1.3,
                     uniform_model_prior(1, 3))
    w = jump_log_weights(spec, None, UnitBridge(), 1, 2, np.zeros(1), np.zeros(2), MoveLaw(0.5),
                         mode="balanced")
    np.testing.assert_allclose(jump_probabilities(w), [0.5, 0.5], rtol=1e-15)


def test_out_of_range_candidates_get_zero_weight(scripted):
    spec = unit_spec(k_max=3)
    w = jump_log_weights(spec, None, UnitBridge(), 1, 1, np.zeros(1), None, MoveLaw(0.5))
    assert w[0] == NEG_INF and math.isfinite(w[1])
    assert choose_j(w, (0, 1), scripted(uniforms=[0.0])) == 1
    w = jump_log_weights(spec, None, UnitBridge(), 3, 4, np.zeros(3), None, MoveLaw(0.5))
    assert w[1] == NEG_INF and math.isfinite(w[0])


def test_general_weights_follow_the_formula(poly, rng):
    data, spec = poly
    bridge = gaussian_bridge(spec, 2.0)
    law = MoveLaw(0.3)
    prior = lambda t: stats.norm.logpdf(t, 0, 1).sum()
    lm = math.log(1 / 5)
    theta2 = sample_prior(spec, 2, rng)
    theta3 = np.append(theta2, 0.8)
    w_low, w_high = jump_log_weights(spec, data, bridge, 2, 3, theta2, theta3, law)
    assert w_low == pytest.approx(math.log(0.3) + gaussian_loglik(data, theta2) + prior(theta2) + lm
                                  + stats.norm.logpdf(0.8, 0, 2), abs=1e-9)
    assert w_high == pytest.approx(math.log(0.7) + gaussian_loglik(data, theta3) + prior(theta3) + lm,
                                   abs=1e-9)
    theta1 = theta2[:1]
    w_low, w_high = jump_log_weights(spec, data, bridge, 2, 2, theta2, theta1, law)
    assert w_low == pytest.approx(math.log(0.3) + gaussian_loglik(data, theta1) + prior(theta1) + lm
                                  + stats.norm.logpdf(theta2[1], 0, 2), abs=1e-9)
    assert w_high == pytest.approx(math.log(0.7) + gaussian_loglik(data, theta2) + prior(theta2) + lm,
                                   abs=1e-9)


def test_impossible_state_raises():
    spec = ModelSpec(1, 3, lambda k: k, lambda y, t, k: NEG_INF, lambda t, k: 0.0,
                     uniform_model_prior(1, 3))
    with pytest.raises(ImpossibleStateError):
        jump_log_weights(spec, None, UnitBridge(), 2, 3, np.zeros(2), np.zeros(3), MoveLaw(0.5))
    with pytest.raises(ImpossibleStateError):
        choose_j((NEG_INF, NEG_INF), (1, 2), None)


def test_balanced_mode_needs_balanced_bridge(poly):
    data, spec = poly
    with pytest.raises(ValueError):
        jump_log_weights(spec, data, gaussian_bridge(spec, 2.0), 2, 3, np.zeros(2), np.zeros(3),
                         MoveLaw(0.5), mode="balanced")


def test_general_and_balanced_agree_for_prior_birth(poly, rng):
    data, spec = poly
    bridge = prior_birth_bridge(spec)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 6))
        law = MoveLaw(float(rng.uniform(0.05, 0.95)))
        theta = sample_prior(spec, k, rng) * rng.uniform(0.1, 1.0)
        u = k + 1 if rng.random() < 0.5 else k
        if u == k + 1:
            nbr = bridge.sample_up(theta, k, rng)[0] if k < 5 else None
        else:
            nbr = bridge.sample_down(theta, k, rng)[0] if k > 1 else None
        p_gen = jump_probabilities(jump_log_weights(spec, data, bridge, k, u, theta, nbr, law, "general"))
        p_bal = jump_probabilities(jump_log_weights(spec, data, bridge, k, u, theta, nbr, law, "balanced"))
        worst = max(worst, np.max(np.abs(p_gen - p_bal)))
    assert worst <= 1e-12


def test_choose_j_degenerate(rng):
    assert all(choose_j((NEG_INF, 0.0), (1, 2), rng) == 2 for _ in range(100))


def test_choose_j_three_to_one(scripted, rng):
    w = (math.log(3), 0.0)
    assert choose_j(w, (1, 2), scripted(uniforms=[0.7499])) == 1
    assert choose_j(w, (1, 2), scripted(uniforms=[0.7501])) == 2
    n = 40_000
    first = sum(choose_j(w, (1, 2), rng) == 1 for _ in range(n))
    assert abs(first / n - 0.75) <= 3 * math.sqrt(0.75 * 0.25 / n)


@settings(max_examples=200, deadline=None)
@given(w0=st.floats(-700, 700), w1=st.floats(-700, 700), shift=st.sampled_from([1e6, -1e6, 123.5]))
def test_jump_probabilities_shift_invariant(w0, w1, shift):
    p = jump_probabilities((w0, w1))
    p_shift = jump_probabilities((w0 + shift, w1 + shift))
    assert p.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(p, p_shift, atol=1e-9)
    if w0 == w1:
        np.testing.assert_array_equal(p, [0.5, 0.5])


# --- sweep -------------------------------------------------------------------

# Golden vector: polyreg(seed=42, n=30, sigma=0.3, k_max=5, prior_sd=1), q=0.5,
# prior_birth, start at k=2; scripted normals (0.5, -1.0) for the redraw and 0.2
# for the birth coordinate, u-uniform 0.1 (u=3), j-uniform 0.9.
GOLDEN_THETA = np.array([0.7456268483799815, -0.8838396818317119, 0.2])
GOLDEN_LOG_JOINT = -18.125283517347626


def test_sweep_replays_by_hand(poly, scripted):
    data, spec = poly
    bridge = prior_birth_bridge(spec)
    law = MoveLaw(0.5)
    rng = scripted(normals=[0.5, -1.0, 0.2], uniforms=[0.1, 0.9])
    state, record, decision = sweep(spec, data, bridge, law, SweepState(2, np.zeros(2)),
                                    MHConfig(), rng, iteration=7)
    assert rng.exhausted

    # independent replay of the five steps
    X = np.vander(data.x, 2, increasing=True)
    cov = np.linalg.inv(X.T @ X / 0.09 + np.eye(2))
    theta2 = cov @ X.T @ data.y / 0.09 + np.linalg.cholesky(cov) @ np.array([0.5, -1.0])
    theta3 = np.append(theta2, 0.2)
    w_stay = math.log(0.5) + gaussian_loglik(data, theta2) + math.log(0.2)
    w_up = math.log(0.5) + gaussian_loglik(data, theta3) + math.log(0.2)
    p_stay = 1 / (1 + math.exp(w_up - w_stay))
    expected_j = 2 if 0.9 < p_stay else 3

    assert decision.u == 3 and decision.candidates == (2, 3) and decision.mode == "balanced"
    assert decision.log_weights == pytest.approx((w_stay, w_up), abs=1e-9)
    assert decision.chosen == expected_j == 3
    assert state.k == record.k == 3 and record.jumped and record.iteration == 7
    np.testing.assert_allclose(state.theta, theta3, atol=1e-12)
    np.testing.assert_allclose(state.theta, GOLDEN_THETA, atol=1e-12)
    assert record.log_joint == pytest.approx(
        gaussian_loglik(data, theta3) + stats.norm.logpdf(theta3).sum() + math.log(0.2), abs=1e-9)
    assert record.log_joint == pytest.approx(GOLDEN_LOG_JOINT, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), q=st.floats(0.01, 0.99), start=st.sampled_from([1, 5]))
def test_sweeps_never_leave_the_model_range(poly, seed, q, start):
    data, spec = poly
    rng = np.random.default_rng(seed)
    state = SweepState(start, sample_prior(spec, start, rng))
    for _ in range(20):
        k = state.k
        state, record, decision = sweep(spec, data, prior_birth_bridge(spec), MoveLaw(q), state,
                                        MHConfig(), rng)
        assert spec.k_min <= state.k <= spec.k_max
        assert abs(state.k - k) <= 1
        assert decision.chosen in decision.candidates
        assert len(state.theta) == state.k and math.isfinite(record.log_joint)


def test_symmetric_two_model_target():
    block = IndependentNormal(1, 0.0, 1.0)
    priors = {1: IndependentNormal(1), 2: IndependentNormal(2)}
    spec = ModelSpec(1, 2, lambda k: k, lambda y, t, k: -3.0, lambda t, k: priors[k].logpdf(t),
                     model_prior_from_weights([0.5, 0.5]),
                     exact_conditional_sampler=lambda y, k, r: priors[k].sample(r),
                     block_prior=lambda k: block)
    n = 20_000
    out = run_chain(spec, None, prior_birth_bridge(spec), MoveLaw(0.5), n, seed=5)
    frac = np.mean(out.ks == 1)
    # each sweep switches with probability 1/4, so lag-1 autocorrelation is 1/2
    sd = math.sqrt(0.25 * 3 / n)
    assert abs(frac - 0.5) <= 3 * sd


# --- run_chain ----------------------------------------------------------------

def test_run_chain_bookkeeping(poly):
    data, spec = poly
    out = run_chain(spec, data, prior_birth_bridge(spec), MoveLaw(0.5), 100, 10, seed=3)
    assert len(out) == 90
    assert [r.iteration for r in out.records] == list(range(11, 101))


def test_run_chain_is_deterministic(poly):
    data, spec = poly
    a = run_chain(spec, data, gaussian_bridge(spec, 0.5), MoveLaw(0.4), 300, 0, seed=11)
    b = run_chain(spec, data, gaussian_bridge(spec, 0.5), MoveLaw(0.4), 300, 0, seed=11)
    assert [(r.k, r.theta.tobytes(), r.log_joint) for r in a.records] == \
        [(r.k, r.theta.tobytes(), r.log_joint) for r in b.records]
    c = run_chain(spec, data, gaussian_bridge(spec, 0.5), MoveLaw(0.4), 300, 0, seed=12)
    assert [r.log_joint for r in a.records] != [r.log_joint for r in c.records]


def test_run_chain_argument_errors(poly):
    data, spec = poly
    bridge = prior_birth_bridge(spec)
    with pytest.raises(ContractViolation):
        run_chain(spec, data, bridge, MoveLaw(0.5), 10, init=SweepState(2, np.zeros(3)))
    with pytest.raises(ValueError):
        run_chain(spec, data, bridge, MoveLaw(0.5), 10, 10)


def test_mh_within_gibbs_tracks_the_exact_posterior():
    from tdgibbs.testbeds import polyreg_exact_posterior

    data, spec = polyreg_make(seed=42, n=30, sigma=0.3, k_max=5, prior_sd=1.0)
    exact = polyreg_exact_posterior(data, spec)
    mh_spec = dataclasses.replace(spec, exact_conditional_sampler=None)
    out = run_chain(mh_spec, data, prior_birth_bridge(mh_spec), MoveLaw(0.5), 40_000, 4_000,
                    seed=2, mh_config=MHConfig(steps=5, step_size=0.1))
    freq = np.array([np.mean(out.ks == k) for k in spec.indices])
    # loose: MH inner steps mix slower than exact redraws
    assert 0.5 * np.abs(freq - exact).sum() < 0.08
