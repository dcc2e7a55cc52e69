import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergoq.ergodic import (
    ChannelProcess,
    burn_in_steps,
    channel_at,
    compose_window,
    estimate_mu,
    perron_pair,
    rank_one_residual,
    strict_positivity_window,
    subdominant_modulus,
    superoperator,
    z_backward,
    z_forward,
)
from ergoq.errors import ValidationError
from ergoq.haar import HaarChannelSpec, haar_channel
from ergoq.metric import hennion_distance
from ergoq.mps import MPSChain, transfer_map
from ergoq.qcore import CPMap, Positivity, apply, trace_norm

from oracles import dense_superoperator, perron_dense, random_state


def haar(D, r, seed):
    return haar_channel(HaarChannelSpec(D, r), np.random.default_rng(seed))


class Reindexed:
    """phi*_{m+n-j}: the index-reversed adjoint of a process on [m, n]."""

    def __init__(self, process, m, n):
        self.dim, self.p, self.m, self.n = process.dim, process, m, n

    def channel_at(self, j):
        return self.p.channel_at(self.m + self.n - j).adjoint()


def test_constant_channel_at():
    p = ChannelProcess.constant(haar(2, 2, 0))
    assert channel_at(p, 5) is channel_at(p, -3)


def test_iid_deterministic_across_instances():
    a, b = ChannelProcess.iid_haar(3, 2, 7), ChannelProcess.iid_haar(3, 2, 7)
    for j in (-4, 0, 11):
        assert np.array_equal(a.channel_at(j).kraus, b.channel_at(j).kraus)
    assert not np.array_equal(a.channel_at(0).kraus, ChannelProcess.iid_haar(3, 2, 8).channel_at(0).kraus)


def test_markov_identity_transition_is_frozen():
    chans = [haar(2, 2, s) for s in range(3)]
    p = ChannelProcess.markov(chans, np.eye(3), seed=4)
    first = p.channel_at(0)
    assert all(p.channel_at(j) is first for j in range(-20, 21))


def test_markov_chain_law():
    P = np.array([[0.9, 0.1], [0.2, 0.8]])
    p = ChannelProcess.markov([haar(2, 2, 0), haar(2, 2, 1)], P, seed=3)
    n = 20_000
    s = np.array([p.markov_state(j) for j in range(-n, n + 1)])
    counts = np.zeros((2, 2))
    np.add.at(counts, (s[:-1], s[1:]), 1)
    freq = counts / counts.sum(axis=1, keepdims=True)
    assert np.abs(freq - P).max() < 0.02
    # stationary law (2/3, 1/3) on both sides of 0
    assert abs(np.mean(s[:n] == 0) - 2 / 3) < 0.03
    assert abs(np.mean(s[n:] == 0) - 2 / 3) < 0.03


def test_quasiperiodic_mixture_is_channel():
    p = ChannelProcess.quasiperiodic([haar(3, 2, 0), haar(3, 2, 1), haar(3, 2, 2)], seed=1)
    for j in range(-5, 6):
        K = p.channel_at(j).kraus
        assert np.allclose(np.einsum("iba,ibc->ac", K.conj(), K), np.eye(3), atol=1e-12)


def test_compose_window():
    p = ChannelProcess.iid_haar(3, 2, 1)
    rho = random_state(3, np.random.default_rng(0))
    assert np.allclose(compose_window(p, 4, 4)(rho), apply(p.channel_at(4), rho))
    assert np.allclose(compose_window(p, 0, 1)(rho), apply(p.channel_at(1), apply(p.channel_at(0), rho)))
    for m, n in [(0, 0), (-3, 5), (2, 30)]:
        assert np.trace(compose_window(p, m, n)(rho)).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        compose_window(p, 3, 2)


def test_perron_depolarizing_and_tp():
    pp = perron_pair(CPMap.depolarizing(3))
    assert np.allclose(pp.R, np.eye(3) / 3) and np.allclose(pp.L, np.eye(3) / 3)
    assert pp.eigenvalue == pytest.approx(1.0)
    pp = perron_pair(haar(3, 2, 5))
    assert np.allclose(pp.L, np.eye(3) / 3, atol=1e-10)
    assert pp.eigenvalue == pytest.approx(1.0, abs=1e-12)


def test_perron_non_tp_against_dense():
    chain = MPSChain.random_constant(2, 3, seed=2)
    phi = transfer_map(chain, 0)
    pp = perron_pair(phi)
    assert pp.residual < 1e-10
    lam, R, L = perron_dense(phi.kraus)
    assert pp.eigenvalue == pytest.approx(lam, rel=1e-10)
    assert np.allclose(pp.R, R, atol=1e-9) and np.allclose(pp.L, L, atol=1e-9)


def test_superoperator_matches_dense_oracle():
    phi = haar(3, 2, 6)
    assert np.allclose(superoperator(phi), dense_superoperator(phi.kraus))


def test_forward_depolarizing_constant():
    t = z_forward(ChannelProcess.constant(CPMap.depolarizing(3)), 0, 5, seed_state=random_state(3, np.random.default_rng(1)))
    assert np.allclose(t.matrices, np.eye(3) / 3, atol=1e-15)
    assert t.converged


def test_forward_converges_to_perron():
    phi = haar(3, 2, 3)
    t = z_forward(ChannelProcess.constant(phi), 0, 300)
    assert hennion_distance(t.matrices[-1], perron_pair(phi).R) < 1e-10
    assert t.converged


def test_two_seed_states_decay_exponentially():
    p = ChannelProcess.iid_haar(4, 4, 2)
    rng = np.random.default_rng(0)
    a = z_forward(p, 0, 40, seed_state=random_state(4, rng), companion=False)
    b = z_forward(p, 0, 40, seed_state=random_state(4, rng), companion=False)
    y = np.log(trace_norm(a.matrices - b.matrices))
    x = np.arange(y.size)
    slope, icpt = np.polyfit(x, y, 1)
    r2 = 1 - np.sum((y - slope * x - icpt) ** 2) / np.sum((y - y.mean()) ** 2)
    assert slope < 0 and r2 > 0.95


def test_backward_tp_is_mixed():
    p = ChannelProcess.iid_haar(3, 3, 1)
    assert np.allclose(z_backward(p, -5, 5).matrices, np.eye(3) / 3, atol=1e-14)
    t = z_backward(p, -5, 200, seed_state=random_state(3, np.random.default_rng(2)))
    assert np.allclose(t.matrices[:100], np.eye(3) / 3, atol=1e-13)


def test_backward_non_tp_converges_to_left_perron():
    phi = transfer_map(MPSChain.random_constant(2, 3, seed=5), 0)
    t = z_backward(ChannelProcess.constant(phi), 0, 300)
    assert hennion_distance(t.at(0), perron_pair(phi).L) < 1e-10


def test_backward_is_forward_of_reversed_adjoint():
    p = ChannelProcess.iid_haar(3, 2, 9)
    chain = MPSChain.iid(2, 3, seed=1)
    for proc in (p, chain):
        back = z_backward(proc, -4, 6, companion=False)
        fwd = z_forward(Reindexed(proc, -4, 6), -4, 6, companion=False)
        assert np.allclose(back.matrices, fwd.matrices[::-1], atol=1e-14)


def test_trajectory_index_bounds():
    t = z_forward(ChannelProcess.iid_haar(2, 2, 0), 3, 6)
    with pytest.raises(ValidationError):
        t.at(7)
    with pytest.raises(ValidationError):
        z_forward(ChannelProcess.iid_haar(2, 2, 0), 6, 3)


def test_mu_rank_one_collapses():
    Z = random_state(3, np.random.default_rng(3))
    est = estimate_mu(ChannelProcess.constant(CPMap.replacement(Z)), 20, 2, rng=0)
    assert est.mu_hat == 0 and est.collapsed


def test_mu_depolarizing_half():
    phi = CPMap.depolarizing(2, 0.5)
    assert subdominant_modulus(phi) == pytest.approx(0.5)
    est = estimate_mu(ChannelProcess.constant(phi), 60, 3, rng=1)
    assert abs(est.mu_hat / 0.5 - 1) < 0.05


def test_mu_iid_haar_below_one():
    est = estimate_mu(ChannelProcess.iid_haar(4, 4, 0), 100, 8, rng=2)
    assert est.mu_hat + 1.96 * est.standard_error < 1


def test_mu_thread_independent():
    p = ChannelProcess.iid_haar(3, 3, 4)
    a = estimate_mu(p, 40, 4, rng=5, threads=1)
    b = estimate_mu(p, 40, 4, rng=5, threads=3)
    assert np.array_equal(a.per_pair, b.per_pair)


def test_rank_one_residual_constant_rank_one():
    Z = random_state(3, np.random.default_rng(4))
    p = ChannelProcess.constant(CPMap.replacement(Z))
    assert rank_one_residual(p, 0, 3, samples=50, rng=0, burn=5) <= 1e-12


def test_rank_one_residual_rate_constant_channel():
    phi = haar(3, 3, 11)
    mu = subdominant_modulus(phi)
    p = ChannelProcess.constant(phi)
    r = [rank_one_residual(p, 0, w, samples=400, rng=1, burn=100) for w in (3, 7)]
    ratio = r[1] / r[0]
    assert mu**4 / 2 < ratio < 2 * mu**4


def test_rank_one_residual_log_linear_iid():
    p = ChannelProcess.iid_haar(3, 3, 0)
    ws = np.array([5, 10, 15, 20])
    y = np.log([rank_one_residual(p, 0, int(w), samples=200, rng=1) for w in ws])
    slope, icpt = np.polyfit(ws, y, 1)
    r2 = 1 - np.sum((y - slope * ws - icpt) ** 2) / np.sum((y - y.mean()) ** 2)
    assert slope < 0 and r2 > 0.95


def test_rank_one_residual_validation():
    p = ChannelProcess.iid_haar(2, 2, 0)
    with pytest.raises(ValidationError):
        rank_one_residual(p, 0, 3, x=5)


def test_burn_in_bounds():
    b = burn_in_steps(ChannelProcess.iid_haar(3, 3, 0))
    assert 50 <= b <= 5000
    assert burn_in_steps(ChannelProcess.constant(CPMap.identity(2))) == 5000


def test_strict_positivity_window():
    n0, status = strict_positivity_window(ChannelProcess.iid_haar(2, 2, 0), samples=100, rng=0)
    assert n0 is not None and status in (Positivity.CERTIFIED, Positivity.PROBABLE)
    n0, status = strict_positivity_window(ChannelProcess.constant(CPMap.identity(2)), n0_max=2, samples=20, rng=0)
    assert n0 is None and status is Positivity.COUNTEREXAMPLE


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 3), st.integers(-20, 20))
def test_shift_equation_residual(seed, D, r, m):
    p = ChannelProcess.iid_haar(D, r, seed)
    t = z_forward(p, m, m + 15)
    for j in range(m + 1, m + 16):
        img = apply(p.channel_at(j), t.at(j - 1))
        assert np.linalg.norm(t.at(j) - img / np.trace(img).real) <= 1e-12


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_determinism(seed):
    a = z_forward(ChannelProcess.iid_haar(3, 2, seed), 0, 20)
    b = z_forward(ChannelProcess.iid_haar(3, 2, seed), 0, 20)
    assert np.array_equal(a.matrices, b.matrices) and np.array_equal(a.residuals, b.residuals)
    ea = estimate_mu(ChannelProcess.iid_haar(3, 2, seed), 20, 2, rng=seed)
    eb = estimate_mu(ChannelProcess.iid_haar(3, 2, seed), 20, 2, rng=seed)
    assert ea.mu_hat == eb.mu_hat


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_translation_invariant_mu(seed, D):
    phi = haar(D, 3, seed)
    est = estimate_mu(ChannelProcess.constant(phi), 200, 3, rng=seed)
    assert abs(est.mu_hat / subdominant_modulus(phi) - 1) < 0.05
