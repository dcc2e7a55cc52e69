import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ergoq.errors import CapExceededError, DegenerateImageError, DimensionError, ValidationError
from ergoq.qcore import (
    CPMap,
    Positivity,
    adjoint,
    apply,
    choi,
    compose,
    is_strictly_positive,
    one_norm_lower,
    projective_action,
    random_density_matrix,
    trace_norm,
)
from ergoq.haar import HaarChannelSpec, haar_channel

from oracles import choi_loops, kraus_sum, random_kraus, random_state

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


def depolarizing_units(D):
    ops = []
    for i in range(D):
        for j in range(D):
            B = np.zeros((D, D))
            B[i, j] = 1 / np.sqrt(D)
            ops.append(B)
    return CPMap(np.array(ops))


def test_identity_apply():
    rho = random_state(2, np.random.default_rng(0))
    assert np.allclose(apply(CPMap.identity(2), rho), rho, atol=0)


def test_full_depolarizing_outputs_mixed():
    phi = depolarizing_units(2)
    assert phi.trace_preserving
    rho = random_state(2, np.random.default_rng(1))
    assert np.allclose(apply(phi, rho), np.eye(2) / 2, atol=1e-15)


def test_apply_on_identity_matches_kraus_sum():
    rng = np.random.default_rng(2)
    K = random_kraus(3, 2, rng)
    assert np.allclose(apply(CPMap(K), np.eye(3)), kraus_sum(K, np.eye(3)), atol=1e-13)


def test_apply_rejects_wrong_shape():
    with pytest.raises(DimensionError):
        apply(CPMap.identity(2), np.eye(3))


def test_compose_identity_left():
    rng = np.random.default_rng(3)
    phi = CPMap(random_kraus(3, 2, rng))
    psi = compose([CPMap.identity(3), phi])
    units = np.eye(9).reshape(9, 3, 3)
    assert np.allclose(apply(psi, units), apply(phi, units), atol=1e-13)


def test_compose_depolarizing_pair():
    phi = compose([depolarizing_units(2), depolarizing_units(2)])
    for s in range(3):
        assert np.allclose(apply(phi, random_state(2, np.random.default_rng(s))), np.eye(2) / 2, atol=1e-14)


def test_compose_order_is_left_after_right():
    rng = np.random.default_rng(4)
    p0, p1 = CPMap(random_kraus(3, 2, rng)), CPMap(random_kraus(3, 3, rng))
    rho = random_state(3, rng)
    assert np.allclose(apply(compose([p1, p0]), rho), apply(p1, apply(p0, rho)), rtol=1e-12, atol=1e-12)


def test_compose_cap():
    big = CPMap(random_kraus(2, 64, np.random.default_rng(0)))
    with pytest.raises(CapExceededError):
        compose([big, big, big])


def test_compose_empty():
    with pytest.raises(ValidationError):
        compose([])


def test_adjoint_identity_and_involution():
    assert np.allclose(adjoint(CPMap.identity(2)).kraus, np.eye(2)[None])
    rng = np.random.default_rng(5)
    phi = CPMap(random_kraus(3, 2, rng))
    M = rng.standard_normal((3, 3))
    assert np.allclose(apply(adjoint(adjoint(phi)), M), apply(phi, M), atol=1e-13)


def test_adjoint_unital_for_channels():
    phi = haar_channel(HaarChannelSpec(3, 2), np.random.default_rng(6))
    assert np.allclose(apply(phi.adjoint(), np.eye(3)), np.eye(3), atol=1e-12)


def test_choi_identity():
    C = choi(CPMap.identity(2))
    omega = np.zeros(4)
    omega[[0, 3]] = 1
    assert np.allclose(C, np.outer(omega, omega))
    assert np.linalg.matrix_rank(C) == 1
    assert np.isclose(np.trace(C).real, 2)


def test_choi_depolarizing():
    assert np.allclose(choi(depolarizing_units(2)), np.eye(4) / 2, atol=1e-15)


def test_choi_matches_loop_oracle():
    K = random_kraus(3, 2, np.random.default_rng(7))
    assert np.allclose(choi(CPMap(K)), choi_loops(K), atol=1e-12)


def test_strict_positivity_examples():
    assert is_strictly_positive(depolarizing_units(3), 10).status is Positivity.CERTIFIED
    U = np.linalg.qr(np.random.default_rng(8).standard_normal((3, 3)))[0]
    res = is_strictly_positive(CPMap.unitary(U), 5, rng=1)
    assert res.status is Positivity.COUNTEREXAMPLE
    assert res.witness is not None and not res


def test_haar_d2_r2_is_probable_not_certified():
    # the Choi matrix of an r-Kraus map has rank <= r < D^2, so no certificate exists
    statuses = [is_strictly_positive(haar_channel(HaarChannelSpec(2, 2), np.random.default_rng(s)), 200, rng=s).status
                for s in range(50)]
    assert statuses.count(Positivity.PROBABLE) == 50


def test_projective_action():
    rng = np.random.default_rng(9)
    phi = haar_channel(HaarChannelSpec(3, 2), rng)
    rho = random_state(3, rng)
    assert np.allclose(projective_action(phi, rho), apply(phi, rho), atol=1e-13)
    nontp = CPMap(random_kraus(3, 2, rng))
    assert np.allclose(projective_action(nontp.scaled(7.5), rho), projective_action(nontp, rho), atol=1e-13)
    assert np.isclose(np.trace(projective_action(nontp, rho)).real, 1.0, atol=1e-15)
    with pytest.raises(DegenerateImageError):
        projective_action(CPMap(np.zeros((1, 3, 3))), rho)


def test_one_norm_lower_examples():
    assert one_norm_lower(CPMap.identity(3), 1, rng=0) == pytest.approx(1.0, abs=1e-14)
    assert one_norm_lower(lambda M: 0 * M, 10, rng=0, dim=3) == 0.0
    rng = np.random.default_rng(10)
    Z, Zp = random_state(3, rng), random_state(3, rng)

    def P(M):
        return np.einsum("ab,...ba->...", Zp, M)[..., None, None] * Z

    w, V = np.linalg.eigh(Zp)
    u = V[:, -1]
    exact = trace_norm(P(np.outer(u, u.conj())))
    assert exact == pytest.approx(w[-1], rel=1e-12)
    est = one_norm_lower(P, 2000, rng=0, dim=3)
    assert est <= exact + 1e-12
    assert est > 0.9 * exact


def test_one_norm_lower_monotone_in_samples():
    phi = CPMap(random_kraus(3, 2, np.random.default_rng(11)))
    vals = [one_norm_lower(phi, n, rng=5) for n in (1, 5, 20, 80)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_tp_flag_mismatch_rejected():
    with pytest.raises(ValidationError):
        CPMap(random_kraus(2, 2, np.random.default_rng(0)), trace_preserving=True)


@given(seeds, dims, st.integers(1, 4), st.booleans())
def test_cp_positivity(seed, D, n, low_rank):
    rng = np.random.default_rng(seed)
    phi = CPMap(random_kraus(D, n, rng))
    rho = random_state(D, rng, rank=1 if low_rank else D)
    out = apply(phi, rho)
    scale = max(1.0, np.abs(out).max())
    assert np.linalg.eigvalsh(out)[0] >= -phi.tol.tol_psd * scale


@given(seeds, st.integers(1, 6))
def test_composition_associativity(seed, D):
    rng = np.random.default_rng(seed)
    a, b, c = (CPMap(random_kraus(D, k, rng)) for k in (1, 2, 3))
    M = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    lhs = apply(compose([a, b, c]), M)
    rhs = apply(a, apply(b, apply(c, M)))
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))


@given(seeds, st.integers(1, 6), st.integers(1, 3))
def test_adjoint_duality_on_matrix_units(seed, D, n):
    rng = np.random.default_rng(seed)
    phi = CPMap(random_kraus(D, n, rng))
    units = np.eye(D * D).reshape(D * D, D, D)
    img = apply(phi, units)
    adj = apply(adjoint(phi), units)
    lhs = np.einsum("pab,qab->pq", units, img)  # tr[E_p^dagger phi(E_q)]
    rhs = np.einsum("pab,qab->pq", adj.conj(), units)  # tr[(phi*(E_p))^dagger E_q]
    scale = max(1.0, np.abs(lhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


@given(seeds, st.integers(1, 5), st.integers(1, 4))
def test_tp_flag_matches_kraus_identity(seed, D, r):
    rng = np.random.default_rng(seed)
    V = np.linalg.qr(random_kraus(D, 1, rng, Dout=r * D)[0])[0]
    tp = CPMap(V.reshape(r, D, D))
    assert tp.trace_preserving
    generic = CPMap(random_kraus(D, r, rng))
    S = np.einsum("iba,ibc->ac", generic.kraus.conj(), generic.kraus)
    assert generic.trace_preserving == (np.linalg.norm(S - np.eye(D)) <= generic.tol.tol_tp)


@given(seeds, st.integers(1, 5), st.integers(1, 4))
def test_choi_psd(seed, D, n):
    phi = CPMap(random_kraus(D, n, np.random.default_rng(seed)))
    C = choi(phi)
    assert np.allclose(C, C.conj().T)
    assert np.linalg.eigvalsh(C)[0] >= -phi.tol.tol_psd * max(1.0, np.abs(C).max())


@given(seeds, st.integers(1, 6))
def test_random_density_matrix_valid(seed, D):
    rho = random_density_matrix(D, seed)
    assert np.isclose(np.trace(rho).real, 1)
    assert np.linalg.eigvalsh(rho)[0] > -1e-14
