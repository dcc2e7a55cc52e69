"""Independent reference computations used by the tests.

Every routine here takes the slow, explicit route (dense operators, loops
over index configurations, full Gram inversion) and shares no code with the
package beyond plain numpy.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import sympy


def random_kraus(D, n, rng, Dout=None):
    Dout = Dout or D
    return rng.standard_normal((n, Dout, D)) + 1j * rng.standard_normal((n, Dout, D))


def random_state(D, rng, rank=None):
    rank = rank or D
    G = rng.standard_normal((D, rank)) + 1j * rng.standard_normal((D, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(D, rng):
    G = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    return (G + G.conj().T) / 2


def kraus_sum(kraus, M):
    """sum_i B_i M B_i^dagger by an explicit loop."""
    out = np.zeros((kraus.shape[1], kraus.shape[1]), dtype=complex)
    for B in kraus:
        out += B @ M @ B.conj().T
    return out


def dense_superoperator(kraus):
    """Row-major vectorization: vec(B M B^dagger) = (B kron conj(B)) vec(M)."""
    return sum(np.kron(B, B.conj()) for B in kraus)


def superoperator_spectrum(kraus):
    return np.sort(np.abs(np.linalg.eigvals(dense_superoperator(kraus))))[::-1]


def perron_dense(kraus):
    """Leading right/left eigenmatrices of the dense superoperator, trace one."""
    D = kraus.shape[2]
    S = dense_superoperator(kraus)
    w, V = np.linalg.eig(S)
    k = np.argmax(np.abs(w))
    R = V[:, k].reshape(D, D)
    R = R / np.trace(R)
    wl, Vl = np.linalg.eig(S.conj().T)
    kl = np.argmax(np.abs(wl))
    L = Vl[:, kl].reshape(D, D)
    L = L / np.trace(L)
    return w[k].real, R, L


def choi_loops(kraus):
    """sum_ij phi(E_ij) kron E_ij assembled entry by entry."""
    D = kraus.shape[2]
    C = np.zeros((D * D, D * D), dtype=complex)
    for i in range(D):
        for j in range(D):
            E = np.zeros((D, D))
            E[i, j] = 1
            C += np.kron(kraus_sum(kraus, E), E)
    return C


def partial_trace_channel(U, D, M):
    """tr_env[U (|0><0|_env kron M) U^dagger] with the environment first."""
    L = U.shape[0]
    r = L // D
    Q = np.zeros((r, r))
    Q[0, 0] = 1
    big = U @ np.kron(Q, M) @ U.conj().T
    return np.einsum("iaib->ab", big.reshape(r, D, r, D))


# --- permutations -----------------------------------------------------------


def n_cycles(p):
    seen, c = set(), 0
    for s in range(len(p)):
        if s not in seen:
            c += 1
            while s not in seen:
                seen.add(s)
                s = p[s]
    return c


def cycle_lengths(p):
    seen, out = set(), []
    for s in range(len(p)):
        if s not in seen:
            k = 0
            while s not in seen:
                seen.add(s)
                s = p[s]
                k += 1
            out.append(k)
    return tuple(sorted(out, reverse=True))


def gram_weingarten(n, L):
    """Wg(sigma) for every sigma in S_n by exact inversion of G[s,t] = L^{cycles(s^-1 t)}."""
    perms = list(itertools.permutations(range(n)))

    def inv(p):
        q = [0] * n
        for i, x in enumerate(p):
            q[x] = i
        return tuple(q)

    def mul(p, q):  # (p q)(i) = p(q(i))
        return tuple(p[q[i]] for i in range(n))

    G = sympy.Matrix(len(perms), len(perms), lambda a, b: sympy.Integer(L) ** n_cycles(mul(inv(perms[a]), perms[b])))
    Ginv = G.inv()
    e = perms.index(tuple(range(n)))
    return {p: Fraction(int(sympy.fraction(Ginv[e, k])[0]), int(sympy.fraction(Ginv[e, k])[1]))
            for k, p in enumerate(perms)}


def permutation_operator(p, D):
    """Dense P_p on (C^D)^{kron n}: P |i_1..i_n> = |i_{p^-1(1)} .. i_{p^-1(n)}>."""
    n = len(p)
    P = np.zeros((D**n, D**n))
    for idx in itertools.product(range(D), repeat=n):
        out = [0] * n
        for k in range(n):
            out[p[k]] = idx[k]
        a = int(np.ravel_multi_index(out, (D,) * n))
        b = int(np.ravel_multi_index(idx, (D,) * n))
        P[a, b] = 1
    return P


def kron_power(M, n):
    out = np.array([[1.0 + 0j]])
    for _ in range(n):
        out = np.kron(out, M)
    return out


# --- Gaussian pairings ------------------------------------------------------


def pairings(items):
    items = list(items)
    if not items:
        yield []
        return
    a = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1:]
        for p in pairings(rest):
            yield [(a, items[k])] + p


def gaussian_pairing_perm_coefficients(n, D):
    """Per-permutation coefficients of E[W^{kron n}] from the Wick expansion (see below)."""
    acc = {}
    for P in pairings(range(n)):
        for mask in itertools.product((0, 1), repeat=len(P)):
            perm = list(range(n))
            coef = Fraction(1)
            for (a, b), swap in zip(P, mask):
                if swap:
                    perm[a], perm[b] = perm[b], perm[a]
                    coef *= Fraction(1, D)
                else:
                    coef *= Fraction(-1, D * D)
            key = tuple(perm)
            acc[key] = acc.get(key, 0) + coef
    return acc


def gaussian_pairing_coefficients(n, D):
    """Coefficients of sum_sigma c_sigma P_sigma for E[W^{kron n}] by Wick expansion.

    Each pair contributes (SWAP/D - I/D^2); expanding the product gives a sum
    over subsets of swapped pairs. Returns {cycle type: coefficient} and
    raises if a class receives two different coefficients.
    """
    acc = gaussian_pairing_perm_coefficients(n, D)
    by_class = {}
    for perm, c in acc.items():
        ct = cycle_lengths(perm)
        if ct in by_class and by_class[ct] != c:
            raise AssertionError(f"class {ct} has inconsistent coefficients")
        by_class[ct] = c
    return by_class


def double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1


# --- MPS --------------------------------------------------------------------


def mps_amplitudes(tensors, b_left, b_right, boundary):
    """Amplitudes by looping over every configuration, first site most significant.

    Open: conj(b_left[i_1]) . A_2^{i_2} ... A_{n-1}^{i_{n-1}} . b_right[i_n].
    Periodic: tr(A_1^{i_1} ... A_n^{i_n}).
    """
    n = len(tensors)
    d = tensors[0].shape[0]
    psi = np.zeros(d**n, dtype=complex)
    for k, idx in enumerate(itertools.product(range(d), repeat=n)):
        if boundary == "open":
            v = b_left[idx[0]].conj()
            for j in range(1, n - 1):
                v = v @ tensors[j][idx[j]]
            psi[k] = v @ b_right[idx[-1]]
        else:
            M = np.eye(tensors[0].shape[1], dtype=complex)
            for j in range(n):
                M = M @ tensors[j][idx[j]]
            psi[k] = np.trace(M)
    return psi


def local_expectation(psi, O, offset, d, n):
    """<psi|O on sites offset..offset+k-1|psi> / <psi|psi> via a dense operator."""
    k = int(round(math.log(O.shape[0], d)))
    full = np.kron(np.kron(np.eye(d**offset), O), np.eye(d ** (n - offset - k)))
    return (np.vdot(psi, full @ psi) / np.vdot(psi, psi)).real


def schmidt_squares(psi, cut, d):
    s = np.linalg.svd(psi.reshape(d**cut, -1), compute_uv=False) ** 2
    return s / s.sum()
