"""Exact Weingarten calculus on the symmetric group and Haar-channel moments.

Permutations are tuples ``p`` with ``p[i]`` the image of ``i``; products
compose right to left, ``(p q)(i) = p[q[i]]``. All tables are exact
``fractions.Fraction`` values.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "ConjClass",
    "MomentTable",
    "SecondMoment",
    "WeingartenTable",
    "WgAsymptotics",
    "class_of",
    "compose_perm",
    "cycle_type",
    "enumerate_classes",
    "gaussian_limit_moments",
    "inverse_perm",
    "moment_recursion",
    "perm_length",
    "perm_trace",
    "second_moment_exact",
    "verify_gram_identity",
    "weingarten_table",
    "wg_asymptotic_check",
]

N_MAX_TABLE = 6
N_MAX_MOMENTS = 4


def compose_perm(p: tuple, q: tuple) -> tuple:
    return tuple(p[i] for i in q)


def inverse_perm(p: tuple) -> tuple:
    inv = [0] * len(p)
    for i, x in enumerate(p):
        inv[x] = i
    return tuple(inv)


def cycle_type(p: tuple) -> tuple:
    """Cycle lengths in non-increasing order."""
    seen = [False] * len(p)
    lengths = []
    for i in range(len(p)):
        if not seen[i]:
            k, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = p[j]
                k += 1
            lengths.append(k)
    return tuple(sorted(lengths, reverse=True))


def perm_length(p: tuple) -> int:
    """``|p| = n - (number of cycles)``, the minimal number of transpositions."""
    return len(p) - len(cycle_type(p))


@dataclass(frozen=True, order=True)
class ConjClass:
    cycle_type: tuple

    def __post_init__(self):
        c = tuple(int(x) for x in self.cycle_type)
        if not c or any(x < 1 for x in c):
            raise ValidationError("cycle type must be a non-empty tuple of positive integers")
        object.__setattr__(self, "cycle_type", tuple(sorted(c, reverse=True)))

    @property
    def n(self) -> int:
        return sum(self.cycle_type)

    @property
    def cycles(self) -> int:
        return len(self.cycle_type)

    @property
    def length(self) -> int:
        return self.n - self.cycles

    @property
    def size(self) -> int:
        z = 1
        for c, mult in Counter(self.cycle_type).items():
            z *= c**mult * math.factorial(mult)
        return math.factorial(self.n) // z

    @property
    def representative(self) -> tuple:
        """``(1 2 ... c_1)(c_1+1 ...)...`` in zero-based form."""
        p, start = [], 0
        for c in self.cycle_type:
            p.extend(start + (k + 1) % c for k in range(c))
            start += c
        return tuple(p)

    @property
    def key(self) -> str:
        return ",".join(str(c) for c in self.cycle_type)

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.cycle_type) + ")"


def class_of(p: tuple) -> ConjClass:
    return ConjClass(cycle_type(p))


def _partitions(n: int, largest: int | None = None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


def enumerate_classes(n: int, n_max: int = N_MAX_TABLE) -> list[ConjClass]:
    """All conjugacy classes of ``S_n``, most cycles first (identity class first)."""
    if not 1 <= n <= n_max:
        raise DomainError(f"n must lie in [1, {n_max}], got {n}")
    return sorted((ConjClass(p) for p in _partitions(n)), key=lambda c: (-c.cycles, tuple(-x for x in c.cycle_type)))


@lru_cache(maxsize=None)
def _all_perms(n: int) -> tuple:
    return tuple(itertools.permutations(range(n)))


@lru_cache(maxsize=None)
def _cycle_counts(n: int) -> dict:
    return {p: len(cycle_type(p)) for p in _all_perms(n)}


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    n = len(A)
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise DomainError("singular exact linear system")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


@dataclass(frozen=True)
class WeingartenTable:
    n: int
    L: int
    values: dict  # ConjClass -> Fraction

    def __call__(self, c) -> Fraction:
        """Value on a class, given as a :class:`ConjClass` or a cycle type."""
        return self.values[c if isinstance(c, ConjClass) else ConjClass(tuple(c))]

    def of_perm(self, p: tuple) -> Fraction:
        return self.values[class_of(p)]

    def floats(self) -> dict:
        return {c: float(v) for c, v in self.values.items()}

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "L": self.L,
            "values": {c.key: f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
                       for c, v in self.values.items()},
            "floats": {c.key: float(v) for c, v in self.values.items()},
        }


@lru_cache(maxsize=256)
def weingarten_table(n: int, L: int) -> WeingartenTable:
    """Exact ``Wg(class, L)`` for every class of ``S_n``.

    Solves the defining identity ``sum_tau Wg(sigma tau^-1) L^{m(tau)} = [sigma = e]``
    with one equation per class representative ``sigma`` (the solution is a
    class function, so these equations determine it). Requires ``L >= n``,
    where the cycle-count Gram matrix is invertible.
    """
    if not 1 <= n <= N_MAX_TABLE:
        raise DomainError(f"n must lie in [1, {N_MAX_TABLE}], got {n}")
    if L < n:
        raise DomainError(f"the Gram matrix is singular for L < n (L={L}, n={n})")
    classes = enumerate_classes(n)
    index = {c: k for k, c in enumerate(classes)}
    perms = _all_perms(n)
    mcount = _cycle_counts(n)
    A = []
    for c in classes:
        sigma = c.representative
        row = [Fraction(0)] * len(classes)
        for tau in perms:
            k = index[class_of(compose_perm(sigma, inverse_perm(tau)))]
            row[k] += L ** mcount[tau]
        A.append(row)
    b = [Fraction(int(c.cycles == n)) for c in classes]
    sol = _solve_exact(A, b)
    return WeingartenTable(n, L, {c: v for c, v in zip(classes, sol)})


def verify_gram_identity(table: WeingartenTable) -> bool:
    """Check ``sum_tau Wg(sigma tau^-1) L^{m(tau)} = [sigma = e]`` for every ``sigma`` in ``S_n``."""
    n, L = table.n, table.L
    perms = _all_perms(n)
    mcount = _cycle_counts(n)
    ident = tuple(range(n))
    for sigma in perms:
        s = sum(table.of_perm(compose_perm(sigma, inverse_perm(tau))) * L ** mcount[tau] for tau in perms)
        if s != (1 if sigma == ident else 0):
            return False
    return True


def perm_trace(c, M) -> complex:
    """``tr[P_tau M^{(x)n}] = prod_j tr[M^{c_j}]`` for ``tau`` of cycle type ``c``."""
    ct = c.cycle_type if isinstance(c, ConjClass) else tuple(c)
    M = np.asarray(M)
    out = 1.0 + 0j
    powers = {}
    for k in ct:
        if k not in powers:
            powers[k] = np.trace(np.linalg.matrix_power(M, k))
        out *= powers[k]
    return complex(out)


# ---------------------------------------------------------------------------
# Haar-channel moments


@dataclass(frozen=True)
class SecondMoment:
    """``E[Z (x) Z] = a I (x) I + b SWAP`` and ``m2 = E tr Z^2``."""

    a: Fraction
    b: Fraction
    m2: Fraction


def second_moment_exact(r: int, D: int) -> SecondMoment:
    if r < 2 or D < 2:
        raise DomainError("need r >= 2 and D >= 2")
    den = r * D * D + 1
    a = Fraction(r, den)
    b = Fraction(1, D * den)
    m2 = Fraction((r + 1) * D, den)
    if m2 != a * D + b * D * D:
        raise AssertionError("second moment is internally inconsistent")
    return SecondMoment(a, b, m2)


@dataclass(frozen=True)
class MomentTable:
    """Stationary moments of the iid Haar shift equation.

    ``raw[c] = E prod_j tr[Z^{c_j}]`` and
    ``centered[c] = E prod_j tr[Y^{c_j}]`` with ``Y = Z - I/D`` (both exact).
    The moments of ``W = sqrt(r D^2 + 1) Y`` are
    ``M(c) = (r D^2 + 1)^{n/2} centered[c]``; :meth:`exact` returns them as
    rationals when ``n`` is even.
    """

    n: int
    r: int
    D: int
    raw: dict
    centered: dict

    @property
    def scale_sq(self) -> int:
        return self.r * self.D**2 + 1

    def exact(self, c) -> Fraction:
        c = c if isinstance(c, ConjClass) else ConjClass(tuple(c))
        k = c.n
        if k % 2:
            raise DomainError("W moments of odd order are irrational multiples; use value()")
        return Fraction(self.scale_sq) ** (k // 2) * self.centered[c]

    def value(self, c) -> float:
        c = c if isinstance(c, ConjClass) else ConjClass(tuple(c))
        return float(self.centered[c]) * math.sqrt(self.scale_sq) ** c.n


def _strip_ones(ct: tuple) -> tuple:
    return tuple(x for x in ct if x > 1)


def moment_recursion(n: int, r: int, D: int) -> MomentTable:
    """Exact stationary moments of orders ``1..n`` for the iid Haar channel.

    Stationarity ``Z' = tr_r[U (Q (x) Z) U^dagger] ~ Z`` with ``U`` independent
    of ``Z`` and the Weingarten twirl give, for each class ``c`` of ``S_k``,

        G(c) = sum_{sigma, tau} Wg(sigma^-1 tau, rD) r^{m(tau)} D^{m(c tau)} G(type sigma),

    where ``G(c) = E prod tr[Z^{c_j}]`` and cycles of length one contribute
    ``tr Z = 1``. Classes of order ``k`` without fixed points are the unknowns
    at level ``k``; everything else is known from lower levels, so each level
    is a small exact linear system. Centered moments follow by binomial
    expansion of ``Z = I/D + Y``.
    """
    if not 1 <= n <= N_MAX_MOMENTS:
        raise DomainError(f"moment recursion supports 1 <= n <= {N_MAX_MOMENTS}")
    if r < 2 or D < 2:
        raise DomainError("need r >= 2 and D >= 2")
    L = r * D
    if L < n:
        raise DomainError("need L = r D >= n")
    G: dict[tuple, Fraction] = {(): Fraction(1)}
    for k in range(2, n + 1):
        wg = weingarten_table(k, L)
        perms = _all_perms(k)
        mcount = _cycle_counts(k)
        unknowns = [c.cycle_type for c in enumerate_classes(k) if 1 not in c.cycle_type]
        uidx = {u: i for i, u in enumerate(unknowns)}
        A = [[Fraction(0)] * len(unknowns) for _ in unknowns]
        b = [Fraction(0)] * len(unknowns)
        # coefficient of G(type sigma) summed over sigma in a class
        for row, u in enumerate(unknowns):
            rep = ConjClass(u).representative
            coef: dict[tuple, Fraction] = {}
            for sigma in perms:
                s_inv = inverse_perm(sigma)
                acc = Fraction(0)
                for tau in perms:
                    acc += wg.of_perm(compose_perm(s_inv, tau)) * r ** mcount[tau] * D ** mcount[compose_perm(rep, tau)]
                t = _strip_ones(cycle_type(sigma))
                coef[t] = coef.get(t, Fraction(0)) + acc
            A[row][row] += 1
            for t, v in coef.items():
                if len(t) and sum(t) == k:
                    A[row][uidx[t]] -= v
                else:
                    b[row] += v * G[t]
        for u, v in zip(unknowns, _solve_exact(A, b)):
            G[u] = v
    raw, centered = {}, {}
    for k in range(1, n + 1):
        for c in enumerate_classes(k):
            raw[c] = G[_strip_ones(c.cycle_type)]
            centered[c] = _centered(c.cycle_type, G, D)
    return MomentTable(n, r, D, raw, centered)


def _centered(ct: tuple, G: dict, D: int) -> Fraction:
    """``E prod_l tr[(Z - I/D)^{c_l}]`` from the raw moments ``G``."""
    total = Fraction(0)
    n = sum(ct)
    for ks in itertools.product(*(range(c + 1) for c in ct)):
        w = Fraction(1)
        for c, k in zip(ct, ks):
            w *= math.comb(c, k)
        zeros = sum(1 for k in ks if k == 0)
        w *= Fraction(-1, D) ** (n - sum(ks)) * D**zeros
        t = tuple(sorted((k for k in ks if k > 1), reverse=True))
        total += w * G[t]
    return total


def gaussian_limit_moments(n: int, D: int) -> dict:
    """Coefficients of ``lim_{r -> inf} E[W^{(x)n}]`` on the class sums ``E^{(2^j, 1^{n-2j})}``.

    The coefficient of ``(2^j, 1^{n-2j})`` is
    ``(-1)^{n/2 - j} (n - 2j - 1)!! / D^{n-j}``; all vanish for odd ``n``.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if D < 1:
        raise DomainError("D must be positive")
    out = {}
    for j in range(n // 2, -1, -1):
        c = ConjClass((2,) * j + (1,) * (n - 2 * j))
        if n % 2:
            out[c] = Fraction(0)
            continue
        free = n - 2 * j
        pairings = math.factorial(free) // (2 ** (free // 2) * math.factorial(free // 2))
        out[c] = Fraction((-1) ** (n // 2 - j) * pairings, D ** (n - j))
    return out


@dataclass(frozen=True)
class WgAsymptotics:
    exponent: float
    sign: int
    constant: float
    expected_exponent: int
    expected_sign: int
    catalan_product: int
    shifted_catalan_product: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def wg_asymptotic_check(n: int, c, L_list) -> WgAsymptotics:
    """Leading large-``L`` behaviour of ``Wg(c, L)`` from exact tables.

    ``exponent`` is the least-squares slope of ``log |Wg|`` against ``log L``;
    ``constant`` is ``|Wg| L^{n + |c|}`` at the largest ``L``. Two candidate
    closed forms are returned for comparison: ``prod_i Cat(c_i)`` and
    ``prod_i Cat(c_i - 1)`` with ``Cat`` the Catalan numbers.
    """
    c = c if isinstance(c, ConjClass) else ConjClass(tuple(c))
    if c.n != n:
        raise ValidationError("class does not belong to S_n")
    Ls = sorted(int(L) for L in L_list)
    if len(Ls) < 2:
        raise ValidationError("need at least two values of L")
    vals = [weingarten_table(n, L)(c) for L in Ls]
    signs = {1 if v > 0 else -1 for v in vals}
    logs = np.log([abs(float(v)) for v in vals])
    slope = float(np.polyfit(np.log(Ls), logs, 1)[0])
    expo = n + c.length
    const = abs(float(vals[-1])) * Ls[-1] ** expo
    cat = lambda k: math.comb(2 * k, k) // (k + 1)
    return WgAsymptotics(
        exponent=slope,
        sign=signs.pop() if len(signs) == 1 else 0,
        constant=const,
        expected_exponent=-expo,
        expected_sign=(-1) ** c.length,
        catalan_product=math.prod(cat(x) for x in c.cycle_type),
        shifted_catalan_product=math.prod(cat(x - 1) for x in c.cycle_type),
    )
