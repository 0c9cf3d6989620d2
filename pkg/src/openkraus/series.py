"""Closed-form Kraus series for systems with ``[H, L] = alpha L + c``.

For both cases the order-``m`` block of the channel is

    sum_k K_{m,k} (x) conj(K_{m,k}) = e^{tH} h(t) (f(t) L)^m / m!

with ``h``/``f`` given by :class:`ScalarSchedule`.  Every Kraus operator
factors as ``a(t) * expm(-i t V_H / hbar) * prod_j A_{k_j}`` where
``A_n = L_n / ||L_n||`` is a contraction and ``a(t)`` is a real weight.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import linalg
from .lindblad import UnsupportedSystemError, build_superoperators
from .linalg import dagger

DEFAULT_TERM_CAP = 10**6


class BoundNotApplicable(ValueError):
    """The geometric tail estimate needs ``M + 1 > f(t) ||L||_HS``."""


@dataclass(frozen=True)
class ScalarSchedule:
    label: str
    alpha: float = 0.0
    c: float = 0.0

    def g(self, t):
        """``-(e^{-alpha t} + alpha t - 1) / alpha^2``; ``-t^2/2`` when alpha is zero."""
        a = self.alpha
        x = a * t
        if x < 1e-3:
            # alternating series -t^2 (1/2 - x/6 + x^2/24 - ...), converged to roundoff
            s, term = 0.0, 0.5
            for k in range(3, 12):
                s += term
                term *= -x / k
            return -t * t * s
        return -(math.expm1(-x) + x) / (a * a)

    def f(self, t):
        if self.label == "CaseI" or self.alpha == 0:
            return float(t)
        return -math.expm1(-self.alpha * t) / self.alpha

    def h(self, t):
        if self.label == "CaseI" or self.alpha == 0:
            return math.exp(-self.c * t * t / 2.0)
        return math.exp(self.c * self.g(t))


def scalar_schedule(cls):
    if not cls.supported:
        raise UnsupportedSystemError(cls)
    return ScalarSchedule(cls.label, cls.alpha, cls.c)


@dataclass(frozen=True)
class KrausTerm:
    """One summand ``K_{m,k}`` of the series, possibly standing for a group of orderings."""

    m: int
    k: tuple
    base: np.ndarray
    rate_norm: float
    schedule: ScalarSchedule
    multiplicity: int = 1

    def amplitude(self, t):
        """Scalar ``a(t)`` with ``K_{m,k}(t) = a(t) expm(-i t V_H) base``."""
        sch = self.schedule
        if self.m == 0:
            return math.sqrt(sch.h(t))
        f, h = sch.f(t), sch.h(t)
        if f <= 0 or h <= 0:
            return 0.0
        log_a2 = math.log(h) + self.m * math.log(f) - math.lgamma(self.m + 1)
        return math.exp(0.5 * log_a2) * self.rate_norm

    def weight(self, t):
        """Recombination weight; includes the multiplicity of grouped orderings."""
        return math.sqrt(self.multiplicity) * self.amplitude(t)


def _rescaled(sys):
    out = []
    for L, g in zip(sys.lindblads, sys.gammas):
        nrm = linalg.op_norm(L)
        if nrm == 0 or g == 0:
            out.append((np.zeros_like(L), 0.0))
        else:
            out.append((L / nrm, math.sqrt(g) * nrm))
    return out


def superoperators_commute(sys, tol=1e-10):
    sups = [linalg.conj_kron(L, "product") for L in sys.lindblads]
    for i, a in enumerate(sups):
        for b in sups[i + 1:]:
            scale = max(linalg.op_norm(a) * linalg.op_norm(b), 1.0)
            if np.max(np.abs(linalg.commutator(a, b)), initial=0.0) > tol * scale:
                return False
    return True


def reduce_commuting(sys, M, check=True):
    """Group index vectors of each order ``m <= M`` by occupation counts.

    Returns ``[(k, multiplicity), ...]`` in lexicographic order of ``(m, k)``
    where ``k`` is the sorted representative.
    """
    if check and not superoperators_commute(sys):
        raise ValueError("Lindblad superoperators do not commute; grouping would change the channel")
    n = sys.n_lindblads
    out = []
    for m in range(M + 1):
        for k in itertools.combinations_with_replacement(range(n), m):
            counts = [k.count(i) for i in range(n)]
            mult = math.factorial(m)
            for c in counts:
                mult //= math.factorial(c)
            out.append((k, mult))
    return out


def _index_vectors(n, M, grouped):
    if grouped:
        return [(k, mult) for k, mult in grouped]
    out = []
    for m in range(M + 1):
        out.extend((k, 1) for k in itertools.product(range(n), repeat=m))
    return out


def kraus_terms(sys, cls, M, grouped=False, cap=DEFAULT_TERM_CAP):
    """All series terms up to order ``M`` in lexicographic ``(m, k)`` order."""
    sch = scalar_schedule(cls)
    n = sys.n_lindblads
    if M < 0:
        raise ValueError("M must be non-negative")
    if n == 0:
        M = 0
    count = sum(math.comb(m + n - 1, m) if grouped else n**m for m in range(M + 1))
    if count > cap:
        raise ValueError(f"series up to order {M} has {count} terms, above the cap {cap}")
    scaled = _rescaled(sys)
    eye = np.eye(sys.dim, dtype=complex)
    groups = reduce_commuting(sys, M) if grouped else None
    terms = []
    for k, mult in _index_vectors(n, M, groups):
        base = reduce(np.matmul, (scaled[j][0] for j in k), eye)
        rate_norm = math.prod(scaled[j][1] for j in k)
        base.setflags(write=False)
        terms.append(KrausTerm(len(k), tuple(k), base, rate_norm, sch, mult))
    return terms


def hamiltonian_propagator(sys, t):
    """``expm(-i t V_H / hbar)``; a contraction for any valid system."""
    return linalg.expm(-1j * t * sys.effective_hamiltonian() / sys.hbar)


def kraus_operator(sys, cls, m, k, t):
    """Matrix of ``K_{m,k}(t)`` for one ordered index vector (0-based indices)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    k = tuple(int(j) for j in k)
    if len(k) != m:
        raise ValueError(f"index vector {k} does not have length m={m}")
    if any(j < 0 or j >= sys.n_lindblads for j in k):
        raise ValueError(f"index vector {k} out of range for {sys.n_lindblads} Lindblad operators")
    sch = scalar_schedule(cls)
    scaled = _rescaled(sys)
    base = reduce(np.matmul, (scaled[j][0] for j in k), np.eye(sys.dim, dtype=complex))
    term = KrausTerm(m, k, base, math.prod(scaled[j][1] for j in k), sch)
    return term.amplitude(t) * hamiltonian_propagator(sys, t) @ base


def kraus_operators(sys, cls, t, M, grouped=False, cap=DEFAULT_TERM_CAP):
    """``[(term, K)]`` for every term up to order ``M``; ``K`` excludes the multiplicity."""
    u = hamiltonian_propagator(sys, t)
    return [(term, term.amplitude(t) * (u @ term.base)) for term in kraus_terms(sys, cls, M, grouped, cap)]


def _map_ordered(fn, items, jobs):
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        indexed = list(pool.map(lambda ix: (ix[0], fn(ix[1])), enumerate(items)))
    indexed.sort(key=lambda p: p[0])
    return [v for _, v in indexed]


def _ordered_sum(parts, shape):
    acc = np.zeros(shape, dtype=complex)
    for p in parts:
        acc += p
    return acc


def evaluate_series(sys, cls, rho0, t, M, grouped=False, jobs=1, cap=DEFAULT_TERM_CAP):
    """Truncated series ``rho_M(t) = sum_{m<=M} sum_k K rho0 K^dagger``.

    Term contributions may be computed concurrently; they are always summed in
    lexicographic ``(m, k)`` order so the result does not depend on ``jobs``.
    """
    rho0 = linalg.validate_density_matrix(rho0)
    if t < 0:
        raise ValueError("t must be non-negative")
    terms = kraus_terms(sys, cls, M, grouped, cap)
    u = hamiltonian_propagator(sys, t)

    def contribution(term):
        w2 = term.multiplicity * term.amplitude(t) ** 2
        b = term.base
        return w2 * (b @ rho0 @ dagger(b))

    inner = _ordered_sum(_map_ordered(contribution, terms, jobs), rho0.shape)
    rho = u @ inner @ dagger(u)
    return (rho + dagger(rho)) / 2


def series_channel(sys, cls, t, M, grouped=False, cap=DEFAULT_TERM_CAP):
    """Superoperator ``sum K (x) conj(K)`` of the truncated series."""
    d = sys.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for term, K in kraus_operators(sys, cls, t, M, grouped, cap):
        out += term.multiplicity * np.kron(K, K.conj())
    return out


def completeness_defect(sys, cls, t, M, grouped=False):
    """``sum K^dagger K - I`` for the truncated series."""
    acc = np.zeros((sys.dim, sys.dim), dtype=complex)
    for term, K in kraus_operators(sys, cls, t, M, grouped):
        acc += term.multiplicity * (dagger(K) @ K)
    return acc - np.eye(sys.dim)


def superoperator_hs_norm(sys):
    return linalg.hs_norm(build_superoperators(sys).l_super)


def hamiltonian_superoperator_norm(sys, cls, t):
    """``||e^{t H}||``: 1 for a normal ``V_H`` of a classified system, else computed."""
    if cls.supported and linalg.is_normal(sys.effective_hamiltonian()):
        return 1.0
    pair = build_superoperators(sys)
    return linalg.op_norm(linalg.expm(t * pair.h_super))


def tail_bound(x, M, prefactor=1.0):
    """``prefactor * (1 - x/(M+1))^{-1} * x^{M+1} / (M+1)!`` for ``x = f(t) ||L||_HS``."""
    if x == 0:
        return 0.0
    if M + 1 <= x:
        raise BoundNotApplicable(f"M={M} too small: need M + 1 > f(t)||L|| = {x:.6g}")
    eta = 1.0 / (1.0 - x / (M + 1))
    log_tail = (M + 1) * math.log(x) - math.lgamma(M + 2)
    return prefactor * eta * math.exp(log_tail)


def error_bound(sys, cls, t, M):
    """Upper bound on ``||rho(t) - rho_M(t)||_HS`` for a unit-norm initial state."""
    sch = scalar_schedule(cls)
    x = sch.f(t) * superoperator_hs_norm(sys)
    if x == 0:
        return 0.0
    pref = sch.h(t) * hamiltonian_superoperator_norm(sys, cls, t)
    return tail_bound(x, M, pref)


@dataclass(frozen=True)
class TruncationOrder:
    order: int
    bound: float
    x: float
    analytic: int | None  # order from the closed-form sufficient pair, when defined


def analytic_order(x, prefactor, eps, delta=0.5):
    """Smallest integer ``M`` meeting both closed-form sufficient conditions (needs ``x > 1``)."""
    if x <= 1:
        return None
    m1 = math.e * x ** (1 + delta)
    m2 = math.log(prefactor / eps) / (delta * math.log(x)) if prefactor > eps else 0.0
    return max(0, math.ceil(max(m1, m2)))


def order_for_tolerance(x, eps, prefactor=1.0, delta=0.5, cap=1000):
    """Scan ``M = 0, 1, ...`` until the tail bound drops to ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    for M in range(cap + 1):
        try:
            b = tail_bound(x, M, prefactor)
        except BoundNotApplicable:
            continue
        if b <= eps:
            return TruncationOrder(M, b, x, analytic_order(x, prefactor, eps, delta))
    raise ValueError(f"no order up to {cap} reaches tolerance {eps}")


def truncation_order(sys, cls, t, eps, delta=0.5, cap=1000):
    sch = scalar_schedule(cls)
    x = sch.f(t) * superoperator_hs_norm(sys)
    pref = sch.h(t) * hamiltonian_superoperator_norm(sys, cls, t)
    return order_for_tolerance(x, eps, pref, delta, cap)


def generalized_hyperbolic(n, m, theta, x):
    """``sum_k theta^k x^(n k + m) / (n k + m)!`` via the roots-of-unity closed form."""
    if n < 1 or not 0 <= m < n:
        raise ValueError("need n >= 1 and 0 <= m < n")
    theta = complex(theta)
    if theta == 0:
        return _hyperbolic_series(n, m, theta, x)
    root = theta ** (1.0 / n)
    w = np.exp(2j * np.pi * np.arange(n) / n)
    total = np.sum(w ** (-m) * np.exp(w * root * x))
    return complex(total / (n * root**m))


def _hyperbolic_series(n, m, theta, x):
    # only the theta = 0 case reaches here: a single surviving monomial
    return complex(x) ** m / math.factorial(m)
