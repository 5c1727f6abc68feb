import itertools
from fractions import Fraction

import numpy as np
import pytest

from condlab import DiscreteDistribution, OracleSession
from condlab import testers
from condlab.errors import DomainError, UsageError
from condlab.exhaustive import enumerate_outcomes
from condlab.hashing import FourWiseSignHash
from condlab.instances import intro_perturbed_uniform
from condlab.testers import Verdict


def reject_probability(test, *dists, **kw):
    def run(rng):
        sessions = [OracleSession(D, rng) for D in dists]
        return test(*sessions, rng=rng, **kw)
    return enumerate_outcomes(run).get(Verdict.REJECT, Fraction(0))


def test_equivalence_exact_reject_probabilities():
    n = 6
    U = DiscreteDistribution.uniform(n)
    # One random half-set catches U vs U' iff it holds exactly one of the two
    # moved elements (probability 1/2); two independent sets give 3/4.
    assert reject_probability(testers.test_equivalence, U, intro_perturbed_uniform(n, 2, 5)) == Fraction(3, 4)
    P1, P2 = DiscreteDistribution.point_mass(n, 1), DiscreteDistribution.point_mass(n, 4)
    assert reject_probability(testers.test_equivalence, P1, P2) == Fraction(3, 4)
    assert reject_probability(testers.test_equivalence, U, U) == 0
    Q1, Q3 = DiscreteDistribution.point_mass(3, 1), DiscreteDistribution.point_mass(3, 3)
    assert reject_probability(testers.test_equivalence, Q1, Q3, repetitions=2) == Fraction(15, 16)


def test_equivalence_query_count_and_domain_check():
    D = DiscreteDistribution.uniform(8)
    a, b = OracleSession(D, 0), OracleSession(D, 1)
    assert testers.test_equivalence(a, b) is Verdict.ACCEPT
    assert a.ledger.set_eval == b.ledger.set_eval == 2
    with pytest.raises(DomainError):
        testers.test_equivalence(a, OracleSession(DiscreteDistribution.uniform(9)))
    assert str(Verdict.REJECT) == "Reject"


def test_grained_exact_probabilities():
    n, m = 5, 4
    grained = DiscreteDistribution(n, {1: Fraction(1, 4), 2: Fraction(1, 2), 4: Fraction(1, 4)})
    assert reject_probability(testers.test_grained, grained, m=m) == 0
    assert reject_probability(testers.test_grained, DiscreteDistribution.uniform(n), m=n) == 0
    perturbed = DiscreteDistribution(n, {1: Fraction(1, 8), 2: Fraction(1, 2), 4: Fraction(1, 4), 5: Fraction(1, 8)})
    assert reject_probability(testers.test_grained, perturbed, m=m) == Fraction(3, 4)
    with pytest.raises(UsageError):
        testers.test_grained(OracleSession(grained), 0)


def test_l2_repetitions():
    assert testers.l2_repetitions(0.1) == 400
    assert testers.l2_repetitions(0.25) == 64
    assert testers.l2_repetitions(Fraction(1, 3)) == 36
    with pytest.raises(UsageError):
        testers.l2_repetitions(0)


def brute_moments(D, w):
    """Mean and variance of (sum_j s(j) D(j))^2 over an explicitly listed family."""
    xs = np.arange(D.n)
    masses = [D[j] for j in range(1, D.n + 1)]
    values = []
    for coeffs in itertools.product(range(1 << w), repeat=4):
        signs = FourWiseSignHash(w, coeffs)(xs)
        values.append(sum((int(s) * p for s, p in zip(signs, masses)), Fraction(0)) ** 2)
    mean = sum(values, Fraction(0)) / len(values)
    return mean, sum(((v - mean) ** 2 for v in values), Fraction(0)) / len(values)


def test_family_moments_against_brute_force():
    D = DiscreteDistribution(3, {1: Fraction(1, 2), 2: Fraction(1, 3), 3: Fraction(1, 6)})
    assert testers.l2_family_moments(D, w=2) == brute_moments(D, 2)


def test_family_moments_closed_forms():
    U8 = DiscreteDistribution.uniform(8)
    E, V = testers.l2_family_moments(U8, w=3)
    assert E == Fraction(1, 8)
    # 2 * sum_{i != j} D(i)^2 D(j)^2 = 2 * 56 / 8^4 = 7/256.
    assert V == Fraction(7, 256)
    P = DiscreteDistribution.point_mass(8, 3)
    assert testers.l2_family_moments(P, w=3) == (1, 0)
    with pytest.raises(UsageError):
        testers.l2_family_moments(DiscreteDistribution.uniform(9), w=3)


def test_l2_point_mass_and_query_counts():
    P = DiscreteDistribution.point_mass(32, 7)
    s = OracleSession(P, 0)
    assert testers.estimate_l2_squared(s, 0.5) == 1
    assert s.ledger.set_eval == 2 * 16
    s = OracleSession(P, 0)
    testers.estimate_l2_squared(s, 0.5, optimize_complement=True)
    assert s.ledger.set_eval == 16


def test_l2_uniform_and_two_point_accuracy():
    rng = np.random.default_rng(11)
    for D, truth in ((DiscreteDistribution.uniform(64), Fraction(1, 64)),
                     (DiscreteDistribution(64, {3: Fraction(1, 2), 40: Fraction(1, 2)}), Fraction(1, 2))):
        assert D.squared_l2() == truth
        good = sum(abs(testers.estimate_l2_squared(OracleSession(D, rng), 0.1, rng) - truth) <= truth / 10
                   for _ in range(40))
        assert good >= 28


def test_sign_split_partitions_domain():
    h = FourWiseSignHash(4, [3, 1, 4, 1])
    plus, minus = testers.sign_split(h, 13)
    assert sorted(list(plus) + list(minus)) == list(range(1, 14))
    assert all(h(j - 1) == 1 for j in plus) and all(h(j - 1) == -1 for j in minus)
