from fractions import Fraction

import numpy as np
import pytest

from condlab import DiscreteDistribution, IndexSet, OracleSession
from condlab.errors import UsageError
from condlab.exhaustive import BranchingRNG, enumerate_outcomes
from condlab.instances import gap_hamming_instance, geometric_hard
from condlab.oracles import ORACLE_KINDS, QueryLedger, exact_response_distribution, parse_oracle_kind
from condlab.responses import FAILURE, Mass, Sample, SampleEval, SamplePr, is_failure


def test_response_types():
    r = SampleEval(3, Fraction(1, 8), Fraction(1, 3))
    assert r.set_mass == Fraction(3, 8)
    assert is_failure(FAILURE) and not is_failure(Sample(1))


def test_samp_on_geometric_mass_at_one():
    s = OracleSession(geometric_hard(1 << 8, 5), np.random.default_rng(0))
    draws = [s.samp().j for _ in range(4000)]
    assert abs(draws.count(1) / 4000 - 0.5) < 0.04
    assert s.ledger.samp == 4000 and s.ledger.total == 4000


def test_point_mass_samp():
    s = OracleSession(DiscreteDistribution.point_mass(5, 3), 1)
    assert {s.samp() for _ in range(20)} == {Sample(3)}


def test_cond_family_examples():
    D = geometric_hard(8, 2)
    s = OracleSession(D, 2)
    assert s.cond_pr([2]) == SamplePr(2, Fraction(1, 4))
    assert s.cond_eval([3]) == SampleEval(3, Fraction(1, 8), Fraction(1))
    assert s.cond([5, 6]) is FAILURE and s.cond_pr([5]) is FAILURE and s.cond_eval([7, 8]) is FAILURE
    assert OracleSession(DiscreteDistribution.point_mass(4, 1)).cond_pr([1]) == SamplePr(1, Fraction(1))
    assert s.ledger.as_dict() == {"samp": 0, "cond": 1, "cond-pr": 2, "cond-eval": 2, "set-eval": 0}


def test_cond_eval_outcomes_on_geometric():
    law = exact_response_distribution(geometric_hard(8, 2), "cond-eval", IndexSet([2, 3]))
    assert law == {SampleEval(2, Fraction(1, 4), Fraction(2, 3)): Fraction(2, 3),
                   SampleEval(3, Fraction(1, 8), Fraction(1, 3)): Fraction(1, 3)}


def test_set_eval_examples():
    s = OracleSession(gap_hamming_instance("110", "011"))
    assert s.set_eval([2]) == Mass(Fraction(2, 4))
    assert s.set_eval([]) == Mass(0)
    assert s.set_eval(range(1, 4)) == Mass(1)


@pytest.mark.parametrize("kind", ["cond", "cond-pr", "cond-eval", "set-eval"])
def test_session_law_matches_exact_distribution(kind):
    D = DiscreteDistribution(6, {1: Fraction(1, 6), 2: Fraction(1, 2), 5: Fraction(1, 3)})
    for S in ([1, 2], [2, 5, 6], [3, 4], [1, 2, 3, 4, 5, 6]):
        law = enumerate_outcomes(lambda rng: OracleSession(D, rng).query(kind, S))
        assert law == exact_response_distribution(D, kind, IndexSet(S))
        assert sum(law.values()) == 1


def test_bounded_oracle():
    D = geometric_hard(8, 3)
    s = OracleSession(D, 3)
    assert s.bounded("set-eval", [1, 2], 2) == Mass(Fraction(3, 4))
    with pytest.raises(UsageError):
        s.bounded("cond", [1, 2, 3], 2)
    assert s.ledger.bounded_total() == 1 and s.ledger.set_eval == 0
    for _ in range(2):
        r = s.query("cond-eval@8", range(1, 9))
        assert r.cp == r.p == D[r.j]
    assert s.ledger.as_dict()["cond-eval@8"] == 2 and s.ledger.bounded_total(8) == 2


def test_bounded_with_k_equal_n_matches_unbounded():
    D = DiscreteDistribution(4, {1: Fraction(1, 4), 3: Fraction(3, 4)})
    S = [1, 2, 3]
    a = enumerate_outcomes(lambda rng: OracleSession(D, rng).bounded("cond-eval", S, 4))
    assert a == exact_response_distribution(D, "cond-eval", IndexSet(S))


def test_parse_oracle_kind():
    assert parse_oracle_kind("cond") == ("cond", None)
    assert parse_oracle_kind("cond-eval@16") == ("cond-eval", 16)
    for bad in ("condx", "cond@", "cond@0", "cond@k"):
        with pytest.raises(UsageError):
            parse_oracle_kind(bad)
    assert ORACLE_KINDS == ("samp", "cond", "cond-pr", "cond-eval", "set-eval")


def test_ledger_arithmetic():
    s = OracleSession(DiscreteDistribution.uniform(4), 0)
    before = s.ledger.snapshot()
    s.cond([1]); s.set_eval([1]); s.bounded("cond", [1], 1)
    diff = s.ledger - before
    assert isinstance(diff, QueryLedger) and diff.total == 3 and diff.count("cond") == 1


def test_branching_rng_records_path():
    rng = BranchingRNG([2, 1])
    assert [rng.uniform_below(3), rng.uniform_below(2), rng.uniform_below(5)] == [2, 1, 0]
    assert rng.path == [(2, 3), (1, 2), (0, 5)]
