"""Oracle answer shapes."""
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Sample:
    j: int


@dataclass(frozen=True)
class SamplePr:
    j: int
    p: Fraction


@dataclass(frozen=True)
class SampleEval:
    """A COND-EVAL answer: element, its mass, and its mass conditioned on the set."""

    j: int
    p: Fraction
    cp: Fraction

    @property
    def set_mass(self):
        """Mass of the queried set, recovered as ``p / cp``."""
        return self.p / self.cp


@dataclass(frozen=True)
class Mass:
    q: Fraction


@dataclass(frozen=True)
class Failure:
    """Returned by the COND family when the queried set has zero mass."""

    def __repr__(self):
        return "FAILURE"


FAILURE = Failure()


def is_failure(response):
    return isinstance(response, Failure)
