"""Exact outcome distributions of small randomized procedures.

A procedure that draws all of its randomness through ``rng.uniform_below``
(every sampler in this package does) can be run against a
:class:`BranchingRNG`.  :func:`enumerate_outcomes` re-executes the procedure
once per root-to-leaf path of its random choices, depth first, and adds up the
exact probability of each distinct return value.

This is exponential in the number of random choices and meant for checks on
tiny instances only.
"""
from fractions import Fraction

from .errors import UsageError


class BranchingRNG:
    """A random source that replays a prescribed prefix of choices and then picks 0."""

    def __init__(self, prefix):
        self._prefix = list(prefix)
        self.path = []      # (choice, bound) pairs actually consumed

    def uniform_below(self, bound):
        bound = int(bound)
        if bound <= 0:
            raise ValueError("bound must be positive")
        i = len(self.path)
        choice = self._prefix[i] if i < len(self._prefix) else 0
        self.path.append((choice, bound))
        return choice


def enumerate_outcomes(procedure, max_paths=1_000_000):
    """Exact distribution of ``procedure(rng)`` as ``{outcome: Fraction}``.

    ``procedure`` must be deterministic given its random choices and return a
    hashable value.
    """
    dist = {}
    prefix = []
    paths = 0
    while True:
        rng = BranchingRNG(prefix)
        outcome = procedure(rng)
        paths += 1
        if paths > max_paths:
            raise UsageError(f"more than {max_paths} random paths; instance too large to enumerate")
        prob = Fraction(1)
        for _, bound in rng.path:
            prob /= bound
        dist[outcome] = dist.get(outcome, Fraction(0)) + prob
        # Advance to the next path: bump the deepest choice that has room.
        path = rng.path
        while path and path[-1][0] + 1 >= path[-1][1]:
            path.pop()
        if not path:
            return dist
        prefix = [c for c, _ in path[:-1]] + [path[-1][0] + 1]
