"""condlab: exact discrete distributions, conditional-sampling oracles and the
algorithms, simulations and protocols built on them."""
from .dist import (
    DiscreteDistribution,
    IndexSet,
    load_distribution,
    mass,
    parse_distribution,
    sample_conditional,
    save_distribution,
    support_size,
    total_variation,
)
from .errors import CondlabError, DecodeError, DistributionFormatError, DomainError, EncodingError, UsageError
from .oracles import OracleSession, QueryLedger
from .responses import FAILURE, Mass, Sample, SampleEval, SamplePr, is_failure
from .estimators import estimate_support_constant, estimate_support_eps

__version__ = "0.1.0"
