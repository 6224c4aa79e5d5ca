"""Per-record differential privacy: mechanisms, local protocol, harness."""

from .core import (BudgetFunction, Dataset, DomainPartition, Record,
                   domain_count, domain_index, evaluate_budget, make_budget)
from .counting import (CountRun, exact_domain_counts, noisy_domain_counts,
                       prdp_count, select_and_aggregate, threshold, thresholds)
from .errors import (ConfigError, IncompatibleQueryError,
                     MechanismRequirementError, PrdpError)
from .framework import FrameworkRun, prdp_framework
from .local import (AnalyzerRun, LdpClippedSum, LdpCount, LdpExactStub,
                    LdpMechanism, LocalFrameworkRun, LocalResponse,
                    prldp_analyzer, prldp_count, prldp_framework,
                    prldp_randomizer, simulate_round1)
from .mechanisms import (DpDistinct, DpMax, DpMechanism, DpSum, ExactStub,
                         LaplaceCount, default_mechanism, make_mechanism,
                         naive_baseline)
from .noise import NoiseSource, derive_seed, tail_radius
from .sumext import SumRun, domain_sum_scale, prdp_sum_extension, sum_scales

__all__ = [
    "AnalyzerRun", "BudgetFunction", "ConfigError", "CountRun", "Dataset",
    "DomainPartition", "DpDistinct", "DpMax", "DpMechanism", "DpSum",
    "ExactStub", "FrameworkRun", "IncompatibleQueryError", "LaplaceCount",
    "LdpClippedSum", "LdpCount", "LdpExactStub", "LdpMechanism",
    "LocalFrameworkRun", "LocalResponse", "MechanismRequirementError",
    "NoiseSource", "PrdpError", "Record", "SumRun", "default_mechanism",
    "derive_seed", "domain_count", "domain_index", "domain_sum_scale",
    "evaluate_budget", "exact_domain_counts", "make_budget", "make_mechanism",
    "naive_baseline", "noisy_domain_counts", "prdp_count", "prdp_framework",
    "prdp_sum_extension", "prldp_analyzer", "prldp_count", "prldp_framework",
    "prldp_randomizer", "select_and_aggregate", "simulate_round1",
    "sum_scales", "tail_radius", "threshold", "thresholds",
]
