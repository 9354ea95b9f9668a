"""Multiparty data exchange: rate region analysis, an idealized fluid
simulator, a hash-based interactive protocol with a genie-side collision
monitor, and secret key extraction on top of the exchanged data."""

from .core import (Alphabet, JointDistribution, SequenceMatrix,
                   empirical_type, enumerate_types, num_types, sample_iid)
from .errors import (AmbiguityError, InternalConsistencyError,
                     InvalidArgumentError, RdeError, ResourceLimitError)
from .ideal import Trajectory, dec_ideal, run_ideal
from .measures import (binary_entropy, canonical_partition,
                       enumerate_partitions, h_sigma, singleton_partition)
from .protocol import (ProtocolConfig, RunReport, max_rounds_bound,
                       run_exchange)
from .region import (co_constraints, finest_dominant_partition,
                     find_omniscience_subset, in_co_region, r_star, rco_lp,
                     rco_partition_max, region_slacks)
from .scenarios import Scenario, compile_scenario, get_scenario, load_scenario
from .secretkey import (KeyMaterial, extract_key, key_length,
                        leftover_hash_bound, run_sk, sk_capacity)

__version__ = "1.0.0"

__all__ = [
    "Alphabet", "JointDistribution", "SequenceMatrix", "empirical_type",
    "enumerate_types", "num_types", "sample_iid",
    "RdeError", "InvalidArgumentError", "ResourceLimitError",
    "AmbiguityError", "InternalConsistencyError",
    "Trajectory", "dec_ideal", "run_ideal",
    "binary_entropy", "canonical_partition", "enumerate_partitions",
    "h_sigma", "singleton_partition",
    "ProtocolConfig", "RunReport", "max_rounds_bound", "run_exchange",
    "co_constraints", "finest_dominant_partition", "find_omniscience_subset",
    "in_co_region", "r_star", "rco_lp", "rco_partition_max", "region_slacks",
    "Scenario", "compile_scenario", "get_scenario", "load_scenario",
    "KeyMaterial", "extract_key", "key_length", "leftover_hash_bound",
    "run_sk", "sk_capacity",
]
