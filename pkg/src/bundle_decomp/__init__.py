"""Regular-pair certification, randomized bundle vertex partitions, and
bipartite packing experiments on near-degree-regular graphs."""

from .graphs import (
    BipartitePair,
    DegreeProfile,
    Graph,
    build_graph,
    degree_profile,
    density,
    induced_pair,
    parse_bipartite,
    parse_edge_list,
)
from .randomness import (
    BalancedBipartition,
    RngStream,
    TailBound,
    bernoulli_subset,
    chernoff_bound,
    random_balanced_bipartition,
)
from .regularity import (
    BundleCertificate,
    BundleCheck,
    RegularityVerdict,
    brute_force_regular,
    check_bundle,
    codegree_certify,
    degree_outliers,
    extract_bundle,
    slice_pair,
)

__version__ = "0.1.0"

__all__ = [
    "BipartitePair",
    "DegreeProfile",
    "Graph",
    "build_graph",
    "degree_profile",
    "density",
    "induced_pair",
    "parse_bipartite",
    "parse_edge_list",
    "BalancedBipartition",
    "RngStream",
    "TailBound",
    "bernoulli_subset",
    "chernoff_bound",
    "random_balanced_bipartition",
    "BundleCertificate",
    "BundleCheck",
    "RegularityVerdict",
    "brute_force_regular",
    "check_bundle",
    "codegree_certify",
    "degree_outliers",
    "extract_bundle",
    "slice_pair",
    "__version__",
]
