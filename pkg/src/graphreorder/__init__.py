"""Graph vertex reordering for cache locality.

Lorder and its comparison schemes produce a :class:`Permutation` for a
:class:`CsrGraph`; the kernels and the cache model measure what a relabeling
does to property-array locality.
"""

from ._accel import get_backend, set_backend, use_backend
from .baselines import (
    SCHEMES,
    DbgParams,
    GorderParams,
    dbg_order,
    evaluate_f,
    gorder_greedy,
    gorder_score,
    identity_order,
    norder,
    random_order,
    reorder,
    sort_order,
    sorder,
)
from .cachesim import CacheConfig, CacheSimReport, ReuseHistogram, compare_orderings, reuse_histogram, simulate_lru
from .graph import (
    CsrGraph,
    DegreeBasis,
    EdgeList,
    HotnessProfile,
    Permutation,
    apply_permutation,
    approximate_diameter,
    average_degree,
    build_csr,
    classify_hotness,
    from_edges,
    load_edge_list,
)
from .kernels import (
    AccessTrace,
    Kernel,
    KernelResult,
    betweenness_centrality,
    bfs,
    cc_label,
    cc_sv,
    pagerank,
    run_kernel,
    run_traced,
    sssp_bellman_ford,
)
from .lorder import (
    KappaPolicy,
    LocalityRecord,
    LocalityTable,
    LorderConfig,
    assign_indices,
    form_localities,
    kappa_from_diameter,
    lorder,
    lorder_detailed,
    sort_localities,
)

__version__ = "0.1.0"
