"""Privacy-preserving product-quantised nearest-neighbour search.

Subpackages:

* ``artifact.he``: slot-vector HE interface, an exact simulator backend and a toy CKKS backend
* ``artifact.packing``: subspace division and slot layouts
* ``artifact.secdist``: rotation-sum distance kernels
* ``artifact.pipeline``: codebook training, encoding and IVF indexing
* ``artifact.search``: encrypted query tables and ADC over the index
* ``artifact.protocol``: client/server messages, transports and traffic ledger
* ``artifact.bench``: datasets, config, experiment runner and the ``artifact-bench`` CLI
"""

from .packing import PQLayout, layout_counts
from .search import SearchParams, recall_at_k

__version__ = "0.1.0"

__all__ = ["PQLayout", "SearchParams", "__version__", "layout_counts", "recall_at_k"]
