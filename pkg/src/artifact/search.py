"""Query side: encrypted query-to-codebook table, then plaintext ADC over the IVF index."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import metric as metric_mod
from .pipeline.types import EncodedDatabase, IVFIndex


@dataclass
class SubDistanceTable:
    values: np.ndarray   # (n_s, N_C)
    metric: str = metric_mod.EUCLIDEAN

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("distance table must be (n_s, N_C)")
        metric_mod.check(self.metric)

    @property
    def cost(self) -> np.ndarray:
        return metric_mod.to_cost(self.values, self.metric)


@dataclass(frozen=True)
class SearchParams:
    l: int = 10
    l_c: int = 3

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("result length l must be >= 1")
        if self.l_c < 1:
            raise ValueError("probe count l_c must be >= 1")


@dataclass
class SearchResult:
    ids: np.ndarray
    scores: np.ndarray
    short: bool = False   # fewer than l candidates were available

    def pairs(self) -> list:
        return [(int(i), float(s)) for i, s in zip(self.ids, self.scores)]


def adc_score(code, table: SubDistanceTable) -> float:
    """sum_s table[s, code_s] (raw metric value, not the cost)."""
    return float(kernels.adc_scores(np.asarray(code).reshape(1, -1), table.values)[0])


def ivf_search(table: SubDistanceTable, index: IVFIndex, encoded: EncodedDatabase,
               params: SearchParams) -> SearchResult:
    if params.l_c > index.n_centers:
        raise ValueError(f"l_c={params.l_c} exceeds N_I={index.n_centers}")
    cost = table.cost
    center_cost = kernels.adc_scores(index.centers, cost)
    probe = np.argsort(center_cost, kind="stable")[:params.l_c]
    cand = np.unique(np.concatenate([index.posting_lists[c] for c in probe]))
    cand_cost = kernels.adc_scores(encoded.codes[cand], cost)
    order = np.argsort(cand_cost, kind="stable")[:params.l]
    top = cand[order]
    scores = cand_cost[order]
    if table.metric == metric_mod.INNER_PRODUCT:
        scores = -scores
    return SearchResult(encoded.ids[top], scores, short=len(top) < params.l)


def search_many(tables: list, index: IVFIndex, encoded: EncodedDatabase, params: SearchParams,
                workers: int = 1) -> list:
    """ADC stage for a batch of tables; sequential unless ``workers`` > 1."""
    if workers <= 1:
        return [ivf_search(t, index, encoded, params) for t in tables]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda t: ivf_search(t, index, encoded, params), tables))


def recall_at_k(results, ground_truth, k: int = 10) -> float:
    """Mean |top-k results intersect top-k truth| / k."""
    if len(results) == 0:
        return 0.0
    total = 0.0
    for res, truth in zip(results, ground_truth):
        ids = res.ids if isinstance(res, SearchResult) else res
        truth = np.asarray(truth)
        if len(truth) < k:
            raise ValueError(f"ground truth has {len(truth)} < k={k} entries")
        total += len(set(np.asarray(ids)[:k].tolist()) & set(truth[:k].tolist())) / k
    return total / len(results)
