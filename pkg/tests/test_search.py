import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.pipeline import EncodedDatabase, InterCodeTables, PlainIVFPQ, build_ivf, pqkmeans
from artifact.search import (SearchParams, SearchResult, SubDistanceTable, adc_score, ivf_search, recall_at_k,
                             search_many)


def test_adc_example():
    table = SubDistanceTable(np.tile(np.arange(4.0), (3, 1)))
    assert adc_score((0, 1, 2), table) == 3.0


def test_recall():
    truth = [np.arange(10)]
    assert recall_at_k([np.arange(10)], truth) == 1.0
    assert recall_at_k([np.arange(10, 20)], truth) == 0.0
    assert recall_at_k([SearchResult(np.arange(5), np.zeros(5))], truth) == 0.5
    assert recall_at_k([], truth) == 0.0
    with pytest.raises(ValueError):
        recall_at_k([np.arange(10)], [np.arange(3)])


def test_params():
    with pytest.raises(ValueError):
        SearchParams(l=0)
    with pytest.raises(ValueError):
        SearchParams(l_c=0)


def fixture_index(seed=0, n=200, n_s=3, n_c=6, n_i=8, n_nb=2):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n_s, n_c, 2))
    tables = InterCodeTables(((pts[:, :, None] - pts[:, None]) ** 2).sum(-1))
    db = EncodedDatabase(rng.integers(0, n_c, (n, n_s)))
    centers, _ = pqkmeans(db, tables, n_i, seed=seed)
    return rng, pts, db, build_ivf(db, centers, tables, n_nb)


def test_exhaustive_probe_is_a_full_scan():
    rng, pts, db, index = fixture_index()
    table = SubDistanceTable(rng.uniform(0, 5, (3, 6)))
    res = ivf_search(table, index, db, SearchParams(l=10, l_c=index.n_centers))
    scores = sum(table.values[s][db.codes[:, s]] for s in range(3))
    assert np.array_equal(res.ids, np.argsort(scores, kind="stable")[:10])
    assert np.allclose(res.scores, np.sort(scores)[:10])
    assert res.pairs()[0] == (int(res.ids[0]), float(res.scores[0]))
    with pytest.raises(ValueError):
        ivf_search(table, index, db, SearchParams(l_c=index.n_centers + 1))


def test_short_result_flag():
    rng, pts, db, index = fixture_index(n=20, n_i=4, n_nb=1)
    res = ivf_search(SubDistanceTable(rng.uniform(size=(3, 6))), index, db, SearchParams(l=50, l_c=1))
    assert res.short and len(res.ids) < 50


@given(st.integers(0, 2**32 - 1))
def test_recall_grows_with_probes(seed):
    rng, pts, db, index = fixture_index(seed % 1000)
    tables = [SubDistanceTable(rng.uniform(0, 5, (3, 6))) for _ in range(5)]
    truth = [np.argsort(sum(t.values[s][db.codes[:, s]] for s in range(3)), kind="stable")[:10] for t in tables]
    recalls = [recall_at_k(search_many(tables, index, db, SearchParams(10, l_c)), truth)
               for l_c in range(1, index.n_centers + 1)]
    assert all(b >= a for a, b in zip(recalls, recalls[1:]))
    assert recalls[-1] == 1.0


def test_inner_product_is_a_sign_flip():
    rng, pts, db, index = fixture_index()
    values = rng.normal(size=(3, 6))
    p = SearchParams(l=10, l_c=index.n_centers)
    as_ip = ivf_search(SubDistanceTable(values, "inner_product"), index, db, p)
    as_dist = ivf_search(SubDistanceTable(-values), index, db, p)
    assert np.array_equal(as_ip.ids, as_dist.ids)
    assert np.allclose(as_ip.scores, -as_dist.scores)
    assert np.all(np.diff(as_ip.scores) <= 0)


def test_parallel_matches_sequential():
    rng, pts, db, index = fixture_index()
    tables = [SubDistanceTable(rng.uniform(size=(3, 6))) for _ in range(8)]
    p = SearchParams(5, 3)
    a = search_many(tables, index, db, p)
    b = search_many(tables, index, db, p, workers=4)
    assert all(np.array_equal(x.ids, y.ids) for x, y in zip(a, b))


def test_reference_search_exhaustive_matches_brute_force():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(300, 8))
    ref = PlainIVFPQ(4, 8, n_rs=300, n_i=6, n_nb=1, seed=2).fit(data, data)
    q = rng.normal(size=(5, 8))
    got = ref.search(q, l=10, l_c=6)
    tables = ref.tables_for(q)
    for res, t in zip(got, tables):
        scores = sum(t[s][ref.codes[:, s]] for s in range(4))
        assert np.array_equal(res, np.argsort(scores, kind="stable")[:10])
