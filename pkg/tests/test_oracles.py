import itertools

import numpy as np
import pytest

from advprog.oracles import (
    exhaustive_attack, fd_gradient, grid_project_oracle, make_tiny_instance, selection_loss,
    sort_simplex_oracle,
)


def test_sort_oracle_examples():
    np.testing.assert_allclose(sort_simplex_oracle([1.2, 0.3, -0.5]), [0.95, 0.05, 0.0])
    np.testing.assert_allclose(sort_simplex_oracle([0.25] * 4), [0.25] * 4)


def _brute_grid(v, k, res=0.05):
    levels = np.arange(0, 1 + 1e-9, res)
    best = None
    for x in itertools.product(levels, repeat=len(v)):
        if sum(x) <= k + 1e-9:
            d = float(np.sum((np.array(x) - v) ** 2))
            if best is None or d < best[0] - 1e-15:
                best = (d, np.array(x))
    return best


def test_grid_oracle_examples():
    np.testing.assert_allclose(grid_project_oracle([0.5, 0.2], 2), [0.5, 0.2])
    np.testing.assert_allclose(grid_project_oracle([2.0, -0.3], 1), [1.0, 0.0])
    np.testing.assert_allclose(grid_project_oracle([1.2, 0.3, -0.5], 1, simplex=True), [0.95, 0.05, 0.0])
    with pytest.raises(ValueError):
        grid_project_oracle(np.zeros(5), 1)


def test_grid_oracle_minimizes_distance_on_grid():
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = rng.uniform(-0.3, 1.3, 3)
        k = float(rng.uniform(0.5, 2.5))
        x = grid_project_oracle(v, k)
        d = float(np.sum((x - v) ** 2))
        # the oracle's grid is finer than the brute-force grid, so it can only be closer
        assert d <= _brute_grid(v, k)[0] + 1e-12
        assert x.sum() <= k + 1e-9


def test_fd_gradient():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(fd_gradient(lambda y: 0.5 * y @ A @ y, x), A @ x, atol=1e-9)
    assert np.all(fd_gradient(lambda y: 3.0, x) == 0)
    with pytest.raises(ValueError):
        fd_gradient(lambda y: 0.0, x, h=1e-2)


def test_tiny_instances_are_small(small_pipeline):
    p = small_pipeline
    for seed in range(20):
        inst = make_tiny_instance(seed, p.model, p.vocab)
        assert len(p.vocab.encode_source(inst.source)) <= 8
        assert 1 <= len(inst.sitemap) <= 3 and inst.k in (1, 2)
        assert all(s.mask.sum() <= 8 for s in inst.sitemap)
        assert inst.search_space() <= 1 + 3 * 8 + 3 * 64


def test_exhaustive_k0_and_order_invariance(small_pipeline):
    p = small_pipeline
    inst = make_tiny_instance(3, p.model, p.vocab, k=0)
    loss, sel = exhaustive_attack(inst)
    assert sel == [] and loss == selection_loss(inst, [])
    for seed in range(4):
        inst = make_tiny_instance(seed, p.model, p.vocab)
        assert exhaustive_attack(inst) == exhaustive_attack(inst, order_seed=seed + 11)


def test_exhaustive_single_site_two_candidates(small_pipeline):
    p = small_pipeline
    inst = make_tiny_instance(5, p.model, p.vocab, max_sites=1, max_candidates=2, k=1)
    loss, _ = exhaustive_attack(inst)
    cands = np.flatnonzero(inst.sitemap[0].mask)
    values = [selection_loss(inst, [])] + [selection_loss(inst, [(0, int(t))]) for t in cands]
    assert loss == min(values)
