"""Attack-core properties checked on tiny instances and random programs."""
import numpy as np
import pytest

from advprog.attack import AttackConfig, Objective, attack, build_layout, discretize, draw, relax, run_ao
from advprog.attack.smoothing import smooth_loss_grad
from advprog.minilang import CorpusConfig, extract_sites, generate_corpus, parse_source, restrict_sites
from advprog.oracles import make_tiny_instance


@pytest.fixture(scope="module")
def tiny(small_pipeline):
    p = small_pipeline
    return [make_tiny_instance(seed, p.model, p.vocab) for seed in range(100)]


def _run(p, inst, optimizer, **kw):
    cfg = AttackConfig(optimizer=optimizer, k=inst.k, seed=kw.pop("seed", 0), **kw)
    return attack(p.model, p.vocab, inst.source, cfg, target=inst.target, sitemap=inst.sitemap)


def test_relax_feasible_on_many_programs(vocab):
    for e in generate_corpus(CorpusConfig(count=1000, seed=13)):
        fn = parse_source(e.source)
        sites = extract_sites(fn, vocab)
        k = 1 + e.id % 4
        r = relax(fn, sites, vocab, k)
        assert np.all((r.zs >= 0) & (r.zs <= 1)) and r.zs.sum() <= k + 1e-8
        assert np.allclose(r.us.sum(axis=1), 1, atol=1e-8) and not r.us[~r.masks].any()
        z = r.z
        assert np.all(z[r.layout.slot_site < 0] == 0)
        for g in r.layout.groups:
            assert np.all(z[g] == z[g[0]])


def test_relax_caps_at_one(vocab):
    fn = parse_source("def f(a): return a")
    r = relax(fn, extract_sites(fn, vocab), vocab, 50)
    assert np.all(r.zs == 1)


def test_identity_tokens_give_zero_z_gradient(small_pipeline):
    p = small_pipeline
    e = p.test[0]
    fn = parse_source(e.source)
    full = extract_sites(fn, p.vocab)
    ren = restrict_sites(full, [s.id for s in full if s.kind.is_rename])
    lay = build_layout(fn, ren, p.vocab)
    us = np.zeros(lay.masks.shape)
    for s in range(lay.n_sites):
        us[s, lay.p_ids[lay.groups[s][0]]] = 1.0
    _, gz, _ = Objective(p.model, lay, p.model.encode_target(e.name_subtokens)).value_grad(
        np.random.default_rng(0).random(lay.n_sites), us)
    assert np.all(gz == 0.0)


def test_zero_inner_steps_is_identity(small_pipeline):
    p = small_pipeline
    fn = parse_source(p.test[1].source)
    r = relax(fn, extract_sites(fn, p.vocab), p.vocab, 2)
    obj = Objective(p.model, r.layout, p.model.encode_target(p.test[1].name_subtokens))
    st = run_ao(obj, r.zs, r.us, 2, AttackConfig(optimizer="ao", z_steps=0, u_steps=0))
    assert np.array_equal(st.zs, r.zs) and np.array_equal(st.us, r.us)


def test_smoothing_reproducible_bitwise(small_pipeline):
    p = small_pipeline
    fn = parse_source(p.test[2].source)
    r = relax(fn, extract_sites(fn, p.vocab), p.vocab, 2)
    obj = Objective(p.model, r.layout, p.model.encode_target(p.test[2].name_subtokens))
    a = smooth_loss_grad(obj, r.zs, r.us, 0.01, 1, np.random.default_rng(8))
    b = smooth_loss_grad(obj, r.zs, r.us, 0.01, 1, np.random.default_rng(8))
    assert a[0] == b[0] and np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])


def test_k_zero_discretization_is_empty(small_pipeline):
    p = small_pipeline
    fn = parse_source(p.test[3].source)
    r = relax(fn, extract_sites(fn, p.vocab), p.vocab, 1)
    assert discretize(r.layout, r.zs, r.us, 0, rng=np.random.default_rng(0))[0] == []


def test_best_of_draws_beats_single_draw_median(small_pipeline, tiny):
    p = small_pipeline
    wins = 0
    for seed, inst in enumerate(tiny):
        fn = inst.fn
        r = relax(fn, inst.sitemap, p.vocab, inst.k)
        obj = Objective(p.model, r.layout, p.model.encode_target(inst.target))
        rng = np.random.default_rng(seed)
        singles = [obj.ids_value(r.layout.vertex_ids(draw(r.layout, r.zs, r.us, inst.k, rng)))
                   for _ in range(25)]
        _, best = discretize(r.layout, r.zs, r.us, inst.k, "randomized", 10, np.random.default_rng(seed + 999),
                             obj.ids_value)
        wins += best <= np.median(singles)
    assert wins == len(tiny)


def test_jo_beats_random_replace_on_tiny(small_pipeline, tiny):
    p = small_pipeline
    better = sum(_run(p, inst, "jo", seed=s).final_loss <= _run(p, inst, "random", seed=s).final_loss
                 for s, inst in enumerate(tiny))
    assert better >= 95


def test_ao_beats_jo_on_most_tiny(small_pipeline, tiny):
    p = small_pipeline
    better = sum(_run(p, inst, "ao", seed=s).final_loss <= _run(p, inst, "jo", seed=s).final_loss + 1e-12
                 for s, inst in enumerate(tiny))
    assert better >= 60
