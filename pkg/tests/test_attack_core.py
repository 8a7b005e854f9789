import numpy as np
import pytest

from advprog import summarizer as sm
from advprog.attack import (
    AttackConfig, MaskExhausted, NoSites, Objective, argmax_selection, attack_loss, build_layout,
    discretize, draw, grad_zu, relax, run_ao, run_jo, run_token_only, smooth_loss_grad, unit_ball,
)
from advprog.attack.relaxed import RelaxedProgram
from advprog.minilang import extract_sites, materialize, parse_source, restrict_sites
from advprog.oracles import fd_gradient

SRC = 'def f(a, b): c = a + b; if True: print("hello"); return c'


@pytest.fixture(scope="module")
def setup(small_pipeline):
    p = small_pipeline
    fn = parse_source(SRC)
    sites = extract_sites(fn, p.vocab)
    target = sm.predict_ids(p.model, p.vocab.encode_source(SRC))
    return p.model, p.vocab, fn, sites, target


def _random_state(layout, k, rng):
    from advprog.attack.projection import project_rows, project_sites
    zs = project_sites(rng.random(layout.n_sites), k)
    us = project_rows(rng.random(layout.masks.shape), layout.masks)
    return zs, us


def test_relax_initial_point(setup):
    model, vocab, fn, sites, _ = setup
    r = relax(fn, sites, vocab, 2)
    assert r.zs.sum() == pytest.approx(2) and np.all(r.zs <= 1)
    np.testing.assert_allclose(r.us.sum(axis=1), 1)
    assert np.all(r.us[~r.masks] == 0)
    assert r.z.shape == (r.layout.n,) and r.u.shape == r.P.shape == (r.layout.n, len(vocab))
    with pytest.raises(ValueError):
        relax(fn, sites, vocab, 0)
    with pytest.raises(NoSites):
        relax(fn, restrict_sites(sites, []), vocab, 1)


def test_full_matrices_match_compact_mass(setup, rng):
    model, vocab, fn, sites, _ = setup
    lay = build_layout(fn, sites, vocab)
    zs, us = _random_state(lay, 3, rng)
    rows = lay.rows(zs, us)
    np.testing.assert_allclose(rows.sum(axis=1), 1)
    np.testing.assert_allclose(rows.sum(axis=0), lay.mass(zs, us), atol=1e-12)


def test_vertices_are_materialized_programs(setup, rng):
    model, vocab, fn, sites, _ = setup
    lay = build_layout(fn, sites, vocab)
    np.testing.assert_array_equal(lay.vertex_ids([]), vocab.encode_source(SRC))
    for _ in range(20):
        zs, us = _random_state(lay, 3, rng)
        sel = draw(lay, zs, us, 3, rng)
        np.testing.assert_array_equal(lay.vertex_ids(sel),
                                      vocab.encode_source(materialize(fn, sites, sel, vocab)))
        zv = np.zeros(lay.n_sites)
        uv = np.zeros_like(us)
        for s, t in sel:
            zv[s] = 1
            uv[s, t] = 1
        mass = np.bincount(lay.vertex_ids(sel), minlength=len(vocab))
        m = lay.mass(zv, uv)
        m[0] = 0  # NUL slots carry no model mass
        np.testing.assert_allclose(m, mass, atol=1e-12)


def test_objective_is_negative_cross_entropy(setup):
    model, vocab, fn, sites, target = setup
    r = relax(fn, sites, vocab, 1)
    zero = RelaxedProgram(r.layout, np.zeros_like(r.zs), r.us, 1)
    ids = vocab.encode_source(SRC)
    assert attack_loss(model, zero, target) == pytest.approx(-sm.loss(sm.forward_ids(model, ids), target))


def test_grad_zu_matches_fd(setup, rng):
    model, vocab, fn, sites, target = setup
    lay = build_layout(fn, sites, vocab)
    obj = Objective(model, lay, target)
    for _ in range(5):
        zs, us = _random_state(lay, 2, rng)
        _, gz, gu = obj.value_grad(zs, us)
        np.testing.assert_allclose(gz, fd_gradient(lambda z: obj.value(z, us), zs), rtol=1e-5, atol=1e-9)
        s = int(rng.integers(lay.n_sites))
        cols = np.flatnonzero(lay.masks[s])[:6]
        coords = np.zeros(us.shape, dtype=bool)
        coords[s, cols] = True
        fd = fd_gradient(lambda u: obj.value(zs, u), us, coords=coords)
        np.testing.assert_allclose(gu[coords], fd[coords], rtol=1e-5, atol=1e-9)


def test_grad_zu_per_slot_broadcast(setup, rng):
    model, vocab, fn, sites, target = setup
    r = relax(fn, sites, vocab, 2)
    dz, du = grad_zu(model, r, target)
    lay = r.layout
    assert np.all(dz[lay.slot_site < 0] == 0)
    assert np.all(du[~lay.slot_var] == 0)


def test_identity_u_makes_z_irrelevant(setup, rng):
    model, vocab, fn, sites, target = setup
    r = relax(fn, sites, vocab, 1)
    base = attack_loss(model, RelaxedProgram(r.layout, np.zeros_like(r.zs), r.us, 1), target)
    lay = r.layout
    # rename slots only: u equal to the original token makes the row equal to P
    ren = [s for s in range(lay.n_sites) if lay.rename[s]]
    sub = restrict_sites(sites, ren)
    lay2 = build_layout(fn, sub, vocab)
    us = np.zeros(lay2.masks.shape)
    for s in range(lay2.n_sites):
        us[s, lay2.p_ids[lay2.groups[s][0]]] = 1.0
    obj = Objective(model, lay2, target)
    for _ in range(20):
        assert obj.value(rng.random(lay2.n_sites), us) == pytest.approx(base, abs=1e-12)


def test_zero_z_gives_zero_u_gradient(setup, rng):
    model, vocab, fn, sites, target = setup
    lay = build_layout(fn, sites, vocab)
    zs, us = _random_state(lay, 2, rng)
    zs[::2] = 0
    _, _, gu = Objective(model, lay, target).value_grad(zs, us)
    assert np.all(gu[::2] == 0)


def test_dimension_mismatch(setup):
    model, vocab, fn, sites, target = setup
    lay = build_layout(fn, sites, vocab)
    small = sm.init_model(5, model.output_tokens, d=2, h=2)
    with pytest.raises(sm.DimensionMismatch):
        Objective(small, lay, target)


# -- discretization --------------------------------------------------------------


def test_discrete_point_reproduces_itself(setup):
    _, vocab, fn, sites, _ = setup
    lay = build_layout(fn, sites, vocab)
    zs = np.zeros(lay.n_sites)
    us = np.zeros(lay.masks.shape)
    chosen = {0: int(np.flatnonzero(lay.masks[0])[3]), 4: int(np.flatnonzero(lay.masks[4])[1])}
    for s, t in chosen.items():
        zs[s] = 1
        us[s, t] = 1
    for s in range(lay.n_sites):
        if s not in chosen:
            us[s, np.flatnonzero(lay.masks[s])[0]] = 1
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert draw(lay, zs, us, 2, rng) == sorted(chosen.items())
    assert argmax_selection(lay, zs, us, 2) == sorted(chosen.items())


def test_draw_respects_budget_and_distinct_renames(setup, rng):
    _, vocab, fn, sites, _ = setup
    lay = build_layout(fn, sites, vocab)
    zs = np.ones(lay.n_sites)
    us = np.zeros(lay.masks.shape)
    tok = int(np.flatnonzero(lay.masks[0])[0])
    us[:, tok] = 1  # every site prefers the same token
    for _ in range(20):
        sel = draw(lay, zs, us, 3, rng)
        assert len(sel) == 3
        renamed = [t for s, t in sel if lay.rename[s]]
        assert len(renamed) == len(set(renamed))


def test_mask_exhausted(setup):
    _, vocab, fn, sites, _ = setup
    only = np.zeros(len(vocab), dtype=bool)
    only[int(sites[0].candidates[0])] = True
    sub = restrict_sites(sites, [0, 1], {0: only, 1: only})
    lay = build_layout(fn, sub, vocab)
    with pytest.raises(MaskExhausted):
        argmax_selection(lay, np.ones(2), lay.masks.astype(float), 2)


def test_discretize_keeps_best_draw(setup):
    model, vocab, fn, sites, target = setup
    lay = build_layout(fn, sites, vocab)
    obj = Objective(model, lay, target)
    r = relax(fn, sites, vocab, 2)
    sel, val = discretize(lay, r.zs, r.us, 2, "randomized", 10, np.random.default_rng(0), obj.ids_value)
    rng = np.random.default_rng(0)
    vals = [obj.ids_value(lay.vertex_ids(draw(lay, r.zs, r.us, 2, rng))) for _ in range(10)]
    assert val == min(vals)
    with pytest.raises(ValueError):
        discretize(lay, r.zs, r.us, 2, "bogus")


# -- smoothing -------------------------------------------------------------------


def test_unit_ball(rng):
    x = unit_ball(rng, 7, 2000)
    assert np.all(np.linalg.norm(x, axis=1) <= 1 + 1e-12)
    assert abs(np.mean(np.linalg.norm(x, axis=1)) - 7 / 8) < 0.02


def test_smoothed_loss_converges_to_raw(setup, rng):
    model, vocab, fn, sites, target = setup
    lay = build_layout(fn, sites, vocab)
    obj = Objective(model, lay, target)
    zs, us = _random_state(lay, 2, rng)
    val, _, _ = smooth_loss_grad(obj, zs, us, 1e-3, 200, rng)
    assert abs(val - obj.value(zs, us)) <= 1e-2
    with pytest.raises(ValueError):
        smooth_loss_grad(obj, zs, us, 0.0, 1, rng)


def test_smoothed_gradient_of_constant_model_is_zero(setup, rng):
    model, vocab, fn, sites, target = setup
    flat = model.copy()
    flat.W2[...] = 0.0
    lay = build_layout(fn, sites, vocab)
    obj = Objective(flat, lay, target)
    zs, us = _random_state(lay, 2, rng)
    _, gz, gu = smooth_loss_grad(obj, zs, us, 0.01, 20, rng, perturb_z=True)
    assert np.abs(gz).max() <= 1e-12 and np.abs(gu).max() <= 1e-12


# -- optimizers ------------------------------------------------------------------


def _cfg(**kw):
    return AttackConfig(optimizer=kw.pop("optimizer", "ao"), **kw)


def test_zero_step_sizes_keep_the_start(setup):
    model, vocab, fn, sites, target = setup
    r = relax(fn, sites, vocab, 2)
    obj = Objective(model, r.layout, target)
    for run in (run_jo, run_ao, run_token_only):
        st = run(obj, r.zs, r.us, 2, _cfg(alpha_z=0.0, alpha_u=0.0, iterations=4))
        np.testing.assert_allclose(st.zs, r.zs)
        np.testing.assert_allclose(st.us, r.us)
        assert len(st.trace) == 4


class _Quadratic:
    """Separable quadratic over the compact variables, for optimizer checks."""

    def __init__(self, layout, zt, ut):
        self.layout, self.zt, self.ut = layout, zt, ut

    def value(self, zs, us):
        return 0.5 * np.sum((zs - self.zt) ** 2) + 0.5 * np.sum((us - self.ut) ** 2)

    def value_grad(self, zs, us):
        return self.value(zs, us), zs - self.zt, np.where(self.layout.masks, us - self.ut, 0.0)


def test_pgd_converges_on_quadratic(setup):
    _, vocab, fn, sites, _ = setup
    lay = build_layout(fn, sites, vocab)
    r = relax(fn, sites, vocab, 2)
    zt = np.zeros(lay.n_sites)
    zt[[0, 3]] = 1.0
    ut = np.zeros(lay.masks.shape)
    for s in range(lay.n_sites):
        ut[s, np.flatnonzero(lay.masks[s])[0]] = 1.0
    q = _Quadratic(lay, zt, ut)
    for name, run in (("jo", run_jo), ("ao", run_ao)):
        st = run(q, r.zs, r.us, 2, _cfg(optimizer=name, normalize=False, alpha_z=0.5, alpha_u=0.5,
                                        iterations=60))
        np.testing.assert_allclose(st.zs, zt, atol=1e-6)
        np.testing.assert_allclose(st.us, ut, atol=1e-6)
        assert st.trace[-1] <= st.trace[0]


def test_iterates_stay_feasible(setup):
    model, vocab, fn, sites, target = setup
    r = relax(fn, sites, vocab, 2)
    obj = Objective(model, r.layout, target)
    for run in (run_jo, run_ao):
        st = run(obj, r.zs, r.us, 2, _cfg(alpha_z=2.0, alpha_u=2.0, iterations=5))
        assert st.zs.sum() <= 2 + 1e-9 and np.all((st.zs >= 0) & (st.zs <= 1))
        np.testing.assert_allclose(st.us.sum(axis=1), 1, atol=1e-9)
        assert np.all(st.us[~r.masks] == 0)
