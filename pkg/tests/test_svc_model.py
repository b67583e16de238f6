import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ancestors, dyadic_edges, iterative_deletion
from svcsim.errors import ConfigError
from svcsim.svc_model import (
    CodedUnit,
    DependencyGraph,
    GopConfig,
    LayerId,
    Scheme,
    add_quality_edges,
    build_dependency_graph,
    build_temporal_hierarchy,
    decodable_units,
    frame_tid,
    operating_point_graph,
)


def U(f, t, q):
    return CodedUnit(f, LayerId(0, t, q))


def frame_edges(graph):
    return {(a.frame_index, b.frame_index) for a, b in graph.edges}


# ---------------------------------------------------------------- LayerId

def test_layer_within_is_componentwise():
    sel = LayerId(0, 2, 0)
    assert LayerId(0, 1, 0).within(sel)
    assert not LayerId(0, 0, 1).within(sel)
    assert not LayerId(1, 0, 0).within(sel)
    assert LayerId(0, 2, 0).within(sel)


def test_layer_rejects_negative():
    with pytest.raises(ConfigError):
        LayerId(0, -1, 0)


# ---------------------------------------------------------------- GopConfig

def test_gop_levels_follow_size():
    assert GopConfig(8).temporal_levels == 4
    assert GopConfig(1).temporal_levels == 1


@pytest.mark.parametrize("kwargs", [
    {"gop_size": 6},
    {"gop_size": 0},
    {"gop_size": 4, "temporal_levels": 2},
    {"quality_levels": 0},
    {"scheme": Scheme.MGS, "mgs_key_period": 0},
    {"scheme": Scheme.MGS, "mgs_key_period": 6},
    {"intra_period": 6},
    {"scheme": "xgs"},
])
def test_gop_validation(kwargs):
    with pytest.raises(ConfigError):
        GopConfig(**kwargs)


def test_mgs_key_period_defaults_to_gop():
    assert GopConfig(4, 2, Scheme.MGS).mgs_key_period == 4


def test_frame_tid_pattern():
    assert [frame_tid(f, 4) for f in range(9)] == [0, 2, 1, 2, 0, 2, 1, 2, 0]
    assert [frame_tid(f, 8) for f in range(8)] == [0, 3, 2, 3, 1, 3, 2, 3]


# ---------------------------------------------------------------- temporal hierarchy

def test_four_frame_gop_example():
    g = build_temporal_hierarchy(GopConfig(4, 1, Scheme.FGS), 5)
    edges = frame_edges(g)
    assert {a for a, b in edges if b == 2} == {0, 4}
    assert {a for a, b in edges if b == 1} == {0, 2}
    assert {a for a, b in edges if b == 3} == {2, 4}
    assert not {a for a, b in edges if b in (0, 4)}


def test_gop_of_one_has_no_edges():
    g = build_temporal_hierarchy(GopConfig(1, 1, Scheme.FGS), 6)
    assert not g.edges
    assert all(u.tid == 0 for u in g.nodes)


@pytest.mark.parametrize("gop_size,num_frames", [(8, 9), (8, 30), (4, 13), (16, 33), (2, 7)])
def test_hierarchy_matches_recursive_midpoints(gop_size, num_frames):
    g = build_temporal_hierarchy(GopConfig(gop_size, 1, Scheme.FGS), num_frames)
    assert frame_edges(g) == dyadic_edges(gop_size, num_frames)
    assert GopConfig(gop_size).temporal_levels == gop_size.bit_length()


def test_intra_period_chains_t0_frames():
    g = build_temporal_hierarchy(GopConfig(4, 1, Scheme.FGS, intra_period=8), 17)
    t0_edges = {(a, b) for a, b in frame_edges(g) if b % 4 == 0}
    assert t0_edges == {(0, 4), (8, 12)}


# ---------------------------------------------------------------- quality edges

def test_fgs_enhancement_depends_on_own_base_only():
    g = build_dependency_graph(GopConfig(4, 2, Scheme.FGS, intra_period=8), 12)
    for f in range(12):
        enh = U(f, frame_tid(f, 4), 1)
        assert set(g.parents(enh)) == {U(f, frame_tid(f, 4), 0)}


def test_cgs_enhancement_chain_mirrors_temporal_edges():
    g = build_dependency_graph(GopConfig(4, 3, Scheme.CGS), 5)
    # frame 2 (T1): Q2 <- Q1 of itself, Q2 of frames 0 and 4
    assert set(g.parents(U(2, 1, 2))) == {U(2, 1, 1), U(0, 0, 2), U(4, 0, 2)}
    assert set(g.parents(U(2, 1, 0))) == {U(0, 0, 0), U(4, 0, 0)}


def test_single_quality_level_leaves_graph_unchanged():
    for scheme in Scheme:
        gop = GopConfig(4, 1, scheme)
        base = build_temporal_hierarchy(gop, 9)
        assert add_quality_edges(base, gop) is base


# Hand-enumerated ancestors for MGS, GOP 4, key period 4, frames 0..7.
MGS_ANCESTORS = {
    (0, 0): set(),
    (0, 1): {(0, 0)},
    (1, 0): {(0, 0), (2, 0), (4, 0), (0, 1)},
    (1, 1): {(1, 0), (0, 0), (2, 0), (4, 0), (0, 1)},
    (2, 0): {(0, 0), (4, 0), (0, 1)},
    (2, 1): {(2, 0), (0, 0), (4, 0), (0, 1)},
    (3, 0): {(2, 0), (4, 0), (0, 0), (0, 1)},
    (3, 1): {(3, 0), (2, 0), (4, 0), (0, 0), (0, 1)},
    (4, 0): set(),
    (4, 1): {(4, 0)},
    (5, 0): {(4, 0), (6, 0), (4, 1)},
    (5, 1): {(5, 0), (4, 0), (6, 0), (4, 1)},
    (6, 0): {(4, 0), (4, 1)},
    (6, 1): {(6, 0), (4, 0), (4, 1)},
    (7, 0): {(6, 0), (4, 0), (4, 1)},
    (7, 1): {(7, 0), (6, 0), (4, 0), (4, 1)},
}


def test_mgs_reachability_table():
    g = build_dependency_graph(GopConfig(4, 2, Scheme.MGS, 4), 8)
    for (f, q), expected in MGS_ANCESTORS.items():
        got = {(u.frame_index, u.qid) for u in ancestors(U(f, frame_tid(f, 4), q), g.parents)}
        assert got == expected, (f, q)
    # frame 6's enhancement needs frame 4's enhancement
    everything = set(g.nodes)
    ok = decodable_units(everything - {U(4, 0, 1)}, g)
    assert U(6, 1, 1) not in ok
    assert U(6, 1, 1) in decodable_units(everything, g)


def test_mgs_key_frames_take_no_inter_frame_edges():
    g = build_dependency_graph(GopConfig(4, 2, Scheme.MGS, 8, intra_period=32), 40)
    for f in range(0, 40, 8):
        for u in g.units_of_frame(f):
            assert all(p.frame_index == f for p in g.parents(u))


def test_mgs_non_key_frames_reference_preceding_key_top_layer():
    g = build_dependency_graph(GopConfig(4, 3, Scheme.MGS, 8), 16)
    for f in (4, 9, 13):
        ref = f - f % 8
        for u in g.units_of_frame(f):
            assert U(ref, 0, 2) in g.parents(u)


def test_cycle_is_rejected():
    a, b = U(0, 0, 0), U(1, 0, 0)
    with pytest.raises(ConfigError):
        DependencyGraph({a, b}, {(a, b), (b, a)})


# ---------------------------------------------------------------- decodability

def test_all_received_is_all_decodable():
    g = build_dependency_graph(GopConfig(4, 2, Scheme.CGS, intra_period=8), 17)
    assert decodable_units(g.nodes, g) == g.nodes


def test_missing_anchor_frame_removes_dependents():
    g = build_dependency_graph(GopConfig(4, 2, Scheme.FGS), 5)
    ok = decodable_units(g.nodes - {U(0, 0, 0)}, g)
    assert {u.frame_index for u in ok} == {4}


def test_random_loss_matches_iterative_deletion_on_mgs():
    g = build_dependency_graph(GopConfig(4, 2, Scheme.MGS, 4, intra_period=16), 32)
    rng = random.Random(7)
    nodes = sorted(g.nodes)
    for _ in range(200):
        received = {u for u in nodes if rng.random() >= 0.3}
        assert decodable_units(received, g) == iterative_deletion(received, g.parents)


def test_operating_point_repoints_only_mgs_missing_enhancement():
    gop = GopConfig(4, 2, Scheme.MGS, 4)
    g = build_dependency_graph(gop, 8)
    sent = {u for u in g.nodes if u.qid == 0}
    op = operating_point_graph(g, sent)
    assert decodable_units(sent, op) == sent
    assert decodable_units(sent, g) == {U(0, 0, 0), U(4, 0, 0)}
    fgs = build_dependency_graph(GopConfig(4, 2, Scheme.FGS), 8)
    assert operating_point_graph(fgs, sent) is fgs


# ---------------------------------------------------------------- properties

gops = st.builds(
    lambda size, q, scheme, intra_mult: GopConfig(
        size, q, scheme, size if scheme == Scheme.MGS else None,
        None if intra_mult == 0 else size * intra_mult),
    st.sampled_from([1, 2, 4, 8]), st.integers(1, 3), st.sampled_from(list(Scheme)), st.integers(0, 3))


@given(gops, st.integers(1, 24))
def test_graphs_are_acyclic_and_deterministic(gop, n):
    g1 = build_dependency_graph(gop, n)
    g2 = build_dependency_graph(gop, n)
    assert g1 == g2
    pos = {u: i for i, u in enumerate(g1.topological_order())}
    assert len(pos) == len(g1.nodes)
    assert all(pos[a] < pos[b] for a, b in g1.edges)


@given(gops, st.integers(1, 24))
def test_structural_invariants(gop, n):
    g = build_dependency_graph(gop, n)
    for u in g.nodes:
        if u.qid > 0:
            assert any(p.frame_index == u.frame_index and p.qid < u.qid for p in g.parents(u)) or any(
                gop.is_reference(p.frame_index) for p in g.parents(u))
        if u.tid > 0:
            assert any(a.tid == 0 for a in ancestors(u, g.parents))


@given(gops, st.integers(1, 16), st.data())
def test_decodable_is_monotone_and_matches_oracle(gop, n, data):
    g = build_dependency_graph(gop, n)
    nodes = sorted(g.nodes)
    small = set(data.draw(st.lists(st.sampled_from(nodes), unique=True)))
    extra = set(data.draw(st.lists(st.sampled_from(nodes), unique=True)))
    big = small | extra
    d_small = decodable_units(small, g)
    assert d_small <= decodable_units(big, g)
    assert d_small == iterative_deletion(small, g.parents)


@given(st.sampled_from([1, 2, 4, 8]), st.integers(2, 3), st.integers(1, 20), st.data())
def test_fgs_enhancement_loss_never_blocks_base(size, q, n, data):
    g = build_dependency_graph(GopConfig(size, q, Scheme.FGS, intra_period=size * 2), n)
    enh = sorted(u for u in g.nodes if u.qid > 0)
    lost = set(data.draw(st.lists(st.sampled_from(enh), unique=True))) if enh else set()
    ok = decodable_units(g.nodes - lost, g)
    assert {u for u in ok if u.qid == 0} == {u for u in g.nodes if u.qid == 0}


@given(st.sampled_from([1, 2, 4, 8]), st.integers(1, 20), st.integers(0, 2))
def test_schemes_coincide_without_quality_layers(size, n, intra_mult):
    intra = None if intra_mult == 0 else size * intra_mult
    graphs = [build_dependency_graph(GopConfig(size, 1, s, intra_period=intra), n) for s in Scheme]
    assert graphs[0].edges == graphs[1].edges == graphs[2].edges
