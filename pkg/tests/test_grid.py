"""Netlist parsing, validation and interconnect-tree extraction."""

import pytest

from emgrid.errors import NetlistError, ValidationError
from emgrid.grid import RHO_CU_DEFAULT, parse_netlist, serialize
from conftest import SINGLE_WIRE

import oracles


def test_single_wire_minimal():
    grid = parse_netlist(SINGLE_WIRE.format(load=1e-3))
    assert len(grid.nodes) == 2
    assert len(grid.segments) == 1
    assert len(grid.trees) == 1
    seg = grid.segments[0]
    assert seg.width == pytest.approx(0.5e-6)
    assert seg.thickness == pytest.approx(0.2e-6)
    assert seg.length == pytest.approx(100e-6)
    assert seg.r0 == 22.0
    assert seg.rho == RHO_CU_DEFAULT
    a = grid.node_by_name("a")
    assert a.kind == "pad"
    assert grid.pads[a.id] == 1.0
    b = grid.node_by_name("b")
    assert grid.loads[b.id] == pytest.approx(1e-3)
    # both endpoints of a single wire are terminals
    assert grid.trees[0].terminals == sorted([a.id, b.id])


def test_comments_blank_lines_and_case():
    text = ("* leading comment\n\n"
            "na x=0 y=0 layer=1\n"
            "NB x=10 y=0 layer=1\n"
            "r1 a B 22 ; w=0.5 h=0.2 l=10 layer=1\n"
            "vP a 0 1.0\n"
            "iL B 0 1e-3\n"
            ".END\n"
            "garbage after end is ignored\n")
    grid = parse_netlist(text)
    assert len(grid.segments) == 1
    assert grid.segments[0].length == pytest.approx(10e-6)


def test_mesh_summary(demo_grid):
    assert len(demo_grid.nodes) == 32
    assert len(demo_grid.segments) == 24
    assert len(demo_grid.vias) == 16
    assert len(demo_grid.pads) == 4
    assert len(demo_grid.loads) == 4
    assert len(demo_grid.trees) == 8


def test_tree_count_matches_union_find_oracle(demo_grid):
    assert len(demo_grid.trees) == oracles.count_trees_union_find(demo_grid)


def test_trees_partition_segments(demo_grid):
    seen = []
    for tree in demo_grid.trees:
        seen.extend(tree.segments)
    assert sorted(seen) == sorted(demo_grid.segments)


def test_vias_do_not_split_trees():
    # one straight 3-segment run with vias landing on interior nodes:
    # still a single tree, terminals only at the two run ends
    text = """\
Na x=0 y=0 layer=1
Nb x=100 y=0 layer=1
Nc x=200 y=0 layer=1
Nd x=300 y=0 layer=1
Nup1 x=100 y=0 layer=2
Nup2 x=200 y=0 layer=2
R1 a b 22 ; W=0.5 H=0.2 L=100 layer=1
R2 b c 22 ; W=0.5 H=0.2 L=100 layer=1
R3 c d 22 ; W=0.5 H=0.2 L=100 layer=1
Rtop up1 up2 22 ; W=0.5 H=0.2 L=100 layer=2
VIA1 b up1 0.5
VIA2 c up2 0.5
Vp up1 0 1.0
Il d 0 1e-3
.end
"""
    grid = parse_netlist(text)
    assert len(grid.trees) == 2
    run = next(t for t in grid.trees if len(t.segments) == 3)
    names = {grid.nodes[n].name for n in run.terminals}
    assert names == {"a", "d"}


def test_t_junction_terminals():
    text = """\
Na x=0 y=0 layer=1
Nb x=100 y=0 layer=1
Nc x=200 y=0 layer=1
Nd x=100 y=100 layer=1
R1 a b 22 ; W=0.5 H=0.2 L=100 layer=1
R2 b c 22 ; W=0.5 H=0.2 L=100 layer=1
R3 b d 22 ; W=0.5 H=0.2 L=100 layer=1
Vp a 0 1.0
Il c 0 1e-3
.end
"""
    grid = parse_netlist(text)
    assert len(grid.trees) == 1
    tree = grid.trees[0]
    assert len(tree.segments) == 3
    names = sorted(grid.nodes[n].name for n in tree.terminals)
    assert names == ["a", "c", "d"]


def test_net_assignment(demo_grid):
    nets = demo_grid.nets()
    assert len(nets) == 1
    assert demo_grid.pad_voltage(nets[0]) == 1.0


def test_serialize_round_trip(demo_grid):
    again = parse_netlist(serialize(demo_grid))
    assert len(again.nodes) == len(demo_grid.nodes)
    assert len(again.trees) == len(demo_grid.trees)
    for sid, seg in demo_grid.segments.items():
        other = next(s for s in again.segments.values() if s.name == seg.name)
        assert other.r0 == pytest.approx(seg.r0, rel=1e-9)
        assert other.length == pytest.approx(seg.length, rel=1e-9)
    for nid, v in demo_grid.pads.items():
        name = demo_grid.nodes[nid].name
        assert again.pads[again.node_names[name]] == v


def test_rho_consistency_check():
    good = SINGLE_WIRE.format(load=1e-3).replace(
        "layer=1\nVp", "layer=1 rho=2.2e-8\nVp")
    parse_netlist(good)  # within 1%
    bad = SINGLE_WIRE.format(load=1e-3).replace(
        "layer=1\nVp", "layer=1 rho=3.0e-8\nVp")
    with pytest.raises(NetlistError, match="inconsistent"):
        parse_netlist(bad)


@pytest.mark.parametrize("mutation, message", [
    ("R1 a zz 22 ; W=0.5 H=0.2 L=100 layer=1", "dangling"),
    ("R1 a b 22 ; W=0.5 L=100 layer=1", "geometry"),
    ("R1 a b 22 ; W=0.5 H=0.2 L=100", "layer"),
    ("R1 a b -5 ; W=0.5 H=0.2 L=100 layer=1", "non-positive"),
    ("R1 a a 22 ; W=0.5 H=0.2 L=100 layer=1", "shorts"),
])
def test_bad_resistor_cards(mutation, message):
    text = SINGLE_WIRE.format(load=1e-3).replace(
        "R1 a b 22 ; W=0.5 H=0.2 L=100 layer=1", mutation)
    with pytest.raises(NetlistError, match=message):
        parse_netlist(text)


def test_duplicate_element_name():
    text = SINGLE_WIRE.format(load=1e-3).replace(
        "Vp a 0 1.0", "Vp a 0 1.0\nvp a 0 1.0")
    with pytest.raises(NetlistError, match="duplicate"):
        parse_netlist(text)


def test_syntax_error_carries_line_number():
    text = "Na x=0 y=0 layer=1\nQ7 bogus card\n.end\n"
    with pytest.raises(NetlistError) as err:
        parse_netlist(text)
    assert err.value.line == 2


def test_ungrounded_source_rejected():
    text = SINGLE_WIRE.format(load=1e-3).replace("Vp a 0 1.0", "Vp a b 1.0")
    with pytest.raises(NetlistError, match="grounded"):
        parse_netlist(text)


def test_segment_layer_mismatch():
    text = SINGLE_WIRE.format(load=1e-3).replace(
        "Nb x=100 y=0 layer=1", "Nb x=100 y=0 layer=2")
    with pytest.raises(ValidationError, match="layer"):
        parse_netlist(text)


def test_load_without_pad_path():
    text = """\
Na x=0 y=0 layer=1
Nb x=100 y=0 layer=1
Nc x=0 y=100 layer=1
Nd x=100 y=100 layer=1
R1 a b 22 ; W=0.5 H=0.2 L=100 layer=1
R2 c d 22 ; W=0.5 H=0.2 L=100 layer=1
Vp a 0 1.0
Il d 0 1e-3
.end
"""
    with pytest.raises(ValidationError, match="not connected to any pad"):
        parse_netlist(text)
