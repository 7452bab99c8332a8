"""Shared fixtures for the test suite."""

from importlib import resources

import pytest

from emgrid import fixtures, materials
from emgrid.grid import parse_netlist
from emgrid.thermal import load_thermal_map


def data_text(name: str) -> str:
    return resources.files("emgrid.data").joinpath(name).read_text()


@pytest.fixture(scope="session")
def demo_netlist_text():
    return data_text("demo_mesh.sp")


@pytest.fixture()
def demo_grid(demo_netlist_text):
    return parse_netlist(demo_netlist_text)


@pytest.fixture(scope="session")
def demo_params():
    return materials.parse_parameters(data_text("demo_params.txt"))


@pytest.fixture(scope="session")
def demo_maps():
    return {kind: load_thermal_map(data_text(f"thermal_{kind}.csv"))
            for kind in ("uniform", "gradient", "hotspot")}


SINGLE_WIRE = """\
* one wire, pad at the left end, load at the right end
Na x=0 y=0 layer=1
Nb x=100 y=0 layer=1
R1 a b 22 ; W=0.5 H=0.2 L=100 layer=1
Vp a 0 1.0
Il b 0 {load}
.end
"""


def single_wire_grid(load_a: float = 1.0e-3):
    """100 um wire, R0 = 22 ohm; at 1 mA the density is 1e10 A/m^2."""
    return parse_netlist(SINGLE_WIRE.format(load=load_a))


@pytest.fixture()
def wire_grid():
    return single_wire_grid()


@pytest.fixture()
def default_params():
    return materials.parse_parameters(fixtures.default_params_text())
