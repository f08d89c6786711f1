"""Shared randomized-fixture builders for the test suite."""

import random

from layoutlab.layout import GridSpec, Layout, Placement, default_pins
from layoutlab.netlist import Netlist, parse_netlist


def random_connected_netlist(rng: random.Random, n_devices: int = 10) -> Netlist:
    nets = [f"n{i}" for i in range(max(3, n_devices // 2))] + ["VDD", "GND"]
    lines = []
    for i in range(n_devices):
        kind = rng.choice(["nmos", "pmos", "resistor", "capacitor"])
        prefix = {"nmos": "M", "pmos": "M", "resistor": "R", "capacitor": "C"}[kind]
        n_terms = {"nmos": 4, "pmos": 4, "resistor": 2, "capacitor": 2}[kind]
        terms = [rng.choice(nets) for _ in range(n_terms)]
        params = (
            [f"W={rng.randint(1, 6)}", f"L={rng.randint(1, 2)}"]
            if kind in ("nmos", "pmos")
            else [f"value={rng.randint(1, 9)}"]
        )
        lines.append(" ".join([f"{prefix}{i}", *terms, kind, *params]))
    return parse_netlist("\n".join(lines))


def random_layout(
    rng: random.Random, n_devices: int = 10, grid: int = 48
) -> Layout:
    """Non-overlapping random placements by shelf packing with jitter."""
    netlist = random_connected_netlist(rng, n_devices)
    l = Layout(netlist=netlist, grid=GridSpec(width=grid, height=grid))
    x, y, row_h = 1, 1, 0
    for name, device in netlist.devices.items():
        w, h = rng.randint(1, 5), rng.randint(1, 4)
        if x + w >= grid - 1:
            x, y = 1, y + row_h + rng.randint(1, 2)
            row_h = 0
        orient = rng.choice(["R0", "MX", "MY", "R180"])
        l.placements[name] = Placement(
            origin=(x, y),
            size=(w, h),
            orientation=orient,
            pins=default_pins(device.terminal_names(), (w, h)),
        )
        x += w + rng.randint(1, 2)
        row_h = max(row_h, h)
    assert y + row_h < grid, "packing overflow; enlarge grid"
    return l
