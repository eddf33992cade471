#!/usr/bin/env python3
"""Generate the synthetic air-traffic-style fixture shipped in data/.

Deterministic: rerunning reproduces data/synthetic_airports.edges
byte-for-byte.  The network mimics a seat-count matrix over airports:
heavy-tailed hub sizes, denser connections among hubs, integer weights,
mild directional asymmetry, and strong connectivity via the main hub.
The real dataset it stands in for is distributed separately, so tests
and example configs use this stand-in.
"""

from pathlib import Path

import numpy as np

NODES = 120
SEED = 20260810


def main() -> None:
    rng = np.random.default_rng(SEED)
    # Zipf-like attractiveness by rank; hub codes A00 (largest) .. A119.
    # The exponent and the hub-link floor keep the periphery genuinely
    # connected (top-100 minimum column sum ~ 0.25 after normalization),
    # as in real seat-count networks.
    rank = np.arange(1, NODES + 1)
    size = rank ** -0.55
    labels = [f"A{i:02d}" for i in range(NODES)]

    weights = np.zeros((NODES, NODES))
    for i in range(NODES):
        for j in range(i + 1, NODES):
            p = min(1.0, 15.0 * size[i] * size[j])
            if rng.random() >= p:
                continue
            base = 2500.0 * size[i] * size[j] * rng.lognormal(0.0, 0.6)
            a = max(1, round(base * rng.lognormal(0.0, 0.15)))
            b = max(1, round(base * rng.lognormal(0.0, 0.15)))
            weights[i, j] = a
            weights[j, i] = b
    # every airport reaches the main hub both ways
    for i in range(1, NODES):
        floor = max(60, round(180.0 * size[i] * rng.lognormal(0, 0.3)))
        if weights[0, i] == 0:
            weights[0, i] = floor
        if weights[i, 0] == 0:
            weights[i, 0] = floor

    out = Path(__file__).resolve().parent.parent / "data" / "synthetic_airports.edges"
    out.parent.mkdir(exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("# synthetic air-traffic network: src dst seats\n")
        fh.write(f"# {NODES} nodes, generated by scripts/make_synthetic_network.py\n")
        for i in range(NODES):
            for j in range(NODES):
                if weights[i, j] > 0:
                    fh.write(f"{labels[i]} {labels[j]} {int(weights[i, j])}\n")
    print(f"wrote {out} ({int((weights > 0).sum())} edges)")


if __name__ == "__main__":
    main()
