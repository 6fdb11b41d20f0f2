"""Writes synthetic_airports.txt: a seeded, heavy-tailed, asymmetric
stand-in for a passenger-flow network between 120 airports.

Each line is `dst src weight`: weekly seats arriving at dst from src.
Airport sizes are Pareto distributed; routes follow a gravity model over
random planar positions, hubs connect to each other, and a ring of routes
keeps the network strongly connected.
"""

import math
import random
import string

NODES = 120
SEED = 20240611


def codes(rng, count):
    seen = set()
    out = []
    while len(out) < count:
        c = "".join(rng.choice(string.ascii_uppercase) for _ in range(3))
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def main():
    rng = random.Random(SEED)
    labels = codes(rng, NODES)
    size = [rng.paretovariate(1.2) for _ in range(NODES)]
    pos = [(rng.random(), rng.random()) for _ in range(NODES)]
    hubs = sorted(range(NODES), key=lambda i: -size[i])[:12]

    edges = {}

    def add(dst, src, base):
        if dst == src:
            return
        # direction-dependent noise makes the matrix asymmetric
        w = base * rng.lognormvariate(0.0, 0.35)
        edges[(dst, src)] = edges.get((dst, src), 0.0) + w

    for u in range(NODES):
        d = [(math.dist(pos[u], pos[v]), v) for v in range(NODES) if v != u]
        d.sort()
        partners = {v for _, v in d[:4]}
        partners.update(rng.sample(hubs, 3))
        for v in partners:
            flow = 1000.0 * size[u] * size[v] / (0.05 + math.dist(pos[u], pos[v]))
            add(u, v, flow)
            add(v, u, flow)
    for a in hubs:
        for b in hubs:
            add(a, b, 500.0 * size[a] * size[b])
    for u in range(NODES):
        v = (u + 1) % NODES
        add(u, v, 100.0)
        add(v, u, 100.0)

    with open("synthetic_airports.txt", "w") as f:
        f.write("# synthetic airport network: dst src weekly_seats\n")
        f.write(f"# generated by generate_synthetic_airports.py (seed {SEED})\n")
        for (dst, src), w in sorted(edges.items()):
            f.write(f"{labels[dst]} {labels[src]} {w:.1f}\n")


if __name__ == "__main__":
    main()
