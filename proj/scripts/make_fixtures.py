#!/usr/bin/env python3
"""Generate the bundled synthetic datasets under data/.

Each dataset is a simple undirected graph with a planted class structure:

- exact node, edge, and class counts;
- homophily (fraction of same-class edges) planted to the target exactly;
- class-dependent degree levels realized exactly per node (stub matching),
  so degree profiles carry the class signal;
- sparse binary features drawn from a per-class prototype plus noise.

Writing is fully deterministic for a fixed seed table. Output format matches
the loader: "<name> <f_0> ... <f_{d-1}> <label>" per content line and
"<name_u> <name_v>" per edge line.
"""

import json
import random
from collections import defaultdict
from pathlib import Path

SPECS = [
    # name, nodes, edges, classes, feature_dim, homophily, seed, keep_p, noise_p
    ("cornell", 183, 295, 5, 64, 0.30, 11, 0.65, 0.04),
    ("texas", 183, 309, 5, 64, 0.11, 12, 0.65, 0.04),
    ("wisconsin", 251, 499, 5, 64, 0.21, 13, 0.65, 0.04),
    ("cora", 2708, 5429, 7, 64, 0.81, 14, 0.70, 0.03),
]

CLASS_PROPORTIONS = [0.30, 0.25, 0.20, 0.15, 0.10]  # stretched/cut to C classes
# relative per-class degree levels; the top two 5-class levels coincide, so
# those two classes are separable by features but not by degree profile
DEGREE_LEVELS = [1.5, 2.2, 3.2, 6.5, 6.5, 11.0, 15.0]
PROTO_BITS = 10


def class_counts(n, c):
    """Largest-remainder apportionment of n nodes over c classes."""
    props = CLASS_PROPORTIONS[:c]
    if len(props) < c:
        props = props + [props[-1]] * (c - len(props))
    total = sum(props)
    quotas = [n * p / total for p in props]
    counts = [int(q) for q in quotas]
    remainders = sorted(range(c), key=lambda z: quotas[z] - counts[z], reverse=True)
    for z in remainders[: n - sum(counts)]:
        counts[z] += 1
    assert sum(counts) == n and min(counts) >= 5
    return counts


def apportion(total, quotas):
    """Integers summing to total, proportional to quotas (largest remainder)."""
    scale = total / sum(quotas)
    raw = [q * scale for q in quotas]
    out = [int(r) for r in raw]
    order = sorted(range(len(raw)), key=lambda z: raw[z] - out[z], reverse=True)
    for z in order[: total - sum(out)]:
        out[z] += 1
    return out


def pair_stubs(rng, capacity, edges, allowed, max_stalls=300):
    """Match stubs into unique edges; returns False when it stalls."""
    live = [i for i, c in enumerate(capacity) if c > 0]
    stalls = 0
    while live:
        if stalls > max_stalls:
            return False
        weights = [capacity[i] for i in live]
        u = rng.choices(live, weights)[0]
        v = rng.choices(live, weights)[0]
        key = (min(u, v), max(u, v))
        if u == v or key in edges or not allowed(u, v):
            stalls += 1
            continue
        edges.add(key)
        capacity[u] -= 1
        capacity[v] -= 1
        stalls = 0
        live = [i for i in live if capacity[i] > 0]
    return True


def sample_edges(rng, labels, degrees, e, h):
    """Exactly e unique edges matching the degree sequence, round(h*e) intra."""
    n = len(labels)
    n_intra = round(h * e)
    by_class = defaultdict(list)
    for i, z in enumerate(labels):
        by_class[z].append(i)
    classes = sorted(by_class)

    # intra edges per class, proportional to class stub mass
    class_mass = [sum(degrees[i] for i in by_class[z]) for z in classes]
    intra_edges = apportion(n_intra, class_mass)

    for attempt in range(50):
        sub = random.Random(rng.getrandbits(64))
        edges = set()
        capacity = list(degrees)
        ok = True

        # per-node intra stubs: 2 * intra_edges[z] ends spread by degree
        cross_cap = list(degrees)
        for z in classes:
            members = by_class[z]
            quota = apportion(2 * intra_edges[z], [degrees[i] for i in members])
            # a node cannot host more intra ends than stubs; push overflow
            for idx, i in enumerate(members):
                if quota[idx] > degrees[i]:
                    overflow = quota[idx] - degrees[i]
                    quota[idx] = degrees[i]
                    spill = [j for j in range(len(members)) if quota[j] < degrees[members[j]]]
                    for j in spill[:overflow]:
                        quota[j] += 1
            cap = quota[:]
            if not pair_stubs(sub, dict_to_list(cap, members, n), edges,
                              lambda u, v: labels[u] == labels[v]):
                ok = False
                break
            for idx, i in enumerate(members):
                cross_cap[i] = degrees[i] - quota[idx]

        if ok:
            before = len(edges)
            ok = pair_stubs(sub, cross_cap, edges, lambda u, v: labels[u] != labels[v])
            ok = ok and len(edges) - before == e - n_intra
        if ok and len(edges) == e:
            return sorted(edges), n_intra
    raise RuntimeError("stub matching failed")


def dict_to_list(cap, members, n):
    full = [0] * n
    for idx, i in enumerate(members):
        full[i] = cap[idx]
    return full


def make_dataset(name, n, e, c, d, h, seed, keep_p, noise_p):
    rng = random.Random(seed)

    counts = class_counts(n, c)
    labels = []
    for z, m in enumerate(counts):
        labels.extend([z] * m)
    rng.shuffle(labels)

    # exact degree targets: class level scaled so the total is 2e
    levels = DEGREE_LEVELS[:c]
    quotas = [levels[labels[i]] for i in range(n)]
    degrees = apportion(2 * e, quotas)
    assert min(degrees) >= 1 and max(degrees) < n

    edges, n_intra = sample_edges(rng, labels, degrees, e, h)
    homophily = n_intra / e
    assert abs(homophily - h) <= 0.02, f"{name}: homophily {homophily} off target {h}"

    realized = [0] * n
    for u, v in edges:
        realized[u] += 1
        realized[v] += 1
    assert realized == degrees

    protos = [rng.sample(range(d), PROTO_BITS) for _ in range(c)]
    features = []
    for i in range(n):
        proto = set(protos[labels[i]])
        row = [0] * d
        for j in range(d):
            p = keep_p if j in proto else noise_p
            if rng.random() < p:
                row[j] = 1
        features.append(row)

    return labels, edges, features, homophily


def write_dataset(out_dir, name, labels, edges, features):
    ds = out_dir / name
    ds.mkdir(parents=True, exist_ok=True)
    with open(ds / f"{name}.content", "w") as f:
        for i, row in enumerate(features):
            cols = " ".join(str(v) for v in row)
            f.write(f"n{i} {cols} c{labels[i]}\n")
    with open(ds / f"{name}.edges", "w") as f:
        for u, v in edges:
            f.write(f"n{u} n{v}\n")


def main():
    out_dir = Path(__file__).resolve().parent.parent / "data"
    summary = {}
    for name, n, e, c, d, h, seed, keep_p, noise_p in SPECS:
        labels, edges, features, homophily = make_dataset(
            name, n, e, c, d, h, seed, keep_p, noise_p
        )
        write_dataset(out_dir, name, labels, edges, features)
        summary[name] = {
            "nodes": n,
            "edges": len(edges),
            "classes": c,
            "feature_dim": d,
            "homophily": homophily,
        }
        print(
            f"{name:10s} nodes {n:5d} edges {len(edges):5d} classes {c} "
            f"dim {d} homophily {homophily:.4f}"
        )
    with open(out_dir / "fixtures.json", "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
