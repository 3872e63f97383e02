#!/usr/bin/env python3
"""Independent reference for the split planner, used to generate test fixtures.

Recomputes layer shapes, memory, objectives, the exact Pareto set and the
ideal-point choice straight from a profile document, without touching the Rust
code. Writes a JSON fixture to stdout.

    python3 scripts/reference_oracle.py crates/core/data/alexnet.json
"""
import json
import math
import sys

CLIENT = dict(cores=8, clock_hz=1.6e9, freq_ghz=1.6, k=1.172)
SERVER = dict(cores=4, clock_hz=1.6e9)
NET = dict(bandwidth=10.0, tau_u=10.0, tau_d=10.0, alpha_u=283.17, beta_u=132.86,
           alpha_d=137.01, beta_d=132.86, download_bits=32000.0)
MEMORY_CAP = 1 << 30


def window(n, k, s, p):
    return (n + 2 * p - k) // s + 1


def layer_costs(doc):
    shape = list(doc["input_shape"])
    bpe = doc.get("bytes_per_element", 4)
    out = []
    for layer in doc["layers"]:
        kind = layer["kind"]
        params = 0
        if kind == "conv2d":
            k, s, p = layer["kernel"], layer["stride"], layer["padding"]
            assert shape[0] == layer["in_channels"]
            shape = [layer["out_channels"], window(shape[1], k, s, p), window(shape[2], k, s, p)]
            params = (k * k * layer["in_channels"] + 1) * layer["out_channels"]
        elif kind in ("maxpool2d", "avgpool2d"):
            k, s, p = layer["kernel"], layer["stride"], layer["padding"]
            shape = [shape[0], window(shape[1], k, s, p), window(shape[2], k, s, p)]
        elif kind == "adaptiveavgpool2d":
            shape = [shape[0], layer["output_size"], layer["output_size"]]
        elif kind == "flatten":
            shape = [math.prod(shape)]
        elif kind == "linear":
            assert math.prod(shape) == layer["in_features"]
            shape = [layer["out_features"]]
            params = (layer["in_features"] + 1) * layer["out_features"]
        elif kind == "block":
            shape = list(layer["block_out_shape"])
            params = layer["block_param_count"]
        out.append((params * bpe, math.prod(shape) * bpe))
    return out


def objectives(costs, l1):
    client = sum(p + a for p, a in costs[:l1])
    server = sum(p + a for p, a in costs[l1:])
    inter_bits = costs[l1 - 1][1] * 8
    t_client = client / (CLIENT["cores"] * CLIENT["clock_hz"])
    t_server = server / (SERVER["cores"] * SERVER["clock_hz"])
    t_upload = inter_bits / 1e6 / NET["bandwidth"]
    t_download = NET["download_bits"] / 1e6 / NET["bandwidth"]
    p_client = CLIENT["k"] * CLIENT["cores"] * CLIENT["freq_ghz"] ** 3
    p_up = NET["alpha_u"] * NET["tau_u"] + NET["beta_u"]
    p_down = NET["alpha_d"] * NET["tau_d"] + NET["beta_d"]
    f1 = t_client + t_upload + t_server
    f2 = p_client * t_client + p_up * t_upload + p_down * t_download
    return [f1, f2, float(client)]


def dominates(a, b):
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def main(path):
    doc = json.load(open(path))
    costs = layer_costs(doc)
    total = len(costs)
    rows = {l1: objectives(costs, l1) for l1 in range(1, total)}
    feasible = [l1 for l1 in rows if rows[l1][2] <= MEMORY_CAP]
    pareto = [i for i in feasible if not any(dominates(rows[j], rows[i]) for j in feasible)]

    norms = [math.sqrt(sum(rows[i][c] ** 2 for i in pareto)) for c in range(3)]
    normed = {i: [rows[i][c] / norms[c] if norms[c] > 0 else 0.0 for c in range(3)] for i in pareto}
    ideal = [min(normed[i][c] for i in pareto) for c in range(3)]
    dist = {i: math.sqrt(sum((normed[i][c] - ideal[c]) ** 2 for c in range(3))) for i in pareto}
    choice = min(pareto, key=lambda i: (dist[i], i))

    json.dump({
        "model": doc["name"],
        "total_layers": total,
        "objectives": {str(l1): v for l1, v in rows.items()},
        "pareto": pareto,
        "choice": choice,
        "choice_distance": dist[choice],
    }, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
