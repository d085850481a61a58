#!/usr/bin/env python3
"""Regenerate rome_2s.json and clx_2s.json structure.

Keeps any existing latency_model section so calibrated parameters survive.
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def rome_socket(s, numa_of_pos, xgmi_base):
    p = f"s{s}."
    sw = [f"{p}sw{i}" for i in range(1, 13)]
    fabric = [{"id": x, "role": "if_switch"} for x in sw]
    fabric += [{"id": f"{p}xgmi{xgmi_base + k}", "role": "xgmi_port"} for k in range(1, 5)]
    pairs = [(1, 2), (1, 5), (2, 6), (5, 7), (5, 8), (7, 6),
             (3, 4), (3, 9), (4, 10), (9, 11), (9, 12), (9, 10),
             (6, 10), (5, 9)]
    links = [[f"{p}sw{a}", f"{p}sw{b}", "if_switch_hop"] for a, b in pairs]
    links += [[f"{p}sw6", f"{p}xgmi{xgmi_base + 1}", "local"], [f"{p}sw6", f"{p}xgmi{xgmi_base + 2}", "local"],
              [f"{p}sw10", f"{p}xgmi{xgmi_base + 3}", "local"], [f"{p}sw10", f"{p}xgmi{xgmi_base + 4}", "local"]]
    # switch position -> (numa id, memory controller name)
    nodes = []
    for pos, ddr in ((2, 2), (1, 1), (4, 4), (3, 3)):
        n = numa_of_pos[pos]
        base = 16 * n
        ccds = []
        for d in range(2):
            c0 = base + 8 * d
            ccds.append({"attach": f"{p}sw{pos}",
                         "ccxs": [list(range(c0, c0 + 4)), list(range(c0 + 4, c0 + 8))]})
        nodes.append({"id": n, "memory_controller": {"id": f"{p}ddr{ddr}", "attach": f"{p}sw{pos}"},
                      "ccds": ccds})
    nodes.sort(key=lambda x: x["id"])
    return {"id": s, "numa_nodes": nodes, "fabric": fabric, "links": links}


def load_existing(name):
    path = os.path.join(HERE, name)
    if os.path.exists(path):
        with open(path) as f:
            return json.load(f)
    return {}


def write(name, doc):
    old = load_existing(name)
    if "latency_model" in old:
        doc["latency_model"] = old["latency_model"]
    with open(os.path.join(HERE, name), "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def rome():
    doc = {
        "schema": "memchar-topology/1",
        "name": "rome-2s",
        "kind": "chiplet_if",
        "protocol": "MOESI",
        "frequencies": {"core_mhz": 2000, "fclk_mhz": 1467, "uncore_mhz": 1467, "bandwidth_core_mhz": 2000},
        "caches": {"l1_bytes": 32768, "l2_bytes": 524288, "l3_bytes": 16777216},
        "link_costs": {"if_switch_hop": "2@fclk", "if_repeater_hop": "1@fclk", "xgmi": "40@fclk",
                       "local": "0@core"},
        "sockets": [rome_socket(0, {2: 0, 1: 1, 4: 2, 3: 3}, 0),
                    rome_socket(1, {2: 6, 1: 7, 4: 4, 3: 5}, 4)],
        "inter_socket_links": [[f"s0.xgmi{k}", f"s1.xgmi{k + 4}", "xgmi"] for k in range(1, 5)],
        "bandwidth": {
            "read": {
                "w128": {"L1": 32, "L2": 31, "L3": 22, "RAM": 9},
                "w256": {"L1": 64, "L2": 31.4, "L3": 23, "RAM": 9},
            },
            "triad": {"L1": 20, "L2": 16, "L3": 12, "RAM": 10.575},
            "caps": {
                "read": {"l3_domain": {"L3": 75.5}, "ccd": {"RAM": 25}, "numa_node": {"RAM": 27}},
                "triad": {"l3_domain": {"L3": 60}, "ccd": {"RAM": 16}, "numa_node": {"RAM": 21.45}},
            },
        },
    }
    write("rome_2s.json", doc)


P0 = [
    ["UPI", "IO", "IO", "IO", "IO", "IO"],
    ["0", "8", "4", "12", "10", "16"],
    ["MC", "1", "9", "X", "15", "MC"],
    ["5", "6", "2", "X", "13", "14"],
    ["3", "X", "X", "17", "18", "19"],
    ["X", "X", "7", "X", "11", "X"],
]
P1 = [
    ["UPI", "IO", "IO", "IO", "IO", "IO"],
    ["20", "X", "26", "32", "30", "36"],
    ["MC", "28", "24", "X", "35", "MC"],
    ["25", "21", "29", "37", "33", "34"],
    ["23", "X", "22", "X", "38", "39"],
    ["X", "X", "27", "X", "31", "X"],
]


def clx_socket(s, grid, anchors):
    nodes = []
    for half, (lo, hi) in enumerate(((0, 2), (3, 5))):
        cores = sorted(int(t) for row in grid for c, t in enumerate(row)
                       if t.isdigit() and lo <= c <= hi)
        nodes.append({"id": 2 * s + half, "memory_controller": [2, 0 if half == 0 else 5],
                      "l3_tile": anchors[half], "cores": cores})
    return {"id": s, "grid": {"rows": 6, "cols": 6, "io_rows": [0], "tiles": grid}, "numa_nodes": nodes}


def clx():
    doc = {
        "schema": "memchar-topology/1",
        "name": "clx-2s",
        "kind": "mesh_2d",
        "protocol": "MESIF",
        "frequencies": {"core_mhz": 2500, "fclk_mhz": 0, "uncore_mhz": 2400, "bandwidth_core_mhz": 1600},
        "caches": {"l1_bytes": 32768, "l2_bytes": 1048576, "l3_bytes": 14417920},
        "link_costs": {"mesh_hop": "2@uncore", "upi": "50@uncore", "local": "0@core"},
        "sockets": [clx_socket(0, P0, ([4, 1], [3, 3])), clx_socket(1, P1, ([4, 1], [4, 3]))],
        "inter_socket_links": [["s0.upi", "s1.upi", "upi"]],
        "bandwidth": {
            "read": {
                "w128": {"L1": 30, "L2": 25, "L3": 11.3, "RAM": 5},
                "w256": {"L1": 58, "L2": 38, "L3": 11.3, "RAM": 5},
                "w512": {"L1": 116.25, "L2": 45, "L3": 11.3, "RAM": 5},
            },
            "triad": {"L1": 30, "L2": 20, "L3": 9, "RAM": 4},
            "caps": {
                "read": {"l3_domain": {"L3": 100}, "numa_node": {"RAM": 38}},
                "triad": {"l3_domain": {"L3": 80}, "numa_node": {"RAM": 30}},
            },
        },
    }
    write("clx_2s.json", doc)


def single():
    doc = {
        "schema": "memchar-topology/1",
        "name": "single-core",
        "kind": "mesh_2d",
        "protocol": "MESIF",
        "frequencies": {"core_mhz": 2000, "uncore_mhz": 2000},
        "caches": {"l1_bytes": 32768, "l2_bytes": 1048576, "l3_bytes": 8388608},
        "link_costs": {"mesh_hop": "2@uncore", "local": "0@core"},
        "sockets": [{"id": 0, "grid": {"rows": 1, "cols": 1, "io_rows": [], "tiles": [["0"]]},
                     "numa_nodes": [{"id": 0, "cores": [0]}]}],
    }
    write("single_core.json", doc)


if __name__ == "__main__":
    rome()
    clx()
    single()
