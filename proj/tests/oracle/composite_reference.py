# SPDX-License-Identifier: Apache-2.0
"""Reference composite ranking computed straight from a snapshot's raw tables.

Independent of the C++ pipeline: latency statistics come from the probe
records, quality from the latest eval run per suite, price from the registry.

usage: composite_reference.py SNAPSHOT_DIR PRESET SCOPE OUT_CSV
"""
import csv
import math
import sys
from datetime import datetime, timedelta
from pathlib import Path

ID = ["provider", "model", "sku", "precision", "decoding", "region"]
FACTORS = ["speed", "ttft", "price", "quality", "reliability"]
LOWER_BETTER = {"ttft", "price"}


def key(row):
    return "/".join(row[c] for c in ID)


def parse_ts(text):
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ")


def nearest_rank(sorted_values, p):
    n = len(sorted_values)
    return sorted_values[max(1, math.ceil(p * n)) - 1]


def read(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def main(snapshot, preset_name, scope, out):
    snap = Path(snapshot)
    manifest = __import__("json").loads((snap / "manifest.json").read_text())
    settings = manifest["settings"]
    as_of = parse_ts(manifest["as_of"])
    start = as_of - timedelta(hours=float(settings["window_hours"]))
    conditions = (settings["input_length"], settings["concurrency"], settings["probe_region"])
    suites = settings["quality_suites"].split(",")
    cache_hit = float(settings["cache_hit"])

    endpoints = {key(r): r for r in read(snap / "registry" / "endpoints.csv")}
    presets = {r["name"]: r for r in read(snap / "registry" / "presets.csv")}
    preset = presets[preset_name]
    weights = [float(preset["w_" + f]) for f in ["s", "t", "p", "q", "r"]]
    r_in = float(preset["input_ratio"]) / (float(preset["input_ratio"]) + float(preset["output_ratio"]))

    probes = {}
    for r in read(snap / "probe_records.csv"):
        if (r["input_length"], r["concurrency"], r["probe_region"]) != conditions:
            continue
        t = parse_ts(r["request_time"])
        if start <= t <= as_of:
            probes.setdefault(key(r), []).append(r)

    latest = {}
    for r in read(snap / "eval_runs.csv"):
        if r["context_length"] != "0":
            continue
        k = (key(r), r["suite"])
        if k not in latest or r["window_start"] >= latest[k]["window_start"]:
            latest[k] = r

    raw = {}
    for k, ep in endpoints.items():
        if scope != "full" and ep["model"] != scope.split(":", 1)[1]:
            continue
        recs = probes[k]
        ok = [r for r in recs if r["status"] == "ok"]
        ttft = sorted(float(r["ttft"]) for r in ok)
        speed = sum(float(r["output_tokens"]) / (float(r["total_time"]) - float(r["ttft"])) for r in ok) / len(ok)
        p50, p99 = nearest_rank(ttft, 0.50), nearest_rank(ttft, 0.99)
        completion = len(ok) / len(recs)
        reliability = completion * (1 - min(1.0, max(0.0, (p99 / p50 - 1) / 9)))
        p_in = float(ep["price_input"])
        p_cached = float(ep["price_cached_input"]) if ep["price_cached_input"] else p_in
        price = r_in * ((1 - cache_hit) * p_in + cache_hit * p_cached) + (1 - r_in) * float(ep["price_output"])
        quality = 100 * sum(float(latest[(k, s)]["accuracy"]) for s in suites) / len(suites)
        raw[k] = [speed, p50, price, quality, reliability]

    keys = sorted(raw)
    normalized = {k: [0.0] * 5 for k in keys}
    for i, f in enumerate(FACTORS):
        col = [raw[k][i] for k in keys]
        lo, hi = min(col), max(col)
        for k in keys:
            if hi == lo:
                x = 1.0
            else:
                x = min(1.0, max(0.0, (raw[k][i] - lo) / (hi - lo)))
                if f in LOWER_BETTER:
                    x = 1.0 - x
            normalized[k][i] = x

    scores = {k: sum(w * x for w, x in zip(weights, normalized[k])) for k in keys}
    order = sorted(keys, key=lambda k: (-scores[k], k))
    with open(out, "w", newline="") as f:
        f.write("rank,endpoint,score\n")
        for rank, k in enumerate(order, 1):
            f.write(f"{rank},{k},{scores[k]:.12g}\n")


if __name__ == "__main__":
    if len(sys.argv) != 5:
        sys.exit(__doc__)
    main(*sys.argv[1:])
