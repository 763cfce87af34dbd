#!/usr/bin/env python3
"""Recompute summary.csv from trace_seed_*.csv files.

Reads only the raw traces, never the library. With --check, compares against
the summary.csv written by `pls run` and exits 1 on any difference.
"""
import argparse
import csv
import math
import pathlib
import sys

COLUMNS = ["seed_index", "operating_R", "operating_G", "operating_Jr", "operating_Jg",
           "normalized_reward", "normalized_cost", "violations_seed", "violations_exploration",
           "violations_maximization", "optimum_Jr", "best_safe_Jr", "simple_regret",
           "invariant_failures"]


def read_trace(path):
    header, lines = {}, []
    with open(path) as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[2:].rstrip("\n").partition("=")
                header[key] = value
            else:
                lines.append(line)
    return header, list(csv.DictReader(lines))


def summarize(path):
    header, rows = read_trace(path)
    b = float(header["threshold"])
    r_min, r_max = float(header["r_min"]), float(header["r_max"])
    optimum = float(header.get("optimum_jr", "nan"))
    op = rows[-1]
    assert op["phase"] == "operate", f"{path}: last row is not the operating point"
    jr = float(op["true_Jr"]) if op["true_Jr"] != "nan" else float(op["y_r"])
    jg = float(op["true_Jg"]) if op["true_Jg"] != "nan" else float(op["y_g"])
    viol = {"seed": 0, "exploration": 0, "maximization": 0}
    best = -math.inf
    for r in rows[:-1]:
        if r["violation"] == "1":
            viol[r["phase"]] += 1
        tg = float(r["true_Jg"])
        if not math.isnan(tg) and tg <= b:
            best = max(best, float(r["true_Jr"]))
    return {
        "seed_index": int(header["seed_index"]),
        "operating_R": float(op["R"]), "operating_G": float(op["G"]),
        "operating_Jr": jr, "operating_Jg": jg,
        "normalized_reward": (jr - r_min) / (r_max - r_min), "normalized_cost": jg / b,
        "violations_seed": viol["seed"], "violations_exploration": viol["exploration"],
        "violations_maximization": viol["maximization"],
        "optimum_Jr": optimum, "best_safe_Jr": best, "simple_regret": optimum - best,
        "invariant_failures": int(header.get("invariant_failures", "0")),
    }


def same(a, b):
    if isinstance(a, float) and math.isnan(a):
        return isinstance(b, float) and math.isnan(b)
    return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory", type=pathlib.Path)
    ap.add_argument("--check", action="store_true", help="compare with summary.csv")
    args = ap.parse_args()

    traces = sorted(args.directory.glob("trace_seed_*.csv"))
    if not traces:
        sys.exit(f"no traces in {args.directory}")
    ours = [summarize(p) for p in traces]

    if not args.check:
        w = csv.DictWriter(sys.stdout, COLUMNS)
        w.writeheader()
        w.writerows(ours)
        return

    _, theirs = read_trace(args.directory / "summary.csv")
    if len(theirs) != len(ours):
        sys.exit(f"row count differs: {len(theirs)} vs {len(ours)}")
    bad = 0
    for mine, row in zip(ours, theirs):
        for col in COLUMNS:
            value = type(mine[col])(float(row[col])) if isinstance(mine[col], int) else float(row[col])
            if not same(mine[col], value):
                print(f"seed {mine['seed_index']} {col}: summary {row[col]} vs traces {mine[col]!r}")
                bad += 1
    if bad:
        sys.exit(1)
    print(f"{len(ours)} rows agree")


if __name__ == "__main__":
    main()
