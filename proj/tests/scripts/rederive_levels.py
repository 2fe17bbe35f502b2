#!/usr/bin/env python3
"""Recompute level-set statistics from a records file and compare them with
a scatter CSV.

    rederive_levels.py RECORDS.jsonl LEVELS.csv [--tol 1e-9]

Shares no code with the C++ library: edit distances are recomputed with a
plain dynamic program and entropies with math.fsum.
"""

import argparse
import csv
import json
import math
import sys
from collections import Counter, defaultdict


def edit_distance(a, b):
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j - 1] + (x != y), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]


def entropy_bits(counts):
    total = sum(counts.values())
    return -math.fsum((c / total) * math.log2(c / total) for c in counts.values())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("records")
    ap.add_argument("levels")
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    pooled = defaultdict(Counter)
    instances = Counter()
    mismatched = 0
    with open(args.records) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("filtered") or rec.get("response") is None:
                continue
            d = edit_distance(rec["response"], rec["answer"])
            if rec.get("distance") is not None and rec["distance"] != d:
                mismatched += 1
            instances[d] += 1
            pooled[d].update(rec["answer"])

    with open(args.levels, newline="") as fh:
        rows = list(csv.DictReader(fh))

    problems = []
    if mismatched:
        problems.append(f"{mismatched} stored distances disagree")
    if sorted(int(r["e"]) for r in rows) != sorted(pooled):
        problems.append("level sets differ")
    for row in rows:
        e = int(row["e"])
        counts = pooled.get(e, Counter())
        if not counts:
            continue
        h = entropy_bits(counts)
        norm = 1.0 if len(counts) <= 1 else h / math.log2(len(counts))
        if int(row["count"]) != instances[e]:
            problems.append(f"e={e}: count {row['count']} != {instances[e]}")
        if int(row["unique_tokens"]) != len(counts):
            problems.append(f"e={e}: unique {row['unique_tokens']} != {len(counts)}")
        if abs(float(row["entropy_bits"]) - h) > args.tol:
            problems.append(f"e={e}: entropy {row['entropy_bits']} != {h!r}")
        if abs(float(row["normalized"]) - norm) > args.tol:
            problems.append(f"e={e}: normalized {row['normalized']} != {norm!r}")

    if problems:
        for p in problems[:20]:
            print("mismatch:", p, file=sys.stderr)
        return 1
    print(f"{len(rows)} level sets re-derived from {sum(instances.values())} records")
    return 0


if __name__ == "__main__":
    sys.exit(main())
