"""Writes toy series and their exhaustive proxy tables.

toy: 12 steps, 2 channels, L=3, K=4. toy5: the series 1..5, L=2, K=2.

Window ends t run over L..N-1 (1-indexed), channel-major. Cut points are
type-7 quantiles at j/K; label = 1 + #(cut points <= v).
"""
import bisect
import sys
from pathlib import Path

SERIES = [
    [1.5, 10], [2, 9], [3.25, 9], [2, 11], [5, 12], [4.5, 8],
    [6, 8], [3, 13], [7.75, 10], [8, 7], [5, 9.5], [9, 14],
]
TOY5 = [[1], [2], [3], [4], [5]]


def num(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def quantile(sorted_vals, p):
    h = (len(sorted_vals) - 1) * p
    lo = int(h)
    hi = min(lo + 1, len(sorted_vals) - 1)
    return sorted_vals[lo] + (h - lo) * (sorted_vals[hi] - sorted_vals[lo])


def write(out, name, series, L, K):
    N, C = len(series), len(series[0])
    with open(out / f"{name}_series.csv", "w") as f:
        f.write("timestamp," + ",".join(f"ch{c}" for c in range(C)) + "\n")
        for i, row in enumerate(series):
            f.write(f"{i}," + ",".join(num(v) for v in row) + "\n")
    rows = []
    for c in range(C):
        for t in range(L, N):
            window = [series[s][c] for s in range(t - L, t)]
            rows.append((c, t, window, series[t][c]))
    targets = sorted(r[3] for r in rows)
    cuts = [quantile(targets, j / K) for j in range(1, K)]
    with open(out / f"{name}_proxy.csv", "w") as f:
        f.write("channel,t," + ",".join(f"x{i}" for i in range(L)) + ",v,label\n")
        for c, t, window, v in rows:
            label = 1 + bisect.bisect_right(cuts, v)
            f.write(f"{c},{t}," + ",".join(num(x) for x in window) + f",{num(v)},{label}\n")


def main(out_dir):
    out = Path(out_dir)
    write(out, "toy", SERIES, 3, 4)
    write(out, "toy5", TOY5, 2, 2)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
