"""Writes eval_toy_metrics.csv from the hand-enumerated toy kill matrices.

Independent of the Rust code: DR@k and VAcc@k come from enumerating every
k-subset with exact fractions. Float arithmetic that the report does in f64
(AUC trapezoid, means) is repeated here in the same order so the output can
be compared byte for byte.

Usage: python3 make_eval_golden.py > eval_toy_metrics.csv
"""

from fractions import Fraction
from itertools import combinations

K_LIST = [1, 2, 3, 4, 5, 6]
K_MIN, N_MAX = 1, 6

# rows = tests, columns = wrong solutions in corpus order
MATRICES = {
    "sum-pair": ["0000", "0100", "0010", "1001", "0110", "0100"],
    "max-subarray": ["0000", "1000", "0001", "0100", "1001", "0010"],
    "count-divisors": ["0000", "1100", "1000", "1011", "0011", "0000"],
}


def fmt(x):
    if isinstance(x, int):
        return str(x)
    if x == int(x):
        return str(int(x))
    r = repr(x)
    assert "e" not in r, r
    return r


def report(rows):
    n, m = len(rows), len(rows[0])
    hit = [[c == "1" for c in r] for r in rows]
    detected = [any(hit[i][j] for i in range(n)) for j in range(m)]
    curves = []
    for k in K_LIST:
        if k > n:
            continue
        total, dr_hits, all_hits = 0, 0, 0
        for subset in combinations(range(n), k):
            got = sum(1 for j in range(m) if any(hit[i][j] for i in subset))
            dr_hits += got
            all_hits += got == m
            total += 1
        curves.append((k, float(Fraction(dr_hits, total * m)), float(Fraction(all_hits, total))))
    depc = len({r for r in rows if "1" in r})
    auc = None
    window = [(k, v) for k, _, v in curves if K_MIN <= k <= N_MAX]
    if window and window[0][0] == K_MIN and window[-1][0] == N_MAX:
        area = 0.0
        for (k0, v0), (k1, v1) in zip(window, window[1:]):
            area += (v0 + v1) / 2.0 * float(k1 - k0)
        auc = area / float(N_MAX - K_MIN)
    return {
        "n_tests": n,
        "m_solutions": m,
        "dr": float(Fraction(sum(detected), m)),
        "vacc": 1.0 if all(detected) else 0.0,
        "depc": depc,
        "diversity_ratio": depc / n,
        "auc_at_n": auc,
        "curves": curves,
    }


def mean(values):
    s = 0.0
    for v in values:
        s += v
    return s / len(values)


def emit(scope, r, out):
    out.append(f"{scope},n_tests,,{r['n_tests']}")
    out.append(f"{scope},m_solutions,,{r['m_solutions']}")
    out.append(f"{scope},dr,,{fmt(r['dr'])}")
    out.append(f"{scope},vacc,,{fmt(r['vacc'])}")
    out.append(f"{scope},depc,,{r['depc']}")
    out.append(f"{scope},diversity_ratio,,{fmt(r['diversity_ratio'])}")
    if r["auc_at_n"] is not None:
        out.append(f"{scope},auc_at_n,,{fmt(r['auc_at_n'])}")
    for k, dr, _ in r["curves"]:
        out.append(f"{scope},dr_at_k,{k},{fmt(dr)}")
    for k, _, acc in r["curves"]:
        out.append(f"{scope},vacc_at_k,{k},{fmt(acc)}")


def main():
    out = ["scope,metric,k,value"]
    reports = []
    for pid, rows in MATRICES.items():
        r = report(rows)
        reports.append(r)
        emit(pid, r, out)
    n_total = sum(r["n_tests"] for r in reports)
    depc_total = sum(r["depc"] for r in reports)
    ks = sorted({k for r in reports for k, _, _ in r["curves"]})
    agg = {
        "n_tests": n_total,
        "m_solutions": sum(r["m_solutions"] for r in reports),
        "dr": mean([r["dr"] for r in reports]),
        "vacc": mean([r["vacc"] for r in reports]),
        "depc": depc_total,
        "diversity_ratio": depc_total / n_total,
        "auc_at_n": mean([r["auc_at_n"] for r in reports if r["auc_at_n"] is not None]),
        "curves": [
            (
                k,
                mean([dr for r in reports for kk, dr, _ in r["curves"] if kk == k]),
                mean([a for r in reports for kk, _, a in r["curves"] if kk == k]),
            )
            for k in ks
        ],
    }
    emit("all", agg, out)
    print("\n".join(out))


if __name__ == "__main__":
    main()
