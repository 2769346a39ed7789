"""Independent computation of the 42-entry meta-feature registry for a small
table, written against the registry definitions with numpy. Prints
`name value` lines with 17 significant digits. The C++ tests freeze these.

usage: python3 metafeature_oracle.py tests/data/reference_30x5.csv
"""
import csv
import math
import sys

import numpy as np

MISSING = {"", "?", "NA", "NaN", "nan", "null"}


def load(path):
    with open(path) as f:
        r = list(csv.reader(f))
    header, body = r[0], r[1:]
    cols = {h: [row[i] for row in body] for i, h in enumerate(header)}
    target = header[-1]
    feats = header[:-1]
    return header, cols, target, feats


def is_num(cells):
    for c in cells:
        if c in MISSING:
            continue
        try:
            float(c)
        except ValueError:
            return False
    return True


def pop_moments(x):
    x = np.asarray(x, dtype=float)
    mu = x.mean()
    d = x - mu
    m2 = np.mean(d**2)
    if m2 > 0:
        return mu, math.sqrt(m2), np.mean(d**3) / m2**1.5, np.mean(d**4) / m2**2 - 3.0, True
    return mu, math.sqrt(m2), 0.0, 0.0, False


def agg(xs):
    if len(xs) == 0:
        return [0.0, 0.0, 0.0, 0.0]
    a = np.asarray(xs, dtype=float)
    return [a.mean(), a.min(), a.max(), a.std()]


def zscore(values, missing):
    present = [v for v, m in zip(values, missing) if not m]
    mu, sd, _, _, ok = pop_moments(present)
    return [0.0 if (m or not ok) else (v - mu) / sd for v, m in zip(values, missing)]


def main(path):
    header, cols, target, feats = load(path)
    n = len(cols[target])
    classes = sorted(set(cols[target]))
    y = np.array([classes.index(v) for v in cols[target]])
    k = len(classes)
    num = [f for f in feats if is_num(cols[f])]
    cat = [f for f in feats if f not in num]
    miss = {f: [c in MISSING for c in cols[f]] for f in feats}
    vals = {f: [0.0 if c in MISSING else float(c) for c in cols[f]] for f in num}

    out = []
    nf = len(feats)
    out += [n, nf, k, len(num), len(cat), len(num) / nf, nf / n]
    cells = sum(sum(miss[f]) for f in feats)
    out.append(cells / (n * nf))
    out.append(sum(any(miss[f][r] for f in feats) for r in range(n)) / n)
    out.append(sum(any(miss[f]) for f in feats) / nf)

    p = np.bincount(y, minlength=k) / n
    H = -sum(q * math.log2(q) for q in p if q > 0)
    out += [H, H / math.log2(k), p.min(), p.max(), p.mean(), p.std(), p.max() / p.min()]

    stats = {"mean": [], "std": [], "skew": [], "kurt": []}
    outliers = 0
    ncells = 0
    for f in num:
        present = [v for v, m in zip(vals[f], miss[f]) if not m]
        mu, sd, sk, ku, ok = pop_moments(present)
        stats["mean"].append(mu)
        stats["std"].append(sd)
        stats["skew"].append(sk)
        stats["kurt"].append(ku)
        ncells += len(present)
        if ok:
            outliers += sum(abs(v - mu) > 3 * sd for v in present)
    for key in ("mean", "std", "skew", "kurt"):
        out += agg(stats[key])
    out.append(outliers / ncells)

    cards = [len({c for c, m in zip(cols[f], miss[f]) if not m}) for f in cat]
    out += agg(cards)

    # Leave-one-out 1-NN on z-scored numeric plus categorical mismatch.
    Z = np.array([zscore(vals[f], miss[f]) for f in num]).T
    C = [["" if m else c for c, m in zip(cols[f], miss[f])] for f in cat]
    correct = 0
    for i in range(n):
        d = np.sum((Z - Z[i]) ** 2, axis=1)
        for col in C:
            d = d + np.array([0.0 if col[j] == col[i] else 1.0 for j in range(n)])
        d[i] = np.inf
        j = int(np.argmin(d))
        if np.sum(d == d[j]) > 1:
            print("warning: 1-NN tie at row", i, file=sys.stderr)
        correct += y[j] == y[i]
    nn = correct / n

    # Decision stump: best single split on one feature.
    best = 0
    for f in num:
        present = [v for v, m in zip(vals[f], miss[f]) if not m]
        fill = float(np.mean(present))
        x = np.array([fill if m else v for v, m in zip(vals[f], miss[f])])
        for t in np.unique(x)[:-1]:
            left = y[x <= t]
            right = y[x > t]
            score = np.bincount(left, minlength=k).max() + np.bincount(right, minlength=k).max()
            best = max(best, score)
    for f in cat:
        groups = {}
        for c, m, lab in zip(cols[f], miss[f], y):
            groups.setdefault("" if m else c, []).append(lab)
        best = max(best, sum(np.bincount(g, minlength=k).max() for g in groups.values()))
    majority = p.max()
    stump = max(majority, best / n)

    # Nearest centroid on z-scored numeric features over all rows.
    cent = np.array([Z[y == c].mean(axis=0) for c in range(k)])
    pred = np.argmin(((Z[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2), axis=1)
    nc = float(np.mean(pred == y))

    out += [nn, stump, majority, nc]
    names = (
        "n_rows n_features n_classes n_numeric_features n_categorical_features "
        "numeric_feature_ratio dimensionality missing_cell_ratio rows_with_missing_ratio "
        "features_with_missing_ratio class_entropy normalized_class_entropy class_prob_min "
        "class_prob_max class_prob_mean class_prob_std class_imbalance_ratio"
    ).split()
    for s in ("mean", "std", "skewness", "kurtosis"):
        for a in ("mean", "min", "max", "std"):
            names.append(f"numeric_{s}_{a}")
    names.append("numeric_outlier_ratio")
    names += [f"categorical_cardinality_{a}" for a in ("mean", "min", "max", "std")]
    names += [
        "landmark_1nn_accuracy",
        "landmark_stump_accuracy",
        "landmark_majority_accuracy",
        "landmark_nearest_centroid_accuracy",
    ]
    assert len(names) == len(out) == 42
    for name, v in zip(names, out):
        print(f"{name} {float(v):.17g}")


if __name__ == "__main__":
    main(sys.argv[1])
