"""Independent literal-definition oracles.

Everything here is written from the documented definitions (stream keying,
drop rule, election, means, metric formulas) using scalar Python floats
and math.fsum -- deliberately NOT via mergeforge's kernels or vectorized
code paths, so tests compare two independent evaluations.
"""

import math
from collections import Counter

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(text):
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def stream_uniform(key, i):
    """i-th (0-based) uniform of the keyed stream, on the 2^53 grid."""
    draw = mix64((key + (i + 1) * GOLDEN) & MASK64)
    return float(draw >> 11) * 2.0 ** -53


def tensor_key(seed, name, ordinal):
    return (seed ^ fnv1a64(name) ^ ordinal) & MASK64


# ---- sparsification ---------------------------------------------------------


def dare_sparsify_flat(values, density, seed, name, ordinal):
    """Element-by-element replay of the DARE drop/rescale rule."""
    key = tensor_key(seed, name, ordinal)
    out = []
    for i, v in enumerate(values):
        if stream_uniform(key, i) < density:
            out.append(np.float32(float(np.float32(v)) / density))
        else:
            out.append(np.float32(0.0))
    return out


def magprune_flat(values, shape, density, spread, seed, name, ordinal):
    """Element-by-element replay of the magnitude-adaptive prune rule."""
    key = tensor_key(seed, name, ordinal)
    row_len = shape[-1] if shape else 1
    n = len(values)
    probs = [density] * n
    if row_len > 1:
        for start in range(0, n, row_len):
            row = values[start : start + row_len]
            order = sorted(range(row_len), key=lambda j: (abs(float(row[j])), j))
            for rank, j in enumerate(order):
                k = density - spread / 2.0 + spread * rank / (row_len - 1)
                probs[start + j] = min(1.0, max(0.0, k))
    out = []
    for i, v in enumerate(values):
        if stream_uniform(key, i) < probs[i]:
            out.append(np.float32(float(np.float32(v)) / probs[i]))
        else:
            out.append(np.float32(0.0))
    return out


def trim_flat(values, density):
    """Keep ceil(d*n) largest-|v| elements; ties keep the smaller index."""
    n = len(values)
    k = math.ceil(density * n - 1e-12)
    order = sorted(range(n), key=lambda j: (-abs(float(values[j])), j))
    keep = set(order[:k])
    return [np.float32(values[j]) if j in keep else np.float32(0.0) for j in range(n)]


# ---- election and disjoint mean ---------------------------------------------


def elect_and_mean(per_task_values, weights):
    """Scalar replay of sign election + normalized agreeing mean.

    per_task_values: list over tasks of flat float32 lists (same length).
    Returns the merged float64 list.
    """
    n = len(per_task_values[0])
    merged = []
    for j in range(n):
        total = 0.0
        for vals, lam in zip(per_task_values, weights):
            total = total + lam * float(vals[j])
        sign = -1.0 if total < 0.0 else 1.0
        den = 0.0
        for vals, lam in zip(per_task_values, weights):
            v = float(vals[j])
            agrees = (v > 0 and sign > 0) or (v < 0 and sign < 0)
            den = den + lam * (1.0 if agrees else 0.0)
        acc = 0.0
        for vals, lam in zip(per_task_values, weights):
            v = float(vals[j])
            agrees = (v > 0 and sign > 0) or (v < 0 and sign < 0)
            w = lam / den if (den > 0.0 and agrees) else 0.0
            acc = acc + w * (v if agrees else 0.0)
        merged.append(acc)
    return merged


def compose(base_flat, merged, scale):
    return [np.float32(float(np.float32(b)) + scale * m) for b, m in zip(base_flat, merged)]


def ties_merge_flat(base_flat, per_task_deltas, weights, density, scale):
    trimmed = [trim_flat(d, density) for d in per_task_deltas]
    merged = elect_and_mean(trimmed, weights)
    return compose(base_flat, merged, scale)


def della_merge_flat(base_flat, per_task_deltas, shapes, weights, density, spread, seed, names):
    pruned = [
        magprune_flat(d, shp, density, spread, seed, nm, t)
        for t, (d, shp, nm) in enumerate(zip(per_task_deltas, shapes, names))
    ]
    merged = elect_and_mean(pruned, weights)
    return compose(base_flat, merged, scale=1.0)


# ---- statistics -------------------------------------------------------------


def pearson(xs, ys):
    """Plain two-pass Pearson r with fsum accumulation."""
    n = len(xs)
    mx = math.fsum(float(x) for x in xs) / n
    my = math.fsum(float(y) for y in ys) / n
    num = math.fsum((float(x) - mx) * (float(y) - my) for x, y in zip(xs, ys))
    dx = math.fsum((float(x) - mx) ** 2 for x in xs)
    dy = math.fsum((float(y) - my) ** 2 for y in ys)
    if dx == 0.0 or dy == 0.0:
        return None
    return num / math.sqrt(dx * dy)


def l2_norm(values):
    return math.sqrt(math.fsum(float(v) * float(v) for v in values))


# ---- text metrics -----------------------------------------------------------


def bleu4(hyp_tokens, ref_tokens):
    """Literal BLEU-4: clipped precisions, add-one smoothing on zero-match
    higher orders, exponential brevity penalty."""
    if not hyp_tokens:
        return 0.0
    log_precisions = []
    for n in range(1, 5):
        hyp_grams = Counter(
            tuple(hyp_tokens[i : i + n]) for i in range(len(hyp_tokens) - n + 1)
        )
        ref_grams = Counter(
            tuple(ref_tokens[i : i + n]) for i in range(len(ref_tokens) - n + 1)
        )
        clipped = math.fsum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
        denom = max(len(hyp_tokens) - n + 1, 0)
        if n >= 2 and clipped == 0:
            p = (clipped + 1.0) / (denom + 1.0)
        else:
            if denom == 0 or clipped == 0:
                return 0.0
            p = clipped / denom
        log_precisions.append(math.log(p))
    bp = math.exp(min(0.0, 1.0 - len(ref_tokens) / len(hyp_tokens)))
    return bp * math.exp(math.fsum(log_precisions) / 4.0)


def chrf_pp(hyp, ref, beta=2.0):
    """Order-by-order chrF++: char 1..6 on de-spaced text, word 1..2."""
    hyp_c = "".join(hyp.split())
    ref_c = "".join(ref.split())
    hyp_w = hyp.split()
    ref_w = ref.split()
    fscores = []
    jobs = [(list(hyp_c), list(ref_c), n) for n in range(1, 7)]
    jobs += [(hyp_w, ref_w, n) for n in range(1, 3)]
    for seq_h, seq_r, n in jobs:
        hg = Counter(tuple(seq_h[i : i + n]) for i in range(len(seq_h) - n + 1))
        rg = Counter(tuple(seq_r[i : i + n]) for i in range(len(seq_r) - n + 1))
        th, tr = sum(hg.values()), sum(rg.values())
        if th == 0 and tr == 0:
            continue
        m = sum(min(c, rg[g]) for g, c in hg.items())
        p = m / th if th else 0.0
        r = m / tr if tr else 0.0
        if p == 0.0 and r == 0.0:
            fscores.append(0.0)
        else:
            fscores.append((1 + beta**2) * p * r / (beta**2 * p + r))
    if not fscores:
        return 0.0
    return 100.0 * math.fsum(fscores) / len(fscores)


def rouge_l(hyp_tokens, ref_tokens):
    """Full DP table LCS, then F1."""
    la, lb = len(hyp_tokens), len(ref_tokens)
    if la == 0 or lb == 0:
        return 0.0
    table = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            if hyp_tokens[i - 1] == ref_tokens[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[la][lb]
    if lcs == 0:
        return 0.0
    p, r = lcs / la, lcs / lb
    return 2 * p * r / (p + r)
