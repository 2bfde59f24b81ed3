"""Deliberately naive reference implementations used as test oracles.

Nothing here imports the code under test; each function is the
textbook definition written out with plain loops.
"""

import math


def naive_window_means(values, counts_as_present, size, rolling=True):
    """Mean of present values per window, recomputed from scratch for every window."""
    n = len(values)
    starts = range(n - size + 1) if rolling else range(0, (n // size) * size, size)
    out = []
    for s in starts:
        total, count = 0.0, 0
        for v, ok in zip(values[s : s + size], counts_as_present[s : s + size]):
            if ok:
                total += v
                count += 1
        out.append(total / count if count else None)
    return out


def naive_ratio_windows(numerators, denominators, size):
    out = []
    for s in range(len(numerators) - size + 1):
        num = sum(numerators[s : s + size])
        den = sum(denominators[s : s + size])
        out.append(num / den if den else None)
    return out


def brute_average_ranks(xs):
    """rank_i = 1 + #{j: x_j < x_i} + (#{j: x_j == x_i} - 1) / 2."""
    ranks = []
    for x in xs:
        less = sum(1 for y in xs if y < x)
        equal = sum(1 for y in xs if y == x)
        ranks.append(less + (equal + 1) / 2)
    return ranks


def brute_pearson(xs, ys):
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = sum((a - mx) ** 2 for a in xs)
    syy = sum((b - my) ** 2 for b in ys)
    return sxy / math.sqrt(sxx * syy)


def brute_spearman(xs, ys):
    return brute_pearson(brute_average_ranks(xs), brute_average_ranks(ys))


def classic_spearman_no_ties(xs, ys):
    rx, ry = brute_average_ranks(xs), brute_average_ranks(ys)
    n = len(xs)
    d2 = sum((a - b) ** 2 for a, b in zip(rx, ry))
    return 1 - 6 * d2 / (n * (n * n - 1))


def naive_score(tokens, lexicons, zero_policy):
    """Per-token lookup through lexicons in order; OOV counted per policy."""
    total, found = 0.0, 0
    for tok in tokens:
        for lex in lexicons:
            if tok in lex:
                total += lex[tok]
                found += 1
                break
    denom = len(tokens) if zero_policy else found
    return (total / denom) if denom else None, found


def kth_smallest_distance(values, target, k):
    return sorted(abs(v - target) for v in values)[min(k, len(values)) - 1]
