"""Independent reference implementations used as test oracles.

Everything here is scalar, pure-``math`` Python written straight from the
benchmark table, sharing no code with the package.
"""

import itertools
import math

E = math.e
PI = math.pi


def sphere(z):
    return sum(v * v for v in z)


def schwefel_222(z):
    if not z:
        return 0.0
    return sum(abs(v) for v in z) + math.prod(abs(v) for v in z)


def cigar(z):
    if not z:
        return 0.0
    return z[0] ** 2 + 1e6 * sum(v * v for v in z[1:])


def discus(z):
    if not z:
        return 0.0
    return 1e6 * z[0] ** 2 + sum(v * v for v in z[1:])


def quartic(z):
    return sum((i + 1) * v**4 for i, v in enumerate(z))


def rastrigin(z):
    return sum(v * v - 10 * math.cos(2 * PI * v) + 10 for v in z)


def ackley(z):
    n = len(z)
    if n == 0:
        return 0.0
    s1 = sum(v * v for v in z) / n
    s2 = sum(math.cos(2 * PI * v) for v in z) / n
    return -20 * math.exp(-0.2 * math.sqrt(s1)) - math.exp(s2) + 20 + E


def griewank(z):
    if not z:
        return 0.0
    p = 1.0
    for i, v in enumerate(z, 1):
        p *= math.cos(v / math.sqrt(i))
    return sum(v * v for v in z) / 4000 - p + 1


def rosenbrock(z):
    return sum(100 * (z[i + 1] - z[i] ** 2) ** 2 + (z[i] - 1) ** 2 for i in range(len(z) - 1))


def levy(z):
    if not z:
        return 0.0
    y = [1 + (v + 1) / 4 for v in z]
    n = len(y)
    total = math.sin(PI * y[0]) ** 2
    for i in range(n - 1):
        total += (y[i] - 1) ** 2 * (1 + 10 * math.sin(y[i + 1]) ** 2)
    total += (y[-1] - 1) ** 2 * (1 + math.sin(2 * PI * y[-1]) ** 2)
    return total


def _u(v, a, k, m):
    if v > a:
        return k * (v - a) ** m
    if v < -a:
        return k * (-v - a) ** m
    return 0.0


def penalized(z):
    if not z:
        return 0.0
    n = len(z)
    inner = math.sin(3 * PI * z[0]) ** 2
    for i in range(n - 1):
        inner += (z[i] - 1) ** 2 * (1 + math.sin(3 * PI * z[i + 1]) ** 2)
    inner += (z[-1] - 1) ** 2 * (1 + math.sin(2 * PI * z[-1]) ** 2)
    return inner / 10 + sum(_u(v, 5, 100, 4) for v in z)


def _g(x, y):
    r2 = x * x + y * y
    return 0.5 + (math.sin(math.sqrt(r2)) ** 2 - 0.5) / (1 + 0.001 * r2) ** 2


def schaffer_f6(z):
    n = len(z)
    return sum(_g(z[i], z[(i + 1) % n]) for i in range(n))


def schwefel_226(z):
    return 418.9828872724338 * len(z) - sum(v * math.sin(math.sqrt(abs(v))) for v in z)


def schaffer_f7(z):
    n = len(z)
    if n < 2:
        return 0.0
    acc = 0.0
    for i in range(n - 1):
        y = math.sqrt(z[i] ** 2 + z[i + 1] ** 2)
        acc += math.sqrt(y) + math.sin(50 * y**0.2) * math.sqrt(y)
    return (acc / (n - 1)) ** 2


def lunacek(z):
    n = len(z)
    if n == 0:
        return 0.0
    mu1 = 2.5
    s = 1 - 1 / (2 * math.sqrt(n) - 8.2)
    mu2 = -math.sqrt((mu1**2 - 1) / s)
    a = sum((v - mu1) ** 2 for v in z)
    b = 1.0 * n + s * sum((v - mu2) ** 2 for v in z)
    return min(a, b) + 10 * sum(1 - math.cos(2 * PI * (v - mu1)) for v in z)


BASE = {
    1: (sphere, 1.0),
    2: (schwefel_222, 10 / 100),
    3: (cigar, 1.0),
    4: (discus, 1.0),
    5: (quartic, 1.28 / 100),
    6: (rastrigin, 5.12 / 100),
    7: (ackley, 32 / 100),
    8: (griewank, 600 / 100),
    9: (rosenbrock, 30 / 100),
    10: (levy, 50 / 100),
    11: (penalized, 50 / 100),
    12: (schaffer_f6, 1.0),
    13: (schwefel_226, 500 / 100),
    14: (schaffer_f7, 1.0),
    15: (lunacek, 10 / 100),
}
ROTATED = {16: 8, 17: 9, 18: 11, 19: 12, 20: 15}
HYBRID = {
    21: (1, 6, 13),
    22: (6, 8, 9),
    23: (3, 7, 9, 11),
    24: (6, 7, 8, 9, 13),
    25: (1, 7, 10, 13, 15),
}


def matvec(m, v):
    return [sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m))]


def block_sizes(k, n):
    q, r = divmod(n, k)
    return [q + (1 if i < r else 0) for i in range(k)]


def raw_value(fid, x, shift, rotation):
    """Unfloored, noise-free benchmark value at `x` (plain lists)."""
    x = list(x)
    if fid in HYBRID:
        total, start = 0.0, 0
        subs = HYBRID[fid]
        for sub, size in zip(subs, block_sizes(len(subs), len(x))):
            fn, factor = BASE[sub]
            xs = x[start:start + size]
            if sub == 13:
                z = [v * factor for v in xs]
            else:
                z = [(v - o) * factor for v, o in zip(xs, shift[start:start + size])]
            total += fn(z)
            start += size
        return total
    base = ROTATED.get(fid, fid)
    fn, factor = BASE[base]
    if fid == 13:
        z = [v * factor for v in x]
    else:
        z = [(v - o) * factor for v, o in zip(x, shift)]
    if fid in ROTATED:
        z = matvec(rotation, z)
    return fn(z)


def exact_rank_sum_p(a, b):
    """Two-sided exact rank-sum p-value by brute force over label subsets."""
    pooled = sorted(list(a) + list(b))
    ranks = {}
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[j + 1] == pooled[i]:
            j += 1
        ranks[pooled[i]] = (i + j) / 2 + 1
        i = j + 1
    values = list(a) + list(b)
    w = sum(ranks[v] for v in a)
    sums = [sum(ranks[values[k]] for k in idx) for idx in itertools.combinations(range(len(values)), len(a))]
    lo = sum(s <= w + 1e-9 for s in sums) / len(sums)
    hi = sum(s >= w - 1e-9 for s in sums) / len(sums)
    return w, min(1.0, 2 * min(lo, hi))
