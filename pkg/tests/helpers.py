"""Shared test utilities: random fields and naive-loop metric oracles."""

import math

import numpy as np

from illusionflow.percept import FlowField


def random_field(rng, height, width, with_invalid=False, scale=5.0):
    u = rng.normal(0, scale, (height, width))
    v = rng.normal(0, scale, (height, width))
    valid = np.ones((height, width), dtype=bool)
    if with_invalid:
        valid = rng.random((height, width)) > 0.2
        u[~valid] = 0.0
        v[~valid] = 0.0
    return FlowField(u, v, valid)


# Independent scalar-loop oracles.  These deliberately avoid numpy reductions
# so they exercise a different code path than the implementations under test.


def corr_oracle(p: FlowField, r: FlowField):
    num = 0.0
    np2 = 0.0
    nr2 = 0.0
    for i in range(p.height):
        for j in range(p.width):
            if not (p.valid[i, j] and r.valid[i, j]):
                continue
            num += p.u[i, j] * r.u[i, j] + p.v[i, j] * r.v[i, j]
            np2 += p.u[i, j] ** 2 + p.v[i, j] ** 2
            nr2 += r.u[i, j] ** 2 + r.v[i, j] ** 2
    denom = math.sqrt(np2) * math.sqrt(nr2)
    if denom < 1e-12:
        return 0.0
    return num / denom


def epe_oracle(p: FlowField, r: FlowField):
    total = 0.0
    n = 0
    for i in range(p.height):
        for j in range(p.width):
            if not (p.valid[i, j] and r.valid[i, j]):
                continue
            total += math.sqrt((p.u[i, j] - r.u[i, j]) ** 2 + (p.v[i, j] - r.v[i, j]) ** 2)
            n += 1
    return total / n


def ae_oracle(p: FlowField, r: FlowField):
    total = 0.0
    n = 0
    for i in range(p.height):
        for j in range(p.width):
            if not (p.valid[i, j] and r.valid[i, j]):
                continue
            pu, pv = p.u[i, j], p.v[i, j]
            ru, rv = r.u[i, j], r.v[i, j]
            num = 1.0 + pu * ru + pv * rv
            den = math.sqrt(1.0 + pu * pu + pv * pv) * math.sqrt(1.0 + ru * ru + rv * rv)
            total += math.acos(min(1.0, max(-1.0, num / den)))
            n += 1
    return total / n


def wilcoxon_enumeration_oracle(samples, alternative):
    """Exhaustive 2^n enumeration of the signed-rank null distribution."""
    d = [x for x in samples if x != 0.0]
    n = len(d)
    absd = [abs(x) for x in d]
    # tie-averaged ranks by sorting
    order = sorted(range(n), key=lambda i: absd[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and absd[order[j + 1]] == absd[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    w_obs = sum(ranks[i] for i in range(n) if d[i] > 0)
    count = 0
    for mask in range(2**n):
        w = sum(ranks[i] for i in range(n) if mask & (1 << i))
        if alternative == "greater" and w >= w_obs - 1e-9:
            count += 1
        elif alternative == "less" and w <= w_obs + 1e-9:
            count += 1
    return count / 2**n
