"""Independent brute-force reference implementations used as test oracles."""
import itertools
import math


def monotone_paths(n, m):
    """Every path from (0, 0) to (n-1, m-1) using (1,0), (0,1), (1,1) steps."""
    def walk(i, j):
        if (i, j) == (n - 1, m - 1):
            yield [(i, j)]
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                for rest in walk(a, b):
                    yield [(i, j)] + rest
    return list(walk(0, 0))


def path_cost(M, path):
    return sum(M[i][j] for i, j in path)


def brute_force_alignment(M):
    n, m = len(M), len(M[0])
    return min(monotone_paths(n, m), key=lambda p: path_cost(M, p))


def brute_force_assignment(C):
    """Minimum over all injective row->column (or column->row) maps, summed in row order."""
    n, m = len(C), len(C[0])
    best = math.inf
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            s = 0.0
            for r, c in enumerate(cols):
                s += C[r][c]
            best = min(best, s)
    else:
        for rows in itertools.permutations(range(n), m):
            pairs = sorted(zip(rows, range(m)))
            s = 0.0
            for r, c in pairs:
                s += C[r][c]
            best = min(best, s)
    return best


def straight_jarodzka(A, B):
    """Planar score written out with plain loops and a brute-force alignment.

    A and B are lists of (x, y, t) with at least two fixations each.
    """
    D = math.sqrt(2)

    def sacc(P):
        return [(P[k + 1][0] - P[k][0], P[k + 1][1] - P[k][1]) for k in range(len(P) - 1)]

    def durs(P):
        d = [P[k + 1][2] - P[k][2] for k in range(len(P) - 1)]
        return d + [sum(d) / len(d)]

    u, v = sacc(A), sacc(B)
    M = [[math.hypot(a[0] - b[0], a[1] - b[1]) for b in v] for a in u]
    path = brute_force_alignment(M)
    da, db = durs(A), durs(B)
    acc = [0.0] * 5
    for i, j in path:
        acc[0] += M[i][j] / (2 * D)
        acc[1] += abs(math.hypot(*u[i]) - math.hypot(*v[j])) / D
        ang = abs(math.atan2(u[i][1], u[i][0]) - math.atan2(v[j][1], v[j][0]))
        acc[2] += min(ang, 2 * math.pi - ang) / math.pi
        acc[3] += math.hypot(A[i + 1][0] - B[j + 1][0], A[i + 1][1] - B[j + 1][1]) / D
        x, y = da[i + 1], db[j + 1]
        acc[4] += abs(x - y) / max(x, y) if max(x, y) > 0 else 0.0
    comps = [a / len(path) for a in acc]
    return sum(comps) / 5, comps


def finite_difference_check(loss_fn, params, n_probes=10, h=1e-4, seed=0):
    """Compare autograd gradients with central differences on a probe subset.

    ``loss_fn()`` must be a pure function of the parameter values (fixed
    dropout masks, no running-statistic updates). Returns a dict
    ``name -> worst relative error`` where the relative error of a probe is
    ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    import numpy as np
    import torch

    for p in params.values():
        p.grad = None
    loss = loss_fn()
    grads = torch.autograd.grad(loss, list(params.values()))
    rng = np.random.default_rng(seed)
    worst = {}
    with torch.no_grad():
        for (name, p), g in zip(params.items(), grads):
            flat = p.view(-1)
            gflat = g.reshape(-1)
            k = min(n_probes, flat.numel())
            errs = []
            for idx in rng.choice(flat.numel(), size=k, replace=False):
                old = flat[idx].item()
                flat[idx] = old + h
                up = loss_fn().item()
                flat[idx] = old - h
                down = loss_fn().item()
                flat[idx] = old
                num = (up - down) / (2 * h)
                ana = gflat[idx].item()
                errs.append(abs(ana - num) / max(abs(ana), abs(num), 1e-8))
            worst[name] = max(errs)
    return worst
