"""Independent brute-force oracles shared by the unit and acceptance tests."""

import itertools

import numpy as np


def perm_matrix(sigma):
    n = len(sigma)
    U = np.zeros((n, n))
    for x, y in enumerate(sigma):
        U[y, x] = 1.0
    return U


def _perm_power_is_identity(sigma, d):
    x = list(range(len(sigma)))
    for _ in range(d):
        x = [sigma[v] for v in x]
    return x == list(range(len(sigma)))


def enumerate_actions(orders, n):
    """Every tuple of commuting permutations of ``n`` points with ``g_i^{d_i} = 1``."""
    cands = [[s for s in itertools.permutations(range(n)) if _perm_power_is_identity(s, d)] for d in orders]
    for combo in itertools.product(*cands):
        if all(tuple(a[b[x]] for x in range(n)) == tuple(b[a[x]] for x in range(n))
               for a, b in itertools.combinations(combo, 2)):
            yield combo


def crossed_product_step(orders, perms):
    """Block inclusion matrix of ``C*(H)`` inside ``M_n x| H`` computed on ``C^n (x) l2(H)``.

    ``B[chi'][chi]`` is the rank of ``e_chi f_chi'`` with ``e_chi`` the minimal
    projections of ``C*(H)`` and ``f_chi'`` the central projections of the
    crossed product, built from ``W_h = pi(U_h)^* lambda_h``.
    """
    n = len(perms[0]) if perms else 1
    H = list(itertools.product(*(range(d) for d in orders)))
    idx = {h: i for i, h in enumerate(H)}
    gens = [perm_matrix(p) for p in perms]

    def U(h):
        out = np.eye(n)
        for G, c in zip(gens, h):
            out = out @ np.linalg.matrix_power(G, c)
        return out

    def add(h, k):
        return tuple((a + b) % d for a, b, d in zip(h, k, orders))

    def chi(c, h):
        return np.exp(2j * np.pi * sum(ci * hi / d for ci, hi, d in zip(c, h, orders)))

    size = n * len(H)

    def pi(x):
        out = np.zeros((size, size), dtype=complex)
        for k in H:
            Uk = U(k)
            i = idx[k]
            out[i * n:(i + 1) * n, i * n:(i + 1) * n] = Uk.T @ x @ Uk
        return out

    def lam(h):
        S = np.zeros((len(H), len(H)))
        for k in H:
            S[idx[add(k, h)], idx[k]] = 1.0
        return np.kron(S, np.eye(n))

    W = {h: pi(U(h)).conj().T @ lam(h) for h in H}
    L = {h: lam(h) for h in H}
    e = {c: sum(np.conj(chi(c, h)) * L[h] for h in H) / len(H) for c in H}
    f = {c: sum(np.conj(chi(c, h)) * W[h] for h in H) / len(H) for c in H}
    # sanity: f is central; M_n is generated by a simple-spectrum diagonal and the cyclic shift
    gen_mn = [pi(np.diag(np.arange(1.0, n + 1))), pi(perm_matrix([(x + 1) % n for x in range(n)]))]
    for c in H:
        for X in gen_mn + [L[h] for h in H]:
            assert np.allclose(f[c] @ X, X @ f[c])
    return [[int(round(np.trace(e[c1] @ f[c2]).real)) for c1 in H] for c2 in H]
