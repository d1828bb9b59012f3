"""Compiled inner loops.

Everything random about the environment comes from a keyed counter-based
function: a vertex key is a 64-bit chain hash of (master seed, letters from
the root outward), and the vertex's private stream is
``u_c = unit(mix64(key + (c + 1) * GOLDEN))``. The same functions back both
the Python-level ``Environment.transition_at`` and the simulation kernels, so
the two agree bit for bit.

All uint64 arithmetic below uses explicit ``np.uint64`` operands; mixing
with signed ints would silently promote to float64 under numba.
"""

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_LETTER_SALT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO53 = 1.0 / 9007199254740992.0

LAW_DIRICHLET = 0
LAW_FINITE = 1

SAMPLER_CATEGORICAL = 0
SAMPLER_RACE = 1

MODE_STRICT = 0
MODE_LITERAL = 1


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def root_key(master):
    return mix64(np.uint64(master) + _GOLDEN)


@njit(cache=True, nogil=True)
def child_key(parent, letter):
    return mix64(parent ^ mix64((np.uint64(letter) + _ONE) * _LETTER_SALT))


@njit(cache=True, nogil=True)
def vertex_key(master, root_first):
    key = root_key(master)
    for i in range(root_first.shape[0]):
        key = child_key(key, root_first[i])
    return key


@njit(cache=True, nogil=True)
def stream_uniform(key, c):
    """Open-interval uniform from position ``c`` of the stream keyed by ``key``."""
    z = mix64(key + (np.uint64(c) + _ONE) * _GOLDEN)
    return (float(z >> _S11) + 0.5) * _TWO53


@njit(cache=True, nogil=True)
def stream_gamma(a, key, c):
    """Gamma(a, 1) draw from the stream; returns (value, next counter)."""
    if a == 1.0:
        return -math.log(stream_uniform(key, c)), c + 1
    boost = 1.0
    if a < 1.0:
        boost = stream_uniform(key, c) ** (1.0 / a)
        c += 1
        a = a + 1.0
    dd = a - 1.0 / 3.0
    cc = 1.0 / math.sqrt(9.0 * dd)
    while True:
        u1 = stream_uniform(key, c)
        u2 = stream_uniform(key, c + 1)
        c += 2
        x = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        v = 1.0 + cc * x
        if v <= 0.0:
            continue
        v = v * v * v
        u3 = stream_uniform(key, c)
        c += 1
        if math.log(u3) < 0.5 * x * x + dd - dd * v + dd * math.log(v):
            return dd * v * boost, c


@njit(cache=True, nogil=True)
def transition_from_key(key, law_code, eps, alpha, vectors, cumw, out):
    d = out.shape[0]
    if law_code == LAW_DIRICHLET:
        c = 0
        total = 0.0
        for s in range(d):
            g, c = stream_gamma(alpha[s], key, c)
            out[s] = g
            total += g
        scale = (1.0 - d * eps) / total
        for s in range(d):
            out[s] = eps + scale * out[s]
    else:
        m = vectors.shape[0]
        j = 0
        if m > 1:
            u = stream_uniform(key, 0)
            while j < m - 1 and u >= cumw[j]:
                j += 1
        for s in range(d):
            out[s] = vectors[j, s]


@njit(cache=True, nogil=True)
def transitions_for_keys(keys, d, law_code, eps, alpha, vectors, cumw):
    out = np.empty((keys.shape[0], d))
    for i in range(keys.shape[0]):
        transition_from_key(keys[i], law_code, eps, alpha, vectors, cumw, out[i])
    return out


@njit(cache=True, nogil=True)
def gamma_samples(a, keys):
    out = np.empty(keys.shape[0])
    for i in range(keys.shape[0]):
        out[i], _ = stream_gamma(a, keys[i], 0)
    return out


@njit(cache=True, nogil=True)
def choose_categorical(p, u):
    d = p.shape[0]
    s = 0
    acc = p[0]
    while s < d - 1 and u >= acc:
        s += 1
        acc += p[s]
    return s


@njit(cache=True, nogil=True)
def choose_race(p, h):
    best = 0
    best_val = h[0] / p[0]
    for s in range(1, p.shape[0]):
        val = h[s] / p[s]
        if val < best_val:
            best = s
            best_val = val
    return best


@njit(cache=True, nogil=True)
def simulate(start_rf, n_steps, inv, master, law_code, eps, alpha, vectors, cumw,
             sampler, uniforms, exps):
    """Run the quenched walk; returns (letters applied, levels)."""
    d = inv.shape[0]
    cap = start_rf.shape[0] + n_steps + 1
    stack_letter = np.empty(cap, np.int64)
    stack_key = np.empty(cap, np.uint64)
    stack_p = np.empty((cap, d))
    depth = 0
    stack_key[0] = root_key(master)
    transition_from_key(stack_key[0], law_code, eps, alpha, vectors, cumw, stack_p[0])
    for i in range(start_rf.shape[0]):
        depth += 1
        stack_letter[depth] = start_rf[i]
        stack_key[depth] = child_key(stack_key[depth - 1], start_rf[i])
        transition_from_key(stack_key[depth], law_code, eps, alpha, vectors, cumw, stack_p[depth])

    # per-letter half of child_key, hoisted out of the loop
    letter_hash = np.empty(d, np.uint64)
    for s in range(d):
        letter_hash[s] = mix64((np.uint64(s) + _ONE) * _LETTER_SALT)
    categorical = sampler == SAMPLER_CATEGORICAL
    steps = np.empty(n_steps, np.uint8)
    levels = np.empty(n_steps + 1, np.int64)
    levels[0] = depth
    for n in range(n_steps):
        if categorical:
            u = uniforms[n]
            s = 0
            acc = stack_p[depth, 0]
            while s < d - 1 and u >= acc:
                s += 1
                acc += stack_p[depth, s]
        else:
            s = choose_race(stack_p[depth], exps[n])
        steps[n] = s
        if depth > 0 and stack_letter[depth] == inv[s]:
            depth -= 1
        else:
            depth += 1
            stack_letter[depth] = s
            stack_key[depth] = mix64(stack_key[depth - 1] ^ letter_hash[s])
            transition_from_key(stack_key[depth], law_code, eps, alpha, vectors, cumw, stack_p[depth])
        levels[n + 1] = depth
    return steps, levels


@njit(cache=True, nogil=True)
def trace_tree(start_rf, steps, inv):
    """Assign node ids to the visited subtree.

    Node 0 is the identity. Returns (nodes per time, node parent, node letter,
    node level, node count); the start's ancestry is inserted first.
    """
    n_steps = steps.shape[0]
    cap = start_rf.shape[0] + n_steps + 1
    parent = np.full(cap, -1, np.int64)
    letter = np.full(cap, -1, np.int64)
    level = np.zeros(cap, np.int64)
    first_child = np.full(cap, -1, np.int64)
    sibling = np.full(cap, -1, np.int64)
    count = 1
    cur = 0
    for i in range(start_rf.shape[0]):
        parent[count] = cur
        letter[count] = start_rf[i]
        level[count] = level[cur] + 1
        sibling[count] = first_child[cur]
        first_child[cur] = count
        cur = count
        count += 1
    nodes = np.empty(n_steps + 1, np.int64)
    nodes[0] = cur
    for n in range(n_steps):
        s = steps[n]
        if cur != 0 and letter[cur] == inv[s]:
            cur = parent[cur]
        else:
            c = first_child[cur]
            while c != -1 and letter[c] != s:
                c = sibling[c]
            if c == -1:
                c = count
                parent[c] = cur
                letter[c] = s
                level[c] = level[cur] + 1
                sibling[c] = first_child[cur]
                first_child[cur] = c
                count += 1
            cur = c
        nodes[n + 1] = cur
    return nodes, parent[:count], letter[:count], level[:count], count


@njit(cache=True, nogil=True)
def regenerations(levels, nodes, node_letter, n_nodes, mode, delta):
    """Regeneration levels and their per-block occupation statistics.

    Returns arrays over qualifying levels in increasing order:
    (level, tau, type, confirmed, Y, Z, L_block, D_block).
    """
    N = levels.shape[0] - 1
    start_level = levels[0]
    max_level = 0
    for n in range(N + 1):
        if levels[n] > max_level:
            max_level = levels[n]
    first_hit = np.full(max_level + 1, -1, np.int64)
    for n in range(N + 1):
        if first_hit[levels[n]] == -1:
            first_hit[levels[n]] = n

    qualifies = np.zeros(max_level + 1, np.bool_)
    if mode == MODE_STRICT:
        sufmin = np.empty(N + 2, np.int64)
        sufmin[N + 1] = max_level + 1
        for n in range(N, -1, -1):
            sufmin[n] = min(levels[n], sufmin[n + 1])
        for k in range(start_level + 1, max_level + 1):
            t = first_hit[k]
            qualifies[k] = sufmin[t + 1] > k
    else:
        reentered = np.zeros(n_nodes, np.bool_)
        for n in range(1, N + 1):
            if levels[n] < levels[n - 1]:
                reentered[nodes[n]] = True
        for k in range(start_level + 1, max_level + 1):
            qualifies[k] = not reentered[nodes[first_hit[k]]]

    m = 0
    for k in range(max_level + 1):
        if qualifies[k]:
            m += 1
    reg_level = np.empty(m, np.int64)
    tau = np.empty(m, np.int64)
    typ = np.empty(m, np.int64)
    confirmed = np.empty(m, np.bool_)
    i = 0
    for k in range(max_level + 1):
        if qualifies[k]:
            reg_level[i] = k
            tau[i] = first_hit[k]
            typ[i] = node_letter[nodes[first_hit[k]]]
            confirmed[i] = max_level >= k + delta
            i += 1

    visits = np.zeros(n_nodes, np.int64)
    for n in range(N + 1):
        visits[nodes[n]] += 1

    Y = np.empty(m, np.int64)
    Z = np.empty(m, np.int64)
    L_block = np.empty(m, np.int64)
    D_block = np.zeros(m, np.int64)
    mark = np.full(n_nodes, -1, np.int64)
    prev_tau = 0
    prev_level = start_level
    for i in range(m):
        Y[i] = tau[i] - prev_tau
        Z[i] = reg_level[i] - prev_level
        L_block[i] = visits[nodes[prev_tau]]
        for n in range(prev_tau, tau[i]):
            x = nodes[n]
            if mark[x] != i:
                mark[x] = i
                D_block[i] += 1
        prev_tau = tau[i]
        prev_level = reg_level[i]
    return reg_level, tau, typ, confirmed, Y, Z, L_block, D_block


@njit(cache=True, nogil=True)
def offspring_samples(seeds, psi, inv, first_step, law_code, eps, alpha, vectors, cumw):
    """Per-environment offspring matrices; shape (len(seeds), d, d).

    Row ``s``: with ``first_step`` False the paths start at the type-``s``
    vertex ``s.e`` and go down its subtree; with ``first_step`` True they start
    at ``e`` and their first step is ``s``.
    """
    d = inv.shape[0]
    out = np.zeros((seeds.shape[0], d, d))
    letter = np.empty(psi + 1, np.int64)
    keys = np.empty(psi + 1, np.uint64)
    pvec = np.empty((psi + 1, d))
    prod = np.empty(psi + 1)
    ssum = np.empty(psi + 1)
    idx = np.empty(psi + 1, np.int64)
    for i in range(seeds.shape[0]):
        rk = root_key(seeds[i])
        for s in range(d):
            if first_step:
                keys[0] = rk
                letter[0] = -1
            else:
                keys[0] = child_key(rk, s)
                letter[0] = s
            j = 1
            idx[1] = -1
            while j >= 1:
                idx[j] += 1
                t = idx[j]
                if t >= d:
                    j -= 1
                    continue
                if j == 1 and first_step:
                    if t != s:
                        continue
                elif t == inv[letter[j - 1]]:
                    continue
                letter[j] = t
                keys[j] = child_key(keys[j - 1], t)
                if j == 1:
                    prod[1] = 1.0
                    ssum[1] = 1.0
                else:
                    back = pvec[j - 1, inv[letter[j - 1]]]
                    prod[j] = prod[j - 1] * back / pvec[j - 1, t]
                    ssum[j] = ssum[j - 1] + prod[j]
                if j == psi:
                    out[i, s, t] += 1.0 / ssum[j]
                else:
                    transition_from_key(keys[j], law_code, eps, alpha, vectors, cumw, pvec[j])
                    j += 1
                    idx[j] = -1
    return out
