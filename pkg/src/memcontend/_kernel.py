"""Compiled event loop behind :func:`memcontend.sim.simulate`.

Mirrors the pure-Python engine in ``sim.py`` step for step; the two are
cross-checked by the test suite.
"""

import numpy as np
from numba import njit

INF = np.iinfo(np.int64).max


@njit(cache=True)
def run(lines, writes, offsets, lengths, active, idle_cycles, start, task, task_total,
        num_sets, assoc, hit_cost, read_cost, write_cost, turnaround, fifo):
    n = offsets.shape[0]
    tags = np.full((num_sets, assoc), -1, np.int64)
    stamp = np.zeros((num_sets, assoc), np.int64)
    clock = 0

    next_t = np.full(n, INF, np.int64)
    for i in range(n):
        if active[i] > 0:
            next_t[i] = 0
    pos = start.copy()
    slot = np.zeros(n, np.int64)
    n_acc = np.zeros(n, np.int64)
    n_hit = np.zeros(n, np.int64)
    n_ref = np.zeros(n, np.int64)
    n_wr = np.zeros(n, np.int64)

    pend_arr = np.full(n, -1, np.int64)
    pend_wr = np.zeros(n, np.bool_)
    busy_until = 0
    last_wr = -1
    last_served = n - 1
    dispatch_t = INF
    end = 0
    mask = num_sets - 1

    while True:
        bi = -1
        bt = INF
        for i in range(n):
            if next_t[i] < bt:
                bt = next_t[i]
                bi = i
        # dispatch runs after every issue due at the same cycle
        if dispatch_t < bt:
            t = dispatch_t
            dispatch_t = INF
            j = -1
            if fifo:
                best = INF
                for k in range(n):
                    if pend_arr[k] >= 0 and pend_arr[k] < best:
                        best = pend_arr[k]
                        j = k
            else:
                for step in range(1, n + 1):
                    k = (last_served + step) % n
                    if pend_arr[k] >= 0:
                        j = k
                        break
            if j >= 0:
                w = pend_wr[j]
                cost = write_cost if w else read_cost
                wi = 1 if w else 0
                if last_wr >= 0 and last_wr != wi:
                    cost += turnaround
                busy_until = t + cost
                last_wr = wi
                last_served = j
                pend_arr[j] = -1
                next_t[j] = busy_until
                dispatch_t = busy_until
            continue
        if bi < 0:
            break
        t = bt
        i = bi
        if i == task and n_acc[i] == task_total:
            end = t
            break
        if slot[i] == active[i]:
            slot[i] = 0
            if idle_cycles[i] > 0:
                next_t[i] = t + idle_cycles[i]
                continue
        slot[i] += 1
        k = pos[i] % lengths[i]
        pos[i] += 1
        line = lines[offsets[i] + k]
        wr = writes[offsets[i] + k]
        n_acc[i] += 1
        if wr:
            n_wr[i] += 1
        s = line & mask
        clock += 1
        way = -1
        for w in range(assoc):
            if tags[s, w] == line:
                way = w
                break
        if way >= 0:
            stamp[s, way] = clock
            n_hit[i] += 1
            next_t[i] = t + hit_cost
            continue
        n_ref[i] += 1
        victim = 0
        oldest = INF
        for w in range(assoc):
            if tags[s, w] < 0:
                victim = w
                break
            if stamp[s, w] < oldest:
                oldest = stamp[s, w]
                victim = w
        tags[s, victim] = line
        stamp[s, victim] = clock
        pend_arr[i] = t
        pend_wr[i] = wr
        next_t[i] = INF
        if busy_until <= t and dispatch_t == INF:
            dispatch_t = t

    return end, n_acc, n_hit, n_ref, n_wr
