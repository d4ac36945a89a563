"""Compiled memory loops used on real hardware.

All loops touch one 8-byte word per cache line.  ``buf`` is the workload
buffer viewed as int64 words; ``order`` holds line indices in visit order.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def read_lines(buf, order, words_per_line, start, n):
    # the running sum is returned so the loads cannot be dropped
    acc = 0
    m = order.shape[0]
    k = start
    for _ in range(n):
        acc += buf[order[k] * words_per_line]
        k += 1
        if k == m:
            k = 0
    return acc, k


@njit(cache=True)
def chase_lines(buf, word, n):
    # each load yields the word index of the next line to visit
    for _ in range(n):
        word = buf[word]
    return word


@njit(cache=True)
def write_lines(buf, order, words_per_line, start, n, value):
    m = order.shape[0]
    k = start
    for _ in range(n):
        buf[order[k] * words_per_line] = value
        k += 1
        if k == m:
            k = 0
    return k


@njit(cache=True)
def copy_lines(buf, order, words_per_line, half, start, n):
    # n counts loads and stores together; an odd n ends on a load
    m = order.shape[0]
    k = start
    done = 0
    acc = 0
    while done < n:
        src = order[k] * words_per_line
        v = buf[src]
        acc += v
        done += 1
        if done < n:
            buf[src + half * words_per_line] = v + 1
            done += 1
        k += 1
        if k == m:
            k = 0
    return acc, k
