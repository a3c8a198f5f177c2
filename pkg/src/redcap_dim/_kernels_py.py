"""Pure-Python kernels. ``_kernels.pyx`` mirrors these operation for
operation, so both backends return bit-identical results.
"""

import math

import numpy as np

RR = 0
PF = 1


def max_free_run(occupied):
    """Return ``(largest contiguous free run, total free)`` of a 0/1 occupancy vector."""
    largest = 0
    free = 0
    run = 0
    for v in occupied:
        if v:
            run = 0
        else:
            run += 1
            free += 1
            if run > largest:
                largest = run
    return largest, free


def _allocate_rr(active, need, n_prb, start):
    alloc = {u: 0 for u in active}
    k = len(active)
    pending = [active[(start + i) % k] for i in range(k)]
    remaining = n_prb
    while remaining > 0 and pending:
        share = remaining // len(pending)
        if share == 0:
            for u in pending[:remaining]:
                alloc[u] += 1
            remaining = 0
            break
        still = []
        for u in pending:
            give = min(share, need[u] - alloc[u])
            alloc[u] += give
            remaining -= give
            if alloc[u] < need[u]:
                still.append(u)
        pending = still
    return alloc


def _allocate_pf(active, need, n_prb, bits_per_prb, avg):
    # highest metric first; ties go to the lower user index
    order = sorted(active, key=lambda u: (-(bits_per_prb[u] * n_prb / avg[u]), u))
    alloc = {}
    remaining = n_prb
    for u in order:
        give = need[u] if need[u] < remaining else remaining
        alloc[u] = give
        remaining -= give
    return alloc


def simulate_cell(bits_per_prb, max_prb, file_start, file_arrival_tti, file_bits,
                  n_prb, n_tti, scheduler, pf_window):
    """Schedule one cell's downlink PRBs TTI by TTI.

    ``file_start`` is a CSR offset array: files of user ``u`` occupy
    ``file_start[u]:file_start[u + 1]`` in arrival order. Returns
    ``(completion_tti, served_bits, used_prb)`` where ``completion_tti`` is
    the TTI index at whose end the file finished, or -1.
    """
    n_users = len(bits_per_prb)
    n_files = len(file_bits)
    bits_per_prb = [float(x) for x in bits_per_prb]
    max_prb = [int(x) for x in max_prb]
    file_start = [int(x) for x in file_start]
    arrival = [int(x) for x in file_arrival_tti]
    fbits = [float(x) for x in file_bits]

    completion = [-1] * n_files
    served = [0.0] * n_files
    head = file_start[:n_users]
    next_arr = file_start[:n_users]
    backlog = [0.0] * n_users
    avg = list(bits_per_prb)
    a = 1.0 - 1.0 / pf_window
    b = 1.0 / pf_window
    used_prb = 0
    rr_ptr = 0

    t = 0
    while t < n_tti:
        active = []
        for u in range(n_users):
            end = file_start[u + 1]
            while next_arr[u] < end and arrival[next_arr[u]] <= t:
                backlog[u] += fbits[next_arr[u]]
                next_arr[u] += 1
            if head[u] < next_arr[u]:
                active.append(u)
        if not active:
            nxt = -1
            for u in range(n_users):
                if next_arr[u] < file_start[u + 1]:
                    cand = arrival[next_arr[u]]
                    if nxt < 0 or cand < nxt:
                        nxt = cand
            if nxt < 0:
                break
            t = nxt
            continue

        need = {}
        for u in active:
            n = int(math.ceil(backlog[u] / bits_per_prb[u]))
            if n < 1:
                n = 1
            need[u] = n if n < max_prb[u] else max_prb[u]
        if scheduler == PF:
            alloc = _allocate_pf(active, need, n_prb, bits_per_prb, avg)
        else:
            alloc = _allocate_rr(active, need, n_prb, rr_ptr % len(active))
        rr_ptr += 1

        for u in active:
            prbs = alloc[u]
            used_prb += prbs
            capacity = prbs * bits_per_prb[u]
            delivered = 0.0
            while capacity > 0.0 and head[u] < next_arr[u]:
                f = head[u]
                rem = fbits[f] - served[f]
                if capacity >= rem:
                    served[f] = fbits[f]
                    completion[f] = t
                    capacity -= rem
                    delivered += rem
                    head[u] += 1
                else:
                    served[f] += capacity
                    delivered += capacity
                    capacity = 0.0
            if head[u] == next_arr[u]:
                backlog[u] = 0.0
            else:
                backlog[u] -= delivered
            avg[u] = a * avg[u] + b * delivered
        t += 1

    return (np.asarray(completion, dtype=np.int64), np.asarray(served, dtype=np.float64),
            used_prb)
