# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Operation order matches ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    RR = 0
    PF = 1


def max_free_run(occupied):
    cdef const unsigned char[:] occ = np.ascontiguousarray(occupied, dtype=np.uint8)
    cdef Py_ssize_t i, n = occ.shape[0]
    cdef long largest = 0, free_total = 0, run = 0
    for i in range(n):
        if occ[i]:
            run = 0
        else:
            run += 1
            free_total += 1
            if run > largest:
                largest = run
    return largest, free_total


cdef void _allocate_rr(long* active, long k, long* need, long* alloc, long n_prb,
                       long start, long* pending, long* still) nogil:
    cdef long i, u, give, share, n_pending = k, n_still, remaining = n_prb
    for i in range(k):
        alloc[active[i]] = 0
        pending[i] = active[(start + i) % k]
    while remaining > 0 and n_pending > 0:
        share = remaining // n_pending
        if share == 0:
            for i in range(remaining):
                alloc[pending[i]] += 1
            remaining = 0
            break
        n_still = 0
        for i in range(n_pending):
            u = pending[i]
            give = need[u] - alloc[u]
            if share < give:
                give = share
            alloc[u] += give
            remaining -= give
            if alloc[u] < need[u]:
                still[n_still] = u
                n_still += 1
        for i in range(n_still):
            pending[i] = still[i]
        n_pending = n_still


cdef void _allocate_pf(long* active, long k, long* need, long* alloc, long n_prb,
                       double* bits_per_prb, double* avg, long* order, double* metric) nogil:
    cdef long i, j, u, give, remaining = n_prb
    cdef double m
    for i in range(k):
        u = active[i]
        metric[u] = -(bits_per_prb[u] * n_prb / avg[u])
    # insertion sort on (metric, index); active is already in index order
    for i in range(k):
        u = active[i]
        m = metric[u]
        j = i
        while j > 0 and (metric[order[j - 1]] > m or
                         (metric[order[j - 1]] == m and order[j - 1] > u)):
            order[j] = order[j - 1]
            j -= 1
        order[j] = u
    for i in range(k):
        u = order[i]
        give = need[u] if need[u] < remaining else remaining
        alloc[u] = give
        remaining -= give


def simulate_cell(bits_per_prb_in, max_prb_in, file_start_in, file_arrival_tti_in, file_bits_in,
                  long n_prb, long n_tti, int scheduler, double pf_window):
    cdef double[::1] bpp = np.ascontiguousarray(bits_per_prb_in, dtype=np.float64)
    cdef long[::1] max_prb = np.ascontiguousarray(max_prb_in, dtype=np.int64)
    cdef long[::1] fstart = np.ascontiguousarray(file_start_in, dtype=np.int64)
    cdef long[::1] arrival = np.ascontiguousarray(file_arrival_tti_in, dtype=np.int64)
    cdef double[::1] fbits = np.ascontiguousarray(file_bits_in, dtype=np.float64)
    cdef long n_users = bpp.shape[0]
    cdef long n_files = fbits.shape[0]

    completion_arr = np.full(n_files, -1, dtype=np.int64)
    served_arr = np.zeros(n_files, dtype=np.float64)
    cdef long[::1] completion = completion_arr
    cdef double[::1] served = served_arr

    cdef long* head = <long*> malloc(n_users * sizeof(long))
    cdef long* next_arr = <long*> malloc(n_users * sizeof(long))
    cdef long* need = <long*> malloc(n_users * sizeof(long))
    cdef long* alloc = <long*> malloc(n_users * sizeof(long))
    cdef long* active = <long*> malloc(n_users * sizeof(long))
    cdef long* scratch1 = <long*> malloc(n_users * sizeof(long))
    cdef long* scratch2 = <long*> malloc(n_users * sizeof(long))
    cdef double* backlog = <double*> malloc(n_users * sizeof(double))
    cdef double* avg = <double*> malloc(n_users * sizeof(double))
    cdef double* metric = <double*> malloc(n_users * sizeof(double))

    cdef double a = 1.0 - 1.0 / pf_window
    cdef double b = 1.0 / pf_window
    cdef long used_prb = 0, rr_ptr = 0, t = 0, k, u, i, f, end, nxt, cand, n
    cdef double capacity, delivered, rem

    try:
        for u in range(n_users):
            head[u] = fstart[u]
            next_arr[u] = fstart[u]
            backlog[u] = 0.0
            avg[u] = bpp[u]
        with nogil:
            while t < n_tti:
                k = 0
                for u in range(n_users):
                    end = fstart[u + 1]
                    while next_arr[u] < end and arrival[next_arr[u]] <= t:
                        backlog[u] += fbits[next_arr[u]]
                        next_arr[u] += 1
                    if head[u] < next_arr[u]:
                        active[k] = u
                        k += 1
                if k == 0:
                    nxt = -1
                    for u in range(n_users):
                        if next_arr[u] < fstart[u + 1]:
                            cand = arrival[next_arr[u]]
                            if nxt < 0 or cand < nxt:
                                nxt = cand
                    if nxt < 0:
                        break
                    t = nxt
                    continue

                for i in range(k):
                    u = active[i]
                    n = <long> ceil(backlog[u] / bpp[u])
                    if n < 1:
                        n = 1
                    need[u] = n if n < max_prb[u] else max_prb[u]
                if scheduler == PF:
                    _allocate_pf(active, k, need, alloc, n_prb, &bpp[0], avg, scratch1, metric)
                else:
                    _allocate_rr(active, k, need, alloc, n_prb, rr_ptr % k, scratch1, scratch2)
                rr_ptr += 1

                for i in range(k):
                    u = active[i]
                    used_prb += alloc[u]
                    capacity = alloc[u] * bpp[u]
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
    finally:
        free(head); free(next_arr); free(need); free(alloc); free(active)
        free(scratch1); free(scratch2); free(backlog); free(avg); free(metric)

    return completion_arr, served_arr, used_prb
