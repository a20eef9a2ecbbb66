# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled interaction and metric kernels.

Twin of ``kernels_pure``: identical signatures and bit-identical output,
including the splitmix64 draw sequence (Lemire bounded draws via 128-bit
multiply, 53-bit unit doubles). Keep the two in lockstep; the test suite
compares them on random inputs.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"


cdef inline unsigned long long _next_u64(unsigned long long* state) nogil:
    cdef unsigned long long z
    state[0] = state[0] + 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline unsigned long long _randrange(unsigned long long* state, unsigned long long n) nogil:
    return <unsigned long long>((<u128>_next_u64(state) * <u128>n) >> 64)


cdef inline double _rand_double(unsigned long long* state) nogil:
    return <double>(_next_u64(state) >> 11) * (1.0 / 9007199254740992.0)


def sweep(cnp.int32_t[:, ::1] cells, int rows, int cols,
          cnp.int64_t[::1] order, cnp.uint64_t[::1] seeds):
    """One interaction sweep over ``order``, mutating ``cells`` in place."""
    cdef int f = cells.shape[1]
    cdef int n = order.shape[0]
    cdef cnp.int32_t[::1] diffs = np.empty(f, dtype=np.int32)
    cdef int copies = 0
    cdef int t, idx, r, c, nnb, nb, same, k, nd, pick
    cdef int nbs[4]
    cdef unsigned long long state
    for t in range(n):
        idx = <int>order[t]
        r = idx // cols
        c = idx % cols
        nnb = 0
        if r > 0:
            nbs[nnb] = idx - cols
            nnb += 1
        if r < rows - 1:
            nbs[nnb] = idx + cols
            nnb += 1
        if c > 0:
            nbs[nnb] = idx - 1
            nnb += 1
        if c < cols - 1:
            nbs[nnb] = idx + 1
            nnb += 1
        if nnb == 0:
            continue
        state = seeds[idx]
        nb = nbs[<int>_randrange(&state, <unsigned long long>nnb)]
        same = 0
        for k in range(f):
            if cells[idx, k] == cells[nb, k]:
                same += 1
        if same == 0 or same == f:
            continue
        if _rand_double(&state) < (<double>same) / (<double>f):
            nd = 0
            for k in range(f):
                if cells[idx, k] != cells[nb, k]:
                    diffs[nd] = k
                    nd += 1
            pick = <int>diffs[<int>_randrange(&state, <unsigned long long>nd)]
            cells[idx, pick] = cells[nb, pick]
            copies += 1
    return copies


def local_convergence(cnp.int32_t[:, ::1] cells, int rows, int cols):
    """Mean per-edge similarity; same accumulation order as the pure kernel."""
    cdef int f = cells.shape[1]
    cdef double total = 0.0
    cdef int edges = 0
    cdef int r, c, idx, k, same
    for r in range(rows):
        for c in range(cols):
            idx = r * cols + c
            if c + 1 < cols:
                same = 0
                for k in range(f):
                    if cells[idx, k] == cells[idx + 1, k]:
                        same += 1
                total += (<double>same) / (<double>f)
                edges += 1
            if r + 1 < rows:
                same = 0
                for k in range(f):
                    if cells[idx, k] == cells[idx + cols, k]:
                        same += 1
                total += (<double>same) / (<double>f)
                edges += 1
    if edges == 0:
        raise ZeroDivisionError("grid has no adjacency edges")
    return total / edges


def component_count(cnp.int32_t[:, ::1] cells, int rows, int cols):
    """Connected regions of identical culture vectors (4-neighborhood)."""
    cdef int n = rows * cols
    cdef int f = cells.shape[1]
    cdef cnp.int8_t[::1] visited = np.zeros(n, dtype=np.int8)
    cdef cnp.int32_t[::1] stack = np.empty(n, dtype=np.int32)
    cdef int count = 0
    cdef int top, start, idx, r, c, k, j, nb, nnb, same
    cdef int nbs[4]
    for start in range(n):
        if visited[start]:
            continue
        count += 1
        visited[start] = 1
        top = 0
        stack[top] = start
        top += 1
        while top > 0:
            top -= 1
            idx = stack[top]
            r = idx // cols
            c = idx % cols
            nnb = 0
            if r > 0:
                nbs[nnb] = idx - cols
                nnb += 1
            if r < rows - 1:
                nbs[nnb] = idx + cols
                nnb += 1
            if c > 0:
                nbs[nnb] = idx - 1
                nnb += 1
            if c < cols - 1:
                nbs[nnb] = idx + 1
                nnb += 1
            for j in range(nnb):
                nb = nbs[j]
                if visited[nb]:
                    continue
                same = 1
                for k in range(f):
                    if cells[idx, k] != cells[nb, k]:
                        same = 0
                        break
                if same:
                    visited[nb] = 1
                    stack[top] = nb
                    top += 1
    return count
