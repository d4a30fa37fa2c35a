# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _kernel_py.assign; same search order, same results."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef double EPS = 1e-9


cdef struct Search:
    int nd
    int nf
    double *c
    long *left
    int *fogs
    int nfogs
    double *suffix
    int *cur
    int *best_asg
    double best
    int found
    long nodes


cdef void dfs(Search *s, int i, double acc) nogil:
    cdef int k, j
    cdef double bound
    s.nodes += 1
    if i == s.nd:
        s.best = acc
        s.found = 1
        for k in range(s.nd):
            s.best_asg[k] = s.cur[k]
        return
    for k in range(s.nfogs):
        j = s.fogs[k]
        if s.left[j] == 0:
            continue
        bound = acc + s.c[i * s.nf + j] + s.suffix[i + 1]
        if s.found == 0:
            if bound > s.best + EPS:
                continue
        elif bound >= s.best - EPS:
            continue
        s.left[j] -= 1
        s.cur[i] = j
        dfs(s, i + 1, acc + s.c[i * s.nf + j])
        s.left[j] += 1


def assign(c, cap, double ub=INFINITY):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] cc = np.ascontiguousarray(c, dtype=np.float64)
    cdef int nd = cc.shape[0]
    cdef int nf = cc.shape[1]
    cdef cnp.ndarray[long, ndim=1, mode="c"] left = np.ascontiguousarray(cap, dtype=np.int_).copy()
    cdef cnp.ndarray[int, ndim=1, mode="c"] fogs = np.ascontiguousarray(np.flatnonzero(left > 0), dtype=np.intc)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] suffix = np.zeros(nd + 1)
    cdef cnp.ndarray[int, ndim=1, mode="c"] cur = np.zeros(max(nd, 1), dtype=np.intc)
    cdef cnp.ndarray[int, ndim=1, mode="c"] best_asg = np.zeros(max(nd, 1), dtype=np.intc)
    cdef int i
    cdef Search s
    if nd and fogs.shape[0] == 0:
        return float("inf"), None, 0
    for i in range(nd - 1, -1, -1):
        suffix[i] = suffix[i + 1] + np.asarray(cc)[i, fogs].min()
    s.nd = nd
    s.nf = nf
    s.c = &cc[0, 0] if nd else NULL
    s.left = &left[0] if nf else NULL
    s.fogs = &fogs[0] if fogs.shape[0] else NULL
    s.nfogs = fogs.shape[0]
    s.suffix = &suffix[0]
    s.cur = &cur[0]
    s.best_asg = &best_asg[0]
    s.best = ub
    s.found = 0
    s.nodes = 0
    with nogil:
        dfs(&s, 0, 0.0)
    if not s.found:
        return float("inf"), None, s.nodes
    return s.best, [int(best_asg[i]) for i in range(nd)], s.nodes
