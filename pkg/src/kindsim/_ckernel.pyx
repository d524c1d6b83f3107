# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event kernel; same contract as ``_pykernel.run_chunk``."""
from libc.math cimport log1p
from libc.stdint cimport uint64_t, int64_t, uint8_t

cdef double TWO_M53 = 1.0 / 9007199254740992.0

cdef enum:
    CONTINUE = 0
    HIT_MINUS = 1
    HIT_PLUS = 2
    ABSORBED_PLUS = 3
    ABSORBED_MINUS = 4


def run_chunk(double[::1] beliefs, const int64_t[::1] src, const int64_t[::1] dst,
              double mu_plus, double mu_minus, const uint64_t[::1] raw,
              Py_ssize_t pos, Py_ssize_t max_events, double total, double clock,
              double lower, double upper, bint thresholds, double delta,
              bint absorption, Py_ssize_t n_plus_ok, Py_ssize_t n_minus_ok,
              int64_t[::1] log_edge=None, uint8_t[::1] log_kind=None,
              double[::1] log_old=None, double[::1] log_new=None,
              double[::1] log_dt=None):
    cdef Py_ssize_t n = beliefs.shape[0]
    cdef Py_ssize_t m = src.shape[0]
    cdef double rate = <double>m
    cdef Py_ssize_t k = (raw.shape[0] - pos) // 3
    if max_events < k:
        k = max_events
    if k <= 0:
        return 0, pos, total, clock, n_plus_ok, n_minus_ok, CONTINUE
    cdef bint record = log_edge is not None
    cdef double plus_lim = 1.0 - delta
    cdef double minus_lim = -1.0 + delta
    cdef int status = CONTINUE
    cdef Py_ssize_t done = 0
    cdef Py_ssize_t e, x, y
    cdef double u_t, u_e, u_k, dt, pk, old, new
    cdef uint8_t kind

    with nogil:
        while done < k:
            u_t = (raw[pos] >> 11) * TWO_M53
            u_e = (raw[pos + 1] >> 11) * TWO_M53
            u_k = (raw[pos + 2] >> 11) * TWO_M53
            pos += 3
            dt = -log1p(-u_t) / rate
            e = <Py_ssize_t>(u_e * rate)
            if e >= m:
                e = m - 1
            x = src[e]
            y = dst[e]
            pk = 0.5 + 0.5 * beliefs[x]
            if pk > 1.0:
                pk = 1.0
            elif pk < 0.0:
                pk = 0.0
            old = beliefs[y]
            if u_k < pk:
                kind = 1
                new = old + mu_plus * (1.0 - old)
            else:
                kind = 0
                new = old - mu_minus * (1.0 + old)
            if new > 1.0:
                new = 1.0
            elif new < -1.0:
                new = -1.0
            beliefs[y] = new
            total += new - old
            clock += dt
            if record:
                log_edge[done] = e
                log_kind[done] = kind
                log_old[done] = old
                log_new[done] = new
                log_dt[done] = dt
            done += 1
            if absorption:
                if old >= plus_lim:
                    if new < plus_lim:
                        n_plus_ok -= 1
                elif new >= plus_lim:
                    n_plus_ok += 1
                if old <= minus_lim:
                    if new > minus_lim:
                        n_minus_ok -= 1
                elif new <= minus_lim:
                    n_minus_ok += 1
            if thresholds:
                if total < lower:
                    status = HIT_MINUS
                    break
                if total > upper:
                    status = HIT_PLUS
                    break
            if absorption:
                if n_plus_ok == n:
                    status = ABSORBED_PLUS
                    break
                if n_minus_ok == n:
                    status = ABSORBED_MINUS
                    break

    return done, pos, total, clock, n_plus_ok, n_minus_ok, status
