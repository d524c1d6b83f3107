"""Pure-Python event kernel.

Mirrors ``_ckernel.pyx`` operation for operation; the two must stay in sync
so that trajectories agree bitwise.  See ``kindsim.kernels`` for the calling
convention.
"""
from __future__ import annotations

import math

import numpy as np

from .rng import TWO_M53

CONTINUE = 0
HIT_MINUS = 1
HIT_PLUS = 2
ABSORBED_PLUS = 3
ABSORBED_MINUS = 4


def run_chunk(beliefs, src, dst, mu_plus, mu_minus, raw, pos, max_events,
              total, clock, lower, upper, thresholds, delta, absorption,
              n_plus_ok, n_minus_ok, log_edge=None, log_kind=None,
              log_old=None, log_new=None, log_dt=None):
    n = beliefs.shape[0]
    m = src.shape[0]
    rate = float(m)
    k = min(max_events, (raw.shape[0] - pos) // 3)
    if k <= 0:
        return 0, pos, total, clock, n_plus_ok, n_minus_ok, CONTINUE
    u = ((raw[pos:pos + 3 * k] >> np.uint64(11)) * TWO_M53).tolist()
    xi = beliefs.tolist()
    src_l = src.tolist()
    dst_l = dst.tolist()
    record = log_edge is not None
    plus_lim = 1.0 - delta
    minus_lim = -1.0 + delta
    log1p = math.log1p

    status = CONTINUE
    done = 0
    j = 0
    while done < k:
        u_t = u[j]
        u_e = u[j + 1]
        u_k = u[j + 2]
        j += 3
        dt = -log1p(-u_t) / rate
        e = int(u_e * rate)
        if e >= m:
            e = m - 1
        x = src_l[e]
        y = dst_l[e]
        pk = 0.5 + 0.5 * xi[x]
        if pk > 1.0:
            pk = 1.0
        elif pk < 0.0:
            pk = 0.0
        old = xi[y]
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
        xi[y] = new
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

    beliefs[:] = xi
    return done, pos + 3 * done, total, clock, n_plus_ok, n_minus_ok, status
