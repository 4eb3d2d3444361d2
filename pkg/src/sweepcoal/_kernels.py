"""Jitted event loops for the continuous-time coalescent simulators.

These consume a numpy Generator directly, so streams are identical to what
the pure-Python reference paths in coalsim.py would draw, and replicates are
reproducible from the stream alone.  Set NUMBA_DISABLE_JIT=1 to run them as
plain Python when debugging.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _holding_time(lam, tau, rho, u):
    """Inverse-CDF holding time under the exponential-growth time change."""
    if rho == 0.0:
        return -math.log1p(-u) / lam
    phi = lam * math.exp(rho * tau) / rho
    return math.log1p(-math.log1p(-u) / phi) / rho


@njit(cache=True)
def _growth_clock(t, rho):
    """Internal time G(t) = (e^{rho t} - 1)/rho, with G(t) = t at rho = 0."""
    if rho == 0.0:
        return t
    return math.expm1(rho * t) / rho


@njit(cache=True)
def _inversion_residual(lam, tau, rho, t, u):
    """lam * (G(tau+t) - G(tau)) + log(1-u), evaluated cancellation-free:
    G(tau+t) - G(tau) = e^{rho tau} * expm1(rho t) / rho."""
    if rho == 0.0:
        gap = t
    else:
        gap = math.exp(rho * tau) * math.expm1(rho * t) / rho
    return abs(lam * gap + math.log1p(-u))


@njit(cache=True)
def lambda_replicate(n, cum_rates, exits, rho, rng, lengths, validate):
    """One spectrum draw from a single-merger coalescent.

    cum_rates[b, k] is the cumulative total rate over merger sizes 2..k at b
    blocks; exits[b] the row total.  lengths (size n+1) accrues holding time
    per block of each size; returns the worst per-draw inversion residual
    when validate is on, else 0.0.
    """
    sizes = np.empty(n, dtype=np.int64)
    for i in range(n):
        sizes[i] = 1
    lengths[:] = 0.0
    m = n
    lo = 0
    tau = 0.0
    worst = 0.0
    while m >= 2:
        lam = exits[m]
        u = rng.random()
        t = _holding_time(lam, tau, rho, u)
        if validate:
            resid = _inversion_residual(lam, tau, rho, t, u)
            if resid > worst:
                worst = resid
        for i in range(lo, lo + m):
            lengths[sizes[i]] += t
        tau += t
        # merger size: scan the cumulative row
        target = rng.random() * lam
        k = 2
        while k < m and cum_rates[m, k] < target:
            k += 1
        # choose k distinct blocks by partial Fisher-Yates on the window
        for j in range(k):
            pick = j + int(rng.random() * (m - j))
            tmp = sizes[lo + j]
            sizes[lo + j] = sizes[lo + pick]
            sizes[lo + pick] = tmp
        newsize = 0
        for j in range(k):
            newsize += sizes[lo + j]
        sizes[lo + k - 1] = newsize
        lo += k - 1
        m -= k - 1
    return worst


@njit(cache=True)
def xi_replicate(
    n,
    cfg_start,
    cum_rates_flat,
    parts_off,
    parts_flat,
    exits,
    rho,
    rng,
    lengths,
    validate,
):
    """One spectrum draw from a simultaneous-merger coalescent.

    Configurations for b blocks occupy cum_rates_flat[cfg_start[b] :
    cfg_start[b+1]] (cumulative, descending-rate order); configuration c has
    parts parts_flat[parts_off[c] : parts_off[c+1]].
    """
    sizes = np.empty(n, dtype=np.int64)
    for i in range(n):
        sizes[i] = 1
    lengths[:] = 0.0
    m = n
    lo = 0
    tau = 0.0
    worst = 0.0
    while m >= 2:
        lam = exits[m]
        u = rng.random()
        t = _holding_time(lam, tau, rho, u)
        if validate:
            resid = _inversion_residual(lam, tau, rho, t, u)
            if resid > worst:
                worst = resid
        for i in range(lo, lo + m):
            lengths[sizes[i]] += t
        tau += t
        # configuration: scan the cumulative rates for this block count
        target = rng.random() * lam
        c = cfg_start[m]
        last = cfg_start[m + 1] - 1
        while c < last and cum_rates_flat[c] < target:
            c += 1
        p0 = parts_off[c]
        p1 = parts_off[c + 1]
        total_merged = 0
        for pi in range(p0, p1):
            total_merged += parts_flat[pi]
        # pick all merging blocks at once, then split into groups in order
        for j in range(total_merged):
            pick = j + int(rng.random() * (m - j))
            tmp = sizes[lo + j]
            sizes[lo + j] = sizes[lo + pick]
            sizes[lo + pick] = tmp
        r = p1 - p0
        w = 0
        for g in range(r):
            part = parts_flat[p0 + g]
            newsize = 0
            for j in range(w, w + part):
                newsize += sizes[lo + j]
            # parts are >= 2, so slot lo+g is already consumed when written
            sizes[lo + g] = newsize
            w += part
        # compact: move the r merged blocks to the tail of the consumed span
        for g in range(r):
            sizes[lo + total_merged - r + g] = sizes[lo + g]
        lo += total_merged - r
        m -= total_merged - r
    return worst


@njit(cache=True)
def _draw_offspring(rng, a, inv_a, h, zterm, clip_hi):
    """One draw from the truncated power-tail law by tail inversion."""
    u = rng.random()
    w = (1.0 - u) / h + zterm
    if a == 2.0:
        v = 1.0 / math.sqrt(w)
    elif a == 1.0:
        v = 1.0 / w
    elif a == 0.5:
        v = 1.0 / (w * w)
    else:
        v = w**inv_a
    x = math.ceil(v) - 1.0
    if x < 1.0:
        x = 1.0
    elif x > clip_hi:
        x = clip_hi
    return x


@njit(cache=True)
def _fill_generation(rng, cums, N, regime, eps, law_n, law_f):
    """One generation of offspring numbers, cumulated into cums; returns S.

    law_* pack (a, inv_a, h, zterm, clip_hi).  regime: 0 fixed, 1 type A
    (everyone favorable together), 2 type B (one favorable individual).
    """
    a_n, inv_n, h_n, zt_n, hi_n = law_n
    a_f, inv_f, h_f, zt_f, hi_f = law_f
    lucky = -1
    fav_all = False
    if regime == 1:
        fav_all = rng.random() < eps
    elif regime == 2:
        if rng.random() < eps:
            lucky = int(rng.random() * N)
            if lucky >= N:
                lucky = N - 1
    s = 0.0
    for i in range(N):
        if fav_all or i == lucky:
            x = _draw_offspring(rng, a_f, inv_f, h_f, zt_f, hi_f)
        else:
            x = _draw_offspring(rng, a_n, inv_n, h_n, zt_n, hi_n)
        s += x
        cums[i] = s
    return s


@njit(cache=True)
def _distinct_position(rng, S, taken, count):
    """One juvenile position distinct from taken[:count] (linear scan)."""
    while True:
        v = math.floor(rng.random() * S)
        if v > S - 1.0:
            v = S - 1.0
        dup = False
        for t in range(count):
            if taken[t] == v:
                dup = True
                break
        if not dup:
            return v


@njit(cache=True)
def annealed_replicate(n, N, regime, eps, law_n, law_f, rng, lengths, max_gens):
    """Spectrum of one sample genealogy under the discrete population model.

    Walks the sample's blocks backwards one generation at a time: accrue one
    generation per block, draw the generation, assign blocks to families as
    distinct uniform juveniles, merge same-family blocks.  Returns the number
    of generations, or -1 if max_gens passed without absorption.
    """
    sizes = np.ones(n, dtype=np.int64)
    m = n
    lengths[:] = 0.0
    cums = np.empty(N, dtype=np.float64)
    positions = np.empty(n, dtype=np.float64)
    parents = np.empty(n, dtype=np.int64)
    gens = 0
    while m >= 2:
        if gens >= max_gens:
            return -1
        gens += 1
        for i in range(m):
            lengths[sizes[i]] += 1.0
        S = _fill_generation(rng, cums, N, regime, eps, law_n, law_f)
        if S < N:
            continue
        for j in range(m):
            positions[j] = _distinct_position(rng, S, positions, j)
        for j in range(m):
            parents[j] = np.searchsorted(cums, positions[j], side="right")
        # insertion sort (parent, size) pairs; m stays small
        for j in range(1, m):
            pj = parents[j]
            sj = sizes[j]
            t = j - 1
            while t >= 0 and parents[t] > pj:
                parents[t + 1] = parents[t]
                sizes[t + 1] = sizes[t]
                t -= 1
            parents[t + 1] = pj
            sizes[t + 1] = sj
        new_m = 0
        i = 0
        while i < m:
            tot = sizes[i]
            j = i + 1
            while j < m and parents[j] == parents[i]:
                tot += sizes[j]
                j += 1
            sizes[new_m] = tot
            parents[new_m] = parents[i]
            new_m += 1
            i = j
        m = new_m
    return gens


@njit(cache=True)
def quenched_advance(
    N,
    n,
    regime,
    eps,
    law_n,
    law_f,
    rng_anc,
    rng_samp,
    roots,
    ptr_chunk,
    gens_done,
    max_gens,
    levels_out,
):
    """Grow the population ancestry until a fresh sample tree is complete.

    Each round: draw n distinct levels on the sampling stream and test
    whether they share a generation-0 root; if not, append one forward
    generation (pointer row into ptr_chunk, roots updated in place).
    Returns (rows_used, status): status 1 = complete sample found (levels in
    levels_out), 0 = chunk full, 2 = generation cap reached.
    """
    chunk_rows = ptr_chunk.shape[0]
    scratch = np.empty(N, dtype=np.int64)
    table_bits = 1
    while (1 << table_bits) < 4 * N:
        table_bits += 1
    table_size = 1 << table_bits
    table = np.empty(table_size, dtype=np.int64)
    tmp_roots = np.empty(N, dtype=np.int64)
    cums = np.empty(N, dtype=np.float64)
    rows = 0
    while True:
        # sample n distinct levels at the newest generation
        for i in range(N):
            scratch[i] = i
        for j in range(n):
            pick = j + int(rng_samp.random() * (N - j))
            if pick >= N:
                pick = N - 1
            tv = scratch[j]
            scratch[j] = scratch[pick]
            scratch[pick] = tv
        complete = True
        r0 = roots[scratch[0]]
        for j in range(1, n):
            if roots[scratch[j]] != r0:
                complete = False
                break
        if complete:
            for j in range(n):
                levels_out[j] = scratch[j]
            return rows, 1
        if gens_done + rows >= max_gens:
            return rows, 2
        if rows >= chunk_rows:
            return rows, 0
        # append one forward generation
        S = _fill_generation(rng_anc, cums, N, regime, eps, law_n, law_f)
        row = ptr_chunk[rows]
        if S < N:
            for i in range(N):
                row[i] = i
        else:
            Si = S
            for i in range(table_size):
                table[i] = -1
            mask = table_size - 1
            for i in range(N):
                while True:
                    v = math.floor(rng_anc.random() * Si)
                    if v > Si - 1.0:
                        v = Si - 1.0
                    key = int(v)
                    slot = key & mask
                    ok = True
                    while table[slot] != -1:
                        if table[slot] == key:
                            ok = False
                            break
                        slot = (slot + 1) & mask
                    if ok:
                        table[slot] = key
                        row[i] = np.searchsorted(cums, v, side="right")
                        break
        for i in range(N):
            tmp_roots[i] = roots[row[i]]
        for i in range(N):
            roots[i] = tmp_roots[i]
        rows += 1
