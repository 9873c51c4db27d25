"""Hot loops, each in a compiled and a plain-numpy flavour.

Every public kernel ``foo`` is bound to ``_foo_nb`` (numba) or ``_foo_np``
(numpy/python) according to ``CTRWLIMITS_NO_NUMBA``.  Both flavours perform
the same floating-point operations in the same order, so results agree
bit for bit; the test-suite checks this and the benchmark times both.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# finite Markov chain walk


def _finite_walk_np(cum, start, uniforms):
    n = uniforms.shape[0]
    out = np.empty(n + 1, dtype=np.int64)
    out[0] = start
    state = start
    for i in range(n):
        state = int(np.searchsorted(cum[state], uniforms[i], side="right"))
        if state >= cum.shape[1]:
            state = cum.shape[1] - 1
        out[i + 1] = state
    return out


@njit
def _finite_walk_nb(cum, start, uniforms):
    n = uniforms.shape[0]
    k = cum.shape[1]
    out = np.empty(n + 1, dtype=np.int64)
    out[0] = start
    state = start
    for i in range(n):
        state = np.searchsorted(cum[state], uniforms[i], side="right")
        if state >= k:
            state = k - 1
        out[i + 1] = state
    return out


# ---------------------------------------------------------------------------
# first passage of a renewal sequence over a level


def _first_passage_np(taus, vs, t0, s0, level):
    """Walk forward through ``taus`` from clock ``t0`` and sum ``s0``.

    Returns ``(idx, t, s)``: ``idx`` is the number of renewals consumed before
    the clock first exceeds ``level`` (or ``len(taus)`` if it never does),
    ``t`` the clock after those renewals and ``s`` the matching partial sum.
    """
    t = t0
    s = s0
    n = taus.shape[0]
    for i in range(n):
        nt = t + taus[i]
        if nt > level:
            return i, t, s
        t = nt
        s = s + vs[i]
    return n, t, s


_first_passage_nb = njit(_first_passage_np)


# ---------------------------------------------------------------------------
# torus skeleton advance


def _torus_hold_np(gamma_vals, clocks, t0, level):
    """Consume holding times ``clock / gamma`` until the clock passes ``level``."""
    t = t0
    n = gamma_vals.shape[0]
    for i in range(n):
        nt = t + clocks[i] / gamma_vals[i]
        if nt > level:
            return i, t
        t = nt
    return n, t


_torus_hold_nb = njit(_torus_hold_np)


def _weighted_partial_np(psi_vals, gamma_vals, clocks, t0, level, acc0):
    """Integral of a piecewise constant observable along holding intervals.

    Stops inside the interval that straddles ``level`` and adds the partial
    contribution, so the return is the exact integral up to ``level`` when
    ``done`` is true.
    """
    t = t0
    acc = acc0
    n = gamma_vals.shape[0]
    for i in range(n):
        hold = clocks[i] / gamma_vals[i]
        nt = t + hold
        if nt > level:
            acc = acc + psi_vals[i] * (level - t)
            return i, t, acc, True
        acc = acc + psi_vals[i] * hold
        t = nt
    return n, t, acc, False


_weighted_partial_nb = njit(_weighted_partial_np)


# ---------------------------------------------------------------------------
# Frechet (sup-norm) decision on completed graphs, restricted to a time band


def _free_interval(ax, ay, bx, by, cx, cy, d):
    """Parameters ``s`` in [0, 1] with ``|a + s (b - a) - c|_inf <= d``."""
    lo = 0.0
    hi = 1.0
    dif = bx - ax
    if dif == 0.0:
        if abs(ax - cx) > d:
            return 1.0, 0.0
    else:
        s1 = (cx - d - ax) / dif
        s2 = (cx + d - ax) / dif
        if dif < 0.0:
            s1, s2 = s2, s1
        lo = max(lo, s1)
        hi = min(hi, s2)
    dif = by - ay
    if dif == 0.0:
        if abs(ay - cy) > d:
            return 1.0, 0.0
    else:
        s1 = (cy - d - ay) / dif
        s2 = (cy + d - ay) / dif
        if dif < 0.0:
            s1, s2 = s2, s1
        lo = max(lo, s1)
        hi = min(hi, s2)
    return lo, hi


_free_interval_nb = njit(_free_interval)


def _make_frechet_decide(free):
    def decide(P, Q, d, jlo, jhi):
        p = P.shape[0] - 1
        q = Q.shape[0] - 1
        if max(abs(P[0, 0] - Q[0, 0]), abs(P[0, 1] - Q[0, 1])) > d:
            return False
        if max(abs(P[p, 0] - Q[q, 0]), abs(P[p, 1] - Q[q, 1])) > d:
            return False
        # reachable part of the left edge of every cell in the current column
        lr_lo = np.ones(q)
        lr_hi = np.zeros(q)
        ok = True
        for j in range(jhi[0] + 1):
            flo, fhi = free(Q[j, 0], Q[j, 1], Q[j + 1, 0], Q[j + 1, 1], P[0, 0], P[0, 1], d)
            if ok and flo <= 0.0 and fhi >= flo:
                lr_lo[j] = 0.0
                lr_hi[j] = fhi
                ok = fhi >= 1.0
            else:
                ok = False
        bottom_ok = True
        for i in range(p):
            a = jlo[i]
            b = jhi[i]
            if a == 0:
                flo, fhi = free(P[i, 0], P[i, 1], P[i + 1, 0], P[i + 1, 1], Q[0, 0], Q[0, 1], d)
                if bottom_ok and flo <= 0.0 and fhi >= flo:
                    c_lo = 0.0
                    c_hi = fhi
                    bottom_ok = fhi >= 1.0
                else:
                    c_lo = 1.0
                    c_hi = 0.0
                    bottom_ok = False
            else:
                c_lo = 1.0
                c_hi = 0.0
                bottom_ok = False
            for j in range(a, b + 1):
                l_lo = lr_lo[j]
                l_hi = lr_hi[j]
                r_lo, r_hi = free(Q[j, 0], Q[j, 1], Q[j + 1, 0], Q[j + 1, 1], P[i + 1, 0], P[i + 1, 1], d)
                t_lo, t_hi = free(P[i, 0], P[i, 1], P[i + 1, 0], P[i + 1, 1], Q[j + 1, 0], Q[j + 1, 1], d)
                has_b = c_lo <= c_hi
                has_l = l_lo <= l_hi
                if has_b:
                    nr_lo, nr_hi = r_lo, r_hi
                elif has_l:
                    nr_lo, nr_hi = max(r_lo, l_lo), r_hi
                else:
                    nr_lo, nr_hi = 1.0, 0.0
                if has_l:
                    nt_lo, nt_hi = t_lo, t_hi
                elif has_b:
                    nt_lo, nt_hi = max(t_lo, c_lo), t_hi
                else:
                    nt_lo, nt_hi = 1.0, 0.0
                lr_lo[j] = nr_lo
                lr_hi[j] = nr_hi
                c_lo = nt_lo
                c_hi = nt_hi
                if i == p - 1 and j == q - 1:
                    if nr_lo <= nr_hi and nr_hi >= 1.0:
                        return True
                    if nt_lo <= nt_hi and nt_hi >= 1.0:
                        return True
                    return False
        return False

    return decide


_frechet_decide_np = _make_frechet_decide(_free_interval)
_frechet_decide_nb = njit(_make_frechet_decide(_free_interval_nb))


# ---------------------------------------------------------------------------
# J1 decision for step paths


def _j1_decide_np(s, xv, r, yv, T, d):
    """Is there a time change within ``d`` of the identity with ``|x o l - y| <= d``?

    ``s``/``r`` are jump times, ``xv``/``yv`` the values on the pieces.
    ``f[a, b]`` is the earliest time the merged path can be in the state
    "``a`` jumps of x and ``b`` jumps of y done".
    """
    m = s.shape[0]
    n = r.shape[0]
    inf = np.inf
    f = np.full((m + 1, n + 1), inf)
    if abs(xv[0] - yv[0]) > d:
        return False
    f[0, 0] = 0.0
    for a in range(m + 1):
        for b in range(n + 1):
            t0 = f[a, b]
            if t0 == inf:
                continue
            rnext = r[b] if b < n else T
            if a < m:
                u = max(t0, s[a] - d)
                if u <= s[a] + d and u <= rnext and abs(xv[a + 1] - yv[b]) <= d:
                    if u < f[a + 1, b]:
                        f[a + 1, b] = u
            if b < n:
                if r[b] >= t0 and abs(xv[a] - yv[b + 1]) <= d:
                    if r[b] < f[a, b + 1]:
                        f[a, b + 1] = r[b]
                if a < m and abs(r[b] - s[a]) <= d and r[b] >= t0 and abs(xv[a + 1] - yv[b + 1]) <= d:
                    if r[b] < f[a + 1, b + 1]:
                        f[a + 1, b + 1] = r[b]
    return f[m, n] < inf


_j1_decide_nb = njit(_j1_decide_np)


# ---------------------------------------------------------------------------
# oscillation modulus decision for step paths


def _lex_less(p1, e1, p2, e2):
    return p1 < p2 or (p1 == p2 and e1 < e2)


_lex_less_nb = njit(_lex_less)


def _make_osc_decide(lex_less):
    def decide(starts, vals, T, delta, eps):
        """Does a partition with all gaps > ``delta`` keep every cell's range <= ``eps``?

        Pieces start at ``starts`` (``starts[0] == 0``) with values ``vals``.
        Cut positions are tracked as ``(pos, infinitesimal)`` pairs so the
        strict gap condition is honoured exactly.
        """
        m = starts.shape[0]
        gpos = np.full(m, np.inf)
        geps = np.zeros(m, dtype=np.int64)
        gpos[0] = 0.0
        for k in range(m):
            if gpos[k] == np.inf:
                continue
            lb_pos = gpos[k] + delta
            mn = vals[k]
            mx = vals[k]
            for kk in range(k + 1, m):
                if mx - mn <= eps and starts[kk] > lb_pos:
                    if lex_less(starts[kk], 0, gpos[kk], geps[kk]):
                        gpos[kk] = starts[kk]
                        geps[kk] = 0
                mn = min(mn, vals[kk])
                mx = max(mx, vals[kk])
                if mx - mn > eps:
                    break
                # interior cut in piece kk
                if lex_less(lb_pos, 1, starts[kk], 1):
                    cp = starts[kk]
                else:
                    cp = lb_pos
                end = starts[kk + 1] if kk + 1 < m else T
                if cp < end and lex_less(cp, 1, gpos[kk], geps[kk]):
                    gpos[kk] = cp
                    geps[kk] = 1
            else:
                if mx - mn <= eps and T > lb_pos:
                    return True
        return False

    return decide


_osc_decide_np = _make_osc_decide(_lex_less)
_osc_decide_nb = njit(_make_osc_decide(_lex_less_nb))


if USE_NUMBA:
    finite_walk = _finite_walk_nb
    first_passage = _first_passage_nb
    torus_hold = _torus_hold_nb
    weighted_partial = _weighted_partial_nb
    frechet_decide = _frechet_decide_nb
    j1_decide = _j1_decide_nb
    osc_decide = _osc_decide_nb
else:
    finite_walk = _finite_walk_np
    first_passage = _first_passage_np
    torus_hold = _torus_hold_np
    weighted_partial = _weighted_partial_np
    frechet_decide = _frechet_decide_np
    j1_decide = _j1_decide_np
    osc_decide = _osc_decide_np
