"""Pure-Python implementations of the numerical kernels.

Every function here has a twin with the same signature in ``_core.pyx``.
The compiled module is preferred at import (see :mod:`gridfit.kernels`);
this one is the fallback and the reference the compiled kernels are
tested against.

Curve layout used by all kernels::

    curve = (v_L, v1, v2, v3, v4, v_H, q1, q2, q3, q4)

Plant parameter layout::

    prm = (pll_bandwidth, current_loop_tau, s_rating_kva, v_base)
"""
import math

import numpy as np

# status codes shared with the compiled kernels
OK = 0
BFS_DIVERGED = 1


def volt_var(v, curve):
    vl, v1, v2, v3, v4, vh, q1, q2, q3, q4 = curve
    if v < v1:
        return q1
    if v < v2:
        return q1 + (q2 - q1) / (v2 - v1) * (v - v1)
    if v < v3:
        return q2 + (q3 - q2) / (v3 - v2) * (v - v2)
    if v < v4:
        return q3 + (q4 - q3) / (v4 - v3) * (v - v3)
    return q4


def _deriv(vf, i_d, i_q, vt, p, prm, curve, gsf):
    wb, tau, s, vbase = prm
    pstar = p if p < s else s
    if gsf:
        q = volt_var(vf, curve)
        head = math.sqrt(max(s * s - pstar * pstar, 0.0))
        if q > head:
            q = head
        elif q < -head:
            q = -head
    else:
        q = 0.0
    k = 1000.0 / (vf * vbase)
    return (wb * (vt - vf), (pstar * k - i_d) / tau, (q * k - i_q) / tau)


def _rk4(x, vt, p, dt, prm, curve, gsf):
    vf, i_d, i_q = x
    k1 = _deriv(vf, i_d, i_q, vt, p, prm, curve, gsf)
    h = 0.5 * dt
    k2 = _deriv(vf + h * k1[0], i_d + h * k1[1], i_q + h * k1[2], vt, p, prm, curve, gsf)
    k3 = _deriv(vf + h * k2[0], i_d + h * k2[1], i_q + h * k2[2], vt, p, prm, curve, gsf)
    k4 = _deriv(vf + dt * k3[0], i_d + dt * k3[1], i_q + dt * k3[2], vt, p, prm, curve, gsf)
    c = dt / 6.0
    vf = vf + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    i_d = i_d + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    i_q = i_q + c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    # current limiter keeps the operating point on or inside the capability circle
    imax = prm[2] * 1000.0 / (vf * prm[3])
    mag = math.sqrt(i_d * i_d + i_q * i_q)
    if mag > imax:
        r = imax / mag
        i_d *= r
        i_q *= r
    return vf, i_d, i_q


def plant_run(state, vt, p, dt, substeps, prm, curve, gsf):
    """Step the averaged inverter over ``len(vt)`` samples.

    Row ``k`` of the returned array is the state at the start of sample
    ``k``; the input ``vt[k]``, ``p[k]`` is then held for ``substeps``
    RK4 steps of ``dt``.  Returns ``(states, final_state)``.
    """
    n = len(vt)
    out = np.empty((n, 3))
    x = (float(state[0]), float(state[1]), float(state[2]))
    prm = tuple(float(c) for c in prm)
    curve = tuple(float(c) for c in curve)
    for k in range(n):
        out[k, 0] = x[0]
        out[k, 1] = x[1]
        out[k, 2] = x[2]
        v = float(vt[k])
        pk = float(p[k])
        for _ in range(substeps):
            x = _rk4(x, v, pk, dt, prm, curve, gsf)
    return out, np.array(x)


def tf_run(b, a, u_off, y_off, u, y_hist, u_hist):
    """Free-run difference equation in absolute units.

    ``y_hist``/``u_hist`` hold past outputs/inputs, most recent first, and
    must be at least ``len(a)``/``len(b) - 1`` long.
    """
    n = len(a)
    m = len(b) - 1
    yh = [float(c) for c in y_hist[:n]]
    uh = [float(c) for c in u_hist[:m]]
    out = np.empty(len(u))
    for k in range(len(u)):
        uk = float(u[k])
        acc = y_off + b[0] * (uk - u_off)
        for j in range(m):
            acc += b[j + 1] * (uh[j] - u_off)
        for i in range(n):
            acc -= a[i] * (yh[i] - y_off)
        out[k] = acc
        if n:
            yh.insert(0, acc)
            yh.pop()
        if m:
            uh.insert(0, uk)
            uh.pop()
    return out


def range_index(v, hi):
    r = 0
    last = len(hi) - 1
    while r < last and v > hi[r]:
        r += 1
    return r


def _pm_step(v, r, B, A, nord, mord, uoff, yoff, yh, uh):
    n = nord[r]
    m = mord[r]
    acc = yoff[r] + B[r, 0] * (v - uoff[r])
    for j in range(m):
        acc += B[r, j + 1] * (uh[j] - uoff[r])
    for i in range(n):
        acc -= A[r, i] * (yh[i] - yoff[r])
    return acc


def _shift(buf, x):
    for i in range(len(buf) - 1, 0, -1):
        buf[i] = buf[i - 1]
    if len(buf):
        buf[0] = x


def partitioned_run(v, hi, B, A, nord, mord, uoff, yoff, y_hist, u_hist):
    """Switch between local models by the instantaneous input value.

    The output/input histories are shared across ranges in absolute units,
    so an incoming model is warm-started from the aggregate trajectory.
    ``y_hist``/``u_hist`` are mutated in place and left holding the state
    after the last sample.
    """
    out = np.empty(len(v))
    yh = y_hist
    uh = u_hist
    for k in range(len(v)):
        vk = float(v[k])
        r = range_index(vk, hi)
        y = _pm_step(vk, r, B, A, nord, mord, uoff, yoff, yh, uh)
        out[k] = y
        _shift(yh, y)
        _shift(uh, vk)
    return out


def bfs_solve(parent, zr, zi, e_src, house_node, p_const, q_const,
              p0, q0, zip_c, i_d, i_q, v_re, v_im, tol, maxit):
    """Backward/forward sweep on a radial network, in place on ``v_re/v_im``.

    Per-unit throughout.  Node 0 hangs off the ideal source through branch
    impedance ``z[0]``; every other node's parent has a lower index.
    House ``h`` at node ``house_node[h]`` injects constant power
    ``p_const + j q_const``, draws a ZIP load ``p0, q0`` with coefficient
    row ``zip_c[h] = (zp, ip, pp, zq, iq, pq)`` and injects a current
    source ``i_d - j i_q`` aligned with its node voltage.

    Returns ``(status, sweeps, worst_mismatch)``.
    """
    nn = len(parent)
    nh = len(house_node)
    inj = [0j] * nn
    worst = math.inf
    for sweep in range(1, maxit + 1):
        for n in range(nn):
            inj[n] = 0j
        for h in range(nh):
            n = house_node[h]
            vc = complex(v_re[n], v_im[n])
            vm = abs(vc)
            zc = zip_c[h]
            pl = p0[h] * (zc[0] * vm * vm + zc[1] * vm + zc[2])
            ql = q0[h] * (zc[3] * vm * vm + zc[4] * vm + zc[5])
            s = complex(p_const[h] - pl, q_const[h] - ql)
            inj[n] += (s / vc).conjugate() + complex(i_d[h], -i_q[h]) * (vc / vm)
        ibr = inj[:]
        for n in range(nn - 1, 0, -1):
            ibr[parent[n]] += ibr[n]
        worst = 0.0
        for n in range(nn):
            vp = e_src if parent[n] < 0 else complex(v_re[parent[n]], v_im[parent[n]])
            vn = vp + complex(zr[n], zi[n]) * ibr[n]
            d = abs(vn - complex(v_re[n], v_im[n]))
            if d > worst:
                worst = d
            v_re[n] = vn.real
            v_im[n] = vn.imag
        if worst < tol:
            return OK, sweep, worst
    return BFS_DIVERGED, maxit, worst


def branch_currents(parent, house_node, p_const, q_const, p0, q0, zip_c,
                    i_d, i_q, v_re, v_im):
    """Branch currents (toward the source) for a solved voltage profile."""
    nn = len(parent)
    ibr = [0j] * nn
    for h in range(len(house_node)):
        n = house_node[h]
        vc = complex(v_re[n], v_im[n])
        vm = abs(vc)
        zc = zip_c[h]
        pl = p0[h] * (zc[0] * vm * vm + zc[1] * vm + zc[2])
        ql = q0[h] * (zc[3] * vm * vm + zc[4] * vm + zc[5])
        s = complex(p_const[h] - pl, q_const[h] - ql)
        ibr[n] += (s / vc).conjugate() + complex(i_d[h], -i_q[h]) * (vc / vm)
    for n in range(nn - 1, 0, -1):
        ibr[parent[n]] += ibr[n]
    return np.array(ibr)


def feeder_run(net, dev, prof, out, opts):
    """Quasi-static feeder loop with dynamic devices.

    ``net``, ``dev``, ``prof``, ``out`` and ``opts`` are dicts of numpy
    arrays / scalars assembled by :func:`gridfit.feeder.run_timeseries`;
    ``out`` arrays are filled in place.  Returns ``(status, step)`` where a
    non-zero status marks the step at which the network solve diverged.
    """
    parent = net["parent"]
    zr = net["zr"]
    zi = net["zi"]
    e_src = complex(net["e_src"], 0.0)
    hn = net["house_node"]
    zip_c = net["zip"]
    nh = len(hn)
    nn = len(parent)
    i_base = net["i_base"]
    s_base_kva = net["s_base_kva"]

    binding = opts["binding"]
    gsf = opts["gsf"]
    sub = opts["substeps"]
    dt = opts["dt"]
    maxit = opts["max_iter"]
    fp_tol = opts["fp_tol"]
    bfs_tol = opts["bfs_tol"]
    bfs_maxit = opts["bfs_maxit"]

    prm = tuple(float(c) for c in dev["prm"])
    curve = tuple(float(c) for c in dev["curve"])
    s_rating = prm[2]
    vbase = prm[3]
    mu_area = dev["mu_area"]

    if binding == 1:
        hi = dev["hi"]
        B = dev["B"]
        A = dev["A"]
        nord = dev["nord"]
        mord = dev["mord"]
        uoff = dev["uoff"]
        yoff = dev["yoff"]
        hist_y = dev["hist"]
        hist_u = dev["hist_u"]
    state = dev["state"]

    irr = prof["irradiance"]
    p0s = prof["p0"]
    q0s = prof["q0"]

    v_re = np.full(nn, float(e_src.real))
    v_im = np.zeros(nn)
    zero = np.zeros(nh)
    vt = np.empty(nh)
    res = np.empty(nh)
    r_prev = np.empty(nh)
    i_d = np.zeros(nh)
    i_q = np.zeros(nh)
    pav = np.empty(nh)
    for h in range(nh):
        n = hn[h]
        vt[h] = math.hypot(v_re[n], v_im[n])

    nt = len(irr)
    for t in range(nt):
        for h in range(nh):
            pav[h] = mu_area[h] * irr[t] / 1000.0
        p0 = p0s[t] / s_base_kva
        q0 = q0s[t] / s_base_kva
        omega = 1.0
        it = 0
        new_state = state.copy()
        if binding == 1:
            new_y = hist_y.copy()
            new_u = hist_u.copy()
        while True:
            it += 1
            for h in range(nh):
                if binding == 0:
                    x = (state[h, 0], state[h, 1], state[h, 2])
                    for _ in range(sub):
                        x = _rk4(x, vt[h], pav[h], dt, prm, curve, gsf)
                    new_state[h, 0], new_state[h, 1], new_state[h, 2] = x
                    i_d[h] = x[1]
                    i_q[h] = x[2]
                else:
                    v = vt[h]
                    pstar = pav[h] if pav[h] < s_rating else s_rating
                    k = 1000.0 / (v * vbase)
                    iq = 0.0
                    if gsf:
                        yh = list(hist_y[h])
                        uh = list(hist_u[h])
                        r = range_index(v, hi)
                        for _ in range(sub):
                            iq = _pm_step(v, r, B, A, nord, mord, uoff, yoff, yh, uh)
                            _shift(yh, iq)
                            _shift(uh, v)
                        new_y[h, :] = yh
                        new_u[h, :] = uh
                        head = math.sqrt(max(s_rating * s_rating - pstar * pstar, 0.0)) * k
                        if iq > head:
                            iq = head
                        elif iq < -head:
                            iq = -head
                    i_d[h] = pstar * k
                    i_q[h] = iq
            st, _, _ = bfs_solve(parent, zr, zi, e_src, hn, zero, zero, p0, q0, zip_c,
                                 i_d / i_base, i_q / i_base, v_re, v_im, bfs_tol, bfs_maxit)
            if st != OK:
                return st, t
            worst = 0.0
            for h in range(nh):
                n = hn[h]
                r = math.hypot(v_re[n], v_im[n]) - vt[h]
                if abs(r) > worst:
                    worst = abs(r)
                res[h] = r
            if worst < fp_tol or it >= maxit:
                break
            # Aitken relaxation on the vector of terminal-voltage residuals
            if it > 1:
                num = 0.0
                den = 0.0
                for h in range(nh):
                    dr = res[h] - r_prev[h]
                    num += r_prev[h] * dr
                    den += dr * dr
                if den > 0.0:
                    omega = -omega * num / den
                    omega = min(max(omega, 0.05), 1.5)
            for h in range(nh):
                r_prev[h] = res[h]
                vt[h] += omega * res[h]
        state[:, :] = new_state
        if binding == 1:
            hist_y[:, :] = new_y
            hist_u[:, :] = new_u
        for n in range(nn):
            out["v"][t, n] = math.hypot(v_re[n], v_im[n])
        for h in range(nh):
            n = hn[h]
            vm = math.hypot(v_re[n], v_im[n])
            out["i_d"][t, h] = i_d[h]
            out["i_q"][t, h] = i_q[h]
            out["q"][t, h] = vm * vbase * i_q[h] / 1000.0
            out["p"][t, h] = vm * vbase * i_d[h] / 1000.0
            vt[h] = vm
        out["iters"][t] = it
    return OK, nt
