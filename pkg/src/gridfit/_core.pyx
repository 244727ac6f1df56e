# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels.

Signatures and arithmetic order mirror ``_pycore.py`` exactly; see that
module for argument layouts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, fabs

cnp.import_array()

cdef enum:
    MAXH = 32

OK = 0
BFS_DIVERGED = 1


cdef inline double _vv(double v, const double* c) noexcept nogil:
    if v < c[1]:
        return c[6]
    if v < c[2]:
        return c[6] + (c[7] - c[6]) / (c[2] - c[1]) * (v - c[1])
    if v < c[3]:
        return c[7] + (c[8] - c[7]) / (c[3] - c[2]) * (v - c[2])
    if v < c[4]:
        return c[8] + (c[9] - c[8]) / (c[4] - c[3]) * (v - c[3])
    return c[9]


cdef inline void _deriv(double vf, double i_d, double i_q, double vt, double p,
                        const double* prm, const double* c, int gsf,
                        double* d) noexcept nogil:
    cdef double s = prm[2]
    cdef double pstar = p if p < s else s
    cdef double q = 0.0
    cdef double head, k
    if gsf:
        q = _vv(vf, c)
        head = sqrt(max(s * s - pstar * pstar, 0.0))
        if q > head:
            q = head
        elif q < -head:
            q = -head
    k = 1000.0 / (vf * prm[3])
    d[0] = prm[0] * (vt - vf)
    d[1] = (pstar * k - i_d) / prm[1]
    d[2] = (q * k - i_q) / prm[1]


cdef inline void _rk4(double* x, double vt, double p, double dt,
                      const double* prm, const double* c, int gsf) noexcept nogil:
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double h = 0.5 * dt
    cdef double cc, imax, mag, r
    _deriv(x[0], x[1], x[2], vt, p, prm, c, gsf, k1)
    _deriv(x[0] + h * k1[0], x[1] + h * k1[1], x[2] + h * k1[2], vt, p, prm, c, gsf, k2)
    _deriv(x[0] + h * k2[0], x[1] + h * k2[1], x[2] + h * k2[2], vt, p, prm, c, gsf, k3)
    _deriv(x[0] + dt * k3[0], x[1] + dt * k3[1], x[2] + dt * k3[2], vt, p, prm, c, gsf, k4)
    cc = dt / 6.0
    x[0] = x[0] + cc * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    x[1] = x[1] + cc * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    x[2] = x[2] + cc * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    imax = prm[2] * 1000.0 / (x[0] * prm[3])
    mag = sqrt(x[1] * x[1] + x[2] * x[2])
    if mag > imax:
        r = imax / mag
        x[1] *= r
        x[2] *= r


def volt_var(double v, curve):
    cdef double c[10]
    for i in range(10):
        c[i] = curve[i]
    return _vv(v, c)


def plant_run(state, const double[::1] vt, const double[::1] p, double dt, int substeps,
              prm, curve, int gsf):
    cdef Py_ssize_t n = vt.shape[0]
    cdef cnp.ndarray[double, ndim=2] out_arr = np.empty((n, 3))
    cdef double[:, ::1] out = out_arr
    cdef double x[3]
    cdef double cp[4]
    cdef double cc[10]
    cdef Py_ssize_t k
    cdef int s
    cdef double v, pk
    for i in range(3):
        x[i] = state[i]
    for i in range(4):
        cp[i] = prm[i]
    for i in range(10):
        cc[i] = curve[i]
    with nogil:
        for k in range(n):
            out[k, 0] = x[0]
            out[k, 1] = x[1]
            out[k, 2] = x[2]
            v = vt[k]
            pk = p[k]
            for s in range(substeps):
                _rk4(x, v, pk, dt, cp, cc, gsf)
    return out_arr, np.array([x[0], x[1], x[2]])


def tf_run(const double[::1] b, const double[::1] a, double u_off, double y_off,
           const double[::1] u, y_hist, u_hist):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0] - 1
    cdef Py_ssize_t N = u.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(N)
    cdef double[::1] out = out_arr
    cdef double yh[MAXH]
    cdef double uh[MAXH]
    cdef Py_ssize_t k, i, j
    cdef double acc, uk
    if n > MAXH or m > MAXH:
        raise ValueError("model order exceeds compiled limit %d" % MAXH)
    for i in range(n):
        yh[i] = y_hist[i]
    for j in range(m):
        uh[j] = u_hist[j]
    with nogil:
        for k in range(N):
            uk = u[k]
            acc = y_off + b[0] * (uk - u_off)
            for j in range(m):
                acc += b[j + 1] * (uh[j] - u_off)
            for i in range(n):
                acc -= a[i] * (yh[i] - y_off)
            out[k] = acc
            for i in range(n - 1, 0, -1):
                yh[i] = yh[i - 1]
            if n:
                yh[0] = acc
            for j in range(m - 1, 0, -1):
                uh[j] = uh[j - 1]
            if m:
                uh[0] = uk
    return out_arr


cdef inline Py_ssize_t _range_index(double v, const double[::1] hi) noexcept nogil:
    cdef Py_ssize_t r = 0
    cdef Py_ssize_t last = hi.shape[0] - 1
    while r < last and v > hi[r]:
        r += 1
    return r


def range_index(double v, const double[::1] hi):
    return _range_index(v, hi)


cdef inline double _pm_step(double v, Py_ssize_t r, const double[:, ::1] B,
                            const double[:, ::1] A, const long[::1] nord,
                            const long[::1] mord, const double[::1] uoff,
                            const double[::1] yoff, double* yh,
                            double* uh) noexcept nogil:
    cdef Py_ssize_t n = nord[r]
    cdef Py_ssize_t m = mord[r]
    cdef Py_ssize_t i, j
    cdef double acc = yoff[r] + B[r, 0] * (v - uoff[r])
    for j in range(m):
        acc += B[r, j + 1] * (uh[j] - uoff[r])
    for i in range(n):
        acc -= A[r, i] * (yh[i] - yoff[r])
    return acc


cdef inline void _shift(double* buf, Py_ssize_t H, double x) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(H - 1, 0, -1):
        buf[i] = buf[i - 1]
    if H:
        buf[0] = x


def partitioned_run(const double[::1] v, const double[::1] hi, const double[:, ::1] B,
                    const double[:, ::1] A, const long[::1] nord, const long[::1] mord,
                    const double[::1] uoff, const double[::1] yoff,
                    double[::1] y_hist, double[::1] u_hist):
    cdef Py_ssize_t N = v.shape[0]
    cdef Py_ssize_t H = y_hist.shape[0]
    cdef Py_ssize_t Hu = u_hist.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(N)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, r
    cdef double y, vk
    with nogil:
        for k in range(N):
            vk = v[k]
            r = _range_index(vk, hi)
            y = _pm_step(vk, r, B, A, nord, mord, uoff, yoff, &y_hist[0], &u_hist[0])
            out[k] = y
            _shift(&y_hist[0], H, y)
            _shift(&u_hist[0], Hu, vk)
    return out_arr


cdef int _bfs(const long[::1] parent, const double[::1] zr, const double[::1] zi,
              double e_re, double e_im, const long[::1] hn,
              const double[::1] p_const, const double[::1] q_const,
              const double[::1] p0, const double[::1] q0, const double[:, ::1] zc,
              const double[::1] i_d, const double[::1] i_q,
              double[::1] v_re, double[::1] v_im, double[::1] ib_re, double[::1] ib_im,
              double tol, int maxit, int* sweeps, double* worst) noexcept nogil:
    cdef Py_ssize_t nn = parent.shape[0]
    cdef Py_ssize_t nh = hn.shape[0]
    cdef Py_ssize_t n, h, pn
    cdef int sweep
    cdef double vr, vi, vm, vm2, pl, ql, sr, si, cr, ci, pr, pi, nr, ni, d
    worst[0] = 1e300
    for sweep in range(1, maxit + 1):
        for n in range(nn):
            ib_re[n] = 0.0
            ib_im[n] = 0.0
        for h in range(nh):
            n = hn[h]
            vr = v_re[n]
            vi = v_im[n]
            vm2 = vr * vr + vi * vi
            vm = sqrt(vm2)
            pl = p0[h] * (zc[h, 0] * vm * vm + zc[h, 1] * vm + zc[h, 2])
            ql = q0[h] * (zc[h, 3] * vm * vm + zc[h, 4] * vm + zc[h, 5])
            sr = p_const[h] - pl
            si = q_const[h] - ql
            # conj(s / v) = (sr - j si) / (vr - j vi)
            cr = (sr * vr + si * vi) / vm2
            ci = (sr * vi - si * vr) / vm2
            # (i_d - j i_q) * v / |v|
            cr += (i_d[h] * vr + i_q[h] * vi) / vm
            ci += (i_d[h] * vi - i_q[h] * vr) / vm
            ib_re[n] += cr
            ib_im[n] += ci
        for n in range(nn - 1, 0, -1):
            pn = parent[n]
            ib_re[pn] += ib_re[n]
            ib_im[pn] += ib_im[n]
        worst[0] = 0.0
        for n in range(nn):
            pn = parent[n]
            if pn < 0:
                pr = e_re
                pi = e_im
            else:
                pr = v_re[pn]
                pi = v_im[pn]
            nr = pr + zr[n] * ib_re[n] - zi[n] * ib_im[n]
            ni = pi + zr[n] * ib_im[n] + zi[n] * ib_re[n]
            d = hypot(nr - v_re[n], ni - v_im[n])
            if d > worst[0]:
                worst[0] = d
            v_re[n] = nr
            v_im[n] = ni
        if worst[0] < tol:
            sweeps[0] = sweep
            return 0
    sweeps[0] = maxit
    return 1


def bfs_solve(long[::1] parent, double[::1] zr, double[::1] zi, e_src,
              long[::1] house_node, double[::1] p_const, double[::1] q_const,
              double[::1] p0, double[::1] q0, double[:, ::1] zip_c,
              double[::1] i_d, double[::1] i_q, double[::1] v_re, double[::1] v_im,
              double tol, int maxit):
    cdef Py_ssize_t nn = parent.shape[0]
    cdef double[::1] ib_re = np.zeros(nn)
    cdef double[::1] ib_im = np.zeros(nn)
    cdef int sweeps = 0
    cdef double worst = 0.0
    cdef double complex e = complex(e_src)
    cdef int st = _bfs(parent, zr, zi, e.real, e.imag, house_node, p_const, q_const,
                       p0, q0, zip_c, i_d, i_q, v_re, v_im, ib_re, ib_im,
                       tol, maxit, &sweeps, &worst)
    return st, sweeps, worst


def feeder_run(net, dev, prof, out, opts):
    cdef const long[::1] parent = net["parent"]
    cdef const double[::1] zr = net["zr"]
    cdef const double[::1] zi = net["zi"]
    cdef double e_re = float(net["e_src"])
    cdef const long[::1] hn = net["house_node"]
    cdef const double[:, ::1] zip_c = net["zip"]
    cdef Py_ssize_t nh = hn.shape[0]
    cdef Py_ssize_t nn = parent.shape[0]
    cdef double i_base = net["i_base"]
    cdef double s_base_kva = net["s_base_kva"]

    cdef int binding = opts["binding"]
    cdef int gsf = opts["gsf"]
    cdef int sub = opts["substeps"]
    cdef double dt = opts["dt"]
    cdef int maxit = opts["max_iter"]
    cdef double fp_tol = opts["fp_tol"]
    cdef double bfs_tol = opts["bfs_tol"]
    cdef int bfs_maxit = opts["bfs_maxit"]

    cdef double cp[4]
    cdef double cc[10]
    for i in range(4):
        cp[i] = dev["prm"][i]
    for i in range(10):
        cc[i] = dev["curve"][i]
    cdef double s_rating = cp[2]
    cdef double vbase = cp[3]
    cdef const double[::1] mu_area = dev["mu_area"]
    cdef double[:, ::1] state = dev["state"]

    cdef const double[::1] hi
    cdef const double[:, ::1] B
    cdef const double[:, ::1] A
    cdef const long[::1] nord
    cdef const long[::1] mord
    cdef const double[::1] uoff
    cdef const double[::1] yoff
    cdef double[:, ::1] hist_y
    cdef double[:, ::1] hist_u
    cdef Py_ssize_t H = 0
    cdef Py_ssize_t Hu = 0
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
        H = hist_y.shape[1]
        Hu = hist_u.shape[1]
        if H > MAXH or Hu > MAXH:
            raise ValueError("model order exceeds compiled limit %d" % MAXH)
    else:
        hist_y = np.zeros((nh, 1))
        hist_u = np.zeros((nh, 1))

    cdef const double[::1] irr = prof["irradiance"]
    cdef const double[:, ::1] p0s = prof["p0"]
    cdef const double[:, ::1] q0s = prof["q0"]

    cdef double[:, ::1] o_v = out["v"]
    cdef double[:, ::1] o_id = out["i_d"]
    cdef double[:, ::1] o_iq = out["i_q"]
    cdef double[:, ::1] o_q = out["q"]
    cdef double[:, ::1] o_p = out["p"]
    cdef long[::1] o_it = out["iters"]

    cdef double[::1] v_re = np.full(nn, e_re)
    cdef double[::1] v_im = np.zeros(nn)
    cdef double[::1] ib_re = np.zeros(nn)
    cdef double[::1] ib_im = np.zeros(nn)
    cdef double[::1] zero = np.zeros(nh)
    cdef double[::1] vt = np.empty(nh)
    cdef double[::1] res = np.empty(nh)
    cdef double[::1] r_prev = np.empty(nh)
    cdef double[::1] i_d = np.zeros(nh)
    cdef double[::1] i_q = np.zeros(nh)
    cdef double[::1] i_dp = np.zeros(nh)
    cdef double[::1] i_qp = np.zeros(nh)
    cdef double[::1] pav = np.empty(nh)
    cdef double[::1] p0 = np.empty(nh)
    cdef double[::1] q0 = np.empty(nh)
    cdef double[:, ::1] new_state = np.empty((nh, 3))
    cdef double[:, ::1] new_y = np.empty((nh, max(H, 1)))
    cdef double[:, ::1] new_u = np.empty((nh, max(Hu, 1)))

    cdef Py_ssize_t nt = irr.shape[0]
    cdef Py_ssize_t t, h, n, r, j
    cdef int it, st = 0, sweeps, s
    cdef double omega, worst, bworst, num, den, dr, rr, v, pstar, k, iq, head, vm
    cdef double x[3]
    cdef double yh[MAXH]
    cdef double uh[MAXH]

    for h in range(nh):
        n = hn[h]
        vt[h] = hypot(v_re[n], v_im[n])

    with nogil:
        for t in range(nt):
            for h in range(nh):
                pav[h] = mu_area[h] * irr[t] / 1000.0
                p0[h] = p0s[t, h] / s_base_kva
                q0[h] = q0s[t, h] / s_base_kva
            omega = 1.0
            it = 0
            while True:
                it += 1
                for h in range(nh):
                    if binding == 0:
                        x[0] = state[h, 0]
                        x[1] = state[h, 1]
                        x[2] = state[h, 2]
                        for s in range(sub):
                            _rk4(x, vt[h], pav[h], dt, cp, cc, gsf)
                        new_state[h, 0] = x[0]
                        new_state[h, 1] = x[1]
                        new_state[h, 2] = x[2]
                        i_d[h] = x[1]
                        i_q[h] = x[2]
                    else:
                        v = vt[h]
                        pstar = pav[h] if pav[h] < s_rating else s_rating
                        k = 1000.0 / (v * vbase)
                        iq = 0.0
                        if gsf:
                            for j in range(H):
                                yh[j] = hist_y[h, j]
                            for j in range(Hu):
                                uh[j] = hist_u[h, j]
                            r = _range_index(v, hi)
                            for s in range(sub):
                                iq = _pm_step(v, r, B, A, nord, mord, uoff, yoff, yh, uh)
                                _shift(yh, H, iq)
                                _shift(uh, Hu, v)
                            for j in range(H):
                                new_y[h, j] = yh[j]
                            for j in range(Hu):
                                new_u[h, j] = uh[j]
                            head = sqrt(max(s_rating * s_rating - pstar * pstar, 0.0)) * k
                            if iq > head:
                                iq = head
                            elif iq < -head:
                                iq = -head
                        i_d[h] = pstar * k
                        i_q[h] = iq
                for h in range(nh):
                    i_dp[h] = i_d[h] / i_base
                    i_qp[h] = i_q[h] / i_base
                st = _bfs(parent, zr, zi, e_re, 0.0, hn, zero, zero, p0, q0, zip_c,
                          i_dp, i_qp, v_re, v_im, ib_re, ib_im, bfs_tol, bfs_maxit,
                          &sweeps, &bworst)
                if st != 0:
                    break
                worst = 0.0
                for h in range(nh):
                    n = hn[h]
                    rr = hypot(v_re[n], v_im[n]) - vt[h]
                    if fabs(rr) > worst:
                        worst = fabs(rr)
                    res[h] = rr
                if worst < fp_tol or it >= maxit:
                    break
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
            if st != 0:
                break
            if binding == 0:
                for h in range(nh):
                    state[h, 0] = new_state[h, 0]
                    state[h, 1] = new_state[h, 1]
                    state[h, 2] = new_state[h, 2]
            elif gsf:
                for h in range(nh):
                    for j in range(H):
                        hist_y[h, j] = new_y[h, j]
                    for j in range(Hu):
                        hist_u[h, j] = new_u[h, j]
            for n in range(nn):
                o_v[t, n] = hypot(v_re[n], v_im[n])
            for h in range(nh):
                n = hn[h]
                vm = hypot(v_re[n], v_im[n])
                o_id[t, h] = i_d[h]
                o_iq[t, h] = i_q[h]
                o_q[t, h] = vm * vbase * i_q[h] / 1000.0
                o_p[t, h] = vm * vbase * i_d[h] / 1000.0
                vt[h] = vm
            o_it[t] = it
    if st != 0:
        return st, t
    return 0, nt
