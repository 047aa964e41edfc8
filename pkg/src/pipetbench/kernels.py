"""Hot numeric kernels: FK chains, damped-least-squares IK, primitive
collision tests, and velocity-profile integration.

Everything here is written in a loop style that numba compiles to fast
machine code.  When numba is unavailable, or when the environment variable
``PIPETBENCH_NO_NUMBA`` is set to a non-empty value other than ``0``, the
same functions run as plain numpy/Python.  The jitted variants keep the
original Python function reachable via ``fn.py_func`` (used by the
benchmark in ``benchmarks/bench_kernels.py``).
"""

import math
import os

import numpy as np


def _identity_decorator(*args, **kwargs):
    if args and callable(args[0]):
        return args[0]

    def wrap(fn):
        return fn

    return wrap


_disabled = os.environ.get("PIPETBENCH_NO_NUMBA", "") not in ("", "0")
try:
    if _disabled:
        raise ImportError("numba disabled via PIPETBENCH_NO_NUMBA")
    from numba import njit

    JIT_ENABLED = True
except ImportError:
    njit = _identity_decorator
    JIT_ENABLED = False


# ---------------------------------------------------------------------------
# forward kinematics


@njit(cache=True)
def fk_frames(dh, q, tool):
    """Serial-chain frames for a 6R arm with standard DH rows [a, alpha, d, theta0].

    Returns an (8, 4, 4) array: frames[0] is the base identity, frames[i]
    is the transform up to joint i, frames[7] is the shaft-tip frame
    (flange composed with the tool transform).
    """
    frames = np.empty((8, 4, 4))
    frames[0] = np.eye(4)
    for i in range(6):
        a = dh[i, 0]
        ca = math.cos(dh[i, 1])
        sa = math.sin(dh[i, 1])
        d = dh[i, 2]
        th = q[i] + dh[i, 3]
        ct = math.cos(th)
        st = math.sin(th)
        link = np.empty((4, 4))
        link[0, 0] = ct
        link[0, 1] = -st * ca
        link[0, 2] = st * sa
        link[0, 3] = a * ct
        link[1, 0] = st
        link[1, 1] = ct * ca
        link[1, 2] = -ct * sa
        link[1, 3] = a * st
        link[2, 0] = 0.0
        link[2, 1] = sa
        link[2, 2] = ca
        link[2, 3] = d
        link[3, 0] = 0.0
        link[3, 1] = 0.0
        link[3, 2] = 0.0
        link[3, 3] = 1.0
        frames[i + 1] = np.dot(frames[i], link)
    frames[7] = np.dot(frames[6], tool)
    return frames


@njit(cache=True)
def tip_jacobian(frames):
    """Geometric Jacobian (6x6) of the shaft tip; rows = [linear; angular]."""
    jac = np.empty((6, 6))
    tip = frames[7, :3, 3]
    for j in range(6):
        zx = frames[j, 0, 2]
        zy = frames[j, 1, 2]
        zz = frames[j, 2, 2]
        rx = tip[0] - frames[j, 0, 3]
        ry = tip[1] - frames[j, 1, 3]
        rz = tip[2] - frames[j, 2, 3]
        jac[0, j] = zy * rz - zz * ry
        jac[1, j] = zz * rx - zx * rz
        jac[2, j] = zx * ry - zy * rx
        jac[3, j] = zx
        jac[4, j] = zy
        jac[5, j] = zz
    return jac


@njit(cache=True)
def rotation_log(rot):
    """Axis-angle vector of a rotation matrix."""
    tr = rot[0, 0] + rot[1, 1] + rot[2, 2]
    c = (tr - 1.0) * 0.5
    if c > 1.0:
        c = 1.0
    if c < -1.0:
        c = -1.0
    angle = math.acos(c)
    out = np.zeros(3)
    if angle < 1e-12:
        return out
    if angle > math.pi - 1e-6:
        # near pi: extract axis from the symmetric part
        xx = (rot[0, 0] + 1.0) * 0.5
        yy = (rot[1, 1] + 1.0) * 0.5
        zz = (rot[2, 2] + 1.0) * 0.5
        out[0] = math.sqrt(max(xx, 0.0))
        out[1] = math.sqrt(max(yy, 0.0))
        out[2] = math.sqrt(max(zz, 0.0))
        if rot[2, 1] - rot[1, 2] < 0.0:
            out[0] = -out[0]
        if rot[0, 2] - rot[2, 0] < 0.0:
            out[1] = -out[1]
        if rot[1, 0] - rot[0, 1] < 0.0:
            out[2] = -out[2]
        n = math.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2)
        if n > 0.0:
            for k in range(3):
                out[k] = out[k] / n * angle
        return out
    s = 2.0 * math.sin(angle)
    out[0] = (rot[2, 1] - rot[1, 2]) / s * angle
    out[1] = (rot[0, 2] - rot[2, 0]) / s * angle
    out[2] = (rot[1, 0] - rot[0, 1]) / s * angle
    return out


@njit(cache=True)
def _tip_error(dh, tool, q, target, err):
    """Fill the 6-vector [position; orientation] error; return squared norms."""
    frames = fk_frames(dh, q, tool)
    pe = 0.0
    for k in range(3):
        err[k] = target[k, 3] - frames[7, k, 3]
        pe += err[k] * err[k]
    rerr = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            s = 0.0
            for k in range(3):
                s += target[r, k] * frames[7, c, k]
            rerr[r, c] = s
    w = rotation_log(rerr)
    re = 0.0
    for k in range(3):
        err[3 + k] = w[k]
        re += w[k] * w[k]
    return frames, pe, re


@njit(cache=True)
def ik_dls(dh, tool, lim_lo, lim_hi, target, q0, max_iters, damping, pos_tol, rot_tol):
    """Damped least-squares IK toward a 4x4 tip target, with adaptive
    (Levenberg-Marquardt style) damping and step acceptance.

    Returns (q, status): status 0 = converged within limits, 1 = not
    converged, 2 = converged but violates joint limits.
    """
    q = q0.copy()
    err = np.empty(6)
    trial_err = np.empty(6)
    lam = damping
    frames, pe, re = _tip_error(dh, tool, q, target, err)
    cost = pe + re
    for _ in range(max_iters):
        if pe < pos_tol * pos_tol and re < rot_tol * rot_tol:
            for j in range(6):
                if q[j] < lim_lo[j] - 1e-9 or q[j] > lim_hi[j] + 1e-9:
                    return q, 2
            return q, 0
        jac = tip_jacobian(frames)
        accepted = False
        for _try in range(8):
            jjt = np.dot(jac, jac.T)
            for k in range(6):
                jjt[k, k] += lam * lam
            y = np.linalg.solve(jjt, err)
            dq = np.dot(jac.T, y)
            n = 0.0
            for j in range(6):
                n += dq[j] * dq[j]
            n = math.sqrt(n)
            if n > 0.8:
                for j in range(6):
                    dq[j] *= 0.8 / n
            trial = np.empty(6)
            for j in range(6):
                v = q[j] + dq[j]
                # soft clamp so solutions stay near the usable range
                if v < lim_lo[j] - 0.2:
                    v = lim_lo[j] - 0.2
                if v > lim_hi[j] + 0.2:
                    v = lim_hi[j] + 0.2
                trial[j] = v
            tframes, tpe, tre = _tip_error(dh, tool, trial, target, trial_err)
            if tpe + tre < cost:
                q = trial
                frames = tframes
                pe = tpe
                re = tre
                cost = tpe + tre
                for k in range(6):
                    err[k] = trial_err[k]
                lam = max(lam / 3.0, damping)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            return q, 1
    return q, 1


# ---------------------------------------------------------------------------
# primitive distance / overlap tests


@njit(cache=True)
def seg_seg_sqdist(p0, p1, q0, q1):
    """Squared distance between segments [p0,p1] and [q0,q1]."""
    d1 = np.empty(3)
    d2 = np.empty(3)
    r = np.empty(3)
    for k in range(3):
        d1[k] = p1[k] - p0[k]
        d2[k] = q1[k] - q0[k]
        r[k] = p0[k] - q0[k]
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    eps = 1e-15
    if a <= eps and e <= eps:
        return r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
    if a <= eps:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
        if e <= eps:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - b * b
            if denom > eps:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = b * s + f
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > e:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
            else:
                t = t / e
    dist2 = 0.0
    for k in range(3):
        diff = (p0[k] + d1[k] * s) - (q0[k] + d2[k] * t)
        dist2 += diff * diff
    return dist2


@njit(cache=True)
def seg_aabb_sqdist(s0, s1, half):
    """Exact squared distance between a segment and an origin-centred AABB.

    Point-to-box distance along the segment is piecewise quadratic with
    breakpoints where a coordinate crosses a face plane; each piece is
    minimised in closed form.
    """
    ts = np.empty(10)
    ts[0] = 0.0
    ts[1] = 1.0
    n = 2
    for k in range(3):
        dk = s1[k] - s0[k]
        if abs(dk) > 1e-15:
            for sign in (-1.0, 1.0):
                t = (sign * half[k] - s0[k]) / dk
                if 0.0 < t < 1.0:
                    ts[n] = t
                    n += 1
    # insertion sort of the small breakpoint list
    for i in range(1, n):
        key = ts[i]
        j = i - 1
        while j >= 0 and ts[j] > key:
            ts[j + 1] = ts[j]
            j -= 1
        ts[j + 1] = key
    best = 1e300
    for i in range(n - 1):
        ta = ts[i]
        tb = ts[i + 1]
        if tb - ta < 1e-15:
            continue
        tm = 0.5 * (ta + tb)
        # quadratic A t^2 + B t + C on this interval (fixed clamp pattern)
        qa = 0.0
        qb = 0.0
        qc = 0.0
        active = False
        for k in range(3):
            pk = s0[k] + (s1[k] - s0[k]) * tm
            if pk > half[k]:
                off = -half[k]
            elif pk < -half[k]:
                off = half[k]
            else:
                continue
            active = True
            bk = s1[k] - s0[k]
            ak = s0[k] + off
            qa += bk * bk
            qb += 2.0 * ak * bk
            qc += ak * ak
        if not active:
            return 0.0
        if qa > 1e-15:
            tstar = -qb / (2.0 * qa)
            if tstar < ta:
                tstar = ta
            elif tstar > tb:
                tstar = tb
        else:
            tstar = tm
        val = qa * tstar * tstar + qb * tstar + qc
        if val < best:
            best = val
    if best < 0.0:
        best = 0.0
    return best


@njit(cache=True)
def capsule_box_overlap(p0, p1, radius, center, rot, half):
    """Capsule vs oriented box; rot maps box-local to world."""
    l0 = np.empty(3)
    l1 = np.empty(3)
    for r in range(3):
        a = 0.0
        b = 0.0
        for k in range(3):
            a += rot[k, r] * (p0[k] - center[k])
            b += rot[k, r] * (p1[k] - center[k])
        l0[r] = a
        l1[r] = b
    return seg_aabb_sqdist(l0, l1, half) <= radius * radius


@njit(cache=True)
def box_box_overlap(ca, ra, ha, cb, rb, hb):
    """Oriented-box overlap via the separating-axis test (15 axes)."""
    rm = np.empty((3, 3))
    absr = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += ra[k, i] * rb[k, j]
            rm[i, j] = s
            absr[i, j] = abs(s) + 1e-12
    tw = np.empty(3)
    for k in range(3):
        tw[k] = cb[k] - ca[k]
    t = np.empty(3)
    for i in range(3):
        s = 0.0
        for k in range(3):
            s += ra[k, i] * tw[k]
        t[i] = s
    for i in range(3):
        rb_i = hb[0] * absr[i, 0] + hb[1] * absr[i, 1] + hb[2] * absr[i, 2]
        if abs(t[i]) > ha[i] + rb_i:
            return False
    for j in range(3):
        ra_j = ha[0] * absr[0, j] + ha[1] * absr[1, j] + ha[2] * absr[2, j]
        proj = t[0] * rm[0, j] + t[1] * rm[1, j] + t[2] * rm[2, j]
        if abs(proj) > ra_j + hb[j]:
            return False
    for i in range(3):
        for j in range(3):
            i1 = (i + 1) % 3
            i2 = (i + 2) % 3
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            ra_e = ha[i1] * absr[i2, j] + ha[i2] * absr[i1, j]
            rb_e = hb[j1] * absr[i, j2] + hb[j2] * absr[i, j1]
            proj = t[i2] * rm[i1, j] - t[i1] * rm[i2, j]
            if abs(proj) > ra_e + rb_e:
                return False
    return True


@njit(cache=True)
def config_collides(
    dh,
    tool,
    q,
    cap_link,
    cap_p0,
    cap_p1,
    cap_r,
    self_i,
    self_j,
    box_c,
    box_r,
    box_h,
    scap_p0,
    scap_p1,
    scap_r,
):
    """True when any robot capsule hits a scene primitive or a non-adjacent
    robot capsule.  Robot capsules are given in link-local frames."""
    frames = fk_frames(dh, q, tool)
    ncap = cap_link.shape[0]
    w0 = np.empty((ncap, 3))
    w1 = np.empty((ncap, 3))
    for i in range(ncap):
        f = frames[cap_link[i]]
        for r in range(3):
            w0[i, r] = (
                f[r, 0] * cap_p0[i, 0]
                + f[r, 1] * cap_p0[i, 1]
                + f[r, 2] * cap_p0[i, 2]
                + f[r, 3]
            )
            w1[i, r] = (
                f[r, 0] * cap_p1[i, 0]
                + f[r, 1] * cap_p1[i, 1]
                + f[r, 2] * cap_p1[i, 2]
                + f[r, 3]
            )
    nbox = box_c.shape[0]
    nscap = scap_p0.shape[0]
    for i in range(ncap):
        for b in range(nbox):
            if capsule_box_overlap(w0[i], w1[i], cap_r[i], box_c[b], box_r[b], box_h[b]):
                return True
        for s in range(nscap):
            rr = cap_r[i] + scap_r[s]
            if seg_seg_sqdist(w0[i], w1[i], scap_p0[s], scap_p1[s]) <= rr * rr:
                return True
    for k in range(self_i.shape[0]):
        i = self_i[k]
        j = self_j[k]
        rr = cap_r[i] + cap_r[j]
        if seg_seg_sqdist(w0[i], w1[i], w0[j], w1[j]) <= rr * rr:
            return True
    return False


@njit(cache=True)
def edge_collides(
    dh,
    tool,
    qa,
    qb,
    step,
    cap_link,
    cap_p0,
    cap_p1,
    cap_r,
    self_i,
    self_j,
    box_c,
    box_r,
    box_h,
    scap_p0,
    scap_p1,
    scap_r,
):
    """Check a straight joint-space segment at max per-joint resolution ``step``."""
    span = 0.0
    for j in range(6):
        d = abs(qb[j] - qa[j])
        if d > span:
            span = d
    n = int(math.ceil(span / step)) + 1
    q = np.empty(6)
    for i in range(n + 1):
        t = i / n if n > 0 else 0.0
        for j in range(6):
            q[j] = qa[j] + (qb[j] - qa[j]) * t
        if config_collides(
            dh, tool, q, cap_link, cap_p0, cap_p1, cap_r, self_i, self_j,
            box_c, box_r, box_h, scap_p0, scap_p1, scap_r,
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# velocity-profile integration (time parameterization)


@njit(cache=True)
def velocity_profile(ds, v_cap, a_cap, stop_mask):
    """Forward/backward integration of the path-speed profile.

    ds: (N-1,) arc-length steps; v_cap: (N,) speed caps; a_cap: (N-1,) path
    acceleration caps per interval; stop_mask: (N,) forces v = 0.
    Returns the (N,) attainable speed at each sample.
    """
    n = v_cap.shape[0]
    v = np.empty(n)
    for i in range(n):
        v[i] = 0.0 if stop_mask[i] else v_cap[i]
    v[0] = 0.0
    v[n - 1] = 0.0
    for i in range(n - 1):
        reach = math.sqrt(v[i] * v[i] + 2.0 * a_cap[i] * ds[i])
        if reach < v[i + 1]:
            v[i + 1] = reach
    for i in range(n - 2, -1, -1):
        reach = math.sqrt(v[i + 1] * v[i + 1] + 2.0 * a_cap[i] * ds[i])
        if reach < v[i]:
            v[i] = reach
    return v
