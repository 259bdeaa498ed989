"""Pure-Python implementations of the hot kernels.

Used when the compiled extension is unavailable or when
CAGKIT_PURE_PYTHON=1 forces it. Accumulations here run on exact Python
integers where possible, so this backend doubles as a precision reference
for the native one.
"""

from __future__ import annotations


def frame_mean_var_u8(data, n_frames, frame_size, out_mean, out_var):
    _frame_mean_var(memoryview(data), n_frames, frame_size, out_mean, out_var)


def frame_mean_var_u16(data, n_frames, frame_size, out_mean, out_var):
    _frame_mean_var(memoryview(data), n_frames, frame_size, out_mean, out_var)


def _frame_mean_var(mv, n_frames, frame_size, out_mean, out_var):
    om = memoryview(out_mean)
    ov = memoryview(out_var)
    for f in range(n_frames):
        base = f * frame_size
        s = 0
        ss = 0
        for k in range(base, base + frame_size):
            v = mv[k]
            s += v
            ss += v * v
        om[f] = s / frame_size
        # population variance via the exact integer identity
        # n*ss - s*s >= 0 (Cauchy-Schwarz), so no clamp is needed here
        ov[f] = (frame_size * ss - s * s) / (frame_size * frame_size)


def triangle_gram(iv, gv, rv, n, d, out_a, out_b, out_ab):
    """Per triple: a=<i-g,i-g>, b=<i-r,i-r>, ab=<i-g,i-r> over flat buffers."""
    mi = memoryview(iv)
    mg = memoryview(gv)
    mr = memoryview(rv)
    oa = memoryview(out_a)
    ob = memoryview(out_b)
    oab = memoryview(out_ab)
    for t in range(n):
        base = t * d
        a = 0.0
        b = 0.0
        ab = 0.0
        for k in range(base, base + d):
            du = mi[k] - mg[k]
            dv = mi[k] - mr[k]
            a += du * du
            b += dv * dv
            ab += du * dv
        oa[t] = a
        ob[t] = b
        oab[t] = ab
