# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled kernels: per-frame pixel statistics and embedding-triangle Gram terms.

Semantics match cagkit.kernels.pure; only the arithmetic route differs
(two-pass float deviation sums here vs exact integer identities there).
"""


def frame_mean_var_u8(const unsigned char[::1] data, Py_ssize_t n_frames,
                      Py_ssize_t frame_size, double[::1] out_mean,
                      double[::1] out_var):
    cdef Py_ssize_t f, k, base
    cdef long long s
    cdef double mean, acc, dev
    for f in range(n_frames):
        base = f * frame_size
        s = 0
        for k in range(frame_size):
            s += data[base + k]
        mean = s / <double> frame_size
        acc = 0.0
        for k in range(frame_size):
            dev = data[base + k] - mean
            acc += dev * dev
        out_mean[f] = mean
        out_var[f] = acc / <double> frame_size


def frame_mean_var_u16(const unsigned short[::1] data, Py_ssize_t n_frames,
                       Py_ssize_t frame_size, double[::1] out_mean,
                       double[::1] out_var):
    cdef Py_ssize_t f, k, base
    cdef long long s
    cdef double mean, acc, dev
    for f in range(n_frames):
        base = f * frame_size
        s = 0
        for k in range(frame_size):
            s += data[base + k]
        mean = s / <double> frame_size
        acc = 0.0
        for k in range(frame_size):
            dev = data[base + k] - mean
            acc += dev * dev
        out_mean[f] = mean
        out_var[f] = acc / <double> frame_size


def triangle_gram(const double[::1] iv, const double[::1] gv,
                  const double[::1] rv, Py_ssize_t n, Py_ssize_t d,
                  double[::1] out_a, double[::1] out_b, double[::1] out_ab):
    cdef Py_ssize_t t, k, base
    cdef double a, b, ab, du, dv
    for t in range(n):
        base = t * d
        a = 0.0
        b = 0.0
        ab = 0.0
        for k in range(d):
            du = iv[base + k] - gv[base + k]
            dv = iv[base + k] - rv[base + k]
            a += du * du
            b += dv * dv
            ab += du * dv
        out_a[t] = a
        out_b[t] = b
        out_ab[t] = ab
