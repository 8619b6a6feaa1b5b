# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transmission-attempt kernel.

Must stay arithmetically identical to ``_transmit_py.transmit_attempts``.
"""
import numpy as np
cimport numpy as cnp


def transmit_attempts(const double[::1] u, double p_g, long n_g, long n_o,
                      long s_g, long s_o):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef long new_g = 0, new_o = 0
    cdef double w, ui
    cdef double q_o = 1.0 - p_g
    for i in range(n):
        ui = u[i]
        if ui < p_g:
            w = ui / p_g
            if w * n_g < s_g:
                s_g -= 1
                new_g += 1
        else:
            w = (ui - p_g) / q_o
            if w * n_o < s_o:
                s_o -= 1
                new_o += 1
    return new_g, new_o
