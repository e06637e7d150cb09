# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Bellman kernels.

Same contracts as :mod:`ssgvi._pykernels`; action values are accumulated
left to right starting from 0.0 so both backends agree bit for bit on
synchronous sweeps.
"""

from libc.stdint cimport int64_t, uint8_t


def backup(const int64_t[::1] state_ptr, const int64_t[::1] action_ptr,
           const int64_t[::1] targets, const double[::1] probs,
           const uint8_t[::1] is_max, const int64_t[::1] states,
           const double[::1] src, double[::1] dst):
    """dst[s] <- opt_a sum_t p * src[t] for every s in ``states``, in order.

    Passing the same array as ``src`` and ``dst`` gives a Gauss-Seidel sweep.
    """
    cdef Py_ssize_t i, s, a, k
    cdef double acc, best
    cdef Py_ssize_t m = states.shape[0]
    with nogil:
        for i in range(m):
            s = states[i]
            a = state_ptr[s]
            acc = 0.0
            for k in range(action_ptr[a], action_ptr[a + 1]):
                acc = acc + probs[k] * src[targets[k]]
            best = acc
            for a in range(state_ptr[s] + 1, state_ptr[s + 1]):
                acc = 0.0
                for k in range(action_ptr[a], action_ptr[a + 1]):
                    acc = acc + probs[k] * src[targets[k]]
                if is_max[s]:
                    if acc > best:
                        best = acc
                elif acc < best:
                    best = acc
            dst[s] = best


def action_values(const int64_t[::1] action_ptr, const int64_t[::1] targets,
                  const double[::1] probs, const int64_t[::1] actions,
                  const double[::1] f, double[::1] out):
    """out[i] <- sum_t p * f[t] for action ``actions[i]``."""
    cdef Py_ssize_t i, a, k
    cdef double acc
    with nogil:
        for i in range(actions.shape[0]):
            a = actions[i]
            acc = 0.0
            for k in range(action_ptr[a], action_ptr[a + 1]):
                acc = acc + probs[k] * f[targets[k]]
            out[i] = acc


def all_action_values(const int64_t[::1] action_ptr, const int64_t[::1] targets,
                      const double[::1] probs, const double[::1] f, double[::1] out):
    cdef Py_ssize_t a, k
    cdef double acc
    with nogil:
        for a in range(action_ptr.shape[0] - 1):
            acc = 0.0
            for k in range(action_ptr[a], action_ptr[a + 1]):
                acc = acc + probs[k] * f[targets[k]]
            out[a] = acc
