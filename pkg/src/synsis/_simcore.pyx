# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop. Mirrors ``_simcore_py`` operation for operation."""
from libc.math cimport log

cdef enum:
    DONE = 0
    NEED_UNIFORMS = 1
    LOG_FULL = 2

cdef enum:
    INFECT = 0
    RECOVER = 1
    REINFECT = 2


cdef inline double node_rate(Py_ssize_t u, unsigned char[::1] x, int[::1] m,
                             const int[::1] indptr, const int[::1] indices,
                             const double[::1] delta, const double[::1] beta,
                             const double[::1] gamma) noexcept nogil:
    cdef double acc = 0.0
    cdef double bu
    cdef int xu
    cdef Py_ssize_t e, j
    if x[u]:
        return delta[u]
    bu = beta[u]
    xu = x[u]
    for e in range(indptr[u], indptr[u + 1]):
        j = indices[e]
        if x[j]:
            acc += bu + gamma[j] * (m[j] - xu)
    return acc


cdef inline void flip(Py_ssize_t v, bint up, unsigned char[::1] x, int[::1] m, double[::1] rates,
                      const int[::1] indptr, const int[::1] indices,
                      const int[::1] hop_ptr, const int[::1] hop_idx,
                      const double[::1] delta, const double[::1] beta,
                      const double[::1] gamma) noexcept nogil:
    cdef Py_ssize_t e, u
    if up:
        x[v] = 1
        for e in range(indptr[v], indptr[v + 1]):
            m[indices[e]] += 1
    else:
        x[v] = 0
        for e in range(indptr[v], indptr[v + 1]):
            m[indices[e]] -= 1
    for e in range(hop_ptr[v], hop_ptr[v + 1]):
        u = hop_idx[e]
        rates[u] = node_rate(u, x, m, indptr, indices, delta, beta, gamma)


def init_rates(const int[::1] indptr, const int[::1] indices, const double[::1] delta,
               const double[::1] beta, const double[::1] gamma,
               unsigned char[::1] x, int[::1] m, double[::1] rates):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t u, e
    cdef int c
    for u in range(n):
        c = 0
        for e in range(indptr[u], indptr[u + 1]):
            c += x[indices[e]]
        m[u] = c
    for u in range(n):
        rates[u] = node_rate(u, x, m, indptr, indices, delta, beta, gamma)


def advance(const int[::1] indptr, const int[::1] indices,
            const int[::1] hop_ptr, const int[::1] hop_idx,
            const double[::1] delta, const double[::1] beta, const double[::1] gamma,
            unsigned char[::1] x, int[::1] m, double[::1] rates,
            double[::1] clock, long long[::1] counters, const double[::1] uniforms,
            double[::1] log_t, int[::1] log_node, signed char[::1] log_kind, bint log_on,
            const double[::1] sample_times, unsigned char[:, ::1] sample_states,
            double horizon, double burn_in, bint reinfect):
    cdef Py_ssize_t n = x.shape[0]
    cdef double t = clock[0]
    cdef double area = clock[1]
    cdef long long n_inf = counters[0]
    cdef Py_ssize_t u_pos = counters[1]
    cdef Py_ssize_t log_pos = counters[2]
    cdef Py_ssize_t s_pos = counters[3]
    cdef long long n_re = counters[4]
    cdef long long n_ev = counters[5]
    cdef Py_ssize_t n_u = uniforms.shape[0]
    cdef Py_ssize_t log_cap = log_t.shape[0]
    cdef Py_ssize_t n_samples = sample_times.shape[0]
    cdef int status = DONE
    cdef double total, dt, target, t_next, lo, acc, r
    cdef Py_ssize_t u, v, k, chosen
    cdef int kind

    with nogil:
        while True:
            if n_u - u_pos < 3:
                status = NEED_UNIFORMS
                break
            if log_on and log_cap - log_pos < 2:
                status = LOG_FULL
                break
            if n_inf == 0 and reinfect:
                v = <Py_ssize_t>(uniforms[u_pos] * n)
                u_pos += 1
                if v >= n:
                    v = n - 1
                flip(v, True, x, m, rates, indptr, indices, hop_ptr, hop_idx, delta, beta, gamma)
                n_inf += 1
                n_re += 1
                if log_on:
                    log_t[log_pos] = t
                    log_node[log_pos] = <int>v
                    log_kind[log_pos] = REINFECT
                    log_pos += 1
                continue
            total = 0.0
            for u in range(n):
                total += rates[u]
            if total > 0.0:
                dt = -log(1.0 - uniforms[u_pos]) / total
                target = uniforms[u_pos + 1] * total
                u_pos += 2
                t_next = t + dt
            else:
                t_next = horizon
            if t_next >= horizon:
                while s_pos < n_samples and sample_times[s_pos] <= horizon:
                    for k in range(n):
                        sample_states[s_pos, k] = x[k]
                    s_pos += 1
                lo = t if t > burn_in else burn_in
                if horizon > lo:
                    area += n_inf * (horizon - lo)
                t = horizon
                status = DONE
                break
            while s_pos < n_samples and sample_times[s_pos] < t_next:
                for k in range(n):
                    sample_states[s_pos, k] = x[k]
                s_pos += 1
            lo = t if t > burn_in else burn_in
            if t_next > lo:
                area += n_inf * (t_next - lo)
            t = t_next

            acc = 0.0
            chosen = -1
            for u in range(n):
                r = rates[u]
                if r > 0.0:
                    acc += r
                    chosen = u
                    if acc > target:
                        break
            if x[chosen]:
                flip(chosen, False, x, m, rates, indptr, indices, hop_ptr, hop_idx, delta, beta, gamma)
                n_inf -= 1
                kind = RECOVER
            else:
                flip(chosen, True, x, m, rates, indptr, indices, hop_ptr, hop_idx, delta, beta, gamma)
                n_inf += 1
                kind = INFECT
            n_ev += 1
            if log_on:
                log_t[log_pos] = t
                log_node[log_pos] = <int>chosen
                log_kind[log_pos] = kind
                log_pos += 1

    clock[0] = t
    clock[1] = area
    counters[0] = n_inf
    counters[1] = u_pos
    counters[2] = log_pos
    counters[3] = s_pos
    counters[4] = n_re
    counters[5] = n_ev
    return status
