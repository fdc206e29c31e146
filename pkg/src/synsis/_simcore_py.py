"""Pure-Python event loop; reference twin of the compiled ``_simcore``.

Both implementations consume the caller's uniforms in the same order and
perform the same floating-point operations in the same order, so a given
seed produces bit-identical runs on either backend.

Scalar state travels in two small arrays so the loop can be suspended and
resumed: ``clock = [t, area]`` and ``counters = [n_infected, u_pos,
log_pos, sample_pos, reinfections, events]``. Return codes: ``DONE`` (the
horizon was reached), ``NEED_UNIFORMS`` and ``LOG_FULL``.
"""
import math

DONE = 0
NEED_UNIFORMS = 1
LOG_FULL = 2

INFECT = 0
RECOVER = 1
REINFECT = 2


def node_rate(u, x, m, indptr, indices, delta, beta, gamma):
    if x[u]:
        return delta[u]
    acc = 0.0
    bu = beta[u]
    xu = x[u]
    for e in range(indptr[u], indptr[u + 1]):
        j = indices[e]
        if x[j]:
            acc += bu + gamma[j] * (m[j] - xu)
    return acc


def init_rates(indptr, indices, delta, beta, gamma, x, m, rates):
    n = len(x)
    for u in range(n):
        c = 0
        for e in range(indptr[u], indptr[u + 1]):
            c += x[indices[e]]
        m[u] = c
    for u in range(n):
        rates[u] = node_rate(u, x, m, indptr, indices, delta, beta, gamma)


def advance(indptr, indices, hop_ptr, hop_idx, delta, beta, gamma,
            x_arr, m_arr, rates_arr, clock, counters, uniforms,
            log_t, log_node, log_kind, log_on,
            sample_times, sample_states, horizon, burn_in, reinfect):
    indptr = indptr.tolist()
    indices = indices.tolist()
    hop_ptr = hop_ptr.tolist()
    hop_idx = hop_idx.tolist()
    delta = delta.tolist()
    beta = beta.tolist()
    gamma = gamma.tolist()
    x = x_arr.tolist()
    m = m_arr.tolist()
    rates = rates_arr.tolist()
    n = len(x)
    t, area = float(clock[0]), float(clock[1])
    n_inf, u_pos, log_pos, s_pos, n_re, n_ev = (int(c) for c in counters)
    n_u = len(uniforms)
    log_cap = len(log_t)
    n_samples = len(sample_times)
    status = DONE

    def flip(v, up):
        nonlocal n_inf
        if up:
            x[v] = 1
            n_inf += 1
            for e in range(indptr[v], indptr[v + 1]):
                m[indices[e]] += 1
        else:
            x[v] = 0
            n_inf -= 1
            for e in range(indptr[v], indptr[v + 1]):
                m[indices[e]] -= 1
        for e in range(hop_ptr[v], hop_ptr[v + 1]):
            u = hop_idx[e]
            rates[u] = node_rate(u, x, m, indptr, indices, delta, beta, gamma)

    while True:
        if n_u - u_pos < 3:
            status = NEED_UNIFORMS
            break
        if log_on and log_cap - log_pos < 2:
            status = LOG_FULL
            break
        if n_inf == 0 and reinfect:
            v = int(uniforms[u_pos] * n)
            u_pos += 1
            if v >= n:
                v = n - 1
            flip(v, True)
            n_re += 1
            if log_on:
                log_t[log_pos] = t
                log_node[log_pos] = v
                log_kind[log_pos] = REINFECT
                log_pos += 1
            continue
        total = 0.0
        for u in range(n):
            total += rates[u]
        if total > 0.0:
            dt = -math.log(1.0 - uniforms[u_pos]) / total
            target = uniforms[u_pos + 1] * total
            u_pos += 2
            t_next = t + dt
        else:
            t_next = horizon
        if t_next >= horizon:
            while s_pos < n_samples and sample_times[s_pos] <= horizon:
                sample_states[s_pos, :] = x
                s_pos += 1
            lo = t if t > burn_in else burn_in
            if horizon > lo:
                area += n_inf * (horizon - lo)
            t = horizon
            status = DONE
            break
        while s_pos < n_samples and sample_times[s_pos] < t_next:
            sample_states[s_pos, :] = x
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
            flip(chosen, False)
            kind = RECOVER
        else:
            flip(chosen, True)
            kind = INFECT
        n_ev += 1
        if log_on:
            log_t[log_pos] = t
            log_node[log_pos] = chosen
            log_kind[log_pos] = kind
            log_pos += 1

    x_arr[:] = x
    m_arr[:] = m
    rates_arr[:] = rates
    clock[0] = t
    clock[1] = area
    counters[:] = (n_inf, u_pos, log_pos, s_pos, n_re, n_ev)
    return status
