"""Pure-Python value-iteration sweep; same contract as the compiled ``_vi``."""


def _row_value(start, end, col, lo, hi, x, maximize):
    budget = 1.0
    total = 0.0
    entries = []
    for k in range(start, end):
        budget -= lo[k]
        total += lo[k] * x[col[k]]
        entries.append(k)
    if maximize:
        entries.sort(key=lambda k: (-x[col[k]], col[k]))
    else:
        entries.sort(key=lambda k: (x[col[k]], col[k]))
    for k in entries:
        if budget <= 0.0:
            break
        room = hi[k] - lo[k]
        add = room if room < budget else budget
        total += add * x[col[k]]
        budget -= add
    return total


def value_iteration(state_ptr, choice_ptr, col, lo, hi, x, fixed, maximize, eps, max_iter):
    state_ptr = [int(v) for v in state_ptr]
    choice_ptr = [int(v) for v in choice_ptr]
    col = [int(v) for v in col]
    lo = [float(v) for v in lo]
    hi = [float(v) for v in hi]
    fixed = [bool(v) for v in fixed]
    cur = [float(v) for v in x]
    n = len(cur)
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        delta = 0.0
        nxt = list(cur)
        for s in range(n):
            if fixed[s] or state_ptr[s] == state_ptr[s + 1]:
                continue
            vals = [_row_value(choice_ptr[c], choice_ptr[c + 1], col, lo, hi, cur, maximize)
                    for c in range(state_ptr[s], state_ptr[s + 1])]
            best = max(vals) if maximize else min(vals)
            nxt[s] = best
            delta = max(delta, abs(best - cur[s]))
        cur = nxt
        if delta < eps:
            converged = True
            break
    for s in range(n):
        x[s] = cur[s]
    return it, converged
