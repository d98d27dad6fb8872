def traces_equivalent(a, b) -> bool:
    """Equality of traces as piecewise-linear load functions (the point
    lists may differ by breakpoints that cut segments without bending them)."""
    if (a.n, a.model, a.drained) != (b.n, b.model, b.drained):
        return False
    if a.max_load != b.max_load or a.end != b.end:
        return False
    ts = sorted(set(a.breakpoints()) | set(b.breakpoints()))
    grid = []
    for u, v in zip(ts, ts[1:]):
        grid += [u, (u + v) / 2]
    grid.append(ts[-1])
    for t in grid:
        for i in range(a.n):
            if a.load_at(i, t) != b.load_at(i, t):
                return False
    return True
