import itertools

from bufmin.lp import EQ, GE, LE, LinearProgram, lp_solve_exact
from bufmin.rational import Q


def test_one_dimensional():
    lp = LinearProgram()
    x = lp.var("x")
    lp.add({x: 1}, LE, Q(2, 3))
    lp.objective({x: 1}, "max")
    res = lp.solve()
    assert res.status == "optimal"
    assert lp.value(res, x) == Q(2, 3)
    assert res.objective == Q(2, 3)


def test_exact_not_float():
    lp = LinearProgram()
    x, y = lp.var("x"), lp.var("y")
    lp.add({x: 3, y: 1}, LE, 1)
    lp.add({x: 1, y: 3}, LE, 1)
    lp.objective({x: 1, y: 1}, "max")
    res = lp.solve()
    assert res.objective == Q(1, 2)
    assert lp.value(res, x) == Q(1, 4)


def test_infeasible_with_farkas():
    lp = LinearProgram()
    x = lp.var("x")
    lp.add({x: 1}, GE, 2)
    lp.add({x: 1}, LE, 1)
    res = lp.solve()
    assert res.status == "infeasible"
    assert res.farkas is not None  # checked internally in exact arithmetic


def test_unbounded_with_ray():
    res = lp_solve_exact([[Q(1), Q(-1)]], [Q(0)], [Q(-1), Q(0)])
    assert res.status == "unbounded"
    assert res.ray is not None


def test_equality_rows():
    lp = LinearProgram()
    x, y = lp.var("x"), lp.var("y")
    lp.add({x: 1, y: 1}, EQ, 1)
    lp.add({x: 1, y: -1}, EQ, Q(1, 3))
    lp.objective({x: 1}, "min")
    res = lp.solve()
    assert lp.value(res, x) == Q(2, 3)
    assert lp.value(res, y) == Q(1, 3)


def test_redundant_rows():
    lp = LinearProgram()
    x, y = lp.var("x"), lp.var("y")
    lp.add({x: 1, y: 1}, EQ, 1)
    lp.add({x: 2, y: 2}, EQ, 2)
    lp.objective({x: 1}, "min")
    res = lp.solve()
    assert res.status == "optimal"
    assert res.objective == 0


def brute_force_vertex_opt(A, b, c):
    """Independent oracle: enumerate basic solutions of Ax = b, x >= 0."""
    m, n = len(A), len(c)
    best = None
    for cols in itertools.combinations(range(n), m):
        # solve the square system by Gaussian elimination over Q
        M = [[A[i][j] for j in cols] + [b[i]] for i in range(m)]
        x = _gauss(M)
        if x is None or any(v < 0 for v in x):
            continue
        full = [Q(0)] * n
        for k, j in enumerate(cols):
            full[j] = x[k]
        val = sum(c[j] * full[j] for j in range(n))
        if best is None or val < best:
            best = val
    return best


def _gauss(M):
    m = len(M)
    M = [row[:] for row in M]
    for col in range(m):
        piv = next((r for r in range(col, m) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = Q(1) / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][m] for r in range(m)]


def test_beale_degenerate_cycling_instance():
    # Classic degenerate instance that cycles under Dantzig's rule;
    # Bland's rule must terminate at the true optimum.
    A = [
        [Q(1, 4), Q(-60), Q(-1, 25), Q(9), Q(1), Q(0), Q(0)],
        [Q(1, 2), Q(-90), Q(-1, 50), Q(3), Q(0), Q(1), Q(0)],
        [Q(0), Q(0), Q(1), Q(0), Q(0), Q(0), Q(1)],
    ]
    b = [Q(0), Q(0), Q(1)]
    c = [Q(-3, 4), Q(150), Q(-1, 50), Q(6), Q(0), Q(0), Q(0)]
    res = lp_solve_exact(A, b, c)
    assert res.status == "optimal"
    expected = brute_force_vertex_opt(A, b, c)
    assert res.objective == expected == Q(-1, 20)


def test_duality_certificate_random_instances():
    import random
    rng = random.Random(7)
    for _ in range(25):
        m, n = rng.randint(1, 4), rng.randint(2, 6)
        A = [[Q(rng.randint(-3, 3)) for _ in range(n)] for _ in range(m)]
        b = [Q(rng.randint(0, 4)) for _ in range(m)]
        c = [Q(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(n)]
        res = lp_solve_exact(A, b, c)  # internal certificate checks must pass
        if res.status == "optimal":
            expected = brute_force_vertex_opt(A, b, c)
            assert res.objective == expected
