"""Exact rational feasibility and integer rank helpers.

Everything here works on :class:`fractions.Fraction` or ``int`` so that
polytope membership verdicts never depend on floating point rounding.
"""

from fractions import Fraction


def is_feasible(A, b):
    """Decide whether ``A x = b, x >= 0`` has a solution.

    Phase one of the simplex method with Bland's rule (so it terminates),
    carried out in exact rational arithmetic.

    Parameters
    ----------
    A : sequence of sequences
        ``k x n`` constraint matrix with rational entries.
    b : sequence
        Right-hand side of length ``k``.
    """
    rows = [[Fraction(v) for v in row] for row in A]
    rhs = [Fraction(v) for v in b]
    k = len(rows)
    if k == 0:
        return True
    n = len(rows[0])
    for i in range(k):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    # tableau columns: n originals, k artificials; basis starts artificial
    width = n + k
    tab = [rows[i] + [Fraction(int(i == j)) for j in range(k)] + [rhs[i]] for i in range(k)]
    basis = [n + i for i in range(k)]
    # reduced cost row of the phase-one objective (sum of artificials)
    cost = [Fraction(0)] * (width + 1)
    for i in range(k):
        for j in range(width + 1):
            cost[j] -= tab[i][j]
    for i in range(k):
        cost[n + i] += 1

    while True:
        entering = next((j for j in range(width) if cost[j] < 0), None)
        if entering is None:
            break
        leaving = None
        best = None
        for i in range(k):
            a = tab[i][entering]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best, leaving = ratio, i
        if leaving is None:
            # objective is bounded below by zero, so this cannot happen
            raise ArithmeticError("phase-one LP reported unbounded")
        piv = tab[leaving][entering]
        tab[leaving] = [v / piv for v in tab[leaving]]
        for i in range(k):
            if i != leaving and tab[i][entering] != 0:
                factor = tab[i][entering]
                tab[i] = [v - factor * w for v, w in zip(tab[i], tab[leaving])]
        factor = cost[entering]
        cost = [v - factor * w for v, w in zip(cost, tab[leaving])]
        basis[leaving] = entering

    return -cost[-1] == 0


def integer_rank(vectors):
    """Rank of the lattice spanned by integer ``vectors``.

    Row reduction with Euclidean steps only (a Hermite-style echelon form),
    so the arithmetic stays in the integers throughout.
    """
    rows = [list(map(int, v)) for v in vectors if any(v)]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        active = [r for r in rows[rank:] if r[col] != 0]
        if not active:
            continue
        rest = [r for r in rows[rank:] if r[col] == 0]
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[col]))
            pivot = active[0]
            reduced = [pivot]
            for r in active[1:]:
                q = r[col] // pivot[col]
                r = [a - q * p for a, p in zip(r, pivot)]
                (reduced if r[col] != 0 else rest).append(r)
            active = reduced
        rows = rows[:rank] + active + rest
        rank += 1
        if rank == len(rows):
            break
    return rank


def solve_rational(M, v):
    """Solve the square system ``M x = v`` exactly; returns ``None`` if singular."""
    n = len(M)
    aug = [[Fraction(a) for a in row] + [Fraction(c)] for row, c in zip(M, v)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [a / p for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[-1] for row in aug]


def pivot_columns(M):
    """Indices of a maximal set of linearly independent columns of ``M``."""
    rows = [[Fraction(a) for a in row] for row in M]
    if not rows:
        return []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][col]
        rows[r] = [a / p for a in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return pivots
