"""Small independent reference computations used by the tests.

They share no code with the package: plain Fraction lists, cycle counting
and order complexes built from scratch.
"""

from fractions import Fraction
from itertools import combinations


def frac_rank(rows):
    m = [[Fraction(v) for v in r] for r in rows]
    if not m:
        return 0
    rank, ncols = 0, len(m[0])
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def cycle_sign(seq):
    """Sign of the sorting permutation from its cycle decomposition."""
    order = sorted(range(len(seq)), key=lambda i: seq[i])
    seen, sign = set(), 1
    for start in range(len(order)):
        if start in seen:
            continue
        n, k = 0, start
        while k not in seen:
            seen.add(k)
            k = order[k]
            n += 1
        if n % 2 == 0:
            sign = -sign
    return sign


def order_complex_betti(points, less):
    """Rational Betti numbers of the order complex (chains of a poset), which
    is the cohomology of the constant sheaf on the Alexandrov space."""
    pts = list(points)
    chains = [[(p,) for p in pts]]
    while True:
        nxt = [c + (q,) for c in chains[-1] for q in pts if less(c[-1], q)]
        if not nxt:
            break
        chains.append(nxt)
    index = [{c: i for i, c in enumerate(level)} for level in chains]
    ranks = []
    for n in range(len(chains) - 1):
        rows = [[0] * len(chains[n]) for _ in chains[n + 1]]
        for r, c in enumerate(chains[n + 1]):
            for j in range(len(c)):
                rows[r][index[n][c[:j] + c[j + 1:]]] += (-1) ** j
        ranks.append(frac_rank(rows))
    ranks = [0] + ranks + [0]
    return [len(chains[n]) - ranks[n] - ranks[n + 1] for n in range(len(chains))]


def brute_nerve(cover):
    n = len(cover)
    out = set()
    for k in range(1, n + 1):
        for s in combinations(range(n), k):
            if frozenset.intersection(*(frozenset(cover[i]) for i in s)):
                out.add(s)
    return out
