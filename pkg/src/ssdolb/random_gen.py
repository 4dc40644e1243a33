"""Seeded random instances: posets, covers, sheaves, short exact sequences,
atlases, natural maps and cover towers.

Everything is built to be valid by construction and is reproducible from
the seed alone.
"""

import random

from .dolbeault import Atlas, AtlasMorphism, EmbeddingTriple
from .linalg import RationalMatrix
from .poset import (
    BlockSheaf, PosetSpace, ProductPoset, SheafRep, SpaceMap, StalkHom, chain_poset,
    direct_sum, hom_basis, open_indicator_sheaf,
)

M = RationalMatrix

MAX_POINTS = 20
MAX_MINIMAL = 4
MAX_RANK = 3
MAX_OPENS = 4


def rng_for(seed):
    return random.Random(seed)


def _chance(rng, percent):
    # integer coin flips keep the generators free of floating point
    return rng.randrange(100) < percent


def _check_caps(points, minimal, rank, opens):
    if points > MAX_POINTS or minimal > MAX_MINIMAL or rank > MAX_RANK or opens > MAX_OPENS:
        raise ValueError(f"size parameters exceed the caps: points <= {MAX_POINTS}, minimal "
                         f"points <= {MAX_MINIMAL}, rank <= {MAX_RANK}, opens <= {MAX_OPENS}")


def random_poset(rng, points=None, minimal=None, height=3):
    """Points 0..n-1 in levels; every non-minimal point covers one or two
    points of lower levels."""
    n = points or rng.randint(4, 12)
    k = minimal or rng.randint(1, min(MAX_MINIMAL, n))
    _check_caps(n, k, 1, 1)
    level = [0] * k + [rng.randint(1, height) for _ in range(n - k)]
    level.sort()
    rels = []
    for p in range(k, n):
        lower = [q for q in range(p) if level[q] < level[p]]
        for q in rng.sample(lower, min(len(lower), rng.randint(1, 2))):
            rels.append((q, p))
    return PosetSpace(range(n), rels)


def random_cover(rng, space, opens=None):
    """Minimal open neighbourhoods up(m) of the minimal points, sometimes
    with one more up(p); every member has a least point, so it is acyclic
    for every sheaf."""
    cap = min(opens or MAX_OPENS, MAX_OPENS)
    mins = sorted(space.minimal(space.points))
    if len(mins) > cap:
        raise ValueError(f"{len(mins)} minimal points need more than {cap} opens")
    cover = [space.up(m) for m in mins]
    if len(cover) < cap and _chance(rng, 30):
        extra = space.up(rng.choice(space.points))
        if extra not in cover:
            cover.append(extra)
    cover.sort(key=sorted)
    return cover


def _random_invertible(rng, n):
    low = M.from_entries(n, n, [(i, i, 1) for i in range(n)] +
                         [(i, j, rng.randint(-2, 2)) for i in range(n) for j in range(i)])
    up = M.from_entries(n, n, [(i, i, 1) for i in range(n)] +
                        [(i, j, rng.randint(-1, 1)) for i in range(n) for j in range(i + 1, n)])
    return low @ up


def conjugate(rng, sheaf):
    """Same sheaf in random stalk bases."""
    base = sheaf.base
    P = {x: _random_invertible(rng, sheaf.dim(x)) for x in base.points}
    inv = {x: P[x].inverse() for x in base.points}
    res = {(x, y): P[y] @ sheaf.cover_res(x, y) @ inv[x] for x, y in base.covers}
    return SheafRep(base, sheaf.dims, res, check=False), P


def _closed_indicator(space, anchor, k=1):
    b = BlockSheaf(space, [((anchor,), anchor, k)])
    return SheafRep(space, b.dims, {c: b.cover_res(*c) for c in space.covers}, check=False)


def random_sheaf(rng, space, rank=MAX_RANK, pieces=None):
    """Sum of open indicators and flasque summands in random stalk bases,
    with every stalk of dimension at most rank."""
    _check_caps(1, 1, rank, 1)
    want = pieces or rng.randint(1, 4)
    parts, dims = [], {x: 0 for x in space.points}
    for _ in range(4 * want):
        if len(parts) >= want:
            break
        if _chance(rng, 60):
            u = space.upset(rng.sample(space.points, rng.randint(1, min(2, len(space.points)))))
            p = open_indicator_sheaf(space, u)
        else:
            p = _closed_indicator(space, rng.choice(space.points))
        if all(dims[x] + p.dim(x) <= rank for x in space.points):
            parts.append(p)
            for x in space.points:
                dims[x] += p.dim(x)
    if not parts:
        parts = [open_indicator_sheaf(space, frozenset(space.points))]
    f, _ = conjugate(rng, direct_sum(parts))
    return f


def random_ses(rng, space, rank=MAX_RANK):
    """0 -> F1 -> F2 -> F3 -> 0 with F1 = F2 extended by zero off a random
    open u and F3 = F2 on the complement.  Returns the sheaves and the maps."""
    f2 = random_sheaf(rng, space, rank)
    u = space.upset(rng.sample(space.points, rng.randint(1, min(2, len(space.points)))))
    d1 = {x: (f2.dim(x) if x in u else 0) for x in space.points}
    d3 = {x: (0 if x in u else f2.dim(x)) for x in space.points}
    r1 = {(x, y): (f2.cover_res(x, y) if x in u else M.zeros(d1[y], 0)) for x, y in space.covers}
    r3 = {(x, y): (M.zeros(0, d3[x]) if y in u else f2.cover_res(x, y))
          for x, y in space.covers}
    f1 = SheafRep(space, d1, r1)
    f3 = SheafRep(space, d3, r3)
    i = StalkHom(f1, f2, {x: (M.identity(f2.dim(x)) if x in u else M.zeros(f2.dim(x), 0))
                          for x in space.points})
    p = StalkHom(f2, f3, {x: (M.zeros(0, f2.dim(x)) if x in u else M.identity(f2.dim(x)))
                          for x in space.points})
    return f1, f2, f3, i, p


def embedded_chart(space, u, length=2):
    """U embedded in U x (chain of the given length) at level 0; comes with
    the retraction back onto U."""
    sub = space.subspace(u)
    amb = ProductPoset([sub, chain_poset(length)]).materialize()
    chart = EmbeddingTriple(sub, {x: (x, 0) for x in sub.points}, amb)
    chart.retraction = SpaceMap(amb, sub, {p: p[0] for p in amb.points})
    return chart


def random_atlas(rng, space, cover, embedded=50):
    """Each chart is embedded in U x chain with probability embedded percent,
    otherwise it is the identity chart; every chart carries a retraction."""
    charts = []
    for u in cover:
        if _chance(rng, embedded):
            charts.append(embedded_chart(space, u, rng.randint(2, 3)))
        else:
            c = EmbeddingTriple.identity(space.subspace(u))
            c.retraction = SpaceMap.identity(c.space)
            charts.append(c)
    return Atlas(space, charts)


def retraction_morphism(source, target, f, tau):
    """Atlas morphism over f whose ambient maps go through the retractions of
    the source charts: D_i -> U_i -> V_tau(i) -> D'_tau(i)."""
    amb = {}
    for i, c in enumerate(source.charts):
        k = target.charts[tau[i]].embedding
        r = getattr(c, "retraction", None) or SpaceMap.identity(c.ambient)
        amb[i] = SpaceMap(c.ambient, target.charts[tau[i]].ambient,
                          (lambda r, k: lambda p: k(f(r(p))))(r, k), check=False)
    return AtlasMorphism(source, target, f, tau, amb)


def random_natural_map(rng, source, target, over=None, nonzero=True):
    """A random integer combination of a basis of natural maps source ~> target."""
    basis = hom_basis(source, target, over)
    base = target.base
    fx = (lambda x: x) if over is None else over
    stalks = {x: M.zeros(target.dim(x), source.dim(fx(x))) for x in base.points}
    for _ in range(3):
        coeffs = [rng.randint(-2, 2) for _ in basis]
        if not nonzero or any(coeffs) or not basis:
            break
    for c, h in zip(coeffs if basis else [], basis):
        if c:
            for x in base.points:
                stalks[x] = stalks[x] + h.stalk(x).scale(c)
    return StalkHom(source, target, stalks, over=over)


def random_tower(rng, space, members=3):
    """Covers U < V < W with non-decreasing refinement indices and
    overlapping members, so the nerves have edges (dimension <= 2 for the
    default three members).

    Returns (fine, mid, coarse, tau_fine, tau_mid), where the tau map cover
    indices to the next coarser cover.
    """
    coarse = [frozenset(space.points)]
    if _chance(rng, 50):
        coarse = _two_parts(rng, space, coarse[0])
    mid, tau_mid = _split(rng, space, coarse, members)
    fine, tau_fine = _split(rng, space, mid, members)
    return fine, mid, coarse, tau_fine, tau_mid


def _two_parts(rng, space, w):
    """Two overlapping opens covering w (or [w] when w cannot be split)."""
    mins = sorted(space.minimal(w))
    if len(mins) > 1 and _chance(rng, 50):
        cut = rng.randint(1, len(mins) - 1)
        second = mins[cut:] + ([mins[cut - 1]] if _chance(rng, 60) else [])
        return [space.upset(mins[:cut]), space.upset(second)]
    inner = [p for p in sorted(w) if space.up(p) != w]
    if not inner:
        return [w]
    return [w, space.up(rng.choice(inner))]


def _split(rng, space, cover, members):
    out, tau = [], {}
    room = members - len(cover)
    for j, w in enumerate(cover):
        parts = [w]
        if room > 0 and _chance(rng, 80):
            parts = _two_parts(rng, space, w)
            room -= len(parts) - 1
        for p in parts:
            tau[len(out)] = j
            out.append(frozenset(p))
    return out, tau


def random_instance(seed, points=None, rank=MAX_RANK):
    """(space, cover, atlas, sheaf) for the property and acceptance suites."""
    rng = rng_for(seed)
    space = random_poset(rng, points)
    cover = random_cover(rng, space)
    atlas = random_atlas(rng, space, cover)
    sheaf = random_sheaf(rng, space, rank)
    return space, cover, atlas, sheaf
