"""Finite posets with the Alexandrov (up-set) topology and sheaves on them.

A sheaf is a representation of the poset: a stalk per point and a
restriction matrix for every covering relation x < y.  Sections over an open
set are compatible families; their coordinates are taken at the minimal
points of the open set, with the canonical (RREF) kernel basis.

Sheaves that are finite sums of skyscrapers ("block sheaves") get a separate
class: stalks are sub-lists of blocks and restriction maps are projections.
All flasque resolutions built here are of that kind.
"""

from collections import defaultdict
from functools import cached_property
from itertools import product

from .linalg import RationalMatrix, CochainComplex, to_q

M = RationalMatrix


class PosetSpace:
    def __init__(self, points, relations=()):
        pts = sorted(set(points))
        self.points = tuple(pts)
        self._index = {p: k for k, p in enumerate(self.points)}
        succ = defaultdict(set)
        for x, y in relations:
            if x not in self._index or y not in self._index:
                raise ValueError(f"relation ({x!r}, {y!r}) mentions an unknown point")
            if x != y:
                succ[x].add(y)
        up = {}
        for p in self.points:
            seen, stack = {p}, [p]
            while stack:
                for q in succ[stack.pop()]:
                    if q not in seen:
                        seen.add(q)
                        stack.append(q)
            up[p] = frozenset(seen)
        for p in self.points:
            for q in up[p]:
                if q != p and p in up[q]:
                    raise ValueError(f"order is not antisymmetric: {p!r} and {q!r}")
        self._up = up
        down = defaultdict(set)
        for p in self.points:
            for q in up[p]:
                down[q].add(p)
        self._down = {p: frozenset(down[p]) for p in self.points}

    def __repr__(self):
        return f"PosetSpace({len(self.points)} points, {len(self.covers)} covers)"

    def __contains__(self, p):
        return p in self._index

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, PosetSpace) and self.points == other.points \
            and self._up == other._up

    def __hash__(self):
        return hash(self.points)

    def leq(self, x, y):
        return y in self._up[x]

    def lt(self, x, y):
        return x != y and y in self._up[x]

    def up(self, x):
        """Minimal open neighbourhood U_x."""
        return self._up[x]

    def down(self, x):
        return self._down[x]

    @cached_property
    def covers(self):
        out = []
        for x in self.points:
            above = self._up[x] - {x}
            for y in sorted(above):
                if not any(z != y and y in self._up[z] for z in above):
                    out.append((x, y))
        return tuple(out)

    @cached_property
    def upper_covers(self):
        d = defaultdict(list)
        for x, y in self.covers:
            d[x].append(y)
        return {p: tuple(d[p]) for p in self.points}

    def relations(self):
        return list(self.covers)

    def is_open(self, u):
        u = set(u)
        return u <= set(self.points) and all(self._up[x] <= u for x in u)

    def is_closed(self, z):
        z = set(z)
        return z <= set(self.points) and all(self._down[x] <= z for x in z)

    def upset(self, s):
        out = set()
        for x in s:
            out |= self._up[x]
        return frozenset(out)

    def downset(self, s):
        out = set()
        for x in s:
            out |= self._down[x]
        return frozenset(out)

    def minimal(self, s):
        s = set(s)
        return sorted(x for x in s if not any(y != x and y in s for y in self._down[x]))

    def maximal(self, s):
        s = set(s)
        return sorted(x for x in s if not any(y != x and y in s for y in self._up[x]))

    def subspace(self, s):
        s = set(s)
        return PosetSpace(s, [(x, y) for x in s for y in self._up[x] if y in s and y != x])

    def require_open(self, u):
        if not self.is_open(u):
            raise ValueError(f"{sorted(u)} is not an open (up-closed) subset")
        return frozenset(u)

    @cached_property
    def height(self):
        h = {}
        for p in self._topological_desc():
            h[p] = max((h[y] + 1 for y in self.upper_covers[p]), default=0)
        return max(h.values(), default=0)

    def _topological_desc(self):
        # points ordered so that every point comes after everything above it
        return sorted(self.points, key=lambda p: len(self._down[p]), reverse=True)

    def chains(self, n, within=None, start=None):
        """Strict chains x0 < ... < xn (n+1 points), lexicographically sorted."""
        allowed = set(self.points) if within is None else set(within)
        firsts = sorted(allowed if start is None else (allowed & set(start)))
        out = []

        def grow(ch):
            if len(ch) == n + 1:
                out.append(tuple(ch))
                return
            for y in sorted(self._up[ch[-1]]):
                if y != ch[-1] and y in allowed:
                    ch.append(y)
                    grow(ch)
                    ch.pop()

        for x in firsts:
            grow([x])
        return out

    def open_sets(self):
        """Every open set (enumerated through antichains; small spaces only)."""
        pts = self.points
        seen = set()
        out = []

        def rec(k, chosen):
            if k == len(pts):
                u = self.upset(chosen)
                if u not in seen:
                    seen.add(u)
                    out.append(u)
                return
            rec(k + 1, chosen)
            p = pts[k]
            if all(not self.leq(c, p) and not self.leq(p, c) for c in chosen):
                rec(k + 1, chosen + [p])

        rec(0, [])
        return sorted(out, key=lambda u: (len(u), sorted(u)))


def chain_poset(n):
    return PosetSpace(range(n), [(k, k + 1) for k in range(n - 1)])


def discrete_space(points):
    return PosetSpace(points)


class ProductPoset:
    """Product of posets with the componentwise order, kept unmaterialised."""

    def __init__(self, factors):
        if not factors:
            raise ValueError("product of an empty list of spaces")
        self.factors = tuple(factors)

    def __contains__(self, p):
        return isinstance(p, tuple) and len(p) == len(self.factors) and \
            all(c in f for c, f in zip(p, self.factors))

    def leq(self, a, b):
        return all(f.leq(x, y) for f, x, y in zip(self.factors, a, b))

    def lt(self, a, b):
        return a != b and self.leq(a, b)

    def down(self, p):
        return frozenset(product(*(f.down(c) for f, c in zip(self.factors, p))))

    def up(self, p):
        return frozenset(product(*(f.up(c) for f, c in zip(self.factors, p))))

    def materialize(self):
        pts = list(product(*(f.points for f in self.factors)))
        rels = []
        for k, f in enumerate(self.factors):
            for x, y in f.covers:
                for p in pts:
                    if p[k] == x:
                        rels.append((p, p[:k] + (y,) + p[k + 1:]))
        return PosetSpace(pts, rels)

    def __eq__(self, other):
        return isinstance(other, ProductPoset) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    def __repr__(self):
        return f"ProductPoset({len(self.factors)} factors)"


def product_space(spaces):
    """Materialised product with its projections."""
    if not spaces:
        raise ValueError("product of an empty list of spaces")
    prod_space = ProductPoset(spaces).materialize()
    projections = [SpaceMap(prod_space, s, {p: p[k] for p in prod_space.points})
                   for k, s in enumerate(spaces)]
    return prod_space, projections


POINT = PosetSpace([0])


class SpaceMap:
    """A monotone map between (possibly unmaterialised) posets.

    mapping may be a dict or a callable on points.
    """

    def __init__(self, source, target, mapping, check=True):
        self.source = source
        self.target = target
        if callable(mapping) and not isinstance(mapping, dict):
            self._fn = mapping
            self._dict = None
        else:
            self._dict = dict(mapping)
            self._fn = self._dict.__getitem__
        if check and isinstance(source, PosetSpace):
            for p in source.points:
                q = self(p)
                if q not in target:
                    raise ValueError(f"image of {p!r} is {q!r}, not a point of the target")
            for x, y in source.covers:
                if not target.leq(self(x), self(y)):
                    raise ValueError(f"map is not monotone: {x!r} <= {y!r} but "
                                     f"{self(x)!r} is not <= {self(y)!r}")

    def __call__(self, p):
        return self._fn(p)

    def as_dict(self):
        return {p: self(p) for p in self.source.points}

    def preimage(self, u):
        u = set(u)
        return frozenset(p for p in self.source.points if self(p) in u)

    def image(self, s=None):
        pts = self.source.points if s is None else s
        return frozenset(self(p) for p in pts)

    def compose_after(self, other):
        """self o other."""
        return SpaceMap(other.source, self.target, lambda p: self(other(p)), check=False)

    def is_identity(self):
        return self.source is self.target and all(self(p) == p for p in self.source.points)

    def is_order_embedding(self, points=None):
        pts = self.source.points if points is None else points
        img = [self(p) for p in pts]
        if len(set(img)) != len(img):
            return False
        return all(self.source.leq(x, y) == self.target.leq(self(x), self(y))
                   for x in pts for y in pts)

    def __eq__(self, other):
        return isinstance(other, SpaceMap) and self.source == other.source and \
            self.target == other.target and self.as_dict() == other.as_dict()

    __hash__ = None

    @classmethod
    def identity(cls, space):
        return cls(space, space, lambda p: p, check=False)

    @classmethod
    def inclusion(cls, sub, space):
        return cls(sub, space, lambda p: p, check=False)

    @classmethod
    def to_point(cls, space):
        return cls(space, POINT, lambda p: 0, check=False)


def inclusion_of_open(space, u):
    u = space.require_open(u)
    return SpaceMap.inclusion(space.subspace(u), space)


# ---------------------------------------------------------------------------
# sheaves

class SheafRep:
    """Stalk dimensions plus restriction matrices on covering relations."""

    def __init__(self, base, dims, restrictions=None, check=True):
        self.base = base
        self._dims = {p: int(dims.get(p, 0)) for p in base.points}
        self._cover_res = {}
        restrictions = restrictions or {}
        for (x, y), m in restrictions.items():
            if (x, y) not in set(base.covers):
                if x in base and y in base and base.lt(x, y):
                    raise ValueError(f"restriction given on ({x!r}, {y!r}), which is not a covering relation")
                raise ValueError(f"restriction given on unknown pair ({x!r}, {y!r})")
        for x, y in base.covers:
            m = restrictions.get((x, y))
            if m is None:
                if self._dims[x] and self._dims[y]:
                    raise ValueError(f"missing restriction matrix for {x!r} -> {y!r}")
                m = M.zeros(self._dims[y], self._dims[x])
            if not isinstance(m, RationalMatrix):
                m = M.from_rows(m, ncols=self._dims[x])
            if m.shape != (self._dims[y], self._dims[x]):
                raise ValueError(f"restriction {x!r} -> {y!r} has shape {m.shape}, expected "
                                 f"{(self._dims[y], self._dims[x])}")
            self._cover_res[x, y] = m
        self._res_cache = {}
        self._sec_cache = {}
        if check:
            validate_sheaf(self)

    def dim(self, x):
        return self._dims[x]

    @property
    def dims(self):
        return dict(self._dims)

    def res(self, x, y):
        """Composite restriction F_x -> F_y for x <= y."""
        if x == y:
            return M.identity(self.dim(x))
        key = (x, y)
        m = self._res_cache.get(key)
        if m is None:
            if not self.base.leq(x, y):
                raise ValueError(f"{x!r} is not <= {y!r}")
            for z in self.base.upper_covers[x]:
                if self.base.leq(z, y):
                    m = self.res(z, y) @ self.cover_res(x, z)
                    break
            self._res_cache[key] = m
        return m

    def cover_res(self, x, y):
        return self._cover_res[x, y]

    def sections(self, u):
        u = frozenset(u)
        s = self._sec_cache.get(u)
        if s is None:
            if not self.base.is_open(u):
                raise ValueError(f"{sorted(u)} is not open")
            s = self._make_sections(u)
            self._sec_cache[u] = s
        return s

    def _make_sections(self, u):
        return SectionSpace(self, u)

    def total_dim(self):
        return sum(self._dims.values())

    def is_zero(self):
        return not any(self._dims.values())

    def data(self):
        """Plain comparable data: stalk dims and cover restrictions."""
        return ({p: self.dim(p) for p in self.base.points},
                {c: self.cover_res(*c) for c in self.base.covers})

    def same_data(self, other):
        return self.base == other.base and self.data() == other.data()

    def __repr__(self):
        return f"{type(self).__name__}(dims={[self.dim(p) for p in self.base.points]})"


def validate_sheaf(f):
    """Check path independence of composed restrictions on the Hasse diagram."""
    base = f.base
    for x in sorted(base.points, key=lambda p: len(base.up(p))):
        for y in sorted(base.up(x)):
            if y == x:
                continue
            routes = [z for z in base.upper_covers[x] if base.leq(z, y)]
            ref = None
            for z in routes:
                m = f.res(z, y) @ f.cover_res(x, z)
                if ref is None:
                    ref, z0 = m, z
                elif m != ref:
                    raise ValueError(f"restrictions do not commute on the diamond "
                                     f"{x!r} < {{{z0!r}, {z!r}}} <= {y!r}")
    return True


def constant_sheaf(base, k=1):
    return SheafRep(base, {p: k for p in base.points},
                    {c: M.identity(k) for c in base.covers}, check=False)


def zero_sheaf(base):
    return SheafRep(base, {}, {}, check=False)


def open_indicator_sheaf(base, u, k=1):
    """Constant Q^k on the open set u, zero elsewhere."""
    u = base.require_open(u)
    dims = {p: (k if p in u else 0) for p in base.points}
    res = {(x, y): (M.identity(k) if x in u else M.zeros(dims[y], 0)) for x, y in base.covers}
    return SheafRep(base, dims, res, check=False)


class SectionSpace:
    """Sections over an open set u.

    coord_points / coord_matrix: the coordinates of a section are
    coord_matrix @ (stacked values at coord_points).
    eval(x): the value at x of the basis sections.
    """

    def __init__(self, sheaf, u):
        self.sheaf = sheaf
        self.open = u
        base = sheaf.base
        mins = base.minimal(u)
        self.coord_points = mins
        offs, tot = {}, 0
        for m in mins:
            offs[m] = tot
            tot += sheaf.dim(m)
        self._offs = offs
        ents = []
        row = 0
        for y in sorted(u):
            below = [m for m in mins if base.leq(m, y)]
            if len(below) < 2 or not sheaf.dim(y):
                continue
            m0 = below[0]
            r0 = sheaf.res(m0, y)
            for m1 in below[1:]:
                r1 = sheaf.res(m1, y)
                for i in range(sheaf.dim(y)):
                    for j, v in r0.row(i).items():
                        ents.append((row + i, offs[m0] + j, v))
                    for j, v in r1.row(i).items():
                        ents.append((row + i, offs[m1] + j, -v))
                row += sheaf.dim(y)
        cons = M.from_entries(row, tot, ents)
        self.basis = cons.kernel()
        rref, pivots = cons.rref() if row else (cons, [])
        piv = set(pivots)
        self._free = [c for c in range(tot) if c not in piv]
        self.dim = self.basis.ncols
        self.coord_matrix = M.selection(self._free, tot)
        self._eval = {}

    def at_point(self, m):
        """Block of the basis at a coordinate point."""
        o = self._offs[m]
        return self.basis.submatrix(range(o, o + self.sheaf.dim(m)), range(self.dim))

    def eval(self, x):
        e = self._eval.get(x)
        if e is None:
            base = self.sheaf.base
            m = next(m for m in self.coord_points if base.leq(m, x))
            e = self.sheaf.res(m, x) @ self.at_point(m)
            self._eval[x] = e
        return e

    def coords(self, values):
        """values: {coord point: matrix with dim(point) rows} -> coordinate matrix."""
        stacked = M.vstack([values[p] for p in self.coord_points],
                           ncols=_ncols(values))
        return self.coord_matrix @ stacked


def _ncols(values):
    for v in values.values():
        return v.ncols
    return 0


def restriction_of_sections(sheaf, u, v):
    """Matrix Gamma(u) -> Gamma(v) for open v contained in u."""
    su, sv = sheaf.sections(u), sheaf.sections(v)
    if not set(v) <= set(u):
        raise ValueError("restriction target is not contained in the source open")
    return sv.coords({p: su.eval(p) for p in sv.coord_points}) if sv.coord_points \
        else M.zeros(sv.dim, su.dim)


def sections(f, u):
    """(dimension, basis) of Gamma(u, f)."""
    s = f.sections(f.base.require_open(u))
    return s.dim, s


# ---------------------------------------------------------------------------
# block sheaves: finite sums of skyscrapers S_a(W), stalk W at x <= a

class BlockSheaf(SheafRep):
    """Sum of skyscrapers; blocks are (key, anchor, dim) in a fixed order."""

    def __init__(self, base, blocks):
        self.base = base
        self.blocks = [(k, a, int(d)) for k, a, d in blocks if d]
        for k, a, d in self.blocks:
            if a not in base:
                raise ValueError(f"block {k!r} anchored outside the base at {a!r}")
        self.block_index = {k: n for n, (k, a, d) in enumerate(self.blocks)}
        if len(self.block_index) != len(self.blocks):
            raise ValueError("duplicate block keys")
        offs, tot = [], 0
        for _, _, d in self.blocks:
            offs.append(tot)
            tot += d
        self.block_offsets = offs
        self.global_dim = tot
        self._stalk_blocks = {}
        self._res_cache = {}
        self._sec_cache = {}
        self._dims = None

    def stalk_blocks(self, x):
        s = self._stalk_blocks.get(x)
        if s is None:
            up = self.base.up(x)
            s = [n for n, (_, a, _) in enumerate(self.blocks) if a in up]
            self._stalk_blocks[x] = s
        return s

    def coords_of_blocks(self, block_ids):
        out = []
        for n in block_ids:
            o = self.block_offsets[n]
            out.extend(range(o, o + self.blocks[n][2]))
        return out

    def stalk_coords(self, x):
        """Positions in the global coordinate vector making up the stalk at x."""
        return self.coords_of_blocks(self.stalk_blocks(x))

    def dim(self, x):
        return sum(self.blocks[n][2] for n in self.stalk_blocks(x))

    @property
    def dims(self):
        return {p: self.dim(p) for p in self.base.points}

    def res(self, x, y):
        if x == y:
            return M.identity(self.dim(x))
        m = self._res_cache.get((x, y))
        if m is None:
            if not self.base.leq(x, y):
                raise ValueError(f"{x!r} is not <= {y!r}")
            src = {c: k for k, c in enumerate(self.stalk_coords(x))}
            m = M.selection([src[c] for c in self.stalk_coords(y)], len(src))
            self._res_cache[x, y] = m
        return m

    def cover_res(self, x, y):
        return self.res(x, y)

    def _make_sections(self, u):
        return BlockSections(self, u)

    def total_dim(self):
        return sum(self.dim(p) for p in self.base.points)

    def is_zero(self):
        return not self.blocks

    def keys(self):
        return [k for k, _, _ in self.blocks]

    @cached_property
    def coord_block(self):
        out = []
        for n, (_, _, d) in enumerate(self.blocks):
            out.extend([n] * d)
        return out

    def __repr__(self):
        return f"BlockSheaf({len(self.blocks)} blocks, global dim {self.global_dim})"


class BlockSections:
    """Sections of a block sheaf over u: exactly the blocks anchored in u."""

    def __init__(self, sheaf, u):
        self.sheaf = sheaf
        self.open = u
        self.block_ids = [n for n, (_, a, _) in enumerate(sheaf.blocks) if a in u]
        self.global_coords = sheaf.coords_of_blocks(self.block_ids)
        self.dim = len(self.global_coords)
        anchors = sorted({sheaf.blocks[n][1] for n in self.block_ids})
        self.coord_points = anchors
        base_off, tot = {}, 0
        stalk_pos = {}
        for a in anchors:
            base_off[a] = tot
            sb = sheaf.stalk_blocks(a)
            o = 0
            for n in sb:
                stalk_pos[a, n] = o
                o += sheaf.blocks[n][2]
            tot += o
        picks = []
        for n in self.block_ids:
            a = sheaf.blocks[n][1]
            start = base_off[a] + stalk_pos[a, n]
            picks.extend(range(start, start + sheaf.blocks[n][2]))
        self.coord_matrix = M.selection(picks, tot)
        self._eval = {}

    def eval(self, x):
        e = self._eval.get(x)
        if e is None:
            pos = {c: k for k, c in enumerate(self.global_coords)}
            e = M.from_entries(self.sheaf.dim(x), self.dim,
                               [(i, pos[c], 1) for i, c in enumerate(self.sheaf.stalk_coords(x))])
            self._eval[x] = e
        return e

    def coords(self, values):
        stacked = M.vstack([values[p] for p in self.coord_points], ncols=_ncols(values))
        return self.coord_matrix @ stacked


def skyscraper(base, anchor, k=1, key=None):
    return BlockSheaf(base, [(key if key is not None else (anchor,), anchor, k)])


def materialize(f):
    """Plain SheafRep with the same stalks and restrictions."""
    base = f.base
    return SheafRep(base, {p: f.dim(p) for p in base.points},
                    {c: f.cover_res(*c) for c in base.covers}, check=False)


def direct_sum(sheaves):
    sheaves = list(sheaves)
    base = sheaves[0].base
    dims = {p: sum(s.dim(p) for s in sheaves) for p in base.points}
    res = {c: M.block_diag([s.cover_res(*c) for s in sheaves]) for c in base.covers}
    return SheafRep(base, dims, res, check=False)


def tensor_sheaf(f, g):
    base = f.base
    if g.base != base:
        raise ValueError("tensor product of sheaves on different spaces")
    dims = {p: f.dim(p) * g.dim(p) for p in base.points}
    res = {c: f.cover_res(*c).kron(g.cover_res(*c)) for c in base.covers}
    return SheafRep(base, dims, res, check=False)


# ---------------------------------------------------------------------------
# morphisms over a space map

class SheafHom:
    """Stalk maps source_{f(x)} -> target_x, natural in x.

    source lives on Y, target on X, and over: X -> Y (None means identity).
    With over = identity this is an ordinary sheaf morphism; otherwise it is
    the adjoint form of a morphism source -> f_* target.
    """

    def __init__(self, source, target, over=None):
        self.source = source
        self.target = target
        self.over = over

    def f(self, x):
        return x if self.over is None else self.over(x)

    def stalk(self, x):
        raise NotImplementedError

    def validate(self):
        tb = self.target.base
        for x in tb.points:
            m = self.stalk(x)
            if m.shape != (self.target.dim(x), self.source.dim(self.f(x))):
                raise ValueError(f"stalk map at {x!r} has shape {m.shape}")
        for x, y in tb.covers:
            lhs = self.target.res(x, y) @ self.stalk(x)
            rhs = self.stalk(y) @ self.source.res(self.f(x), self.f(y))
            if lhs != rhs:
                raise ValueError(f"not natural along {x!r} -> {y!r}")
        return True

    def on_sections(self, u=None, w=None):
        """Gamma(w, source) -> Gamma(u, target); defaults to global sections."""
        tb = self.target.base
        u = frozenset(tb.points) if u is None else frozenset(u)
        if w is None:
            w = self.source.base.upset(self.f(x) for x in u)
        su, sw = self.target.sections(u), self.source.sections(frozenset(w))
        if not su.coord_points:
            return M.zeros(su.dim, sw.dim)
        return su.coords({p: self.stalk(p) @ sw.eval(self.f(p)) for p in su.coord_points})

    def same_stalks(self, other):
        pts = self.target.base.points
        return all(self.stalk(x) == other.stalk(x) for x in pts)

    def compose_after(self, other):
        """self o other  (other: A ~> B over g, self: B ~> C over h)."""
        return ComposedHom(self, other)

    def __add__(self, other):
        return SumHom([(1, self), (1, other)])

    def __neg__(self):
        return SumHom([(-1, self)])

    def scaled(self, c):
        return SumHom([(c, self)])


class StalkHom(SheafHom):
    def __init__(self, source, target, stalks, over=None, check=True):
        super().__init__(source, target, over)
        self._stalks = {}
        for x in target.base.points:
            m = stalks.get(x)
            if m is None:
                m = M.zeros(target.dim(x), source.dim(self.f(x)))
            elif not isinstance(m, RationalMatrix):
                m = M.from_rows(m, ncols=source.dim(self.f(x)))
            self._stalks[x] = m
        if check:
            self.validate()

    def stalk(self, x):
        return self._stalks[x]


class LazyHom(SheafHom):
    def __init__(self, source, target, fn, over=None):
        super().__init__(source, target, over)
        self._fn = fn
        self._cache = {}

    def stalk(self, x):
        m = self._cache.get(x)
        if m is None:
            m = self._fn(x)
            self._cache[x] = m
        return m


class ComposedHom(LazyHom):
    def __init__(self, outer, inner):
        if outer.over is None and inner.over is None:
            over = None
        elif outer.over is None:
            over = inner.over
        elif inner.over is None:
            over = outer.over
        else:
            over = inner.over.compose_after(outer.over)
        super().__init__(inner.source, outer.target,
                         lambda x: outer.stalk(x) @ inner.stalk(outer.f(x)), over)
        self.outer, self.inner = outer, inner

    def on_sections(self, u=None, w=None):
        if isinstance(self.outer, BlockHom) and isinstance(self.inner, BlockHom) \
                and u is None and w is None:
            return self.outer.matrix @ self.inner.matrix
        return super().on_sections(u, w)


class SumHom(LazyHom):
    def __init__(self, terms):
        c0, h0 = terms[0]
        self.terms = [(to_q(c), h) for c, h in terms]

        def fn(x):
            acc = None
            for c, h in self.terms:
                m = h.stalk(x).scale(c)
                acc = m if acc is None else acc + m
            return acc
        super().__init__(h0.source, h0.target, fn, h0.over)


def identity_hom(f):
    if isinstance(f, BlockSheaf):
        return BlockHom(f, f, M.identity(f.global_dim), check=False)
    return LazyHom(f, f, lambda x: M.identity(f.dim(x)))


def zero_hom(source, target, over=None):
    if isinstance(source, BlockSheaf) and isinstance(target, BlockSheaf):
        return BlockHom(source, target, M.zeros(target.global_dim, source.global_dim),
                        over=over, check=False)
    fx = (lambda x: x) if over is None else over
    return LazyHom(source, target, lambda x: M.zeros(target.dim(x), source.dim(fx(x))), over)


class BlockHom(SheafHom):
    """Hom between block sheaves given by its matrix on global sections.

    An entry from source block a to target block b may be nonzero only when
    f(anchor b) <= anchor a; the stalk map at x is then the sub-matrix on the
    blocks living at x.
    """

    def __init__(self, source, target, matrix, over=None, check=True):
        super().__init__(source, target, over)
        if matrix.shape != (target.global_dim, source.global_dim):
            raise ValueError(f"global matrix has shape {matrix.shape}, expected "
                             f"{(target.global_dim, source.global_dim)}")
        self.matrix = matrix
        self._cache = {}
        if check:
            self.check_support()

    def check_support(self):
        tb, sb = self.target, self.source
        ta = _coord_anchors(tb)
        sa = _coord_anchors(sb)
        for i, j, v in self.matrix.entries():
            if not sb.base.leq(self.f(ta[i]), sa[j]):
                raise ValueError(f"entry from block {sb.blocks[_coord_block(sb, j)][0]!r} to "
                                 f"{tb.blocks[_coord_block(tb, i)][0]!r} violates the anchor order")
        return True

    def stalk(self, x):
        m = self._cache.get(x)
        if m is None:
            m = self.matrix.submatrix(self.target.stalk_coords(x),
                                      self.source.stalk_coords(self.f(x)))
            self._cache[x] = m
        return m

    def on_sections(self, u=None, w=None):
        if u is None and w is None:
            return self.matrix
        tb = self.target.base
        u = frozenset(tb.points) if u is None else frozenset(u)
        if w is None:
            w = self.source.base.upset(self.f(x) for x in u)
        rows = self.target.sections(u).global_coords
        cols = self.source.sections(frozenset(w)).global_coords
        return self.matrix.submatrix(rows, cols)

    def compose_after(self, other):
        if isinstance(other, BlockHom):
            over = ComposedHom(self, other).over
            return BlockHom(other.source, self.target, self.matrix @ other.matrix,
                            over=over, check=False)
        return ComposedHom(self, other)

    def __add__(self, other):
        if isinstance(other, BlockHom):
            return BlockHom(self.source, self.target, self.matrix + other.matrix,
                            self.over, check=False)
        return super().__add__(other)

    def __neg__(self):
        return BlockHom(self.source, self.target, -self.matrix, self.over, check=False)

    def scaled(self, c):
        return BlockHom(self.source, self.target, self.matrix.scale(c), self.over, check=False)


def _coord_anchors(sheaf):
    return [sheaf.blocks[n][1] for n in sheaf.coord_block]


def _coord_block(sheaf, c):
    return sheaf.coord_block[c]


class IntoBlockHom(SheafHom):
    """Hom from any sheaf into a block sheaf, one matrix per target block.

    per_block[n] maps source_{f(anchor_n)} to the n-th block; the stalk map
    at x stacks per_block[n] @ res(f(x), f(anchor_n)) over the blocks at x.
    """

    def __init__(self, source, target, per_block, over=None):
        super().__init__(source, target, over)
        self.per_block = {}
        for n, (k, a, d) in enumerate(target.blocks):
            m = per_block.get(n)
            sd = source.dim(self.f(a))
            if m is None:
                m = M.zeros(d, sd)
            if m.shape != (d, sd):
                raise ValueError(f"block {k!r}: map has shape {m.shape}, expected {(d, sd)}")
            self.per_block[n] = m
        self._cache = {}

    def stalk(self, x):
        m = self._cache.get(x)
        if m is None:
            fx = self.f(x)
            parts = [self.per_block[n] @ self.source.res(fx, self.f(self.target.blocks[n][1]))
                     for n in self.target.stalk_blocks(x)]
            m = M.vstack(parts, ncols=self.source.dim(fx))
            self._cache[x] = m
        return m

    def on_sections(self, u=None, w=None):
        tb = self.target.base
        u = frozenset(tb.points) if u is None else frozenset(u)
        if w is None:
            w = self.source.base.upset(self.f(x) for x in u)
        sw = self.source.sections(frozenset(w))
        ids = self.target.sections(u).block_ids
        parts = [self.per_block[n] @ sw.eval(self.f(self.target.blocks[n][1])) for n in ids]
        return M.vstack(parts, ncols=sw.dim)


# ---------------------------------------------------------------------------
# pushforward and inverse image

class Pushforward(SheafRep):
    """(f_* F)_q = Gamma(f^{-1}(U_q), F) in the canonical section basis."""

    def __init__(self, f, inner):
        if inner.base != f.source:
            raise ValueError("pushforward: sheaf does not live on the source of the map")
        self.map = f
        self.inner = inner
        self.base = f.target
        self._pre = {}
        self._res_cache = {}
        self._sec_cache = {}
        self._dims = {q: self.stalk_sections(q).dim for q in self.base.points}
        self._cover_res = {}
        for x, y in self.base.covers:
            self._cover_res[x, y] = restriction_of_sections(inner, self.preimage(x),
                                                            self.preimage(y))

    def preimage(self, q):
        p = self._pre.get(q)
        if p is None:
            p = self.map.preimage(self.base.up(q))
            self._pre[q] = p
        return p

    def stalk_sections(self, q):
        return self.inner.sections(self.preimage(q))


def pushforward(f, sheaf):
    if sheaf.base != f.source:
        raise ValueError("pushforward: sheaf does not live on the source of the map")
    if isinstance(sheaf, BlockSheaf):
        return BlockSheaf(f.target, [(k, f(a), d) for k, a, d in sheaf.blocks])
    # section bases are expensive; share one pushforward per (map, sheaf)
    key = (id(f), id(sheaf))
    hit = _PUSH_CACHE.get(key)
    if hit is None or hit[0] is not f or hit[1] is not sheaf:
        hit = (f, sheaf, Pushforward(f, sheaf))
        _PUSH_CACHE[key] = hit
    return hit[2]


_PUSH_CACHE = {}


class InverseImage(SheafRep):
    def __init__(self, f, inner):
        if inner.base != f.target:
            raise ValueError("inverse image: sheaf does not live on the target of the map")
        self.map = f
        self.inner = inner
        self.base = f.source
        self._dims = {p: inner.dim(f(p)) for p in self.base.points}
        self._cover_res = {(x, y): inner.res(f(x), f(y)) for x, y in self.base.covers}
        self._res_cache = {}
        self._sec_cache = {}


def inverse_image(f, sheaf):
    if sheaf.base != f.target:
        raise ValueError("inverse image: sheaf does not live on the target of the map")
    if isinstance(sheaf, BlockSheaf):
        blocks = _pull_blocks(f, sheaf)
        if blocks is not None:
            return BlockSheaf(f.source, blocks)
    return InverseImage(f, sheaf)


def _pull_blocks(f, sheaf):
    """Blocks of f^{-1} of a block sheaf when f is an order embedding that
    sees every relevant anchor; None otherwise."""
    pts = f.source.points
    img = {}
    for p in pts:
        q = f(p)
        if q in img:
            return None
        img[q] = p
    for x in pts:
        for y in pts:
            if f.source.leq(x, y) != f.target.leq(f(x), f(y)):
                return None
    out = []
    for k, a, d in sheaf.blocks:
        if a in img:
            out.append((k, img[a], d))
        elif any(f.target.leq(q, a) for q in img):
            return None
    return out


def restrict_open(sheaf, u):
    u = sheaf.base.require_open(u)
    return inverse_image(SpaceMap.inclusion(sheaf.base.subspace(u), sheaf.base), sheaf)


def push_hom(c, fa, fb, rho_prime=None):
    """Push a hom c: A ~> B over rho (A on X_a, B on X_b) forward.

    fa: X_a -> Y_a, fb: X_b -> Y_b and rho_prime: Y_b -> Y_a with
    fa o rho = rho_prime o fb.  Result: fa_* A ~> fb_* B over rho_prime.
    """
    pa = pushforward(fa, c.source)
    pb = pushforward(fb, c.target)
    if isinstance(c, BlockHom):
        return BlockHom(pa, pb, c.matrix, over=rho_prime, check=False)
    over = rho_prime

    def fn(y):
        ry = y if over is None else over(y)
        sa = c.source.sections(fa.preimage(pa.base.up(ry)))
        sb = c.target.sections(fb.preimage(pb.base.up(y)))
        if not sb.coord_points:
            return M.zeros(sb.dim, sa.dim)
        return sb.coords({p: c.stalk(p) @ sa.eval(c.f(p)) for p in sb.coord_points})
    return LazyHom(pa, pb, fn, over)


def pull_hom(c, fa, fb, rho=None):
    """Inverse image of a hom c: A ~> B over rho' (A on Y_a, B on Y_b).

    fa: X_a -> Y_a, fb: X_b -> Y_b, rho: X_b -> X_a with fa o rho = rho' o fb.
    Result: fa^{-1} A ~> fb^{-1} B over rho, with stalk c_{fb(p)} at p.
    """
    ia = inverse_image(fa, c.source)
    ib = inverse_image(fb, c.target)
    if isinstance(c, BlockHom) and isinstance(ia, BlockSheaf) and isinstance(ib, BlockSheaf):
        # pulled block sheaves keep a subset of the blocks; cut the matrix by key
        rows = _coords_by_key(c.target, ib)
        cols = _coords_by_key(c.source, ia)
        return BlockHom(ia, ib, c.matrix.submatrix(rows, cols), over=rho, check=False)
    return LazyHom(ia, ib, lambda p: c.stalk(fb(p)), rho)


def _coords_by_key(orig, sub):
    """Global coordinates of orig matching the blocks of sub (same keys)."""
    out = []
    for k, _, d in sub.blocks:
        n = orig.block_index[k]
        o = orig.block_offsets[n]
        out.extend(range(o, o + d))
    return out


def adjoint_to_pushforward(c):
    """A hom c: G ~> F over f becomes a morphism G -> f_* F over the identity."""
    f = c.over if c.over is not None else SpaceMap.identity(c.target.base)
    fs = pushforward(f, c.target)
    g = c.source

    def fn(q):
        s = c.target.sections(f.preimage(g.base.up(q)))
        if not s.coord_points:
            return M.zeros(s.dim, g.dim(q))
        return s.coords({p: c.stalk(p) @ g.res(q, f(p)) for p in s.coord_points})
    return LazyHom(g, fs, fn)


def adjoint_from_pushforward(m, f, target):
    """A morphism m: G -> f_* F (over the identity) becomes G ~> F over f."""

    def fn(x):
        s = target.sections(f.preimage(f.target.up(f(x))))
        return s.eval(x) @ m.stalk(f(x))
    return LazyHom(m.source, target, fn, over=f)


def unit(f, g):
    """G -> f_* f^{-1} G."""
    pulled = inverse_image(f, g)
    return adjoint_to_pushforward(LazyHom(g, pulled, lambda p: M.identity(pulled.dim(p)), over=f))


def counit(f, sheaf):
    """f^{-1} f_* F -> F."""
    pushed = pushforward(f, sheaf)
    pulled = inverse_image(f, pushed)

    def fn(x):
        return sheaf.sections(f.preimage(f.target.up(f(x)))).eval(x)
    return LazyHom(pulled, sheaf, fn)


def hom_basis(source, target, over=None):
    """Basis of the natural maps source ~> target over a space map.

    Unknowns are the stalk matrices u_x: source_{f(x)} -> target_x; each
    covering relation x < y contributes res(x, y) u_x = u_y res(f x, f y).
    """
    base = target.base
    fx = (lambda x: x) if over is None else over
    offs, tot = {}, 0
    for x in base.points:
        offs[x] = tot
        tot += target.dim(x) * source.dim(fx(x))
    rows, r = [], 0
    for x, y in base.covers:
        tr = target.cover_res(x, y)
        sr = source.res(fx(x), fx(y))
        a, b = source.dim(fx(x)), source.dim(fx(y))
        # entry (i, k) of tr u_x - u_y sr, with u_x[p, q] at offs[x] + p * a + q
        for i in range(target.dim(y)):
            for k in range(a):
                ents = {}
                for i2, p, v in tr.entries():
                    if i2 == i:
                        c = offs[x] + p * a + k
                        ents[c] = ents.get(c, 0) + v
                for q, k2, v in sr.entries():
                    if k2 == k:
                        c = offs[y] + i * b + q
                        ents[c] = ents.get(c, 0) - v
                rows.extend((r, c, v) for c, v in ents.items() if v)
                r += 1
    ker = M.from_entries(r, tot, rows).kernel()
    out = []
    for col in range(ker.ncols):
        vec = ker.submatrix(range(tot), [col])
        stalks = {}
        for x in base.points:
            a = source.dim(fx(x))
            if not a:
                continue
            stalks[x] = M.from_entries(target.dim(x), a, [
                ((c - offs[x]) // a, (c - offs[x]) % a, v) for c, _, v in vec.entries()
                if offs[x] <= c < offs[x] + target.dim(x) * a])
        out.append(StalkHom(source, target, stalks, over=over, check=False))
    return out


def check_triangle_identities(f, sheaf, g):
    """Both triangle identities of the f^{-1} -| f_* adjunction, stalkwise."""
    # f^{-1} G -> f^{-1} f_* f^{-1} G -> f^{-1} G
    eta = unit(f, g)
    fp = inverse_image(f, g)
    pulled_eta = pull_hom(eta, f, f, None)
    eps = counit(f, fp)
    for x in f.source.points:
        if eps.stalk(x) @ pulled_eta.stalk(x) != M.identity(fp.dim(x)):
            return False
    # f_* F -> f_* f^{-1} f_* F -> f_* F
    fs = pushforward(f, sheaf)
    eta2 = unit(f, fs)
    eps2 = counit(f, sheaf)
    pushed_eps = push_hom(eps2, f, f, None)
    for q in f.target.points:
        if pushed_eps.stalk(q) @ eta2.stalk(q) != M.identity(fs.dim(q)):
            return False
    return True


# ---------------------------------------------------------------------------
# complexes of sheaves

class SheafComplex:
    """Terms C^start, ..., with differentials (homs over the identity)."""

    def __init__(self, terms, diffs, start=0, check=True):
        self.terms = list(terms)
        self.diffs = list(diffs)
        self.start = start
        if len(self.diffs) != max(len(self.terms) - 1, 0):
            raise ValueError("need one differential between consecutive terms")
        self.base = self.terms[0].base if self.terms else None
        if check:
            self.check_d_squared()

    @property
    def stop(self):
        return self.start + len(self.terms)

    def degrees(self):
        return range(self.start, self.stop)

    def term(self, n):
        return self.terms[n - self.start]

    def d(self, n):
        return self.diffs[n - self.start]

    def check_d_squared(self):
        for k in range(len(self.diffs) - 1):
            a, b = self.diffs[k], self.diffs[k + 1]
            if isinstance(a, BlockHom) and isinstance(b, BlockHom):
                if not (b.matrix @ a.matrix).is_zero():
                    raise ValueError(f"d o d != 0 in degree {self.start + k}")
                continue
            for x in self.base.points:
                if not (b.stalk(x) @ a.stalk(x)).is_zero():
                    raise ValueError(f"d o d != 0 in degree {self.start + k} at {x!r}")
        return True

    def sections_complex(self, u=None):
        """Gamma(u, -) applied termwise (global sections by default)."""
        pts = frozenset(self.base.points) if u is None else frozenset(u)
        dims = [t.sections(pts).dim for t in self.terms]
        diffs = [d.on_sections(None if u is None else pts, None if u is None else pts)
                 for d in self.diffs]
        return CochainComplex(dims, diffs, self.start, check=False)

    def stalk_complex(self, x):
        return CochainComplex([t.dim(x) for t in self.terms],
                              [d.stalk(x) for d in self.diffs], self.start, check=False)

    def is_flasque(self, opens=None):
        return all(is_flasque(t, opens) for t in self.terms)

    def __repr__(self):
        return f"SheafComplex(start={self.start}, terms={self.terms})"


def is_flasque(sheaf, opens=None):
    if isinstance(sheaf, BlockSheaf):
        return True
    opens = sheaf.base.open_sets() if opens is None else opens
    for u in opens:
        su = sheaf.sections(u)
        for v in opens:
            if v < u:
                r = restriction_of_sections(sheaf, u, v)
                if r.rank() != sheaf.sections(v).dim:
                    return False
    return True


def block_sheaf_is_flasque(sheaf, opens=None):
    """Rank check of section restrictions (used to audit block sheaves too)."""
    opens = sheaf.base.open_sets() if opens is None else opens
    for u in opens:
        for v in opens:
            if v < u:
                r = restriction_of_sections(sheaf, u, v)
                if r.rank() != sheaf.sections(v).dim:
                    return False
    return True


class Resolution:
    """An augmented complex F -> C^0 -> C^1 -> ..."""

    def __init__(self, sheaf, complex_, augmentation):
        self.sheaf = sheaf
        self.complex = complex_
        self.augmentation = augmentation

    def augmented_stalk_complex(self, x):
        c = self.complex
        dims = [self.sheaf.dim(x)] + [t.dim(x) for t in c.terms]
        diffs = [self.augmentation.stalk(x)] + [d.stalk(x) for d in c.diffs]
        return CochainComplex(dims, diffs, c.start - 1, check=False)

    def is_stalkwise_exact(self):
        return all(self.augmented_stalk_complex(x).is_acyclic() for x in self.sheaf.base.points)

    def augmentation_on_sections(self, u=None):
        from .linalg import ChainMap
        pts = frozenset(self.sheaf.base.points) if u is None else frozenset(u)
        src = CochainComplex([self.sheaf.sections(pts).dim], [], self.complex.start, check=False)
        tgt = self.complex.sections_complex(u)
        m = self.augmentation.on_sections(None if u is None else pts, None if u is None else pts)
        return ChainMap(src, tgt, {self.complex.start: m})


# ---------------------------------------------------------------------------
# bar complex (independent oracle) and flasque bar resolution

def bar_complex(space, sheaf):
    """C^n = prod over chains x0 < ... < xn of F_{xn}, alternating face maps."""
    h = space.height
    chains = [space.chains(n) for n in range(h + 1)]
    offs = []
    for n in range(h + 1):
        o, tot = {}, 0
        for c in chains[n]:
            o[c] = tot
            tot += sheaf.dim(c[-1])
        offs.append((o, tot))
    diffs = []
    for n in range(h):
        src_off, src_dim = offs[n]
        tgt_off, tgt_dim = offs[n + 1]
        ents = []
        for c in chains[n + 1]:
            r0 = tgt_off[c]
            for j in range(n + 2):
                face_ = c[:j] + c[j + 1:]
                sgn = -1 if j % 2 else 1
                c0 = src_off[face_]
                if j < n + 1:
                    for i in range(sheaf.dim(c[-1])):
                        ents.append((r0 + i, c0 + i, sgn))
                else:
                    r = sheaf.res(face_[-1], c[-1])
                    ents.extend((r0 + i, c0 + k, sgn * v) for i, k, v in r.entries())
        diffs.append(RationalMatrix.from_entries(tgt_dim, src_dim, ents))
    return CochainComplex([offs[n][1] for n in range(h + 1)], diffs, 0)


def bar_cohomology(space, sheaf):
    return bar_complex(space, sheaf).betti()


def chain_resolution_terms(space, sheaf, label=lambda c: c, top=None, within=None):
    """Block sheaves C^n(F) with blocks (label(chain), first point, dim F_last).

    Each term remembers the chain behind every key in .chain_of.
    """
    h = space.height if top is None else top
    terms = []
    for n in range(h + 1):
        chains = space.chains(n, within=within)
        t = BlockSheaf(space, [(label(c), c[0], sheaf.dim(c[-1])) for c in chains])
        t.chain_of = {label(c): c for c in chains}
        terms.append(t)
    return terms


def chain_differential(src, tgt, n, sheaf, label=lambda c: c):
    """Global matrix of the bar differential C^n -> C^(n+1)."""
    ents = []
    for bi, (key, anchor, dim) in enumerate(tgt.blocks):
        c = tgt.chain_of[key]
        r0 = tgt.block_offsets[bi]
        for j in range(n + 2):
            face_ = c[:j] + c[j + 1:]
            si = src.block_index.get(label(face_))
            if si is None:
                continue
            c0 = src.block_offsets[si]
            sgn = -1 if j % 2 else 1
            if j < n + 1:
                ents.extend((r0 + i, c0 + i, sgn) for i in range(dim))
            else:
                r = sheaf.res(face_[-1], c[-1])
                ents.extend((r0 + i, c0 + k, sgn * v) for i, k, v in r.entries())
    return M.from_entries(tgt.global_dim, src.global_dim, ents)


def flasque_bar_resolution(space, sheaf):
    """0 -> F -> C^0(F) -> ... -> C^h(F) -> 0 with C^n(F)_x = prod_{x<=x0<...<xn} F_{xn}."""
    if sheaf.base != space:
        raise ValueError("sheaf does not live on the given space")
    terms = chain_resolution_terms(space, sheaf)
    diffs = [BlockHom(terms[n], terms[n + 1], chain_differential(terms[n], terms[n + 1], n, sheaf),
                      check=False)
             for n in range(len(terms) - 1)]
    cx = SheafComplex(terms, diffs, 0)
    c0 = terms[0]
    aug = IntoBlockHom(sheaf, c0, {n: M.identity(d) for n, (_, _, d) in enumerate(c0.blocks)})
    return Resolution(sheaf, cx, aug)


# ---------------------------------------------------------------------------
# direct sums and matrices of homs

class DirectSumSheaf(SheafRep):
    """Ordered direct sum; sections are the direct sum of summand sections."""

    def __init__(self, base, summands):
        self.base = base
        self.summands = [(k, s) for k, s in summands]
        for k, s in self.summands:
            if s.base != base:
                raise ValueError(f"summand {k!r} lives on a different space")
        self._dims = {p: sum(s.dim(p) for _, s in self.summands) for p in base.points}
        self._cover_res = {c: M.block_diag([s.cover_res(*c) for _, s in self.summands])
                           for c in base.covers}
        self._res_cache = {}
        self._sec_cache = {}

    def res(self, x, y):
        if x == y:
            return M.identity(self.dim(x))
        m = self._res_cache.get((x, y))
        if m is None:
            m = M.block_diag([s.res(x, y) for _, s in self.summands])
            self._res_cache[x, y] = m
        return m

    def _make_sections(self, u):
        return SumSections(self, u)

    def summand_keys(self):
        return [k for k, _ in self.summands]


class SumSections:
    def __init__(self, sheaf, u):
        self.sheaf = sheaf
        self.open = u
        self.parts = [s.sections(u) for _, s in sheaf.summands]
        self.dim = sum(p.dim for p in self.parts)
        self.coord_points = sorted({q for p in self.parts for q in p.coord_points})
        # column offsets of summand k inside the stacked stalk at each point
        col_sizes = [sheaf.dim(q) for q in self.coord_points]
        grid = {}
        for k, (part, (_, s)) in enumerate(zip(self.parts, sheaf.summands)):
            inner_off = {}
            o = 0
            for q in part.coord_points:
                inner_off[q] = o
                o += s.dim(q)
            for qi, q in enumerate(self.coord_points):
                if q not in inner_off:
                    continue
                before = sum(t.dim(q) for _, t in sheaf.summands[:k])
                sel = M.from_entries(s.dim(q), sheaf.dim(q),
                                     [(i, before + i, 1) for i in range(s.dim(q))])
                sub = part.coord_matrix.submatrix(range(part.dim),
                                                  range(inner_off[q], inner_off[q] + s.dim(q)))
                grid[k, qi] = sub @ sel
        self.coord_matrix = M.block(grid, [p.dim for p in self.parts], col_sizes)
        self._eval = {}

    def eval(self, x):
        e = self._eval.get(x)
        if e is None:
            e = M.block_diag([p.eval(x) for p in self.parts])
            self._eval[x] = e
        return e

    def coords(self, values):
        stacked = M.vstack([values[p] for p in self.coord_points], ncols=_ncols(values))
        return self.coord_matrix @ stacked


def direct_sum_sheaf(base, summands):
    """Direct sum keyed by summand labels.

    When every summand is a block sheaf the result is again a block sheaf
    with keys (summand key, block key), so homs stay global matrices.
    """
    summands = [(k, s) for k, s in summands]
    if all(isinstance(s, BlockSheaf) for _, s in summands):
        blocks, spans = [], []
        for k, s in summands:
            spans.append((k, s, len(blocks)))
            blocks.extend(((k, bk), a, d) for bk, a, d in s.blocks)
        out = BlockSheaf(base, blocks)
        out.summands = [(k, s) for k, s, _ in spans]
        out.summand_offsets = _summand_offsets(out.summands)
        return out
    return DirectSumSheaf(base, summands)


def _summand_offsets(summands):
    offs, o = {}, 0
    for k, s in summands:
        offs[k] = o
        o += s.global_dim
    return offs


def summands_of(sheaf):
    s = getattr(sheaf, "summands", None)
    if s is None:
        return [(None, sheaf)]
    return s


class MatrixHom(LazyHom):
    """Hom between direct sums given by components comps[(target key, source key)]."""

    def __init__(self, source, target, comps, over=None):
        self.comps = dict(comps)
        self.src_parts = summands_of(source)
        self.tgt_parts = summands_of(target)
        fx = (lambda x: x) if over is None else over

        def fn(x):
            grid = {}
            for ti, (tk, _) in enumerate(self.tgt_parts):
                for si, (sk, _) in enumerate(self.src_parts):
                    h = self.comps.get((tk, sk))
                    if h is not None:
                        grid[ti, si] = h.stalk(x)
            return M.block(grid, [t.dim(x) for _, t in self.tgt_parts],
                           [s.dim(fx(x)) for _, s in self.src_parts])
        super().__init__(source, target, fn, over)


def assemble_hom(source, target, comps, over=None):
    """Hom between (possibly flattened) direct sums from component homs."""
    comps = {k: h for k, h in comps.items() if h is not None}
    if isinstance(source, BlockSheaf) and isinstance(target, BlockSheaf) and \
            all(isinstance(h, BlockHom) for h in comps.values()):
        so = getattr(source, "summand_offsets", None) or {None: 0}
        to = getattr(target, "summand_offsets", None) or {None: 0}
        ents = []
        for (tk, sk), h in comps.items():
            r0, c0 = to[tk], so[sk]
            ents.extend((r0 + i, c0 + j, v) for i, j, v in h.matrix.entries())
        return BlockHom(source, target,
                        M.from_entries(target.global_dim, source.global_dim, ents),
                        over=over, check=False)
    return MatrixHom(source, target, comps, over)


def push_sheaf(f, sheaf):
    """Pushforward that keeps direct-sum structure summand by summand."""
    parts = getattr(sheaf, "summands", None)
    if parts is not None:
        return direct_sum_sheaf(f.target, [(k, push_sheaf(f, s)) for k, s in parts])
    return pushforward(f, sheaf)


def push_component_hom(c, fa, fb, rho_prime=None):
    """push_hom that respects direct-sum structure on both sides."""
    if isinstance(c, MatrixHom) or (getattr(c.source, "summands", None) is not None
                                   and getattr(c.target, "summands", None) is not None
                                   and hasattr(c, "comps")):
        pa = push_sheaf(fa, c.source)
        pb = push_sheaf(fb, c.target)
        comps = {k: push_component_hom(h, fa, fb, rho_prime) for k, h in c.comps.items()}
        return assemble_hom(pa, pb, comps, over=rho_prime)
    if isinstance(c, BlockHom):
        pa = push_sheaf(fa, c.source)
        pb = push_sheaf(fb, c.target)
        return BlockHom(pa, pb, c.matrix, over=rho_prime, check=False)
    return push_hom(c, fa, fb, rho_prime)
