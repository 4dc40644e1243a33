"""Semi-simplicial systems of spaces and modules over a simplicial complex.

Connecting maps of a space system go down: rho(alpha, beta): X_beta -> X_alpha
for alpha contained in beta.  Connectors of a module go the other way and are
stored in adjoint form, as homs F_alpha ~> F_beta over rho(alpha, beta).

Only the edge data (beta, j), joining face(beta, j) to beta, is required;
longer connectors are composites along a fixed path.  A module whose
components are complexes carries one hom per degree on every edge.
"""

from itertools import product

from .linalg import RationalMatrix
from .poset import (
    BlockHom, BlockSheaf, LazyHom, PosetSpace, ProductPoset, SheafComplex, SheafHom,
    SheafRep, SpaceMap, identity_hom, inverse_image, pull_hom, restrict_open, tensor_sheaf,
)
from .simplicial import SimplicialComplex, face, nerve, sign

M = RationalMatrix


class DiagramError(ValueError):
    """A connecting rectangle or square fails to (anti-)commute."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


def rect_name(prefix, beta, j, k):
    return f"D({prefix};{list(beta)};{j},{k})"


def _points(space):
    if isinstance(space, ProductPoset):
        return list(product(*(f.points for f in space.factors)))
    return space.points


def _path_step(alpha, beta):
    """Index of the first vertex of beta missing from alpha."""
    for j, v in enumerate(beta):
        if v not in alpha:
            return j
    raise ValueError(f"{alpha} is not a proper face of {beta}")


# ---------------------------------------------------------------------------
# space systems

class SSSpace:
    """Spaces X_alpha on the simplexes of a complex, with maps down to faces."""

    def __init__(self, complex_, spaces, maps, check=True):
        self.complex = complex_
        missing = [a for a in complex_ if a not in spaces]
        if missing:
            raise ValueError(f"no space given for simplexes {missing}")
        self.spaces = {a: spaces[a] for a in complex_}
        self._maps = {}
        for (a, b), m in maps.items():
            a, b = tuple(a), tuple(b)
            if a not in complex_ or b not in complex_ or not set(a) < set(b):
                raise ValueError(f"connecting map given for {a} -> {b}, which is not a face pair")
            self._maps[a, b] = m
        for b in complex_:
            if len(b) > 1:
                for j in range(len(b)):
                    if (face(b, j), b) not in self._maps:
                        raise ValueError(f"missing edge map for ({list(b)};{j})")
        self._cache = {}
        if check:
            self.validate()

    def space(self, alpha):
        return self.spaces[tuple(alpha)]

    def edge(self, beta, j):
        return self._maps[face(beta, j), beta]

    def rho(self, alpha, beta):
        """X_beta -> X_alpha for alpha contained in beta."""
        alpha, beta = tuple(alpha), tuple(beta)
        if alpha == beta:
            return SpaceMap.identity(self.space(alpha))
        m = self._maps.get((alpha, beta)) or self._cache.get((alpha, beta))
        if m is None:
            j = _path_step(alpha, beta)
            m = self.rho(alpha, face(beta, j)).compose_after(self.edge(beta, j))
            self._cache[alpha, beta] = m
        return m

    def validate(self):
        for (a, b), m in self._maps.items():
            if m.source != self.space(b) or m.target != self.space(a):
                raise DiagramError(f"map for {list(a)} -> {list(b)} has the wrong source or target")
        # stored longer maps must agree with the edge composites
        for (a, b), m in self._maps.items():
            if len(b) - len(a) < 2:
                continue
            j = _path_step(a, b)
            comp = self.rho(a, face(b, j)).compose_after(self.edge(b, j))
            for p in _points(self.space(b)):
                if m(p) != comp(p):
                    raise DiagramError(f"stored map {list(a)} <- {list(b)} differs from the "
                                       f"edge composite at {p!r}", (a, b))
        for b in self.complex:
            for j in range(len(b)):
                for k in range(j + 1, len(b)):
                    if len(b) < 3:
                        continue
                    r1 = self.edge(face(b, j), k - 1).compose_after(self.edge(b, j))
                    r2 = self.edge(face(b, k), j).compose_after(self.edge(b, k))
                    for p in _points(self.space(b)):
                        if r1(p) != r2(p):
                            raise DiagramError(f"rectangle {rect_name('X', b, j, k)} does not "
                                               f"commute at {p!r}", (b, j, k))
        return True

    def __repr__(self):
        return f"SSSpace({self.complex!r})"


def cover_system(space, cover):
    """Intersections of an open cover with their inclusions, over the nerve."""
    cover = [frozenset(u) for u in cover]
    k = nerve(space, cover)
    spaces, maps = {}, {}
    for a in k:
        u = frozenset.intersection(*(cover[i] for i in a))
        spaces[a] = space.subspace(u)
    for b in k:
        if len(b) > 1:
            for j in range(len(b)):
                a = face(b, j)
                maps[a, b] = SpaceMap.inclusion(spaces[b], spaces[a])
    out = SSSpace(k, spaces, maps, check=False)
    out.cover = cover
    out.base = space
    return out


def product_system(complex_, factors, materialize=False):
    """X_alpha = product of the factors indexed by alpha, with projections."""
    spaces, maps = {}, {}
    for a in complex_:
        p = ProductPoset([factors[i] for i in a])
        spaces[a] = p.materialize() if materialize else p
    for b in complex_:
        for j in range(len(b)):
            if len(b) > 1:
                a = face(b, j)
                maps[a, b] = SpaceMap(spaces[b], spaces[a],
                                      (lambda j: lambda p: p[:j] + p[j + 1:])(j), check=False)
    return SSSpace(complex_, spaces, maps, check=False)


def point_system(space):
    """A single space over K(pt)."""
    return SSSpace(SimplicialComplex([0], [(0,)]), {(0,): space}, {}, check=False)


# ---------------------------------------------------------------------------
# modules

def as_complex(x):
    if isinstance(x, SheafComplex):
        return x
    return SheafComplex([x], [], 0, check=False)


def _hom_stalks_equal(h1, h2, s=1):
    if isinstance(h1, BlockHom) and isinstance(h2, BlockHom):
        return h1.matrix == h2.matrix.scale(s) if s != 1 else h1.matrix == h2.matrix
    for x in h1.target.base.points:
        a, b = h1.stalk(x), h2.stalk(x)
        if a != (b if s == 1 else b.scale(s)):
            return False
    return True


def _first_diff(h1, h2, s=1):
    for x in h1.target.base.points:
        if h1.stalk(x) != h2.stalk(x).scale(s):
            return x
    return None


class SSModule:
    """Components (sheaf complexes) on the X_alpha plus edge connectors.

    edges[(beta, j)] is a list with one hom per degree, each from
    comp(face(beta, j))^n to comp(beta)^n over the edge map.  With
    alternate=True the rectangles anti-commute and connectors anti-commute
    with the differentials.
    """

    def __init__(self, space, comps, edges, alternate=False, family=None, check=True):
        self.space = space
        self.alternate = alternate
        self.comps = {a: as_complex(comps[a]) for a in space.complex}
        starts = {c.start for c in self.comps.values()}
        lens = {len(c.terms) for c in self.comps.values()}
        if len(starts) > 1 or len(lens) > 1:
            raise ValueError("components must share one degree range")
        self.start = starts.pop()
        self.length = lens.pop()
        self.edges = {}
        for b in space.complex:
            for j in range(len(b) if len(b) > 1 else 0):
                h = edges.get((b, j))
                if h is None:
                    raise ValueError(f"missing connector for edge ({list(b)};{j})")
                self.edges[b, j] = list(h) if isinstance(h, (list, tuple)) else [h]
                if len(self.edges[b, j]) != self.length:
                    raise ValueError(f"connector ({list(b)};{j}) needs one map per degree")
        self.family = dict(family or {})
        self._conn_cache = {}
        if check:
            self.validate()

    # -- access
    @property
    def complex(self):
        return self.space.complex

    def degrees(self):
        return range(self.start, self.start + self.length)

    def comp(self, alpha):
        return self.comps[tuple(alpha)]

    def sheaf(self, alpha, n=None):
        c = self.comp(alpha)
        return c.term(self.start if n is None else n)

    def edge(self, beta, j, n=None):
        return self.edges[tuple(beta), j][(self.start if n is None else n) - self.start]

    def connector(self, alpha, beta, n=None):
        """Composite connector comp(alpha) ~> comp(beta) along the canonical path."""
        alpha, beta = tuple(alpha), tuple(beta)
        n = self.start if n is None else n
        if alpha == beta:
            return identity_hom(self.sheaf(alpha, n))
        key = (alpha, beta, n)
        h = self._conn_cache.get(key)
        if h is None:
            h = self.family.get((alpha, beta))
            if h is not None and isinstance(h, (list, tuple)):
                h = h[n - self.start]
        if h is None:
            j = _path_step(alpha, beta)
            h = self.edge(beta, j, n).compose_after(self.connector(alpha, face(beta, j), n))
            self._conn_cache[key] = h
        return h

    @property
    def is_module(self):
        return self.length == 1

    # -- checks
    def validate(self):
        name = "F"
        for a, c in self.comps.items():
            c.check_d_squared()
        for (b, j), hs in self.edges.items():
            a = face(b, j)
            for n, h in zip(self.degrees(), hs):
                if h.source.base != self.space.space(a) or h.target.base != self.space.space(b):
                    raise DiagramError(f"connector ({list(b)};{j}) lives on the wrong spaces")
                if not isinstance(h, BlockHom):
                    h.validate()
        s = -1 if self.alternate else 1
        # connectors against differentials
        for (b, j), hs in self.edges.items():
            a = face(b, j)
            for n in list(self.degrees())[:-1]:
                lhs = self.edge(b, j, n + 1).compose_after(self.comp(a).d(n))
                rhs = self.comp(b).d(n).compose_after(self.edge(b, j, n))
                if not _hom_stalks_equal(lhs, rhs, s):
                    raise DiagramError(f"connector ({list(b)};{j}) does not "
                                       f"{'anti-' if s < 0 else ''}commute with d in degree {n}",
                                       (b, j))
        # rectangles
        for b in self.complex:
            for j in range(len(b)):
                for k in range(j + 1, len(b)):
                    if len(b) < 3:
                        continue
                    for n in self.degrees():
                        r1 = self.edge(b, j, n).compose_after(self.edge(face(b, j), k - 1, n))
                        r2 = self.edge(b, k, n).compose_after(self.edge(face(b, k), j, n))
                        if not _hom_stalks_equal(r1, r2, s):
                            how = "anti-commute" if self.alternate else "commute"
                            where = _first_diff(r1, r2, s)
                            raise DiagramError(f"rectangle {rect_name(name, b, j, k)} does not "
                                               f"{how} (degree {n}, point {where!r})", (b, j, k))
        # a stored full family must match the edge composites
        for (a, b), h in self.family.items():
            for n in self.degrees():
                hn = h[n - self.start] if isinstance(h, (list, tuple)) else h
                j = _path_step(a, b)
                comp = self.edge(b, j, n).compose_after(self.connector(a, face(b, j), n))
                if not _hom_stalks_equal(hn, comp):
                    raise DiagramError(f"stored connector {list(a)} -> {list(b)} differs from the "
                                       "edge composite", (a, b))
        return True

    def data(self):
        """Comparable data: stalk dims, restrictions, differentials, connectors."""
        out = {}
        for a, c in self.comps.items():
            base = c.base
            out["comp", a] = [t.data() for t in c.terms]
            out["d", a] = [{x: d.stalk(x) for x in base.points} for d in c.diffs]
        for (b, j), hs in self.edges.items():
            pts = self.space.space(b).points
            out["edge", b, j] = [{x: h.stalk(x) for x in pts} for h in hs]
        return out

    def same_data(self, other):
        return self.alternate == other.alternate and self.start == other.start \
            and self.data() == other.data()

    def __repr__(self):
        kind = "alternate " if self.alternate else ""
        return f"SSModule({kind}{self.complex!r}, degrees {list(self.degrees())})"


def validate_ss_module(m):
    if m.alternate:
        raise ValueError("module is alternate; use validate_alt_module")
    return m.validate()


def validate_alt_module(m):
    if not m.alternate:
        raise ValueError("module is not alternate; use validate_ss_module")
    return m.validate()


def _scaled(h, s):
    return h if s == 1 else h.scaled(s)


def _twist(m, alternate):
    comps = {}
    for a, c in m.comps.items():
        s = -1 if (len(a) - 1) % 2 else 1
        comps[a] = SheafComplex(c.terms, [_scaled(d, s) for d in c.diffs], c.start, check=False)
    edges = {(b, j): [_scaled(h, sign(b, j)) for h in hs] for (b, j), hs in m.edges.items()}
    return SSModule(m.space, comps, edges, alternate=alternate, check=False)


def alt(m):
    """Edge connectors times (-1)^j, differentials on alpha times (-1)^|alpha|."""
    if m.alternate:
        raise ValueError("alt expects a non-alternate module")
    return _twist(m, True)


def alt_inv(m):
    if not m.alternate:
        raise ValueError("alt_inv expects an alternate module")
    return _twist(m, False)


# ---------------------------------------------------------------------------
# morphisms

class SSMorphism:
    """Components u_alpha: source_alpha -> target_alpha, one hom per degree.

    anti=True marks an anti-morphism: squares with the connectors
    anti-commute.
    """

    def __init__(self, source, target, comps, anti=False, check=True):
        self.source = source
        self.target = target
        self.anti = anti
        self.comps = {}
        for a in source.complex:
            h = comps[a]
            self.comps[a] = list(h) if isinstance(h, (list, tuple)) else [h]
        if check:
            self.validate()

    def at(self, alpha, n=None):
        return self.comps[tuple(alpha)][(self.source.start if n is None else n) - self.source.start]

    def validate(self):
        s = -1 if self.anti else 1
        src, tgt = self.source, self.target
        for b in src.complex:
            for n in src.degrees():
                if n + 1 in src.degrees():
                    lhs = tgt.comp(b).d(n).compose_after(self.at(b, n))
                    rhs = self.at(b, n + 1).compose_after(src.comp(b).d(n))
                    if not _hom_stalks_equal(lhs, rhs):
                        raise DiagramError(f"component {list(b)} is not a chain map in degree {n}")
            for j in range(len(b) if len(b) > 1 else 0):
                a = face(b, j)
                for n in src.degrees():
                    lhs = tgt.edge(b, j, n).compose_after(self.at(a, n))
                    rhs = self.at(b, n).compose_after(src.edge(b, j, n))
                    if not _hom_stalks_equal(lhs, rhs, s):
                        raise DiagramError(f"square at edge ({list(b)};{j}) fails in degree {n}",
                                           (b, j))
        return True

    def compose_after(self, other):
        comps = {a: [x.compose_after(y) for x, y in zip(self.comps[a], other.comps[a])]
                 for a in self.comps}
        return SSMorphism(other.source, self.target, comps, anti=self.anti != other.anti,
                          check=False)

    def data(self):
        return {(a, k): {x: h.stalk(x) for x in h.target.base.points}
                for a, hs in self.comps.items() for k, h in enumerate(hs)}


def alt_morphism(u, source=None, target=None):
    """alt on morphisms keeps the components; only the modules change."""
    return SSMorphism(source or alt(u.source), target or alt(u.target), u.comps,
                      anti=u.anti, check=False)


# ---------------------------------------------------------------------------
# constructions

def _identity_between(src, tgt, over):
    """Identity stalk maps between two restrictions of one sheaf."""
    if isinstance(src, BlockSheaf) and isinstance(tgt, BlockSheaf):
        ents = []
        for n, (k, _, d) in enumerate(tgt.blocks):
            m = src.block_index[k]
            r0, c0 = tgt.block_offsets[n], src.block_offsets[m]
            ents.extend((r0 + i, c0 + i, 1) for i in range(d))
        return BlockHom(src, tgt, M.from_entries(tgt.global_dim, src.global_dim, ents),
                        over=over, check=False)
    return LazyHom(src, tgt, lambda x: M.identity(tgt.dim(x)), over)


def _restrict_complex(c, u):
    incl = SpaceMap.inclusion(c.base.subspace(u), c.base)
    terms = [restrict_open(t, u) for t in c.terms]
    diffs = [pull_hom(d, incl, incl, None) for d in c.diffs]
    return SheafComplex(terms, diffs, c.start, check=False)


def restrict_to_cover(space, cover, f):
    """F|U as a module over the nerve: components on the intersections,
    identity connectors.  f may be a sheaf or a sheaf complex."""
    system = cover_system(space, cover)
    cx = as_complex(f)
    comps = {a: _restrict_complex(cx, frozenset(system.space(a).points)) for a in system.complex}
    edges = {}
    for b in system.complex:
        for j in range(len(b) if len(b) > 1 else 0):
            a = face(b, j)
            over = system.edge(b, j)
            edges[b, j] = [_identity_between(comps[a].term(n), comps[b].term(n), over)
                           for n in cx.degrees()]
    return SSModule(system, comps, edges, check=False)


def constant_module(system, k=1):
    from .poset import constant_sheaf
    comps = {a: constant_sheaf(system.space(a), k) for a in system.complex}
    edges = {}
    for b in system.complex:
        for j in range(len(b) if len(b) > 1 else 0):
            a = face(b, j)
            edges[b, j] = LazyHom(comps[a], comps[b], lambda x, k=k: M.identity(k),
                                  system.edge(b, j))
    return SSModule(system, comps, edges, check=False)


def tensor_ss(f, g):
    """Componentwise tensor product of two modules (single degree)."""
    if f.space is not g.space and f.space.complex != g.space.complex:
        raise ValueError("tensor product of modules over different systems")
    if not (f.is_module and g.is_module):
        raise ValueError("tensor_ss is defined for modules, not complexes")
    comps = {a: tensor_sheaf(f.sheaf(a), g.sheaf(a)) for a in f.complex}
    edges = {}
    for (b, j) in f.edges:
        hf, hg = f.edge(b, j), g.edge(b, j)
        edges[b, j] = LazyHom(comps[face(b, j)], comps[b],
                              lambda x, hf=hf, hg=hg: hf.stalk(x).kron(hg.stalk(x)),
                              f.space.edge(b, j))
    return SSModule(f.space, comps, edges, alternate=f.alternate, check=False)


def module_from_family(system, comps, family, alternate=False):
    """Build from a full connector family {(alpha, beta): hom}, validated
    against the composites of its edge members."""
    edges = {}
    for b in system.complex:
        for j in range(len(b) if len(b) > 1 else 0):
            edges[b, j] = family[face(b, j), b]
    longer = {k: v for k, v in family.items() if len(k[1]) - len(k[0]) >= 2}
    return SSModule(system, comps, edges, alternate=alternate, family=longer)
