"""Embedding atlases and the Dolbeault-type resolution they define.

A chart (U, k, D) embeds an open set U of X into an ambient poset D.  The
chart complex of F over U has one block per strict chain c of U, keyed by
the ambient chain k(c), anchored at the first point of c and of dimension
F at the last point.  When k(U) is down-closed in D this is exactly the
inverse image of the bar resolution of k_* F on D (see dolb_chart), and the
key only remembers where the chain sits in the ambient model.

Over a cover the chart complexes form a module over the nerve; pushing it
to X with F-sharp of the cover inclusion gives Dolb(A, F), whose blocks
are keyed ((alpha, n), ambient chain).  A morphism of atlases acts on these
keys through the ambient maps, which is how pullback morphisms are built.
"""

from dataclasses import dataclass, field

from .linalg import ChainMap, CochainComplex, RationalMatrix, cohomology, induced_map, is_quasi_iso
from .poset import (
    BlockHom, BlockSheaf, IntoBlockHom, PosetSpace, ProductPoset, Resolution, SheafComplex,
    SpaceMap, StalkHom, chain_differential, chain_resolution_terms, flasque_bar_resolution,
    inverse_image, pushforward, restrict_open, tensor_sheaf,
)
from .sharp import SSMapOverF, cover_inclusion, sharp_complex
from .simplicial import SimplicialMorphism, face, permutation_sign
from .ss import SSModule, SSSpace, alt, cover_system

M = RationalMatrix


# ---------------------------------------------------------------------------
# charts and atlases

def _as_map(source, target, mapping, check=True):
    if isinstance(mapping, SpaceMap):
        return mapping
    return SpaceMap(source, target, mapping, check=check)


class EmbeddingTriple:
    """A chart (U, k, D): an order embedding k of the poset U into D.

    closed records whether k(U) is down-closed in D.  Charts given by a
    user must be closed; product charts built internally usually are not
    (see require_closed).
    """

    def __init__(self, space, embedding, ambient, require_closed=True):
        self.space = space
        self.ambient = ambient
        self.embedding = _as_map(space, ambient, embedding)
        k = self.embedding
        if not k.is_order_embedding():
            raise ValueError("chart map is not an order embedding")
        image = {k(p) for p in space.points}
        self.closed = all(d in image for p in image for d in ambient.down(p))
        if require_closed and not self.closed:
            bad = next(p for p in sorted(space.points) if any(
                d not in image for d in ambient.down(k(p))))
            raise ValueError(f"chart image is not closed: points below k({bad!r}) are missing")

    @property
    def open(self):
        return frozenset(self.space.points)

    def __call__(self, p):
        return self.embedding(p)

    def chain_key(self, chain):
        return tuple(self.embedding(p) for p in chain)

    @classmethod
    def identity(cls, space):
        return cls(space, SpaceMap.identity(space), space)

    def __repr__(self):
        return f"EmbeddingTriple({len(self.space)} points, closed={self.closed})"


class Atlas:
    """Charts (U_i, k_i, D_i) with U_i open in X and covering X."""

    def __init__(self, space, charts):
        self.space = space
        self.charts = list(charts)
        if not self.charts:
            raise ValueError("an atlas needs at least one chart")
        for i, c in enumerate(self.charts):
            if not space.is_open(c.open):
                raise ValueError(f"chart {i}: {sorted(c.open)} is not open in X")
        covered = frozenset().union(*(c.open for c in self.charts))
        missing = set(space.points) - covered
        if missing:
            raise ValueError(f"charts miss the points {sorted(missing)}")

    @property
    def cover(self):
        return [c.open for c in self.charts]

    def __len__(self):
        return len(self.charts)

    @classmethod
    def identity_charts(cls, space, cover):
        return cls(space, [EmbeddingTriple.identity(space.subspace(u)) for u in cover])

    @classmethod
    def single(cls, space):
        return cls(space, [EmbeddingTriple.identity(space)])

    def __repr__(self):
        return f"Atlas({len(self.charts)} charts on {self.space!r})"


def _drop(j):
    def fn(p):
        q = p[:j] + p[j + 1:]
        return q[0] if len(q) == 1 else q
    return fn


class SSEmbeddingTriple:
    """Cover intersections U_alpha, ambient products D_alpha and the
    embeddings k_alpha = (k_i)_{i in alpha} between them."""

    def __init__(self, atlas):
        self.atlas = atlas
        self.system = cover_system(atlas.space, atlas.cover)
        K = self.system.complex
        charts = atlas.charts
        spaces, maps = {}, {}
        for a in K:
            spaces[a] = charts[a[0]].ambient if len(a) == 1 else \
                ProductPoset([charts[i].ambient for i in a])
        for b in K:
            for j in range(len(b) if len(b) > 1 else 0):
                maps[face(b, j), b] = SpaceMap(spaces[b], spaces[face(b, j)], _drop(j),
                                               check=False)
        self.ambient = SSSpace(K, spaces, maps, check=False)
        self.embeddings = {a: SpaceMap(self.system.space(a), spaces[a], self._embed_fn(a),
                                       check=False) for a in K}
        self.k = SSMapOverF(self.system, self.ambient, SimplicialMorphism.identity(K),
                            self.embeddings)
        self.b = cover_inclusion(self.system)
        self.closed = {}
        for a in K:
            k = self.embeddings[a]
            pts = self.system.space(a).points
            if not k.is_order_embedding():
                raise ValueError(f"k_{list(a)} is not an order embedding")
            image = {k(p) for p in pts}
            self.closed[a] = all(d in image for p in image for d in spaces[a].down(p))

    def _embed_fn(self, a):
        ks = [self.atlas.charts[i].embedding for i in a]
        if len(ks) == 1:
            return ks[0]
        return lambda p: tuple(k(p) for k in ks)

    def embed(self, alpha):
        return self.embeddings[tuple(alpha)]

    def chain_key(self, alpha, chain):
        k = self.embeddings[tuple(alpha)]
        return tuple(k(p) for p in chain)


def associated_ss_triple(atlas):
    return SSEmbeddingTriple(atlas)


# ---------------------------------------------------------------------------
# chart complexes

def chart_complex(space, sheaf, label, top):
    """Chain-block resolution of sheaf on space, blocks keyed by label(chain)."""
    terms = chain_resolution_terms(space, sheaf, label=label, top=top)
    diffs = [BlockHom(terms[n], terms[n + 1],
                      chain_differential(terms[n], terms[n + 1], n, sheaf, label), check=False)
             for n in range(len(terms) - 1)]
    return SheafComplex(terms, diffs, 0, check=False)


def dolb_chart(chart, sheaf, provider=flasque_bar_resolution):
    """Resolve k_* F on the ambient poset with provider and pull back along k.

    The chart must be closed and its ambient space materialised.  The result
    is a Resolution of sheaf whose blocks are keyed by ambient chains.
    """
    if not chart.closed:
        raise ValueError("dolb_chart needs a chart with closed image")
    if sheaf.base != chart.space:
        raise ValueError("sheaf does not live on the chart domain")
    k = chart.embedding
    pushed = pushforward(k, sheaf)
    res = provider(chart.ambient, pushed)
    if not res.is_stalkwise_exact():
        raise ValueError("chart resolution provider did not return a resolution")
    terms = [inverse_image(k, t) for t in res.complex.terms]
    if not all(isinstance(t, BlockSheaf) for t in terms):
        raise ValueError("provider terms do not pull back to block sheaves")
    # chains of U are no longer than its height; later terms pull back to zero
    keep = chart.space.height + 1
    if any(not t.is_zero() for t in terms[keep:]):
        raise ValueError("provider terms beyond the height of U do not vanish on U")
    terms = terms[:keep]
    diffs = []
    for n, d in enumerate(res.complex.diffs[:keep - 1]):
        src, tgt = res.complex.terms[n], res.complex.terms[n + 1]
        rows = _coords_of_keys(tgt, terms[n + 1])
        cols = _coords_of_keys(src, terms[n])
        diffs.append(BlockHom(terms[n], terms[n + 1], d.matrix.submatrix(rows, cols),
                              check=False))
    cx = SheafComplex(terms, diffs, res.complex.start)
    c0 = terms[0]
    d0 = res.complex.terms[0]
    per_block = {}
    for n, (key, x, dim) in enumerate(c0.blocks):
        # (k_* F)_{k(x)} is Gamma(up x, F) in section coordinates
        ev = sheaf.sections(chart.space.up(x)).eval(x)
        per_block[n] = res.augmentation.per_block[d0.block_index[key]] @ ev.inverse()
    aug = IntoBlockHom(sheaf, c0, per_block)
    return Resolution(sheaf, cx, aug)


def _coords_of_keys(orig, sub):
    out = []
    for key, _, d in sub.blocks:
        n = orig.block_index[key]
        o = orig.block_offsets[n]
        out.extend(range(o, o + d))
    return out


def chart_resolution(chart, sheaf):
    """Fast path: the chart complex built directly on U (any chart)."""
    if sheaf.base != chart.space:
        raise ValueError("sheaf does not live on the chart domain")
    cx = chart_complex(chart.space, sheaf, chart.chain_key, chart.space.height)
    c0 = cx.terms[0]
    aug = IntoBlockHom(sheaf, c0, {n: M.identity(d) for n, (_, _, d) in enumerate(c0.blocks)})
    return Resolution(sheaf, cx, aug)


# ---------------------------------------------------------------------------
# the resolution of an atlas

def dolb_ss(triple, sheaf):
    """The module of chart complexes over the cover system, identity connectors."""
    system = triple.system
    X = triple.atlas.space
    top = X.height
    comps = {}
    for a in system.complex:
        u = frozenset(system.space(a).points)
        fa = restrict_open(sheaf, u)
        comps[a] = chart_complex(system.space(a), fa,
                                 (lambda a: lambda c: triple.chain_key(a, c))(a), top)
    edges = {}
    for b in system.complex:
        for j in range(len(b) if len(b) > 1 else 0):
            a = face(b, j)
            over = system.edge(b, j)
            per = []
            for src, tgt in zip(comps[a].terms, comps[b].terms):
                ents = []
                for n, (key, _, d) in enumerate(tgt.blocks):
                    m = src.block_index[triple.chain_key(a, tgt.chain_of[key])]
                    r0, c0 = tgt.block_offsets[n], src.block_offsets[m]
                    ents.extend((r0 + i, c0 + i, 1) for i in range(d))
                per.append(BlockHom(src, tgt, M.from_entries(tgt.global_dim, src.global_dim, ents),
                                    over=over, check=False))
            edges[b, j] = per
    return SSModule(system, comps, edges, check=False)


class DolbComplex:
    """Dolb(A, F) on X with its augmentation from F.

    chain_of maps a block key ((alpha, n), ambient chain) to (alpha, chain
    of points of X).
    """

    def __init__(self, atlas, sheaf, complex_, augmentation, chain_of, triple=None):
        self.atlas = atlas
        self.sheaf = sheaf
        self.complex = complex_
        self.augmentation = augmentation
        self.chain_of = chain_of
        self.triple = triple

    @property
    def terms(self):
        return self.complex.terms

    def term(self, m):
        return self.complex.term(m)

    def d(self, m):
        return self.complex.d(m)

    def degrees(self):
        return self.complex.degrees()

    def resolution(self):
        return Resolution(self.sheaf, self.complex, self.augmentation)

    def sections_complex(self, u=None):
        return self.complex.sections_complex(u)

    def cohomology(self, u=None):
        return self.sections_complex(u).betti()

    def is_stalkwise_resolution(self):
        return self.resolution().is_stalkwise_exact()

    def augmentation_is_quasi_iso(self, u=None):
        return is_quasi_iso(self.resolution().augmentation_on_sections(u))

    def check_d_squared(self):
        return self.complex.check_d_squared()

    def data(self):
        return ([t.blocks for t in self.terms], [d.matrix for d in self.complex.diffs])

    def __repr__(self):
        return f"DolbComplex(dims={[t.global_dim for t in self.terms]})"


def _augmentation(sheaf, c0):
    return IntoBlockHom(sheaf, c0, {n: M.identity(d) for n, (_, _, d) in enumerate(c0.blocks)})


def dolb_atlas(atlas, sheaf, triple=None):
    """Dolb(A, F): F-sharp of the cover inclusion applied to the alternate
    module of chart complexes."""
    if sheaf.base != atlas.space:
        raise ValueError("sheaf does not live on the atlas space")
    triple = triple or SSEmbeddingTriple(atlas)
    mod = dolb_ss(triple, sheaf)
    pushed = sharp_complex(triple.b, alt(mod), check=False)
    cx = pushed.comp((0,))
    chain_of = {}
    for t in cx.terms:
        for (an, key), _, _ in t.blocks:
            a = an[0]
            chain_of[an, key] = (a, mod.sheaf(a, an[1]).chain_of[key])
    cx.check_d_squared()
    return DolbComplex(atlas, sheaf, cx, _augmentation(sheaf, cx.terms[0]), chain_of, triple)


def dolb_atlas_direct(atlas, sheaf):
    """Independent construction of Dolb(A, F): blocks and total differential
    written out entry by entry (oracle for dolb_atlas)."""
    X = atlas.space
    cover = atlas.cover
    charts = atlas.charts
    from .simplicial import nerve
    K = nerve(X, cover)
    h = X.height

    def key_of(a, c):
        if len(a) == 1:
            return tuple(charts[a[0]].embedding(p) for p in c)
        return tuple(tuple(charts[i].embedding(p) for i in a) for p in c)

    inter = {a: frozenset.intersection(*(cover[i] for i in a)) for a in K}
    top = h + K.dim
    blocks, chain_of = [], {}
    for m in range(top + 1):
        bl = []
        for a in K:
            n = m - (len(a) - 1)
            if not 0 <= n <= h:
                continue
            for c in X.chains(n, within=inter[a]):
                if sheaf.dim(c[-1]):
                    key = ((a, n), key_of(a, c))
                    bl.append((key, c[0], sheaf.dim(c[-1])))
                    chain_of[key] = (a, c)
        blocks.append(BlockSheaf(X, bl))
    diffs = []
    for m in range(top):
        src, tgt = blocks[m], blocks[m + 1]
        ents = []
        for bi, (key, _, dim) in enumerate(tgt.blocks):
            (b, n), _ = key
            _, c = chain_of[key]
            r0 = tgt.block_offsets[bi]
            # nerve direction
            if len(b) > 1:
                for j in range(len(b)):
                    a = b[:j] + b[j + 1:]
                    si = src.block_index.get(((a, n), key_of(a, c)))
                    if si is not None:
                        c0 = src.block_offsets[si]
                        s = -1 if j % 2 else 1
                        ents.extend((r0 + i, c0 + i, s) for i in range(dim))
            # chain direction, twisted by (-1)^|b|
            if n >= 1:
                tw = -1 if (len(b) - 1) % 2 else 1
                for j in range(n + 1):
                    fc = c[:j] + c[j + 1:]
                    si = src.block_index.get(((b, n - 1), key_of(b, fc)))
                    if si is None:
                        continue
                    c0 = src.block_offsets[si]
                    s = tw * (-1 if j % 2 else 1)
                    if j < n:
                        ents.extend((r0 + i, c0 + i, s) for i in range(dim))
                    else:
                        r = sheaf.res(fc[-1], c[-1])
                        ents.extend((r0 + i, c0 + k, s * v) for i, k, v in r.entries())
        diffs.append(BlockHom(src, tgt, M.from_entries(tgt.global_dim, src.global_dim, ents),
                              check=False))
    cx = SheafComplex(blocks, diffs, 0)
    return DolbComplex(atlas, sheaf, cx, _augmentation(sheaf, blocks[0]), chain_of)


def restricted_double_complex(dolb, u):
    """K^{p,q} restricted to the open u: sections over u of the Dolb blocks,
    as a total complex (its cohomology should be Gamma(u, F) in degree 0)."""
    return dolb.sections_complex(u)


# ---------------------------------------------------------------------------
# morphisms of atlases and pullbacks

class AtlasMorphism:
    """(f, tau, ambient maps): X with atlas A to Y with atlas B.

    tau sends chart indices of A to chart indices of B with f(U_i) inside
    V_tau(i); ambient[i]: D_i -> D'_tau(i) satisfies ambient[i](k_i x) =
    k'_tau(i)(f x) on U_i.
    """

    def __init__(self, source, target, space_map, tau, ambient, check=True):
        self.source = source
        self.target = target
        self.map = space_map
        self.tau = {int(i): int(tau[i]) for i in range(len(source.charts))}
        self.ambient = {}
        for i, c in enumerate(source.charts):
            t = target.charts[self.tau[i]]
            a = ambient[i]
            self.ambient[i] = a if isinstance(a, SpaceMap) else \
                SpaceMap(c.ambient, t.ambient, a, check=check)
        if check:
            self.validate()

    def validate(self):
        f = self.map
        for i, c in enumerate(self.source.charts):
            j = self.tau[i]
            if not 0 <= j < len(self.target.charts):
                raise ValueError(f"tau sends chart {i} to {j}, which is not a chart of the target")
            t = self.target.charts[j]
            for x in sorted(c.open):
                if f(x) not in t.open:
                    raise ValueError(f"tau is not a refinement: f({x!r}) is outside chart {j}")
                if self.ambient[i](c.embedding(x)) != t.embedding(f(x)):
                    raise ValueError(f"ambient map of chart {i} does not cover f at {x!r}")
        return True

    def compose_after(self, other):
        """self o other."""
        tau = {i: self.tau[other.tau[i]] for i in other.tau}
        amb = {i: self.ambient[other.tau[i]].compose_after(other.ambient[i]) for i in other.tau}
        return AtlasMorphism(other.source, self.target, self.map.compose_after(other.map), tau,
                             amb, check=False)

    @classmethod
    def identity(cls, atlas):
        return cls(atlas, atlas, SpaceMap.identity(atlas.space),
                   {i: i for i in range(len(atlas.charts))},
                   {i: SpaceMap.identity(c.ambient) for i, c in enumerate(atlas.charts)},
                   check=False)


def _split_key(alpha, key):
    """Per-vertex ambient chains of a block key chain."""
    if len(alpha) == 1:
        return [key]
    return [tuple(p[t] for p in key) for t in range(len(alpha))]


def _pack_key(parts):
    if len(parts) == 1:
        return parts[0]
    return tuple(zip(*parts))


def pullback_matrix(phi, u, dolb_tgt, dolb_src, m):
    """Global matrix of f*(u) in degree m: rows Dolb(A, F)^m, cols Dolb(B, G)^m."""
    tgt, src = dolb_src.term(m), dolb_tgt.term(m)
    ents = []
    for bi, (key, _, dim) in enumerate(tgt.blocks):
        (a, n), amb = key
        img = [phi.tau[i] for i in a]
        gamma = tuple(sorted(set(img)))
        if len(gamma) < len(a):
            continue
        s = permutation_sign(img)
        parts = _split_key(a, amb)
        mapped = {phi.tau[i]: tuple(phi.ambient[i](p) for p in part) for i, part in zip(a, parts)}
        skey = ((gamma, n), _pack_key([mapped[g] for g in gamma]))
        si = src.block_index.get(skey)
        if si is None:
            continue
        x = dolb_src.chain_of[key][1][-1]
        um = u.stalk(x)
        r0, c0 = tgt.block_offsets[bi], src.block_offsets[si]
        ents.extend((r0 + i, c0 + k, s * v) for i, k, v in um.entries())
    return M.from_entries(tgt.global_dim, src.global_dim, ents)


class PullbackMorphism:
    """f*(u): Dolb(B, G) -> f_* Dolb(A, F), one BlockHom over f per degree."""

    def __init__(self, phi, u, source, target, comps):
        self.phi = phi
        self.u = u
        self.source = source
        self.target = target
        self.comps = comps

    def at(self, m):
        return self.comps[m]

    def matrix(self, m):
        h = self.comps.get(m)
        if h is None:
            return M.zeros(self.target.term(m).global_dim if m in self.target.degrees() else 0,
                           self.source.term(m).global_dim if m in self.source.degrees() else 0)
        return h.matrix

    def degrees(self):
        return sorted(self.comps)

    def on_sections(self, check=True):
        src = self.source.sections_complex()
        tgt = self.target.sections_complex()
        return ChainMap(src, tgt, {m: h.matrix for m, h in self.comps.items()}, check=check)

    def check_chain_map(self):
        for m in self.degrees():
            if m + 1 not in self.comps:
                continue
            lhs = self.target.d(m).matrix @ self.comps[m].matrix
            rhs = self.comps[m + 1].matrix @ self.source.d(m).matrix
            if lhs != rhs:
                raise ValueError(f"pullback is not a chain map in degree {m}")
        return True

    def check_augmentation(self):
        """f*(u) o aug_G = aug_F o u, stalkwise over X."""
        f = self.phi.map
        h0 = self.comps[0]
        for x in self.target.atlas.space.points:
            lhs = h0.stalk(x) @ self.source.augmentation.stalk(f(x))
            rhs = self.target.augmentation.stalk(x) @ self.u.stalk(x)
            if lhs != rhs:
                raise ValueError(f"pullback is not compatible with the augmentations at {x!r}")
        return True

    def is_quasi_iso(self):
        return is_quasi_iso(self.on_sections())

    def compose_after(self, other):
        """self o other as global matrices (other: Dolb(C) -> Dolb(B))."""
        return {m: self.matrix(m) @ other.matrix(m)
                for m in set(self.degrees()) & set(other.degrees())}


def pullback_morphism(phi, u, dolb_source=None, dolb_target=None, check=True):
    """f*(u) for phi = (f, tau, ambient maps) and u: G ~> F over f.

    dolb_source is Dolb(B, G) on Y, dolb_target is Dolb(A, F) on X.
    """
    f = phi.map
    if u.over is not None and u.over is not f and any(u.f(x) != f(x) for x in f.source.points):
        raise ValueError("u does not lie over the space map of the atlas morphism")
    src = dolb_source or dolb_atlas(phi.target, u.source)
    tgt = dolb_target or dolb_atlas(phi.source, u.target)
    comps = {}
    for m in tgt.degrees():
        if m not in src.degrees():
            continue
        mat = pullback_matrix(phi, u, src, tgt, m)
        comps[m] = BlockHom(src.term(m), tgt.term(m), mat, over=f, check=check)
    out = PullbackMorphism(phi, u, src, tgt, comps)
    if check:
        out.check_chain_map()
        out.check_augmentation()
    return out


def identity_over(sheaf, space_map=None):
    return StalkHom(sheaf, sheaf, {x: M.identity(sheaf.dim(x)) for x in sheaf.base.points},
                    over=space_map, check=False)


# ---------------------------------------------------------------------------
# products of atlases

def _pair_embedding(k1, k2, f):
    return lambda x: (k1(x), k2(f(x)))


def atlas_product(source, tau, target, space_map=None):
    """A x_tau B: charts (U_i, x -> (k_i x, k'_tau(i) f x), D_i x D'_tau(i)).

    Returns (product atlas, p1 onto A over the identity, p2 onto B over f).
    """
    X = source.space
    f = space_map or SpaceMap.identity(X)
    tau = {i: tau[i] for i in range(len(source.charts))}
    charts = []
    for i, c in enumerate(source.charts):
        t = target.charts[tau[i]]
        for x in sorted(c.open):
            if f(x) not in t.open:
                raise ValueError(f"tau is not a refinement: f({x!r}) is outside chart {tau[i]}")
        charts.append(EmbeddingTriple(c.space, _pair_embedding(c.embedding, t.embedding, f),
                                      ProductPoset([c.ambient, t.ambient]), require_closed=False))
    prod = Atlas(X, charts)
    p1 = AtlasMorphism(prod, source, SpaceMap.identity(X), {i: i for i in tau},
                       {i: SpaceMap(charts[i].ambient, source.charts[i].ambient,
                                    lambda p: p[0], check=False) for i in tau})
    p2 = AtlasMorphism(prod, target, f, tau,
                       {i: SpaceMap(charts[i].ambient, target.charts[tau[i]].ambient,
                                    lambda p: p[1], check=False) for i in tau})
    return prod, p1, p2


def product_factorization(prod, p1, p2, q1, q2):
    """The unique alpha with p1 o alpha = q1 and p2 o alpha = q2 (on chart images).

    q1: C -> A over h and q2: C -> B over f o h, with q2.tau = tau o q1.tau.
    """
    C = q1.source
    for i in q1.tau:
        if q2.tau[i] != p2.tau[q1.tau[i]]:
            raise ValueError(f"tau does not factor through the product at chart {i}")
    amb = {i: SpaceMap(C.charts[i].ambient, prod.charts[q1.tau[i]].ambient,
                       (lambda a, b: lambda p: (a(p), b(p)))(q1.ambient[i], q2.ambient[i]),
                       check=False) for i in q1.tau}
    alpha = AtlasMorphism(C, prod, q1.map, q1.tau, amb)
    for q, p in ((q1, p1), (q2, p2)):
        comp = p.compose_after(alpha)
        for i, c in enumerate(C.charts):
            if comp.tau[i] != q.tau[i]:
                raise ValueError("factorization does not match tau")
            for x in c.open:
                e = c.embedding(x)
                if comp.ambient[i](e) != q.ambient[i](e):
                    raise ValueError(f"factorization does not commute at {x!r}")
    return alpha


@dataclass
class TripleProduct:
    atlas: Atlas
    alphas: list
    pairs: list
    ok: bool
    diffs: list = field(default_factory=list)


def atlas_triple_product(source, tau1, tau2, target, space_map=None):
    """A x_{tau1 tau2} B with the maps alpha_s to A x_{tau_s} B.

    Checks that p1 o alpha_1 = p1 o alpha_2 and that p2 o alpha_s is the
    projection onto the factor of tau_s.
    """
    X = source.space
    f = space_map or SpaceMap.identity(X)
    n = len(source.charts)
    charts = []
    for i, c in enumerate(source.charts):
        t1, t2 = target.charts[tau1[i]], target.charts[tau2[i]]
        emb = (lambda k, a, b: lambda x: (k(x), a(f(x)), b(f(x))))(c.embedding, t1.embedding,
                                                                     t2.embedding)
        charts.append(EmbeddingTriple(c.space, emb,
                                      ProductPoset([c.ambient, t1.ambient, t2.ambient]),
                                      require_closed=False))
    triple = Atlas(X, charts)
    pairs, alphas = [], []
    for s, tau in ((1, tau1), (2, tau2)):
        prod, p1, p2 = atlas_product(source, tau, target, f)
        amb = {i: SpaceMap(charts[i].ambient, prod.charts[i].ambient,
                           (lambda s: lambda p: (p[0], p[s]))(s), check=False) for i in range(n)}
        alphas.append(AtlasMorphism(triple, prod, SpaceMap.identity(X), {i: i for i in range(n)},
                                    amb))
        pairs.append((prod, p1, p2))
    diffs = []
    a1 = pairs[0][1].compose_after(alphas[0])
    a2 = pairs[1][1].compose_after(alphas[1])
    for i, c in enumerate(charts):
        for x in sorted(c.open):
            e = c.embedding(x)
            if a1.ambient[i](e) != a2.ambient[i](e):
                diffs.append(("first factor", i, x))
            for s, (prod, _, p2) in enumerate(pairs):
                b = p2.compose_after(alphas[s])
                if b.ambient[i](e) != e[s + 1] or b.tau[i] != (tau1, tau2)[s][i]:
                    diffs.append(("second factor", s + 1, i, x))
    return TripleProduct(triple, alphas, pairs, not diffs, diffs)


# ---------------------------------------------------------------------------
# derived zig-zag

def intermediate_atlas(source, target, space_map):
    """Identity charts on cells W_ij = U_i and f^-1 V_j, ordered by (i, j),
    with the morphisms to both atlases.

    A chart U_i that lands inside some V_j keeps the single cell for the
    first such j; any other U_i is split into its maximal nonempty cells.
    """
    X = source.space
    f = space_map
    cells = []
    for i, c in enumerate(source.charts):
        row = [(j, c.open & f.preimage(t.open)) for j, t in enumerate(target.charts)]
        whole = [j for j, w in row if w == c.open]
        if whole:
            cells.append((i, whole[0], c.open))
            continue
        row = [(j, w) for j, w in row if w]
        for j, w in row:
            if not any(w < w2 or (w == w2 and j2 < j) for j2, w2 in row):
                cells.append((i, j, w))
    charts = [EmbeddingTriple.identity(X.subspace(w)) for _, _, w in cells]
    mid = Atlas(X, charts)
    ident = SpaceMap.identity(X)
    p1 = AtlasMorphism(mid, source, ident, {n: i for n, (i, _, _) in enumerate(cells)},
                       {n: SpaceMap(charts[n].ambient, source.charts[i].ambient,
                                    source.charts[i].embedding, check=False)
                        for n, (i, _, _) in enumerate(cells)})
    p2 = AtlasMorphism(mid, target, f, {n: j for n, (_, j, _) in enumerate(cells)},
                       {n: SpaceMap(charts[n].ambient, target.charts[j].ambient,
                                    (lambda k: lambda x: k(f(x)))(target.charts[j].embedding),
                                    check=False)
                        for n, (_, j, _) in enumerate(cells)})
    return mid, p1, p2


class Zigzag:
    """Dolb(A, F) -(left, quasi-iso)-> Dolb(middle, F) <-(right)- Dolb(B, G)."""

    def __init__(self, left, right, middle):
        self.left = left
        self.right = right
        self.middle = middle

    def left_is_quasi_iso(self):
        return self.left.is_quasi_iso()

    def induced_maps(self):
        """H(left)^-1 H(right) in the cohomology() bases of the end complexes."""
        lch = self.left.on_sections(check=False)
        rch = self.right.on_sections(check=False)
        out = {}
        for n in lch.source.degrees():
            a = induced_map(lch, n)
            b = induced_map(rch, n)
            if a.nrows == 0:
                out[n] = M.zeros(a.ncols, b.ncols)
                continue
            out[n] = a.inverse() @ b
        return out


def derived_zigzag(space_map, u, source, target, tau=None, dolb_source=None, dolb_target=None):
    """f*(u) as a zig-zag through a common refinement.

    source: atlas A on X with F = u.target; target: atlas B on Y with
    G = u.source.  With tau (f-compliant) the middle atlas is A x_tau B;
    otherwise identity charts on the cells U_i and f^-1 V_j.
    """
    f = space_map
    F, G = u.target, u.source
    if tau is not None:
        mid, p1, p2 = atlas_product(source, tau, target, f)
    else:
        mid, p1, p2 = intermediate_atlas(source, target, f)
    da = dolb_target or dolb_atlas(source, F)
    db = dolb_source or dolb_atlas(target, G)
    dm = dolb_atlas(mid, F)
    left = pullback_morphism(p1, identity_over(F), da, dm)
    right = pullback_morphism(p2, u, db, dm)
    z = Zigzag(left, right, mid)
    if not z.left_is_quasi_iso():
        raise ValueError("left leg of the zig-zag is not a quasi-isomorphism")
    return z


# ---------------------------------------------------------------------------
# triple composition

@dataclass
class TripleCompositionReport:
    ok: bool
    diffs: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_triple_composition(phi, psi, u, v, w, dolbs=None):
    """h*(w) = g_*(f*(u)) o g*(v) with h = psi o phi, as global matrices.

    phi: (X, A) -> (Y, B) over f, psi: (Y, B) -> (Z, C) over g,
    u: G ~> F over f, v: H ~> G over g, w: H ~> F over g o f.
    """
    f, g = phi.map, psi.map
    diffs = []
    for x in f.source.points:
        if u.stalk(x) @ v.stalk(f(x)) != w.stalk(x):
            diffs.append(("hypothesis", x))
    if diffs:
        return TripleCompositionReport(False, diffs)
    dolbs = dolbs or {}
    da = dolbs.get("A") or dolb_atlas(phi.source, u.target)
    db = dolbs.get("B") or dolb_atlas(psi.source, v.target)
    dc = dolbs.get("C") or dolb_atlas(psi.target, v.source)
    fu = pullback_morphism(phi, u, db, da)
    gv = pullback_morphism(psi, v, dc, db)
    hw = pullback_morphism(psi.compose_after(phi), w, dc, da)
    lhs = fu.compose_after(gv)
    for m in hw.degrees():
        if hw.matrix(m) != lhs.get(m, M.zeros(*hw.matrix(m).shape)):
            diffs.append(("degree", m))
    return TripleCompositionReport(not diffs, diffs)


# ---------------------------------------------------------------------------
# functoriality in the sheaf and the tensor comparison

def dolb_map(source, target, phi):
    """Dolb(A, phi) for phi: F1 -> F2 over the identity: phi at the last
    point of each chain, block by block."""
    comps = {}
    for m in target.degrees():
        s, t = source.term(m), target.term(m)
        ents = []
        for bi, (key, _, _) in enumerate(t.blocks):
            si = s.block_index.get(key)
            if si is None:
                continue
            x = target.chain_of[key][1][-1]
            r0, c0 = t.block_offsets[bi], s.block_offsets[si]
            ents.extend((r0 + i, c0 + k, v) for i, k, v in phi.stalk(x).entries())
        comps[m] = BlockHom(s, t, M.from_entries(t.global_dim, s.global_dim, ents), check=False)
    return comps


def stalkwise_exact(first, second, points, degrees):
    """0 -> A -> B -> C -> 0 exact at every point and degree (homs given per degree)."""
    for m in degrees:
        a, b = first[m], second[m]
        for x in points:
            da, db = a.stalk(x), b.stalk(x)
            na, nb, nc = da.ncols, da.nrows, db.nrows
            if not (db @ da).is_zero():
                return False
            ra, rb = da.rank(), db.rank()
            if ra != na or rb != nc or ra + rb != nb:
                return False
    return True


def tensor_comparison(dolb_const, sheaf):
    """Dolb(A, Q) tensor F -> Dolb(A, F), degree by degree.

    On the block of a chain c the map is the restriction F_x -> F_{last c}.
    Returns (source complex, target DolbComplex, {degree: hom}).
    """
    target = dolb_atlas(dolb_const.atlas, sheaf, dolb_const.triple)
    terms = [tensor_sheaf(t, sheaf) for t in dolb_const.terms]
    diffs = [StalkHom(terms[m], terms[m + 1],
                      {x: d.stalk(x).kron(M.identity(sheaf.dim(x)))
                       for x in sheaf.base.points}, check=False)
             for m, d in enumerate(dolb_const.complex.diffs)]
    source = SheafComplex(terms, diffs, 0, check=False)
    maps = {}
    for m, t in enumerate(dolb_const.terms):
        tt = target.term(m)
        stalks = {}
        for x in sheaf.base.points:
            rows = [tt.blocks[n][2] for n in tt.stalk_blocks(x)]
            cols = [sheaf.dim(x)] * len(t.stalk_blocks(x))
            pos = {tt.blocks[n][0]: k for k, n in enumerate(tt.stalk_blocks(x))}
            grid = {}
            for k, n in enumerate(t.stalk_blocks(x)):
                key = t.blocks[n][0]
                if key in pos:
                    last = dolb_const.chain_of[key][1][-1]
                    grid[pos[key], k] = sheaf.res(x, last)
            stalks[x] = M.block(grid, rows, cols)
        maps[m] = StalkHom(terms[m], tt, stalks, check=False)
    return source, target, maps


def comparison_is_iso(maps):
    return all(h.stalk(x).is_invertible() for h in maps.values()
               for x in h.target.base.points)


def comparison_is_quasi_iso(dolb_const, sheaf):
    """Stalkwise quasi-isomorphism of the tensor comparison (cone acyclic at
    every point)."""
    source, target, maps = tensor_comparison(dolb_const, sheaf)
    for x in sheaf.base.points:
        s = source.stalk_complex(x)
        t = target.complex.stalk_complex(x)
        phi = ChainMap(s, t, {m: h.stalk(x) for m, h in maps.items()})
        if not is_quasi_iso(phi):
            return False
    return True
