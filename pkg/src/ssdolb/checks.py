"""Registry of scenario checks.

Each check takes (scenario, entry, seed) and returns a CheckResult.  entry is
the check's dict from the scenario file; it may narrow the run to one sheaf,
cover or atlas and may carry an expected cohomology table.
"""

from dataclasses import dataclass, field
from itertools import combinations

from .dolbeault import (
    Atlas, AtlasMorphism, atlas_product, check_triple_composition, comparison_is_iso,
    comparison_is_quasi_iso, derived_zigzag, dolb_atlas, dolb_atlas_direct, dolb_map,
    identity_over, pullback_morphism, stalkwise_exact, tensor_comparison,
)
from .linalg import RationalMatrix
from .poset import (
    POINT, SpaceMap, StalkHom, bar_cohomology, constant_sheaf, flasque_bar_resolution,
)
from .random_gen import random_natural_map, random_ses, random_tower, rng_for
from .sharp import (
    cech_cochains, cech_complex, check_composition_law, collapse_map, cover_inclusion,
    refinement_map, sharp_complex,
)
from .simplicial import double_face, face
from .ss import DiagramError, alt, alt_inv, cover_system, restrict_to_cover

M = RationalMatrix


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    tables: dict = field(default_factory=dict)
    diff: list = field(default_factory=list)

    def as_json(self):
        out = {"name": self.name, "status": "pass" if self.passed else "fail",
               "summary": self.summary}
        if self.tables:
            out["tables"] = self.tables
        if self.diff:
            out["diff"] = self.diff
        return out


def trim(h):
    h = list(h)
    while h and h[-1] == 0:
        h.pop()
    return h


def _sheaves(sc, entry):
    if "sheaf" in entry:
        return {entry["sheaf"]: sc.sheaves[entry["sheaf"]]}
    return dict(sc.sheaves)


def _covers(sc, entry):
    if "cover" in entry:
        return {entry["cover"]: sc.covers[entry["cover"]]}
    return dict(sc.covers)


def _atlases(sc, entry):
    """Named atlases, identity-chart atlases of the covers, else one chart."""
    if "atlas" in entry:
        return {entry["atlas"]: sc.atlases[entry["atlas"]]}
    out = dict(sc.atlases)
    for k, c in sc.covers.items():
        out[f"cover:{k}"] = Atlas.identity_charts(sc.space, c)
    if not out:
        out["single"] = Atlas.single(sc.space)
    return out


class _Cache:
    """Dolb complexes shared between the checks of one run."""

    def __init__(self):
        self.dolb = {}

    def get(self, aname, atlas, fname, sheaf):
        key = (aname, fname)
        if key not in self.dolb:
            self.dolb[key] = dolb_atlas(atlas, sheaf)
        return self.dolb[key]


# ---------------------------------------------------------------------------
# the checks

def check_cohomology(sc, entry, seed, cache):
    tables, diff = {}, []
    expect = entry.get("expect")
    for fname, f in _sheaves(sc, entry).items():
        row = {"bar": trim(bar_cohomology(sc.space, f))}
        for cname, c in _covers(sc, entry).items():
            row[f"cech:{cname}"] = trim(cech_cochains(sc.space, c, f).betti())
        for aname, a in _atlases(sc, entry).items():
            row[f"dolb:{aname}"] = trim(cache.get(aname, a, fname, f).cohomology())
        tables[fname] = row
        ref = row["bar"]
        for k, v in row.items():
            if v != ref:
                diff.append(f"{fname}: {k} gives {v}, bar gives {ref}")
        if expect is not None and ref != trim(expect):
            diff.append(f"{fname}: expected {trim(expect)}, got {ref}")
    return CheckResult("cohomology", not diff, "all pipelines agree" if not diff else
                       f"{len(diff)} disagreements", {"cohomology": tables}, diff)


def check_resolution(sc, entry, seed, cache):
    diff = []
    for fname, f in _sheaves(sc, entry).items():
        for aname, a in _atlases(sc, entry).items():
            d = cache.get(aname, a, fname, f)
            tag = f"{aname}/{fname}"
            d.check_d_squared()
            if not d.is_stalkwise_resolution():
                diff.append(f"{tag}: augmentation is not stalkwise exact")
            for j, u in enumerate(a.cover):
                if not d.augmentation_is_quasi_iso(u):
                    diff.append(f"{tag}: augmentation over chart {j} is not a quasi-isomorphism")
            if trim(d.cohomology()) != trim(bar_cohomology(sc.space, f)):
                diff.append(f"{tag}: global cohomology differs from the bar oracle")
            if d.data() != dolb_atlas_direct(a, f).data():
                diff.append(f"{tag}: assembled complex differs from the direct construction")
    return CheckResult("resolution", not diff, "augmentation resolves every sheaf"
                       if not diff else "resolution failures", diff=diff)


def check_local_e2(sc, entry, seed, cache):
    diff, tables = [], {}
    for fname, f in _sheaves(sc, entry).items():
        for aname, a in _atlases(sc, entry).items():
            d = cache.get(aname, a, fname, f)
            for j, u in enumerate(a.cover):
                h = trim(d.cohomology(u))
                want = trim([f.sections(u).dim])
                tables[f"{aname}/{fname}/chart{j}"] = h
                if h != want:
                    diff.append(f"{aname}/{fname}: chart {j} has cohomology {h}, expected {want}")
    return CheckResult("local_e2", not diff, "chart-local cohomology sits in degree 0"
                       if not diff else "chart-local cohomology not concentrated",
                       {"local": tables}, diff)


def check_cech(sc, entry, seed, cache):
    diff = []
    for fname, f in _sheaves(sc, entry).items():
        for cname, c in _covers(sc, entry).items():
            mod = restrict_to_cover(sc.space, c, f)
            pushed = sharp_complex(cover_inclusion(mod.space), alt(mod), check=False).comp((0,))
            direct = cech_complex(sc.space, c, f)
            tag = f"{cname}/{fname}"
            if len(pushed.terms) < len(direct.terms):
                diff.append(f"{tag}: too few terms")
                continue
            for m, t in enumerate(direct.terms):
                if pushed.term(m).data() != t.data():
                    diff.append(f"{tag}: term {m} differs from the Cech sheaf")
            for m, dd in enumerate(direct.diffs):
                if any(pushed.d(m).stalk(x) != dd.stalk(x) for x in sc.space.points):
                    diff.append(f"{tag}: differential {m} differs from the Cech differential")
            if trim(pushed.sections_complex().betti()) != \
                    trim(cech_cochains(sc.space, c, f).betti()):
                diff.append(f"{tag}: cohomology differs from the global Cech complex")
    return CheckResult("cech", not diff, "F-sharp of the cover inclusion is the Cech complex"
                       if not diff else "Cech identification fails", diff=diff)


def check_composition(sc, entry, seed, cache):
    diff = []
    X = sc.space
    for fname, f in _sheaves(sc, entry).items():
        for cname, c in _covers(sc, entry).items():
            mod = restrict_to_cover(X, c, f)
            i = cover_inclusion(mod.space)
            col = collapse_map(i.target)
            rep = check_composition_law(i, col, mod)
            if not rep:
                diff.extend(f"{cname}/{fname}: {d}" for d in rep.diffs)
            total = sharp_complex(col.compose_after(i), alt(mod), check=False).comp((0,))
            cx = total.stalk_complex(0)
            ref = cech_cochains(X, c, f)
            if trim(cx.dims) != trim(ref.dims) or \
                    any(cx.d(m) != ref.d(m) for m in range(len(ref.diffs))):
                diff.append(f"{cname}/{fname}: composite is not the global Cech complex")
        rng = rng_for(seed)
        fine, mid, coarse, tf, tm = random_tower(rng, X)
        U, V, W = (cover_system(X, cv) for cv in (fine, mid, coarse))
        rep = check_composition_law(refinement_map(U, V, tf), refinement_map(V, W, tm),
                                    restrict_to_cover(X, fine, f))
        if not rep:
            diff.extend(f"tower/{fname}: {d}" for d in rep.diffs)
    return CheckResult("composition_law", not diff, "(G o F)-sharp = G-sharp F-sharp"
                       if not diff else "composition law fails", diff=diff)


def check_exactness(sc, entry, seed, cache):
    diff = []
    rng = rng_for(seed)
    f1, f2, f3, i, p = random_ses(rng, sc.space)
    for aname, a in _atlases(sc, entry).items():
        d1, d2, d3 = (dolb_atlas(a, f) for f in (f1, f2, f3))
        mi, mp = dolb_map(d1, d2, i), dolb_map(d2, d3, p)
        if not stalkwise_exact(mi, mp, sc.space.points, d2.degrees()):
            diff.append(f"{aname}: induced sequence is not stalkwise exact")
    return CheckResult("exactness", not diff, "Dolb preserves a random short exact sequence"
                       if not diff else "exactness fails", diff=diff)


def _refinements(a, b):
    """All tau with U_i inside V_tau(i), capped to a few."""
    out = [{}]
    for i, u in enumerate(a.cover):
        opts = [j for j, v in enumerate(b.cover) if u <= v]
        out = [{**t, i: j} for t in out for j in opts][:8]
    return out


def check_zigzag(sc, entry, seed, cache):
    diff, tables = [], {}
    X = sc.space
    ident = SpaceMap.identity(X)
    atl = _atlases(sc, entry)
    atl.setdefault("single", Atlas.single(X))
    for fname, f in _sheaves(sc, entry).items():
        u = identity_over(f)
        for an, a in atl.items():
            for bn, b in atl.items():
                if an == bn and an != "single":
                    continue
                da, db = cache.get(an, a, fname, f), cache.get(bn, b, fname, f)
                ref = derived_zigzag(ident, u, a, b, dolb_source=db, dolb_target=da)
                maps = ref.induced_maps()
                ok = all(m.nrows == m.ncols and (m.nrows == 0 or m.is_invertible())
                         for m in maps.values())
                if not ok:
                    diff.append(f"{an}<-{bn}/{fname}: induced map is not invertible")
                for tau in _refinements(a, b):
                    z = derived_zigzag(ident, u, a, b, tau=tau, dolb_source=db, dolb_target=da)
                    if z.induced_maps() != maps:
                        diff.append(f"{an}<-{bn}/{fname}: tau {tau} induces a different map")
                tables[f"{an}<-{bn}/{fname}"] = {str(n): m.to_strings() for n, m in maps.items()
                                                 if m.nrows}
    return CheckResult("zigzag", not diff, "zig-zags are quasi-isomorphisms, independent of tau"
                       if not diff else "zig-zag failures", {"induced": tables}, diff)


def check_triple(sc, entry, seed, cache):
    diff = []
    X = sc.space
    rng = rng_for(seed)
    single = Atlas.single(X)
    pt = Atlas.single(POINT)
    collapse = SpaceMap.to_point(X)
    for fname, f in _sheaves(sc, entry).items():
        for an, a in _atlases(sc, entry).items():
            prod, p1, p2 = atlas_product(a, {i: 0 for i in range(len(a.charts))}, single)
            to_pt = {name: AtlasMorphism(t, pt, collapse, {i: 0 for i in range(len(t.charts))},
                                         {i: SpaceMap(c.ambient, POINT, lambda p: 0, check=False)
                                          for i, c in enumerate(t.charts)})
                     for name, t in (("A", a), ("X", single))}
            hsheaf = constant_sheaf(POINT, f.sections(frozenset(X.points)).dim)
            for phi, psi in ((p1, to_pt["A"]), (p2, to_pt["X"])):
                u = random_natural_map(rng, f, f)
                v = random_natural_map(rng, hsheaf, f, over=collapse)
                w = StalkHom(hsheaf, f, {x: u.stalk(x) @ v.stalk(x) for x in X.points},
                             over=collapse, check=False)
                rep = check_triple_composition(phi, psi, u, v, w)
                if not rep:
                    diff.append(f"{an}/{fname}: {rep.diffs}")
    return CheckResult("triple_composition", not diff, "h*(w) = g_*(f*(u)) o g*(v)"
                       if not diff else "triple composition fails", diff=diff)


def check_tensor(sc, entry, seed, cache):
    diff, notes = [], []
    for an, a in _atlases(sc, entry).items():
        const = dolb_atlas(a, constant_sheaf(sc.space))
        for fname, f in _sheaves(sc, entry).items():
            _, _, maps = tensor_comparison(const, f)
            if not comparison_is_iso(maps):
                diff.append(f"{an}/{fname}: comparison map is not an isomorphism")
            if not comparison_is_quasi_iso(const, f):
                diff.append(f"{an}/{fname}: comparison map is not a quasi-isomorphism")
    return CheckResult("tensor_comparison", not diff, "Dolb(Q) tensor F -> Dolb(F) is an iso"
                       if not diff else "comparison is not an isomorphism", diff=diff)


def check_signs(sc, entry, seed, cache):
    diff = []
    for n in range(2, 5):
        for alpha in combinations(range(6), n + 1):
            for j in range(n + 1):
                for k in range(j + 1, n + 1):
                    a = double_face(alpha, j, k)
                    if not a == face(face(alpha, k), j) == face(face(alpha, j), k - 1):
                        diff.append(f"double face identity fails for {alpha}, {j}, {k}")
    for fname, f in sc.sheaves.items():
        for cname, c in sc.covers.items():
            mod = restrict_to_cover(sc.space, c, f)
            if not alt_inv(alt(mod)).same_data(mod):
                diff.append(f"{cname}/{fname}: alt_inv o alt is not the identity")
    for (an, fname), d in cache.dolb.items():
        try:
            d.check_d_squared()
        except ValueError as e:
            diff.append(f"{an}/{fname}: {e}")
    return CheckResult("sign_discipline", not diff, "signs consistent" if not diff
                       else "sign failures", diff=diff)


def check_modules(sc, entry, seed, cache):
    diff = []
    for name, m in sc.modules.items():
        try:
            m.validate()
        except DiagramError as e:
            diff.append(f"module {name!r}: {e}")
    return CheckResult("ss_module", not diff, f"{len(sc.modules)} modules valid" if not diff
                       else "module diagrams fail", diff=diff)


def _shape(t):
    return [(a, d) for _, a, d in t.blocks]


def check_degenerations(sc, entry, seed, cache):
    diff = []
    X = sc.space
    for fname, f in _sheaves(sc, entry).items():
        one = cache.get("single", Atlas.single(X), fname, f)
        bar = flasque_bar_resolution(X, f).complex
        same = [_shape(t) for t in one.terms] == [_shape(t) for t in bar.terms] and \
            [d.matrix for d in one.complex.diffs] == [d.matrix for d in bar.diffs]
        if not same:
            diff.append(f"{fname}: one-chart complex differs from the bar resolution")
        for an, a in _atlases(sc, entry).items():
            d = cache.get(an, a, fname, f)
            ident = AtlasMorphism.identity(a)
            pb = pullback_morphism(ident, identity_over(f), d, d)
            for m in pb.degrees():
                if pb.matrix(m) != M.identity(d.term(m).global_dim):
                    diff.append(f"{an}/{fname}: identity pullback is not the identity in degree {m}")
    return CheckResult("degenerations", not diff, "one-chart and identity cases degenerate"
                       if not diff else "degeneration failures", diff=diff)


REGISTRY = {
    "cohomology": (check_cohomology, "bar, Cech and Dolb cohomology agree"),
    "resolution": (check_resolution, "augmentation is a resolution on stalks and charts"),
    "local_e2": (check_local_e2, "chart-restricted complexes have cohomology in degree 0"),
    "cech": (check_cech, "F-sharp of the cover inclusion equals the Cech complex"),
    "composition_law": (check_composition, "(G o F)-sharp equals G-sharp F-sharp"),
    "exactness": (check_exactness, "Dolb is exact on a random short exact sequence"),
    "zigzag": (check_zigzag, "zig-zag legs and tau independence"),
    "triple_composition": (check_triple, "pullbacks compose along towers"),
    "tensor_comparison": (check_tensor, "Dolb(Q) tensor F -> Dolb(F) isomorphism"),
    "sign_discipline": (check_signs, "face identities, alt round trip, d o d = 0"),
    "ss_module": (check_modules, "declared modules satisfy their diagrams"),
    "degenerations": (check_degenerations, "one-chart and identity degenerations"),
}


def run_checks(sc, names=None, seed=None):
    """Run the scenario's checks (or the given names) in registry order of
    appearance; returns a list of CheckResult."""
    seed = sc.seed if seed is None else seed
    entries = sc.checks or [{"name": n} for n in REGISTRY]
    if names:
        wanted = set(names)
        entries = [e for e in entries if e["name"] in wanted] + \
            [{"name": n} for n in names if n not in {e["name"] for e in entries}]
    cache = _Cache()
    out = []
    for e in entries:
        fn = REGISTRY[e["name"]][0]
        try:
            out.append(fn(sc, e, seed, cache))
        except DiagramError as err:
            out.append(CheckResult(e["name"], False, "diagram failure", diff=[str(err)]))
    return out
