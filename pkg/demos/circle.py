# A circle as a four point poset: two "vertices" a, b below two "edges" x, y.
# We resolve the constant sheaf through an atlas where one chart is embedded
# in a bigger ambient poset, and compare with the bar and Cech routes.
from ssdolb.dolbeault import Atlas, EmbeddingTriple, dolb_atlas, dolb_atlas_direct
from ssdolb.poset import PosetSpace, bar_cohomology, constant_sheaf
from ssdolb.sharp import cech_cochains

X = PosetSpace("abxy", [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])
U0, U1 = frozenset("axy"), frozenset("bxy")
Q = constant_sheaf(X)

# chart 0 sits inside D = U0 plus a point t above x; its image is down-closed
D = PosetSpace("axyt", [("a", "x"), ("a", "y"), ("x", "t")])
atlas = Atlas(X, [EmbeddingTriple(X.subspace(U0), {p: p for p in "axy"}, D),
                  EmbeddingTriple.identity(X.subspace(U1))])

dolb = dolb_atlas(atlas, Q)
print("term dimensions (global blocks):", [t.global_dim for t in dolb.terms])
print("cohomology via the atlas      :", dolb.cohomology())
print("cohomology via the bar complex:", bar_cohomology(X, Q))
print("Cech cohomology of {U0, U1}   :", cech_cochains(X, [U0, U1], Q).betti())

# the complex is an honest resolution: exact at every stalk
print("stalkwise resolution:", dolb.is_stalkwise_resolution())

# each chart sees only its own sections in degree 0
for u in (U0, U1):
    print(sorted(u), "local cohomology:", dolb.cohomology(u))

# the direct block-by-block construction gives the same matrices
print("direct construction agrees:", dolb.data() == dolb_atlas_direct(atlas, Q).data())

# a single chart on the whole space reproduces the bar resolution
one = dolb_atlas(Atlas.single(X), Q)
print("one-chart term dimensions:", [t.global_dim for t in one.terms])
