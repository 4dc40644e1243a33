# Dolb(Q) tensor F -> Dolb(F) in the finite model.  For a locally constant
# sheaf the comparison is an isomorphism term by term.  For a sheaf that
# jumps (an extension by zero) the terms differ in size, yet the map is
# still a quasi-isomorphism at every stalk.
from ssdolb.dolbeault import (
    Atlas, comparison_is_iso, comparison_is_quasi_iso, dolb_atlas, tensor_comparison,
)
from ssdolb.poset import PosetSpace, constant_sheaf, open_indicator_sheaf

X = PosetSpace("abxy", [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])
atlas = Atlas.identity_charts(X, [frozenset("axy"), frozenset("bxy")])
const = dolb_atlas(atlas, constant_sheaf(X))

for name, F in (("Q^2", constant_sheaf(X, 2)),
                ("Q on {x, y}", open_indicator_sheaf(X, frozenset("xy")))):
    source, target, maps = tensor_comparison(const, F)
    print(name)
    print("  source stalk dims at a:", [t.dim("a") for t in source.terms])
    print("  target stalk dims at a:", [t.dim("a") for t in target.terms])
    print("  degreewise iso:", comparison_is_iso(maps),
          " stalkwise quasi-iso:", comparison_is_quasi_iso(const, F))
