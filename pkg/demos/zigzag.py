# Changing the atlas does not change the answer.  Two atlases of one random
# space are compared by pulling back along a refinement, and by the zig-zag
# through a common refinement, for two different choices of chart matching.
from ssdolb.dolbeault import derived_zigzag, identity_over, pullback_morphism
from ssdolb.poset import SpaceMap
from ssdolb.random_gen import (
    random_atlas, random_cover, random_natural_map, random_poset, random_sheaf,
    retraction_morphism, rng_for,
)

rng = rng_for(3)
X = random_poset(rng, points=9)
cover = random_cover(rng, X)
fine = random_atlas(rng, X, cover)
coarse = random_atlas(rng, X, list(reversed(cover)) + [frozenset(X.points)])
F = random_sheaf(rng, X)
n = len(cover)
print(f"{len(X)} points, fine atlas {len(fine)} charts, coarse atlas {len(coarse)} charts")

ident = SpaceMap.identity(X)
tau_a = {i: n - 1 - i for i in range(n)}   # each chart into its mirror
tau_b = {i: n for i in range(n)}           # everything into the global chart

for name, tau in (("mirror", tau_a), ("global", tau_b)):
    pb = pullback_morphism(retraction_morphism(fine, coarse, ident, tau), identity_over(F))
    print(f"pullback along {name} tau: chain map, quasi-iso = {pb.is_quasi_iso()}")

# a random endomorphism u of F, seen on cohomology through both zig-zags
u = random_natural_map(rng, F, F)
za = derived_zigzag(ident, u, fine, coarse, tau=tau_a).induced_maps()
zb = derived_zigzag(ident, u, fine, coarse, tau=tau_b).induced_maps()
for deg in sorted(za):
    if za[deg].nrows == 0:
        continue
    print(f"H^{deg}:", za[deg].to_strings(), "same for both tau:", za[deg] == zb[deg])
