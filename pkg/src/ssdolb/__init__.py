"""Exact resolutions of sheaves on finite posets from embedding atlases,
built through semi-simplicial systems and the sharp pushforward."""

from .dolbeault import (
    Atlas, AtlasMorphism, EmbeddingTriple, associated_ss_triple, atlas_product,
    check_triple_composition, derived_zigzag, dolb_atlas, dolb_chart, pullback_morphism,
)
from .linalg import CochainComplex, RationalMatrix, cohomology, is_quasi_iso
from .poset import PosetSpace, SheafRep, bar_cohomology, flasque_bar_resolution
from .sharp import SSMapOverF, check_composition_law, sharp, star_pushforward
from .ss import SSModule, SSSpace, alt, alt_inv

__version__ = "0.1.0"
