"""Simplicial complexes (I, S), ordered faces, signs and nerves.

A simplex is a strictly increasing tuple of integer vertices.  Vertex order
is integer order, and |alpha| means the number of vertices minus one.
"""

from itertools import combinations


def as_simplex(vertices):
    s = tuple(sorted(set(int(v) for v in vertices)))
    if not s:
        raise ValueError("the empty set is not a simplex")
    return s


def length(alpha):
    return len(alpha) - 1


def face(alpha, j):
    """Remove the j-th vertex (0-based, increasing order)."""
    if len(alpha) < 2:
        raise ValueError(f"{alpha} has no faces: removing a vertex would leave the empty set")
    if not 0 <= j < len(alpha):
        raise IndexError(f"face index {j} out of range for {alpha}")
    return alpha[:j] + alpha[j + 1:]


def double_face(alpha, j, k):
    """Remove the j-th and k-th vertices (j < k) simultaneously."""
    if not 0 <= j < k < len(alpha):
        raise IndexError(f"need 0 <= j < k <= |alpha|, got {j}, {k} for {alpha}")
    return tuple(v for n, v in enumerate(alpha) if n not in (j, k))


def sign(alpha, j):
    if not 0 <= j < len(alpha):
        raise IndexError(f"sign index {j} out of range for {alpha}")
    return -1 if j % 2 else 1


class SimplicialComplex:
    """A finite vertex set with a subset-closed family of nonempty simplexes."""

    def __init__(self, vertices, simplexes=()):
        self.vertices = tuple(sorted(set(int(v) for v in vertices)))
        vset = set(self.vertices)
        closed = {(v,) for v in self.vertices}
        for s in simplexes:
            s = tuple(s)
            if not s:
                raise ValueError("empty simplex supplied")
            s = as_simplex(s)
            bad = [v for v in s if v not in vset]
            if bad:
                raise ValueError(f"simplex {s} uses vertices {bad} outside the vertex set")
            for r in range(1, len(s) + 1):
                closed.update(combinations(s, r))
        self.simplexes = tuple(sorted(closed, key=lambda a: (len(a), a)))
        self._set = frozenset(self.simplexes)

    def __contains__(self, alpha):
        return tuple(alpha) in self._set

    def __iter__(self):
        return iter(self.simplexes)

    def __len__(self):
        return len(self.simplexes)

    @property
    def dim(self):
        return max((len(a) - 1 for a in self.simplexes), default=-1)

    def of_length(self, n):
        return [a for a in self.simplexes if len(a) == n + 1]

    def cofaces(self, alpha):
        """Simplexes beta with face(beta, j) == alpha, as (beta, j) pairs."""
        out = []
        for v in self.vertices:
            if v in alpha:
                continue
            beta = tuple(sorted(alpha + (v,)))
            if beta in self._set:
                out.append((beta, beta.index(v)))
        return out

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and \
            (self.vertices, self.simplexes) == (other.vertices, other.simplexes)

    def __hash__(self):
        return hash((self.vertices, self.simplexes))

    def __repr__(self):
        return f"SimplicialComplex(vertices={list(self.vertices)}, dim={self.dim}, size={len(self)})"


def build_complex(vertices, simplexes=()):
    return SimplicialComplex(vertices, simplexes)


def point_complex():
    """K(pt): one vertex, one simplex."""
    return SimplicialComplex([0], [(0,)])


def full_simplex(n):
    return SimplicialComplex(range(n + 1), [tuple(range(n + 1))])


def nerve(space, cover):
    """Nerve of a cover by open sets; vertices are cover positions."""
    cover = [frozenset(u) for u in cover]
    for k, u in enumerate(cover):
        if not space.is_open(u):
            raise ValueError(f"cover member {k} is not open: {sorted(u)}")
    covered = frozenset().union(*cover) if cover else frozenset()
    missing = set(space.points) - covered
    if missing:
        raise ValueError(f"cover misses points {sorted(missing)}")
    simplexes = []
    n = len(cover)

    def grow(alpha, inter):
        simplexes.append(alpha)
        for v in range(alpha[-1] + 1, n):
            nxt = inter & cover[v]
            if nxt:
                grow(alpha + (v,), nxt)

    for v in range(n):
        grow((v,), cover[v])
    return SimplicialComplex(range(n), simplexes)


class SimplicialMorphism:
    """Vertex map f: I -> J carrying simplexes to simplexes."""

    def __init__(self, source, target, vertex_map):
        self.source = source
        self.target = target
        self.map = {int(i): int(vertex_map[i]) for i in source.vertices}
        for a in source:
            if self(a) not in target:
                raise ValueError(f"image of {a} is {self(a)}, not a simplex of the target")

    def __call__(self, alpha):
        return tuple(sorted({self.map[v] for v in alpha}))

    def is_non_decreasing(self):
        vs = self.source.vertices
        return all(self.map[a] <= self.map[b] for a, b in zip(vs, vs[1:]))

    def require_non_decreasing(self):
        if not self.is_non_decreasing():
            raise ValueError(f"vertex map {self.map} is not non-decreasing; "
                             "relabel the source with reindex_to_monotone first")

    def compose_after(self, other):
        """self o other."""
        return SimplicialMorphism(other.source, self.target,
                                  {i: self.map[other.map[i]] for i in other.source.vertices})

    @classmethod
    def identity(cls, k):
        return cls(k, k, {v: v for v in k.vertices})

    @classmethod
    def to_point(cls, k):
        return cls(k, point_complex(), {v: 0 for v in k.vertices})

    def __eq__(self, other):
        return isinstance(other, SimplicialMorphism) and self.source == other.source \
            and self.target == other.target and self.map == other.map

    def __hash__(self):
        return hash(tuple(sorted(self.map.items())))


def fiber_simplexes(f, gamma, i):
    """I(gamma, i): simplexes alpha with f(alpha) = gamma and |alpha| = |gamma| + i."""
    gamma = tuple(gamma)
    if gamma not in f.target:
        raise ValueError(f"{gamma} is not a simplex of the target")
    n = len(gamma) + i
    return [a for a in f.source.simplexes if len(a) == n and f(a) == gamma]


def reindex_to_monotone(f):
    """Relabel the source so that f becomes non-decreasing.

    Returns (g, perm) where perm maps old source vertices to new ones and g
    is the relabelled morphism.  Ties keep their original relative order.
    """
    old = sorted(f.source.vertices, key=lambda v: (f.map[v], v))
    perm = {v: k for k, v in enumerate(old)}
    src = SimplicialComplex(range(len(old)),
                            [tuple(sorted(perm[v] for v in a)) for a in f.source])
    g = SimplicialMorphism(src, f.target, {perm[v]: f.map[v] for v in old})
    return g, perm


def permutation_sign(seq):
    """Sign of the permutation sorting a sequence of distinct values."""
    seq = list(seq)
    s = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                s = -s
    return s
