"""Exact rational linear algebra and cochain complexes.

Matrices are stored sparsely (row -> {col: value}) with gmpy2 rationals as
scalars.  Nothing in here ever touches a binary floating point number.
"""

from collections import defaultdict
from fractions import Fraction
from itertools import product

from gmpy2 import mpq

Q = mpq
_ZERO = mpq(0)
_ONE = mpq(1)


def to_q(x):
    """Convert int / Fraction / mpq / "p/q" string to an exact rational."""
    if isinstance(x, bool):
        return mpq(int(x))
    if type(x) is type(_ZERO):
        return x
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not s or any(ch in s for ch in ".eE"):
            raise ValueError(f"not an exact rational literal: {x!r}")
        if "/" in s:
            p, q = s.split("/")
            return mpq(int(p), int(q))
        return mpq(int(s))
    raise TypeError(f"refusing inexact or unknown scalar {x!r} of type {type(x).__name__}")


def q_str(x):
    x = to_q(x)
    if x.denominator == 1:
        return str(int(x.numerator))
    return f"{int(x.numerator)}/{int(x.denominator)}"


class RationalMatrix:
    """Immutable exact matrix.  Zero entries are not stored."""

    __slots__ = ("nrows", "ncols", "_rows")

    def __init__(self, nrows, ncols, rows=None):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self._rows = rows if rows is not None else {}

    # construction -------------------------------------------------------
    @classmethod
    def from_rows(cls, rows, ncols=None):
        rows = [list(r) for r in rows]
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        data = {}
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise ValueError("ragged matrix rows")
            d = {}
            for j, v in enumerate(r):
                v = to_q(v)
                if v:
                    d[j] = v
            if d:
                data[i] = d
        return cls(len(rows), ncols, data)

    @classmethod
    def from_entries(cls, nrows, ncols, entries):
        """entries: iterable of (i, j, value); repeated positions are summed."""
        data = defaultdict(dict)
        for i, j, v in entries:
            if not (0 <= i < nrows and 0 <= j < ncols):
                raise IndexError(f"entry ({i},{j}) outside {nrows}x{ncols}")
            v = to_q(v)
            if not v:
                continue
            row = data[i]
            w = row.get(j, _ZERO) + v
            if w:
                row[j] = w
            else:
                row.pop(j, None)
        return cls(nrows, ncols, {i: r for i, r in data.items() if r})

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, {})

    @classmethod
    def identity(cls, n):
        return cls(n, n, {i: {i: _ONE} for i in range(n)})

    @classmethod
    def selection(cls, picks, ncols):
        """Row k is the unit vector e_{picks[k]}."""
        return cls(len(picks), ncols, {k: {p: _ONE} for k, p in enumerate(picks)})

    # access -------------------------------------------------------------
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self._rows.get(i, {}).get(j, _ZERO)

    def row(self, i):
        return dict(self._rows.get(i, {}))

    def entries(self):
        for i in sorted(self._rows):
            r = self._rows[i]
            for j in sorted(r):
                yield i, j, r[j]

    @property
    def nnz(self):
        return sum(len(r) for r in self._rows.values())

    def to_lists(self):
        out = [[_ZERO] * self.ncols for _ in range(self.nrows)]
        for i, r in self._rows.items():
            for j, v in r.items():
                out[i][j] = v
        return out

    def to_strings(self):
        return [[q_str(v) for v in r] for r in self.to_lists()]

    def is_zero(self):
        return not self._rows

    def __repr__(self):
        if self.nrows * self.ncols <= 36:
            body = "; ".join(" ".join(q_str(v) for v in r) for r in self.to_lists())
            return f"RationalMatrix({self.nrows}x{self.ncols}: [{body}])"
        return f"RationalMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    __hash__ = None

    # arithmetic ---------------------------------------------------------
    def _check_same(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other):
        self._check_same(other)
        data = {i: dict(r) for i, r in self._rows.items()}
        for i, r in other._rows.items():
            row = data.setdefault(i, {})
            for j, v in r.items():
                w = row.get(j, _ZERO) + v
                if w:
                    row[j] = w
                else:
                    del row[j]
            if not row:
                del data[i]
        return RationalMatrix(self.nrows, self.ncols, data)

    def __neg__(self):
        return RationalMatrix(self.nrows, self.ncols,
                              {i: {j: -v for j, v in r.items()} for i, r in self._rows.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = to_q(c)
        if not c:
            return RationalMatrix.zeros(self.nrows, self.ncols)
        return RationalMatrix(self.nrows, self.ncols,
                              {i: {j: c * v for j, v in r.items()} for i, r in self._rows.items()})

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        orows = other._rows
        data = {}
        for i, r in self._rows.items():
            acc = {}
            for k, a in r.items():
                rk = orows.get(k)
                if rk is None:
                    continue
                for j, b in rk.items():
                    acc[j] = acc.get(j, _ZERO) + a * b
            acc = {j: v for j, v in acc.items() if v}
            if acc:
                data[i] = acc
        return RationalMatrix(self.nrows, other.ncols, data)

    def apply(self, vec):
        """Matrix times a dense vector (list of rationals)."""
        out = [_ZERO] * self.nrows
        for i, r in self._rows.items():
            s = _ZERO
            for j, v in r.items():
                if vec[j]:
                    s += v * vec[j]
            out[i] = s
        return out

    @property
    def T(self):
        data = defaultdict(dict)
        for i, r in self._rows.items():
            for j, v in r.items():
                data[j][i] = v
        return RationalMatrix(self.ncols, self.nrows, dict(data))

    def submatrix(self, rows, cols):
        rows = list(rows)
        cpos = {c: k for k, c in enumerate(cols)}
        ncols = len(cpos)
        data = {}
        for k, i in enumerate(rows):
            r = self._rows.get(i)
            if not r:
                continue
            if len(r) < ncols:
                d = {cpos[j]: v for j, v in r.items() if j in cpos}
            else:
                d = {cpos[j]: r[j] for j in cpos if j in r}
            if d:
                data[k] = d
        return RationalMatrix(len(rows), ncols, data)

    def column(self, j):
        return [self[i, j] for i in range(self.nrows)]

    # assembly -----------------------------------------------------------
    @staticmethod
    def block(grid, row_sizes, col_sizes):
        """Assemble from a dict {(bi, bj): matrix}; missing blocks are zero."""
        roff = [0]
        for s in row_sizes:
            roff.append(roff[-1] + s)
        coff = [0]
        for s in col_sizes:
            coff.append(coff[-1] + s)
        data = defaultdict(dict)
        for (bi, bj), m in grid.items():
            if m is None:
                continue
            if m.shape != (row_sizes[bi], col_sizes[bj]):
                raise ValueError(f"block {(bi, bj)} has shape {m.shape}, "
                                 f"expected {(row_sizes[bi], col_sizes[bj])}")
            r0, c0 = roff[bi], coff[bj]
            for i, r in m._rows.items():
                row = data[r0 + i]
                for j, v in r.items():
                    row[c0 + j] = v
        return RationalMatrix(roff[-1], coff[-1], dict(data))

    @staticmethod
    def hstack(mats, nrows=None):
        mats = list(mats)
        if not mats:
            return RationalMatrix.zeros(nrows or 0, 0)
        return RationalMatrix.block({(0, k): m for k, m in enumerate(mats)},
                                    [mats[0].nrows], [m.ncols for m in mats])

    @staticmethod
    def vstack(mats, ncols=None):
        mats = list(mats)
        if not mats:
            return RationalMatrix.zeros(0, ncols or 0)
        return RationalMatrix.block({(k, 0): m for k, m in enumerate(mats)},
                                    [m.nrows for m in mats], [mats[0].ncols])

    @staticmethod
    def block_diag(mats):
        mats = list(mats)
        return RationalMatrix.block({(k, k): m for k, m in enumerate(mats)},
                                    [m.nrows for m in mats], [m.ncols for m in mats])

    def kron(self, other):
        data = {}
        for i, r in self._rows.items():
            for k in range(other.nrows):
                ork = other._rows.get(k)
                if not ork:
                    continue
                d = {}
                for j, a in r.items():
                    for l, b in ork.items():
                        d[j * other.ncols + l] = a * b
                data[i * other.nrows + k] = d
        return RationalMatrix(self.nrows * other.nrows, self.ncols * other.ncols, data)

    # elimination --------------------------------------------------------
    def rank(self):
        return _markowitz_rank(self)

    def rref(self):
        """Reduced row echelon form; returns (R, pivot_columns)."""
        rows, pivots = _eliminate(self, full=True)
        data = {k: rows[pivots[c]] for k, c in enumerate(sorted(pivots))}
        return RationalMatrix(self.nrows, self.ncols, data), sorted(pivots)

    def kernel(self):
        """Columns form the canonical (RREF) basis of the null space."""
        rows, pivots = _eliminate(self, full=True)
        free = [c for c in range(self.ncols) if c not in pivots]
        fpos = {f: k for k, f in enumerate(free)}
        data = defaultdict(dict)
        for f, k in fpos.items():
            data[f][k] = _ONE
        for c, p in pivots.items():
            for f, v in rows[p].items():
                if f != c:
                    data[c][fpos[f]] = -v
        return RationalMatrix(self.ncols, len(free), dict(data))

    def column_basis(self):
        """Indices of a maximal set of independent columns (leftmost choice)."""
        return sorted(_eliminate(self, full=False)[1])

    def solve(self, rhs):
        """Some X with self @ X = rhs, or None when inconsistent."""
        if rhs.nrows != self.nrows:
            raise ValueError("rhs row count mismatch")
        aug = RationalMatrix.hstack([self, rhs])
        rows, pivots = _eliminate(aug, full=True)
        if any(c >= self.ncols for c in pivots):
            return None
        data = {}
        for c, p in pivots.items():
            d = {j - self.ncols: v for j, v in rows[p].items() if j >= self.ncols}
            if d:
                data[c] = d
        return RationalMatrix(self.ncols, rhs.ncols, data)

    def is_invertible(self):
        return self.nrows == self.ncols and self.rank() == self.nrows

    def inverse(self):
        if self.nrows != self.ncols:
            raise ValueError("inverse of a non-square matrix")
        x = self.solve(RationalMatrix.identity(self.nrows))
        if x is None or self.rank() != self.nrows:
            raise ValueError("matrix is singular")
        return x


def _eliminate(m, full):
    """Sparse Gauss(-Jordan) elimination.

    Returns (rows, pivots) where rows is a dict of normalized row dicts and
    pivots maps pivot column -> row id.  With full=True the result is reduced
    (pivot columns are cleared in every other row) and pivot columns are
    chosen left to right, so the output is the canonical RREF.
    """
    rows = {i: dict(r) for i, r in m._rows.items()}
    colidx = defaultdict(set)
    for i, r in rows.items():
        for j in r:
            colidx[j].add(i)
    pivots = {}
    used = set()
    for c in sorted(colidx):
        cand = [r for r in colidx[c] if r not in used]
        if not cand:
            continue
        p = min(cand, key=lambda r: (len(rows[r]), r))
        prow = rows[p]
        inv = _ONE / prow[c]
        if inv != _ONE:
            for j in prow:
                prow[j] *= inv
        targets = colidx[c] if full else [r for r in colidx[c] if r not in used]
        for r in list(targets):
            if r == p:
                continue
            row = rows[r]
            f = row[c]
            for j, v in prow.items():
                w = row.get(j, _ZERO) - f * v
                if w:
                    if j not in row:
                        colidx[j].add(r)
                    row[j] = w
                else:
                    if j in row:
                        del row[j]
                        colidx[j].discard(r)
        used.add(p)
        pivots[c] = p
    return rows, pivots


def _markowitz_rank(m):
    """Rank by elimination with a greedy sparsity-preserving pivot order."""
    rows = {i: dict(r) for i, r in m._rows.items()}
    cols = defaultdict(set)
    for i, r in rows.items():
        for j in r:
            cols[j].add(i)
    rank = 0
    while cols:
        c = min(cols, key=lambda j: (len(cols[j]), j))
        cand = cols[c]
        p = min(cand, key=lambda r: (len(rows[r]), r))
        prow = rows.pop(p)
        for j in prow:
            s = cols[j]
            s.discard(p)
        pc = prow[c]
        for r in list(cand):
            row = rows[r]
            f = row[c] / pc
            for j, v in prow.items():
                w = row.get(j, _ZERO) - f * v
                if w:
                    if j not in row:
                        cols[j].add(r)
                    row[j] = w
                elif j in row:
                    del row[j]
                    cols[j].discard(r)
        for j in prow:
            if not cols[j]:
                del cols[j]
        rank += 1
    return rank


def rank(m):
    return m.rank()


# ---------------------------------------------------------------------------
# cochain complexes

class CochainComplex:
    """Bounded complex C^start -> ... -> C^(start+len(dims)-1)."""

    def __init__(self, dims, diffs=None, start=0, check=True):
        self.start = start
        self.dims = [int(d) for d in dims]
        if diffs is None:
            diffs = [RationalMatrix.zeros(self.dims[k + 1], self.dims[k])
                     for k in range(len(self.dims) - 1)]
        self.diffs = list(diffs)
        if len(self.diffs) != max(len(self.dims) - 1, 0):
            raise ValueError("need exactly one differential between consecutive degrees")
        for k, d in enumerate(self.diffs):
            if d.shape != (self.dims[k + 1], self.dims[k]):
                raise ValueError(f"d^{start + k} has shape {d.shape}, expected "
                                 f"{(self.dims[k + 1], self.dims[k])}")
        if check:
            for k in range(len(self.diffs) - 1):
                if not (self.diffs[k + 1] @ self.diffs[k]).is_zero():
                    raise ValueError(f"d^{start + k + 1} o d^{start + k} != 0")
        self._ranks = None

    @property
    def stop(self):
        return self.start + len(self.dims)

    def degrees(self):
        return range(self.start, self.stop)

    def dim(self, n):
        if self.start <= n < self.stop:
            return self.dims[n - self.start]
        return 0

    def d(self, n):
        """d^n : C^n -> C^(n+1) (zero outside the stored range)."""
        k = n - self.start
        if 0 <= k < len(self.diffs):
            return self.diffs[k]
        return RationalMatrix.zeros(self.dim(n + 1), self.dim(n))

    def ranks(self):
        if self._ranks is None:
            self._ranks = [d.rank() for d in self.diffs]
        return self._ranks

    def rank_d(self, n):
        k = n - self.start
        if 0 <= k < len(self.diffs):
            return self.ranks()[k]
        return 0

    def betti(self):
        return [self.dim(n) - self.rank_d(n) - self.rank_d(n - 1) for n in self.degrees()]

    def is_acyclic(self):
        return all(b == 0 for b in self.betti())

    def euler_characteristic(self):
        return sum((-1) ** n * self.dim(n) for n in self.degrees())

    def shifted(self, k):
        return CochainComplex(self.dims, self.diffs, self.start + k, check=False)

    def __repr__(self):
        return f"CochainComplex(start={self.start}, dims={self.dims})"

    def __eq__(self, other):
        if not isinstance(other, CochainComplex):
            return NotImplemented
        return (self.start, self.dims, self.diffs) == (other.start, other.dims, other.diffs)

    __hash__ = None


def cohomology(c):
    """Return (dims, bases) with bases[k] a matrix of cocycle representatives."""
    dims, bases = [], []
    for n in c.degrees():
        z = c.d(n).kernel()
        b = c.d(n - 1)
        both = RationalMatrix.hstack([b, z], nrows=c.dim(n))
        picks = [j - b.ncols for j in both.column_basis() if j >= b.ncols]
        reps = z.submatrix(range(z.nrows), picks)
        dims.append(reps.ncols)
        bases.append(reps)
    return dims, bases


def class_coordinates(c, n, reps, vectors):
    """Coordinates of the classes of the columns of `vectors` in the basis reps."""
    b = c.d(n - 1)
    sol = RationalMatrix.hstack([b, reps], nrows=c.dim(n)).solve(vectors)
    if sol is None:
        raise ValueError("vectors are not cocycles of the given complex")
    return sol.submatrix(range(b.ncols, b.ncols + reps.ncols), range(vectors.ncols))


class ChainMap:
    def __init__(self, source, target, comps, check=True):
        self.source = source
        self.target = target
        self.comps = {}
        lo = min(source.start, target.start)
        hi = max(source.stop, target.stop)
        for n in range(lo, hi):
            m = comps.get(n)
            if m is None:
                m = RationalMatrix.zeros(target.dim(n), source.dim(n))
            if m.shape != (target.dim(n), source.dim(n)):
                raise ValueError(f"component {n} has shape {m.shape}, expected "
                                 f"{(target.dim(n), source.dim(n))}")
            self.comps[n] = m
        if check:
            for n in range(lo, hi):
                lhs = self.at(n + 1) @ source.d(n)
                rhs = target.d(n) @ self.at(n)
                if lhs != rhs:
                    raise ValueError(f"chain map fails to commute with d in degree {n}")

    def at(self, n):
        m = self.comps.get(n)
        if m is None:
            return RationalMatrix.zeros(self.target.dim(n), self.source.dim(n))
        return m

    def compose_after(self, other):
        """self o other."""
        keys = set(self.comps) | set(other.comps)
        return ChainMap(other.source, self.target,
                        {n: self.at(n) @ other.at(n) for n in keys})

    @classmethod
    def identity(cls, c):
        return cls(c, c, {n: RationalMatrix.identity(c.dim(n)) for n in c.degrees()},
                   check=False)


def cone(phi):
    """cone^n = src^(n+1) + tgt^n,  d(a, b) = (-d a, phi(a) + d b)."""
    s, t = phi.source, phi.target
    lo = min(s.start - 1, t.start)
    hi = max(s.stop - 1, t.stop)
    dims = [s.dim(n + 1) + t.dim(n) for n in range(lo, hi)]
    diffs = []
    for n in range(lo, hi - 1):
        grid = {(0, 0): -s.d(n + 1), (1, 0): phi.at(n + 1), (1, 1): t.d(n)}
        diffs.append(RationalMatrix.block(grid, [s.dim(n + 2), t.dim(n + 1)],
                                          [s.dim(n + 1), t.dim(n)]))
    return CochainComplex(dims, diffs, lo)


def is_quasi_iso(phi):
    return cone(phi).is_acyclic()


def induced_map(phi, n, src_reps=None, tgt_reps=None):
    """Matrix of H^n(phi) in the representative bases from cohomology()."""
    if src_reps is None:
        src_reps = cohomology(phi.source)[1][n - phi.source.start] \
            if phi.source.start <= n < phi.source.stop else RationalMatrix.zeros(0, 0)
    if tgt_reps is None:
        tgt_reps = cohomology(phi.target)[1][n - phi.target.start] \
            if phi.target.start <= n < phi.target.stop else RationalMatrix.zeros(0, 0)
    if src_reps.ncols == 0 or tgt_reps.ncols == 0:
        return RationalMatrix.zeros(tgt_reps.ncols, src_reps.ncols)
    images = phi.at(n) @ src_reps
    return class_coordinates(phi.target, n, tgt_reps, images)


# ---------------------------------------------------------------------------
# multicomplexes

class Multicomplex:
    """Spaces on a grid of multidegrees with one differential per direction.

    spaces: {multidegree tuple: dim}
    diffs: {(multidegree, direction): matrix from md to md + e_direction}
    """

    def __init__(self, ndirs, spaces, diffs, check=True):
        self.ndirs = ndirs
        self.spaces = {tuple(k): int(v) for k, v in spaces.items() if v}
        self.diffs = {}
        for (md, k), m in diffs.items():
            md = tuple(md)
            tgt = _step(md, k)
            if m.shape != (self.dim(tgt), self.dim(md)):
                raise ValueError(f"differential at {md} direction {k} has shape {m.shape}")
            if not m.is_zero():
                self.diffs[md, k] = m
        if check:
            self.check_anticommuting()

    def dim(self, md):
        return self.spaces.get(tuple(md), 0)

    def d(self, md, k):
        m = self.diffs.get((tuple(md), k))
        if m is None:
            return RationalMatrix.zeros(self.dim(_step(md, k)), self.dim(md))
        return m

    def check_anticommuting(self):
        for md in sorted(self.spaces):
            for k in range(self.ndirs):
                sq = self.d(_step(md, k), k) @ self.d(md, k)
                if not sq.is_zero():
                    raise ValueError(f"direction {k} does not square to zero at {md}")
                for l in range(k + 1, self.ndirs):
                    a = self.d(_step(md, k), l) @ self.d(md, k)
                    b = self.d(_step(md, l), k) @ self.d(md, l)
                    if not (a + b).is_zero():
                        kind = "commutes" if a == b and not a.is_zero() else "fails to anti-commute"
                        raise ValueError(f"rectangle at {md} in directions ({k},{l}) {kind}")


def _step(md, k):
    md = list(md)
    md[k] += 1
    return tuple(md)


def total_complex(mc):
    """Total complex with the plain sum of direction differentials.

    Summands in each total degree are ordered lexicographically by multidegree.
    Returns (complex, layout) where layout[n] lists (multidegree, offset).
    """
    if not mc.spaces:
        return CochainComplex([0], [], 0), {0: []}
    by_deg = defaultdict(list)
    for md in sorted(mc.spaces):
        by_deg[sum(md)].append(md)
    lo, hi = min(by_deg), max(by_deg)
    layout, dims = {}, []
    for n in range(lo, hi + 1):
        off, entries = 0, []
        for md in by_deg.get(n, []):
            entries.append((md, off))
            off += mc.dim(md)
        layout[n] = entries
        dims.append(off)
    diffs = []
    for n in range(lo, hi):
        ents = []
        tpos = dict(layout[n + 1])
        for md, off in layout[n]:
            for k in range(mc.ndirs):
                m = mc.diffs.get((md, k))
                if m is None:
                    continue
                toff = tpos[_step(md, k)]
                ents.extend((toff + i, off + j, v) for i, j, v in m.entries())
        diffs.append(RationalMatrix.from_entries(dims[n + 1 - lo], dims[n - lo], ents))
    return CochainComplex(dims, diffs, lo), layout


def double_complex(spaces, dh, dv, check=True):
    """Convenience wrapper: 2-direction multicomplex from horizontal/vertical maps."""
    diffs = {}
    for md, m in dh.items():
        diffs[tuple(md), 0] = m
    for md, m in dv.items():
        diffs[tuple(md), 1] = m
    return Multicomplex(2, spaces, diffs, check=check)


def grid_points(shape):
    return product(*(range(s) for s in shape))
