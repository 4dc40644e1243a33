"""Scenario files: JSON descriptions of a space, sheaves, covers, atlases,
modules and the checks to run on them.

Schema (all keys optional except space):

    space:    {points: [...], relations: [[x, y], ...]}
    sheaves:  {name: {stalks: {point: dim}, restrictions: [{from, to, matrix}]}
               | {constant: k} | {open_indicator: [points], rank: k}}
    covers:   {name: [[points], ...]}
    atlases:  {name: {charts: [{open: [points], ambient: {points, relations},
                                embedding: [[point, ambient point], ...]}]}}
              (a chart without ambient is the identity chart of its open)
    modules:  {name: {restrict: sheaf, cover: cover,
                      scale_edge: {simplex: [...], face: j, factor: "p/q"}}}
    maps:     {name: {source: sheaf, target: sheaf, stalks: {point: matrix}}}
    checks:   [name | {name, sheaf?, atlas?, cover?, expect?}]
    seed:     integer used by the randomised checks

Rationals are "p/q" strings or integers; matrices are row-major arrays.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dolbeault import Atlas, EmbeddingTriple
from .linalg import RationalMatrix, to_q
from .poset import PosetSpace, SheafRep, StalkHom, constant_sheaf, open_indicator_sheaf
from .ss import SSModule, restrict_to_cover

M = RationalMatrix

DATA = Path(__file__).parent / "data"


class ScenarioParseError(ValueError):
    pass


class ScenarioValidationError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    space: PosetSpace
    sheaves: dict = field(default_factory=dict)
    covers: dict = field(default_factory=dict)
    atlases: dict = field(default_factory=dict)
    modules: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    seed: int = 0
    raw: dict = field(default_factory=dict)


def _point_lookup(space, what):
    table = {}
    for p in space.points:
        table[p] = p
        table[str(p)] = p

    def look(v):
        key = tuple(v) if isinstance(v, list) else v
        if key in table:
            return table[key]
        raise ScenarioValidationError(f"{what}: unknown point {v!r}")
    return look


def _matrix(rows, nrows, ncols, what):
    widths = {len(r) for r in rows}
    if len(widths) == 1 and widths != {ncols}:
        raise ScenarioValidationError(f"{what}: matrix has shape {(len(rows), widths.pop())}, "
                                      f"expected {(nrows, ncols)}")
    try:
        m = M.from_rows([[to_q(v) for v in r] for r in rows], ncols=ncols) if rows else \
            M.zeros(nrows, ncols)
    except (TypeError, ValueError) as e:
        raise ScenarioValidationError(f"{what}: {e}") from None
    if m.shape != (nrows, ncols):
        raise ScenarioValidationError(f"{what}: matrix has shape {m.shape}, expected "
                                      f"{(nrows, ncols)}")
    return m


def _hashable(v):
    return tuple(_hashable(x) for x in v) if isinstance(v, list) else v


def parse_space(obj, what="space"):
    if not isinstance(obj, dict) or "points" not in obj:
        raise ScenarioValidationError(f"{what}: needs a 'points' list")
    pts = [_hashable(p) for p in obj["points"]]
    if len(set(pts)) != len(pts):
        raise ScenarioValidationError(f"{what}: duplicate points")
    try:
        rels = [(_hashable(x), _hashable(y)) for x, y in obj.get("relations", [])]
        return PosetSpace(pts, rels)
    except (TypeError, ValueError) as e:
        raise ScenarioValidationError(f"{what}: {e}") from None


def parse_sheaf(space, obj, what):
    look = _point_lookup(space, what)
    if "constant" in obj:
        return constant_sheaf(space, int(obj["constant"]))
    if "open_indicator" in obj:
        u = frozenset(look(p) for p in obj["open_indicator"])
        if not space.is_open(u):
            raise ScenarioValidationError(f"{what}: open_indicator set is not open")
        return open_indicator_sheaf(space, u, int(obj.get("rank", 1)))
    dims = {look(p): int(d) for p, d in obj.get("stalks", {}).items()}
    res = {}
    for r in obj.get("restrictions", []):
        x, y = look(r["from"]), look(r["to"])
        res[x, y] = _matrix(r["matrix"], dims.get(y, 0), dims.get(x, 0),
                            f"{what}: restriction {x!r} -> {y!r}")
    try:
        return SheafRep(space, dims, res)
    except ValueError as e:
        raise ScenarioValidationError(f"{what}: {e}") from None


def parse_cover(space, obj, what):
    look = _point_lookup(space, what)
    cover = [frozenset(look(p) for p in u) for u in obj]
    for k, u in enumerate(cover):
        if not space.is_open(u):
            raise ScenarioValidationError(f"{what}: member {k} is not open")
    missing = set(space.points) - frozenset().union(*cover) if cover else set(space.points)
    if missing:
        raise ScenarioValidationError(f"{what}: misses points {sorted(missing, key=str)}")
    return cover


def parse_atlas(space, obj, what):
    look = _point_lookup(space, what)
    charts = []
    for n, c in enumerate(obj.get("charts", [])):
        cw = f"{what}: chart {n}"
        u = frozenset(look(p) for p in c["open"])
        if not space.is_open(u):
            raise ScenarioValidationError(f"{cw}: open set is not open")
        sub = space.subspace(u)
        try:
            if "ambient" not in c:
                charts.append(EmbeddingTriple.identity(sub))
                continue
            amb = parse_space(c["ambient"], f"{cw} ambient")
            alook = _point_lookup(amb, f"{cw} ambient")
            emb = {look(x): alook(d) for x, d in c["embedding"]}
            if set(emb) != set(u):
                raise ScenarioValidationError(f"{cw}: embedding must be given on every point of "
                                              "the open set")
            charts.append(EmbeddingTriple(sub, emb, amb))
        except ScenarioValidationError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioValidationError(f"{cw}: {e}") from None
    try:
        return Atlas(space, charts)
    except ValueError as e:
        raise ScenarioValidationError(f"{what}: {e}") from None


def parse_module(space, obj, sheaves, covers, what):
    f = sheaves.get(obj.get("restrict"))
    cover = covers.get(obj.get("cover"))
    if f is None or cover is None:
        raise ScenarioValidationError(f"{what}: 'restrict' and 'cover' must name a sheaf and a cover")
    m = restrict_to_cover(space, cover, f)
    se = obj.get("scale_edge")
    if se is not None:
        b, j = tuple(se["simplex"]), int(se["face"])
        if (b, j) not in m.edges:
            raise ScenarioValidationError(f"{what}: no edge ({list(b)};{j}) in the nerve")
        c = to_q(se.get("factor", 2))
        edges = dict(m.edges)
        edges[b, j] = [h.scaled(c) for h in edges[b, j]]
        m = SSModule(m.space, m.comps, edges, check=False)
    return m


def parse_map(space, obj, sheaves, what):
    look = _point_lookup(space, what)
    s, t = sheaves.get(obj.get("source")), sheaves.get(obj.get("target"))
    if s is None or t is None:
        raise ScenarioValidationError(f"{what}: source and target must name sheaves")
    stalks = {}
    for p, rows in obj.get("stalks", {}).items():
        x = look(p)
        stalks[x] = _matrix(rows, t.dim(x), s.dim(x), f"{what}: stalk at {x!r}")
    try:
        return StalkHom(s, t, stalks)
    except ValueError as e:
        raise ScenarioValidationError(f"{what}: {e}") from None


def parse_scenario(text, name="scenario"):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{name}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ScenarioParseError(f"{name}: line 1, column 1: top level must be an object")
    return build_scenario(raw, name)


def build_scenario(raw, name="scenario"):
    if "space" not in raw:
        raise ScenarioValidationError(f"{name}: missing 'space'")
    space = parse_space(raw["space"])
    try:
        sheaves = {k: parse_sheaf(space, v, f"sheaf {k!r}") for k, v in raw.get("sheaves", {}).items()}
        covers = {k: parse_cover(space, v, f"cover {k!r}") for k, v in raw.get("covers", {}).items()}
        atlases = {k: parse_atlas(space, v, f"atlas {k!r}")
                   for k, v in raw.get("atlases", {}).items()}
        modules = {k: parse_module(space, v, sheaves, covers, f"module {k!r}")
                   for k, v in raw.get("modules", {}).items()}
        maps = {k: parse_map(space, v, sheaves, f"map {k!r}") for k, v in raw.get("maps", {}).items()}
    except (KeyError, TypeError) as e:
        raise ScenarioValidationError(f"{name}: malformed entry ({e})") from None
    checks = []
    for c in raw.get("checks", []):
        checks.append({"name": c} if isinstance(c, str) else dict(c))
    return Scenario(raw.get("name", name), space, sheaves, covers, atlases, modules, maps,
                    checks, int(raw.get("seed", 0)), raw)


def load_scenario(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ScenarioValidationError(f"cannot read {path}: {e.strerror}") from None
    return parse_scenario(text, p.name)


def fixture_path(name):
    return DATA / f"{name}.json"


def list_fixtures():
    return sorted(p.stem for p in DATA.glob("*.json"))


def load_fixture(name):
    return load_scenario(fixture_path(name))


# ---------------------------------------------------------------------------
# serialisation

def _point_json(p):
    return list(p) if isinstance(p, tuple) else p


def space_to_json(space):
    return {"points": [_point_json(p) for p in space.points],
            "relations": [[_point_json(x), _point_json(y)] for x, y in space.covers]}


def sheaf_to_json(sheaf):
    base = sheaf.base
    return {"stalks": {str(p): sheaf.dim(p) for p in base.points},
            "restrictions": [{"from": _point_json(x), "to": _point_json(y),
                              "matrix": sheaf.cover_res(x, y).to_strings()}
                             for x, y in base.covers if sheaf.dim(x) and sheaf.dim(y)]}


def map_to_json(h, source, target):
    return {"source": source, "target": target,
            "stalks": {str(x): h.stalk(x).to_strings() for x in h.target.base.points
                       if h.stalk(x).nrows and h.stalk(x).ncols}}


def cover_to_json(cover):
    return [sorted((_point_json(p) for p in u), key=str) for u in cover]
