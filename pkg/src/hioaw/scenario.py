"""Scenario files: a line-oriented sectioned key=value format.

A scenario declares a grid, timing, some automata (cars or finite-location
machines), compositions, and checks, e.g.::

    [grid]
    width = 200
    height = 200
    cell_size = 0.25

    [time]
    dt = 0.1
    horizon = 20

    [car left]
    mass = 1000
    length = 2
    width = 1
    radius = 2
    x = 15
    y = 25
    heading = 0

    [compose world]
    left = left
    right = right
    close_world = true

Keys may repeat where that is meaningful (``transition = src, act, dst``).
Comments start with ``#`` or ``;``.  All problems are reported as
``ParseError`` carrying the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .automaton import Hioaw
from .cars import CarParams, build_car
from .composition import check_compatible, compose
from .errors import InvalidParams, ParseError
from .fields import SpaceGrid
from .finite import FiniteSpec, LocationSpec, TransitionSpec, build_finite
from .refinement import (
    DEFAULT_DEPTH,
    FiniteInstance,
    check_simulation,
    check_trace_inclusion,
    finite_compose,
)
from .trajectories import Valuation

DEFAULT_TIME_STEP = 0.1
DEFAULT_HORIZON = 10.0

CHECK_KINDS = ("compat", "trace-inclusion", "simulation")


@dataclass(frozen=True)
class ComposeSpec:
    name: str
    left: str
    right: str
    close_world: bool = False


@dataclass(frozen=True)
class CheckSpec:
    name: str
    kind: str
    left: str
    right: str
    depth: int | None = None
    relation: tuple[tuple[str, str], ...] = ()


@dataclass
class Scenario:
    grid: SpaceGrid | None = None
    time_step: float = DEFAULT_TIME_STEP
    horizon: float = DEFAULT_HORIZON
    cars: dict[str, CarParams] = field(default_factory=dict)
    finites: dict[str, FiniteSpec] = field(default_factory=dict)
    composes: list[ComposeSpec] = field(default_factory=list)
    checks: list[CheckSpec] = field(default_factory=list)


# -- raw text -> sections ---------------------------------------------------------


@dataclass
class _Entry:
    key: str
    value: str
    line: int


@dataclass
class _Section:
    kind: str
    name: str
    line: int
    entries: list[_Entry] = field(default_factory=list)


def _split_sections(text: str) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"line {lineno}: unterminated section header")
            inner = line[1:-1].strip()
            if not inner:
                raise ParseError(f"line {lineno}: empty section header")
            parts = inner.split(None, 1)
            kind = parts[0]
            name = parts[1].strip() if len(parts) > 1 else ""
            current = _Section(kind, name, lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ParseError(f"line {lineno}: entry outside any section")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ParseError(f"line {lineno}: empty key")
        current.entries.append(_Entry(key, value.strip(), lineno))
    return sections


class _View:
    """Typed access to one section's entries with duplicate/unknown tracking."""

    def __init__(self, sec: _Section):
        self.sec = sec
        self._taken: set[int] = set()

    def _matches(self, key: str) -> list[_Entry]:
        found = [e for e in self.sec.entries if e.key == key]
        self._taken.update(id(e) for e in found)
        return found

    def one(self, key: str, conv, default=None, required: bool = False):
        found = self._matches(key)
        if len(found) > 1:
            raise ParseError(f"line {found[1].line}: duplicate key {key!r}")
        if not found:
            if required:
                raise ParseError(
                    f"line {self.sec.line}: [{self.sec.kind} {self.sec.name}]".rstrip()
                    + f" is missing required key {key!r}"
                )
            return default
        return conv(found[0].value, found[0].line)

    def many(self, key: str) -> list[_Entry]:
        return self._matches(key)

    def prefixed(self, prefix: str) -> list[_Entry]:
        found = [e for e in self.sec.entries if e.key.startswith(prefix)]
        self._taken.update(id(e) for e in found)
        return found

    def reject_unknown(self) -> None:
        for e in self.sec.entries:
            if id(e) not in self._taken:
                raise ParseError(
                    f"line {e.line}: unknown key {e.key!r} in [{self.sec.kind}] section"
                )


def _float(value: str, line: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ParseError(f"line {line}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ParseError(f"line {line}: expected a finite number, got {value!r}")
    return x


def _int(value: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"line {line}: expected an integer, got {value!r}") from None


def _bool(value: str, line: int) -> bool:
    low = value.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ParseError(f"line {line}: expected true/false, got {value!r}")


def _str(value: str, line: int) -> str:
    if not value:
        raise ParseError(f"line {line}: expected a value")
    return value


def _name_list(value: str, line: int) -> list[str]:
    items = [part.strip() for part in value.split(",")]
    if not all(items):
        raise ParseError(f"line {line}: malformed list {value!r}")
    return items


# -- sections -> scenario ---------------------------------------------------------


def _parse_grid(sec: _Section) -> SpaceGrid:
    v = _View(sec)
    width = v.one("width", _int, required=True)
    height = v.one("height", _int, required=True)
    cell = v.one("cell_size", _float, required=True)
    ox = v.one("origin_x", _float, default=0.0)
    oy = v.one("origin_y", _float, default=0.0)
    v.reject_unknown()
    try:
        return SpaceGrid(width, height, cell, (ox, oy))
    except InvalidParams as exc:
        raise ParseError(f"line {sec.line}: {exc}") from None


def _parse_car(sec: _Section) -> CarParams:
    v = _View(sec)
    kwargs = dict(
        mass=v.one("mass", _float, required=True),
        length=v.one("length", _float, required=True),
        width=v.one("width", _float, required=True),
        sense_radius=v.one("radius", _float, required=True),
        start=(v.one("x", _float, required=True), v.one("y", _float, required=True)),
        heading=v.one("heading", _float, required=True),
    )
    v.reject_unknown()
    try:
        return CarParams(label=sec.name, **kwargs)
    except InvalidParams as exc:
        raise ParseError(f"line {sec.line}: car {sec.name!r}: {exc}") from None


def _parse_automaton(sec: _Section) -> FiniteSpec:
    v = _View(sec)
    locations = v.one("locations", _name_list, required=True)
    starts = v.one("start", _name_list, required=True)
    menu = v.one("menu", _name_list)
    menu_steps = tuple(_int(m, sec.line) for m in menu) if menu else None

    transitions = []
    for e in v.many("transition"):
        parts = _name_list(e.value, e.line)
        if len(parts) != 3:
            raise ParseError(f"line {e.line}: transition needs 'src, action, dst'")
        transitions.append(TransitionSpec(*parts))

    action_kinds = []
    for e in v.prefixed("action."):
        act = e.key[len("action."):]
        if not act:
            raise ParseError(f"line {e.line}: action key needs a name")
        action_kinds.append((act, _str(e.value, e.line)))

    outputs: dict[str, dict[str, float]] = {}
    world_outputs: dict[str, dict[str, float]] = {}
    for prefix, store in (("output.", outputs), ("world_output.", world_outputs)):
        for e in v.prefixed(prefix):
            tail = e.key[len(prefix):].split(".")
            if len(tail) != 2 or not all(tail):
                raise ParseError(
                    f"line {e.line}: expected '{prefix}VAR.LOCATION = value'"
                )
            var, loc = tail
            if loc not in locations:
                raise ParseError(f"line {e.line}: unknown location {loc!r}")
            store.setdefault(var, {})[loc] = _float(e.value, e.line)
    v.reject_unknown()

    loc_specs = tuple(
        LocationSpec(
            name=loc,
            outputs=tuple(sorted((var, by_loc[loc]) for var, by_loc in outputs.items() if loc in by_loc)),
            world_outputs=tuple(
                sorted((var, by_loc[loc]) for var, by_loc in world_outputs.items() if loc in by_loc)
            ),
        )
        for loc in locations
    )
    kwargs: dict = {}
    if menu_steps:
        kwargs["menu_steps"] = menu_steps
    return FiniteSpec(
        name=sec.name,
        locations=loc_specs,
        starts=tuple(starts),
        transitions=tuple(transitions),
        action_kinds=tuple(sorted(action_kinds)),
        **kwargs,
    )


def _parse_compose(sec: _Section) -> ComposeSpec:
    v = _View(sec)
    spec = ComposeSpec(
        name=sec.name,
        left=v.one("left", _str, required=True),
        right=v.one("right", _str, required=True),
        close_world=v.one("close_world", _bool, default=False),
    )
    v.reject_unknown()
    return spec


def _parse_check(sec: _Section) -> CheckSpec:
    v = _View(sec)
    kind = v.one("kind", _str, required=True)
    if kind not in CHECK_KINDS:
        raise ParseError(
            f"line {sec.line}: check kind must be one of {', '.join(CHECK_KINDS)}"
        )
    relation: list[tuple[str, str]] = []
    rel = v.one("relation", _name_list)
    for pair in rel or ():
        left, sep, right = pair.partition(":")
        if not sep or not left or not right:
            raise ParseError(f"line {sec.line}: relation entries look like 'loc:loc'")
        relation.append((left, right))
    if kind == "simulation" and not relation:
        raise ParseError(f"line {sec.line}: simulation checks need a relation")
    spec = CheckSpec(
        name=sec.name,
        kind=kind,
        left=v.one("left", _str, required=True),
        right=v.one("right", _str, required=True),
        depth=v.one("depth", _int),
        relation=tuple(relation),
    )
    v.reject_unknown()
    return spec


def parse_scenario(text: str) -> Scenario:
    scn = Scenario()
    seen_grid = seen_time = False
    names: dict[str, int] = {}

    def claim(name: str, line: int) -> None:
        if not name:
            raise ParseError(f"line {line}: this section needs a name")
        if name in names:
            raise ParseError(
                f"line {line}: name {name!r} already used on line {names[name]}"
            )
        names[name] = line

    for sec in _split_sections(text):
        if sec.kind == "grid":
            if seen_grid:
                raise ParseError(f"line {sec.line}: duplicate [grid] section")
            seen_grid = True
            scn.grid = _parse_grid(sec)
        elif sec.kind == "time":
            if seen_time:
                raise ParseError(f"line {sec.line}: duplicate [time] section")
            seen_time = True
            v = _View(sec)
            scn.time_step = v.one("dt", _float, default=DEFAULT_TIME_STEP)
            scn.horizon = v.one("horizon", _float, default=DEFAULT_HORIZON)
            v.reject_unknown()
            if scn.time_step <= 0 or scn.horizon <= 0:
                raise ParseError(f"line {sec.line}: dt and horizon must be positive")
        elif sec.kind == "car":
            claim(sec.name, sec.line)
            scn.cars[sec.name] = _parse_car(sec)
        elif sec.kind == "automaton":
            claim(sec.name, sec.line)
            scn.finites[sec.name] = _parse_automaton(sec)
        elif sec.kind == "compose":
            claim(sec.name, sec.line)
            scn.composes.append(_parse_compose(sec))
        elif sec.kind == "check":
            claim(sec.name, sec.line)
            scn.checks.append(_parse_check(sec))
        else:
            raise ParseError(f"line {sec.line}: unknown section kind {sec.kind!r}")
    return scn


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path!r}: {exc}") from None
    return parse_scenario(text)


# -- scenario -> live objects -----------------------------------------------------


@dataclass
class BuiltScenario:
    scenario: Scenario
    automata: dict[str, Hioaw] = field(default_factory=dict)
    finite: dict[str, FiniteInstance] = field(default_factory=dict)
    close_world: dict[str, bool] = field(default_factory=dict)

    @property
    def grid(self) -> SpaceGrid | None:
        return self.scenario.grid


def build_scenario(scn: Scenario) -> BuiltScenario:
    built = BuiltScenario(scn)
    for name, params in scn.cars.items():
        if scn.grid is None:
            raise InvalidParams(f"car {name!r} needs a [grid] section")
        built.automata[name] = build_car(params, scn.grid, scn.time_step)
    for name, spec in scn.finites.items():
        inst = build_finite(spec, scn.time_step, scn.grid)
        built.finite[name] = inst
        built.automata[name] = inst.automaton
    for cspec in scn.composes:
        for side in (cspec.left, cspec.right):
            if side not in built.automata:
                raise InvalidParams(f"composition {cspec.name!r}: unknown automaton {side!r}")
        comp = compose(built.automata[cspec.left], built.automata[cspec.right])
        built.automata[cspec.name] = comp
        built.close_world[cspec.name] = cspec.close_world
        if cspec.left in built.finite and cspec.right in built.finite:
            built.finite[cspec.name] = finite_compose(
                built.finite[cspec.left], built.finite[cspec.right]
            )
    return built


# -- checks -----------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    kind: str
    ok: bool | None  # None means inconclusive (search bound exceeded)
    detail: str

    @property
    def status(self) -> str:
        if self.ok is None:
            return "inconclusive"
        return "pass" if self.ok else "fail"


def _finite_operand(built: BuiltScenario, check: str, name: str) -> FiniteInstance:
    inst = built.finite.get(name)
    if inst is None:
        raise InvalidParams(
            f"check {check!r}: {name!r} is not a finite-location automaton"
        )
    return inst


def _relation_states(
    built: BuiltScenario, spec: CheckSpec
) -> list[tuple[Valuation, Valuation]]:
    lspec = built.scenario.finites.get(spec.left)
    rspec = built.scenario.finites.get(spec.right)
    if lspec is None or rspec is None:
        raise InvalidParams(
            f"check {spec.name!r}: relations need plain [automaton] operands"
        )
    pairs = []
    for la, lb in spec.relation:
        lspec.location(la)
        rspec.location(lb)
        pairs.append(
            (
                Valuation({f"{lspec.name}_loc": la}),
                Valuation({f"{rspec.name}_loc": lb}),
            )
        )
    return pairs


def run_check(
    built: BuiltScenario, spec: CheckSpec, depth_override: int | None = None
) -> CheckResult:
    depth = depth_override or spec.depth or DEFAULT_DEPTH
    if spec.kind == "compat":
        for side in (spec.left, spec.right):
            if side not in built.automata:
                raise InvalidParams(f"check {spec.name!r}: unknown automaton {side!r}")
        report = check_compatible(built.automata[spec.left], built.automata[spec.right])
        return CheckResult(spec.name, spec.kind, report.compatible, str(report))
    if spec.kind == "trace-inclusion":
        fa = _finite_operand(built, spec.name, spec.left)
        fb = _finite_operand(built, spec.name, spec.right)
        verdict = check_trace_inclusion(fa, fb, depth=depth)
        return CheckResult(spec.name, spec.kind, verdict.holds, str(verdict))
    if spec.kind == "simulation":
        fa = _finite_operand(built, spec.name, spec.left)
        fb = _finite_operand(built, spec.name, spec.right)
        relation = _relation_states(built, spec)
        verdict = check_simulation(fa, fb, relation, depth=depth)
        return CheckResult(spec.name, spec.kind, verdict.holds, str(verdict))
    raise InvalidParams(f"check {spec.name!r}: unknown kind {spec.kind!r}")
