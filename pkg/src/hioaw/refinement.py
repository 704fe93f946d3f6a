"""Bounded refinement checks between finite automaton instances.

Everything here works on :class:`FiniteInstance`: an automaton with an
explicitly enumerable state space, probed under its default (identity)
environment with trajectory durations drawn from a small menu.  Within those
bounds the checks are exact: trace inclusion explores every alternation of
menu trajectories and enabled actions of the candidate and tracks the full
set of matching states of the reference (hidden actions of either side cost
nothing visible); the simulation check tests the three transfer conditions
pair by pair.

Verdicts carry replayable counterexamples.  A failed inclusion returns the
offending execution of the candidate; re-running the matcher on it confirms
the divergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .automaton import Hioaw
from .errors import BoundExceeded, IncompatibleAutomata, InvalidParams
from .executions import ExecutionFragment, trace_of
from .trajectories import Trajectory, Valuation, names_of, valuations_close

MAX_FINITE_STATES = 10_000
DEFAULT_MENU_STEPS = (1, 2, 4)
DEFAULT_DEPTH = 6
DEFAULT_BUDGET = 200_000
FIELD_TOL = 1e-9


@dataclass(frozen=True)
class FiniteInstance:
    """A finitely enumerable automaton plus the probing bounds.

    ``menu_steps`` are the trajectory durations explored between actions,
    in sample steps.
    """

    automaton: Hioaw
    states: tuple[Valuation, ...]
    menu_steps: tuple[int, ...] = DEFAULT_MENU_STEPS

    def __post_init__(self) -> None:
        if not self.states:
            raise InvalidParams("a finite instance needs at least one state")
        if len(self.states) > MAX_FINITE_STATES:
            raise InvalidParams(
                f"{len(self.states)} states exceed the cap of {MAX_FINITE_STATES}"
            )
        if not self.menu_steps or any(s <= 0 for s in self.menu_steps):
            raise InvalidParams("menu durations must be positive step counts")
        for s in self.automaton.starts:
            if s not in self.states:
                raise InvalidParams(f"start state {s} missing from the state list")

    def identity_relation(self) -> tuple[tuple[Valuation, Valuation], ...]:
        return tuple((x, x) for x in self.states)


def finite_compose(fa: FiniteInstance, fb: FiniteInstance) -> FiniteInstance:
    """Compose two finite instances; states are the merged product."""
    from .composition import compose

    comp = compose(fa.automaton, fb.automaton)
    states = tuple(xa.merge(xb) for xa in fa.states for xb in fb.states)
    menu = tuple(sorted(set(fa.menu_steps) | set(fb.menu_steps)))
    return FiniteInstance(comp, states, menu)


def product_relation(
    relation: Iterable[tuple[Valuation, Valuation]], partner: FiniteInstance
) -> tuple[tuple[Valuation, Valuation], ...]:
    """Lift a relation on two automata to their composites with ``partner``:
    composite states are related when the first components are and the partner
    components coincide."""
    return tuple(
        (xa.merge(xp), xb.merge(xp))
        for xa, xb in relation
        for xp in partner.states
    )


def comparable(a: Hioaw, b: Hioaw) -> bool:
    """Same external interface: matching input/output variable sets (world and
    automaton separately) and the same external actions."""
    sa, sb = a.sig, b.sig
    return (
        names_of(sa.world_in) == names_of(sb.world_in)
        and names_of(sa.world_out) == names_of(sb.world_out)
        and names_of(sa.auto_in) == names_of(sb.auto_in)
        and names_of(sa.auto_out) == names_of(sb.auto_out)
        and sa.external_actions == sb.external_actions
    )


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise BoundExceeded(
                f"search exceeded the budget of {self.limit} expansions"
            )


class _Probe:
    """Memoised single-automaton moves under the default environment."""

    def __init__(self, inst: FiniteInstance, budget: _Budget):
        self.inst = inst
        self.aut = inst.automaton
        self.budget = budget
        self.z_names = names_of(self.aut.sig.external_vars)
        self.hidden = self.aut.sig.actions_hidden
        self.u = self.aut.default_inputs
        self._z: dict = {}
        self._flow: dict = {}
        self._succ: dict = {}

    def key(self, x: Valuation):
        return x.freeze()

    def z_of(self, x: Valuation) -> Valuation:
        k = self.key(x)
        if k not in self._z:
            self._z[k] = self.aut.full_sample(x, self.u).project(self.z_names)
        return self._z[k]

    def flow1(self, x: Valuation) -> Valuation:
        k = self.key(x)
        if k not in self._flow:
            self.budget.spend()
            self._flow[k] = self.aut.gen.flow(x, self.u, self.aut.time_step)
        return self._flow[k]

    def successors(self, x: Valuation, action: str) -> list[Valuation]:
        k = (self.key(x), action)
        if k not in self._succ:
            self.budget.spend()
            self._succ[k] = self.aut.successors(x, action, self.u)
        return self._succ[k]

    def enabled(self, x: Valuation) -> list[str]:
        return self.aut.enabled_actions(x, self.u, changing_only=False)

    def hidden_closure(self, states: dict) -> dict:
        """All states reachable from ``states`` by firing hidden actions."""
        out = dict(states)
        stack = list(states.values())
        while stack:
            x = stack.pop()
            for act in self.enabled(x):
                if act not in self.hidden:
                    continue
                for nxt in self.successors(x, act):
                    k = self.key(nxt)
                    if k not in out:
                        self.budget.spend()
                        out[k] = nxt
                        stack.append(nxt)
        return out

    def advance_matching(self, states: dict, target_z: Valuation, tol: float) -> dict:
        """One sample step for every state, keeping those whose new visible
        valuation matches, then hidden-closing."""
        nxt: dict = {}
        for x in states.values():
            x2 = self.flow1(x)
            if valuations_close(self.z_of(x2), target_z, tol):
                nxt[self.key(x2)] = x2
        return self.hidden_closure(nxt)


# -- trace inclusion ------------------------------------------------------------------


@dataclass(frozen=True)
class InclusionCounterexample:
    """A candidate execution whose trace the reference cannot produce.

    ``moves`` alternates segment advances ("seg", steps) with discrete steps
    ("act", action, successor state); replaying them from ``start`` rebuilds
    the execution.
    """

    start: Valuation
    moves: tuple

    def execution(self, inst: FiniteInstance) -> ExecutionFragment:
        aut = inst.automaton
        x = self.start
        trajs: list[Trajectory] = []
        actions: list[str] = []
        pending = 0
        for move in self.moves:
            if move[0] == "start":
                continue
            if move[0] == "seg":
                pending += move[1]
            else:
                _tag, action, successor = move
                trajs.append(self._segment(aut, x, pending))
                actions.append(action)
                x = successor
                pending = 0
        trajs.append(self._segment(aut, x, pending))
        return ExecutionFragment(tuple(trajs), tuple(actions))

    @staticmethod
    def _segment(aut: Hioaw, x: Valuation, steps: int) -> Trajectory:
        from .trajectories import constant_trajectory

        inputs = constant_trajectory(
            aut.sig.inputs, aut.default_inputs, aut.time_step, max(steps, 0)
        )
        return aut.generate(x, inputs, steps * aut.time_step)

    def trace(self, inst: FiniteInstance) -> ExecutionFragment:
        return trace_of(self.execution(inst), inst.automaton.sig)


@dataclass
class InclusionVerdict:
    holds: bool
    depth: int
    counterexample: InclusionCounterexample | None = None
    explored: int = 0

    def __str__(self) -> str:
        if self.holds:
            return f"trace inclusion holds to depth {self.depth}"
        return f"trace inclusion fails at depth {self.depth}"


def check_trace_inclusion(
    a: FiniteInstance,
    b: FiniteInstance,
    depth: int = DEFAULT_DEPTH,
    field_tol: float = FIELD_TOL,
    budget: int = DEFAULT_BUDGET,
) -> InclusionVerdict:
    """Does the reference ``b`` exhibit every bounded trace of ``a``?

    Explores every execution of ``a`` with up to ``depth`` actions and menu
    trajectory durations, tracking the set of states in which ``b`` can have
    produced an identical trace so far.  Raises ``BoundExceeded`` when the
    budget runs out before a verdict.
    """
    if not comparable(a.automaton, b.automaton):
        raise IncompatibleAutomata(
            f"{a.automaton.name} and {b.automaton.name} have different interfaces"
        )
    bud = _Budget(budget)
    pa, pb = _Probe(a, bud), _Probe(b, bud)
    proven: set = set()

    def bkey(bset: dict) -> frozenset:
        return frozenset(bset.keys())

    def explore(x: Valuation, bset: dict, remaining: int, path: list):
        node = (pa.key(x), bkey(bset), remaining)
        if node in proven:
            return None
        for steps in a.menu_steps:
            cur_x = x
            cur_b = bset
            seg_path = list(path)
            failed = False
            for i in range(steps):
                cur_x = pa.flow1(cur_x)
                cur_b = pb.advance_matching(cur_b, pa.z_of(cur_x), field_tol)
                if not cur_b:
                    seg_path.append(("seg", i + 1))
                    return InclusionCounterexample(
                        _first_start(path, a), tuple(seg_path)
                    )
            seg_path.append(("seg", steps))
            if remaining > 0:
                for act in pa.enabled(cur_x):
                    for succ in pa.successors(cur_x, act):
                        if act in pa.hidden:
                            nxt_b = cur_b
                        else:
                            target = pa.z_of(succ)
                            landed: dict = {}
                            for y in cur_b.values():
                                for y2 in pb.successors(y, act):
                                    if valuations_close(pb.z_of(y2), target, field_tol):
                                        landed[pb.key(y2)] = y2
                            nxt_b = pb.hidden_closure(landed)
                            if not nxt_b:
                                return InclusionCounterexample(
                                    _first_start(path, a),
                                    tuple(seg_path + [("act", act, succ)]),
                                )
                        cex = explore(
                            succ,
                            nxt_b,
                            remaining - 1,
                            seg_path + [("act", act, succ)],
                        )
                        if cex is not None:
                            return cex
        proven.add(node)
        return None

    for x0 in a.automaton.starts:
        entry = {
            pb.key(y0): y0
            for y0 in b.automaton.starts
            if valuations_close(pb.z_of(y0), pa.z_of(x0), field_tol)
        }
        entry = pb.hidden_closure(entry)
        if not entry:
            return InclusionVerdict(
                False,
                depth,
                InclusionCounterexample(x0, (("seg", 0),)),
                bud.used,
            )
        cex = explore(x0, entry, depth, [("start", x0)])
        if cex is not None:
            return InclusionVerdict(False, depth, cex, bud.used)
    return InclusionVerdict(True, depth, None, bud.used)


def _first_start(path: list, a: FiniteInstance) -> Valuation:
    for entry in path:
        if entry[0] == "start":
            return entry[1]
    return a.automaton.starts[0]


def replay_counterexample(
    a: FiniteInstance,
    b: FiniteInstance,
    cex: InclusionCounterexample,
    field_tol: float = FIELD_TOL,
    budget: int = DEFAULT_BUDGET,
) -> bool:
    """Re-run the matcher along a recorded counterexample.

    Returns True when the divergence is confirmed, i.e. the reference really
    cannot match the recorded execution's trace.
    """
    bud = _Budget(budget)
    pa, pb = _Probe(a, bud), _Probe(b, bud)
    x = cex.start
    bset = {
        pb.key(y0): y0
        for y0 in b.automaton.starts
        if valuations_close(pb.z_of(y0), pa.z_of(x), field_tol)
    }
    bset = pb.hidden_closure(bset)
    for move in cex.moves:
        if move[0] == "start":
            continue
        if not bset:
            return True
        if move[0] == "seg":
            for _ in range(move[1]):
                x = pa.flow1(x)
                bset = pb.advance_matching(bset, pa.z_of(x), field_tol)
                if not bset:
                    return True
        else:
            _tag, act, succ = move
            if act in pa.hidden:
                x = succ
                continue
            target = pa.z_of(succ)
            landed: dict = {}
            for y in bset.values():
                for y2 in pb.successors(y, act):
                    if valuations_close(pb.z_of(y2), target, field_tol):
                        landed[pb.key(y2)] = y2
            bset = pb.hidden_closure(landed)
            x = succ
    return not bset


# -- simulation ---------------------------------------------------------------------


@dataclass
class SimulationVerdict:
    holds: bool
    depth: int
    failure: str | None = None

    def __str__(self) -> str:
        if self.holds:
            return f"simulation holds to depth {self.depth}"
        return f"simulation fails: {self.failure}"


def check_simulation(
    a: FiniteInstance,
    b: FiniteInstance,
    relation: Iterable[tuple[Valuation, Valuation]],
    depth: int = DEFAULT_DEPTH,
    field_tol: float = FIELD_TOL,
    budget: int = DEFAULT_BUDGET,
) -> SimulationVerdict:
    """Is the given relation a simulation from ``a`` to ``b``?

    Three conditions are checked on every related pair: starts are related;
    each single discrete step of ``a`` is matched by a visible-equivalent
    closed fragment of ``b`` ending in a related state; each menu trajectory
    of ``a`` is matched likewise.  ``depth`` bounds nothing here beyond the
    menu (kept for symmetry and reporting); the state sets are finite.
    """
    if not comparable(a.automaton, b.automaton):
        raise IncompatibleAutomata(
            f"{a.automaton.name} and {b.automaton.name} have different interfaces"
        )
    bud = _Budget(budget)
    pa, pb = _Probe(a, bud), _Probe(b, bud)
    pairs = [(x, y) for x, y in relation]
    related: dict = {}
    for x, y in pairs:
        related.setdefault(pa.key(x), set()).add(pb.key(y))

    def related_ok(x_end: Valuation, candidates: dict) -> bool:
        targets = related.get(pa.key(x_end), set())
        return any(k in targets for k in candidates)

    # condition 1: related start states
    for x0 in a.automaton.starts:
        targets = related.get(pa.key(x0), set())
        if not any(pb.key(y0) in targets for y0 in b.automaton.starts):
            return SimulationVerdict(
                False, depth, f"start state {dict(x0)} related to no start of the reference"
            )

    for x, y in pairs:
        base = pb.hidden_closure({pb.key(y): y})
        zx = pa.z_of(x)

        # condition 2: one discrete step of the candidate
        for act in pa.enabled(x):
            for succ in pa.successors(x, act):
                if not valuations_close(pb.z_of(y), zx, field_tol):
                    return SimulationVerdict(
                        False,
                        depth,
                        f"pair ({dict(x)}, {dict(y)}) differs visibly before {act!r}",
                    )
                if act in pa.hidden:
                    if not related_ok(succ, base):
                        return SimulationVerdict(
                            False,
                            depth,
                            f"hidden step {act!r} from {dict(x)} has no related match",
                        )
                else:
                    target = pa.z_of(succ)
                    landed: dict = {}
                    for y1 in base.values():
                        for y2 in pb.successors(y1, act):
                            if valuations_close(pb.z_of(y2), target, field_tol):
                                landed[pb.key(y2)] = y2
                    landed = pb.hidden_closure(landed)
                    if not related_ok(succ, landed):
                        return SimulationVerdict(
                            False,
                            depth,
                            f"step {act!r} from {dict(x)} has no related match",
                        )

        # condition 3: one menu trajectory of the candidate
        for steps in a.menu_steps:
            if not valuations_close(pb.z_of(y), zx, field_tol):
                return SimulationVerdict(
                    False, depth, f"pair ({dict(x)}, {dict(y)}) differs visibly"
                )
            cur_x = x
            cur_b = base
            ok = True
            for _ in range(steps):
                cur_x = pa.flow1(cur_x)
                cur_b = pb.advance_matching(cur_b, pa.z_of(cur_x), field_tol)
                if not cur_b:
                    ok = False
                    break
            if not ok or not related_ok(cur_x, cur_b):
                return SimulationVerdict(
                    False,
                    depth,
                    f"trajectory of {steps} steps from {dict(x)} has no related match",
                )
    return SimulationVerdict(True, depth, None)


@dataclass
class SoundnessReport:
    simulation: SimulationVerdict
    inclusion: InclusionVerdict | None

    @property
    def consistent(self) -> bool:
        """A passing simulation must come with passing inclusion."""
        if not self.simulation.holds:
            return True
        return self.inclusion is not None and self.inclusion.holds


def simulation_implies_inclusion_check(
    a: FiniteInstance,
    b: FiniteInstance,
    relation: Iterable[tuple[Valuation, Valuation]],
    depth: int = DEFAULT_DEPTH,
    field_tol: float = FIELD_TOL,
    budget: int = DEFAULT_BUDGET,
) -> SoundnessReport:
    """Check the simulation, and when it holds, confirm bounded trace
    inclusion at the same depth."""
    sim = check_simulation(a, b, relation, depth, field_tol, budget)
    incl = None
    if sim.holds:
        incl = check_trace_inclusion(a, b, depth, field_tol, budget)
    return SoundnessReport(sim, incl)
