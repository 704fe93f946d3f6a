"""Executions (alternating trajectories and actions), their restrictions,
traces, and stutter padding.

An execution fragment is ``t0 a1 t1 a2 ... an tn``: n actions separating n+1
trajectories over one variable set.  Restricting a fragment to an action set
keeps matching actions as junctions and erases the rest, concatenating the
flanking trajectories; restricting to a variable set projects every
trajectory.  A *trace* is the restriction to the external actions and
external variables of an automaton.

Padding inserts stutter junctions (the reserved action ``EPSILON``) at chosen
sample-aligned times, splitting trajectories without changing behaviour.
``unpad`` undoes any padding; ``align_paddings`` pads several executions of
equal duration so that they all break at the same instants, which makes their
trajectories correspond index by index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    DurationMismatch,
    GridMisaligned,
    MalformedPadding,
    TimeOutOfDomain,
    VarSetMismatch,
)
from .trajectories import (
    IoRole,
    Trajectory,
    Valuation,
    VarName,
    concat,
    names_of,
    point_trajectory,
    trajectories_close,
)

# Reserved stutter action; never part of an automaton's alphabet.
EPSILON = "eps"


@dataclass(frozen=True)
class ExecutionFragment:
    """An alternating sequence of trajectories and actions.

    Structural invariants (variable sets, step, closedness of non-final
    trajectories) are enforced here; whether junctions follow an automaton's
    transition relation is the automaton's business, not this container's.
    """

    trajectories: tuple[Trajectory, ...]
    actions: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.trajectories:
            raise ValueError("an execution fragment needs at least one trajectory")
        if len(self.actions) != len(self.trajectories) - 1:
            raise ValueError(
                f"{len(self.trajectories)} trajectories need "
                f"{len(self.trajectories) - 1} actions, got {len(self.actions)}"
            )
        head = self.trajectories[0]
        for i, tr in enumerate(self.trajectories):
            if names_of(tr.vars) != names_of(head.vars) or tr.time_step != head.time_step:
                raise VarSetMismatch(f"trajectory {i} differs in variables or step")
            if i < len(self.trajectories) - 1 and not tr.closed:
                raise VarSetMismatch(f"trajectory {i} is open but not final")

    # -- views -----------------------------------------------------------------

    @property
    def vars(self) -> frozenset[VarName]:
        return self.trajectories[0].vars

    @property
    def time_step(self) -> float:
        return self.trajectories[0].time_step

    @property
    def total_steps(self) -> int:
        return sum(tr.steps for tr in self.trajectories)

    @property
    def duration(self) -> float:
        return self.total_steps * self.time_step

    @property
    def fval(self) -> Valuation:
        return self.trajectories[0].fval

    @property
    def lval(self) -> Valuation:
        return self.trajectories[-1].lval

    @property
    def is_padded(self) -> bool:
        return EPSILON in self.actions

    def junction_offsets(self) -> list[int]:
        """Global sample offset at which each action occurs."""
        out = []
        off = 0
        for tr, _act in zip(self.trajectories, self.actions):
            off += tr.steps
            out.append(off)
        return out

    def project(self, keep: Iterable[VarName | str]) -> "ExecutionFragment":
        return ExecutionFragment(
            tuple(tr.project(keep) for tr in self.trajectories), self.actions
        )


def executions_close(
    a: ExecutionFragment, b: ExecutionFragment, field_tol: float = 0.0
) -> bool:
    """Same actions at the same places, trajectories equal sample-wise."""
    if a.actions != b.actions or len(a.trajectories) != len(b.trajectories):
        return False
    return all(
        trajectories_close(ta, tb, field_tol)
        for ta, tb in zip(a.trajectories, b.trajectories)
    )


def restrict_execution(
    frag: ExecutionFragment,
    keep_actions: Iterable[str],
    keep_vars: Iterable[VarName | str],
) -> ExecutionFragment:
    """Keep only the given actions and variables.

    Erased actions (stutters always among them) disappear as junctions: the
    trajectories around them are concatenated, the earlier one's final
    valuation surviving at the join.
    """
    keep_act = frozenset(keep_actions) - {EPSILON}
    projected = [tr.project(keep_vars) for tr in frag.trajectories]
    out_trajs: list[Trajectory] = []
    out_actions: list[str] = []
    cur = projected[0]
    for act, nxt in zip(frag.actions, projected[1:]):
        if act in keep_act:
            out_trajs.append(cur)
            out_actions.append(act)
            cur = nxt
        else:
            cur = concat([cur, nxt])
    out_trajs.append(cur)
    return ExecutionFragment(tuple(out_trajs), tuple(out_actions))


def trace_of(frag: ExecutionFragment, sig) -> ExecutionFragment:
    """The externally visible part of a fragment: external actions over
    external variables."""
    return restrict_execution(frag, sig.external_actions, sig.external_vars)


# -- step-indexed slicing helpers -------------------------------------------------


def _prefix_steps(tr: Trajectory, k: int) -> Trajectory:
    return Trajectory(tr.vars, tr.time_step, tr.samples[: k + 1], closed=True)


def _suffix_steps(tr: Trajectory, k: int) -> Trajectory:
    return Trajectory(tr.vars, tr.time_step, tr.samples[k:], closed=tr.closed)


def prefix_execution(
    frag: ExecutionFragment, traj_index: int, local_steps: int
) -> ExecutionFragment:
    """The fragment up to sample ``local_steps`` of trajectory ``traj_index``."""
    if not (0 <= traj_index < len(frag.trajectories)):
        raise TimeOutOfDomain(f"no trajectory {traj_index}")
    tr = frag.trajectories[traj_index]
    if not (0 <= local_steps <= tr.steps):
        raise TimeOutOfDomain(f"trajectory {traj_index} has only {tr.steps} steps")
    trajs = list(frag.trajectories[:traj_index]) + [_prefix_steps(tr, local_steps)]
    return ExecutionFragment(tuple(trajs), frag.actions[:traj_index])


# -- padding ---------------------------------------------------------------------


def pad(frag: ExecutionFragment, cut_times: Iterable[float]) -> ExecutionFragment:
    """Insert stutter junctions at the given times.

    Every cut must land on the sample lattice and strictly inside one
    trajectory: cutting at an existing junction (or twice at the same spot)
    would create a zero-length piece and is rejected.
    """
    dt = frag.time_step
    offsets: list[int] = []
    for t in cut_times:
        k = t / dt
        rk = round(k)
        if abs(k - rk) > 1e-9:
            raise GridMisaligned(f"cut {t} is not a multiple of the step {dt}")
        offsets.append(int(rk))
    if len(set(offsets)) != len(offsets):
        raise GridMisaligned("duplicate cut would create a zero-length piece")
    total = frag.total_steps
    for o in offsets:
        if not (0 <= o <= total):
            raise TimeOutOfDomain(f"cut at step {o} outside [0, {total}]")
    boundaries = {0, total} | set(frag.junction_offsets())
    for o in offsets:
        if o in boundaries:
            raise GridMisaligned(
                f"cut at step {o} hits a junction; zero-length pieces are not allowed"
            )
    trajs: list[Trajectory] = []
    actions: list[str] = []
    base = 0
    cuts = sorted(offsets)
    for i, tr in enumerate(frag.trajectories):
        inner = [o - base for o in cuts if base < o < base + tr.steps]
        prev = 0
        for local in inner:
            trajs.append(
                Trajectory(tr.vars, dt, tr.samples[prev : local + 1], closed=True)
            )
            actions.append(EPSILON)
            prev = local
        trajs.append(_suffix_steps(tr, prev))
        base += tr.steps
        if i < len(frag.actions):
            actions.append(frag.actions[i])
    return ExecutionFragment(tuple(trajs), tuple(actions))


def _internal_names(vars: frozenset[VarName]) -> frozenset[str]:
    return frozenset(v.name for v in vars if v.io is IoRole.INTERNAL)


def unpad(frag: ExecutionFragment) -> ExecutionFragment:
    """Remove every stutter junction, concatenating across it.

    A stutter junction must not change the internal state; if it does the
    padding is malformed.
    """
    internal = _internal_names(frag.vars)
    trajs: list[Trajectory] = []
    actions: list[str] = []
    cur = frag.trajectories[0]
    for act, nxt in zip(frag.actions, frag.trajectories[1:]):
        if act == EPSILON:
            if cur.lval.project(internal) != nxt.fval.project(internal):
                raise MalformedPadding(
                    "stutter junction joins different internal states"
                )
            cur = concat([cur, nxt])
        else:
            trajs.append(cur)
            actions.append(act)
            cur = nxt
    trajs.append(cur)
    return ExecutionFragment(tuple(trajs), tuple(actions))


def align_paddings(runs: Sequence[ExecutionFragment]) -> list[ExecutionFragment]:
    """Pad all runs so their junctions coincide instant for instant.

    All runs must have the same step and total duration.  The result has, for
    every run, the same number of trajectories with identical per-index
    lengths: junction instants are the union of all runs' junction instants,
    repeated to the largest multiplicity (simultaneous actions produce
    zero-length point trajectories, matched in the others by stutters).
    """
    runs = list(runs)
    if not runs:
        return []
    if len({r.time_step for r in runs}) != 1:
        raise DurationMismatch("runs use different sample steps")
    if len({r.total_steps for r in runs}) != 1:
        raise DurationMismatch("runs cover different total durations")
    target: dict[int, int] = {}
    for r in runs:
        mult: dict[int, int] = {}
        for o in r.junction_offsets():
            mult[o] = mult.get(o, 0) + 1
        for o, m in mult.items():
            target[o] = max(target.get(o, 0), m)
    return [_pad_to_junctions(r, target) for r in runs]


def _pad_to_junctions(
    frag: ExecutionFragment, target: dict[int, int]
) -> ExecutionFragment:
    dt = frag.time_step
    trajs: list[Trajectory] = list(frag.trajectories)
    actions: list[str] = list(frag.actions)

    def starts() -> list[int]:
        out, off = [], 0
        for tr in trajs:
            out.append(off)
            off += tr.steps
        return out

    for o in sorted(target):
        need = target[o]
        have = sum(
            1
            for i, tr in enumerate(trajs[:-1])
            if starts()[i] + tr.steps == o
        )
        if have == 0:
            # no junction here yet: split the trajectory spanning this offset,
            # or stutter a point at the very ends
            st = starts()
            placed = False
            for i, tr in enumerate(trajs):
                if st[i] < o < st[i] + tr.steps:
                    local = o - st[i]
                    left = _prefix_steps(tr, local)
                    right = _suffix_steps(tr, local)
                    trajs[i : i + 1] = [left, right]
                    actions.insert(i, EPSILON)
                    placed = True
                    break
            if not placed:
                if o == 0:
                    pt = point_trajectory(trajs[0].vars, trajs[0].fval, dt)
                    trajs.insert(0, pt)
                    actions.insert(0, EPSILON)
                else:
                    pt = point_trajectory(trajs[-1].vars, trajs[-1].lval, dt)
                    trajs.append(pt)
                    actions.append(EPSILON)
            have = 1
        while have < need:
            # add a stutter + point right after the last junction at this offset
            st = starts()
            pos = max(
                i for i, tr in enumerate(trajs[:-1]) if st[i] + tr.steps == o
            )
            pt = point_trajectory(trajs[pos + 1].vars, trajs[pos + 1].fval, dt)
            trajs.insert(pos + 1, pt)
            actions.insert(pos + 1, EPSILON)
            have += 1
    return ExecutionFragment(tuple(trajs), tuple(actions))
