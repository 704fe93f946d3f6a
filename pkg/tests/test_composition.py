"""Parallel composition: compatibility clauses, the composite automaton,
and recovering component runs from composite ones."""

import random

import pytest

from corpus import (
    DT,
    SMALL_GRID,
    compatible_pairs,
    random_finite_pair,
    random_finite_spec,
    toggler_spec,
)
from hioaw import (
    EPSILON,
    ConstantInputs,
    ExecutionFragment,
    Hioaw,
    RandomScheduler,
    SampledGenerator,
    SpaceGrid,
    Trajectory,
    Valuation,
    build_finite,
    check_compatible,
    compose,
    concat,
    decompose_execution,
    make_signature,
    project_trace,
    restrict_execution,
    shared_world_outputs,
    trace_of,
    trajectories_close,
    valuations_close,
    verify_decomposition,
)
from hioaw.errors import IncompatibleAutomata, NotAComposite
from hioaw.finite import FiniteSpec, LocationSpec, TransitionSpec
from hioaw.trajectories import names_of


def shell(name, sig, dt=DT, field_specs=None):
    """A do-nothing automaton around a signature, for compatibility checks."""
    internal = names_of(sig.internals)
    return Hioaw(
        name,
        sig,
        lambda x: True,
        (Valuation({n: 0.0 for n in internal}),),
        (),
        SampledGenerator(lambda x, u, dt_: x, lambda x: Valuation({})),
        dt,
        Valuation({}),
        field_specs or {},
    )


def failing_clauses(a, b):
    return [c.name for c in check_compatible(a, b).clauses if not c.ok]


def test_each_compat_clause_trips_on_its_own_violation():
    plain = shell("plain", make_signature(auto_internal=["zz"]))
    cases = [
        (
            make_signature(world_in=["g"]),
            make_signature(world_out=["g"]),
            "world inputs never world outputs",
        ),
        (
            make_signature(actions_hidden=["h"]),
            make_signature(actions_in=["h"]),
            "hidden actions private",
        ),
        (
            make_signature(auto_internal=["x"]),
            make_signature(auto_in=["x"]),
            "internal variables private",
        ),
        (
            make_signature(actions_out=["o"]),
            make_signature(actions_out=["o"]),
            "output actions disjoint",
        ),
        (
            make_signature(auto_out=["y"]),
            make_signature(auto_out=["y"]),
            "automaton outputs disjoint",
        ),
    ]
    for siga, sigb, clause in cases:
        got = failing_clauses(shell("a", siga), shell("b", sigb))
        assert got == [clause]
        assert failing_clauses(shell("a", siga), plain) == []


def test_shared_world_outputs_are_not_a_clash():
    a = shell("a", make_signature(world_out=["beam"]))
    b = shell("b", make_signature(world_out=["beam"]))
    assert check_compatible(a, b).compatible
    assert shared_world_outputs(a, b) == frozenset({"beam"})


def test_compose_rejects_bad_pairs():
    with pytest.raises(IncompatibleAutomata, match="output actions"):
        compose(
            shell("a", make_signature(actions_out=["o"])),
            shell("b", make_signature(actions_out=["o"])),
        )
    ok = make_signature(auto_internal=["xa"])
    other = make_signature(auto_internal=["xb"])
    with pytest.raises(IncompatibleAutomata, match="sample steps"):
        compose(shell("a", ok, dt=0.1), shell("b", other, dt=0.2))
    rng = random.Random(3)
    la = build_finite(random_finite_spec(rng, "gl", world_beam=True), DT, SMALL_GRID)
    moved = build_finite(
        random_finite_spec(rng, "gr", world_beam=True),
        DT,
        SpaceGrid(6, 5, 0.5, (0.0, 0.0)),
    )
    with pytest.raises(IncompatibleAutomata, match="different grid"):
        compose(la.automaton, moved.automaton)


def test_composite_signature_wires_outputs_to_inputs():
    siga = make_signature(
        auto_in=["ub", "ext"],
        auto_internal=["xa"],
        auto_out=["ya"],
        actions_in=["sync"],
        actions_out=["oa"],
    )
    sigb = make_signature(
        auto_internal=["xb"],
        auto_out=["ub"],
        actions_out=["sync"],
        actions_hidden=["hb"],
    )
    comp = compose(shell("a", siga), shell("b", sigb))
    s = comp.sig
    assert names_of(s.auto_in) == {"ext"}  # ub is now supplied internally
    assert names_of(s.auto_out) == {"ya", "ub"}
    assert s.actions_in == frozenset()  # sync is matched by b's output
    assert s.actions_out == {"oa", "sync"}
    assert s.actions_hidden == {"hb"}
    assert names_of(s.auto_internal) == {"xa", "xb"}
    assert comp.parts == (comp.parts[0], comp.parts[1])
    assert comp.name == "a||b"


def test_shared_actions_fire_jointly_and_block_when_one_side_cannot():
    left = build_finite(toggler_spec("L", go="go", back="L_back"), DT)
    right_spec = FiniteSpec(
        "R",
        locations=(
            LocationSpec("r0", (("r_lvl", 0.0),)),
            LocationSpec("r1", (("r_lvl", 5.0),)),
        ),
        starts=("r0",),
        transitions=(TransitionSpec("r0", "go", "r1"),),
        action_kinds=(("go", "input"),),
    )
    right = build_finite(right_spec, DT)
    comp = compose(left.automaton, right.automaton)
    assert comp.validate().ok
    assert "go" in comp.sig.actions_out  # output wins over input

    s0 = comp.starts[0]
    s1 = comp.step(s0, "go")
    assert s1 == Valuation({"L_loc": "hi", "R_loc": "r1"})
    s2 = comp.step(s1, "L_back")  # unshared action moves only its owner
    assert s2 == Valuation({"L_loc": "lo", "R_loc": "r1"})
    # the right part cannot take "go" from r1, so the pair blocks
    assert "go" not in comp.enabled_actions(s2, comp.default_inputs, changing_only=False)
    assert comp.gen.output(s1) == Valuation({"lvl": 1.0, "r_lvl": 5.0})


def test_composite_world_outputs_sum_per_cell():
    fa, fb = random_finite_pair(random.Random(11), 7)
    comp = compose(fa.automaton, fb.automaton)
    x = comp.starts[0]
    beam = comp.gen.output(x)["beam"]
    own_a = fa.automaton.gen.output(x.project(names_of(fa.automaton.sig.internals)))
    own_b = fb.automaton.gen.output(x.project(names_of(fb.automaton.sig.internals)))
    assert beam == own_a["beam"] + own_b["beam"]


def run_composite(comp, seed, horizon=2.0):
    return comp.execute(
        ConstantInputs(comp.default_inputs), horizon, RandomScheduler(comp, seed=seed)
    )


def test_decomposition_round_trips_on_the_corpus():
    rng = random.Random(21)
    for i, (a, b) in enumerate(compatible_pairs(rng, n_finite=6)):
        comp = compose(a, b)
        frag = run_composite(comp, seed=i, horizon=1.5 if i < 2 else 3.0)
        pa, pb = decompose_execution(comp, frag)
        assert verify_decomposition(comp, frag, pa, pb) == []
        # each component run uses exactly its own alphabet
        assert all(act in a.sig.actions for act in pa.actions)
        assert all(act in b.sig.actions for act in pb.actions)
        assert pa.total_steps == frag.total_steps
        assert pb.total_steps == frag.total_steps


def test_decompose_rejects_foreign_fragments():
    fa, fb = random_finite_pair(random.Random(5), 2)
    comp = compose(fa.automaton, fb.automaton)
    with pytest.raises(NotAComposite):
        decompose_execution(fa.automaton, run_composite(comp, 0))
    frag = fa.automaton.execute(ConstantInputs(Valuation({})), 1.0)
    with pytest.raises(NotAComposite, match="do not match"):
        decompose_execution(comp, frag)


def test_trace_projection_matches_composite_trace():
    rng = random.Random(33)
    for i in range(4):
        fa, fb = random_finite_pair(rng, 40 + i)
        comp = compose(fa.automaton, fb.automaton)
        frag = run_composite(comp, seed=i, horizon=3.0)
        shared = shared_world_outputs(*comp.parts)
        for side in (0, 1):
            part = comp.parts[side]
            proj = project_trace(comp, frag, side)
            keep = names_of(part.sig.external_vars) - shared
            lhs = restrict_execution(frag, part.sig.external_actions, keep)
            rhs = restrict_execution(
                proj.component_trace, part.sig.external_actions, keep
            )
            assert lhs == rhs
        ra = project_trace(comp, frag, 0).shared_residual
        pa, pb = decompose_execution(comp, frag)
        summed = (
            restrict_execution(pa, (), shared).trajectories[0]
            + restrict_execution(pb, (), shared).trajectories[0]
        )
        assert trajectories_close(ra, summed, 1e-9)


# -- slicing probes: composite pieces rebuilt from component pieces ---------------


def replay_padded(part, frag):
    """The component's run against the composite timeline, stutters kept."""
    in_names = names_of(part.sig.inputs)
    trajs = []
    for tr in frag.trajectories:
        x0 = tr.fval.project(names_of(part.sig.internals))
        ins = Trajectory(
            part.sig.inputs,
            tr.time_step,
            tuple(s.project(in_names) for s in tr.samples),
            closed=True,
        )
        trajs.append(part.generate(x0, ins, tr.steps * part.time_step))
    acts = tuple(a if a in part.sig.actions else EPSILON for a in frag.actions)
    return ExecutionFragment(tuple(trajs), acts)


def merge_samples(sa, sb, shared):
    vals = {}
    for n in sa.keys() | sb.keys():
        if n in shared:
            vals[n] = sa[n] + sb[n]
        elif n in sa.keys() and n in sb.keys():
            assert sa[n] == sb[n], f"shared input {n} diverged"
            vals[n] = sa[n]
        else:
            vals[n] = (sa if n in sa.keys() else sb)[n]
    return Valuation(vals)


def merge_trajectories(ta, tb, shared, like):
    assert ta.steps == tb.steps
    samples = tuple(
        merge_samples(sa, sb, shared) for sa, sb in zip(ta.samples, tb.samples)
    )
    return Trajectory(like.vars, like.time_step, samples, closed=like.closed)


def test_slicing_probes_commute_with_composition():
    rng = random.Random(55)
    pairs = compatible_pairs(rng, n_finite=3)
    for i, (a, b) in enumerate(pairs):
        comp = compose(a, b)
        frag = run_composite(comp, seed=100 + i, horizon=1.2 if i < 2 else 2.4)
        shared = shared_world_outputs(a, b)
        ra, rb = replay_padded(a, frag), replay_padded(b, frag)
        for idx, tr in enumerate(frag.trajectories):
            ta, tb = ra.trajectories[idx], rb.trajectories[idx]
            whole = merge_trajectories(ta, tb, shared, tr)
            assert trajectories_close(tr, whole, 1e-9)
            if tr.steps == 0:
                continue
            t_cut = rng.randrange(1, tr.steps + 1) * tr.time_step
            lhs = tr.prefix(t_cut)
            rhs = merge_trajectories(ta.prefix(t_cut), tb.prefix(t_cut), shared, lhs)
            assert trajectories_close(lhs, rhs, 1e-9)
            lhs = tr.suffix(t_cut)
            rhs = merge_trajectories(ta.suffix(t_cut), tb.suffix(t_cut), shared, lhs)
            assert trajectories_close(lhs, rhs, 1e-9)
            stitched = concat(
                [
                    merge_trajectories(
                        ta.prefix(t_cut), tb.prefix(t_cut), shared, tr.prefix(t_cut)
                    ),
                    merge_trajectories(
                        ta.suffix(t_cut), tb.suffix(t_cut), shared, tr.suffix(t_cut)
                    ),
                ]
            )
            assert trajectories_close(tr, stitched, 1e-9)


def test_trace_of_composite_keeps_only_externals():
    fa, fb = random_finite_pair(random.Random(77), 9)
    comp = compose(fa.automaton, fb.automaton)
    frag = run_composite(comp, seed=3, horizon=2.0)
    tr = trace_of(frag, comp.sig)
    ext = names_of(comp.sig.external_vars)
    assert names_of(tr.vars) == ext
    assert all(act in comp.sig.external_actions for act in tr.actions)
    assert tr.total_steps == frag.total_steps
