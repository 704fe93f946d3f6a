"""Automaton mechanics: validation, stepping, generation, urgency, runs."""

import pytest

from corpus import DT
from hioaw import (
    ConstantInputs,
    Hioaw,
    RandomScheduler,
    SampledGenerator,
    Trajectory,
    TransitionRule,
    UrgentScheduler,
    Valuation,
    auto_var,
    constant_trajectory,
    make_signature,
)
from hioaw.errors import (
    ActionNotEnabled,
    GridMisaligned,
    InputDomainTooShort,
    NondeterministicUnresolved,
    SchedulerDeadlock,
)


def heater(trip_at=0.45, extra_rules=(), starts=None):
    """Integrator with an urgent trip: temp follows power until tripped."""
    sig = make_signature(
        auto_in=["power"],
        auto_internal=["temp", "running"],
        auto_out=["twice"],
        actions_hidden=["trip"],
        actions_out=["reset"],
    )

    def flow(x, u, dt):
        if not x["running"]:
            return x
        return x.assoc(temp=x["temp"] + u["power"] * dt)

    rules = (
        TransitionRule(
            "trip",
            guard=lambda x, u: x["temp"] >= trip_at,
            effect=lambda x: x.assoc(running=False),
            urgent=True,
        ),
        TransitionRule(
            "reset",
            guard=lambda x, u: not x["running"],
            effect=lambda x: x.assoc(running=True, temp=0.0),
        ),
        *extra_rules,
    )
    return Hioaw(
        name="heater",
        sig=sig,
        state_pred=lambda x: set(x.keys()) == {"temp", "running"}
        and isinstance(x["running"], bool),
        starts=starts or (Valuation({"temp": 0.0, "running": True}),),
        rules=rules,
        gen=SampledGenerator(flow, lambda x: Valuation({"twice": x["temp"] * 2.0})),
        time_step=DT,
        default_inputs=Valuation({"power": 1.0}),
    )


POWER_VAR = frozenset([auto_var("power")])


def power_ramp(values):
    return Trajectory(POWER_VAR, DT, tuple(Valuation({"power": float(v)}) for v in values))


def test_validate_accepts_the_heater():
    assert heater().validate().ok


def test_validate_reports_structural_problems():
    base = heater()
    sig = make_signature(
        auto_in=["power", "temp"],  # clashes with an internal
        auto_internal=["temp", "running"],
        actions_hidden=["trip", "eps"],
        actions_out=["trip"],  # duplicated across kinds
    )
    bad = Hioaw(
        name="bad",
        sig=sig,
        state_pred=lambda x: False,  # start violates the predicate
        starts=(Valuation({"temp": 0.0, "running": True}),),
        rules=(TransitionRule("ghost", lambda x, u: False, lambda x: x),),
        gen=base.gen,
        time_step=DT,
        default_inputs=Valuation({}),  # missing "power"
    )
    findings = "\n".join(bad.validate().findings)
    assert "share ['temp']" in findings
    assert "share ['trip']" in findings
    assert "'eps' is reserved" in findings
    assert "violates the state predicate" in findings
    assert "undeclared action 'ghost'" in findings
    assert "default inputs missing" in findings


def test_validate_flags_missing_field_spec():
    base = heater()
    sig = make_signature(
        world_out=["beam"],
        auto_in=["power"],
        auto_internal=["temp", "running"],
    )
    bad = Hioaw(
        "bad2", sig, base.state_pred, base.starts, (), base.gen, DT, base.default_inputs
    )
    assert any("no grid/kind spec" in f for f in bad.validate().findings)


def test_generate_matches_euler_oracle():
    a = heater()
    powers = [0.5, 1.0, -0.25, 2.0, 0.0, 1.0]
    inputs = power_ramp(powers)
    traj = a.generate(Valuation({"temp": 0.0, "running": True}), inputs, 0.5)

    # independent Euler chain, same order of operations
    temp, expect = 0.0, []
    for k in range(6):
        if k > 0:
            temp = temp + powers[k - 1] * DT
        expect.append(temp)
    assert [s["temp"] for s in traj.samples] == expect
    assert [s["power"] for s in traj.samples] == [float(p) for p in powers]
    assert [s["twice"] for s in traj.samples] == [t * 2.0 for t in expect]
    assert traj.steps == 5


def test_generate_rejects_bad_durations():
    a = heater()
    x0 = a.starts[0]
    with pytest.raises(InputDomainTooShort):
        a.generate(x0, power_ramp([1.0, 1.0]), 0.5)
    with pytest.raises(GridMisaligned):
        a.generate(x0, power_ramp([1.0] * 9), 0.55)


def test_evolve_stops_at_urgent_interrupt():
    a = heater()
    inputs = constant_trajectory(POWER_VAR, Valuation({"power": 1.0}), DT, 20)
    traj = a.evolve(a.starts[0], inputs, 2.0)
    # temp reaches the 0.45 threshold at the fifth step (temp = 0.5)
    assert traj.steps == 5
    assert traj.lval["temp"] == pytest.approx(0.5)
    # already-tripped start: the urgent effect changes nothing, no interrupt
    tripped = Valuation({"temp": 9.0, "running": False})
    assert a.evolve(tripped, inputs, 1.0).steps == 10
    # a start beyond the threshold interrupts immediately: a point trajectory
    hot = Valuation({"temp": 9.0, "running": True})
    assert a.evolve(hot, inputs, 1.0).steps == 0


def test_enabled_actions_skips_no_op_rules():
    a = heater()
    hot = Valuation({"temp": 9.0, "running": True})
    assert a.enabled_actions(hot, a.default_inputs) == ["trip"]
    tripped = Valuation({"temp": 9.0, "running": False})
    assert a.enabled_actions(tripped, a.default_inputs) == ["reset"]
    assert a.enabled_actions(tripped, a.default_inputs, changing_only=False) == [
        "trip",
        "reset",
    ]


def test_step_and_successors():
    a = heater()
    hot = Valuation({"temp": 9.0, "running": True})
    after = a.step(hot, "trip")
    assert after == Valuation({"temp": 9.0, "running": False})
    with pytest.raises(ActionNotEnabled):
        a.step(a.starts[0], "reset")
    assert a.successors(hot, "trip") == [after]
    assert a.successors(a.starts[0], "reset") == []


def test_step_resolves_rule_ties_by_priority():
    mk = lambda to, prio: TransitionRule(
        "reset",
        guard=lambda x, u: not x["running"],
        effect=lambda x: x.assoc(running=True, temp=to),
        priority=prio,
    )
    tripped = Valuation({"temp": 9.0, "running": False})
    ambiguous = heater(extra_rules=(mk(5.0, None),))
    with pytest.raises(NondeterministicUnresolved):
        ambiguous.step(tripped, "reset")
    ordered = heater(extra_rules=(mk(5.0, 2),))
    # both rules fire; the base rule has no priority, so still unresolved
    with pytest.raises(NondeterministicUnresolved):
        ordered.step(tripped, "reset")
    a = heater(trip_at=0.45, extra_rules=(mk(5.0, 2), mk(7.0, 3)))
    # drop the unprioritized base rule by using a fresh automaton
    only_prios = Hioaw(
        a.name,
        a.sig,
        a.state_pred,
        a.starts,
        tuple(r for r in a.rules if r.priority is not None),
        a.gen,
        a.time_step,
        a.default_inputs,
    )
    assert only_prios.step(tripped, "reset")["temp"] == 7.0
    assert len(only_prios.successors(tripped, "reset")) == 2


def test_execute_frozen_run():
    a = heater()
    frag = a.execute(ConstantInputs(a.default_inputs), 1.0)
    assert frag.actions == ("trip",)
    assert [t.steps for t in frag.trajectories] == [5, 5]
    # after the trip the flow freezes
    assert frag.lval["temp"] == pytest.approx(0.5)
    assert frag.lval["running"] is False
    # junction: pre-state closes the first trajectory, post-state opens the next
    assert frag.trajectories[0].lval["running"] is True
    assert frag.trajectories[1].fval["running"] is False
    assert frag.trajectories[1].fval["temp"] == frag.trajectories[0].lval["temp"]


def test_execute_needs_explicit_start_when_ambiguous():
    two = heater(
        starts=(
            Valuation({"temp": 0.0, "running": True}),
            Valuation({"temp": 0.2, "running": True}),
        )
    )
    with pytest.raises(ActionNotEnabled):
        two.execute(ConstantInputs(two.default_inputs), 0.5)
    frag = two.execute(
        ConstantInputs(two.default_inputs), 0.2, start=Valuation({"temp": 0.2, "running": True})
    )
    assert frag.fval["temp"] == 0.2
    assert two.is_start(frag.fval.project(["temp", "running"]))


def test_execute_detects_firing_livelock():
    toggle = TransitionRule(
        "trip",  # urgent and always state-changing: never lets time pass
        guard=lambda x, u: True,
        effect=lambda x: x.assoc(running=not x["running"]),
        urgent=True,
    )
    a = heater(extra_rules=(toggle,))
    with pytest.raises(SchedulerDeadlock):
        a.execute(ConstantInputs(a.default_inputs), 0.5)


def test_random_scheduler_is_seed_deterministic():
    a = heater()
    env = lambda: ConstantInputs(a.default_inputs)
    one = a.execute(env(), 2.0, RandomScheduler(a, seed=4))
    two = a.execute(env(), 2.0, RandomScheduler(a, seed=4))
    assert one == two
    runs = {a.execute(env(), 2.0, RandomScheduler(a, seed=s)).actions for s in range(8)}
    assert len(runs) > 1  # different seeds explore different schedules
    # urgent actions still always fire
    assert all(acts[0] == "trip" for acts in runs)


def test_urgent_scheduler_ignores_non_urgent_actions():
    a = heater()
    frag = a.execute(ConstantInputs(a.default_inputs), 3.0, UrgentScheduler(a))
    assert frag.actions == ("trip",)
