#!/usr/bin/env python3
"""Bounded refinement checking on a planner/implementation pair.

Builds a two-level planner, an implementation that adds a hidden detour
location, and a deliberately broken variant whose detour is visible in the
output.  Runs trace inclusion and simulation checks on both, shows the
counterexample for the broken one, and demonstrates that the verdicts
survive composition with an independent partner automaton.

Usage:
    python3 scripts/refinement_demo.py [--depth 6]
"""

import argparse
import sys

from hioaw import (
    check_simulation,
    check_trace_inclusion,
    finite_compose,
    product_relation,
    replay_counterexample,
)
from hioaw.finite import FiniteSpec, LocationSpec, TransitionSpec, build_finite
from hioaw.refinement import FiniteInstance
from hioaw.trajectories import Valuation

DT = 0.1


def planner() -> FiniteInstance:
    spec = FiniteSpec(
        name="plan",
        locations=(
            LocationSpec("lo", (("lvl", 0.0),)),
            LocationSpec("hi", (("lvl", 1.0),)),
        ),
        starts=("lo",),
        transitions=(TransitionSpec("lo", "go", "hi"), TransitionSpec("hi", "back", "lo")),
        action_kinds=(("back", "output"), ("go", "output")),
    )
    return build_finite(spec, DT)


def implementation(name: str, mid_level: float) -> FiniteInstance:
    spec = FiniteSpec(
        name=name,
        locations=(
            LocationSpec("lo", (("lvl", 0.0),)),
            LocationSpec("mid", (("lvl", mid_level),)),
            LocationSpec("hi", (("lvl", 1.0),)),
        ),
        starts=("lo",),
        transitions=(
            TransitionSpec("lo", "go", "hi"),
            TransitionSpec("hi", "back", "lo"),
            TransitionSpec("lo", "slip", "mid"),
            TransitionSpec("mid", "go", "hi"),
        ),
        action_kinds=(("back", "output"), ("go", "output"), ("slip", "hidden")),
    )
    return build_finite(spec, DT)


def partner() -> FiniteInstance:
    spec = FiniteSpec(
        name="ctx",
        locations=(
            LocationSpec("idle", (("ctx_lvl", 0.0),)),
            LocationSpec("busy", (("ctx_lvl", 3.0),)),
        ),
        starts=("idle",),
        transitions=(
            TransitionSpec("idle", "ctx_go", "busy"),
            TransitionSpec("busy", "ctx_back", "idle"),
        ),
        action_kinds=(("ctx_back", "output"), ("ctx_go", "output")),
    )
    return build_finite(spec, DT)


def show_inclusion(label: str, a: FiniteInstance, b: FiniteInstance, depth: int) -> bool:
    verdict = check_trace_inclusion(a, b, depth=depth)
    print(f"{label}: {'holds' if verdict.holds else 'fails'} "
          f"({verdict.explored} state pairs explored)")
    if not verdict.holds:
        cex = verdict.counterexample
        acts = list(cex.execution(a).actions)
        print(f"  counterexample actions: {acts}")
        print(f"  replay confirms divergence: {replay_counterexample(a, b, cex)}")
    return verdict.holds


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=6, help="action-depth bound")
    args = ap.parse_args(argv)

    plan = planner()
    impl = implementation("impl", mid_level=0.0)
    noisy = implementation("noisy", mid_level=2.0)

    ok = show_inclusion("impl <= plan", impl, plan, args.depth)
    show_inclusion("noisy <= plan", noisy, plan, args.depth)

    rel = tuple(
        (Valuation({"impl_loc": x}), Valuation({"plan_loc": y}))
        for x, y in [("lo", "lo"), ("mid", "lo"), ("hi", "hi")]
    )
    sim = check_simulation(impl, plan, rel)
    print(f"simulation impl -> plan via lo:lo, mid:lo, hi:hi: "
          f"{'holds' if sim.holds else sim.failure}")

    ctx = partner()
    comp_ok = show_inclusion(
        "impl||ctx <= plan||ctx",
        finite_compose(impl, ctx),
        finite_compose(plan, ctx),
        args.depth,
    )
    lifted = product_relation(rel, ctx)
    lifted_sim = check_simulation(
        finite_compose(impl, ctx), finite_compose(plan, ctx), lifted, depth=args.depth
    )
    print(f"lifted simulation over {len(lifted)} product pairs: "
          f"{'holds' if lifted_sim.holds else lifted_sim.failure}")

    return 0 if (ok and sim.holds and comp_ok and lifted_sim.holds) else 1


if __name__ == "__main__":
    sys.exit(main())
