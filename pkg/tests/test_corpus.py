"""Generator-family tests: each generated machine is checked against an
independent ground truth (hand-built fixture, brute-force satisfiability,
or direct two-counter interpretation)."""

from __future__ import annotations

import pytest

from ibfifo.bounded import validate_bounded_spec
from ibfifo.core import run_configs
from ibfifo.corpus import (CnfFormula, MinskyProgram, canonical_contents,
                           gen_3sat, gen_cdp, gen_minsky, gen_random,
                           minsky_reachable)
from ibfifo.engine import decide_boundedness, decide_target, decide_termination
from ibfifo.errors import ValidationError
from ibfifo.normalform import check_normal_form, normalize_machine
from ibfifo.search import explore_fifo

from conftest import build_cdp


# -- connection/deconnection protocol ---------------------------------------

def test_cdp_matches_hand_built_machine():
    machine, specs = gen_cdp()
    reference = build_cdp()
    assert machine.states == reference.states
    assert machine.transitions == reference.transitions
    assert machine.initial == reference.initial
    assert machine.channels == reference.channels


def test_cdp_specs_validate():
    _, specs = gen_cdp()
    assert [s.channel for s in specs] == ["c1", "c2"]
    for spec in specs:
        validate_bounded_spec(spec)
    assert specs[0].tuple == (("a", "b"), ("a",), ("a", "b"))


def test_cdp_raw_machine_escapes_its_bound():
    """The protocol can keep re-opening with a after each acknowledgement,
    so its raw send projections leave the bound; only the normalized
    product stays inside.  This run is executable on the raw machine."""
    machine, specs = gen_cdp()
    trace = ["c1!a", "c1?a", "c2!e", "c2?e"] * 2 + ["c1!a"]
    configs = run_configs(machine, trace)
    assert configs[-1].state == "q10"
    assert not specs[0].prefix_dfa().accepts(("a", "a", "a"))
    report = check_normal_form(machine, specs)
    assert not report.ok
    assert report.counterexample is not None


# -- 3-CNF formulas ---------------------------------------------------------

def test_cnf_validation():
    with pytest.raises(ValidationError):
        CnfFormula(0, [])
    with pytest.raises(ValidationError):
        CnfFormula(2, [(1, 2)])
    with pytest.raises(ValidationError):
        CnfFormula(2, [(1, 0, 2)])
    with pytest.raises(ValidationError):
        CnfFormula(2, [(1, 3, 2)])


def test_cnf_brute_force_verdicts():
    sat = CnfFormula(3, [(1, -2, -3)])
    assert sat.satisfiable
    assignment = sat.satisfying_assignment()
    assert all(any(assignment[abs(l)] == (l > 0) for l in clause)
               for clause in sat.clauses)
    unsat = CnfFormula(1, [(1, 1, 1), (-1, -1, -1)])
    assert not unsat.satisfiable
    assert unsat.satisfying_assignment() is None
    with pytest.raises(ValidationError):
        CnfFormula(21, [(1, 2, 3)]).satisfying_assignment()


SAT_FORMULAS = [
    CnfFormula(3, [(1, -2, -3)]),
    CnfFormula(3, [(1, 2, 3), (-1, -2, -3), (1, -2, 3)]),
]
UNSAT_FORMULAS = [
    CnfFormula(1, [(1, 1, 1), (-1, -1, -1)]),
    CnfFormula(2, [(1, 1, 2), (1, 1, -2), (-1, -1, 2), (-1, -1, -2)]),
]


@pytest.mark.parametrize("flat", [False, True])
@pytest.mark.parametrize("cnf,expected", [(f, True) for f in SAT_FORMULAS]
                         + [(f, False) for f in UNSAT_FORMULAS])
def test_3sat_target_reachable_iff_satisfiable(cnf, expected, flat):
    machine, specs, target, facts = gen_3sat(cnf, flat=flat)
    assert facts["satisfiable"] == expected == cnf.satisfiable
    for spec in specs:
        validate_bounded_spec(spec)
    assert target.states == ("clean",)
    assert target.contents == ((),)
    bundle = normalize_machine(machine, specs)
    assert decide_target(bundle, target).is_yes == expected


@pytest.mark.parametrize("flat", [False, True])
def test_3sat_unbounded_variant_tracks_satisfiability(flat):
    for cnf, expected_sat in ((SAT_FORMULAS[0], True),
                              (UNSAT_FORMULAS[0], False)):
        machine, specs, _, _ = gen_3sat(cnf, flat=flat,
                                        unbounded_variant=True)
        bundle = normalize_machine(machine, specs)
        assert decide_boundedness(bundle).is_no == expected_sat
        assert decide_termination(bundle).is_no == expected_sat


def test_3sat_channel_never_exceeds_variable_count_plus_marker():
    cnf = SAT_FORMULAS[0]
    machine, specs, _, facts = gen_3sat(cnf)
    assert facts["channel_capacity"] == cnf.variables + 1
    result = explore_fifo(machine, specs)
    assert result.saturated
    longest = max(len(word) for config in result.configs()
                  for word in config.contents)
    assert longest <= cnf.variables + 1


def test_3sat_is_deterministic():
    first = gen_3sat(SAT_FORMULAS[1], flat=True)
    second = gen_3sat(SAT_FORMULAS[1], flat=True)
    assert first[0].states == second[0].states
    assert first[0].transitions == second[0].transitions
    assert first[1][0].tuple == second[1][0].tuple


def test_3sat_bound_repeats_one_block_per_clause_plus_guess():
    cnf = SAT_FORMULAS[1]
    machine, specs, _, facts = gen_3sat(cnf)
    block = facts["block"]
    assert block == ("l1", "L1", "l2", "L2", "l3", "L3", "#")
    (spec,) = specs
    assert spec.tuple == tuple((letter,) for letter in block) \
        * (len(cnf.clauses) + 1)
    # one polarity per variable then the marker is a valid projection
    assert spec.dfa().accepts(("l1", "L2", "l3", "#"))
    # two polarities of one variable in a single pass are not
    assert not spec.dfa().accepts(("l1", "L1", "#"))


# -- two-counter programs ---------------------------------------------------

def build_transfer_program() -> MinskyProgram:
    """Load three into the first counter, then move it item by item
    into the second."""
    return MinskyProgram(
        states=("s0", "s1", "s2", "loop", "bump", "done"),
        rules=(("inc", "s0", 1, "s1"), ("inc", "s1", 1, "s2"),
               ("inc", "s2", 1, "loop"),
               ("dec", "loop", 1, "bump", "done"),
               ("inc", "bump", 2, "loop")),
        initial="s0")


def test_minsky_program_validation():
    with pytest.raises(ValidationError):
        MinskyProgram(states=("s",), rules=(), initial="t")
    with pytest.raises(ValidationError):
        MinskyProgram(states=("s",), rules=(("inc", "s", 1, "zz"),),
                      initial="s")
    with pytest.raises(ValidationError):
        MinskyProgram(states=("s",), rules=(("inc", "s", 3, "s"),),
                      initial="s")
    with pytest.raises(ValidationError):
        MinskyProgram(states=("s",), rules=(("dec", "s", 1, "s"),),
                      initial="s")


def test_interpreter_pins_transfer_program():
    reachable = minsky_reachable(build_transfer_program())
    assert ("done", 0, 3) in reachable
    assert ("loop", 3, 0) in reachable
    assert ("loop", 0, 3) in reachable
    assert ("done", 3, 0) not in reachable


def test_interpreter_guards_against_unbounded_counters():
    runaway = MinskyProgram(states=("u",), rules=(("inc", "u", 1, "u"),),
                            initial="u")
    with pytest.raises(ValidationError):
        minsky_reachable(runaway)
    # a larger cap admits more of the ramp
    assert len(minsky_reachable(runaway, max_counter=9)) == 10


def _program_states_seen_by_machine(machine, prog):
    result = explore_fifo(machine)
    assert result.saturated
    seen = {}
    for config in result.configs():
        if config.state in prog.states:
            seen.setdefault(config.state, set()).add(config.contents[0])
    return {state: frozenset(words) for state, words in seen.items()}


@pytest.mark.parametrize("prog", [
    MinskyProgram(states=("q0", "q1"), rules=(("inc", "q0", 1, "q1"),),
                  initial="q0"),
    MinskyProgram(states=("q0", "q1", "q2"),
                  rules=(("dec", "q0", 1, "q1", "q2"),), initial="q0"),
    MinskyProgram(states=("a0", "a1", "a2", "halt"),
                  rules=(("inc", "a0", 2, "a1"), ("inc", "a1", 2, "a2"),
                         ("dec", "a2", 2, "a2", "halt")),
                  initial="a0"),
    build_transfer_program(),
])
def test_machine_agrees_with_interpreter(prog):
    machine, facts = gen_minsky(prog)
    assert _program_states_seen_by_machine(machine, prog) == facts


def test_minsky_facts_use_canonical_contents():
    machine, facts = gen_minsky(build_transfer_program())
    assert canonical_contents(2, 1) == ("$", "a", "a", "#", "b", "&")
    assert facts["done"] == frozenset({canonical_contents(0, 3)})
    assert facts["s0"] == frozenset({canonical_contents(0, 0)})
    assert canonical_contents(1, 2) in facts["loop"]


def test_minsky_zero_branch_skips_decrement():
    prog = MinskyProgram(states=("q0", "q1", "q2"),
                         rules=(("dec", "q0", 2, "q1", "q2"),),
                         initial="q0")
    machine, facts = gen_minsky(prog)
    assert "q1" not in facts
    assert facts["q2"] == frozenset({canonical_contents(0, 0)})


# -- random bundles ---------------------------------------------------------

def test_random_is_deterministic_per_seed():
    first_machine, first_specs = gen_random(1)
    second_machine, second_specs = gen_random(1)
    assert first_machine.states == second_machine.states
    assert first_machine.transitions == second_machine.transitions
    assert [s.tuple for s in first_specs] == [s.tuple for s in second_specs]
    other_machine, _ = gen_random(2)
    assert (first_machine.transitions != other_machine.transitions
            or first_machine.states != other_machine.states)


@pytest.mark.parametrize("seed", range(8))
def test_random_bundles_validate_and_survive_normalization(seed):
    machine, specs = gen_random(seed)
    for spec in specs:
        validate_bounded_spec(spec)
    bundle = normalize_machine(machine, specs)
    surviving = {bundle.machine_state(s) for s in bundle.machine.states}
    assert surviving == set(machine.states)
    assert any(t.action.is_send for t in bundle.machine.transitions)


def test_random_respects_size_parameters():
    machine, specs = gen_random(7, states=6, channels=3, max_words=3,
                                max_word_length=3, transitions=10)
    assert len(machine.states) == 6
    assert len(specs) == 3
    assert all(1 <= len(spec.tuple) <= 3 for spec in specs)
    assert all(1 <= len(word) <= 3 for spec in specs for word in spec.tuple)
    with pytest.raises(ValidationError):
        gen_random(0, states=0)
