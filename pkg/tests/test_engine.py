"""Tests for the decision engine over normalized bundles."""

import pytest

from conftest import build_cdp, build_cdp_specs
from ibfifo.automata import FiniteAutomaton, regex_to_automaton, word_automaton
from ibfifo.bounded import BoundedLangSpec
from ibfifo.core import (
    CounterConfig,
    CounterMachine,
    DEC,
    FifoMachine,
    INC,
    counter_transition,
    receive,
    run_configs,
    send,
)
from ibfifo.engine import (
    PumpWitness,
    Verdict,
    counter_reachability,
    coverability_filter,
    decide_boundedness,
    decide_control_state,
    decide_deadlock,
    decide_rational_reachability,
    decide_reachability,
    decide_termination,
)
from ibfifo.errors import ValidationError
from ibfifo.normalform import normalize_machine
from ibfifo.relations import RationalRelationSpec


def actions(verdict):
    return tuple(str(a) for a in verdict.witness or ())


@pytest.fixture(scope="module")
def one_shot():
    machine = FifoMachine(
        states=["p", "q"], channels=["c"], letters={"c": ("a",)},
        transitions=[("p", send("c", "a"), "q")], initial="p")
    spec = BoundedLangSpec("c", ("a",), regex_to_automaton("a*", ["a"]))
    return normalize_machine(machine, [spec])


@pytest.fixture(scope="module")
def send_loop():
    machine = FifoMachine(
        states=["p"], channels=["c"], letters={"c": ("a",)},
        transitions=[("p", send("c", "a"), "p")], initial="p")
    spec = BoundedLangSpec("c", ("a",), regex_to_automaton("a*", ["a"]))
    return normalize_machine(machine, [spec])


@pytest.fixture(scope="module")
def drain_cycle():
    machine = FifoMachine(
        states=["q", "q2"], channels=["c"], letters={"c": ("a",)},
        transitions=[("q", send("c", "a"), "q2"),
                     ("q2", receive("c", "a"), "q")],
        initial="q")
    spec = BoundedLangSpec("c", ("a",), regex_to_automaton("a*", ["a"]))
    return normalize_machine(machine, [spec])


class TestVerdictShape:
    def test_answer_flags(self):
        assert Verdict("yes").is_yes
        assert Verdict("no").is_no
        assert Verdict("unknown").is_unknown

    def test_str_mentions_method_and_witness(self):
        v = Verdict("yes", witness=(send("c", "a"),), method="bounded-exhaustive")
        text = str(v)
        assert "yes" in text and "c!a" in text and "bounded-exhaustive" in text

    def test_pump_witness_renders_omega_loop(self):
        pump = PumpWitness((), (send("c", "a"),))
        assert str(pump) == "ε (c!a)^ω"


class TestReachability:
    def test_initial_configuration(self, cdp_bundle):
        v = decide_reachability(cdp_bundle, "q00", ((), ()))
        assert v.is_yes
        assert v.witness == ()

    def test_pinned_yes_with_contents(self, cdp_bundle):
        v = decide_reachability(cdp_bundle, "q10", ((), ("e",)))
        assert v.is_yes
        assert v.method == "bounded-exhaustive"
        assert actions(v) == ("c1!a", "c1?a", "c2!e")

    def test_pinned_yes_two_channels(self, cdp_bundle):
        v = decide_reachability(cdp_bundle, "q00", (("b",), ("e",)))
        assert v.is_yes
        assert actions(v) == ("c1!a", "c1?a", "c1!b", "c2!e")

    def test_pinned_no_by_truncation(self, cdp_bundle):
        # (q00, a|ε) is coverable but never exactly reached, so only the
        # capped pass can refute it.
        v = decide_reachability(cdp_bundle, "q00", (("a",), ()))
        assert v.is_no
        assert v.method == "capped"

    def test_witness_replays_on_original_machine(self, cdp_bundle):
        v = decide_reachability(cdp_bundle, "q00", (("b",), ("e",)))
        final = run_configs(build_cdp(), v.witness)[-1]
        assert final.state == "q00"
        assert final.contents == (("b",), ("e",))

    def test_unknown_state_rejected(self, cdp_bundle):
        with pytest.raises(ValidationError, match="unknown control state"):
            decide_reachability(cdp_bundle, "q99", ((), ()))

    def test_foreign_letter_rejected(self, cdp_bundle):
        with pytest.raises(ValidationError, match="alphabet"):
            decide_reachability(cdp_bundle, "q00", (("e",), ()))

    def test_workers_do_not_change_answers(self, cdp_bundle):
        targets = [("q10", ((), ("e",))), ("q00", (("a",), ())),
                   ("q00", (("b",), ("e",)))]
        for state, contents in targets:
            one = decide_reachability(cdp_bundle, state, contents, workers=1)
            many = decide_reachability(cdp_bundle, state, contents, workers=3)
            assert (one.answer, one.witness) == (many.answer, many.witness)

    def test_channel_bound_search(self, one_shot):
        v = decide_reachability(one_shot, "q", (("a",),), channel_bound=3)
        assert v.is_yes


class TestControlState:
    def test_pinned_yes(self, cdp_bundle):
        v = decide_control_state(cdp_bundle, "q10")
        assert v.is_yes
        assert actions(v) == ("c1!a",)

    def test_all_cdp_states_reachable(self, cdp_bundle):
        for state in ("q00", "q01", "q10", "q11"):
            assert decide_control_state(cdp_bundle, state).is_yes


class TestRationalReachability:
    def test_pinned_yes(self, cdp_bundle):
        # c1 content of shape b a*, c2 empty.
        relation = RationalRelationSpec(
            ("c1", "c2"),
            FiniteAutomaton(
                ["r0", "r1"], [("b", None), ("a", None)],
                [("r0", ("b", None), "r1"), ("r1", ("a", None), "r1")],
                "r0", ["r1"]))
        v = decide_rational_reachability(cdp_bundle, "q11", relation)
        assert v.is_yes
        assert actions(v) == ("c1!a", "c1?a", "c1!b", "c1!a")

    def test_pinned_no(self, cdp_bundle):
        relation = RationalRelationSpec(
            ("c1", "c2"),
            FiniteAutomaton(
                ["s0", "s1"], [("a", None)],
                [("s0", ("a", None), "s1"), ("s1", ("a", None), "s1")],
                "s0", ["s1"]))
        v = decide_rational_reachability(cdp_bundle, "q00", relation)
        assert v.is_no

    def test_witness_content_is_in_relation(self, cdp_bundle):
        relation = RationalRelationSpec(
            ("c1", "c2"),
            FiniteAutomaton(
                ["r0", "r1"], [("b", None), ("a", None)],
                [("r0", ("b", None), "r1"), ("r1", ("a", None), "r1")],
                "r0", ["r1"]))
        v = decide_rational_reachability(cdp_bundle, "q11", relation)
        final = run_configs(build_cdp(), v.witness)[-1]
        assert relation.accepts(final.contents)


class TestDeadlock:
    def test_cdp_is_deadlock_free(self, cdp_bundle):
        v = decide_deadlock(cdp_bundle)
        assert v.is_no
        assert v.method == "capped"

    def test_loop_machine_deadlocks(self, loop_bundle):
        v = decide_deadlock(loop_bundle)
        assert v.is_yes
        assert actions(v) == ("c!b", "c?b")
        # The reached configuration only offers a blocked receive.
        from conftest import build_loop_machine
        final = run_configs(build_loop_machine(), v.witness)[-1]
        assert final.state == "q1"
        assert final.contents == ((),)

    def test_initial_state_can_deadlock(self):
        machine = FifoMachine(
            states=["p"], channels=["c"], letters={"c": ("a",)},
            transitions=[("p", receive("c", "a"), "p")], initial="p")
        spec = BoundedLangSpec("c", ("a",), regex_to_automaton("a*", ["a"]))
        v = decide_deadlock(normalize_machine(machine, [spec]))
        assert v.is_yes
        assert v.witness == ()

    def test_pure_sender_never_deadlocks(self, send_loop):
        v = decide_deadlock(send_loop)
        assert v.is_no
        assert v.method == "static"

    def test_one_shot_send_deadlocks_at_the_end(self, one_shot):
        v = decide_deadlock(one_shot)
        assert v.is_yes
        assert actions(v) == ("c!a",)


class TestBoundedness:
    def test_cdp_unbounded_with_pump(self, cdp_bundle):
        v = decide_boundedness(cdp_bundle)
        assert v.is_no
        assert v.method == "chain-domination"
        assert str(v.witness) == "ε (c1!a c1!b)^ω"

    def test_pump_replays_and_grows(self, cdp_bundle):
        v = decide_boundedness(cdp_bundle)
        stem, loop = v.witness.stem, v.witness.loop
        machine = build_cdp()
        sizes = []
        for rounds in range(1, 6):
            final = run_configs(machine, stem + loop * rounds)[-1]
            sizes.append(sum(len(w) for w in final.contents))
        assert sizes == sorted(sizes) and sizes[0] < sizes[-1]

    def test_loop_machine_unbounded(self, loop_bundle):
        v = decide_boundedness(loop_bundle)
        assert v.is_no
        assert str(v.witness) == "ε (c!a c!b)^ω"

    def test_send_loop_unbounded(self, send_loop):
        v = decide_boundedness(send_loop)
        assert v.is_no
        assert str(v.witness) == "ε (c!a)^ω"

    def test_one_shot_bounded(self, one_shot):
        v = decide_boundedness(one_shot)
        assert v.is_yes
        assert v.method == "bounded-exhaustive"

    def test_drain_cycle_bounded(self, drain_cycle):
        assert decide_boundedness(drain_cycle).is_yes


class TestTermination:
    def test_cdp_nonterminating(self, cdp_bundle):
        v = decide_termination(cdp_bundle)
        assert v.is_no
        assert str(v.witness) == "ε (c1!a c1!b)^ω"

    def test_one_shot_terminates(self, one_shot):
        v = decide_termination(one_shot)
        assert v.is_yes
        assert v.method == "cycle-free"

    def test_drain_cycle_spins_in_bounded_space(self, drain_cycle):
        # Bounded but nonterminating: the loop returns to the same
        # configuration, so only the cycle check can see it.
        v = decide_termination(drain_cycle)
        assert v.is_no
        assert v.method == "cycle"
        stem, loop = v.witness.stem, v.witness.loop
        original = FifoMachine(
            states=["q", "q2"], channels=["c"], letters={"c": ("a",)},
            transitions=[("q", send("c", "a"), "q2"),
                         ("q2", receive("c", "a"), "q")],
            initial="q")
        run_configs(original, stem + loop * 5)

    def test_send_loop_nonterminating(self, send_loop):
        assert decide_termination(send_loop).is_no


class TestCounterReachability:
    def build_inc_loop(self):
        return CounterMachine(
            states=["u"], counters=["x"],
            transitions=[counter_transition("u", INC, "x", (), "u")],
            initial="u")

    def build_dec_only(self):
        return CounterMachine(
            states=["u", "v"], counters=["x"],
            transitions=[counter_transition("u", DEC, "x", (), "v")],
            initial="u")

    def test_filter_refutes_uncoverable(self):
        machine = self.build_dec_only()
        assert coverability_filter(machine, "v", (1,)) == "unreachable"

    def test_filter_allows_coverable(self):
        machine = self.build_inc_loop()
        assert coverability_filter(machine, "u", (5,)) == "maybe"

    def test_search_finds_valuation(self):
        machine = self.build_inc_loop()
        v = counter_reachability(machine, [CounterConfig("u", (5,))])
        assert v.is_yes
        assert len(v.witness) == 5

    def test_coverability_refutation(self):
        machine = self.build_dec_only()
        v = counter_reachability(machine, [CounterConfig("v", (1,))])
        assert v.is_no
        assert v.method == "coverability"


class TestInputChecking:
    def test_plain_machine_rejected(self, cdp, cdp_specs):
        with pytest.raises(ValidationError, match="normal"):
            decide_boundedness(cdp)
