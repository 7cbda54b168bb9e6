"""Tests for counter-machine compilation and the contents/valuation
correspondence."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibfifo.automata import enumerate_words
from ibfifo.bounded import BoundedLangSpec
from ibfifo.core import (
    CounterAction,
    FifoAction,
    counter_run_configs,
    run_configs,
)
from ibfifo.counters import (
    CounterIndexing,
    build_counter_machine,
    contents_to_valuation,
    is_good,
    pairs_of,
    reconstruct_contents,
    trace_image,
    trace_preimage,
    valuation_to_contents,
)
from ibfifo.errors import InternalError, ValidationError


@pytest.fixture(scope="module")
def cyclic_spec():
    """Two-word bound with a three-letter cycle: (a1a2a3)*(a4)*."""
    return BoundedLangSpec("c", ["a1a2a3", "a4"], "(a1a2a3)*a4*")


class TestIndexing:
    def test_counter_names_and_order(self, cdp_bundle):
        indexing = CounterIndexing(cdp_bundle.specs)
        assert indexing.counters == ("x_c1_1", "x_c1_2", "x_c1_3", "x_c2_1")
        assert indexing.counter_of_letter["a1"] == "x_c1_1"
        assert indexing.counter_of_letter["a3"] == "x_c1_2"
        assert indexing.counter_of_letter["a5"] == "x_c1_3"
        assert indexing.counter_of_letter["b1"] == "x_c2_1"

    def test_zerosets_grow_with_word_index(self, cdp_bundle):
        indexing = CounterIndexing(cdp_bundle.specs)
        assert indexing.zeroset_for("a1") == frozenset()
        assert indexing.zeroset_for("a3") == {"x_c1_1"}
        assert indexing.zeroset_for("a4") == {"x_c1_1", "x_c1_2"}
        assert indexing.zeroset_for("b1") == frozenset()

    def test_action_image(self, cdp_bundle):
        indexing = CounterIndexing(cdp_bundle.specs)
        inc = indexing.action_image(FifoAction.parse("c1!a3"))
        assert (inc.kind, inc.counter, inc.zeroset) == ("inc", "x_c1_2",
                                                        frozenset())
        dec = indexing.action_image(FifoAction.parse("c1?a3"))
        assert (dec.kind, dec.counter, dec.zeroset) == ("dec", "x_c1_2",
                                                        {"x_c1_1"})


class TestBuildCounterMachine:
    def test_pinned_operation_counts(self, loop_bundle):
        machine, indexing = build_counter_machine(loop_bundle)
        assert indexing.counters == ("x_c_1", "x_c_2")
        tally = {}
        for t in machine.transitions:
            key = (t.kind, t.counter, tuple(sorted(t.zeroset)))
            tally[key] = tally.get(key, 0) + 1
        assert tally == {
            ("inc", "x_c_1", ()): 4,
            ("dec", "x_c_1", ()): 4,
            ("inc", "x_c_2", ()): 4,
            ("dec", "x_c_2", ("x_c_1",)): 3,
        }

    def test_labels_carry_fifo_actions(self, loop_bundle):
        machine, _ = build_counter_machine(loop_bundle)
        for t in machine.transitions:
            assert isinstance(t.label, FifoAction)
            expected_kind = "inc" if t.label.is_send else "dec"
            assert t.kind == expected_kind

    def test_states_match_bundle(self, loop_bundle):
        machine, _ = build_counter_machine(loop_bundle)
        assert machine.states == loop_bundle.machine.states
        assert machine.initial == loop_bundle.machine.initial


class TestTraceImage:
    def test_parallel_runs_agree(self, loop_bundle):
        fifo = loop_bundle.machine
        machine, indexing = build_counter_machine(loop_bundle)
        trace = [FifoAction.parse(a) for a in
                 ["c!a1", "c!a2", "c?a1", "c!a3", "c?a2", "c?a3"]]
        image = trace_image(indexing, trace)
        fifo_run = run_configs(fifo, trace)
        counter_run = counter_run_configs(machine, image)
        assert len(fifo_run) == len(counter_run)
        for fifo_config, counter_config in zip(fifo_run, counter_run):
            assert fifo_config.state == counter_config.state
            assert (contents_to_valuation(indexing, fifo_config.contents)
                    == counter_config.valuation)


class TestGoodness:
    def test_factors_of_the_bound(self, cyclic_spec):
        for text in ["", "a1", "a2a3", "a3a1", "a2a3a1a2", "a3a4", "a4a4",
                     "a1a2a3a4"]:
            word = tuple(c + d for c, d in zip(text[::2], text[1::2]))
            assert is_good(cyclic_spec, word), text
        for text in ["a2a1", "a4a1", "a1a3", "a3a2", "a4a2"]:
            word = tuple(c + d for c, d in zip(text[::2], text[1::2]))
            assert not is_good(cyclic_spec, word), text

    def test_pairs_pinned(self, cyclic_spec):
        assert pairs_of(cyclic_spec, ("a2", "a3")) == {"a3"}
        assert pairs_of(cyclic_spec, ()) == {"a1", "a2", "a3", "a4", None}

    def test_pairs_rejects_bad_content(self, cyclic_spec):
        with pytest.raises(ValidationError):
            pairs_of(cyclic_spec, ("a2", "a1"))


class TestValuationToContents:
    def test_pinned_examples(self, cyclic_spec):
        assert valuation_to_contents(cyclic_spec, [4, 0], "a2") == (
            "a2", "a3", "a1", "a2")
        assert valuation_to_contents(cyclic_spec, [2, 1], "a4") == (
            "a2", "a3", "a4")
        assert valuation_to_contents(cyclic_spec, [3, 1], "a3") is None

    def test_zero_valuation_is_empty(self, cyclic_spec):
        assert valuation_to_contents(cyclic_spec, [0, 0], "a1") == ()
        assert valuation_to_contents(cyclic_spec, [0, 0], None) == ()

    def test_no_anchor_with_letters_is_undefined(self, cyclic_spec):
        assert valuation_to_contents(cyclic_spec, [1, 0], None) is None

    def test_anchor_word_count_must_be_positive(self, cyclic_spec):
        assert valuation_to_contents(cyclic_spec, [0, 1], "a2") is None

    def test_arity_checked(self, cyclic_spec):
        with pytest.raises(ValidationError):
            valuation_to_contents(cyclic_spec, [1], "a1")

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 7), st.integers(0, 7),
           st.sampled_from(["a1", "a2", "a3", "a4"]))
    def test_defined_values_are_consistent(self, cyclic_spec, k1, k2, anchor):
        content = valuation_to_contents(cyclic_spec, [k1, k2], anchor)
        if content is None:
            return
        assert is_good(cyclic_spec, content)
        indexing = CounterIndexing([cyclic_spec])
        assert contents_to_valuation(indexing, (content,)) == (k1, k2)
        if content:
            assert content[-1] == anchor

    def test_roundtrip_from_contents(self, cyclic_spec):
        # Every factor of the language reconstructs from its counts and
        # last letter.
        indexing = CounterIndexing([cyclic_spec])
        for word in enumerate_words(cyclic_spec.infix_dfa(), 6):
            counts = contents_to_valuation(indexing, (word,))
            for anchor in pairs_of(cyclic_spec, word):
                assert valuation_to_contents(cyclic_spec, counts, anchor) == word


class TestReconstructContents:
    def test_two_channels(self, cdp_bundle):
        indexing = CounterIndexing(cdp_bundle.specs)
        valuation = contents_to_valuation(indexing, (("a2",), ("b1",)))
        rebuilt = reconstruct_contents(indexing, cdp_bundle.specs, valuation,
                                       ("a2", "b1"))
        assert rebuilt == (("a2",), ("b1",))

    def test_empty(self, cdp_bundle):
        indexing = CounterIndexing(cdp_bundle.specs)
        zero = tuple(0 for _ in indexing.counters)
        assert reconstruct_contents(indexing, cdp_bundle.specs, zero,
                                    (None, None)) == ((), ())

    def test_impossible_returns_none(self, cdp_bundle):
        indexing = CounterIndexing(cdp_bundle.specs)
        valuation = contents_to_valuation(indexing, (("a3",), ()))
        # Anchor on a different word than the letters present.
        assert reconstruct_contents(indexing, cdp_bundle.specs, valuation,
                                    ("a1", None)) is None


class TestTracePreimage:
    def test_from_labeled_transitions(self, loop_bundle):
        machine, indexing = build_counter_machine(loop_bundle)
        trace = [FifoAction.parse(a) for a in
                 ["c!a1", "c!a2", "c?a1", "c!a3", "c?a2", "c?a3"]]
        image = trace_image(indexing, trace)
        run = counter_run_configs(machine, image)
        transitions = []
        for before, action in zip(run, image):
            for t in machine.transitions_from(before.state):
                if (t.kind, t.counter, t.zeroset) == (
                        action.kind, action.counter, action.zeroset):
                    transitions.append(t)
                    break
        assert trace_preimage(loop_bundle.specs, transitions) == tuple(trace)

    def test_from_bare_actions(self, loop_bundle):
        _, indexing = build_counter_machine(loop_bundle)
        trace = tuple(FifoAction.parse(a) for a in
                      ["c!a1", "c!a2", "c?a1", "c!a3", "c?a2", "c?a3"])
        image = trace_image(indexing, trace)
        assert trace_preimage(loop_bundle.specs, image) == trace

    def test_invalid_counter_rejected(self, loop_bundle):
        with pytest.raises(InternalError):
            trace_preimage(loop_bundle.specs,
                           [CounterAction("inc", "x_nope_1")])

    def test_receive_ahead_is_still_a_valid_sequence(self, loop_bundle):
        # Receiving before any send is fine at the sequence level; the
        # machine semantics are what rule it out.
        preimage = trace_preimage(
            loop_bundle.specs,
            [CounterAction("dec", "x_c_2", frozenset({"x_c_1"}))])
        assert preimage == (FifoAction.parse("c?a3"),)

    def test_unrealizable_step_rejected(self, loop_bundle):
        # After a second-word send the language never returns to the
        # first word, so no letter realizes the first-word increment.
        with pytest.raises(InternalError):
            trace_preimage(loop_bundle.specs,
                           [CounterAction("inc", "x_c_2"),
                            CounterAction("inc", "x_c_1")])
