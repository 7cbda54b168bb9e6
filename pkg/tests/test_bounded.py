"""Tests for bounded-language channel specs."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibfifo.automata import (
    empty_automaton,
    enumerate_words,
    equivalent,
    inclusion,
    intersection,
    regex_to_automaton,
)
from ibfifo.bounded import (
    BoundedLangSpec,
    build_valid_automaton,
    distinct_letterize,
    has_distinct_letters,
    letter_positions,
    tuple_star_automaton,
    validate_bounded_spec,
    validate_bounded_specs,
)
from ibfifo.core import receive, send
from ibfifo.errors import (
    AlphabetMismatch,
    EmptyLanguage,
    EmptyTupleWord,
    NotBounded,
    ValidationError,
)


class TestSpecConstruction:
    def test_words_from_strings(self):
        spec = BoundedLangSpec("c1", ["ab", "a"], "(ab)*a*")
        assert spec.tuple == (("a", "b"), ("a",))
        assert spec.alphabet == ("a", "b")

    def test_multichar_letters(self):
        spec = BoundedLangSpec("c1", ["a1a2", "a3"], "(a1a2)*a3*")
        assert spec.tuple == (("a1", "a2"), ("a3",))

    def test_regex_text_preserved(self):
        spec = BoundedLangSpec("c1", ["ab"], "(ab)*")
        assert spec.regex_text() == "(ab)*"

    def test_automaton_language(self):
        automaton = regex_to_automaton("(ab)*", alphabet=["a", "b"])
        spec = BoundedLangSpec("c1", ["ab"], automaton)
        assert spec.dfa().accepts(("a", "b"))


class TestTupleStar:
    def test_language(self):
        automaton = tuple_star_automaton([("a", "b"), ("a",)], ["a", "b"])
        assert equivalent(automaton, regex_to_automaton("(ab)*a*"))

    def test_three_words(self):
        automaton = tuple_star_automaton(
            [("a", "b"), ("a",), ("a", "b")], ["a", "b"])
        assert equivalent(automaton, regex_to_automaton("(ab)*a*(ab)*"))

    def test_empty_tuple_gives_epsilon(self):
        automaton = tuple_star_automaton([], ["a"])
        assert automaton.accepts(())
        assert not automaton.accepts(("a",))


class TestValidation:
    def test_valid_spec_returned(self):
        spec = BoundedLangSpec("c1", ["ab", "b"], "(ab)*bb*")
        assert validate_bounded_spec(spec) is spec

    def test_empty_tuple_word(self):
        spec = BoundedLangSpec("c1", [("a",), ()], "a*")
        with pytest.raises(EmptyTupleWord):
            validate_bounded_spec(spec)

    def test_empty_language(self):
        spec = BoundedLangSpec("c1", ["a"], empty_automaton(["a"]))
        with pytest.raises(EmptyLanguage):
            validate_bounded_spec(spec)

    def test_not_bounded(self):
        # b* is not inside (ab)* b*? It is; use (ba)* against (ab)*
        spec = BoundedLangSpec("c1", ["ab"], regex_to_automaton("(ba)*(ba)",
                                                                alphabet=["a", "b"]))
        with pytest.raises(NotBounded):
            validate_bounded_spec(spec)

    def test_alphabet_mismatch_unused_letter(self):
        spec = BoundedLangSpec("c1", ["ab", "c"], "(ab)*")
        with pytest.raises(AlphabetMismatch):
            validate_bounded_spec(spec)
        # The relaxed form accepts partial use.
        assert validate_bounded_spec(spec, relax_alphabet=True) is spec

    def test_alphabet_mismatch_stray_letter(self):
        automaton = regex_to_automaton("c", alphabet=["a", "b", "c"])
        spec = BoundedLangSpec("c1", ["ab"], automaton)
        with pytest.raises(AlphabetMismatch):
            validate_bounded_spec(spec)

    def test_epsilon_language_needs_relaxation(self):
        spec = BoundedLangSpec("c1", ["a"], "eps")
        with pytest.raises(AlphabetMismatch):
            validate_bounded_spec(spec)
        assert validate_bounded_spec(spec, relax_alphabet=True) is spec

    def test_duplicate_channel_rejected(self):
        spec = BoundedLangSpec("c1", ["a"], "a*")
        with pytest.raises(ValidationError):
            validate_bounded_specs([spec, spec])

    def test_not_bounded_message_has_counterexample(self):
        spec = BoundedLangSpec(
            "c1", ["ab"],
            regex_to_automaton("ba", alphabet=["a", "b"]))
        with pytest.raises(NotBounded, match="ba"):
            validate_bounded_spec(spec)


class TestDistinctLetterize:
    def test_pinned_example(self):
        spec = BoundedLangSpec("c1", ["ab", "b"], "(ab)*bb*")
        new_specs, hom = distinct_letterize([spec])
        new = new_specs[0]
        assert new.tuple == (("a1", "a2"), ("a3",))
        assert equivalent(new.dfa(), regex_to_automaton(
            "(a1a2)*a3a3*", alphabet=["a1", "a2", "a3"]))
        assert hom.mapping == {"a1": "a", "a2": "b", "a3": "b"}
        assert hom.preimage("c1", "b") == ("a2", "a3")
        assert hom.preimage("c1", "a") == ("a1",)

    def test_two_channels_get_distinct_bases(self):
        specs = [BoundedLangSpec("c1", ["ab", "a", "ab"], "(ab)*(a|eps)(ab)*"),
                 BoundedLangSpec("c2", ["e"], "e*")]
        new_specs, hom = distinct_letterize(specs)
        assert new_specs[0].tuple == (("a1", "a2"), ("a3",), ("a4", "a5"))
        assert new_specs[1].tuple == (("b1",),)
        assert hom.channel_of["a1"] == "c1"
        assert hom.channel_of["b1"] == "c2"
        assert equivalent(new_specs[0].dfa(), regex_to_automaton(
            "(a1a2)*(a3|eps)(a4a5)*",
            alphabet=["a1", "a2", "a3", "a4", "a5"]))

    def test_unused_words_removed_and_renumbered(self):
        spec = BoundedLangSpec("c1", ["ab", "a", "ab"], "(ab)*(ab)*")
        new_specs, hom = distinct_letterize([spec])
        new = new_specs[0]
        assert new.tuple == (("a1", "a2"), ("a3", "a4"))
        assert hom.mapping == {"a1": "a", "a2": "b", "a3": "a", "a4": "b"}
        assert equivalent(new.dfa(), regex_to_automaton(
            "(a1a2)*(a3a4)*", alphabet=["a1", "a2", "a3", "a4"]))

    def test_result_is_distinct_and_valid(self):
        spec = BoundedLangSpec("c1", ["ab", "b"], "(ab)*bb*")
        new_specs, _ = distinct_letterize([spec])
        assert has_distinct_letters(new_specs[0])
        assert validate_bounded_spec(new_specs[0]) is new_specs[0]

    def test_letter_positions(self):
        spec = BoundedLangSpec("c1", ["a1a2", "a3"], "(a1a2)*a3*")
        positions = letter_positions(spec)
        assert positions == {"a1": (0, 0, 0), "a2": (0, 1, 1), "a3": (1, 0, 2)}

    def test_letter_positions_requires_distinct(self):
        spec = BoundedLangSpec("c1", ["ab", "b"], "(ab)*bb*")
        with pytest.raises(ValidationError):
            letter_positions(spec)


@st.composite
def random_bounded_spec(draw):
    word_count = draw(st.integers(1, 3))
    words = [draw(st.text(alphabet="ab", min_size=1, max_size=2))
             for _ in range(word_count)]
    letters = sorted(set("".join(words)))
    expr = draw(st.sampled_from(
        ["(a|b)*", "a*b*", "(ab)*", "a*", "b*a*", "(aa|b)*", "ab|ba|eps"]))
    shape = regex_to_automaton(expr, alphabet=["a", "b"])
    bound = tuple_star_automaton([tuple(w) for w in words], letters)
    language = intersection(shape, bound).minimized()
    return BoundedLangSpec("c1", words, language)


class TestDistinctLetterizeProperties:
    @settings(max_examples=50, deadline=None)
    @given(random_bounded_spec())
    def test_image_language_is_preserved(self, spec):
        if spec.dfa().is_empty():
            return
        new_specs, hom = distinct_letterize([spec])
        new = new_specs[0]
        assert has_distinct_letters(new)
        # The renaming maps the new language exactly onto the old one,
        # length for length.
        for length in range(0, 5):
            old_words = {w for w in enumerate_words(spec.dfa(), 4)
                         if len(w) == length}
            new_words = {w for w in enumerate_words(new.dfa(), 4)
                         if len(w) == length}
            assert {tuple(hom.to_original_letter(x) for x in w)
                    for w in new_words} == old_words

    @settings(max_examples=50, deadline=None)
    @given(random_bounded_spec())
    def test_result_within_its_bound(self, spec):
        if spec.dfa().is_empty():
            return
        new_specs, _ = distinct_letterize([spec])
        new = new_specs[0]
        assert inclusion(new.dfa(), new.bound_dfa())
        # Every kept tuple word is actually used.
        used = new.used_letters()
        for word in new.tuple:
            assert any(letter in used for letter in word)


class TestValidAutomaton:
    @pytest.fixture()
    def pinned(self):
        spec = BoundedLangSpec("c1", ["ab", "b"], "(ab)*bb*")
        new_specs, _ = distinct_letterize([spec])
        return new_specs

    def test_deterministic_and_trimmed(self, pinned):
        valid = build_valid_automaton(pinned)
        assert valid.deterministic
        assert len(valid.states) == 9
        keep = valid.accessible_states() & valid.co_accessible_states()
        assert set(valid.states) == keep

    def test_send_projection_gated_by_language(self, pinned):
        valid = build_valid_automaton(pinned)
        assert valid.step(valid.initial, send("c1", "a2")) is None
        after = valid.step(valid.initial, send("c1", "a1"))
        assert after is not None
        assert valid.step(after, send("c1", "a3")) is None

    def test_receives_track_prefixes(self, pinned):
        valid = build_valid_automaton(pinned)
        state = valid.initial
        for action in [receive("c1", "a1"), receive("c1", "a2"),
                       receive("c1", "a3"), receive("c1", "a3")]:
            state = valid.step(state, action)
            assert state is not None
        assert valid.step(state, receive("c1", "a1")) is None

    def test_accepting_iff_send_components_accept(self, pinned):
        valid = build_valid_automaton(pinned)
        assert valid.initial not in valid.finals
        state = valid.step(valid.initial, send("c1", "a3"))
        assert state in valid.finals
        state = valid.step(state, receive("c1", "a1"))
        assert state in valid.finals

    def test_two_channels_interleave(self):
        specs, _ = distinct_letterize(
            [BoundedLangSpec("c1", ["a"], "a*"),
             BoundedLangSpec("c2", ["e"], "e*")])
        valid = build_valid_automaton(specs)
        state = valid.initial
        for action in [send("c1", "a1"), send("c2", "b1"),
                       receive("c2", "b1"), receive("c1", "a1")]:
            state = valid.step(state, action)
            assert state is not None
        assert state in valid.finals
