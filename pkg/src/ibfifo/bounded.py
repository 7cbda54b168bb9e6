"""Bounded-language channel specifications.

A channel bound fixes a tuple of nonempty words (w1, ..., wn) and a
regular language L ⊆ w1*...wn* of permitted send sequences on that
channel.  This module validates such specs, rewrites them into
distinct-letter form (every letter occurs exactly once across the
tuple), and builds the automaton of valid action sequences: send
projections must stay in L while receive projections stay in Pref(L).
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .automata import (
    FiniteAutomaton,
    automaton_to_regex,
    epsilon_automaton,
    inclusion,
    infix_automaton,
    intersection,
    lex_letters,
    map_symbols,
    prefix_closure,
    regex_to_automaton,
    shuffle,
)
from .core import FifoAction, Letter, Word, receive, send
from .errors import (
    AlphabetMismatch,
    EmptyLanguage,
    EmptyTupleWord,
    NotBounded,
    ValidationError,
)


def _coerce_word(word) -> Word:
    if isinstance(word, str):
        return tuple(lex_letters(word))
    return tuple(word)


class BoundedLangSpec:
    """The bound for one channel: a word tuple and a language within it.

    ``tuple`` is the tuple of words; ``language`` is a finite automaton
    over the letters of those words (a regex string is compiled against
    that alphabet).  DFAs derived from the spec are cached lazily.
    """

    __slots__ = ("channel", "tuple", "language", "language_text", "_cache")

    def __init__(self, channel: str, tuple, language, language_text=None):
        self.channel = str(channel)
        words = [_coerce_word(word) for word in tuple]
        self.tuple = (*words,)
        letters = sorted({letter for word in self.tuple for letter in word})
        if isinstance(language, str):
            self.language = regex_to_automaton(language, alphabet=letters)
            self.language_text = language
        else:
            self.language = language
            self.language_text = language_text
        self._cache: dict = {}

    # -- derived views -----------------------------------------------------

    @property
    def alphabet(self) -> tuple:
        return tuple(
            sorted({letter for word in self.tuple for letter in word}))

    def dfa(self) -> FiniteAutomaton:
        """Minimal trimmed DFA for the language."""
        if "dfa" not in self._cache:
            self._cache["dfa"] = self.language.minimized()
        return self._cache["dfa"]

    def prefix_dfa(self) -> FiniteAutomaton:
        """DFA for the prefixes of the language (same states as
        :meth:`dfa`, every state final)."""
        if "prefix" not in self._cache:
            self._cache["prefix"] = prefix_closure(self.dfa())
        return self._cache["prefix"]

    def bound_dfa(self) -> FiniteAutomaton:
        """DFA for the full bound w1*...wn*."""
        if "bound" not in self._cache:
            self._cache["bound"] = tuple_star_automaton(self.tuple, self.alphabet)
        return self._cache["bound"]

    def infix_dfa(self) -> FiniteAutomaton:
        """DFA for the factors (infixes) of the language."""
        if "infix" not in self._cache:
            self._cache["infix"] = infix_automaton(self.dfa())
        return self._cache["infix"]

    def bound_infix_dfa(self) -> FiniteAutomaton:
        """DFA for the factors of the full bound w1*...wn*."""
        if "bound_infix" not in self._cache:
            self._cache["bound_infix"] = infix_automaton(self.bound_dfa())
        return self._cache["bound_infix"]

    def used_letters(self) -> frozenset:
        """Letters occurring in some word of the language."""
        if "used" not in self._cache:
            self._cache["used"] = frozenset(
                symbol for _, symbol, _ in self.dfa().transition_triples())
        return self._cache["used"]

    def regex_text(self) -> str:
        """A parseable regex for the language (original text if given)."""
        if self.language_text is not None:
            return self.language_text
        return automaton_to_regex(self.dfa())

    def __repr__(self) -> str:
        words = " ".join("".join(word) for word in self.tuple)
        return f"BoundedLangSpec({self.channel}: {words}; {self.regex_text()})"


def tuple_star_automaton(words: Sequence[Word],
                         alphabet: Iterable[Letter]) -> FiniteAutomaton:
    """Automaton for w1*...wn* (minimal, deterministic)."""
    words = [tuple(word) for word in words]
    if not words:
        return epsilon_automaton(alphabet)
    # Boundary state i means: cycles of words up to index i are complete;
    # any later word (or another cycle of word i) may start.
    states: list = [("b", i) for i in range(len(words) + 1)]
    triples = []
    for index, word in enumerate(words):
        for offset in range(1, len(word)):
            states.append(("p", index, offset))
        path = ([("b", index + 1)] if len(word) == 1 else
                [("p", index, 1)]
                + [("p", index, offset) for offset in range(2, len(word))]
                + [("b", index + 1)])
        for start in range(index + 2):
            triples.append((("b", start), word[0], path[0]))
        for offset in range(1, len(word)):
            triples.append((path[offset - 1], word[offset], path[offset]))
    automaton = FiniteAutomaton(states, alphabet, triples, ("b", 0),
                                [("b", i) for i in range(len(words) + 1)])
    return automaton.minimized()


def validate_bounded_spec(spec: BoundedLangSpec, *,
                          relax_alphabet: bool = False) -> BoundedLangSpec:
    """Check a spec against the standing assumptions and return it.

    Raises EmptyTupleWord, AlphabetMismatch, EmptyLanguage or NotBounded.
    With ``relax_alphabet`` the language may use only part of the tuple's
    letters (needed for bounds whose language is {ε}).
    """
    for word in spec.tuple:
        if not word:
            raise EmptyTupleWord(
                f"channel {spec.channel}: tuple words must be nonempty")
    letters = set(spec.alphabet)
    used = set(spec.used_letters())
    if not used <= letters:
        stray = sorted(used - letters)
        raise AlphabetMismatch(
            f"channel {spec.channel}: language uses letters {stray} "
            f"outside the tuple")
    if spec.dfa().is_empty():
        raise EmptyLanguage(f"channel {spec.channel}: language is empty")
    if not inclusion(spec.dfa(), spec.bound_dfa()):
        witness = intersection(
            spec.dfa(), spec.bound_dfa().complemented(letters)).shortest_word()
        raise NotBounded(
            f"channel {spec.channel}: language is not inside the word-tuple "
            f"bound (counterexample: {''.join(witness)})")
    if not relax_alphabet and used != letters:
        missing = sorted(letters - used)
        raise AlphabetMismatch(
            f"channel {spec.channel}: letters {missing} of the tuple never "
            f"occur in the language (alphabets must agree)")
    return spec


def validate_bounded_specs(specs: Sequence[BoundedLangSpec], *,
                           relax_alphabet: bool = False) -> list[BoundedLangSpec]:
    seen = set()
    for spec in specs:
        if spec.channel in seen:
            raise ValidationError(f"duplicate bound for channel {spec.channel}")
        seen.add(spec.channel)
        validate_bounded_spec(spec, relax_alphabet=relax_alphabet)
    return list(specs)


def has_distinct_letters(spec: BoundedLangSpec) -> bool:
    """True when every letter occurs exactly once across the tuple."""
    flat = [letter for word in spec.tuple for letter in word]
    return len(flat) == len(set(flat))


def letter_positions(spec: BoundedLangSpec) -> dict:
    """For a distinct-letter spec: letter -> (word index, offset, rank).

    ``rank`` is the letter's position in the concatenation w1...wn.
    """
    if not has_distinct_letters(spec):
        raise ValidationError(
            f"channel {spec.channel}: letters are not distinct")
    out = {}
    rank = 0
    for word_index, word in enumerate(spec.tuple):
        for offset, letter in enumerate(word):
            out[letter] = (word_index, offset, rank)
            rank += 1
    return out


class LetterHom:
    """A letter renaming from distinct-letter form back to the original.

    Maps each fresh letter to the original letter it stands for; used to
    translate witnesses back and to take inverse images of machines.
    """

    __slots__ = ("mapping", "channel_of", "_preimages")

    def __init__(self, mapping: dict, channel_of: dict):
        self.mapping = dict(mapping)
        self.channel_of = dict(channel_of)
        preimages: dict = {}
        for new, old in self.mapping.items():
            preimages.setdefault((self.channel_of[new], old), []).append(new)
        self._preimages = {
            key: tuple(sorted(values))
            for key, values in preimages.items()}

    def to_original_letter(self, letter: Letter) -> Letter:
        return self.mapping[letter]

    def to_original_action(self, action: FifoAction) -> FifoAction:
        return FifoAction(action.channel, action.kind,
                          self.mapping[action.letter])

    def to_original_trace(self, trace: Sequence[FifoAction]) -> tuple:
        return tuple(self.to_original_action(a) for a in trace)

    def preimage(self, channel: str, letter: Letter) -> tuple:
        return self._preimages.get((channel, letter), ())

    def new_letters(self, channel: str) -> tuple:
        return tuple(sorted(
            new for new, ch in self.channel_of.items() if ch == channel))

    def __repr__(self) -> str:
        pairs = ", ".join(f"{new}->{old}" for new, old in sorted(self.mapping.items()))
        return f"LetterHom({pairs})"


def _letter_base(index: int) -> str:
    if index < 26:
        return chr(ord("a") + index)
    return f"C{index}_"


def _inverse_image_dfa(dfa: FiniteAutomaton, hom: dict,
                       alphabet: Iterable[Letter]) -> FiniteAutomaton:
    """Automaton for h^{-1}(L): read a fresh letter wherever the original
    automaton reads its image."""
    triples = []
    for source, symbol, target in dfa.transition_triples():
        for new, old in hom.items():
            if old == symbol:
                triples.append((source, new, target))
    return FiniteAutomaton(dfa.states, alphabet, triples, dfa.initial, dfa.finals)


def distinct_letterize(specs: Sequence[BoundedLangSpec]):
    """Rewrite channel bounds into distinct-letter form.

    Channel k gets fresh letters <base_k>1, <base_k>2, ... numbered left
    to right across its tuple; the new language is the inverse image of
    the old one inside the fresh bound.  Tuple words that no language
    word uses are dropped and the letters renumbered.  Returns the new
    specs plus the letter renaming back to the original alphabet.
    """
    new_specs = []
    mapping: dict = {}
    channel_of: dict = {}
    for index, spec in enumerate(specs):
        validate_bounded_spec(spec, relax_alphabet=True)
        base = _letter_base(index)
        flat = [letter for word in spec.tuple for letter in word]
        tentative = [f"{base}{i + 1}" for i in range(len(flat))]
        tentative_hom = dict(zip(tentative, flat))
        tentative_words = []
        cursor = 0
        for word in spec.tuple:
            tentative_words.append(tuple(tentative[cursor:cursor + len(word)]))
            cursor += len(word)
        lifted = _inverse_image_dfa(spec.dfa(), tentative_hom, tentative)
        bound = tuple_star_automaton(tentative_words, tentative)
        language = intersection(lifted, bound).minimized()
        used = {symbol for _, symbol, _ in language.transition_triples()}
        kept_words = [word for word in tentative_words
                      if any(letter in used for letter in word)]
        kept_flat = [letter for word in kept_words for letter in word]
        final_names = {old: f"{base}{i + 1}" for i, old in enumerate(kept_flat)}
        final_words = [tuple(final_names[letter] for letter in word)
                       for word in kept_words]
        if kept_flat:
            renamed = FiniteAutomaton(
                language.states, final_names.values(),
                [(s, final_names[x], t)
                 for s, x, t in language.transition_triples()],
                language.initial, language.finals).minimized()
        else:
            renamed = epsilon_automaton([])
        text = automaton_to_regex(renamed) if not renamed.is_empty() else None
        new_spec = BoundedLangSpec(spec.channel, final_words, renamed,
                                   language_text=text)
        new_specs.append(new_spec)
        for old_tentative, final in final_names.items():
            mapping[final] = tentative_hom[old_tentative]
            channel_of[final] = spec.channel
    return new_specs, LetterHom(mapping, channel_of)


def build_valid_automaton(specs: Sequence[BoundedLangSpec]) -> FiniteAutomaton:
    """The automaton of valid action sequences over all channels.

    One send component (language DFA) and one receive component (prefix
    DFA) per channel, shuffled over disjoint action alphabets.  States
    are tuples ordered (send_1, recv_1, send_2, recv_2, ...) following
    the spec order; the result is deterministic and trimmed, and a state
    is accepting iff every send component is accepting.
    """
    components = []
    for spec in specs:
        channel = spec.channel
        send_dfa = map_symbols(spec.dfa(),
                               lambda letter, c=channel: send(c, letter))
        recv_dfa = map_symbols(spec.prefix_dfa(),
                               lambda letter, c=channel: receive(c, letter))
        components.append(send_dfa)
        components.append(recv_dfa)
    return shuffle(components).trim()
