"""Compilation of normalized machines into counter machines.

Each channel word gets one counter holding how many of its letters sit
in the channel.  Sends increment, receives decrement; receiving a
letter of word i additionally tests that the counters of all earlier
words on that channel are zero (FIFO order: earlier blocks drain
first).  Because letters are distinct across the tuple, channel
contents can be rebuilt from the counter values plus the last letter
sent on the channel.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .bounded import BoundedLangSpec, build_valid_automaton, letter_positions
from .core import (
    Contents,
    CounterAction,
    CounterMachine,
    DEC,
    FifoAction,
    INC,
    Letter,
    Word,
    counter_transition,
)
from .errors import InternalError, ValidationError
from .normalform import NormalFormBundle


class CounterIndexing:
    """Bookkeeping between channel words, letters and counters.

    Counter ``x_<channel>_<i>`` stands for the i-th tuple word (1-based)
    of that channel; the counter order follows the channel order.
    """

    __slots__ = ("channels", "words", "counters", "counter_of_word",
                 "counter_of_letter", "position_of_letter", "channel_of_counter",
                 "word_index_of_counter")

    def __init__(self, specs: Sequence[BoundedLangSpec]):
        self.channels = tuple(spec.channel for spec in specs)
        self.words = {spec.channel: tuple(spec.tuple) for spec in specs}
        counters = []
        self.counter_of_word = {}
        self.counter_of_letter = {}
        self.position_of_letter = {}
        self.channel_of_counter = {}
        self.word_index_of_counter = {}
        for spec in specs:
            positions = letter_positions(spec)
            for word_index in range(len(spec.tuple)):
                counter = f"x_{spec.channel}_{word_index + 1}"
                counters.append(counter)
                self.counter_of_word[(spec.channel, word_index)] = counter
                self.channel_of_counter[counter] = spec.channel
                self.word_index_of_counter[counter] = word_index
            for letter, (word_index, offset, rank) in positions.items():
                self.counter_of_letter[letter] = \
                    self.counter_of_word[(spec.channel, word_index)]
                self.position_of_letter[letter] = (spec.channel, word_index,
                                                   offset)
        self.counters = tuple(counters)

    def zeroset_for(self, letter: Letter) -> frozenset:
        """Counters of strictly earlier words on the letter's channel."""
        channel, word_index, _ = self.position_of_letter[letter]
        return frozenset(self.counter_of_word[(channel, j)]
                         for j in range(word_index))

    def counters_of_channel(self, channel: str) -> tuple:
        return tuple(self.counter_of_word[(channel, j)]
                     for j in range(len(self.words[channel])))

    def action_image(self, action: FifoAction) -> CounterAction:
        """The counter action a FIFO action compiles to."""
        counter = self.counter_of_letter[action.letter]
        if action.is_send:
            return CounterAction(INC, counter)
        return CounterAction(DEC, counter, self.zeroset_for(action.letter))

    def __repr__(self) -> str:
        return f"CounterIndexing(counters={list(self.counters)})"


def build_counter_machine(bundle: NormalFormBundle):
    """Compile a normalized bundle into a counter machine.

    Returns ``(machine, indexing)``.  Each transition keeps the FIFO
    action it came from as its label, so runs can be read back as FIFO
    traces directly.
    """
    indexing = CounterIndexing(bundle.specs)
    transitions = []
    for transition in bundle.machine.transitions:
        action = indexing.action_image(transition.action)
        transitions.append(counter_transition(
            transition.source, action.kind, action.counter, action.zeroset,
            transition.target, label=transition.action))
    machine = CounterMachine(states=bundle.machine.states,
                             counters=indexing.counters,
                             transitions=transitions,
                             initial=bundle.machine.initial)
    return machine, indexing


def compiled_counter_machine(bundle: NormalFormBundle):
    """Like :func:`build_counter_machine`, but memoized on the bundle."""
    cached = bundle._cache.get("counter_machine")
    if cached is None:
        cached = build_counter_machine(bundle)
        bundle._cache["counter_machine"] = cached
    return cached


def trace_image(indexing: CounterIndexing,
                trace: Sequence[FifoAction]) -> tuple:
    """Map a FIFO trace to the counter trace it compiles to."""
    return tuple(indexing.action_image(action) for action in trace)


def contents_to_valuation(indexing: CounterIndexing,
                          contents: Contents) -> tuple:
    """Count, per counter, the letters of its word in the contents."""
    counts = {counter: 0 for counter in indexing.counters}
    for channel, word in zip(indexing.channels, contents):
        for letter in word:
            counter = indexing.counter_of_letter.get(letter)
            if counter is None or indexing.channel_of_counter[counter] != channel:
                raise ValidationError(
                    f"letter {letter!r} does not belong to channel {channel}")
            counts[counter] += 1
    return tuple(counts[counter] for counter in indexing.counters)


def is_good(spec: BoundedLangSpec, word: Word) -> bool:
    """A word is a possible channel content iff it is a factor of the
    bound w1*...wn*."""
    return spec.bound_infix_dfa().accepts(tuple(word))


def pairs_of(spec: BoundedLangSpec, word: Word):
    """The anchors that reconstruct this content: its last letter for a
    nonempty content, every letter plus None (no send yet) for the
    empty one."""
    word = tuple(word)
    if not is_good(spec, word):
        raise ValidationError(
            f"channel {spec.channel}: {''.join(word)!r} is not a possible "
            f"content")
    if not word:
        return frozenset(spec.alphabet) | {None}
    return frozenset({word[-1]})


def valuation_to_contents(spec: BoundedLangSpec,
                          counts: Sequence[int],
                          anchor: Letter | None) -> Word | None:
    """Rebuild one channel's content from its per-word letter counts and
    the last letter sent (the anchor); None when no content matches.

    The content ends at the anchor.  Blocks of earlier words fill
    backward from their word's end; every block except the earliest one
    present must start at its word's beginning.
    """
    words = spec.tuple
    counts = list(counts)
    if len(counts) != len(words):
        raise ValidationError("count arity does not match the word tuple")
    if any(count < 0 for count in counts):
        raise ValidationError("counts must be nonnegative")
    if all(count == 0 for count in counts):
        return ()
    if anchor is None:
        return None
    positions = letter_positions(spec)
    if anchor not in positions:
        raise ValidationError(
            f"channel {spec.channel}: unknown letter {anchor!r}")
    anchor_word, anchor_offset, _ = positions[anchor]
    if any(counts[j] > 0 for j in range(anchor_word + 1, len(words))):
        return None
    if counts[anchor_word] == 0:
        return None
    present = [j for j in range(anchor_word + 1) if counts[j] > 0]
    earliest = present[0]
    pieces = []
    for j in present:
        word = words[j]
        end = anchor_offset + 1 if j == anchor_word else len(word)
        if j != earliest and (end - counts[j]) % len(word) != 0:
            return None
        copies = -(-(counts[j] - end) // len(word)) + 1 if counts[j] > end else 1
        template = word * copies
        pieces.append(template[:len(word) * (copies - 1) + end][-counts[j]:])
    return tuple(letter for piece in pieces for letter in piece)


def reconstruct_contents(indexing: CounterIndexing,
                         specs: Sequence[BoundedLangSpec],
                         valuation: Sequence[int],
                         last_sent: Sequence[Letter | None]) -> Contents | None:
    """Rebuild full channel contents from a counter valuation and the
    last letter sent per channel; None when no contents match."""
    values = dict(zip(indexing.counters, valuation))
    contents = []
    for spec, anchor in zip(specs, last_sent):
        counts = [values[c] for c in indexing.counters_of_channel(spec.channel)]
        word = valuation_to_contents(spec, counts, anchor)
        if word is None:
            return None
        contents.append(word)
    return tuple(contents)


def trace_preimage(specs: Sequence[BoundedLangSpec],
                   trace: Iterable) -> tuple:
    """Map a counter trace back to the FIFO trace it compiles from.

    Counter transitions carry their FIFO action as a label and are read
    back directly.  Bare counter actions are resolved by walking the
    valid-sequence automaton: at any point it enables at most one letter
    per (channel, word, direction), so the preimage is unique; anything
    else is reported as an internal error.
    """
    indexing = CounterIndexing(specs)
    vautomaton = build_valid_automaton(specs)
    state = vautomaton.initial
    actions = []
    for step in trace:
        label = getattr(step, "label", None)
        action = step.action if hasattr(step, "action") else step
        if label is not None:
            fifo_action = label
        else:
            if action.kind not in (INC, DEC):
                raise InternalError(
                    f"cannot invert counter action {action}")
            channel = indexing.channel_of_counter.get(action.counter)
            if channel is None:
                raise InternalError(f"unknown counter {action.counter!r}")
            word_index = indexing.word_index_of_counter[action.counter]
            kind = "!" if action.kind == INC else "?"
            candidates = []
            for symbol in vautomaton.out_symbols(state):
                if symbol.channel != channel or symbol.kind != kind:
                    continue
                position = indexing.position_of_letter.get(symbol.letter)
                if position and position[1] == word_index:
                    candidates.append(symbol)
            if not candidates:
                raise InternalError(
                    f"no valid letter realizes {action} here")
            if len(candidates) > 1:
                raise InternalError(
                    f"ambiguous preimage for {action}: {candidates}")
            fifo_action = candidates[0]
        next_state = vautomaton.step(state, fifo_action)
        if next_state is None:
            raise InternalError(
                f"reconstructed trace leaves the valid sequences at "
                f"{fifo_action}")
        state = next_state
        actions.append(fifo_action)
    return tuple(actions)
