"""Rational relations over channel contents.

A relation is given by a finite automaton over tuple letters: one entry
per channel, each a letter or None (blank).  A word of tuple letters
denotes one word per channel (the non-blank entries in order), so the
automaton recognizes a relation between channel contents.
"""

from __future__ import annotations

from typing import Sequence

from .automata import FiniteAutomaton, map_symbols, shuffle
from .bounded import BoundedLangSpec
from .core import Contents, FifoMachine
from .counters import CounterIndexing, reconstruct_contents
from .errors import ValidationError

Blank = None


class RationalRelationSpec:
    """A relation between the contents of the named channels."""

    __slots__ = ("channels", "automaton")

    def __init__(self, channels: Sequence[str], automaton: FiniteAutomaton):
        self.channels = tuple(channels)
        for symbol in automaton.alphabet:
            if not isinstance(symbol, tuple) or len(symbol) != len(self.channels):
                raise ValidationError(
                    f"relation letters must be {len(self.channels)}-tuples, "
                    f"got {symbol!r}")
        self.automaton = automaton

    def validate_against(self, machine: FifoMachine) -> "RationalRelationSpec":
        if tuple(self.channels) != tuple(machine.channels):
            raise ValidationError(
                f"relation channels {list(self.channels)} do not match "
                f"machine channels {list(machine.channels)}")
        for symbol in self.automaton.alphabet:
            for channel, letter in zip(self.channels, symbol):
                if letter is Blank:
                    continue
                if letter not in machine.letters[channel]:
                    raise ValidationError(
                        f"relation uses letter {letter!r} outside channel "
                        f"{channel}'s alphabet")
        return self

    def accepts(self, contents: Contents) -> bool:
        return relation_accepts(self.automaton, contents)

    def __repr__(self) -> str:
        return (f"RationalRelationSpec(channels={list(self.channels)}, "
                f"states={len(self.automaton.states)})")


def denotation(word: Sequence[tuple]) -> tuple:
    """The per-channel words a tuple-letter word stands for."""
    if not word:
        return ()
    arity = len(word[0])
    out = [[] for _ in range(arity)]
    for symbol in word:
        for index, letter in enumerate(symbol):
            if letter is not Blank:
                out[index].append(letter)
    return tuple(tuple(part) for part in out)


def relation_accepts(automaton: FiniteAutomaton, contents: Contents) -> bool:
    """Does some accepted tuple-letter word denote exactly ``contents``?"""
    words = tuple(tuple(word) for word in contents)
    start = (automaton.initial, tuple(0 for _ in words))
    seen = {start}
    stack = [start]
    target = tuple(len(word) for word in words)
    while stack:
        state, positions = stack.pop()
        if state in automaton.finals and positions == target:
            return True
        for symbol in automaton.out_symbols(state):
            advanced = list(positions)
            ok = True
            for index, letter in enumerate(symbol):
                if letter is Blank:
                    continue
                if (advanced[index] >= len(words[index])
                        or words[index][advanced[index]] != letter):
                    ok = False
                    break
                advanced[index] += 1
            if not ok:
                continue
            for nxt in automaton.successors(state, symbol):
                item = (nxt, tuple(advanced))
                if item not in seen:
                    seen.add(item)
                    stack.append(item)
    return False


def recognizable_relation(channel_automata: Sequence[FiniteAutomaton]) -> FiniteAutomaton:
    """The relation L1 x ... x Lk as a tuple-letter automaton: each
    channel's letters are embedded at its position, blanks elsewhere."""
    arity = len(channel_automata)

    def embed(index: int):
        def rename(letter):
            return tuple(letter if i == index else Blank
                         for i in range(arity))
        return rename

    mapped = [map_symbols(automaton, embed(index))
              for index, automaton in enumerate(channel_automata)]
    return shuffle(mapped)


def membership_in_Ta(indexing: CounterIndexing,
                     specs: Sequence[BoundedLangSpec],
                     relation: FiniteAutomaton,
                     valuation: Sequence[int],
                     last_sent: Sequence) -> bool:
    """Does the valuation, anchored at the last letters sent, stand for
    contents inside the relation?

    The contents are rebuilt per channel from the counter values; a
    valuation with no matching contents is outside every relation.
    """
    contents = reconstruct_contents(indexing, specs, valuation, last_sent)
    if contents is None:
        return False
    return relation_accepts(relation, contents)
