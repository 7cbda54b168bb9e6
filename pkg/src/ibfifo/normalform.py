"""Normalization of a FIFO machine against its channel bounds.

``normalize_machine`` rewrites the machine over fresh distinct letters
and takes its product with the valid-sequence automaton, trimmed to
states that lie on some run completing a full valid execution.  The
result is a bundle whose control graph only admits valid action
sequences, so downstream searches need no language gating.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as cartesian
from typing import Iterable, Sequence

from .automata import (
    FiniteAutomaton,
    infix_automaton,
    intersection,
    prefix_closure,
)
from .bounded import (
    BoundedLangSpec,
    LetterHom,
    build_valid_automaton,
    distinct_letterize,
    has_distinct_letters,
    validate_bounded_spec,
)
from .core import Contents, FifoAction, FifoMachine, Word
from .errors import AlphabetMismatch, ValidationError

_LIFT_LIMIT = 10_000


def pair_specs_with_machine(machine: FifoMachine,
                            specs: Sequence[BoundedLangSpec],
                            *, relax_alphabet: bool = False) -> list[BoundedLangSpec]:
    """Order specs by machine channel and enforce the shared-alphabet
    assumption between each spec and its channel."""
    by_channel = {}
    for spec in specs:
        if spec.channel in by_channel:
            raise ValidationError(f"duplicate bound for channel {spec.channel}")
        if spec.channel not in machine.channels:
            raise ValidationError(
                f"bound given for unknown channel {spec.channel}")
        by_channel[spec.channel] = spec
    ordered = []
    for channel in machine.channels:
        if channel not in by_channel:
            raise ValidationError(f"no bound given for channel {channel}")
        spec = by_channel[channel]
        if tuple(spec.alphabet) != tuple(machine.letters[channel]):
            raise AlphabetMismatch(
                f"channel {channel}: bound alphabet {list(spec.alphabet)} "
                f"differs from machine alphabet {list(machine.letters[channel])}")
        validate_bounded_spec(spec, relax_alphabet=relax_alphabet)
        ordered.append(spec)
    return ordered


def inverse_hom_machine(machine: FifoMachine, hom: LetterHom) -> FifoMachine:
    """The machine over fresh letters: each transition on an original
    letter becomes one transition per fresh letter mapping to it."""
    letters = {channel: hom.new_letters(channel) or ()
               for channel in machine.channels}
    transitions = []
    for transition in machine.transitions:
        action = transition.action
        for fresh in hom.preimage(action.channel, action.letter):
            transitions.append((transition.source,
                                FifoAction(action.channel, action.kind, fresh),
                                transition.target))
    return FifoMachine(states=machine.states, channels=machine.channels,
                       letters=letters, transitions=transitions,
                       initial=machine.initial)


def traces_automaton(machine: FifoMachine) -> FiniteAutomaton:
    """The control graph as an automaton over actions, every state final
    (its language is the set of control traces)."""
    alphabet = {t.action for t in machine.transitions}
    triples = [(t.source, t.action, t.target) for t in machine.transitions]
    return FiniteAutomaton(machine.states, alphabet, triples,
                           machine.initial, machine.states)


def _product_graph(machine: FifoMachine, vautomaton: FiniteAutomaton):
    """Forward-accessible product of the control graph with the
    valid-sequence automaton, then pruned backward to states from which
    an accepting product state is reachable."""
    initial = (machine.initial, vautomaton.initial)
    seen = {initial}
    queue = [initial]
    edges: list[tuple[tuple, FifoAction, tuple]] = []
    while queue:
        state = queue.pop(0)
        m_state, a_state = state
        for transition in machine.transitions_from(m_state):
            a_next = vautomaton.step(a_state, transition.action)
            if a_next is None:
                continue
            target = (transition.target, a_next)
            if target not in seen:
                seen.add(target)
                queue.append(target)
            edges.append((state, transition.action, target))
    accepting = {state for state in seen if state[1] in vautomaton.finals}
    reverse: dict[tuple, set] = {}
    for source, _, target in edges:
        reverse.setdefault(target, set()).add(source)
    keep = set(accepting)
    stack = list(accepting)
    while stack:
        state = stack.pop()
        for source in reverse.get(state, ()):
            if source not in keep:
                keep.add(source)
                stack.append(source)
    kept_edges = [(s, a, t) for s, a, t in edges if s in keep and t in keep]
    return initial, keep, kept_edges, accepting


def _name_product_states(pairs: Iterable[tuple]) -> dict:
    names = {}
    used = set()
    for m_state, a_state in sorted(pairs, key=str):
        base = f"{m_state}@{'.'.join(str(part) for part in a_state)}"
        name = base
        bump = 0
        while name in used:
            bump += 1
            name = f"{base}#{bump}"
        used.add(name)
        names[(m_state, a_state)] = name
    return names


class NormalFormBundle:
    """A normalized machine with its specs, letter renaming and the
    valid-sequence automaton it was built from."""

    __slots__ = ("machine", "specs", "hom", "vautomaton", "state_components",
                 "accepting_states", "original_machine", "_cache")

    def __init__(self, machine, specs, hom, vautomaton, state_components,
                 accepting_states, original_machine):
        self.machine = machine
        self.specs = list(specs)
        self.hom = hom
        self.vautomaton = vautomaton
        self.state_components = dict(state_components)
        self.accepting_states = frozenset(accepting_states)
        self.original_machine = original_machine
        self._cache = {}

    def machine_state(self, state: str) -> str:
        """The original control state a product state projects to."""
        return self.state_components[state][0]

    def a_state(self, state: str):
        return self.state_components[state][1]

    def is_accepting(self, state: str) -> bool:
        """True when every send component accepts: a run stopping here
        has a complete valid send projection."""
        return state in self.accepting_states

    def states_for(self, original_state: str) -> tuple:
        """All product states projecting to an original control state."""
        key = ("states_for", original_state)
        if key not in self._cache:
            self._cache[key] = tuple(sorted(
                name for name, (m_state, _) in self.state_components.items()
                if m_state == original_state))
        return self._cache[key]

    def spec_for(self, channel: str) -> BoundedLangSpec:
        for spec in self.specs:
            if spec.channel == channel:
                return spec
        raise ValidationError(f"no bound for channel {channel}")

    def __repr__(self) -> str:
        return (f"NormalFormBundle(states={len(self.machine.states)}, "
                f"channels={list(self.machine.channels)})")


def normalize_machine(machine: FifoMachine,
                      specs: Sequence[BoundedLangSpec],
                      *, relax_alphabet: bool = False) -> NormalFormBundle:
    """Normalize a machine against its channel bounds.

    Rewrites everything over fresh distinct letters, then restricts the
    control graph to the product with the valid-sequence automaton,
    keeping only states on a path from the initial state to a state
    whose send projections are complete.
    """
    ordered = pair_specs_with_machine(machine, specs,
                                      relax_alphabet=relax_alphabet)
    fresh_specs, hom = distinct_letterize(ordered)
    lifted = inverse_hom_machine(machine, hom)
    vautomaton = build_valid_automaton(fresh_specs)
    initial, keep, edges, accepting = _product_graph(lifted, vautomaton)
    if initial not in keep:
        # No run completes a valid execution: the reachable set is empty.
        name = f"{machine.initial}@none"
        product = FifoMachine(
            states=[name], channels=machine.channels,
            letters={c: spec.alphabet for c, spec in
                     zip(machine.channels, fresh_specs)},
            transitions=[], initial=name)
        return NormalFormBundle(product, fresh_specs, hom, vautomaton,
                                {name: (machine.initial, vautomaton.initial)},
                                frozenset(), machine)
    names = _name_product_states(keep)
    product = FifoMachine(
        states=names.values(), channels=machine.channels,
        letters={c: spec.alphabet for c, spec in
                 zip(machine.channels, fresh_specs)},
        transitions=[(names[s], action, names[t]) for s, action, t in edges],
        initial=names[initial])
    components = {name: pair for pair, name in names.items()}
    accepting_names = frozenset(names[s] for s in accepting if s in keep)
    return NormalFormBundle(product, fresh_specs, hom, vautomaton,
                            components, accepting_names, machine)


@dataclass(frozen=True)
class NormalFormReport:
    ok: bool
    reason: str | None = None
    counterexample: tuple | None = None

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.ok


def check_normal_form(machine: FifoMachine,
                      specs: Sequence[BoundedLangSpec]) -> NormalFormReport:
    """Check whether a machine is already in normal form for its bounds:
    distinct-letter specs, every control trace a prefix of a valid
    sequence, and every state and transition on a completing run.

    On a trace violation the report carries a shortest offending trace.
    """
    try:
        ordered = pair_specs_with_machine(machine, specs)
    except (ValidationError, AlphabetMismatch) as error:
        return NormalFormReport(False, str(error))
    for spec in ordered:
        if not has_distinct_letters(spec):
            return NormalFormReport(
                False, f"channel {spec.channel}: letters are not distinct "
                       f"across the tuple")
    vautomaton = build_valid_automaton(ordered)
    traces = traces_automaton(machine)
    prefixes = prefix_closure(vautomaton)
    alphabet = set(traces.alphabet) | set(prefixes.alphabet)
    gap = intersection(traces, prefixes.complemented(alphabet))
    violation = gap.shortest_word()
    if violation is not None:
        return NormalFormReport(
            False, "a control trace is not a valid-sequence prefix",
            counterexample=violation)
    initial, keep, edges, _ = _product_graph(machine, vautomaton)
    surviving_states = {m_state for m_state, _ in keep}
    missing = set(machine.states) - surviving_states
    if missing:
        return NormalFormReport(
            False, f"states not on any completing run: {sorted(missing)}")
    surviving = {(s[0], action, t[0]) for s, action, t in edges}
    for transition in machine.transitions:
        if (transition.source, transition.action, transition.target) not in surviving:
            return NormalFormReport(
                False, f"transition not on any completing run: "
                       f"{transition.source} {transition.action} {transition.target}")
    return NormalFormReport(True)


def _lift_word(spec: BoundedLangSpec, hom: LetterHom, word: Word) -> list[Word]:
    """All fresh-letter preimages of a channel content that can occur as
    actual channel contents (i.e. factors of the bound language)."""
    if not word:
        return [()]
    options = []
    for letter in word:
        pre = hom.preimage(spec.channel, letter)
        if not pre:
            return []
        options.append(pre)
    infixes = infix_automaton(spec.dfa())
    lifts = []
    count = 0
    for combo in cartesian(*options):
        count += 1
        if count > _LIFT_LIMIT:
            raise ValidationError("channel content has too many preimages")
        if infixes.accepts(combo):
            lifts.append(tuple(combo))
    return lifts


def translate_query(bundle: NormalFormBundle, *, state: str | None = None,
                    contents: Contents | None = None,
                    relation: FiniteAutomaton | None = None) -> dict:
    """Translate a query given in original coordinates into bundle
    coordinates.

    Returns a dict with any of: ``states`` (product states projecting to
    the control state), ``contents_options`` (fresh-letter lifts of the
    channel contents, one tuple per combination), ``relation`` (the
    relation automaton with every tuple letter replaced by its fresh
    preimages).
    """
    out: dict = {}
    if state is not None:
        if state not in bundle.original_machine.states:
            raise ValidationError(f"unknown control state {state!r}")
        out["states"] = bundle.states_for(state)
    if contents is not None:
        if len(contents) != len(bundle.machine.channels):
            raise ValidationError("contents arity does not match channels")
        per_channel = []
        for spec, word in zip(bundle.specs, contents):
            lifts = _lift_word(spec, bundle.hom, tuple(word))
            per_channel.append(lifts)
        combos = []
        count = 0
        for combo in cartesian(*per_channel):
            count += 1
            if count > _LIFT_LIMIT:
                raise ValidationError("contents have too many preimages")
            combos.append(tuple(combo))
        out["contents_options"] = tuple(combos)
    if relation is not None:
        triples = []
        alphabet = set()
        for source, symbol, target in relation.transition_triples():
            entries = []
            for channel, letter in zip(bundle.machine.channels, symbol):
                if letter is None:
                    entries.append((None,))
                else:
                    entries.append(bundle.hom.preimage(channel, letter))
            for combo in cartesian(*entries):
                alphabet.add(combo)
                triples.append((source, combo, target))
        out["relation"] = FiniteAutomaton(
            relation.states, alphabet, triples, relation.initial,
            relation.finals)
    return out
