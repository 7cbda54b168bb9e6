"""Finite-automata toolkit: regex parsing, determinization, boolean
operations, inclusion, prefix/infix closures, shuffle products.

Symbols are arbitrary hashable values (plain letters, FIFO actions, or
tuple letters for relations), ordered by their string form so that every
construction is deterministic.  Automata are immutable after
construction; operations return fresh automata whose states are
canonically numbered strings ("0", "1", ...) in BFS discovery order.
"""

from __future__ import annotations

import itertools
from typing import Callable, Hashable, Iterable, Sequence

from .errors import ParseError, ValidationError

Symbol = Hashable

EPS_TOKEN = "eps"


def symbol_key(symbol: Symbol) -> str:
    return str(symbol)


class FiniteAutomaton:
    """A finite automaton (possibly nondeterministic, no ε-transitions).

    ``transitions`` is given as an iterable of ``(source, symbol, target)``
    triples.  ``deterministic`` is computed, not declared.
    """

    __slots__ = ("states", "alphabet", "initial", "finals", "delta",
                 "deterministic")

    def __init__(self, states: Iterable, alphabet: Iterable[Symbol],
                 transitions: Iterable, initial, finals: Iterable,
                 *, validate: bool = True):
        self.states = tuple(sorted(set(states), key=symbol_key))
        self.alphabet = tuple(sorted(set(alphabet), key=symbol_key))
        self.initial = initial
        self.finals = frozenset(finals)
        delta: dict = {}
        for source, symbol, target in transitions:
            delta.setdefault(source, {}).setdefault(symbol, set())
            delta[source][symbol].add(target)
        self.delta = {
            source: {symbol: frozenset(targets)
                     for symbol, targets in by_symbol.items()}
            for source, by_symbol in delta.items()}
        self.deterministic = all(
            len(targets) == 1
            for by_symbol in self.delta.values()
            for targets in by_symbol.values())
        if validate:
            self._validate()

    def _validate(self) -> None:
        state_set = set(self.states)
        if self.initial not in state_set:
            raise ValidationError(f"initial state {self.initial!r} not declared")
        if not self.finals <= state_set:
            raise ValidationError("final states not declared")
        symbol_set = set(self.alphabet)
        for source, by_symbol in self.delta.items():
            if source not in state_set:
                raise ValidationError(f"transition from unknown state {source!r}")
            for symbol, targets in by_symbol.items():
                if symbol not in symbol_set:
                    raise ValidationError(f"transition on unknown symbol {symbol!r}")
                if not targets <= state_set:
                    raise ValidationError("transition to unknown state")

    # -- basic queries -----------------------------------------------------

    def successors(self, state, symbol) -> frozenset:
        return self.delta.get(state, {}).get(symbol, frozenset())

    def step(self, state, symbol):
        """The unique successor, or None (requires a deterministic automaton)."""
        targets = self.successors(state, symbol)
        if len(targets) > 1:
            raise ValidationError("step() on a nondeterministic automaton")
        return next(iter(targets)) if targets else None

    def out_symbols(self, state) -> tuple:
        return tuple(sorted(self.delta.get(state, {}), key=symbol_key))

    def transition_triples(self) -> list:
        out = []
        for source in self.states:
            for symbol in self.out_symbols(source):
                for target in sorted(self.successors(source, symbol), key=symbol_key):
                    out.append((source, symbol, target))
        return out

    def accepts(self, word: Sequence[Symbol]) -> bool:
        current = {self.initial}
        for symbol in word:
            current = {q for p in current for q in self.successors(p, symbol)}
            if not current:
                return False
        return bool(current & self.finals)

    def accessible_states(self) -> set:
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            state = stack.pop()
            for by_symbol in (self.delta.get(state, {}),):
                for targets in by_symbol.values():
                    for target in targets:
                        if target not in seen:
                            seen.add(target)
                            stack.append(target)
        return seen

    def co_accessible_states(self) -> set:
        reverse: dict = {}
        for source, by_symbol in self.delta.items():
            for targets in by_symbol.values():
                for target in targets:
                    reverse.setdefault(target, set()).add(source)
        seen = set(self.finals)
        stack = list(self.finals)
        while stack:
            state = stack.pop()
            for source in reverse.get(state, ()):
                if source not in seen:
                    seen.add(source)
                    stack.append(source)
        return seen

    def is_empty(self) -> bool:
        return not (self.accessible_states() & self.finals)

    def shortest_word(self) -> tuple | None:
        """A shortest accepted word (ties broken by symbol order), or None."""
        if self.initial in self.finals:
            return ()
        seen = {self.initial}
        frontier: list[tuple] = [(self.initial, ())]
        while frontier:
            next_frontier = []
            for state, word in frontier:
                for symbol in self.out_symbols(state):
                    for target in sorted(self.successors(state, symbol), key=symbol_key):
                        if target in seen:
                            continue
                        seen.add(target)
                        extended = word + (symbol,)
                        if target in self.finals:
                            return extended
                        next_frontier.append((target, extended))
            frontier = next_frontier
        return None

    # -- transformations ---------------------------------------------------

    def trim(self) -> "FiniteAutomaton":
        """Keep states that lie on some initial-to-final path."""
        keep = self.accessible_states() & self.co_accessible_states()
        if self.initial not in keep:
            return empty_automaton(self.alphabet)
        triples = [(s, x, t) for s, x, t in self.transition_triples()
                   if s in keep and t in keep]
        return FiniteAutomaton(keep, self.alphabet, triples, self.initial,
                               self.finals & keep)

    def determinized(self) -> "FiniteAutomaton":
        if self.deterministic:
            return self.renumbered()
        return _determinize(self)

    def minimized(self) -> "FiniteAutomaton":
        """Minimal trimmed deterministic automaton (Moore refinement).

        Missing transitions stay missing (the dead state is implicit).
        """
        dfa = self.determinized().trim()
        if dfa.is_empty():
            return empty_automaton(self.alphabet)
        symbols = tuple(sorted(dfa.alphabet, key=symbol_key))
        block: dict = {s: (s in dfa.finals) for s in dfa.states}
        while True:
            signature = {
                s: (block[s],
                    tuple(block.get(dfa.step(s, x)) for x in symbols))
                for s in dfa.states}
            labels = {sig: i for i, sig in enumerate(sorted(
                set(signature.values()), key=str))}
            refined = {s: labels[signature[s]] for s in dfa.states}
            if len(set(refined.values())) == len(set(block.values())):
                break
            block = refined
        representatives: dict[int, object] = {}
        for state in dfa.states:
            representatives.setdefault(refined[state], state)
        triples = []
        for block_id, state in representatives.items():
            for symbol in dfa.out_symbols(state):
                triples.append((block_id, symbol, refined[dfa.step(state, symbol)]))
        quotient = FiniteAutomaton(
            representatives.keys(), dfa.alphabet, triples,
            refined[dfa.initial],
            {refined[f] for f in dfa.finals})
        return quotient.renumbered()

    def renumbered(self, names: Callable[[int], str] = str) -> "FiniteAutomaton":
        """Canonical copy: states renamed in BFS discovery order."""
        order = {self.initial: names(0)}
        queue = [self.initial]
        while queue:
            state = queue.pop(0)
            for symbol in self.out_symbols(state):
                for target in sorted(self.successors(state, symbol), key=symbol_key):
                    if target not in order:
                        order[target] = names(len(order))
                        queue.append(target)
        triples = [(order[s], x, order[t]) for s, x, t in self.transition_triples()
                   if s in order and t in order]
        return FiniteAutomaton(order.values(), self.alphabet, triples,
                               order[self.initial],
                               [order[f] for f in self.finals if f in order])

    def completed(self, alphabet: Iterable[Symbol] | None = None) -> "FiniteAutomaton":
        """Deterministic completion with a non-final sink over ``alphabet``."""
        dfa = self.determinized()
        symbols = tuple(sorted(set(alphabet or ()) | set(dfa.alphabet), key=symbol_key))
        sink = "sink"
        while sink in dfa.states:
            sink += "_"
        triples = dfa.transition_triples()
        for state in itertools.chain(dfa.states, (sink,)):
            for symbol in symbols:
                if state == sink or not dfa.successors(state, symbol):
                    triples.append((state, symbol, sink))
        return FiniteAutomaton(tuple(dfa.states) + (sink,), symbols, triples,
                               dfa.initial, dfa.finals)

    def complemented(self, alphabet: Iterable[Symbol] | None = None) -> "FiniteAutomaton":
        complete = self.completed(alphabet)
        return FiniteAutomaton(complete.states, complete.alphabet,
                               complete.transition_triples(), complete.initial,
                               set(complete.states) - set(complete.finals))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteAutomaton):
            return NotImplemented
        return (self.states == other.states and self.alphabet == other.alphabet
                and self.delta == other.delta and self.initial == other.initial
                and self.finals == other.finals)

    def __repr__(self) -> str:
        return (f"FiniteAutomaton(states={len(self.states)}, "
                f"symbols={len(self.alphabet)}, finals={len(self.finals)}, "
                f"det={self.deterministic})")


def empty_automaton(alphabet: Iterable[Symbol] = ()) -> FiniteAutomaton:
    """The automaton accepting the empty language."""
    return FiniteAutomaton(["0"], alphabet, [], "0", [])


def epsilon_automaton(alphabet: Iterable[Symbol] = ()) -> FiniteAutomaton:
    """The automaton accepting exactly the empty word."""
    return FiniteAutomaton(["0"], alphabet, [], "0", ["0"])


def word_automaton(word: Sequence[Symbol], alphabet: Iterable[Symbol] = ()) -> FiniteAutomaton:
    """The automaton accepting exactly ``word``."""
    symbols = set(alphabet) | set(word)
    states = [str(i) for i in range(len(word) + 1)]
    triples = [(str(i), symbol, str(i + 1)) for i, symbol in enumerate(word)]
    return FiniteAutomaton(states, symbols, triples, "0", [str(len(word))])


def from_words(words: Iterable[Sequence[Symbol]],
               alphabet: Iterable[Symbol] = ()) -> FiniteAutomaton:
    """The automaton for a finite language."""
    result = empty_automaton(alphabet)
    for word in words:
        result = union(result, word_automaton(word, alphabet))
    return result.determinized()


def _determinize(nfa: FiniteAutomaton) -> FiniteAutomaton:
    initial = frozenset({nfa.initial})
    order: dict[frozenset, str] = {initial: "0"}
    queue = [initial]
    triples = []
    finals = []
    if initial & nfa.finals:
        finals.append("0")
    while queue:
        subset = queue.pop(0)
        symbols = sorted({x for q in subset for x in nfa.delta.get(q, {})},
                         key=symbol_key)
        for symbol in symbols:
            target = frozenset(
                t for q in subset for t in nfa.successors(q, symbol))
            if not target:
                continue
            if target not in order:
                order[target] = str(len(order))
                queue.append(target)
                if target & nfa.finals:
                    finals.append(order[target])
            triples.append((order[subset], symbol, order[target]))
    return FiniteAutomaton(order.values(), nfa.alphabet, triples, "0", finals)


# -- boolean operations ----------------------------------------------------

def intersection(left: FiniteAutomaton, right: FiniteAutomaton) -> FiniteAutomaton:
    """Product automaton for the intersection (over the shared alphabet)."""
    alphabet = set(left.alphabet) & set(right.alphabet)
    initial = (left.initial, right.initial)
    seen = {initial}
    queue = [initial]
    triples = []
    while queue:
        pair = queue.pop(0)
        p, q = pair
        for symbol in sorted(set(left.delta.get(p, {})) & set(right.delta.get(q, {})),
                             key=symbol_key):
            if symbol not in alphabet:
                continue
            for pt in left.successors(p, symbol):
                for qt in right.successors(q, symbol):
                    target = (pt, qt)
                    if target not in seen:
                        seen.add(target)
                        queue.append(target)
                    triples.append((pair, symbol, target))
    finals = [s for s in seen if s[0] in left.finals and s[1] in right.finals]
    return FiniteAutomaton(seen, alphabet, triples, initial, finals).renumbered()


def union(left: FiniteAutomaton, right: FiniteAutomaton) -> FiniteAutomaton:
    """Union via a fresh initial state replicating both initials."""
    alphabet = set(left.alphabet) | set(right.alphabet)
    fresh = "u"
    triples = [((0, s), x, (0, t)) for s, x, t in left.transition_triples()]
    triples += [((1, s), x, (1, t)) for s, x, t in right.transition_triples()]
    for tag, side in ((0, left), (1, right)):
        for symbol in side.out_symbols(side.initial):
            for target in side.successors(side.initial, symbol):
                triples.append((fresh, symbol, (tag, target)))
    states = ([fresh] + [(0, s) for s in left.states]
              + [(1, s) for s in right.states])
    finals = [(0, f) for f in left.finals] + [(1, f) for f in right.finals]
    if left.initial in left.finals or right.initial in right.finals:
        finals.append(fresh)
    return FiniteAutomaton(states, alphabet, triples, fresh, finals).renumbered()


def concatenation(left: FiniteAutomaton, right: FiniteAutomaton) -> FiniteAutomaton:
    """ε-free concatenation: final states of ``left`` borrow the initial
    transitions of ``right``."""
    alphabet = set(left.alphabet) | set(right.alphabet)
    triples = [((0, s), x, (0, t)) for s, x, t in left.transition_triples()]
    triples += [((1, s), x, (1, t)) for s, x, t in right.transition_triples()]
    for final in left.finals:
        for symbol in right.out_symbols(right.initial):
            for target in right.successors(right.initial, symbol):
                triples.append(((0, final), symbol, (1, target)))
    states = [(0, s) for s in left.states] + [(1, s) for s in right.states]
    finals = [(1, f) for f in right.finals]
    if right.initial in right.finals:
        finals += [(0, f) for f in left.finals]
    return FiniteAutomaton(states, alphabet, triples, (0, left.initial),
                           finals).renumbered()


def inclusion(left: FiniteAutomaton, right: FiniteAutomaton) -> bool:
    """Decide L(left) ⊆ L(right)."""
    alphabet = set(left.alphabet) | set(right.alphabet)
    return intersection(left, right.complemented(alphabet)).is_empty()


def equivalent(left: FiniteAutomaton, right: FiniteAutomaton) -> bool:
    return inclusion(left, right) and inclusion(right, left)


def prefix_closure(automaton: FiniteAutomaton) -> FiniteAutomaton:
    """Automaton for the prefixes of the accepted language (trimmed,
    every state final)."""
    trimmed = automaton.trim()
    if trimmed.is_empty() and trimmed.initial not in trimmed.finals:
        # Pref of the empty language is empty.
        return empty_automaton(automaton.alphabet)
    return FiniteAutomaton(trimmed.states, trimmed.alphabet,
                           trimmed.transition_triples(), trimmed.initial,
                           trimmed.states)


def infix_automaton(automaton: FiniteAutomaton) -> FiniteAutomaton:
    """Deterministic automaton for the infixes (factors) of the language."""
    trimmed = automaton.trim()
    if not (trimmed.accessible_states() & trimmed.finals):
        return empty_automaton(automaton.alphabet)
    # All trimmed states are simultaneously initial and final; determinize
    # from the all-states subset.
    initial = frozenset(trimmed.states)
    order: dict[frozenset, str] = {initial: "0"}
    queue = [initial]
    triples = []
    finals = ["0"]
    while queue:
        subset = queue.pop(0)
        symbols = sorted({x for q in subset for x in trimmed.delta.get(q, {})},
                         key=symbol_key)
        for symbol in symbols:
            target = frozenset(
                t for q in subset for t in trimmed.successors(q, symbol))
            if not target:
                continue
            if target not in order:
                order[target] = str(len(order))
                queue.append(target)
                finals.append(order[target])
            triples.append((order[subset], symbol, order[target]))
    return FiniteAutomaton(order.values(), trimmed.alphabet, triples, "0", finals)


def shuffle(automata: Sequence[FiniteAutomaton]) -> FiniteAutomaton:
    """Asynchronous product of automata over pairwise disjoint alphabets.

    Each symbol advances exactly the component owning it; a state is
    final iff all components are final.  States are component tuples
    (not renumbered, so callers can inspect the parts).
    """
    owners: dict[Symbol, int] = {}
    for index, automaton in enumerate(automata):
        for symbol in automaton.alphabet:
            if symbol in owners:
                raise ValidationError(
                    f"shuffle alphabets overlap on {symbol!r}")
            owners[symbol] = index
    initial = tuple(a.initial for a in automata)
    seen = {initial}
    queue = [initial]
    triples = []
    while queue:
        state = queue.pop(0)
        for index, automaton in enumerate(automata):
            for symbol in automaton.out_symbols(state[index]):
                for component_target in automaton.successors(state[index], symbol):
                    target = state[:index] + (component_target,) + state[index + 1:]
                    if target not in seen:
                        seen.add(target)
                        queue.append(target)
                    triples.append((state, symbol, target))
    finals = [s for s in seen
              if all(part in a.finals for part, a in zip(s, automata))]
    return FiniteAutomaton(seen, owners.keys(), triples, initial, finals)


def map_symbols(automaton: FiniteAutomaton,
                rename: Callable[[Symbol], Symbol]) -> FiniteAutomaton:
    """Relabel symbols through an injective function."""
    new_alphabet = {rename(symbol) for symbol in automaton.alphabet}
    if len(new_alphabet) != len(automaton.alphabet):
        raise ValidationError("symbol relabeling must be injective")
    triples = [(s, rename(x), t) for s, x, t in automaton.transition_triples()]
    return FiniteAutomaton(automaton.states, new_alphabet, triples,
                           automaton.initial, automaton.finals)


def enumerate_words(automaton: FiniteAutomaton, max_length: int,
                    limit: int = 200_000) -> list[tuple]:
    """All accepted words up to ``max_length``, in length-lexicographic order."""
    dfa = automaton.determinized()
    out = []
    frontier = [(dfa.initial, ())]
    for _ in range(max_length + 1):
        next_frontier = []
        for state, word in frontier:
            if state in dfa.finals:
                out.append(word)
                if len(out) > limit:
                    raise ValidationError("enumeration limit exceeded")
            for symbol in dfa.out_symbols(state):
                target = dfa.step(state, symbol)
                next_frontier.append((target, word + (symbol,)))
        frontier = next_frontier
        if len(frontier) > limit:
            raise ValidationError("enumeration limit exceeded")
    return sorted(out, key=lambda w: (len(w), tuple(map(symbol_key, w))))


# -- letter lexing and regular expressions ---------------------------------

_SPECIAL_LETTERS = "$#&@%"
_OPERATORS = "()|*+"


def lex_letters(text: str, alphabet: Iterable[str] | None = None) -> list[str]:
    """Split a word literal into letters.

    Rules: ``.`` separates letters explicitly; with a known alphabet the
    longest matching letter wins; otherwise a letter is one alphabetic
    character plus trailing digits/underscores, or one special character
    from ``$#&@%``.
    """
    letters = _tokenize(text, alphabet, allow_operators=False)
    return [tok for kind, tok in letters if kind == "letter"]


def _tokenize(text: str, alphabet: Iterable[str] | None,
              allow_operators: bool) -> list[tuple[str, str]]:
    known = sorted(alphabet, key=len, reverse=True) if alphabet else None
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch in " \t.":
            pos += 1
            continue
        if ch in _OPERATORS:
            if not allow_operators:
                raise ParseError(f"unexpected {ch!r} in word literal")
            tokens.append(("op", ch))
            pos += 1
            continue
        # Longest match among known letters and the eps keyword.
        best = None
        if known:
            for letter in known:
                if text.startswith(letter, pos):
                    best = letter
                    break
        if allow_operators and text.startswith(EPS_TOKEN, pos):
            follower = text[pos + len(EPS_TOKEN):pos + len(EPS_TOKEN) + 1]
            keyword_ok = not follower or not (follower.isalnum() or follower == "_")
            if keyword_ok and (best is None or len(best) < len(EPS_TOKEN)):
                tokens.append(("eps", EPS_TOKEN))
                pos += len(EPS_TOKEN)
                continue
        if best is not None:
            tokens.append(("letter", best))
            pos += len(best)
            continue
        if known is None:
            if ch in _SPECIAL_LETTERS:
                tokens.append(("letter", ch))
                pos += 1
                continue
            if ch.isalpha():
                end = pos + 1
                while end < len(text) and (text[end].isdigit() or text[end] == "_"):
                    end += 1
                tokens.append(("letter", text[pos:end]))
                pos = end
                continue
        raise ParseError(f"cannot read a letter at {text[pos:pos + 10]!r}")
    return tokens


# Regex AST nodes are ("eps",), ("letter", a), ("cat", parts),
# ("alt", parts), ("star", node), ("plus", node).

def parse_regex(text: str, alphabet: Iterable[str] | None = None):
    """Parse the regex dialect: concatenation, |, *, +, parentheses, eps."""
    tokens = _tokenize(text, alphabet, allow_operators=True)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        token = tokens[pos]
        pos += 1
        return token

    def parse_alt():
        parts = [parse_cat()]
        while peek() == ("op", "|"):
            take()
            parts.append(parse_cat())
        return parts[0] if len(parts) == 1 else ("alt", tuple(parts))

    def parse_cat():
        parts = []
        while True:
            token = peek()
            if token is None or token in (("op", "|"), ("op", ")")):
                break
            parts.append(parse_rep())
        if not parts:
            raise ParseError("empty alternative (use 'eps')")
        return parts[0] if len(parts) == 1 else ("cat", tuple(parts))

    def parse_rep():
        node = parse_atom()
        while peek() in (("op", "*"), ("op", "+")):
            _, op = take()
            node = ("star", node) if op == "*" else ("plus", node)
        return node

    def parse_atom():
        token = peek()
        if token is None:
            raise ParseError("unexpected end of regex")
        if token == ("op", "("):
            take()
            node = parse_alt()
            if peek() != ("op", ")"):
                raise ParseError("missing closing parenthesis")
            take()
            return node
        if token[0] == "eps":
            take()
            return ("eps",)
        if token[0] == "letter":
            take()
            return ("letter", token[1])
        raise ParseError(f"unexpected token {token[1]!r}")

    tree = parse_alt()
    if pos != len(tokens):
        raise ParseError(f"trailing input after regex: {tokens[pos][1]!r}")
    return tree


def regex_letters(tree) -> set[str]:
    kind = tree[0]
    if kind == "letter":
        return {tree[1]}
    if kind in ("star", "plus"):
        return regex_letters(tree[1])
    if kind in ("cat", "alt"):
        out: set[str] = set()
        for part in tree[1]:
            out |= regex_letters(part)
        return out
    return set()


class _NfaBuilder:
    """Thompson construction with ε-edges, eliminated on export."""

    def __init__(self):
        self.count = 0
        self.edges: list[tuple[int, str | None, int]] = []

    def fresh(self) -> int:
        self.count += 1
        return self.count - 1

    def add(self, source: int, symbol, target: int) -> None:
        self.edges.append((source, symbol, target))

    def build(self, tree) -> tuple[int, int]:
        kind = tree[0]
        start, end = self.fresh(), self.fresh()
        if kind == "eps":
            self.add(start, None, end)
        elif kind == "letter":
            self.add(start, tree[1], end)
        elif kind == "cat":
            previous = start
            for part in tree[1]:
                s, e = self.build(part)
                self.add(previous, None, s)
                previous = e
            self.add(previous, None, end)
        elif kind == "alt":
            for part in tree[1]:
                s, e = self.build(part)
                self.add(start, None, s)
                self.add(e, None, end)
        elif kind in ("star", "plus"):
            s, e = self.build(tree[1])
            self.add(start, None, s)
            self.add(e, None, end)
            self.add(e, None, s)
            if kind == "star":
                self.add(start, None, end)
        else:  # pragma: no cover - parser emits only the kinds above
            raise ValidationError(f"unknown regex node {kind!r}")
        return start, end

    def export(self, start: int, end: int, alphabet: Iterable[str]) -> FiniteAutomaton:
        eps_next: dict[int, set[int]] = {}
        symbol_edges: list[tuple[int, str, int]] = []
        for source, symbol, target in self.edges:
            if symbol is None:
                eps_next.setdefault(source, set()).add(target)
            else:
                symbol_edges.append((source, symbol, target))

        def closure(state: int) -> frozenset[int]:
            seen = {state}
            stack = [state]
            while stack:
                current = stack.pop()
                for nxt in eps_next.get(current, ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            return frozenset(seen)

        closures = {s: closure(s) for s in range(self.count)}
        triples = []
        for source, symbol, target in symbol_edges:
            for origin in range(self.count):
                if source in closures[origin]:
                    triples.append((origin, symbol, target))
        finals = [s for s in range(self.count) if end in closures[s]]
        return FiniteAutomaton(range(self.count), alphabet, triples, start, finals)


def regex_to_automaton(text: str, alphabet: Iterable[str] | None = None) -> FiniteAutomaton:
    """Compile a regex to a trimmed deterministic automaton."""
    tree = parse_regex(text, alphabet)
    letters = regex_letters(tree)
    if alphabet is not None:
        stray = letters - set(alphabet)
        if stray:
            raise ParseError(f"regex uses letters outside the alphabet: {sorted(stray)}")
    builder = _NfaBuilder()
    start, end = builder.build(tree)
    symbols = set(alphabet) if alphabet is not None else letters
    nfa = builder.export(start, end, symbols)
    return nfa.minimized()


# -- regex extraction (state elimination) ----------------------------------

_EMPTY = ("empty",)
_EPS = ("eps",)


def _re_alt(*parts):
    flat = []
    for part in parts:
        if part == _EMPTY:
            continue
        if part[0] == "alt":
            flat.extend(part[1])
        else:
            flat.append(part)
    unique = []
    for part in flat:
        if part not in unique:
            unique.append(part)
    if not unique:
        return _EMPTY
    if len(unique) == 1:
        return unique[0]
    return ("alt", tuple(unique))


def _re_cat(*parts):
    flat = []
    for part in parts:
        if part == _EMPTY:
            return _EMPTY
        if part == _EPS:
            continue
        if part[0] == "cat":
            flat.extend(part[1])
        else:
            flat.append(part)
    if not flat:
        return _EPS
    if len(flat) == 1:
        return flat[0]
    return ("cat", tuple(flat))


def _re_star(part):
    if part in (_EMPTY, _EPS):
        return _EPS
    if part[0] == "star":
        return part
    if part[0] == "alt" and _EPS in part[1]:
        rest = tuple(p for p in part[1] if p != _EPS)
        return _re_star(_re_alt(*rest))
    return ("star", part)


def _render_regex(tree, joiner: str) -> str:
    def render(node, parent_level: int) -> str:
        kind = node[0]
        if kind == "eps":
            return EPS_TOKEN
        if kind == "letter":
            return node[1]
        if kind == "alt":
            text = "|".join(render(part, 1) for part in node[1])
            level = 1
        elif kind == "cat":
            text = joiner.join(render(part, 2) for part in node[1])
            level = 2
        elif kind == "star":
            # render() at level 3 already parenthesizes anything weaker
            # than an atom.
            return render(node[1], 3) + "*"
        else:  # pragma: no cover
            raise ValidationError(f"unknown regex node {kind!r}")
        if level < parent_level:
            text = "(" + text + ")"
        return text

    return render(tree, 0)


def automaton_to_regex(automaton: FiniteAutomaton) -> str:
    """A regex (in the dialect of :func:`parse_regex`) for the language.

    Raises for the empty language, which this dialect cannot express.
    Letters are joined directly when no letter is a proper prefix of
    another, and with ``.`` separators otherwise.
    """
    trimmed = automaton.minimized()
    if trimmed.is_empty():
        raise ValidationError("the empty language has no regex in this dialect")
    letters = [str(x) for x in trimmed.alphabet]
    prefix_free = not any(
        a != b and b.startswith(a) for a in letters for b in letters)
    joiner = "" if prefix_free else "."

    start, end = ("start",), ("end",)
    edges: dict[tuple, dict[tuple, tuple]] = {}

    def add_edge(p, q, expr):
        edges.setdefault(p, {})
        edges[p][q] = _re_alt(edges[p].get(q, _EMPTY), expr)

    for source, symbol, target in trimmed.transition_triples():
        add_edge(("s", source), ("s", target), ("letter", str(symbol)))
    add_edge(start, ("s", trimmed.initial), _EPS)
    for final in trimmed.finals:
        add_edge(("s", final), end, _EPS)

    remaining = [("s", state) for state in trimmed.states]

    def score(node):
        incoming = sum(1 for p, outs in edges.items()
                       if node in outs and p != node)
        outgoing = sum(1 for q in edges.get(node, {}) if q != node)
        return incoming * outgoing

    while remaining:
        remaining.sort(key=lambda n: (score(n), str(n)))
        victim = remaining.pop(0)
        loop = edges.get(victim, {}).get(victim, _EMPTY)
        loop_star = _re_star(loop)
        incoming = [(p, expr) for p, outs in edges.items()
                    for q, expr in outs.items() if q == victim and p != victim]
        outgoing = [(q, expr) for q, expr in edges.get(victim, {}).items()
                    if q != victim]
        for p, in_expr in incoming:
            del edges[p][victim]
            for q, out_expr in outgoing:
                add_edge(p, q, _re_cat(in_expr, loop_star, out_expr))
        edges.pop(victim, None)

    expr = edges.get(start, {}).get(end, _EMPTY)
    if expr == _EMPTY:  # pragma: no cover - emptiness checked above
        raise ValidationError("the empty language has no regex in this dialect")
    return _render_regex(expr, joiner)
