"""Ground-truth machine generators used throughout the test-suite.

Four families:

- ``gen_cdp``: the two-channel connection/deconnection protocol with its
  standard channel bounds;
- ``gen_3sat``: a single-channel machine per 3-CNF formula whose target
  configuration is reachable iff the formula is satisfiable (variable
  gadgets guess a valuation into the channel, clause gadgets rotate the
  channel and insist on one of their literals, a cleanup state drains
  it); optional branch-free clause gadgets (``flat``) and an extra
  send self-loop making satisfiability equivalent to unboundedness and
  non-termination (``unbounded_variant``);
- ``gen_minsky``: a single-channel machine simulating a two-counter
  program, channel contents ``$ a^x1 # b^x2 &`` rotated by the gadgets,
  together with interpreter-derived ground truth;
- ``gen_random``: seed-reproducible random machines with channel bounds
  they actually respect (rejection-sampled against the normal form).
"""

from __future__ import annotations

import itertools
import random
import string
from dataclasses import dataclass

from .automata import FiniteAutomaton
from .bounded import BoundedLangSpec
from .core import FifoMachine, receive, send
from .engine import TargetSpec
from .errors import ValidationError
from .normalform import normalize_machine

__all__ = [
    "CnfFormula",
    "MinskyProgram",
    "gen_cdp",
    "gen_3sat",
    "gen_minsky",
    "gen_random",
    "minsky_reachable",
]


# -- connection/deconnection protocol ---------------------------------------

def gen_cdp():
    """The four-state product of the connection/deconnection protocol:
    channel c1 carries the open/close requests a and b, channel c2 the
    acknowledgements e; bounds (ab)*(a|eps)(ab)* and e*."""
    states = [f"q{l}{r}" for l in "01" for r in "01"]
    transitions = []
    for r in "01":
        transitions.append((f"q0{r}", send("c1", "a"), f"q1{r}"))
        transitions.append((f"q1{r}", send("c1", "b"), f"q0{r}"))
        transitions.append((f"q1{r}", receive("c2", "e"), f"q0{r}"))
    for l in "01":
        transitions.append((f"q{l}0", receive("c1", "a"), f"q{l}1"))
        transitions.append((f"q{l}1", receive("c1", "b"), f"q{l}0"))
        transitions.append((f"q{l}1", send("c2", "e"), f"q{l}0"))
    machine = FifoMachine(
        states=states, channels=["c1", "c2"],
        letters={"c1": ("a", "b"), "c2": ("e",)},
        transitions=transitions, initial="q00")
    specs = (BoundedLangSpec("c1", ["ab", "a", "ab"], "(ab)*(a|eps)(ab)*"),
             BoundedLangSpec("c2", ["e"], "e*"))
    return machine, specs


# -- 3SAT gadget machines ---------------------------------------------------

@dataclass(frozen=True)
class CnfFormula:
    """A 3-CNF formula: ``variables`` counts x_1..x_n, each clause is a
    triple of nonzero literals (k for x_k, -k for its negation)."""

    variables: int
    clauses: tuple

    def __post_init__(self):
        if self.variables < 1:
            raise ValidationError("formula needs at least one variable")
        clauses = tuple(tuple(clause) for clause in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        for clause in clauses:
            if len(clause) != 3:
                raise ValidationError(
                    f"clauses have exactly three literals, got {clause}")
            for literal in clause:
                if not isinstance(literal, int) or literal == 0 \
                        or abs(literal) > self.variables:
                    raise ValidationError(
                        f"literal {literal!r} out of range 1..{self.variables}")

    def satisfying_assignment(self):
        """The first satisfying assignment in lexicographic order, as a
        variable->bool dict, or None.  Brute force; formulas are small."""
        if self.variables > 20:
            raise ValidationError(
                "brute-force satisfiability is limited to 20 variables")
        for bits in itertools.product((False, True), repeat=self.variables):
            assignment = {k + 1: bits[k] for k in range(self.variables)}
            if all(any(assignment[abs(l)] == (l > 0) for l in clause)
                   for clause in self.clauses):
                return assignment
        return None

    @property
    def satisfiable(self) -> bool:
        return self.satisfying_assignment() is not None


def _literal_letter(literal: int) -> str:
    return f"l{literal}" if literal > 0 else f"L{-literal}"


def _star_sequence_dfa(letters) -> FiniteAutomaton:
    """The language letters[0]* letters[1]* ... letters[K-1]* (letters
    may repeat), as a DFA: state i allows continuing at the first
    position >= i carrying the read letter."""
    count = len(letters)
    positions = {}
    for index in range(count - 1, -1, -1):
        positions[index] = dict(positions.get(index + 1, {}))
        positions[index][letters[index]] = index
    states = [f"s{i}" for i in range(count + 1)]
    triples = []
    for i in range(count + 1):
        for letter, j in positions.get(i, {}).items():
            triples.append((f"s{i}", letter, f"s{j}"))
    return FiniteAutomaton(states, sorted(set(letters)), triples, "s0",
                           states)


def _rotate_step(transitions, states, source, letter, mid, target):
    """A receive-then-resend pair through a fresh intermediate state."""
    states.add(mid)
    transitions.append((source, receive("c", letter), mid))
    transitions.append((mid, send("c", letter), target))


def gen_3sat(cnf: CnfFormula, flat: bool = False,
             unbounded_variant: bool = False):
    """A single-channel machine whose cleanup state is reachable with an
    empty channel iff ``cnf`` is satisfiable.

    Returns (machine, specs, target, facts).  ``facts`` records the
    brute-force satisfiability verdict and the letter-bounded block the
    bound repeats.  With ``unbounded_variant`` the cleanup state gains
    a marker-send self-loop, making the machine unbounded (and
    non-terminating) iff the formula is satisfiable.
    """
    n, m = cnf.variables, len(cnf.clauses)
    literal_letters = [letter
                       for k in range(1, n + 1)
                       for letter in (f"l{k}", f"L{k}")]
    alphabet = literal_letters + ["#"]

    cleanup_entry = "u1" if flat else "clean"
    states = {f"v{k}" for k in range(1, n + 2)}
    transitions = []
    # variable gadgets: guess one polarity per variable, in order
    for k in range(1, n + 1):
        transitions.append((f"v{k}", send("c", f"l{k}"), f"v{k + 1}"))
        transitions.append((f"v{k}", send("c", f"L{k}"), f"v{k + 1}"))
    # stop marker
    first_clause = "g1" if m else cleanup_entry
    states.add(first_clause)
    transitions.append((f"v{n + 1}", send("c", "#"), first_clause))

    for i, clause in enumerate(cnf.clauses, start=1):
        exit_state = f"g{i + 1}" if i < m else cleanup_entry
        states.add(exit_state)
        for j, literal in enumerate(clause, start=1):
            if flat:
                _flat_branch(transitions, states, n, i, j, literal,
                             exit_state)
            else:
                _rotating_branch(transitions, states, literal_letters,
                                 i, j, literal, exit_state)

    if flat:
        _flat_cleanup(transitions, states, n)
    else:
        for letter in alphabet:
            transitions.append(("clean", receive("c", letter), "clean"))
    states.add("clean")
    if unbounded_variant:
        transitions.append(("clean", send("c", "#"), "clean"))

    machine = FifoMachine(
        states=sorted(states), channels=["c"], letters={"c": alphabet},
        transitions=transitions, initial="v1")

    block = [(letter,) for letter in alphabet]
    words = tuple(block * (m + 1))
    language = _star_sequence_dfa([w[0] for w in words])
    specs = (BoundedLangSpec("c", words, language),)
    target = TargetSpec(states=("clean",), contents=((),))
    facts = {"satisfiable": cnf.satisfiable, "block": tuple(alphabet),
             "channel_capacity": n + 1}
    return machine, specs, target, facts


def _rotating_branch(transitions, states, literal_letters, i, j, literal,
                     exit_state):
    """One clause branch: rotate the channel until the branch's literal
    goes by, keep rotating, then pass the marker through and leave.
    The entry state copies the first step of each branch, so picking a
    branch and starting its rotation is a single decision."""
    entry = f"g{i}"
    target_letter = _literal_letter(literal)
    unmatched = f"g{i}.{j}"
    matched = f"g{i}.{j}m"
    states.update({entry, unmatched, matched})
    for letter in literal_letters:
        mid = f"g{i}.{j}.{letter}"
        _rotate_step(transitions, states, unmatched, letter, mid, unmatched)
        transitions.append((entry, receive("c", letter), mid))
        matched_mid = f"g{i}.{j}m.{letter}"
        _rotate_step(transitions, states, matched, letter, matched_mid,
                     matched)
    match_mid = f"g{i}.{j}t"
    _rotate_step(transitions, states, unmatched, target_letter, match_mid,
                 matched)
    transitions.append((entry, receive("c", target_letter), match_mid))
    hash_mid = f"g{i}.{j}#"
    _rotate_step(transitions, states, matched, "#", hash_mid, exit_state)


def _flat_branch(transitions, states, n, i, j, literal, exit_state):
    """Branch-free clause branch: rotate the whole channel once, in
    variable order, pinning the branch's own position to its literal."""
    entry = f"g{i}"
    states.add(entry)
    variable, wanted = abs(literal), _literal_letter(literal)
    chain = [entry] + [f"g{i}.{j}p{k}" for k in range(2, n + 1)] \
        + [f"g{i}.{j}p#"]
    states.update(chain[1:])
    for k in range(1, n + 1):
        allowed = [wanted] if k == variable else [f"l{k}", f"L{k}"]
        for letter in allowed:
            mid = f"g{i}.{j}p{k}.{letter}"
            _rotate_step(transitions, states, chain[k - 1], letter, mid,
                         chain[k])
    hash_mid = f"g{i}.{j}p#.#"
    _rotate_step(transitions, states, chain[n], "#", hash_mid, exit_state)


def _flat_cleanup(transitions, states, n):
    """Branch-free cleanup: receive whichever polarity is present for
    each variable in order (skipping ahead is allowed), then the
    marker.  Only a full drain lets the marker through to the final
    state."""
    chain = [f"u{k}" for k in range(1, n + 2)]
    states.update(chain)
    for k in range(1, n + 1):
        for source in chain[:k]:
            for letter in (f"l{k}", f"L{k}"):
                transitions.append((source, receive("c", letter), chain[k]))
    for source in chain:
        transitions.append((source, receive("c", "#"), "clean"))


# -- two-counter program simulation -----------------------------------------

@dataclass(frozen=True)
class MinskyProgram:
    """A two-counter program.  Rules are attached to states:
    ``("inc", source, j, target)`` adds one to counter j (1 or 2) and
    jumps; ``("dec", source, j, positive_target, zero_target)`` jumps
    to ``positive_target`` after decrementing when counter j is
    positive, otherwise to ``zero_target``.  States without rules
    halt."""

    states: tuple
    rules: tuple
    initial: str

    def __post_init__(self):
        states = tuple(self.states)
        rules = tuple(tuple(rule) for rule in self.rules)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "rules", rules)
        declared = set(states)
        if self.initial not in declared:
            raise ValidationError(f"initial state {self.initial!r} not declared")
        for rule in rules:
            if len(rule) < 4 or rule[1] not in declared:
                raise ValidationError(f"malformed rule {rule!r}")
            kind = rule[0]
            if kind == "inc":
                ok = len(rule) == 4 and rule[3] in declared
            elif kind == "dec":
                ok = len(rule) == 5 and rule[3] in declared \
                    and rule[4] in declared
            else:
                ok = False
            if not ok or rule[2] not in (1, 2):
                raise ValidationError(f"malformed rule {rule!r}")

    def rules_from(self, state: str):
        return tuple(rule for rule in self.rules if rule[1] == state)


def minsky_reachable(prog: MinskyProgram, *, max_counter: int = 4):
    """All (state, x1, x2) triples a run can visit, by direct
    interpretation.  Raises when a counter would exceed ``max_counter``
    (the generators only promise ground truth for bounded programs)."""
    seen = {(prog.initial, 0, 0)}
    frontier = [(prog.initial, 0, 0)]
    while frontier:
        state, x1, x2 = frontier.pop()
        for rule in prog.rules_from(state):
            counters = [x1, x2]
            if rule[0] == "inc":
                counters[rule[2] - 1] += 1
                if counters[rule[2] - 1] > max_counter:
                    raise ValidationError(
                        f"counter x{rule[2]} exceeds {max_counter}; ground "
                        f"truth is only computed for bounded programs")
                successor = (rule[3], *counters)
            elif counters[rule[2] - 1] > 0:
                counters[rule[2] - 1] -= 1
                successor = (rule[3], *counters)
            else:
                successor = (rule[4], *counters)
            if successor not in seen:
                seen.add(successor)
                frontier.append(successor)
    return frozenset(seen)


def canonical_contents(x1: int, x2: int) -> tuple:
    """The channel image of counter values: $ a^x1 # b^x2 &."""
    return ("$",) + ("a",) * x1 + ("#",) + ("b",) * x2 + ("&",)


class _MidStates:
    def __init__(self, used):
        self.used = set(used)
        self.count = 0

    def fresh(self, prefix: str) -> str:
        while True:
            self.count += 1
            name = f"{prefix}.{self.count}"
            if name not in self.used:
                self.used.add(name)
                return name


def _receive_send(transitions, mids, prefix, source, letter_in, letter_out,
                  target):
    mid = mids.fresh(prefix)
    transitions.append((source, receive("c", letter_in), mid))
    transitions.append((mid, send("c", letter_out), target))
    return mid


def _rotation_loop(transitions, mids, prefix, state, letter):
    mid = mids.fresh(prefix)
    transitions.append((state, receive("c", letter), mid))
    transitions.append((mid, send("c", letter), state))


def gen_minsky(prog: MinskyProgram, *, max_counter: int = 4):
    """A single-channel machine simulating ``prog``: state q with
    counters (x1, x2) appears as control state q with channel contents
    $ a^x1 # b^x2 &.  Gadgets rotate the full contents through the
    channel once per step, inserting or dropping one a/b.

    Returns (machine, facts): facts map each interpreter-reachable
    program state to the channel contents it is reachable with.
    """
    transitions = []
    mids = _MidStates(prog.states)
    boot = [mids.fresh("boot") for _ in range(3)]
    for state, letter, target in zip(
            boot, "$#&", boot[1:] + [prog.initial]):
        transitions.append((state, send("c", letter), target))

    for index, rule in enumerate(prog.rules, start=1):
        prefix = f"d{index}"
        kind, source, counter = rule[0], rule[1], rule[2]
        if kind == "inc":
            _gen_inc(transitions, mids, prefix, source, counter, rule[3])
        else:
            _gen_dec(transitions, mids, prefix, source, counter, rule[3],
                     rule[4])

    machine = FifoMachine(
        states=sorted(mids.used), channels=["c"],
        letters={"c": ("$", "a", "#", "b", "&")},
        transitions=transitions, initial=boot[0])
    facts = {}
    for state, x1, x2 in sorted(minsky_reachable(prog,
                                                 max_counter=max_counter)):
        facts.setdefault(state, set()).add(canonical_contents(x1, x2))
    facts = {state: frozenset(words) for state, words in facts.items()}
    return machine, facts


def _gen_inc(transitions, mids, prefix, source, counter, target):
    """Rotate $ .. & once, sending one extra a (counter 1, before the
    middle marker) or b (counter 2, before the end marker)."""
    rotate_a = mids.fresh(prefix)
    _receive_send(transitions, mids, prefix, source, "$", "$", rotate_a)
    _rotation_loop(transitions, mids, prefix, rotate_a, "a")
    rotate_b = mids.fresh(prefix)
    if counter == 1:
        hash_seen = mids.fresh(prefix)
        transitions.append((rotate_a, receive("c", "#"), hash_seen))
        inserted = mids.fresh(prefix)
        transitions.append((hash_seen, send("c", "a"), inserted))
        transitions.append((inserted, send("c", "#"), rotate_b))
    else:
        _receive_send(transitions, mids, prefix, rotate_a, "#", "#",
                      rotate_b)
    _rotation_loop(transitions, mids, prefix, rotate_b, "b")
    if counter == 1:
        _receive_send(transitions, mids, prefix, rotate_b, "&", "&", target)
    else:
        end_seen = mids.fresh(prefix)
        transitions.append((rotate_b, receive("c", "&"), end_seen))
        inserted = mids.fresh(prefix)
        transitions.append((end_seen, send("c", "b"), inserted))
        transitions.append((inserted, send("c", "&"), target))


def _gen_dec(transitions, mids, prefix, source, counter, positive_target,
             zero_target):
    """Rotate once; the head letter after the counter's left marker
    decides the branch: its own letter (drop one, keep rotating) or the
    next marker (counter is zero, rotate the rest unchanged)."""
    head = mids.fresh(prefix)
    _receive_send(transitions, mids, prefix, source, "$", "$", head)
    if counter == 1:
        # positive: consume one a, rotate the rest
        rotate_a = mids.fresh(prefix)
        transitions.append((head, receive("c", "a"), rotate_a))
        _rotation_loop(transitions, mids, prefix, rotate_a, "a")
        rotate_b = mids.fresh(prefix)
        _receive_send(transitions, mids, prefix, rotate_a, "#", "#",
                      rotate_b)
        _rotation_loop(transitions, mids, prefix, rotate_b, "b")
        _receive_send(transitions, mids, prefix, rotate_b, "&", "&",
                      positive_target)
        # zero: the middle marker is at the head
        zero_b = mids.fresh(prefix)
        _receive_send(transitions, mids, prefix, head, "#", "#", zero_b)
        _rotation_loop(transitions, mids, prefix, zero_b, "b")
        _receive_send(transitions, mids, prefix, zero_b, "&", "&",
                      zero_target)
    else:
        rotate_a = head
        _rotation_loop(transitions, mids, prefix, rotate_a, "a")
        branch = mids.fresh(prefix)
        _receive_send(transitions, mids, prefix, rotate_a, "#", "#", branch)
        # positive: consume one b, rotate the rest
        rotate_b = mids.fresh(prefix)
        transitions.append((branch, receive("c", "b"), rotate_b))
        _rotation_loop(transitions, mids, prefix, rotate_b, "b")
        _receive_send(transitions, mids, prefix, rotate_b, "&", "&",
                      positive_target)
        # zero: the end marker is at the head
        _receive_send(transitions, mids, prefix, branch, "&", "&",
                      zero_target)


# -- random bundles ---------------------------------------------------------

_LETTER_POOLS = [string.ascii_lowercase[i:i + 3] for i in range(0, 24, 3)]


def gen_random(seed: int, *, states: int = 4, channels: int = 2,
               max_words: int = 2, max_word_length: int = 2,
               transitions: int = 6, attempts: int = 200):
    """A reproducible random machine plus channel bounds it respects:
    candidates are redrawn until every control state survives
    normalization, so the control graph's send projections fit the
    generated tuple pattern."""
    if not (1 <= states <= 26 and 1 <= channels <= len(_LETTER_POOLS)):
        raise ValidationError("size parameters out of range")
    rng = random.Random(seed)
    for _ in range(attempts):
        candidate = _draw_bundle(rng, states, channels, max_words,
                                 max_word_length, transitions)
        if candidate is not None:
            return candidate
    raise ValidationError(
        f"no valid machine found in {attempts} attempts for seed {seed}")


def _draw_bundle(rng, states, channels, max_words, max_word_length,
                 transition_count):
    channel_names = [f"c{k + 1}" for k in range(channels)]
    specs = []
    letters = {}
    for k, channel in enumerate(channel_names):
        pool = _LETTER_POOLS[k]
        words = tuple(
            "".join(rng.choice(pool)
                    for _ in range(rng.randint(1, max_word_length)))
            for _ in range(rng.randint(1, max_words)))
        letters[channel] = tuple(sorted({a for word in words for a in word}))
        regex = "".join(f"({word})*" for word in words)
        specs.append(BoundedLangSpec(channel, words, regex))

    names = [f"q{i}" for i in range(states)]
    transitions = []
    for _ in range(transition_count):
        channel = rng.choice(channel_names)
        action = (send if rng.random() < 0.6 else receive)(
            channel, rng.choice(letters[channel]))
        transitions.append((rng.choice(names), action, rng.choice(names)))
    machine = FifoMachine(states=names, channels=channel_names,
                          letters=letters, transitions=transitions,
                          initial=names[0])
    bundle = normalize_machine(machine, specs)
    surviving = {bundle.machine_state(s) for s in bundle.machine.states}
    if surviving != set(names):
        return None
    if not any(t.action.is_send for t in bundle.machine.transitions):
        return None
    return machine, tuple(specs)
