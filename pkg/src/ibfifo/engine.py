"""Decision procedures over normalized bundles and counter machines.

The deciders answer configuration reachability, rational-relation and
control-state reachability, deadlock, boundedness and termination.  They
share one pipeline: translate the query into bundle coordinates, prune
with a coverability tree, search the compiled counter machine
breadth-first (exact when the search saturates), refine remaining
negatives with a residue-capped abstraction, and otherwise report an
explicit Unknown with the exhausted bound.  Every Yes carries a witness
trace in the machine's original alphabet, verified by replay before it
is returned; Bounded/Terminating are exact; Unbounded/NonTerminating
carry a pumpable stem/loop pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .automata import FiniteAutomaton, enumerate_words
from .core import (
    Contents,
    CounterConfig,
    CounterMachine,
    FifoAction,
    FifoConfig,
    FifoTransition,
    counter_run_configs,
    fifo_step,
)
from .counters import (
    compiled_counter_machine,
    contents_to_valuation,
    reconstruct_contents,
)
from .errors import (
    InternalError,
    SearchBudgetExceeded,
    ValidationError,
)
from .normalform import NormalFormBundle, translate_query
from .relations import (
    RationalRelationSpec,
    denotation,
    membership_in_Ta,
    relation_accepts,
)
from .search import (
    CounterExploration,
    build_coverability_tree,
    capped_reachability,
    chain_domination,
    explore_counter,
    explore_fifo,
    find_cycle,
    find_self_covering,
)

YES = "yes"
NO = "no"
UNKNOWN = "unknown"

#: First, cheap breadth-first pass: most positive answers are shallow.
QUICK_SEARCH_NODES = 8_000
#: Full breadth-first budget when the quick pass is inconclusive.
DEFAULT_SEARCH_NODES = 120_000
#: Node budget for coverability trees and capped abstractions.
DEFAULT_ABSTRACT_NODES = 200_000
#: Node budget for the execution-tree self-covering search.
DEFAULT_TREE_NODES = 300_000
#: Exploration budget for boundedness/termination saturation attempts.
DEFAULT_PUMP_SEARCH_NODES = 60_000
#: How many times a pump witness is repeated during verification.
PUMP_ROUNDS = 5
#: Cap on words enumerated from a finite relation before falling back
#: to the generic search.
RELATION_ENUM_LIMIT = 400


@dataclass(frozen=True)
class PumpWitness:
    """A stem and a repeatable loop, as actions of the original machine.

    Replaying ``stem`` then ``loop`` k times is executable for every k;
    for unboundedness witnesses each round strictly grows the channel
    contents.
    """

    stem: tuple
    loop: tuple

    def __str__(self) -> str:
        stem = " ".join(str(a) for a in self.stem) or "ε"
        loop = " ".join(str(a) for a in self.loop)
        return f"{stem} ({loop})^ω"


@dataclass(frozen=True)
class Verdict:
    """The outcome of a decision procedure.

    ``answer`` is yes/no/unknown; ``witness`` is an action trace or a
    :class:`PumpWitness` when one exists; ``method`` names the
    sub-procedure that concluded; ``bound`` reports the exhausted
    exploration size when the answer is unknown.
    """

    answer: str
    witness: object = None
    method: str | None = None
    bound: int | None = None

    @property
    def is_yes(self) -> bool:
        return self.answer == YES

    @property
    def is_no(self) -> bool:
        return self.answer == NO

    @property
    def is_unknown(self) -> bool:
        return self.answer == UNKNOWN

    def __str__(self) -> str:
        parts = [self.answer]
        if self.method:
            parts.append(f"[{self.method}]")
        if self.witness is not None:
            if isinstance(self.witness, PumpWitness):
                parts.append(str(self.witness))
            else:
                parts.append(" ".join(str(a) for a in self.witness) or "ε")
        if self.bound is not None:
            parts.append(f"(searched {self.bound})")
        return " ".join(parts)


@dataclass(frozen=True)
class TargetSpec:
    """What a reachability query asks for: one or more control states,
    optionally constrained to explicit contents or to a rational
    relation over the channel contents.  With neither constraint, any
    contents will do (control-state reachability)."""

    states: tuple
    contents: object = None
    relation: object = None

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValidationError("target needs at least one control state")
        object.__setattr__(self, "states", states)
        if self.contents is not None and self.relation is not None:
            raise ValidationError(
                "target takes explicit contents or a relation, not both")


def decide_target(bundle: NormalFormBundle, target: TargetSpec, *,
                  max_nodes: int | None = None,
                  max_depth: int | None = None,
                  workers: int = 1) -> Verdict:
    """Decide reachability of a :class:`TargetSpec`: yes if any of its
    control states admits the requested contents, no if all are
    refuted, unknown otherwise."""
    best_unknown = None
    for state in target.states:
        if target.contents is not None:
            verdict = decide_reachability(
                bundle, state, target.contents, max_nodes=max_nodes,
                max_depth=max_depth, workers=workers)
        elif target.relation is not None:
            verdict = decide_rational_reachability(
                bundle, state, target.relation, max_nodes=max_nodes,
                max_depth=max_depth, workers=workers)
        else:
            verdict = decide_control_state(
                bundle, state, max_nodes=max_nodes, max_depth=max_depth,
                workers=workers)
        if verdict.is_yes:
            return verdict
        if verdict.is_unknown and best_unknown is None:
            best_unknown = verdict
    return best_unknown if best_unknown is not None else verdict


# -- shared plumbing --------------------------------------------------------

def _require_bundle(value, what: str) -> NormalFormBundle:
    if not isinstance(value, NormalFormBundle):
        raise ValidationError(
            f"{what} needs a normal-form bundle: its pumping arguments "
            f"rely on runs never touching a zero-tested counter again, "
            f"which only machines compiled from a bundle guarantee")
    return value


def _word_length_moduli(bundle: NormalFormBundle, indexing) -> dict:
    """Each counter's natural period: the length of its tuple word."""
    by_channel = {spec.channel: spec for spec in bundle.specs}
    moduli = {}
    for counter in indexing.counters:
        channel = indexing.channel_of_counter[counter]
        word_index = indexing.word_index_of_counter[counter]
        moduli[counter] = len(by_channel[channel].tuple[word_index])
    return moduli


def _fifo_steps(steps: Sequence) -> tuple:
    """Counter transitions back to the FIFO transitions they compile from."""
    out = []
    for step in steps:
        if step.label is None:
            raise InternalError(
                "compiled counter transition carries no action label")
        out.append(FifoTransition(step.source, step.label, step.target))
    return tuple(out)


def _replay_to_config(bundle: NormalFormBundle, steps: Sequence) -> FifoConfig:
    """Replay counter-trace steps on the bundle machine, exactly."""
    config = bundle.machine.initial_config()
    for transition in _fifo_steps(steps):
        config = fifo_step(bundle.machine, config, transition)
    return config


def _original_actions(bundle: NormalFormBundle, steps: Sequence) -> tuple:
    return bundle.hom.to_original_trace(
        tuple(step.label for step in steps))


def _verified_trace(bundle: NormalFormBundle, steps: Sequence,
                    check) -> tuple:
    """Replay a counter trace on the bundle machine, assert the final
    configuration satisfies ``check``, and return the trace in original
    actions."""
    final = _replay_to_config(bundle, steps)
    if not check(final):
        raise InternalError(
            f"witness replay ended at {final}, which misses the target")
    return _original_actions(bundle, steps)


def _verify_counter_pump(machine: CounterMachine, stem: Sequence,
                         loop: Sequence, *, strict: bool,
                         rounds: int = PUMP_ROUNDS) -> None:
    """Check that the loop repeats ``rounds`` times from the stem's end,
    with (strictly, when asked) non-decreasing valuations per round."""
    if not loop:
        raise InternalError("pump witness has an empty loop")
    config = counter_run_configs(machine, tuple(stem))[-1]
    for _ in range(rounds):
        after = counter_run_configs(machine, tuple(loop), start=config)[-1]
        if after.state != config.state:
            raise InternalError("pump loop does not return to its state")
        if any(b < a for a, b in zip(config.valuation, after.valuation)):
            raise InternalError("pump loop shrinks a counter")
        if strict and after.valuation == config.valuation:
            raise InternalError("pump loop fails to grow any counter")
        config = after


def _pump_witness(bundle: NormalFormBundle, machine: CounterMachine,
                  stem: Sequence, loop: Sequence, *,
                  strict: bool) -> PumpWitness:
    _verify_counter_pump(machine, stem, loop, strict=strict)
    return PumpWitness(_original_actions(bundle, stem),
                       _original_actions(bundle, loop))


def _search_budgets(max_nodes: int | None, default: int) -> tuple[int, int]:
    full = default if max_nodes is None else int(max_nodes)
    if full < 1:
        raise ValidationError("node budget must be at least 1")
    return min(QUICK_SEARCH_NODES, full), full


# -- coverability filter ----------------------------------------------------

UNREACHABLE = "unreachable"
MAYBE = "maybe"


def coverability_filter(machine: CounterMachine, state: str,
                        valuation: Sequence[int], *,
                        max_nodes: int = DEFAULT_ABSTRACT_NODES) -> str:
    """Sound unreachability pruning for (state, valuation) targets.

    Returns ``"unreachable"`` when a complete abstract tree proves no
    run covers the target, else ``"maybe"``.  The abstraction pins a
    zero-tested counter to zero afterwards, so the answer is only sound
    for machines whose runs never operate a counter after testing it —
    true of every machine this package compiles or constructs.
    """
    if state not in machine.states:
        raise ValidationError(f"unknown control state {state!r}")
    valuation = tuple(valuation)
    if len(valuation) != len(machine.counters):
        raise ValidationError(
            f"expected {len(machine.counters)} counter values, "
            f"got {len(valuation)}")
    tree = build_coverability_tree(machine, max_nodes=max_nodes)
    if not tree.may_cover(state, valuation):
        return UNREACHABLE
    return MAYBE


# -- configuration reachability ---------------------------------------------

def _scan_nodes(exploration: CounterExploration, targets: Mapping,
                indexing, specs):
    """First explored node matching some target, in discovery order.

    ``targets`` maps (state, valuation) to the set of contents wanted
    there; a node matches when its reconstructed contents is one of
    them.  Returns (node, contents) or None.
    """
    for node in exploration.nodes():
        config, last = node[0], node[1]
        wanted = targets.get((config.state, config.valuation))
        if not wanted:
            continue
        rebuilt = reconstruct_contents(indexing, specs,
                                       config.valuation, last)
        if rebuilt in wanted:
            return node, rebuilt
    return None


def _decide_candidates(bundle: NormalFormBundle,
                       candidates: Sequence[tuple], *,
                       max_nodes: int | None, max_depth: int | None,
                       workers: int) -> Verdict:
    """Decide whether any (product state, contents) candidate is
    reachable with a complete send projection."""
    accepting = [(state, tuple(tuple(word) for word in contents))
                 for state, contents in candidates
                 if bundle.is_accepting(state)]
    if not accepting:
        return Verdict(NO, method="acceptance")
    machine, indexing = compiled_counter_machine(bundle)
    specs = bundle.specs
    channels = bundle.machine.channels

    targets: dict = {}
    for state, contents in accepting:
        valuation = contents_to_valuation(indexing, contents)
        targets.setdefault((state, valuation), set()).add(contents)

    def matches(config: FifoConfig) -> bool:
        wanted = targets.get(
            (config.state, contents_to_valuation(indexing, config.contents)))
        return bool(wanted) and config.contents in wanted

    tree = build_coverability_tree(machine,
                                   max_nodes=DEFAULT_ABSTRACT_NODES)
    if all(not tree.may_reach(state, valuation)
           for state, valuation in targets):
        return Verdict(NO, method="coverability")

    quick, full = _search_budgets(max_nodes, DEFAULT_SEARCH_NODES)
    exploration = explore_counter(
        machine, max_depth=max_depth, max_nodes=quick,
        track_last_sent=True, channels=channels, workers=workers)
    hit = _scan_nodes(exploration, targets, indexing, specs)
    if hit is not None:
        node, _ = hit
        trace = _verified_trace(bundle, exploration.witness(node), matches)
        return Verdict(YES, witness=trace, method="bounded-exhaustive")
    if exploration.saturated:
        return Verdict(NO, method="bounded-exhaustive")

    caps = {counter: 2 for counter in machine.counters}
    for _, valuation in targets:
        for counter, value in zip(machine.counters, valuation):
            caps[counter] = max(caps[counter], value + 2)
    capped = capped_reachability(
        machine, caps, moduli=_word_length_moduli(bundle, indexing),
        channels=channels, max_nodes=DEFAULT_ABSTRACT_NODES,
        workers=workers)
    if capped.complete:
        if all(capped.excludes(state, valuation)
               for state, valuation in targets):
            return Verdict(NO, method="capped")
        for node in capped.nodes():
            state, valuation, last, pure = node
            if not pure:
                continue
            wanted = targets.get((state, valuation))
            if not wanted:
                continue
            rebuilt = reconstruct_contents(indexing, specs, valuation, last)
            if rebuilt in wanted:
                trace = _verified_trace(bundle, capped.witness(node), matches)
                return Verdict(YES, witness=trace, method="capped")

    if full > quick:
        exploration = explore_counter(
            machine, max_depth=max_depth, max_nodes=full,
            track_last_sent=True, channels=channels, workers=workers)
        hit = _scan_nodes(exploration, targets, indexing, specs)
        if hit is not None:
            node, _ = hit
            trace = _verified_trace(bundle, exploration.witness(node),
                                    matches)
            return Verdict(YES, witness=trace, method="bounded-exhaustive")
        if exploration.saturated:
            return Verdict(NO, method="bounded-exhaustive")
    return Verdict(UNKNOWN, method="bounded-exhaustive",
                   bound=len(exploration.index))


def _fifo_bounded_scan(bundle: NormalFormBundle, wanted, *,
                       max_nodes: int | None, max_depth: int | None,
                       channel_bound: int, workers: int) -> Verdict:
    """Channel-length-bounded FIFO search: sound Yes, never No.

    ``wanted(config)`` decides whether a configuration (at an accepting
    state, already filtered by the caller) satisfies the target.
    """
    _, full = _search_budgets(max_nodes, DEFAULT_SEARCH_NODES)
    exploration = explore_fifo(
        bundle, max_depth=max_depth, max_channel_length=channel_bound,
        max_nodes=full, workers=workers)
    for config in exploration.configs():
        if not bundle.is_accepting(config.state):
            continue
        if not wanted(config):
            continue
        steps = exploration.index.trace(config)
        final = bundle.machine.initial_config()
        for transition in steps:
            final = fifo_step(bundle.machine, final, transition)
        if final != config:
            raise InternalError("witness replay diverged from the search")
        trace = bundle.hom.to_original_trace(
            tuple(t.action for t in steps))
        return Verdict(YES, witness=trace, method="bounded-exhaustive")
    return Verdict(UNKNOWN, method="depth-limited",
                   bound=len(exploration.index))


def _target_config(bundle: NormalFormBundle, state: str,
                   contents) -> FifoConfig:
    machine = bundle.original_machine
    config = machine.config(state, contents if contents is not None else ())
    for channel, word in zip(machine.channels, config.contents):
        for letter in word:
            if letter not in machine.letters[channel]:
                raise ValidationError(
                    f"letter {letter!r} is not in channel {channel}'s "
                    f"alphabet")
    return config


def decide_reachability(bundle: NormalFormBundle, state: str,
                        contents=(), *, max_nodes: int | None = None,
                        max_depth: int | None = None,
                        channel_bound: int | None = None,
                        workers: int = 1) -> Verdict:
    """Is the configuration (state, contents) reachable by a run whose
    send projections complete the channel languages?

    ``state`` and ``contents`` are in the original machine's
    coordinates; contents may be a channel->word mapping or a sequence
    in channel order.  With ``channel_bound`` the search runs on FIFO
    configurations whose channels never exceed that length — a sound
    semi-decision (Yes or Unknown only).
    """
    bundle = _require_bundle(bundle, "reachability analysis")
    target = _target_config(bundle, state, contents)
    translated = translate_query(bundle, state=state,
                                 contents=target.contents)
    options = translated["contents_options"]
    if not options:
        return Verdict(NO, method="translation")
    candidates = [(product_state, lifted)
                  for product_state in translated["states"]
                  for lifted in options]
    if channel_bound is not None:
        accepting_pairs = [(s, lifted) for s, lifted in candidates
                           if bundle.is_accepting(s)]
        if not accepting_pairs:
            return Verdict(NO, method="acceptance")
        states = {s for s, _ in accepting_pairs}
        lifted_set = {lifted for _, lifted in accepting_pairs}
        return _fifo_bounded_scan(
            bundle,
            lambda config: config.state in states
            and config.contents in lifted_set,
            max_nodes=max_nodes, max_depth=max_depth,
            channel_bound=channel_bound, workers=workers)
    return _decide_candidates(bundle, candidates, max_nodes=max_nodes,
                              max_depth=max_depth, workers=workers)


# -- rational-relation and control-state reachability -----------------------

def _relation_spec(bundle: NormalFormBundle, relation) -> RationalRelationSpec:
    if isinstance(relation, RationalRelationSpec):
        spec = relation
    elif isinstance(relation, FiniteAutomaton):
        spec = RationalRelationSpec(bundle.original_machine.channels, relation)
    else:
        raise ValidationError(f"not a relation: {relation!r}")
    return spec.validate_against(bundle.original_machine)


def _relation_within_contents(bundle: NormalFormBundle,
                              relation: FiniteAutomaton) -> FiniteAutomaton:
    """Product of the relation automaton with per-channel automata of
    possible channel contents (factors of the channel language), so its
    words denote exactly the content tuples the relation can match."""
    goods = [spec.infix_dfa() for spec in bundle.specs]
    initial = (relation.initial, tuple(g.initial for g in goods))
    seen = {initial}
    queue = [initial]
    triples = []
    finals = []
    while queue:
        source = queue.pop(0)
        r_state, g_states = source
        if r_state in relation.finals and all(
                g_state in good.finals
                for good, g_state in zip(goods, g_states)):
            finals.append(source)
        for symbol in relation.out_symbols(r_state):
            stepped = list(g_states)
            blocked = False
            for position, letter in enumerate(symbol):
                if letter is None:
                    continue
                after = goods[position].step(g_states[position], letter)
                if after is None:
                    blocked = True
                    break
                stepped[position] = after
            if blocked:
                continue
            for r_next in relation.successors(r_state, symbol):
                target = (r_next, tuple(stepped))
                if target not in seen:
                    seen.add(target)
                    queue.append(target)
                triples.append((source, symbol, target))
    return FiniteAutomaton(seen, relation.alphabet, triples, initial,
                           finals).trim()


def _acyclic(automaton: FiniteAutomaton) -> bool:
    graph: dict = {}
    for source, _, target in automaton.transition_triples():
        graph.setdefault(source, set()).add(target)
    done: set = set()
    in_progress: set = set()

    def visit(state) -> bool:
        if state in done:
            return True
        if state in in_progress:
            return False
        in_progress.add(state)
        for target in graph.get(state, ()):
            if not visit(target):
                return False
        in_progress.discard(state)
        done.add(state)
        return True

    return all(visit(state) for state in automaton.states)


def _enumerate_relation_contents(bundle: NormalFormBundle,
                                 relation: FiniteAutomaton):
    """The content tuples a relation can match, when finitely many.

    Returns a list of contents (duplicates removed, discovery order) or
    None when the constrained relation has infinitely many or too many
    words.
    """
    constrained = _relation_within_contents(bundle, relation)
    if constrained.is_empty():
        return []
    if not _acyclic(constrained):
        return None
    try:
        words = enumerate_words(constrained, len(constrained.states),
                                limit=RELATION_ENUM_LIMIT)
    except ValidationError:
        return None
    empty = tuple(() for _ in bundle.machine.channels)
    contents_list = []
    seen = set()
    for word in words:
        contents = denotation(word) if word else empty
        if contents not in seen:
            seen.add(contents)
            contents_list.append(contents)
    return contents_list


def decide_rational_reachability(bundle: NormalFormBundle, state: str,
                                 relation=None, *,
                                 max_nodes: int | None = None,
                                 max_depth: int | None = None,
                                 channel_bound: int | None = None,
                                 workers: int = 1) -> Verdict:
    """Is some configuration (state, w) with w in the relation reachable
    with complete send projections?  ``relation=None`` means the
    universal relation (any contents), which answers control-state
    reachability."""
    bundle = _require_bundle(bundle, "rational reachability analysis")
    translated = translate_query(bundle, state=state)
    accepting = [s for s in translated["states"] if bundle.is_accepting(s)]
    if not accepting:
        return Verdict(NO, method="acceptance")

    hat_relation = None
    if relation is not None:
        spec = _relation_spec(bundle, relation)
        hat_relation = translate_query(
            bundle, relation=spec.automaton)["relation"]
        contents_list = _enumerate_relation_contents(bundle, hat_relation)
        if contents_list is not None:
            if not contents_list:
                return Verdict(NO, method="translation")
            if channel_bound is None:
                candidates = [(s, contents) for s in accepting
                              for contents in contents_list]
                return _decide_candidates(
                    bundle, candidates, max_nodes=max_nodes,
                    max_depth=max_depth, workers=workers)

    machine, indexing = compiled_counter_machine(bundle)
    specs = bundle.specs
    channels = bundle.machine.channels
    accepting_set = frozenset(accepting)

    def config_matches(config: FifoConfig) -> bool:
        if config.state not in accepting_set:
            return False
        if hat_relation is None:
            return True
        return relation_accepts(hat_relation, config.contents)

    if channel_bound is not None:
        return _fifo_bounded_scan(
            bundle, config_matches, max_nodes=max_nodes,
            max_depth=max_depth, channel_bound=channel_bound,
            workers=workers)

    zeros = machine.zero_valuation()
    tree = build_coverability_tree(machine,
                                   max_nodes=DEFAULT_ABSTRACT_NODES)
    if all(not tree.may_cover(s, zeros) for s in accepting_set):
        return Verdict(NO, method="coverability")

    def node_matches(node) -> bool:
        config, last = node[0], node[1]
        if config.state not in accepting_set:
            return False
        if hat_relation is None:
            return True
        return membership_in_Ta(indexing, specs, hat_relation,
                                config.valuation, last)

    quick, full = _search_budgets(max_nodes, DEFAULT_SEARCH_NODES)
    for budget in dict.fromkeys((quick, full)):
        exploration = explore_counter(
            machine, max_depth=max_depth, max_nodes=budget,
            track_last_sent=True, channels=channels, workers=workers)
        for node in exploration.nodes():
            if node_matches(node):
                trace = _verified_trace(bundle, exploration.witness(node),
                                        config_matches)
                return Verdict(YES, witness=trace,
                               method="bounded-exhaustive")
        if exploration.saturated:
            return Verdict(NO, method="bounded-exhaustive")
    return Verdict(UNKNOWN, method="bounded-exhaustive",
                   bound=len(exploration.index))


def decide_control_state(bundle: NormalFormBundle, state: str, *,
                         max_nodes: int | None = None,
                         max_depth: int | None = None,
                         channel_bound: int | None = None,
                         workers: int = 1) -> Verdict:
    """Is the control state reachable with complete send projections
    (with any channel contents)?"""
    return decide_rational_reachability(
        bundle, state, None, max_nodes=max_nodes, max_depth=max_depth,
        channel_bound=channel_bound, workers=workers)


# -- deadlock ---------------------------------------------------------------

def _receive_only_states(bundle: NormalFormBundle) -> tuple:
    """States that cannot move on their own: every outgoing transition
    is a receive (in particular, states with no outgoing at all)."""
    return tuple(
        state for state in bundle.machine.states
        if all(t.action.is_receive
               for t in bundle.machine.transitions_from(state)))


def _is_stuck(bundle: NormalFormBundle, config: FifoConfig) -> bool:
    for transition in bundle.machine.transitions_from(config.state):
        action = transition.action
        if action.is_send:
            return False
        word = config.contents[bundle.machine.channel_index[action.channel]]
        if word and word[0] == action.letter:
            return False
    return True


def decide_deadlock(bundle: NormalFormBundle, *,
                    max_nodes: int | None = None,
                    max_depth: int | None = None,
                    channel_bound: int | None = None,
                    workers: int = 1) -> Verdict:
    """Is some configuration with no enabled action reachable with
    complete send projections?  The initial configuration counts."""
    bundle = _require_bundle(bundle, "deadlock analysis")
    candidates = frozenset(
        state for state in _receive_only_states(bundle)
        if bundle.is_accepting(state))
    if not candidates:
        return Verdict(NO, method="static")
    machine, indexing = compiled_counter_machine(bundle)
    specs = bundle.specs
    channels = bundle.machine.channels

    def config_matches(config: FifoConfig) -> bool:
        return config.state in candidates and _is_stuck(bundle, config)

    if channel_bound is not None:
        return _fifo_bounded_scan(
            bundle, config_matches, max_nodes=max_nodes,
            max_depth=max_depth, channel_bound=channel_bound,
            workers=workers)

    quick, full = _search_budgets(max_nodes, DEFAULT_SEARCH_NODES)
    for budget in dict.fromkeys((quick, full)):
        exploration = explore_counter(
            machine, max_depth=max_depth, max_nodes=budget,
            track_last_sent=True, channels=channels, workers=workers)
        for node in exploration.nodes():
            config, last = node[0], node[1]
            if config.state not in candidates:
                continue
            rebuilt = reconstruct_contents(indexing, specs,
                                           config.valuation, last)
            if rebuilt is None:
                continue
            if _is_stuck(bundle, FifoConfig(config.state, rebuilt)):
                trace = _verified_trace(bundle, exploration.witness(node),
                                        config_matches)
                return Verdict(YES, witness=trace,
                               method="bounded-exhaustive")
        if exploration.saturated:
            return Verdict(NO, method="bounded-exhaustive")

    # The head letter of every channel, hence stuckness, only depends on
    # which counters are zero, the residues of the others modulo their
    # word lengths, and the last letter sent — all preserved by the
    # residue-capped abstraction, whose nodes cover every reachable
    # configuration.  So if no abstract node at a candidate state admits
    # a stuck reading, no reachable configuration is stuck.
    moduli = _word_length_moduli(bundle, indexing)
    caps = {counter: 2 for counter in machine.counters}
    capped = capped_reachability(
        machine, caps, moduli=moduli, channels=channels,
        max_nodes=DEFAULT_ABSTRACT_NODES, workers=workers)
    if capped.complete:
        moduli_vector = tuple(moduli[x] for x in machine.counters)
        stuck_possible = False
        for node in capped.nodes():
            state, valuation, last, _ = node
            if state not in candidates:
                continue
            concrete = tuple(
                cap + ((value[1] - cap) % modulus)
                if isinstance(value, tuple) else value
                for value, cap, modulus in zip(valuation, capped.caps,
                                               moduli_vector))
            rebuilt = reconstruct_contents(indexing, specs, concrete, last)
            if rebuilt is None:
                continue
            if _is_stuck(bundle, FifoConfig(state, rebuilt)):
                stuck_possible = True
                break
        if not stuck_possible:
            return Verdict(NO, method="capped")
    return Verdict(UNKNOWN, method="bounded-exhaustive",
                   bound=len(exploration.index))


# -- boundedness and termination --------------------------------------------

def decide_boundedness(bundle: NormalFormBundle, *,
                       max_nodes: int | None = None,
                       tree_nodes: int = DEFAULT_TREE_NODES,
                       workers: int = 1) -> Verdict:
    """Is the set of reachable configurations finite?

    Yes means bounded.  No comes with a stem/loop pump that strictly
    grows the channel contents each round.
    """
    bundle = _require_bundle(bundle, "boundedness analysis")
    machine, _ = compiled_counter_machine(bundle)
    budget = DEFAULT_PUMP_SEARCH_NODES if max_nodes is None else max_nodes
    exploration = explore_counter(machine, max_nodes=budget, workers=workers)
    if exploration.saturated:
        return Verdict(YES, method="bounded-exhaustive")
    pair = chain_domination(exploration, strict=True)
    if pair is not None:
        witness = _pump_witness(bundle, machine, *pair, strict=True)
        return Verdict(NO, witness=witness, method="chain-domination")
    try:
        pair = find_self_covering(machine, strict=True, max_nodes=tree_nodes)
    except SearchBudgetExceeded:
        return Verdict(UNKNOWN, method="self-covering-tree",
                       bound=tree_nodes)
    if pair is None:
        return Verdict(YES, method="self-covering-tree")
    witness = _pump_witness(bundle, machine, *pair, strict=True)
    return Verdict(NO, witness=witness, method="self-covering-tree")


def decide_termination(bundle: NormalFormBundle, *,
                       max_nodes: int | None = None,
                       tree_nodes: int = DEFAULT_TREE_NODES,
                       workers: int = 1) -> Verdict:
    """Is every execution finite?

    Yes means terminating.  No comes with a stem/loop pair that stays
    executable forever.
    """
    bundle = _require_bundle(bundle, "termination analysis")
    machine, _ = compiled_counter_machine(bundle)
    budget = DEFAULT_PUMP_SEARCH_NODES if max_nodes is None else max_nodes
    exploration = explore_counter(machine, max_nodes=budget, workers=workers)
    if exploration.saturated:
        pair = find_cycle(exploration)
        if pair is None:
            return Verdict(YES, method="cycle-free")
        witness = _pump_witness(bundle, machine, *pair, strict=False)
        return Verdict(NO, witness=witness, method="cycle")
    pair = chain_domination(exploration, strict=True)
    if pair is not None:
        witness = _pump_witness(bundle, machine, *pair, strict=False)
        return Verdict(NO, witness=witness, method="chain-domination")
    try:
        pair = find_self_covering(machine, strict=False,
                                  max_nodes=tree_nodes)
    except SearchBudgetExceeded:
        return Verdict(UNKNOWN, method="self-covering-tree",
                       bound=tree_nodes)
    if pair is None:
        return Verdict(YES, method="self-covering-tree")
    witness = _pump_witness(bundle, machine, *pair, strict=False)
    return Verdict(NO, witness=witness, method="self-covering-tree")


# -- plain counter-machine reachability -------------------------------------

def counter_reachability(machine: CounterMachine,
                         targets: Iterable, *,
                         max_nodes: int | None = None,
                         max_depth: int | None = None,
                         use_coverability: bool = True,
                         workers: int = 1) -> Verdict:
    """Is any of the target (state, valuation) configurations reachable?

    Works on bare counter machines (no bundle): exact when the search
    saturates, sound Yes from any bounded search, sound No additionally
    from the coverability filter — whose caveat about zero tests (see
    :func:`coverability_filter`) applies; pass ``use_coverability=False``
    for machines that re-use tested counters.
    """
    wanted = set()
    for target in targets:
        if not isinstance(target, CounterConfig):
            state, valuation = target
            target = CounterConfig(state, tuple(valuation))
        if target.state not in machine.states:
            raise ValidationError(f"unknown control state {target.state!r}")
        if len(target.valuation) != len(machine.counters):
            raise ValidationError(
                f"expected {len(machine.counters)} counter values, "
                f"got {len(target.valuation)}")
        wanted.add(target)
    if not wanted:
        raise ValidationError("no target configurations given")
    if use_coverability:
        tree = build_coverability_tree(machine,
                                       max_nodes=DEFAULT_ABSTRACT_NODES)
        if all(not tree.may_reach(t.state, t.valuation) for t in wanted):
            return Verdict(NO, method="coverability")
    quick, full = _search_budgets(max_nodes, DEFAULT_SEARCH_NODES)
    for budget in dict.fromkeys((quick, full)):
        exploration = explore_counter(machine, max_depth=max_depth,
                                      max_nodes=budget, workers=workers)
        for node in exploration.nodes():
            if node[0] in wanted:
                steps = exploration.witness(node)
                final = counter_run_configs(machine, steps)[-1]
                if final not in wanted:
                    raise InternalError(
                        f"witness replay ended at {final}, off target")
                return Verdict(YES, witness=steps,
                               method="bounded-exhaustive")
        if exploration.saturated:
            return Verdict(NO, method="bounded-exhaustive")
    return Verdict(UNKNOWN, method="bounded-exhaustive",
                   bound=len(exploration.index))
