"""State-space search engines over FIFO and counter machines.

Provides breadth-first reachability with parent links (bounded depth or
run-to-saturation), a depth-first self-covering search that witnesses
unboundedness and nontermination, a coverability tree that understands
frozen zero tests, and a capped abstraction that makes the counter
space finite while keeping small valuations exact.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Mapping, Sequence

from .core import (
    CounterConfig,
    CounterMachine,
    CounterTransition,
    DEC,
    FifoConfig,
    FifoMachine,
    INC,
    counter_enabled,
    counter_step,
    enabled_transitions,
    fifo_step,
)
from .errors import SearchBudgetExceeded, ValidationError
from .normalform import NormalFormBundle

#: Abstract "arbitrarily large" in coverability nodes.  ``math.inf``
#: compares and adds the right way against ints.
OMEGA = math.inf

DEFAULT_NODE_CAP = 400_000


class ReachIndex:
    """Reachable nodes with parent links for witness extraction."""

    __slots__ = ("parents", "depths", "saturated", "cap_hit", "violations")

    def __init__(self):
        self.parents: dict = {}
        self.depths: dict = {}
        self.saturated = False
        self.cap_hit = False
        self.violations: list = []

    def __contains__(self, key) -> bool:
        return key in self.parents

    def __len__(self) -> int:
        return len(self.parents)

    def add(self, key, parent, step, depth) -> bool:
        if key in self.parents:
            return False
        self.parents[key] = (parent, step)
        self.depths[key] = depth
        return True

    def trace(self, key) -> tuple:
        """The steps (transitions, in order) from the root to ``key``."""
        steps = []
        while True:
            parent, step = self.parents[key]
            if parent is None:
                break
            steps.append(step)
            key = parent
        return tuple(reversed(steps))


def _bfs(roots, successors, *, max_depth, max_nodes, workers=1) -> ReachIndex:
    """Layered breadth-first search.

    Each frontier is expanded as a whole — optionally fanned out over a
    thread pool — and the results are merged in frontier order, so the
    index (and every witness derived from it) is identical for any
    worker count.
    """
    index = ReachIndex()
    frontier = []
    for root in roots:
        if index.add(root, None, None, 0):
            frontier.append(root)
    depth = 0
    pool = None
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        pool = ThreadPoolExecutor(max_workers=workers)
    try:
        while frontier and (max_depth is None or depth < max_depth):
            if pool is None:
                expansions = [tuple(successors(node)) for node in frontier]
            else:
                expansions = list(pool.map(
                    lambda node: tuple(successors(node)), frontier))
            depth += 1
            next_frontier = []
            for node, steps in zip(frontier, expansions):
                for step, target in steps:
                    if target in index:
                        continue
                    if len(index) >= max_nodes:
                        index.cap_hit = True
                        continue
                    index.add(target, node, step, depth)
                    next_frontier.append(target)
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown()
    if index.cap_hit:
        index.saturated = False
    elif not frontier:
        index.saturated = True
    else:
        index.saturated = _frontier_closed(index, frontier, successors)
    return index


def _frontier_closed(index: ReachIndex, frontier, successors) -> bool:
    """Under a depth bound, saturation means the nodes at the bound have
    no unseen successors (so deeper search would add nothing)."""
    for node in frontier:
        for _, target in successors(node):
            if target not in index:
                return False
    return True


# -- FIFO exploration -------------------------------------------------------

class FifoExploration:
    """Reachable FIFO configurations of a machine or bundle."""

    __slots__ = ("index", "machine", "bundle")

    def __init__(self, index: ReachIndex, machine: FifoMachine,
                 bundle: NormalFormBundle | None):
        self.index = index
        self.machine = machine
        self.bundle = bundle

    def configs(self) -> Iterable[FifoConfig]:
        return self.index.parents.keys()

    def witness(self, config: FifoConfig) -> tuple:
        """The action trace from the initial configuration to ``config``."""
        return tuple(t.action for t in self.index.trace(config))

    def project_config(self, config: FifoConfig) -> FifoConfig:
        """The configuration in original coordinates (identity when the
        exploration ran on a plain machine)."""
        if self.bundle is None:
            return config
        hom = self.bundle.hom
        contents = tuple(
            tuple(hom.to_original_letter(letter) for letter in word)
            for word in config.contents)
        return FifoConfig(self.bundle.machine_state(config.state), contents)

    def original_configs(self) -> set:
        return {self.project_config(config) for config in self.configs()}

    @property
    def saturated(self) -> bool:
        return self.index.saturated


def explore_fifo(machine, specs: Sequence | None = None, *,
                 max_depth: int | None = None,
                 max_channel_length: int | None = None,
                 max_nodes: int = DEFAULT_NODE_CAP,
                 relax_alphabet: bool = False,
                 workers: int = 1) -> FifoExploration:
    """Breadth-first exploration of FIFO configurations.

    Pass a bundle (or its machine) to explore it directly; pass a raw
    machine plus channel bounds to normalize first.  The normalized
    control graph admits only valid action sequences, so exploration is
    plain FIFO stepping either way.  ``max_channel_length`` skips sends
    that would push any channel beyond the given length.
    """
    bundle = None
    if specs is not None:
        from .normalform import normalize_machine
        bundle = normalize_machine(machine, specs, relax_alphabet=relax_alphabet)
        target = bundle.machine
    elif isinstance(machine, NormalFormBundle):
        bundle = machine
        target = bundle.machine
    elif isinstance(machine, FifoMachine):
        target = machine
    else:
        raise ValidationError(f"cannot explore {machine!r}")

    def successors(config):
        for transition in enabled_transitions(target, config):
            if max_channel_length is not None and transition.action.is_send:
                channel = target.channel_index[transition.action.channel]
                if len(config.contents[channel]) >= max_channel_length:
                    continue
            yield transition, fifo_step(target, config, transition)

    index = _bfs([target.initial_config()], successors,
                 max_depth=max_depth, max_nodes=max_nodes, workers=workers)
    return FifoExploration(index, target, bundle)


# -- counter exploration ----------------------------------------------------

class CounterExploration:
    """Reachable counter configurations; node layout is
    ``(config[, last_sent][, frozen])`` depending on the options."""

    __slots__ = ("index", "machine", "track_last_sent", "channels",
                 "check_zero_restriction")

    def __init__(self, index, machine, track_last_sent, channels, check_zero):
        self.index = index
        self.machine = machine
        self.track_last_sent = track_last_sent
        self.channels = channels
        self.check_zero_restriction = check_zero

    def nodes(self):
        return self.index.parents.keys()

    def witness(self, node) -> tuple:
        return self.index.trace(node)

    def configs(self) -> set[CounterConfig]:
        return {node[0] for node in self.nodes()}

    @property
    def saturated(self) -> bool:
        return self.index.saturated

    @property
    def violations(self) -> list:
        return self.index.violations


def _sent_letter(transition: CounterTransition):
    label = transition.label
    if label is not None and label.is_send:
        return label.channel, label.letter
    return None


def explore_counter(machine: CounterMachine, *,
                    max_depth: int | None = None,
                    max_nodes: int = DEFAULT_NODE_CAP,
                    track_last_sent: bool = False,
                    channels: Sequence[str] = (),
                    check_zero_restriction: bool = False,
                    workers: int = 1) -> CounterExploration:
    """Breadth-first exploration of counter configurations.

    Nodes are ``(config,)``; with ``track_last_sent`` they gain the
    per-channel last letter sent, read off transition labels.  With
    ``check_zero_restriction`` they also carry the set of counters whose
    zero test has fired, and any enabled transition that would touch
    such a counter is recorded in ``violations`` instead of being taken
    (so an empty list proves every run freezes its tested counters).
    """
    if track_last_sent and not channels:
        raise ValidationError("track_last_sent requires the channel order")
    channel_index = {channel: i for i, channel in enumerate(channels)}
    violations: list = []

    def successors(node):
        config = node[0]
        for transition in counter_enabled(machine, config):
            if check_zero_restriction:
                frozen = node[-1]
                if transition.counter is not None and transition.counter in frozen:
                    violations.append((node, transition))
                    continue
            parts = [counter_step(machine, config, transition)]
            if track_last_sent:
                last = list(node[1])
                sent = _sent_letter(transition)
                if sent is not None:
                    last[channel_index[sent[0]]] = sent[1]
                parts.append(tuple(last))
            if check_zero_restriction:
                parts.append(node[-1] | transition.zeroset)
            yield transition, tuple(parts)

    root = [machine.initial_config()]
    if track_last_sent:
        root.append((None,) * len(channels))
    if check_zero_restriction:
        root.append(frozenset())
    index = _bfs([tuple(root)], successors,
                 max_depth=max_depth, max_nodes=max_nodes, workers=workers)
    index.violations = violations
    return CounterExploration(index, machine, track_last_sent,
                              tuple(channels), check_zero_restriction)


# -- self-covering search (unboundedness / nontermination) ------------------

def _leq(left: Sequence, right: Sequence) -> bool:
    return all(a <= b for a, b in zip(left, right))


def find_self_covering(machine: CounterMachine, *, strict: bool,
                       max_nodes: int = 300_000):
    """Breadth-first execution-tree search for a run ``(q,u) ->* (q,v)``
    with ``u <= v`` pointwise — and ``u != v`` when ``strict``.

    Returns ``(stem, loop)`` as transition tuples (the loop ends in the
    dominating configuration), or None when the cut-off tree is
    exhausted, which proves no such run exists: a branch is cut when
    its configuration exactly repeats an ancestor's, and by Dickson's
    lemma every infinite path would contain a comparable same-state
    pair, so the tree is finite.  Children expand in the machine's
    sorted transition order, making the first witness deterministic.
    Raises SearchBudgetExceeded if the node budget runs out first.

    The conclusion "such a pair pumps forever" is only justified for
    counter machines whose runs freeze zero-tested counters (compiled
    machines do); callers enforce that.
    """
    # Tree nodes are (config, parent_node, transition_from_parent).
    root = (machine.initial_config(), None, None)
    queue = deque([root])
    expanded = 0
    while queue:
        node = queue.popleft()
        expanded += 1
        if expanded > max_nodes:
            raise SearchBudgetExceeded(
                f"self-covering search exceeded {max_nodes} tree nodes")
        config = node[0]
        for transition in counter_enabled(machine, config):
            child = counter_step(machine, config, transition)
            repeat = False
            hit = None
            walker = node
            while walker is not None:
                ancestor = walker[0]
                if ancestor.state == child.state and _leq(
                        ancestor.valuation, child.valuation):
                    if ancestor.valuation != child.valuation or not strict:
                        hit = walker
                    else:
                        repeat = True
                    break
                walker = walker[1]
            if hit is not None:
                steps = [transition]
                walker = node
                while walker[1] is not None:
                    steps.append(walker[2])
                    walker = walker[1]
                steps.reverse()
                ancestor_depth = 0
                walker = hit
                while walker[1] is not None:
                    ancestor_depth += 1
                    walker = walker[1]
                return tuple(steps[:ancestor_depth]), tuple(steps[ancestor_depth:])
            if repeat:
                continue
            queue.append((child, node, transition))
    return None


def chain_domination(exploration: CounterExploration, *, strict: bool = True):
    """Domination pairs visible in a deduplicated exploration's parent
    chains: a node whose chain passes a same-state ancestor with a
    (strictly, when ``strict``) smaller valuation.

    Parent chains are genuine runs, so a hit is a sound self-covering
    witness ``(stem, loop)``; a miss proves nothing.  Nodes are scanned
    in discovery order, so the first hit is deterministic and shallow.
    """
    index = exploration.index
    for node in index.parents:
        config = node[0]
        walker = node
        while True:
            parent, step = index.parents[walker]
            if parent is None:
                break
            ancestor = parent[0]
            if (ancestor.state == config.state
                    and _leq(ancestor.valuation, config.valuation)
                    and (not strict or ancestor.valuation != config.valuation)):
                full = index.trace(node)
                stem_length = index.depths[parent]
                return full[:stem_length], full[stem_length:]
            walker = parent
    return None


def find_cycle(exploration: CounterExploration):
    """A reachable configuration cycle in a plain (no extras) counter
    exploration: returns ``(stem, cycle)`` transitions or None.

    On a saturated exploration, None proves every run is finite (the
    reachable graph is a DAG over finitely many configurations).
    """
    if exploration.track_last_sent or exploration.check_zero_restriction:
        raise ValidationError(
            "cycle detection needs a plain exploration (no last-sent or "
            "zero-restriction tracking)")
    machine = exploration.machine
    root = (machine.initial_config(),)

    def successors(node):
        config = node[0]
        for transition in counter_enabled(machine, config):
            yield transition, (counter_step(machine, config, transition),)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {root: GRAY}
    on_path = {root: 0}
    path_steps: list[CounterTransition] = []
    frames = [(root, successors(root))]
    while frames:
        node, iterator = frames[-1]
        advanced = False
        for transition, child in iterator:
            shade = color.get(child, WHITE)
            if shade == GRAY:
                entry = on_path[child]
                return tuple(path_steps[:entry]), tuple(path_steps[entry:]) + (transition,)
            if shade == WHITE:
                color[child] = GRAY
                path_steps.append(transition)
                on_path[child] = len(path_steps)
                frames.append((child, successors(child)))
                advanced = True
                break
        if not advanced:
            frames.pop()
            color[node] = BLACK
            del on_path[node]
            if frames:
                path_steps.pop()
    return None


# -- coverability tree ------------------------------------------------------

class CoverNode:
    """A coverability-tree node: control state, valuation over
    naturals extended with OMEGA, and the set of counters frozen by an
    already-fired zero test."""

    __slots__ = ("state", "valuation", "frozen")

    def __init__(self, state: str, valuation: tuple, frozen: frozenset):
        self.state = state
        self.valuation = valuation
        self.frozen = frozen

    def key(self):
        return (self.state, self.valuation, self.frozen)

    def __repr__(self) -> str:
        vals = ",".join("w" if v is OMEGA else str(v) for v in self.valuation)
        return f"CoverNode({self.state} | {vals} | {sorted(self.frozen)})"


class CoverabilityTree:
    """The finished coverability tree: answers cover queries."""

    __slots__ = ("machine", "nodes", "complete")

    def __init__(self, machine: CounterMachine, nodes: list[CoverNode],
                 complete: bool):
        self.machine = machine
        self.nodes = nodes
        self.complete = complete

    def may_cover(self, state: str, valuation: Sequence[int]) -> bool:
        """Whether some node lies (weakly) above ``(state, valuation)``.

        A False answer from a complete tree is a proof that no run
        reaches a configuration at or above the query.
        """
        if not self.complete:
            return True
        for node in self.nodes:
            if node.state == state and _leq(valuation, node.valuation):
                return True
        return False

    def may_reach(self, state: str, valuation: Sequence[int]) -> bool:
        """Coverability is an upper bound for reachability, so a False
        here rules the exact configuration out as well."""
        return self.may_cover(state, valuation)


def _cover_successors(machine: CounterMachine, node: CoverNode):
    index = machine.counter_index
    for transition in machine.transitions_from(node.state):
        valuation = node.valuation
        blocked = False
        for x in transition.zeroset:
            if valuation[index[x]] not in (0, OMEGA):
                blocked = True
                break
        if blocked:
            continue
        if transition.counter is not None and transition.counter in node.frozen:
            continue
        frozen = node.frozen
        if transition.zeroset:
            # A fired zero test pins its counters to zero from here on:
            # unbounded entries collapse back to an exact zero.
            new_valuation = list(valuation)
            for x in transition.zeroset:
                new_valuation[index[x]] = 0
            valuation = tuple(new_valuation)
            frozen = frozen | transition.zeroset
        if transition.counter is not None:
            position = index[transition.counter]
            if transition.kind == DEC:
                if valuation[position] == 0:
                    continue
                # OMEGA absorbs +-1, so plain arithmetic is exact here.
                valuation = valuation[:position] + (
                    valuation[position] - 1,) + valuation[position + 1:]
            elif transition.kind == INC:
                valuation = valuation[:position] + (
                    valuation[position] + 1,) + valuation[position + 1:]
        yield transition, CoverNode(transition.target, valuation, frozen)


def _cover_subsumes(strong: CoverNode, weak: CoverNode) -> bool:
    """Whether everything reachable from ``weak`` is covered from
    ``strong``: same state, no extra frozen counters, and every entry
    equal or unbounded (an unbounded entry still admits zero tests, so
    no behavior is lost)."""
    return (strong.state == weak.state
            and strong.frozen <= weak.frozen
            and all(a == b or a == OMEGA
                    for a, b in zip(strong.valuation, weak.valuation)))


def build_coverability_tree(machine: CounterMachine, *,
                            max_nodes: int = 200_000) -> CoverabilityTree:
    """Coverability exploration with acceleration, zero tests, freezing.

    Zero tests fire when every tested counter is exactly zero or
    unbounded; firing one resets unbounded tested counters to zero and
    freezes the whole tested set (no later increments or decrements),
    matching the discipline that runs of compiled machines obey.  New
    nodes accelerate against every processed node below them with the
    same frozen set; a node is dropped only when a processed node
    covers it entry-for-entry (equal or unbounded), which preserves the
    over-approximation.
    """
    root = CoverNode(machine.initial,
                     tuple(machine.zero_valuation()), frozenset())
    nodes: list[CoverNode] = []
    by_state: dict[str, list[CoverNode]] = {}
    queue = deque([root])
    complete = True
    while queue:
        node = queue.popleft()
        peers = by_state.get(node.state, ())
        valuation = node.valuation
        changed = True
        while changed:
            changed = False
            for earlier in peers:
                if (earlier.frozen == node.frozen
                        and _leq(earlier.valuation, valuation)
                        and earlier.valuation != valuation):
                    pumped = tuple(
                        OMEGA if b > a else b
                        for a, b in zip(earlier.valuation, valuation))
                    if pumped != valuation:
                        valuation = pumped
                        changed = True
        node = CoverNode(node.state, valuation, node.frozen)
        if any(_cover_subsumes(existing, node) for existing in peers):
            continue
        nodes.append(node)
        by_state.setdefault(node.state, []).append(node)
        if len(nodes) >= max_nodes:
            complete = False
            break
        for _, child in _cover_successors(machine, node):
            queue.append(child)
    return CoverabilityTree(machine, nodes, complete)


# -- capped abstraction -----------------------------------------------------

class CappedExploration:
    """Reachability under per-counter caps.

    Nodes are ``(state, valuation, last_sent, pure)`` where capped
    entries are ``("T", residue)``, ``last_sent`` is per-channel (empty
    tuple when not tracked), and ``pure`` records that no entry ever
    overflowed on the way — a pure node is an exactly reachable
    configuration.
    """

    __slots__ = ("index", "machine", "caps", "channels", "complete")

    def __init__(self, index: ReachIndex, machine: CounterMachine,
                 caps: tuple, channels: tuple, complete: bool):
        self.index = index
        self.machine = machine
        self.caps = caps
        self.channels = channels
        self.complete = complete

    def nodes(self):
        return self.index.parents.keys()

    def witness(self, node) -> tuple:
        return self.index.trace(node)

    def exact_nodes(self):
        return (node for node in self.nodes() if node[3])

    def holds_exactly(self, state: str, valuation: Sequence[int]):
        """A pure node at ``(state, valuation)`` if one was reached."""
        for node in self.nodes():
            if node[3] and node[0] == state and node[1] == tuple(valuation):
                return node
        return None

    def excludes(self, state: str, valuation: Sequence[int]) -> bool:
        """True when the abstraction proves ``(state, valuation)``
        unreachable: the valuation sits strictly below the caps and no
        abstract node (pure or not) sits at it."""
        if not self.complete:
            return False
        if any(v >= cap for v, cap in zip(valuation, self.caps)):
            return False
        target = tuple(valuation)
        for node in self.nodes():
            if node[0] == state and node[1] == target:
                return False
        return True


def _per_counter(machine: CounterMachine, values, what: str,
                 default: int) -> tuple[int, ...]:
    if values is None:
        return (default,) * len(machine.counters)
    if isinstance(values, Mapping):
        unknown = set(values) - set(machine.counters)
        if unknown:
            raise ValidationError(f"{what} for unknown counters: {sorted(unknown)}")
        vector = tuple(int(values.get(x, default)) for x in machine.counters)
    else:
        vector = tuple(int(b) for b in values)
        if len(vector) != len(machine.counters):
            raise ValidationError(
                f"expected {len(machine.counters)} {what}, got {len(vector)}")
    if any(b < 1 for b in vector):
        raise ValidationError(f"{what} must be at least 1")
    return vector


def capped_reachability(machine: CounterMachine,
                        caps: Mapping[str, int] | Sequence[int], *,
                        moduli: Mapping[str, int] | Sequence[int] | None = None,
                        channels: Sequence[str] = (),
                        max_nodes: int = DEFAULT_NODE_CAP,
                        workers: int = 1) -> CappedExploration:
    """Explore the counter machine with each counter capped.

    A counter at or above its cap becomes ``("T", value mod modulus)``:
    increments and decrements rotate the residue, and a decrement
    re-enters the exact value cap-1 only when the residue allows the
    concrete value to have been exactly the cap.  Zero tests demand
    exact zeros, so they never fire on a capped entry.  Every concrete
    run is simulated (the residue is tracked exactly throughout), hence
    a valuation below the caps that appears on no abstract node is
    truly unreachable; conversely a node whose path never overflowed is
    exact, and its trace is a concrete witness.

    Moduli default to 1 (no residue tracking).  Callers that know a
    counter's natural period — such as the length of the tuple word a
    compiled counter counts — pass it to keep count invariants that the
    control graph enforces modulo that period.
    """
    cap_vector = _per_counter(machine, caps, "caps", 1)
    modulus_vector = _per_counter(machine, moduli, "moduli", 1)
    index_of = machine.counter_index
    channel_index = {channel: i for i, channel in enumerate(channels)}

    def successors(node):
        state, valuation, last, pure = node
        for transition in machine.transitions_from(state):
            if any(valuation[index_of[x]] != 0 for x in transition.zeroset):
                continue
            branches = []
            if transition.counter is None:
                branches.append((valuation, pure))
            else:
                position = index_of[transition.counter]
                value = valuation[position]
                cap = cap_vector[position]
                modulus = modulus_vector[position]
                capped = isinstance(value, tuple)
                if transition.kind == INC:
                    if capped:
                        replacement = ("T", (value[1] + 1) % modulus)
                        branches.append((_subst(valuation, position, replacement),
                                         False))
                    elif value + 1 >= cap:
                        replacement = ("T", (value + 1) % modulus)
                        branches.append((_subst(valuation, position, replacement),
                                         False))
                    else:
                        branches.append((_subst(valuation, position, value + 1),
                                         pure))
                else:  # DEC
                    if capped:
                        replacement = ("T", (value[1] - 1) % modulus)
                        branches.append((_subst(valuation, position, replacement),
                                         False))
                        if cap % modulus == value[1]:
                            # The concrete value may have been exactly the
                            # cap, so the decrement re-enters exact range.
                            branches.append((_subst(valuation, position, cap - 1),
                                             False))
                    elif value > 0:
                        branches.append((_subst(valuation, position, value - 1),
                                         pure))
            new_last = last
            sent = _sent_letter(transition)
            if sent is not None and sent[0] in channel_index:
                as_list = list(last)
                as_list[channel_index[sent[0]]] = sent[1]
                new_last = tuple(as_list)
            for new_valuation, new_pure in branches:
                yield transition, (transition.target, new_valuation,
                                   new_last, new_pure)

    root = (machine.initial, tuple(machine.zero_valuation()),
            (None,) * len(channels), True)
    index = _bfs([root], successors, max_depth=None, max_nodes=max_nodes,
                 workers=workers)
    return CappedExploration(index, machine, cap_vector, tuple(channels),
                             not index.cap_hit)


def _subst(valuation: tuple, position: int, value) -> tuple:
    return valuation[:position] + (value,) + valuation[position + 1:]
