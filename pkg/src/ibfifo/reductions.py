"""Problem-to-problem reductions and the output-bounded deciders.

``apply_reduction`` rewrites one decision problem into another and
returns the constructed artifact together with its target, so the
result can be decided by the engine and cross-checked against the
direct procedure:

- configuration reachability into control-state reachability (a flush
  path that receives the queried contents, guarded by a fresh letter
  per channel);
- control-state reachability into configuration reachability (a jump
  over a fresh channel into a drain state whose self-loops empty the
  original channels);
- configuration reachability into deadlock detection (the flush
  construction plus an always-enabled send on a fresh channel
  everywhere but the flush target);
- boundedness and termination of a compiled counter machine into
  plain counter reachability (a duplicated-counter machine that
  guesses a pivot configuration, replays a continuation on the second
  copy, and drains both copies to expose the difference).

``ob_decide`` answers the receive-bounded (output-bounded) variants of
reachability, control-state reachability, boundedness and termination
by rewriting them into send-bounded problems: reachability by
appending the queried contents to each channel language, the others by
letting every send also emit a fresh placeholder letter that stands
for messages never received.  Receive-bounded rational reachability
and deadlock have no such rewriting and are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .automata import FiniteAutomaton, concatenation, word_automaton
from .bounded import BoundedLangSpec
from .core import (
    Contents,
    CounterConfig,
    CounterMachine,
    DEC,
    FifoMachine,
    NOP,
    counter_transition,
    receive,
    run_configs,
    send,
)
from .counters import compiled_counter_machine
from .engine import Verdict, decide_boundedness, decide_reachability, \
    decide_termination, PumpWitness
from .errors import InternalError, UnsupportedQuery, ValidationError
from .normalform import NormalFormBundle, normalize_machine


@dataclass(frozen=True)
class Reduction:
    """A constructed instance of the target problem.

    ``machine`` is the constructed FIFO or counter machine; ``specs``
    the channel bounds (FIFO constructions only).  The target is a
    control state, a (state, contents) configuration, a tuple of
    counter configurations, or nothing for the deadlock question.
    """

    kind: str
    machine: object
    specs: tuple | None = None
    state: str | None = None
    contents: Contents | None = None
    targets: tuple | None = None


REDUCTION_KINDS = ("reach-to-csr", "csr-to-reach", "reach-to-deadlock",
                   "bounded-to-reach", "term-to-reach")


def _normalize_kind(kind: str) -> str:
    return str(kind).strip().replace("→", "-to-").replace("_", "-")


def _fresh_name(base: str, used) -> str:
    name = base
    bump = 1
    while name in used:
        bump += 1
        name = f"{base}{bump}"
    return name


def _all_letters(machine: FifoMachine) -> set:
    return {letter for c in machine.channels for letter in machine.letters[c]}


def _fresh_letters(machine: FifoMachine, channels) -> dict:
    used = _all_letters(machine)
    out = {}
    for channel in channels:
        letter = _fresh_name(f"${channel}", used)
        used.add(letter)
        out[channel] = letter
    return out


def _order_specs(machine: FifoMachine, specs) -> tuple:
    by_channel = {}
    for spec in specs:
        if spec.channel in by_channel:
            raise ValidationError(f"two bounds for channel {spec.channel}")
        by_channel[spec.channel] = spec
    missing = [c for c in machine.channels if c not in by_channel]
    extra = sorted(set(by_channel) - set(machine.channels))
    if missing or extra:
        raise ValidationError(
            f"bounds do not match channels (missing {missing}, "
            f"extra {extra})")
    return tuple(by_channel[c] for c in machine.channels)


def _letter_star(letter: str) -> FiniteAutomaton:
    return FiniteAutomaton(["s"], [letter], [("s", letter, "s")], "s", ["s"])


def _target_config(machine: FifoMachine, state: str, contents):
    if state not in machine.states:
        raise ValidationError(f"unknown control state {state!r}")
    config = machine.config(state, contents if contents is not None else ())
    for channel, word in zip(machine.channels, config.contents):
        for letter in word:
            if letter not in machine.letters[channel]:
                raise ValidationError(
                    f"letter {letter!r} is not in channel {channel}'s "
                    f"alphabet")
    return config


# -- configuration reachability -> control-state reachability ---------------

def _reduce_reach_to_csr(machine: FifoMachine, specs, state: str,
                         contents) -> Reduction:
    config = _target_config(machine, state, contents)
    ordered = _order_specs(machine, specs)
    dollars = _fresh_letters(machine, machine.channels)

    used_states = set(machine.states)
    q_end = _fresh_name("q_end", used_states)
    used_states.add(q_end)
    actions = []
    for channel in machine.channels:
        actions.append(send(channel, dollars[channel]))
        for letter in config.contents[machine.channel_index[channel]]:
            actions.append(receive(channel, letter))
        actions.append(receive(channel, dollars[channel]))

    transitions = list(machine.transitions)
    source = state
    flush_states = []
    for position, action in enumerate(actions):
        if position == len(actions) - 1:
            target = q_end
        else:
            target = _fresh_name(f"flush{position}", used_states)
            used_states.add(target)
            flush_states.append(target)
        transitions.append((source, action, target))
        source = target

    letters = {c: tuple(machine.letters[c]) + (dollars[c],)
               for c in machine.channels}
    new_machine = FifoMachine(
        states=list(machine.states) + flush_states + [q_end],
        channels=machine.channels, letters=letters,
        transitions=transitions, initial=machine.initial)
    new_specs = tuple(
        BoundedLangSpec(
            spec.channel, spec.tuple + ((dollars[spec.channel],),),
            concatenation(spec.dfa(),
                          word_automaton((dollars[spec.channel],))))
        for spec in ordered)
    return Reduction("reach-to-csr", new_machine, new_specs, state=q_end)


# -- control-state reachability -> configuration reachability ---------------

def _reduce_csr_to_reach(machine: FifoMachine, specs,
                         state: str) -> Reduction:
    if state not in machine.states:
        raise ValidationError(f"unknown control state {state!r}")
    ordered = _order_specs(machine, specs)
    jump = _fresh_name("d", machine.channels)
    pound = _fresh_name(f"${jump}", _all_letters(machine))
    q_drain = _fresh_name("q_drain", machine.states)

    transitions = list(machine.transitions)
    transitions.append((state, send(jump, pound), q_drain))
    for channel in machine.channels:
        for letter in machine.letters[channel]:
            transitions.append((q_drain, receive(channel, letter), q_drain))

    letters = {c: machine.letters[c] for c in machine.channels}
    letters[jump] = (pound,)
    new_machine = FifoMachine(
        states=list(machine.states) + [q_drain],
        channels=list(machine.channels) + [jump], letters=letters,
        transitions=transitions, initial=machine.initial)
    new_specs = ordered + (
        BoundedLangSpec(jump, ((pound,),), word_automaton((pound,))),)
    target = tuple(() for _ in machine.channels) + ((pound,),)
    return Reduction("csr-to-reach", new_machine, new_specs,
                     state=q_drain, contents=target)


# -- configuration reachability -> deadlock ---------------------------------

def _reduce_reach_to_deadlock(machine: FifoMachine, specs, state: str,
                              contents) -> Reduction:
    base = _reduce_reach_to_csr(machine, specs, state, contents)
    inner = base.machine
    q_end = base.state
    busy = _fresh_name("d", inner.channels)
    dollar = _fresh_name(f"${busy}", _all_letters(inner))

    transitions = list(inner.transitions)
    for control in inner.states:
        if control != q_end:
            transitions.append((control, send(busy, dollar), control))

    letters = {c: inner.letters[c] for c in inner.channels}
    letters[busy] = (dollar,)
    new_machine = FifoMachine(
        states=inner.states, channels=list(inner.channels) + [busy],
        letters=letters, transitions=transitions, initial=inner.initial)
    new_specs = base.specs + (
        BoundedLangSpec(busy, ((dollar,),), _letter_star(dollar)),)
    return Reduction("reach-to-deadlock", new_machine, new_specs)


# -- boundedness / termination -> counter reachability ----------------------

def _doubled_counters(machine: CounterMachine):
    first = {x: f"{x}#1" for x in machine.counters}
    second = {x: f"{x}#2" for x in machine.counters}
    order = tuple(first[x] for x in machine.counters) + tuple(
        second[x] for x in machine.counters)
    return first, second, order


def _doubled_phase_transitions(machine: CounterMachine, first, second,
                               phase_two_state):
    """Phase one in lockstep on both copies, phase two on the second
    copy only (for every guessed pivot state)."""
    transitions = []
    states = set(machine.states)
    for index, step in enumerate(machine.transitions):
        doubled_zeros = tuple(first[z] for z in step.zeroset) + tuple(
            second[z] for z in step.zeroset)
        if step.counter is None:
            transitions.append(counter_transition(
                step.source, NOP, None, doubled_zeros, step.target))
        else:
            mid = f"{step.source}%{index}%{step.target}"
            states.add(mid)
            transitions.append(counter_transition(
                step.source, step.kind, first[step.counter], doubled_zeros,
                mid))
            transitions.append(counter_transition(
                mid, step.kind, second[step.counter], (), step.target))
    for tag in machine.states:
        for step in machine.transitions:
            source = phase_two_state(tag, step.source)
            target = phase_two_state(tag, step.target)
            states.add(source)
            states.add(target)
            zeros = tuple(second[z] for z in step.zeroset)
            if step.counter is None:
                transitions.append(counter_transition(
                    source, NOP, None, zeros, target))
            else:
                transitions.append(counter_transition(
                    source, step.kind, second[step.counter], zeros, target))
    return transitions, states


def _drain_transitions(machine: CounterMachine, first, second, q_reach):
    """Empty the first copy in tandem with the second, with extra solo
    decrements on the second copy."""
    transitions = []
    states = set()
    for counter in machine.counters:
        mid = f"drain%{counter}"
        states.add(mid)
        transitions.append(counter_transition(
            q_reach, DEC, first[counter], (), mid))
        transitions.append(counter_transition(
            mid, DEC, second[counter], (), q_reach))
        transitions.append(counter_transition(
            q_reach, DEC, second[counter], (), q_reach))
    return transitions, states


def _counter_input(machine, counter_machine) -> CounterMachine:
    if counter_machine is not None:
        if not isinstance(counter_machine, CounterMachine):
            raise ValidationError("counter_machine must be a CounterMachine")
        return counter_machine
    if isinstance(machine, NormalFormBundle):
        compiled, _ = compiled_counter_machine(machine)
        return compiled
    if isinstance(machine, CounterMachine):
        return machine
    raise ValidationError(
        "boundedness/termination reductions need a counter machine or a "
        "normal-form bundle")


def _reduce_bounded_to_reach(machine: CounterMachine) -> Reduction:
    first, second, order = _doubled_counters(machine)
    all_states = set(machine.states)
    q_reach = _fresh_name("q_reach", all_states)

    def phase_two(tag, control):
        return f"{tag}|{control}"

    transitions, states = _doubled_phase_transitions(
        machine, first, second, phase_two)
    for tag in machine.states:
        transitions.append(counter_transition(
            tag, NOP, None, (), phase_two(tag, tag)))
        states.add(phase_two(tag, tag))
        transitions.append(counter_transition(
            phase_two(tag, tag), NOP, None, (), q_reach))
    drains, drain_states = _drain_transitions(machine, first, second, q_reach)
    transitions.extend(drains)
    states |= drain_states | {q_reach}

    doubled = CounterMachine(states=sorted(states), counters=order,
                             transitions=transitions,
                             initial=machine.initial)
    targets = []
    for counter in machine.counters:
        values = {name: 0 for name in order}
        values[second[counter]] = 1
        targets.append(CounterConfig(q_reach, doubled.valuation(values)))
    return Reduction("bounded-to-reach", doubled, targets=tuple(targets))


def _reduce_term_to_reach(machine: CounterMachine) -> Reduction:
    first, second, order = _doubled_counters(machine)
    all_states = set(machine.states)
    q_reach = _fresh_name("q_reach", all_states)

    def phase_two(tag, control, moved="{moved}"):
        return f"{tag}|{control}|{moved}"

    # Every phase-two step raises the moved flag, so the guessed pivot
    # must be left and re-entered by at least one transition.
    transitions = []
    states = set(machine.states)
    for index, step in enumerate(machine.transitions):
        doubled_zeros = tuple(first[z] for z in step.zeroset) + tuple(
            second[z] for z in step.zeroset)
        if step.counter is None:
            transitions.append(counter_transition(
                step.source, NOP, None, doubled_zeros, step.target))
        else:
            mid = f"{step.source}%{index}%{step.target}"
            states.add(mid)
            transitions.append(counter_transition(
                step.source, step.kind, first[step.counter], doubled_zeros,
                mid))
            transitions.append(counter_transition(
                mid, step.kind, second[step.counter], (), step.target))
    for tag in machine.states:
        for moved in "01":
            for step in machine.transitions:
                source = phase_two(tag, step.source, moved)
                target = phase_two(tag, step.target, "1")
                states.add(source)
                states.add(target)
                zeros = tuple(second[z] for z in step.zeroset)
                if step.counter is None:
                    transitions.append(counter_transition(
                        source, NOP, None, zeros, target))
                else:
                    transitions.append(counter_transition(
                        source, step.kind, second[step.counter], zeros,
                        target))
        transitions.append(counter_transition(
            tag, NOP, None, (), phase_two(tag, tag, "0")))
        states.add(phase_two(tag, tag, "0"))
        transitions.append(counter_transition(
            phase_two(tag, tag, "1"), NOP, None, (), q_reach))
        states.add(phase_two(tag, tag, "1"))
    drains, drain_states = _drain_transitions(machine, first, second, q_reach)
    transitions.extend(drains)
    states |= drain_states | {q_reach}

    doubled = CounterMachine(states=sorted(states), counters=order,
                             transitions=transitions,
                             initial=machine.initial)
    target = CounterConfig(q_reach, doubled.zero_valuation())
    return Reduction("term-to-reach", doubled, targets=(target,))


def apply_reduction(kind: str, *, machine=None, specs=None, state=None,
                    contents=None, counter_machine=None) -> Reduction:
    """Construct the reduced instance for one of the supported kinds
    (``reach-to-csr``, ``csr-to-reach``, ``reach-to-deadlock``,
    ``bounded-to-reach``, ``term-to-reach``)."""
    kind = _normalize_kind(kind)
    if kind in ("reach-to-csr", "csr-to-reach", "reach-to-deadlock"):
        if not isinstance(machine, FifoMachine):
            raise ValidationError(f"{kind} needs a FIFO machine")
        if specs is None or state is None:
            raise ValidationError(f"{kind} needs channel bounds and a state")
        if kind == "reach-to-csr":
            return _reduce_reach_to_csr(machine, specs, state, contents)
        if kind == "csr-to-reach":
            return _reduce_csr_to_reach(machine, specs, state)
        return _reduce_reach_to_deadlock(machine, specs, state, contents)
    if kind == "bounded-to-reach":
        return _reduce_bounded_to_reach(_counter_input(machine,
                                                       counter_machine))
    if kind == "term-to-reach":
        return _reduce_term_to_reach(_counter_input(machine,
                                                    counter_machine))
    raise ValidationError(f"unknown reduction kind {kind!r}")


# -- output-bounded deciders ------------------------------------------------

OB_KINDS = ("reach", "csr", "bounded", "term")


def _augmented_machine(machine: FifoMachine, dollars: Mapping[str, str],
                       extra_states=(), extra_channels=None,
                       extra_transitions=()) -> FifoMachine:
    """The machine with every send duplicated as a placeholder send."""
    transitions = list(machine.transitions)
    for step in machine.transitions:
        if step.action.is_send:
            transitions.append((step.source,
                                send(step.action.channel,
                                     dollars[step.action.channel]),
                                step.target))
    transitions.extend(extra_transitions)
    letters = {c: tuple(machine.letters[c]) + (dollars[c],)
               for c in machine.channels}
    channels = list(machine.channels)
    if extra_channels:
        for channel, channel_letters in extra_channels.items():
            channels.append(channel)
            letters[channel] = channel_letters
    return FifoMachine(
        states=list(machine.states) + list(extra_states),
        channels=channels, letters=letters, transitions=transitions,
        initial=machine.initial)


def _proper_prefixes(words) -> tuple:
    out = []
    seen = set()
    for word in words:
        for length in range(1, len(word)):
            prefix = tuple(word[:length])
            if prefix not in seen:
                seen.add(prefix)
                out.append(prefix)
    return tuple(out)


def _prefix_sink_language(spec: BoundedLangSpec, dollar: str):
    """The channel language, plus every prefix of it continued by
    placeholder letters only: sends cut short by the run's end are
    represented by placeholders."""
    dfa = spec.dfa()
    sink = _fresh_name("sink", dfa.states)
    triples = list(dfa.transition_triples())
    for control in dfa.states:
        triples.append((control, dollar, sink))
    triples.append((sink, dollar, sink))
    return FiniteAutomaton(
        tuple(dfa.states) + (sink,), tuple(dfa.alphabet) + (dollar,),
        triples, dfa.initial, tuple(dfa.finals) + (sink,))


def _sibling_send(machine: FifoMachine, source: str, channel: str,
                  target: str):
    letters = sorted(
        step.action.letter for step in machine.transitions_from(source)
        if step.action.is_send and step.action.channel == channel
        and step.target == target)
    if not letters:
        raise InternalError(
            f"placeholder send at {source}->{target} on {channel} has no "
            f"original send to stand for")
    return send(channel, letters[0])


def _strip_placeholders(machine: FifoMachine, augmented: FifoMachine,
                        dollars: Mapping[str, str], trace,
                        drop_channels=frozenset()) -> tuple:
    """Map a trace of the augmented machine back onto the original one:
    drop helper-channel actions and placeholder receives, and replace
    each placeholder send by an original send with the same endpoints."""
    configs = run_configs(augmented, tuple(trace))
    out = []
    placeholders = set(dollars.values())
    for before, action, after in zip(configs, trace, configs[1:]):
        if action.channel in drop_channels:
            continue
        if action.letter in placeholders:
            if action.is_receive:
                continue
            out.append(_sibling_send(machine, before.state, action.channel,
                                     after.state))
        else:
            out.append(action)
    return tuple(out)


def _check_receive_projections(machine: FifoMachine, specs, trace) -> None:
    for spec in specs:
        received = tuple(
            action.letter for action in trace
            if action.is_receive and action.channel == spec.channel)
        if not spec.dfa().accepts(received):
            raise InternalError(
                f"translated witness receives {received} on "
                f"{spec.channel}, outside the channel bound")


def _ob_reach(machine: FifoMachine, specs, state: str, contents, *,
              max_nodes, max_depth, workers) -> Verdict:
    config = _target_config(machine, state, contents)
    ordered = _order_specs(machine, specs)
    new_specs = []
    for spec, word in zip(ordered, config.contents):
        if word:
            new_specs.append(BoundedLangSpec(
                spec.channel, spec.tuple + (word,),
                concatenation(spec.dfa(), word_automaton(word))))
        else:
            new_specs.append(spec)
    bundle = normalize_machine(machine, new_specs, relax_alphabet=True)
    verdict = decide_reachability(bundle, state, config.contents,
                                  max_nodes=max_nodes, max_depth=max_depth,
                                  workers=workers)
    if verdict.is_yes:
        _check_receive_projections(machine, ordered, verdict.witness)
    return verdict


def _ob_csr(machine: FifoMachine, specs, state: str, *,
            max_nodes, max_depth, workers) -> Verdict:
    if state not in machine.states:
        raise ValidationError(f"unknown control state {state!r}")
    ordered = _order_specs(machine, specs)
    dollars = _fresh_letters(machine, machine.channels)
    jump = _fresh_name("d", machine.channels)
    used = _all_letters(machine) | set(dollars.values())
    pound = _fresh_name(f"${jump}", used)
    q_drain = _fresh_name("q_drain", machine.states)

    extra = [(state, send(jump, pound), q_drain)]
    for channel in machine.channels:
        extra.append((q_drain, receive(channel, dollars[channel]), q_drain))
    augmented = _augmented_machine(
        machine, dollars, extra_states=[q_drain],
        extra_channels={jump: (pound,)}, extra_transitions=extra)

    new_specs = [
        BoundedLangSpec(
            spec.channel, spec.tuple + ((dollars[spec.channel],),),
            concatenation(spec.dfa(), _letter_star(dollars[spec.channel])))
        for spec in ordered]
    new_specs.append(BoundedLangSpec(jump, ((pound,),),
                                     word_automaton((pound,))))
    bundle = normalize_machine(augmented, new_specs, relax_alphabet=True)
    target = tuple(() for _ in machine.channels) + ((pound,),)
    verdict = decide_reachability(bundle, q_drain, target,
                                  max_nodes=max_nodes, max_depth=max_depth,
                                  workers=workers)
    if not verdict.is_yes:
        return verdict
    witness = _strip_placeholders(machine, augmented, dollars,
                                 verdict.witness, drop_channels={jump})
    final = run_configs(machine, witness)[-1]
    if final.state != state:
        raise InternalError(
            f"translated witness ends at {final.state}, not {state}")
    _check_receive_projections(machine, ordered, witness)
    return Verdict(verdict.answer, witness=witness, method=verdict.method)


def _ob_finiteness(machine: FifoMachine, specs, decide, *,
                   max_nodes, workers) -> Verdict:
    ordered = _order_specs(machine, specs)
    dollars = _fresh_letters(machine, machine.channels)
    augmented = _augmented_machine(machine, dollars)
    new_specs = [
        BoundedLangSpec(
            spec.channel,
            spec.tuple + _proper_prefixes(spec.tuple)
            + ((dollars[spec.channel],),),
            _prefix_sink_language(spec, dollars[spec.channel]))
        for spec in ordered]
    bundle = normalize_machine(augmented, new_specs, relax_alphabet=True)
    verdict = decide(bundle, max_nodes=max_nodes, workers=workers)
    if not verdict.is_no or not isinstance(verdict.witness, PumpWitness):
        return verdict
    stem, loop = verdict.witness.stem, verdict.witness.loop
    translated = _strip_placeholders(machine, augmented, dollars,
                                     stem + loop)
    new_stem = translated[:len(stem)]
    new_loop = translated[len(stem):]
    run_configs(machine, new_stem + new_loop * 5)
    return Verdict(verdict.answer,
                   witness=PumpWitness(new_stem, new_loop),
                   method=verdict.method)


def ob_decide(kind: str, machine: FifoMachine, specs, target=None, *,
              max_nodes: int | None = None, max_depth: int | None = None,
              workers: int = 1) -> Verdict:
    """Decide a receive-bounded problem by rewriting it into a
    send-bounded one.

    Kinds: ``reach`` (target is a (state, contents) pair), ``csr``
    (target is a control state), ``bounded`` and ``term`` (no target).
    Rational reachability and deadlock in the receive-bounded setting
    have no known rewriting and raise :class:`UnsupportedQuery`.
    """
    kind = _normalize_kind(kind)
    if kind in ("rational", "rational-reach", "deadlock"):
        raise UnsupportedQuery(
            f"receive-bounded {kind} has no decision procedure here")
    if not isinstance(machine, FifoMachine):
        raise ValidationError("ob_decide needs a FIFO machine")
    if kind == "reach":
        if (not isinstance(target, Sequence) or isinstance(target, str)
                or len(target) != 2):
            raise ValidationError(
                "reach needs a (state, contents) target")
        state, contents = target
        return _ob_reach(machine, specs, state, contents,
                         max_nodes=max_nodes, max_depth=max_depth,
                         workers=workers)
    if kind == "csr":
        if not isinstance(target, str):
            raise ValidationError("csr needs a control-state target")
        return _ob_csr(machine, specs, target, max_nodes=max_nodes,
                       max_depth=max_depth, workers=workers)
    if kind == "bounded":
        return _ob_finiteness(machine, specs, decide_boundedness,
                              max_nodes=max_nodes, workers=workers)
    if kind in ("term", "terminates"):
        return _ob_finiteness(machine, specs, decide_termination,
                              max_nodes=max_nodes, workers=workers)
    raise ValidationError(f"unknown problem kind {kind!r}")
