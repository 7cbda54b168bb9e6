"""Machine models and one-step operational semantics.

Two machine kinds live here:

* :class:`FifoMachine` -- finite control communicating through FIFO
  channels; every transition sends (``c!a``) or receives (``c?a``) a
  single letter on a single channel.  Per-channel alphabets partition
  the global alphabet.
* :class:`CounterMachine` -- finite control over nonnegative counters;
  every transition increments or decrements one counter (or is silent)
  and carries a set of counters that must all equal zero for the
  transition to fire.  A transition can remember the FIFO action it was
  compiled from (its ``label``).

Configurations are immutable; step functions return fresh
configurations and raise :mod:`ibfifo.errors` subclasses when a step is
impossible.  Transition iteration order is deterministic (sorted).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    DecrementOnZero,
    EmptyChannel,
    NoSuchTransition,
    ReceiveMismatch,
    StepError,
    ValidationError,
    ZeroTestFailed,
)

Letter = str
Word = tuple[Letter, ...]
Contents = tuple[Word, ...]

SEND = "!"
RECEIVE = "?"

INC = "inc"
DEC = "dec"
NOP = "nop"


def as_word(letters: Iterable[Letter]) -> Word:
    """Coerce an iterable of letters into a word tuple."""
    return tuple(letters)


@dataclass(frozen=True, order=True)
class FifoAction:
    """A single communication action, ``channel!letter`` or ``channel?letter``."""

    channel: str
    kind: str
    letter: Letter

    def __post_init__(self):
        if self.kind not in (SEND, RECEIVE):
            raise ValidationError(
                f"action kind must be {SEND!r} or {RECEIVE!r}, got {self.kind!r}")

    @property
    def is_send(self) -> bool:
        return self.kind == SEND

    @property
    def is_receive(self) -> bool:
        return self.kind == RECEIVE

    def __str__(self) -> str:
        return f"{self.channel}{self.kind}{self.letter}"

    def __repr__(self) -> str:
        return f"FifoAction({str(self)!r})"

    @staticmethod
    def parse(text: str) -> "FifoAction":
        for i, ch in enumerate(text):
            if ch in (SEND, RECEIVE):
                channel, letter = text[:i], text[i + 1:]
                if channel and letter:
                    return FifoAction(channel, ch, letter)
                break
        raise ValidationError(f"cannot parse action {text!r}")


def send(channel: str, letter: Letter) -> FifoAction:
    return FifoAction(channel, SEND, letter)


def receive(channel: str, letter: Letter) -> FifoAction:
    return FifoAction(channel, RECEIVE, letter)


def coerce_action(value: Union[FifoAction, str]) -> FifoAction:
    return value if isinstance(value, FifoAction) else FifoAction.parse(value)


@dataclass(frozen=True, order=True)
class FifoTransition:
    source: str
    action: FifoAction
    target: str

    def __str__(self) -> str:
        return f"{self.source} --{self.action}--> {self.target}"


@dataclass(frozen=True, order=True)
class FifoConfig:
    """A control state plus one word of pending messages per channel.

    ``contents`` is aligned with the owning machine's channel order.
    """

    state: str
    contents: Contents

    def __str__(self) -> str:
        inner = ",".join("".join(w) if w else "ε" for w in self.contents)
        return f"({self.state} | {inner})"


class FifoMachine:
    """A FIFO channel machine: finite control, send/receive transitions.

    ``states`` is kept sorted; ``channels`` keeps construction order
    (channel order gives meaning to contents tuples); ``letters`` maps
    each channel to its (sorted) alphabet; ``transitions`` is a sorted,
    duplicate-free tuple.
    """

    __slots__ = ("states", "channels", "letters", "transitions", "initial",
                 "channel_index", "letter_channel", "_outgoing")

    def __init__(self, states: Iterable[str], channels: Iterable[str],
                 letters: Mapping[str, Iterable[Letter]],
                 transitions: Iterable, initial: str, *, validate: bool = True):
        self.states: tuple[str, ...] = tuple(sorted(set(states)))
        self.channels: tuple[str, ...] = tuple(channels)
        extra = set(letters) - set(self.channels)
        if extra:
            raise ValidationError(
                f"letters declared for unknown channels: {sorted(extra)}")
        self.letters: dict[str, tuple[Letter, ...]] = {
            c: tuple(sorted(set(letters.get(c, ())))) for c in self.channels}
        normalized = set()
        for t in transitions:
            if not isinstance(t, FifoTransition):
                source, action, target = t
                t = FifoTransition(source, coerce_action(action), target)
            normalized.add(t)
        self.transitions: tuple[FifoTransition, ...] = tuple(sorted(normalized))
        self.initial = initial
        self.channel_index: dict[str, int] = {
            c: i for i, c in enumerate(self.channels)}
        self.letter_channel: dict[Letter, str] = {}
        for c in self.channels:
            for a in self.letters[c]:
                if a in self.letter_channel:
                    raise ValidationError(
                        f"letter {a!r} declared on channels "
                        f"{self.letter_channel[a]!r} and {c!r}")
                self.letter_channel[a] = c
        outgoing: dict[str, list[FifoTransition]] = {}
        for t in self.transitions:
            outgoing.setdefault(t.source, []).append(t)
        self._outgoing: dict[str, tuple[FifoTransition, ...]] = {
            q: tuple(ts) for q, ts in outgoing.items()}
        if validate:
            self.validate()

    # -- structure ---------------------------------------------------------

    def validate(self) -> None:
        if not self.states:
            raise ValidationError("machine has no states")
        if not self.channels:
            raise ValidationError("machine has no channels")
        if len(set(self.channels)) != len(self.channels):
            raise ValidationError("duplicate channel ids")
        if self.initial not in self.states:
            raise ValidationError(f"initial state {self.initial!r} not declared")
        state_set = set(self.states)
        for t in self.transitions:
            if t.source not in state_set or t.target not in state_set:
                raise ValidationError(f"transition references unknown state: {t}")
            act = t.action
            if act.channel not in self.channel_index:
                raise ValidationError(f"transition on unknown channel: {t}")
            if act.letter not in self.letters[act.channel]:
                raise ValidationError(
                    f"letter {act.letter!r} not in alphabet of channel "
                    f"{act.channel!r}: {t}")

    def alphabet(self) -> tuple[Letter, ...]:
        """All letters, in channel order then letter order."""
        return tuple(a for c in self.channels for a in self.letters[c])

    def transitions_from(self, state: str) -> tuple[FifoTransition, ...]:
        return self._outgoing.get(state, ())

    def empty_contents(self) -> Contents:
        return ((),) * len(self.channels)

    def initial_config(self) -> FifoConfig:
        return FifoConfig(self.initial, self.empty_contents())

    def config(self, state: str, contents: Mapping[str, Iterable[Letter]] | Sequence[Iterable[Letter]] = ()) -> FifoConfig:
        """Build a configuration from per-channel words (missing channels empty)."""
        if isinstance(contents, Mapping):
            unknown = set(contents) - set(self.channels)
            if unknown:
                raise ValidationError(f"unknown channels in contents: {sorted(unknown)}")
            vec = tuple(tuple(contents.get(c, ())) for c in self.channels)
        else:
            vec = tuple(tuple(w) for w in contents)
            if len(vec) != len(self.channels):
                raise ValidationError(
                    f"expected {len(self.channels)} channel words, got {len(vec)}")
        return FifoConfig(state, vec)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FifoMachine):
            return NotImplemented
        return (self.states == other.states and self.channels == other.channels
                and self.letters == other.letters
                and self.transitions == other.transitions
                and self.initial == other.initial)

    def __repr__(self) -> str:
        return (f"FifoMachine(states={len(self.states)}, "
                f"channels={list(self.channels)}, "
                f"transitions={len(self.transitions)}, init={self.initial!r})")


# -- FIFO semantics --------------------------------------------------------

def fifo_step(machine: FifoMachine, config: FifoConfig,
              step: Union[FifoTransition, FifoAction, str]) -> FifoConfig:
    """Apply one transition (or an unambiguous action) to a configuration."""
    if not isinstance(step, FifoTransition):
        action = coerce_action(step)
        matches = [t for t in machine.transitions_from(config.state)
                   if t.action == action]
        if not matches:
            raise NoSuchTransition(
                f"no transition {action} at state {config.state!r}")
        if len(matches) > 1:
            raise NoSuchTransition(
                f"action {action} is ambiguous at state {config.state!r}; "
                f"pass a transition instead")
        step = matches[0]
    elif step.source != config.state or step not in machine.transitions_from(config.state):
        raise NoSuchTransition(f"transition {step} does not apply at {config.state!r}")
    act = step.action
    idx = machine.channel_index[act.channel]
    word = config.contents[idx]
    if act.is_send:
        new_word = word + (act.letter,)
    else:
        if not word:
            raise EmptyChannel(f"receive {act} on empty channel")
        if word[0] != act.letter:
            raise ReceiveMismatch(
                f"receive {act} but head of channel is {word[0]!r}")
        new_word = word[1:]
    contents = config.contents[:idx] + (new_word,) + config.contents[idx + 1:]
    return FifoConfig(step.target, contents)


def enabled_transitions(machine: FifoMachine, config: FifoConfig) -> tuple[FifoTransition, ...]:
    """All transitions that can fire at ``config`` (sends always; receives on head match)."""
    out = []
    for t in machine.transitions_from(config.state):
        act = t.action
        if act.is_send:
            out.append(t)
        else:
            word = config.contents[machine.channel_index[act.channel]]
            if word and word[0] == act.letter:
                out.append(t)
    return tuple(out)


def run_configs(machine: FifoMachine, trace: Sequence, start: FifoConfig | None = None) -> tuple[FifoConfig, ...]:
    """Execute a sequence of actions and return all visited configurations.

    The result has length ``len(trace) + 1`` and starts with ``start``
    (the initial configuration when omitted).  If several transitions
    carry the same action, choices are resolved by backtracking in
    sorted transition order, so the result is deterministic.  Raises a
    :class:`~ibfifo.errors.StepError` when no run realizes the trace.
    """
    if start is None:
        start = machine.initial_config()
    actions = [coerce_action(a) for a in trace]
    run: list[FifoConfig] = [start]
    pending: list[list[FifoConfig]] = []
    first_error: StepError | None = None

    def successors(cfg: FifoConfig, act: FifoAction, index: int) -> list[FifoConfig]:
        nonlocal first_error
        out = []
        for t in machine.transitions_from(cfg.state):
            if t.action != act:
                continue
            try:
                out.append(fifo_step(machine, cfg, t))
            except StepError as exc:
                if first_error is None:
                    first_error = type(exc)(f"step {index}: {exc}")
        if not out and first_error is None:
            first_error = NoSuchTransition(
                f"step {index}: no transition {act} at state {cfg.state!r}")
        return out

    while len(run) - 1 < len(actions):
        depth = len(run) - 1
        if len(pending) == depth:
            pending.append(successors(run[-1], actions[depth], depth))
        if pending[depth]:
            run.append(pending[depth].pop(0))
        else:
            pending.pop()
            if depth == 0:
                assert first_error is not None
                raise first_error
            run.pop()
    return tuple(run)


def project(trace: Sequence, channel: str | None, direction: str) -> Word:
    """The letters of the actions on ``channel`` with the given direction.

    ``direction`` is ``"!"``/``"send"`` or ``"?"``/``"receive"``;
    ``channel=None`` matches every channel.
    """
    kind = {"send": SEND, "receive": RECEIVE, SEND: SEND, RECEIVE: RECEIVE}.get(direction)
    if kind is None:
        raise ValidationError(f"unknown projection direction {direction!r}")
    out = []
    for a in trace:
        a = coerce_action(a)
        if a.kind == kind and (channel is None or a.channel == channel):
            out.append(a.letter)
    return tuple(out)


def send_projection(trace: Sequence, channel: str | None = None) -> Word:
    return project(trace, channel, SEND)


def receive_projection(trace: Sequence, channel: str | None = None) -> Word:
    return project(trace, channel, RECEIVE)


# -- counter machines ------------------------------------------------------

@dataclass(frozen=True)
class CounterAction:
    """One counter operation: inc/dec of a counter (or silent) plus a zero-test set."""

    kind: str
    counter: Optional[str]
    zeroset: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "zeroset", frozenset(self.zeroset))
        if self.kind not in (INC, DEC, NOP):
            raise ValidationError(f"unknown counter op {self.kind!r}")
        if (self.counter is None) != (self.kind == NOP):
            raise ValidationError(
                f"op {self.kind!r} and counter {self.counter!r} are inconsistent")

    def sort_key(self):
        return (self.kind, self.counter or "", tuple(sorted(self.zeroset)))

    def __str__(self) -> str:
        op = self.kind if self.kind == NOP else f"{self.kind} {self.counter}"
        if self.zeroset:
            op += " [" + "=0,".join(sorted(self.zeroset)) + "=0]"
        return op


@dataclass(frozen=True)
class CounterTransition:
    source: str
    action: CounterAction
    target: str
    label: Optional[FifoAction] = None

    @property
    def kind(self) -> str:
        return self.action.kind

    @property
    def counter(self) -> Optional[str]:
        return self.action.counter

    @property
    def zeroset(self) -> frozenset[str]:
        return self.action.zeroset

    def sort_key(self):
        return (self.source, self.action.sort_key(), self.target,
                str(self.label) if self.label else "")

    def __str__(self) -> str:
        suffix = f"  ({self.label})" if self.label else ""
        return f"{self.source} --{self.action}--> {self.target}{suffix}"


def counter_transition(source: str, kind: str, counter: Optional[str],
                       zeroset: Iterable[str], target: str,
                       label: Optional[FifoAction] = None) -> CounterTransition:
    return CounterTransition(source, CounterAction(kind, counter, frozenset(zeroset)),
                             target, label)


@dataclass(frozen=True, order=True)
class CounterConfig:
    """A control state plus a valuation tuple aligned with the machine's counters."""

    state: str
    valuation: tuple[int, ...]

    def __str__(self) -> str:
        return f"({self.state} | {','.join(map(str, self.valuation))})"


class CounterMachine:
    """A counter machine with zero-test sets on transitions.

    ``counters`` keeps construction order (valuation tuples align with
    it); ``transitions`` is sorted and duplicate-free.
    """

    __slots__ = ("states", "counters", "transitions", "initial",
                 "counter_index", "_outgoing", "_transition_set")

    def __init__(self, states: Iterable[str], counters: Iterable[str],
                 transitions: Iterable[CounterTransition], initial: str,
                 *, validate: bool = True):
        self.states: tuple[str, ...] = tuple(sorted(set(states)))
        self.counters: tuple[str, ...] = tuple(counters)
        self.transitions: tuple[CounterTransition, ...] = tuple(
            sorted(set(transitions), key=CounterTransition.sort_key))
        self.initial = initial
        self.counter_index: dict[str, int] = {
            x: i for i, x in enumerate(self.counters)}
        outgoing: dict[str, list[CounterTransition]] = {}
        for t in self.transitions:
            outgoing.setdefault(t.source, []).append(t)
        self._outgoing: dict[str, tuple[CounterTransition, ...]] = {
            q: tuple(ts) for q, ts in outgoing.items()}
        self._transition_set = frozenset(self.transitions)
        if validate:
            self.validate()

    def validate(self) -> None:
        if not self.states:
            raise ValidationError("counter machine has no states")
        if len(set(self.counters)) != len(self.counters):
            raise ValidationError("duplicate counter ids")
        if self.initial not in set(self.states):
            raise ValidationError(f"initial state {self.initial!r} not declared")
        state_set = set(self.states)
        counter_set = set(self.counters)
        for t in self.transitions:
            if t.source not in state_set or t.target not in state_set:
                raise ValidationError(f"transition references unknown state: {t}")
            if t.counter is not None and t.counter not in counter_set:
                raise ValidationError(f"transition on unknown counter: {t}")
            if not t.zeroset <= counter_set:
                raise ValidationError(f"zero-test set references unknown counters: {t}")

    def transitions_from(self, state: str) -> tuple[CounterTransition, ...]:
        return self._outgoing.get(state, ())

    def zero_valuation(self) -> tuple[int, ...]:
        return (0,) * len(self.counters)

    def initial_config(self) -> CounterConfig:
        return CounterConfig(self.initial, self.zero_valuation())

    def valuation(self, values: Mapping[str, int] | None = None, **named: int) -> tuple[int, ...]:
        """Build a valuation tuple from a (partial) counter->value mapping."""
        merged = dict(values or {})
        merged.update(named)
        unknown = set(merged) - set(self.counters)
        if unknown:
            raise ValidationError(f"unknown counters: {sorted(unknown)}")
        return tuple(merged.get(x, 0) for x in self.counters)

    def valuation_dict(self, valuation: Sequence[int]) -> dict[str, int]:
        return dict(zip(self.counters, valuation))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CounterMachine):
            return NotImplemented
        return (self.states == other.states and self.counters == other.counters
                and self.transitions == other.transitions
                and self.initial == other.initial)

    def __repr__(self) -> str:
        return (f"CounterMachine(states={len(self.states)}, "
                f"counters={list(self.counters)}, "
                f"transitions={len(self.transitions)}, init={self.initial!r})")


def counter_enabled(machine: CounterMachine, config: CounterConfig) -> tuple[CounterTransition, ...]:
    """All counter transitions that can fire at ``config``."""
    out = []
    for t in machine.transitions_from(config.state):
        ok = all(config.valuation[machine.counter_index[x]] == 0 for x in t.zeroset)
        if ok and t.kind == DEC:
            ok = config.valuation[machine.counter_index[t.counter]] > 0
        if ok:
            out.append(t)
    return tuple(out)


def counter_step(machine: CounterMachine, config: CounterConfig,
                 step: Union[CounterTransition, CounterAction]) -> CounterConfig:
    """Apply one counter transition (or an unambiguous action) to a configuration."""
    if isinstance(step, CounterAction):
        matches = [t for t in machine.transitions_from(config.state)
                   if t.action == step]
        if not matches:
            raise NoSuchTransition(f"no transition {step} at state {config.state!r}")
        targets = {t.target for t in matches}
        if len(targets) > 1:
            raise NoSuchTransition(
                f"action {step} is ambiguous at state {config.state!r}; "
                f"pass a transition instead")
        step = matches[0]
    elif step.source != config.state or step not in machine._transition_set:
        raise NoSuchTransition(f"transition {step} does not apply at {config.state!r}")
    valuation = config.valuation
    for x in sorted(step.zeroset):
        value = valuation[machine.counter_index[x]]
        if value != 0:
            raise ZeroTestFailed(f"counter {x} = {value}, expected 0: {step}")
    if step.kind != NOP:
        i = machine.counter_index[step.counter]
        if step.kind == DEC:
            if valuation[i] == 0:
                raise DecrementOnZero(f"counter {step.counter} is 0: {step}")
            valuation = valuation[:i] + (valuation[i] - 1,) + valuation[i + 1:]
        else:
            valuation = valuation[:i] + (valuation[i] + 1,) + valuation[i + 1:]
    return CounterConfig(step.target, valuation)


def counter_run_configs(machine: CounterMachine, trace: Sequence,
                        start: CounterConfig | None = None) -> tuple[CounterConfig, ...]:
    """Execute a sequence of counter transitions/actions; return all configurations."""
    if start is None:
        start = machine.initial_config()
    run = [start]
    for index, step in enumerate(trace):
        try:
            run.append(counter_step(machine, run[-1], step))
        except StepError as exc:
            raise type(exc)(f"step {index}: {exc}") from None
    return tuple(run)


def run_trace(machine, start, trace):
    """Left-fold of the step function: run ``trace`` from ``start``, return the final configuration.

    Works for both machine kinds; ``start=None`` means the initial
    configuration.  Step errors are propagated with the failing index.
    """
    if isinstance(machine, FifoMachine):
        return run_configs(machine, trace, start)[-1]
    if isinstance(machine, CounterMachine):
        return counter_run_configs(machine, trace, start)[-1]
    raise ValidationError(f"not a machine: {machine!r}")


def is_zero_restricted(trace: Sequence) -> bool:
    """Check the frozen-zero-test condition on a counter trace.

    True iff no counter is incremented or decremented at or after a
    position whose zero-test set contains it (once tested for zero,
    a counter may never be operated again).  Accepts transitions or
    actions (anything with ``kind``/``counter``/``zeroset``).
    """
    frozen: set[str] = set()
    for t in trace:
        frozen |= t.zeroset
        if t.kind != NOP and t.counter in frozen:
            return False
    return True
