"""Shared fixtures: hand-built reference machines used as oracles."""

from __future__ import annotations

import pytest

from ibfifo.core import FifoMachine, receive, send


def build_cdp() -> FifoMachine:
    """The connection–deconnection protocol, built by hand.

    Product of two processes: the left one sends a/b on c1 and receives
    e on c2; the right one receives a/b on c1 and sends e on c2.
    """
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
    return FifoMachine(
        states=states,
        channels=["c1", "c2"],
        letters={"c1": ["a", "b"], "c2": ["e"]},
        transitions=transitions,
        initial="q00",
    )


@pytest.fixture(scope="session")
def cdp() -> FifoMachine:
    return build_cdp()


def build_loop_machine() -> FifoMachine:
    """A two-state machine over one channel: a state with send and
    receive self-loops, and a sink that keeps receiving the second
    letter."""
    return FifoMachine(
        states=["q0", "q1"], channels=["c"], letters={"c": ["a", "b"]},
        transitions=[("q0", "c!a", "q0"), ("q0", "c!b", "q0"),
                     ("q0", "c?a", "q0"), ("q0", "c?b", "q1"),
                     ("q1", "c?b", "q1")],
        initial="q0")


def build_loop_spec():
    from ibfifo.bounded import BoundedLangSpec

    return BoundedLangSpec("c", ["ab", "b"], "(ab)*bb*")


def build_cdp_specs():
    from ibfifo.bounded import BoundedLangSpec

    return [BoundedLangSpec("c1", ["ab", "a", "ab"], "(ab)*(a|eps)(ab)*"),
            BoundedLangSpec("c2", ["e"], "e*")]


@pytest.fixture(scope="session")
def loop_machine() -> FifoMachine:
    return build_loop_machine()


@pytest.fixture(scope="session")
def loop_spec():
    return build_loop_spec()


@pytest.fixture(scope="session")
def cdp_specs():
    return build_cdp_specs()


@pytest.fixture(scope="session")
def loop_bundle(loop_machine, loop_spec):
    from ibfifo.normalform import normalize_machine

    return normalize_machine(loop_machine, [loop_spec])


@pytest.fixture(scope="session")
def cdp_bundle(cdp, cdp_specs):
    from ibfifo.normalform import normalize_machine

    return normalize_machine(cdp, cdp_specs)
