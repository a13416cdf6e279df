"""Deterministic in-process publish/subscribe bus.

Every sensor, actuator and behaviour is a named node. Delivery is
synchronous: ``publish`` calls every current subscriber before returning,
in subscription order, stamped with the bus's virtual time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable


class BusError(Exception):
    pass


class DuplicateNodeError(BusError):
    pass


class UnknownNodeError(BusError):
    pass


class UnknownTopicError(BusError):
    pass


class SchemaMismatchError(BusError):
    pass


class NodeNameError(BusError, ValueError):
    pass


@dataclass(frozen=True)
class NodeId:
    name: str


@dataclass(frozen=True)
class Topic:
    name: str
    schema_tag: str


@dataclass(frozen=True)
class BusMessage:
    topic: Topic
    publisher: NodeId
    stamp: int  # virtual time, microseconds
    seq: int
    payload: Any


@dataclass
class Subscription:
    node: NodeId
    topic: Topic
    handler: Callable[[BusMessage], None]
    active: bool = True


@dataclass
class _TopicEntry:
    topic: Topic
    publishers: set = field(default_factory=set)
    subscriptions: list = field(default_factory=list)


class MessageBus:
    """Single-threaded bus over a virtual microsecond clock.

    ``trace`` records (stamp, topic, publisher, seq, subscriber) for every
    delivery when ``record_trace`` is set; two runs with the same call
    sequence produce identical traces.
    """

    def __init__(self, record_trace: bool = False):
        self.now_us = 0
        self._nodes: dict[str, NodeId] = {}
        self._topics: dict[str, _TopicEntry] = {}
        self._seq: dict[tuple[str, str], int] = {}
        self.record_trace = record_trace
        self.trace: list[tuple] = []

    def set_time(self, now_us: int) -> None:
        if now_us < self.now_us:
            raise ValueError(f"virtual time cannot go backwards ({now_us} < {self.now_us})")
        self.now_us = int(now_us)

    @property
    def nodes(self) -> list[NodeId]:
        return list(self._nodes.values())

    def topics(self) -> list[Topic]:
        return [e.topic for e in self._topics.values()]

    def register_node(self, name: str) -> NodeId:
        if not isinstance(name, str) or not name:
            raise NodeNameError("node name must be a non-empty string")
        if name in self._nodes:
            raise DuplicateNodeError(f"node {name!r} already registered")
        node = NodeId(name)
        self._nodes[name] = node
        return node

    def _check_node(self, node: NodeId) -> None:
        if self._nodes.get(node.name) != node:
            raise UnknownNodeError(f"node {node.name!r} is not registered")

    def _entry(self, topic: Topic) -> _TopicEntry:
        entry = self._topics.get(topic.name)
        if entry is None:
            entry = self._topics[topic.name] = _TopicEntry(topic)
        elif entry.topic.schema_tag != topic.schema_tag:
            raise SchemaMismatchError(
                f"topic {topic.name!r} carries {entry.topic.schema_tag!r}, got {topic.schema_tag!r}"
            )
        return entry

    def advertise(self, node: NodeId, topic: Topic) -> None:
        self._check_node(node)
        self._entry(topic).publishers.add(node.name)

    def subscribe(self, node: NodeId, topic: Topic, handler: Callable[[BusMessage], None]) -> Subscription:
        self._check_node(node)
        entry = self._entry(topic)
        sub = Subscription(node, entry.topic, handler)
        entry.subscriptions.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        sub.active = False
        entry = self._topics.get(sub.topic.name)
        if entry is not None and sub in entry.subscriptions:
            entry.subscriptions.remove(sub)

    def publish(self, node: NodeId, topic: Topic, payload: Any) -> int:
        self._check_node(node)
        entry = self._topics.get(topic.name)
        if entry is None:
            raise UnknownTopicError(f"topic {topic.name!r} was never advertised")
        if entry.topic.schema_tag != topic.schema_tag:
            raise SchemaMismatchError(
                f"topic {topic.name!r} carries {entry.topic.schema_tag!r}, got {topic.schema_tag!r}"
            )
        if node.name not in entry.publishers:
            raise UnknownTopicError(f"node {node.name!r} does not advertise {topic.name!r}")
        key = (node.name, topic.name)
        seq = self._seq.get(key, 0) + 1
        self._seq[key] = seq
        msg = BusMessage(entry.topic, node, self.now_us, seq, payload)
        # snapshot: handlers may subscribe/unsubscribe while we deliver
        for sub in list(entry.subscriptions):
            if not sub.active:
                continue
            if self.record_trace:
                self.trace.append((msg.stamp, topic.name, node.name, seq, sub.node.name))
            sub.handler(msg)
        return seq
