"""Discrete-event simulator for the routing protocol over a vehicular field.

The model is deliberately small but honest about the effects that matter
for protocol tuning:

* disk radio: a frame reaches every node within ``tx_range`` of the
  transmitter, positions sampled at transmission start;
* carrier sense with random backoff: a sender checks the channel, defers
  while an in-range node is transmitting, then starts after a uniform
  backoff without re-checking, which leaves the usual vulnerability
  window in which two senders (in range or hidden) can overlap;
* overlapping transmissions corrupt frames at common receivers; unicast
  frames are retried up to ``max_retransmissions``, broadcasts never;
* airtime is ``bytes * 8 / bandwidth``; one FIFO transmit queue per node.

Events are processed in nondecreasing time with ties broken by
(time, kind precedence, subject id, insertion order), so a run is a pure
function of (scenario, config, seed).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from random import Random

from .olsr import HELLO, TC, MID, ControlMessage, NodeState, OlsrConfig
from .scenario import ScenarioSpec

DATA_TTL_HOPS = 64   # hop budget for data packets
PURGE_TICK = 1.0     # seconds between per-node expiry sweeps

EVENT_ORDER = {
    "frame-arrival": 0,
    "frame-send": 1,
    "frame-txend": 2,
    "periodic-emit": 3,
    "cbr-send": 4,
    "tuple-purge": 5,
    "sim-end": 6,
}


@dataclass(frozen=True)
class QosMetrics:
    """Aggregated quality-of-service results of one simulation run.

    pdr is delivered/sent; nrl counts every control-frame transmission
    (each hop separately) per delivered data packet; e2ed and rpl are
    means over delivered packets, in seconds and hops.  When nothing is
    delivered, e2ed is pinned to the scenario duration and rpl to zero.
    """

    pdr: float
    nrl: float
    e2ed: float
    rpl: float
    data_sent: int
    data_delivered: int
    data_dropped: int
    data_in_flight: int
    routing_tx: int


@dataclass
class Counters:
    data_sent: int = 0
    data_delivered: int = 0
    dropped_no_route: int = 0
    dropped_ttl: int = 0
    dropped_mac: int = 0
    routing_tx: int = 0
    e2ed_total: float = 0.0
    rpl_total: int = 0

    @property
    def data_dropped(self) -> int:
        return self.dropped_no_route + self.dropped_ttl + self.dropped_mac


def collect_metrics(counters: Counters, duration: float) -> QosMetrics:
    if counters.data_sent == 0:
        raise ValueError("zero data packets sent; metrics are undefined")
    delivered = counters.data_delivered
    in_flight = counters.data_sent - delivered - counters.data_dropped
    return QosMetrics(
        pdr=delivered / counters.data_sent,
        nrl=counters.routing_tx / max(1, delivered),
        e2ed=(counters.e2ed_total / delivered) if delivered else duration,
        rpl=(counters.rpl_total / delivered) if delivered else 0.0,
        data_sent=counters.data_sent,
        data_delivered=delivered,
        data_dropped=counters.data_dropped,
        data_in_flight=in_flight,
        routing_tx=counters.routing_tx,
    )


@dataclass
class DataPacket:
    uid: tuple[int, int]      # (session index, packet index)
    source: int
    dest: int
    origin_time: float
    size_bytes: int
    hop_count: int = 0


@dataclass
class Frame:
    payload: object           # ControlMessage or DataPacket
    transmitter: int
    dest: int | None          # None = broadcast
    size_bytes: int
    attempts: int = 0

    @property
    def is_control(self) -> bool:
        return isinstance(self.payload, ControlMessage)


@dataclass
class _Transmission:
    transmitter: int
    start: float
    end: float
    frame: Frame
    pos: tuple[float, float]  # transmitter position at start


class _SimNode:
    __slots__ = ("node_id", "state", "queue", "current")

    def __init__(self, node_id: int, state: NodeState):
        self.node_id = node_id
        self.state = state
        self.queue: list[Frame] = []
        self.current: Frame | None = None


class Simulator:
    """One deterministic run of a scenario under a protocol configuration."""

    def __init__(self, scenario: ScenarioSpec, config: OlsrConfig, seed: int, *,
                 event_log=None, waive_config_validation: bool = False):
        scenario.validate()
        if not scenario.sessions:
            raise ValueError("scenario has no CBR sessions; nothing to measure")
        if not waive_config_validation:
            config.validate()
        self.scenario = scenario
        self.config = config
        self.seed = seed
        self.rng = Random(seed)
        self.counters = Counters()
        self.now = 0.0
        self._event_log = event_log
        self._heap: list = []
        self._insertions = 0
        self._transmissions: list[_Transmission] = []
        self.nodes: dict[int, _SimNode] = {}
        for node_id in self.scenario.trace.nodes:
            state = NodeState(node_id, config, now=0.0, rng=self.rng)
            self.nodes[node_id] = _SimNode(node_id, state)

    # -- event plumbing -------------------------------------------------

    def _schedule(self, time: float, kind: str, subject: int, payload=None) -> None:
        heapq.heappush(self._heap, (time, EVENT_ORDER[kind], subject, self._insertions,
                                    kind, payload))
        self._insertions += 1

    def _log(self, subject: int, kind: str, detail: str) -> None:
        if self._event_log is not None:
            self._event_log.write(f"{self.now:.6f} {subject} {kind} {detail}\n")

    def _position(self, node: int, time: float) -> tuple[float, float]:
        return self.scenario.trace.position(node, time)

    def _in_range(self, a: tuple[float, float], b: tuple[float, float]) -> bool:
        return math.dist(a, b) <= self.scenario.radio_mac.tx_range

    def _airtime(self, frame: Frame) -> float:
        return frame.size_bytes * 8.0 / self.scenario.radio_mac.bandwidth

    def _backoff(self) -> float:
        mac = self.scenario.radio_mac
        return self.rng.uniform(0.0, mac.backoff_slots * mac.slot_time)

    # -- run loop ---------------------------------------------------------

    def run(self) -> QosMetrics:
        duration = self.scenario.duration
        for node in self.nodes.values():
            self._schedule(node.state.next_emission(), "periodic-emit", node.node_id)
            self._schedule(PURGE_TICK, "tuple-purge", node.node_id)
        for si, session in enumerate(self.scenario.sessions):
            for k, t in enumerate(session.send_times()):
                self._schedule(t, "cbr-send", session.source, (si, k, session))
        self._schedule(duration, "sim-end", -1)

        while self._heap:
            time, _, subject, _, kind, payload = heapq.heappop(self._heap)
            self.now = time
            if kind == "sim-end":
                self._log(subject, kind, "")
                break
            handler = getattr(self, "_on_" + kind.replace("-", "_"))
            handler(subject, payload)
        return collect_metrics(self.counters, duration)

    # -- handlers ---------------------------------------------------------

    def _on_periodic_emit(self, node_id: int, _payload) -> None:
        node = self.nodes[node_id]
        node.state.purge_expired(self.now)
        messages, _next = node.state.emit_periodic(self.now, self.rng)
        for msg in messages:
            self._enqueue(node, Frame(msg, node_id, None, msg.size_bytes))
            self._log(node_id, "periodic-emit", f"{msg.kind} seq={msg.seq}")
        self._schedule(node.state.next_emission(), "periodic-emit", node_id)

    def _on_tuple_purge(self, node_id: int, _payload) -> None:
        node = self.nodes[node_id]
        if node.state.purge_expired(self.now):
            self._log(node_id, "tuple-purge", "expired")
        nxt = self.now + PURGE_TICK
        if nxt <= self.scenario.duration:
            self._schedule(nxt, "tuple-purge", node_id)

    def _on_cbr_send(self, source: int, payload) -> None:
        si, k, session = payload
        node = self.nodes[source]
        node.state.purge_expired(self.now)
        packet = DataPacket((si, k), source, session.dest, self.now, session.packet_size)
        self.counters.data_sent += 1
        self._log(source, "cbr-send", f"uid={si}:{k} dest={session.dest}")
        self.route_data_packet(packet, source, self.now)

    def _on_frame_send(self, node_id: int, _payload) -> None:
        self.deliver_frame(self.nodes[node_id], self.now)

    def deliver_frame(self, node: _SimNode, now: float) -> None:
        """Carrier-sense attempt for the node's current frame.

        If an in-range transmission is already on the air the attempt is
        deferred to its end plus a fresh backoff.  Otherwise the frame is
        committed to start after one backoff, leaving the window in which
        other stations may still see an idle channel.
        """
        frame = node.current
        pos = self._position(node.node_id, now)
        busy_until = 0.0
        for tx in self._transmissions:
            if tx.start <= now < tx.end and (
                tx.transmitter == node.node_id or self._in_range(pos, tx.pos)
            ):
                busy_until = max(busy_until, tx.end)
        if busy_until > 0.0:
            self._schedule(busy_until + self._backoff(), "frame-send", node.node_id)
            return
        start = now + self._backoff()
        end = start + self._airtime(frame)
        frame.attempts += 1
        if frame.is_control:
            self.counters.routing_tx += 1
        tx = _Transmission(node.node_id, start, end,
                           frame, self._position(node.node_id, start))
        self._transmissions.append(tx)
        self._schedule(end, "frame-txend", node.node_id, tx)

    def _on_frame_txend(self, node_id: int, tx: _Transmission) -> None:
        node = self.nodes[node_id]
        frame = tx.frame
        self._transmissions = [t for t in self._transmissions if t.end > self.now - 0.05]
        delay = self.scenario.radio_mac.processing_delay
        if frame.dest is None:
            for other in self.nodes:
                if other == node_id:
                    continue
                rpos = self._position(other, tx.start)
                if not self._in_range(rpos, tx.pos):
                    continue
                if not self._corrupted(tx, other, rpos):
                    self._schedule(self.now + delay, "frame-arrival", other,
                                   (frame.payload, node_id))
            self._finish_frame(node)
            return
        dest = frame.dest
        rpos = self._position(dest, tx.start)
        ok = self._in_range(rpos, tx.pos) and not self._corrupted(tx, dest, rpos)
        if ok:
            self._schedule(self.now + delay, "frame-arrival", dest,
                           (frame.payload, node_id))
            self._finish_frame(node)
        elif frame.attempts <= self.scenario.radio_mac.max_retransmissions:
            self._schedule(self.now, "frame-send", node_id)
        else:
            if not frame.is_control:
                self.counters.dropped_mac += 1
                self._log(node_id, "frame-txend",
                          f"drop-mac uid={frame.payload.uid[0]}:{frame.payload.uid[1]}")
            self._finish_frame(node)

    def _corrupted(self, tx: _Transmission, receiver: int,
                   receiver_pos: tuple[float, float]) -> bool:
        """True when another overlapping transmission is audible at the receiver."""
        for other in self._transmissions:
            if other is tx:
                continue
            if other.start < tx.end and tx.start < other.end:
                if other.transmitter == receiver or self._in_range(receiver_pos, other.pos):
                    return True
        return False

    def _finish_frame(self, node: _SimNode) -> None:
        node.current = node.queue.pop(0) if node.queue else None
        if node.current is not None:
            self._schedule(self.now, "frame-send", node.node_id)

    def _on_frame_arrival(self, node_id: int, payload) -> None:
        message, sender = payload
        node = self.nodes[node_id]
        node.state.purge_expired(self.now)
        if isinstance(message, ControlMessage):
            forward = node.state.process_message(message, sender, self.now)
            self._log(node_id, "frame-arrival",
                      f"{message.kind} from={sender} origin={message.originator}")
            if forward:
                copy = message.forwarded_copy()
                self._enqueue(node, Frame(copy, node_id, None, copy.size_bytes))
        else:
            message.hop_count += 1
            self._log(node_id, "frame-arrival",
                      f"DATA uid={message.uid[0]}:{message.uid[1]} from={sender}")
            self.route_data_packet(message, node_id, self.now)

    # -- data plane -------------------------------------------------------

    def route_data_packet(self, packet: DataPacket, at: int, now: float) -> None:
        """Deliver, forward, or drop a data packet held by node ``at``."""
        if at == packet.dest:
            self.counters.data_delivered += 1
            self.counters.e2ed_total += now - packet.origin_time
            self.counters.rpl_total += packet.hop_count
            self._log(at, "frame-arrival",
                      f"delivered uid={packet.uid[0]}:{packet.uid[1]} hops={packet.hop_count}")
            return
        if packet.hop_count >= DATA_TTL_HOPS:
            self.counters.dropped_ttl += 1
            self._log(at, "frame-arrival", f"drop-ttl uid={packet.uid[0]}:{packet.uid[1]}")
            return
        node = self.nodes[at]
        route = node.state.routing.get(packet.dest)
        if route is None:
            self.counters.dropped_no_route += 1
            self._log(at, "frame-arrival", f"drop-no-route uid={packet.uid[0]}:{packet.uid[1]}")
            return
        next_hop = route[0]
        self._enqueue(node, Frame(packet, at, next_hop, packet.size_bytes))

    def _enqueue(self, node: _SimNode, frame: Frame) -> None:
        if node.current is None:
            node.current = frame
            self._schedule(self.now, "frame-send", node.node_id)
        else:
            node.queue.append(frame)


def run_simulation(scenario: ScenarioSpec, config: OlsrConfig, seed: int, *,
                   event_log=None, waive_config_validation: bool = False) -> QosMetrics:
    """Simulate the scenario once and return its QoS metrics."""
    sim = Simulator(scenario, config, seed, event_log=event_log,
                    waive_config_validation=waive_config_validation)
    return sim.run()
