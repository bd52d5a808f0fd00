"""Permissioned network: endorsing peers, one orderer, simulated transport.

The node graph is one gateway (the sole submit handle), one crash-stop
orderer that cuts blocks, and N validating peers, generalizing the
one-orderer/one-peer sample topology. A transaction is first endorsed by a
quorum of peers (each re-executes it speculatively and returns a hash of
the write-set), then sequenced by the orderer into a block, then delivered
to every peer, which verifies linkage, re-executes, and commits.

Transport is an in-process discrete-event simulation: an integer
microsecond clock, per-message latency draws, drop decisions, and
partitions, all derived from a single seeded PRNG, so any (config, seed,
workload) triple replays to a byte-identical transcript. Nodes interact
only by message passing; nothing shares mutable state across nodes.
"""

from __future__ import annotations

import heapq
import random
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .canonical import canonical_bytes, canonical_hash
from .ledger import (
    Block,
    ChainFileError,
    Transaction,
    append_block_file,
    apply_transaction,
    chain_file_name,
    make_genesis,
    new_uuid4,
    read_chain,
    replay_chain,
    seal_block,
    state_hash,
    tx_write,
    uuid4_from_rng,
    validate_chain,
    validate_transaction,
)

__all__ = [
    "NetworkError",
    "ConfigError",
    "SubmitRejected",
    "NetworkTimeout",
    "LatencyModel",
    "NetworkConfig",
    "Network",
    "ScenarioResult",
    "run_scenario",
    "load_scenario_steps",
    "dump_scenario_steps",
    "SIM_EPOCH_MS",
]

# Logical epoch for simulated timestamps: fixed so replays are stable.
SIM_EPOCH_MS = 1_700_000_000_000

ORDERER_ID = "orderer"
GATEWAY_ID = "gateway"


class NetworkError(Exception):
    pass


class ConfigError(NetworkError):
    pass


class SubmitRejected(NetworkError):
    def __init__(self, reason: str, violations: Optional[list[str]] = None):
        super().__init__(reason)
        self.reason = reason
        self.violations = violations or []


class NetworkTimeout(NetworkError):
    pass


@dataclass(frozen=True)
class LatencyModel:
    """Per-link delay: a fixed value or a uniform integer-ms range."""

    kind: str = "fixed"  # "fixed" | "uniform"
    fixed_ms: int = 0
    min_ms: int = 0
    max_ms: int = 0

    def draw_us(self, rng: random.Random) -> int:
        if self.kind == "fixed":
            return self.fixed_ms * 1000
        if self.kind == "uniform":
            return rng.randint(self.min_ms * 1000, self.max_ms * 1000)
        raise ConfigError(f"unknown latency kind {self.kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "fixedMs": self.fixed_ms}
        return {"kind": "uniform", "minMs": self.min_ms, "maxMs": self.max_ms}


@dataclass(frozen=True)
class NetworkConfig:
    """Defaults reproduce the smallest sample network: one peer, quorum 1."""

    peer_count: int = 1
    quorum: Optional[int] = None  # None -> majority
    max_block_txs: int = 10
    block_timeout_ms: int = 250
    latency: LatencyModel = field(default_factory=LatencyModel)
    drop_probability: float = 0.0
    retry_budget: int = 25
    retry_interval_ms: int = 50
    endorse_timeout_ms: int = 100
    seed: int = 0

    def effective_quorum(self) -> int:
        return self.quorum if self.quorum is not None else self.peer_count // 2 + 1

    def validate(self) -> None:
        if self.peer_count < 1:
            raise ConfigError("peer_count must be >= 1")
        k = self.effective_quorum()
        if not 1 <= k <= self.peer_count:
            raise ConfigError(f"quorum {k} outside 1..{self.peer_count}")
        if self.max_block_txs < 1:
            raise ConfigError("max_block_txs must be >= 1")
        if self.block_timeout_ms < 1:
            raise ConfigError("block_timeout_ms must be >= 1")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ConfigError("drop_probability outside [0,1]")

    def to_dict(self) -> dict:
        return {
            "peerCount": self.peer_count,
            "quorum": self.effective_quorum(),
            "maxBlockTxs": self.max_block_txs,
            "blockTimeoutMs": self.block_timeout_ms,
            "latency": self.latency.to_dict(),
            "dropPerMille": int(round(self.drop_probability * 1000)),
            "seed": self.seed,
        }


class Simulator:
    """Event heap + clock + the one PRNG every random decision comes from."""

    def __init__(self, seed: int):
        self.now_us = 0
        self.rng = random.Random(seed)
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self.partitioned: set[str] = set()
        self.dropped_messages = 0

    def schedule(self, delay_us: int, fn: Callable[[], None]) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (self.now_us + delay_us, self._seq, fn))

    def _pop(self) -> None:
        at_us, _, fn = heapq.heappop(self._heap)
        self.now_us = max(self.now_us, at_us)
        fn()

    def run_until_idle(self) -> None:
        while self._heap:
            self._pop()

    def run_until(self, predicate: Callable[[], bool], max_us: Optional[int] = None) -> bool:
        limit = None if max_us is None else self.now_us + max_us
        while self._heap:
            if predicate():
                return True
            if limit is not None and self._heap[0][0] > limit:
                return False
            self._pop()
        return predicate()

    def advance_to(self, t_us: int) -> None:
        while self._heap and self._heap[0][0] <= t_us:
            self._pop()
        self.now_us = max(self.now_us, t_us)


class Transport:
    """Unicast with seeded latency and loss; partitions drop everything."""

    def __init__(self, sim: Simulator, config: NetworkConfig):
        self._sim = sim
        self._config = config
        self._nodes: dict[str, Callable[[str, dict], None]] = {}

    def register(self, node_id: str, handler: Callable[[str, dict], None]) -> None:
        self._nodes[node_id] = handler

    def send(self, src: str, dst: str, msg: dict) -> None:
        sim = self._sim
        if src in sim.partitioned or dst in sim.partitioned:
            sim.dropped_messages += 1
            return
        if self._config.drop_probability > 0.0:
            if sim.rng.random() < self._config.drop_probability:
                sim.dropped_messages += 1
                return
        delay = self._config.latency.draw_us(sim.rng)
        handler = self._nodes[dst]
        sim.schedule(delay, lambda: handler(src, msg))


class Recorder:
    """Global observer: transcript lines plus per-transaction commit state."""

    def __init__(self, peer_count: int):
        self.peer_count = peer_count
        self.lines: list[bytes] = []
        self.submits: dict[str, int] = {}  # tx_id -> submit time us
        self.accepted: set[str] = set()
        self.rejections: dict[str, str] = {}
        self.committed_by: dict[str, set[str]] = {}
        self.commit_latency_us: dict[str, int] = {}
        self.tx_block_height: dict[str, int] = {}
        self.alarms: list[tuple[str, str]] = []

    def emit(self, record: dict) -> None:
        self.lines.append(canonical_bytes(record))

    def on_submit(self, at_us: int, tx: Transaction) -> None:
        self.submits[tx.tx_id] = at_us
        self.emit({"event": "submit", "atUs": at_us, "txId": tx.tx_id, "kind": tx.kind})

    def on_accepted(self, at_us: int, tx_id: str) -> None:
        self.accepted.add(tx_id)
        self.emit({"event": "accepted", "atUs": at_us, "txId": tx_id})

    def on_rejected(self, at_us: int, tx_id: str, reason: str) -> None:
        self.rejections[tx_id] = reason
        self.emit({"event": "rejected", "atUs": at_us, "txId": tx_id, "reason": reason})

    def on_commit(self, at_us: int, peer_id: str, block: Block) -> None:
        self.emit(
            {
                "event": "commit",
                "atUs": at_us,
                "peer": peer_id,
                "height": block.height,
                "blockHash": block.block_hash,
                "txCount": len(block.transactions),
            }
        )
        for tx in block.transactions:
            self.tx_block_height.setdefault(tx.tx_id, block.height)
            seen = self.committed_by.setdefault(tx.tx_id, set())
            seen.add(peer_id)
            if len(seen) == self.peer_count and tx.tx_id in self.submits:
                latency = at_us - self.submits[tx.tx_id]
                self.commit_latency_us[tx.tx_id] = latency
                self.emit(
                    {
                        "event": "tx-committed-all",
                        "atUs": at_us,
                        "txId": tx.tx_id,
                        "latencyUs": latency,
                    }
                )

    def on_alarm(self, at_us: int, peer_id: str, reason: str) -> None:
        self.alarms.append((peer_id, reason))
        self.emit({"event": "alarm", "atUs": at_us, "peer": peer_id, "reason": reason})

    def resolved(self, tx_id: str) -> bool:
        if tx_id in self.rejections:
            return True
        return len(self.committed_by.get(tx_id, ())) == self.peer_count


class PeerNode:
    """Holds a full chain copy and its replayed state; commits in order."""

    def __init__(
        self,
        peer_id: str,
        transport: Transport,
        sim: Simulator,
        recorder: Recorder,
        chain_path: Optional[Path] = None,
        initial_chain: Optional[list[Block]] = None,
    ):
        self.peer_id = peer_id
        self._transport = transport
        self._sim = sim
        self._recorder = recorder
        self._chain_path = chain_path
        self.chain = list(initial_chain) if initial_chain else [make_genesis()]
        self.state = replay_chain(self.chain)
        self._pending: dict[int, Block] = {}
        transport.register(peer_id, self.on_message)

    def on_message(self, src: str, msg: dict) -> None:
        if msg["type"] == "endorse-req":
            self._endorse(src, msg["tx"])
        elif msg["type"] == "block-deliver":
            self._deliver(src, msg["block"])

    def _endorse(self, src: str, tx: Transaction) -> None:
        violations = validate_transaction(tx)
        if violations:
            self._transport.send(
                self.peer_id,
                src,
                {"type": "endorse-reject", "txId": tx.tx_id, "reasons": violations},
            )
            return
        write = tx_write(self.state, tx)
        if write is None:
            self._transport.send(
                self.peer_id,
                src,
                {
                    "type": "endorse-reject",
                    "txId": tx.tx_id,
                    "reasons": ["transaction not applicable to current state"],
                },
            )
            return
        key, value = write
        result_hash = canonical_hash({"key": key, "value": value})
        self._transport.send(
            self.peer_id,
            src,
            {
                "type": "endorse-ok",
                "txId": tx.tx_id,
                "peerId": self.peer_id,
                "resultHash": result_hash,
            },
        )

    def _deliver(self, src: str, block: Block) -> None:
        tip = self.chain[-1]
        if block.height <= tip.height:
            # Duplicate delivery; re-ack so the orderer stops retrying.
            self._ack(block.height)
            return
        if block.height > tip.height + 1:
            self._pending[block.height] = block
            return
        self._commit_next(block)
        # A gap may have been plugged; drain anything now in order.
        while self.chain[-1].height + 1 in self._pending:
            self._commit_next(self._pending.pop(self.chain[-1].height + 1))

    def _commit_next(self, block: Block) -> None:
        tip = self.chain[-1]
        expected_hash = seal_block(
            block.height, block.prev_hash, block.timestamp_ms, block.transactions
        ).block_hash
        if block.prev_hash != tip.block_hash or block.block_hash != expected_hash:
            self._recorder.on_alarm(
                self._sim.now_us,
                self.peer_id,
                f"divergent block at height {block.height}",
            )
            return
        for tx in block.transactions:
            self.state = apply_transaction(self.state, tx)
        self.chain.append(block)
        if self._chain_path is not None:
            append_block_file(self._chain_path, block)
        self._recorder.on_commit(self._sim.now_us, self.peer_id, block)
        self._ack(block.height)

    def _ack(self, height: int) -> None:
        self._transport.send(
            self.peer_id,
            ORDERER_ID,
            {"type": "deliver-ack", "peerId": self.peer_id, "height": height},
        )

    def state_hash(self) -> str:
        return state_hash(self.state)


class OrdererNode:
    """Sequences endorsed transactions into blocks; retries delivery until acked."""

    def __init__(
        self,
        transport: Transport,
        sim: Simulator,
        config: NetworkConfig,
        peer_ids: list[str],
        tip: Optional[Block] = None,
    ):
        self._transport = transport
        self._sim = sim
        self._config = config
        self._peer_ids = list(peer_ids)
        tip = tip if tip is not None else make_genesis()
        self._tip_hash = tip.block_hash
        self._next_height = tip.height + 1
        self._pending: list[tuple[Transaction, int]] = []
        self._seen: set[str] = set()
        self._emitted: dict[int, Block] = {}
        self._unacked: dict[tuple[str, int], int] = {}  # (peer, height) -> retries left
        self._timer_pending = False
        transport.register(ORDERER_ID, self.on_message)

    def on_message(self, src: str, msg: dict) -> None:
        if msg["type"] == "order-submit":
            self._enqueue(src, msg["tx"])
        elif msg["type"] == "deliver-ack":
            self._unacked.pop((msg["peerId"], msg["height"]), None)

    def _enqueue(self, src: str, tx: Transaction) -> None:
        # Ack first so gateway retries stop even for duplicates.
        self._transport.send(ORDERER_ID, src, {"type": "order-ack", "txId": tx.tx_id})
        if tx.tx_id in self._seen:
            return
        self._seen.add(tx.tx_id)
        self._pending.append((tx, self._sim.now_us))
        if len(self._pending) >= self._config.max_block_txs:
            self._cut()
        elif not self._timer_pending:
            self._schedule_timer(self._pending[0][1])

    def _schedule_timer(self, oldest_us: int) -> None:
        self._timer_pending = True
        due = oldest_us + self._config.block_timeout_ms * 1000
        self._sim.schedule(max(0, due - self._sim.now_us), self._on_timer)

    def _on_timer(self) -> None:
        self._timer_pending = False
        if not self._pending:
            return
        oldest_us = self._pending[0][1]
        age_us = self._sim.now_us - oldest_us
        if age_us >= self._config.block_timeout_ms * 1000:
            self._cut()
        if self._pending and not self._timer_pending:
            self._schedule_timer(self._pending[0][1])

    def _cut(self) -> None:
        while len(self._pending) >= self._config.max_block_txs:
            self._emit(self._config.max_block_txs)
        if self._pending:
            oldest_us = self._pending[0][1]
            if self._sim.now_us - oldest_us >= self._config.block_timeout_ms * 1000:
                self._emit(len(self._pending))

    def _emit(self, count: int) -> None:
        batch = [tx for tx, _ in self._pending[:count]]
        del self._pending[:count]
        block = seal_block(
            self._next_height,
            self._tip_hash,
            SIM_EPOCH_MS + self._sim.now_us // 1000,
            tuple(batch),
        )
        self._emitted[block.height] = block
        self._tip_hash = block.block_hash
        self._next_height += 1
        for peer_id in self._peer_ids:
            self._unacked[(peer_id, block.height)] = self._config.retry_budget
            self._send_block(peer_id, block.height)

    def _send_block(self, peer_id: str, height: int) -> None:
        block = self._emitted[height]
        self._transport.send(ORDERER_ID, peer_id, {"type": "block-deliver", "block": block})
        self._sim.schedule(
            self._config.retry_interval_ms * 1000,
            lambda: self._retry(peer_id, height),
        )

    def _retry(self, peer_id: str, height: int) -> None:
        retries = self._unacked.get((peer_id, height))
        if retries is None:
            return
        if retries <= 0:
            del self._unacked[(peer_id, height)]
            return
        self._unacked[(peer_id, height)] = retries - 1
        self._send_block(peer_id, height)


class _SubmitState:
    __slots__ = (
        "tx",
        "submit_us",
        "phase",
        "endorse_ok",
        "endorse_reject",
        "endorse_retries",
        "order_retries",
    )

    def __init__(self, tx: Transaction, submit_us: int, config: NetworkConfig):
        self.tx = tx
        self.submit_us = submit_us
        self.phase = "endorsing"
        self.endorse_ok: dict[str, str] = {}
        self.endorse_reject: dict[str, list[str]] = {}
        self.endorse_retries = config.retry_budget
        self.order_retries = config.retry_budget


class GatewayNode:
    """The single submit path: collects endorsements, then hands to the orderer."""

    def __init__(
        self,
        transport: Transport,
        sim: Simulator,
        config: NetworkConfig,
        recorder: Recorder,
        peer_ids: list[str],
    ):
        self._transport = transport
        self._sim = sim
        self._config = config
        self._recorder = recorder
        self._peer_ids = list(peer_ids)
        self._submits: dict[str, _SubmitState] = {}
        transport.register(GATEWAY_ID, self.on_message)

    def start_submit(self, tx: Transaction) -> None:
        state = _SubmitState(tx, self._sim.now_us, self._config)
        self._submits[tx.tx_id] = state
        self._recorder.on_submit(self._sim.now_us, tx)
        self._broadcast_endorse(state, self._peer_ids)

    def _broadcast_endorse(self, state: _SubmitState, targets: list[str]) -> None:
        for peer_id in targets:
            self._transport.send(
                GATEWAY_ID, peer_id, {"type": "endorse-req", "tx": state.tx}
            )
        self._sim.schedule(
            self._config.endorse_timeout_ms * 1000,
            lambda: self._endorse_timeout(state.tx.tx_id),
        )

    def on_message(self, src: str, msg: dict) -> None:
        state = self._submits.get(msg.get("txId", ""))
        if state is None:
            return
        if msg["type"] == "endorse-ok" and state.phase == "endorsing":
            state.endorse_ok[msg["peerId"]] = msg["resultHash"]
            self._check_quorum(state)
        elif msg["type"] == "endorse-reject" and state.phase == "endorsing":
            state.endorse_reject[src] = msg["reasons"]
            n, k = self._config.peer_count, self._config.effective_quorum()
            if len(state.endorse_reject) > n - k:
                self._reject(state, "validation-rejected: " + "; ".join(msg["reasons"]))
        elif msg["type"] == "order-ack" and state.phase == "ordering":
            state.phase = "ordered"
            self._recorder.on_accepted(self._sim.now_us, state.tx.tx_id)

    def _check_quorum(self, state: _SubmitState) -> None:
        k = self._config.effective_quorum()
        tally: dict[str, int] = {}
        for result_hash in state.endorse_ok.values():
            tally[result_hash] = tally.get(result_hash, 0) + 1
        if max(tally.values(), default=0) >= k:
            state.phase = "ordering"
            self._send_order(state)
            return
        # All answered yet no hash reached quorum: deterministic replicas
        # disagreeing is a bug worth failing loudly on.
        if len(state.endorse_ok) + len(state.endorse_reject) == self._config.peer_count:
            if len(tally) > 1:
                self._reject(state, "endorsement-mismatch")

    def _send_order(self, state: _SubmitState) -> None:
        self._transport.send(GATEWAY_ID, ORDERER_ID, {"type": "order-submit", "tx": state.tx})
        self._sim.schedule(
            self._config.retry_interval_ms * 1000,
            lambda: self._order_timeout(state.tx.tx_id),
        )

    def _endorse_timeout(self, tx_id: str) -> None:
        state = self._submits.get(tx_id)
        if state is None or state.phase != "endorsing":
            return
        responded = set(state.endorse_ok) | set(state.endorse_reject)
        silent = [p for p in self._peer_ids if p not in responded]
        if state.endorse_retries > 0 and silent:
            state.endorse_retries -= 1
            self._broadcast_endorse(state, silent)
            return
        tally: set[str] = set(state.endorse_ok.values())
        if len(tally) > 1:
            self._reject(state, "endorsement-mismatch")
        else:
            self._reject(state, "quorum-timeout")

    def _order_timeout(self, tx_id: str) -> None:
        state = self._submits.get(tx_id)
        if state is None or state.phase != "ordering":
            return
        if state.order_retries > 0:
            state.order_retries -= 1
            self._send_order(state)
        else:
            self._reject(state, "order-timeout")

    def _reject(self, state: _SubmitState, reason: str) -> None:
        if state.phase == "rejected":
            return
        state.phase = "rejected"
        self._recorder.on_rejected(self._sim.now_us, state.tx.tx_id, reason)


@dataclass(frozen=True)
class CommitReceipt:
    tx_id: str
    block_height: int
    latency_us: int


class Network:
    """Facade owning the simulated nodes; one instance per deployment.

    ``submit_and_commit`` is synchronous: it drives the simulation until the
    transaction is committed on every peer (or rejected), which is what lets
    API handlers answer only after full replication.
    """

    def __init__(self, config: NetworkConfig, data_dir: Optional[Path] = None):
        config.validate()
        self.config = config
        self._lock = threading.Lock()
        self.sim = Simulator(config.seed)
        self.recorder = Recorder(config.peer_count)
        self._transport = Transport(self.sim, config)
        self.peer_ids = [f"peer-{i}" for i in range(config.peer_count)]
        self.data_dir = Path(data_dir) if data_dir is not None else None
        initial_chain = [make_genesis()]
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            initial_chain = self._reconcile_chain_files()
        self.peers = [
            PeerNode(
                peer_id,
                self._transport,
                self.sim,
                self.recorder,
                chain_path=(
                    self.data_dir / chain_file_name(peer_id)
                    if self.data_dir is not None
                    else None
                ),
                initial_chain=initial_chain,
            )
            for peer_id in self.peer_ids
        ]
        self.orderer = OrdererNode(
            self._transport, self.sim, config, self.peer_ids, tip=initial_chain[-1]
        )
        self.gateway = GatewayNode(
            self._transport, self.sim, config, self.recorder, self.peer_ids
        )
        self.recorder.emit({"event": "config", **config.to_dict()})

    def _reconcile_chain_files(self) -> list[Block]:
        """Adopt the longest valid persisted chain and bring every peer file
        up to it (append-only), so a restarted deployment resumes converged."""
        adopted: list[Block] = [make_genesis()]
        existing: dict[str, list[Block]] = {}
        for peer_id in self.peer_ids:
            path = self.data_dir / chain_file_name(peer_id)
            if path.exists() and path.stat().st_size > 0:
                chain = read_chain(path)
                problems = validate_chain(chain)
                if problems:
                    raise ChainFileError(f"{path.name}: {problems[0]}")
                existing[peer_id] = chain
                if len(chain) > len(adopted):
                    adopted = chain
        for peer_id in self.peer_ids:
            path = self.data_dir / chain_file_name(peer_id)
            have = existing.get(peer_id, [])
            for i, block in enumerate(have):
                if block.block_hash != adopted[i].block_hash:
                    raise ChainFileError(f"{path.name} diverges from peers at height {i}")
            for block in adopted[len(have):]:
                append_block_file(path, block)
        return adopted

    # -- synchronous path used by the API gateway --------------------------

    def submit_and_commit(
        self,
        kind: str,
        payload: dict,
        submitter: str,
        *,
        timestamp_ms: Optional[int] = None,
        max_wait_ms: int = 60_000,
    ) -> CommitReceipt:
        with self._lock:
            tx = Transaction(
                tx_id=new_uuid4(),
                kind=kind,
                payload=payload,
                submitter=submitter,
                timestamp_ms=(
                    timestamp_ms
                    if timestamp_ms is not None
                    else SIM_EPOCH_MS + self.sim.now_us // 1000
                ),
            )
            self.gateway.start_submit(tx)
            done = self.sim.run_until(
                lambda: self.recorder.resolved(tx.tx_id), max_us=max_wait_ms * 1000
            )
            reason = self.recorder.rejections.get(tx.tx_id)
            if reason is not None:
                raise SubmitRejected(reason)
            if not done:
                raise NetworkTimeout(f"transaction {tx.tx_id} not committed in time")
            return CommitReceipt(
                tx_id=tx.tx_id,
                block_height=self.recorder.tx_block_height[tx.tx_id],
                latency_us=self.recorder.commit_latency_us[tx.tx_id],
            )

    # -- scenario-driver primitives ----------------------------------------

    def inject_submit(self, kind: str, payload: dict, submitter: str) -> str:
        """Non-blocking submit with ids minted from the simulation PRNG."""
        tx = Transaction(
            tx_id=uuid4_from_rng(self.sim.rng),
            kind=kind,
            payload=payload,
            submitter=submitter,
            timestamp_ms=SIM_EPOCH_MS + self.sim.now_us // 1000,
        )
        self.gateway.start_submit(tx)
        return tx.tx_id

    def partition(self, peer_id: str) -> None:
        self.sim.partitioned.add(peer_id)
        self.recorder.emit(
            {"event": "partition", "atUs": self.sim.now_us, "peer": peer_id}
        )

    def heal(self, peer_id: str) -> None:
        self.sim.partitioned.discard(peer_id)
        self.recorder.emit({"event": "heal", "atUs": self.sim.now_us, "peer": peer_id})

    def advance_ms(self, ms: int) -> None:
        self.sim.advance_to(self.sim.now_us + ms * 1000)

    def drain(self) -> None:
        self.sim.run_until_idle()

    # -- queries ------------------------------------------------------------

    def world_state(self) -> dict:
        return dict(self.peers[0].state)

    def query(self, key: str) -> Optional[dict]:
        value = self.peers[0].state.get(key)
        return dict(value) if value is not None else None

    def chain_blocks(self) -> list[Block]:
        return list(self.peers[0].chain)

    def state_hashes(self) -> dict[str, str]:
        return {peer.peer_id: peer.state_hash() for peer in self.peers}


# ---------------------------------------------------------------------------
# Scripted scenarios
# ---------------------------------------------------------------------------

@dataclass
class ScenarioResult:
    transcript: bytes
    state_hashes: dict[str, str]
    commit_latency_us: dict[str, int]
    accepted: set[str]
    rejections: dict[str, str]
    chain_heights: dict[str, int]
    chain_paths: dict[str, Path]


def run_scenario(
    config: NetworkConfig,
    steps: list[dict],
    *,
    data_dir: Optional[Path] = None,
) -> ScenarioResult:
    """Execute workload steps, drain the network, report the outcome.

    Steps: {"step":"submit","kind":..,"payload":..,"submitter":..},
    {"step":"partition","peer":..}, {"step":"heal","peer":..},
    {"step":"advance","ms":..}. Deterministic given (config, steps).
    """
    net = Network(config, data_dir=data_dir)
    for step in steps:
        op = step["step"]
        if op == "submit":
            net.inject_submit(step["kind"], step["payload"], step["submitter"])
        elif op == "partition":
            net.partition(step["peer"])
        elif op == "heal":
            net.heal(step["peer"])
        elif op == "advance":
            net.advance_ms(step["ms"])
        else:
            raise ConfigError(f"unknown scenario step {op!r}")
    # Heal everything so retries can finish, then run to quiescence.
    for peer_id in list(net.sim.partitioned):
        net.heal(peer_id)
    net.drain()
    hashes = net.state_hashes()
    net.recorder.emit(
        {
            "event": "final",
            "atUs": net.sim.now_us,
            "stateHashes": hashes,
            "heights": {p.peer_id: p.chain[-1].height for p in net.peers},
            "droppedMessages": net.sim.dropped_messages,
        }
    )
    chain_paths = {}
    if net.data_dir is not None:
        chain_paths = {
            peer_id: net.data_dir / chain_file_name(peer_id) for peer_id in net.peer_ids
        }
    return ScenarioResult(
        transcript=b"\n".join(net.recorder.lines) + b"\n",
        state_hashes=hashes,
        commit_latency_us=dict(net.recorder.commit_latency_us),
        accepted=set(net.recorder.accepted),
        rejections=dict(net.recorder.rejections),
        chain_heights={p.peer_id: p.chain[-1].height for p in net.peers},
        chain_paths=chain_paths,
    )


def load_scenario_steps(path: Path) -> list[dict]:
    import json

    steps = []
    with open(path, "rb") as fh:
        for line in fh:
            line = line.strip()
            if line:
                steps.append(json.loads(line.decode("utf-8")))
    return steps


def dump_scenario_steps(path: Path, steps: list[dict]) -> None:
    with open(path, "wb") as fh:
        for step in steps:
            fh.write(canonical_bytes(step) + b"\n")
