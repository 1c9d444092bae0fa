"""Distributed referee: one isolated process per player, JSON lines over TCP.

Wire protocol (version 1), one UTF-8 JSON object per line:

* player -> referee: ``{"type": "hello", "party": 0, "protocol_version": 1}``
* referee -> player: ``{"type": "dealt", "tape": "<base64 bits>"}``
* referee -> player: ``{"type": "question", "round": r,
  "observables": [{"slot": 3, "kind": "x"}, ...]}``
* player -> referee: ``{"type": "answer", "round": r, "values": [1, -1]}``
* referee -> player: ``{"type": "end", "reason": "complete"}``

Unknown fields are ignored; unknown message types are protocol errors. A
player only ever receives its own questions; shared randomness (hidden
bits, or presampled measurement outcomes standing in for entanglement)
is dealt once, before round 1, never during play.

There is no entangled hardware here: for the quantum strategy the
referee presamples every round's joint outcome from the exact
distribution and deals each player its own values as a tape. That
preserves the joint statistics exactly but is of course a trusted-dealer
simulation, not physics.
"""

from __future__ import annotations

import base64
import json
import socket
from dataclasses import dataclass
from typing import BinaryIO, Sequence

from .classical import DeterministicStrategy, HiddenVariableModel
from .games import NonlocalGame, game_by_name
from .trials import (
    QuantumStrategy,
    RoundPlan,
    Strategy,
    TrialLog,
    _record_for,
    presample,
    resolve_strategy,
)

PROTOCOL_VERSION = 1
_MAX_LINE = 1 << 20


class ProtocolError(Exception):
    """A peer broke the wire contract; ``party`` names the offender."""

    def __init__(self, message: str, party: int | None = None):
        prefix = f"party {party}: " if party is not None else ""
        super().__init__(prefix + message)
        self.party = party


class PlayerDisconnected(Exception):
    def __init__(self, party: int):
        super().__init__(f"party {party} disconnected")
        self.party = party


# ---------------------------------------------------------------------------
# framing and tapes
# ---------------------------------------------------------------------------


def encode_message(message: dict) -> bytes:
    return json.dumps(message, separators=(",", ":")).encode() + b"\n"


def decode_message(line: bytes) -> dict:
    try:
        obj = json.loads(line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable message: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise ProtocolError(f"message is not an object with a type: {obj!r}")
    return obj


def _send(stream: BinaryIO, message: dict, transcript: list[bytes] | None = None) -> None:
    data = encode_message(message)
    if transcript is not None:
        transcript.append(data)
    stream.write(data)
    stream.flush()


def _recv(stream: BinaryIO) -> dict | None:
    line = stream.readline(_MAX_LINE)
    if not line:
        return None
    return decode_message(line)


def encode_tape(values: Sequence[int]) -> str:
    """Pack a +-1 sequence into base64; bit 1 encodes the value -1."""
    bits = bytearray((len(values) + 7) // 8)
    for i, v in enumerate(values):
        if v == -1:
            bits[i // 8] |= 1 << (i % 8)
        elif v != +1:
            raise ValueError(f"tape values must be +-1, got {v}")
    return base64.b64encode(bytes(bits)).decode()


def decode_tape(text: str, length: int) -> tuple[int, ...]:
    raw = base64.b64decode(text.encode())
    if len(raw) < (length + 7) // 8:
        raise ProtocolError(f"tape too short for {length} values")
    return tuple(
        -1 if raw[i // 8] & (1 << (i % 8)) else +1 for i in range(length)
    )


# ---------------------------------------------------------------------------
# player-side strategies
# ---------------------------------------------------------------------------


@dataclass
class PartyStrategy:
    """What one player process needs: how to answer its own questions."""

    party: int

    def tape_length(self, rounds: int) -> int:
        return 0

    def set_tape(self, values: tuple[int, ...]) -> None:
        pass

    def answer(self, round_index: int, observables: list[tuple[int, str]]) -> list[int]:
        raise NotImplementedError


@dataclass
class TablePlayer(PartyStrategy):
    """Deterministic strategy: look the question id up in a table."""

    table: dict[str, tuple[int, ...]] = None  # type: ignore[assignment]

    def answer(self, round_index: int, observables: list[tuple[int, str]]) -> list[int]:
        qid = "".join(f"{kind}{slot}" for slot, kind in observables)
        return list(self.table[qid])


@dataclass
class ModelPlayer(PartyStrategy):
    """Hidden-variable strategy: per-round bits come off the dealt tape."""

    hidden_bits: int = 0
    responder: object = None
    _tape: tuple[int, ...] = ()

    def tape_length(self, rounds: int) -> int:
        return rounds * self.hidden_bits

    def set_tape(self, values: tuple[int, ...]) -> None:
        self._tape = values

    def answer(self, round_index: int, observables: list[tuple[int, str]]) -> list[int]:
        lo = round_index * self.hidden_bits
        bits = self._tape[lo : lo + self.hidden_bits]
        if len(bits) != self.hidden_bits:
            raise ProtocolError(f"tape exhausted at round {round_index}", self.party)
        qid = "".join(f"{kind}{slot}" for slot, kind in observables)
        return list(self.responder(qid, tuple(bits)))


@dataclass
class TapePlayer(PartyStrategy):
    """Quantum stand-in: answer with dealer-presampled outcome values.

    The tape holds one value per owned slot per round; the player answers
    whichever of its slots the question asks for.
    """

    slots: tuple[int, ...] = ()
    _tape: tuple[int, ...] = ()

    def tape_length(self, rounds: int) -> int:
        return rounds * len(self.slots)

    def set_tape(self, values: tuple[int, ...]) -> None:
        self._tape = values

    def answer(self, round_index: int, observables: list[tuple[int, str]]) -> list[int]:
        lo = round_index * len(self.slots)
        row = self._tape[lo : lo + len(self.slots)]
        if len(row) != len(self.slots):
            raise ProtocolError(f"tape exhausted at round {round_index}", self.party)
        values = []
        for slot, _kind in observables:
            values.append(row[self.slots.index(slot)])
        return values


def build_party_strategy(
    game: NonlocalGame, strategy: Strategy, party: int
) -> PartyStrategy:
    """Split a whole-game strategy into one player's local behaviour."""
    owned = tuple(q for q, p in game.qubit_ownership if p == party)
    if isinstance(strategy, QuantumStrategy):
        return TapePlayer(party=party, slots=owned)
    if isinstance(strategy, DeterministicStrategy):
        return TablePlayer(party=party, table=dict(strategy.answers[party]))
    if isinstance(strategy, HiddenVariableModel):
        return ModelPlayer(
            party=party,
            hidden_bits=strategy.hidden_bits,
            responder=strategy.responders[party],
        )
    raise TypeError(f"unsupported strategy type {type(strategy).__name__}")


@dataclass(frozen=True)
class PlayerSpec:
    """Picklable player description: reconstruct the strategy by name."""

    game: str
    strategy: str
    party: int

    def build(self) -> PartyStrategy:
        game = game_by_name(self.game)
        return build_party_strategy(game, resolve_strategy(game, self.strategy), self.party)


# ---------------------------------------------------------------------------
# referee
# ---------------------------------------------------------------------------


def _party_tapes(
    game: NonlocalGame, strategy: Strategy, plans: list[RoundPlan]
) -> list[tuple[int, ...]]:
    """Per-party dealt tapes reproducing exactly the presampled plan."""
    if isinstance(strategy, HiddenVariableModel):
        tape: list[int] = []
        for plan in plans:
            assert plan.hidden_bits is not None
            tape.extend(plan.hidden_bits)
        return [tuple(tape)] * game.parties
    if isinstance(strategy, QuantumStrategy):
        tapes: list[list[int]] = [[] for _ in range(game.parties)]
        owned = [
            tuple(q for q, p in game.qubit_ownership if p == party)
            for party in range(game.parties)
        ]
        for plan in plans:
            for party in range(game.parties):
                question = plan.context.questions[party]
                by_slot = dict(zip((o.qubit for o in question.measured), plan.answers[party]))
                for slot in owned[party]:
                    tapes[party].append(by_slot.get(slot, +1))
        return [tuple(t) for t in tapes]
    return [()] * game.parties


class RefereeServer:
    """Serves one session of a game to one connected player per party."""

    def __init__(
        self,
        game: NonlocalGame,
        rounds: int,
        seed: int,
        strategy: Strategy,
        *,
        transcript: dict[int, list[bytes]] | None = None,
    ):
        self.game = game
        self.rounds = rounds
        self.seed = seed
        self.strategy = strategy
        self.transcript = transcript
        self._listener: socket.socket | None = None

    def bind(self, address: tuple[str, int]) -> tuple[str, int]:
        self._listener = socket.create_server(address, backlog=self.game.parties)
        return self._listener.getsockname()

    def serve(self) -> TrialLog:
        """Run the session; returns the log (flagged incomplete on abort)."""
        if self._listener is None:
            raise RuntimeError("bind() must be called before serve()")
        plans = presample(self.game, self.strategy, self.rounds, self.seed)
        tapes = _party_tapes(self.game, self.strategy, plans)
        log = TrialLog(
            game=self.game.name, strategy=self.strategy.name, seed=self.seed
        )
        streams: dict[int, BinaryIO] = {}
        conns: list[socket.socket] = []
        try:
            with self._listener:
                while len(streams) < self.game.parties:
                    conn, _addr = self._listener.accept()
                    stream = conn.makefile("rwb")
                    hello = _recv(stream)
                    if hello is None:
                        # a probe that never said hello is not a player
                        conn.close()
                        continue
                    conns.append(conn)
                    if hello["type"] != "hello":
                        raise ProtocolError(f"expected hello, got {hello['type']!r}")
                    party = hello.get("party")
                    if not isinstance(party, int) or not 0 <= party < self.game.parties:
                        raise ProtocolError(f"bad party index {party!r}")
                    if hello.get("protocol_version") != PROTOCOL_VERSION:
                        raise ProtocolError(
                            f"unsupported protocol version {hello.get('protocol_version')!r}",
                            party,
                        )
                    if party in streams:
                        raise ProtocolError("duplicate hello", party)
                    streams[party] = stream

            for party, stream in streams.items():
                outbox = None if self.transcript is None else self.transcript.setdefault(party, [])
                _send(stream, {"type": "dealt", "tape": encode_tape(tapes[party])}, outbox)

            for r, plan in enumerate(plans):
                for party in range(self.game.parties):
                    question = plan.context.questions[party]
                    outbox = None if self.transcript is None else self.transcript[party]
                    _send(
                        streams[party],
                        {
                            "type": "question",
                            "round": r,
                            "observables": [
                                {"slot": obs.qubit, "kind": obs.kind.value}
                                for obs in question.measured
                            ],
                        },
                        outbox,
                    )
                answers: list[tuple[int, ...]] = []
                for party in range(self.game.parties):
                    question = plan.context.questions[party]
                    try:
                        message = _recv(streams[party])
                    except ProtocolError as exc:
                        raise ProtocolError(str(exc), party) from None
                    if message is None:
                        raise PlayerDisconnected(party)
                    if message["type"] != "answer":
                        raise ProtocolError(
                            f"expected answer, got {message['type']!r}", party
                        )
                    if message.get("round") != r:
                        raise ProtocolError(
                            f"answered round {message.get('round')!r}, asked {r}", party
                        )
                    values = message.get("values")
                    if (
                        not isinstance(values, list)
                        or len(values) != question.answer_arity
                        or any(v not in (1, -1) for v in values)
                    ):
                        raise ProtocolError(f"malformed answer values {values!r}", party)
                    answers.append(tuple(values))
                log.records.append(_record_for(self.game, r, plan.context, answers))

            for party, stream in streams.items():
                outbox = None if self.transcript is None else self.transcript[party]
                _send(stream, {"type": "end", "reason": "complete"}, outbox)
            return log
        except PlayerDisconnected as exc:
            log.complete = False
            log.abort_reason = str(exc)
            self._end_all(streams, f"abort: {exc}")
            return log
        finally:
            for conn in conns:
                try:
                    conn.close()
                except OSError:
                    pass

    def _end_all(self, streams: dict[int, BinaryIO], reason: str) -> None:
        for party, stream in streams.items():
            outbox = None if self.transcript is None else self.transcript.get(party)
            try:
                _send(stream, {"type": "end", "reason": reason}, outbox)
            except (OSError, ValueError):
                pass


def serve_referee(
    game: NonlocalGame,
    address: tuple[str, int],
    rounds: int,
    seed: int,
    strategy: Strategy,
    *,
    transcript: dict[int, list[bytes]] | None = None,
) -> TrialLog:
    """Bind, wait for one player per party, run the session, return the log."""
    server = RefereeServer(game, rounds, seed, strategy, transcript=transcript)
    server.bind(address)
    return server.serve()


def _player_entry(address: tuple[str, int], spec: "PlayerSpec | PartyStrategy") -> None:
    import sys

    sys.exit(run_player(address, spec))


def run_local_session(
    game: NonlocalGame,
    strategy: Strategy,
    rounds: int,
    seed: int,
    *,
    transcript: dict[int, list[bytes]] | None = None,
    player_specs: Sequence["PlayerSpec | PartyStrategy"] | None = None,
) -> TrialLog:
    """Run the referee plus one OS process per player on localhost.

    ``player_specs`` defaults to splitting ``strategy`` per party. The
    referee runs in the calling process; players are joined before the
    log is returned and a nonzero player exit raises ProtocolError.
    """
    import multiprocessing

    if player_specs is None:
        player_specs = [
            build_party_strategy(game, strategy, party)
            for party in range(game.parties)
        ]
    server = RefereeServer(game, rounds, seed, strategy, transcript=transcript)
    host, port = server.bind(("127.0.0.1", 0))[:2]
    ctx = multiprocessing.get_context()
    processes = [
        ctx.Process(target=_player_entry, args=((host, port), spec), daemon=True)
        for spec in player_specs
    ]
    for proc in processes:
        proc.start()
    try:
        log = server.serve()
    finally:
        for proc in processes:
            proc.join(timeout=30)
    bad = [i for i, proc in enumerate(processes) if proc.exitcode != 0]
    if bad:
        raise ProtocolError(f"player process(es) {bad} exited nonzero")
    return log


# ---------------------------------------------------------------------------
# player
# ---------------------------------------------------------------------------


def run_player(
    address: tuple[str, int], strategy: PlayerSpec | PartyStrategy
) -> int:
    """Connect, answer every question until the end message; 0 on success.

    Returns 4 on protocol errors (and prints the reason to stderr), which
    matches the CLI exit-code convention.
    """
    import sys

    party_strategy = strategy.build() if isinstance(strategy, PlayerSpec) else strategy
    try:
        with socket.create_connection(address) as conn:
            stream = conn.makefile("rwb")
            _send(
                stream,
                {
                    "type": "hello",
                    "party": party_strategy.party,
                    "protocol_version": PROTOCOL_VERSION,
                },
            )
            while True:
                message = _recv(stream)
                if message is None:
                    raise ProtocolError("referee closed the connection mid-session")
                kind = message["type"]
                if kind == "dealt":
                    tape_text = message.get("tape", "")
                    # length is implied by use; decode lazily per round
                    raw = base64.b64decode(tape_text.encode())
                    values = tuple(
                        -1 if raw[i // 8] & (1 << (i % 8)) else +1
                        for i in range(len(raw) * 8)
                    )
                    party_strategy.set_tape(values)
                elif kind == "question":
                    observables = [
                        (int(o["slot"]), str(o["kind"]))
                        for o in message.get("observables", [])
                    ]
                    values = party_strategy.answer(int(message["round"]), observables)
                    _send(
                        stream,
                        {
                            "type": "answer",
                            "round": int(message["round"]),
                            "values": [int(v) for v in values],
                        },
                    )
                elif kind == "end":
                    return 0
                else:
                    raise ProtocolError(f"unknown message type {kind!r}")
    except ProtocolError as exc:
        print(f"player {party_strategy.party}: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"player {party_strategy.party}: transport error: {exc}", file=sys.stderr)
        return 4
