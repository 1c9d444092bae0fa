"""Trial execution and statistics for the in-process referee.

A trial run is fully determined by (game, strategy, rounds, seed): one
``numpy`` generator drives the per-round context choice and whatever
randomness the strategy needs, in a fixed order. The distributed referee
in ``netplay`` replays exactly the same plan, which is what makes the two
modes produce bit-identical logs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import quantum
from .classical import DeterministicStrategy, HiddenVariableModel, classical_value
from .games import Context, NonlocalGame, predicate_eval
from .quantum import Statevector, make_ghz, make_psi

LOG_FORMAT_VERSION = 1


@dataclass(frozen=True)
class QuantumStrategy:
    """Share an entangled state and measure whatever the referee asks."""

    state: Statevector
    name: str = "quantum"


Strategy = QuantumStrategy | DeterministicStrategy | HiddenVariableModel

#: canonical entangled state for each catalog game
_STATE_BUILDERS = {
    "cabello-restricted": make_psi,
    "cabello-extended": make_psi,
    "four-party": make_psi,
    "mermin-ghz": lambda: make_ghz(3),
}


def quantum_strategy(game: NonlocalGame) -> QuantumStrategy:
    """The catalog game's winning quantum strategy."""
    try:
        builder = _STATE_BUILDERS[game.name]
    except KeyError:
        raise KeyError(f"no canonical state known for game {game.name!r}") from None
    return QuantumStrategy(state=builder())


def resolve_strategy(game: NonlocalGame, name: str) -> Strategy:
    """Map a strategy name to a strategy object for the given game."""
    from .classical import automaton_model, lambda_mu_model

    if name == "quantum":
        return quantum_strategy(game)
    if name == "lambda-mu":
        if game.name != "cabello-restricted":
            raise KeyError("strategy lambda-mu is defined for cabello-restricted only")
        return lambda_mu_model()
    if name == "automaton":
        if game.name != "cabello-restricted":
            raise KeyError("strategy automaton is defined for cabello-restricted only")
        return automaton_model()
    if name == "best-classical":
        result = classical_value(game)
        best = result.optimal_strategies[0]
        return DeterministicStrategy(name="best-classical", answers=best.answers)
    raise KeyError(
        f"unknown strategy {name!r}; known: quantum, lambda-mu, automaton, best-classical"
    )


@dataclass(frozen=True)
class TrialRecord:
    round: int
    context_id: str
    questions: tuple[str, ...]
    answers: tuple[tuple[int, ...], ...]
    win: bool


@dataclass
class TrialLog:
    game: str
    strategy: str
    seed: int
    records: list[TrialRecord] = field(default_factory=list)
    complete: bool = True
    abort_reason: str | None = None

    def to_jsonl(self) -> str:
        header = {
            "type": "header",
            "version": LOG_FORMAT_VERSION,
            "game": self.game,
            "strategy": self.strategy,
            "seed": self.seed,
            "complete": self.complete,
        }
        if self.abort_reason is not None:
            header["abort_reason"] = self.abort_reason
        lines = [json.dumps(header)]
        for r in self.records:
            lines.append(
                json.dumps(
                    {
                        "type": "round",
                        "round": r.round,
                        "context": r.context_id,
                        "questions": list(r.questions),
                        "answers": [list(a) for a in r.answers],
                        "win": r.win,
                    }
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "TrialLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty trial log")
        header = json.loads(lines[0])
        if header.get("type") != "header":
            raise ValueError("trial log must start with a header record")
        log = cls(
            game=header["game"],
            strategy=header["strategy"],
            seed=header["seed"],
            complete=header.get("complete", True),
            abort_reason=header.get("abort_reason"),
        )
        for ln in lines[1:]:
            rec = json.loads(ln)
            log.records.append(
                TrialRecord(
                    round=rec["round"],
                    context_id=rec["context"],
                    questions=tuple(rec["questions"]),
                    answers=tuple(tuple(a) for a in rec["answers"]),
                    win=rec["win"],
                )
            )
        return log


@dataclass(frozen=True)
class RoundPlan:
    """Everything round r needs: the context, answers, and dealt bits."""

    context: Context
    answers: tuple[tuple[int, ...], ...]
    hidden_bits: tuple[int, ...] | None


def _validate_compat(game: NonlocalGame, strategy: Strategy) -> None:
    if isinstance(strategy, QuantumStrategy):
        if strategy.state.num_qubits != game.num_qubits:
            raise ValueError(
                f"state has {strategy.state.num_qubits} qubits, game expects "
                f"{game.num_qubits}"
            )
        return
    if isinstance(strategy, DeterministicStrategy):
        from .classical import _check_total

        _check_total(game, strategy)
        return
    if isinstance(strategy, HiddenVariableModel):
        if len(strategy.responders) != game.parties:
            raise ValueError(
                f"model covers {len(strategy.responders)} parties, game has "
                f"{game.parties}"
            )
        bits = tuple([+1] * strategy.hidden_bits)
        for party, questions in enumerate(game.question_sets):
            for q in questions:
                values = strategy.responders[party](q.id, bits)
                if len(values) != q.answer_arity:
                    raise ValueError(
                        f"model answers arity {len(values)} to {q.id} "
                        f"(expected {q.answer_arity})"
                    )
        return
    raise TypeError(f"unsupported strategy type {type(strategy).__name__}")


def presample(
    game: NonlocalGame, strategy: Strategy, rounds: int, seed: int
) -> list[RoundPlan]:
    """Deterministically pre-draw every round of a session.

    Per round the generator first picks the context by weight, then draws
    whatever the strategy needs: one uniform variate for a quantum
    outcome, fresh hidden bits for a hidden-variable model, nothing for a
    deterministic table. Both referee modes consume this same plan.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    _validate_compat(game, strategy)
    rng = np.random.default_rng(seed)
    cumulative: list[tuple[float, Context]] = []
    acc = Fraction(0)
    for ctx in game.contexts:
        acc += ctx.weight
        cumulative.append((float(acc), ctx))

    distributions: dict[str, dict[tuple[int, ...], float]] = {}
    if isinstance(strategy, QuantumStrategy):
        for ctx in game.contexts:
            observables = game.measured_observables(ctx)
            distributions[ctx.id] = quantum.joint_distribution(
                strategy.state, observables
            )

    plans: list[RoundPlan] = []
    for _ in range(rounds):
        u = float(rng.random())
        context = next(ctx for bound, ctx in cumulative if u < bound)

        hidden: tuple[int, ...] | None = None
        if isinstance(strategy, QuantumStrategy):
            values = quantum.draw_from(distributions[context.id], float(rng.random()))
            answers = []
            pos = 0
            for q in context.questions:
                arity = q.answer_arity
                answers.append(tuple(values[pos : pos + arity]))
                pos += arity
        elif isinstance(strategy, HiddenVariableModel):
            raw = rng.integers(0, 2, size=strategy.hidden_bits)
            hidden = tuple(1 - 2 * int(b) for b in raw)
            answers = [
                strategy.responders[party](q.id, hidden)
                for party, q in enumerate(context.questions)
            ]
        else:
            answers = [
                strategy.answers_for(party, q.id)
                for party, q in enumerate(context.questions)
            ]
        plans.append(RoundPlan(context, tuple(answers), hidden))
    return plans


def _record_for(
    game: NonlocalGame, round_index: int, context: Context, answers: Sequence[tuple[int, ...]]
) -> TrialRecord:
    outcomes = {}
    for party, q in enumerate(context.questions):
        outcomes.update(zip(q.measured, answers[party]))
    return TrialRecord(
        round=round_index,
        context_id=context.id,
        questions=tuple(q.id for q in context.questions),
        answers=tuple(tuple(a) for a in answers),
        win=predicate_eval(context.predicate, outcomes),
    )


def run_trials(
    game: NonlocalGame, strategy: Strategy, rounds: int, seed: int
) -> TrialLog:
    """Play ``rounds`` seeded rounds with an in-process referee."""
    plans = presample(game, strategy, rounds, seed)
    log = TrialLog(game=game.name, strategy=strategy.name, seed=seed)
    for r, plan in enumerate(plans):
        log.records.append(_record_for(game, r, plan.context, plan.answers))
    return log


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"([xyz])(\d+)")


def _question_tokens(question_id: str) -> list[str]:
    return [f"{k}{q}" for k, q in _TOKEN.findall(question_id)]


@dataclass(frozen=True)
class ContextStats:
    asked: int
    won: int
    tv_distance: float | None = None


@dataclass(frozen=True)
class StatReport:
    """Aggregate view of a trial log.

    ``marginals`` maps each observable token (like ``x1``) to the
    frequency of its +1 outcome. ``max_tv_distance`` is present when an
    exact reference distribution was supplied for comparison.
    """

    rounds: int
    wins: int
    per_context: dict[str, ContextStats]
    marginals: dict[str, float]
    max_tv_distance: float | None = None

    @property
    def win_rate(self) -> float:
        return self.wins / self.rounds

    def to_text(self) -> str:
        lines = [
            f"rounds: {self.rounds}",
            f"wins: {self.wins}",
            f"win rate: {self.win_rate:.6f}",
            "per-context:",
        ]
        width = max(len(cid) for cid in self.per_context)
        for cid in sorted(self.per_context):
            st = self.per_context[cid]
            line = f"  {cid:<{width}}  asked={st.asked:<6d} won={st.won:<6d}"
            if st.tv_distance is not None:
                line += f" tv={st.tv_distance:.6f}"
            lines.append(line)
        lines.append("marginal +1 frequency:")
        for tok in sorted(self.marginals):
            lines.append(f"  {tok}: {self.marginals[tok]:.6f}")
        if self.max_tv_distance is not None:
            lines.append(f"max context TV distance: {self.max_tv_distance:.6f}")
        return "\n".join(lines)

    def to_records(self) -> list[dict]:
        records: list[dict] = [
            {
                "type": "summary",
                "rounds": self.rounds,
                "wins": self.wins,
                "win_rate": self.win_rate,
            }
        ]
        for cid in sorted(self.per_context):
            st = self.per_context[cid]
            rec = {"type": "context", "id": cid, "asked": st.asked, "won": st.won}
            if st.tv_distance is not None:
                rec["tv"] = st.tv_distance
            records.append(rec)
        for tok in sorted(self.marginals):
            records.append(
                {"type": "marginal", "observable": tok, "plus_frequency": self.marginals[tok]}
            )
        if self.max_tv_distance is not None:
            records.append({"type": "max_tv", "value": self.max_tv_distance})
        return records


def statistics(
    log: TrialLog,
    reference: Mapping[str, Mapping[tuple[int, ...], float]] | None = None,
) -> StatReport:
    """Summarize a log; optionally compare per-context empirical joint
    distributions against exact reference distributions (TV distance)."""
    if not log.records:
        raise ValueError("empty trial log")
    asked: dict[str, int] = {}
    won: dict[str, int] = {}
    joint: dict[str, dict[tuple[int, ...], int]] = {}
    plus: dict[str, int] = {}
    seen: dict[str, int] = {}
    for rec in log.records:
        asked[rec.context_id] = asked.get(rec.context_id, 0) + 1
        won[rec.context_id] = won.get(rec.context_id, 0) + int(rec.win)
        flat: list[int] = []
        for qid, answers in zip(rec.questions, rec.answers):
            toks = _question_tokens(qid)
            if len(toks) != len(answers):
                raise ValueError(
                    f"round {rec.round}: question {qid} arity mismatch with answers"
                )
            for tok, value in zip(toks, answers):
                seen[tok] = seen.get(tok, 0) + 1
                plus[tok] = plus.get(tok, 0) + (value == +1)
                flat.append(value)
        counts = joint.setdefault(rec.context_id, {})
        key = tuple(flat)
        counts[key] = counts.get(key, 0) + 1

    per_context: dict[str, ContextStats] = {}
    max_tv: float | None = None
    for cid in asked:
        tv: float | None = None
        if reference is not None and cid in reference:
            ref = reference[cid]
            emp = joint[cid]
            n = asked[cid]
            keys = set(ref) | set(emp)
            tv = 0.5 * sum(
                abs(emp.get(k, 0) / n - float(ref.get(k, 0.0))) for k in keys
            )
            max_tv = tv if max_tv is None else max(max_tv, tv)
        per_context[cid] = ContextStats(asked=asked[cid], won=won[cid], tv_distance=tv)

    marginals = {tok: plus[tok] / seen[tok] for tok in seen}
    return StatReport(
        rounds=len(log.records),
        wins=sum(won.values()),
        per_context=per_context,
        marginals=marginals,
        max_tv_distance=max_tv,
    )


def quantum_reference(game: NonlocalGame) -> dict[str, dict[tuple[int, ...], float]]:
    """Exact per-context joint distributions of the game's quantum strategy."""
    strategy = quantum_strategy(game)
    return {
        ctx.id: quantum.joint_distribution(
            strategy.state, game.measured_observables(ctx)
        )
        for ctx in game.contexts
    }


# ---------------------------------------------------------------------------
# post-hoc co-referee view of four-party logs
# ---------------------------------------------------------------------------


def nested_subgame_report(log: TrialLog) -> dict[str, dict[str, tuple[int, int]]]:
    """Classify four-party rounds by the embedded three-party games.

    The contexts testing x1*x3*z4 and y1*y3*z4 are common to both
    embedded games ("shared"); for the four-variable contexts, party 1's
    X outcome selects which embedded game the other three parties are
    playing, and the corresponding three-party constraint is checked.
    Returns, per bucket, constraint text -> (rounds checked, rounds
    satisfied).
    """
    from .games import nested_ghz_contexts

    first = {c.text(): c for c in nested_ghz_contexts(+1)}
    second = {c.text(): c for c in nested_ghz_contexts(-1)}
    shared_ids = {"eq03": "x1*x3*z4 = +1", "eq07": "y1*y3*z4 = -1"}
    selected_ids = {"eq11", "eq13"}
    report: dict[str, dict[str, tuple[int, int]]] = {
        "shared": {},
        "+1": {},
        "-1": {},
    }

    def bump(bucket: str, text: str, ok: bool) -> None:
        checked, satisfied = report[bucket].get(text, (0, 0))
        report[bucket][text] = (checked + 1, satisfied + int(ok))

    for rec in log.records:
        values: dict[str, int] = {}
        for qid, answers in zip(rec.questions, rec.answers):
            for tok, value in zip(_question_tokens(qid), answers):
                values[tok] = value
        if rec.context_id in shared_ids:
            text = shared_ids[rec.context_id]
            constraint = first[text]
            prod = 1
            for var in constraint.vars:
                prod *= values[str(var)]
            bump("shared", text, prod == constraint.sign)
        elif rec.context_id in selected_ids:
            selector = values["x2"]
            table = first if selector == +1 else second
            # eq11 embeds x1 = +-y3*y4, eq13 embeds y1 = +-x3*y4
            stem = "x1*y3*y4" if rec.context_id == "eq11" else "y1*x3*y4"
            text = next(t for t in table if t.startswith(stem))
            constraint = table[text]
            prod = 1
            for var in constraint.vars:
                prod *= values[str(var)]
            bump("+1" if selector == +1 else "-1", text, prod == constraint.sign)
    return report
