"""One-shot verification suite reproducing the package's headline claims.

Each check is a pure function returning a :class:`CheckResult`; the CLI
``verify`` subcommand runs them all and exits nonzero if any fails.

Two checks are expected to fail and are kept deliberately: they encode
stronger statements than the constructions here actually satisfy (exact
13/14 values where the true optimum is 12/14, and full statistical
mimicry on all eight restricted-game contexts where only the four tested
contexts match). The computed truths are printed alongside; see the
project README for the underlying arithmetic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import classical, games, netplay, quantum, trials


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str


def _tv(
    p: dict[tuple[int, ...], Fraction], q: dict[tuple[int, ...], float]
) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0.0))) for k in keys)


def check_fourteen_hold_surely() -> CheckResult:
    start = time.perf_counter()
    reports = quantum.verify_constraints(quantum.make_psi(), games.fourteen_equalities())
    elapsed = time.perf_counter() - start
    bad = [r for r in reports if not r.holds_surely or r.violation_mass >= 1e-9]
    ok = not bad and elapsed < 1.0
    return CheckResult(
        1,
        "fourteen equalities hold surely on the four-qubit state",
        ok,
        f"{len(reports) - len(bad)}/14 hold surely, {elapsed:.3f}s",
    )


def check_four_equation_contradiction() -> CheckResult:
    start = time.perf_counter()
    result = classical.noncontextual_maxsat(games.contradiction_subset())
    elapsed = time.perf_counter() - start
    variables = sorted({v for c in games.contradiction_subset() for v in c.vars})
    ok = result.max_satisfied == 3 and len(variables) == 7 and elapsed < 1.0
    return CheckResult(
        2,
        "the four tested equalities admit at most 3 joint satisfactions",
        ok,
        f"max={result.max_satisfied} over {len(variables)} vars, {elapsed:.3f}s",
    )


def check_fourteen_maxsat_is_13() -> CheckResult:
    start = time.perf_counter()
    result = classical.noncontextual_maxsat(games.fourteen_equalities())
    elapsed = time.perf_counter() - start
    ok = result.max_satisfied == 13 and len(result.witnesses) >= 1 and elapsed < 1.0
    return CheckResult(
        3,
        "noncontextual max-sat over the fourteen equalities equals 13",
        ok,
        f"computed max={result.max_satisfied} with {len(result.witnesses)} witnesses "
        f"(two disjoint contradicting quadruples force max 12), {elapsed:.3f}s",
    )


def check_restricted_game_is_classical() -> CheckResult:
    start = time.perf_counter()
    game = games.cabello_restricted()
    value = classical.classical_value(game).value
    automaton = classical.win_probability(game, classical.automaton_model())
    model = classical.win_probability(game, classical.lambda_mu_model())
    elapsed = time.perf_counter() - start
    ok = value == 1 and automaton == 1 and model == 1 and elapsed < 1.0
    return CheckResult(
        4,
        "the restricted experiment has a perfect classical model",
        ok,
        f"classical value={value}, automaton={automaton}, lambda-mu={model}, "
        f"{elapsed:.3f}s",
    )


def check_mimicry_all_contexts() -> CheckResult:
    game = games.cabello_restricted()
    model = classical.lambda_mu_model()
    state = quantum.make_psi()
    distances = {}
    for ctx in game.contexts:
        model_dist = classical.model_distribution(model, game, ctx)
        quantum_dist = quantum.joint_distribution(state, game.measured_observables(ctx))
        distances[ctx.id] = _tv(model_dist, quantum_dist)
    worst = max(distances.values())
    matching = sum(1 for d in distances.values() if d <= 1e-9)
    ok = worst <= 1e-9
    return CheckResult(
        5,
        "lambda-mu matches the quantum statistics in all 8 contexts",
        ok,
        f"{matching}/8 contexts match exactly; worst TV={worst:.3f} "
        "(a three-bit model cannot spread over the 16-outcome contexts)",
    )


def check_four_party_gap() -> CheckResult:
    start = time.perf_counter()
    game = games.four_party_game()
    value = classical.classical_value(game).value
    log = trials.run_trials(game, trials.quantum_strategy(game), rounds=10_000, seed=11)
    wins = sum(r.win for r in log.records)
    elapsed = time.perf_counter() - start
    ok = value == Fraction(13, 14) and wins == 10_000 and elapsed < 5.0
    return CheckResult(
        6,
        "four-party game: classical value 13/14, quantum wins every round",
        ok,
        f"classical value={value} (enumeration gives 6/7=12/14), quantum wins "
        f"{wins}/10000, {elapsed:.3f}s",
    )


def check_mermin_baseline() -> CheckResult:
    start = time.perf_counter()
    game = games.mermin_ghz()
    value = classical.classical_value(game).value
    reports = quantum.verify_constraints(
        quantum.make_ghz(3), [c.predicate for c in game.contexts]
    )
    elapsed = time.perf_counter() - start
    ok = value == Fraction(3, 4) and all(r.holds_surely for r in reports) and elapsed < 1.0
    return CheckResult(
        7,
        "three-party baseline: classical 3/4, GHZ wins surely",
        ok,
        f"classical value={value}, quantum sure wins={sum(r.holds_surely for r in reports)}/4, "
        f"{elapsed:.3f}s",
    )


def check_nested_conditioning() -> CheckResult:
    state = quantum.make_psi()
    dist = quantum.joint_distribution(state, quantum.sites("x1 x2 y3 y4"))
    mass = {+1: 0.0, -1: 0.0}
    good = {+1: 0.0, -1: 0.0}
    for (x1, x2, y3, y4), p in dist.items():
        mass[x2] += p
        want = y3 * y4 if x2 == +1 else -y3 * y4
        if x1 == want:
            good[x2] += p
    cond_plus = good[+1] / mass[+1]
    cond_minus = good[-1] / mass[-1]
    ok = abs(cond_plus - 1.0) < 1e-9 and abs(cond_minus - 1.0) < 1e-9
    return CheckResult(
        8,
        "x2 selects which embedded three-party constraint holds surely",
        ok,
        f"P(x1=y3y4|x2=+1)={cond_plus:.12f}, P(x1=-y3y4|x2=-1)={cond_minus:.12f}",
    )


def check_spectra_distinguish_states() -> CheckResult:
    psi_spec = quantum.reduced_spectrum(quantum.make_psi(), {1, 2})
    ghz_spec = quantum.reduced_spectrum(quantum.make_ghz(4), {1, 2})
    ok = all(abs(v - 0.25) < 1e-9 for v in psi_spec) and (
        abs(ghz_spec[0] - 0.5) < 1e-9
        and abs(ghz_spec[1] - 0.5) < 1e-9
        and abs(ghz_spec[2]) < 1e-9
        and abs(ghz_spec[3]) < 1e-9
    )
    return CheckResult(
        9,
        "reduced spectra separate the four-qubit state from GHZ",
        ok,
        f"state: {[round(v, 6) for v in psi_spec]}, GHZ: {[round(v, 6) for v in ghz_spec]}",
    )


def check_distributed_equivalence() -> CheckResult:
    start = time.perf_counter()
    game = games.four_party_game()
    strategy = trials.quantum_strategy(game)
    in_process = trials.run_trials(game, strategy, rounds=1000, seed=42)
    transcript: dict[int, list[bytes]] = {}
    distributed = netplay.run_local_session(
        game, strategy, rounds=1000, seed=42, transcript=transcript
    )
    elapsed = time.perf_counter() - start
    identical = in_process.to_jsonl() == distributed.to_jsonl()
    leaks = _transcript_leaks(game, transcript)
    ok = identical and not leaks and elapsed < 10.0
    return CheckResult(
        10,
        "distributed referee reproduces the in-process log bit for bit",
        ok,
        f"identical={identical}, leaky messages={len(leaks)}, {elapsed:.3f}s",
    )


def _transcript_leaks(game, transcript) -> list[str]:
    """Outbound messages that would reveal another party's question/answer."""
    leaks = []
    owned = {
        party: {q for q, p in game.qubit_ownership if p == party}
        for party in range(game.parties)
    }
    for party, blobs in transcript.items():
        for blob in blobs:
            message = netplay.decode_message(blob)
            if message["type"] == "question":
                slots = {o["slot"] for o in message["observables"]}
                if not slots <= owned[party]:
                    leaks.append(f"party {party} asked about foreign slots {slots}")
            elif message["type"] == "answer":
                leaks.append(f"party {party} received an answer message")
            elif message["type"] not in ("dealt", "end"):
                leaks.append(f"party {party} received {message['type']!r}")
    return leaks


def check_extended_solver() -> CheckResult:
    game = games.cabello_extended()
    result = classical.classical_value(game)  # default budget
    bound = classical.noncontextual_value(game)
    report = (
        f"contextual classical value={result.value}, "
        f"best noncontextual assignment value={bound}"
    )
    ok = (
        result.value <= Fraction(13, 14)
        and result.value >= bound
        and "contextual" in report
        and "noncontextual" in report
    )
    return CheckResult(
        11,
        "extended-game solver: within budget, value between the two bounds",
        ok,
        report + " (distinct per-context questions make every context separately "
        "winnable, so the contextual value is 1)",
    )


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_fourteen_hold_surely,
    check_four_equation_contradiction,
    check_fourteen_maxsat_is_13,
    check_restricted_game_is_classical,
    check_mimicry_all_contexts,
    check_four_party_gap,
    check_mermin_baseline,
    check_nested_conditioning,
    check_spectra_distinguish_states,
    check_distributed_equivalence,
    check_extended_solver,
)

#: criteria whose literal statement is stronger than what the mathematics
#: allows; they fail by design and the detail strings show the true values
EXPECTED_DEFECTS = (3, 5, 6, 11)


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS]
