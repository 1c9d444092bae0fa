import json
import multiprocessing
import socket
import time

from nonlocalgames import cli
from nonlocalgames.trials import TrialLog


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_show(capsys):
    code, out, _ = run_cli(capsys, "show", "cabello-restricted")
    assert code == 0
    assert "game cabello-restricted" in out
    assert "x1x2|x3z4" in out


def test_solve_four_party(capsys):
    code, out, _ = run_cli(capsys, "solve", "four-party")
    assert code == 0
    assert "classical value: 6/7 ≈ 0.857143" in out
    assert "best noncontextual assignment value: 6/7" in out


def test_solve_restricted(capsys):
    code, out, _ = run_cli(capsys, "solve", "cabello-restricted")
    assert code == 0
    assert "classical value: 1 ≈ 1.000000" in out


def test_solve_mermin(capsys):
    code, out, _ = run_cli(capsys, "solve", "mermin-ghz")
    assert code == 0
    assert "classical value: 3/4 ≈ 0.750000" in out


def test_solve_unknown_game_exit_2(capsys):
    code, _, err = run_cli(capsys, "solve", "tic-tac-toe")
    assert code == 2
    assert "known games" in err
    assert "four-party" in err


def test_solve_budget_exit_3(capsys):
    code, _, err = run_cli(capsys, "solve", "cabello-extended", "--budget", "100")
    assert code == 3
    assert "budget" in err


def test_budget_env_override(capsys, monkeypatch):
    monkeypatch.setenv(cli.BUDGET_ENV, "100")
    code, _, err = run_cli(capsys, "solve", "cabello-extended")
    assert code == 3
    # explicit flag wins over the environment
    code, out, _ = run_cli(capsys, "solve", "four-party", "--budget", "100000")
    assert code == 0


def test_maxsat_named_sets(capsys):
    code, out, _ = run_cli(capsys, "maxsat", "fourteen")
    assert code == 0
    assert out.startswith("12/14 satisfied")
    assert "maximizing assignments: 64" in out

    code, out, _ = run_cli(capsys, "maxsat", "four")
    assert code == 0
    assert out.startswith("3/4 satisfied")


def test_maxsat_from_file(tmp_path, capsys):
    path = tmp_path / "eqs.txt"
    path.write_text("# a comment\n+1 x1 x2\n-1 x1 x2\n")
    code, out, _ = run_cli(capsys, "maxsat", "--file", str(path))
    assert code == 0
    assert out.startswith("1/2 satisfied")


def test_maxsat_needs_a_set(capsys):
    code, _, err = run_cli(capsys, "maxsat")
    assert code == 2


def test_simulate_lambda_mu(capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate", "cabello-restricted",
        "--strategy", "lambda-mu", "--rounds", "3000", "--seed", "4",
    )
    assert code == 0
    assert "win rate: 1.000000" in out


def test_simulate_records_format(capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate", "mermin-ghz",
        "--strategy", "best-classical", "--rounds", "400", "--seed", "7",
        "--format", "records",
    )
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert records[0]["type"] == "summary"
    assert records[0]["rounds"] == 400
    assert 0.6 <= records[0]["win_rate"] <= 0.9


def test_simulate_reference_flag(capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate", "cabello-restricted",
        "--strategy", "quantum", "--rounds", "2000", "--seed", "1",
        "--reference",
    )
    assert code == 0
    assert "max context TV distance" in out


def test_simulate_unknown_strategy_exit_2(capsys):
    code, _, err = run_cli(capsys, "simulate", "four-party", "--strategy", "psychic")
    assert code == 2
    assert "unknown strategy" in err


def test_output_deterministic(capsys):
    args = ("simulate", "four-party", "--strategy", "quantum",
            "--rounds", "500", "--seed", "9")
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second


def test_serve_and_play_over_loopback(tmp_path, capsys):
    port = _free_port()
    players = [
        multiprocessing.Process(
            target=_play_when_up,
            args=(port, "cabello-restricted", "automaton", party),
            daemon=True,
        )
        for party in range(2)
    ]
    for p in players:
        p.start()
    out_path = tmp_path / "log.jsonl"
    code, out, _ = run_cli(
        capsys,
        "serve", "cabello-restricted",
        "--bind", f"127.0.0.1:{port}",
        "--strategy", "automaton", "--rounds", "60", "--seed", "2",
        "--out", str(out_path),
    )
    for p in players:
        p.join(timeout=20)
    assert code == 0
    assert "win rate: 1.000000" in out
    log = TrialLog.from_jsonl(out_path.read_text())
    assert len(log.records) == 60 and log.complete


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _play_when_up(port: int, game: str, strategy: str, party: int) -> None:
    # the serving side needs a moment to bind; retry while refused
    deadline = time.monotonic() + 15
    code = 1
    while time.monotonic() < deadline:
        code = cli.main(
            ["play", game, "--connect", f"127.0.0.1:{port}",
             "--party", str(party), "--strategy", strategy]
        )
        if code == 0:
            break
        time.sleep(0.05)
    raise SystemExit(code)


def test_verify_reports_every_criterion(capsys):
    code, out, _ = run_cli(capsys, "verify")
    for criterion in range(1, 12):
        assert f"criterion {criterion:02d}" in out
    assert "checks passed" in out
    # the verdict line is the last one and counts both passes and failures
    last = out.strip().splitlines()[-1]
    passed, total = last.split()[0].split("/")
    assert int(total) == 11
    assert code in (0, 1)
