"""Operator CLI: replay, report, export, user-add; exit-code contract."""

import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def run_cli(*args, **kwargs):
    return subprocess.run(
        [sys.executable, "-m", "noosphere", *args],
        capture_output=True,
        text=True,
        cwd=ROOT,
        **kwargs,
    )


def test_replay_fixture_emits_reports(tmp_path, math5190_log_path):
    out = tmp_path / "out"
    result = run_cli("replay", str(math5190_log_path), "--out", str(out))
    assert result.returncode == 0, result.stderr

    participation = (out / "participation.tsv").read_text().splitlines()
    rows = {line.split("\t")[0]: line for line in participation}
    assert rows["student1"] == "student1\t0\t1\t10\t26\t37"
    assert rows["student2"] == "student2\t1\t2\t10\t27\t39"
    assert rows["student3"] == "student3\t3\t6\t10\t16\t32"

    closures = (out / "closures.tsv").read_text().splitlines()
    counts = [int(line.split("\t")[1]) for line in closures if not line.startswith("bunching")]
    assert sum(counts) == 48

    toc = (out / "notes.toc.txt").read_text()
    assert toc.splitlines()[0].split("\t")[1] == "Autonomization"
    assert (out / "notes.tex").read_text().startswith("\\documentclass")
    assert (out / "snapshot.jsonl").read_text().startswith('{"snapshot_version":1}')


def test_replay_is_deterministic(tmp_path, math5190_log_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli("replay", str(math5190_log_path), "--out", str(out1)).returncode == 0
    assert run_cli("replay", str(math5190_log_path), "--out", str(out2)).returncode == 0
    for name in ("participation.tsv", "closures.tsv", "notes.tex", "notes.toc.txt", "snapshot.jsonl"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_replay_empty_file(tmp_path):
    empty = tmp_path / "empty.log"
    empty.write_text("")
    out = tmp_path / "out"
    result = run_cli("replay", str(empty), "--out", str(out))
    assert result.returncode == 0
    assert (out / "participation.tsv").read_text() == "\n"
    assert (out / "snapshot.jsonl").read_text().count("\n") == 2  # header + meta


def test_replay_corrupt_log_exits_2_with_seq(tmp_path, math5190_log_path):
    lines = math5190_log_path.read_text().splitlines()
    corrupt = tmp_path / "corrupt.log"
    corrupt.write_text("\n".join(lines[:10] + lines[11:]) + "\n")  # drop seq 11
    result = run_cli("replay", str(corrupt), "--out", str(tmp_path / "out"))
    assert result.returncode == 2
    assert "seq 11" in result.stderr


def test_unknown_report_is_usage_error(tmp_path, math5190_log_path):
    result = run_cli("replay", str(math5190_log_path), "--report", "velocity")
    assert result.returncode == 1


def test_missing_subcommand_is_usage_error():
    assert run_cli().returncode == 1


def test_user_add_and_report(tmp_path):
    data = tmp_path / "data"
    first = run_cli("user-add", "--data-dir", str(data), "--id", "admin",
                    "--name", "Admin", "--role", "admin", "--secret", "pw")
    assert first.returncode == 0, first.stderr
    second = run_cli("user-add", "--data-dir", str(data), "--id", "alice",
                     "--name", "Alice", "--role", "student")
    assert second.returncode == 0, second.stderr

    log_lines = (data / "events.log").read_text().splitlines()
    assert len(log_lines) == 2
    assert json.loads(log_lines[1])["payload"]["user_id"] == "alice"

    report = run_cli("report", "participation", "--data-dir", str(data))
    assert report.returncode == 0
    assert "alice\t0\t0\t0\t0\t0" in report.stdout


def test_export_command(tmp_path, math5190_log_path):
    data = tmp_path / "data"
    data.mkdir()
    (data / "events.log").write_bytes(math5190_log_path.read_bytes())
    out = tmp_path / "doc"
    result = run_cli("export", "--data-dir", str(data), "--out", str(out))
    assert result.returncode == 0, result.stderr
    toc = (out / "notes.toc.txt").read_text().splitlines()
    # negligible stubs and the 4 unadopted problems fall out of the document
    assert 100 < len(toc) < 122
    assert toc[0].endswith("Autonomization")


def _free_port() -> int:
    import socket

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


def test_serve_seeds_tabula_rasa_store(tmp_path):
    import json as jsonlib
    import time
    import urllib.request

    port = _free_port()
    config = tmp_path / "config.json"
    config.write_text(
        jsonlib.dumps(
            {"listen_port": port, "data_dir": str(tmp_path / "data"), "admin_secret": "pw"}
        )
    )
    proc = subprocess.Popen(
        [sys.executable, "-m", "noosphere", "serve", "--config", str(config)],
        cwd=ROOT,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        deadline = time.time() + 30
        body = None
        while time.time() < deadline:
            if proc.poll() is not None:
                break
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/v1/entries") as response:
                    body = jsonlib.load(response)
                break
            except OSError:
                time.sleep(0.2)
        if body is None:
            proc.terminate()
            _, err = proc.communicate(timeout=10)
            raise AssertionError(f"server never answered (rc={proc.returncode}): {err[-800:]}")
        assert body == {"entries": []}, "tabula rasa store has no entries"
        login = urllib.request.Request(
            f"http://127.0.0.1:{port}/v1/login",
            data=jsonlib.dumps({"user": "admin", "secret": "pw"}).encode(),
            headers={"content-type": "application/json"},
        )
        with urllib.request.urlopen(login) as response:
            assert jsonlib.load(response)["user_id"] == "admin"
    finally:
        if proc.poll() is None:
            proc.terminate()
            proc.wait(timeout=10)
    log_lines = (tmp_path / "data" / "events.log").read_text().splitlines()
    assert len(log_lines) == 1  # exactly the seeded admin
    assert json.loads(log_lines[0])["payload"]["role"] == "admin"


def test_invalid_config_aborts_with_field(tmp_path):
    config = tmp_path / "config.json"
    config.write_text('{"listen_port": 123456}')
    result = run_cli("report", "participation", "--data-dir", str(tmp_path), "--config", str(config))
    assert result.returncode == 2
    assert "listen_port" in result.stderr
