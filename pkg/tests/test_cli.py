"""Command line: run determinism, replay verification, serve smoke test."""

import json
import signal
import socket
import subprocess
import sys
import time

import httpx
import pytest

from lifespace.cli import main
from lifespace.persistence import read_event_log


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_run_writes_deterministic_log(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert run_cli("run", "--seed", "7", "--ticks", "60", "--out", str(a)) == 0
        assert run_cli("run", "--seed", "7", "--ticks", "60", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_map_file_names_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.map"
        code = run_cli("run", "--map", str(missing), "--ticks", "1",
                       "--out", str(tmp_path / "x.jsonl"))
        assert code == 1
        assert str(missing) in capsys.readouterr().err

    def test_zero_ticks_zero_exit_empty_log(self, tmp_path):
        out = tmp_path / "zero.jsonl"
        assert run_cli("run", "--ticks", "0", "--out", str(out)) == 0
        header, events, trailer = read_event_log(str(out))
        assert events == []
        assert trailer["final_tick"] == 0

    def test_summary_printed(self, tmp_path, capsys):
        run_cli("run", "--seed", "1", "--ticks", "40", "--out", str(tmp_path / "s.jsonl"))
        out = capsys.readouterr().out
        assert "conversations held:" in out
        assert "memory compressions:" in out

    def test_config_file_drives_run(self, tmp_path):
        config = {"sim": {"seed": 3, "activity_duration": 4, "memory_threshold": 5}}
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        out = tmp_path / "c.jsonl"
        assert run_cli("run", "--config", str(config_path), "--ticks", "30",
                       "--out", str(out)) == 0
        header, _, _ = read_event_log(str(out))
        assert header["config"]["seed"] == 3
        assert header["config"]["activity_duration"] == 4

    def test_flag_overrides_config_file(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"sim": {"seed": 3}}))
        out = tmp_path / "c.jsonl"
        run_cli("run", "--config", str(config_path), "--seed", "11", "--ticks", "5",
                "--out", str(out))
        header, _, _ = read_event_log(str(out))
        assert header["config"]["seed"] == 11


class TestReplay:
    def make_log(self, tmp_path, ticks=80):
        out = tmp_path / "run.jsonl"
        assert run_cli("run", "--seed", "5", "--ticks", str(ticks), "--out", str(out)) == 0
        return out

    def test_replay_matches(self, tmp_path, capsys):
        log = self.make_log(tmp_path)
        assert run_cli("replay", str(log)) == 0
        assert "digest match" in capsys.readouterr().out

    def test_deleted_line_names_first_divergent_seq(self, tmp_path, capsys):
        log = self.make_log(tmp_path)
        lines = log.read_text().splitlines()
        removed = json.loads(lines[10])
        del lines[10]  # an event line (line 1 is the header)
        log.write_text("\n".join(lines) + "\n")
        assert run_cli("replay", str(log)) == 1
        out = capsys.readouterr().out
        assert f"first divergent seq: {removed['seq']}" in out

    def test_tampered_event_fails_digest(self, tmp_path, capsys):
        log = self.make_log(tmp_path)
        lines = log.read_text().splitlines()
        index, event = next(
            (i, json.loads(line)) for i, line in enumerate(lines)
            if '"type":"arrived"' in line
        )
        event["data"]["scene"] = "garden" if event["data"]["scene"] != "garden" else "plaza"
        lines[index] = json.dumps(event, sort_keys=True, separators=(",", ":"))
        log.write_text("\n".join(lines) + "\n")
        assert run_cli("replay", str(log)) == 1
        assert "digest mismatch" in capsys.readouterr().out

    def test_empty_file_is_corrupt(self, tmp_path, capsys):
        log = tmp_path / "empty.jsonl"
        log.write_text("")
        assert run_cli("replay", str(log)) == 1
        assert "empty" in capsys.readouterr().err

    def test_bad_json_line_number_reported(self, tmp_path, capsys):
        log = self.make_log(tmp_path)
        lines = log.read_text().splitlines()
        lines[3] = "{broken json"
        log.write_text("\n".join(lines) + "\n")
        assert run_cli("replay", str(log)) == 1
        assert "line 4" in capsys.readouterr().err


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestServe:
    def test_serve_answers_state_and_snapshots_on_exit(self, tmp_path):
        port = free_port()
        snapshot = tmp_path / "exit.json"
        process = subprocess.Popen(
            [sys.executable, "-m", "lifespace.cli", "serve",
             "--listen", f"127.0.0.1:{port}",
             "--snapshot-on-exit", str(snapshot)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
        )
        try:
            body = None
            for _ in range(100):
                try:
                    response = httpx.get(f"http://127.0.0.1:{port}/v1/state", timeout=1)
                    if response.status_code == 200:
                        body = response.json()
                        break
                except httpx.TransportError:
                    time.sleep(0.1)
            assert body is not None, "server never answered /v1/state"
            assert body["tick"] >= 0
            assert len(body["agents"]) == 5
        finally:
            process.send_signal(signal.SIGINT)
            try:
                process.wait(timeout=10)
            except subprocess.TimeoutExpired:
                process.kill()
                pytest.fail("serve did not shut down on SIGINT")
        assert snapshot.exists(), "snapshot-on-exit file missing"
        assert json.loads(snapshot.read_text())["digest"]

    def test_occupied_port_fails_nonzero(self):
        port = free_port()
        blocker = socket.socket()
        blocker.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        blocker.bind(("127.0.0.1", port))
        blocker.listen(1)
        try:
            result = subprocess.run(
                [sys.executable, "-m", "lifespace.cli", "serve",
                 "--listen", f"127.0.0.1:{port}"],
                capture_output=True, timeout=30,
            )
            assert result.returncode != 0
        finally:
            blocker.close()
