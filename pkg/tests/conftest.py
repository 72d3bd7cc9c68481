import pytest


@pytest.fixture(autouse=True)
def isolated_logs(tmp_path, monkeypatch):
    """Keep rydgate.log / runs.jsonl out of the working tree."""
    log_dir = tmp_path / "logs"
    monkeypatch.setenv("RYDGATE_LOG_DIR", str(log_dir))
    return log_dir
