import os
from datetime import datetime


def log_dir() -> str:
    return os.environ.get("RYDGATE_LOG_DIR", "logs")


def log_event(message: str, level: str = "INFO") -> None:
    """
    Append one human-readable line to <log_dir>/rydgate.log.
    """
    time = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    line = f"[{time}] {level}: {message}\n"

    directory = log_dir()
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "rydgate.log"), "a", encoding="utf-8") as f:
        f.write(line)
