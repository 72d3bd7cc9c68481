import json
import os
from datetime import datetime

from rydgate.logger import log_dir


def log_json(event: str, **fields) -> None:
    entry = {
        "time": datetime.now().isoformat(),
        "event": event,
        **fields,
    }

    directory = log_dir()
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "runs.jsonl"), "a", encoding="utf-8") as f:
        f.write(json.dumps(entry, default=str) + "\n")
