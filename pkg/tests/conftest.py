import contextlib
import io
import re
import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from comfortloop.cli import main
from comfortloop.config import DEFAULT_SEED, DEFAULT_TRAIN_FRACTION
from comfortloop.dataset import DataSplit, read_dataset, split_and_normalize
from comfortloop.mlp import MlpModel, load_model

ACCEPTANCE_LINES: list[str] = []


@dataclass
class Pipeline:
    workdir: Path
    data_path: Path
    model_path: Path
    model: MlpModel
    test_split: DataSplit
    train_output: str
    seconds: float


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory) -> Pipeline:
    """Default end-to-end run through the CLI: 50 000 samples, default training."""
    d = tmp_path_factory.mktemp("pipeline")
    data, model = d / "data.csv", d / "model.txt"
    start = time.perf_counter()
    assert main(["--seed", str(DEFAULT_SEED), "gen-data", "--out", str(data)]) == 0
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        rc = main(["--seed", str(DEFAULT_SEED), "train", "--data", str(data), "--out", str(model)])
    assert rc == 0, buf.getvalue()
    seconds = time.perf_counter() - start
    records = read_dataset(data)
    _, test_split, _ = split_and_normalize(records, DEFAULT_TRAIN_FRACTION, DEFAULT_SEED)
    return Pipeline(d, data, model, load_model(model), test_split, buf.getvalue(), seconds)


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{name}]: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def parse_metrics(text: str) -> dict[str, float]:
    m = re.search(r"mse=(\S+) mae=(\S+) r2=(\S+)", text)
    return {"mse": float(m.group(1)), "mae": float(m.group(2)), "r2": float(m.group(3))}
