import json
from pathlib import Path

import pytest

from keyattr.classifier import RoleModel

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def hamburger_path() -> Path:
    return DATA_DIR / "hamburger.csv"


@pytest.fixture(scope="session")
def default_model() -> RoleModel:
    """The model shipped with the package; what `identify` uses by default."""
    path = Path(__file__).parent.parent / "src" / "keyattr" / "data" / "default_model.json"
    return RoleModel.load(str(path))


def strip_timing_keys(obj):
    """Remove every timing subtree so reports can be compared byte-wise."""
    if isinstance(obj, dict):
        return {k: strip_timing_keys(v) for k, v in obj.items()
                if k not in ("timings", "elapsed")}
    if isinstance(obj, list):
        return [strip_timing_keys(v) for v in obj]
    return obj


def load_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
