from __future__ import annotations

import sys
from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

CORPUS = HERE.parent / "corpus"


@pytest.fixture
def corpus() -> Path:
    return CORPUS


def read_spec(name: str):
    from bigsos.rules import parse_spec

    return parse_spec((CORPUS / name).read_text(encoding="utf-8"))
