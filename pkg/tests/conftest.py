from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
ROOT = TESTS.parent
FIXTURES = TESTS / "fixtures"
LARGE = ROOT / ".fixtures"
VOCAB = LARGE / "vocab"

sys.path.insert(0, str(TESTS))


def fixture_bytes(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


def require_vocab(name: str):
    """Vocabulary-dependent checks fail loudly rather than skip when the file is absent."""
    from lapis.tokenmeter import get_tokenizer

    path = VOCAB / f"{name}.tiktoken"
    if not path.is_file():
        pytest.fail(f"vocabulary {path} missing; run scripts/fetch_fixtures.py")
    return get_tokenizer(name, VOCAB)


@pytest.fixture(scope="session")
def cl100k():
    return require_vocab("cl100k_base")


@pytest.fixture(scope="session")
def o200k():
    return require_vocab("o200k_base")


@pytest.fixture(scope="session")
def invoice_text() -> str:
    return (FIXTURES / "lapis" / "invoice.lapis").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def petstore():
    from lapis.openapi import load_openapi

    return load_openapi(fixture_bytes("openapi/petstore3.yaml"))


@pytest.fixture(scope="session")
def httpbin():
    from lapis.openapi import load_openapi

    return load_openapi(fixture_bytes("openapi/httpbin.json"))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
