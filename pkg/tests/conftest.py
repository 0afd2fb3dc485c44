import sys

import pytest

from doclink.kb import KnowledgeBase, Concept, filter_unambiguous
from doclink.trie import TrieSet


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible pass/fail line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__ == "test_acceptance":
        status = "PASS" if report.passed else "FAIL"
        name = item.name.removeprefix("test_")
        print(f"ACCEPTANCE {name}: {status}", file=sys.stderr)


def make_kb(rows):
    """rows: iterable of (concept_id, group, [synonyms])."""
    concepts = {
        cid: Concept(id=cid, group=group, synonyms=tuple(syns))
        for cid, group, syns in rows
    }
    groups = {c.group for c in concepts.values()}
    return KnowledgeBase(concepts=concepts, groups=groups)


@pytest.fixture
def disorders_kb():
    return make_kb(
        [
            ("C1", "Disorders", ["heart attack", "myocardial infarction", "MI"]),
            ("C2", "Disorders", ["heart failure", "mitral insufficiency", "MI"]),
            ("C3", "Chemicals", ["insulin"]),
        ]
    )


@pytest.fixture
def disorders_inventory(disorders_kb):
    return filter_unambiguous(disorders_kb)


def trie_set_from_rows(rows):
    return TrieSet.build(filter_unambiguous(make_kb(rows)))
