import itertools

import numpy as np
import pytest

_ACCEPTANCE_LINES = []


def projection_residual(a, b):
    """Largest distance from a unit column of span(a) to span(b), both directions.

    Zero exactly when the two column spans coincide.
    """
    qa = np.linalg.qr(np.atleast_2d(a))[0]
    qb = np.linalg.qr(np.atleast_2d(b))[0]
    ab = np.linalg.norm(qa - qb @ (qb.T @ qa), axis=0).max()
    ba = np.linalg.norm(qb - qa @ (qa.T @ qb), axis=0).max()
    return max(ab, ba)


def brute_force_misassignment(truth, pred):
    """Minimum over every injective relabelling of pred onto truth labels."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    t_labels = sorted(set(truth.tolist()))
    p_labels = sorted(set(pred.tolist()))
    size = max(len(t_labels), len(p_labels))
    # pad with dummy labels so every bijection is enumerated
    targets = t_labels + [("dummy", i) for i in range(size - len(t_labels))]
    best = truth.size
    for perm in itertools.permutations(targets, len(p_labels)):
        mapping = dict(zip(p_labels, perm))
        wrong = sum(mapping[q] != t for q, t in zip(pred.tolist(), truth.tolist()))
        best = min(best, wrong)
    return best / truth.size


def block_indicators(sizes):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return np.eye(len(sizes))[labels]


@pytest.fixture
def acceptance_log():
    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title} {detail}".rstrip())
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
