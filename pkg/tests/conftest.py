"""Shared heavy fixtures and the acceptance summary printed at the end of a run."""

import time

import pytest

from blockfade.channel import ChannelParams
from blockfade.fbl import FblSpec, dt_rate

REF_PARAMS = ChannelParams(50, 10.0)
REF_EPSILON = 1e-3
DT_SAMPLES = {1000: 2_000_000, 4000: 2_000_000, 10_000: 2_000_000, 40_000: 1_000_000}
DT_SEED = 2024

ACCEPTANCE = {}
PROPERTY_MODULES = ("test_specfun", "test_channel", "test_mc", "test_asymptotic", "test_fbl",
                    "test_cli")
_PROPERTY_RESULTS = {}


def record(key, title, passed, detail=""):
    ACCEPTANCE[key] = (title, bool(passed), detail)
    return bool(passed)


class _DtCache:
    def __init__(self):
        self._results = {}
        self.elapsed = {}

    def __call__(self, n):
        if n not in self._results:
            spec = FblSpec(n, n // REF_PARAMS.T, REF_EPSILON, REF_PARAMS)
            t0 = time.perf_counter()
            self._results[n] = dt_rate(spec, DT_SAMPLES[n], DT_SEED)
            self.elapsed[n] = time.perf_counter() - t0
        return self._results[n]


@pytest.fixture(scope="session")
def dt_reference():
    """DT results at T=50, rho=10 dB, eps=1e-3, computed once per session."""
    return _DtCache()


def pytest_runtest_logreport(report):
    module = report.nodeid.split("::")[0].rsplit("/", 1)[-1].removesuffix(".py")
    if module not in PROPERTY_MODULES:
        return
    if report.when == "call" or report.outcome == "failed":
        prev = _PROPERTY_RESULTS.get(report.nodeid, "passed")
        _PROPERTY_RESULTS[report.nodeid] = "failed" if "failed" in (prev, report.outcome) \
            else report.outcome


def _fold_property_suites():
    if not _PROPERTY_RESULTS:
        return
    failed = sorted(k.split("::", 1)[1] for k, v in _PROPERTY_RESULTS.items() if v == "failed")
    passed = sum(v == "passed" for v in _PROPERTY_RESULTS.values())
    detail = f"{passed} passed, {len(failed)} failed"
    if failed:
        detail += ": " + ", ".join(failed)
    record("8.suites", "module invariant and property suites", not failed, detail)


def pytest_terminal_summary(terminalreporter):
    _fold_property_suites()
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        title, passed, detail = ACCEPTANCE[key]
        line = f"[{'PASS' if passed else 'FAIL'}] {key} {title}"
        if detail:
            line += f" :: {detail}"
        tr.write_line(line)
