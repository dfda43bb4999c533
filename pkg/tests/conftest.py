"""Suite-wide configuration.

Registers a hypothesis profile suited to CI latency and prints one pass/fail
line per acceptance criterion after the run.
"""

import re

from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = {}
    for outcome, label in (
        ("passed", "PASS"),
        ("failed", "FAIL"),
        ("error", "FAIL"),
        ("skipped", "SKIP"),
    ):
        for rep in terminalreporter.stats.get(outcome, ()):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m:
                num, slug = int(m.group(1)), m.group(2).replace("_", " ")
                # a test that failed in any phase counts as failed
                if lines.get(num, (None, "PASS"))[1] != "FAIL":
                    lines[num] = (slug, label)
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for num in sorted(lines):
            slug, label = lines[num]
            terminalreporter.write_line(f"criterion {num:02d} ({slug}): {label}")
