import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> headline, parsed from acceptance test names
_CRITERION_RE = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    outcomes = {}
    priority = {"SKIP": 0, "PASS": 1, "FAIL": 2}
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            m = _CRITERION_RE.search(nodeid)
            if not m:
                continue
            num = int(m.group(1))
            label = {"passed": "PASS", "failed": "FAIL", "error": "FAIL", "skipped": "SKIP"}[status]
            # a criterion may map to several tests; any failure wins
            cur = outcomes.get(num)
            if cur is None or priority[label] > priority[cur]:
                outcomes[num] = label
    if outcomes:
        terminalreporter.write_sep("-", "acceptance criteria")
        for num in sorted(outcomes):
            terminalreporter.write_line(f"criterion {num:2d}: {outcomes[num]}")
