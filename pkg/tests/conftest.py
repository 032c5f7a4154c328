import os

import mpmath as mp
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def mp_kernels(t, r, dps=60):
    """(E0, E1) from the characteristic roots in high precision."""
    with mp.workdps(dps):
        t = mp.mpf(t)
        r = mp.mpf(r)
        if r == 0:
            return 1.0, float(t)
        disc = mp.sqrt(mp.mpc(r**8 - 4 * r**2))
        l1 = (-r**4 + disc) / 2
        l2 = (-r**4 - disc) / 2
        e0 = (mp.exp(l1 * t) + mp.exp(l2 * t)) / 2
        e1 = (mp.exp(l1 * t) - mp.exp(l2 * t)) / (l1 - l2)
        return float(mp.re(e0)), float(mp.re(e1))


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split("(")[0])):
            terminalreporter.write_line(line)
