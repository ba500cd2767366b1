import pytest
from hypothesis import settings

from lasserre_lab.polyalg import PolySystem, Polynomial

settings.register_profile("default", deadline=None)
settings.load_profile("default")

X, Y = Polynomial.variables(2)
G1 = -(1 - X**2 - Y**2) * (4 - (X - 4)**2 - Y**2)


def small_disk(p):
    return p[0] <= 1.5


@pytest.fixture(scope="session")
def two_disks():
    return PolySystem(("x", "y"), (G1, 1 - Y))


@pytest.fixture(scope="session")
def unit_disk():
    return PolySystem(("x", "y"), (1 - X**2 - Y**2,))


@pytest.fixture(scope="session")
def two_disks_pain(two_disks):
    """Sampled constants on the small disk and the modified g_1 built from them."""
    from lasserre_lab.certchecks import (build_modified_constraints, estimate_box, sample_set, sample_zero_set,
                                         select_pain_constants)
    box = estimate_box(two_disks)
    C = sample_set(two_disks, box, region=small_disk)
    zeros = {1: sample_zero_set(two_disks, 1, box, region=small_disk)}
    constants = select_pain_constants(two_disks, C, [1], zeros)
    (mod,) = build_modified_constraints(two_disks, constants, [1])
    return constants, mod, C, zeros


# ---------------------------------------------------------------------------
# acceptance bookkeeping: one PASS/FAIL line per criterion in the summary

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record ``(ok, seconds, detail)`` for a named part of an acceptance criterion."""
    results = request.config.stash[ACCEPTANCE_KEY]

    def record(number, part, ok, seconds, detail=""):
        results.setdefault(number, []).append((part, bool(ok), seconds, detail))
        print(f"criterion {number} {part}: {'PASS' if ok else 'FAIL'} ({seconds:.1f} s) {detail}")
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        parts = results[number]
        ok = all(p[1] for p in parts)
        secs = sum(p[2] for p in parts)
        detail = "; ".join(f"{p[0]} {'ok' if p[1] else 'FAILED'}" + (f" ({p[3]})" if p[3] else "") for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number} [{secs:.1f} s]: {detail}")
