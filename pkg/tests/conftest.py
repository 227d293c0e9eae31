import time

import pytest

from satotate import frobenius as fr
from satotate import lie_core as lc

ACCEPTANCE_LINES = []
TIMINGS = {}


def trivial_multiplicity(rs, n):
    """Trivial constituents of V^{(x) n} for the standard V, by the Brauer-Klimyk formula."""
    lam = lc.Weight.of(rs, (1,) + (0,) * (rs.q - 1))
    base = lc.weight_multiset(rs, lam)
    power = {(0,) * rs.q: 1}
    for _ in range(n):
        nxt = {}
        for u, c in power.items():
            for v, d in base.items():
                k = tuple(a + b for a, b in zip(u, v))
                nxt[k] = nxt.get(k, 0) + c * d
        power = nxt
    rho = tuple(int(x) for x in lc._matvec(rs.torus_basis, rs.rho))
    total = 0
    for w, s in zip(rs.torus_action(), rs.weyl_signs):
        wr = tuple(int(x) for x in lc._matvec(w, rho))
        total += s * power.get(tuple(a - b for a, b in zip(wr, rho)), 0)
    return total


def _timed(key, fn):
    start = time.perf_counter()
    out = fn()
    TIMINGS[key] = time.perf_counter() - start
    return out


@pytest.fixture(scope="session")
def seq_11a1_1e6():
    return _timed("11a1_1e6", lambda: fr.trace_sequence(fr.curve_lookup("11a1"), 10**6))


@pytest.fixture(scope="session")
def seq_37a1_1e4():
    return fr.trace_sequence(fr.curve_lookup("37a1"), 10**4)


@pytest.fixture(scope="session")
def seq_cm_1e8():
    return _timed("cm_1e8", lambda: fr.trace_sequence(fr.curve_lookup("y^2=x^3-x"), 10**8, strategy="cm"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
