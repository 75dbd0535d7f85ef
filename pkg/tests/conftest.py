import pytest

from cuspwave import VorticitySpec, make_vorticity

# criterion id -> (passed, detail); filled by test_acceptance and echoed at the end
VERDICTS = {}

R_LINEAR = 1.035556  # zero vorticity, lambda_+ = 0.823610..., lambda_- = 1.2


def record(cid, passed, detail):
    VERDICTS[cid] = (bool(passed), detail)
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(VERDICTS, key=lambda c: int(c.split()[0])):
        ok, detail = VERDICTS[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {cid}: {detail}")


@pytest.fixture(scope="session")
def v_zero():
    return make_vorticity(VorticitySpec.zero())


@pytest.fixture(scope="session")
def v_half():
    return make_vorticity(VorticitySpec.constant(0.5))


@pytest.fixture(scope="session")
def v_neg():
    return make_vorticity(VorticitySpec.constant(-1.0))
