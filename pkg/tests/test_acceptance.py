"""Acceptance battery: every cross-validation criterion must pass at its
stated tolerance on the baseline configuration (quarter-period phase lag).

Each test prints one ACCEPTANCE line naming the criterion, its status, the
measured quantities and the tolerance it was judged against.
"""

import math

import pytest

from levstab import all_ellipses, static_boundary_lines
from levstab.validation import _CRITERIA


def _fmt(val):
    if isinstance(val, float):
        return format(val, ".9g")
    if isinstance(val, dict):
        return "{" + ", ".join(f"{k}={_fmt(v)}" for k, v in val.items()) + "}"
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in val) + "]"
    return str(val)


@pytest.mark.parametrize(
    "index",
    [idx for idx, _, _, _ in _CRITERIA],
    ids=[f"{idx:02d}-{name}" for idx, name, _, _ in _CRITERIA],
)
def test_acceptance_criterion(index, battery_report):
    c = next(c for c in battery_report.criteria if c.index == index)
    line = (
        f"ACCEPTANCE {c.index:2d} {c.name}: {c.status.upper()} "
        f"measured={_fmt(c.measured)} tol={c.tolerance}"
    )
    print(line)
    if c.status == "skip":
        pytest.skip(c.reason)
    assert c.status == "pass", line


def test_acceptance_battery_complete(battery_report):
    """All thirteen criteria report, none errored out of the battery."""
    indices = sorted(c.index for c in battery_report.criteria)
    assert indices == list(range(1, 14))
    assert all(c.status in ("pass", "fail", "skip") for c in battery_report.criteria)


def test_acceptance_tongue_centers_spot_values(b0, exc_quarter):
    """Closed-form tongue centers at the baseline: Kd from the resonance
    condition, Kp on the inclined static line."""
    ells = all_ellipses(b0, exc_quarter)
    lines = static_boundary_lines(b0)
    expected_kd = {
        "a": 2354.859205056028,
        "b": 7064.577615168082,
        "c": 3785.895733702548,
        "d": 52730.72518764212,
    }
    assert lines.h0 == pytest.approx(8411.713089882463, rel=1e-12)
    assert lines.slope == pytest.approx(1.4565, rel=1e-12)
    for kind, kd in expected_kd.items():
        e = ells[kind]
        assert e.h2 == pytest.approx(kd, rel=1e-12), kind
        assert e.h1 == pytest.approx(lines.h0 + lines.slope * kd, rel=1e-12), kind
    assert ells["b"].h2 == pytest.approx(3.0 * ells["a"].h2, rel=1e-12)
    assert ells["d"].k1 / ells["c"].k1 == pytest.approx(7.0 + 4.0 * math.sqrt(3.0), rel=1e-12)
