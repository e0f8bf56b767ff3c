"""Shared fixtures: the baseline parameter set used across the suite.

The baseline (B0) is a 7650 kg vehicle with C = 0.05 N m^2/A^2, R = 9.71 ohm,
nominal airgap 15 mm, excited at Omega = 80 rad/s with amplitude 5 mm.
"""

import math

import pytest

from levstab import ExcitationParams, PhysicalParams


@pytest.fixture(scope="session")
def b0():
    return PhysicalParams(m=7650.0, C=0.05, R=9.71, z0=0.015)


@pytest.fixture(scope="session")
def exc_inphase():
    """theta = 0: supports move together; principal resonances only."""
    return ExcitationParams(A=0.005, Omega=80.0, theta=0.0)


@pytest.fixture(scope="session")
def exc_quarter():
    """theta = pi/2: all four resonances active."""
    return ExcitationParams(A=0.005, Omega=80.0, theta=math.pi / 2)


@pytest.fixture(scope="session")
def exc_antiphase():
    """theta = pi: combination resonances only."""
    return ExcitationParams(A=0.005, Omega=80.0, theta=math.pi)


@pytest.fixture(scope="session")
def exc_still():
    """A = 0: no parametric forcing, constant coefficients."""
    return ExcitationParams(A=0.0, Omega=80.0, theta=0.0)


@pytest.fixture(scope="session")
def battery_report(b0, exc_quarter):
    """Full cross-validation battery at B0, theta = pi/2 (runs once)."""
    from levstab.validation import run_battery

    return run_battery(b0, exc_quarter)
