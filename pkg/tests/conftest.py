import pytest

from pairsource.dispersion import DEFAULT_POLARIZATIONS, default_sellmeier, design_crystal
from pairsource.jsa import PumpSpec, optimal_pump_bandwidth
from pairsource.spatial import BeamSpec, CollectionSpec

LAMBDA_P = 772e-9
LENGTH = 0.03


@pytest.fixture(scope="session")
def kato():
    return default_sellmeier()


@pytest.fixture(scope="session")
def crystal(kato):
    return design_crystal(kato, DEFAULT_POLARIZATIONS, LENGTH, LAMBDA_P)


@pytest.fixture(scope="session")
def sigma_opt(crystal):
    return optimal_pump_bandwidth(crystal, LAMBDA_P).sigma


@pytest.fixture(scope="session")
def pump_opt(sigma_opt):
    return PumpSpec(LAMBDA_P, sigma_opt)


@pytest.fixture(scope="session")
def pump_033():
    """The 0.33 nm FWHM pump used for every measurement."""
    return PumpSpec.from_fwhm_wavelength(LAMBDA_P, 0.33e-9, pulse_energy=2.5e-9, rep_rate=80e6)


@pytest.fixture(scope="session")
def beam():
    return BeamSpec(296e-6, LAMBDA_P)


@pytest.fixture(scope="session")
def collection():
    return CollectionSpec.matched(187e-6)
