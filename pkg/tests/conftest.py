import numpy as np
import pytest

from gpecm.driver import reference_scenario
from gpecm.propulsion import UavParams
from gpecm.radio import RadioParams, dbm_to_watts

TABLE_UAV = dict(
    air_density=1.225,
    flat_plate_area=0.0151,
    blade_profile_power=79.8563,
    induced_power=88.6279,
    tip_speed=120.0,
    induced_velocity=4.03,
    drag_ratio=0.6,
    rotor_solidity=0.05,
    disc_area=0.503,
)


@pytest.fixture(scope="session")
def uav():
    return UavParams.from_weight(50.0, gravity=9.8, **TABLE_UAV)


@pytest.fixture(scope="session")
def radio():
    return RadioParams(
        altitude=100.0,
        tx_power=float(dbm_to_watts(20.0)),
        ref_gain=float(dbm_to_watts(-60.0)),
        noise_power=float(dbm_to_watts(-90.0)),
        bandwidth=1e6,
    )


@pytest.fixture(scope="session")
def users():
    return np.array([[300.0, -100.0], [500.0, 400.0], [100.0, 700.0], [-300.0, 400.0]])


@pytest.fixture(scope="session")
def scenario():
    return reference_scenario()
