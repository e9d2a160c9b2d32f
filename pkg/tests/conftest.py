import pytest

from vhsjet.cech_ks import abelian_model, annulus_ksform, annulus_model
from vhsjet.cech_ks.classes import theta_retract
from vhsjet.cech_ks.ops import potential_ksform
from vhsjet.exact_series import QI


@pytest.fixture(scope="session")
def annulus():
    m = annulus_model(3)
    return m, annulus_ksform(m, 3)


@pytest.fixture(scope="session")
def torus():
    m = abelian_model("torus", 2)
    H = theta_retract(m).H[1]
    ks = potential_ksform(m, 2, 2, {(1, 0): H[0], (0, 1): H[1] + H[0], (2, 0): H[1],
                                    (1, 1): H[2] * QI(3)})
    return m, ks
