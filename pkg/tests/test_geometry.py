import numpy as np
import pytest

from blowup_lab.errors import ValidationError
from blowup_lab.geometry import Annulus, Ball, Interval, Omega0, make_domain


def test_interval_distance():
    I = Interval(0.0, 2.0)
    np.testing.assert_allclose(I.distance(np.array([0.0, 0.5, 1.0, 1.9])), [0.0, 0.5, 1.0, 0.1])
    assert I.max_distance == 1.0


def test_ball_and_annulus():
    B = Ball(3, 2.0)
    assert float(B.distance(0.5)) == 1.5
    assert float(B.laplacian_of_distance(0.5)) == pytest.approx(-2.0 / 1.5)
    A = Annulus(2, 1.0, 3.0)
    np.testing.assert_allclose(A.distance(np.array([1.0, 2.0, 2.5])), [0.0, 1.0, 0.5])


def test_make_domain():
    assert isinstance(make_domain("ball", 2, [1.0]), Ball)
    with pytest.raises(ValidationError):
        make_domain("torus")


def test_omega0_validation():
    Omega0(0.25, 0.75).validate(Interval(0.0, 1.0))
    with pytest.raises(ValidationError):
        Omega0(0.0, 0.75).validate(Interval(0.0, 1.0))
    with pytest.raises(ValidationError):
        Omega0(0.2, 0.7).validate(Interval(0.0, 1.0))
    assert isinstance(Omega0(0.0, 0.5).as_domain(Ball(3, 1.0)), Ball)
