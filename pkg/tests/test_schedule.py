import math

import pytest

from randmult.errors import InfeasibleParameters, InvalidArgument
from randmult.schedule import Schedule, build_schedule, g_function, geometric_points, y_grid_from
from randmult.schedule import test_points as points_in


def test_desk_schedule_grid(desk_schedule):
    s = desk_schedule
    assert s.J == 5
    expected = (10, 24.87, 88.66, 522.7, 6218, 197011)
    for got, want in zip(s.y_grid, expected):
        assert got == pytest.approx(want, rel=1e-3)
    assert s.y_grid[-2] < max(s.x_points) <= s.y_grid[-1]
    assert s.x_points[-1] == 10**5 and s.x_points == geometric_points(10**5)
    assert s.x_capped and s.smoothing_X == 50
    assert s.h == pytest.approx(1.02)
    assert s.block_threshold == pytest.approx(math.sqrt(math.log(1e5) / math.log(10)))


def test_grid_recurrence():
    ys = y_grid_from(3.0, 2, 1e6)
    for j in range(1, len(ys)):
        assert math.log(ys[j]) == pytest.approx(math.exp(1 / 2) * math.log(ys[j - 1]))
    assert ys[-2] < 1e6 <= ys[-1]


def test_block_of(desk_schedule):
    s = desk_schedule
    assert s.block_of(7) == 0
    assert s.block_of(10) == 0
    assert s.block_of(11) == 1
    assert s.block_of(89) == 3
    assert s.block_of(1e9) == s.J + 1
    with pytest.raises(InvalidArgument):
        s.y(s.J + 1)
    with pytest.raises(InvalidArgument):
        s.check_block(0)


def test_text_round_trip(desk_schedule):
    again = Schedule.from_text(desk_schedule.to_text())
    assert again == desk_schedule


def test_points_definition():
    assert points_in(1.0, 1, 60) == (2, 7, 20, 54)
    brute = sorted({math.floor(math.exp(i**0.5)) for i in range(1, 200)})
    assert list(points_in(0.5, 1, 1000)) == [v for v in brute if 1 < v <= 1000]
    # for tiny c0 consecutive i^c0 are dense, so every integer is hit
    assert points_in(1e-3, 2, 30) == tuple(range(3, 31))


def test_full_scale_mode_feasibility():
    s = build_schedule(10**5, 1, 25, 1, 1e-3, 2, desk_scale=False)
    assert s.J == 18
    assert s.x_points == (3, 4, 5, 6, 7)
    with pytest.raises(InfeasibleParameters):
        build_schedule(10**5, 2, 25, 1, 1e-3, 2, desk_scale=False)
    with pytest.raises(InfeasibleParameters):
        build_schedule(10**5, 1, 12.5, 1, 1e-3, 2, desk_scale=False)


def test_validation():
    with pytest.raises(InvalidArgument):
        build_schedule(50, 3, 12.5, 2, 1e-3, 2)
    with pytest.raises(InvalidArgument):
        build_schedule(10**4, 3, 12.5, 2, 0.01, 2)
    with pytest.raises(InvalidArgument):
        build_schedule(10**4, 3, 12.5, 2, 1e-3, 1)


def test_g_function(desk_schedule):
    s = desk_schedule
    x = 10**5
    yj = s.y(2)
    assert g_function(s, x, 2, x / yj) == yj
    assert g_function(s, x, 2, 2000) == pytest.approx(50)
    assert g_function(s, x, 2, x) == s.y0
    prev = math.inf
    for z in range(1, x, 97):
        g = g_function(s, x, 2, z)
        assert s.y0 <= g <= yj and g <= prev + 1e-9
        prev = g
