import numpy as np
import pytest

from sphmean.data_model import phantom
from sphmean.errors import ParseError
from sphmean.fieldio import PolarField, angles_to_directions, directions_to_angles, read_polar_field, write_polar_field
from sphmean.harmonics import AngularSampleSet, ModeIndex


@pytest.mark.parametrize("n", [2, 3])
def test_angle_round_trip(n):
    ang = AngularSampleSet.build(n, 8)
    d = angles_to_directions(directions_to_angles(ang.nodes))
    assert np.allclose(d, ang.nodes, atol=1e-14)


@pytest.mark.parametrize("n,order", [(2, 16), (3, 6)])
def test_polar_field_round_trip(n, order, tmp_path):
    field = phantom("mode-bump", {"m": 2, "l": 1, "rc": 1.0, "w": 0.4}, n=n)
    ang = AngularSampleSet.build(n, order)
    pf = PolarField.sample(field, np.linspace(0.6, 1.0, 5), ang)
    path = tmp_path / "f.csv"
    write_polar_field(pf, path)
    back = read_polar_field(path, n)
    assert np.array_equal(back.radii, pf.radii)
    assert len(back.angular) == len(ang)
    assert np.allclose(back.values, pf.values, atol=1e-15)


def test_profiles_recover_mode():
    field = phantom("mode-bump", {"m": 2, "l": 1, "rc": 1.0, "w": 0.4}, n=2)
    r = np.linspace(0.6, 1.0, 5)
    pf = PolarField.sample(field, r, AngularSampleSet.build(2, 16))
    prof = pf.profiles(3)
    mode = ModeIndex(2, 2, 1)
    assert np.allclose(prof[mode].values, field.exact_profiles[mode](r), atol=1e-12)
    assert np.max(np.abs(prof[ModeIndex(2, 1, 1)].values)) < 1e-12


@pytest.mark.parametrize(
    "text,line",
    [
        ("r,theta,val\n1,0,1\n", 1),
        ("r,theta,value\n1,0\n", 2),
        ("r,theta,value\n1,0,abc\n", 2),
        ("r,theta,value\n1,0,nan\n", 2),
    ],
)
def test_parse_errors_carry_lines(text, line, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        read_polar_field(path, 2)
    assert info.value.line == line


def test_structure_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("r,theta,value\n")
    with pytest.raises(ParseError):
        read_polar_field(path, 2)
    # two rings of unequal size
    path.write_text("r,theta,value\n1,0,1\n1,3.14159,1\n2,0,1\n")
    with pytest.raises(ParseError):
        read_polar_field(path, 2)
    # ring of 4 points whose directions are not the 4-point nodes
    rows = "".join(f"1,{t},0\n" for t in (0.1, 1.2, 2.3, 3.4))
    path.write_text("r,theta,value\n" + rows)
    with pytest.raises(ParseError):
        read_polar_field(path, 2)
