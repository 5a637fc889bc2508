import pytest

from bayesplit.spaces import make_space


def test_ee_regions():
    sp = make_space("ee", 0.5)
    assert sp.null.is_point and sp.null.contains(0.5) and not sp.null.contains(0.51)
    sp = make_space("ee", 0.6)
    assert sp.null.contains(0.55) and sp.null.contains(0.6) and not sp.null.contains(0.61)
    assert sp.side(0.9) == 1 and sp.side(0.4) is None


def test_lsm_regions():
    sp = make_space("lsm", 0.0)
    assert sp.null.is_point and sp.null.contains((1.0, 1.0))
    sp = make_space("lsm", 3.0)
    assert sp.side((0.0, 6.0)) == 1
    eps = make_space("lsm", 1e-3)
    assert eps.null.contains(((0.0, 0.0), (0.0, 5e-4)))


def test_bounds_and_errors():
    assert make_space("ee", 0.7)[1].bounds() == (0.7, 1.0)
    assert make_space("sbm", 0.2)[0].bounds() == (0.0, 0.2)
    for model, t in (("ee", 0.4), ("sbm", 1.0), ("lsm", -1.0)):
        with pytest.raises(ValueError):
            make_space(model, t)
    with pytest.raises(ValueError):
        make_space("xyz", 0.5)
