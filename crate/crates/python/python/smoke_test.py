"""Smoke test for the csm_bounds extension.

Run after `maturin develop` in crates/python, or point PYTHONPATH at a
directory holding the built `csm_bounds` shared library.
"""

import math

import csm_bounds as csm


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    c = csm.CouplingSet.integers([1, 2, 3])
    assert len(c) == 3 and c.sigma(2) == 14.0

    r = csm.solve_bound(["Iz"], c)
    assert close(r.value, 1 / 16), r
    assert csm.solve_bound("Iz,IzH0", csm.CouplingSet.integers([1, 1])).value * 52 - 5 < 1e-12

    one = csm.CouplingSet([1.0])
    assert csm.simple_bound(one) == 0.125
    assert close(csm.ed_persisting_correlation(one), 0.125)

    assert close(csm.element("Iz", "IzH0^2", csm.CouplingSet.integers([1, 2])), 33 / 64)

    exp = csm.CouplingSet.exponential(64, 1.0)
    sets = {name: csm.solve_bound(csm.named_set(name, 64), exp).value for name in ("basic3", "all6-zero-field")}
    assert 0 < sets["basic3"] <= sets["all6-zero-field"] < 0.25, sets

    bb = csm.field_field_bound(csm.CouplingSet.exponential(32, 2.0))
    assert "APPROXIMATE" in bb.flags

    assert abs(csm.infinite_field_bound(1.0, 1e6) - 0.25) < 1e-6
    assert close(csm.simple_bound_limit(1.0), csm.infinite_field_bound(1.0, 0.0), 1e-9)

    (a, _), (b, _) = csm.fit_log_over_x([(x, 0.0553 * math.log(x / 0.137) / x) for x in (6, 8, 11, 16, 22)])
    assert close(a, 0.0553, 1e-9) and close(b, 0.137, 1e-9)

    try:
        csm.solve_bound(["IQz"], c, h=0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("non-conserved quantity accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
