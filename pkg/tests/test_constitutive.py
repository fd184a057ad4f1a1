import numpy as np
import pytest

from oifem.constitutive import (
    check_coercivity,
    check_monotonicity,
    check_potential,
    laws_by_name,
    make_power_laws,
    make_prototype_laws,
)
from oifem.nfunction import conjugate, cosh_nfunction, power_nfunction

PROTO = make_prototype_laws()
P3 = make_power_laws(3.0)


def test_prototype_values():
    np.testing.assert_allclose(PROTO.omega1.h([1.0, 0.0]), [np.sinh(1.0), 0.0], rtol=1e-15)
    assert PROTO.omega1.h([1.0, 0.0])[0] == pytest.approx(1.1752, abs=1e-4)
    assert float(PROTO.interface.b(1.0)) == pytest.approx(np.e - 1, rel=1e-15)
    assert float(PROTO.interface.g(np.e - 1)) == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_array_equal(PROTO.omega2.h([0.3, -2.1]), [0.3, -2.1])


@pytest.mark.parametrize("law", [PROTO.omega1, PROTO.omega2, P3.omega1,
                                 make_power_laws(1.5).omega1])
def test_volume_roundtrips(law):
    v = np.array([0.3, -2.1])
    np.testing.assert_allclose(law.f(law.h(v)), v, rtol=1e-12)
    rng = np.random.default_rng(1)
    vs = rng.uniform(-20, 20, size=(200, 2))
    np.testing.assert_allclose(law.f(law.h(vs)), vs, rtol=1e-9)
    js = rng.uniform(-1, 1, size=(200, 2)) * np.geomspace(1e-6, np.sinh(29.0), 200)[:, None]
    np.testing.assert_allclose(law.h(law.f(js)), js, rtol=1e-9)
    np.testing.assert_array_equal(law.h([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(law.f([0.0, 0.0]), [0.0, 0.0])


@pytest.mark.parametrize("law", [PROTO.interface, P3.interface])
def test_interface_roundtrip(law):
    z = np.linspace(-30, 30, 121)
    np.testing.assert_allclose(law.g(law.b(z)), z, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(law.b(-z), -law.b(z))
    assert np.all(np.diff(law.b(z)) > 0)
    assert float(law.b(0.0)) == 0.0


def test_power_laws():
    laws = make_power_laws(2.0)
    v = np.array([3.0, 4.0])
    np.testing.assert_array_equal(laws.omega1.h(v), v)
    np.testing.assert_array_equal(P3.omega1.h([2.0, 0.0]), [4.0, 0.0])
    np.testing.assert_allclose(P3.omega1.f(P3.omega1.h([1.0, 1.0])), [1.0, 1.0], rtol=1e-14)
    with pytest.raises(ValueError):
        make_power_laws(1.0)


def test_laws_by_name():
    assert laws_by_name("sinh-bv").name == "sinh-bv"
    assert laws_by_name("power:3").omega1.potential.meta["p"] == 3.0
    for bad in ("power:0.5", "power:x", "cubic"):
        with pytest.raises(ValueError):
            laws_by_name(bad)


def test_series_branch_near_zero():
    law = PROTO.omega1
    v = np.array([3e-5, 4e-5])
    t = 5e-5
    np.testing.assert_allclose(law.h(v), np.sinh(t) / t * v, rtol=1e-15)
    T = law.tangent(v)
    n = v / t
    expected = np.cosh(t) * np.outer(n, n) + np.sinh(t) / t * (np.eye(2) - np.outer(n, n))
    np.testing.assert_allclose(T, expected, rtol=1e-14)
    np.testing.assert_allclose(law.tangent(np.zeros(2)), np.eye(2))


def test_radial_consistency():
    rng = np.random.default_rng(2)
    for law in (PROTO.omega1, P3.omega1):
        for v in rng.uniform(-5, 5, size=(20, 2)):
            t = np.linalg.norm(v)
            np.testing.assert_allclose(law.h(v), law.potential.deriv(t) * v / t, rtol=1e-14)


def test_tangent_matches_finite_differences():
    rng = np.random.default_rng(3)
    eps = 1e-6
    for law in (PROTO.omega1, P3.omega1):
        for v in rng.uniform(-3, 3, size=(10, 2)):
            T = law.tangent(v)
            fd = np.column_stack([(law.h(v + eps * e) - law.h(v - eps * e)) / (2 * eps)
                                  for e in np.eye(2)])
            np.testing.assert_allclose(T, fd, rtol=1e-6, atol=1e-8)


def test_fenchel_residual_examples():
    law = PROTO.omega1
    # sinh(1) * 1 == (cosh 1 - 1) + Phi*(sinh 1), with Phi* from the numeric path
    star = conjugate(cosh_nfunction(), np.sinh(1.0), numeric=True)
    assert abs(np.sinh(1.0) - (np.cosh(1.0) - 1) - star) < 1e-9
    assert check_coercivity(law, [[1.0, 0.0]]) < 1e-9
    assert check_coercivity(law, [[0.0, 0.0]]) == 0.0
    assert check_coercivity(make_power_laws(2.0).omega1, [[3.0, 4.0]]) == 0.0


def test_fenchel_residual_bound_on_probes():
    rng = np.random.default_rng(4)
    probes = rng.uniform(-20, 20, size=(200, 2))
    probes = probes[np.linalg.norm(probes, axis=1) <= 30]
    for law in (PROTO.omega1, PROTO.omega2, P3.omega1):
        pair = np.sum(law.h(probes) * probes, axis=1)
        worst = max(check_coercivity(law, [v]) / (1 + p) for v, p in zip(probes, pair))
        assert worst <= 1e-8
    z = np.linspace(-25, 25, 51)
    assert check_coercivity(PROTO.interface, z) <= 1e-8 * (1 + np.max(PROTO.interface.b(z) * z))


def test_growth_inequality_with_reference():
    # h(v).v >= alpha (Phi(v) + Phi*(h(v))) - C holds with the law's own potential
    probes = np.random.default_rng(5).uniform(-10, 10, size=(50, 2))
    assert check_coercivity(PROTO.omega1, probes, reference=cosh_nfunction()) <= 0.0
    # a faster reference N-function violates it
    assert check_coercivity(PROTO.omega2, probes, reference=power_nfunction(4.0)) > 0.0
    with pytest.raises(ValueError):
        check_coercivity(PROTO.omega1, [[40.0, 0.0]])


def test_strict_monotonicity():
    rng = np.random.default_rng(6)
    pairs = rng.uniform(-10, 10, size=(300, 2, 2))
    for law in (PROTO.omega1, PROTO.omega2, P3.omega1, make_power_laws(1.5).omega1):
        assert check_monotonicity(law, pairs) > 0
    zpairs = rng.uniform(-20, 20, size=(300, 2))
    assert check_monotonicity(PROTO.interface, zpairs) > 0


def test_potential_derivative():
    rng = np.random.default_rng(7)
    for law in (PROTO.omega1, PROTO.omega2, P3.omega1):
        for _ in range(20):
            v, u = rng.uniform(-3, 3, size=(2, 2))
            assert check_potential(law, v, u) <= 1e-5 * (1 + abs(np.dot(law.h(v), u)))
    assert check_potential(PROTO.interface, 0.7, -1.3) <= 1e-5
