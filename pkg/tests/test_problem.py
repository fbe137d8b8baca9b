import math

import pytest
from hypothesis import given, strategies as st

from cellflux.problem import (
    ConfigError,
    DomainError,
    DomainSpec,
    NonlinearitySpec,
    ProblemSpec,
    ball_volume,
    eval_f,
    nondimensionalize,
    sphere_area,
    thresholds,
)


def spec(kind, m=1.0, **kw):
    return NonlinearitySpec(kind=kind, m=m, **kw)


@pytest.mark.parametrize(
    "kind,m,s,expected",
    [
        ("signed_power", 2.0, 3.0, 9.0),
        ("signed_power", 1.0, -2.0, -2.0),
        ("negative_power", 1.0, 2.0, -2.0),
        ("sublinear_power", 0.5, 4.0, 2.0),
    ],
)
def test_eval_f_table(kind, m, s, expected):
    assert eval_f(spec(kind, m), s) == pytest.approx(expected, rel=1e-15)


def test_eval_f_zero_everywhere():
    for kind, m in [("signed_power", 2.0), ("negative_power", 1.5),
                    ("sublinear_power", 0.5), ("saturating", 1.0)]:
        assert eval_f(spec(kind, m), 0.0) == 0.0


def test_eval_f_domain_errors():
    with pytest.raises(DomainError):
        eval_f(spec("negative_power", 2.0), -1.0)
    with pytest.raises(DomainError):
        eval_f(spec("sublinear_power", 0.5), -0.1)
    with pytest.raises(DomainError):
        eval_f(spec("signed_power", 1.0), math.inf)


def test_bad_specs_rejected():
    with pytest.raises(ConfigError):
        NonlinearitySpec(kind="cubic_spline")
    with pytest.raises(ConfigError):
        NonlinearitySpec(kind="sublinear_power", m=1.0)
    with pytest.raises(ConfigError):
        NonlinearitySpec(kind="signed_power", m=0.5)
    with pytest.raises(ConfigError):
        NonlinearitySpec(kind="saturating", level=0.0)
    with pytest.raises(ConfigError):
        DomainSpec(geometry="interval", L=-1.0)
    with pytest.raises(ConfigError):
        DomainSpec(geometry="cylinder", L=1.0, R=1.0, n=1)


@given(st.floats(1.0, 4.0), st.floats(1e-3, 1e3))
def test_signed_power_is_odd(m, s):
    f = spec("signed_power", m)
    assert eval_f(f, -s) == pytest.approx(-eval_f(f, s), rel=1e-12)


@given(
    st.sampled_from(["signed_power", "sublinear_power", "saturating"]),
    st.floats(0.0, 50.0),
    st.floats(0.0, 50.0),
)
def test_monotone_kinds_nondecreasing(kind, s1, s2):
    m = 0.5 if kind == "sublinear_power" else 1.5
    f = spec(kind, m)
    lo, hi = sorted((s1, s2))
    assert eval_f(f, lo) <= eval_f(f, hi) + 1e-12


def test_geometry_volumes():
    assert sphere_area(0) == pytest.approx(2.0)
    assert sphere_area(1) == pytest.approx(2.0 * math.pi)
    assert ball_volume(1, 0.5) == pytest.approx(1.0)  # interval (-R, R)
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    d = DomainSpec(geometry="cylinder", L=2.0, R=1.0, n=3)
    assert d.volume == pytest.approx(2.0 * math.pi)
    assert DomainSpec(geometry="interval", L=3.0).volume == 3.0


@pytest.mark.parametrize(
    "chi,a_frac,volume,m,expected",
    [(1, 1, 1, 2, 1.0), (2, 0.5, 1, 1, 1.0), (1, 1, 4, 2, 2.0)],
)
def test_nondimensionalize(chi, a_frac, volume, m, expected):
    assert nondimensionalize(chi, a_frac, volume, m) == pytest.approx(expected, rel=1e-14)


def test_nondimensionalize_rejects_nonpositive():
    with pytest.raises(DomainError):
        nondimensionalize(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        nondimensionalize(1.0, 1.0, -2.0, 1.0)


def interval_problem(m, L=1.0, kind="signed_power"):
    return ProblemSpec(
        nonlinearity=NonlinearitySpec(kind=kind, m=m),
        domain=DomainSpec(geometry="interval", L=L),
    )


def test_thresholds_m2_values():
    # N0 = m^(-1/m); ell, K from the explicit superquadratic construction
    t = thresholds(interval_problem(2.0), M=0.5, phi0=0.0, p=2.0)
    assert t.N0 == pytest.approx(0.7071067811865476, abs=1e-15)
    assert t.ell == pytest.approx(0.03125, abs=1e-15)  # min(1/2, 2^-3 * 0.25)
    assert t.K == pytest.approx(0.0078125, abs=1e-15)
    assert t.K0_lyapunov == pytest.approx(2.0)
    assert t.small_data_radius == pytest.approx(2.0**-0.5)
    assert t.critical_mass_m1 == 1.0


def test_thresholds_m1_blowup_time():
    t = thresholds(interval_problem(1.0), M=2.0, phi0=0.4, p=1.5)
    assert t.Tstar_upper_bound == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert t.ell is None and t.K is None  # not applicable at m = 1
    t2 = thresholds(interval_problem(1.0), M=0.9, phi0=0.4, p=1.5)
    assert math.isinf(t2.Tstar_upper_bound)  # no bound below critical mass
    t3 = thresholds(interval_problem(1.0), M=2.0, phi0=1.5, p=1.5)
    assert math.isinf(t3.Tstar_upper_bound)  # moment above M L / 2


def test_thresholds_cylinder_needs_M0():
    p = ProblemSpec(
        nonlinearity=NonlinearitySpec(kind="signed_power", m=2.0),
        domain=DomainSpec(geometry="cylinder", L=1.0, R=1.0, n=3),
    )
    with pytest.raises(DomainError):
        thresholds(p, M=1.0, phi0=0.0, p=2.0)
    t = thresholds(p, M=1.0, phi0=0.0, p=2.0, M0=2.0)
    B = math.pi
    assert t.ell == pytest.approx(min(0.5, 1.0 / (4 * B * 2.0), 2.0**-3 / B))
    assert t.K == pytest.approx(0.5 * t.ell)


def test_thresholds_sublinear_has_no_lyapunov_constant():
    t = thresholds(interval_problem(0.5, kind="sublinear_power"), M=50.0, phi0=0.0, p=0.0)
    assert t.K0_lyapunov is None and t.small_data_radius is None


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_half_moment_bound_scales_linearly_in_L(M, L):
    t1 = thresholds(interval_problem(1.0, L=L), M=M, phi0=0.0, p=1.5)
    t2 = thresholds(interval_problem(1.0, L=2 * L), M=M, phi0=0.0, p=1.5)
    assert t2.half_moment_bound == 2.0 * t1.half_moment_bound  # exact doubling


@given(st.floats(1.0 + 1e-6, 6.0), st.floats(0.05, 20.0), st.floats(0.1, 10.0))
def test_K_at_most_quarter_ML(m, M, L):
    t = thresholds(interval_problem(m, L=L), M=M, phi0=0.0, p=1.5 * m)
    assert t.K <= M * L / 4.0 + 1e-15  # ell <= L/2 always
