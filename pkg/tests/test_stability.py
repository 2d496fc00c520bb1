import math

import numpy as np
import pytest

from popharvest import stability as st
from popharvest.maps import PairParams, SingleParams, State, step_pair

Tag = st.Tag


def _names(reports):
    return {r.name: r for r in reports}


def test_eigen_classifier_examples():
    assert st.classify_by_eigen(np.diag([0.5, -0.5])).tag is Tag.SINK
    assert st.classify_by_eigen(np.diag([2.0, 0.5])).tag is Tag.SADDLE
    assert st.classify_by_eigen(np.diag([2.0, -3.0])).tag is Tag.SOURCE
    assert st.classify_by_eigen([[0.0, -1.0], [1.0, 0.0]]).tag is Tag.NON_HYPERBOLIC


def test_quadratic_roots_stable_form():
    r1, r2 = st.quadratic_roots(-1e8, 1.0)
    assert sorted([abs(r1), abs(r2)]) == pytest.approx([1e-8, 1e8], rel=1e-12)


@pytest.mark.parametrize(
    "p,q,tag",
    [(0.0, 0.25, Tag.SINK), (0.0, 4.0, Tag.SOURCE), (0.5, -0.75, Tag.SADDLE), (-1.0, 0.5, Tag.SINK)],
)
def test_jury_examples(p, q, tag):
    assert st.jury_classify(st.JuryQuadratic(p, q)).tag is tag


def test_jury_outside_domain_is_indeterminate():
    assert st.jury_classify(st.JuryQuadratic(-3.0, 1.0)).tag is Tag.INDETERMINATE


def test_jury_boundary_cases():
    # root at -1: F(-1) = 0
    assert st.jury_classify(st.JuryQuadratic(0.5, -0.5)).tag is Tag.NON_HYPERBOLIC
    # complex pair on the unit circle: q = 1
    assert st.jury_classify(st.JuryQuadratic(0.0, 1.0)).tag is Tag.NON_HYPERBOLIC


def test_single_examples():
    reps = _names(st.equilibria_single(SingleParams(r=1.999, k=0.8)))
    x2 = reps["x2"]
    assert x2.point.x == pytest.approx(math.log(0.999 / 0.8), abs=1e-12)
    assert x2.class_theorem.tag is Tag.SINK and x2.class_eigen.tag is Tag.SINK
    lo, hi = st.single_stability_bounds(SingleParams(r=1.999, k=0.8))
    assert lo == pytest.approx(0.01825, abs=5e-5) and hi == pytest.approx(0.999)

    reps = _names(st.equilibria_single(SingleParams(r=1.5, k=1.0)))
    assert reps["x1"].class_theorem.tag is Tag.SINK
    assert not reps["x2"].exists

    reps = _names(st.equilibria_single(SingleParams(r=2.0, k=1.0)))
    assert reps["x1"].class_theorem.tag is Tag.NON_HYPERBOLIC


def test_single_theorem_source_and_boundary():
    assert st.classify_single_theorem(SingleParams(r=3, k=0.05), "positive").tag is Tag.SOURCE
    r = 2.0
    p = SingleParams(r=r, k=(r - 1) * math.exp(-2 * r / (r - 1)))
    assert st.classify_single_theorem(p, "positive").tag is Tag.NON_HYPERBOLIC
    assert st.derivative_single(p, st.positive_equilibrium_single(p)) == pytest.approx(-1.0, abs=1e-12)


def test_harvested_single_sink():
    p = SingleParams(r=1.999, k=0.8, h=0.06)
    assert st.classify_single_theorem(p, "positive").tag is Tag.SINK
    xh = st.positive_equilibrium_single(p)
    assert abs(st.derivative_single(p, xh)) < 1


def test_derivative_single_closed_forms():
    p = SingleParams(r=2.7, k=0.4)
    assert st.derivative_single(p, 0.0) == pytest.approx(2.7 / 1.4)
    x2 = st.positive_equilibrium_single(p)
    assert st.derivative_single(p, x2) == pytest.approx((2.7 - 2.7 * x2 + x2) / 2.7)


def test_pair_scenarios():
    reps = _names(st.equilibria_pair(PairParams(r=5, k=2, a=0.1, c=0.61, d=3)))
    e2 = reps["e2"]
    assert e2.point.x == pytest.approx(0.536667, abs=1e-6) and e2.point.y > 0
    assert e2.class_theorem.tag is Tag.SINK and e2.class_eigen.tag is Tag.SINK

    reps = _names(st.equilibria_pair(PairParams(r=1.9, k=0.6, a=0.1, c=0.2, d=2)))
    assert reps["e1"].class_theorem.tag is Tag.SINK

    reps = _names(st.equilibria_pair(PairParams(r=0.9, k=0.01, a=0.1, c=0.01, d=1.2)))
    assert reps["e0"].class_theorem.tag is Tag.SINK
    assert not reps["e1"].exists


def test_jacobian_closed_forms():
    p = PairParams(r=3, k=1, a=0.2, c=0.5, d=1.5)
    J0 = st.jacobian_pair(p, State(0.0, 0.0))
    assert J0 == pytest.approx(np.diag([1.5, -0.5]))
    e1 = st.boundary_equilibrium(p)
    J1 = st.jacobian_pair(p, e1)
    assert J1[1] == pytest.approx([0.0, 1.5 * math.log(2.0) - 0.5])


def test_jacobian_matches_finite_differences():
    p = PairParams(r=3, k=1, a=0.2, c=0.5, d=1.5)
    s = np.array([0.4, 0.7])
    J = st.jacobian_pair(p, State(*s))
    eps = 1e-6
    fd = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = eps
        fd[:, j] = (np.array(step_pair(p, State(*(s + e)))) - np.array(step_pair(p, State(*(s - e))))) / (2 * eps)
    assert np.max(np.abs(J - fd)) < 1e-7


def test_e1_boundary_nonhyperbolic():
    r = 3.0
    p = PairParams(r=r, k=(r - 1) * math.exp(-2 * r / (r - 1)), a=0.1, c=0.5, d=1.0)
    assert st.classify_e1_theorem(p).tag is Tag.NON_HYPERBOLIC


def test_e2_gate():
    p = PairParams(r=5, k=2, a=0.1, c=0.61, d=3)
    const = st.InteriorConstants.of(p)
    assert p.d > const.N
    low = PairParams(r=5, k=0.5, a=0.1, c=0.01, d=0.5)
    assert st.interior_equilibrium(low) is not None
    assert low.d <= st.InteriorConstants.of(low).N
    assert st.classify_e2_theorem(low).tag is Tag.INDETERMINATE


def test_e2_characteristic_polynomial_matches_jacobian():
    p = PairParams(r=5, k=2, a=0.1, c=0.61, d=3)
    J = st.jacobian_pair(p, st.interior_equilibrium(p))
    f = st.InteriorConstants.of(p).quadratic(p)
    g = st.JuryQuadratic.from_jacobian(J)
    assert (f.p, f.q) == pytest.approx((g.p, g.q), rel=1e-10)


def test_reports_agree_when_both_classify():
    for rep in st.equilibria_pair(PairParams(r=5, k=2, a=0.1, c=0.61, d=3)):
        assert rep.agreement in (True, None)
