import pytest
import sympy
from hypothesis import given, settings, strategies as st

from symbolic.kernel import normalize
from symbolic.jet import (
    POINT_CHART, EQUIVALENCE_CHART, Chart, ChartMismatch, ProlongationError, VectorField,
    apply, prolong1, total_derivative,
)

t, x, u, u_t, u_x, u_xx = sympy.symbols('t x u u_t u_x u_xx')


def test_chart_names_mixed_jets_once():
    assert POINT_CHART.jets(2) == ('u_tt', 'u_tx', 'u_xx')
    assert POINT_CHART.jet('u', 'x', 't') == 'u_tx'
    assert EQUIVALENCE_CHART.all_jets == ('f_t', 'f_x', 'f_u', 'g_t', 'g_x', 'g_u')


def test_field_arithmetic_drops_zero_coefficients():
    v = VectorField(POINT_CHART, {'t': 1, 'x': x})
    w = VectorField(POINT_CHART, {'x': -x, 'u': u})
    total = v + w
    assert total.coefficients == {'t': 1, 'u': u}
    assert (total - w) == v
    assert (v * 0).is_zero()
    assert total.render() == '(1)*d_t + (u)*d_u'


def test_field_rejects_foreign_coordinates():
    with pytest.raises(ChartMismatch):
        VectorField(POINT_CHART, {'y': 1})
    with pytest.raises(ChartMismatch):
        VectorField(POINT_CHART, {'t': 1}) + VectorField(EQUIVALENCE_CHART, {'t': 1})


def test_field_json_carries_the_chart(scope):
    v = VectorField(POINT_CHART, {'x': 't', 'u': 1})
    data = v.to_json()
    assert data == {'chart': ['t', 'x', 'u'], 'coeffs': {'x': 't', 'u': '1'}}
    assert VectorField.from_json(data, scope) == v
    with pytest.raises(ChartMismatch):
        VectorField.from_json({'chart': ['x', 'u'], 'coeffs': {}}, scope)


def test_apply_is_a_derivation():
    v = VectorField(POINT_CHART, {'t': t, 'x': x})
    assert apply(v, t * x**2) == 3 * t * x**2


def test_total_derivative():
    assert total_derivative(u * u_x, 'x') == u_x**2 + u * u_xx
    with pytest.raises(ChartMismatch):
        total_derivative(u_xx, 'x')


def test_prolongation_of_time_scaling():
    prolonged = prolong1(VectorField(POINT_CHART, {'t': t}))
    assert prolonged.phi_t == -u_t
    assert prolonged.phi_x == 0


def test_galilean_boost_leaves_inviscid_burgers_invariant():
    boost = prolong1(VectorField(POINT_CHART, {'x': t, 'u': 1}))
    assert boost.phi_t == -u_x
    assert boost.apply(u_t + u * u_x) == 0


def test_prolongation_refuses_jet_coefficients():
    with pytest.raises(ProlongationError):
        prolong1(VectorField(POINT_CHART, {'x': u_x}))


_monomials = st.lists(
    st.tuples(st.integers(-4, 4), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)),
    min_size=1, max_size=4,
)


def _polynomial(terms, a, b, c):
    return sum(k * a**i * b**j * c**m for k, i, j, m in terms)


@settings(max_examples=30, deadline=None)
@given(p=_monomials, q=_monomials, weights=st.tuples(*[st.integers(-3, 3)] * 3))
def test_apply_satisfies_the_leibniz_rule(p, q, weights):
    v = VectorField(POINT_CHART, dict(zip(('t', 'x', 'u'), weights)))
    a, b = _polynomial(p, t, x, u), _polynomial(q, x, u, t)
    assert apply(v, a * b) == normalize(a * apply(v, b) + b * apply(v, a))


@settings(max_examples=30, deadline=None)
@given(p=_monomials, q=_monomials)
def test_prolongation_is_linear(p, q):
    v = VectorField(POINT_CHART, {'t': _polynomial(p, t, x, u), 'u': x})
    w = VectorField(POINT_CHART, {'x': _polynomial(q, u, t, x)})
    summed = prolong1(v + w).jets
    for name in ('u_t', 'u_x'):
        assert summed[name] == normalize(prolong1(v).jets[name] + prolong1(w).jets[name])
    assert prolong1(3 * v).jets['u_x'] == normalize(3 * prolong1(v).jets['u_x'])


@pytest.mark.parametrize('coefficients, expected', [
    ({'u': u}, (u_t, u_x)),
    ({'t': t, 'u': u}, (0, u_x)),
])
def test_prolongation_examples(coefficients, expected):
    prolonged = prolong1(VectorField(POINT_CHART, coefficients))
    assert (prolonged.phi_t, prolonged.phi_x) == expected


@settings(max_examples=30, deadline=None)
@given(p=_monomials)
def test_total_derivatives_commute(p):
    chart = Chart(('t', 'x'), ('u',), order=3)
    expr = _polynomial(p, u, u_x, t) + x * u_t
    d_tx = total_derivative(total_derivative(expr, 't', chart), 'x', chart)
    d_xt = total_derivative(total_derivative(expr, 'x', chart), 't', chart)
    assert d_tx == d_xt
