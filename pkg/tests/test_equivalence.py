import pytest
import sympy
from hypothesis import given, settings, strategies as st

from symbolic.jet import EQUIVALENCE_CHART, POINT_CHART, VectorField
from symbolic.kernel import normalize
from symmetry import equivalence
from symmetry.equivalence import PROJECTED_CHART, build_Y, equiv_conditions, satisfies
from symmetry.optimal_system import optimal_system
from symmetry.classification import z_list

t, x, u, f, g = sympy.symbols('t x u f g')
f_x, f_u = sympy.symbols('f_x f_u')


@pytest.fixture(scope='module')
def scope():
    return equivalence.equivalence_scope()


def test_generic_prolongation(scope):
    field = VectorField(EQUIVALENCE_CHART, {
        name: scope.function(symbol).at()
        for name, symbol in (('t', 'xi'), ('x', 'tau'), ('u', 'phi'), ('f', 'chi'), ('g', 'eta'))
    })
    prolonged = equivalence.equiv_prolong(field)
    chi, tau, phi = (scope.function(n).at() for n in ('chi', 'tau', 'phi'))
    expected = sympy.diff(chi, t) - f_x * sympy.diff(tau, t) - f_u * sympy.diff(phi, t)
    assert normalize(prolonged.chi_t - expected) == 0


def test_generic_field_reproduces_stationarity(scope):
    field = VectorField(EQUIVALENCE_CHART, {
        name: scope.function(symbol).at()
        for name, symbol in (('t', 'xi'), ('x', 'tau'), ('u', 'phi'), ('f', 'chi'), ('g', 'eta'))
    })
    system = equiv_conditions(field)
    transport = {
        expr for tag, expr in system.residuals if 'transport' in tag and len(tag) == 1
    }
    derivatives = {sympy.diff(scope.function(n).at(), t) for n in ('chi', 'eta')}
    assert {normalize(e) for e in derivatives} <= transport
    single = {
        expr for tag, expr in system.residuals
        if tag.get('transport') == 'f_t' and set(tag) == {'transport', 'f_x'}
    }
    assert {-normalize(sympy.diff(scope.function('tau').at(), t))} == single


def test_role_violation_is_refused():
    field = VectorField(EQUIVALENCE_CHART, {'t': f})
    with pytest.raises(equivalence.RoleViolation):
        equivalence.equiv_prolong(field)


@pytest.fixture(scope='module')
def family_scope():
    return equivalence.equivalence_scope({'tau': ('x', 'u'), 'phi': ('x', 'u')})


@pytest.mark.parametrize('kind, name', [(2, 'tau'), (3, 'phi')])
def test_generator_families_are_equivalences(family_scope, kind, name):
    field = build_Y(kind, family_scope.function(name).at())
    assert satisfies(equiv_conditions(field))


def test_time_family_allows_only_uniform_time_scaling(family_scope):
    field = build_Y(1, family_scope.function('xi').at())
    system = equiv_conditions(field)
    assert satisfies(system, 'equation')
    assert not satisfies(system, 'transport')
    linear = build_Y(1, family_scope.symbol('c1') * t + family_scope.function('phi').at())
    assert satisfies(equiv_conditions(linear))


def test_time_dependent_coefficient_breaks_transport():
    system = equiv_conditions(build_Y(2, t * x))
    assert not satisfies(system, 'transport')


@pytest.mark.parametrize('name', list(equivalence.L10))
def test_l10_fields_are_equivalences(name):
    field = equivalence.l10_basis()[name]
    system = equiv_conditions(field)
    assert all(normalize(expr) == 0 for expr in system.expressions)


def test_l10_fields_are_generator_combinations():
    basis = equivalence.l10_basis()
    assert basis['X5'] == build_Y(1, x)
    assert basis['X9'] == build_Y(3, x)
    assert basis['X7'] == build_Y(2, x)


def test_projection_drops_coordinates():
    field = equivalence.l10_basis()['X4'] + equivalence.l10_basis()['X10']
    projected = equivalence.project(field)
    assert projected == VectorField(PROJECTED_CHART, {'u': u, 'g': -g})
    assert equivalence.dropped(field) == {'t': t}
    assert equivalence.project(field, 'txu') == VectorField(POINT_CHART, {'t': t, 'u': u})


@settings(max_examples=30, deadline=None)
@given(weights=st.lists(st.integers(-3, 3), min_size=10, max_size=10))
def test_projection_is_idempotent(weights):
    basis = equivalence.l10_basis()
    field = sum(
        (w * basis[n] for w, n in zip(weights, basis.names)),
        VectorField(EQUIVALENCE_CHART),
    )
    once = equivalence.project(field)
    assert equivalence.project(once) == once
    assert equivalence.dropped(once) == {}


def test_proportionality():
    v = VectorField(PROJECTED_CHART, {'x': 1, 'g': g})
    assert equivalence.proportionality(v, v) == 'match'
    assert equivalence.proportionality(v, 3 * v) == 'match-up-to-factor'
    assert equivalence.proportionality(v, x * v) == 'mismatch'
    assert equivalence.proportionality(v, VectorField(PROJECTED_CHART, {'x': 1})) == 'mismatch'


def test_projection_list_is_diffed():
    entries = {e.name: e.field() for e in optimal_system()}
    printed = [{'name': n, **item} for n, item in z_list().items()]
    frame = equivalence.compare_projections(entries, printed)
    status = frame.set_index('name')['status']
    assert status['Z1'] == 'match'
    assert status['Z9'] == 'match'
    assert len(frame) == 19
