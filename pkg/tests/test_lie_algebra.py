import itertools

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from symbolic.jet import POINT_CHART, EQUIVALENCE_CHART, ChartMismatch, VectorField
from symbolic.parser import parse
from symmetry import lie_algebra
from symmetry.determining import point_scope
from symmetry.equivalence import equivalence_scope, l10_basis, y_basis
from utils.utils import load_printed

t, x = sympy.symbols('t x')


@pytest.fixture(scope='module')
def l10():
    return l10_basis()


@pytest.fixture(scope='module')
def commutators(l10):
    return lie_algebra.commutator_table(l10)


@pytest.fixture(scope='module')
def adjoint(commutators):
    return lie_algebra.adjoint_table(commutators)


def test_bracket_of_point_fields():
    d_t = VectorField(POINT_CHART, {'t': 1})
    scaling = VectorField(POINT_CHART, {'t': t, 'x': x})
    assert lie_algebra.bracket(d_t, scaling) == d_t
    assert lie_algebra.bracket(scaling, d_t) == -d_t
    with pytest.raises(ChartMismatch):
        lie_algebra.bracket(d_t, VectorField(EQUIVALENCE_CHART, {'t': 1}))


def test_l10_closes(commutators):
    assert all(cell.closed for cell in commutators.cells.values())
    assert commutators.combination('X8', 'X9') == {'X7': -1, 'X10': 1}
    assert commutators.combination('X1', 'X4') == {'X1': 1}
    assert commutators.combination('X3', 'X6') == {'X1': 1}


def test_l10_antisymmetry(commutators):
    for r, c in itertools.product(commutators.names, repeat=2):
        mine = commutators.combination(r, c)
        theirs = commutators.combination(c, r)
        assert mine == {n: -v for n, v in theirs.items()}


def test_l10_jacobi(commutators):
    """ ad([a, b]) = [ad a, ad b] on every pair is Jacobi on every triple """
    names = commutators.names
    ad = {n: lie_algebra.structure_matrix(commutators, n) for n in names}
    for a, b in itertools.combinations(names, 2):
        left = sympy.zeros(len(names), len(names))
        for n, c in commutators.combination(a, b).items():
            left += c * ad[n]
        assert left == ad[a] * ad[b] - ad[b] * ad[a]


_coefficients = st.sampled_from(['0', '1', 't', 'x*u', 'u^2', 'g', 't*f', 'g_x', 'exp(x)', 'F1(u)'])


@settings(max_examples=25, deadline=None)
@given(texts=st.lists(st.tuples(_coefficients, _coefficients, _coefficients),
                      min_size=3, max_size=3))
def test_jacobi_on_fields_with_function_coefficients(texts):
    scope = point_scope()
    a, b, c = (
        VectorField(POINT_CHART, {n: parse(text, scope) for n, text in zip(('t', 'x', 'u'), row)})
        for row in texts
    )
    bracket = lie_algebra.bracket
    total = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
    assert total.is_zero()


# Unordered pairs whose printed commutator differs from the computed one.
TABLE3_ERRATA = {
    ('X4', 'X5'), ('X4', 'X6'), ('X5', 'X7'), ('X5', 'X8'), ('X6', 'X9'),
    ('X6', 'X10'), ('X7', 'X8'), ('X8', 'X9'), ('X8', 'X10'),
}


def test_printed_commutators_are_diffed(commutators):
    printed = lie_algebra.load_table(load_printed('table3.json'), equivalence_scope())
    diff = lie_algebra.compare_table(commutators, printed)
    assert len(diff) == 100
    counts = diff['status'].value_counts().to_dict()
    assert counts == {'match': 82, 'mismatch': 18}
    names = commutators.names
    mismatched = {
        tuple(sorted((r, c), key=names.index))
        for r, c in diff.loc[diff['status'] == 'mismatch', ['row', 'col']].itertuples(index=False)
    }
    assert mismatched == TABLE3_ERRATA
    assert commutators.combination('X4', 'X5') == {'X5': -1}
    assert printed.combination('X4', 'X5') == {'X4': -1}
    assert commutators.combination('X8', 'X9') == {'X7': -1, 'X10': 1}
    assert printed.combination('X8', 'X9') == {'X6': -1, 'X10': 1}


def test_shape_mismatch_is_refused(commutators):
    small = lie_algebra.StructureTable(['X1'], {('X1', 'X1'): {}})
    with pytest.raises(lie_algebra.ShapeMismatch):
        lie_algebra.compare_table(commutators, small)


def test_adjoint_entries_pass_their_checks(adjoint, commutators):
    assert all(entry.closed for entry in adjoint.cells.values())
    for r, c in itertools.product(adjoint.names, repeat=2):
        checks = lie_algebra.check_entry(adjoint, commutators, r, c)
        assert all(checks.values()), (r, c, checks)


def test_adjoint_of_a_nilpotent_pair(adjoint):
    s = lie_algebra.s
    entry = adjoint.cells[('X3', 'X6')]
    assert entry.status == 'nilpotent'
    assert entry.coefficients == {'X6': 1, 'X1': -s}


def test_adjoint_scaling_is_exponential(adjoint):
    s = lie_algebra.s
    entry = adjoint.cells[('X10', 'X3')]
    assert entry.status == 'closed'
    assert sympy.simplify(entry.coefficients['X3'] - sympy.exp(s)) == 0


def test_adjoint_matrix_columns_are_entries(adjoint):
    matrix = lie_algebra.adjoint_matrix(adjoint, 'X3', 2)
    names = adjoint.names
    assert matrix[names.index('X1'), names.index('X6')] == -2
    assert matrix[names.index('X6'), names.index('X6')] == 1


def test_printed_adjoint_table_is_diffed(adjoint):
    printed = lie_algebra.load_table(load_printed('table4.json'), equivalence_scope())
    diff = lie_algebra.compare_table(adjoint, printed, negation=True)
    assert set(diff['status']) <= {'match', 'match-under-s-negation', 'mismatch'}
    assert (diff['status'] == 'match').sum() >= 80


def test_adjoint_of_a_nilpotent_chain(adjoint):
    s = lie_algebra.s
    entry = adjoint.cells[('X9', 'X8')]
    assert entry.status == 'nilpotent'
    assert entry.coefficients == {'X8': 1, 'X7': -s, 'X10': s, 'X9': -s**2}


def test_ibe_table():
    basis = lie_algebra.ibe_basis()
    table = lie_algebra.commutator_table(basis)
    assert all(cell.closed for cell in table.cells.values())
    printed = lie_algebra.load_table(load_printed('table1.json'), point_scope({'g': ('u',)}))
    diff = lie_algebra.compare_table(table, printed)
    assert (diff['status'] == 'match').sum() >= 12


def test_ibe_decomposer_rejects_fields_outside_the_algebra():
    basis = lie_algebra.ibe_basis()
    outside = VectorField(POINT_CHART, {'t': t**2})
    assert not basis.decompose(outside).closed


def test_equivalence_family_table():
    table = lie_algebra.commutator_table(y_basis())
    assert all(cell.closed for cell in table.cells.values())
    printed = lie_algebra.load_table(
        load_printed('table2.json'),
        equivalence_scope({'tau': ('x', 'u'), 'phi': ('x', 'u')}),
    )
    diff = lie_algebra.compare_table(table, printed)
    assert (diff['status'] == 'match').all()
