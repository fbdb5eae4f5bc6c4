import dataclasses

import pytest
import sympy

from symbolic.jet import VectorField
from symbolic.kernel import Verdict
from symbolic.parser import parse
from symmetry import classification
from symmetry.classification import PROJECTED_CHART, first_integral, invariants
from utils.utils import dumps

x, u, f, g = sympy.symbols('x u f g')
alpha2, gamma3 = sympy.symbols('alpha2 gamma3')


@pytest.fixture(scope='module')
def rows():
    return {row.row: row for row in classification.table5()}


@pytest.fixture(scope='module')
def projected():
    return classification.projected_scope()


def field(**coefficients):
    return VectorField(PROJECTED_CHART, coefficients)


def test_first_integrals():
    assert first_integral(g, u, -g / u) == g * u
    assert first_integral(g, f, g / f) == g / f
    assert first_integral(f, x, f**2) is not None
    assert first_integral(f, x, f**2 + 1) is None


@pytest.mark.parametrize('z, expected', [
    (field(x=1), [u, f, g]),
    (field(u=u, g=-g), [x, f, g * u]),
    (field(f=f**2, g=f * g), [x, u, g / f]),
])
def test_invariants_are_annihilated(z, expected):
    found = invariants(z)
    assert len(found) == 3
    for invariant in found:
        assert classification.verify_invariant(z, invariant) == Verdict.PROVEN
    assert [sympy.simplify(a - b) for a, b in zip(found, expected)] == [0, 0, 0]


def test_bernoulli_characteristic():
    z = field(u=1, f=-g * f, g=-g**2)
    found = invariants(z)
    assert found is not None
    for invariant in found:
        assert classification.verify_invariant(z, invariant) == Verdict.PROVEN


def test_parabolic_base_invariant():
    z = field(x=u, u=alpha2)
    found = invariants(z)
    assert classification.verify_invariant(z, x - u**2 / (2 * alpha2)) == Verdict.PROVEN
    assert classification.verify_invariant(z, found[0]) == Verdict.PROVEN


def test_printed_invariants(projected):
    frame = classification.check_invariants()
    z5 = frame[frame['field'] == 'Z5']
    assert (z5['verdict'] == 'proven').all()
    z14 = frame[frame['field'] == 'Z14']
    assert len(z14) == 6
    assert set(z14['verdict']) <= {'proven', 'probable', 'refuted'}
    assert (z14[z14['conditions'].map(bool)]['verdict'] == 'proven').all()


def test_non_solvable_fields():
    z = classification.z_list()
    assert classification.non_solvable(z['Z3']['field'])
    assert classification.non_solvable(z['Z4']['field'])
    assert classification.non_solvable(z['Z5']['field'])
    assert not classification.non_solvable(z['Z1']['field'])
    assert not classification.non_solvable(field())


def test_computed_projection_replaces_the_printed_one():
    z2 = classification.computed_projection('Z2')
    assert z2 == field(u=1)
    assert classification.z_list()['Z2']['field'] == field(u=u)


def test_rows_load_with_corrections(rows):
    assert len(rows) == 27
    corrected = rows[23].corrected()
    assert corrected.g == 'Psi/u'
    assert corrected.correction is None
    assert rows[1].corrected() is None
    assert rows[7].flag and rows[24].flag


@pytest.mark.parametrize('number', [1, 2, 3, 13])
def test_rows_verify_as_printed(rows, number):
    record = classification.report_row(rows[number], samples=100)
    assert record['status'] == 'pass'
    assert classification.row_passed(record)
    assert record['numeric_max'] < 1e-9


def test_failing_row_carries_its_diagnosis(rows):
    record = classification.report_row(rows[23], samples=20)
    assert record['status'] == 'fail'
    assert record['invariants'] == ['x', 'f', 'g*u']
    residual = record['signs']['1']['operators'][0]['residual']
    assert residual != '0'
    assert record['correction']['status'] == 'pass'


def test_construction_checks_invariance_on_the_surface(rows, projected):
    construction = classification.construct_row(rows[3])
    assert construction.invariant
    assert construction.spec.f == parse('exp(Phi(x) - u)', projected)


def test_lambertw_row_is_checked_numerically(rows):
    record = classification.report_row(rows[21])
    assert record['status'] == 'numeric'
    assert set(record['numeric']) == {'printed', 'row-parameters'}
    assert set(record['numeric'].values()) <= {'numeric-pass', 'numeric-fail', 'domain'}


def test_report_summary_counts_every_row(rows):
    subset = [rows[1], rows[23]]
    report = classification.table5_report(subset)
    assert report.summary['rows'] == 2
    assert report.summary['passed'] == 1
    assert report.summary['corrected'] == 1
    assert list(report.to_frame()['row']) == [1, 23]


@pytest.mark.parametrize('number', [19, 20])
def test_coupled_characteristics_give_partial_invariants(rows, number):
    z = classification.computed_projection(rows[number].field, rows[number].conditions)
    assert invariants(z) is None
    found, reason = classification.partial_invariants(z)
    assert len(found) == 2
    for invariant in found:
        assert classification.verify_invariant(z, invariant) == Verdict.PROVEN
    assert '1 invariant(s) not integrated' in reason


def test_even_rates_integrate_through_the_square():
    eta3 = sympy.Symbol('eta3')
    z = field(f=g, g=eta3 * f)
    found = invariants(z)
    assert found[:2] == [x, u]
    assert sympy.simplify(found[2] - (g**2 - eta3 * f**2)) == 0


def test_failing_row_records_its_characteristic_system(rows):
    record = classification.report_row(rows[19], samples=20)
    assert record['status'] == 'fail'
    assert len(record['invariants']) == 2
    assert record['characteristics']['system'].startswith('dx/(')
    assert record['characteristics']['reason']


@pytest.mark.parametrize('scale', ['2', '-1', '1/3'])
def test_row_verdicts_do_not_depend_on_operator_scale(rows, scale):
    row = rows[3]
    scaled = dataclasses.replace(row, operators=[
        {n: f'{scale}*({text})' for n, text in op.items()} for op in row.operators
    ])
    original, rescaled = classification.verify_row(row), classification.verify_row(scaled)
    assert set(original) == set(rescaled)
    for sign in original:
        assert [v.verdict for _, v in original[sign]['operators']] == \
            [v.verdict for _, v in rescaled[sign]['operators']]


@pytest.fixture(scope='module')
def full_report():
    return classification.table5_report(samples=30)


@pytest.mark.slow
def test_passing_rows_are_corroborated_to_rounding(full_report):
    for record in full_report.rows:
        if record['status'] == 'pass':
            assert record['numeric_max'] is not None, record['row']
            assert record['numeric_max'] < 1e-9, (record['row'], record['numeric_max'])


@pytest.mark.slow
def test_failing_rows_carry_invariants(full_report):
    failing = [r for r in full_report.rows if r['status'] == 'fail']
    assert failing
    for record in failing:
        assert record['invariants'] is not None, record['row']
        if len(record['invariants']) < 3:
            assert record['characteristics']['reason'], record['row']


@pytest.mark.slow
def test_report_is_reproducible_for_a_seed(full_report):
    again = classification.table5_report(samples=30)
    assert dumps(again.to_json()) == dumps(full_report.to_json())
