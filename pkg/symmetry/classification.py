import logging
import dataclasses

import pandas as pd
import sympy

from symbolic.kernel import Verdict, substitute, is_zero
from symbolic.parser import parse, render
from symbolic.jet import POINT_CHART, VectorField, apply
from symmetry.determining import (
    EquationSpec, SymmetryVerdict, point_scope, verify_candidate, corroborate,
)
from symmetry.equivalence import PROJECTED_CHART, equivalence_scope, project
from symmetry.optimal_system import optimal_system
from utils import batch, numeric
from utils.utils import load_printed

x, u, f, g = sympy.symbols('x u f g')
lam, pm = sympy.symbols('lam pm')


def projected_scope():
    """ Scope for (x,u,f,g) fields, invariants and classification forms """
    return equivalence_scope({'Phi': ('lam',), 'Psi': ('lam',)})


def _conditions(conditions, scope):
    return {scope.symbol(n): parse(v, scope) for n, v in conditions.items()}


def z_list(path=None):
    """ The printed (x,u,f,g) projections, by name.

    Returns:
        dict: name -> {'field': VectorField, 'sources': [entry names]}

    """
    scope = projected_scope()
    return {
        item['name']: {
            'field': VectorField.from_json(item, scope, chart=PROJECTED_CHART),
            'sources': item['sources'],
        }
        for item in load_printed('z_list.json', path)['fields']
    }


def computed_projection(name, conditions=None, target='xufg', entries=None, path=None):
    """ Projection of the optimal-system entry behind a printed Z """
    scope = projected_scope()
    source = z_list(path)[name]['sources'][0]
    entry = {e.name: e for e in entries or optimal_system()}[source]
    field = project(entry.field(), target)
    bindings = _conditions(conditions or {}, scope)
    return field.map(lambda c: c.xreplace(bindings))


def verify_invariant(field, invariant):
    """ Whether a field annihilates an expression.

    Returns:
        Verdict: PROVEN when Z(I) normalizes to zero, PROBABLE when it only
            vanishes numerically, REFUTED otherwise.

    """
    return is_zero(apply(field, invariant))


def _solve_for(expr, variable, constant):
    solutions = sympy.solve(sympy.Eq(expr, constant), variable)
    return solutions[0] if len(solutions) == 1 else None


def _integrate(expr, variable):
    result = sympy.integrate(expr, variable, conds='none')
    return None if result.has(sympy.Integral) else result


def first_integral(y, v, rhs):
    """ First integral of dy/dv = rhs by the linear or Bernoulli rule.

    `rhs` must be a polynomial of degree at most two in y, without a
    constant term when quadratic.

    Returns:
        sympy.Expr or None: I(v, y) constant along solutions.

    """
    rhs = sympy.expand(rhs)
    if not rhs.is_polynomial(y):
        return None
    poly = sympy.Poly(rhs, y)
    if poly.degree() > 2:
        return None
    p0, p1, p2 = (poly.coeff_monomial(y ** k) for k in range(3))
    if p2 == 0:
        exponent = _integrate(-p1, v)
        if exponent is None:
            return None
        weight = sympy.exp(exponent)
        source = _integrate(sympy.simplify(p0 * weight), v)
        return None if source is None else sympy.simplify(y * weight - source)
    if p0 != 0:
        logging.debug(f'Riccati characteristic d{y}/d{v} = {render(rhs)}.')
        return None
    # w = 1/y turns the Bernoulli equation linear: w' = -p1*w - p2.
    exponent = _integrate(p1, v)
    if exponent is None:
        return None
    weight = sympy.exp(exponent)
    source = _integrate(sympy.simplify(p2 * weight), v)
    return None if source is None else sympy.simplify(weight / y + source)


def _integral(y, v, rhs):
    """ First integral of dy/dv = rhs, directly or as an equation in y².

    When 2y·rhs depends on y through y² only, Y = y² obeys a linear or
    Bernoulli equation of its own.
    """
    rhs = sympy.simplify(rhs)
    invariant = first_integral(y, v, rhs)
    if invariant is not None:
        return invariant
    Y = sympy.Dummy('Y')
    squared = sympy.expand(sympy.simplify(2 * y * rhs)).subs(y**2, Y)
    if y in squared.free_symbols:
        return None
    invariant = first_integral(Y, v, squared)
    return None if invariant is None else sympy.simplify(invariant.xreplace({Y: y**2}))


def _base_invariant(X, U):
    """ Invariant of X∂x + U∂u with X, U both nonzero """
    for y, v, rhs in ((u, x, U / X), (x, u, X / U)):
        invariant = _integral(y, v, rhs)
        if invariant is not None:
            return invariant
    return None


def _chart_parameter(X, U, F, G):
    """ Base invariants and the coordinate parametrizing the orbits.

    Returns:
        tuple: (base invariants, parameter, speed, other coordinate, base
            invariant level) or None when no base invariant is found.

    """
    if X == 0 and U == 0:
        return [x, u], None, None, None, None
    if X == 0:
        return [x], u, U, None, None
    if U == 0:
        return [u], x, X, None, None
    level = _base_invariant(X, U)
    if level is None:
        return None
    for parameter, speed, other in ((x, X, u), (u, U, x)):
        rates = sympy.simplify(F / speed), sympy.simplify(G / speed)
        if not any(other in r.free_symbols for r in rates):
            break
    return [level], parameter, speed, other, level


def invariants(field):
    """ A complete set of invariants of an (x,u,f,g) field.

    Handles the triangular fields of the projected optimal system: the
    base part depends on (x,u) only and the f, g parts are quadratic in
    (f,g). Characteristics are integrated one at a time, starting with the
    dependent variable whose equation involves only itself; the other
    coordinate and earlier dependents enter through their first integrals.

    Returns:
        [sympy.Expr, ..] or None when a characteristic cannot be integrated.

    """
    assert field.chart == PROJECTED_CHART, f'Field lives on {field.chart}.'
    X, U, F, G = (field[n] for n in ('x', 'u', 'f', 'g'))
    if field.is_zero():
        return [x, u, f, g]
    chart = _chart_parameter(X, U, F, G)
    if chart is None:
        logging.warning(f'No base invariant for {field.render()}.')
        return None
    base, parameter, speed, other, level = chart

    if parameter is None:
        # Only (f,g) move: one of them parametrizes the other's orbit.
        if F == 0 or G == 0:
            return base + [f if F == 0 else g]
        invariant = _integral(g, f, G / F)
        if invariant is None:
            invariant = _integral(f, g, F / G)
        return None if invariant is None else base + [invariant]

    constants = {}
    rates = {f: sympy.simplify(F / speed), g: sympy.simplify(G / speed)}
    if other is not None and any(other in r.free_symbols for r in rates.values()):
        c = sympy.Dummy('c')
        solved = _solve_for(level, other, c)
        if solved is None:
            return None
        constants[c] = level
        rates = {y: r.xreplace({other: solved}) for y, r in rates.items()}

    found = []
    for y in sorted((f, g), key=lambda y: ({f, g} - {y}) <= rates[y].free_symbols):
        if rates[y].free_symbols & ({f, g} - {y}):
            logging.warning(f'Characteristics of f and g are coupled in {field.render()}.')
            return None
        integral = y if rates[y] == 0 else _integral(y, parameter, rates[y])
        if integral is None:
            logging.warning(f'Characteristic of {y} in {field.render()} not integrable.')
            return None
        found.append(integral)
        c_y = sympy.Dummy(f'c_{y}')
        solved = _solve_for(integral, y, c_y)
        if solved is not None:
            constants[c_y] = integral
            rates = {k: r.xreplace({y: solved}) for k, r in rates.items()}
    # Constants of later integrals may refer to earlier ones.
    return base + [
        sympy.simplify(i.xreplace(constants).xreplace(constants)) for i in found
    ]


def characteristic_system(field):
    """ The characteristic equations dx/X = du/U = df/F = dg/G of a field """
    return ' = '.join(
        f'd{n}/({render(field[n])})' for n in PROJECTED_CHART.coordinates if field[n] != 0
    )


def partial_invariants(field):
    """ Invariants of a field, falling back to the ones found separately.

    When `invariants` cannot integrate the full characteristic system, the
    base invariant of the (x,u) part and, for (f,g) parts free of x and u,
    the first integral of df/dg are returned with the reason the set is
    incomplete.

    Returns:
        tuple: ([sympy.Expr, ..], reason or None)

    """
    complete = invariants(field)
    if complete is not None:
        return complete, None
    X, U, F, G = (field[n] for n in ('x', 'u', 'f', 'g'))
    found = []
    chart = _chart_parameter(X, U, F, G)
    if chart is not None:
        found.extend(chart[0])
    if not (F.free_symbols | G.free_symbols) & {x, u}:
        if F == 0 or G == 0:
            found.extend(y for y, rate in ((f, F), (g, G)) if rate == 0)
        else:
            invariant = _integral(g, f, G / F)
            if invariant is None:
                invariant = _integral(f, g, F / G)
            if invariant is not None:
                found.append(invariant)
    missing = len(PROJECTED_CHART.coordinates) - 1 - len(found)
    cause = (
        'no closed-form base invariant of the (x,u) part' if chart is None
        else 'the characteristics couple the orbit parameter with f and g'
    )
    reason = f'{cause.capitalize()}; {missing} invariant(s) not integrated.'
    logging.info(f'Partial invariants of {field.render()}: {[render(i) for i in found]}.')
    return found, reason


def non_solvable(field):
    """ Whether the invariants admit no equation f = F, g = G over an
    (x,u)-invariant: both x and u are invariants of a nonzero field """
    if field.is_zero():
        return False
    return all(
        verify_invariant(field, v) == Verdict.PROVEN for v in (x, u)
    )


@dataclasses.dataclass
class ClassificationRow:
    row: int
    field: str
    lam: str
    f: str
    g: str
    operators: list
    conditions: dict = dataclasses.field(default_factory=dict)
    nonzero: list = dataclasses.field(default_factory=list)
    correction: dict = None
    flag: str = None
    numeric: dict = None

    @classmethod
    def from_json(cls, data):
        return cls(**data)

    def corrected(self):
        """ Copy with the printed correction applied, or None """
        if not self.correction:
            return None
        return dataclasses.replace(self, correction=None, **self.correction)


def table5(path=None):
    return [ClassificationRow.from_json(r) for r in load_printed('table5.json', path)['rows']]


@dataclasses.dataclass
class Construction:
    """ A row instantiated for one sign of pm """
    sign: int
    lam: sympy.Expr
    spec: EquationSpec
    field: VectorField
    invariance: dict
    degenerate: bool = False

    @property
    def invariant(self):
        return all(v == Verdict.PROVEN for v in self.invariance.values())


def _forms(row, sign, scope):
    bindings = _conditions(row.conditions, scope)
    bindings[pm] = sympy.Integer(sign)
    lam_expr = parse(row.lam, scope).xreplace(bindings)
    forms = {
        name: parse(getattr(row, name), scope).xreplace(bindings).xreplace({lam: lam_expr})
        for name in ('f', 'g')
    }
    return lam_expr, forms


def _degenerate(*exprs):
    return any(e.has(sympy.zoo, sympy.nan, sympy.oo, -sympy.oo) for e in exprs)


def construct_row(row, field=None, sign=1):
    """ The equation of a classification row and the invariance of its forms.

    Args:
        row (ClassificationRow): The printed row.
        field (VectorField, optional): The (x,u,f,g) field to check
            invariance against; defaults to the computed projection.
        sign (int): Value of a printed ±.

    Returns:
        Construction

    """
    scope = projected_scope()
    field = field or computed_projection(row.field, row.conditions)
    lam_expr, forms = _forms(row, sign, scope)
    if _degenerate(lam_expr, *forms.values()):
        logging.warning(f'Row {row.row} degenerates under {row.conditions}.')
        return Construction(sign, lam_expr, None, field, {}, degenerate=True)
    # f - F and g - G need only vanish on the surface f = F, g = G.
    surface = {f: forms['f'], g: forms['g']}
    invariance = {
        'lam': verify_invariant(field, lam_expr),
        'f': is_zero(substitute(apply(field, f - forms['f']), surface)),
        'g': is_zero(substitute(apply(field, g - forms['g']), surface)),
    }
    spec = EquationSpec(forms['f'], forms['g'], f_nonconstant=False, g_nonconstant=False)
    return Construction(sign, lam_expr, spec, field, invariance)


def _operators(row):
    scope = point_scope()
    bindings = _conditions(row.conditions, scope)
    return [
        VectorField(POINT_CHART, {
            n: parse(text, scope).xreplace(bindings) for n, text in op.items()
        })
        for op in row.operators
    ]


def _signs(row):
    return (1, -1) if 'pm' in row.f + row.g + row.lam else (1,)


def verify_row(row, seed=0):
    """ Verify every printed operator of a row for each sign of ±.

    Returns:
        dict: sign -> {'construction': Construction, 'operators':
            [(VectorField, Verification), ..]}

    """
    results = {}
    operators = _operators(row)
    for sign in _signs(row):
        construction = construct_row(row, sign=sign)
        checks = []
        if not construction.degenerate:
            for op in operators:
                checks.append((op, verify_candidate(construction.spec, op, seed=seed)))
        results[sign] = {'construction': construction, 'operators': checks}
    return results


def _sign_status(result):
    construction = result['construction']
    if construction.degenerate:
        return 'degenerate'
    verdicts = [v.verdict for _, v in result['operators']]
    if not construction.invariant or SymmetryVerdict.PROVEN_NOT in verdicts:
        return 'fail'
    if all(v == SymmetryVerdict.PROVEN_SYMMETRY for v in verdicts):
        return 'pass'
    return 'probable'


def _status(results):
    """ Best status over the signs of a row """
    statuses = {_sign_status(r) for r in results.values()}
    for status in ('pass', 'probable', 'degenerate'):
        if status in statuses:
            return status
    return 'fail'


def _numeric_row(row, seed=0):
    """ Check Z(B) numerically under each reading of the lambertw constant.

    B is not derived symbolically; the field acts on it by differencing.
    """
    scope = projected_scope()
    scope.declare('A', 'B')
    field = computed_projection(row.field, row.conditions)
    A = parse(row.numeric['A'], scope)
    B = parse(row.numeric['B'], scope).xreplace({scope.symbol('A'): A})
    readings = {}
    for reading in row.numeric['readings']:
        bindings = _conditions(reading['bindings'], scope)
        try:
            vanishes = numeric.vanishes_along(B.xreplace(bindings), field.coefficients, seed=seed)
            readings[reading['name']] = 'numeric-pass' if vanishes else 'numeric-fail'
        except numeric.SamplingError:
            readings[reading['name']] = 'domain'
    return readings


def _record(results):
    record = {}
    for sign, result in results.items():
        construction = result['construction']
        record[str(sign)] = {
            'degenerate': construction.degenerate,
            'invariance': {k: v.value for k, v in construction.invariance.items()},
            'operators': [
                {'operator': op.render(), **verification.to_json()}
                for op, verification in result['operators']
            ],
        }
    return record


def report_row(row, seed=0, samples=None):
    """ Verification record of one classification row, with corrections.

    A failing row is re-verified with the computed (t,x,u) projection of
    its optimal-system entry as operator, with its printed correction, and
    with recomputed invariants of its field.

    """
    field = computed_projection(row.field, row.conditions)
    record = {
        'row': row.row, 'field': row.field, 'flag': row.flag,
        'projection': field.render(),
    }
    if row.numeric:
        record['status'] = 'numeric'
        record['numeric'] = _numeric_row(row, seed)
        return record

    results = verify_row(row, seed)
    record['status'] = _status(results)
    record['signs'] = _record(results)
    record['passing_signs'] = [
        sign for sign, r in results.items() if _sign_status(r) == 'pass'
    ]
    if record['status'] == 'pass':
        best = results[record['passing_signs'][0]]
        spec = best['construction'].spec
        try:
            record['numeric_max'] = max(
                corroborate(spec, op, n=samples, seed=seed)
                for op, _ in best['operators']
            )
        except numeric.NumericError as error:
            record['numeric_max'] = None
            logging.warning(f'Row {row.row} not corroborated: {error}')
        return record

    found, reason = partial_invariants(field)
    record['invariants'] = [render(i) for i in found]
    if reason is not None:
        record['characteristics'] = {'system': characteristic_system(field), 'reason': reason}
    point = computed_projection(row.field, row.conditions, target='txu')
    fallback = {}
    for sign, result in results.items():
        construction = result['construction']
        if not construction.degenerate and not point.is_zero():
            fallback[str(sign)] = verify_candidate(construction.spec, point, seed=seed).verdict.value
    record['computed_operator'] = {'operator': point.render(), 'verdicts': fallback}

    corrected = row.corrected()
    if corrected is not None:
        record['correction'] = {
            'status': _status(verify_row(corrected, seed)),
            'forms': row.correction,
        }
    return record


def row_passed(record):
    """ Whether a row record verified, numerically for the numeric-only row """
    if record['status'] == 'numeric':
        return 'numeric-pass' in record['numeric'].values()
    return record['status'] == 'pass'


@dataclasses.dataclass
class Table5Report:
    rows: list

    @property
    def summary(self):
        counts = pd.Series([r['status'] for r in self.rows]).value_counts().to_dict()
        corrected = sum(
            1 for r in self.rows if r.get('correction', {}).get('status') == 'pass'
        )
        return {
            'rows': len(self.rows), 'status': counts, 'corrected': corrected,
            'passed': sum(map(row_passed, self.rows)),
        }

    def to_json(self):
        return {'summary': self.summary, 'rows': self.rows}

    def to_frame(self):
        return pd.DataFrame([
            {
                'row': r['row'], 'field': r['field'], 'status': r['status'],
                'correction': r.get('correction', {}).get('status', ''),
                'flag': r['flag'] or '',
            }
            for r in self.rows
        ], columns=['row', 'field', 'status', 'correction', 'flag'])

    def to_markdown(self):
        return self.to_frame().to_markdown(index=False)


def table5_report(rows=None, jobs=1, seed=0, samples=None):
    """ Verify all rows of the classification table.

    Returns:
        Table5Report

    """
    rows = rows or table5()
    records = batch.run(
        lambda row: report_row(row, seed, samples), rows, jobs, 'Classification'
    )
    report = Table5Report(records)
    logging.info(f'Classification summary: {report.summary}')
    return report


def check_invariants(path=None):
    """ Verify the printed invariants of the worked Z examples.

    Returns:
        pd.DataFrame: One row per (field, reading, invariant).

    """
    scope = projected_scope()
    fields = z_list(path)
    rows = []
    for item in load_printed('z_list.json', path)['invariants']:
        bindings = _conditions(item['conditions'], scope)
        field = fields[item['field']]['field'].map(lambda c: c.xreplace(bindings))
        for text in item['invariants']:
            invariant = parse(text, scope).xreplace(bindings)
            verdict = (
                Verdict.REFUTED if _degenerate(invariant) else verify_invariant(field, invariant)
            )
            rows.append({
                'field': item['field'], 'conditions': item['conditions'],
                'invariant': text, 'verdict': verdict.value,
            })
    return pd.DataFrame(rows, columns=['field', 'conditions', 'invariant', 'verdict'])
