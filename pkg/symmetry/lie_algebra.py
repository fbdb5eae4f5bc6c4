import math
import logging
import dataclasses

import pandas as pd
import sympy

import config
from symbolic.kernel import normalize, differentiate, polynomial_coefficients
from symbolic.parser import parse, render
from symbolic.jet import POINT_CHART, VectorField, ChartMismatch, apply
from symmetry.determining import point_scope, t, x, u
from utils import batch

s = sympy.Symbol('s')


class ShapeMismatch(Exception):
    pass


def bracket(v, w):
    """ Lie bracket [v, w], coefficient-wise v(wᵢ) − w(vᵢ) """
    if v.chart != w.chart:
        raise ChartMismatch(f'Fields on {v.chart} and {w.chart}.')
    return VectorField(v.chart, {
        name: apply(v, w[name]) - apply(w, v[name])
        for name in v.chart.coordinates
    })


def combination(basis, coefficients):
    """ The field Σ coefficient·basis[name] for a constant-coefficient basis """
    field = VectorField(basis.chart)
    for name, c in coefficients.items():
        field = field + c * basis[name]
    return field


def linear_decomposer(basis):
    """ Decompose a field over a constant-coefficient basis by exact linear
    solving on the monomials of the chart coordinates """
    generators = [sympy.Symbol(n) for n in basis.chart.coordinates]

    def decompose(field):
        unknowns = sympy.symbols(f'a_0:{len(basis)}')
        difference = field - combination(basis, dict(zip(basis.names, unknowns)))
        equations = []
        for name in basis.chart.coordinates:
            equations += polynomial_coefficients(difference[name], generators).values()
        solutions = sympy.linsolve(equations, unknowns) if equations else None
        if equations and solutions == sympy.S.EmptySet:
            return {}, field
        values = next(iter(solutions)) if equations else (0,) * len(basis)
        coefficients = {
            name: normalize(value.xreplace({a: 0 for a in unknowns}))
            for name, value in zip(basis.names, values)
        }
        return {n: c for n, c in coefficients.items() if c != 0}, VectorField(basis.chart)

    return decompose


class LieBasis:
    """ Ordered, named vector fields on one chart.

    Args:
        names (list of str): Basis names, e.g. ['X1', .., 'X10'].
        fields (list of VectorField): The fields, in the same order.
        decomposer (func, optional): Maps a field to `(coefficients,
            residual)`. Defaults to linear solving, which suits bases with
            constant structure coefficients.

    """

    def __init__(self, names, fields, decomposer=None):
        assert len(names) == len(set(names)), 'Basis names are not unique.'
        assert len(names) == len(fields), 'Every basis field needs a name.'
        assert len({f.chart for f in fields}) <= 1, 'Basis fields span several charts.'
        self.names = list(names)
        self.fields = list(fields)
        self.decomposer = decomposer or linear_decomposer(self)

    @property
    def chart(self):
        return self.fields[0].chart

    def __len__(self):
        return len(self.fields)

    def __getitem__(self, name):
        return self.fields[self.names.index(name)]

    def index(self, name):
        return self.names.index(name)

    def decompose(self, field):
        coefficients, residual = self.decomposer(field)
        return BracketCell(coefficients, residual)


@dataclasses.dataclass
class BracketCell:
    """ A field written over a basis, with whatever lies outside its span """
    coefficients: dict
    residual: VectorField

    @property
    def closed(self):
        return self.residual.is_zero()

    def render(self, names=None):
        return render_combination(self.coefficients, names)

    def to_json(self):
        return {
            'closed': self.closed,
            'combination': {n: render(c) for n, c in self.coefficients.items()},
            'residual': self.residual.to_json()['coeffs'],
        }


def render_combination(coefficients, names=None):
    """ Render {name: coefficient} as e.g. 'X10 - X7' or '-(F1*F2)*v1' """
    names = names or list(coefficients)
    terms = []
    for name in names:
        c = sympy.sympify(coefficients.get(name, 0))
        if c == 0:
            continue
        if c == 1:
            terms.append(f'+ {name}')
        elif c == -1:
            terms.append(f'- {name}')
        elif c.could_extract_minus_sign():
            terms.append(f'- ({render(-c)})*{name}')
        else:
            terms.append(f'+ ({render(c)})*{name}')
    if not terms:
        return '0'
    text = ' '.join(terms)
    return text[2:] if text.startswith('+ ') else '-' + text[2:]


@dataclasses.dataclass
class StructureTable:
    """ Square table of decompositions indexed by basis-name pairs """
    names: list
    cells: dict

    def combination(self, row, col):
        cell = self.cells[(row, col)]
        return cell.coefficients if hasattr(cell, 'coefficients') else cell

    def to_frame(self):
        return pd.DataFrame(
            [[render_combination(self.combination(r, c), self.names)
              for c in self.names] for r in self.names],
            index=self.names, columns=self.names,
        )

    def to_markdown(self):
        return self.to_frame().to_markdown()

    def to_json(self):
        return {
            'basis': self.names,
            'cells': {
                r: {c: {n: render(v) for n, v in self.combination(r, c).items()}
                    for c in self.names}
                for r in self.names
            },
        }


def commutator_table(basis, jobs=1):
    """ All brackets of a basis, decomposed over the basis.

    Returns:
        StructureTable: Cells are BracketCells; non-closed cells are logged.

    """
    pairs = [(r, c) for r in basis.names for c in basis.names]

    def cell(pair):
        return basis.decompose(bracket(basis[pair[0]], basis[pair[1]]))

    cells = dict(zip(pairs, batch.run(cell, pairs, jobs, 'Brackets')))
    open_cells = [pair for pair, c in cells.items() if not c.closed]
    if open_cells:
        logging.warning(f'{len(open_cells)} bracket(s) leave the span: {open_cells}')
    return StructureTable(basis.names, cells)


def structure_matrix(table, name):
    """ Matrix of ad(name) over the basis: column k holds [name, X_k] """
    n = len(table.names)
    matrix = sympy.zeros(n, n)
    for k, col in enumerate(table.names):
        cell = table.cells[(name, col)]
        assert cell.closed, f'[{name}, {col}] is not closed over the basis.'
        for m, row in enumerate(table.names):
            matrix[m, k] = cell.coefficients.get(row, 0)
    return matrix


def _simplify(expr):
    return sympy.expand(sympy.powsimp(sympy.expand(expr)))


@dataclasses.dataclass
class AdjointEntry:
    """ Ad(exp(s·X_i))X_j as coefficients over the basis, functions of s.

    `status` is 'nilpotent' (terminated series), 'closed' (summed to
    exponential-polynomial form) or 'truncated' (series cut at `order`).
    """
    row: str
    col: str
    coefficients: dict
    status: str
    order: int = None

    @property
    def closed(self):
        return self.status != 'truncated'

    def at(self, value):
        return {n: _simplify(c.xreplace({s: value})) for n, c in self.coefficients.items()}

    def derivative_at_zero(self):
        return {
            n: _simplify(sympy.diff(c, s).xreplace({s: 0}))
            for n, c in self.coefficients.items()
        }

    def to_json(self):
        return {
            'status': self.status,
            'order': self.order,
            'combination': {n: render(c) for n, c in self.coefficients.items()},
        }


def adjoint_series(table, row, col, max_order=None):
    """ Ad(exp(s·row))col = exp(−s·ad(row))col, summed in closed form.

    The iterates ad(row)^k col span a Krylov subspace. When an iterate
    vanishes the series terminates. Otherwise ad(row) restricted to the
    subspace is a companion matrix whose exponential is built from its
    Jordan form when its eigenvalues are rational; any other case is
    truncated at `max_order`.

    Args:
        table (StructureTable): Commutator table of a closed basis.
        row (str): Name of the acting basis element.
        col (str): Name of the acted-on basis element.

    Returns:
        AdjointEntry

    """
    max_order = max_order or config.adjoint['max_order']
    names = table.names
    matrix = structure_matrix(table, row)
    start = sympy.Matrix([1 if n == col else 0 for n in names])

    krylov = [start]
    while True:
        nxt = matrix * krylov[-1]
        if nxt.is_zero_matrix:
            vector = sum(
                ((-s) ** k / math.factorial(k) * w for k, w in enumerate(krylov)),
                sympy.zeros(len(names), 1),
            )
            return _entry(row, col, names, vector, 'nilpotent')
        basis = sympy.Matrix.hstack(*krylov)
        extended = sympy.Matrix.hstack(basis, nxt)
        if extended.rank() == basis.rank():
            break
        krylov.append(nxt)

    d = len(krylov)
    beta, _ = basis.gauss_jordan_solve(nxt)
    companion = sympy.zeros(d, d)
    for m in range(d - 1):
        companion[m + 1, m] = 1
    for m in range(d):
        companion[m, d - 1] = beta[m]

    if all(ev.is_rational for ev in companion.eigenvals()):
        P, J = companion.jordan_form()
        blocks = []
        for block in J.get_diag_blocks():
            k = block.shape[0]
            eigenvalue = block[0, 0]
            nilpotent = block - eigenvalue * sympy.eye(k)
            blocks.append(sympy.exp(-s * eigenvalue) * sum(
                ((-s) ** m / math.factorial(m) * nilpotent ** m for m in range(k)),
                sympy.zeros(k, k),
            ))
        exponential = P * sympy.diag(*blocks) * P.inv()
        weights = exponential[:, 0]
        vector = basis * weights
        return _entry(row, col, names, vector, 'closed')

    logging.warning(f'Ad({row}) on {col} has irrational spectrum; truncating.')
    vector = sympy.zeros(len(names), 1)
    w = start
    for k in range(max_order + 1):
        vector += (-s) ** k / math.factorial(k) * w
        w = matrix * w
    return _entry(row, col, names, vector, 'truncated', max_order)


def _entry(row, col, names, vector, status, order=None):
    coefficients = {}
    for name, value in zip(names, vector):
        value = _simplify(value)
        if value != 0:
            coefficients[name] = value
    return AdjointEntry(row, col, coefficients, status, order)


def adjoint_table(table, jobs=1):
    """ Ad(exp(s·X_i))X_j for every pair, as a StructureTable """
    pairs = [(r, c) for r in table.names for c in table.names]
    entries = batch.run(lambda pair: adjoint_series(table, *pair), pairs, jobs, 'Adjoint')
    return StructureTable(table.names, dict(zip(pairs, entries)))


def adjoint_matrix(adjoint, row, value=s):
    """ Matrix of Ad(exp(value·row)) over the basis; column j is entry j """
    names = adjoint.names
    matrix = sympy.zeros(len(names), len(names))
    for j, col in enumerate(names):
        entry = adjoint.cells[(row, col)]
        for i, name in enumerate(names):
            c = entry.coefficients.get(name, 0)
            matrix[i, j] = _simplify(sympy.sympify(c).xreplace({s: value}))
    return matrix


def check_entry(adjoint, commutators, row, col):
    """ Identity at s = 0, derivative −[row, col] at s = 0 and the group
    law Ad(s)·Ad(−s) = 1 for one entry.

    Returns:
        dict: check name -> bool

    """
    entry = adjoint.cells[(row, col)]
    identity = entry.at(0)
    expected_identity = {col: 1}
    derivative = entry.derivative_at_zero()
    bracket_cell = commutators.cells[(row, col)].coefficients
    group = {}
    for k, c in entry.coefficients.items():
        for n, d in adjoint.cells[(row, k)].coefficients.items():
            group[n] = group.get(n, 0) + c * d.xreplace({s: -s})
    return {
        'identity': _same(identity, expected_identity),
        'derivative': _same(derivative, {n: -c for n, c in bracket_cell.items()}),
        'group_law': entry.closed and _same(group, expected_identity),
    }


def _same(a, b):
    return all(
        _simplify(sympy.sympify(a.get(n, 0)) - sympy.sympify(b.get(n, 0))) == 0
        for n in set(a) | set(b)
    )


def load_table(data, scope):
    """ Parse a printed table.

    Args:
        data (dict): `{"basis": [...], "default": "zero" | "identity",
            "cells": {row: {col: {name: "<expr>"}}}}`; absent cells take the
            default.
        scope (symbolic.kernel.Scope): Scope for the cell expressions.

    Returns:
        StructureTable: Cells are plain {name: sympy.Expr} dicts.

    """
    names = data['basis']
    default = data.get('default', 'zero')
    cells = {}
    for r in names:
        for c in names:
            printed = data.get('cells', {}).get(r, {}).get(c)
            if printed is None:
                cells[(r, c)] = {c: sympy.S.One} if default == 'identity' else {}
            else:
                cells[(r, c)] = {n: parse(text, scope) for n, text in printed.items()}
    return StructureTable(names, cells)


def compare_table(computed, printed, negation=False):
    """ Cell-by-cell comparison of a computed table with a printed one.

    Args:
        computed (StructureTable): Ground truth.
        printed (StructureTable): Printed table from `load_table`.
        negation (bool, optional): Also try s -> -s on printed cells.

    Returns:
        pd.DataFrame: Columns row, col, status, computed, printed. Status is
            'match', 'match-under-s-negation' or 'mismatch'.

    """
    if computed.names != printed.names:
        raise ShapeMismatch(
            f'Tables over {computed.names} and {printed.names} differ in shape.'
        )
    rows = []
    for r in computed.names:
        for c in computed.names:
            mine = computed.combination(r, c)
            theirs = printed.combination(r, c)
            if _same(mine, theirs):
                status = 'match'
            elif negation and _same(mine, {
                    n: sympy.sympify(v).xreplace({s: -s}) for n, v in theirs.items()}):
                status = 'match-under-s-negation'
            else:
                status = 'mismatch'
            rows.append({
                'row': r, 'col': c, 'status': status,
                'computed': render_combination(mine, computed.names),
                'printed': render_combination(theirs, computed.names),
            })
    report = pd.DataFrame(rows, columns=['row', 'col', 'status', 'computed', 'printed'])
    counts = report['status'].value_counts().to_dict()
    logging.info(f'Table comparison: {counts}')
    return report


IBE_SHAPES = {
    'v1': lambda g_u: {'t': 1},
    'v2': lambda g_u: {'t': t, 'x': x},
    'v3': lambda g_u: {'x': 1},
    'v4': lambda g_u: {'x': g_u * t, 'u': 1},
}


def ibe_basis(scope=None):
    """ Symmetry algebra of u_t + g(u)·u_x = 0 as four families
    vᵢ = Fᵢ(u)·shapeᵢ, decomposed with u-dependent coefficients.

    A field W splits as H₄ = Wᵘ, H₂ = ∂ₓ(Wˣ − H₄·g_u·t), H₁ = Wᵗ − H₂·t and
    H₃ = Wˣ − H₄·g_u·t − H₂·x. Fields whose H's depend on t or x lie
    outside the algebra and are returned whole as the residual.

    """
    scope = scope or point_scope({'g': ('u',)})
    g_u = differentiate(scope.function('g').at(), u)
    shapes = {
        name: VectorField(POINT_CHART, shape(g_u))
        for name, shape in IBE_SHAPES.items()
    }

    def decompose(field):
        h4 = field['u']
        rest = normalize(field['x'] - h4 * g_u * t)
        h2 = differentiate(rest, x)
        h1 = normalize(field['t'] - h2 * t)
        h3 = normalize(rest - h2 * x)
        coefficients = {'v1': h1, 'v2': h2, 'v3': h3, 'v4': h4}
        if any(c.free_symbols & {t, x} for c in coefficients.values()):
            return {}, field
        rebuilt = VectorField(POINT_CHART)
        for name, c in coefficients.items():
            rebuilt = rebuilt + c * shapes[name]
        return {n: c for n, c in coefficients.items() if c != 0}, field - rebuilt

    names = list(IBE_SHAPES)
    fields = [
        scope.function(f'F{i}').at() * shapes[name]
        for i, name in enumerate(names, start=1)
    ]
    return LieBasis(names, fields, decomposer=decompose)
