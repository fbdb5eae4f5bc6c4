import itertools
import functools
import dataclasses

import sympy

from symbolic.kernel import SymbolicError, Scope, normalize, differentiate


class ChartMismatch(SymbolicError):
    pass


class ProlongationError(SymbolicError):
    pass


@dataclasses.dataclass(frozen=True)
class Chart:
    """ Coordinate chart with jet coordinates up to `order`.

    Jet coordinates are generated from the dependent and independent names,
    with indices ordered by position among the independents, so `u_tx` is
    the single name for both mixed second derivatives.

    """
    independent: tuple
    dependent: tuple
    order: int = 2

    def __post_init__(self):
        names = self.independent + self.dependent
        assert len(set(names)) == len(names), (
            f'Coordinate names of chart {names} are not unique.'
        )

    @property
    def coordinates(self):
        return self.independent + self.dependent

    @functools.lru_cache(maxsize=None)
    def jets(self, order):
        """ Names of the jet coordinates of exactly `order` """
        return tuple(
            f'{dep}_{"".join(index)}'
            for dep in self.dependent
            for index in itertools.combinations_with_replacement(
                self.independent, order
            )
        )

    def jet(self, dependent, *indices):
        """ Name of the jet coordinate `dependent` derived by `indices` """
        positions = sorted(self.independent.index(i) for i in indices)
        return f'{dependent}_{"".join(self.independent[p] for p in positions)}'

    @property
    def all_jets(self):
        return tuple(
            name for k in range(1, self.order + 1) for name in self.jets(k)
        )

    def symbols(self, *names):
        return [sympy.Symbol(n) for n in names]

    def __getitem__(self, name):
        if name not in self.coordinates and name not in self.all_jets:
            raise ChartMismatch(f'`{name}` is not a coordinate of {self}.')
        return sympy.Symbol(name)

    def scope(self):
        """ Parser scope declaring the coordinates and jet coordinates """
        return Scope(symbols=self.coordinates + self.all_jets)

    def __str__(self):
        return f'({",".join(self.independent)};{",".join(self.dependent)})'


POINT_CHART = Chart(('t', 'x'), ('u',))
EQUIVALENCE_CHART = Chart(('t', 'x', 'u'), ('f', 'g'), order=1)


class VectorField:
    """ Vector field stored as a sparse map from coordinate to coefficient.

    Absent coordinates have zero coefficient. Fields support addition,
    scaling and acting on expressions as derivations.

    """

    def __init__(self, chart, coefficients=None):
        self.chart = chart
        self.coefficients = {}
        for name, coefficient in (coefficients or {}).items():
            if name not in chart.coordinates:
                raise ChartMismatch(f'`{name}` is not a coordinate of {chart}.')
            coefficient = normalize(coefficient)
            if coefficient != 0:
                self.coefficients[name] = coefficient

    def __getitem__(self, name):
        return self.coefficients.get(name, sympy.S.Zero)

    def __add__(self, other):
        self._check_chart(other)
        names = set(self.coefficients) | set(other.coefficients)
        return VectorField(self.chart, {n: self[n] + other[n] for n in names})

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, scalar):
        return VectorField(
            self.chart, {n: scalar * c for n, c in self.coefficients.items()}
        )

    __rmul__ = __mul__

    def __neg__(self):
        return (-1) * self

    def __eq__(self, other):
        return (isinstance(other, VectorField) and self.chart == other.chart
                and self.coefficients == other.coefficients)

    def __hash__(self):
        return hash((self.chart, frozenset(self.coefficients.items())))

    def __repr__(self):
        return f'VectorField({self.render()})'

    def _check_chart(self, other):
        if self.chart != other.chart:
            raise ChartMismatch(f'Fields on {self.chart} and {other.chart}.')

    def is_zero(self):
        return not self.coefficients

    def map(self, function):
        """ New field with `function` applied to every coefficient """
        return VectorField(
            self.chart, {n: function(c) for n, c in self.coefficients.items()}
        )

    def apply(self, expr):
        """ Act on an expression as the derivation Σ coeff·∂/∂coord """
        return apply(self, expr)

    def render(self):
        from symbolic.parser import render
        if not self.coefficients:
            return '0'
        return ' + '.join(
            f'({render(self[n])})*d_{n}'
            for n in self.chart.coordinates if n in self.coefficients
        )

    def to_json(self):
        from symbolic.parser import render
        return {
            'chart': list(self.chart.coordinates),
            'coeffs': {n: render(c) for n, c in self.coefficients.items()},
        }

    @classmethod
    def from_json(cls, data, scope, chart=POINT_CHART):
        """ Build a field from `{"chart": [...], "coeffs": {name: expr}}` """
        from symbolic.parser import parse
        if tuple(data.get('chart', chart.coordinates)) != chart.coordinates:
            raise ChartMismatch(
                f'Field chart {data["chart"]} does not match {chart}.'
            )
        return cls(chart, {
            name: parse(text, scope) for name, text in data['coeffs'].items()
        })


def apply(field, expr):
    """ Σᵢ coeffᵢ · ∂expr/∂coordᵢ, normalized """
    expr = sympy.sympify(expr)
    return normalize(sum(
        (c * differentiate(expr, sympy.Symbol(n))
         for n, c in field.coefficients.items()),
        sympy.S.Zero,
    ))


def total_derivative(expr, independent, chart=POINT_CHART):
    """ Total derivative of an expression on the jet space of `chart`.

    Args:
        expr (sympy.Expr): Expression in the coordinates and jets of the
            chart, up to order `chart.order - 1`.
        independent (str): The independent coordinate to derive along.
        chart (Chart): The chart the expression lives on.

    Returns:
        sympy.Expr

    """
    if independent not in chart.independent:
        raise ChartMismatch(f'`{independent}` is not independent on {chart}.')
    expr = sympy.sympify(expr)
    top = set(chart.symbols(*chart.jets(chart.order)))
    if expr.free_symbols & top:
        raise ChartMismatch(
            f'Total derivative of an order-{chart.order} jet needs a larger chart.'
        )
    result = differentiate(expr, sympy.Symbol(independent))
    for dep in chart.dependent:
        result += sympy.Symbol(chart.jet(dep, independent)) * differentiate(
            expr, sympy.Symbol(dep)
        )
        for k in range(1, chart.order):
            for name in chart.jets(k):
                if not name.startswith(f'{dep}_'):
                    continue
                indices = tuple(name.split('_', 1)[1])
                higher = chart.jet(dep, *indices, independent)
                result += sympy.Symbol(higher) * differentiate(
                    expr, sympy.Symbol(name)
                )
    return normalize(result)


@dataclasses.dataclass
class ProlongedField:
    """ First prolongation of a point field.

    `jets` maps each first-order jet name (`u_t`, `u_x`) to its prolonged
    coefficient; `characteristic` is Q = φ − Σ ξᴶ·u_J.

    """
    base: VectorField
    characteristic: sympy.Expr
    jets: dict

    @property
    def phi_t(self):
        return self.jets['u_t']

    @property
    def phi_x(self):
        return self.jets['u_x']

    def apply(self, expr):
        """ Act on a first-order jet expression """
        result = apply(self.base, expr)
        for name, coefficient in self.jets.items():
            result += coefficient * differentiate(expr, sympy.Symbol(name))
        return normalize(result)


def prolong1(field):
    """ First prolongation of a point vector field.

    Args:
        field (VectorField): Field on a chart whose coefficients depend on
            the base coordinates only.

    Returns:
        ProlongedField

    """
    chart = field.chart
    jet_symbols = set(chart.symbols(*chart.all_jets))
    for name, coefficient in field.coefficients.items():
        if coefficient.free_symbols & jet_symbols:
            raise ProlongationError(
                f'Coefficient of d_{name} depends on jet coordinates.'
            )
    assert chart.order >= 2, 'Prolongation needs second-order jet symbols.'
    jets = {}
    for dep in chart.dependent:
        q = field[dep] - sum(
            (field[i] * sympy.Symbol(chart.jet(dep, i)) for i in chart.independent),
            sympy.S.Zero,
        )
        for j in chart.independent:
            jets[chart.jet(dep, j)] = normalize(
                total_derivative(q, j, chart) + sum(
                    (field[i] * sympy.Symbol(chart.jet(dep, i, j))
                     for i in chart.independent),
                    sympy.S.Zero,
                )
            )
    characteristic = normalize(field[chart.dependent[0]] - sum(
        (field[i] * sympy.Symbol(chart.jet(chart.dependent[0], i))
         for i in chart.independent),
        sympy.S.Zero,
    ))
    return ProlongedField(field, characteristic, jets)
