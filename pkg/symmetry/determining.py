import enum
import logging
import dataclasses

import pandas as pd
import sympy

import config
from symbolic.kernel import (
    Verdict, normalize, differentiate, substitute, collect_powers,
    polynomial_coefficients, opaque_atoms, opaque_symbol, antiderivative,
    is_zero,
)
from symbolic.parser import parse, render
from symbolic.jet import POINT_CHART, VectorField, ProlongationError, prolong1
from utils import numeric

t, x, u = sympy.symbols('t x u')
u_t, u_x = sympy.symbols('u_t u_x')


class IndependenceUnavailable(Exception):
    """ The f/g monomial split is not justified by the equation's flags.

    `partial` holds the system split by powers of u_x only.

    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class ApplicabilityError(Exception):
    pass


class AnsatzTooLarge(Exception):
    pass


class SymmetryVerdict(enum.Enum):
    PROVEN_SYMMETRY = 'proven-symmetry'
    PROVEN_NOT = 'proven-not'
    PROBABLE = 'probable'


CONSTANTS = (
    'c1', 'c2', 'c3', 'alpha1', 'alpha2', 'beta1',
    *(f'gamma{i}' for i in range(1, 7)), *(f'eta{i}' for i in range(1, 6)),
    's', 'lam', 'pm',
)


def point_scope(functions=None):
    """ Scope with the point chart, its jets, the classification constants and
    the functions of the symmetry analysis.

    Args:
        functions (dict, optional): Extra or overriding function
            declarations, name to argument names.

    """
    declared = {
        'f': ('x', 'u'), 'g': ('x', 'u'),
        'xi': ('t', 'x', 'u'), 'tau': ('t', 'x', 'u'), 'phi': ('t', 'x', 'u'),
        'F1': ('u',), 'F2': ('u',), 'F3': ('u',), 'F4': ('u',),
        'Phi': ('lam',), 'Psi': ('lam',),
    }
    declared.update(functions or {})
    scope = POINT_CHART.scope().declare(*CONSTANTS)
    for name, args in declared.items():
        scope.declare_function(name, args)
    return scope


@dataclasses.dataclass
class EquationSpec:
    """ The equation u_t + g·u_x = f for given f(x,u) and g(x,u) """
    f: sympy.Expr
    g: sympy.Expr
    f_is_zero: bool = False
    f_nonconstant: bool = True
    g_nonconstant: bool = True

    def __post_init__(self):
        self.f = normalize(self.f)
        self.g = normalize(self.g)
        forbidden = {t, u_t, u_x} | set(POINT_CHART.symbols(*POINT_CHART.jets(2)))
        for name, expr in (('f', self.f), ('g', self.g)):
            assert not (expr.free_symbols & forbidden), (
                f'`{name}` may depend on x and u only, got {render(expr)}.'
            )
        if self.f == 0:
            self.f_is_zero = True
        assert not self.f_is_zero or self.f == 0, 'f is flagged zero but is not.'

    @classmethod
    def opaque(cls):
        """ The class itself: opaque nonconstant f(x,u) and g(x,u) """
        scope = point_scope()
        return cls(scope.function('f').at(), scope.function('g').at())

    @classmethod
    def from_strings(cls, f, g, scope=None, flags=None):
        scope = scope or point_scope()
        return cls(parse(f, scope), parse(g, scope), **(flags or {}))

    @classmethod
    def from_json(cls, data, scope=None):
        """ Build from `{"f": "<expr>", "g": "<expr>", "flags": {...}}` """
        return cls.from_strings(data['f'], data['g'], scope, data.get('flags'))

    @property
    def equation(self):
        return u_t + self.g * u_x - self.f

    @property
    def is_generic(self):
        """ Whether f and g are opaque applications flagged nonconstant """
        return (
            opaque_symbol(self.f) is not None and opaque_symbol(self.g) is not None
            and self.f_nonconstant and self.g_nonconstant and not self.f_is_zero
        )

    def to_json(self):
        return {
            'f': render(self.f), 'g': render(self.g),
            'flags': {
                'f_is_zero': self.f_is_zero,
                'f_nonconstant': self.f_nonconstant,
                'g_nonconstant': self.g_nonconstant,
            },
        }


def generic_field(scope=None):
    """ ξ∂_t + τ∂_x + φ∂_u with opaque coefficients of (t,x,u) """
    scope = scope or point_scope()
    return VectorField(POINT_CHART, {
        't': scope.function('xi').at(),
        'x': scope.function('tau').at(),
        'u': scope.function('phi').at(),
    })


def invariance_residual(spec, field):
    """ Prolonged field applied to the equation, restricted to solutions.

    Args:
        spec (EquationSpec): The equation.
        field (VectorField): Point field on (t,x,u).

    Returns:
        sympy.Expr: Normalized residual in t, x, u and u_x.

    """
    assert field.chart == POINT_CHART, f'Field lives on {field.chart}, not {POINT_CHART}.'
    prolonged = prolong1(field)
    residual = substitute(
        prolonged.apply(spec.equation), {u_t: spec.f - spec.g * u_x}
    )
    second_order = set(POINT_CHART.symbols(*POINT_CHART.jets(2))) | {u_t}
    surviving = residual.free_symbols & second_order
    if surviving:
        raise ProlongationError(
            f'Jet coordinates {sorted(map(str, surviving))} survive the '
            f'on-shell substitution.'
        )
    return residual


@dataclasses.dataclass
class DeterminingSystem:
    """ Residuals of a monomial split, each tagged with the monomial it
    multiplies: `{'u_x': k, 'f': a, 'g': b}` stands for u_x^k·f^a·g^b.
    """
    residuals: list
    assumptions: tuple = ()

    def __len__(self):
        return len(self.residuals)

    @property
    def expressions(self):
        return [expr for _, expr in self.residuals]

    def reassemble(self, spec):
        return normalize(sum(
            (u_x ** tag['u_x'] * spec.f ** tag.get('f', 0)
             * spec.g ** tag.get('g', 0) * expr
             for tag, expr in self.residuals),
            sympy.S.Zero,
        ))

    def distinct(self):
        """ Residuals with duplicates up to sign removed, in split order """
        kept = []
        for expr in self.expressions:
            if not any(normalize(expr - e) == 0 or normalize(expr + e) == 0
                       for e in kept):
                kept.append(expr)
        return kept

    def to_frame(self):
        columns = []
        for tag, _ in self.residuals:
            columns += [key for key in tag if key not in columns]
        frame = pd.DataFrame(
            [{**tag, 'residual': render(expr)} for tag, expr in self.residuals],
            columns=columns + ['residual'],
        )
        # Absent exponents are zero; absent labels stay empty.
        for key in columns:
            if frame[key].map(lambda v: isinstance(v, str)).any():
                frame[key] = frame[key].fillna('')
            else:
                frame[key] = frame[key].fillna(0).astype(int)
        return frame

    def to_json(self):
        return {
            'assumptions': list(self.assumptions),
            'residuals': [
                {'monomial': tag, 'residual': render(expr)}
                for tag, expr in self.residuals
            ],
            'distinct': [render(expr) for expr in self.distinct()],
        }

    def to_markdown(self):
        return self.to_frame().to_markdown(index=False)


def split(residual, spec):
    """ Split a residual into the over-determined system.

    The residual is first split by powers of u_x. For generic f and g the
    coefficients are split further by monomials in f and g, treating
    {1, f, f²} and {1, g, g²} as independent.

    Args:
        residual (sympy.Expr): Output of `invariance_residual`.
        spec (EquationSpec): The equation the residual belongs to.

    Returns:
        DeterminingSystem

    Raises:
        IndependenceUnavailable: If the flags do not justify the f/g split;
            the u_x split is attached to the exception.

    """
    powers = collect_powers(residual, u_x)
    partial = DeterminingSystem(
        [({'u_x': k}, c) for k, c in sorted(powers.items())], ('u_x',)
    )
    if not spec.is_generic:
        raise IndependenceUnavailable(
            'f and g are not opaque nonconstant functions; split by u_x only.',
            partial,
        )
    residuals = []
    for k, coefficient in sorted(powers.items()):
        monomials = polynomial_coefficients(coefficient, [spec.f, spec.g])
        for (a, b), expr in sorted(monomials.items()):
            residuals.append(({'u_x': k, 'f': a, 'g': b}, expr))
    system = DeterminingSystem(residuals, ('u_x', 'f', 'g'))
    logging.info(
        f'Split into {len(system)} residuals, {len(system.distinct())} distinct.'
    )
    return system


def determining_system(spec=None, field=None):
    """ Split residual of the generic field for an equation """
    spec = spec or EquationSpec.opaque()
    field = field or generic_field()
    return split(invariance_residual(spec, field), spec)


@dataclasses.dataclass
class Verification:
    verdict: SymmetryVerdict
    residual: sympy.Expr

    @property
    def passed(self):
        return self.verdict == SymmetryVerdict.PROVEN_SYMMETRY

    def to_json(self):
        return {'verdict': self.verdict.value, 'residual': render(self.residual)}


def verify_candidate(spec, field, seed=0):
    """ Decide whether a point field is a symmetry of the equation.

    Returns:
        Verification: proven-symmetry when the residual normalizes to zero,
            probable when only numeric probing vanishes, proven-not
            otherwise.

    """
    residual = invariance_residual(spec, field)
    verdict = is_zero(residual, seed=seed)
    if verdict == Verdict.PROBABLE:
        logging.warning(f'Residual vanishes only numerically: {render(residual)}')
    return Verification({
        Verdict.PROVEN: SymmetryVerdict.PROVEN_SYMMETRY,
        Verdict.PROBABLE: SymmetryVerdict.PROBABLE,
        Verdict.REFUTED: SymmetryVerdict.PROVEN_NOT,
    }[verdict], residual)


@dataclasses.dataclass
class GeneratorFamily:
    """ Parametric point field built for a given equation.

    `build` maps an EquationSpec to the VectorField, so coefficients such as
    g_u follow the equation's g. `applies` decides whether the family is
    meant for an equation; `condition` describes it.
    """
    name: str
    build: object
    applies: object
    condition: str

    def instantiate(self, spec):
        return self.build(spec)


def _depends(expr, *symbols):
    return bool(sympy.sympify(expr).free_symbols & set(symbols))


def _ibe_applies(spec):
    return spec.f_is_zero and not _depends(spec.g, x)


def _ibe_field(spec, scope):
    F1, F2, F3, F4 = (scope.function(f'F{i}').at() for i in range(1, 5))
    return VectorField(POINT_CHART, {
        't': F2 * t + F1,
        'x': F4 * differentiate(spec.g, u) * t + F2 * x + F3,
        'u': F4,
    })


def _projective_field(spec, scope):
    c1, c2, c3 = (scope.symbol(f'c{i}') for i in range(1, 4))
    return VectorField(POINT_CHART, {
        't': c1 * t + scope.function('F1').at(),
        'x': c3 * t + c1 * x + c2,
        'u': c3 / differentiate(spec.g, u),
    })


def _constant_speed_field(spec, scope):
    c1, c2 = scope.symbol('c1'), scope.symbol('c2')
    return VectorField(POINT_CHART, {
        't': c1 * t + scope.function('F1').at(),
        'x': c1 * x + c2,
        'u': scope.function('F2').at(),
    })


def _homogeneous_field(spec, scope):
    F1, F2, F3 = (scope.function(f'F{i}').at() for i in range(1, 4))
    P = antiderivative('P', ('x', 'u'), sympy.exp(spec.g), 'x').at()
    return VectorField(POINT_CHART, {
        't': F2 * t + F1,
        'x': sympy.exp(-spec.g) * (F2 * P + F3),
    })


def _homogeneous_corrected_field(spec, scope):
    F1, F2, F3 = (scope.function(f'F{i}').at() for i in range(1, 4))
    Q = antiderivative('Q', ('x', 'u'), 1 / spec.g, 'x').at()
    return VectorField(POINT_CHART, {
        't': F2 * t + F1,
        'x': spec.g * (F2 * Q + F3),
    })


def families(scope=None):
    """ Generator families of the f = 0 subclasses, by name """
    scope = scope or point_scope()

    def bind(build):
        return lambda spec: build(spec, scope)

    return {
        'ibe': GeneratorFamily(
            'ibe', bind(_ibe_field), _ibe_applies, 'f = 0 and g = g(u)'),
        'projective': GeneratorFamily(
            'projective', bind(_projective_field),
            lambda spec: _ibe_applies(spec) and differentiate(spec.g, u) != 0,
            'f = 0, g = g(u) and g_u != 0'),
        'constant-speed': GeneratorFamily(
            'constant-speed', bind(_constant_speed_field),
            lambda spec: spec.f_is_zero and not _depends(spec.g, x, u),
            'f = 0 and g constant'),
        'homogeneous': GeneratorFamily(
            'homogeneous', bind(_homogeneous_field),
            lambda spec: spec.f_is_zero, 'f = 0'),
        'homogeneous-corrected': GeneratorFamily(
            'homogeneous-corrected', bind(_homogeneous_corrected_field),
            lambda spec: spec.f_is_zero and spec.g != 0, 'f = 0 and g != 0'),
    }


def verify_family(spec, family, seed=0):
    """ Verify a generator family on an equation it applies to.

    Residuals that keep derivatives of an antiderivative atom across its
    integration variable are never decided symbolically; they fall through
    to numeric probing with quadrature.

    Raises:
        ApplicabilityError: If the family is not meant for the equation.

    """
    if not family.applies(spec):
        raise ApplicabilityError(
            f'Family `{family.name}` requires {family.condition}.'
        )
    return verify_candidate(spec, family.instantiate(spec), seed=seed)


def _monomials(degree):
    return [
        t ** a * x ** b * u ** c
        for total in range(degree + 1)
        for a in range(total + 1) for b in range(total - a + 1)
        for c in [total - a - b]
    ]


def ansatz_solve(spec, degree):
    """ Symmetries with polynomial coefficients of bounded total degree.

    Every distinct opaque atom of the residual is treated as independent of
    t, x, u and the other atoms when matching monomials.

    Args:
        spec (EquationSpec): The equation.
        degree (int): Total degree of the ansatz for ξ, τ and φ.

    Returns:
        [VectorField, ..]: Basis of the solution space.

    """
    if degree > config.ansatz['max_degree']:
        raise AnsatzTooLarge(
            f'Ansatz degree {degree} exceeds {config.ansatz["max_degree"]}.'
        )
    monomials = _monomials(degree)
    unknowns, coefficients = [], {}
    for name in POINT_CHART.coordinates:
        ks = sympy.symbols(f'k_{name}_0:{len(monomials)}')
        unknowns += ks
        coefficients[name] = sum(k * m for k, m in zip(ks, monomials))
    ansatz = VectorField(POINT_CHART, coefficients)
    residual = invariance_residual(spec, ansatz)

    generators = [t, x, u, u_x] + sorted(opaque_atoms(residual), key=sympy.default_sort_key)
    equations = list(polynomial_coefficients(residual, generators).values())
    logging.info(
        f'Ansatz of degree {degree}: {len(unknowns)} unknowns, '
        f'{len(equations)} equations.'
    )
    if equations:
        matrix, _ = sympy.linear_eq_to_matrix(equations, unknowns)
        basis = matrix.nullspace()
    else:
        basis = [sympy.eye(len(unknowns)).col(i) for i in range(len(unknowns))]
    return [
        ansatz.map(lambda c, v=vector: c.xreplace(dict(zip(unknowns, v))))
        for vector in basis
    ]


def span_contains(basis, field):
    """ Whether `field` is a constant combination of `basis`, by rank """
    fields = [*basis, field]
    generators = [t, x, u] + sorted(
        set().union(*(opaque_atoms(v[n]) for v in fields
                      for n in POINT_CHART.coordinates)),
        key=sympy.default_sort_key,
    )
    rows, keys = [], set()
    for v in fields:
        row = {
            (name, monomial): c
            for name in POINT_CHART.coordinates
            for monomial, c in polynomial_coefficients(v[name], generators).items()
        }
        keys |= set(row)
        rows.append(row)
    keys = sorted(keys, key=str)
    matrix = sympy.Matrix([[row.get(k, 0) for k in keys] for row in rows])
    return matrix[:-1, :].rank() == matrix.rank()


def compare_printed(computed, printed, scope=None):
    """ Match printed equations against computed ones, up to sign.

    Args:
        computed (list of sympy.Expr): Computed residuals.
        printed (list of str): Printed equations (left sides of `= 0`).

    Returns:
        pd.DataFrame: One row per printed equation with its status and the
            computed counterpart, if any.

    """
    scope = scope or point_scope()
    rows = []
    unmatched = list(computed)
    for text in printed:
        expr = parse(text, scope)
        match = next((
            c for c in unmatched
            if normalize(c - expr) == 0 or normalize(c + expr) == 0
        ), None)
        if match is not None:
            unmatched.remove(match)
        rows.append({
            'printed': text,
            'status': 'match' if match is not None else 'mismatch',
            'computed': render(match) if match is not None else None,
        })
    for c in unmatched:
        rows.append({'printed': None, 'status': 'missing', 'computed': render(c)})
    return pd.DataFrame(rows, columns=['printed', 'status', 'computed'])


def compare_printed_equations(data, spec=None, scope=None):
    """ Diff the computed determining equation, its u_x split and the
    final system against their printed forms.

    Args:
        data (dict): Printed forms with keys 'determining_equation',
            'ux_split' and 'system'.

    Returns:
        dict: name -> pd.DataFrame

    """
    scope = scope or point_scope()
    spec = spec or EquationSpec.opaque()
    residual = invariance_residual(spec, generic_field(scope))
    system = split(residual, spec)
    powers = collect_powers(residual, u_x)
    printed = parse(data['determining_equation'], scope)
    difference = normalize(residual - printed)
    equation = pd.DataFrame([{
        'printed': data['determining_equation'],
        'status': 'match' if difference == 0 else 'mismatch',
        'computed': render(residual),
        'difference': render(difference),
    }])
    ux_split = compare_printed(
        [powers.get(1, sympy.S.Zero), powers.get(0, sympy.S.Zero)],
        data['ux_split'], scope,
    )
    return {
        'determining_equation': equation,
        'ux_split': ux_split,
        'system': compare_printed(system.distinct(), data['system'], scope),
    }


def corroborate(spec, field, n=None, seed=0):
    """ Largest |pr(field)(equation)| over sampled on-shell jet points.

    The prolonged field is applied to the equation without the symbolic
    on-shell substitution; u_t is bound numerically instead. The numerator
    of the residual is measured relative to the size of its terms, at
    points kept away from the zeros of every denominator.

    """
    n = n or config.numeric['samples']
    expr = prolong1(field).apply(spec.equation)
    numerator, denominator = sympy.fraction(sympy.together(expr))
    terms = sympy.Add.make_args(sympy.expand(numerator))
    poles = [
        d for d in (denominator, *(sympy.fraction(sympy.together(e))[1] for e in (spec.f, spec.g)))
        if d.free_symbols
    ]
    bindings = numeric.sample_onshell(spec, n, seed=seed, extra=[expr], away_from=poles)
    worst = max(
        abs(numeric.evaluate(numerator, b))
        / max(1.0, sum(abs(numeric.evaluate(term, b)) for term in terms))
        for b in bindings
    )
    logging.debug(f'Largest on-shell residual over {n} samples: {worst:.3e}')
    return worst
