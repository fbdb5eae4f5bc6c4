import logging
import itertools
import functools
import dataclasses

import numpy as np
import scipy.integrate
import scipy.special
import sympy

import config
from symbolic.kernel import (
    opaque_atoms, opaque_symbol, differentiate,
)


class NumericError(Exception):
    pass


class DomainError(NumericError):
    pass


class UnboundSymbol(NumericError):
    pass


class SamplingError(NumericError):
    pass


def _base(symbol):
    """ The underived function symbol whose instantiation covers `symbol` """
    return dataclasses.replace(symbol, orders=(0,) * symbol.arity)


def random_cubic(symbol, rng):
    """ Random cubic polynomial in the argument symbols of `symbol`.

    Coefficients are drawn from [-1, 1]; pure cubic terms are kept away from
    zero so the instantiation is nonconstant in every argument.

    """
    args = [sympy.Symbol(a) for a in symbol.args]
    poly = sympy.S.Zero
    for degree in range(4):
        for monomial in itertools.combinations_with_replacement(args, degree):
            c = rng.uniform(-1, 1)
            if degree == 3 and len(set(monomial)) == 1:
                c = np.sign(c) * (0.25 + 0.75 * abs(c))
            poly += sympy.Rational(round(c * 1000), 1000) * sympy.Mul(*monomial)
    return poly


def _checked_log(z):
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError('ln of a non-positive value.')
    return np.log(z)


def _checked_lambertw(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < -np.exp(-1)):
        raise DomainError('lambertw below the branch point -1/e.')
    return np.real(scipy.special.lambertw(z))


MODULES = [{'log': _checked_log, 'LambertW': _checked_lambertw}, 'numpy']


@dataclasses.dataclass
class Binding:
    """ Numeric values for symbols and polynomial instantiations for functions.

    `functions` maps underived FunctionSymbols to sympy polynomials over
    their argument symbols; derivative atoms evaluate through the analytic
    derivative of the instantiation.

    """
    values: dict
    functions: dict
    seed: int = None

    @classmethod
    def random(cls, expressions, seed=0, low=None, high=None):
        """ Bind every free symbol and opaque function of `expressions` """
        low, high = (low, high) if low is not None else config.numeric['sample_range']
        rng = np.random.default_rng(seed)
        symbols, functions = set(), set()
        for expr in expressions:
            symbols |= {s.name for s in free_symbols(expr)}
            functions |= function_bases(expr)
        values = {name: float(rng.uniform(low, high)) for name in sorted(symbols)}
        polys = {
            symbol: random_cubic(symbol, rng)
            for symbol in sorted(functions, key=lambda s: s.name)
        }
        return cls(values, polys, seed)

    def update(self, **values):
        """ Copy of the binding with some symbol values replaced """
        return dataclasses.replace(self, values={**self.values, **values})

    def instantiation(self, symbol):
        base = _base(symbol)
        if base not in self.functions:
            raise UnboundSymbol(f'Function `{base.name}` has no instantiation.')
        poly = self.functions[base]
        for arg, n in zip(symbol.args, symbol.orders):
            if n:
                poly = sympy.diff(poly, sympy.Symbol(arg), n)
        return poly


def function_bases(expr):
    """ Underived symbols of the non-antiderivative functions in `expr`,
    including those inside antiderivative integrands """
    bases = set()
    for atom in opaque_atoms(expr):
        symbol = opaque_symbol(atom)
        if symbol.is_antiderivative:
            bases |= function_bases(symbol.integrand)
        else:
            bases.add(_base(symbol))
        for arg in atom.args:
            bases |= function_bases(arg)
    return bases


def free_symbols(expr):
    """ Free symbols of `expr` outside antiderivative integrands """
    return sympy.sympify(expr).free_symbols


def instantiate(expr, binding):
    """ Replace every non-antiderivative opaque application by its
    polynomial instantiation """
    expr = sympy.sympify(expr)
    while True:
        mapping = {}
        for atom in opaque_atoms(expr):
            symbol = opaque_symbol(atom)
            if symbol.is_antiderivative:
                continue
            mapping[atom] = binding.instantiation(symbol).xreplace({
                sympy.Symbol(a): arg for a, arg in zip(symbol.args, atom.args)
            })
        if not mapping:
            return expr
        expr = expr.xreplace(mapping)


class Evaluator:
    """ Compiled numeric evaluation of one expression under one set of
    function instantiations.

    Antiderivative atoms are evaluated by quadrature from 0 along their
    integration variable; derivatives across the integration variable are
    integrated under the integral sign.

    """

    def __init__(self, expr, binding):
        expr = instantiate(expr, binding)
        self.quadratures = {}
        for atom in sorted(opaque_atoms(expr), key=sympy.default_sort_key):
            symbol = opaque_symbol(atom)
            assert symbol.orders[symbol.variable] == 0, (
                f'Antiderivative atom `{symbol.full_name}` is derived along '
                f'its integration variable.'
            )
            integrand = symbol.integrand
            for pos, n in enumerate(symbol.orders):
                if n:
                    integrand = sympy.diff(
                        integrand, sympy.Symbol(symbol.args[pos]), n
                    )
            arg_symbols = [sympy.Symbol(a) for a in symbol.args]
            integrand_fn = sympy.lambdify(
                arg_symbols, instantiate(integrand, binding), modules=MODULES
            )
            self.quadratures[sympy.Dummy(symbol.full_name)] = (
                symbol.variable, integrand_fn,
                [Evaluator(arg, binding) for arg in atom.args],
            )
        atoms = sorted(opaque_atoms(expr), key=sympy.default_sort_key)
        expr = expr.xreplace(dict(zip(atoms, self.quadratures)))
        self.symbols = sorted(
            (s for s in expr.free_symbols if s not in self.quadratures),
            key=lambda s: s.name,
        )
        self.function = sympy.lambdify(
            self.symbols + list(self.quadratures), expr, modules=MODULES
        )

    def quadrature(self, values, variable, integrand_fn, arg_evaluators):
        args = [e(values) for e in arg_evaluators]

        def integrand(s):
            point = list(args)
            point[variable] = s
            return integrand_fn(*point)

        result, _ = scipy.integrate.quad(integrand, 0.0, args[variable])
        return result

    def __call__(self, values):
        missing = [s.name for s in self.symbols if s.name not in values]
        if missing:
            raise UnboundSymbol(f'Unbound symbols: {", ".join(missing)}.')
        point = [values[s.name] for s in self.symbols]
        point += [self.quadrature(values, *q) for q in self.quadratures.values()]
        try:
            with np.errstate(all='ignore'):
                result = self.function(*point)
        except ZeroDivisionError:
            raise DomainError('Division by zero.')
        result = complex(result)
        if not np.isfinite(result) or abs(result.imag) > 0:
            raise DomainError('Evaluation left the real domain.')
        return result.real


def evaluate(expr, binding):
    """ Evaluate an expression under a binding.

    Args:
        expr (sympy.Expr): Expression whose free symbols and functions are
            all bound.
        binding (Binding): Numeric values and function instantiations.

    Returns:
        float

    """
    try:
        return Evaluator(expr, binding)(binding.values)
    except ZeroDivisionError:
        raise DomainError('Division by zero.')


def fd_check(expr, variable, binding, step=None):
    """ Relative error between the symbolic and a numeric derivative.

    The numeric derivative is a central difference refined by one
    Richardson extrapolation step.

    Args:
        expr (sympy.Expr): Expression to derive.
        variable (sympy.Symbol): Symbol to derive by.
        binding (Binding): Point at which to compare.
        step (float, optional): Difference step, defaults to config.

    Returns:
        float: |symbolic - numeric| / max(1, |symbolic|).

    """
    step = step or config.numeric['fd_step']
    symbolic = evaluate(differentiate(expr, variable), binding)
    evaluator = Evaluator(expr, binding)
    x0 = binding.values[variable.name]

    def central(h):
        plus = evaluator({**binding.values, variable.name: x0 + h})
        minus = evaluator({**binding.values, variable.name: x0 - h})
        return (plus - minus) / (2 * h)

    numeric = (4 * central(step / 2) - central(step)) / 3
    return abs(symbolic - numeric) / max(1.0, abs(symbolic))


def vanishes(expr, n_points=None, seed=0, tol=None):
    """ Whether `expr` vanishes at random points.

    Every opaque function receives a fresh cubic instantiation per point.
    Points outside the real domain are redrawn.

    """
    n_points = n_points or config.numeric['sample_points']
    tol = tol or config.numeric['tol']
    terms = sympy.Add.make_args(sympy.sympify(expr))
    accepted, attempt = 0, 0
    while accepted < n_points:
        if attempt > config.numeric['max_rejections']:
            raise SamplingError('Too many sample points outside the domain.')
        binding = Binding.random([expr], seed=seed * 100003 + attempt)
        attempt += 1
        try:
            value = evaluate(expr, binding)
            scale = sum(abs(evaluate(term, binding)) for term in terms)
        except DomainError:
            continue
        if abs(value) > tol * max(1.0, scale):
            logging.debug(f'Point {attempt} is nonzero: {value:.3e}')
            return False
        accepted += 1
    return True


def lie_derivative(expr, coefficients, binding, step=None):
    """ Σ cₙ·∂expr/∂n at a point, differenced along the field direction.

    Used where the kernel refuses to derive symbolically (lambertw). The
    central difference is refined by one Richardson step, as in `fd_check`.

    Args:
        expr (sympy.Expr): Expression to derive.
        coefficients (dict): Coordinate name -> field coefficient.
        binding (Binding): Point at which to derive.

    Returns:
        float

    """
    step = step or config.numeric['fd_step']
    evaluator = Evaluator(expr, binding)
    direction = {n: evaluate(c, binding) for n, c in coefficients.items()}

    def moved(h):
        return evaluator({
            **binding.values,
            **{n: binding.values.get(n, 0.0) + h * d for n, d in direction.items()},
        })

    def central(h):
        return (moved(h) - moved(-h)) / (2 * h)

    return (4 * central(step / 2) - central(step)) / 3


def vanishes_along(expr, coefficients, n_points=None, seed=0, tol=None):
    """ Whether a field annihilates `expr` at random points, numerically """
    n_points = n_points or config.numeric['sample_points']
    tol = tol or config.numeric['tol']
    accepted, attempt = 0, 0
    while accepted < n_points:
        if attempt > config.numeric['max_rejections']:
            raise SamplingError('Too many sample points outside the domain.')
        binding = Binding.random([expr, *coefficients.values()], seed=seed * 100003 + attempt)
        attempt += 1
        try:
            value = lie_derivative(expr, coefficients, binding)
            scale = abs(evaluate(expr, binding))
        except DomainError:
            continue
        if abs(value) > tol * max(1.0, scale):
            logging.debug(f'Point {attempt} is not annihilated: {value:.3e}')
            return False
        accepted += 1
    return True


JET_SYMBOLS = ('t', 'x', 'u', 'u_x')


def sample_onshell(spec, n, seed=0, extra=(), low=None, high=None, away_from=()):
    """ Random points of the jet space lying on the equation.

    Args:
        spec (symmetry.determining.EquationSpec): The equation.
        n (int): Number of bindings to return.
        seed (int): Random seed; bindings are deterministic given the seed.
        extra (list of sympy.Expr, optional): Expressions that must also be
            finite at every returned point.
        away_from (list of sympy.Expr, optional): Denominators; points where
            one is smaller than `pole_margin` in absolute value are redrawn.

    Returns:
        [Binding, ..]

    """
    low, high = (low, high) if low is not None else config.numeric['sample_range']
    margin = config.numeric['pole_margin']
    expressions = [spec.f, spec.g, *extra, *away_from]
    template = Binding.random(expressions, seed=seed)
    rng = np.random.default_rng(seed)
    f = Evaluator(spec.f, template)
    g = Evaluator(spec.g, template)
    extra = [Evaluator(e, template) for e in extra]
    poles = [Evaluator(e, template) for e in away_from]
    names = sorted(set(template.values) | set(JET_SYMBOLS))
    names = [name for name in names if name != 'u_t']

    bindings = []
    rejections = 0
    while len(bindings) < n:
        if rejections > config.numeric['max_rejections']:
            raise SamplingError(
                f'Rejected {rejections} points, the equation is singular '
                f'almost everywhere on the sampling box.'
            )
        values = {name: float(rng.uniform(low, high)) for name in names}
        try:
            if any(abs(pole(values)) < margin for pole in poles):
                raise DomainError('Near a pole.')
            f_value, g_value = f(values), g(values)
            values['u_t'] = f_value - g_value * values['u_x']
            for e in extra:
                if abs(e(values)) > 1e8:
                    raise DomainError('Near a singular denominator.')
        except (DomainError, ZeroDivisionError):
            rejections += 1
            continue
        bindings.append(Binding(values, template.functions, seed))
    return bindings


@functools.lru_cache(maxsize=None)
def derivative_corpus():
    """ Expressions and variables for finite-difference validation """
    from symbolic.kernel import Scope
    from symbolic.parser import parse
    scope = Scope(symbols=('t', 'x', 'u', 'u_x', 'c1'),
                  functions={'f': ('x', 'u'), 'g': ('x', 'u'), 'Phi': ('x',)})
    texts = [
        'u^2', 'f(x,u)*g(x,u)', 'g(x,u)', 'f(x,u)/(2+g(x,u)^2)',
        'exp(g(x,u))*u_x - f(x,u)', 'ln(3+x^2)*Phi(x*u)', 'x^3*u - c1*u^2*x',
        '(g_u(x,u)*t + x)/(1+u^2)', 'Phi(x)^2*exp(-x*u)',
    ]
    exprs = [parse(text, scope) for text in texts]
    return tuple(
        (expr, symbol) for expr in exprs
        for symbol in sorted(expr.free_symbols, key=lambda s: s.name)
    )


def check_derivatives(corpus=None, n_points=20, seed=0):
    """ Finite-difference errors for every (expression, variable) pair.

    Returns:
        [(sympy.Expr, sympy.Symbol, float), ..]: Worst error per pair.

    """
    corpus = corpus or derivative_corpus()
    results = []
    for i, (expr, symbol) in enumerate(corpus):
        worst = 0.0
        for k in range(n_points):
            binding = Binding.random([expr], seed=seed * 1000 + i * n_points + k)
            try:
                worst = max(worst, fd_check(expr, symbol, binding))
            except DomainError:
                continue
        results.append((expr, symbol, worst))
    return results
