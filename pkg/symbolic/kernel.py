import enum
import logging
import dataclasses

import sympy


class SymbolicError(Exception):
    """ Base class for failures raised by the expression kernel """


class ParseError(SymbolicError):

    def __init__(self, message, position):
        super().__init__(f'{message} (at position {position})')
        self.position = position


class UndeclaredIdentifier(SymbolicError):
    pass


class ArityMismatch(SymbolicError):
    pass


class NotPolynomial(SymbolicError):
    pass


class UnsupportedDerivative(SymbolicError):
    pass


class Verdict(enum.Enum):
    """ Outcome of an equality or vanishing test.

    `PROBABLE` is only ever produced by numeric probing and is never
    interchangeable with `PROVEN`.

    """
    PROVEN = 'proven'
    PROBABLE = 'probable'
    REFUTED = 'refuted'


BUILTINS = {
    'exp': sympy.exp,
    'ln': sympy.log,
    'lambertw': sympy.LambertW,
}

# Function classes are shared between scopes so that equal function symbols
# always produce equal applications.
_FUNCTION_CLASSES = {}


@dataclasses.dataclass(frozen=True)
class FunctionSymbol:
    """ Opaque function of named arguments with a derivative registry.

    The derivative registry is implicit: deriving by argument position `i`
    increments `orders[i]`, and the derived symbol is named after the base
    name followed by the argument names in positional order (`g_xu`). Mixed
    partials therefore commute by construction.

    An antiderivative atom carries an `integrand` over its argument symbols
    and the position of the integration `variable`. Its derivative along the
    variable is the integrand; derivatives along the remaining arguments are
    unknown atoms that symbolic verification refuses to rely on.

    """
    name: str
    args: tuple
    orders: tuple = None
    integrand: sympy.Expr = None
    variable: int = None

    def __post_init__(self):
        if self.orders is None:
            object.__setattr__(self, 'orders', (0,) * len(self.args))
        assert len(self.orders) == len(self.args), (
            f'Derivative orders of `{self.name}` do not match its arguments.'
        )

    @property
    def full_name(self):
        suffix = ''.join(arg * n for arg, n in zip(self.args, self.orders))
        return f'{self.name}_{suffix}' if suffix else self.name

    @property
    def arity(self):
        return len(self.args)

    @property
    def is_antiderivative(self):
        return self.integrand is not None

    @property
    def is_unknown(self):
        """ Whether this is a derivative of an antiderivative atom across
        its integration variable, which has no registered value. """
        if not self.is_antiderivative:
            return False
        return any(
            n > 0 for pos, n in enumerate(self.orders) if pos != self.variable
        )

    def derive(self, position):
        """ Symbol of the partial derivative by the argument at `position` """
        orders = list(self.orders)
        orders[position] += 1
        return dataclasses.replace(self, orders=tuple(orders))

    def partial(self, position, call_args):
        """ Partial derivative of the application `self(*call_args)` """
        if (self.is_antiderivative and position == self.variable
                and self.orders[position] == 0):
            expr = self.integrand
            for pos, n in enumerate(self.orders):
                if n:
                    expr = sympy.diff(expr, sympy.Symbol(self.args[pos]), n)
            return expr.xreplace({
                sympy.Symbol(a): arg for a, arg in zip(self.args, call_args)
            })
        return self.derive(position)(*call_args)

    @property
    def func(self):
        """ The sympy function class applying this symbol """
        if self not in _FUNCTION_CLASSES:
            symbol = self

            def fdiff(application, argindex=1):
                return symbol.partial(argindex - 1, application.args)

            _FUNCTION_CLASSES[self] = type(self.full_name, (sympy.Function,), {
                'nargs': self.arity,
                'fdiff': fdiff,
                'opaque_symbol': symbol,
            })
        return _FUNCTION_CLASSES[self]

    def __call__(self, *call_args):
        if len(call_args) != self.arity:
            raise ArityMismatch(
                f'`{self.full_name}` takes {self.arity} argument(s), '
                f'got {len(call_args)}.'
            )
        return self.func(*map(sympy.sympify, call_args))

    def at(self):
        """ Application to its own argument symbols, e.g. `g(x, u)` """
        return self(*[sympy.Symbol(a) for a in self.args])


def antiderivative(name, args, integrand, variable):
    """ Register the antiderivative atom `name(args) = ∫ integrand d(variable)`.

    Args:
        name (str): Name of the atom, e.g. 'P'.
        args (tuple of str): Argument names, e.g. ('x', 'u').
        integrand (sympy.Expr): Integrand in terms of the argument symbols.
        variable (str): Integration variable, one of `args`.

    Returns:
        FunctionSymbol

    """
    assert variable in args, f'`{variable}` is not an argument of `{name}`.'
    return FunctionSymbol(
        name, tuple(args), integrand=sympy.sympify(integrand),
        variable=tuple(args).index(variable),
    )


def opaque_symbol(expr):
    """ The FunctionSymbol of an opaque application, or None """
    return getattr(type(expr), 'opaque_symbol', None)


def opaque_atoms(expr):
    """ All opaque function applications in an expression """
    return {
        a for a in sympy.sympify(expr).atoms(sympy.Function)
        if opaque_symbol(a) is not None
    }


def unknown_atoms(expr):
    """ Applications of unregistered antiderivative derivatives """
    return {a for a in opaque_atoms(expr) if opaque_symbol(a).is_unknown}


class Scope:
    """ Declared symbols and function symbols visible to the parser.

    Derived function names (`g_x`, `g_xu`, `Phi_lam`) resolve through the
    base symbol's registry and never need declaring.

    """

    def __init__(self, symbols=(), functions=None):
        self.symbols = {}
        self.functions = {}
        self.declare(*symbols)
        for name, args in (functions or {}).items():
            self.declare_function(name, args)

    def declare(self, *names):
        for name in names:
            self.symbols[name] = sympy.Symbol(name)
        return self

    def declare_function(self, name, args):
        if isinstance(args, FunctionSymbol):
            self.functions[name] = args
        else:
            self.functions[name] = FunctionSymbol(name, tuple(args))
        return self

    def extend(self, other):
        """ New scope holding the declarations of both scopes """
        scope = Scope()
        for source in (self, other):
            scope.symbols.update(source.symbols)
            scope.functions.update(source.functions)
        return scope

    def symbol(self, name):
        if name not in self.symbols:
            raise UndeclaredIdentifier(f'Symbol `{name}` is not declared.')
        return self.symbols[name]

    def function(self, name):
        """ Resolve a base or derived function name """
        if name in self.functions:
            return self.functions[name]
        base, _, suffix = name.partition('_')
        if base not in self.functions or not suffix:
            raise UndeclaredIdentifier(f'Function `{name}` is not declared.')
        symbol = self.functions[base]
        # Split the subscript into argument names, longest names first.
        args_by_length = sorted(
            enumerate(symbol.args), key=lambda item: -len(item[1])
        )
        while suffix:
            for position, arg in args_by_length:
                if suffix.startswith(arg):
                    symbol = symbol.derive(position)
                    suffix = suffix[len(arg):]
                    break
            else:
                raise UndeclaredIdentifier(
                    f'`{name}` is not a derivative of `{base}`.'
                )
        return symbol

    def is_function(self, name):
        try:
            self.function(name)
        except UndeclaredIdentifier:
            return False
        return True


def normalize(expr):
    """ Expanded sum-of-products form over the rationals.

    Rational functions are cleared to a single quotient of expanded
    numerator and denominator. Opaque applications are atoms.

    """
    expr = sympy.sympify(expr)
    numerator, denominator = sympy.fraction(sympy.together(expr))
    numerator = sympy.expand(numerator)
    denominator = sympy.expand(denominator)
    if numerator == 0:
        return sympy.S.Zero
    if denominator == 1:
        return numerator
    return numerator / denominator


def differentiate(expr, variable):
    """ Partial derivative, with opaque functions derived via the registry.

    Args:
        expr (sympy.Expr): Expression to derive.
        variable (sympy.Symbol): Declared symbol to derive by.

    Returns:
        sympy.Expr: The normalized derivative.

    """
    expr = sympy.sympify(expr)
    for w in expr.atoms(sympy.LambertW):
        if variable in w.free_symbols:
            raise UnsupportedDerivative(
                'lambertw is evaluated numerically only and cannot be derived.'
            )
    return normalize(sympy.diff(expr, variable))


def substitute(expr, bindings):
    """ Simultaneous substitution of symbols or whole applications """
    bindings = {
        sympy.sympify(k): sympy.sympify(v) for k, v in bindings.items()
    }
    return normalize(sympy.sympify(expr).xreplace(bindings))


def collect_powers(expr, variable):
    """ Coefficients of a polynomial in `variable`.

    Returns:
        dict: Maps integer exponents to coefficients free of `variable`.
            Zero coefficients are omitted; the zero expression gives `{}`.

    """
    expr = normalize(expr)
    if expr == 0:
        return {}
    for atom in opaque_atoms(expr):
        if variable in atom.free_symbols:
            raise NotPolynomial(f'`{variable}` occurs inside `{atom}`.')
    poly = expr.as_poly(variable)
    if poly is None or any(
        variable in c.free_symbols for c in poly.coeffs()
    ):
        raise NotPolynomial(f'Expression is not polynomial in `{variable}`.')
    powers = {}
    for (k,), coeff in poly.terms():
        coeff = normalize(coeff)
        if coeff != 0:
            powers[k] = coeff
    return powers


def atomize(expr):
    """ Replace every opaque application by a fresh symbol.

    Returns:
        (sympy.Expr, dict): The atomized expression and a map from each
            application to the symbol standing for it.

    """
    expr = sympy.sympify(expr)
    mapping = {
        atom: sympy.Dummy(opaque_symbol(atom).full_name)
        for atom in sorted(opaque_atoms(expr), key=sympy.default_sort_key)
    }
    return expr.xreplace(mapping), mapping


def polynomial_coefficients(expr, generators):
    """ Coefficients of `expr` as a polynomial in the given generators.

    Generators may be symbols or opaque applications; applications that are
    not generators stay inside the coefficients.

    Returns:
        dict: Maps exponent tuples to normalized coefficients.

    """
    expr = normalize(expr)
    if expr == 0:
        return {}
    numerator, denominator = sympy.fraction(expr)
    if any(g in denominator.free_symbols or g in opaque_atoms(denominator)
           for g in generators):
        raise NotPolynomial('A generator occurs in a denominator.')
    atomized, mapping = atomize(numerator)
    gens = [mapping.get(g, g) for g in generators]
    try:
        poly = sympy.Poly(atomized, *gens)
    except sympy.PolynomialError as error:
        raise NotPolynomial(str(error))
    inverse = {v: k for k, v in mapping.items()}
    coefficients = {}
    for monomial, coeff in poly.terms():
        coeff = normalize(coeff.xreplace(inverse) / denominator)
        if coeff != 0:
            coefficients[monomial] = coeff
    return coefficients


def _is_polynomial_fragment(expr):
    """ Whether a nonzero normal form is conclusive (certainly nonzero) """
    if expr.atoms(sympy.exp, sympy.log, sympy.LambertW):
        return False
    if any(not (p.exp.is_Integer) for p in expr.atoms(sympy.Pow)):
        return False
    return all(
        all(arg.is_Symbol for arg in atom.args) and not opaque_symbol(atom).is_unknown
        for atom in opaque_atoms(expr)
    )


def is_zero(expr, sample_points=None, seed=0):
    """ Decide whether an expression vanishes identically.

    Normalization decides whenever the expression stays inside the
    polynomial/rational fragment. Otherwise randomized numeric probing with
    cubic instantiations of every opaque function gives a `PROBABLE` verdict
    when every sampled point vanishes.

    Returns:
        Verdict

    """
    numerator = sympy.expand(sympy.fraction(sympy.together(expr))[0])
    if numerator == 0:
        return Verdict.PROVEN
    if _is_polynomial_fragment(numerator):
        return Verdict.REFUTED
    from utils import numeric
    if numeric.vanishes(numerator, n_points=sample_points, seed=seed):
        logging.debug(f'Normalization inconclusive, vanishes numerically: {numerator}')
        return Verdict.PROBABLE
    return Verdict.REFUTED


def equals(a, b, sample_points=None, seed=0):
    """ Three-valued equality test, see `is_zero` """
    return is_zero(sympy.sympify(a) - sympy.sympify(b), sample_points, seed)
