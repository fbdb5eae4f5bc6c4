import re

import sympy
from sympy.printing.str import StrPrinter
from sympy.printing.precedence import precedence

from symbolic.kernel import (
    BUILTINS, ParseError, UndeclaredIdentifier, ArityMismatch, normalize,
)

_TOKEN = re.compile(
    r'\s*(?:(?P<number>\d+)|(?P<name>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)?)'
    r'|(?P<op>[-+*/^(),]))'
)


def tokenize(text):
    """ Split an expression string into (kind, value, position) tokens """
    tokens = []
    position = 0
    text = text.rstrip()
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None or match.end() == position:
            offset = len(text) - len(text[position:].lstrip())
            raise ParseError(f'Unexpected character `{text[offset]}`', offset)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(('end', None, len(text)))
    return tokens


class _Parser:
    """ Recursive descent over the token list.

    Precedence, loosest first: `+ -`, `* /`, unary minus, `^`. The power
    operator is right-associative and its exponent may carry a unary minus.

    """

    def __init__(self, text, scope):
        self.tokens = tokenize(text)
        self.index = 0
        self.scope = scope

    @property
    def peek(self):
        return self.tokens[self.index]

    def take(self, value=None):
        token = self.peek
        if value is not None and token[1] != value:
            found = token[1] if token[1] is not None else 'end of input'
            raise ParseError(f'Expected `{value}`, found `{found}`', token[2])
        self.index += 1
        return token

    def parse(self):
        expr = self.sum()
        if self.peek[0] != 'end':
            raise ParseError(f'Unexpected `{self.peek[1]}`', self.peek[2])
        return expr

    def sum(self):
        expr = self.product()
        while self.peek[1] in ('+', '-'):
            op = self.take()[1]
            rhs = self.product()
            expr = expr + rhs if op == '+' else expr - rhs
        return expr

    def product(self):
        expr = self.unary()
        while self.peek[1] in ('*', '/'):
            op = self.take()[1]
            rhs = self.unary()
            if op == '/' and rhs == 0:
                raise ParseError('Division by zero', self.tokens[self.index - 1][2])
            expr = expr * rhs if op == '*' else expr / rhs
        return expr

    def unary(self):
        if self.peek[1] == '-':
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek[1] == '^':
            self.take()
            return base ** self.unary()
        return base

    def atom(self):
        kind, value, position = self.take()
        if kind == 'number':
            return sympy.Integer(value)
        if value == '(':
            expr = self.sum()
            self.take(')')
            return expr
        if kind != 'name':
            found = value if value is not None else 'end of input'
            raise ParseError(f'Unexpected `{found}`', position)
        if self.peek[1] == '(':
            return self.application(value, position)
        if value in self.scope.symbols:
            return self.scope.symbols[value]
        if self.scope.is_function(value):
            # A bare function name stands for its application to its own
            # argument symbols, e.g. `g_x` for `g_x(x, u)`.
            return self.scope.function(value).at()
        raise UndeclaredIdentifier(f'`{value}` is not declared (at position {position}).')

    def application(self, name, position):
        self.take('(')
        args = [self.sum()]
        while self.peek[1] == ',':
            self.take()
            args.append(self.sum())
        self.take(')')
        if name in BUILTINS:
            if len(args) != 1:
                raise ArityMismatch(f'`{name}` takes 1 argument, got {len(args)}.')
            return BUILTINS[name](args[0])
        try:
            symbol = self.scope.function(name)
        except UndeclaredIdentifier:
            raise UndeclaredIdentifier(
                f'Function `{name}` is not declared (at position {position}).'
            )
        return symbol(*args)


def parse(text, scope):
    """ Parse an expression string into a normalized sympy expression.

    Args:
        text (str): Expression in the `+ - * / ^` grammar, e.g.
            'u_t + g(x,u)*u_x - f(x,u)'.
        scope (symbolic.kernel.Scope): Declared symbols and functions.

    Returns:
        sympy.Expr

    """
    return normalize(_Parser(str(text), scope).parse())


class ExpressionPrinter(StrPrinter):
    """ Prints expressions back into the parser's grammar """

    def _print_Pow(self, expr, rational=False):
        base, exp = expr.as_base_exp()
        if exp == -1 and not base.is_Atom:
            return f'1/({self._print(base)})'
        if exp == -1:
            return f'1/{self._print(base)}'
        base_text = self._print(base)
        if not (base.is_Symbol or (base.is_Integer and base >= 0)
                or isinstance(base, sympy.Function)):
            base_text = f'({base_text})'
        exp_text = self._print(exp)
        if not ((exp.is_Integer and exp >= 0) or exp.is_Symbol):
            exp_text = f'({exp_text})'
        return f'{base_text}^{exp_text}'

    def _print_Rational(self, expr):
        if expr.q == 1:
            return str(expr.p)
        return f'{expr.p}/{expr.q}'

    def _print_Exp1(self, expr):
        return 'exp(1)'

    def _print_exp(self, expr):
        return f'exp({self._print(expr.args[0])})'

    def _print_log(self, expr):
        return f'ln({self._print(expr.args[0])})'

    def _print_LambertW(self, expr):
        return f'lambertw({self._print(expr.args[0])})'

    def _print_Mul(self, expr):
        # Rationals print as `p/q`, which binds like a quotient; keep them
        # parenthesized when they lead a product.
        coeff, rest = expr.as_coeff_Mul()
        if coeff.is_Rational and coeff.q != 1 and rest != 1:
            sign = '-' if coeff < 0 else ''
            tail = self._print(rest)
            if precedence(rest) < precedence(expr):
                tail = f'({tail})'
            return f'{sign}({abs(coeff.p)}/{coeff.q})*{tail}'
        return super()._print_Mul(expr)

    def _print_Function(self, expr):
        args = ','.join(self._print(a) for a in expr.args)
        return f'{type(expr).__name__}({args})'


def render(expr):
    """ Render an expression in the grammar accepted by `parse` """
    return ExpressionPrinter().doprint(sympy.sympify(expr))
