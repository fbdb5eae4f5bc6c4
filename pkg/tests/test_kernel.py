import pytest
import sympy
from hypothesis import given, settings, strategies as st

from symbolic.kernel import (
    Verdict, ParseError, UndeclaredIdentifier, ArityMismatch, NotPolynomial,
    UnsupportedDerivative, Scope, antiderivative, collect_powers, differentiate,
    is_zero, normalize, polynomial_coefficients, substitute, unknown_atoms,
)
from symbolic.parser import parse, render

x, u, u_x = sympy.symbols('x u u_x')


def test_parse_follows_precedence(scope):
    assert parse('2*u^2 - u/x', scope) == normalize(2 * u**2 - u / x)
    assert parse('-u^2', scope) == -u**2
    assert parse('2^-1', scope) == sympy.Rational(1, 2)


def test_derived_names_resolve_through_the_registry(scope):
    g = parse('g(x,u)', scope)
    assert parse('g_x', scope) == differentiate(g, x)
    assert parse('g_xu(x,u)', scope) == parse('g_ux', scope)
    assert differentiate(differentiate(g, x), u) == differentiate(differentiate(g, u), x)


def test_parse_reports_the_offending_position(scope):
    with pytest.raises(ParseError) as error:
        parse('u +* x', scope)
    assert error.value.position == 3


@pytest.mark.parametrize('text, exception', [
    ('y + u', UndeclaredIdentifier),
    ('g(x)', ArityMismatch),
    ('exp(x, u)', ArityMismatch),
    ('g_y', UndeclaredIdentifier),
    ('u/0', ParseError),
    ('(u + x', ParseError),
])
def test_parse_rejects(scope, text, exception):
    with pytest.raises(exception):
        parse(text, scope)


def test_is_zero_is_three_valued(scope):
    assert is_zero(parse('g_xu - g_ux', scope)) is Verdict.PROVEN
    assert is_zero(parse('(u + x)^2 - u^2 - 2*u*x - x^2', scope)) is Verdict.PROVEN
    assert is_zero(x - u) is Verdict.REFUTED
    assert is_zero(sympy.log(sympy.exp(x)) - x) is Verdict.PROBABLE
    assert is_zero(sympy.log(sympy.exp(x)) - u) is Verdict.REFUTED


def test_collect_powers(scope):
    expr = parse('g*u_x^2 + f*u_x - f', scope)
    powers = collect_powers(expr, u_x)
    assert set(powers) == {0, 1, 2}
    assert powers[2] == parse('g', scope)
    assert collect_powers(0, u_x) == {}
    with pytest.raises(NotPolynomial):
        collect_powers(sympy.exp(u_x), u_x)
    with pytest.raises(NotPolynomial):
        collect_powers(u_x / (1 + u_x), u_x)


def test_polynomial_coefficients_over_applications(scope):
    f, g = parse('f', scope), parse('g', scope)
    coefficients = polynomial_coefficients(x * f * g + u * f + 3, [f, g])
    assert coefficients == {(1, 1): x, (1, 0): u, (0, 0): 3}


def test_substitute_replaces_applications(scope):
    expr = parse('g_u*u_x + f', scope)
    assert substitute(expr, {parse('g_u', scope): 2 * u, parse('f', scope): 0}) == 2 * u * u_x


def test_lambertw_cannot_be_derived(scope):
    with pytest.raises(UnsupportedDerivative):
        differentiate(parse('lambertw(x*u)', scope), x)


def test_antiderivative_derives_to_its_integrand():
    P = antiderivative('P', ('x', 'u'), x * sympy.exp(u * x), 'x')
    atom = P(x, u)
    assert differentiate(atom, x) == normalize(x * sympy.exp(u * x))
    assert unknown_atoms(differentiate(atom, u)) != set()


_poly_terms = st.lists(
    st.tuples(st.integers(-5, 5), st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)),
    min_size=1, max_size=5,
)


@settings(max_examples=40, deadline=None)
@given(terms=_poly_terms)
def test_render_reparses_to_the_same_expression(terms):
    scope = Scope(symbols=('x', 'u'), functions={'g': ('x', 'u')})
    g = parse('g', scope)
    expr = normalize(sum(c * x**i * u**j * g**k for c, i, j, k in terms))
    assert parse(render(expr), scope) == expr


@settings(max_examples=40, deadline=None)
@given(terms=_poly_terms)
def test_mixed_partials_commute(terms):
    scope = Scope(symbols=('x', 'u'), functions={'g': ('x', 'u')})
    g = parse('g', scope)
    expr = sum(c * x**i * u**j * g**k for c, i, j, k in terms)
    assert differentiate(differentiate(expr, x), u) == differentiate(differentiate(expr, u), x)


_transcendental_terms = st.lists(
    st.tuples(
        st.integers(-5, 5), st.integers(1, 4), st.integers(0, 2),
        st.integers(-1, 1), st.integers(0, 1),
    ),
    min_size=1, max_size=4,
)


@settings(max_examples=40, deadline=None)
@given(terms=_transcendental_terms)
def test_render_reparses_exp_ln_and_rationals(terms):
    scope = Scope(symbols=('x', 'u'))
    expr = normalize(sum(
        sympy.Rational(p, q) * u**j * sympy.exp(m * u) * sympy.log(x)**k
        for p, q, j, m, k in terms
    ))
    assert parse(render(expr), scope) == expr


@pytest.mark.parametrize('text', ['-exp(-u)', '-(1/3)*ln(x)', '-u^2/7 + 2/3', '-(-x)'])
def test_render_keeps_unary_minus(scope, text):
    expr = parse(text, scope)
    assert parse(render(expr), scope) == expr


def test_substitute_is_simultaneous(scope):
    assert substitute(x - u, {x: u, u: x}) == u - x
    f, g = parse('f', scope), parse('g', scope)
    assert substitute(f * x + g, {f: g, g: f}) == normalize(g * x + f)
