import logging
import dataclasses

import pandas as pd
import sympy

from symbolic.kernel import (
    Scope, normalize, differentiate, substitute, collect_powers, polynomial_coefficients,
)
from symbolic.parser import render
from symbolic.jet import (
    Chart, POINT_CHART, EQUIVALENCE_CHART, VectorField, prolong1,
)
from symmetry.determining import DeterminingSystem, CONSTANTS
from symmetry.lie_algebra import LieBasis

t, x, u, f, g = sympy.symbols('t x u f g')
u_t, u_x = sympy.symbols('u_t u_x')
f_x, f_u, g_x, g_u = sympy.symbols('f_x f_u g_x g_u')

PROJECTED_CHART = Chart(('x', 'u'), ('f', 'g'), order=1)

TARGETS = {
    'xufg': PROJECTED_CHART,
    'txu': POINT_CHART,
}


class RoleViolation(Exception):
    pass


def equivalence_scope(functions=None):
    """ Scope of the extended chart (t,x,u,f,g), where f and g are
    coordinates, with the generic equivalence coefficients declared """
    declared = {
        'xi': ('t', 'x', 'u'), 'tau': ('t', 'x', 'u'), 'phi': ('t', 'x', 'u'),
        'chi': ('t', 'x', 'u', 'f', 'g'), 'eta': ('t', 'x', 'u', 'f', 'g'),
    }
    declared.update(functions or {})
    scope = Scope(symbols=EQUIVALENCE_CHART.coordinates + EQUIVALENCE_CHART.all_jets)
    scope.declare(*POINT_CHART.all_jets, *CONSTANTS)
    for name, args in declared.items():
        scope.declare_function(name, args)
    return scope


def check_roles(field):
    """ ξ, τ, φ of an equivalence field may not depend on f or g """
    assert field.chart == EQUIVALENCE_CHART, f'Field lives on {field.chart}.'
    for name in ('t', 'x', 'u'):
        if field[name].free_symbols & {f, g}:
            raise RoleViolation(
                f'Coefficient of d_{name} depends on f or g: {render(field[name])}.'
            )


def point_part(field):
    """ The (t,x,u) components as a point field """
    return VectorField(POINT_CHART, {n: field[n] for n in ('t', 'x', 'u')})


@dataclasses.dataclass
class EquivProlongation:
    field: VectorField
    phi_t: sympy.Expr
    phi_x: sympy.Expr
    chi_t: sympy.Expr
    eta_t: sympy.Expr


def equiv_prolong(field):
    """ Prolongation of an equivalence field.

    φ^t and φ^x are the point prolongation of the (t,x,u) part. On the
    extended space f_t = g_t = 0, so the total t-derivative reduces to ∂_t
    and χ^t = χ_t − f_x·τ_t − f_u·φ_t, η^t = η_t − g_x·τ_t − g_u·φ_t.

    """
    check_roles(field)
    prolonged = prolong1(point_part(field))
    tau, phi = field['x'], field['u']
    chi, eta = field['f'], field['g']
    tau_t, phi_t = differentiate(tau, t), differentiate(phi, t)
    return EquivProlongation(
        field,
        prolonged.phi_t,
        prolonged.phi_x,
        normalize(differentiate(chi, t) - f_x * tau_t - f_u * phi_t),
        normalize(differentiate(eta, t) - g_x * tau_t - g_u * phi_t),
    )


def equiv_conditions(field):
    """ Determining system of an equivalence field.

    The prolonged field applied to u_t + g·u_x − f, restricted to solutions,
    gives the residual −χ + η·u_x + φ^t + g·φ^x, split by powers of u_x.
    Applied to f_t and g_t it gives χ^t and η^t, which vanish for every f
    and g, so they are split over the monomials in f_x, f_u, g_x and g_u.

    Returns:
        DeterminingSystem: Tags carry either `u_x` (the equation) or
            `transport` naming f_t / g_t with the jet monomial.

    """
    prolonged = equiv_prolong(field)
    residual = substitute(
        -field['f'] + field['g'] * u_x + prolonged.phi_t + g * prolonged.phi_x,
        {u_t: f - g * u_x},
    )
    residuals = [
        ({'u_x': k}, c) for k, c in sorted(collect_powers(residual, u_x).items())
    ]
    jets = [f_x, f_u, g_x, g_u]
    for name, expr in (('f_t', prolonged.chi_t), ('g_t', prolonged.eta_t)):
        for monomial, c in sorted(polynomial_coefficients(expr, jets).items()):
            tag = {'transport': name}
            tag.update({str(j): n for j, n in zip(jets, monomial) if n})
            residuals.append((tag, c))
    return DeterminingSystem(residuals, ('u_x', 'f_x', 'f_u', 'g_x', 'g_u'))


def satisfies(system, part=None):
    """ Whether every residual of an equivalence system vanishes.

    Args:
        part (str, optional): 'equation' or 'transport' to check one part.

    """
    for tag, expr in system.residuals:
        kind = 'transport' if 'transport' in tag else 'equation'
        if part is not None and kind != part:
            continue
        if normalize(expr) != 0:
            return False
    return True


def build_Y(kind, coefficient):
    """ One of the three generator families of the equivalence algebra.

    Args:
        kind (int): 1 for Y¹_ξ, 2 for Y²_τ, 3 for Y³_φ.
        coefficient (sympy.Expr): ξ(t,x,u), τ(x,u) or φ(x,u).

    Returns:
        VectorField on (t,x,u,f,g)

    """
    c = sympy.sympify(coefficient)
    c_t, c_x, c_u = (differentiate(c, v) for v in (t, x, u))
    if kind == 1:
        return VectorField(EQUIVALENCE_CHART, {
            't': c,
            'f': -f * (g * c_x + c_t + f * c_u),
            'g': -g * (f * c_u + c_t + g * c_x),
        })
    if kind == 2:
        return VectorField(EQUIVALENCE_CHART, {'x': c, 'g': g * c_x + f * c_u})
    if kind == 3:
        return VectorField(EQUIVALENCE_CHART, {'u': c, 'f': g * c_x + f * c_u})
    raise ValueError(f'Unknown generator kind {kind}.')


def y_decomposer(field):
    """ Write a field as Y¹_ξ + Y²_τ + Y³_φ, reading ξ, τ, φ off the base
    components; whatever remains is the residual """
    coefficients = {
        'Y1': field['t'], 'Y2': field['x'], 'Y3': field['u'],
    }
    rebuilt = build_Y(1, field['t']) + build_Y(2, field['x']) + build_Y(3, field['u'])
    return {n: c for n, c in coefficients.items() if c != 0}, field - rebuilt


def y_basis(scope=None):
    """ Y₁, Y₂, Y₃ with opaque ξ(t,x,u), τ(x,u), φ(x,u) """
    scope = scope or equivalence_scope({'tau': ('x', 'u'), 'phi': ('x', 'u')})
    return LieBasis(['Y1', 'Y2', 'Y3'], [
        build_Y(1, scope.function('xi').at()),
        build_Y(2, scope.function('tau').at()),
        build_Y(3, scope.function('phi').at()),
    ], decomposer=y_decomposer)


L10 = {
    'X1': {'t': 1},
    'X2': {'x': 1},
    'X3': {'u': 1},
    'X4': {'t': t, 'f': -f, 'g': -g},
    'X5': {'t': x, 'f': -f * g, 'g': -g ** 2},
    'X6': {'t': u, 'f': -f ** 2, 'g': -f * g},
    'X7': {'x': x, 'g': g},
    'X8': {'x': u, 'g': f},
    'X9': {'u': x, 'f': g},
    'X10': {'u': u, 'f': f},
}


def l10_basis():
    """ The ten-dimensional subalgebra X₁…X₁₀ of the equivalence algebra """
    return LieBasis(
        list(L10), [VectorField(EQUIVALENCE_CHART, c) for c in L10.values()]
    )


def project(field, target='xufg'):
    """ Restriction of an equivalence field to (x,u,f,g) or (t,x,u).

    Coefficients of dropped coordinates are discarded; see `dropped`.

    """
    chart = TARGETS[target]
    return VectorField(chart, {n: field[n] for n in chart.coordinates})


def dropped(field, target='xufg'):
    """ Coefficients that `project` discards """
    kept = TARGETS[target].coordinates
    return {n: c for n, c in field.coefficients.items() if n not in kept}


def proportionality(computed, printed):
    """ Compare two fields up to a nonzero constant factor.

    Returns:
        str: 'match', 'match-up-to-factor' or 'mismatch'.

    """
    if computed.chart != printed.chart:
        return 'mismatch'
    if computed == printed:
        return 'match'
    if set(computed.coefficients) != set(printed.coefficients) or computed.is_zero():
        return 'mismatch'
    coordinates = {sympy.Symbol(n) for n in computed.chart.coordinates}
    ratios = {
        normalize(printed[n] / computed[n]) for n in computed.coefficients
    }
    if len(ratios) == 1:
        ratio = ratios.pop()
        if ratio != 0 and not (ratio.free_symbols & coordinates):
            return 'match-up-to-factor'
    return 'mismatch'


def compare_projections(entries, printed):
    """ Diff computed (x,u,f,g) projections against a printed list.

    Args:
        entries (dict): Optimal-system entry name -> VectorField.
        printed (list of dict): Printed projections with keys 'name',
            'sources' (entry names) and 'field' (VectorField).

    Returns:
        pd.DataFrame

    """
    rows = []
    for item in printed:
        for source in item['sources']:
            computed = project(entries[source])
            status = proportionality(computed, item['field'])
            if status == 'mismatch':
                logging.warning(
                    f'{item["name"]} disagrees with the projection of {source}.'
                )
            rows.append({
                'name': item['name'], 'source': source, 'status': status,
                'computed': computed.render(), 'printed': item['field'].render(),
                'dropped': {n: render(c) for n, c in dropped(entries[source]).items()},
            })
    return pd.DataFrame(
        rows, columns=['name', 'source', 'status', 'computed', 'printed', 'dropped']
    )
