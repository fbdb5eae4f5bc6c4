import logging
import dataclasses

import sympy

from symbolic.kernel import Scope
from symbolic.parser import parse, render
from symmetry.determining import CONSTANTS
from symmetry.lie_algebra import s, combination, adjoint_matrix, render_combination
from symmetry.equivalence import l10_basis
from utils.utils import load_printed

COEFFICIENTS = tuple(f'a{i}' for i in range(1, 11))


class NotClosedForm(Exception):
    pass


def parameter_scope():
    """ Scope for optimal-system parameters and reduction coefficients """
    return Scope(symbols=CONSTANTS + COEFFICIENTS)


@dataclasses.dataclass
class OptimalEntry:
    """ One-dimensional subalgebra spanned by Σ coefficient·X_k """
    name: str
    coefficients: dict

    @property
    def parameters(self):
        return sorted(
            set().union(*(c.free_symbols for c in self.coefficients.values())),
            key=str,
        )

    def field(self, basis=None):
        return combination(basis or l10_basis(), self.coefficients)

    def render(self, names=None):
        return render_combination(self.coefficients, names)

    def to_json(self):
        return {
            'name': self.name,
            'combination': {n: render(c) for n, c in self.coefficients.items()},
        }


def optimal_system(path=None):
    """ The twenty entries A1…A20 as printed.

    Returns:
        [OptimalEntry, ..]

    """
    scope = parameter_scope()
    entries = [
        OptimalEntry(item['name'], {
            n: parse(text, scope) for n, text in item['combination'].items()
        })
        for item in load_printed('optimal_system.json', path)['entries']
    ]
    logging.info(f'Loaded {len(entries)} optimal-system entries.')
    return entries


@dataclasses.dataclass
class ReductionStep:
    """ Ad(exp(parameter·generator)) applied to the running vector.

    `parameter` is an expression in the aᵢ, or 'solve' to find the value
    annihilating `cancels`. A step with no `cancels` only rescales.
    """
    generator: str
    parameter: str
    cancels: str = None


@dataclasses.dataclass
class ReductionScript:
    case: str
    start: dict
    steps: list
    target: dict
    assumptions: tuple = ()

    @classmethod
    def from_json(cls, data, entries=None):
        """ Build a script; a target given as an entry name is resolved
        against `entries` """
        target = data['target']
        if isinstance(target, str):
            by_name = {e.name: e for e in entries or optimal_system()}
            target = {n: render(c) for n, c in by_name[target].coefficients.items()}
        return cls(
            data['case'], data['start'],
            [ReductionStep(**step) for step in data.get('steps', [])],
            target, tuple(data.get('assumptions', ())),
        )


def reduction_scripts(path=None, entries=None):
    return [
        ReductionScript.from_json(item, entries)
        for item in load_printed('reductions.json', path)['scripts']
    ]


@dataclasses.dataclass
class Replay:
    case: str
    passed: bool
    vector: dict
    steps: list

    @property
    def errata(self):
        """ Steps that did not cancel their coefficient, with what remains """
        return [
            {'step': k, **{key: step.get(key) for key in (
                'generator', 'parameter', 'cancels', 'remaining', 'reason',
            )}}
            for k, step in enumerate(self.steps) if step['status'] != 'pass'
        ]

    def to_json(self):
        return {
            'case': self.case,
            'verdict': 'pass' if self.passed else 'fail',
            'vector': {n: render(c) for n, c in self.vector.items()},
            'steps': self.steps,
            'errata': self.errata,
        }


def fixed_coefficients(adjoint):
    """ Basis elements whose coefficient no adjoint action changes.

    These are the elements outside the derived algebra [L, L]: every entry
    Ad(exp(s·X_i))X_j has component δ along them.

    Args:
        adjoint (StructureTable): Output of `adjoint_table`.

    Returns:
        [str, ..]

    """
    return [
        name for name in adjoint.names
        if all(
            sympy.simplify(entry.coefficients.get(name, 0) - (1 if col == name else 0)) == 0
            for (_, col), entry in adjoint.cells.items()
        )
    ]


def _adjoint_value(adjoint, generator, vector, step):
    """ The exact parameter of a step, solving when requested """
    names = adjoint.names
    if step.parameter != 'solve':
        return parse(step.parameter, parameter_scope())
    assert step.cancels is not None, 'Solving a step needs a coefficient to cancel.'
    moved = adjoint_matrix(adjoint, generator) * vector
    solutions = sympy.solve(moved[names.index(step.cancels)], s)
    return solutions[0] if solutions else None


def _failure_reason(step, fixed):
    if step.cancels in fixed:
        return (f'{step.cancels} is outside the derived algebra; '
                f'no adjoint action changes its coefficient.')
    return f'Ad(exp(s*{step.generator})) leaves the {step.cancels} coefficient nonzero.'


def replay_reduction(script, adjoint):
    """ Replay one optimal-system reduction with exact adjoint entries.

    Each step multiplies the running coefficient vector by the matrix of
    Ad(exp(s·X_i)) with s substituted. The replay passes when every step
    cancels its coefficient and the final vector has the target's support,
    with the target's numeric coefficients reproduced exactly. A failing
    step keeps its remainder and a reason, and the replay goes on.

    Args:
        script (ReductionScript): The case to replay.
        adjoint (StructureTable): Output of `adjoint_table`.

    Returns:
        Replay

    Raises:
        NotClosedForm: If a generator's adjoint series was truncated.

    """
    scope = parameter_scope()
    names = adjoint.names
    fixed = fixed_coefficients(adjoint)
    vector = sympy.Matrix([
        parse(script.start.get(n, '0'), scope) for n in names
    ])
    steps = []
    for step in script.steps:
        truncated = [
            col for col in names if not adjoint.cells[(step.generator, col)].closed
        ]
        if truncated:
            raise NotClosedForm(
                f'Ad(exp(s*{step.generator})) is truncated on {truncated}.'
            )
        value = _adjoint_value(adjoint, step.generator, vector, step)
        if value is None:
            steps.append({
                **dataclasses.asdict(step), 'value': None, 'status': 'unsolvable',
                'remaining': render(vector[names.index(step.cancels)]),
                'reason': _failure_reason(step, fixed),
            })
            continue
        vector = (adjoint_matrix(adjoint, step.generator, value) * vector).applyfunc(
            sympy.simplify
        )
        cancelled = step.cancels is None or vector[names.index(step.cancels)] == 0
        steps.append({
            **dataclasses.asdict(step), 'value': render(value),
            'status': 'pass' if cancelled else 'fail',
            'remaining': render(vector[names.index(step.cancels)]) if step.cancels else None,
            'reason': None if cancelled else _failure_reason(step, fixed),
        })
        if not cancelled:
            logging.warning(
                f'Case {script.case}: step {len(steps) - 1} leaves '
                f'{step.cancels} = {steps[-1]["remaining"]}.'
            )

    final = {n: c for n, c in zip(names, vector) if c != 0}
    target = {n: parse(text, scope) for n, text in script.target.items()}
    support = set(final) == set(target)
    numeric = all(
        sympy.simplify(final.get(n, 0) - c) == 0
        for n, c in target.items() if not c.free_symbols
    )
    passed = all(step['status'] == 'pass' for step in steps) and support and numeric
    logging.info(f'Case {script.case}: {"pass" if passed else "fail"}.')
    return Replay(script.case, passed, final, steps)
