""" Symmetry and equivalence analysis of u_t + g(x,u)·u_x = f(x,u).

Usage examples:
    python burgers.py detsys --compare-paper
    python burgers.py verify --f 0 --g 'u^2' --vf 't=t; x=x'
    python burgers.py table commutators --algebra l10 --compare-paper
    python burgers.py table adjoint --algebra l10 --compare-paper --format md
    python burgers.py optimal-system replay
    python burgers.py classify row 23
"""
import os
import sys
import json
import logging
import argparse
import functools
import dataclasses

import pandas as pd

import config
from symbolic.kernel import SymbolicError
from symbolic.parser import parse
from symbolic.jet import POINT_CHART, EQUIVALENCE_CHART, VectorField
from symmetry import determining, lie_algebra, equivalence, optimal_system, classification
from utils import numeric
from utils.utils import timer, dumps, dump, serialize, load_printed


@dataclasses.dataclass
class Result:
    """ Output of a subcommand: a JSON-able report, its Markdown rendering
    and whether every verification in it passed """
    report: dict
    markdown: str
    ok: bool = True


def _frames_markdown(frames):
    return '\n\n'.join(
        f'## {name}\n\n{frame.to_markdown(index=False)}' for name, frame in frames.items()
    )


def _records(frames):
    return {name: frame.to_dict(orient='records') for name, frame in frames.items()}


def parse_field(text, scope, chart=POINT_CHART):
    """ Parse 't=<expr>; x=<expr>' or a JSON object {"x": "<expr>"} into a VectorField """
    if text.lstrip().startswith('{'):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as error:
            raise SymbolicError(f'Field `{text}` is not valid JSON: {error}')
        return VectorField(chart, {name: parse(str(expr), scope) for name, expr in data.items()})
    coefficients = {}
    for part in filter(None, (p.strip() for p in text.split(';'))):
        name, sep, expr = part.partition('=')
        if not sep:
            raise SymbolicError(f'Field component `{part}` is not of the form name=expr.')
        coefficients[name.strip()] = parse(expr, scope)
    return VectorField(chart, coefficients)


def _spec(args, scope):
    if args.f is None and args.g is None:
        return determining.EquationSpec.opaque()
    return determining.EquationSpec.from_strings(
        args.f if args.f is not None else 'f(x,u)',
        args.g if args.g is not None else 'g(x,u)', scope,
    )


def cmd_detsys(args):
    scope = determining.point_scope()
    spec = _spec(args, scope)
    residual = determining.invariance_residual(spec, determining.generic_field(scope))
    try:
        system = determining.split(residual, spec)
    except determining.IndependenceUnavailable as error:
        logging.warning(str(error))
        system = error.partial
    report = {'equation': spec.to_json(), 'system': system.to_json()}
    markdown = system.to_markdown()
    ok = True
    if args.compare_paper:
        data = load_printed('determining.json')
        frames = determining.compare_printed_equations(data, spec, scope)
        report['printed'] = _records(frames)
        markdown += '\n\n' + _frames_markdown(frames)
        ok = all((frame['status'] == 'match').all() for frame in frames.values())
    return Result(report, markdown, ok)


def cmd_verify(args):
    scope = determining.point_scope()
    spec = _spec(args, scope)
    if args.family:
        family = determining.families(scope)[args.family]
        verification = determining.verify_family(spec, family, seed=args.seed)
        field = family.instantiate(spec)
    else:
        field = parse_field(args.vf, scope)
        verification = determining.verify_candidate(spec, field, seed=args.seed)
    report = {'equation': spec.to_json(), 'field': field.to_json(), **verification.to_json()}
    if verification.passed:
        report['numeric_max'] = determining.corroborate(spec, field, args.samples, args.seed)
    markdown = pd.DataFrame([report]).to_markdown(index=False)
    return Result(report, markdown, verification.passed)


def cmd_bracket(args):
    if args.chart == 'equiv':
        scope, chart = equivalence.equivalence_scope(), EQUIVALENCE_CHART
    else:
        scope, chart = determining.point_scope(), POINT_CHART
    v, w = parse_field(args.v, scope, chart), parse_field(args.w, scope, chart)
    result = lie_algebra.bracket(v, w)
    return Result({'bracket': result.to_json()}, result.render())


def _algebra(name):
    if name == 'l10':
        return equivalence.l10_basis(), 'table3.json', equivalence.equivalence_scope()
    if name == 'ibe':
        return lie_algebra.ibe_basis(), 'table1.json', determining.point_scope({'g': ('u',)})
    return (
        equivalence.y_basis(), 'table2.json',
        equivalence.equivalence_scope({'tau': ('x', 'u'), 'phi': ('x', 'u')}),
    )


def cmd_table(args):
    basis, printed_name, scope = _algebra(args.algebra)
    commutators = lie_algebra.commutator_table(basis, args.jobs)
    if args.kind == 'adjoint':
        assert args.algebra == 'l10', 'Adjoint tables are built for l10 only.'
        table, printed_name = lie_algebra.adjoint_table(commutators, args.jobs), 'table4.json'
    else:
        table = commutators
    report = {'table': table.to_json()}
    markdown = table.to_markdown()
    ok = True
    if args.kind == 'adjoint':
        checks = pd.DataFrame([
            {'row': r, 'col': c, **lie_algebra.check_entry(table, commutators, r, c)}
            for r in table.names for c in table.names
        ])
        report['checks'] = checks.to_dict(orient='records')
        ok = bool(checks[['identity', 'derivative', 'group_law']].all().all())
    if args.compare_paper:
        printed = lie_algebra.load_table(load_printed(printed_name), scope)
        diff = lie_algebra.compare_table(table, printed, negation=args.kind == 'adjoint')
        report['printed'] = {
            'counts': diff['status'].value_counts().to_dict(),
            'mismatches': diff[diff['status'] != 'match'].to_dict(orient='records'),
        }
        markdown += '\n\n' + diff[diff['status'] != 'match'].to_markdown(index=False)
    return Result(report, markdown, ok)


def cmd_optimal_system(args):
    entries = optimal_system.optimal_system()
    if args.action == 'list':
        printed = classification.z_list()
        frame = equivalence.compare_projections(
            {e.name: e.field() for e in entries},
            [{'name': n, **item} for n, item in printed.items()],
        )
        report = {
            'entries': [e.to_json() for e in entries],
            'projections': frame.to_dict(orient='records'),
        }
        listing = pd.DataFrame([{'name': e.name, 'entry': e.render()} for e in entries])
        markdown = listing.to_markdown(index=False) + '\n\n' + frame.to_markdown(index=False)
        return Result(report, markdown)

    commutators = lie_algebra.commutator_table(equivalence.l10_basis(), args.jobs)
    adjoint = lie_algebra.adjoint_table(commutators, args.jobs)
    scripts = optimal_system.reduction_scripts(entries=entries)
    if args.case:
        scripts = [script for script in scripts if script.case == args.case]
    replays = [optimal_system.replay_reduction(script, adjoint) for script in scripts]
    report = {'replays': [r.to_json() for r in replays]}
    markdown = pd.DataFrame([
        {'case': r.case, 'verdict': 'pass' if r.passed else 'fail',
         'steps': ', '.join(step['status'] for step in r.steps),
         'errata': '; '.join(
             f'step {e["step"]}: {e["cancels"]} = {e["remaining"]}' for e in r.errata
         )}
        for r in replays
    ]).to_markdown(index=False)
    return Result(report, markdown, all(r.passed for r in replays))


def cmd_classify(args):
    if args.action == 'invariants':
        frame = classification.check_invariants()
        return Result(
            {'invariants': frame.to_dict(orient='records')},
            frame.to_markdown(index=False),
        )
    rows = classification.table5()
    if args.action == 'row':
        assert 1 <= args.number <= len(rows), f'Row must lie in 1..{len(rows)}.'
        record = classification.report_row(rows[args.number - 1], args.seed, args.samples)
        return Result(record, dumps(record), classification.row_passed(record))
    report = classification.table5_report(rows, args.jobs, args.seed, args.samples)
    summary = report.summary
    return Result(report.to_json(), report.to_markdown(), summary['passed'] == summary['rows'])


def cmd_numcheck(args):
    results = numeric.check_derivatives(seed=args.seed)
    frame = pd.DataFrame([
        {'expression': str(expr), 'variable': str(symbol), 'error': error}
        for expr, symbol, error in results
    ])
    spec = determining.EquationSpec.opaque()
    field = VectorField(POINT_CHART, {'t': 1})
    worst = determining.corroborate(spec, field, args.samples, args.seed)
    report = {'derivatives': frame.to_dict(orient='records'), 'principal_residual': worst}
    ok = bool((frame['error'] < args.tol).all()) and worst < args.tol
    return Result(report, frame.to_markdown(index=False), ok)


def _global_options(parser, defaults=True):
    """ Report and numeric options, accepted before or after the subcommand.

    The copy attached to subcommands suppresses its defaults so it only
    overrides values given after the subcommand.
    """
    default = (lambda value: value) if defaults else (lambda value: argparse.SUPPRESS)
    parser.add_argument('--format', choices=['json', 'md'], default=default('json'))
    parser.add_argument('--output', default=default(None), help='Write the report to this path.')
    parser.add_argument('--save', action='store_true', default=default(False),
                        help=f'Write the report under the output directory ({config.output_dir}).')
    parser.add_argument('--samples', type=int, default=default(config.numeric['samples']))
    parser.add_argument('--seed', type=int, default=default(config.numeric['seed']))
    parser.add_argument('--tol', type=float, default=default(config.numeric['tol']))
    parser.add_argument('--jobs', type=int, default=default(1))
    parser.add_argument('--verbose', action='store_true', default=default(False))


def build_parser():
    parser = argparse.ArgumentParser(
        description='Symmetry and equivalence analysis of u_t + g(x,u)u_x = f(x,u).'
    )
    _global_options(parser)
    options = argparse.ArgumentParser(add_help=False)
    _global_options(options, defaults=False)
    commands = parser.add_subparsers(dest='command', required=True)
    add_parser = functools.partial(commands.add_parser, parents=[options])

    detsys = add_parser('detsys', help='Determining system of the equation.')
    detsys.add_argument('--f')
    detsys.add_argument('--g')
    detsys.add_argument('--compare-paper', action='store_true')
    detsys.set_defaults(handler=cmd_detsys)

    verify = add_parser('verify', help='Verify a candidate symmetry.')
    verify.add_argument('--f')
    verify.add_argument('--g')
    field = verify.add_mutually_exclusive_group(required=True)
    field.add_argument('--vf', help='Point field, e.g. "t=t; x=x" or {"x": "1"}.')
    field.add_argument('--family', choices=sorted(determining.families()))
    verify.set_defaults(handler=cmd_verify)

    bracket = add_parser('bracket', help='Lie bracket of two fields.')
    bracket.add_argument('--chart', choices=['point', 'equiv'], default='point')
    bracket.add_argument('--v', required=True)
    bracket.add_argument('--w', required=True)
    bracket.set_defaults(handler=cmd_bracket)

    table = add_parser('table', help='Commutator and adjoint tables.')
    table.add_argument('kind', choices=['commutators', 'adjoint'])
    table.add_argument('--algebra', choices=['l10', 'ibe', 'equiv'], default='l10')
    table.add_argument('--compare-paper', action='store_true')
    table.set_defaults(handler=cmd_table)

    optimal = add_parser('optimal-system', help='Optimal system and proof replays.')
    optimal.add_argument('action', choices=['list', 'replay'])
    optimal.add_argument('--case')
    optimal.set_defaults(handler=cmd_optimal_system)

    classify = add_parser('classify', help='Classification table verification.')
    classify.add_argument('action', choices=['report', 'row', 'invariants'])
    classify.add_argument('number', nargs='?', type=int)
    classify.set_defaults(handler=cmd_classify)

    numcheck = add_parser('numcheck', help='Numeric oracle self-checks.')
    numcheck.set_defaults(handler=cmd_numcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(message)s',
    )
    config.numeric.update(samples=args.samples, seed=args.seed, tol=args.tol)
    if args.command == 'classify' and args.action == 'row' and args.number is None:
        parser.error('classify row needs a row number.')

    try:
        with timer(args.command):
            result = args.handler(args)
    except (SymbolicError, AssertionError, KeyError, determining.ApplicabilityError,
            determining.AnsatzTooLarge, lie_algebra.ShapeMismatch, equivalence.RoleViolation,
            optimal_system.NotClosedForm, numeric.NumericError) as error:
        logging.error(f'{type(error).__name__}: {error}')
        return 2

    text = dumps(result.report) if args.format == 'json' else result.markdown
    try:
        if args.save:
            name = serialize([args.command, *(
                getattr(args, k, None) for k in ('kind', 'algebra', 'action', 'number', 'case')
            )])
            dump(result.report, os.path.join(config.output_dir, f'{name}.json'))
        if args.output:
            directory = os.path.dirname(args.output)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(args.output, 'w') as file:
                file.write(text + '\n')
    except OSError as error:
        logging.error(f'Cannot write the report: {error}')
        return 2
    if args.output:
        print(f'{args.command}: {"pass" if result.ok else "fail"}, report written to {args.output}')
    else:
        print(text)
    return 0 if result.ok else 1


if __name__ == '__main__':
    sys.exit(main())
