import os
import sys
import csv
import json
import argparse
import numpy as np
import glstoolkit
from glstoolkit import utils
from glstoolkit.psi import make_family, dominates
from glstoolkit.conjugate import v_grid_function, fenchel, tail_bound, orlicz_M
from glstoolkit.empirics import EmpiricalSample, moment_profile, gls_norm, natural_function, rearrange, \
    h_norm
from glstoolkit.bounds import OperatorTypeSpec, BoundReport, TabulatedWeight, k_constant, k_reference, \
    k_simple_upper, propagate, upsilon_table
from glstoolkit.verifier import ScenarioConfig, VerificationReport, run_scenario, read_scenario, COLUMNS
from glstoolkit.exceptions import PreconditionError, ComputationError, NoClosedFormError

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_PRECONDITION = 2
EXIT_USAGE = 64
EPILOG = 'For more information, visit https://gls-toolkit.readthedocs.io/en/latest/'


class ArgumentParser(argparse.ArgumentParser):
    """An argument parser that exits with status 64 on usage errors.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, 'Error: {}\n'.format(message))


def float_list(text):
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('expected a comma-separated list of numbers, got {!r}'.format(text))


def slowly_varying(text):
    kind, _, value = text.partition(':')
    if kind not in ('log_power', 'constant'):
        raise argparse.ArgumentTypeError("L must be 'log_power:r' or 'constant:c', got {!r}".format(text))
    try:
        value = float(value) if value else 1.
    except ValueError:
        raise argparse.ArgumentTypeError('L parameter must be a number, got {!r}'.format(value))
    return {'kind': kind, 'r' if kind == 'log_power' else 'c': value}


def add_psi_arguments(parser):
    group = parser.add_argument_group('generating function')
    group.add_argument('--psi', help='Family name: psi_m, psi_m_l, psi_b_gamma_l, degenerate, psi_b_beta.')
    group.add_argument('--psi-json', help='A family descriptor as JSON text or a path to a JSON file.')
    group.add_argument('--m', type=float, help='Power parameter m.')
    group.add_argument('--r', type=float, help='Exponent r of the degenerate family.')
    group.add_argument('--b', type=float, help='Support bound b.')
    group.add_argument('--beta', type=float, help='Exponent beta of psi_b_beta.')
    group.add_argument('--gamma', type=float, help='Exponent gamma of psi_b_gamma_l.')
    group.add_argument('--L', type=slowly_varying, help="Slowly varying function, 'log_power:r' or 'constant:c'.")


def read_json_argument(text):
    try:
        if os.path.exists(text):
            with open(text, 'r') as f:
                return json.load(f)
        return json.loads(text)
    except (OSError, ValueError) as e:
        raise PreconditionError('could not parse JSON descriptor: {}'.format(e))


def psi_from_args(args):
    """Builds the generating function named by the command-line flags.
    """
    if args.psi_json:
        return make_family(read_json_argument(args.psi_json))
    if not args.psi:
        raise PreconditionError('a generating function is required: pass --psi or --psi-json')
    desc = {'family': args.psi}
    for key in ('m', 'r', 'b', 'beta', 'gamma', 'L'):
        value = getattr(args, key)
        if value is not None:
            desc[key] = value
    return make_family(desc)


def load_sample(path):
    if not utils.check_files([path]):
        raise PreconditionError('could not read sample file {}'.format(path))
    return EmpiricalSample.load(path)


def run_k_constant(args):
    psi = psi_from_args(args)
    report = k_constant(psi, args.lam)
    try:
        report.alternatives.append(k_reference(psi, args.lam))
    except NoClosedFormError:
        pass
    try:
        report.alternatives.append(BoundReport(k_simple_upper(psi, args.lam), 2. if psi.b > 2 else 0.5*(psi.b + 1.),
                                               'simple-upper', psi.to_descriptor()))
    except PreconditionError:
        pass
    return report.to_dict()


def run_conjugate(args):
    psi = psi_from_args(args)
    v = v_grid_function(psi)
    result = {'psi': psi.to_descriptor(),
              'u': args.u,
              'v_star': [fenchel(v, u) for u in args.u]}
    if args.y:
        result['y'] = args.y
        result['orlicz_M'] = [orlicz_M(psi, y) for y in args.y]
    return result


def run_tail_bound(args):
    psi = psi_from_args(args)
    return {'psi': psi.to_descriptor(),
            'norm': args.norm,
            'threshold': float(np.e*args.norm),
            'y': args.y,
            'bound': [tail_bound(psi, args.norm, y) for y in args.y]}


def run_norm(args):
    psi = psi_from_args(args)
    sample = load_sample(args.sample)
    grid = psi.grid() if args.p is None else np.array(args.p)
    profile = moment_profile(sample, grid)
    result = gls_norm(profile, psi).to_dict()
    result['psi'] = psi.to_descriptor()
    if args.p is not None:
        result['profile'] = {'p': profile.grid.tolist(), 'norm': profile.norms.tolist()}
    return result


def run_natural(args):
    grid = make_family({'family': 'psi_m', 'm': 1.}).grid(n=args.nodes) if args.p is None else np.array(args.p)
    profiles = [moment_profile(load_sample(path), grid) for path in args.samples]
    psi = natural_function(profiles)
    envelope = psi.with_scale(1.)
    return {'psi': psi.to_descriptor(),
            'scale': psi.scale,
            'norms': [gls_norm(profile, envelope).value for profile in profiles]}


def run_rearrange(args):
    pair = rearrange(load_sample(args.sample))
    t = args.t if args.t else pair.breaks[1:].tolist()
    result = {'t': t,
              'decreasing': [pair.decreasing(x) for x in t],
              'maximal': [pair.maximal(x) for x in t]}
    if args.p:
        result['p'] = args.p
        result['lp_norm'] = [pair.lp_norm(p) for p in args.p]
        result['h_norm'] = [h_norm(pair, p) for p in args.p]
    return result


def run_propagate(args):
    psi = psi_from_args(args)
    spec = OperatorTypeSpec(args.lam, args.nu, args.Z, psi.b)
    return propagate(spec, psi, args.norm).to_dict()


def run_upsilon(args):
    psi = psi_from_args(args)
    if args.weight:
        try:
            data = np.loadtxt(args.weight, delimiter=',', ndmin=2, comments='#')
        except (OSError, ValueError) as e:
            raise PreconditionError('could not read weight table {}: {}'.format(args.weight, e))
        if data.shape[1] != 2:
            raise PreconditionError('weight table {} must have two columns q,W, found {}'
                                    .format(args.weight, data.shape[1]))
        W = TabulatedWeight(data[:, 0], data[:, 1])
    else:
        lam = args.lam
        def W(q):
            return (q/(q - 1.))**lam
    grid = args.p if args.p else psi.grid(n=64)[1:].tolist()
    return upsilon_table(W, psi, grid)


def run_compare(args):
    psi = psi_from_args(args)
    other = make_family(read_json_argument(args.other))
    return {'psi': psi.to_descriptor(),
            'other': other.to_descriptor(),
            'dominates': dominates(psi, other, args.tolerance),
            'dominated_by': dominates(other, psi, args.tolerance)}


def run_verify(args):
    if args.config:
        desc = read_scenario(args.config)
        if not isinstance(desc, dict):
            raise PreconditionError('scenario file {} must hold a JSON object'.format(args.config))
    elif args.kind:
        desc = {'kind': args.kind}
    else:
        raise PreconditionError('verify needs a scenario kind or --config')
    overrides = {'paths': args.paths, 'steps': args.steps, 'grid': args.grid, 'degree': args.degree,
                 'seed': args.seed, 'p_grid': args.p, 'lam': args.lam, 'nu': args.nu, 'Z': args.Z,
                 'slack': args.slack, 'signal': args.signal, 'check': args.check}
    if args.scaled:
        overrides['scaled'] = True
    if args.psi or args.psi_json:
        overrides['psi'] = psi_from_args(args).to_descriptor()
    desc = dict(desc)
    desc.update({k: v for k, v in overrides.items() if v is not None})
    config = ScenarioConfig.from_dict(desc)
    progress_obj = utils.ProgressBar() if args.progress else None
    return run_scenario(config, progress_obj=progress_obj)


def emit_table(report, stream):
    """Writes the per-p rows of a verification report as CSV.

    A comment line echoing the scenario precedes the fixed header; numbers
    are printed with 12 significant digits.

    :param report: The report.
    :type report: VerificationReport
    :param stream: The text stream to write to.
    :type stream: file
    """
    if report.config is not None:
        config = report.config
        stream.write('# kind={} paths={} steps={} grid={} degree={} seed={}\n'.format(
            config['kind'], config['paths'], config['steps'], config['grid'], config['degree'], config['seed']))
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(COLUMNS)
    for row in report.rows:
        writer.writerow(['{:.12g}'.format(row[column]) for column in COLUMNS])


def write_output(result, args):
    """Writes a result as JSON or CSV to stdout or to the --out path.
    """
    fmt = args.format
    if fmt is None:
        fmt = 'csv' if args.out and args.out.lower().endswith('.csv') else 'json'
    if fmt == 'csv' and not isinstance(result, VerificationReport):
        raise PreconditionError('csv output is only available for verify reports')
    stream = open(args.out, 'w', newline='') if args.out else sys.stdout
    try:
        if fmt == 'csv':
            emit_table(result, stream)
        else:
            data = result.to_dict() if hasattr(result, 'to_dict') else result
            stream.write(utils.to_json(data) + '\n')
    finally:
        if args.out:
            stream.close()


def build_parser():
    """Builds the command-line parser with one subparser per subcommand.
    """
    parser = ArgumentParser(
        prog='gls-toolkit',
        description = glstoolkit.__doc__,
        epilog = EPILOG
    )
    parser.add_argument('--version', action='version', version='%(prog)s ' + glstoolkit.__version__)
    output = ArgumentParser(add_help=False)
    output.add_argument('--out', help='Write the report to this path instead of stdout.')
    output.add_argument('--format', choices=['json', 'csv'], help='Output format; defaults to the --out extension.')
    subparsers = parser.add_subparsers(dest='command', metavar='command', parser_class=ArgumentParser)
    subparsers.required = True

    sub = subparsers.add_parser('k-constant', parents=[output], help='Compute K_lambda[psi, b].')
    add_psi_arguments(sub)
    sub.add_argument('--lambda', dest='lam', type=float, default=1., help='The power lambda.')
    sub.set_defaults(run=run_k_constant)

    sub = subparsers.add_parser('conjugate', parents=[output], help='Evaluate v* and the Orlicz function M.')
    add_psi_arguments(sub)
    sub.add_argument('--u', type=float_list, default=[1.], help='Slopes at which to evaluate v*.')
    sub.add_argument('--y', type=float_list, help='Arguments at which to evaluate M[psi].')
    sub.set_defaults(run=run_conjugate)

    sub = subparsers.add_parser('tail-bound', parents=[output], help='Evaluate the tail bound of a GLS norm.')
    add_psi_arguments(sub)
    sub.add_argument('--norm', type=float, default=1., help='The Grand Lebesgue norm of f.')
    sub.add_argument('--y', type=float_list, required=True, help='The levels, each at least e times the norm.')
    sub.set_defaults(run=run_tail_bound)

    sub = subparsers.add_parser('norm', parents=[output], help='Estimate the GLS norm of a sample.')
    add_psi_arguments(sub)
    sub.add_argument('--sample', required=True, help='A .csv or .json sample file.')
    sub.add_argument('--p', type=float_list, help='The p-grid; defaults to the grid of psi.')
    sub.set_defaults(run=run_norm)

    sub = subparsers.add_parser('natural', parents=[output], help='Build the natural function of samples.')
    sub.add_argument('--samples', nargs='+', required=True, help='The .csv or .json sample files.')
    sub.add_argument('--p', type=float_list, help='The shared p-grid.')
    sub.add_argument('--nodes', type=int, default=64, help='Nodes of the default geometric p-grid.')
    sub.set_defaults(run=run_natural)

    sub = subparsers.add_parser('rearrange', parents=[output], help='Compute the decreasing rearrangement.')
    sub.add_argument('--sample', required=True, help='A .csv or .json sample file.')
    sub.add_argument('--t', type=float_list, help='Points of (0, 1]; defaults to the step boundaries.')
    sub.add_argument('--p', type=float_list, help='Exponents for the L_p and H(L_p) norms.')
    sub.set_defaults(run=run_rearrange)

    sub = subparsers.add_parser('propagate', parents=[output], help='Propagate a GLS norm through an operator.')
    add_psi_arguments(sub)
    sub.add_argument('--lambda', dest='lam', type=float, default=1., help='The power lambda.')
    sub.add_argument('--nu', type=float, default=None, help='The power nu; defaults to lambda.')
    sub.add_argument('--Z', type=float, default=1., help='The operator constant.')
    sub.add_argument('--norm', type=float, default=1., help='The GLS norm of the input.')
    sub.set_defaults(run=run_propagate)

    sub = subparsers.add_parser('upsilon', parents=[output], help='Tabulate upsilon for a weight W.')
    add_psi_arguments(sub)
    sub.add_argument('--lambda', dest='lam', type=float, default=1., help='W(p) = (p/(p-1))^lambda.')
    sub.add_argument('--weight', help='A CSV file of q,W(q) pairs replacing the power weight.')
    sub.add_argument('--p', type=float_list, help='The exponents.')
    sub.set_defaults(run=run_upsilon)

    sub = subparsers.add_parser('verify', parents=[output], help='Run a seeded verification scenario.')
    sub.add_argument('kind', nargs='?', choices=['doob', 'dunford-schwartz', 'fourier'], help='The scenario.')
    sub.add_argument('--config', help='A JSON scenario file.')
    sub.add_argument('--paths', type=int, help='Number of martingale paths.')
    sub.add_argument('--steps', type=int, help='Martingale steps, or truncation level N of the averages.')
    sub.add_argument('--grid', type=int, help='Grid resolution of the deterministic scenarios.')
    sub.add_argument('--degree', type=int, help='Degree of the trigonometric polynomial.')
    sub.add_argument('--seed', type=int, help='The seed; generated and echoed when missing.')
    sub.add_argument('--p', type=float_list, help='The p-grid, nodes > 1.')
    sub.add_argument('--lambda', dest='lam', type=float, help='The power lambda.')
    sub.add_argument('--nu', type=float, help='The power nu.')
    sub.add_argument('--Z', type=float, help='The operator constant.')
    sub.add_argument('--slack', type=float, help='The relative tolerance.')
    sub.add_argument('--signal', help='The input signal of the deterministic scenarios.')
    sub.add_argument('--scaled', action='store_true', help='Divide the martingale by sqrt(steps).')
    sub.add_argument('--check', choices=['type', 'gls'], help='Check the type inequality or the GLS bound.')
    sub.add_argument('--progress', action='store_true', help='Show a progress bar on stderr.')
    add_psi_arguments(sub)
    sub.set_defaults(run=run_verify)

    sub = subparsers.add_parser('compare', parents=[output], help='Compare two generating functions.')
    add_psi_arguments(sub)
    sub.add_argument('--other', required=True, help='The second descriptor, as JSON text or a file.')
    sub.add_argument('--tolerance', type=float, default=1e-2, help='Threshold for the final ratio.')
    sub.set_defaults(run=run_compare)
    return parser


def dispatch(argv):
    """Parses the arguments, runs the subcommand and writes its report.

    :param argv: The command-line arguments without the program name.
    :type argv: list
    :return: The exit status.
    :rtype: int
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    if getattr(args, 'nu', 0) is None and args.command == 'propagate':
        args.nu = args.lam
    try:
        result = args.run(args)
        write_output(result, args)
    except PreconditionError as e:
        print('Error: {}'.format(e), file=sys.stderr)
        return EXIT_PRECONDITION
    except ComputationError as e:
        print('Error: {}'.format(e), file=sys.stderr)
        return EXIT_COMPUTATION
    return EXIT_OK


def main():
    """The main command-line entry point for GLS Toolkit.
    """
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
