"""Command line entry point: ``esdgpos run|convergence|ops-check|cases``."""
import argparse
import logging
import sys

from esdgpos.config import RunConfig
from esdgpos.run_esdg_case import convergence_study, run_config
from esdgpos.scheme.cases import list_cases
from esdgpos.scheme.errors import EsdgError
from esdgpos.scheme.sbp import ELEMENT_TYPES, dump_operators, reference_ops
from esdgpos.scheme.utils.io import results_2_md_table

logger = logging.getLogger('esdgpos')


def _overrides(pairs):
    out = {}
    for pair in pairs or []:
        if '=' not in pair:
            raise argparse.ArgumentTypeError(f'--set expects key=value, got {pair!r}')
        key, value = pair.split('=', 1)
        out[key.strip()] = value.strip()
    return out


def _int_list(text):
    try:
        return [int(k) for k in text.split(',') if k.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a comma separated list of integers, got {text!r}')


def build_parser():
    parser = argparse.ArgumentParser(prog='esdgpos', description=__doc__)
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run one case from a config file')
    run.add_argument('config')
    run.add_argument('--set', action='append', metavar='KEY=VALUE', help='override a config entry')

    conv = sub.add_parser('convergence', help='run a case at several resolutions')
    conv.add_argument('config')
    conv.add_argument('--K', type=_int_list, required=True, help='e.g. 8,16,32')
    conv.add_argument('--set', action='append', metavar='KEY=VALUE', help='override a config entry')

    ops = sub.add_parser('ops-check', help='build reference operators and print their residuals')
    ops.add_argument('--elem', choices=ELEMENT_TYPES, required=True)
    ops.add_argument('--N', type=int, required=True)
    ops.add_argument('--alpha', type=float)
    ops.add_argument('--beta', type=float)
    ops.add_argument('--dump', metavar='DIR', help='write every matrix as text')

    cases = sub.add_parser('cases', help='benchmark case registry')
    cases.add_argument('action', choices=['list'])
    return parser


def _ops_check(args):
    ops = reference_ops(args.elem, args.N, args.alpha, args.beta)
    rows = [{'operator': name, 'residual': float(value)} for name, value in ops.residuals().items()]
    print(results_2_md_table(rows, ['operator', 'residual'], method_name=f'{args.elem} N={args.N}, Np={ops.Np}'))
    if args.dump:
        paths = dump_operators(ops, args.dump)
        print(f'save {len(paths)} matrices to {args.dump}')


def _cases_list():
    rows = [{'name': name, 'dim': spec.dim, 't_final': spec.t_final, 'cfl': spec.cfl,
             'exact': 'yes' if spec.has_exact else 'no', 'description': spec.description}
            for name, spec in list_cases()]
    print(results_2_md_table(rows, ['name', 'dim', 't_final', 'cfl', 'exact', 'description']))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        if args.command == 'run':
            run_config(RunConfig.from_file(args.config, overrides=_overrides(args.set)))
        elif args.command == 'convergence':
            convergence_study(RunConfig.from_file(args.config, overrides=_overrides(args.set)), args.K)
        elif args.command == 'ops-check':
            _ops_check(args)
        else:
            _cases_list()
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except EsdgError as exc:
        print(f'esdgpos: error: {exc}', file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
