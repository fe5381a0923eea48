"""Command-line front end: verification, overlap tables, moment maps, search and number theory.

Example:
    python -m siclab.interface.cli verify --d 4 --catalog bengtsson
    python -m siclab.interface.cli orbits --d 7 --json
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from siclab.core.fiducials import FiducialCatalog, FiducialRecord, SearchConfig, exact_fiducial_d3, search_fiducial
from siclab.core.galois import (EXHAUSTIVE_DBAR_LIMIT, SYMMETRY_TOL, build_M, classify_type, j_isomorphism_criteria,
                                one_orbit_predicate, orbit_divisor_correspondence, overlap_symmetry_group,
                                symmetry_commutes_with_M, zauner_matrix)
from siclab.core.heisenberg import Dimension, clifford_conjugate, dft_unitary
from siclab.core.momentmap import (admissible_geometry, dft_relation_check, is_admissible_image, moment_map,
                                   moment_points_to_csv, sample_admissible, torus_eigenbasis, write_moment_csv)
from siclab.core.overlap import (SIC_TOL, cyclic_subgroup, enumerate_cyclic_subgroups, is_sic_fiducial,
                                 orbit_vectors, overlap_map, projective_line_size, sic_residuals)
from siclab.core.quadfield import (dimension_tower_check, field_data, field_info, nine_d_constraint_check,
                                   norm_one_unit_and_r)
from siclab.core.utils import (config_value, dumps_json, format_float, load_config, load_data, pairs_to_complex,
                               resolve_catalog_path)

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_INPUT = 2


def _pick(flag: Any, config: Dict[str, Any], key_path: str, default: Any) -> Any:
    """Flag, else config value, else default. Unlike ``or``, a flag value of 0 is kept."""
    if flag is not None:
        return flag
    return config_value(config, key_path, default)


def _add_source_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--d', type=int, required=True, help='Hilbert space dimension')
    parser.add_argument('--family-t', type=float, default=None,
                        help='Parameter t of the d=3 family (0, 1, -e^{it})/sqrt2')
    source = parser.add_mutually_exclusive_group()
    source.add_argument('--vector', type=str, default=None,
                        help='JSON file holding a vector as [re, im] pairs, or a fiducial record')
    source.add_argument('--catalog', type=str, default=None,
                        help='Name of a built-in or catalog fiducial (tetrahedron, hesse, bengtsson, ...)')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', action='store_true', help='Print the report as JSON')
    common.add_argument('--tol', type=float, default=None, help='Numerical tolerance')
    common.add_argument('--config', type=str, default=None, help='Path to a config.yaml')
    common.add_argument('--catalog-file', type=str, default=None,
                        help='Fiducial catalog JSON (default: $SICLAB_CATALOG, config, ./fiducials.json)')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='Log debug messages')
    verbosity.add_argument('--quiet', action='store_true', help='Only log warnings and errors')

    parser = argparse.ArgumentParser(prog='siclab', description='Weyl-Heisenberg SIC fiducials and their arithmetic')
    sub = parser.add_subparsers(dest='command', required=True)

    verify = sub.add_parser('verify', parents=[common], help='Test a vector for the SIC property')
    _add_source_arguments(verify)

    overlap = sub.add_parser('overlap', parents=[common], help='Print the overlap table of a vector')
    _add_source_arguments(overlap)

    moment = sub.add_parser('moment', parents=[common], help='Sample the admissible torus')
    moment.add_argument('--d', type=int, required=True, help='Hilbert space dimension')
    moment.add_argument('--subgroup', type=str, default='0,1', help='Generator "p1,p2" of the cyclic subgroup')
    moment.add_argument('--samples', type=int, default=None, help='Points per torus component')
    moment.add_argument('--branch', type=int, choices=(1, -1), default=None,
                        help='Component for even d (default: both)')
    moment.add_argument('--output', type=str, default=None, help='Write the points to this CSV file')

    search = sub.add_parser('search', parents=[common], help='Numerically search for a fiducial')
    search.add_argument('--d', type=int, required=True, help='Hilbert space dimension')
    search.add_argument('--restarts', type=int, default=None, help='Number of random restarts')
    search.add_argument('--seed', type=int, default=None, help='Base random seed')
    search.add_argument('--max-iters', type=int, default=None, help='Iterations per restart')
    search.add_argument('--workers', type=int, default=None, help='Parallel restarts')
    search.add_argument('--no-save', action='store_true', help='Do not append the result to the catalog')

    orbits = sub.add_parser('orbits', parents=[common], help='Orbits of M against ideal divisors of dbar')
    orbits.add_argument('--d', type=int, required=True, help='Hilbert space dimension')

    fieldinfo = sub.add_parser('fieldinfo', parents=[common], help='The quadratic field attached to d')
    fieldinfo.add_argument('--d', type=int, required=True, help='Hilbert space dimension')

    selftest = sub.add_parser('selftest', parents=[common], help='Run the invariant suite')
    selftest.add_argument('--d-min', type=int, default=3, help='Smallest dimension checked')
    selftest.add_argument('--d-max', type=int, default=12, help='Largest dimension checked')
    selftest.add_argument('--keep-going', action='store_true', help='Run every check even after a failure')
    return parser


def parse_args_and_get_config(
    argv: Optional[Sequence[str]] = None,
    parser: Optional[argparse.ArgumentParser] = None
) -> Tuple[argparse.Namespace, Dict[str, Any], Dict[str, Any]]:
    """Parse command line arguments and load configuration.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` when omitted.
        parser: Optional prebuilt parser.

    Returns:
        Tuple containing:
            - The parsed arguments
            - The loaded configuration
            - A dictionary of processed parameters
    """
    if parser is None:
        parser = build_parser()
    args = parser.parse_args(argv)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    else:
        logging.getLogger().setLevel(logging.INFO)

    config = load_config(args.config) if args.config else load_config()

    parameters = {
        'command': args.command,
        'tol': _pick(args.tol, config, 'tolerances.sic', SIC_TOL),
        'catalog_path': resolve_catalog_path(args.catalog_file, config),
    }
    if args.command == 'search':
        parameters.update({
            'restarts': _pick(args.restarts, config, 'search.restarts', 64),
            'seed': _pick(args.seed, config, 'search.seed', 0),
            'max_iters': _pick(args.max_iters, config, 'search.max_iters', 2000),
            'workers': _pick(args.workers, config, 'search.workers', 1),
        })
    elif args.command == 'moment':
        parameters['samples'] = _pick(args.samples, config, 'moment.samples', 360)
        parameters['admissible_tol'] = _pick(args.tol, config, 'tolerances.admissible', 1e-9)
    elif args.command == 'selftest':
        parameters['symmetry_tol'] = config_value(config, 'tolerances.symmetry', SYMMETRY_TOL)
    elif args.command == 'orbits':
        parameters['dbar_limit'] = config_value(config, 'galois.exhaustive_dbar_limit', EXHAUSTIVE_DBAR_LIMIT)

    logger.info(f"Using parameters:")
    for key, value in parameters.items():
        logger.info(f"  {key}: {value}")

    return args, config, parameters


def _print_human(data: Any, indent: int = 0) -> None:
    pad = '  ' * indent
    if isinstance(data, dict):
        for key, value in data.items():
            if isinstance(value, (dict, list)) and value and not _is_flat_list(value):
                print(f"{pad}{key}:")
                _print_human(value, indent + 1)
            else:
                print(f"{pad}{key}: {_format_scalar(value)}")
    elif isinstance(data, list):
        for item in data:
            if isinstance(item, (dict, list)) and not _is_flat_list(item):
                print(f"{pad}-")
                _print_human(item, indent + 1)
            else:
                print(f"{pad}- {_format_scalar(item)}")
    else:
        print(f"{pad}{_format_scalar(data)}")


def _is_flat_list(value: Any) -> bool:
    return isinstance(value, list) and all(not isinstance(v, (dict, list)) for v in value)


def _format_scalar(value: Any) -> str:
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, list):
        return '[' + ', '.join(_format_scalar(v) for v in value) + ']'
    return str(value)


def emit(data: Dict[str, Any], as_json: bool) -> None:
    """Print a report; JSON floats carry 17 significant digits."""
    if as_json:
        print(dumps_json(data))
    else:
        _print_human(data)


def load_vector_file(path: str, d: int) -> FiducialRecord:
    """Read a vector file: a list of ``[re, im]`` pairs (or reals), or a fiducial record.

    Raises:
        ValueError: If the file is malformed or the length does not match ``d``.
    """
    data = load_data(path)
    if isinstance(data, dict):
        record = FiducialRecord.from_dict(data)
    elif isinstance(data, list):
        vector = pairs_to_complex(data)
        record = FiducialRecord(d=vector.shape[0], vector=vector, source=f'file:{path}', residual=float('nan'))
    else:
        raise ValueError(f"{path} holds neither a vector nor a fiducial record")
    if record.d != d:
        raise ValueError(f"{path} holds a vector of length {record.d}, expected d={d}")
    return record


def load_source(args: argparse.Namespace, parameters: Dict[str, Any]) -> FiducialRecord:
    """Resolve the vector named on the command line.

    Raises:
        ValueError: If no source is given and the catalog has nothing for ``d``.
    """
    d = args.d
    catalog = FiducialCatalog(parameters['catalog_path'])
    if args.vector:
        return load_vector_file(args.vector, d)
    if args.catalog:
        record = catalog.lookup(args.catalog, args.family_t or 0.0)
    elif args.family_t is not None:
        if d != 3:
            raise ValueError(f"--family-t describes a d=3 family, got d={d}")
        record = exact_fiducial_d3(args.family_t)
    else:
        record = catalog.for_dimension(d)
        if record is None:
            raise ValueError(f"No vector given and no fiducial for d={d} in {catalog.path}")
    if record.d != d:
        raise ValueError(f"Fiducial '{record.name}' has d={record.d}, expected d={d}")
    return record


def cmd_verify(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    record = load_source(args, parameters)
    dim = Dimension(args.d)
    tol = parameters['tol']
    report = is_sic_fiducial(dim, record.vector, tol)
    table = overlap_map(dim, record.vector)
    block = np.abs(table.values[:dim.d, :dim.d]) ** 2
    off_identity = np.delete(block.reshape(-1), 0)
    emit({
        'd': dim.d,
        'source': record.source,
        'passed': report.passed,
        'tol': tol,
        'worst_residual': report.worst_residual,
        'worst_index': list(report.worst_index.as_tuple()),
        'overlap_summary': {
            'expected_abs_sq': 1.0 / (dim.d + 1),
            'min_abs_sq': float(off_identity.min()) if off_identity.size else 0.0,
            'max_abs_sq': float(off_identity.max()) if off_identity.size else 0.0,
            'mean_residual': float(sic_residuals(table).sum() / max(off_identity.size, 1)),
        },
    }, args.json)
    if not report.passed:
        logger.warning(f"Vector fails the SIC test: residual {report.worst_residual:.3e} > {tol:g}")
        return EXIT_FAILED
    return EXIT_OK


def cmd_overlap(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    record = load_source(args, parameters)
    table = overlap_map(Dimension(args.d), record.vector)
    data = table.to_json()
    data['source'] = record.source
    emit(data, args.json)
    return EXIT_OK


def _parse_generator(text: str) -> Tuple[int, int]:
    try:
        p1, p2 = (int(part) for part in text.split(','))
    except ValueError:
        raise ValueError(f"Subgroup generator must look like 'p1,p2', got '{text}'")
    return p1, p2


def cmd_moment(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    dim = Dimension(args.d)
    C = cyclic_subgroup(dim, _parse_generator(args.subgroup))
    geometry = admissible_geometry(dim)
    samples = parameters['samples']
    tol = parameters['admissible_tol']
    if args.branch is not None:
        branches = [args.branch]
    else:
        branches = [1, -1] if dim.is_even else [1]

    points = []
    for branch in branches:
        points.extend(sample_admissible(dim, samples, branch))
    outside = sum(1 for p in points if not p.inside)

    data: Dict[str, Any] = {
        'd': dim.d,
        'subgroup': list(C.generator.as_tuple()),
        'sphere_radius': geometry.sphere_radius,
        'torus_dim': geometry.torus_dim,
        'torus_radius': geometry.torus_radius,
        'components': len(branches),
        'samples': len(points),
        'outside_delta': outside,
        'on_quadrics': all(is_admissible_image(dim, p, tol) for p in points),
    }

    record = FiducialCatalog(parameters['catalog_path']).for_dimension(dim.d)
    if record is not None:
        basis = torus_eigenbasis(dim, C)
        images = [moment_map(dim, basis, w) for w in orbit_vectors(dim, record.vector)]
        data['fiducial_source'] = record.source
        data['orbit_images'] = [[float(v) for v in x.coordinates] for x in images]

    if args.output:
        moment_points_to_csv(points, args.output)
        data['output'] = args.output
        emit(data, args.json)
    elif args.json:
        data['points'] = [{'x': [float(v) for v in p.coordinates], 'inside_delta': p.inside} for p in points]
        emit(data, True)
    else:
        emit(data, False)
        write_moment_csv(points, sys.stdout)
    return EXIT_OK


def cmd_search(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    config = SearchConfig(d=args.d, restarts=parameters['restarts'], max_iters=parameters['max_iters'],
                          seed=parameters['seed'], tol=parameters['tol'], workers=parameters['workers'])
    report = search_fiducial(config)
    losses = np.array(report.losses)
    data = {
        'd': args.d,
        'success': report.success,
        'residual': float(report.record.residual),
        'best_loss': report.best_loss,
        'restarts_run': report.restarts_run,
        'successes': report.successes,
        'loss_summary': {
            'min': float(losses.min()),
            'median': float(np.median(losses)),
            'max': float(losses.max()),
        },
        'source': report.record.source,
    }
    if report.success and not args.no_save:
        FiducialCatalog(parameters['catalog_path']).append(report.record)
        data['catalog'] = parameters['catalog_path']
    emit(data, args.json)
    return EXIT_OK if report.success else EXIT_FAILED


def cmd_orbits(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    report = orbit_divisor_correspondence(args.d, limit=parameters['dbar_limit'])
    emit(report.to_json(), args.json)
    if not report.match:
        logger.warning(f"d={args.d}: {report.orbit_count} orbits but {report.divisor_count} divisors")
        return EXIT_FAILED
    return EXIT_OK


def cmd_fieldinfo(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    data = field_info(args.d)
    data['type'] = classify_type(args.d).value
    data['one_orbit'] = one_orbit_predicate(args.d)
    data['j_isomorphic'] = j_isomorphism_criteria(args.d)
    emit(data, args.json)
    return EXIT_OK


def _selftest_checks(d: int, parameters: Dict[str, Any]) -> List[Tuple[str, Callable[[], bool]]]:
    dim = Dimension(d)
    tol = parameters['tol']
    checks: List[Tuple[str, Callable[[], bool]]] = []

    def dft_is_clifford() -> bool:
        F = np.array([[0, -1], [1, 0]])
        U = dft_unitary(dim)
        for p in dim.indices(dim.d):
            clifford_conjugate(dim, F, U, p)
        return True

    def subgroup_count() -> bool:
        return len(enumerate_cyclic_subgroups(dim)) == projective_line_size(dim.dbar)

    def dft_relation() -> bool:
        rng = np.random.default_rng(d)
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        z /= np.linalg.norm(z)
        return all(dft_relation_check(dim, z, C) < 1e-10 for C in enumerate_cyclic_subgroups(dim))

    checks += [('dft_is_clifford', dft_is_clifford), ('subgroup_count', subgroup_count),
               ('dft_relation', dft_relation)]

    def admissible_samples() -> bool:
        branches = (1, -1) if dim.is_even else (1,)
        return all(is_admissible_image(dim, p) for b in branches for p in sample_admissible(dim, 16, b))

    if d >= 3:
        checks.append(('admissible_samples', admissible_samples))

    record = FiducialCatalog(parameters['catalog_path']).for_dimension(d)
    if record is not None:
        def known_fiducial() -> bool:
            if not is_sic_fiducial(dim, record.vector, tol).passed:
                return False
            if d < 3:
                return True
            basis = torus_eigenbasis(dim, cyclic_subgroup(dim, (0, 1)))
            return is_admissible_image(dim, moment_map(dim, basis, record.vector), 1e-8)

        checks.append(('known_fiducial', known_fiducial))

        if dim.dbar <= EXHAUSTIVE_DBAR_LIMIT:
            def overlap_symmetries() -> bool:
                S = overlap_symmetry_group(dim, overlap_map(dim, record.vector), parameters['symmetry_tol'])
                F_z, F_hat = zauner_matrix(dim)
                if record.name == 'bengtsson':
                    return F_hat in S and symmetry_commutes_with_M(S, build_M(dim, F_z))
                return any(G.entries == (1, 0, 0, 1) for G in S)

            checks.append(('overlap_symmetries', overlap_symmetries))

    if d >= 4:
        checks.append(('dimension_tower', lambda: dimension_tower_check(d)))
        checks.append(('unit_order', lambda: norm_one_unit_and_r(field_data(d), d).order_matches))
        if dim.dbar <= EXHAUSTIVE_DBAR_LIMIT:
            checks.append(('orbit_divisor_match', lambda: orbit_divisor_correspondence(d).match))
    if d % 9 == 0:
        checks.append(('nine_d_constraint', lambda: nine_d_constraint_check(d)))
    return checks


def cmd_selftest(args: argparse.Namespace, parameters: Dict[str, Any]) -> int:
    if args.d_min < 2 or args.d_max < args.d_min:
        raise ValueError(f"Invalid dimension range {args.d_min}..{args.d_max}")
    results = []
    failed = False
    for d in range(args.d_min, args.d_max + 1):
        for name, check in _selftest_checks(d, parameters):
            try:
                passed = bool(check())
                detail = ''
            except ValueError as e:
                passed, detail = False, str(e)
            results.append({'d': d, 'check': name, 'passed': passed, 'detail': detail})
            logger.debug(f"selftest d={d} {name}: {'ok' if passed else 'FAILED'}")
            if not passed:
                failed = True
                logger.error(f"Self-test {name} failed for d={d} {detail}")
                if not args.keep_going:
                    break
        if failed and not args.keep_going:
            break
    emit({'passed': not failed, 'checks': len(results),
          'failures': [r for r in results if not r['passed']], 'results': results}, args.json)
    return EXIT_FAILED if failed else EXIT_OK


COMMANDS = {
    'verify': cmd_verify,
    'overlap': cmd_overlap,
    'moment': cmd_moment,
    'search': cmd_search,
    'orbits': cmd_orbits,
    'fieldinfo': cmd_fieldinfo,
    'selftest': cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    try:
        args, config, parameters = parse_args_and_get_config(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_BAD_INPUT
    except (ValueError, OSError) as e:
        logger.error(f"Could not load configuration: {e}")
        return EXIT_BAD_INPUT

    try:
        return COMMANDS[args.command](args, parameters)
    except (ValueError, KeyError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_BAD_INPUT


if __name__ == '__main__':
    sys.exit(main())
