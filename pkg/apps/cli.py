"""CLI application for the pullback lab."""

import logging
import sys
from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator

import click
import numpy as np

from apps import pipeline
from apps.config import VALID_LOG_LEVELS, RunConfig, load_config
from bounds.conformal import lambda_brackets
from dynamics.errors import BasinDetected, LabError
from integrations.emitters import (
    BASIN_COLUMNS,
    LAMBDA_COLUMNS,
    ResultWriter,
    cycles_json,
    envelope_csv,
    lambda_table_csv,
    models_csv,
    models_json,
    orbit_csv,
    orbit_json,
    regions_json,
    report_json,
    tail_json,
    telescope_csv,
    telescope_json,
    to_json,
)
from schemas.telescope import TailDistribution

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    """Logs go to stderr so data on stdout stays byte-identical across runs."""
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr, force=True)


@contextmanager
def handle_errors(action: str) -> Iterator[None]:
    """Map lab errors to their exit codes with a one-line reason."""
    try:
        yield
    except LabError as e:
        logger.debug(f"Failed to {action}", exc_info=True)
        click.echo(f"Error: {e}", err=True)
        sys.exit(e.exit_code)
    except Exception as e:
        logger.error(f"Failed to {action}: {e}")
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)


def _load(ctx: click.Context, options: Dict[str, Any]) -> RunConfig:
    config = load_config(
        ctx.obj.get('config_file'),
        overrides=options,
        env_file=ctx.obj.get('env_file'),
    )
    configure_logging('DEBUG' if ctx.obj.get('verbose') else config.logging.level)
    return config


def orbit_options(func: Callable) -> Callable:
    """Options shared by every subcommand that iterates a map."""
    for option in reversed([
        click.option('--map', help='Map spec, e.g. poly:d=2,c=-2 or exp:a=1,c=0'),
        click.option('--z0', help='Starting point, e.g. 2, -i or 0.3-0.1i'),
        click.option('--n', type=int, help='Orbit length'),
        click.option('--max-period', type=int, help='Largest cycle period searched'),
        click.option('--box', type=float, help='Cycle search box half-width'),
        click.option('--grid', type=int, help='Cycle search seeds per axis'),
    ]):
        func = option(func)
    return func


def telescope_options(func: Callable) -> Callable:
    for option in reversed([
        click.option('--precision-bits', type=int, help='Initial mantissa bits'),
        click.option('--samples', type=int, help='Initial circle samples'),
        click.option('--bisect-tol', type=float, help='Relative bisection tolerance'),
        click.option('--step-tol', type=float, help='Refinement tolerance'),
    ]):
        func = option(func)
    return func


def output_options(func: Callable) -> Callable:
    func = click.option('--output', help='Output file; stdout when absent')(func)
    func = click.option('--format', type=click.Choice(['csv', 'json']), help='Output format')(func)
    return func


@click.group()
@click.option('--config', 'config_file', help='Flat key=value or YAML config file')
@click.option('--env-file', default=None, help='Environment file path')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.option('--log-level', type=click.Choice(VALID_LOG_LEVELS), help='Log level')
@click.pass_context
def cli(ctx, config_file, env_file, verbose, log_level):
    """Pullback lab CLI - telescopic pullbacks and Lyapunov exponent bounds."""
    ctx.ensure_object(dict)
    ctx.obj['config_file'] = config_file
    ctx.obj['env_file'] = env_file
    ctx.obj['verbose'] = verbose
    ctx.obj['log_level'] = log_level


def _options(ctx: click.Context, options: Dict[str, Any]) -> Dict[str, Any]:
    return {'log_level': ctx.obj.get('log_level'), **options}


@cli.command()
@orbit_options
@output_options
@click.pass_context
def orbit(ctx, **options):
    """Iterate a map and write the orbit with running delta_i and D_i."""
    with handle_errors("compute orbit"):
        config = _load(ctx, _options(ctx, options))
        spec, orbit_ = pipeline.run_orbit(config)
        writer = ResultWriter(config.output.path)
        if config.output.format == 'json':
            writer.write(orbit_json(spec, orbit_))
        else:
            writer.write(orbit_csv(spec, orbit_))


@cli.command()
@orbit_options
@telescope_options
@output_options
@click.option('--regions', is_flag=True, help='Also write traced region boundaries as JSON')
@click.pass_context
def telescope(ctx, regions, **options):
    """Compute the radii tau_i, the moduli m_i and the tail distribution."""
    with handle_errors("compute telescope"):
        config = _load(ctx, _options(ctx, options))
        run = pipeline.run_telescope(config)
        tail = TailDistribution.from_moduli(run.tele.m)
        writer = ResultWriter(config.output.path)
        if config.output.format == 'json':
            writer.write(telescope_json(run.tele, tail))
        else:
            writer.write(telescope_csv(run.tele))
            if writer.path is not None:
                writer.write(tail_json(tail), suffix='_tail.json')
            else:
                logger.info("Tail distribution is written next to --output or with --format json")
        if regions:
            region_text = regions_json(pipeline.telescope_regions(run, config))
            if writer.path is None:
                click.echo(region_text, nl=False)
            else:
                writer.write(region_text, suffix='_regions.json')


@cli.command()
@orbit_options
@telescope_options
@click.option('--output', help='Report file; stdout when absent')
@click.option('--gamma', type=float, help='Exponent slack in (0, 1)')
@click.option('--a-n-rule',
              type=click.Choice(['power_fifth', 'inverse_log', 'inverse_log_log', 'bounded_inverse_log']),
              help='Split point rule')
@click.pass_context
def verify(ctx, **options):
    """Run every bound check and write the report; exits 1 on a failed check."""
    with handle_errors("verify bounds"):
        config = _load(ctx, _options(ctx, options))
        writer = ResultWriter(config.output.path)
        try:
            report = pipeline.run_verify(config)
        except BasinDetected as e:
            writer.write(to_json({
                "map": config.orbit.map,
                "passed": False,
                "hypothesis_failure": "basin",
                "reason": str(e),
                "cycle": e.cycle.to_record(),
            }))
            raise

        writer.write(report_json(report))
        failures = report.failures()
        for claim in failures:
            click.echo(f"[FAIL] {claim.claim_id}: margin {claim.measured_margin:.6g}", err=True)
        if failures:
            sys.exit(1)
        click.echo(f"[OK] {len(report.claims)} claims checked", err=True)


@cli.command()
@orbit_options
@telescope_options
@output_options
@click.option('--n-series', help='Comma-separated orbit lengths, e.g. 4,8,16,32')
@click.option('--c-re', help='Real parts of c as start:stop:count')
@click.option('--c-im', help='Imaginary parts of c as start:stop:count')
@click.option('--jobs', type=int, help='Worker processes')
@click.option('--kappa', type=float, help='Slow-decay rate constant')
@click.option('--beta', type=float, help='Slow-decay rate exponent')
@click.pass_context
def sweep(ctx, **options):
    """Envelope over an n-series, or basin detection over a c-grid."""
    with handle_errors("run sweep"):
        config = _load(ctx, _options(ctx, options))
        writer = ResultWriter(config.output.path)
        as_json = config.output.format == 'json'
        if config.sweep.c_re is not None:
            rows = pipeline.sweep_basin(config)
            writer.write(models_json(rows) if as_json else models_csv(BASIN_COLUMNS, rows))
        elif config.orbit.n_series:
            points = pipeline.sweep_envelope(config)
            writer.write(models_json(points) if as_json else envelope_csv(points))
        else:
            click.echo("Error: sweep needs --n-series or --c-re", err=True)
            sys.exit(2)


@cli.command()
@click.option('--map', help='Map spec, e.g. poly:d=2,c=-2')
@click.option('--max-period', type=int, help='Largest period searched')
@click.option('--box', type=float, help='Seed box half-width')
@click.option('--grid', type=int, help='Seeds per axis')
@click.option('--output', help='Output file; stdout when absent')
@click.pass_context
def cycles(ctx, **options):
    """List cycles found by the Newton search, with multipliers, as JSON."""
    with handle_errors("search cycles"):
        config = _load(ctx, _options(ctx, options))
        spec = config.orbit.map_spec
        found = pipeline.search_cycles(spec, config)
        logger.info(f"M_f upper bound: {min(c.max_modulus for c in found) + 1.0:.12g}")
        ResultWriter(config.output.path).write(cycles_json(found))


@cli.command('lambda-table')
@click.option('--r-min', type=float, default=1.001, show_default=True, help='Smallest R (> 1)')
@click.option('--r-max', type=float, default=1000.0, show_default=True, help='Largest R')
@click.option('--count', type=click.IntRange(min=1), default=100, show_default=True,
              help='Grid points, log-spaced')
@output_options
@click.pass_context
def lambda_table(ctx, r_min, r_max, count, **options):
    """Brackets [log 16R, log 16(R+1)] for the extremal modulus on a log grid."""
    with handle_errors("build lambda table"):
        config = _load(ctx, _options(ctx, options))
        if r_min <= 1 or r_max < r_min:
            click.echo(f"Error: need 1 < r-min <= r-max, got {r_min}, {r_max}", err=True)
            sys.exit(2)
        radii = [float(R) for R in np.geomspace(r_min, r_max, count)]
        writer = ResultWriter(config.output.path)
        if config.output.format == 'json':
            writer.write(to_json([
                dict(zip(LAMBDA_COLUMNS, (R, *lambda_brackets(R)))) for R in radii
            ]))
        else:
            writer.write(lambda_table_csv(radii))


def main():
    """Main CLI entry point."""
    cli(obj={})


if __name__ == '__main__':
    main()
