"""Command-line client for the solver service.

Each subcommand builds the same request models the HTTP endpoints accept and
calls the shared handlers in-process, so CLI output and service output agree
by construction. Exit codes: 0 success, 1 input errors (bad files, bad
flags, schema violations), 2 infeasible or degenerate models. JSON reports
carry every number with 12 significant digits and re-emit byte-identically
after a parse round trip.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from .errors import InputError, ModelError
from .service import handlers, schemas

JSON_DIGITS = 12


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.{JSON_DIGITS}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def emit_json(payload: dict) -> str:
    return json.dumps(_round_floats(payload), indent=2, sort_keys=True)


def _flat_items(payload: dict) -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []

    def walk(node, path):
        if isinstance(node, dict):
            for key in node:
                walk(node[key], path + [str(key)])
        else:
            items.append((".".join(path), node))

    walk(payload, [])
    return items


def emit_table(payload: dict) -> str:
    items = _flat_items(_round_floats(payload))
    width = max(len(key) for key, _ in items)
    lines = [f"{key.ljust(width)}  {_cell(value)}" for key, value in items]
    return "\n".join(lines)


def emit_csv(payload: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in _flat_items(_round_floats(payload)):
        writer.writerow([key, _cell(value)])
    return buf.getvalue().rstrip("\n")


def _cell(value) -> str:
    if isinstance(value, list):
        return json.dumps(value)
    if value is None:
        return ""
    return str(value)


def render(payload: dict, output: str) -> str:
    if output == "json":
        return emit_json(payload)
    if output == "table":
        return emit_table(payload)
    if output == "csv":
        return emit_csv(payload)
    raise InputError(f"unknown output format {output!r}")


def _read_market(path: str, x0_override: float | None) -> schemas.MarketPayload:
    data = _read_json(path)
    if x0_override is not None:
        data = dict(data)
        data["x0"] = x0_override
    try:
        return schemas.MarketPayload.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"invalid market file {path}: {exc}") from exc


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise InputError(f"input file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"top-level JSON value in {path} must be an object")
    return data


def _parse_jumps(spec: str) -> list[schemas.JumpAtom]:
    atoms = []
    for piece in spec.split(","):
        piece = piece.strip()
        if not piece:
            continue
        parts = piece.split(":")
        if len(parts) != 2:
            raise InputError(
                f'bad jump atom {piece!r}: expected "size:weight" pairs '
                'joined by commas, e.g. "-0.1:0.5,1.2:0.5"'
            )
        try:
            atoms.append(schemas.JumpAtom(size=float(parts[0]), weight=float(parts[1])))
        except (ValueError, ValidationError) as exc:
            raise InputError(f"bad jump atom {piece!r}: {exc}") from exc
    if not atoms:
        raise InputError("the jump law needs at least one size:weight atom")
    return atoms


output_option = click.option(
    "--output",
    type=click.Choice(["json", "table", "csv"]),
    default="json",
    show_default=True,
    help="report format",
)


@click.group()
def cli():
    """Mean-variance and monotone mean-variance portfolio tools."""


@cli.command("solve-mv")
@click.argument("market_file", type=str)
@click.option("--theta", type=float, default=1.0, show_default=True, help="risk aversion")
@click.option("--x0", type=float, default=None, help="override the file's initial wealth")
@output_option
def solve_mv_cmd(market_file, theta, x0, output):
    """Mean-variance optimal wealth and strategy for a market file."""
    request = schemas.SolveMvRequest(market=_read_market(market_file, x0), theta=theta)
    response = handlers.solve_mv(request)
    click.echo(render(response.model_dump(by_alias=True), output))


@cli.command("solve-mmv")
@click.argument("market_file", type=str)
@click.option("--theta", type=float, default=1.0, show_default=True, help="risk aversion")
@click.option("--x0", type=float, default=None, help="override the file's initial wealth")
@output_option
def solve_mmv_cmd(market_file, theta, x0, output):
    """Monotone mean-variance optimal wealth and strategy for a market file."""
    request = schemas.SolveMmvRequest(market=_read_market(market_file, x0), theta=theta)
    response = handlers.solve_mmv(request)
    click.echo(render(response.model_dump(by_alias=True), output))


@cli.command("check-consistency")
@click.argument("market_file", type=str)
@click.option("--theta", type=float, default=1.0, show_default=True, help="risk aversion")
@click.option("--x0", type=float, default=None, help="override the file's initial wealth")
@output_option
def check_consistency_cmd(market_file, theta, x0, output):
    """Decide whether the two preference optima coincide on a market."""
    request = schemas.ConsistencyRequest(market=_read_market(market_file, x0), theta=theta)
    response = handlers.check_consistency(request)
    click.echo(render(response.model_dump(by_alias=True), output))


@cli.command("eval-preference")
@click.argument("payoff_file", type=str)
@click.option("--theta", type=float, default=1.0, show_default=True, help="risk aversion")
@output_option
def eval_preference_cmd(payoff_file, theta, output):
    """Evaluate both preference scores of a payoff file."""
    data = _read_json(payoff_file)
    try:
        payload = schemas.PayoffPayload.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"invalid payoff file {payoff_file}: {exc}") from exc
    request = schemas.EvalPreferenceRequest(payoff=payload, theta=theta)
    response = handlers.eval_preference(request)
    click.echo(render(response.model_dump(by_alias=True), output))


@cli.command("simulate-jump")
@click.option("--r", type=float, required=True, help="riskless rate")
@click.option("--mu", type=float, required=True, help="risky drift")
@click.option("--sigma", type=float, required=True, help="diffusion volatility")
@click.option("--intensity", type=float, required=True, help="jump intensity")
@click.option("--jumps", type=str, required=True, help='jump law as "size:weight,..."')
@click.option("--T", "horizon", type=float, required=True, help="time horizon")
@click.option("--paths", type=int, default=100_000, show_default=True)
@click.option("--steps", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--theta", type=float, default=1.0, show_default=True, help="risk aversion")
@click.option("--x0", type=float, default=1.0, show_default=True, help="initial wealth")
@click.option("--workers", type=int, default=None, help="worker threads (capped by MMV_LAB_THREADS)")
@click.option(
    "--dump-paths",
    type=str,
    default=None,
    help="write per-path kernel and wealth samples to this CSV file",
)
@output_option
def simulate_jump_cmd(
    r, mu, sigma, intensity, jumps, horizon, paths, steps, seed, theta, x0,
    workers, dump_paths, output,
):
    """Monte Carlo check of the jump-diffusion kernel against closed forms."""
    try:
        request = schemas.SimulateJumpRequest(
            r=r,
            mu=mu,
            sigma=sigma,
            intensity=intensity,
            jumps=_parse_jumps(jumps),
            horizon=horizon,
            paths=paths,
            steps=steps,
            seed=seed,
            theta=theta,
            x0=x0,
            workers=workers,
            collect_paths=dump_paths is not None,
        )
    except ValidationError as exc:
        raise InputError(f"invalid simulation request: {exc}") from exc
    response, report = handlers.simulate_jump(request)
    if dump_paths is not None:
        with open(dump_paths, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["path", "kernel", "wealth"])
            for i in range(report.n_paths):
                writer.writerow(
                    [i, repr(float(report.path_kernel[i])), repr(float(report.path_wealth[i]))]
                )
    click.echo(render(response.model_dump(by_alias=True), output))


@cli.command("serve")
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and map errors to the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="mmv-lab", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        message = exc.format_message()
        hint = ""
        if exc.ctx is not None:
            hint = f" (try '{exc.ctx.command_path} --help')"
        click.echo(f"error: {message}{hint}", err=True)
        return 1
    except ValidationError as exc:
        click.echo(f"error: invalid request: {exc}", err=True)
        return 1
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ModelError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
