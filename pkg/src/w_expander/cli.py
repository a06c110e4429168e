"""``w-expander`` command line.

stdout carries data (JSON or CSV), stderr carries tables and diagnostics.
Exit codes: 0 ok, 2 usage or parse error, 3 verification negative,
4 numeric failure.
"""

from __future__ import annotations

import csv
import json
import sys

import click
import numpy as np

from . import bounds
from .circuit import build_hm, build_lossy, build_optimal, compile_circuit, dump_circuit, load_circuit
from .errors import CircuitValidationError, DimensionError, DomainError
from .expansion import WExpansionProblem, verify_exact_w
from .optimizer import SearchConfig, maximize_H, write_trace_csv
from .suite import results_to_dict, run_verify

EXIT_NEGATIVE = 3
EXIT_NUMERIC = 4


def _emit_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2))


def _element_table(spec) -> str:
    lines = [f"{spec.label}: n={spec.n}, {spec.width} spatial modes, outputs {list(spec.output_modes)}"]
    lines.append(f"{'#':>3}  {'kind':<9} {'modes':<8} params")
    for k, el in enumerate(spec.elements, 1):
        params = ", ".join(f"{key}={_fmt(v)}" for key, v in el.params.items())
        modes = ",".join(str(m) for m in el.modes)
        lines.append(f"{k:>3}  {el.kind.value:<9} {modes:<8} {params}")
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


class _Group(click.Group):
    """Maps library exceptions onto the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (DomainError, DimensionError, CircuitValidationError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(2)
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            click.echo(f"numeric failure: {exc}", err=True)
            ctx.exit(EXIT_NUMERIC)


@click.group(cls=_Group, context_settings={"help_option_names": ["-h", "--help"]})
def cli() -> None:
    """Simulate and verify linear-optics W-state expanders with a Fock-state ancilla."""


@cli.command()
@click.option("--kind", type=click.Choice(["optimal", "hm", "lossy"]), required=True)
@click.option("-n", "n", type=click.IntRange(min=1), required=True, help="Ancilla photon number.")
@click.option("-m", "m", type=click.IntRange(min=1), default=None, help="Number of strong couplings (hm only).")
@click.option("-o", "output", type=click.Path(dir_okay=False, writable=True), default=None, help="Write here instead of stdout.")
def build(kind: str, n: int, m: int | None, output: str | None) -> None:
    """Build one of the analytic expander circuits as JSON."""
    if kind == "hm":
        if m is None:
            raise click.UsageError("--kind hm requires -m")
        if m > n:
            raise click.UsageError(f"-m must satisfy 1 <= m <= n, got m={m}, n={n}")
        spec = build_hm(n, m)
    elif m is not None:
        raise click.UsageError("-m is only valid with --kind hm")
    else:
        spec = build_optimal(n) if kind == "optimal" else build_lossy(n)
    text = dump_circuit(spec, output)
    if output is None:
        click.echo(text)
    click.echo(_element_table(spec), err=True)


@cli.command(name="eval")
@click.option("-c", "circuit_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("-N", "N", type=click.IntRange(min=2), default=2, show_default=True, help="Photons in the initial W state (default 2, the smallest W state).")
@click.option("--tol", type=float, default=1e-10, show_default=True)
def eval_cmd(circuit_file: str, N: int, tol: float) -> None:
    """Evaluate a circuit file; exit 3 unless the output is exactly the W state."""
    if not tol > 0:
        raise click.BadParameter("must be > 0", param_hint="--tol")
    spec = load_circuit(circuit_file)
    compiled = compile_circuit(spec)
    report = verify_exact_w(WExpansionProblem(N, spec.n, compiled), tol=tol)
    _emit_json(report.to_dict())
    if not report.exact_w:
        for v in report.violations:
            click.echo(f"violation {v.condition} at {v.location}: {v.magnitude:.3e}", err=True)
        sys.exit(EXIT_NEGATIVE)


@cli.command()
@click.option("--n-max", "n_max", type=click.IntRange(min=1), required=True)
@click.option("--N-max", "big_n_max", type=click.IntRange(min=1), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def scan(n_max: int, big_n_max: int, fmt: str) -> None:
    """Tabulate P_max, P_lossy, H_1, H_lossy over n = 1..n_max and N = 2..N_max."""
    rows = []
    for n in range(1, n_max + 1):
        h1, hl = bounds.H1_of(n), bounds.H_lossy_of(n)
        for N in range(2, big_n_max + 1):
            rows.append(
                {"n": n, "N": N, "P_max": bounds.P_max_of(n, N), "P_lossy": bounds.P_lossy_of(n, N), "H_1": h1, "H_lossy": hl}
            )
    if fmt == "json":
        _emit_json(rows)
        return
    writer = csv.DictWriter(sys.stdout, fieldnames=["n", "N", "P_max", "P_lossy", "H_1", "H_lossy"], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


@cli.command()
@click.option("-n", "n", type=click.IntRange(min=1), required=True)
@click.option("--restarts", type=click.IntRange(min=1), default=SearchConfig.restarts, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trace", "trace_file", type=click.Path(dir_okay=False, writable=True), default=None, help="CSV of H per iteration.")
def optimize(n: int, restarts: int, seed: int, trace_file: str | None) -> None:
    """Maximize H = min(F, G) over the coupling region."""
    result = maximize_H(n, SearchConfig(restarts=restarts, seed=seed))
    out = result.to_dict()
    out["H_1"] = bounds.H1_of(n)
    _emit_json(out)
    if trace_file:
        write_trace_csv(result, trace_file)
    click.echo(f"n={n}: H={result.best_H:.15g} ({result.classification}, m={result.m})", err=True)


@cli.command()
@click.option("--n-max", "n_max", type=click.IntRange(min=1), default=20, show_default=True, help="Range for closed-form checks.")
@click.option("-n", "--engine-n-max", "engine_n_max", type=click.IntRange(min=1), default=6, show_default=True, help="Range for permanent-backed checks.")
@click.option("--tamper", is_flag=True, hidden=True)
def verify(n_max: int, engine_n_max: int, tamper: bool) -> None:
    """Run the aggregated verification suite; exit 0 iff everything passes."""
    results = run_verify(n_max=n_max, engine_n_max=engine_n_max, tamper=tamper)
    _emit_json(results_to_dict(results))
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<42} {r.seconds:7.2f}s  {r.detail}", err=True)
    if not all(r.passed for r in results):
        sys.exit(EXIT_NEGATIVE)


def main(argv: list[str] | None = None) -> None:
    cli.main(args=argv, prog_name="w-expander")


if __name__ == "__main__":
    main()
