# splitrx.py

import json
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from core.catalog import list_experiments, load_builtin, load_spec_file
from core.context import RunnerProfile
from core.errors import SplitRxError
from core.logger import log, setup_logging
from core.loop import run_experiment
from models import LinkBudget
from modules.channel import as_split_config, identical_gain_channel
from modules.mi import mi_mc_histogram, mi_vs_rho
from modules.modem import make_constellation, ser_monte_carlo

app = typer.Typer(help="Splitting-receiver toolkit: MI / SER estimators and figure experiments.", no_args_is_help=True)
console = Console()

EXIT_SPLITRX_ERROR = 2
EXIT_IO_ERROR = 3


def _count(value: str, name: str) -> int:
    """Accept counts written as 10000000 or 1e7."""
    try:
        number = float(value)
    except ValueError:
        raise typer.BadParameter(f"{name} must be a number, got {value!r}")
    if number < 1 or number != int(number):
        raise typer.BadParameter(f"{name} must be a positive integer, got {value!r}")
    return int(number)


def _profile() -> RunnerProfile:
    profile = RunnerProfile()
    setup_logging(profile.log_level)
    return profile


def _guard(fn):
    try:
        return fn()
    except SplitRxError as e:
        console.print(f"[bold red]error:[/] {e}")
        raise typer.Exit(EXIT_SPLITRX_ERROR)
    except OSError as e:
        console.print(f"[bold red]I/O error:[/] {e}")
        raise typer.Exit(EXIT_IO_ERROR)


@app.command()
def run(
    spec_file: Optional[Path] = typer.Argument(None, help="Experiment spec JSON."),
    builtin: Optional[str] = typer.Option(None, "--builtin", "-b", help="Name of a built-in experiment (see `list`)."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory for CSV + summary."),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", min=1, help="Worker processes (SPLITRX_THREADS caps)."),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No progress bar."),
):
    """Run an experiment spec and write its CSV and summary JSON."""
    _profile()
    if (spec_file is None) == (builtin is None):
        raise typer.BadParameter("give exactly one of SPEC_FILE or --builtin")

    def _run():
        spec = load_builtin(builtin) if builtin else load_spec_file(spec_file)
        summary = run_experiment(spec, out_dir=out, workers=workers, quiet=quiet)
        console.print_json(json.dumps(summary["result"]))
        return summary

    _guard(_run)


@app.command("list")
def list_cmd():
    """List the built-in experiments."""
    _profile()
    table = Table(title="built-in experiments")
    for column in ("name", "kind", "figure", "budget [s]", "description"):
        table.add_column(column)
    for spec in _guard(list_experiments):
        table.add_row(spec.name, spec.kind, spec.figure or "", f"{spec.runtime_budget_s:.0f}", spec.description)
    console.print(table)


@app.command()
def show(name: str = typer.Argument(..., help="Built-in experiment name.")):
    """Print a built-in spec as JSON (a starting point for custom specs)."""
    _profile()
    spec = _guard(lambda: load_builtin(name))
    console.print_json(spec.model_dump_json())


@app.command()
def mi(
    rho: float = typer.Option(1.0 / 3.0, min=0.0, max=1.0, help="Splitting ratio on every antenna."),
    power: float = typer.Option(10.0, min=0.0),
    sigma1: float = typer.Option(1.0, help="CD noise standard deviation."),
    sigma2: float = typer.Option(1.0, help="PD noise standard deviation."),
    k: int = typer.Option(1, min=1, help="Antennas (identical unit gains)."),
    samples: Optional[str] = typer.Option(None, help="Monte-Carlo samples, e.g. 1e7."),
    bins: Optional[int] = typer.Option(None, min=8),
    seed: int = typer.Option(42, min=0),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", min=1),
):
    """Mutual information at one operating point (closed forms at rho = 0 or 1)."""
    profile = _profile()
    n = _count(samples, "samples") if samples else int(profile.mi_config["samples"])
    bins = bins or int(profile.mi_config["bins"])

    def _mi():
        lb = LinkBudget(power=power, sigma1_sq=sigma1 ** 2, sigma2_sq=sigma2 ** 2)
        ch = identical_gain_channel(k)
        cfg = as_split_config(rho, k)
        if cfg.is_all_coherent or cfg.is_all_power:
            (_, bits, err), = mi_vs_rho(ch, lb, [cfg], quadrature_tol=float(profile.mi_config["quadrature_tol"]))
            return {"rho": rho, "mi_bits": bits, "std_err": err, "method": "closed_form"}
        est = mi_mc_histogram(
            ch, cfg, lb, n, bins, seed,
            batches=int(profile.mi_config["batches"]), range_sd=float(profile.mi_config["range_sd"]),
            workers=workers or profile.workers, chunk_size=profile.chunk_size,
        )
        return {"rho": rho, "mi_bits": est.bits, "std_err": est.std_err, "samples": est.samples, "bins": est.bins_per_axis,
                "undersampled": est.undersampled, "outliers": est.outliers, "seed": seed, "method": "histogram"}

    result = _guard(_mi)
    log("mi", f"I = {result['mi_bits']:.4f} bits (+/- {result['std_err']:.4f})")
    console.print_json(json.dumps(result))


@app.command()
def ser(
    scheme: str = typer.Option("qam", help="pam, qam or im."),
    m: int = typer.Option(16, min=2, help="Constellation order."),
    rho: float = typer.Option(1.0, min=0.0, max=1.0),
    power: float = typer.Option(200.0, min=0.0),
    sigma1: float = typer.Option(1.0, help="CD noise standard deviation."),
    sigma2: float = typer.Option(1.0, help="PD noise standard deviation."),
    k: int = typer.Option(1, min=1),
    trials: Optional[str] = typer.Option(None, help="Monte-Carlo trials, e.g. 1e7."),
    seed: int = typer.Option(42, min=0),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", min=1),
):
    """Monte-Carlo symbol error rate at one operating point."""
    profile = _profile()
    n = _count(trials, "trials") if trials else int(profile.ser_config["trials"])

    def _ser():
        lb = LinkBudget(power=power, sigma1_sq=sigma1 ** 2, sigma2_sq=sigma2 ** 2)
        c = make_constellation(scheme, m)
        res = ser_monte_carlo(
            c, identical_gain_channel(k), as_split_config(rho, k), lb, n, seed,
            workers=workers or profile.workers, chunk_size=int(profile.ser_config["chunk_size"]),
        )
        return {"scheme": c.scheme, "m": m, "rho": rho, "power": power, **res.model_dump(), "seed": seed}

    result = _guard(_ser)
    log("ser", f"SER = {result['ser']:.3e} ({result['errors']}/{result['trials']})")
    console.print_json(json.dumps(result))


if __name__ == "__main__":
    app()
