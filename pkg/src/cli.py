"""Command-line interface.

Exit codes: 0 pass, 1 verification failure or computation error,
2 usage or configuration error, 3 every requested alpha exceptional.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from .clark import build_clark_measure
from .config import RunConfig, build_config, stamp
from .errors import ClarkError, ConfigError
from .export import (
    levelset_frame,
    levelset_metadata,
    measure_export,
    measure_frame,
    operator_export,
    overlay_frame,
    scan_frame,
    write_csv,
    write_json,
)
from .modelspace import TruncatedHardy, clark_unitary, commutation_residual, joint_directions, project_kphi
from .profiles import PROFILES, tolerances
from .rif import Rif, is_exceptional, level_set_branches, rif_from_spec
from .runner import run_verification, spectrum_comparison
from .schemas import ScanMetadata, to_pair

app = typer.Typer(help="Clark measures, Clark unitaries and Taylor spectra for rational inner functions.")
console = Console(stderr=True)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_EXCEPTIONAL = 0, 1, 2, 3

RifOpt = typer.Option(None, "--rif", help="Profile name, inline JSON or path to a RIF JSON file")
AlphaOpt = typer.Option(None, "--alpha", help="Comma list of alpha angles in radians")
NodesOpt = typer.Option(None, "--nodes", help="Quadrature nodes N (power of two >= 64)")
DegreeOpt = typer.Option(None, "--degree", help="Degree cutoff D")
GridOpt = typer.Option(None, "--grid", help="Boundary grid G")
ScanOpt = typer.Option(None, "--scan", help="Taylor scan grid size")
TolOpt = typer.Option(None, "--tol-profile", help="strict | singular")
OutOpt = typer.Option(None, "--out", help="Output directory")
FormatOpt = typer.Option(None, "--format", help="csv | json")
ConfigOpt = typer.Option(None, "--config", help="TOML file mirroring the flags")


def _load(config: Optional[str], **flags) -> RunConfig:
    try:
        return build_config(flags, config)
    except ConfigError as e:
        console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(EXIT_CONFIG)


def _each_alpha(cfg: RunConfig, rif: Rif, work: Callable[[int, float, complex], None]) -> None:
    """Run work per generic alpha; exit 3 when every alpha is exceptional."""
    done = 0
    for i, (angle, alpha) in enumerate(zip(cfg.alpha, cfg.alphas())):
        if is_exceptional(rif, alpha):
            console.print(f"[yellow]alpha = {angle:.6g} is exceptional - skipped[/yellow]")
            continue
        try:
            work(i, angle, alpha)
        except ClarkError as e:
            console.print(f"[red]{type(e).__name__}:[/red] {e}")
            raise typer.Exit(EXIT_FAIL)
        done += 1
    if not done:
        console.print("[red]every requested alpha is exceptional[/red]")
        raise typer.Exit(EXIT_EXCEPTIONAL)


@app.command()
def levelset(
    rif: Optional[str] = RifOpt,
    alpha: Optional[str] = AlphaOpt,
    nodes: Optional[int] = NodesOpt,
    out: Optional[str] = OutOpt,
    format: Optional[str] = FormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Point clouds of the level sets C_alpha."""
    cfg = _load(config, rif=rif, alpha=alpha, nodes=nodes, out=out, format=format)
    phi = rif_from_spec(cfg.rif)
    tag = stamp(cfg)
    out_dir = Path(cfg.out)

    def work(i: int, angle: float, a: complex):
        branches = level_set_branches(phi, a, cfg.nodes)
        write_csv(levelset_frame(branches), out_dir / f"levelset_{i}.csv", tag)
        write_json(levelset_metadata(phi, branches, tag), out_dir / f"levelset_{i}.json")
        console.print(f"alpha = {angle:.6g}: {branches.n_branches} branch(es), {branches.n_nodes} nodes")

    _each_alpha(cfg, phi, work)


@app.command()
def measure(
    rif: Optional[str] = RifOpt,
    alpha: Optional[str] = AlphaOpt,
    nodes: Optional[int] = NodesOpt,
    out: Optional[str] = OutOpt,
    format: Optional[str] = FormatOpt,
    config: Optional[str] = ConfigOpt,
):
    """Discretized Clark measures sigma_alpha."""
    cfg = _load(config, rif=rif, alpha=alpha, nodes=nodes, out=out, format=format)
    phi = rif_from_spec(cfg.rif)
    tag = stamp(cfg)
    out_dir = Path(cfg.out)

    def work(i: int, angle: float, a: complex):
        mu = build_clark_measure(phi, a, cfg.nodes)
        if cfg.format == "csv":
            write_csv(measure_frame(mu), out_dir / f"measure_{i}.csv", tag)
        else:
            write_json(measure_export(mu, tag), out_dir / f"measure_{i}.json")
        console.print(f"alpha = {angle:.6g}: total mass {mu.total_mass():.12g}, {len(mu.excluded)} excluded")

    _each_alpha(cfg, phi, work)


@app.command()
def unitary(
    rif: Optional[str] = RifOpt,
    alpha: Optional[str] = AlphaOpt,
    degree: Optional[int] = DegreeOpt,
    grid: Optional[int] = GridOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
):
    """Matrices of U^1_alpha and U^2_alpha in the K_phi basis."""
    cfg = _load(config, rif=rif, alpha=alpha, degree=degree, grid=grid, out=out)
    phi = rif_from_spec(cfg.rif)
    tag = stamp(cfg)
    out_dir = Path(cfg.out)
    space = TruncatedHardy.for_rif(phi, cfg.degree, cfg.grid)
    basis = project_kphi(phi, space, cfg.projector)

    def work(i: int, angle: float, a: complex):
        u1 = clark_unitary(phi, a, 1, basis)
        u2 = clark_unitary(phi, a, 2, basis)
        comm = commutation_residual(u1, u2, joint_directions(phi, a, basis, u1, u2))
        for op in (u1, u2):
            doc = operator_export(op, "kphi", tag)
            doc.residuals["commutation"] = comm
            write_json(doc, out_dir / f"unitary{op.axis}_{i}.json")
        console.print(f"alpha = {angle:.6g}: dim {basis.dim}, commutation {comm:.3g}")

    _each_alpha(cfg, phi, work)


@app.command()
def spectrum(
    rif: Optional[str] = RifOpt,
    alpha: Optional[str] = AlphaOpt,
    nodes: Optional[int] = NodesOpt,
    degree: Optional[int] = DegreeOpt,
    grid: Optional[int] = GridOpt,
    scan: Optional[int] = ScanOpt,
    tol_profile: Optional[str] = TolOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
):
    """Taylor-spectrum scan of the pair read off U^1, U^2 with a C_alpha overlay."""
    cfg = _load(
        config, rif=rif, alpha=alpha, nodes=nodes, degree=degree, grid=grid,
        scan=scan, tol_profile=tol_profile, out=out,
    )
    phi = rif_from_spec(cfg.rif)
    tag = stamp(cfg)
    out_dir = Path(cfg.out)
    tol = tolerances(cfg.tol_profile)
    space = TruncatedHardy.for_rif(phi, cfg.degree, cfg.grid)
    basis = project_kphi(phi, space, cfg.projector)

    def work(i: int, angle: float, a: complex):
        mu = build_clark_measure(phi, a, cfg.nodes)
        compared = spectrum_comparison(phi, a, basis, mu, cfg.scan, tol.rank_tol)
        result, distance, budget = compared["scan"], compared["hausdorff"], compared["budget"]
        write_csv(scan_frame(result), out_dir / f"scan_{i}.csv", tag)
        write_csv(overlay_frame(mu), out_dir / f"overlay_{i}.csv", tag)
        meta = ScanMetadata(
            alpha=to_pair(a),
            grid_n=cfg.scan,
            tolerance=result.tolerance,
            radius=result.threshold,
            matrices_hash=result.matrices_hash,
            hausdorff=distance,
            budget=budget,
            residuals={
                "commutation": result.commutation,
                "unitarity": result.unitarity,
                "intertwining": compared["intertwining"],
            },
            **tag,
        )
        write_json(meta, out_dir / f"scan_{i}.json")
        console.print(f"alpha = {angle:.6g}: Hausdorff distance {distance:.4g} (budget {budget:.4g})")

    _each_alpha(cfg, phi, work)


def _progress(event_type: str, data: Dict[str, Any]) -> None:
    if event_type == "check_result":
        mark = "[green]pass[/green]" if data.get("passed") else "[red]FAIL[/red]"
        console.print(f"  {data['name']:<28} {mark}")


def _verify(cfg: RunConfig) -> None:
    result = run_verification(cfg, on_progress=_progress)
    table = Table(title="Verification")
    table.add_column("alpha")
    table.add_column("passed")
    table.add_column("first failure")
    for report in result["reports"]:
        table.add_row(f"{report.alpha[0]:+.4f}{report.alpha[1]:+.4f}i", str(report.passed), report.first_failure or "-")
    console.print(table)
    if result["exit_code"] == EXIT_EXCEPTIONAL:
        console.print("[red]every requested alpha is exceptional[/red]")
    raise typer.Exit(result["exit_code"])


@app.command()
def verify(
    rif: Optional[str] = RifOpt,
    alpha: Optional[str] = AlphaOpt,
    nodes: Optional[int] = NodesOpt,
    degree: Optional[int] = DegreeOpt,
    grid: Optional[int] = GridOpt,
    scan: Optional[int] = ScanOpt,
    tol_profile: Optional[str] = TolOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
):
    """Run every identity check and write report.json and audit.json."""
    cfg = _load(
        config, rif=rif, alpha=alpha, nodes=nodes, degree=degree, grid=grid,
        scan=scan, tol_profile=tol_profile, out=out,
    )
    _verify(cfg)


@app.command()
def example(
    name: str = typer.Argument(..., help="zw | fave | blaschke2"),
    nodes: Optional[int] = NodesOpt,
    degree: Optional[int] = DegreeOpt,
    scan: Optional[int] = ScanOpt,
    out: Optional[str] = OutOpt,
):
    """Verify a bundled profile at its own tolerance profile."""
    if name not in PROFILES:
        console.print(f"[red]unknown profile '{name}'[/red] (choose from {', '.join(sorted(PROFILES))})")
        raise typer.Exit(EXIT_CONFIG)
    cfg = _load(
        None, rif=name, nodes=nodes, degree=degree, scan=scan, out=out,
        tol_profile=PROFILES[name].tol_profile,
    )
    _verify(cfg)


def main(argv: Optional[List[str]] = None) -> None:
    app(args=argv)


if __name__ == "__main__":
    main()
