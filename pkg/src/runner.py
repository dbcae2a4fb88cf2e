"""Verification runner - named checks over one RIF and a list of alpha values.

This module provides the outer loop that enforces the identities:
- Clark measure mass, Poisson and disintegration identities
- Isometry of the Clark embedding and unitarity/commutation of U^1, U^2
- Intertwining J U = M J in both forms, refined over three levels
- Taylor spectrum of the pair read off U^1, U^2 against an independent level-set sample

A check that raises is recorded as a failed check and a flag; the run goes on.
"""

import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
from rich.console import Console

from .clark import (
    ClarkMeasureQuad,
    box_mass_fit,
    build_clark_measure,
    disintegration_residual,
    mass_residual,
    poisson_residual,
    sample_level_points,
)
from .config import RunConfig, stamp
from .errors import ClarkError, ExceptionalAlphaError
from .modelspace import (
    KphiBasis,
    TruncatedHardy,
    clark_unitary,
    commutation_residual,
    embedding_j,
    intertwining_residual,
    isometry_residual,
    joint_directions,
    kernel_consistency_residual,
    p_phi_necessity,
    project_kphi,
)
from .profiles import Tolerances, tolerances
from .rif import Rif, is_exceptional, level_set_branches, rif_from_spec
from .schemas import CheckResult, VerificationReport, check_passes, first_failing, to_pair
from .spectral.scan import (
    clark_pair,
    level_set_angles,
    mask_hausdorff,
    reference_nodes,
    spectrum_budget,
    taylor_spectrum_on_torus,
)

console = Console(stderr=True)

# Refinement levels as (degree step, node factor)
REFINEMENT_LEVELS = [(0, 1), (2, 2), (4, 4)]

POISSON_POINTS = [
    (0.0, 0.0),
    (0.3, 0.2j),
    (-0.4, 0.1),
    (0.2 + 0.2j, -0.3j),
    (0.5, 0.5),
]
KERNEL_POINT = (0.3, 0.2)
DISINTEGRATION_ALPHAS = 64

ProgressFn = Optional[Callable[[str, Dict[str, Any]], None]]


def _test_function(z1, z2):
    """Trigonometric polynomial used for the disintegration identity."""
    return 1.0 + 0.5 * z1 * np.conj(z2) + 0.25 * z1 ** 2 + 0.2 * np.conj(z2) ** 3


def _disintegration(rif: Rif, cfg: RunConfig) -> Union[float, ClarkError]:
    """Disintegration residual of the test function, or the error it raised."""
    try:
        return disintegration_residual(rif, _test_function, DISINTEGRATION_ALPHAS, cfg.nodes)
    except ClarkError as e:
        return e


# ============================================================================
# Residuals per level
# ============================================================================

def level_residuals(
    rif: Rif,
    alpha: complex,
    degree: int,
    nodes: int,
    grid: Optional[int] = None,
    method: str = "series",
) -> Dict[str, float]:
    """Model-space residuals for one refinement level."""
    space = TruncatedHardy.for_rif(rif, degree, grid)
    basis = project_kphi(rif, space, method)
    mu = build_clark_measure(rif, alpha, nodes)
    u1 = clark_unitary(rif, alpha, 1, basis)
    u2 = clark_unitary(rif, alpha, 2, basis)
    i1 = intertwining_residual(rif, alpha, 1, basis, mu, u1)
    i2 = intertwining_residual(rif, alpha, 2, basis, mu, u2)
    return {
        "mass": mass_residual(mu, rif),
        "isometry": isometry_residual(embedding_j(rif, alpha, basis, mu)),
        "unitarity_1": u1.residuals["unitarity"],
        "unitarity_2": u2.residuals["unitarity"],
        "commutation": commutation_residual(u1, u2, joint_directions(rif, alpha, basis, u1, u2)),
        "intertwining_1": i1.u_form,
        "intertwining_2": i2.u_form,
        "v_form_1": i1.v_form,
        "v_form_2": i2.v_form,
        "kernel_consistency": kernel_consistency_residual(rif, alpha, basis, mu, KERNEL_POINT),
    }


def spectrum_comparison(
    rif: Rif,
    alpha: complex,
    basis: KphiBasis,
    mu: ClarkMeasureQuad,
    grid_n: int,
    rank_tol: float,
) -> Dict[str, Any]:
    """Scan the pair read off U^1, U^2 and compare it with a separate level-set sample.

    Returns:
        Dict with the scan, the Hausdorff distance, its budget and the intertwining residual
    """
    u1 = clark_unitary(rif, alpha, 1, basis)
    u2 = clark_unitary(rif, alpha, 2, basis)
    residual = max(intertwining_residual(rif, alpha, u.axis, basis, mu, u).u_form for u in (u1, u2))
    a, b = clark_pair(embedding_j(rif, alpha, basis, mu), u1.matrix, u2.matrix, u1.domain, u2.domain)
    scan = taylor_spectrum_on_torus(a, b, grid_n, rank_tol)
    reference = level_set_angles(level_set_branches(rif, alpha, reference_nodes(grid_n)))
    return {
        "scan": scan,
        "hausdorff": mask_hausdorff(scan, reference),
        "budget": spectrum_budget(scan.step, residual),
        "intertwining": residual,
    }


def refinement_passes(values: List[float], floor: float) -> bool:
    """Non-increasing sequence, or already below the noise floor."""
    if all(v <= floor for v in values):
        return True
    return all(b <= a + floor for a, b in zip(values, values[1:]))


# ============================================================================
# Pipeline
# ============================================================================

def _threshold_for(name: str, tol: Tolerances) -> float:
    key = name.rsplit("_", 1)[0] if name[-2:] in ("_1", "_2") else name
    return getattr(tol, key)


def verify_alpha(
    rif: Rif,
    alpha: complex,
    cfg: RunConfig,
    on_progress: ProgressFn = None,
    disintegration: Union[float, ClarkError, None] = None,
) -> VerificationReport:
    """Run every named check for one alpha. Exceptions become failed checks.

    The disintegration identity does not depend on alpha; run_verification
    computes it once and passes the value (or the error it raised) in.
    """
    tol = tolerances(cfg.tol_profile)
    checks: List[CheckResult] = []
    flags: List[str] = []

    def notify(event_type: str, data: Dict[str, Any]):
        if on_progress:
            on_progress(event_type, data)

    def run(name: str, fn: Callable[[], CheckResult]):
        notify("check_start", {"name": name})
        try:
            result = fn()
        except ClarkError as e:
            result = CheckResult(name=name, passed=False, error=f"{type(e).__name__}: {e}")
            flags.append(f"{name}: {e}")
        checks.append(result)
        notify("check_result", result.model_dump())

    def measured(name: str, value: float, threshold: float, comparison: str = "le", **detail) -> CheckResult:
        return CheckResult(
            name=name,
            value=float(value),
            threshold=threshold,
            comparison=comparison,
            passed=check_passes(float(value), threshold, comparison),
            detail=detail,
        )

    mu = build_clark_measure(rif, alpha, cfg.nodes)
    if mu.excluded:
        flags.append(f"measure: {len(mu.excluded)} node(s) excluded near singular points")

    run("mass_identity", lambda: measured(
        "mass_identity", mass_residual(mu, rif), tol.mass,
        total=mu.total_mass(), deficit_estimate=mu.mass_deficit_estimate,
    ))
    run("poisson", lambda: measured(
        "poisson", max(poisson_residual(mu, rif, z) for z in POISSON_POINTS), tol.poisson,
    ))

    def disintegrated() -> CheckResult:
        value = _disintegration(rif, cfg) if disintegration is None else disintegration
        if isinstance(value, ClarkError):
            raise value
        return measured("disintegration", value, tol.disintegration, alphas=DISINTEGRATION_ALPHAS)

    run("disintegration", disintegrated)
    run("continuity", lambda: CheckResult(
        name="continuity",
        value=mu.branches.continuity_residual,
        comparison="flag",
        passed=True,
        detail={"crossings": mu.branches.crossings},
    ))

    # model-space residuals over the refinement levels
    levels: List[Dict[str, float]] = []
    try:
        for step, factor in REFINEMENT_LEVELS:
            grid = cfg.grid * factor if cfg.grid else None
            levels.append(level_residuals(rif, alpha, cfg.degree + step, cfg.nodes * factor, grid, cfg.projector))
    except ClarkError as e:
        flags.append(f"refinement: {e}")
        checks.append(CheckResult(name="refinement", passed=False, error=f"{type(e).__name__}: {e}"))

    if levels:
        for name, value in levels[0].items():
            if name == "mass":
                continue
            run(name, lambda n=name, v=value: measured(n, v, _threshold_for(n, tol)))
        for name in levels[0]:
            seq = [lvl[name] for lvl in levels]
            ok = refinement_passes(seq, tol.noise_floor)
            if not ok:
                flags.append(f"refinement:{name}: not non-increasing {seq}")
            checks.append(CheckResult(
                name=f"refinement:{name}",
                comparison="flag",
                passed=ok or not tol.enforce_refinement,
                detail={"sequence": seq},
            ))

    def necessity() -> CheckResult:
        space = TruncatedHardy.for_rif(rif, cfg.degree, cfg.grid)
        result = p_phi_necessity(rif, alpha, project_kphi(rif, space, cfg.projector), space)
        if result.cross_case:
            flags.append("p_phi_necessity: phi(0, z2) == 0, projection not needed")
            return CheckResult(
                name="p_phi_necessity", value=result.value, comparison="flag", passed=True,
                detail={"cross_case": True},
            )
        return measured("p_phi_necessity", result.value, tol.necessity_min, "ge")

    run("p_phi_necessity", necessity)

    def box_fit() -> CheckResult:
        fits = box_mass_fit(mu, sample_level_points(mu, rif))
        if not fits:
            return CheckResult(name="box_mass", passed=False, error="no sample points away from singular points")
        worst = min(f.min_ratio for f in fits)
        slopes = min(f.slope for f in fits)
        return CheckResult(
            name="box_mass",
            value=worst,
            threshold=tol.box_ratio_min,
            comparison="ge",
            passed=worst >= tol.box_ratio_min and slopes > 0,
            detail={"min_slope": slopes, "min_r_squared": min(f.r_squared for f in fits)},
        )

    run("box_mass", box_fit)

    def spectrum() -> CheckResult:
        space = TruncatedHardy.for_rif(rif, cfg.degree, cfg.grid)
        result = spectrum_comparison(rif, alpha, project_kphi(rif, space, cfg.projector), mu, cfg.scan, tol.rank_tol)
        scan = result["scan"]
        return measured(
            "spectrum_hausdorff", result["hausdorff"], result["budget"],
            grid_n=cfg.scan, marked=int(scan.mask.sum()), intertwining=result["intertwining"],
        )

    run("spectrum_hausdorff", spectrum)

    report = VerificationReport(
        profile=cfg.tol_profile,
        alpha=to_pair(alpha),
        checks=checks,
        passed=all(c.passed for c in checks),
        first_failure=first_failing(checks),
        flags=flags,
        **stamp(cfg),
    )
    return report


def run_verification(cfg: RunConfig, on_progress: ProgressFn = None) -> Dict[str, Any]:
    """Verify every configured alpha and write the report and audit record.

    Returns:
        Dict with success status, reports, skipped alphas, flags and exit code
    """
    rif = rif_from_spec(cfg.rif)
    reports: List[VerificationReport] = []
    skipped: List[float] = []
    flags: List[str] = []
    disintegration: Union[float, ClarkError, None] = None

    for angle, alpha in zip(cfg.alpha, cfg.alphas()):
        if is_exceptional(rif, alpha):
            skipped.append(angle)
            flags.append(f"alpha {angle:.6g}: exceptional, skipped")
            console.print(f"[yellow]alpha = {angle:.6g} is exceptional - skipped[/yellow]")
            continue
        try:
            if disintegration is None:
                disintegration = _disintegration(rif, cfg)
            report = verify_alpha(rif, alpha, cfg, on_progress, disintegration)
        except ExceptionalAlphaError as e:
            skipped.append(angle)
            flags.append(f"alpha {angle:.6g}: {e}")
            continue
        reports.append(report)

    if not reports:
        exit_code = 3
    elif all(r.passed for r in reports):
        exit_code = 0
    else:
        exit_code = 1

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        **stamp(cfg),
        "passed": exit_code == 0,
        "exitCode": exit_code,
        "skipped": skipped,
        "reports": [r.model_dump(mode="json", by_alias=True) for r in reports],
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2))
    _save_audit(out, cfg, reports, flags, exit_code)

    if on_progress:
        on_progress("pipeline_done", {"exit_code": exit_code, "reports": len(reports)})

    return {
        "success": exit_code == 0,
        "reports": reports,
        "skipped": skipped,
        "flags": flags,
        "exit_code": exit_code,
    }


def _save_audit(out: Path, cfg: RunConfig, reports: List[VerificationReport], flags: List[str], exit_code: int):
    """Every check with value, threshold and verdict. No timestamps."""
    audit = {
        **stamp(cfg),
        "exit_code": exit_code,
        "flags": flags + [f for r in reports for f in r.flags],
        "alphas": [
            {
                "alpha": list(r.alpha),
                "passed": r.passed,
                "first_failure": r.first_failure,
                "checks": [c.model_dump(mode="json") for c in r.checks],
            }
            for r in reports
        ],
    }
    (out / "audit.json").write_text(json.dumps(audit, indent=2))


# ============================================================================
# Analysis Functions
# ============================================================================

def analyze_run(output_path: str = "output/audit.json") -> Dict[str, Any]:
    """Summarize a completed run from its audit record."""
    try:
        with open(output_path) as f:
            audit = json.load(f)
    except Exception as e:
        return {"error": f"Could not load audit log: {e}"}

    observations = []
    failures: Dict[str, int] = {}
    for entry in audit.get("alphas", []):
        for check in entry.get("checks", []):
            if not check.get("passed"):
                failures[check["name"]] = failures.get(check["name"], 0) + 1
        if entry.get("first_failure"):
            observations.append(f"alpha {entry['alpha']}: first failure {entry['first_failure']}")
        else:
            observations.append(f"alpha {entry['alpha']}: all checks passed")

    return {
        "success": audit.get("exit_code") == 0,
        "exit_code": audit.get("exit_code"),
        "alphas": len(audit.get("alphas", [])),
        "flags": audit.get("flags", []),
        "failures": failures,
        "observations": observations,
    }


# ============================================================================
# CLI Entry Point
# ============================================================================

if __name__ == "__main__":
    import sys

    if len(sys.argv) > 1 and sys.argv[1] == "analyze":
        analysis = analyze_run()
        console.print("\n=== Run Analysis ===")
        console.print(f"Success: {analysis.get('success')}")
        console.print(f"Alphas: {analysis.get('alphas')}")
        console.print(f"Failures: {analysis.get('failures')}")
        for obs in analysis.get("observations", []):
            console.print(f"  - {obs}")
    else:
        from .config import build_config

        result = run_verification(build_config({"rif": "zw"}))
        console.print(f"Success: {result['success']}")
        console.print(f"Flags: {result['flags']}")
        console.print("Report saved to: output/report.json")
