"""CSV and JSON writers. Every file carries the config hash and tool version."""

from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd
from pydantic import BaseModel

from . import torus
from .clark import ClarkMeasureQuad
from .modelspace import TruncatedOperator
from .rif import LevelSetBranches, Rif
from .schemas import (
    ExcludedNode,
    LevelSetMetadata,
    MeasureExport,
    MeasureNode,
    OperatorExport,
    to_pair,
)
from .spectral.scan import SpectrumScan


def write_csv(frame: pd.DataFrame, path: Path, stamp: Dict[str, str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# config_hash={stamp['config_hash']}; version={stamp['version']}\n")
        frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_json(model: BaseModel, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(by_alias=True, indent=2))
    return path


# ============================================================================
# Frames
# ============================================================================

def levelset_frame(branches: LevelSetBranches) -> pd.DataFrame:
    z1, z2, branch = branches.points()
    ang = torus.angles(z1, z2)
    alpha = complex(branches.alpha)
    return pd.DataFrame(
        {
            "theta1": ang[:, 0],
            "theta2": ang[:, 1],
            "branch": branch,
            "alpha_re": alpha.real,
            "alpha_im": alpha.imag,
        }
    )


def measure_frame(mu: ClarkMeasureQuad) -> pd.DataFrame:
    z1, z2, mass = mu.support()
    ang = torus.angles(z1, z2)
    branch = np.nonzero(mu.node_mass > 0)[0]
    return pd.DataFrame({"theta1": ang[:, 0], "theta2": ang[:, 1], "mass": mass, "branch": branch})


def scan_frame(scan: SpectrumScan) -> pd.DataFrame:
    t1, t2 = np.meshgrid(scan.centers, scan.centers, indexing="ij")
    return pd.DataFrame(
        {"theta1": t1.ravel(), "theta2": t2.ravel(), "inSpectrum": scan.mask.ravel().astype(int)}
    )


def overlay_frame(mu: ClarkMeasureQuad) -> pd.DataFrame:
    """C_alpha nodes for plotting against a scan mask."""
    z1, z2, _ = mu.support()
    ang = torus.angles(z1, z2)
    return pd.DataFrame({"theta1": ang[:, 0], "theta2": ang[:, 1]})


# ============================================================================
# Documents
# ============================================================================

def levelset_metadata(rif: Rif, branches: LevelSetBranches, stamp: Dict[str, str]) -> LevelSetMetadata:
    return LevelSetMetadata(
        alpha=to_pair(branches.alpha),
        nodes=branches.n_nodes,
        branches=branches.n_branches,
        continuity_residual=branches.continuity_residual,
        crossings=branches.crossings,
        singular_points=[tuple(row) for row in rif.singular.angles().tolist()],
        **stamp,
    )


def measure_export(mu: ClarkMeasureQuad, stamp: Dict[str, str]) -> MeasureExport:
    z1, z2, mass = mu.support()
    ang = torus.angles(z1, z2)
    branch = np.nonzero(mu.node_mass > 0)[0]
    nodes = [
        MeasureNode(theta1=float(a), theta2=float(b), mass=float(m), branch=int(j))
        for (a, b), m, j in zip(ang, mass, branch)
    ]
    excluded: List[ExcludedNode] = []
    for ex in mu.excluded:
        theta1 = float(torus.wrap(np.angle(mu.branches.nodes[ex.node])))
        zeta2 = mu.branches.values[ex.branch, ex.node]
        theta2 = float(torus.wrap(np.angle(zeta2))) if np.isfinite(zeta2) else float("nan")
        excluded.append(ExcludedNode(theta1=theta1, theta2=theta2, branch=ex.branch, reason=ex.reason))
    return MeasureExport(
        alpha=to_pair(mu.alpha),
        nodes=nodes,
        excluded=excluded,
        mass_deficit_estimate=mu.mass_deficit_estimate,
        total_mass=mu.total_mass(),
        **stamp,
    )


def operator_export(op: TruncatedOperator, basis: str, stamp: Dict[str, str]) -> OperatorExport:
    return OperatorExport(
        basis=basis,
        dim=op.dim,
        matrix=[to_pair(z) for z in op.matrix.ravel()],
        residuals=op.residuals,
        axis=op.axis,
        alpha=to_pair(op.alpha) if op.alpha is not None else None,
        **stamp,
    )
