"""On-disk formats: trajectory CSV + JSON sidecar, PSD and autocorrelation CSV,
exclusion-curve CSV, and bound-report JSON.

Every file written here embeds the originating config digest and the tool
version, either as leading ``#`` comment lines (CSV) or as top-level keys
(JSON).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import PsdEstimate, SampledSeries
from .csl import ExclusionCurve
from .errors import ConfigError
from .dynamics import Trajectory


def _comment_header(digest: str) -> str:
    return f"# tool=csltrap {__version__}\n# digest={digest}\n"


def save_trajectory(traj: Trajectory, path: str | Path, config_dict: dict | None = None) -> Path:
    """Write ``t_s,x1_m[,x2_m]`` CSV plus a ``.meta.json`` sidecar."""
    path = Path(path)
    columns = ",".join(f"x{i + 1}_m" for i in range(traj.n_modes))
    with path.open("w", encoding="utf-8") as handle:
        handle.write(_comment_header(traj.config_digest))
        handle.write(f"t_s,{columns}\n")
        np.savetxt(
            handle,
            np.column_stack([traj.times] + [traj.samples[i] for i in range(traj.n_modes)]),
            delimiter=",",
            fmt="%.17g",
        )
    sidecar = sidecar_path(path)
    meta = {
        "tool": "csltrap",
        "version": __version__,
        "digest": traj.config_digest,
        "seed": traj.seed,
        "dt_s": traj.dt,
        "burn_in_s": traj.burn_in_s,
        "mode_labels": list(traj.mode_labels),
        "config": config_dict,
    }
    sidecar.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def load_trajectory(path: str | Path) -> tuple[Trajectory, dict]:
    """Read a trajectory CSV and its sidecar; returns (trajectory, metadata)."""
    path = Path(path)
    sidecar = sidecar_path(path)
    if not sidecar.is_file():
        raise ConfigError(f"missing trajectory sidecar {sidecar}")
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=_header_rows(path))
    data = np.atleast_2d(data)
    traj = Trajectory(
        dt=float(meta["dt_s"]),
        samples=data[:, 1:].T.copy(),
        seed=int(meta["seed"]),
        config_digest=str(meta["digest"]),
        burn_in_s=float(meta.get("burn_in_s", 0.0)),
        mode_labels=tuple(meta.get("mode_labels") or ()),
    )
    return traj, meta


def _header_rows(path: Path) -> int:
    """Number of leading rows (comments + column header) to skip."""
    rows = 0
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            rows += 1
            if not line.startswith("#"):
                return rows
    return rows


def save_psd(psd: PsdEstimate, path: str | Path, digest: str = "") -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(_comment_header(digest))
        handle.write("f_hz,psd_m2_per_hz\n")
        np.savetxt(
            handle,
            np.column_stack([psd.frequencies, psd.values]),
            delimiter=",",
            fmt="%.10g",
        )
    return path


def save_autocorrelation(series: SampledSeries, path: str | Path, digest: str = "") -> Path:
    path = Path(path)
    lags = series.dt * np.arange(series.values.size)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(_comment_header(digest))
        handle.write("lag_s,r\n")
        np.savetxt(handle, np.column_stack([lags, series.values]), delimiter=",", fmt="%.10g")
    return path


def save_exclusion_curve(curve: ExclusionCurve, path: str | Path, digest: str = "") -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(_comment_header(digest))
        handle.write(f"# confidence_level={curve.confidence_level}\n")
        handle.write("r_c_m,lambda_upper_per_s,source\n")
        for r_c, lam in curve.points:
            handle.write(f"{r_c:.10g},{lam:.10g},{curve.source}\n")
    return path


def save_json_report(payload: dict, path: str | Path) -> Path:
    """Write a JSON report with fixed (insertion) key order."""
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path
