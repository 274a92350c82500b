"""Deterministic CSV/JSON serialization.

Every writer produces byte-identical output for equal inputs: floats are
rendered with ``%.17g`` (lossless for IEEE doubles), JSON keys are sorted,
newlines are always ``\\n``.  Readers invert the writers exactly, so a
write/read round trip reproduces trajectories bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import ModelSpec, Trajectory
from .meanfield import MeanFieldPath, conserved_quantities
from .simulate import Ensemble

__all__ = [
    "fmt",
    "write_json",
    "write_trajectory",
    "read_trajectory",
    "write_ensemble",
    "read_ensemble",
    "write_meanfield",
    "write_covariances",
    "write_gaussian_paths",
    "write_validation_reports",
]

FORMAT_VERSION = 1


def fmt(x: float) -> str:
    """Shortest-guaranteed-lossless rendering of a double."""
    return "%.17g" % float(x)


def _open_w(path: Path):
    return open(path, "w", encoding="utf-8", newline="\n")


def write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _open_w(path) as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _spec_dict(spec: ModelSpec) -> dict:
    return {
        "n": spec.n,
        "lambda": spec.lam,
        "total": spec.total,
        "initial": list(spec.initial),
    }


def _spec_from_dict(d: dict) -> ModelSpec:
    return ModelSpec(n=d["n"], lam=d["lambda"], total=d["total"],
                     initial=tuple(d["initial"]))


def _count_header(n: int, prefix: str = "x") -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(n)]


def _write_samples(f, traj: Trajectory, replica: int | None) -> None:
    lead = [] if replica is None else [str(replica)]
    for t, row in zip(traj.grid, traj.samples):
        f.write(",".join(lead + [fmt(t)] + [str(int(c)) for c in row]) + "\n")


def _write_events(f, traj: Trajectory, replica: int | None) -> None:
    lead = [] if replica is None else [str(replica)]
    for t, r in zip(traj.event_times, traj.event_reactions):
        f.write(",".join(lead + [fmt(t), str(int(r))]) + "\n")


def _traj_manifest(traj: Trajectory) -> dict:
    return {
        "seed": traj.seed,
        "absorbed": traj.absorbed,
        "final_time": traj.final_time,
        "final_counts": list(traj.final_counts),
        "n_events": traj.n_events if traj.has_event_log else None,
        "has_event_log": traj.has_event_log,
    }


def write_trajectory(traj: Trajectory, out_dir) -> Path:
    """samples.csv + manifest.json (+ events.csv when the log is retained)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with _open_w(out / "samples.csv") as f:
        f.write(",".join(["time"] + _count_header(traj.spec.n)) + "\n")
        _write_samples(f, traj, None)
    if traj.has_event_log:
        with _open_w(out / "events.csv") as f:
            f.write("time,reaction\n")
            _write_events(f, traj, None)
    write_json(
        {
            "format_version": FORMAT_VERSION,
            "kind": "trajectory",
            "model": _spec_dict(traj.spec),
            "trajectory": _traj_manifest(traj),
        },
        out / "manifest.json",
    )
    return out


def _parse_samples(lines, n: int, with_replica: bool):
    grids: dict[int, list[float]] = {}
    samples: dict[int, list[list[int]]] = {}
    for line in lines:
        parts = line.rstrip("\n").split(",")
        if with_replica:
            rep, parts = int(parts[0]), parts[1:]
        else:
            rep = 0
        grids.setdefault(rep, []).append(float(parts[0]))
        samples.setdefault(rep, []).append([int(v) for v in parts[1:1 + n]])
    return grids, samples


def _build_trajectory(spec: ModelSpec, meta: dict, grid, samples,
                      events) -> Trajectory:
    if meta["has_event_log"]:
        times = np.array([e[0] for e in events], dtype=float)
        reacts = np.array([e[1] for e in events], dtype=np.int16)
    else:
        times = reacts = None
    return Trajectory(
        spec=spec,
        seed=meta["seed"],
        grid=np.array(grid, dtype=float),
        samples=np.array(samples, dtype=np.int64).reshape(len(grid), spec.n),
        event_times=times,
        event_reactions=reacts,
        absorbed=meta["absorbed"],
        final_counts=tuple(meta["final_counts"]),
        final_time=meta["final_time"],
    )


def read_trajectory(out_dir) -> Trajectory:
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    spec = _spec_from_dict(manifest["model"])
    with open(out / "samples.csv", encoding="utf-8") as f:
        next(f)
        grids, samples = _parse_samples(f, spec.n, with_replica=False)
    events = []
    if manifest["trajectory"]["has_event_log"]:
        with open(out / "events.csv", encoding="utf-8") as f:
            next(f)
            for line in f:
                t, r = line.rstrip("\n").split(",")
                events.append((float(t), int(r)))
    return _build_trajectory(spec, manifest["trajectory"], grids[0],
                             samples[0], events)


def write_ensemble(ens: Ensemble, out_dir) -> Path:
    """samples.csv (replica-major) + manifest.json (+ events.csv)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = ens.spec.n
    with _open_w(out / "samples.csv") as f:
        f.write(",".join(["replica", "time"] + _count_header(n)) + "\n")
        for i, traj in enumerate(ens.trajectories):
            _write_samples(f, traj, i)
    has_logs = all(t.has_event_log for t in ens.trajectories)
    if has_logs:
        with _open_w(out / "events.csv") as f:
            f.write("replica,time,reaction\n")
            for i, traj in enumerate(ens.trajectories):
                _write_events(f, traj, i)
    absorbed = [t.absorbed for t in ens.trajectories]
    write_json(
        {
            "format_version": FORMAT_VERSION,
            "kind": "ensemble",
            "model": _spec_dict(ens.spec),
            "base_seed": ens.base_seed,
            "replicas": ens.replicas,
            "absorbed_fraction":
                sum(a is not None for a in absorbed) / ens.replicas,
            "trajectories": [_traj_manifest(t) for t in ens.trajectories],
        },
        out / "manifest.json",
    )
    return out


def read_ensemble(out_dir) -> Ensemble:
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    spec = _spec_from_dict(manifest["model"])
    with open(out / "samples.csv", encoding="utf-8") as f:
        next(f)
        grids, samples = _parse_samples(f, spec.n, with_replica=True)
    events: dict[int, list] = {i: [] for i in range(manifest["replicas"])}
    if (out / "events.csv").exists():
        with open(out / "events.csv", encoding="utf-8") as f:
            next(f)
            for line in f:
                rep, t, r = line.rstrip("\n").split(",")
                events[int(rep)].append((float(t), int(r)))
    trajectories = tuple(
        _build_trajectory(spec, meta, grids[i], samples[i], events[i])
        for i, meta in enumerate(manifest["trajectories"])
    )
    return Ensemble(spec=spec, trajectories=trajectories,
                    grid=trajectories[0].grid,
                    base_seed=manifest["base_seed"])


def write_meanfield(path: MeanFieldPath, out_path) -> Path:
    """time,u1..un,sum,product — one row per reported grid label."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = path.n
    with _open_w(out) as f:
        f.write(",".join(["time"] + _count_header(n, "u")
                         + ["sum", "product"]) + "\n")
        for st in path.states:
            s, p = conserved_quantities(st.u)
            f.write(",".join([fmt(st.time)] + [fmt(v) for v in st.u]
                             + [fmt(s), fmt(p)]) + "\n")
    return out


def write_covariances(states, out_path) -> Path:
    """time,s11,s12,...,snn — covariance entries in row-major order."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    states = list(states)
    n = states[0].sigma.shape[0]
    header = ["time"] + [f"s{j + 1}{k + 1}" for j in range(n) for k in range(n)]
    with _open_w(out) as f:
        f.write(",".join(header) + "\n")
        for st in states:
            f.write(",".join([fmt(st.time)]
                             + [fmt(v) for v in st.sigma.ravel()]) + "\n")
    return out


def write_gaussian_paths(paths, out_path) -> Path:
    """replica,time,v1..vn for a collection of fluctuation paths."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    paths = list(paths)
    n = paths[0].values.shape[1]
    with _open_w(out) as f:
        f.write(",".join(["replica", "time"] + _count_header(n, "v")) + "\n")
        for i, p in enumerate(paths):
            for t, row in zip(p.grid, p.values):
                f.write(",".join([str(i), fmt(t)]
                                 + [fmt(v) for v in row]) + "\n")
    return out


def write_validation_reports(reports: dict, out_dir) -> Path:
    """One JSON per check plus summary.json with the pass booleans."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name, report in reports.items():
        write_json(report.to_dict(), out / f"{name}.json")
        summary[name] = bool(report.passed)
    summary["all"] = all(summary.values())
    write_json(summary, out / "summary.json")
    return out
