"""Command-line front end.

    kplaws laws --k K
    kplaws verify --k-max K [--descriptor FILE]
    kplaws simulate --config PATH [--seed S] [--out-dir DIR]
    kplaws report RUN.csv [RUN.csv ...]

Exit codes: 0 all checks pass, 1 verification failure, 2 usage or config
error, 3 the run hit q ~ 0.  Output files go to ``--out-dir``, else
``$KPLAWS_OUTPUT_DIR``, else the current directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import lawgen, momentcheck, sim

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_QZERO = 0, 1, 2, 3
OUTPUT_ENV = "KPLAWS_OUTPUT_DIR"


class UsageError(Exception):
    pass


@dataclass
class SimConfig:
    """Simulation settings, read from a JSON file.

    ``modes`` is either a count N (xi2_j = j^2, unit weights) or an explicit
    list of ``[xi2, weight]`` pairs.  ``invariants`` lists the orders k to
    track; it defaults to 2..k_max.  ``sweep`` optionally requests a
    convergence study: ``{"dt0": 0.005, "halvings": 3, "precision": "extended"}``.
    """

    modes: int | list = 8
    a: float = 1.0
    b: float = 1.0
    seed: int = 0
    k_max: int = 5
    dt: float = 1e-3
    horizon: float = 1.0
    invariants: list[int] | None = None
    smoothness: int = 6
    precision: str = "double"
    sweep: dict | None = None
    name: str = "run"
    extra: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> SimConfig:
        known = {f.name for f in fields(cls)} - {"extra"}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.k_max < 2:
            raise UsageError("k_max must be >= 2")
        if not self.dt > 0 or not self.horizon > 0:
            raise UsageError("dt and horizon must be positive")
        if self.a == 0:
            raise UsageError("a must be nonzero")
        if self.precision not in sim.PRECISIONS:
            raise UsageError(f"precision must be one of {sorted(sim.PRECISIONS)}")
        if any(k < 2 for k in self.orders()):
            raise UsageError("invariant orders must be >= 2")
        if self.sweep is not None:
            if not self.sweep.get("dt0", self.dt) > 0 or int(self.sweep.get("halvings", 3)) < 1:
                raise UsageError("sweep needs dt0 > 0 and halvings >= 1")

    def orders(self) -> list[int]:
        return sorted(set(self.invariants)) if self.invariants else list(range(2, self.k_max + 1))

    def system(self) -> sim.ModeSystem:
        try:
            if isinstance(self.modes, int):
                return sim.ModeSystem.default(self.modes, self.a, self.b)
            xi2, mu = zip(*self.modes)
            return sim.ModeSystem(np.array(xi2), np.array(mu), self.a, self.b)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad mode list: {exc}") from None

    def run_key(self) -> str:
        d = asdict(self)
        d.pop("extra")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return f"{self.name}-{hashlib.sha256(blob.encode()).hexdigest()[:12]}"


def load_config(path: str | Path, **overrides) -> SimConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SimConfig.from_dict(data)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def _output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or ".")


# -- commands ------------------------------------------------------------------


def cmd_laws(k: int, out=None) -> int:
    out = out or sys.stdout
    if k < 2:
        raise UsageError("--k must be >= 2")
    inv = lawgen.gen_invariant(k)
    print(f"I_{k} = {lawgen.render_law(inv)}", file=out)
    print(f"principal part: {lawgen.render_law(inv.principal())}", file=out)
    payload = {"invariant": inv.to_dict()}
    if k >= 3:
        payload["lawset"] = lawgen.gen_coeffs(k).to_dict()
    print(json.dumps(payload, indent=1), file=out)
    return EXIT_OK


def cmd_verify(k_max: int, descriptors: list[str] = (), out=None) -> int:
    out = out or sys.stdout
    if k_max < 2:
        raise UsageError("--k-max must be >= 2")
    results: list[tuple[str, bool]] = []
    for k in range(2, k_max + 1):
        cert = momentcheck.certify(lawgen.gen_invariant(k))
        results.append((f"conservation of I_{k} ({cert['term_count_before_cancellation']} raw terms)", cert["verified"]))
    results += lawgen.self_checks(k_max)
    for path in descriptors:
        try:
            inv = lawgen.load_descriptor(Path(path).read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read descriptor {path}: {exc}") from None
        results.append((f"conservation of {path}", momentcheck.verify_invariant(inv)))
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=out)
    failed = sum(not ok for _, ok in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=out)
    return EXIT_OK if not failed else EXIT_FAIL


def simulate(cfg: SimConfig) -> tuple[sim.DriftReport, dict]:
    system = cfg.system()
    initial = sim.initial_data(system, seed=cfg.seed, smoothness=cfg.smoothness)
    invariants = {f"I_{k}": lawgen.gen_invariant(k) for k in cfg.orders()}
    report = sim.run(system, initial, cfg.horizon, cfg.dt, invariants, cfg.precision)
    summary = {
        "run_key": cfg.run_key(),
        "valid": report.valid,
        "error": report.error,
        "method": report.method,
        "dt": report.dt,
        "steps": report.steps,
        "horizon": cfg.horizon,
        "precision": cfg.precision,
        "drifts": report.drifts,
        "observed_convergence_order": None,
    }
    if cfg.sweep is not None and report.valid:
        study = sim.convergence_study(
            system,
            initial,
            cfg.horizon,
            float(cfg.sweep.get("dt0", cfg.dt)),
            invariants,
            halvings=int(cfg.sweep.get("halvings", 3)),
            precision=cfg.sweep.get("precision", "extended"),
        )
        summary["observed_convergence_order"] = {name: o[-1] for name, o in study["orders"].items()}
        summary["sweep"] = {"dts": study["dts"], "drifts": study["drifts"], "orders": study["orders"]}
    return report, summary


def csv_text(report: sim.DriftReport) -> str:
    names = list(report.values)
    lines = [",".join(["t", "q"] + names)]
    for n in range(len(report.times)):
        row = [report.times[n], report.q[n]] + [report.values[name][n] for name in names]
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def cmd_simulate(config: str, seed: int | None = None, out_dir: str | None = None, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(config, seed=seed)
    report, summary = simulate(cfg)
    directory = _output_dir(out_dir)
    csv_path = directory / f"{cfg.name}.csv"
    json_path = directory / f"{cfg.name}.summary.json"
    atomic_write(csv_path, csv_text(report))
    atomic_write(json_path, json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(f"wrote {csv_path} and {json_path}", file=out)
    for name, d in summary["drifts"].items():
        print(f"{name}: max relative drift {d:.3e}", file=out)
    if summary["observed_convergence_order"]:
        for name, o in summary["observed_convergence_order"].items():
            print(f"{name}: observed order {o:.3f}", file=out)
    if not report.valid:
        print(f"run aborted: {report.error}", file=out)
        return EXIT_QZERO
    return EXIT_OK


def read_run_csv(path: str | Path) -> dict:
    """Parse a CSV written by ``simulate`` into {"t": array, "q": array, "I_k": array, ...}."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if not rows or rows[0][:2] != ["t", "q"] or len(rows) < 3:
        raise UsageError(f"{path}: not a simulation CSV (need header t,q,I_k... and >= 2 rows)")
    header = rows[0]
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: malformed number: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise UsageError(f"{path}: ragged rows")
    return {name: data[:, n] for n, name in enumerate(header)}


def aggregate(paths: list[str]) -> dict:
    """Drifts per run and log2 orders for every pair of runs whose dt differ by 2x.

    Runs are keyed and ordered by path, so the result does not depend on the
    order in which the paths are given.
    """
    if not paths:
        raise UsageError("report needs at least one CSV path")
    runs = {}
    for p in sorted(set(map(str, paths))):
        cols = read_run_csv(p)
        runs[p] = {
            "dt": float(cols["t"][1] - cols["t"][0]),
            "horizon": float(cols["t"][-1] - cols["t"][0]),
            "drifts": {name: sim.relative_drift(x) for name, x in cols.items() if name.startswith("I_")},
        }
    orders = []
    for coarse in runs:
        for fine in runs:
            ratio = runs[coarse]["dt"] / runs[fine]["dt"]
            if not math.isclose(ratio, 2.0, rel_tol=1e-6):
                continue
            dc, df = runs[coarse]["drifts"], runs[fine]["drifts"]
            for name in sorted(set(dc) & set(df)):
                orders.append({"coarse": coarse, "fine": fine, "invariant": name, "order": sim.observed_orders([dc[name], df[name]])[0]})
    return {"runs": runs, "orders": orders}


def cmd_report(paths: list[str], out=None) -> int:
    out = out or sys.stdout
    agg = aggregate(paths)
    for path, r in agg["runs"].items():
        print(f"{path}: dt={r['dt']:.6g} horizon={r['horizon']:.6g}", file=out)
        for name, d in r["drifts"].items():
            print(f"  {name}: max relative drift {d:.6e}", file=out)
    for o in agg["orders"]:
        print(f"order {o['invariant']} ({o['coarse']} -> {o['fine']}): {o['order']:.4f}", file=out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kplaws", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("laws", help="print I_k and its coefficient set")
    s.add_argument("--k", type=int, required=True)
    s = sub.add_parser("verify", help="certify conservation symbolically for k = 2..K")
    s.add_argument("--k-max", type=int, required=True)
    s.add_argument("--descriptor", action="append", default=[], help="also verify a serialized descriptor")
    s = sub.add_parser("simulate", help="integrate the mode system and record drift")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir")
    s = sub.add_parser("report", help="aggregate drift and convergence over CSV runs")
    s.add_argument("paths", nargs="*")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "laws":
            return cmd_laws(args.k)
        if args.command == "verify":
            return cmd_verify(args.k_max, args.descriptor)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.seed, args.out_dir)
        return cmd_report(args.paths)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except sim.QNearZero as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QZERO


if __name__ == "__main__":
    sys.exit(main())
