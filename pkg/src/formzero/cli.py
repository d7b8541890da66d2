"""Command-line entry point.

Usage::

    formzero analyze   paper-4agent.json
    formzero dcgain    -i 1 -j 2 paper-4agent.json
    formzero locus     -i 1 paper-4agent.json
    formzero polygon   paper-4agent.json --out out/polygon.json
    formzero freqresp  -i 1 -j 2 paper-4agent.json --out out/fr.csv
    formzero simulate  -i 1 -j 2 --w 1,0 --nonlinear paper-4agent.json
    formzero montecarlo -i 1 -j 2 --samples 10000 --seed 42 --box 3 paper-4bar.json

Bundled fixtures resolve by file name when no such file exists locally.
When ``--out`` is given, plotting commands also write ``<out>.png``.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

from . import io as fio
from . import reports
from .dynamics import frequency_response, lti_response, nonlinear_simulate, slowest_rate
from .errors import FormzeroError
from .framework import build_framework, modal_decomposition
from .genericity import bisect_zero, genericity_experiment
from .geometry import transmission_polygon

COMMANDS = ("analyze", "dcgain", "locus", "polygon", "freqresp", "simulate", "montecarlo")
DEFAULT_FORMAT = {"freqresp": "csv", "simulate": "csv"}
FIGURE_COMMANDS = {"polygon", "freqresp", "simulate", "montecarlo"}


@dataclass
class RunConfig:
    command: str
    formation: str
    i: int | None = None
    j: int | None = None
    w: tuple[float, float] = (1.0, 0.0)
    tfinal: float | None = None
    dt: float | None = None
    nonlinear: bool = False
    wmin: float = 1e-6
    wmax: float = 1e2
    points: int = 200
    samples: int = 10000
    seed: int = 0
    box: float = 3.0
    clip_box: float | None = None
    format: str | None = None
    out: str | None = None
    workers: int = 1

    @property
    def fmt(self) -> str:
        return self.format or DEFAULT_FORMAT.get(self.command, "json")


class ConfigError(FormzeroError, ValueError):
    pass


def _vector(text: str) -> tuple[float, float]:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'wx,wy', got {text!r}") from None
    if len(parts) != 2 or not all(math.isfinite(v) for v in parts):
        raise argparse.ArgumentTypeError(f"expected two finite numbers, got {text!r}")
    return parts[0], parts[1]


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formzero", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("formation", help="formation JSON file (or bundled fixture name)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output path (default: standard output)")

    def pair(p, need_j=True):
        p.add_argument("-i", type=int, help="actuated node id")
        if need_j:
            p.add_argument("-j", type=int, help="sensed node id")

    sub.add_parser("analyze", parents=[common], help="rigidity class and modal summary")
    p = sub.add_parser("dcgain", parents=[common], help="DC-gain block and zero test (all pairs by default)")
    pair(p)
    p = sub.add_parser("locus", parents=[common], help="zero locus of an actuator")
    pair(p, need_j=False)
    p = sub.add_parser("polygon", parents=[common], help="global transmission polygon")
    p.add_argument("--clip-box", type=_positive(float), dest="clip_box")
    p = sub.add_parser("freqresp", parents=[common], help="singular values of s*G_ji(s) on the imaginary axis")
    pair(p)
    p.add_argument("--wmin", type=_positive(float), default=1e-6)
    p.add_argument("--wmax", type=_positive(float), default=1e2)
    p.add_argument("--points", type=_positive(int), default=200)
    p = sub.add_parser("simulate", parents=[common], help="time response to a constant disturbance")
    pair(p)
    p.add_argument("--w", type=_vector, default=(1.0, 0.0))
    p.add_argument("--tfinal", type=_positive(float))
    p.add_argument("--dt", type=_positive(float))
    p.add_argument("--nonlinear", action="store_true")
    p = sub.add_parser("montecarlo", parents=[common], help="genericity experiment on a flexible graph")
    pair(p)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--box", type=_positive(float), default=3.0)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    known = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    return RunConfig(**known)


def _require(cfg: RunConfig, ids, *names):
    for name in names:
        value = getattr(cfg, name)
        if value is None:
            raise ConfigError(f"{cfg.command} requires -{name}")
        if value not in ids:
            raise ConfigError(f"-{name} {value} is not a node id of the formation")


def _check_optional(cfg: RunConfig, ids, *names):
    for name in names:
        value = getattr(cfg, name)
        if value is not None and value not in ids:
            raise ConfigError(f"-{name} {value} is not a node id of the formation")


def _figure_path(out: str | None) -> Path | None:
    return None if out is None else Path(out).with_suffix(".png")


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one command; returns the process exit status."""
    from . import plotting

    stdout = stdout or sys.stdout
    spec = fio.parse_formation_file(cfg.formation)
    ids = set(spec.node_ids)
    cmd = cfg.command
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    if cmd in ("freqresp", "montecarlo"):
        _require(cfg, ids, "i", "j")
    elif cmd in ("locus", "simulate"):
        _require(cfg, ids, "i")
    _check_optional(cfg, ids, "i", "j")
    if cmd == "freqresp" and cfg.wmax < cfg.wmin:
        raise ConfigError("--wmax must not be below --wmin")
    if cmd == "montecarlo" and cfg.samples < 0:
        raise ConfigError("--samples must be non-negative")

    figure = _figure_path(cfg.out) if cmd in FIGURE_COMMANDS else None

    if cmd == "montecarlo":
        rep = genericity_experiment(spec, cfg.i, cfg.j, cfg.samples, cfg.seed, cfg.box, workers=cfg.workers)
        rep = replace(rep, bisection=bisect_zero(spec, cfg.i, cfg.j, cfg.seed, cfg.box))
        report = reports.montecarlo_report(rep)
        if figure:
            plotting.plot_determinant_histogram(rep, figure)
        return _emit(report, cfg, stdout)

    fw = build_framework(spec)
    md = modal_decomposition(fw)

    if cmd == "analyze":
        report = reports.analyze_report(md)
    elif cmd == "dcgain":
        actuators = [cfg.i] if cfg.i is not None else list(fw.ids)
        sensors = [cfg.j] if cfg.j is not None else list(fw.ids)
        report = reports.dcgain_report(md, [(a, b) for a in actuators for b in sensors])
    elif cmd == "locus":
        report = reports.locus_report(md, cfg.i)
    elif cmd == "polygon":
        poly = transmission_polygon(fw, cfg.clip_box)
        report = reports.polygon_report(md, poly)
        if figure:
            plotting.plot_polygon(fw, poly, figure)
    elif cmd == "freqresp":
        table = frequency_response(md, cfg.i, cfg.j, cfg.wmin, cfg.wmax, cfg.points)
        report = reports.freqresp_report(table, spec.name)
        if figure:
            plotting.plot_frequency_response(table, figure)
    else:
        j = cfg.j if cfg.j is not None else cfg.i
        slow = slowest_rate(md)
        tfinal = cfg.tfinal if cfg.tfinal is not None else (200.0 / slow if slow > 0 else 10.0)
        if cfg.nonlinear:
            sim = nonlinear_simulate(fw, cfg.i, cfg.w, tfinal, h=cfg.dt, j=j)
        else:
            samples = 1001 if cfg.dt is None else int(round(tfinal / cfg.dt)) + 1
            sim = lti_response(md, cfg.i, j, cfg.w, tfinal, samples=max(samples, 2))
        report = reports.simulation_report(sim, spec.name)
        if figure:
            plotting.plot_simulation(sim, figure)
    return _emit(report, cfg, stdout)


def _emit(report: reports.Report, cfg: RunConfig, stdout) -> int:
    text = report.render(cfg.fmt)
    if cfg.out:
        fio.write_atomic(cfg.out, text)
    else:
        stdout.write(text)
    return 0


def error_record(exc: BaseException) -> dict:
    record = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, FormzeroError):
        record["details"] = exc.details()
    return record


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = config_from_args(ns)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return run(cfg)
    except (FormzeroError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(fio.dumps_json(error_record(exc)))
        return 1


if __name__ == "__main__":
    sys.exit(main())
