"""Command-line front end: ``starris <subcommand> ...``.

Every subcommand writes a CSV whose first line names the columns (with units
in brackets where they apply). Exit codes: 0 success, 2 configuration or
usage error, 3 I/O failure, 4 numerical-domain error.
"""
import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .access import Scheme, UplinkScenario
from .analysis import FloorQuery, error_floor, floor_for_ms
from .channels import (
    LinkSet,
    RicianLink,
    cascaded_moments,
    cascaded_stats,
    kl_gaussian_approx,
    product_rician_pdf,
)
from .config import (
    DEFAULT_BS_DISTANCE,
    DEFAULT_K_DB,
    DEFAULT_NOISE_DBM,
    DEFAULT_PATHLOSS_EXPONENT,
    DEFAULT_RATE,
    DEFAULT_USER_DISTANCE,
    ETA0,
    db_to_linear,
    dbm_to_watts,
)
from .em import ElementImpedance, coefficients_from_impedance, lossless_phase_gap, passivity_excess
from .errors import ConfigError, DomainError, ResolutionError, UndefinedPhaseError
from .fieldmap import ArrayGeometry, GridPlane, UplinkLayout, compute_power_map, cophased_uplink
from .sim import MASK64, SWEEP_COLUMNS, SweepSpec, run_sweep, sweep_csv

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DOMAIN = 4
SEED_ENV = "STARRIS_SEED"

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


# --------------------------------------------------------------------------
# run configuration


LINK_NAMES = ("h", "g_r", "g_t")
SECTION_KEYS = {
    "surface": {"m", "beta_t", "beta_r", "mode_switching"},
    "links": set(LINK_NAMES),
    "access": {"scheme", "p_dBm", "noise_dBm", "alpha0", "rate_r", "rate_t", "sic_mode"},
    "sweep": {"variable", "grid", "trials", "seed", "workers"},
    "output": {"path", "format"},
}
LINK_KEYS = {"K_dB", "K_linear", "omega", "distance", "exponent"}
DEFAULT_DISTANCES = {"h": DEFAULT_BS_DISTANCE, "g_r": DEFAULT_USER_DISTANCE, "g_t": DEFAULT_USER_DISTANCE}


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        seed = int(raw, 0)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} is not an integer: {raw!r}", key=SEED_ENV) from None
    if not 0 <= seed <= MASK64:
        raise ConfigError(f"{SEED_ENV} must be a 64-bit unsigned integer", key=SEED_ENV)
    return seed


def _number(table, key, path, default=None, kind=float):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing required key {path}.{key}", key=f"{path}.{key}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number, got {value!r}", key=f"{path}.{key}")
    if kind is int and float(value) != int(value):
        raise ConfigError(f"{path}.{key} must be an integer", key=f"{path}.{key}")
    return kind(value)


def _check_keys(table, allowed, path):
    if not isinstance(table, dict):
        raise ConfigError(f"{path} must be a table", key=path)
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {path}.{unknown[0]}", key=f"{path}.{unknown[0]}")


def parse_link(table, name):
    path = f"links.{name}"
    _check_keys(table, LINK_KEYS, path)
    if ("K_dB" in table) == ("K_linear" in table):
        raise ConfigError(f"{path} needs exactly one of K_dB or K_linear", key=f"{path}.K_dB")
    k = db_to_linear(_number(table, "K_dB", path)) if "K_dB" in table else _number(table, "K_linear", path)
    if ("omega" in table) == ("distance" in table):
        raise ConfigError(f"{path} needs exactly one of omega or distance", key=f"{path}.omega")
    try:
        if "omega" in table:
            if "exponent" in table:
                raise ConfigError(f"{path}.exponent only applies with distance", key=f"{path}.exponent")
            return RicianLink(float(k), _number(table, "omega", path))
        exponent = _number(table, "exponent", path, DEFAULT_PATHLOSS_EXPONENT)
        return RicianLink.from_distance(float(k), _number(table, "distance", path), exponent)
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}", key=path) from None


@dataclass(frozen=True)
class RunConfig:
    scenario: UplinkScenario
    sweep: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def parse_config(doc):
    """Validate a config mapping and build the scenario; raises ConfigError with the key path."""
    _check_keys(doc, set(SECTION_KEYS), "config")
    for section, allowed in SECTION_KEYS.items():
        if section in doc:
            _check_keys(doc[section], allowed, section)

    surface = doc.get("surface", {})
    m = _number(surface, "m", "surface", 64, int)
    ms = surface.get("mode_switching")
    beta_t = _number(surface, "beta_t", "surface", 0.2)
    beta_r = _number(surface, "beta_r", "surface") if "beta_r" in surface else None
    if ms is not None:
        ms = _number(surface, "mode_switching", "surface")

    links_doc = doc.get("links", {})
    links = {}
    for name in LINK_NAMES:
        table = links_doc.get(name, {"K_dB": DEFAULT_K_DB, "distance": DEFAULT_DISTANCES[name]})
        links[name] = parse_link(table, name)

    access = doc.get("access", {})
    scheme = access.get("scheme", "noma")
    if scheme not in ("noma", "oma"):
        raise ConfigError(f"access.scheme must be 'noma' or 'oma', got {scheme!r}", key="access.scheme")
    sic_mode = access.get("sic_mode", "printed")
    if sic_mode not in ("printed", "residual"):
        raise ConfigError(f"access.sic_mode must be 'printed' or 'residual'", key="access.sic_mode")
    try:
        scenario = UplinkScenario(
            m_elements=m,
            beta_t=beta_t,
            beta_r=beta_r,
            p=float(dbm_to_watts(_number(access, "p_dBm", "access", 10.0))),
            noise=float(dbm_to_watts(_number(access, "noise_dBm", "access", DEFAULT_NOISE_DBM))),
            alpha0=_number(access, "alpha0", "access", 0.1),
            rate_r=_number(access, "rate_r", "access", DEFAULT_RATE),
            rate_t=_number(access, "rate_t", "access", DEFAULT_RATE),
            scheme=Scheme(scheme),
            ms_fraction=ms,
            links=LinkSet(**links),
            sic_mode=sic_mode,
        )
    except DomainError as exc:
        raise ConfigError(f"invalid scenario: {exc}", key="surface") from None

    output = doc.get("output", {})
    fmt = output.get("format", "csv")
    if fmt != "csv":
        raise ConfigError(f"output.format must be 'csv', got {fmt!r}", key="output.format")
    return RunConfig(scenario, dict(doc.get("sweep", {})), dict(output), doc)


def load_config(path):
    path = Path(path)
    data = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(data.decode("utf-8"))
        else:
            doc = tomllib.loads(data.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", key="config") from None
    return parse_config(doc)


def sweep_spec(cfg):
    sw = cfg.sweep
    if not sw:
        raise ConfigError("missing required section [sweep]", key="sweep")
    variable = sw.get("variable", "transmit_snr_db")
    if variable not in ("transmit_snr_db", "beta_t", "m"):
        raise ConfigError(f"sweep.variable {variable!r} is not one of transmit_snr_db, beta_t, m", key="sweep.variable")
    if "grid" not in sw:
        raise ConfigError("missing required key sweep.grid", key="sweep.grid")
    grid = sw["grid"]
    if not isinstance(grid, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in grid):
        raise ConfigError("sweep.grid must be a list of numbers", key="sweep.grid")
    trials = _number(sw, "trials", "sweep", 100_000, int)
    seed = _number(sw, "seed", "sweep", default_seed(), int) if "seed" in sw else default_seed()
    try:
        return SweepSpec(cfg.scenario, variable, tuple(grid), trials, seed)
    except DomainError as exc:
        raise ConfigError(f"invalid sweep: {exc}", key="sweep.grid" if "grid" in str(exc) else "sweep") from None


# --------------------------------------------------------------------------
# output helpers


def git_version():
    """``git describe``-style version, falling back to the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def fmt(x):
    """Shortest round-trip text for a float."""
    return repr(float(x))


def emit(text, path):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_bytes(text.encode("utf-8"))


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_sidecar(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def int_list(text):
    values = float_list(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return [int(v) for v in values]


def complex_value(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a complex number like 1+2j, got {text!r}") from None


def point3(text):
    values = float_list(text)
    if len(values) == 2:
        values.append(0.0)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y[,z] in metres, got {text!r}")
    return tuple(values)


# --------------------------------------------------------------------------
# subcommands


def cmd_coeffs(args):
    imp = ElementImpedance(args.ze, args.zm, args.eta)
    c = coefficients_from_impedance(imp)
    try:
        gap = fmt(lossless_phase_gap(c))
    except UndefinedPhaseError:
        gap = ""
    header = [
        "t_re", "t_im", "r_re", "r_im", "beta_t", "phi_t [rad]", "beta_r", "phi_r [rad]",
        "passivity_excess", "phase_gap [rad]",
    ]
    t, r = complex(c.t), complex(c.r)
    row = [
        fmt(t.real), fmt(t.imag), fmt(r.real), fmt(r.imag),
        fmt(c.beta_t), fmt(c.phi_t), fmt(c.beta_r), fmt(c.phi_r),
        fmt(passivity_excess(c)), gap,
    ]
    emit(csv_text(header, [row]), args.out)
    return 0


def cmd_outage(args):
    cfg = load_config(args.config)
    spec = sweep_spec(cfg)
    workers = args.workers if args.workers is not None else int(cfg.sweep.get("workers", 1))
    out = args.out or cfg.output.get("path")
    if out is None:
        raise ConfigError("no output path: set output.path or pass --out", key="output.path")
    rows = run_sweep(spec, workers=workers)
    emit(sweep_csv(rows), out)
    if str(out) != "-":
        write_sidecar(
            sidecar_path(out),
            {"config": cfg.raw, "version": git_version(), "seed": spec.seed, "columns": list(SWEEP_COLUMNS)},
        )
    return 0


def _base_scenario(args):
    if args.config:
        return load_config(args.config).scenario
    return UplinkScenario()


def cmd_floor(args):
    base = _base_scenario(args)
    if args.m is not None:
        base = replace(base, m_elements=args.m)
    if args.alpha0 is not None:
        base = replace(base, alpha0=args.alpha0)
    stats_r, stats_t = cascaded_stats(base.links.h, base.links.g_r, base.links.g_t)
    rows = []
    for bt in args.beta_t:
        q = FloorQuery.from_scenario(base.with_beta_t(bt))
        p_r, p_t = error_floor(q, moments=args.moments)
        rows.append(["uniform", fmt(bt), fmt(q.beta_r), fmt(p_r), fmt(p_t)])
    for f in args.ms_fraction or []:
        p_r, p_t = floor_for_ms(f, base.m_elements, stats_r, stats_t, base.gamma_r, base.alpha0, base.gamma_t)
        rows.append([f"ms:{f!r}", "", "", fmt(p_r), fmt(p_t)])
    emit(csv_text(["profile", "beta_t", "beta_r", "floor_r [prob]", "floor_t [prob]"], rows), args.out)
    return 0


def _pair_links(args):
    k_h = args.k if args.k_h is None else args.k_h
    k_g = args.k if args.k_g is None else args.k_g
    om_h = args.omega if args.omega_h is None else args.omega_h
    om_g = args.omega if args.omega_g is None else args.omega_g
    return RicianLink(k_h, om_h), RicianLink(k_g, om_g)


def cmd_pdf(args):
    bs, user = _pair_links(args)
    mu, sigma = cascaded_moments(bs, user)
    x_max = args.x_max if args.x_max is not None else mu + 10.0 * sigma
    x = np.linspace(0.0, x_max, args.points)
    pdf = product_rician_pdf(x, bs, user)
    rows = [[fmt(a), fmt(b)] for a, b in zip(x, pdf)]
    emit(csv_text(["x [amplitude]", "pdf [1/amplitude]"], rows), args.out)
    return 0


def cmd_kl(args):
    bs, user = _pair_links(args)
    rows = [[m, fmt(kl_gaussian_approx(m, bs, user, method=args.method))] for m in args.m]
    emit(csv_text(["m", "kl [nats]"], rows), args.out)
    return 0


def cmd_fieldmap(args):
    geom = ArrayGeometry(args.rows, args.cols, args.wavelength, args.spacing)
    power = float(dbm_to_watts(args.p_dbm))
    layout = UplinkLayout(args.bs, args.user_r, args.user_t, power)
    coeffs = cophased_uplink(geom, layout, args.beta_t, args.beta_r)
    plane = GridPlane(tuple(args.extent), tuple(args.resolution), tuple(args.center), args.height)
    sources = [(layout.user_r, power), (layout.user_t, power)]
    grid = compute_power_map(geom, coeffs, sources, plane)
    header = ["y [m] \\ x [m]"] + [fmt(v) for v in grid.x]
    rows = [[fmt(y)] + [fmt(v) for v in row] for y, row in zip(grid.y, grid.power)]
    emit(csv_text(header, rows), args.out)
    peak = float(grid.power.max())
    write_sidecar(
        sidecar_path(args.out),
        {
            "version": git_version(),
            "extent_m": list(plane.extent),
            "resolution": list(plane.resolution),
            "center_m": list(plane.center),
            "height_m": plane.height,
            "units": "W/m^2 (isotropic point scatterers, free-space spreading)",
            "db_reference": {"value": peak, "description": "map maximum; 0 dB"},
            "excluded_cells": int(grid.excluded.sum()),
            "wavelength_m": geom.wavelength,
            "spacing_m": geom.spacing,
            "array": [geom.rows, geom.cols],
            "bs": list(layout.bs),
            "user_r": list(layout.user_r),
            "user_t": list(layout.user_t),
            "p_dBm": args.p_dbm,
        },
    )
    return 0


# --------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(prog="starris", description="STAR surface uplink toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="T/R coefficients of one impedance-sheet element")
    p.add_argument("--ze", type=complex_value, required=True, help="electric sheet impedance [ohm], e.g. 0+188.5j")
    p.add_argument("--zm", type=complex_value, required=True, help="magnetic sheet impedance [ohm], e.g. 0-753.9j")
    p.add_argument("--eta", type=float, default=ETA0, help=f"wave impedance of the medium [ohm] (default {ETA0})")
    p.add_argument("--out", default=None, help="output CSV path [file, default stdout]")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("outage", help="Monte Carlo outage sweep from a TOML/JSON config")
    p.add_argument("--config", required=True, help="run configuration [file, .toml or .json]")
    p.add_argument("--out", default=None, help="output CSV path [file, overrides output.path]; JSON sidecar written alongside")
    p.add_argument("--workers", type=int, default=None, help="worker processes [count] (results do not depend on it)")
    p.set_defaults(func=cmd_outage)

    p = sub.add_parser("floor", help="high-SNR analytical outage floors")
    p.add_argument("--beta-t", type=float_list, required=True, help="transmission amplitudes [linear, 0..1], comma-separated")
    p.add_argument("--m", type=int, default=None, help="number of elements [count] (default 64)")
    p.add_argument("--alpha0", type=float, default=None, help="SIC error factor [linear, 0..1]")
    p.add_argument("--ms-fraction", type=float_list, default=None, help="mode-switching transmit fractions [0..1], comma-separated")
    p.add_argument("--moments", choices=("sum", "element"), default="sum", help="statistics of the M-element sums or of one element [choice]")
    p.add_argument("--config", default=None, help="optional config supplying links, rates and surface [file]")
    p.add_argument("--out", default=None, help="output CSV path [file, default stdout]")
    p.set_defaults(func=cmd_floor)

    def link_flags(p):
        p.add_argument("--k", type=float, default=float(db_to_linear(DEFAULT_K_DB)), help="Rician factor of both links [linear]")
        p.add_argument("--k-h", type=float, default=None, help="Rician factor of the BS-side link [linear]")
        p.add_argument("--k-g", type=float, default=None, help="Rician factor of the user-side link [linear]")
        p.add_argument("--omega", type=float, default=1.0, help="mean power of both links [linear]")
        p.add_argument("--omega-h", type=float, default=None, help="mean power of the BS-side link [linear]")
        p.add_argument("--omega-g", type=float, default=None, help="mean power of the user-side link [linear]")

    p = sub.add_parser("pdf", help="density of one cascaded amplitude |h||g|")
    link_flags(p)
    p.add_argument("--x-max", type=float, default=None, help="upper end of the grid [amplitude] (default mean + 10 std)")
    p.add_argument("--points", type=int, default=2001, help="grid points [count]")
    p.add_argument("--out", default=None, help="output CSV path [file, default stdout]")
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("kl", help="KL divergence between the exact M-fold sum density and its Gaussian fit")
    link_flags(p)
    p.add_argument("--m", type=int_list, required=True, help="numbers of elements [count], comma-separated")
    p.add_argument("--method", choices=("fft", "direct"), default="direct", help="convolution method [choice]; direct keeps relative accuracy in the tails")
    p.add_argument("--out", default=None, help="output CSV path [file, default stdout]")
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("fieldmap", help="power-density map of the cophased two-user uplink")
    layout = UplinkLayout()
    p.add_argument("--rows", type=int, default=8, help="array rows [count]")
    p.add_argument("--cols", type=int, default=8, help="array columns [count]")
    p.add_argument("--wavelength", type=float, default=1.0, help="carrier wavelength [m]")
    p.add_argument("--spacing", type=float, default=None, help="element spacing [m] (default wavelength/2)")
    p.add_argument("--bs", type=point3, default=layout.bs, help="BS position x,y[,z] [m]")
    p.add_argument("--user-r", type=point3, default=layout.user_r, help="reflection-side user x,y[,z] [m]")
    p.add_argument("--user-t", type=point3, default=layout.user_t, help="transmission-side user x,y[,z] [m]")
    p.add_argument("--p-dbm", type=float, default=10.0, help="transmit power per user [dBm]")
    p.add_argument("--beta-t", type=float, default=layout.beta, help="transmission amplitude [linear]")
    p.add_argument("--beta-r", type=float, default=layout.beta, help="reflection amplitude [linear]")
    p.add_argument("--extent", type=float, nargs=2, default=(40.0, 40.0), metavar=("WX", "WY"), help="grid size [m]")
    p.add_argument("--resolution", type=int, nargs=2, default=(200, 200), metavar=("NX", "NY"), help="grid cells [count]")
    p.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0), metavar=("CX", "CY"), help="grid centre [m]")
    p.add_argument("--height", type=float, default=0.0, help="height of the sampling plane [m]")
    p.add_argument("--out", required=True, help="output CSV matrix path [file]; metadata written to the .json sidecar")
    p.set_defaults(func=cmd_fieldmap)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on usage errors
    try:
        return args.func(args)
    except ConfigError as exc:
        where = f" [{exc.key}]" if exc.key else ""
        print(f"starris: config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"starris: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ResolutionError) as exc:
        print(f"starris: numerical domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
