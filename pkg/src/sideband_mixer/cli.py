"""Command-line client for the sideband-mixer service.

Every subcommand builds a typed request model, dispatches it either to the
in-process handlers (default) or to a remote service (--server URL), and
renders the response to files or stdout.  All frequency flags take "/2pi"
values (MHz, or kHz for the tone half-splitting); conversion to angular
units happens once, inside the request handlers.

Exit codes: 0 success, 2 usage error, 3 invalid config, 4 file I/O error,
5 computation/engine error.  Failures print a single machine-parsable JSON
line to stderr: {"error": {"code": ..., "message": ...}}.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from .fitting import CalibrationError, FitError
from .bloch import OracleError
from .service import handlers
from .service import models as m
from .sweeps import emit_outputs, table_from_doc

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_ENGINE = 5

ENV_WORKERS = "SIDEBAND_MIXER_WORKERS"


class ConfigError(Exception):
    pass


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    """Argparse with single-line JSON errors on stderr."""

    def error(self, message: str):
        _emit_error("usage", message)
        raise SystemExit(EXIT_USAGE)


def _emit_error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": {"code": code, "message": message}}) + "\n")


# ---------------------------------------------------------------------------
# option plumbing: every flag has a config-file equivalent (same name without
# the leading dashes); flags override config values, config overrides defaults.

def _add(parser, flag, *, type=str, default=None, help="", choices=None):
    parser.add_argument(
        f"--{flag}", dest=flag.replace("-", "_"), type=type, default=None,
        help=help + (f" (default: {default})" if default is not None else ""),
        choices=choices,
    )
    parser.set_defaults(**{f"_default_{flag.replace('-', '_')}": default})


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _orders(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad orders list {text!r}") from exc


def load_config(path: str | Path) -> dict[str, str]:
    """Parse the flat `key = value` config format."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError("io", f"cannot read config {path}: {exc}", EXIT_IO) from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(args: argparse.Namespace, parser_actions) -> argparse.Namespace:
    """Merge defaults < config file < explicit flags, with type checking."""
    config: dict[str, str] = {}
    if getattr(args, "config", None):
        config = load_config(args.config)

    known = {}
    for action in parser_actions:
        if action.dest.startswith("_default_") or action.dest in ("help", "config"):
            continue
        if not action.option_strings:
            continue
        flag = action.option_strings[-1].lstrip("-")
        known[flag] = action

    for key in config:
        if key not in known and key != "config":
            raise ConfigError(f"unknown config key {key!r}")

    for flag, action in known.items():
        dest = action.dest
        if getattr(args, dest, None) is not None:
            continue  # explicit flag wins
        if flag in config:
            conv = action.type or str
            try:
                if isinstance(action, argparse._AppendAction):
                    value = [conv(tok.strip()) for tok in config[flag].split(",")]
                else:
                    value = conv(config[flag])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"config key {flag!r}: {exc}") from exc
            if action.choices and value not in action.choices:
                raise ConfigError(f"config key {flag!r}: must be one of {action.choices}")
            setattr(args, dest, value)
        else:
            setattr(args, dest, getattr(args, f"_default_{dest}", None))
    return args


def _atom_model(args) -> m.AtomModel:
    return m.AtomModel(
        gamma1_mhz=args.gamma1_mhz,
        gamma2_mhz=args.gamma2_mhz,
        gamma1_nr_mhz=args.gamma1_nr_mhz,
        gamma_phi_mhz=args.gamma_phi_mhz,
    )


def _atom_opts(p) -> None:
    _add(p, "gamma1-mhz", type=float, default=2.2, help="Gamma1/2pi in MHz")
    _add(p, "gamma2-mhz", type=float, help="Gamma2/2pi in MHz (default Gamma1/2)")
    _add(p, "gamma1-nr-mhz", type=float, default=0.0, help="non-radiative rate, MHz")
    _add(p, "gamma-phi-mhz", type=float, help="pure dephasing rate, MHz")


def _out_opts(p, default_base: str) -> None:
    _add(p, "out", type=str, default=default_base, help="output base path")
    _add(p, "formats", type=str, default="csv,json", help="comma list: csv,json,svg")


def _sweep_opts(p, *, grid_defaults=(0.05, 12.0, 60, "log")) -> None:
    start, stop, points, spacing = grid_defaults
    _add(p, "dsplit-khz", type=float, default=5.0, help="tone half-splitting, kHz")
    _add(p, "detuning-mhz", type=float, default=0.0, help="central detuning, MHz")
    _add(p, "grid-start-mhz", type=float, default=start)
    _add(p, "grid-stop-mhz", type=float, default=stop)
    _add(p, "grid-points", type=int, default=points)
    _add(p, "grid-spacing", type=str, default=spacing, choices=["log", "linear"])
    _add(p, "orders", type=_orders, default=(1, 2, 3, 4), help="comma list of p")
    _add(p, "engine", type=str, default="analytic", choices=["analytic", "oracle", "dual"])
    _add(p, "oracle-stride", type=int, default=4, help="oracle grid down-sampling")
    _add(p, "workers", type=int, default=1, help="worker-pool width")
    _add(p, "rtol", type=float, help="oracle integration rtol")


def build_parser() -> _Parser:
    parser = _Parser(prog="sideband-mixer", description=__doc__)
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--server", help="base URL of a running service")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.command_parsers = {}
    _add_parser = sub.add_parser

    def add_parser(name, **kwargs):
        # subparsers inherit _Parser via parser_class, so errors stay JSON
        p = _add_parser(name, **kwargs)
        parser.command_parsers[name] = p
        return p

    p = add_parser("spectrum", help="closed-form sideband spectrum at one setting")
    _atom_opts(p)
    _add(p, "omega-minus-mhz", type=float, default=1.1)
    _add(p, "omega-plus-mhz", type=float, default=1.1)
    _add(p, "detuning-mhz", type=float, default=0.0)
    _add(p, "dsplit-khz", type=float, default=5.0)
    _add(p, "pmax", type=int, default=4)
    _add(p, "format", type=str, default="json", choices=["json", "csv"])
    _add(p, "out", type=str, help="write here instead of stdout")

    p = add_parser("reflection", help="single-tone reflection curve")
    _atom_opts(p)
    _add(p, "rabi-mhz", type=float, default=0.3)
    _add(p, "span-mhz", type=float, default=12.0)
    _add(p, "points", type=int, default=201)
    _add(p, "format", type=str, default="csv", choices=["json", "csv"])
    _add(p, "out", type=str, help="write here instead of stdout")

    p = add_parser("sweep-amplitude", help="side intensities vs drive amplitude")
    _atom_opts(p)
    _sweep_opts(p)
    _add(p, "ratio", type=float, default=1.0, help="fixed Omega-/Omega+ ratio")
    _out_opts(p, "sweep_amplitude")

    p = add_parser("sweep-asymmetric", help="amplitude sweep, lower tone offset dB up")
    _atom_opts(p)
    _sweep_opts(p)
    _add(p, "offset-db", type=float, default=1.0, help="Omega- above Omega+, dB")
    _out_opts(p, "sweep_asymmetric")

    p = add_parser("sweep-detuning", help="2-D map over detuning x amplitude")
    _atom_opts(p)
    _sweep_opts(p, grid_defaults=(-20.0, 20.0, 81, "linear"))
    _add(p, "amp-start-mhz", type=float, default=0.25)
    _add(p, "amp-stop-mhz", type=float, default=10.0)
    _add(p, "amp-points", type=int, default=25)
    _add(p, "amp-spacing", type=str, default="log", choices=["log", "linear"])
    _out_opts(p, "sweep_detuning")

    p = add_parser("oracle-check", help="dual-engine comparison report")
    _atom_opts(p)
    _add(p, "dsplit-khz", type=float, default=5.0)
    _add(p, "detuning-mhz", type=float, default=0.0)
    _add(p, "grid-start-mhz", type=float, default=0.1)
    _add(p, "grid-stop-mhz", type=float, default=8.0)
    _add(p, "grid-points", type=int, default=12)
    _add(p, "grid-spacing", type=str, default="log", choices=["log", "linear"])
    _add(p, "orders", type=_orders, default=(0, 1, 2, 3, 4))
    _add(p, "workers", type=int, default=1)
    _add(p, "rtol", type=float)
    _add(p, "out", type=str, help="write the JSON report here")

    p = add_parser("fit", help="fit reflection curve(s) from CSV")
    p.add_argument("--in", dest="inputs", action="append", type=str, default=None,
                   metavar="CSV", help="curve file; repeat for a joint fit")
    _add(p, "independent", type=_parse_bool, default=False,
         help="fit curves independently instead of sharing rates")
    _add(p, "out", type=str, help="write the JSON fit report here")

    p = add_parser("calibrate", help="power-ladder calibration")
    p.add_argument("--in", dest="inputs", action="append", type=str, default=None,
                   metavar="CSV", help="ladder manifest (power_db,omega_mhz or power_db,path)")
    _add(p, "out", type=str, help="write the JSON calibration here")

    p = add_parser("synth", help="seeded noisy synthetic reflection data")
    _atom_opts(p)
    _add(p, "rabi-mhz", type=float, default=0.3)
    _add(p, "span-mhz", type=float, default=12.0)
    _add(p, "points", type=int, default=201)
    _add(p, "noise", type=float, default=0.01, help="relative noise level")
    _add(p, "seed", type=int, default=0)
    _add(p, "omega01-offset-khz", type=float, default=0.0)
    _add(p, "out", type=str, default="curve.csv", help="output CSV path")

    p = add_parser("serve", help="run the HTTP service")
    _add(p, "host", type=str, default="127.0.0.1")
    _add(p, "port", type=int, default=8000)

    return parser


# ---------------------------------------------------------------------------
# dispatch: local handlers by default, HTTP when --server is given

_ROUTES = {
    "spectrum": ("/v1/spectrum", handlers.spectrum, m.SpectrumResponse),
    "reflection": ("/v1/reflection", handlers.reflection, m.ReflectionResponse),
    "sweep-amplitude": ("/v1/sweep/amplitude", handlers.amplitude_sweep, m.SweepResponse),
    "sweep-asymmetric": ("/v1/sweep/asymmetric", handlers.asymmetric_sweep, m.SweepResponse),
    "sweep-detuning": ("/v1/sweep/detuning", handlers.detuning_sweep, m.SweepResponse),
    "oracle-check": ("/v1/oracle-check", handlers.run_oracle_check, m.OracleCheckResponse),
    "fit": ("/v1/fit", handlers.fit, m.FitResponse),
    "calibrate": ("/v1/calibrate", handlers.calibrate, m.CalibrateResponse),
    "synth": ("/v1/synth", handlers.synth, m.SynthResponse),
}


def _dispatch(command: str, request, server: str | None):
    path, handler, response_model = _ROUTES[command]
    if server is None:
        try:
            return handler(request)
        except (ValueError, FitError, CalibrationError, OracleError) as exc:
            raise CliError("engine", str(exc), EXIT_ENGINE) from exc
    import httpx

    try:
        reply = httpx.post(
            server.rstrip("/") + path, json=request.model_dump(mode="json"),
            timeout=600.0,
        )
    except httpx.HTTPError as exc:
        raise CliError("server", f"request failed: {exc}", EXIT_ENGINE) from exc
    if reply.status_code != 200:
        raise CliError("server", f"HTTP {reply.status_code}: {reply.text}", EXIT_ENGINE)
    return response_model.model_validate(reply.json())


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _grid_model(args, prefix="grid") -> m.GridModel:
    return m.GridModel(
        start_mhz=getattr(args, f"{prefix.replace('-', '_')}_start_mhz"),
        stop_mhz=getattr(args, f"{prefix.replace('-', '_')}_stop_mhz"),
        points=getattr(args, f"{prefix.replace('-', '_')}_points"),
        spacing=getattr(args, f"{prefix.replace('-', '_')}_spacing"),
    )


def _sweep_common(args, cls, **extra):
    return cls(
        atom=_atom_model(args),
        dsplit_khz=args.dsplit_khz,
        detuning_mhz=args.detuning_mhz,
        grid=_grid_model(args),
        orders=list(args.orders),
        engine=args.engine,
        oracle_stride=args.oracle_stride,
        workers=args.workers,
        rtol=args.rtol,
        **extra,
    )


def _emit_sweep(resp: m.SweepResponse, args) -> None:
    table = table_from_doc({"spec": resp.spec, "rows": resp.rows, "meta": resp.meta})
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    try:
        written = emit_outputs(table, formats, args.out)
    except OSError as exc:
        raise CliError("io", str(exc), EXIT_IO) from exc
    for fmt, path in written.items():
        print(f"{fmt}: {path}")


def _read_manifest(path: str):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            fields = reader.fieldnames or []
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc}", EXIT_IO) from exc
    if "power_db" not in fields:
        raise CliError("config", f"{path}: manifest needs a power_db column", EXIT_CONFIG)
    return rows, fields


def _run(args) -> int:
    command = args.command
    if command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    env_workers = os.environ.get(ENV_WORKERS)
    if env_workers is not None and hasattr(args, "workers"):
        try:
            args.workers = int(env_workers)
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got {env_workers!r}")

    if command == "spectrum":
        req = m.SpectrumRequest(
            atom=_atom_model(args),
            drive=m.DriveModel(
                omega_minus_mhz=args.omega_minus_mhz,
                omega_plus_mhz=args.omega_plus_mhz,
                detuning_mhz=args.detuning_mhz,
                dsplit_khz=args.dsplit_khz,
            ),
            pmax=args.pmax,
        )
        resp = _dispatch(command, req, args.server)
        if args.format == "json":
            _write_or_print(resp.model_dump_json(indent=2) + "\n", args.out)
        else:
            lines = ["n,re,im,magnitude,intensity"]
            for e in resp.entries:
                lines.append(
                    f"{e.n},{e.re!r},{e.im!r},{e.magnitude!r},{e.intensity!r}"
                )
            _write_or_print("\n".join(lines) + "\n", args.out)
        return EXIT_OK

    if command == "reflection":
        req = m.ReflectionRequest(
            atom=_atom_model(args),
            rabi_mhz=args.rabi_mhz,
            span_mhz=args.span_mhz,
            points=args.points,
        )
        resp = _dispatch(command, req, args.server)
        if args.format == "json":
            _write_or_print(resp.model_dump_json(indent=2) + "\n", args.out)
        else:
            lines = ["detuning_hz,re_t,im_t"]
            for pt in resp.points:
                lines.append(f"{pt.detuning_hz!r},{pt.re_t!r},{pt.im_t!r}")
            _write_or_print("\n".join(lines) + "\n", args.out)
        return EXIT_OK

    if command == "sweep-amplitude":
        req = _sweep_common(args, m.SweepAmplitudeRequest, ratio_minus_over_plus=args.ratio)
        _emit_sweep(_dispatch(command, req, args.server), args)
        return EXIT_OK

    if command == "sweep-asymmetric":
        req = _sweep_common(args, m.SweepAsymmetricRequest, offset_db=args.offset_db)
        _emit_sweep(_dispatch(command, req, args.server), args)
        return EXIT_OK

    if command == "sweep-detuning":
        req = m.SweepDetuningRequest(
            atom=_atom_model(args),
            dsplit_khz=args.dsplit_khz,
            detuning_mhz=args.detuning_mhz,
            grid=_grid_model(args),
            amplitude_grid=m.GridModel(
                start_mhz=args.amp_start_mhz,
                stop_mhz=args.amp_stop_mhz,
                points=args.amp_points,
                spacing=args.amp_spacing,
            ),
            orders=list(args.orders),
            engine=args.engine,
            oracle_stride=args.oracle_stride,
            workers=args.workers,
            rtol=args.rtol,
        )
        _emit_sweep(_dispatch(command, req, args.server), args)
        return EXIT_OK

    if command == "oracle-check":
        req = m.OracleCheckRequest(
            atom=_atom_model(args),
            dsplit_khz=args.dsplit_khz,
            detuning_mhz=args.detuning_mhz,
            grid=_grid_model(args),
            orders=list(args.orders),
            workers=args.workers,
            rtol=args.rtol,
        )
        resp = _dispatch(command, req, args.server)
        _write_or_print(resp.model_dump_json(indent=2) + "\n", args.out)
        if args.out:
            print(f"max relative deviation: {resp.max_rel_dev:.3e}")
        return EXIT_OK

    if command in ("fit", "calibrate") and not args.inputs:
        raise CliError("usage", f"{command} requires at least one --in file", EXIT_USAGE)

    if command == "fit":
        curves = []
        for path in args.inputs:
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise CliError("io", f"cannot read {path}: {exc}", EXIT_IO) from exc
            curves.append(_parse_curve_csv(text, path))
        req = m.FitRequest(curves=curves, shared_rates=not args.independent)
        resp = _dispatch(command, req, args.server)
        _write_or_print(resp.model_dump_json(indent=2) + "\n", args.out)
        return EXIT_OK

    if command == "calibrate":
        samples = []
        for path in args.inputs:
            rows, fields = _read_manifest(path)
            if "omega_mhz" in fields:
                for row in rows:
                    samples.append(
                        m.CalibrationSample(
                            power_db=float(row["power_db"]),
                            omega_mhz=float(row["omega_mhz"]),
                        )
                    )
            elif "path" in fields:
                base = Path(path).parent
                curves, powers = [], []
                for row in rows:
                    curve_path = base / row["path"]
                    try:
                        text = curve_path.read_text()
                    except OSError as exc:
                        raise CliError("io", f"cannot read {curve_path}: {exc}", EXIT_IO) from exc
                    curves.append(_parse_curve_csv(text, str(curve_path)))
                    powers.append(float(row["power_db"]))
                fit_resp = _dispatch("fit", m.FitRequest(curves=curves), args.server)
                for power, result in zip(powers, fit_resp.results):
                    samples.append(
                        m.CalibrationSample(power_db=power, omega_mhz=result.rabi_mhz)
                    )
            else:
                raise CliError(
                    "config", f"{path}: manifest needs omega_mhz or path column",
                    EXIT_CONFIG,
                )
        resp = _dispatch(command, m.CalibrateRequest(samples=samples), args.server)
        _write_or_print(resp.model_dump_json(indent=2) + "\n", args.out)
        return EXIT_OK

    if command == "synth":
        req = m.SynthRequest(
            atom=_atom_model(args),
            rabi_mhz=args.rabi_mhz,
            span_mhz=args.span_mhz,
            points=args.points,
            noise=args.noise,
            seed=args.seed,
            omega01_offset_khz=args.omega01_offset_khz,
        )
        resp = _dispatch(command, req, args.server)
        lines = ["detuning_hz,re_t,im_t"]
        for pt in resp.points:
            lines.append(f"{pt.detuning_hz!r},{pt.re_t!r},{pt.im_t!r}")
        try:
            Path(args.out).write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise CliError("io", str(exc), EXIT_IO) from exc
        print(f"csv: {args.out}")
        return EXIT_OK

    raise CliError("usage", f"unknown command {command!r}", EXIT_USAGE)


def _parse_curve_csv(text: str, path: str) -> list[m.TransmissionPoint]:
    reader = csv.DictReader(text.splitlines())
    required = {"detuning_hz", "re_t", "im_t"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise CliError(
            "config", f"{path}: expected columns detuning_hz,re_t,im_t", EXIT_CONFIG
        )
    points = [
        m.TransmissionPoint(
            detuning_hz=float(row["detuning_hz"]),
            re_t=float(row["re_t"]),
            im_t=float(row["im_t"]),
        )
        for row in reader
    ]
    if len(points) < 5:
        raise CliError("config", f"{path}: need at least 5 data points", EXIT_CONFIG)
    return points


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _resolve(args, parser.command_parsers[args.command]._actions)
        return _run(args)
    except ConfigError as exc:
        _emit_error("invalid-config", str(exc))
        return EXIT_CONFIG
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(loc) for loc in first["loc"])
        _emit_error("invalid-config", f"{where}: {first['msg']}")
        return EXIT_CONFIG
    except CliError as exc:
        _emit_error(exc.code, str(exc))
        return exc.exit_code
    except OSError as exc:
        _emit_error("io", str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
