"""Command-line front end.

Subcommands::

    quditqpt gen-channel  --kind depolarizing --d 5 --p 0.3
    quditqpt run-qpt      --kind as --d 5 --weights uniform [--shots N --seed S]
    quditqpt recover      --chi chi.json --rho-out rho.json [--reference rho_in.json]
    quditqpt turb-screens --altitude 174 --count 4

Every subcommand also accepts ``--config file.json`` whose keys are the long
option names (dashes or underscores). Command-line flags win over the file.
Outputs go to ``--outdir``, defaulting to ``$QUDITQPT_OUTDIR`` or ``.``.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 dimension not
supported by the MUB construction, 5 singular recovery in strict mode.
"""

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import channels as ch
from . import matrixio, mub, tomography, turbulence
from .errors import QuditQPTError, SingularBeyondRecovery, UnsupportedDimension
from .states import DensityMatrix, PureState, fidelity, purity

log = logging.getLogger("quditqpt")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNSUPPORTED, EXIT_SINGULAR = 0, 2, 3, 4, 5
OUTDIR_ENV = "QUDITQPT_OUTDIR"

CHANNEL_KINDS = ("identity", "depolarizing", "as", "ps", "aps", "completely-depolarizing", "turbulence")


class ConfigError(Exception):
    pass


# --- argument parsing -------------------------------------------------------


def _add_channel_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("channel")
    g.add_argument("--kind", choices=CHANNEL_KINDS)
    g.add_argument("--d", type=int)
    g.add_argument("--p", type=float, help="depolarizing probability")
    g.add_argument("--weights", choices=("uniform", "uniform0"),
                   help="shift weights: all pairs, or pairs (0, alpha) only")
    g.add_argument("--literal", action="store_true", default=None,
                   help="use bare embedded Paulis instead of their unitary completion")
    _add_turbulence_args(p)
    g = p.add_argument_group("ensemble")
    g.add_argument("--mode", choices=turbulence.MODES)
    g.add_argument("--n-masks", type=int)


def _add_turbulence_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("turbulence")
    g.add_argument("--altitude", type=float)
    g.add_argument("--path-length", type=float)
    g.add_argument("--wavelength", type=float)
    g.add_argument("--grid", type=int, dest="grid")
    g.add_argument("--dx", type=float)
    g.add_argument("--r0", type=float, help="override the Fried parameter (m)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quditqpt", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-channel", help="write Kraus operators and chi of a channel")
    _add_channel_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="Kraus file (chi goes next to it as *_chi.json)")

    p = sub.add_parser("run-qpt", help="simulate SQPT of a channel")
    _add_channel_args(p)
    p.add_argument("--channel", help="Kraus file from gen-channel (instead of --kind)")
    p.add_argument("--shots", type=int, help="shots per (prep, basis); exact if omitted")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("recover", help="invert a reconstructed process on an output state")
    p.add_argument("--chi")
    p.add_argument("--rho-out")
    p.add_argument("--reference", help="true input state, for the fidelity line")
    p.add_argument("--rcond", type=float)
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--out")

    p = sub.add_parser("turb-screens", help="write phase screens and their structure function")
    _add_turbulence_args(p)
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("pgm", "png"))

    for sp in sub.choices.values():
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--outdir")
    return parser


DEFAULTS = {
    "p": 0.0,
    "weights": "uniform",
    "literal": False,
    "altitude": 174.0,
    "path_length": turbulence.PATH_LENGTH,
    "wavelength": turbulence.WAVELENGTH,
    "grid": turbulence.GRID_N,
    "dx": turbulence.GRID_DX,
    "mode": "tilt-shift",
    "n_masks": 500,
    "seed": 0,
    "rcond": tomography.DEFAULT_RECOVERY_RCOND,
    "strict": False,
    "count": 4,
    "format": "pgm",
}


def resolve(args: argparse.Namespace) -> dict:
    """Merge ``--config`` into the parsed flags and fill defaults."""
    known = {k for k in vars(args) if k not in ("command", "config", "verbose")}
    cfg = {k: v for k, v in vars(args).items() if k in known}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if cfg.get(name) is None:
                cfg[name] = value
    for key, value in DEFAULTS.items():
        if key in known and cfg.get(key) is None:
            cfg[key] = value
    if cfg.get("outdir") is None:
        cfg["outdir"] = os.environ.get(OUTDIR_ENV, ".")
    return cfg


# --- channel construction ---------------------------------------------------


def turbulence_params(cfg: dict) -> turbulence.TurbulenceParams:
    try:
        return turbulence.TurbulenceParams(
            altitude=float(cfg["altitude"]),
            path_length=float(cfg["path_length"]),
            wavelength=float(cfg["wavelength"]),
            n=int(cfg["grid"]),
            dx=float(cfg["dx"]),
            r0_override=None if cfg.get("r0") is None else float(cfg["r0"]),
        )
    except (ValueError, QuditQPTError) as exc:
        raise ConfigError(str(exc)) from exc


def make_channel(cfg: dict) -> ch.KrausChannel:
    kind, d = cfg.get("kind"), cfg.get("d")
    if kind is None:
        raise ConfigError("--kind is required")
    if kind == "turbulence":
        params = turbulence_params(cfg)
        d = 4 if d is None else int(d)
        geom = turbulence.default_geometry(params, d)
        return turbulence.turbulence_channel(params, geom, cfg["mode"], int(cfg["n_masks"]), int(cfg["seed"]))
    if d is None or int(d) < 2:
        raise ConfigError("--d must be an integer >= 2")
    d = int(d)
    completed = not cfg["literal"]
    try:
        if kind == "identity":
            return ch.identity_channel(d)
        if kind == "completely-depolarizing":
            return ch.completely_depolarizing_channel(d)
        if kind == "depolarizing":
            return ch.depolarizing_channel(d, float(cfg["p"]), completed=completed)
        if cfg["weights"] == "uniform":
            p0, w = ch.uniform_weights(d)
        else:
            p0, w = ch.uniform_from_level(d, 0)
        return ch.shift_channel(d, kind, w, p0, completed=completed)
    except (ValueError, QuditQPTError) as exc:
        raise ConfigError(str(exc)) from exc


def load_channel(path) -> ch.KrausChannel:
    try:
        kind, ops, meta = matrixio.read_matrix(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read channel file {path}: {exc}") from exc
    if kind != "kraus":
        raise ConfigError(f"{path} holds {kind!r}, expected 'kraus'")
    return ch.KrausChannel(ops, label=meta.get("label", ""))


def _load_density(path) -> DensityMatrix:
    try:
        kind, m, _ = matrixio.read_matrix(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read state file {path}: {exc}") from exc
    if kind != "density":
        raise ConfigError(f"{path} holds {kind!r}, expected 'density'")
    return DensityMatrix(m)


def _load_chi(path) -> ch.ChiMatrix:
    try:
        kind, m, meta = matrixio.read_matrix(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read chi file {path}: {exc}") from exc
    if kind != "chi":
        raise ConfigError(f"{path} holds {kind!r}, expected 'chi'")
    return ch.ChiMatrix(m, metadata=meta)


def _provenance(cfg: dict) -> dict:
    clean = {k: v for k, v in sorted(cfg.items()) if k != "outdir" and v is not None}
    return {"seed": cfg.get("seed"), "config_hash": matrixio.config_hash(clean)}


# --- commands ---------------------------------------------------------------


def cmd_gen_channel(cfg: dict) -> int:
    channel = make_channel(cfg)
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    out = Path(cfg["out"]) if cfg.get("out") else outdir / "channel.json"
    chi_path = out.with_name(out.stem + "_chi.json")
    tp = channel.is_trace_preserving()
    meta = {
        "label": channel.label,
        "n_operators": len(channel),
        "trace_preserving": tp,
        "completeness_error": channel.completeness_error(),
        **_provenance(cfg),
    }
    matrixio.write_matrix(out, "kraus", channel.operators, meta)
    matrixio.write_matrix(chi_path, "chi", ch.chi_from_kraus(channel).matrix, meta)
    print(f"wrote {len(channel)} Kraus operators (d={channel.dim}) to {out}")
    print(f"trace-preserving check: {'pass' if tp else 'fail'} "
          f"(max |sum E^dag E - I| = {channel.completeness_error():.2e})")
    return EXIT_OK


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_run_qpt(cfg: dict) -> int:
    channel = load_channel(cfg["channel"]) if cfg.get("channel") else make_channel(cfg)
    d = channel.dim
    mubs = mub.build_mubs(d)
    shots = None if cfg.get("shots") is None else int(cfg["shots"])
    if shots is not None and shots < 1:
        raise ConfigError("--shots must be >= 1")
    result = tomography.run_qpt(channel, mubs, shots=shots, seed=int(cfg["seed"]))
    truth = ch.chi_from_kraus(channel)

    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    matrixio.write_records(outdir / "records.csv", result.records)
    meta = {**_provenance(cfg), **result.chi.metadata, "shots": shots}
    matrixio.write_matrix(outdir / "chi.json", "chi", result.chi.matrix, meta)

    pf = tomography.process_fidelity(result.chi, truth)
    per_prep = []
    for j, rho in enumerate(result.prep.density_matrices()):
        t_out = ch.apply(channel, rho)
        c_out = ch.chi_apply(result.chi, rho)
        per_prep.append({
            "prep_index": j,
            "fidelity": fidelity(t_out, c_out),
            "purity_true": purity(t_out),
            "purity_chi": purity(c_out),
        })
    uniform = PureState.uniform(d).density()
    u_true = ch.apply(channel, uniform)
    u_chi = ch.chi_apply(result.chi, uniform)
    report = {
        "d": d,
        "channel": channel.label,
        "n_operators": len(channel),
        "shots": shots,
        "seed": int(cfg["seed"]),
        "process_fidelity": pf,
        "mean_output_fidelity": float(np.mean([r["fidelity"] for r in per_prep])),
        "uniform_input": {
            "fidelity": fidelity(u_true, u_chi),
            "purity_true": purity(u_true),
            "purity_chi": purity(u_chi),
        },
        "per_prep": per_prep,
        "antihermitian_residual": result.chi.metadata["antihermitian_residual"],
    }
    (outdir / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    with open(outdir / "purity.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["prep_index", "purity_true", "purity_chi", "fidelity"])
        for r in per_prep:
            w.writerow([r["prep_index"], _fmt(r["purity_true"]), _fmt(r["purity_chi"]), _fmt(r["fidelity"])])
    print(f"process fidelity: {pf:.12f}")
    print(f"mean output-state fidelity: {report['mean_output_fidelity']:.12f}")
    print(f"uniform-input output purity (chi): {report['uniform_input']['purity_chi']:.6f}")
    return EXIT_OK


def cmd_recover(cfg: dict) -> int:
    if not cfg.get("chi") or not cfg.get("rho_out"):
        raise ConfigError("--chi and --rho-out are required")
    chi = _load_chi(cfg["chi"])
    rho_out = _load_density(cfg["rho_out"])
    rcond = float(cfg["rcond"])
    if not 0 < rcond < 1:
        raise ConfigError("--rcond must lie in (0, 1)")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rec = tomography.recover(chi, rho_out, rcond=rcond, strict=bool(cfg["strict"]))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    out = Path(cfg["out"]) if cfg.get("out") else outdir / "recovered.json"
    matrixio.write_matrix(out, "density", rec.matrix,
                          {"effective_rank": rec.metadata["effective_rank"], "rcond": rcond})
    print(f"wrote recovered state to {out} (effective rank {rec.metadata['effective_rank']})")
    if cfg.get("reference"):
        ref = _load_density(cfg["reference"])
        print(f"fidelity: {fidelity(ref, rec):.12f}")
    return EXIT_OK


def cmd_turb_screens(cfg: dict) -> int:
    params = turbulence_params(cfg)
    count = int(cfg["count"])
    if count < 1:
        raise ConfigError("--count must be >= 1")
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    seed = int(cfg["seed"])
    screens = []
    for m in range(count):
        screen = turbulence.phase_screen(params, turbulence.mask_seed(seed, m))
        screens.append(screen)
        stem = outdir / f"screen_{m:03d}"
        if cfg["format"] == "png":
            from PIL import Image

            Image.fromarray(turbulence.screen_to_gray(screen)).save(stem.with_suffix(".png"))
        else:
            turbulence.write_pgm(stem.with_suffix(".pgm"), screen)
        turbulence.write_raw(stem.with_suffix(".raw"), screen)
    lags = np.unique(np.rint(np.geomspace(4, params.n / 8, 12)).astype(int))
    r = lags * params.dx
    sf = turbulence.structure_function(screens, r)
    model = turbulence.kolmogorov_structure(r, params.r0)
    slope = turbulence.fit_power_law(r, sf)[0] if np.all(sf > 0) else float("nan")
    with open(outdir / "structure.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r_m", "D", "kolmogorov", "ratio", "fitted_exponent"])
        for ri, di, mi in zip(r, sf, model):
            ratio = di / mi if mi > 0 else float("nan")
            w.writerow([_fmt(ri), _fmt(di), _fmt(mi), _fmt(ratio), _fmt(slope)])
    print(f"wrote {count} screens to {outdir} (r0 = {params.r0:.6g} m)")
    print(f"fitted structure-function exponent: {slope:.4f}")
    return EXIT_OK


COMMANDS = {
    "gen-channel": cmd_gen_channel,
    "run-qpt": cmd_run_qpt,
    "recover": cmd_recover,
    "turb-screens": cmd_turb_screens,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedDimension as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except SingularBeyondRecovery as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (QuditQPTError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
