"""Command-line front end: generate -> simulate -> reconstruct -> analyze.

Subcommands exchange JSON files, so every stage can be rerun or swapped out.
All randomness is seeded explicitly; identical configurations produce
byte-identical output files.  Option precedence: command-line flag, then
--config file entry, then built-in default.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import protocols, serialization, simulate, states, tomography, witnesses
from .simulate import NoiseModel
from .states import DensityMatrix, PureState

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

_DIRECTION_ALIASES = {"+": "plus", "-": "minus", "plus45": "plus", "minus45": "minus"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dickelab",
        description="Simulation and analysis of the four-photon two-excitation Dicke state.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="JSON file with default option values")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    p_gen = sub.add_parser("gen", help="write a (possibly noisy) state file")
    p_gen.add_argument("--dicke", nargs=2, type=int, metavar=("N", "M"))
    p_gen.add_argument("--white-noise", type=float, dest="white_noise")
    p_gen.add_argument("--dephase", type=float)
    p_gen.add_argument("--leak", type=float, help="adjacent-excitation admixture weight")
    p_gen.add_argument(
        "--calibrated", action="store_true",
        help="use the noise calibration that reproduces fidelity 0.8455 and spin witness 5.585",
    )
    add_common(p_gen)

    p_sim = sub.add_parser("simulate", help="sample counts for all 3^n settings")
    p_sim.add_argument("--state", type=Path, help="input state file (default: OUT/state.json)")
    p_sim.add_argument("--events", type=float, help="mean events per setting (default 1556)")
    p_sim.add_argument("--efficiencies", help="scalar or CSV of 2n per-detector efficiencies")
    p_sim.add_argument("--seed", type=int, help="master seed (required)")
    add_common(p_sim)

    p_tomo = sub.add_parser("tomo", help="maximum-likelihood reconstruction from counts")
    p_tomo.add_argument("--counts", type=Path, help="counts file (default: OUT/counts.jsonl)")
    p_tomo.add_argument("--max-iterations", type=int, dest="max_iterations")
    p_tomo.add_argument("--tolerance", type=float)
    p_tomo.add_argument("--seed", type=int)
    p_tomo.add_argument("--bootstrap", type=int, help="resample-and-refit count for error bars")
    add_common(p_tomo)

    p_wit = sub.add_parser("witness", help="evaluate entanglement witnesses on a state")
    p_wit.add_argument("--rho", type=Path, help="density-matrix file (default: OUT/rho_fit.json)")
    p_wit.add_argument("--state", type=Path, help="pure-state file used instead of --rho")
    p_wit.add_argument("--counts", type=Path, help="counts file for bootstrap errors")
    p_wit.add_argument("--bootstrap", type=int, help="bootstrap resamples for witness errors")
    p_wit.add_argument("--restarts", type=int, help="filtered-witness optimizer restarts")
    p_wit.add_argument("--seed", type=int)
    add_common(p_wit)

    p_proj = sub.add_parser("project", help="single-qubit projection or photon-loss analysis")
    p_proj.add_argument("--state", type=Path)
    p_proj.add_argument("--rho", type=Path)
    p_proj.add_argument("--qubit", type=int)
    p_proj.add_argument("--direction", help="H, V, plus, minus, L, R or 're,im;re,im'")
    p_proj.add_argument("--lose", help="CSV of qubit indices to trace out")
    p_proj.add_argument("--ghz-witness", action="store_true", dest="ghz_witness")
    p_proj.add_argument("--restarts", type=int)
    p_proj.add_argument("--seed", type=int)
    add_common(p_proj)

    p_prot = sub.add_parser("protocols", help="singlet fraction, telecloning and ODT reports")
    p_prot.add_argument("--state", type=Path)
    p_prot.add_argument("--rho", type=Path)
    p_prot.add_argument("--msf", action="store_true")
    p_prot.add_argument("--telecloning", action="store_true")
    p_prot.add_argument("--odt", action="store_true")
    p_prot.add_argument("--measured", help="CSV pair of measured qubits for ODT (default 2,3)")
    p_prot.add_argument("--basis", help="two-character ODT basis, e.g. ZZ")
    p_prot.add_argument("--samples", type=int, help="telecloning sphere-quadrature nodes")
    p_prot.add_argument("--sender", type=int, help="telecloning sender qubit (default 0)")
    p_prot.add_argument("--seed", type=int)
    add_common(p_prot)
    return parser


class _Options:
    """Flag > config-file > default resolution."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._config = {}
        config_path = self._args.get("config")
        if config_path is not None:
            payload = json.loads(Path(config_path).read_text(encoding="utf-8"))
            if not isinstance(payload, dict):
                raise ValueError("config file must hold a JSON object")
            self._config = payload

    def get(self, key: str, default=None):
        value = self._args.get(key)
        if value is not None and value is not False:
            return value
        if key in self._config:
            return self._config[key]
        return default

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ValueError(f"--{key.replace('_', '-')} is required")
        return value


def _out_dir(opts: _Options) -> Path:
    out = Path(opts.require("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_overwrite(path: Path, opts: _Options) -> None:
    if path.exists() and not opts.get("force", False):
        raise ValueError(f"{path} exists; pass --force to overwrite")


def _load_state(opts: _Options, out: Path | None = None) -> PureState | DensityMatrix:
    state_path = opts.get("state")
    rho_path = opts.get("rho")
    if state_path is None and rho_path is None:
        if out is not None:
            for candidate in ("rho_fit.json", "state.json"):
                if (out / candidate).exists():
                    return serialization.state_from_dict(serialization.read_json(out / candidate))
        raise ValueError("no input state: pass --state or --rho")
    path = Path(state_path if state_path is not None else rho_path)
    return serialization.state_from_dict(serialization.read_json(path))


def _as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    return state.density() if isinstance(state, PureState) else state


def _parse_direction(text: str) -> PureState:
    name = _DIRECTION_ALIASES.get(text, text)
    try:
        return states.basis_direction(name)
    except ValueError:
        pass
    parts = text.split(";")
    if len(parts) != 2:
        raise ValueError(f"direction {text!r} is neither a named axis nor 're,im;re,im'")
    amps = []
    for part in parts:
        re_s, im_s = part.split(",")
        amps.append(complex(float(re_s), float(im_s)))
    return PureState(1, np.array(amps))


def _parse_efficiencies(raw, n_qubits: int):
    if raw is None:
        return 1.0
    if isinstance(raw, (int, float)):
        return float(raw)
    text = str(raw)
    if "," in text:
        values = [float(v) for v in text.split(",")]
        if len(values) != 2 * n_qubits:
            raise ValueError(f"expected {2 * n_qubits} efficiencies, got {len(values)}")
        return np.asarray(values)
    return float(text)


def cmd_gen(opts: _Options) -> int:
    out = _out_dir(opts)
    dicke = opts.require("dicke")
    n, m = int(dicke[0]), int(dicke[1])
    ideal = states.dicke_state(n, m)

    if opts.get("calibrated", False):
        model = simulate.calibrated_noise()
    else:
        model = NoiseModel(
            white_noise=float(opts.get("white_noise", 0.0)),
            dephasing=float(opts.get("dephase", 1.0)),
            excitation_leak=float(opts.get("leak", 0.0)),
        )
    noisy = model != NoiseModel()
    state = simulate.apply_noise(ideal.density(), model) if noisy else ideal

    path = out / "state.json"
    _check_overwrite(path, opts)
    serialization.write_json(path, serialization.state_to_dict(state))
    fidelity = states.fidelity_pure(_as_density(state), ideal)
    print(f"wrote {path}")
    print(f"fidelity to ideal Dicke({n},{m}): {fidelity:.6f}")
    return EXIT_OK


def cmd_simulate(opts: _Options) -> int:
    out = _out_dir(opts)
    state_path = opts.get("state")
    path_in = Path(state_path) if state_path is not None else out / "state.json"
    state = serialization.state_from_dict(serialization.read_json(path_in))
    rho = _as_density(state)
    seed = int(opts.require("seed"))
    events = float(opts.get("events", 1556.0))
    efficiencies = _parse_efficiencies(opts.get("efficiencies"), rho.n_qubits)

    records = simulate.simulate_run(rho, mean_events=events, efficiencies=efficiencies, seed=seed)
    path = out / "counts.jsonl"
    _check_overwrite(path, opts)
    serialization.write_records(path, records)
    total = int(sum(r.counts.sum() for r in records))
    print(f"wrote {path}: {len(records)} settings, {total} events")
    return EXIT_OK


def cmd_tomo(opts: _Options) -> int:
    out = _out_dir(opts)
    counts_path = Path(opts.get("counts", out / "counts.jsonl"))
    records = serialization.read_records(counts_path)
    report = tomography.mle_fit(
        records,
        max_iterations=int(opts.get("max_iterations", 1000)),
        tolerance=float(opts.get("tolerance", 1e-10)),
        seed=int(opts.get("seed", 0)),
    )

    rho_path = out / "rho_fit.json"
    report_path = out / "mle_report.json"
    _check_overwrite(rho_path, opts)
    serialization.write_json(rho_path, serialization.density_matrix_to_dict(report.rho))
    serialization.write_json(report_path, serialization.mle_report_to_dict(report))
    print(f"wrote {rho_path}")
    print(
        f"log-likelihood {report.log_likelihood:.6f}, {report.iterations} iterations, "
        f"converged={report.converged}"
    )

    n_boot = opts.get("bootstrap")
    if n_boot:
        sigma = _bootstrap_refit_sigma(records, int(n_boot), int(opts.get("seed", 0)))
        sigma_path = out / "rho_fit_sigma.json"
        serialization.write_json(
            sigma_path,
            {
                "schema": serialization.schema_tag("density-matrix"),
                "n_qubits": report.rho.n_qubits,
                "elements": [[float(s), 0.0] for s in sigma.reshape(-1)],
            },
        )
        print(f"wrote {sigma_path} (max elementwise sigma {sigma.max():.3e})")
    return EXIT_OK


def _bootstrap_refit_sigma(records, n_boot: int, seed: int) -> np.ndarray:
    fits = []
    for index in range(n_boot):
        rng = np.random.Generator(np.random.PCG64(simulate.split_seed(seed, 7000 + index)))
        resampled = [
            simulate.CountRecord(r.setting, rng.poisson(r.counts).astype(float), r.efficiencies)
            for r in records
        ]
        fits.append(tomography.mle_fit(resampled).rho.elements)
    stack = np.stack(fits)
    return stack.std(axis=0).real


def _witness_rows(state: PureState | DensityMatrix, opts: _Options):
    rho = _as_density(state)
    rows = []
    if rho.n_qubits == 4:
        target = states.dicke_state(4, 2)
        rows.append((witnesses.fidelity_witness(rho, target, witnesses.DICKE_FIDELITY_ALPHA), None))
        rows.append((witnesses.collective_spin_witness(rho, 4), None))
    elif rho.n_qubits == 3:
        rows.append((witnesses.collective_spin_witness(rho, 3), None))
        verdict, filt = witnesses.filtered_ghz_witness(
            rho, restarts=int(opts.get("restarts", 16)), seed=int(opts.get("seed", 0))
        )
        rows.append((verdict, filt))
    else:
        raise ValueError("witness evaluation supports three- or four-qubit states")
    return rows


def cmd_witness(opts: _Options) -> int:
    out = _out_dir(opts)
    state = _load_state(opts, out)
    rho = _as_density(state)
    rows = _witness_rows(state, opts)

    errors: dict[str, float] = {}
    n_boot = opts.get("bootstrap")
    counts_path = opts.get("counts")
    if n_boot and counts_path:
        records = serialization.read_records(Path(counts_path))
        errors = witnesses.bootstrap_errors(
            records, n_resamples=int(n_boot), seed=int(opts.get("seed", 0))
        )

    payload_rows = []
    inconclusive = False
    print(f"{'witness':38s} {'value':>10s} {'bound':>10s}  verdict")
    for verdict, filt in rows:
        error = None
        if verdict.name.startswith("fidelity_witness") and "fidelity_witness" in errors:
            error = errors["fidelity_witness"]
        elif verdict.name.startswith("collective_spin") and "collective_spin_witness" in errors:
            error = errors["collective_spin_witness"]
        word = "ENTANGLED" if verdict.entangled else "INCONCLUSIVE"
        inconclusive = inconclusive or not verdict.entangled
        err_text = f" +/- {error:.4f}" if error is not None else ""
        print(f"{verdict.name:38s} {verdict.value:>+10.5f} {verdict.bound:>10.5f}  {word}{err_text}")
        if error is not None:
            verdict = replace(verdict, statistical_error=error)
        payload_rows.append(serialization.witness_verdict_to_dict(verdict, filt))
    if rho.n_qubits == 4:
        print(f"{'<Jz^2> (symmetric-bound form)':38s} {witnesses.jz_squared_check(rho):>+10.5f}"
              f" {witnesses.JZ_SQUARED_SYMMETRIC_MIN:>10.5f}  info")

    path = out / "witness_report.json"
    _check_overwrite(path, opts)
    serialization.write_json(
        path, {"schema": serialization.schema_tag("witness-report"), "witnesses": payload_rows}
    )
    print(f"wrote {path}")
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


def cmd_project(opts: _Options) -> int:
    out = _out_dir(opts)
    state = _load_state(opts, out)

    lose = opts.get("lose")
    if lose is not None:
        lost = [int(v) for v in str(lose).split(",")]
        report = protocols.loss_analysis(state, lost)
        payload = {
            "schema": serialization.schema_tag("loss-report"),
            "lost": list(report.lost),
            "fidelity_to_reference": report.fidelity_to_reference,
            "reference_name": report.reference_name,
            "residual": serialization.density_matrix_to_dict(report.residual),
        }
        path = out / "loss_report.json"
        residual_path = out / "loss_residual.json"
        _check_overwrite(path, opts)
        serialization.write_json(path, payload)
        serialization.write_json(residual_path, serialization.density_matrix_to_dict(report.residual))
        fid = report.fidelity_to_reference
        fid_text = "n/a" if fid is None else f"{fid:.6f}"
        print(f"lost qubits {report.lost}: fidelity to {report.reference_name}: {fid_text}")
        print(f"wrote {path} and {residual_path}")
        return EXIT_OK

    qubit = int(opts.require("qubit"))
    direction = _parse_direction(str(opts.require("direction")))
    report = protocols.classify_projection(
        state,
        qubit,
        direction,
        ghz_witness=bool(opts.get("ghz_witness", False)),
        restarts=int(opts.get("restarts", 16)),
        seed=int(opts.get("seed", 0)),
    )
    payload = {
        "schema": serialization.schema_tag("projection-report"),
        "measured_qubit": report.measured_qubit,
        "direction": [[float(a.real), float(a.imag)] for a in direction.amplitudes],
        "probability": report.probability,
        "fidelity_to_reference": report.fidelity_to_reference,
        "reference_name": report.reference_name,
        "residual": serialization.state_to_dict(report.residual_state),
    }
    if report.ghz_verdict is not None:
        payload["ghz_witness"] = serialization.witness_verdict_to_dict(report.ghz_verdict)
    path = out / "projection_report.json"
    _check_overwrite(path, opts)
    serialization.write_json(path, payload)
    serialization.write_json(
        out / "projection_residual.json", serialization.state_to_dict(report.residual_state)
    )
    print(
        f"qubit {qubit}: probability {report.probability:.6f}, "
        f"fidelity to {report.reference_name}: {report.fidelity_to_reference:.6f}"
    )
    if report.ghz_verdict is not None:
        word = "ENTANGLED" if report.ghz_verdict.entangled else "INCONCLUSIVE"
        print(f"filtered GHZ witness: {report.ghz_verdict.value:+.5f} (bound 0)  {word}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_protocols(opts: _Options) -> int:
    out = _out_dir(opts)
    state = _load_state(opts, out)
    payload: dict = {"schema": serialization.schema_tag("protocols-report")}

    ran_any = False
    if opts.get("msf", False):
        rho = _as_density(state)
        report = protocols.maximal_singlet_fraction(rho)
        oracle = protocols.msf_optimization_oracle(rho, seed=int(opts.get("seed", 0)))
        payload["msf"] = {
            "value": report.value,
            "method": report.method,
            "oracle_value": oracle,
            "optimal_bell_state": serialization.pure_state_to_dict(report.optimal_bell_state),
        }
        print(f"maximal singlet fraction: {report.value:.6f} (oracle {oracle:.6f})")
        ran_any = True

    if opts.get("telecloning", False):
        if not isinstance(state, PureState):
            raise ValueError("telecloning simulation expects a pure resource state")
        report = protocols.telecloning_fidelities(
            state,
            n_samples=int(opts.get("samples", 338)),
            seed=int(opts.get("seed", 0)),
            sender=int(opts.get("sender", 0)),
        )
        payload["telecloning"] = {
            "average": report.average,
            "equatorial": report.equatorial,
            "receiver_average": list(report.receiver_average),
            "receiver_equatorial": list(report.receiver_equatorial),
            "channel_formula_average": report.channel_formula_average,
            "quoted_average": report.quoted_average,
            "matches_channel_formula": report.matches_channel_formula,
            "matches_quoted": report.matches_quoted,
        }
        print(
            f"telecloning average {report.average:.6f} "
            f"(channel formula {report.channel_formula_average:.6f}, quoted {report.quoted_average}), "
            f"equatorial {report.equatorial:.6f}"
        )
        which = "channel formula" if report.matches_channel_formula else (
            "quoted value" if report.matches_quoted else "neither reference"
        )
        print(f"average matches the {which}")
        ran_any = True

    if opts.get("odt", False):
        if not isinstance(state, PureState):
            raise ValueError("open-destination teleportation expects a pure resource state")
        measured_text = str(opts.get("measured", "2,3"))
        i, j = (int(v) for v in measured_text.split(","))
        basis = str(opts.get("basis", "ZZ")).upper()
        outcomes = protocols.odt_projection(state, (i, j), basis)
        payload["odt"] = {
            "measured": [i, j],
            "basis": basis,
            "outcomes": [
                {
                    "outcome": o.outcome,
                    "probability": o.probability,
                    "bell_fidelity": o.bell_fidelity,
                    "bell_name": o.bell_name,
                }
                for o in outcomes
            ],
        }
        print(f"ODT on qubits ({i},{j}) in {basis}:")
        for o in outcomes:
            if o.residual is None:
                print(f"  {o.outcome}: probability {o.probability:.6f} (no residual)")
            else:
                print(
                    f"  {o.outcome}: probability {o.probability:.6f}, "
                    f"best Bell {o.bell_name} fidelity {o.bell_fidelity:.6f}"
                )
        ran_any = True

    if not ran_any:
        raise ValueError("choose at least one of --msf, --telecloning, --odt")

    path = out / "protocols_report.json"
    _check_overwrite(path, opts)
    serialization.write_json(path, payload)
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "simulate": cmd_simulate,
    "tomo": cmd_tomo,
    "witness": cmd_witness,
    "project": cmd_project,
    "protocols": cmd_protocols,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _Options(args)
        return _COMMANDS[args.command](opts)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
