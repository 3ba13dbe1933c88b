"""Command-line entry point: ``novqe {grow,measure,fci,info}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from novqe.ansatz import hf_reference
from novqe.driver import (
    ConfigError,
    ExperimentConfig,
    SubspaceCheckpoint,
    System,
    grow_subspace,
    resolve_fixture,
    run_measurement_experiment,
    summary_record,
)
from novqe.hamiltonian import one_norm
from novqe.simulator import expectation, prepare_basis
from novqe.uncertainty import write_trajectory_csv

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_ALIASES = {"m_max": "M_max", "init_sigma": "init_sigma2"}


def _convert(key: str, raw: str):
    field = _FIELDS[key]
    kind = str(field.type)
    if "bool" in kind:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if "int" in kind:
        return int(float(raw))
    if "float" in kind:
        return float(raw)
    return raw.strip()


def read_config_file(path: str | Path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}, line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if key not in _FIELDS:
            raise ConfigError(f"{path}, line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw.strip('"').strip("'"))
    return values


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="novqe", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="random seed (required)")
        p.add_argument("--cutoff", type=float)

    grow = sub.add_parser("grow", help="grow and optimize a subspace of ansatz states")
    common(grow)
    grow.add_argument("--fixture", help="FCIDUMP path or shipped fixture name")
    grow.add_argument("--k", type=int)
    grow.add_argument("--m-max", dest="M_max", type=int)
    grow.add_argument("--init-sigma2", type=float)
    grow.add_argument("--fd-step", type=float)
    grow.add_argument("--max-calls", type=int)

    measure = sub.add_parser("measure", help="compare measurement schedules on a checkpoint")
    common(measure)
    measure.add_argument("--checkpoint", help="checkpoint.json from 'grow'")
    measure.add_argument("--mode", choices=["adaptive", "nonadaptive"], default=None)
    measure.add_argument("--budget", type=int)
    measure.add_argument("--batch", type=int)
    measure.add_argument("--n-boot", type=int)
    measure.add_argument("--zero-noise", action="store_true", default=None)

    fci = sub.add_parser("fci", help="sector-restricted ground energy of a fixture")
    fci.add_argument("fixture")

    info = sub.add_parser("info", help="describe a fixture")
    info.add_argument("fixture")
    return parser


def _config(args, mode_default: str) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in _FIELDS and value is not None:
            values[key] = value
    if args.command == "measure":
        mode = values.get("mode", "adaptive")
        values["mode"] = mode if mode.startswith("measurement-") else f"measurement-{mode}"
    else:
        values["mode"] = mode_default
    return ExperimentConfig(**values)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _load_system(parser, fixture: str) -> System:
    if resolve_fixture(fixture) is None:
        parser.error(f"fixture: {fixture!r} not found")
    return System.load(fixture)


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "fci":
        system = _load_system(parser, args.fixture)
        print(f"{system.fci_energy():.12f}")
        return 0

    if args.command == "info":
        system = _load_system(parser, args.fixture)
        ints = system.ints
        hf = prepare_basis(ints.n_qubits, hf_reference(ints.n_spatial, ints.n_alpha, ints.n_beta))
        print(f"orbitals      {ints.n_spatial}")
        print(f"electrons     {ints.n_alpha} alpha, {ints.n_beta} beta")
        print(f"qubits        {ints.n_qubits}")
        print(f"pauli terms   {len(system.ham)}")
        print(f"one-norm      {one_norm(system.ham):.10f}")
        print(f"E_HF          {expectation(hf, system.ham):.12f}")
        print(f"E_FCI         {system.fci_energy():.12f}")
        return 0

    try:
        config = _config(args, "exact-growth")
    except (ConfigError, TypeError, ValueError) as exc:
        parser.error(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "grow":
        system = System.load(config.fixture)
        checkpoint = grow_subspace(config, system)
        checkpoint.save(out / "checkpoint.json")
        fci = system.fci_energy()
        _write_json(out / "summary.json", summary_record(
            config,
            energies=checkpoint.energy_trace,
            final_energy=checkpoint.final_energy,
            fci_energy=fci,
            error=checkpoint.final_energy - fci,
            retries=checkpoint.retries,
        ))
        print(f"final energy {checkpoint.final_energy:.12f}  error vs FCI {checkpoint.final_energy - fci:.3e}")
        return 0

    try:
        checkpoint = SubspaceCheckpoint.load(config.checkpoint)
    except FileNotFoundError:
        parser.error(f"checkpoint: {config.checkpoint!r} not found")
    system = System.load(checkpoint.fixture)
    result = run_measurement_experiment(config, checkpoint, system)
    write_trajectory_csv(result.rows, out / "trajectory.csv")
    last = result.rows[-1]
    fit = result.fit
    _write_json(out / "summary.json", summary_record(
        config,
        checkpoint_energy=checkpoint.final_energy,
        subspace_energy=result.subspace_energy,
        final_estimate=last.estimate_energy,
        final_two_sigma=last.two_sigma,
        total_shots=last.total_shots,
        kappa=fit.kappa if fit else None,
        kappa_window=list(fit.window) if fit else None,
        kappa_relative_residual=fit.relative_residual if fit else None,
        kappa_vqe_reference=result.sigma_H**2,
        sigma_H=result.sigma_H,
        sigma_S=result.sigma_S,
        variance_bound="coefficient one-norm (identity excluded); overlap sigma 1",
        pilot_shots_per_element=config.batch,
    ))
    kappa = f"{fit.kappa:.4g}" if fit else "n/a"
    print(f"final estimate {last.estimate_energy:.10f} +/- {last.two_sigma:.3e} (2 sigma); kappa {kappa}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
