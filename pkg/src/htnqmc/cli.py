"""Command line entry point: ``htnqmc {run,sweep,oracle,gmr}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiment import (ExperimentError, build_model, resolve_decomposition, run_experiment,
                         sweep)
from .models import interaction_strength_gmr
from .oracle import (bipartite_entropy, ground_state, wavefunction_distribution,
                     write_distribution_csv)

DEFAULT_GMR_SETS = {"heisenberg": ("cluster", "even-odd"), "graphite": ("horizontal", "vertical")}


def _seeds(text: str) -> tuple[int, ...]:
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--seed", type=_seeds, help="seed list, e.g. 0,1,2 or 0-9 (overrides 'seeds')")
    p.add_argument("--out", help="output directory (overrides 'output_dir')")
    p.add_argument("--mode", help="vqe | htn_vqe | qmc | qc_qmc | htn_qmc")
    p.add_argument("--depth", type=int, help="ansatz depth")
    p.add_argument("--jinter", type=float, help="inter-cluster coupling of the Heisenberg chain")
    p.add_argument("--shots", type=int, help="Hadamard-test emulation shots (0 = exact)")
    p.add_argument("--workers", type=int, help="worker processes for seeds")
    p.add_argument("--model", help="heisenberg | graphite | file")
    p.add_argument("--decomposition", help="decomposition name or groups like 0,1,2,3;4,5,6,7")


def build_config(args) -> ExperimentConfig:
    overrides = dict(seeds=args.seed, output_dir=args.out, mode=args.mode, depth=args.depth,
                     j_inter=args.jinter, shots=args.shots, workers=args.workers,
                     model=args.model, decomposition=args.decomposition)
    if args.config is not None:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _print_rows(rows, columns) -> None:
    print("\t".join(columns))
    for r in rows:
        print("\t".join("" if r.get(c) is None else f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c])
                        for c in columns))


def cmd_run(args) -> int:
    cfg = build_config(args)
    rows = run_experiment(cfg)
    _print_rows(rows, ["seed", "delta_vqe", "fidelity", "e_mix_mean", "e_mix_std", "delta_qmc"])
    print(f"outputs written to {cfg.output_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    _, agg = sweep(cfg, args.axis, args.values)
    key = next(iter(agg[0]))
    _print_rows(agg, [key, "n_seeds", "delta_vqe_mean", "fidelity_mean", "delta_qmc_mean", "e_mix_std_mean"])
    return 0


def cmd_oracle(args) -> int:
    cfg = build_config(args)
    H = build_model(cfg)
    res = ground_state(H, cfg.electrons)
    print(f"qubits           {H.n_qubits}")
    print(f"ground energy    {res.energy:.10f}")
    print(f"degeneracy       {res.degeneracy}")
    mags = abs(res.state)
    print(f"single reference {int((mags >= mags.max() - 1e-10).argmax())}")
    for name in args.cuts or DEFAULT_GMR_SETS.get(cfg.model, ()):
        dec = resolve_decomposition(name, H.n_qubits)
        if dec.k >= 2:
            print(f"entropy[{name}]  {bipartite_entropy(res.state, dec.groups[0]):.6f}")
    if args.distribution:
        write_distribution_csv(wavefunction_distribution(res.state), args.distribution)
        print(f"distribution written to {args.distribution}")
    return 0


def cmd_gmr(args) -> int:
    cfg = build_config(args)
    H = build_model(cfg)
    names = args.decompositions or DEFAULT_GMR_SETS.get(cfg.model, ("cluster",))
    print("decomposition\tG_mr")
    for name in names:
        print(f"{name}\t{interaction_strength_gmr(H, resolve_decomposition(name, H.n_qubits)):.6f}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htnqmc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configured experiment")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run an experiment over one axis")
    _add_common(p)
    p.add_argument("--axis", required=True, help="j_inter | depth | decomposition | F")
    p.add_argument("--values", required=True, nargs="+", help="axis values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exact ground-state diagnostics")
    _add_common(p)
    p.add_argument("--cuts", nargs="+", help="decompositions whose first group defines an entropy cut")
    p.add_argument("--distribution", type=Path, help="write basis_index,abs_coefficient CSV here")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gmr", help="inter-subsystem interaction strength per decomposition")
    _add_common(p)
    p.add_argument("--decompositions", nargs="+")
    p.set_defaults(func=cmd_gmr)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
