"""Run configured experiments and write traces, summaries and a manifest."""

from __future__ import annotations

import csv
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from .config import ExperimentConfig, config_from_dict, dumps_config
from .fciqmc import (DenseReference, HtnReference, QmcConfig, SingleReference,
                     build_deviated_reference, run_fciqmc, write_trace_csv)
from .htn import HtnState, expand_dense, transition_amplitude
from .models import (Decomposition, build_graphite_hubbard, build_heisenberg_chain,
                     interaction_strength_gmr, named_decomposition)
from .oracle import bipartite_entropy, energy_stats, fidelity, ground_state
from .pauli import PauliSum, load_hamiltonian_file
from .statevector import apply_circuit, basis_state, real_amplitude_ansatz
from .vqe import OptimizerConfig, htn_vqe_minimize, number_penalty, vqe_minimize

logger = logging.getLogger(__name__)

SUMMARY_FIELDS = [
    "seed", "mode", "model", "decomposition", "depth", "j_inter", "deviation_f",
    "e_exact", "e_vqe", "delta_vqe", "fidelity", "e_vqe_sampled",
    "e_mix_mean", "e_mix_std", "delta_qmc", "n_valid", "n_invalid", "final_walkers",
    "initial_state", "gmr", "entropy_exact", "entropy_reference", "elapsed_s",
]
SWEEP_AXES = {"j_inter": "j_inter", "jinter": "j_inter", "depth": "depth",
              "decomposition": "decomposition", "f": "deviation_f", "deviation_f": "deviation_f"}
AGG_COLUMNS = ["delta_vqe", "fidelity", "e_mix_mean", "e_mix_std", "delta_qmc"]


class ExperimentError(RuntimeError):
    pass


def build_model(cfg: ExperimentConfig) -> PauliSum:
    if cfg.model == "heisenberg":
        return build_heisenberg_chain(cfg.k, cfg.j_inter)
    if cfg.model == "graphite":
        return build_graphite_hubbard(cfg.t1, cfg.t2, cfg.u)
    return load_hamiltonian_file(cfg.hamiltonian_file)


def resolve_decomposition(text: str, n_qubits: int) -> Decomposition:
    """A decomposition name, or explicit groups such as ``0,1,2,3;4,5,6,7``."""
    return named_decomposition(text, n_qubits)


@dataclass
class SeedResult:
    row: dict
    vqe_trace: list | None = None
    qmc_trace: object = None
    params: list | None = None


def _entropy(psi: np.ndarray, dec: Decomposition) -> float | None:
    if dec.k < 2:
        return None
    return bipartite_entropy(psi, dec.groups[0])


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedResult:
    """One seed of ``cfg``: variational step (if any), QMC step (if any), diagnostics."""
    t0 = time.perf_counter()
    H = build_model(cfg)
    n = H.n_qubits
    exact = ground_state(H, cfg.electrons)
    dec = None
    if cfg.decomposition.strip().lower() not in ("", "none"):
        dec = resolve_decomposition(cfg.decomposition, n)
    row = {key: None for key in SUMMARY_FIELDS}
    row.update(seed=seed, mode=cfg.mode, model=cfg.model, depth=cfg.depth, j_inter=cfg.j_inter,
               deviation_f=cfg.deviation_f, e_exact=exact.energy,
               decomposition=dec.name if dec is not None and dec.name != "custom" else cfg.decomposition)
    if dec is not None:
        row["gmr"] = interaction_strength_gmr(H, dec)
        row["entropy_exact"] = _entropy(exact.state, dec)
    out = SeedResult(row)

    H_opt = number_penalty(H, cfg.electrons, cfg.penalty) if cfg.penalty > 0 else H
    opt = OptimizerConfig(method=cfg.optimizer, maxiter=cfg.maxiter, tol=cfg.tol, seed=seed,
                          init_low=cfg.init_low, init_high=cfg.init_high, schedule=cfg.schedule)
    ref_state = None
    reference = None
    if cfg.mode in ("vqe", "qc_qmc"):
        circuit = real_amplitude_ansatz(n, cfg.depth)
        res = vqe_minimize(H_opt, circuit, opt)
        ref_state = apply_circuit(circuit, res.params, basis_state(n, 0))
        reference = DenseReference(ref_state, label="vqe")
    elif cfg.mode in ("htn_vqe", "htn_qmc"):
        res = htn_vqe_minimize(H_opt, HtnState.zeros(dec, cfg.depth), opt)
        ref_state = expand_dense(res.htn_state)
        reference = HtnReference(res.htn_state)
        if cfg.shots:
            rng = np.random.default_rng(seed)
            row["e_vqe_sampled"] = transition_amplitude(res.htn_state, res.htn_state, H, cfg.shots,
                                                        rng, real_only=True).real
    if ref_state is not None:
        e_var = float(ref_state @ (H.to_sparse() @ ref_state))
        row.update(e_vqe=e_var, delta_vqe=abs(e_var - exact.energy),
                   fidelity=fidelity(ref_state, exact.state))
        if dec is not None:
            row["entropy_reference"] = _entropy(ref_state, dec)
        out.vqe_trace = res.trace
        out.params = res.params.tolist()

    if cfg.mode in ("qmc", "qc_qmc", "htn_qmc"):
        mags = np.abs(exact.state)
        h0 = int(np.flatnonzero(mags >= mags.max() - 1e-10)[0])
        if cfg.mode == "qmc":
            if cfg.deviation_f is None:
                reference = SingleReference(n, h0)
                row["fidelity"] = fidelity(basis_state(n, h0), exact.state)
            else:
                reference = build_deviated_reference(exact.state, cfg.deviation_f, seed)
                row["fidelity"] = fidelity(reference.state, exact.state)
        qcfg = QmcConfig(dtau=cfg.dtau, max_iter=cfg.max_iter, n_shift=cfg.n_shift,
                         shift_interval=cfg.shift_interval, damping=cfg.damping,
                         window=(cfg.window_start, cfg.window_end), seed=seed,
                         initial_state=h0, spawn_mode=cfg.spawn_mode,
                         max_invalid_streak=cfg.max_invalid_streak)
        trace = run_fciqmc(H, reference, qcfg)
        stats = energy_stats(trace, qcfg.window, exact.energy)
        row.update(e_mix_mean=stats.mean, e_mix_std=stats.std, delta_qmc=stats.abs_error,
                   n_valid=stats.n_valid, n_invalid=stats.n_invalid,
                   final_walkers=int(trace.n_walkers[-1]), initial_state=h0)
        out.qmc_trace = trace
    row["elapsed_s"] = round(time.perf_counter() - t0, 3)
    return out


def _run_seed_safe(cfg: ExperimentConfig, seed: int) -> SeedResult:
    try:
        return run_seed(cfg, seed)
    except Exception as exc:
        raise ExperimentError(f"mode={cfg.mode} model={cfg.model} seed={seed}: {exc}") from exc


def _map(cfg: ExperimentConfig, jobs: list[tuple[ExperimentConfig, int]]) -> list[SeedResult]:
    if cfg.workers == 1 or len(jobs) == 1:
        return [_run_seed_safe(c, s) for c, s in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_run_seed_safe, *zip(*jobs)))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(rows: list[dict], path, fields: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=fields)
        wr.writeheader()
        for r in rows:
            wr.writerow({f: _fmt(r.get(f)) for f in fields})


def _versions() -> dict:
    from . import __version__
    import sklearn
    return {"htnqmc": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__, "python": platform.python_version()}


def _write_seed_outputs(out_dir: Path, res: SeedResult) -> dict:
    seed = res.row["seed"]
    files = {}
    if res.qmc_trace is not None:
        name = f"trace_seed{seed}.csv"
        write_trace_csv(res.qmc_trace, out_dir / name)
        files["qmc_trace"] = name
    if res.vqe_trace is not None:
        name = f"vqe_seed{seed}.csv"
        write_rows([{"iteration": i, "energy": e} for i, e in enumerate(res.vqe_trace)],
                   out_dir / name, ["iteration", "energy"])
        files["vqe_trace"] = name
    return files


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run every seed of ``cfg`` and write its outputs to ``cfg.output_dir``.

    Files: ``trace_seed<s>.csv`` (QMC modes), ``vqe_seed<s>.csv``
    (variational modes), ``summary.csv`` and ``manifest.json``.  Returns the
    summary rows.
    """
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _map(cfg, [(cfg, s) for s in cfg.seeds])
    seeds = {}
    for res in results:
        files = _write_seed_outputs(out_dir, res)
        seeds[str(res.row["seed"])] = {"files": files, "params": res.params}
    rows = [r.row for r in results]
    write_rows(rows, out_dir / "summary.csv", SUMMARY_FIELDS)
    manifest = {"config": cfg.to_dict(), "config_text": dumps_config(cfg), "versions": _versions(),
                "summary": "summary.csv", "seeds": seeds}
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return rows


def rerun_from_manifest(path, seed: int) -> dict:
    """Recompute one summary row from a manifest (the run is deterministic given its config)."""
    with open(path) as fh:
        manifest = json.load(fh)
    cfg = config_from_dict(manifest["config"])
    return run_seed(cfg, seed).row


def _axis_value(axis: str, text):
    if axis == "decomposition":
        return str(text)
    if axis == "depth":
        return int(text)
    return float(text)


def aggregate(rows: list[dict], axis: str) -> list[dict]:
    """Mean and population std over seeds of the main columns for each axis value."""
    out = []
    keys = list(dict.fromkeys(r[axis] for r in rows))
    for key in keys:
        group = [r for r in rows if r[axis] == key]
        agg = {axis: key, "n_seeds": len(group)}
        for col in AGG_COLUMNS:
            vals = np.array([r[col] for r in group if r.get(col) is not None], dtype=float)
            agg[f"{col}_mean"] = float(vals.mean()) if vals.size else None
            agg[f"{col}_std"] = float(vals.std()) if vals.size else None
        out.append(agg)
    return out


def sweep(cfg: ExperimentConfig, axis: str, values) -> tuple[list[dict], list[dict]]:
    """Run ``cfg`` at each axis value; write ``sweep_rows.csv`` and ``sweep_aggregate.csv``.

    Each point gets its own sub-directory with the usual per-run outputs.
    """
    key = SWEEP_AXES.get(axis.lower())
    if key is None:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {sorted(set(SWEEP_AXES.values()))}")
    values = [_axis_value(key, v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one axis value")
    root = Path(cfg.output_dir)
    rows = []
    for val in values:
        point = cfg.replace(**{key: val, "output_dir": str(root / f"{key}={val}")})
        rows += run_experiment(point)
    root.mkdir(parents=True, exist_ok=True)
    write_rows(rows, root / "sweep_rows.csv", SUMMARY_FIELDS)
    agg = aggregate(rows, key)
    fields = [key, "n_seeds"] + [f"{c}_{s}" for c in AGG_COLUMNS for s in ("mean", "std")]
    write_rows(agg, root / "sweep_aggregate.csv", fields)
    return rows, agg
