"""Acceptance criteria, one test each.

Every test logs a ``CRITERION n: PASS|FAIL ...`` line (collected by
``conftest.py`` into the terminal summary) and then asserts the outcome.
Run directly with ``python tests/test_acceptance.py`` to print only the
criterion lines.
"""

import time

import numpy as np

from htnqmc.fciqmc import (DenseReference, HamiltonianTable, HtnReference, QmcConfig, SingleReference,
                           WalkerPopulation, annihilate, build_deviated_reference, death_clone_step,
                           run_fciqmc, spawn_step)
from htnqmc.htn import HtnState, expand_dense, transition_amplitude
from htnqmc.models import (Decomposition, build_graphite_hubbard, build_heisenberg_chain,
                           cluster_decomposition, even_odd_decomposition, interaction_strength_gmr,
                           named_decomposition)
from htnqmc.oracle import (bipartite_entropy, energy_stats, fidelity, ground_state,
                           single_reference_state, wavefunction_distribution)
from htnqmc.pauli import PauliSum
from htnqmc.vqe import OptimizerConfig, htn_vqe_minimize

from _dense import apply_pauli_sum, htn_dense

RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str, t0: float) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}  [{time.perf_counter() - t0:.1f} s]"
    RESULTS[n] = line
    print(line)
    assert ok, line


def heisenberg4():
    H = build_heisenberg_chain(1, 1.0)
    return H, ground_state(H), single_reference_state(H)


# 1 -------------------------------------------------------------------------------------------------

def test_criterion_01_interaction_strength():
    t0 = time.perf_counter()
    H = build_heisenberg_chain(2, 1.0)
    G = build_graphite_hubbard()
    got = {"cluster": interaction_strength_gmr(H, cluster_decomposition(2)),
           "even-odd": interaction_strength_gmr(H, even_odd_decomposition(8)),
           "horizontal": interaction_strength_gmr(G, named_decomposition("horizontal", 8)),
           "vertical": interaction_strength_gmr(G, named_decomposition("vertical", 8))}
    want = {"cluster": 1.50, "even-odd": 10.50, "horizontal": 0.02, "vertical": 0.65}
    ok = all(abs(got[k] - want[k]) <= 0.005 for k in want) and time.perf_counter() - t0 < 1
    report(1, ok, "G_mr " + ", ".join(f"{k}={got[k]:.4f}" for k in got), t0)


# 2 -------------------------------------------------------------------------------------------------

def test_criterion_02_entanglement_entropy():
    t0 = time.perf_counter()
    psi = ground_state(build_heisenberg_chain(2, 1.0)).state
    s_cluster = bipartite_entropy(psi, cluster_decomposition(2).groups[0])
    s_eo = bipartite_entropy(psi, even_odd_decomposition(8).groups[0])
    ok = abs(s_cluster - 0.66) <= 0.01 and abs(s_eo - 3.46) <= 0.01
    report(2, ok, f"entropy cluster={s_cluster:.4f} even-odd={s_eo:.4f}", t0)


# 3 -------------------------------------------------------------------------------------------------

def test_criterion_03_dominant_coefficients():
    t0 = time.perf_counter()
    psi = ground_state(build_heisenberg_chain(2, 1.0)).state
    mags = np.array([a for _, a in wavefunction_distribution(psi)])
    top = np.sort(mags)[::-1][:12]
    levels, counts = [], []
    for m in top:  # group magnitudes that agree to 1e-6
        if levels and abs(levels[-1] - m) < 1e-6:
            counts[-1] += 1
        else:
            levels.append(m)
            counts.append(1)
    ok = (counts == [2, 4, 2, 4]
          and all(abs(a - b) <= 0.01 for a, b in zip(levels, [0.37, 0.24, 0.23, 0.18])))
    report(3, ok, f"levels={[round(float(x), 4) for x in levels]} multiplicities={counts}", t0)


# 4 -------------------------------------------------------------------------------------------------

def test_criterion_04_zero_variance_estimator():
    t0 = time.perf_counter()
    H, g, h0 = heisenberg4()
    trace = run_fciqmc(H, DenseReference(g.state), QmcConfig(seed=0, initial_state=h0))
    dev = np.max(np.abs(trace.e_mix - g.energy))
    ok = bool(trace.e_mix_valid.all()) and len(trace) == 10_001 and dev <= 1e-10
    report(4, ok, f"max |E_mix - E_g| = {dev:.2e} over {len(trace) - 1} iterations", t0)


# 5 -------------------------------------------------------------------------------------------------

def test_criterion_05_single_reference_fciqmc():
    t0 = time.perf_counter()
    H, g, h0 = heisenberg4()
    errors = []
    for seed in range(10):
        trace = run_fciqmc(H, SingleReference(4, h0), QmcConfig(seed=seed, initial_state=h0))
        errors.append(energy_stats(trace, (5000, 10000), g.energy).abs_error)
    n_ok = sum(e <= 1e-2 for e in errors)
    report(5, n_ok >= 8, f"{n_ok}/10 seeds within 1e-2 Ha; errors={[round(e, 4) for e in errors]}", t0)


# 6 -------------------------------------------------------------------------------------------------

def test_criterion_06_htn_reference_improves_fciqmc():
    t0 = time.perf_counter()
    H = build_heisenberg_chain(2, 1.0)
    g = ground_state(H)
    h0 = single_reference_state(H)
    s0 = HtnState.zeros(cluster_decomposition(2), 4)
    fits = [htn_vqe_minimize(H, s0, OptimizerConfig(seed=s)) for s in range(10)]
    best = min(fits, key=lambda r: r.energy)
    fid = fidelity(expand_dense(best.htn_state), g.state)
    htn_err, single_err = [], []
    for seed in range(10):
        cfg = QmcConfig(seed=seed, initial_state=h0)
        tr = run_fciqmc(H, HtnReference(best.htn_state), cfg)
        htn_err.append(energy_stats(tr, cfg.window, g.energy).abs_error)
        tr = run_fciqmc(H, SingleReference(8, h0), cfg)
        single_err.append(energy_stats(tr, cfg.window, g.energy).abs_error)
    m_htn, m_single = float(np.mean(htn_err)), float(np.mean(single_err))
    ok = fid >= 0.85 and m_htn <= 5e-2 and m_htn <= m_single / 5
    report(6, ok, f"fidelity={fid:.4f}; mean error over 10 seeds HTN+QMC={m_htn:.4f} "
                  f"single-reference QMC={m_single:.4f} ratio={m_single / m_htn:.1f}", t0)


# 7 -------------------------------------------------------------------------------------------------

def test_criterion_07_decoupled_graphite():
    t0 = time.perf_counter()
    H = build_graphite_hubbard(t2=0.0)
    g = ground_state(H)
    s0 = HtnState.zeros(named_decomposition("horizontal", 8), 4)
    fids = [fidelity(expand_dense(htn_vqe_minimize(H, s0, OptimizerConfig(seed=s)).htn_state), g.state)
            for s in range(4)]
    report(7, max(fids) >= 0.999, f"best fidelity {max(fids):.6f} over seeds 0-3 {[round(f, 6) for f in fids]}", t0)


# 8 -------------------------------------------------------------------------------------------------

def test_criterion_08_contraction_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    decs = {6: [cluster_decomposition(2, 3), Decomposition(((0, 2, 4), (1, 3, 5)))],
            8: [cluster_decomposition(2), even_odd_decomposition(8), cluster_decomposition(4, 2)],
            12: [cluster_decomposition(3), cluster_decomposition(2, 6), Decomposition(((0, 3, 6, 9),
                                                                                      (1, 4, 7, 10),
                                                                                      (2, 5, 8, 11)))]}
    worst, count = 0.0, 0
    for nk, options in decs.items():
        for _ in range(200):
            dec = options[rng.integers(len(options))]
            depth = int(rng.integers(0, 4))
            size = HtnState.n_params_for(dec, depth)
            bra = HtnState.from_vector(dec, depth, rng.uniform(0, 2 * np.pi, size), int(rng.integers(1 << nk)))
            ket = HtnState.from_vector(dec, depth, rng.uniform(0, 2 * np.pi, size), int(rng.integers(1 << nk)))
            terms = [(float(rng.normal()), "".join(rng.choice(list("IXYZ"), nk))) for _ in range(4)]
            O = PauliSum(nk, terms)
            vb, vk = (htn_dense(s.dec.groups, depth, s.lower_params, s.upper_params,
                                [s.local_mask(m) for m in range(dec.k)]) for s in (bra, ket))
            want = np.vdot(vb, apply_pauli_sum(O.terms, nk, vk))
            worst = max(worst, abs(transition_amplitude(bra, ket, O) - want))
            count += 1
    report(8, worst <= 1e-10, f"{count} triples at nk in {{6, 8, 12}}, max deviation {worst:.2e}", t0)


# 9 -------------------------------------------------------------------------------------------------

def _drift_check(toy_terms, m, w0, shift, dtau, extra=20, seed=0):
    """One engine iteration on 2^extra independent copies of an m-qubit toy Hamiltonian.

    ``toy_terms`` act on the low ``m`` qubits; the identity on the ``extra``
    high qubits makes every copy an independent trial.  Returns the largest
    deviation of the mean change from ``-dtau (H - S) w0`` in units of its
    standard error.
    """
    n = m + extra
    H = PauliSum(n, [(c, s + "I" * extra) for c, s in toy_terms])
    table = HamiltonianTable(H)
    copies = 1 << extra
    toy_idx = np.flatnonzero(w0)
    idx = (np.arange(copies)[:, None] << m | toy_idx[None, :]).ravel()
    cnt = np.tile(np.asarray(w0)[toy_idx], copies).astype(np.int64)
    pop = WalkerPopulation.from_arrays(idx, cnt)
    rng = np.random.default_rng(seed)
    new = annihilate(pop, spawn_step(pop, table, dtau, rng), death_clone_step(pop, table, shift, dtau, rng))
    change = (new.to_dense(1 << n) - pop.to_dense(1 << n)).reshape(copies, 1 << m)
    Htoy = PauliSum(m, toy_terms).to_dense()
    expect = -dtau * (Htoy - shift * np.eye(1 << m)) @ np.asarray(w0, float)
    se = change.std(axis=0, ddof=1) / np.sqrt(copies)
    z = np.where(se > 0, np.abs(change.mean(axis=0) - expect) / np.where(se > 0, se, 1), 0.0)
    exact_where_zero = np.all(np.abs(change.mean(axis=0) - expect)[se == 0] <= 1e-12)
    return float(z.max()), bool(exact_where_zero), copies


def test_criterion_09_one_step_drift():
    t0 = time.perf_counter()
    cases = [
        # 2-basis toy [[0, -t], [-t, 0]] with t dtau = 1.7 (exercises the multi-spawn rule)
        ("2-basis hopping", [(-1.7, "X")], 1, [3, -2], 0.0, 1.0),
        ("2-basis general", [(-0.8, "X"), (0.6, "Z")], 1, [5, 1], -0.3, 0.5),
        # 4-basis toy with death and cloning above one event per walker
        ("4-basis", [(-0.9, "XI"), (0.4, "IX"), (-0.5, "XX"), (0.3, "YY"), (1.2, "ZI"), (-0.7, "ZZ")],
         2, [4, -1, 0, 2], 0.2, 1.3),
    ]
    parts, ok = [], True
    for k, (name, terms, m, w0, shift, dtau) in enumerate(cases):
        z, exact_ok, copies = _drift_check(terms, m, w0, shift, dtau, seed=k)
        ok = ok and z <= 3.0 and exact_ok
        parts.append(f"{name}: max z={z:.2f}")
    report(9, ok, f"{copies} repetitions each; " + "; ".join(parts), t0)


# 10 ------------------------------------------------------------------------------------------------

def test_criterion_10_variance_falls_with_fidelity():
    t0 = time.perf_counter()
    H, g, h0 = heisenberg4()
    Fs = (0.7, 0.9, 0.99)
    decreasing = 0
    table = []
    for seed in range(10):
        stds = []
        for F in Fs:
            ref = build_deviated_reference(g.state, F, seed)
            cfg = QmcConfig(seed=seed, initial_state=h0)
            stds.append(energy_stats(run_fciqmc(H, ref, cfg), cfg.window).std)
        table.append([round(s, 4) for s in stds])
        decreasing += stds[0] > stds[1] > stds[2]
    report(10, decreasing >= 8, f"{decreasing}/10 seeds strictly decreasing; std(F=0.7,0.9,0.99)={table}", t0)


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
