"""Experiment command line.

Every subcommand takes --seed (required; there is no wall-clock
seeding), --out-dir, and --threads, writes its data as CSV plus a JSON
run manifest, and self-checks its summary numbers against the shipped
expectations table when run at the default configuration. Exit codes:
0 success, 2 expectation-check failure, 1 error.

A config file (--config, `key = value` per line, keys mirror the long
flags) supplies defaults; explicit flags win. Re-running a command with
the config recorded in its manifest reproduces the CSV outputs
byte-for-byte on the same platform.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, rng
from .baselines import (bootstrap_samples, convex_combination_samples, fit_gmm_pca,
                        gaussian_perturb_samples, gmm_pca_samples,
                        isotropic_gaussian_control, matched_gaussian_control)
from .dataio import (Alignment, filter_alignment, load_idx_images,
                     load_idx_labels, one_hot_decode, one_hot_encode, parse_stockholm,
                     read_csv_matrix, select_class, write_csv)
from .memory import (MemoryMatrix, fit_pca, make_random_sphere_memory,
                     memory_from_columns, normalize_columns, pca_project,
                     pca_reconstruct)
from .metrics import (acf, aa_counts, categorical_kl, concentration_from_entropy,
                      diversity, frechet_diagonal, ks_two_sample, max_cos,
                      mean_energy, mi_correlation, mi_matrix, novelty,
                      per_position_kl, sequence_identity, summarize,
                      white_noise_band)
from .sampler import (SampleSet, SamplerConfig, run_beta_grid, run_mala,
                      run_multihead, run_ula, run_warm_start_sequential)
from .temperature import default_probes, entropy_curve, find_beta_star, snr, snr_star

MNIST_HINT = ("MNIST IDX files not found. Download train-images-idx3-ubyte and "
              "train-labels-idx1-ubyte (optionally .gz) from an MNIST mirror and "
              "pass them with --images/--labels; this tool does not download data.")
PFAM_HINT = ("Stockholm file not found. Download the PF00076 seed alignment from "
             "Pfam/InterPro and pass it with --stockholm; this tool does not "
             "download data.")


# ---------------------------------------------------------------------------
# plumbing

def _expectations():
    rows = []
    text = importlib.resources.files("salab").joinpath("expectations.csv").read_text()
    for line in text.strip().split("\n")[1:]:
        command, metric, target, tol, prov = line.split(",")
        rows.append(dict(command=command, metric=metric, target=float(target),
                         tolerance=float(tol), provenance=prov))
    return rows


def _run_checks(command: str, summary: dict, enabled: bool) -> list:
    checks = []
    for row in _expectations():
        if row["command"] != command or row["metric"] not in summary:
            continue
        value = float(summary[row["metric"]])
        passed = abs(value - row["target"]) <= row["tolerance"]
        checks.append(dict(metric=row["metric"], value=value, target=row["target"],
                           tolerance=row["tolerance"], provenance=row["provenance"],
                           passed=bool(passed), evaluated=bool(enabled)))
    return checks


class Runner:
    """Shared output/manifest/check handling for one subcommand run."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.out = Path(args.out_dir if args.out_dir else os.path.join("runs", command))
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.t0 = time.time()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(name)
        return p

    def finish(self, config: dict, summary: dict, default_config: bool) -> int:
        checks = _run_checks(self.command, summary, default_config)
        manifest = dict(
            command=self.command,
            version=__version__,
            seed=self.args.seed,
            config=config,
            wall_time_s=round(time.time() - self.t0, 3),
            outputs=self.outputs,
            summary={k: _jsonable(v) for k, v in summary.items()},
            checks=checks,
            checks_evaluated=bool(default_config),
        )
        tmp = self.out / "manifest.json.tmp"
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, self.out / "manifest.json")
        failed = [c for c in checks if default_config and not c["passed"]]
        for c in checks:
            if not default_config:
                break
            tag = "PASS" if c["passed"] else "FAIL"
            print("[%s] %s: %.6g (target %g +/- %g, %s)"
                  % (tag, c["metric"], c["value"], c["target"], c["tolerance"],
                     c["provenance"]))
        if failed:
            print("%d expectation check(s) failed" % len(failed), file=sys.stderr)
            return 2
        return 0


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _parallel_map(fn, items, threads: int):
    """Ordered map; thread count changes scheduling only, never results."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _parse_floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x != ""]


def _parse_ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x != ""]


def _require_file(path, hint: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError("%s: %s" % (p, hint))
    return p


def _mnist_memory(args, count: int | None = None):
    """(memory, looks_like_mnist_train); the flag gates data-dependent
    self-checks so other image sets run check-free at default params."""
    images = load_idx_images(_require_file(args.images, MNIST_HINT))
    labels = load_idx_labels(_require_file(args.labels, MNIST_HINT))
    mem = select_class(images, labels, args.digit, count or args.k)
    looks_real = images.count == 60000 and images.rows == 28 and images.cols == 28
    return mem, looks_real


def _sample_csv(runner: Runner, name: str, ss: SampleSet) -> None:
    header, rows = ss.to_rows()
    write_csv(runner.path(name), rows, header=header)


def _chain_metrics(mem: MemoryMatrix, ss: SampleSet, beta: float) -> dict:
    """Per-chain novelty/energy/max-cos summaries plus pooled diversity.

    Point metrics aggregate chain means; diversity is pooled over all
    samples with a delete-one-chain jackknife SE.
    """
    nov, en, mc = [], [], []
    for _, idx in ss.by_chain():
        block = ss.samples[idx]
        nov.append(np.mean([novelty(mem, s) for s in block]))
        mc.append(np.mean([max_cos(mem, s) for s in block]))
        en.append(mean_energy(mem, block, beta))
    div = diversity(ss.samples)
    chains = [idx for _, idx in ss.by_chain()]
    if len(chains) > 1:
        loo = [diversity(np.delete(ss.samples, idx, axis=0)) for idx in chains]
        n = len(loo)
        div_se = float(np.sqrt((n - 1) / n * np.sum((np.asarray(loo) - np.mean(loo)) ** 2)))
    else:
        div_se = 0.0
    return dict(novelty=summarize("novelty", nov),
                energy=summarize("energy", en),
                max_cos=summarize("max_cos", mc),
                diversity=div, diversity_se=div_se)


def _table_row(method: str, beta, m: dict, acceptance=""):
    return [method, beta,
            m["novelty"].mean, m["novelty"].se,
            m["diversity"], m["diversity_se"],
            m["energy"].mean, m["energy"].se,
            m["max_cos"].mean, m["max_cos"].se,
            acceptance]


_TABLE_HEADER = ["method", "beta", "novelty", "novelty_se", "diversity",
                 "diversity_se", "energy", "energy_se", "max_cos", "max_cos_se",
                 "acceptance"]


# ---------------------------------------------------------------------------
# synthetic-data commands

def cmd_spectrum(args) -> int:
    runner = Runner(args, "spectrum")
    mem = make_random_sphere_memory(args.d, args.k, rng.derive(args.seed, rng.DATASET))
    betas = np.logspace(np.log10(args.beta_min), np.log10(args.beta_max), args.beta_count)
    cfg = SamplerConfig(beta=1.0, step_size=args.alpha, steps=args.steps,
                        burn_in=args.burn_in, thin=args.steps - args.burn_in,
                        chains=1, seed=args.seed)
    trajs, _ = run_beta_grid(mem, cfg, betas)
    b = args.burn_in
    rows = []
    for beta, tr in zip(betas, trajs):
        mc, h = tr.max_cos[b + 1:], tr.entropies[b + 1:]
        rows.append([beta, mc.mean(), h.mean(), mc.var(), h.var()])
    table = np.array(rows)
    write_csv(runner.path("spectrum.csv"), table,
              header=["beta", "mean_max_cos", "mean_entropy", "var_max_cos",
                      "var_entropy"])

    beyond = table[table[:, 0] >= 25.0]
    summary = dict(
        low_beta_entropy=table[0, 2],
        low_beta_max_cos=table[0, 1],
        high_beta_max_cos=table[-1, 1],
        entropy_beyond_beta_25=float(beyond[:, 2].max()) if beyond.size else float("nan"),
        entropy_variance_peak_beta=float(table[np.argmax(table[:, 4]), 0]),
    )
    default = (args.d, args.k, args.beta_min, args.beta_max, args.beta_count,
               args.alpha, args.steps, args.burn_in) == (64, 16, 1e-2, 1e3, 25,
                                                         0.01, 10000, 2000)
    return runner.finish(_config_dict(args), summary, default)


def cmd_converge(args) -> int:
    runner = Runner(args, "converge")
    mem = make_random_sphere_memory(args.d, args.k, rng.derive(args.seed, rng.DATASET))
    cfg = SamplerConfig(beta=args.beta, step_size=args.alpha, steps=args.steps,
                        burn_in=args.burn_in, thin=args.steps - args.burn_in,
                        chains=args.chains, seed=args.seed)
    trajs, _ = run_ula(mem, cfg)
    ref_cfg = SamplerConfig(beta=args.beta, step_size=args.alpha, steps=args.ref_steps,
                            burn_in=args.ref_burn_in,
                            thin=args.ref_steps - args.ref_burn_in, chains=1,
                            seed=rng.derive(args.seed, rng.DATASET, 1))
    ref, _ = run_ula(mem, ref_cfg)

    rows = []
    for tr in trajs:
        for step, e in enumerate(tr.energies[args.burn_in + 1:], args.burn_in + 1):
            rows.append([tr.chain, step, e])
    write_csv(runner.path("chain_energies.csv"), np.array(rows),
              header=["chain", "step", "energy"])
    ref_e = ref[0].energies[args.ref_burn_in + 1:]
    write_csv(runner.path("reference_energies.csv"),
              np.column_stack([np.arange(args.ref_burn_in + 1, args.ref_steps + 1),
                               ref_e]),
              header=["step", "energy"])

    pooled = np.concatenate([tr.energies[args.burn_in + 1:] for tr in trajs])
    stat, p = ks_two_sample(pooled, ref_e)
    chain_means = np.array([tr.energies[args.burn_in + 1:].mean() for tr in trajs])
    pooled_mean = float(pooled.mean())
    # stuck-chain diagnostic: worst chain-mean deviation in units of the
    # chain-mean spread (an equilibrated run sits well below 3)
    sd = float(chain_means.std(ddof=1))
    within = float(np.max(np.abs(chain_means - pooled_mean)) / sd) if sd > 0 else 0.0
    write_csv(runner.path("summary.csv"),
              [[stat, p, pooled_mean, sd, within]],
              header=["ks_statistic", "ks_p_value", "pooled_mean_energy",
                      "sd_across_chains", "max_chain_dev_in_sd"])

    summary = dict(ks_statistic=stat, ks_p_value=p, pooled_mean_energy=pooled_mean,
                   max_chain_dev_in_sd=within)
    default = (args.d, args.k, args.beta, args.chains, args.steps, args.burn_in,
               args.ref_steps, args.ref_burn_in) == (8, 4, 5.0, 8, 20000, 5000,
                                                     200000, 50000)
    return runner.finish(_config_dict(args), summary, default)


def cmd_phase_diagram(args) -> int:
    runner = Runner(args, "phase-diagram")
    loads = np.linspace(args.load_min, args.load_max, args.load_count)
    betas = np.logspace(np.log10(args.beta_min), np.log10(args.beta_max),
                        args.beta_count)

    def one_cell(task):
        i_load, i_ds = task
        k = max(1, int(round(loads[i_load] * args.d)))
        mem = make_random_sphere_memory(
            args.d, k, rng.derive(args.seed, rng.DATASET, i_load, i_ds))
        cfg = SamplerConfig(beta=1.0, step_size=args.alpha, steps=args.steps,
                            burn_in=args.burn_in, thin=args.steps - args.burn_in,
                            seed=rng.derive(args.seed, i_load, i_ds))
        trajs, _ = run_beta_grid(mem, cfg, betas)
        conc = [concentration_from_entropy(
            tr.entropies[args.burn_in + 1:], k).mean() for tr in trajs]
        return k, np.array(conc)

    tasks = [(i, j) for i in range(args.load_count) for j in range(args.datasets)]
    results = _parallel_map(one_cell, tasks, args.threads)

    rows = []
    for i_load in range(args.load_count):
        cells = [results[i_load * args.datasets + j] for j in range(args.datasets)]
        k = cells[0][0]
        mean_c = np.mean([c for _, c in cells], axis=0)
        for beta, c in zip(betas, mean_c):
            rows.append([loads[i_load], k, beta, c])
    write_csv(runner.path("phase_diagram.csv"), np.array(rows),
              header=["load_ratio", "k", "beta", "concentration"])

    grid = np.array(rows)[:, 3].reshape(args.load_count, args.beta_count)
    summary = dict(
        grid_rows=args.load_count, grid_cols=args.beta_count,
        corner_high_beta_low_load=float(grid[0, -1]),
        corner_low_beta_high_load=float(grid[-1, 0]),
        monotone_in_beta_fraction=float(np.mean(np.diff(grid, axis=1) >= -0.02)),
    )
    return runner.finish(_config_dict(args), summary, False)


def cmd_betastar(args) -> int:
    runner = Runner(args, "betastar")
    if args.matrix:
        raw = read_csv_matrix(_require_file(args.matrix, "matrix CSV not found"),
                              has_header=args.has_header)
        mem = normalize_columns(raw.T if args.rows_are_patterns else raw,
                                center=args.center)
    else:
        mem = make_random_sphere_memory(args.d, args.k,
                                        rng.derive(args.seed, rng.DATASET))
    betas = np.logspace(np.log10(args.beta_min), np.log10(args.beta_max),
                        args.beta_count)
    if args.probes_from == "stored":
        probes = np.array(mem.columns)
    else:
        probes = default_probes(mem.d, args.probes, seed=args.seed)
    curve = entropy_curve(mem, probes, betas)
    write_csv(runner.path("entropy_curve.csv"),
              np.column_stack([curve.betas, curve.entropy, curve.dh_dbeta,
                               curve.d2h_dbeta2]),
              header=["beta", "entropy", "dh_dbeta", "d2h_dbeta2"])
    star = find_beta_star(curve)
    summary = dict(beta_star=star, snr_star=snr_star(args.alpha, mem.d),
                   snr_at_beta_star=snr(args.alpha, star, mem.d))
    (runner.path("beta_star.json")).write_text(
        json.dumps({k: _jsonable(v) for k, v in summary.items()}, indent=2) + "\n")
    default = (args.matrix is None and args.probes_from == "random"
               and (args.d, args.k, args.probes) == (64, 16, 64))
    return runner.finish(_config_dict(args), summary, default)


# ---------------------------------------------------------------------------
# MNIST commands

def _protocol_config(args, beta: float, seed: int) -> SamplerConfig:
    return SamplerConfig(beta=beta, step_size=args.alpha, steps=args.steps,
                         burn_in=args.burn_in, thin=args.thin, chains=args.chains,
                         subsamples=args.subsamples, seed=seed)


def cmd_mnist_table(args) -> int:
    runner = Runner(args, "mnist-table")
    mem, real_data = _mnist_memory(args)
    betas = _parse_floats(args.betas)
    beta_ret = betas[0]
    total = args.chains * args.subsamples

    rows, summary = [], {}
    sa_metrics = {}
    for i, beta in enumerate(betas):
        _, ss = run_ula(mem, _protocol_config(args, beta, rng.derive(args.seed, 10, i)))
        m = _chain_metrics(mem, ss, beta)
        sa_metrics[beta] = m
        rows.append(_table_row("sa", beta, m))
        _sample_csv(runner, "samples_sa_beta%g.csv" % beta, ss)
    _, ss_mala, rate = run_mala(mem, _protocol_config(args, beta_ret,
                                                      rng.derive(args.seed, 11)))
    mala_m = _chain_metrics(mem, ss_mala, beta_ret)
    rows.append(_table_row("mala", beta_ret, mala_m, rate))
    _sample_csv(runner, "samples_mala_beta%g.csv" % beta_ret, ss_mala)

    ss_boot = bootstrap_samples(mem, total, args.seed)
    ss_gauss = gaussian_perturb_samples(mem, total, args.alpha, beta_ret, args.seed)
    ss_convex = convex_combination_samples(mem, total, args.seed)
    gmm = fit_gmm_pca(mem, rank=args.gmm_rank, components=args.gmm_components,
                      seed=args.seed)
    runner.path("gmm_model.json").write_text(
        json.dumps(gmm.to_dict(), indent=2) + "\n")
    ss_gmm = gmm_pca_samples(gmm, total, args.seed)
    base_m = {}
    for name, ss in (("bootstrap", ss_boot), ("gaussian-perturb", ss_gauss),
                     ("convex-combination", ss_convex), ("gmm-pca", ss_gmm)):
        m = _chain_metrics(mem, ss, beta_ret)
        base_m[name] = m
        rows.append(_table_row(name, beta_ret, m))
    write_csv(runner.path("mnist_table.csv"), rows, header=_TABLE_HEADER)

    ret, gen = sa_metrics[beta_ret], sa_metrics.get(betas[1] if len(betas) > 1 else beta_ret)
    summary = dict(
        sa_retrieval_novelty=ret["novelty"].mean,
        sa_retrieval_diversity=ret["diversity"],
        sa_retrieval_energy=ret["energy"].mean,
        sa_generation_novelty=gen["novelty"].mean,
        sa_generation_diversity=gen["diversity"],
        sa_generation_energy=gen["energy"].mean,
        bootstrap_novelty=base_m["bootstrap"]["novelty"].mean,
        bootstrap_energy=base_m["bootstrap"]["energy"].mean,
        convex_diversity=base_m["convex-combination"]["diversity"],
        gaussian_novelty=base_m["gaussian-perturb"]["novelty"].mean,
        gmm_novelty=base_m["gmm-pca"]["novelty"].mean,
        mala_acceptance=rate,
        sa_mala_novelty_gap=abs(ret["novelty"].mean - mala_m["novelty"].mean),
        sa_mala_diversity_gap=abs(ret["diversity"] - mala_m["diversity"]),
        gmm_em_converged=float(gmm.converged),
    )
    default = real_data and (args.digit, args.k, args.betas, args.alpha,
                             args.chains, args.steps, args.burn_in, args.thin,
                             args.subsamples) == (
        3, 100, "2000,200", 0.01, 30, 5000, 2000, 100, 5)
    return runner.finish(_config_dict(args), summary, default)


def cmd_stepsize_sweep(args) -> int:
    runner = Runner(args, "stepsize-sweep")
    mem, real_data = _mnist_memory(args)
    alphas = _parse_floats(args.alphas)
    rows, summary = [], {}
    for i, alpha in enumerate(alphas):
        sweep_args = argparse.Namespace(**{**vars(args), "alpha": alpha})
        _, ss_u = run_ula(mem, _protocol_config(sweep_args, args.beta,
                                                rng.derive(args.seed, 20, i)))
        _, ss_m, rate = run_mala(mem, _protocol_config(sweep_args, args.beta,
                                                       rng.derive(args.seed, 21, i)))
        mu = _chain_metrics(mem, ss_u, args.beta)
        frozen = rate == 0.0
        mm = None if frozen else _chain_metrics(mem, ss_m, args.beta)
        rows.append([alpha, rate,
                     mu["novelty"].mean, "" if frozen else mm["novelty"].mean,
                     mu["diversity"], "" if frozen else mm["diversity"],
                     mu["energy"].mean, "" if frozen else mm["energy"].mean,
                     "" if frozen else abs(mu["energy"].mean - mm["energy"].mean)])
        summary["acceptance_alpha_%g" % alpha] = rate
        if not frozen:
            summary["delta_energy_alpha_%g" % alpha] = abs(mu["energy"].mean
                                                           - mm["energy"].mean)
    write_csv(runner.path("stepsize_sweep.csv"), rows,
              header=["alpha", "acceptance", "ula_novelty", "mala_novelty",
                      "ula_diversity", "mala_diversity", "ula_energy", "mala_energy",
                      "abs_delta_energy"])
    default = real_data and (args.digit, args.k, args.beta, args.alphas,
                             args.chains, args.steps, args.burn_in) == (
        3, 100, 2000.0, "0.001,0.005,0.01,0.02,0.05,0.1,0.2,0.3,0.5",
        30, 5000, 2000)
    return runner.finish(_config_dict(args), summary, default)


def cmd_single_chain(args) -> int:
    runner = Runner(args, "single-chain")
    mem, real_data = _mnist_memory(args)
    betas = _parse_floats(args.betas)
    rows, summary = [], {}
    for i, beta in enumerate(betas):
        cfg = SamplerConfig(beta=beta, step_size=args.alpha, steps=args.steps,
                            burn_in=args.burn_in, thin=args.thin, chains=1,
                            seed=rng.derive(args.seed, 30, i))
        _, ss = run_ula(mem, cfg)
        nov = float(np.mean([novelty(mem, s) for s in ss.samples]))
        mc = float(np.mean([max_cos(mem, s) for s in ss.samples]))
        rows.append([beta, snr(args.alpha, beta, mem.d), nov, diversity(ss.samples),
                     mean_energy(mem, ss.samples, beta), mc])
        summary["single_diversity_beta_%g" % beta] = diversity(ss.samples)
        summary["single_max_cos_beta_%g" % beta] = mc
    # multi-chain reference at the first beta for the exceeds-check
    multi_cfg = SamplerConfig(beta=betas[0], step_size=args.alpha, steps=5000,
                              burn_in=2000, thin=100, chains=30, subsamples=5,
                              seed=rng.derive(args.seed, 31))
    _, ss_multi = run_ula(mem, multi_cfg)
    multi_div = diversity(ss_multi.samples)
    rows.append([betas[0], snr(args.alpha, betas[0], mem.d), "", multi_div, "", ""])
    write_csv(runner.path("single_chain.csv"), rows,
              header=["beta", "snr", "novelty", "diversity", "energy", "max_cos"])
    summary["multi_diversity_beta_%g" % betas[0]] = multi_div
    if len(betas) > 1:
        summary["single_chain_exceeds_multi"] = float(
            summary["single_diversity_beta_%g" % betas[1]] > multi_div)
    default = real_data and (args.digit, args.k, args.betas, args.alpha,
                             args.steps, args.burn_in, args.thin) == (
        3, 100, "2000,200,50", 0.01, 50000, 10000, 100)
    return runner.finish(_config_dict(args), summary, default)


def cmd_noise_control(args) -> int:
    runner = Runner(args, "noise-control")
    mem, real_data = _mnist_memory(args)
    total = args.chains * args.subsamples
    _, ss_sa = run_ula(mem, _protocol_config(args, args.beta,
                                             rng.derive(args.seed, 40)))
    ss_match = matched_gaussian_control(ss_sa.samples, total, args.seed)
    ss_iso = isotropic_gaussian_control(ss_sa.samples, total, args.seed)
    ss_stored = bootstrap_samples(mem, total, args.seed)

    rows, mets = [], {}
    stored_cols = mem.columns.T
    for name, ss in (("stored", ss_stored), ("sa", ss_sa),
                     ("matched-gaussian", ss_match), ("isotropic-gaussian", ss_iso)):
        m = _chain_metrics(mem, ss, args.beta)
        fd = frechet_diagonal(ss.samples, stored_cols)
        mets[name] = m
        rows.append(_table_row(name, args.beta, m) + [fd])
    write_csv(runner.path("noise_control.csv"), rows,
              header=_TABLE_HEADER + ["fd_diag"])
    _sample_csv(runner, "samples_sa_beta%g.csv" % args.beta, ss_sa)

    ordering = (mets["sa"]["max_cos"].mean > mets["matched-gaussian"]["max_cos"].mean
                > mets["isotropic-gaussian"]["max_cos"].mean)
    summary = dict(
        sa_max_cos=mets["sa"]["max_cos"].mean,
        matched_max_cos=mets["matched-gaussian"]["max_cos"].mean,
        isotropic_max_cos=mets["isotropic-gaussian"]["max_cos"].mean,
        ordering_ok=float(ordering),
    )
    default = real_data and (args.digit, args.k, args.beta, args.alpha,
                             args.chains, args.steps, args.burn_in) == (
        3, 100, 200.0, 0.01, 30, 5000, 2000)
    return runner.finish(_config_dict(args), summary, default)


def cmd_multihead(args) -> int:
    runner = Runner(args, "multihead")
    mem, real_data = _mnist_memory(args)
    pca = fit_pca(mem.columns, fixed_rank=min(mem.d, mem.K), center=False)
    heads_list = _parse_ints(args.heads)

    rows, summary = [], {}
    for i, heads in enumerate(heads_list):
        cfg = SamplerConfig(beta=args.beta, step_size=args.alpha, steps=args.steps,
                            burn_in=args.burn_in, thin=args.thin, chains=args.chains,
                            subsamples=args.subsamples,
                            seed=rng.derive(args.seed, 50, i))
        if heads == 1:
            # the single-head row is the ordinary full-space sampler; head
            # partitioning only enters at H >= 2
            _, ss = run_ula(mem, cfg)
        else:
            ss = run_multihead(mem, pca, heads, cfg)
        m = _chain_metrics(mem, ss, args.beta)
        rows.append([heads, m["novelty"].mean, m["novelty"].se, m["diversity"],
                     m["max_cos"].mean, m["max_cos"].se])
        summary["max_cos_h%d" % heads] = m["max_cos"].mean
        summary["novelty_h%d" % heads] = m["novelty"].mean
    write_csv(runner.path("multihead.csv"), rows,
              header=["heads", "novelty", "novelty_se", "diversity", "max_cos",
                      "max_cos_se"])

    sig2 = pca.singular_values ** 2
    from .sampler import head_partition
    h_ref = max(heads_list)
    shares = [float(sig2[lo:hi].sum() / pca.total_variance)
              for lo, hi in head_partition(pca.rank, h_ref)]
    write_csv(runner.path("variance_split_h%d.csv" % h_ref),
              [[i + 1, lo, hi, s] for i, ((lo, hi), s) in
               enumerate(zip(head_partition(pca.rank, h_ref), shares))],
              header=["head", "pc_lo", "pc_hi", "variance_share"])
    summary["variance_share_head1"] = shares[0]
    default = real_data and (args.digit, args.k, args.beta, args.heads,
                             args.chains, args.steps, args.burn_in) == (
        3, 100, 200.0, "1,2,4,5", 30, 5000, 2000)
    return runner.finish(_config_dict(args), summary, default)


def cmd_scaling(args) -> int:
    runner = Runner(args, "scaling")
    images = load_idx_images(_require_file(args.images, MNIST_HINT))
    labels = load_idx_labels(_require_file(args.labels, MNIST_HINT))
    real_data = images.count == 60000 and images.rows == 28 and images.cols == 28
    ks = _parse_ints(args.ks)

    rows, summary = [], {}
    beta_grid = np.logspace(-0.5, 2.5, 60)
    for i, k in enumerate(ks):
        mem = select_class(images, labels, args.digit, k)
        probes = default_probes(mem.d, 64, seed=args.seed)
        star_random = find_beta_star(entropy_curve(mem, probes, beta_grid))
        star_stored = find_beta_star(entropy_curve(mem, np.array(mem.columns),
                                                   beta_grid))
        row = [k, k / mem.d, star_random, star_stored]
        for j, beta in enumerate((star_random, 5.0 * star_random)):
            cfg = SamplerConfig(beta=beta, step_size=args.alpha, steps=args.steps,
                                burn_in=args.burn_in, thin=args.thin,
                                chains=args.chains, subsamples=args.subsamples,
                                seed=rng.derive(args.seed, 60, i, j))
            _, ss = run_ula(mem, cfg)
            m = _chain_metrics(mem, ss, beta)
            row += [m["novelty"].mean, m["diversity"], m["max_cos"].mean]
        rows.append(row)
        summary["beta_star_k_%d" % k] = star_random
        summary["beta_star_stored_k_%d" % k] = star_stored
        summary["generation_max_cos_k_%d" % k] = row[6]
        summary["retrieval_max_cos_k_%d" % k] = row[9]
    write_csv(runner.path("scaling.csv"), rows,
              header=["k", "load_ratio", "beta_star_random", "beta_star_stored",
                      "gen_novelty", "gen_diversity", "gen_max_cos", "ret_novelty",
                      "ret_diversity", "ret_max_cos"])
    gen = [summary["generation_max_cos_k_%d" % k] for k in ks]
    summary["generation_max_cos_monotone"] = float(
        all(b >= a - 0.02 for a, b in zip(gen, gen[1:])))
    default = real_data and (args.digit, args.ks, args.alpha, args.chains,
                             args.steps, args.burn_in) == (
        3, "100,500,1000,2000,3500", 0.01, 30, 5000, 2000)
    return runner.finish(_config_dict(args), summary, default)


# ---------------------------------------------------------------------------
# protein and sequential commands

def _decode_samples(pca, samples: np.ndarray) -> list:
    recon = pca_reconstruct(pca, samples.T).T
    return [one_hot_decode(r) for r in recon]


def cmd_protein(args) -> int:
    runner = Runner(args, "protein")
    text = _require_file(args.stockholm, PFAM_HINT).read_text()
    aln = filter_alignment(parse_stockholm(text), args.max_col_gap, args.max_seq_gap)
    onehot = one_hot_encode(aln)
    pca = fit_pca(onehot, variance_target=args.variance_target)
    codes = pca_project(pca, onehot)
    mem = normalize_columns(codes, center=False)

    grid = np.logspace(-1, 2.3, 60)
    probes = default_probes(mem.d, 64, seed=args.seed)
    beta_star = find_beta_star(entropy_curve(mem, probes, grid))

    betas = _parse_floats(args.betas)
    stored_counts = aa_counts(aln)
    stored_mi = mi_matrix(aln, args.pseudocount)
    total = args.chains * args.subsamples

    rows, summary = [], dict(k=aln.K, length=aln.L, pca_rank=pca.rank,
                             beta_star=beta_star)

    def seq_metrics(seqs: list) -> dict:
        gen = Alignment(tuple("g%d" % i for i in range(len(seqs))), tuple(seqs))
        kl = categorical_kl(stored_counts, aa_counts(gen), args.pseudocount)
        pos = per_position_kl(aln, gen, args.pseudocount)
        mi_r = mi_correlation(stored_mi, mi_matrix(gen, args.pseudocount))
        seqid = float(np.mean([sequence_identity(s, aln) for s in seqs]))
        return dict(kl=kl, pos_kl=pos, mi_r=mi_r, seqid=seqid)

    ss_boot = bootstrap_samples(mem, total, args.seed)
    boot_m = _chain_metrics(mem, ss_boot, betas[0])
    boot_seq = seq_metrics(_decode_samples(pca, ss_boot.samples))
    rows.append(["bootstrap", betas[0], boot_m["novelty"].mean, boot_m["diversity"],
                 boot_m["energy"].mean, boot_seq["seqid"], boot_seq["kl"],
                 boot_seq["pos_kl"], boot_seq["mi_r"]])

    for i, beta in enumerate(betas):
        cfg = SamplerConfig(beta=beta, step_size=args.alpha, steps=args.steps,
                            burn_in=args.burn_in, thin=args.thin, chains=args.chains,
                            subsamples=args.subsamples,
                            seed=rng.derive(args.seed, 70, i))
        _, ss = run_ula(mem, cfg)
        m = _chain_metrics(mem, ss, beta)
        seqs = _decode_samples(pca, ss.samples)
        sm = seq_metrics(seqs)
        rows.append(["sa", beta, m["novelty"].mean, m["diversity"], m["energy"].mean,
                     sm["seqid"], sm["kl"], sm["pos_kl"], sm["mi_r"]])
        Path(runner.path("sequences_beta%g.txt" % beta)).write_text(
            "\n".join(seqs) + "\n")
        tag = "retrieval" if i == 0 else "generation"
        summary["novelty_%s" % tag] = m["novelty"].mean
        summary["seqid_%s" % tag] = sm["seqid"]
        summary["kl_%s" % tag] = sm["kl"]
        summary["pos_kl_%s" % tag] = sm["pos_kl"]
        summary["mi_r_%s" % tag] = sm["mi_r"]
    write_csv(runner.path("protein_table.csv"), rows,
              header=["method", "beta", "novelty", "diversity", "energy", "seqid",
                      "kl", "pos_kl", "mi_r"])
    default = ((aln.K, aln.L) == (68, 71)
               and (args.betas, args.variance_target, args.alpha, args.chains,
                    args.steps, args.burn_in) == ("77,8", 0.95, 0.01, 30, 5000,
                                                  2000))
    return runner.finish(_config_dict(args), summary, default)


def cmd_sequential(args) -> int:
    runner = Runner(args, "sequential")
    table = read_csv_matrix(_require_file(args.matrix, "return matrix CSV not found"),
                            has_header=args.has_header)
    raw = table.T  # columns become stored days
    mem_raw = memory_from_columns(raw)
    mem_scaled = normalize_columns(raw, center=True)
    days = args.days or raw.shape[1]

    out, rate = run_warm_start_sequential(mem_scaled, mem_raw, args.beta, args.alpha,
                                          args.t_inner, days, args.seed)
    write_csv(runner.path("generated_returns.csv"), out,
              header=["x%d" % i for i in range(out.shape[1])])

    max_lag = min(20, days - 1)
    band = white_noise_band(days)
    rows = []
    n_cols = min(5, out.shape[1])
    for j in range(n_cols):
        a_raw = acf(out[:, j], max_lag)
        a_sq = acf(out[:, j] ** 2, max_lag) if np.var(out[:, j] ** 2) > 0 else a_raw * 0
        for lag in range(1, max_lag + 1):
            rows.append([j, lag, a_raw[lag - 1], a_sq[lag - 1], band])
    write_csv(runner.path("acf.csv"), rows,
              header=["coordinate", "lag", "acf_raw", "acf_squared", "band_99"])

    frac = np.mean([abs(acf(out[:, j], 1)[0]) <= band for j in range(out.shape[1])])
    summary = dict(acceptance=rate, lag1_within_band_fraction=float(frac),
                   days=days, band_99=band)
    return runner.finish(_config_dict(args), summary, False)


# ---------------------------------------------------------------------------
# parser

def _config_dict(args) -> dict:
    skip = {"func", "config"}
    return {k: _jsonable(v) for k, v in vars(args).items() if k not in skip}


def _add_common(p):
    p.add_argument("--seed", type=int, required=True,
                   help="master seed (required; no wall-clock seeding)")
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for independent grid cells")
    p.add_argument("--config", default=None,
                   help="key=value config file (or a manifest.json); flags win")


def _add_protocol(p, steps=5000, burn_in=2000, chains=30):
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--chains", type=int, default=chains)
    p.add_argument("--steps", type=int, default=steps)
    p.add_argument("--burn-in", type=int, default=burn_in)
    p.add_argument("--thin", type=int, default=100)
    p.add_argument("--subsamples", type=int, default=5)


def _add_mnist(p):
    p.add_argument("--images", required=True, help="MNIST train images IDX file")
    p.add_argument("--labels", required=True, help="MNIST train labels IDX file")
    p.add_argument("--digit", type=int, default=3)
    p.add_argument("--k", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="salab",
                                 description="Hopfield-energy Langevin sampling "
                                             "experiments")
    ap.add_argument("--version", action="version", version="salab " + __version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="temperature spectrum on random memories")
    _add_common(p)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--beta-min", type=float, default=1e-2)
    p.add_argument("--beta-max", type=float, default=1e3)
    p.add_argument("--beta-count", type=int, default=25)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=2000)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("converge", help="multi-chain vs long-reference energies")
    _add_common(p)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--beta", type=float, default=5.0)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--chains", type=int, default=8)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--ref-steps", type=int, default=200000)
    p.add_argument("--ref-burn-in", type=int, default=50000)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("phase-diagram", help="attention concentration over load and beta")
    _add_common(p)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--load-min", type=float, default=0.05)
    p.add_argument("--load-max", type=float, default=2.0)
    p.add_argument("--load-count", type=int, default=10)
    p.add_argument("--beta-min", type=float, default=0.5)
    p.add_argument("--beta-max", type=float, default=100.0)
    p.add_argument("--beta-count", type=int, default=20)
    p.add_argument("--datasets", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=2000)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("betastar", help="entropy curve and inflection temperature")
    _add_common(p)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--matrix", default=None, help="optional CSV memory source")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--rows-are-patterns", action="store_true")
    p.add_argument("--center", action="store_true")
    p.add_argument("--beta-min", type=float, default=0.1)
    p.add_argument("--beta-max", type=float, default=1000.0)
    p.add_argument("--beta-count", type=int, default=80)
    p.add_argument("--probes", type=int, default=64)
    p.add_argument("--probes-from", choices=("random", "stored"), default="random")
    p.add_argument("--alpha", type=float, default=0.01)
    p.set_defaults(func=cmd_betastar)

    p = sub.add_parser("mnist-table", help="sampler vs training-free baselines")
    _add_common(p)
    _add_mnist(p)
    p.add_argument("--betas", default="2000,200")
    _add_protocol(p)
    p.add_argument("--gmm-rank", type=int, default=50)
    p.add_argument("--gmm-components", type=int, default=10)
    p.set_defaults(func=cmd_mnist_table)

    p = sub.add_parser("stepsize-sweep", help="ULA vs MALA across step sizes")
    _add_common(p)
    _add_mnist(p)
    p.add_argument("--beta", type=float, default=2000.0)
    p.add_argument("--alphas", default="0.001,0.005,0.01,0.02,0.05,0.1,0.2,0.3,0.5")
    _add_protocol(p)
    p.set_defaults(func=cmd_stepsize_sweep)

    p = sub.add_parser("single-chain", help="single- vs multi-chain diversity")
    _add_common(p)
    _add_mnist(p)
    p.add_argument("--betas", default="2000,200,50")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=50000)
    p.add_argument("--burn-in", type=int, default=10000)
    p.add_argument("--thin", type=int, default=100)
    p.set_defaults(func=cmd_single_chain)

    p = sub.add_parser("noise-control", help="SA vs moment-matched noise controls")
    _add_common(p)
    _add_mnist(p)
    p.add_argument("--beta", type=float, default=200.0)
    _add_protocol(p)
    p.set_defaults(func=cmd_noise_control)

    p = sub.add_parser("multihead", help="PCA-partitioned multi-head sampling")
    _add_common(p)
    _add_mnist(p)
    p.add_argument("--beta", type=float, default=200.0)
    p.add_argument("--heads", default="1,2,4,5")
    _add_protocol(p)
    p.set_defaults(func=cmd_multihead)

    p = sub.add_parser("scaling", help="memory-size scaling with inflection betas")
    _add_common(p)
    _add_mnist(p)
    p.add_argument("--ks", default="100,500,1000,2000,3500")
    _add_protocol(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("protein", help="alignment sampling and sequence metrics")
    _add_common(p)
    p.add_argument("--stockholm", required=True, help="Stockholm seed alignment")
    p.add_argument("--betas", default="77,8")
    p.add_argument("--max-col-gap", type=float, default=0.5)
    p.add_argument("--max-seq-gap", type=float, default=0.3)
    p.add_argument("--variance-target", type=float, default=0.95)
    p.add_argument("--pseudocount", type=float, default=0.5)
    _add_protocol(p)
    p.set_defaults(func=cmd_protein)

    p = sub.add_parser("sequential", help="warm-start day-by-day generation")
    _add_common(p)
    p.add_argument("--matrix", required=True, help="CSV return matrix, days as rows")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--beta", type=float, default=12.0)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--t-inner", type=int, default=200)
    p.add_argument("--days", type=int, default=None)
    p.set_defaults(func=cmd_sequential)

    return ap


def _apply_config_file(argv: list, args) -> None:
    """Fill args from a key=value file (or a manifest); explicit flags win."""
    if not args.config:
        return
    path = Path(args.config)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        values = json.loads(text).get("config", {})
    else:
        values = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("bad config line %r (expected key = value)" % line)
            k, v = (s.strip() for s in line.split("=", 1))
            values[k.replace("-", "_")] = v
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in values.items():
        key = key.replace("-", "_")
        if key in ("command", "func", "out_dir") or key in explicit:
            continue
        if not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(value, str) and current is not None and not isinstance(current, str):
            caster = type(current)
            value = caster(value) if caster is not bool else value.lower() in ("1", "true", "yes")
        setattr(args, key, value)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(argv, args)
        return args.func(args)
    except FileNotFoundError as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
