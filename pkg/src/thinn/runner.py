"""Experiment orchestration: per-seed run directories and aggregation.

Each seed gets its own directory containing the echoed config, `metrics.csv`
with the fixed header, and the final parameter dump.  Aggregation computes
per-step medians and first quartiles across completed runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import config as cf
from . import losses as ls
from . import metrics as mt
from . import network as nw
from . import optimizer as op
from . import problems as pb
from . import quadrature as qd
from . import reference as rf
from . import tape as tp

AGGREGATE_HEADER = ("step,eps1_median,eps1_q25,eps2_median,eps2_q25,"
                    "rate_median,rate_q25")


class RunnerError(RuntimeError):
    pass


def problem_spec(cfg):
    return pb.ProblemSpec(kind=cfg.problem, nu=cfg.nu, T=cfg.T)


def initial_condition(cfg):
    if cfg.problem == "nse":
        return pb.taylor_green_ic(cfg.nu)
    return pb.DENSITY_ICS[cfg.ic](**cfg.ic_params)


def loss_config(cfg):
    return ls.LossConfig(bc_terms=cfg.bc_terms,
                         mean_mode_penalty=cfg.mean_mode_penalty)


def build_reference(cfg, n_x=512, n_out=257):
    """Gridded ground truth for the density problems, None for the flow."""
    if cfg.problem == "heat":
        a = cfg.ic_params.get("amplitude", 0.4)
        if cfg.ic != "sine":
            raise RunnerError("heat reference requires the sine profile")
        return rf.heat_reference(cfg.nu, a, cfg.T, n_x=n_x, n_out=n_out)
    if cfg.problem == "burgers":
        rho0 = initial_condition(cfg)
        return rf.burgers_fd(cfg.nu, rho0, n_x, cfg.T, n_out=n_out)
    return None


# -- single-seed runs --------------------------------------------------------


def _write_metrics(path, rows):
    with open(path, "w", newline="\n") as f:
        f.write(mt.METRICS_HEADER + "\n")
        for row in rows:
            f.write(row.csv_line() + "\n")


def held_out_rate_density(net, spec, scheme, rho0, cfg_loss):
    """Dynamic plus initial value of the entropy-form loss, no tape."""
    w_fn = pb.mlp_density_fn(net)
    i_dyn, _ = ls.thinn_dyn_loss(w_fn, spec, scheme, cfg_loss)
    i_0, _ = ls.thinn_init_loss(w_fn, spec, scheme, rho0, cfg_loss)
    return float(i_dyn) + float(i_0)


def held_out_rate_flow(psi_net, p_net, spec, scheme, u0, cfg_loss, fourier):
    psi_fn = pb.mlp_field_fn(psi_net)
    p_fn = pb.mlp_field_fn(p_net)
    # the rate metric always excludes the zero mode, whatever the training
    # loss penalizes
    rate_cfg = ls.LossConfig(eps_phi=cfg_loss.eps_phi,
                             bc_terms=cfg_loss.bc_terms)
    i_dyn = ls.nse_dyn_loss(psi_fn, p_fn, spec, scheme, rate_cfg,
                            fourier=fourier)
    i_0 = ls.nse_init_loss(psi_fn, spec, scheme, u0)
    return float(tp._val(i_dyn)) + float(tp._val(i_0))


def run_density_seed(cfg, seed, out_dir, reference):
    spec = problem_spec(cfg)
    rho0 = initial_condition(cfg)
    cfg_loss = loss_config(cfg)
    net = nw.MLP.init(cfg.widths, seed)
    eval_scheme = qd.sample(spec, cfg.eval_sizes, seed=[seed, 1, 0])

    def sampler(i):
        return qd.sample(spec, cfg.sizes, seed=[seed, 0, i])

    def make_loss(leaves_list, scheme):
        w_fn = pb.mlp_density_fn(net, leaves=leaves_list[0])
        return ls.density_loss(w_fn, spec, scheme, rho0, kind=cfg.loss,
                               cfg=cfg_loss)

    def eval_fn(step, breakdown):
        w_fn = pb.mlp_density_fn(net)
        eps1, eps2 = mt.density_errors(w_fn, spec, reference)
        rate = held_out_rate_density(net, spec, eval_scheme, rho0, cfg_loss)
        i_dyn, i_0, l_bc, _ = breakdown.floats()
        return mt.MetricsRow(step=step, eps1=eps1, eps2=eps2, rate=rate,
                             i_dyn=i_dyn, i_0=i_0, l_bc=l_bc,
                             clamp_events=breakdown.clamp_events)

    train_cfg = op.TrainConfig(
        steps=cfg.steps, lr0=cfg.lr0, decay_gamma=cfg.decay_gamma,
        decay_every=cfg.decay_every, resample_every=cfg.resample_every,
        eval_every=cfg.eval_every, seed=seed)
    result = op.train([net], make_loss, sampler, train_cfg, eval_fn=eval_fn)
    _write_metrics(Path(out_dir) / "metrics.csv", result.rows)
    net.save(Path(out_dir) / "params.bin")
    return result, [net]


def run_flow_seed(cfg, seed, out_dir, reference=None):
    spec = problem_spec(cfg)
    u0 = initial_condition(cfg)
    cfg_loss = loss_config(cfg)
    psi_net = nw.MLP.init(cfg.widths, seed)
    p_net = nw.MLP.init(cfg.p_widths, seed + 1000000)
    fourier = qd.fourier_matrices(cfg.sizes["m"], cfg.sizes["n"])
    eval_fourier = qd.fourier_matrices(cfg.eval_sizes["m"],
                                       cfg.eval_sizes["n"])
    eval_scheme = qd.sample(spec, cfg.eval_sizes, seed=[seed, 1, 0])

    def sampler(i):
        return qd.sample(spec, cfg.sizes, seed=[seed, 0, i])

    def make_loss(leaves_list, scheme):
        psi_fn = pb.mlp_field_fn(psi_net, leaves=leaves_list[0])
        p_fn = pb.mlp_field_fn(p_net, leaves=leaves_list[1])
        return ls.nse_loss(psi_fn, p_fn, spec, scheme, u0, kind=cfg.loss,
                           cfg=cfg_loss, fourier=fourier)

    def eval_fn(step, breakdown):
        psi_fn = pb.mlp_field_fn(psi_net)
        eps1, eps2 = mt.velocity_errors(psi_fn, spec, cfg.nu)
        rate = held_out_rate_flow(psi_net, p_net, spec, eval_scheme, u0,
                                  cfg_loss, eval_fourier)
        i_dyn, i_0, l_bc, _ = breakdown.floats()
        return mt.MetricsRow(step=step, eps1=eps1, eps2=eps2, rate=rate,
                             i_dyn=i_dyn, i_0=i_0, l_bc=l_bc,
                             clamp_events=breakdown.clamp_events)

    train_cfg = op.TrainConfig(
        steps=cfg.steps, lr0=cfg.lr0, decay_gamma=cfg.decay_gamma,
        decay_every=cfg.decay_every, resample_every=cfg.resample_every,
        eval_every=cfg.eval_every, seed=seed)
    result = op.train([psi_net, p_net], make_loss, sampler, train_cfg,
                      eval_fn=eval_fn)
    _write_metrics(Path(out_dir) / "metrics.csv", result.rows)
    psi_net.save(Path(out_dir) / "params.bin")
    p_net.save(Path(out_dir) / "params_p.bin")
    return result, [psi_net, p_net]


def run_all(cfg):
    """Run every seed; returns the list of run directories."""
    base = Path(cfg.out_dir)
    base.mkdir(parents=True, exist_ok=True)
    reference = build_reference(cfg) if cfg.problem != "nse" else None
    dirs = []
    for seed in cfg.seeds:
        out_dir = base / f"seed{seed}"
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg_echo = cf.RunConfig(**{**cfg.__dict__, "seeds": (seed,)})
        cfg_echo.echo(out_dir / "config.ini")
        if cfg.problem == "nse":
            run_flow_seed(cfg, seed, out_dir)
        else:
            run_density_seed(cfg, seed, out_dir, reference)
        dirs.append(out_dir)
    return dirs


# -- aggregation -------------------------------------------------------------


def aggregate(run_dirs, out_path, stat="median"):
    """Per-step median and first quartile of the error and rate columns.

    Writes `aggregate.csv` (+ `.meta` sidecar naming the quantile convention)
    and one plot-data file per metric with the requested statistic.
    """
    if stat not in ("median", "q25"):
        raise RunnerError(f"unknown statistic {stat!r}")
    tables = []
    steps_ref = None
    for d in run_dirs:
        rows = mt.read_metrics_csv(Path(d) / "metrics.csv")
        steps = [int(r["step"]) for r in rows]
        if steps_ref is None:
            steps_ref = steps
        elif steps != steps_ref:
            raise RunnerError(f"run {d} has a different eval schedule")
        tables.append(rows)
    if not tables:
        raise RunnerError("no runs to aggregate")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    cols = ("eps1", "eps2", "rate")
    series = {c: [] for c in cols}
    with open(out_path, "w", newline="\n") as f:
        f.write(AGGREGATE_HEADER + "\n")
        for i, step in enumerate(steps_ref):
            out = [str(step)]
            for col in cols:
                vals = np.array([float(t[i][col]) for t in tables])
                med = float(np.quantile(vals, 0.5))
                q25 = float(np.quantile(vals, 0.25))
                out += [f"{med:.17g}", f"{q25:.17g}"]
                series[col].append((step, med, q25))
            f.write(",".join(out) + "\n")
    with open(out_path.with_suffix(".csv.meta"), "w") as f:
        f.write("quantiles = linear interpolation (type 7)\n")
        f.write(f"runs = {len(tables)}\n")
    pick = 1 if stat == "median" else 2
    for col in cols:
        plot = out_path.parent / f"plot_{col}.csv"
        with open(plot, "w", newline="\n") as f:
            f.write(f"step,{col}_{stat}\n")
            for entry in series[col]:
                f.write(f"{entry[0]},{entry[pick]:.17g}\n")
    return out_path


# -- stand-alone evaluation and certification --------------------------------


def load_run(run_dir):
    run_dir = Path(run_dir)
    cfg = cf.load(run_dir / "config.ini")
    nets = [nw.MLP.load(run_dir / "params.bin")]
    if cfg.problem == "nse":
        nets.append(nw.MLP.load(run_dir / "params_p.bin"))
    return cfg, nets


def evaluate_run(run_dir):
    """Metrics of a stored run: errors and the held-out rate value."""
    cfg, nets = load_run(run_dir)
    spec = problem_spec(cfg)
    cfg_loss = loss_config(cfg)
    seed = cfg.seeds[0]
    eval_scheme = qd.sample(spec, cfg.eval_sizes, seed=[seed, 1, 0])
    if cfg.problem == "nse":
        psi_fn = pb.mlp_field_fn(nets[0])
        eps1, eps2 = mt.velocity_errors(psi_fn, spec, cfg.nu)
        fourier = qd.fourier_matrices(cfg.eval_sizes["m"],
                                      cfg.eval_sizes["n"])
        rate = held_out_rate_flow(nets[0], nets[1], spec, eval_scheme,
                                  initial_condition(cfg), cfg_loss, fourier)
    else:
        reference = build_reference(cfg)
        w_fn = pb.mlp_density_fn(nets[0])
        eps1, eps2 = mt.density_errors(w_fn, spec, reference)
        rate = held_out_rate_density(nets[0], spec, eval_scheme,
                                     initial_condition(cfg), cfg_loss)
    return {"eps1": eps1, "eps2": eps2, "rate": rate}


def certify_run(run_dir, out_path=None):
    cfg, nets = load_run(run_dir)
    if cfg.problem == "nse":
        raise RunnerError("certification applies to density problems")
    spec = problem_spec(cfg)
    reference = build_reference(cfg)
    cert = mt.certificate(pb.mlp_density_fn(nets[0]), spec, reference)
    if out_path is not None:
        with open(out_path, "w", newline="\n") as f:
            f.write("name,value\n")
            for name, value in cert.as_rows():
                f.write(f"{name},{value:.17g}\n")
    return cert


# -- reference files ---------------------------------------------------------


def reference_to_file(problem, nu, out_path, ic="sine", ic_params=None,
                      n_x=512, T=1.0, n_out=257, dt=None):
    ic_params = ic_params or {}
    out_path = Path(out_path)
    if problem == "heat":
        if ic != "sine":
            raise RunnerError("heat reference requires the sine profile")
        sol = rf.heat_reference(nu, ic_params.get("amplitude", 0.4), T,
                                n_x=n_x, n_out=n_out)
        sol.save_csv(out_path)
    elif problem == "burgers":
        rho0 = pb.DENSITY_ICS[ic](**ic_params)
        sol = rf.burgers_fd(nu, rho0, n_x, T, n_out=n_out, dt=dt)
        sol.save_csv(out_path)
    elif problem == "nse":
        ts = np.linspace(0.0, T, int(n_out))
        xs = np.arange(int(n_x)) * (2.0 * np.pi / int(n_x))
        with open(out_path, "w", newline="\n") as f:
            f.write("t,x,y,u,v,p\n")
            for t in ts:
                for x in xs:
                    u, v, p = rf.taylor_green(nu, t, x, xs)
                    for j, y in enumerate(xs):
                        f.write(f"{t:.17g},{x:.17g},{y:.17g},"
                                f"{u[j]:.17g},{v[j]:.17g},{p[j]:.17g}\n")
        with open(str(out_path) + ".meta", "w") as f:
            f.write(f"problem = nse\nnu = {nu}\nT = {T}\nn = {n_x}\n")
    else:
        raise RunnerError(f"unknown problem {problem!r}")
    return out_path
