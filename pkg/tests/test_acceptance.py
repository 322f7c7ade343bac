"""End-to-end acceptance checks.

Each criterion prints exactly one PASS/FAIL line.  The desk-scale training
fixtures (criteria 3 and 4) dominate the runtime; everything else is quick.
"""

import numpy as np
import pytest

from pathlib import Path

from thinn import config as cf
from thinn import jets as jt
from thinn import losses as ls
from thinn import metrics as mt
from thinn import network as nw
from thinn import problems as pb
from thinn import quadrature as qd
from thinn import reference as rf
from thinn import runner as rn
from thinn import tape as tp

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def report(capsys, num, desc, checks):
    ok = all(bool(v) for _, v in checks)
    with capsys.disabled():
        print(f"\n[criterion {num}] {desc}: {'PASS' if ok else 'FAIL'}")
    failed = [name for name, v in checks if not v]
    assert ok, f"criterion {num} failed: {failed}"


# -- criterion 1: derivative and solver oracles ------------------------------


def _input_derivative_check():
    worst = 0.0
    h = 1e-5
    for i in range(100):
        net = nw.MLP.init((2, 8, 1), seed=i)
        rng = np.random.default_rng(1000 + i)
        t, x = rng.uniform(0.1, 0.9, size=2)
        fn = pb.mlp_density_fn(net)
        jw = fn({"t": np.array([t]), "x": np.array([x])},
                jt.gradient_layout(("t", "x")))
        for var in ("t", "x"):
            got = float(np.ravel(np.asarray(tp._val(jw[(var,)])))[0])
            dp = np.array([t, x])
            dm = np.array([t, x])
            idx = 0 if var == "t" else 1
            dp[idx] += h
            dm[idx] -= h
            fp = float(net.forward(np.array([dp]))[0, 0])
            fm = float(net.forward(np.array([dm]))[0, 0])
            fd = (fp - fm) / (2 * h)
            worst = max(worst, abs(got - fd) / max(abs(fd), 1e-6))
    return worst


def _divergence_ulps():
    worst = 0.0
    for seed in range(10):
        net = nw.MLP.init((3, 10, 1), seed=seed)
        rng = np.random.default_rng(2000 + seed)
        t = rng.uniform(0, 1, 20)
        x = rng.uniform(0, 2 * np.pi, 20)
        y = rng.uniform(0, 2 * np.pi, 20)
        _, grad = pb.velocity_only(pb.mlp_field_fn(net), t, x, y,
                                   with_grad=True)
        u_x = np.asarray(tp._val(grad[0]))
        v_y = np.asarray(tp._val(grad[3]))
        scale = np.spacing(np.abs(u_x) + 1.0)
        worst = max(worst, float(np.max(np.abs(u_x + v_y) / scale)))
    return worst


def _mode_sum_vs_poisson():
    M, N = 16, 6
    rng = np.random.default_rng(7)
    ks = qd.mode_table(N)
    grid = qd.nse_grid(M, N)
    Rx = np.zeros(M * M)
    Ry = np.zeros(M * M)
    for (kx, ky), cx, cy in zip(ks, rng.normal(size=len(ks)),
                                rng.normal(size=len(ks))):
        phase = kx * grid[:, 0] + ky * grid[:, 1]
        Rx += cx * np.cos(phase)
        Ry += cy * np.sin(phase)
    val = float(ls.residual_mode_sum(Rx[None, :], Ry[None, :], M, N))
    oracle = rf.poisson_h_minus_one(Rx.reshape(M, M)) + \
        rf.poisson_h_minus_one(Ry.reshape(M, M))
    return abs(val - oracle) / abs(oracle)


def _dyn_integrand_identity():
    spec = pb.ProblemSpec("burgers", nu=0.15)
    net = nw.MLP.init((2, 10, 1), seed=3)
    rng = np.random.default_rng(4)
    t = rng.uniform(0, 1, 60)
    x = rng.uniform(0, 1, 60)
    fields = pb.density_fields(pb.mlp_density_fn(net), spec, t, x)
    integrand, _ = ls.thinn_dyn_integrand(fields, 1e-6)
    control, _ = pb.candidate_control(fields, 1e-6)
    return np.allclose(np.asarray(integrand), np.asarray(control) ** 2,
                       rtol=1e-12)


def _pinsker_random_pairs():
    rng = np.random.default_rng(5)
    n = 256
    w = np.full(n, 1.0 / n)
    for _ in range(1000):
        f = rng.uniform(0.05, 1.0, size=n)
        g = rng.uniform(0.05, 1.0, size=n)
        f /= np.mean(f)
        g /= np.mean(g)
        if not mt.pinsker_check(f, g, w)["ok"]:
            return False
    return True


def _burgers_fd_checks():
    n_x = 128
    sol = rf.burgers_fd(0.05, pb.sine_ic(), n_x, 0.2, n_out=65)
    masses = np.sum(sol.values, axis=1) / n_x
    n_steps = 0.2 / sol.metadata["dt"]
    mass_ok = np.max(np.abs(masses - masses[0])) < 1e-12 * max(n_steps, 1.0)

    sols = {m: rf.burgers_fd(0.05, pb.sine_ic(), m, 0.25, n_out=2)
            for m in (128, 256, 512)}

    def dist(coarse, fine):
        ratio = len(fine.points) // len(coarse.points)
        return np.mean(np.abs(fine.values[-1][::ratio] - coarse.values[-1]))

    order = np.log2(dist(sols[128], sols[256]) / dist(sols[256], sols[512]))
    return mass_ok, order


def test_criterion_1_oracles(capsys):
    mass_ok, order = _burgers_fd_checks()
    checks = [
        ("input derivatives vs finite differences", _input_derivative_check() < 1e-4),
        ("stream velocity divergence (ulps)", _divergence_ulps() <= 8.0),
        ("spectral dyn loss vs Poisson oracle", _mode_sum_vs_poisson() < 1e-10),
        ("dyn integrand equals squared control", _dyn_integrand_identity()),
        ("Pinsker inequality on 1000 random pairs", _pinsker_random_pairs()),
        ("finite-volume mass conservation", mass_ok),
        ("finite-volume self-convergence order >= 1", order >= 1.0),
    ]
    report(capsys, 1, "derivative and solver oracles", checks)


# -- criterion 2: zero-loss witnesses ----------------------------------------


def _linear_w(c_t, c_x):
    def w_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        return jets["t"] * c_t + jets["x"] * c_x
    return w_fn


def test_criterion_2_witnesses(capsys):
    heat = pb.ProblemSpec("heat", nu=0.2)
    h_scheme = qd.sample(heat, {"n_t": 6, "n_x": 8, "n_ic": 16, "n_bd": 8},
                         seed=0)
    heat_total = float(tp._val(ls.density_loss(
        _linear_w(0.0, -0.5), heat, h_scheme, pb.constant_ic(0.5),
        kind="thinn").total))

    burgers = pb.ProblemSpec("burgers", nu=0.01)
    b_scheme = qd.sample(burgers, {"n_t": 6, "n_x": 8, "n_ic": 16, "n_bd": 8},
                         seed=1)
    burgers_total = float(tp._val(ls.density_loss(
        _linear_w(0.25, -0.5), burgers, b_scheme, pb.constant_ic(0.5),
        kind="thinn").total))

    nse = pb.ProblemSpec("nse", nu=0.5, T=2.0)
    n_scheme = qd.sample(nse, {"n_t": 3, "m": 16, "n": 6, "n_ic": 32,
                               "n_bd": 16}, seed=2)

    def psi_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        return jt.sin(jets["x"]) * jt.sin(jets["y"]) * \
            jt.exp(jets["t"] * (-2 * nse.nu))

    def p_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        e4 = jt.exp(jets["t"] * (-4 * nse.nu))
        return (jt.cos(jets["x"] * 2.0) + jt.cos(jets["y"] * 2.0)) * e4 * 0.25

    nse_dyn = float(tp._val(ls.nse_dyn_loss(psi_fn, p_fn, nse, n_scheme)))

    checks = [
        ("heat stationary profile, total < 1e-8", heat_total < 1e-8),
        ("gauged stationary profile, total < 1e-8", burgers_total < 1e-8),
        ("vortex dyn loss < 1e-12", nse_dyn < 1e-12),
    ]
    report(capsys, 2, "zero-loss witnesses", checks)


# -- criteria 3 and 4: desk-scale training fixtures --------------------------


def _run_config(cfg, base):
    """Train every (kind, seed) pair; returns {kind: {seed: (dir, rows)}}."""
    out = {}
    reference = rn.build_reference(cfg) if cfg.problem != "nse" else None
    for kind in ("thinn", "pinn-l2"):
        cfg.loss = kind
        out[kind] = {}
        for seed in cfg.seeds:
            d = base / f"{kind}_s{seed}"
            d.mkdir(parents=True)
            if cfg.problem == "nse":
                rn.run_flow_seed(cfg, seed, d)
            else:
                rn.run_density_seed(cfg, seed, d, reference)
            out[kind][seed] = (d, mt.read_metrics_csv(d / "metrics.csv"))
    return out


@pytest.fixture(scope="module")
def nse_runs(tmp_path_factory):
    cfg = cf.load(CONFIG_DIR / "acceptance_nse.ini")
    return cfg, _run_config(cfg, tmp_path_factory.mktemp("nse"))


@pytest.fixture(scope="module")
def burgers_runs(tmp_path_factory):
    cfg = cf.load(CONFIG_DIR / "acceptance_burgers.ini")
    return cfg, _run_config(cfg, tmp_path_factory.mktemp("burgers"))


def _final(runs, kind, col):
    return np.array([float(rows[-1][col]) for _, rows in runs[kind].values()])


def test_criterion_3_flow_comparison(capsys, nse_runs):
    cfg, runs = nse_runs
    thinn_rate = float(np.median(_final(runs, "thinn", "rate")))
    pinn_rate = float(np.median(_final(runs, "pinn-l2", "rate")))
    thinn_eps2 = float(np.median(_final(runs, "thinn", "eps2")))
    pinn_eps2 = float(np.median(_final(runs, "pinn-l2", "eps2")))
    checks = [
        (f"median rate {thinn_rate:.4g} < {pinn_rate:.4g}/3",
         thinn_rate < pinn_rate / 3.0),
        (f"median eps2 {thinn_eps2:.3g} <= {pinn_eps2:.3g}",
         thinn_eps2 <= pinn_eps2),
    ]
    report(capsys, 3, "flow desk-scale comparison", checks)


def _window_means(steps, values, width=1000):
    groups = {}
    for s, v in zip(steps, values):
        groups.setdefault(s // width, []).append(v)
    return [float(np.mean(groups[k])) for k in sorted(groups)]


def test_criterion_4_density_convergence(capsys, burgers_runs):
    cfg, runs = burgers_runs
    checks = []
    for kind in ("thinn", "pinn-l2"):
        eps2 = float(np.median(_final(runs, kind, "eps2")))
        checks.append((f"{kind} median eps2 {eps2:.3g} < 25", eps2 < 25.0))
    any_rows = next(iter(runs["thinn"].values()))[1]
    steps = [int(r["step"]) for r in any_rows]
    rates = np.median([[float(r["rate"]) for r in rows]
                       for _, rows in runs["thinn"].values()], axis=0)
    means = _window_means(steps, rates)
    smooth = all(means[i + 1] <= 1.25 * means[i]
                 for i in range(len(means) - 1))
    checks.append(("rate window means decrease (x1.25 allowance)", smooth))
    checks.append((f"rate drops >= 10x ({means[0]:.3g} -> {means[-1]:.3g})",
                   means[0] >= 10.0 * means[-1]))
    report(capsys, 4, "density desk-scale convergence", checks)


# -- criterion 5: certificate ------------------------------------------------


def _periodic_hand_net():
    """Network whose output ignores x entirely, hence exactly periodic."""
    net = nw.MLP.init((2, 4, 1), seed=0)
    w0, b0 = net.layers()[0]
    w0[1, :] = 0.0          # zero all weights on the x input
    return net


def test_criterion_5_certificate(capsys, burgers_runs):
    cfg, runs = burgers_runs
    spec = pb.ProblemSpec("burgers", nu=cfg.nu, T=cfg.T)
    reference = rn.build_reference(cfg)

    net = _periodic_hand_net()
    cert0 = mt.certificate(pb.mlp_density_fn(net), spec, None)
    periodic_ok = all(v < 1e-10 for v in cert0.ell_terms.values())

    finite_ok = True
    pinsker_ok = True
    for seed, (d, rows) in runs["thinn"].items():
        trained = nw.MLP.load(d / "params.bin")
        cert = mt.certificate(pb.mlp_density_fn(trained), spec, reference)
        for name, value in cert.as_rows():
            if not (np.isfinite(value) and value >= 0.0):
                finite_ok = False
        ratios = []
        for _, lhs, hs in cert.pinsker:
            if hs < lhs - 1e-12:
                pinsker_ok = False
            if lhs > 0:
                ratios.append(hs / lhs)
        if np.median(ratios) > 10.0:
            pinsker_ok = False
    checks = [
        ("hand-built periodic net has defect terms < 1e-10", periodic_ok),
        ("trained certificates finite and nonnegative", finite_ok),
        ("entropy within factor 10 of Pinsker lower bound", pinsker_ok),
    ]
    report(capsys, 5, "certificate diagnostics", checks)


# -- criterion 6: determinism ------------------------------------------------


def test_criterion_6_determinism(capsys, tmp_path):
    cfg = cf.load(CONFIG_DIR / "smoke_burgers.ini")
    cfg.steps = 200
    cfg.eval_every = 50
    outputs = []
    for rep in ("a", "b"):
        cfg.out_dir = str(tmp_path / rep)
        dirs = rn.run_all(cfg)
        outputs.append([(Path(d) / "metrics.csv").read_bytes()
                        for d in dirs])
    checks = [("metrics files byte-identical across reruns",
               outputs[0] == outputs[1])]
    report(capsys, 6, "deterministic pipeline", checks)
