"""Run configuration: INI-style files, validation, and verbatim echo.

A config has sections [problem], [network], [quadrature], [optimizer],
[run].  Every field is validated before any compute; the parsed config is
echoed back into each run directory so a run can be reproduced from its own
artifacts.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


PROBLEMS = ("heat", "burgers", "nse")
LOSSES = ("thinn", "pinn-l2")
DENSITY_ICS = ("sine", "bump", "constant")


@dataclass
class RunConfig:
    problem: str
    loss: str
    nu: float
    T: float
    ic: str
    ic_params: dict
    widths: tuple
    p_widths: tuple          # pressure network (nse only)
    sizes: dict              # quadrature sizes
    lr0: float
    decay_gamma: float
    decay_every: int
    steps: int
    seeds: tuple
    resample_every: int
    eval_every: int
    out_dir: str
    bc_terms: tuple = ("rho", "grad", "r")
    mean_mode_penalty: bool = False
    eval_sizes: dict = field(default_factory=dict)   # held-out rate quadrature

    def echo(self, path):
        cp = configparser.ConfigParser()
        cp["problem"] = {"kind": self.problem, "nu": repr(self.nu),
                         "T": repr(self.T), "ic": self.ic}
        for k, v in self.ic_params.items():
            cp["problem"]["ic_" + k] = repr(v)
        cp["network"] = {"widths": " ".join(map(str, self.widths))}
        if self.problem == "nse":
            cp["network"]["p_widths"] = " ".join(map(str, self.p_widths))
        cp["quadrature"] = {k: str(v) for k, v in self.sizes.items()}
        for k, v in self.eval_sizes.items():
            cp["quadrature"]["eval_" + k] = str(v)
        cp["optimizer"] = {
            "lr0": repr(self.lr0), "decay_gamma": repr(self.decay_gamma),
            "decay_every": str(self.decay_every), "steps": str(self.steps)}
        cp["run"] = {
            "loss": self.loss,
            "seeds": " ".join(map(str, self.seeds)),
            "resample_every": str(self.resample_every),
            "eval_every": str(self.eval_every),
            "out_dir": self.out_dir,
            "bc_terms": " ".join(self.bc_terms),
            "mean_mode_penalty": str(self.mean_mode_penalty).lower()}
        with open(path, "w") as f:
            cp.write(f)


def _require(cp, section, key, cast, default=None):
    if not cp.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"missing [{section}] {key}")
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


def _int_tuple(raw):
    return tuple(int(t) for t in raw.split())


def _bool(raw):
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise ValueError(raw)


def load(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    problem = _require(cp, "problem", "kind", str)
    if problem not in PROBLEMS:
        raise ConfigError(f"[problem] kind must be one of {PROBLEMS}")
    nu = _require(cp, "problem", "nu", float)
    T = _require(cp, "problem", "T", float, default=1.0)
    if nu <= 0 or T <= 0:
        raise ConfigError("[problem] nu and T must be positive")
    default_ic = "taylor-green" if problem == "nse" else "sine"
    ic = _require(cp, "problem", "ic", str, default=default_ic)
    if problem == "nse":
        if ic != "taylor-green":
            raise ConfigError("[problem] ic must be taylor-green for nse")
    elif ic not in DENSITY_ICS:
        raise ConfigError(f"[problem] ic must be one of {DENSITY_ICS}")
    ic_params = {}
    if cp.has_section("problem"):
        for key in cp["problem"]:
            if key.startswith("ic_"):
                ic_params[key[3:]] = _require(cp, "problem", key, float)

    widths = _require(cp, "network", "widths", _int_tuple)
    n_in = 3 if problem == "nse" else 2
    if len(widths) < 2 or widths[0] != n_in or widths[-1] != 1:
        raise ConfigError(f"[network] widths must run from {n_in} inputs "
                          "to 1 output")
    p_widths = ()
    if problem == "nse":
        p_widths = _require(cp, "network", "p_widths", _int_tuple,
                            default=widths)
        if len(p_widths) < 2 or p_widths[0] != 3 or p_widths[-1] != 1:
            raise ConfigError("[network] p_widths must run from 3 inputs "
                              "to 1 output")

    sizes, eval_sizes = {}, {}
    size_keys = (("n_t", "m", "n", "n_ic", "n_bd") if problem == "nse"
                 else ("n_t", "n_x", "n_ic", "n_bd"))
    for key in size_keys:
        sizes[key] = _require(cp, "quadrature", key, int)
        eval_sizes[key] = _require(cp, "quadrature", "eval_" + key, int,
                                   default=sizes[key])
        if sizes[key] <= 0:
            raise ConfigError(f"[quadrature] {key} must be positive")
    if problem == "nse" and sizes["m"] < 2 * sizes["n"] + 2:
        raise ConfigError("[quadrature] m must be at least 2n + 2")

    lr0 = _require(cp, "optimizer", "lr0", float)
    decay_gamma = _require(cp, "optimizer", "decay_gamma", float, default=0.5)
    decay_every = _require(cp, "optimizer", "decay_every", int, default=10000)
    steps = _require(cp, "optimizer", "steps", int)
    if steps < 1:
        raise ConfigError("[optimizer] steps must be at least 1")
    if lr0 < 0 or not 0 < decay_gamma <= 1 or decay_every < 1:
        raise ConfigError("[optimizer] invalid learning-rate schedule")

    loss = _require(cp, "run", "loss", str, default="thinn")
    if loss not in LOSSES:
        raise ConfigError(f"[run] loss must be one of {LOSSES}")
    seeds = _require(cp, "run", "seeds", _int_tuple)
    if not seeds:
        raise ConfigError("[run] seeds must be non-empty")
    resample_every = _require(cp, "run", "resample_every", int, default=10000)
    eval_every = _require(cp, "run", "eval_every", int, default=1000)
    if resample_every < 1 or eval_every < 1:
        raise ConfigError("[run] resample_every and eval_every must be >= 1")
    out_dir = _require(cp, "run", "out_dir", str, default="runs")
    bc_terms = tuple(_require(cp, "run", "bc_terms", str,
                              default="rho grad r").split())
    for term in bc_terms:
        if term not in ("rho", "grad", "r"):
            raise ConfigError(f"[run] unknown bc term {term!r}")
    mean_mode = _require(cp, "run", "mean_mode_penalty", _bool, default=False)

    return RunConfig(
        problem=problem, loss=loss, nu=nu, T=T, ic=ic, ic_params=ic_params,
        widths=widths, p_widths=p_widths, sizes=sizes, lr0=lr0,
        decay_gamma=decay_gamma, decay_every=decay_every, steps=steps,
        seeds=seeds, resample_every=resample_every, eval_every=eval_every,
        out_dir=out_dir, bc_terms=bc_terms, mean_mode_penalty=mean_mode,
        eval_sizes=eval_sizes)
