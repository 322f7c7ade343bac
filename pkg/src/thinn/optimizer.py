"""Full-batch Adam training loop with staircase learning-rate decay.

The loop is deterministic for a fixed configuration: collocation points are
redrawn on a fixed schedule from seeds derived from the run seed and the
resample index, and the loss tape is replayed in the same order every step.
A non-finite loss or gradient aborts the run with a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tape as tp


class TrainAbort(RuntimeError):
    """Raised when the loss or gradient becomes non-finite."""


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    lr0: float = 1e-4
    decay_gamma: float = 0.5
    decay_every: int = 10000
    resample_every: int = 10000
    eval_every: int = 1000
    seed: int = 0


def learning_rate(cfg, step):
    """Staircase decay lr0 * gamma^(step // decay_every)."""
    return cfg.lr0 * cfg.decay_gamma ** (step // cfg.decay_every)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, n_params):
        return cls(m=np.zeros(n_params), v=np.zeros(n_params))

    def update(self, grad):
        """Advance one step; returns the bias-corrected direction."""
        self.step += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.step)
        v_hat = self.v / (1.0 - self.beta2 ** self.step)
        return m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    rows: list = field(default_factory=list)
    final_loss: tuple = None
    steps_done: int = 0


def train(nets, make_loss, sampler, cfg, eval_fn=None):
    """Optimize the parameters of `nets` jointly.

    `sampler(i)` returns the collocation scheme for resample index i.
    `make_loss(leaves_list, scheme)` builds the loss on a fresh tape, where
    `leaves_list[j]` are the taped parameter leaves of `nets[j]`.
    `eval_fn(step, breakdown)` may return a row to collect; it is called at
    step 0, every `eval_every` steps, and after the final step.
    """
    states = [AdamState.init(net.n_params) for net in nets]
    result = TrainResult()
    scheme = None
    for step in range(cfg.steps):
        if step % cfg.resample_every == 0:
            scheme = sampler(step // cfg.resample_every)
        tape = tp.Tape()
        leaves_list = [net.param_leaves(tape) for net in nets]
        breakdown = make_loss(leaves_list, scheme)
        total = breakdown.total
        loss_val = float(tp._val(total))
        if not np.isfinite(loss_val):
            raise TrainAbort(
                f"non-finite loss at step {step}: "
                f"i_dyn={tp._val(breakdown.i_dyn)!r} "
                f"i_0={tp._val(breakdown.i_0)!r} "
                f"l_bc={tp._val(breakdown.l_bc)!r}")
        flat_leaves = [node for leaves in leaves_list
                       for pair in leaves for node in pair]
        grads = tape.gradient(total, flat_leaves)
        lr = learning_rate(cfg, step)
        pos = 0
        for net, state in zip(nets, states):
            n_leaves = 2 * (len(net.widths) - 1)
            flat = net.flatten_grads(None, grads[pos:pos + n_leaves])
            pos += n_leaves
            if not np.all(np.isfinite(flat)):
                raise TrainAbort(f"non-finite gradient at step {step} "
                                 f"(loss {loss_val:.6g})")
            net.theta -= lr * state.update(flat)
        if eval_fn is not None and (step % cfg.eval_every == 0
                                    or step == cfg.steps - 1):
            row = eval_fn(step, breakdown)
            if row is not None:
                result.rows.append(row)
        result.final_loss = breakdown.floats()
        result.steps_done = step + 1
    return result
