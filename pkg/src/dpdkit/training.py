"""Two-phase iterative training: fit an amplifier model, train the DPD through it.

Each outer iteration transmits the current predistorter's output through the
real (simulated) amplifier, refits a dense-network amplifier model from the
observed input/output pairs, and then refines the predistorter by
backpropagating through the frozen model toward a unit-gain cascade. The
amplifier is only ever touched through its ``apply`` method — training sees
signal pairs, never coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .nn import (
    DenseNet,
    NnGradients,
    glorot_net,
    nn_backward,
    nn_backward_through_frozen,
    nn_forward,
)
from .ofdm import OfdmConfig, generate_ofdm
from .signals import IqSignal, estimate_gain, _fmt

__all__ = [
    "DEFAULT_DPD_SHAPE",
    "DEFAULT_PA_MODEL_SHAPE",
    "TrainConfig",
    "TrainRecord",
    "TrainLog",
    "AdamState",
    "adam_step",
    "train_pa_nn",
    "train_dpd_nn",
    "run_full_training",
]


@dataclass(frozen=True)
class TrainConfig:
    outer_iterations: int = 2
    epochs_per_iteration: tuple[int, ...] = (20, 5)
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 1024
    train_symbols: int = 10
    val_symbols: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "epochs_per_iteration", tuple(self.epochs_per_iteration))
        # 0 is allowed: the sweep harness treats it as "no training at all"
        # and reports the untouched passthrough baseline
        if self.outer_iterations < 0:
            raise ConfigurationError(f"outer_iterations must be >= 0, got {self.outer_iterations}")
        if len(self.epochs_per_iteration) != self.outer_iterations:
            raise ConfigurationError(
                f"epochs_per_iteration has {len(self.epochs_per_iteration)} entries "
                f"for {self.outer_iterations} iterations"
            )
        if any(e < 1 for e in self.epochs_per_iteration):
            raise ConfigurationError("every epoch count must be positive")
        if self.learning_rate <= 0 or self.adam_eps <= 0:
            raise ConfigurationError("learning_rate and adam_eps must be positive")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1), got {v}")
        if self.batch_size < 1 or self.train_symbols < 1 or self.val_symbols < 1:
            raise ConfigurationError("batch_size and symbol counts must be positive")


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    phase: str
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainLog:
    records: list[TrainRecord] = field(default_factory=list)

    def append(self, record: TrainRecord) -> None:
        if not (np.isfinite(record.train_mse) and np.isfinite(record.val_mse)):
            raise DivergenceError(f"non-finite loss in {record.phase} epoch {record.epoch}")
        self.records.append(record)

    def phase_records(self, phase: str) -> list[TrainRecord]:
        return [r for r in self.records if r.phase == phase]

    def to_csv(self, path) -> None:
        lines = ["iteration,phase,epoch,train_mse,val_mse"]
        for r in self.records:
            lines.append(
                f"{r.iteration},{r.phase},{r.epoch},{_fmt(r.train_mse)},{_fmt(r.val_mse)}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    step: int = 0

    @classmethod
    def fresh(cls, net: DenseNet) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in net.weights],
            m_biases=[np.zeros_like(b) for b in net.biases],
            v_weights=[np.zeros_like(w) for w in net.weights],
            v_biases=[np.zeros_like(b) for b in net.biases],
        )


def adam_step(net: DenseNet, grads: NnGradients, state: AdamState, cfg: TrainConfig) -> None:
    """One bias-corrected Adam update, in place on the net and state.

    Raises:
        DivergenceError: if any gradient entry is non-finite.
    """
    for g in grads.weights + grads.biases:
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient; aborting the training phase")
    state.step += 1
    t = state.step
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for params, grad_list, m_list, v_list in (
        (net.weights, grads.weights, state.m_weights, state.v_weights),
        (net.biases, grads.biases, state.m_biases, state.v_biases),
    ):
        for p, g, m, v in zip(params, grad_list, m_list, v_list):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + cfg.adam_eps)


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    err = a - b
    return float((np.mean(err.real**2) + np.mean(err.imag**2)) / 2.0)


def _run_epochs(step_fn, eval_fn, net, cfg, epochs, n_samples, *, iteration, phase, log, rng):
    """Shared mini-batch loop: shuffle, step, and log one row per epoch."""
    state = AdamState.fresh(net)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n_samples)
        weighted = 0.0
        for start in range(0, n_samples, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grads = step_fn(batch)
            adam_step(net, grads, state, cfg)
            weighted += grads.loss * len(batch)
        log.append(
            TrainRecord(
                iteration=iteration,
                phase=phase,
                epoch=epoch,
                train_mse=weighted / n_samples,
                val_mse=eval_fn(),
            )
        )
    return net


def train_pa_nn(
    pairs: tuple[IqSignal, IqSignal],
    net: DenseNet,
    cfg: TrainConfig,
    *,
    val_pairs: tuple[IqSignal, IqSignal] | None = None,
    epochs: int | None = None,
    iteration: int = 1,
    log: TrainLog | None = None,
) -> tuple[DenseNet, TrainLog]:
    """Fit the amplifier model net to (input, gain-normalized output) pairs.

    ``pairs`` is (x̂, y/G). Validation defaults to the training pair when no
    held-out pair is supplied.
    """
    x_hat, y_norm = pairs
    if len(x_hat) != len(y_norm):
        raise ConfigurationError(f"pair length mismatch: {len(x_hat)} vs {len(y_norm)}")
    if val_pairs is None:
        val_pairs = pairs
    if epochs is None:
        epochs = cfg.epochs_per_iteration[0]
    log = log if log is not None else TrainLog()
    rng = np.random.default_rng([cfg.seed, 10 + iteration, 0])

    def step(batch):
        return nn_backward(
            net,
            IqSignal(x_hat.samples[batch], x_hat.sample_rate_hz),
            IqSignal(y_norm.samples[batch], y_norm.sample_rate_hz),
        )

    def evaluate():
        out = nn_forward(net, val_pairs[0])
        return _mse(out.samples, val_pairs[1].samples)

    net = _run_epochs(
        step, evaluate, net, cfg, epochs, len(x_hat),
        iteration=iteration, phase="pa_model", log=log, rng=rng,
    )
    return net, log


def train_dpd_nn(
    dpd: DenseNet,
    pa_model: DenseNet,
    x: IqSignal,
    cfg: TrainConfig,
    *,
    x_val: IqSignal | None = None,
    epochs: int | None = None,
    iteration: int = 1,
    log: TrainLog | None = None,
) -> tuple[DenseNet, TrainLog]:
    """Refine the predistorter through the frozen amplifier model.

    Minimizes the MSE between pa_model(dpd(x)) and x itself; only the
    predistorter is updated.
    """
    if x_val is None:
        x_val = x
    if epochs is None:
        epochs = cfg.epochs_per_iteration[0]
    log = log if log is not None else TrainLog()
    rng = np.random.default_rng([cfg.seed, 10 + iteration, 1])

    def step(batch):
        return nn_backward_through_frozen(
            dpd, pa_model, IqSignal(x.samples[batch], x.sample_rate_hz)
        )

    def evaluate():
        cascade = nn_forward(pa_model, nn_forward(dpd, x_val))
        return _mse(cascade.samples, x_val.samples)

    dpd = _run_epochs(
        step, evaluate, dpd, cfg, epochs, len(x),
        iteration=iteration, phase="dpd", log=log, rng=rng,
    )
    return dpd, log


#: Default (hidden_layers, width) for the predistorter and the amplifier model.
#: The model is wider than the predistorter on purpose: its accuracy bounds
#: what the predistorter can learn, and its multiplies never ship — only the
#: predistorter runs at the transmitter, so only its shape shows up in the
#: complexity accounting.
DEFAULT_DPD_SHAPE = (1, 14)
DEFAULT_PA_MODEL_SHAPE = (2, 24)


def run_full_training(
    pa,
    shapes: tuple[tuple[int, int], tuple[int, int]] | tuple[int, int] | None = None,
    cfg: TrainConfig | None = None,
    waveform: OfdmConfig | None = None,
) -> tuple[DenseNet, TrainLog]:
    """The full iterative procedure; returns the final predistorter and log.

    ``shapes`` is a pair ((dpd_hidden_layers, dpd_width),
    (model_hidden_layers, model_width)); a single (hidden_layers, width)
    tuple is applied to both nets, and None selects the defaults above.
    Iteration 1 transmits the raw frame; later iterations transmit the
    current predistorter's output, so the model sees the amplifier in the
    region the predistorter actually drives. The validation frame reuses the
    waveform numerology with the next seed.
    """
    if cfg is None:
        cfg = TrainConfig()
    if shapes is None:
        dpd_shape, model_shape = DEFAULT_DPD_SHAPE, DEFAULT_PA_MODEL_SHAPE
    else:
        shapes = tuple(shapes)
        if len(shapes) == 2 and all(isinstance(v, (int, np.integer)) for v in shapes):
            dpd_shape = model_shape = (int(shapes[0]), int(shapes[1]))
        else:
            dpd_shape, model_shape = shapes
    if waveform is None:
        waveform = OfdmConfig(
            n_subcarriers=600, n_symbols=cfg.train_symbols, constellation="qam16", seed=1
        )
    elif waveform.n_symbols != cfg.train_symbols:
        waveform = replace(waveform, n_symbols=cfg.train_symbols)
    _, x_train = generate_ofdm(waveform)
    _, x_val = generate_ofdm(
        replace(waveform, n_symbols=cfg.val_symbols, seed=waveform.seed + 1)
    )

    pa_net = glorot_net(*model_shape, seed=[cfg.seed, 0])
    dpd = glorot_net(*dpd_shape, seed=[cfg.seed, 5])
    log = TrainLog()

    for iteration in range(1, cfg.outer_iterations + 1):
        epochs = cfg.epochs_per_iteration[iteration - 1]
        if iteration == 1:
            x_hat, x_hat_val = x_train, x_val
        else:
            x_hat = nn_forward(dpd, x_train)
            x_hat_val = nn_forward(dpd, x_val)
        y = pa.apply(x_hat)
        y_val = pa.apply(x_hat_val)
        g = estimate_gain(x_hat, y)
        y_norm = IqSignal(y.samples / g, y.sample_rate_hz)
        y_val_norm = IqSignal(y_val.samples / g, y_val.sample_rate_hz)

        pa_net, _ = train_pa_nn(
            (x_hat, y_norm), pa_net, cfg,
            val_pairs=(x_hat_val, y_val_norm),
            epochs=epochs, iteration=iteration, log=log,
        )
        dpd, _ = train_dpd_nn(
            dpd, pa_net, x_train, cfg,
            x_val=x_val, epochs=epochs, iteration=iteration, log=log,
        )
    return dpd, log
