"""Bit-accurate 16-bit fixed-point inference for both predistorter families.

The emulation follows a declared register-placement policy rather than any
particular silicon: multiplier products are kept at double width and summed
exactly, and values are rounded back to the working format once per adder
tree — per neuron pre-activation in the network, per FIR accumulator in the
polynomial. Envelope powers round after every multiply, which is what makes
high-order branches starve to zero at low drive. All arithmetic is done in
float64 on values that are exact multiples of the format LSB, so results
are bitwise deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .mempoly import MemoryPolyModel
from .nn import DenseNet
from .signals import IqSignal

__all__ = [
    "FixedFormat",
    "FixedPointStats",
    "quantize",
    "nn_forward_fixed",
    "poly_forward_fixed",
]

_ROUNDINGS = ("round_half_even", "truncate")
_OVERFLOWS = ("saturate", "wrap")


@dataclass(frozen=True)
class FixedFormat:
    """Two's-complement format: 1 sign/integer region, frac_bits fraction."""

    total_bits: int = 16
    frac_bits: int = 15
    rounding: str = "round_half_even"
    overflow: str = "saturate"

    def __post_init__(self):
        if not 0 < self.frac_bits < self.total_bits:
            raise ConfigurationError(
                f"need 0 < frac_bits < total_bits, got {self.frac_bits}/{self.total_bits}"
            )
        if self.rounding not in _ROUNDINGS:
            raise ConfigurationError(f"rounding must be one of {_ROUNDINGS}")
        if self.overflow not in _OVERFLOWS:
            raise ConfigurationError(f"overflow must be one of {_OVERFLOWS}")

    @property
    def lsb(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def max_value(self) -> float:
        return 2.0 ** (self.total_bits - self.frac_bits - 1) - self.lsb

    @property
    def min_value(self) -> float:
        return -(2.0 ** (self.total_bits - self.frac_bits - 1))


@dataclass
class FixedPointStats:
    """Out-of-range and underflow tallies accumulated across a run."""

    sat_events: int = 0
    branch_zeros: dict = field(default_factory=dict)
    branch_samples: dict = field(default_factory=dict)

    def record_branch(self, label: str, zeros: int, total: int) -> None:
        self.branch_zeros[label] = self.branch_zeros.get(label, 0) + zeros
        self.branch_samples[label] = self.branch_samples.get(label, 0) + total

    def underflow_pct(self, label: str | None = None) -> float:
        """Percent of branch outputs that quantized to exactly zero.

        With a label ("p11", "q3", ...), that branch alone; without, the
        worst branch. Returns 0.0 when nothing was tracked.
        """
        if label is not None:
            total = self.branch_samples.get(label, 0)
            return 100.0 * self.branch_zeros.get(label, 0) / total if total else 0.0
        pcts = [
            100.0 * self.branch_zeros[k] / self.branch_samples[k]
            for k in self.branch_samples
            if self.branch_samples[k]
        ]
        return max(pcts) if pcts else 0.0


def _quantize_real(x: np.ndarray, fmt: FixedFormat, stats: FixedPointStats | None) -> np.ndarray:
    scale = 2.0**fmt.frac_bits
    scaled = x * scale
    if fmt.rounding == "round_half_even":
        codes = np.rint(scaled)
    else:
        codes = np.floor(scaled)
    lo = -(2.0 ** (fmt.total_bits - 1))
    hi = 2.0 ** (fmt.total_bits - 1) - 1
    out_of_range = (codes < lo) | (codes > hi)
    if stats is not None:
        stats.sat_events += int(np.count_nonzero(out_of_range))
    if fmt.overflow == "saturate":
        codes = np.clip(codes, lo, hi)
    else:
        span = 2.0**fmt.total_bits
        codes = lo + np.mod(codes - lo, span)
    return codes / scale


def quantize(x, fmt: FixedFormat | None = None, stats: FixedPointStats | None = None):
    """Round/saturate each real component onto the format's code grid.

    Idempotent and monotone; out-of-range components are tallied in
    ``stats.sat_events`` when a stats object is supplied.
    """
    fmt = fmt or FixedFormat()
    arr = np.asarray(x)
    if np.iscomplexobj(arr):
        out = _quantize_real(arr.real.astype(np.float64), fmt, stats) + 1j * _quantize_real(
            arr.imag.astype(np.float64), fmt, stats
        )
    else:
        out = _quantize_real(arr.astype(np.float64), fmt, stats)
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return complex(out) if np.iscomplexobj(arr) else float(out)
    return out


def nn_forward_fixed(
    net: DenseNet,
    x: IqSignal,
    fmt: FixedFormat | None = None,
    stats: FixedPointStats | None = None,
) -> IqSignal:
    """Dense-network forward pass in fixed point.

    Weights, biases, and inputs are quantized; each neuron's products and
    bias are summed exactly at double width and rounded once at the adder
    tree output; ReLU is a sign select. The bypass is wiring into the output
    adder, not a stored coefficient — it multiplies nothing in the count and
    is applied exactly here, with only a final range check on the sum.
    """
    fmt = fmt or FixedFormat()
    x2 = np.stack([x.samples.real, x.samples.imag])
    h = quantize(x2, fmt, stats)
    xq2 = h
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        wq = quantize(w, fmt, stats)
        bq = quantize(b, fmt, stats)
        pre = quantize(wq @ h + bq[:, None], fmt, stats)
        h = pre if i == len(net.weights) - 1 else np.maximum(pre, 0.0)
    z = quantize(h + net.linear_bypass @ xq2, fmt, stats)
    return IqSignal(z[0] + 1j * z[1], x.sample_rate_hz)


def poly_forward_fixed(
    model: MemoryPolyModel,
    x: IqSignal,
    fmt: FixedFormat | None = None,
    stats: FixedPointStats | None = None,
) -> IqSignal:
    """Memory-polynomial forward pass in fixed point.

    Per branch: |x|^2 is rounded once after the squaring adder, every further
    envelope multiply rounds, and the branch value x.|x|^(p-1) rounds per
    component — the stream whose zeros feed the underflow tally. Complex FIR
    tap products stay exact at double width with one rounding at each branch
    accumulator, and branch outputs are summed in-format.
    """
    fmt = fmt or FixedFormat()
    s = model.shape
    xq = quantize(x.samples, fmt, stats)
    n = xq.size
    r2 = quantize(xq.real**2 + xq.imag**2, fmt, stats)

    def branch_value(base: np.ndarray, order: int) -> np.ndarray:
        if order == 1:
            return base
        env = r2
        for _ in range((order - 1) // 2 - 1):
            env = quantize(env * r2, fmt, stats)
        return quantize(base * env, fmt, stats)

    def delayed(v: np.ndarray, m: int) -> np.ndarray:
        if m == 0:
            return v
        out = np.zeros_like(v)
        out[m:] = v[:-m]
        return out

    def fir(v: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        acc = np.zeros(n, dtype=np.complex128)
        for m, c in enumerate(coeffs):
            acc += complex(c) * delayed(v, m)
        return quantize(acc, fmt, stats)

    total = np.zeros(n, dtype=np.complex128)
    alpha_q = quantize(model.alpha, fmt, stats)
    for i, p in enumerate(range(1, s.p_max + 1, 2)):
        v = branch_value(xq, p)
        if stats is not None:
            stats.record_branch(f"p{p}", int(np.count_nonzero(v == 0)), n)
        total = quantize(total + fir(v, alpha_q[i]), fmt, stats)
    if s.n_conj_orders:
        beta_q = quantize(model.beta, fmt, stats)
        xc = xq.conj()
        for i, q in enumerate(range(1, s.q_max + 1, 2)):
            v = branch_value(xc, q)
            if stats is not None:
                stats.record_branch(f"q{q}", int(np.count_nonzero(v == 0)), n)
            total = quantize(total + fir(v, beta_q[i]), fmt, stats)
    if s.include_dc:
        total = quantize(total + quantize(model.dc, fmt, stats), fmt, stats)
    return IqSignal(total, x.sample_rate_hz)
