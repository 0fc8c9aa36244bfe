"""Memory polynomial model: basis construction, predistortion, ILA fitting.

The model is the odd-order memory polynomial with an optional conjugate
branch and optional DC term:

    x_hat(n) = sum_{p odd <= P} sum_{m=0}^{M-1} alpha[p,m] * x(n-m) |x(n-m)|^(p-1)
             + sum_{q odd <= Q} sum_{l=0}^{L-1} beta[q,l] * conj(x(n-l)) |x(n-l)|^(q-1)
             + dc

M and L count taps (delays 0..M-1), and samples before the start of the
record are taken as zero.  The basis matrix orders columns canonically:
main branch with p ascending outer and tap inner, then the conjugate branch
the same way, then the DC column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConditioningError, ConfigurationError, FormatError
from .signals import IqSignal, _fmt, estimate_gain


@dataclass(frozen=True)
class PolyShape:
    """Structural parameters of a memory polynomial."""

    p_max: int
    main_taps: int
    q_max: int = 0
    conj_taps: int = 0
    include_dc: bool = False

    def __post_init__(self):
        if self.p_max < 1 or self.p_max % 2 == 0:
            raise ConfigurationError(f"p_max must be odd and >= 1, got {self.p_max}")
        if self.main_taps < 1:
            raise ConfigurationError(f"main_taps must be >= 1, got {self.main_taps}")
        if self.q_max < 0 or (self.q_max > 0 and self.q_max % 2 == 0):
            raise ConfigurationError(f"q_max must be 0 or odd, got {self.q_max}")
        if (self.q_max == 0) != (self.conj_taps == 0):
            raise ConfigurationError(
                f"conjugate branch needs both q_max and conj_taps set "
                f"(got q_max={self.q_max}, conj_taps={self.conj_taps})"
            )
        if self.conj_taps < 0:
            raise ConfigurationError(f"conj_taps must be >= 0, got {self.conj_taps}")

    @property
    def n_main_orders(self) -> int:
        return (self.p_max + 1) // 2

    @property
    def n_conj_orders(self) -> int:
        return (self.q_max + 1) // 2 if self.q_max else 0

    @property
    def n_complex_coeffs(self) -> int:
        """Branch coefficient count, DC excluded (the headline count)."""
        return self.main_taps * self.n_main_orders + self.conj_taps * self.n_conj_orders

    @property
    def n_basis_columns(self) -> int:
        return self.n_complex_coeffs + (1 if self.include_dc else 0)

    def descriptor(self) -> str:
        text = f"poly P={self.p_max} M={self.main_taps}"
        if self.q_max:
            text += f" Q={self.q_max} L={self.conj_taps}"
        if self.include_dc:
            text += " +dc"
        return text


@dataclass
class MemoryPolyModel:
    """A memory polynomial with concrete coefficients."""

    shape: PolyShape
    alpha: np.ndarray  # (n_main_orders, main_taps) complex
    beta: np.ndarray  # (n_conj_orders, conj_taps) complex
    dc: complex = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.complex128)
        self.beta = np.asarray(self.beta, dtype=np.complex128)
        want_a = (self.shape.n_main_orders, self.shape.main_taps)
        want_b = (self.shape.n_conj_orders, self.shape.conj_taps)
        if self.alpha.shape != want_a:
            raise ConfigurationError(f"alpha shape {self.alpha.shape} != {want_a}")
        if self.beta.shape != want_b:
            raise ConfigurationError(f"beta shape {self.beta.shape} != {want_b}")
        self.dc = complex(self.dc)

    @classmethod
    def identity(cls, shape: PolyShape) -> "MemoryPolyModel":
        """The passthrough model: alpha[p=1, m=0] = 1, everything else 0."""
        alpha = np.zeros((shape.n_main_orders, shape.main_taps), dtype=np.complex128)
        alpha[0, 0] = 1.0
        beta = np.zeros((shape.n_conj_orders, shape.conj_taps), dtype=np.complex128)
        return cls(shape, alpha, beta, 0.0)

    @classmethod
    def from_coefficients(cls, shape: PolyShape, theta: np.ndarray) -> "MemoryPolyModel":
        """Unpack a canonical coefficient vector."""
        theta = np.asarray(theta, dtype=np.complex128)
        if theta.size != shape.n_basis_columns:
            raise ConfigurationError(
                f"expected {shape.n_basis_columns} coefficients, got {theta.size}"
            )
        n_main = shape.n_main_orders * shape.main_taps
        n_conj = shape.n_conj_orders * shape.conj_taps
        alpha = theta[:n_main].reshape(shape.n_main_orders, shape.main_taps)
        beta = theta[n_main : n_main + n_conj].reshape(shape.n_conj_orders, shape.conj_taps)
        dc = theta[-1] if shape.include_dc else 0.0
        return cls(shape, alpha, beta, dc)

    def coefficient_vector(self) -> np.ndarray:
        """Pack coefficients in canonical basis order."""
        parts = [self.alpha.ravel(), self.beta.ravel()]
        if self.shape.include_dc:
            parts.append(np.array([self.dc]))
        return np.concatenate(parts)


def _delayed(x: np.ndarray, m: int) -> np.ndarray:
    if m == 0:
        return x
    out = np.zeros_like(x)
    out[m:] = x[:-m]
    return out


def build_basis(x: np.ndarray, shape: PolyShape) -> np.ndarray:
    """Basis matrix (len(x) rows, shape.n_basis_columns columns), canonical order."""
    x = np.asarray(x, dtype=np.complex128)
    cols = []
    # |z|^(p-1) as an integer power of re^2 + im^2 — no square root, matching
    # how a datapath with only multipliers would build it
    for p in range(1, shape.p_max + 1, 2):
        for m in range(shape.main_taps):
            z = _delayed(x, m)
            cols.append(z * (z.real**2 + z.imag**2) ** ((p - 1) // 2))
    for q in range(1, shape.q_max + 1, 2):
        for l in range(shape.conj_taps):
            z = _delayed(x, l)
            cols.append(np.conj(z) * (z.real**2 + z.imag**2) ** ((q - 1) // 2))
    if shape.include_dc:
        cols.append(np.ones_like(x))
    return np.stack(cols, axis=1)


def _apply(model: MemoryPolyModel, x: np.ndarray) -> np.ndarray:
    return build_basis(x, model.shape) @ model.coefficient_vector()


def poly_predistort(model: MemoryPolyModel, signal: IqSignal) -> IqSignal:
    """Run a signal through the memory polynomial."""
    return IqSignal(_apply(model, signal.samples), signal.sample_rate_hz)


def rescale_cascade_gain(model: MemoryPolyModel, gain: float) -> MemoryPolyModel:
    """Back the predistorter off to a cascade gain of ``gain`` (exactly).

    Returns the model D'(x) = D(gain * x): the order-p coefficient scales by
    gain**p, so the result stays in the same model class and linearizes to
    ``gain`` times the original cascade gain. The practical use is fitting at
    unit gain and then shrinking every coefficient under the Q1.15 ceiling —
    a fitted linear term typically lands a couple percent above 1.0.
    """
    if not (np.isreal(gain) and gain > 0):
        raise ConfigurationError(f"cascade gain must be a positive real, got {gain!r}")
    gain = float(gain)
    s = model.shape
    alpha = model.alpha.copy()
    for i, p in enumerate(range(1, s.p_max + 1, 2)):
        alpha[i] *= gain**p
    beta = model.beta.copy()
    for i, q in enumerate(range(1, s.q_max + 1, 2)):
        beta[i] *= gain**q
    return MemoryPolyModel(s, alpha, beta, model.dc)


def solve_regularized_ls(
    A: np.ndarray, b: np.ndarray, regularization: float | None = None
) -> np.ndarray:
    """Solve min ||A theta - b||^2 + lam ||theta||^2 by QR on the stacked matrix.

    The default lam is 1e-8 times the mean column energy of A.  Rank
    deficiency that survives the regularization raises ConditioningError
    with a condition-number estimate.
    """
    n_cols = A.shape[1]
    if regularization is None:
        lam = 1e-8 * float(np.mean(np.sum(np.abs(A) ** 2, axis=0)))
    else:
        lam = float(regularization)
        if lam < 0:
            raise ConfigurationError(f"regularization must be >= 0, got {lam}")
    stacked = np.vstack([A, np.sqrt(lam) * np.eye(n_cols, dtype=A.dtype)])
    rhs = np.concatenate([b, np.zeros(n_cols, dtype=b.dtype)])
    theta, _, rank, _ = scipy.linalg.lstsq(stacked, rhs, lapack_driver="gelsy")
    if rank < n_cols:
        raise ConditioningError(
            f"basis is rank deficient (rank {rank} < {n_cols})",
            condition_number=float(np.linalg.cond(stacked)),
        )
    return theta


@dataclass(frozen=True)
class IlaConfig:
    """Indirect-learning fit settings."""

    shape: PolyShape
    n_iterations: int = 2
    regularization: float | None = None

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ConfigurationError(f"n_iterations must be >= 1, got {self.n_iterations}")


@dataclass
class IlaResult:
    """Outcome of fit_ila: the fitted predistorter and per-iteration LS residuals."""

    model: MemoryPolyModel
    residuals: list[float] = field(default_factory=list)


def fit_ila(pa, cfg: IlaConfig, x_train: IqSignal) -> IlaResult:
    """Fit a memory-polynomial predistorter by indirect learning.

    Each iteration transmits the current predistorter output through the PA,
    normalizes the PA output by its estimated complex gain, fits the
    postdistorter (basis of normalized output -> transmitted signal) by
    regularized least squares, and copies the coefficients to the
    predistorter.

    Args:
        pa: anything exposing apply(IqSignal) -> IqSignal (e.g. SimulatedPa).
        cfg: fit settings.
        x_train: training signal; must be at least 10 samples per coefficient.

    Returns:
        IlaResult with the final model and the relative LS residual
        ||A theta - b|| / ||b|| of each iteration.
    """
    n_cols = cfg.shape.n_basis_columns
    if len(x_train) < 10 * n_cols:
        raise ConfigurationError(
            f"training signal has {len(x_train)} samples; "
            f"need at least {10 * n_cols} for {n_cols} coefficients"
        )
    model = MemoryPolyModel.identity(cfg.shape)
    residuals: list[float] = []
    for _ in range(cfg.n_iterations):
        x_hat = poly_predistort(model, x_train)
        y = pa.apply(x_hat)
        g = estimate_gain(x_hat, y)
        A = build_basis(y.samples / g, cfg.shape)
        b = x_hat.samples
        theta = solve_regularized_ls(A, b, cfg.regularization)
        residuals.append(float(np.linalg.norm(A @ theta - b) / np.linalg.norm(b)))
        model = MemoryPolyModel.from_coefficients(cfg.shape, theta)
    return IlaResult(model, residuals)


def save_poly_model(model: MemoryPolyModel, path: str) -> None:
    """Write a model as a shape header plus branch,p,tap,re,im rows."""
    s = model.shape
    with open(path, "w") as fh:
        fh.write(
            f"shape: p_max={s.p_max} main_taps={s.main_taps} "
            f"q_max={s.q_max} conj_taps={s.conj_taps} include_dc={int(s.include_dc)}\n"
        )
        for i, p in enumerate(range(1, s.p_max + 1, 2)):
            for m in range(s.main_taps):
                c = model.alpha[i, m]
                fh.write(f"main,{p},{m},{_fmt(c.real)},{_fmt(c.imag)}\n")
        for i, q in enumerate(range(1, s.q_max + 1, 2)):
            for l in range(s.conj_taps):
                c = model.beta[i, l]
                fh.write(f"conj,{q},{l},{_fmt(c.real)},{_fmt(c.imag)}\n")
        if s.include_dc:
            fh.write(f"dc,{_fmt(model.dc.real)},{_fmt(model.dc.imag)}\n")


def _parse_shape_header(line: str, path: str) -> PolyShape:
    if not line.startswith("shape:"):
        raise FormatError(f"{path}:1: expected shape header, got {line!r}")
    fields = dict(item.split("=", 1) for item in line[len("shape:") :].split())
    try:
        return PolyShape(
            p_max=int(fields["p_max"]),
            main_taps=int(fields["main_taps"]),
            q_max=int(fields["q_max"]),
            conj_taps=int(fields["conj_taps"]),
            include_dc=bool(int(fields["include_dc"])),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}:1: bad shape header: {exc}") from exc


def load_poly_model(path: str) -> MemoryPolyModel:
    """Read a model written by save_poly_model.

    Raises:
        FormatError: on malformed rows; the message names the line number.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty model file")
    shape = _parse_shape_header(lines[0].strip(), path)
    model = MemoryPolyModel.identity(shape)
    model.alpha[:] = 0
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            if parts[0] == "dc" and len(parts) == 3:
                if not shape.include_dc:
                    raise FormatError(f"{path}:{lineno}: dc row but shape has include_dc=0")
                model.dc = complex(float(parts[1]), float(parts[2]))
                continue
            if len(parts) != 5 or parts[0] not in ("main", "conj"):
                raise FormatError(f"{path}:{lineno}: expected branch,p,tap,re,im")
            branch, p, tap = parts[0], int(parts[1]), int(parts[2])
            value = complex(float(parts[3]), float(parts[4]))
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad numeric field") from exc
        if p % 2 == 0 or p < 1:
            raise FormatError(f"{path}:{lineno}: order must be odd, got {p}")
        row = (p - 1) // 2
        if branch == "main":
            if p > shape.p_max or not 0 <= tap < shape.main_taps:
                raise FormatError(f"{path}:{lineno}: row outside declared shape")
            model.alpha[row, tap] = value
        else:
            if p > shape.q_max or not 0 <= tap < shape.conj_taps:
                raise FormatError(f"{path}:{lineno}: row outside declared shape")
            model.beta[row, tap] = value
    return model
