"""Dyadic frequency decomposition on a periodic grid.

Functions are treated as L-periodic samples on a power-of-two grid.  The
low-frequency cutoff ``chi`` equals 1 on |xi| <= 1 and 0 on |xi| >= 3/2,
interpolating in between with a normalised smoothstep built from the bump
exp(-1/(1-u^2)).  The annular window is psi(xi) = chi(xi) - chi(2 xi), and
level-j blocks multiply the discrete Fourier transform by psi(2^-j xi)
(level -1 uses chi(2 xi)).  Because the windows are literal differences of
chi evaluations and the 2^-j scalings are exact in binary floating point,
the partition of unity telescopes to machine precision.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlockVanishesError, ConfigurationError, ParameterError

__all__ = [
    "DyadicAnalyzer",
    "GridFunction",
    "BesovNorm",
    "build_partition",
    "chi",
    "block",
    "besov_norm",
    "bernstein_ratio",
]

_STEP_NODES = 65537


def _smoothstep_table() -> tuple[np.ndarray, np.ndarray]:
    """Cumulative integral of the bump exp(-1/(1-u^2)), normalised to a
    decreasing step h with h(0) = 1, h(1) = 0."""
    s = np.linspace(0.0, 1.0, _STEP_NODES)
    u = 2.0 * s - 1.0
    inner = np.zeros_like(u)
    core = np.abs(u) < 1.0
    inner[core] = np.exp(-1.0 / (1.0 - u[core] ** 2))
    # Simpson cumulative sum on a uniform grid
    h = s[1] - s[0]
    cum = np.zeros_like(inner)
    cum[1:] = np.cumsum((inner[:-1] + inner[1:]) * 0.5 * h)
    # correct trapezoid to Simpson-level accuracy via Richardson on pairs
    cum_mid = np.zeros_like(inner)
    cum_mid[2::2] = np.cumsum(
        (inner[:-2:2] + 4.0 * inner[1:-1:2] + inner[2::2]) * (h / 3.0)
    )
    cum[2::2] = cum_mid[2::2]
    cum[1::2] = 0.5 * (cum[0:-1:2] + cum[2::2])  # midpoint fill, O(h^4) local
    table = 1.0 - cum / cum[-1]
    return s, table


_STEP_S, _STEP_H = _smoothstep_table()


def chi(xi) -> np.ndarray:
    """Radial cutoff: 1 on |xi| <= 1, 0 on |xi| >= 3/2, smooth between."""
    r = np.abs(np.asarray(xi, dtype=float))
    s = (r - 1.0) * 2.0
    out = np.interp(s, _STEP_S, _STEP_H, left=1.0, right=0.0)
    out = np.where(r <= 1.0, 1.0, out)
    out = np.where(r >= 1.5, 0.0, out)
    return out


@dataclass(frozen=True)
class DyadicAnalyzer:
    """Periodic grid together with its dyadic frequency windows.

    Immutable after construction; block and norm operations are pure, so an
    analyzer can be shared freely across threads.
    """

    dim: int
    L: float
    grid_size: int
    J_max: int = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError("dim must be 1 or 2")
        n = self.grid_size
        if n < 64 or n & (n - 1) != 0:
            raise ConfigurationError("grid_size must be a power of two >= 64")
        if self.L <= 0:
            raise ParameterError("period L must be positive")
        nyquist = math.pi * n / self.L
        j = int(math.floor(math.log2(nyquist / 1.5)))
        while 2**j * 1.5 >= nyquist:
            j -= 1
        if j < 2:
            raise ConfigurationError(
                "Nyquist frequency too small to resolve dyadic levels >= 2; "
                "increase grid_size or decrease L"
            )
        object.__setattr__(self, "J_max", j)

    @property
    def dx(self) -> float:
        return self.L / self.grid_size

    def x_axis(self) -> np.ndarray:
        return np.arange(self.grid_size) * self.dx

    def x_centered(self) -> np.ndarray:
        """Fundamental domain [-L/2, L/2) in FFT storage order."""
        x = self.x_axis()
        return np.where(x < self.L / 2, x, x - self.L)

    def xi_axis(self) -> np.ndarray:
        return np.fft.fftfreq(self.grid_size, d=self.dx) * 2.0 * math.pi

    def xi_radius(self) -> np.ndarray:
        """|xi| on the full frequency grid (dim-dependent shape)."""
        ax = self.xi_axis()
        if self.dim == 1:
            return np.abs(ax)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        return np.hypot(gx, gy)

    def window(self, j: int) -> np.ndarray:
        """Fourier multiplier of the level-j block operator."""
        if j < -1 or j > self.J_max:
            raise ParameterError(f"level {j} outside [-1, {self.J_max}]")
        rho = self.xi_radius()
        if j == -1:
            return chi(2.0 * rho)
        return chi(rho / 2.0**j) - chi(rho / 2.0 ** (j - 1))

    def grid_shape(self) -> tuple[int, ...]:
        return (self.grid_size,) * self.dim

    def to_config(self) -> dict:
        return {"dim": self.dim, "L": self.L, "grid_size": self.grid_size}


def build_partition(dim: int, L: float, grid_size: int) -> DyadicAnalyzer:
    """Construct the analyzer; raises if the grid cannot hold level 2."""
    return DyadicAnalyzer(dim=dim, L=float(L), grid_size=int(grid_size))


@dataclass
class GridFunction:
    """Sampled function on an analyzer's spatial grid."""

    analyzer: DyadicAnalyzer
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.analyzer.grid_shape():
            raise ParameterError(
                f"values shape {self.values.shape} does not match grid "
                f"{self.analyzer.grid_shape()}"
            )

    @staticmethod
    def from_callable(analyzer: DyadicAnalyzer, fn: Callable) -> "GridFunction":
        if analyzer.dim == 1:
            vals = fn(analyzer.x_axis())
        else:
            x = analyzer.x_axis()
            gx, gy = np.meshgrid(x, x, indexing="ij")
            vals = fn(gx, gy)
        return GridFunction(analyzer, np.asarray(vals, dtype=float))

    def fft(self) -> np.ndarray:
        return np.fft.fftn(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lp_norm(self, p: float) -> float:
        """Grid quadrature of the L^p norm with cell-measure weights."""
        if p == math.inf:
            return self.sup_norm()
        cell = self.analyzer.dx ** self.analyzer.dim
        return float((np.sum(np.abs(self.values) ** p) * cell) ** (1.0 / p))

    # -- persistence -------------------------------------------------------

    def save_csv(self, path) -> None:
        if self.analyzer.dim != 1:
            raise ParameterError("CSV export is one-dimensional")
        x = self.analyzer.x_axis()
        with open(path, "w") as fh:
            fh.write("x,value\n")
            for xi, v in zip(x, self.values):
                fh.write(f"{xi!r},{v!r}\n")

    def save_binary(self, path) -> None:
        header = struct.pack("<IdI", self.analyzer.dim, self.analyzer.L,
                             self.analyzer.grid_size)
        with open(path, "wb") as fh:
            fh.write(b"SGF1")
            fh.write(header)
            fh.write(np.ascontiguousarray(self.values, dtype=np.float64).tobytes())

    @staticmethod
    def load_binary(path) -> "GridFunction":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != b"SGF1":
                raise ConfigurationError(f"not a grid-function file: {path}")
            dim, L, n = struct.unpack("<IdI", fh.read(16))
            data = np.frombuffer(fh.read(), dtype=np.float64)
        analyzer = DyadicAnalyzer(dim=dim, L=L, grid_size=n)
        return GridFunction(analyzer, data.reshape(analyzer.grid_shape()))


def block(f: GridFunction, j: int) -> GridFunction:
    """Level-j frequency block: multiply the DFT by the level window."""
    mult = f.analyzer.window(j)
    out = np.fft.ifftn(f.fft() * mult)
    if np.isrealobj(f.values):
        out = out.real
    return GridFunction(f.analyzer, out)


def reconstruction(f: GridFunction) -> GridFunction:
    """Sum of all blocks up to J_max."""
    mult = f.analyzer.window(-1).copy()
    for j in range(f.analyzer.J_max + 1):
        mult += f.analyzer.window(j)
    out = np.fft.ifftn(f.fft() * mult)
    if np.isrealobj(f.values):
        out = out.real
    return GridFunction(f.analyzer, out)


def leakage_fraction(f: GridFunction) -> float:
    """Sup norm of the unreconstructed remainder relative to sup|f|.

    Nonzero mass above level J_max cannot be carried by the partition on
    this grid; norms computed for such functions are flagged.
    """
    rec = reconstruction(f)
    denom = f.sup_norm()
    if denom == 0.0:
        return 0.0
    return float(np.max(np.abs(f.values - rec.values)) / denom)


@dataclass(frozen=True)
class BesovNorm:
    """Value of a dyadic norm plus its spectral-leakage diagnostic."""

    value: float
    leakage: float
    leakage_warning: bool
    block_norms: tuple[float, ...]

    def __float__(self) -> float:
        return self.value


LEAKAGE_THRESHOLD = 1e-8


def besov_norm(f: GridFunction, s: float, p: float = math.inf,
               q: float = math.inf) -> BesovNorm:
    """Dyadic norm (sum_j (2^{s j} ||block_j f||_p)^q)^{1/q}.

    p, q may be math.inf.  Homogeneous of degree one in f.  If the input
    carries frequency mass above the resolvable band, the result is flagged
    (leakage_warning) rather than rejected.
    """
    if p < 1 or q < 1:
        raise ParameterError("p and q must be >= 1")
    weights = []
    spectrum = f.fft()
    analyzer = f.analyzer
    for j in range(-1, analyzer.J_max + 1):
        piece = np.fft.ifftn(spectrum * analyzer.window(j))
        if np.isrealobj(f.values):
            piece = piece.real
        g = GridFunction(analyzer, piece)
        weights.append(2.0 ** (s * j) * g.lp_norm(p))
    if q == math.inf:
        value = max(weights)
    else:
        value = float(np.sum(np.asarray(weights) ** q) ** (1.0 / q))
    leak = leakage_fraction(f)
    return BesovNorm(
        value=value,
        leakage=leak,
        leakage_warning=leak > LEAKAGE_THRESHOLD,
        block_norms=tuple(weights),
    )


def spectral_gradient(f: GridFunction, order: int = 1) -> list[GridFunction]:
    """Partial derivatives of the given order, computed spectrally.

    Returns the list of distinct partials (for order 2 in 2d: xx, xy, yy).
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    spec = f.fft()
    ax = f.analyzer.xi_axis()
    outs = []
    if f.analyzer.dim == 1:
        mults = [1j * ax] if order == 1 else [-(ax**2)]
    else:
        kx, ky = np.meshgrid(ax, ax, indexing="ij")
        if order == 1:
            mults = [1j * kx, 1j * ky]
        else:
            mults = [-(kx**2), -kx * ky, -(ky**2)]
    for m in mults:
        vals = np.fft.ifftn(spec * m)
        if np.isrealobj(f.values):
            vals = vals.real
        outs.append(GridFunction(f.analyzer, vals))
    return outs


def gradient_sup(f: GridFunction, order: int = 1) -> float:
    """Sup norm of the order-k spectral gradient (euclidean over partials)."""
    parts = spectral_gradient(f, order)
    if len(parts) == 1:
        return parts[0].sup_norm()
    stacked = np.stack([np.abs(p.values) for p in parts])
    return float(np.max(np.sqrt(np.sum(stacked**2, axis=0))))


def bernstein_ratio(f: GridFunction, j: int, k: int = 1) -> float:
    """||grad^k block_j f||_inf / (2^{k j} ||block_j f||_inf).

    Bounded by a level-independent constant for band-limited inputs.  A
    vanishing block makes the ratio undefined and is signalled.
    """
    if k not in (1, 2):
        raise ParameterError("k must be 1 or 2")
    g = block(f, j)
    denom = g.sup_norm()
    if denom <= 1e-13 * max(f.sup_norm(), 1e-300):
        raise BlockVanishesError(f"block {j} vanishes; ratio undefined")
    return gradient_sup(g, k) / (2.0 ** (k * j) * denom)
