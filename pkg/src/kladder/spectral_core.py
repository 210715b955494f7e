"""Periodic velocity fields in Fourier space.

Coefficients are stored as Fourier-series coefficients on the full ``N**3``
cube in FFT index order (``numpy.fft.fftfreq`` layout), one complex 3-vector
per wavevector::

    u(x) = sum_k  c(k) exp(i k.x),        k = (2 pi / L) * integer triple

With this normalization ``H_0 = L**3 * sum_k |c(k)|**2`` equals the physical
integral of ``|u|**2`` over the box.  All ``H_n`` share the factor ``L**3``.

Checkpoint layout (little endian)::

    offset  size  field
    0       4     magic b"KLAD"
    4       4     version, u32 (currently 1)
    8       4     N, u32
    12      8     L, f64
    20      ...   N**3 records in C order over (ix, iy, iz) of the FFT index
                  grid; each record is six f64 values
                  (re ux, im ux, re uy, im uy, re uz, im uz)
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

CHECKPOINT_MAGIC = b"KLAD"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIId")

_AXES = (-3, -2, -1)


def fft_workers() -> int:
    """Thread cap for FFTs, read from ``KLADDER_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("KLADDER_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=True)
class WavenumberGrid:
    N: int
    L: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N % 2 or self.N < 8:
            raise ValueError(f"N must be an even integer >= 8, got {self.N!r}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L!r}")

    @property
    def k0(self) -> float:
        """Fundamental wavenumber 2*pi/L."""
        return 2.0 * np.pi / self.L

    @cached_property
    def integer_modes(self) -> np.ndarray:
        """Integer wavevector components per axis, FFT order."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).round().astype(np.int64)

    @cached_property
    def wavevectors(self) -> np.ndarray:
        """Array (3, N, N, N) of wavevector components."""
        m = self.integer_modes * self.k0
        kx, ky, kz = np.meshgrid(m, m, m, indexing="ij")
        return np.stack([kx, ky, kz])

    @cached_property
    def k2(self) -> np.ndarray:
        k = self.wavevectors
        return k[0] ** 2 + k[1] ** 2 + k[2] ** 2

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True where every integer component satisfies |m_i| <= N/3."""
        m = np.abs(self.integer_modes) <= self.N / 3.0
        return m[:, None, None] & m[None, :, None] & m[None, None, :]

    @property
    def max_component(self) -> float:
        return (self.N // 2) * self.k0

    def mode_index(self, mx: int, my: int, mz: int) -> tuple[int, int, int]:
        """Array index of the integer wavevector (mx, my, mz)."""
        for m in (mx, my, mz):
            if abs(m) > self.N // 2:
                raise ValueError(f"mode component {m} outside grid N={self.N}")
        return (mx % self.N, my % self.N, mz % self.N)

    def physical_coords(self) -> np.ndarray:
        x = np.arange(self.N) * (self.L / self.N)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


def make_grid(N: int, L: float) -> WavenumberGrid:
    return WavenumberGrid(N, float(L))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: WavenumberGrid
    coeffs: np.ndarray  # complex (3, N, N, N)

    def __post_init__(self):
        n = self.grid.N
        if self.coeffs.shape != (3, n, n, n):
            raise ValueError(f"coeffs shape {self.coeffs.shape} != (3, {n}, {n}, {n})")

    def __mul__(self, s):
        return SpectralField(self.grid, self.coeffs * s)

    __rmul__ = __mul__

    def __add__(self, other: "SpectralField"):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


def zeros(grid: WavenumberGrid) -> SpectralField:
    n = grid.N
    return SpectralField(grid, np.zeros((3, n, n, n), dtype=np.complex128))


# --- transforms -------------------------------------------------------------

def _full_from_half(half: np.ndarray, N: int) -> np.ndarray:
    """Rebuild the full Hermitian cube from an rfftn half-spectrum."""
    lead = half.shape[:-3]
    full = np.empty(lead + (N, N, N), dtype=np.complex128)
    nh = N // 2 + 1
    full[..., :nh] = half
    neg = (-np.arange(N)) % N
    mirrored = half[..., neg, :, :][..., :, neg, :]
    full[..., nh:] = np.conj(mirrored[..., N - np.arange(nh, N)])
    return full


def to_physical(coeffs: np.ndarray, N: int) -> np.ndarray:
    """Inverse transform of Hermitian coefficients onto the collocation grid."""
    half = coeffs[..., : N // 2 + 1]
    return sfft.irfftn(half, s=(N, N, N), axes=_AXES, norm="forward",
                       workers=fft_workers())


def from_physical(values: np.ndarray, N: int) -> np.ndarray:
    """Forward transform of real samples to full-cube Fourier coefficients."""
    half = sfft.rfftn(values, axes=_AXES, norm="forward", workers=fft_workers())
    return _full_from_half(half, N)


def physical(field: SpectralField) -> np.ndarray:
    return to_physical(field.coeffs, field.grid.N)


def from_values(grid: WavenumberGrid, values: np.ndarray) -> SpectralField:
    return SpectralField(grid, from_physical(np.asarray(values, dtype=float), grid.N))


# --- operators --------------------------------------------------------------

def project_coeffs(coeffs: np.ndarray, grid: WavenumberGrid) -> np.ndarray:
    k = grid.wavevectors
    k2 = grid.k2
    safe = np.where(k2 == 0.0, 1.0, k2)
    kdotc = k[0] * coeffs[0] + k[1] * coeffs[1] + k[2] * coeffs[2]
    out = coeffs - k * (kdotc / safe)
    out[:, 0, 0, 0] = 0.0
    return out


def project_div_free(field: SpectralField) -> SpectralField:
    """Leray projection ``(I - k k^T / |k|^2) c(k)``; also removes the mean."""
    return SpectralField(field.grid, project_coeffs(field.coeffs, field.grid))


def dealias(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, field.coeffs * field.grid.dealias_mask)


def spectral_weights(field: SpectralField) -> np.ndarray:
    """Per-wavevector energy density ``L**3 |c(k)|**2`` (flattened, fixed order)."""
    c = field.coeffs
    w = (c.real ** 2 + c.imag ** 2).sum(axis=0)
    return (field.grid.L ** 3) * w.ravel()


def h_norms(field: SpectralField, n_max: int) -> np.ndarray:
    """``H_0 .. H_n_max`` in one pass over the spectrum."""
    w = spectral_weights(field)
    k2 = field.grid.k2.ravel()
    out = np.empty(n_max + 1)
    k2n = np.ones_like(k2)
    for n in range(n_max + 1):
        out[n] = np.sum(k2n * w)
        k2n = k2n * k2
    return out


def h_norm(field: SpectralField, n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(h_norms(field, n)[n])


def velocity_gradient(field: SpectralField) -> np.ndarray:
    """Physical ``d u_i / d x_j`` as array (3, 3, N, N, N) indexed [i, j]."""
    k = field.grid.wavevectors
    g = 1j * field.coeffs[:, None] * k[None, :]
    return to_physical(g, field.grid.N)


def sup_norms(field: SpectralField) -> tuple[float, float]:
    """Grid maxima of ``|u|`` and of the Frobenius norm of grad u.

    Collocation points only, so both are lower bounds on the true suprema.
    """
    u = physical(field)
    umax = float(np.sqrt((u ** 2).sum(axis=0)).max())
    g = velocity_gradient(field)
    gmax = float(np.sqrt((g ** 2).sum(axis=(0, 1))).max())
    return umax, gmax


@dataclass(frozen=True)
class Spectrum:
    shell_centers: np.ndarray
    shell_energy: np.ndarray


def shell_spectrum(field: SpectralField) -> Spectrum:
    grid = field.grid
    shell = np.rint(grid.kmag.ravel() / grid.k0).astype(np.int64)
    energy = np.bincount(shell, weights=spectral_weights(field))
    centers = np.arange(energy.size) * grid.k0
    return Spectrum(centers, energy)


def divergence_defect(field: SpectralField) -> float:
    """max over k != 0 of |k.c| / (|k| |c|), zero for an empty field."""
    k = field.grid.wavevectors
    c = field.coeffs
    kdotc = np.abs(k[0] * c[0] + k[1] * c[1] + k[2] * c[2])
    norm = field.grid.kmag * np.sqrt((np.abs(c) ** 2).sum(axis=0))
    mask = norm > 0
    if not mask.any():
        return 0.0
    return float((kdotc[mask] / norm[mask]).max())


def hermitian_defect(field: SpectralField) -> float:
    N = field.grid.N
    neg = (-np.arange(N)) % N
    c = field.coeffs
    mirror = c[:, neg][:, :, neg][:, :, :, neg]
    return float(np.abs(c - np.conj(mirror)).max())


# --- constructors -----------------------------------------------------------

def single_mode(grid: WavenumberGrid, m: tuple[int, int, int], vector, phase: complex = 1.0) -> SpectralField:
    """Real field ``2 Re(phase * vector * exp(i k.x))`` for integer mode m."""
    f = zeros(grid)
    v = np.asarray(vector, dtype=np.complex128) * phase
    f.coeffs[(slice(None),) + grid.mode_index(*m)] += v
    neg = tuple(-x for x in m)
    f.coeffs[(slice(None),) + grid.mode_index(*neg)] += np.conj(v)
    return f


def shear_mode(grid: WavenumberGrid, amplitude: float = 1.0, k: int = 1) -> SpectralField:
    """``u = A sin(k z) x_hat`` with integer k (in units of 2*pi/L)."""
    # sin(kz) = (e^{ikz} - e^{-ikz}) / 2i
    return single_mode(grid, (0, 0, k), (amplitude, 0.0, 0.0), phase=-0.5j)


def random_field(grid: WavenumberGrid, seed: int, energy: float = 1.0,
                 slope: float | None = None, kmin: int = 1, kmax: int | None = None) -> SpectralField:
    """Random divergence-free dealiased field with total energy ``H_0 = energy``.

    With ``slope`` given, every populated integer shell in ``[kmin, kmax]`` is
    rescaled so its energy is proportional to ``shell**slope`` exactly.
    """
    rng = np.random.default_rng(seed)
    n = grid.N
    base = from_values(grid, rng.standard_normal((3, n, n, n)))
    c = project_coeffs(base.coeffs * grid.dealias_mask, grid)
    shell = np.rint(grid.kmag / grid.k0).astype(np.int64)
    if kmax is None:
        kmax = int(shell[grid.dealias_mask].max())
    c = c * ((shell >= kmin) & (shell <= kmax))
    if slope is not None:
        e = (np.abs(c) ** 2).sum(axis=0)
        per_shell = np.bincount(shell.ravel(), weights=e.ravel())
        target = np.zeros_like(per_shell)
        s = np.arange(per_shell.size)
        ok = per_shell > 0
        target[ok] = s[ok].astype(float) ** slope
        scale = np.zeros_like(per_shell)
        scale[ok] = np.sqrt(target[ok] / per_shell[ok])
        c = c * scale[shell]
    f = SpectralField(grid, c)
    h0 = h_norm(f, 0)
    if h0 > 0:
        f = f * np.sqrt(energy / h0)
    return f


# --- checkpoint I/O ---------------------------------------------------------

def write_checkpoint(path: str | os.PathLike, field: SpectralField) -> None:
    grid = field.grid
    header = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, grid.N, float(grid.L))
    body = np.ascontiguousarray(np.moveaxis(field.coeffs, 0, -1)).astype("<c16")
    Path(path).write_bytes(header + body.view("<f8").tobytes())


def read_checkpoint(path: str | os.PathLike) -> SpectralField:
    raw = Path(path).read_bytes()
    magic, version, N, L = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    expected = _HEADER.size + N ** 3 * 6 * 8
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} != expected {expected}")
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    c = vals.view("<c16").reshape(N, N, N, 3).astype(np.complex128)
    return SpectralField(make_grid(N, L), np.ascontiguousarray(np.moveaxis(c, -1, 0)))
