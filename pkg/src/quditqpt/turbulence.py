"""Kolmogorov phase screens and the slit-qudit channels they induce.

Units are SI throughout (metres, radians). Spatial frequencies in the phase
spectrum are in cycles per metre.
"""

import re
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import KrausChannel
from .errors import GeometryMismatch, OutOfRange

# Hufnagel-Valley defaults (HV-5/7 family)
HV_WIND = 21.0
HV_GROUND = 1.7e-14

WAVELENGTH = 405e-9
PATH_LENGTH = 500.0
GRID_N = 512
# 4 slits of 20 mm pitch across N/2 = 256 pixels
GRID_DX = 0.08 / 256

SUBHARMONIC_LEVELS = 3
KOLMOGOROV_PSD = 0.023
# 2 * (24/5 * Gamma(6/5))**(5/6)
STRUCTURE_COEFF = 6.883877182293811

MODES = ("diagonal-phase", "tilt-shift")


def cn2_profile(h: float, wind: float = HV_WIND, ground: float = HV_GROUND) -> float:
    """Hufnagel-Valley refractive-index structure constant Cn^2(h) in m^(-2/3).

    ``h`` is altitude above sea level in metres and must lie in [0, 20000];
    ``wind`` is the rms high-altitude wind speed (m/s), ``ground`` the
    ground-layer strength.
    """
    if not 0.0 <= h <= 20000.0:
        raise OutOfRange(f"altitude {h!r} m outside [0, 20000]")
    return (
        0.00594 * (wind / 27.0) ** 2 * (1e-5 * h) ** 10 * np.exp(-h / 1000.0)
        + 2.7e-16 * np.exp(-h / 1500.0)
        + ground * np.exp(-h / 100.0)
    )


def fried_parameter(cn2: float, path_length: float, wavelength: float) -> float:
    """Plane-wave Fried parameter for constant Cn^2 along the path."""
    k = 2 * np.pi / wavelength
    with np.errstate(divide="ignore"):
        return float((0.423 * k**2 * cn2 * path_length) ** (-3.0 / 5.0))


@dataclass(frozen=True)
class TurbulenceParams:
    altitude: float
    path_length: float = PATH_LENGTH
    wavelength: float = WAVELENGTH
    n: int = GRID_N
    dx: float = GRID_DX
    r0_override: float | None = None
    wind: float = HV_WIND
    ground: float = HV_GROUND

    def __post_init__(self):
        if self.n < 256 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 256, got {self.n}")
        if self.dx <= 0 or self.path_length <= 0 or self.wavelength <= 0:
            raise ValueError("dx, path_length and wavelength must be positive")
        if self.r0_override is not None and self.r0_override <= 0:
            raise ValueError("r0 must be positive")

    @property
    def cn2(self) -> float:
        return cn2_profile(self.altitude, self.wind, self.ground)

    @property
    def r0(self) -> float:
        if self.r0_override is not None:
            return self.r0_override
        return fried_parameter(self.cn2, self.path_length, self.wavelength)


@dataclass(frozen=True, eq=False)
class PhaseScreen:
    grid: np.ndarray
    dx: float
    r0: float
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    def wrapped(self) -> np.ndarray:
        return np.mod(self.grid, 2 * np.pi)


def kolmogorov_psd(f: np.ndarray, r0: float) -> np.ndarray:
    """Phase power spectral density ``0.023 r0^(-5/3) f^(-11/3)``, zero at f = 0."""
    out = np.zeros_like(f, dtype=float)
    nz = f > 0
    out[nz] = KOLMOGOROV_PSD * r0 ** (-5.0 / 3.0) * f[nz] ** (-11.0 / 3.0)
    return out


@lru_cache(maxsize=8)
def _unit_amplitude(n: int, dx: float) -> np.ndarray:
    """``sqrt(PSD) * df`` on the FFT grid for r0 = 1 m."""
    df = 1.0 / (n * dx)
    fx = np.fft.fftfreq(n, dx)
    amp = np.sqrt(kolmogorov_psd(np.hypot(fx[None, :], fx[:, None]), 1.0)) * df
    amp.setflags(write=False)
    return amp


def _fft_screen(n: int, dx: float, r0: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    noise *= _unit_amplitude(n, dx) * r0 ** (-5.0 / 6.0)
    return np.real(np.fft.ifft2(noise)) * n * n


@lru_cache(maxsize=None)
def _ring_moments() -> np.ndarray:
    """Cell-integrated spectral weights for one 3x3 subharmonic ring.

    For the cell centred on integer offset n (unit spacing) this is
    ``int_cell |u|^(-5/3) d^2u / |n|^2``: the cell's share of the
    ``P(f) f^2`` moment that sets the small-separation structure function,
    expressed as an equivalent point weight at the cell centre. Point sampling
    ``|n|^(-11/3)`` would under-count the steep low-frequency end.
    """
    t = (np.arange(256) + 0.5) / 256 - 0.5
    ux, uy = np.meshgrid(t, t)
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            nx, ny = j - 1, i - 1
            if nx == 0 and ny == 0:
                continue
            u = np.hypot(ux + nx, uy + ny)
            out[i, j] = np.mean(u ** (-5.0 / 3.0)) / (nx * nx + ny * ny)
    return out


# Each further ring would carry 3^(-1/3) of the previous ring's P f^2 moment;
# the deepest ring absorbs that geometric tail so the unresolved innermost cell
# is not simply dropped.
_TAIL_FACTOR = 1.0 / (1.0 - 3.0 ** (-1.0 / 3.0))


def _subharmonics(n: int, dx: float, r0: float, rng: np.random.Generator, levels: int) -> np.ndarray:
    size = n * dx
    x = (np.arange(n) - n / 2) * dx
    low = np.zeros((n, n))
    for p in range(1, levels + 1):
        df = 1.0 / (3.0**p * size)
        k = np.array([-1.0, 0.0, 1.0]) * df
        var = KOLMOGOROV_PSD * r0 ** (-5.0 / 3.0) * df ** (-5.0 / 3.0) * _ring_moments()
        if p == levels:
            var = var * _TAIL_FACTOR
        cn = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))) * np.sqrt(var)
        # separable sum over the 3x3 frequency grid: rows vary with y, columns with x
        e = np.exp(2j * np.pi * np.outer(x, k))
        low += np.real(e @ cn @ e.T)
    return low - low.mean()


def phase_screen(p: TurbulenceParams, seed: int, levels: int = SUBHARMONIC_LEVELS) -> PhaseScreen:
    """FFT spectral synthesis plus ``levels`` rings of subharmonics.

    Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    r0 = p.r0
    if not np.isfinite(r0):
        return PhaseScreen(np.zeros((p.n, p.n)), p.dx, r0, seed)
    hi = _fft_screen(p.n, p.dx, r0, rng)
    lo = _subharmonics(p.n, p.dx, r0, rng, levels) if levels else 0.0
    grid = hi - hi.mean() + lo
    return PhaseScreen(grid, p.dx, r0, seed)


def structure_function(screens, separations) -> np.ndarray:
    """Ensemble- and space-averaged ``<(phi(x+r) - phi(x))^2>`` along both axes.

    Separations are in metres and rounded to whole pixels.
    """
    screens = list(screens)
    if len(screens) < 1:
        raise GeometryMismatch("need at least one screen")
    n, dx = screens[0].n, screens[0].dx
    for s in screens:
        if s.n != n or not np.isclose(s.dx, dx, rtol=1e-12):
            raise GeometryMismatch("screens differ in grid size or spacing")
    lags = np.rint(np.asarray(separations, dtype=float) / dx).astype(int)
    if np.any(lags < 0) or np.any(lags >= n):
        raise GeometryMismatch("separation outside the screen")
    out = np.zeros(len(lags))
    for i, lag in enumerate(lags):
        if lag == 0:
            continue
        total = 0.0
        for s in screens:
            g = s.grid
            total += np.mean((g[:, lag:] - g[:, :-lag]) ** 2)
            total += np.mean((g[lag:, :] - g[:-lag, :]) ** 2)
        out[i] = total / (2 * len(screens))
    return out


def kolmogorov_structure(r, r0: float) -> np.ndarray:
    return STRUCTURE_COEFF * (np.asarray(r, dtype=float) / r0) ** (5.0 / 3.0)


def fit_power_law(r, values) -> tuple[float, float]:
    """Least-squares fit of ``log D = slope log r + c``; returns ``(slope, exp(c))``."""
    slope, icept = np.polyfit(np.log(r), np.log(values), 1)
    return float(slope), float(np.exp(icept))


@dataclass(frozen=True)
class SlitGeometry:
    """``d`` vertical slits of width ``width`` at spacing ``pitch``, centred on the grid."""

    d: int = 4
    pitch: float = 0.02
    width: float = 0.01
    height: float = 0.04

    def __post_init__(self):
        if self.d < 2:
            raise GeometryMismatch("need at least two slits")
        if not 0 < self.width < self.pitch:
            raise GeometryMismatch("slit width must be positive and smaller than the pitch")
        if self.height <= 0:
            raise GeometryMismatch("slit height must be positive")

    def centers(self) -> np.ndarray:
        return (np.arange(self.d) - (self.d - 1) / 2) * self.pitch

    def masks(self, n: int, dx: float) -> np.ndarray:
        """Boolean pixel masks, shape ``(d, n, n)``."""
        if self.d * self.pitch > n * dx or self.height > n * dx:
            raise GeometryMismatch("slit aperture does not fit inside the screen")
        x = (np.arange(n) + 0.5 - n / 2) * dx
        rows = np.abs(x) < self.height / 2
        out = np.zeros((self.d, n, n), dtype=bool)
        for ell, c in enumerate(self.centers()):
            cols = np.abs(x - c) < self.width / 2
            if not cols.any() or not rows.any():
                raise GeometryMismatch("slit narrower than one pixel")
            out[ell] = rows[:, None] & cols[None, :]
        return out


def default_geometry(p: TurbulenceParams, d: int = 4) -> SlitGeometry:
    """Slits spanning the central N/2 pixels, width half the pitch."""
    pitch = p.n * p.dx / (2 * d)
    return SlitGeometry(d=d, pitch=pitch, width=pitch / 2, height=2 * pitch)


def slit_operator(
    screen: PhaseScreen,
    geom: SlitGeometry,
    mode: str = "tilt-shift",
    path_length: float = PATH_LENGTH,
    wavelength: float = WAVELENGTH,
) -> np.ndarray:
    """Single-mask slit operator K (d x d).

    ``diagonal-phase``: ``K[l, l]`` is the mean phasor ``<exp(i phi)>`` over
    slit l. ``tilt-shift``: the mean x-gradient over slit l displaces the slit
    by ``path_length * g * wavelength / (2 pi)`` in the far field; the
    amplitude goes to slit ``l + round(shift / pitch)`` or is lost when that
    falls outside the aperture. When several slits land on the same target
    their entries are scaled by ``1/sqrt(count)`` so that ``||K|| <= 1``.
    """
    return _SlitPixels(geom, screen.n, screen.dx).operator(screen.grid, mode, path_length, wavelength)


class _SlitPixels:
    """Pixel index sets of each slit, reused across an ensemble."""

    def __init__(self, geom: SlitGeometry, n: int, dx: float):
        self.geom = geom
        self.dx = dx
        self.idx = [np.nonzero(m) for m in geom.masks(n, dx)]
        for rows, cols in self.idx:
            if cols.min() < 1 or cols.max() > n - 2:
                raise GeometryMismatch("slit touches the screen edge")

    def operator(self, grid, mode, path_length, wavelength) -> np.ndarray:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        d = self.geom.d
        amps = np.array([np.exp(1j * grid[rows, cols]).mean() for rows, cols in self.idx])
        if mode == "diagonal-phase":
            return np.diag(amps)
        targets = []
        for ell, (rows, cols) in enumerate(self.idx):
            grad = (grid[rows, cols + 1] - grid[rows, cols - 1]).mean() / (2 * self.dx)
            shift = path_length * grad * wavelength / (2 * np.pi)
            targets.append(ell + int(np.rint(shift / self.geom.pitch)))
        counts = np.bincount([t for t in targets if 0 <= t < d], minlength=d)
        k = np.zeros((d, d), dtype=complex)
        for ell, t in enumerate(targets):
            if 0 <= t < d:
                k[t, ell] = amps[ell] / np.sqrt(counts[t])
        return k


def mask_seed(seed: int, m: int) -> int:
    """Seed for mask ``m`` of an ensemble, independent of generation order."""
    return int(np.random.SeedSequence([seed, m]).generate_state(1, np.uint64)[0] >> 1)


def slit_operators(
    p: TurbulenceParams,
    geom: SlitGeometry,
    mode: str = "tilt-shift",
    n_masks: int = 500,
    seed: int = 0,
) -> np.ndarray:
    """``n_masks`` single-mask operators from independently seeded screens."""
    if n_masks < 1:
        raise ValueError("n_masks must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    pixels = _SlitPixels(geom, p.n, p.dx)
    ops = np.empty((n_masks, geom.d, geom.d), dtype=complex)
    for m in range(n_masks):
        screen = phase_screen(p, mask_seed(seed, m))
        ops[m] = pixels.operator(screen.grid, mode, p.path_length, p.wavelength)
    return ops


def turbulence_channel(
    p: TurbulenceParams,
    geom: SlitGeometry | None = None,
    mode: str = "tilt-shift",
    n_masks: int = 500,
    seed: int = 0,
) -> KrausChannel:
    """Ensemble channel ``rho -> (1/n) sum_m K_m rho K_m^dagger`` over random masks."""
    geom = default_geometry(p) if geom is None else geom
    ops = slit_operators(p, geom, mode, n_masks, seed)
    return KrausChannel(
        ops / np.sqrt(n_masks),
        label=f"turbulence:{mode}",
        metadata={"altitude": p.altitude, "r0": p.r0, "n_masks": n_masks, "seed": seed},
    )


# --- export -----------------------------------------------------------------

_RAW_MAGIC = b"PSCR"
_RAW_HEADER = struct.Struct("<4sIdd q")


def screen_to_gray(screen: PhaseScreen) -> np.ndarray:
    """Wrapped phase as 8-bit gray: 0 rad -> 255 (white), 2 pi -> 0 (black)."""
    frac = screen.wrapped() / (2 * np.pi)
    return np.rint(255 * (1 - frac)).astype(np.uint8)


def write_pgm(path, screen: PhaseScreen) -> None:
    img = screen_to_gray(screen)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval, then exactly one whitespace byte
    tokens, pos = [], 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(\S+)").match(data, pos)
        if m is None:
            raise ValueError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5" or int(tokens[3]) != 255:
        raise ValueError("not an 8-bit binary PGM file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8).reshape(h, w)


def write_raw(path, screen: PhaseScreen) -> None:
    """Little-endian header (magic, N, dx, r0, seed) followed by N*N float64."""
    seed = -1 if screen.seed is None else screen.seed
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(_RAW_MAGIC, screen.n, screen.dx, screen.r0, seed))
        fh.write(np.ascontiguousarray(screen.grid, dtype="<f8").tobytes())


def read_raw(path) -> PhaseScreen:
    with open(path, "rb") as fh:
        head = fh.read(_RAW_HEADER.size)
        magic, n, dx, r0, seed = _RAW_HEADER.unpack(head)
        if magic != _RAW_MAGIC:
            raise ValueError("not a raw phase-screen file")
        grid = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
    return PhaseScreen(grid, dx, r0, None if seed < 0 else seed)
