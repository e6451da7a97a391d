"""Spectral roll-off point (SROP) computation for 1-D signals and 2-D maps.

The roll-off point of a spectrum is the smallest frequency bin below which a
fraction ``kappa`` of the total spectral energy lies.  For images the 2-D
power spectrum is first reduced to a 1-D radial profile; applying the 1-D
roll-off to that profile gives a quarter-turn-rotation-invariant scalar per
feature map.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, TooSmallError, ZeroEnergyError

DEFAULT_KAPPA = 0.85

# Relative slack on the cumulative-energy threshold so that spectra whose
# cumulative sum lands exactly on kappa * total (e.g. a uniform spectrum)
# resolve to the boundary bin despite floating-point rounding.
_THRESHOLD_RTOL = 1e-12


@dataclass
class Spectrum1D:
    """One-sided spectrum normalized to unit mass over ``[band_lo, band_hi]``.

    ``values[i]`` is the normalized magnitude of bin ``band_lo + i``.
    ``diagnostics`` optionally carries bookkeeping from the producing
    transform (e.g. energy dropped outside the radial disk).
    """

    values: np.ndarray
    band_lo: int
    band_hi: int
    diagnostics: dict | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.band_lo > self.band_hi:
            raise ParameterError("band_lo must not exceed band_hi")
        if self.values.ndim != 1 or self.values.size != self.band_hi - self.band_lo + 1:
            raise ParameterError("values length must equal band_hi - band_lo + 1")
        if np.any(self.values < 0):
            raise ParameterError("spectrum values must be non-negative")

    @property
    def band(self) -> tuple[int, int]:
        return (self.band_lo, self.band_hi)


@dataclass
class Spectrum2D:
    """Centered 2-D magnitude grid with the DC bin at ``(n // 2, n // 2)``."""

    grid: np.ndarray
    n: int
    dc_index: tuple[int, int]

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=np.float64)
        if self.grid.ndim != 2 or self.grid.shape[0] != self.grid.shape[1]:
            raise ParameterError("grid must be square")
        if self.grid.shape[0] != self.n:
            raise ParameterError("n must match grid size")
        if self.dc_index != (self.n // 2, self.n // 2):
            raise ParameterError("dc_index must be (n // 2, n // 2)")
        if np.any(self.grid < 0):
            raise ParameterError("spectrum entries must be non-negative")


@dataclass
class SropValue:
    """Roll-off bin plus its band-normalized position and the cut fraction."""

    bin: int
    normalized: float
    kappa: float


@dataclass
class FeatureMapTensor:
    """A ``c x n x n`` activation volume with layer bookkeeping."""

    data: np.ndarray
    layer_name: str = ""
    source: str = "input_image"

    _SOURCES = ("randomized", "pretrained", "input_image")

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data)
        if self.data.ndim != 3 or self.data.shape[1] != self.data.shape[2]:
            raise ParameterError("data must have shape (channels, n, n)")
        if self.data.shape[0] < 1:
            raise ParameterError("need at least one channel")
        if self.data.shape[1] < 3:
            raise TooSmallError("maps smaller than 3 x 3 have no radial bins")
        if self.source not in self._SOURCES:
            raise ParameterError(f"source must be one of {self._SOURCES}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> int:
        return self.data.shape[1]


def power_spectrum_1d(
    signal, band: tuple[int, int] | None = None, squared: bool = False
) -> Spectrum1D:
    """One-sided magnitude spectrum, normalized to sum to 1 over ``band``.

    ``band`` defaults to ``(0, len(signal) // 2)``, i.e. DC through Nyquist.
    ``squared=True`` uses |F|^2 instead of |F| before normalizing.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("signal must be one-dimensional")
    if x.size < 2:
        raise ParameterError("signal needs at least two samples")
    if not np.all(np.isfinite(x)):
        raise ParameterError("signal contains non-finite values")
    nyquist = x.size // 2
    if band is None:
        band = (0, nyquist)
    b1, b2 = int(band[0]), int(band[1])
    if not (0 <= b1 <= b2 <= nyquist):
        raise ParameterError(f"band must satisfy 0 <= b1 <= b2 <= {nyquist}")
    mag = np.abs(np.fft.rfft(x))[b1 : b2 + 1]
    if squared:
        mag = mag * mag
    total = float(mag.sum())
    if total <= 0.0:
        raise ZeroEnergyError("signal has no energy in the requested band")
    return Spectrum1D(values=mag / total, band_lo=b1, band_hi=b2)


def normalize_srop(bin: int, b1: int, b2: int) -> float:
    """Map a roll-off bin onto [0, 1] within its band; 0 for a one-bin band."""
    if not (b1 <= bin <= b2):
        raise ParameterError(f"bin {bin} outside band ({b1}, {b2})")
    if b2 == b1:
        return 0.0
    return (bin - b1) / (b2 - b1)


def srop_from_spectrum(s: Spectrum1D, kappa: float = DEFAULT_KAPPA) -> SropValue:
    """Smallest bin whose cumulative mass from ``band_lo`` reaches ``kappa``."""
    if not (0.0 < kappa <= 1.0):
        raise ParameterError("kappa must lie in (0, 1]")
    total = float(s.values.sum())
    if total <= 0.0:
        raise ZeroEnergyError("spectrum has zero total energy")
    cumulative = np.cumsum(s.values)
    threshold = kappa * total * (1.0 - _THRESHOLD_RTOL)
    offset = int(np.searchsorted(cumulative, threshold))
    offset = min(offset, s.values.size - 1)
    roll_bin = s.band_lo + offset
    return SropValue(
        bin=roll_bin,
        normalized=normalize_srop(roll_bin, s.band_lo, s.band_hi),
        kappa=kappa,
    )


def power_spectrum_2d(image, squared: bool = False) -> Spectrum2D:
    """Centered 2-D DFT magnitude grid of a square image (DC at ``n // 2``)."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ParameterError("image must be square (n x n)")
    n = x.shape[0]
    if n < 3:
        raise TooSmallError("image must be at least 3 x 3")
    if not np.all(np.isfinite(x)):
        raise ParameterError("image contains non-finite values")
    grid = np.abs(np.fft.fftshift(np.fft.fft2(x)))
    if squared:
        grid = grid * grid
    return Spectrum2D(grid=grid, n=n, dc_index=(n // 2, n // 2))


def radial_bin_count(n: int) -> int:
    """Number of unit-width radius bins minus one for an ``n x n`` spectrum.

    ``m = floor(sqrt(2) * (n - 1) / 2) - 1``; bins run 0..m inclusive.
    """
    if n < 3:
        raise TooSmallError("radial bins are defined only for n >= 3")
    return int(np.floor(np.sqrt(2.0) * (n - 1) / 2.0)) - 1


_bin_map_cache: dict[int, tuple[list[np.ndarray], int]] = {}
_bin_map_lock = threading.Lock()


def _rotation_bin_maps(n: int) -> tuple[list[np.ndarray], int]:
    """Annulus index maps for the four quarter-turn rotations of the plane.

    Cells are binned by the distance of their frequency vector from zero
    frequency in the *unshifted* DFT layout (negative components wrap to
    ``n - |f|``), so annuli grow as full quarter rings out to the last bin
    instead of being clipped by the grid corners.  Binning every cell under
    all four rotations of its frequency vector and averaging makes the
    profile invariant under quarter-turn rotations of the input.  A map
    entry of -1 marks a rotation copy falling beyond bin m (dropped).
    """
    with _bin_map_lock:
        cached = _bin_map_cache.get(n)
    if cached is not None:
        return cached
    m = radial_bin_count(n)
    c = n // 2
    freq = np.arange(n, dtype=np.int64) - c
    fu = freq[:, None]
    fv = freq[None, :]
    limit = (m + 1) * (m + 1)
    maps: list[np.ndarray] = []
    u, v = fu, fv
    for _ in range(4):
        a = np.where(u >= 0, u, u + n)
        b = np.where(v >= 0, v, v + n)
        r2 = a * a + b * b
        rb = np.floor(np.sqrt(r2.astype(np.float64))).astype(np.int64)
        # exact integer square root: fix any float rounding at bin edges
        rb = np.where((rb + 1) * (rb + 1) <= r2, rb + 1, rb)
        rb = np.where(rb * rb > r2, rb - 1, rb)
        rb[r2 >= limit] = -1
        maps.append(rb)
        u, v = v, -u
    with _bin_map_lock:
        _bin_map_cache[n] = (maps, m)
    return maps, m


def radial_profile(s: Spectrum2D) -> Spectrum1D:
    """Reduce a centered 2-D spectrum to a 1-D profile over radius bins 0..m.

    Each annulus value is the sum of grid entries whose radius r satisfies
    ``k <= r < k + 1``, averaged over the four quarter-turn rotations of the
    frequency plane (see ``_rotation_bin_maps``).  The result is normalized
    to unit mass; energy falling beyond bin m is reported in
    ``diagnostics['dropped_energy']``.
    """
    maps, m = _rotation_bin_maps(s.n)
    grid = s.grid
    profile = np.zeros(m + 1, dtype=np.float64)
    dropped = 0.0
    for rb in maps:
        flat_rb = rb.ravel()
        flat_s = grid.ravel()
        valid = flat_rb >= 0
        profile += np.bincount(flat_rb[valid], weights=flat_s[valid], minlength=m + 1)
        dropped += float(flat_s[~valid].sum())
    profile /= 4.0
    dropped /= 4.0
    total = float(profile.sum())
    if total <= 0.0:
        raise ZeroEnergyError("no spectral energy inside the radial disk")
    return Spectrum1D(
        values=profile / total,
        band_lo=0,
        band_hi=m,
        diagnostics={
            "dropped_energy": dropped,
            "in_disk_energy": total,
            "total_energy": float(grid.sum()),
        },
    )


def _band_restrict(profile: Spectrum1D, band_lo: int) -> Spectrum1D:
    if band_lo > profile.band_hi:
        raise ParameterError("band is empty after DC exclusion")
    values = profile.values[band_lo - profile.band_lo :]
    total = float(values.sum())
    if total <= 0.0:
        raise ZeroEnergyError("no spectral energy above the excluded bins")
    return Spectrum1D(values=values / total, band_lo=band_lo, band_hi=profile.band_hi)


def srop_2d(
    image,
    kappa: float = DEFAULT_KAPPA,
    *,
    squared: bool = False,
    exclude_dc: bool = False,
) -> SropValue:
    """Roll-off point of a square image via its radial spectrum profile."""
    profile = radial_profile(power_spectrum_2d(image, squared=squared))
    if exclude_dc:
        profile = _band_restrict(profile, 1)
    return srop_from_spectrum(profile, kappa)


def srop_feature_map(
    t: FeatureMapTensor,
    kappa: float = DEFAULT_KAPPA,
    *,
    squared: bool = False,
    exclude_dc: bool = False,
) -> list[SropValue | None]:
    """Per-channel roll-off points; zero-energy channels yield ``None``.

    ``None`` entries flag channels whose map carries no spectral energy
    (e.g. fully dead ReLU outputs); callers exclude them from statistics
    and report the count.
    """
    out: list[SropValue | None] = []
    for channel in t.data:
        try:
            out.append(
                srop_2d(channel, kappa, squared=squared, exclude_dc=exclude_dc)
            )
        except ZeroEnergyError:
            out.append(None)
    return out
