"""Seeded spectral synthesis of stationary isotropic Gaussian fields.

A realization carries the field together with its exact gradient and Hessian
on a regular periodic grid: derivative fields are produced in the spectral
domain (multiplication by i*lam_j and -lam_j*lam_k of the same random
coefficients), never by differencing the sampled values, so the jet is
consistent to machine precision with one underlying trigonometric polynomial.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .spectrum import SpectralDensity, moment_Ik

__all__ = [
    "GridSpec",
    "FieldRealization",
    "NyquistError",
    "synthesize",
    "jet_statistics",
    "evaluate_offgrid",
    "dump_realization",
    "load_realization",
]

_MAX_GRID_POINTS = 64_000_000  # default memory budget (~0.5 GB per array)


class NyquistError(ValueError):
    """Grid too coarse (or too small) for the requested spectral content."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic sampling grid for a cube [-N, N]^m with wrap padding.

    The synthesized torus has side 2 * N * padding_factor; the retained
    window is the central [-N, N]^m.
    """

    m: int
    half_width: float
    points_per_unit: int
    padding_factor: float = 2.0

    def __post_init__(self):
        if self.m not in (2, 3):
            raise ValueError("only m = 2 and m = 3 grids are supported")
        if self.half_width <= 0 or self.points_per_unit < 1:
            raise ValueError("invalid grid extent or resolution")
        if self.padding_factor < 2.0:
            raise ValueError("padding_factor must be >= 2 (periodic-wrap guard)")

    @property
    def period(self) -> float:
        return 2.0 * self.half_width * self.padding_factor

    @property
    def spacing(self) -> float:
        return 1.0 / self.points_per_unit

    @property
    def n_per_side(self) -> int:
        n = int(round(self.period * self.points_per_unit))
        return n + (n % 2)  # keep it even

    @property
    def nyquist_radius(self) -> float:
        return np.pi * self.points_per_unit


@dataclass(frozen=True)
class FieldRealization:
    """One seeded sample of (X, grad X, hess X) on a GridSpec.

    ``gradient`` has shape (m, n, ..., n); ``hessian`` maps the upper-triangle
    index pair (i, j), i <= j, to an array of grid shape.
    """

    spec: GridSpec
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    gradient: np.ndarray
    hessian: dict[tuple[int, int], np.ndarray]
    seed: int
    spectral_cutoff: float
    _spline_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def hess_entry(self, i: int, j: int) -> np.ndarray:
        return self.hessian[(i, j) if i <= j else (j, i)]

    def origin(self) -> np.ndarray:
        return np.array([ax[0] for ax in self.axes])


def _spectral_cutoff(w: SpectralDensity, m: int, mass_tol: float = 1e-6) -> float:
    """Radius containing all but mass_tol of the spectral mass of s_m."""
    total = moment_Ik(w, m - 1)
    rmax = w.support_radius()
    grid = np.linspace(0.0, rmax, 4097)
    dens = w(grid) * grid ** (m - 1)
    cum = np.cumsum(dens) * (grid[1] - grid[0])
    idx = np.searchsorted(cum, (1.0 - mass_tol) * total)
    return float(grid[min(idx, len(grid) - 1)])


def synthesize(w: SpectralDensity, spec: GridSpec, seed: int) -> FieldRealization:
    """Sample the centered stationary field with spectral density w.

    Hermitian-free variant of spectral synthesis: draw one complex standard
    normal per lattice frequency, scale by sqrt(2 (2 pi)^(-m/2) w(|lam|)
    dlam^m), and keep the real part of the inverse transform.  The law of the
    result matches the target covariance on the torus exactly.
    """
    m, n = spec.m, spec.n_per_side
    if n**m > _MAX_GRID_POINTS:
        raise MemoryError(
            f"grid of {n}^{m} points exceeds the configured budget"
        )
    cutoff = _spectral_cutoff(w, m)
    if cutoff > spec.nyquist_radius:
        raise NyquistError(
            f"spectral mass extends to radius {cutoff:.3g} but the grid only "
            f"resolves {spec.nyquist_radius:.3g}; raise points_per_unit"
        )
    freqs = 2.0 * np.pi * np.fft.fftfreq(n, d=spec.spacing)
    lam = np.meshgrid(*([freqs] * m), indexing="ij")
    rad = np.sqrt(sum(x**2 for x in lam))
    dlam = 2.0 * np.pi / spec.period
    amp = np.sqrt(2.0 * (2.0 * np.pi) ** (-m / 2.0) * w(rad) * dlam**m)

    rng = np.random.default_rng(seed)
    z = rng.standard_normal(rad.shape) + 1j * rng.standard_normal(rad.shape)
    coeff = amp * z / np.sqrt(2.0)

    scale = float(n**m)  # ifftn normalization -> plain Fourier sum

    def transform(mult):
        return np.real(np.fft.ifftn(coeff * mult)) * scale

    values = transform(1.0)
    gradient = np.stack([transform(1j * lam[j]) for j in range(m)])
    hessian = {
        (i, j): transform(-lam[i] * lam[j])
        for i in range(m)
        for j in range(i, m)
    }
    axes = tuple(
        -spec.period / 2.0 + spec.spacing * np.arange(n) for _ in range(m)
    )
    return FieldRealization(
        spec=spec,
        axes=axes,
        values=values,
        gradient=gradient,
        hessian=hessian,
        seed=seed,
        spectral_cutoff=cutoff,
    )


def jet_statistics(fields: list[FieldRealization], stride: int = 4) -> dict:
    """Pooled empirical second moments of (X, grad X, hess X).

    Returns a dict keyed by moment label with (estimate, stderr) pairs; the
    standard error is over the per-realization means, which respects the
    strong spatial correlation within one realization.
    """
    if len(fields) < 2:
        raise ValueError("need at least 2 realizations")
    m = fields[0].spec.m
    labels: dict[str, tuple] = {"X.X": ("v", "v")}
    for i in range(m):
        labels[f"X.g{i}"] = ("v", ("g", i))
        for j in range(i, m):
            labels[f"g{i}.g{j}"] = (("g", i), ("g", j))
            labels[f"X.h{i}{j}"] = ("v", ("h", i, j))
    pairs = [(i, j) for i in range(m) for j in range(i, m)]
    for a in range(len(pairs)):
        for b in range(a, len(pairs)):
            i, j = pairs[a]
            k, l = pairs[b]
            labels[f"h{i}{j}.h{k}{l}"] = (("h", i, j), ("h", k, l))

    def pick(f: FieldRealization, key):
        sl = (slice(None, None, stride),) * m
        if key == "v":
            return f.values[sl]
        if key[0] == "g":
            return f.gradient[key[1]][sl]
        return f.hess_entry(key[1], key[2])[sl]

    out = {}
    for label, (ka, kb) in labels.items():
        per_real = np.array(
            [float(np.mean(pick(f, ka) * pick(f, kb))) for f in fields]
        )
        est = per_real.mean()
        se = per_real.std(ddof=1) / np.sqrt(len(per_real))
        out[label] = (est, se)
    return out


def _filtered(field_r: FieldRealization, key, order: int = 5) -> np.ndarray:
    cache = field_r._spline_cache
    if key not in cache:
        if key == "v":
            arr = field_r.values
        elif key[0] == "g":
            arr = field_r.gradient[key[1]]
        else:
            arr = field_r.hess_entry(key[1], key[2])
        cache[key] = ndimage.spline_filter(arr, order=order, mode="grid-wrap")
    return cache[key]


def _to_index_coords(field_r: FieldRealization, pts: np.ndarray) -> np.ndarray:
    origin = field_r.origin()
    return (pts - origin).T / field_r.spec.spacing


def interpolate_component(field_r: FieldRealization, key, pts: np.ndarray) -> np.ndarray:
    """Quintic-spline evaluation of one stored array at points (k, m)."""
    coords = _to_index_coords(field_r, pts)
    return ndimage.map_coordinates(
        _filtered(field_r, key), coords, order=5, prefilter=False, mode="grid-wrap"
    )


def evaluate_offgrid(field_r: FieldRealization, t) -> dict:
    """C^2-consistent jet (X, grad X, hess X) at an arbitrary point.

    Points must lie inside the padded torus window; the interpolant is an
    exact-at-nodes tensor-product quintic spline of each stored array.
    """
    t = np.atleast_2d(np.asarray(t, dtype=float))
    m = field_r.spec.m
    half = field_r.spec.period / 2.0
    if np.any(np.abs(t) > half):
        raise ValueError("point outside the padded grid domain")
    x = interpolate_component(field_r, "v", t)
    grad = np.stack(
        [interpolate_component(field_r, ("g", i), t) for i in range(m)]
    )
    hess = {
        (i, j): interpolate_component(field_r, ("h", i, j), t)
        for i in range(m)
        for j in range(i, m)
    }
    squeeze = t.shape[0] == 1
    if squeeze:
        x = float(x[0])
        grad = grad[:, 0]
        hess = {k: float(v[0]) for k, v in hess.items()}
    return {"value": x, "gradient": grad, "hessian": hess}


# --- binary reproducibility dump -----------------------------------------

_MAGIC = b"CFLD1\x00"


def dump_realization(field_r: FieldRealization, path) -> None:
    """Little-endian binary dump: header (spec + seed) then float64 arrays."""
    spec = field_r.spec
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                "<iqdid",
                spec.m,
                field_r.seed,
                spec.half_width,
                spec.points_per_unit,
                spec.padding_factor,
            )
        )
        fh.write(struct.pack("<d", field_r.spectral_cutoff))
        arrays = [field_r.values] + [field_r.gradient[i] for i in range(spec.m)]
        arrays += [field_r.hessian[k] for k in sorted(field_r.hessian)]
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_realization(path, w: SpectralDensity | None = None) -> FieldRealization:
    """Inverse of dump_realization (w only used to re-label, not re-sample)."""
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a critfield realization dump")
        m, seed, half_width, ppu, pad = struct.unpack("<iqdid", fh.read(32))
        (cutoff,) = struct.unpack("<d", fh.read(8))
        spec = GridSpec(m=m, half_width=half_width, points_per_unit=ppu, padding_factor=pad)
        n = spec.n_per_side
        shape = (n,) * m
        count = int(np.prod(shape))

        def read_arr():
            return np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape).copy()

        values = read_arr()
        gradient = np.stack([read_arr() for _ in range(m)])
        hessian = {}
        for i in range(m):
            for j in range(i, m):
                hessian[(i, j)] = read_arr()
    axes = tuple(-spec.period / 2.0 + spec.spacing * np.arange(n) for _ in range(m))
    return FieldRealization(
        spec=spec, axes=axes, values=values, gradient=gradient,
        hessian=hessian, seed=seed, spectral_cutoff=cutoff,
    )
