"""Space-time grids, sampled fields, synthetic generators and field I/O.

Spatial samples sit at cell centres ``origin + (i + 1/2) h`` so the box is
``[origin, origin + n h]``. Time samples sit on nodes ``t0 + j ht`` and the
final time is ``t0 + (nt - 1) ht``. Arrays are stored as
``(ncomp, nt, nz, ny, nx)``.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import (ConfigError, DomainError, FormatError, GridTooLarge,
                     OutOfDomain, VersionError)

DEFAULT_MAX_BYTES = 1 << 30
MAGIC = b"NSFD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sII4Q8d")

FIELD_KINDS = ("zero", "constant", "linear-shear", "taylor-like-smooth",
               "blowup-profile", "random-modes")
PROFILE_SHAPES = ("gaussian", "swirl")


def max_bytes() -> int:
    env = os.environ.get("NSREG_MAX_BYTES")
    return int(env) if env else DEFAULT_MAX_BYTES


@dataclass(frozen=True)
class SpaceTimeGrid:
    nx: int
    ny: int
    nz: int
    nt: int
    origin: tuple = (0.0, 0.0, 0.0, 0.0)
    spacing: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        for name in ("nx", "ny", "nz", "nt"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise DomainError(f"{name}={n} must be an integer >= 2")
            object.__setattr__(self, name, int(n))
        origin = tuple(float(v) for v in self.origin)
        spacing = tuple(float(v) for v in self.spacing)
        if len(origin) != 4 or len(spacing) != 4:
            raise DomainError("origin and spacing need 4 entries (x, y, z, t)")
        if not all(math.isfinite(v) for v in origin + spacing):
            raise DomainError("origin and spacing must be finite")
        if not all(h > 0 for h in spacing):
            raise DomainError(f"spacings must be positive, got {spacing}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def box(cls, lo, hi, n, t_range, nt):
        """Grid with ``n`` cells per axis on ``[lo, hi]^3`` and ``nt`` time nodes."""
        lo3 = np.broadcast_to(np.asarray(lo, dtype=float), (3,))
        hi3 = np.broadcast_to(np.asarray(hi, dtype=float), (3,))
        n3 = np.broadcast_to(np.asarray(n), (3,))
        t0, t1 = map(float, t_range)
        h = (hi3 - lo3) / n3
        ht = (t1 - t0) / (nt - 1)
        return cls(int(n3[0]), int(n3[1]), int(n3[2]), int(nt),
                   (lo3[0], lo3[1], lo3[2], t0), (h[0], h[1], h[2], ht))

    @property
    def shape(self):
        return (self.nt, self.nz, self.ny, self.nx)

    @property
    def n_samples(self):
        return self.nx * self.ny * self.nz * self.nt

    @property
    def cell_volume(self):
        hx, hy, hz, _ = self.spacing
        return hx * hy * hz

    @property
    def ht(self):
        return self.spacing[3]

    @property
    def t0(self):
        return self.origin[3]

    @property
    def t_final(self):
        return self.origin[3] + (self.nt - 1) * self.spacing[3]

    @property
    def box_lo(self):
        return np.array(self.origin[:3])

    @property
    def box_hi(self):
        return np.array([self.origin[i] + n * self.spacing[i]
                         for i, n in enumerate((self.nx, self.ny, self.nz))])

    @property
    def mean_spacing(self):
        return sum(self.spacing[:3]) / 3.0

    def axis(self, i):
        """Cell-centre coordinates along spatial axis i (0=x, 1=y, 2=z)."""
        n = (self.nx, self.ny, self.nz)[i]
        return self.origin[i] + (np.arange(n) + 0.5) * self.spacing[i]

    def times(self):
        return self.origin[3] + np.arange(self.nt) * self.spacing[3]

    def mesh(self):
        """Broadcastable (Z, Y, X) coordinate arrays for one time slice."""
        z = self.axis(2)[:, None, None]
        y = self.axis(1)[None, :, None]
        x = self.axis(0)[None, None, :]
        return x, y, z

    def check_budget(self, ncomp, limit=None):
        need = 8 * ncomp * self.n_samples
        limit = max_bytes() if limit is None else limit
        if need > limit:
            raise GridTooLarge(f"field needs {need} bytes, budget is {limit}")

    def pulled_back(self, lam):
        """Grid whose samples map onto this grid's samples under (x, t) -> (lam x, lam^2 t)."""
        x0, y0, z0, t0 = self.origin
        hx, hy, hz, ht = self.spacing
        return SpaceTimeGrid(self.nx, self.ny, self.nz, self.nt,
                             (x0 / lam, y0 / lam, z0 / lam, t0 / lam ** 2),
                             (hx / lam, hy / lam, hz / lam, ht / lam ** 2))

    def to_dict(self):
        return asdict(self) | {"origin": list(self.origin), "spacing": list(self.spacing)}

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ConfigError(f"unknown grid keys: {sorted(extra)}")
        try:
            return cls(d["nx"], d["ny"], d["nz"], d["nt"],
                       tuple(d.get("origin", (0, 0, 0, 0))), tuple(d.get("spacing", (1, 1, 1, 1))))
        except KeyError as exc:
            raise ConfigError(f"grid is missing {exc}") from None


@dataclass(frozen=True)
class FieldSpec:
    """Analytic description of a synthetic velocity field.

    ``lam`` applies the parabolic rescale ``lam v(lam x, lam^2 t)`` on top of
    the base field. The pressure companion is ``|v|^2`` for every kind; it is
    a test input, not a Navier-Stokes pressure.
    """

    kind: str
    grid: SpaceTimeGrid
    constant: tuple = (0.0, 0.0, 0.0)
    amplitude: float = 1.0
    wavenumber: float = math.pi
    t_blow: Optional[float] = None
    shape: str = "gaussian"
    center: tuple = (0.0, 0.0, 0.0)
    width: float = 1.0
    n_modes: int = 8
    k_max: float = 3.0
    decay: float = 0.1
    seed: int = 0
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ConfigError(f"unknown field kind {self.kind!r}; expected one of {FIELD_KINDS}")
        object.__setattr__(self, "constant", tuple(float(c) for c in self.constant))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.constant) != 3 or len(self.center) != 3:
            raise ConfigError("constant and center need 3 entries")
        if not self.lam > 0:
            raise DomainError(f"lam must be positive, got {self.lam}")
        if self.kind == "blowup-profile":
            if self.t_blow is None:
                raise ConfigError("blowup-profile needs t_blow")
            if self.shape not in PROFILE_SHAPES:
                raise ConfigError(f"unknown profile shape {self.shape!r}")
            if not self.width > 0:
                raise ConfigError("profile width must be positive")
            # the base field is evaluated at lam^2 t
            t_last = max(self.lam ** 2 * self.grid.t_final, self.lam ** 2 * self.grid.t0)
            if not self.t_blow > t_last:
                raise ConfigError(
                    f"t_blow={self.t_blow} must exceed the final evaluated time {t_last}")
        if self.kind == "random-modes" and self.n_modes < 1:
            raise ConfigError("random-modes needs n_modes >= 1")

    # evaluation -----------------------------------------------------------

    def velocity(self, x, y, z, t):
        """Rescaled velocity at broadcastable coordinates; returns shape (3, ...)."""
        lam = self.lam
        if lam == 1.0:
            return self._base(x, y, z, t)
        return lam * self._base(lam * x, lam * y, lam * z, lam * lam * t)

    def pressure(self, x, y, z, t):
        v = self.velocity(x, y, z, t)
        return np.sum(v * v, axis=0)

    def _base(self, x, y, z, t):
        x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
        out = np.zeros((3,) + x.shape)
        kind = self.kind
        if kind == "zero":
            return out
        if kind == "constant":
            for i in range(3):
                out[i] = self.constant[i]
            return out
        if kind == "linear-shear":
            out[0] = self.amplitude * x
            out[1] = -self.amplitude * y
            return out
        if kind == "taylor-like-smooth":
            k = self.wavenumber
            env = self.amplitude * np.exp(-3.0 * k * k * t)
            out[0] = env * np.sin(k * x) * np.cos(k * y) * np.cos(k * z)
            out[1] = -env * np.cos(k * x) * np.sin(k * y) * np.cos(k * z)
            return out
        if kind == "blowup-profile":
            s = self.t_blow - t
            root = np.sqrt(s)
            yy = [(x - self.center[0]) / root, (y - self.center[1]) / root,
                  (z - self.center[2]) / root]
            w = self.width
            g = self.amplitude * np.exp(-(yy[0] ** 2 + yy[1] ** 2 + yy[2] ** 2) / (2 * w * w))
            if self.shape == "gaussian":
                out[0] = g / root
            else:
                out[0] = -g * yy[1] / (w * root)
                out[1] = g * yy[0] / (w * root)
            return out
        # random-modes: sum of divergence-free Fourier modes (a x k) sin(k.x + phase)
        kv, av, phase = self._modes
        norm = self.amplitude / math.sqrt(len(kv))
        for kk, aa, ph in zip(kv, av, phase):
            amp = np.cross(aa, kk) / np.linalg.norm(kk)
            arg = kk[0] * x + kk[1] * y + kk[2] * z + ph
            env = norm * np.exp(-self.decay * float(kk @ kk) * t) * np.sin(arg)
            for i in range(3):
                out[i] += amp[i] * env
        return out

    @cached_property
    def _modes(self):
        rng = np.random.default_rng(self.seed)
        kv, av, ph = [], [], []
        while len(kv) < self.n_modes:
            k = rng.uniform(-self.k_max, self.k_max, size=3)
            if not 0.5 <= np.linalg.norm(k) <= self.k_max:
                continue
            a = rng.normal(size=3)
            a /= np.linalg.norm(a)
            kv.append(k)
            av.append(a)
            ph.append(rng.uniform(0, 2 * math.pi))
        return kv, av, ph

    # serialisation --------------------------------------------------------

    def to_dict(self):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["grid"] = self.grid.to_dict()
        d["constant"] = list(self.constant)
        d["center"] = list(self.center)
        return d

    @classmethod
    def from_dict(cls, d):
        if "kind" not in d or "grid" not in d:
            raise ConfigError("field spec needs 'kind' and 'grid'")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown field spec keys: {sorted(extra)}")
        kw = dict(d)
        kw["grid"] = SpaceTimeGrid.from_dict(d["grid"])
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class Field:
    """Sampled field with data shaped (ncomp, nt, nz, ny, nx); read-only."""

    grid: SpaceTimeGrid
    data: np.ndarray
    role: str = "velocity"
    spec: Optional[FieldSpec] = field(default=None, compare=False)

    ncomp = 3

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim == 4 and self.ncomp == 1:
            data = data[None]
        expect = (self.ncomp,) + self.grid.shape
        if data.shape != expect:
            raise DomainError(f"data shape {data.shape} does not match {expect}")
        if not np.all(np.isfinite(data)):
            raise DomainError("field values must be finite")
        if data is self.data:
            data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def scaling_power(self):
        return 2 if self.role == "pressure" else 1

    def equals(self, other) -> bool:
        return (type(self) is type(other) and self.grid == other.grid
                and np.array_equal(self.data, other.data))

    def slice_magnitude(self, j):
        d = self.data[:, j]
        return np.sqrt(np.sum(d * d, axis=0))

    def slice_gradient(self, j):
        """Array (ncomp, 3, nz, ny, nx) of spatial derivatives d_k f_i at time index j."""
        hx, hy, hz, _ = self.grid.spacing
        out = np.empty((self.ncomp, 3) + self.grid.shape[1:])
        for i in range(self.ncomp):
            gz, gy, gx = np.gradient(self.data[i, j], hz, hy, hx)
            out[i, 0], out[i, 1], out[i, 2] = gx, gy, gz
        return out

    def _cached_slice(self, key, j, make):
        cache = self.__dict__.setdefault("_slice_cache", {})
        out = cache.get((key, j))
        if out is None:
            out = make(j)
            out.flags.writeable = False
            cache[(key, j)] = out
        return out

    def abs_slice(self, j):
        """|f| at time index j, shape (nz, ny, nx); cached."""
        return self._cached_slice("abs", j, self.slice_magnitude)

    def grad_sq_slice(self, j):
        """Squared Frobenius norm of the spatial gradient at time index j; cached."""
        def make(k):
            g = self.slice_gradient(k)
            return np.sum(g * g, axis=(0, 1))
        return self._cached_slice("gradsq", j, make)

    @property
    def magnitude(self):
        """|f| for every sample, shape (nt, nz, ny, nx)."""
        return np.stack([self.abs_slice(j) for j in range(self.grid.nt)])


class VectorField(Field):
    ncomp = 3


class ScalarField(Field):
    ncomp = 1

    def __init__(self, grid, data, role="pressure", spec=None):
        super().__init__(grid, data, role, spec)

    @property
    def values(self):
        return self.data[0]


def generate_field(spec: FieldSpec, with_pressure: bool = False, limit=None):
    """Sample a FieldSpec on its grid; optionally also the |v|^2 pressure companion."""
    g = spec.grid
    g.check_budget(4 if with_pressure else 3, limit)
    x, y, z = g.mesh()
    data = np.empty((3,) + g.shape)
    for j, t in enumerate(g.times()):
        data[:, j] = spec.velocity(x, y, z, t)
    v = VectorField(g, data, "velocity", spec)
    if not with_pressure:
        return v
    return v, ScalarField(g, np.sum(data * data, axis=0), "pressure", spec)


def _interpolate(field_, points_t, points_spatial):
    """4-linear interpolation in (t, z, y, x) at the given target coordinates."""
    g = field_.grid
    axes = (g.times(), g.axis(2), g.axis(1), g.axis(0))
    t, (x, y, z) = points_t, points_spatial
    for a, pts, name in zip(axes, (t, z, y, x), "tzyx"):
        span = a[-1] - a[0]
        tol = 1e-12 * max(1.0, abs(a[0]), abs(a[-1]))
        if pts.min() < a[0] - tol or pts.max() > a[-1] + tol or span <= 0:
            raise OutOfDomain(f"rescaled {name}-range [{pts.min()}, {pts.max()}] leaves "
                              f"the source samples [{a[0]}, {a[-1]}]")
    T, Z, Y, X = np.meshgrid(np.clip(t, axes[0][0], axes[0][-1]),
                             np.clip(z, axes[1][0], axes[1][-1]),
                             np.clip(y, axes[2][0], axes[2][-1]),
                             np.clip(x, axes[3][0], axes[3][-1]), indexing="ij")
    pts = np.stack([T.ravel(), Z.ravel(), Y.ravel(), X.ravel()], axis=-1)
    out = np.empty((field_.ncomp,) + T.shape)
    for i in range(field_.ncomp):
        interp = RegularGridInterpolator(axes, field_.data[i], method="linear")
        out[i] = interp(pts).reshape(T.shape)
    return out


def rescale(f: Field, lam: float, target: Optional[SpaceTimeGrid] = None) -> Field:
    """Parabolic rescale ``lam^k f(lam x, lam^2 t)``, k = 1 for velocity and 2 for pressure.

    Without ``target`` the result lives on the pulled-back grid and its values
    are exactly ``lam^k`` times the source samples. With ``target`` the values
    come from the FieldSpec when one is attached, else from 4-linear
    interpolation of the samples.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"rescale factor must be positive, got {lam}")
    k = f.scaling_power
    spec = f.spec
    if target is None:
        grid = f.grid.pulled_back(lam)
        new_spec = replace(spec, grid=grid, lam=spec.lam * lam) if spec is not None else None
        data = f.data if lam == 1.0 else (lam ** k) * f.data
        return type(f)(grid, data, f.role, new_spec)
    if spec is not None:
        new_spec = replace(spec, grid=target, lam=spec.lam * lam)
        v = generate_field(new_spec, with_pressure=f.role == "pressure")
        return v[1] if f.role == "pressure" else v
    target.check_budget(f.ncomp)
    src_t = lam * lam * target.times()
    src_xyz = [lam * target.axis(i) for i in range(3)]
    data = (lam ** k) * _interpolate(f, src_t, src_xyz)
    return type(f)(target, data, f.role, None)


# NSFD container --------------------------------------------------------------

def store_field(f: Field, path) -> None:
    g = f.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, f.ncomp, g.nx, g.ny, g.nz, g.nt,
                          *g.origin, *g.spacing)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.data, dtype="<f8").tobytes())


def load_field(path, role=None) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    return parse_field(raw, role)


def parse_field(raw: bytes, role=None) -> Field:
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise FormatError("missing NSFD magic", 0)
    if len(raw) < 8:
        raise FormatError("truncated header: missing version", 4)
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported container version {version}", 4)
    if len(raw) < _HEADER.size:
        raise FormatError(f"truncated header: need {_HEADER.size} bytes, have {len(raw)}",
                          len(raw))
    fields = _HEADER.unpack_from(raw, 0)
    ncomp = fields[2]
    counts = fields[3:7]
    origin, spacing = fields[7:11], fields[11:15]
    if ncomp not in (1, 3):
        raise FormatError(f"component count {ncomp} not in {{1, 3}}", 8)
    for i, (name, n) in enumerate(zip(("nx", "ny", "nz", "nt"), counts)):
        if n < 2:
            raise FormatError(f"header {name}={n} violates count >= 2", 12 + 8 * i)
    for i, h in enumerate(spacing):
        if not (h > 0 and math.isfinite(h)):
            raise FormatError(f"spacing entry {i} = {h} is not positive", 76 + 8 * i)
    for i, o in enumerate(origin):
        if not math.isfinite(o):
            raise FormatError(f"origin entry {i} is not finite", 44 + 8 * i)
    grid = SpaceTimeGrid(*counts, origin, spacing)
    grid.check_budget(ncomp)
    n = ncomp * grid.n_samples
    need = _HEADER.size + 8 * n
    if len(raw) < need:
        raise FormatError(f"truncated payload: expected {n} float64 values, "
                          f"file ends early", len(raw))
    if len(raw) > need:
        raise FormatError("trailing bytes after payload", need)
    data = np.frombuffer(raw, dtype="<f8", count=n, offset=_HEADER.size)
    data = data.astype(np.float64).reshape((ncomp,) + grid.shape)
    bad = np.flatnonzero(~np.isfinite(data.ravel()))
    if bad.size:
        raise FormatError("non-finite payload value", _HEADER.size + 8 * int(bad[0]))
    if ncomp == 3:
        return VectorField(grid, data, role or "velocity")
    return ScalarField(grid, data, role or "pressure")
