"""Node feature storage with cached mean-centered unit rows."""
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import InputError

EPS_NORM = 1e-12
_MAGIC = b"HLPF"


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise InputError(f"feature matrix must be 2-D, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise InputError("feature matrix contains non-finite values")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def dim(self):
        return self.rows.shape[1]

    @cached_property
    def mean(self):
        return self.rows.mean(axis=0)

    @cached_property
    def centered(self):
        return self.rows - self.mean

    @cached_property
    def centered_unit(self):
        """Unit rows of the centered matrix; rows whose centered norm is
        rounding residue (relative to the largest entry) become zero."""
        scale = np.abs(self.rows).max() if self.rows.size else 0.0
        out = np.zeros_like(self.rows)
        if scale == 0:
            out.setflags(write=False)
            return out
        # working in units of the largest entry keeps tiny or huge inputs
        # away from underflow and makes the result exactly scale-free
        c = self.rows / scale
        c -= c.mean(axis=0)
        norms = np.linalg.norm(c, axis=1)
        ok = norms >= EPS_NORM
        out[ok] = c[ok] / norms[ok, None]
        out.setflags(write=False)
        return out


@dataclass(frozen=True, eq=False)
class UnitCircleFeatures:
    angles: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64).ravel()
        if not np.all(np.isfinite(angles)):
            raise InputError("angles must be finite")
        object.__setattr__(self, "angles", angles)

    @property
    def rows(self):
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def to_matrix(self):
        return FeatureMatrix(self.rows)


def as_feature_matrix(X):
    if isinstance(X, FeatureMatrix):
        return X
    if isinstance(X, UnitCircleFeatures):
        return X.to_matrix()
    return FeatureMatrix(X)


def gaussian_features(n, dim, seed=0):
    if n < 1 or dim < 1:
        raise InputError("n and dim must be >= 1")
    rng = np.random.default_rng(seed)
    return FeatureMatrix(rng.standard_normal((n, dim)))


def unit_circle_features(angles):
    return UnitCircleFeatures(angles)


def save_features(fm, path, binary=None):
    path = str(path)
    if binary is None:
        binary = not path.endswith(".feat")
    if binary:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<QQ", fm.n, fm.dim))
            fh.write(fm.rows.astype("<f4").tobytes())
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(f"feat {fm.n} {fm.dim}\n")
            for row in fm.rows:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_features(path):
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            raw = fh.read(16)
            if len(raw) != 16:
                raise InputError(f"{path}: truncated header")
            n, dim = struct.unpack("<QQ", raw)
            body = fh.read()
            if len(body) != 4 * n * dim:
                raise InputError(f"{path}: expected {n}x{dim} values, got {len(body) // 4}")
            rows = np.frombuffer(body, dtype="<f4").reshape(n, dim).astype(np.float64)
            return FeatureMatrix(rows)
        text = (head + fh.read()).decode("ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "feat":
        raise InputError(f"{path}: expected header 'feat <n> <F>'")
    n, dim = int(header[1]), int(header[2])
    if len(lines) - 1 != n:
        raise InputError(f"{path}: header says {n} rows, found {len(lines) - 1}")
    try:
        rows = np.array([[float(x) for x in ln.split()] for ln in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if rows.shape != (n, dim):
        raise InputError(f"{path}: expected {n}x{dim} values")
    return FeatureMatrix(rows)
