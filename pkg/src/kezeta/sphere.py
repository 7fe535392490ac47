"""Round-sphere model of the projective line.

Points live on the unit sphere S^2 in R^3; the plane chart is the
stereographic projection from the north pole (0,0,1), which is the chart's
point at infinity.  The pair potential is the chordal logarithmic kernel

    green(x, y) = -log ||x - y||,

and chordal and plane distances are tied by the exact identity

    ||x(z) - x(w)||^2 = 4 |z - w|^2 / ((1 + |z|^2)(1 + |w|^2)),

so the plane-chart integrands used elsewhere can always be rewritten in
bounded chordal quantities.  Configuration energy is the normalized pairwise
Green sum

    E(x_1..x_N) = (d_L / (N (N-1))) * sum_{i != j} green(x_i, x_j),

with d_L the anticanonical degree carried by the curve; divisor weights enter
through the reference measure, not through E.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CoincidenceError, ValidationError

__all__ = [
    "INFINITY",
    "PlaneCoord",
    "SpherePoint",
    "PointConfiguration",
    "stereo_to_sphere",
    "sphere_to_stereo",
    "chordal",
    "green",
    "config_energy",
    "sample_uniform",
    "config_to_csv",
    "config_from_csv",
    "config_to_plane_json",
    "config_from_plane_json",
]

COINCIDENCE_TOL = 1e-14


class _Infinity:
    """The distinguished point at infinity of the plane chart."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()
PlaneCoord = Union[complex, _Infinity]


@dataclass(frozen=True)
class SpherePoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(n) or n == 0.0:
            raise ValidationError(f"cannot normalize ({self.x}, {self.y}, {self.z})")
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_vec(cls, v) -> "SpherePoint":
        return cls(float(v[0]), float(v[1]), float(v[2]))


def stereo_to_sphere(p: PlaneCoord) -> SpherePoint:
    """Plane chart -> sphere; 0 maps to the south pole, INFINITY to the north."""
    if p is INFINITY:
        return SpherePoint(0.0, 0.0, 1.0)
    z = complex(p)
    denom = 1.0 + z.real * z.real + z.imag * z.imag
    if math.isinf(denom):
        return SpherePoint(0.0, 0.0, 1.0)
    return SpherePoint(2.0 * z.real / denom, 2.0 * z.imag / denom, (denom - 2.0) / denom)


def sphere_to_stereo(x: SpherePoint) -> PlaneCoord:
    """Inverse chart.  Uses (1+x3)/(x1^2+x2^2) near the north pole, where the
    naive 1/(1-x3) form has already lost the digits to cancellation."""
    if x.z >= 1.0:
        return INFINITY
    if x.z <= 0.0:
        return complex(x.x, x.y) / (1.0 - x.z)
    r2 = x.x * x.x + x.y * x.y
    if r2 == 0.0:
        return INFINITY
    return complex(x.x, x.y) * ((1.0 + x.z) / r2)


def chordal(x: SpherePoint, y: SpherePoint) -> float:
    """Euclidean distance through the ball, in [0, 2]."""
    d = math.sqrt((x.x - y.x) ** 2 + (x.y - y.y) ** 2 + (x.z - y.z) ** 2)
    return min(d, 2.0)


def green(x: SpherePoint, y: SpherePoint) -> float:
    d = chordal(x, y)
    if d < COINCIDENCE_TOL:
        raise CoincidenceError(f"green evaluated at chordal distance {d:.3e}")
    return -math.log(d)


@dataclass(frozen=True)
class PointConfiguration:
    points: tuple[SpherePoint, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValidationError("a configuration needs at least 2 points")
        seen = set()
        for p in self.points:
            key = (p.x, p.y, p.z)
            if key in seen:
                raise ValidationError("bit-identical points in configuration")
            seen.add(key)

    def __len__(self):
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.array([[p.x, p.y, p.z] for p in self.points])

    @classmethod
    def from_array(cls, arr) -> "PointConfiguration":
        return cls(tuple(SpherePoint.from_vec(row) for row in np.asarray(arr)))


def pairwise_log_chordal(arr: np.ndarray) -> np.ndarray:
    """log ||x_i - x_j|| for i < j, flattened; arr has shape (..., N, 3)."""
    diff = arr[..., :, None, :] - arr[..., None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    n = arr.shape[-2]
    iu = np.triu_indices(n, k=1)
    return 0.5 * np.log(d2[..., iu[0], iu[1]])


def config_energy(c: PointConfiguration, curve) -> float:
    """Normalized pairwise Green energy; `curve` only contributes d_L."""
    arr = c.array
    n = len(c)
    logs = pairwise_log_chordal(arr)
    if not np.all(np.isfinite(logs)):
        raise CoincidenceError("coincident points in configuration energy")
    # ordered sum = 2 * (sum over unordered pairs)
    return float(curve.d_L / (n * (n - 1)) * (-2.0) * np.sum(logs))


def sample_uniform(rng: np.random.Generator) -> SpherePoint:
    """One uniform point; the axial coordinate is uniform on [-1, 1]."""
    return SpherePoint.from_vec(sample_uniform_array(rng, 1)[0])


def sample_uniform_array(rng: np.random.Generator, n: int) -> np.ndarray:
    t = rng.uniform(-1.0, 1.0, size=n)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    r = np.sqrt(np.maximum(0.0, 1.0 - t * t))
    return np.stack([r * np.cos(theta), r * np.sin(theta), t], axis=-1)


# ---------------------------------------------------------------------------
# serialization

def config_to_csv(c: PointConfiguration) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["x", "y", "z"])
    for p in c.points:
        writer.writerow([repr(p.x), repr(p.y), repr(p.z)])
    return buf.getvalue()


def config_from_csv(text: str) -> PointConfiguration:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["x", "y", "z"]:
        raise ValidationError("configuration CSV must start with an x,y,z header")
    pts = []
    for row in rows[1:]:
        if not row:
            continue
        try:
            pts.append(SpherePoint(float(row[0]), float(row[1]), float(row[2])))
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"bad CSV row {row}: {exc}") from exc
    return PointConfiguration(tuple(pts))


def plane_coord_to_json(p: PlaneCoord):
    if p is INFINITY:
        return "INFINITY"
    z = complex(p)
    return [z.real, z.imag]


def plane_coord_from_json(obj) -> PlaneCoord:
    if obj == "INFINITY":
        return INFINITY
    try:
        re_, im = obj
        return complex(float(re_), float(im))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad plane coordinate {obj!r}") from exc


def config_to_plane_json(c: PointConfiguration) -> str:
    return json.dumps([plane_coord_to_json(sphere_to_stereo(p)) for p in c.points])


def config_from_plane_json(text: str) -> PointConfiguration:
    coords = json.loads(text)
    return PointConfiguration(tuple(stereo_to_sphere(plane_coord_from_json(o)) for o in coords))
