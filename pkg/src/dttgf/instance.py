"""TSP instances, tours, and the file formats the CLI speaks.

Coordinates live in the unit square. Files with a larger coordinate range
are shifted per axis and scaled uniformly on ingest; the constants are
kept on the instance so tour lengths can be reported on the original
scale. Instances that already fit in [0, 1] x [0, 1] are taken verbatim,
which makes write/parse round trips exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from . import rng
from .errors import (
    DomainError,
    MalformedTourError,
    ParseError,
    SizeError,
    UnsupportedFormatError,
)


@dataclass(frozen=True)
class Normalization:
    """Shift-and-scale applied on ingest; scale restores original lengths."""

    xmin: float = 0.0
    ymin: float = 0.0
    scale: float = 1.0

    @property
    def is_identity(self) -> bool:
        return self.xmin == 0.0 and self.ymin == 0.0 and self.scale == 1.0

    def rescale_length(self, length: float) -> float:
        return length * self.scale

    def to_dict(self) -> dict:
        return {"xmin": self.xmin, "ymin": self.ymin, "scale": self.scale}


class TspInstance:
    """Point set on the unit-square scale, with its ingest normalization."""

    def __init__(self, points, name: str = "unnamed", norm: Normalization | None = None):
        pts = np.array(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DomainError(f"expected an (n, 2) point array, got shape {pts.shape}")
        if len(pts) < 2:
            raise SizeError(f"an instance needs at least 2 points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("point coordinates must be finite")
        if pts.min() < 0.0 or pts.max() > 1.0:
            raise DomainError(
                "coordinates must lie in [0, 1]; use TspInstance.from_raw for raw data"
            )
        pts.setflags(write=False)
        self.points = pts
        self.name = str(name)
        self.norm = norm if norm is not None else Normalization()

    @classmethod
    def from_raw(cls, points, name: str = "unnamed") -> "TspInstance":
        """Build an instance from coordinates on any scale.

        Data already inside the unit square is kept as-is (identity
        normalization); anything else is shifted per axis and scaled by
        the larger extent so the shape of the point set is preserved.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DomainError(f"expected an (n, 2) point array, got shape {pts.shape}")
        if len(pts) < 2:
            raise SizeError(f"an instance needs at least 2 points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("point coordinates must be finite")
        if pts.min() >= 0.0 and pts.max() <= 1.0:
            return cls(pts, name)
        xmin, ymin = pts.min(axis=0)
        xmax, ymax = pts.max(axis=0)
        span = max(xmax - xmin, ymax - ymin)
        if span <= 0.0:
            raise DomainError("all points coincide; cannot normalize")
        scaled = (pts - np.array([xmin, ymin])) / span
        return cls(scaled, name, Normalization(float(xmin), float(ymin), float(span)))

    @property
    def n(self) -> int:
        return len(self.points)

    def distance(self, i: int, j: int) -> float:
        pi = self.points[i]
        pj = self.points[j]
        return math.hypot(pi[0] - pj[0], pi[1] - pj[1])

    def __repr__(self):
        return f"TspInstance({self.name!r}, n={self.n})"


class Tour:
    """A cyclic visiting order over instance nodes."""

    def __init__(self, order):
        self.order = np.array(order, dtype=np.int64)
        if self.order.ndim != 1:
            raise MalformedTourError("a tour must be a flat index sequence")

    def __len__(self):
        return len(self.order)

    def __eq__(self, other):
        if not isinstance(other, Tour):
            return NotImplemented
        return np.array_equal(self.order, other.order)

    def __repr__(self):
        return f"Tour(n={len(self.order)})"

    def validate_for(self, n: int):
        """Raise unless this is a permutation of range(n)."""
        if len(self.order) != n:
            raise MalformedTourError(f"tour visits {len(self.order)} nodes, instance has {n}")
        if len(self.order) == 0 or self.order.min() < 0 or self.order.max() >= n:
            raise MalformedTourError("tour contains out-of-range node indices")
        if np.bincount(self.order, minlength=n).max() > 1:
            raise MalformedTourError("tour visits a node more than once")

    def edges(self) -> Iterator[tuple[int, int]]:
        """Canonical (i < j) undirected edges of the cyclic tour."""
        order = self.order
        m = len(order)
        for k in range(m):
            a = int(order[k])
            b = int(order[(k + 1) % m])
            yield (a, b) if a < b else (b, a)


def gen_uniform(n: int, seed: int) -> TspInstance:
    """n points i.i.d. uniform on the unit square, deterministic in (n, seed)."""
    if n < 2:
        raise SizeError(f"need n >= 2, got {n}")
    points = rng.stream(seed, rng.GENERATION).random((int(n), 2))
    return TspInstance(points, name=f"uniform-{n}-{seed}")


def tour_length(tour: Tour, inst: TspInstance) -> float:
    """Euclidean length of the closed tour on the instance's current scale."""
    tour.validate_for(inst.n)
    pts = inst.points[tour.order]
    diffs = pts - np.roll(pts, -1, axis=0)
    return float(np.sqrt((diffs * diffs).sum(axis=1)).sum())


def drop_percent(candidate: float, reference: float) -> float:
    """Relative gap of candidate over reference, in percent."""
    if reference <= 0:
        raise DomainError(f"reference length must be positive, got {reference}")
    return 100.0 * (candidate - reference) / reference


# ---------------------------------------------------------------------------
# File formats


def parse_tsplib(text: str) -> TspInstance:
    """Parse a TSPLIB-style instance; only TYPE TSP with EUC_2D is accepted."""
    headers: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    in_coords = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line == "EOF":
            continue
        if not in_coords:
            if line == "NODE_COORD_SECTION":
                in_coords = True
                continue
            if ":" in line:
                key, _, value = line.partition(":")
                headers[key.strip().upper()] = value.strip()
                continue
            raise ParseError(f"unrecognized header line {raw!r}", line_no)
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'index x y', got {raw!r}", line_no)
        try:
            coords.append((float(parts[1]), float(parts[2])))
        except ValueError:
            raise ParseError(f"bad coordinate in {raw!r}", line_no) from None

    tsp_type = headers.get("TYPE", "TSP").upper()
    if tsp_type != "TSP":
        raise UnsupportedFormatError(f"unsupported TYPE {tsp_type!r}; only TSP is handled")
    weight = headers.get("EDGE_WEIGHT_TYPE", "").upper()
    if weight != "EUC_2D":
        raise UnsupportedFormatError(
            f"unsupported EDGE_WEIGHT_TYPE {weight or '<missing>'!r}; only EUC_2D is handled"
        )
    if "DIMENSION" in headers:
        try:
            dim = int(headers["DIMENSION"])
        except ValueError:
            raise ParseError(f"bad DIMENSION {headers['DIMENSION']!r}") from None
        if dim != len(coords):
            raise ParseError(f"DIMENSION says {dim} nodes but file has {len(coords)}")
    if len(coords) < 2:
        raise ParseError(f"instance needs at least 2 coordinate lines, found {len(coords)}")
    return TspInstance.from_raw(np.array(coords), name=headers.get("NAME", "unnamed"))


def write_tsplib(inst: TspInstance) -> str:
    """Serialize the (unit-square) instance coordinates as TSPLIB text."""
    lines = [
        f"NAME: {inst.name}",
        "TYPE: TSP",
        f"DIMENSION: {inst.n}",
        "EDGE_WEIGHT_TYPE: EUC_2D",
        "NODE_COORD_SECTION",
    ]
    for i, (x, y) in enumerate(inst.points, start=1):
        lines.append(f"{i} {float(x)!r} {float(y)!r}")
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def parse_instance_json(text: str) -> TspInstance:
    """Parse {"name": ..., "points": [[x, y], ...]} instance JSON."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if not isinstance(data, dict) or "points" not in data:
        raise ParseError("instance JSON must be an object with a 'points' array")
    try:
        return TspInstance.from_raw(np.array(data["points"], dtype=np.float64),
                                    name=str(data.get("name", "unnamed")))
    except (ValueError, TypeError):
        raise ParseError("'points' must be an array of [x, y] pairs") from None


def load_instance(path: str) -> TspInstance:
    """Read an instance file, dispatching on the .json extension."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return parse_instance_json(text)
    return parse_tsplib(text)


def write_tour(tour: Tour) -> str:
    """One node index per line; the cycle closes implicitly."""
    return "\n".join(str(int(i)) for i in tour.order) + "\n"


def parse_tour(text: str) -> Tour:
    indices = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            indices.append(int(line))
        except ValueError:
            raise ParseError(f"expected a node index, got {raw!r}", line_no) from None
    if not indices:
        raise ParseError("tour file contains no indices")
    return Tour(indices)


def write_heatmap(heatmap) -> str:
    """Sparse edge-probability dump: sorted 'i j p' lines, positive entries only."""
    lines = []
    for (i, j) in sorted(heatmap.entries):
        p = heatmap.entries[(i, j)]
        if p > 0.0:
            lines.append(f"{i} {j} {float(p)!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def read_heatmap(text: str, n: int):
    """Inverse of write_heatmap; needs the node count the edges refer to."""
    from .merge import Heatmap

    entries: dict[tuple[int, int], float] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'i j p', got {raw!r}", line_no)
        try:
            i, j, p = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"bad heatmap entry {raw!r}", line_no) from None
        entries[(i, j)] = p
    return Heatmap(n, entries)
