"""Synthetic homodyne samples, binning, and file I/O for samples and histograms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .seeding import SIMULATION, derive_rng
from .state import StateParams, check_edges, rotated_variance

DEFAULT_BINS = 70
DEFAULT_SPAN = 5.0
DEFAULT_THETAS = (0.0, np.pi / 2)
DEFAULT_SAMPLES = 100_000


class DataFormatError(ValueError):
    """Malformed sample or histogram file."""


class SchemaError(DataFormatError):
    """A required field is missing or has the wrong type."""


class EdgeOrderError(DataFormatError):
    """Bin edges are not strictly increasing."""

    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


class LengthMismatchError(DataFormatError):
    """``len(counts) != len(interior_edges) + 1``."""


@dataclass(frozen=True)
class SampleSet:
    theta: float
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).reshape(-1)
        if s.size == 0:
            raise ValueError("a sample set needs at least one sample")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True, eq=False)
class QuadratureHistogram:
    """Counts of one measurement setting; outer bins extend to +-infinity."""

    theta: float
    interior_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = _validated_edges(self.interior_edges)
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise SchemaError("counts must be a flat sequence")
        if counts.size and not np.all(counts == np.round(counts)):
            raise SchemaError("counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise SchemaError("counts must be non-negative")
        if counts.size != edges.size + 1:
            raise LengthMismatchError(
                f"{counts.size} counts for {edges.size} interior edges (need {edges.size + 1})"
            )
        if not math.isfinite(self.theta):
            raise SchemaError("theta must be finite")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "interior_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_bins(self) -> int:
        return self.counts.size

    def __eq__(self, other):
        if not isinstance(other, QuadratureHistogram):
            return NotImplemented
        return (
            self.theta == other.theta
            and np.array_equal(self.interior_edges, other.interior_edges)
            and np.array_equal(self.counts, other.counts)
        )

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "interior_edges": [float(e) for e in self.interior_edges],
            "counts": [int(c) for c in self.counts],
        }

    @classmethod
    def from_dict(cls, obj) -> "QuadratureHistogram":
        if not isinstance(obj, dict):
            raise SchemaError("histogram must be a JSON object")
        for key in ("theta", "interior_edges", "counts"):
            if key not in obj:
                raise SchemaError(f"histogram is missing the {key!r} field")
        theta = obj["theta"]
        if isinstance(theta, bool) or not isinstance(theta, (int, float)):
            raise SchemaError("'theta' must be a number")
        if not isinstance(obj["interior_edges"], list) or not isinstance(obj["counts"], list):
            raise SchemaError("'interior_edges' and 'counts' must be arrays")
        if any(isinstance(c, bool) or not isinstance(c, int) for c in obj["counts"]):
            raise SchemaError("'counts' must hold integers")
        if any(isinstance(e, bool) or not isinstance(e, (int, float)) for e in obj["interior_edges"]):
            raise SchemaError("'interior_edges' must hold numbers")
        return cls(theta, obj["interior_edges"], obj["counts"])


def _validated_edges(edges) -> np.ndarray:
    edges = np.asarray(edges, dtype=float).reshape(-1)
    if not np.all(np.isfinite(edges)):
        raise SchemaError("interior edges must be finite")
    bad = np.nonzero(np.diff(edges) <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise EdgeOrderError(i, f"interior_edges not strictly increasing at index {i}")
    return edges


@dataclass(frozen=True)
class Dataset:
    histograms: tuple[QuadratureHistogram, ...] = field(default_factory=tuple)

    def __post_init__(self):
        hists = tuple(self.histograms)
        if not hists:
            raise ValueError("a dataset needs at least one histogram")
        phases = [h.theta % np.pi for h in hists]
        for i in range(len(phases)):
            for j in range(i):
                d = abs(phases[i] - phases[j])
                if min(d, np.pi - d) < 1e-12:
                    raise ValueError(
                        f"settings {j} and {i} have the same phase mod pi "
                        f"({hists[j].theta!r}, {hists[i].theta!r})"
                    )
        object.__setattr__(self, "histograms", hists)

    def __iter__(self):
        return iter(self.histograms)

    def __len__(self):
        return len(self.histograms)

    @property
    def total(self) -> int:
        return sum(h.total for h in self.histograms)

    @property
    def thetas(self) -> list[float]:
        return [h.theta for h in self.histograms]


def simulate_samples(params: StateParams, theta: float, n: int, seed) -> SampleSet:
    """Draw ``n`` homodyne outcomes at phase ``theta`` from the exact model.

    For each sample one phase kick ``u ~ N(0, v_phi)`` is drawn, then the
    outcome ``x ~ N(0, V(u + theta))``; the two standard normals of a sample
    are consecutive in the generator stream.  ``seed`` may be an int, a
    ``SeedSequence`` or a ``Generator``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"need n >= 1 samples, got {n!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal((int(n), 2))
    u = np.sqrt(params.v_phi) * z[:, 0]
    x = np.sqrt(rotated_variance(params, u + theta)) * z[:, 1]
    return SampleSet(theta, x)


def span_edges(samples: SampleSet, num_bins: int = DEFAULT_BINS, span: float = DEFAULT_SPAN) -> np.ndarray:
    """``num_bins - 1`` equally spaced interior edges over +-span * sample std."""
    if num_bins < 2:
        raise ValueError(f"need at least 2 bins, got {num_bins}")
    sd = float(np.std(samples.samples, ddof=1)) if len(samples) > 1 else 1.0
    if sd == 0:
        sd = 1.0
    if num_bins == 2:
        return np.zeros(1)
    return np.linspace(-span * sd, span * sd, num_bins - 1)


def bin_samples(samples: SampleSet, num_bins: int = DEFAULT_BINS, edges=None,
                span: float = DEFAULT_SPAN) -> QuadratureHistogram:
    """Histogram a sample set; bins are half-open ``[Q_l, Q_{l+1})``.

    With ``edges=None`` the span rule places ``num_bins - 1`` interior edges;
    explicit ``edges`` override ``num_bins``.
    """
    if edges is None:
        edges = span_edges(samples, num_bins, span)
    else:
        edges = check_edges(edges)
    idx = np.searchsorted(edges, samples.samples, side="right")
    counts = np.bincount(idx, minlength=edges.size + 1)
    return QuadratureHistogram(samples.theta, edges, counts)


def simulate_dataset(params: StateParams, thetas=DEFAULT_THETAS, n: int = DEFAULT_SAMPLES,
                     seed: int = 0, num_bins: int = DEFAULT_BINS) -> Dataset:
    """Simulate and span-bin one histogram per phase from a single seed."""
    return Dataset(tuple(bin_samples(ss, num_bins) for ss in simulate_settings(params, thetas, n, seed)))


def simulate_settings(params: StateParams, thetas=DEFAULT_THETAS, n: int = DEFAULT_SAMPLES,
                      seed: int = 0) -> list[SampleSet]:
    """One sample set per phase; setting ``i`` draws from stream ``(SIMULATION, i)`` of ``seed``."""
    return [simulate_samples(params, th, n, derive_rng(seed, SIMULATION, i)) for i, th in enumerate(thetas)]


# --- files -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _strip_comments(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.startswith("#"))


def group_samples(thetas, values) -> list[SampleSet]:
    thetas = np.asarray(thetas, dtype=float)
    values = np.asarray(values, dtype=float)
    out = []
    for th in dict.fromkeys(thetas.tolist()):
        out.append(SampleSet(th, values[thetas == th]))
    return out


def write_samples(path, sample_sets, header_lines=()) -> None:
    """Write sample sets to a CSV file with columns ``theta_radians,value``."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    buf.write("theta_radians,value\n")
    for ss in sample_sets:
        th = _fmt(ss.theta)
        buf.writelines(f"{th},{v!r}\n" for v in ss.samples.tolist())
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_samples(path) -> list[SampleSet]:
    """Read a samples CSV; returns one :class:`SampleSet` per distinct theta, in file order."""
    text = _strip_comments(Path(path).read_text(encoding="utf-8"))
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{path}: empty samples file") from None
    if [h.strip() for h in header] != ["theta_radians", "value"]:
        raise SchemaError(f"{path}: expected header 'theta_radians,value', got {','.join(header)!r}")
    thetas, values = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DataFormatError(f"{path}: row {lineno} has {len(row)} fields")
        try:
            th, v = float(row[0]), float(row[1])
        except ValueError:
            raise DataFormatError(f"{path}: row {lineno} is not numeric") from None
        if not (math.isfinite(th) and math.isfinite(v)):
            raise DataFormatError(f"{path}: row {lineno} is not finite")
        thetas.append(th)
        values.append(v)
    if not values:
        raise DataFormatError(f"{path}: no samples")
    return group_samples(thetas, values)


def dumps_histogram(hist: QuadratureHistogram) -> str:
    return json.dumps(hist.to_dict())


def loads_histogram(text: str) -> QuadratureHistogram:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"malformed histogram JSON: {exc}") from None
    return QuadratureHistogram.from_dict(obj)


def save_histogram(path, hist: QuadratureHistogram) -> None:
    Path(path).write_text(dumps_histogram(hist) + "\n", encoding="utf-8")


def load_histogram(path) -> QuadratureHistogram:
    return loads_histogram(Path(path).read_text(encoding="utf-8"))


def dumps_dataset(data: Dataset) -> str:
    return json.dumps([h.to_dict() for h in data.histograms], indent=1)


def loads_dataset(text: str) -> Dataset:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"malformed dataset JSON: {exc}") from None
    if not isinstance(obj, list):
        raise SchemaError("dataset file must hold a JSON array of histograms")
    return Dataset(tuple(QuadratureHistogram.from_dict(o) for o in obj))


def save_dataset(path, data: Dataset) -> None:
    Path(path).write_text(dumps_dataset(data) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    return loads_dataset(Path(path).read_text(encoding="utf-8"))
