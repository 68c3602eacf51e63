"""Coefficient model of the canonical system in the upper-triangular gauge.

A profile is the real coefficient triple (a, b, c) on [0, T0) together with a
mandatory free tail: a(t) = a_tail > 0 and b = c = 0 for t >= T0.  The tail
guarantees the divergence of the trace integral that makes the Schur limit
well defined, and it truncates that limit exactly at T0.

Coefficient shapes: constant, piecewise-constant steps, a raised-cosine bump,
and sampled arrays (piecewise-constant or piecewise-linear).  Evaluation is
side-aware so integrators can ask for one-sided limits at discontinuities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InvalidProfile

__all__ = [
    "Constant",
    "Steps",
    "Bump",
    "Samples",
    "ArovProfile",
    "PSD_CLAMP",
]

PSD_CLAMP = 1e-12  # a^2-b^2-c^2 in [-PSD_CLAMP, 0) is treated as 0


@dataclass(frozen=True)
class Constant:
    value: float

    def eval(self, t, side="right"):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, self.value)

    def breakpoints(self):
        return []

    def is_constant_on(self, t0, t1):
        return True

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Steps:
    """Piecewise-constant: values[i] on [edges[i], edges[i+1]), 0 elsewhere."""

    edges: tuple
    values: tuple

    def __post_init__(self):
        if len(self.edges) != len(self.values) + 1:
            raise InvalidProfile("steps need len(edges) == len(values) + 1")
        if np.any(np.diff(self.edges) <= 0):
            raise InvalidProfile("step edges must be strictly increasing")

    def eval(self, t, side="right"):
        t = np.asarray(t, dtype=float)
        edges = np.asarray(self.edges)
        vals = np.concatenate([[0.0], self.values, [0.0]])
        mode = "right" if side == "right" else "left"
        idx = np.searchsorted(edges, t, side=mode)
        return vals[idx]

    def breakpoints(self):
        return list(self.edges)

    def is_constant_on(self, t0, t1):
        edges = np.asarray(self.edges)
        return not np.any((edges > t0) & (edges < t1))

    def to_dict(self):
        return {"kind": "step", "edges": list(self.edges), "values": list(self.values)}


@dataclass(frozen=True)
class Bump:
    """Raised-cosine bump amplitude*sin^2(pi (t-start)/width) on [start, start+width]."""

    amplitude: float
    start: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise InvalidProfile("bump width must be positive")

    def eval(self, t, side="right"):
        t = np.asarray(t, dtype=float)
        u = (t - self.start) / self.width
        out = self.amplitude * np.sin(np.pi * np.clip(u, 0.0, 1.0)) ** 2
        return np.where((u >= 0.0) & (u <= 1.0), out, 0.0)

    def breakpoints(self):
        return [self.start, self.start + self.width]

    def is_constant_on(self, t0, t1):
        return t1 <= self.start or t0 >= self.start + self.width

    def to_dict(self):
        return {
            "kind": "bump",
            "amplitude": self.amplitude,
            "start": self.start,
            "width": self.width,
        }


@dataclass(frozen=True)
class Samples:
    """Sampled coefficient on a grid ts, either pconst or plinear interpolation.

    pconst: values[i] on [ts[i], ts[i+1]); plinear: linear between nodes.
    Outside [ts[0], ts[-1]] the value is 0 (pconst) / clamped end value (plinear).
    """

    ts: tuple
    values: tuple
    interp: str = "plinear"

    def __post_init__(self):
        if len(self.ts) != len(self.values) or len(self.ts) < 2:
            raise InvalidProfile("samples need matching ts/values with >= 2 nodes")
        if np.any(np.diff(self.ts) <= 0):
            raise InvalidProfile("sample times must be strictly increasing")
        if self.interp not in ("pconst", "plinear"):
            raise InvalidProfile(f"unknown interpolation {self.interp!r}")

    def eval(self, t, side="right"):
        t = np.asarray(t, dtype=float)
        ts = np.asarray(self.ts)
        vs = np.asarray(self.values, dtype=float)
        if self.interp == "plinear":
            return np.interp(t, ts, vs)
        mode = "right" if side == "right" else "left"
        idx = np.searchsorted(ts, t, side=mode)
        padded = np.concatenate([[0.0], vs[:-1], [0.0]])
        return padded[idx]

    def breakpoints(self):
        if self.interp == "pconst":
            return list(self.ts)
        # kinks only; still worth aligning integrator steps with them
        return list(self.ts)

    def is_constant_on(self, t0, t1):
        ts = np.asarray(self.ts)
        if self.interp == "pconst":
            return not np.any((ts > t0) & (ts < t1))
        inside = (ts >= t0) & (ts <= t1)
        if not np.any(inside):
            return True
        vs = np.asarray(self.values)[inside]
        return bool(np.all(vs == vs[0]))

    def to_dict(self):
        return {
            "kind": "samples",
            "ts": list(self.ts),
            "values": list(self.values),
            "interp": self.interp,
        }


CoeffSpec = Union[Constant, Steps, Bump, Samples]


def _spec_from_dict(d: dict) -> CoeffSpec:
    kind = d.get("kind")
    if kind == "constant":
        return Constant(float(d["value"]))
    if kind == "step":
        return Steps(tuple(float(e) for e in d["edges"]), tuple(float(v) for v in d["values"]))
    if kind == "bump":
        return Bump(float(d["amplitude"]), float(d.get("start", 0.0)), float(d.get("width", 1.0)))
    if kind == "samples":
        return Samples(
            tuple(float(t) for t in d["ts"]),
            tuple(float(v) for v in d["values"]),
            str(d.get("interp", "plinear")),
        )
    raise InvalidProfile(f"unknown coefficient kind {kind!r}")


@dataclass(frozen=True)
class ArovProfile:
    """Coefficient triple (a, b, c) on [0, T0) with a free tail beyond T0."""

    a_spec: CoeffSpec
    b_spec: CoeffSpec
    c_spec: CoeffSpec
    T0: float
    a_tail: float = 1.0

    def __post_init__(self):
        if not (self.T0 >= 0.0 and np.isfinite(self.T0)):
            raise InvalidProfile("T0 must be finite and >= 0")
        if not (self.a_tail > 0.0 and np.isfinite(self.a_tail)):
            raise InvalidProfile("a_tail must be positive (free tail is mandatory)")
        self.validate()

    # -- evaluation ---------------------------------------------------------

    def _coeff(self, spec, t, side, tail_value):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        on_tail = t > self.T0 if side == "left" else t >= self.T0
        out = np.where(on_tail, tail_value, spec.eval(np.minimum(t, self.T0), side))
        return float(out[0]) if scalar else out

    def a(self, t, side="right"):
        return self._coeff(self.a_spec, t, side, self.a_tail)

    def b(self, t, side="right"):
        return self._coeff(self.b_spec, t, side, 0.0)

    def c(self, t, side="right"):
        return self._coeff(self.c_spec, t, side, 0.0)

    def det_coeff(self, t, side="right"):
        """a^2 - b^2 - c^2 with the rounding-level clamp applied."""
        d = self.a(t, side) ** 2 - self.b(t, side) ** 2 - self.c(t, side) ** 2
        return np.maximum(d, 0.0) if isinstance(d, np.ndarray) else max(d, 0.0)

    # -- structure ----------------------------------------------------------

    def breakpoints(self, T: float) -> np.ndarray:
        """Sorted distinct times in [0, T] where any coefficient may jump or kink."""
        pts = {0.0, float(T)}
        if self.T0 < T:
            pts.add(float(self.T0))
        for spec in (self.a_spec, self.b_spec, self.c_spec):
            for p in spec.breakpoints():
                if 0.0 < p < min(T, self.T0):
                    pts.add(float(p))
        return np.array(sorted(pts))

    def pieces(self, T: float):
        """List of (t0, t1, is_constant) covering [0, T] between breakpoints."""
        bps = self.breakpoints(T)
        out = []
        for t0, t1 in zip(bps[:-1], bps[1:]):
            if t0 >= self.T0:
                const = True
            else:
                const = all(
                    spec.is_constant_on(t0, min(t1, self.T0))
                    for spec in (self.a_spec, self.b_spec, self.c_spec)
                )
            out.append((float(t0), float(t1), const))
        return out

    def validate(self, samples_per_piece: int | None = None) -> None:
        """Check a >= 0 and a^2 - b^2 - c^2 >= -clamp on a dense piecewise grid."""
        if self.T0 == 0.0:
            return
        pieces = self.pieces(self.T0)
        if samples_per_piece is None:
            samples_per_piece = max(9, min(257, 16384 // len(pieces)))
        for t0, t1, _ in pieces:
            ts = np.linspace(t0, t1, samples_per_piece)
            mids = 0.5 * (ts[:-1] + ts[1:])
            for pts, side in ((ts[:-1], "right"), (mids, "right"), (ts[1:], "left")):
                a = self.a_spec.eval(pts, side)
                b = self.b_spec.eval(pts, side)
                c = self.c_spec.eval(pts, side)
                if np.any(a < -PSD_CLAMP):
                    raise InvalidProfile(f"a(t) < 0 on [{t0}, {t1}]")
                det = a * a - b * b - c * c
                worst = float(det.min())
                if worst < -PSD_CLAMP:
                    raise InvalidProfile(
                        f"a^2 - b^2 - c^2 = {worst:.3e} < -{PSD_CLAMP} on [{t0}, {t1}]"
                    )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "a": self.a_spec.to_dict(),
            "b": self.b_spec.to_dict(),
            "c": self.c_spec.to_dict(),
            "T0": self.T0,
            "a_tail": self.a_tail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArovProfile":
        try:
            return cls(
                a_spec=_spec_from_dict(d["a"]),
                b_spec=_spec_from_dict(d["b"]),
                c_spec=_spec_from_dict(d["c"]),
                T0=float(d["T0"]),
                a_tail=float(d["a_tail"]),
            )
        except KeyError as exc:
            raise InvalidProfile(f"profile document missing key {exc}") from exc

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, path) -> "ArovProfile":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidProfile(f"cannot read profile {path}: {exc}") from exc
        return cls.from_dict(doc)


def free_profile(a: float = 1.0, T0: float = 1.0) -> ArovProfile:
    """Zero-perturbation profile: b = c = 0, constant a."""
    return ArovProfile(Constant(a), Constant(0.0), Constant(0.0), T0=T0, a_tail=a)


def step_profile(
    b: float = 0.6, c: float = 0.0, a: float = 1.0, T0: float = 1.0, a_tail: float = 1.0
) -> ArovProfile:
    """Single-step perturbation b, c on [0, T0) over a constant a."""
    def spec(v):
        return Steps((0.0, T0), (v,)) if v != 0.0 else Constant(0.0)

    return ArovProfile(Constant(a), spec(b), spec(c), T0=T0, a_tail=a_tail)
