"""Deterministic exposure profiles on a finite horizon."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .exppoly import ExpPoly

MIN_HORIZON = 1e-9
# slack for evaluation points that land a rounding error outside [0, T]
_EDGE_TOL = 1e-12


class Strategy:
    """Base class: an exposure ``f(s)`` for ``s`` in ``[0, T]``."""

    kind = "abstract"

    def __init__(self, T: float):
        T = float(T)
        if not math.isfinite(T) or T < MIN_HORIZON:
            raise ValueError(f"horizon must be at least {MIN_HORIZON}, got {T}")
        self.T = T

    def _clip(self, s):
        s_arr = np.asarray(s, dtype=float)
        tol = _EDGE_TOL * max(1.0, self.T)
        if np.any(s_arr < -tol) or np.any(s_arr > self.T + tol) or np.any(~np.isfinite(s_arr)):
            raise ValueError(f"evaluation point outside [0, {self.T}]")
        return np.clip(s_arr, 0.0, self.T)

    def __call__(self, s):
        s_arr = self._clip(s)
        out = np.asarray(self._eval(s_arr), dtype=float)
        if out.shape != s_arr.shape:
            out = np.broadcast_to(out, s_arr.shape).copy()
        return float(out) if out.ndim == 0 else out

    def _eval(self, s: np.ndarray):
        raise NotImplementedError

    def as_exppoly(self) -> Optional[ExpPoly]:
        """Exact exponential-polynomial form, or ``None`` if unavailable."""
        return None

    def sample(self, step: float | None = None) -> "SampledStrategy":
        return SampledStrategy.from_function(self, self.T, step)

    def to_csv(self, step: float | None = None) -> str:
        return self.sample(step).to_csv()


class ConstantStrategy(Strategy):
    kind = "constant"

    def __init__(self, T: float, level: float):
        super().__init__(T)
        if not math.isfinite(level):
            raise ValueError("level must be finite")
        self.level = float(level)

    def _eval(self, s):
        return np.full_like(s, self.level)

    def as_exppoly(self) -> ExpPoly:
        return ExpPoly.constant(self.T, self.level)

    def __repr__(self):
        return f"ConstantStrategy(T={self.T}, level={self.level})"


class ClosedFormStrategy(Strategy):
    """Strategy backed by an :class:`ExpPoly` expression."""

    kind = "closed-form"

    def __init__(self, T: float, expr: ExpPoly, label: str = ""):
        super().__init__(T)
        if abs(expr.span - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError("expression span does not match horizon")
        self.expr = expr
        self.label = label

    def _eval(self, s):
        return self.expr(s)

    def as_exppoly(self) -> ExpPoly:
        return self.expr

    def derivative(self, order: int = 1) -> "ClosedFormStrategy":
        return ClosedFormStrategy(self.T, self.expr.derivative(order), self.label)

    def __repr__(self):
        return f"ClosedFormStrategy(T={self.T}, label={self.label!r})"


class SampledStrategy(Strategy):
    """Exposures on a uniform grid, linearly interpolated in between."""

    kind = "sampled"

    def __init__(self, T: float, values):
        super().__init__(T)
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("a sampled strategy needs at least two grid values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        self.values = vals
        self.grid = np.linspace(0.0, self.T, vals.size)

    @property
    def step(self) -> float:
        return self.T / (self.values.size - 1)

    @classmethod
    def from_function(cls, fn: Callable, T: float, step: float | None = None) -> "SampledStrategy":
        """Sample ``fn`` on a uniform grid (default step ``T/2000``)."""
        n = 2000 if step is None else max(1, int(math.ceil(T / step - 1e-9)))
        grid = np.linspace(0.0, T, n + 1)
        return cls(T, np.asarray(fn(grid), dtype=float) * np.ones_like(grid))

    def _eval(self, s):
        return np.interp(s, self.grid, self.values)

    def to_csv(self, step: float | None = None) -> str:
        if step is not None:
            return super().to_csv(step)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "exposure"])
        for s, v in zip(self.grid, self.values):
            w.writerow([repr(float(s)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledStrategy":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["s", "exposure"]:
            raise ValueError("expected header 's,exposure'")
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        if data.shape[0] < 2:
            raise ValueError("need at least two rows")
        s, v = data[:, 0], data[:, 1]
        if abs(s[0]) > 1e-12:
            raise ValueError("grid must start at 0")
        T = float(s[-1])
        expected = np.linspace(0.0, T, s.size)
        if np.max(np.abs(s - expected)) > 1e-9 * max(1.0, T):
            raise ValueError("grid must be uniform")
        return cls(T, v)

    @classmethod
    def load(cls, path: str | Path) -> "SampledStrategy":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))

    def __repr__(self):
        return f"SampledStrategy(T={self.T}, n={self.values.size})"


def zero_strategy(T: float) -> ConstantStrategy:
    return ConstantStrategy(T, 0.0)


def psi_exppoly(T: float, a: float, scale: float = 1.0) -> ExpPoly:
    """``s -> scale * psi(a, T - s)`` as an exponential polynomial on [0, T]."""
    if abs(a) * T <= 0.05:
        # series in tau = T - s keeps the expression exact near a = 0
        coeffs = np.zeros(1)
        tau = np.array([T, -1.0])
        power = np.array([1.0])
        fact = 1.0
        for n in range(18):
            power = np.polynomial.polynomial.polymul(power, tau)
            fact *= n + 1
            coeffs = np.polynomial.polynomial.polyadd(coeffs, power * ((-a) ** n / fact))
        return ExpPoly.polynomial(T, coeffs * scale)
    return ExpPoly.constant(T, scale / a) + ExpPoly.exponential(T, -scale / a, a, anchor=T)
