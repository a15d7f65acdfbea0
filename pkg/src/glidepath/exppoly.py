"""Exact arithmetic on exponential polynomials over a finite interval.

An :class:`ExpPoly` is a finite sum ``sum_k Re[p_k(s) * exp(z_k * (s - a_k))]`` on
``[0, span]``, where ``p_k`` is a complex polynomial, ``z_k`` a complex rate and
``a_k`` an anchor (``0`` or ``span``).  Every closed-form strategy in the package
(constants, exponential and trigonometric glidepaths, quadratics, bond hedges)
is of this form, and the class is closed under the operations the portfolio
formulas need: products, derivatives, definite integrals and exponentially
discounted head/tail integrals.

Anchors keep every exponential factor bounded by one on the interval, so large
rates (``c * T`` of several hundred) neither overflow nor lose precision.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from numpy.polynomial import polynomial as P

# Below this value of |z| * span a term is integrated through its Taylor
# expansion instead of the 1/z closed form (which cancels badly as z -> 0).
_SMALL_RATE = 0.05
_TAYLOR_TERMS = 16


def _trim(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.size == 0:
        return np.zeros(1, dtype=complex)
    nz = np.nonzero(coeffs)[0]
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return coeffs[: nz[-1] + 1]


class ExpPoly:
    """Real-valued exponential polynomial on ``[0, span]``."""

    __slots__ = ("span", "terms")

    def __init__(self, span: float, terms: Iterable[tuple[complex, float, np.ndarray]] = ()):
        self.span = float(span)
        self.terms: dict[tuple[complex, float], np.ndarray] = {}
        for rate, anchor, coeffs in terms:
            self._add_term(complex(rate), float(anchor), np.asarray(coeffs, dtype=complex))

    # -- construction -----------------------------------------------------

    def _anchor_for(self, rate: complex) -> float:
        return self.span if rate.real > 0 else 0.0

    def _add_term(self, rate: complex, anchor: float, coeffs: np.ndarray) -> None:
        target = self._anchor_for(rate)
        if rate.imag == 0:
            # only the real part is ever observed for real rates
            coeffs = np.asarray(coeffs, dtype=complex).real.astype(complex)
        if anchor != target:
            coeffs = coeffs * np.exp(rate * (target - anchor))
        key = (rate, target)
        if key in self.terms:
            self.terms[key] = P.polyadd(self.terms[key], coeffs)
        else:
            self.terms[key] = np.array(coeffs, dtype=complex)

    @classmethod
    def constant(cls, span: float, value: float) -> "ExpPoly":
        return cls(span, [(0.0, 0.0, [value])])

    @classmethod
    def polynomial(cls, span: float, coeffs) -> "ExpPoly":
        """Polynomial with ascending coefficients in ``s``."""
        return cls(span, [(0.0, 0.0, coeffs)])

    @classmethod
    def exponential(cls, span: float, coef: complex, rate: complex, anchor: float = 0.0) -> "ExpPoly":
        """``coef * exp(rate * (s - anchor))``."""
        return cls(span, [(rate, anchor, [coef])])

    @classmethod
    def sine(cls, span: float, coef: float, freq: float) -> "ExpPoly":
        # sin(w s) = Re[-i e^{i w s}]
        return cls(span, [(1j * freq, 0.0, [-1j * coef])])

    @classmethod
    def cosine(cls, span: float, coef: float, freq: float) -> "ExpPoly":
        return cls(span, [(1j * freq, 0.0, [coef])])

    def copy(self) -> "ExpPoly":
        out = ExpPoly(self.span)
        out.terms = {k: v.copy() for k, v in self.terms.items()}
        return out

    # -- evaluation -------------------------------------------------------

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = np.zeros(s_arr.shape, dtype=complex)
        for (rate, anchor), coeffs in self.terms.items():
            if rate == 0:
                out += P.polyval(s_arr, coeffs)
            else:
                out += P.polyval(s_arr, coeffs) * np.exp(rate * (s_arr - anchor))
        res = out.real
        return float(res) if res.ndim == 0 else res

    # -- algebra ----------------------------------------------------------

    def _check(self, other: "ExpPoly") -> None:
        if not math.isclose(self.span, other.span, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"span mismatch: {self.span} vs {other.span}")

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, ExpPoly):
            self._check(other)
            for (rate, anchor), coeffs in other.terms.items():
                out._add_term(rate, anchor, coeffs)
        else:
            out._add_term(0j, 0.0, np.array([other], dtype=complex))
        return out

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ExpPoly):
            out = ExpPoly(self.span)
            out.terms = {k: v * other for k, v in self.terms.items()}
            return out
        self._check(other)
        out = ExpPoly(self.span)
        # Re[u] * Re[v] = (Re[u v] + Re[u conj(v)]) / 2
        for (r1, a1), c1 in self.terms.items():
            for (r2, a2), c2 in other.terms.items():
                for r2_eff, c2_eff in ((r2, c2), (r2.conjugate(), np.conj(c2))):
                    both_real = r1.imag == 0 and r2.imag == 0
                    if both_real and r2_eff is not r2:
                        continue
                    rate = r1 + r2_eff
                    anchor = out._anchor_for(rate)
                    log_k = rate * anchor - r1 * a1 - r2_eff * a2
                    coeffs = P.polymul(c1, c2_eff) * np.exp(log_k)
                    if not both_real:
                        coeffs = coeffs * 0.5
                    out._add_term(rate, anchor, coeffs)
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n != 2:
            raise NotImplementedError("only squares are supported")
        return self * self

    def times_exp(self, rate: float) -> "ExpPoly":
        """Multiply by ``exp(rate * s)`` (real rate)."""
        out = ExpPoly(self.span)
        for (z, a), coeffs in self.terms.items():
            new_rate = z + rate
            anchor = out._anchor_for(new_rate)
            log_k = new_rate * anchor - z * a
            out._add_term(new_rate, anchor, coeffs * np.exp(log_k))
        return out

    # -- calculus ---------------------------------------------------------

    def derivative(self, order: int = 1) -> "ExpPoly":
        out = self
        for _ in range(order):
            nxt = ExpPoly(self.span)
            for (rate, anchor), coeffs in out.terms.items():
                d = P.polyadd(P.polyder(coeffs), rate * coeffs) if coeffs.size > 1 else rate * coeffs
                nxt._add_term(rate, anchor, _trim(d))
            out = nxt
        return out

    def _taylor_poly(self, rate: complex, anchor: float, coeffs: np.ndarray) -> np.ndarray:
        """Polynomial approximation of ``p(s) exp(rate (s - anchor))`` for small rates."""
        shift = np.array([-anchor, 1.0], dtype=complex)  # s - anchor
        series = np.zeros(1, dtype=complex)
        power = np.ones(1, dtype=complex)
        fact = 1.0
        for n in range(_TAYLOR_TERMS):
            if n > 0:
                power = P.polymul(power, shift)
                fact *= n
            series = P.polyadd(series, power * (rate**n / fact))
        return P.polymul(coeffs, series)

    def antiderivative(self, lower: float = 0.0) -> "ExpPoly":
        """``G(s) = integral_lower^s f(t) dt`` as an exponential polynomial."""
        out = ExpPoly(self.span)
        for (rate, anchor), coeffs in self.terms.items():
            if abs(rate) * max(self.span, 1.0) <= _SMALL_RATE:
                poly = coeffs if rate == 0 else self._taylor_poly(rate, anchor, coeffs)
                out._add_term(0j, 0.0, P.polyint(poly))
            else:
                q = np.zeros(coeffs.size, dtype=complex)
                deriv = coeffs
                sign = 1.0
                for k in range(coeffs.size):
                    q = P.polyadd(q, sign * deriv / rate ** (k + 1))
                    deriv = P.polyder(deriv) if deriv.size > 1 else np.zeros(1, dtype=complex)
                    sign = -sign
                out._add_term(rate, anchor, q)
        # G(lower) must vanish; value at lower is real-part evaluated
        base = out._complex_value(lower)
        out._add_term(0j, 0.0, np.array([-base], dtype=complex))
        return out

    def _complex_value(self, s: float) -> complex:
        total = 0j
        for (rate, anchor), coeffs in self.terms.items():
            total += P.polyval(s, coeffs) * np.exp(rate * (s - anchor))
        return total

    def integral(self, lower: float = 0.0, upper: float | None = None) -> float:
        upper = self.span if upper is None else upper
        g = self.antiderivative(lower)
        return float(g(upper))

    def tail_discounted(self, rate: float) -> "ExpPoly":
        """``u -> integral_u^span f(t) exp(-rate (t - u)) dt``."""
        g = self.times_exp(-rate).antiderivative(0.0)
        total = g(self.span)
        return (ExpPoly.constant(self.span, total) - g).times_exp(rate)

    def head_discounted(self, rate: float) -> "ExpPoly":
        """``s -> integral_0^s f(u) exp(-rate (s - u)) du``."""
        g = self.times_exp(rate).antiderivative(0.0)
        return g.times_exp(-rate)

    def max_abs(self, num: int = 1001) -> float:
        grid = np.linspace(0.0, self.span, num)
        return float(np.max(np.abs(self(grid))))

    def __repr__(self) -> str:
        return f"ExpPoly(span={self.span}, terms={len(self.terms)})"
