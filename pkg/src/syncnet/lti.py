"""Polynomials, rational transfer functions and small LTI state spaces.

Everything is rational-arithmetic only: stability comes from a Routh
table, positive-realness from a frequency sweep with local refinement
plus high-frequency tail conditions, and characteristic polynomials and
resolvents from the Leverrier-Faddeev recursion.  No root finding is
used anywhere in the package; polynomial root extraction exists only as
an independent oracle inside the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "Polynomial",
    "TransferFunction",
    "StateSpace",
    "SprVerdict",
    "InfeasibleDesignError",
    "routh_stable",
    "is_spr",
    "max_spr_epsilon",
    "realize",
    "char_poly",
    "resolvent_transfer",
    "divides",
]

# Trailing coefficients below this (relative to the largest magnitude
# coefficient) are treated as zero when fixing the degree.
_TRIM_REL = 1e-12

_SPR_DECADE_LO = -4.0
_SPR_DECADE_HI = 4.0
_SPR_POINTS_PER_DECADE = 400
_SPR_REFINE_WIDTH = 1e-6


class InfeasibleDesignError(ValueError):
    """Raised when no parameter in the searched range yields a valid design."""


class Polynomial:
    """Real polynomial stored as ascending coefficients.

    Trailing near-zero coefficients are trimmed on construction so that
    ``degree`` reflects the numerically meaningful degree.  The zero
    polynomial has ``degree == -1``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs) -> None:
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if c.size == 0:
            c = np.zeros(1)
        scale = np.abs(c).max()
        if scale > 0.0:
            keep = c.size
            while keep > 1 and abs(c[keep - 1]) <= _TRIM_REL * scale:
                keep -= 1
            c = c[:keep]
            if keep == 1 and abs(c[0]) <= _TRIM_REL * scale:
                c = np.zeros(1)
        else:
            c = np.zeros(1)
        c = c.copy()
        c.setflags(write=False)
        self.coeffs = c

    # -- basic queries ------------------------------------------------

    @property
    def degree(self) -> int:
        if self.is_zero:
            return -1
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    @property
    def is_monic(self) -> bool:
        return not self.is_zero and abs(self.leading - 1.0) <= 1e-9

    @property
    def inf_norm(self) -> float:
        return float(np.abs(self.coeffs).max())

    def coefficient(self, power: int) -> float:
        """Coefficient of ``s**power``; zero outside the stored range."""
        if power < 0 or power >= self.coeffs.size:
            return 0.0
        return float(self.coeffs[power])

    # -- evaluation and calculus --------------------------------------

    def __call__(self, s):
        """Horner evaluation; accepts real/complex scalars or arrays."""
        result = np.zeros_like(np.asarray(s) * 1.0)
        for c in self.coeffs[::-1]:
            result = result * s + c
        if np.isscalar(s) or np.asarray(s).ndim == 0:
            return complex(result) if np.iscomplexobj(result) else float(result)
        return result

    def shifted(self, sigma: float) -> "Polynomial":
        """Taylor shift: the polynomial ``p(s + sigma)``."""
        work = list(self.coeffs[::-1])
        n = len(work)
        shifted = []
        for _ in range(n):
            for k in range(1, len(work)):
                work[k] += sigma * work[k - 1]
            shifted.append(work.pop())
        return Polynomial(shifted)

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def _coerce(other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if np.isscalar(other):
            return Polynomial([float(other)])
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        n = max(self.coeffs.size, other.coeffs.size)
        out = np.zeros(n)
        out[: self.coeffs.size] += self.coeffs
        out[: other.coeffs.size] += other.coeffs
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Polynomial([0.0])
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __divmod__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        if self.degree < other.degree:
            return Polynomial([0.0]), self
        rem = self.coeffs.copy()
        dd, dv = self.degree, other.degree
        quot = np.zeros(dd - dv + 1)
        lead = other.coeffs[-1]
        for k in range(dd - dv, -1, -1):
            quot[k] = rem[k + dv] / lead
            rem[k : k + dv + 1] -= quot[k] * other.coeffs
        return Polynomial(quot), Polynomial(rem[:dv] if dv > 0 else [0.0])

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return bool(np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Polynomial({self.coeffs.tolist()!r})"


def divides(divisor: Polynomial, dividend: Polynomial, rel_tol: float = 1e-9) -> bool:
    """True when the division remainder is negligible.

    The remainder's largest coefficient is compared against ``rel_tol``
    times the dividend's largest coefficient.
    """
    if dividend.is_zero:
        return True
    _, rem = divmod(dividend, divisor)
    return rem.inf_norm <= rel_tol * dividend.inf_norm


def routh_stable(p: Polynomial) -> bool:
    """Strict Hurwitz test via the Routh table.

    A polynomial of degree >= 1 is strictly Hurwitz exactly when, after
    normalizing the leading coefficient positive, every first-column
    entry of the table is strictly positive.  First-column zeros (the
    epsilon-perturbation cases) and all-zero rows both certify roots on
    or right of the imaginary axis, so they return ``False``.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    if p.is_zero:
        raise ValueError("zero polynomial has no stability verdict")
    if p.degree < 1:
        raise ValueError("stability test needs degree >= 1")
    desc = p.coeffs[::-1].copy()
    if desc[0] < 0.0:
        desc = -desc
    # Necessary condition: a Hurwitz polynomial has all coefficients
    # strictly positive.
    if np.any(desc <= 0.0):
        return False
    width = (desc.size + 1) // 2
    row_prev = np.zeros(width + 1)
    row_cur = np.zeros(width + 1)
    row_prev[: desc[0::2].size] = desc[0::2]
    row_cur[: desc[1::2].size] = desc[1::2]
    for _ in range(p.degree - 1):
        pivot = row_cur[0]
        scale = max(np.abs(row_cur).max(), np.abs(row_prev).max(), 1.0)
        if pivot <= 1e-13 * scale:
            return False
        nxt = row_prev[1:] - (row_prev[0] / pivot) * row_cur[1:]
        if np.all(nxt == 0.0):
            # A vanishing row signals roots placed symmetrically about
            # the origin, hence not strictly in the left half plane.
            return False
        row_prev = row_cur
        row_cur = np.append(nxt, 0.0)
    return row_cur[0] > 0.0


@dataclass(frozen=True)
class TransferFunction:
    """Scalar rational transfer function ``num(s) / den(s)``."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self) -> None:
        if not isinstance(self.num, Polynomial):
            object.__setattr__(self, "num", Polynomial(self.num))
        if not isinstance(self.den, Polynomial):
            object.__setattr__(self, "den", Polynomial(self.den))
        if self.den.is_zero:
            raise ZeroDivisionError("zero denominator polynomial")

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    @property
    def is_proper(self) -> bool:
        return self.num.is_zero or self.relative_degree >= 0

    def freq_response(self, omega):
        """Value at ``s = j * omega`` for scalar or array ``omega``.

        Raises ``ValueError`` when the denominator vanishes at the
        requested frequency (a pole on the imaginary axis).
        """
        s = 1j * np.asarray(omega, dtype=float)
        den_val = self.den(s)
        if np.any(np.abs(np.atleast_1d(den_val)) < 1e-300):
            raise ValueError("pole on the imaginary axis at a requested frequency")
        return self.num(s) / den_val

    def __repr__(self) -> str:
        return f"TransferFunction(num={self.num.coeffs.tolist()!r}, den={self.den.coeffs.tolist()!r})"


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Single-input single-output state space (A, b, c, d).

    ``b`` and ``c`` are stored as flat length-n vectors; ``d`` is the
    scalar feedthrough.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("state matrix must be square")
        if b.shape != (n,) or c.shape != (n,):
            raise ValueError("b and c must have length matching the state dimension")
        for name, arr in (("a", a), ("b", b), ("c", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "d", float(self.d))

    @property
    def order(self) -> int:
        return self.a.shape[0]


def realize(tf: TransferFunction) -> StateSpace:
    """Controllable canonical realization of a proper transfer function."""
    if not tf.is_proper:
        raise ValueError("cannot realize an improper transfer function")
    n = tf.den.degree
    lead = tf.den.leading
    den_norm = tf.den.coeffs / lead
    num_norm = np.zeros(n + 1)
    num_norm[: tf.num.coeffs.size] = tf.num.coeffs / lead
    d = num_norm[n]
    strict = num_norm[:n] - d * den_norm[:n]
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros(0), np.zeros(0), d)
    a = np.zeros((n, n))
    a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -den_norm[:n]
    b = np.zeros(n)
    b[-1] = 1.0
    return StateSpace(a, b, strict, d)


def char_poly(a) -> Polynomial:
    """Monic characteristic polynomial via the Leverrier-Faddeev recursion."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("expected a square matrix")
    coeffs_desc = [1.0]
    m = np.eye(n)
    for k in range(1, n + 1):
        am = a @ m
        ck = -np.trace(am) / k
        coeffs_desc.append(ck)
        m = am + ck * np.eye(n)
    return Polynomial(coeffs_desc[::-1])


def resolvent_transfer(a, b, c) -> TransferFunction:
    """Transfer function ``c (sI - a)^{-1} b`` by Leverrier-Faddeev.

    The recursion produces the resolvent numerator matrices alongside
    the characteristic polynomial, so the result is exact rational
    arithmetic with no eigenvalue extraction.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("expected a square matrix")
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    if b.shape != (n,) or c.shape != (n,):
        raise ValueError("b and c must have length matching the state dimension")
    coeffs_desc = [1.0]
    num_desc = []
    m = np.eye(n)
    for k in range(1, n + 1):
        num_desc.append(float(c @ m @ b))
        am = a @ m
        ck = -np.trace(am) / k
        coeffs_desc.append(ck)
        m = am + ck * np.eye(n)
    return TransferFunction(Polynomial(num_desc[::-1]), Polynomial(coeffs_desc[::-1]))


@dataclass(frozen=True)
class SprVerdict:
    """Outcome of a strict positive-realness check with diagnostics."""

    ok: bool
    reason: str
    min_real_part: float
    critical_omega: float | None

    def __bool__(self) -> bool:
        return self.ok


def _golden_min(f, lo: float, hi: float, width: float = _SPR_REFINE_WIDTH):
    """Golden-section minimum of ``f`` on [lo, hi] to bracket ``width``."""
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - ratio * (hi - lo)
    x2 = lo + ratio * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > width:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - ratio * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + ratio * (hi - lo)
            f2 = f(x2)
    xm = 0.5 * (lo + hi)
    fm = f(xm)
    candidates = [(f1, x1), (f2, x2), (fm, xm)]
    return min(candidates, key=lambda pair: pair[0])


def is_spr(tf: TransferFunction) -> SprVerdict:
    """Strict positive-realness of a proper rational transfer function.

    Checks, in order: Hurwitz denominator, strict positivity of
    ``Re tf(j omega)`` on a logarithmic grid over 1e-4..1e4 rad/s (400
    points per decade, local minima refined by golden section), and the
    high-frequency tail condition appropriate to the relative degree.
    Positive-real functions cannot have relative degree above one, so
    that case fails immediately.
    """
    if not tf.is_proper:
        raise ValueError("strict positive-realness is defined for proper functions only")
    if tf.num.is_zero:
        return SprVerdict(False, "zero transfer function", 0.0, None)
    rel = tf.relative_degree
    if rel >= 2:
        return SprVerdict(False, "relative degree exceeds one", float("nan"), None)
    if tf.den.degree == 0:
        gain = tf.num.coeffs[0] / tf.den.coeffs[0]
        if gain > 0.0:
            return SprVerdict(True, "positive static gain", gain, None)
        return SprVerdict(False, "non-positive static gain", gain, None)
    if not routh_stable(tf.den):
        return SprVerdict(False, "denominator is not Hurwitz", float("nan"), None)

    decades = _SPR_DECADE_HI - _SPR_DECADE_LO
    grid = np.logspace(
        _SPR_DECADE_LO, _SPR_DECADE_HI, int(decades * _SPR_POINTS_PER_DECADE) + 1
    )
    omegas = np.concatenate([[0.0], grid])
    real = np.real(tf.freq_response(omegas))
    idx = int(np.argmin(real))
    min_real = float(real[idx])
    min_omega = float(omegas[idx])
    if min_real <= 0.0:
        return SprVerdict(
            False, "real part non-positive on the frequency grid", min_real, min_omega
        )

    # Refine every interior local minimum of the sweep; each one is a
    # candidate for a dip below zero between grid points.
    log_omega = np.log10(grid)
    real_grid = real[1:]

    def real_at(u: float) -> float:
        return float(np.real(tf.freq_response(10.0**u)))

    for k in range(1, len(grid) - 1):
        if real_grid[k] <= real_grid[k - 1] and real_grid[k] <= real_grid[k + 1]:
            refined, u_star = _golden_min(real_at, log_omega[k - 1], log_omega[k + 1])
            if refined < min_real:
                min_real = refined
                min_omega = 10.0**u_star
            if refined <= 0.0:
                return SprVerdict(
                    False,
                    "real part non-positive after local refinement",
                    refined,
                    10.0**u_star,
                )

    m = tf.den.degree
    d_top = tf.den.coefficient(m)
    if rel == 0:
        gain_inf = tf.num.coefficient(m) / d_top
        if gain_inf <= 0.0:
            return SprVerdict(
                False, "non-positive real part at infinite frequency", gain_inf, None
            )
    else:
        # Relative degree one: Re tf(j omega) ~ tail / omega^2, with
        # tail = (n_{m-1} d_{m-1} - n_{m-2} d_m) / d_m^2.
        tail = (
            tf.num.coefficient(m - 1) * tf.den.coefficient(m - 1)
            - tf.num.coefficient(m - 2) * d_top
        ) / (d_top * d_top)
        if tail <= 0.0:
            return SprVerdict(
                False, "high-frequency tail condition fails", tail, None
            )
    return SprVerdict(True, "strictly positive real", min_real, min_omega)


def _validate_consensus_numerator(filter_num: Polynomial, order: int) -> None:
    """Numerator rules for the consensus filter: monic, stable, degree m-1."""
    if order < 1:
        raise ValueError("signal class polynomial must have degree >= 1")
    if order == 1:
        if filter_num.degree != 0 or filter_num.coeffs[0] <= 0.0:
            raise ValueError("first-order designs need a positive constant numerator")
        return
    if filter_num.degree != order - 1:
        raise ValueError(
            f"filter numerator degree must be {order - 1}, got {filter_num.degree}"
        )
    if not filter_num.is_monic:
        raise ValueError("filter numerator must be monic")
    if not routh_stable(filter_num):
        raise InfeasibleDesignError("filter numerator must be Hurwitz")


def max_spr_epsilon(
    filter_num: Polynomial,
    signal_den: Polynomial,
    tol: float = 1e-3,
) -> float:
    """Largest ``eps`` keeping ``filter_num / (eps * signal_den + filter_num)`` SPR.

    Doubles an upper bracket starting from 1 until the SPR test fails,
    then bisects to absolute tolerance ``tol``.  Returns ``inf`` when no
    failure is found over an astronomically large range, and raises
    ``InfeasibleDesignError`` when even a tiny ``eps`` fails.
    """
    _validate_consensus_numerator(filter_num, signal_den.degree)

    def spr_at(eps: float) -> bool:
        tf = TransferFunction(filter_num, eps * signal_den + filter_num)
        return bool(is_spr(tf))

    lo = 1e-6
    if not spr_at(lo):
        raise InfeasibleDesignError(
            "filter is not strictly positive real even for epsilon = 1e-6"
        )
    hi = 1.0
    while spr_at(hi):
        lo = hi
        hi *= 2.0
        if hi > 2.0**60:
            return float("inf")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if spr_at(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
