"""Modified Bessel functions I_n, K_n of integer order in scaled arithmetic.

The mode expansions used elsewhere in this package pair I and K factors whose
product is of moderate size even though the factors themselves overflow or
underflow double precision badly (I_90(3) is near 1e-121 while K_90(3) is near
1e+116, and the supported order/argument range is wider still).  All values
are therefore produced as ScaledValue instances, a sign-carrying mantissa in
[1, 2) together with an unbounded power-of-two exponent.  Callers demote to
plain floats only after forming the balanced products they actually need.

Algorithm choices:

* I_n(x): direct power series.  Every term is positive, so the summation is
  stable for the whole supported range; the (x/2)^n / n! prefactor is built
  by repeated scaled multiplication to avoid lgamma rounding.
* I_0..I_nmax(x) as a family: Miller backward recurrence normalised with
  exp(x) = I_0(x) + 2 * sum_k I_k(x), with block rescaling so intermediate
  chain values never leave the double range.  For small x the per-order
  series is used instead (it is a handful of terms there).
* K_0, K_1: the classical log-bearing series for x <= 3.5; for larger x the
  trapezoid rule on K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt, which
  converges geometrically for this integrand.
* K_n, n >= 2: upward recurrence from K_0, K_1 (stable in the direction of
  growth), again with block rescaling.

Derivatives use I_n' = (I_{n-1} + I_{n+1})/2 and K_n' = -(K_{n-1} + K_{n+1})/2
with the n = 0 case mapped through I_{-1} = I_1 and K_{-1} = K_1.

Supported domain: integer 0 <= n <= 200 and real 0 <= x <= 50 (x > 0 for K).
Target relative accuracy is 1e-12 or better away from exact zeros.
"""

from __future__ import annotations

import math

__all__ = [
    "ORDER_MAX",
    "ARG_MAX",
    "ScaledValue",
    "bessel_i",
    "bessel_k",
    "bessel_i_family",
    "bessel_k_family",
    "bessel_pair_derivatives",
]

ORDER_MAX = 200
ARG_MAX = 50.0

_LN2 = math.log(2.0)
_EULER_GAMMA = 0.5772156649015328606

# Exponent gap beyond which the smaller addend cannot affect a 53-bit mantissa.
_ADD_CUTOFF = 60

# Block rescale threshold for the raw recurrence chains (well inside the
# double range so products of two chain values stay finite too).
_RESCALE_EXP = 600.0
_RESCALE_FACTOR = math.ldexp(1.0, -600)


class ScaledValue:
    """A real number stored as mantissa * 2**exponent.

    The mantissa is 0.0 or carries the sign with absolute value in [1, 2);
    the exponent is a Python int, so products and quotients of scaled values
    never overflow for any exponent a test could plausibly reach.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: float, exponent: int = 0):
        if mantissa == 0.0:
            self.mantissa = 0.0
            self.exponent = 0
            return
        m, e = math.frexp(mantissa)
        # frexp puts |m| in [0.5, 1); shift one bit for the [1, 2) convention.
        self.mantissa = m * 2.0
        self.exponent = exponent + e - 1

    @classmethod
    def from_float(cls, value: float) -> "ScaledValue":
        if not math.isfinite(value):
            raise ValueError(f"cannot scale non-finite value {value!r}")
        return cls(value)

    @classmethod
    def zero(cls) -> "ScaledValue":
        return cls(0.0)

    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    @property
    def sign(self) -> int:
        if self.mantissa > 0.0:
            return 1
        if self.mantissa < 0.0:
            return -1
        return 0

    def to_float(self) -> float:
        """Demote to a plain float.

        Underflow rounds to 0.0 like any double product would; overflow
        raises OverflowError rather than fabricating an inf.
        """
        if self.mantissa == 0.0:
            return 0.0
        return math.ldexp(self.mantissa, self.exponent)

    def log_abs(self) -> float:
        """Natural log of the absolute value (-inf for zero)."""
        if self.mantissa == 0.0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.exponent * _LN2

    def __mul__(self, other: "ScaledValue | float") -> "ScaledValue":
        if isinstance(other, ScaledValue):
            if self.mantissa == 0.0 or other.mantissa == 0.0:
                return ScaledValue(0.0)
            return ScaledValue(self.mantissa * other.mantissa,
                               self.exponent + other.exponent)
        return ScaledValue(self.mantissa * other, self.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other: "ScaledValue | float") -> "ScaledValue":
        if isinstance(other, ScaledValue):
            if other.mantissa == 0.0:
                raise ZeroDivisionError("scaled division by zero")
            if self.mantissa == 0.0:
                return ScaledValue(0.0)
            return ScaledValue(self.mantissa / other.mantissa,
                               self.exponent - other.exponent)
        return ScaledValue(self.mantissa / other, self.exponent)

    def __neg__(self) -> "ScaledValue":
        out = ScaledValue.__new__(ScaledValue)
        out.mantissa = -self.mantissa
        out.exponent = self.exponent
        return out

    def __abs__(self) -> "ScaledValue":
        out = ScaledValue.__new__(ScaledValue)
        out.mantissa = abs(self.mantissa)
        out.exponent = self.exponent
        return out

    def __add__(self, other: "ScaledValue") -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            return NotImplemented
        if self.mantissa == 0.0:
            return other
        if other.mantissa == 0.0:
            return self
        gap = self.exponent - other.exponent
        if gap >= _ADD_CUTOFF:
            return self
        if gap <= -_ADD_CUTOFF:
            return other
        if gap >= 0:
            return ScaledValue(self.mantissa + math.ldexp(other.mantissa, -gap),
                               self.exponent)
        return ScaledValue(math.ldexp(self.mantissa, gap) + other.mantissa,
                           other.exponent)

    def __sub__(self, other: "ScaledValue") -> "ScaledValue":
        return self.__add__(-other)

    def __repr__(self) -> str:
        return f"ScaledValue({self.mantissa!r}, {self.exponent!r})"


def _check_domain(n: int, x: float, positive_x: bool) -> None:
    if not isinstance(n, (int,)) or isinstance(n, bool):
        raise ValueError(f"order must be an integer, got {n!r}")
    if n < 0 or n > ORDER_MAX:
        raise ValueError(f"order {n} outside supported range [0, {ORDER_MAX}]")
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x!r}")
    if x > ARG_MAX:
        raise ValueError(f"argument {x} exceeds supported maximum {ARG_MAX}")
    if positive_x:
        if x <= 0.0:
            raise ValueError(f"argument must be positive, got {x}")
    elif x < 0.0:
        raise ValueError(f"argument must be non-negative, got {x}")


def _i_series(n: int, x: float) -> ScaledValue:
    # prefactor (x/2)^n / n! by repeated scaled multiplication
    pref = ScaledValue(1.0)
    half = 0.5 * x
    for i in range(1, n + 1):
        pref = pref * (half / i)
    if pref.is_zero():
        return pref
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for m in range(1, 400):
        term *= q / (m * (n + m))
        total += term
        if term < 1e-18 * total and 2 * m > x:
            break
    return pref * total


def bessel_i(n: int, x: float) -> ScaledValue:
    """I_n(x) as a ScaledValue, by power series."""
    _check_domain(n, x, positive_x=False)
    if x == 0.0:
        return ScaledValue(1.0 if n == 0 else 0.0)
    return _i_series(n, x)


def bessel_i_family(n_max: int, x: float) -> list[ScaledValue]:
    """[I_0(x), ..., I_nmax(x)] in one pass.

    Small arguments go through the per-order series; otherwise a Miller
    backward recurrence with adaptive start offset, normalised against
    exp(x) = I_0 + 2 sum_{k>=1} I_k.
    """
    _check_domain(n_max, x, positive_x=False)
    if x == 0.0:
        return [ScaledValue(1.0)] + [ScaledValue(0.0)] * n_max
    if x < 2.0:
        return [_i_series(n, x) for n in range(n_max + 1)]

    margin = 24
    prev = None
    while True:
        fam = _miller_chain(n_max, x, margin)
        if prev is not None:
            ok = True
            for probe in (n_max, n_max // 2, 0):
                a = fam[probe]
                b = prev[probe]
                if a.is_zero() and b.is_zero():
                    continue
                diff = abs(a - b)
                if diff.log_abs() > a.log_abs() + math.log(1e-15):
                    ok = False
                    break
            if ok:
                return fam
        prev = fam
        margin += 24
        if margin > 600:
            raise RuntimeError("backward recurrence failed to stabilise")


def _miller_chain(n_max: int, x: float, margin: int) -> list[ScaledValue]:
    start = n_max + margin + int(math.sqrt(40.0 * max(n_max, x)))
    two_over_x = 2.0 / x
    # raw chain values stored as (float, power-of-two shift)
    vals: list[float] = [0.0] * (start + 2)
    shifts: list[int] = [0] * (start + 2)
    hi = 0.0          # p_{m+1}
    cur = 1e-250      # p_m seed
    shift = 0
    vals[start] = cur
    shifts[start] = 0
    for m in range(start, 0, -1):
        nxt = hi + (two_over_x * m) * cur
        hi, cur = cur, nxt
        if abs(cur) > 1e250:
            cur *= _RESCALE_FACTOR
            hi *= _RESCALE_FACTOR
            shift += 600
        vals[m - 1] = cur
        shifts[m - 1] = shift
    # normalisation sum exp(x) = p_0 + 2 sum p_k, in scaled form
    total = ScaledValue(vals[0], shifts[0])
    for m in range(1, start + 1):
        if vals[m] != 0.0:
            total = total + ScaledValue(2.0 * vals[m], shifts[m])
    # exp(x) as a scaled value
    e2 = math.floor(x / _LN2)
    ex = ScaledValue(math.exp(x - e2 * _LN2), e2)
    scale = ex / total
    out = []
    for m in range(n_max + 1):
        if vals[m] == 0.0:
            out.append(ScaledValue(0.0))
        else:
            out.append(ScaledValue(vals[m], shifts[m]) * scale)
    return out


def _k01_series(x: float) -> tuple[ScaledValue, ScaledValue]:
    # valid for small x; cancellation grows like exp(2x) so the caller caps x
    i0 = _i_series(0, x).to_float()
    i1 = _i_series(1, x).to_float()
    lg = math.log(0.5 * x)
    q = 0.25 * x * x

    term = 1.0
    h = 0.0
    s0 = 0.0
    for m in range(1, 400):
        term *= q / (m * m)
        h += 1.0 / m
        s0 += term * h
        if term * h < 1e-19 * max(s0, 1.0):
            break
    k0 = -(lg + _EULER_GAMMA) * i0 + s0

    term = 1.0
    hm = 0.0
    hm1 = 1.0
    s1 = (hm + hm1 - 2.0 * _EULER_GAMMA)
    for m in range(1, 400):
        term *= q / (m * (m + 1))
        hm += 1.0 / m
        hm1 += 1.0 / (m + 1)
        inc = (hm + hm1 - 2.0 * _EULER_GAMMA) * term
        s1 += inc
        if abs(inc) < 1e-19 * max(abs(s1), 1.0):
            break
    k1 = 1.0 / x + lg * i1 - 0.25 * x * s1
    return ScaledValue(k0), ScaledValue(k1)


def _k01_quadrature(x: float) -> tuple[ScaledValue, ScaledValue]:
    # trapezoid rule on exp(-x cosh t) cosh(n t); geometric convergence in h
    t_max = 1.0
    while x * (math.cosh(t_max) - 1.0) - t_max < 60.0:
        t_max += 0.25
    steps = int(math.ceil(t_max / 0.05))
    h = t_max / steps
    s0 = 0.5 * math.exp(-x)
    s1 = s0
    for i in range(1, steps + 1):
        t = i * h
        w = math.exp(-x * math.cosh(t))
        if i == steps:
            w *= 0.5
        s0 += w
        s1 += w * math.cosh(t)
    return ScaledValue(h * s0), ScaledValue(h * s1)


def _k01(x: float) -> tuple[ScaledValue, ScaledValue]:
    if x <= 3.5:
        return _k01_series(x)
    return _k01_quadrature(x)


def bessel_k_family(n_max: int, x: float) -> list[ScaledValue]:
    """[K_0(x), ..., K_nmax(x)] by upward recurrence from K_0, K_1."""
    _check_domain(n_max, x, positive_x=True)
    k0, k1 = _k01(x)
    if n_max == 0:
        return [k0]
    out = [k0, k1]
    two_over_x = 2.0 / x
    # raw chain in floats sharing a common power-of-two offset
    base = k0.exponent
    lo = k0.mantissa
    cur = math.ldexp(k1.mantissa, k1.exponent - k0.exponent)
    shift = 0
    for n in range(1, n_max):
        nxt = lo + (two_over_x * n) * cur
        lo, cur = cur, nxt
        if abs(cur) > 1e250:
            lo *= _RESCALE_FACTOR
            cur *= _RESCALE_FACTOR
            shift += 600
        out.append(ScaledValue(cur, base + shift))
    return out


def bessel_k(n: int, x: float) -> ScaledValue:
    """K_n(x) as a ScaledValue."""
    _check_domain(n, x, positive_x=True)
    return bessel_k_family(n, x)[n]


def bessel_pair_derivatives(n: int, x: float) -> tuple[ScaledValue, ScaledValue]:
    """(I_n'(x), K_n'(x)) via the neighbour-order identities."""
    _check_domain(n, x, positive_x=True)
    if n == 0:
        i1 = bessel_i(1, x)
        k1 = bessel_k(1, x)
        return i1, -k1
    if n + 1 > ORDER_MAX:
        raise ValueError(f"derivative at order {n} needs order {n + 1} "
                         f"which exceeds the supported maximum {ORDER_MAX}")
    ifam = bessel_i_family(n + 1, x)
    kfam = bessel_k_family(n + 1, x)
    di = (ifam[n - 1] + ifam[n + 1]) * 0.5
    dk = (kfam[n - 1] + kfam[n + 1]) * (-0.5)
    return di, dk
