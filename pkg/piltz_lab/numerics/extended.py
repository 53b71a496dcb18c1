"""
Pair-of-doubles ("double-double") arithmetic built on error-free transformations.

A value is stored as an unevaluated sum hi + lo with |lo| <= ulp(hi)/2, giving
about 31 significant decimal digits. Every operation works elementwise on
numpy arrays as well as on plain floats, so the same code serves scalar queries
and block-wide evaluation.
"""
import mpmath
import numpy as np

_SPLITTER = 134217729.0  # 2^27 + 1, exact in double


# --- Error-free transformations ---
def split(a):
    """Dekker split: a -> (ahi, alo) with ahi + alo == a and 26-bit halves."""
    c = _SPLITTER * a
    abig = c - a
    ahi = c - abig
    return ahi, a - ahi


def two_sum(a, b):
    """(s, err) with s + err == a + b exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a, b):
    """two_sum for |a| >= |b|."""
    s = a + b
    return s, b - (s - a)


def two_prod(a, b):
    """(p, err) with p + err == a * b exactly."""
    p = a * b
    ahi, alo = split(a)
    bhi, blo = split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


class DoubleDouble:
    """Extended-precision real (or array of reals) as hi + lo."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi, lo=0.0):
        self.hi = hi
        self.lo = lo

    # --- Construction ---
    @classmethod
    def from_int(cls, n):
        """Exact conversion of a Python int (|n| < 2^106) or an int64 array."""
        if isinstance(n, np.ndarray):
            hi = n.astype(np.float64)
            lo = (n - hi.astype(np.int64)).astype(np.float64)
            return cls(hi, lo)
        n = int(n)
        hi = float(n)
        return cls(hi, float(n - int(hi)))

    @classmethod
    def from_mpf(cls, x):
        with mpmath.workprec(160):
            x = mpmath.mpf(x)
            hi = float(x)
            lo = float(x - hi)
        return cls(hi, lo)

    @classmethod
    def from_str(cls, text: str):
        """Round a decimal string to the nearest double-double."""
        with mpmath.workprec(160):
            return cls.from_mpf(mpmath.mpf(text))

    @staticmethod
    def coerce(value):
        if isinstance(value, DoubleDouble):
            return value
        if isinstance(value, int):
            return DoubleDouble.from_int(value)
        return DoubleDouble(value, 0.0 * value)

    # --- Arithmetic ---
    def __neg__(self):
        return DoubleDouble(-self.hi, -self.lo)

    def __add__(self, other):
        if not isinstance(other, DoubleDouble):
            if isinstance(other, int):
                other = DoubleDouble.from_int(other)
            else:
                s, e = two_sum(self.hi, other)
                e = e + self.lo
                hi, lo = quick_two_sum(s, e)
                return DoubleDouble(hi, lo)
        s, e = two_sum(self.hi, other.hi)
        t, f = two_sum(self.lo, other.lo)
        e = e + t
        s, e = quick_two_sum(s, e)
        e = e + f
        hi, lo = quick_two_sum(s, e)
        return DoubleDouble(hi, lo)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DoubleDouble):
            return self + (-other)
        if isinstance(other, int):
            return self + (-DoubleDouble.from_int(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DoubleDouble):
            if isinstance(other, int) and abs(other) >= 2**53:
                other = DoubleDouble.from_int(other)
            else:
                p, e = two_prod(self.hi, other)
                e = e + self.lo * other
                hi, lo = quick_two_sum(p, e)
                return DoubleDouble(hi, lo)
        p, e = two_prod(self.hi, other.hi)
        e = e + (self.hi * other.lo + self.lo * other.hi)
        hi, lo = quick_two_sum(p, e)
        return DoubleDouble(hi, lo)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = DoubleDouble.coerce(other)
        q1 = self.hi / other.hi
        r = self - other * q1
        q2 = r.hi / other.hi
        r = r - other * q2
        q3 = r.hi / other.hi
        hi, lo = quick_two_sum(q1, q2)
        return DoubleDouble(hi, lo) + q3

    def __rtruediv__(self, other):
        return DoubleDouble.coerce(other) / self

    def ldexp(self, exponent):
        """Exact scaling by 2**exponent."""
        return DoubleDouble(np.ldexp(self.hi, exponent), np.ldexp(self.lo, exponent))

    def __getitem__(self, index):
        return DoubleDouble(self.hi[index], self.lo[index])

    def __len__(self):
        return len(self.hi)

    # --- Conversion ---
    def to_float(self):
        return self.hi + self.lo

    def __float__(self):
        return float(self.hi) + float(self.lo)

    def to_mpf(self):
        with mpmath.workprec(160):
            return mpmath.mpf(float(self.hi)) + mpmath.mpf(float(self.lo))

    def to_decimal(self, digits: int = 30) -> str:
        """Decimal rendering without scientific notation."""
        with mpmath.workprec(160):
            return mpmath.nstr(self.to_mpf(), digits, min_fixed=-np.inf, max_fixed=np.inf)

    def __repr__(self):
        return f"DoubleDouble(hi={self.hi!r}, lo={self.lo!r})"


def _mp_const(expr) -> DoubleDouble:
    with mpmath.workprec(200):
        return DoubleDouble.from_mpf(expr())


LN2 = _mp_const(lambda: mpmath.log(2))
PI = _mp_const(lambda: mpmath.pi)
TWO_PI = _mp_const(lambda: 2 * mpmath.pi)
_INVERSE_FACTORS = {j: _mp_const(lambda j=j: mpmath.mpf(1) / j) for j in range(2, 12)}
_EXP_HALVINGS = 10


def exp(a: DoubleDouble) -> DoubleDouble:
    """exp with argument reduction by ln 2 and 2^-10, then Taylor and squaring."""
    a = DoubleDouble.coerce(a)
    m = np.rint(a.hi / LN2.hi)
    r = (a - LN2 * m).ldexp(-_EXP_HALVINGS)
    acc = 1.0 + r * _INVERSE_FACTORS[10]
    for j in range(9, 1, -1):
        acc = 1.0 + (r * acc) * _INVERSE_FACTORS[j]
    s = r * acc  # expm1(r)
    for _ in range(_EXP_HALVINGS):
        s = s * (s + 2.0)
    result = s + 1.0
    return result.ldexp(np.asarray(m, dtype=np.int64) if np.ndim(m) else int(m))


def log(a: DoubleDouble) -> DoubleDouble:
    """Natural log of a positive double-double by one Newton step on exp."""
    a = DoubleDouble.coerce(a)
    y = DoubleDouble(np.log(a.hi), 0.0 * a.hi)
    return y + (a * exp(-y) - 1.0)


def kth_root(a: DoubleDouble, k: int) -> DoubleDouble:
    """a^(1/k) for positive a by one Newton step from the double root."""
    a = DoubleDouble.coerce(a)
    if k == 1:
        return a
    r0 = a.hi ** (1.0 / k)
    power = DoubleDouble(r0, 0.0 * r0)
    for _ in range(k - 1):
        power = power * r0
    residual = a - power
    correction = residual.to_float() / (k * r0 ** (k - 1))
    return DoubleDouble(r0, 0.0 * r0) + correction


def power(a: DoubleDouble, k: int) -> DoubleDouble:
    a = DoubleDouble.coerce(a)
    result = a
    for _ in range(k - 1):
        result = result * a
    return result


def nearest_integer_distance(a: DoubleDouble):
    """||a||, the distance from a to the nearest integer, as a double."""
    nearest = np.rint(a.hi)
    frac = (a - nearest).to_float()
    frac = np.where(frac > 0.5, frac - 1.0, frac)
    frac = np.where(frac < -0.5, frac + 1.0, frac)
    return np.abs(frac)


def fractional_part(a: DoubleDouble):
    """a - floor(a) in [0, 1), as a double."""
    base = np.floor(a.hi)
    frac = (a - base).to_float()
    frac = np.where(frac < 0.0, frac + 1.0, frac)
    return np.where(frac >= 1.0, frac - 1.0, frac)
