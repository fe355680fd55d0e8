"""Truncated Taylor (jet) arithmetic.

A :class:`Jet` carries the value and the first ``order`` derivatives of a
scalar function at ``base_point``.  Coefficients are stored *raw*:
``coeffs[k]`` is the k-th derivative, not the k-th Taylor coefficient.
Products, quotients and compositions convert to Taylor coefficients
internally and back on return.

:class:`Jet2` is the bivariate analogue used for vector-field coefficients
``xi(z, r)``, ``eta(z, r)``; it stores Taylor coefficients of the total-degree
truncated expansion.

Every operation here is pure; instances are immutable.
"""

from __future__ import annotations

import functools
import math
from collections.abc import Callable, Sequence
from numbers import Real

import numpy as np

from .errors import ContractViolation, SingularPointError

DEFAULT_ORDER = 6

ELEMENTARY = ("sin", "cos", "exp", "log", "sqrt", "pow")


@functools.lru_cache(maxsize=64)
def _factorials(n: int) -> np.ndarray:
    f = np.array([math.factorial(k) for k in range(n + 1)], dtype=float)
    f.flags.writeable = False
    return f


class Jet:
    """Value and derivatives ``0..order`` of a scalar function at a point."""

    __slots__ = ("base_point", "coeffs")
    __array_ufunc__ = None  # let numpy scalars defer to our reflected operators

    def __init__(self, base_point: float, coeffs: Sequence[float]):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ContractViolation("jet coefficients must be a non-empty 1-d sequence")
        if not math.isfinite(np.add.reduce(c)) and not np.isfinite(c).all():
            raise SingularPointError(f"non-finite jet coefficients {c.tolist()} at {base_point}")
        c.flags.writeable = False
        self.base_point = float(base_point)
        self.coeffs = c

    @classmethod
    def _wrap(cls, base_point: float, c: np.ndarray, checked: bool = False) -> Jet:
        """Internal fast path: ``c`` is a fresh float array (or a view of a checked one)."""
        if not checked and not math.isfinite(np.add.reduce(c)) and not np.isfinite(c).all():
            raise SingularPointError(f"non-finite jet coefficients {c.tolist()} at {base_point}")
        c.flags.writeable = False
        out = object.__new__(cls)
        out.base_point = base_point
        out.coeffs = c
        return out

    @classmethod
    def constant(cls, value: float, base_point: float, order: int = DEFAULT_ORDER) -> Jet:
        c = np.zeros(order + 1)
        c[0] = value
        return cls(base_point, c)

    @classmethod
    def variable(cls, base_point: float, order: int = DEFAULT_ORDER) -> Jet:
        """Jet of the identity function ``z -> z``."""
        c = np.zeros(order + 1)
        c[0] = base_point
        if order >= 1:
            c[1] = 1.0
        return cls(base_point, c)

    @classmethod
    def from_taylor(cls, base_point: float, taylor: Sequence[float]) -> Jet:
        t = np.asarray(taylor, dtype=float)
        return cls._wrap(float(base_point), t * _factorials(t.size - 1))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def taylor(self) -> np.ndarray:
        return self.coeffs / _factorials(self.order)

    def truncate(self, order: int) -> Jet:
        if order < 0 or order > self.order:
            raise ContractViolation(f"cannot truncate order-{self.order} jet to order {order}")
        return Jet._wrap(self.base_point, self.coeffs[: order + 1], checked=True)

    def derivative(self, times: int = 1) -> Jet:
        out = self
        for _ in range(times):
            out = jet_shift_derivative(out)
        return out

    def compose(self, inner):
        """Evaluate the function this jet describes on ``inner``.

        ``inner`` may be a float, a :class:`Jet` or a :class:`Jet2` whose value
        equals ``base_point``; the result is the truncated Taylor composition.
        """
        v = _value_of(inner)
        if not math.isclose(v, self.base_point, rel_tol=1e-12, abs_tol=1e-12):
            raise ContractViolation(
                f"composition base mismatch: jet at {self.base_point}, argument value {v}"
            )
        if not isinstance(inner, (Jet, Jet2)):
            return self.value
        return _horner(self.taylor(), inner - v)

    # arithmetic ---------------------------------------------------------
    def __neg__(self) -> Jet:
        return Jet._wrap(self.base_point, -self.coeffs, checked=True)

    def __pos__(self) -> Jet:
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, other)
        if isinstance(other, Real):
            c = self.coeffs.copy()
            c[0] += other
            return Jet._wrap(self.base_point, c)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, -other)
        if isinstance(other, Real):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Real):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        if isinstance(other, Real):
            return Jet._wrap(self.base_point, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_div(self, other)
        if isinstance(other, Real):
            if other == 0:
                raise SingularPointError("division of jet by zero scalar")
            return Jet._wrap(self.base_point, self.coeffs / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Real):
            return jet_div(Jet.constant(other, self.base_point, self.order), self)
        return NotImplemented

    def __pow__(self, p):
        if isinstance(p, Real):
            return jet_elementary("pow", self, p)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Jet(base_point={self.base_point!r}, coeffs={self.coeffs.tolist()!r})"


def _value_of(x) -> float:
    if isinstance(x, (Jet, Jet2)):
        return x.value
    return float(x)


def _horner(taylor: np.ndarray, delta):
    """Sum ``taylor[k] * delta**k`` with ``delta`` a nilpotent jet-like object."""
    out = delta * 0.0 + taylor[-1]
    for t in taylor[-2::-1]:
        out = out * delta + t
    return out


def _check_pair(x: Jet, y: Jet) -> None:
    if x.base_point != y.base_point:
        raise ContractViolation(f"jets at different base points {x.base_point} and {y.base_point}")
    if x.coeffs.size != y.coeffs.size:
        raise ContractViolation(f"jets of different orders {x.order} and {y.order}")


def jet_add(x: Jet, y: Jet) -> Jet:
    _check_pair(x, y)
    return Jet._wrap(x.base_point, x.coeffs + y.coeffs)


def jet_mul(x: Jet, y: Jet) -> Jet:
    """Leibniz rule, done as a Cauchy product of Taylor coefficients."""
    _check_pair(x, y)
    n = x.coeffs.size
    f = _factorials(n - 1)
    c = np.convolve(x.coeffs / f, y.coeffs / f)[:n] * f
    return Jet._wrap(x.base_point, c)


def jet_div(x: Jet, y: Jet) -> Jet:
    _check_pair(x, y)
    a, b = x.taylor(), y.taylor()
    if b[0] == 0.0:
        raise SingularPointError(f"division by a jet vanishing at {y.base_point}")
    q = np.zeros_like(a)
    for k in range(a.size):
        q[k] = (a[k] - np.dot(b[1 : k + 1], q[k - 1 :: -1][:k])) / b[0]
    return Jet.from_taylor(x.base_point, q)


def jet_shift_derivative(x: Jet) -> Jet:
    """Jet of the derivative function; the order drops by one."""
    if x.order < 1:
        raise ContractViolation("cannot differentiate an order-0 jet")
    return Jet._wrap(x.base_point, x.coeffs[1:], checked=True)


def jet_integrate(x: Jet, value: float) -> Jet:
    """Jet of the antiderivative whose value at the base point is ``value``."""
    return Jet(x.base_point, np.concatenate(([value], x.coeffs)))


def jet_elementary(fn: str, x: Jet, p: float | None = None) -> Jet:
    """Apply ``sin``, ``cos``, ``exp``, ``log``, ``sqrt`` or ``pow`` (constant exponent ``p``)."""
    t = x.taylor()
    n = x.order
    v = t[0]
    y = np.zeros(n + 1)
    if fn == "exp":
        y[0] = math.exp(v)
        for k in range(1, n + 1):
            j = np.arange(1, k + 1)
            y[k] = np.dot(j * t[1 : k + 1], y[k - 1 :: -1][:k]) / k
    elif fn == "log":
        if v <= 0:
            raise SingularPointError(f"log of non-positive value {v}")
        y[0] = math.log(v)
        for k in range(1, n + 1):
            j = np.arange(1, k)
            y[k] = (t[k] - np.dot(j * y[1:k], t[k - 1 : 0 : -1]) / k) / v
    elif fn in ("sin", "cos"):
        s = np.zeros(n + 1)
        c = np.zeros(n + 1)
        s[0], c[0] = math.sin(v), math.cos(v)
        for k in range(1, n + 1):
            jt = np.arange(1, k + 1) * t[1 : k + 1]
            s[k] = np.dot(jt, c[k - 1 :: -1][:k]) / k
            c[k] = -np.dot(jt, s[k - 1 :: -1][:k]) / k
        y = s if fn == "sin" else c
    elif fn == "sqrt":
        if v < 0 or (v == 0 and n > 0):
            raise SingularPointError(f"sqrt is not differentiable at {v}")
        return jet_elementary("pow", x, 0.5) if v > 0 else Jet.constant(0.0, x.base_point, 0)
    elif fn == "pow":
        if p is None:
            raise ContractViolation("pow needs a constant exponent")
        p = float(p)
        if p.is_integer():
            return _integer_power(x, int(p))
        if v <= 0:
            raise SingularPointError(f"non-integer power {p} of non-positive value {v}")
        y[0] = v**p
        for k in range(1, n + 1):
            j = np.arange(1, k + 1)
            y[k] = np.dot((p * j - (k - j)) * t[1 : k + 1], y[k - 1 :: -1][:k]) / (k * v)
    else:
        raise ContractViolation(f"unknown elementary function {fn!r}")
    return Jet.from_taylor(x.base_point, y)


def _integer_power(x: Jet, n: int) -> Jet:
    if n < 0:
        if x.value == 0:
            raise SingularPointError(f"negative power {n} of a jet vanishing at {x.base_point}")
        return 1.0 / _integer_power(x, -n)
    result = Jet.constant(1.0, x.base_point, x.order)
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def elementary(fn: str, x, p: float | None = None):
    """Dispatch an elementary function over floats, :class:`Jet` and :class:`Jet2`."""
    if isinstance(x, Jet):
        return jet_elementary(fn, x, p)
    if isinstance(x, Jet2):
        return x.apply(fn, p)
    v = float(x)
    try:
        if fn == "pow":
            if not float(p).is_integer() and v <= 0:
                raise SingularPointError(f"non-integer power {p} of non-positive value {v}")
            return v**p
        if fn == "log" and v <= 0:
            raise SingularPointError(f"log of non-positive value {v}")
        if fn == "sqrt" and v < 0:
            raise SingularPointError(f"sqrt of negative value {v}")
        return getattr(math, fn)(v)
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise SingularPointError(f"{fn}({v}) failed: {exc}") from exc


def truncate_common(*jets: Jet) -> list[Jet]:
    """Truncate jets to their smallest common order."""
    n = min(j.order for j in jets)
    return [j.truncate(n) for j in jets]


@functools.lru_cache(maxsize=16)
def _above_diagonal(n: int) -> np.ndarray:
    i, j = np.indices((n + 1, n + 1))
    mask = i + j > n
    mask.flags.writeable = False
    return mask


def _taylor_powers(t: np.ndarray, count: int) -> list[np.ndarray]:
    """Truncated Taylor coefficients of ``t**0 .. t**(count - 1)``."""
    m = t.size
    one = np.zeros(m)
    one[0] = 1.0
    out = [one]
    for _ in range(count - 1):
        out.append(np.convolve(out[-1], t)[:m])
    return out


class Jet2:
    """Bivariate Taylor expansion in ``(dz, dr)`` about ``(z0, r0)``, total degree <= order."""

    __slots__ = ("z0", "r0", "order", "c")
    __array_ufunc__ = None

    def __init__(self, z0: float, r0: float, c: np.ndarray):
        c = np.array(c, dtype=float)
        n = c.shape[0] - 1
        if c.shape != (n + 1, n + 1):
            raise ContractViolation("Jet2 coefficients must be a square array")
        c[_above_diagonal(n)] = 0.0
        if not np.isfinite(c).all():
            raise SingularPointError(f"non-finite bivariate expansion at ({z0}, {r0})")
        self.z0, self.r0, self.order, self.c = float(z0), float(r0), n, c

    @classmethod
    def constant(cls, value: float, z0: float, r0: float, order: int) -> Jet2:
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        return cls(z0, r0, c)

    @classmethod
    def variables(cls, z0: float, r0: float, order: int) -> tuple[Jet2, Jet2]:
        """The coordinate functions ``z`` and ``r`` expanded about ``(z0, r0)``."""
        zc = np.zeros((order + 1, order + 1))
        rc = np.zeros((order + 1, order + 1))
        zc[0, 0], rc[0, 0] = z0, r0
        if order >= 1:
            zc[1, 0] = rc[0, 1] = 1.0
        return cls(z0, r0, zc), cls(z0, r0, rc)

    @property
    def value(self) -> float:
        return float(self.c[0, 0])

    def partial(self, i: int, j: int) -> float:
        """Raw mixed partial derivative d^i/dz^i d^j/dr^j at the base point."""
        return float(self.c[i, j]) * math.factorial(i) * math.factorial(j)

    def truncate(self, order: int) -> Jet2:
        return Jet2(self.z0, self.r0, self.c[: order + 1, : order + 1])

    def dz(self) -> Jet2:
        n = self.order
        out = np.zeros((n, n))
        out[:, :] = self.c[1:, :n] * np.arange(1, n + 1)[:, None]
        return Jet2(self.z0, self.r0, out)

    def dr(self) -> Jet2:
        n = self.order
        out = self.c[:n, 1:] * np.arange(1, n + 1)[None, :]
        return Jet2(self.z0, self.r0, out)

    def _like(self, other: Jet2) -> None:
        if (self.z0, self.r0, self.order) != (other.z0, other.r0, other.order):
            raise ContractViolation("bivariate expansions at different points or orders")

    def __neg__(self):
        return Jet2(self.z0, self.r0, -self.c)

    def __add__(self, other):
        if isinstance(other, Jet2):
            self._like(other)
            return Jet2(self.z0, self.r0, self.c + other.c)
        if isinstance(other, Real):
            c = self.c.copy()
            c[0, 0] += other
            return Jet2(self.z0, self.r0, c)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (Jet2, Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Real):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Real):
            return Jet2(self.z0, self.r0, self.c * float(other))
        if not isinstance(other, Jet2):
            return NotImplemented
        self._like(other)
        n = self.order
        out = np.zeros_like(self.c)
        for i, j in zip(*np.nonzero(self.c)):
            out[i:, j:] += self.c[i, j] * other.c[: n + 1 - i, : n + 1 - j]
        return Jet2(self.z0, self.r0, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        if isinstance(other, Real):
            if other == 0:
                raise SingularPointError("division of expansion by zero scalar")
            return Jet2(self.z0, self.r0, self.c / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Real):
            return self.reciprocal() * float(other)
        return NotImplemented

    def __pow__(self, p):
        if isinstance(p, Real):
            return self.apply("pow", p)
        return NotImplemented

    def reciprocal(self) -> Jet2:
        v = Jet.variable(self.value, self.order)
        return self._compose_univariate(jet_div(Jet.constant(1.0, v.base_point, self.order), v))

    def apply(self, fn: str, p: float | None = None) -> Jet2:
        return self._compose_univariate(jet_elementary(fn, Jet.variable(self.value, self.order), p))

    def _compose_univariate(self, outer: Jet) -> Jet2:
        return _horner(outer.taylor(), self - self.value)

    def along(self, zj: Jet, rj: Jet) -> Jet:
        """Restrict the expansion to the curve ``(zj, rj)`` given as univariate jets."""
        _check_pair(zj, rj)
        tz = (zj - self.z0).taylor()
        tr = (rj - self.r0).taylor()
        n = self.order
        pz, pr = _taylor_powers(tz, n + 1), _taylor_powers(tr, n + 1)
        out = np.zeros(tz.size)
        for i, j in zip(*np.nonzero(self.c)):
            out += self.c[i, j] * np.convolve(pz[i], pr[j])[: tz.size]
        return Jet.from_taylor(zj.base_point, out)

    def __repr__(self) -> str:
        return f"Jet2(z0={self.z0!r}, r0={self.r0!r}, order={self.order})"


JetFunction = Callable[[float, int], Jet]
"""A function given by its jet at any point: ``f(z0, order) -> Jet``."""


def lift(f: JetFunction, x, derivative: int = 0):
    """Evaluate ``f^(derivative)`` on a float, :class:`Jet` or :class:`Jet2` argument."""
    if isinstance(x, (Jet, Jet2)):
        j = f(x.value, x.order + derivative).derivative(derivative)
        return j.compose(x)
    return f(float(x), derivative).coeffs[derivative]
