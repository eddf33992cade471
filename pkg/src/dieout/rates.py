"""State-dependent per-person infectiousness functions.

A rate profile maps the total number of active cases n >= 1 to a
nonnegative per-person rate.  Every profile is bounded and has a limit
as n grows without bound; both facts are load-bearing for the threshold
classifiers and the birth-death solvers, so the constructors enforce
them.

Profiles evaluate in three arithmetics:

* ``value(n)``        machine floats, for the stochastic simulator;
* ``value_exact(n)``  ``Fraction``, for the exact-rational kernel;
* ``value_mpf(n)``    mpmath floats at the caller's working precision.

Parameters are parsed exactly from decimal (or p/q) strings, so the
exact views carry no representation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Callable

import mpmath


class ProfileError(ValueError):
    """Invalid profile specification or evaluation request."""


class ExactnessError(TypeError):
    """Raised when an irrational-valued profile is used exactly."""


def parse_parameter(text: str) -> Fraction:
    """Parse a decimal or p/q string into an exact Fraction."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return Fraction(Decimal(text))
    except (InvalidOperation, ValueError):
        raise ProfileError(f"cannot parse parameter {text!r}") from None


def _mpf(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


def _check_n(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ProfileError("profiles are defined for n >= 1 only")
    return n


class RateProfile:
    """Common interface for the concrete profile families below."""

    #: True when every value, the limit, and the supremum are rational.
    is_rational: bool = True

    def value(self, n: int) -> float:
        return float(self.value_exact(n))

    def value_exact(self, n: int) -> Fraction:
        raise NotImplementedError

    def value_mpf(self, n: int) -> mpmath.mpf:
        return _mpf(self.value_exact(n))

    @property
    def limit(self) -> float:
        return float(self.limit_exact)

    @property
    def limit_exact(self) -> Fraction:
        raise NotImplementedError

    @property
    def supremum(self) -> float:
        raise NotImplementedError

    def sup_from(self, n0: int) -> float:
        """Upper bound on value(n) over all n >= n0."""
        raise NotImplementedError

    def sup_from_exact(self, n0: int) -> Fraction:
        raise NotImplementedError

    def first_zero_at_or_after(self, n0: int) -> int | None:
        """Smallest n >= n0 with value(n) == 0, or None."""
        raise NotImplementedError

    def as_float_fn(self) -> Callable[[int], float]:
        """Fast unchecked float evaluator for simulation hot loops."""
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.spec_string()


@dataclass(frozen=True)
class Constant(RateProfile):
    c: Fraction

    def __post_init__(self):
        if self.c < 0:
            raise ProfileError("constant rate must be nonnegative")

    def value_exact(self, n):
        _check_n(n)
        return self.c

    @property
    def limit_exact(self):
        return self.c

    @property
    def supremum(self):
        return float(self.c)

    def sup_from(self, n0):
        return float(self.c)

    def sup_from_exact(self, n0):
        return self.c

    def first_zero_at_or_after(self, n0):
        return max(1, int(n0)) if self.c == 0 else None

    def as_float_fn(self):
        c = float(self.c)
        return lambda n: c

    def spec_string(self):
        return f"const:{self.c}"


@dataclass(frozen=True)
class Step(RateProfile):
    """``high`` for n <= n_switch, ``low`` beyond; boundary on the high side."""

    high: Fraction
    low: Fraction
    n_switch: int

    def __post_init__(self):
        if self.high < 0 or self.low < 0:
            raise ProfileError("step levels must be nonnegative")
        if self.n_switch < 1:
            raise ProfileError("switch point must be a positive integer")

    def value_exact(self, n):
        return self.high if _check_n(n) <= self.n_switch else self.low

    @property
    def limit_exact(self):
        return self.low

    @property
    def supremum(self):
        return float(max(self.high, self.low))

    def sup_from(self, n0):
        return float(self.sup_from_exact(n0))

    def sup_from_exact(self, n0):
        return max(self.high, self.low) if n0 <= self.n_switch else self.low

    def first_zero_at_or_after(self, n0):
        n0 = max(1, int(n0))
        if self.high == 0 and n0 <= self.n_switch:
            return n0
        if self.low == 0:
            return max(n0, self.n_switch + 1)
        return None

    def as_float_fn(self):
        hi, lo, ns = float(self.high), float(self.low), self.n_switch
        return lambda n: hi if n <= ns else lo

    def spec_string(self):
        return f"step:{self.high},{self.low},{self.n_switch}"


@dataclass(frozen=True)
class Harmonic(RateProfile):
    """k / n: per-person rate inversely proportional to epidemic size."""

    k: Fraction

    def __post_init__(self):
        if self.k < 0:
            raise ProfileError("harmonic coefficient must be nonnegative")

    def value_exact(self, n):
        return self.k / _check_n(n)

    @property
    def limit_exact(self):
        return Fraction(0)

    @property
    def supremum(self):
        return float(self.k)  # attained at n = 1

    def sup_from(self, n0):
        return float(self.k) / max(1, int(n0))

    def sup_from_exact(self, n0):
        return self.k / max(1, int(n0))

    def first_zero_at_or_after(self, n0):
        return max(1, int(n0)) if self.k == 0 else None

    def as_float_fn(self):
        k = float(self.k)
        return lambda n: k / n

    def spec_string(self):
        return f"harmonic:{self.k}"


@dataclass(frozen=True)
class LogOverN(RateProfile):
    """k * ln(1 + n) / n, a slower-vanishing cousin of the harmonic family.

    Values are irrational, so this family only supports float and
    mpmath evaluation; the exact-rational kernel rejects it.
    """

    k: Fraction
    is_rational = False

    def __post_init__(self):
        if self.k < 0:
            raise ProfileError("coefficient must be nonnegative")

    def value(self, n):
        return float(self.k) * math.log1p(_check_n(n)) / n

    def value_exact(self, n):
        raise ExactnessError("log-over-n profiles have irrational values")

    def value_mpf(self, n):
        n = _check_n(n)
        return _mpf(self.k) * mpmath.log(n + 1) / n

    @property
    def limit_exact(self):
        return Fraction(0)  # ln(1+n)/n -> 0

    @property
    def supremum(self):
        return float(self.k) * math.log(2.0)  # ln(1+n)/n decreases on n >= 1

    def sup_from(self, n0):
        n0 = max(1, int(n0))
        return float(self.k) * math.log1p(n0) / n0

    def sup_from_exact(self, n0):
        raise ExactnessError("log-over-n profiles have irrational values")

    def first_zero_at_or_after(self, n0):
        return max(1, int(n0)) if self.k == 0 else None

    def as_float_fn(self):
        k = float(self.k)
        return lambda n: k * math.log1p(n) / n

    def spec_string(self):
        return f"logn:{self.k}"


@dataclass(frozen=True)
class Table(RateProfile):
    """Explicit n -> value pairs with a declared constant tail.

    Any n not listed evaluates to the tail constant, which also serves
    as the limit; a table without a declared tail is rejected because
    the asymptotic limit would be undefined.
    """

    entries: tuple[tuple[int, Fraction], ...]
    tail: Fraction

    def __post_init__(self):
        if self.tail < 0:
            raise ProfileError("tail constant must be nonnegative")
        last = 0
        for n, v in self.entries:
            if n <= last:
                raise ProfileError("table rows must have strictly increasing n")
            if v < 0:
                raise ProfileError(f"negative table value at n={n}")
            last = n
        object.__setattr__(self, "_map", dict(self.entries))

    def value_exact(self, n):
        return self._map.get(_check_n(n), self.tail)

    @property
    def limit_exact(self):
        return self.tail

    @property
    def supremum(self):
        return float(max([self.tail, *(v for _, v in self.entries)]))

    def sup_from(self, n0):
        return float(self.sup_from_exact(n0))

    def sup_from_exact(self, n0):
        n0 = max(1, int(n0))
        vals = [v for n, v in self.entries if n >= n0]
        return max([self.tail, *vals])

    def first_zero_at_or_after(self, n0):
        n0 = max(1, int(n0))
        zero_rows = sorted(n for n, v in self.entries if v == 0 and n >= n0)
        if self.tail == 0:
            # First unlisted n >= n0 evaluates to the zero tail.
            listed = {n for n, _ in self.entries}
            cand = n0
            while cand in listed and self._map[cand] != 0:
                cand += 1
            if zero_rows:
                cand = min(cand, zero_rows[0])
            return cand
        return zero_rows[0] if zero_rows else None

    def as_float_fn(self):
        table = {n: float(v) for n, v in self.entries}
        tail = float(self.tail)
        return lambda n: table.get(n, tail)

    def spec_string(self):
        rows = ";".join(f"{n}={v}" for n, v in self.entries)
        return f"table:[{rows}],tail={self.tail}"


@dataclass(frozen=True)
class Scaled(RateProfile):
    """d * base(n) with an exact scalar coefficient."""

    coeff: Fraction
    base: RateProfile

    def __post_init__(self):
        if self.coeff < 0:
            raise ProfileError("scale coefficient must be nonnegative")
        object.__setattr__(self, "is_rational", self.base.is_rational)

    def value(self, n):
        return float(self.coeff) * self.base.value(n)

    def value_exact(self, n):
        return self.coeff * self.base.value_exact(n)

    def value_mpf(self, n):
        return _mpf(self.coeff) * self.base.value_mpf(n)

    @property
    def limit_exact(self):
        return self.coeff * self.base.limit_exact

    @property
    def supremum(self):
        return float(self.coeff) * self.base.supremum

    def sup_from(self, n0):
        return float(self.coeff) * self.base.sup_from(n0)

    def sup_from_exact(self, n0):
        return self.coeff * self.base.sup_from_exact(n0)

    def first_zero_at_or_after(self, n0):
        if self.coeff == 0:
            return max(1, int(n0))
        return self.base.first_zero_at_or_after(n0)

    def as_float_fn(self):
        d = float(self.coeff)
        f = self.base.as_float_fn()
        return lambda n: d * f(n)

    def spec_string(self):
        return f"{self.coeff}*({self.base.spec_string()})"


@dataclass(frozen=True)
class Combined(RateProfile):
    """Sum of two profiles; the supremum bound is additive (conservative)."""

    first: RateProfile
    second: RateProfile

    def __post_init__(self):
        object.__setattr__(
            self, "is_rational",
            self.first.is_rational and self.second.is_rational)

    def value(self, n):
        return self.first.value(n) + self.second.value(n)

    def value_exact(self, n):
        return self.first.value_exact(n) + self.second.value_exact(n)

    def value_mpf(self, n):
        return self.first.value_mpf(n) + self.second.value_mpf(n)

    @property
    def limit_exact(self):
        return self.first.limit_exact + self.second.limit_exact

    @property
    def supremum(self):
        return self.first.supremum + self.second.supremum

    def sup_from(self, n0):
        return self.first.sup_from(n0) + self.second.sup_from(n0)

    def sup_from_exact(self, n0):
        return self.first.sup_from_exact(n0) + self.second.sup_from_exact(n0)

    def first_zero_at_or_after(self, n0):
        # The sum vanishes only where both parts do.
        n = max(1, int(n0))
        while True:
            a = self.first.first_zero_at_or_after(n)
            if a is None:
                return None
            b = self.second.first_zero_at_or_after(a)
            if b is None:
                return None
            if b == a:
                return a
            n = b

    def as_float_fn(self):
        f, g = self.first.as_float_fn(), self.second.as_float_fn()
        return lambda n: f(n) + g(n)

    def spec_string(self):
        return f"({self.first.spec_string()})+({self.second.spec_string()})"


def parse_table_file(path, declared_tail: Fraction | None = None) -> Table:
    """Read a table profile from lines ``n value`` plus a ``tail=c`` footer.

    A tail declared in the profile spec string overrides the footer.
    """
    entries: list[tuple[int, Fraction]] = []
    tail = declared_tail
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("tail="):
                footer = parse_parameter(line[len("tail="):])
                if declared_tail is None:
                    tail = footer
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ProfileError(
                    f"{path}:{lineno}: expected 'n value', got {raw!r}")
            try:
                n = int(fields[0])
            except ValueError:
                raise ProfileError(
                    f"{path}:{lineno}: n must be an integer") from None
            entries.append((n, parse_parameter(fields[1])))
    if tail is None:
        raise ProfileError(
            f"table {path} declares no tail constant; the asymptotic limit "
            "would be undefined")
    return Table(tuple(entries), tail)


def parse_profile(text: str, base_dir=None) -> RateProfile:
    """Parse a profile spec string.

    Grammar::

        const:c | step:high,low,n_switch | harmonic:k | logn:k
        | table:path[,tail=c]

    Numeric parameters are decimal or p/q strings, parsed exactly.
    Table paths resolve against ``base_dir`` when given.
    """
    text = text.strip()
    family, sep, rest = text.partition(":")
    if not sep:
        raise ProfileError(f"profile spec {text!r} is missing ':'")
    if family == "const":
        return Constant(parse_parameter(rest))
    if family == "step":
        parts = rest.split(",")
        if len(parts) != 3:
            raise ProfileError("step takes exactly high,low,n_switch")
        try:
            n_switch = int(parts[2])
        except ValueError:
            raise ProfileError("step switch point must be an integer") from None
        return Step(parse_parameter(parts[0]), parse_parameter(parts[1]),
                    n_switch)
    if family == "harmonic":
        return Harmonic(parse_parameter(rest))
    if family == "logn":
        return LogOverN(parse_parameter(rest))
    if family == "table":
        path_part, _, tail_part = rest.partition(",")
        declared = None
        if tail_part:
            if not tail_part.startswith("tail="):
                raise ProfileError(
                    f"unexpected table option {tail_part!r}; use tail=c")
            declared = parse_parameter(tail_part[len("tail="):])
        path = Path(path_part)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return parse_table_file(path, declared)
    raise ProfileError(f"unknown profile family {family!r}")


def coerce_coefficient(d) -> Fraction:
    """Embed a coefficient exactly: Fractions, ints, decimal strings, and
    floats (which are dyadic rationals) all convert without error."""
    if isinstance(d, Fraction):
        return d
    if isinstance(d, int):
        return Fraction(d)
    if isinstance(d, str):
        return parse_parameter(d)
    if isinstance(d, float):
        return Fraction(d)
    raise ProfileError(f"cannot coerce coefficient of type {type(d).__name__}")


def gamma_from_graph(beta: RateProfile, beta_int: RateProfile,
                     d) -> RateProfile:
    """Aggregate rate coefficient d * beta(n) + beta_int(n).

    With d the maximum (minimum) weighted in-degree this is the birth
    coefficient of the one-dimensional chain that bounds the network
    epidemic's total from above (below).
    """
    d = coerce_coefficient(d)
    if d < 0:
        raise ProfileError("degree coefficient must be nonnegative")
    if isinstance(beta, Constant) and isinstance(beta_int, Constant):
        return Constant(d * beta.c + beta_int.c)
    return Combined(Scaled(d, beta), beta_int)
