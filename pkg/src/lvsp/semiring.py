"""Scalar semirings used as the ground set of all tensor values.

Six semirings ship with the package and are looked up by name through
:func:`make_semiring`:

    boolean             ({False, True}, or, and, False, True)
    counting            (naturals, +, *, 0, 1)
    probability         (non-negative reals, +, *, 0, 1)
    viterbi             ([0, 1], max, *, 0, 1)
    log                 (reals and -inf, log-sum-exp, +, -inf, 0)
    viterbi-derivation  (scored rule sequences, best-of, concatenate, ...)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

from .errors import ConfigurationError, UnsupportedOperation

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Semiring:
    name: str
    add: Callable[[Any, Any], Any]
    mul: Callable[[Any, Any], Any]
    zero: Any
    one: Any
    is_commutative: bool
    is_idempotent: bool
    is_omega_continuous: bool
    approx_eq: Callable[[Any, Any, float], bool]
    # natural order test; None when the order is not decidable
    leq: Callable[[Any, Any], bool] | None = None
    # text I/O for grammar files and reports
    parse_token: Callable[[str], Any] = field(default=str, repr=False)
    format_value: Callable[[Any], str] = field(default=str, repr=False)
    to_json: Callable[[Any], Any] = field(default=lambda v: v, repr=False)
    from_json: Callable[[Any], Any] = field(default=lambda v: v, repr=False)
    # turns a parsed weight entry into the value carried by a specific rule
    annotate: Callable[[Any, str], Any] = field(default=lambda v, rule_id: v, repr=False)
    is_exact: bool = True

    def __repr__(self) -> str:
        return f"Semiring({self.name!r})"

    def sum(self, values) -> Any:
        total = self.zero
        for v in values:
            total = self.add(total, v)
        return total

    def prod(self, values) -> Any:
        total = self.one
        for v in values:
            total = self.mul(total, v)
        return total

    def equal(self, x, y, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        """Convergence-style equality: exact for idempotent semirings."""
        if self.is_idempotent or self.is_exact:
            return x == y
        return self.approx_eq(x, y, tolerance)


def natural_leq(s: Semiring, x, y) -> bool:
    """Whether ``x`` is below ``y`` in the natural order (some z has x + z = y)."""
    if not s.is_omega_continuous or s.leq is None:
        raise UnsupportedOperation(f"semiring {s.name!r} has no decidable natural order")
    return s.leq(x, y)


# -- real-valued helpers -----------------------------------------------------

def _real_close(x: float, y: float, tol: float) -> bool:
    if x == y:
        return True
    if math.isinf(x) or math.isinf(y):
        return False
    return abs(x - y) <= tol


def _format_real(x: float) -> str:
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "inf"
    return repr(float(x))


def _parse_real(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"expected a real number, got {token!r}") from None


def _parse_nonneg_real(token: str) -> float:
    v = _parse_real(token)
    if not v >= 0:
        raise ValueError(f"expected a non-negative real, got {token!r}")
    return v


def _parse_unit_real(token: str) -> float:
    v = _parse_real(token)
    if not 0 <= v <= 1:
        raise ValueError(f"expected a real in [0, 1], got {token!r}")
    return v


def _json_real(x: float):
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def _real_from_json(v) -> float:
    return float(v)


def log_add(x: float, y: float) -> float:
    if x == -math.inf:
        return y
    if y == -math.inf:
        return x
    hi, lo = (x, y) if x >= y else (y, x)
    return hi + math.log1p(math.exp(lo - hi))


def log_mul(x: float, y: float) -> float:
    if x == -math.inf or y == -math.inf:
        return -math.inf
    return x + y


# -- boolean / counting --------------------------------------------------------

def _parse_bool(token: str) -> bool:
    if token == "T":
        return True
    if token == "F":
        return False
    raise ValueError(f"expected T or F, got {token!r}")


def _parse_natural(token: str) -> int:
    if not token.isdigit():
        raise ValueError(f"expected a non-negative integer, got {token!r}")
    return int(token)


# -- viterbi-derivation --------------------------------------------------------

class Scored(NamedTuple):
    """Best-derivation value: a score in [0, 1] and the rule sequence achieving it."""

    score: float
    rules: tuple[str, ...]

    def __str__(self) -> str:
        if self.score == 0.0:
            return "0"
        return f"{self.score!r}<{' '.join(self.rules)}>"


SCORED_ZERO = Scored(0.0, ())
SCORED_ONE = Scored(1.0, ())


def _scored_key(v: Scored):
    # higher score wins; ties go to the shorter, then lexicographically smaller
    # sequence.  Ordering by length first keeps concatenation monotone on both
    # sides, which is what makes multiplication distribute over the best-of sum.
    return (-v.score, len(v.rules), v.rules)


def scored_add(x: Scored, y: Scored) -> Scored:
    return x if _scored_key(x) <= _scored_key(y) else y


def scored_mul(x: Scored, y: Scored) -> Scored:
    score = x.score * y.score
    if score == 0.0:
        return SCORED_ZERO
    return Scored(score, x.rules + y.rules)


def _scored_close(x: Scored, y: Scored, tol: float) -> bool:
    return abs(x.score - y.score) <= tol and x.rules == y.rules


def _scored_leq(x: Scored, y: Scored) -> bool:
    return scored_add(x, y) == y


def _scored_annotate(v, rule_id: str) -> Scored:
    if isinstance(v, Scored):
        if v.rules or v.score == 0:
            return v
        v = v.score
    if v == 0:
        return SCORED_ZERO
    return Scored(float(v), (rule_id,))


def _scored_parse(token: str) -> Scored:
    # a bare score; the grammar reader attaches the rule id via annotate
    v = _parse_unit_real(token)
    return SCORED_ZERO if v == 0 else Scored(v, ())


def _scored_to_json(v: Scored):
    return {"score": v.score, "rules": list(v.rules)}


def _scored_from_json(obj) -> Scored:
    score = float(obj["score"])
    return SCORED_ZERO if score == 0 else Scored(score, tuple(obj["rules"]))


def _make(name: str) -> Semiring:
    if name == "boolean":
        return Semiring(
            name, add=lambda x, y: x or y, mul=lambda x, y: x and y,
            zero=False, one=True,
            is_commutative=True, is_idempotent=True, is_omega_continuous=True,
            approx_eq=lambda x, y, tol: x == y,
            leq=lambda x, y: (not x) or y,
            parse_token=_parse_bool,
            format_value=lambda v: "T" if v else "F",
        )
    if name == "counting":
        return Semiring(
            name, add=lambda x, y: x + y, mul=lambda x, y: x * y,
            zero=0, one=1,
            is_commutative=True, is_idempotent=False, is_omega_continuous=True,
            approx_eq=lambda x, y, tol: x == y,
            leq=lambda x, y: x <= y,
            parse_token=_parse_natural,
            format_value=str,
            from_json=int,
        )
    if name == "probability":
        return Semiring(
            name, add=lambda x, y: x + y, mul=lambda x, y: x * y,
            zero=0.0, one=1.0,
            is_commutative=True, is_idempotent=False, is_omega_continuous=True,
            approx_eq=_real_close,
            leq=lambda x, y: x <= y,
            parse_token=_parse_nonneg_real,
            format_value=_format_real,
            to_json=_json_real, from_json=_real_from_json,
            is_exact=False,
        )
    if name == "viterbi":
        return Semiring(
            name, add=max, mul=lambda x, y: x * y,
            zero=0.0, one=1.0,
            is_commutative=True, is_idempotent=True, is_omega_continuous=True,
            approx_eq=_real_close,
            leq=lambda x, y: x <= y,
            parse_token=_parse_unit_real,
            format_value=_format_real,
            to_json=_json_real, from_json=_real_from_json,
            is_exact=False,
        )
    if name == "log":
        return Semiring(
            name, add=log_add, mul=log_mul,
            zero=-math.inf, one=0.0,
            is_commutative=True, is_idempotent=False, is_omega_continuous=True,
            approx_eq=_real_close,
            leq=lambda x, y: x <= y,
            parse_token=_parse_real,
            format_value=_format_real,
            to_json=_json_real, from_json=_real_from_json,
            is_exact=False,
        )
    if name == "viterbi-derivation":
        return Semiring(
            name, add=scored_add, mul=scored_mul,
            zero=SCORED_ZERO, one=SCORED_ONE,
            is_commutative=False, is_idempotent=True, is_omega_continuous=True,
            approx_eq=_scored_close,
            leq=_scored_leq,
            parse_token=_scored_parse,
            format_value=str,
            to_json=_scored_to_json, from_json=_scored_from_json,
            annotate=_scored_annotate,
            is_exact=False,
        )
    raise ConfigurationError(
        f"unknown semiring {name!r}; choose one of {', '.join(SEMIRING_NAMES)}"
    )


SEMIRING_NAMES = ("boolean", "counting", "probability", "viterbi", "log", "viterbi-derivation")

_CACHE: dict[str, Semiring] = {}


def make_semiring(name: str) -> Semiring:
    """Return the shared :class:`Semiring` for ``name``."""
    if name not in _CACHE:
        _CACHE[name] = _make(name)
    return _CACHE[name]
