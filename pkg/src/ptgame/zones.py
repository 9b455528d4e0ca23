"""Exact convex parametric zones and finite unions of them.

A zone constrains clocks and parameters with linear constraints of the form
``x ~ plt``, ``x - y ~ plt`` or ``plt ~ plt'``.  Every valuation implicitly
satisfies ``v >= 0`` for all clocks and parameters; those bounds are never
stored.  All arithmetic uses :class:`fractions.Fraction`, and emptiness and
projection are decided by Fourier-Motzkin elimination.

Internally a constraint is kept as ``sum(coef * var) + const OP 0`` with
``OP`` one of ``<=``, ``<``, ``==``, scaled to a canonical form so that
syntactically equal constraints compare equal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

LE, LT, EQ = "<=", "<", "=="
UPPER, LOWER = "upper", "lower"

_DELTA = "__delta"


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


# ---------------------------------------------------------------------------
# Linear terms


@dataclass(frozen=True)
class LinearTerm:
    """``const + sum(coef * var)``; zero coefficients are never stored."""

    terms: tuple = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def make(coeffs: Mapping[str, object] | None = None, const=0) -> "LinearTerm":
        items = []
        for var, coef in sorted((coeffs or {}).items()):
            coef = as_fraction(coef)
            if coef:
                items.append((var, coef))
        return LinearTerm(tuple(items), as_fraction(const))

    @staticmethod
    def var(name: str, coef=1) -> "LinearTerm":
        return LinearTerm.make({name: coef})

    @staticmethod
    def constant(value) -> "LinearTerm":
        return LinearTerm((), as_fraction(value))

    def coeffs(self) -> dict:
        return dict(self.terms)

    def coef(self, var: str) -> Fraction:
        for name, c in self.terms:
            if name == var:
                return c
        return Fraction(0)

    @property
    def variables(self) -> tuple:
        return tuple(name for name, _ in self.terms)

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        acc = dict(self.terms)
        for name, c in other.terms:
            acc[name] = acc.get(name, 0) + c
        return LinearTerm.make(acc, self.const + other.const)

    def __neg__(self) -> "LinearTerm":
        return LinearTerm(tuple((n, -c) for n, c in self.terms), -self.const)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def scale(self, k) -> "LinearTerm":
        k = as_fraction(k)
        return LinearTerm.make({n: c * k for n, c in self.terms}, self.const * k)

    def evaluate(self, valuation: Mapping[str, object]) -> Fraction:
        total = self.const
        for name, c in self.terms:
            if name not in valuation:
                raise KeyError(f"unvalued parameter {name!r}")
            total += c * as_fraction(valuation[name])
        return total

    def format(self) -> str:
        return _format_linear(self.terms, self.const)


def eval_term(t: LinearTerm, valuation: Mapping[str, object]) -> Fraction:
    """Value of a linear term under a valuation."""
    return t.evaluate(valuation)


def format_number(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _format_linear(terms: Sequence, const: Fraction) -> str:
    if terms and terms[0][1] < 0 and const > 0:
        head = format_number(const)
        rest = _format_linear(terms, Fraction(0))
        return f"{head} - {rest[1:]}" if rest.startswith("-") else f"{head} + {rest}"
    parts = []
    for name, c in terms:
        mag = abs(c)
        body = name if mag == 1 else f"{format_number(mag)}*{name}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    if const or not parts:
        if not parts:
            parts.append(format_number(const))
        else:
            parts.append(f"+ {format_number(const)}" if const > 0 else f"- {format_number(-const)}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Constraints


@dataclass(frozen=True)
class Constraint:
    """Canonical linear constraint ``sum(terms) + const op 0``."""

    terms: tuple
    const: Fraction
    op: str

    @staticmethod
    def make(coeffs: Mapping[str, object], const, op: str) -> "Constraint":
        items = []
        for var, coef in sorted(coeffs.items()):
            coef = as_fraction(coef)
            if coef:
                items.append((var, coef))
        const = as_fraction(const)
        if not items:
            return Constraint((), _truth_const(const, op), LE)
        lead = items[0][1]
        scale = lead if op == EQ else abs(lead)
        if scale != 1:
            items = [(v, c / scale) for v, c in items]
            const = const / scale
        return Constraint(tuple(items), const, op)

    @staticmethod
    def relation(lhs: LinearTerm, rel: str, rhs: LinearTerm) -> "Constraint":
        """Build ``lhs rel rhs`` for rel in ``< <= = == >= >``."""
        if rel in ("<", "<="):
            e, op = lhs - rhs, LT if rel == "<" else LE
        elif rel in (">", ">="):
            e, op = rhs - lhs, LT if rel == ">" else LE
        elif rel in ("=", "=="):
            e, op = lhs - rhs, EQ
        else:
            raise ValueError(f"unknown relation {rel!r}")
        return Constraint.make(dict(e.terms), e.const, op)

    @property
    def is_constant(self) -> bool:
        return not self.terms

    @property
    def is_false(self) -> bool:
        return not self.terms and self.const > 0

    @property
    def variables(self) -> tuple:
        return tuple(v for v, _ in self.terms)

    def coef(self, var: str) -> Fraction:
        for name, c in self.terms:
            if name == var:
                return c
        return Fraction(0)

    def lhs_value(self, valuation: Mapping[str, object]) -> Fraction:
        total = self.const
        for name, c in self.terms:
            if name not in valuation:
                raise KeyError(f"unvalued parameter {name!r}")
            total += c * as_fraction(valuation[name])
        return total

    def holds(self, valuation: Mapping[str, object]) -> bool:
        return _compare(self.lhs_value(valuation), self.op)

    def halves(self) -> tuple:
        """The constraint as a tuple of non-equality constraints."""
        if self.op != EQ:
            return (self,)
        d = dict(self.terms)
        return (Constraint.make(d, self.const, LE),
                Constraint.make({v: -c for v, c in d.items()}, -self.const, LE))

    def negation(self) -> "Constraint":
        """Complement of a non-equality constraint."""
        assert self.op != EQ
        d = {v: -c for v, c in self.terms}
        return Constraint.make(d, -self.const, LE if self.op == LT else LT)

    def with_op(self, op: str) -> "Constraint":
        return Constraint.make(dict(self.terms), self.const, op)

    def substitute_zero(self, names) -> "Constraint":
        d = {v: c for v, c in self.terms if v not in names}
        return Constraint.make(d, self.const, self.op)

    def format(self, clocks: Sequence[str] = (), params: Sequence[str] = ()) -> str:
        return format_constraint(self, clocks, params)

    def __str__(self) -> str:
        return self.format()


TRUE_CONSTRAINT = Constraint((), Fraction(0), LE)
FALSE_CONSTRAINT = Constraint((), Fraction(1), LE)


def _compare(value: Fraction, op: str) -> bool:
    if op == LE:
        return value <= 0
    if op == LT:
        return value < 0
    return value == 0


def _truth_const(const: Fraction, op: str) -> Fraction:
    return Fraction(0) if _compare(const, op) else Fraction(1)


_FLIP = {LE: ">=", LT: ">", EQ: "=="}


def format_constraint(c: Constraint, clocks: Sequence[str] = (), params: Sequence[str] = ()) -> str:
    """Render a constraint in the text syntax, isolating a clock or parameter on the left."""
    if c.is_constant:
        return "false" if c.is_false else "true"
    clock_set = set(clocks)
    clock_terms = [(v, a) for v, a in c.terms if v in clock_set]
    if not clock_terms:
        rank = {p: i for i, p in enumerate(params)}
        first = min(c.terms, key=lambda t: (rank.get(t[0], len(rank)), t[0]))
        clock_terms = [first]
    lead = clock_terms[0][1]
    if len(clock_terms) == 2 and clock_terms[0][1] == -clock_terms[1][1]:
        if lead < 0:
            clock_terms = [clock_terms[1], clock_terms[0]]
            lead = -lead
    scale = abs(lead)
    left_names = {v for v, _ in clock_terms}
    sign = 1 if lead > 0 else -1
    left = [(v, a * sign / scale) for v, a in clock_terms]
    rank = {v: i for i, v in enumerate(tuple(clocks) + tuple(params))}
    right = [(v, -a * sign / scale) for v, a in c.terms if v not in left_names]
    right.sort(key=lambda t: (rank.get(t[0], len(rank)), t[0]))
    rconst = -c.const * sign / scale
    op = c.op if sign > 0 else _FLIP[c.op]
    return f"{_format_linear(left, Fraction(0))} {op} {_format_linear(right, rconst)}"


# ---------------------------------------------------------------------------
# Fourier-Motzkin elimination


def _combine(p: Constraint, n: Constraint, var: str) -> Constraint:
    a, b = p.coef(var), -n.coef(var)
    acc = {}
    for name, c in p.terms:
        acc[name] = acc.get(name, 0) + c / a
    for name, c in n.terms:
        acc[name] = acc.get(name, 0) + c / b
    acc.pop(var, None)
    op = LT if LT in (p.op, n.op) else LE
    return Constraint.make(acc, p.const / a + n.const / b, op)


def _prune(rows: Iterable[Constraint]):
    """Drop duplicates and parallel weaker rows; return None on a contradiction."""
    ineq: dict = {}
    eqs: dict = {}
    for r in rows:
        if r.is_constant:
            if r.is_false:
                return None
            continue
        if r.op == EQ:
            old = eqs.get(r.terms)
            if old is not None and old.const != r.const:
                return None
            eqs[r.terms] = r
            continue
        old = ineq.get(r.terms)
        if old is None or r.const > old.const or (r.const == old.const and r.op == LT):
            ineq[r.terms] = r
    for terms, r in list(ineq.items()):
        # an equality on the same (or opposite) linear form decides the row
        e = eqs.get(terms)
        sign = 1
        if e is None:
            e = eqs.get(tuple((v, -a) for v, a in terms))
            sign = -1
        if e is None:
            continue
        if not _compare(r.const - sign * e.const, r.op):
            return None
        del ineq[terms]
    return list(eqs.values()) + list(ineq.values())


def _substitute_eq(rows, eq: Constraint, var: str):
    a = eq.coef(var)
    out = []
    for r in rows:
        k = r.coef(var)
        if not k:
            out.append(r)
            continue
        f = k / a
        acc = dict(r.terms)
        for name, c in eq.terms:
            acc[name] = acc.get(name, 0) - f * c
        acc.pop(var, None)
        out.append(Constraint.make(acc, r.const - f * eq.const, r.op))
    return out


def _eliminate_one(rows, var: str):
    for r in rows:
        if r.op == EQ and r.coef(var):
            rest = [q for q in rows if q is not r]
            return _prune(_substitute_eq(rest, r, var))
    pos, neg, keep = [], [], []
    for r in rows:
        c = r.coef(var)
        if c > 0:
            pos.append(r)
        elif c < 0:
            neg.append(r)
        else:
            keep.append(r)
    keep.extend(_combine(p, n, var) for p in pos for n in neg)
    return _prune(keep)


def _elimination_cost(rows, var: str) -> int:
    pos = neg = 0
    for r in rows:
        c = r.coef(var)
        if c:
            if r.op == EQ:
                return -1
            if c > 0:
                pos += 1
            else:
                neg += 1
    return pos * neg - pos - neg


def eliminate(rows: Iterable[Constraint], names: Iterable[str]):
    """Project the variables ``names`` out of ``rows``; None when infeasible."""
    current = _prune(rows)
    pending = set(names)
    while current is not None and pending:
        present = {v for r in current for v in r.variables} & pending
        if not present:
            break
        var = min(sorted(present), key=lambda v: _elimination_cost(current, v))
        current = _eliminate_one(current, var)
        pending.discard(var)
    return current


def _nonneg(name: str) -> Constraint:
    return Constraint(((name, Fraction(-1)),), Fraction(0), LE)


@lru_cache(maxsize=500_000)
def _feasible(rows: frozenset, variables: tuple) -> bool:
    all_rows = list(rows) + [_nonneg(v) for v in variables]
    return eliminate(all_rows, variables) is not None


def _implied_by_nonneg(r: Constraint) -> bool:
    if any(c > 0 for _, c in r.terms):
        return False
    return r.const < 0 or (r.const == 0 and r.op == LE)


# ---------------------------------------------------------------------------
# Zones


@dataclass(frozen=True)
class Space:
    """Ordered clock and parameter names of a zone."""

    clocks: tuple = ()
    params: tuple = ()

    @property
    def variables(self) -> tuple:
        return self.clocks + self.params

    def with_params(self, *names: str) -> "Space":
        return Space(self.clocks, self.params + tuple(n for n in names if n not in self.params))

    def with_clocks(self, *names: str) -> "Space":
        return Space(self.clocks + tuple(n for n in names if n not in self.clocks), self.params)

    def union(self, other: "Space") -> "Space":
        return self.with_clocks(*other.clocks).with_params(*other.params)


@dataclass(frozen=True)
class Zone:
    """A convex zone: a conjunction of constraints over ``space``.

    Equality and hashing are syntactic; use :func:`equals` for semantic equality.
    """

    space: Space
    constraints: tuple = ()

    @staticmethod
    def make(space: Space, constraints: Iterable[Constraint] = ()) -> "Zone":
        seen, out = set(), []
        for c in constraints:
            if c.is_constant:
                if c.is_false:
                    return Zone(space, (FALSE_CONSTRAINT,))
                continue
            if c not in seen:
                seen.add(c)
                out.append(c)
        return Zone(space, tuple(out))

    @staticmethod
    def top(space: Space) -> "Zone":
        return Zone(space, ())

    @staticmethod
    def bottom(space: Space) -> "Zone":
        return Zone(space, (FALSE_CONSTRAINT,))

    @property
    def clocks(self) -> tuple:
        return self.space.clocks

    @property
    def params(self) -> tuple:
        return self.space.params

    def __and__(self, other: "Zone") -> "Zone":
        return intersect(self, other)

    def conj(self, *constraints: Constraint) -> "Zone":
        return Zone.make(self.space, self.constraints + tuple(constraints))

    def is_empty(self) -> bool:
        return is_empty(self)

    def contains(self, valuation: Mapping[str, object]) -> bool:
        return satisfies(valuation, self)

    def extend(self, space: Space) -> "Zone":
        """The same constraints read over a larger space."""
        return Zone(space, self.constraints)

    def format(self) -> str:
        return format_zone(self)

    def __str__(self) -> str:
        return self.format()


def format_zone(z: Zone) -> str:
    if not z.constraints:
        return "true"
    if any(c.is_false for c in z.constraints):
        return "false"
    return " && ".join(format_constraint(c, z.clocks, z.params) for c in z.constraints)


def satisfies(valuation: Mapping[str, object], z: Zone) -> bool:
    """Membership of a point (clocks and parameters in one mapping)."""
    for name in z.space.variables:
        if name not in valuation:
            raise KeyError(f"unvalued variable {name!r}")
        if as_fraction(valuation[name]) < 0:
            return False
    return all(c.holds(valuation) for c in z.constraints)


def _check_space(a: Zone, b: Zone) -> None:
    if a.space != b.space:
        raise ValueError(f"dimension mismatch: {a.space} vs {b.space}")


def intersect(a: Zone, b: Zone) -> Zone:
    _check_space(a, b)
    return Zone.make(a.space, a.constraints + b.constraints)


def is_empty(z: Zone) -> bool:
    if any(c.is_false for c in z.constraints):
        return True
    return not _feasible(frozenset(z.constraints), z.space.variables)


def _project(z: Zone, names: Sequence[str], space: Space) -> Zone:
    rows = list(z.constraints) + [_nonneg(n) for n in names]
    out = eliminate(rows, names)
    if out is None:
        return Zone.bottom(space)
    return Zone.make(space, [r for r in out if not _implied_by_nonneg(r)])


def normalize(z: Zone) -> Zone:
    """Drop constraints implied by the remaining ones.

    Redundancy is judged against the other stored constraints plus the implicit
    parameter bounds; implicit clock bounds do not count, so a lone stored
    ``x >= 0`` survives.
    """
    if is_empty(z):
        return Zone.bottom(z.space)
    kept = list(z.constraints)
    param_rows = [_nonneg(p) for p in z.params]
    i = 0
    while i < len(kept):
        c = kept[i]
        others = kept[:i] + kept[i + 1:]
        base = others + param_rows
        implied = all(
            eliminate(base + [h.negation()], z.space.variables) is None for h in c.halves()
        )
        if implied:
            kept = others
        else:
            i += 1
    return Zone(z.space, tuple(_pair_equalities(kept)))


def _pair_equalities(rows: list) -> list:
    """Replace ``e <= 0`` together with ``-e <= 0`` by ``e == 0``."""
    out = list(rows)
    for i, r in enumerate(out):
        if r is None or r.op != LE:
            continue
        flipped = Constraint.make({v: -a for v, a in r.terms}, -r.const, LE)
        for j in range(i + 1, len(out)):
            if out[j] == flipped:
                out[i] = Constraint.make(dict(r.terms), r.const, EQ)
                out[j] = None
                break
    return [r for r in out if r is not None]


def _shift(z: Zone, sign: int) -> list:
    """Rows of ``z`` with each clock x replaced by ``x + sign * delta``."""
    clocks = set(z.clocks)
    rows = []
    for c in z.constraints:
        s = sum((a for v, a in c.terms if v in clocks), Fraction(0))
        if s:
            d = dict(c.terms)
            d[_DELTA] = sign * s
            rows.append(Constraint.make(d, c.const, c.op))
        else:
            rows.append(c)
    return rows


def time_elapse(z: Zone) -> Zone:
    """Future of ``z``: ``{v + d | v in z, d >= 0}``."""
    rows = _shift(z, -1) + [_nonneg(_DELTA)]
    # the predecessor v = v' - d must itself be non-negative
    rows += [Constraint.make({_DELTA: 1, x: -1}, 0, LE) for x in z.clocks]
    out = eliminate(rows, [_DELTA])
    if out is None:
        return Zone.bottom(z.space)
    return Zone.make(z.space, [r for r in out if not _implied_by_nonneg(r)])


def time_past(z: Zone) -> Zone:
    """Past of ``z``: ``{v | exists d >= 0, v + d in z}``."""
    rows = _shift(z, 1) + [_nonneg(_DELTA)]
    out = eliminate(rows, [_DELTA])
    if out is None:
        return Zone.bottom(z.space)
    return Zone.make(z.space, [r for r in out if not _implied_by_nonneg(r)])


def reset(z: Zone, names: Iterable[str]) -> Zone:
    names = [n for n in z.clocks if n in set(names)]
    if not names:
        return z
    projected = _project(z, names, z.space)
    return projected.conj(*(Constraint.make({n: 1}, 0, EQ) for n in names))


def unreset(z: Zone, names: Iterable[str]) -> Zone:
    """Valuations whose reset of ``names`` lands in ``z``."""
    names = set(names)
    if not names:
        return z
    return Zone.make(z.space, [c.substitute_zero(names) for c in z.constraints])


def project_params(z: Zone) -> Zone:
    """Existential projection onto the parameters; the result has no clocks."""
    return _project(z, list(z.clocks), Space((), z.params))


# ---------------------------------------------------------------------------
# Temporal constraints


def _single_clock(c: Constraint, clocks) -> str | None:
    names = [v for v in c.variables if v in clocks]
    return names[0] if len(names) == 1 else None


def _oriented(c: Constraint, clock: str, upper: bool) -> Constraint:
    """The half of ``c`` bounding ``clock`` from above (or below), as <= or <."""
    a = c.coef(clock)
    for h in c.halves():
        b = h.coef(clock)
        if (b > 0) == upper:
            return h
    raise AssertionError(f"{c} does not bound {clock} {'above' if upper else 'below'} ({a})")


def _temporal(z: Zone):
    """Split stored constraints into (upper, lower, other) as (clock, constraint) pairs."""
    clocks = set(z.clocks)
    upper, lower, other = [], [], []
    for c in z.constraints:
        x = _single_clock(c, clocks)
        if x is None:
            other.append(c)
            continue
        a = c.coef(x)
        if c.op == EQ:
            upper.append((x, c))
            lower.append((x, c))
        elif a > 0:
            upper.append((x, c))
        else:
            lower.append((x, c))
    return upper, lower, other


def _subsumes_nonneg(c: Constraint, x: str) -> bool:
    """Whether a stored lower bound on x implies x >= 0 for all parameter values."""
    h = _oriented(c, x, upper=False)
    scale = -h.coef(x)
    # h reads: x >= plt with plt = (rest + const) / scale
    plt = {v: a / scale for v, a in h.terms if v != x}
    return all(a >= 0 for a in plt.values()) and h.const / scale >= 0


def _implicit_lowers(z: Zone, lower) -> list:
    out = []
    for x in z.clocks:
        if not any(y == x and _subsumes_nonneg(c, x) for y, c in lower):
            out.append(x)
    return out


def classify(z: Zone):
    """(upper, lower, other) constraint lists; implicit ``x >= 0`` appear in lower."""
    upper, lower, other = _temporal(z)
    implicit = [_nonneg(x) for x in _implicit_lowers(z, lower)]
    return [c for _, c in upper], [c for _, c in lower] + implicit, other


def has_upper(z: Zone) -> bool:
    return bool(_temporal(z)[0])


def temporal_closure(z: Zone, direction: str = UPPER) -> Zone:
    """Limits of forward (``upper``) or backward (``lower``) delay sequences in ``z``."""
    upper, lower, other = _temporal(z)
    rows = list(other)
    up = direction == UPPER
    for x, c in upper:
        rows.append(_oriented(c, x, True).with_op(LE if up else LT))
    for x, c in lower:
        rows.append(_oriented(c, x, False).with_op(LT if up else LE))
    if up:
        rows += [_nonneg(x).with_op(LT) for x in _implicit_lowers(z, lower)]
    return Zone.make(z.space, rows)


def temporal_bound(z: Zone, direction: str = UPPER) -> "ZoneUnion":
    """Points of ``z`` (or its closure) where a bounding temporal constraint is tight."""
    upper, lower, _ = _temporal(z)
    up = direction == UPPER
    bounds = [(x, _oriented(c, x, up)) for x, c in (upper if up else lower)]
    if not up:
        bounds += [(x, _nonneg(x)) for x in _implicit_lowers(z, lower)]
    closure = None
    pieces = []
    for x, h in bounds:
        if h.op == LE:
            base = z
        else:
            if closure is None:
                closure = temporal_closure(z, direction)
            base = closure
        pieces.append(base.conj(h.with_op(EQ)))
    return ZoneUnion.make(z.space, pieces)


def utemp_split(z: Zone, urgent: bool = False):
    """Upper bounds of ``z`` reached inside it (non-strict) and outside it (strict)."""
    if urgent:
        return ZoneUnion.make(z.space, [z]), ZoneUnion.empty(z.space)
    upper, _, _ = _temporal(z)
    closure = None
    inside, outside = [], []
    for x, c in upper:
        h = _oriented(c, x, True)
        if h.op == LE:
            inside.append(z.conj(h.with_op(EQ)))
        else:
            if closure is None:
                closure = temporal_closure(z, UPPER)
            outside.append(closure.conj(h.with_op(EQ)))
    return ZoneUnion.make(z.space, inside), ZoneUnion.make(z.space, outside)


def epsilon_lower_bounds(z: Zone, eps: str) -> "ZoneUnion":
    """Slabs of width ``eps`` above each stored lower temporal constraint of ``z``."""
    zn = normalize(z)
    upper, lower, _ = _temporal(zn)
    if upper:
        raise ValueError("not applicable: zone has an upper temporal constraint")
    space = zn.space.with_params(eps)
    base = zn.extend(space)
    pieces = []
    for x, c in lower:
        h = _oriented(c, x, False)
        scale = -h.coef(x)
        d = {v: -a / scale for v, a in h.terms}
        d[eps] = d.get(eps, 0) - 1
        pieces.append(base.conj(Constraint.make(d, -h.const / scale, LE)))
    return ZoneUnion.make(space, pieces)


# ---------------------------------------------------------------------------
# Unions


@dataclass(frozen=True)
class ZoneUnion:
    """Finite union of convex zones over one space; empty pieces are pruned."""

    space: Space
    pieces: tuple = ()

    @staticmethod
    def make(space: Space, pieces: Iterable[Zone]) -> "ZoneUnion":
        kept = []
        for p in pieces:
            if p.space != space:
                raise ValueError(f"dimension mismatch: {p.space} vs {space}")
            if not is_empty(p):
                kept.append(p)
        return ZoneUnion(space, tuple(kept))

    @staticmethod
    def empty(space: Space) -> "ZoneUnion":
        return ZoneUnion(space, ())

    @staticmethod
    def of(z: Zone) -> "ZoneUnion":
        return ZoneUnion.make(z.space, [z])

    def is_empty(self) -> bool:
        return not self.pieces

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    def __or__(self, other: "ZoneUnion") -> "ZoneUnion":
        return union(self, other)

    def __and__(self, other) -> "ZoneUnion":
        return intersect_union(self, other)

    def __sub__(self, other) -> "ZoneUnion":
        return difference(self, other)

    def contains(self, valuation) -> bool:
        return any(satisfies(valuation, p) for p in self.pieces)

    def extend(self, space: Space) -> "ZoneUnion":
        return ZoneUnion(space, tuple(p.extend(space) for p in self.pieces))

    def map(self, fn) -> "ZoneUnion":
        return ZoneUnion.make(self.space, [fn(p) for p in self.pieces])

    def format(self) -> str:
        return format_union(self)

    def __str__(self) -> str:
        return self.format()


def format_union(u: ZoneUnion) -> str:
    if not u.pieces:
        return "false"
    if len(u.pieces) == 1:
        return format_zone(u.pieces[0])
    return " || ".join(f"({format_zone(p)})" for p in u.pieces)


def as_union(z) -> ZoneUnion:
    return z if isinstance(z, ZoneUnion) else ZoneUnion.of(z)


def union(a, b) -> ZoneUnion:
    a, b = as_union(a), as_union(b)
    if a.space != b.space:
        raise ValueError("dimension mismatch")
    return ZoneUnion(a.space, a.pieces + b.pieces)


def intersect_union(a, b) -> ZoneUnion:
    a, b = as_union(a), as_union(b)
    return ZoneUnion.make(a.space, [intersect(p, q) for p in a.pieces for q in b.pieces])


def _convex_minus(a: Zone, b: Zone) -> list:
    if is_empty(intersect(a, b)):
        return [a]
    out = []
    cur = a
    for c in b.constraints:
        for h in c.halves():
            piece = cur.conj(h.negation())
            if not is_empty(piece):
                out.append(piece)
                cur = cur.conj(h)
    return out


def difference(a, b) -> ZoneUnion:
    """``a \\ b`` as a union of pairwise disjoint pieces per piece of ``a``."""
    a, b = as_union(a), as_union(b)
    if a.space != b.space:
        raise ValueError("dimension mismatch")
    result = list(a.pieces)
    for q in b.pieces:
        nxt = []
        for p in result:
            nxt.extend(_convex_minus(p, q))
        result = nxt
        if not result:
            break
    return ZoneUnion(a.space, tuple(result))


def is_subset(a, b) -> bool:
    return difference(a, b).is_empty()


def equals(a, b) -> bool:
    """Semantic equality (mutual inclusion)."""
    return is_subset(a, b) and is_subset(b, a)


def reduce(u: ZoneUnion) -> ZoneUnion:
    """Drop pieces contained in another piece and merge pairs whose union is convex."""
    pieces = [normalize(p) for p in u.pieces]
    kept: list = []
    for i, p in enumerate(pieces):
        others = kept + pieces[i + 1:]
        if not any(is_subset(p, q) for q in others):
            kept.append(p)
    merged = True
    while merged:
        merged = False
        for i in range(len(kept)):
            for j in range(i + 1, len(kept)):
                hull = _exact_hull(kept[i], kept[j])
                if hull is not None:
                    kept[i] = hull
                    del kept[j]
                    merged = True
                    break
            if merged:
                break
    return ZoneUnion(u.space, tuple(kept))


def _exact_hull(a: Zone, b: Zone) -> Zone | None:
    """The convex union of ``a`` and ``b`` if ``a ∪ b`` is convex, else None.

    The candidate keeps every constraint of either zone that the other zone
    satisfies; it always contains both, so it is the union exactly when it adds
    no point outside them.
    """
    rows = [h for c in a.constraints for h in c.halves() if is_subset(b, Zone.make(a.space, [h]))]
    rows += [h for c in b.constraints for h in c.halves() if is_subset(a, Zone.make(a.space, [h]))]
    hull = Zone.make(a.space, rows)
    if is_subset(hull, ZoneUnion(a.space, (a, b))):
        return normalize(hull)
    return None


def complement(u) -> ZoneUnion:
    u = as_union(u)
    return difference(Zone.top(u.space), u)


def time_past_union(u) -> ZoneUnion:
    u = as_union(u)
    return ZoneUnion.make(u.space, [time_past(p) for p in u.pieces])


def safe_time_pred(target, avoid) -> ZoneUnion:
    """Points that reach ``target`` by letting time pass without touching ``avoid``.

    For a convex ``avoid`` the closed form of :func:`safe_time_pred_convex` is
    used.  Otherwise the complement of ``avoid`` is split into convex cells and
    the safe set grows backwards one cell at a time: a point of cell C is safe
    if its delay segment stays in C up to a point u that is safe itself, or
    that closes C from above and lies in the next cell, or that is the last
    point of C with safe points right after it.
    """
    target, avoid = as_union(target), as_union(avoid)
    if avoid.is_empty():
        return time_past_union(target)
    if len(avoid.pieces) == 1:
        return safe_time_pred_convex(target, avoid.pieces[0])
    return safe_time_pred_fixpoint(target, avoid)


def safe_time_pred_fixpoint(target, avoid) -> ZoneUnion:
    target, avoid = as_union(target), as_union(avoid)
    safe = difference(target, avoid)
    cells = [(c, temporal_closure(c, UPPER)) for c in complement(avoid).pieces]
    frontier = safe
    while not frontier.is_empty():
        grown = []
        afters = [(s, temporal_closure(s, LOWER)) for s in frontier.pieces]
        for cell, closure in cells:
            for s, after in afters:
                for entry in (intersect(s, cell), intersect(s, closure), intersect(after, cell)):
                    if is_empty(entry):
                        continue
                    back = intersect(time_past(entry), cell)
                    if not is_empty(back):
                        grown.append(back)
        frontier = difference(ZoneUnion.make(safe.space, grown), safe)
        safe = ZoneUnion(safe.space, safe.pieces + frontier.pieces)
    return safe


def safe_time_pred_convex(target, avoid: Zone) -> ZoneUnion:
    """Closed form of :func:`safe_time_pred` for a convex ``avoid``."""
    target = as_union(target)
    before = difference(time_past(avoid), avoid)
    never = difference(time_past_union(target), time_past(avoid))
    early = time_past_union(intersect_union(target, before))
    return union(never, early)


# ---------------------------------------------------------------------------
# Delays along a time line


@dataclass(frozen=True)
class Interval:
    """Set of delays ``lo (<|<=) d (<|<=) hi``; ``hi`` None means unbounded."""

    lo: Fraction
    lo_strict: bool
    hi: Fraction | None
    hi_strict: bool

    def contains(self, d) -> bool:
        d = as_fraction(d)
        if d < self.lo or (self.lo_strict and d == self.lo):
            return False
        if self.hi is None:
            return True
        return d < self.hi or (not self.hi_strict and d == self.hi)

    def intersect(self, other: "Interval") -> "Interval | None":
        if (self.lo, self.lo_strict) >= (other.lo, other.lo_strict):
            lo, los = self.lo, self.lo_strict
        else:
            lo, los = other.lo, other.lo_strict
        if other.hi is None or (self.hi is not None and (self.hi, not self.hi_strict) < (other.hi, not other.hi_strict)):
            hi, his = self.hi, self.hi_strict
        else:
            hi, his = other.hi, other.hi_strict
        return _interval(lo, los, hi, his)

    def __str__(self) -> str:
        left = "(" if self.lo_strict else "["
        if self.hi is None:
            return f"{left}{format_number(self.lo)}, inf)"
        right = ")" if self.hi_strict else "]"
        return f"{left}{format_number(self.lo)}, {format_number(self.hi)}{right}"


def _interval(lo, los, hi, his):
    if hi is not None and (hi < lo or (hi == lo and (los or his))):
        return None
    return Interval(lo, los, hi, his)


def delay_interval(z: Zone, valuation: Mapping[str, object]) -> Interval | None:
    """Exact set of delays d >= 0 with ``valuation + d`` in ``z``, or None if empty."""
    clocks = set(z.clocks)
    lo, los, hi, his = Fraction(0), False, None, False
    for c in z.constraints:
        if c.is_false:
            return None
        value = c.lhs_value(valuation)
        slope = sum((a for v, a in c.terms if v in clocks), Fraction(0))
        if not slope:
            if not _compare(value, c.op):
                return None
            continue
        root = -value / slope
        strict = c.op == LT
        if c.op == EQ or slope > 0:
            if hi is None or root < hi or (root == hi and strict):
                hi, his = root, strict
        if c.op == EQ or slope < 0:
            if root > lo or (root == lo and strict):
                lo, los = root, strict
    for x in z.space.variables:
        if as_fraction(valuation[x]) < 0:
            return None
    return _interval(lo, los, hi, his)
