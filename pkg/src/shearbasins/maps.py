"""Exact shear/overshear words in C^{k+1} and their induced planar maps.

The central object is a five-factor word of elementary automorphisms of
C^{k+1} with coordinates (z_1, ..., z_k, w) and product coordinate
zeta = z_1 * ... * z_k:

    shear       (z, w) -> (z, w - zeta)
    overshear   (z, w) -> (z_i * exp(a_i w), w)
    twist       (z, w) -> (z, w * exp(-(A + b) zeta) + A zeta^2),  A = sum a_i

The word  twist o overshear^-1 o shear^-1 o overshear o shear  is an
automorphism tangent to the identity whose components have the normal form

    F_i = z_i (1 - a_i zeta + h.o.t.),    F_w = w (1 - b zeta + h.o.t.) + O(zeta^3)

which :func:`verify_normal_form` certifies monomial by monomial.  For k = 2
(coordinates z, t, w) the word is the classical three-dimensional example;
the projection (z, t, w) -> (zt, w) semi-conjugates it to a planar map that
:func:`push_forward` extracts symbolically and :func:`eval_pushforward`
evaluates exactly through a square-root lift.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .jets import DimensionError, DomainError, Jet, JetMap
from .report import Report

_NAN = complex(math.nan, math.nan)


def _cexp(x: complex) -> complex:
    try:
        return cmath.exp(x)
    except (OverflowError, ValueError):
        return complex(math.inf, math.inf)


class SemiConjugacyError(ValueError):
    """The jet map does not descend along the product projection."""


@dataclass(frozen=True)
class Params:
    """Shear strengths of the three-dimensional word; all must be nonzero."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a == 0 or self.b == 0 or self.c == 0:
            raise DomainError("shear parameters a, b, c must all be nonzero")

    @property
    def in_chosen_regime(self) -> bool:
        """a = b > 0 and c > 2a, the regime used for the basin statements."""
        return self.a == self.b and self.a > 0 and self.c > 2 * self.a


def family_in_regime(weights: Sequence[float], w_coeff: float) -> bool:
    """All z-weights equal, real and positive, and the w-weight exceeds their sum."""
    ws = list(weights)
    return all(w == ws[0] and w > 0 for w in ws) and w_coeff > sum(ws)


class ElementaryKind(Enum):
    SHEAR = "shear"
    SHEAR_INV = "shear_inv"
    OVERSHEAR = "overshear"
    OVERSHEAR_INV = "overshear_inv"
    TWIST = "twist"
    TWIST_INV = "twist_inv"


_INVERSE_KIND = {
    ElementaryKind.SHEAR: ElementaryKind.SHEAR_INV,
    ElementaryKind.SHEAR_INV: ElementaryKind.SHEAR,
    ElementaryKind.OVERSHEAR: ElementaryKind.OVERSHEAR_INV,
    ElementaryKind.OVERSHEAR_INV: ElementaryKind.OVERSHEAR,
    ElementaryKind.TWIST: ElementaryKind.TWIST_INV,
    ElementaryKind.TWIST_INV: ElementaryKind.TWIST,
}


@dataclass(frozen=True)
class ElementaryMap:
    """One elementary automorphism of C^{k+1} with its exact closed form."""

    kind: ElementaryKind
    weights: tuple[float, ...]
    w_coeff: float

    @property
    def dim(self) -> int:
        return len(self.weights) + 1

    def inverse(self) -> "ElementaryMap":
        return ElementaryMap(_INVERSE_KIND[self.kind], self.weights, self.w_coeff)

    def __call__(self, p: Sequence[complex]) -> tuple[complex, ...]:
        if len(p) != self.dim:
            raise DimensionError(f"point has {len(p)} coordinates, expected {self.dim}")
        k = len(self.weights)
        zs, w = tuple(p[:k]), p[k]
        zeta = 1.0 + 0j
        for z in zs:
            zeta *= z
        kind = self.kind
        if kind is ElementaryKind.SHEAR:
            return (*zs, w - zeta)
        if kind is ElementaryKind.SHEAR_INV:
            return (*zs, w + zeta)
        if kind is ElementaryKind.OVERSHEAR:
            return (*(z * _cexp(a * w) for z, a in zip(zs, self.weights)), w)
        if kind is ElementaryKind.OVERSHEAR_INV:
            return (*(z * _cexp(-a * w) for z, a in zip(zs, self.weights)), w)
        total = sum(self.weights)
        rate = total + self.w_coeff
        if kind is ElementaryKind.TWIST:
            return (*zs, w * _cexp(-rate * zeta) + total * zeta * zeta)
        return (*zs, (w - total * zeta * zeta) * _cexp(rate * zeta))

    def eval_batch(self, coords: list[np.ndarray]) -> list[np.ndarray]:
        """Elementwise closed form on coordinate arrays (overflow -> inf)."""
        k = len(self.weights)
        zs, w = coords[:k], coords[k]
        zeta = zs[0].copy()
        for z in zs[1:]:
            zeta = zeta * z
        kind = self.kind
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            if kind is ElementaryKind.SHEAR:
                return [*zs, w - zeta]
            if kind is ElementaryKind.SHEAR_INV:
                return [*zs, w + zeta]
            if kind is ElementaryKind.OVERSHEAR:
                return [*(z * np.exp(a * w) for z, a in zip(zs, self.weights)), w]
            if kind is ElementaryKind.OVERSHEAR_INV:
                return [*(z * np.exp(-a * w) for z, a in zip(zs, self.weights)), w]
            total = sum(self.weights)
            rate = total + self.w_coeff
            if kind is ElementaryKind.TWIST:
                return [*zs, w * np.exp(-rate * zeta) + total * zeta * zeta]
            return [*zs, (w - total * zeta * zeta) * np.exp(rate * zeta)]

    def jet(self, order: int) -> JetMap:
        n = self.dim
        k = len(self.weights)
        xs = [Jet.variable(n, order, i) for i in range(n)]
        w = xs[k]
        zeta = Jet.monomial(n, order, (1,) * k + (0,))
        kind = self.kind
        if kind is ElementaryKind.SHEAR:
            return JetMap([*xs[:k], w - zeta])
        if kind is ElementaryKind.SHEAR_INV:
            return JetMap([*xs[:k], w + zeta])
        if kind is ElementaryKind.OVERSHEAR:
            return JetMap([*(z * (w * a).exp() for z, a in zip(xs, self.weights)), w])
        if kind is ElementaryKind.OVERSHEAR_INV:
            return JetMap([*(z * (w * -a).exp() for z, a in zip(xs, self.weights)), w])
        total = sum(self.weights)
        rate = total + self.w_coeff
        if kind is ElementaryKind.TWIST:
            return JetMap([*xs[:k], w * (zeta * -rate).exp() + zeta * zeta * total])
        return JetMap([*xs[:k], (w - zeta * zeta * total) * (zeta * rate).exp()])


@dataclass(frozen=True)
class MapWord:
    """Composition word; ``factors[0]`` is applied last, ``factors[-1]`` first."""

    factors: tuple[ElementaryMap, ...]

    def __post_init__(self):
        if not self.factors:
            raise DimensionError("a map word needs at least one factor")
        dims = {f.dim for f in self.factors}
        if len(dims) != 1:
            raise DimensionError("all factors must act on the same space")

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    def __call__(self, p: Sequence[complex]) -> tuple[complex, ...]:
        q = tuple(complex(x) for x in p)
        for factor in reversed(self.factors):
            q = factor(q)
        return q

    def eval_batch(self, coords: list[np.ndarray]) -> list[np.ndarray]:
        out = coords
        for factor in reversed(self.factors):
            out = factor.eval_batch(out)
        return out

    def inverse(self) -> "MapWord":
        return MapWord(tuple(f.inverse() for f in reversed(self.factors)))

    def then(self, other: "MapWord") -> "MapWord":
        """Word for other o self."""
        return MapWord(other.factors + self.factors)

    def jet(self, order: int) -> JetMap:
        result: JetMap | None = None
        for factor in reversed(self.factors):
            fj = factor.jet(order)
            result = fj if result is None else fj.compose(result)
        return result


def eval_word(word: MapWord, p: Sequence[complex]) -> tuple[complex, ...]:
    if len(p) != word.dim:
        raise DimensionError(f"point has {len(p)} coordinates, expected {word.dim}")
    return word(p)


def invert_word(word: MapWord) -> MapWord:
    return word.inverse()


def jet_of_word(word: MapWord, order: int) -> JetMap:
    return word.jet(order)


def build_family(k: int, weights: Sequence[float], w_coeff: float) -> MapWord:
    """Five-factor word in C^{k+1}; requires k >= 2 and nonzero parameters."""
    if k < 2:
        raise DimensionError("the construction needs at least two z-coordinates")
    ws = tuple(float(a) for a in weights)
    if len(ws) != k:
        raise DimensionError(f"expected {k} weights, got {len(ws)}")
    if any(a == 0 for a in ws) or w_coeff == 0:
        raise DomainError("all weights and the w-coefficient must be nonzero")

    def factor(kind: ElementaryKind) -> ElementaryMap:
        return ElementaryMap(kind, ws, float(w_coeff))

    return MapWord(
        (
            factor(ElementaryKind.TWIST),
            factor(ElementaryKind.OVERSHEAR_INV),
            factor(ElementaryKind.SHEAR_INV),
            factor(ElementaryKind.OVERSHEAR),
            factor(ElementaryKind.SHEAR),
        )
    )


def build_F(params: Params) -> MapWord:
    """The three-dimensional word in coordinates (z, t, w)."""
    return build_family(2, (params.a, params.b), params.c)


# ----------------------------------------------------------------------
# projection to the (zeta, w) plane


def project_pi(p: Sequence[complex]) -> tuple[complex, complex]:
    """(z, t, w) -> (z t, w)."""
    if len(p) != 3:
        raise DimensionError("the projection is defined on three coordinates")
    return (p[0] * p[1], p[2])


def push_forward(jet_map: JetMap) -> JetMap:
    """Planar jet induced along (z, t, w) -> (zt, w).

    Every monomial of (F1*F2, F3) must carry equal z and t exponents;
    otherwise the map does not descend and SemiConjugacyError is raised.
    The result is complete to order floor(order / 2): the monomial
    zeta^i w^m needs degree 2i + m upstairs.
    """
    if jet_map.k != 3 or jet_map.arity_out != 3:
        raise DimensionError("push_forward expects a three-dimensional self-map")
    f1, f2, f3 = jet_map.components
    order2 = jet_map.order // 2

    def collapse(jet3: Jet) -> Jet:
        terms: dict[tuple[int, int], complex] = {}
        for e, c in jet3.sorted_terms():
            i, j, m = e
            if i != j:
                raise SemiConjugacyError(
                    f"monomial z^{i} t^{j} w^{m} breaks the product structure"
                )
            if i + m <= order2:
                terms[(i, m)] = c
        return Jet(2, order2, terms)

    return JetMap([collapse(f1 * f2), collapse(f3)])


def eval_pushforward(word: MapWord, q: Sequence[complex]) -> tuple[complex, complex]:
    """Exact induced planar map via the square-root lift (sqrt x, sqrt x, y).

    Uses the principal branch; the result is branch independent because the
    word commutes with (z, t) -> (lambda z, t / lambda).
    """
    if word.dim != 3:
        raise DimensionError("the induced planar map needs a three-dimensional word")
    if len(q) != 2:
        raise DimensionError("expected a planar point (x, y)")
    s = cmath.sqrt(complex(q[0]))
    return project_pi(word((s, s, complex(q[1]))))


@dataclass(frozen=True)
class PushforwardMap:
    """Picklable evaluator for the induced planar map."""

    word: MapWord

    @property
    def dim(self) -> int:
        return 2

    def __call__(self, q: Sequence[complex]) -> tuple[complex, complex]:
        return eval_pushforward(self.word, q)

    def eval_batch(self, coords: list[np.ndarray]) -> list[np.ndarray]:
        s = np.sqrt(coords[0])
        z, t, w = self.word.eval_batch([s, s, coords[1]])
        return [z * t, w]


# ----------------------------------------------------------------------
# prototypes


@dataclass(frozen=True)
class Prototype:
    """Non-automorphism model maps: the 1D quadratic and the 2D product map."""

    kind: str  # "quadratic_1d" | "product_2d"
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in ("quadratic_1d", "product_2d"):
            raise ValueError(f"unknown prototype kind {self.kind!r}")
        if self.kind == "quadratic_1d" and self.a == 0:
            raise DomainError("the quadratic prototype needs a nonzero coefficient")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "quadratic_1d" else 2

    def __call__(self, p: Sequence[complex]) -> tuple[complex, ...]:
        if len(p) != self.dim:
            raise DimensionError(f"point has {len(p)} coordinates, expected {self.dim}")
        if self.kind == "quadratic_1d":
            z = complex(p[0])
            return (z + self.a * z * z,)
        z, w = complex(p[0]), complex(p[1])
        factor = 1 + 0.5 * z * w
        return (z * factor, w * factor)

    def eval_batch(self, coords: list[np.ndarray]) -> list[np.ndarray]:
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            if self.kind == "quadratic_1d":
                z = coords[0]
                return [z + self.a * z * z]
            z, w = coords
            factor = 1 + 0.5 * z * w
            return [z * factor, w * factor]

    def jet(self, order: int) -> JetMap:
        if self.kind == "quadratic_1d":
            z = Jet.variable(1, order, 0)
            return JetMap([z + z * z * self.a])
        z, w = Jet.variable(2, order, 0), Jet.variable(2, order, 1)
        factor = Jet.constant(2, order, 1.0) + z * w * 0.5
        return JetMap([z * factor, w * factor])


# ----------------------------------------------------------------------
# normal-form verification


def _in_ideal(e: tuple[int, ...], generators: Sequence[tuple[int, ...]]) -> bool:
    return any(all(x >= g for x, g in zip(e, gen)) for gen in generators)


def verify_normal_form(
    jet_map: JetMap,
    weights: Sequence[float],
    w_coeff: float,
    note_literal_remainder: bool = False,
) -> Report:
    """Certify the shear word's normal form monomial by monomial.

    For each z-component the checks are: unit linear coefficient, the
    zeta-coefficient equals -a_i, and the remainder lies in the monomial
    ideal z_i * (zeta^2, zeta w).  For the w-component: unit linear
    coefficient, zeta w coefficient equals -b, and the remainder lies in
    w * (zeta^2, zeta w) + (zeta^3).
    """
    k = len(weights)
    n = k + 1
    if jet_map.k != n or jet_map.arity_out != n:
        raise DimensionError(f"expected a self-map of C^{n}")
    order = jet_map.order
    tol = 1e-12
    report = Report(title="normal form")

    ones = (1,) * k

    def zexp(i: int, extra_z: int = 0, extra_w: int = 0) -> tuple[int, ...]:
        e = [extra_z] * k
        e[i] += 1
        return tuple(e) + (extra_w,)

    for i in range(k):
        comp = jet_map.components[i]
        lin = comp.coefficient(zexp(i))
        zc = comp.coefficient(zexp(i, extra_z=1))
        defect = max(abs(lin - 1.0), abs(zc + weights[i]))
        report.add(
            f"coeff_F{i + 1}",
            defect <= tol,
            defect=defect,
            tolerance=tol,
            note=f"linear term 1, zeta term {-weights[i]:g}",
        )

    wc = jet_map.components[k]
    lin_w = wc.coefficient((0,) * k + (1,))
    zw = wc.coefficient(ones + (1,))
    defect = max(abs(lin_w - 1.0), abs(zw + w_coeff))
    report.add(
        "coeff_Fw",
        defect <= tol,
        defect=defect,
        tolerance=tol,
        note=f"linear term 1, zeta*w term {-w_coeff:g}",
    )

    # remainder ideals
    bad_z: list[str] = []
    for i in range(k):
        expected = Jet(n, order, {zexp(i): 1.0, zexp(i, extra_z=1): -weights[i]})
        diff = jet_map.components[i] - expected
        gens = (zexp(i, extra_z=2), zexp(i, extra_z=1, extra_w=1))
        for e, c in diff.sorted_terms():
            if not _in_ideal(e, gens):
                bad_z.append(f"F{i + 1}: {e} -> {c:.3g}")
    report.add(
        "ideal_Fz",
        not bad_z,
        note="; ".join(bad_z) if bad_z else "remainders in z_i*(zeta^2, zeta*w)",
    )

    expected_w = Jet(n, order, {(0,) * k + (1,): 1.0, ones + (1,): -w_coeff})
    diff_w = wc - expected_w
    gens_w = (tuple(2 for _ in range(k)) + (1,), ones + (2,), tuple(3 for _ in range(k)) + (0,))
    bad_w = [f"{e} -> {c:.3g}" for e, c in diff_w.sorted_terms() if not _in_ideal(e, gens_w)]
    report.add(
        "ideal_Fw",
        not bad_w,
        note="; ".join(bad_w) if bad_w else "remainder in w*(zeta^2, zeta*w) + (zeta^3)",
    )

    if note_literal_remainder:
        narrow = (
            tuple(3 for _ in range(k)) + (0,),
            tuple(2 for _ in range(k)) + (1,),
            ones + (3,),
        )
        outside = [f"{e} -> {c:.3g}" for e, c in diff_w.sorted_terms() if not _in_ideal(e, narrow)]
        if outside:
            report.notes.append(
                "w-component remainder monomials outside the narrow set "
                "{zeta^3, zeta^2 w, zeta w^3} (allowed by the ideal above): "
                + "; ".join(outside)
            )
    return report


def verify_form_eq1(jet_map: JetMap, params: Params) -> Report:
    """Three-dimensional normal-form report (five checks)."""
    if jet_map.k != 3:
        raise DimensionError("expected a jet map in three variables")
    return verify_normal_form(jet_map, (params.a, params.b), params.c)


# ----------------------------------------------------------------------
# map specification (JSON external interface)


def map_from_spec(spec: dict):
    """Build an evaluator from {"family": ..., "a": ..., "b": ..., "c": ..., "k": ...}."""
    family = spec.get("family")
    if family == "F3":
        return build_F(Params(float(spec["a"]), float(spec["b"]), float(spec["c"])))
    if family == "FAMILY_K":
        k = int(spec["k"])
        a = spec["a"]
        weights = [float(a)] * k if isinstance(a, (int, float)) else [float(x) for x in a]
        return build_family(k, weights, float(spec["b"]))
    if family == "PROTO_1D":
        return Prototype("quadratic_1d", float(spec.get("a", 1.0)))
    if family == "PROTO_2D":
        return Prototype("product_2d")
    if family == "G":
        word = build_F(Params(float(spec["a"]), float(spec.get("b", spec["a"])), float(spec["c"])))
        return PushforwardMap(word)
    raise ValueError(f"unknown map family {family!r}")
