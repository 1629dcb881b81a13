"""Characteristic directions and directors of tangent-to-identity jet maps.

For a self-map germ F = id + P + h.o.t. with leading homogeneous part P of
degree r, a direction v != 0 is characteristic when P(v) = lambda v; it is
degenerate when lambda vanishes.  The directors of a non-degenerate
direction are the eigenvalues of the derivative at [v] of the map induced
by P on projective space, minus the identity.  In coordinates this is the
operator (1/lambda) DP(v) - Id acting on the quotient C^k / <v>; the Euler
relation DP(v) v = r P(v) removes the radial eigenvalue r - 1.

Every map built in this package has monomial-diagonal leading part,
P_i(v) = c_i * v^alpha * v_i with a common exponent alpha, for which the
full characteristic set is enumerated exactly: coordinate hyperplanes
{v_j = 0} for j in the support of alpha (all degenerate) and, for every
index set S containing that support on which the c_i agree, the torus of
directions supported exactly on S.  Generic leading parts fall back to a
seeded Newton search on affine charts with projective deduplication.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .jets import DimensionError, DomainError, Jet, JetMap

RESIDUAL_TOL = 1e-8
DEGENERATE_TOL = 1e-8
ATTRACTING_TOL = 1e-10

DEGENERATE = "DEGENERATE"
NON_DEGENERATE_ATTRACTING = "NON_DEGENERATE_ATTRACTING"
NON_DEGENERATE_OTHER = "NON_DEGENERATE_OTHER"


class UnsupportedDimensionError(ValueError):
    """The direction solver is scoped to at most four variables."""


class IdentityJetError(ValueError):
    """No nonzero homogeneous part above degree one within the order."""


@dataclass(frozen=True)
class LeadingTerm:
    """Smallest-degree nonzero homogeneous part of F - id."""

    degree: int
    part: JetMap


@dataclass(frozen=True)
class CharacteristicDirection:
    v: tuple[complex, ...]
    lam: complex
    degenerate: bool
    directors: tuple[complex, ...]
    residual: float
    family_tag: str | None = None
    family_dim: int = 0

    def to_dict(self) -> dict:
        return {
            "v": [[x.real, x.imag] for x in self.v],
            "lambda": [self.lam.real, self.lam.imag],
            "degenerate": self.degenerate,
            "directors": [[d.real, d.imag] for d in self.directors],
            "residual": self.residual,
            "family_tag": self.family_tag,
            "family_dim": self.family_dim,
            "classification": classify(self).kind,
        }


@dataclass(frozen=True)
class Classification:
    kind: str
    family_params: int


def leading_term(jet_map: JetMap) -> LeadingTerm:
    """Extract (r, P_r); requires a map tangent to the identity."""
    if not jet_map.linear_part_is_identity():
        raise DomainError("leading term needs a map tangent to the identity")
    diff = jet_map.minus_identity()
    for r in range(2, jet_map.order + 1):
        part = diff.homogeneous_part(r)
        if any(not c.is_zero() for c in part.components):
            return LeadingTerm(r, part)
    raise IdentityJetError("the jet is the identity up to its truncation order")


# ----------------------------------------------------------------------
# helpers


def _normalize(v: np.ndarray) -> tuple[complex, ...]:
    """Unit representative with the largest coordinate made real positive."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    pivot = int(np.argmax(np.abs(v)))
    phase = v[pivot] / abs(v[pivot])
    v = v / phase
    return tuple(complex(x) for x in v)


def _eval_part(part: JetMap, v: Sequence[complex]) -> np.ndarray:
    return np.array(part(v), dtype=complex)


def _residual(part: JetMap, v: Sequence[complex], lam: complex) -> float:
    pv = _eval_part(part, v)
    return float(np.linalg.norm(pv - lam * np.asarray(v, dtype=complex)))


def _projective_distance(u: Sequence[complex], v: Sequence[complex]) -> float:
    a = np.asarray(u, dtype=complex)
    b = np.asarray(v, dtype=complex)
    inner = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.sqrt(max(0.0, 1.0 - inner * inner))


def _monomial_diagonal(part: JetMap) -> tuple[tuple[int, ...], list[complex]] | None:
    """Recognize P_i = c_i * v^alpha * v_i with one shared alpha."""
    alpha: tuple[int, ...] | None = None
    coeffs: list[complex] = []
    for i, comp in enumerate(part.components):
        terms = comp.sorted_terms()
        if len(terms) != 1:
            return None
        e, c = terms[0]
        if e[i] < 1:
            return None
        this_alpha = tuple(x - 1 if j == i else x for j, x in enumerate(e))
        if alpha is None:
            alpha = this_alpha
        elif this_alpha != alpha:
            return None
        coeffs.append(c)
    if alpha is None:
        return None
    return alpha, coeffs


# ----------------------------------------------------------------------
# directors


def _quotient_operator(lt: LeadingTerm, v: Sequence[complex], lam: complex, chart: int) -> np.ndarray:
    """Matrix of (1/lambda) DP(v) - Id on C^k / <v> in the given chart."""
    k = lt.part.k
    jac = lt.part.jacobian()
    dp = np.array([[jac[i][j](v) for j in range(k)] for i in range(k)], dtype=complex)
    a = dp / lam
    rows = [i for i in range(k) if i != chart]
    vv = np.asarray(v, dtype=complex)
    m = np.empty((k - 1, k - 1), dtype=complex)
    for ri, i in enumerate(rows):
        for ci, j in enumerate(rows):
            m[ri, ci] = a[i, j] - (vv[i] / vv[chart]) * a[chart, j]
    return m - np.eye(k - 1)


def _chart_derivative_fd(lt: LeadingTerm, v: Sequence[complex], chart: int, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the induced chart map u -> P_j(x)/P_chart(x)."""
    k = lt.part.k
    vv = np.asarray(v, dtype=complex)
    base = vv / vv[chart]
    rows = [i for i in range(k) if i != chart]

    def chart_map(u: np.ndarray) -> np.ndarray:
        x = np.empty(k, dtype=complex)
        x[chart] = 1.0
        for ri, i in enumerate(rows):
            x[i] = u[ri]
        px = _eval_part(lt.part, tuple(x))
        return np.array([px[i] / px[chart] for i in rows], dtype=complex)

    u0 = np.array([base[i] for i in rows], dtype=complex)
    deriv = np.empty((k - 1, k - 1), dtype=complex)
    for col in range(k - 1):
        step = np.zeros(k - 1, dtype=complex)
        step[col] = h
        deriv[:, col] = (chart_map(u0 + step) - chart_map(u0 - step)) / (2 * h)
    return deriv


def _sorted_eigs(m: np.ndarray) -> tuple[complex, ...]:
    eigs = np.linalg.eigvals(m)
    return tuple(sorted((complex(e) for e in eigs), key=lambda z: (round(z.real, 10), round(z.imag, 10))))


def directors_in_chart(lt: LeadingTerm, d: CharacteristicDirection, chart: int) -> tuple[complex, ...]:
    """Directors computed in a prescribed affine chart (no cross-check)."""
    if d.degenerate:
        raise DomainError("directors are defined only for non-degenerate directions")
    if lt.part.k == 1:
        return ()
    if abs(d.v[chart]) == 0:
        raise DomainError("chart coordinate vanishes on this direction")
    return _sorted_eigs(_quotient_operator(lt, d.v, d.lam, chart))


def directors(lt: LeadingTerm, d: CharacteristicDirection) -> tuple[complex, ...]:
    """Director eigenvalues in the chart of the largest coordinate.

    A finite-difference derivative of the induced projective map provides a
    second opinion; disagreement beyond 1e-6 raises ArithmeticError.
    """
    if d.degenerate:
        raise DomainError("directors are defined only for non-degenerate directions")
    k = lt.part.k
    if k == 1:
        return ()
    chart = int(np.argmax(np.abs(np.asarray(d.v))))
    eigs = _sorted_eigs(_quotient_operator(lt, d.v, d.lam, chart))
    fd = _sorted_eigs(_chart_derivative_fd(lt, d.v, chart) - np.eye(k - 1))
    worst = max(abs(a - b) for a, b in zip(eigs, fd))
    if worst > 1e-6:
        raise ArithmeticError(
            f"director cross-check failed: chart formula vs finite differences differ by {worst:.3e}"
        )
    return eigs


def classify(d: CharacteristicDirection) -> Classification:
    """DEGENERATE, attracting (all director real parts > 0) or other."""
    if d.degenerate:
        return Classification(DEGENERATE, d.family_dim)
    if all(x.real > ATTRACTING_TOL for x in d.directors):
        return Classification(NON_DEGENERATE_ATTRACTING, d.family_dim)
    return Classification(NON_DEGENERATE_OTHER, d.family_dim)


def characteristic_set_dimension(dirs: Sequence[CharacteristicDirection]) -> int:
    """Dimension of the characteristic cone in C^k (family dim + 1)."""
    return max((d.family_dim + 1 for d in dirs), default=0)


# ----------------------------------------------------------------------
# solvers


def _exact_directions(
    lt: LeadingTerm,
    alpha: tuple[int, ...],
    coeffs: list[complex],
    names: Sequence[str],
) -> list[CharacteristicDirection]:
    k = lt.part.k
    support = [j for j in range(k) if alpha[j] > 0]
    out: list[CharacteristicDirection] = []

    if k >= 2:
        for j in support:
            rep = np.array([0.0 if i == j else 1.0 for i in range(k)], dtype=complex)
            v = _normalize(rep)
            out.append(
                CharacteristicDirection(
                    v=v,
                    lam=0j,
                    degenerate=True,
                    directors=(),
                    residual=_residual(lt.part, v, 0j),
                    family_tag=f"hyperplane {names[j]}=0",
                    family_dim=k - 2,
                )
            )

    scale = max(abs(c) for c in coeffs)
    others = [j for j in range(k) if j not in support]
    for extra_size in range(len(others) + 1):
        for extra in itertools.combinations(others, extra_size):
            s = sorted(support + list(extra))
            if not s:
                continue
            cs = [coeffs[j] for j in s]
            if max(abs(c - cs[0]) for c in cs) > 1e-12 * max(scale, 1.0):
                continue
            rep = np.array([1.0 if i in s else 0.0 for i in range(k)], dtype=complex)
            v = _normalize(rep)
            vv = np.asarray(v)
            mono = complex(np.prod([vv[j] ** alpha[j] for j in range(k)])) if any(alpha) else 1.0
            lam = cs[0] * mono
            deg = abs(lam) <= DEGENERATE_TOL
            tag = None if len(s) == 1 else "torus support={" + ",".join(names[j] for j in s) + "}"
            d = CharacteristicDirection(
                v=v,
                lam=lam,
                degenerate=deg,
                directors=(),
                residual=_residual(lt.part, v, lam),
                family_tag=tag,
                family_dim=len(s) - 1,
            )
            if not deg:
                d = CharacteristicDirection(
                    v=d.v,
                    lam=d.lam,
                    degenerate=False,
                    directors=directors(lt, d),
                    residual=d.residual,
                    family_tag=d.family_tag,
                    family_dim=d.family_dim,
                )
            out.append(d)
    return out


_SEED_RE = {2: (-1.0, -0.5, 0.0, 0.5, 1.0), 3: (-1.0, -0.5, 0.0, 0.5, 1.0), 4: (-1.0, 0.0, 1.0)}
_SEED_IM = {2: (-1.0, 0.0, 1.0), 3: (-1.0, 0.0, 1.0), 4: (-1.0, 1.0)}


def _newton_directions(lt: LeadingTerm, names: Sequence[str]) -> list[CharacteristicDirection]:
    k = lt.part.k
    jac = lt.part.jacobian()

    found: list[tuple[tuple[complex, ...], complex]] = []

    def record(x: np.ndarray) -> None:
        v = _normalize(x)
        vv = np.asarray(v)
        pv = _eval_part(lt.part, v)
        lam = complex(np.vdot(vv, pv))
        res = _residual(lt.part, v, lam)
        if res > RESIDUAL_TOL:
            return
        for idx, (u, lam_u) in enumerate(found):
            if _projective_distance(u, v) < 1e-6:
                # keep the sharper of the two representatives
                if res < _residual(lt.part, u, lam_u):
                    found[idx] = (v, lam)
                return
        found.append((v, lam))

    if k == 1:
        record(np.array([1.0], dtype=complex))
    else:
        seeds_1d = [complex(re, im) for re in _SEED_RE[k] for im in _SEED_IM[k]]
        for chart in range(k):
            rows = [i for i in range(k) if i != chart]
            for seed in itertools.product(seeds_1d, repeat=k - 1):
                u = np.array(seed, dtype=complex)
                ok = False
                for _ in range(40):
                    x = np.empty(k, dtype=complex)
                    x[chart] = 1.0
                    for ri, i in enumerate(rows):
                        x[i] = u[ri]
                    px = _eval_part(lt.part, tuple(x))
                    g = np.array([px[i] - px[chart] * x[i] for i in rows], dtype=complex)
                    if np.linalg.norm(g) < 1e-13:
                        ok = True
                        break
                    dp = np.array([[jac[i][j](tuple(x)) for j in range(k)] for i in range(k)], dtype=complex)
                    jg = np.empty((k - 1, k - 1), dtype=complex)
                    for ri, i in enumerate(rows):
                        for ci, j in enumerate(rows):
                            jg[ri, ci] = dp[i, j] - dp[chart, j] * x[i] - (px[chart] if i == j else 0.0)
                    try:
                        du = np.linalg.solve(jg, g)
                    except np.linalg.LinAlgError:
                        break
                    u = u - du
                    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 1e6:
                        break
                if ok:
                    x = np.empty(k, dtype=complex)
                    x[chart] = 1.0
                    for ri, i in enumerate(rows):
                        x[i] = u[ri]
                    record(x)

    # Newton stalls on non-simple roots, leaving a halo of near-duplicates
    # around the true direction; collapse anything within 1e-4 onto the
    # member with the smallest residual (an exact hit wins with residual 0).
    merged: list[tuple[tuple[complex, ...], complex]] = []
    used = [False] * len(found)
    order_idx = sorted(
        range(len(found)),
        key=lambda i: _residual(lt.part, found[i][0], found[i][1]),
    )
    for i in order_idx:
        if used[i]:
            continue
        used[i] = True
        for j in range(len(found)):
            if not used[j] and _projective_distance(found[i][0], found[j][0]) < 1e-4:
                used[j] = True
        merged.append(found[i])
    found = merged

    found.sort(key=lambda item: tuple((round(x.real, 8), round(x.imag, 8)) for x in item[0]))

    # clusters of many nearby solutions indicate a positive-dimensional family
    tags: dict[int, str | None] = {i: None for i in range(len(found))}
    parent = list(range(len(found)))

    def root(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(found)):
        for j in range(i + 1, len(found)):
            if _projective_distance(found[i][0], found[j][0]) < 1e-2:
                parent[root(i)] = root(j)
    cluster_members: dict[int, list[int]] = {}
    for i in range(len(found)):
        cluster_members.setdefault(root(i), []).append(i)
    n_clusters = 0
    for members in cluster_members.values():
        if len(members) >= 10:
            n_clusters += 1
            for i in members:
                tags[i] = f"cluster_{n_clusters}"

    out = []
    for i, (v, lam) in enumerate(found):
        deg = abs(lam) <= DEGENERATE_TOL
        d = CharacteristicDirection(
            v=v,
            lam=0j if deg else lam,
            degenerate=deg,
            directors=(),
            residual=_residual(lt.part, v, 0j if deg else lam),
            family_tag=tags[i],
            family_dim=1 if tags[i] else 0,
        )
        if not deg:
            d = CharacteristicDirection(
                v=d.v, lam=d.lam, degenerate=False, directors=directors(lt, d),
                residual=d.residual, family_tag=d.family_tag, family_dim=d.family_dim,
            )
        out.append(d)
    return out


def characteristic_directions(
    lt: LeadingTerm,
    names: Sequence[str] | None = None,
    force_newton: bool = False,
) -> list[CharacteristicDirection]:
    """All characteristic directions of the leading part (k <= 4).

    Monomial-diagonal parts are enumerated exactly, including the
    positive-dimensional families; anything else goes through the Newton
    search.  Every returned direction satisfies the residual bound
    ||P(v) - lambda v|| <= 1e-8 at ||v|| = 1.
    """
    k = lt.part.k
    if k > 4:
        raise UnsupportedDimensionError(f"direction solver supports k <= 4, got {k}")
    if names is None:
        names = [f"x{i}" for i in range(k)]
    if not force_newton:
        structure = _monomial_diagonal(lt.part)
        if structure is not None:
            return _exact_directions(lt, structure[0], structure[1], names)
    return _newton_directions(lt, names)
