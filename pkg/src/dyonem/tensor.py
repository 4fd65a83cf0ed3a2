"""Flat-spacetime tensor algebra.

Index conventions
-----------------
* Metric signature (+, -, -, -); contravariant coordinates ``x^i = (ct, x, y, z)``.
* ``eps^{0123} = +1`` and therefore ``eps_{0123} = -1``.
* Matrix views carry their variance in the name: ``uu`` is upper/upper,
  ``dd`` is lower/lower.  Mixed arrays ``M^i_k`` are stored as ``M[i, k]``.
  Nothing in this module raises or lowers an index implicitly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "METRIC",
    "FourVector",
    "FieldState",
    "levi_civita",
    "levi_civita_lower",
    "kronecker",
    "delta2",
    "delta3",
    "epsilon_upper_array",
    "epsilon_lower_array",
    "lower_both",
    "raise_both",
    "hodge_dual",
    "dual_tensor_uu",
    "invariant_scalars",
    "epsilon_contraction_check",
    "epsilon_delta_check",
    "delta3_check",
    "dual_product_identity",
    "lorentz_boost",
    "run_identity_suite",
]

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
METRIC.setflags(write=False)


def permutation_sign(seq) -> int:
    """Sign of ``seq`` as a permutation of its sorted values, 0 on repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    # selection sort counting transpositions
    for a in range(len(seq)):
        b = seq.index(min(seq[a:]), a)
        if b != a:
            seq[a], seq[b] = seq[b], seq[a]
            sign = -sign
    return sign


def _check_index(*idx: int) -> None:
    for n in idx:
        if not 0 <= n <= 3:
            raise ValueError(f"spacetime index out of range 0..3: {n}")


def levi_civita(i: int, j: int, k: int, l: int) -> int:
    """Contravariant symbol ``eps^{ijkl}`` with ``eps^{0123} = +1``."""
    _check_index(i, j, k, l)
    return permutation_sign((i, j, k, l))


def levi_civita_lower(i: int, j: int, k: int, l: int) -> int:
    """Covariant symbol ``eps_{ijkl}``; lowering all four indices costs det(g) = -1."""
    return -levi_civita(i, j, k, l)


def kronecker(i: int, j: int) -> int:
    return 1 if i == j else 0


def delta2(i: int, j: int, p: int, q: int) -> int:
    """Generalized Kronecker delta ``delta^{ij}_{pq}``."""
    return kronecker(i, p) * kronecker(j, q) - kronecker(i, q) * kronecker(j, p)


def delta3(p: int, q: int, i: int, r: int, s: int, k: int) -> int:
    """Generalized delta ``delta^{pqi}_{rsk}`` as the 3x3 determinant of unit deltas."""
    d = kronecker
    return (
        d(p, r) * d(q, s) * d(i, k)
        + d(p, s) * d(q, k) * d(i, r)
        + d(p, k) * d(q, r) * d(i, s)
        - d(p, r) * d(q, k) * d(i, s)
        - d(p, s) * d(q, r) * d(i, k)
        - d(p, k) * d(q, s) * d(i, r)
    )


@lru_cache(maxsize=None)
def _epsilon_table() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for idx in itertools.permutations(range(4)):
        eps[idx] = permutation_sign(idx)
    eps.setflags(write=False)
    return eps


def epsilon_upper_array() -> np.ndarray:
    """Read-only ``eps^{ijkl}`` as a (4, 4, 4, 4) array (cached)."""
    return _epsilon_table()


def epsilon_lower_array() -> np.ndarray:
    return -_epsilon_table()


def lower_both(m_uu: np.ndarray) -> np.ndarray:
    """``M_ik = g_ip g_kq M^pq``; works on (..., 4, 4) stacks."""
    return METRIC @ m_uu @ METRIC


def raise_both(m_dd: np.ndarray) -> np.ndarray:
    return METRIC @ m_dd @ METRIC


@dataclass(frozen=True)
class FourVector:
    """Contravariant four-vector ``v^i``."""

    components: np.ndarray

    def __post_init__(self):
        arr = np.array(self.components, dtype=float)
        if arr.shape != (4,):
            raise ValueError(f"four-vector needs 4 components, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "components", arr)

    @classmethod
    def from_time_space(cls, time_part: float, space) -> "FourVector":
        return cls(np.concatenate([[time_part], np.asarray(space, dtype=float)]))

    @property
    def lower(self) -> np.ndarray:
        """Covariant components ``v_i = g_ik v^k``."""
        return METRIC @ self.components

    @property
    def time(self) -> float:
        return float(self.components[0])

    @property
    def space(self) -> np.ndarray:
        return self.components[1:]

    def dot(self, other: "FourVector") -> float:
        return float(self.components @ METRIC @ other.components)

    def boosted(self, beta) -> "FourVector":
        return FourVector(lorentz_boost(beta) @ self.components)

    def __add__(self, other: "FourVector") -> "FourVector":
        return FourVector(self.components + other.components)

    def __sub__(self, other: "FourVector") -> "FourVector":
        return FourVector(self.components - other.components)

    def __mul__(self, scale: float) -> "FourVector":
        return FourVector(self.components * scale)

    __rmul__ = __mul__


def lorentz_boost(beta) -> np.ndarray:
    """Boost matrix ``L^i_k`` taking rest-frame components to a frame where the
    rest frame moves with velocity ``beta * c``."""
    beta = np.asarray(beta, dtype=float)
    b2 = float(beta @ beta)
    if b2 >= 1.0:
        raise ValueError("boost speed must be below c")
    lam = np.eye(4)
    if b2 == 0.0:
        return lam
    gamma = 1.0 / np.sqrt(1.0 - b2)
    lam[0, 0] = gamma
    lam[0, 1:] = gamma * beta
    lam[1:, 0] = gamma * beta
    lam[1:, 1:] += (gamma - 1.0) * np.outer(beta, beta) / b2
    return lam


def _readonly3(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FieldState:
    """Electromagnetic field at an event, stored as the pair (E, B).

    Gaussian units, so E and B share units.  The antisymmetric matrix views
    are built on demand and are antisymmetric by construction.
    """

    E: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "E", _readonly3(self.E))
        object.__setattr__(self, "B", _readonly3(self.B))

    @classmethod
    def zero(cls) -> "FieldState":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_F_uu(cls, m: np.ndarray) -> "FieldState":
        """Read (E, B) back from an ``F^ik`` matrix laid out as in the standard form."""
        m = np.asarray(m, dtype=float)
        E = -m[0, 1:]
        B = np.array([m[3, 2], m[1, 3], m[2, 1]])
        return cls(E, B)

    @property
    def F_uu(self) -> np.ndarray:
        Ex, Ey, Ez = self.E
        Bx, By, Bz = self.B
        return np.array([
            [0.0, -Ex, -Ey, -Ez],
            [Ex, 0.0, -Bz, By],
            [Ey, Bz, 0.0, -Bx],
            [Ez, -By, Bx, 0.0],
        ])

    @property
    def F_dd(self) -> np.ndarray:
        # E -> -E
        return FieldState(-self.E, self.B).F_uu

    @property
    def G_uu(self) -> np.ndarray:
        Ex, Ey, Ez = self.E
        Bx, By, Bz = self.B
        return np.array([
            [0.0, -Bx, -By, -Bz],
            [Bx, 0.0, Ez, -Ey],
            [By, -Ez, 0.0, Ex],
            [Bz, Ey, -Ex, 0.0],
        ])

    @property
    def G_dd(self) -> np.ndarray:
        # B -> -B
        return FieldState(self.E, -self.B).G_uu

    def dual(self) -> "FieldState":
        return hodge_dual(self)

    def __add__(self, other: "FieldState") -> "FieldState":
        return FieldState(self.E + other.E, self.B + other.B)

    def __sub__(self, other: "FieldState") -> "FieldState":
        return FieldState(self.E - other.E, self.B - other.B)

    def __mul__(self, scale: float) -> "FieldState":
        return FieldState(self.E * scale, self.B * scale)

    __rmul__ = __mul__

    def __neg__(self) -> "FieldState":
        return FieldState(-self.E, -self.B)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldState):
            return NotImplemented
        return bool(np.array_equal(self.E, other.E) and np.array_equal(self.B, other.B))

    def __hash__(self):
        return hash((self.E.tobytes(), self.B.tobytes()))


def dual_tensor_uu(f_dd: np.ndarray) -> np.ndarray:
    """``G^ik = 1/2 eps^{ikpq} F_pq`` by explicit contraction."""
    return 0.5 * np.einsum("ikpq,pq->ik", epsilon_upper_array(), f_dd)


def hodge_dual(f: FieldState) -> FieldState:
    """Dual field; in (E, B) storage this is (B, -E)."""
    return FieldState.from_F_uu(dual_tensor_uu(f.F_dd))


def invariant_scalars(f: FieldState) -> tuple[float, float]:
    """Return ``(F^pq F_pq, G^pq G_pq)``, which are negatives of each other."""
    return float(np.sum(f.F_uu * f.F_dd)), float(np.sum(f.G_uu * f.G_dd))


def epsilon_contraction_check(i: int, j: int, k: int, l: int) -> tuple[int, int]:
    """``(sum_pq eps^{ijpq} eps_{klpq}, -2 delta^{ij}_{kl})``."""
    lhs = sum(
        levi_civita(i, j, p, q) * levi_civita_lower(k, l, p, q)
        for p in range(4)
        for q in range(4)
    )
    return lhs, -2 * delta2(i, j, k, l)


def epsilon_delta_check(i: int, j: int, k: int, l: int) -> tuple[int, int]:
    """``(sum_pq eps^{ijpq} delta^{kl}_{pq}, 2 eps^{ijkl})``."""
    lhs = sum(
        levi_civita(i, j, p, q) * delta2(k, l, p, q) for p in range(4) for q in range(4)
    )
    return lhs, 2 * levi_civita(i, j, k, l)


def delta3_check(p: int, q: int, i: int, r: int, s: int, k: int) -> tuple[int, int]:
    """``(-sum_l eps^{pqil} eps_{rskl}, determinant expansion of delta^{pqi}_{rsk})``."""
    lhs = -sum(levi_civita(p, q, i, l) * levi_civita_lower(r, s, k, l) for l in range(4))
    return lhs, delta3(p, q, i, r, s, k)


def dual_product_identity(f: FieldState) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``G^{li} G_{kl} = F^{li} F_{kl} + 1/2 delta^i_k F^pq F_pq``.

    Returned as mixed arrays indexed ``[i, k]``.
    """
    lhs = np.einsum("li,kl->ik", f.G_uu, f.G_dd)
    ff, _ = invariant_scalars(f)
    rhs = np.einsum("li,kl->ik", f.F_uu, f.F_dd) + 0.5 * np.eye(4) * ff
    return lhs, rhs


def run_identity_suite() -> dict:
    """Exhaustively check the epsilon/delta identities in integer arithmetic.

    Returns a dict of ``{name: (checked, failures)}``.
    """
    results = {}
    r4 = range(4)
    fails = [t for t in itertools.product(r4, repeat=4) if len(set(epsilon_contraction_check(*t))) != 1]
    results["eps_eps_contraction"] = (256, fails)
    fails = [t for t in itertools.product(r4, repeat=4) if len(set(epsilon_delta_check(*t))) != 1]
    results["eps_delta_contraction"] = (256, fails)
    fails = [t for t in itertools.product(r4, repeat=6) if len(set(delta3_check(*t))) != 1]
    results["triple_delta_expansion"] = (4096, fails)
    return results
