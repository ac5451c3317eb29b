"""Core value types for broadcasting on d-ary trees.

The broadcast process flips a ±1 root label independently across each edge
with probability ``epsilon``.  Everything downstream (exact pair dynamics,
belief propagation, quantized schemes) consumes the small set of immutable
types defined here: model parameters with their derived scalars, probability
vectors over a finite message alphabet, conditional pairs (P+, P-), atomic
score distributions on [-1, 1], per-level reconstruction schemes, and noise
channels.

All types are frozen after construction and every operation is a pure
function, so values can be shared freely across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelParams",
    "FiniteDist",
    "CondPair",
    "ScoreDist",
    "NoiseChannel",
    "LevelRule",
    "ReconstructionScheme",
    "make_params",
    "mixture",
    "posterior_scores",
    "scheme_from_json",
    "scheme_to_json",
]

#: Tolerance used when validating that probability weights sum to one.
SUM_TOL = 1e-12

#: Score atoms closer than this are merged into a single atom.
ATOM_MERGE_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelParams:
    """Broadcast model parameters and their derived scalars.

    ``nu = 1/2 - epsilon``, ``theta = 1 - 2 epsilon``, ``lam = sqrt(d) theta``
    and ``eps_c = (1 - d^{-1/2}) / 2``.  Reconstruction on the infinite d-ary
    tree is solvable iff ``epsilon < eps_c``, equivalently ``lam > 1``,
    equivalently ``4 d nu^2 > 1``.
    """

    d: int
    epsilon: float
    nu: float = field(init=False)
    theta: float = field(init=False)
    lam: float = field(init=False)
    eps_c: float = field(init=False)

    def __post_init__(self) -> None:
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise DomainError(f"arity d must be an integer >= 2, got {self.d!r}")
        if not (0.0 < self.epsilon < 0.5):
            raise DomainError(f"epsilon must lie in (0, 1/2), got {self.epsilon!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "nu", 0.5 - self.epsilon)
        object.__setattr__(self, "theta", 1.0 - 2.0 * self.epsilon)
        object.__setattr__(self, "lam", math.sqrt(self.d) * self.theta)
        object.__setattr__(self, "eps_c", (1.0 - self.d ** -0.5) / 2.0)

    @property
    def solvable(self) -> bool:
        """Whether reconstruction is information-theoretically solvable."""
        return self.epsilon < self.eps_c


def make_params(d: int, epsilon: float) -> ModelParams:
    """Validate ``(d, epsilon)`` and populate all derived scalars."""
    return ModelParams(d=d, epsilon=float(epsilon))


@dataclass(frozen=True)
class FiniteDist:
    """A probability vector over the alphabet ``0 .. m-1``.

    The constructor checks nonnegativity and that the weights sum to one
    within ``SUM_TOL``, then renormalizes exactly once.  Renormalization
    happens only here, never silently mid-computation.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("probs must be a nonempty 1-D vector")
        if np.any(p < -SUM_TOL) or not np.all(np.isfinite(p)):
            raise DomainError("probabilities must be finite and nonnegative")
        p = np.where(p < 0.0, 0.0, p)
        s = p.sum()
        if abs(s - 1.0) > 1e-9:
            raise DomainError(f"probabilities must sum to 1, got {s!r}")
        object.__setattr__(self, "probs", _readonly(p / s))

    @classmethod
    def from_weights(cls, weights) -> "FiniteDist":
        """Build from an arbitrary nonnegative weight vector (normalizes)."""
        w = np.asarray(weights, dtype=float)
        s = w.sum()
        if not np.isfinite(s) or s <= 0.0:
            raise DomainError("weights must have positive finite total mass")
        return cls(w / s)

    @classmethod
    def point_mass(cls, symbol: int, size: int) -> "FiniteDist":
        p = np.zeros(size)
        p[symbol] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, size: int) -> "FiniteDist":
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class CondPair:
    """The pair of message laws conditioned on the root label being +1 / -1."""

    plus: FiniteDist
    minus: FiniteDist

    def __post_init__(self) -> None:
        if self.plus.size != self.minus.size:
            raise DomainError("plus and minus must share one alphabet")

    @property
    def size(self) -> int:
        return self.plus.size

    def swapped(self) -> "CondPair":
        return CondPair(self.minus, self.plus)


def mixture(P: FiniteDist, Q: FiniteDist, delta: float) -> FiniteDist:
    """The symmetric mixture ``(1/2 + delta) P + (1/2 - delta) Q``.

    ``delta`` must lie in [0, 1/2]; ``delta = 1/2`` returns ``P`` and
    ``delta = 0`` the balanced average.
    """
    if P.size != Q.size:
        raise DomainError("mixture requires a common alphabet")
    if not (0.0 <= delta <= 0.5):
        raise DomainError(f"delta must lie in [0, 1/2], got {delta!r}")
    return FiniteDist((0.5 + delta) * P.probs + (0.5 - delta) * Q.probs)


def _merge_atoms(values: np.ndarray, weights: np.ndarray):
    """Sort atoms, add weights of values closer than ATOM_MERGE_TOL, drop zeros."""
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    keep = w > 0.0
    v, w = v[keep], w[keep]
    if v.size == 0:
        raise DomainError("distribution has no mass")
    mv, mw = [v[0]], [w[0]]
    for x, wx in zip(v[1:], w[1:]):
        if x - mv[-1] < ATOM_MERGE_TOL:
            mw[-1] += wx
        else:
            mv.append(x)
            mw.append(wx)
    return np.array(mv), np.array(mw)


@dataclass(frozen=True)
class ScoreDist:
    """Atomic law of a posterior score ``S = E[X | Y]`` on [-1, 1].

    ``values`` are strictly increasing, ``weights`` positive and summing to
    one; atoms within ``ATOM_MERGE_TOL`` of each other are merged at
    construction and zero-weight atoms dropped.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.shape != w.shape or v.ndim != 1:
            raise DomainError("values and weights must be matching 1-D vectors")
        if np.any(w < -SUM_TOL) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        if np.any(np.abs(v) > 1.0 + SUM_TOL):
            raise DomainError("score values must lie in [-1, 1]")
        v = np.clip(v, -1.0, 1.0)
        w = np.where(w < 0.0, 0.0, w)
        s = w.sum()
        if abs(s - 1.0) > 1e-9:
            raise DomainError(f"score weights must sum to 1, got {s!r}")
        v, w = _merge_atoms(v, w / s)
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    @property
    def second_moment(self) -> float:
        return float(np.dot(self.weights, self.values**2))

    @property
    def fourth_moment(self) -> float:
        return float(np.dot(self.weights, self.values**4))

    # short aliases used throughout the numerics
    @property
    def sigma2(self) -> float:
        return self.second_moment

    @property
    def mu4(self) -> float:
        return self.fourth_moment

    def negated(self) -> "ScoreDist":
        return ScoreDist(-self.values[::-1], self.weights[::-1])

    def symmetrized(self) -> "ScoreDist":
        """The even mixture of the law and its mirror image."""
        return ScoreDist(
            np.concatenate([self.values, -self.values]),
            np.concatenate([self.weights, self.weights]) / 2.0,
        )

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        neg = self.negated()
        if neg.values.size != self.values.size:
            return False
        return bool(
            np.all(np.abs(neg.values - self.values) <= tol)
            and np.all(np.abs(neg.weights - self.weights) <= tol)
        )


def posterior_scores(pair: CondPair) -> ScoreDist:
    """The exact law of the score ``S = E[X | Y]`` under a uniform root prior.

    Each symbol ``y`` with positive total mass contributes an atom at
    ``(P+(y) - P-(y)) / (P+(y) + P-(y))`` carrying weight
    ``(P+(y) + P-(y)) / 2``; zero-mass symbols are dropped and equal-valued
    atoms merged.  The second moment of the result is the chi-square
    information between the root label and the message.
    """
    p, q = pair.plus.probs, pair.minus.probs
    tot = p + q
    mask = tot > 0.0
    s = (p[mask] - q[mask]) / tot[mask]
    return ScoreDist(s, tot[mask] / 2.0)


@dataclass(frozen=True)
class NoiseChannel:
    """A row-stochastic kernel on the message alphabet.

    ``kernel[x, y]`` is the probability the channel outputs ``y`` on input
    ``x``.  Distributions are pushed through with ``apply``.
    """

    kernel: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise DomainError("channel kernel must be a square matrix")
        if np.any(k < -SUM_TOL) or not np.all(np.isfinite(k)):
            raise DomainError("channel kernel entries must be finite and nonnegative")
        k = np.where(k < 0.0, 0.0, k)
        sums = k.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise DomainError("channel kernel rows must sum to 1")
        object.__setattr__(self, "kernel", _readonly(k / sums[:, None]))

    @classmethod
    def identity(cls, size: int) -> "NoiseChannel":
        return cls(np.eye(size))

    @classmethod
    def mixture(cls, delta: float, mu: FiniteDist) -> "NoiseChannel":
        """Channel that keeps its input w.p. ``1 - delta`` and resamples from ``mu``."""
        if not (0.0 <= delta <= 1.0):
            raise DomainError(f"delta must lie in [0, 1], got {delta!r}")
        size = mu.size
        return cls((1.0 - delta) * np.eye(size) + delta * np.tile(mu.probs, (size, 1)))

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    def apply(self, dist: FiniteDist) -> FiniteDist:
        if dist.size != self.size:
            raise DomainError("distribution and channel alphabets differ")
        return FiniteDist(dist.probs @ self.kernel)


@dataclass(frozen=True)
class LevelRule:
    """One level's reconstruction rule, mapping d child messages to one.

    Either a deterministic lookup ``table`` of length ``L**d`` (row-major over
    child tuples, first child most significant) or a row-stochastic ``kernel``
    of shape ``(L**d, L)``.
    """

    table: np.ndarray | None = None
    kernel: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.table is None) == (self.kernel is None):
            raise DomainError("a level rule is either a table or a kernel")
        if self.table is not None:
            t = np.asarray(self.table, dtype=np.int64)
            if t.ndim != 1:
                raise DomainError("rule table must be 1-D")
            t.setflags(write=False)
            object.__setattr__(self, "table", t)
        else:
            k = np.asarray(self.kernel, dtype=float)
            if k.ndim != 2:
                raise DomainError("rule kernel must be 2-D")
            if np.any(k < -SUM_TOL) or not np.all(np.isfinite(k)):
                raise DomainError("rule kernel entries must be finite and nonnegative")
            k = np.where(k < 0.0, 0.0, k)
            sums = k.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-9):
                raise DomainError("rule kernel rows must sum to 1")
            object.__setattr__(self, "kernel", _readonly(k / sums[:, None]))

    @property
    def deterministic(self) -> bool:
        return self.table is not None

    def validate(self, L: int, d: int) -> None:
        n = L**d
        if self.deterministic:
            if self.table.size != n:
                raise DomainError(f"table must have {n} entries, got {self.table.size}")
            if self.table.min() < 0 or self.table.max() >= L:
                raise DomainError("table entries must lie in 0..L-1")
        else:
            if self.kernel.shape != (n, L):
                raise DomainError(f"kernel must have shape ({n}, {L})")


@dataclass(frozen=True)
class ReconstructionScheme:
    """Per-level message-passing rules, constant within each level.

    ``leaf_rule`` is a row-stochastic 2 x L kernel giving the law of the leaf
    message for root-label +1 (row 0) and -1 (row 1).  ``levels`` are applied
    bottom-up; with ``cycle`` set the list is reused periodically once depth
    exceeds its length, otherwise deeper evolution is an error.
    """

    alphabet: int
    d: int
    leaf_rule: np.ndarray
    levels: tuple
    cycle: bool = False

    def __post_init__(self) -> None:
        if self.alphabet < 1:
            raise DomainError("alphabet size must be >= 1")
        if self.d < 1:
            raise DomainError("arity must be >= 1")
        leaf = np.asarray(self.leaf_rule, dtype=float)
        if leaf.shape != (2, self.alphabet):
            raise DomainError(f"leaf rule must have shape (2, {self.alphabet})")
        if np.any(leaf < -SUM_TOL) or np.any(np.abs(leaf.sum(axis=1) - 1.0) > 1e-9):
            raise DomainError("leaf rule rows must be probability vectors")
        leaf = np.where(leaf < 0.0, 0.0, leaf)
        object.__setattr__(self, "leaf_rule", _readonly(leaf / leaf.sum(axis=1)[:, None]))
        if not self.levels:
            raise DomainError("a scheme needs at least one level rule")
        for rule in self.levels:
            rule.validate(self.alphabet, self.d)
        object.__setattr__(self, "levels", tuple(self.levels))

    def rule_at(self, level: int) -> LevelRule:
        """Rule applied at reconstruction level ``level`` (1-based above leaves)."""
        if level < 1:
            raise DomainError("levels are 1-based")
        idx = level - 1
        if idx >= len(self.levels):
            if not self.cycle:
                raise DomainError(
                    f"depth {level} exceeds the {len(self.levels)} declared levels "
                    "and the scheme does not cycle"
                )
            idx %= len(self.levels)
        return self.levels[idx]

    def leaf_pair(self) -> CondPair:
        return CondPair(FiniteDist(self.leaf_rule[0]), FiniteDist(self.leaf_rule[1]))


def scheme_from_json(text: str) -> ReconstructionScheme:
    """Parse the JSON scheme document.

    Schema::

        {"alphabet": L, "d": d, "leaf": [[...], [...]],
         "levels": [{"table": [...]} | {"kernel": [[...], ...]}],
         "cycle": true|false}

    Tables are row-major over child tuples in lexicographic order (first
    child most significant).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid scheme JSON: {exc}") from exc
    try:
        levels = []
        for entry in doc["levels"]:
            if "table" in entry:
                levels.append(LevelRule(table=np.asarray(entry["table"])))
            else:
                levels.append(LevelRule(kernel=np.asarray(entry["kernel"])))
        return ReconstructionScheme(
            alphabet=int(doc["alphabet"]),
            d=int(doc["d"]),
            leaf_rule=np.asarray(doc["leaf"], dtype=float),
            levels=tuple(levels),
            cycle=bool(doc.get("cycle", False)),
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed scheme document: {exc}") from exc


def scheme_to_json(scheme: ReconstructionScheme) -> str:
    levels = []
    for rule in scheme.levels:
        if rule.deterministic:
            levels.append({"table": rule.table.tolist()})
        else:
            levels.append({"kernel": rule.kernel.tolist()})
    return json.dumps(
        {
            "alphabet": scheme.alphabet,
            "d": scheme.d,
            "leaf": scheme.leaf_rule.tolist(),
            "levels": levels,
            "cycle": scheme.cycle,
        }
    )
