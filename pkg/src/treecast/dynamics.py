"""Exact evolution of conditional message-law pairs for finite-alphabet schemes.

The central recursion sends the pair ``(P+, P-)`` of message laws one level
up the tree: each child message law is the nu-mixture of the pair (optionally
pushed through a noise channel), the d children are independent given the
parent label, and the level's rule pushes the product law forward.  Costs are
``O(L^d)`` per level and everything is exact, no sampling.

Also here: contraction-ratio diagnostics for single rules, OR/AND-like
classification of Boolean functions, the log-barrier Lyapunov function for
1-bit schemes, an exhaustive restricted-SDPI scan, and the 3-symbol
intransitive "cycling" rule (evolved in log space, since its orbits approach
the simplex boundary beyond linear floating-point range).
"""

from __future__ import annotations

import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceBudgetError
from .metrics import hellinger2, kl, skl, tv
from .model import (
    CondPair,
    FiniteDist,
    LevelRule,
    ModelParams,
    NoiseChannel,
    ReconstructionScheme,
    make_params,
    posterior_scores,
)

__all__ = [
    "LevelRecord",
    "PairTrajectory",
    "evolve_pair",
    "skl_contraction_ratio",
    "BooleanClass",
    "classify_boolean",
    "lyapunov_phi",
    "calibrate_barrier",
    "SdpiScanResult",
    "restricted_sdpi_scan",
    "cycling_table",
    "cycling_demo",
    "identity_leaf",
    "or_table",
    "and_table",
    "majority_table",
    "majority_scheme",
    "tribes_scheme",
    "random_scheme",
]

#: Default cap on child-tuple evaluations per level.
TUPLE_BUDGET = 2**24


@dataclass(frozen=True)
class LevelRecord:
    """Summary of one trajectory level."""

    level: int
    skl: float
    tv: float
    hell2: float
    sigma2: float
    boundary_dist: float
    #: d * SKL of the channel-mixed child law, i.e. the divergence available
    #: before the level's pushforward (nan at level 0).
    pre_push_skl: float = math.nan

    @classmethod
    def from_pair(cls, level: int, pair: CondPair, pre_push_skl: float = math.nan):
        p, q = pair.plus.probs, pair.minus.probs
        return cls(
            level=level,
            skl=skl(p, q),
            tv=tv(p, q),
            hell2=hellinger2(p, q),
            sigma2=posterior_scores(pair).second_moment,
            boundary_dist=float(min(p.min(), q.min())),
            pre_push_skl=pre_push_skl,
        )


@dataclass(frozen=True)
class PairTrajectory:
    """Levels 0..n of an exact pair evolution."""

    records: tuple
    final_pair: CondPair
    #: per-level conditional pairs, when the caller asked for them
    pairs: tuple | None = None
    #: exact log of the boundary distance per level, kept for dynamics whose
    #: orbits underflow the linear scale (see cycling_demo); None otherwise.
    log_boundary_dist: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.records)

    def bernoulli_levels(self):
        """Per-level ``(P+(1), P-(1))`` for 1-bit trajectories."""
        if self.pairs is None:
            raise DomainError("trajectory was built without stored pairs")
        if self.final_pair.size != 2:
            raise DomainError("bernoulli view needs a 2-symbol alphabet")
        return [(float(p.plus.probs[1]), float(p.minus.probs[1])) for p in self.pairs]

    @property
    def skls(self) -> np.ndarray:
        return np.array([r.skl for r in self.records])

    @property
    def sigma2s(self) -> np.ndarray:
        return np.array([r.sigma2 for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("level,skl,tv,hell2,sigma2,boundary_dist\n")
        for r in self.records:
            buf.write(
                f"{r.level},{r.skl!r},{r.tv!r},{r.hell2!r},"
                f"{r.sigma2!r},{r.boundary_dist!r}\n"
            )
        return buf.getvalue()


def _joint_product(m: np.ndarray, d: int) -> np.ndarray:
    """Product law over child tuples, lexicographic, first child most significant."""
    out = m
    for _ in range(d - 1):
        out = np.kron(out, m)
    return out


def _push(rule: LevelRule, joint: np.ndarray, L: int) -> np.ndarray:
    if rule.deterministic:
        return np.bincount(rule.table, weights=joint, minlength=L)
    return joint @ rule.kernel


def evolve_pair(
    params: ModelParams,
    scheme: ReconstructionScheme,
    channel: NoiseChannel | None,
    depth: int,
    start: CondPair | None = None,
    budget: int = TUPLE_BUDGET,
) -> PairTrajectory:
    """Evolve ``(P+, P-)`` exactly for ``depth`` levels.

    Level 0 is the leaf rule applied to the root labels (or ``start`` when
    given).  One step forms ``M± = channel(mixture(P±, P∓, nu))``, takes the
    d-fold product and pushes it through the level's rule, summing over all
    ``L**d`` child tuples.  Each new pair is renormalized at construction;
    the recursion is otherwise exact.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if scheme.d != params.d:
        raise DomainError(f"scheme arity {scheme.d} != model arity {params.d}")
    L = scheme.alphabet
    if channel is not None and channel.size != L:
        raise DomainError("channel alphabet does not match the scheme")
    if L**scheme.d > budget:
        raise ResourceBudgetError(
            f"L**d = {L**scheme.d} exceeds the per-level budget {budget}"
        )
    pair = scheme.leaf_pair() if start is None else start
    if start is not None and start.size != L:
        raise DomainError("start pair alphabet does not match the scheme")
    records = [LevelRecord.from_pair(0, pair)]
    pairs = [pair]
    nu = params.nu
    for level in range(1, depth + 1):
        mp = (0.5 + nu) * pair.plus.probs + (0.5 - nu) * pair.minus.probs
        mm = (0.5 - nu) * pair.plus.probs + (0.5 + nu) * pair.minus.probs
        if channel is not None:
            mp = mp @ channel.kernel
            mm = mm @ channel.kernel
        pre = params.d * skl(mp / mp.sum(), mm / mm.sum())
        rule = scheme.rule_at(level)
        jp = _joint_product(mp, params.d)
        jm = _joint_product(mm, params.d)
        pair = CondPair(
            FiniteDist.from_weights(_push(rule, jp, L)),
            FiniteDist.from_weights(_push(rule, jm, L)),
        )
        records.append(LevelRecord.from_pair(level, pair, pre_push_skl=pre))
        pairs.append(pair)
    return PairTrajectory(records=tuple(records), final_pair=pair, pairs=tuple(pairs))


def skl_contraction_ratio(table, P: FiniteDist, Q: FiniteDist, d: int) -> float:
    """``SKL(f(P^d), f(Q^d)) / (d SKL(P, Q))`` for a deterministic rule.

    Data processing guarantees the value is at most 1.  Rejected when
    ``P = Q`` (a 0/0) or when the denominator is infinite.
    """
    rule = LevelRule(table=np.asarray(table))
    L = P.size
    rule.validate(L, d)
    if Q.size != L:
        raise DomainError("P and Q must share one alphabet")
    if np.array_equal(P.probs, Q.probs):
        raise DomainError("contraction ratio is undefined at P = Q")
    denom = d * skl(P, Q)
    if not math.isfinite(denom) or denom <= 0.0:
        raise DomainError("d * SKL(P, Q) must be finite and positive")
    fp = _push(rule, _joint_product(P.probs, d), L)
    fq = _push(rule, _joint_product(Q.probs, d), L)
    return skl(fp / fp.sum(), fq / fq.sum()) / denom


@dataclass(frozen=True)
class BooleanClass:
    """OR/AND-like flags of a Boolean function (they are not exclusive)."""

    or_like: bool
    and_like: bool
    constant: bool

    @property
    def label(self) -> str:
        if self.constant:
            return "constant"
        if self.or_like and self.and_like:
            return "or-and-like"
        if self.or_like:
            return "or-like"
        if self.and_like:
            return "and-like"
        return "neither"


def _is_or_like(f: np.ndarray, d: int) -> bool:
    weight1 = f[[1 << (d - 1 - k) for k in range(d)]]
    return bool(np.all(weight1 == weight1[0]) and weight1[0] != f[0])


def classify_boolean(table) -> BooleanClass:
    """Classify ``f: {0,1}^d -> {0,1}`` per the boundary-behavior taxonomy.

    OR-like: constant on Hamming-weight-1 inputs and differing there from
    ``f(0...0)``.  AND-like: the input/output-complemented function is
    OR-like.  A function can be both (e.g. XOR on two inputs).
    """
    f = np.asarray(table, dtype=np.int64)
    n = f.size
    d = n.bit_length() - 1
    if n != 1 << d or d < 1:
        raise DomainError("table length must be a power of two >= 2")
    if f.min() < 0 or f.max() > 1:
        raise DomainError("table entries must be bits")
    comp = 1 - f[::-1]  # index complement reverses the lexicographic order
    return BooleanClass(
        or_like=_is_or_like(f, d),
        and_like=_is_or_like(comp, d),
        constant=bool(np.all(f == f[0])),
    )


def lyapunov_phi(p: float, q: float, barrier_lambda: float) -> float:
    """log SKL(Ber(p), Ber(q)) minus a log-barrier on the mean parameter.

    ``phi = log SKL - lambda (log m + log(1 - m))`` with ``m = (p + q)/2``.
    The barrier term is nonnegative, so ``phi`` is increasing in ``lambda``.
    """
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise DomainError("p and q must lie strictly inside (0, 1)")
    if p == q:
        raise DomainError("phi is undefined at p = q (log of zero)")
    if barrier_lambda < 0.0:
        raise DomainError("barrier weight must be nonnegative")
    s = skl(np.array([1.0 - p, p]), np.array([1.0 - q, q]))
    m = (p + q) / 2.0
    return math.log(s) - barrier_lambda * (math.log(m) + math.log1p(-m))


def calibrate_barrier(
    pq_levels,
    grid=None,
    start_level: int = 5,
):
    """Pick the largest barrier weight giving monotone descent of phi.

    ``pq_levels`` is the per-level sequence of Bernoulli parameters
    ``(P+(1), P-(1))`` of a 1-bit trajectory.  Levels outside the open cube
    or with SKL underflowed to zero are excluded; descent is required from
    ``start_level`` to the end of the representable window.  Returns
    ``(lam, phis, levels)`` for the winning weight.
    """
    if grid is None:
        grid = [round(0.01 * k, 2) for k in range(1, 21)]
    window = []
    for n, (p, q) in enumerate(pq_levels):
        if n < start_level:
            continue
        if not (0.0 < p < 1.0 and 0.0 < q < 1.0) or p == q:
            continue
        s = skl(np.array([1.0 - p, p]), np.array([1.0 - q, q]))
        if not (0.0 < s < math.inf):
            continue
        window.append((n, p, q))
    if len(window) < 3:
        raise DomainError("trajectory window too short to calibrate a barrier")
    best = None
    for lam in grid:
        phis = [lyapunov_phi(p, q, lam) for _, p, q in window]
        if all(b < a for a, b in zip(phis, phis[1:])):
            best = (lam, phis)
    if best is None:
        raise DomainError("no barrier weight in the grid gives monotone descent")
    lam, phis = best
    return lam, np.array(phis), [n for n, _, _ in window]


@dataclass(frozen=True)
class SdpiScanResult:
    eta_hat: float
    table: np.ndarray
    P: FiniteDist
    Q: FiniteDist
    #: per-function maximum ratio, indexed like the enumeration order
    per_function: np.ndarray


def _simplex_grid(size: int, gamma: float, step: float):
    """All grid points of the simplex with every coordinate >= gamma."""
    if size == 2:
        for a in np.arange(gamma, 1.0 - gamma + 1e-12, step):
            yield np.array([1.0 - a, a])
        return
    coords = np.arange(gamma, 1.0, step)

    def rec(prefix, remaining, slots):
        if slots == 1:
            if remaining >= gamma - 1e-12:
                yield prefix + [remaining]
            return
        for c in coords:
            if remaining - c < gamma * (slots - 1) - 1e-12:
                break
            yield from rec(prefix + [c], remaining - c, slots - 1)

    for point in rec([], 1.0, size):
        yield np.array(point)


def restricted_sdpi_scan(
    d: int,
    sigma_size: int,
    gamma: float,
    grid_step: float,
    threads: int = 1,
    budget: int = 2**26,
) -> SdpiScanResult:
    """Exhaustive restricted-SDPI scan over all rules and a simplex grid.

    Enumerates every function ``Sigma^d -> Sigma`` and all grid pairs
    ``(P, Q)`` with minimum coordinate >= gamma and ``TV(P, Q) >= grid_step``,
    maximizing ``KL(f(P^d), f(Q^d)) / (d KL(P, Q))``.  The diagonal is
    excluded to avoid the 0/0 ratio.  Deterministic argmax: first maximizer
    in (function, P, Q) enumeration order; results do not depend on the
    worker count.
    """
    if sigma_size < 2 or d < 1:
        raise DomainError("need sigma_size >= 2 and d >= 1")
    if not (0.0 < gamma < 1.0 / sigma_size):
        raise DomainError("gamma must leave the simplex grid nonempty")
    n_tuples = sigma_size**d
    n_funcs = sigma_size**n_tuples
    grid = list(_simplex_grid(sigma_size, gamma, grid_step))
    pairs = [
        (i, j)
        for i in range(len(grid))
        for j in range(len(grid))
        if tv(grid[i], grid[j]) >= grid_step - 1e-12
    ]
    if n_funcs * len(pairs) * n_tuples > budget:
        raise ResourceBudgetError("scan size exceeds the evaluation budget")
    joints = np.array([_joint_product(g, d) for g in grid])
    kl_pair = {(i, j): d * kl(grid[i], grid[j]) for i, j in pairs}

    def eval_function(fi: int):
        digits = fi
        table = np.empty(n_tuples, dtype=np.int64)
        for t in range(n_tuples):
            table[t] = digits % sigma_size
            digits //= sigma_size
        pushed = np.zeros((len(grid), sigma_size))
        for sym in range(sigma_size):
            cols = table == sym
            pushed[:, sym] = joints[:, cols].sum(axis=1)
        pushed /= pushed.sum(axis=1, keepdims=True)
        best_r, best_pair = 0.0, None
        for i, j in pairs:
            num = kl(pushed[i], pushed[j])
            r = num / kl_pair[(i, j)]
            if r > best_r:
                best_r, best_pair = r, (i, j)
        return best_r, best_pair, table

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(eval_function, range(n_funcs)))
    else:
        results = [eval_function(fi) for fi in range(n_funcs)]

    per_function = np.array([r for r, _, _ in results])
    eta_hat, best = 0.0, None
    for r, pr, table in results:
        if pr is not None and r > eta_hat:
            eta_hat, best = r, (table, pr)
    if best is None:
        raise DomainError("scan grid produced no admissible pair")
    table, (i, j) = best
    return SdpiScanResult(
        eta_hat=eta_hat,
        table=table,
        P=FiniteDist(grid[i]),
        Q=FiniteDist(grid[j]),
        per_function=per_function,
    )


def cycling_table(d: int) -> np.ndarray:
    """The 3-symbol intransitive rule: OR-like on {0,1}, {1,2}, {2,0}.

    On tuples supported in {0,1} it is OR; in {1,2} it outputs 2 unless all
    ones; in {2,0} it outputs 0 unless all twos; with full support it is the
    plurality, ties broken toward the lowest symbol index.
    """
    table = []
    for tup in itertools.product(range(3), repeat=d):
        symbols = set(tup)
        if symbols <= {0, 1}:
            v = 0 if all(x == 0 for x in tup) else 1
        elif symbols <= {1, 2}:
            v = 1 if all(x == 1 for x in tup) else 2
        elif symbols <= {0, 2}:
            v = 2 if all(x == 2 for x in tup) else 0
        else:
            counts = [tup.count(k) for k in range(3)]
            v = int(np.argmax(counts))
        table.append(v)
    return np.array(table, dtype=np.int64)


def _logsumexp_groups(logs: np.ndarray, groups) -> np.ndarray:
    out = np.empty(len(groups))
    for k, g in enumerate(groups):
        chunk = logs[g]
        m = chunk.max()
        out[k] = m + math.log(np.exp(chunk - m).sum()) if m > -math.inf else -math.inf
    return out


def cycling_demo(
    steps: int,
    start: CondPair,
    params: ModelParams | None = None,
) -> PairTrajectory:
    """Evolve the intransitive 3-symbol rule from an interior starting pair.

    The orbit spirals around the simplex, approaching the boundary fast
    enough to leave linear float range, so the evolution runs on
    log-probabilities; the exact per-level log of the boundary distance is
    returned alongside the usual records.  Starting on the simplex boundary
    is rejected.
    """
    if params is None:
        params = make_params(2, 0.1)
    if start.size != 3:
        raise DomainError("the cycling rule lives on a 3-symbol alphabet")
    if min(start.plus.probs.min(), start.minus.probs.min()) <= 0.0:
        raise DomainError("start must lie in the open simplex")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    table = cycling_table(params.d)
    groups = [np.where(table == k)[0] for k in range(3)]
    la, lb = math.log(0.5 + params.nu), math.log(0.5 - params.nu)
    lp = np.log(start.plus.probs)
    lm = np.log(start.minus.probs)
    records = [LevelRecord.from_pair(0, start)]
    pairs = [start]
    log_bd = [float(min(lp.min(), lm.min()))]
    d = params.d
    for level in range(1, steps + 1):
        lmp = np.logaddexp(la + lp, lb + lm)
        lmm = np.logaddexp(lb + lp, la + lm)
        jp, jm = lmp, lmm
        for _ in range(d - 1):
            jp = (jp[:, None] + lmp[None, :]).ravel()
            jm = (jm[:, None] + lmm[None, :]).ravel()
        lp = _logsumexp_groups(jp, groups)
        lm = _logsumexp_groups(jm, groups)
        lp -= _logsumexp_groups(lp, [np.arange(3)])[0]
        lm -= _logsumexp_groups(lm, [np.arange(3)])[0]
        log_bd.append(float(min(lp.min(), lm.min())))
        pair = CondPair(
            FiniteDist.from_weights(np.exp(lp)), FiniteDist.from_weights(np.exp(lm))
        )
        records.append(LevelRecord.from_pair(level, pair))
        pairs.append(pair)
    return PairTrajectory(
        records=tuple(records),
        final_pair=pair,
        pairs=tuple(pairs),
        log_boundary_dist=np.array(log_bd),
    )


# --- scheme builders -------------------------------------------------------


def identity_leaf(L: int) -> np.ndarray:
    """Leaf rule sending +1 to the top symbol and -1 to the bottom one."""
    leaf = np.zeros((2, L))
    leaf[0, L - 1] = 1.0
    leaf[1, 0] = 1.0
    return leaf


def or_table(d: int) -> np.ndarray:
    return np.array([0 if x == 0 else 1 for x in range(2**d)], dtype=np.int64)


def and_table(d: int) -> np.ndarray:
    full = 2**d - 1
    return np.array([1 if x == full else 0 for x in range(2**d)], dtype=np.int64)


def majority_table(d: int) -> np.ndarray:
    if d % 2 == 0:
        raise DomainError("majority needs odd arity")
    return np.array(
        [1 if bin(x).count("1") > d // 2 else 0 for x in range(2**d)], dtype=np.int64
    )


def majority_scheme(d: int) -> ReconstructionScheme:
    return ReconstructionScheme(
        alphabet=2,
        d=d,
        leaf_rule=identity_leaf(2),
        levels=(LevelRule(table=majority_table(d)),),
        cycle=True,
    )


def tribes_scheme(d: int) -> ReconstructionScheme:
    """Alternating AND / OR levels (the TRIBES-style 1-bit scheme)."""
    return ReconstructionScheme(
        alphabet=2,
        d=d,
        leaf_rule=identity_leaf(2),
        levels=(LevelRule(table=and_table(d)), LevelRule(table=or_table(d))),
        cycle=True,
    )


def random_scheme(
    rng: np.random.Generator, L: int, d: int, stochastic: bool = False
) -> ReconstructionScheme:
    """A random single-level scheme with a random deterministic leaf embedding."""
    if stochastic:
        raw = rng.random((L**d, L))
        rule = LevelRule(kernel=raw / raw.sum(axis=1, keepdims=True))
    else:
        rule = LevelRule(table=rng.integers(0, L, size=L**d))
    leaf = np.zeros((2, L))
    leaf[0, rng.integers(0, L)] = 1.0
    leaf[1, rng.integers(0, L)] = 1.0
    return ReconstructionScheme(
        alphabet=L, d=d, leaf_rule=leaf, levels=(rule,), cycle=True
    )
