"""The L-level quantized belief propagation scheme at arity two.

Each level computes the exact two-child posterior score and rounds it into
``L`` symmetric intervals of [-1, 1]; leaves observe their label through a
binary symmetric channel whose flip rate pins the level-0 second moment to
``A = 2 (lam - 1) / lam^3``.  For ``L >= lam^3 / (2 (lam - 1)^2)`` the second
moment stays inside the invariant interval ``[A, B]`` with
``B = 4 (lam^2 - 1) / lam^4``.

The recursion is exact (O(L^2) per level).  Two numerical safeguards keep it
faithful over hundreds of levels: pairs are renormalized at construction
every level (the product recursion doubles any relative mass error per level
otherwise), and the reflection symmetry ``P-(k) = P+(L+1-k)`` is enforced
exactly after being verified to hold within 1e-12.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import LevelRecord, PairTrajectory
from .errors import DomainError, ResourceBudgetError
from .metrics import eps_critical
from .model import CondPair, FiniteDist

__all__ = [
    "QbpConfig",
    "QbpTrajectory",
    "quantize_symmetric",
    "qbp_evolve",
    "ThresholdRow",
    "ThresholdTable",
    "threshold_scan",
    "PowerlawFit",
    "powerlaw_fit",
]

#: Largest alphabet the exact O(L^2) recursion will accept.
L_BUDGET = 4096


@dataclass(frozen=True)
class QbpConfig:
    """Parameters of the quantized-BP run, with the derived interval data.

    ``lam = sqrt(2) (1 - 2 eps)`` must exceed one (below-threshold noise).
    ``delta0`` defaults to the leaf flip probability solving
    ``(1 - 2 delta0)^2 = A``; passing it explicitly (e.g. 0 for noiseless
    leaves) is allowed for experiments and skips that identity.
    """

    L: int
    epsilon: float
    delta0: float | None = None
    lam: float = field(init=False)
    A: float = field(init=False)
    B: float = field(init=False)
    L_min: float = field(init=False)

    def __post_init__(self) -> None:
        if self.L < 2:
            raise DomainError("alphabet size must be >= 2")
        if not (0.0 <= self.epsilon < 0.5):
            raise DomainError(f"epsilon must lie in [0, 1/2), got {self.epsilon!r}")
        lam = math.sqrt(2.0) * (1.0 - 2.0 * self.epsilon)
        if lam <= 1.0:
            raise DomainError(
                f"lambda = sqrt(2)(1 - 2 eps) = {lam!r} <= 1: above threshold"
            )
        A = 2.0 * (lam - 1.0) / lam**3
        B = 4.0 * (lam**2 - 1.0) / lam**4
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "L_min", lam**3 / (2.0 * (lam - 1.0) ** 2))
        if self.delta0 is None:
            object.__setattr__(self, "delta0", (1.0 - math.sqrt(A)) / 2.0)
        elif not (0.0 <= self.delta0 < 0.5):
            raise DomainError("delta0 must lie in [0, 1/2)")

    @property
    def theta(self) -> float:
        return 1.0 - 2.0 * self.epsilon

    @property
    def nu(self) -> float:
        return 0.5 - self.epsilon


def quantize_symmetric(score: float, L: int) -> int:
    """Index (1-based) of the length-2/L interval of [-1, 1] containing ``score``.

    Exact boundary values go to the adjacent interval whose midpoint is
    nearer zero; the midpoint boundary of an even-L grid (score exactly 0) is
    a tie resolved to the lower index.  The map then commutes with negation
    composed with the index reflection ``k -> L + 1 - k`` except at that tie,
    which the distribution-level evolution splits evenly instead.
    """
    if L < 2:
        raise DomainError("L must be >= 2")
    if abs(score) > 1.0:
        raise DomainError(f"score must lie in [-1, 1], got {score!r}")
    u = (score + 1.0) * L / 2.0
    idx = math.floor(u)
    if u == idx and 0 < u < L:
        # boundary between intervals idx and idx+1 (1-based)
        if score > 0.0:
            idx -= 1  # lower interval is nearer zero
        elif score == 0.0:
            idx -= 1  # equidistant tie: lower index
    return int(min(max(idx, 0), L - 1)) + 1


@dataclass(frozen=True)
class QbpTrajectory:
    config: QbpConfig
    sigma2: np.ndarray
    #: second moment of the pre-quantization score at each level (nan at 0)
    hat_sigma2: np.ndarray
    trajectory: PairTrajectory

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("level,sigma2\n")
        for lev, s in enumerate(self.sigma2):
            buf.write(f"{lev},{float(s)!r}\n")
        return buf.getvalue()


def _pair_sigma2(pp: np.ndarray, pm: np.ndarray) -> float:
    tot = pp + pm
    mask = tot > 0.0
    s = (pp[mask] - pm[mask]) / tot[mask]
    return float(np.sum(tot[mask] / 2.0 * s * s))


def _qbp_step(pp: np.ndarray, pm: np.ndarray, nu: float, L: int):
    """One exact level of the quantized recursion; returns pair and hat moment."""
    mp = (0.5 + nu) * pp + (0.5 - nu) * pm
    mm = (0.5 - nu) * pp + (0.5 + nu) * pm
    a = np.outer(mp, mp).ravel()
    b = np.outer(mm, mm).ravel()
    tot = a + b
    mask = tot > 0.0
    s_hat = np.zeros_like(a)
    s_hat[mask] = (a[mask] - b[mask]) / tot[mask]
    hat_mass = tot[mask].sum() / 2.0
    hat_sigma2 = float(np.sum(tot[mask] / 2.0 * s_hat[mask] ** 2) / hat_mass)
    u = (s_hat + 1.0) * L / 2.0
    fu = np.floor(u)
    idx = np.clip(fu.astype(np.int64), 0, L - 1)
    boundary = (u == fu) & (u > 0.0) & (u < L)
    idx[boundary & (s_hat > 0.0)] -= 1
    tie = boundary & (s_hat == 0.0)
    live = mask & ~tie
    newp = np.bincount(idx[live], weights=a[live], minlength=L)
    newm = np.bincount(idx[live], weights=b[live], minlength=L)
    tie &= mask
    if tie.any():
        k = idx[tie]
        for kk in (k, k - 1):
            newp += 0.5 * np.bincount(kk, weights=a[tie], minlength=L)
            newm += 0.5 * np.bincount(kk, weights=b[tie], minlength=L)
    newp /= newp.sum()
    newm /= newm.sum()
    drift = np.abs(newm - newp[::-1]).max()
    if drift > 1e-12:
        raise DomainError(f"reflection symmetry drifted to {drift!r}")
    # exact symmetry, averaging the two conditionals' information
    pp = 0.5 * (newp + newm[::-1])
    pp /= pp.sum()
    return pp, pp[::-1].copy(), hat_sigma2


def qbp_evolve(
    config: QbpConfig,
    depth: int,
    record_pairs: bool = True,
    stop_sigma2: float | None = None,
) -> QbpTrajectory:
    """Run the quantized-BP recursion for ``depth`` levels.

    Level 0 maps the leaf BSC onto the two extreme symbols.  When
    ``stop_sigma2`` is given the run ends early once the posterior second
    moment falls below it (used by the threshold scanner; such trajectories
    are shorter than ``depth + 1`` levels).
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    L = config.L
    if L > L_BUDGET:
        raise ResourceBudgetError(f"L = {L} exceeds the O(L^2) budget {L_BUDGET}")
    pp = np.zeros(L)
    pp[L - 1] = 1.0 - config.delta0
    pp[0] = config.delta0
    pm = pp[::-1].copy()
    sigma2 = [_pair_sigma2(pp, pm)]
    hat = [math.nan]
    records = []
    pairs = []
    if record_pairs:
        pairs.append(CondPair(FiniteDist(pp), FiniteDist(pm)))
        records.append(LevelRecord.from_pair(0, pairs[0]))
    for level in range(1, depth + 1):
        pp, pm, h = _qbp_step(pp, pm, config.nu, L)
        sigma2.append(_pair_sigma2(pp, pm))
        hat.append(h)
        if record_pairs:
            pairs.append(CondPair(FiniteDist(pp), FiniteDist(pm)))
            records.append(LevelRecord.from_pair(level, pairs[-1]))
        if stop_sigma2 is not None and sigma2[-1] < stop_sigma2:
            break
    pair = CondPair(FiniteDist(pp), FiniteDist(pm))
    if not records:
        records = [LevelRecord.from_pair(len(sigma2) - 1, pair)]
        pairs = [pair]
    return QbpTrajectory(
        config=config,
        sigma2=np.array(sigma2),
        hat_sigma2=np.array(hat),
        trajectory=PairTrajectory(
            records=tuple(records), final_pair=pair, pairs=tuple(pairs)
        ),
    )


@dataclass(frozen=True)
class ThresholdRow:
    L: int
    eps_of_L: float
    iters: int
    sigma2_probe: float


@dataclass(frozen=True)
class ThresholdTable:
    rows: tuple
    eps_c: float

    def __post_init__(self) -> None:
        Ls = [r.L for r in self.rows]
        if Ls != sorted(Ls):
            raise DomainError("threshold table rows must be sorted by L")
        if any(r.eps_of_L >= self.eps_c for r in self.rows):
            raise DomainError("every eps(L) must lie strictly below eps_c")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("L,eps_of_L,eps_c,gap,iters\n")
        for r in self.rows:
            gap = self.eps_c - r.eps_of_L
            buf.write(f"{r.L},{r.eps_of_L!r},{self.eps_c!r},{gap!r},{r.iters}\n")
        return buf.getvalue()


def _survives(L: int, eps: float, probe_depth: int, survive_tol: float) -> bool:
    """Magnitude plus stabilization classification of one (L, eps) run.

    Stabilization compares the means of the last two windows of length
    ``probe_depth // 10``: the quantized dynamics settle into small limit
    cycles whose level-to-level wiggle would defeat a pointwise comparison,
    while slow decay moves the window means apart and is still caught.
    """
    lam = math.sqrt(2.0) * (1.0 - 2.0 * eps)
    if lam <= 1.0:
        return False
    traj = qbp_evolve(
        QbpConfig(L=L, epsilon=eps),
        probe_depth,
        record_pairs=False,
        stop_sigma2=1e-12,
    )
    s = traj.sigma2
    if s.size < probe_depth + 1:
        return False
    w = max(10, probe_depth // 10)
    recent = float(s[-w:].mean())
    previous = float(s[-2 * w : -w].mean())
    return recent > survive_tol and abs(recent - previous) <= 1e-4 * recent


def threshold_scan(
    L_list,
    probe_depth: int = 800,
    survive_tol: float = 1e-3,
    bisect_tol: float = 1e-4,
    threads: int = 1,
) -> ThresholdTable:
    """Bisect the survival threshold eps(L) of quantized BP for each L.

    Returns the bisection midpoints at tolerance ``bisect_tol``; rows are
    assembled in L order regardless of the worker count.
    """
    if bisect_tol < 1e-6:
        raise DomainError("bisect_tol below 1e-6 is not resolvable at desk scale")
    L_list = list(L_list)
    if any(L < 2 for L in L_list):
        raise DomainError("every L must be >= 2")
    eps_c = eps_critical(2)

    def scan_one(L: int) -> ThresholdRow:
        lo, hi = 1e-4, eps_c - 1e-9
        if not _survives(L, lo, probe_depth, survive_tol):
            raise DomainError(f"quantized BP with L = {L} dies even at eps = {lo}")
        iters = 0
        while hi - lo > bisect_tol:
            mid = (lo + hi) / 2.0
            if _survives(L, mid, probe_depth, survive_tol):
                lo = mid
            else:
                hi = mid
            iters += 1
        eps_L = (lo + hi) / 2.0
        probe = qbp_evolve(
            QbpConfig(L=L, epsilon=lo), probe_depth, record_pairs=False
        )
        return ThresholdRow(
            L=L, eps_of_L=eps_L, iters=iters, sigma2_probe=float(probe.sigma2[-1])
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(scan_one, sorted(L_list)))
    else:
        rows = [scan_one(L) for L in sorted(L_list)]
    return ThresholdTable(rows=tuple(rows), eps_c=eps_c)


@dataclass(frozen=True)
class PowerlawFit:
    slope: float
    intercept: float
    r2: float


def powerlaw_fit(table: ThresholdTable) -> PowerlawFit:
    """Least squares of ``log(eps_c - eps(L))`` against ``log L``."""
    rows = table.rows
    if len(rows) < 4:
        raise DomainError("powerlaw fit needs at least 4 rows")
    gaps = np.array([table.eps_c - r.eps_of_L for r in rows])
    if np.any(gaps <= 0.0):
        raise DomainError("gaps must be positive to fit a power law")
    x = np.log([r.L for r in rows])
    if np.ptp(x) == 0.0:
        raise DomainError("degenerate table: all rows share one L")
    y = np.log(gaps)
    design = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([slope, intercept])
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return PowerlawFit(slope=float(slope), intercept=float(intercept), r2=r2)
