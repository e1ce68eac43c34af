"""Seeded sampling of joint outcomes and chi-square agreement tests.

Randomness comes from numpy's PCG64 seeded with
``SeedSequence(seed, spawn_key=(crc32(purpose),))``, one stream per purpose
tag. Inverse-CDF sampling uses one double per draw, so a shard starting at
draw ``i`` can ``advance`` its own copy of the stream and the merged counts
equal the single-threaded ones.
"""

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .exceptions import InconsistentModelError, InvariantError
from .lhv import check_admissible
from .linalg import as_matrix, check_density

SIGNIFICANCE = 0.003
MIN_EXPECTED = 5.0


@dataclass(frozen=True, eq=False)
class OutcomeRecord:
    """Counts of joint outcomes ``(mu, nu)`` from ``n`` draws."""

    counts: np.ndarray
    n: int
    seed: int

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 2:
            raise InvariantError("shape", f"counts must be a 2-D table, got shape {c.shape}")
        if int(self.n) < 1:
            raise InvariantError("sample-size", f"record needs n >= 1, got {self.n}")
        if np.any(c < 0) or int(c.sum()) != int(self.n):
            raise InvariantError("counts", f"counts sum to {int(c.sum())}, expected n = {self.n}")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def frequencies(self):
        return self.counts / self.n

    def __eq__(self, other):
        if not isinstance(other, OutcomeRecord):
            return NotImplemented
        return self.n == other.n and self.seed == other.seed and np.array_equal(self.counts, other.counts)

    __hash__ = None


def stream(seed, purpose):
    """Bit generator for ``(seed, purpose)``; fresh and unshared on every call."""
    return np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(purpose.encode()),)))


def _uniforms(seed, purpose, start, size):
    bitgen = stream(seed, purpose)
    if start:
        bitgen.advance(start)
    return np.random.Generator(bitgen).random(size)


def _shards(n, workers):
    bounds = np.linspace(0, n, max(1, workers) + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def _run_shards(fn, n, workers):
    shards = _shards(n, workers)
    if len(shards) == 1:
        return fn(*shards[0])
    with ThreadPoolExecutor(max_workers=len(shards)) as pool:
        return sum(pool.map(lambda s: fn(*s), shards))


def outcome_probabilities(rho, povm_a, povm_b):
    """``q(mu, nu) = tr(rho (w_mu A_mu) (x) (v_nu B_nu))``."""
    m = as_matrix(rho)
    da, db = povm_a.dim, povm_b.dim
    if da * db != m.shape[0]:
        raise ValueError(f"dimension mismatch: {da} x {db} vs state size {m.shape[0]}")
    t = m.reshape(da, db, da, db)
    q = np.einsum("ajbk,mba,nkj->mn", t, povm_a.weighted_operators(), povm_b.weighted_operators()).real
    return q


def _inverse_cdf(cdf, u):
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_quantum(rho, povm_a, povm_b, n, seed, workers=1):
    """Draw ``n`` joint outcomes from the Born distribution.

    Cells are ordered row-major over ``(mu, nu)`` and sampled by inverse CDF
    from the ``"quantum"`` stream.

    Raises
    ------
    InvariantError
        If ``n < 1``, ``rho`` is not a state, or the outcome probabilities do
        not sum to one within 1e-12.
    """
    rho = check_density(rho)
    if int(n) < 1:
        raise InvariantError("sample-size", f"need n >= 1, got {n}")
    q = outcome_probabilities(rho, povm_a, povm_b)
    total = q.sum()
    if abs(total - 1.0) > 1e-12:
        raise InvariantError("completeness", f"outcome probabilities sum to {total:.15g}")
    if q.min() < -1e-12:
        raise InvariantError("positivity", f"negative outcome probability {q.min():.3e}")
    cdf = np.cumsum(np.clip(q, 0.0, None).ravel())
    cells = q.size

    def shard(lo, hi):
        idx = _inverse_cdf(cdf, _uniforms(seed, "quantum", lo, hi - lo))
        return np.bincount(idx, minlength=cells)

    counts = _run_shards(shard, int(n), workers)
    return OutcomeRecord(counts.reshape(q.shape), int(n), seed)


def lhv_probabilities(model):
    """Exact cell probabilities implied by an LHV model (weights applied)."""
    wa = model.table_a * model.povm_a.weights
    wb = model.table_b * model.povm_b.weights
    return wa.T @ (model.probabilities[:, None] * wb)


def sample_lhv(model, n, seed, workers=1):
    """Draw ``n`` outcomes by first sampling ``lam``, then ``mu`` and ``nu`` independently.

    Uses three streams: ``"lhv-lambda"``, ``"lhv-a"``, ``"lhv-b"``.

    Raises
    ------
    InconsistentModelError
        If the model is not admissible (its per-``lam`` weighted responses
        would not be probability distributions).
    """
    report = check_admissible(model)
    if not report.ok:
        raise InconsistentModelError(report, f"cannot sample an inadmissible model: {report.summary()}")
    if int(n) < 1:
        raise InvariantError("sample-size", f"need n >= 1, got {n}")
    cdf_lam = np.cumsum(np.clip(model.probabilities, 0.0, None))
    cdf_a = np.cumsum(np.clip(model.table_a * model.povm_a.weights, 0.0, None), axis=1)
    cdf_b = np.cumsum(np.clip(model.table_b * model.povm_b.weights, 0.0, None), axis=1)
    na, nb = len(model.povm_a), len(model.povm_b)

    def shard(lo, hi):
        size = hi - lo
        lam = _inverse_cdf(cdf_lam, _uniforms(seed, "lhv-lambda", lo, size))
        ua = _uniforms(seed, "lhv-a", lo, size)
        ub = _uniforms(seed, "lhv-b", lo, size)
        mu = np.empty(size, dtype=np.int64)
        nu = np.empty(size, dtype=np.int64)
        for k in np.unique(lam):
            sel = lam == k
            mu[sel] = _inverse_cdf(cdf_a[k], ua[sel])
            nu[sel] = _inverse_cdf(cdf_b[k], ub[sel])
        return np.bincount(mu * nb + nu, minlength=na * nb)

    counts = _run_shards(shard, int(n), workers)
    return OutcomeRecord(counts.reshape(na, nb), int(n), seed)


@dataclass
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float
    passed: bool
    significance: float
    bins: int
    merged_cells: int


def _merge_bins(expected_mass):
    """Group cells so each group has expected mass >= MIN_EXPECTED.

    Cells are taken in ascending expected mass; small cells are pooled
    until the pool reaches the threshold, and an undersized final pool is
    folded into the largest group. Returns one group label per cell.
    """
    flat = np.asarray(expected_mass, dtype=float).ravel()
    order = np.argsort(flat, kind="stable")
    labels = np.empty(flat.size, dtype=int)
    group, acc, merged = 0, 0.0, 0
    for i in order:
        labels[i] = group
        acc += flat[i]
        if acc >= MIN_EXPECTED:
            group += 1
            acc = 0.0
    if acc < MIN_EXPECTED and group > 0 and np.any(labels == group):
        labels[labels == group] = group - 1
    _, labels = np.unique(labels, return_inverse=True)
    merged = flat.size - (labels.max() + 1)
    return labels, int(merged)


def _report(stat, dof, significance, bins, merged):
    if dof <= 0:
        p = 1.0 if stat == 0 else 0.0
    else:
        p = float(chi2.sf(stat, dof)) if np.isfinite(stat) else 0.0
    return ChiSquareReport(float(stat), int(dof), p, p >= significance, significance, bins, merged)


def compare_statistics(record, expected, significance=SIGNIFICANCE):
    """Pearson goodness-of-fit of a record against an exact distribution.

    ``expected`` must have the record's table shape and sum to one. Cells
    with expected count below 5 are merged; any count in a cell of zero
    probability fails the test outright.
    """
    q = np.asarray(expected, dtype=float)
    if q.shape != record.counts.shape:
        raise ValueError(f"expected distribution shape {q.shape} != record shape {record.counts.shape}")
    if abs(q.sum() - 1.0) > 1e-9 or q.min() < -1e-12:
        raise ValueError("expected values must form a probability distribution")
    q = np.clip(q, 0.0, None)
    obs = record.counts.ravel()
    impossible = (q.ravel() <= 1e-15) & (obs > 0)
    if np.any(impossible):
        return ChiSquareReport(np.inf, 0, 0.0, False, significance, 0, 0)
    exp = record.n * q.ravel()
    labels, merged = _merge_bins(exp)
    o = np.bincount(labels, weights=obs)
    e = np.bincount(labels, weights=exp)
    live = e > 0
    stat = float(np.sum((o[live] - e[live]) ** 2 / e[live]))
    bins = int(live.sum())
    return _report(stat, bins - 1, significance, bins, merged)


def compare_records(a, b, significance=SIGNIFICANCE):
    """Chi-square homogeneity test between two records with the same cells."""
    if a.counts.shape != b.counts.shape:
        raise ValueError(f"record shapes differ: {a.counts.shape} vs {b.counts.shape}")
    oa, ob = a.counts.ravel().astype(float), b.counts.ravel().astype(float)
    pooled = (oa + ob) / (a.n + b.n)
    labels, merged = _merge_bins(np.minimum(a.n, b.n) * pooled)
    ga = np.bincount(labels, weights=oa)
    gb = np.bincount(labels, weights=ob)
    pool = (ga + gb) / (a.n + b.n)
    live = pool > 0
    ea, eb = a.n * pool[live], b.n * pool[live]
    stat = float(np.sum((ga[live] - ea) ** 2 / ea) + np.sum((gb[live] - eb) ** 2 / eb))
    bins = int(live.sum())
    return _report(stat, bins - 1, significance, bins, merged)
