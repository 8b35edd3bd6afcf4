"""Statistical certification and trace diagnostics.

Monte-Carlo side: sample many independent walks and compare empirical
moment generating functions and tail frequencies of ``<theta, Y>``, where
``Y = V (x - x0)``, against the subgaussian guarantee
``E exp(<theta, Y>) <= exp(20 ||theta||^2)`` (parameter ``sqrt(40)``).

Deterministic side: :func:`analysis_diagnostics` rebuilds the subspaces
spanned by alive vectors along a recorded trace and evaluates the phase
projections, the good/bad step split, the potentials and the auxiliary
martingale processes, flagging any inequality that fails.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError
from .linalg import TOL_ORTH, TOL_RESID, orthonormal_basis
from .walk import Instance, Phase, Trace, phase_decomposition, sample_colorings, signed_discrepancy_trace

SIGMA = math.sqrt(40.0)
MGF_CONSTANT = 20.0
GOOD_THRESHOLD = 1.0 / 8.0
BAD_DISC_FACTOR = 16.0
POTENTIAL_WEIGHT = 4.0
MARGIN_SE = 3.0
DIAG_TOL = 1e-6
DELTA_SUM_TOL = 1e-9

PASS, WARN, FAIL = "PASS", "WARN", "FAIL"


# --------------------------------------------------------------------------
# Sampling


def _sample_chunk(args):
    inst, count, seed, start = args
    return sample_colorings(inst, count, seed, start=start)


def sample_colorings_parallel(inst: Instance, n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """Like :func:`sample_colorings`, optionally fanned out over processes.

    Each sample uses its own derived stream, so the result does not depend on
    ``workers``.
    """
    if workers <= 1 or n_samples < 2 * workers:
        return sample_colorings(inst, n_samples, seed)
    bounds = np.linspace(0, n_samples, workers + 1).astype(int)
    jobs = [(inst, int(b - a), seed, int(a)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_sample_chunk, jobs))
    return np.concatenate(parts, axis=0)


def discrepancy_samples(inst: Instance, n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """``N x m`` array of ``Y = V (x - x0)`` over independent walks."""
    x = sample_colorings_parallel(inst, n_samples, seed, workers)
    return (x - inst.x0) @ inst.vectors.T


def mgf_from_projections(proj: np.ndarray, lam: float) -> tuple[float, float]:
    """Sample mean of ``exp(lam * proj)`` and its standard error."""
    vals = np.exp(lam * np.asarray(proj, dtype=float))
    n = vals.size
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(vals.mean()), se


def empirical_mgf(inst: Instance, theta, lam: float, n_samples: int, seed: int, workers: int = 1):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (inst.m,):
        raise InputError(f"theta has shape {theta.shape}, expected ({inst.m},)")
    y = discrepancy_samples(inst, n_samples, seed, workers)
    return mgf_from_projections(y @ theta, lam)


# --------------------------------------------------------------------------
# Reports


@dataclass
class MgfCell:
    theta_index: int
    lam: float
    theta_norm: float
    estimate: float
    std_error: float
    bound: float
    verdict: str


@dataclass
class TailCell:
    theta_index: int
    t: float
    threshold: float
    empirical: float
    std_error: float
    bound: float
    verdict: str


@dataclass
class SubgaussReport:
    n_samples: int
    seed: int
    sigma_claimed: float = SIGMA
    mgf_constant: float = MGF_CONSTANT
    mgf: list[MgfCell] = field(default_factory=list)
    tails: list[TailCell] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        verdicts = {c.verdict for c in self.mgf} | {c.verdict for c in self.tails}
        if FAIL in verdicts:
            return FAIL
        return WARN if WARN in verdicts else PASS

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict
        return out


def _verdict(estimate: float, se: float, bound: float) -> str:
    margin = MARGIN_SE * se
    if estimate + margin <= bound:
        return PASS
    return WARN if estimate - margin <= bound else FAIL


def mgf_cells(y: np.ndarray, thetas, lambdas) -> list[MgfCell]:
    cells = []
    for k, theta in enumerate(np.atleast_2d(thetas)):
        proj = y @ theta
        tn = float(np.linalg.norm(theta))
        for lam in lambdas:
            est, se = mgf_from_projections(proj, lam)
            bound = math.exp(MGF_CONSTANT * lam**2 * tn**2)
            cells.append(MgfCell(k, float(lam), tn, est, se, bound, _verdict(est, se, bound)))
    return cells


def tail_cells(y: np.ndarray, thetas, ts=(1, 2, 3)) -> list[TailCell]:
    cells = []
    n = y.shape[0]
    for k, theta in enumerate(np.atleast_2d(thetas)):
        proj = np.abs(y @ theta)
        tn = float(np.linalg.norm(theta))
        for t in ts:
            threshold = SIGMA * t * tn
            p = float(np.mean(proj > threshold))
            se = math.sqrt(p * (1.0 - p) / n)
            bound = 2.0 * math.exp(-(t**2) / 2.0)
            cells.append(TailCell(k, float(t), threshold, p, se, bound, _verdict(p, se, bound)))
    return cells


def tail_test(inst: Instance, thetas, n_samples: int, seed: int, ts=(1, 2, 3), workers: int = 1) -> SubgaussReport:
    """Compare ``P(|<theta, Y>| > sqrt(40) t ||theta||)`` with ``2 exp(-t^2/2)``."""
    y = discrepancy_samples(inst, n_samples, seed, workers)
    return SubgaussReport(n_samples=n_samples, seed=seed, tails=tail_cells(y, thetas, ts))


def certify(
    inst: Instance, thetas, lambdas, n_samples: int, seed: int, ts=(1, 2, 3), workers: int = 1
) -> SubgaussReport:
    """MGF and tail checks computed from a single batch of samples."""
    y = discrepancy_samples(inst, n_samples, seed, workers)
    return SubgaussReport(
        n_samples=n_samples,
        seed=seed,
        mgf=mgf_cells(y, thetas, lambdas),
        tails=tail_cells(y, thetas, ts),
    )


# --------------------------------------------------------------------------
# Trace diagnostics


@dataclass
class PhaseView:
    """Analysis quantities along one trace for a fixed ``theta``.

    Per-step arrays have length ``T + 1`` and are indexed by time, entry 0
    holding the ``t = 0`` convention (``phi_b[0] = phi_e[0] = ||theta||^2``,
    ``good[0] = True``, ``x[0] = y[0] = 0``).
    """

    theta: np.ndarray
    phases: list[Phase]
    theta_k: np.ndarray
    good: np.ndarray
    phi_b: np.ndarray
    phi_e: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    disc: np.ndarray
    bad_disc_total: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _projections(vectors, theta, sets):
    out = []
    for idx in sets:
        q = orthonormal_basis(vectors[:, list(idx)])
        out.append(q @ (q.T @ theta))
    return out


def analysis_diagnostics(trace: Trace, inst: Instance, theta) -> PhaseView:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (inst.m,):
        raise InputError(f"theta has shape {theta.shape}, expected ({inst.m},)")
    if trace is None:
        raise InputError("a recorded trace is required")
    steps = trace.steps
    T = len(steps)
    vectors = inst.vectors
    tn2 = float(theta @ theta)

    v_sets = [tuple(range(inst.n))] + [tuple(i for i in s.alive if i != s.pivot) for s in steps]
    r_sets = [()] + [s.alive for s in steps]
    pv = _projections(vectors, theta, v_sets)  # pv[t] = projection onto V_t
    pr = _projections(vectors, theta, r_sets)  # pr[t] = projection onto R_t (t >= 1)

    phases = phase_decomposition(trace)
    start = np.zeros(T + 1, dtype=int)
    for ph in phases:
        start[ph.t_begin : ph.t_end + 1] = ph.t_begin

    disc = signed_discrepancy_trace(trace, inst, theta)
    xs = trace.colorings()
    violations: list[str] = []

    good = np.ones(T + 1, dtype=bool)
    phi_b = np.full(T + 1, tn2)
    phi_e = np.full(T + 1, tn2)
    xinc = np.zeros(T + 1)
    y = np.zeros(T + 1)
    for t in range(1, T + 1):
        rec = steps[t - 1]
        p = rec.pivot
        f = start[t]
        good[t] = np.linalg.norm(pv[f - 1] - pv[t]) <= GOOD_THRESHOLD
        base = float(pv[t] @ pv[t])
        tbar2 = float(np.sum((pr[t] - pv[t]) ** 2))
        x_prev, x_now = xs[t - 1][p], xs[t][p]
        d_disc = disc[t] - disc[t - 1]
        if good[t]:
            phi_b[t] = base + (1.0 - x_prev**2) * tbar2
            phi_e[t] = base + (1.0 - x_now**2) * tbar2
            xinc[t] = rec.delta_chosen * float(rec.v_perp @ theta) - POTENTIAL_WEIGHT * (x_now**2 - x_prev**2) * tbar2
            y[t] = y[t - 1] + d_disc
        else:
            phi_b[t] = phi_e[t] = base
            y[t] = y[t - 1]

        expected = rec.delta_chosen * float(theta @ rec.v_perp)
        if abs(d_disc - expected) > TOL_RESID * max(1.0, math.sqrt(tn2)) * inst.n:
            violations.append(f"t={t}: discrepancy increment {d_disc:.3e} != delta*<theta,v_perp> {expected:.3e}")
        if phi_b[t] > phi_e[t - 1] + DIAG_TOL:
            violations.append(f"t={t}: potential rose across step boundary ({phi_b[t]:.6g} > {phi_e[t - 1]:.6g})")
        if abs(xinc[t]) > 1.0 + DIAG_TOL:
            violations.append(f"t={t}: |X_t| = {abs(xinc[t]):.6g} exceeds 1")
    z = y + POTENTIAL_WEIGHT * phi_e
    for t in range(1, T + 1):
        if z[t] - z[t - 1] > xinc[t] + DIAG_TOL:
            violations.append(f"t={t}: Z increment {z[t] - z[t - 1]:.6g} exceeds X_t {xinc[t]:.6g}")

    theta_k = []
    deltas = np.array([0.0] + [s.delta_chosen for s in steps])
    for k, ph in enumerate(phases):
        tb, te = ph.t_begin, ph.t_end
        proj_k = pv[tb - 1] - pv[te]
        theta_k.append(proj_k)
        # every sub-interval [p, q] corresponds to a pair of prefix sums
        prefix = np.concatenate([[0.0], np.cumsum(deltas[tb : te + 1])])
        spread = prefix.max() - prefix.min()
        if spread > 2.0 + DELTA_SUM_TOL:
            violations.append(f"phase {k}: sub-interval step sum reaches {spread:.12g} > 2")
        window = disc[tb - 1 : te + 1]
        limit = 2.0 * float(np.linalg.norm(proj_k))
        if window.max() - window.min() > limit + DIAG_TOL:
            violations.append(
                f"phase {k}: sub-interval discrepancy {window.max() - window.min():.6g} > {limit:.6g}"
            )
        flags = good[tb : te + 1]
        if np.any(~flags[:-1] & flags[1:]):
            violations.append(f"phase {k}: a bad step is followed by a good one")
    theta_k = np.array(theta_k).reshape(len(phases), inst.m)

    gram = theta_k @ theta_k.T
    off = gram - np.diag(np.diag(gram))
    if off.size and np.max(np.abs(off)) > TOL_ORTH:
        violations.append(f"phase projections not orthogonal (max inner product {np.max(np.abs(off)):.3e})")
    if np.trace(gram) > tn2 + DIAG_TOL:
        violations.append(f"phase projections carry {np.trace(gram):.6g} > ||theta||^2 = {tn2:.6g}")

    bad_total = float(np.sum(np.diff(disc)[~good[1:]])) if T else 0.0
    if abs(bad_total) > BAD_DISC_FACTOR * tn2 + DIAG_TOL:
        violations.append(f"bad-step discrepancy {bad_total:.6g} exceeds 16||theta||^2 = {16 * tn2:.6g}")

    return PhaseView(
        theta=theta,
        phases=phases,
        theta_k=theta_k,
        good=good,
        phi_b=phi_b,
        phi_e=phi_e,
        x=xinc,
        y=y,
        z=z,
        disc=disc,
        bad_disc_total=bad_total,
        violations=violations,
    )
