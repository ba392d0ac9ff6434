"""Constrained entropy maximization over m-podal step graphons.

Implements the variational principle: maximize graphon Shannon entropy
subject to pattern-density constraints, by augmented-Lagrangian projected
gradient ascent with analytic gradients and deterministic multistart.
Block values are kept strictly inside (0,1) during ascent because the
entropy gradient diverges at the endpoints; masses are optimized as
normalized positive variables so they stay exactly on the simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gradients import DensityEvaluator, EntropyObjective, mass_chain_rule
from .graphon import (
    ConstraintVector,
    StepGraphon,
    SubgraphPattern,
    canonicalize,
    graphon_entropy,
    subgraph_density,
    DEFAULT_MERGE_TOL,
)

M_CAP = 16


@dataclass(frozen=True)
class OptimizerOptions:
    """Tuning knobs for the augmented-Lagrangian multistart solver."""

    n_starts: int = 40
    seed: int = 0
    feasibility_tol: float = 1e-8
    penalty_init: float = 10.0
    penalty_growth: float = 5.0
    max_outer: int = 12
    max_inner: int = 300
    value_floor: float = 1e-9
    mass_floor: float = 1e-6
    gtol: float = 1e-9
    escalation_tol: float = 1e-7
    m_max: int = 6
    merge_tol: float = DEFAULT_MERGE_TOL
    symmetric_tol: float = 5e-3
    basin_tol: float = 1e-3


@dataclass(frozen=True)
class OptimizerResult:
    """Outcome of a constrained entropy maximization."""

    graphon: StepGraphon
    entropy: float
    residuals: tuple[float, ...]
    podality: int
    symmetric_bipodal: bool
    constant: bool
    multistart_spread: float | None
    feasible: bool
    m: int

    def to_dict(self) -> dict:
        return {
            "graphon": self.graphon.to_dict(),
            "entropy": self.entropy,
            "residuals": list(self.residuals),
            "podality": self.podality,
            "flags": {
                "symmetric_bipodal": self.symmetric_bipodal,
                "constant": self.constant,
            },
            "multistart_spread": self.multistart_spread,
            "feasible": self.feasible,
            "m": self.m,
        }


@dataclass(frozen=True)
class SignedMaxResult:
    """Outcome of maximizing one signed density subject to another being zero."""

    value: float
    graphon: StepGraphon
    residual: float
    feasible: bool
    m: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "graphon": self.graphon.to_dict(),
            "residual": self.residual,
            "feasible": self.feasible,
            "m": self.m,
        }


# ---------------------------------------------------------------------------
# closed forms


def reference_construction(eps: float, tau: float) -> StepGraphon:
    """Closed-form bipodal graphon with edge density eps and triangle density tau.

    For tau <= eps^3: equal halves with diagonal eps - x and off-diagonal
    eps + x, x = (eps^3 - tau)^(1/3).  For tau > eps^3: the symmetric bipodal
    branch, diagonal a and off-diagonal d = 2 eps - a with a the unique root
    of the nondecreasing cubic a^3 + 3 a d^2 = 4 tau.  Raises ValueError for
    (eps, tau) outside the union of the two branch ranges.
    """
    if not 0.0 < eps <= 0.5:
        raise ValueError(f"edge density must lie in (0, 0.5], got {eps}")
    if tau < 0.0 or tau > eps**1.5 + 1e-12:
        raise ValueError(f"triangle density {tau} outside [0, eps^(3/2)]")
    e3 = eps**3
    if tau <= e3:
        x = np.cbrt(e3 - tau)
        return StepGraphon(
            [0.5, 0.5], [[eps - x, eps + x], [eps + x, eps - x]]
        )

    def f(a: float) -> float:
        d = 2.0 * eps - a
        return a**3 + 3.0 * a * d * d - 4.0 * tau

    lo, hi = eps, min(1.0, 2.0 * eps)
    if f(hi) < -1e-12:
        raise ValueError(
            f"triangle density {tau} above the symmetric bipodal branch "
            f"(max {(f(hi) + 4 * tau) / 4:.6g} at edge density {eps})"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    d = 2.0 * eps - a
    return StepGraphon([0.5, 0.5], [[a, d], [d, a]])


def staircase_graphon(m: int) -> StepGraphon:
    """m-block 0/1 staircase approximating the half graphon q = 1 on x+y <= 1.

    Has signed-square density exactly 0 and signed-2-star density
    (m^2 - 1) / (6 m^2)."""
    p = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i + j <= m - 2:
                p[i, j] = 1.0
    return StepGraphon(np.full(m, 1.0 / m), p)


def _split_to_m(q: StepGraphon, m: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Embed q into exactly m blocks by halving the largest block; the result
    represents the same graphon."""
    if q.m > m:
        return None
    c = list(q.masses)
    p = q.values.copy()
    while len(c) < m:
        i = int(np.argmax(c))
        half = c[i] / 2.0
        c[i] = half
        c.append(half)
        row = p[i].copy()
        p = np.pad(p, ((0, 1), (0, 1)))
        p[-1, :-1] = row
        p[:-1, -1] = row
        p[-1, -1] = p[i, i]
        p[i, -1] = p[-1, i] = p[i, i]
    return np.array(c), p


def _bipodal_formula_candidates(eps: float, tau: float) -> list[StepGraphon]:
    """Equal-mass bipodal closed forms for an (edge, triangle) target, used
    as optimizer seeds wherever the block values land in [0,1] (a wider range
    than reference_construction's documented domain)."""
    out: list[StepGraphon] = []
    e3 = eps**3
    if 0.0 <= tau <= e3:
        x = float(np.cbrt(e3 - tau))
        if 0.0 <= eps - x and eps + x <= 1.0:
            out.append(
                StepGraphon([0.5, 0.5], [[eps - x, eps + x], [eps + x, eps - x]])
            )
    if tau > e3:

        def f(a: float) -> float:
            d = 2.0 * eps - a
            return a**3 + 3.0 * a * d * d - 4.0 * tau

        lo, hi = eps, min(1.0, 2.0 * eps)
        if f(hi) >= 0.0:
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if f(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
            a = 0.5 * (lo + hi)
            d = 2.0 * eps - a
            if 0.0 <= d <= 1.0 and 0.0 <= a <= 1.0:
                out.append(StepGraphon([0.5, 0.5], [[a, d], [d, a]]))
    return out


def _closed_form_candidates(constraints: ConstraintVector) -> list[StepGraphon]:
    pats = constraints.patterns
    targets = constraints.targets
    cands: list[StepGraphon] = []
    by_pat = {p: t for p, t in constraints.terms}
    edge = SubgraphPattern.edge()
    tri = SubgraphPattern.triangle()
    if set(pats) == {edge, tri}:
        eps, tau = by_pat[edge], by_pat[tri]
        cands.append(StepGraphon.constant(eps))
        cands.extend(_bipodal_formula_candidates(eps, tau))
        cands.append(StepGraphon.bipodal(0.5, 0.0, 0.0, min(1.0, 2.0 * eps)))
        if 0.0 < eps < 1.0:
            lam = math.sqrt(eps)
            cands.append(StepGraphon.bipodal(lam, 1.0, 0.0, 0.0))
    else:
        for pat, t in constraints.terms:
            e = len(pat.edges)
            if e > 0 and not pat.absent and 0.0 < t < 1.0:
                cands.append(StepGraphon.constant(t ** (1.0 / e)))
        cands.append(StepGraphon.constant(0.5))
    return cands


# ---------------------------------------------------------------------------
# augmented-Lagrangian solver


def _sym_from_triu(m: int, iu, u: np.ndarray) -> np.ndarray:
    p = np.zeros((m, m))
    p[iu] = u
    p = p + p.T
    p[np.diag_indices(m)] /= 2.0
    return p


def _ascend(c, p, lam, rho, objective, evals, targets, opts):
    """Maximize the AL objective from (c, p); returns (c, p, g, obj_value)."""
    m = c.shape[0]
    iu = np.triu_indices(m)
    w = c.copy()
    u = p[iu].copy()

    def al_value(cv, pv):
        obj = objective.value(cv, pv)
        g = np.array([ev.value(cv, pv) for ev in evals]) - targets
        return obj - lam @ g - 0.5 * rho * (g @ g), g, obj

    def al_grads(cv, pv):
        obj, dv, dc = objective.value_and_grads(cv, pv)
        dv = dv.copy()
        dc = dc.copy()
        g = np.empty(len(evals))
        for j, ev in enumerate(evals):
            t, dvj, dcj = ev.value_and_grads(cv, pv)
            g[j] = t - targets[j]
            coef = lam[j] + rho * g[j]
            dv -= coef * dvj
            dc -= coef * dcj
        val = obj - lam @ g - 0.5 * rho * (g @ g)
        return val, g, dv, dc, obj

    lo, hi = opts.value_floor, 1.0 - opts.value_floor
    u = np.clip(u, lo, hi)
    cv, pv = w.copy(), _sym_from_triu(m, iu, u)
    f, g, dv, dc, obj = al_grads(cv, pv)
    eta = 0.05
    stall = 0
    prev_theta = None
    prev_grad = None
    for _ in range(opts.max_inner):
        gu = dv[iu]
        gw = mass_chain_rule(cv, dc) if m > 1 else np.zeros(1)
        theta = np.concatenate([w, u])
        grad = np.concatenate([gw, gu])
        # projected-gradient stationarity probe
        probe_u = np.clip(u + gu, lo, hi) - u
        if m > 1:
            wp = np.clip(w + gw, opts.mass_floor, None)
            probe_w = wp / wp.sum() - w
        else:
            probe_w = np.zeros(1)
        if max(np.abs(probe_u).max(initial=0.0), np.abs(probe_w).max(initial=0.0)) < opts.gtol:
            break
        # Barzilai-Borwein trial step (spectral), Armijo-safeguarded
        if prev_theta is not None:
            dth = theta - prev_theta
            dgr = grad - prev_grad
            denom = -float(dth @ dgr)
            if denom > 1e-18:
                eta = float(dth @ dth) / denom
        eta = min(max(eta, 1e-10), 1e3)
        prev_theta, prev_grad = theta, grad
        accepted = False
        for _bt in range(60):
            u_n = np.clip(u + eta * gu, lo, hi)
            if m > 1:
                w_n = np.clip(w + eta * gw, opts.mass_floor, None)
                w_n = w_n / w_n.sum()
            else:
                w_n = w
            c_n, p_n = w_n, _sym_from_triu(m, iu, u_n)
            f_n, g_n, obj_n = al_value(c_n, p_n)
            gain = float(gu @ (u_n - u)) + float(gw @ (w_n - w))
            if f_n + 1e-18 >= f + 1e-4 * max(gain, 0.0):
                accepted = True
                break
            eta /= 2.0
            if eta < 1e-14:
                break
        if not accepted:
            break
        delta_f = f_n - f
        w, u, cv, pv = w_n, u_n, c_n, p_n
        f, g, dv, dc, obj = al_grads(cv, pv)
        if abs(delta_f) < 1e-15 * max(1.0, abs(f)):
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
    return cv, pv, g, obj


def _polish(c, p, objective, evals, targets, opts, max_iter=200):
    """Tangent-space ascent with Gauss-Newton feasibility restoration.

    Sharpens a feasible AL solution: steps along the objective gradient
    projected onto the tangent space of the constraint manifold, restoring
    t(q) = alpha after each step.  First-order AL alone crawls along the
    manifold; this recovers the last digits."""
    m = c.shape[0]
    iu = np.triu_indices(m)
    lo, hi = opts.value_floor, 1.0 - opts.value_floor
    w = c.copy()
    u = np.clip(p[iu].copy(), lo, hi)

    def build(wv, uv):
        return wv, _sym_from_triu(m, iu, uv)

    def constraints_at(cv, pv):
        g = np.empty(len(evals))
        rows = []
        for j, ev in enumerate(evals):
            t, dvj, dcj = ev.value_and_grads(cv, pv)
            g[j] = t - targets[j]
            gw = mass_chain_rule(cv, dcj) if m > 1 else np.zeros(1)
            rows.append(np.concatenate([gw, dvj[iu]]))
        return g, np.array(rows)

    def restore(wv, uv):
        for _ in range(20):
            cv, pv = build(wv, uv)
            g, jac = constraints_at(cv, pv)
            if np.abs(g).max(initial=0.0) < 0.1 * opts.feasibility_tol:
                return wv, uv, True
            jjt = jac @ jac.T
            try:
                lam = np.linalg.solve(jjt + 1e-14 * np.eye(len(evals)), g)
            except np.linalg.LinAlgError:
                return wv, uv, False
            step = jac.T @ lam
            wv = wv - step[:m] if m > 1 else wv
            if m > 1:
                wv = np.clip(wv, opts.mass_floor, None)
                wv = wv / wv.sum()
            uv = np.clip(uv - step[m:], lo, hi)
        cv, pv = build(wv, uv)
        g, _ = constraints_at(cv, pv)
        return wv, uv, bool(np.abs(g).max(initial=0.0) < opts.feasibility_tol)

    w, u, ok = restore(w, u)
    if not ok:
        cv, pv = build(w, u)
        g, _ = constraints_at(cv, pv)
        return cv, pv, g, objective.value(cv, pv), False
    step = 0.05
    cv, pv = build(w, u)
    obj = objective.value(cv, pv)
    for _ in range(max_iter):
        ov, dv, dc = objective.value_and_grads(cv, pv)
        gw = mass_chain_rule(cv, dc) if m > 1 else np.zeros(1)
        grad = np.concatenate([gw, dv[iu]])
        g, jac = constraints_at(cv, pv)
        jjt = jac @ jac.T + 1e-14 * np.eye(len(evals))
        tang = grad - jac.T @ np.linalg.solve(jjt, jac @ grad)
        if np.abs(tang).max(initial=0.0) < 1e-12:
            break
        improved = False
        for _bt in range(30):
            u_n = np.clip(u + step * tang[m:], lo, hi)
            if m > 1:
                w_n = np.clip(w + step * tang[:m], opts.mass_floor, None)
                w_n = w_n / w_n.sum()
            else:
                w_n = w
            w_r, u_r, ok = restore(w_n, u_n)
            if ok:
                c_n, p_n = build(w_r, u_r)
                obj_n = objective.value(c_n, p_n)
                if obj_n > obj + 1e-16:
                    w, u, cv, pv, obj = w_r, u_r, c_n, p_n, obj_n
                    improved = True
                    step = min(step * 1.6, 10.0)
                    break
            step /= 2.0
            if step < 1e-12:
                break
        if not improved:
            break
    g, _ = constraints_at(cv, pv)
    return cv, pv, g, obj, True


def _solve_single(c0, p0, objective, evals, targets, opts):
    lam = np.zeros(len(evals))
    rho = opts.penalty_init
    c = np.asarray(c0, dtype=float).copy()
    p = np.asarray(p0, dtype=float).copy()
    feas_hist: list[float] = []
    g = np.array([ev.value(c, p) for ev in evals]) - targets
    obj = objective.value(c, p)
    for rnd in range(opts.max_outer):
        c, p, g, obj = _ascend(c, p, lam, rho, objective, evals, targets, opts)
        feas = float(np.abs(g).max(initial=0.0))
        feas_hist.append(feas)
        if feas < opts.feasibility_tol:
            break
        # hopeless starts: feasibility stopped improving at a high level
        if rnd >= 5 and feas > 0.7 * feas_hist[-4] and feas > 1e4 * opts.feasibility_tol:
            break
        lam = lam + rho * g
        rho *= opts.penalty_growth
    if np.abs(g).max(initial=0.0) < opts.feasibility_tol:
        c, p, g, obj, _ = _polish(c, p, objective, evals, targets, opts)
    return {
        "c": c,
        "p": p,
        "objective": obj,
        "residuals": np.abs(g),
        "feasible": bool(np.abs(g).max(initial=0.0) < opts.feasibility_tol),
    }


def _start_list(constraints, m, opts, extra_seeds, rng):
    starts: list[tuple[np.ndarray, np.ndarray]] = []
    raw: list[tuple[np.ndarray, np.ndarray]] = []
    for q in list(_closed_form_candidates(constraints)) + list(extra_seeds):
        emb = _split_to_m(q, m)
        if emb is None:
            continue
        raw.append(emb)
        starts.append(emb)
        if m > 1:
            cj = emb[0] * (1.0 + 0.05 * rng.uniform(-1.0, 1.0, m))
            cj = np.clip(cj, opts.mass_floor, None)
            cj /= cj.sum()
            noise = rng.uniform(-0.05, 0.05, (m, m))
            pj = np.clip(emb[1] + (noise + noise.T) / 2.0, 0.0, 1.0)
            starts.append((cj, pj))
    while len(starts) < opts.n_starts:
        cr = np.clip(rng.dirichlet(np.ones(m)), opts.mass_floor, None)
        cr /= cr.sum()
        pr = rng.uniform(0.02, 0.98, (m, m))
        starts.append((cr, (pr + pr.T) / 2.0))
    return starts, raw


def _result_from_solution(c, p, residuals, feasible, constraints, opts, m, spread):
    q = canonicalize(StepGraphon(c, p), opts.merge_tol)
    pod = q.m
    sym = bool(
        pod == 2
        and abs(q.masses[0] - 0.5) <= opts.symmetric_tol
        and abs(q.values[0, 0] - q.values[1, 1]) <= opts.symmetric_tol
    )
    return OptimizerResult(
        graphon=q,
        entropy=graphon_entropy(q),
        residuals=tuple(float(r) for r in residuals),
        podality=pod,
        symmetric_bipodal=sym,
        constant=pod == 1,
        multistart_spread=spread,
        feasible=feasible,
        m=m,
    )


def _basin_key(c, p, opts):
    q = canonicalize(StepGraphon(c, p), opts.merge_tol)
    tol = opts.basin_tol
    return (
        q.m,
        tuple(np.round(q.masses / tol).astype(int).tolist()),
        tuple(np.round(q.values / tol).astype(int).reshape(-1).tolist()),
    )


def maximize_entropy(
    constraints: ConstraintVector,
    m: int,
    opts: OptimizerOptions | None = None,
    extra_seeds: tuple[StepGraphon, ...] = (),
) -> OptimizerResult:
    """Best local maximum of graphon entropy over m-podal graphons subject to
    t_j(q) = alpha_j, over a deterministic multistart (random starts plus
    closed-form seeds).  Residuals refer to the returned solution before
    block merging; infeasibility (no start meets the tolerance) is reported
    explicitly, never silently.
    """
    if not 1 <= m <= M_CAP:
        raise ValueError(f"podality ansatz m must lie in 1..{M_CAP}")
    for pat in constraints.patterns:
        if pat.k > 6:
            raise ValueError(f"constraint pattern with {pat.k} vertices above cap 6")
    opts = opts or OptimizerOptions()
    evals = [DensityEvaluator(p) for p in constraints.patterns]
    targets = constraints.targets
    rng = np.random.default_rng(opts.seed)
    starts, raw = _start_list(constraints, m, opts, extra_seeds, rng)

    pool = []
    for c0, p0 in raw:
        g = np.array([ev.value(c0, p0) for ev in evals]) - targets
        if np.abs(g).max(initial=0.0) < opts.feasibility_tol:
            pool.append(
                {
                    "c": c0,
                    "p": p0,
                    "objective": EntropyObjective.value(c0, p0),
                    "residuals": np.abs(g),
                    "feasible": True,
                }
            )
    for c0, p0 in starts:
        pool.append(_solve_single(c0, p0, EntropyObjective, evals, targets, opts))

    feasible = [r for r in pool if r["feasible"]]
    if not feasible:
        best = min(pool, key=lambda r: float(r["residuals"].max(initial=0.0)))
        return _result_from_solution(
            best["c"], best["p"], best["residuals"], False, constraints, opts, m, None
        )
    best = feasible[0]
    for r in feasible[1:]:
        if r["objective"] > best["objective"]:
            best = r
    spread = None
    best_key = _basin_key(best["c"], best["p"], opts)
    second = None
    for r in feasible:
        if r is best or _basin_key(r["c"], r["p"], opts) == best_key:
            continue
        if second is None or r["objective"] > second:
            second = r["objective"]
    if second is not None:
        spread = float(best["objective"] - second)
    return _result_from_solution(
        best["c"], best["p"], best["residuals"], True, constraints, opts, m, spread
    )


def constrained_entropy(
    constraints: ConstraintVector,
    opts: OptimizerOptions | None = None,
    extra_seeds: tuple[StepGraphon, ...] = (),
) -> OptimizerResult:
    """m-escalation wrapper: runs maximize_entropy for m = 1, 2, ... until the
    entropy gain stays below escalation_tol for two consecutive sizes, then
    reports the smallest m whose entropy reaches the best value (minimal
    podality at the optimum)."""
    opts = opts or OptimizerOptions()
    results: list[OptimizerResult] = []
    prev_feasible: OptimizerResult | None = None
    small_gains = 0
    for m in range(1, opts.m_max + 1):
        seeds = (prev_feasible.graphon,) if prev_feasible is not None else ()
        seeds = seeds + tuple(extra_seeds)
        res = maximize_entropy(constraints, m, opts, extra_seeds=seeds)
        results.append(res)
        if res.feasible:
            if prev_feasible is not None:
                gain = res.entropy - prev_feasible.entropy
                small_gains = small_gains + 1 if gain < opts.escalation_tol else 0
            if prev_feasible is None or res.entropy > prev_feasible.entropy:
                prev_feasible = res
            if small_gains >= 2:
                break
    feas = [r for r in results if r.feasible]
    if not feas:
        return min(results, key=lambda r: max(r.residuals))
    s_star = max(r.entropy for r in feas)
    for r in feas:
        if r.entropy >= s_star - opts.escalation_tol:
            return r
    return feas[-1]


class _DensityObjective:
    """Adapter: maximize a pattern density instead of entropy."""

    def __init__(self, pattern: SubgraphPattern):
        self._ev = DensityEvaluator(pattern)

    def value(self, c, p):
        return self._ev.value(c, p)

    def value_and_grads(self, c, p):
        return self._ev.value_and_grads(c, p)


def bounded_signed_max(
    objective: SubgraphPattern,
    zero_constraint: SubgraphPattern,
    m: int,
    opts: OptimizerOptions | None = None,
) -> SignedMaxResult:
    """Maximize one signed density over m-podal graphons subject to another
    signed density being 0 (same engine as maximize_entropy with the
    objective swapped)."""
    if not 1 <= m <= 12:
        raise ValueError("bounded_signed_max supports m in 1..12")
    opts = opts or OptimizerOptions()
    obj = _DensityObjective(objective)
    evals = [DensityEvaluator(zero_constraint)]
    targets = np.array([0.0])
    rng = np.random.default_rng(opts.seed)

    seeds: list[StepGraphon] = [staircase_graphon(m)]
    if m >= 2:
        seeds.append(staircase_graphon(max(1, m // 2)))
    seeds.append(StepGraphon.constant(0.5))

    starts: list[tuple[np.ndarray, np.ndarray]] = []
    raw: list[tuple[np.ndarray, np.ndarray]] = []
    for q in seeds:
        emb = _split_to_m(q, m)
        if emb is None:
            continue
        raw.append(emb)
        starts.append((emb[0], np.clip(emb[1], 1e-7, 1.0 - 1e-7)))
    while len(starts) < opts.n_starts:
        cr = np.clip(rng.dirichlet(np.ones(m)), opts.mass_floor, None)
        cr /= cr.sum()
        pr = rng.uniform(0.02, 0.98, (m, m))
        starts.append((cr, (pr + pr.T) / 2.0))

    pool = []
    for c0, p0 in raw:
        g = np.array([evals[0].value(c0, p0)]) - targets
        if np.abs(g).max() < opts.feasibility_tol:
            pool.append(
                {
                    "c": c0,
                    "p": p0,
                    "objective": obj.value(c0, p0),
                    "residuals": np.abs(g),
                    "feasible": True,
                }
            )
    for c0, p0 in starts:
        pool.append(_solve_single(c0, p0, obj, evals, targets, opts))
    feasible = [r for r in pool if r["feasible"]]
    if not feasible:
        best = min(pool, key=lambda r: float(r["residuals"].max()))
        q = canonicalize(StepGraphon(best["c"], best["p"]), opts.merge_tol)
        return SignedMaxResult(best["objective"], q, float(best["residuals"].max()), False, m)
    best = feasible[0]
    for r in feasible[1:]:
        if r["objective"] > best["objective"]:
            best = r
    q = canonicalize(StepGraphon(best["c"], best["p"]), opts.merge_tol)
    return SignedMaxResult(
        float(best["objective"]), q, float(best["residuals"].max()), True, m
    )
