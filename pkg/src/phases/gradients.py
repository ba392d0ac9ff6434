"""Analytic gradients of pattern densities and graphon entropy.

Everything here works on raw (masses, values) arrays since it sits inside the
optimizer's hot loop.  Gradients use the symmetric parameterization: the
returned value-gradient dV satisfies dV[a,b] = d(t)/d(theta_ab) where
theta_ab = theta_ba is the shared off-diagonal parameter, so finite
differences must perturb p_ab and p_ba together.  Mass gradients dc are raw
d/dc and only meaningful after mass_chain_rule projects them onto the
simplex tangent (off the simplex they carry an arbitrary additive constant
that the chain rule cancels).
"""

from __future__ import annotations

import numpy as np

from .graphon import SubgraphPattern, _star_arity, pattern_subscripts, _LETTERS

_LOG_CLIP = 1e-12


def _symmetrize_grad(g_full: np.ndarray) -> np.ndarray:
    out = g_full + g_full.T
    np.fill_diagonal(out, np.diag(g_full))
    return out


def _classify(pattern: SubgraphPattern):
    if pattern == SubgraphPattern.edge():
        return ("edge", 0)
    if pattern == SubgraphPattern.triangle():
        return ("triangle", 0)
    arity = _star_arity(pattern)
    if arity is not None:
        return ("star", arity)
    if (
        pattern.k == 3
        and len(pattern.edges) == 1
        and len(pattern.absent) == 1
        and len(set(pattern.edges[0]) & set(pattern.absent[0])) == 1
    ):
        return ("signed2star", 0)
    return ("generic", 0)


class DensityEvaluator:
    """Value and analytic gradient of one pattern density on step graphons."""

    def __init__(self, pattern: SubgraphPattern):
        self.pattern = pattern
        self.kind, self.arity = _classify(pattern)
        self._sub = pattern_subscripts(pattern)
        self._grad_subs: dict[str, list] | None = None
        self._paths: dict[tuple, object] = {}

    # -- generic einsum machinery ------------------------------------------

    def _build_grad_subs(self):
        p = self.pattern
        idx = _LETTERS[: p.k]
        terms = list(idx) + [idx[u - 1] + idx[v - 1] for u, v in p.all_edges]
        edge_subs = []
        for e in range(len(p.all_edges)):
            pos = p.k + e
            rest = terms[:pos] + terms[pos + 1 :]
            edge_subs.append((",".join(rest) + "->" + terms[pos], pos))
        vert_subs = []
        for w in range(p.k):
            rest = terms[:w] + terms[w + 1 :]
            connected = any(idx[w] in t for t in rest)
            out = idx[w] if connected else ""
            vert_subs.append((",".join(rest) + "->" + out, w, connected))
        self._grad_subs = {"edges": edge_subs, "verts": vert_subs}

    def _path(self, sub: str, ops) -> object:
        key = (sub, ops[0].shape[0] if ops[0].ndim else 0, tuple(o.ndim for o in ops))
        path = self._paths.get(key)
        if path is None:
            path, _ = np.einsum_path(sub, *ops, optimize="greedy")
            self._paths[key] = path
        return path

    def _operands(self, c, p):
        pat = self.pattern
        ops = [c] * pat.k + [p] * len(pat.edges)
        if pat.absent:
            comp = 1.0 - p
            ops += [comp] * len(pat.absent)
        return ops

    def _generic_value(self, c, p) -> float:
        ops = self._operands(c, p)
        return float(np.einsum(self._sub, *ops, optimize=self._path(self._sub, ops)))

    def _generic_grads(self, c, p):
        if self._grad_subs is None:
            self._build_grad_subs()
        pat = self.pattern
        ops = self._operands(c, p)
        n_present = len(pat.edges)
        g_full = np.zeros_like(p)
        for e, (sub, pos) in enumerate(self._grad_subs["edges"]):
            rest = ops[:pos] + ops[pos + 1 :]
            part = np.einsum(sub, *rest, optimize=self._path(sub, rest))
            if e < n_present:
                g_full += part
            else:
                g_full -= part
        dc = np.zeros_like(c)
        for sub, pos, connected in self._grad_subs["verts"]:
            rest = ops[:pos] + ops[pos + 1 :]
            if not rest:
                dc += 1.0
                continue
            part = np.einsum(sub, *rest, optimize=self._path(sub, rest))
            dc += part if connected else float(part)
        return g_full, dc

    # -- public API ---------------------------------------------------------

    def value(self, c: np.ndarray, p: np.ndarray) -> float:
        kind = self.kind
        if kind == "edge":
            return float(c @ p @ c)
        if kind == "triangle":
            pdp = p @ (c[:, None] * p)
            return float(c @ (pdp * p) @ c)
        if kind == "star":
            r = p @ c
            return float(c @ r**self.arity)
        if kind == "signed2star":
            r = p @ c
            return float(c @ (r * (1.0 - r)))
        return self._generic_value(c, p)

    def value_and_grads(self, c: np.ndarray, p: np.ndarray):
        """Returns (value, dV symmetric-parameter gradient, dc mass gradient)."""
        kind = self.kind
        if kind == "edge":
            val = float(c @ p @ c)
            g_full = np.outer(c, c)
            dc = 2.0 * (p @ c)
            return val, _symmetrize_grad(g_full), dc
        if kind == "triangle":
            pdp = p @ (c[:, None] * p)
            val = float(c @ (pdp * p) @ c)
            g_full = 3.0 * np.outer(c, c) * pdp
            dc = 3.0 * ((pdp * p) @ c)
            return val, _symmetrize_grad(g_full), dc
        if kind == "star":
            x = self.arity
            r = p @ c
            rx1 = r ** (x - 1) if x > 1 else np.ones_like(r)
            val = float(c @ (r * rx1))
            g_full = x * np.outer(c * rx1, c)
            dc = r * rx1 + x * (p @ (c * rx1))
            return val, _symmetrize_grad(g_full), dc
        if kind == "signed2star":
            r = p @ c
            val = float(c @ (r * (1.0 - r)))
            g_full = np.outer(c * (1.0 - 2.0 * r), c)
            dc = r * (1.0 - r) + p @ (c * (1.0 - 2.0 * r))
            return val, _symmetrize_grad(g_full), dc
        val = self._generic_value(c, p)
        g_full, dc = self._generic_grads(c, p)
        return val, _symmetrize_grad(g_full), dc


class EntropyObjective:
    """Graphon Shannon entropy with analytic gradients, duck-typed like
    DensityEvaluator for the optimizer."""

    @staticmethod
    def value(c: np.ndarray, p: np.ndarray) -> float:
        q = np.clip(p, 0.0, 1.0)
        h = np.zeros_like(q)
        mask = (q > 0) & (q < 1)
        qm = q[mask]
        h[mask] = qm * np.log(qm) + (1.0 - qm) * np.log1p(-qm)
        return float(-0.5 * c @ h @ c)

    @staticmethod
    def value_and_grads(c: np.ndarray, p: np.ndarray):
        q = np.clip(p, _LOG_CLIP, 1.0 - _LOG_CLIP)
        h = q * np.log(q) + (1.0 - q) * np.log1p(-q)
        val = float(-0.5 * c @ h @ c)
        logit = np.log(q) - np.log1p(-q)
        g_full = -0.5 * np.outer(c, c) * logit
        dc = -(h @ c)
        return val, _symmetrize_grad(g_full), dc


def mass_chain_rule(c: np.ndarray, dc: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. normalized positive mass variables w (at sum(w)=1):
    dF/dw_i = dF/dc_i - sum_k c_k dF/dc_k."""
    return dc - float(c @ dc)
