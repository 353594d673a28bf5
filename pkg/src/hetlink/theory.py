"""Closed-form DistMult solutions on unit-circle features, the single-threshold
separability oracle, and numerical checks of the three decoder/encoder claims."""
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .exceptions import DomainError, InputError
from .model import ModelSpec, init_params, score_pairs
from .synthgen import (ThresholdSpec, TwoFeatureSpec, generate_threshold_graph,
                       generate_two_feature_graph)
from .training import TrainConfig, hinge_loss, train_on_pairs


# ---------------------------------------------------------------- theorem 1

@dataclass(frozen=True)
class Thm1Solution:
    mode: str
    M: float
    w: tuple
    b: float
    slope: float

    def predict(self, k):
        return self.slope * np.asarray(k, dtype=np.float64) + self.b


def thm1_closed_form(mode, M):
    """DistMult (w, b) with score 0 at similarity M and score 1 at k = +1
    (homophilic) or k = -1 (heterophilic)."""
    M = float(M)
    if mode == "homo":
        if not -1 <= M < 1:
            raise DomainError("homophilic closed form needs M in [-1, 1)")
        slope = 1.0 / (1.0 - M)
        b = 1.0 / (M - 1.0) + 1.0
    elif mode == "hetero":
        if not -1 < M <= 1:
            raise DomainError("heterophilic closed form needs M in (-1, 1]")
        slope = -1.0 / (1.0 + M)
        b = 1.0 - 1.0 / (1.0 + M)
    else:
        raise InputError(f"unknown mode {mode!r}")
    return Thm1Solution(mode, M, (slope, slope), b, slope)


def all_pairs(n):
    u, v = np.triu_indices(n, k=1)
    return np.column_stack([u, v])


def probe_response(spec, params, n_points=201, n_rotations=8):
    """Mean score at each of `n_points` similarity values k in [-1, 1].

    Each k is realized as an angle difference arccos(k) and averaged over
    equispaced base rotations, which cancels any w1 != w2 anisotropy.
    """
    from .graph import build_graph
    k = np.linspace(-1.0, 1.0, n_points)
    delta = np.arccos(k)
    phis = 2 * np.pi * np.arange(n_rotations) / n_rotations
    a = np.repeat(phis, n_points)
    b = a + np.tile(delta, n_rotations)
    X = np.column_stack([np.cos(np.concatenate([a, b])), np.sin(np.concatenate([a, b]))])
    m = len(a)
    g = build_graph(2 * m, [])
    pairs = np.column_stack([np.arange(m), np.arange(m, 2 * m)])
    s = score_pairs(spec, params, g, X, pairs).reshape(n_rotations, n_points).mean(axis=0)
    return k, s


def verify_thm1_by_training(mode, M, n_nodes=400, seed=0, epochs=1500, learning_rate=0.01):
    g, circle = generate_threshold_graph(ThresholdSpec(M=M, mode=mode, n_nodes=n_nodes, seed=seed))
    pairs = all_pairs(n_nodes)
    labels = g.has_edges(pairs[:, 0], pairs[:, 1]).astype(np.float64)
    X = circle.rows
    spec = ModelSpec(encoder="nognn", decoder="distmult")
    params = init_params(spec, 2, seed=seed)
    report = {"mode": mode, "M": float(M), "n_nodes": n_nodes, "seed": seed,
              "n_pos": int(labels.sum()), "n_neg": int(len(labels) - labels.sum())}
    if report["n_neg"] == 0 or report["n_pos"] == 0:
        report.update(final_loss=0.0, slope=None, slope_sign_ok=None,
                      notice="degenerate graph: one class is empty, slope check skipped")
        return report
    cfg = TrainConfig(loss="hinge", epochs=epochs, learning_rate=learning_rate, seed=seed)
    losses = train_on_pairs(spec, params, g, X, pairs, labels, cfg)
    k, s = probe_response(spec, params)
    slope = float(np.polyfit(k, s, 1)[0])
    scores = score_pairs(spec, params, g, X, pairs)
    correct = np.where(labels == 1, scores >= 0, scores < 0)
    expected = thm1_closed_form(mode, M)
    report.update(
        final_loss=losses[-1], epochs_run=len(losses) - 1, slope=slope,
        closed_form_slope=expected.slope,
        slope_sign_ok=bool(np.sign(slope) == np.sign(expected.slope)),
        sign_accuracy=float(correct.mean()),
        w=params["dec.w"].tolist(), b=float(params["dec.b"]),
    )
    return report


# ---------------------------------------------------------------- theorem 2

def _errors_by_threshold(pos, neg):
    """Candidate thresholds with error counts for both orientations.

    'above': predict edge iff score >= t; 'below': predict edge iff score <= t.
    """
    pos = np.sort(np.asarray(pos, dtype=np.float64))
    neg = np.sort(np.asarray(neg, dtype=np.float64))
    vals = np.unique(np.concatenate([pos, neg]))
    if len(vals) == 0:
        return np.zeros(1), np.zeros(1, dtype=int), np.zeros(1, dtype=int)
    mids = (vals[:-1] + vals[1:]) / 2
    cands = np.concatenate([[vals[0] - 1.0], vals, mids, [vals[-1] + 1.0]])
    cands.sort()
    # above: errors = pos below t + neg at or above t
    err_above = np.searchsorted(pos, cands, "left") + (len(neg) - np.searchsorted(neg, cands, "left"))
    # below: errors = pos above t + neg at or below t
    err_below = (len(pos) - np.searchsorted(pos, cands, "right")) + np.searchsorted(neg, cands, "right")
    return cands, err_above, err_below


def single_threshold_oracle(pos, neg):
    """A threshold t and orientation that perfectly separate pos from neg, or None.

    Orientation 'above' means pos >= t > neg; 'below' means pos <= t < neg.
    """
    cands, above, below = _errors_by_threshold(pos, neg)
    if len(pos) == 0 or len(neg) == 0:
        return {"threshold": float(cands[0]) if len(neg) else float(cands[-1]),
                "orientation": "above" if len(neg) == 0 else "below"}
    for errs, orient in ((above, "above"), (below, "below")):
        hit = np.flatnonzero(errs == 0)
        if len(hit):
            return {"threshold": float(cands[hit[len(hit) // 2]]), "orientation": orient}
    return None


def min_threshold_errors(pos, neg):
    """Fewest misclassified samples achievable by any single threshold."""
    _, above, below = _errors_by_threshold(pos, neg)
    return int(min(above.min(), below.min()))


def _sign_errors(scores, labels):
    return int(np.count_nonzero(np.where(labels == 1, scores < 0, scores >= 0)))


def verify_thm2(n_nodes=400, M1=-0.3, M2=0.3, seed=0, epochs=200, mlp_hidden=32,
                learning_rate=0.01):
    if M1 > M2:
        raise InputError("gated bounds need M1 <= M2")
    g, circle = generate_threshold_graph(
        ThresholdSpec(M=M1, M2=M2, mode="gated", n_nodes=n_nodes, seed=seed))
    pairs = all_pairs(n_nodes)
    labels = g.has_edges(pairs[:, 0], pairs[:, 1]).astype(np.float64)
    X = circle.rows
    k = np.clip(np.einsum("ij,ij->i", X[pairs[:, 0]], X[pairs[:, 1]]), -1, 1)
    pos, neg = k[labels == 1], k[labels == 0]
    oracle = single_threshold_oracle(pos, neg)
    floor = min_threshold_errors(pos, neg)
    report = {"n_nodes": n_nodes, "M1": M1, "M2": M2, "seed": seed,
              "n_pos": int(len(pos)), "n_neg": int(len(neg)),
              "oracle": oracle, "threshold_error_floor": floor}
    if len(pos) == 0 or len(neg) == 0:
        report["notice"] = "degenerate task: one class is empty"
        report["degenerate"] = True
        return report
    report["degenerate"] = False
    cfg = TrainConfig(loss="hinge", epochs=epochs, learning_rate=learning_rate, seed=seed)
    for name, spec in (("distmult", ModelSpec(encoder="nognn", decoder="distmult")),
                       ("mlp", ModelSpec(encoder="nognn", decoder="mlp", mlp_hidden=mlp_hidden))):
        params = init_params(spec, 2, seed=seed)
        losses = train_on_pairs(spec, params, g, X, pairs, labels, cfg)
        scores = score_pairs(spec, params, g, X, pairs)
        report[name] = {"final_loss": losses[-1], "epochs_run": len(losses) - 1,
                        "sign_errors": _sign_errors(scores, labels),
                        "sign_error_rate": _sign_errors(scores, labels) / len(labels)}
    return report


# ---------------------------------------------------------------- theorem 3

@dataclass(frozen=True)
class Thm3Config:
    d: int
    d_prime: int
    alpha: float = -1.0
    theta1: float = np.pi / 6
    theta2: float = 2 * np.pi / 3

    def validate(self):
        if self.alpha >= 0:
            raise InputError("alpha must be negative")
        if self.d < 0 or self.d_prime < 0:
            raise InputError("degrees must be non-negative")
        if self.d == 1:
            raise DomainError("closed form is undefined for train degree d = 1")


@dataclass(frozen=True)
class SeparationReport:
    delta_gnn: float
    delta_baseline: float
    reduced: bool
    score_edge: float
    score_self: float
    constructed_edge: float
    constructed_self: float
    route_gap: float

    def to_dict(self):
        return asdict(self)


def thm3_scores(d, d_prime, alpha):
    """Exact edge and self-pair test scores of the DistMult decoder fitted on
    self-loop-mean representations at train degree d, applied at degree d'."""
    d, dp, a = Fraction(d), Fraction(d_prime), Fraction(alpha)
    den = (d - 1) ** 2 * (dp + 1) ** 2
    common = -4 * d * dp + dp ** 2 + d ** 2 * (dp ** 2 + 1) + 1
    shift = 2 * (d - dp) * (d * dp - 1)
    return (a * shift + common) / den, (a * common + shift) / den


def _fit_distmult_on_blocks(d, alpha, theta1, theta2):
    """Solve score(r_u, r_v) = 1, score(r_u, r_u) = score(r_v, r_v) = alpha."""
    g, circle, blocks = generate_two_feature_graph(TwoFeatureSpec(d, theta1, theta2))
    spec = ModelSpec(encoder="linear", decoder="distmult")
    params = init_params(spec, 2)
    from .model import encode
    R = encode(spec, params, g, circle.rows)
    ru, rv = R[np.flatnonzero(blocks == 0)[0]], R[np.flatnonzero(blocks == 1)[0]]
    A = np.array([[*(ru * rv), 1.0], [*(ru * ru), 1.0], [*(rv * rv), 1.0]])
    if abs(np.linalg.det(A)) < 1e-12:
        raise DomainError("singular fit: the two block representations coincide")
    w1, w2, b = np.linalg.solve(A, [1.0, alpha, alpha])
    params["dec.w"][...] = (w1, w2)
    params["dec.b"][...] = b
    return spec, params


def _apply_on_blocks(spec, params, d_prime, theta1, theta2):
    g, circle, blocks = generate_two_feature_graph(TwoFeatureSpec(d_prime, theta1, theta2))
    u, v = np.flatnonzero(blocks == 0)[0], np.flatnonzero(blocks == 1)[0]
    s = score_pairs(spec, params, g, circle.rows, [[u, v], [u, u]])
    return float(s[0]), float(s[1])


def thm3_separation(cfg):
    cfg.validate()
    edge, self_pair = thm3_scores(cfg.d, cfg.d_prime, cfg.alpha)
    delta_gnn = abs(edge - self_pair)
    delta_base = 1 - Fraction(cfg.alpha)
    spec, params = _fit_distmult_on_blocks(cfg.d, cfg.alpha, cfg.theta1, cfg.theta2)
    c_edge, c_self = _apply_on_blocks(spec, params, cfg.d_prime, cfg.theta1, cfg.theta2)
    gap = max(abs(c_edge - float(edge)), abs(c_self - float(self_pair)))
    return SeparationReport(
        delta_gnn=float(delta_gnn), delta_baseline=float(delta_base),
        reduced=bool(delta_gnn < delta_base),
        score_edge=float(edge), score_self=float(self_pair),
        constructed_edge=c_edge, constructed_self=c_self, route_gap=gap,
    )


def in_theorem3_region(d, d_prime):
    return (d == 0 and d_prime > 0) or (d >= 2 and 1 <= d_prime < d)


def verify_thm3_grid(d_values, dprime_values, alpha_values,
                     theta1=np.pi / 6, theta2=2 * np.pi / 3):
    rows = []
    for alpha in alpha_values:
        for d in d_values:
            for dp in dprime_values:
                rep = thm3_separation(Thm3Config(d, dp, alpha, theta1, theta2))
                region = in_theorem3_region(d, dp)
                rows.append({"d": d, "d_prime": dp, "alpha": alpha, "in_region": region,
                             "region_ok": rep.reduced == region, **rep.to_dict()})
    return rows


def closed_form_curves(M=0.5, n_points=201):
    k = np.linspace(-1.0, 1.0, n_points)
    return k, thm1_closed_form("homo", M).predict(k), thm1_closed_form("hetero", M).predict(k)


def hinge_of_closed_form(solution, k_pos, k_neg):
    scores = np.concatenate([solution.predict(k_pos), solution.predict(k_neg)])
    labels = np.concatenate([np.ones(len(k_pos)), np.zeros(len(k_neg))])
    return float(hinge_loss(scores, labels)[0].sum())


# ---------------------------------------------------------------- reports

def _assertion(name, passed, **evidence):
    return {"name": name, "passed": bool(passed), "evidence": evidence}


def _report(theorem, assertions, **extra):
    return {"theorem": theorem, "passed": all(a["passed"] for a in assertions),
            "assertions": assertions, **extra}


THM1_M_VALUES = (-0.9, -0.5, 0.0, 0.5, 0.9)


def thm1_report(m_values=THM1_M_VALUES, seeds=(0, 1, 2), train_M=(0.5, 0.5), n_nodes=400):
    out = []
    for mode in ("homo", "hetero"):
        for M in m_values:
            sol = thm1_closed_form(mode, M)
            at_m = float(sol.predict(M))
            at_end = float(sol.predict(1.0 if mode == "homo" else -1.0))
            want = 1 / (1 - M) if mode == "homo" else -1 / (1 + M)
            out.append(_assertion(
                f"closed_form[{mode},M={M}]",
                abs(at_m) <= 1e-12 and abs(at_end - 1) <= 1e-12 and abs(sol.slope - want) <= 1e-12,
                score_at_M=at_m, score_at_end=at_end, slope=sol.slope, expected_slope=want))
    k, homo, _ = closed_form_curves(0.5)
    out.append(_assertion("homo_M0.5_is_2k-1", np.max(np.abs(homo - (2 * k - 1))) <= 1e-12,
                          max_abs_diff=float(np.max(np.abs(homo - (2 * k - 1))))))
    for mode, M in zip(("homo", "hetero"), train_M):
        for seed in seeds:
            r = verify_thm1_by_training(mode, M, n_nodes=n_nodes, seed=seed)
            out.append(_assertion(f"training[{mode},M={M},seed={seed}]",
                                  r["final_loss"] < 1e-6 and bool(r["slope_sign_ok"]), **r))
    return _report(1, out)


def thm2_report(M1=-0.3, M2=0.3, n_nodes=400, seed=0):
    r = verify_thm2(n_nodes=n_nodes, M1=M1, M2=M2, seed=seed)
    out = [_assertion("no_single_threshold", r["oracle"] is None, oracle=r["oracle"])]
    if not r["degenerate"]:
        dm, mlp = r["distmult"], r["mlp"]
        floor = r["threshold_error_floor"]
        out += [
            _assertion("distmult_loss_positive", dm["final_loss"] > 0, **dm),
            _assertion("distmult_errors_at_least_floor", dm["sign_errors"] >= floor,
                       sign_errors=dm["sign_errors"], floor=floor),
            _assertion("mlp_loss_below_1e-4", mlp["final_loss"] < 1e-4, **mlp),
            _assertion("mlp_errors_below_floor", mlp["sign_errors"] < floor,
                       sign_errors=mlp["sign_errors"], floor=floor),
        ]
    return _report(2, out, details=r)


THM3_D = (0, 2, 3, 4, 5, 6, 7, 8)
THM3_DPRIME = tuple(range(9))
THM3_ALPHA = (-0.5, -1.0, -2.0)


def thm3_report(d_values=THM3_D, dprime_values=THM3_DPRIME, alpha_values=THM3_ALPHA):
    rows = verify_thm3_grid(d_values, dprime_values, alpha_values)
    gap = max(r["route_gap"] for r in rows)
    base_ok = all(Fraction(r["delta_baseline"]) == 1 - Fraction(r["alpha"]) for r in rows)
    out = [
        _assertion("baseline_gap_is_1_minus_alpha", base_ok),
        _assertion("formula_matches_construction", gap <= 1e-9, max_gap=gap),
        _assertion("reduced_exactly_on_region", all(r["region_ok"] for r in rows),
                   mismatches=[(r["d"], r["d_prime"], r["alpha"]) for r in rows if not r["region_ok"]]),
    ]
    return _report(3, out, grid=rows)
