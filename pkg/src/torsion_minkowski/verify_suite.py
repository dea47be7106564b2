"""Batch property checks on randomized polygon families.

Three checks cover the inequality and limit statements the rest of the
package relies on: the fourth-root concavity of the rigidity along
Minkowski segments (with equality only for homothets), the continuity of
the mixed rigidity under support-number perturbations, and the dilation
homogeneities of the rigidity (degree 4) and the mixed rigidity
(degree 3 in the first argument, 1 in the second).

Mesh resolutions passed to these checks are relative to each body's
circumradius, matching the CLI convention.  The Brunn-Minkowski slack
and the continuity modulus are configuration values tied to that
resolution, not constants baked into the checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary_measure import facet_measure, mixed_torsion
from .errors import EmptyInterior, InvariantViolation
from .support_geometry import (
    Polygon,
    SupportSpec,
    angles_to_normals,
    build_polytope,
    metrics,
    minkowski_sum,
    regular_polygon,
    scale,
    support_spec_of,
)
from .torsion_fem import solve_on_polygon

DEFAULT_BM_SLACK = 0.005
DEFAULT_EQUALITY_TOL = 0.01
DEFAULT_HOMOGENEITY_TOL = 0.01


@dataclass
class CheckReport:
    name: str
    trials: int
    failures: int
    worst_margin: float
    details: list = field(default_factory=list)
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "trials": self.trials,
            "failures": self.failures,
            "worst_margin": self.worst_margin,
            "pass": self.ok,
            "details": self.details,
        }
        if self.note:
            out["note"] = self.note
        return out

    def csv_row(self) -> str:
        return f"{self.name},{self.trials},{self.failures},{self.worst_margin:.6g}"


def random_polygon(rng: np.random.Generator, max_facets: int = 10,
                   max_aspect: float = 10.0 / 3.0) -> Polygon:
    """Random convex polygon: random spanning fan, support numbers near 1.

    Degenerate fans and bodies more elongated than ``max_aspect`` are
    rejected and redrawn, which keeps the family inside the solver's
    operating envelope.
    """
    while True:
        n = int(rng.integers(4, max_facets + 1))
        ang = np.sort(rng.uniform(-np.pi, np.pi, n))
        gaps = np.append(np.diff(ang), ang[0] + 2.0 * np.pi - ang[-1])
        if gaps.min() < 0.15 or gaps.max() >= 0.95 * np.pi:
            continue
        values = rng.uniform(0.7, 1.3, n)
        try:
            p = build_polytope(SupportSpec(angles_to_normals(ang), values))
        except (EmptyInterior, InvariantViolation):
            continue
        m = metrics(p)
        if m.circumradius / m.inradius > max_aspect:
            continue
        return p


def polygon_corpus(seed: int, count: int, max_facets: int = 10,
                   max_aspect: float = 10.0 / 3.0) -> list[Polygon]:
    rng = np.random.default_rng(seed)
    return [random_polygon(rng, max_facets, max_aspect) for _ in range(count)]


def _tau_quarter(p: Polygon, mesh_h_rel: float) -> float:
    h = mesh_h_rel * metrics(p).circumradius
    return solve_on_polygon(p, h).tau_energy ** 0.25


def is_homothetic(p: Polygon, q: Polygon, tol: float = 1e-9) -> bool:
    """True when q is a translate and dilate of p.

    Fans are aligned cyclically by angle first: roundoff can park a
    normal on either side of the -pi/pi branch cut, which permutes the
    angle-sorted order without changing the fan.
    """
    if len(p) != len(q):
        return False
    sp, sq = support_spec_of(p), support_spec_of(q)
    ap = np.arctan2(sp.normals[:, 1], sp.normals[:, 0])
    aq = np.arctan2(sq.normals[:, 1], sq.normals[:, 0])
    roll = None
    for r0 in range(len(aq)):
        d = (np.roll(aq, -r0) - ap + np.pi) % (2.0 * np.pi) - np.pi
        if np.abs(d).max() < 1e-7:
            roll = r0
            break
    if roll is None:
        return False
    vq = np.roll(sq.values, -roll)
    nq = np.roll(sq.normals, -roll, axis=0)
    ratios = vq - nq @ _centroid(q)
    base = sp.values - sp.normals @ _centroid(p)
    r = ratios / base
    return bool(np.all(np.abs(r - r.mean()) <= tol * max(1.0, abs(r.mean()))))


def _centroid(p: Polygon) -> np.ndarray:
    return metrics(p).centroid


def brunn_minkowski_check(p0: Polygon, p1: Polygon, t_grid, mesh_h: float = 0.02,
                          slack: float = DEFAULT_BM_SLACK,
                          equality_tol: float = DEFAULT_EQUALITY_TOL) -> CheckReport:
    """Fourth-root concavity of the rigidity along a Minkowski segment.

    For each t the combination (1-t) p0 + t p1 must satisfy the concavity
    inequality with relative slack ``-slack``; when the pair is a
    translate/dilate pair the equality defect must also stay below
    ``equality_tol``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any((t_grid <= 0) | (t_grid >= 1)):
        raise InvariantViolation("t_grid must lie strictly inside (0, 1)")
    q0, q1 = _tau_quarter(p0, mesh_h), _tau_quarter(p1, mesh_h)
    homothetic = is_homothetic(p0, p1)
    details = []
    failures = 0
    worst = np.inf
    for t in t_grid:
        comb = minkowski_sum(scale(p0, 1.0 - t), scale(p1, t))
        lhs = _tau_quarter(comb, mesh_h)
        rhs = (1.0 - t) * q0 + t * q1
        margin = (lhs - rhs) / rhs
        bad = margin < -slack
        if homothetic:
            bad = bad or abs(margin) > equality_tol
        failures += int(bad)
        worst = min(worst, margin)
        details.append({"t": float(t), "margin": float(margin),
                        "homothetic": homothetic, "pass": not bad})
    return CheckReport("brunn_minkowski", len(t_grid), failures, float(worst), details)


def continuity_check(p: Polygon, perturbation_scale: float, trials: int,
                     mesh_h: float = 0.02, rng_seed: int = 42,
                     modulus_factor: float = 10.0) -> CheckReport:
    """Response of the mixed rigidity to support-number perturbations.

    The comparison body is the unit disk (support function 1), so the
    mixed rigidity is the measure's total mass.  Changes must stay below
    L times the Hausdorff distance with L = modulus_factor * tau_1 /
    inradius — an engineering budget standing in for the continuity
    statement, which provides no modulus.
    """
    m = metrics(p)
    if perturbation_scale >= 0.1 * m.inradius:
        raise InvariantViolation("perturbation_scale must stay below 0.1 * inradius")
    rng = np.random.default_rng(rng_seed)
    spec = support_spec_of(p)
    base_field = solve_on_polygon(p, mesh_h * m.circumradius)
    tau1_base = facet_measure(base_field).total_mass
    modulus = modulus_factor * tau1_base / m.inradius
    from .support_geometry import hausdorff_distance

    details = []
    failures = 0
    worst = 0.0
    for k in range(trials):
        delta = rng.uniform(-perturbation_scale, perturbation_scale, len(spec))
        q = build_polytope(spec.with_values(spec.values + delta))
        d_h = hausdorff_distance(p, q)
        f_q = solve_on_polygon(q, mesh_h * metrics(q).circumradius)
        d_tau1 = abs(facet_measure(f_q).total_mass - tau1_base)
        if d_h < 1e-14:
            ratio = 0.0
            bad = d_tau1 > 1e-8 * tau1_base
        else:
            ratio = d_tau1 / (modulus * d_h)
            bad = ratio > 1.0
        failures += int(bad)
        worst = max(worst, ratio)
        details.append({"trial": k, "hausdorff": float(d_h),
                        "delta_tau1": float(d_tau1), "ratio": float(ratio),
                        "pass": not bad})
    return CheckReport(
        "continuity", trials, failures, float(worst), details,
        note="budget modulus tied to the mesh resolution, not a proven modulus of continuity")


def homogeneity_check(p: Polygon, scales, mesh_h: float = 0.02,
                      tol: float = DEFAULT_HOMOGENEITY_TOL) -> CheckReport:
    """Dilation homogeneity: tau scales with the 4th power, the mixed
    rigidity against a fixed comparison octagon with the 3rd."""
    scales = np.asarray(scales, dtype=float)
    if np.any(scales <= 0):
        raise InvariantViolation("scales must be positive")
    comparison = regular_polygon(8, 1.0)
    m = metrics(p)
    f0 = solve_on_polygon(p, mesh_h * m.circumradius)
    tau0 = f0.tau_energy
    tau1_0 = mixed_torsion(facet_measure(f0), comparison)
    details = []
    failures = 0
    worst = 0.0
    for s in scales:
        ps = scale(p, float(s))
        fs = solve_on_polygon(ps, mesh_h * s * m.circumradius)
        r_tau = abs(fs.tau_energy / (s ** 4 * tau0) - 1.0)
        tau1_s = mixed_torsion(facet_measure(fs), comparison)
        r_tau1 = abs(tau1_s / (s ** 3 * tau1_0) - 1.0)
        bad = r_tau > tol or r_tau1 > tol
        failures += int(bad)
        worst = max(worst, r_tau, r_tau1)
        details.append({"s": float(s), "tau_defect": float(r_tau),
                        "tau1_defect": float(r_tau1), "pass": not bad})
    return CheckReport("homogeneity", len(scales), failures, float(worst), details)


def run_verify_corpus(seed: int = 42, count: int = 50, mesh_h: float = 0.02,
                      bm_t: float = 0.5, continuity_trials: int = 1,
                      homogeneity_scales=(2.0,)) -> list[CheckReport]:
    """Run all three checks over a seeded corpus and merge the reports.

    Brunn-Minkowski runs on consecutive corpus pairs; continuity perturbs
    each member at 2% of its inradius; homogeneity dilates each member.
    Reports are merged deterministically in corpus order.
    """
    corpus = polygon_corpus(seed, count)
    bm = CheckReport("brunn_minkowski", 0, 0, np.inf, [])
    cont = CheckReport(
        "continuity", 0, 0, 0.0, [],
        note="budget modulus tied to the mesh resolution, not a proven modulus of continuity")
    homo = CheckReport("homogeneity", 0, 0, 0.0, [])
    for k, p in enumerate(corpus):
        r_h = homogeneity_check(p, homogeneity_scales, mesh_h)
        _merge(homo, r_h, k, smallest=False)
        r_c = continuity_check(p, 0.02 * metrics(p).inradius,
                               continuity_trials, mesh_h, rng_seed=seed + k)
        _merge(cont, r_c, k, smallest=False)
        if k % 2 == 1:
            r_b = brunn_minkowski_check(corpus[k - 1], p, [bm_t], mesh_h)
            _merge(bm, r_b, k, smallest=True)
    return [bm, cont, homo]


def _merge(acc: CheckReport, part: CheckReport, index: int, smallest: bool) -> None:
    acc.trials += part.trials
    acc.failures += part.failures
    if smallest:
        acc.worst_margin = float(min(acc.worst_margin, part.worst_margin))
    else:
        acc.worst_margin = float(max(acc.worst_margin, part.worst_margin))
    for d in part.details:
        acc.details.append({"corpus_index": index, **d})
