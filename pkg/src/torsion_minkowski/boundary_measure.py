"""Boundary flux recovery and the torsion measure.

The normal derivative of the torsion function is recovered by the
variationally consistent lifting: the boundary mass matrix is solved
against the residual of the full stiffness system, which restores an
order of accuracy over raw triangle gradients for boundary functionals.
The squared flux integrated facet by facet (trapezoidal in g^2) gives
the per-normal weights of the torsion measure; corner nodes contribute
half an edge to each adjacent facet, which is what the trapezoidal rule
does on its own.

On top of the measure sit the mixed rigidity pairing, the residual of
the representation identity tau = (1/4) * sum h_i mu_i, and a
finite-difference probe of the Hadamard derivative formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import FacetAttributionMissing, FluxSolveFailure, InvariantViolation
from .mesh import refine, triangulate
from .support_geometry import (
    Polygon,
    SupportSpec,
    build_polytope,
    metrics,
    minkowski_sum,
    scale,
    support_values,
)
from .torsion_fem import SolverOptions, TorsionField, solve_torsion

CLOSURE_BUDGET = 0.02  # relative first-moment defect allowed for a measure


@dataclass(frozen=True)
class SurfaceMeasure:
    """Per-normal weights approximating the torsion measure.

    ``normals`` are unit directions, index-aligned with the generating
    support spec when one is supplied; weights are nonnegative and carry
    length-cubed units in the plane.
    """

    normals: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        normals = np.ascontiguousarray(self.normals, dtype=float)
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if weights.shape != (len(normals),):
            raise InvariantViolation("one weight per normal required")
        if np.any(weights < -1e-12 * max(1.0, weights.max(initial=0.0))):
            raise InvariantViolation("measure weights must be nonnegative")
        weights = np.clip(weights, 0.0, None)
        normals.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "weights", weights)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def closure_defect(self) -> float:
        """|sum mu_i X_i| relative to the total mass."""
        return float(np.linalg.norm(self.weights @ self.normals) / self.total_mass)

    def validate(self, budget: float = CLOSURE_BUDGET) -> "SurfaceMeasure":
        if self.closure_defect > budget:
            raise InvariantViolation(
                f"measure closure defect {self.closure_defect:.3%} exceeds {budget:.1%}")
        return self

    def to_dict(self) -> dict:
        return {"normals": self.normals.tolist(), "weights": self.weights.tolist()}


def boundary_flux(f: TorsionField) -> np.ndarray:
    """Magnitude of the boundary normal derivative, per mesh node.

    Solves the boundary mass system M g = (K u - b) restricted to
    boundary rows; with the solver's sign convention g approximates
    du/dnu <= 0, and the returned array stores |g| (zero at interior
    nodes).
    """
    mesh = f.mesh
    residual = f.stiffness @ f.u - f.load
    bidx = mesh.boundary_node_ids
    pos = np.full(mesh.n_nodes, -1, dtype=int)
    pos[bidx] = np.arange(len(bidx))
    i = pos[mesh.boundary_edges[:, 0]]
    j = pos[mesh.boundary_edges[:, 1]]
    ln = mesh.boundary_edge_lengths
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([ln / 3.0, ln / 3.0, ln / 6.0, ln / 6.0])
    M = sp.coo_matrix((vals, (rows, cols)), shape=(len(bidx), len(bidx))).tocsr()
    try:
        g = spsolve(M, residual[bidx])
    except Exception as exc:  # singular boundary mass matrix
        raise FluxSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(g)):
        raise FluxSolveFailure("boundary mass solve produced non-finite flux")
    out = np.zeros(mesh.n_nodes)
    out[bidx] = np.abs(g)
    return out


def _facet_weights(f: TorsionField, flux: np.ndarray | None = None) -> np.ndarray:
    """Trapezoidal integral of flux^2 along each polygon facet."""
    mesh = f.mesh
    g = boundary_flux(f) if flux is None else flux
    g2 = g ** 2
    contrib = 0.5 * mesh.boundary_edge_lengths * (
        g2[mesh.boundary_edges[:, 0]] + g2[mesh.boundary_edges[:, 1]])
    weights = np.zeros(len(mesh.polygon))
    np.add.at(weights, mesh.boundary_facets, contrib)
    return weights


def facet_measure(f: TorsionField, budget: float = CLOSURE_BUDGET) -> SurfaceMeasure:
    """Torsion measure on the mesh polygon's own facet normals."""
    weights = _facet_weights(f)
    return SurfaceMeasure(f.mesh.polygon.facet_normals, weights).validate(budget)


def torsion_measure(f: TorsionField, spec: SupportSpec,
                    budget: float = CLOSURE_BUDGET) -> SurfaceMeasure:
    """Torsion measure with weights aligned to the spec's normal fan.

    The mesh polygon must have been produced by ``build_polytope(spec)``
    so its facets carry source indices; inactive constraints get weight
    zero, keeping the vector dimension fixed for the optimizer.
    """
    src = f.mesh.polygon.source_index
    if src is None:
        raise FacetAttributionMissing(
            "mesh polygon carries no constraint indices; build it via build_polytope")
    per_facet = _facet_weights(f)
    weights = np.zeros(len(spec))
    np.add.at(weights, src, per_facet)
    return SurfaceMeasure(spec.normals, weights).validate(budget)


def mixed_torsion(mu: SurfaceMeasure, h_prime) -> float:
    """Mixed rigidity pairing: sum of h'(X_i) * mu_i.

    ``h_prime`` may be a Polygon (its exact support function is used) or
    a callable mapping an (N, 2) direction array to support values.
    """
    if isinstance(h_prime, Polygon):
        values = support_values(h_prime, mu.normals)
    elif callable(h_prime):
        values = np.asarray(h_prime(mu.normals), dtype=float)
    else:
        raise InvariantViolation("h_prime must be a Polygon or a callable on directions")
    return float(values @ mu.weights)


def representation_residual(f: TorsionField, spec: SupportSpec,
                            mu: SurfaceMeasure) -> float:
    """Relative defect of tau = (1/4) sum h_i mu_i on a consistent triple."""
    rep = 0.25 * float(spec.values @ mu.weights)
    return abs(f.tau_energy - rep) / f.tau_energy


def tau_refined(p: Polygon, target_h: float, graded: bool = True,
                opts: SolverOptions | None = None):
    """Richardson-extrapolated rigidity from one uniform refinement.

    Returns (tau_extrapolated, coarse field, fine field).  The energy
    converges as O(h^2) on the nested pair, so the extrapolation knocks
    the error down by roughly two more orders; the finite-difference
    Hadamard probe needs that accuracy because it divides tau
    differences by small step sizes.
    """
    mesh = triangulate(p, target_h, graded=graded)
    f1 = solve_torsion(mesh, opts)
    f2 = solve_torsion(refine(mesh), opts)
    tau = (4.0 * f2.tau_energy - f1.tau_energy) / 3.0
    return tau, f1, f2


@dataclass(frozen=True)
class HadamardReport:
    s_values: np.ndarray
    fd_quotients: np.ndarray
    predicted_slope: float
    mismatches: np.ndarray
    extrapolated_quotient: float
    extrapolated_mismatch: float

    @property
    def monotone_tail(self) -> bool:
        """Mismatch shrinks between the two smallest step sizes."""
        if len(self.mismatches) < 2:
            return True
        return bool(self.mismatches[-1] <= self.mismatches[-2])


def hadamard_fd_check(spec: SupportSpec, spec_prime: SupportSpec,
                      s_values, mesh_h: float | None = None) -> HadamardReport:
    """Finite-difference probe of the Hadamard derivative formula.

    Compares quotients (tau(body + s * body') - tau(body)) / s against
    the predicted slope sum h'(X_i) mu_i, using Richardson-extrapolated
    rigidities and a measure computed on a refined mesh.  The two
    smallest steps also give a linear extrapolation of the quotient to
    s = 0.
    """
    s_values = np.asarray(s_values, dtype=float)
    if np.any(s_values <= 0) or np.any(np.diff(s_values) >= 0):
        raise InvariantViolation("s_values must be positive and decreasing")
    body = build_polytope(spec)
    body_prime = build_polytope(spec_prime)
    if mesh_h is None:
        mesh_h = 0.02 * metrics(body).circumradius
    tau0, _, fine = tau_refined(body, mesh_h)
    mu = facet_measure(fine)
    predicted = mixed_torsion(mu, body_prime)
    quotients = []
    for s in s_values:
        summed = minkowski_sum(body, scale(body_prime, float(s)))
        tau_s, _, _ = tau_refined(summed, mesh_h)
        quotients.append((tau_s - tau0) / s)
    quotients = np.asarray(quotients)
    mismatches = np.abs(quotients - predicted) / abs(predicted)
    if len(s_values) >= 2:
        s1, s2 = s_values[-2], s_values[-1]
        q1, q2 = quotients[-2], quotients[-1]
        q0 = (s1 * q2 - s2 * q1) / (s1 - s2)
    else:
        q0 = quotients[-1]
    return HadamardReport(
        s_values=s_values,
        fd_quotients=quotients,
        predicted_slope=predicted,
        mismatches=mismatches,
        extrapolated_quotient=q0,
        extrapolated_mismatch=abs(q0 - predicted) / abs(predicted),
    )
