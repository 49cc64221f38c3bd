"""Structured quadrilateral grid with edge degrees of freedom.

Edge numbering: the nx*(ny+1) x-directed edges come first (id = j*nx + i for
the edge from node (i,j) to (i+1,j)), then the (nx+1)*ny y-directed edges
(id = nxe + j*(nx+1) + i).  Each cell touches four edges ordered (bottom,
right, top, left) with circulation signs (+1, +1, -1, -1).

Boundary tags: 0 = interior, 1 = outer impedance boundary, 2 = interior
perfectly-conducting arc (eliminated from the solve).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

TAG_INTERIOR = 0
TAG_GAMMA = 1
TAG_PEC = 2


@dataclass(frozen=True)
class ScenarioGeometry:
    """Domain rectangle, optional slotted conducting circle, per-cell regions."""

    width: float
    height: float
    circle_center: Optional[tuple] = None
    circle_radius: float = 0.0
    alpha: float = 2 * np.pi          # slot opening angle; 2*pi = circle absent
    region_map: Optional[np.ndarray] = None   # per-cell region id, row-major

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("domain extents must be positive")
        if not (0.0 <= self.alpha <= 2 * np.pi + 1e-15):
            raise ValueError("alpha must lie in [0, 2*pi]")


@dataclass(frozen=True)
class MediumModel:
    """Per-region material data plus the shared impedance coefficient and
    angular frequency."""

    mu_r: tuple
    eps: tuple
    sigma: tuple
    omega: float
    lam: float = 0.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if any(m <= 0 for m in self.mu_r):
            raise ValueError("mu_r must be positive in every region")
        if any(e <= 0 for e in self.eps):
            raise ValueError("eps must be positive in every region")
        if any(s < 0 for s in self.sigma):
            raise ValueError("sigma must be nonnegative")
        if not (len(self.mu_r) == len(self.eps) == len(self.sigma)):
            raise ValueError("per-region parameter lists must have equal length")

    def eps_r(self, region: int) -> complex:
        """eps + i sigma / omega; real when sigma = 0."""
        s = self.sigma[region]
        if s == 0:
            return complex(self.eps[region])
        return self.eps[region] + 1j * s / self.omega

    def kappa(self, region: int) -> complex:
        k2 = self.omega**2 * self.eps_r(region) * self.mu_r[region]
        return complex(np.sqrt(k2))


@dataclass
class EdgeMesh:
    nx: int
    ny: int
    hx: float
    hy: float
    midpoints: np.ndarray          # (n_edges, 2)
    lengths: np.ndarray            # (n_edges,)
    cell_edges: np.ndarray         # (ncell, 4) ids ordered bottom,right,top,left
    tags: np.ndarray               # (n_edges,) int8
    cell_regions: np.ndarray       # (ncell,) int

    CIRC_SIGNS = (1.0, 1.0, -1.0, -1.0)

    @property
    def n_x_edges(self) -> int:
        return self.nx * (self.ny + 1)

    @property
    def n_edges(self) -> int:
        return self.nx * (self.ny + 1) + (self.nx + 1) * self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def free_dofs(self) -> np.ndarray:
        """Edges that carry unknowns (everything not on the conducting arc)."""
        return np.flatnonzero(self.tags != TAG_PEC)

    def gradient_incidence(self) -> sp.csr_matrix:
        """Integer node-to-edge incidence G: (G psi)_e = psi(head) - psi(tail).
        The discrete gradient; curl of its range vanishes identically."""
        nx, ny = self.nx, self.ny
        nxe = self.n_x_edges
        rows, cols, vals = [], [], []
        for j in range(ny + 1):
            for i in range(nx):
                e = j * nx + i
                rows += [e, e]
                cols += [j * (nx + 1) + i + 1, j * (nx + 1) + i]
                vals += [1, -1]
        for j in range(ny):
            for i in range(nx + 1):
                e = nxe + j * (nx + 1) + i
                rows += [e, e]
                cols += [(j + 1) * (nx + 1) + i, j * (nx + 1) + i]
                vals += [1, -1]
        return sp.csr_matrix(
            (np.array(vals, dtype=np.int64), (rows, cols)),
            shape=(self.n_edges, self.n_nodes),
        )

    def cell_circulation(self) -> sp.csr_matrix:
        """Integer cell-to-edge circulation matrix (the discrete curl)."""
        ncell = self.nx * self.ny
        rows = np.repeat(np.arange(ncell), 4)
        cols = self.cell_edges.ravel()
        vals = np.tile(np.array(self.CIRC_SIGNS, dtype=np.int64), ncell)
        return sp.csr_matrix((vals, (rows, cols)), shape=(ncell, self.n_edges))


def build_mesh(nx: int, ny: int, hx: float, hy: float,
               geometry: ScenarioGeometry) -> EdgeMesh:
    """Construct the edge mesh and tag boundaries.

    Outer rectangle edges are tagged impedance (Gamma).  The conducting arc is
    the staircase of edges separating inside-circle cells from outside-circle
    cells, kept where the edge midpoint's polar angle (about the circle
    center, slot centered on angle 0) falls inside the closed angular extent
    [alpha/2, 2pi - alpha/2].  This transition rule guarantees the tagged set
    is a closed loop at alpha = 0 and nests monotonically as alpha decreases.
    """
    if nx < 2 or ny < 2:
        raise ValueError("need at least a 2x2 grid")
    if hx <= 0 or hy <= 0:
        raise ValueError("cell sizes must be positive")

    W, H = nx * hx, ny * hy
    nxe = nx * (ny + 1)
    nye = (nx + 1) * ny
    n_edges = nxe + nye

    mids = np.empty((n_edges, 2))
    lens = np.empty(n_edges)
    for j in range(ny + 1):
        for i in range(nx):
            e = j * nx + i
            mids[e] = ((i + 0.5) * hx, j * hy)
            lens[e] = hx
    for j in range(ny):
        for i in range(nx + 1):
            e = nxe + j * (nx + 1) + i
            mids[e] = (i * hx, (j + 0.5) * hy)
            lens[e] = hy

    cell_edges = np.empty((nx * ny, 4), dtype=np.int64)
    for j in range(ny):
        for i in range(nx):
            c = j * nx + i
            cell_edges[c, 0] = j * nx + i                      # bottom
            cell_edges[c, 1] = nxe + j * (nx + 1) + i + 1      # right
            cell_edges[c, 2] = (j + 1) * nx + i                # top
            cell_edges[c, 3] = nxe + j * (nx + 1) + i          # left

    tags = np.zeros(n_edges, dtype=np.int8)
    # outer boundary
    tags[0:nx] = TAG_GAMMA
    tags[ny * nx:nxe] = TAG_GAMMA
    for j in range(ny):
        tags[nxe + j * (nx + 1)] = TAG_GAMMA
        tags[nxe + j * (nx + 1) + nx] = TAG_GAMMA

    regions = geometry.region_map
    if regions is None:
        regions = np.zeros(nx * ny, dtype=np.int64)
    else:
        regions = np.asarray(regions, dtype=np.int64)
        if regions.shape != (nx * ny,):
            raise ValueError("region_map must have one entry per cell")

    if geometry.circle_center is not None and geometry.circle_radius > 0:
        cx, cy = geometry.circle_center
        R = geometry.circle_radius
        if not (cx - R > 0 and cx + R < W and cy - R > 0 and cy + R < H):
            raise ValueError("conducting circle must lie strictly inside the domain")
        if geometry.alpha < 2 * np.pi - 1e-15:
            xs = (np.arange(nx) + 0.5) * hx
            ys = (np.arange(ny) + 0.5) * hy
            inside = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2 < R * R
            half = geometry.alpha / 2

            def gate(eid):
                ang = np.arctan2(mids[eid, 1] - cy, mids[eid, 0] - cx) % (2 * np.pi)
                return half <= ang <= 2 * np.pi - half or geometry.alpha < 1e-15

            for j in range(ny):
                for i in range(nx):
                    if not inside[j, i]:
                        continue
                    nbrs = (
                        (j * nx + i, j - 1, i),          # bottom edge, cell below
                        ((j + 1) * nx + i, j + 1, i),    # top edge, cell above
                        (nxe + j * (nx + 1) + i, j, i - 1),      # left
                        (nxe + j * (nx + 1) + i + 1, j, i + 1),  # right
                    )
                    for eid, jn, in_ in nbrs:
                        if 0 <= jn < ny and 0 <= in_ < nx and inside[jn, in_]:
                            continue
                        if gate(eid):
                            if tags[eid] == TAG_GAMMA:
                                raise ValueError("arc reached the outer boundary")
                            tags[eid] = TAG_PEC

    return EdgeMesh(nx=nx, ny=ny, hx=hx, hy=hy, midpoints=mids, lengths=lens,
                    cell_edges=cell_edges, tags=tags, cell_regions=regions)


def locate_source_dof(mesh: EdgeMesh, point) -> int:
    """The x-directed edge whose midpoint is nearest the point (lowest id on
    ties)."""
    p = np.asarray(point, dtype=float)
    d2 = np.sum((mesh.midpoints[: mesh.n_x_edges] - p) ** 2, axis=1)
    return int(np.argmin(d2))
