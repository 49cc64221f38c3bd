"""Finite-element assembly on the edge mesh.

Two systems share one sparsity pattern:

* the complex time-harmonic operator
      A = K - omega^2 (mu_r eps_r^2)-weighted mass - i omega M_gamma,
* the real, sign-definite transform-domain operator
      B = K + (eta^2/4) M_eps - (eta/2) M_sigma + (eta/2) M_gamma,

with K the mu_r^{-1}-weighted curl-curl stiffness, M_eps the (mu_r eps)-
weighted mass, M_sigma the (mu_r sigma)-weighted mass and M_gamma the
tangential boundary mass on the outer boundary scaled by lam*sqrt(mu_r eps).
All element integrals are closed-form on rectangles.  Conducting-arc DOFs are
eliminated symmetrically from every matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .laguerre import LaguerreConfig
from .mesh import TAG_GAMMA, TAG_PEC, EdgeMesh, MediumModel

CIRC = np.array([1.0, 1.0, -1.0, -1.0])


@dataclass
class AssembledOperators:
    """Reduced (free-DOF) operators with identical sparsity patterns.

    beta1/beta2 are per-region coefficients:
    beta1[r] = mu_r (eps eta^2 - 2 eta sigma)/4, beta2[r] = (eta/2) lam
    sqrt(mu_r eps).
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    K: sp.csr_matrix
    M_eps: sp.csr_matrix
    M_sigma: sp.csr_matrix
    M_gamma: sp.csr_matrix
    beta1: np.ndarray
    beta2: np.ndarray
    free_dofs: np.ndarray
    n_full: int


def element_stiffness(hx: float, hy: float) -> np.ndarray:
    """Curl-curl element matrix (unit mu_r) in (bottom, right, top, left)
    order with global edge orientations."""
    return np.outer(CIRC, CIRC) / (hx * hy)


def element_mass(hx: float, hy: float) -> np.ndarray:
    M = np.zeros((4, 4))
    M[0, 0] = M[2, 2] = hy / hx / 3.0
    M[0, 2] = M[2, 0] = hy / hx / 6.0
    M[1, 1] = M[3, 3] = hx / hy / 3.0
    M[1, 3] = M[3, 1] = hx / hy / 6.0
    return M


def _gamma_adjacent_cells(mesh: EdgeMesh, gamma: np.ndarray) -> np.ndarray:
    """The unique cell adjacent to each outer-boundary edge."""
    nx, ny, nxe = mesh.nx, mesh.ny, mesh.n_x_edges
    cells = np.empty(gamma.size, dtype=np.int64)
    for k, e in enumerate(gamma):
        if e < nxe:
            i, j = e % nx, e // nx
            cells[k] = i if j == 0 else (ny - 1) * nx + i
        else:
            r = e - nxe
            i, j = r % (nx + 1), r // (nx + 1)
            cells[k] = j * nx if i == 0 else j * nx + nx - 1
    return cells


def _pattern(mesh: EdgeMesh):
    """Shared COO pattern: per-cell 4x4 blocks followed by outer-boundary
    diagonal slots."""
    ce = mesh.cell_edges
    rows = np.repeat(ce, 4, axis=1).ravel()
    cols = np.tile(ce, (1, 4)).ravel()
    gamma = np.flatnonzero(mesh.tags == TAG_GAMMA)
    return (np.concatenate([rows, gamma]), np.concatenate([cols, gamma]), gamma)


def _reduce(rows, cols, data, free_mask, renum, n_free):
    keep = free_mask[rows] & free_mask[cols]
    mat = sp.csr_matrix(
        (data[keep], (renum[rows[keep]], renum[cols[keep]])),
        shape=(n_free, n_free))
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def _check_regions(mesh: EdgeMesh, medium: MediumModel) -> None:
    nreg = len(medium.mu_r)
    if mesh.cell_regions.min() < 0 or mesh.cell_regions.max() >= nreg:
        raise ValueError("cell region id outside the medium's region list")
    if any(m == 0 for m in medium.mu_r):
        raise ValueError("zero mu_r")


def assemble_operators(mesh: EdgeMesh, medium: MediumModel,
                       config: LaguerreConfig) -> AssembledOperators:
    """Assemble A, B and the mass operators feeding the transform recurrence.

    Raises ValueError naming the offending region if eta <= 2 sigma/eps
    anywhere (the definite-shift coefficient beta1 would lose positivity).
    """
    _check_regions(mesh, medium)
    eta = config.eta
    mu = np.asarray(medium.mu_r, dtype=float)
    eps = np.asarray(medium.eps, dtype=float)
    sig = np.asarray(medium.sigma, dtype=float)
    for r in range(len(mu)):
        if eta <= 2.0 * sig[r] / eps[r]:
            raise ValueError(
                f"eta = {eta} <= 2*sigma/eps = {2 * sig[r] / eps[r]} "
                f"in region {r}: transform-domain operator not sign-definite")

    beta1 = mu * (eps * eta**2 - 2.0 * eta * sig) / 4.0
    beta2 = (eta / 2.0) * medium.lam * np.sqrt(mu * eps)

    reg = mesh.cell_regions
    Kloc = element_stiffness(mesh.hx, mesh.hy).ravel()
    Mloc = element_mass(mesh.hx, mesh.hy).ravel()
    rows, cols, gamma = _pattern(mesh)
    ncell = mesh.nx * mesh.ny
    ng = gamma.size

    def vol(weights):
        return (np.asarray(weights)[reg][:, None] * Mloc[None, :]).ravel()

    kvol = ((1.0 / mu)[reg][:, None] * Kloc[None, :]).ravel()
    zeros_g = np.zeros(ng)
    zeros_v = np.zeros(ncell * 16)

    gcell = _gamma_adjacent_cells(mesh, gamma)
    glen = mesh.lengths[gamma]
    # real boundary weight for B and the recurrence; complex-capable one for A
    epsr = np.array([medium.eps_r(r) for r in range(len(mu))])
    gw_real = medium.lam * np.sqrt((mu * eps))[reg[gcell]] / glen
    gw_cplx = medium.lam * np.sqrt((mu * epsr)[reg[gcell]]) / glen

    w = medium.omega
    omega2_w = w**2 * mu * epsr**2            # harmonic mass weight per region
    a_data = np.concatenate([
        kvol.astype(complex) - (omega2_w[reg][:, None] * Mloc[None, :]).ravel(),
        -1j * w * gw_cplx])
    b_data = np.concatenate([
        kvol + (eta**2 / 4.0) * vol(mu * eps) - (eta / 2.0) * vol(mu * sig),
        (eta / 2.0) * gw_real])
    k_data = np.concatenate([kvol, zeros_g])
    meps_data = np.concatenate([vol(mu * eps), zeros_g])
    msig_data = np.concatenate([vol(mu * sig), zeros_g])
    mgam_data = np.concatenate([zeros_v, gw_real])

    free = mesh.free_dofs
    free_mask = mesh.tags != TAG_PEC
    renum = np.full(mesh.n_edges, -1, dtype=np.int64)
    renum[free] = np.arange(free.size)

    def red(data):
        return _reduce(rows, cols, data, free_mask, renum, free.size)

    return AssembledOperators(
        A=red(a_data), B=red(b_data), K=red(k_data), M_eps=red(meps_data),
        M_sigma=red(msig_data), M_gamma=red(mgam_data),
        beta1=beta1, beta2=beta2, free_dofs=free, n_full=mesh.n_edges)


def assemble_harmonic(mesh: EdgeMesh, medium: MediumModel) -> sp.csr_matrix:
    """Just the reduced complex harmonic operator A."""
    # eta plays no role in A; any valid config works
    cfg = LaguerreConfig(eta=max(1.0, 4.0 * max(
        s / e for s, e in zip(medium.sigma, medium.eps))), tau=1.0)
    return assemble_operators(mesh, medium, cfg).A


def export_matrix(mat: sp.spmatrix, path: str) -> None:
    """Plain-text coordinate dump: header '# nrows ncols nnz kind', then one
    'row col value' (real) or 'row col re im' (complex) line per entry."""
    coo = mat.tocoo()
    kind = "complex" if np.iscomplexobj(coo.data) else "real"
    with open(path, "w") as f:
        f.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz} {kind}\n")
        if kind == "complex":
            for r, c, v in zip(coo.row, coo.col, coo.data):
                f.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")
        else:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                f.write(f"{r} {c} {float(v)!r}\n")


def load_matrix(path: str) -> sp.csr_matrix:
    with open(path) as f:
        head = f.readline().split()
        if len(head) != 5 or head[0] != "#":
            raise ValueError(f"{path}: malformed matrix header")
        nr, nc, nnz, kind = int(head[1]), int(head[2]), int(head[3]), head[4]
        rows, cols, vals = [], [], []
        for line in f:
            parts = line.split()
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            if kind == "complex":
                vals.append(complex(float(parts[2]), float(parts[3])))
            else:
                vals.append(float(parts[2]))
    if len(vals) != nnz:
        raise ValueError(f"{path}: expected {nnz} entries, found {len(vals)}")
    dt = complex if kind == "complex" else float
    return sp.csr_matrix((np.array(vals, dtype=dt), (rows, cols)), shape=(nr, nc))
