"""Scalar wave testbed.

Runs the Laguerre march machinery on the scalar wave equation over a
five-point finite-difference grid, where an independent frequency-domain
solve is cheap enough to compare against node by node.  The point of the
module is cross-validation: both routes discretize space identically, so
any disagreement isolates the transform/march side.

Conventions (matching the vector solver):

* the time-harmonic carrier is ``e^{-i omega t}``;
* the direct route solves ``(-Lap_h - k^2 (1 + i delta)) u = f`` with
  ``k = omega / v`` and a small absorption ``delta`` that detunes domain
  resonances and damps boundary reflections;
* the march transforms the damped wave equation
  ``v^-2 (u_tt + gamma u_t) - Lap u = f(x) W(t) e^{-i omega t}`` with
  ``gamma = delta * omega``, which has exactly the direct equation as its
  limiting-amplitude regime.  Each Laguerre order solves the SPD system

      (-Lap_h + ((eta/2)^2 + gamma eta/2) / v^2) u_m = c_m f - (Phi2 + gamma Phi1) / v^2

  with the same second-order recurrence accumulators used by the vector
  preconditioner.

The limiting amplitude is extracted from the march as the ratio of the
synthesized response spectrum to the synthesized source-window spectrum.
For a response exactly phase-locked to the windowed carrier the ratio is
the amplitude itself, independent of window length and synthesis
normalization; transients decay relative to the window as the window
grows, which is the limiting-amplitude principle in discrete form.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .laguerre import (
    LaguerreConfig,
    RecurrenceState,
    basis_quad_nodes,
    laguerre_sequence,
    phi_fourier,
    push_accumulator,
    window_source_coeffs,
)
from .krylov import make_sgs_preconditioner, pcg
from .preconditioner import InnerSolveError


@dataclass
class ScalarGrid:
    """Interior nodes of a Dirichlet rectangle, spacing h in both directions.

    Nodes are ordered row-major: node (i, j) at (x, y) = ((i+1) h, (j+1) h)
    has flat index j * nx + i.  The wave speed is stored per node and must
    be strictly positive.  A grid with ny == 1 is treated as genuinely
    one-dimensional (no transverse coupling or boundary).
    """

    nx: int
    ny: int
    h: float
    speed: np.ndarray

    def __post_init__(self):
        if self.nx < 2 or self.ny < 1:
            raise ValueError("grid needs nx >= 2 and ny >= 1")
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        v = np.broadcast_to(np.asarray(self.speed, dtype=float),
                            (self.n_nodes,)).copy()
        if not np.all(v > 0):
            raise ValueError("wave speed must be strictly positive")
        self.speed = v

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def node_coordinates(self):
        """Flat (x, y) arrays for every node, in node order."""
        i = np.arange(self.nx)
        j = np.arange(self.ny)
        xi, yj = np.meshgrid((i + 1) * self.h, (j + 1) * self.h)
        return xi.ravel(), yj.ravel()


def minus_laplacian(grid: ScalarGrid) -> sp.csr_matrix:
    """Negative five-point Laplacian with homogeneous Dirichlet boundary.

    Symmetric positive definite.  For ny == 1 the stencil is the 1-D
    three-point one.
    """
    nx, ny, h = grid.nx, grid.ny, grid.h
    ex = sp.diags([-np.ones(nx - 1), 2.0 * np.ones(nx), -np.ones(nx - 1)],
                  [-1, 0, 1])
    if ny == 1:
        return (ex / h ** 2).tocsr()
    ey = sp.diags([-np.ones(ny - 1), 2.0 * np.ones(ny), -np.ones(ny - 1)],
                  [-1, 0, 1])
    lap = sp.kron(sp.identity(ny), ex) + sp.kron(ey, sp.identity(nx))
    return (lap / h ** 2).tocsr()


def march_matrix(grid: ScalarGrid, omega: float, eta: float,
                 delta: float = 1e-2) -> sp.csr_matrix:
    """SPD operator solved at every Laguerre order of the scalar march."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    gamma = delta * omega
    shift = ((eta / 2) ** 2 + gamma * eta / 2) / grid.speed ** 2
    return (minus_laplacian(grid) + sp.diags(shift)).tocsr()


def helmholtz_direct(grid: ScalarGrid, omega: float, f, delta: float = 1e-2):
    """Frequency-domain reference: solve (-Lap_h - k^2 (1+i delta)) u = f.

    One sparse LU factorization; meant for grids small enough that a direct
    solve is unquestionable.  Raises if the factorization is singular
    (possible only at an exact resonance with delta = 0).
    """
    f = np.asarray(f)
    if f.shape != (grid.n_nodes,):
        raise ValueError("source must be a flat per-node array")
    k2 = (omega / grid.speed) ** 2
    op = (minus_laplacian(grid).astype(complex)
          - sp.diags(k2 * (1.0 + 1j * delta))).tocsc()
    try:
        lu = spla.splu(op)
    except RuntimeError as exc:
        raise ValueError(f"direct Helmholtz factorization failed: {exc}")
    return lu.solve(f.astype(complex))


def source_window_coeffs(omega: float, config: LaguerreConfig, m_count: int,
                         ramp: float = 0.0):
    """Laguerre coefficients of the windowed carrier driving the march.

    ramp == 0 reproduces the sharp rectangular window used by the vector
    solver.  ramp > 0 blends both window edges with a sin^2 ramp of that
    length, which kills the algebraic coefficient tail the sharp edges
    produce; the time-domain resummation tests rely on this.
    """
    if ramp == 0.0:
        return window_source_coeffs(omega, config, m_count)
    t_end = 2.0 * config.tau
    if not 0 < ramp <= config.tau:
        raise ValueError("ramp must lie in (0, tau]")
    x, w = basis_quad_nodes(config.eta, omega, m_count, t_end)
    env = np.ones_like(x)
    up = x < ramp
    env[up] = np.sin(0.5 * np.pi * x[up] / ramp) ** 2
    down = x > t_end - ramp
    env[down] = np.sin(0.5 * np.pi * (t_end - x[down]) / ramp) ** 2
    basis = laguerre_sequence(m_count, config.eta * x)
    return basis @ (w * env * np.exp(1j * omega * x))


@dataclass
class ScalarMarchResult:
    grid: ScalarGrid
    omega: float
    delta: float
    config: LaguerreConfig
    coeffs: np.ndarray        # (m_star, n_nodes) complex
    source_series: np.ndarray  # source-window coefficients actually used
    inner_iterations: int
    truncated: bool


def wave_laguerre_march(grid: ScalarGrid, omega: float, f,
                        config: LaguerreConfig, delta: float = 1e-2,
                        ramp: float = 0.0, method: str = "sgs_pcg",
                        inner_tol: float = 1e-10,
                        inner_max_it=None) -> ScalarMarchResult:
    """March the damped scalar wave equation through Laguerre orders.

    Every order solves the same SPD ``march_matrix`` system, with the
    right-hand side assembled from the source coefficient and the
    derivative-recurrence accumulators of all previous orders.  The march
    runs to config.m_max unless the synthesis contribution stays below
    eps_lag times the accumulated synthesis for five consecutive orders.

    method 'sgs_pcg' runs conjugate gradients with a symmetric
    Gauss-Seidel preconditioner; 'direct' factorizes once and reuses the
    factorization (useful when thousands of orders are needed).
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_nodes,):
        raise ValueError("source must be a flat per-node array")
    if not omega > 0:
        raise ValueError("omega must be positive")
    op = march_matrix(grid, omega, config.eta, delta)
    if method == "direct":
        lu = spla.splu(op.tocsc())

        def solve(rhs, m):
            return lu.solve(rhs), 0
    elif method == "sgs_pcg":
        precond = make_sgs_preconditioner(op)

        def solve(rhs, m):
            x, report = pcg(op, rhs, preconditioner=precond, tol=inner_tol,
                            max_it=inner_max_it)
            if not report.converged:
                raise InnerSolveError(m, "inner PCG stalled")
            return x, report.iterations
    else:
        raise ValueError(f"unknown inner method '{method}'")

    eta = config.eta
    gamma = delta * omega
    inv_v2 = 1.0 / grid.speed ** 2
    c = source_window_coeffs(-omega, config, config.m_max, ramp)
    phis = phi_fourier(np.arange(config.m_max), -omega, eta)
    n = grid.n_nodes
    acc = RecurrenceState(np.zeros(n, dtype=complex),
                          np.zeros(n, dtype=complex), 0)
    coeffs = []
    z = np.zeros(n, dtype=complex)
    total_inner = 0
    below = 0
    truncated = False
    for m in range(config.m_max):
        phi1 = acc.phi1(eta)
        phi2 = acc.phi2(eta)
        rhs = c[m] * f - inv_v2 * (phi2 + gamma * phi1)
        if np.linalg.norm(rhs) == 0.0:
            u = np.zeros(n, dtype=complex)
        else:
            xr, it_r = solve(rhs.real, m)
            xi, it_i = solve(rhs.imag, m)
            u = xr + 1j * xi
            total_inner += it_r + it_i
        coeffs.append(u)
        contribution = (eta / 2) * phis[m] * u
        z += contribution
        push_accumulator(acc, u)
        if np.linalg.norm(contribution) <= config.eps_lag * np.linalg.norm(z):
            below += 1
            if below >= 5:
                truncated = True
                break
        else:
            below = 0
    m_star = len(coeffs)
    return ScalarMarchResult(grid=grid, omega=omega, delta=delta,
                             config=config,
                             coeffs=np.array(coeffs),
                             source_series=c[:m_star],
                             inner_iterations=total_inner,
                             truncated=truncated)


def synthesize_field(result: ScalarMarchResult):
    """Limiting amplitude per node: response spectrum over source spectrum.

    Both synths evaluate at the march carrier; the ratio cancels the
    window-length and normalization factors, leaving the coefficient of
    ``e^{-i omega t}`` that the field locks onto once transients fade.
    """
    eta = result.config.eta
    m_star = result.coeffs.shape[0]
    phis = phi_fourier(np.arange(m_star), -result.omega, eta)
    z = (eta / 2) * (phis @ result.coeffs)
    s = (eta / 2) * (phis @ result.source_series)
    if s == 0:
        raise ValueError("source spectrum synthesized to zero")
    return z / s


def resum_time(result: ScalarMarchResult, times):
    """Time-domain field at the given times, shape (len(times), n_nodes).

    The complex signal's physical part is its real component; the
    imaginary part is the quadrature (90-degree shifted) response.
    """
    times = np.asarray(times, dtype=float)
    eta = result.config.eta
    basis = laguerre_sequence(result.coeffs.shape[0], eta * times)
    return eta * (basis.T @ result.coeffs)


def limiting_amplitude_check(grid: ScalarGrid, omega: float, f,
                             config: LaguerreConfig, t_window=None,
                             delta: float = 1e-2, method: str = "direct",
                             exclusion_cells: float = 5.0) -> float:
    """Relative l2 mismatch between the march's limiting amplitude and the
    direct frequency-domain solve, over nodes at least `exclusion_cells`
    grid cells away from the source support.

    A zero source matches exactly and returns 0.  t_window overrides the
    half-window tau of `config` (the window is [0, 2 tau]).
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_nodes,):
        raise ValueError("source must be a flat per-node array")
    if not np.any(f != 0):
        return 0.0
    cfg = config if t_window is None else replace(config, tau=float(t_window))
    result = wave_laguerre_march(grid, omega, f, cfg, delta=delta,
                                 method=method)
    u_march = synthesize_field(result)
    u_direct = helmholtz_direct(grid, omega, f, delta=delta)
    x, y = grid.node_coordinates()
    support = f != 0
    r2_min = np.full(grid.n_nodes, np.inf)
    for xs, ys in zip(x[support], y[support]):
        r2_min = np.minimum(r2_min, (x - xs) ** 2 + (y - ys) ** 2)
    mask = r2_min >= (exclusion_cells * grid.h) ** 2
    if not np.any(mask):
        raise ValueError("source exclusion removed every node")
    ref = np.linalg.norm(u_direct[mask])
    if ref == 0.0:
        return 0.0
    return float(np.linalg.norm((u_march - u_direct)[mask]) / ref)


def write_field_csv(path, grid: ScalarGrid, field) -> None:
    """Dump a complex per-node field as `x,y,re,im` rows."""
    field = np.asarray(field)
    if field.shape != (grid.n_nodes,):
        raise ValueError("field must be a flat per-node array")
    x, y = grid.node_coordinates()
    with open(path, "w") as fh:
        fh.write("x,y,re,im\n")
        for xs, ys, v in zip(x, y, field):
            v = complex(v)
            fh.write(f"{float(xs)!r},{float(ys)!r},{v.real!r},{v.imag!r}\n")


def read_field_csv(path):
    """Inverse of write_field_csv: returns (x, y, complex values)."""
    with open(path) as fh:
        header = fh.readline()
        if [c.strip() for c in header.split(",")] != ["x", "y", "re", "im"]:
            raise ValueError(f"unrecognized field CSV header: {header!r}")
        rows = []
        for line in fh:
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"malformed field CSV row: {line!r}")
            rows.append([float(p) for p in parts])
    data = np.array(rows, dtype=float)
    if data.size == 0:
        return np.empty(0), np.empty(0), np.empty(0, dtype=complex)
    return data[:, 0], data[:, 1], data[:, 2] + 1j * data[:, 3]
