"""Scenario definitions, experiment runner and artifact outputs.

A scenario is a slotted conducting circle inside an absorbing rectangle,
driven by a unit edge source at the circle center, swept over slot
half-angles.  Model 1 is homogeneous (mu_r = mu1 everywhere); model 2 adds
a horizontal permeability band cutting the cavity.

The runner writes, per slot angle alpha:

* ``residual_<mode>_<alpha>.csv``   relative-residual history,
* ``field_magnitude_<alpha>.pgm``   per-cell |E| raster (edge-to-cell
  averaging, 99.5th-percentile scaling, top row = largest y),
* ``diagnostics_laguerre_<alpha>.csv``  per-apply preconditioner stats,

plus one ``manifest.json`` for the sweep.  Alpha appears in file names as
the multiple of pi with four decimals (``0.0500pi``).  Solver failures are
recorded in the manifest entry for their alpha; the sweep always finishes.

Config files are flat ``key = value`` text under ``[section]`` headers;
parsing and serializing round-trip bit-exactly (floats via repr).  The
scenario id is the sha256 (first 12 hex digits) of the canonical
serialization of the physics sections only — [run] settings like the
output directory or mode do not change identity.
"""

import hashlib
import json
import time
from configparser import ConfigParser
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import assemble_operators, export_matrix, load_matrix
from .krylov import fgmres, write_residual_csv
from .laguerre import LaguerreConfig
from .mesh import MediumModel, ScenarioGeometry, build_mesh, locate_source_dof
from .preconditioner import (
    InnerSolverSettings,
    PreconditionerContext,
    write_diagnostics_csv,
)
from . import testbed

MODES = ("unpreconditioned", "laguerre", "both", "scalar_testbed")

_DEFAULT_ALPHAS = (2 * np.pi, np.pi, 0.5 * np.pi, 0.1 * np.pi,
                   0.05 * np.pi, 0.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment sweep.  Defaults follow the published setup wherever
    it states a value (frequency, transform scale, window, restart length,
    permeabilities, permittivity, conductivity); the geometry itself is
    unstated there and fixed here to a 24x24 box with an R=6 circle."""

    # geometry
    width: float = 24.0
    height: float = 24.0
    nx: int = 128
    ny: int = 128
    circle_x: float = 12.0
    circle_y: float = 12.0
    radius: float = 6.0
    alphas: tuple = _DEFAULT_ALPHAS
    # medium
    model: int = 1
    mu1: float = 30.0
    mu2: float = 5.0
    band_lo: float = 0.55
    band_hi: float = 0.80
    eps_r: float = 1.0
    sigma: float = 0.0
    lam: float = 1.0 / np.sqrt(30.0)
    omega: float = 2 * np.pi / 100
    # laguerre
    eta: float = 75.0
    tau: float = 200.0
    m_max: int = 512
    eps_lag: float = 1e-5
    # solver
    restart_k: int = 100
    tol_unpreconditioned: float = 1e-4
    tol_laguerre: float = 1e-8
    max_iterations: int = 1000
    inner_method: str = "sgs_pcg"
    inner_tol: float = 1e-8
    inner_max_it: int = 2000
    inner_sweeps: int = 1
    # run
    mode: str = "both"
    output_dir: str = "runs"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.model not in (1, 2):
            raise ValueError("model must be 1 or 2")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid must be at least 2x2")
        object.__setattr__(self, "alphas",
                           tuple(float(a) for a in self.alphas))
        if any(a < 0 or a > 2 * np.pi for a in self.alphas):
            raise ValueError("slot angles must lie in [0, 2pi]")

    def laguerre_config(self) -> LaguerreConfig:
        return LaguerreConfig(eta=self.eta, tau=self.tau, m_max=self.m_max,
                              eps_lag=self.eps_lag)

    def medium(self) -> MediumModel:
        n_regions = 1 if self.model == 1 else 2
        mu = (self.mu1,) if self.model == 1 else (self.mu1, self.mu2)
        return MediumModel(mu_r=mu, eps=(self.eps_r,) * n_regions,
                           sigma=(self.sigma,) * n_regions,
                           omega=self.omega, lam=self.lam)

    def geometry(self, alpha: float) -> ScenarioGeometry:
        region_map = None
        if self.model == 2:
            yc = (np.arange(self.ny) + 0.5) * (self.height / self.ny)
            band = ((yc >= self.band_lo * self.height)
                    & (yc < self.band_hi * self.height))
            region_map = np.repeat(band.astype(np.int64), self.nx)
        center = (self.circle_x, self.circle_y) if self.radius > 0 else None
        return ScenarioGeometry(width=self.width, height=self.height,
                                circle_center=center,
                                circle_radius=self.radius, alpha=alpha,
                                region_map=region_map)


# config file schema: section -> ordered (field, type) pairs
_SCHEMA = {
    "geometry": (("width", float), ("height", float), ("nx", int),
                 ("ny", int), ("circle_x", float), ("circle_y", float),
                 ("radius", float), ("alphas", "floats")),
    "medium": (("model", int), ("mu1", float), ("mu2", float),
               ("band_lo", float), ("band_hi", float), ("eps_r", float),
               ("sigma", float), ("lam", float), ("omega", float)),
    "laguerre": (("eta", float), ("tau", float), ("m_max", int),
                 ("eps_lag", float)),
    "solver": (("restart_k", int), ("tol_unpreconditioned", float),
               ("tol_laguerre", float), ("max_iterations", int),
               ("inner_method", str), ("inner_tol", float),
               ("inner_max_it", int), ("inner_sweeps", int)),
    "run": (("mode", str), ("output_dir", str)),
}

_PHYSICS_SECTIONS = ("geometry", "medium", "laguerre", "solver")


def _format_value(value, kind):
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind is float:
        return repr(float(value))
    return str(value)


def serialize_config(config: ScenarioConfig, sections=None) -> str:
    lines = []
    for section in sections or _SCHEMA:
        lines.append(f"[{section}]")
        for name, kind in _SCHEMA[section]:
            lines.append(f"{name} = {_format_value(getattr(config, name), kind)}")
        lines.append("")
    return "\n".join(lines)


def save_config(config: ScenarioConfig, path) -> None:
    Path(path).write_text(serialize_config(config))


def parse_config(text: str) -> ScenarioConfig:
    parser = ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    known = {s: dict(pairs) for s, pairs in _SCHEMA.items()}
    kwargs = {}
    for section in parser.sections():
        if section not in known:
            raise ValueError(f"unknown config section [{section}]")
        for name, raw in parser[section].items():
            kind = known[section].get(name)
            if kind is None:
                raise ValueError(f"unknown key '{name}' in [{section}]")
            if kind == "floats":
                parts = [p for p in raw.split(",") if p.strip()]
                kwargs[name] = tuple(float(p) for p in parts)
            elif kind is str:
                kwargs[name] = raw.strip()
            else:
                kwargs[name] = kind(raw)
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def scenario_id(config: ScenarioConfig) -> str:
    canonical = serialize_config(config, sections=_PHYSICS_SECTIONS)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


@dataclass
class RunManifest:
    scenario_id: str
    version: str
    config: dict
    entries: list = field(default_factory=list)
    total_wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def config_snapshot(config: ScenarioConfig) -> dict:
    snap = asdict(config)
    snap["alphas"] = list(snap["alphas"])
    return snap


def alpha_token(alpha: float) -> str:
    """File-name form of a slot angle: multiple of pi, four decimals."""
    return f"{alpha / np.pi:.4f}pi"


def field_magnitude_cells(mesh, x_full) -> np.ndarray:
    """Per-cell |E| (ny, nx) by averaging the two parallel edge DOFs of each
    cell and converting circulations to field values."""
    e = np.asarray(x_full)
    cells = mesh.cell_edges
    ex = (e[cells[:, 0]] + e[cells[:, 2]]) / (2.0 * mesh.hx)
    ey = (e[cells[:, 3]] + e[cells[:, 1]]) / (2.0 * mesh.hy)
    mag = np.sqrt(np.abs(ex) ** 2 + np.abs(ey) ** 2)
    return mag.reshape(mesh.ny, mesh.nx)


def write_field_pgm(path, magnitude: np.ndarray) -> None:
    """ASCII PGM raster of a nonnegative (ny, nx) array.

    Scaled linearly so the 99.5th percentile maps to 255 (values above are
    clipped — keeps the near-source spike from blacking out the rest); an
    all-zero field maps to an all-zero raster.  Row 0 of the image is the
    top of the domain (largest y).
    """
    mag = np.asarray(magnitude, dtype=float)
    if mag.ndim != 2:
        raise ValueError("magnitude raster must be 2-D")
    if np.any(mag < 0):
        raise ValueError("magnitudes must be nonnegative")
    scale = np.percentile(mag, 99.5)
    if scale <= 0:
        pixels = np.zeros(mag.shape, dtype=int)
    else:
        pixels = np.minimum(np.round(255 * mag / scale), 255).astype(int)
    ny, nx = mag.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{nx} {ny}\n255\n")
        for row in pixels[::-1]:
            fh.write(" ".join(str(int(p)) for p in row) + "\n")


def read_field_pgm(path):
    """Read an ASCII PGM written by write_field_pgm: returns (ny, nx) ints
    with row 0 back at the bottom of the domain."""
    tokens = Path(path).read_text().split()
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"not an ASCII PGM: {path}")
    nx, ny, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:], dtype=int)
    if data.size != nx * ny:
        raise ValueError(f"PGM pixel count mismatch in {path}")
    if maxval != 255:
        raise ValueError(f"unexpected PGM maxval {maxval}")
    return data.reshape(ny, nx)[::-1]


def _source_vector(mesh, config):
    point = ((config.circle_x, config.circle_y) if config.radius > 0
             else (config.width / 2, config.height / 2))
    src = locate_source_dof(mesh, point)
    free = mesh.free_dofs
    pos = np.searchsorted(free, src)
    if pos >= free.size or free[pos] != src:
        raise ValueError("source edge is on the conducting arc")
    b = np.zeros(free.size, dtype=complex)
    b[pos] = 1.0
    return b, src


def _expand_full(mesh, x_reduced):
    full = np.zeros(mesh.n_edges, dtype=complex)
    full[mesh.free_dofs] = x_reduced
    return full


def _solve_modes(config):
    if config.mode == "both":
        return ("unpreconditioned", "laguerre")
    return (config.mode,)


def run_scenario(config: ScenarioConfig) -> RunManifest:
    """Run the sweep described by `config` and write all artifacts.

    Per-alpha solver failures (indefinite inner operator, stalled inner
    iteration, assembly rejection) land in the manifest entry for that
    alpha; the remaining entries still run.  Stagnation is not a failure —
    converged=False with the full residual history is the measurement.
    """
    t_start = time.time()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(scenario_id=scenario_id(config),
                           version=__version__,
                           config=config_snapshot(config))
    if config.mode == "scalar_testbed":
        manifest.entries.append(_run_scalar_testbed(config, out))
        manifest.total_wall_time = time.time() - t_start
        (out / "manifest.json").write_text(manifest.to_json())
        return manifest

    lag_cfg = config.laguerre_config()
    medium = config.medium()
    for alpha in config.alphas:
        token = alpha_token(alpha)
        entry_common = dict(alpha=alpha, alpha_token=token)
        try:
            mesh = build_mesh(config.nx, config.ny, config.width / config.nx,
                              config.height / config.ny,
                              config.geometry(alpha))
            ops = assemble_operators(mesh, medium, lag_cfg)
            b, _ = _source_vector(mesh, config)
        except (ValueError, ArithmeticError) as exc:
            manifest.entries.append(dict(**entry_common, mode=config.mode,
                                         error=str(exc)))
            continue
        best_x = None
        for mode in _solve_modes(config):
            t0 = time.time()
            entry = dict(**entry_common, mode=mode, error=None)
            try:
                if mode == "laguerre":
                    inner = InnerSolverSettings(method=config.inner_method,
                                                tol=config.inner_tol,
                                                max_it=config.inner_max_it,
                                                sweeps=config.inner_sweeps)
                    ctx = PreconditionerContext(ops, lag_cfg, config.omega,
                                                inner)
                    tol = config.tol_laguerre
                    precond = ctx.apply
                else:
                    ctx = None
                    tol = config.tol_unpreconditioned
                    precond = None
                x, report = fgmres(ops.A, b, right_preconditioner=precond,
                                   restart_k=config.restart_k, tol=tol,
                                   max_outer=config.max_iterations)
                csv_path = out / f"residual_{mode}_{token}.csv"
                write_residual_csv(csv_path, report.residual_history)
                entry.update(
                    residual_csv=csv_path.name,
                    iterations=report.iterations,
                    converged=bool(report.converged),
                    final_residual=float(report.residual_history[-1]),
                    m_star=[r.m_star for r in ctx.diagnostics] if ctx else [],
                )
                if ctx is not None:
                    diag_path = out / f"diagnostics_laguerre_{token}.csv"
                    write_diagnostics_csv(ctx, diag_path)
                    entry["diagnostics_csv"] = diag_path.name
                if best_x is None or (mode == "laguerre" and report.converged):
                    best_x = x
            except (ValueError, ArithmeticError, RuntimeError) as exc:
                entry["error"] = str(exc)
            entry["wall_time"] = time.time() - t0
            manifest.entries.append(entry)
        if best_x is not None:
            mag = field_magnitude_cells(mesh, _expand_full(mesh, best_x))
            pgm_path = out / f"field_magnitude_{token}.pgm"
            write_field_pgm(pgm_path, mag)
            for entry in manifest.entries:
                if entry.get("alpha") == alpha:
                    entry.setdefault("field_pgm", pgm_path.name)
    manifest.total_wall_time = time.time() - t_start
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest


def _run_scalar_testbed(config: ScenarioConfig, out: Path) -> dict:
    """Scalar cross-validation at the config's frequency and transform
    settings: homogeneous speed 1/sqrt(mu1 eps_r), centred point source."""
    t0 = time.time()
    h = config.width / config.nx
    speed = 1.0 / np.sqrt(config.mu1 * config.eps_r)
    grid = testbed.ScalarGrid(nx=config.nx, ny=config.ny, h=h, speed=speed)
    f = np.zeros(grid.n_nodes)
    f[(config.ny // 2) * config.nx + config.nx // 2] = 1.0
    lag_cfg = config.laguerre_config()
    rel_error = testbed.limiting_amplitude_check(grid, config.omega, f,
                                                 lag_cfg)
    result = testbed.wave_laguerre_march(grid, config.omega, f, lag_cfg,
                                         method="direct")
    march_field = testbed.synthesize_field(result)
    direct_field = testbed.helmholtz_direct(grid, config.omega, f)
    testbed.write_field_csv(out / "testbed_march.csv", grid, march_field)
    testbed.write_field_csv(out / "testbed_direct.csv", grid, direct_field)
    return dict(mode="scalar_testbed", rel_error=float(rel_error),
                march_csv="testbed_march.csv", direct_csv="testbed_direct.csv",
                error=None, wall_time=time.time() - t0)


def compare_with_direct(config: ScenarioConfig, small_grid: int,
                        workdir=None) -> float:
    """Oracle harness: FGMRES solution against a dense factorization of the
    exported system matrix, on a grid small enough that dense is beyond
    doubt (<= 5000 free DOFs).  Returns the relative l2 difference.

    The matrix takes a round trip through the text export format on the
    way to the dense solver, so the oracle also guards the exchange format.
    """
    cfg = replace(config, nx=small_grid, ny=small_grid)
    alpha = cfg.alphas[0]
    mesh = build_mesh(cfg.nx, cfg.ny, cfg.width / cfg.nx,
                      cfg.height / cfg.ny, cfg.geometry(alpha))
    ops = assemble_operators(mesh, cfg.medium(), cfg.laguerre_config())
    n = ops.A.shape[0]
    if n > 5000:
        raise ValueError(f"oracle grid too large: {n} free DOFs > 5000")
    b, _ = _source_vector(mesh, cfg)
    base = Path(workdir) if workdir is not None else Path(cfg.output_dir)
    base.mkdir(parents=True, exist_ok=True)
    export_path = base / "oracle_matrix.txt"
    export_matrix(ops.A, export_path)
    dense = load_matrix(export_path).toarray()
    try:
        x_direct = np.linalg.solve(dense, b)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"scenario flagged: singular system matrix ({exc})")
    inner = InnerSolverSettings(method=cfg.inner_method, tol=cfg.inner_tol,
                                max_it=cfg.inner_max_it,
                                sweeps=cfg.inner_sweeps)
    ctx = PreconditionerContext(ops, cfg.laguerre_config(), cfg.omega, inner)
    x_iter, report = fgmres(ops.A, b, right_preconditioner=ctx.apply,
                            restart_k=cfg.restart_k, tol=cfg.tol_laguerre,
                            max_outer=cfg.max_iterations)
    ref = np.linalg.norm(x_direct)
    if ref == 0.0:
        return float(np.linalg.norm(x_iter))
    return float(np.linalg.norm(x_iter - x_direct) / ref)
