"""Scenario runner: diffusion, advection-diffusion and viscous Burgers.

The default integrator is the implicit midpoint rule, which makes the
semi-discrete energy balance exact at the midpoint state:

    (K^{n+1} - K^n) / dt = -c_h(u_mid; u_mid, u_mid) - nu a_h(u_mid, u_mid)

up to the (non)linear solver residual.  Every step appends one ledger row
with the kinetic energy, the discrete energy rate, both dissipation splits
evaluated at the midpoint state, the convective energy rate, and the total
numerical dissipation eps_tot = -dK/dt - nu * a_phy_sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dgcore import (
    DgField,
    DgSpace,
    kinetic_energy,
    project_initial,
    reference_grid,
    volume_rule_points,
)
from .dissipation import decompose, eps_total
from .mesh import build_mesh
from .polybasis import endpoint_values, eval_legendre, eval_legendre_deriv, gauss_rule
from .sip import SipParams, assemble_sip
from .trace_constants import min_penalty

__all__ = [
    "ScenarioConfig",
    "ConfigError",
    "DissipationSample",
    "ScenarioResult",
    "make_initial_condition",
    "convection_burgers",
    "advection_matrix",
    "step_midpoint",
    "run_scenario",
    "l2_error",
    "convergence_sweep",
]

PROBLEMS = ("heat", "advection_diffusion", "burgers")
TIME_SCHEMES = ("midpoint", "rk4")
EVAL_STATES = ("midpoint", "endpoint")


class ConfigError(ValueError):
    """Scenario configuration rejected; `errors` lists every offence."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ScenarioConfig:
    problem: str
    dim: int
    cells_per_axis: tuple[int, ...]
    order: int
    nu: float
    t_end: float
    dt: float
    initial_condition: dict
    seed: int
    box_length: tuple[float, ...] = None
    lambda_mode: dict = None
    advection: tuple[float, ...] = None
    output: str = None
    time_scheme: str = "midpoint"
    eval_state: str = "midpoint"
    extra_quadrature: int = 0
    write_snapshot: bool = True

    _FIELDS = (
        "problem", "dim", "cells_per_axis", "order", "nu", "t_end", "dt",
        "initial_condition", "seed", "box_length", "lambda_mode", "advection",
        "output", "time_scheme", "eval_state", "extra_quadrature", "write_snapshot",
    )
    _REQUIRED = (
        "problem", "dim", "cells_per_axis", "order", "nu", "t_end", "dt",
        "initial_condition", "seed",
    )

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        errors = []
        unknown = sorted(set(raw) - set(cls._FIELDS))
        for key in unknown:
            errors.append(f"unknown key {key!r}")
        for key in cls._REQUIRED:
            if key not in raw:
                errors.append(f"missing required key {key!r}")
        if errors:
            raise ConfigError(errors)

        def check(cond, msg):
            if not cond:
                errors.append(msg)

        problem = raw["problem"]
        check(problem in PROBLEMS, f"problem must be one of {PROBLEMS}, got {problem!r}")
        dim = raw["dim"]
        check(isinstance(dim, int) and dim in (1, 2, 3), f"dim must be 1, 2 or 3, got {dim!r}")
        cells = raw["cells_per_axis"]
        if isinstance(cells, int):
            cells = [cells] * (dim if isinstance(dim, int) else 1)
        check(
            isinstance(cells, (list, tuple)) and all(isinstance(n, int) and n >= 1 for n in cells),
            f"cells_per_axis must be positive integers, got {raw['cells_per_axis']!r}",
        )
        order = raw["order"]
        check(isinstance(order, int) and order >= 1, f"order must be an integer >= 1, got {order!r}")
        nu = raw["nu"]
        check(isinstance(nu, (int, float)) and nu > 0, f"nu must be positive, got {nu!r}")
        t_end = raw["t_end"]
        dt = raw["dt"]
        check(isinstance(dt, (int, float)) and dt > 0, f"dt must be positive, got {dt!r}")
        check(
            isinstance(t_end, (int, float)) and isinstance(dt, (int, float)) and t_end >= dt > 0,
            f"t_end must be >= dt > 0, got t_end={t_end!r}, dt={dt!r}",
        )
        ic = raw["initial_condition"]
        check(
            isinstance(ic, dict) and isinstance(ic.get("name"), str),
            f"initial_condition must be {{'name': str, 'params': dict}}, got {ic!r}",
        )
        if isinstance(ic, dict):
            bad_ic = sorted(set(ic) - {"name", "params"})
            check(not bad_ic, f"initial_condition has unknown keys {bad_ic}")
        seed = raw["seed"]
        check(isinstance(seed, int), f"seed must be an integer, got {seed!r}")

        box = raw.get("box_length", 1.0)
        if isinstance(box, (int, float)):
            box = [float(box)] * (dim if isinstance(dim, int) else 1)
        check(
            isinstance(box, (list, tuple)) and all(isinstance(L, (int, float)) and L > 0 for L in box),
            f"box_length must be positive reals, got {raw.get('box_length')!r}",
        )
        lam_mode = raw.get("lambda_mode", {"factor": 1.0})
        check(
            isinstance(lam_mode, dict)
            and len(lam_mode) == 1
            and next(iter(lam_mode), None) in ("factor", "absolute")
            and isinstance(next(iter(lam_mode.values()), None), (int, float)),
            f"lambda_mode must be {{'factor': x}} or {{'absolute': x}}, got {lam_mode!r}",
        )
        advection = raw.get("advection")
        if advection is not None:
            check(
                isinstance(advection, (list, tuple))
                and all(isinstance(b, (int, float)) for b in advection),
                f"advection must be a list of reals, got {advection!r}",
            )
        elif problem == "advection_diffusion" and isinstance(dim, int):
            advection = [1.0] * dim
        output = raw.get("output")
        check(
            output is None or isinstance(output, str),
            f"output must be a path string, got {output!r}",
        )
        scheme = raw.get("time_scheme", "midpoint")
        check(scheme in TIME_SCHEMES, f"time_scheme must be one of {TIME_SCHEMES}, got {scheme!r}")
        eval_state = raw.get("eval_state", "midpoint")
        check(
            eval_state in EVAL_STATES, f"eval_state must be one of {EVAL_STATES}, got {eval_state!r}"
        )
        extra = raw.get("extra_quadrature", 0)
        check(
            isinstance(extra, int) and extra >= 0,
            f"extra_quadrature must be a non-negative integer, got {extra!r}",
        )
        snapshot = raw.get("write_snapshot", True)
        check(isinstance(snapshot, bool), f"write_snapshot must be a boolean, got {snapshot!r}")
        if isinstance(dim, int) and isinstance(cells, (list, tuple)):
            check(
                len(cells) == dim, f"cells_per_axis has {len(cells)} entries for dim={dim}"
            )
        if isinstance(dim, int) and isinstance(box, (list, tuple)):
            check(len(box) == dim, f"box_length has {len(box)} entries for dim={dim}")
        if problem == "burgers":
            check(dim == 1, "burgers scenarios are one-dimensional")
        if errors:
            raise ConfigError(errors)
        return cls(
            problem=problem,
            dim=dim,
            cells_per_axis=tuple(cells),
            order=order,
            nu=float(nu),
            t_end=float(t_end),
            dt=float(dt),
            initial_condition={"name": ic["name"], "params": dict(ic.get("params", {}))},
            seed=seed,
            box_length=tuple(float(L) for L in box),
            lambda_mode=dict(lam_mode),
            advection=tuple(float(b) for b in advection) if advection is not None else None,
            output=output,
            time_scheme=scheme,
            eval_state=eval_state,
            extra_quadrature=extra,
            write_snapshot=snapshot,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cells_per_axis"] = list(self.cells_per_axis)
        d["box_length"] = list(self.box_length)
        d["advection"] = list(self.advection) if self.advection is not None else None
        return d

    def resolve_lambda(self) -> tuple[float, float]:
        lambda_star = min_penalty("q-dg", self.order).lambda_star
        kind, value = next(iter(self.lambda_mode.items()))
        lam = value * lambda_star if kind == "factor" else float(value)
        return lam, lambda_star


@dataclass(frozen=True)
class DissipationSample:
    """One energy-ledger row; a_* fields are unscaled form values."""

    t: float
    kinetic_energy: float
    dKdt_discrete: float
    a_total: float
    a_phy_sigma: float
    a_num_sigma: float
    a_phy_broken: float
    a_num_broken: float
    convective_rate: float
    eps_tot: float


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    lam: float
    lambda_star: float
    samples: list
    final_field: DgField
    space: DgSpace = None


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------

def make_initial_condition(name: str, params: dict, dim: int, box_length, seed: int = 0):
    """Vectorized callable for a named initial condition."""
    L = np.asarray(box_length, dtype=float)

    if name == "constant":
        value = float(params.get("value", 1.0))
        return lambda x: np.full(np.atleast_2d(x).shape[0], value)

    if name == "sine_product":
        amp = float(params.get("amplitude", 1.0))
        modes = np.atleast_1d(np.asarray(params.get("modes", 1), dtype=float))
        if modes.size == 1:
            modes = np.repeat(modes, dim)
        phase = np.atleast_1d(np.asarray(params.get("phase", 0.0), dtype=float))
        if phase.size == 1:
            phase = np.repeat(phase, dim)

        def sine(x):
            x = np.atleast_2d(x)
            vals = amp * np.ones(x.shape[0])
            for i in range(dim):
                vals = vals * np.sin(2 * np.pi * modes[i] * x[:, i] / L[i] + phase[i])
            return vals

        return sine

    if name == "multi_sine":
        terms = params.get("terms", [[1.0, 1, 0.0]])

        def multi(x):
            x = np.atleast_2d(x)
            vals = np.zeros(x.shape[0])
            for amp, mode, phase in terms:
                vals += amp * np.sin(2 * np.pi * mode * x[:, 0] / L[0] + phase)
            return vals

        return multi

    if name == "gaussian_bump":
        amp = float(params.get("amplitude", 1.0))
        center = np.atleast_1d(np.asarray(params.get("center", 0.5), dtype=float))
        if center.size == 1:
            center = np.repeat(center, dim)
        width = float(params.get("width", 0.1))

        def bump(x):
            x = np.atleast_2d(x)
            d = x - center[None, :]
            d -= L[None, :] * np.round(d / L[None, :])  # periodic minimum image
            return amp * np.exp(-np.sum(d**2, axis=1) / width**2)

        return bump

    if name == "random_modes":
        max_mode = int(params.get("max_mode", 4))
        amp = float(params.get("amplitude", 1.0))
        n_terms = int(params.get("n_terms", 2 * max_mode))
        rng = np.random.default_rng(seed)
        amps = amp * rng.standard_normal(n_terms) / np.sqrt(n_terms)
        modes = rng.integers(1, max_mode + 1, size=(n_terms, dim))
        phases = rng.uniform(0.0, 2 * np.pi, size=(n_terms, dim))

        def rough(x):
            x = np.atleast_2d(x)
            vals = np.zeros(x.shape[0])
            for j in range(n_terms):
                term = amps[j] * np.ones(x.shape[0])
                for i in range(dim):
                    term = term * np.sin(2 * np.pi * modes[j, i] * x[:, i] / L[i] + phases[j, i])
                vals += term
            return vals

        return rough

    raise ConfigError([f"unknown initial condition {name!r}"])


# ---------------------------------------------------------------------------
# convection
# ---------------------------------------------------------------------------

def _burgers_rule(order: int, extra: int = 0):
    # exact for the degree 3k+1 integrands of the square flux
    return gauss_rule(math.ceil((3 * order + 2) / 2) + extra)


def convection_burgers(u: DgField, extra: int = 0):
    """Residual of the divergence-form square flux with local Lax-Friedrichs.

    Returns the residual coefficients (same shape as u) and the convective
    energy rate c_h(u; u, u).  The rate is reported, not forced to vanish.
    """
    space = u.space
    if space.mesh.dim != 1 or space.num_components != 1:
        raise ValueError("Burgers convection is implemented for scalar 1D fields")
    k = space.order
    rule = _burgers_rule(k, extra)
    vals = eval_legendre(k, rule.nodes)        # (k+1, nq)
    ders = eval_legendre_deriv(k, rule.nodes)  # reference-coordinate derivative
    coeffs = u.coefficients[:, 0, :]           # (n_cells, k+1)
    u_q = coeffs @ vals                        # values at quadrature points
    f_q = 0.5 * u_q**2
    residual = -(f_q * rule.weights[None, :]) @ ders.T  # -int f(u) v' per cell

    top = coeffs @ endpoint_values(k, 1)
    bot = coeffs @ endpoint_values(k, 0)
    minus = space.mesh.neighbor_cells(0)
    u_left = top                  # trace from below the facet
    u_right = bot[minus]          # trace from above
    alpha = np.maximum(np.abs(u_left), np.abs(u_right))
    fhat = 0.25 * (u_left**2 + u_right**2) - 0.5 * alpha * (u_right - u_left)

    prev = space.mesh.previous_cells(0)
    residual += fhat[:, None] * endpoint_values(k, 1)[None, :]
    residual -= fhat[prev][:, None] * endpoint_values(k, 0)[None, :]
    energy_rate = float(np.sum(coeffs * residual))
    return DgField(space, residual[:, None, :]), energy_rate


def advection_matrix(space: DgSpace, velocity) -> sp.csr_matrix:
    """Upwind DG matrix for constant-velocity advection b . grad u."""
    from .polybasis import diff_matrix
    from .sip import _axis_operator, _scatter_blocks, _tangential_mass, _trace_matrix

    mesh = space.mesh
    b = np.asarray(velocity, dtype=float)
    if b.shape != (mesh.dim,):
        raise ValueError(f"advection velocity needs {mesh.dim} components")
    vol_loc = np.zeros((space.n_modes, space.n_modes))
    axis_blocks = []
    for axis in range(mesh.dim):
        Da = _axis_operator(space, axis, diff_matrix(space.order)) / mesh.h_axis[axis]
        vol_loc += -b[axis] * Da.T @ np.diag(space.cell_mass)
        area = mesh.facet_area(axis)
        Tt = _trace_matrix(space, axis, 1)
        Tb = _trace_matrix(space, axis, 0)
        W = _tangential_mass(space, axis)
        # local Lax-Friedrichs = pure upwind for linear constant advection
        up = 0.5 * (b[axis] + abs(b[axis])) * Tt
        um = 0.5 * (b[axis] - abs(b[axis])) * Tb
        TtW = Tt.T * W[None, :]
        TbW = Tb.T * W[None, :]
        axis_blocks.append(
            [
                ("p", "p", area * (TtW @ up)),
                ("p", "m", area * (TtW @ um)),
                ("m", "p", -area * (TbW @ up)),
                ("m", "m", -area * (TbW @ um)),
            ]
        )
    return (sp.block_diag([vol_loc] * mesh.n_cells, format="csr") + _scatter_blocks(space, axis_blocks)).tocsr()


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------

class _LinearMidpoint:
    """Implicit midpoint for M du/dt = -A u with diagonal mass."""

    def __init__(self, mass_diag: np.ndarray, A: sp.csr_matrix, dt: float):
        M = sp.diags(mass_diag)
        self.A = A
        self.dt = dt
        self.lhs = spla.splu((M + 0.5 * dt * A).tocsc())
        self.rhs = (M - 0.5 * dt * A).tocsr()

    def step(self, x: np.ndarray) -> np.ndarray:
        return self.lhs.solve(self.rhs @ x)


class _BurgersMidpoint:
    """Implicit midpoint with the stiff viscous part solved implicitly.

    Fixed-point iteration on the midpoint state; aborts with a diagnostic if
    the iteration stalls (reduce dt in that case).
    """

    def __init__(self, space, mass_diag, A_visc, dt, tol=1e-12, maxit=200):
        self.space = space
        self.mass = mass_diag
        M = sp.diags(mass_diag)
        self.A = A_visc
        self.dt = dt
        self.tol = tol
        self.maxit = maxit
        self.lhs = spla.splu((M + 0.5 * dt * A_visc).tocsc())
        self.rhs = (M - 0.5 * dt * A_visc).tocsr()

    def _conv(self, x: np.ndarray) -> np.ndarray:
        f = DgField(self.space, x.reshape(self.space.mesh.n_cells, 1, -1))
        res, _ = convection_burgers(f)
        return res.coefficients.ravel()

    def step(self, x: np.ndarray) -> np.ndarray:
        base = self.rhs @ x
        w = np.array(x)
        scale = max(1.0, float(np.linalg.norm(x)))
        for _ in range(self.maxit):
            conv = self._conv(0.5 * (x + w))
            w_new = self.lhs.solve(base - self.dt * conv)
            if not np.all(np.isfinite(w_new)):
                raise RuntimeError(
                    f"midpoint iteration diverged: dt={self.dt} too large for this state"
                )
            delta = float(np.linalg.norm(w_new - w))
            w = w_new
            if delta <= self.tol * scale:
                break
        else:
            raise RuntimeError(
                f"midpoint iteration stalled: dt={self.dt}, last increment {delta:.3e} "
                f"(tolerance {self.tol:.1e} * {scale:.3e}); reduce dt"
            )
        mid = 0.5 * (x + w)
        residual = self.mass * (w - x) + self.dt * (self.A @ mid + self._conv(mid))
        res_norm = float(np.linalg.norm(residual))
        if res_norm > 1e-10 * max(1.0, float(np.linalg.norm(self.mass * x))):
            raise RuntimeError(
                f"midpoint residual {res_norm:.3e} exceeds tolerance; reduce dt"
            )
        return w


class _Rk4:
    """Classic explicit RK4 on du/dt = -M^{-1}(A u + conv(u))."""

    def __init__(self, space, mass_diag, A, dt, conv=None):
        self.space = space
        self.inv_mass = 1.0 / mass_diag
        self.A = A
        self.dt = dt
        self.conv = conv

    def _f(self, x):
        rhs = self.A @ x
        if self.conv is not None:
            rhs = rhs + self.conv(x)
        return -self.inv_mass * rhs

    def step(self, x):
        dt = self.dt
        k1 = self._f(x)
        k2 = self._f(x + 0.5 * dt * k1)
        k3 = self._f(x + 0.5 * dt * k2)
        k4 = self._f(x + dt * k3)
        return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_midpoint(u: DgField, dt: float, mass_diag: np.ndarray, A: sp.csr_matrix) -> DgField:
    """One implicit midpoint step of the linear system M du/dt = -A u."""
    stepper = _LinearMidpoint(mass_diag, A, dt)
    x = stepper.step(u.coefficients[:, 0, :].ravel())
    return u.with_coefficients(x.reshape(u.coefficients.shape))


# ---------------------------------------------------------------------------
# scenario driver
# ---------------------------------------------------------------------------

def _scalar_mass_diag(space: DgSpace) -> np.ndarray:
    return np.tile(space.cell_mass, space.mesh.n_cells)


def run_scenario(config: ScenarioConfig, output_path=None) -> ScenarioResult:
    """Run one scenario, collecting a DissipationSample per time step.

    Writes the CSV ledger (and optional field snapshot) if an output path is
    configured or passed; a partial ledger is flushed if stepping aborts.
    """
    from . import ledger as ledger_io

    out = output_path if output_path is not None else config.output
    mesh = build_mesh(config.dim, config.cells_per_axis, config.box_length)
    space = DgSpace(mesh, config.order, num_components=1)
    lam, lambda_star = config.resolve_lambda()
    if lam < lambda_star * (1.0 - 1e-12):
        import sys

        print(
            f"warning: lambda={lam:g} below the certified threshold lambda*={lambda_star:g}; "
            "stability and sign guarantees are void",
            file=sys.stderr,
        )
    params = SipParams(nu=config.nu, lam=lam, variant="sip")
    op = assemble_sip(space, params)
    ic = make_initial_condition(
        config.initial_condition["name"],
        config.initial_condition.get("params", {}),
        config.dim,
        config.box_length,
        config.seed,
    )
    u = project_initial(space, ic, config.extra_quadrature)
    mass_diag = _scalar_mass_diag(space)
    visc = (config.nu * op.matrix).tocsr()

    conv_fn = None
    adv = None
    if config.problem == "burgers":
        conv_fn = lambda x: convection_burgers(
            DgField(space, x.reshape(mesh.n_cells, 1, -1))
        )[0].coefficients.ravel()
        A_total = visc
    elif config.problem == "advection_diffusion":
        adv = advection_matrix(space, config.advection)
        A_total = (visc + adv).tocsr()
    else:
        A_total = visc

    if config.time_scheme == "rk4":
        stepper = _Rk4(space, mass_diag, A_total, config.dt, conv=conv_fn)
    elif config.problem == "burgers":
        stepper = _BurgersMidpoint(space, mass_diag, visc, config.dt)
    else:
        stepper = _LinearMidpoint(mass_diag, A_total, config.dt)

    n_steps = max(1, int(round(config.t_end / config.dt)))
    samples = []
    x = u.coefficients[:, 0, :].ravel()

    def flush(rows):
        if out is not None:
            ledger_io.write_ledger(out, rows, _ledger_metadata(config, lam, lambda_star))

    try:
        for n in range(n_steps):
            x_new = stepper.step(x)
            x_mid = 0.5 * (x + x_new)
            if config.time_scheme == "rk4" or config.eval_state == "endpoint":
                x_eval = x_new
            else:
                x_eval = x_mid
            u_eval = DgField(space, x_eval.reshape(mesh.n_cells, 1, -1))
            u_new = DgField(space, x_new.reshape(mesh.n_cells, 1, -1))

            # cancellation-free energy difference: (x1-x0)^T M (x1+x0) / 2
            dK = 0.5 * float((x_new - x) @ (mass_diag * (x_new + x)))
            dKdt = dK / config.dt
            breakdown = decompose(u_eval, op)
            conv_rate = 0.0
            if config.problem == "burgers":
                _, conv_rate = convection_burgers(u_eval)
            elif config.problem == "advection_diffusion":
                conv_rate = float(x_eval @ (adv @ x_eval))
            samples.append(
                DissipationSample(
                    t=(n + 1) * config.dt,
                    kinetic_energy=kinetic_energy(u_new),
                    dKdt_discrete=dKdt,
                    a_total=breakdown.a_total,
                    a_phy_sigma=breakdown.a_phy_sigma,
                    a_num_sigma=breakdown.a_num_sigma,
                    a_phy_broken=breakdown.a_phy_broken,
                    a_num_broken=breakdown.a_num_broken,
                    convective_rate=conv_rate,
                    eps_tot=eps_total(dKdt, breakdown.a_phy_sigma, config.nu),
                )
            )
            x = x_new
    except Exception:
        flush(samples)
        raise

    final = DgField(space, x.reshape(mesh.n_cells, 1, -1))
    flush(samples)
    if out is not None and config.write_snapshot:
        from .dgcore import save_field

        save_field(_snapshot_path(out), final)
    return ScenarioResult(config, lam, lambda_star, samples, final, space)


def _snapshot_path(output) -> str:
    out = str(output)
    return (out[:-4] if out.endswith(".csv") else out) + ".field.csv"


def _ledger_metadata(config: ScenarioConfig, lam: float, lambda_star: float) -> dict:
    from . import __version__

    return {
        "config": config.to_dict(),
        "lambda": lam,
        "lambda_star": lambda_star,
        "seed": config.seed,
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# error measurement and convergence sweeps
# ---------------------------------------------------------------------------

def l2_error(u: DgField, exact, extra: int = 3) -> float:
    """L2 distance between a field and a callable, by over-integration."""
    space = u.space
    mesh = space.mesh
    rule = volume_rule_points(space.order, extra)
    ref_pts, ref_wts = reference_grid(mesh.dim, rule)
    vals = u.eval_on_reference_points(ref_pts)  # (n_cells, ncomp, nq)
    h = np.asarray(mesh.h_axis)
    err_sq = 0.0
    for cell in range(mesh.n_cells):
        phys = mesh.cell_origin(cell)[None, :] + ref_pts * h[None, :]
        ex = np.asarray(exact(phys), dtype=float)
        if ex.ndim == 1:
            ex = ex[:, None]
        diff = vals[cell].T - ex
        err_sq += float(np.sum(diff**2 * ref_wts[:, None])) * mesh.cell_volume
    return math.sqrt(err_sq)


def heat_exact_factory(config: ScenarioConfig):
    """Analytic solution for sine_product/constant initial data of the heat problem."""
    name = config.initial_condition["name"]
    params = config.initial_condition.get("params", {})
    ic = make_initial_condition(name, params, config.dim, config.box_length, config.seed)
    if name == "constant":
        return lambda t: ic
    if name != "sine_product":
        raise ValueError(f"no analytic heat solution for initial condition {name!r}")
    modes = np.atleast_1d(np.asarray(params.get("modes", 1), dtype=float))
    if modes.size == 1:
        modes = np.repeat(modes, config.dim)
    L = np.asarray(config.box_length, dtype=float)
    rate = config.nu * float(np.sum((2 * np.pi * modes / L) ** 2))

    def at_time(t: float):
        decay = math.exp(-rate * t)
        return lambda x: decay * ic(x)

    return at_time


def convergence_sweep(
    orders, meshes, nu=0.02, t_end=0.25, dt_base=5e-3, dim=1, lambda_factor=2.0,
    projection_only=False, ic_name="sine_product",
):
    """Heat-equation refinement study; returns one row per (k, N).

    Each row carries the L2 error against the analytic solution, the
    observed rate from the previous level, and a_num_sigma at the final
    state.  dt scales with h^2 so the midpoint error stays subordinate.
    """
    rows = []
    for k in orders:
        prev_err = None
        for n_cells in meshes:
            dt = dt_base * (meshes[0] / n_cells) ** 2
            raw = {
                "problem": "heat",
                "dim": dim,
                "cells_per_axis": [int(n_cells)] * dim,
                "order": int(k),
                "nu": nu,
                "t_end": t_end if not projection_only else dt,
                "dt": dt,
                "initial_condition": {"name": ic_name, "params": {}},
                "seed": 0,
                "lambda_mode": {"factor": lambda_factor},
            }
            config = ScenarioConfig.from_dict(raw)
            exact_at = heat_exact_factory(config)
            if projection_only:
                mesh = build_mesh(dim, config.cells_per_axis, config.box_length)
                space = DgSpace(mesh, k)
                ic = make_initial_condition(ic_name, {}, dim, config.box_length)
                u = project_initial(space, ic)
                err = l2_error(u, exact_at(0.0))
                a_num = None
            else:
                result = run_scenario(config)
                err = l2_error(result.final_field, exact_at(result.samples[-1].t))
                a_num = result.samples[-1].a_num_sigma
            rate = None if prev_err is None else math.log2(prev_err / max(err, 1e-300))
            rows.append(
                {
                    "order": int(k),
                    "cells": int(n_cells),
                    "error": err,
                    "rate": rate,
                    "a_num_sigma": a_num,
                }
            )
            prev_err = err
    return rows
