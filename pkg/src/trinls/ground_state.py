"""Constrained energy minimization with three independent mass constraints.

The minimizer of H over states with prescribed per-component masses is
computed by a normalized gradient flow: step against the energy gradient,
then renormalize each constrained component to its target mass.  Because the
three constraints involve disjoint variables, per-component renormalization
is the exact projection onto the constraint set.

Two flow schemes are provided:

``preconditioned`` (default)
    Steps along (k^2 + s_j)^{-1} (G_j + w_j u_j) in Fourier space, with the
    multiplier estimate w_j re-extracted every iteration.  The fixed point of
    step + projection is exactly the Euler-Lagrange state, the iteration is
    unconditionally stable, and tau = O(1) converges in tens of iterations.

``explicit``
    Plain forward-Euler descent u <- u - tau_eff * G with tau_eff a fraction
    of the von Neumann limit 2 / max(k^2).  Kept as a cross-check; it needs
    O(1e5) iterations at production resolution.

A fixed-point polish (`refine_fixed_point`) rewrites the Euler-Lagrange
system as u_j = E_{w_j} * N_j(u), where E_w is the Green kernel of
(-d^2/dx^2 + w), i.e. division by (k^2 + w) in Fourier space, and iterates it
with per-sweep multiplier re-extraction and mass renormalization.

Also here: the two-component reduced problem, the concentration (window-mass)
diagnostic, and the subadditivity margin check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.fft import fft, ifft

from .model import (CouplingModel, MassTriple, Multipliers, State,
                    _el_residual_array, _energy_terms, _multiplier_array,
                    _nonlinearity, sech_profile)
from .spectral import Grid, _rearrange_samples
from .tolerances import DEFAULT as TOLS


class ConvergenceError(RuntimeError):
    """Flow did not meet the stopping criteria; carries the last iterate."""

    def __init__(self, message: str, last: Optional["GroundState"] = None):
        super().__init__(message)
        self.last = last


class DivergenceError(RuntimeError):
    """Fixed-point sweeps made the residual grow; carries the best iterate."""

    def __init__(self, message: str, best: Optional["GroundState"] = None):
        super().__init__(message)
        self.best = best


class StepCollapseError(RuntimeError):
    """The iterate left the finite range (step size collapse / blow-up)."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for `minimize`.  Defaults suit n=1024, L=40 production runs.

    rearrange_every = 0 disables the rearrangement acceleration; `init` is
    one of {"gaussian_bumps", "sech_guess", "supplied"} ("supplied" requires
    `initial_state`); `noise` seeds the gaussian init with multiplicative
    complex noise (useful for basin checks).
    """

    tau: float = 1.0
    max_iters: int = 5000
    residual_tol: float = 1e-9
    energy_tol: float = 1e-12
    rearrange_every: int = 25
    seed: int = 0
    init: str = "gaussian_bumps"
    initial_state: Optional[State] = None
    scheme: str = "preconditioned"
    noise: float = 0.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.residual_tol <= 0 or self.energy_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.init not in ("gaussian_bumps", "sech_guess", "supplied"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.scheme not in ("preconditioned", "explicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.init == "supplied" and self.initial_state is None:
            raise ValueError("init='supplied' requires initial_state")


@dataclass(frozen=True)
class GroundState:
    """Converged minimizer: profile, multipliers, attained energy lam,
    Euler-Lagrange residual, iteration count, achieved masses, and the
    energy history of the run (diagnostic)."""

    profile: State
    multipliers: Multipliers
    lam: float
    residual: float
    iterations: int
    masses_achieved: MassTriple
    energy_history: tuple = field(default=(), repr=False)

    @property
    def grid(self) -> Grid:
        return self.profile.grid


@dataclass(frozen=True)
class ConcentrationProfile:
    """Largest window mass P(eta) per half-width eta, plus the compactness
    proxy P(max eta) / total mass."""

    etas: tuple
    values: tuple
    gamma_proxy: float


@dataclass(frozen=True)
class SubadditivityResult:
    """Margin lam(total) - lam(part1) - lam(part2) with its noise band."""

    part1: MassTriple
    part2: MassTriple
    lam_total: float
    lam_part1: float
    lam_part2: float
    margin: float
    tolerance: float
    inconclusive: bool


_SHIFT_FLOOR = 1e-3
_SHIFT_FALLBACK = 0.5


def _project(u: np.ndarray, targets: np.ndarray, h: float) -> np.ndarray:
    """Exact projection onto the mass constraints: per-component rescale."""
    for j in range(3):
        if targets[j] == 0.0:
            u[j] = 0.0
            continue
        m = h * np.sum(np.abs(u[j]) ** 2)
        if m == 0.0:
            raise ValueError(
                f"component {j + 1} is identically zero; cannot rescale it "
                f"to mass {targets[j]}")
        u[j] *= np.sqrt(targets[j] / m)
    return u


def _initial_array(model: CouplingModel, masses: MassTriple, grid: Grid,
                   cfg: SolverConfig) -> np.ndarray:
    targets = masses.as_array()
    n = grid.n
    x = grid.nodes
    u = np.zeros((3, n), dtype=complex)
    if cfg.init == "supplied":
        sup = cfg.initial_state
        if sup.grid != grid:
            raise ValueError("supplied initial state lives on a different grid")
        u = sup.stack().astype(complex)
    elif cfg.init == "sech_guess":
        seed_profile = sech_profile(1.0, 1.0, model.p, grid).values
        for j in range(3):
            if targets[j] > 0:
                u[j] = seed_profile
    else:  # gaussian_bumps
        env = np.exp(-x ** 2 / 8.0)
        rng = np.random.default_rng(cfg.seed)
        for j in range(3):
            if targets[j] > 0:
                bump = env.astype(complex)
                if cfg.noise > 0:
                    xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                    bump = env * (1.0 + cfg.noise * xi)
                u[j] = bump
    return _project(u, targets, grid.spacing)


def minimize(model: CouplingModel, masses: MassTriple, grid: Grid,
             cfg: SolverConfig = SolverConfig()) -> GroundState:
    """Minimize H over the mass-constraint set; returns the ground state.

    Iterates the normalized flow (step, optional rearrangement, exact mass
    projection) until the energy decrease drops below `energy_tol` while the
    Euler-Lagrange residual is below `residual_tol`.  Raises
    `ConvergenceError` (carrying the last iterate) when `max_iters` is
    exhausted and `StepCollapseError` if the iterate leaves the finite range.
    """
    targets = masses.as_array()
    active = targets > 0
    h = grid.spacing
    k2 = grid.wavenumbers ** 2
    u = _initial_array(model, masses, grid, cfg)

    if cfg.scheme == "explicit":
        tau_eff = cfg.tau * 2.0 / k2.max()
    else:
        tau_eff = cfg.tau

    e_prev = np.inf
    history = []
    E = np.nan
    w = np.full(3, np.nan)
    res = np.inf
    it = 0
    for it in range(cfg.max_iters):
        uh = fft(u, axis=-1)
        lap = ifft(-k2 * uh, axis=-1)
        N = _nonlinearity(u, model.a, model.p)

        kin = h / grid.n * np.sum(k2 * np.abs(uh) ** 2, axis=1)
        mod_p = np.abs(u) ** model.p
        inter = h * np.sum(mod_p * (model.a @ mod_p), axis=1)
        E = float(np.sum(kin) - np.sum(inter) / model.p)
        if not np.isfinite(E):
            raise StepCollapseError(
                f"non-finite energy at iteration {it} (step size collapse)")
        history.append(E)

        w = np.full(3, np.nan)
        w[active] = -(kin[active] - inter[active]) / targets[active]

        G = -lap - N
        res = 0.0
        for j in range(3):
            if not active[j]:
                continue
            r = G[j] + w[j] * u[j]
            res = max(res, float(np.sqrt(h * np.sum(np.abs(r) ** 2) / targets[j])))

        if abs(e_prev - E) < cfg.energy_tol and res < cfg.residual_tol:
            break
        e_prev = E

        if cfg.scheme == "explicit":
            u = u - tau_eff * G
        else:
            for j in range(3):
                if not active[j]:
                    continue
                s = w[j] if w[j] > _SHIFT_FLOOR else _SHIFT_FALLBACK
                rh = (k2 + w[j]) * uh[j] - fft(N[j])
                u[j] = ifft(uh[j] - tau_eff * rh / (k2 + s))

        if cfg.rearrange_every and (it + 1) % cfg.rearrange_every == 0:
            for j in range(3):
                if active[j]:
                    u[j] = _rearrange_samples(np.abs(u[j])).astype(complex)
        u = _project(u, targets, h)
    else:
        last = _package(u, w, E, res, cfg.max_iters, model, masses, grid,
                        history, validate=False)
        raise ConvergenceError(
            f"no convergence in {cfg.max_iters} iterations "
            f"(residual {res:.3e}, target {cfg.residual_tol:.1e})", last=last)

    return _package(u, w, E, res, it, model, masses, grid, history)


def _package(u, w, E, res, iters, model, masses, grid, history,
             validate: bool = True) -> GroundState:
    h = grid.spacing
    achieved = h * np.sum(np.abs(u) ** 2, axis=1)
    gs = GroundState(
        profile=State.from_array(grid, u),
        multipliers=Multipliers(*map(float, w)),
        lam=E,
        residual=res,
        iterations=iters,
        masses_achieved=MassTriple(*map(float, achieved)),
        energy_history=tuple(history),
    )
    if validate and not E < 0:
        raise ConvergenceError(
            f"converged to non-negative energy {E:.3e}; not a minimizer", last=gs)
    return gs


def refine_fixed_point(state: State, model: CouplingModel, masses: MassTriple,
                       max_sweeps: int = 600,
                       residual_tol: float = 1e-11) -> GroundState:
    """Polish a near-solution by Green-kernel fixed-point sweeps.

    Each sweep re-extracts the multipliers, applies u_j <- (k^2 + w_j)^{-1}
    N_j(u) spectrally, and renormalizes the constrained masses.  Raises
    `DivergenceError` (carrying the best iterate seen) if the residual grows
    over 5 consecutive sweeps or a multiplier leaves the positive range.
    """
    grid = state.grid
    targets = masses.as_array()
    active = targets > 0
    h = grid.spacing
    k2 = grid.wavenumbers ** 2
    u = _project(state.stack(), targets, h)

    best = None
    best_res = np.inf
    increases = 0
    w = _multiplier_array(u, grid, model)
    res = _el_residual_array(u, w, grid, model)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        if np.any(w[active] <= 0):
            raise DivergenceError(
                f"non-positive multiplier {w} during refinement", best=best)
        N = _nonlinearity(u, model.a, model.p)
        for j in range(3):
            if active[j]:
                u[j] = ifft(fft(N[j]) / (k2 + w[j]))
        u = _project(u, targets, h)
        if not np.all(np.isfinite(u)):
            raise DivergenceError("non-finite iterate during refinement", best=best)

        w = _multiplier_array(u, grid, model)
        new_res = _el_residual_array(u, w, grid, model)
        if new_res < best_res:
            best_res = new_res
            kin, inter = _energy_terms(u, grid, model)
            E = float(np.sum(kin) - np.sum(inter) / model.p)
            best = _package(u.copy(), w, E, new_res, sweeps, model, masses,
                            grid, [], validate=False)
        increases = increases + 1 if new_res > res else 0
        res = new_res
        if increases >= 5:
            raise DivergenceError(
                f"residual grew over 5 consecutive sweeps (now {res:.3e})",
                best=best)
        if res < residual_tol:
            break
    else:
        if best_res > 10 * residual_tol:
            raise DivergenceError(
                f"no fixed-point convergence in {max_sweeps} sweeps "
                f"(best residual {best_res:.3e})", best=best)
    return best


def two_component_min(alpha1: float, alpha2: float, beta: float,
                      a1: float, a2: float, grid: Grid,
                      cfg: SolverConfig = SolverConfig(),
                      p: float = 2.0) -> GroundState:
    """Reduced two-component problem: minimize

        F(f, g) = ||f'||^2 + ||g'||^2
                  - (1/p)(alpha1 |f|_{2p}^{2p} + alpha2 |g|_{2p}^{2p}
                          + 2 beta |f g|_p^p)

    over ||f||^2 = a1, ||g||^2 = a2 (masses a1, a2).  Realized as the full
    problem with couplings (a11, a22, a12) = (alpha1, alpha2, beta) and the
    third mass frozen at zero.  Both converged components are positive up to
    a constant phase (checked by the test suite, not assumed here).
    """
    if min(alpha1, alpha2, beta, a1, a2) <= 0:
        raise ValueError("all parameters of the reduced problem must be positive")
    a = np.array([[alpha1, beta, 1.0],
                  [beta, alpha2, 1.0],
                  [1.0, 1.0, 1.0]])
    model = CouplingModel(a=a, p=p)
    return minimize(model, MassTriple(a1, a2, 0.0), grid, cfg)


def concentration(state: State, etas: Sequence[float]) -> ConcentrationProfile:
    """Concentration function: P(eta) = max over window centers y of the
    mass of (|u1|^2 + |u2|^2 + |u3|^2) in [y - eta, y + eta].

    Window centers range over grid nodes; windows wrap periodically and are
    capped at the whole box.  Values are non-decreasing in eta.
    """
    grid = state.grid
    h = grid.spacing
    n = grid.n
    u = state.stack()
    rho = np.sum(np.abs(u) ** 2, axis=0)
    total = float(h * np.sum(rho))
    etas_sorted = tuple(sorted(float(e) for e in etas))
    if any(e < 0 for e in etas_sorted):
        raise ValueError("window half-widths must be non-negative")
    ext = np.concatenate([rho, rho])
    cs = np.concatenate([[0.0], np.cumsum(ext)])
    values = []
    for eta in etas_sorted:
        wsteps = int(np.floor(eta / h + 1e-12))
        width = min(2 * wsteps + 1, n)
        sums = cs[width:width + n] - cs[:n]
        values.append(float(h * sums.max()))
    gamma = values[-1] / total if total > 0 else 0.0
    return ConcentrationProfile(etas=etas_sorted, values=tuple(values),
                                gamma_proxy=float(gamma))


def subadditivity_check(model: CouplingModel, part1: MassTriple,
                        part2: MassTriple, grid: Grid,
                        cfg: SolverConfig = SolverConfig()) -> SubadditivityResult:
    """Margin lam(part1 + part2) - lam(part1) - lam(part2).

    A strictly negative margin confirms strict subadditivity numerically.
    Each part must carry positive total mass (MassTriple enforces this); the
    margin is flagged inconclusive when it sits inside the +-2*tolerance
    noise band of the three solves.
    """
    total = MassTriple(part1.r + part2.r, part1.s + part2.s, part1.t + part2.t)
    lam_tot = minimize(model, total, grid, cfg).lam
    lam_1 = minimize(model, part1, grid, cfg).lam
    lam_2 = minimize(model, part2, grid, cfg).lam
    margin = lam_tot - lam_1 - lam_2
    tolerance = TOLS.lambda_rel * (abs(lam_tot) + abs(lam_1) + abs(lam_2))
    return SubadditivityResult(
        part1=part1, part2=part2,
        lam_total=lam_tot, lam_part1=lam_1, lam_part2=lam_2,
        margin=float(margin), tolerance=float(tolerance),
        inconclusive=bool(abs(margin) <= 2 * tolerance),
    )
