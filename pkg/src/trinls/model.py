"""The coupled-NLS model made computable.

Energy functional over three complex fields (u1, u2, u3) with a symmetric
positive interaction matrix (a_kj) and exponent p in [2, 3):

    H(u) = integral( sum_j |u_j'|^2 - (1/p) sum_{k,j} a_kj |u_k|^p |u_j|^p )

together with the per-component masses Q(u_j) = integral(|u_j|^2).

Gradient convention: the first variation of H along a perturbation d is
2*Re<G, d>_{L^2} with

    G_j = -u_j'' - (sum_k a_kj |u_k|^p) |u_j|^{p-2} u_j ,

so a constrained minimizer satisfies G_j + w_j u_j = 0, where the w_j are the
Lagrange multipliers of the three mass constraints.  Closed-form solitary
profiles (sech family, two-component and equal-coupling families) are
provided as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft

from .spectral import Field, Grid, integrate, require_same_grid


@dataclass(frozen=True)
class CouplingModel:
    """Symmetric positive 3x3 interaction matrix plus exponent p in [2, 3)."""

    a: np.ndarray
    p: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (3, 3):
            raise ValueError(f"coupling matrix must be 3x3, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("coupling matrix must be symmetric")
        if not np.all(a > 0):
            raise ValueError("couplings must all be positive (attractive case)")
        if not (2.0 <= self.p < 3.0):
            raise ValueError(f"exponent p must lie in [2, 3), got {self.p}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class MassTriple:
    """Target masses (r, s, t); zero entries freeze the component at 0."""

    r: float
    s: float
    t: float

    def __post_init__(self):
        if min(self.r, self.s, self.t) < 0:
            raise ValueError("masses must be non-negative")
        if self.total <= 0:
            raise ValueError("at least one mass must be positive")

    @property
    def total(self) -> float:
        return self.r + self.s + self.t

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.s, self.t], dtype=float)


@dataclass(frozen=True)
class Multipliers:
    """Frequencies (w1, w2, w3); nan marks a zero-mass (undefined) component."""

    w1: float
    w2: float
    w3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3], dtype=float)


@dataclass(frozen=True)
class State:
    """Triple of complex fields on one common grid."""

    u1: Field
    u2: Field
    u3: Field

    def __post_init__(self):
        require_same_grid(self.u1.grid, self.u2.grid, self.u3.grid)

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    def stack(self) -> np.ndarray:
        """Writable (3, n) complex array of the three components."""
        return np.stack([self.u1.values, self.u2.values, self.u3.values])

    @classmethod
    def from_array(cls, grid: Grid, u: np.ndarray) -> "State":
        return cls(Field(grid, u[0]), Field(grid, u[1]), Field(grid, u[2]))

    def masses(self) -> np.ndarray:
        h = self.grid.spacing
        return h * np.sum(np.abs(self.stack()) ** 2, axis=1)


# ---------------------------------------------------------------------------
# array-level kernels (shared by the solver and the time stepper)
# ---------------------------------------------------------------------------

def _mod_pow(mod: np.ndarray, q: float) -> np.ndarray:
    """mod**q with 0**negative defined as 0 (continuity for q > -1)."""
    if q == 0.0:
        return np.ones_like(mod)
    if q >= 1.0 or q == 0.5:
        return mod ** q
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mod > 0.0, mod, 1.0) ** q
    return np.where(mod > 0.0, out, 0.0)


def _coefficients(u: np.ndarray, a: np.ndarray, p: float) -> np.ndarray:
    """c_j = sum_k a_kj |u_k|^p as a (3, n) array."""
    mod_p = np.abs(u) ** p
    return a.T @ mod_p


def _nonlinearity(u: np.ndarray, a: np.ndarray, p: float) -> np.ndarray:
    """N_j = (sum_k a_kj |u_k|^p) |u_j|^{p-2} u_j, with |u|^{p-2}u := 0 at u=0."""
    coef = _coefficients(u, a, p)
    if p == 2.0:
        return coef * u
    mod = np.abs(u)
    return coef * _mod_pow(mod, p - 2.0) * u


def _gradient_array(u: np.ndarray, grid: Grid, model: CouplingModel) -> np.ndarray:
    k2 = grid.wavenumbers ** 2
    lap = ifft(-k2 * fft(u, axis=-1), axis=-1)
    return -lap - _nonlinearity(u, model.a, model.p)


def _energy_terms(u: np.ndarray, grid: Grid, model: CouplingModel):
    """Per-component kinetic energies and interaction integrals.

    Returns (kin, inter) with kin_j = int |u_j'|^2 and
    inter_j = int |u_j|^p sum_k a_jk |u_k|^p, so that
    H = sum(kin) - sum(inter)/p.
    """
    h = grid.spacing
    k2 = grid.wavenumbers ** 2
    uh = fft(u, axis=-1)
    kin = h / grid.n * np.sum(k2 * np.abs(uh) ** 2, axis=1)
    mod_p = np.abs(u) ** model.p
    inter = h * np.sum(mod_p * (model.a @ mod_p), axis=1)
    return kin, inter


def _energy_array(u: np.ndarray, grid: Grid, model: CouplingModel) -> float:
    kin, inter = _energy_terms(u, grid, model)
    return float(np.sum(kin) - np.sum(inter) / model.p)


def _multiplier_array(u: np.ndarray, grid: Grid, model: CouplingModel) -> np.ndarray:
    """w_j = -(kin_j - inter_j) / mass_j; nan where the component has no mass."""
    h = grid.spacing
    kin, inter = _energy_terms(u, grid, model)
    m = h * np.sum(np.abs(u) ** 2, axis=1)
    w = np.full(3, np.nan)
    pos = m > 0
    w[pos] = -(kin[pos] - inter[pos]) / m[pos]
    return w


def _el_residual_array(u: np.ndarray, w: np.ndarray, grid: Grid,
                       model: CouplingModel) -> float:
    h = grid.spacing
    G = _gradient_array(u, grid, model)
    worst = 0.0
    any_mass = False
    for j in range(3):
        m = h * np.sum(np.abs(u[j]) ** 2)
        if m <= 0:
            continue
        any_mass = True
        r = G[j] + w[j] * u[j]
        worst = max(worst, float(np.sqrt(h * np.sum(np.abs(r) ** 2) / m)))
    if not any_mass:
        raise ValueError("all components have zero mass")
    return worst


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def energy(state: State, model: CouplingModel) -> float:
    """Value of the energy functional H."""
    return _energy_array(state.stack(), state.grid, model)


def energy_gradient(state: State, model: CouplingModel) -> State:
    """Gradient G with dH(state)[d] = 2*Re<G, d>_{L^2}."""
    G = _gradient_array(state.stack(), state.grid, model)
    return State.from_array(state.grid, G)


def lagrange_multipliers(state: State, model: CouplingModel,
                         skip_zero_mass: bool = False) -> Multipliers:
    """Extract (w1, w2, w3) from the multiplier identity.

    By default every component must carry positive mass (zero mass leaves
    the multiplier undefined and raises).  With skip_zero_mass=True the
    undefined entries are reported as NaN instead, matching the solver's
    handling of frozen components.
    """
    w = _multiplier_array(state.stack(), state.grid, model)
    if not skip_zero_mass and np.any(np.isnan(w)):
        raise ValueError("undefined multiplier: a component has zero mass")
    return Multipliers(*map(float, w))


def el_residual(state: State, mult: Multipliers, model: CouplingModel) -> float:
    """max_j ||G_j + w_j u_j|| / ||u_j||, skipping zero-mass components."""
    return _el_residual_array(state.stack(), mult.as_array(), state.grid, model)


def sech_profile(sigma: float, a: float, p: float, grid: Grid) -> Field:
    """Unique positive solution of  -u'' + sigma*u = a*u^(2p-1).

    psi(x) = (sigma*p/a)^(1/(2p-2)) * sech^(2/(2p-2))( sqrt(sigma)*(2p-2)*x/2 ).
    """
    if sigma <= 0 or a <= 0:
        raise ValueError("sigma and a must be positive")
    if not (2.0 <= p < 3.0):
        raise ValueError(f"exponent p must lie in [2, 3), got {p}")
    x = grid.nodes
    amp = (sigma * p / a) ** (1.0 / (2 * p - 2))
    arg = np.sqrt(sigma) * (2 * p - 2) * x / 2
    return Field(grid, amp * (1.0 / np.cosh(arg)) ** (2.0 / (2 * p - 2)))


def two_component_profile(omega: float, beta: float, grid: Grid):
    """Explicit equal pair for p=2, a11=a22=1, a12=beta > -1.

    Both components equal sqrt(2*omega/(1+beta)) * sech(sqrt(omega) x).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if beta <= -1:
        raise ValueError("beta must exceed -1")
    x = grid.nodes
    phi = np.sqrt(2 * omega / (1 + beta)) / np.cosh(np.sqrt(omega) * x)
    return Field(grid, phi), Field(grid, phi.copy())


def apply_symmetry(state: State, shift: float = 0.0, boost: float = 0.0,
                   phases=(0.0, 0.0, 0.0), time: float = 0.0) -> State:
    """Apply the symmetry group:  u_j -> e^{-i boost^2 t + i boost x + i b_j} u_j(x - shift).

    Whole-grid-step shifts are exact permutations; other shifts use spectral
    interpolation.  `time` enters only through the documented phase convention
    of the travelling-wave ansatz.
    """
    from .spectral import translate

    grid = state.grid
    x = grid.nodes
    gal = np.exp(1j * (boost * x - boost ** 2 * time))
    out = []
    for f, beta in zip((state.u1, state.u2, state.u3), phases):
        g = translate(f, shift) if shift != 0.0 else f
        out.append(Field(grid, np.exp(1j * beta) * gal * g.values))
    return State(*out)


def gn_ratio(f: Field, p: float) -> float:
    """Interpolation ratio |f|_{2p}^{2p} / (||f'||^{p-1} ||f||^{p+1})."""
    from .spectral import spectral_derivative

    grid = f.grid
    num = integrate(np.abs(f.values) ** (2 * p), grid)
    l2 = np.sqrt(integrate(np.abs(f.values) ** 2, grid))
    dl2 = np.sqrt(integrate(np.abs(spectral_derivative(f).values) ** 2, grid))
    if l2 == 0 or dl2 == 0:
        raise ValueError("ratio undefined for constant or zero fields")
    return float(num / (dl2 ** (p - 1) * l2 ** (p + 1)))


def gn_sharp_constant(p: float, grid: Grid) -> float:
    """Sharp 1-D interpolation constant, calibrated on the extremal profile.

    The ratio is invariant under amplitude scaling and dilation, so any
    member of the sech family evaluates it.
    """
    return gn_ratio(sech_profile(1.0, 1.0, p, grid), p)


def random_smooth_state(grid: Grid, rng, amplitude: float = 0.5) -> np.ndarray:
    """Localized smooth random (3, n) complex samples for diagnostics.

    Band-limited complex noise under a gaussian envelope, normalized so the
    largest modulus equals `amplitude`; decays below round-off at the box
    edge, so whole-line identities apply up to grid error.
    """
    k = grid.wavenumbers
    env = np.exp(-grid.nodes ** 2 / (2 * (grid.length / 8) ** 2))
    u = np.empty((3, grid.n), dtype=complex)
    for j in range(3):
        spec = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        spec *= np.exp(-(k / 3.0) ** 2)
        f = env * ifft(spec)
        u[j] = amplitude * f / np.abs(f).max()
    return u


@dataclass(frozen=True)
class PhaseDiagnostics:
    """Constancy-of-phase report for one component.

    theta is the mass-weighted mean phase; max_deviation the largest phase
    angle relative to theta over the support region (samples above
    support_rel * max|f|); min_aligned_real the smallest value of
    Re(e^{-i theta} f) there (positive for a positive representative).
    """

    theta: float
    max_deviation: float
    min_aligned_real: float


def phase_diagnostics(f: Field, support_rel: float = 1e-10) -> PhaseDiagnostics:
    v = f.values
    mod = np.abs(v)
    peak = mod.max()
    if peak == 0.0:
        raise ValueError("zero field has no phase")
    support = mod > support_rel * peak
    theta = float(np.angle(np.sum(mod[support] * v[support])))
    aligned = v[support] * np.exp(-1j * theta)
    max_dev = float(np.max(np.abs(np.angle(aligned))))
    return PhaseDiagnostics(theta, max_dev, float(aligned.real.min()))
