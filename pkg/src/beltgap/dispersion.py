"""Harmonic-coupling pencils and the two directions of the dispersion solve.

Bloch solutions of the moving string on a harmonically modulated foundation
have the compound-wave form u(x, t) = sum_m alpha_m exp(i((m - k) x + omega t)).
Harmonic balance couples neighbouring amplitudes and yields a square matrix
A(omega, k) of size 2M+1, tridiagonal in the harmonic index m = -M..M:

    A[m, m]     = (v (k - m) - omega)^2 - (k - m)^2 - s
    A[m, m +- 1] = -s sigma / 2

Nontrivial amplitude vectors require det A(omega, k) = 0, which this module
solves in both directions: all real frequencies omega for a given Bloch
wavenumber k, and all complex Bloch wavenumbers k for a given omega.  Both
are quadratic eigenvalue problems and are handled uniformly by companion
linearization to a standard eigenproblem of dimension 2(2M+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import (
    BeltParams,
    DegeneracyError,
    NumericalError,
    ParameterError,
    require_valid,
)

#: Relative tolerance for accepting an omega eigenvalue as real:
#: |Im omega| <= REALITY_RTOL * max(1, |Re omega|).
REALITY_RTOL = 1e-8
#: Residual tolerance: |det A| at an emitted eigenpair must stay below
#: RESIDUAL_RTOL * det_scale(...).
RESIDUAL_RTOL = 1e-8
#: |Im k| at or below this counts as a propagating (non-evanescent) wave.
#: Separates eigenvalue roundoff dust from genuine spatial decay.
PROPAGATING_DECAY_TOL = 1e-6
#: Roundoff guard for folding wavenumbers onto the zone boundary.
BZ_FOLD_GUARD = 1e-12
#: df/domega below this (relative to det_scale) marks a branch crossing
#: where the implicit group velocity is undefined.
DEGENERATE_DFDW_RTOL = 1e-8


def fold_to_bz(k_real: float, guard: float = BZ_FOLD_GUARD) -> float:
    """Fold a real wavenumber into the first Brillouin zone [-0.5, 0.5].

    The dispersion function has period 1 in k, so wavenumbers are reported
    modulo 1.  Zone-boundary values are represented as +0.5: a value folds
    to -0.5 + eps only when it sits strictly above the boundary by more
    than the roundoff guard.  This keeps zone-boundary states from being
    counted under two labels.
    """
    folded = k_real - math.floor(k_real + 0.5)
    if folded < -0.5 + guard:
        folded = 0.5
    return folded


@dataclass(frozen=True)
class ComplexWavenumber:
    """A complex Bloch wavenumber with its real part folded into the zone."""

    k: complex

    @property
    def decay_rate(self) -> float:
        """Spatial attenuation per unit (dimensionless) length, |Im k|."""
        return abs(self.k.imag)

    def is_propagating(self, tol: float = PROPAGATING_DECAY_TOL) -> bool:
        return self.decay_rate <= tol


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Quadratic matrix pencil c0 + x c1 + x^2 c2 in the eigenvariable x.

    For the omega problem (x = omega) c2 is the identity; for the k problem
    (x = k) c2 is (v^2 - 1) times the identity.  Harmonic rows follow the
    canonical order m = -M..M.
    """

    variable: str
    harmonics: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    @property
    def size(self) -> int:
        return self.c0.shape[0]

    def evaluate(self, x: complex) -> np.ndarray:
        """The pencil evaluated at eigenvariable value x."""
        return self.c0 + x * self.c1 + (x * x) * self.c2


def _offdiag_coupling(bp: BeltParams) -> float:
    return -0.5 * bp.s * bp.sigma


def assemble_omega_pencil(bp: BeltParams, k: float) -> CouplingMatrix:
    """Pencil in omega at fixed wavenumber k.

    c0 has diagonal (v(k - m))^2 - (k - m)^2 - s and the constant coupling
    -s sigma / 2 on the first off-diagonals; c1 = diag(-2 v (k - m));
    c2 = I.  k may lie outside the Brillouin zone; the pencil is defined
    for any finite k.
    """
    require_valid(bp)
    if not np.isfinite(k):
        raise ParameterError(f"wavenumber k must be finite, got {k!r}")
    m = np.arange(-bp.M, bp.M + 1, dtype=float)
    km = k - m
    n = m.size
    c0 = np.zeros((n, n))
    np.fill_diagonal(c0, (bp.v * km) ** 2 - km ** 2 - bp.s)
    if n > 1:
        idx = np.arange(n - 1)
        c0[idx, idx + 1] = _offdiag_coupling(bp)
        c0[idx + 1, idx] = _offdiag_coupling(bp)
    c1 = np.diag(-2.0 * bp.v * km)
    return CouplingMatrix("omega", m, c0, c1, np.eye(n))


def assemble_k_pencil(bp: BeltParams, omega: float) -> CouplingMatrix:
    """Pencil in k at fixed frequency omega.

    Expanding the diagonal entries in powers of k gives
    c0 = diag((v^2 - 1) m^2 + 2 v omega m + omega^2 - s) plus the coupling
    band, c1 = diag(-2 m (v^2 - 1) - 2 v omega), and the scalar leading
    coefficient c2 = (v^2 - 1) I, nonzero for subcritical speeds.
    """
    require_valid(bp)
    if not np.isfinite(omega):
        raise ParameterError(f"omega must be finite, got {omega!r}")
    m = np.arange(-bp.M, bp.M + 1, dtype=float)
    n = m.size
    vv = bp.v * bp.v - 1.0
    c0 = np.zeros((n, n))
    np.fill_diagonal(c0, vv * m * m + 2.0 * bp.v * omega * m + omega * omega - bp.s)
    if n > 1:
        idx = np.arange(n - 1)
        c0[idx, idx + 1] = _offdiag_coupling(bp)
        c0[idx + 1, idx] = _offdiag_coupling(bp)
    c1 = np.diag(-2.0 * m * vv - 2.0 * bp.v * omega)
    return CouplingMatrix("k", m, c0, c1, vv * np.eye(n))


def dispersion_matrix(bp: BeltParams, omega: complex, k: complex) -> np.ndarray:
    """The coupling matrix A(omega, k); complex arguments are allowed."""
    require_valid(bp)
    m = np.arange(-bp.M, bp.M + 1, dtype=float)
    km = k - m
    diag = (bp.v * km - omega) ** 2 - km ** 2 - bp.s
    n = m.size
    a = np.zeros((n, n), dtype=np.result_type(diag.dtype, float))
    np.fill_diagonal(a, diag)
    if n > 1:
        idx = np.arange(n - 1)
        a[idx, idx + 1] = _offdiag_coupling(bp)
        a[idx + 1, idx] = _offdiag_coupling(bp)
    return a


def det_dispersion(bp: BeltParams, omega: complex, k: complex) -> complex:
    """det A(omega, k): the scalar dispersion function.

    Zero exactly on the dispersion surface; used as the residual oracle
    for both eigen-solvers.
    """
    return complex(np.linalg.det(dispersion_matrix(bp, omega, k)))


def det_scale(bp: BeltParams, omega: complex, k: complex) -> float:
    """Hadamard-style magnitude scale for det A at (omega, k).

    Product of per-row Euclidean norms floored at 1, so the scale never
    collapses when a row vanishes on the dispersion surface.  Residuals
    are judged relative to this.
    """
    a = dispersion_matrix(bp, omega, k)
    norms = np.sqrt((np.abs(a) ** 2).sum(axis=1))
    return float(np.prod(np.maximum(norms, 1.0)))


def _companion(c0: np.ndarray, c1: np.ndarray, lead: float) -> np.ndarray:
    """First-companion linearization of c0 + x c1 + x^2 lead I."""
    n = c0.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, n:] = np.eye(n)
    block[n:, :n] = -c0 / lead
    block[n:, n:] = -c1 / lead
    return block


def solve_omega(bp: BeltParams, k: float) -> np.ndarray:
    """All real frequencies omega with det A(omega, k) = 0, sorted ascending.

    The quadratic pencil is linearized to a standard eigenproblem of
    dimension 2(2M+1).  Eigenvalues whose imaginary part exceeds the
    reality tolerance are complex pairs (no propagating solution) and are
    excluded.  Both signs of omega are returned; callers that plot filter
    to omega >= 0.
    """
    pencil = assemble_omega_pencil(bp, k)
    try:
        eig = np.linalg.eigvals(_companion(pencil.c0, pencil.c1, 1.0))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"omega eigensolve failed at k = {k}: {exc}") from exc
    keep = np.abs(eig.imag) <= REALITY_RTOL * np.maximum(1.0, np.abs(eig.real))
    return np.sort(eig.real[keep])


def solve_k(bp: BeltParams, omega: float) -> list[ComplexWavenumber]:
    """All 2(2M+1) complex Bloch wavenumbers at frequency omega.

    Each eigenvalue's real part is folded into the Brillouin zone.  The
    result is sorted by decay rate (propagating solutions first), then by
    folded real part, for deterministic output.

    The raw spectrum includes truncation artifacts: states dominated by the
    extreme harmonics m = +-M lack their outer coupling partner, so inside a
    genuine gap they can stay real.  Classification and mode extraction
    should therefore go through `min_decay_rates` / `principal_wavenumber`,
    which weigh eigenvalues by their eigenvector's dominant harmonic.
    """
    if omega < 0:
        raise ParameterError(f"omega must be nonnegative, got {omega}")
    pencil = assemble_k_pencil(bp, omega)
    lead = pencil.c2[0, 0]
    try:
        eig = np.linalg.eigvals(_companion(pencil.c0, pencil.c1, lead))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"k eigensolve failed at omega = {omega}: {exc}") from exc
    ks = [complex(fold_to_bz(z.real), z.imag) for z in eig]
    ks.sort(key=lambda z: (abs(z.imag), z.real, z.imag))
    return [ComplexWavenumber(z) for z in ks]


def is_uncoupled(bp: BeltParams) -> bool:
    """True when the harmonic coupling band vanishes (s, sigma or M zero)."""
    return bp.s == 0 or bp.sigma == 0 or bp.M == 0


#: Slack on |Re k| <= 0.5 when selecting canonical-copy eigenvalues.
_CANONICAL_GUARD = 1e-9


def _k_eigensystem(bp: BeltParams, omegas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched k-companion eigenvalues over a frequency array.

    Returns (eigenvalues, trusted_mask), both of shape (len(omegas),
    2(2M+1)).  The pencil spectrum repeats every Bloch class as
    harmonic-shifted copies near Re k + n; a copy shifted by n sees the
    harmonic window displaced by n, so copies near the window edge lose
    their coupling partners and can stay real inside a genuine gap.  The
    canonical copy -- unfolded Re k already inside the Brillouin zone -- is
    evaluated in the centered window and is the faithful one, so only it
    certifies propagation or attenuation.  Without coupling every
    eigenvalue is exact and the mask is all-true.
    """
    m = np.arange(-bp.M, bp.M + 1, dtype=float)
    n = m.size
    vv = bp.v * bp.v - 1.0
    batch = omegas.shape[0]
    c0 = np.zeros((batch, n, n))
    ii = np.arange(n)
    c0[:, ii, ii] = vv * m * m + 2.0 * bp.v * np.outer(omegas, m) \
        + (omegas * omegas)[:, None] - bp.s
    if n > 1:
        idx = np.arange(n - 1)
        c0[:, idx, idx + 1] = _offdiag_coupling(bp)
        c0[:, idx + 1, idx] = _offdiag_coupling(bp)
    c1 = np.zeros((batch, n, n))
    c1[:, ii, ii] = -2.0 * m * vv - 2.0 * bp.v * omegas[:, None]
    block = np.zeros((batch, 2 * n, 2 * n))
    block[:, :n, n:] = np.eye(n)
    block[:, n:, :n] = -c0 / vv
    block[:, n:, n:] = -c1 / vv
    try:
        eig = np.linalg.eigvals(block)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"batched k eigensolve failed for omega in "
            f"[{omegas.min()}, {omegas.max()}]: {exc}") from exc
    if is_uncoupled(bp):
        return eig, np.ones(eig.shape, dtype=bool)
    return eig, np.abs(eig.real) <= 0.5 + _CANONICAL_GUARD


def min_decay_rates(bp: BeltParams, omegas: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Smallest |Im k| over the trustworthy Bloch spectrum, per frequency.

    Out-of-zone copy eigenvalues are excluded (see `_k_eigensystem`); a
    frequency where every canonical eigenvalue is evanescent belongs to a
    stop band.  Vectorized over omega for frequency scans.
    """
    require_valid(bp)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(omegas < 0):
        raise ParameterError("omega values must be nonnegative")
    out = np.empty(omegas.shape[0])
    for start in range(0, omegas.shape[0], chunk):
        w = omegas[start:start + chunk]
        eig, trusted = _k_eigensystem(bp, w)
        decay = np.abs(eig.imag)
        masked = np.where(trusted, decay, np.inf)
        best = masked.min(axis=1)
        # No canonical eigenvalue at all (scan far beyond the trustworthy
        # range): fall back on the unfiltered minimum, never claiming a gap.
        fallback = decay.min(axis=1)
        out[start:start + chunk] = np.where(np.isfinite(best), best, fallback)
    return out


def principal_wavenumber(bp: BeltParams, omega: float) -> ComplexWavenumber:
    """The physically meaningful Bloch wavenumber at a frequency.

    The minimal-decay eigenvalue among canonical (in-zone) copies: a real
    wavenumber in a pass band, the weakest-decaying evanescent class inside
    a gap.  This is the representative used for mode-shape reconstruction.
    """
    require_valid(bp)
    if omega < 0:
        raise ParameterError(f"omega must be nonnegative, got {omega}")
    eig, trusted = _k_eigensystem(bp, np.array([float(omega)]))
    eig, trusted = eig[0], trusted[0]
    if trusted.any():
        eig = eig[trusted]
    order = np.lexsort((eig.imag, eig.real, np.abs(eig.imag)))
    z = eig[order[0]]
    return ComplexWavenumber(complex(fold_to_bz(z.real), z.imag))


def group_velocity_closed(bp: BeltParams, k: float, sign: int) -> float:
    """Single-harmonic group velocity v + sign * k / sqrt(k^2 + s).

    Valid in the regime where one harmonic dominates (sigma ~ 0); the two
    signs select the forward and backward travelling wave.  Undefined at
    k = 0 when s = 0.
    """
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign!r}")
    if bp.s == 0 and k == 0:
        raise ParameterError("group velocity undefined at k = 0 with s = 0")
    return bp.v + sign * k / math.sqrt(k * k + bp.s)


def group_velocity_implicit(bp: BeltParams, omega: float, k: float) -> float:
    """Group velocity -(df/dk)/(df/domega) from the dispersion function.

    Central finite differences of det A around an on-surface point.
    Raises DegeneracyError when df/domega vanishes (branch crossing), where
    d omega / d k is not single-valued.
    """
    h_w = 1e-6 * max(1.0, abs(omega))
    h_k = 1e-6 * max(1.0, abs(k))
    f_w = (det_dispersion(bp, omega + h_w, k) - det_dispersion(bp, omega - h_w, k)).real / (2 * h_w)
    f_k = (det_dispersion(bp, omega, k + h_k) - det_dispersion(bp, omega, k - h_k)).real / (2 * h_k)
    scale = det_scale(bp, omega, k)
    if abs(f_w) <= DEGENERATE_DFDW_RTOL * scale:
        raise DegeneracyError(
            f"df/domega ~ 0 at (omega = {omega}, k = {k}): branch crossing, "
            "group velocity not single-valued")
    return -f_k / f_w


@dataclass(frozen=True, eq=False)
class DispersionBranch:
    """One connected omega(k) curve over a swept wavenumber grid."""

    params: BeltParams
    label: int
    k: np.ndarray
    omega: np.ndarray
    direction: str  # "forward" or "backward", from the mean slope sign

    def omega_at(self, k: float) -> float:
        """Linear interpolation of omega on the branch samples."""
        if not (self.k[0] <= k <= self.k[-1]):
            raise ParameterError(
                f"k = {k} outside branch sample range [{self.k[0]}, {self.k[-1]}]")
        return float(np.interp(k, self.k, self.omega))


def group_velocity_numeric(branch: DispersionBranch, k: float) -> float:
    """Group velocity d omega / d k on a swept branch at wavenumber k.

    The on-surface frequency is recovered by re-solving at k and taking the
    root nearest the branch interpolation, then differentiating the
    dispersion function implicitly.
    """
    guess = branch.omega_at(k)
    roots = solve_omega(branch.params, k)
    if roots.size == 0:
        raise NumericalError(f"no real dispersion roots at k = {k}")
    omega = float(roots[np.argmin(np.abs(roots - guess))])
    return group_velocity_implicit(branch.params, omega, k)


#: Prediction error allowed when continuing a branch to the next grid point,
#: as a multiple of (1 + v) * dk (group speeds are bounded by v + 1).
_BRANCH_JUMP_FACTOR = 2.5


def sweep_branches(bp: BeltParams, k_grid: np.ndarray, omega_max: float) -> list[DispersionBranch]:
    """Dispersion branches omega(k) over a wavenumber grid.

    For each k the real spectrum is restricted to [0, omega_max]; samples
    are then connected across the grid by nearest continuation of
    (omega, d omega/d k), with ties broken by the smaller frequency jump.
    Branch labels are assigned in order of appearance and stay fixed.
    """
    require_valid(bp)
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.size == 0:
        raise ParameterError("k_grid must be nonempty")
    if k_grid.size > 1 and not np.all(np.diff(k_grid) > 0):
        raise ParameterError("k_grid must be strictly increasing")

    per_k = []
    for k in k_grid:
        try:
            roots = solve_omega(bp, float(k))
        except NumericalError as exc:
            raise NumericalError(f"{exc} (during sweep at k = {k})") from exc
        per_k.append(roots[(roots >= 0.0) & (roots <= omega_max)])

    active: list[dict] = []
    finished: list[dict] = []
    next_label = 0
    prev_k = None
    for k, roots in zip(k_grid, per_k):
        if not active:
            for w in roots:
                active.append({"label": next_label, "ks": [k], "ws": [w], "slope": 0.0})
                next_label += 1
            prev_k = k
            continue
        dk = k - prev_k
        allowed = _BRANCH_JUMP_FACTOR * (1.0 + bp.v) * dk + 1e-9
        taken = np.zeros(roots.size, dtype=bool)
        if roots.size and active:
            preds = np.array([br["ws"][-1] + br["slope"] * dk for br in active])
            lasts = np.array([br["ws"][-1] for br in active])
            cost = np.abs(roots[None, :] - preds[:, None])
            cost = cost + 1e-6 * np.abs(roots[None, :] - lasts[:, None])
            rows, cols = linear_sum_assignment(cost)
            still_active = []
            matched = set()
            for r, c in zip(rows, cols):
                if abs(roots[c] - preds[r]) <= allowed:
                    br = active[r]
                    br["ks"].append(k)
                    br["ws"].append(roots[c])
                    br["slope"] = (br["ws"][-1] - br["ws"][-2]) / dk
                    matched.add(r)
                    taken[c] = True
            for i, br in enumerate(active):
                (still_active if i in matched else finished).append(br)
            active = still_active
        else:
            finished.extend(active)
            active = []
        for c in np.flatnonzero(~taken):
            active.append({"label": next_label, "ks": [k], "ws": [roots[c]], "slope": 0.0})
            next_label += 1
        prev_k = k
    finished.extend(active)

    branches = []
    for br in sorted(finished, key=lambda b: b["label"]):
        ks = np.array(br["ks"])
        ws = np.array(br["ws"])
        if ks.size >= 2:
            mean_slope = float(np.mean(np.diff(ws) / np.diff(ks)))
        else:
            mean_slope = 0.0
        branches.append(DispersionBranch(
            params=bp,
            label=br["label"],
            k=ks,
            omega=ws,
            direction="forward" if mean_slope >= 0 else "backward",
        ))
    return branches
