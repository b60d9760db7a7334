"""Coupled implicit time stepping for the two stabilized ion-transport schemes.

Each step runs a fixed-point (Picard) loop over the block system for the two
ion densities and the electric potential.  Within one sweep the densities are
solved with coefficients frozen at the previous iterate, a backtracking line
search guards the density update, and the potential is recomputed from the
accepted densities.  Algorithm 1 uses the consistent mass matrix, an implicit
drift matrix and matrix-coupling stabilization; algorithm 2 uses the lumped
mass, the explicit edge-based transport term and entropy-secant
stabilization.
"""

import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .detector import compute_alpha
from .fespace import (
    assemble_drift,
    assemble_mass,
    assemble_stiffness,
    lumped_mass_vector,
)
from .stabilizer import (
    build_stabilizer_alg1,
    build_stabilizer_alg2,
    entropy_functions,
    star_transport_vector,
)
from . import diagnostics, mesh as meshmod

EPSILON_FLOOR = 1e-8
ELECTRONEUTRALITY_TOL = 1e-2
DMP_TOL = 1e-10
MASS_DRIFT_TOL = 1e-10
ENTROPY_STEP_TOL = 1e-8


class ElectroneutralityError(ValueError):
    """Pure-Neumann potential solve with an unbalanced total charge."""


class LinearSolveError(RuntimeError):
    """A linear system failed to reach the requested residual."""


class StepError(RuntimeError):
    """A time step failed to converge; carries the residual history."""

    def __init__(self, message, residual_history):
        super().__init__(message)
        self.residual_history = residual_history


class State:
    """Solver state: cation density p, anion density n, potential phi, time t."""

    def __init__(self, p, n, phi, t):
        self.p = np.asarray(p, dtype=float)
        self.n = np.asarray(n, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.t = float(t)
        for name in ("p", "n", "phi"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite values in state field {name}")


class SolverConfig:
    """Time stepping and nonlinear-iteration parameters.

    ``stagnation_window``: the fixed-point loop gives up and keeps its best
    iterate when the residual has not improved for this many iterations
    (0 disables the exit and failures raise ``StepError``).
    """

    def __init__(self, algorithm=1, k=1e-3, T=0.5, q=2.0,
                 picard_residual_tol=1e-6, picard_increment_tol=1e-16,
                 picard_max_iters=400, linear_tol=1e-12,
                 shrink=0.5, max_halvings=30, stagnation_window=50):
        if algorithm not in (1, 2):
            raise ValueError(f"algorithm must be 1 or 2, got {algorithm}")
        if k <= 0:
            raise ValueError(f"time step k must be positive, got {k}")
        if T < 0:
            raise ValueError(f"final time T must be nonnegative, got {T}")
        if q <= 0:
            raise ValueError(f"detector exponent q must be positive, got {q}")
        for name, val in (
            ("picard_residual_tol", picard_residual_tol),
            ("picard_increment_tol", picard_increment_tol),
            ("linear_tol", linear_tol),
        ):
            if val <= 0:
                raise ValueError(f"{name} must be positive, got {val}")
        self.algorithm = algorithm
        self.k = float(k)
        self.T = float(T)
        self.q = float(q)
        self.picard_residual_tol = float(picard_residual_tol)
        self.picard_increment_tol = float(picard_increment_tol)
        self.picard_max_iters = int(picard_max_iters)
        self.linear_tol = float(linear_tol)
        self.shrink = float(shrink)
        self.max_halvings = int(max_halvings)
        self.stagnation_window = int(stagnation_window)


class BoundarySpec:
    """Dirichlet data by boundary tag; everything else is natural Neumann.

    ``phi_dirichlet`` maps tags to potential values (empty = pure Neumann,
    zero-mean potential); ``p_dirichlet`` optionally pins the cation density
    on tagged nodes.
    """

    def __init__(self, phi_dirichlet=None, p_dirichlet=None):
        self.phi_dirichlet = dict(phi_dirichlet or {})
        self.p_dirichlet = dict(p_dirichlet or {})

    @property
    def pure_neumann(self):
        return not self.phi_dirichlet

    def tagged_nodes(self, mesh, tag_values):
        nodes, values = [], []
        for tag, value in tag_values.items():
            idx = mesh.nodes_with_tag(tag)
            if idx.size == 0:
                raise ValueError(f"boundary tag {tag!r} matches no mesh node")
            nodes.append(idx)
            values.append(np.full(idx.size, float(value)))
        if not nodes:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        return np.concatenate(nodes), np.concatenate(values)


def _diag_vector(lumped):
    if sp.issparse(lumped):
        return np.asarray(lumped.diagonal(), dtype=float)
    return np.asarray(lumped, dtype=float)


class PoissonSolver:
    """Prefactorized potential solver for a fixed mesh and boundary spec.

    Pure-Neumann problems are compatible only for a balanced total charge;
    the residual charge mean is projected out of the right side (interpolated
    initial data balance only approximately) and the solution is shifted to
    zero mean.  Dirichlet values are imposed strongly.
    """

    def __init__(self, mesh, stiffness, lumped, bc,
                 electroneutrality_tol=ELECTRONEUTRALITY_TOL, linear_tol=1e-12):
        self.mesh = mesh
        self.stiffness = stiffness.tocsr()
        self.d = _diag_vector(lumped)
        self.area = float(self.d.sum())
        self.electroneutrality_tol = electroneutrality_tol
        self.linear_tol = linear_tol

        fixed, values = bc.tagged_nodes(mesh, bc.phi_dirichlet)
        self.pure_neumann = fixed.size == 0
        self.fixed = fixed
        self.fixed_values = values
        n = mesh.num_nodes
        if self.pure_neumann:
            # ground node 0; the projected right side makes this consistent
            free = np.arange(1, n)
        else:
            mask = np.ones(n, dtype=bool)
            mask[fixed] = False
            free = np.flatnonzero(mask)
        self.free = free
        K = self.stiffness
        self._K_ff = K[free][:, free].tocsc()
        self._lu = spla.splu(self._K_ff)
        if not self.pure_neumann:
            self._K_fc = K[free][:, fixed].tocsr()

    def solve(self, rho_diff):
        """Potential for a given charge difference p - n."""
        rho_diff = np.asarray(rho_diff, dtype=float)
        b = self.d * rho_diff
        n = self.mesh.num_nodes
        phi = np.zeros(n)
        if self.pure_neumann:
            total = b.sum()
            if abs(total) > self.electroneutrality_tol * self.area:
                raise ElectroneutralityError(
                    f"total charge {total:g} violates electroneutrality "
                    f"(tolerance {self.electroneutrality_tol:g} x area)"
                )
            b = b - (total / self.area) * self.d
            phi[self.free] = self._lu.solve(b[self.free])
            phi -= (self.d @ phi) / self.area
            resid = self.stiffness @ phi - b
        else:
            phi[self.fixed] = self.fixed_values
            rhs = b[self.free] - self._K_fc @ self.fixed_values
            phi[self.free] = self._lu.solve(rhs)
            resid = (self.stiffness @ phi - b)[self.free]
        scale = float((abs(self.stiffness) @ np.abs(phi)).max(initial=0.0)
                      + np.abs(b).max(initial=0.0))
        err = np.abs(resid).max(initial=0.0) / max(scale, 1.0)
        if not np.isfinite(err) or err > 1e3 * self.linear_tol:
            raise LinearSolveError(
                f"potential solve backward error {err:g} exceeds tolerance"
            )
        return phi


def solve_poisson(rho_diff, bc, stiffness, lumped, mesh,
                  electroneutrality_tol=ELECTRONEUTRALITY_TOL):
    """One-shot potential solve; see ``PoissonSolver`` for the contract."""
    solver = PoissonSolver(mesh, stiffness, lumped, bc,
                           electroneutrality_tol=electroneutrality_tol)
    return solver.solve(rho_diff)


class Assemblies:
    """Mesh-bound operators shared by every step of a run."""

    def __init__(self, mesh, stencil, bc, fns,
                 electroneutrality_tol=ELECTRONEUTRALITY_TOL):
        self.mesh = mesh
        self.stencil = stencil
        self.bc = bc
        self.fns = fns
        self.mass = assemble_mass(mesh)
        self.d = lumped_mass_vector(mesh)
        self.lumped = sp.diags(self.d, format="csr")
        self.stiffness = assemble_stiffness(mesh)
        self.poisson = PoissonSolver(
            mesh, self.stiffness, self.d, bc,
            electroneutrality_tol=electroneutrality_tol,
        )
        self.p_fixed, self.p_fixed_values = bc.tagged_nodes(mesh, bc.p_dirichlet)
        n = mesh.num_nodes
        if self.p_fixed.size:
            keep = np.ones(n, dtype=bool)
            keep[self.p_fixed] = False
            self._row_mask = sp.diags(keep.astype(float), format="csr")
            fix = np.zeros(n)
            fix[self.p_fixed] = 1.0
            self._row_fix = sp.diags(fix, format="csr")

    def impose_p_rows(self, A, b):
        """Replace pinned cation rows by identity rows with the pinned value."""
        if not self.p_fixed.size:
            return A, b
        A = self._row_mask @ A + self._row_fix
        b = b.copy()
        b[self.p_fixed] = self.p_fixed_values
        return A, b


def epsilon_from_initial(p0, n0, floor=EPSILON_FLOOR):
    """Regularization threshold: half the smallest initial density, floored.

    The half keeps the threshold strictly below the initial minimum whenever
    that minimum is positive; saturated initial data can reach exactly zero
    in floating point, hence the floor.
    """
    m = 0.5 * min(float(np.min(p0)), float(np.min(n0)))
    return max(m, floor)


def epsilon_for_scenario(p0, n0, bc, floor=EPSILON_FLOOR):
    """Regularization threshold adapted to the boundary conditions.

    Isolated (pure-Neumann) runs keep the bounds of the initial data, so the
    threshold can sit below the initial minimum and the regularized branch
    never activates.  Driven runs (any Dirichlet data) push densities below
    the initial minimum toward zero; there the threshold must be tiny, or
    the max(value, epsilon) floor of the transport secant keeps extracting
    mass from an emptied wall node and makes it negative.
    """
    if bc.pure_neumann and not bc.p_dirichlet:
        return epsilon_from_initial(p0, n0, floor)
    return floor


def backtracking_search(prev, candidate, residual_fn, shrink=0.5,
                        max_halvings=30, prev_residual=None, good_enough=None):
    """Damped update selection between a previous iterate and a candidate.

    Tries theta in {1, shrink, shrink^2, ...} and returns
    ``prev + theta (candidate - prev)`` for the first theta whose residual is
    below ``good_enough`` or strictly below the residual at ``prev``.  If no
    theta reduces the residual, the most-damped iterate is returned with the
    no-decrease flag set.

    Returns
    -------
    (accepted, theta, residual, no_decrease)
    """
    prev = np.asarray(prev, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    r_prev = residual_fn(prev) if prev_residual is None else prev_residual
    if np.array_equal(candidate, prev):
        return prev.copy(), 1.0, r_prev, True
    direction = candidate - prev
    theta = 1.0
    trial, r = prev, r_prev
    for _ in range(max_halvings + 1):
        trial = prev + theta * direction
        r = residual_fn(trial)
        if (good_enough is not None and r <= good_enough) or r < r_prev:
            return trial, theta, r, False
        theta *= shrink
    return trial, theta / shrink, r, True


def _stack(p, n):
    return np.concatenate([p, n])


def _unstack(z, n_nodes):
    return z[:n_nodes], z[n_nodes:]


def _backward_error(A, x, b):
    resid = float(np.abs(A @ x - b).max(initial=0.0))
    scale = float((abs(A) @ np.abs(x)).max(initial=0.0)
                  + np.abs(b).max(initial=0.0))
    return resid / max(scale, np.finfo(float).tiny)


def _solve_linear(A, b, linear_tol):
    lu = spla.splu(A.tocsc())
    x = lu.solve(b)
    err = _backward_error(A, x, b)
    if not np.isfinite(err) or err > 1e3 * linear_tol:
        raise LinearSolveError(
            f"density solve backward error {err:g} exceeds tolerance")
    return x


class _StepContext:
    """One time step's residual evaluation and linearized solves."""

    def __init__(self, state, config, asm):
        self.asm = asm
        self.config = config
        self.p_old = state.p
        self.n_old = state.n
        self.k = config.k
        self._last = None  # (z, phi, residual_vector)

    def _coefficients(self, p, n, phi):
        asm, cfg = self.asm, self.config
        mesh, stencil = asm.mesh, asm.stencil
        a_p = compute_alpha(p, cfg.q, mesh, stencil)
        a_n = compute_alpha(n, cfg.q, mesh, stencil)
        if cfg.algorithm == 1:
            G = assemble_drift(mesh, phi)
            Bp = build_stabilizer_alg1(+1, self.k, a_p, mesh,
                                       asm.mass, asm.stiffness, G)
            Bn = build_stabilizer_alg1(-1, self.k, a_n, mesh,
                                       asm.mass, asm.stiffness, G)
            return G, Bp, Bn
        Bp = build_stabilizer_alg2(+1, p, phi, a_p, asm.fns,
                                   asm.stiffness, mesh)
        Bn = build_stabilizer_alg2(-1, n, phi, a_n, asm.fns,
                                   asm.stiffness, mesh)
        vp = star_transport_vector(p, phi, asm.fns, asm.stiffness, mesh)
        vn = star_transport_vector(n, phi, asm.fns, asm.stiffness, mesh)
        return (vp, vn), Bp, Bn

    def residual_parts(self, p, n):
        """Self-consistent residual: the potential is recomputed from (p, n)
        and all coefficients are evaluated there, so the value vanishes only
        at a true fixed point of the step."""
        asm, cfg, k = self.asm, self.config, self.k
        phi = asm.poisson.solve(p - n)
        extra, Bp, Bn = self._coefficients(p, n, phi)
        K = asm.stiffness
        if cfg.algorithm == 1:
            G = extra
            r_p = asm.mass @ (p - self.p_old) / k + K @ p + G @ p + Bp.matrix @ p
            r_n = asm.mass @ (n - self.n_old) / k + K @ n - G @ n + Bn.matrix @ n
        else:
            vp, vn = extra
            r_p = asm.d * (p - self.p_old) / k + K @ p + vp + Bp.matrix @ p
            r_n = asm.d * (n - self.n_old) / k + K @ n - vn + Bn.matrix @ n
        if asm.p_fixed.size:
            r_p[asm.p_fixed] = p[asm.p_fixed] - asm.p_fixed_values
        return phi, _stack(r_p, r_n)

    def residual_norm(self, z):
        p, n = _unstack(z, self.asm.mesh.num_nodes)
        phi, r = self.residual_parts(p, n)
        self._last = (z, phi, r)
        return float(np.abs(r).max())

    def cached_phi(self, z):
        if self._last is not None and np.array_equal(self._last[0], z):
            return self._last[1]
        p, n = _unstack(z, self.asm.mesh.num_nodes)
        phi, r = self.residual_parts(p, n)
        self._last = (z, phi, r)
        return phi

    def linearized_solve(self, p_i, n_i, phi_i):
        """One block sweep with coefficients frozen at the given iterate."""
        asm, cfg, k = self.asm, self.config, self.k
        K = asm.stiffness
        extra, Bp, Bn = self._coefficients(p_i, n_i, phi_i)
        if cfg.algorithm == 1:
            G = extra
            A_p = asm.mass / k + K + G + Bp.matrix
            A_n = asm.mass / k + K - G + Bn.matrix
            b_p = asm.mass @ self.p_old / k
            b_n = asm.mass @ self.n_old / k
        else:
            vp, vn = extra
            Dk = asm.lumped / k
            A_p = Dk + K + Bp.matrix
            A_n = Dk + K + Bn.matrix
            b_p = asm.d * self.p_old / k - vp
            b_n = asm.d * self.n_old / k + vn
        A_p, b_p = asm.impose_p_rows(A_p, b_p)
        p_star = _solve_linear(A_p, b_p, cfg.linear_tol)
        n_star = _solve_linear(A_n, b_n, cfg.linear_tol)
        return p_star, n_star


def _picard_step(state, config, bc, asm):
    ctx = _StepContext(state, config, asm)
    n_nodes = asm.mesh.num_nodes
    z = _stack(state.p, state.n)
    phi_i = state.phi.copy()
    res = ctx.residual_norm(z)
    history = [res]

    # The residual is not monotone along the fixed-point path, so a strict
    # descent search can jam short of the tolerance, and the undamped map can
    # enter a two-cycle.  When the search jams, iterate with a constant
    # relaxation factor (which breaks oscillatory cycles) until the residual
    # falls below the jam level, then search again.  Near-flat density
    # plateaus can pin the self-consistent residual at a noise floor (the
    # detector reacts to roundoff ripples); the stagnation exit then keeps
    # the best iterate instead of aborting the run.
    jam_res = None
    best_res, best_it = res, 0
    best = (z.copy(), phi_i.copy())
    for it in range(1, config.picard_max_iters + 1):
        p_i, n_i = _unstack(z, n_nodes)
        p_star, n_star = ctx.linearized_solve(p_i, n_i, phi_i)
        candidate = _stack(p_star, n_star)
        if jam_res is not None:
            z_new = z + config.shrink * (candidate - z)
            res = ctx.residual_norm(z_new)
            if res < jam_res:
                jam_res = None
        else:
            z_new, _theta, res, no_decrease = backtracking_search(
                z, candidate, ctx.residual_norm,
                shrink=config.shrink, max_halvings=config.max_halvings,
                prev_residual=history[-1],
                good_enough=config.picard_residual_tol,
            )
            if no_decrease and not np.array_equal(candidate, z):
                jam_res = history[-1]
                z_new = z + config.shrink * (candidate - z)
                res = ctx.residual_norm(z_new)
        increment = float(np.linalg.norm(z_new - z))
        phi_i = ctx.cached_phi(z_new)
        z = z_new
        history.append(res)
        if res < best_res:
            best_res, best_it = res, it
            best = (z.copy(), phi_i.copy())
        if res <= config.picard_residual_tol \
                or increment <= config.picard_increment_tol:
            p_new, n_new = _unstack(z, n_nodes)
            new_state = State(p_new, n_new, phi_i, state.t + config.k)
            return new_state, it, history
        if config.stagnation_window and \
                it - best_it >= config.stagnation_window:
            z_best, phi_best = best
            p_new, n_new = _unstack(z_best, n_nodes)
            new_state = State(p_new, n_new, phi_best, state.t + config.k)
            return new_state, it, history
    raise StepError(
        f"fixed-point loop failed at t={state.t + config.k:g}: "
        f"residual {history[-1]:g} after {len(history) - 1} iterations",
        history,
    )


def picard_step_alg1(state, config, bc, asm):
    """Advance one step with the consistent-mass, implicit-drift scheme."""
    if config.algorithm != 1:
        raise ValueError("config.algorithm must be 1")
    return _picard_step(state, config, bc, asm)


def picard_step_alg2(state, config, bc, asm):
    """Advance one step with the lumped-mass, edge-transport scheme."""
    if config.algorithm != 2:
        raise ValueError("config.algorithm must be 2")
    return _picard_step(state, config, bc, asm)


class RunResult:
    """Outcome of a scenario run.

    ``reports`` has one entry per executed step (or the initial report alone
    when no step fits in [0, T]); ``initial_report`` is always available.
    ``in_force`` records which invariant flags the scenario's theory
    guarantees, for strict exit checking.
    """

    def __init__(self, reports, initial_report, state, mesh, asm, bounds,
                 in_force):
        self.reports = reports
        self.initial_report = initial_report
        self.state = state
        self.mesh = mesh
        self.assemblies = asm
        self.bounds = bounds
        self.in_force = in_force

    def all_reports(self):
        if self.reports and self.reports[0] is self.initial_report:
            return list(self.reports)
        return [self.initial_report] + list(self.reports)

    def flags_ok(self):
        """True when every in-force flag holds on every report."""
        for rep in self.all_reports():
            for name, active in self.in_force.items():
                if active and not getattr(rep, name):
                    return False
        return True


def _make_report(state, asm, fns, bounds, mass0, prev_entropy, picard_iters,
                 smallness_ok):
    """Diagnostics row for one state.  Entropy and dissipation are evaluated
    with negative density entries clamped to zero (bound violations still
    show in the raw extrema columns and the dmp flag)."""
    lo, hi = bounds
    mass_p = diagnostics.mass(state.p, asm.d)
    mass_n = diagnostics.mass(state.n, asm.d)
    p = np.maximum(state.p, 0.0)
    n = np.maximum(state.n, 0.0)
    entropy = diagnostics.entropy_Eh(p, n, state.phi, asm.d, asm.stiffness, fns)
    dissip = (
        diagnostics.dissipation_Dh(p, state.phi, asm.stiffness, fns, asm.mesh)
        + diagnostics.dissipation_Dh(n, state.phi, asm.stiffness, fns, asm.mesh)
    )
    min_p, _, max_p, _ = diagnostics.extrema(state.p)
    min_n, _, max_n, _ = diagnostics.extrema(state.n)
    dmp_ok = (
        min(min_p, min_n) >= lo - DMP_TOL and max(max_p, max_n) <= hi + DMP_TOL
    )
    mass_ok = True
    mass0_p, mass0_n = mass0
    if not asm.p_fixed.size:
        mass_ok = abs(mass_p - mass0_p) <= MASS_DRIFT_TOL * max(abs(mass0_p), 1.0)
    mass_ok = mass_ok and (
        abs(mass_n - mass0_n) <= MASS_DRIFT_TOL * max(abs(mass0_n), 1.0)
    )
    entropy_ok = (
        True if prev_entropy is None else entropy <= prev_entropy + ENTROPY_STEP_TOL
    )
    return diagnostics.StepReport(
        t=state.t, mass_p=mass_p, mass_n=mass_n,
        energy_es=diagnostics.energy_electrostatic(state.phi, asm.stiffness),
        entropy=entropy, dissipation=dissip,
        max_p=max_p, min_p=min_p, max_n=max_n, min_n=min_n,
        picard_iters=picard_iters,
        dmp_ok=dmp_ok, mass_ok=mass_ok, entropy_ok=entropy_ok,
        smallness_ok=smallness_ok,
    )


def run(scenario, on_step=None):
    """Execute a scenario: build the problem, march in time, collect reports.

    ``on_step(step_index, state)`` is invoked for the initial state (index 0)
    and after every accepted step.  Step failures abort the run; the raised
    ``StepError`` carries the partial ``RunResult`` on its ``partial``
    attribute so outputs can be flushed.
    """
    mesh = scenario.make_mesh()
    stencil = meshmod.build_sym_stencils(mesh)
    p0, n0 = scenario.initial_fields(mesh)
    fns = entropy_functions(epsilon_for_scenario(p0, n0, scenario.bc))
    asm = Assemblies(mesh, stencil, scenario.bc, fns)
    config = scenario.config
    phi0 = asm.poisson.solve(p0 - n0)
    state = State(p0, n0, phi0, 0.0)

    lo = min(float(p0.min()), float(n0.min()))
    hi = max(float(p0.max()), float(n0.max()))
    smallness_ok = 1.0 - config.k * (hi - lo) > 0.0
    if not smallness_ok:
        warnings.warn(
            f"time step k={config.k:g} is not small against the initial "
            f"range {hi - lo:g}; the bound-preservation premise of "
            f"algorithm 1 fails",
            RuntimeWarning,
        )

    mass0 = (diagnostics.mass(p0, asm.d), diagnostics.mass(n0, asm.d))
    initial_report = _make_report(
        state, asm, fns, (lo, hi), mass0, None, 0, smallness_ok
    )
    acute = meshmod.check_acuteness(mesh, asm.stiffness).is_acute
    in_force = {
        "dmp_ok": scenario.bc.pure_neumann and not asm.p_fixed.size,
        "mass_ok": True,
        "entropy_ok": (
            config.algorithm == 2 and acute and scenario.bc.pure_neumann
            and not asm.p_fixed.size
        ),
        "smallness_ok": False,  # warned about, never enforced
    }

    if on_step is not None:
        on_step(0, state)

    nsteps = int(np.floor(config.T / config.k + 1e-9))
    if nsteps == 0:
        return RunResult([initial_report], initial_report, state, mesh, asm,
                         (lo, hi), in_force)

    reports = []
    prev_entropy = initial_report.entropy
    step = picard_step_alg1 if config.algorithm == 1 else picard_step_alg2
    for m in range(1, nsteps + 1):
        try:
            state, iters, _history = step(state, config, scenario.bc, asm)
        except StepError as err:
            err.partial = RunResult(reports, initial_report, state, mesh, asm,
                                    (lo, hi), in_force)
            raise
        rep = _make_report(state, asm, fns, (lo, hi), mass0, prev_entropy,
                           iters, smallness_ok)
        prev_entropy = rep.entropy
        reports.append(rep)
        if on_step is not None:
            on_step(m, state)
    return RunResult(reports, initial_report, state, mesh, asm, (lo, hi),
                     in_force)
