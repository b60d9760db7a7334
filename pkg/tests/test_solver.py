import warnings

import numpy as np
import pytest

from pnpfem import (
    Assemblies,
    BoundarySpec,
    ElectroneutralityError,
    Scenario,
    SolverConfig,
    State,
    StepError,
    backtracking_search,
    build_channel,
    build_sym_stencils,
    entropy_functions,
    picard_step_alg1,
    picard_step_alg2,
    run,
    solve_poisson,
)
from pnpfem.fespace import assemble_stiffness, lumped_mass_vector
from pnpfem.mesh import BOTTOM, TOP
from pnpfem.scenarios import smooth_n0, smooth_p0


def uniform_scenario(algorithm, k=1e-2, T=0.05, n=8):
    return Scenario(
        "neutral", ("square", n),
        (lambda x, y: np.ones_like(x), lambda x, y: np.ones_like(x), "nodal"),
        BoundarySpec(),
        SolverConfig(algorithm=algorithm, k=k, T=T),
    )


def smooth_scenario(algorithm, k=1e-3, T=5e-3, n=12):
    return Scenario(
        "smooth-small", ("square", n), (smooth_p0, smooth_n0, "averaged"),
        BoundarySpec(), SolverConfig(algorithm=algorithm, k=k, T=T),
    )


class TestPoisson:
    def test_balanced_charge_gives_zero_potential(self, square8):
        K = assemble_stiffness(square8)
        d = lumped_mass_vector(square8)
        phi = solve_poisson(np.zeros(square8.num_nodes), BoundarySpec(), K, d,
                            square8)
        assert np.abs(phi).max() == 0.0

    def test_zero_mean_and_equation(self, square8, rng):
        K = assemble_stiffness(square8)
        d = lumped_mass_vector(square8)
        rho = rng.normal(size=square8.num_nodes)
        rho -= (d @ rho) / d.sum()
        phi = solve_poisson(rho, BoundarySpec(), K, d, square8)
        assert d @ phi == pytest.approx(0.0, abs=1e-10)
        assert np.abs(K @ phi - d * rho).max() < 1e-11

    def test_common_shift_leaves_potential_unchanged(self, square8, rng):
        K = assemble_stiffness(square8)
        d = lumped_mass_vector(square8)
        p = rng.uniform(1.0, 2.0, size=square8.num_nodes)
        n = p + rng.normal(scale=0.1, size=square8.num_nodes)
        n -= (d @ (n - p)) / d.sum()
        base = solve_poisson(p - n, BoundarySpec(), K, d, square8)
        shifted = solve_poisson((p + 5.0) - (n + 5.0), BoundarySpec(), K, d,
                                square8)
        assert shifted == pytest.approx(base, abs=1e-12)

    def test_electroneutrality_violation_raises(self, square8):
        K = assemble_stiffness(square8)
        d = lumped_mass_vector(square8)
        with pytest.raises(ElectroneutralityError):
            solve_poisson(np.ones(square8.num_nodes), BoundarySpec(), K, d,
                          square8)

    def test_dirichlet_matches_reduced_system_oracle(self):
        mesh = build_channel(0.5)
        K = assemble_stiffness(mesh)
        d = lumped_mass_vector(mesh)
        bc = BoundarySpec(phi_dirichlet={BOTTOM: -50.0, TOP: 50.0})
        phi = solve_poisson(np.zeros(mesh.num_nodes), bc, K, d, mesh)
        # independent dense solve of the constrained system
        A = K.toarray().copy()
        b = np.zeros(mesh.num_nodes)
        for tag, val in ((BOTTOM, -50.0), (TOP, 50.0)):
            for i in mesh.nodes_with_tag(tag):
                A[i, :] = 0.0
                A[i, i] = 1.0
                b[i] = val
        expected = np.linalg.solve(A, b)
        assert phi == pytest.approx(expected, abs=1e-9)
        bottom = mesh.nodes_with_tag(BOTTOM)
        assert np.all(phi[bottom] == -50.0)

    def test_unknown_tag_rejected(self, square8):
        K = assemble_stiffness(square8)
        d = lumped_mass_vector(square8)
        with pytest.raises(ValueError, match="membrane"):
            solve_poisson(np.zeros(square8.num_nodes),
                          BoundarySpec(phi_dirichlet={"membrane": 1.0}),
                          K, d, square8)


class TestBacktracking:
    def test_full_step_when_it_reduces(self):
        residual = lambda z: float(np.abs(z).max())
        prev = np.array([1.0, -1.0])
        cand = np.array([0.1, 0.2])
        accepted, theta, res, flag = backtracking_search(prev, cand, residual)
        assert theta == 1.0
        assert not flag
        assert accepted == pytest.approx(cand)

    def test_damped_step_for_overshooting_candidate(self):
        # scalar residual with a minimum near the previous iterate
        residual = lambda z: float(abs(z[0] - 0.1))
        prev = np.array([0.0])
        cand = np.array([1.0])
        accepted, theta, res, flag = backtracking_search(prev, cand, residual)
        assert theta < 1.0
        assert res < residual(prev)
        assert not flag

    def test_identical_candidate_flags_no_decrease(self):
        residual = lambda z: 1.0
        prev = np.array([2.0, 3.0])
        accepted, theta, res, flag = backtracking_search(prev, prev.copy(),
                                                         residual)
        assert flag
        assert accepted == pytest.approx(prev)

    def test_no_decrease_returns_most_damped(self):
        residual = lambda z: 1.0 + float(np.abs(z).max())
        prev = np.zeros(2)
        cand = np.ones(2)
        accepted, theta, res, flag = backtracking_search(
            prev, cand, residual, shrink=0.5, max_halvings=4)
        assert flag
        assert theta == pytest.approx(0.5**4)
        assert accepted == pytest.approx(prev + 0.5**4 * (cand - prev))

    def test_good_enough_shortcut(self):
        calls = []

        def residual(z):
            calls.append(z.copy())
            return 1e-9

        prev, cand = np.zeros(1), np.ones(1)
        accepted, theta, res, flag = backtracking_search(
            prev, cand, residual, prev_residual=0.0, good_enough=1e-6)
        assert theta == 1.0
        assert not flag
        assert len(calls) == 1


class TestSteps:
    @pytest.mark.parametrize("algorithm", [1, 2])
    def test_uniform_neutral_state_is_fixed_point(self, algorithm):
        sc = uniform_scenario(algorithm)
        mesh = sc.make_mesh()
        st = build_sym_stencils(mesh)
        p0, n0 = sc.initial_fields(mesh)
        asm = Assemblies(mesh, st, sc.bc, entropy_functions(0.5))
        state = State(p0, n0, asm.poisson.solve(p0 - n0), 0.0)
        step = picard_step_alg1 if algorithm == 1 else picard_step_alg2
        new, iters, hist = step(state, sc.config, sc.bc, asm)
        assert iters == 1
        assert np.abs(new.p - 1.0).max() < 1e-12
        assert np.abs(new.n - 1.0).max() < 1e-12
        assert np.abs(new.phi).max() < 1e-12

    @pytest.mark.parametrize("algorithm", [1, 2])
    def test_smooth_first_step_converges(self, algorithm):
        sc = smooth_scenario(algorithm)
        mesh = sc.make_mesh()
        st = build_sym_stencils(mesh)
        p0, n0 = sc.initial_fields(mesh)
        from pnpfem.solver import epsilon_for_scenario
        asm = Assemblies(mesh, st, sc.bc,
                         entropy_functions(epsilon_for_scenario(p0, n0, sc.bc)))
        state = State(p0, n0, asm.poisson.solve(p0 - n0), 0.0)
        step = picard_step_alg1 if algorithm == 1 else picard_step_alg2
        new, iters, hist = step(state, sc.config, sc.bc, asm)
        assert hist[-1] <= 1e-6

    @pytest.mark.parametrize("algorithm", [1, 2])
    def test_mass_preserved_by_one_step(self, algorithm):
        sc = smooth_scenario(algorithm)
        mesh = sc.make_mesh()
        st = build_sym_stencils(mesh)
        p0, n0 = sc.initial_fields(mesh)
        from pnpfem.solver import epsilon_for_scenario
        asm = Assemblies(mesh, st, sc.bc,
                         entropy_functions(epsilon_for_scenario(p0, n0, sc.bc)))
        state = State(p0, n0, asm.poisson.solve(p0 - n0), 0.0)
        step = picard_step_alg1 if algorithm == 1 else picard_step_alg2
        new, _, _ = step(state, sc.config, sc.bc, asm)
        assert asm.d @ new.p == pytest.approx(asm.d @ p0, rel=1e-11)
        assert asm.d @ new.n == pytest.approx(asm.d @ n0, rel=1e-11)

    def test_converged_residual_reproducible_from_scratch(self):
        sc = smooth_scenario(1)
        mesh = sc.make_mesh()
        st = build_sym_stencils(mesh)
        p0, n0 = sc.initial_fields(mesh)
        asm = Assemblies(mesh, st, sc.bc, entropy_functions(1e-8))
        state = State(p0, n0, asm.poisson.solve(p0 - n0), 0.0)
        new, iters, hist = picard_step_alg1(state, sc.config, sc.bc, asm)
        from pnpfem.solver import _StepContext, _stack
        ctx = _StepContext(state, sc.config, asm)
        res = ctx.residual_norm(_stack(new.p, new.n))
        assert res == pytest.approx(hist[-1], abs=1e-12)

    def test_alg2_single_step_entropy_decreases_on_acute_mesh(self, rng):
        from pnpfem import build_equilateral_strip, check_acuteness, entropy_Eh
        mesh = build_equilateral_strip(8, 8, side=0.125)
        st = build_sym_stencils(mesh)
        cx, cy = mesh.nodes.mean(axis=0)
        p0 = 2.0 + 1.5 * np.exp(-40 * ((mesh.nodes[:, 0] - cx - 0.2) ** 2
                                       + (mesh.nodes[:, 1] - cy) ** 2))
        n0 = 2.0 + 1.5 * np.exp(-40 * ((mesh.nodes[:, 0] - cx + 0.2) ** 2
                                       + (mesh.nodes[:, 1] - cy) ** 2))
        bc = BoundarySpec()
        fns = entropy_functions(1.0)
        asm = Assemblies(mesh, st, bc, fns)
        assert check_acuteness(mesh, asm.stiffness).is_acute
        state = State(p0, n0, asm.poisson.solve(p0 - n0), 0.0)
        config = SolverConfig(algorithm=2, k=1e-3, T=1e-3)
        new, _, _ = picard_step_alg2(state, config, bc, asm)
        e0 = entropy_Eh(state.p, state.n, state.phi, asm.d, asm.stiffness, fns)
        e1 = entropy_Eh(new.p, new.n, new.phi, asm.d, asm.stiffness, fns)
        assert e1 <= e0 + 1e-8
        lo = min(p0.min(), n0.min())
        hi = max(p0.max(), n0.max())
        assert new.p.min() >= lo - 1e-10 and new.p.max() <= hi + 1e-10
        assert new.n.min() >= lo - 1e-10 and new.n.max() <= hi + 1e-10

    def test_unreachable_tolerance_raises_step_error(self):
        sc = smooth_scenario(1)
        sc.config.picard_residual_tol = 1e-300
        sc.config.picard_increment_tol = 1e-300
        sc.config.picard_max_iters = 3
        sc.config.stagnation_window = 0
        mesh = sc.make_mesh()
        st = build_sym_stencils(mesh)
        p0, n0 = sc.initial_fields(mesh)
        asm = Assemblies(mesh, st, sc.bc, entropy_functions(1e-8))
        state = State(p0, n0, asm.poisson.solve(p0 - n0), 0.0)
        with pytest.raises(StepError) as err:
            picard_step_alg1(state, sc.config, sc.bc, asm)
        assert len(err.value.residual_history) == 4


class TestRun:
    def test_zero_steps_returns_initial_report(self):
        sc = uniform_scenario(1, k=0.1, T=0.05)
        result = run(sc)
        assert len(result.reports) == 1
        assert result.reports[0].t == 0.0
        assert result.state.t == 0.0

    def test_report_count_matches_steps(self):
        sc = uniform_scenario(1, k=0.01, T=0.05)
        result = run(sc)
        assert len(result.reports) == 5
        assert result.reports[-1].t == pytest.approx(0.05)
        assert len(result.all_reports()) == 6

    @pytest.mark.parametrize("algorithm", [1, 2])
    def test_stationarity_of_neutral_state(self, algorithm):
        sc = uniform_scenario(algorithm, k=1e-2, T=0.5)  # 50 steps
        result = run(sc)
        assert len(result.reports) == 50
        assert np.abs(result.state.p - 1.0).max() < 1e-10
        assert np.abs(result.state.n - 1.0).max() < 1e-10
        assert result.flags_ok()

    def test_smallness_warning_emitted(self):
        sc = smooth_scenario(1, k=0.5, T=0.5, n=8)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            run(sc)
        assert any("not small" in str(w.message) for w in caught)

    def test_step_error_carries_partial_result(self):
        sc = smooth_scenario(1, k=1e-3, T=3e-3)
        sc.config.picard_residual_tol = 1e-300
        sc.config.picard_increment_tol = 1e-300
        sc.config.picard_max_iters = 2
        sc.config.stagnation_window = 0
        with pytest.raises(StepError) as err:
            run(sc)
        assert hasattr(err.value, "partial")
        assert err.value.partial.reports == []

    def test_on_step_callback_sees_every_state(self):
        seen = []
        sc = uniform_scenario(2, k=0.01, T=0.03)
        run(sc, on_step=lambda m, s: seen.append((m, s.t)))
        assert [m for m, _ in seen] == [0, 1, 2, 3]

    def test_state_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            State(np.array([1.0, np.nan]), np.ones(2), np.zeros(2), 0.0)


class TestRunResultFlags:
    def test_in_force_violation_detected(self):
        sc = uniform_scenario(1, k=0.01, T=0.02)
        result = run(sc)
        assert result.flags_ok()
        # a violated in-force flag trips the check; out-of-force ones do not
        result.reports[-1].dmp_ok = 0
        assert not result.flags_ok()
        result.in_force["dmp_ok"] = False
        assert result.flags_ok()

    def test_epsilon_policy(self):
        from pnpfem import epsilon_for_scenario
        p0 = np.full(4, 1.0)
        n0 = np.full(4, 2.0)
        assert epsilon_for_scenario(p0, n0, BoundarySpec()) == 0.5
        driven = BoundarySpec(phi_dirichlet={BOTTOM: -1.0})
        assert epsilon_for_scenario(p0, n0, driven) == 1e-8
        assert epsilon_for_scenario(np.zeros(4), n0, BoundarySpec()) == 1e-8


class TestConfigValidation:
    def test_rejects_bad_algorithm(self):
        with pytest.raises(ValueError):
            SolverConfig(algorithm=3)

    def test_rejects_bad_timestep(self):
        with pytest.raises(ValueError):
            SolverConfig(k=0.0)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            SolverConfig(picard_residual_tol=-1.0)
