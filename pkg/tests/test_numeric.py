import numpy as np
import pytest

from linkctl.chains import ChainKind, ChainSpec, is_aligned
from linkctl.errors import (
    CoincidentEndpoints,
    NoConvergence,
    NoFeasiblePoint,
    NotACurve,
    OffConstraint,
)
from linkctl.model import (
    Configuration,
    Linkage,
    MechanismType,
    constraint_jacobian,
    constraint_residual,
)
from linkctl.numeric import (
    Gauge,
    fd_gradient,
    fd_hessian,
    local_branch_count,
    numerical_rank,
    project_to_cspace,
    reduced_work_data,
    sample_cspace,
    tangent_frame,
    trace_curve,
    work_image,
)

from conftest import four_bar, four_bar_node, random_open_chain, triangle


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(3)) == 3

    def test_zero(self):
        assert numerical_rank(np.zeros((3, 3))) == 0

    def test_four_bar_node(self):
        assert numerical_rank(constraint_jacobian(four_bar(), four_bar_node())) == 3

    def test_relative_threshold(self):
        m = np.diag([1.0, 1e-9, 1e-13])
        assert numerical_rank(m, tol_rank=1e-8) == 1
        assert numerical_rank(m, tol_rank=1e-10) == 2


class TestProjection:
    def test_on_constraint_unchanged(self):
        linkage = triangle()
        v = Configuration([(0, 0), (3, 0), (3, 4)])
        out = project_to_cspace(linkage, v)
        assert out is v

    def test_radial_projection_single_edge(self):
        linkage = Linkage(MechanismType(2, ((0, 1),)), (5.0,), 2)
        out = project_to_cspace(linkage, Configuration([(0, 0), (6, 0)]))
        assert out.points[1] == pytest.approx([5.0, 0.0])
        assert out.points[0] == pytest.approx([0.0, 0.0])

    def test_triangle_from_random_guess(self):
        linkage = triangle()
        rng = np.random.default_rng(31)
        out = project_to_cspace(linkage, Configuration(rng.uniform(-4, 4, (3, 2))))
        assert np.max(np.abs(constraint_residual(linkage, out))) < 1e-10
        sides = sorted(
            np.linalg.norm(out.points[u] - out.points[v]) for u, v in linkage.graph.edges
        )
        assert sides == pytest.approx([3.0, 4.0, 5.0])

    def test_infeasible_raises(self):
        linkage = triangle((1.0, 1.0, 5.0))
        with pytest.raises(NoConvergence):
            project_to_cspace(linkage, Configuration([(0, 0), (1, 0), (0, 1)]))


class TestSampling:
    def test_rigid_triangle_congruent(self):
        linkage = triangle()
        samples = sample_cspace(linkage, 40, seed=1)
        for v in samples:
            sides = sorted(
                np.linalg.norm(v.points[u] - v.points[v_]) for u, v_ in linkage.graph.edges
            )
            assert sides == pytest.approx([3.0, 4.0, 5.0], abs=1e-8)

    def test_infeasible_linkage(self):
        with pytest.raises(NoFeasiblePoint):
            sample_cspace(triangle((1.0, 1.0, 5.0)), 10, seed=0)

    def test_determinism(self):
        linkage = four_bar()
        a = sample_cspace(linkage, 10, seed=42)
        b = sample_cspace(linkage, 10, seed=42)
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert np.array_equal(x.points, y.points)


class TestTangentFrame:
    def test_rigid_triangle_zero_dimensional(self):
        linkage = triangle()
        v = Configuration([(0, 0), (3, 0), (3, 4)])
        assert tangent_frame(linkage, v, Gauge.REDUCED).dim == 0

    def test_four_bar_generic_one_dimensional(self):
        linkage = four_bar()
        v = sample_cspace(linkage, 1, seed=5)[0]
        assert tangent_frame(linkage, v, Gauge.REDUCED).dim == 1

    def test_four_bar_node_two_dimensional(self):
        assert tangent_frame(four_bar(), four_bar_node(), Gauge.REDUCED).dim == 2

    def test_gauge_hierarchy(self):
        linkage = four_bar()
        v = sample_cspace(linkage, 1, seed=5)[0]
        full = tangent_frame(linkage, v, Gauge.FULL).dim
        pointed = tangent_frame(linkage, v, Gauge.POINTED).dim
        reduced = tangent_frame(linkage, v, Gauge.REDUCED).dim
        assert full == pointed + 2 == reduced + 3

    def test_basis_in_null_space(self):
        linkage = four_bar()
        frame = tangent_frame(linkage, four_bar_node(), Gauge.REDUCED)
        jac = constraint_jacobian(linkage, four_bar_node())
        gram = frame.basis @ frame.basis.T
        assert np.allclose(gram, np.eye(frame.dim), atol=1e-10)
        assert np.max(np.abs(jac @ frame.basis.T)) < 1e-8 * np.linalg.norm(jac)

    def test_off_constraint_rejected(self):
        with pytest.raises(OffConstraint):
            tangent_frame(four_bar(), Configuration([(0, 0), (1, 1), (2, 2), (3, 3)]))


class TestWorkDifferentialRankLaw:
    def test_rank_is_d_or_d_minus_one(self):
        # the full work differential (pointed frame, rotations included)
        rng = np.random.default_rng(33)
        for _ in range(40):
            k = int(rng.integers(1, 7))
            d = int(rng.choice([2, 3]))
            pts = random_open_chain(rng, k, d)
            lengths = tuple(np.linalg.norm(np.diff(pts, axis=0), axis=1))
            linkage = ChainSpec(ChainKind.OPEN, lengths, d).to_linkage()
            img = work_image(linkage, Configuration(pts), 0, k)
            assert img.dim in (d - 1, d)
            if k >= 2 and is_aligned(pts) is None:
                assert img.dim == d

    def test_fd_cross_check_of_work_differential(self):
        rng = np.random.default_rng(34)
        for _ in range(10):
            k = int(rng.integers(2, 6))
            pts = random_open_chain(rng, k, 2)
            lengths = tuple(np.linalg.norm(np.diff(pts, axis=0), axis=1))
            linkage = ChainSpec(ChainKind.OPEN, lengths, 2).to_linkage()
            cfg = Configuration(pts)
            frame = tangent_frame(linkage, cfg, Gauge.POINTED)
            analytic = frame.basis.reshape(frame.dim, k + 1, 2)[:, k, :] - frame.basis.reshape(
                frame.dim, k + 1, 2
            )[:, 0, :]
            for comp in range(2):
                def f(c, _comp=comp):
                    return float(c.points[k, _comp] - c.points[0, _comp])

                fd = fd_gradient(linkage, f, frame)
                assert np.linalg.norm(fd - analytic[:, comp]) / max(
                    np.linalg.norm(analytic[:, comp]), 1e-9
                ) < 1e-6


class TestFiniteDifferences:
    def test_constant_function(self):
        linkage = four_bar()
        v = sample_cspace(linkage, 1, seed=5)[0]
        frame = tangent_frame(linkage, v, Gauge.REDUCED)
        grad = fd_gradient(linkage, lambda c: 7.5, frame)
        hess = fd_hessian(linkage, lambda c: 7.5, frame)
        assert np.max(np.abs(grad)) < 1e-10
        assert np.max(np.abs(hess)) < 1e-6

    def test_single_link_distance_constant(self):
        linkage = ChainSpec(ChainKind.OPEN, (1.5,), 2).to_linkage()
        v = Configuration([(0, 0), (1.5, 0)])
        frame = tangent_frame(linkage, v, Gauge.REDUCED)

        def f(c):
            return float(np.linalg.norm(c.points[1] - c.points[0]))

        grad = fd_gradient(linkage, f, frame)
        assert np.max(np.abs(grad)) < 1e-8 if grad.size else True


class TestReducedWorkData:
    def test_nonzero_gradient_off_alignment(self):
        pts = np.array([[0.0, 0], [2, 0], [2, 1]])
        linkage = ChainSpec(ChainKind.OPEN, (2.0, 1.0), 2).to_linkage()
        data = reduced_work_data(linkage, Configuration(pts))
        assert np.linalg.norm(data.gradient) > 1e-3

    def test_zero_gradient_when_aligned(self):
        pts = np.array([[0.0, 0], [2, 0], [3, 0]])
        linkage = ChainSpec(ChainKind.OPEN, (2.0, 1.0), 2).to_linkage()
        data = reduced_work_data(linkage, Configuration(pts))
        assert np.linalg.norm(data.gradient) < 1e-6

    def test_coincident_endpoints(self):
        pts = np.array([[0.0, 0], [1, 0], [0, 0]])
        linkage = ChainSpec(ChainKind.OPEN, (1.0, 1.0), 2).to_linkage()
        with pytest.raises(CoincidentEndpoints):
            reduced_work_data(linkage, Configuration(pts))

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(36)
        for _ in range(8):
            pts = random_open_chain(rng, 4, 2)
            lengths = tuple(np.linalg.norm(np.diff(pts, axis=0), axis=1))
            linkage = ChainSpec(ChainKind.OPEN, lengths, 2).to_linkage()
            cfg = Configuration(pts)
            data = reduced_work_data(linkage, cfg)

            def f(c):
                return float(np.linalg.norm(c.points[-1] - c.points[0]))

            fd = fd_gradient(linkage, f, data.frame)
            assert np.linalg.norm(fd - data.gradient) < 1e-6 * (1 + np.linalg.norm(fd))


class TestTraceCurve:
    def test_regular_four_bar_closes(self):
        linkage = four_bar((2.0, 1.2, 1.7, 0.9))
        start = sample_cspace(linkage, 1, seed=11)[0]
        result = trace_curve(linkage, start, step=0.05, max_steps=1500)
        assert result.closed
        assert result.stop_reason == "loop_closed"
        worst = max(np.max(np.abs(constraint_residual(linkage, p))) for p in result.points)
        assert worst < 1e-9
        flats = np.array([p.flat for p in result.points])
        secants = np.diff(flats, axis=0)
        dots = np.einsum("ij,ij->i", secants[:-1], secants[1:])
        assert np.all(dots > 0)

    def test_not_a_curve(self):
        linkage = triangle()
        v = project_to_cspace(linkage, Configuration([(0, 0), (3, 0), (3, 4)]))
        with pytest.raises(NotACurve):
            trace_curve(linkage, v)

    def test_stops_near_singular_node(self):
        linkage = four_bar()
        node = four_bar_node()
        from linkctl.numeric import _gauge_fix

        fixed = _gauge_fix(linkage, node)
        frame = tangent_frame(linkage, fixed, Gauge.REDUCED)
        start_flat = fixed.flat + 5e-4 * frame.basis[0]
        start = project_to_cspace(
            linkage, Configuration.from_flat(start_flat, 2), tol=1e-12, preserve_pointed=False
        )
        toward = fixed.flat - start.flat
        result = trace_curve(linkage, start, step=1e-4, max_steps=60, direction=toward)
        assert result.stop_reason in ("tangent_jump", "stalled_at_singularity")
        last = result.points[-1]
        assert np.linalg.norm(last.flat - fixed.flat) < 1e-3


class TestLocalBranchCount:
    def test_smooth_point_two_branches(self):
        linkage = four_bar((2.0, 1.2, 1.7, 0.9))
        v = sample_cspace(linkage, 1, seed=2)[0]
        report = local_branch_count(linkage, v, radius=0.01, n_samples=40, seed=0)
        assert report.branch_count == 2
        assert report.stable

    def test_four_bar_node_four_branches(self):
        report = local_branch_count(four_bar(), four_bar_node(), radius=0.01, n_samples=48, seed=0)
        assert report.branch_count == 4
        assert report.stable
        assert sum(report.cluster_sizes) == report.sample_count

    def test_rigid_triangle_isolated(self):
        linkage = triangle()
        v = project_to_cspace(linkage, Configuration([(0, 0), (3, 0), (3, 4)]))
        report = local_branch_count(linkage, v, radius=0.01, n_samples=16, seed=0)
        assert report.branch_count == 0
        assert report.sample_count == 0

    def test_determinism(self):
        a = local_branch_count(four_bar(), four_bar_node(), radius=0.01, seed=3)
        b = local_branch_count(four_bar(), four_bar_node(), radius=0.01, seed=3)
        assert a == b
