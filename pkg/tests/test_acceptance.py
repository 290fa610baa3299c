"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines.  Criterion 5's certificate clause is implemented exactly as stated
and is expected to fail; the geometric analysis behind that is recorded in
the project decision notes, and the honest classifier behavior (witness
absent, verdict Indeterminate) is covered by passing assertions here and in
the unit suites.
"""

import json

import numpy as np
import pytest

from linkctl.chains import ChainKind, ChainSpec, chain_work_image, is_aligned
from linkctl.classify import Verdict, classify_configuration, platform_conditions
from linkctl.cli import main
from linkctl.decomp import find_nontransversive_witness
from linkctl.model import (
    Configuration,
    build_linkage,
    constraint_jacobian,
    constraint_residual,
)
from linkctl.numeric import (
    local_branch_count,
    numerical_rank,
    reduced_work_data,
    sample_cspace,
    tangent_frame,
    trace_curve,
)
from linkctl.classify import verify_platform_singularity
from linkctl.chains import aligned_morse_index, workspace_interval
from linkctl.demos import build_demo

from conftest import (
    aligned_closed_chain,
    egsing_linkage,
    four_bar,
    four_bar_node,
    random_linkage,
    random_open_chain,
    reach_oracle,
)


def _report(criterion: str, ok: bool) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}")


def _fd_jacobian(linkage, config):
    flat = config.flat
    h = 1e-6 * (1.0 + np.max(np.abs(flat)))
    from linkctl.model import squared_length_map

    cols = []
    for j in range(flat.size):
        e = np.zeros_like(flat)
        e[j] = h
        fp = squared_length_map(linkage, Configuration.from_flat(flat + e, config.dim))
        fm = squared_length_map(linkage, Configuration.from_flat(flat - e, config.dim))
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=1)


def test_criterion_1_jacobian_oracle():
    rng = np.random.default_rng(101)
    for _ in range(200):
        linkage, config = random_linkage(rng, max_vertices=8)
        jac = constraint_jacobian(linkage, config)
        fd = _fd_jacobian(linkage, config)
        rel = np.linalg.norm(jac - fd) / max(np.linalg.norm(jac), 1e-12)
        assert rel < 1e-6
    _report("1 jacobian-vs-fd", True)


def test_criterion_2_work_image_dichotomy():
    rng = np.random.default_rng(102)
    n_seen = 0
    n_aligned = 0
    while n_seen < 500:
        k = int(rng.integers(1, 7))
        d = int(rng.choice([2, 3]))
        if rng.random() < 0.3:
            # constructed aligned configuration with a random sign pattern
            lengths = rng.uniform(0.5, 2.0, k)
            signs = rng.choice([-1.0, 1.0], k)
            w = rng.normal(size=d)
            w /= np.linalg.norm(w)
            pts = np.zeros((k + 1, d))
            for i in range(k):
                pts[i + 1] = pts[i] + signs[i] * lengths[i] * w
        else:
            pts = random_open_chain(rng, k, d)
        lengths = tuple(np.linalg.norm(np.diff(pts, axis=0), axis=1))
        spec = ChainSpec(ChainKind.OPEN, lengths, d)
        image = chain_work_image(spec, pts)
        w_dir = is_aligned(pts)
        if w_dir is None:
            assert k >= 2
            assert image.dim == d
        else:
            n_aligned += 1
            assert image.dim == d - 1
            assert np.max(np.abs(image.vectors @ w_dir)) < 1e-8
        n_seen += 1
    assert n_aligned >= 50
    _report("2 work-image-dichotomy", True)


def test_criterion_3_morse_index_oracle():
    rng = np.random.default_rng(103)
    agreements = 0
    for trial in range(100):
        d = 2 if trial % 3 else 3
        spec, pts, _ = aligned_closed_chain(rng, d=d)
        combinatorial = aligned_morse_index(spec, pts)
        open_spec = ChainSpec(ChainKind.OPEN, spec.lengths[:-1], d)
        data = reduced_work_data(open_spec.to_linkage(), Configuration(pts))
        eigs = np.linalg.eigvalsh(data.hessian)
        threshold = 1e-6 * max(np.max(np.abs(eigs)), 1e-12)
        negatives = int(np.sum(eigs < -threshold))
        assert combinatorial == negatives, (spec.lengths, eigs)
        agreements += 1
    assert agreements == 100
    _report("3 morse-index-vs-fd-hessian", True)


def test_criterion_4_four_bar_node():
    linkage = four_bar()
    node = four_bar_node()
    assert numerical_rank(constraint_jacobian(linkage, node)) == 3
    report = classify_configuration(linkage, node)
    assert report.verdict is Verdict.GENERIC_SINGULAR
    assert report.witness.signature == (1, 1)
    for radius in (1e-2, 5e-3):
        branches = local_branch_count(linkage, node, radius=radius, n_samples=48, seed=0)
        assert branches.branch_count == 4
        assert branches.stable
    _report("4 four-bar-node", True)


def test_criterion_5a_rank_deficient():
    linkage, config = egsing_linkage()
    assert numerical_rank(constraint_jacobian(linkage, config)) < linkage.k
    _report("5a smoothing-example-rank-drop", True)


def test_criterion_5b_witness_absent():
    linkage, config = egsing_linkage()
    assert find_nontransversive_witness(linkage, config, depth_limit=4) is None
    _report("5b smoothing-example-witness-absent", True)


def test_criterion_5c_smooth_via_five_chain_certificate():
    # As specified: the verdict should be Smooth via a certificate whose base
    # is the closed 5-chain on vertices {1,2,3,4,5}.  The required stage is
    # not transverse at this configuration (both endpoint work images are the
    # vertical line), so this criterion cannot pass; see decision notes.
    linkage, config = egsing_linkage()
    report = classify_configuration(linkage, config, depth_limit=5)
    ok = (
        report.verdict is Verdict.SMOOTH
        and report.certificate is not None
        and set(report.certificate.base_vertices) == {1, 2, 3, 4, 5}
    )
    _report("5c smoothing-example-certificate", ok)
    assert report.verdict is Verdict.SMOOTH
    assert report.certificate is not None
    assert set(report.certificate.base_vertices) == {1, 2, 3, 4, 5}


def test_criterion_6_platform_conditions():
    for name in ("tri-platform-a", "tri-platform-b"):
        linkage_doc, config_doc = build_demo(name)
        linkage = build_linkage(linkage_doc)
        config = Configuration(config_doc["points"])
        report = verify_platform_singularity(linkage, config)
        assert report.verdict is Verdict.GENERIC_SINGULAR
        full = classify_configuration(linkage, config)
        assert full.verdict is Verdict.GENERIC_SINGULAR
        if name == "tri-platform-b":
            assert report.witness.verdict.gradient_norm < 1e-6

    linkage_doc, _ = build_demo("tri-platform-a")
    linkage = build_linkage(linkage_doc)
    false_positives = 0
    smooth_poses = 0
    seed = 0
    while smooth_poses < 1000:
        for pose in sample_cspace(linkage, 200, seed=seed):
            if numerical_rank(constraint_jacobian(linkage, pose)) != linkage.k:
                continue
            smooth_poses += 1
            if platform_conditions(linkage, pose) is not None:
                false_positives += 1
            if smooth_poses >= 1000:
                break
        seed += 1
    assert false_positives == 0
    _report("6 platform-conditions", True)


def test_criterion_7_workspace_intervals():
    assert workspace_interval((2, 1)) == (1.0, 3.0)
    assert workspace_interval((1, 1, 1)) == (0.0, 3.0)
    rng = np.random.default_rng(107)
    for case in range(50):
        k = int(rng.integers(1, 7))
        lengths = rng.uniform(0.3, 2.5, k)
        m, big = workspace_interval(lengths)
        lo, hi, _ = reach_oracle(lengths, d=2, n_samples=20000, seed=case)
        assert m - 1e-2 <= lo
        assert hi <= big + 1e-12
    _report("7 workspace-intervals", True)


def test_criterion_8_continuation():
    regular = four_bar((2.0, 1.2, 1.7, 0.9))
    start = sample_cspace(regular, 1, seed=11)[0]
    trace = trace_curve(regular, start, step=0.05, max_steps=1500)
    assert trace.closed and trace.stop_reason == "loop_closed"
    worst = max(np.max(np.abs(constraint_residual(regular, p))) for p in trace.points)
    assert worst < 1e-9
    flats = np.array([p.flat for p in trace.points])
    secants = np.diff(flats, axis=0)
    assert np.all(np.einsum("ij,ij->i", secants[:-1], secants[1:]) > 0)

    singular = four_bar()
    from linkctl.numeric import Gauge, _gauge_fix, project_to_cspace

    node = _gauge_fix(singular, four_bar_node())
    frame = tangent_frame(singular, node, Gauge.REDUCED)
    start_flat = node.flat + 5e-4 * frame.basis[0]
    near = project_to_cspace(
        singular, Configuration.from_flat(start_flat, 2), tol=1e-12, preserve_pointed=False
    )
    toward_node = node.flat - near.flat
    result = trace_curve(singular, near, step=1e-4, max_steps=60, direction=toward_node)
    assert result.stop_reason in ("tangent_jump", "stalled_at_singularity")
    assert np.linalg.norm(result.points[-1].flat - node.flat) < 1e-3
    _report("8 continuation", True)


def test_criterion_9_determinism(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    for name in ("four-bar-singular",):
        linkage_doc, config_doc = build_demo(name)
        (tmp_path / "l.json").write_text(json.dumps(linkage_doc))
        (tmp_path / "c.json").write_text(json.dumps(config_doc))

    def run(*argv):
        code = main(list(argv))
        return code, capsys.readouterr().out.encode()

    pairs = [
        ("analyze", "l.json", "c.json"),
        ("sample", "l.json", "-n", "8", "--seed", "5"),
        ("branches", "l.json", "c.json", "--radius", "0.01", "--seed", "2"),
    ]
    for argv in pairs:
        code1, out1 = run(*argv)
        code2, out2 = run(*argv)
        assert code1 == code2
        assert out1 == out2
    _report("9 cli-determinism", True)
